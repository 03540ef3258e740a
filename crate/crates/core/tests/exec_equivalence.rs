//! Parallel and sequential execution must agree bit for bit.

use cmg_core::catalog::{self, Bump};
use cmg_core::germs::{defect_sup, model_germ, Model, Neighborhood};
use cmg_core::probes::{osc_k_with, schur_scan, OscBudget, SchurRegion};
use cmg_core::{ChartPoint, Exec};

#[test]
fn defect_sup_is_policy_independent() {
    let (m, f) = model_germ(Model::Sphere { c: 1.0 }, 3).unwrap();
    let m = catalog::conformal_perturbation(&m, Bump::Gaussian, 0.1).unwrap();
    let points = Neighborhood::for_chart(&m).points(f.base());
    let a = defect_sup(&m, &f, &points, Exec::Parallel);
    let b = defect_sup(&m, &f, &points, Exec::Sequential);
    assert_eq!(a.0.to_bits(), b.0.to_bits());
    assert_eq!(a.1, b.1);
}

#[test]
fn osc_and_scan_are_policy_independent() {
    let budget = OscBudget { samples: 2000, starts: 8, ..OscBudget::default() };
    let m = catalog::conformal_perturbation(&catalog::hyperbolic(3, 1.0).unwrap(), Bump::Saddle, 0.2).unwrap();
    let q = ChartPoint::new(vec![0.1, -0.05, 0.2]);
    let a = osc_k_with(&m, &q, &budget, Exec::Parallel).unwrap();
    let b = osc_k_with(&m, &q, &budget, Exec::Sequential).unwrap();
    assert_eq!(format!("{a:?}"), format!("{b:?}"));

    let region = SchurRegion { count: 12, ..SchurRegion::for_chart(&m) };
    let a = schur_scan(&m, &region, 1e-6, &budget, Exec::Parallel).unwrap();
    let b = schur_scan(&m, &region, 1e-6, &budget, Exec::Sequential).unwrap();
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
}

//! Model spaces against oracles computed without jets: arc length by
//! quadrature, Christoffel symbols by finite differences of the metric.

use cmg_core::germs::{model_germ, Model};
use cmg_core::{catalog, geometry, ChartPoint, Plane2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Length of the chart segment from the origin to `q`, by composite Simpson.
fn radial_length(m: &cmg_core::MetricChart, q: &ChartPoint) -> f64 {
    let steps = 400;
    let speed = |t: f64| {
        let x = ChartPoint::new(q.coords.iter().map(|c| c * t).collect());
        let g = m.metric_at(&x).unwrap();
        let v = nalgebra::DVector::from_vec(q.coords.clone());
        (v.dot(&(&g * &v))).sqrt()
    };
    let h = 1.0 / steps as f64;
    let mut acc = speed(0.0) + speed(1.0);
    for i in 1..steps {
        acc += speed(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

#[test]
fn model_germs_are_functions_of_distance() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [2, 3, 4] {
        for model in [Model::Euclidean, Model::Sphere { c: 0.5 }, Model::Sphere { c: 2.0 }, Model::Hyperbolic { c: 1.0 }] {
            let (m, f) = model_germ(model, n).unwrap();
            for _ in 0..10 {
                let q = ChartPoint::new((0..n).map(|_| rng.gen_range(-0.3..0.3) * m.scale()).collect());
                let d = radial_length(&m, &q);
                let want = match model {
                    Model::Euclidean => d * d,
                    Model::Sphere { c } => (c.sqrt() * d).cos(),
                    Model::Hyperbolic { c } => (c.sqrt() * d).cosh(),
                };
                let got = f.value(&q).unwrap();
                assert!((got - want).abs() < 1e-10, "{} at {:?}: {got} vs {want}", m.name(), q.coords);
            }
        }
    }
}

#[test]
fn christoffel_symbols_match_finite_differences() {
    let m = catalog::revolution(catalog::Profile::Cubic(1.0)).unwrap();
    let hy = catalog::hyperbolic(3, 0.7).unwrap();
    for (m, q) in [(m, vec![0.2, -0.1]), (hy, vec![0.1, 0.2, -0.15])] {
        let n = m.dim();
        let q = ChartPoint::new(q);
        let h = 1e-5;
        let dg: Vec<nalgebra::DMatrix<f64>> = (0..n)
            .map(|k| {
                let mut a = q.clone();
                let mut b = q.clone();
                a.coords[k] += h;
                b.coords[k] -= h;
                (m.metric_at(&a).unwrap() - m.metric_at(&b).unwrap()) / (2.0 * h)
            })
            .collect();
        let ginv = m.metric_at(&q).unwrap().try_inverse().unwrap();
        let gamma = geometry::christoffel(&m, &q).unwrap();
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let want: f64 = (0..n)
                        .map(|l| 0.5 * ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]))
                        .sum();
                    assert!((gamma.get(k, i, j) - want).abs() < 1e-8, "{} Γ^{k}_{i}{j}", m.name());
                }
            }
        }
    }
}

#[test]
fn model_sectional_curvature_is_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for (model, k) in [(Model::Sphere { c: 2.0 }, 2.0), (Model::Hyperbolic { c: 0.5 }, -0.5), (Model::Euclidean, 0.0)] {
        let (m, _) = model_germ(model, 4).unwrap();
        for _ in 0..20 {
            let q = ChartPoint::new((0..4).map(|_| rng.gen_range(-0.3..0.3) * m.scale()).collect());
            let u: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let w: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let plane = Plane2::new(&m, q, &u, &w).unwrap();
            assert!((geometry::sectional(&m, &plane).unwrap() - k).abs() < 1e-10);
        }
    }
}

#[test]
fn product_curvature_separates_factors() {
    let s2 = catalog::sphere(2, 1.0).unwrap();
    let line = catalog::euclidean(1).unwrap();
    let m = cmg_core::MetricChart::product(&s2, &line).unwrap();
    let q = ChartPoint::new(vec![0.2, -0.3, 0.5]);
    let horizontal = Plane2::new(&m, q.clone(), &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap();
    let mixed = Plane2::new(&m, q, &[1.0, 0.0, 0.0], &[0.0, 0.0, 1.0]).unwrap();
    assert!((geometry::sectional(&m, &horizontal).unwrap() - 1.0).abs() < 1e-12);
    assert!(geometry::sectional(&m, &mixed).unwrap().abs() < 1e-12);
}

//! The full invariant suite behind `cmg selftest`, as a pass/fail matrix.
//!
//! Every sample is drawn from the deterministic low-discrepancy sequences of
//! the core crate, so repeated runs produce identical reports.

use cmg_core::catalog::{self, Bump, Profile};
use cmg_core::geometry::{self, Plane2};
use cmg_core::germs::{self, model_germ, Model, Neighborhood};
use cmg_core::index;
use cmg_core::probes::{self, OscBudget, SchurRegion, SchurVerdict, SchurWitness, SweepOptions};
use cmg_core::sampling::{self, Recurrence};
use cmg_core::{ChartPoint, GermSpec, MetricChart, TangentVector, TaylorScalar};
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::json;

use crate::commands::{Ctx, Outcome, DEFAULT_GRID};
use crate::report::Check;
use crate::Failure;

type Res<T> = Result<T, cmg_core::Error>;

#[derive(Debug, Serialize)]
struct Row {
    key: &'static str,
    statement: &'static str,
    passed: bool,
    checks: Vec<Check>,
}

struct Section {
    key: &'static str,
    statement: &'static str,
    run: fn(&Ctx) -> Res<Vec<Check>>,
}

const SECTIONS: &[Section] = &[
    Section {
        key: "conformal-germ-definition",
        statement: "model germs are conformal Morse germs; the plane saddle and a flat quadratic on the sphere are not",
        run: germ_definition,
    },
    Section {
        key: "model-germ-identities",
        statement: "Hess f = 2g, -c f g, c f g for the flat, spherical and hyperbolic model germs",
        run: model_identities,
    },
    Section {
        key: "riemann-symmetries",
        statement: "skew symmetries, pair symmetry and the first Bianchi identity",
        run: riemann_symmetries,
    },
    Section {
        key: "ricci-identity",
        statement: "grad^3 f(Z,X) - grad^3 f(X,Z) = R(Z,X) grad f on arbitrary germs",
        run: ricci_identity,
    },
    Section {
        key: "curvature-from-germ",
        statement: "sectional curvature from third derivatives of any germ, and from the conformal factor of a conformal germ",
        run: curvature_from_germ,
    },
    Section {
        key: "index-table",
        statement: "the gradient index at a Morse point is (-1)^k and does not depend on the metric",
        run: index_table,
    },
    Section {
        key: "direction-attainment",
        statement: "every direction is attained by the gradient on small spheres about a Morse point",
        run: direction_attainment,
    },
    Section {
        key: "curvature-critical-at-base",
        statement: "Gaussian curvature is critical at the base of a conformal germ on a surface",
        run: curvature_critical,
    },
    Section {
        key: "two-dim-identities",
        statement: "grad h = -K grad f and grad K parallel to grad f for conformal germs on surfaces",
        run: two_dim,
    },
    Section {
        key: "isotropic-at-base",
        statement: "sectional curvature does not depend on the plane at the base of a conformal germ",
        run: isotropic_at_base,
    },
    Section {
        key: "constant-curvature-scan",
        statement: "plane-independent curvature over a region is constant on the model spaces and fails on products and perturbations",
        run: constant_scan,
    },
    Section {
        key: "sweep-endpoint",
        statement: "an exactly conformal family member has no defect and no curvature oscillation",
        run: sweep_endpoint,
    },
];

pub fn run(ctx: &Ctx) -> Result<Outcome, Failure> {
    let rows: Vec<Row> = SECTIONS
        .iter()
        .map(|s| {
            let checks = (s.run)(ctx).unwrap_or_else(|e| vec![Check::flag(format!("error: {e}"), false)]);
            Row { key: s.key, statement: s.statement, passed: checks.iter().all(|c| c.passed), checks }
        })
        .collect();
    let failed: Vec<&str> = rows.iter().filter(|r| !r.passed).map(|r| r.key).collect();
    let checks = rows.iter().map(|r| Check::flag(r.key, r.passed)).collect();
    Ok(Outcome { results: json!({ "matrix": rows, "failed": failed }), checks, table: None })
}

const CURVATURES: [f64; 3] = [0.5, 1.0, 2.0];

fn models() -> Vec<Model> {
    let mut out = vec![Model::Euclidean];
    for c in CURVATURES {
        out.push(Model::Sphere { c });
        out.push(Model::Hyperbolic { c });
    }
    out
}

fn product(a: Res<MetricChart>, b: Res<MetricChart>) -> Res<MetricChart> {
    MetricChart::product(&a?, &b?)
}

/// Spaces used for the tuple-based identities.
fn curvature_catalog() -> Res<Vec<MetricChart>> {
    Ok(vec![
        catalog::sphere(3, 1.0)?,
        catalog::hyperbolic(3, 0.5)?,
        catalog::hyperbolic(4, 2.0)?,
        catalog::conformal_perturbation(&catalog::sphere(3, 1.0)?, Bump::Gaussian, 0.1)?,
        catalog::revolution(Profile::Sin)?,
        catalog::revolution(Profile::Cubic(1.0))?,
        product(catalog::sphere(2, 1.0), catalog::sphere(2, 1.0))?,
        product(catalog::sphere(2, 1.0), catalog::euclidean(1))?,
    ])
}

/// Surfaces with their conformal germs.
fn surface_germs() -> Res<Vec<(MetricChart, GermSpec)>> {
    let mut out = Vec::new();
    for model in models() {
        out.push(model_germ(model, 2)?);
    }
    for phi in [Profile::Sin, Profile::Sinh, Profile::Id, Profile::Cubic(1.0)] {
        out.push((catalog::revolution(phi)?, catalog::revolution_germ(phi)));
    }
    Ok(out)
}

/// Values in `[-1, 1]` from a low-discrepancy sequence.
fn signed(seq: &Recurrence, i: usize) -> Vec<f64> {
    seq.point(i).into_iter().map(|u| 2.0 * u - 1.0).collect()
}

/// `a·x + xᵀBx + Σ c_i x_i³ + d sin(x_0 + x_{n-1})` with coefficients from `coeffs`.
fn polynomial_germ(n: usize, coeffs: &[f64]) -> GermSpec {
    let coeffs = coeffs.to_vec();
    GermSpec::new("polynomial", ChartPoint::origin(n), move |x: &[TaylorScalar]| {
        let mut it = coeffs.iter().copied().cycle();
        let mut acc = x[0].zero_like();
        for xi in x {
            acc += *xi * it.next().unwrap_or(0.0);
        }
        for i in 0..n {
            for j in i..n {
                acc += x[i] * x[j] * it.next().unwrap_or(0.0);
            }
        }
        for xi in x {
            acc += xi.powi(3) * it.next().unwrap_or(0.0);
        }
        acc + (x[0] + x[n - 1]).sin() * it.next().unwrap_or(0.0)
    })
}

fn max_check(name: &str, values: impl IntoIterator<Item = f64>, tol: f64) -> Check {
    Check::le(name, values.into_iter().fold(0.0, f64::max), tol)
}

fn germ_definition(ctx: &Ctx) -> Res<Vec<Check>> {
    let tols = ctx.tolerances();
    let mut checks = Vec::new();
    for n in [2, 3, 4] {
        for model in models() {
            let (m, f) = model_germ(model, n)?;
            let v = germs::verify_cmg(&m, &f, &Neighborhood::for_chart(&m), &tols, ctx.exec)?;
            checks.push(Check::flag(format!("{} on {}", f.label(), m.name()), v.is_cmg));
        }
    }
    let plane = catalog::euclidean(2)?;
    let v = germs::verify_cmg(&plane, &catalog::saddle_2d(), &Neighborhood::for_chart(&plane), &tols, ctx.exec)?;
    checks.push(Check::flag("saddle rejected (zero conformal factor)", !v.is_cmg));
    let sphere = catalog::sphere(3, 1.0)?;
    let f = catalog::quadratic_germ(3, 0)?;
    let v = germs::verify_cmg(&sphere, &f, &Neighborhood::for_chart(&sphere), &tols, ctx.exec)?;
    checks.push(Check::flag("flat quadratic on the sphere rejected", !v.is_cmg));
    Ok(checks)
}

/// g-operator norm of `g⁻¹A`.
fn operator_norm(g: &DMatrix<f64>, a: &DMatrix<f64>) -> f64 {
    let Some(chol) = g.clone().cholesky() else { return f64::INFINITY };
    let Some(li) = chol.l().try_inverse() else { return f64::INFINITY };
    let w = &li * a * li.transpose();
    let w = (&w + w.transpose()) * 0.5;
    w.symmetric_eigen().eigenvalues.iter().fold(0.0, |acc: f64, l| acc.max(l.abs()))
}

fn model_identities(ctx: &Ctx) -> Res<Vec<Check>> {
    let mut checks = Vec::new();
    for n in [2, 3, 4] {
        for model in models() {
            let (m, f) = model_germ(model, n)?;
            let points = Neighborhood::for_chart(&m).points(f.base());
            let residuals = ctx.exec.map(&points, |q| -> Res<f64> {
                let g = m.metric_at(q)?;
                let hess = geometry::covariant_hessian(&m, &f, q)?;
                let h = match model {
                    Model::Euclidean => 2.0,
                    Model::Sphere { c } => -c * f.value(q)?,
                    Model::Hyperbolic { c } => c * f.value(q)?,
                };
                Ok(operator_norm(&g, &(hess - &g * h)))
            });
            let residuals = residuals.into_iter().collect::<Res<Vec<_>>>()?;
            checks.push(max_check(&format!("{} n={n}", m.name()), residuals, 1e-9 * ctx.ts()));
        }
    }
    Ok(checks)
}

fn riemann_symmetries(ctx: &Ctx) -> Res<Vec<Check>> {
    let mut checks = Vec::new();
    for m in curvature_catalog()? {
        let n = m.dim();
        let pts = sampling::ball(&ChartPoint::origin(n), 0.3 * m.scale(), 10);
        let mut worst = 0.0f64;
        for q in &pts {
            let r = geometry::riemann(&m, q)?;
            let mut size = 0.0f64;
            let mut err = 0.0f64;
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            let v = r.get(i, j, k, l);
                            size = size.max(v.abs());
                            err = err
                                .max((v + r.get(j, i, k, l)).abs())
                                .max((v + r.get(i, j, l, k)).abs())
                                .max((v - r.get(k, l, i, j)).abs())
                                .max((v + r.get(j, k, i, l) + r.get(k, i, j, l)).abs());
                        }
                    }
                }
            }
            worst = worst.max(err / (1.0 + size));
        }
        checks.push(Check::le(m.name().to_string(), worst, 1e-10 * ctx.ts()));
    }
    Ok(checks)
}

/// A deterministic (metric, germ, point, Z, X) tuple.
struct Tuple {
    metric: usize,
    germ: GermSpec,
    point: ChartPoint,
    z: Vec<f64>,
    x: Vec<f64>,
}

fn tuples(catalog: &[MetricChart], count: usize) -> Vec<Tuple> {
    let coeff_seq = Recurrence::new(6);
    (0..count)
        .map(|i| {
            let metric = i % catalog.len();
            let m = &catalog[metric];
            let n = m.dim();
            let coeffs: Vec<f64> = (0..5).flat_map(|j| signed(&coeff_seq, 5 * i + j)).collect();
            let pts = sampling::ball(&ChartPoint::origin(n), 0.3 * m.scale(), i + 1);
            let dirs = sampling::sphere_directions(n, 2 * i + 2);
            Tuple {
                metric,
                germ: polynomial_germ(n, &coeffs),
                point: pts[i].clone(),
                z: dirs[2 * i].clone(),
                x: dirs[2 * i + 1].clone(),
            }
        })
        .collect()
}

fn ricci_identity(ctx: &Ctx) -> Res<Vec<Check>> {
    let cat = curvature_catalog()?;
    let ts = tuples(&cat, 100);
    let residuals = ctx.exec.map(&ts, |t| {
        let m = &cat[t.metric];
        geometry::ricci_identity_residual(
            m,
            &t.germ,
            &t.point,
            &TangentVector::new(t.point.clone(), t.z.clone()),
            &TangentVector::new(t.point.clone(), t.x.clone()),
        )
    });
    let residuals = residuals.into_iter().collect::<Res<Vec<_>>>()?;
    Ok(vec![max_check("max residual over 100 tuples", residuals, 1e-8 * ctx.ts())])
}

fn curvature_from_germ(ctx: &Ctx) -> Res<Vec<Check>> {
    let cat = curvature_catalog()?;
    let ts = tuples(&cat, 50);
    let third = ctx.exec.map(&ts, |t| -> Res<f64> {
        let m = &cat[t.metric];
        let grad = geometry::gradient(m, &t.germ, &t.point)?;
        let sec = geometry::sectional(m, &Plane2::new(m, t.point.clone(), &grad.comps, &t.z)?)?;
        let k = germs::curvature_via_third_derivative(m, &t.germ, &t.point, &TangentVector::new(t.point.clone(), t.z.clone()))?;
        Ok((k - sec).abs())
    });
    let third = third.into_iter().collect::<Res<Vec<_>>>()?;

    // conformal germs: model spaces in n = 2, 3, 4 and the surfaces of revolution
    let mut cases = surface_germs()?;
    for n in [3, 4] {
        for model in models() {
            cases.push(model_germ(model, n)?);
        }
    }
    let mut via = Vec::new();
    let mut spread = Vec::new();
    let mut i = 0;
    while via.len() < 50 {
        let (m, f) = &cases[i % cases.len()];
        let n = m.dim();
        let q = sampling::shells(f.base(), &[0.15 * m.scale()], 50)[i / cases.len() % 50].clone();
        let grad = geometry::gradient(m, f, &q)?;
        let mut values = Vec::new();
        let mut secs = Vec::new();
        for z in sampling::sphere_directions(n, 4) {
            let Ok(plane) = Plane2::new(m, q.clone(), &grad.comps, &z) else { continue };
            let sec = geometry::sectional(m, &plane)?;
            let k = germs::curvature_via_germ(m, f, &q, &TangentVector::new(q.clone(), z))?;
            via.push((k - sec).abs());
            values.push(k);
            secs.push(sec);
        }
        let span = |v: &[f64]| {
            v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min)
        };
        spread.push(span(&values).max(span(&secs)));
        i += 1;
    }
    Ok(vec![
        max_check("third-derivative formula vs sectional (50 arbitrary germs)", third, 1e-7 * ctx.ts()),
        max_check("conformal-factor formula vs sectional (conformal germs)", via, 1e-7 * ctx.ts()),
        max_check("spread over planes containing the gradient", spread, 1e-9 * ctx.ts()),
    ])
}

fn rescalings(n: usize) -> Vec<MetricChart> {
    let seq = Recurrence::new(3);
    (0..5)
        .map(|i| {
            let [a, b, c]: [f64; 3] = signed(&seq, i).try_into().expect("three coefficients");
            let base = catalog::euclidean(n).expect("dimension is valid");
            base.conformally_rescaled(format!("euclidean{n}*rescaling{i}"), move |x: &[TaylorScalar]| {
                let s = x.iter().fold(x[0].zero_like(), |acc, xi| acc + *xi * *xi);
                x[0] * a + s * b + (x[n - 1] * 3.0).sin() * c
            })
        })
        .collect()
}

fn index_table(_ctx: &Ctx) -> Res<Vec<Check>> {
    let mut checks = Vec::new();
    for n in [2, 3] {
        let mut metrics = vec![catalog::euclidean(n)?];
        metrics.extend(rescalings(n));
        for k in 0..=n {
            let f = catalog::quadratic_germ(n, k)?;
            let want = if k % 2 == 0 { 1.0 } else { -1.0 };
            for m in &metrics {
                let got = index::index_of_gradient(m, &f, 0.1)?;
                checks.push(Check::eq(format!("n={n} k={k} on {}", m.name()), got.index as f64, want));
            }
        }
    }
    Ok(checks)
}

fn direction_attainment(ctx: &Ctx) -> Res<Vec<Check>> {
    let mut cases = vec![(catalog::euclidean(2)?, catalog::saddle_2d())];
    for n in [2, 3] {
        for model in [Model::Euclidean, Model::Sphere { c: 1.0 }, Model::Hyperbolic { c: 1.0 }] {
            cases.push(model_germ(model, n)?);
        }
    }
    let mut checks = Vec::new();
    for (m, f) in &cases {
        let p = f.base();
        let dirs = sampling::sphere_directions(m.dim(), 100);
        let angles = ctx.exec.map(&dirs, |d| -> Res<f64> {
            let hits = index::direction_attainment(
                m,
                f,
                &TangentVector::new(p.clone(), d.clone()),
                &[0.1, 0.01, 0.001],
                1e-3 * ctx.ts(),
            )?;
            Ok(hits.iter().map(|h| h.angle).fold(0.0, f64::max))
        });
        let angles = angles.into_iter().collect::<Res<Vec<_>>>()?;
        checks.push(max_check(&format!("{} on {}", f.label(), m.name()), angles, 1e-3 * ctx.ts()));
    }
    Ok(checks)
}

fn curvature_critical(ctx: &Ctx) -> Res<Vec<Check>> {
    let mut checks = Vec::new();
    for (m, f) in surface_germs()? {
        let base = f.base();
        let norm = probes::curvature_gradient(&m, base)?.norm(&m.metric_at(base)?);
        checks.push(Check::le(m.name().to_string(), norm, 1e-6 * ctx.ts()));
    }
    // off the base the gradient is 12r/(1+r²)² on φ = r + r³
    let m = catalog::revolution(Profile::Cubic(1.0))?;
    for r in [0.1f64, 0.3] {
        let q = ChartPoint::new(vec![0.6 * r, 0.8 * r]);
        let norm = probes::curvature_gradient(&m, &q)?.norm(&m.metric_at(&q)?);
        let oracle = 12.0 * r / (1.0 + r * r).powi(2);
        checks.push(Check::le(format!("cubic profile at r={r} vs closed form"), (norm - oracle).abs(), 1e-5 * ctx.ts()));
    }
    Ok(checks)
}

fn two_dim(ctx: &Ctx) -> Res<Vec<Check>> {
    let mut checks = Vec::new();
    for (m, f) in surface_germs()? {
        let pts = sampling::ball(f.base(), 0.3 * m.scale(), 100);
        let res = ctx.exec.map(&pts, |q| match probes::two_dim_identities(&m, &f, q) {
            Ok(r) => Ok(Some(r.factor_gradient.max(r.curvature_transverse))),
            Err(cmg_core::Error::GradientBelowFloor { .. }) => Ok(None),
            Err(e) => Err(e),
        });
        let res = res.into_iter().collect::<Res<Vec<_>>>()?;
        checks.push(max_check(m.name(), res.into_iter().flatten(), 1e-7 * ctx.ts()));
    }
    Ok(checks)
}

fn isotropic_at_base(ctx: &Ctx) -> Res<Vec<Check>> {
    let budget = OscBudget::default();
    let mut checks = Vec::new();
    for n in [3, 4] {
        for model in models() {
            let (m, f) = model_germ(model, n)?;
            let r = probes::osc_k_with(&m, f.base(), &budget, ctx.exec)?;
            checks.push(Check::le(m.name().to_string(), r.osc, 1e-6 * ctx.ts()));
        }
    }
    let s2 = catalog::sphere(2, 1.0)?;
    let m = MetricChart::product(&s2, &s2)?;
    let r = probes::osc_k_with(&m, &ChartPoint::new(vec![0.1, 0.2, 0.1, 0.3]), &budget, ctx.exec)?;
    checks.push(Check::le("product control: |osc - 1|", (r.osc - 1.0).abs(), 1e-6 * ctx.ts()));
    Ok(checks)
}

fn constant_scan(ctx: &Ctx) -> Res<Vec<Check>> {
    let budget = OscBudget::default();
    let tol = 1e-6 * ctx.ts();
    let mut checks = Vec::new();
    let constant = [(catalog::euclidean(3)?, 0.0), (catalog::sphere(3, 1.0)?, 1.0), (catalog::hyperbolic(3, 1.0)?, -1.0)];
    for (m, nominal) in constant {
        let v = probes::schur_scan(&m, &SchurRegion::for_chart(&m), tol, &budget, ctx.exec)?;
        let err = match v {
            SchurVerdict::Constant { c, .. } => (c - nominal).abs(),
            SchurVerdict::NonConstant { .. } => f64::INFINITY,
        };
        checks.push(Check::le(format!("{} constant at {nominal}", m.name()), err, tol));
    }
    let varying = [
        MetricChart::product(&catalog::sphere(2, 1.0)?, &catalog::euclidean(1)?)?,
        catalog::conformal_perturbation(&catalog::sphere(3, 1.0)?, Bump::Gaussian, 0.1)?,
    ];
    for m in varying {
        let v = probes::schur_scan(&m, &SchurRegion::for_chart(&m), tol, &budget, ctx.exec)?;
        let ok = match v {
            SchurVerdict::NonConstant { witness: SchurWitness::Oscillating { report, .. } } => {
                let hi = (geometry::sectional(&m, &report.argmax_plane)? - report.k_max).abs();
                let lo = (geometry::sectional(&m, &report.argmin_plane)? - report.k_min).abs();
                report.osc > tol && hi.max(lo) <= 1e-10
            }
            SchurVerdict::NonConstant { witness: SchurWitness::Varying { k_low, k_high, .. } } => k_high - k_low > tol,
            SchurVerdict::Constant { .. } => false,
        };
        checks.push(Check::flag(format!("{} nonconstant with verified witness", m.name()), ok));
    }
    Ok(checks)
}

fn sweep_endpoint(ctx: &Ctx) -> Res<Vec<Check>> {
    let opts = SweepOptions { tolerances: ctx.tolerances(), budget: OscBudget::default(), exec: ctx.exec };
    let rows = probes::quasiconformal_sweep(
        |eps| {
            let (m, f) = model_germ(Model::Sphere { c: 1.0 }, 3)?;
            Ok((catalog::conformal_perturbation(&m, Bump::Gaussian, eps)?, f))
        },
        &DEFAULT_GRID,
        &opts,
    )?;
    let mut checks = Vec::new();
    for r in rows {
        if r.param == 0.0 {
            checks.push(Check::le("kappa_proxy - 1 at eps=0", r.kappa_proxy - 1.0, 1e-7 * ctx.ts()));
            checks.push(Check::le("osc at eps=0", r.osc, 1e-6 * ctx.ts()));
        } else {
            checks.push(Check::gt(format!("defect at eps={}", r.param), r.kappa_proxy - 1.0, 0.0));
        }
    }
    Ok(checks)
}

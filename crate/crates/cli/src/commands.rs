//! One function per subcommand. Each returns the results, the checks judged
//! against their tolerances, and an optional table for the CSV file.

use cmg_core::geometry::{self, Plane2};
use cmg_core::germs::{self, CmgTolerances, GermSpec, Neighborhood};
use cmg_core::index::{self, GradientField};
use cmg_core::probes::{self, OscBudget, SchurRegion, SchurVerdict, SchurWitness, SweepOptions, KAPPA_PROXY_DEFINITION};
use cmg_core::{catalog, ChartPoint, Exec, MetricChart, TangentVector};
use serde_json::json;

use crate::config::{build_germ, CatalogEntry, Expectation, Resolved};
use crate::report::{Check, Table};
use crate::Failure;

pub struct Ctx {
    pub resolved: Resolved,
    pub exec: Exec,
}

impl Ctx {
    pub fn ts(&self) -> f64 {
        self.resolved.tol_scale
    }

    pub fn tolerances(&self) -> CmgTolerances {
        CmgTolerances::default().scaled(self.ts())
    }

    pub fn budget(&self) -> OscBudget {
        let mut b = OscBudget::default();
        if let Some(s) = self.resolved.samples {
            b.samples = s;
        }
        b
    }
}

pub struct Outcome {
    pub results: serde_json::Value,
    pub checks: Vec<Check>,
    pub table: Option<Table>,
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

fn axis(n: usize, k: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[k] = 1.0;
    e
}

fn check_dim(m: &MetricChart, q: &ChartPoint) -> Result<(), Failure> {
    if q.dim() != m.dim() {
        return Err(Failure::Domain(cmg_core::Error::DimensionMismatch { expected: m.dim(), got: q.dim() }));
    }
    Ok(())
}

pub fn verify_cmg(ctx: &Ctx) -> Result<Outcome, Failure> {
    let inst = ctx.resolved.instance()?;
    let f = inst.require_germ()?;
    let tols = ctx.tolerances();
    let v = germs::verify_cmg(&inst.metric, f, &Neighborhood::for_chart(&inst.metric), &tols, ctx.exec)?;
    let checks = vec![
        Check::le("gradient-vanishes-at-base", v.grad_norm_at_p, tols.grad * f.scale()),
        Check::ge("hessian-nondegenerate", v.hessian_min_abs_eigenvalue, tols.nondeg),
        Check::le("hessian-conformal-on-neighborhood", v.defect_sup, tols.conf),
        Check::ge("conformal-factor-nonzero", v.h_at_p.abs(), tols.h),
        Check::flag("neighborhood-mostly-evaluable", v.reliable),
    ];
    Ok(Outcome {
        results: json!({ "metric": inst.metric.name(), "germ": f.label(), "verdict": v }),
        checks,
        table: None,
    })
}

pub fn curvature(ctx: &Ctx) -> Result<Outcome, Failure> {
    let inst = ctx.resolved.instance()?;
    let (m, f) = (&inst.metric, inst.require_germ()?);
    let n = m.dim();
    let base = f.base().clone();
    let mut shifted = base.coords.clone();
    shifted[0] += 0.1 * m.scale();
    let q = ctx.resolved.point_or(ChartPoint::new(shifted))?;
    check_dim(m, &q)?;
    let ts = ctx.ts();
    let verdict = germs::verify_cmg(m, f, &Neighborhood::for_chart(m), &ctx.tolerances(), ctx.exec)?;
    let grad = geometry::gradient(m, f, &q)?;

    let mut checks = Vec::new();
    let mut planes = Vec::new();
    let mut sectionals = Vec::new();
    for k in 0..n {
        let z = axis(n, k);
        let Ok(plane) = Plane2::new(m, q.clone(), &grad.comps, &z) else { continue };
        let sec = geometry::sectional(m, &plane)?;
        let zv = TangentVector::new(q.clone(), z);
        let third = germs::curvature_via_third_derivative(m, f, &q, &zv)?;
        checks.push(Check::le(format!("third-derivative-formula[z=e{k}]"), (third - sec).abs(), 1e-7 * ts));
        let via = if verdict.is_cmg {
            let v = germs::curvature_via_germ(m, f, &q, &zv)?;
            checks.push(Check::le(format!("conformal-factor-formula[z=e{k}]"), (v - sec).abs(), 1e-7 * ts));
            Some(v)
        } else {
            None
        };
        sectionals.push(sec);
        planes.push(json!({ "z": k, "sectional": sec, "third_derivative_formula": third, "conformal_factor_formula": via }));
    }
    if verdict.is_cmg && sectionals.len() > 1 {
        let spread = sectionals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - sectionals.iter().cloned().fold(f64::INFINITY, f64::min);
        checks.push(Check::le("gradient-planes-share-curvature", spread, 1e-9 * ts));
    }
    let mut surface = serde_json::Value::Null;
    if n == 2 && verdict.is_cmg {
        let g0 = m.metric_at(&base)?;
        let dk0 = probes::curvature_gradient(m, &base)?.norm(&g0);
        let gq = m.metric_at(&q)?;
        let dkq = probes::curvature_gradient(m, &q)?.norm(&gq);
        let id = probes::two_dim_identities(m, f, &q)?;
        checks.push(Check::le("curvature-critical-at-base", dk0, 1e-6 * ts));
        checks.push(Check::le("factor-gradient-identity", id.factor_gradient, 1e-7 * ts));
        checks.push(Check::le("curvature-gradient-along-gradient", id.curvature_transverse, 1e-7 * ts));
        surface = json!({ "curvature_gradient_norm_at_base": dk0, "curvature_gradient_norm_at_point": dkq, "identities": id });
    }
    Ok(Outcome {
        results: json!({
            "metric": m.name(),
            "germ": f.label(),
            "point": q,
            "is_cmg": verdict.is_cmg,
            "planes": planes,
            "surface": surface,
        }),
        checks,
        table: None,
    })
}

pub fn osc(ctx: &Ctx) -> Result<Outcome, Failure> {
    let inst = ctx.resolved.instance()?;
    let m = &inst.metric;
    let q = ctx.resolved.point_or(ChartPoint::origin(m.dim()))?;
    check_dim(m, &q)?;
    let report = probes::osc_k_with(m, &q, &ctx.budget(), ctx.exec)?;
    let tol = 1e-10 * ctx.ts();
    let checks = vec![
        Check::flag("refinement-converged", report.refined),
        Check::le("argmax-plane-reproduces", (geometry::sectional(m, &report.argmax_plane)? - report.k_max).abs(), tol),
        Check::le("argmin-plane-reproduces", (geometry::sectional(m, &report.argmin_plane)? - report.k_min).abs(), tol),
    ];
    let mut header: Vec<String> = (0..m.dim()).map(|i| format!("x{i}")).collect();
    header.extend(["k_max", "k_min", "osc", "refined"].map(String::from));
    let mut row: Vec<String> = q.coords.iter().map(|x| fmt(*x)).collect();
    row.extend([fmt(report.k_max), fmt(report.k_min), fmt(report.osc), report.refined.to_string()]);
    Ok(Outcome {
        results: json!({ "metric": m.name(), "report": report }),
        checks,
        table: Some(Table { header, rows: vec![row] }),
    })
}

pub fn index(ctx: &Ctx) -> Result<Outcome, Failure> {
    let inst = ctx.resolved.instance()?;
    let (m, f) = (&inst.metric, inst.require_germ()?);
    let eps = ctx.resolved.radius.unwrap_or(0.1 * m.scale());
    let result = index::index_of_gradient(m, f, eps)?;
    let hess = geometry::covariant_hessian(m, f, f.base())?;
    let morse = hess.symmetric_eigen().eigenvalues.iter().filter(|l| **l < 0.0).count();
    let expected = if morse % 2 == 0 { 1 } else { -1 };
    let mut checks = vec![Check::eq("index-equals-parity-of-morse-index", result.index as f64, expected as f64)];
    let jac = index::jacobian_sign(&GradientField { metric: m, germ: f }, f.base()).ok();
    if let Some(j) = &jac {
        checks.push(Check::eq("degree-agrees-with-jacobian-sign", result.index as f64, j.index as f64));
    }
    Ok(Outcome {
        results: json!({
            "metric": m.name(),
            "germ": f.label(),
            "index": result,
            "morse_index": morse,
            "jacobian_sign": jac.map(|j| j.index),
        }),
        checks,
        table: None,
    })
}

pub fn scan_schur(ctx: &Ctx) -> Result<Outcome, Failure> {
    let inst = ctx.resolved.instance()?;
    let m = &inst.metric;
    let mut region = SchurRegion::for_chart(m);
    if let Some(c) = ctx.resolved.count {
        region.count = c;
    }
    let tol = 1e-6 * ctx.ts();
    let (verdict, reports) = probes::schur_scan_reports(m, &region, tol, &ctx.budget(), ctx.exec)?;
    let mut checks = Vec::new();
    if let SchurVerdict::NonConstant { witness: SchurWitness::Oscillating { report, .. } } = &verdict {
        let hi = (geometry::sectional(m, &report.argmax_plane)? - report.k_max).abs();
        let lo = (geometry::sectional(m, &report.argmin_plane)? - report.k_min).abs();
        checks.push(Check::le("witness-reproduces-under-sectional", hi.max(lo), 1e-10 * ctx.ts()));
        checks.push(Check::gt("witness-oscillation-exceeds-tolerance", report.osc, tol));
    }
    if let Some(expect) = ctx.resolved.expect {
        let constant = matches!(verdict, SchurVerdict::Constant { .. });
        checks.push(Check::flag(
            format!("verdict-is-{}", if expect == Expectation::Constant { "constant" } else { "nonconstant" }),
            constant == (expect == Expectation::Constant),
        ));
    }
    let mut header = vec!["sample".to_string()];
    header.extend((0..m.dim()).map(|i| format!("x{i}")));
    header.extend(["k_max", "k_min", "osc", "refined"].map(String::from));
    let rows = reports
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = vec![i.to_string()];
            row.extend(r.point.coords.iter().map(|x| fmt(*x)));
            row.extend([fmt(r.k_max), fmt(r.k_min), fmt(r.osc), r.refined.to_string()]);
            row
        })
        .collect();
    Ok(Outcome {
        results: json!({ "metric": m.name(), "region": region, "tolerance": tol, "verdict": verdict }),
        checks,
        table: Some(Table { header, rows }),
    })
}

pub const DEFAULT_GRID: [f64; 4] = [0.0, 0.05, 0.1, 0.2];

pub fn sweep_qc(ctx: &Ctx) -> Result<Outcome, Failure> {
    let entry = ctx
        .resolved
        .space
        .clone()
        .ok_or_else(|| Failure::Parse("no space given (use --space or a config file)".into()))?;
    let (base, bump) = match entry {
        CatalogEntry::ConformalPerturbation { base, u, .. } => (*base, Some(u)),
        other => (other, ctx.resolved.bump.bump()),
    };
    let base_metric = base.build()?;
    let germ: GermSpec = build_germ(&base, base_metric.dim(), ctx.resolved.germ.as_ref())?
        .ok_or_else(|| Failure::Parse("the sweep needs a germ; pass --germ".into()))?;
    let grid = ctx.resolved.grid.clone().unwrap_or_else(|| DEFAULT_GRID.to_vec());
    let opts = SweepOptions { tolerances: ctx.tolerances(), budget: ctx.budget(), exec: ctx.exec };
    let rows = probes::quasiconformal_sweep(
        |eps| {
            let m = match bump {
                Some(b) => catalog::conformal_perturbation(&base_metric, b, eps)?,
                None => base_metric.clone(),
            };
            Ok((m, germ.clone()))
        },
        &grid,
        &opts,
    )?;
    let ts = ctx.ts();
    let mut checks = Vec::new();
    for r in &rows {
        if r.param == 0.0 {
            checks.push(Check::le("endpoint-kappa-proxy-minus-one", r.kappa_proxy - 1.0, 1e-7 * ts));
            checks.push(Check::le("endpoint-oscillation", r.osc, 1e-6 * ts));
        } else if bump.is_some() {
            checks.push(Check::gt(format!("defect-positive[eps={}]", r.param), r.kappa_proxy - 1.0, 0.0));
        }
    }
    let mut table = Table::new(&["param", "kappa_proxy", "k_max", "k_min", "osc", "refined"]);
    table.rows = rows
        .iter()
        .map(|r| vec![fmt(r.param), fmt(r.kappa_proxy), fmt(r.k_max), fmt(r.k_min), fmt(r.osc), r.refined.to_string()])
        .collect();
    Ok(Outcome {
        results: json!({
            "metric": base_metric.name(),
            "germ": germ.label(),
            "bump": bump,
            "kappa_proxy_definition": KAPPA_PROXY_DEFINITION,
            "rows": rows,
        }),
        checks,
        table: Some(table),
    })
}

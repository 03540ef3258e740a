//! Curvature probes: the oscillation of sectional curvature over the planes
//! at a point, the gradient of the Gaussian curvature on surfaces, the
//! surface identities satisfied by conformal germs, a scan for constant
//! curvature over a chart ball, and the conformality-vs-oscillation sweep.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::{self, inner, raise, Connection, GermLocal, MetricChart, Plane2, TangentVector};
use crate::germs::{self, CmgTolerances, GermSpec, Neighborhood, GRADIENT_FLOOR};
use crate::jets::ChartPoint;
use crate::sampling;

/// Work limits for [`osc_k`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscBudget {
    /// low-discrepancy orthonormal pairs sampled before refinement
    pub samples: usize,
    /// local refinements per extremum
    pub starts: usize,
    /// refinement stops once the step falls below this
    pub min_step: f64,
    /// iteration cap per refinement run
    pub max_iterations: usize,
}

impl Default for OscBudget {
    fn default() -> Self {
        Self { samples: 20_000, starts: 32, min_step: 1e-10, max_iterations: 20_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    pub point: ChartPoint,
    pub k_max: f64,
    pub k_min: f64,
    pub osc: f64,
    pub argmax_plane: Plane2,
    pub argmin_plane: Plane2,
    pub samples: usize,
    /// every refinement run converged within the iteration cap
    pub refined: bool,
}

fn pair_cache(n: usize, count: usize) -> Arc<Vec<(Vec<f64>, Vec<f64>)>> {
    type Cache = Mutex<HashMap<(usize, usize), Arc<Vec<(Vec<f64>, Vec<f64>)>>>>;
    static CACHE: OnceLock<Cache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry((n, count))
        .or_insert_with(|| Arc::new(sampling::orthonormal_pairs(n, count)))
        .clone()
}

/// Riemann tensor in a g-orthonormal frame, `T_abcd = R(e_a, e_b, e_c, e_d)`.
struct FrameCurvature {
    n: usize,
    t: Vec<f64>,
    /// columns are the frame vectors in chart components
    frame: DMatrix<f64>,
}

impl FrameCurvature {
    fn new(r: &geometry::RiemannTensor) -> Result<Self> {
        let n = r.dim();
        let chol = r
            .metric()
            .clone()
            .cholesky()
            .ok_or(Error::NotPositiveDefinite { point: vec![], min_eigenvalue: f64::NAN })?;
        // g = L Lᵀ, so the columns of L⁻ᵀ are g-orthonormal
        let linv = chol.l().try_inverse().ok_or(Error::NonFinite("metric frame"))?;
        let frame = linv.transpose();
        let cols: Vec<Vec<f64>> = (0..n).map(|a| frame.column(a).iter().copied().collect()).collect();
        let mut t = vec![0.0; n * n * n * n];
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                for c in 0..n {
                    for d in 0..n {
                        if c == d {
                            continue;
                        }
                        t[((a * n + b) * n + c) * n + d] = r.eval(&cols[a], &cols[b], &cols[c], &cols[d]);
                    }
                }
            }
        }
        Ok(Self { n, t, frame })
    }

    fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let n = self.n;
        self.t[((a * n + b) * n + c) * n + d]
    }

    /// `M_ad = T(e_a, w, w, e_d)`
    fn outer_form(&self, w: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut m = vec![0.0; n * n];
        for a in 0..n {
            for d in 0..n {
                let mut acc = 0.0;
                for b in 0..n {
                    for c in 0..n {
                        acc += self.get(a, b, c, d) * w[b] * w[c];
                    }
                }
                m[a * n + d] = acc;
            }
        }
        m
    }

    /// `K(u, w)` for a Euclidean-orthonormal frame pair.
    fn k(&self, u: &[f64], w: &[f64]) -> f64 {
        quad(self.n, &self.outer_form(w), u)
    }

    fn to_chart(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n).map(|i| (0..n).map(|a| self.frame[(i, a)] * v[a]).sum()).collect()
    }
}

fn quad(n: usize, m: &[f64], u: &[f64]) -> f64 {
    let mut acc = 0.0;
    for a in 0..n {
        for d in 0..n {
            acc += m[a * n + d] * u[a] * u[d];
        }
    }
    acc
}

fn matvec(n: usize, m: &[f64], u: &[f64]) -> Vec<f64> {
    (0..n).map(|a| (0..n).map(|d| m[a * n + d] * u[d]).sum()).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn gram_schmidt(u: &mut [f64], w: &mut [f64]) -> bool {
    let nu = dot(u, u).sqrt();
    u.iter_mut().for_each(|x| *x /= nu);
    let p = dot(u, w);
    w.iter_mut().zip(u.iter()).for_each(|(b, a)| *b -= p * a);
    let nw = dot(w, w).sqrt();
    if !(nw > 1e-12) {
        return false;
    }
    w.iter_mut().for_each(|x| *x /= nw);
    true
}

struct Run {
    u: Vec<f64>,
    w: Vec<f64>,
    k: f64,
    converged: bool,
}

/// Projected ascent (`sign = 1`) or descent (`sign = -1`) of `K` on
/// orthonormal pairs, with step doubling on success and halving on failure.
fn refine(fc: &FrameCurvature, u0: &[f64], w0: &[f64], sign: f64, budget: &OscBudget) -> Run {
    let n = fc.n;
    let (mut u, mut w) = (u0.to_vec(), w0.to_vec());
    let mut k = fc.k(&u, &w);
    let mut step: f64 = 0.1;
    for _ in 0..budget.max_iterations {
        if step < budget.min_step {
            return Run { u, w, k, converged: true };
        }
        // ∂K/∂u = 2 M(w) u and ∂K/∂w = 2 N(u) w, with the in-plane parts removed
        let gu = matvec(n, &fc.outer_form(&w), &u);
        let nu_form = {
            let mut m = vec![0.0; n * n];
            for b in 0..n {
                for c in 0..n {
                    let mut acc = 0.0;
                    for a in 0..n {
                        for d in 0..n {
                            acc += fc.get(a, b, c, d) * u[a] * u[d];
                        }
                    }
                    m[b * n + c] = acc;
                }
            }
            m
        };
        let gw = matvec(n, &nu_form, &w);
        let project = |g: Vec<f64>| -> Vec<f64> {
            let (pu, pw) = (dot(&g, &u), dot(&g, &w));
            (0..n).map(|i| sign * (g[i] - pu * u[i] - pw * w[i])).collect()
        };
        let (du, dw) = (project(gu), project(gw));
        let norm = (dot(&du, &du) + dot(&dw, &dw)).sqrt();
        if !(norm > 1e-300) {
            return Run { u, w, k, converged: true };
        }
        let mut cu: Vec<f64> = (0..n).map(|i| u[i] + step * du[i] / norm).collect();
        let mut cw: Vec<f64> = (0..n).map(|i| w[i] + step * dw[i] / norm).collect();
        if gram_schmidt(&mut cu, &mut cw) {
            let ck = fc.k(&cu, &cw);
            if sign * (ck - k) > 0.0 {
                u = cu;
                w = cw;
                k = ck;
                step = (step * 2.0).min(1.0);
                continue;
            }
        }
        step *= 0.5;
    }
    Run { u, w, k, converged: step < budget.min_step }
}

fn best_seeds(values: &[f64], count: usize, sign: f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| (sign * values[b]).total_cmp(&(sign * values[a])).then(a.cmp(&b)));
    idx.truncate(count);
    idx
}

/// Max and min of the sectional curvature over all 2-planes at `p`.
pub fn osc_k(m: &MetricChart, p: &ChartPoint, budget: &OscBudget) -> Result<CurvatureReport> {
    osc_k_with(m, p, budget, Exec::Sequential)
}

/// [`osc_k`] with the sampling and the multistart runs spread by `exec`.
pub fn osc_k_with(m: &MetricChart, p: &ChartPoint, budget: &OscBudget, exec: Exec) -> Result<CurvatureReport> {
    let n = m.dim();
    if n < 2 {
        return Err(Error::InvalidParameter("sectional curvature needs dimension >= 2".into()));
    }
    let r = geometry::riemann(m, p)?;
    let fc = FrameCurvature::new(&r)?;
    if n == 2 {
        let (e0, e1) = (fc.to_chart(&[1.0, 0.0]), fc.to_chart(&[0.0, 1.0]));
        let k = fc.k(&[1.0, 0.0], &[0.0, 1.0]);
        let plane = Plane2 { base: p.clone(), u: e0, w: e1 };
        return Ok(CurvatureReport {
            point: p.clone(),
            k_max: k,
            k_min: k,
            osc: 0.0,
            argmax_plane: plane.clone(),
            argmin_plane: plane,
            samples: 1,
            refined: true,
        });
    }
    if budget.samples == 0 || budget.starts == 0 {
        return Err(Error::InvalidParameter("osc budget needs samples and starts".into()));
    }
    let pairs = pair_cache(n, budget.samples);
    let values = exec.map(&pairs[..], |(u, w)| fc.k(u, w));
    let starts = budget.starts.min(pairs.len());
    let mut jobs: Vec<(usize, f64)> = best_seeds(&values, starts, 1.0).into_iter().map(|i| (i, 1.0)).collect();
    jobs.extend(best_seeds(&values, starts, -1.0).into_iter().map(|i| (i, -1.0)));
    let runs = exec.map(&jobs, |&(i, sign)| refine(&fc, &pairs[i].0, &pairs[i].1, sign, budget));
    let refined = runs.iter().all(|r| r.converged);
    let pick = |sign: f64| {
        runs.iter()
            .zip(&jobs)
            .filter(|(_, j)| j.1 == sign)
            .map(|(r, _)| r)
            .fold(None::<&Run>, |best, r| match best {
                Some(b) if sign * b.k >= sign * r.k => Some(b),
                _ => Some(r),
            })
            .expect("at least one start")
    };
    let (hi, lo) = (pick(1.0), pick(-1.0));
    let plane = |r: &Run| Plane2 { base: p.clone(), u: fc.to_chart(&r.u), w: fc.to_chart(&r.w) };
    Ok(CurvatureReport {
        point: p.clone(),
        k_max: hi.k,
        k_min: lo.k,
        osc: hi.k - lo.k,
        argmax_plane: plane(hi),
        argmin_plane: plane(lo),
        samples: pairs.len(),
        refined,
    })
}

/// Gaussian curvature of a surface chart as an order-1 jet at `q`.
fn gaussian_curvature_jet(m: &MetricChart, q: &ChartPoint) -> Result<crate::jets::TaylorScalar> {
    if m.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: m.dim() });
    }
    let conn = Connection::at(m, q, 3)?;
    let r = conn.riemann_lowered();
    let g: Vec<_> = conn.g.iter().map(|x| x.truncate(1)).collect();
    let det = g[0] * g[3] - g[1] * g[2];
    // K = R(∂0, ∂1, ∂1, ∂0) / det g
    Ok(r[((0 * 2 + 1) * 2 + 1) * 2] / det)
}

/// `∇K(p)` for the Gaussian curvature of a surface chart.
pub fn curvature_gradient(m: &MetricChart, p: &ChartPoint) -> Result<TangentVector> {
    let k = gaussian_curvature_jet(m, p)?;
    let g = m.metric_at(p)?;
    let dk = [k.d1(0), k.d1(1)];
    Ok(TangentVector::new(p.clone(), raise(&g, &dk)?))
}

/// Residuals of the two surface identities of a conformal germ at `q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoDimResiduals {
    /// `‖∇h + K∇f‖_g`
    pub factor_gradient: f64,
    /// component of `∇K` orthogonal to `∇f`
    pub curvature_transverse: f64,
}

/// `(‖∇h + K∇f‖, ‖∇K - ⟨∇K,u⟩u‖)` with `u = ∇f/‖∇f‖`; both vanish for a
/// conformal germ on a surface.
pub fn two_dim_identities(m: &MetricChart, f: &GermSpec, q: &ChartPoint) -> Result<TwoDimResiduals> {
    if m.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: m.dim() });
    }
    let local = GermLocal::at(m, f, q)?;
    let g = local.metric();
    let grad_f = local.gradient()?;
    let norm = inner(&g, &grad_f, &grad_f).sqrt();
    if !(norm >= GRADIENT_FLOOR) {
        return Err(Error::GradientBelowFloor { norm, floor: GRADIENT_FLOOR });
    }
    let h = local.conformal_factor_jet();
    let grad_h = raise(&g, &[h.d1(0), h.d1(1)])?;
    let kj = gaussian_curvature_jet(m, q)?;
    let k = kj.value();
    let grad_k = raise(&g, &[kj.d1(0), kj.d1(1)])?;

    let r1: Vec<f64> = (0..2).map(|i| grad_h[i] + k * grad_f[i]).collect();
    let u: Vec<f64> = grad_f.iter().map(|x| x / norm).collect();
    let along = inner(&g, &grad_k, &u);
    let r2: Vec<f64> = (0..2).map(|i| grad_k[i] - along * u[i]).collect();
    Ok(TwoDimResiduals {
        factor_gradient: inner(&g, &r1, &r1).sqrt(),
        curvature_transverse: inner(&g, &r2, &r2).sqrt(),
    })
}

/// Ball of chart points scanned by [`schur_scan`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchurRegion {
    pub center: ChartPoint,
    pub radius: f64,
    pub count: usize,
}

impl SchurRegion {
    pub const DEFAULT_COUNT: usize = 200;

    /// 200 points in the ball of radius `0.5·scale` about the chart origin.
    pub fn for_chart(m: &MetricChart) -> Self {
        Self { center: ChartPoint::origin(m.dim()), radius: 0.5 * m.scale(), count: Self::DEFAULT_COUNT }
    }

    pub fn points(&self) -> Vec<ChartPoint> {
        sampling::ball(&self.center, self.radius, self.count)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SchurWitness {
    /// sectional curvature depends on the plane at this sample
    Oscillating { sample: usize, report: CurvatureReport },
    /// pointwise constant, but the value differs between two samples
    Varying { low: ChartPoint, k_low: f64, high: ChartPoint, k_high: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum SchurVerdict {
    Constant { c: f64, spread: f64, max_osc: f64, samples: usize },
    NonConstant { witness: SchurWitness },
}

/// Whether sectional curvature is constant over the region, to within `tol`.
pub fn schur_scan(
    m: &MetricChart,
    region: &SchurRegion,
    tol: f64,
    budget: &OscBudget,
    exec: Exec,
) -> Result<SchurVerdict> {
    Ok(schur_scan_reports(m, region, tol, budget, exec)?.0)
}

/// [`schur_scan`] together with the per-sample reports, in sample order.
pub fn schur_scan_reports(
    m: &MetricChart,
    region: &SchurRegion,
    tol: f64,
    budget: &OscBudget,
    exec: Exec,
) -> Result<(SchurVerdict, Vec<CurvatureReport>)> {
    if m.dim() < 3 {
        return Err(Error::InvalidParameter("constancy scan needs dimension >= 3".into()));
    }
    let points = region.points();
    let reports = exec.map(&points, |q| osc_k(m, q, budget));
    let reports = reports.into_iter().collect::<Result<Vec<_>>>()?;
    let verdict = classify(&reports, tol);
    Ok((verdict, reports))
}

fn classify(reports: &[CurvatureReport], tol: f64) -> SchurVerdict {
    if let Some((sample, r)) = reports.iter().enumerate().find(|(_, r)| !(r.osc <= tol)) {
        return SchurVerdict::NonConstant {
            witness: SchurWitness::Oscillating { sample, report: r.clone() },
        };
    }
    let max_osc = reports.iter().map(|r| r.osc).fold(0.0, f64::max);
    let by_value = |a: &&CurvatureReport, b: &&CurvatureReport| a.k_max.total_cmp(&b.k_max);
    let lo = reports.iter().min_by(by_value).expect("nonempty region");
    let hi = reports.iter().max_by(by_value).expect("nonempty region");
    let spread = hi.k_max - lo.k_max;
    if !(spread <= tol) {
        return SchurVerdict::NonConstant {
            witness: SchurWitness::Varying {
                low: lo.point.clone(),
                k_low: lo.k_max,
                high: hi.point.clone(),
                k_high: hi.k_max,
            },
        };
    }
    let c = reports.iter().map(|r| r.k_max).sum::<f64>() / reports.len() as f64;
    SchurVerdict::Constant { c, spread, max_osc, samples: reports.len() }
}

/// How the sweep's conformality column is defined; emitted alongside the data.
pub const KAPPA_PROXY_DEFINITION: &str = "kappa_proxy = 1 + sup over the neighborhood samples of the g-operator \
     norm of g^-1(Hess f - h g), with h = tr_g(Hess f)/n";

/// One row of [`quasiconformal_sweep`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub param: f64,
    pub kappa_proxy: f64,
    pub k_max: f64,
    pub k_min: f64,
    pub osc: f64,
    pub refined: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub tolerances: CmgTolerances,
    pub budget: OscBudget,
    pub exec: Exec,
}

/// Conformality defect and curvature oscillation at the base of each member
/// of a one-parameter family; the member at `0` must be a conformal germ.
pub fn quasiconformal_sweep<F>(family: F, grid: &[f64], opts: &SweepOptions) -> Result<Vec<SweepRow>>
where
    F: Fn(f64) -> Result<(MetricChart, GermSpec)>,
{
    let (m0, f0) = family(0.0)?;
    let verdict = germs::verify_cmg(&m0, &f0, &Neighborhood::for_chart(&m0), &opts.tolerances, opts.exec)?;
    if !verdict.is_cmg {
        return Err(Error::NonCmgBaseline);
    }
    grid.iter()
        .map(|&eps| {
            let (m, f) = family(eps)?;
            let p = f.base();
            let mut points = Neighborhood::for_chart(&m).points(p);
            points.insert(0, p.clone());
            let (defect, _) = germs::defect_sup(&m, &f, &points, opts.exec);
            let report = osc_k_with(&m, p, &opts.budget, opts.exec)?;
            Ok(SweepRow {
                param: eps,
                kappa_proxy: 1.0 + defect,
                k_max: report.k_max,
                k_min: report.k_min,
                osc: report.osc,
                refined: report.refined,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{self, Profile};
    use crate::germs::{model_germ, Model};

    fn small() -> OscBudget {
        OscBudget { samples: 2000, ..OscBudget::default() }
    }

    #[test]
    fn model_space_has_no_oscillation() {
        let m = catalog::sphere(3, 2.0).unwrap();
        let r = osc_k(&m, &ChartPoint::new(vec![0.1, -0.2, 0.05]), &small()).unwrap();
        assert!((r.k_max - 2.0).abs() < 1e-9 && (r.k_min - 2.0).abs() < 1e-9);
        assert!(r.osc <= 1e-9 && r.refined);
    }

    #[test]
    fn product_of_spheres_oscillates_between_zero_and_one() {
        let s = catalog::sphere(2, 1.0).unwrap();
        let m = MetricChart::product(&s, &s).unwrap();
        let p = ChartPoint::new(vec![0.1, 0.2, 0.1, 0.3]);
        let r = osc_k(&m, &p, &OscBudget::default()).unwrap();
        assert!((r.k_max - 1.0).abs() < 1e-9, "{}", r.k_max);
        assert!(r.k_min.abs() < 1e-9, "{}", r.k_min);
        assert_eq!(r.osc, r.k_max - r.k_min);
        for (plane, k) in [(&r.argmax_plane, r.k_max), (&r.argmin_plane, r.k_min)] {
            assert!((geometry::sectional(&m, plane).unwrap() - k).abs() < 1e-10);
        }
    }

    #[test]
    fn refinement_never_loses_to_sampling() {
        let base = catalog::sphere(3, 1.0).unwrap();
        let m = catalog::conformal_perturbation(&base, catalog::Bump::Gaussian, 0.3).unwrap();
        let p = ChartPoint::new(vec![0.2, 0.0, -0.1]);
        let budget = small();
        let r = osc_k(&m, &p, &budget).unwrap();
        let riem = geometry::riemann(&m, &p).unwrap();
        let fc = FrameCurvature::new(&riem).unwrap();
        for (u, w) in pair_cache(3, budget.samples).iter() {
            let k = fc.k(u, w);
            assert!(k <= r.k_max + 1e-12 && k >= r.k_min - 1e-12);
        }
        assert!(r.osc > 1e-3);
    }

    #[test]
    fn parallel_and_sequential_reports_match() {
        let s = catalog::sphere(2, 1.0).unwrap();
        let m = MetricChart::product(&s, &catalog::euclidean(1).unwrap()).unwrap();
        let p = ChartPoint::new(vec![0.3, 0.1, 0.2]);
        let a = osc_k_with(&m, &p, &small(), Exec::Parallel).unwrap();
        let b = osc_k_with(&m, &p, &small(), Exec::Sequential).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn surface_curvature_gradient() {
        let m = catalog::sphere(2, 1.0).unwrap();
        let g = curvature_gradient(&m, &ChartPoint::new(vec![0.3, -0.4])).unwrap();
        assert!(g.comps.iter().all(|x| x.abs() < 1e-12));

        let m = catalog::revolution(Profile::Cubic(1.0)).unwrap();
        let g0 = curvature_gradient(&m, &ChartPoint::origin(2)).unwrap();
        assert!(g0.norm(&m.metric_at(&ChartPoint::origin(2)).unwrap()) < 1e-12);
        for r in [0.1f64, 0.3] {
            let q = ChartPoint::new(vec![r * 0.8, r * 0.6]);
            let gk = curvature_gradient(&m, &q).unwrap();
            let want = 12.0 * r / (1.0 + r * r).powi(2);
            assert!((gk.norm(&m.metric_at(&q).unwrap()) - want).abs() < 1e-10);
        }
    }

    #[test]
    fn surface_identities_hold_for_conformal_germs() {
        let (m, f) = model_germ(Model::Sphere { c: 1.0 }, 2).unwrap();
        let r = two_dim_identities(&m, &f, &ChartPoint::new(vec![0.2, 0.1])).unwrap();
        assert!(r.factor_gradient < 1e-10 && r.curvature_transverse < 1e-10);

        let m = catalog::revolution(Profile::Cubic(1.0)).unwrap();
        let f = catalog::revolution_germ(Profile::Cubic(1.0));
        let r = two_dim_identities(&m, &f, &ChartPoint::new(vec![0.3 * 0.6, -0.3 * 0.8])).unwrap();
        assert!(r.factor_gradient < 1e-10 && r.curvature_transverse < 1e-10, "{r:?}");

        let m = catalog::euclidean(2).unwrap();
        let f = catalog::quadratic_germ(2, 0).unwrap();
        let r = two_dim_identities(&m, &f, &ChartPoint::new(vec![0.3, 0.4])).unwrap();
        assert_eq!((r.factor_gradient, r.curvature_transverse), (0.0, 0.0));
        assert!(matches!(
            two_dim_identities(&m, &f, &ChartPoint::origin(2)),
            Err(Error::GradientBelowFloor { .. })
        ));
    }

    #[test]
    fn schur_scan_verdicts() {
        let m = catalog::hyperbolic(3, 1.0).unwrap();
        let region = SchurRegion { count: 20, ..SchurRegion::for_chart(&m) };
        match schur_scan(&m, &region, 1e-6, &small(), Exec::Parallel).unwrap() {
            SchurVerdict::Constant { c, .. } => assert!((c + 1.0).abs() < 1e-9),
            v => panic!("{v:?}"),
        }
        let s = catalog::sphere(2, 1.0).unwrap();
        let m = MetricChart::product(&s, &catalog::euclidean(1).unwrap()).unwrap();
        let region = SchurRegion { count: 20, ..SchurRegion::for_chart(&m) };
        match schur_scan(&m, &region, 1e-6, &small(), Exec::Parallel).unwrap() {
            SchurVerdict::NonConstant { witness: SchurWitness::Oscillating { sample, report } } => {
                assert_eq!(sample, 0);
                assert!((report.osc - 1.0).abs() < 1e-9);
            }
            v => panic!("{v:?}"),
        }
        assert!(schur_scan(&catalog::euclidean(2).unwrap(), &region, 1e-6, &small(), Exec::Sequential).is_err());
    }

    #[test]
    fn sweep_on_flat_family_and_refusal() {
        let opts = SweepOptions { budget: small(), ..SweepOptions::default() };
        let rows = quasiconformal_sweep(
            |_| Ok((catalog::euclidean(3)?, catalog::quadratic_germ(3, 0)?)),
            &[0.0, 0.1],
            &opts,
        )
        .unwrap();
        for r in rows {
            assert_eq!((r.kappa_proxy, r.osc), (1.0, 0.0));
        }
        let err = quasiconformal_sweep(
            |eps| {
                let base = catalog::euclidean(3)?;
                let f = GermSpec::new("cubic", ChartPoint::origin(3), |x| x[0] * x[0] + x[1] * x[1] * 2.0 + x[2] * x[2]);
                Ok((catalog::conformal_perturbation(&base, catalog::Bump::Saddle, eps)?, f))
            },
            &[0.0],
            &opts,
        );
        assert_eq!(err, Err(Error::NonCmgBaseline));
    }
}

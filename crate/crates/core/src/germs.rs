//! Conformal Morse germs.
//!
//! A germ `f` at `p` is a conformal Morse germ when `p` is a nondegenerate
//! critical point and the covariant Hessian is pointwise a multiple of the
//! metric, `∇²f = h g`, with `h(p) ≠ 0`. The candidate factor is always
//! `h = tr_g(∇²f) / n`; the conformal defect measures how far the Hessian is
//! from `h g`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::catalog;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::{self, inner, raise, GermLocal, MetricChart, TangentVector};
use crate::jets::{ChartPoint, TaylorScalar};
use crate::sampling;

pub type GermFn = dyn Fn(&[TaylorScalar]) -> TaylorScalar + Send + Sync;

/// A scalar function germ together with its base point.
#[derive(Clone)]
pub struct GermSpec {
    label: String,
    base: ChartPoint,
    scale: f64,
    f: Arc<GermFn>,
}

impl fmt::Debug for GermSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GermSpec")
            .field("label", &self.label)
            .field("base", &self.base.coords)
            .field("scale", &self.scale)
            .finish()
    }
}

impl GermSpec {
    pub fn new<F>(label: impl Into<String>, base: ChartPoint, f: F) -> Self
    where
        F: Fn(&[TaylorScalar]) -> TaylorScalar + Send + Sync + 'static,
    {
        Self { label: label.into(), base, scale: 1.0, f: Arc::new(f) }
    }

    /// Magnitude used to scale the critical-point tolerance.
    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn base(&self) -> &ChartPoint {
        &self.base
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn negated(&self) -> Self {
        let inner = Arc::clone(&self.f);
        Self {
            label: format!("-({})", self.label),
            base: self.base.clone(),
            scale: self.scale,
            f: Arc::new(move |x: &[TaylorScalar]| -inner(x)),
        }
    }

    pub fn eval_jet(&self, q: &ChartPoint, order: usize) -> Result<TaylorScalar> {
        let x = q.lift_all(order)?;
        let v = (self.f)(&x);
        if !v.is_finite() {
            return Err(Error::NonFinite("germ"));
        }
        Ok(v)
    }

    pub fn value(&self, q: &ChartPoint) -> Result<f64> {
        Ok(self.eval_jet(q, 0)?.value())
    }
}

/// The constant-curvature models with their canonical germs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum Model {
    Euclidean,
    Sphere { c: f64 },
    Hyperbolic { c: f64 },
}

/// Chart metric and germ based at the origin.
///
/// The germs are `|x|²` (flat), and the chart expressions of `cos(√c d)` and
/// `cosh(√c d)` where `d` is the distance to the origin:
/// `(1 - c|x|²)/(1 + c|x|²)` in the stereographic chart and
/// `(1 + c|x|²)/(1 - c|x|²)` in the ball chart.
pub fn model_germ(model: Model, n: usize) -> Result<(MetricChart, GermSpec)> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("model dimension must be >= 2, got {n}")));
    }
    let origin = ChartPoint::origin(n);
    let s = |x: &[TaylorScalar]| x.iter().fold(x[0].zero_like(), |acc, xi| acc + *xi * *xi);
    Ok(match model {
        Model::Euclidean => (
            catalog::euclidean(n)?,
            GermSpec::new("|x|^2", origin, move |x| s(x)),
        ),
        Model::Sphere { c } => (
            catalog::sphere(n, c)?,
            GermSpec::new(format!("cos(sqrt({c}) d)"), origin, move |x| {
                let t = s(x) * c;
                (1.0 - t) / (1.0 + t)
            }),
        ),
        Model::Hyperbolic { c } => (
            catalog::hyperbolic(n, c)?,
            GermSpec::new(format!("cosh(sqrt({c}) d)"), origin, move |x| {
                let t = s(x) * c;
                (1.0 + t) / (1.0 - t)
            }),
        ),
    })
}

/// `L⁻¹ A L⁻ᵀ` for the Cholesky factor `g = L Lᵀ`; its eigenvalues are those
/// of the (1,1) form `g⁻¹A`.
fn whitened(g: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = g.clone().cholesky().ok_or(Error::NonFinite("metric Cholesky factor"))?;
    let l = chol.l();
    let li = l.clone().try_inverse().ok_or(Error::NonFinite("metric Cholesky factor"))?;
    let m = &li * a * li.transpose();
    Ok((&m + m.transpose()) * 0.5)
}

struct ConformalParts {
    h: f64,
    defect: f64,
    /// eigenvalues of g⁻¹∇²f
    eigenvalues: Vec<f64>,
}

fn conformal_parts(m: &MetricChart, f: &GermSpec, q: &ChartPoint) -> Result<ConformalParts> {
    let g = m.metric_at(q)?;
    let hess = geometry::covariant_hessian(m, f, q)?;
    let w = whitened(&g, &hess)?;
    let n = m.dim() as f64;
    let h = w.trace() / n;
    let eig = w.symmetric_eigen().eigenvalues;
    let defect = eig.iter().map(|l| (l - h).abs()).fold(0.0, f64::max);
    Ok(ConformalParts { h, defect, eigenvalues: eig.iter().copied().collect() })
}

/// `h(q) = tr_g(∇²f)(q) / n`.
pub fn conformal_factor(m: &MetricChart, f: &GermSpec, q: &ChartPoint) -> Result<f64> {
    Ok(conformal_parts(m, f, q)?.h)
}

/// g-operator norm of `g⁻¹(∇²f - h g)` at `q`.
pub fn conformal_defect(m: &MetricChart, f: &GermSpec, q: &ChartPoint) -> Result<f64> {
    Ok(conformal_parts(m, f, q)?.defect)
}

/// Thresholds used by [`verify_cmg`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CmgTolerances {
    /// multiplied by the germ scale
    pub grad: f64,
    pub nondeg: f64,
    pub conf: f64,
    pub h: f64,
    pub gradient_floor: f64,
}

impl Default for CmgTolerances {
    fn default() -> Self {
        Self { grad: 1e-10, nondeg: 1e-8, conf: 1e-7, h: 1e-8, gradient_floor: 1e-6 }
    }
}

impl CmgTolerances {
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grad: self.grad * factor,
            nondeg: self.nondeg * factor,
            conf: self.conf * factor,
            h: self.h * factor,
            gradient_floor: self.gradient_floor * factor,
        }
    }
}

/// Neighborhood of the base point probed for conformality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Neighborhood {
    /// absolute chart radii
    pub radii: Vec<f64>,
    pub per_shell: usize,
}

impl Neighborhood {
    pub const SHELL_FRACTIONS: [f64; 3] = [0.05, 0.1, 0.2];
    pub const PER_SHELL: usize = 64;

    /// Three shells at `{0.05, 0.1, 0.2}·scale`, 64 points each.
    pub fn for_chart(m: &MetricChart) -> Self {
        Self {
            radii: Self::SHELL_FRACTIONS.iter().map(|f| f * m.scale()).collect(),
            per_shell: Self::PER_SHELL,
        }
    }

    pub fn points(&self, center: &ChartPoint) -> Vec<ChartPoint> {
        sampling::shells(center, &self.radii, self.per_shell)
    }
}

/// Outcome of checking the conformal Morse germ conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmgVerdict {
    pub grad_norm_at_p: f64,
    pub hessian_min_abs_eigenvalue: f64,
    pub h_at_p: f64,
    pub defect_sup: f64,
    pub morse_index: usize,
    pub is_cmg: bool,
    pub samples: usize,
    pub skipped: usize,
    /// false when more than 10% of the neighborhood samples were skipped
    pub reliable: bool,
    pub tolerances: CmgTolerances,
}

/// Maximum of the conformal defect over `points`, and the number skipped.
pub fn defect_sup(m: &MetricChart, f: &GermSpec, points: &[ChartPoint], exec: Exec) -> (f64, usize) {
    let defects = exec.map(points, |q| conformal_defect(m, f, q).ok());
    let skipped = defects.iter().filter(|d| d.is_none()).count();
    let sup = defects.into_iter().flatten().fold(0.0, f64::max);
    (sup, skipped)
}

pub fn verify_cmg(
    m: &MetricChart,
    f: &GermSpec,
    sampling: &Neighborhood,
    tols: &CmgTolerances,
    exec: Exec,
) -> Result<CmgVerdict> {
    let p = f.base();
    let g = m.metric_at(p)?;
    let grad = geometry::gradient(m, f, p)?;
    let grad_norm = grad.norm(&g);
    let at_p = conformal_parts(m, f, p)?;
    let min_abs = at_p.eigenvalues.iter().map(|l| l.abs()).fold(f64::INFINITY, f64::min);
    let morse_index = at_p.eigenvalues.iter().filter(|&&l| l < 0.0).count();

    let points = sampling.points(p);
    let (sup, skipped) = defect_sup(m, f, &points, exec);
    let sup = sup.max(at_p.defect);
    let samples = points.len();
    let is_cmg = grad_norm <= tols.grad * f.scale()
        && min_abs >= tols.nondeg
        && sup <= tols.conf
        && at_p.h.abs() >= tols.h;
    Ok(CmgVerdict {
        grad_norm_at_p: grad_norm,
        hessian_min_abs_eigenvalue: min_abs,
        h_at_p: at_p.h,
        defect_sup: sup,
        morse_index,
        is_cmg,
        samples,
        skipped,
        reliable: skipped * 10 <= samples,
        tolerances: *tols,
    })
}

/// Default gradient floor for the curvature-from-germ formulas.
pub const GRADIENT_FLOOR: f64 = 1e-6;

/// Unit gradient direction and a unit vector orthogonal to it built from `z`.
fn adapted_pair(g: &DMatrix<f64>, grad: &[f64], z: &[f64], floor: f64) -> Result<(f64, Vec<f64>)> {
    let norm = inner(g, grad, grad).sqrt();
    if !(norm >= floor) {
        return Err(Error::GradientBelowFloor { norm, floor });
    }
    let (_, zz) = geometry::orthonormalize_pair(g, grad, z).ok_or(Error::ParallelToGradient)?;
    Ok((norm, zz))
}

/// `-⟨∇f, ∇h⟩ / |∇f|²` at `q`, with `h = tr_g(∇²f)/n` differentiated through jets.
///
/// `z` is orthonormalized against `∇f(q)`; the value does not depend on it.
pub fn curvature_via_germ(m: &MetricChart, f: &GermSpec, q: &ChartPoint, z: &TangentVector) -> Result<f64> {
    curvature_via_germ_with_floor(m, f, q, z, GRADIENT_FLOOR)
}

pub fn curvature_via_germ_with_floor(
    m: &MetricChart,
    f: &GermSpec,
    q: &ChartPoint,
    z: &TangentVector,
    floor: f64,
) -> Result<f64> {
    check_dim(m, z)?;
    let local = GermLocal::at(m, f, q)?;
    let g = local.metric();
    let grad = local.gradient()?;
    let (norm, _) = adapted_pair(&g, &grad, &z.comps, floor)?;
    let h = local.conformal_factor_jet();
    let dh: Vec<f64> = (0..m.dim()).map(|k| h.d1(k)).collect();
    let grad_h = raise(&g, &dh)?;
    Ok(-inner(&g, &grad, &grad_h) / (norm * norm))
}

/// `⟨∇³f(z, ∇f) - ∇³f(∇f, z), z⟩ / |∇f|²` for a unit `z ⊥ ∇f(q)`; equals the
/// sectional curvature of span(∇f, z) for any smooth germ.
pub fn curvature_via_third_derivative(m: &MetricChart, f: &GermSpec, q: &ChartPoint, z: &TangentVector) -> Result<f64> {
    curvature_via_third_derivative_with_floor(m, f, q, z, GRADIENT_FLOOR)
}

pub fn curvature_via_third_derivative_with_floor(
    m: &MetricChart,
    f: &GermSpec,
    q: &ChartPoint,
    z: &TangentVector,
    floor: f64,
) -> Result<f64> {
    check_dim(m, z)?;
    let local = GermLocal::at(m, f, q)?;
    let g = local.metric();
    let grad = local.gradient()?;
    let (norm, zz) = adapted_pair(&g, &grad, &z.comps, floor)?;
    let a = local.third_covariant(&zz, &grad)?;
    let b = local.third_covariant(&grad, &zz)?;
    let diff: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
    Ok(inner(&g, &diff, &zz) / (norm * norm))
}

fn check_dim(m: &MetricChart, z: &TangentVector) -> Result<()> {
    if z.dim() != m.dim() {
        return Err(Error::DimensionMismatch { expected: m.dim(), got: z.dim() });
    }
    Ok(())
}

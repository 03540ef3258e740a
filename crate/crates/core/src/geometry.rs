//! Levi-Civita tensor calculus on a coordinate chart.
//!
//! Every tensor is produced at a single point from jets of the metric
//! components: an order-`m` metric jet yields Christoffel symbols as order
//! `m-1` jets and the Riemann tensor as order `m-2` jets, so derivatives of
//! curvature come for free when the metric is lifted one order higher.
//!
//! Conventions: `R(X,Y)Z = ∇_X∇_Y Z - ∇_Y∇_X Z - ∇_[X,Y] Z`, stored fully
//! lowered as `R_ijkl = g(R(∂_i,∂_j)∂_k, ∂_l)`, so that the sectional curvature
//! of an orthonormal pair is `R(u,w,w,u)`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::germs::GermSpec;
use crate::jets::{ChartPoint, TaylorScalar, MAX_VARS};

/// Metric components as a function of the coordinate jets; returns the upper
/// triangle `g_ij, i <= j`, packed row by row.
pub type ComponentFn = dyn Fn(&[TaylorScalar]) -> Vec<TaylorScalar> + Send + Sync;
pub type DomainGuard = dyn Fn(&ChartPoint) -> bool + Send + Sync;

/// Condition number above which the metric is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

/// A Riemannian metric on a coordinate chart.
#[derive(Clone)]
pub struct MetricChart {
    dim: usize,
    name: String,
    scale: f64,
    components: Arc<ComponentFn>,
    guard: Arc<DomainGuard>,
}

impl fmt::Debug for MetricChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricChart")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("scale", &self.scale)
            .finish()
    }
}

pub(crate) fn packed_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

impl MetricChart {
    pub fn new<F>(name: impl Into<String>, dim: usize, components: F) -> Result<Self>
    where
        F: Fn(&[TaylorScalar]) -> Vec<TaylorScalar> + Send + Sync + 'static,
    {
        if dim == 0 || dim > MAX_VARS {
            return Err(Error::InvalidParameter(format!("chart dimension {dim}")));
        }
        Ok(Self {
            dim,
            name: name.into(),
            scale: 1.0,
            components: Arc::new(components),
            guard: Arc::new(|q: &ChartPoint| q.is_finite()),
        })
    }

    /// Diagonal metric `g = phi(x) δ`.
    pub fn conformally_flat<F>(name: impl Into<String>, dim: usize, phi: F) -> Result<Self>
    where
        F: Fn(&[TaylorScalar]) -> TaylorScalar + Send + Sync + 'static,
    {
        Self::new(name, dim, move |x| {
            let factor = phi(x);
            let zero = factor.zero_like();
            let mut out = Vec::with_capacity(dim * (dim + 1) / 2);
            for i in 0..dim {
                for j in i..dim {
                    out.push(if i == j { factor } else { zero });
                }
            }
            out
        })
    }

    pub fn with_guard<G>(mut self, guard: G) -> Self
    where
        G: Fn(&ChartPoint) -> bool + Send + Sync + 'static,
    {
        self.guard = Arc::new(move |q: &ChartPoint| q.is_finite() && guard(q));
        self
    }

    /// Characteristic chart length used to size sampling neighborhoods.
    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// `e^{2u} g` for a scalar `u` given on jets.
    pub fn conformally_rescaled<U>(&self, name: impl Into<String>, u: U) -> Self
    where
        U: Fn(&[TaylorScalar]) -> TaylorScalar + Send + Sync + 'static,
    {
        let inner = Arc::clone(&self.components);
        Self {
            dim: self.dim,
            name: name.into(),
            scale: self.scale,
            components: Arc::new(move |x: &[TaylorScalar]| {
                let w = (u(x) * 2.0).exp();
                inner(x).into_iter().map(|gij| gij * w).collect()
            }),
            guard: Arc::clone(&self.guard),
        }
    }

    /// Riemannian product; coordinates of `a` come first.
    pub fn product(a: &MetricChart, b: &MetricChart) -> Result<Self> {
        let (na, nb) = (a.dim, b.dim);
        let n = na + nb;
        if n > MAX_VARS {
            return Err(Error::InvalidParameter(format!("product dimension {n} exceeds {MAX_VARS}")));
        }
        let (ca, cb) = (Arc::clone(&a.components), Arc::clone(&b.components));
        let (ga, gb) = (Arc::clone(&a.guard), Arc::clone(&b.guard));
        Ok(Self {
            dim: n,
            name: format!("{}x{}", a.name, b.name),
            scale: a.scale.min(b.scale),
            components: Arc::new(move |x: &[TaylorScalar]| {
                let pa = ca(&x[..na]);
                let pb = cb(&x[na..]);
                let zero = x[0].zero_like();
                let mut out = Vec::with_capacity(n * (n + 1) / 2);
                for i in 0..n {
                    for j in i..n {
                        out.push(if j < na {
                            pa[packed_index(na, i, j)]
                        } else if i >= na {
                            pb[packed_index(nb, i - na, j - na)]
                        } else {
                            zero
                        });
                    }
                }
                out
            }),
            guard: Arc::new(move |q: &ChartPoint| {
                ga(&ChartPoint::from(&q.coords[..na])) && gb(&ChartPoint::from(&q.coords[na..]))
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn in_domain(&self, q: &ChartPoint) -> bool {
        q.dim() == self.dim && (self.guard)(q)
    }

    pub(crate) fn check_point(&self, q: &ChartPoint) -> Result<()> {
        if q.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: q.dim() });
        }
        if !(self.guard)(q) {
            return Err(Error::OutsideDomain(q.coords.clone()));
        }
        Ok(())
    }

    /// Full `n×n` row-major matrix of component jets at `q`.
    pub fn component_jets(&self, q: &ChartPoint, order: usize) -> Result<Vec<TaylorScalar>> {
        self.check_point(q)?;
        let x = q.lift_all(order)?;
        let packed = (self.components)(&x);
        let n = self.dim;
        if packed.len() != n * (n + 1) / 2 {
            return Err(Error::InvalidParameter(format!(
                "metric '{}' returned {} packed components, expected {}",
                self.name,
                packed.len(),
                n * (n + 1) / 2
            )));
        }
        let mut full = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                full.push(packed[packed_index(n, i, j)]);
            }
        }
        if full.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("metric components"));
        }
        Ok(full)
    }

    /// Metric matrix at `q`, checked for positive definiteness and conditioning.
    pub fn metric_at(&self, q: &ChartPoint) -> Result<DMatrix<f64>> {
        let jets = self.component_jets(q, 0)?;
        let g = DMatrix::from_fn(self.dim, self.dim, |i, j| jets[i * self.dim + j].value());
        check_metric(&g, q)?;
        Ok(g)
    }
}

fn check_metric(g: &DMatrix<f64>, q: &ChartPoint) -> Result<()> {
    let eig = g.clone().symmetric_eigen().eigenvalues;
    let min = eig.min();
    let max = eig.max();
    if min <= 0.0 {
        return Err(Error::NotPositiveDefinite { point: q.coords.clone(), min_eigenvalue: min });
    }
    if max / min > MAX_CONDITION {
        return Err(Error::SingularMetric { point: q.coords.clone(), condition: max / min });
    }
    Ok(())
}

/// Contravariant vector at a chart point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub base: ChartPoint,
    pub comps: Vec<f64>,
}

impl TangentVector {
    pub fn new(base: ChartPoint, comps: Vec<f64>) -> Self {
        Self { base, comps }
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn as_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.comps)
    }

    pub fn norm(&self, g: &DMatrix<f64>) -> f64 {
        inner(g, &self.comps, &self.comps).sqrt()
    }
}

pub(crate) fn inner(g: &DMatrix<f64>, u: &[f64], w: &[f64]) -> f64 {
    let n = u.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += g[(i, j)] * u[i] * w[j];
        }
    }
    acc
}

/// A tangent 2-plane held as a g-orthonormal pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plane2 {
    pub base: ChartPoint,
    pub u: Vec<f64>,
    pub w: Vec<f64>,
}

impl Plane2 {
    /// Gram-Schmidt of `(u, w)` in `g(base)`.
    pub fn new(metric: &MetricChart, base: ChartPoint, u: &[f64], w: &[f64]) -> Result<Self> {
        let g = metric.metric_at(&base)?;
        Self::with_metric(&g, base, u, w)
    }

    pub fn with_metric(g: &DMatrix<f64>, base: ChartPoint, u: &[f64], w: &[f64]) -> Result<Self> {
        let n = g.nrows();
        if u.len() != n || w.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: u.len().min(w.len()) });
        }
        let (u, w) = orthonormalize_pair(g, u, w).ok_or(Error::DegeneratePlane)?;
        Ok(Self { base, u, w })
    }
}

/// g-orthonormal basis of span(u, w), or `None` if the pair is dependent.
pub(crate) fn orthonormalize_pair(g: &DMatrix<f64>, u: &[f64], w: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let nu = inner(g, u, u).sqrt();
    let nw = inner(g, w, w).sqrt();
    if !(nu > 0.0 && nw > 0.0) {
        return None;
    }
    let e1: Vec<f64> = u.iter().map(|x| x / nu).collect();
    let mut e2: Vec<f64> = w.iter().map(|x| x / nw).collect();
    // two passes keep the pair orthonormal to rounding
    for _ in 0..2 {
        let p = inner(g, &e1, &e2);
        for (b, a) in e2.iter_mut().zip(&e1) {
            *b -= p * a;
        }
    }
    let n2 = inner(g, &e2, &e2).sqrt();
    if n2 < 1e-10 {
        return None;
    }
    e2.iter_mut().for_each(|x| *x /= n2);
    Some((e1, e2))
}

/// Christoffel symbols `Γ^k_ij` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    n: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// `Γ^k_ij`
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.n + i) * self.n + j]
    }
}

/// Fully lowered Riemann tensor at a point, together with the metric there.
#[derive(Debug, Clone, PartialEq)]
pub struct RiemannTensor {
    n: usize,
    data: Vec<f64>,
    metric: DMatrix<f64>,
}

impl RiemannTensor {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn metric(&self) -> &DMatrix<f64> {
        &self.metric
    }

    /// `R_ijkl = g(R(∂_i,∂_j)∂_k, ∂_l)`
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let n = self.n;
        self.data[((i * n + j) * n + k) * n + l]
    }

    /// `R(a, b, c, d)` for arbitrary vectors.
    pub fn eval(&self, a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for i in 0..n {
            if a[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                let ab = a[i] * b[j];
                if ab == 0.0 {
                    continue;
                }
                for k in 0..n {
                    let abc = ab * c[k];
                    if abc == 0.0 {
                        continue;
                    }
                    for l in 0..n {
                        acc += abc * d[l] * self.get(i, j, k, l);
                    }
                }
            }
        }
        acc
    }

    /// Sectional curvature of span(u, w); the pair need not be orthonormal.
    pub fn sectional_of(&self, u: &[f64], w: &[f64]) -> Result<f64> {
        let g = &self.metric;
        let area = inner(g, u, u) * inner(g, w, w) - inner(g, u, w).powi(2);
        if area <= 1e-24 * (inner(g, u, u) * inner(g, w, w)).max(f64::MIN_POSITIVE) {
            return Err(Error::DegeneratePlane);
        }
        Ok(self.eval(u, w, w, u) / area)
    }

    /// `R(X,Y)Z` as a contravariant vector.
    pub fn apply(&self, x: &[f64], y: &[f64], z: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        let lowered: Vec<f64> = (0..n)
            .map(|l| {
                let mut e = vec![0.0; n];
                e[l] = 1.0;
                self.eval(x, y, z, &e)
            })
            .collect();
        raise(&self.metric, &lowered)
    }
}

pub(crate) fn raise(g: &DMatrix<f64>, covector: &[f64]) -> Result<Vec<f64>> {
    let lu = g.clone().lu();
    let v = lu
        .solve(&DVector::from_column_slice(covector))
        .ok_or(Error::NonFinite("metric inverse"))?;
    Ok(v.iter().copied().collect())
}

/// Connection data at a point, as jets one order below the metric lift.
#[derive(Clone)]
pub(crate) struct Connection {
    pub n: usize,
    /// metric, truncated to the Christoffel order
    pub g: Vec<TaylorScalar>,
    pub ginv: Vec<TaylorScalar>,
    /// `Γ^k_ij` at `[(k*n + i)*n + j]`
    pub gamma: Vec<TaylorScalar>,
}

impl Connection {
    /// Lifts the metric to `order` (>= 1) at `q`.
    pub fn at(metric: &MetricChart, q: &ChartPoint, order: usize) -> Result<Self> {
        let n = metric.dim();
        let g_full = metric.component_jets(q, order)?;
        let values = DMatrix::from_fn(n, n, |i, j| g_full[i * n + j].value());
        check_metric(&values, q)?;
        let g: Vec<TaylorScalar> = g_full.iter().map(|x| x.truncate(order - 1)).collect();
        let ginv = invert_jets(n, &g)?;
        // dg[(l*n + i)*n + j] = ∂_l g_ij
        let mut dg = Vec::with_capacity(n * n * n);
        for l in 0..n {
            for ij in 0..n * n {
                dg.push(g_full[ij].partial(l));
            }
        }
        let d = |l: usize, i: usize, j: usize| dg[(l * n + i) * n + j];
        let zero = g[0].zero_like();
        // first kind: Γ_ijl = ½(∂_i g_jl + ∂_j g_il - ∂_l g_ij)
        let mut first = vec![zero; n * n * n];
        for i in 0..n {
            for j in i..n {
                for l in 0..n {
                    let v = (d(i, j, l) + d(j, i, l) - d(l, i, j)) * 0.5;
                    first[(i * n + j) * n + l] = v;
                    first[(j * n + i) * n + l] = v;
                }
            }
        }
        let mut gamma = vec![zero; n * n * n];
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let mut acc = zero;
                    for l in 0..n {
                        acc += ginv[k * n + l] * first[(i * n + j) * n + l];
                    }
                    gamma[(k * n + i) * n + j] = acc;
                    gamma[(k * n + j) * n + i] = acc;
                }
            }
        }
        Ok(Self { n, g, ginv, gamma })
    }

    pub fn gamma(&self, k: usize, i: usize, j: usize) -> &TaylorScalar {
        &self.gamma[(k * self.n + i) * self.n + j]
    }

    pub fn metric_values(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.g[i * self.n + j].value())
    }

    /// `R^l_ijk` at `[((l*n + i)*n + j)*n + k]`, one order below the Christoffel jets.
    pub fn riemann_mixed(&self) -> Vec<TaylorScalar> {
        let n = self.n;
        let dgamma: Vec<TaylorScalar> = (0..n)
            .flat_map(|m| self.gamma.iter().map(move |x| x.partial(m)))
            .collect();
        // dgamma[m][(k*n+i)*n+j] = ∂_m Γ^k_ij
        let dg = |m: usize, k: usize, i: usize, j: usize| &dgamma[m * n * n * n + (k * n + i) * n + j];
        let order = self.gamma[0].order() - 1;
        let gam: Vec<TaylorScalar> = self.gamma.iter().map(|x| x.truncate(order)).collect();
        let gm = |k: usize, i: usize, j: usize| gam[(k * n + i) * n + j];
        let zero = dgamma[0].zero_like();
        let mut out = vec![zero; n * n * n * n];
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    for k in 0..n {
                        let mut acc = *dg(i, l, j, k) - *dg(j, l, i, k);
                        for m in 0..n {
                            acc += gm(l, i, m) * gm(m, j, k) - gm(l, j, m) * gm(m, i, k);
                        }
                        out[((l * n + i) * n + j) * n + k] = acc;
                    }
                }
            }
        }
        out
    }

    /// `R_ijkl` at `[((i*n + j)*n + k)*n + l]`.
    pub fn riemann_lowered(&self) -> Vec<TaylorScalar> {
        let n = self.n;
        let mixed = self.riemann_mixed();
        let order = mixed[0].order();
        let g: Vec<TaylorScalar> = self.g.iter().map(|x| x.truncate(order)).collect();
        let zero = mixed[0].zero_like();
        let mut out = vec![zero; n * n * n * n];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let mut acc = zero;
                        for m in 0..n {
                            acc += g[l * n + m] * mixed[((m * n + i) * n + j) * n + k];
                        }
                        out[((i * n + j) * n + k) * n + l] = acc;
                    }
                }
            }
        }
        out
    }
}

/// Gauss-Jordan inverse of a jet matrix, pivoting on constant terms.
pub(crate) fn invert_jets(n: usize, m: &[TaylorScalar]) -> Result<Vec<TaylorScalar>> {
    let mut a = m.to_vec();
    let one = m[0].constant_like(1.0);
    let zero = m[0].zero_like();
    let mut inv: Vec<TaylorScalar> = (0..n * n)
        .map(|ij| if ij / n == ij % n { one } else { zero })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| a[r * n + col].value().abs().total_cmp(&a[s * n + col].value().abs()))
            .expect("non-empty pivot range");
        if a[pivot * n + col].value() == 0.0 {
            return Err(Error::NonFinite("metric inverse"));
        }
        if pivot != col {
            for c in 0..n {
                a.swap(pivot * n + c, col * n + c);
                inv.swap(pivot * n + c, col * n + c);
            }
        }
        let r = a[col * n + col].recip();
        for c in 0..n {
            a[col * n + c] = a[col * n + c] * r;
            inv[col * n + c] = inv[col * n + c] * r;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row * n + col];
            if factor.coeffs().iter().all(|&x| x == 0.0) {
                continue;
            }
            for c in 0..n {
                let (ac, ic) = (a[col * n + c], inv[col * n + c]);
                a[row * n + c] -= factor * ac;
                inv[row * n + c] -= factor * ic;
            }
        }
    }
    Ok(inv)
}

fn values(jets: &[TaylorScalar]) -> Vec<f64> {
    jets.iter().map(|j| j.value()).collect()
}

/// Christoffel symbols at `q`.
pub fn christoffel(m: &MetricChart, q: &ChartPoint) -> Result<Christoffel> {
    let conn = Connection::at(m, q, 1)?;
    Ok(Christoffel { n: conn.n, data: values(&conn.gamma) })
}

/// Fully lowered Riemann tensor at `q`.
pub fn riemann(m: &MetricChart, q: &ChartPoint) -> Result<RiemannTensor> {
    let conn = Connection::at(m, q, 2)?;
    let data = values(&conn.riemann_lowered());
    Ok(RiemannTensor { n: conn.n, data, metric: conn.metric_values() })
}

/// Sectional curvature `R(u,w,w,u)` of an orthonormal plane.
pub fn sectional(m: &MetricChart, sigma: &Plane2) -> Result<f64> {
    let r = riemann(m, &sigma.base)?;
    Ok(r.eval(&sigma.u, &sigma.w, &sigma.w, &sigma.u))
}

/// `g^ij ∂_j f` at `q`.
pub fn gradient(m: &MetricChart, f: &GermSpec, q: &ChartPoint) -> Result<TangentVector> {
    let g = m.metric_at(q)?;
    let fj = f.eval_jet(q, 1)?;
    let df: Vec<f64> = (0..m.dim()).map(|k| fj.d1(k)).collect();
    Ok(TangentVector::new(q.clone(), raise(&g, &df)?))
}

/// Lowered covariant Hessian `∂_i∂_j f - Γ^k_ij ∂_k f`.
pub fn covariant_hessian(m: &MetricChart, f: &GermSpec, q: &ChartPoint) -> Result<DMatrix<f64>> {
    let conn = Connection::at(m, q, 1)?;
    let fj = f.eval_jet(q, 2)?;
    let n = m.dim();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        let mut h = fj.d2(i, j);
        for k in 0..n {
            h -= conn.gamma(k, i, j).value() * fj.d1(k);
        }
        h
    }))
}

/// Jets of a germ together with the connection, enough for third covariant
/// derivatives and first derivatives of the conformal factor.
pub(crate) struct GermLocal {
    pub n: usize,
    pub conn: Connection,
    /// `∂_k f` as order-1 jets
    pub df: Vec<TaylorScalar>,
    /// lowered covariant Hessian as order-1 jets
    pub hess: Vec<TaylorScalar>,
}

impl GermLocal {
    pub fn at(m: &MetricChart, f: &GermSpec, q: &ChartPoint) -> Result<Self> {
        let n = m.dim();
        let conn = Connection::at(m, q, 2)?;
        let fj = f.eval_jet(q, 3)?;
        let first: Vec<TaylorScalar> = (0..n).map(|k| fj.partial(k)).collect();
        let df: Vec<TaylorScalar> = first.iter().map(|x| x.truncate(1)).collect();
        let mut hess = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut h = first[i].partial(j);
                for k in 0..n {
                    h -= *conn.gamma(k, i, j) * df[k];
                }
                hess.push(h);
            }
        }
        Ok(Self { n, conn, df, hess })
    }

    pub fn metric(&self) -> DMatrix<f64> {
        self.conn.metric_values()
    }

    pub fn gradient(&self) -> Result<Vec<f64>> {
        let df: Vec<f64> = self.df.iter().map(|x| x.value()).collect();
        raise(&self.metric(), &df)
    }

    /// `∇_m H_kj` at `[(m*n + k)*n + j]`.
    pub fn hessian_derivative(&self) -> Vec<f64> {
        let n = self.n;
        let h = |k: usize, j: usize| self.hess[k * n + j].value();
        let mut out = vec![0.0; n * n * n];
        for m in 0..n {
            for k in 0..n {
                for j in 0..n {
                    let mut v = self.hess[k * n + j].d1(m);
                    for p in 0..n {
                        v -= self.conn.gamma(p, m, k).value() * h(p, j);
                        v -= self.conn.gamma(p, m, j).value() * h(k, p);
                    }
                    out[(m * n + k) * n + j] = v;
                }
            }
        }
        out
    }

    /// `(∇_Z ∇²f)(X)` as a contravariant vector.
    pub fn third_covariant(&self, z: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        let t = self.hessian_derivative();
        let lowered: Vec<f64> = (0..n)
            .map(|k| {
                let mut acc = 0.0;
                for m in 0..n {
                    for j in 0..n {
                        acc += z[m] * x[j] * t[(m * n + k) * n + j];
                    }
                }
                acc
            })
            .collect();
        raise(&self.metric(), &lowered)
    }

    /// Trace of the Hessian divided by n, as an order-1 jet.
    pub fn conformal_factor_jet(&self) -> TaylorScalar {
        let n = self.n;
        let ginv: Vec<TaylorScalar> = self.conn.ginv.iter().map(|x| x.truncate(1)).collect();
        let mut acc = self.hess[0].zero_like();
        for i in 0..n {
            for j in 0..n {
                acc += ginv[i * n + j] * self.hess[j * n + i];
            }
        }
        acc / n as f64
    }
}

fn check_vector(m: &MetricChart, v: &TangentVector) -> Result<()> {
    if v.dim() != m.dim() {
        return Err(Error::DimensionMismatch { expected: m.dim(), got: v.dim() });
    }
    Ok(())
}

/// `∇³f(Z, X) = (∇_Z(∇²f))(X)`.
pub fn third_covariant(
    m: &MetricChart,
    f: &GermSpec,
    q: &ChartPoint,
    z: &TangentVector,
    x: &TangentVector,
) -> Result<TangentVector> {
    check_vector(m, z)?;
    check_vector(m, x)?;
    let local = GermLocal::at(m, f, q)?;
    Ok(TangentVector::new(q.clone(), local.third_covariant(&z.comps, &x.comps)?))
}

/// `‖∇³f(Z,X) - ∇³f(X,Z) - R(Z,X)∇f‖_g`; vanishes for every smooth germ.
pub fn ricci_identity_residual(
    m: &MetricChart,
    f: &GermSpec,
    q: &ChartPoint,
    z: &TangentVector,
    x: &TangentVector,
) -> Result<f64> {
    check_vector(m, z)?;
    check_vector(m, x)?;
    let local = GermLocal::at(m, f, q)?;
    let lhs_zx = local.third_covariant(&z.comps, &x.comps)?;
    let lhs_xz = local.third_covariant(&x.comps, &z.comps)?;
    let r = riemann(m, q)?;
    let grad = local.gradient()?;
    let rhs = r.apply(&z.comps, &x.comps, &grad)?;
    let diff: Vec<f64> = (0..m.dim()).map(|i| lhs_zx[i] - lhs_xz[i] - rhs[i]).collect();
    Ok(inner(r.metric(), &diff, &diff).sqrt())
}

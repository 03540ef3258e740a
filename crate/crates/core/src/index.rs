//! Poincaré–Hopf index of an isolated zero and the direction search around a
//! Morse critical point.
//!
//! The index is the degree of `y ↦ Y(y)/|Y(y)|` on a small sphere about the
//! zero. In the plane it is a winding number summed from signed angle
//! increments; in three dimensions it is the total signed solid angle of the
//! image of an icosphere divided by `4π`. At a nondegenerate zero both equal
//! the sign of the Jacobian determinant.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{inner, invert_jets, MetricChart, TangentVector};
use crate::germs::GermSpec;
use crate::jets::ChartPoint;
use crate::sampling;

/// Sides of the polygon used for the planar winding number.
pub const WINDING_SIDES: usize = 4096;
/// Subdivision level of the icosphere (5120 faces).
pub const ICOSPHERE_LEVEL: usize = 4;
const MAX_REFINEMENTS: usize = 3;
/// Relative floor below which the field counts as vanishing on the sphere.
const VANISHING_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexMethod {
    Winding2d,
    Simplicial3d,
    JacobianSign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexResult {
    pub index: i32,
    pub method: IndexMethod,
    pub radius: f64,
    /// evaluation points on the sphere (1 for the Jacobian method)
    pub samples: usize,
    /// smallest field norm seen on the sphere
    pub min_norm: f64,
}

/// A vector field on a chart.
pub trait VectorField: Sync {
    fn dim(&self) -> usize;

    fn eval(&self, y: &[f64]) -> Result<Vec<f64>>;

    /// Jacobian `∂Y^i/∂y^k`; central differences unless overridden.
    fn jacobian(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let h = 1e-6 * (1.0 + y.iter().fold(0.0f64, |a, b| a.max(b.abs())));
        let mut jac = DMatrix::zeros(n, n);
        for k in 0..n {
            let mut a = y.to_vec();
            let mut b = y.to_vec();
            a[k] += h;
            b[k] -= h;
            let (fa, fb) = (self.eval(&a)?, self.eval(&b)?);
            for i in 0..n {
                jac[(i, k)] = (fa[i] - fb[i]) / (2.0 * h);
            }
        }
        Ok(jac)
    }
}

/// Closure-backed field.
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> VectorField for FnField<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, y: &[f64]) -> Result<Vec<f64>> {
        let v = (self.f)(y);
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        Ok(v)
    }
}

/// Coordinate components `g^ij ∂_j f` of a Riemannian gradient.
pub struct GradientField<'a> {
    pub metric: &'a MetricChart,
    pub germ: &'a GermSpec,
}

impl VectorField for GradientField<'_> {
    fn dim(&self) -> usize {
        self.metric.dim()
    }

    fn eval(&self, y: &[f64]) -> Result<Vec<f64>> {
        Ok(crate::geometry::gradient(self.metric, self.germ, &ChartPoint::from(y))?.comps)
    }

    fn jacobian(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let q = ChartPoint::from(y);
        let g = self.metric.component_jets(&q, 1)?;
        let ginv = invert_jets(n, &g)?;
        let f = self.germ.eval_jet(&q, 2)?;
        let df: Vec<_> = (0..n).map(|j| f.partial(j)).collect();
        let mut jac = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut comp = df[0].zero_like();
            for j in 0..n {
                comp += ginv[i * n + j] * df[j];
            }
            for k in 0..n {
                jac[(i, k)] = comp.d1(k);
            }
        }
        Ok(jac)
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    norm
}

fn round_degree(total: f64, full_turn: f64) -> Result<i32> {
    let d = total / full_turn;
    let k = d.round();
    if (d - k).abs() > 1e-6 {
        return Err(Error::NonFinite("degree is not an integer"));
    }
    Ok(k as i32)
}

fn check_vanishing(norms: &[f64]) -> Result<f64> {
    let max = norms.iter().fold(0.0f64, |a, &b| a.max(b));
    let min = norms.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if !(min > VANISHING_FLOOR * max.max(1e-300)) || !min.is_finite() {
        return Err(Error::Inconclusive { min_norm: min });
    }
    Ok(min)
}

/// Winding number of the field around the circle of radius `eps` about `p`.
pub fn winding_2d(field: &dyn VectorField, p: &ChartPoint, eps: f64) -> Result<IndexResult> {
    if field.dim() != 2 || p.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: field.dim() });
    }
    let mut sides = WINDING_SIDES;
    for _ in 0..=MAX_REFINEMENTS {
        let mut dirs = Vec::with_capacity(sides);
        let mut norms = Vec::with_capacity(sides);
        for k in 0..sides {
            let t = std::f64::consts::TAU * k as f64 / sides as f64;
            let y = [p.coords[0] + eps * t.cos(), p.coords[1] + eps * t.sin()];
            let mut v = field.eval(&y)?;
            norms.push(normalize(&mut v));
            dirs.push(v);
        }
        let min_norm = check_vanishing(&norms)?;
        let mut total = 0.0;
        let mut coarse = false;
        for k in 0..sides {
            let (a, b) = (&dirs[k], &dirs[(k + 1) % sides]);
            let step = (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1]);
            if step.abs() >= std::f64::consts::FRAC_PI_2 {
                coarse = true;
                break;
            }
            total += step;
        }
        if coarse {
            sides *= 2;
            continue;
        }
        return Ok(IndexResult {
            index: round_degree(total, std::f64::consts::TAU)?,
            method: IndexMethod::Winding2d,
            radius: eps,
            samples: sides,
            min_norm,
        });
    }
    Err(Error::ResolutionExhausted { refinements: MAX_REFINEMENTS })
}

/// Unit icosphere with outward-oriented faces.
pub fn icosphere(level: usize) -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<[f64; 3]> = vec![
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    let unit = |v: [f64; 3]| {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        [v[0] / n, v[1] / n, v[2] / n]
    };
    verts.iter_mut().for_each(|v| *v = unit(*v));
    for _ in 0..level {
        let mut midpoint = std::collections::HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut mid = |a: usize, b: usize, verts: &mut Vec<[f64; 3]>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoint.entry(key).or_insert_with(|| {
                let (va, vb) = (verts[a], verts[b]);
                verts.push(unit([va[0] + vb[0], va[1] + vb[1], va[2] + vb[2]]));
                verts.len() - 1
            })
        };
        for &[a, b, c] in &faces {
            let ab = mid(a, b, &mut verts);
            let bc = mid(b, c, &mut verts);
            let ca = mid(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    (verts, faces)
}

fn dot3(a: &[f64], b: &[f64]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Signed solid angle of the spherical triangle `(a, b, c)` of unit vectors.
fn solid_angle(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let cross = [b[1] * c[2] - b[2] * c[1], b[2] * c[0] - b[0] * c[2], b[0] * c[1] - b[1] * c[0]];
    let triple = dot3(a, &cross);
    2.0 * triple.atan2(1.0 + dot3(a, b) + dot3(b, c) + dot3(c, a))
}

/// Degree of the normalized field on the sphere of radius `eps` about `p`,
/// from the signed solid angles of the image of an icosphere.
pub fn simplicial_3d(field: &dyn VectorField, p: &ChartPoint, eps: f64) -> Result<IndexResult> {
    if field.dim() != 3 || p.dim() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, got: field.dim() });
    }
    for level in ICOSPHERE_LEVEL..=ICOSPHERE_LEVEL + MAX_REFINEMENTS {
        let (verts, faces) = icosphere(level);
        let mut images = Vec::with_capacity(verts.len());
        let mut norms = Vec::with_capacity(verts.len());
        for v in &verts {
            let y: Vec<f64> = (0..3).map(|i| p.coords[i] + eps * v[i]).collect();
            let mut img = field.eval(&y)?;
            norms.push(normalize(&mut img));
            images.push(img);
        }
        let min_norm = check_vanishing(&norms)?;
        // every image edge must stay well inside a hemisphere
        let coarse = faces.iter().any(|&[a, b, c]| {
            dot3(&images[a], &images[b]) <= 0.0
                || dot3(&images[b], &images[c]) <= 0.0
                || dot3(&images[c], &images[a]) <= 0.0
        });
        if coarse {
            continue;
        }
        let total: f64 = faces
            .iter()
            .map(|&[a, b, c]| solid_angle(&images[a], &images[b], &images[c]))
            .sum();
        return Ok(IndexResult {
            index: round_degree(total, 4.0 * std::f64::consts::PI)?,
            method: IndexMethod::Simplicial3d,
            radius: eps,
            samples: verts.len(),
            min_norm,
        });
    }
    Err(Error::ResolutionExhausted { refinements: MAX_REFINEMENTS })
}

/// `sign(det DY(p))` at a nondegenerate zero.
pub fn jacobian_sign(field: &dyn VectorField, p: &ChartPoint) -> Result<IndexResult> {
    let n = field.dim();
    if p.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: p.dim() });
    }
    let jac = field.jacobian(&p.coords)?;
    let det = jac.determinant();
    let scale = jac.norm().powi(n as i32).max(f64::MIN_POSITIVE);
    if !(det.abs() > 1e-10 * scale) {
        return Err(Error::DegenerateZero { det });
    }
    let at_p = field.eval(&p.coords)?;
    Ok(IndexResult {
        index: if det > 0.0 { 1 } else { -1 },
        method: IndexMethod::JacobianSign,
        radius: 0.0,
        samples: 1,
        min_norm: at_p.iter().map(|x| x * x).sum::<f64>().sqrt(),
    })
}

/// Index of the isolated zero at `p`: winding number in the plane, simplicial
/// degree in three dimensions, Jacobian sign otherwise.
pub fn ph_index(field: &dyn VectorField, p: &ChartPoint, eps: f64) -> Result<IndexResult> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {eps}")));
    }
    match field.dim() {
        2 => winding_2d(field, p, eps),
        3 => simplicial_3d(field, p, eps),
        _ => jacobian_sign(field, p),
    }
}

/// Index of `∇f` at the germ's base point.
pub fn index_of_gradient(m: &MetricChart, f: &GermSpec, eps: f64) -> Result<IndexResult> {
    ph_index(&GradientField { metric: m, germ: f }, f.base(), eps)
}

/// A point on the chart sphere of a given radius where `∇f` points along the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attainment {
    pub radius: f64,
    pub point: ChartPoint,
    /// g(p)-angle between `∇f(point)` and the target direction
    pub angle: f64,
}

/// Number of coarse seed directions for the attainment search.
const ATTAIN_SEEDS: usize = 64;

/// For each radius, the point on the chart sphere about the base whose
/// gradient direction is closest to `v`.
///
/// Directions at different points are compared through raw coordinate
/// components, measured with the metric at the base point.
pub fn direction_attainment(
    m: &MetricChart,
    f: &GermSpec,
    v: &TangentVector,
    radii: &[f64],
    tol_angle: f64,
) -> Result<Vec<Attainment>> {
    let n = m.dim();
    if v.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: v.dim() });
    }
    let p = f.base();
    let g0 = m.metric_at(p)?;
    let vnorm = inner(&g0, &v.comps, &v.comps).sqrt();
    if !(vnorm > 0.0) {
        return Err(Error::InvalidParameter("target direction is zero".into()));
    }
    let target: Vec<f64> = v.comps.iter().map(|x| x / vnorm).collect();
    let angle_to = |w: &[f64]| -> f64 {
        let wn = inner(&g0, w, w).sqrt();
        let c = inner(&g0, w, &target) / wn;
        let perp: Vec<f64> = (0..n).map(|i| w[i] / wn - c * target[i]).collect();
        inner(&g0, &perp, &perp).sqrt().atan2(c)
    };

    // linearization: ∇f(p + y) ≈ g0⁻¹ H y, so y ∝ H⁻¹ g0 v
    let fj = f.eval_jet(p, 2)?;
    let hess = DMatrix::from_fn(n, n, |i, j| fj.d2(i, j));
    let mut seeds: Vec<Vec<f64>> = sampling::sphere_directions(n, ATTAIN_SEEDS);
    if let Some(hinv) = hess.try_inverse() {
        let gv = &g0 * nalgebra::DVector::from_column_slice(&target);
        let mut y: Vec<f64> = (hinv * gv).iter().copied().collect();
        if normalize(&mut y).is_finite() {
            seeds.insert(0, y);
        }
    }

    let mut out = Vec::with_capacity(radii.len());
    for &r in radii {
        let objective = |d: &[f64]| -> f64 {
            let q = ChartPoint::new((0..n).map(|i| p.coords[i] + r * d[i]).collect());
            match crate::geometry::gradient(m, f, &q) {
                Ok(grad) => angle_to(&grad.comps),
                Err(_) => f64::INFINITY,
            }
        };
        let (mut best_d, mut best) = (seeds[0].clone(), f64::INFINITY);
        for d in &seeds {
            let a = objective(d);
            if a < best {
                best = a;
                best_d = d.clone();
            }
        }
        let (d, angle) = refine_on_sphere(&objective, best_d, best);
        if !(angle <= tol_angle) {
            return Err(Error::DirectionStalled { radius: r, angle, tol: tol_angle });
        }
        out.push(Attainment {
            radius: r,
            point: ChartPoint::new((0..n).map(|i| p.coords[i] + r * d[i]).collect()),
            angle,
        });
    }
    Ok(out)
}

/// Pattern search over unit vectors, stepping along a tangent frame.
fn refine_on_sphere(objective: &dyn Fn(&[f64]) -> f64, mut d: Vec<f64>, mut value: f64) -> (Vec<f64>, f64) {
    let n = d.len();
    let mut step = 0.1;
    let mut iterations = 0;
    while step > 1e-13 && iterations < 5000 {
        iterations += 1;
        let frame = tangent_frame(&d);
        let mut improved = false;
        for t in &frame {
            for sign in [1.0, -1.0] {
                let mut cand: Vec<f64> = (0..n).map(|i| d[i] + sign * step * t[i]).collect();
                normalize(&mut cand);
                let val = objective(&cand);
                if val < value {
                    value = val;
                    d = cand;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (d, value)
}

/// Orthonormal basis of the complement of the unit vector `d`.
fn tangent_frame(d: &[f64]) -> Vec<Vec<f64>> {
    let n = d.len();
    let mut basis: Vec<Vec<f64>> = vec![d.to_vec()];
    for k in 0..n {
        let mut e = vec![0.0; n];
        e[k] = 1.0;
        for b in &basis {
            let p: f64 = e.iter().zip(b).map(|(x, y)| x * y).sum();
            e.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
        }
        let norm = e.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            e.iter_mut().for_each(|x| *x /= norm);
            basis.push(e);
        }
        if basis.len() == n {
            break;
        }
    }
    basis.remove(0);
    basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::germs::{model_germ, Model};

    #[test]
    fn saddle_and_linear_fields() {
        let o = ChartPoint::origin(2);
        let saddle = FnField::new(2, |y: &[f64]| vec![y[0], -y[1]]);
        assert_eq!(ph_index(&saddle, &o, 0.1).unwrap().index, -1);
        let rot = FnField::new(2, |y: &[f64]| vec![2.0 * y[0] - y[1], y[0] + 0.5 * y[1]]);
        assert_eq!(ph_index(&rot, &o, 0.1).unwrap().index, 1);
        // z² has index 2
        let z2 = FnField::new(2, |y: &[f64]| vec![y[0] * y[0] - y[1] * y[1], 2.0 * y[0] * y[1]]);
        let r = winding_2d(&z2, &o, 0.5).unwrap();
        assert_eq!(r.index, 2);
        assert_eq!(r.samples, WINDING_SIDES);
        assert!(matches!(jacobian_sign(&z2, &o), Err(Error::DegenerateZero { .. })));
    }

    #[test]
    fn icosphere_has_expected_size_and_orientation() {
        let (v, f) = icosphere(ICOSPHERE_LEVEL);
        assert_eq!(f.len(), 5120);
        assert_eq!(v.len(), 2562);
        let total: f64 = f.iter().map(|&[a, b, c]| solid_angle(&v[a], &v[b], &v[c])).sum();
        assert!((total - 4.0 * std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn simplicial_degree_of_reflections() {
        let o = ChartPoint::origin(3);
        let id = FnField::new(3, |y: &[f64]| y.to_vec());
        assert_eq!(simplicial_3d(&id, &o, 0.2).unwrap().index, 1);
        let refl = FnField::new(3, |y: &[f64]| vec![-y[0], y[1], y[2]]);
        assert_eq!(simplicial_3d(&refl, &o, 0.2).unwrap().index, -1);
        let anti = FnField::new(3, |y: &[f64]| vec![-y[0], -y[1], -y[2]]);
        assert_eq!(simplicial_3d(&anti, &o, 0.2).unwrap().index, -1);
    }

    #[test]
    fn vanishing_on_sphere_is_inconclusive() {
        let o = ChartPoint::origin(2);
        let f = FnField::new(2, |y: &[f64]| vec![y[0] * y[0] + y[1] * y[1] - 0.01, 0.0]);
        assert!(matches!(winding_2d(&f, &o, 0.1), Err(Error::Inconclusive { .. })));
    }

    #[test]
    fn gradient_field_jacobian_matches_finite_differences() {
        let (m, f) = model_germ(Model::Sphere { c: 1.0 }, 3).unwrap();
        let field = GradientField { metric: &m, germ: &f };
        let y = [0.1, -0.2, 0.3];
        let exact = field.jacobian(&y).unwrap();
        let fd = FnField::new(3, |y: &[f64]| field.eval(y).unwrap()).jacobian(&y).unwrap();
        assert!((exact - fd).norm() < 1e-7);
    }

    #[test]
    fn model_gradient_indices() {
        let (m, f) = model_germ(Model::Sphere { c: 1.0 }, 2).unwrap();
        assert_eq!(index_of_gradient(&m, &f, 0.1).unwrap().index, 1);
        let (m, f) = model_germ(Model::Hyperbolic { c: 1.0 }, 3).unwrap();
        assert_eq!(index_of_gradient(&m, &f, 0.1).unwrap().index, 1);
        let m = catalog::euclidean(2).unwrap();
        assert_eq!(index_of_gradient(&m, &catalog::saddle_2d(), 0.1).unwrap().index, -1);
    }

    #[test]
    fn attainment_on_flat_and_saddle() {
        let (m, f) = model_germ(Model::Euclidean, 3).unwrap();
        let p = f.base().clone();
        let v = TangentVector::new(p.clone(), vec![0.0, 0.6, 0.8]);
        let hits = direction_attainment(&m, &f, &v, &[0.1, 0.01], 1e-3).unwrap();
        for h in &hits {
            assert!(h.angle < 1e-12);
            let want = [0.0, 0.6 * h.radius, 0.8 * h.radius];
            assert!(h.point.coords.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-12));
        }
        let m = catalog::euclidean(2).unwrap();
        let f = catalog::saddle_2d();
        let v = TangentVector::new(p.clone(), vec![1.0, 0.0]);
        let hits = direction_attainment(&m, &f, &TangentVector::new(ChartPoint::origin(2), v.comps), &[0.1], 1e-3)
            .unwrap();
        assert!(hits[0].angle <= 1e-10);
        assert!(hits[0].point.coords[1].abs() < 1e-10);
    }
}

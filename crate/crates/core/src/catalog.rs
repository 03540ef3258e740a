//! Catalog of chart metrics and the germs that live on them.
//!
//! Model spaces use charts that are smooth at the origin: the Euclidean chart,
//! stereographic coordinates for `S^n(c)` and the Poincaré ball for
//! `H^n(-c)`. Surfaces of revolution `dr² + φ(r)² dθ²` are written in
//! Cartesian coordinates `x = r(cos θ, sin θ)`, where the metric becomes
//! `ψ(s)² δ + χ(s) x xᵀ` with `s = r²`, `ψ = φ(r)/r` and `χ = (1 - ψ²)/s`;
//! both are entire in `s` for odd analytic profiles with `φ'(0) = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::MetricChart;
use crate::germs::GermSpec;
use crate::jets::{ChartPoint, TaylorScalar};

/// Number of Maclaurin terms used for the profile series in `s = r²`.
const SERIES_TERMS: usize = 40;

fn norm_sq(x: &[TaylorScalar]) -> TaylorScalar {
    x.iter().fold(x[0].zero_like(), |acc, xi| acc + *xi * *xi)
}

fn point_norm_sq(q: &ChartPoint) -> f64 {
    q.norm_sq()
}

pub fn euclidean(n: usize) -> Result<MetricChart> {
    MetricChart::conformally_flat(format!("euclidean{n}"), n, |x| x[0].constant_like(1.0))
}

/// Stereographic chart of `S^n(c)`: `g = 4δ / (1 + c|x|²)²`.
pub fn sphere(n: usize, c: f64) -> Result<MetricChart> {
    positive("c", c)?;
    let chart = MetricChart::conformally_flat(format!("sphere{n}(c={c})"), n, move |x| {
        4.0 / (norm_sq(x) * c + 1.0).powi(2)
    })?;
    Ok(chart.with_scale(1.0 / c.sqrt()))
}

/// Poincaré ball chart of `H^n(-c)`: `g = 4δ / (1 - c|x|²)²`, `c|x|² < 1`.
pub fn hyperbolic(n: usize, c: f64) -> Result<MetricChart> {
    positive("c", c)?;
    let chart = MetricChart::conformally_flat(format!("hyperbolic{n}(c={c})"), n, move |x| {
        4.0 / (1.0 - norm_sq(x) * c).powi(2)
    })?;
    Ok(chart
        .with_scale(1.0 / c.sqrt())
        .with_guard(move |q| c * point_norm_sq(q) < 1.0))
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
    }
}

/// Radial profile `φ` of a surface of revolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// `φ = sin r`, the unit sphere
    Sin,
    /// `φ = sinh r`, the hyperbolic plane
    Sinh,
    /// `φ = r`, the flat plane
    Id,
    /// `φ = r + a r³`
    Cubic(f64),
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

impl Profile {
    /// Maclaurin coefficients of `ψ(s) = φ(√s)/√s`.
    pub fn psi_series(self) -> Vec<f64> {
        match self {
            Profile::Sin => (0..SERIES_TERMS)
                .map(|k| (-1.0f64).powi(k as i32) / factorial(2 * k + 1))
                .collect(),
            Profile::Sinh => (0..SERIES_TERMS).map(|k| 1.0 / factorial(2 * k + 1)).collect(),
            Profile::Id => vec![1.0],
            Profile::Cubic(a) => vec![1.0, a],
        }
    }

    /// Maclaurin coefficients of `χ(s) = (1 - ψ²)/s`.
    pub fn chi_series(self) -> Vec<f64> {
        let psi = self.psi_series();
        let len = psi.len() * 2 - 1;
        let mut sq = vec![0.0; len];
        for (i, a) in psi.iter().enumerate() {
            for (j, b) in psi.iter().enumerate() {
                sq[i + j] += a * b;
            }
        }
        sq.truncate(SERIES_TERMS.max(3));
        // 1 - ψ² has no constant term since ψ(0) = 1
        let chi: Vec<f64> = sq.iter().skip(1).map(|v| -v).collect();
        if chi.is_empty() {
            vec![0.0]
        } else {
            chi
        }
    }

    /// Maclaurin coefficients in `s` of `F(r) = ∫_0^r φ`, which has gradient `φ ∂_r`.
    pub fn potential_series(self) -> Vec<f64> {
        match self {
            Profile::Sin => (0..SERIES_TERMS)
                .map(|k| if k == 0 { 0.0 } else { -(-1.0f64).powi(k as i32) / factorial(2 * k) })
                .collect(),
            Profile::Sinh => (0..SERIES_TERMS)
                .map(|k| if k == 0 { 0.0 } else { 1.0 / factorial(2 * k) })
                .collect(),
            Profile::Id => vec![0.0, 0.5],
            Profile::Cubic(a) => vec![0.0, 0.5, a / 4.0],
        }
    }

    /// Largest chart radius used by the chart guard.
    pub fn max_radius(self) -> f64 {
        match self {
            Profile::Sin => 3.0,
            _ => 4.0,
        }
    }

    pub fn label(self) -> String {
        match self {
            Profile::Sin => "sin".into(),
            Profile::Sinh => "sinh".into(),
            Profile::Id => "id".into(),
            Profile::Cubic(a) => format!("cubic({a})"),
        }
    }
}

/// Surface of revolution `dr² + φ(r)² dθ²` in Cartesian coordinates.
pub fn revolution(profile: Profile) -> Result<MetricChart> {
    let psi = profile.psi_series();
    let chi = profile.chi_series();
    let r_max = profile.max_radius();
    let chart = MetricChart::new(format!("revolution({})", profile.label()), 2, move |x| {
        let s = norm_sq(x);
        let p = s.compose_series(&psi);
        let p2 = p * p;
        let k = s.compose_series(&chi);
        vec![p2 + k * x[0] * x[0], k * x[0] * x[1], p2 + k * x[1] * x[1]]
    })?;
    Ok(chart.with_guard(move |q| point_norm_sq(q) < r_max * r_max))
}

/// The radial germ `F(r) = ∫_0^r φ`; conformal with factor `φ'(r)`.
pub fn revolution_germ(profile: Profile) -> GermSpec {
    let series = profile.potential_series();
    GermSpec::new(
        format!("revolution-potential({})", profile.label()),
        ChartPoint::origin(2),
        move |x| norm_sq(x).compose_series(&series),
    )
}

/// Smooth scalar used to perturb a metric conformally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bump {
    /// `exp(-|x - x0|² / w²)` with `x0 = (0.3, 0.1, 0, …)·L`, `w = 0.5·L`
    Gaussian,
    /// `x_0 x_1 / L²`
    Saddle,
}

impl Bump {
    pub fn eval(self, x: &[TaylorScalar], scale: f64) -> TaylorScalar {
        match self {
            Bump::Gaussian => {
                let w2 = (0.5 * scale).powi(2);
                let mut d = x[0].zero_like();
                for (i, xi) in x.iter().enumerate() {
                    let c = match i {
                        0 => 0.3 * scale,
                        1 => 0.1 * scale,
                        _ => 0.0,
                    };
                    let t = *xi - c;
                    d += t * t;
                }
                (-d / w2).exp()
            }
            Bump::Saddle => x[0] * x[1] / (scale * scale),
        }
    }
}

/// `e^{2εu} g` for a named bump `u`.
pub fn conformal_perturbation(base: &MetricChart, bump: Bump, eps: f64) -> Result<MetricChart> {
    if base.dim() < 2 {
        return Err(Error::InvalidParameter("perturbation needs dimension >= 2".into()));
    }
    let scale = base.scale();
    let name = format!("{}*exp(2*{eps}*{:?})", base.name(), bump);
    Ok(base.conformally_rescaled(name, move |x| bump.eval(x, scale) * eps))
}

/// `-x_0² - … - x_{k-1}² + x_k² + … + x_{n-1}²`, Morse index `k` at the origin.
pub fn quadratic_germ(n: usize, k: usize) -> Result<GermSpec> {
    if k > n {
        return Err(Error::InvalidParameter(format!("Morse index {k} exceeds dimension {n}")));
    }
    Ok(GermSpec::new(format!("quadratic(n={n},k={k})"), ChartPoint::origin(n), move |x| {
        x.iter().enumerate().fold(x[0].zero_like(), |acc, (i, xi)| {
            if i < k {
                acc - *xi * *xi
            } else {
                acc + *xi * *xi
            }
        })
    }))
}

/// `x² - y²` on the plane.
pub fn saddle_2d() -> GermSpec {
    GermSpec::new("saddle2d", ChartPoint::origin(2), |x| x[0] * x[0] - x[1] * x[1])
}

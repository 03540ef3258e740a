//! Deterministic low-discrepancy point sets.
//!
//! Points come from the additive recurrence `frac(0.5 + i·α)` whose
//! increments are inverse powers of the generalised golden ratio of the
//! dimension. Directions are obtained by pushing the unit-cube points through
//! the inverse normal CDF and normalising.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::jets::ChartPoint;

/// Unique positive root of `x^(d+1) = x + 1`.
fn generalized_golden(d: usize) -> f64 {
    let mut x = 2.0f64;
    for _ in 0..64 {
        x = (1.0 + x).powf(1.0 / (d as f64 + 1.0));
    }
    x
}

/// Additive-recurrence sequence in `[0,1)^d`.
#[derive(Debug, Clone)]
pub struct Recurrence {
    alpha: Vec<f64>,
}

impl Recurrence {
    pub fn new(d: usize) -> Self {
        let phi = generalized_golden(d);
        let alpha = (1..=d).map(|k| phi.powi(-(k as i32)).fract()).collect();
        Self { alpha }
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    /// The `i`-th point (zero-based).
    pub fn point(&self, i: usize) -> Vec<f64> {
        self.alpha
            .iter()
            .map(|a| (0.5 + (i as f64 + 1.0) * a).fract())
            .collect()
    }
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

fn gaussianize(normal: &Normal, u: &[f64]) -> Vec<f64> {
    u.iter()
        .map(|&p| normal.inverse_cdf(p.clamp(1e-12, 1.0 - 1e-12)))
        .collect()
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

/// `count` directions on the unit sphere `S^{n-1}`.
pub fn sphere_directions(n: usize, count: usize) -> Vec<Vec<f64>> {
    if n == 1 {
        return (0..count).map(|i| vec![if i % 2 == 0 { 1.0 } else { -1.0 }]).collect();
    }
    if n == 2 {
        let seq = Recurrence::new(1);
        return (0..count)
            .map(|i| {
                let t = std::f64::consts::TAU * seq.point(i)[0];
                vec![t.cos(), t.sin()]
            })
            .collect();
    }
    let seq = Recurrence::new(n);
    let normal = standard_normal();
    (0..count)
        .map(|i| normalized(gaussianize(&normal, &seq.point(i))))
        .collect()
}

/// Points on concentric spheres about `center`, `per_shell` on each radius.
pub fn shells(center: &ChartPoint, radii: &[f64], per_shell: usize) -> Vec<ChartPoint> {
    let dirs = sphere_directions(center.dim(), per_shell * radii.len());
    radii
        .iter()
        .enumerate()
        .flat_map(|(s, &r)| {
            dirs[s * per_shell..(s + 1) * per_shell].iter().map(move |d| {
                ChartPoint::new(center.coords.iter().zip(d).map(|(c, x)| c + r * x).collect())
            })
        })
        .collect()
}

/// `count` points filling the ball of radius `radius` about `center` with
/// uniform volume density.
pub fn ball(center: &ChartPoint, radius: f64, count: usize) -> Vec<ChartPoint> {
    let n = center.dim();
    let seq = Recurrence::new(n + 1);
    let normal = standard_normal();
    (0..count)
        .map(|i| {
            let u = seq.point(i);
            let dir = normalized(gaussianize(&normal, &u[..n]));
            let r = radius * u[n].powf(1.0 / n as f64);
            ChartPoint::new(center.coords.iter().zip(&dir).map(|(c, d)| c + r * d).collect())
        })
        .collect()
}

/// `count` Euclidean-orthonormal pairs in `R^n`, `n >= 2`.
pub fn orthonormal_pairs(n: usize, count: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let seq = Recurrence::new(2 * n);
    let normal = standard_normal();
    let mut out = Vec::with_capacity(count);
    let mut i = 0;
    while out.len() < count {
        let g = gaussianize(&normal, &seq.point(i));
        i += 1;
        let u = normalized(g[..n].to_vec());
        let mut w = g[n..].to_vec();
        let p: f64 = u.iter().zip(&w).map(|(a, b)| a * b).sum();
        w.iter_mut().zip(&u).for_each(|(b, a)| *b -= p * a);
        let nw = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nw < 1e-8 {
            continue;
        }
        out.push((u, w.into_iter().map(|x| x / nw).collect()));
    }
    out
}

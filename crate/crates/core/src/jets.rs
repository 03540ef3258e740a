//! Truncated multivariate Taylor arithmetic.
//!
//! A [`TaylorScalar`] stores the Taylor coefficients of a smooth function at a
//! fixed expansion point, up to total degree three, in a dense graded layout.
//! Coefficients follow the `∂^α f / α!` convention, so the constant slot is the
//! function value and a mixed partial is recovered by multiplying with `α!`.
//!
//! Everything else in the crate differentiates through this type: metric
//! components and germs are written once as closures over jets and every
//! derivative the geometry needs is read back from the coefficients.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest number of chart variables a jet may carry.
pub const MAX_VARS: usize = 6;
/// Largest truncation order.
pub const MAX_ORDER: usize = 3;
/// `C(MAX_VARS + MAX_ORDER, MAX_ORDER)`.
const MAX_COEFFS: usize = 84;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum JetError {
    #[error("variable index {index} out of range for {n_vars} variables")]
    VarIndexOutOfRange { index: usize, n_vars: usize },
    #[error("unsupported truncation order {0}")]
    UnsupportedOrder(usize),
    #[error("unsupported number of variables {0} (max {MAX_VARS})")]
    UnsupportedVars(usize),
    #[error("multi-index of degree {degree} exceeds jet order {order}")]
    OrderExceeded { degree: usize, order: usize },
    #[error("multi-index has {got} entries, jet has {n_vars} variables")]
    MultiIndexLength { got: usize, n_vars: usize },
    #[error("incompatible jets: ({0} vars, order {1}) vs ({2} vars, order {3})")]
    Incompatible(usize, usize, usize, usize),
    #[error("{op} is singular at constant term {value}")]
    Domain { op: &'static str, value: f64 },
}

/// A point in chart coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub coords: Vec<f64>,
}

impl ChartPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn origin(n: usize) -> Self {
        Self { coords: vec![0.0; n] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn is_finite(&self) -> bool {
        self.coords.iter().all(|x| x.is_finite())
    }

    pub fn norm_sq(&self) -> f64 {
        self.coords.iter().map(|x| x * x).sum()
    }

    /// Jets of every coordinate function at this point.
    pub fn lift_all(&self, order: usize) -> Result<Vec<TaylorScalar>, JetError> {
        (0..self.dim()).map(|i| lift_any_order(self, i, order)).collect()
    }
}

impl From<Vec<f64>> for ChartPoint {
    fn from(coords: Vec<f64>) -> Self {
        Self::new(coords)
    }
}

impl From<&[f64]> for ChartPoint {
    fn from(coords: &[f64]) -> Self {
        Self::new(coords.to_vec())
    }
}

/// Monomial bookkeeping for one `(n_vars, order)` pair.
struct Layout {
    n: usize,
    order: usize,
    monomials: Vec<[u8; MAX_VARS]>,
    /// base-4 code of a multi-index -> dense slot
    lookup: Vec<u16>,
    /// (lhs slot, rhs slot, output slot) for every product that survives truncation
    products: Vec<(u16, u16, u16)>,
    /// per variable: (source slot, slot in the order-1 layout, exponent factor)
    partials: Vec<Vec<(u16, u16, f64)>>,
}

const ABSENT: u16 = u16::MAX;

fn code(alpha: &[u8]) -> usize {
    alpha.iter().rev().fold(0usize, |acc, &a| acc * 4 + a as usize)
}

impl Layout {
    fn build(n: usize, order: usize) -> Self {
        let mut monomials = Vec::new();
        for deg in 0..=order {
            let mut alpha = [0u8; MAX_VARS];
            push_degree(n, deg, 0, &mut alpha, &mut monomials);
        }
        let degree: Vec<u8> = monomials
            .iter()
            .map(|m| m.iter().sum())
            .collect();
        let mut lookup = vec![ABSENT; 4usize.pow(n as u32)];
        for (slot, m) in monomials.iter().enumerate() {
            lookup[code(&m[..n])] = slot as u16;
        }
        let mut products = Vec::new();
        for (a, ma) in monomials.iter().enumerate() {
            for (b, mb) in monomials.iter().enumerate() {
                if (degree[a] + degree[b]) as usize > order {
                    continue;
                }
                let mut sum = [0u8; MAX_VARS];
                for k in 0..n {
                    sum[k] = ma[k] + mb[k];
                }
                products.push((a as u16, b as u16, lookup[code(&sum[..n])]));
            }
        }
        Self {
            n,
            order,
            monomials,
            lookup,
            products,
            partials: Vec::new(),
        }
    }

    fn slot(&self, alpha: &[u8]) -> Option<usize> {
        let s = *self.lookup.get(code(alpha))?;
        (s != ABSENT).then_some(s as usize)
    }

    fn len(&self) -> usize {
        self.monomials.len()
    }
}

fn push_degree(
    n: usize,
    remaining: usize,
    var: usize,
    alpha: &mut [u8; MAX_VARS],
    out: &mut Vec<[u8; MAX_VARS]>,
) {
    if var + 1 == n {
        alpha[var] = remaining as u8;
        out.push(*alpha);
        alpha[var] = 0;
        return;
    }
    for a in (0..=remaining).rev() {
        alpha[var] = a as u8;
        push_degree(n, remaining - a, var + 1, alpha, out);
    }
    alpha[var] = 0;
}

fn layouts() -> &'static [Layout] {
    static LAYOUTS: OnceLock<Vec<Layout>> = OnceLock::new();
    LAYOUTS.get_or_init(|| {
        let mut all: Vec<Layout> = (1..=MAX_VARS)
            .flat_map(|n| (0..=MAX_ORDER).map(move |o| Layout::build(n, o)))
            .collect();
        // derivative maps need the lower-order layout, so fill them in afterwards
        for idx in 0..all.len() {
            let (n, order) = (all[idx].n, all[idx].order);
            if order == 0 {
                all[idx].partials = vec![Vec::new(); n];
                continue;
            }
            let lower = &all[layout_index(n, order - 1)];
            let mut partials = vec![Vec::new(); n];
            for (slot, m) in all[idx].monomials.iter().enumerate() {
                for (var, map) in partials.iter_mut().enumerate() {
                    if m[var] == 0 {
                        continue;
                    }
                    let mut reduced = *m;
                    reduced[var] -= 1;
                    let dst = lower.slot(&reduced[..n]).expect("lower layout slot");
                    map.push((slot as u16, dst as u16, m[var] as f64));
                }
            }
            all[idx].partials = partials;
        }
        all
    })
}

fn layout_index(n: usize, order: usize) -> usize {
    (n - 1) * (MAX_ORDER + 1) + order
}

fn layout(n: usize, order: usize) -> Result<&'static Layout, JetError> {
    if n == 0 || n > MAX_VARS {
        return Err(JetError::UnsupportedVars(n));
    }
    if order > MAX_ORDER {
        return Err(JetError::UnsupportedOrder(order));
    }
    Ok(&layouts()[layout_index(n, order)])
}

/// Truncated Taylor expansion of a scalar function of `n_vars` variables.
#[derive(Clone, Copy)]
pub struct TaylorScalar {
    layout: &'static Layout,
    c: [f64; MAX_COEFFS],
}

/// Coordinate-function jet at `point`; `order` must be 2 or 3.
pub fn lift(point: &ChartPoint, var_index: usize, order: usize) -> Result<TaylorScalar, JetError> {
    if !(2..=MAX_ORDER).contains(&order) {
        return Err(JetError::UnsupportedOrder(order));
    }
    lift_any_order(point, var_index, order)
}

pub(crate) fn lift_any_order(
    point: &ChartPoint,
    var_index: usize,
    order: usize,
) -> Result<TaylorScalar, JetError> {
    let n = point.dim();
    if var_index >= n {
        return Err(JetError::VarIndexOutOfRange { index: var_index, n_vars: n });
    }
    let mut jet = TaylorScalar::constant(n, order, point.coords[var_index])?;
    if order >= 1 {
        let mut alpha = [0u8; MAX_VARS];
        alpha[var_index] = 1;
        let slot = jet.layout.slot(&alpha[..n]).expect("linear slot");
        jet.c[slot] = 1.0;
    }
    Ok(jet)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ElemFn {
    Sin,
    Cos,
    Sinh,
    Cosh,
    Exp,
    Log,
    Sqrt,
    Atan,
    Artanh,
    Pow(f64),
}

/// Checked binary arithmetic.
pub fn jet_arith(a: &TaylorScalar, b: &TaylorScalar, op: ArithOp) -> Result<TaylorScalar, JetError> {
    a.check_compatible(b)?;
    Ok(match op {
        ArithOp::Add => *a + *b,
        ArithOp::Sub => *a - *b,
        ArithOp::Mul => *a * *b,
        ArithOp::Div => {
            if b.value() == 0.0 || !b.value().is_finite() {
                return Err(JetError::Domain { op: "div", value: b.value() });
            }
            *a / *b
        }
    })
}

/// Checked elementary function.
pub fn jet_elem(a: &TaylorScalar, f: ElemFn) -> Result<TaylorScalar, JetError> {
    let x = a.value();
    let bad = |op| Err(JetError::Domain { op, value: x });
    match f {
        ElemFn::Log if x <= 0.0 => bad("log"),
        ElemFn::Sqrt if x <= 0.0 => bad("sqrt"),
        ElemFn::Artanh if x.abs() >= 1.0 => bad("artanh"),
        ElemFn::Pow(p) if x <= 0.0 && p.fract() != 0.0 => bad("pow"),
        ElemFn::Pow(p) if x == 0.0 && p < MAX_ORDER as f64 => bad("pow"),
        _ => Ok(a.apply(f)),
    }
}

/// Mixed partial `∂^α` read from a jet.
pub fn extract_derivative(a: &TaylorScalar, alpha: &[usize]) -> Result<f64, JetError> {
    a.derivative(alpha)
}

impl TaylorScalar {
    pub fn constant(n_vars: usize, order: usize, value: f64) -> Result<Self, JetError> {
        let layout = layout(n_vars, order)?;
        let mut c = [0.0; MAX_COEFFS];
        c[0] = value;
        Ok(Self { layout, c })
    }

    /// Constant with the same shape as `self`.
    pub fn constant_like(&self, value: f64) -> Self {
        let mut c = [0.0; MAX_COEFFS];
        c[0] = value;
        Self { layout: self.layout, c }
    }

    pub fn zero_like(&self) -> Self {
        self.constant_like(0.0)
    }

    pub fn n_vars(&self) -> usize {
        self.layout.n
    }

    pub fn order(&self) -> usize {
        self.layout.order
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs().iter().all(|c| c.is_finite())
    }

    /// Dense coefficients in graded order.
    pub fn coeffs(&self) -> &[f64] {
        &self.c[..self.layout.len()]
    }

    /// Iterator over `(multi-index, coefficient)` pairs.
    pub fn terms(&self) -> impl Iterator<Item = (Vec<usize>, f64)> + '_ {
        let n = self.layout.n;
        self.layout
            .monomials
            .iter()
            .zip(self.coeffs())
            .map(move |(m, &c)| (m[..n].iter().map(|&a| a as usize).collect(), c))
    }

    fn slot_of(&self, alpha: &[usize]) -> Result<Option<usize>, JetError> {
        if alpha.len() != self.layout.n {
            return Err(JetError::MultiIndexLength { got: alpha.len(), n_vars: self.layout.n });
        }
        let degree: usize = alpha.iter().sum();
        if degree > self.layout.order {
            return Err(JetError::OrderExceeded { degree, order: self.layout.order });
        }
        let small: Vec<u8> = alpha.iter().map(|&a| a as u8).collect();
        Ok(self.layout.slot(&small))
    }

    /// Stored coefficient `∂^α f / α!`.
    pub fn coeff(&self, alpha: &[usize]) -> Result<f64, JetError> {
        Ok(self.slot_of(alpha)?.map_or(0.0, |s| self.c[s]))
    }

    /// Mixed partial `∂^α f`.
    pub fn derivative(&self, alpha: &[usize]) -> Result<f64, JetError> {
        let factorial: f64 = alpha
            .iter()
            .map(|&a| (1..=a).product::<usize>() as f64)
            .product();
        Ok(factorial * self.coeff(alpha)?)
    }

    /// `∂_i f` at the expansion point.
    pub fn d1(&self, i: usize) -> f64 {
        let mut alpha = [0u8; MAX_VARS];
        alpha[i] += 1;
        self.read(&alpha)
    }

    /// `∂_i ∂_j f` at the expansion point.
    pub fn d2(&self, i: usize, j: usize) -> f64 {
        let mut alpha = [0u8; MAX_VARS];
        alpha[i] += 1;
        alpha[j] += 1;
        let f = if i == j { 2.0 } else { 1.0 };
        f * self.read(&alpha)
    }

    /// `∂_i ∂_j ∂_k f` at the expansion point.
    pub fn d3(&self, i: usize, j: usize, k: usize) -> f64 {
        let mut alpha = [0u8; MAX_VARS];
        alpha[i] += 1;
        alpha[j] += 1;
        alpha[k] += 1;
        let f: f64 = alpha.iter().map(|&a| (1..=a as usize).product::<usize>() as f64).product();
        f * self.read(&alpha)
    }

    fn read(&self, alpha: &[u8; MAX_VARS]) -> f64 {
        let n = self.layout.n;
        let degree: u8 = alpha.iter().sum();
        if degree as usize > self.layout.order {
            return f64::NAN;
        }
        self.layout.slot(&alpha[..n]).map_or(0.0, |s| self.c[s])
    }

    /// Jet of `∂_i f`, one order lower.
    ///
    /// Panics on an order-0 jet.
    pub fn partial(&self, var: usize) -> Self {
        let n = self.layout.n;
        assert!(self.layout.order > 0, "cannot differentiate an order-0 jet");
        let lower = &layouts()[layout_index(n, self.layout.order - 1)];
        let mut c = [0.0; MAX_COEFFS];
        for &(src, dst, factor) in &self.layout.partials[var] {
            c[dst as usize] = factor * self.c[src as usize];
        }
        Self { layout: lower, c }
    }

    /// Drops every term above `order`.
    pub fn truncate(&self, order: usize) -> Self {
        if order >= self.layout.order {
            return *self;
        }
        let lower = &layouts()[layout_index(self.layout.n, order)];
        let mut c = [0.0; MAX_COEFFS];
        // graded layouts share their prefix
        c[..lower.len()].copy_from_slice(&self.c[..lower.len()]);
        Self { layout: lower, c }
    }

    fn check_compatible(&self, other: &Self) -> Result<(), JetError> {
        if std::ptr::eq(self.layout, other.layout) {
            Ok(())
        } else {
            Err(JetError::Incompatible(
                self.layout.n,
                self.layout.order,
                other.layout.n,
                other.layout.order,
            ))
        }
    }

    /// Substitutes the jet into a univariate Taylor polynomial
    /// `u[0] + u[1] t + u[2] t² + u[3] t³` expanded about `self.value()`.
    pub fn compose(&self, u: &[f64; 4]) -> Self {
        let mut delta = *self;
        delta.c[0] = 0.0;
        let mut acc = self.constant_like(u[self.layout.order.min(3)]);
        for k in (0..self.layout.order.min(3)).rev() {
            acc = acc * delta;
            acc.c[0] += u[k];
        }
        acc
    }

    /// Composition with an entire function given by its Maclaurin coefficients.
    pub fn compose_series(&self, maclaurin: &[f64]) -> Self {
        let x = self.value();
        let mut u = [0.0; 4];
        // k-th Taylor coefficient about x: sum_m C(m,k) a_m x^(m-k)
        for (k, uk) in u.iter_mut().enumerate() {
            let mut acc = 0.0;
            for m in (k..maclaurin.len()).rev() {
                acc = acc * x + maclaurin[m] * binomial(m, k);
            }
            *uk = acc;
        }
        self.compose(&u)
    }

    pub fn apply(&self, f: ElemFn) -> Self {
        self.compose(&univariate::taylor(f, self.value()))
    }

    pub fn sin(&self) -> Self {
        self.apply(ElemFn::Sin)
    }
    pub fn cos(&self) -> Self {
        self.apply(ElemFn::Cos)
    }
    pub fn sinh(&self) -> Self {
        self.apply(ElemFn::Sinh)
    }
    pub fn cosh(&self) -> Self {
        self.apply(ElemFn::Cosh)
    }
    pub fn exp(&self) -> Self {
        self.apply(ElemFn::Exp)
    }
    pub fn ln(&self) -> Self {
        self.apply(ElemFn::Log)
    }
    pub fn sqrt(&self) -> Self {
        self.apply(ElemFn::Sqrt)
    }
    pub fn atan(&self) -> Self {
        self.apply(ElemFn::Atan)
    }
    pub fn artanh(&self) -> Self {
        self.apply(ElemFn::Artanh)
    }
    pub fn powf(&self, p: f64) -> Self {
        self.apply(ElemFn::Pow(p))
    }

    pub fn powi(&self, p: i32) -> Self {
        match p {
            0 => self.constant_like(1.0),
            1 => *self,
            2 => *self * *self,
            p if p < 0 => self.powi(-p).recip(),
            p => {
                let half = self.powi(p / 2);
                let sq = half * half;
                if p % 2 == 1 {
                    sq * *self
                } else {
                    sq
                }
            }
        }
    }

    pub fn recip(&self) -> Self {
        let x = self.value();
        let r = 1.0 / x;
        self.compose(&[r, -r * r, r * r * r, -r * r * r * r])
    }
}

fn binomial(m: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64)
}

impl fmt::Debug for TaylorScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut map = f.debug_map();
        for (alpha, c) in self.terms() {
            if c != 0.0 {
                map.entry(&alpha, &c);
            }
        }
        map.finish()
    }
}

impl PartialEq for TaylorScalar {
    fn eq(&self, other: &Self) -> bool {
        std::ptr::eq(self.layout, other.layout) && self.coeffs() == other.coeffs()
    }
}

impl Add for TaylorScalar {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl AddAssign for TaylorScalar {
    fn add_assign(&mut self, rhs: Self) {
        debug_assert!(std::ptr::eq(self.layout, rhs.layout));
        for (a, b) in self.c.iter_mut().zip(rhs.c.iter()).take(self.layout.len()) {
            *a += b;
        }
    }
}

impl Sub for TaylorScalar {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        self -= rhs;
        self
    }
}

impl SubAssign for TaylorScalar {
    fn sub_assign(&mut self, rhs: Self) {
        debug_assert!(std::ptr::eq(self.layout, rhs.layout));
        for (a, b) in self.c.iter_mut().zip(rhs.c.iter()).take(self.layout.len()) {
            *a -= b;
        }
    }
}

impl Mul for TaylorScalar {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        debug_assert!(std::ptr::eq(self.layout, rhs.layout));
        let mut c = [0.0; MAX_COEFFS];
        for &(a, b, o) in &self.layout.products {
            c[o as usize] += self.c[a as usize] * rhs.c[b as usize];
        }
        Self { layout: self.layout, c }
    }
}

impl MulAssign for TaylorScalar {
    fn mul_assign(&mut self, rhs: Self) {
        *self = *self * rhs;
    }
}

impl Div for TaylorScalar {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl Neg for TaylorScalar {
    type Output = Self;
    fn neg(mut self) -> Self {
        for a in self.c.iter_mut().take(self.layout.len()) {
            *a = -*a;
        }
        self
    }
}

impl Add<f64> for TaylorScalar {
    type Output = Self;
    fn add(mut self, rhs: f64) -> Self {
        self.c[0] += rhs;
        self
    }
}

impl Sub<f64> for TaylorScalar {
    type Output = Self;
    fn sub(mut self, rhs: f64) -> Self {
        self.c[0] -= rhs;
        self
    }
}

impl Mul<f64> for TaylorScalar {
    type Output = Self;
    fn mul(mut self, rhs: f64) -> Self {
        for a in self.c.iter_mut().take(self.layout.len()) {
            *a *= rhs;
        }
        self
    }
}

impl Div<f64> for TaylorScalar {
    type Output = Self;
    fn div(self, rhs: f64) -> Self {
        self * (1.0 / rhs)
    }
}

impl Add<TaylorScalar> for f64 {
    type Output = TaylorScalar;
    fn add(self, rhs: TaylorScalar) -> TaylorScalar {
        rhs + self
    }
}

impl Sub<TaylorScalar> for f64 {
    type Output = TaylorScalar;
    fn sub(self, rhs: TaylorScalar) -> TaylorScalar {
        -rhs + self
    }
}

impl Mul<TaylorScalar> for f64 {
    type Output = TaylorScalar;
    fn mul(self, rhs: TaylorScalar) -> TaylorScalar {
        rhs * self
    }
}

impl Div<TaylorScalar> for f64 {
    type Output = TaylorScalar;
    fn div(self, rhs: TaylorScalar) -> TaylorScalar {
        rhs.recip() * self
    }
}

/// Univariate Taylor coefficients of the elementary functions, produced by
/// the standard recurrences applied to the identity series `x0 + t`.
mod univariate {
    use super::ElemFn;

    type Series = [f64; 4];

    const ID_SLOPE: Series = [0.0, 1.0, 0.0, 0.0];

    fn identity(x0: f64) -> Series {
        let mut t = ID_SLOPE;
        t[0] = x0;
        t
    }

    fn mul(a: &Series, b: &Series) -> Series {
        let mut out = [0.0; 4];
        for k in 0..4 {
            for j in 0..=k {
                out[k] += a[j] * b[k - j];
            }
        }
        out
    }

    fn div(a: &Series, b: &Series) -> Series {
        let mut q = [0.0; 4];
        for k in 0..4 {
            let s: f64 = (1..=k).map(|j| b[j] * q[k - j]).sum();
            q[k] = (a[k] - s) / b[0];
        }
        q
    }

    /// w' = u' w
    fn exp(u: &Series) -> Series {
        let mut w = [u[0].exp(), 0.0, 0.0, 0.0];
        for k in 1..4 {
            w[k] = (1..=k).map(|j| j as f64 * u[j] * w[k - j]).sum::<f64>() / k as f64;
        }
        w
    }

    /// u' = u w'
    fn ln(u: &Series) -> Series {
        let mut w = [u[0].ln(), 0.0, 0.0, 0.0];
        for k in 1..4 {
            let s: f64 = (1..k).map(|j| j as f64 * w[j] * u[k - j]).sum();
            w[k] = (u[k] - s / k as f64) / u[0];
        }
        w
    }

    /// s' = u' c, c' = -+ u' s
    fn trig_pair(u: &Series, hyperbolic: bool) -> (Series, Series) {
        let (mut s, mut c) = if hyperbolic {
            ([u[0].sinh(), 0.0, 0.0, 0.0], [u[0].cosh(), 0.0, 0.0, 0.0])
        } else {
            ([u[0].sin(), 0.0, 0.0, 0.0], [u[0].cos(), 0.0, 0.0, 0.0])
        };
        let sign = if hyperbolic { 1.0 } else { -1.0 };
        for k in 1..4 {
            let kf = k as f64;
            s[k] = (1..=k).map(|j| j as f64 * u[j] * c[k - j]).sum::<f64>() / kf;
            c[k] = sign * (1..=k).map(|j| j as f64 * u[j] * s[k - j]).sum::<f64>() / kf;
        }
        (s, c)
    }

    /// w² = u
    fn sqrt(u: &Series) -> Series {
        let mut w = [u[0].sqrt(), 0.0, 0.0, 0.0];
        for k in 1..4 {
            let s: f64 = (1..k).map(|j| w[j] * w[k - j]).sum();
            w[k] = (u[k] - s) / (2.0 * w[0]);
        }
        w
    }

    /// u w' = p w u'
    fn pow(u: &Series, p: f64) -> Series {
        let mut w = [u[0].powf(p), 0.0, 0.0, 0.0];
        for k in 1..4 {
            let s: f64 = (1..=k)
                .map(|j| (p * j as f64 - (k - j) as f64) * u[j] * w[k - j])
                .sum();
            w[k] = s / (k as f64 * u[0]);
        }
        w
    }

    /// w' = u' / d, integrated term by term
    fn integrate_ratio(u: &Series, w0: f64, d: &Series) -> Series {
        let du = [u[1], 2.0 * u[2], 3.0 * u[3], 0.0];
        let q = div(&du, d);
        [w0, q[0], q[1] / 2.0, q[2] / 3.0]
    }

    pub(super) fn taylor(f: ElemFn, x0: f64) -> Series {
        let u = identity(x0);
        match f {
            ElemFn::Exp => exp(&u),
            ElemFn::Log => ln(&u),
            ElemFn::Sin => trig_pair(&u, false).0,
            ElemFn::Cos => trig_pair(&u, false).1,
            ElemFn::Sinh => trig_pair(&u, true).0,
            ElemFn::Cosh => trig_pair(&u, true).1,
            ElemFn::Sqrt => sqrt(&u),
            ElemFn::Pow(p) => pow(&u, p),
            ElemFn::Atan => {
                let uu = mul(&u, &u);
                let d = [1.0 + uu[0], uu[1], uu[2], uu[3]];
                integrate_ratio(&u, x0.atan(), &d)
            }
            ElemFn::Artanh => {
                let uu = mul(&u, &u);
                let d = [1.0 - uu[0], -uu[1], -uu[2], -uu[3]];
                integrate_ratio(&u, x0.atanh(), &d)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x_at(v: f64, order: usize) -> TaylorScalar {
        lift(&ChartPoint::new(vec![v]), 0, order).unwrap()
    }

    /// Five-point central difference, Richardson-extrapolated over h and h/2.
    fn fd_nth(f: &dyn Fn(f64) -> f64, x: f64, n: usize, h: f64) -> f64 {
        let raw = |h: f64| -> f64 {
            match n {
                1 => (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h),
                2 => (-f(x - 2.0 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h)
                    - f(x + 2.0 * h))
                    / (12.0 * h * h),
                3 => (f(x - 3.0 * h) - 8.0 * f(x - 2.0 * h) + 13.0 * f(x - h) - 13.0 * f(x + h)
                    + 8.0 * f(x + 2.0 * h)
                    - f(x + 3.0 * h))
                    / (8.0 * h * h * h),
                _ => unreachable!(),
            }
        };
        let (a, b) = (raw(h), raw(h / 2.0));
        b + (b - a) / 15.0
    }

    #[test]
    fn lift_examples() {
        let j = lift(&ChartPoint::new(vec![3.0, 4.0]), 0, 2).unwrap();
        assert_eq!(j.coeff(&[0, 0]).unwrap(), 3.0);
        assert_eq!(j.coeff(&[1, 0]).unwrap(), 1.0);
        assert_eq!(j.coeff(&[0, 1]).unwrap(), 0.0);
        let j = lift(&ChartPoint::origin(2), 1, 3).unwrap();
        let nonzero: Vec<_> = j.terms().filter(|(_, c)| *c != 0.0).collect();
        assert_eq!(nonzero, vec![(vec![0, 1], 1.0)]);
        let x = x_at(3.0, 2);
        assert_eq!((x * x).d1(0), 6.0);
    }

    #[test]
    fn lift_rejects_bad_arguments() {
        let p = ChartPoint::new(vec![1.0, 2.0]);
        assert!(matches!(lift(&p, 2, 2), Err(JetError::VarIndexOutOfRange { .. })));
        assert!(matches!(lift(&p, 0, 1), Err(JetError::UnsupportedOrder(1))));
        assert!(matches!(lift(&p, 0, 4), Err(JetError::UnsupportedOrder(4))));
        let p7 = ChartPoint::origin(7);
        assert!(matches!(lift(&p7, 0, 2), Err(JetError::UnsupportedVars(7))));
    }

    #[test]
    fn maclaurin_sin_and_geometric_series() {
        let s = x_at(0.0, 3).sin();
        assert_eq!(s.coeff(&[0]).unwrap(), 0.0);
        assert_eq!(s.coeff(&[1]).unwrap(), 1.0);
        assert_eq!(s.coeff(&[2]).unwrap(), 0.0);
        assert!((s.coeff(&[3]).unwrap() + 1.0 / 6.0).abs() < 1e-16);

        let x = x_at(0.0, 2);
        let q = jet_arith(&x.constant_like(1.0), &(x * x + 1.0), ArithOp::Div).unwrap();
        assert_eq!(q.coeffs(), &[1.0, 0.0, -1.0]);
    }

    #[test]
    fn third_derivative_of_cos_two_atan_matches_finite_differences() {
        let f = |x: f64| (2.0 * x.atan()).cos();
        let jet = (x_at(0.3, 3).atan() * 2.0).cos();
        for k in 1..=3 {
            let mut best = f64::INFINITY;
            for h in [1e-2, 5e-3, 2e-3] {
                best = best.min((jet.derivative(&[k]).unwrap() - fd_nth(&f, 0.3, k, h)).abs());
            }
            assert!(best < 1e-5, "order {k}: {best}");
        }
    }

    #[test]
    fn extract_examples() {
        let x = x_at(0.7, 2);
        assert_eq!(extract_derivative(&(x * x), &[2]).unwrap(), 2.0);

        let p = ChartPoint::new(vec![0.4, -1.2, 2.0]);
        let v = p.lift_all(3).unwrap();
        let xyz = v[0] * v[1] * v[2];
        assert_eq!(extract_derivative(&xyz, &[1, 1, 1]).unwrap(), 1.0);
        assert!(matches!(
            extract_derivative(&xyz, &[2, 1, 1]),
            Err(JetError::OrderExceeded { degree: 4, order: 3 })
        ));

        let p = ChartPoint::new(vec![0.2, 0.5]);
        let v = p.lift_all(2).unwrap();
        let jet = (v[0] * v[1]).sin();
        let f = |x: f64, y: f64| (x * y).sin();
        let h = 1e-4;
        let fd = (f(0.2 + h, 0.5 + h) - f(0.2 + h, 0.5 - h) - f(0.2 - h, 0.5 + h)
            + f(0.2 - h, 0.5 - h))
            / (4.0 * h * h);
        assert!((jet.derivative(&[1, 1]).unwrap() - fd).abs() < 1e-6);
    }

    #[test]
    fn elementary_functions_match_closed_form_derivatives() {
        let x0: f64 = 0.37;
        let cases: Vec<(ElemFn, [f64; 4])> = vec![
            (ElemFn::Exp, [x0.exp(), x0.exp(), x0.exp(), x0.exp()]),
            (ElemFn::Log, [x0.ln(), 1.0 / x0, -1.0 / (x0 * x0), 2.0 / x0.powi(3)]),
            (ElemFn::Sin, [x0.sin(), x0.cos(), -x0.sin(), -x0.cos()]),
            (ElemFn::Cosh, [x0.cosh(), x0.sinh(), x0.cosh(), x0.sinh()]),
            (
                ElemFn::Sqrt,
                [x0.sqrt(), 0.5 / x0.sqrt(), -0.25 * x0.powf(-1.5), 0.375 * x0.powf(-2.5)],
            ),
            (
                ElemFn::Pow(-2.5),
                [
                    x0.powf(-2.5),
                    -2.5 * x0.powf(-3.5),
                    8.75 * x0.powf(-4.5),
                    -39.375 * x0.powf(-5.5),
                ],
            ),
            (
                ElemFn::Artanh,
                [
                    x0.atanh(),
                    1.0 / (1.0 - x0 * x0),
                    2.0 * x0 / (1.0 - x0 * x0).powi(2),
                    (2.0 + 6.0 * x0 * x0) / (1.0 - x0 * x0).powi(3),
                ],
            ),
        ];
        for (f, d) in cases {
            let jet = jet_elem(&x_at(x0, 3), f).unwrap();
            for k in 0..4 {
                let got = jet.derivative(&[k]).unwrap();
                assert!((got - d[k]).abs() < 1e-12 * d[k].abs().max(1.0), "{f:?} d{k}: {got} vs {}", d[k]);
            }
        }
    }

    #[test]
    fn domain_violations_are_reported() {
        let z = x_at(0.0, 2);
        assert!(matches!(jet_arith(&z, &z, ArithOp::Div), Err(JetError::Domain { op: "div", .. })));
        assert!(jet_elem(&z, ElemFn::Log).is_err());
        assert!(jet_elem(&(z - 1.0), ElemFn::Sqrt).is_err());
        assert!(jet_elem(&(z + 1.0), ElemFn::Artanh).is_err());
        assert!(jet_elem(&(z + 0.5), ElemFn::Artanh).is_ok());
        let other = lift(&ChartPoint::origin(3), 0, 2).unwrap();
        assert!(matches!(jet_arith(&z, &other, ArithOp::Add), Err(JetError::Incompatible(..))));
    }

    #[test]
    fn partial_and_truncate() {
        let p = ChartPoint::new(vec![0.3, -0.4]);
        let v = p.lift_all(3).unwrap();
        let f = v[0] * v[0] * v[1] + v[1].exp();
        let fx = f.partial(0);
        assert_eq!(fx.order(), 2);
        // f_x = 2xy, f_xy = 2x, f_xyy = 0, f_xxy = 2
        assert!((fx.value() - 2.0 * 0.3 * -0.4).abs() < 1e-15);
        assert!((fx.d1(1) - 0.6).abs() < 1e-15);
        assert!((fx.d2(0, 1) - 2.0).abs() < 1e-15);
        assert_eq!(f.truncate(1).order(), 1);
        assert_eq!(f.truncate(1).d1(1), f.d1(1));
    }

    #[test]
    fn compose_series_matches_direct_evaluation() {
        // sin(r)/r as a series in s = r²
        let mac: Vec<f64> = (0..25)
            .map(|k| {
                let fact: f64 = (1..=(2 * k + 1)).map(|i| i as f64).product();
                (-1.0f64).powi(k as i32) / fact
            })
            .collect();
        let s = x_at(0.81, 3);
        let series = s.compose_series(&mac);
        let direct = s.sqrt().sin() / s.sqrt();
        for (a, b) in series.coeffs().iter().zip(direct.coeffs()) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}

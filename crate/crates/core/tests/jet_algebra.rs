use cmg_core::jets::lift;
use cmg_core::{ChartPoint, TaylorScalar};
use proptest::prelude::*;

fn close(a: &TaylorScalar, b: &TaylorScalar, tol: f64) -> bool {
    a.n_vars() == b.n_vars()
        && a.order() == b.order()
        && a.coeffs().iter().zip(b.coeffs()).all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
}

/// A cubic polynomial in the coordinate jets, so every coefficient is exercised.
fn poly(x: &[TaylorScalar], w: &[f64]) -> TaylorScalar {
    let mut acc = x[0].constant_like(w[0]);
    for (i, xi) in x.iter().enumerate() {
        acc += *xi * w[1 + i] + *xi * *xi * *xi * w[4 + i];
        acc += *xi * x[(i + 1) % x.len()] * w[7 + i];
    }
    acc
}

fn coords(point: &[f64]) -> Vec<TaylorScalar> {
    let p = ChartPoint::new(point.to_vec());
    (0..point.len()).map(|i| lift(&p, i, 3).unwrap()).collect()
}

fn weights() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, 10)
}

fn point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.8..0.8f64, 3)
}

proptest! {
    #[test]
    fn ring_axioms(p in point(), wa in weights(), wb in weights(), wc in weights()) {
        let x = coords(&p);
        let (a, b, c) = (poly(&x, &wa), poly(&x, &wb), poly(&x, &wc));
        prop_assert!(close(&(a + b), &(b + a), 1e-14));
        prop_assert!(close(&(a * b), &(b * a), 1e-13));
        prop_assert!(close(&((a * b) * c), &(a * (b * c)), 1e-11));
        prop_assert!(close(&(a * (b + c)), &(a * b + a * c), 1e-11));
        prop_assert!(close(&(a - a), &a.zero_like(), 0.0));
    }

    #[test]
    fn division_inverts_multiplication(p in point(), wa in weights(), wb in weights()) {
        let x = coords(&p);
        let a = poly(&x, &wa);
        let b = poly(&x, &wb);
        prop_assume!(b.value().abs() > 0.2);
        prop_assert!(close(&((a * b) / b), &a, 1e-9));
    }

    #[test]
    fn elementary_inverses(p in point(), wa in weights()) {
        let x = coords(&p);
        let a = poly(&x, &wa) * 0.1;
        let one = a.constant_like(1.0);
        let pos = a * a + one;
        prop_assert!(close(&pos.ln().exp(), &pos, 1e-11));
        prop_assert!(close(&(pos.sqrt() * pos.sqrt()), &pos, 1e-11));
        prop_assert!(close(&(a.sin() * a.sin() + a.cos() * a.cos()), &one, 1e-12));
        prop_assert!(close(&(a.cosh() * a.cosh() - a.sinh() * a.sinh()), &one, 1e-10));
        let small = a * 0.1;
        prop_assume!(small.value().abs() < 0.9);
        prop_assert!(close(&(small.artanh() * 2.0).exp(), &((one + small) / (one - small)), 1e-9));
    }

    #[test]
    fn truncation_is_a_ring_map(p in point(), wa in weights(), wb in weights(), order in 0usize..3) {
        let x = coords(&p);
        let (a, b) = (poly(&x, &wa), poly(&x, &wb));
        prop_assert!(close(&(a * b).truncate(order), &(a.truncate(order) * b.truncate(order)), 1e-12));
        prop_assert!(close(&a.exp().truncate(order), &a.truncate(order).exp(), 1e-12));
    }

    #[test]
    fn partials_obey_the_product_rule(p in point(), wa in weights(), wb in weights(), var in 0usize..3) {
        let x = coords(&p);
        let (a, b) = (poly(&x, &wa), poly(&x, &wb));
        let lhs = (a * b).partial(var);
        let rhs = a.partial(var) * b.truncate(2) + a.truncate(2) * b.partial(var);
        prop_assert!(close(&lhs, &rhs, 1e-12));
    }
}

#[test]
fn derivatives_match_closed_form() {
    // f = sin(x y) + x³ z at (0.3, -0.7, 1.1)
    let (x0, y0, z0) = (0.3, -0.7, 1.1);
    let x = coords(&[x0, y0, z0]);
    let f = (x[0] * x[1]).sin() + x[0] * x[0] * x[0] * x[2];
    let u = x0 * y0;
    assert!((f.value() - (u.sin() + x0.powi(3) * z0)).abs() < 1e-15);
    assert!((f.d1(0) - (y0 * u.cos() + 3.0 * x0 * x0 * z0)).abs() < 1e-14);
    assert!((f.d2(0, 1) - (u.cos() - u * u.sin())).abs() < 1e-14);
    assert!((f.d2(0, 0) - (-y0 * y0 * u.sin() + 6.0 * x0 * z0)).abs() < 1e-14);
    assert!((f.d3(0, 0, 2) - 6.0 * x0).abs() < 1e-14);
    assert!((f.d3(0, 1, 1) - (-2.0 * x0 * u.sin() - x0 * x0 * y0 * u.cos())).abs() < 1e-13);
    assert!((f.d3(0, 0, 0) - (-y0.powi(3) * u.cos() + 6.0 * z0)).abs() < 1e-13);
}

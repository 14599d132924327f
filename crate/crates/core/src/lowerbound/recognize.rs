//! Guessing a small integer polynomial that vanishes at a numerical point.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::Signed;

use crate::intpoly::{enumerate, horner, IntPoly, PolyFilter};

/// Relative residual below which a polynomial counts as vanishing at `z`.
const RESIDUAL: f64 = 1e-6;

/// Height searched exhaustively for degrees ≥ 2.
const BRUTE_HEIGHT: u64 = 3;

fn vanishes(p: &IntPoly, z: Complex64) -> bool {
    let c = p.to_f64_coeffs();
    let scale: f64 = c.iter().rev().fold(0.0, |acc, &a| acc * z.norm() + a.abs());
    horner(&c, z).norm() <= RESIDUAL * scale
}

/// A primitive irreducible polynomial with positive leading coefficient,
/// degree ≤ `max_degree` and height ≤ `max_height`, vanishing at `z` to
/// working precision; the first in enumeration order wins.
pub fn recognize(z: Complex64, max_degree: usize, max_height: u64) -> Option<IntPoly> {
    if !z.is_finite() || max_degree == 0 || max_height == 0 {
        return None;
    }
    if z.im.abs() <= 1e-9 * (1.0 + z.norm()) {
        if let Some(p) = rational(z.re, max_height) {
            return Some(p);
        }
    }
    let h = max_height.min(BRUTE_HEIGHT);
    if max_degree < 2 {
        return None;
    }
    enumerate(max_degree, h, PolyFilter::Any)
        .filter(|p| p.degree() >= 2 && p.leading().is_positive())
        .find(|p| vanishes(p, z) && p.is_primitive() && p.is_irreducible_q().unwrap_or(false))
}

/// `q x − p` from the continued-fraction convergents of `x`.
fn rational(x: f64, max_height: u64) -> Option<IntPoly> {
    let cap = max_height as f64;
    let (mut p0, mut q0, mut p1, mut q1) = (0.0f64, 1.0f64, 1.0f64, 0.0f64);
    let mut r = x;
    for _ in 0..40 {
        let a = r.floor();
        let (p2, q2) = (a * p1 + p0, a * q1 + q0);
        if q2 > cap || p2.abs() > cap {
            return None;
        }
        if (x - p2 / q2).abs() <= RESIDUAL * x.abs().max(1.0) / q2.max(1.0) {
            let poly = IntPoly::new(vec![BigInt::from(-(p2 as i64)), BigInt::from(q2 as i64)]);
            return Some(poly.primitive_part());
        }
        let frac = r - a;
        if frac.abs() < 1e-15 {
            return None;
        }
        r = 1.0 / frac;
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recognizes_small_numbers() {
        let r = |x: f64, y: f64| recognize(Complex64::new(x, y), 4, 20).map(|p| p.to_string());
        assert_eq!(r(0.5, 0.0).as_deref(), Some("2*x - 1"));
        assert_eq!(r(-3.0, 0.0).as_deref(), Some("x + 3"));
        assert_eq!(r(2.0f64.sqrt(), 0.0).as_deref(), Some("x^2 - 2"));
        assert_eq!(r(0.5, 3f64.sqrt() / 2.0).as_deref(), Some("x^2 - x + 1"));
        assert_eq!(r(std::f64::consts::PI, 0.0), None);
    }
}

//! Periodic trapezoid rule over the circle parameter `θ ∈ [0,1)`.
//!
//! Each level doubles the node count; the new (odd) nodes are solved with
//! the roots of their left neighbour as Aberth seeds, so a level costs one
//! warm-started solve per new node. Stopping is on successive levels.

use num_complex::Complex64;
use rayon::prelude::*;

use super::RationalPullbackMeasure;
use crate::error::{Error, Result};
use crate::roots::MAX_ITERATIONS;

pub const MIN_NODES: usize = 64;
pub const MAX_NODES: usize = 1 << 16;

/// A quadrature value with the difference of the last two levels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub nodes: usize,
}

fn fiber_roots(m: &RationalPullbackMeasure, theta: f64, seeds: Option<&[Complex64]>) -> Result<Vec<Complex64>> {
    let n = m.fiber().degree();
    let (z, ok) = m.fiber().roots(theta, seeds);
    if ok && z.len() == n {
        return Ok(z);
    }
    if seeds.is_some() {
        let (z, ok) = m.fiber().roots(theta, None);
        if ok && z.len() == n {
            return Ok(z);
        }
    }
    Err(Error::NonConvergence {
        iterations: MAX_ITERATIONS,
        theta: Some(theta),
    })
}

fn rho<F>(m: &RationalPullbackMeasure, f: &F, roots: &[Complex64]) -> Result<f64>
where
    F: Fn(Complex64) -> f64 + Sync + ?Sized,
{
    let mut s = 0.0;
    for &w in roots {
        let v = f(w);
        if !v.is_finite() {
            return Err(Error::SingularIntegrand);
        }
        s += v;
    }
    Ok(s / m.degree() as f64)
}

/// Trapezoid sum with exactly `n` equispaced nodes.
pub fn trapezoid_sum<F>(m: &RationalPullbackMeasure, f: &F, n: usize) -> Result<f64>
where
    F: Fn(Complex64) -> f64 + Sync + ?Sized,
{
    if n == 0 {
        return Err(Error::ConfigInvalid("trapezoid needs at least one node".into()));
    }
    let vals: Result<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let th = k as f64 / n as f64;
            rho(m, f, &fiber_roots(m, th, None)?)
        })
        .collect();
    Ok(vals?.iter().sum::<f64>() / n as f64)
}

/// `∫ f dμ` for a pullback measure, doubling from [`MIN_NODES`] until two
/// successive levels differ by less than `tol`.
pub fn integrate_pullback<F>(m: &RationalPullbackMeasure, f: &F, tol: f64) -> Result<Quadrature>
where
    F: Fn(Complex64) -> f64 + Sync + ?Sized,
{
    if !(tol > 0.0) {
        return Err(Error::ConfigInvalid(format!("tolerance {tol} must be positive")));
    }
    let mut n = MIN_NODES;
    // roots[k] is the fiber over θ = k/n
    let roots: Result<Vec<Vec<Complex64>>> = (0..n)
        .into_par_iter()
        .map(|k| fiber_roots(m, k as f64 / n as f64, None))
        .collect();
    let mut roots = roots?;
    let mut sum: f64 = roots.iter().map(|r| rho(m, f, r)).sum::<Result<f64>>()?;
    let mut prev = sum / n as f64;
    loop {
        let n2 = 2 * n;
        let odd: Result<Vec<Vec<Complex64>>> = (0..n)
            .into_par_iter()
            .map(|k| fiber_roots(m, (2 * k + 1) as f64 / n2 as f64, Some(&roots[k])))
            .collect();
        let odd = odd?;
        let add: f64 = odd.iter().map(|r| rho(m, f, r)).sum::<Result<f64>>()?;
        sum += add;
        let cur = sum / n2 as f64;
        let err = (cur - prev).abs();
        if err < tol {
            return Ok(Quadrature {
                value: cur,
                error: err,
                nodes: n2,
            });
        }
        if n2 >= MAX_NODES {
            return Err(Error::ToleranceNotMet {
                value: cur,
                estimate: err,
                tol,
            });
        }
        let mut merged = Vec::with_capacity(n2);
        for (e, o) in roots.into_iter().zip(odd) {
            merged.push(e);
            merged.push(o);
        }
        roots = merged;
        n = n2;
        prev = cur;
    }
}

/// `∫ f dλ_{S_R}` by the same doubling ladder.
pub fn integrate_circle<F>(r: f64, f: &F, tol: f64) -> Result<Quadrature>
where
    F: Fn(Complex64) -> f64 + Sync + ?Sized,
{
    if !(tol > 0.0) {
        return Err(Error::ConfigInvalid(format!("tolerance {tol} must be positive")));
    }
    let eval = |k: usize, n: usize| -> Result<f64> {
        let v = f(Complex64::from_polar(r, std::f64::consts::TAU * k as f64 / n as f64));
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::SingularIntegrand)
        }
    };
    let mut n = MIN_NODES;
    let mut sum: f64 = (0..n).into_par_iter().map(|k| eval(k, n)).collect::<Result<Vec<_>>>()?.iter().sum();
    let mut prev = sum / n as f64;
    loop {
        let n2 = 2 * n;
        let add: f64 = (0..n)
            .into_par_iter()
            .map(|k| eval(2 * k + 1, n2))
            .collect::<Result<Vec<_>>>()?
            .iter()
            .sum();
        sum += add;
        let cur = sum / n2 as f64;
        let err = (cur - prev).abs();
        if err < tol {
            return Ok(Quadrature {
                value: cur,
                error: err,
                nodes: n2,
            });
        }
        if n2 >= MAX_NODES {
            return Err(Error::ToleranceNotMet {
                value: cur,
                estimate: err,
                tol,
            });
        }
        n = n2;
        prev = cur;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intpoly::IntPoly;
    use crate::measures::{energy, Measure, MuPQ};

    fn p(s: &str) -> IntPoly {
        IntPoly::parse(s).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn jensen_on_unit_circle() {
        let m = RationalPullbackMeasure::lemniscate(p("x")).unwrap();
        let q = integrate_pullback(&m, &|z: Complex64| (z - 2.0).norm().ln(), 1e-12).unwrap();
        assert!((q.value - 2f64.ln()).abs() < 1e-10, "{q:?}");
    }

    #[test]
    fn trapezoid_defect_shrinks_on_doubling() {
        let m = RationalPullbackMeasure::lemniscate(p("x")).unwrap();
        let f = |z: Complex64| (z - 1.3).norm().ln();
        let exact = 1.3f64.ln();
        let mut last = f64::INFINITY;
        for n in [4usize, 8, 16, 32] {
            let d = (trapezoid_sum(&m, &f, n).unwrap() - exact).abs();
            assert!(d * 4.0 <= last || d < 1e-15, "n={n}: {d} vs {last}");
            last = d;
        }
    }

    #[test]
    fn mass_is_one() {
        let m = MuPQ::new(p("x"), p("x + 1")).unwrap();
        let q = integrate_pullback(m.pullback(), &|_| 1.0, 1e-12).unwrap();
        assert!((q.value - 1.0).abs() < 1e-14);
    }

    #[test]
    fn hultberg_pullback_integral() {
        let m = RationalPullbackMeasure::new(p("2*x + 1"), p("x")).unwrap();
        let g = crate::greens::builtin("hultberg").unwrap();
        let q = integrate_pullback(&m, &|z| g.eval(z), 1e-11).unwrap();
        assert!((q.value + 2f64.ln()).abs() < 1e-8, "{q:?}");
    }

    #[test]
    fn log_integral_agrees_with_quadrature() {
        let m = MuPQ::new(p("x - 1"), p("x^2 - x + 1")).unwrap();
        let exact = crate::measures::log_integral_exact(&m, &p("2*x - 1")).unwrap();
        let q = integrate_pullback(m.pullback(), &|z: Complex64| (2.0 * z - 1.0).norm().ln(), 1e-11).unwrap();
        assert!((q.value - exact).abs() < 1e-8, "{} vs {exact}", q.value);
    }

    #[test]
    fn potential_matches_quadrature_random_pairs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let pool: Vec<IntPoly> = crate::intpoly::enumerate(3, 3, crate::intpoly::PolyFilter::MonicIrreducible).collect();
        let mut pairs = 0;
        while pairs < 20 {
            let a = &pool[rng.gen_range(0..pool.len())];
            let b = &pool[rng.gen_range(0..pool.len())];
            let Ok(m) = MuPQ::new(a.clone(), b.clone()) else { continue };
            pairs += 1;
            let mut pts = 0;
            while pts < 20 {
                let z = c(rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0));
                // keep away from the support where the integrand is nearly singular
                if m.pullback().log_abs_map(z).abs() < 0.5 {
                    continue;
                }
                pts += 1;
                let q = integrate_pullback(m.pullback(), &|w: Complex64| -(z - w).norm().ln(), 1e-10).unwrap();
                assert!((q.value - m.potential(z)).abs() <= 1e-7, "{a} {b} {z}: {} vs {}", q.value, m.potential(z));
            }
        }
    }

    #[test]
    fn energy_examples() {
        let e = energy(&Measure::lemniscate(p("x")).unwrap(), 1e-12).unwrap();
        assert!(e.abs() < 1e-12);
        let e = energy(&Measure::lemniscate(p("x^2 - 2")).unwrap(), 1e-11).unwrap();
        assert!(e.abs() < 1e-8, "{e}");
        let e = energy(&Measure::lemniscate(p("2*x")).unwrap(), 1e-12).unwrap();
        assert!((e - 2f64.ln()).abs() < 1e-8, "{e}");
    }

    #[test]
    fn singular_integrand_refused() {
        let m = RationalPullbackMeasure::lemniscate(p("x")).unwrap();
        let r = integrate_pullback(&m, &|z: Complex64| (z - 1.0).norm().ln(), 1e-8);
        assert!(matches!(r, Err(Error::SingularIntegrand)));
    }

    #[test]
    fn circle_integral() {
        let q = integrate_circle(3.0, &|z: Complex64| (z - 1.0).norm().ln(), 1e-12).unwrap();
        assert!((q.value - 3f64.ln()).abs() < 1e-12);
    }
}

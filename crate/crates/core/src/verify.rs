//! Self-checks run by `essmin verify`: randomized properties and pinned values.

use std::f64::consts::LN_2;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::greens::builtin;
use crate::intpoly::{enumerate, IntPoly, PolyFilter};
use crate::lowerbound::{certified_inf, default_seed_grid, exchange_solve, DualCertificate, ExchangeConfig, InfConfig};
use crate::measures::{
    energy, integrate_circle, integrate_pullback, potential_discrete, smith_check, sweeten, DiscreteMeasure, Measure,
    MuPQ, RationalPullbackMeasure,
};
use crate::modular::{delta_pet, inverse_j, j_value, UpperHalfPoint};
use crate::upperbound::{cap1_bound, eval_witness};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Properties,
    Golden,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "properties" => Ok(Suite::Properties),
            "golden" => Ok(Suite::Golden),
            _ => Err(Error::ConfigInvalid(format!("unknown suite `{s}` (expected properties or golden)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check {
            name: name.to_string(),
            passed,
            detail,
        }
    }

    /// A check whose body errored counts as failed.
    fn from_result(name: &str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((ok, d)) => Check::new(name, ok, d),
            Err(e) => Check::new(name, false, format!("error: {e}")),
        }
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Vec<Check> {
    match suite {
        Suite::Properties => properties(seed),
        Suite::Golden => golden(),
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_mu_pq(rng: &mut ChaCha8Rng, pool: &[IntPoly]) -> MuPQ {
    loop {
        let a = pool[rng.gen_range(0..pool.len())].clone();
        let b = pool[rng.gen_range(0..pool.len())].clone();
        if let Ok(m) = MuPQ::new(a, b) {
            return m;
        }
    }
}

fn properties(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool: Vec<IntPoly> = enumerate(3, 3, PolyFilter::MonicIrreducible).collect();
    let mut out = Vec::new();

    let smith = (|| {
        let ms: Vec<MuPQ> = (0..5).map(|_| random_mu_pq(&mut rng, &pool)).collect();
        let mut worst = f64::INFINITY;
        let mut tested = 0;
        while tested < 50 {
            let deg = rng.gen_range(1..=4);
            let f = IntPoly::from_i64(&(0..=deg).map(|_| rng.gen_range(-5..=5)).collect::<Vec<_>>());
            if f.degree() < 1 || !f.is_primitive() {
                continue;
            }
            tested += 1;
            for m in &ms {
                let r = smith_check(m, &f)?;
                worst = worst.min(r.margin + 1e-8).min(r.margin - r.resultant_floor + 1e-8);
            }
        }
        Ok((worst >= 0.0, format!("smallest slack {worst:.3e}")))
    })();
    out.push(Check::from_result("smith margin nonnegative", smith));

    let mut worst = f64::INFINITY;
    let mut mass_ok = true;
    for _ in 0..10 {
        let n = rng.gen_range(1..8);
        let pts: Vec<Complex64> = (0..n)
            .map(|_| Complex64::from_polar(10f64.powf(rng.gen_range(-1.0..3.0)), rng.gen_range(0.0..6.3)))
            .collect();
        let m = DiscreteMeasure::uniform(&pts);
        for k in [1, 3, 6, 10] {
            let Ok(s) = sweeten(&m, 2f64.powi(k)) else {
                mass_ok = false;
                continue;
            };
            mass_ok &= s.mass() == 1.0;
            for _ in 0..10 {
                let z = Complex64::from_polar(10f64.powf(rng.gen_range(-2.0..4.0)), rng.gen_range(0.0..6.3));
                worst = worst.min(s.eta * potential_discrete(&m, z) + 1e-9 - s.potential(z));
            }
        }
    }
    out.push(Check::new(
        "sweetened truncation mass and domination",
        mass_ok && worst >= 0.0,
        format!("mass exact: {mass_ok}, smallest slack {worst:.3e}"),
    ));

    let cap = (|| {
        let mut worst: f64 = 0.0;
        for _ in 0..5 {
            let deg = rng.gen_range(1..=4);
            let mut co: Vec<i64> = (0..deg).map(|_| rng.gen_range(-3..=3)).collect();
            co.push(1);
            let e = energy(&Measure::lemniscate(IntPoly::from_i64(&co))?, 1e-11)?;
            worst = worst.max(e.abs());
        }
        Ok((worst <= 1e-8, format!("largest |energy| {worst:.3e}")))
    })();
    out.push(Check::from_result("monic lemniscates have capacity one", cap));

    let mut worst: f64 = 0.0;
    let mut failed = 0;
    for _ in 0..50 {
        let z = Complex64::from_polar(10f64.powf(rng.gen_range(-2.0..5.0)), rng.gen_range(0.0..6.3));
        match inverse_j(z) {
            Ok(t) => worst = worst.max((j_value(&t) - z).norm() / (1.0 + z.norm())),
            Err(_) => failed += 1,
        }
    }
    out.push(Check::new(
        "j(inverse_j(z)) round trip",
        failed == 0 && worst <= 1e-8,
        format!("relative residual {worst:.3e}, failures {failed}"),
    ));

    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let tau = c(rng.gen_range(-0.5..0.5), rng.gen_range(0.3..2.0));
        if let (Ok(a), Ok(b)) = (UpperHalfPoint::new(tau), UpperHalfPoint::new(-1.0 / tau)) {
            let (x, y) = (delta_pet(&a), delta_pet(&b));
            worst = worst.max((x - y).abs() / x.abs().max(1e-300));
        }
    }
    out.push(Check::new(
        "Petersson norm invariant under tau -> -1/tau",
        worst <= 1e-10,
        format!("relative difference {worst:.3e}"),
    ));
    out
}

fn close(name: &str, got: Result<f64>, want: f64, tol: f64) -> Check {
    Check::from_result(
        name,
        got.map(|v| ((v - want).abs() <= tol, format!("{v:.12} vs {want:.12} (tol {tol:e})"))),
    )
}

fn golden() -> Vec<Check> {
    let mut out = Vec::new();
    let p = |s: &str| IntPoly::parse(s).expect("literal polynomial");

    out.push(close(
        "Jensen: mean of log|z-2| on the unit circle",
        integrate_circle(1.0, &|z: Complex64| (z - 2.0).norm().ln(), 1e-12).map(|q| q.value),
        LN_2,
        1e-10,
    ));

    let hultberg = builtin("hultberg").expect("builtin");
    out.push(close(
        "hultberg pullback of the circle under (2z+1)/z",
        RationalPullbackMeasure::new(p("2*x + 1"), p("x"))
            .and_then(|m| integrate_pullback(&m, &|z| hultberg.eval(z), 1e-11))
            .map(|q| q.value),
        -LN_2,
        1e-6,
    ));

    for s in ["x", "x + 1", "x - 1", "x + 2", "x - 2", "x^2 + 1"] {
        let r = cap1_bound(&hultberg, &p(s), 1e-8).map(|w| w.value);
        out.push(Check::from_result(
            &format!("hultberg capacity-one bound for {s} is at least log 2"),
            r.map(|v| (v >= LN_2 - 1e-6, format!("{v:.9}"))),
        ));
    }

    out.push(close(
        "energy of the lemniscate of 2x",
        Measure::lemniscate(p("2*x")).and_then(|m| energy(&m, 1e-12)),
        LN_2,
        1e-8,
    ));

    let weil = builtin("weil").expect("builtin");
    out.push(close(
        "Weil witness x^2 - 2",
        eval_witness(&weil, &Measure::lemniscate(p("x^2 - 2")).expect("valid"), 1e-9).map(|w| w.value),
        0.5 * LN_2,
        1e-8,
    ));
    out.push(close(
        "Weil empty certificate certifies 0",
        certified_inf(&weil, &DualCertificate::empty(), &InfConfig::default()).map(|b| b.low),
        0.0,
        1e-9,
    ));

    let tau = inverse_j(c(1728.0, 0.0)).map(|t| t.tau);
    out.push(Check::from_result(
        "inverse_j(1728) = i",
        tau.map(|t| ((t - c(0.0, 1.0)).norm() <= 1e-10, format!("{t}"))),
    ));

    let zz = builtin("zhang_zagier").expect("builtin");
    let pool = [p("x"), p("x - 1"), p("x^2 - x + 1")];
    let lower = exchange_solve(&zz, &pool, &default_seed_grid(), &ExchangeConfig::default()).map(|o| o.best.lambda);
    out.push(Check::from_result(
        "Zhang-Zagier three-term certificate",
        lower.map(|l| ((0.10..=0.127228).contains(&l), format!("certified {l:.6}"))),
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names() {
        assert_eq!("golden".parse::<Suite>().unwrap(), Suite::Golden);
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn properties_pass() {
        for ch in run_suite(Suite::Properties, 7) {
            assert!(ch.passed, "{}: {}", ch.name, ch.detail);
        }
    }

    #[test]
    fn golden_pass() {
        let checks = run_suite(Suite::Golden, 0);
        assert!(checks.len() >= 10);
        for ch in checks {
            assert!(ch.passed, "{}: {}", ch.name, ch.detail);
        }
    }
}

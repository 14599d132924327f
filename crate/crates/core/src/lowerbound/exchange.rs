//! Cutting-plane solution of the semi-infinite dual LP.
//!
//! Each round solves the LP restricted to a finite point set `Z`, rounds the
//! weights to a rational certificate, bounds its infimum, and adds the
//! points where `φ_a` dips below the LP value.

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::inf::{certified_phi, heuristic_phi};
use super::{default_delta, rationalize, CertTerm, DualCertificate, InfConfig, Phi, Rigor};
use crate::error::{Error, Result};
use crate::greens::GreenFunction;
use crate::intpoly::{horner, IntPoly};
use crate::lp;

const LOG_FLOOR: f64 = -30.0;

/// Knobs for [`exchange_solve`].
#[derive(Clone, Debug, PartialEq)]
pub struct ExchangeConfig {
    pub max_rounds: usize,
    /// Stop once `LP value − λ ≤ tol`.
    pub tol: f64,
    pub inner: InfConfig,
    pub rigor: Rigor,
    /// Margin in `Σ a deg Q ≤ 1 − δ`.
    pub delta: BigRational,
    /// Cap on `|Z|`.
    pub max_points: usize,
}

impl Default for ExchangeConfig {
    fn default() -> Self {
        ExchangeConfig {
            max_rounds: 20,
            tol: 1e-3,
            inner: InfConfig::default(),
            rigor: Rigor::Certified,
            delta: default_delta(),
            max_points: 2000,
        }
    }
}

/// One exchange round.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub lp_value: f64,
    /// Value of this round's certificate.
    #[serde(with = "super::neg_inf_as_null")]
    pub lambda: f64,
    /// Best value so far; nondecreasing.
    #[serde(with = "super::neg_inf_as_null")]
    pub best: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExchangeOutcome {
    pub best: DualCertificate,
    /// Multistart value of `inf φ` for `best`; may exceed the true infimum.
    pub heuristic_lower: f64,
    pub history: Vec<RoundRecord>,
    pub points: Vec<Complex64>,
    /// Local minimizers of the last certificate, best first.
    pub minimizers: Vec<Complex64>,
}

/// A coarse set of LP sample points: a square grid near the origin and
/// log-spaced rings out to `10⁴`.
pub fn default_seed_grid() -> Vec<Complex64> {
    let mut z = Vec::new();
    for i in -8..=8 {
        for j in 0..=8 {
            z.push(Complex64::new(i as f64 * 0.25, j as f64 * 0.25));
        }
    }
    for k in 0..=24 {
        let r = 10f64.powf(-2.0 + 6.0 * k as f64 / 24.0);
        for s in 0..12 {
            z.push(Complex64::from_polar(r, std::f64::consts::PI * s as f64 / 11.0));
        }
    }
    z
}

fn push_point(z: &mut Vec<Complex64>, p: Complex64) -> bool {
    if !p.is_finite() || z.iter().any(|&w| (w - p).norm() <= 1e-9 * (1.0 + p.norm())) {
        return false;
    }
    z.push(p);
    true
}

struct Evaluated {
    lambda: f64,
    heuristic: f64,
    minima: Vec<(Complex64, f64)>,
    argmin: Complex64,
}

fn evaluate(g: &GreenFunction, cert: &DualCertificate, cfg: &ExchangeConfig, starts: &[Complex64]) -> Result<Evaluated> {
    let phi = Phi::new(g, cert);
    let h = heuristic_phi(&phi, starts);
    let (lambda, argmin) = match cfg.rigor {
        Rigor::Certified => {
            let b = certified_phi(&phi, cert, &cfg.inner, h.value, h.argmin)?;
            (b.low, b.argmin)
        }
        Rigor::Heuristic => (h.value, h.argmin),
    };
    Ok(Evaluated {
        lambda,
        heuristic: h.value,
        minima: h.minima,
        argmin,
    })
}

fn finalize(cert: &mut DualCertificate, lambda: f64, cfg: &ExchangeConfig, g: &GreenFunction) {
    cert.lambda = lambda;
    cert.tol = cfg.inner.tol;
    cert.rigor = if cfg.rigor == Rigor::Certified && g.enclosure_is_rigorous() {
        Rigor::Certified
    } else {
        Rigor::Heuristic
    };
}

/// Resumable exchange iteration; [`exchange_solve`] runs it to completion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExchangeState {
    pub best: DualCertificate,
    #[serde(with = "super::neg_inf_as_null")]
    pub best_heuristic: f64,
    pub history: Vec<RoundRecord>,
    pub points: Vec<Complex64>,
    pub minimizers: Vec<Complex64>,
}

/// Why [`ExchangeState::step`] ran no further round.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StepStatus {
    /// The round ran and added points; more rounds may help.
    Progress,
    /// LP value and certificate value agree within `tol` for this pool.
    Converged,
    /// No new sample point was found, or `max_points` was reached.
    Stalled,
}

impl ExchangeState {
    /// Evaluates the zero certificate and seeds `Z` with `seed_grid` plus its minimizers.
    pub fn new(g: &GreenFunction, seed_grid: &[Complex64], cfg: &ExchangeConfig) -> Result<Self> {
        let mut points: Vec<Complex64> = Vec::new();
        for &z in seed_grid {
            push_point(&mut points, z);
        }
        if points.is_empty() {
            return Err(Error::ConfigInvalid("exchange needs a nonempty seed grid".into()));
        }
        // a = 0 is admissible, so the zero certificate is the floor
        let mut best = DualCertificate::empty();
        let ev = evaluate(g, &best, cfg, &[])?;
        finalize(&mut best, ev.lambda, cfg, g);
        for &(z, _) in ev.minima.iter().take(8) {
            push_point(&mut points, z);
        }
        Ok(ExchangeState {
            best,
            best_heuristic: ev.heuristic,
            history: Vec::new(),
            points,
            minimizers: ev.minima.iter().map(|m| m.0).collect(),
        })
    }

    /// One LP solve, rationalization, and inf evaluation over `pool`.
    pub fn step(&mut self, g: &GreenFunction, pool: &[IntPoly], cfg: &ExchangeConfig) -> Result<StepStatus> {
        if pool.iter().any(|q| q.degree() < 1 || !q.is_primitive()) {
            return Err(Error::InvalidPolynomial("pool polynomials must be primitive of degree >= 1".into()));
        }
        if pool.is_empty() {
            return Ok(StepStatus::Converged);
        }
        let coeffs: Vec<Vec<f64>> = pool.iter().map(|q| q.to_f64_coeffs()).collect();
        let degrees: Vec<usize> = pool.iter().map(|q| q.degree()).collect();
        let n = pool.len();
        let one_minus_delta = (BigRational::from_integer(1.into()) - &cfg.delta).to_f64().unwrap_or(1.0);

        let mut rows: Vec<(f64, Vec<f64>)> = Vec::with_capacity(self.points.len());
        for &z in &self.points {
            let gz = g.eval(z);
            if !gz.is_finite() {
                continue;
            }
            // a zero of Qᵢ only constrains the other weights; clamping keeps
            // the row finite and the exchange repairs the neighbourhood
            let ls: Vec<f64> = coeffs.iter().map(|c| horner(c, z).norm().ln().max(LOG_FLOOR)).collect();
            rows.push((gz, ls));
        }
        if rows.is_empty() {
            return Err(Error::LpInfeasible);
        }
        let m0 = rows.iter().map(|r| r.0).fold(f64::INFINITY, f64::min) - 1.0;
        let mut a = Vec::with_capacity(rows.len() + 1);
        let mut b = Vec::with_capacity(rows.len() + 1);
        for (gz, ls) in &rows {
            let mut row = Vec::with_capacity(n + 1);
            row.push(1.0);
            row.extend_from_slice(ls);
            a.push(row);
            b.push(gz - m0);
        }
        let mut drow = vec![0.0];
        drow.extend(degrees.iter().map(|&d| d as f64));
        a.push(drow);
        b.push(one_minus_delta);
        // tiny decreasing penalties pick the lexicographically smallest optimum
        let mut c = vec![1.0];
        c.extend((0..n).map(|i| -1e-9 * (n - i) as f64 / n as f64));
        let sol = lp::solve(&a, &b, &c)?;
        let lp_value = sol.x[0] + m0;

        let weights = rationalize(&sol.x[1..], &degrees, &cfg.delta);
        let terms: Vec<CertTerm> = pool
            .iter()
            .zip(weights)
            .filter(|(_, w)| w.is_positive())
            .map(|(q, a)| CertTerm { q: q.clone(), a })
            .collect();
        let mut cert = DualCertificate::with_terms(terms)?;
        let ev = evaluate(g, &cert, cfg, &self.minimizers)?;
        finalize(&mut cert, ev.lambda, cfg, g);
        if ev.lambda > self.best.lambda {
            self.best = cert;
            self.best_heuristic = ev.heuristic;
        }
        self.minimizers = ev.minima.iter().map(|m| m.0).collect();
        self.history.push(RoundRecord {
            round: self.history.len() + 1,
            lp_value,
            lambda: ev.lambda,
            best: self.best.lambda,
            points: self.points.len(),
        });
        if lp_value - ev.lambda <= cfg.tol {
            return Ok(StepStatus::Converged);
        }
        let mut added = push_point(&mut self.points, ev.argmin);
        for &(z, v) in &ev.minima {
            if v < lp_value - 0.5 * cfg.tol {
                added |= push_point(&mut self.points, z);
                added |= push_point(&mut self.points, z.conj());
            }
        }
        if !added || self.points.len() >= cfg.max_points {
            return Ok(StepStatus::Stalled);
        }
        Ok(StepStatus::Progress)
    }

    pub fn into_outcome(mut self, g: &GreenFunction) -> Result<ExchangeOutcome> {
        if self.best.lambda.is_infinite() || self.best.lambda.is_nan() {
            return Err(Error::EnclosureUnavailable(format!("no finite lower bound for {}", g.name())));
        }
        if self.best.terms.iter().all(|t| t.a.is_zero()) {
            self.best.terms.clear();
        }
        Ok(ExchangeOutcome {
            best: self.best,
            heuristic_lower: self.best_heuristic,
            history: self.history,
            points: self.points,
            minimizers: self.minimizers,
        })
    }
}

/// Improves a dual certificate over `pool` by exchange rounds starting from
/// the sample points `seed_grid`.
pub fn exchange_solve(
    g: &GreenFunction,
    pool: &[IntPoly],
    seed_grid: &[Complex64],
    cfg: &ExchangeConfig,
) -> Result<ExchangeOutcome> {
    if pool.iter().any(|q| q.degree() < 1 || !q.is_primitive()) {
        return Err(Error::InvalidPolynomial("pool polynomials must be primitive of degree >= 1".into()));
    }
    let mut st = ExchangeState::new(g, seed_grid, cfg)?;
    for _ in 0..cfg.max_rounds {
        if st.step(g, pool, cfg)? != StepStatus::Progress {
            break;
        }
    }
    st.into_outcome(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::builtin;

    fn p(s: &str) -> IntPoly {
        IntPoly::parse(s).unwrap()
    }

    #[test]
    fn weil_pool_x() {
        let g = builtin("weil").unwrap();
        let out = exchange_solve(&g, &[p("x")], &[Complex64::new(2.0, 0.0)], &ExchangeConfig::default()).unwrap();
        assert!(out.best.lambda.abs() <= 1e-4, "{:?}", out.best);
        assert!(out.best.lambda <= 0.0);
        assert_eq!(out.best.rigor, Rigor::Certified);
    }

    #[test]
    fn zhang_zagier_three_term_pool() {
        let g = builtin("zhang_zagier").unwrap();
        let pool = [p("x"), p("x - 1"), p("x^2 - x + 1")];
        let out = exchange_solve(&g, &pool, &default_seed_grid(), &ExchangeConfig::default()).unwrap();
        assert!(out.best.lambda >= 0.10, "{:?}", out.history);
        assert!(out.best.lambda <= out.history.last().unwrap().lp_value + 1e-9);
        assert!(out.best.weight_degree_sum() < BigRational::from_integer(1.into()));
    }

    #[test]
    fn hultberg_approaches_zero_from_below() {
        let g = builtin("hultberg").unwrap();
        let out = exchange_solve(&g, &[p("x"), p("2*x + 1")], &default_seed_grid(), &ExchangeConfig::default()).unwrap();
        assert!(out.best.lambda >= -0.01 && out.best.lambda <= 1e-6, "{:?}", out.history);
        for w in out.history.windows(2) {
            assert!(w[1].best >= w[0].best - 1e-12);
        }
    }
}

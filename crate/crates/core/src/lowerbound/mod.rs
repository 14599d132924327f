//! Rational dual certificates and the exchange loop that improves them.
//!
//! A certificate is a finite list `(Q_i, a_i)` of primitive integer
//! polynomials with rational weights `a_i ≥ 0` and `Σ a_i deg Q_i < 1`. Any
//! such list bounds the essential minimum from below by
//! `inf_ℂ φ_a`, `φ_a = g − Σ a_i log|Q_i|`.

mod exchange;
mod inf;
mod recognize;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greens::GreenFunction;
use crate::intpoly::{horner, IntPoly};

pub use exchange::{default_seed_grid, exchange_solve, ExchangeConfig, ExchangeOutcome, ExchangeState, RoundRecord, StepStatus};
pub use inf::{certified_inf, heuristic_inf, HeuristicInf, InfBound, InfConfig};
pub use recognize::recognize;

/// Whether a certificate's `lambda` is backed by interval arithmetic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rigor {
    Heuristic,
    Certified,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertTerm {
    #[serde(rename = "Q")]
    pub q: IntPoly,
    #[serde(with = "rational_string")]
    pub a: BigRational,
}

/// `λ ≤ inf_ℂ (g − Σ aᵢ log|Qᵢ|)`, rigorous when `rigor` is `Certified`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CertificateJson")]
pub struct DualCertificate {
    pub terms: Vec<CertTerm>,
    /// `−∞` (written as `null`) until the certificate has been evaluated.
    #[serde(with = "neg_inf_as_null")]
    pub lambda: f64,
    pub rigor: Rigor,
    /// Inner tolerance `λ_high − λ_low` used when computing `lambda`.
    #[serde(default)]
    pub tol: f64,
}

#[derive(Deserialize)]
struct CertificateJson {
    terms: Vec<CertTerm>,
    #[serde(with = "neg_inf_as_null")]
    lambda: f64,
    rigor: Rigor,
    #[serde(default)]
    tol: f64,
}

impl TryFrom<CertificateJson> for DualCertificate {
    type Error = Error;

    fn try_from(j: CertificateJson) -> Result<Self> {
        let c = DualCertificate {
            terms: j.terms,
            lambda: j.lambda,
            rigor: j.rigor,
            tol: j.tol,
        };
        c.validate()?;
        Ok(c)
    }
}

impl DualCertificate {
    /// The zero certificate; its value is `inf g` once computed.
    pub fn empty() -> Self {
        DualCertificate {
            terms: Vec::new(),
            lambda: f64::NEG_INFINITY,
            rigor: Rigor::Heuristic,
            tol: 0.0,
        }
    }

    pub fn with_terms(terms: Vec<CertTerm>) -> Result<Self> {
        let c = DualCertificate {
            terms,
            ..DualCertificate::empty()
        };
        c.validate()?;
        Ok(c)
    }

    /// `Σ aᵢ deg Qᵢ` exactly.
    pub fn weight_degree_sum(&self) -> BigRational {
        self.terms
            .iter()
            .map(|t| &t.a * BigRational::from_integer(BigInt::from(t.q.degree())))
            .fold(BigRational::zero(), |s, x| s + x)
    }

    /// Weights nonnegative, polynomials primitive of degree ≥ 1, and
    /// `Σ aᵢ deg Qᵢ < 1` in exact arithmetic.
    pub fn validate(&self) -> Result<()> {
        for t in &self.terms {
            if t.a.is_negative() {
                return Err(Error::InvalidPolynomial(format!("negative weight {} on {}", t.a, t.q)));
            }
            if t.q.degree() < 1 || !t.q.is_primitive() {
                return Err(Error::InvalidPolynomial(format!("{} is not primitive of degree >= 1", t.q)));
            }
        }
        if self.weight_degree_sum() >= BigRational::one() {
            return Err(Error::InvalidPolynomial(format!(
                "weight-degree sum {} is not below 1",
                self.weight_degree_sum()
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("certificate serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// A certificate prepared for fast evaluation.
#[derive(Clone, Debug)]
pub struct Phi {
    pub(crate) g: GreenFunction,
    /// (coefficients, weight, degree) for terms with positive weight
    pub(crate) terms: Vec<(Vec<f64>, f64, usize)>,
}

impl Phi {
    pub fn new(g: &GreenFunction, cert: &DualCertificate) -> Self {
        let terms = cert
            .terms
            .iter()
            .filter(|t| t.a.is_positive())
            .map(|t| (t.q.to_f64_coeffs(), t.a.to_f64().unwrap_or(0.0), t.q.degree()))
            .collect();
        Phi { g: g.clone(), terms }
    }

    pub fn eval(&self, z: Complex64) -> f64 {
        let mut s = self.g.eval(z);
        for (c, a, _) in &self.terms {
            let v = horner(c, z).norm();
            if v == 0.0 {
                return f64::INFINITY;
            }
            s -= a * v.ln();
        }
        s
    }
}

/// `g(z) − Σ aᵢ log|Qᵢ(z)|`; `+∞` at zeros of any `Qᵢ` with `aᵢ > 0`.
pub fn phi_eval(g: &GreenFunction, cert: &DualCertificate, z: Complex64) -> f64 {
    Phi::new(g, cert).eval(z)
}

/// Denominator used by [`rationalize`].
pub const RATIONAL_BITS: u32 = 32;

/// Default margin `δ` in `Σ a deg Q ≤ 1 − δ`.
pub fn default_delta() -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << 20u32)
}

/// Rational weights `bᵢ ≤ aᵢ` with denominator `2³²` and
/// `Σ bᵢ deg Qᵢ ≤ (1 − δ)·min(1, Σ aᵢ deg Qᵢ)`.
pub fn rationalize(weights: &[f64], degrees: &[usize], delta: &BigRational) -> Vec<BigRational> {
    assert_eq!(weights.len(), degrees.len(), "one degree per weight");
    let exact: Vec<BigRational> = weights
        .iter()
        .map(|&w| if w > 0.0 { BigRational::from_float(w).unwrap_or_else(BigRational::zero) } else { BigRational::zero() })
        .collect();
    let s = exact
        .iter()
        .zip(degrees)
        .map(|(a, &d)| a * BigRational::from_integer(BigInt::from(d)))
        .fold(BigRational::zero(), |x, y| x + y);
    let mut factor = BigRational::one() - delta;
    if s > BigRational::one() {
        factor /= s;
    }
    let den = BigInt::one() << RATIONAL_BITS;
    exact
        .iter()
        .map(|a| {
            let num = (a * &factor * BigRational::from_integer(den.clone())).floor().to_integer();
            BigRational::new(num, den.clone())
        })
        .collect()
}

/// New pool candidates: recognized minimal polynomials of the minimizers,
/// then up to `batch` further primitive irreducible polynomials from `next`.
/// Nothing already in `pool` is returned.
pub fn pool_grow(
    pool: &[IntPoly],
    minimizers: &[Complex64],
    next: &mut dyn Iterator<Item = IntPoly>,
    batch: usize,
    max_height: u64,
) -> Vec<IntPoly> {
    let mut out: Vec<IntPoly> = Vec::new();
    let fresh = |p: &IntPoly, out: &Vec<IntPoly>| !pool.contains(p) && !out.contains(p);
    for &z in minimizers {
        if let Some(p) = recognize(z, 4, max_height) {
            if fresh(&p, &out) {
                out.push(p);
            }
        }
    }
    let mut added = 0;
    while added < batch {
        let Some(p) = next.next() else { break };
        if fresh(&p, &out) {
            out.push(p);
            added += 1;
        }
    }
    out
}

/// JSON has no infinities: `−∞` is written as `null` and read back.
pub(crate) mod neg_inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if *v == f64::NEG_INFINITY {
            s.serialize_none()
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }
}

mod rational_string {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};
    use std::str::FromStr;

    pub fn serialize<S: Serializer>(w: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&w.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        BigRational::from_str(s.trim()).map_err(|e| serde::de::Error::custom(format!("`{s}`: {e}")))
    }
}

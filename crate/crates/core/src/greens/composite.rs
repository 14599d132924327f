//! Green functions assembled from `log⁺|A/B|` and `log|A/B|` terms.
//!
//! Every spec is rewritten exactly into `offset + Σ w_j log max(|A_j|, |B_j|)`
//! with `gcd(A_j, B_j) = 1`. The rewrite expands `log⁺|A/B|` as
//! `log max(|A|,|B|) − log|B|` and cancels the bare `log|·|` terms over a
//! coprime basis; any bare term that survives is a genuine singularity.

use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::interval::{poly_abs_rect, Interval, Rect};
use crate::intpoly::{horner, IntPoly};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermKind {
    LogPlus,
    LogAbs,
}

/// `w · kind(|num / den|)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    #[serde(with = "rational_string")]
    pub w: BigRational,
    pub kind: TermKind,
    #[serde(with = "coeff_strings")]
    pub num: IntPoly,
    #[serde(with = "coeff_strings")]
    pub den: IntPoly,
}

impl Term {
    pub fn new(w: BigRational, kind: TermKind, num: IntPoly, den: IntPoly) -> Self {
        Term { w, kind, num, den }
    }

    /// Growth rate at infinity: `deg num − deg den`, clipped at zero for `log⁺`.
    pub fn effective_degree(&self) -> i64 {
        let d = self.num.degree() as i64 - self.den.degree() as i64;
        match self.kind {
            TermKind::LogPlus => d.max(0),
            TermKind::LogAbs => d,
        }
    }

    /// Direct evaluation of the term, without any simplification.
    pub fn eval(&self, z: Complex64) -> f64 {
        let r = self.num.eval_complex(z).norm() / self.den.eval_complex(z).norm();
        let v = match self.kind {
            TermKind::LogPlus => r.ln().max(0.0),
            TermKind::LogAbs => r.ln(),
        };
        self.w.to_f64().unwrap_or(f64::NAN) * v
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositeSpec {
    pub terms: Vec<Term>,
    #[serde(default)]
    pub offset: f64,
}

impl CompositeSpec {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("spec serializes")
    }

    /// `Σ w · effective_degree`, exactly.
    pub fn degree_sum(&self) -> BigRational {
        self.terms.iter().fold(BigRational::zero(), |acc, t| {
            acc + &t.w * BigRational::from_integer(BigInt::from(t.effective_degree()))
        })
    }

    /// Term-by-term evaluation; may be infinite where a factor vanishes.
    pub fn eval_direct(&self, z: Complex64) -> f64 {
        self.offset + self.terms.iter().map(|t| t.eval(z)).sum::<f64>()
    }

    pub fn concat(&self, other: &CompositeSpec) -> CompositeSpec {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        CompositeSpec {
            terms,
            offset: self.offset + other.offset,
        }
    }
}

/// One `w · log max(|A|, |B|)` term in floating form.
#[derive(Clone, Debug)]
pub(crate) struct MaxTerm {
    pub w: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// max(deg A, deg B)
    pub d: usize,
    /// leading behaviour `max(|A|,|B|)/|z|^d` at infinity, and its log
    pub c: f64,
    pub log_c: f64,
}

impl MaxTerm {
    fn new(w: f64, a: IntPoly, b: IntPoly) -> Self {
        let d = a.degree().max(b.degree());
        let lead = |p: &IntPoly| {
            if p.degree() == d {
                p.leading().abs().to_f64().unwrap_or(f64::INFINITY)
            } else {
                0.0
            }
        };
        let c = lead(&a).max(lead(&b));
        MaxTerm {
            w,
            a: a.to_f64_coeffs(),
            b: b.to_f64_coeffs(),
            d,
            c,
            log_c: c.ln(),
        }
    }

    #[inline]
    fn eval(&self, z: Complex64) -> f64 {
        let la = horner(&self.a, z).norm();
        let lb = horner(&self.b, z).norm();
        self.w * la.max(lb).ln()
    }

    /// Bounds on `log max(|A|,|B|) − d log r − log_c` over `|z| = r`.
    fn deviation(&self, r: f64) -> (f64, f64) {
        let band = |p: &[f64]| -> (f64, f64) {
            let lead = if p.len() == self.d + 1 { p[self.d].abs() } else { 0.0 };
            let mut rest = 0.0;
            let mut rk = 1.0;
            for k in (0..p.len().min(self.d)).rev() {
                rk /= r;
                rest += p[k].abs() * rk;
            }
            ((lead - rest).max(0.0), lead + rest)
        };
        let (alo, ahi) = band(&self.a);
        let (blo, bhi) = band(&self.b);
        let (lo_arg, hi_arg) = (alo.max(blo), ahi.max(bhi));
        if lo_arg == self.c && hi_arg == self.c {
            return (0.0, 0.0);
        }
        let lo = lo_arg.ln() - self.log_c;
        let hi = hi_arg.ln() - self.log_c;
        // relative rounding on the logs
        let slack = 1e-14 * (1.0 + lo.abs().min(1e300) + hi.abs());
        (lo - slack, hi + slack)
    }
}

/// Simplified composite: `offset + Σ max-terms`, with `Σ w_j d_j = 1`.
#[derive(Clone, Debug)]
pub(crate) struct Composite {
    pub offset: f64,
    pub terms: Vec<MaxTerm>,
    /// `g(z) − log|z| → c0` as `z → ∞`
    pub c0: f64,
}

/// Pairwise-coprime primitive factors with rational weights, plus the
/// constants they shed.
struct LogBasis {
    items: Vec<(IntPoly, BigRational)>,
    offset: f64,
}

impl LogBasis {
    fn add(&mut self, p: IntPoly, w: BigRational) {
        if w.is_zero() {
            return;
        }
        let c = p.content();
        let c = if p.leading().is_negative() { -c } else { c };
        self.offset += w.to_f64().unwrap_or(0.0) * big_ln(&c);
        let p = p.primitive_part();
        if p.is_constant() {
            return;
        }
        for i in 0..self.items.len() {
            let g = self.items[i].0.gcd(&p).primitive_part();
            if g.is_constant() {
                continue;
            }
            let (b, wb) = self.items.swap_remove(i);
            let b_rest = b.div_exact(&g).expect("gcd divides");
            let p_rest = p.div_exact(&g).expect("gcd divides");
            self.add(g, &wb + &w);
            self.add(b_rest, wb);
            self.add(p_rest, w);
            return;
        }
        self.items.push((p, w));
    }
}

fn big_ln(c: &BigInt) -> f64 {
    let a = c.abs();
    match a.to_f64() {
        Some(v) if v.is_finite() && v > 0.0 => v.ln(),
        _ => {
            // very large: scale by a power of two
            let bits = a.bits();
            let shift = bits.saturating_sub(60);
            let top: BigInt = &a >> shift;
            top.to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
        }
    }
}

impl Composite {
    pub fn build(spec: &CompositeSpec) -> Result<Self> {
        for t in &spec.terms {
            if t.den.is_zero() {
                return Err(Error::ZeroDenominator);
            }
            if t.num.is_zero() {
                return Err(Error::InvalidPolynomial("zero numerator in a log term".into()));
            }
        }
        let sum = spec.degree_sum();
        if sum != BigRational::from_integer(BigInt::from(1)) {
            return Err(Error::DegreeMismatch(sum.to_string()));
        }
        let mut basis = LogBasis {
            items: Vec::new(),
            offset: spec.offset,
        };
        // (weight, A, B) meaning w · log max(|A|,|B|)
        let mut maxes: Vec<(BigRational, IntPoly, IntPoly)> = Vec::new();
        for t in &spec.terms {
            match t.kind {
                TermKind::LogAbs => {
                    basis.add(t.num.clone(), t.w.clone());
                    basis.add(t.den.clone(), -t.w.clone());
                }
                TermKind::LogPlus => {
                    let g = t.num.gcd(&t.den).primitive_part();
                    let (a, b) = if g.is_constant() {
                        (t.num.clone(), t.den.clone())
                    } else {
                        (t.num.div_exact(&g).unwrap(), t.den.div_exact(&g).unwrap())
                    };
                    // log⁺|A/B| = log max(|A|,|B|) − log|B|
                    basis.add(b.clone(), -t.w.clone());
                    if a.is_constant() && b.is_constant() {
                        let va = big_ln(&a.coeff(0));
                        let vb = big_ln(&b.coeff(0));
                        basis.offset += t.w.to_f64().unwrap() * va.max(vb);
                    } else {
                        maxes.push((t.w.clone(), a, b));
                    }
                }
            }
        }
        let leftover: Vec<String> = basis
            .items
            .iter()
            .filter(|(_, w)| !w.is_zero())
            .map(|(p, w)| format!("{w} * log|{p}|"))
            .collect();
        if !leftover.is_empty() {
            return Err(Error::NotContinuous(format!(
                "unbounded terms remain: {}",
                leftover.join(" + ")
            )));
        }
        let terms: Vec<MaxTerm> = maxes
            .into_iter()
            .map(|(w, a, b)| MaxTerm::new(w.to_f64().unwrap(), a, b))
            .collect();
        let c0 = basis.offset + terms.iter().map(|t| t.w * t.log_c).sum::<f64>();
        Ok(Composite {
            offset: basis.offset,
            terms,
            c0,
        })
    }

    pub fn eval(&self, z: Complex64) -> f64 {
        self.offset + self.terms.iter().map(|t| t.eval(z)).sum::<f64>()
    }

    /// Interval of `g(z) − log|z| − c0` over `|z| = r`, also valid for all
    /// `|z| ≥ r` because the band narrows as `r` grows.
    pub fn tail_band(&self, r: f64) -> (f64, f64) {
        let mut lo = 0.0;
        let mut hi = 0.0;
        for t in &self.terms {
            let (a, b) = t.deviation(r);
            if t.w >= 0.0 {
                lo += t.w * a;
                hi += t.w * b;
            } else {
                lo += t.w * b;
                hi += t.w * a;
            }
        }
        (lo, hi)
    }

    pub fn enclosure(&self, r: &Rect) -> Interval {
        let mut acc = Interval::point(self.offset);
        for t in &self.terms {
            let la = poly_abs_rect(&t.a, r).ln();
            let lb = poly_abs_rect(&t.b, r).ln();
            acc = acc.add(la.max(lb).scale(t.w));
        }
        acc
    }
}

mod rational_string {
    use super::*;

    pub fn serialize<S: Serializer>(w: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&w.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        BigRational::from_str(s.trim()).map_err(|e| serde::de::Error::custom(format!("`{s}`: {e}")))
    }
}

mod coeff_strings {
    use super::*;

    pub fn serialize<S: Serializer>(p: &IntPoly, s: S) -> std::result::Result<S::Ok, S::Error> {
        p.to_decimal_strings().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<IntPoly, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        IntPoly::from_decimal_strings(&v).map_err(serde::de::Error::custom)
    }
}

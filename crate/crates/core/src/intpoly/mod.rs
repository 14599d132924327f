//! Exact integer polynomials.
//!
//! Coefficients are arbitrary-precision and stored in ascending degree. The
//! zero polynomial is the empty coefficient vector.

mod enumerate;
mod factor;
mod text;

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use enumerate::{enumerate, enumerate_block, enumerate_graded, Enumeration, PolyFilter};

/// Default degree cap for [`IntPoly::is_irreducible_q`].
pub const DEFAULT_MAX_IRREDUCIBILITY_DEGREE: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Irreducibility {
    Yes,
    No,
    Unknown,
}

#[derive(Clone, Default)]
pub struct IntPoly {
    coeffs: Vec<BigInt>,
    irreducible: OnceLock<bool>,
}

impl IntPoly {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        IntPoly {
            coeffs,
            irreducible: OnceLock::new(),
        }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero() -> Self {
        Self::new(Vec::new())
    }

    pub fn constant(c: impl Into<BigInt>) -> Self {
        Self::new(vec![c.into()])
    }

    /// The monomial `x`.
    pub fn x() -> Self {
        Self::from_i64(&[0, 1])
    }

    /// `x - r`
    pub fn linear_root(r: i64) -> Self {
        Self::from_i64(&[-r, 1])
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn leading(&self) -> BigInt {
        self.coeffs.last().cloned().unwrap_or_default()
    }

    pub fn coeff(&self, k: usize) -> BigInt {
        self.coeffs.get(k).cloned().unwrap_or_default()
    }

    pub fn is_monic(&self) -> bool {
        self.coeffs.last().is_some_and(|c| c.is_one())
    }

    /// Gcd of the coefficients, nonnegative.
    pub fn content(&self) -> BigInt {
        self.coeffs
            .iter()
            .fold(BigInt::zero(), |acc, c| acc.gcd(c))
    }

    pub fn is_primitive(&self) -> bool {
        !self.is_zero() && self.content().is_one()
    }

    /// Primitive part with positive leading coefficient.
    pub fn primitive_part(&self) -> IntPoly {
        if self.is_zero() {
            return self.clone();
        }
        let mut c = self.content();
        if self.leading().is_negative() {
            c = -c;
        }
        IntPoly::new(self.coeffs.iter().map(|a| a / &c).collect())
    }

    /// Height: maximum absolute value of the coefficients.
    pub fn height(&self) -> BigInt {
        self.coeffs
            .iter()
            .map(|c| c.abs())
            .max()
            .unwrap_or_default()
    }

    pub fn height_u64(&self) -> u64 {
        self.height().to_u64().unwrap_or(u64::MAX)
    }

    /// Sum of absolute values of the coefficients (the length).
    pub fn length_f64(&self) -> f64 {
        self.coeffs.iter().map(|c| c.to_f64().unwrap().abs()).sum()
    }

    pub fn to_f64_coeffs(&self) -> Vec<f64> {
        self.coeffs
            .iter()
            .map(|c| c.to_f64().unwrap_or(f64::NAN))
            .collect()
    }

    pub fn to_complex_coeffs(&self) -> Vec<Complex64> {
        self.to_f64_coeffs()
            .into_iter()
            .map(|c| Complex64::new(c, 0.0))
            .collect()
    }

    pub fn scale(&self, k: &BigInt) -> IntPoly {
        IntPoly::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    /// Horner evaluation in binary64 complex arithmetic.
    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        horner(&self.to_f64_coeffs(), z)
    }

    pub fn eval_int(&self, x: &BigInt) -> BigInt {
        self.coeffs
            .iter()
            .rev()
            .fold(BigInt::zero(), |acc, c| acc * x + c)
    }

    pub fn derivative(&self) -> IntPoly {
        IntPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * BigInt::from(k))
                .collect(),
        )
    }

    pub fn pow(&self, n: u32) -> IntPoly {
        let mut acc = IntPoly::constant(1);
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Pseudo-remainder of `self` by `d`: remainder of `lc(d)^(deg self - deg d + 1) * self`.
    pub fn pseudo_rem(&self, d: &IntPoly) -> IntPoly {
        assert!(!d.is_zero(), "pseudo-division by zero polynomial");
        if self.is_zero() || self.degree() < d.degree() {
            return self.clone();
        }
        let lc = d.leading();
        let dd = d.degree();
        let mut r = self.coeffs.clone();
        let mut e = self.degree() - dd + 1;
        while r.len() > dd && !r.is_empty() {
            let k = r.len() - 1;
            let top = r[k].clone();
            for c in r.iter_mut() {
                *c *= &lc;
            }
            let shift = k - dd;
            for (j, dc) in d.coeffs.iter().enumerate() {
                r[shift + j] -= &top * dc;
            }
            r.pop();
            while r.last().is_some_and(|c| c.is_zero()) {
                r.pop();
            }
            e -= 1;
        }
        let f = num_traits::pow(lc, e);
        IntPoly::new(r.into_iter().map(|c| c * &f).collect())
    }

    /// Exact quotient `self / d` in ℤ[x], or `None` when `d` does not divide.
    pub fn div_exact(&self, d: &IntPoly) -> Option<IntPoly> {
        if d.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(IntPoly::zero());
        }
        if self.degree() < d.degree() {
            return None;
        }
        let lc = d.leading();
        let dd = d.degree();
        let mut r = self.coeffs.clone();
        let mut q = vec![BigInt::zero(); self.degree() - dd + 1];
        for k in (dd..r.len()).rev() {
            if r[k].is_zero() {
                continue;
            }
            let (qk, rem) = r[k].div_rem(&lc);
            if !rem.is_zero() {
                return None;
            }
            for (j, dc) in d.coeffs.iter().enumerate() {
                r[k - dd + j] -= &qk * dc;
            }
            q[k - dd] = qk;
        }
        if r.iter().any(|c| !c.is_zero()) {
            return None;
        }
        Some(IntPoly::new(q))
    }

    /// Exact division by an integer scalar; panics when not exact.
    fn div_scalar(&self, k: &BigInt) -> IntPoly {
        IntPoly::new(
            self.coeffs
                .iter()
                .map(|c| {
                    let (q, r) = c.div_rem(k);
                    debug_assert!(r.is_zero());
                    q
                })
                .collect(),
        )
    }

    /// Greatest common divisor in ℤ[x], normalized to a positive leading coefficient.
    pub fn gcd(&self, other: &IntPoly) -> IntPoly {
        if self.is_zero() {
            return other.primitive_part().scale(&other.content());
        }
        if other.is_zero() {
            return self.primitive_part().scale(&self.content());
        }
        let c = self.content().gcd(&other.content());
        let (mut a, mut b) = (self.primitive_part(), other.primitive_part());
        if a.degree() < b.degree() {
            std::mem::swap(&mut a, &mut b);
        }
        while !b.is_zero() {
            let r = a.pseudo_rem(&b);
            a = b;
            b = if r.is_zero() { r } else { r.primitive_part() };
        }
        a.primitive_part().scale(&c)
    }

    /// `[(B_i, i)]` with primitive squarefree pairwise coprime `B_i` of positive
    /// degree and `self = c · Π B_i^i` for a constant `c`.
    pub fn squarefree_decomposition(&self) -> Vec<(IntPoly, u32)> {
        let mut out = Vec::new();
        if self.degree() == 0 {
            return out;
        }
        let p = self.primitive_part();
        let mut a = p.gcd(&p.derivative()).primitive_part();
        let mut b = p.div_exact(&a).expect("gcd divides").primitive_part();
        let mut i = 1;
        while b.degree() > 0 {
            let c = a.gcd(&b).primitive_part();
            let factor = b.div_exact(&c).expect("gcd divides").primitive_part();
            if factor.degree() > 0 {
                out.push((factor, i));
            }
            a = a.div_exact(&c).expect("gcd divides");
            b = c;
            i += 1;
        }
        out
    }

    pub fn is_squarefree(&self) -> bool {
        if self.degree() < 2 {
            return true;
        }
        self.gcd(&self.derivative()).degree() == 0
    }

    /// Whether `self` is irreducible over ℚ. Degree must lie in `1..=8`.
    pub fn is_irreducible_q(&self) -> Result<bool> {
        self.is_irreducible_q_upto(DEFAULT_MAX_IRREDUCIBILITY_DEGREE)
    }

    pub fn is_irreducible_q_upto(&self, max_degree: usize) -> Result<bool> {
        if let Some(&v) = self.irreducible.get() {
            return Ok(v);
        }
        if self.is_constant() {
            return Err(Error::InvalidPolynomial(
                "irreducibility requires degree >= 1".into(),
            ));
        }
        if self.degree() > max_degree {
            return Err(Error::DegreeTooLarge {
                degree: self.degree(),
                max: max_degree,
            });
        }
        let v = factor::is_irreducible(&self.primitive_part());
        let _ = self.irreducible.set(v);
        Ok(v)
    }

    pub fn irreducibility(&self) -> Irreducibility {
        match self.irreducible.get() {
            Some(true) => Irreducibility::Yes,
            Some(false) => Irreducibility::No,
            None => Irreducibility::Unknown,
        }
    }

    /// Records a known irreducibility status (used for cyclotomic polynomials).
    pub(crate) fn with_irreducible(self, v: bool) -> Self {
        let _ = self.irreducible.set(v);
        self
    }

    /// Resultant `Res(self, other) = lc(self)^deg(other) · Π_{self(α)=0} other(α)`,
    /// computed exactly with the subresultant pseudo-remainder sequence.
    pub fn resultant(&self, other: &IntPoly) -> BigInt {
        resultant(self, other)
    }

    /// Complex roots (with multiplicity) by the numerical root finder.
    pub fn complex_roots(&self) -> Result<crate::roots::RootSet> {
        crate::roots::all_roots(&self.to_complex_coeffs())
    }

    /// `n`-th cyclotomic polynomial.
    pub fn cyclotomic(n: u32) -> IntPoly {
        assert!(n >= 1, "cyclotomic index must be positive");
        let mut num = vec![BigInt::zero(); n as usize + 1];
        num[0] = BigInt::from(-1);
        num[n as usize] = BigInt::one();
        let mut p = IntPoly::new(num);
        for d in 1..n {
            if n % d == 0 {
                p = p
                    .div_exact(&IntPoly::cyclotomic(d))
                    .expect("cyclotomic divisibility");
            }
        }
        p.with_irreducible(true)
    }

    /// Parses `"x^2 - 2"`-style text.
    pub fn parse(s: &str) -> Result<IntPoly> {
        text::parse(s)
    }

    /// Parses the JSON array-of-decimal-strings form, ascending degree.
    pub fn from_decimal_strings(v: &[String]) -> Result<IntPoly> {
        v.iter()
            .map(|s| {
                s.trim()
                    .parse::<BigInt>()
                    .map_err(|e| Error::Parse(format!("`{s}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()
            .map(IntPoly::new)
    }

    pub fn to_decimal_strings(&self) -> Vec<String> {
        self.coeffs.iter().map(|c| c.to_string()).collect()
    }
}

pub(crate) fn horner(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

fn resultant(p: &IntPoly, q: &IntPoly) -> BigInt {
    if p.is_zero() || q.is_zero() {
        return BigInt::zero();
    }
    if p.is_constant() {
        return num_traits::pow(p.leading(), q.degree());
    }
    if q.is_constant() {
        return num_traits::pow(q.leading(), p.degree());
    }
    let (mut a, mut b) = (p.clone(), q.clone());
    let mut s = BigInt::one();
    if a.degree() < b.degree() {
        if a.degree() % 2 == 1 && b.degree() % 2 == 1 {
            s = -s;
        }
        std::mem::swap(&mut a, &mut b);
    }
    let (ca, cb) = (a.content(), b.content());
    let t = num_traits::pow(ca.clone(), b.degree()) * num_traits::pow(cb.clone(), a.degree());
    a = a.div_scalar(&ca);
    b = b.div_scalar(&cb);
    let mut g = BigInt::one();
    let mut h = BigInt::one();
    loop {
        let delta = a.degree() - b.degree();
        if a.degree() % 2 == 1 && b.degree() % 2 == 1 {
            s = -s;
        }
        let r = a.pseudo_rem(&b);
        if r.is_zero() {
            return BigInt::zero();
        }
        a = b;
        let denom = &g * num_traits::pow(h.clone(), delta);
        b = r.div_scalar(&denom);
        g = a.leading();
        // h <- h^(1-delta) g^delta
        h = if delta == 0 {
            h
        } else {
            num_traits::pow(g.clone(), delta) / num_traits::pow(h.clone(), delta - 1)
        };
        if b.degree() == 0 {
            let da = a.degree();
            let num = num_traits::pow(b.leading(), da);
            let hh = if da == 0 {
                num * h
            } else {
                num / num_traits::pow(h, da - 1)
            };
            return s * t * hh;
        }
    }
}

impl PartialEq for IntPoly {
    fn eq(&self, other: &Self) -> bool {
        self.coeffs == other.coeffs
    }
}

impl Eq for IntPoly {}

impl Hash for IntPoly {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.coeffs.hash(state);
    }
}

/// Enumeration order: degree, then height, then coefficients lexicographically
/// from the leading one down.
impl Ord for IntPoly {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.height().cmp(&other.height()))
            .then_with(|| self.coeffs.iter().rev().cmp(other.coeffs.iter().rev()))
    }
}

impl PartialOrd for IntPoly {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IntPoly({self})")
    }
}

impl fmt::Display for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&text::format(self))
    }
}

impl Serialize for IntPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for IntPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        IntPoly::parse(&s).map_err(serde::de::Error::custom)
    }
}

impl Add for &IntPoly {
    type Output = IntPoly;
    fn add(self, rhs: &IntPoly) -> IntPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        IntPoly::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &IntPoly {
    type Output = IntPoly;
    fn sub(self, rhs: &IntPoly) -> IntPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        IntPoly::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &IntPoly {
    type Output = IntPoly;
    fn mul(self, rhs: &IntPoly) -> IntPoly {
        if self.is_zero() || rhs.is_zero() {
            return IntPoly::zero();
        }
        let mut out = vec![BigInt::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        IntPoly::new(out)
    }
}

impl Neg for &IntPoly {
    type Output = IntPoly;
    fn neg(self) -> IntPoly {
        IntPoly::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

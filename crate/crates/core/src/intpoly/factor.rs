//! Irreducibility over ℚ by factoring modulo one large prime and recombining.
//!
//! The prime exceeds twice the Mignotte bound on the coefficients of
//! `lc(f) · g / lc(g)` for any factor `g`, so every true factor is recovered
//! from some product of modular factors by symmetric lifting; no Hensel
//! lifting is needed.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::IntPoly;

/// `f` must be primitive with positive leading coefficient and degree >= 1.
pub(super) fn is_irreducible(f: &IntPoly) -> bool {
    let n = f.degree();
    if n == 1 {
        return true;
    }
    if !f.is_squarefree() {
        return false;
    }
    // x | f
    if f.coeff(0).is_zero() {
        return false;
    }
    if n == 2 || n == 3 {
        return !has_rational_root(f);
    }
    let lc = f.leading().abs();
    let norm2: f64 = f
        .coeffs()
        .iter()
        .map(|c| {
            let v = c.to_f64().unwrap();
            v * v
        })
        .sum::<f64>()
        .sqrt();
    let bound = lc.to_f64().unwrap() * 2f64.powi(n as i32) * norm2.ceil();
    let start = (2.0 * bound + 1.0).max(1000.0);
    if start > 4.0e18 {
        // TODO: Hensel lifting from a small prime once moduli outgrow u64.
        panic!("coefficients too large for modular irreducibility test");
    }
    let mut p = next_prime(start as u64);
    loop {
        if !(&f.leading() % BigInt::from(p)).is_zero() {
            let fp = Fp::reduce(f, p);
            let dfp = fp.derivative();
            if fp.gcd(&dfp).degree() == 0 {
                let factors = fp.factor();
                if factors.len() == 1 {
                    return true;
                }
                return !recombine(f, &factors, p);
            }
        }
        p = next_prime(p + 1);
    }
}

fn has_rational_root(f: &IntPoly) -> bool {
    let a0 = f.coeff(0).abs();
    let an = f.leading().abs();
    let divisors = |m: &BigInt| -> Vec<BigInt> {
        let m = m.to_u64().expect("rational root test on huge coefficient");
        (1..=m)
            .filter(|d| m % d == 0)
            .map(BigInt::from)
            .collect()
    };
    for p in divisors(&a0) {
        for q in divisors(&an) {
            if !p.gcd(&q).is_one() {
                continue;
            }
            for s in [p.clone(), -p.clone()] {
                // q^n f(s/q)
                let n = f.degree();
                let val: BigInt = f
                    .coeffs()
                    .iter()
                    .enumerate()
                    .map(|(k, c)| c * num_traits::pow(s.clone(), k) * num_traits::pow(q.clone(), n - k))
                    .sum();
                if val.is_zero() {
                    return true;
                }
            }
        }
    }
    false
}

fn recombine(f: &IntPoly, factors: &[Fp], p: u64) -> bool {
    let r = factors.len();
    let lc = f.leading();
    let lc_mod = BigInt::from(p) + (&lc % BigInt::from(p));
    let lc_mod = (lc_mod % BigInt::from(p)).to_u64().unwrap();
    for size in 1..=r / 2 {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            let mut g = Fp::constant(lc_mod, p);
            for &i in &idx {
                g = g.mul(&factors[i]);
            }
            let cand = g.symmetric_lift().primitive_part();
            if cand.degree() >= 1 && f.div_exact(&cand).is_some() {
                return true;
            }
            if !next_combination(&mut idx, r) {
                break;
            }
        }
    }
    false
}

/// Advances `idx` to the next k-subset of `0..n` in lexicographic order.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn pow_mod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1u64;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mul_mod(r, a, p);
        }
        a = mul_mod(a, a, p);
        e >>= 1;
    }
    r
}

fn inv_mod(a: u64, p: u64) -> u64 {
    pow_mod(a, p - 2, p)
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for sp in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % sp == 0 {
            return n == sp;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn next_prime(mut n: u64) -> u64 {
    if n <= 2 {
        return 2;
    }
    if n % 2 == 0 {
        n += 1;
    }
    while !is_prime(n) {
        n += 2;
    }
    n
}

/// Dense polynomial over 𝔽_p, ascending degree, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Fp {
    c: Vec<u64>,
    p: u64,
}

impl Fp {
    fn new(mut c: Vec<u64>, p: u64) -> Self {
        while c.last() == Some(&0) {
            c.pop();
        }
        Fp { c, p }
    }

    fn constant(a: u64, p: u64) -> Self {
        Fp::new(vec![a % p], p)
    }

    fn reduce(f: &IntPoly, p: u64) -> Self {
        let bp = BigInt::from(p);
        Fp::new(
            f.coeffs()
                .iter()
                .map(|c| (((c % &bp) + &bp) % &bp).to_u64().unwrap())
                .collect(),
            p,
        )
    }

    fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    fn degree(&self) -> usize {
        self.c.len().saturating_sub(1)
    }

    fn lead(&self) -> u64 {
        *self.c.last().unwrap_or(&0)
    }

    fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let inv = inv_mod(self.lead(), self.p);
        Fp::new(self.c.iter().map(|&a| mul_mod(a, inv, self.p)).collect(), self.p)
    }

    fn derivative(&self) -> Self {
        Fp::new(
            self.c
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &a)| mul_mod(a, k as u64 % self.p, self.p))
                .collect(),
            self.p,
        )
    }

    fn sub(&self, o: &Fp) -> Fp {
        let n = self.c.len().max(o.c.len());
        let p = self.p;
        Fp::new(
            (0..n)
                .map(|k| {
                    let a = *self.c.get(k).unwrap_or(&0);
                    let b = *o.c.get(k).unwrap_or(&0);
                    (a + p - b) % p
                })
                .collect(),
            p,
        )
    }

    fn mul(&self, o: &Fp) -> Fp {
        if self.is_zero() || o.is_zero() {
            return Fp::new(vec![], self.p);
        }
        let p = self.p;
        let mut out = vec![0u64; self.c.len() + o.c.len() - 1];
        for (i, &a) in self.c.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in o.c.iter().enumerate() {
                out[i + j] = (out[i + j] + mul_mod(a, b, p)) % p;
            }
        }
        Fp::new(out, p)
    }

    fn divrem(&self, d: &Fp) -> (Fp, Fp) {
        let p = self.p;
        if self.c.len() < d.c.len() {
            return (Fp::new(vec![], p), self.clone());
        }
        let inv = inv_mod(d.lead(), p);
        let dd = d.degree();
        let mut r = self.c.clone();
        let mut q = vec![0u64; r.len() - dd];
        for k in (dd..r.len()).rev() {
            let coef = mul_mod(r[k], inv, p);
            q[k - dd] = coef;
            if coef == 0 {
                continue;
            }
            for (j, &dc) in d.c.iter().enumerate() {
                let t = mul_mod(coef, dc, p);
                r[k - dd + j] = (r[k - dd + j] + p - t) % p;
            }
        }
        (Fp::new(q, p), Fp::new(r, p))
    }

    fn rem(&self, d: &Fp) -> Fp {
        self.divrem(d).1
    }

    fn gcd(&self, o: &Fp) -> Fp {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a.monic()
    }

    fn pow_mod_big(&self, e: &BigUint, m: &Fp) -> Fp {
        let mut result = Fp::constant(1, self.p);
        let base = self.rem(m);
        for i in (0..e.bits()).rev() {
            result = result.mul(&result).rem(m);
            if e.bit(i) {
                result = result.mul(&base).rem(m);
            }
        }
        result
    }

    /// Distinct-degree then equal-degree (Cantor–Zassenhaus) factorization of a
    /// squarefree polynomial into monic irreducibles.
    fn factor(&self) -> Vec<Fp> {
        let p = self.p;
        let mut f = self.monic();
        let x = Fp::new(vec![0, 1], p);
        let mut h = x.clone();
        let mut out = Vec::new();
        let mut d = 1usize;
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ p);
        while f.degree() >= 2 * d {
            h = h.pow_mod_big(&BigUint::from(p), &f);
            let g = h.sub(&x).gcd(&f);
            if g.degree() > 0 {
                out.extend(g.equal_degree_split(d, &mut rng));
                f = f.divrem(&g).0.monic();
                h = h.rem(&f);
            }
            d += 1;
        }
        if f.degree() > 0 {
            out.push(f);
        }
        out
    }

    fn equal_degree_split(&self, d: usize, rng: &mut ChaCha8Rng) -> Vec<Fp> {
        let n = self.degree();
        if n == d {
            return vec![self.clone()];
        }
        let p = self.p;
        let e: BigUint = (num_traits::pow(BigUint::from(p), d) - BigUint::one()) / BigUint::from(2u32);
        loop {
            let a = Fp::new((0..n).map(|_| rng.gen_range(0..p)).collect(), p);
            if a.degree() < 1 {
                continue;
            }
            let b = a.pow_mod_big(&e, self).sub(&Fp::constant(1, p));
            let u = b.gcd(self);
            if u.degree() > 0 && u.degree() < n {
                let v = self.divrem(&u).0.monic();
                let mut out = u.equal_degree_split(d, rng);
                out.extend(v.equal_degree_split(d, rng));
                return out;
            }
        }
    }

    fn symmetric_lift(&self) -> IntPoly {
        let half = self.p / 2;
        IntPoly::new(
            self.c
                .iter()
                .map(|&a| {
                    if a > half {
                        BigInt::from(a) - BigInt::from(self.p)
                    } else {
                        BigInt::from(a)
                    }
                })
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primes() {
        assert!(is_prime(1_000_003));
        assert!(!is_prime(1_000_001));
        assert_eq!(next_prime(1000), 1009);
    }

    #[test]
    fn modular_factorization_multiplies_back() {
        let f = IntPoly::from_i64(&[-1, 0, 0, 0, 0, 0, 0, 0, 1]); // x^8 - 1
        let p = 1009;
        let fp = Fp::reduce(&f, p);
        let factors = fp.factor();
        let prod = factors.iter().fold(Fp::constant(1, p), |acc, g| acc.mul(g));
        assert_eq!(prod, fp.monic());
        // 1009 ≡ 1 mod 8 so x^8 - 1 splits completely
        assert_eq!(factors.len(), 8);
    }
}

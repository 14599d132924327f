//! Deterministic enumeration of integer polynomials.
//!
//! Order: degree ascending, then height (max |coefficient|) ascending, then the
//! coefficient vector read from the leading coefficient down, lexicographically
//! ascending. Each polynomial appears exactly once.

use num_bigint::BigInt;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use super::IntPoly;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolyFilter {
    Any,
    /// Primitive, irreducible over ℚ, positive leading coefficient.
    PrimitiveIrreducible,
    MonicIrreducible,
}

impl PolyFilter {
    pub fn accepts(self, p: &IntPoly) -> bool {
        match self {
            PolyFilter::Any => !p.is_zero(),
            PolyFilter::PrimitiveIrreducible => {
                p.degree() >= 1
                    && p.leading().is_positive()
                    && p.is_primitive()
                    && p.is_irreducible_q_upto(usize::MAX).unwrap_or(false)
            }
            PolyFilter::MonicIrreducible => {
                p.degree() >= 1 && p.is_monic() && p.is_irreducible_q_upto(usize::MAX).unwrap_or(false)
            }
        }
    }
}

/// Restartable stream of polynomials of degree `1..=max_degree`, height
/// `1..=max_height`, passing `filter`.
#[derive(Clone, Debug)]
pub struct Enumeration {
    max_degree: usize,
    max_height: i64,
    filter: PolyFilter,
    degree: usize,
    height: i64,
    // current coefficient tuple, leading first
    digits: Vec<i64>,
    started: bool,
}

pub fn enumerate(max_degree: usize, max_height: u64, filter: PolyFilter) -> Enumeration {
    assert!(max_degree >= 1, "max_degree must be at least 1");
    Enumeration {
        max_degree,
        max_height: max_height as i64,
        filter,
        degree: 1,
        height: 1,
        digits: Vec::new(),
        started: false,
    }
}

/// The single `(degree, height)` block of [`enumerate`], in the same order.
pub fn enumerate_block(degree: usize, height: u64, filter: PolyFilter) -> Enumeration {
    assert!(degree >= 1 && height >= 1, "degree and height must be at least 1");
    Enumeration {
        max_degree: degree,
        max_height: height as i64,
        filter,
        degree,
        height: height as i64,
        digits: Vec::new(),
        started: false,
    }
}

/// Blocks ordered by `degree + height`, then degree: small polynomials of
/// every degree come before tall ones of low degree.
pub fn enumerate_graded(max_degree: usize, max_height: u64, filter: PolyFilter) -> impl Iterator<Item = IntPoly> {
    let levels = 2..=max_degree + max_height as usize;
    levels.flat_map(move |l| {
        (1..=max_degree.min(l - 1))
            .filter(move |&d| (l - d) as u64 <= max_height)
            .flat_map(move |d| enumerate_block(d, (l - d) as u64, filter))
    })
}

impl Enumeration {
    fn lead_range(&self) -> (i64, i64) {
        match self.filter {
            PolyFilter::MonicIrreducible => (1, 1),
            PolyFilter::PrimitiveIrreducible => (1, self.height),
            PolyFilter::Any => (-self.height, self.height),
        }
    }

    fn reset_block(&mut self) {
        let (lo, _) = self.lead_range();
        let h = self.height;
        let mut d = vec![-h; self.degree + 1];
        d[0] = lo;
        self.digits = d;
    }

    /// Advances the raw tuple within the current (degree, height) box; false when exhausted.
    fn advance(&mut self) -> bool {
        let h = self.height;
        let (_, hi) = self.lead_range();
        for i in (0..self.digits.len()).rev() {
            let top = if i == 0 { hi } else { h };
            if self.digits[i] < top {
                self.digits[i] += 1;
                for j in i + 1..self.digits.len() {
                    self.digits[j] = -h;
                }
                if i == 0 && self.digits[0] == 0 {
                    // leading coefficient never zero
                    self.digits[0] = 1;
                }
                return true;
            }
        }
        false
    }

    fn next_block(&mut self) -> bool {
        if self.height < self.max_height {
            self.height += 1;
        } else if self.degree < self.max_degree {
            self.degree += 1;
            self.height = 1;
        } else {
            return false;
        }
        self.reset_block();
        true
    }

    fn current_ok(&self) -> bool {
        let h = self.height;
        if self.digits[0] == 0 {
            return false;
        }
        if !self.digits.iter().any(|d| d.abs() == h) {
            return false;
        }
        true
    }

    fn current(&self) -> IntPoly {
        IntPoly::new(self.digits.iter().rev().map(|&d| BigInt::from(d)).collect())
    }
}

impl Iterator for Enumeration {
    type Item = IntPoly;

    fn next(&mut self) -> Option<IntPoly> {
        loop {
            if !self.started {
                self.started = true;
                self.reset_block();
            } else if !self.advance() && !self.next_block() {
                return None;
            }
            if self.current_ok() {
                let p = self.current();
                if self.filter.accepts(&p) {
                    return Some(p);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graded_is_a_permutation_of_enumerate() {
        let full: BTreeSet<IntPoly> = enumerate(3, 3, PolyFilter::MonicIrreducible).collect();
        let graded: Vec<IntPoly> = enumerate_graded(3, 3, PolyFilter::MonicIrreducible).collect();
        assert_eq!(graded.len(), full.len());
        assert_eq!(graded.iter().cloned().collect::<BTreeSet<_>>(), full);
        let weight = |p: &IntPoly| p.degree() as u64 + p.height_u64();
        assert!(graded.windows(2).all(|w| weight(&w[0]) <= weight(&w[1])));
        let blk: Vec<IntPoly> = enumerate_block(2, 1, PolyFilter::MonicIrreducible).collect();
        assert!(blk.iter().all(|p| p.degree() == 2 && p.height_u64() == 1));
        assert!(blk.contains(&IntPoly::parse("x^2 + x + 1").unwrap()));
    }
    use std::collections::BTreeSet;

    fn brute(max_deg: usize, h: i64, filter: PolyFilter) -> BTreeSet<IntPoly> {
        let mut out = BTreeSet::new();
        for d in 1..=max_deg {
            let n = (2 * h + 1).pow(d as u32 + 1);
            for mut idx in 0..n {
                let mut c = Vec::new();
                for _ in 0..=d {
                    c.push(idx % (2 * h + 1) - h);
                    idx /= 2 * h + 1;
                }
                if c[d] == 0 {
                    continue;
                }
                let p = IntPoly::from_i64(&c);
                let ok = match filter {
                    PolyFilter::Any => true,
                    PolyFilter::MonicIrreducible => p.is_monic() && brute_irreducible(&c),
                    PolyFilter::PrimitiveIrreducible => {
                        c[d] > 0 && p.is_primitive() && brute_irreducible(&c)
                    }
                };
                if ok {
                    out.insert(p);
                }
            }
        }
        out
    }

    /// Degree <= 2 only: rational root search plus discriminant.
    fn brute_irreducible(c: &[i64]) -> bool {
        match c.len() - 1 {
            1 => true,
            2 => {
                let (a0, a1, a2) = (c[0], c[1], c[2]);
                let disc = a1 * a1 - 4 * a2 * a0;
                if disc < 0 {
                    return true;
                }
                let s = (disc as f64).sqrt().round() as i64;
                s * s != disc
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn degree_one_monic() {
        let got: Vec<String> = enumerate(1, 1, PolyFilter::MonicIrreducible)
            .map(|p| p.to_string())
            .collect();
        assert_eq!(got, vec!["x - 1", "x", "x + 1"]);
    }

    #[test]
    fn degree_two_monic_height_one() {
        let got: BTreeSet<String> = enumerate(2, 1, PolyFilter::MonicIrreducible)
            .filter(|p| p.degree() == 2)
            .map(|p| p.to_string())
            .collect();
        let want: BTreeSet<String> = ["x^2 + 1", "x^2 + x + 1", "x^2 - x + 1", "x^2 + x - 1", "x^2 - x - 1"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn count_linear_any() {
        assert_eq!(enumerate(1, 2, PolyFilter::Any).count(), 20);
    }

    #[test]
    fn matches_brute_force() {
        for filter in [PolyFilter::Any, PolyFilter::MonicIrreducible, PolyFilter::PrimitiveIrreducible] {
            let got: Vec<IntPoly> = enumerate(2, 2, filter).collect();
            let set: BTreeSet<IntPoly> = got.iter().cloned().collect();
            assert_eq!(set.len(), got.len(), "duplicates for {filter:?}");
            assert_eq!(set, brute(2, 2, filter), "{filter:?}");
        }
    }

    #[test]
    fn order_is_degree_height_lex() {
        let got: Vec<IntPoly> = enumerate(2, 3, PolyFilter::Any).collect();
        assert!(got.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn restartable() {
        let e = enumerate(2, 2, PolyFilter::MonicIrreducible);
        let a: Vec<_> = e.clone().take(7).collect();
        let b: Vec<_> = e.take(7).collect();
        assert_eq!(a, b);
    }
}

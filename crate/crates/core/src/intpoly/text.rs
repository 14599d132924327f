//! `"x^2 - x - 1"` text form.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::IntPoly;
use crate::error::{Error, Result};

pub(super) fn format(p: &IntPoly) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (k, c) in p.coeffs().iter().enumerate().rev() {
        if c.is_zero() {
            continue;
        }
        let neg = c.is_negative();
        let mag = c.abs();
        if out.is_empty() {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let show_coeff = k == 0 || !mag.is_one();
        if show_coeff {
            out.push_str(&mag.to_string());
            if k > 0 {
                out.push('*');
            }
        }
        match k {
            0 => {}
            1 => out.push('x'),
            _ => out.push_str(&format!("x^{k}")),
        }
    }
    out
}

pub(super) fn parse(s: &str) -> Result<IntPoly> {
    // whitespace may not split a number or juxtapose two factors
    let toks: Vec<char> = s.chars().collect();
    let glue = |c: char| c.is_ascii_digit() || c == 'x';
    for (i, c) in toks.iter().enumerate() {
        if c.is_whitespace() {
            let prev = toks[..i].iter().rev().find(|c| !c.is_whitespace());
            let next = toks[i + 1..].iter().find(|c| !c.is_whitespace());
            if let (Some(&a), Some(&b)) = (prev, next) {
                if glue(a) && glue(b) {
                    return Err(Error::Parse(format!("missing operator in `{s}`")));
                }
            }
        }
    }
    let src: String = toks.iter().filter(|c| !c.is_whitespace()).collect();
    if src.is_empty() {
        return Err(Error::Parse("empty polynomial".into()));
    }
    let bytes = src.as_bytes();
    let mut coeffs: Vec<BigInt> = Vec::new();
    let mut i = 0;
    let err = |msg: &str| Error::Parse(format!("{msg} in `{s}`"));
    while i < bytes.len() {
        let mut sign = BigInt::one();
        let mut saw_sign = false;
        while i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
            if bytes[i] == b'-' {
                sign = -sign;
            }
            saw_sign = true;
            i += 1;
        }
        if !saw_sign && !coeffs.is_empty() {
            return Err(err("missing operator"));
        }
        let start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        let coef: BigInt = if i > start {
            src[start..i].parse().map_err(|_| err("bad coefficient"))?
        } else {
            BigInt::one()
        };
        let had_digits = i > start;
        if i < bytes.len() && bytes[i] == b'*' {
            if !had_digits {
                return Err(err("dangling `*`"));
            }
            i += 1;
            if i >= bytes.len() || bytes[i] != b'x' {
                return Err(err("expected `x` after `*`"));
            }
        }
        let mut power = 0usize;
        if i < bytes.len() && bytes[i] == b'x' {
            i += 1;
            power = 1;
            if i < bytes.len() && bytes[i] == b'^' {
                i += 1;
                let ps = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if ps == i {
                    return Err(err("missing exponent"));
                }
                power = src[ps..i].parse().map_err(|_| err("bad exponent"))?;
            }
        } else if !had_digits {
            return Err(err("expected a term"));
        }
        if coeffs.len() <= power {
            coeffs.resize(power + 1, BigInt::zero());
        }
        coeffs[power] += sign * coef;
        if i < bytes.len() && bytes[i] != b'+' && bytes[i] != b'-' {
            return Err(err("unexpected character"));
        }
    }
    Ok(IntPoly::new(coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        let p = IntPoly::parse("x^2 - 2").unwrap();
        assert_eq!(p, IntPoly::from_i64(&[-2, 0, 1]));
        assert_eq!(p.to_string(), "x^2 - 2");
        let q = IntPoly::parse("x^2-x-1").unwrap();
        assert_eq!(q.to_string(), "x^2 - x - 1");
        assert_eq!(IntPoly::parse("2*x+1").unwrap(), IntPoly::from_i64(&[1, 2]));
        assert_eq!(IntPoly::parse("-3x^3 + x").unwrap(), IntPoly::from_i64(&[0, 1, 0, -3]));
        assert_eq!(IntPoly::parse("x + 1").unwrap().to_string(), "x + 1");
        assert_eq!(IntPoly::parse("-x").unwrap().to_string(), "-x");
        assert_eq!(IntPoly::parse("7").unwrap().to_string(), "7");
        assert_eq!(IntPoly::parse("x^2 + x^2").unwrap(), IntPoly::from_i64(&[0, 0, 2]));
    }

    #[test]
    fn parse_errors() {
        for bad in ["", "x^", "2*", "x y", "3 3", "*x"] {
            assert!(IntPoly::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn printer_round_trips() {
        for c in [&[1i64, -2, 0, 3][..], &[0, 0, -1], &[5], &[-7, 1], &[0, 12, 0, 0, -1]] {
            let p = IntPoly::from_i64(c);
            assert_eq!(IntPoly::parse(&p.to_string()).unwrap(), p);
        }
    }
}

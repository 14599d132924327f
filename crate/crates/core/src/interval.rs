//! Outward-rounded real intervals, axis-aligned complex rectangles, and
//! enclosures of `|P(z)|` and `log|P(z)|` over rectangles.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[inline]
fn down(x: f64) -> f64 {
    if x.is_finite() {
        x.next_down()
    } else {
        x
    }
}

/// Error-free transformation: `a + b = s + e` exactly.
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    if !s.is_finite() {
        return (s, 0.0);
    }
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

#[inline]
fn up(x: f64) -> f64 {
    if x.is_finite() {
        x.next_up()
    } else {
        x
    }
}

/// Closed interval `[lo, hi]`; endpoints may be infinite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(!(lo > hi), "inverted interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn add(self, o: Interval) -> Interval {
        let (lo, elo) = two_sum(self.lo, o.lo);
        let (hi, ehi) = two_sum(self.hi, o.hi);
        Interval::new(if elo < 0.0 { down(lo) } else { lo }, if ehi > 0.0 { up(hi) } else { hi })
    }

    pub fn sub(self, o: Interval) -> Interval {
        self.add(o.neg())
    }

    pub fn neg(self) -> Interval {
        Interval::new(-self.hi, -self.lo)
    }

    /// Multiplication by a nonzero finite scalar.
    pub fn scale(self, k: f64) -> Interval {
        if k == 0.0 {
            return Interval::point(0.0);
        }
        let (x, y) = if k > 0.0 { (self.lo, self.hi) } else { (self.hi, self.lo) };
        let (a, b) = (x * k, y * k);
        // the fma residual is the exact rounding error when finite
        let ea = x.mul_add(k, -a);
        let eb = y.mul_add(k, -b);
        Interval::new(
            if ea < 0.0 || ea.is_nan() { down(a) } else { a },
            if eb > 0.0 || eb.is_nan() { up(b) } else { b },
        )
    }

    pub fn max(self, o: Interval) -> Interval {
        Interval::new(self.lo.max(o.lo), self.hi.max(o.hi))
    }

    pub fn min(self, o: Interval) -> Interval {
        Interval::new(self.lo.min(o.lo), self.hi.min(o.hi))
    }

    /// `log` of a nonnegative interval, widened by two ulps on each side
    /// (`log 1 = 0` is exact).
    pub fn ln(self) -> Interval {
        let lo = if self.lo <= 0.0 {
            f64::NEG_INFINITY
        } else if self.lo == 1.0 {
            0.0
        } else {
            down(down(self.lo.ln()))
        };
        let hi = if self.hi <= 0.0 {
            f64::NEG_INFINITY
        } else if self.hi == 1.0 {
            0.0
        } else {
            up(up(self.hi.ln()))
        };
        Interval::new(lo, hi)
    }
}

/// Axis-aligned rectangle `[re_lo, re_hi] × [im_lo, im_hi]` in ℂ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re_lo: f64,
    pub re_hi: f64,
    pub im_lo: f64,
    pub im_hi: f64,
}

impl Rect {
    pub fn new(re_lo: f64, re_hi: f64, im_lo: f64, im_hi: f64) -> Self {
        assert!(re_lo <= re_hi && im_lo <= im_hi, "inverted rectangle");
        Rect {
            re_lo,
            re_hi,
            im_lo,
            im_hi,
        }
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re_lo + self.re_hi), 0.5 * (self.im_lo + self.im_hi))
    }

    /// Upper bound on the distance from the center to any point of the rectangle.
    pub fn radius(&self) -> f64 {
        let a = 0.5 * (self.re_hi - self.re_lo);
        let b = 0.5 * (self.im_hi - self.im_lo);
        up(up(a.hypot(b)) * (1.0 + 4.0 * f64::EPSILON))
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.radius()
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.re_lo <= z.re && z.re <= self.re_hi && self.im_lo <= z.im && z.im <= self.im_hi
    }

    /// Halves along the wider axis.
    pub fn split(&self) -> (Rect, Rect) {
        if self.re_hi - self.re_lo >= self.im_hi - self.im_lo {
            let m = 0.5 * (self.re_lo + self.re_hi);
            (
                Rect::new(self.re_lo, m, self.im_lo, self.im_hi),
                Rect::new(m, self.re_hi, self.im_lo, self.im_hi),
            )
        } else {
            let m = 0.5 * (self.im_lo + self.im_hi);
            (
                Rect::new(self.re_lo, self.re_hi, self.im_lo, m),
                Rect::new(self.re_lo, self.re_hi, m, self.im_hi),
            )
        }
    }

    /// Interval of `|z|` over the rectangle.
    pub fn modulus(&self) -> Interval {
        let nearest = |lo: f64, hi: f64| {
            if lo <= 0.0 && 0.0 <= hi {
                0.0
            } else {
                lo.abs().min(hi.abs())
            }
        };
        let far = |lo: f64, hi: f64| lo.abs().max(hi.abs());
        let mn = nearest(self.re_lo, self.re_hi).hypot(nearest(self.im_lo, self.im_hi));
        let mx = far(self.re_lo, self.re_hi).hypot(far(self.im_lo, self.im_hi));
        Interval::new(down(down(mn)), up(up(mx)))
    }

    /// Sample points: the center, the corners, and edge midpoints.
    pub fn sample_points(&self) -> [Complex64; 9] {
        let xs = [self.re_lo, 0.5 * (self.re_lo + self.re_hi), self.re_hi];
        let ys = [self.im_lo, 0.5 * (self.im_lo + self.im_hi), self.im_hi];
        let mut out = [Complex64::new(0.0, 0.0); 9];
        for (i, &x) in xs.iter().enumerate() {
            for (j, &y) in ys.iter().enumerate() {
                out[3 * i + j] = Complex64::new(x, y);
            }
        }
        out
    }
}

/// Enclosure of `|P(z)|` for `z` in the disc of radius `rho` about `c`, with
/// `P` given by real coefficients in ascending degree.
///
/// Uses the Taylor expansion at `c`; floating-point error of the shift is
/// bounded by the same recurrence run on absolute values.
pub fn poly_abs_disc(coeffs: &[f64], c: Complex64, rho: f64) -> Interval {
    let n = coeffs.len();
    if n == 0 {
        return Interval::point(0.0);
    }
    if n == 1 {
        let a = coeffs[0].abs();
        return Interval::new(a, a);
    }
    // synthetic division passes: b[k] = P^{(k)}(c)/k!
    let mut b: Vec<Complex64> = coeffs.iter().map(|&a| Complex64::new(a, 0.0)).collect();
    let mut babs: Vec<f64> = coeffs.iter().map(|a| a.abs()).collect();
    let cabs = c.norm();
    for k in 0..n - 1 {
        for j in (k..n - 1).rev() {
            let t = b[j + 1];
            b[j] += t * c;
            babs[j] += babs[j + 1] * cabs;
        }
    }
    let u = f64::EPSILON * 0.5;
    let m = (6 * n + 6) as f64;
    let gamma = m * u / (1.0 - m * u);
    let mut spread = 0.0;
    let mut err = gamma * babs[0];
    let mut rk = 1.0;
    for k in 1..n {
        rk *= rho;
        spread += b[k].norm() * rk;
        err += gamma * babs[k] * rk;
    }
    let slack = 1.0 + 8.0 * f64::EPSILON;
    let center = b[0].norm();
    let delta = (spread + err) * slack;
    let lo = ((center - delta) * (1.0 - 4.0 * f64::EPSILON)).max(0.0);
    let hi = (center + delta) * slack;
    Interval::new(down(lo), up(hi))
}

/// Enclosure of `|P(z)|` over a rectangle.
pub fn poly_abs_rect(coeffs: &[f64], r: &Rect) -> Interval {
    poly_abs_disc(coeffs, r.center(), r.radius())
}

/// Enclosure of `log|P(z)|` over a rectangle.
pub fn poly_log_abs_rect(coeffs: &[f64], r: &Rect) -> Interval {
    poly_abs_rect(coeffs, r).ln()
}

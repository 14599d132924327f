//! Green functions on ℂ: continuous, conjugation invariant, and
//! `g(z) = log|z| + o(log|z|)` at infinity.

mod composite;

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use num_rational::BigRational;

pub use composite::{CompositeSpec, Term, TermKind};

use crate::error::{Error, Result};
use crate::interval::{Interval, Rect};
use crate::intpoly::IntPoly;
use composite::Composite;

/// Cached tail radii cover `n ≤ TAIL_CACHE`.
pub const TAIL_CACHE: u32 = 32;
const TAIL_SAMPLES: usize = 1 << 12;

pub const BUILTINS: [&str; 4] = ["weil", "zhang_zagier", "hultberg", "faltings"];

#[derive(Debug)]
enum Kind {
    Composite { spec: CompositeSpec, c: Composite },
    Faltings,
}

#[derive(Debug)]
struct Inner {
    name: String,
    kind: Kind,
    tails: OnceLock<Vec<f64>>,
}

/// Immutable, cheaply clonable Green function handle.
#[derive(Clone, Debug)]
pub struct GreenFunction {
    inner: Arc<Inner>,
}

pub fn make_composite(spec: &CompositeSpec) -> Result<GreenFunction> {
    make_named(spec, "composite")
}

fn make_named(spec: &CompositeSpec, name: &str) -> Result<GreenFunction> {
    let c = Composite::build(spec)?;
    Ok(GreenFunction {
        inner: Arc::new(Inner {
            name: name.to_string(),
            kind: Kind::Composite {
                spec: spec.clone(),
                c,
            },
            tails: OnceLock::new(),
        }),
    })
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// Spec of a named composite built-in; `None` for `faltings` and unknown names.
pub fn builtin_spec(name: &str) -> Option<CompositeSpec> {
    let term = |w, kind, num: &[i64], den: &[i64]| {
        Term::new(w, kind, IntPoly::from_i64(num), IntPoly::from_i64(den))
    };
    let terms = match name {
        "weil" => vec![term(rat(1, 1), TermKind::LogPlus, &[0, 1], &[1])],
        "zhang_zagier" => vec![
            term(rat(1, 2), TermKind::LogPlus, &[0, 1], &[1]),
            term(rat(1, 2), TermKind::LogPlus, &[1, -1], &[1]),
        ],
        "hultberg" => vec![
            term(rat(1, 1), TermKind::LogPlus, &[1, 2], &[0, 1]),
            term(rat(1, 1), TermKind::LogAbs, &[0, 1], &[1]),
        ],
        _ => return None,
    };
    Some(CompositeSpec { terms, offset: 0.0 })
}

pub fn builtin(name: &str) -> Result<GreenFunction> {
    if name == "faltings" {
        return Ok(GreenFunction {
            inner: Arc::new(Inner {
                name: name.to_string(),
                kind: Kind::Faltings,
                tails: OnceLock::new(),
            }),
        });
    }
    match builtin_spec(name) {
        Some(spec) => make_named(&spec, name),
        None => Err(Error::UnknownName(name.to_string())),
    }
}

impl GreenFunction {
    pub fn name(&self) -> &str {
        &self.inner.name
    }

    /// All Green functions built here have real coefficients.
    pub fn conjugation_invariant(&self) -> bool {
        true
    }

    pub fn spec(&self) -> Option<&CompositeSpec> {
        match &self.inner.kind {
            Kind::Composite { spec, .. } => Some(spec),
            Kind::Faltings => None,
        }
    }

    /// Stable identifier used for hashing: the name plus, for composites, the spec JSON.
    pub fn canonical_id(&self) -> String {
        match &self.inner.kind {
            Kind::Composite { spec, .. } => format!("{}:{}", self.name(), spec.to_json()),
            Kind::Faltings => self.name().to_string(),
        }
    }

    pub fn eval(&self, z: Complex64) -> f64 {
        match &self.inner.kind {
            Kind::Composite { c, .. } => c.eval(z),
            Kind::Faltings => crate::modular::g_hyp_eval(z),
        }
    }

    /// `g = offset + Σ w·log max(|A|,|B|)` as `(offset, [(w, A, B)])` for
    /// composites.
    pub(crate) fn max_form(&self) -> Option<(f64, Vec<(f64, Vec<f64>, Vec<f64>)>)> {
        match &self.inner.kind {
            Kind::Composite { c, .. } => Some((
                c.offset,
                c.terms.iter().map(|t| (t.w, t.a.clone(), t.b.clone())).collect(),
            )),
            Kind::Faltings => None,
        }
    }

    /// Whether [`GreenFunction::enclosure`] is a rigorous interval bound.
    pub fn enclosure_is_rigorous(&self) -> bool {
        matches!(self.inner.kind, Kind::Composite { .. })
    }

    /// Interval containing `g(E)`. For `faltings` this is a sampled estimate
    /// widened by a local Lipschitz bound, not a rigorous enclosure.
    pub fn enclosure(&self, r: &Rect) -> Result<Interval> {
        match &self.inner.kind {
            Kind::Composite { c, .. } => Ok(c.enclosure(r)),
            Kind::Faltings => Ok(sampled_enclosure(|z| self.eval(z), r)),
        }
    }

    /// Lower bound on `inf_{|z| ≥ r} (g(z) − (1 − s) log|z|)` for `s > 0`,
    /// or `-∞` when no bound is available at that radius.
    pub fn tail_excess_floor(&self, r: f64, s: f64) -> f64 {
        match &self.inner.kind {
            Kind::Composite { c, .. } => {
                let (lo, _) = c.tail_band(r);
                c.c0 + lo + s * r.ln().max(0.0)
            }
            Kind::Faltings => {
                let l0 = r.ln();
                if !(l0 >= crate::modular::TAIL_VALID_LOG) {
                    return f64::NEG_INFINITY;
                }
                // s·L − bound(L) is minimized at L = 6/s
                let l = l0.max(6.0 / s);
                s * l - crate::modular::tail_bound(l)
            }
        }
    }

    /// Radius `R` with `|g(z) − log|z|| ≤ log|z| / n` for all `|z| > R`.
    /// Nondecreasing in `n`; `+∞` when no such radius is representable.
    pub fn tail_radius(&self, n: u32) -> f64 {
        assert!(n >= 1, "tail_radius needs n >= 1");
        let cache = self.inner.tails.get_or_init(|| {
            let mut out = Vec::with_capacity(TAIL_CACHE as usize);
            let mut prev = 1.0f64;
            for k in 1..=TAIL_CACHE {
                let r = self.compute_tail_radius(k).max(prev);
                out.push(r);
                prev = r;
            }
            out
        });
        if n <= TAIL_CACHE {
            cache[n as usize - 1]
        } else {
            self.compute_tail_radius(n).max(cache[TAIL_CACHE as usize - 1])
        }
    }

    /// Bound on `|g(z) − log|z||` valid for every `|z| ≥ r`.
    fn tail_abs_bound(&self, r: f64) -> f64 {
        match &self.inner.kind {
            Kind::Composite { c, .. } => {
                let (lo, hi) = c.tail_band(r);
                (c.c0 + lo).abs().max((c.c0 + hi).abs())
            }
            Kind::Faltings => {
                let l = r.ln();
                if !(l >= crate::modular::TAIL_VALID_LOG) {
                    return f64::INFINITY;
                }
                crate::modular::tail_bound(l)
            }
        }
    }

    fn compute_tail_radius(&self, n: u32) -> f64 {
        let nf = n as f64;
        // once this holds at r it holds for every larger radius
        let ok = |r: f64| self.tail_abs_bound(r) <= r.ln() / nf;
        if self.tail_abs_bound(1.0) == 0.0 {
            return 1.0;
        }
        // doubling in log r
        let mut hi_l = 1.0f64;
        while !ok(hi_l.exp()) {
            hi_l *= 2.0;
            if hi_l > 700.0 {
                return f64::INFINITY;
            }
        }
        let mut lo_l = if hi_l <= 1.0 { 0.0 } else { hi_l / 2.0 };
        for _ in 0..60 {
            let mid = 0.5 * (lo_l + hi_l);
            if ok(mid.exp()) {
                hi_l = mid;
            } else {
                lo_l = mid;
            }
        }
        let mut r = hi_l.exp();
        // boundary validation
        for _ in 0..8 {
            if self.tail_validates(r, nf) {
                return r;
            }
            r *= 2.0;
        }
        f64::INFINITY
    }

    fn tail_validates(&self, r: f64, n: f64) -> bool {
        let rr = r * (1.0 + 1e-9);
        let lim = rr.ln() / n;
        (0..TAIL_SAMPLES).all(|k| {
            let z = Complex64::from_polar(rr, std::f64::consts::TAU * k as f64 / TAIL_SAMPLES as f64);
            (self.eval(z) - rr.ln()).abs() <= lim * (1.0 + 1e-12) + 1e-12
        })
    }
}

/// Estimate of the range over a rectangle from its 9 sample points, widened
/// by a finite-difference Lipschitz estimate times the sample spacing.
fn sampled_enclosure(f: impl Fn(Complex64) -> f64, r: &Rect) -> Interval {
    let pts = r.sample_points();
    let vals: Vec<f64> = pts.iter().map(|&z| f(z)).collect();
    let mut lip: f64 = 0.0;
    for i in 0..9 {
        for j in i + 1..9 {
            let d = (pts[i] - pts[j]).norm();
            if d > 0.0 {
                lip = lip.max((vals[i] - vals[j]).abs() / d);
            }
        }
    }
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pad = 2.0 * lip * 0.5 * r.radius();
    Interval::new(lo - pad, hi + pad)
}

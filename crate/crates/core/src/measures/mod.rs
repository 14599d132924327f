//! Probability measures on ℂ and their logarithmic potentials.
//!
//! The workhorse is [`RationalPullbackMeasure`]: the pullback of Haar
//! measure on the unit circle under `φ = A/B`, normalized by `deg A`. Its
//! potential has the closed form `−(log max(|A|,|B|) − log c) / deg A`,
//! where `c` is the leading behaviour of `max(|A|,|B|)` at infinity.

mod quadrature;
mod sweeten;

use num_complex::Complex64;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::intpoly::{horner, IntPoly};
use crate::roots::PowerFiber;

pub use quadrature::{integrate_circle, integrate_pullback, trapezoid_sum, Quadrature, MAX_NODES, MIN_NODES};
pub use sweeten::{log_plus_moment, sweeten, Sweetened};

/// Finitely many weighted points.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct DiscreteMeasure {
    pub atoms: Vec<(Complex64, f64)>,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<(Complex64, f64)>) -> Result<Self> {
        if atoms.iter().any(|&(p, w)| !(w >= 0.0) || !p.is_finite() || !w.is_finite()) {
            return Err(Error::InadmissibleMeasure("atom weights must be finite and nonnegative".into()));
        }
        Ok(DiscreteMeasure { atoms })
    }

    /// Uniform probability measure on the given points.
    pub fn uniform(points: &[Complex64]) -> Self {
        let w = 1.0 / points.len() as f64;
        DiscreteMeasure {
            atoms: points.iter().map(|&p| (p, w)).collect(),
        }
    }

    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    pub fn is_probability(&self) -> bool {
        (self.mass() - 1.0).abs() <= 1e-12
    }

    pub fn integrate(&self, f: impl Fn(Complex64) -> f64) -> f64 {
        self.atoms.iter().map(|&(p, w)| if w == 0.0 { 0.0 } else { w * f(p) }).sum()
    }
}

/// `U^μ(z) = −Σ wᵢ log|z − pᵢ| / mass`; `+∞` at atoms.
pub fn potential_discrete(m: &DiscreteMeasure, z: Complex64) -> f64 {
    let mass = m.mass();
    let mut s = 0.0;
    for &(p, w) in &m.atoms {
        if w == 0.0 {
            continue;
        }
        let d = (z - p).norm();
        if d == 0.0 {
            return f64::INFINITY;
        }
        s -= w * d.ln();
    }
    s / mass
}

/// Equilibrium measure of the circle `|z| = R`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircleMeasure {
    pub r: f64,
}

impl CircleMeasure {
    pub fn new(r: f64) -> Result<Self> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InadmissibleMeasure(format!("circle radius {r} must be positive")));
        }
        Ok(CircleMeasure { r })
    }

    pub fn potential(&self, z: Complex64) -> f64 {
        -circle_log_kernel(self.r, z)
    }
}

/// `∫ log|z − w| dλ_{S_R}(w) = log max(|z|, R)`.
pub fn circle_log_kernel(r: f64, z: Complex64) -> f64 {
    z.norm().max(r).ln()
}

/// Pullback of unit-circle Haar measure under `A/B`, with `deg A ≥ deg B`
/// (and `|lc A| ≠ |lc B|` when the degrees agree) so the support is compact.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalPullbackMeasure {
    a: IntPoly,
    b: IntPoly,
    af: Vec<f64>,
    bf: Vec<f64>,
    log_c: f64,
    fiber: PowerFiber,
}

impl RationalPullbackMeasure {
    pub fn new(a: IntPoly, b: IntPoly) -> Result<Self> {
        let fiber = PowerFiber::new(&a, 1, &b, 1);
        Self::with_fiber(a, b, fiber)
    }

    /// Pullback under `P^k / Q^l`, solving fibers in factored form.
    pub(crate) fn powers(p: &IntPoly, k: u32, q: &IntPoly, l: u32) -> Result<Self> {
        Self::with_fiber(p.pow(k), q.pow(l), PowerFiber::new(p, k, q, l))
    }

    fn with_fiber(a: IntPoly, b: IntPoly, fiber: PowerFiber) -> Result<Self> {
        crate::roots::check_family(&a, &b)?;
        let lc = |p: &IntPoly| p.leading().abs().to_f64().unwrap_or(f64::INFINITY);
        let c = if a.degree() > b.degree() {
            lc(&a)
        } else {
            lc(&a).max(lc(&b))
        };
        Ok(RationalPullbackMeasure {
            af: a.to_f64_coeffs(),
            bf: b.to_f64_coeffs(),
            log_c: c.ln(),
            fiber,
            a,
            b,
        })
    }

    /// Equilibrium measure of the lemniscate `{|P| ≤ 1}`.
    pub fn lemniscate(p: IntPoly) -> Result<Self> {
        if p.degree() < 1 {
            return Err(Error::InadmissibleMeasure("lemniscate needs deg P >= 1".into()));
        }
        Self::new(p, IntPoly::constant(1))
    }

    pub fn a(&self) -> &IntPoly {
        &self.a
    }

    pub fn b(&self) -> &IntPoly {
        &self.b
    }

    pub(crate) fn fiber(&self) -> &PowerFiber {
        &self.fiber
    }

    /// Number of preimages of each point of the circle.
    pub fn degree(&self) -> usize {
        self.a.degree()
    }

    /// Closed-form potential `−(log max(|A|,|B|) − log c) / deg A`.
    pub fn potential(&self, z: Complex64) -> f64 {
        let la = horner(&self.af, z).norm();
        let lb = horner(&self.bf, z).norm();
        -(la.max(lb).ln() - self.log_c) / self.degree() as f64
    }

    /// `log|φ(z)|`: zero exactly on the support.
    pub fn log_abs_map(&self, z: Complex64) -> f64 {
        horner(&self.af, z).norm().ln() - horner(&self.bf, z).norm().ln()
    }
}

/// `μ_{P,Q}`: pullback under `P^{deg Q + 1} / Q^{deg P}` for distinct monic
/// irreducible `P`, `Q`.
#[derive(Clone, Debug, PartialEq)]
pub struct MuPQ {
    p: IntPoly,
    q: IntPoly,
    pf: Vec<f64>,
    qf: Vec<f64>,
    pullback: RationalPullbackMeasure,
}

/// Largest degree for which `MuPQ` decides irreducibility.
pub const MAX_IRREDUCIBILITY_DEGREE: usize = 16;

fn require_monic_irreducible(p: &IntPoly, which: &str) -> Result<()> {
    if p.degree() < 1 || !p.is_monic() {
        return Err(Error::InadmissibleMeasure(format!("{which} = {p} is not monic of degree >= 1")));
    }
    match p.is_irreducible_q_upto(MAX_IRREDUCIBILITY_DEGREE) {
        Ok(true) => Ok(()),
        Ok(false) => Err(Error::InadmissibleMeasure(format!("{which} = {p} is reducible"))),
        Err(e) => Err(Error::InadmissibleMeasure(format!("{which} = {p}: {e}"))),
    }
}

impl MuPQ {
    pub fn new(p: IntPoly, q: IntPoly) -> Result<Self> {
        require_monic_irreducible(&p, "P")?;
        require_monic_irreducible(&q, "Q")?;
        if p == q {
            return Err(Error::InadmissibleMeasure("P and Q must differ".into()));
        }
        let (d, e) = (p.degree() as u32, q.degree() as u32);
        let pullback = RationalPullbackMeasure::powers(&p, e + 1, &q, d)?;
        Ok(MuPQ {
            pf: p.to_f64_coeffs(),
            qf: q.to_f64_coeffs(),
            p,
            q,
            pullback,
        })
    }

    pub fn p(&self) -> &IntPoly {
        &self.p
    }

    pub fn q(&self) -> &IntPoly {
        &self.q
    }

    pub fn pullback(&self) -> &RationalPullbackMeasure {
        &self.pullback
    }

    /// `min{−log|P(z)|/d, −log|Q(z)|/(e+1)}`.
    pub fn potential(&self, z: Complex64) -> f64 {
        let d = self.p.degree() as f64;
        let e = self.q.degree() as f64;
        let up = -horner(&self.pf, z).norm().ln() / d;
        let uq = -horner(&self.qf, z).norm().ln() / (e + 1.0);
        up.min(uq)
    }
}

pub fn potential_mu_pq(m: &MuPQ, z: Complex64) -> f64 {
    m.potential(z)
}

/// `∫ log|F| dμ_{P,Q} = log|lc F| − Σ_{F(α)=0} U(α)`.
pub fn log_integral_exact(m: &MuPQ, f: &IntPoly) -> Result<f64> {
    if f.is_zero() {
        return Err(Error::InvalidPolynomial("F must be nonzero".into()));
    }
    let lc = crate::measures::big_abs_ln(&f.leading());
    if f.degree() == 0 {
        return Ok(lc);
    }
    // repeated roots come back from the root finder as perturbed clusters,
    // so the roots are taken from the squarefree factors
    let mut s = lc;
    for (b, k) in f.squarefree_decomposition() {
        for r in &b.complex_roots()?.roots {
            s -= (k as usize * r.multiplicity) as f64 * m.potential(r.value);
        }
    }
    Ok(s)
}

pub(crate) fn big_abs_ln(c: &num_bigint::BigInt) -> f64 {
    let a = c.abs();
    match a.to_f64() {
        Some(v) if v.is_finite() && v > 0.0 => v.ln(),
        _ => {
            let shift = a.bits().saturating_sub(60);
            let top: num_bigint::BigInt = &a >> shift;
            top.to_f64().unwrap_or(0.0).ln() + shift as f64 * std::f64::consts::LN_2
        }
    }
}

/// Outcome of [`smith_check`]: the integral `∫ log|F| dμ` and the lower
/// bound on it read off the exact resultants.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmithReport {
    pub margin: f64,
    pub resultant_floor: f64,
}

/// `margin = ∫ log|F| dμ_{P,Q}`, and
/// `floor = max{log|Res(P,F)|/d, log|Res(Q,F)|/(e+1)}` over nonzero resultants.
pub fn smith_check(m: &MuPQ, f: &IntPoly) -> Result<SmithReport> {
    let margin = log_integral_exact(m, f)?;
    if f.degree() == 0 {
        return Ok(SmithReport {
            margin,
            resultant_floor: margin,
        });
    }
    let d = m.p.degree() as f64;
    let e = m.q.degree() as f64;
    let mut floor = f64::NEG_INFINITY;
    let rp = m.p.resultant(f);
    if !num_traits::Zero::is_zero(&rp) {
        floor = floor.max(big_abs_ln(&rp) / d);
    }
    let rq = m.q.resultant(f);
    if !num_traits::Zero::is_zero(&rq) {
        floor = floor.max(big_abs_ln(&rq) / (e + 1.0));
    }
    Ok(SmithReport {
        margin,
        resultant_floor: floor,
    })
}

/// Any measure this crate can integrate against.
#[derive(Clone, Debug, PartialEq)]
pub enum Measure {
    MuPq(MuPQ),
    /// Equilibrium measure of `{|P| ≤ 1}`.
    Lemniscate(RationalPullbackMeasure),
    /// General pullback under `A/B`.
    Pullback(RationalPullbackMeasure),
    Circle(CircleMeasure),
    Discrete(DiscreteMeasure),
}

impl Measure {
    pub fn mu_pq(p: IntPoly, q: IntPoly) -> Result<Self> {
        MuPQ::new(p, q).map(Measure::MuPq)
    }

    pub fn lemniscate(p: IntPoly) -> Result<Self> {
        RationalPullbackMeasure::lemniscate(p).map(Measure::Lemniscate)
    }

    pub fn pullback(a: IntPoly, b: IntPoly) -> Result<Self> {
        RationalPullbackMeasure::new(a, b).map(Measure::Pullback)
    }

    pub fn as_pullback(&self) -> Option<&RationalPullbackMeasure> {
        match self {
            Measure::MuPq(m) => Some(m.pullback()),
            Measure::Lemniscate(m) | Measure::Pullback(m) => Some(m),
            _ => None,
        }
    }

    pub fn potential(&self, z: Complex64) -> f64 {
        match self {
            Measure::MuPq(m) => m.potential(z),
            Measure::Lemniscate(m) | Measure::Pullback(m) => m.potential(z),
            Measure::Circle(c) => c.potential(z),
            Measure::Discrete(d) => potential_discrete(d, z),
        }
    }

    /// `∫ f dμ` with an error estimate; exact sums for discrete measures.
    pub fn integrate(&self, f: &(dyn Fn(Complex64) -> f64 + Sync), tol: f64) -> Result<Quadrature> {
        match self {
            Measure::Discrete(d) => Ok(Quadrature {
                value: d.integrate(f),
                error: 0.0,
                nodes: d.atoms.len(),
            }),
            Measure::Circle(c) => integrate_circle(c.r, f, tol),
            _ => integrate_pullback(self.as_pullback().unwrap(), f, tol),
        }
    }

    /// Short human-readable label.
    pub fn label(&self) -> String {
        match self {
            Measure::MuPq(m) => format!("mu[{}, {}]", m.p(), m.q()),
            Measure::Lemniscate(m) => format!("lemniscate[{}]", m.a()),
            Measure::Pullback(m) => format!("pullback[{} / {}]", m.a(), m.b()),
            Measure::Circle(c) => format!("circle[{}]", c.r),
            Measure::Discrete(d) => format!("discrete[{} atoms]", d.atoms.len()),
        }
    }

    /// Total degree used for tie-breaking: `deg P + deg Q`, `deg P`, or 0.
    pub fn total_degree(&self) -> usize {
        match self {
            Measure::MuPq(m) => m.p().degree() + m.q().degree(),
            Measure::Lemniscate(m) => m.a().degree(),
            Measure::Pullback(m) => m.a().degree() + m.b().degree(),
            _ => 0,
        }
    }
}

/// `I(μ) = ∫ U^μ dμ` by quadrature of the closed-form potential.
pub fn energy(m: &Measure, tol: f64) -> Result<f64> {
    let pb = m
        .as_pullback()
        .ok_or_else(|| Error::InadmissibleMeasure("energy needs a pullback measure".into()))?;
    let q = match m {
        Measure::MuPq(mu) => integrate_pullback(pb, &|z| mu.potential(z), tol)?,
        _ => integrate_pullback(pb, &|z| pb.potential(z), tol)?,
    };
    Ok(q.value)
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum MeasureJson {
    MuPq {
        #[serde(rename = "P")]
        p: IntPoly,
        #[serde(rename = "Q")]
        q: IntPoly,
    },
    Lemniscate {
        #[serde(rename = "P")]
        p: IntPoly,
    },
    Pullback {
        #[serde(rename = "A")]
        a: IntPoly,
        #[serde(rename = "B")]
        b: IntPoly,
    },
    Circle {
        #[serde(rename = "R")]
        r: f64,
    },
    Discrete {
        atoms: Vec<[f64; 3]>,
    },
}

impl Serialize for Measure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let j = match self {
            Measure::MuPq(m) => MeasureJson::MuPq {
                p: m.p().clone(),
                q: m.q().clone(),
            },
            Measure::Lemniscate(m) => MeasureJson::Lemniscate { p: m.a().clone() },
            Measure::Pullback(m) => MeasureJson::Pullback {
                a: m.a().clone(),
                b: m.b().clone(),
            },
            Measure::Circle(c) => MeasureJson::Circle { r: c.r },
            Measure::Discrete(d) => MeasureJson::Discrete {
                atoms: d.atoms.iter().map(|&(p, w)| [p.re, p.im, w]).collect(),
            },
        };
        j.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Measure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = MeasureJson::deserialize(d)?;
        let m = match j {
            MeasureJson::MuPq { p, q } => Measure::mu_pq(p, q),
            MeasureJson::Lemniscate { p } => Measure::lemniscate(p),
            MeasureJson::Pullback { a, b } => Measure::pullback(a, b),
            MeasureJson::Circle { r } => CircleMeasure::new(r).map(Measure::Circle),
            MeasureJson::Discrete { atoms } => {
                DiscreteMeasure::new(atoms.iter().map(|a| (Complex64::new(a[0], a[1]), a[2])).collect())
                    .map(Measure::Discrete)
            }
        };
        m.map_err(D::Error::custom)
    }
}

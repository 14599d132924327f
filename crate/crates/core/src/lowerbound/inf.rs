//! Global infimum of `φ_a = g − Σ aᵢ log|Qᵢ|` over ℂ.
//!
//! The certified path splits ℂ into an exterior `|z| ≥ R`, handled by the
//! tail floor of `g` and a bound on `log|Qᵢ|`, and the square `[−R, R]²`,
//! handled by best-first branch and bound on interval enclosures. The
//! heuristic path is a multistart compass search.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;

use super::{DualCertificate, Phi};
use crate::error::Result;
use crate::greens::GreenFunction;
use crate::interval::{poly_log_abs_rect, Interval, Rect};

/// Knobs for [`certified_inf`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InfConfig {
    /// Target for `high − low`.
    pub tol: f64,
    /// Box evaluations before giving up with `exhausted = true`.
    pub max_boxes: usize,
    /// Boxes split per parallel step.
    pub batch: usize,
}

impl Default for InfConfig {
    fn default() -> Self {
        InfConfig {
            tol: 1e-4,
            max_boxes: 4_000_000,
            batch: 256,
        }
    }
}

/// `low ≤ inf φ ≤ high`; `low` is rigorous when `rigorous` is set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InfBound {
    pub low: f64,
    pub high: f64,
    pub argmin: Complex64,
    /// Radius of the square searched by branch and bound.
    pub radius: f64,
    pub boxes: usize,
    /// The box budget ran out before `high − low ≤ tol`.
    pub exhausted: bool,
    pub rigorous: bool,
}

/// Result of [`heuristic_inf`]: the best value and a list of distinct local
/// minima sorted by value.
#[derive(Clone, Debug, PartialEq)]
pub struct HeuristicInf {
    pub value: f64,
    pub argmin: Complex64,
    pub minima: Vec<(Complex64, f64)>,
}

const DIRS: [(f64, f64); 8] = [
    (1.0, 0.0),
    (-1.0, 0.0),
    (0.0, 1.0),
    (0.0, -1.0),
    (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
    (-std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
    (std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2),
    (-std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2),
];

fn compass(f: &(impl Fn(Complex64) -> f64 + ?Sized), z0: Complex64, h0: f64) -> (Complex64, f64) {
    let mut z = z0;
    let mut v = f(z);
    let mut h = h0;
    for _ in 0..4000 {
        if h < 1e-13 * (1.0 + z.norm()) {
            break;
        }
        let mut moved = false;
        for (dx, dy) in DIRS {
            let w = z + Complex64::new(dx * h, dy * h);
            let fw = f(w);
            if fw < v {
                z = w;
                v = fw;
                moved = true;
                break;
            }
        }
        if moved {
            h *= 1.5;
        } else {
            h *= 0.5;
        }
    }
    (z, v)
}

/// Starting points: a fine square grid near the origin and a log-polar grid
/// out to `10⁶`.
fn start_grid() -> Vec<(Complex64, f64)> {
    let mut pts = Vec::new();
    let n = 60;
    let step = 3.0 / n as f64;
    for i in -n..=n {
        for j in -n..=n {
            pts.push((Complex64::new(i as f64 * step, j as f64 * step), step));
        }
    }
    let rings = 90;
    let spokes = 64;
    for k in 0..=rings {
        let r = 10f64.powf(-3.0 + 9.0 * k as f64 / rings as f64);
        for s in 0..spokes {
            let th = std::f64::consts::TAU * (s as f64 + 0.5) / spokes as f64;
            pts.push((Complex64::from_polar(r, th), r * 0.1));
        }
    }
    pts
}

/// Multistart compass search for `inf φ`. Not a bound: the true infimum
/// may be lower.
pub fn heuristic_inf(g: &GreenFunction, cert: &DualCertificate, extra_starts: &[Complex64]) -> HeuristicInf {
    let phi = Phi::new(g, cert);
    heuristic_phi(&phi, extra_starts)
}

pub(crate) fn heuristic_phi(phi: &Phi, extra_starts: &[Complex64]) -> HeuristicInf {
    let f = |z: Complex64| {
        let v = phi.eval(z);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let grid = start_grid();
    let vals: Vec<f64> = grid.par_iter().map(|&(z, _)| f(z)).collect();
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then(a.cmp(&b)));
    let mut starts: Vec<(Complex64, f64)> = Vec::new();
    for i in order {
        if starts.len() >= 48 || !vals[i].is_finite() {
            break;
        }
        let (z, h) = grid[i];
        if starts.iter().all(|&(w, hw)| (w - z).norm() > 3.0 * h.max(hw)) {
            starts.push((z, h));
        }
    }
    for &z in extra_starts {
        starts.push((z, 1e-3 * (1.0 + z.norm())));
    }
    let found: Vec<(Complex64, f64)> = starts.par_iter().map(|&(z, h)| compass(&f, z, h)).collect();
    let mut minima: Vec<(Complex64, f64)> = Vec::new();
    let mut sorted = found;
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.re.total_cmp(&b.0.re)).then(a.0.im.total_cmp(&b.0.im)));
    for (z, v) in sorted {
        if v.is_finite() && minima.iter().all(|&(w, _)| (w - z).norm() > 1e-6 * (1.0 + z.norm())) {
            minima.push((z, v));
        }
    }
    let (argmin, value) = minima.first().copied().unwrap_or((Complex64::new(0.0, 0.0), f(Complex64::new(0.0, 0.0))));
    HeuristicInf { value, argmin, minima }
}

#[derive(Clone, Copy, Debug)]
struct Node {
    lower: f64,
    id: u64,
    rect: Rect,
}

impl PartialEq for Node {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}

impl Eq for Node {}

impl Ord for Node {
    // max-heap on the reversed key: smallest lower bound first, then oldest
    fn cmp(&self, o: &Self) -> Ordering {
        o.lower.total_cmp(&self.lower).then(o.id.cmp(&self.id))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// `φ` regrouped for box bounds: a certificate term `p·log|M|` whose `M`
/// also appears in a max term `w·log max(|M|,|O|)` of `g` is merged into
/// `p·log⁺|O/M|`, which is bounded below without cancellation between the
/// two logarithms.
struct Lowering<'a> {
    phi: &'a Phi,
    offset: Option<f64>,
    maxes: Vec<(f64, Vec<f64>, Vec<f64>)>,
    paired: Vec<(f64, Vec<f64>, Vec<f64>)>,
    logs: Vec<(Vec<f64>, f64)>,
}

fn same_up_to_sign(p: &[f64], q: &[f64]) -> bool {
    p.len() == q.len() && (p.iter().zip(q).all(|(a, b)| a == b) || p.iter().zip(q).all(|(a, b)| *a == -*b))
}

// exact when w − p has no rounding error
fn exact_sub(w: f64, p: f64) -> Option<f64> {
    let r = w - p;
    (r + p == w && w - r == p).then_some(r)
}

impl<'a> Lowering<'a> {
    fn new(phi: &'a Phi) -> Self {
        let mut logs: Vec<(Vec<f64>, f64)> = phi.terms.iter().map(|(c, a, _)| (c.clone(), *a)).collect();
        let Some((offset, mut maxes)) = phi.g.max_form() else {
            return Lowering {
                phi,
                offset: None,
                maxes: Vec::new(),
                paired: Vec::new(),
                logs,
            };
        };
        let mut paired = Vec::new();
        for (q, a) in logs.iter_mut() {
            for (w, ma, mb) in maxes.iter_mut() {
                if *a <= 0.0 || *w <= 0.0 {
                    continue;
                }
                let (m, o) = if same_up_to_sign(q, ma) {
                    (ma.clone(), mb.clone())
                } else if same_up_to_sign(q, mb) {
                    (mb.clone(), ma.clone())
                } else {
                    continue;
                };
                let p = a.min(*w);
                if let (Some(ra), Some(rw)) = (exact_sub(*a, p), exact_sub(*w, p)) {
                    *a = ra;
                    *w = rw;
                    paired.push((p, m, o));
                }
            }
        }
        logs.retain(|l| l.1 > 0.0);
        maxes.retain(|m| m.0 != 0.0);
        Lowering {
            phi,
            offset: Some(offset),
            maxes,
            paired,
            logs,
        }
    }

    fn lower(&self, r: &Rect) -> Result<f64> {
        let mut acc = match self.offset {
            Some(off) => {
                let mut acc = Interval::point(off);
                for (w, a, b) in &self.maxes {
                    let la = poly_log_abs_rect(a, r);
                    let lb = poly_log_abs_rect(b, r);
                    acc = acc.add(la.max(lb).scale(*w));
                }
                acc
            }
            None => Interval::point(self.phi.g.enclosure(r)?.lo),
        };
        for (p, m, o) in &self.paired {
            let lm = poly_log_abs_rect(m, r);
            let lo = poly_log_abs_rect(o, r);
            let d = Interval::point(lo.lo).sub(Interval::point(lm.hi)).lo.max(0.0);
            acc = acc.add(Interval::point(d).scale(*p));
        }
        for (c, a) in &self.logs {
            let l = poly_log_abs_rect(c, r);
            acc = acc.sub(Interval::point(l.hi).scale(*a));
        }
        Ok(if acc.lo.is_nan() { f64::NEG_INFINITY } else { acc.lo })
    }
}

/// `inf_{|z| ≥ r} φ` from below: the tail floor of `g` with slack
/// `1 − Σ a deg Q`, minus `aᵢ log(|lc Qᵢ| + Σ_{k<d} |c_k| r^{k−d})`.
fn exterior_floor(phi: &Phi, slack: f64, r: f64) -> f64 {
    let mut v = phi.g.tail_excess_floor(r, slack);
    for (c, a, d) in &phi.terms {
        let d = *d;
        let mut m = c[d].abs();
        let mut rk = 1.0;
        for k in (0..d).rev() {
            rk /= r;
            m += c[k].abs() * rk;
        }
        v -= a * m.ln() * (1.0 + 1e-12) + 1e-15;
    }
    v
}

/// Rigorous lower bound on `inf_ℂ φ_a` when `g` has rigorous enclosures.
pub fn certified_inf(g: &GreenFunction, cert: &DualCertificate, cfg: &InfConfig) -> Result<InfBound> {
    let phi = Phi::new(g, cert);
    let heur = heuristic_phi(&phi, &[]);
    certified_phi(&phi, cert, cfg, heur.value, heur.argmin)
}

pub(crate) fn certified_phi(
    phi: &Phi,
    cert: &DualCertificate,
    cfg: &InfConfig,
    incumbent: f64,
    at: Complex64,
) -> Result<InfBound> {
    let tol = cfg.tol;
    let mut u = incumbent;
    let mut argmin = at;
    let s = cert.weight_degree_sum();
    let slack = (BigRational::one() - s).to_f64().unwrap_or(0.0) * (1.0 - 1e-12);

    let mut radius = 2.0f64;
    let mut ext = exterior_floor(phi, slack, radius);
    while ext < u && radius < 1e18 {
        radius *= 2.0;
        ext = exterior_floor(phi, slack, radius);
    }

    let lowering = Lowering::new(phi);
    let root = Rect::new(-radius, radius, -radius, radius);
    let mut heap = BinaryHeap::new();
    let mut next_id = 0u64;
    heap.push(Node {
        lower: lowering.lower(&root)?,
        id: next_id,
        rect: root,
    });
    next_id += 1;
    let mut boxes = 1usize;
    let mut settled = f64::INFINITY;
    let mut exhausted = false;
    loop {
        let mut batch = Vec::with_capacity(cfg.batch);
        while batch.len() < cfg.batch {
            match heap.peek() {
                Some(n) if n.lower < u - tol => batch.push(heap.pop().unwrap()),
                _ => break,
            }
        }
        if batch.is_empty() {
            break;
        }
        if boxes >= cfg.max_boxes {
            exhausted = true;
            heap.extend(batch);
            break;
        }
        let mut parts = Vec::with_capacity(2 * batch.len());
        for n in &batch {
            let c = n.rect.center();
            if n.rect.diameter() <= 1e-13 * (1.0 + c.norm()) {
                settled = settled.min(n.lower);
            } else {
                let (a, b) = n.rect.split();
                parts.push(a);
                parts.push(b);
            }
        }
        let evals: Vec<Result<(f64, Complex64, f64)>> = parts
            .par_iter()
            .map(|r| {
                let c = r.center();
                Ok((lowering.lower(r)?, c, phi.eval(c)))
            })
            .collect();
        boxes += parts.len();
        let mut children = Vec::with_capacity(parts.len());
        for (r, e) in parts.into_iter().zip(evals) {
            let (lower, c, v) = e?;
            if v < u {
                u = v;
                argmin = c;
            }
            children.push((r, lower));
        }
        for (rect, lower) in children {
            if lower >= u - tol {
                settled = settled.min(lower);
            } else {
                heap.push(Node { lower, id: next_id, rect });
                next_id += 1;
            }
        }
    }
    let open = heap.peek().map_or(f64::INFINITY, |n| n.lower);
    let low = settled.min(open).min(ext).min(u);
    Ok(InfBound {
        low,
        high: u,
        argmin,
        radius,
        boxes,
        exhausted,
        rigorous: phi.g.enclosure_is_rigorous(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::builtin;
    use crate::intpoly::IntPoly;
    use crate::lowerbound::CertTerm;
    use num_bigint::BigInt;

    fn cert(terms: &[(&str, i64, i64)]) -> DualCertificate {
        DualCertificate::with_terms(
            terms
                .iter()
                .map(|&(q, n, d)| CertTerm {
                    q: IntPoly::parse(q).unwrap(),
                    a: BigRational::new(BigInt::from(n), BigInt::from(d)),
                })
                .collect(),
        )
        .unwrap()
    }

    fn grid_min(g: &GreenFunction, c: &DualCertificate, half: f64, n: usize) -> f64 {
        let phi = Phi::new(g, c);
        (0..=n)
            .into_par_iter()
            .map(|i| {
                (0..=n)
                    .map(|j| {
                        let z = Complex64::new(-half + 2.0 * half * i as f64 / n as f64, -half + 2.0 * half * j as f64 / n as f64);
                        phi.eval(z)
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .reduce(|| f64::INFINITY, f64::min)
    }

    #[test]
    fn weil_empty_certificate() {
        let w = builtin("weil").unwrap();
        let b = certified_inf(&w, &DualCertificate::empty(), &InfConfig::default()).unwrap();
        assert!(b.low >= -1e-4 && b.low <= 0.0 && b.high >= 0.0 && b.high <= 1e-4, "{b:?}");
        assert_eq!(b.low, 0.0);
        assert!(b.rigorous);
    }

    #[test]
    fn weil_half_x() {
        let w = builtin("weil").unwrap();
        let c = cert(&[("x", 1, 2)]);
        let b = certified_inf(&w, &c, &InfConfig { tol: 1e-3, ..Default::default() }).unwrap();
        assert!(b.low <= 0.0 && b.low >= -1e-3 && b.high < 1e-3, "{b:?}");
        assert!((b.argmin.norm() - 1.0).abs() < 1e-2);
    }

    #[test]
    fn zhang_zagier_certificate_against_grid() {
        let g = builtin("zhang_zagier").unwrap();
        // a+b weights with a·1·2 + b·2 < 1
        let c = cert(&[("x", 1, 8), ("x - 1", 1, 8), ("x^2 - x + 1", 1, 8)]);
        let b = certified_inf(&g, &c, &InfConfig { tol: 1e-4, ..Default::default() }).unwrap();
        let gm = grid_min(&g, &c, 3.0, 1200);
        assert!(b.low <= gm + 1e-12, "{b:?} vs grid {gm}");
        assert!(b.high - b.low <= 1e-4 + 1e-12);
        assert!(b.low >= gm - 2e-3, "{b:?} vs grid {gm}");
    }

    #[test]
    fn soundness_net_on_random_certificates() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let g = builtin("hultberg").unwrap();
        for _ in 0..4 {
            let a = rng.gen_range(0..200);
            let bb = rng.gen_range(0..(999 - a));
            let c = cert(&[("x", a, 1000), ("2*x + 1", bb, 1000)]);
            let b = certified_inf(&g, &c, &InfConfig { tol: 1e-3, ..Default::default() }).unwrap();
            let phi = Phi::new(&g, &c);
            for _ in 0..10_000 {
                let z = Complex64::from_polar(10f64.powf(rng.gen_range(-3.0..3.0)), rng.gen_range(0.0..6.3));
                assert!(phi.eval(z) >= b.low, "{z}: {} < {}", phi.eval(z), b.low);
            }
        }
    }
}

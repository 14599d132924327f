//! Simultaneous polynomial root finding (Aberth–Ehrlich) with a posteriori
//! inclusion radii, and root tracking along `A − e^{2πiθ} B`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::intpoly::IntPoly;

pub const MAX_ITERATIONS: usize = 200;
const REL_STEP_TOL: f64 = 1e-14;

/// One root cluster: `value` is the centroid, and the disk of radius
/// `error_radius` about it contains `multiplicity` true zeros.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub value: Complex64,
    pub error_radius: f64,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RootSet {
    pub roots: Vec<Root>,
    pub degree: usize,
    /// False when the iteration budget ran out; the roots are the best iterate.
    pub converged: bool,
}

impl RootSet {
    /// Cluster centroids repeated by multiplicity; length equals `degree`.
    pub fn points(&self) -> Vec<Complex64> {
        self.roots
            .iter()
            .flat_map(|r| std::iter::repeat(r.value).take(r.multiplicity))
            .collect()
    }

    pub fn max_radius(&self) -> f64 {
        self.roots.iter().map(|r| r.error_radius).fold(0.0, f64::max)
    }
}

/// Values needed per iterate: Newton ratio `p/p'`, `|p|`, rounding noise of `|p|`, `|p'|`.
struct Eval {
    ratio: Complex64,
    abs_p: f64,
    noise: f64,
    abs_dp: f64,
}

/// Evaluates at `z`, switching to the reversed polynomial for `|z| > 1` so
/// nothing overflows. `c` is ascending with `c[n] != 0`.
fn eval(c: &[Complex64], z: Complex64) -> Eval {
    let n = c.len() - 1;
    let az = z.norm();
    let gamma = 4.0 * (n as f64 + 1.0) * f64::EPSILON;
    if az <= 1.0 {
        let mut p = c[n];
        let mut dp = Complex64::new(0.0, 0.0);
        let mut bound = c[n].norm();
        for k in (0..n).rev() {
            dp = dp * z + p;
            p = p * z + c[k];
            bound = bound * az + c[k].norm();
        }
        Eval {
            ratio: p / dp,
            abs_p: p.norm(),
            noise: gamma * bound,
            abs_dp: dp.norm(),
        }
    } else {
        // p(z) = z^n q(w), w = 1/z, q has coefficients c reversed
        let w = z.inv();
        let aw = w.norm();
        let mut q = c[0];
        let mut dq = Complex64::new(0.0, 0.0);
        let mut bound = c[0].norm();
        for k in 1..=n {
            dq = dq * w + q;
            q = q * w + c[k];
            bound = bound * aw + c[k].norm();
        }
        let denom = q * n as f64 - w * dq;
        let zn = az.powi(n as i32);
        Eval {
            ratio: z * q / denom,
            abs_p: zn * q.norm(),
            noise: zn * gamma * bound,
            abs_dp: zn / az * denom.norm(),
        }
    }
}

/// Initial approximations on circles read off the Newton polygon of `|c_k|`.
pub fn newton_polygon_seeds(c: &[Complex64]) -> Vec<Complex64> {
    let n = c.len() - 1;
    let pts: Vec<(usize, f64)> = c
        .iter()
        .enumerate()
        .filter(|(_, v)| v.norm() > 0.0)
        .map(|(k, v)| (k, v.norm().ln()))
        .collect();
    // upper convex hull
    let mut hull: Vec<(usize, f64)> = Vec::new();
    for &p in &pts {
        while hull.len() >= 2 {
            let (x1, y1) = hull[hull.len() - 2];
            let (x2, y2) = hull[hull.len() - 1];
            let cross = (x2 as f64 - x1 as f64) * (p.1 - y1) - (y2 - y1) * (p.0 as f64 - x1 as f64);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut seeds = Vec::with_capacity(n);
    let tau = std::f64::consts::TAU;
    for win in hull.windows(2) {
        let (i, yi) = win[0];
        let (j, yj) = win[1];
        let m = j - i;
        let r = ((yi - yj) / m as f64).exp();
        for k in 0..m {
            let ang = tau * k as f64 / m as f64 + tau * i as f64 / n as f64 + 0.4;
            seeds.push(Complex64::from_polar(r, ang));
        }
    }
    // vanishing low-order terms are roots at 0; seed them on a small circle
    // so every root gets a start
    let lo = pts.first().map_or(0, |p| p.0);
    if lo > 0 {
        let r0 = seeds.iter().map(|s| s.norm()).fold(1.0, f64::min) * 1e-3;
        for k in 0..lo {
            seeds.push(Complex64::from_polar(r0, tau * k as f64 / lo as f64 + 0.7));
        }
    }
    seeds
}

/// Aberth–Ehrlich iteration. Returns the final iterate and whether every
/// root met the stopping rule. `c` must have nonzero leading and constant terms.
pub fn aberth(c: &[Complex64], seeds: &[Complex64]) -> (Vec<Complex64>, bool) {
    debug_assert_eq!(seeds.len(), c.len() - 1);
    if c.len() == 2 {
        return (vec![-c[0] / c[1]], true);
    }
    aberth_with(seeds, |z| eval(c, z))
}

/// Aberth–Ehrlich on any evaluator of `p/p'`, `|p|` and its rounding noise.
fn aberth_with(seeds: &[Complex64], ev: impl Fn(Complex64) -> Eval) -> (Vec<Complex64>, bool) {
    let n = seeds.len();
    let mut z = seeds.to_vec();
    let mut done = vec![false; n];
    for _ in 0..MAX_ITERATIONS {
        let mut all = true;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let e = ev(z[i]);
            if e.abs_p <= e.noise {
                done[i] = true;
                continue;
            }
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if j != i {
                    let d = z[i] - z[j];
                    if d.norm() > 0.0 {
                        s += d.inv();
                    }
                }
            }
            let nr = e.ratio;
            let corr = if nr.is_finite() {
                let den = Complex64::new(1.0, 0.0) - nr * s;
                if den.norm() > 0.0 {
                    nr / den
                } else {
                    nr
                }
            } else {
                // p' vanished: nudge off the critical point
                Complex64::new(1e-8, 1e-8) * (1.0 + z[i].norm())
            };
            if !corr.is_finite() {
                continue;
            }
            z[i] -= corr;
            if corr.norm() <= REL_STEP_TOL * z[i].norm().max(f64::MIN_POSITIVE) {
                done[i] = true;
            } else {
                all = false;
            }
        }
        if all && done.iter().all(|&d| d) {
            return (z, true);
        }
    }
    let ok = done.iter().all(|&d| d);
    (z, ok)
}

fn polish(z: &mut [Complex64], ev: impl Fn(Complex64) -> Eval) {
    for zi in z.iter_mut() {
        for _ in 0..2 {
            let e = ev(*zi);
            if e.abs_p <= e.noise || !e.ratio.is_finite() {
                break;
            }
            let cand = *zi - e.ratio;
            if ev(cand).abs_p < e.abs_p {
                *zi = cand;
            } else {
                break;
            }
        }
    }
}

/// Value, derivative, and `Σ|c_k||z|^k` of a real ascending polynomial.
fn horner_d(c: &[f64], z: Complex64) -> (Complex64, Complex64, f64) {
    let az = z.norm();
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    let mut bound = 0.0;
    for &ck in c.iter().rev() {
        dp = dp * z + p;
        p = p * z + ck;
        bound = bound * az + ck.abs();
    }
    (p, dp, bound)
}

/// The fiber `P^k − e^{2πiθ} Q^l` of the pullback under `P^k/Q^l`, kept in
/// factored form. Expanding the powers first loses most of the digits of
/// the near-multiple roots around the zeros of `P`.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerFiber {
    p: Vec<f64>,
    k: u32,
    q: Vec<f64>,
    l: u32,
}

impl PowerFiber {
    /// Requires `k deg P ≥ l deg Q` and a nonvanishing leading coefficient
    /// of every fiber (see [`check_family`]).
    pub fn new(p: &IntPoly, k: u32, q: &IntPoly, l: u32) -> Self {
        debug_assert!(k as usize * p.degree() >= l as usize * q.degree());
        PowerFiber {
            p: p.to_f64_coeffs(),
            k,
            q: q.to_f64_coeffs(),
            l,
        }
    }

    pub fn degree(&self) -> usize {
        self.k as usize * (self.p.len() - 1)
    }

    /// Expanded coefficients, used only for starting values.
    fn expanded(&self, theta: f64) -> Vec<Complex64> {
        let pow = |c: &[f64], e: u32| {
            let mut out = vec![1.0];
            for _ in 0..e {
                let mut next = vec![0.0; out.len() + c.len() - 1];
                for (i, a) in out.iter().enumerate() {
                    for (j, b) in c.iter().enumerate() {
                        next[i + j] += a * b;
                    }
                }
                out = next;
            }
            out
        };
        fiber_coeffs(&pow(&self.p, self.k), &pow(&self.q, self.l), theta)
    }

    fn eval(&self, w: Complex64, z: Complex64) -> Eval {
        let (k, l) = (self.k as i32, self.l as i32);
        let (dp, dq) = ((self.p.len() - 1) as i32, (self.q.len() - 1) as i32);
        let n = k * dp;
        let gamma = 4.0 * (self.p.len().max(self.q.len()) as f64 + 1.0) * f64::EPSILON;
        let az = z.norm();
        // scaled so that p = s·p̃ and p' = s′·p̃′ with s = z^n, s′ = z^{n−1} for |z| > 1
        let (pv, pd, pb, qv, qd, qb, tail) = if az <= 1.0 {
            let (pv, pd, pb) = horner_d(&self.p, z);
            let (qv, qd, qb) = horner_d(&self.q, z);
            (pv, pd, pb, qv, qd, qb, Complex64::new(1.0, 0.0))
        } else {
            let u = z.inv();
            let pr: Vec<f64> = self.p.iter().rev().copied().collect();
            let qr: Vec<f64> = self.q.iter().rev().copied().collect();
            let (pv, pdr, pb) = horner_d(&pr, u);
            let (qv, qdr, qb) = horner_d(&qr, u);
            // z P′(z) / z^{deg P} = deg P · P̃(u) − u P̃′(u)
            let pd = pv * dp as f64 - u * pdr;
            let qd = qv * dq as f64 - u * qdr;
            (pv, pd, pb, qv, qd, qb, u.powi(n - l * dq))
        };
        let pk1 = if k > 1 { pv.powi(k - 1) } else { Complex64::new(1.0, 0.0) };
        let ql1 = if l > 1 { qv.powi(l - 1) } else { Complex64::new(1.0, 0.0) };
        let a = pk1 * pv;
        let b = w * tail * ql1 * qv;
        let val = a - b;
        let der = pk1 * pd * k as f64 - w * tail * ql1 * qd * l as f64;
        let noise = gamma
            * (k as f64 * pk1.norm() * pb + l as f64 * tail.norm() * ql1.norm() * qb + a.norm() + b.norm());
        if az <= 1.0 {
            Eval {
                ratio: val / der,
                abs_p: val.norm(),
                noise,
                abs_dp: der.norm(),
            }
        } else {
            let zn = az.powi(n);
            Eval {
                ratio: z * val / der,
                abs_p: zn * val.norm(),
                noise: zn * noise,
                abs_dp: zn / az * der.norm(),
            }
        }
    }

    /// Roots of the fiber over `θ`, started from `seeds` when their count
    /// matches, and whether the iteration converged.
    pub fn roots(&self, theta: f64, seeds: Option<&[Complex64]>) -> (Vec<Complex64>, bool) {
        let w = Complex64::from_polar(1.0, std::f64::consts::TAU * theta);
        let n = self.degree();
        let owned;
        let s: &[Complex64] = match seeds {
            Some(s) if s.len() == n => s,
            _ => {
                let c = self.expanded(theta);
                if n == 1 {
                    return (vec![-c[0] / c[1]], true);
                }
                owned = newton_polygon_seeds(&c);
                &owned
            }
        };
        let (mut z, ok) = aberth_with(s, |x| self.eval(w, x));
        polish(&mut z, |x| self.eval(w, x));
        (z, ok)
    }
}

/// Inclusion radius of a single approximation: the smaller of `n|p/p'|` and
/// `(|p|/|lc|)^{1/n}`, both inflated by the rounding noise in `p`.
fn radii(c: &[Complex64], z: Complex64) -> (f64, f64) {
    let n = c.len() - 1;
    let e = eval(c, z);
    let p = e.abs_p + e.noise;
    let newton = if e.abs_dp > 0.0 {
        n as f64 * p / e.abs_dp
    } else {
        f64::INFINITY
    };
    let root = (p / c[n].norm()).powf(1.0 / n as f64);
    (newton, root)
}

/// Strips zero roots: returns (count of zero roots, trimmed coefficients).
fn strip(coeffs: &[Complex64]) -> Result<(usize, Vec<Complex64>)> {
    let mut hi = coeffs.len();
    while hi > 0 && coeffs[hi - 1].norm() == 0.0 {
        hi -= 1;
    }
    if hi <= 1 {
        return Err(Error::InvalidPolynomial("degree must be at least 1".into()));
    }
    if coeffs[..hi].iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidPolynomial("non-finite coefficient".into()));
    }
    let lo = coeffs.iter().take_while(|c| c.norm() == 0.0).count();
    Ok((lo, coeffs[lo..hi].to_vec()))
}

/// Raw approximations (one per root, with multiplicity) started from `seeds`,
/// or from Newton-polygon seeds when `seeds` has the wrong length.
pub fn raw_roots(coeffs: &[Complex64], seeds: Option<&[Complex64]>) -> Result<(Vec<Complex64>, bool)> {
    let (zeros, c) = strip(coeffs)?;
    let n = c.len() - 1;
    let mut out = vec![Complex64::new(0.0, 0.0); zeros];
    if n == 0 {
        return Ok((out, true));
    }
    let seeds_owned;
    let s: &[Complex64] = match seeds {
        Some(s) if s.len() == n + zeros && zeros == 0 => s,
        _ => {
            seeds_owned = newton_polygon_seeds(&c);
            &seeds_owned
        }
    };
    let (mut z, ok) = aberth(&c, s);
    polish(&mut z, |x| eval(&c, x));
    out.extend(z);
    Ok((out, ok))
}

/// All complex roots of `Σ coeffs[k] x^k` with certified inclusion disks;
/// overlapping disks are merged into a cluster with multiplicity.
pub fn all_roots(coeffs: &[Complex64]) -> Result<RootSet> {
    let rs = all_roots_best_effort(coeffs)?;
    if !rs.converged {
        return Err(Error::NonConvergence {
            iterations: MAX_ITERATIONS,
            theta: None,
        });
    }
    Ok(rs)
}

/// Like [`all_roots`] but returns the best iterate with `converged = false`
/// instead of failing.
pub fn all_roots_best_effort(coeffs: &[Complex64]) -> Result<RootSet> {
    let (zeros, c) = strip(coeffs)?;
    let degree = zeros + c.len() - 1;
    let (z, converged) = raw_roots(coeffs, None)?;
    let mut roots = Vec::new();
    if zeros > 0 {
        roots.push(Root {
            value: Complex64::new(0.0, 0.0),
            error_radius: 0.0,
            multiplicity: zeros,
        });
    }
    let z = &z[zeros..];
    if z.is_empty() {
        return Ok(RootSet {
            roots,
            degree,
            converged,
        });
    }
    let rad: Vec<(f64, f64)> = z.iter().map(|&w| radii(&c, w)).collect();
    // clustering uses the larger radius so that near-multiple roots merge
    let wide: Vec<f64> = rad.iter().map(|&(a, b)| a.max(b)).collect();
    let m = z.len();
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut k = i;
        while p[k] != r {
            let nx = p[k];
            p[k] = r;
            k = nx;
        }
        r
    }
    for i in 0..m {
        for j in i + 1..m {
            if (z[i] - z[j]).norm() <= wide[i] + wide[j] {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b] = a;
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; m];
    for i in 0..m {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }
    for g in groups {
        if g.len() == 1 {
            let i = g[0];
            roots.push(Root {
                value: z[i],
                error_radius: rad[i].0.min(rad[i].1),
                multiplicity: 1,
            });
        } else {
            let k = g.len() as f64;
            let centroid = g.iter().map(|&i| z[i]).sum::<Complex64>() / k;
            let radius = g
                .iter()
                .map(|&i| (z[i] - centroid).norm() + wide[i])
                .fold(0.0, f64::max);
            roots.push(Root {
                value: centroid,
                error_radius: radius,
                multiplicity: g.len(),
            });
        }
    }
    Ok(RootSet {
        roots,
        degree,
        converged,
    })
}

/// Coefficients of `A − e^{2πiθ} B` as complex values.
pub fn fiber_coeffs(a: &[f64], b: &[f64], theta: f64) -> Vec<Complex64> {
    let e = Complex64::from_polar(1.0, std::f64::consts::TAU * theta);
    let n = a.len().max(b.len());
    (0..n)
        .map(|k| {
            let ak = a.get(k).copied().unwrap_or(0.0);
            let bk = b.get(k).copied().unwrap_or(0.0);
            Complex64::new(ak, 0.0) - e * bk
        })
        .collect()
}

/// Checks the preconditions of a fiber family `A − e^{2πiθ} B`: `B ≠ 0`,
/// `gcd(A, B) = 1`, and a leading coefficient that never vanishes.
pub fn check_family(a: &IntPoly, b: &IntPoly) -> Result<()> {
    if b.is_zero() || a.is_zero() {
        return Err(Error::DegenerateFamily("A and B must be nonzero".into()));
    }
    if a.degree() < b.degree() {
        return Err(Error::DegenerateFamily("deg A must be at least deg B".into()));
    }
    if a.degree() == b.degree() && num_traits::Signed::abs(&a.leading()) == num_traits::Signed::abs(&b.leading()) {
        return Err(Error::DegenerateFamily(
            "equal degrees need |lc A| != |lc B|".into(),
        ));
    }
    if !a.gcd(b).is_constant() {
        return Err(Error::DegenerateFamily("A and B share a factor".into()));
    }
    Ok(())
}

fn min_separation(z: &[Complex64], i: usize) -> f64 {
    z.iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, w)| (z[i] - w).norm())
        .fold(f64::INFINITY, f64::min)
}

/// Greedy nearest-neighbour matching of `cur` to the order of `prev`.
/// Returns the reordered column and whether every match was unambiguous.
fn match_column(prev: &[Complex64], cur: &[Complex64]) -> (Vec<Complex64>, bool) {
    let n = prev.len();
    let mut used = vec![false; n];
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    let mut clean = true;
    for i in 0..n {
        let mut best = usize::MAX;
        let mut bd = f64::INFINITY;
        for j in 0..n {
            if !used[j] {
                let d = (prev[i] - cur[j]).norm();
                if d < bd {
                    bd = d;
                    best = j;
                }
            }
        }
        used[best] = true;
        out[i] = cur[best];
        if n > 1 && bd > 0.5 * min_separation(cur, best) {
            clean = false;
        }
    }
    (out, clean)
}

/// Root paths of `A(w) − e^{2πiθ} B(w)` over sorted `thetas`: `paths[k]` is
/// the root multiset at `thetas[k]`, ordered so index `i` follows one path.
pub fn track_family(a: &IntPoly, b: &IntPoly, thetas: &[f64]) -> Result<Vec<Vec<Complex64>>> {
    check_family(a, b)?;
    let af = a.to_f64_coeffs();
    let bf = b.to_f64_coeffs();
    let solve = |t: f64, seeds: Option<&[Complex64]>| -> Result<Vec<Complex64>> {
        let c = fiber_coeffs(&af, &bf, t);
        let (z, ok) = raw_roots(&c, seeds)?;
        if !ok {
            return Err(Error::NonConvergence {
                iterations: MAX_ITERATIONS,
                theta: Some(t),
            });
        }
        Ok(z)
    };
    let cols: Vec<Vec<Complex64>> = thetas
        .par_iter()
        .map(|&t| solve(t, None))
        .collect::<Result<_>>()?;
    let mut out: Vec<Vec<Complex64>> = Vec::with_capacity(cols.len());
    for (k, col) in cols.into_iter().enumerate() {
        if k == 0 {
            out.push(col);
            continue;
        }
        let prev = &out[k - 1];
        let (m, clean) = match_column(prev, &col);
        if clean {
            out.push(m);
        } else {
            let again = solve(thetas[k], Some(prev))?;
            let (m2, _) = match_column(prev, &again);
            out.push(m2);
        }
    }
    Ok(out)
}

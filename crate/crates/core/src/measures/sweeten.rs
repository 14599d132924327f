//! Sweetened truncation: a compactly supported surrogate for a discrete
//! probability measure whose potential is dominated by `η_R·U^μ`.

use num_complex::Complex64;

use super::{circle_log_kernel, CircleMeasure, DiscreteMeasure};
use crate::error::{Error, Result};

/// `η_R·μ|_{|z|≤R} + (1 − m_R η_R)·λ_{S_R}` together with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Sweetened {
    /// The restriction to `|z| ≤ R`, already scaled by `η_R`.
    pub restricted: DiscreteMeasure,
    pub circle: CircleMeasure,
    pub circle_weight: f64,
    pub m_r: f64,
    pub t_r: f64,
    pub l_r: f64,
    pub eta: f64,
}

fn log_plus(z: Complex64) -> f64 {
    z.norm().ln().max(0.0)
}

impl Sweetened {
    /// Atom weights summed in storage order, then the circle weight.
    pub fn mass(&self) -> f64 {
        self.restricted.atoms.iter().map(|a| a.1).sum::<f64>() + self.circle_weight
    }

    pub fn potential(&self, z: Complex64) -> f64 {
        let mut s = 0.0;
        for &(p, w) in &self.restricted.atoms {
            if w == 0.0 {
                continue;
            }
            let d = (z - p).norm();
            if d == 0.0 {
                return f64::INFINITY;
            }
            s -= w * d.ln();
        }
        s - self.circle_weight * circle_log_kernel(self.circle.r, z)
    }

    /// `∫ log⁺|z| d(self)`.
    pub fn log_plus_moment(&self) -> f64 {
        self.restricted.integrate(log_plus) + self.circle_weight * self.circle.r.ln().max(0.0)
    }
}

/// `∫ log⁺|z| dμ` for a discrete measure.
pub fn log_plus_moment(m: &DiscreteMeasure) -> f64 {
    m.integrate(log_plus)
}

/// Sweetened truncation of a probability measure at radius `r > 1`.
///
/// The circle weight is `1 − Σ(scaled atoms)` so the total mass is exactly 1
/// in floating point.
pub fn sweeten(m: &DiscreteMeasure, r: f64) -> Result<Sweetened> {
    if !(r > 1.0) || !r.is_finite() {
        return Err(Error::InadmissibleMeasure(format!("sweetening radius {r} must exceed 1")));
    }
    if !m.is_probability() {
        return Err(Error::InadmissibleMeasure(format!("mass {} is not 1", m.mass())));
    }
    let mut m_r = 0.0;
    let mut t_r = 0.0;
    for &(p, w) in &m.atoms {
        let a = p.norm();
        if a <= r {
            m_r += w;
        }
        if a >= r {
            t_r += w * log_plus(p);
        }
    }
    let m_r = m_r.min(1.0);
    let l_r = 2.0 * (1.0 - m_r) * std::f64::consts::LN_2 + t_r;
    let lr = r.ln();
    let eta = lr / (lr + l_r);
    let mut atoms: Vec<(Complex64, f64)> = m
        .atoms
        .iter()
        .filter(|a| a.0.norm() <= r && a.1 > 0.0)
        .map(|&(p, w)| (p, eta * w))
        .collect();
    let mut inner: f64 = atoms.iter().map(|a| a.1).sum();
    // the input's own mass slack can push the sum past 1; the excess is
    // rounding-sized and comes off the heaviest atom
    for _ in 0..8 {
        if inner <= 1.0 {
            break;
        }
        if let Some(a) = atoms.iter_mut().max_by(|x, y| x.1.total_cmp(&y.1)) {
            a.1 = (a.1 - (inner - 1.0)).max(0.0);
        }
        inner = atoms.iter().map(|a| a.1).sum();
    }
    // a + fl(1 − a) = 1 for a ∈ [0, 1]
    let circle_weight = (1.0 - inner).max(0.0);
    Ok(Sweetened {
        restricted: DiscreteMeasure { atoms },
        circle: CircleMeasure { r },
        circle_weight,
        m_r,
        t_r,
        l_r,
        eta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::potential_discrete;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn outside_atom_becomes_circle() {
        let m = DiscreteMeasure::new(vec![(c(3.0, 0.0), 1.0)]).unwrap();
        let s = sweeten(&m, 2.0).unwrap();
        assert!(s.restricted.atoms.is_empty());
        assert_eq!(s.circle_weight, 1.0);
        assert_eq!(s.m_r, 0.0);
    }

    #[test]
    fn inside_measure_unchanged() {
        let m = DiscreteMeasure::uniform(&[c(1.0, 0.0), c(-1.0, 0.0)]);
        let s = sweeten(&m, 2.0).unwrap();
        assert_eq!((s.m_r, s.t_r, s.l_r, s.eta), (1.0, 0.0, 0.0, 1.0));
        assert_eq!(s.restricted, m);
        assert_eq!(s.circle_weight, 0.0);
    }

    #[test]
    fn split_measure_weights() {
        let m = DiscreteMeasure::uniform(&[c(0.0, 0.0), c(4.0, 0.0)]);
        let s = sweeten(&m, 2.0).unwrap();
        let ln2 = std::f64::consts::LN_2;
        assert_eq!(s.m_r, 0.5);
        assert!((s.t_r - ln2).abs() < 1e-15);
        assert!((s.l_r - 2.0 * ln2).abs() < 1e-15);
        assert!((s.eta - 1.0 / 3.0).abs() < 1e-15);
        assert!((s.circle_weight - (1.0 - s.eta / 2.0)).abs() < 1e-15);
        assert_eq!(s.mass(), 1.0);
    }

    #[test]
    fn uniform_weights_with_rounding_slack_keep_mass_one() {
        for n in 1..60 {
            let pts: Vec<Complex64> = (0..n).map(|k| Complex64::from_polar(1.5, k as f64)).collect();
            let m = DiscreteMeasure::uniform(&pts);
            for r in [2.0, 1.2] {
                let s = sweeten(&m, r).unwrap();
                assert_eq!(s.mass(), 1.0, "n={n} r={r}");
                assert!(s.restricted.atoms.iter().all(|a| a.1 >= 0.0));
            }
        }
    }

    #[test]
    fn mass_support_and_domination() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = rng.gen_range(1..12);
            let mut raw: Vec<(Complex64, f64)> = (0..n)
                .map(|_| {
                    let rad = 10f64.powf(rng.gen_range(-1.0..3.5));
                    (Complex64::from_polar(rad, rng.gen_range(0.0..6.3)), rng.gen_range(0.01..1.0))
                })
                .collect();
            let tot: f64 = raw.iter().map(|a| a.1).sum();
            raw.iter_mut().for_each(|a| a.1 /= tot);
            let last = raw.len() - 1;
            raw[last].1 = 1.0 - raw[..last].iter().map(|a| a.1).sum::<f64>();
            let m = DiscreteMeasure::new(raw).unwrap();
            for k in 1..=10 {
                let r = 2f64.powi(k);
                let s = sweeten(&m, r).unwrap();
                assert_eq!(s.mass(), 1.0);
                assert!((0.0..=1.0).contains(&s.circle_weight));
                assert!(s.restricted.atoms.iter().all(|a| a.0.norm() <= r));
                for _ in 0..20 {
                    let z = Complex64::from_polar(10f64.powf(rng.gen_range(-2.0..4.0)), rng.gen_range(0.0..6.3));
                    let lhs = s.potential(z);
                    let rhs = s.eta * potential_discrete(&m, z);
                    assert!(lhs <= rhs + 1e-9, "R={r} z={z}: {lhs} > {rhs}");
                }
            }
        }
    }

    // |gap| ≤ (1 − m_R) log R + L_R − ∫_{>R} log⁺ + T_R ≤ 2 L_R, and L_R is
    // nonincreasing in R, so the gap sits under a decreasing envelope
    #[test]
    fn log_plus_moment_gap_under_decreasing_envelope() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let n = rng.gen_range(2..16);
            let pts: Vec<Complex64> = (0..n)
                .map(|_| Complex64::from_polar(10f64.powf(rng.gen_range(-1.0..4.5)), rng.gen_range(0.0..6.3)))
                .collect();
            let m = DiscreteMeasure::uniform(&pts);
            let target = log_plus_moment(&m);
            let mut last_l = f64::INFINITY;
            for k in 1..=20 {
                let s = sweeten(&m, 2f64.powi(k)).unwrap();
                let gap = (s.log_plus_moment() - target).abs();
                assert!(gap <= 2.0 * s.l_r + 1e-12, "k={k}: {gap} > 2·{}", s.l_r);
                assert!(s.l_r <= last_l + 1e-12);
                last_l = s.l_r;
            }
            let beyond = pts.iter().map(|p| p.norm()).fold(2.0, f64::max) * 2.0;
            let s = sweeten(&m, beyond).unwrap();
            assert!((s.log_plus_moment() - target).abs() < 1e-12);
        }
    }

    // The gap itself need not be monotone: for (δ₀ + δ_ρ)/2 the signed gap
    // crosses zero near log R = log ρ/√2 and grows again until R = ρ.
    #[test]
    fn gap_can_increase_before_an_atom_is_absorbed() {
        let m = DiscreteMeasure::uniform(&[c(0.0, 0.0), c(1e4, 0.0)]);
        let target = log_plus_moment(&m);
        let gap = |r: f64| (sweeten(&m, r).unwrap().log_plus_moment() - target).abs();
        assert!(gap(1024.0) > gap(512.0));
        assert!(gap(2e4) < 1e-12);
    }
}

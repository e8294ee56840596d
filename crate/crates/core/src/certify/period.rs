//! Minimal-period evidence: active-frequency gcd and subperiod rejection.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::scalar::Real;
use crate::symfun::{sup_norm, TrajectoryCoeffs};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeriodTolerances {
    /// Relative block mass above which a frequency counts as active.
    pub tol_mass: f64,
    /// Subperiod gaps must exceed `tol_sub·sup|x|`.
    pub tol_sub: f64,
    /// Largest divisor `k` of the period that is tested.
    pub max_divisor: usize,
}

impl Default for PeriodTolerances {
    fn default() -> Self {
        PeriodTolerances { tol_mass: 1e-8, tol_sub: 1e-3, max_divisor: 8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PeriodVerdict {
    Minimal,
    /// The function repeats after `T/k`.
    Subharmonic,
    /// The active set changes within a decade of `tol_mass`.
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubperiodGap {
    pub k: usize,
    /// `sup_t |x(t + T/k) − x(t)| / sup|x|`.
    pub gap: f64,
    pub rejected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalPeriodReport {
    pub period: f64,
    pub active_frequencies: Vec<usize>,
    pub active_frequency_gcd: usize,
    pub spectral_pass: bool,
    pub subperiod_rejections: Vec<SubperiodGap>,
    pub subperiod_pass: bool,
    pub verdict: PeriodVerdict,
    /// Smallest period consistent with the evidence.
    pub certified_period: f64,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Raw frequencies whose coefficient block carries relative mass above
/// `tol` (block norm over the largest block norm).
pub fn active_frequencies<S: Real>(x: &TrajectoryCoeffs<S>, tol: f64) -> Vec<usize> {
    let sp = x.space();
    let dim = sp.dim();
    let mut mass: Vec<(usize, f64)> = Vec::new();
    for (j, mode) in sp.modes().iter().enumerate() {
        let m2: f64 = (0..dim).map(|d| x.get(j, d).as_f64().powi(2)).sum();
        match mass.iter_mut().find(|(f, _)| *f == mode.freq) {
            Some((_, acc)) => *acc += m2,
            None => mass.push((mode.freq, m2)),
        }
    }
    let top = mass.iter().fold(0.0f64, |m, (_, v)| m.max(v.sqrt()));
    if top == 0.0 {
        return Vec::new();
    }
    let mut out: Vec<usize> = mass.into_iter().filter(|(_, v)| v.sqrt() / top > tol).map(|(f, _)| f).collect();
    out.sort_unstable();
    out
}

fn gcd_of(freqs: &[usize]) -> usize {
    freqs.iter().fold(0, |g, &f| gcd(g, f))
}

/// Both checks must pass for a `Minimal` verdict: the active frequencies
/// have gcd 1, and no shift by `T/k`, `k = 2..=max_divisor`, maps the
/// trajectory to itself.
pub fn minimal_period_certificate<S: Real>(x: &TrajectoryCoeffs<S>, tol: &PeriodTolerances) -> Result<MinimalPeriodReport> {
    let period = x.space().period();
    let active = active_frequencies(x, tol.tol_mass);
    let g = gcd_of(&active);
    let g_coarse = gcd_of(&active_frequencies(x, tol.tol_mass * 10.0));
    let g_fine = gcd_of(&active_frequencies(x, tol.tol_mass / 10.0));
    let indeterminate = g_coarse != g || g_fine != g;
    let spectral_pass = g == 1 && !indeterminate;

    let amp = sup_norm(x);
    let times = x.space().times().to_vec();
    let mut rejections = Vec::new();
    for k in 2..=tol.max_divisor.max(1) {
        let shift = period / S::from_usize_lossy(k);
        let mut gap = S::zero();
        for &t in &times {
            let (a, _) = x.evaluate_at(t);
            let (b, _) = x.evaluate_at(t + shift);
            for (p, q) in a.iter().zip(&b) {
                gap = gap.max((*p - *q).abs());
            }
        }
        let rel = if amp > S::zero() { (gap / amp).as_f64() } else { 0.0 };
        rejections.push(SubperiodGap { k, gap: rel, rejected: rel > tol.tol_sub });
    }
    let subperiod_pass = amp > S::zero() && rejections.iter().all(|r| r.rejected);
    let verdict = if indeterminate {
        PeriodVerdict::Indeterminate
    } else if spectral_pass && subperiod_pass {
        PeriodVerdict::Minimal
    } else {
        PeriodVerdict::Subharmonic
    };
    let divisor = if g > 1 {
        g
    } else {
        rejections.iter().filter(|r| !r.rejected).map(|r| r.k).max().unwrap_or(1)
    };
    Ok(MinimalPeriodReport {
        period: period.as_f64(),
        active_frequencies: active,
        active_frequency_gcd: g,
        spectral_pass,
        subperiod_rejections: rejections,
        subperiod_pass,
        verdict,
        certified_period: period.as_f64() / divisor as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symfun::{make_space, SymmetryClass};

    #[test]
    fn pure_third_harmonic_is_rejected() {
        let sp = make_space(1.0, 1, SymmetryClass::E1, 4).unwrap();
        let x = TrajectoryCoeffs::unit(&sp, 1, 0);
        let r = minimal_period_certificate(&x, &PeriodTolerances::default()).unwrap();
        assert_eq!(r.active_frequency_gcd, 3);
        assert_eq!(r.verdict, PeriodVerdict::Subharmonic);
        assert!((r.certified_period - 1.0 / 3.0).abs() < 1e-15);
        assert!(!r.subperiod_rejections.iter().find(|g| g.k == 3).unwrap().rejected);
    }

    #[test]
    fn fundamental_with_harmonic_is_minimal() {
        let sp = make_space(1.0, 1, SymmetryClass::E1, 4).unwrap();
        let x = TrajectoryCoeffs::new(&sp, vec![1.0, 0.05, 0.0, 0.0]).unwrap();
        let r = minimal_period_certificate(&x, &PeriodTolerances::default()).unwrap();
        assert_eq!(r.active_frequencies, vec![1, 3]);
        assert_eq!(r.verdict, PeriodVerdict::Minimal);
    }

    #[test]
    fn mass_at_the_threshold_is_indeterminate() {
        let sp = make_space(1.0, 1, SymmetryClass::E1, 4).unwrap();
        let x = TrajectoryCoeffs::new(&sp, vec![2e-8, 1.0, 0.0, 0.0]).unwrap();
        let r = minimal_period_certificate(&x, &PeriodTolerances::default()).unwrap();
        assert_eq!(r.verdict, PeriodVerdict::Indeterminate);
    }
}

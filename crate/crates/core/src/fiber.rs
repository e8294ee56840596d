//! One-dimensional analysis of `s ↦ φ(s) = F(se)` along a ray.
//!
//! Both actions share the structure `φ′(s) = s·g(s)` with `g` non-increasing:
//! `g = ‖e‖² − I′(se)e/s` for the direct action and `g = a(e,e) + b′(se)e/s`
//! for the dual one. The critical set on `s > 0` is the zero set of `g`, an
//! interval `[crit_lo, crit_hi]`; a nondegenerate interval is a plateau.

use crate::error::{Error, Result};
use crate::scalar::{dot, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FiberKind {
    Direct,
    Dual,
}

/// Evaluates `(φ(s), φ′(s))`.
pub trait RayMap<S: Real>: Sync {
    fn eval(&self, s: S) -> Result<(S, S)>;
}

impl<S: Real, F> RayMap<S> for F
where
    F: Fn(S) -> Result<(S, S)> + Sync,
{
    fn eval(&self, s: S) -> Result<(S, S)> {
        self(s)
    }
}

/// A ray together with the coefficient `κ` of its quadratic part
/// (`‖e‖²` direct, `a(e,e) < 0` dual).
pub struct FiberProblem<S: Real, R> {
    pub kind: FiberKind,
    pub kappa: S,
    pub ray: R,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberTolerances<S> {
    /// Bisection stops when the bracket is below `rel_tol·s`.
    pub rel_tol: S,
    /// `|g| ≤ dead_band·|κ|` counts as zero.
    pub dead_band: S,
    /// Critical intervals wider than `plateau_rel·crit_lo` are plateaus.
    pub plateau_rel: S,
    /// First trial abscissa.
    pub s_init: S,
    /// Bracket expansion stops after this many doublings of `s_init`.
    pub max_doublings: usize,
    /// Check that `g` is non-increasing on a geometric grid.
    pub check_monotone: bool,
    pub scan_points: usize,
    /// Allowed increase of `g` between grid neighbours, relative to `|κ|`.
    pub ratio_slack: S,
}

impl<S: Real> Default for FiberTolerances<S> {
    fn default() -> Self {
        FiberTolerances {
            rel_tol: S::lit(1e-13),
            dead_band: S::lit(1e-12),
            plateau_rel: S::lit(1e-6),
            s_init: S::one(),
            max_doublings: 60,
            check_monotone: true,
            scan_points: 64,
            ratio_slack: S::lit(1e-9),
        }
    }
}

impl<S: Real> FiberTolerances<S> {
    /// Same tolerances without the monotonicity scan (used inside the
    /// optimizer, where the profile is evaluated many times).
    pub fn fast() -> Self {
        FiberTolerances { check_monotone: false, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FiberProfile<S> {
    /// Bracket used for the search: `φ′(s_lo) > 0`.
    pub s_lo: S,
    pub s_hi: S,
    pub crit_lo: S,
    pub crit_hi: S,
    /// Midpoint of the critical interval, the representative maximizer.
    pub s_star: S,
    /// `max_{s≥0} φ(s) = φ(s_star)`.
    pub value: S,
    pub plateau: bool,
}

struct Ratio<'a, S: Real, R> {
    p: &'a FiberProblem<S, R>,
    band: S,
}

impl<S: Real, R: RayMap<S>> Ratio<'_, S, R> {
    fn g(&self, s: S) -> Result<S> {
        let (_, d) = self.p.ray.eval(s)?;
        Ok(d / s)
    }
    /// `+1` above the band, `-1` below, `0` inside.
    fn sign(&self, s: S) -> Result<i8> {
        let g = self.g(s)?;
        Ok(if g > self.band {
            1
        } else if g < -self.band {
            -1
        } else {
            0
        })
    }
}

/// Shrinks `(a, b)` around the boundary of `holds(f(s))`, which holds at
/// `a` and fails at `b`, with Illinois steps safeguarded by bisection.
/// Returns the final bracket.
fn refine_boundary<S: Real>(
    (mut a, mut fa): (S, S),
    (mut b, mut fb): (S, S),
    rel: S,
    mut f: impl FnMut(S) -> Result<S>,
    holds: impl Fn(S) -> bool,
) -> Result<(S, S)> {
    let two = S::lit(2.0);
    let mut side = 0i8;
    let mut width = b - a;
    for it in 0..300 {
        if b - a <= rel * b {
            break;
        }
        let mut c = (a * fb - b * fa) / (fb - fa);
        // force a bisection when the secant leaves the bracket or the
        // bracket has not halved in three steps
        if !(c > a && c < b) || (it % 3 == 2 && b - a > width / two) {
            c = (a + b) / two;
        }
        if it % 3 == 2 {
            width = b - a;
        }
        let fc = f(c)?;
        if holds(fc) {
            a = c;
            fa = fc;
            if side == 1 {
                fb /= two;
            }
            side = 1;
        } else {
            b = c;
            fb = fc;
            if side == -1 {
                fa /= two;
            }
            side = -1;
        }
    }
    Ok((a, b))
}

/// Locates the critical interval of `φ` on `s > 0` and the maximum value.
pub fn fiber_profile<S: Real, R: RayMap<S>>(p: &FiberProblem<S, R>, tol: &FiberTolerances<S>) -> Result<FiberProfile<S>> {
    let scale = p.kappa.abs();
    if !(scale > S::zero()) || !scale.is_finite() {
        return Err(Error::InvalidArgument("fiber quadratic coefficient must be nonzero".into()));
    }
    let r = Ratio { p, band: tol.dead_band * scale };
    let two = S::lit(2.0);

    let mut s_lo = tol.s_init;
    let mut halvings = 0;
    while r.sign(s_lo)? <= 0 {
        s_lo /= two;
        halvings += 1;
        if halvings > tol.max_doublings {
            return Err(Error::InvalidArgument(format!(
                "fiber derivative is not positive near s = 0 (tried down to {:e})",
                s_lo.as_f64()
            )));
        }
    }
    let cap = tol.s_init * two.powi(tol.max_doublings as i32);

    // first abscissa where g leaves the positive side
    let mut below = s_lo;
    let mut above = s_lo;
    loop {
        above *= two;
        if above > cap {
            return Err(Error::NoSignChange { s_cap: cap.as_f64() });
        }
        if r.sign(above)? <= 0 {
            break;
        }
        below = above;
    }
    let band = r.band;
    let upper = |s: S| Ok(r.g(s)? - band);
    let (_, crit_lo) = refine_boundary(
        (below, upper(below)?),
        (above, upper(above)?),
        tol.rel_tol,
        upper,
        |v| v > S::zero(),
    )?;

    // first abscissa where g is strictly negative
    let mut in_band = crit_lo;
    let mut neg = above;
    let mut capped = false;
    if r.sign(neg)? >= 0 {
        in_band = neg;
        loop {
            neg *= two;
            if neg > cap {
                capped = true;
                break;
            }
            if r.sign(neg)? < 0 {
                break;
            }
            in_band = neg;
        }
    }
    let crit_hi = if capped {
        cap
    } else {
        let lower = |s: S| Ok(r.g(s)? + band);
        refine_boundary((in_band, lower(in_band)?), (neg, lower(neg)?), tol.rel_tol, lower, |v| v >= S::zero())?
            .0
            .max(crit_lo)
    };
    let plateau = crit_hi - crit_lo > tol.plateau_rel * crit_lo;
    let s_star = (crit_lo + crit_hi) / two;
    let (value, _) = p.ray.eval(s_star)?;

    let profile = FiberProfile { s_lo, s_hi: if capped { cap } else { neg }, crit_lo, crit_hi, s_star, value, plateau };
    if tol.check_monotone {
        check_monotone_ratio(p, &profile, tol)?;
    }
    Ok(profile)
}

/// Scans `g = φ′/s` on a geometric grid spanning the bracket and fails with
/// the first pair of neighbours where it increases beyond the slack.
pub fn check_monotone_ratio<S: Real, R: RayMap<S>>(
    p: &FiberProblem<S, R>,
    profile: &FiberProfile<S>,
    tol: &FiberTolerances<S>,
) -> Result<()> {
    let r = Ratio { p, band: S::zero() };
    let lo = profile.s_lo.min(profile.crit_lo / S::lit(64.0));
    let hi = S::lit(2.0) * profile.crit_hi;
    let n = tol.scan_points.max(2);
    let step = (hi / lo).ln() / S::from_usize_lossy(n - 1);
    let slack = tol.ratio_slack * p.kappa.abs();
    let mut prev = (lo, r.g(lo)?);
    for i in 1..n {
        let s = lo * (step * S::from_usize_lossy(i)).exp();
        let g = r.g(s)?;
        if g > prev.1 + slack {
            return Err(Error::NonMonotoneRatio {
                s_a: prev.0.as_f64(),
                s_b: s.as_f64(),
                increase: (g - prev.1).as_f64(),
            });
        }
        prev = (s, g);
    }
    Ok(())
}

/// `φ(s)`.
pub fn fiber_value_at<S: Real, R: RayMap<S>>(p: &FiberProblem<S, R>, s: S) -> Result<S> {
    Ok(p.ray.eval(s)?.0)
}

/// Derivative of `m(e) = φ_e(s*(e))` along `v`, given the gradient of the
/// action at `s*·e`: `dm(e)[v] = s*⟨∇F(s*e), v⟩`.
///
/// Any normalization of `e` drops out because `φ′(s*) = 0`.
pub fn envelope_derivative<S: Real>(profile: &FiberProfile<S>, grad_at_star: &[S], v: &[S]) -> Result<S> {
    if profile.plateau {
        return Err(Error::Plateau);
    }
    if grad_at_star.len() != v.len() {
        return Err(Error::SpaceMismatch("gradient and direction lengths differ".into()));
    }
    Ok(profile.s_star * dot(grad_at_star, v))
}

/// Numerical shape check: `φ` rises on `(0, crit_lo)`, falls beyond
/// `crit_hi`, and no sampled value exceeds the reported maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeReport<S> {
    pub rising: bool,
    pub falling: bool,
    pub max_sampled: S,
    pub dominated: bool,
}

pub fn fiber_shape<S: Real, R: RayMap<S>>(p: &FiberProblem<S, R>, profile: &FiberProfile<S>, samples: usize) -> Result<ShapeReport<S>> {
    let n = samples.max(4);
    let slack = S::lit(1e-12) * profile.value.abs().max(S::one());
    let (mut rising, mut falling) = (true, true);
    let mut max_sampled = S::neg_infinity();
    let mut prev = p.ray.eval(profile.crit_lo / S::from_usize_lossy(n))?.0;
    for i in 2..=n {
        let s = profile.crit_lo * S::from_usize_lossy(i) / S::from_usize_lossy(n);
        let v = p.ray.eval(s)?.0;
        rising &= v + slack >= prev;
        max_sampled = max_sampled.max(v);
        prev = v;
    }
    for i in 1..=n {
        let s = profile.crit_hi * (S::one() + S::from_usize_lossy(i) / S::from_usize_lossy(n));
        let v = p.ray.eval(s)?.0;
        falling &= v <= prev + slack;
        max_sampled = max_sampled.max(v);
        prev = v;
    }
    Ok(ShapeReport { rising, falling, max_sampled, dominated: max_sampled <= profile.value + slack })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem<F: Fn(f64) -> Result<(f64, f64)> + Sync>(kappa: f64, f: F) -> FiberProblem<f64, F> {
        FiberProblem { kind: FiberKind::Direct, kappa, ray: f }
    }

    #[test]
    fn quartic_ray_matches_closed_form() {
        // φ(s) = s²/2 − c s⁴, maximum at s² = 1/(4c), value 1/(16c)
        let c = 3.0 / (128.0 * std::f64::consts::PI.powi(4));
        let p = problem(1.0, move |s: f64| Ok((s * s / 2.0 - c * s.powi(4), s - 4.0 * c * s.powi(3))));
        let prof = fiber_profile(&p, &FiberTolerances::default()).unwrap();
        let s2 = 32.0 * std::f64::consts::PI.powi(4) / 3.0;
        assert!((prof.s_star - s2.sqrt()).abs() < 1e-9 * s2.sqrt());
        assert!((prof.value - 8.0 * std::f64::consts::PI.powi(4) / 3.0).abs() < 1e-9);
        assert!(!prof.plateau);
        assert!(prof.crit_hi - prof.crit_lo < 1e-8 * prof.crit_lo);
    }

    #[test]
    fn monotone_ratio_failure_is_reported() {
        // g(s) = 1 − s² + 0.5·exp(−(s−0.5)²/0.001) bumps upward
        let p = problem(1.0, |s: f64| {
            let g = 1.0 - s * s + 0.5 * (-(s - 0.5).powi(2) / 0.001).exp();
            Ok((0.0, s * g))
        });
        match fiber_profile(&p, &FiberTolerances::default()) {
            Err(Error::NonMonotoneRatio { s_a, s_b, increase }) => {
                assert!(s_a < s_b && increase > 0.0);
            }
            other => panic!("expected NonMonotoneRatio, got {other:?}"),
        }
    }

    #[test]
    fn unbounded_ray_has_no_sign_change() {
        let p = problem(1.0, |s: f64| Ok((s * s / 2.0, s)));
        assert!(matches!(fiber_profile(&p, &FiberTolerances::default()), Err(Error::NoSignChange { .. })));
    }

    #[test]
    fn flat_ratio_is_a_plateau() {
        // r(s) = min(s, 1), φ(s) = ½s² − ∫₀ˢ σ r(σ) dσ
        let ray = |s: f64| {
            let r = s.min(1.0);
            let integral = if s <= 1.0 { s.powi(3) / 3.0 } else { 1.0 / 3.0 + (s * s - 1.0) / 2.0 };
            Ok((s * s / 2.0 - integral, s - s * r))
        };
        let p = problem(1.0, ray);
        let tol = FiberTolerances { max_doublings: 8, ..FiberTolerances::default() };
        let prof = fiber_profile(&p, &tol).unwrap();
        assert!(prof.plateau);
        assert!((prof.crit_lo - 1.0).abs() < 1e-9);
        assert_eq!(prof.crit_hi, 256.0);
        let grad = [1.0];
        assert_eq!(envelope_derivative(&prof, &grad, &grad), Err(Error::Plateau));
    }

    #[test]
    fn shape_of_a_hump() {
        let p = problem(1.0, |s: f64| Ok((s * s / 2.0 - s.powi(4) / 4.0, s - s.powi(3))));
        let prof = fiber_profile(&p, &FiberTolerances::default()).unwrap();
        let shape = fiber_shape(&p, &prof, 32).unwrap();
        assert!(shape.rising && shape.falling && shape.dominated);
        assert!((prof.value - 0.25).abs() < 1e-14);
    }
}

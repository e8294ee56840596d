//! Verification of refined candidates: ODE residual, conservation of the
//! first integral, minimal-period evidence, inf-max audits, and sampling
//! audits of the model hypotheses.

mod conditions;
mod period;

pub use conditions::{
    check_hamiltonian_conditions, check_potential_conditions, ConditionCheck, ConditionPlan, ConditionReport, Verdict, Witness,
};
pub use period::{active_frequencies, minimal_period_certificate, MinimalPeriodReport, PeriodTolerances, PeriodVerdict, SubperiodGap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action::{apply_j, DirectActionContext};
use crate::error::{Error, Result};
use crate::fiber::{FiberKind, FiberTolerances};
use crate::models::{HamiltonianModel, PotentialModel};
use crate::nehari::{Candidate, InfMaxProblem, RecoveredOrbit};
use crate::scalar::Real;
use crate::symfun::{h1_seminorm_sq, SpaceConfig, TrajectoryCoeffs};

/// Sup-norm residual on the grid with the scale it is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub sup: f64,
    /// Largest of the sup norms of the two sides of the equation.
    pub scale: f64,
    pub relative: f64,
}

impl Residual {
    fn new(sup: f64, scale: f64) -> Self {
        let relative = if scale > 0.0 { sup / scale } else { sup };
        Residual { sup, scale, relative }
    }
}

/// `sup_i |ẍ(t_i) + V′(x(t_i))|` with `ẍ` by spectral differentiation.
pub fn ode_residual<S: Real>(x: &TrajectoryCoeffs<S>, v: &PotentialModel<S>) -> Result<Residual> {
    let dim = x.space().dim();
    if v.dim() != dim {
        return Err(Error::SpaceMismatch("potential and trajectory dimensions differ".into()));
    }
    let xdd = x.second_derivative();
    let s = x.synthesize();
    let mut g = vec![S::zero(); dim];
    let (mut res, mut a, mut b) = (S::zero(), S::zero(), S::zero());
    for i in 0..s.len() {
        v.gradient(s.value(i), &mut g);
        for d in 0..dim {
            let acc = xdd[i * dim + d];
            res = res.max((acc + g[d]).abs());
            a = a.max(acc.abs());
            b = b.max(g[d].abs());
        }
    }
    Ok(Residual::new(res.as_f64(), a.max(b).as_f64()))
}

/// `sup_i |ẋ(t_i) − JH′(x(t_i))|` for a recovered orbit, `ẋ` by spectral
/// differentiation of `JΠū`.
pub fn first_order_residual<S: Real>(orbit: &RecoveredOrbit<S>, h: &HamiltonianModel<S>) -> Result<Residual> {
    let dim = orbit.dim();
    if h.dim() != dim {
        return Err(Error::SpaceMismatch("Hamiltonian and orbit dimensions differ".into()));
    }
    let s = orbit.oscillation.synthesize();
    let mut g = vec![S::zero(); dim];
    let mut jg = vec![S::zero(); dim];
    let (mut res, mut a, mut b) = (S::zero(), S::zero(), S::zero());
    for i in 0..orbit.len() {
        h.gradient(orbit.state(i), &mut g);
        apply_j(&g, &mut jg);
        for (&xd, &jd) in s.deriv(i).iter().zip(&jg) {
            res = res.max((xd - jd).abs());
            a = a.max(xd.abs());
            b = b.max(jd.abs());
        }
    }
    Ok(Residual::new(res.as_f64(), a.max(b).as_f64()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    /// `max_t |E(t) − E(0)|`.
    pub max_abs: f64,
    /// `max_abs / max(|E(0)|, sup kinetic part)`.
    pub relative: f64,
}

fn drift_of<S: Real>(energies: &[S], kinetic_sup: S) -> Drift {
    let Some(&e0) = energies.first() else {
        return Drift { max_abs: 0.0, relative: 0.0 };
    };
    let max_abs = energies.iter().fold(S::zero(), |m, &e| m.max((e - e0).abs()));
    let scale = e0.abs().max(kinetic_sup);
    let relative = if scale > S::zero() { max_abs / scale } else { max_abs };
    Drift { max_abs: max_abs.as_f64(), relative: relative.as_f64() }
}

/// Variation of `E = ½|ẋ|² + V(x)` along the grid.
pub fn energy_drift<S: Real>(x: &TrajectoryCoeffs<S>, v: &PotentialModel<S>) -> Drift {
    let s = x.synthesize();
    let mut kin_sup = S::zero();
    let energies: Vec<S> = (0..s.len())
        .map(|i| {
            let k = s.deriv(i).iter().map(|&d| d * d).sum::<S>() / S::lit(2.0);
            kin_sup = kin_sup.max(k);
            k + v.value(s.value(i))
        })
        .collect();
    drift_of(&energies, kin_sup)
}

/// Variation of `H(x(t))` along a recovered orbit.
pub fn hamiltonian_drift<S: Real>(orbit: &RecoveredOrbit<S>, h: &HamiltonianModel<S>) -> Drift {
    let energies: Vec<S> = (0..orbit.len()).map(|i| h.value(orbit.state(i))).collect();
    let sup = energies.iter().fold(S::zero(), |m, e| m.max(e.abs()));
    drift_of(&energies, sup)
}

/// Fiber maximum along the `k`-fold iterate `x̄(kt)` against the critical
/// value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompressionMargin {
    pub k: usize,
    pub fiber_max: f64,
    /// `fiber_max − c`.
    pub margin: f64,
    /// `fiber_max / c`.
    pub ratio: f64,
}

/// For every `k` in `ks`, compares the fiber maximum along `x̄(kt)` with `c`.
/// A minimizer of `m` cannot be a `k`-fold iterate, so every margin should
/// be positive. `make` builds the functional on the compressed space.
pub fn compression_margins<S: Real, P: InfMaxProblem<S>>(
    x: &TrajectoryCoeffs<S>,
    c: S,
    ks: impl IntoIterator<Item = usize>,
    make: impl Fn(&SpaceConfig<S>) -> Result<P>,
) -> Result<Vec<CompressionMargin>> {
    let mut out = Vec::new();
    for k in ks {
        let y = x.compress(k)?;
        let p = make(y.space())?;
        let prof = p.profile(y.data(), &FiberTolerances::fast())?;
        out.push(CompressionMargin {
            k,
            fiber_max: prof.value.as_f64(),
            margin: (prof.value - c).as_f64(),
            ratio: (prof.value / c).as_f64(),
        });
    }
    Ok(out)
}

/// Relative gap between `ψ(λx̄)` and `∫(1/2k²)|y′|² − ∫V(y)` with
/// `y(t) = λx̄(kt)`, the two sides of the rescaling identity; they agree
/// by a change of variables, so the gap measures the quadrature stack.
pub fn change_of_variables_gap<S: Real>(ctx: &DirectActionContext<S>, x: &TrajectoryCoeffs<S>, k: usize, lambda: S) -> Result<f64> {
    let lhs = ctx.action(x.scaled(lambda).data())?;
    let y = x.compress(k)?.scaled(lambda);
    let cctx = DirectActionContext::new(y.space().clone(), ctx.potential().clone())?;
    let kk = S::from_usize_lossy(k * k);
    let rhs = h1_seminorm_sq(&y) / (S::lit(2.0) * kk) - cctx.potential_integral(y.data())?;
    let scale = lhs.abs().max(rhs.abs()).max(S::min_positive_value());
    Ok(((lhs - rhs).abs() / scale).as_f64())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub rays_tested: usize,
    /// `min (m(e) − c)` over the audited rays.
    pub min_margin: f64,
    /// `min_margin / |c|`.
    pub min_margin_rel: f64,
    /// Index of the ray attaining the minimum.
    pub worst_ray: Option<usize>,
    /// Fiber maximum along the candidate's own ray.
    pub own_ray_max: f64,
    /// `|own_ray_max − c| / |c|`.
    pub own_ray_gap: f64,
    /// Rays whose fiber ratio failed the monotonicity scan.
    pub non_monotone_rays: usize,
    /// Rays along which the functional stays positive up to the cap.
    pub unbounded_rays: usize,
}

/// Draws `n_rays` admissible random directions (ray `i` from seed
/// `seed + i`) and compares each fiber maximum with the candidate's value.
pub fn infmax_audit<S: Real, P: InfMaxProblem<S>>(p: &P, cand: &Candidate<S>, n_rays: usize, seed: u64) -> Result<AuditReport> {
    let c = cand.value;
    let tol = FiberTolerances::default();
    let own = p.profile(cand.point.data(), &tol)?;
    let n = cand.point.data().len();
    let results: Vec<Result<Option<S>>> = (0..n_rays)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let e = loop {
                let e: Vec<S> = (0..n).map(|_| S::lit(rng.sample::<f64, _>(StandardNormal))).collect();
                if p.admissible(&e) {
                    break e;
                }
            };
            match p.profile(&e, &tol) {
                Ok(prof) => Ok(Some(prof.value)),
                Err(Error::NoSignChange { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut report = AuditReport {
        rays_tested: n_rays,
        min_margin: f64::INFINITY,
        min_margin_rel: f64::INFINITY,
        worst_ray: None,
        own_ray_max: own.value.as_f64(),
        own_ray_gap: ((own.value - c).abs() / c.abs()).as_f64(),
        non_monotone_rays: 0,
        unbounded_rays: 0,
    };
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(Some(v)) => {
                let m = (v - c).as_f64();
                if m < report.min_margin {
                    report.min_margin = m;
                    report.min_margin_rel = m / c.abs().as_f64();
                    report.worst_ray = Some(i);
                }
            }
            Ok(None) => report.unbounded_rays += 1,
            Err(Error::NonMonotoneRatio { .. }) => report.non_monotone_rays += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyTolerances {
    /// Bound on the relative ODE residual.
    pub residual: f64,
    /// Bound on the relative drift of the first integral.
    pub drift: f64,
    /// Lower bound on the relative audit margin.
    pub audit_margin: f64,
    pub own_ray: f64,
    /// Bound on the relative change of `c` under a doubled mode budget.
    pub truncation: f64,
    pub audit_rays: usize,
    pub audit_seed: u64,
    /// Compression factors `2..=max_compression` are tested.
    pub max_compression: usize,
    pub period: PeriodTolerances,
}

impl Default for CertifyTolerances {
    fn default() -> Self {
        CertifyTolerances {
            residual: 1e-6,
            drift: 1e-6,
            audit_margin: -1e-5,
            own_ray: 1e-8,
            truncation: 1e-4,
            audit_rays: 64,
            audit_seed: 0,
            max_compression: 8,
            period: PeriodTolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub formulation: FiberKind,
    pub period: f64,
    /// Action at the refined candidate, the estimate of `c_T`.
    pub value: f64,
    pub refined: bool,
    pub newton_residual: f64,
    pub ode_residual: Residual,
    pub energy_drift: Option<Drift>,
    pub minimal_period: MinimalPeriodReport,
    pub compression: Vec<CompressionMargin>,
    pub infmax_audit: Option<AuditReport>,
    pub conditions: Option<ConditionReport>,
    pub truncation_agreement: Option<f64>,
    /// Why the dual-to-orbit recovery was rejected, if it was.
    pub recovery_error: Option<String>,
    pub certified: bool,
    /// Human-readable reasons for a refusal.
    pub failures: Vec<String>,
}

impl Certificate {
    /// Recomputes `certified` and `failures` from the sub-checks.
    pub fn evaluate(&mut self, tol: &CertifyTolerances) {
        let mut f = Vec::new();
        if let Some(e) = &self.recovery_error {
            f.push(e.clone());
        }
        if !self.refined {
            f.push(format!("candidate not refined (gradient norm {:e})", self.newton_residual));
        }
        if !(self.ode_residual.relative < tol.residual) {
            f.push(format!("relative ODE residual {:e} ≥ {:e}", self.ode_residual.relative, tol.residual));
        }
        if let Some(d) = &self.energy_drift {
            if !(d.relative < tol.drift) {
                f.push(format!("relative energy drift {:e} ≥ {:e}", d.relative, tol.drift));
            }
        }
        match self.minimal_period.verdict {
            PeriodVerdict::Minimal => {}
            PeriodVerdict::Subharmonic => f.push(format!(
                "period not minimal: active-frequency gcd {}, repeats after {}",
                self.minimal_period.active_frequency_gcd, self.minimal_period.certified_period
            )),
            PeriodVerdict::Indeterminate => f.push("minimal period indeterminate: active set depends on the mass threshold".into()),
        }
        if let Some(m) = self.compression.iter().find(|m| !(m.margin > 0.0)) {
            f.push(format!("compressed iterate k = {} does not exceed the critical value (margin {:e})", m.k, m.margin));
        }
        match &self.infmax_audit {
            Some(a) => {
                if !(a.min_margin_rel > tol.audit_margin) {
                    f.push(format!("inf-max audit: ray {:?} beats the candidate by {:e} (relative)", a.worst_ray, -a.min_margin_rel));
                }
                if !(a.own_ray_gap < tol.own_ray) {
                    f.push(format!("own-ray fiber maximum differs from the value by {:e}", a.own_ray_gap));
                }
            }
            None => f.push("inf-max audit not run".into()),
        }
        if let Some(t) = self.truncation_agreement {
            if !(t < tol.truncation) {
                f.push(format!("truncation disagreement {t:e} ≥ {:e}", tol.truncation));
            }
        }
        self.certified = f.is_empty();
        self.failures = f;
    }
}

/// Relative change `|a − b| / max(|a|, |b|)`.
pub fn relative_change<S: Real>(a: S, b: S) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale > S::zero() {
        ((a - b).abs() / scale).as_f64()
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{builtin_potential, ModelSpec};
    use crate::symfun::{make_space, SymmetryClass};

    fn quartic(t: f64, modes: usize) -> DirectActionContext<f64> {
        let sp = make_space(t, 1, SymmetryClass::E1, modes).unwrap();
        DirectActionContext::new(sp, builtin_potential(&ModelSpec::new("power").with("beta", 4.0), 1).unwrap()).unwrap()
    }

    #[test]
    fn zero_orbit_has_no_drift() {
        let ctx = quartic(1.0, 4);
        let d = energy_drift(&ctx.space().zeros(), ctx.potential());
        assert_eq!(d.max_abs, 0.0);
    }

    #[test]
    fn change_of_variables_holds_for_arbitrary_trajectories() {
        let ctx = quartic(1.0, 4);
        let x = TrajectoryCoeffs::new(ctx.space(), vec![2.0, -0.3, 0.1, 0.02]).unwrap();
        for k in 2..=5 {
            let gap = change_of_variables_gap(&ctx, &x, k, 1.7).unwrap();
            assert!(gap < 1e-12, "k = {k}: {gap:e}");
        }
    }

    #[test]
    fn certificate_lists_every_failure() {
        let sp = make_space(1.0, 1, SymmetryClass::E1, 2).unwrap();
        let x = TrajectoryCoeffs::unit(&sp, 1, 0);
        let mut c = Certificate {
            formulation: FiberKind::Direct,
            period: 1.0,
            value: 1.0,
            refined: true,
            newton_residual: 0.0,
            ode_residual: Residual::new(0.0, 1.0),
            energy_drift: None,
            minimal_period: minimal_period_certificate(&x, &PeriodTolerances::default()).unwrap(),
            compression: vec![],
            infmax_audit: None,
            conditions: None,
            truncation_agreement: Some(1.0),
            recovery_error: None,
            certified: true,
            failures: vec![],
        };
        c.evaluate(&CertifyTolerances::default());
        assert!(!c.certified);
        assert_eq!(c.failures.len(), 3, "{:?}", c.failures);
    }
}

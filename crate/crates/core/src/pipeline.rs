//! End-to-end solves: search, refinement, recovery, and certification,
//! including the re-solve at a doubled mode budget.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::action::{DirectActionContext, DualActionContext};
use crate::certify::{
    check_hamiltonian_conditions, check_potential_conditions, compression_margins, energy_drift, first_order_residual,
    hamiltonian_drift, infmax_audit, minimal_period_certificate, ode_residual, relative_change, Certificate, CertifyTolerances, Residual,
    ConditionPlan,
};
use crate::error::Result;
use crate::fiber::FiberKind;
use crate::models::{FenchelPair, PotentialModel};
use crate::nehari::{candidate_from_point, minimize_sphere, newton_refine, recover_orbit, Candidate, RecoveredOrbit, SolverConfig};
use crate::scalar::Real;
use crate::symfun::{make_space, SpaceConfig, SymmetryClass, TrajectoryCoeffs};

/// Default mode budgets.
pub const DIRECT_MODES: usize = 8;
pub const DUAL_MODES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineOptions {
    pub solver: SolverConfig,
    pub certify: CertifyTolerances,
    pub conditions: ConditionPlan,
    /// Re-solve at twice the mode budget and report the relative change.
    pub check_truncation: bool,
    /// Run the hypothesis audits and attach them to the certificate.
    pub check_conditions: bool,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            solver: SolverConfig::default(),
            certify: CertifyTolerances::default(),
            conditions: ConditionPlan::default(),
            check_truncation: true,
            check_conditions: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub search: f64,
    pub refine: f64,
    pub certify: f64,
    pub truncation: f64,
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

#[derive(Debug, Clone)]
pub struct DirectOutcome<S: Real> {
    pub candidate: Candidate<S>,
    pub certificate: Certificate,
    pub timings: Timings,
}

#[derive(Debug, Clone)]
pub struct DualOutcome<S: Real> {
    pub candidate: Candidate<S>,
    pub orbit: Option<RecoveredOrbit<S>>,
    pub certificate: Certificate,
    pub timings: Timings,
}

/// Certificate for a refined direct candidate, without the truncation check.
pub fn certify_direct<S: Real>(ctx: &DirectActionContext<S>, cand: &Candidate<S>, opts: &PipelineOptions) -> Result<Certificate> {
    let tol = &opts.certify;
    let v = ctx.potential();
    let ode = ode_residual(&cand.point, v)?;
    let drift = energy_drift(&cand.point, v);
    let period = minimal_period_certificate(&cand.point, &tol.period)?;
    let c = cand.value;
    let compression = compression_margins(&cand.point, c, 2..=tol.max_compression, |sp: &SpaceConfig<S>| {
        DirectActionContext::new(sp.clone(), v.clone())
    })?;
    let audit = infmax_audit(ctx, cand, tol.audit_rays, tol.audit_seed)?;
    let conditions = opts.check_conditions.then(|| check_potential_conditions(v, &opts.conditions));
    let mut cert = Certificate {
        formulation: FiberKind::Direct,
        period: ctx.space().period().as_f64(),
        value: c.as_f64(),
        refined: cand.refined,
        newton_residual: cand.residual.as_f64(),
        ode_residual: ode,
        energy_drift: Some(drift),
        minimal_period: period,
        compression,
        infmax_audit: Some(audit),
        conditions,
        truncation_agreement: None,
        recovery_error: None,
        certified: false,
        failures: Vec::new(),
    };
    cert.evaluate(tol);
    Ok(cert)
}

/// Refines the re-expansion of `cand` in `fine` and returns the refined
/// candidate there.
fn refine_in<S: Real, P: crate::nehari::InfMaxProblem<S>>(fine: &P, cand: &Candidate<S>, cfg: &SolverConfig) -> Result<Candidate<S>> {
    let warm = cand.point.reexpand(fine.space())?;
    let start = candidate_from_point(fine, &warm)?;
    newton_refine(fine, &start, cfg)
}

/// Solves `ẍ + V′(x) = 0` with minimal period `period` in the symmetric
/// space `class` and certifies the result.
pub fn solve_direct<S: Real>(
    potential: &PotentialModel<S>,
    period: S,
    class: SymmetryClass,
    modes: usize,
    opts: &PipelineOptions,
) -> Result<DirectOutcome<S>> {
    let space = make_space(period, potential.dim(), class, modes)?;
    let ctx = DirectActionContext::new(space, potential.clone())?;
    let t0 = Instant::now();
    let found = minimize_sphere(&ctx, &opts.solver)?;
    let t1 = Instant::now();
    let cand = newton_refine(&ctx, &found, &opts.solver)?;
    let t2 = Instant::now();
    let mut cert = certify_direct(&ctx, &cand, opts)?;
    let t3 = Instant::now();
    if opts.check_truncation {
        let fine = DirectActionContext::new(ctx.space().with_modes(2 * modes)?, potential.clone())?;
        let agreement = match refine_in(&fine, &cand, &opts.solver) {
            Ok(f) if f.refined => relative_change(cand.value, f.value),
            _ => f64::INFINITY,
        };
        cert.truncation_agreement = Some(agreement);
        cert.evaluate(&opts.certify);
    }
    let timings = Timings {
        search: secs(t1 - t0),
        refine: secs(t2 - t1),
        certify: secs(t3 - t2),
        truncation: secs(t3.elapsed()),
    };
    Ok(DirectOutcome { candidate: cand, certificate: cert, timings })
}

/// Certificate for a refined dual candidate; `None` orbit when recovery is
/// rejected (the certificate then carries the reason).
pub fn certify_dual<S: Real>(
    ctx: &DualActionContext<S>,
    cand: &Candidate<S>,
    opts: &PipelineOptions,
) -> Result<(Certificate, Option<RecoveredOrbit<S>>)> {
    let tol = &opts.certify;
    let pair = ctx.pair();
    let h = pair.base();
    let period = minimal_period_certificate(&cand.point, &tol.period)?;
    let c = cand.value;
    let compression = compression_margins(&cand.point, c, 2..=tol.max_compression, |sp: &SpaceConfig<S>| {
        DualActionContext::new(sp.clone(), pair.clone())
    })?;
    let audit = infmax_audit(ctx, cand, tol.audit_rays, tol.audit_seed)?;
    let conditions = opts.check_conditions.then(|| check_hamiltonian_conditions(pair, &opts.conditions));
    let (orbit, ode, drift, recovery_error) = match recover_orbit(ctx, &cand.point) {
        Ok(o) => {
            let ode = first_order_residual(&o, h)?;
            let drift = hamiltonian_drift(&o, h);
            (Some(o), ode, Some(drift), None)
        }
        Err(e) => (None, Residual { sup: f64::INFINITY, scale: 0.0, relative: f64::INFINITY }, None, Some(e.to_string())),
    };
    let mut cert = Certificate {
        formulation: FiberKind::Dual,
        period: ctx.space().period().as_f64(),
        value: c.as_f64(),
        refined: cand.refined,
        newton_residual: cand.residual.as_f64(),
        ode_residual: ode,
        energy_drift: drift,
        minimal_period: period,
        compression,
        infmax_audit: Some(audit),
        conditions,
        truncation_agreement: None,
        recovery_error,
        certified: false,
        failures: Vec::new(),
    };
    cert.evaluate(tol);
    Ok((cert, orbit))
}

/// Solves `ż = JH′(z)` with minimal period `period` through the dual action.
pub fn solve_dual<S: Real>(pair: &FenchelPair<S>, period: S, modes: usize, opts: &PipelineOptions) -> Result<DualOutcome<S>> {
    let space = make_space(period, pair.dim(), SymmetryClass::FullMeanZero, modes)?;
    let ctx = DualActionContext::new(space, pair.clone())?;
    let t0 = Instant::now();
    let found = minimize_sphere(&ctx, &opts.solver)?;
    let t1 = Instant::now();
    let cand = newton_refine(&ctx, &found, &opts.solver)?;
    let t2 = Instant::now();
    let (mut cert, orbit) = certify_dual(&ctx, &cand, opts)?;
    let t3 = Instant::now();
    if opts.check_truncation {
        let fine = DualActionContext::new(ctx.space().with_modes(2 * modes)?, pair.clone())?;
        let agreement = match refine_in(&fine, &cand, &opts.solver) {
            Ok(f) if f.refined => relative_change(cand.value, f.value),
            _ => f64::INFINITY,
        };
        cert.truncation_agreement = Some(agreement);
        cert.evaluate(&opts.certify);
    }
    let timings = Timings {
        search: secs(t1 - t0),
        refine: secs(t2 - t1),
        certify: secs(t3 - t2),
        truncation: secs(t3.elapsed()),
    };
    Ok(DualOutcome { candidate: cand, orbit, certificate: cert, timings })
}

/// Certifies externally supplied direct coefficients as they are.
pub fn certify_direct_point<S: Real>(
    potential: &PotentialModel<S>,
    point: &TrajectoryCoeffs<S>,
    opts: &PipelineOptions,
) -> Result<(Candidate<S>, Certificate)> {
    let ctx = DirectActionContext::new(point.space().clone(), potential.clone())?;
    let cand = candidate_from_point(&ctx, point)?;
    let cert = certify_direct(&ctx, &cand, opts)?;
    Ok((cand, cert))
}

/// Certifies externally supplied dual coefficients as they are.
pub fn certify_dual_point<S: Real>(
    pair: &FenchelPair<S>,
    point: &TrajectoryCoeffs<S>,
    opts: &PipelineOptions,
) -> Result<(Candidate<S>, Certificate, Option<RecoveredOrbit<S>>)> {
    let ctx = DualActionContext::new(point.space().clone(), pair.clone())?;
    let cand = candidate_from_point(&ctx, point)?;
    let (cert, orbit) = certify_dual(&ctx, &cand, opts)?;
    Ok((cand, cert, orbit))
}

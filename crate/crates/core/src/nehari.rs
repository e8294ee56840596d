//! Minimization of `m(e) = max_{s≥0} F(se)` over normalized directions,
//! Newton refinement of the minimizer, and orbit recovery for the dual
//! formulation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::action::{apply_j, DirectActionContext, DualActionContext, DEFAULT_CONE_TOL};
use crate::error::{Error, Result};
use crate::fiber::{fiber_profile, FiberKind, FiberProfile, FiberTolerances};
use crate::linalg::{lm_step, solve_in_place};
use crate::scalar::{dot, norm2, Real};
use crate::symfun::{lalpha_norm, pi_operator, SpaceConfig, TrajectoryCoeffs};

/// A functional with the fiber structure needed by the inf-max search.
pub trait InfMaxProblem<S: Real>: Sync {
    fn space(&self) -> &SpaceConfig<S>;
    fn kind(&self) -> FiberKind;
    /// Norm defining the search sphere.
    fn sphere_norm(&self, e: &[S]) -> Result<S>;
    /// Inner product used for steepest descent.
    fn metric_dot(&self, a: &[S], b: &[S]) -> S;
    /// Maps a coefficient gradient to the metric gradient.
    fn precondition(&self, g: &[S]) -> Vec<S>;
    /// Whether `e` is an allowed search direction.
    fn admissible(&self, e: &[S]) -> bool;
    fn profile(&self, e: &[S], tol: &FiberTolerances<S>) -> Result<FiberProfile<S>>;
    fn action(&self, x: &[S]) -> Result<S>;
    fn gradient(&self, x: &[S]) -> Result<Vec<S>>;
    /// Analytic Hessian when available.
    fn hessian(&self, _x: &[S]) -> Result<Option<Vec<S>>> {
        Ok(None)
    }
    /// Residual tolerance for [`newton_refine`] when none is configured.
    fn default_newton_tol(&self) -> S;
}

impl<S: Real> InfMaxProblem<S> for DirectActionContext<S> {
    fn space(&self) -> &SpaceConfig<S> {
        DirectActionContext::space(self)
    }
    fn kind(&self) -> FiberKind {
        FiberKind::Direct
    }
    fn sphere_norm(&self, e: &[S]) -> Result<S> {
        Ok(self.metric_dot(e, e).sqrt())
    }
    fn metric_dot(&self, a: &[S], b: &[S]) -> S {
        a.iter().zip(b).zip(self.kinetic_weights()).map(|((&x, &y), &k)| k * x * y).sum()
    }
    fn precondition(&self, g: &[S]) -> Vec<S> {
        g.iter().zip(self.kinetic_weights()).map(|(&v, &k)| v / k).collect()
    }
    fn admissible(&self, e: &[S]) -> bool {
        e.iter().any(|v| *v != S::zero())
    }
    fn profile(&self, e: &[S], tol: &FiberTolerances<S>) -> Result<FiberProfile<S>> {
        fiber_profile(&self.fiber(e)?, tol)
    }
    fn action(&self, x: &[S]) -> Result<S> {
        DirectActionContext::action(self, x)
    }
    fn gradient(&self, x: &[S]) -> Result<Vec<S>> {
        DirectActionContext::gradient(self, x)
    }
    fn hessian(&self, x: &[S]) -> Result<Option<Vec<S>>> {
        DirectActionContext::hessian(self, x).map(Some)
    }
    fn default_newton_tol(&self) -> S {
        S::lit(1e-10)
    }
}

impl<S: Real> InfMaxProblem<S> for DualActionContext<S> {
    fn space(&self) -> &SpaceConfig<S> {
        DualActionContext::space(self)
    }
    fn kind(&self) -> FiberKind {
        FiberKind::Dual
    }
    fn sphere_norm(&self, e: &[S]) -> Result<S> {
        let u = TrajectoryCoeffs::new(DualActionContext::space(self), e.to_vec())?;
        lalpha_norm(&u, self.alpha())
    }
    fn metric_dot(&self, a: &[S], b: &[S]) -> S {
        dot(a, b)
    }
    fn precondition(&self, g: &[S]) -> Vec<S> {
        g.to_vec()
    }
    fn admissible(&self, e: &[S]) -> bool {
        let Ok(n) = self.sphere_norm(e) else { return false };
        n > S::zero() && self.quadratic(e, e) < -S::lit(DEFAULT_CONE_TOL) * n * n
    }
    fn profile(&self, e: &[S], tol: &FiberTolerances<S>) -> Result<FiberProfile<S>> {
        fiber_profile(&self.fiber(e)?, tol)
    }
    fn action(&self, x: &[S]) -> Result<S> {
        DualActionContext::action(self, x)
    }
    fn gradient(&self, x: &[S]) -> Result<Vec<S>> {
        DualActionContext::gradient(self, x)
    }
    fn default_newton_tol(&self) -> S {
        S::lit(1e-8)
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub restarts: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Stop when `‖∇m‖·‖e‖ / |m|` drops below this.
    pub grad_tol: f64,
    /// Initial angular step of the line search.
    pub step_init: f64,
    pub armijo: f64,
    pub shrink: f64,
    pub grow: f64,
    pub min_step: f64,
    /// Absolute gradient-norm target for Newton; `None` uses the
    /// formulation default.
    pub newton_tol: Option<f64>,
    pub newton_max_iters: usize,
    /// Number of consecutive Newton iterations without progress before
    /// refinement is abandoned.
    pub newton_patience: usize,
    /// Doublings of the first trial abscissa before a ray is declared
    /// unbounded.
    pub fiber_doublings: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            restarts: 8,
            seed: 0,
            max_iters: 3000,
            grad_tol: 1e-6,
            step_init: 0.1,
            armijo: 1e-4,
            shrink: 0.5,
            grow: 2.0,
            min_step: 1e-13,
            newton_tol: None,
            newton_max_iters: 60,
            newton_patience: 5,
            fiber_doublings: 60,
        }
    }
}

impl SolverConfig {
    fn fiber_tol<S: Real>(&self) -> FiberTolerances<S> {
        FiberTolerances { max_doublings: self.fiber_doublings, ..FiberTolerances::fast() }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.restarts > 0
            && self.grad_tol > 0.0
            && self.step_init > 0.0
            && self.armijo > 0.0
            && self.armijo < 1.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.grow >= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument("solver configuration out of range".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SearchStatus {
    Converged,
    /// The line search stalled above `grad_tol`; the last iterate is kept.
    NoDescent,
    MaxIters,
}

/// Outcome of the inf-max search, possibly refined.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate<S: Real> {
    /// Critical point estimate `s*·e`.
    pub point: TrajectoryCoeffs<S>,
    /// Sphere-normalized search direction.
    pub direction: TrajectoryCoeffs<S>,
    pub profile: FiberProfile<S>,
    /// `m(e)` at the final direction of the search.
    pub inf_max: S,
    /// Action at `point`.
    pub value: S,
    /// Relative envelope gradient at the end of the search.
    pub search_grad: S,
    pub status: SearchStatus,
    pub iterations: usize,
    pub restart: usize,
    /// `m` at the end of every restart that produced a bounded fiber.
    pub restart_values: Vec<Option<S>>,
    pub refined: bool,
    /// Euclidean norm of the action gradient at `point`.
    pub residual: S,
    pub newton_iterations: usize,
    pub diagnostic: Option<String>,
}

struct RestartOutcome<S: Real> {
    direction: Vec<S>,
    profile: FiberProfile<S>,
    grad: S,
    status: SearchStatus,
    iterations: usize,
}

fn normalize<S: Real, P: InfMaxProblem<S> + ?Sized>(p: &P, e: &mut [S]) -> Result<()> {
    let n = p.sphere_norm(e)?;
    if !(n > S::zero()) || !n.is_finite() {
        return Err(Error::InvalidArgument("cannot normalize direction".into()));
    }
    e.iter_mut().for_each(|v| *v /= n);
    Ok(())
}

fn random_direction<S: Real, P: InfMaxProblem<S> + ?Sized>(p: &P, rng: &mut ChaCha8Rng) -> Result<Vec<S>> {
    let n = p.space().coeff_len();
    for _ in 0..1000 {
        let mut e: Vec<S> = (0..n).map(|_| S::lit(rng.sample::<f64, _>(StandardNormal))).collect();
        if p.admissible(&e) {
            normalize(p, &mut e)?;
            return Ok(e);
        }
    }
    Err(Error::InvalidArgument("could not sample an admissible direction".into()))
}

/// Metric gradient of `m` at `e` and its metric norm.
fn envelope_gradient<S: Real, P: InfMaxProblem<S> + ?Sized>(
    p: &P,
    e: &[S],
    prof: &FiberProfile<S>,
    tol: &FiberTolerances<S>,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<S>, S)> {
    let en2 = p.metric_dot(e, e);
    if !prof.plateau {
        let x: Vec<S> = e.iter().map(|&v| v * prof.s_star).collect();
        let g: Vec<S> = p.gradient(&x)?.into_iter().map(|v| v * prof.s_star).collect();
        let mut riem = p.precondition(&g);
        let along = p.metric_dot(&riem, e) / en2;
        riem.iter_mut().zip(e).for_each(|(r, &v)| *r -= along * v);
        let norm = p.metric_dot(&riem, &riem).max(S::zero()).sqrt();
        return Ok((riem, norm));
    }
    // plateau: finite differences of m along random orthogonal tangents
    let n = e.len();
    let count = 10.min(n.saturating_sub(1));
    let h = S::lit(1e-5);
    let mut basis: Vec<Vec<S>> = vec![e.to_vec()];
    let mut riem = vec![S::zero(); n];
    let mut norm2_acc = S::zero();
    while basis.len() <= count {
        let mut t: Vec<S> = (0..n).map(|_| S::lit(rng.sample::<f64, _>(StandardNormal))).collect();
        for b in &basis {
            let c = p.metric_dot(&t, b) / p.metric_dot(b, b);
            t.iter_mut().zip(b).for_each(|(x, &y)| *x -= c * y);
        }
        let tn = p.metric_dot(&t, &t).sqrt();
        if !(tn > S::zero()) {
            continue;
        }
        let scale = en2.sqrt() / tn;
        t.iter_mut().for_each(|x| *x *= scale);
        let shifted = |sign: S| -> Result<S> {
            let mut q: Vec<S> = e.iter().zip(&t).map(|(&a, &b)| a + sign * h * b).collect();
            normalize(p, &mut q)?;
            Ok(p.profile(&q, tol)?.value)
        };
        let d = (shifted(S::one())? - shifted(-S::one())?) / (S::lit(2.0) * h);
        riem.iter_mut().zip(&t).for_each(|(r, &v)| *r += d * v / en2);
        norm2_acc += d * d / en2;
        basis.push(t);
    }
    Ok((riem, norm2_acc.sqrt()))
}

fn search_from<S: Real, P: InfMaxProblem<S> + ?Sized>(p: &P, cfg: &SolverConfig, rng: &mut ChaCha8Rng) -> Result<RestartOutcome<S>> {
    let tol = cfg.fiber_tol::<S>();
    let mut e = random_direction(p, rng)?;
    let mut prof = p.profile(&e, &tol)?;
    let mut theta = S::lit(cfg.step_init);
    let mut status = SearchStatus::MaxIters;
    let mut grad = S::infinity();
    let mut iterations = 0;
    for it in 0..cfg.max_iters {
        iterations = it;
        let (riem, gnorm) = envelope_gradient(p, &e, &prof, &tol, rng)?;
        let en = p.metric_dot(&e, &e).sqrt();
        grad = gnorm * en / prof.value.abs();
        if grad < S::lit(cfg.grad_tol) {
            status = SearchStatus::Converged;
            break;
        }
        let mut accepted = false;
        while theta > S::lit(cfg.min_step) {
            let mut trial: Vec<S> = e.iter().zip(&riem).map(|(&a, &r)| a - theta * en * r / gnorm).collect();
            if p.admissible(&trial) && normalize(p, &mut trial).is_ok() {
                let warm = FiberTolerances { s_init: prof.s_star * S::lit(0.75), ..tol };
                if let Ok(tp) = p.profile(&trial, &warm) {
                    if tp.value <= prof.value - S::lit(cfg.armijo) * theta * en * gnorm {
                        e = trial;
                        prof = tp;
                        accepted = true;
                        break;
                    }
                }
            }
            theta *= S::lit(cfg.shrink);
        }
        if !accepted {
            status = SearchStatus::NoDescent;
            break;
        }
        theta = (theta * S::lit(cfg.grow)).min(S::one());
    }
    Ok(RestartOutcome { direction: e, profile: prof, grad, status, iterations })
}

/// Minimizes `m` over the sphere from `cfg.restarts` random starts in
/// parallel. Restart `i` is seeded with `cfg.seed + i`; the best final value
/// wins, ties going to the lowest index.
pub fn minimize_sphere<S: Real, P: InfMaxProblem<S> + ?Sized>(p: &P, cfg: &SolverConfig) -> Result<Candidate<S>> {
    cfg.validate()?;
    let outcomes: Vec<Result<RestartOutcome<S>>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(i as u64));
            search_from(p, cfg, &mut rng)
        })
        .collect();
    let restart_values: Vec<Option<S>> = outcomes.iter().map(|o| o.as_ref().ok().map(|r| r.profile.value)).collect();
    let mut best: Option<(usize, &RestartOutcome<S>)> = None;
    for (i, o) in outcomes.iter().enumerate() {
        if let Ok(r) = o {
            if best.is_none_or(|(_, b)| r.profile.value < b.profile.value) {
                best = Some((i, r));
            }
        }
    }
    let Some((restart, r)) = best else {
        if let Some(Err(e)) = outcomes.iter().find(|o| !matches!(o, Err(Error::NoSignChange { .. }))) {
            return Err(e.clone());
        }
        return Err(Error::AllFibersUnbounded);
    };
    let space = p.space();
    let direction = TrajectoryCoeffs::new(space, r.direction.clone())?;
    let point = direction.scaled(r.profile.s_star);
    let value = p.action(point.data())?;
    let residual = norm2(&p.gradient(point.data())?);
    Ok(Candidate {
        point,
        direction,
        profile: r.profile,
        inf_max: r.profile.value,
        value,
        search_grad: r.grad,
        status: r.status,
        iterations: r.iterations,
        restart,
        restart_values,
        refined: false,
        residual,
        newton_iterations: 0,
        diagnostic: None,
    })
}

/// Wraps an externally supplied point as a candidate: its own ray is
/// profiled and the residual measured, but no search is performed.
pub fn candidate_from_point<S: Real, P: InfMaxProblem<S> + ?Sized>(p: &P, point: &TrajectoryCoeffs<S>) -> Result<Candidate<S>> {
    if point.space() != p.space() {
        return Err(Error::SpaceMismatch("point belongs to another space".into()));
    }
    if !p.admissible(point.data()) {
        return Err(Error::InvalidArgument("point is not an admissible direction".into()));
    }
    let mut e = point.data().to_vec();
    normalize(p, &mut e)?;
    let profile = p.profile(&e, &FiberTolerances::fast())?;
    let residual = norm2(&p.gradient(point.data())?);
    Ok(Candidate {
        point: point.clone(),
        direction: point.with_data(e),
        profile,
        inf_max: profile.value,
        value: p.action(point.data())?,
        search_grad: S::nan(),
        status: SearchStatus::Converged,
        iterations: 0,
        restart: 0,
        restart_values: Vec::new(),
        refined: residual <= p.default_newton_tol(),
        residual,
        newton_iterations: 0,
        diagnostic: None,
    })
}

/// Symmetrized central-difference Hessian of the gradient.
pub fn fd_hessian_of<S: Real, P: InfMaxProblem<S> + ?Sized>(p: &P, x: &[S]) -> Result<Vec<S>> {
    let n = x.len();
    let scale = x.iter().fold(S::zero(), |m, v| m.max(v.abs()));
    let h = S::lit(1e-6) * (S::one() + scale);
    let cols: Vec<Result<Vec<S>>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut xp = x.to_vec();
            xp[j] += h;
            let mut xm = x.to_vec();
            xm[j] -= h;
            let gp = p.gradient(&xp)?;
            let gm = p.gradient(&xm)?;
            Ok(gp.iter().zip(&gm).map(|(&a, &b)| (a - b) / (S::lit(2.0) * h)).collect())
        })
        .collect();
    let mut out = vec![S::zero(); n * n];
    for (j, c) in cols.into_iter().enumerate() {
        let c = c?;
        for i in 0..n {
            out[i * n + j] = c[i];
        }
    }
    for i in 0..n {
        for j in 0..i {
            let m = (out[i * n + j] + out[j * n + i]) / S::lit(2.0);
            out[i * n + j] = m;
            out[j * n + i] = m;
        }
    }
    Ok(out)
}

/// Drives `‖∇F‖` below `tol` from the search candidate with damped Newton
/// steps, falling back to Levenberg–Marquardt when the Hessian is singular
/// or the Newton step fails to reduce the residual. If refinement stalls
/// for `newton_patience` iterations the best point seen is returned with
/// `refined = false` and a diagnostic.
pub fn newton_refine<S: Real, P: InfMaxProblem<S> + ?Sized>(p: &P, cand: &Candidate<S>, cfg: &SolverConfig) -> Result<Candidate<S>> {
    let tol = cfg.newton_tol.map(S::lit).unwrap_or_else(|| p.default_newton_tol());
    let mut x = cand.point.data().to_vec();
    let mut g = p.gradient(&x)?;
    let mut r = norm2(&g);
    let n = x.len();
    let mut mu_rel = S::lit(1e-12);
    let mut stalls = 0;
    let mut iters = 0;
    let residual_of = |y: &[S]| -> Option<(Vec<S>, S)> {
        let gy = p.gradient(y).ok()?;
        let ry = norm2(&gy);
        ry.is_finite().then_some((gy, ry))
    };
    while r > tol && iters < cfg.newton_max_iters && stalls < cfg.newton_patience {
        iters += 1;
        let h = match p.hessian(&x)? {
            Some(h) => h,
            None => fd_hessian_of(p, &x)?,
        };
        let mut accepted: Option<(Vec<S>, Vec<S>, S)> = None;

        let mut a = h.clone();
        let mut step: Vec<S> = g.iter().map(|&v| -v).collect();
        if solve_in_place(&mut a, &mut step, n).is_ok() {
            let mut t = S::one();
            for _ in 0..12 {
                let y: Vec<S> = x.iter().zip(&step).map(|(&a, &d)| a + t * d).collect();
                if let Some((gy, ry)) = residual_of(&y) {
                    if ry < r {
                        accepted = Some((y, gy, ry));
                        break;
                    }
                }
                t /= S::lit(2.0);
            }
        }
        if accepted.is_none() {
            let diag_max = (0..n)
                .map(|j| (0..n).map(|i| h[i * n + j] * h[i * n + j]).sum::<S>())
                .fold(S::zero(), S::max);
            for _ in 0..10 {
                let Ok(step) = lm_step(&h, &g, n, mu_rel * diag_max.max(S::min_positive_value())) else {
                    mu_rel *= S::lit(100.0);
                    continue;
                };
                let y: Vec<S> = x.iter().zip(&step).map(|(&a, &d)| a + d).collect();
                if let Some((gy, ry)) = residual_of(&y) {
                    if ry < r {
                        accepted = Some((y, gy, ry));
                        mu_rel = (mu_rel / S::lit(10.0)).max(S::lit(1e-15));
                        break;
                    }
                }
                mu_rel *= S::lit(100.0);
            }
        }
        match accepted {
            Some((y, gy, ry)) => {
                if ry > r * S::lit(0.9) {
                    stalls += 1;
                } else {
                    stalls = 0;
                }
                x = y;
                g = gy;
                r = ry;
            }
            None => stalls += 1,
        }
    }
    let mut out = cand.clone();
    out.newton_iterations = iters;
    out.point = out.point.with_data(x);
    out.value = p.action(out.point.data())?;
    out.residual = r;
    out.refined = r <= tol;
    if !out.refined {
        out.diagnostic = Some(format!(
            "Newton refinement stopped at residual {:e} after {iters} iterations (target {:e})",
            r.as_f64(),
            tol.as_f64()
        ));
    }
    Ok(out)
}

/// `x = JΠū + ξ` reconstructed from a dual critical point.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveredOrbit<S: Real> {
    /// Mean-zero part `JΠū` in the dual space.
    pub oscillation: TrajectoryCoeffs<S>,
    /// The constant `ξ`, the mean of `G′(ū)`.
    pub offset: Vec<S>,
    /// `x(t_i)` on the quadrature grid, `states[i * dim + d]`.
    pub states: Vec<S>,
    /// `ẋ(t_i) = Jū(t_i)`.
    pub velocities: Vec<S>,
    /// `sup |x − G′(ū)|` on the grid.
    pub consistency: S,
}

impl<S: Real> RecoveredOrbit<S> {
    pub fn dim(&self) -> usize {
        self.offset.len()
    }
    pub fn len(&self) -> usize {
        self.states.len() / self.dim().max(1)
    }
    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
    pub fn state(&self, i: usize) -> &[S] {
        let d = self.dim();
        &self.states[i * d..(i + 1) * d]
    }
    pub fn velocity(&self, i: usize) -> &[S] {
        let d = self.dim();
        &self.velocities[i * d..(i + 1) * d]
    }
}

/// Consistency between `JΠū + ξ` and `G′(ū)` beyond which recovery is
/// rejected.
pub const RECOVERY_TOL: f64 = 1e-4;

pub fn recover_orbit<S: Real>(ctx: &DualActionContext<S>, u: &TrajectoryCoeffs<S>) -> Result<RecoveredOrbit<S>> {
    if u.space() != ctx.space() {
        return Err(Error::SpaceMismatch("field belongs to another space".into()));
    }
    if u.is_zero() {
        return Err(Error::RecoveryRejected("zero field".into()));
    }
    let sp = ctx.space();
    let (dim, m) = (sp.dim(), sp.grid_points());
    let pi_u = pi_operator(u)?;
    let mut j_pi = pi_u.clone();
    for j in 0..sp.basis_len() {
        let block = pi_u.data()[j * dim..(j + 1) * dim].to_vec();
        apply_j(&block, &mut j_pi.data_mut()[j * dim..(j + 1) * dim]);
    }
    let us = u.synthesize();
    let xs = j_pi.synthesize();
    let mut gp = vec![S::zero(); m * dim];
    for i in 0..m {
        let (_, g) = ctx.pair().value_and_gradient(us.value(i))?;
        gp[i * dim..(i + 1) * dim].copy_from_slice(&g);
    }
    let offset: Vec<S> = (0..dim)
        .map(|d| (0..m).map(|i| gp[i * dim + d]).sum::<S>() / S::from_usize_lossy(m))
        .collect();
    let mut states = vec![S::zero(); m * dim];
    let mut velocities = vec![S::zero(); m * dim];
    let mut consistency = S::zero();
    for i in 0..m {
        for d in 0..dim {
            let x = xs.value(i)[d] + offset[d];
            states[i * dim + d] = x;
            consistency = consistency.max((x - gp[i * dim + d]).abs());
        }
        apply_j(us.value(i), &mut velocities[i * dim..(i + 1) * dim]);
    }
    if !(consistency <= S::lit(RECOVERY_TOL)) {
        return Err(Error::RecoveryRejected(format!(
            "JΠū + ξ differs from G′(ū) by {:e}",
            consistency.as_f64()
        )));
    }
    Ok(RecoveredOrbit { oscillation: j_pi, offset, states, velocities, consistency })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{builtin_hamiltonian, builtin_potential, fenchel_transform, ModelSpec};
    use crate::symfun::{make_space, SymmetryClass, Trig};
    use std::f64::consts::PI;

    fn quartic_direct(t: f64, modes: usize) -> DirectActionContext<f64> {
        let sp = make_space(t, 1, SymmetryClass::E1, modes).unwrap();
        let v = builtin_potential(&ModelSpec::new("power").with("beta", 4.0), 1).unwrap();
        DirectActionContext::new(sp, v).unwrap()
    }

    #[test]
    fn single_mode_search_finds_fiber_maximum() {
        let ctx = quartic_direct(1.0, 1);
        let cand = minimize_sphere(&ctx, &SolverConfig { restarts: 2, ..Default::default() }).unwrap();
        assert!((cand.inf_max - 8.0 * PI.powi(4) / 3.0).abs() < 1e-9 * cand.inf_max);
    }

    #[test]
    fn search_is_deterministic() {
        let ctx = quartic_direct(1.0, 4);
        let cfg = SolverConfig { restarts: 3, seed: 11, ..Default::default() };
        let a = minimize_sphere(&ctx, &cfg).unwrap();
        let b = minimize_sphere(&ctx, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn refinement_reaches_tolerance() {
        let ctx = quartic_direct(1.0, 4);
        let cfg = SolverConfig { restarts: 2, ..Default::default() };
        let cand = minimize_sphere(&ctx, &cfg).unwrap();
        let refined = newton_refine(&ctx, &cand, &cfg).unwrap();
        assert!(refined.refined, "{:?}", refined.diagnostic);
        assert!(refined.residual < 1e-10);
        assert!(((refined.value - cand.inf_max) / cand.inf_max).abs() < 1e-6);
    }

    #[test]
    fn recovery_of_circular_orbit() {
        let sp = make_space(2.0 * PI, 2, SymmetryClass::FullMeanZero, 3).unwrap();
        let h = builtin_hamiltonian(&ModelSpec::new("power").with("beta", 4.0), 2).unwrap();
        let ctx = DualActionContext::new(sp.clone(), fenchel_transform(h).unwrap()).unwrap();
        let mut u = sp.zeros();
        let jc = sp.mode_index(1, Trig::Cos).unwrap();
        let js = sp.mode_index(1, Trig::Sin).unwrap();
        u.data_mut()[jc * 2] = 1.0;
        u.data_mut()[js * 2 + 1] = -1.0;
        let orbit = recover_orbit(&ctx, &u).unwrap();
        assert!(orbit.consistency < 1e-10);
        for i in 0..orbit.len() {
            let r = orbit.state(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((r - 1.0).abs() < 1e-10);
        }
        assert!(recover_orbit(&ctx, &sp.zeros()).is_err());
    }
}

//! Invariant checks shared by the property tests and the acceptance runner.
//! Each returns `Err(reason)` on violation.

#![allow(dead_code)]

use nehari_core::action::{apply_j, quadratic_form_a, DirectActionContext, DualActionContext};
use nehari_core::certify::change_of_variables_gap;
use nehari_core::fiber::{check_monotone_ratio, fiber_profile, FiberKind, FiberProblem, FiberTolerances};
use nehari_core::models::{builtin_hamiltonian, builtin_potential, fenchel_transform, ModelSpec};
use nehari_core::symfun::{differentiate, h1_seminorm_sq, l2_norm, pi_operator, sup_norm, TrajectoryCoeffs};
use nehari_core::{make_space, SymmetryClass};

pub type Check = Result<(), String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Space of the given shape with coefficients taken cyclically from `raw`.
pub fn field(period: f64, dim: usize, class: SymmetryClass, modes: usize, raw: &[f64]) -> TrajectoryCoeffs<f64> {
    let sp = make_space(period, dim, class, modes).unwrap();
    let data = raw.iter().cycle().take(sp.coeff_len()).copied().collect();
    TrajectoryCoeffs::new(&sp, data).unwrap()
}

/// `∫ f(t) dt` of grid samples.
fn grid_integral(x: &TrajectoryCoeffs<f64>, f: impl Fn(usize) -> f64) -> f64 {
    let sp = x.space();
    (0..sp.grid_points()).map(f).sum::<f64>() * sp.weight()
}

/// `∫ (Ju, Πv)` by quadrature on the grid.
pub fn a_by_quadrature(u: &TrajectoryCoeffs<f64>, v: &TrajectoryCoeffs<f64>) -> f64 {
    let (su, spv) = (u.synthesize(), pi_operator(v).unwrap().synthesize());
    let dim = u.space().dim();
    grid_integral(u, |i| {
        let mut ju = vec![0.0; dim];
        apply_j(su.value(i), &mut ju);
        ju.iter().zip(spv.value(i)).map(|(a, b)| a * b).sum()
    })
}

pub fn parseval(x: &TrajectoryCoeffs<f64>) -> Check {
    let s = x.synthesize();
    let l2 = grid_integral(x, |i| s.value(i).iter().map(|v| v * v).sum());
    let h1 = grid_integral(x, |i| s.deriv(i).iter().map(|v| v * v).sum());
    let (pl2, ph1) = (l2_norm(x).powi(2), h1_seminorm_sq(x));
    ensure((pl2 - l2).abs() <= 1e-12 * l2.max(1e-300), || format!("L2: Parseval {pl2} vs quadrature {l2}"))?;
    ensure((ph1 - h1).abs() <= 1e-11 * h1.max(1e-300), || format!("H1: Parseval {ph1} vs quadrature {h1}"))
}

pub fn pi_exact(u: &TrajectoryCoeffs<f64>) -> Check {
    let pu = pi_operator(u).map_err(|e| e.to_string())?;
    let back = differentiate(&pu).map_err(|e| e.to_string())?;
    let scale = u.data().iter().fold(0.0f64, |m, c| m.max(c.abs()));
    for (a, b) in back.data().iter().zip(u.data()) {
        ensure((a - b).abs() <= 1e-13 * scale, || format!("d/dt Πu differs from u: {a} vs {b}"))?;
    }
    let s = pu.synthesize();
    let t = u.space().period();
    for d in 0..u.space().dim() {
        let mean = grid_integral(&pu, |i| s.value(i)[d]) / t;
        ensure(mean.abs() <= 1e-13 * scale * t, || format!("Πu has mean {mean} in component {d}"))?;
    }
    Ok(())
}

/// Wirtinger `∫|x|² ≤ (T/2π)²∫|ẋ|²` and the sup bound `|x|∞² ≤ (T/12)∫|ẋ|²`
/// for a mean-zero field.
pub fn wirtinger_sobolev(x: &TrajectoryCoeffs<f64>) -> Check {
    let t = x.space().period();
    let (l2, h1) = (l2_norm(x).powi(2), h1_seminorm_sq(x));
    let c = t * t / (4.0 * std::f64::consts::PI.powi(2));
    ensure(l2 <= c * h1 * (1.0 + 1e-12), || format!("Wirtinger violated: {l2} > {}", c * h1))?;
    let sup = sup_norm(x).powi(2);
    ensure(sup <= t / 12.0 * h1 * (1.0 + 1e-12), || format!("sup bound violated: {sup} > {}", t / 12.0 * h1))
}

pub fn wirtinger_equality(t: f64, a: f64, b: f64) -> Check {
    let x = field(t, 1, SymmetryClass::FullMeanZero, 3, &[a, b, 0.0, 0.0, 0.0, 0.0]);
    let c = t * t / (4.0 * std::f64::consts::PI.powi(2));
    let (l2, h1) = (l2_norm(&x).powi(2), h1_seminorm_sq(&x));
    ensure((l2 - c * h1).abs() <= 1e-12 * l2, || format!("frequency-one equality off: {l2} vs {}", c * h1))
}

pub fn a_symmetric_and_quadrature(u: &TrajectoryCoeffs<f64>, v: &TrajectoryCoeffs<f64>) -> Check {
    let (uv, vu) = (quadratic_form_a(u, v).unwrap(), quadratic_form_a(v, u).unwrap());
    let scale = l2_norm(u) * l2_norm(v) * u.space().period();
    ensure((uv - vu).abs() <= 1e-13 * scale, || format!("a(u,v) = {uv} but a(v,u) = {vu}"))?;
    let q = a_by_quadrature(u, v);
    ensure((uv - q).abs() <= 1e-10 * scale, || format!("a(u,v) = {uv} but quadrature gives {q}"))
}

/// `a(u, v) = k·a(u(k·), v(k·))`.
pub fn compression_scales_a(u: &TrajectoryCoeffs<f64>, v: &TrajectoryCoeffs<f64>, k: usize) -> Check {
    let a = quadratic_form_a(u, v).unwrap();
    let ak = quadratic_form_a(&u.compress(k).unwrap(), &v.compress(k).unwrap()).unwrap();
    let scale = l2_norm(u) * l2_norm(v) * u.space().period();
    ensure((a - k as f64 * ak).abs() <= 1e-12 * scale, || format!("k = {k}: a = {a}, k·a_k = {}", k as f64 * ak))
}

fn fd_check(f: impl Fn(&[f64]) -> f64, g: &[f64], c: &[f64], rel: f64) -> Check {
    let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-8);
    for j in 0..c.len() {
        let h = 1e-5 * c[j].abs().max(1.0);
        let (mut p, mut m) = (c.to_vec(), c.to_vec());
        p[j] += h;
        m[j] -= h;
        let fd = (f(&p) - f(&m)) / (2.0 * h);
        ensure((fd - g[j]).abs() <= rel * gn, || format!("component {j}: difference quotient {fd} vs gradient {}", g[j]))?;
    }
    Ok(())
}

pub fn quartic_direct(t: f64, modes: usize) -> DirectActionContext<f64> {
    let sp = make_space(t, 1, SymmetryClass::E1, modes).unwrap();
    DirectActionContext::new(sp, builtin_potential(&ModelSpec::new("power"), 1).unwrap()).unwrap()
}

pub fn quartic_dual(t: f64, modes: usize) -> DualActionContext<f64> {
    let sp = make_space(t, 2, SymmetryClass::FullMeanZero, modes).unwrap();
    let pair = fenchel_transform(builtin_hamiltonian(&ModelSpec::new("power"), 2).unwrap()).unwrap();
    DualActionContext::new(sp, pair).unwrap()
}

pub fn direct_gradient(ctx: &DirectActionContext<f64>, c: &[f64]) -> Check {
    let g = ctx.gradient(c).map_err(|e| e.to_string())?;
    fd_check(|x| ctx.action(x).unwrap(), &g, c, 1e-6)
}

pub fn dual_gradient(ctx: &DualActionContext<f64>, c: &[f64]) -> Check {
    let g = ctx.gradient(c).map_err(|e| e.to_string())?;
    fd_check(|x| ctx.action(x).unwrap(), &g, c, 1e-6)
}

pub fn monotone_ratio(ctx: &DirectActionContext<f64>, e: &[f64]) -> Check {
    let fiber = ctx.fiber(e).map_err(|e| e.to_string())?;
    let tol = FiberTolerances::default();
    let prof = fiber_profile(&fiber, &tol).map_err(|e| e.to_string())?;
    ensure(!prof.plateau, || "unexpected plateau on a quartic fiber".into())?;
    check_monotone_ratio(&fiber, &prof, &tol).map_err(|e| e.to_string())
}

pub fn rescaling(ctx: &DirectActionContext<f64>, c: &[f64], k: usize, lambda: f64) -> Check {
    let x = TrajectoryCoeffs::new(ctx.space(), c.to_vec()).unwrap();
    let gap = change_of_variables_gap(ctx, &x, k, lambda).map_err(|e| e.to_string())?;
    ensure(gap < 1e-9, || format!("rescaling identity gap {gap:e} at k = {k}, lambda = {lambda}"))
}

/// Synthetic fiber whose ratio `φ′(s)/s` is `1 − s` below 1, zero on
/// `[1, 2]` and `2 − s` above; every `s ∈ [1, 2]` is a maximizer.
pub fn flat_ratio_plateau() -> Check {
    let ratio = |s: f64| {
        if s < 1.0 {
            1.0 - s
        } else if s <= 2.0 {
            0.0
        } else {
            2.0 - s
        }
    };
    let phi = |s: f64| {
        let a = s.min(1.0);
        let mut v = a * a / 2.0 - a * a * a / 3.0;
        if s > 2.0 {
            v += (s * s - 4.0) - (s * s * s - 8.0) / 3.0;
        }
        v
    };
    let p = FiberProblem { kind: FiberKind::Direct, kappa: 1.0, ray: move |s: f64| Ok((phi(s), s * ratio(s))) };
    let prof = fiber_profile(&p, &FiberTolerances::default()).map_err(|e| e.to_string())?;
    ensure(prof.plateau, || format!("plateau not detected: {prof:?}"))?;
    ensure((prof.crit_lo - 1.0).abs() < 1e-9 && (prof.crit_hi - 2.0).abs() < 1e-9, || format!("critical interval off: {prof:?}"))?;
    ensure((prof.value - 1.0 / 6.0).abs() < 1e-12, || format!("plateau value {} vs 1/6", prof.value))
}

/// `u = (cos t, sin t)` on `[0, 2π]` has `|a(u,u)| = 2π`, by formula and by
/// quadrature.
pub fn circle_anchor() -> Check {
    let sp = make_space(std::f64::consts::TAU, 2, SymmetryClass::FullMeanZero, 2).unwrap();
    let u = TrajectoryCoeffs::new(&sp, vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
    let a = quadratic_form_a(&u, &u).unwrap();
    ensure((a.abs() - std::f64::consts::TAU).abs() < 1e-12, || format!("a(u,u) = {a}"))?;
    ensure((a - a_by_quadrature(&u, &u)).abs() < 1e-12, || "circle quadrature mismatch".into())
}

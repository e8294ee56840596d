//! Sampling audits of the structural hypotheses on `V` and `H`.
//!
//! Limits are judged by trends along radius ladders with explicit
//! thresholds; a right trend that misses the threshold is `inconclusive`.
//! Every `fail` carries a witness point, the violated inequality and the
//! margin by which it is violated.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::models::{fit_growth_exponent, unit_directions, FenchelPair, PotentialModel};
use crate::scalar::{dot, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub point: Vec<f64>,
    pub inequality: String,
    /// Signed slack of the inequality at `point`; negative means violated.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub id: String,
    pub verdict: Verdict,
    pub detail: String,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub subject: String,
    pub checks: Vec<ConditionCheck>,
}

impl ConditionReport {
    pub fn get(&self, id: &str) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| c.id == id)
    }
    pub fn any_fail(&self) -> bool {
        self.checks.iter().any(|c| c.verdict == Verdict::Fail)
    }
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.verdict == Verdict::Pass)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConditionPlan {
    pub directions: usize,
    pub interior_points: usize,
    /// Radius range of the interior samples (log-uniform).
    pub interior_range: [f64; 2],
    pub small_radii: Vec<f64>,
    pub large_radii: Vec<f64>,
    pub seed: u64,
    /// Threshold of the small-radius ratio test; its reciprocal is the
    /// large-radius threshold.
    pub eps: f64,
    /// Left inequality of the convexity-type condition must exceed
    /// `strict_slack·|x|²`.
    pub strict_slack: f64,
    /// Relative slack of order comparisons.
    pub order_slack: f64,
    pub even_tol: f64,
    pub convex_pairs: usize,
    pub s_grid: usize,
}

impl Default for ConditionPlan {
    fn default() -> Self {
        ConditionPlan {
            directions: 32,
            interior_points: 200,
            interior_range: [1e-2, 1e2],
            small_radii: (1..=8).rev().map(|k| 10f64.powi(-k)).collect(),
            large_radii: (1..=6).map(|k| 10f64.powi(k)).collect(),
            seed: 0,
            eps: 1e-3,
            strict_slack: 1e-12,
            order_slack: 1e-9,
            even_tol: 1e-10,
            convex_pairs: 200,
            s_grid: 64,
        }
    }
}

fn to_f64<S: Real>(x: &[S]) -> Vec<f64> {
    x.iter().map(|v| v.as_f64()).collect()
}

fn check(id: &str, verdict: Verdict, detail: String, witness: Option<Witness>) -> ConditionCheck {
    ConditionCheck { id: id.to_string(), verdict, detail, witness }
}

fn witness<S: Real>(x: &[S], inequality: &str, margin: f64) -> Option<Witness> {
    Some(Witness { point: to_f64(x), inequality: inequality.to_string(), margin })
}

/// `(radius, ratio, point)` per rung of a radius ladder.
type Rungs<S> = Vec<(f64, f64, Vec<S>)>;

/// Per-radius extremum of `f(r·d)/r²` over directions, with the point
/// attaining it. Non-finite values are returned as errors with the point.
fn ladder<S: Real>(
    f: &dyn Fn(&[S]) -> Option<S>,
    dirs: &[Vec<S>],
    radii: &[f64],
    take_max: bool,
) -> Result<Rungs<S>, Vec<S>> {
    let mut out = Vec::with_capacity(radii.len());
    for &r in radii {
        let rs = S::lit(r);
        let mut best: Option<(f64, Vec<S>)> = None;
        for d in dirs {
            let x: Vec<S> = d.iter().map(|&v| v * rs).collect();
            let Some(v) = f(&x).filter(|v| v.is_finite()) else { return Err(x) };
            let ratio = (v / (rs * rs)).as_f64();
            let better = match &best {
                None => true,
                Some((b, _)) => (take_max && ratio > *b) || (!take_max && ratio < *b),
            };
            if better {
                best = Some((ratio, x));
            }
        }
        let (ratio, x) = best.expect("at least one direction");
        out.push((r, ratio, x));
    }
    Ok(out)
}

/// `lim_{x→0} f(x)/|x|² = 0`: the worst ratio at the smallest radius must be
/// below `eps`, and ratios must not grow as the radius shrinks.
fn vanishing_ratio<S: Real>(id: &str, f: &dyn Fn(&[S]) -> Option<S>, dirs: &[Vec<S>], plan: &ConditionPlan) -> ConditionCheck {
    let mut radii = plan.small_radii.clone();
    radii.sort_by(f64::total_cmp);
    let lad = match ladder(f, dirs, &radii, true) {
        Ok(l) => l,
        Err(x) => return check(id, Verdict::Fail, "non-finite evaluation".into(), witness(&x, "finite value", f64::NAN)),
    };
    let ineq = format!("f(x)/|x|^2 < {:e} at the smallest radius", plan.eps);
    for w in lad.windows(2) {
        if w[0].1 > w[1].1 * (1.0 + plan.order_slack) + f64::MIN_POSITIVE {
            return check(
                id,
                Verdict::Fail,
                format!("ratio grows from {:e} at r = {:e} to {:e} at r = {:e}", w[1].1, w[1].0, w[0].1, w[0].0),
                witness(&w[0].2, "f(x)/|x|^2 non-increasing as |x| -> 0", w[1].1 - w[0].1),
            );
        }
    }
    let (first, last) = (&lad[0], &lad[lad.len() - 1]);
    let detail = format!("max ratio {:e} at r = {:e}, {:e} at r = {:e}", first.1, first.0, last.1, last.0);
    if first.1 < plan.eps {
        check(id, Verdict::Pass, detail, None)
    } else if first.1 < last.1 * (1.0 - 1e-6) {
        check(id, Verdict::Inconclusive, detail, witness(&first.2, &ineq, plan.eps - first.1))
    } else {
        check(id, Verdict::Fail, detail, witness(&first.2, &ineq, plan.eps - first.1))
    }
}

/// Unbounded growth of a ratio along a ladder ordered towards the limit:
/// passes above `threshold` or when the increments do not decay (at least
/// logarithmic growth in the radius); fails when the ratio does not grow.
fn growing_ratio(id: &str, lad: &[(f64, f64)], threshold: f64, plan: &ConditionPlan, point: Vec<f64>, what: &str) -> ConditionCheck {
    let last = lad[lad.len() - 1];
    let detail = format!("min ratio {:e} at r = {:e}, {:e} at r = {:e}", lad[0].1, lad[0].0, last.1, last.0);
    let ineq = format!("{what} > {threshold:e} at the extreme radius");
    let wit = Some(Witness { point: point.clone(), inequality: ineq.clone(), margin: last.1 - threshold });
    for w in lad.windows(2) {
        if w[1].1 < w[0].1 * (1.0 - plan.order_slack) {
            let wit = Some(Witness { point, inequality: format!("{what} increasing along the ladder"), margin: w[1].1 - w[0].1 });
            return check(id, Verdict::Fail, format!("ratio decreases between r = {:e} and r = {:e}; {detail}", w[0].0, w[1].0), wit);
        }
    }
    if !(last.1 > lad[0].1 * (1.0 + 1e-6)) {
        return check(id, Verdict::Fail, format!("ratio does not grow; {detail}"), wit);
    }
    if last.1 > threshold {
        return check(id, Verdict::Pass, detail, None);
    }
    let incs: Vec<f64> = lad.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let steady = incs.iter().all(|&d| d > 0.0) && incs.windows(2).all(|w| w[1] >= 0.95 * w[0]);
    if steady {
        check(id, Verdict::Pass, format!("{detail}; increments per ladder step do not decay"), None)
    } else {
        check(id, Verdict::Inconclusive, detail, wit)
    }
}

fn interior_points<S: Real>(dim: usize, plan: &ConditionPlan, seed: u64) -> Vec<Vec<S>> {
    let dirs = unit_directions::<S>(dim, plan.interior_points, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let (lo, hi) = (plan.interior_range[0].ln(), plan.interior_range[1].ln());
    dirs.into_iter()
        .map(|d| {
            let r = S::lit(rng.random_range(lo..=hi).exp());
            d.into_iter().map(|v| v * r).collect()
        })
        .collect()
}

/// Audits (V1)–(V4) for a potential.
pub fn check_potential_conditions<S: Real>(model: &PotentialModel<S>, plan: &ConditionPlan) -> ConditionReport {
    let dim = model.dim();
    let dirs = unit_directions::<S>(dim, plan.directions, plan.seed);
    let value = |x: &[S]| Some(model.value(x));
    let mut checks = vec![vanishing_ratio("V1", &value, &dirs, plan)];

    let mut large = plan.large_radii.clone();
    large.sort_by(f64::total_cmp);
    checks.push(match ladder(&value, &dirs, &large, false) {
        Ok(l) => {
            let pts: Vec<(f64, f64)> = l.iter().map(|(r, v, _)| (*r, *v)).collect();
            growing_ratio("V2", &pts, 1.0 / plan.eps, plan, to_f64(&l[l.len() - 1].2), "V(x)/|x|^2")
        }
        Err(x) => check("V2", Verdict::Fail, "non-finite evaluation".into(), witness(&x, "finite value", f64::NAN)),
    });

    let mut small_pts = Vec::new();
    let mut other_pts = Vec::new();
    for d in &dirs {
        for &r in &plan.small_radii {
            small_pts.push(d.iter().map(|&v| v * S::lit(r)).collect::<Vec<S>>());
        }
        for &r in &plan.large_radii {
            other_pts.push(d.iter().map(|&v| v * S::lit(r)).collect::<Vec<S>>());
        }
    }
    other_pts.extend(interior_points::<S>(dim, plan, plan.seed.wrapping_add(1)));
    checks.push(v3_check(model, &small_pts, &other_pts, plan));

    let mut v4 = check("V4", Verdict::Pass, "V(x) = V(-x) at every sample".into(), None);
    for x in small_pts.iter().chain(&other_pts) {
        let neg: Vec<S> = x.iter().map(|&v| -v).collect();
        let (a, b) = (model.value(x), model.value(&neg));
        let bound = S::lit(plan.even_tol) * (S::one() + a.abs());
        let diff = (a - b).abs();
        if !(diff < bound) {
            v4 = check(
                "V4",
                Verdict::Fail,
                format!("|V(x) - V(-x)| = {:e}", diff.as_f64()),
                witness(x, "|V(x) - V(-x)| < 1e-10 (1 + |V(x)|)", (bound - diff).as_f64()),
            );
            break;
        }
    }
    checks.push(v4);
    ConditionReport { subject: model.name().to_string(), checks }
}

fn v3_check<S: Real>(model: &PotentialModel<S>, small: &[Vec<S>], other: &[Vec<S>], plan: &ConditionPlan) -> ConditionCheck {
    let dim = model.dim();
    let mut g = vec![S::zero(); dim];
    let mut h = vec![S::zero(); dim * dim];
    let mut hx = vec![S::zero(); dim];
    let mut max_rel = f64::NEG_INFINITY;
    for (i, x) in small.iter().chain(other).enumerate() {
        model.gradient(x, &mut g);
        model.hessian(x, &mut h);
        for a in 0..dim {
            hx[a] = (0..dim).map(|b| h[a * dim + b] * x[b]).sum();
        }
        let left = dot(&g, x);
        let curv = dot(&hx, x);
        if !left.is_finite() || !curv.is_finite() {
            return check("V3", Verdict::Fail, "non-finite evaluation".into(), witness(x, "finite derivatives", f64::NAN));
        }
        let r2 = dot(x, x);
        let floor = if i < small.len() { S::zero() } else { S::lit(plan.strict_slack) * r2 };
        if !(left > floor) {
            return check(
                "V3",
                Verdict::Fail,
                format!("V'(x)·x = {:e}", left.as_f64()),
                witness(x, "V'(x)·x > 1e-12 |x|^2", (left - floor).as_f64()),
            );
        }
        let scale = curv.abs().max(left.abs()).max(S::min_positive_value());
        let right = curv - left;
        if right < -S::lit(plan.order_slack) * scale {
            return check(
                "V3",
                Verdict::Fail,
                format!("V''(x)x·x - V'(x)·x = {:e}", right.as_f64()),
                witness(x, "V'(x)·x <= V''(x)x·x", right.as_f64()),
            );
        }
        max_rel = max_rel.max((right / scale).as_f64());
    }
    let detail = if max_rel <= plan.order_slack {
        "boundary: V''(x)x·x = V'(x)·x at every sample (equality case)".to_string()
    } else {
        format!("0 < V'(x)·x <= V''(x)x·x at every sample (largest relative gap {max_rel:e})")
    };
    check("V3", Verdict::Pass, detail, None)
}

/// Audits (H1), (H2), strict convexity, (H3), (G1) and (G2).
pub fn check_hamiltonian_conditions<S: Real>(pair: &FenchelPair<S>, plan: &ConditionPlan) -> ConditionReport {
    let h = pair.base();
    let dim = h.dim();
    let dirs = unit_directions::<S>(dim, plan.directions, plan.seed);
    let value = |x: &[S]| Some(h.value(x));
    let mut checks = vec![vanishing_ratio("H1", &value, &dirs, plan)];
    checks.push(h2_check(pair, plan));
    checks.push(convexity_check(pair, plan));
    checks.push(h3_check(pair, &dirs, plan));

    // G(y)/|y|² must blow up as y → 0: reverse the small ladder so it runs
    // towards the limit
    let gval = |y: &[S]| pair.value(y).ok();
    let mut small = plan.small_radii.clone();
    small.sort_by(|a, b| b.total_cmp(a));
    checks.push(match ladder(&gval, &dirs, &small, false) {
        Ok(l) => {
            let pts: Vec<(f64, f64)> = l.iter().map(|(r, v, _)| (*r, *v)).collect();
            growing_ratio("G1", &pts, 1.0 / plan.eps, plan, to_f64(&l[l.len() - 1].2), "G(y)/|y|^2")
        }
        Err(y) => check("G1", Verdict::Inconclusive, "Fenchel engine failure".into(), witness(&y, "G(y) evaluable", f64::NAN)),
    });

    let radii: Vec<S> = plan.large_radii.iter().map(|&r| S::lit(r)).collect();
    let alpha = pair.alpha();
    checks.push(match fit_growth_exponent(|y: &[S]| pair.value(y), dim, &radii, plan.directions, plan.seed) {
        Ok(fit) => {
            let detail = format!(
                "fitted alpha {:.6}, declared {:.6}, b1 = {:e}, b2 = {:e}",
                fit.exponent.as_f64(),
                alpha.as_f64(),
                fit.lower.as_f64(),
                fit.upper.as_f64()
            );
            if fit.sandwich_holds(alpha) {
                check("G2", Verdict::Pass, detail, None)
            } else {
                let y: Vec<S> = dirs[0].iter().map(|&v| v * radii[radii.len() - 1]).collect();
                check("G2", Verdict::Fail, detail, witness(&y, "b1|y|^alpha <= G(y) <= b2|y|^alpha", -(fit.exponent - alpha).abs().as_f64()))
            }
        }
        Err(e) => check("G2", Verdict::Inconclusive, format!("Fenchel engine failure: {e}"), None),
    });
    ConditionReport { subject: h.name().to_string(), checks }
}

fn h2_check<S: Real>(pair: &FenchelPair<S>, plan: &ConditionPlan) -> ConditionCheck {
    let h = pair.base();
    let radii: Vec<S> = plan.large_radii.iter().map(|&r| S::lit(r)).collect();
    let fit = match fit_growth_exponent(|x: &[S]| Ok(h.value(x)), h.dim(), &radii, plan.directions, plan.seed) {
        Ok(f) => f,
        Err(e) => return check("H2", Verdict::Fail, format!("growth fit failed: {e}"), None),
    };
    let beta = fit.exponent;
    let detail = format!(
        "fitted beta {:.6}, a1 = {:e}, a2 = {:e}",
        beta.as_f64(),
        fit.lower.as_f64(),
        fit.upper.as_f64()
    );
    let top = unit_directions::<S>(h.dim(), 1, plan.seed)[0].iter().map(|&v| v * radii[radii.len() - 1]).collect::<Vec<S>>();
    let margin = (beta - S::lit(2.0)).as_f64();
    if beta <= S::lit(2.0) + S::lit(1e-2) {
        return check("H2", Verdict::Fail, detail, witness(&top, "a1|x|^beta <= H(x) <= a2|x|^beta with beta > 2", margin));
    }
    let declared = h.growth_beta().unwrap_or(beta);
    if !fit.sandwich_holds(declared) {
        return check(
            "H2",
            Verdict::Fail,
            format!("{detail}; declared beta {:.6}", declared.as_f64()),
            witness(&top, "a1|x|^beta <= H(x) <= a2|x|^beta", -(beta - declared).abs().as_f64()),
        );
    }
    check("H2", Verdict::Pass, detail, None)
}

fn convexity_check<S: Real>(pair: &FenchelPair<S>, plan: &ConditionPlan) -> ConditionCheck {
    let h = pair.base();
    let pts = interior_points::<S>(h.dim(), &ConditionPlan { interior_points: 2 * plan.convex_pairs, ..plan.clone() }, plan.seed.wrapping_add(7));
    for pr in pts.chunks(2) {
        let (x, y) = (&pr[0], &pr[1]);
        let mid: Vec<S> = x.iter().zip(y).map(|(&a, &b)| (a + b) / S::lit(2.0)).collect();
        let (hx, hy) = (h.value(x), h.value(y));
        let avg = (hx + hy) / S::lit(2.0);
        let margin = S::lit(1e-14) * (hx.abs() + hy.abs());
        let gap = avg - h.value(&mid);
        if !(gap > margin) {
            let mut p = to_f64(x);
            p.extend(to_f64(y));
            return check(
                "H_convex",
                Verdict::Fail,
                format!("midpoint gap {:e} at the pair (x, y) listed in the witness", gap.as_f64()),
                Some(Witness { point: p, inequality: "H((x+y)/2) < (H(x)+H(y))/2".into(), margin: (gap - margin).as_f64() }),
            );
        }
    }
    check("H_convex", Verdict::Pass, format!("no midpoint violation in {} random pairs", plan.convex_pairs), None)
}

fn h3_check<S: Real>(pair: &FenchelPair<S>, dirs: &[Vec<S>], plan: &ConditionPlan) -> ConditionCheck {
    let n = plan.s_grid.max(2);
    let (lo, hi) = (1e-3f64.ln(), 1e3f64.ln());
    let grid: Vec<S> = (0..n).map(|i| S::lit((lo + (hi - lo) * i as f64 / (n - 1) as f64).exp())).collect();
    for y in dirs {
        let mut prev: Option<(S, S)> = None;
        for &s in &grid {
            let sy: Vec<S> = y.iter().map(|&v| v * s).collect();
            let q = match pair.value_and_gradient(&sy) {
                Ok((_, gp)) => dot(&gp, y) / s,
                Err(e) => {
                    return check("H3", Verdict::Inconclusive, format!("Fenchel engine failure: {e}"), witness(&sy, "G'(sy) evaluable", f64::NAN));
                }
            };
            if let Some((s0, q0)) = prev {
                if q > q0 + S::lit(plan.order_slack) * q0.abs().max(S::min_positive_value()) {
                    return check(
                        "H3",
                        Verdict::Fail,
                        format!("G'(sy)·y/s rises from {:e} at s = {:e} to {:e} at s = {:e}", q0.as_f64(), s0.as_f64(), q.as_f64(), s.as_f64()),
                        witness(&sy, "s -> G'(sy)·y/s non-increasing", (q0 - q).as_f64()),
                    );
                }
            }
            prev = Some((s, q));
        }
    }
    check("H3", Verdict::Pass, format!("ratio non-increasing along {} directions x {} radii", dirs.len(), n), None)
}

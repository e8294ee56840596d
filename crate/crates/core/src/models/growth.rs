use crate::error::{Error, Result};
use crate::scalar::Real;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Log–log power-law fit `f(x) ≈ a|x|^β` over a radius ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthFit<S> {
    /// Least-squares slope of `ln f` against `ln |x|`.
    pub exponent: S,
    /// `min f(x)/|x|^exponent` over the samples.
    pub lower: S,
    /// `max f(x)/|x|^exponent` over the samples.
    pub upper: S,
    pub samples: usize,
}

impl<S: Real> GrowthFit<S> {
    /// Whether `a₁|x|^β ≤ f ≤ a₂|x|^β` with `0 < a₁ ≤ a₂ < ∞` is consistent
    /// with the samples for the declared `β`.
    pub fn sandwich_holds(&self, declared: S) -> bool {
        (self.exponent - declared).abs() <= S::lit(1e-2) * declared.abs().max(S::one())
            && self.lower > S::zero()
            && self.upper.is_finite()
    }
}

/// Default ladder `10^1, 10^1.5, …, 10^4`.
pub fn default_growth_radii<S: Real>() -> Vec<S> {
    (0..7).map(|i| S::lit(10f64.powf(1.0 + 0.5 * i as f64))).collect()
}

/// Seeded unit directions in `ℝ^dim`; in one dimension alternates `±1`.
pub fn unit_directions<S: Real>(dim: usize, count: usize, seed: u64) -> Vec<Vec<S>> {
    if dim == 1 {
        return (0..count).map(|i| vec![if i % 2 == 0 { S::one() } else { -S::one() }]).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if n > 1e-3 {
                break v.into_iter().map(|a| S::lit(a / n)).collect();
            }
        })
        .collect()
}

/// Fits the growth exponent of `f` along `n_dirs` seeded directions over
/// `radii`.
pub fn fit_growth_exponent<S: Real>(
    f: impl Fn(&[S]) -> Result<S>,
    dim: usize,
    radii: &[S],
    n_dirs: usize,
    seed: u64,
) -> Result<GrowthFit<S>> {
    if radii.len() < 2 || n_dirs == 0 {
        return Err(Error::InvalidArgument("growth fit needs at least two radii and one direction".into()));
    }
    let dirs = unit_directions::<S>(dim, n_dirs, seed);
    let mut pts = Vec::with_capacity(radii.len() * dirs.len());
    for dir in &dirs {
        for &r in radii {
            let x: Vec<S> = dir.iter().map(|&d| d * r).collect();
            let v = f(&x)?;
            if !v.is_finite() || !(v > S::zero()) {
                return Err(Error::NonFinite(format!("growth sample f = {v} at radius {r}")));
            }
            pts.push((r, v));
        }
    }
    let n = S::from_usize_lossy(pts.len());
    let mx = pts.iter().map(|p| p.0.ln()).sum::<S>() / n;
    let my = pts.iter().map(|p| p.1.ln()).sum::<S>() / n;
    let (mut sxy, mut sxx) = (S::zero(), S::zero());
    for &(r, v) in &pts {
        let dx = r.ln() - mx;
        sxy += dx * (v.ln() - my);
        sxx += dx * dx;
    }
    let exponent = sxy / sxx;
    let (mut lower, mut upper) = (S::infinity(), S::zero());
    for &(r, v) in &pts {
        let ratio = v / r.powf(exponent);
        lower = lower.min(ratio);
        upper = upper.max(ratio);
    }
    Ok(GrowthFit { exponent, lower, upper, samples: pts.len() })
}

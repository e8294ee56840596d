//! Symmetry-constrained Fourier spaces over the circle of period `T`.
//!
//! Every space is spanned by raw (un-normalized) trigonometric modes
//! `cos(2πkt/T)` / `sin(2πkt/T)`. The symmetry class decides which
//! frequencies and which trig kinds are present:
//!
//! | class           | modes                                   |
//! |-----------------|-----------------------------------------|
//! | `E1`            | `cos`, odd frequencies `2j+1`           |
//! | `E2`            | `cos` and `sin`, odd frequencies        |
//! | `E3`            | `sin`, frequencies `1..=n`              |
//! | `FullMeanZero`  | `cos` and `sin`, frequencies `1..=n`    |
//!
//! `E1` is characterized by symmetries (even about `0` and `T/2`, odd about
//! `T/4` and `3T/4`), not by a basis; [`make_space`] checks every basis
//! function against those identities before handing the space out.
//!
//! Quadrature is the uniform periodic rectangle rule on `M` points,
//! `M = max(64, 8 · max frequency)`.

use crate::error::{Error, Result};
use crate::scalar::Real;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

/// Smallest grid used regardless of the mode budget.
pub const MIN_GRID_POINTS: usize = 64;
/// Grid points per unit of the largest represented frequency.
pub const GRID_OVERSAMPLING: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SymmetryClass {
    E1,
    E2,
    E3,
    #[serde(rename = "FULL_MEANZERO")]
    FullMeanZero,
}

impl fmt::Display for SymmetryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SymmetryClass::E1 => "E1",
            SymmetryClass::E2 => "E2",
            SymmetryClass::E3 => "E3",
            SymmetryClass::FullMeanZero => "FULL_MEANZERO",
        };
        f.write_str(s)
    }
}

impl FromStr for SymmetryClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "E1" => Ok(SymmetryClass::E1),
            "E2" => Ok(SymmetryClass::E2),
            "E3" => Ok(SymmetryClass::E3),
            "FULL_MEANZERO" | "FULL" => Ok(SymmetryClass::FullMeanZero),
            other => Err(Error::InvalidArgument(format!("unknown symmetry class `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Trig {
    Cos,
    Sin,
}

/// One basis function: `cos` or `sin` of raw frequency `freq`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisMode {
    pub freq: usize,
    pub trig: Trig,
}

fn modes_for(class: SymmetryClass, num_modes: usize) -> Vec<BasisMode> {
    let cos = |freq| BasisMode { freq, trig: Trig::Cos };
    let sin = |freq| BasisMode { freq, trig: Trig::Sin };
    match class {
        SymmetryClass::E1 => (0..num_modes).map(|j| cos(2 * j + 1)).collect(),
        SymmetryClass::E2 => (0..num_modes)
            .flat_map(|j| [cos(2 * j + 1), sin(2 * j + 1)])
            .collect(),
        SymmetryClass::E3 => (1..=num_modes).map(sin).collect(),
        SymmetryClass::FullMeanZero => (1..=num_modes).flat_map(|k| [cos(k), sin(k)]).collect(),
    }
}

#[derive(Debug)]
struct BasisTable<S> {
    times: Vec<S>,
    omegas: Vec<S>,
    /// `values[i * nb + j]` = mode `j` at grid point `i`.
    values: Vec<S>,
    derivs: Vec<S>,
}

impl<S: Real> BasisTable<S> {
    fn build(period: S, grid_points: usize, modes: &[BasisMode]) -> Self {
        let nb = modes.len();
        let two_pi = S::TAU();
        let m = S::from_usize_lossy(grid_points);
        let times = (0..grid_points)
            .map(|i| period * S::from_usize_lossy(i) / m)
            .collect();
        let omegas: Vec<S> = modes
            .iter()
            .map(|md| two_pi * S::from_usize_lossy(md.freq) / period)
            .collect();
        let mut values = vec![S::zero(); grid_points * nb];
        let mut derivs = vec![S::zero(); grid_points * nb];
        for i in 0..grid_points {
            for (j, md) in modes.iter().enumerate() {
                // reduce the phase index exactly before converting to an angle
                let phase = (md.freq * i) % grid_points;
                let angle = two_pi * S::from_usize_lossy(phase) / m;
                let (s, c) = angle.sin_cos();
                let w = omegas[j];
                let (v, d) = match md.trig {
                    Trig::Cos => (c, -w * s),
                    Trig::Sin => (s, w * c),
                };
                values[i * nb + j] = v;
                derivs[i * nb + j] = d;
            }
        }
        BasisTable { times, omegas, values, derivs }
    }
}

/// A truncated symmetric Fourier space together with its quadrature grid.
#[derive(Debug, Clone)]
pub struct SpaceConfig<S> {
    period: S,
    dim: usize,
    class: SymmetryClass,
    num_modes: usize,
    grid_points: usize,
    modes: Vec<BasisMode>,
    table: Arc<BasisTable<S>>,
}

impl<S: Real> PartialEq for SpaceConfig<S> {
    fn eq(&self, other: &Self) -> bool {
        self.period == other.period
            && self.dim == other.dim
            && self.class == other.class
            && self.num_modes == other.num_modes
            && self.grid_points == other.grid_points
    }
}

/// Builds a space with the automatic grid rule and runs the basis
/// self-test.
pub fn make_space<S: Real>(
    period: S,
    dim: usize,
    class: SymmetryClass,
    num_modes: usize,
) -> Result<SpaceConfig<S>> {
    SpaceConfig::new(period, dim, class, num_modes)
}

impl<S: Real> SpaceConfig<S> {
    pub fn new(period: S, dim: usize, class: SymmetryClass, num_modes: usize) -> Result<Self> {
        let max_freq = match class {
            SymmetryClass::E1 | SymmetryClass::E2 => 2 * num_modes.max(1) - 1,
            SymmetryClass::E3 | SymmetryClass::FullMeanZero => num_modes.max(1),
        };
        let grid = MIN_GRID_POINTS.max(GRID_OVERSAMPLING * max_freq);
        Self::with_grid(period, dim, class, num_modes, grid)
    }

    /// Same as [`SpaceConfig::new`] with an explicit grid size. The grid
    /// must satisfy the oversampling rule and be divisible by 4.
    pub fn with_grid(
        period: S,
        dim: usize,
        class: SymmetryClass,
        num_modes: usize,
        grid_points: usize,
    ) -> Result<Self> {
        if !(period > S::zero()) || !period.is_finite() {
            return Err(Error::InvalidArgument(format!("period must be positive, got {period}")));
        }
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        if num_modes == 0 {
            return Err(Error::InvalidArgument("empty basis: num_modes must be at least 1".into()));
        }
        let modes = modes_for(class, num_modes);
        let max_freq = modes.iter().map(|m| m.freq).max().unwrap_or(1);
        if grid_points < GRID_OVERSAMPLING * max_freq || !grid_points.is_multiple_of(4) {
            return Err(Error::InvalidArgument(format!(
                "grid of {grid_points} points violates the {GRID_OVERSAMPLING}x rule for frequency {max_freq} or is not divisible by 4"
            )));
        }
        let table = Arc::new(BasisTable::build(period, grid_points, &modes));
        let space = SpaceConfig { period, dim, class, num_modes, grid_points, modes, table };
        space.self_test()?;
        Ok(space)
    }

    fn self_test(&self) -> Result<()> {
        let nb = self.basis_len();
        let tol = S::lit(1e-13).max(S::epsilon() * S::lit(64.0));
        for j in 0..nb {
            let column: Vec<S> = (0..self.grid_points).map(|i| self.table.values[i * nb + j]).collect();
            let report = symmetry_check(&column, 1, self.class, tol)?;
            if !report.pass {
                return Err(Error::BasisSelfTest(format!(
                    "mode {:?} of class {} fails: {:?}",
                    self.modes[j], self.class, report.checks
                )));
            }
        }
        Ok(())
    }

    pub fn period(&self) -> S {
        self.period
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn class(&self) -> SymmetryClass {
        self.class
    }
    pub fn num_modes(&self) -> usize {
        self.num_modes
    }
    pub fn grid_points(&self) -> usize {
        self.grid_points
    }
    pub fn modes(&self) -> &[BasisMode] {
        &self.modes
    }
    /// Number of scalar basis functions per component.
    pub fn basis_len(&self) -> usize {
        self.modes.len()
    }
    /// Length of a coefficient vector: `basis_len × dim`.
    pub fn coeff_len(&self) -> usize {
        self.modes.len() * self.dim
    }
    pub fn max_freq(&self) -> usize {
        self.modes.iter().map(|m| m.freq).max().unwrap_or(0)
    }
    /// Angular frequency `2πk/T` of basis mode `j`.
    pub fn omega(&self, j: usize) -> S {
        self.table.omegas[j]
    }
    pub fn times(&self) -> &[S] {
        &self.table.times
    }
    /// Quadrature weight `T/M`.
    pub fn weight(&self) -> S {
        self.period / S::from_usize_lossy(self.grid_points)
    }
    /// Value of basis mode `j` at grid point `i`.
    #[inline]
    pub fn basis_value(&self, i: usize, j: usize) -> S {
        self.table.values[i * self.modes.len() + j]
    }
    #[inline]
    pub fn basis_deriv(&self, i: usize, j: usize) -> S {
        self.table.derivs[i * self.modes.len() + j]
    }
    /// Raw frequency list, one entry per basis mode.
    pub fn frequencies(&self) -> Vec<usize> {
        self.modes.iter().map(|m| m.freq).collect()
    }

    pub fn grid(&self) -> QuadratureGrid<S> {
        QuadratureGrid {
            period: self.period,
            times: self.table.times.clone(),
            weight: self.weight(),
        }
    }

    pub fn zeros(&self) -> TrajectoryCoeffs<S> {
        TrajectoryCoeffs { space: self.clone(), data: vec![S::zero(); self.coeff_len()] }
    }

    /// Position of the slot `(freq, trig)` in the basis, if present.
    pub fn mode_index(&self, freq: usize, trig: Trig) -> Option<usize> {
        self.modes.iter().position(|m| m.freq == freq && m.trig == trig)
    }

    /// Space of the same class and period with another mode budget.
    pub fn with_modes(&self, num_modes: usize) -> Result<Self> {
        Self::new(self.period, self.dim, self.class, num_modes)
    }

    /// `FullMeanZero` space able to hold every function of this space.
    pub fn full_equivalent(&self) -> Result<Self> {
        Self::new(self.period, self.dim, SymmetryClass::FullMeanZero, self.max_freq())
    }
}

/// Uniform periodic quadrature grid, `t_i = iT/M` with weights `T/M`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid<S> {
    pub period: S,
    pub times: Vec<S>,
    pub weight: S,
}

impl<S: Real> QuadratureGrid<S> {
    pub fn len(&self) -> usize {
        self.times.len()
    }
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
    pub fn total_weight(&self) -> S {
        self.weight * S::from_usize_lossy(self.times.len())
    }
}

/// Coefficients of a function in a [`SpaceConfig`]; `data[j * dim + d]`
/// multiplies basis mode `j` in component `d`.
#[derive(Debug, Clone)]
pub struct TrajectoryCoeffs<S> {
    space: SpaceConfig<S>,
    data: Vec<S>,
}

impl<S: Real> PartialEq for TrajectoryCoeffs<S> {
    fn eq(&self, other: &Self) -> bool {
        self.space == other.space && self.data == other.data
    }
}

/// Dual fields use the same representation on a `FullMeanZero` space of
/// even dimension.
pub type DualFieldCoeffs<S> = TrajectoryCoeffs<S>;

impl<S: Real> TrajectoryCoeffs<S> {
    pub fn new(space: &SpaceConfig<S>, data: Vec<S>) -> Result<Self> {
        if data.len() != space.coeff_len() {
            return Err(Error::SpaceMismatch(format!(
                "expected {} coefficients, got {}",
                space.coeff_len(),
                data.len()
            )));
        }
        Ok(TrajectoryCoeffs { space: space.clone(), data })
    }

    /// Unit coefficient on basis mode `j`, component `d`.
    pub fn unit(space: &SpaceConfig<S>, j: usize, d: usize) -> Self {
        let mut x = space.zeros();
        x.data[j * space.dim() + d] = S::one();
        x
    }

    pub fn space(&self) -> &SpaceConfig<S> {
        &self.space
    }
    pub fn data(&self) -> &[S] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [S] {
        &mut self.data
    }
    pub fn into_data(self) -> Vec<S> {
        self.data
    }
    #[inline]
    pub fn get(&self, j: usize, d: usize) -> S {
        self.data[j * self.space.dim + d]
    }

    pub fn scaled(&self, s: S) -> Self {
        TrajectoryCoeffs { space: self.space.clone(), data: self.data.iter().map(|&c| c * s).collect() }
    }

    pub fn with_data(&self, data: Vec<S>) -> Self {
        debug_assert_eq!(data.len(), self.data.len());
        TrajectoryCoeffs { space: self.space.clone(), data }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&c| c == S::zero())
    }

    pub fn synthesize(&self) -> Samples<S> {
        let sp = &self.space;
        let (m, nb, dim) = (sp.grid_points, sp.basis_len(), sp.dim);
        let mut values = vec![S::zero(); m * dim];
        let mut derivs = vec![S::zero(); m * dim];
        for i in 0..m {
            for j in 0..nb {
                let (v, dv) = (sp.basis_value(i, j), sp.basis_deriv(i, j));
                for d in 0..dim {
                    let c = self.data[j * dim + d];
                    values[i * dim + d] += c * v;
                    derivs[i * dim + d] += c * dv;
                }
            }
        }
        Samples { dim, values, derivs }
    }

    /// Second derivative samples `ẍ(t_i)` by term-wise differentiation.
    pub fn second_derivative(&self) -> Vec<S> {
        let sp = &self.space;
        let (m, nb, dim) = (sp.grid_points, sp.basis_len(), sp.dim);
        let mut out = vec![S::zero(); m * dim];
        for i in 0..m {
            for j in 0..nb {
                let w = sp.omega(j);
                let v = -w * w * sp.basis_value(i, j);
                for d in 0..dim {
                    out[i * dim + d] += self.data[j * dim + d] * v;
                }
            }
        }
        out
    }

    /// Value and derivative at an arbitrary time.
    pub fn evaluate_at(&self, t: S) -> (Vec<S>, Vec<S>) {
        let sp = &self.space;
        let dim = sp.dim;
        let mut x = vec![S::zero(); dim];
        let mut dx = vec![S::zero(); dim];
        for (j, md) in sp.modes.iter().enumerate() {
            let w = sp.omega(j);
            let (s, c) = (w * t).sin_cos();
            let (v, dv) = match md.trig {
                Trig::Cos => (c, -w * s),
                Trig::Sin => (s, w * c),
            };
            for d in 0..dim {
                x[d] += self.data[j * dim + d] * v;
                dx[d] += self.data[j * dim + d] * dv;
            }
        }
        (x, dx)
    }

    /// Largest raw frequency carrying a nonzero coefficient (0 if none).
    pub fn active_max_freq(&self) -> usize {
        let dim = self.space.dim;
        self.space
            .modes
            .iter()
            .enumerate()
            .filter(|(j, _)| (0..dim).any(|d| self.data[j * dim + d] != S::zero()))
            .map(|(_, m)| m.freq)
            .max()
            .unwrap_or(0)
    }

    /// Copies every coefficient into the matching `(freq, trig)` slot of
    /// `target`. Nonzero coefficients without a slot are an error.
    pub fn reexpand(&self, target: &SpaceConfig<S>) -> Result<Self> {
        if target.dim != self.space.dim || target.period != self.space.period {
            return Err(Error::SpaceMismatch("re-expansion needs equal period and dimension".into()));
        }
        self.remap(target, Some)
    }

    fn remap(&self, target: &SpaceConfig<S>, freq_map: impl Fn(usize) -> Option<usize>) -> Result<Self> {
        let dim = self.space.dim;
        let mut out = target.zeros();
        for (j, md) in self.space.modes.iter().enumerate() {
            let block = &self.data[j * dim..(j + 1) * dim];
            if block.iter().all(|&c| c == S::zero()) {
                continue;
            }
            let slot = freq_map(md.freq).and_then(|f| target.mode_index(f, md.trig));
            match slot {
                Some(k) => out.data[k * dim..(k + 1) * dim].copy_from_slice(block),
                None => {
                    return Err(Error::SpaceMismatch(format!(
                        "mode {:?} has no slot in the target space",
                        md
                    )))
                }
            }
        }
        Ok(out)
    }

    /// Re-expansion in the `FullMeanZero` space with the same frequencies.
    pub fn to_full(&self) -> Result<Self> {
        self.reexpand(&self.space.full_equivalent()?)
    }

    /// `t ↦ x(kt)`: the function with every frequency multiplied by `k`,
    /// expanded in a `FullMeanZero` space large enough to hold it.
    pub fn compress(&self, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("compression factor must be positive".into()));
        }
        let target = SpaceConfig::new(
            self.space.period,
            self.space.dim,
            SymmetryClass::FullMeanZero,
            k * self.space.max_freq(),
        )?;
        self.remap(&target, |f| Some(f * k))
    }

    /// `t ↦ x(t/k)` for a function whose active frequencies are all
    /// multiples of `k`, re-expanded in `target`.
    pub fn stretch(&self, k: usize, target: &SpaceConfig<S>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("stretch factor must be positive".into()));
        }
        self.remap(target, |f| if f % k == 0 { Some(f / k) } else { None })
    }
}

/// Pointwise samples on a space's grid: `values[i * dim + d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples<S> {
    pub dim: usize,
    pub values: Vec<S>,
    pub derivs: Vec<S>,
}

impl<S: Real> Samples<S> {
    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
    pub fn value(&self, i: usize) -> &[S] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }
    pub fn deriv(&self, i: usize) -> &[S] {
        &self.derivs[i * self.dim..(i + 1) * self.dim]
    }
}

/// Synthesizes `x` on `grid`, which must be the grid of `x`'s space.
pub fn synthesize<S: Real>(x: &TrajectoryCoeffs<S>, grid: &QuadratureGrid<S>) -> Result<Samples<S>> {
    let sp = x.space();
    if grid.len() != sp.grid_points() || grid.period != sp.period() {
        return Err(Error::SpaceMismatch(format!(
            "grid of {} points / period {} does not match space ({} points / period {})",
            grid.len(),
            grid.period,
            sp.grid_points(),
            sp.period()
        )));
    }
    Ok(x.synthesize())
}

/// Result of projecting samples onto a space.
#[derive(Debug, Clone)]
pub struct Analysis<S> {
    pub coeffs: TrajectoryCoeffs<S>,
    /// Sup-norm of `samples − synthesize(coeffs)`; nonzero when the samples
    /// carry content outside the space (including a mean).
    pub residual: S,
    /// Time average per component.
    pub mean: Vec<S>,
}

/// Discrete Fourier projection of `values` (`M × dim`, row-major) onto
/// `space`.
pub fn analyze<S: Real>(values: &[S], space: &SpaceConfig<S>) -> Result<Analysis<S>> {
    let (m, nb, dim) = (space.grid_points(), space.basis_len(), space.dim());
    if values.len() != m * dim {
        return Err(Error::SpaceMismatch(format!(
            "expected {} samples, got {}",
            m * dim,
            values.len()
        )));
    }
    let two_over_m = S::lit(2.0) / S::from_usize_lossy(m);
    let mut data = vec![S::zero(); nb * dim];
    for j in 0..nb {
        for d in 0..dim {
            let acc: S = (0..m).map(|i| values[i * dim + d] * space.basis_value(i, j)).sum();
            data[j * dim + d] = acc * two_over_m;
        }
    }
    let mean = (0..dim)
        .map(|d| (0..m).map(|i| values[i * dim + d]).sum::<S>() / S::from_usize_lossy(m))
        .collect();
    let coeffs = TrajectoryCoeffs { space: space.clone(), data };
    let synth = coeffs.synthesize();
    let residual = values
        .iter()
        .zip(&synth.values)
        .fold(S::zero(), |r, (&a, &b)| r.max((a - b).abs()));
    Ok(Analysis { coeffs, residual, mean })
}

/// `(∫|ẋ|²)^{1/2}` by Parseval.
pub fn h1_seminorm<S: Real>(x: &TrajectoryCoeffs<S>) -> S {
    h1_seminorm_sq(x).sqrt()
}

pub fn h1_seminorm_sq<S: Real>(x: &TrajectoryCoeffs<S>) -> S {
    let sp = x.space();
    let half_t = sp.period() / S::lit(2.0);
    let dim = sp.dim();
    let mut acc = S::zero();
    for j in 0..sp.basis_len() {
        let w = sp.omega(j);
        let block: S = (0..dim).map(|d| x.get(j, d) * x.get(j, d)).sum();
        acc += w * w * half_t * block;
    }
    acc
}

/// `(∫|x|²)^{1/2}` by Parseval.
pub fn l2_norm<S: Real>(x: &TrajectoryCoeffs<S>) -> S {
    let half_t = x.space().period() / S::lit(2.0);
    (x.data().iter().map(|&c| c * c).sum::<S>() * half_t).sqrt()
}

/// `L^α` norm by quadrature of `|u(t)|^α`.
pub fn lalpha_norm<S: Real>(u: &TrajectoryCoeffs<S>, alpha: S) -> Result<S> {
    if !(alpha > S::one()) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!("L^alpha norm needs alpha in (1, inf), got {alpha}")));
    }
    let sp = u.space();
    let samples = u.synthesize();
    let acc: S = (0..sp.grid_points())
        .map(|i| crate::scalar::norm2(samples.value(i)).powf(alpha))
        .sum();
    Ok((acc * sp.weight()).powf(S::one() / alpha))
}

/// Grid sup-norm of `|x(t)|`.
pub fn sup_norm<S: Real>(x: &TrajectoryCoeffs<S>) -> S {
    let s = x.synthesize();
    (0..s.len()).fold(S::zero(), |m, i| m.max(crate::scalar::norm2(s.value(i))))
}

fn require_full<S: Real>(u: &TrajectoryCoeffs<S>, what: &str) -> Result<()> {
    if u.space().class() != SymmetryClass::FullMeanZero {
        return Err(Error::SpaceMismatch(format!("{what} needs a FULL_MEANZERO field, got {}", u.space().class())));
    }
    Ok(())
}

/// Mean-zero antiderivative: `d/dt Πu = u`, `∫Πu = 0`.
pub fn pi_operator<S: Real>(u: &DualFieldCoeffs<S>) -> Result<DualFieldCoeffs<S>> {
    require_full(u, "pi_operator")?;
    let sp = u.space();
    let dim = sp.dim();
    let mut out = sp.zeros();
    // FULL layout: mode 2(k-1) is cos k, 2(k-1)+1 is sin k
    for k in 0..sp.num_modes() {
        let (jc, js) = (2 * k, 2 * k + 1);
        let w = sp.omega(jc);
        for d in 0..dim {
            let c = u.get(jc, d);
            let s = u.get(js, d);
            out.data[jc * dim + d] = -s / w;
            out.data[js * dim + d] = c / w;
        }
    }
    Ok(out)
}

/// Term-wise derivative of a `FullMeanZero` field.
pub fn differentiate<S: Real>(u: &DualFieldCoeffs<S>) -> Result<DualFieldCoeffs<S>> {
    require_full(u, "differentiate")?;
    let sp = u.space();
    let dim = sp.dim();
    let mut out = sp.zeros();
    for k in 0..sp.num_modes() {
        let (jc, js) = (2 * k, 2 * k + 1);
        let w = sp.omega(jc);
        for d in 0..dim {
            let c = u.get(jc, d);
            let s = u.get(js, d);
            out.data[jc * dim + d] = s * w;
            out.data[js * dim + d] = -c * w;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryViolation<S> {
    pub identity: &'static str,
    pub max_violation: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryReport<S> {
    pub checks: Vec<SymmetryViolation<S>>,
    pub pass: bool,
}

impl<S: Real> SymmetryReport<S> {
    pub fn worst(&self) -> S {
        self.checks.iter().fold(S::zero(), |m, c| m.max(c.max_violation))
    }
}

/// Checks the identities defining `class` on uniform samples
/// (`values[i * dim + d]`, `M` divisible by 4).
pub fn symmetry_check<S: Real>(
    values: &[S],
    dim: usize,
    class: SymmetryClass,
    tol: S,
) -> Result<SymmetryReport<S>> {
    if dim == 0 || !values.len().is_multiple_of(dim) {
        return Err(Error::InvalidArgument("sample length is not a multiple of the dimension".into()));
    }
    let m = values.len() / dim;
    if m == 0 || !m.is_multiple_of(4) {
        return Err(Error::InvalidArgument(format!("grid of {m} points is not divisible by 4")));
    }
    let at = |i: usize, d: usize| values[(i % m) * dim + d];
    // violation of x(c + s) = sign * x(c - s) for c = centre index
    let reflect = |centre: usize, sign: S| -> S {
        let mut worst = S::zero();
        for i in 0..m {
            for d in 0..dim {
                let a = at(centre + i, d);
                let b = at(centre + m - i, d);
                worst = worst.max((a - sign * b).abs());
            }
        }
        worst
    };
    let mut checks = Vec::new();
    match class {
        SymmetryClass::E1 => {
            checks.push(SymmetryViolation { identity: "even about t=0", max_violation: reflect(0, S::one()) });
            checks.push(SymmetryViolation { identity: "even about t=T/2", max_violation: reflect(m / 2, S::one()) });
            checks.push(SymmetryViolation { identity: "odd about t=T/4", max_violation: reflect(m / 4, -S::one()) });
            checks.push(SymmetryViolation { identity: "odd about t=3T/4", max_violation: reflect(3 * m / 4, -S::one()) });
        }
        SymmetryClass::E2 => {
            let mut worst = S::zero();
            for i in 0..m {
                for d in 0..dim {
                    worst = worst.max((at(i + m / 2, d) + at(i, d)).abs());
                }
            }
            checks.push(SymmetryViolation { identity: "x(t+T/2) = -x(t)", max_violation: worst });
        }
        SymmetryClass::E3 => {
            checks.push(SymmetryViolation { identity: "odd about t=0", max_violation: reflect(0, -S::one()) });
        }
        SymmetryClass::FullMeanZero => {
            let mut worst = S::zero();
            for d in 0..dim {
                let mean = (0..m).map(|i| at(i, d)).sum::<S>() / S::from_usize_lossy(m);
                worst = worst.max(mean.abs());
            }
            checks.push(SymmetryViolation { identity: "zero mean", max_violation: worst });
        }
    }
    let pass = checks.iter().all(|c| c.max_violation <= tol);
    Ok(SymmetryReport { checks, pass })
}

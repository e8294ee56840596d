//! The direct action `ψ(x) = ½∫|ẋ|² − ∫V(x)` and the Clarke dual action
//! `Φ(u) = ½a(u,u) + ∫G(u)`, `a(u,v) = ∫(Ju, Πv)`, with their gradients in
//! coefficient space.
//!
//! Kinetic and quadratic parts are evaluated spectrally; `V` and `G` terms
//! always go through grid quadrature, even where closed forms exist.

use crate::error::{Error, Result};
use crate::fiber::{FiberKind, FiberProblem, RayMap};
use crate::models::{FenchelPair, PotentialModel};
use crate::scalar::{dot, Real};
use crate::symfun::{lalpha_norm, pi_operator, SpaceConfig, SymmetryClass, TrajectoryCoeffs};

/// Default dead-band for [`cone_classify`], relative to `‖u‖²_α`.
pub const DEFAULT_CONE_TOL: f64 = 1e-10;

fn check_finite<S: Real>(v: S, what: &str) -> Result<S> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

fn check_len<S: Real>(space: &SpaceConfig<S>, x: &[S]) -> Result<()> {
    if x.len() != space.coeff_len() {
        return Err(Error::SpaceMismatch(format!(
            "expected {} coefficients, got {}",
            space.coeff_len(),
            x.len()
        )));
    }
    Ok(())
}

/// Grid samples of the coefficient vector `c`; `values[i * dim + d]`.
fn sample_values<S: Real>(space: &SpaceConfig<S>, c: &[S]) -> Vec<S> {
    let (m, nb, dim) = (space.grid_points(), space.basis_len(), space.dim());
    let mut out = vec![S::zero(); m * dim];
    for i in 0..m {
        for j in 0..nb {
            let v = space.basis_value(i, j);
            for d in 0..dim {
                out[i * dim + d] += c[j * dim + d] * v;
            }
        }
    }
    out
}

/// `Σ_i w f_i[d] φ_j(t_i)`: projection of sampled `f` onto every mode.
fn project_samples<S: Real>(space: &SpaceConfig<S>, f: &[S]) -> Vec<S> {
    let (m, nb, dim) = (space.grid_points(), space.basis_len(), space.dim());
    let w = space.weight();
    let mut out = vec![S::zero(); nb * dim];
    for j in 0..nb {
        for d in 0..dim {
            let acc: S = (0..m).map(|i| f[i * dim + d] * space.basis_value(i, j)).sum();
            out[j * dim + d] = acc * w;
        }
    }
    out
}

/// Evaluation context for `ψ` on a symmetric trajectory space.
#[derive(Debug, Clone)]
pub struct DirectActionContext<S: Real> {
    space: SpaceConfig<S>,
    potential: PotentialModel<S>,
    /// `ω_j² T/2` per coefficient.
    kinetic: Vec<S>,
}

impl<S: Real> DirectActionContext<S> {
    pub fn new(space: SpaceConfig<S>, potential: PotentialModel<S>) -> Result<Self> {
        if potential.dim() != space.dim() {
            return Err(Error::SpaceMismatch(format!(
                "potential acts on R^{}, space has dimension {}",
                potential.dim(),
                space.dim()
            )));
        }
        let half_t = space.period() / S::lit(2.0);
        let kinetic = (0..space.basis_len())
            .flat_map(|j| {
                let w = space.omega(j);
                std::iter::repeat_n(w * w * half_t, space.dim())
            })
            .collect();
        Ok(DirectActionContext { space, potential, kinetic })
    }

    pub fn space(&self) -> &SpaceConfig<S> {
        &self.space
    }
    pub fn potential(&self) -> &PotentialModel<S> {
        &self.potential
    }
    /// Diagonal of the kinetic quadratic form `∫ẋ·ẏ` in coefficients.
    pub fn kinetic_weights(&self) -> &[S] {
        &self.kinetic
    }

    pub fn kinetic_energy(&self, c: &[S]) -> S {
        c.iter().zip(&self.kinetic).map(|(&a, &k)| k * a * a).sum::<S>() / S::lit(2.0)
    }

    /// `I(x) = ∫V(x)` by quadrature.
    pub fn potential_integral(&self, c: &[S]) -> Result<S> {
        check_len(&self.space, c)?;
        let dim = self.space.dim();
        let samples = sample_values(&self.space, c);
        let total: S = samples.chunks(dim).map(|x| self.potential.value(x)).sum();
        check_finite(total * self.space.weight(), "potential integral")
    }

    pub fn action(&self, c: &[S]) -> Result<S> {
        Ok(self.kinetic_energy(c) - self.potential_integral(c)?)
    }

    pub fn gradient(&self, c: &[S]) -> Result<Vec<S>> {
        check_len(&self.space, c)?;
        let dim = self.space.dim();
        let samples = sample_values(&self.space, c);
        let mut vp = vec![S::zero(); samples.len()];
        for (x, g) in samples.chunks(dim).zip(vp.chunks_mut(dim)) {
            self.potential.gradient(x, g);
        }
        let proj = project_samples(&self.space, &vp);
        let grad: Vec<S> = c
            .iter()
            .zip(&self.kinetic)
            .zip(&proj)
            .map(|((&a, &k), &p)| k * a - p)
            .collect();
        if grad.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("direct gradient".into()));
        }
        Ok(grad)
    }

    /// `ψ″(x)` in coefficients: kinetic diagonal minus `∫V″(x)φ_iφ_j`.
    pub fn hessian(&self, c: &[S]) -> Result<Vec<S>> {
        check_len(&self.space, c)?;
        let sp = &self.space;
        let (m, nb, dim) = (sp.grid_points(), sp.basis_len(), sp.dim());
        let n = nb * dim;
        let w = sp.weight();
        let samples = sample_values(sp, c);
        let mut hv = vec![S::zero(); dim * dim];
        let mut out = vec![S::zero(); n * n];
        for i in 0..m {
            self.potential.hessian(&samples[i * dim..(i + 1) * dim], &mut hv);
            for a in 0..nb {
                let pa = sp.basis_value(i, a) * w;
                for b in 0..nb {
                    let pab = pa * sp.basis_value(i, b);
                    for d in 0..dim {
                        for e in 0..dim {
                            out[(a * dim + d) * n + b * dim + e] -= hv[d * dim + e] * pab;
                        }
                    }
                }
            }
        }
        for (r, &k) in self.kinetic.iter().enumerate() {
            out[r * n + r] += k;
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("direct Hessian".into()));
        }
        Ok(out)
    }

    /// Ray `s ↦ ψ(se)` for the fiber analysis.
    pub fn fiber(&self, e: &[S]) -> Result<FiberProblem<S, DirectRay<'_, S>>> {
        check_len(&self.space, e)?;
        let k2 = self.kinetic_energy(e) * S::lit(2.0);
        if !(k2 > S::zero()) {
            return Err(Error::InvalidArgument("fiber direction must be nonzero".into()));
        }
        let ray = DirectRay { ctx: self, samples: sample_values(&self.space, e), k2 };
        Ok(FiberProblem { kind: FiberKind::Direct, kappa: k2, ray })
    }
}

/// `ψ(x)` for `x` in `ctx`'s space.
pub fn direct_action<S: Real>(ctx: &DirectActionContext<S>, x: &TrajectoryCoeffs<S>) -> Result<S> {
    ensure_space(ctx.space(), x)?;
    ctx.action(x.data())
}

/// Gradient of `ψ` with respect to the raw coefficients.
pub fn direct_gradient<S: Real>(ctx: &DirectActionContext<S>, x: &TrajectoryCoeffs<S>) -> Result<Vec<S>> {
    ensure_space(ctx.space(), x)?;
    ctx.gradient(x.data())
}

fn ensure_space<S: Real>(space: &SpaceConfig<S>, x: &TrajectoryCoeffs<S>) -> Result<()> {
    if x.space() != space {
        return Err(Error::SpaceMismatch("coefficients belong to another space".into()));
    }
    Ok(())
}

/// `φ(s) = ½s²‖e‖² − ∫V(s e)`.
pub struct DirectRay<'a, S: Real> {
    ctx: &'a DirectActionContext<S>,
    samples: Vec<S>,
    k2: S,
}

impl<S: Real> RayMap<S> for DirectRay<'_, S> {
    fn eval(&self, s: S) -> Result<(S, S)> {
        let dim = self.ctx.space.dim();
        let mut x = vec![S::zero(); dim];
        let mut g = vec![S::zero(); dim];
        let (mut pot, mut slope) = (S::zero(), S::zero());
        for e in self.samples.chunks(dim) {
            for d in 0..dim {
                x[d] = s * e[d];
            }
            pot += self.ctx.potential.value(&x);
            self.ctx.potential.gradient(&x, &mut g);
            slope += dot(&g, e);
        }
        let w = self.ctx.space.weight();
        let phi = check_finite(s * s * self.k2 / S::lit(2.0) - pot * w, "fiber value")?;
        let dphi = check_finite(s * self.k2 - slope * w, "fiber slope")?;
        Ok((phi, dphi))
    }
}

/// Which side of `a(u,u) = 0` a field lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Cone {
    #[serde(rename = "P_PLUS")]
    Plus,
    #[serde(rename = "P_MINUS")]
    Minus,
    #[serde(rename = "P_ZERO")]
    Zero,
}

/// Applies the standard symplectic matrix `J = [[0, I], [−I, 0]]`.
pub fn apply_j<S: Real>(z: &[S], out: &mut [S]) {
    let n = z.len() / 2;
    for i in 0..n {
        out[i] = z[n + i];
        out[n + i] = -z[i];
    }
}

fn require_dual_space<S: Real>(space: &SpaceConfig<S>) -> Result<()> {
    if space.class() != SymmetryClass::FullMeanZero || !space.dim().is_multiple_of(2) {
        return Err(Error::SpaceMismatch(format!(
            "dual fields live in an even-dimensional FULL_MEANZERO space, got {} of dimension {}",
            space.class(),
            space.dim()
        )));
    }
    Ok(())
}

/// `a(u,v) = ∫(Ju, Πv)` computed spectrally. Per frequency `k` with cosine
/// and sine vectors `(c, s)`, `a(u,u) = −(T²/2πk)(Jc)·s`.
pub fn quadratic_form_a<S: Real>(u: &TrajectoryCoeffs<S>, v: &TrajectoryCoeffs<S>) -> Result<S> {
    if u.space() != v.space() {
        return Err(Error::SpaceMismatch("a(u,v) needs both fields in one space".into()));
    }
    require_dual_space(u.space())?;
    Ok(quadratic_form_raw(u.space(), u.data(), v.data()))
}

fn quadratic_form_raw<S: Real>(space: &SpaceConfig<S>, u: &[S], v: &[S]) -> S {
    let dim = space.dim();
    let t = space.period();
    let mut jc = vec![S::zero(); dim];
    let mut acc = S::zero();
    for k in 0..space.num_modes() {
        let (ic, is) = (2 * k * dim, (2 * k + 1) * dim);
        let coef = t / space.omega(2 * k);
        apply_j(&u[ic..ic + dim], &mut jc);
        let a = dot(&jc, &v[is..is + dim]);
        apply_j(&v[ic..ic + dim], &mut jc);
        let b = dot(&jc, &u[is..is + dim]);
        acc -= coef * (a + b) / S::lit(2.0);
    }
    acc
}

/// Sign of `a(u,u)` with dead-band `|a| ≤ tol·‖u‖²_α` mapped to `P_ZERO`.
pub fn cone_classify<S: Real>(u: &TrajectoryCoeffs<S>, alpha: S, tol: S) -> Result<Cone> {
    if u.is_zero() {
        return Err(Error::InvalidArgument("cone of the zero field is undefined".into()));
    }
    let a = quadratic_form_a(u, u)?;
    let n = lalpha_norm(u, alpha)?;
    Ok(if a.abs() <= tol * n * n {
        Cone::Zero
    } else if a < S::zero() {
        Cone::Minus
    } else {
        Cone::Plus
    })
}

/// Evaluation context for the dual action on mean-zero fields.
#[derive(Debug, Clone)]
pub struct DualActionContext<S: Real> {
    space: SpaceConfig<S>,
    pair: FenchelPair<S>,
}

impl<S: Real> DualActionContext<S> {
    pub fn new(space: SpaceConfig<S>, pair: FenchelPair<S>) -> Result<Self> {
        require_dual_space(&space)?;
        if pair.dim() != space.dim() {
            return Err(Error::SpaceMismatch(format!(
                "Hamiltonian acts on R^{}, space has dimension {}",
                pair.dim(),
                space.dim()
            )));
        }
        Ok(DualActionContext { space, pair })
    }

    pub fn space(&self) -> &SpaceConfig<S> {
        &self.space
    }
    pub fn pair(&self) -> &FenchelPair<S> {
        &self.pair
    }
    pub fn alpha(&self) -> S {
        self.pair.alpha()
    }

    pub fn quadratic(&self, u: &[S], v: &[S]) -> S {
        quadratic_form_raw(&self.space, u, v)
    }

    /// `b(u) = ∫G(u)`.
    pub fn conjugate_integral(&self, c: &[S]) -> Result<S> {
        check_len(&self.space, c)?;
        let dim = self.space.dim();
        let samples = sample_values(&self.space, c);
        let mut total = S::zero();
        for y in samples.chunks(dim) {
            total += self.pair.value(y)?;
        }
        check_finite(total * self.space.weight(), "conjugate integral")
    }

    pub fn action(&self, c: &[S]) -> Result<S> {
        Ok(self.quadratic(c, c) / S::lit(2.0) + self.conjugate_integral(c)?)
    }

    /// Gradient: projection onto the basis of the mean-zero part of
    /// `G′(u) − JΠu`.
    pub fn gradient(&self, c: &[S]) -> Result<Vec<S>> {
        check_len(&self.space, c)?;
        let sp = &self.space;
        let dim = sp.dim();
        let m = sp.grid_points();
        let u = TrajectoryCoeffs::new(sp, c.to_vec())?;
        let pi_u = pi_operator(&u)?;
        let u_samples = sample_values(sp, c);
        let pi_samples = sample_values(sp, pi_u.data());
        let mut field = vec![S::zero(); m * dim];
        let mut jp = vec![S::zero(); dim];
        for i in 0..m {
            let (_, gp) = self.pair.value_and_gradient(&u_samples[i * dim..(i + 1) * dim])?;
            apply_j(&pi_samples[i * dim..(i + 1) * dim], &mut jp);
            for d in 0..dim {
                field[i * dim + d] = gp[d] - jp[d];
            }
        }
        // the constraint ∫u = 0 only sees the field modulo constants
        for d in 0..dim {
            let mean = (0..m).map(|i| field[i * dim + d]).sum::<S>() / S::from_usize_lossy(m);
            for i in 0..m {
                field[i * dim + d] -= mean;
            }
        }
        let grad = project_samples(sp, &field);
        if grad.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dual gradient".into()));
        }
        Ok(grad)
    }

    /// Ray `s ↦ Φ(se)`; `e` must lie in the negative cone.
    pub fn fiber(&self, e: &[S]) -> Result<FiberProblem<S, DualRay<'_, S>>> {
        check_len(&self.space, e)?;
        let kappa = self.quadratic(e, e);
        if !(kappa < S::zero()) {
            return Err(Error::NotNegativeCone(kappa.as_f64()));
        }
        let ray = DualRay { ctx: self, samples: sample_values(&self.space, e), kappa };
        Ok(FiberProblem { kind: FiberKind::Dual, kappa, ray })
    }
}

/// `Φ(u)`.
pub fn dual_action<S: Real>(ctx: &DualActionContext<S>, u: &TrajectoryCoeffs<S>) -> Result<S> {
    ensure_space(ctx.space(), u)?;
    ctx.action(u.data())
}

/// Gradient of `Φ` with respect to the raw coefficients.
pub fn dual_gradient<S: Real>(ctx: &DualActionContext<S>, u: &TrajectoryCoeffs<S>) -> Result<Vec<S>> {
    ensure_space(ctx.space(), u)?;
    ctx.gradient(u.data())
}

/// `φ(s) = ½a(e,e)s² + ∫G(se)`.
pub struct DualRay<'a, S: Real> {
    ctx: &'a DualActionContext<S>,
    samples: Vec<S>,
    kappa: S,
}

impl<S: Real> RayMap<S> for DualRay<'_, S> {
    fn eval(&self, s: S) -> Result<(S, S)> {
        let dim = self.ctx.space.dim();
        let mut y = vec![S::zero(); dim];
        let (mut b, mut slope) = (S::zero(), S::zero());
        for e in self.samples.chunks(dim) {
            for d in 0..dim {
                y[d] = s * e[d];
            }
            let (g, gp) = self.ctx.pair.value_and_gradient(&y)?;
            b += g;
            slope += dot(&gp, e);
        }
        let w = self.ctx.space.weight();
        let phi = check_finite(self.kappa * s * s / S::lit(2.0) + b * w, "fiber value")?;
        let dphi = check_finite(self.kappa * s + slope * w, "fiber slope")?;
        Ok((phi, dphi))
    }
}

use super::{fd_gradient, fd_hessian, norm, AnisotropicPower, ModelSpec, Quadratic, RadialPower, ScalarField};
use crate::error::{Error, Result};
use crate::scalar::Real;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fmt;
use std::sync::Arc;

/// `|x|² (ln(1+|x|^p))^q`, written radially as `V = r² g(r)`-style
/// quantities: `V′(x) = g(r) x` with `g = L^q (2 + qpρ)`,
/// `L = ln(1+r^p)`, `ρ = r^p / ((1+r^p) L)`.
struct LogQuadratic<S> {
    p: S,
    q: S,
}

impl<S: Real> LogQuadratic<S> {
    /// Returns `(L, ρ)`.
    fn parts(&self, r: S) -> (S, S) {
        let rp = r.powf(self.p);
        let l = rp.ln_1p();
        let a = rp / (S::one() + rp);
        let rho = if l > S::zero() { a / l } else { S::one() };
        (l, rho)
    }

    fn radial_g(&self, r: S) -> S {
        let (l, rho) = self.parts(r);
        l.powf(self.q) * (S::lit(2.0) + self.q * self.p * rho)
    }
}

impl<S: Real> ScalarField<S> for LogQuadratic<S> {
    fn value(&self, x: &[S]) -> S {
        let r = norm(x);
        r * r * r.powf(self.p).ln_1p().powf(self.q)
    }
    fn gradient(&self, x: &[S], out: &mut [S]) {
        let r = norm(x);
        let g = if r == S::zero() { S::zero() } else { self.radial_g(r) };
        for (o, &v) in out.iter_mut().zip(x) {
            *o = g * v;
        }
    }
    fn hessian(&self, x: &[S], out: &mut [S]) -> bool {
        let n = x.len();
        out.iter_mut().for_each(|v| *v = S::zero());
        let r = norm(x);
        if r == S::zero() {
            return true;
        }
        let (l, rho) = self.parts(r);
        let (p, q) = (self.p, self.q);
        let lq = l.powf(q);
        let g = lq * (S::lit(2.0) + q * p * rho);
        // r·g′(r)
        let one_plus = S::one() / (S::one() + r.powf(p));
        let rg = q * p * rho * lq * ((S::lit(2.0) + q * p * rho) + p * (one_plus - rho));
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = rg * x[i] * x[j] / (r * r);
            }
            out[i * n + i] += g;
        }
        true
    }
}

/// A potential `V : ℝ^N → ℝ` normalized so that `V(0) = 0`.
#[derive(Clone)]
pub struct PotentialModel<S: Real> {
    name: String,
    spec: ModelSpec,
    dim: usize,
    field: Arc<dyn ScalarField<S>>,
    offset: S,
    claims_even: bool,
}

impl<S: Real> fmt::Debug for PotentialModel<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PotentialModel")
            .field("name", &self.name)
            .field("spec", &self.spec)
            .field("dim", &self.dim)
            .field("claims_even", &self.claims_even)
            .finish()
    }
}

impl<S: Real> PotentialModel<S> {
    /// Wraps a user-supplied field. `V(0)` is subtracted.
    pub fn from_field(name: &str, dim: usize, field: Arc<dyn ScalarField<S>>, claims_even: bool) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("potential dimension must be at least 1".into()));
        }
        let offset = field.value(&vec![S::zero(); dim]);
        if !offset.is_finite() {
            return Err(Error::NonFinite(format!("V(0) of `{name}`")));
        }
        Ok(PotentialModel { name: name.to_string(), spec: ModelSpec::new(name), dim, field, offset, claims_even })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn claims_even(&self) -> bool {
        self.claims_even
    }

    pub fn value(&self, x: &[S]) -> S {
        self.field.value(x) - self.offset
    }

    pub fn gradient(&self, x: &[S], out: &mut [S]) {
        self.field.gradient(x, out)
    }

    pub fn gradient_vec(&self, x: &[S]) -> Vec<S> {
        let mut g = vec![S::zero(); x.len()];
        self.field.gradient(x, &mut g);
        g
    }

    /// Analytic Hessian when available, central differences otherwise.
    pub fn hessian(&self, x: &[S], out: &mut [S]) {
        if !self.field.hessian(x, out) {
            fd_hessian(self.field.as_ref(), x, out);
        }
    }

    pub fn hessian_vec(&self, x: &[S]) -> Vec<S> {
        let mut h = vec![S::zero(); x.len() * x.len()];
        self.hessian(x, &mut h);
        h
    }

    pub fn field(&self) -> &dyn ScalarField<S> {
        self.field.as_ref()
    }
}

fn positive(spec: &ModelSpec, key: &str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidArgument(format!("`{key}` of model `{}` must be positive, got {value}", spec.name)))
    }
}

/// Built-in potential families:
///
/// * `power`: `|x|^β/β`, `β > 2` (param `beta`, default 4)
/// * `log_quadratic`: `|x|²(ln(1+|x|^p))^q`, `p, q > 0` (default 1, 1)
/// * `quadratic`: `ω²|x|²/2` (param `omega`, default 1); a negative control
/// * `anisotropic_power`: `Σ λ_d |x_d|^β/β` (params `beta`, `lambda`)
pub fn builtin_potential<S: Real>(spec: &ModelSpec, dim: usize) -> Result<PotentialModel<S>> {
    if dim == 0 {
        return Err(Error::InvalidArgument("potential dimension must be at least 1".into()));
    }
    let field: Arc<dyn ScalarField<S>> = match spec.name.as_str() {
        "power" => {
            spec.check_keys(&["beta"])?;
            let beta = spec.scalar_or("beta", 4.0)?;
            if !(beta > 2.0) {
                return Err(Error::InvalidArgument(format!("power potential needs beta > 2, got {beta}")));
            }
            Arc::new(RadialPower { beta: S::lit(beta) })
        }
        "log_quadratic" => {
            spec.check_keys(&["p", "q"])?;
            let p = positive(spec, "p", spec.scalar_or("p", 1.0)?)?;
            let q = positive(spec, "q", spec.scalar_or("q", 1.0)?)?;
            Arc::new(LogQuadratic { p: S::lit(p), q: S::lit(q) })
        }
        "quadratic" => {
            spec.check_keys(&["omega"])?;
            let omega = positive(spec, "omega", spec.scalar_or("omega", 1.0)?)?;
            Arc::new(Quadratic { omega_sq: S::lit(omega * omega) })
        }
        "anisotropic_power" => {
            spec.check_keys(&["beta", "lambda"])?;
            let beta = spec.scalar_or("beta", 4.0)?;
            if !(beta > 2.0) {
                return Err(Error::InvalidArgument(format!("anisotropic power needs beta > 2, got {beta}")));
            }
            let lambdas = spec.list("lambda")?.unwrap_or_else(|| vec![1.0; dim]);
            if lambdas.len() != dim {
                return Err(Error::InvalidArgument(format!("`lambda` needs {dim} entries, got {}", lambdas.len())));
            }
            for &l in &lambdas {
                positive(spec, "lambda", l)?;
            }
            Arc::new(AnisotropicPower { beta: S::lit(beta), lambdas: lambdas.into_iter().map(S::lit).collect() })
        }
        other => return Err(Error::UnknownModel(other.to_string())),
    };
    let mut model = PotentialModel::from_field(&spec.name, dim, field, true)?;
    model.spec = spec.clone();
    Ok(model)
}

/// Largest relative deviation between the analytic gradient and central
/// differences of `V` over `n_points` seeded points in the ball of radius
/// `radius`.
pub fn gradient_self_test<S: Real>(field: &dyn ScalarField<S>, dim: usize, n_points: usize, radius: f64, seed: u64) -> S {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = S::zero();
    let mut g = vec![S::zero(); dim];
    for _ in 0..n_points {
        let x: Vec<S> = (0..dim).map(|_| S::lit(rng.random_range(-radius..radius))).collect();
        field.gradient(&x, &mut g);
        let fd = fd_gradient(field, &x);
        let scale = crate::scalar::max_abs(&g).max(S::lit(1e-12));
        let err = g.iter().zip(&fd).fold(S::zero(), |m, (&a, &b)| m.max((a - b).abs()));
        worst = worst.max(err / scale);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(spec: ModelSpec, dim: usize) -> PotentialModel<f64> {
        builtin_potential(&spec, dim).unwrap()
    }

    #[test]
    fn quartic_values_at_two() {
        let v = model(ModelSpec::new("power").with("beta", 4.0), 1);
        let x = [2.0];
        assert_eq!(v.value(&x), 4.0);
        let g = v.gradient_vec(&x);
        assert_eq!(g[0], 8.0);
        let h = v.hessian_vec(&x);
        let vxx = h[0] * x[0] * x[0];
        assert!((vxx - 48.0).abs() < 1e-12);
        assert_eq!(g[0] * x[0], 16.0);
        // finite-difference re-check
        let fd = fd_gradient(v.field(), &x);
        assert!((fd[0] - 8.0).abs() < 1e-8);
    }

    #[test]
    fn quadratic_is_the_equality_edge() {
        let v = model(ModelSpec::new("quadratic"), 2);
        let x = [0.3, -1.7];
        let g = v.gradient_vec(&x);
        let h = v.hessian_vec(&x);
        let gx: f64 = g.iter().zip(&x).map(|(a, b)| a * b).sum();
        let hxx: f64 = (0..2).map(|i| (0..2).map(|j| h[i * 2 + j] * x[i] * x[j]).sum::<f64>()).sum();
        assert!((gx - hxx).abs() < 1e-14);
        assert!((v.value(&x) / (x[0] * x[0] + x[1] * x[1]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn log_quadratic_is_subquadratic_at_origin() {
        let v = model(ModelSpec::new("log_quadratic"), 1);
        let mut last = f64::INFINITY;
        for e in 1..9 {
            let r = 10f64.powi(-e);
            let ratio = v.value(&[r]) / (r * r);
            assert!(ratio < last);
            last = ratio;
        }
        assert!(last < 1e-7);
    }

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let specs = [
            (ModelSpec::new("power").with("beta", 4.0), 2),
            (ModelSpec::new("power").with("beta", 3.0), 3),
            (ModelSpec::new("log_quadratic").with("p", 1.0).with("q", 1.0), 2),
            (ModelSpec::new("log_quadratic").with("p", 2.0).with("q", 0.5), 1),
            (ModelSpec::new("quadratic").with("omega", 0.7), 2),
            (ModelSpec::new("anisotropic_power").with("beta", 4.0).with_list("lambda", vec![1.0, 2.0]), 2),
        ];
        for (spec, dim) in specs {
            let v = model(spec.clone(), dim);
            let err = gradient_self_test(v.field(), dim, 100, 10.0, 7);
            assert!(err < 1e-6, "{spec:?}: {err}");
        }
    }

    #[test]
    fn analytic_hessians_match_finite_differences() {
        let specs = [
            (ModelSpec::new("power").with("beta", 4.0), 2),
            (ModelSpec::new("log_quadratic").with("p", 1.0).with("q", 1.0), 2),
            (ModelSpec::new("log_quadratic").with("p", 1.5).with("q", 2.0), 3),
            (ModelSpec::new("anisotropic_power").with("beta", 3.0).with_list("lambda", vec![1.0, 2.0]), 2),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (spec, dim) in specs {
            let v = model(spec.clone(), dim);
            for _ in 0..20 {
                let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect();
                let h = v.hessian_vec(&x);
                let mut fd = vec![0.0; dim * dim];
                fd_hessian(v.field(), &x, &mut fd);
                let scale = h.iter().fold(1e-12f64, |m, a| m.max(a.abs()));
                for (a, b) in h.iter().zip(&fd) {
                    assert!((a - b).abs() < 1e-6 * scale, "{spec:?} at {x:?}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn rejects_bad_names_and_params() {
        assert!(matches!(
            builtin_potential::<f64>(&ModelSpec::new("cubic"), 1),
            Err(Error::UnknownModel(_))
        ));
        assert!(builtin_potential::<f64>(&ModelSpec::new("power").with("beta", 2.0), 1).is_err());
        assert!(builtin_potential::<f64>(&ModelSpec::new("log_quadratic").with("p", 0.0), 1).is_err());
        assert!(builtin_potential::<f64>(&ModelSpec::new("power").with("gamma", 3.0), 1).is_err());
        assert!(builtin_potential::<f64>(
            &ModelSpec::new("anisotropic_power").with_list("lambda", vec![1.0]),
            2
        )
        .is_err());
    }

    #[test]
    fn user_field_is_normalized_at_origin() {
        struct Shifted;
        impl ScalarField<f64> for Shifted {
            fn value(&self, x: &[f64]) -> f64 {
                3.0 + x[0].powi(4)
            }
            fn gradient(&self, x: &[f64], out: &mut [f64]) {
                out[0] = 4.0 * x[0].powi(3);
            }
        }
        let v = PotentialModel::from_field("shifted", 1, Arc::new(Shifted), true).unwrap();
        assert_eq!(v.value(&[0.0]), 0.0);
        assert_eq!(v.value(&[1.0]), 1.0);
        // no analytic Hessian: finite-difference fallback
        let h = v.hessian_vec(&[1.0]);
        assert!((h[0] - 12.0).abs() < 1e-6);
    }
}

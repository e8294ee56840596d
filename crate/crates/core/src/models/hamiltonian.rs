use super::{fd_hessian, AnisotropicPower, ModelSpec, Quadratic, RadialPower, ScalarField};
use crate::error::{Error, Result};
use crate::scalar::Real;
use std::fmt;
use std::sync::Arc;

/// A Hamiltonian `H : ℝ^{2n} → ℝ` normalized so that `H(0) = 0`.
#[derive(Clone)]
pub struct HamiltonianModel<S: Real> {
    name: String,
    spec: ModelSpec,
    dim: usize,
    field: Arc<dyn ScalarField<S>>,
    offset: S,
    claims_strictly_convex: bool,
    growth_beta: Option<S>,
}

impl<S: Real> fmt::Debug for HamiltonianModel<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianModel")
            .field("name", &self.name)
            .field("spec", &self.spec)
            .field("dim", &self.dim)
            .field("growth_beta", &self.growth_beta)
            .finish()
    }
}

impl<S: Real> HamiltonianModel<S> {
    pub fn from_field(
        name: &str,
        dim: usize,
        field: Arc<dyn ScalarField<S>>,
        claims_strictly_convex: bool,
        growth_beta: Option<S>,
    ) -> Result<Self> {
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!("Hamiltonian dimension must be even and positive, got {dim}")));
        }
        let offset = field.value(&vec![S::zero(); dim]);
        if !offset.is_finite() {
            return Err(Error::NonFinite(format!("H(0) of `{name}`")));
        }
        Ok(HamiltonianModel {
            name: name.to_string(),
            spec: ModelSpec::new(name),
            dim,
            field,
            offset,
            claims_strictly_convex,
            growth_beta,
        })
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
    pub fn claims_strictly_convex(&self) -> bool {
        self.claims_strictly_convex
    }
    pub fn growth_beta(&self) -> Option<S> {
        self.growth_beta
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

    pub fn hessian(&self, x: &[S], out: &mut [S]) {
        if !self.field.hessian(x, out) {
            fd_hessian(self.field.as_ref(), x, out);
        }
    }

    pub fn field(&self) -> &dyn ScalarField<S> {
        self.field.as_ref()
    }
}

/// Built-in Hamiltonians on `ℝ^dim` (`dim` even):
///
/// * `power`: `|z|^β/β` with `β > 2`
/// * `anisotropic_power`: `Σ λ_d |z_d|^β/β` with `β > 2`
/// * `quadratic`: `ω²|z|²/2`, the quadratic negative control (`β = 2`)
pub fn builtin_hamiltonian<S: Real>(spec: &ModelSpec, dim: usize) -> Result<HamiltonianModel<S>> {
    let superquadratic = |beta: f64| {
        if beta > 2.0 {
            Ok(beta)
        } else {
            Err(Error::InvalidArgument(format!("Hamiltonian `{}` needs beta > 2, got {beta}", spec.name)))
        }
    };
    let (field, beta): (Arc<dyn ScalarField<S>>, f64) = match spec.name.as_str() {
        "power" => {
            spec.check_keys(&["beta"])?;
            let beta = superquadratic(spec.scalar_or("beta", 4.0)?)?;
            (Arc::new(RadialPower { beta: S::lit(beta) }), beta)
        }
        "anisotropic_power" => {
            spec.check_keys(&["beta", "lambda"])?;
            let beta = superquadratic(spec.scalar_or("beta", 4.0)?)?;
            let lambdas = spec.list("lambda")?.unwrap_or_else(|| vec![1.0; dim]);
            if lambdas.len() != dim || lambdas.iter().any(|&l| !(l > 0.0)) {
                return Err(Error::InvalidArgument(format!("`lambda` needs {dim} positive entries")));
            }
            (
                Arc::new(AnisotropicPower { beta: S::lit(beta), lambdas: lambdas.into_iter().map(S::lit).collect() }),
                beta,
            )
        }
        "quadratic" => {
            spec.check_keys(&["omega"])?;
            let omega = spec.scalar_or("omega", 1.0)?;
            if !(omega > 0.0) {
                return Err(Error::InvalidArgument(format!("`omega` must be positive, got {omega}")));
            }
            (Arc::new(Quadratic { omega_sq: S::lit(omega * omega) }), 2.0)
        }
        other => return Err(Error::UnknownModel(other.to_string())),
    };
    let mut model = HamiltonianModel::from_field(&spec.name, dim, field, true, Some(S::lit(beta)))?;
    model.spec = spec.clone();
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::gradient_self_test;

    #[test]
    fn quartic_at_unit_vector() {
        let h: HamiltonianModel<f64> = builtin_hamiltonian(&ModelSpec::new("power").with("beta", 4.0), 2).unwrap();
        assert_eq!(h.value(&[1.0, 0.0]), 0.25);
        assert_eq!(h.gradient_vec(&[1.0, 0.0]), vec![1.0, 0.0]);
        assert_eq!(h.value(&[0.0, 0.0]), 0.0);
        assert_eq!(h.gradient_vec(&[0.0, 0.0]), vec![0.0, 0.0]);
        let fd = crate::models::fd_gradient(h.field(), &[1.0, 0.0]);
        assert!((fd[0] - 1.0).abs() < 1e-8 && fd[1].abs() < 1e-12);
    }

    #[test]
    fn beta_two_rejected() {
        assert!(builtin_hamiltonian::<f64>(&ModelSpec::new("power").with("beta", 2.0), 2).is_err());
        assert!(builtin_hamiltonian::<f64>(&ModelSpec::new("power"), 3).is_err());
        assert!(matches!(builtin_hamiltonian::<f64>(&ModelSpec::new("sextic"), 2), Err(Error::UnknownModel(_))));
    }

    #[test]
    fn gradients_match_finite_differences() {
        for spec in [
            ModelSpec::new("power").with("beta", 4.0),
            ModelSpec::new("power").with("beta", 3.0),
            ModelSpec::new("anisotropic_power").with("beta", 4.0).with_list("lambda", vec![1.0, 2.0]),
        ] {
            let h: HamiltonianModel<f64> = builtin_hamiltonian(&spec, 2).unwrap();
            assert!(gradient_self_test(h.field(), 2, 100, 10.0, 11) < 1e-6, "{spec:?}");
        }
    }
}

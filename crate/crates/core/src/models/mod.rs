//! Potentials `V`, Hamiltonians `H`, and their numerical Fenchel conjugates.

mod fenchel;
mod growth;
mod hamiltonian;
mod potential;

pub use fenchel::{fenchel_transform, FenchelPair, PowerConjugate};
pub use growth::{default_growth_radii, fit_growth_exponent, unit_directions, GrowthFit};
pub use hamiltonian::{builtin_hamiltonian, HamiltonianModel};
pub use potential::{builtin_potential, gradient_self_test, PotentialModel};

use crate::error::{Error, Result};
use crate::scalar::Real;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// A smooth function `ℝ^N → ℝ` with its gradient and, optionally, its
/// Hessian. Built-in families and user plug-ins both implement this.
pub trait ScalarField<S: Real>: Send + Sync {
    fn value(&self, x: &[S]) -> S;

    fn gradient(&self, x: &[S], out: &mut [S]);

    /// Writes the row-major Hessian into `out` and returns `true`, or
    /// returns `false` when no analytic Hessian is available.
    fn hessian(&self, _x: &[S], _out: &mut [S]) -> bool {
        false
    }
}

/// Parameter value of a model spec: a scalar or a per-component list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Scalar(f64),
    List(Vec<f64>),
}

/// Model selection by name plus parameters, as read from configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, ParamValue>,
}

impl ModelSpec {
    pub fn new(name: &str) -> Self {
        ModelSpec { name: name.to_string(), params: BTreeMap::new() }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), ParamValue::Scalar(value));
        self
    }

    pub fn with_list(mut self, key: &str, values: Vec<f64>) -> Self {
        self.params.insert(key.to_string(), ParamValue::List(values));
        self
    }

    pub(crate) fn scalar(&self, key: &str) -> Result<Option<f64>> {
        match self.params.get(key) {
            None => Ok(None),
            Some(ParamValue::Scalar(v)) => Ok(Some(*v)),
            Some(ParamValue::List(_)) => Err(Error::InvalidArgument(format!(
                "parameter `{key}` of model `{}` must be a number",
                self.name
            ))),
        }
    }

    pub(crate) fn scalar_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.scalar(key)?.unwrap_or(default))
    }

    pub(crate) fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.params.get(key) {
            None => Ok(None),
            Some(ParamValue::List(v)) => Ok(Some(v.clone())),
            Some(ParamValue::Scalar(v)) => Ok(Some(vec![*v])),
        }
    }

    pub(crate) fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        match self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(Error::InvalidArgument(format!(
                "unknown parameter `{k}` for model `{}` (allowed: {})",
                self.name,
                allowed.join(", ")
            ))),
            None => Ok(()),
        }
    }
}

/// Central-difference Hessian of `field` built from its gradient, with
/// step `1e-5·(1+|x_d|)` per component.
pub fn fd_hessian<S: Real>(field: &dyn ScalarField<S>, x: &[S], out: &mut [S]) {
    let n = x.len();
    let mut xp = x.to_vec();
    let mut gp = vec![S::zero(); n];
    let mut gm = vec![S::zero(); n];
    for d in 0..n {
        let h = S::lit(1e-5) * (S::one() + x[d].abs());
        xp[d] = x[d] + h;
        field.gradient(&xp, &mut gp);
        xp[d] = x[d] - h;
        field.gradient(&xp, &mut gm);
        xp[d] = x[d];
        for r in 0..n {
            out[r * n + d] = (gp[r] - gm[r]) / (h + h);
        }
    }
    // symmetrize
    for r in 0..n {
        for c in r + 1..n {
            let avg = (out[r * n + c] + out[c * n + r]) / S::lit(2.0);
            out[r * n + c] = avg;
            out[c * n + r] = avg;
        }
    }
}

/// Central-difference gradient of `field.value`, step `1e-5·(1+|x_d|)`.
pub fn fd_gradient<S: Real>(field: &dyn ScalarField<S>, x: &[S]) -> Vec<S> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|d| {
            let h = S::lit(1e-5) * (S::one() + x[d].abs());
            xp[d] = x[d] + h;
            let fp = field.value(&xp);
            xp[d] = x[d] - h;
            let fm = field.value(&xp);
            xp[d] = x[d];
            (fp - fm) / (h + h)
        })
        .collect()
}

pub(crate) fn norm<S: Real>(x: &[S]) -> S {
    crate::scalar::norm2(x)
}

/// `Σ λ_d |x_d|^β / β`, shared by the potential and Hamiltonian registries.
pub(crate) struct AnisotropicPower<S> {
    pub beta: S,
    pub lambdas: Vec<S>,
}

impl<S: Real> ScalarField<S> for AnisotropicPower<S> {
    fn value(&self, x: &[S]) -> S {
        x.iter().zip(&self.lambdas).map(|(&v, &l)| l * v.abs().powf(self.beta)).sum::<S>() / self.beta
    }
    fn gradient(&self, x: &[S], out: &mut [S]) {
        for ((o, &v), &l) in out.iter_mut().zip(x).zip(&self.lambdas) {
            *o = l * v.abs().powf(self.beta - S::lit(2.0)) * v;
        }
    }
    fn hessian(&self, x: &[S], out: &mut [S]) -> bool {
        let n = x.len();
        out.iter_mut().for_each(|v| *v = S::zero());
        for d in 0..n {
            out[d * n + d] = self.lambdas[d] * (self.beta - S::one()) * x[d].abs().powf(self.beta - S::lit(2.0));
        }
        true
    }
}

/// `|x|^β / β`.
pub(crate) struct RadialPower<S> {
    pub beta: S,
}

impl<S: Real> ScalarField<S> for RadialPower<S> {
    fn value(&self, x: &[S]) -> S {
        norm(x).powf(self.beta) / self.beta
    }
    fn gradient(&self, x: &[S], out: &mut [S]) {
        let r = norm(x);
        let g = if r == S::zero() { S::zero() } else { r.powf(self.beta - S::lit(2.0)) };
        for (o, &v) in out.iter_mut().zip(x) {
            *o = g * v;
        }
    }
    fn hessian(&self, x: &[S], out: &mut [S]) -> bool {
        let n = x.len();
        let r = norm(x);
        out.iter_mut().for_each(|v| *v = S::zero());
        if r == S::zero() {
            return true;
        }
        let a = r.powf(self.beta - S::lit(2.0));
        let b = (self.beta - S::lit(2.0)) * r.powf(self.beta - S::lit(4.0));
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = b * x[i] * x[j];
            }
            out[i * n + i] += a;
        }
        true
    }
}

/// `ω²|x|²/2`.
pub(crate) struct Quadratic<S> {
    pub omega_sq: S,
}

impl<S: Real> ScalarField<S> for Quadratic<S> {
    fn value(&self, x: &[S]) -> S {
        self.omega_sq * crate::scalar::dot(x, x) / S::lit(2.0)
    }
    fn gradient(&self, x: &[S], out: &mut [S]) {
        for (o, &v) in out.iter_mut().zip(x) {
            *o = self.omega_sq * v;
        }
    }
    fn hessian(&self, x: &[S], out: &mut [S]) -> bool {
        let n = x.len();
        out.iter_mut().for_each(|v| *v = S::zero());
        for d in 0..n {
            out[d * n + d] = self.omega_sq;
        }
        true
    }
}

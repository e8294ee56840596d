use super::growth::default_growth_radii;
use super::{fit_growth_exponent, HamiltonianModel};
use crate::error::{Error, Result};
use crate::linalg::solve_in_place;
use crate::scalar::{dot, norm2, Real};

/// Closed-form conjugate of `|z|^β/β`: `G(y) = |y|^α/α`, `1/α + 1/β = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerConjugate<S> {
    pub alpha: S,
}

impl<S: Real> PowerConjugate<S> {
    pub fn value(&self, y: &[S]) -> S {
        norm2(y).powf(self.alpha) / self.alpha
    }

    pub fn gradient(&self, y: &[S]) -> Vec<S> {
        let r = norm2(y);
        let g = if r == S::zero() { S::zero() } else { r.powf(self.alpha - S::lit(2.0)) };
        y.iter().map(|&v| g * v).collect()
    }
}

/// A Hamiltonian together with its numerical Fenchel conjugate `G = H*`.
///
/// `G(y)` is computed by solving `H′(x) = y` with damped Newton and
/// evaluating `x·y − H(x)`; `G′(y)` is the solution `x`.
#[derive(Debug, Clone)]
pub struct FenchelPair<S: Real> {
    base: HamiltonianModel<S>,
    beta: S,
    alpha: S,
    closed_form: Option<PowerConjugate<S>>,
    max_iters: usize,
}

/// Attaches the numerical conjugate to `model`. The growth exponent comes
/// from the model's declaration or, failing that, from a log–log fit.
pub fn fenchel_transform<S: Real>(model: HamiltonianModel<S>) -> Result<FenchelPair<S>> {
    let beta = match model.growth_beta() {
        Some(b) => b,
        None => {
            let fit = fit_growth_exponent(|x| Ok(model.value(x)), model.dim(), &default_growth_radii::<S>(), 16, 0)?;
            fit.exponent
        }
    };
    if !(beta > S::one()) {
        return Err(Error::InvalidArgument(format!("conjugate needs superlinear growth, got beta = {beta}")));
    }
    let alpha = beta / (beta - S::one());
    let closed_form = (model.spec().name == "power").then_some(PowerConjugate { alpha });
    Ok(FenchelPair { base: model, beta, alpha, closed_form, max_iters: 100 })
}

impl<S: Real> FenchelPair<S> {
    pub fn base(&self) -> &HamiltonianModel<S> {
        &self.base
    }
    pub fn dim(&self) -> usize {
        self.base.dim()
    }
    pub fn beta(&self) -> S {
        self.beta
    }
    /// Conjugate exponent `β/(β−1)`.
    pub fn alpha(&self) -> S {
        self.alpha
    }
    pub fn closed_form(&self) -> Option<&PowerConjugate<S>> {
        self.closed_form.as_ref()
    }

    /// Solves `H′(x) = y`, i.e. returns `G′(y)`.
    pub fn solve(&self, y: &[S]) -> Result<Vec<S>> {
        let n = y.len();
        let ny = norm2(y);
        if ny == S::zero() {
            return Ok(vec![S::zero(); n]);
        }
        let tol = S::lit(1e-10) * (S::one() + ny);
        // radial guess, exact for power laws
        let scale = ny.powf(S::one() / (self.beta - S::one()) - S::one());
        let mut x: Vec<S> = y.iter().map(|&v| v * scale).collect();
        let mut g = vec![S::zero(); n];
        let residual = |x: &[S], g: &mut [S]| {
            self.base.gradient(x, g);
            for (gi, &yi) in g.iter_mut().zip(y) {
                *gi -= yi;
            }
            norm2(g)
        };
        let mut merit = residual(&x, &mut g);
        let mut jac = vec![S::zero(); n * n];
        let mut trial = vec![S::zero(); n];
        let mut g_trial = vec![S::zero(); n];
        for _ in 0..self.max_iters {
            if merit == S::zero() {
                break;
            }
            self.base.hessian(&x, &mut jac);
            let mut step: Vec<S> = g.iter().map(|&v| -v).collect();
            if solve_in_place(&mut jac, &mut step, n).is_err() {
                break;
            }
            let mut t = S::one();
            let mut improved = false;
            // below `tol` only full steps are tried: polishing, not searching
            let halvings = if merit <= tol { 1 } else { 60 };
            for _ in 0..halvings {
                for i in 0..n {
                    trial[i] = x[i] + t * step[i];
                }
                let m = residual(&trial, &mut g_trial);
                if m < merit {
                    x.copy_from_slice(&trial);
                    g.copy_from_slice(&g_trial);
                    merit = m;
                    improved = true;
                    break;
                }
                t /= S::lit(2.0);
            }
            if !improved {
                break;
            }
        }
        if !(merit <= tol) {
            return Err(Error::FenchelNoConvergence { norm_y: ny.as_f64(), residual: merit.as_f64() });
        }
        Ok(x)
    }

    /// `G(y)`.
    pub fn value(&self, y: &[S]) -> Result<S> {
        let x = self.solve(y)?;
        Ok(dot(&x, y) - self.base.value(&x))
    }

    /// `G(y)` and `G′(y)`.
    pub fn value_and_gradient(&self, y: &[S]) -> Result<(S, Vec<S>)> {
        let x = self.solve(y)?;
        let g = dot(&x, y) - self.base.value(&x);
        Ok((g, x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{builtin_hamiltonian, ModelSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn quartic() -> FenchelPair<f64> {
        fenchel_transform(builtin_hamiltonian(&ModelSpec::new("power").with("beta", 4.0), 2).unwrap()).unwrap()
    }

    #[test]
    fn quartic_conjugate_on_unit_sphere() {
        let pair = quartic();
        // H′(x) = |x|²x = y ⇒ x = y|y|^{-2/3}, G = |y|^{4/3} − |y|^{4/3}/4
        for th in [0.0, 0.7, 2.0, 4.5] {
            let y = [f64::cos(th), f64::sin(th)];
            assert!((pair.value(&y).unwrap() - 0.75).abs() < 1e-12);
        }
        assert!((pair.alpha() - 4.0 / 3.0).abs() < 1e-15);
        assert!((1.0 / pair.alpha() + 1.0 / pair.beta() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn conjugate_at_zero() {
        let pair = quartic();
        let (g, gp) = pair.value_and_gradient(&[0.0, 0.0]).unwrap();
        assert_eq!(g, 0.0);
        assert_eq!(gp, vec![0.0, 0.0]);
    }

    #[test]
    fn young_equality_and_inversion() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for spec in [
            ModelSpec::new("power").with("beta", 4.0),
            ModelSpec::new("power").with("beta", 3.0),
            ModelSpec::new("anisotropic_power").with("beta", 4.0).with_list("lambda", vec![1.0, 2.0]),
        ] {
            let h = builtin_hamiltonian::<f64>(&spec, 2).unwrap();
            let pair = fenchel_transform(h.clone()).unwrap();
            for _ in 0..100 {
                let x = [rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)];
                let y = h.gradient_vec(&x);
                let xy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
                let young = pair.value(&y).unwrap() + h.value(&x) - xy;
                assert!(young.abs() <= 1e-8 * xy.abs().max(1.0), "{spec:?}: {young}");
                let yy = [rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0)];
                let back = h.gradient_vec(&pair.solve(&yy).unwrap());
                for (a, b) in back.iter().zip(&yy) {
                    assert!((a - b).abs() < 1e-8 * (1.0 + b.abs()));
                }
            }
        }
    }

    #[test]
    fn matches_closed_form_over_decades() {
        let pair = quartic();
        let cf = *pair.closed_form().unwrap();
        for i in 0..=40 {
            let r = 10f64.powf(-2.0 + 0.1 * i as f64);
            let y = [r * 0.6, -r * 0.8];
            let (g, gp) = pair.value_and_gradient(&y).unwrap();
            let g_exact = cf.value(&y);
            assert!((g - g_exact).abs() < 1e-8 * g_exact, "r={r}");
            for (a, b) in gp.iter().zip(cf.gradient(&y)) {
                assert!((a - b).abs() < 1e-8 * b.abs().max(1e-300) + 1e-15);
            }
        }
    }

    #[test]
    fn fitted_exponent_when_undeclared() {
        let h = builtin_hamiltonian::<f64>(&ModelSpec::new("power").with("beta", 4.0), 2).unwrap();
        let undeclared = HamiltonianModel::from_field("custom", 2, std::sync::Arc::new(crate::models::RadialPower { beta: 4.0f64 }), true, None).unwrap();
        let pair = fenchel_transform(undeclared).unwrap();
        assert!((pair.beta() - 4.0).abs() < 1e-9);
        assert!(pair.closed_form().is_none());
        let y = [0.3, 0.4];
        assert!((pair.value(&y).unwrap() - fenchel_transform(h).unwrap().value(&y).unwrap()).abs() < 1e-12);
    }
}

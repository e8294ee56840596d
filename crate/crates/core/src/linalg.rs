//! Small dense linear algebra for Newton steps (row-major storage).

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Solves `a x = b` in place by Gaussian elimination with partial pivoting.
/// On success `b` holds the solution; `a` is destroyed.
pub fn solve_in_place<S: Real>(a: &mut [S], b: &mut [S], n: usize) -> Result<()> {
    assert_eq!(a.len(), n * n);
    assert_eq!(b.len(), n);
    let scale = a.iter().fold(S::zero(), |m, &v| m.max(v.abs()));
    let tiny = scale * S::epsilon() * S::from_usize_lossy(n.max(1));
    for col in 0..n {
        let (piv, piv_val) = (col..n)
            .map(|r| (r, a[r * n + col].abs()))
            .fold((col, S::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
        if piv_val <= tiny || !piv_val.is_finite() {
            return Err(Error::Singular);
        }
        if piv != col {
            for c in 0..n {
                a.swap(col * n + c, piv * n + c);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f == S::zero() {
                continue;
            }
            for c in col..n {
                let v = a[col * n + c];
                a[r * n + c] -= f * v;
            }
            let bv = b[col];
            b[r] -= f * bv;
        }
    }
    for r in (0..n).rev() {
        let mut acc = b[r];
        for c in r + 1..n {
            acc -= a[r * n + c] * b[c];
        }
        b[r] = acc / a[r * n + r];
    }
    Ok(())
}

/// Levenberg–Marquardt step for the square system `g(x) = 0` with Jacobian
/// `jac`: solves `(JᵀJ + μI) δ = −Jᵀg`.
pub fn lm_step<S: Real>(jac: &[S], g: &[S], n: usize, mu: S) -> Result<Vec<S>> {
    let mut normal = vec![S::zero(); n * n];
    let mut rhs = vec![S::zero(); n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = S::zero();
            for k in 0..n {
                acc += jac[k * n + i] * jac[k * n + j];
            }
            normal[i * n + j] = acc;
        }
        normal[i * n + i] += mu;
        let mut acc = S::zero();
        for k in 0..n {
            acc += jac[k * n + i] * g[k];
        }
        rhs[i] = -acc;
    }
    solve_in_place(&mut normal, &mut rhs, n)?;
    Ok(rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_pivoting_system() {
        let mut a: Vec<f64> = vec![0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0];
        let x: [f64; 3] = [1.0, -2.0, 0.5];
        let mut b = vec![
            2.0 * x[1] + x[2],
            x[0] + x[1],
            3.0 * x[0] + x[2],
        ];
        solve_in_place(&mut a, &mut b, 3).unwrap();
        for (got, want) in b.iter().zip(x) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_is_reported() {
        let mut a = vec![1.0, 2.0, 2.0, 4.0];
        let mut b = vec![1.0, 2.0];
        assert_eq!(solve_in_place(&mut a, &mut b, 2), Err(Error::Singular));
    }

    #[test]
    fn lm_step_handles_rank_deficiency() {
        // g(x) = (x0, 0): Jacobian has a null direction
        let jac: Vec<f64> = vec![1.0, 0.0, 0.0, 0.0];
        let g = vec![0.5, 0.0];
        let d = lm_step(&jac, &g, 2, 1e-12).unwrap();
        assert!((d[0] + 0.5).abs() < 1e-9);
        assert!(d[1].abs() < 1e-12);
    }
}

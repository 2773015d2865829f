//! Lanczos machinery on matrix-free Hermitian operators: the lowest eigenpair
//! by explicitly restarted Lanczos, and `exp(-i H dt) v` by a short Krylov
//! expansion with an a-posteriori error estimate.
//!
//! Operators are closures `apply(x, y)` writing `y = H x`. Both routines keep
//! the Krylov basis fully reorthogonalised; the subspaces used here are at most
//! a few hundred vectors.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::{dot, norm_sqr, C64};

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    /// Krylov vectors per restart cycle.
    pub krylov_dim: usize,
    /// Target for `‖H u − θ u‖`.
    pub tolerance: f64,
    pub max_restarts: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            krylov_dim: 80,
            tolerance: 1e-9,
            max_restarts: 200,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vec<C64>,
    pub residual: f64,
    pub matvecs: usize,
}

fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn orthogonalize(w: &mut [C64], basis: &[Vec<C64>]) {
    // two passes of classical Gram-Schmidt
    for _ in 0..2 {
        for v in basis {
            let c = dot(v, w);
            axpy(-c, v, w);
        }
    }
}

fn tridiagonal(alpha: &[f64], beta: &[f64]) -> DMatrix<f64> {
    let k = alpha.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    t
}

/// Lowest eigenpair of a Hermitian operator, restarting from the current Ritz
/// vector after every `krylov_dim` steps.
pub fn lowest_eigenpair<F>(mut apply: F, start: &[C64], opts: &LanczosOptions) -> Result<Eigenpair>
where
    F: FnMut(&[C64], &mut [C64]),
{
    let dim = start.len();
    let m = opts.krylov_dim.max(2).min(dim.max(1));
    let mut v0 = start.to_vec();
    let n0 = norm_sqr(&v0).sqrt();
    if !(n0 > 0.0) {
        return Err(Error::Domain("Lanczos start vector is zero".into()));
    }
    v0.iter_mut().for_each(|z| *z /= n0);

    let mut matvecs = 0;
    let mut w = vec![C64::new(0.0, 0.0); dim];
    let mut last_residual = f64::INFINITY;
    for _restart in 0..opts.max_restarts {
        let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
        let mut alpha = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        basis.push(v0.clone());
        let mut invariant = false;
        for j in 0..m {
            apply(&basis[j], &mut w);
            matvecs += 1;
            let a = dot(&basis[j], &w).re;
            alpha.push(a);
            orthogonalize(&mut w, &basis);
            let b = norm_sqr(&w).sqrt();
            if b < 1e-13 * a.abs().max(1.0) {
                invariant = true;
                break;
            }
            if j + 1 == m {
                beta.push(b);
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|z| z / b).collect());
        }
        let k = alpha.len();
        let t = tridiagonal(&alpha, &beta[..k.saturating_sub(1).min(beta.len())]);
        let eig = SymmetricEigen::new(t);
        let (imin, theta) = eig
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty tridiagonal");
        let y = eig.eigenvectors.column(imin);
        let mut u = vec![C64::new(0.0, 0.0); dim];
        for (i, v) in basis.iter().take(k).enumerate() {
            axpy(C64::new(y[i], 0.0), v, &mut u);
        }
        let nu = norm_sqr(&u).sqrt();
        u.iter_mut().for_each(|z| *z /= nu);
        let estimate = if invariant {
            0.0
        } else {
            beta.get(k - 1).copied().unwrap_or(0.0) * y[k - 1].abs()
        };
        if estimate < opts.tolerance {
            // confirm with an explicit residual
            apply(&u, &mut w);
            matvecs += 1;
            let res: f64 = w
                .iter()
                .zip(&u)
                .map(|(hw, uu)| (hw - theta * uu).norm_sqr())
                .sum::<f64>()
                .sqrt();
            if res < opts.tolerance || invariant {
                return Ok(Eigenpair {
                    value: theta,
                    vector: u,
                    residual: res,
                    matvecs,
                });
            }
            last_residual = res;
        } else {
            last_residual = estimate;
        }
        v0 = u;
    }
    Err(Error::NotConverged {
        what: "Lanczos eigensolver",
        iterations: opts.max_restarts,
        residual: last_residual,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct ExpmOptions {
    pub max_dim: usize,
    /// Bound on the estimated error of the propagated vector (absolute, for a
    /// unit-norm input).
    pub tolerance: f64,
}

impl Default for ExpmOptions {
    fn default() -> Self {
        Self {
            max_dim: 60,
            tolerance: 1e-12,
        }
    }
}

/// Small-matrix exponential `exp(-i dt T) e_1` for a real symmetric `T`.
fn exp_first_column(t: &DMatrix<f64>, dt: f64) -> DVector<C64> {
    let eig = SymmetricEigen::new(t.clone());
    let q = &eig.eigenvectors;
    let k = t.nrows();
    let mut out = DVector::from_element(k, C64::new(0.0, 0.0));
    for (l, lam) in eig.eigenvalues.iter().enumerate() {
        let phase = C64::from_polar(q[(0, l)], -dt * lam);
        for i in 0..k {
            out[i] += phase * q[(i, l)];
        }
    }
    out
}

/// Computes `exp(-i H dt) v`. Fails with [`Error::NotConverged`] when the
/// error estimate is still above tolerance at `max_dim` Krylov vectors; the
/// caller is expected to shorten the step.
pub fn expm_apply<F>(mut apply: F, v: &[C64], dt: f64, opts: &ExpmOptions) -> Result<(Vec<C64>, usize)>
where
    F: FnMut(&[C64], &mut [C64]),
{
    let dim = v.len();
    let nv = norm_sqr(v).sqrt();
    if nv == 0.0 {
        return Ok((v.to_vec(), 0));
    }
    let m = opts.max_dim.max(2).min(dim.max(1));
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(m + 1);
    basis.push(v.iter().map(|z| z / nv).collect());
    let mut alpha = Vec::with_capacity(m);
    let mut beta: Vec<f64> = Vec::with_capacity(m);
    let mut w = vec![C64::new(0.0, 0.0); dim];
    let mut estimate = f64::INFINITY;
    for j in 0..m {
        apply(&basis[j], &mut w);
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        orthogonalize(&mut w, &basis);
        let b = norm_sqr(&w).sqrt();
        let k = alpha.len();
        let invariant = b < 1e-13 * a.abs().max(1.0);
        // checking every few vectors keeps the small eigenproblems cheap
        if invariant || k == m || (k >= 4 && k % 3 == 1) {
            let t = tridiagonal(&alpha, &beta);
            let c = exp_first_column(&t, dt);
            estimate = if invariant { 0.0 } else { b * c[k - 1].norm() };
            if estimate < opts.tolerance {
                let mut out = vec![C64::new(0.0, 0.0); dim];
                for (i, bv) in basis.iter().take(k).enumerate() {
                    axpy(c[i] * nv, bv, &mut out);
                }
                return Ok((out, k));
            }
        }
        if invariant || k == m {
            break;
        }
        beta.push(b);
        basis.push(w.iter().map(|z| z / b).collect());
    }
    Err(Error::NotConverged {
        what: "Krylov exponential",
        iterations: m,
        residual: estimate,
    })
}

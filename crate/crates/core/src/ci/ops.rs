//! Dense kernels behind the CI Hamiltonian: annihilation/creation on one
//! tensor index, one-body contractions and the contact-pair contraction.
//!
//! Complex tensors are handed to real `dgemm` as interleaved `(re, im)`
//! pairs; every real matrix (orbitals, one-body integrals) then acts on both
//! parts at once.

use crate::C64;

use super::fock::LowerTable;

pub(crate) fn as_real(v: &[C64]) -> &[f64] {
    // Complex<f64> is repr(C) with fields (re, im)
    unsafe { std::slice::from_raw_parts(v.as_ptr() as *const f64, 2 * v.len()) }
}

pub(crate) fn as_real_mut(v: &mut [C64]) -> &mut [f64] {
    unsafe { std::slice::from_raw_parts_mut(v.as_mut_ptr() as *mut f64, 2 * v.len()) }
}

fn span(rows: usize, cols: usize, rs: usize, cs: usize) -> usize {
    if rows == 0 || cols == 0 {
        0
    } else {
        (rows - 1) * rs + (cols - 1) * cs + 1
    }
}

/// `C = A B + beta C` on strided real matrices (`m×k`, `k×n`, `m×n`).
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (usize, usize),
    b: &[f64],
    (rsb, csb): (usize, usize),
    beta: f64,
    c: &mut [f64],
    (rsc, csc): (usize, usize),
) {
    assert!(span(m, k, rsa, csa) <= a.len());
    assert!(span(k, n, rsb, csb) <= b.len());
    assert!(span(m, n, rsc, csc) <= c.len());
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: the asserts above keep every strided access inside the slices
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            rsc as isize,
            csc as isize,
        );
    }
}

/// Shape of a tensor `[outer][mid][inner]` whose middle index is a Fock
/// index of the species being acted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Layout {
    pub outer: usize,
    pub inner: usize,
}

/// `out[q][o][m'][i] = Σ_m ⟨m'|a_q|m⟩ in[o][m][i]`; `out` has `d` leading
/// blocks of size `outer · to_dim · inner`.
pub(crate) fn lower(input: &[C64], lay: Layout, table: &LowerTable, d: usize) -> Vec<C64> {
    let (from, to) = (table.from_dim(), table.to_dim());
    debug_assert_eq!(input.len(), lay.outer * from * lay.inner);
    let block = lay.outer * to * lay.inner;
    let mut out = vec![C64::new(0.0, 0.0); d * block];
    let inner = lay.inner;
    for o in 0..lay.outer {
        for m in 0..from {
            let src = &input[(o * from + m) * inner..(o * from + m + 1) * inner];
            for e in table.row(m) {
                let base = e.orbital as usize * block + (o * to + e.target as usize) * inner;
                let dst = &mut out[base..base + inner];
                for (y, x) in dst.iter_mut().zip(src) {
                    *y += e.factor * x;
                }
            }
        }
    }
    out
}

/// Adjoint of [`lower`], accumulated: `out[o][m][i] += Σ_q ⟨m'|a_q|m⟩ in[q][o][m'][i]`.
pub(crate) fn raise_add(input: &[C64], lay: Layout, table: &LowerTable, out: &mut [C64]) {
    let (from, to) = (table.from_dim(), table.to_dim());
    let block = lay.outer * to * lay.inner;
    let inner = lay.inner;
    debug_assert_eq!(out.len(), lay.outer * from * inner);
    for o in 0..lay.outer {
        for m in 0..from {
            let dst = &mut out[(o * from + m) * inner..(o * from + m + 1) * inner];
            for e in table.row(m) {
                let base = e.orbital as usize * block + (o * to + e.target as usize) * inner;
                let src = &input[base..base + inner];
                for (y, x) in dst.iter_mut().zip(src) {
                    *y += e.factor * x;
                }
            }
        }
    }
}

/// `out[p][r] = Σ_q h[p][q] t[q][r]` for a real row-major `d × d` matrix.
pub(crate) fn mix_orbitals(h: &[f64], d: usize, t: &[C64]) -> Vec<C64> {
    let rest = t.len() / d.max(1);
    let mut out = vec![C64::new(0.0, 0.0); t.len()];
    gemm(
        d,
        d,
        2 * rest,
        h,
        (d, 1),
        as_real(t),
        (2 * rest, 1),
        0.0,
        as_real_mut(&mut out),
        (2 * rest, 1),
    );
    out
}

/// Contact contraction `M[u'][v'][c] = s Σ_x φᵘ_u'(x) φᵛ_v'(x) Σ_uv φᵘ_u(x) φᵛ_v(x) T[u][v][c]`,
/// either through the precomputed `(d_u d_v)²` matrix or through the grid.
#[derive(Debug, Clone)]
pub(crate) enum PairKernel {
    Dense {
        dim: usize,
        k: Vec<f64>,
    },
    Grid {
        rows: usize,
        d_u: usize,
        d_v: usize,
        /// `rows × d_u`, row-major.
        phi_u: Vec<f64>,
        /// `rows × d_v`, row-major.
        phi_v: Vec<f64>,
        scale: f64,
    },
}

impl PairKernel {
    /// `phi_u`, `phi_v` are row-major `rows × d` samples on the quadrature
    /// rows; `scale` includes the coupling and `Δx`.
    pub fn new(rows: usize, phi_u: Vec<f64>, d_u: usize, phi_v: Vec<f64>, d_v: usize, scale: f64) -> Self {
        let dim = d_u * d_v;
        // dense wins while the pair space is small against the quadrature
        if dim <= 2 * rows && dim * dim <= 4_000_000 {
            let mut prod = vec![0.0; rows * dim];
            for x in 0..rows {
                for u in 0..d_u {
                    for v in 0..d_v {
                        prod[x * dim + u * d_v + v] = phi_u[x * d_u + u] * phi_v[x * d_v + v];
                    }
                }
            }
            let mut k = vec![0.0; dim * dim];
            gemm(dim, rows, dim, &prod, (1, dim), &prod, (dim, 1), 0.0, &mut k, (dim, 1));
            k.iter_mut().for_each(|v| *v *= scale);
            PairKernel::Dense { dim, k }
        } else {
            PairKernel::Grid {
                rows,
                d_u,
                d_v,
                phi_u,
                phi_v,
                scale,
            }
        }
    }

    #[cfg(test)]
    pub fn is_dense(&self) -> bool {
        matches!(self, PairKernel::Dense { .. })
    }

    pub fn apply(&self, t: &[C64]) -> Vec<C64> {
        match self {
            PairKernel::Dense { dim, k } => {
                let cols = t.len() / dim;
                let mut out = vec![C64::new(0.0, 0.0); t.len()];
                gemm(
                    *dim,
                    *dim,
                    2 * cols,
                    k,
                    (*dim, 1),
                    as_real(t),
                    (2 * cols, 1),
                    0.0,
                    as_real_mut(&mut out),
                    (2 * cols, 1),
                );
                out
            }
            PairKernel::Grid {
                rows,
                d_u,
                d_v,
                phi_u,
                phi_v,
                scale,
            } => {
                let (rows, d_u, d_v) = (*rows, *d_u, *d_v);
                let cols = t.len() / (d_u * d_v);
                let w = 2 * d_v * cols;
                // G[x][v][c] = Σ_u φᵘ_u(x) T[u][v][c]
                let mut g = vec![0.0; rows * w];
                gemm(rows, d_u, w, phi_u, (d_u, 1), as_real(t), (w, 1), 0.0, &mut g, (w, 1));
                // f[x][c] = Σ_v φᵛ_v(x) G[x][v][c], then spread back over v'
                let mut f = vec![0.0; 2 * cols];
                for x in 0..rows {
                    f.iter_mut().for_each(|z| *z = 0.0);
                    let gx = &g[x * w..(x + 1) * w];
                    let pv = &phi_v[x * d_v..(x + 1) * d_v];
                    for (v, &p) in pv.iter().enumerate() {
                        for (fz, gz) in f.iter_mut().zip(&gx[v * 2 * cols..(v + 1) * 2 * cols]) {
                            *fz += p * gz;
                        }
                    }
                    let gx = &mut g[x * w..(x + 1) * w];
                    for (v, &p) in pv.iter().enumerate() {
                        let sp = scale * p;
                        for (gz, fz) in gx[v * 2 * cols..(v + 1) * 2 * cols].iter_mut().zip(&f) {
                            *gz = sp * fz;
                        }
                    }
                }
                // M[u'][v'][c] = Σ_x φᵘ_u'(x) H[x][v'][c]
                let mut out = vec![C64::new(0.0, 0.0); t.len()];
                gemm(d_u, rows, w, phi_u, (1, d_u), &g, (w, 1), 0.0, as_real_mut(&mut out), (w, 1));
                out
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(rows: usize, d: usize, seed: f64) -> Vec<f64> {
        (0..rows * d).map(|k| ((k as f64 + 1.0) * seed).sin()).collect()
    }

    #[test]
    fn dense_and_grid_kernels_agree() {
        let rows = 9;
        let (du, dv) = (3, 4);
        let pu = samples(rows, du, 0.37);
        let pv = samples(rows, dv, 0.91);
        let cols = 5;
        let t: Vec<C64> = (0..du * dv * cols)
            .map(|k| C64::new((k as f64 * 0.3).cos(), (k as f64 * 0.7).sin()))
            .collect();
        let dense = PairKernel::new(rows, pu.clone(), du, pv.clone(), dv, 0.8);
        assert!(dense.is_dense());
        let grid = PairKernel::Grid {
            rows,
            d_u: du,
            d_v: dv,
            phi_u: pu.clone(),
            phi_v: pv.clone(),
            scale: 0.8,
        };
        let a = dense.apply(&t);
        let b = grid.apply(&t);
        // brute force
        for up in 0..du {
            for vp in 0..dv {
                for c in 0..cols {
                    let mut want = C64::new(0.0, 0.0);
                    for x in 0..rows {
                        let mut inner = C64::new(0.0, 0.0);
                        for u in 0..du {
                            for v in 0..dv {
                                inner += pu[x * du + u] * pv[x * dv + v] * t[(u * dv + v) * cols + c];
                            }
                        }
                        want += 0.8 * pu[x * du + up] * pv[x * dv + vp] * inner;
                    }
                    let k = (up * dv + vp) * cols + c;
                    assert!((a[k] - want).norm() < 1e-12);
                    assert!((b[k] - want).norm() < 1e-12);
                }
            }
        }
    }
}

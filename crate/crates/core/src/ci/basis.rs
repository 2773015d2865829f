//! Fixed single-particle orbitals sampled on the grid.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Orbitals below this magnitude are treated as absent when restricting the
/// quadrature to the support of a basis.
const SUPPORT_CUTOFF: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct OrbitalBasis {
    grid: GridSpec,
    /// `n × d`, column `p` is `φ_p(x_j)` with `Σ_j φ_p φ_q Δx = δ_pq`.
    functions: DMatrix<f64>,
    energies: Option<Vec<f64>>,
    support: (usize, usize),
}

impl OrbitalBasis {
    /// Lowest `d` eigenstates of `T + ½ M ω² x²` on the grid.
    pub fn trap_eigenstates(grid: GridSpec, mass: f64, trap_freq: f64, d: usize) -> Result<Self> {
        let n = grid.len();
        if d == 0 || d > n {
            return Err(Error::DimensionMismatch(format!(
                "asked for {d} orbitals on a {n}-point grid"
            )));
        }
        let mut h = grid.kinetic_matrix(mass);
        for j in 0..n {
            let x = grid.node(j);
            h[(j, j)] += 0.5 * mass * trap_freq * trap_freq * x * x;
        }
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let scale = 1.0 / grid.spacing().sqrt();
        let mut functions = DMatrix::zeros(n, d);
        let mut energies = Vec::with_capacity(d);
        for (p, &k) in order.iter().take(d).enumerate() {
            let mut col: Vec<f64> = eig.eigenvectors.column(k).iter().map(|v| v * scale).collect();
            fix_sign(&mut col);
            functions.column_mut(p).copy_from_slice(&col);
            energies.push(eig.eigenvalues[k]);
        }
        Ok(Self::assemble(grid, functions, Some(energies)))
    }

    /// Arbitrary orbitals given column-wise on the grid; they must be
    /// orthonormal under `Σ_j Δx`.
    pub fn from_functions(grid: GridSpec, functions: DMatrix<f64>) -> Result<Self> {
        if functions.nrows() != grid.len() || functions.ncols() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "orbital matrix is {}×{}, grid has {} points",
                functions.nrows(),
                functions.ncols(),
                grid.len()
            )));
        }
        let b = Self::assemble(grid, functions, None);
        let err = b.gram_error();
        if err > 1e-10 {
            return Err(Error::Domain(format!("orbitals are not orthonormal (Gram error {err:e})")));
        }
        Ok(b)
    }

    fn assemble(grid: GridSpec, functions: DMatrix<f64>, energies: Option<Vec<f64>>) -> Self {
        let n = functions.nrows();
        let peak = functions.amax();
        let live = |j: usize| functions.row(j).iter().any(|v| v.abs() > SUPPORT_CUTOFF * peak);
        let lo = (0..n).find(|&j| live(j)).unwrap_or(0);
        let hi = (0..n).rev().find(|&j| live(j)).map_or(n, |j| j + 1);
        Self {
            grid,
            functions,
            energies,
            support: (lo, hi),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.functions.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.ncols() == 0
    }

    pub fn functions(&self) -> &DMatrix<f64> {
        &self.functions
    }

    /// Eigenvalues of the defining single-particle Hamiltonian, if known.
    pub fn energies(&self) -> Option<&[f64]> {
        self.energies.as_deref()
    }

    /// Half-open range of grid rows where any orbital is non-negligible.
    pub fn support(&self) -> (usize, usize) {
        self.support
    }

    pub fn gram_error(&self) -> f64 {
        let g = self.functions.transpose() * &self.functions * self.grid.spacing();
        (g - DMatrix::identity(self.len(), self.len())).amax()
    }

    /// `⟨φ_p| f(x) |φ_q⟩` for a local function sampled on the grid.
    pub fn local_matrix(&self, f: &[f64]) -> DMatrix<f64> {
        let mut weighted = self.functions.clone();
        for (j, fj) in f.iter().enumerate() {
            weighted.row_mut(j).scale_mut(fj * self.grid.spacing());
        }
        self.functions.transpose() * weighted
    }

    pub fn position_matrix(&self) -> DMatrix<f64> {
        self.local_matrix(&self.grid.nodes())
    }

    /// `⟨φ_p| T + V |φ_q⟩` for a static potential on the grid.
    pub fn one_body_matrix(&self, mass: f64, potential: &[f64]) -> DMatrix<f64> {
        let t = self.grid.kinetic_matrix(mass);
        let tphi = &t * &self.functions;
        let mut h = self.functions.transpose() * tphi * self.grid.spacing();
        h += self.local_matrix(potential);
        h.fill_lower_triangle_with_upper_triangle();
        h
    }

    /// `±1` when every orbital has definite parity about the grid centre.
    pub fn parities(&self) -> Option<Vec<i8>> {
        let n = self.grid.len();
        let mut out = Vec::with_capacity(self.len());
        for p in 0..self.len() {
            let col = self.functions.column(p);
            let even = (0..n).map(|j| (col[j] - col[n - 1 - j]).abs()).fold(0.0, f64::max);
            let odd = (0..n).map(|j| (col[j] + col[n - 1 - j]).abs()).fold(0.0, f64::max);
            let tol = 1e-8 * col.amax();
            if even < tol {
                out.push(1);
            } else if odd < tol {
                out.push(-1);
            } else {
                return None;
            }
        }
        Some(out)
    }
}

/// Makes the first clearly nonzero entry positive.
fn fix_sign(col: &mut [f64]) {
    let peak = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if let Some(first) = col.iter().find(|v| v.abs() > 1e-3 * peak) {
        if *first < 0.0 {
            col.iter_mut().for_each(|v| *v = -*v);
        }
    }
}

//! Sine-DVR spatial grid with hard walls and the matching sine transform.
//!
//! The grid has `n` interior nodes `x_j = x_min + j Δx`, `j = 1..=n`, with
//! `Δx = (x_max - x_min) / (n + 1)`. Wavefunctions vanish at both walls, so the
//! kinetic energy is diagonal in the basis `sin(kπ(x - x_min)/L)`, `L = (n+1)Δx`,
//! which a type-I discrete sine transform reaches in `O(n log n)`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Result};
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    x_min: f64,
    x_max: f64,
    n: usize,
}

impl Default for GridSpec {
    /// Walls at ±50 with 500 interior points.
    fn default() -> Self {
        Self {
            x_min: -50.0,
            x_max: 50.0,
            n: 500,
        }
    }
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid("grid.n", format!("need at least 2 points, got {n}")));
        }
        if !(x_min.is_finite() && x_max.is_finite()) || x_min >= x_max {
            return Err(invalid(
                "grid.x_min",
                format!("require finite x_min < x_max, got [{x_min}, {x_max}]"),
            ));
        }
        Ok(Self { x_min, x_max, n })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n + 1) as f64
    }

    /// Distance between the walls, `(n + 1) Δx`.
    pub fn box_length(&self) -> f64 {
        self.x_max - self.x_min
    }

    /// Position of node `j` (zero-based, so `j = 0` is the first interior node).
    pub fn node(&self, j: usize) -> f64 {
        self.x_min + (j + 1) as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Kinetic energies `(kπ/L)² / 2M` of the sine modes `k = 1..=n`.
    pub fn kinetic_energies(&self, mass: f64) -> Vec<f64> {
        let l = self.box_length();
        (1..=self.n)
            .map(|k| {
                let q = PI * k as f64 / l;
                q * q / (2.0 * mass)
            })
            .collect()
    }

    /// Dense kinetic matrix in the grid representation, `S diag(E) S`.
    pub fn kinetic_matrix(&self, mass: f64) -> DMatrix<f64> {
        let n = self.n;
        let s = sine_matrix(n);
        let e = self.kinetic_energies(mass);
        let mut se = s.clone();
        for (k, ek) in e.iter().enumerate() {
            se.column_mut(k).scale_mut(*ek);
        }
        &se * &s
    }

    /// Index of the node mirrored through the grid centre.
    pub fn mirror(&self, j: usize) -> usize {
        self.n - 1 - j
    }
}

/// Orthonormal DST-I matrix `sqrt(2/(n+1)) sin(π j k/(n+1))`; symmetric and
/// its own inverse.
pub fn sine_matrix(n: usize) -> DMatrix<f64> {
    let m = (n + 1) as f64;
    let scale = (2.0 / m).sqrt();
    DMatrix::from_fn(n, n, |j, k| {
        scale * (PI * ((j + 1) * (k + 1)) as f64 / m).sin()
    })
}

/// Orthonormal type-I discrete sine transform of complex data, computed through
/// an FFT of the odd extension of length `2(n + 1)`.
#[derive(Clone)]
pub struct SineTransform {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl std::fmt::Debug for SineTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SineTransform").field("n", &self.n).finish()
    }
}

/// Reusable buffers for [`SineTransform`].
#[derive(Debug, Default, Clone)]
pub struct SineWork {
    buf: Vec<C64>,
    scratch: Vec<C64>,
}

impl SineTransform {
    pub fn new(n: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(2 * (n + 1));
        Self {
            n,
            fft,
            scale: (2.0 / (n + 1) as f64).sqrt(),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Transforms `data` in place. Applying it twice is the identity.
    pub fn apply(&self, data: &mut [C64], work: &mut SineWork) {
        let n = self.n;
        debug_assert_eq!(data.len(), n);
        let m = n + 1;
        work.buf.clear();
        work.buf.resize(2 * m, C64::new(0.0, 0.0));
        let scratch_len = self.fft.get_inplace_scratch_len();
        if work.scratch.len() < scratch_len {
            work.scratch.resize(scratch_len, C64::new(0.0, 0.0));
        }
        for (j, v) in data.iter().enumerate() {
            work.buf[j + 1] = *v;
            work.buf[2 * m - j - 1] = -*v;
        }
        self.fft
            .process_with_scratch(&mut work.buf, &mut work.scratch[..scratch_len]);
        // FFT of the odd extension is -2i Σ x_j sin(π j k / m)
        let f = C64::new(0.0, 0.5 * self.scale);
        for (k, v) in data.iter_mut().enumerate() {
            *v = f * work.buf[k + 1];
        }
    }

    /// Transforms every row of a row-major `rows × n` block.
    pub fn apply_rows(&self, data: &mut [C64], work: &mut SineWork) {
        for row in data.chunks_exact_mut(self.n) {
            self.apply(row, work);
        }
    }
}

//! Numerically exact dynamics of two identical bosons on an `n × n` grid in a
//! shaken harmonic trap, with the contact interaction regularised as `g/Δx`
//! on coincident nodes.

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::grid::{GridSpec, SineTransform, SineWork};
use crate::krylov::{lowest_eigenpair, LanczosOptions};
use crate::meanfield::STEP_NORM_LIMIT;
use crate::model::{DrivingProtocol, MixtureModel, Species, SpeciesParams};
use crate::observables::{DensityMatrix1B, DensityMatrix2B, EnergyTerms, Observe};
use crate::{dot, norm_sqr, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FewBodyParams {
    pub grid: GridSpec,
    pub mass: f64,
    pub trap_freq: f64,
    pub g: f64,
    /// Keep a static trap in addition to the shaken one, doubling the
    /// confinement.
    pub literal_double_trap: bool,
}

impl Default for FewBodyParams {
    fn default() -> Self {
        Self {
            grid: GridSpec::new(-50.0, 50.0, 255).expect("valid default grid"),
            mass: 1.0,
            trap_freq: 0.3,
            g: 0.4,
            literal_double_trap: false,
        }
    }
}

impl FewBodyParams {
    /// Impurity parameters of `model` on a (possibly coarser) grid.
    pub fn from_model(model: &MixtureModel, grid: GridSpec) -> Self {
        Self {
            grid,
            mass: model.impurity.mass,
            trap_freq: model.impurity.trap_freq,
            g: model.impurity.g_intra,
            literal_double_trap: false,
        }
    }
}

/// Row-major `ψ(x_i, x_j)` with `ΣΣ|ψ|²Δx² = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoBodyState {
    pub psi: Vec<C64>,
    pub n: usize,
    pub time: f64,
}

impl TwoBodyState {
    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.psi[i * self.n + j]
    }

    /// Largest `|ψ(x₁,x₂) − ψ(x₂,x₁)|`.
    pub fn exchange_asymmetry(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                worst = worst.max((self.psi[i * n + j] - self.psi[j * n + i]).norm());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FewBodyReport {
    pub steps: usize,
    pub max_norm_drift: f64,
    pub max_asymmetry: f64,
}

#[derive(Debug, Clone)]
pub struct FewBodySolver {
    params: FewBodyParams,
    model: MixtureModel,
    dx: f64,
    nodes: Vec<f64>,
    transform: SineTransform,
    kinetic: Vec<f64>,
}

fn transpose(a: &[C64], n: usize, out: &mut [C64]) {
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = a[i * n + j];
        }
    }
}

impl FewBodySolver {
    pub fn new(params: FewBodyParams, driving: DrivingProtocol) -> Result<Self> {
        let imp = SpeciesParams {
            mass: params.mass,
            trap_freq: params.trap_freq,
            ..SpeciesParams::impurity(2, params.g)
        };
        let model = MixtureModel {
            bath: SpeciesParams::bath(0, 0.0),
            impurity: imp,
            g_bi: 0.0,
            grid: params.grid,
            driving,
        };
        model.validate()?;
        let grid = params.grid;
        Ok(Self {
            params,
            dx: grid.spacing(),
            nodes: grid.nodes(),
            transform: SineTransform::new(grid.len()),
            kinetic: grid.kinetic_energies(params.mass),
            model,
        })
    }

    pub fn params(&self) -> &FewBodyParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn norm(&self, st: &TwoBodyState) -> f64 {
        norm_sqr(&st.psi) * self.dx * self.dx
    }

    /// One-particle potential on the grid at time `t`.
    pub fn potential(&self, t: f64) -> Vec<f64> {
        let k = 0.5 * self.params.mass * self.params.trap_freq.powi(2);
        let a = self.model.driving.displacement(t);
        self.nodes
            .iter()
            .map(|&x| {
                let shaken = k * (x - a) * (x - a);
                if self.params.literal_double_trap {
                    shaken + k * x * x
                } else {
                    shaken
                }
            })
            .collect()
    }

    fn contact(&self) -> f64 {
        self.params.g / self.dx
    }

    /// `S Ψ S` with an elementwise factor in between, `S ((SΨS) ∘ K) S`.
    fn sine_sandwich(&self, psi: &mut [C64], factor: impl Fn(usize, usize) -> C64, tmp: &mut Vec<C64>, work: &mut SineWork) {
        let n = self.len();
        tmp.resize(n * n, C64::new(0.0, 0.0));
        self.transform.apply_rows(psi, work);
        transpose(psi, n, tmp);
        self.transform.apply_rows(tmp, work);
        for a in 0..n {
            for b in 0..n {
                tmp[a * n + b] *= factor(a, b);
            }
        }
        self.transform.apply_rows(tmp, work);
        transpose(tmp, n, psi);
        self.transform.apply_rows(psi, work);
    }

    /// `y = H(t) x`.
    pub fn apply_hamiltonian(&self, x: &[C64], y: &mut [C64], t: f64) {
        let n = self.len();
        let mut work = SineWork::default();
        let mut tmp = Vec::new();
        y.copy_from_slice(x);
        let e = &self.kinetic;
        self.sine_sandwich(y, |a, b| C64::new(e[a] + e[b], 0.0), &mut tmp, &mut work);
        let v = self.potential(t);
        let gc = self.contact();
        for i in 0..n {
            for j in 0..n {
                let mut vij = v[i] + v[j];
                if i == j {
                    vij += gc;
                }
                y[i * n + j] += vij * x[i * n + j];
            }
        }
    }

    fn symmetrize(psi: &mut [C64], n: usize) {
        for i in 0..n {
            for j in i + 1..n {
                let avg = 0.5 * (psi[i * n + j] + psi[j * n + i]);
                psi[i * n + j] = avg;
                psi[j * n + i] = avg;
            }
        }
    }

    /// Lowest symmetric eigenstate of the undriven Hamiltonian.
    pub fn ground_state(&self, tolerance: f64) -> Result<(TwoBodyState, f64)> {
        let n = self.len();
        let w = self.params.mass * self.params.trap_freq;
        let phi: Vec<f64> = self.nodes.iter().map(|x| (-0.5 * w * x * x).exp()).collect();
        let mut start: Vec<C64> = (0..n * n).map(|k| C64::new(phi[k / n] * phi[k % n], 0.0)).collect();
        let static_solver = FewBodySolver {
            model: self.model.undriven(),
            ..self.clone()
        };
        static_solver.imaginary_time_filter(&mut start, 0.1, 150);
        let opts = LanczosOptions {
            krylov_dim: 60,
            tolerance: tolerance.max(1e-13),
            max_restarts: 400,
        };
        let ep = lowest_eigenpair(|x, y| static_solver.apply_hamiltonian(x, y, 0.0), &start, &opts)?;
        let mut psi = ep.vector;
        Self::symmetrize(&mut psi, n);
        // fix the global phase so the state is real and positive at the centre
        let c = n / 2;
        let ph = psi[c * n + c];
        let ph = if ph.norm() > 0.0 { ph.conj() / ph.norm() } else { C64::new(1.0, 0.0) };
        let scale = 1.0 / (norm_sqr(&psi).sqrt() * self.dx);
        psi.iter_mut().for_each(|z| *z *= ph * scale);
        Ok((TwoBodyState { psi, n, time: 0.0 }, ep.value))
    }

    /// Split-operator `exp(-τH)` steps on the undriven Hamiltonian, renormalised
    /// each step. Cheap warm start for Lanczos.
    fn imaginary_time_filter(&self, psi: &mut [C64], tau: f64, steps: usize) {
        let n = self.len();
        let kin: Vec<C64> = self.kinetic.iter().map(|e| C64::new((-tau * e).exp(), 0.0)).collect();
        let v = self.potential(0.0);
        let p: Vec<f64> = v.iter().map(|vi| (-0.5 * tau * vi).exp()).collect();
        let c = (-0.5 * tau * self.contact()).exp();
        let mut work = SineWork::default();
        let mut tmp = Vec::new();
        let half = |psi: &mut [C64]| {
            for i in 0..n {
                for j in 0..n {
                    let f = if i == j { p[i] * p[j] * c } else { p[i] * p[j] };
                    psi[i * n + j] *= f;
                }
            }
        };
        for _ in 0..steps {
            half(psi);
            self.sine_sandwich(psi, |a, b| kin[a] * kin[b], &mut tmp, &mut work);
            half(psi);
            let s = 1.0 / norm_sqr(psi).sqrt();
            psi.iter_mut().for_each(|z| *z *= s);
        }
    }

    /// Product of two oscillator orbitals, the noninteracting ground state.
    pub fn product_state(&self) -> TwoBodyState {
        let n = self.len();
        let w = self.params.mass * self.params.trap_freq;
        let phi: Vec<f64> = self.nodes.iter().map(|x| (-0.5 * w * x * x).exp()).collect();
        let norm = phi.iter().map(|p| p * p).sum::<f64>() * self.dx;
        let psi = (0..n * n)
            .map(|k| C64::new(phi[k / n] * phi[k % n] / norm, 0.0))
            .collect();
        TwoBodyState { psi, n, time: 0.0 }
    }

    /// Strang-split propagation to `t_end`; symmetry is re-imposed after each
    /// step.
    pub fn propagate<F>(&self, state: &mut TwoBodyState, t_end: f64, dt: f64, stride: usize, mut observer: F) -> Result<FewBodyReport>
    where
        F: FnMut(&TwoBodyState) -> Result<()>,
    {
        if state.n != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "state has {} points per axis, solver {}",
                state.n,
                self.len()
            )));
        }
        if !(dt > 0.0) {
            return Err(invalid("time.dt", "must be positive"));
        }
        let span = t_end - state.time;
        if span < 0.0 {
            return Err(invalid("time.t_end", "must not precede the state time"));
        }
        let steps = (span / dt - 1e-9).ceil().max(0.0) as usize;
        let h = if steps > 0 { span / steps as f64 } else { 0.0 };
        let stride = stride.max(1);
        let n = self.len();
        let t0 = state.time;
        let kin: Vec<C64> = self.kinetic.iter().map(|e| C64::from_polar(1.0, -h * e)).collect();
        let contact_phase = C64::from_polar(1.0, -0.5 * h * self.contact());
        let mut work = SineWork::default();
        let mut tmp = Vec::new();
        let mut report = FewBodyReport::default();
        let mut last_norm = self.norm(state);
        let initial = last_norm;
        observer(state)?;
        for step in 0..steps {
            let t_mid = t0 + (step as f64 + 0.5) * h;
            let v = self.potential(t_mid);
            let p: Vec<C64> = v.iter().map(|vi| C64::from_polar(1.0, -0.5 * h * vi)).collect();
            let half = |psi: &mut [C64]| {
                for i in 0..n {
                    for j in 0..n {
                        let mut f = p[i] * p[j];
                        if i == j {
                            f *= contact_phase;
                        }
                        psi[i * n + j] *= f;
                    }
                }
            };
            half(&mut state.psi);
            self.sine_sandwich(&mut state.psi, |a, b| kin[a] * kin[b], &mut tmp, &mut work);
            half(&mut state.psi);
            Self::symmetrize(&mut state.psi, n);
            state.time = t0 + (step + 1) as f64 * h;
            let nn = self.norm(state);
            let drift = (nn - last_norm).abs();
            if drift > STEP_NORM_LIMIT {
                return Err(Error::StepRejected {
                    time: state.time,
                    drift,
                    limit: STEP_NORM_LIMIT,
                });
            }
            last_norm = nn;
            report.max_norm_drift = report.max_norm_drift.max((nn - initial).abs());
            report.steps += 1;
            if (step + 1) % stride == 0 || step + 1 == steps {
                report.max_asymmetry = report.max_asymmetry.max(state.exchange_asymmetry());
                observer(state)?;
            }
        }
        Ok(report)
    }

    fn one_body_expectations(&self, st: &TwoBodyState, t: f64) -> (f64, f64, f64) {
        // (⟨T₁+T₂⟩, ⟨V₁+V₂⟩, ⟨W⟩)
        let n = self.len();
        let mut tpsi = st.psi.clone();
        let mut work = SineWork::default();
        let mut tmp = Vec::new();
        let e = &self.kinetic;
        self.sine_sandwich(&mut tpsi, |a, b| C64::new(e[a] + e[b], 0.0), &mut tmp, &mut work);
        let dx2 = self.dx * self.dx;
        let kin = dot(&st.psi, &tpsi).re * dx2;
        let v = self.potential(t);
        let mut pot = 0.0;
        let mut w = 0.0;
        for i in 0..n {
            for j in 0..n {
                let r = st.psi[i * n + j].norm_sqr();
                pot += (v[i] + v[j]) * r;
                if i == j {
                    w += self.contact() * r;
                }
            }
        }
        (kin, pot * dx2, w * dx2)
    }
}

impl Observe for FewBodySolver {
    type State = TwoBodyState;

    fn model(&self) -> &MixtureModel {
        &self.model
    }

    fn has_species(&self, s: Species) -> bool {
        s == Species::Impurity
    }

    fn density(&self, st: &TwoBodyState, s: Species) -> Result<Vec<f64>> {
        if s == Species::Bath {
            return Err(Error::Capability("a bath in the two-body solver"));
        }
        let n = st.n;
        Ok((0..n)
            .map(|i| 2.0 * st.psi[i * n..(i + 1) * n].iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dx)
            .collect())
    }

    fn one_body(&self, st: &TwoBodyState, s: Species) -> Result<DensityMatrix1B> {
        if s == Species::Bath {
            return Err(Error::Capability("a bath in the two-body solver"));
        }
        let n = st.n;
        let m = DMatrix::from_row_slice(n, n, &st.psi);
        let rho = (&m * m.adjoint()) * C64::new(2.0 * self.dx, 0.0);
        Ok(DensityMatrix1B {
            species: s,
            count: 2,
            dx: self.dx,
            matrix: rho,
            orbital_matrix: None,
        })
    }

    fn pair_density(&self, st: &TwoBodyState) -> Result<DensityMatrix2B> {
        let n = st.n;
        Ok(DensityMatrix2B {
            count: 2,
            dx: self.dx,
            values: DMatrix::from_fn(n, n, |i, j| 2.0 * st.psi[i * n + j].norm_sqr()),
        })
    }

    fn schmidt_weights(&self, _st: &TwoBodyState) -> Result<Vec<f64>> {
        Ok(vec![1.0])
    }

    fn mean_position(&self, st: &TwoBodyState, s: Species) -> Option<f64> {
        if s == Species::Bath {
            return None;
        }
        let n = st.n;
        let mut acc = 0.0;
        for i in 0..n {
            let row: f64 = st.psi[i * n..(i + 1) * n].iter().map(|z| z.norm_sqr()).sum();
            acc += self.nodes[i] * row;
        }
        Some(acc * self.dx * self.dx)
    }

    fn energy_terms(&self, st: &TwoBodyState, t: f64) -> Result<EnergyTerms> {
        let (k, v, w) = self.one_body_expectations(st, t);
        Ok(EnergyTerms {
            bath: None,
            impurity: k + v + w,
            interspecies: 0.0,
        })
    }

    fn hamiltonian_expectation(&self, st: &TwoBodyState, t: f64) -> Result<f64> {
        let mut y = vec![C64::new(0.0, 0.0); st.psi.len()];
        self.apply_hamiltonian(&st.psi, &mut y, t);
        Ok(dot(&st.psi, &y).re * self.dx * self.dx)
    }
}

//! Coupled Gross-Pitaevskii fields for the bath and the impurities.
//!
//! Each species is one normalised orbital `ψ_σ` with `Σ|ψ_σ|²Δx = 1`. The
//! intraspecies nonlinearity carries `g_σσ (N_σ − 1)`, the interspecies one
//! `g_BI N_σ'`. Ground states come from a stabilised semi-implicit relaxation
//! in the sine basis; real time uses Strang splitting with the external
//! potential taken at the step midpoint.

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::grid::{SineTransform, SineWork};
use crate::model::{MixtureModel, Species};
use crate::observables::{DensityMatrix1B, DensityMatrix2B, EnergyTerms, Observe};
use crate::{norm_sqr, C64};

/// Per-step norm drift that triggers a step rejection.
pub const STEP_NORM_LIMIT: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct MfState {
    pub bath: Vec<C64>,
    pub impurity: Vec<C64>,
    pub time: f64,
}

impl MfState {
    pub fn field(&self, s: Species) -> &[C64] {
        match s {
            Species::Bath => &self.bath,
            Species::Impurity => &self.impurity,
        }
    }

    fn field_mut(&mut self, s: Species) -> &mut Vec<C64> {
        match s {
            Species::Bath => &mut self.bath,
            Species::Impurity => &mut self.impurity,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GroundStateOptions {
    /// Bound on `max|Δψ|` per unit imaginary time.
    pub tolerance: f64,
    pub max_iter: usize,
    /// Imaginary-time step of the relaxation.
    pub tau: f64,
    /// Project both fields onto even parity after every sweep.
    pub symmetrize: bool,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iter: 200_000,
            tau: 1.0,
            symmetrize: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundStateReport {
    pub iterations: usize,
    /// `max|(H_eff − μ)ψ|` over both species at the returned state.
    pub residual: f64,
    pub chemical_potential: [f64; 2],
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PropagationReport {
    pub steps: usize,
    /// Largest `|‖ψ_σ‖² − 1|` seen during the run.
    pub max_norm_drift: f64,
}

#[derive(Debug, Clone)]
pub struct MeanField {
    model: MixtureModel,
    dx: f64,
    nodes: Vec<f64>,
    transform: SineTransform,
    kinetic: [Vec<f64>; 2],
}

fn idx(s: Species) -> usize {
    match s {
        Species::Bath => 0,
        Species::Impurity => 1,
    }
}

impl MeanField {
    pub fn new(model: MixtureModel) -> Result<Self> {
        model.validate()?;
        let grid = model.grid;
        Ok(Self {
            dx: grid.spacing(),
            nodes: grid.nodes(),
            transform: SineTransform::new(grid.len()),
            kinetic: [
                grid.kinetic_energies(model.bath.mass),
                grid.kinetic_energies(model.impurity.mass),
            ],
            model,
        })
    }

    pub fn model(&self) -> &MixtureModel {
        &self.model
    }

    pub fn spacing(&self) -> f64 {
        self.dx
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn norm(&self, psi: &[C64]) -> f64 {
        norm_sqr(psi) * self.dx
    }

    fn normalize(&self, psi: &mut [C64]) {
        let n = self.norm(psi).sqrt();
        psi.iter_mut().for_each(|z| *z /= n);
    }

    /// Harmonic-oscillator ground state of species `s` on the grid.
    pub fn oscillator_orbital(&self, s: Species) -> Vec<C64> {
        let p = self.model.species(s);
        let w = (p.mass * p.trap_freq).max(1e-3);
        let mut psi: Vec<C64> = self
            .nodes
            .iter()
            .map(|x| C64::new((-0.5 * w * x * x).exp(), 0.0))
            .collect();
        self.normalize(&mut psi);
        psi
    }

    /// Mean-field potential felt by species `s`, including the nonlinear terms.
    pub fn effective_potential(&self, state: &MfState, s: Species, t: f64) -> Vec<f64> {
        let p = self.model.species(s);
        let other = self.model.species(s.other());
        let g_self = p.g_intra * p.count.saturating_sub(1) as f64;
        let g_cross = self.model.g_bi * other.count as f64;
        let own = state.field(s);
        let oth = state.field(s.other());
        self.nodes
            .iter()
            .enumerate()
            .map(|(j, &x)| {
                self.model.trap_potential(s, x, t) + g_self * own[j].norm_sqr() + g_cross * oth[j].norm_sqr()
            })
            .collect()
    }

    fn kinetic_expectation(&self, psi: &[C64], s: Species, work: &mut SineWork) -> f64 {
        let mut c = psi.to_vec();
        self.transform.apply(&mut c, work);
        c.iter()
            .zip(&self.kinetic[idx(s)])
            .map(|(z, e)| z.norm_sqr() * e)
            .sum::<f64>()
            * self.dx
    }

    fn apply_kinetic(&self, psi: &[C64], s: Species, work: &mut SineWork) -> Vec<C64> {
        let mut c = psi.to_vec();
        self.transform.apply(&mut c, work);
        for (z, e) in c.iter_mut().zip(&self.kinetic[idx(s)]) {
            *z *= e;
        }
        self.transform.apply(&mut c, work);
        c
    }

    fn symmetrize(psi: &mut [C64]) {
        let n = psi.len();
        for j in 0..n / 2 {
            let avg = 0.5 * (psi[j] + psi[n - 1 - j]);
            psi[j] = avg;
            psi[n - 1 - j] = avg;
        }
    }

    /// Stationary state of the undriven coupled equations.
    pub fn ground_state(&self, opts: &GroundStateOptions) -> Result<(MfState, GroundStateReport)> {
        if !(opts.tau > 0.0) {
            return Err(invalid("groundstate.tau", "must be positive"));
        }
        let mut state = MfState {
            bath: self.oscillator_orbital(Species::Bath),
            impurity: self.oscillator_orbital(Species::Impurity),
            time: 0.0,
        };
        let undriven = self.model.undriven();
        let relax = MeanField {
            model: undriven,
            ..self.clone()
        };
        let tau = opts.tau;
        let mut work = SineWork::default();
        let mut change = f64::INFINITY;
        let mut iterations = 0;
        while iterations < opts.max_iter {
            iterations += 1;
            change = 0.0;
            for s in [Species::Bath, Species::Impurity] {
                let v = relax.effective_potential(&state, s, 0.0);
                let vmax = v.iter().copied().fold(f64::MIN, f64::max);
                let vmin = v.iter().copied().fold(f64::MAX, f64::min);
                let alpha = 0.5 * (vmax + vmin);
                let psi = state.field(s);
                let mu = relax.kinetic_expectation(psi, s, &mut work)
                    + psi.iter().zip(&v).map(|(z, vj)| z.norm_sqr() * vj).sum::<f64>() * self.dx;
                let mut next: Vec<C64> = psi
                    .iter()
                    .zip(&v)
                    .map(|(z, vj)| z * (1.0 + tau * (alpha + mu - vj)))
                    .collect();
                self.transform.apply(&mut next, &mut work);
                for (z, e) in next.iter_mut().zip(&self.kinetic[idx(s)]) {
                    *z /= 1.0 + tau * (e + alpha);
                }
                self.transform.apply(&mut next, &mut work);
                if opts.symmetrize {
                    Self::symmetrize(&mut next);
                }
                self.normalize(&mut next);
                let delta = next
                    .iter()
                    .zip(psi)
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max);
                change = change.max(delta / tau);
                *state.field_mut(s) = next;
            }
            if change < opts.tolerance {
                break;
            }
        }
        if change >= opts.tolerance {
            return Err(Error::NotConverged {
                what: "mean-field relaxation",
                iterations,
                residual: change,
            });
        }
        let mut residual: f64 = 0.0;
        let mut mus = [0.0; 2];
        for s in [Species::Bath, Species::Impurity] {
            let v = relax.effective_potential(&state, s, 0.0);
            let psi = state.field(s);
            let tpsi = relax.apply_kinetic(psi, s, &mut work);
            let hpsi: Vec<C64> = tpsi.iter().zip(psi).zip(&v).map(|((t, p), vj)| t + p * vj).collect();
            let mu = crate::dot(psi, &hpsi).re * self.dx;
            mus[idx(s)] = mu;
            // only meaningful where the species is present
            if self.model.species(s).count > 0 {
                let r = hpsi
                    .iter()
                    .zip(psi)
                    .map(|(h, p)| (h - mu * p).norm())
                    .fold(0.0, f64::max);
                residual = residual.max(r);
            }
        }
        let energy = relax.energy_terms(&state, 0.0).total();
        Ok((
            state,
            GroundStateReport {
                iterations,
                residual,
                chemical_potential: mus,
                energy,
            },
        ))
    }

    fn potential_phase(&self, state: &mut MfState, t_mid: f64, half: f64, potentials: &mut [Vec<f64>; 2]) {
        for s in [Species::Bath, Species::Impurity] {
            potentials[idx(s)] = self.effective_potential(state, s, t_mid);
        }
        for s in [Species::Bath, Species::Impurity] {
            let v = &potentials[idx(s)];
            for (z, vj) in state.field_mut(s).iter_mut().zip(v) {
                *z *= C64::from_polar(1.0, -half * vj);
            }
        }
    }

    /// Propagates `state` to `t_end` with steps of at most `dt`, calling
    /// `observer` on the initial state, every `stride` steps and at the end.
    pub fn propagate<F>(
        &self,
        state: &mut MfState,
        t_end: f64,
        dt: f64,
        stride: usize,
        mut observer: F,
    ) -> Result<PropagationReport>
    where
        F: FnMut(&MfState) -> Result<()>,
    {
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
        let t0 = state.time;
        let mut work = SineWork::default();
        let mut report = PropagationReport::default();
        let mut pots: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        let phases: [Vec<C64>; 2] = [
            self.kinetic[0].iter().map(|e| C64::from_polar(1.0, -h * e)).collect(),
            self.kinetic[1].iter().map(|e| C64::from_polar(1.0, -h * e)).collect(),
        ];
        let mut norms = [self.norm(&state.bath), self.norm(&state.impurity)];
        let initial = norms;
        observer(state)?;
        for step in 0..steps {
            let t = t0 + step as f64 * h;
            let t_mid = t + 0.5 * h;
            self.potential_phase(state, t_mid, 0.5 * h, &mut pots);
            for s in [Species::Bath, Species::Impurity] {
                let psi = state.field_mut(s);
                self.transform.apply(psi, &mut work);
                for (z, p) in psi.iter_mut().zip(&phases[idx(s)]) {
                    *z *= p;
                }
                self.transform.apply(psi, &mut work);
            }
            self.potential_phase(state, t_mid, 0.5 * h, &mut pots);
            state.time = t0 + (step + 1) as f64 * h;
            for s in [Species::Bath, Species::Impurity] {
                let n = self.norm(state.field(s));
                let step_drift = (n - norms[idx(s)]).abs();
                if step_drift > STEP_NORM_LIMIT {
                    return Err(Error::StepRejected {
                        time: state.time,
                        drift: step_drift,
                        limit: STEP_NORM_LIMIT,
                    });
                }
                norms[idx(s)] = n;
                report.max_norm_drift = report.max_norm_drift.max((n - initial[idx(s)]).abs());
            }
            report.steps += 1;
            if (step + 1) % stride == 0 || step + 1 == steps {
                observer(state)?;
            }
        }
        Ok(report)
    }

    /// Energy contributions of the mean-field functional; the bath term is
    /// omitted for an empty bath.
    pub fn energy_terms(&self, state: &MfState, t: f64) -> EnergyTerms {
        let mut work = SineWork::default();
        let mut single = [0.0; 2];
        for s in [Species::Bath, Species::Impurity] {
            let p = self.model.species(s);
            let psi = state.field(s);
            let n = p.count as f64;
            let kin = self.kinetic_expectation(psi, s, &mut work);
            let pot: f64 = psi
                .iter()
                .zip(&self.nodes)
                .map(|(z, &x)| z.norm_sqr() * self.model.trap_potential(s, x, t))
                .sum::<f64>()
                * self.dx;
            let quartic: f64 = psi.iter().map(|z| z.norm_sqr().powi(2)).sum::<f64>() * self.dx;
            single[idx(s)] = n * (kin + pot) + 0.5 * p.g_intra * n * (n - 1.0).max(0.0) * quartic;
        }
        let overlap: f64 = state
            .bath
            .iter()
            .zip(&state.impurity)
            .map(|(b, i)| b.norm_sqr() * i.norm_sqr())
            .sum::<f64>()
            * self.dx;
        let inter = self.model.g_bi * (self.model.bath.count * self.model.impurity.count) as f64 * overlap;
        EnergyTerms {
            bath: (self.model.bath.count > 0).then_some(single[0]),
            impurity: single[1],
            interspecies: inter,
        }
    }
}

impl Observe for MeanField {
    type State = MfState;

    fn model(&self) -> &MixtureModel {
        &self.model
    }

    fn has_species(&self, s: Species) -> bool {
        self.model.species(s).count > 0
    }

    fn density(&self, state: &MfState, s: Species) -> Result<Vec<f64>> {
        let n = self.model.species(s).count as f64;
        Ok(state.field(s).iter().map(|z| n * z.norm_sqr()).collect())
    }

    fn one_body(&self, state: &MfState, s: Species) -> Result<DensityMatrix1B> {
        let count = self.model.species(s).count;
        let psi = state.field(s);
        let n = psi.len();
        let c = count as f64;
        Ok(DensityMatrix1B {
            species: s,
            count,
            dx: self.dx,
            matrix: DMatrix::from_fn(n, n, |j, k| psi[j] * psi[k].conj() * c),
            orbital_matrix: Some(DMatrix::from_element(1, 1, C64::new(c, 0.0))),
        })
    }

    fn natural_populations(&self, _state: &MfState, s: Species) -> Result<Vec<f64>> {
        Ok(if self.model.species(s).count > 0 { vec![1.0] } else { Vec::new() })
    }

    fn pair_density(&self, state: &MfState) -> Result<DensityMatrix2B> {
        let count = self.model.impurity.count;
        if count < 2 {
            return Err(Error::Capability("a pair density with fewer than two impurities"));
        }
        let rho: Vec<f64> = state.impurity.iter().map(|z| z.norm_sqr()).collect();
        let f = (count * (count - 1)) as f64;
        let n = rho.len();
        Ok(DensityMatrix2B {
            count,
            dx: self.dx,
            values: DMatrix::from_fn(n, n, |j, k| f * rho[j] * rho[k]),
        })
    }

    fn schmidt_weights(&self, _state: &MfState) -> Result<Vec<f64>> {
        Ok(vec![1.0])
    }

    fn mean_position(&self, state: &MfState, s: Species) -> Option<f64> {
        if self.model.species(s).count == 0 {
            return None;
        }
        let psi = state.field(s);
        Some(
            psi.iter()
                .zip(&self.nodes)
                .map(|(z, x)| z.norm_sqr() * x)
                .sum::<f64>()
                * self.dx,
        )
    }

    fn energy_terms(&self, state: &MfState, t: f64) -> Result<EnergyTerms> {
        Ok(MeanField::energy_terms(self, state, t))
    }

    fn hamiltonian_expectation(&self, state: &MfState, t: f64) -> Result<f64> {
        // ⟨ψ|h + ½ nonlinear|ψ⟩ per species, built from the field equations
        let mut work = SineWork::default();
        let mut total = 0.0;
        for s in [Species::Bath, Species::Impurity] {
            let p = self.model.species(s);
            let n = p.count as f64;
            let psi = state.field(s);
            let tpsi = self.apply_kinetic(psi, s, &mut work);
            let g_self = 0.5 * p.g_intra * (n - 1.0).max(0.0);
            let g_cross = 0.5 * self.model.g_bi * self.model.species(s.other()).count as f64;
            let oth = state.field(s.other());
            let e: f64 = psi
                .iter()
                .zip(&tpsi)
                .enumerate()
                .map(|(j, (z, tz))| {
                    let v = self.model.trap_potential(s, self.nodes[j], t)
                        + g_self * z.norm_sqr()
                        + g_cross * oth[j].norm_sqr();
                    (z.conj() * tz).re + v * z.norm_sqr()
                })
                .sum::<f64>()
                * self.dx;
            total += n * e;
        }
        Ok(total)
    }
}

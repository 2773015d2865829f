//! Measurements shared by all backends: reduced density matrices, first-order
//! coherence, natural populations, Schmidt entropy, mean positions and the
//! energy partition, plus the time-series container fed by propagation runs.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::model::{MixtureModel, Species};
use crate::C64;

/// Diagonal floor for the coherence map, relative to the peak density.
pub const G1_DENSITY_FLOOR: f64 = 1e-6;

/// One-body reduced density matrix on the grid, `Σ_j ρ(x_j, x_j) Δx = N`.
#[derive(Debug, Clone)]
pub struct DensityMatrix1B {
    pub species: Species,
    pub count: usize,
    pub dx: f64,
    pub matrix: DMatrix<C64>,
    /// The same operator in an orthonormal orbital basis, when the backend has
    /// one; its eigenvalues are the natural occupations.
    pub orbital_matrix: Option<DMatrix<C64>>,
}

impl DensityMatrix1B {
    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.matrix.nrows() == 0
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diagonal().iter().map(|z| z.re).sum::<f64>() * self.dx
    }

    pub fn density(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|z| z.re).collect()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let n = self.len();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for k in j..n {
                worst = worst.max((self.matrix[(j, k)] - self.matrix[(k, j)].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues of `ρ/N`, largest first.
    pub fn natural_populations(&self) -> Vec<f64> {
        if self.count == 0 {
            return Vec::new();
        }
        let op = match &self.orbital_matrix {
            Some(m) => m.clone(),
            None => self.matrix.map(|z| z * self.dx),
        };
        let mut ev: Vec<f64> = SymmetricEigen::new(op)
            .eigenvalues
            .iter()
            .map(|v| v / self.count as f64)
            .collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }

    pub fn fragmentation(&self) -> f64 {
        fragmentation(&self.natural_populations())
    }

    /// Normalised coherence `ρ(x,x')/√(ρ(x,x)ρ(x',x'))`, masked where either
    /// density is below `floor · max density`.
    pub fn coherence_g1(&self, floor: f64) -> CoherenceMap {
        let n = self.len();
        let dens = self.density();
        let peak = dens.iter().copied().fold(0.0, f64::max);
        let cut = floor * peak;
        let mut values = Vec::with_capacity(n * n);
        for j in 0..n {
            for k in 0..n {
                values.push(if dens[j] > cut && dens[k] > cut && peak > 0.0 {
                    Some(self.matrix[(j, k)] / (dens[j] * dens[k]).sqrt())
                } else {
                    None
                });
            }
        }
        CoherenceMap { n, values }
    }
}

/// `F = 1 − η₁`; zero for an empty population list.
pub fn fragmentation(populations: &[f64]) -> f64 {
    populations.first().map_or(0.0, |eta| 1.0 - eta)
}

/// `−Σ λ ln λ` with `0 ln 0 = 0`.
pub fn von_neumann_entropy(weights: &[f64]) -> f64 {
    weights
        .iter()
        .filter(|&&l| l > 0.0)
        .map(|&l| -l * l.ln())
        .sum()
}

/// Squared singular values of a coefficient matrix, largest first.
pub fn schmidt_weights(coeffs: &DMatrix<C64>) -> Vec<f64> {
    let mut w: Vec<f64> = coeffs
        .clone()
        .singular_values()
        .iter()
        .map(|s| s * s)
        .collect();
    w.sort_by(|a, b| b.total_cmp(a));
    w
}

#[derive(Debug, Clone)]
pub struct CoherenceMap {
    n: usize,
    values: Vec<Option<C64>>,
}

impl CoherenceMap {
    pub fn get(&self, j: usize, k: usize) -> Option<C64> {
        self.values[j * self.n + k]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Largest `|g¹|` over unmasked points.
    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// Largest deviation of the unmasked diagonal from one.
    pub fn diagonal_error(&self) -> f64 {
        (0..self.n)
            .filter_map(|j| self.get(j, j))
            .map(|z| (z - 1.0).norm())
            .fold(0.0, f64::max)
    }
}

/// Diagonal two-body density of the impurities, `∫∫ρ² = N(N−1)`.
#[derive(Debug, Clone)]
pub struct DensityMatrix2B {
    pub count: usize,
    pub dx: f64,
    pub values: DMatrix<f64>,
}

impl DensityMatrix2B {
    pub fn integral(&self) -> f64 {
        self.values.sum() * self.dx * self.dx
    }

    pub fn symmetry_error(&self) -> f64 {
        (&self.values - self.values.transpose()).amax()
    }

    pub fn min(&self) -> f64 {
        self.values.min()
    }
}

/// Absolute energy contributions at one instant. The bath term is absent when
/// the backend carries no bath.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyTerms {
    pub bath: Option<f64>,
    pub impurity: f64,
    pub interspecies: f64,
}

impl EnergyTerms {
    pub fn total(&self) -> f64 {
        self.bath.unwrap_or(0.0) + self.impurity + self.interspecies
    }
}

/// Measurements every backend provides on its own state type.
pub trait Observe {
    type State;

    fn model(&self) -> &MixtureModel;

    /// Whether the backend represents species `s` at all.
    fn has_species(&self, s: Species) -> bool;

    /// `ρ(x) = N |ψ|²`-style density on the grid.
    fn density(&self, state: &Self::State, s: Species) -> Result<Vec<f64>>;

    fn one_body(&self, state: &Self::State, s: Species) -> Result<DensityMatrix1B>;

    /// Natural populations of species `s`; backends override this when they
    /// have a cheaper route than the grid matrix.
    fn natural_populations(&self, state: &Self::State, s: Species) -> Result<Vec<f64>> {
        Ok(self.one_body(state, s)?.natural_populations())
    }

    fn pair_density(&self, state: &Self::State) -> Result<DensityMatrix2B>;

    /// Bath-impurity Schmidt weights.
    fn schmidt_weights(&self, state: &Self::State) -> Result<Vec<f64>>;

    /// `⟨X_σ⟩` per particle; `None` when the species is absent.
    fn mean_position(&self, state: &Self::State, s: Species) -> Option<f64>;

    fn energy_terms(&self, state: &Self::State, t: f64) -> Result<EnergyTerms>;

    /// `⟨H(t)⟩` evaluated directly from the Hamiltonian action, independent of
    /// the partition.
    fn hamiltonian_expectation(&self, state: &Self::State, t: f64) -> Result<f64>;
}

/// One row of `series.csv`. `e_b` is the excess over the bath energy of the
/// first record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObservableRecord {
    pub t: f64,
    pub x_b: Option<f64>,
    pub x_i: Option<f64>,
    pub e_b: Option<f64>,
    pub e_i: f64,
    pub e_bi: f64,
    pub s_vn: Option<f64>,
    pub f_b: Option<f64>,
    pub f_i: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensitySnapshot {
    pub t: f64,
    pub bath: Option<Vec<f64>>,
    pub impurity: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObservableSeries {
    pub records: Vec<ObservableRecord>,
    pub snapshots: Vec<DensitySnapshot>,
    /// Absolute bath energy subtracted from `e_b`.
    pub bath_reference: Option<f64>,
}

impl ObservableSeries {
    pub fn push(&mut self, rec: ObservableRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if !(rec.t > last.t) {
                return Err(Error::Domain(format!(
                    "time stamps must increase: {} after {}",
                    rec.t, last.t
                )));
            }
        }
        self.records.push(rec);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }

    pub fn column(&self, f: impl Fn(&ObservableRecord) -> Option<f64>) -> Vec<Option<f64>> {
        self.records.iter().map(f).collect()
    }

    pub fn impurity_position(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.x_i.unwrap_or(f64::NAN)).collect()
    }

    pub fn entropy(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.s_vn.unwrap_or(f64::NAN)).collect()
    }

    /// `E_B + E_I + E_BI + bath reference`, i.e. the total energy.
    pub fn total_energy(&self) -> Vec<f64> {
        let r0 = self.bath_reference.unwrap_or(0.0);
        self.records
            .iter()
            .map(|r| r.e_b.unwrap_or(0.0) + r0 + r.e_i + r.e_bi)
            .collect()
    }
}

/// Turns backend states into [`ObservableRecord`]s.
#[derive(Debug, Clone, Default)]
pub struct Recorder {
    pub series: ObservableSeries,
    /// Keep a density snapshot every this many records (never if `None`).
    pub snapshot_every: Option<usize>,
    /// Skip the entropy and fragmentation columns, which are the expensive ones.
    pub skip_correlations: bool,
}

impl Recorder {
    pub fn new(snapshot_every: Option<usize>) -> Self {
        Self {
            snapshot_every,
            ..Default::default()
        }
    }

    pub fn record<O: Observe>(&mut self, backend: &O, state: &O::State, t: f64) -> Result<()> {
        let rec = measure(backend, state, t, &mut self.series.bath_reference, self.skip_correlations)?;
        let index = self.series.len();
        self.series.push(rec)?;
        if let Some(every) = self.snapshot_every {
            if every > 0 && index % every == 0 {
                let bath = if backend.has_species(Species::Bath) {
                    Some(backend.density(state, Species::Bath)?)
                } else {
                    None
                };
                self.series.snapshots.push(DensitySnapshot {
                    t,
                    bath,
                    impurity: backend.density(state, Species::Impurity)?,
                });
            }
        }
        Ok(())
    }

    pub fn finish(self) -> ObservableSeries {
        self.series
    }
}

/// Measures one record; the first call fixes the bath reference energy.
pub fn measure<O: Observe>(
    backend: &O,
    state: &O::State,
    t: f64,
    bath_reference: &mut Option<f64>,
    skip_correlations: bool,
) -> Result<ObservableRecord> {
    let terms = backend.energy_terms(state, t)?;
    let e_b = terms.bath.map(|e| {
        let r = *bath_reference.get_or_insert(e);
        e - r
    });
    let has_bath = backend.has_species(Species::Bath);
    let (s_vn, f_b, f_i) = if skip_correlations {
        (None, None, None)
    } else {
        let s = von_neumann_entropy(&backend.schmidt_weights(state)?);
        let f_b = if has_bath {
            Some(fragmentation(&backend.natural_populations(state, Species::Bath)?))
        } else {
            None
        };
        let f_i = fragmentation(&backend.natural_populations(state, Species::Impurity)?);
        (Some(s), f_b, Some(f_i))
    };
    Ok(ObservableRecord {
        t,
        x_b: backend.mean_position(state, Species::Bath),
        x_i: backend.mean_position(state, Species::Impurity),
        e_b,
        e_i: terms.impurity,
        e_bi: terms.interspecies,
        s_vn,
        f_b,
        f_i,
    })
}

/// Largest violations of the identities every snapshot must satisfy.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IdentityReport {
    /// `|Σλ_k − 1|`
    pub schmidt_sum: f64,
    /// `|Ση_i − 1|`, worst species.
    pub population_sum: f64,
    /// `max(|g¹| − 1, 0)` over unmasked points.
    pub g1_excess: f64,
    /// `|g¹(x,x) − 1|`
    pub g1_diagonal: f64,
    /// `|Tr ρ¹ − N|`, worst species.
    pub trace: f64,
    pub hermiticity: f64,
    /// `|∫∫ρ² − N(N−1)|`; zero when there is a single impurity.
    pub pair_norm: f64,
    pub pair_symmetry: f64,
    /// `|E_B + E_I + E_BI − ⟨H⟩| / max(1, |⟨H⟩|)`
    pub energy_partition: f64,
}

impl IdentityReport {
    pub fn worst(&self) -> f64 {
        [
            self.schmidt_sum,
            self.population_sum,
            self.g1_excess,
            self.g1_diagonal,
            self.trace,
            self.hermiticity,
            self.pair_norm,
            self.pair_symmetry,
            self.energy_partition,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

pub fn check_identities<O: Observe>(backend: &O, state: &O::State, t: f64) -> Result<IdentityReport> {
    let mut rep = IdentityReport::default();
    let w = backend.schmidt_weights(state)?;
    rep.schmidt_sum = (w.iter().sum::<f64>() - 1.0).abs();
    for s in [Species::Bath, Species::Impurity] {
        if !backend.has_species(s) || backend.model().species(s).count == 0 {
            continue;
        }
        let rho = backend.one_body(state, s)?;
        let eta = backend.natural_populations(state, s)?;
        rep.population_sum = rep.population_sum.max((eta.iter().sum::<f64>() - 1.0).abs());
        rep.trace = rep.trace.max((rho.trace() - rho.count as f64).abs());
        rep.hermiticity = rep.hermiticity.max(rho.hermiticity_error());
        let g1 = rho.coherence_g1(G1_DENSITY_FLOOR);
        rep.g1_excess = rep.g1_excess.max((g1.max_abs() - 1.0).max(0.0));
        rep.g1_diagonal = rep.g1_diagonal.max(g1.diagonal_error());
    }
    let n_i = backend.model().impurity.count;
    if n_i >= 2 {
        let rho2 = backend.pair_density(state)?;
        rep.pair_norm = (rho2.integral() - (n_i * (n_i - 1)) as f64).abs();
        rep.pair_symmetry = rho2.symmetry_error();
    }
    let h = backend.hamiltonian_expectation(state, t)?;
    let parts = backend.energy_terms(state, t)?.total();
    rep.energy_partition = (parts - h).abs() / h.abs().max(1.0);
    Ok(rep)
}

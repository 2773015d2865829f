//! Two-species configuration interaction over fixed orbitals.
//!
//! The state is a coefficient matrix `C[b][i]` over the bath and impurity Fock
//! spaces, so the bath-impurity Schmidt decomposition is its SVD. The
//! Hamiltonian is never stored: each application lowers the tensor with
//! annihilation tables, contracts with one-body integrals or the contact
//! kernel, and raises back.

mod basis;
mod fock;
mod ops;

pub use basis::OrbitalBasis;
pub use fock::{binomial, FockSpace, LowerTable, Lowering};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::krylov::{expm_apply, lowest_eigenpair, ExpmOptions, LanczosOptions};
use crate::meanfield::STEP_NORM_LIMIT;
use crate::model::{MixtureModel, Species, SpeciesParams};
use crate::observables::{schmidt_weights, DensityMatrix1B, DensityMatrix2B, EnergyTerms, Observe};
use crate::{dot, norm_sqr, C64};

use ops::{lower, mix_orbitals, raise_add, Layout, PairKernel};

#[derive(Debug, Clone, PartialEq)]
pub struct CiState {
    /// Row-major `dim_b × dim_i`.
    pub coeffs: Vec<C64>,
    pub dim_b: usize,
    pub dim_i: usize,
    pub time: f64,
}

impl CiState {
    pub fn matrix(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.dim_b, self.dim_i, &self.coeffs)
    }

    pub fn norm(&self) -> f64 {
        norm_sqr(&self.coeffs)
    }
}

/// Which parts of the Hamiltonian an application includes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Terms {
    pub bath: bool,
    pub impurity: bool,
    pub interspecies: bool,
}

impl Terms {
    pub const ALL: Terms = Terms {
        bath: true,
        impurity: true,
        interspecies: true,
    };
    pub const BATH: Terms = Terms {
        bath: true,
        impurity: false,
        interspecies: false,
    };
    pub const IMPURITY: Terms = Terms {
        bath: false,
        impurity: true,
        interspecies: false,
    };
    pub const INTERSPECIES: Terms = Terms {
        bath: false,
        impurity: false,
        interspecies: true,
    };
}

#[derive(Debug, Clone)]
struct Sector {
    params: SpeciesParams,
    basis: OrbitalBasis,
    /// Fock spaces for `N`, `N−1`, `N−2` particles, as far as they exist.
    spaces: Vec<FockSpace>,
    lower: Vec<LowerTable>,
    h_static: DMatrix<f64>,
    x: DMatrix<f64>,
    intra: Option<PairKernel>,
}

impl Sector {
    fn new(params: SpeciesParams, basis: OrbitalBasis) -> Self {
        let d = basis.len();
        let n = params.count;
        let spaces: Vec<FockSpace> = (0..=n.min(2)).map(|k| FockSpace::new(n - k, d)).collect();
        let lower = spaces.windows(2).map(|w| LowerTable::new(&w[0], &w[1])).collect();
        let grid = *basis.grid();
        let v: Vec<f64> = grid.nodes().iter().map(|&x| params.static_potential(x)).collect();
        let h_static = basis.one_body_matrix(params.mass, &v);
        let x = basis.position_matrix();
        let intra = (n >= 2 && params.g_intra != 0.0).then(|| {
            let (rows, phi) = support_samples(&basis, basis.support());
            PairKernel::new(rows, phi.clone(), d, phi, d, 0.5 * params.g_intra * grid.spacing())
        });
        Self {
            params,
            basis,
            spaces,
            lower,
            h_static,
            x,
            intra,
        }
    }

    fn d(&self) -> usize {
        self.basis.len()
    }

    fn dim(&self) -> usize {
        self.spaces[0].dim()
    }
}

/// Row-major samples of all orbitals on the grid rows `range`.
fn support_samples(basis: &OrbitalBasis, range: (usize, usize)) -> (usize, Vec<f64>) {
    let (lo, hi) = range;
    let d = basis.len();
    let f = basis.functions();
    let rows = hi.saturating_sub(lo);
    let mut out = Vec::with_capacity(rows * d);
    for j in lo..hi {
        for p in 0..d {
            out.push(f[(j, p)]);
        }
    }
    (rows, out)
}

/// Step control for [`CiSystem::propagate`].
#[derive(Debug, Clone, Copy)]
pub struct CiPropagation {
    pub krylov: ExpmOptions,
    /// Halving stops here with [`Error::StepUnderflow`].
    pub dt_floor: f64,
}

impl Default for CiPropagation {
    fn default() -> Self {
        Self {
            krylov: ExpmOptions {
                max_dim: 40,
                tolerance: 1e-12,
            },
            dt_floor: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CiReport {
    pub steps: usize,
    /// Krylov exponentials actually taken, including halved substeps.
    pub substeps: usize,
    pub matvecs: usize,
    pub max_norm_drift: f64,
}

#[derive(Debug, Clone)]
pub struct CiSystem {
    model: MixtureModel,
    bath: Sector,
    imp: Sector,
    inter: Option<PairKernel>,
}

impl CiSystem {
    /// Trap-eigenstate orbitals, `d_b` for the bath and `d_i` for the impurities.
    pub fn new(model: MixtureModel, d_b: usize, d_i: usize) -> Result<Self> {
        let g = model.grid;
        let bb = OrbitalBasis::trap_eigenstates(g, model.bath.mass, model.bath.trap_freq, d_b)?;
        let bi = if model.bath.mass == model.impurity.mass
            && model.bath.trap_freq == model.impurity.trap_freq
            && d_b >= d_i
        {
            OrbitalBasis::from_functions(g, bb.functions().columns(0, d_i).into_owned())?
        } else {
            OrbitalBasis::trap_eigenstates(g, model.impurity.mass, model.impurity.trap_freq, d_i)?
        };
        Self::with_bases(model, bb, bi)
    }

    pub fn with_bases(model: MixtureModel, bath: OrbitalBasis, impurity: OrbitalBasis) -> Result<Self> {
        model.validate()?;
        for b in [&bath, &impurity] {
            if *b.grid() != model.grid {
                return Err(Error::DimensionMismatch(
                    "orbital basis lives on a different grid than the model".into(),
                ));
            }
        }
        let inter = (model.bath.count >= 1 && model.g_bi != 0.0).then(|| {
            let (lb, hb) = bath.support();
            let (li, hi) = impurity.support();
            let range = (lb.max(li), hb.min(hi).max(lb.max(li)));
            let (rows, pb) = support_samples(&bath, range);
            let (_, pi) = support_samples(&impurity, range);
            PairKernel::new(rows, pb, bath.len(), pi, impurity.len(), model.g_bi * model.grid.spacing())
        });
        Ok(Self {
            bath: Sector::new(model.bath, bath),
            imp: Sector::new(model.impurity, impurity),
            inter,
            model,
        })
    }

    pub fn model(&self) -> &MixtureModel {
        &self.model
    }

    pub fn basis(&self, s: Species) -> &OrbitalBasis {
        &self.sector(s).basis
    }

    pub fn fock(&self, s: Species) -> &FockSpace {
        &self.sector(s).spaces[0]
    }

    /// `(dim_b, dim_i)`.
    pub fn dims(&self) -> (usize, usize) {
        (self.bath.dim(), self.imp.dim())
    }

    fn sector(&self, s: Species) -> &Sector {
        match s {
            Species::Bath => &self.bath,
            Species::Impurity => &self.imp,
        }
    }

    fn layout(&self, s: Species) -> Layout {
        match s {
            Species::Bath => Layout {
                outer: 1,
                inner: self.imp.dim(),
            },
            Species::Impurity => Layout {
                outer: self.bath.dim(),
                inner: 1,
            },
        }
    }

    /// Driven one-body matrix `h_static − Mω² a(t) x + ½ M ω² a(t)²`.
    pub fn one_body_matrix(&self, s: Species, t: f64) -> DMatrix<f64> {
        let sec = self.sector(s);
        let a = self.model.trap_center(s, t);
        let k = sec.params.mass * sec.params.trap_freq * sec.params.trap_freq;
        let mut h = sec.h_static.clone();
        if a != 0.0 {
            h -= &sec.x * (k * a);
            for p in 0..h.nrows() {
                h[(p, p)] += 0.5 * k * a * a;
            }
        }
        h
    }

    fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
        m.transpose().as_slice().to_vec()
    }

    fn one_body_add(&self, s: Species, h: &[f64], c: &[C64], y: &mut [C64]) {
        let sec = self.sector(s);
        if sec.params.count == 0 {
            return;
        }
        let lay = self.layout(s);
        let t = lower(c, lay, &sec.lower[0], sec.d());
        let m = mix_orbitals(h, sec.d(), &t);
        raise_add(&m, lay, &sec.lower[0], y);
    }

    fn intra_add(&self, s: Species, c: &[C64], y: &mut [C64]) {
        let sec = self.sector(s);
        let Some(kernel) = &sec.intra else { return };
        let d = sec.d();
        let lay = self.layout(s);
        let t1 = lower(c, lay, &sec.lower[0], d);
        let lay2 = Layout {
            outer: d * lay.outer,
            inner: lay.inner,
        };
        let t2 = lower(&t1, lay2, &sec.lower[1], d);
        let m = kernel.apply(&t2);
        let mut u = vec![C64::new(0.0, 0.0); t1.len()];
        raise_add(&m, lay2, &sec.lower[1], &mut u);
        raise_add(&u, lay, &sec.lower[0], y);
    }

    fn inter_add(&self, c: &[C64], y: &mut [C64]) {
        let Some(kernel) = &self.inter else { return };
        let li = self.layout(Species::Impurity);
        let t1 = lower(c, li, &self.imp.lower[0], self.imp.d());
        // T1 is [s][b][i']; lower the bath index in the middle
        let lb = Layout {
            outer: self.imp.d(),
            inner: self.imp.spaces[1].dim(),
        };
        let t2 = lower(&t1, lb, &self.bath.lower[0], self.bath.d());
        let m = kernel.apply(&t2);
        let mut u = vec![C64::new(0.0, 0.0); t1.len()];
        raise_add(&m, lb, &self.bath.lower[0], &mut u);
        raise_add(&u, li, &self.imp.lower[0], y);
    }

    /// `y = H(t) c` restricted to `terms`.
    pub fn apply_terms(&self, c: &[C64], y: &mut [C64], t: f64, terms: Terms) {
        y.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        if terms.bath {
            let h = Self::row_major(&self.one_body_matrix(Species::Bath, t));
            self.one_body_add(Species::Bath, &h, c, y);
            self.intra_add(Species::Bath, c, y);
        }
        if terms.impurity {
            let h = Self::row_major(&self.one_body_matrix(Species::Impurity, t));
            self.one_body_add(Species::Impurity, &h, c, y);
            self.intra_add(Species::Impurity, c, y);
        }
        if terms.interspecies {
            self.inter_add(c, y);
        }
    }

    pub fn apply_hamiltonian(&self, c: &[C64], y: &mut [C64], t: f64) {
        self.apply_terms(c, y, t, Terms::ALL);
    }

    fn expectation(&self, c: &[C64], t: f64, terms: Terms) -> f64 {
        let mut y = vec![C64::new(0.0, 0.0); c.len()];
        self.apply_terms(c, &mut y, t, terms);
        dot(c, &y).re / norm_sqr(c)
    }

    /// Configuration with every particle in the lowest orbital of its species.
    pub fn reference_state(&self) -> CiState {
        let (db, di) = self.dims();
        let mut coeffs = vec![C64::new(0.0, 0.0); db * di];
        coeffs[0] = C64::new(1.0, 0.0);
        CiState {
            coeffs,
            dim_b: db,
            dim_i: di,
            time: 0.0,
        }
    }

    fn config_parity(&self, s: Species, m: usize, par: &[i8]) -> i8 {
        let occ = self.fock(s).occupation(m);
        occ.iter()
            .zip(par)
            .filter(|(&n, &p)| p < 0 && n % 2 == 1)
            .fold(1, |acc, _| -acc)
    }

    /// Lowest eigenstate of the undriven Hamiltonian. Lanczos starts from the
    /// even reference configuration; when the orbitals have definite parity
    /// the result is projected onto the even sector, which settles accidental
    /// degeneracies with odd states.
    pub fn ground_state(&self, tolerance: f64) -> Result<(CiState, f64)> {
        let start = self.reference_state();
        let stat = CiSystem {
            model: self.model.undriven(),
            ..self.clone()
        };
        let opts = LanczosOptions {
            krylov_dim: 80.min(start.coeffs.len()).max(2),
            tolerance: tolerance.max(1e-13),
            max_restarts: 400,
        };
        let ep = lowest_eigenpair(|x, y| stat.apply_hamiltonian(x, y, 0.0), &start.coeffs, &opts)?;
        let mut c = ep.vector;
        if let (Some(pb), Some(pi)) = (self.bath.basis.parities(), self.imp.basis.parities()) {
            let pb: Vec<i8> = (0..self.bath.dim()).map(|m| self.config_parity(Species::Bath, m, &pb)).collect();
            let pi: Vec<i8> = (0..self.imp.dim()).map(|m| self.config_parity(Species::Impurity, m, &pi)).collect();
            let di = self.imp.dim();
            for (k, z) in c.iter_mut().enumerate() {
                if pb[k / di] * pi[k % di] < 0 {
                    *z = C64::new(0.0, 0.0);
                }
            }
        }
        let big = c
            .iter()
            .copied()
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .unwrap_or(C64::new(1.0, 0.0));
        let phase = big.conj() / big.norm();
        let nrm = norm_sqr(&c).sqrt();
        c.iter_mut().for_each(|z| *z *= phase / nrm);
        let state = CiState {
            coeffs: c,
            ..start
        };
        let e = stat.expectation(&state.coeffs, 0.0, Terms::ALL);
        Ok((state, e))
    }

    fn advance(&self, c: &mut Vec<C64>, t: f64, h: f64, opts: &CiPropagation, rep: &mut CiReport) -> Result<()> {
        let mid = t + 0.5 * h;
        let mut count = 0;
        let res = expm_apply(
            |x, y| {
                count += 1;
                self.apply_hamiltonian(x, y, mid)
            },
            c,
            h,
            &opts.krylov,
        );
        rep.matvecs += count;
        match res {
            Ok((v, _)) => {
                *c = v;
                rep.substeps += 1;
                Ok(())
            }
            Err(Error::NotConverged { .. }) => {
                let half = 0.5 * h;
                if half < opts.dt_floor {
                    return Err(Error::StepUnderflow {
                        time: t,
                        floor: opts.dt_floor,
                    });
                }
                self.advance(c, t, half, opts, rep)?;
                self.advance(c, t + half, half, opts, rep)
            }
            Err(e) => Err(e),
        }
    }

    /// Midpoint-Magnus propagation to `t_end`, each step exponentiated in a
    /// Krylov space and halved on non-convergence.
    pub fn propagate<F>(
        &self,
        state: &mut CiState,
        t_end: f64,
        dt: f64,
        stride: usize,
        opts: &CiPropagation,
        mut observer: F,
    ) -> Result<CiReport>
    where
        F: FnMut(&CiState) -> Result<()>,
    {
        if !(dt > 0.0) {
            return Err(crate::error::invalid("time.dt", "must be positive"));
        }
        let (db, di) = self.dims();
        if state.dim_b != db || state.dim_i != di {
            return Err(Error::DimensionMismatch(format!(
                "state is {}×{}, system {db}×{di}",
                state.dim_b, state.dim_i
            )));
        }
        let span = t_end - state.time;
        if span < 0.0 {
            return Err(crate::error::invalid("time.t_end", "must not precede the state time"));
        }
        let steps = (span / dt - 1e-9).ceil().max(0.0) as usize;
        let h = if steps > 0 { span / steps as f64 } else { 0.0 };
        let stride = stride.max(1);
        let t0 = state.time;
        let mut rep = CiReport::default();
        let mut last = state.norm();
        let initial = last;
        observer(state)?;
        for step in 0..steps {
            let t = t0 + step as f64 * h;
            self.advance(&mut state.coeffs, t, h, opts, &mut rep)?;
            state.time = t0 + (step + 1) as f64 * h;
            let n = state.norm();
            let drift = (n - last).abs();
            if drift > STEP_NORM_LIMIT {
                return Err(Error::StepRejected {
                    time: state.time,
                    drift,
                    limit: STEP_NORM_LIMIT,
                });
            }
            last = n;
            rep.max_norm_drift = rep.max_norm_drift.max((n - initial).abs());
            rep.steps += 1;
            if (step + 1) % stride == 0 || step + 1 == steps {
                observer(state)?;
            }
        }
        Ok(rep)
    }

    /// `γ_pq = ⟨a†_p a_q⟩` in the orbital basis of species `s`.
    pub fn orbital_density_matrix(&self, st: &CiState, s: Species) -> DMatrix<C64> {
        let sec = self.sector(s);
        let d = sec.d();
        if sec.params.count == 0 {
            return DMatrix::zeros(d, d);
        }
        let t = lower(&st.coeffs, self.layout(s), &sec.lower[0], d);
        let rest = t.len() / d;
        DMatrix::from_fn(d, d, |p, q| dot(&t[p * rest..(p + 1) * rest], &t[q * rest..(q + 1) * rest]))
    }

    fn position_expectation(&self, st: &CiState, s: Species) -> f64 {
        let sec = self.sector(s);
        let gamma = self.orbital_density_matrix(st, s);
        let mut acc = 0.0;
        for p in 0..sec.d() {
            for q in 0..sec.d() {
                acc += (gamma[(p, q)] * sec.x[(p, q)]).re;
            }
        }
        acc
    }
}

impl Observe for CiSystem {
    type State = CiState;

    fn model(&self) -> &MixtureModel {
        &self.model
    }

    fn has_species(&self, s: Species) -> bool {
        self.sector(s).params.count > 0
    }

    fn density(&self, st: &CiState, s: Species) -> Result<Vec<f64>> {
        let gamma = self.orbital_density_matrix(st, s);
        let f = self.sector(s).basis.functions();
        let n = f.nrows();
        let d = f.ncols();
        Ok((0..n)
            .map(|x| {
                let mut acc = 0.0;
                for p in 0..d {
                    for q in 0..d {
                        acc += (gamma[(p, q)] * (f[(x, p)] * f[(x, q)])).re;
                    }
                }
                acc
            })
            .collect())
    }

    fn one_body(&self, st: &CiState, s: Species) -> Result<DensityMatrix1B> {
        let gamma = self.orbital_density_matrix(st, s);
        let f = self.sector(s).basis.functions().map(|v| C64::new(v, 0.0));
        // ρ(x, x') = Σ_pq φ_q(x) γ_pq φ_p(x')
        let rho = &f * gamma.transpose() * f.transpose();
        Ok(DensityMatrix1B {
            species: s,
            count: self.sector(s).params.count,
            dx: self.model.grid.spacing(),
            matrix: rho,
            orbital_matrix: Some(gamma),
        })
    }

    fn natural_populations(&self, st: &CiState, s: Species) -> Result<Vec<f64>> {
        let count = self.sector(s).params.count;
        if count == 0 {
            return Ok(Vec::new());
        }
        let gamma = self.orbital_density_matrix(st, s);
        let mut ev: Vec<f64> = nalgebra::SymmetricEigen::new(gamma)
            .eigenvalues
            .iter()
            .map(|v| v / count as f64)
            .collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        Ok(ev)
    }

    fn pair_density(&self, st: &CiState) -> Result<DensityMatrix2B> {
        let sec = &self.imp;
        let count = sec.params.count;
        if count < 2 {
            return Err(Error::Capability("a pair density with fewer than two impurities"));
        }
        let d = sec.d();
        let lay = self.layout(Species::Impurity);
        let t1 = lower(&st.coeffs, lay, &sec.lower[0], d);
        let t2 = lower(
            &t1,
            Layout {
                outer: d * lay.outer,
                inner: lay.inner,
            },
            &sec.lower[1],
            d,
        );
        // t2 is [r][s][c]: amplitude of a_r a_s
        let cols = t2.len() / (d * d);
        let f = sec.basis.functions();
        let n = f.nrows();
        let fc = f.map(|v| C64::new(v, 0.0));
        let mut rho = DMatrix::<f64>::zeros(n, n);
        for c in 0..cols {
            let tc = DMatrix::from_fn(d, d, |r, s| t2[(r * d + s) * cols + c]);
            // A(x1, x2) = Σ_rs φ_s(x1) T[r][s] φ_r(x2)
            let a = &fc * tc.transpose() * fc.transpose();
            for (dst, z) in rho.iter_mut().zip(a.iter()) {
                *dst += z.norm_sqr();
            }
        }
        Ok(DensityMatrix2B {
            count,
            dx: self.model.grid.spacing(),
            values: rho,
        })
    }

    fn schmidt_weights(&self, st: &CiState) -> Result<Vec<f64>> {
        let w = schmidt_weights(&st.matrix());
        let total = st.norm();
        Ok(w.into_iter().map(|v| v / total).collect())
    }

    fn mean_position(&self, st: &CiState, s: Species) -> Option<f64> {
        let count = self.sector(s).params.count;
        (count > 0).then(|| self.position_expectation(st, s) / count as f64)
    }

    fn energy_terms(&self, st: &CiState, t: f64) -> Result<EnergyTerms> {
        Ok(EnergyTerms {
            bath: self
                .has_species(Species::Bath)
                .then(|| self.expectation(&st.coeffs, t, Terms::BATH)),
            impurity: self.expectation(&st.coeffs, t, Terms::IMPURITY),
            interspecies: self.expectation(&st.coeffs, t, Terms::INTERSPECIES),
        })
    }

    fn hamiltonian_expectation(&self, st: &CiState, t: f64) -> Result<f64> {
        Ok(self.expectation(&st.coeffs, t, Terms::ALL))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::model::DrivingProtocol;
    use approx::assert_relative_eq;

    fn model(nb: usize, gbb: f64, gii: f64, gbi: f64) -> MixtureModel {
        MixtureModel {
            bath: SpeciesParams::bath(nb, gbb),
            impurity: SpeciesParams::impurity(2, gii),
            g_bi: gbi,
            grid: GridSpec::new(-20.0, 20.0, 160).unwrap(),
            driving: DrivingProtocol::none(),
        }
    }

    fn random_state(db: usize, di: usize, seed: u64) -> Vec<C64> {
        let mut s = seed;
        (0..db * di)
            .map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let a = (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let b = (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
                C64::new(a, b)
            })
            .collect()
    }

    #[test]
    fn quoted_fock_dimensions() {
        let ci = CiSystem::new(model(4, 0.5, 0.4, 0.2), 3, 6).unwrap();
        assert_eq!(ci.dims(), (15, 21));
    }

    #[test]
    fn noninteracting_hamiltonian_is_diagonal_in_occupations() {
        let ci = CiSystem::new(model(3, 0.0, 0.0, 0.0), 3, 4).unwrap();
        let (db, di) = ci.dims();
        let eb = ci.basis(Species::Bath).energies().unwrap().to_vec();
        let ei = ci.basis(Species::Impurity).energies().unwrap().to_vec();
        for k in [0, 5, db * di - 1] {
            let mut c = vec![C64::new(0.0, 0.0); db * di];
            c[k] = C64::new(1.0, 0.0);
            let mut y = c.clone();
            ci.apply_hamiltonian(&c, &mut y, 0.0);
            let ob = ci.fock(Species::Bath).occupation(k / di);
            let oi = ci.fock(Species::Impurity).occupation(k % di);
            let want: f64 = ob.iter().zip(&eb).map(|(n, e)| f64::from(*n) * e).sum::<f64>()
                + oi.iter().zip(&ei).map(|(n, e)| f64::from(*n) * e).sum::<f64>();
            for (j, z) in y.iter().enumerate() {
                let w = if j == k { want } else { 0.0 };
                assert!((z - w).norm() < 1e-10, "entry {j}: {z} vs {w}");
            }
        }
        let (_, e) = ci.ground_state(1e-10).unwrap();
        assert_relative_eq!(e, 5.0 * 0.15, epsilon = 1e-9);
    }

    #[test]
    fn hamiltonian_is_hermitian() {
        let mut m = model(3, 0.5, 0.4, 0.3);
        m.driving = DrivingProtocol::continuous(2.0, 0.7);
        let ci = CiSystem::new(m, 3, 5).unwrap();
        let (db, di) = ci.dims();
        let u = random_state(db, di, 1);
        let v = random_state(db, di, 2);
        let mut hu = vec![C64::new(0.0, 0.0); u.len()];
        let mut hv = hu.clone();
        ci.apply_hamiltonian(&u, &mut hu, 1.3);
        ci.apply_hamiltonian(&v, &mut hv, 1.3);
        let lhs = dot(&u, &hv);
        let rhs = dot(&hu, &v);
        assert!((lhs - rhs).norm() < 1e-12 * lhs.norm().max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn separable_ground_state_without_interspecies_coupling() {
        let ci = CiSystem::new(model(3, 0.5, 0.4, 0.0), 3, 5).unwrap();
        let (st, _) = ci.ground_state(1e-11).unwrap();
        let w = ci.schmidt_weights(&st).unwrap();
        assert_relative_eq!(w[0], 1.0, epsilon = 1e-10);
        assert!(crate::observables::von_neumann_entropy(&w) < 1e-8);
    }

    #[test]
    fn larger_basis_never_raises_ground_energy() {
        let mut last = f64::INFINITY;
        for d in [2, 3, 4, 6] {
            let ci = CiSystem::new(model(2, 0.5, 0.4, 0.3), d, d).unwrap();
            let (_, e) = ci.ground_state(1e-11).unwrap();
            assert!(e <= last + 1e-10, "d = {d}: {e} > {last}");
            last = e;
        }
    }

    #[test]
    fn pair_density_and_traces() {
        let ci = CiSystem::new(model(3, 0.5, 0.4, 0.3), 3, 4).unwrap();
        let (st, _) = ci.ground_state(1e-10).unwrap();
        let rho2 = ci.pair_density(&st).unwrap();
        assert_relative_eq!(rho2.integral(), 2.0, epsilon = 1e-9);
        assert!(rho2.symmetry_error() < 1e-12);
        let rho = ci.one_body(&st, Species::Bath).unwrap();
        assert_relative_eq!(rho.trace(), 3.0, epsilon = 1e-9);
        let rep = crate::observables::check_identities(&ci, &st, 0.0).unwrap();
        assert!(rep.worst() < 1e-8, "{rep:?}");
    }
}

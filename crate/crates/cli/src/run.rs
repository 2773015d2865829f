//! Job orchestration: ground states, time evolution, driving-frequency sweeps,
//! trajectory fits and basis-convergence ladders.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use bosemix_core::analysis::{convergence_delta, fit_damped, tf_radius, DriveContext, FitOptions};
use bosemix_core::ci::CiPropagation;
use bosemix_core::meanfield::GroundStateOptions;
use bosemix_core::observables::Recorder;
use bosemix_core::{
    CiSystem, DrivingMode, Error, FewBodyParams, FewBodySolver, FitResult, GridSpec, MeanField, ObservableSeries,
    Observe, Species,
};

use crate::config::{Backend, ConfigError, RunConfig, RunMode};
use crate::output::{fmt_f64, read_series, table, write_series, Snapshots};

pub const THREADS_ENV: &str = "BOSEMIX_MAX_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Model(Error),
    #[error("solver failed: {0}")]
    Solver(Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl RunError {
    /// 1 configuration, 2 solver non-convergence, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Model(_) => 1,
            RunError::Solver(_) => 2,
            RunError::Io { .. } => 3,
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { .. } | Error::UndefinedForMode { .. } | Error::Capability(_) => {
                RunError::Model(e)
            }
            other => RunError::Solver(other),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Result of one ground-state calculation plus optional time evolution.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub ground_energy: f64,
    pub nodes: Vec<f64>,
    pub bath_density: Option<Vec<f64>>,
    pub impurity_density: Vec<f64>,
    pub r_tf: Option<f64>,
    pub series: ObservableSeries,
    pub max_norm_drift: f64,
}

impl Simulation {
    /// Largest `|E(t) − E(t₀)| / |E(t₀)|` over records with `t > after`,
    /// relative to the first such record.
    pub fn energy_drift_after(&self, after: f64) -> Option<f64> {
        let times = self.series.times();
        let e = self.series.total_energy();
        let mut it = times.iter().zip(&e).filter(|(t, _)| **t > after);
        let (_, e0) = it.next()?;
        Some(
            it.map(|(_, x)| (x - e0).abs() / e0.abs().max(1e-300))
                .fold(0.0, f64::max),
        )
    }
}

fn recorder(cfg: &RunConfig) -> Recorder {
    let mut r = Recorder::new(cfg.snapshot_every);
    r.skip_correlations = !cfg.correlations;
    r
}

fn radius(cfg: &RunConfig, nodes: &[f64], bath: &Option<Vec<f64>>) -> Result<Option<f64>, RunError> {
    match bath {
        Some(rho) if rho.iter().any(|v| *v > 0.0) => Ok(Some(tf_radius(nodes, rho, cfg.tf_threshold)?)),
        _ => Ok(None),
    }
}

pub fn fewbody_solver(cfg: &RunConfig) -> Result<FewBodySolver, RunError> {
    let g = cfg.model.grid;
    let grid = GridSpec::new(g.x_min(), g.x_max(), cfg.fewbody_points)?;
    let mut params = FewBodyParams::from_model(&cfg.model, grid);
    params.literal_double_trap = cfg.double_trap;
    Ok(FewBodySolver::new(params, cfg.model.driving)?)
}

/// Ground state, then propagation to `time.t_end` unless `evolve` is false.
pub fn simulate(cfg: &RunConfig, evolve: bool) -> Result<Simulation, RunError> {
    let t_end = if evolve { cfg.time.t_end } else { 0.0 };
    match cfg.backend {
        Backend::MeanField => {
            let mf = MeanField::new(cfg.model.clone())?;
            let opts = GroundStateOptions {
                tolerance: cfg.gs_tolerance,
                ..GroundStateOptions::default()
            };
            let (mut st, _) = mf.ground_state(&opts)?;
            let ground_energy = mf.hamiltonian_expectation(&st, 0.0)?;
            let bath_density = mf.has_species(Species::Bath).then(|| mf.density(&st, Species::Bath)).transpose()?;
            let impurity_density = mf.density(&st, Species::Impurity)?;
            let nodes = mf.nodes().to_vec();
            let r_tf = radius(cfg, &nodes, &bath_density)?;
            let mut rec = recorder(cfg);
            let rep = mf.propagate(&mut st, t_end, cfg.time.dt, cfg.time.stride, |s| rec.record(&mf, s, s.time))?;
            Ok(Simulation {
                ground_energy,
                nodes,
                bath_density,
                impurity_density,
                r_tf,
                series: rec.finish(),
                max_norm_drift: rep.max_norm_drift,
            })
        }
        Backend::FewBody => {
            let fb = fewbody_solver(cfg)?;
            let (mut st, ground_energy) = fb.ground_state(cfg.gs_tolerance)?;
            let impurity_density = fb.density(&st, Species::Impurity)?;
            let nodes = fb.params().grid.nodes();
            let mut rec = recorder(cfg);
            let rep = fb.propagate(&mut st, t_end, cfg.time.dt, cfg.time.stride, |s| rec.record(&fb, s, s.time))?;
            Ok(Simulation {
                ground_energy,
                nodes,
                bath_density: None,
                impurity_density,
                r_tf: None,
                series: rec.finish(),
                max_norm_drift: rep.max_norm_drift,
            })
        }
        Backend::Ci => simulate_ci(cfg, cfg.d_b, cfg.d_i, t_end),
    }
}

fn simulate_ci(cfg: &RunConfig, d_b: usize, d_i: usize, t_end: f64) -> Result<Simulation, RunError> {
    let ci = CiSystem::new(cfg.model.clone(), d_b, d_i)?;
    let (mut st, ground_energy) = ci.ground_state(cfg.gs_tolerance)?;
    let bath_density = ci.has_species(Species::Bath).then(|| ci.density(&st, Species::Bath)).transpose()?;
    let impurity_density = ci.density(&st, Species::Impurity)?;
    let nodes = cfg.model.grid.nodes();
    let r_tf = radius(cfg, &nodes, &bath_density)?;
    let mut rec = recorder(cfg);
    let rep = ci.propagate(
        &mut st,
        t_end,
        cfg.time.dt,
        cfg.time.stride,
        &CiPropagation::default(),
        |s| rec.record(&ci, s, s.time),
    )?;
    Ok(Simulation {
        ground_energy,
        nodes,
        bath_density,
        impurity_density,
        r_tf,
        series: rec.finish(),
        max_norm_drift: rep.max_norm_drift,
    })
}

/// Damped-oscillator fit of the impurity trajectory of `series`.
pub fn fit_series(cfg: &RunConfig, omega_d: f64, times: &[f64], x_i: &[f64]) -> Result<FitResult, RunError> {
    let ctx = DriveContext {
        amplitude: cfg.model.driving.amplitude,
        omega_d,
        x0: x_i.first().copied().unwrap_or(0.0),
        response: cfg.fit.response,
    };
    let opts = FitOptions {
        skip_before: cfg.fit.skip,
        ..FitOptions::default()
    };
    Ok(fit_damped(times, x_i, &ctx, cfg.fit.guess, &opts)?)
}

#[derive(Debug, Clone)]
pub struct FitRow {
    pub omega_d: f64,
    pub result: Result<FitResult, String>,
}

fn fit_rows_text(rows: &[FitRow]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| match &r.result {
            Ok(f) => vec![
                fmt_f64(r.omega_d),
                fmt_f64(f.params.lambda),
                fmt_f64(f.params.omega_eff),
                fmt_f64(f.params.delta),
                fmt_f64(f.rms),
                fmt_f64(f.condition),
                if f.rank_deficient { "rank-deficient" } else { "ok" }.to_string(),
            ],
            Err(e) => {
                let mut v = vec![fmt_f64(r.omega_d)];
                v.extend(std::iter::repeat_n("nan".to_string(), 5));
                v.push(format!("failed: {e}"));
                v
            }
        })
        .collect();
    table(
        &["omega_d", "lambda", "omega_eff", "delta", "rms", "condition", "status"],
        &body,
    )
}

#[derive(Debug, Clone)]
pub struct LadderRow {
    pub coarse: (usize, usize),
    pub fine: (usize, usize),
    pub max_delta: f64,
}

/// Everything a job produced, besides the files.
#[derive(Debug, Default)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub simulation: Option<Simulation>,
    pub fits: Vec<FitRow>,
    pub ladder: Vec<LadderRow>,
    /// Sub-job directories (sweep points, ladder rungs).
    pub children: Vec<PathBuf>,
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), RunError> {
    fs::write(path, contents).map_err(io_err(path))
}

fn manifest(cfg: &RunConfig, dir: &Path, results: &[(&str, String)]) -> String {
    let mut c = cfg.clone();
    c.output_dir = Some(dir.to_path_buf());
    let mut s = String::from("# bosemix run manifest; re-run with `bosemix <mode> --config manifest.txt`\n");
    s.push_str(&c.to_text());
    let _ = writeln!(s, "\n[build]\nversion = {}", env!("CARGO_PKG_VERSION"));
    s.push_str("\n[results]\n");
    for (k, v) in results {
        let _ = writeln!(s, "{k} = {v}");
    }
    s
}

/// Writes `series.csv`, optional `snapshots.bqd` and `manifest.txt`.
fn write_simulation(cfg: &RunConfig, dir: &Path, sim: &Simulation, extra: &[(&str, String)]) -> Result<(), RunError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let series = dir.join("series.csv");
    write_series(&series, &sim.series).map_err(io_err(&series))?;
    if cfg.snapshot_every.is_some() && !sim.series.snapshots.is_empty() {
        let p = dir.join("snapshots.bqd");
        Snapshots::from_series(&sim.series.snapshots, sim.nodes.clone())
            .write(&p)
            .map_err(io_err(&p))?;
    }
    let mut results = vec![
        ("ground_energy", fmt_f64(sim.ground_energy)),
        ("max_norm_drift", fmt_f64(sim.max_norm_drift)),
        ("records", sim.series.len().to_string()),
    ];
    if let Some(r) = sim.r_tf {
        results.push(("r_tf", fmt_f64(r)));
    }
    if let DrivingMode::Pulse { .. } = cfg.model.driving.mode {
        if let Ok(tf) = cfg.model.driving.pulse_end() {
            results.push(("t_f", fmt_f64(tf)));
            if let Some(d) = sim.energy_drift_after(tf) {
                results.push(("energy_drift_after_t_f", fmt_f64(d)));
            }
        }
    }
    results.extend(extra.iter().cloned());
    let m = dir.join("manifest.txt");
    write_file(&m, manifest(cfg, dir, &results).as_bytes())
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool, RunError> {
    let cap = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0);
    let n = match cap {
        Some(c) => jobs.max(1).min(c),
        None => jobs.max(1),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| RunError::Io {
            path: PathBuf::from("<thread pool>"),
            source: io::Error::other(e.to_string()),
        })
}

fn point_dir(out: &Path, omega_d: f64) -> PathBuf {
    out.join(format!("omega_d_{omega_d}"))
}

/// Runs `cfg` and writes its artifacts below `out`. `jobs` caps the number
/// of concurrent sweep points or ladder rungs.
pub fn run(cfg: &RunConfig, out: &Path, jobs: usize) -> Result<RunOutcome, RunError> {
    fs::create_dir_all(out).map_err(io_err(out))?;
    let mut outcome = RunOutcome {
        dir: out.to_path_buf(),
        ..RunOutcome::default()
    };
    match cfg.mode {
        RunMode::GroundState => {
            let sim = simulate(cfg, false)?;
            write_simulation(cfg, out, &sim, &[])?;
            outcome.simulation = Some(sim);
        }
        RunMode::Evolve => {
            let sim = simulate(cfg, true)?;
            write_simulation(cfg, out, &sim, &[])?;
            outcome.simulation = Some(sim);
        }
        RunMode::Fit => {
            let (times, xs) = if let Some(input) = &cfg.fit.input {
                let recs = read_series(input).map_err(io_err(input))?;
                (
                    recs.iter().map(|r| r.t).collect::<Vec<_>>(),
                    recs.iter().map(|r| r.x_i.unwrap_or(f64::NAN)).collect::<Vec<_>>(),
                )
            } else {
                let sim = simulate(cfg, true)?;
                write_simulation(cfg, out, &sim, &[])?;
                let t = sim.series.times();
                let x = sim.series.impurity_position();
                outcome.simulation = Some(sim);
                (t, x)
            };
            let w = cfg.model.driving.frequency;
            let row = FitRow {
                omega_d: w,
                result: fit_series(cfg, w, &times, &xs).map_err(|e| e.to_string()),
            };
            let p = out.join("fit.tsv");
            write_file(&p, fit_rows_text(std::slice::from_ref(&row)).as_bytes())?;
            if let Err(e) = &row.result {
                return Err(RunError::Solver(Error::Domain(e.clone())));
            }
            outcome.fits.push(row);
        }
        RunMode::Sweep => {
            let pool = thread_pool(jobs)?;
            let results: Vec<Result<(PathBuf, FitRow), RunError>> = pool.install(|| {
                cfg.sweep
                    .par_iter()
                    .map(|&w| {
                        let c = cfg.with_omega_d(w);
                        let dir = point_dir(out, w);
                        let sim = simulate(&c, true)?;
                        let row = FitRow {
                            omega_d: w,
                            result: fit_series(&c, w, &sim.series.times(), &sim.series.impurity_position())
                                .map_err(|e| e.to_string()),
                        };
                        write_simulation(&c, &dir, &sim, &[])?;
                        Ok((dir, row))
                    })
                    .collect()
            });
            for r in results {
                let (dir, row) = r?;
                outcome.children.push(dir);
                outcome.fits.push(row);
            }
            let p = out.join("fits.tsv");
            write_file(&p, fit_rows_text(&outcome.fits).as_bytes())?;
            let m = out.join("manifest.txt");
            write_file(&m, manifest(cfg, out, &[("points", cfg.sweep.len().to_string())]).as_bytes())?;
        }
        RunMode::Converge => {
            if cfg.backend != Backend::Ci {
                return Err(RunError::Model(Error::Capability(
                    "basis convergence ladders need the ci backend",
                )));
            }
            let pool = thread_pool(jobs)?;
            let sims: Vec<Result<Simulation, RunError>> = pool.install(|| {
                cfg.ladder
                    .par_iter()
                    .map(|&(b, i)| simulate_ci(cfg, b, i, cfg.time.t_end))
                    .collect()
            });
            let mut done = Vec::new();
            for (&(b, i), sim) in cfg.ladder.iter().zip(sims) {
                let sim = sim?;
                let mut c = cfg.clone();
                c.d_b = b;
                c.d_i = i;
                let dir = out.join(format!("basis_{b}_{i}"));
                write_simulation(&c, &dir, &sim, &[])?;
                outcome.children.push(dir);
                done.push(sim);
            }
            for (k, pair) in done.windows(2).enumerate() {
                let d = convergence_delta(&pair[1].series.entropy(), &pair[0].series.entropy())?;
                outcome.ladder.push(LadderRow {
                    coarse: cfg.ladder[k],
                    fine: cfg.ladder[k + 1],
                    max_delta: d.max,
                });
            }
            let rows: Vec<Vec<String>> = outcome
                .ladder
                .iter()
                .map(|r| {
                    vec![
                        r.coarse.0.to_string(),
                        r.coarse.1.to_string(),
                        r.fine.0.to_string(),
                        r.fine.1.to_string(),
                        fmt_f64(r.max_delta),
                    ]
                })
                .collect();
            let p = out.join("converge.tsv");
            write_file(&p, table(&["d_b", "d_i", "ref_d_b", "ref_d_i", "max_delta_s_vn"], &rows).as_bytes())?;
            let m = out.join("manifest.txt");
            write_file(&m, manifest(cfg, out, &[("rungs", cfg.ladder.len().to_string())]).as_bytes())?;
        }
    }
    Ok(outcome)
}

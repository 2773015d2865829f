use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use bosemix_cli::config::{parse_config_with, Backend, RunMode};
use bosemix_cli::run::{run, RunError};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Verb {
    Groundstate,
    Evolve,
    Sweep,
    Fit,
    Converge,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BackendArg {
    Meanfield,
    Fewbody,
    Ci,
}

/// Shaken two-impurity Bose mixture simulator.
#[derive(Debug, Parser)]
#[command(name = "bosemix", version)]
struct Cli {
    verb: Verb,
    /// Configuration file; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output.dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Concurrent jobs for sweeps and ladders, further capped by BOSEMIX_MAX_THREADS.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long, value_enum)]
    backend: Option<BackendArg>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bosemix: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: Cli) -> Result<(), RunError> {
    let text = match &cli.config {
        Some(p) => std::fs::read_to_string(p).map_err(|source| RunError::Io {
            path: p.clone(),
            source,
        })?,
        None => String::new(),
    };
    let backend = cli.backend.map(|b| match b {
        BackendArg::Meanfield => Backend::MeanField,
        BackendArg::Fewbody => Backend::FewBody,
        BackendArg::Ci => Backend::Ci,
    });
    let mut cfg = parse_config_with(&text, backend)?;
    cfg.mode = match cli.verb {
        Verb::Groundstate => RunMode::GroundState,
        Verb::Evolve => RunMode::Evolve,
        Verb::Sweep => RunMode::Sweep,
        Verb::Fit => RunMode::Fit,
        Verb::Converge => RunMode::Converge,
    };
    let out = cli
        .out
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("bosemix-out"));
    let outcome = run(&cfg, &out, cli.jobs)?;
    if let Some(sim) = &outcome.simulation {
        println!("ground energy {:.12}", sim.ground_energy);
        if let Some(r) = sim.r_tf {
            println!("Thomas-Fermi radius {r:.6}");
        }
        println!("{} records written to {}", sim.series.len(), out.display());
    }
    for f in &outcome.fits {
        match &f.result {
            Ok(r) => println!(
                "omega_d {:<8} lambda {:.6} omega_eff {:.6} delta {:.6}{}",
                f.omega_d,
                r.params.lambda,
                r.params.omega_eff,
                r.params.delta,
                if r.rank_deficient { " (rank-deficient)" } else { "" }
            ),
            Err(e) => println!("omega_d {:<8} fit failed: {e}", f.omega_d),
        }
    }
    for l in &outcome.ladder {
        println!(
            "({}, {}) vs ({}, {}): max relative entropy deviation {:.3e}",
            l.coarse.0, l.coarse.1, l.fine.0, l.fine.1, l.max_delta
        );
    }
    Ok(())
}

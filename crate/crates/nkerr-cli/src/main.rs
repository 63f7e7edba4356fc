//! nkerr: steady states, photon correlations, squeezing spectra, and
//! effective-Kerr extraction for a driven four-level artificial atom coupled
//! to a microwave resonator.

mod config;
mod report;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Parser, Subcommand};

use config::ScenarioConfig;
use run::SolverFailure;

#[derive(Parser)]
#[command(
    name = "nkerr",
    version,
    about = "Driven four-level circuit-QED simulator: blockade maps, correlation functions, squeezing spectra, effective Kerr nonlinearity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Scenario config file (JSON; a run manifest is also accepted).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Built-in preset: fig3 | fig4a | fig4b | table1 | prototype.
    #[arg(long, global = true)]
    preset: Option<String>,

    /// Output directory (overrides the config's output.dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Base Fock truncation (overrides solver.n_max).
    #[arg(long, global = true)]
    nmax: Option<usize>,

    /// Worker threads for sweeps (0 = all cores; overrides solver.jobs).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Emit frequencies in SI (Hz) instead of units of kappa.
    #[arg(long, global = true)]
    si: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Molecule spectrum, transition table, and field detunings from the
    /// circuit section.
    Levels,
    /// Effective-nonlinearity comparison table across cavity-QED platforms.
    Table1,
    /// Single steady-state solve: photon number, g2(0), diagnostics.
    Steady,
    /// g2(0) landscape over the (E_p, Omega_c) sweep grids, with the
    /// minimum locus.
    G2map,
    /// Delayed autocorrelation g2(tau) on the tau grid.
    G2tau,
    /// Quadrature squeezing spectrum S(omega), optionally with the
    /// FFT-vs-resolvent agreement report.
    Squeeze,
    /// Effective Kerr rate fitted along the g2 minimum locus.
    EtaFit,
}

fn load_config(cli: &Cli) -> Result<ScenarioConfig> {
    let mut cfg = match (&cli.config, &cli.preset) {
        (Some(_), Some(_)) => bail!("--config and --preset are mutually exclusive"),
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| anyhow::anyhow!("reading {}: {e}", path.display()))?;
            ScenarioConfig::from_json(&text)?
        }
        (None, Some(name)) => config::preset(name)?,
        (None, None) => match cli.command {
            // table1 is self-contained
            Command::Table1 => config::preset("table1")?,
            _ => bail!("provide --config PATH or --preset NAME"),
        },
    };
    if let Some(dir) = &cli.out {
        cfg.output.dir = dir.clone();
    }
    if let Some(n) = cli.nmax {
        cfg.solver.n_max = n;
        cfg.solver.n_max_cap = cfg.solver.n_max_cap.max(n);
    }
    if let Some(jobs) = cli.jobs {
        cfg.solver.jobs = jobs;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn real_main() -> Result<i32> {
    let cli = Cli::parse();
    let cfg = load_config(&cli)?;

    // sweep cells parallelise through rayon; keep BLAS single-threaded so
    // the two pools do not multiply (overridable through the environment)
    if std::env::var_os("OPENBLAS_NUM_THREADS").is_none() {
        std::env::set_var("OPENBLAS_NUM_THREADS", "1");
    }
    if cfg.solver.jobs > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.solver.jobs)
            .build_global()
            .ok();
    }

    match cli.command {
        Command::Levels => run::cmd_levels(&cfg, cli.si),
        Command::Table1 => run::cmd_table1(&cfg, cli.si),
        Command::Steady => run::cmd_steady(&cfg, cli.si),
        Command::G2map => run::cmd_g2map(&cfg, cli.si),
        Command::G2tau => run::cmd_g2tau(&cfg, cli.si),
        Command::Squeeze => run::cmd_squeeze(&cfg, cli.si),
        Command::EtaFit => run::cmd_eta_fit(&cfg, cli.si),
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<SolverFailure>().is_some() {
                ExitCode::from(3)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

//! Output plumbing: deterministic CSV/JSON writers and the run manifest.
//! Floats are written with Rust's shortest round-trip formatting so a rerun
//! of the same manifest reproduces every byte.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use crate::config::ScenarioConfig;

pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        "nan".to_string()
    }
}

pub fn write_csv<P: AsRef<Path>>(
    path: P,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    let mut text = String::new();
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    fs::write(path.as_ref(), text)
        .with_context(|| format!("writing {}", path.as_ref().display()))
}

pub fn write_json<P: AsRef<Path>, T: Serialize>(path: P, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path.as_ref(), text)
        .with_context(|| format!("writing {}", path.as_ref().display()))
}

/// Pinned numerical tolerances, recorded in every manifest.
#[derive(Debug, Serialize)]
pub struct Tolerances {
    pub steady_residual: f64,
    pub state_trace_hermiticity: f64,
    pub positivity_floor: f64,
    pub top_population: f64,
    pub resolve_rel_change: f64,
    pub eta_fit_rel: f64,
    pub g2_undefined_nbar_floor: f64,
    pub log10_clamp: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            steady_residual: nkerr_core::solver::STEADY_RESIDUAL_TOL,
            state_trace_hermiticity: nkerr_core::solver::STATE_TOL,
            positivity_floor: nkerr_core::solver::POSITIVITY_FLOOR,
            top_population: nkerr_core::solver::TOP_POPULATION_TOL,
            resolve_rel_change: nkerr_core::solver::RESOLVE_REL_TOL,
            eta_fit_rel: nkerr_core::kerr::ETA_FIT_REL_TOL,
            g2_undefined_nbar_floor: nkerr_core::observables::G2_NBAR_FLOOR,
            log10_clamp: nkerr_core::observables::LOG10_CLAMP,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub si_output: bool,
    pub tolerances: Tolerances,
    pub config: &'a ScenarioConfig,
}

/// Create the output directory and drop the manifest in it. Re-running the
/// same manifest (it is accepted by --config) reproduces every output file
/// byte for byte.
pub fn init_run(config: &ScenarioConfig, command: &str, si: bool) -> Result<PathBuf> {
    let dir = config.output.dir.clone();
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let manifest = Manifest {
        tool: "nkerr",
        version: env!("CARGO_PKG_VERSION"),
        command,
        si_output: si,
        tolerances: Tolerances::default(),
        config,
    };
    write_json(dir.join("manifest.json"), &manifest)?;
    Ok(dir)
}

/// Frequency emission: κ units by default, Hz with --si.
#[derive(Debug, Clone, Copy)]
pub struct Emit {
    pub si: bool,
    pub kappa_si: Option<f64>,
}

impl Emit {
    pub fn new(si: bool, kappa_si: Option<f64>) -> Result<Self> {
        if si && kappa_si.is_none() {
            anyhow::bail!(
                "--si needs kappa in SI: set model.kappa_si (kappa units) or use si units"
            );
        }
        Ok(Self { si, kappa_si })
    }

    /// Convert a rate in κ units for emission (Hz under --si).
    pub fn rate(&self, x_kappa: f64) -> f64 {
        if self.si {
            x_kappa * self.kappa_si.expect("checked in new") / std::f64::consts::TAU
        } else {
            x_kappa
        }
    }

    /// Convert a delay in 1/κ units for emission (seconds under --si).
    pub fn delay(&self, tau_kappa: f64) -> f64 {
        if self.si {
            tau_kappa / self.kappa_si.expect("checked in new")
        } else {
            tau_kappa
        }
    }

    pub fn rate_header(&self, base: &str) -> String {
        if self.si {
            format!("{base}_hz")
        } else {
            format!("{base}_over_kappa")
        }
    }

    pub fn delay_header(&self, base: &str) -> String {
        if self.si {
            format!("{base}_s")
        } else {
            format!("{base}_kappa")
        }
    }
}

//! Scenario configuration: a single JSON tree covering the master-equation
//! model (in units of κ or SI), an optional circuit section that derives the
//! detunings from device physics, sweep grids, output paths, and solver
//! tolerances. Shipped figure presets live under `presets/`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use nkerr_core::circuit::{
    box_frequencies, detunings, molecule_hamiltonian, mutual_capacitance, spectrum,
    CircuitParams, GeometryParams, MoleculeSpectrum,
};
use nkerr_core::nsystem::{detuning_map, NSystemParams};
use nkerr_core::solver::TruncationPolicy;

/// Unit system of the `model` section.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    /// All model rates are dimensionless multiples of κ (and `kappa` = 1).
    #[default]
    Kappa,
    /// All model rates are angular frequencies in rad/s.
    Si,
}

/// A real number or an [re, im] pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexField {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexField {
    pub fn to_c64(self) -> C64 {
        match self {
            ComplexField::Real(x) => C64::new(x, 0.0),
            ComplexField::Pair([re, im]) => C64::new(re, im),
        }
    }
}

impl Default for ComplexField {
    fn default() -> Self {
        ComplexField::Real(0.0)
    }
}

/// A scalar applied to all four levels, or one value per level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerLevel {
    Uniform(f64),
    Each([f64; 4]),
}

impl PerLevel {
    pub fn to_array(self) -> [f64; 4] {
        match self {
            PerLevel::Uniform(x) => [x; 4],
            PerLevel::Each(a) => a,
        }
    }
}

impl Default for PerLevel {
    fn default() -> Self {
        PerLevel::Uniform(0.0)
    }
}

/// Master-equation parameters. Detunings may be given directly or derived
/// from the `circuit` section (exactly one of the two).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// κ itself: 1.0 in kappa units, rad/s in SI.
    pub kappa: f64,
    /// κ in rad/s, used to convert κ-unit configs for --si output and to
    /// scale circuit-derived detunings. Ignored when `units` is `si`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_si: Option<f64>,
    pub g1: f64,
    pub g2: f64,
    /// Control Rabi rate Ω_c (real number or [re, im]).
    #[serde(default)]
    pub control_rabi: ComplexField,
    /// Cavity drive amplitude E_p.
    #[serde(default)]
    pub pump: f64,
    /// Δ = ω₃₄ − ω_a.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning_34: Option<f64>,
    /// δ = ω₁₂ − ω_a.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning_12: Option<f64>,
    /// δ_c = ω₂₃ − ω_c (0 = resonant control).
    #[serde(default)]
    pub detuning_control: f64,
    /// Decay rates keyed "ij" for the transition i → j, e.g. {"21": 0.1}.
    #[serde(default)]
    pub decay: BTreeMap<String, f64>,
    /// Pure dephasing rate(s) γ_kk.
    #[serde(default)]
    pub dephasing: PerLevel,
}

/// Direct level-structure inputs (ordinary frequencies, Hz).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelsSection {
    /// Exchange coupling J/2π.
    pub exchange_hz: f64,
    /// Tunneling rates ω_x/2π per box.
    pub tunneling_hz: [f64; 2],
    /// Effective Zeeman terms ω̄_z/2π per box (0 at co-resonance).
    #[serde(default)]
    pub zeeman_hz: [f64; 2],
}

/// Raw device inputs (SI), mapped through charging/Josephson energies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometrySection>,
    pub junction_capacitance_f: [f64; 2],
    pub gate_capacitance_f: [f64; 2],
    /// Override for C⁽ᵐ⁾; derived from `geometry` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mutual_capacitance_f: Option<f64>,
    /// Bare Josephson energy ℰ_J per junction (J).
    pub josephson_energy_j: [f64; 2],
    /// Gate charge N_g per box, in Cooper pairs.
    pub gate_charge: [f64; 2],
    /// Φ/Φ₀ per box.
    #[serde(default)]
    pub flux_ratio: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    pub length_m: f64,
    pub width_m: f64,
    pub gap_m: f64,
    pub epsilon_r: f64,
}

/// Device physics from which the molecule spectrum and the field detunings
/// are derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitSection {
    /// Cavity frequency ω_a/2π (Hz).
    pub cavity_freq_hz: f64,
    /// Control frequency ω_c/2π (Hz); resonant with ω₂₃ when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_freq_hz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<LevelsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device: Option<DeviceSection>,
}

/// One sweep axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    #[serde(default)]
    pub scale: GridScale,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum GridScale {
    #[default]
    Linear,
    Log,
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.points == 0 {
            bail!("grid needs at least one point");
        }
        if !(self.min.is_finite() && self.max.is_finite()) {
            bail!("grid bounds must be finite");
        }
        if self.points == 1 {
            return Ok(vec![self.min]);
        }
        if self.max <= self.min {
            bail!("grid max must exceed min");
        }
        let n = self.points;
        Ok(match self.scale {
            GridScale::Linear => (0..n)
                .map(|k| self.min + (self.max - self.min) * k as f64 / (n - 1) as f64)
                .collect(),
            GridScale::Log => {
                if self.min <= 0.0 {
                    bail!("log grid needs positive bounds");
                }
                (0..n)
                    .map(|k| self.min * (self.max / self.min).powf(k as f64 / (n - 1) as f64))
                    .collect()
            }
        })
    }
}

/// Sweep axes. All grids are dimensionless regardless of the model's unit
/// system: pump and control in units of κ, spectrum frequencies in ω/κ,
/// delays in τκ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// E_p/κ values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pump: Option<GridSpec>,
    /// Ω_c/κ values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_rabi: Option<GridSpec>,
    /// ω/κ values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<GridSpec>,
    /// τκ values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<GridSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    /// Base Fock dimension.
    pub n_max: usize,
    /// Escalation ceiling.
    pub n_max_cap: usize,
    /// Run the fock_dim + 3 re-solve before declaring convergence.
    pub verify_truncation: bool,
    /// Worker threads for sweeps; 0 = all cores.
    pub jobs: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self { n_max: 8, n_max_cap: 20, verify_truncation: true, jobs: 0 }
    }
}

/// Parameters of the FFT-vs-resolvent agreement report for `squeeze`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DualCheckSection {
    /// Correlation time step, units of 1/κ.
    pub dt: f64,
    /// Number of steps (even).
    pub steps: usize,
    /// FFT bins to compare (bin m sits at ω = 2πm/(steps·dt)).
    pub bins: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub units: Units,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circuit: Option<CircuitSection>,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub solver: SolverSection,
    /// Optional quadrature phase for `squeeze` (radians); auto when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dual_check: Option<DualCheckSection>,
}

/// Everything derived from the circuit section, in angular SI units.
#[derive(Debug, Clone)]
pub struct CircuitReport {
    pub spectrum: MoleculeSpectrum,
    pub omega_a: f64,
    pub omega_c: f64,
    /// (Δ, δ, δ_c), rad/s.
    pub detunings: (f64, f64, f64),
    pub exchange: f64,
    /// C⁽ᵐ⁾ when the device path was used.
    pub mutual_capacitance_f: Option<f64>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        // accept a bare config or a manifest wrapping one under "config"
        let value: serde_json::Value =
            serde_json::from_str(text).context("config is not valid JSON")?;
        let config_value = match value.get("config") {
            Some(inner) if value.get("tool").is_some() => inner.clone(),
            _ => value,
        };
        let config: ScenarioConfig =
            serde_json::from_value(config_value).context("config does not match the schema")?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(model) = &self.model {
            if self.units == Units::Kappa && (model.kappa - 1.0).abs() > 1e-12 {
                bail!("in kappa units, model.kappa must be 1.0 (got {})", model.kappa);
            }
            if model.kappa <= 0.0 {
                bail!("model.kappa must be positive");
            }
            let direct = model.detuning_34.is_some() || model.detuning_12.is_some();
            match (direct, self.circuit.is_some()) {
                (true, true) => bail!(
                    "detunings are given both directly (model.detuning_*) and via the circuit section; provide exactly one"
                ),
                (false, false) => bail!(
                    "no detuning source: set model.detuning_34/detuning_12 or provide a circuit section"
                ),
                _ => {}
            }
            if direct && (model.detuning_34.is_none() || model.detuning_12.is_none()) {
                bail!("detuning_34 and detuning_12 must be given together");
            }
            for (key, rate) in &model.decay {
                let (i, j) = parse_decay_key(key)?;
                if i == j {
                    bail!("decay key {key} is diagonal; use `dephasing`");
                }
                if *rate < 0.0 {
                    bail!("decay rate {key} is negative");
                }
            }
        }
        if let Some(circuit) = &self.circuit {
            match (&circuit.levels, &circuit.device) {
                (Some(_), Some(_)) => bail!("circuit section has both `levels` and `device`"),
                (None, None) => bail!("circuit section needs `levels` or `device`"),
                _ => {}
            }
            if circuit.cavity_freq_hz <= 0.0 {
                bail!("cavity frequency must be positive");
            }
        }
        if self.solver.n_max < 2 || self.solver.n_max_cap < self.solver.n_max {
            bail!("solver truncation needs 2 <= n_max <= n_max_cap");
        }
        if let Some(dc) = &self.dual_check {
            if dc.steps < 2 || dc.steps % 2 != 0 {
                bail!("dual_check.steps must be even and at least 2");
            }
            if dc.dt <= 0.0 {
                bail!("dual_check.dt must be positive");
            }
        }
        Ok(())
    }

    /// Solve the circuit section into a spectrum and field detunings.
    pub fn circuit_report(&self) -> Result<CircuitReport> {
        let circuit = self.circuit.as_ref().context("no circuit section in the config")?;
        let (omega_z_bar, omega_x, exchange, c_m) = match (&circuit.levels, &circuit.device) {
            (Some(levels), None) => (
                (TAU * levels.zeeman_hz[0], TAU * levels.zeeman_hz[1]),
                (TAU * levels.tunneling_hz[0], TAU * levels.tunneling_hz[1]),
                TAU * levels.exchange_hz,
                None,
            ),
            (None, Some(device)) => {
                let c_m = match device.mutual_capacitance_f {
                    Some(c) => c,
                    None => {
                        let g = device
                            .geometry
                            .as_ref()
                            .context("device needs mutual_capacitance_f or geometry")?;
                        mutual_capacitance(&GeometryParams {
                            length: g.length_m,
                            width: g.width_m,
                            gap: g.gap_m,
                            epsilon_r: g.epsilon_r,
                        })?
                    }
                };
                let params = CircuitParams {
                    junction_capacitance: device.junction_capacitance_f,
                    gate_capacitance: device.gate_capacitance_f,
                    mutual_capacitance: c_m,
                    josephson_energy: device.josephson_energy_j,
                    gate_charge: device.gate_charge,
                    flux_ratio: device.flux_ratio,
                };
                let freqs = box_frequencies(&params)?;
                let offset = [device.gate_charge[0] - 0.5, device.gate_charge[1] - 0.5];
                (
                    (freqs.omega_z[0] * offset[0], freqs.omega_z[1] * offset[1]),
                    (freqs.omega_x[0], freqs.omega_x[1]),
                    freqs.exchange,
                    Some(c_m),
                )
            }
            _ => unreachable!("validated"),
        };
        let h4 = molecule_hamiltonian(omega_z_bar, omega_x, exchange);
        let spec = spectrum(&h4)?;
        let omega_a = TAU * circuit.cavity_freq_hz;
        let omega_c = match circuit.control_freq_hz {
            Some(f) => TAU * f,
            None => spec.transition(2, 3), // resonant control
        };
        let det = detunings(&spec, omega_a, omega_c);
        Ok(CircuitReport {
            spectrum: spec,
            omega_a,
            omega_c,
            detunings: det,
            exchange,
            mutual_capacitance_f: c_m,
        })
    }

    /// Resolve the model into κ-unit master-equation parameters plus the SI
    /// value of κ when known.
    pub fn resolve_model(&self) -> Result<(NSystemParams, Option<f64>)> {
        let model = self.model.as_ref().context("no model section in the config")?;
        let kappa_si = match self.units {
            Units::Si => Some(model.kappa),
            Units::Kappa => model.kappa_si,
        };
        // normalisation: divide SI rates by κ, keep κ-unit rates as-is
        let scale = match self.units {
            Units::Si => model.kappa,
            Units::Kappa => 1.0,
        };

        let (d34, d12, dc) = match (model.detuning_34, model.detuning_12) {
            (Some(a), Some(b)) => (a / scale, b / scale, model.detuning_control / scale),
            _ => {
                let report = self.circuit_report()?;
                let k_si = kappa_si.context(
                    "circuit-derived detunings need kappa in SI: set model.kappa_si (kappa units) or use si units",
                )?;
                let (big, small, ctrl) = report.detunings;
                (big / k_si, small / k_si, ctrl / k_si)
            }
        };
        let (d21, d31, d41) = detuning_map(d34, d12, dc);

        let mut gamma = [[0.0; 4]; 4];
        for (key, rate) in &model.decay {
            let (i, j) = parse_decay_key(key)?;
            gamma[i - 1][j - 1] = rate / scale;
        }
        let dephasing = model.dephasing.to_array().map(|x| x / scale);

        let params = NSystemParams {
            g1: model.g1 / scale,
            g2: model.g2 / scale,
            omega_c: model.control_rabi.to_c64() / scale,
            e_p: model.pump / scale,
            delta_21: d21,
            delta_31: d31,
            delta_41: d41,
            kappa: 1.0,
            gamma,
            gamma_ph: dephasing,
            n_max: self.solver.n_max,
        };
        params.validate().map_err(|e| anyhow::anyhow!("model validation: {e}"))?;
        Ok((params, kappa_si))
    }

    pub fn truncation_policy(&self) -> TruncationPolicy {
        TruncationPolicy {
            base: self.solver.n_max,
            cap: self.solver.n_max_cap,
            verify_resolve: self.solver.verify_truncation,
        }
    }
}

fn parse_decay_key(key: &str) -> Result<(usize, usize)> {
    let digits: Vec<u32> = key.chars().filter_map(|c| c.to_digit(10)).collect();
    if key.len() != 2 || digits.len() != 2 {
        bail!("decay key {key:?} must be two digits \"ij\"");
    }
    let (i, j) = (digits[0] as usize, digits[1] as usize);
    if !(1..=4).contains(&i) || !(1..=4).contains(&j) {
        bail!("decay key {key:?} has a level outside 1..=4");
    }
    Ok((i, j))
}

/// Built-in figure presets, embedded so the binary runs anywhere.
pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let text = match name {
        "fig3" => include_str!("../presets/fig3.json"),
        "fig4a" => include_str!("../presets/fig4a.json"),
        "fig4b" => include_str!("../presets/fig4b.json"),
        "table1" => include_str!("../presets/table1.json"),
        "prototype" => include_str!("../presets/prototype.json"),
        other => bail!("unknown preset {other:?}; available: fig3 fig4a fig4b table1 prototype"),
    };
    ScenarioConfig::from_json(text)
}

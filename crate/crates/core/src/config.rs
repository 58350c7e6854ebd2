//! JSON run configuration.
//!
//! Every section rejects unknown keys. Frequencies and rates are given as ordinary
//! frequencies in Hz (fields ending in `_hz`) and converted to rad/s here; all other values
//! are SI.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use crate::dynamics::fourier::FourierTruncation;
use crate::dynamics::unbalanced::UnbalancedOptions;
use crate::error::{Error, Result};
use crate::measure::{MeasurementConfig, DEFAULT_CUTOFF, DEFAULT_SEGMENTS};
use crate::metrics::DriveSpec;
use crate::params::{
    derive_rates, CircuitSpec, Couplings, Device, MembraneSpec, Topology,
};
use crate::plan::{McFitOptions, PlanTargets, SweepAxis};

const TAU: f64 = 2.0 * PI;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub circuit: Option<CircuitSection>,
    pub membrane: Option<MembraneSection>,
    pub couplings: Option<CouplingsSection>,
    pub drive: Option<DriveSection>,
    pub truncation: Option<TruncationSection>,
    pub dynamics: Option<DynamicsSection>,
    pub asymmetry: Option<AsymmetrySection>,
    pub measurement: Option<MeasurementSection>,
    pub optimization: Option<OptimizationSection>,
    pub plan: Option<PlanSection>,
    pub sweep: Option<SweepSection>,
}

/// Element values of the circuit, either explicit or designed from target rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitSection {
    pub topology: Topology,
    pub l0: Option<f64>,
    pub r0: Option<f64>,
    pub z_out: Option<f64>,
    pub c0: Option<f64>,
    pub parasitic_l: Option<f64>,
    pub parasitic_r: Option<f64>,
    /// Designs the elements from rates instead of listing them.
    pub design: Option<RateDesign>,
    pub stray_cs: Option<f64>,
    pub stray_cs_over_c0: Option<f64>,
    pub delta_l: Option<f64>,
    pub delta_r: Option<f64>,
    pub delta_c: Option<f64>,
    /// δL/L.
    pub delta_l_rel: Option<f64>,
    /// δR/R.
    pub delta_r_rel: Option<f64>,
    /// δC/C₀.
    pub delta_c_rel: Option<f64>,
    pub n_bar_e: Option<f64>,
    pub reservoir_temperature: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateDesign {
    pub omega_s_hz: f64,
    pub gamma_t_hz: f64,
    pub gamma_r_hz: f64,
    pub c0: f64,
    /// L/L₀ (double arm).
    pub l_over_l0: Option<f64>,
    /// R/Z_out (double arm).
    pub r_over_zout: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MembraneSection {
    pub length: Option<f64>,
    pub width: Option<f64>,
    pub gap: Option<f64>,
    pub areal_density: Option<f64>,
    pub x0_override: Option<f64>,
    pub mode_frequency_hz: f64,
    pub quality_q: Option<f64>,
    pub gamma_b_hz: Option<f64>,
    pub n_bar_m: Option<f64>,
    pub bath_temperature: Option<f64>,
}

/// Explicit couplings replace the geometric model; they are taken as final (already diluted).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingsSection {
    pub g1_hz: Option<f64>,
    pub g2_hz: Option<f64>,
    /// δg₁/g₁.
    #[serde(default)]
    pub delta_g1_rel: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSection {
    pub photon_number: Option<f64>,
    pub flux: Option<f64>,
    pub measurement_time: Option<f64>,
    pub theta: Option<f64>,
    pub probe_frequency_hz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSection {
    pub sidebands: Option<u32>,
    pub comb: Option<u32>,
    pub period: Option<f64>,
}

/// Time grid and coupling scan shared by `heat` and `fourier`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    /// Linear couplings to scan; defaults to the configured g₁.
    #[serde(default)]
    pub g1_hz: Vec<f64>,
    pub t_end: Option<f64>,
    pub points: Option<usize>,
    #[serde(default)]
    pub n_b0: f64,
    pub check_convergence: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymmetrySection {
    /// (δR/R, δL/L, δC/C₀) triples.
    pub triples: Vec<[f64; 3]>,
    /// δg₁/g₁ values scanned for every triple.
    pub delta_g1_rel: Vec<f64>,
    pub steps_per_period: Option<usize>,
    pub t_end: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSection {
    pub lambda_prime: f64,
    pub n_eff: f64,
    /// Per-window heating; the analytic optimum when absent.
    pub delta_nb: Option<f64>,
    pub segments_per_window: Option<u32>,
    pub n_windows: Option<u64>,
    pub hilbert_cutoff: Option<u32>,
    pub pdf_points: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    #[default]
    AnalyticPdf,
    MonteCarloPolyFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizationSection {
    pub lambda_prime: Vec<f64>,
    pub n_eff: f64,
    #[serde(default)]
    pub method: MethodName,
    pub mc: Option<McFitOptions>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSection {
    pub delta_nb_electrical: Option<f64>,
    pub n_e: Option<f64>,
    pub measurement_time: Option<f64>,
    /// Equal electrical and mechanical heating at this total Δn_b; replaces the targets.
    pub balanced_delta_nb: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
    /// N̄_eff along a λ′ axis.
    pub n_eff: Option<f64>,
    /// Monte-Carlo visibility at each λ′ optimum.
    pub mc: Option<McFitOptions>,
}

/// Parsed configuration plus its canonical JSON text (sorted keys, execution settings removed).
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub canonical: String,
}

/// Parses a configuration document; errors carry the JSON path of the offending field.
pub fn parse_config(text: &str) -> Result<LoadedConfig> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::config("$", format!("invalid JSON: {e}")))?;
    let config: RunConfig = serde_path_to_error::deserialize(&value).map_err(|e| {
        let path = e.path().to_string();
        Error::config(if path.is_empty() { "$".into() } else { path }, e.into_inner().to_string())
    })?;
    config.validate()?;
    // Execution settings do not affect results and stay out of the hash.
    let mut hashed = value;
    if let Some(map) = hashed.as_object_mut() {
        map.remove("threads");
        map.remove("output_dir");
    }
    let canonical = serde_json::to_string(&hashed).map_err(|e| Error::config("$", e.to_string()))?;
    Ok(LoadedConfig { config, canonical })
}

pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config("--config", format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

fn positive(x: f64, path: &str) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::config(path, "must be a finite number > 0"))
    }
}

fn non_negative(x: f64, path: &str) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::config(path, "must be a finite number >= 0"))
    }
}

fn require<T: Copy>(v: Option<T>, path: &str) -> Result<T> {
    v.ok_or_else(|| Error::config(path, "required field is missing"))
}

fn exclusive(a: Option<f64>, b: Option<f64>, path: &str) -> Result<Option<(bool, f64)>> {
    match (a, b) {
        (Some(_), Some(_)) => Err(Error::config(path, "absolute and relative forms are mutually exclusive")),
        (Some(x), None) => Ok(Some((false, x))),
        (None, Some(x)) => Ok(Some((true, x))),
        (None, None) => Ok(None),
    }
}

impl RunConfig {
    /// Cross-field checks that do not need the physics resolved.
    pub fn validate(&self) -> Result<()> {
        if let Some(c) = &self.circuit {
            c.build()?;
        }
        if let Some(t) = &self.truncation {
            t.resolve().validate()?;
        }
        if let Some(p) = &self.plan {
            if p.balanced_delta_nb.is_some()
                && (p.delta_nb_electrical.is_some() || p.n_e.is_some() || p.measurement_time.is_some())
            {
                return Err(Error::config("plan.balanced_delta_nb", "cannot be combined with explicit targets"));
            }
        }
        if let Some(s) = &self.sweep {
            if s.grid.is_empty() {
                return Err(Error::config("sweep.grid", "must not be empty"));
            }
        }
        if let Some(m) = &self.measurement {
            positive(m.lambda_prime, "measurement.lambda_prime")?;
            non_negative(m.n_eff, "measurement.n_eff")?;
            if let Some(d) = m.delta_nb {
                non_negative(d, "measurement.delta_nb")?;
            }
            if m.delta_nb.is_none() && !(m.lambda_prime > 1.0) {
                return Err(Error::config("measurement.lambda_prime", "must exceed 1 when delta_nb is optimized"));
            }
        }
        if let Some(o) = &self.optimization {
            if o.lambda_prime.is_empty() {
                return Err(Error::config("optimization.lambda_prime", "must not be empty"));
            }
            for (i, &lp) in o.lambda_prime.iter().enumerate() {
                if !(lp > 1.0) {
                    return Err(Error::config(format!("optimization.lambda_prime[{i}]"), "must exceed 1"));
                }
            }
            non_negative(o.n_eff, "optimization.n_eff")?;
        }
        if let Some(s) = &self.sweep {
            if s.axis == SweepAxis::LambdaPrime {
                if let Some(i) = s.grid.iter().position(|&x| !(x > 1.0)) {
                    return Err(Error::config(format!("sweep.grid[{i}]"), "lambda' must exceed 1"));
                }
            }
        }
        if self.threads == Some(0) {
            return Err(Error::config("threads", "must be >= 1"));
        }
        Ok(())
    }

    pub fn circuit_spec(&self) -> Result<CircuitSpec> {
        require(self.circuit.as_ref(), "circuit")?.build()
    }

    pub fn membrane_section(&self) -> Result<&MembraneSection> {
        require(self.membrane.as_ref(), "membrane")
    }

    /// Resolved device: rates from the circuit, couplings from the geometry or explicit values.
    pub fn device(&self) -> Result<(Device, Vec<String>)> {
        let circuit = self.circuit_spec()?;
        let m = self.membrane_section()?;
        let c = self.couplings.clone().unwrap_or_default();
        match (c.g1_hz, c.g2_hz) {
            (None, None) => {
                let spec = m.geometric()?;
                Device::from_specs(&circuit, &spec, c.delta_g1_rel)
            }
            (g1, g2) => {
                circuit.validate()?;
                let rates = derive_rates(&circuit)?;
                let spec = m.damping_only();
                spec.validate()?;
                let (gamma_b, warnings) = spec.resolve_gamma_b()?;
                let g1 = TAU * g1.unwrap_or(0.0);
                let couplings = Couplings::new(g1, TAU * g2.unwrap_or(0.0)).with_asymmetry(
                    c.delta_g1_rel * g1,
                    circuit.delta_c,
                    circuit.c0,
                );
                Ok((
                    Device {
                        topology: circuit.topology,
                        rates,
                        couplings,
                        omega_m: spec.omega_m,
                        gamma_b,
                        n_bar_m: spec.resolve_n_bar_m(),
                        n_bar_e: circuit.resolve_n_bar_e(rates.omega_s),
                        z_out: circuit.z_out,
                        parasitic_r: circuit.parasitic_r,
                        c0: circuit.c0,
                    },
                    warnings,
                ))
            }
        }
    }

    /// Drive for one window; `None` when the section is absent or carries no photons.
    pub fn drive(&self) -> Result<Option<DriveSpec>> {
        let Some(d) = &self.drive else { return Ok(None) };
        if d.photon_number.is_none() && d.flux.is_none() {
            return Ok(None);
        }
        let window = require(d.measurement_time, "drive.measurement_time")?;
        let mut drive = DriveSpec::resolve(d.photon_number, d.flux, window)?;
        if let Some(theta) = d.theta {
            drive.theta = theta;
        }
        drive.probe_frequency = d.probe_frequency_hz.map(|f| TAU * f);
        Ok(Some(drive))
    }

    pub fn require_drive(&self) -> Result<DriveSpec> {
        self.drive()?
            .ok_or_else(|| Error::config("drive", "a photon number or flux is required"))
    }

    pub fn truncation(&self) -> FourierTruncation {
        self.truncation.clone().unwrap_or_default().resolve()
    }

    pub fn unbalanced_options(&self) -> UnbalancedOptions {
        let mut o = UnbalancedOptions::default();
        if let Some(n) = self.asymmetry.as_ref().and_then(|a| a.steps_per_period) {
            o.steps_per_period = n;
        }
        o
    }

    /// Measurement protocol; `delta_nb` falls back to `optimal` when not configured.
    pub fn measurement(&self, seed: u64, optimal: impl FnOnce(f64, f64) -> Result<f64>) -> Result<MeasurementConfig> {
        let m = require(self.measurement.as_ref(), "measurement")?;
        let dn = match m.delta_nb {
            Some(x) => x,
            None => optimal(m.lambda_prime, m.n_eff)?,
        };
        let mut cfg = MeasurementConfig::new(m.lambda_prime, m.n_eff, dn)
            .map_err(|e| relabel(e, "measurement"))?
            .with_sampling(m.n_windows.unwrap_or(100_000), seed);
        cfg.segments_per_window = m.segments_per_window.unwrap_or(DEFAULT_SEGMENTS);
        cfg.cutoff = m.hilbert_cutoff.unwrap_or(DEFAULT_CUTOFF);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn plan_targets(&self, device: &Device) -> Result<PlanTargets> {
        let p = require(self.plan.as_ref(), "plan")?;
        match p.balanced_delta_nb {
            Some(dn) => PlanTargets::balanced(dn, device),
            None => Ok(PlanTargets {
                delta_nb_electrical: p.delta_nb_electrical,
                n_e: p.n_e,
                window: p.measurement_time,
            }),
        }
    }
}

fn relabel(e: Error, prefix: &str) -> Error {
    match e {
        Error::Config { path, message } => Error::config(path.replacen("measurement", prefix, 1), message),
        other => other,
    }
}

impl TruncationSection {
    pub fn resolve(&self) -> FourierTruncation {
        let d = FourierTruncation::default();
        FourierTruncation {
            sidebands: self.sidebands.unwrap_or(d.sidebands),
            comb: self.comb.unwrap_or(d.comb),
            period: self.period,
        }
    }
}

impl CircuitSection {
    pub fn build(&self) -> Result<CircuitSpec> {
        let mut spec = match &self.design {
            Some(d) => {
                let explicit = [self.l0, self.r0, self.z_out, self.c0, self.parasitic_l, self.parasitic_r];
                if explicit.iter().any(Option::is_some) {
                    return Err(Error::config("circuit.design", "cannot be combined with explicit element values"));
                }
                d.build(self.topology)?
            }
            None => {
                let l0 = require(self.l0, "circuit.l0")?;
                let r0 = require(self.r0, "circuit.r0")?;
                let z = require(self.z_out, "circuit.z_out")?;
                let c0 = require(self.c0, "circuit.c0")?;
                match self.topology {
                    Topology::SingleArm => {
                        if self.parasitic_l.is_some() || self.parasitic_r.is_some() {
                            return Err(Error::config("circuit.parasitic_l", "not allowed for the single-arm topology"));
                        }
                        CircuitSpec::single_arm(l0, r0, z, c0)
                    }
                    Topology::DoubleArm => CircuitSpec::double_arm(
                        l0,
                        r0,
                        z,
                        c0,
                        require(self.parasitic_l, "circuit.parasitic_l")?,
                        require(self.parasitic_r, "circuit.parasitic_r")?,
                    ),
                }
            }
        };
        if let Some((rel, v)) = exclusive(self.stray_cs, self.stray_cs_over_c0, "circuit.stray_cs")? {
            spec.stray_cs = if rel { v * spec.c0 } else { v };
        }
        if let Some((rel, v)) = exclusive(self.delta_l, self.delta_l_rel, "circuit.delta_l")? {
            spec.delta_l = if rel { v * spec.parasitic_l } else { v };
        }
        if let Some((rel, v)) = exclusive(self.delta_r, self.delta_r_rel, "circuit.delta_r")? {
            spec.delta_r = if rel { v * spec.parasitic_r } else { v };
        }
        if let Some((rel, v)) = exclusive(self.delta_c, self.delta_c_rel, "circuit.delta_c")? {
            spec.delta_c = if rel { v * spec.c0 } else { v };
        }
        spec.n_bar_e = self.n_bar_e;
        spec.reservoir_temperature = self.reservoir_temperature;
        spec.validate()?;
        Ok(spec)
    }
}

impl RateDesign {
    fn build(&self, topology: Topology) -> Result<CircuitSpec> {
        let (ws, gt, gr) = (TAU * self.omega_s_hz, TAU * self.gamma_t_hz, TAU * self.gamma_r_hz);
        if !(ws > 0.0 && self.c0 > 0.0) {
            return Err(Error::config("circuit.design", "omega_s_hz and c0 must be > 0"));
        }
        match topology {
            Topology::SingleArm => {
                if self.l_over_l0.is_some() || self.r_over_zout.is_some() {
                    return Err(Error::config("circuit.design.l_over_l0", "not allowed for the single-arm topology"));
                }
                Ok(CircuitSpec::single_arm_from_rates(ws, gt, gr, self.c0))
            }
            Topology::DoubleArm => CircuitSpec::double_arm_from_rates(
                ws,
                gt,
                gr,
                require(self.l_over_l0, "circuit.design.l_over_l0")?,
                require(self.r_over_zout, "circuit.design.r_over_zout")?,
                self.c0,
            ),
        }
    }
}

impl MembraneSection {
    fn damping_only(&self) -> MembraneSpec {
        MembraneSpec {
            length: self.length.unwrap_or(1.0),
            width: self.width.unwrap_or(1.0),
            gap: self.gap.unwrap_or(1.0),
            areal_density: self.areal_density.unwrap_or(crate::params::DEFAULT_AREAL_DENSITY),
            x0_override: self.x0_override,
            omega_m: TAU * self.mode_frequency_hz,
            quality_q: self.quality_q,
            gamma_b: self.gamma_b_hz.map(|g| TAU * g),
            n_bar_m: self.n_bar_m,
            bath_temperature: self.bath_temperature,
        }
    }

    /// Full membrane with geometry, as needed for geometric couplings.
    pub fn geometric(&self) -> Result<MembraneSpec> {
        require(self.length, "membrane.length")?;
        require(self.width, "membrane.width")?;
        require(self.gap, "membrane.gap")?;
        Ok(self.damping_only())
    }
}

//! The `qndsim` command line.
//!
//! Every subcommand reads one JSON configuration, computes its artifacts in memory and writes
//! them, together with `manifest.json`, into the output directory. Frequencies in CSV columns
//! (couplings `g1`, `g2`, `g_r`) are in Hz; JSON documents keep angular units (rad/s).

use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::{load_config, MethodName, RunConfig};
use crate::dynamics::covariance::{covariance_evolve, rlc_initial_state, rlc_model};
use crate::dynamics::fourier::fourier_heating_solve;
use crate::dynamics::uniform_grid;
use crate::dynamics::unbalanced::unbalanced_simulate;
use crate::error::{Error, Result};
use crate::measure::{
    asymptotic_visibility, ks_two_peak, mc_sample_outcomes, pdf_curve, visibility_from_histogram,
    visibility_from_pdf, MeasurementConfig, OutcomeHistogram, ValleyRule, VisibilityResult,
};
use crate::metrics::{
    combined_steady_state, double_heating_limit, lambda_family, merit_report, phonon_trajectory_analytic,
    DriveSpec, LambdaFamily, MeritReport, Trajectory,
};
use crate::output::{
    csv_artifact, json_artifact, manifest_hash, write_all, Artifact, ArtifactEntry, Cell, RunManifest,
};
use crate::params::{Device, Topology};
use crate::plan::{
    optimize_delta_nb, plan_experiment, strong_coupling_boundary, sweep, visibility_sweep, ExperimentPlan,
    McFitOptions, OptimizationMethod, OptimizationResult, PlanTargets, SweepAxis, SweepTable, SweepTemplate,
    TargetRule,
};
use crate::Extended;

const TAU: f64 = 2.0 * PI;

#[derive(Debug, Parser)]
#[command(name = "qndsim", version, about = "Phonon-number readout simulations for electromechanical circuits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides `output_dir` in the configuration).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Random seed (overrides `seed` in the configuration).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true, env = "QNDSIM_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Closed-form figures of merit.
    Metrics,
    /// Heating trajectories of the configured topology.
    Heat,
    /// Balanced double-arm heating from the Fourier solver, scanned over g1.
    Fourier,
    /// Heating rates of the asymmetric double arm.
    Asym,
    /// Monte-Carlo outcome histogram against the analytic density.
    Measure,
    /// Optimal per-window heating for each λ′.
    Optimize,
    /// Drive and window for the requested targets.
    Plan,
    /// Plan or visibility along one parameter axis.
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Metrics => "metrics",
            Command::Heat => "heat",
            Command::Fourier => "fourier",
            Command::Asym => "asym",
            Command::Measure => "measure",
            Command::Optimize => "optimize",
            Command::Plan => "plan",
            Command::Sweep => "sweep",
        }
    }
}

/// Artifacts and diagnostics of one command, before anything touches the disk.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub artifacts: Vec<Artifact>,
    pub warnings: Vec<String>,
    /// Human-readable lines printed on success.
    pub summary: Vec<String>,
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run_cli(&cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            0
        }
        Err(e) => {
            eprintln!("qndsim: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command line; returns the summary lines.
pub fn run_cli(cli: &Cli) -> Result<Vec<String>> {
    let started = Instant::now();
    let path = cli.config.as_ref().ok_or_else(|| Error::config("--config", "a configuration file is required"))?;
    let loaded = load_config(path)?;
    let cfg = &loaded.config;
    let threads = cli
        .threads
        .or(cfg.threads)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if threads == 0 {
        return Err(Error::config("--threads", "must be >= 1"));
    }
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    let out_dir = cli
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("qndsim-out"));
    let hash = manifest_hash(&loaded.canonical, seed, cli.command.name());
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Io(e.to_string()))?;
    let output = pool.install(|| execute(cli.command, cfg, seed, &hash))?;
    let manifest = RunManifest {
        tool: "qndsim",
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name().to_string(),
        config_hash: hash,
        seed,
        threads,
        wall_time_s: started.elapsed().as_secs_f64(),
        artifacts: output
            .artifacts
            .iter()
            .map(|a| ArtifactEntry {
                name: a.name.clone(),
                sha256: a.sha256(),
            })
            .collect(),
        warnings: output.warnings.clone(),
    };
    write_all(&out_dir, &output.artifacts, &manifest)?;
    let mut lines = output.summary;
    for w in &output.warnings {
        lines.push(format!("warning: {w}"));
    }
    lines.push(format!("wrote {} artifacts to {}", output.artifacts.len() + 1, display(&out_dir)));
    Ok(lines)
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

/// Computes the artifacts of `command`. `hash` heads every CSV.
pub fn execute(command: Command, cfg: &RunConfig, seed: u64, hash: &str) -> Result<RunOutput> {
    match command {
        Command::Metrics => cmd_metrics(cfg, hash),
        Command::Heat => cmd_heat(cfg, hash),
        Command::Fourier => cmd_fourier(cfg, hash),
        Command::Asym => cmd_asym(cfg, hash),
        Command::Measure => cmd_measure(cfg, seed, hash),
        Command::Optimize => cmd_optimize(cfg, seed, hash),
        Command::Plan => cmd_plan(cfg, hash),
        Command::Sweep => cmd_sweep(cfg, seed, hash),
    }
}

fn hz(w: f64) -> f64 {
    w / TAU
}

fn fmt_ext(x: Extended) -> String {
    match x {
        Extended::Finite(v) => format!("{v:.6e}"),
        Extended::Infinite => "inf".into(),
    }
}

fn rel_err(sim: Option<f64>, reference: Option<f64>) -> Option<f64> {
    match (sim, reference) {
        (Some(s), Some(r)) if r != 0.0 => Some((s - r) / r),
        _ => None,
    }
}

#[derive(Serialize)]
struct MeritDocument<'a> {
    device: &'a Device,
    drive: Option<DriveSpec>,
    lambda_family: LambdaFamily,
    report: Option<MeritReport>,
}

const METRIC_COLUMNS: [&str; 19] = [
    "g1",
    "g2",
    "g_r",
    "lambda",
    "lambda_b",
    "lambda_p",
    "lambda_prime",
    "n_eff",
    "n_e",
    "d",
    "sigma",
    "snr_sq",
    "probe_damping",
    "residual_heating",
    "frequency_shift",
    "delta_nb_electrical",
    "delta_nb_mechanical",
    "delta_nb_total",
    "two_phonon_rate",
];

fn cmd_metrics(cfg: &RunConfig, hash: &str) -> Result<RunOutput> {
    let (device, warnings) = cfg.device()?;
    let drive = cfg.drive()?;
    let family = lambda_family(&device);
    let report = drive.as_ref().map(|d| merit_report(d, &device));
    let c = device.couplings;
    let mut row: Vec<Cell> = vec![
        hz(c.g1).into(),
        hz(c.g2).into(),
        hz(c.g_r).into(),
        family.lambda.into(),
        family.lambda_b.into(),
        family.lambda_p.into(),
    ];
    match &report {
        Some(r) => row.extend([
            r.lambda_prime.into(),
            r.n_eff.into(),
            r.n_e_effective.into(),
            r.d.into(),
            r.sigma.into(),
            r.d_sq.into(),
            r.gamma_b.into(),
            r.gamma_b_tilde.into(),
            r.omega_b_shift.into(),
            r.delta_nb_electrical.into(),
            r.delta_nb_mechanical.into(),
            r.delta_nb_total.into(),
            r.two_phonon_rate.into(),
        ]),
        None => row.extend(std::iter::repeat_n(Cell::Empty, METRIC_COLUMNS.len() - 6)),
    }
    let mut summary = vec![
        format!("lambda   = {}", fmt_ext(family.lambda)),
        format!("lambda_b = {}", fmt_ext(family.lambda_b)),
        format!("lambda_p = {}", fmt_ext(family.lambda_p)),
    ];
    if let Some(r) = &report {
        summary.push(format!("lambda'  = {}", fmt_ext(r.lambda_prime)));
        summary.push(format!("N_eff    = {}", fmt_ext(r.n_eff)));
    }
    let doc = MeritDocument {
        device: &device,
        drive,
        lambda_family: family,
        report,
    };
    Ok(RunOutput {
        artifacts: vec![
            json_artifact("merit_report.json", &doc)?,
            csv_artifact("metrics.csv", hash, &METRIC_COLUMNS, &[row])?,
        ],
        warnings,
        summary,
    })
}

fn time_grid(cfg: &RunConfig, default_end: f64, default_points: usize) -> (Vec<f64>, f64) {
    let d = cfg.dynamics.clone().unwrap_or_default();
    let end = d.t_end.unwrap_or(default_end);
    (uniform_grid(end, d.points.unwrap_or(default_points)), d.n_b0)
}

fn cmd_heat(cfg: &RunConfig, hash: &str) -> Result<RunOutput> {
    let drive = cfg.require_drive()?;
    let (device, warnings) = cfg.device()?;
    let (times, n0) = time_grid(cfg, drive.window, 201);
    let analytic = |t: Trajectory| phonon_trajectory_analytic(&times, t, n0, &drive, &device);
    let (header, columns): (Vec<&str>, Vec<Vec<f64>>) = match device.topology {
        Topology::SingleArm => {
            let sim = covariance_evolve(&rlc_model(&drive, &device)?, &rlc_initial_state(&device, n0), &times)?;
            (
                vec!["t", "n_b_sim", "n_b_exact", "n_b_approx"],
                vec![sim.n_b, analytic(Trajectory::RlcExact)?, analytic(Trajectory::RlcApprox)?],
            )
        }
        Topology::DoubleArm => (
            vec!["t", "n_b_balanced", "n_b_combined"],
            vec![analytic(Trajectory::DoubleArm)?, analytic(Trajectory::Combined)?],
        ),
    };
    let rows: Vec<Vec<Cell>> = times
        .iter()
        .enumerate()
        .map(|(i, &t)| std::iter::once(t).chain(columns.iter().map(|c| c[i])).map(Cell::Num).collect())
        .collect();
    let last = columns.iter().map(|c| c.last().copied().unwrap_or(0.0));
    let summary = header[1..]
        .iter()
        .zip(last)
        .map(|(h, v)| format!("{h}(t_end) = {v:.6e}"))
        .collect();
    Ok(RunOutput {
        artifacts: vec![csv_artifact("heat.csv", hash, &header, &rows)?],
        warnings,
        summary,
    })
}

/// Device with a different linear coupling; mismatch terms scale along.
fn with_g1(device: &Device, g1: f64) -> Device {
    let mut d = device.clone();
    let f = if device.couplings.g1 != 0.0 { g1 / device.couplings.g1 } else { 0.0 };
    d.couplings.g1 = g1;
    d.couplings.g_r *= f;
    d.couplings.delta_g1 *= f;
    d
}

fn cmd_fourier(cfg: &RunConfig, hash: &str) -> Result<RunOutput> {
    let drive = cfg.require_drive()?;
    let (device, mut warnings) = cfg.device()?;
    let mut balanced = device.clone();
    balanced.couplings.g_r = 0.0;
    balanced.couplings.delta_g1 = 0.0;
    let dynamics = cfg.dynamics.clone().unwrap_or_default();
    let grid: Vec<f64> = if dynamics.g1_hz.is_empty() {
        vec![device.couplings.g1]
    } else {
        dynamics.g1_hz.iter().map(|g| TAU * g).collect()
    };
    let trunc = cfg.truncation();
    let check = dynamics.check_convergence.unwrap_or(true);
    let n0 = dynamics.n_b0;
    let points = dynamics.points.unwrap_or(201);
    let (mut half_rows, mut steady_rows, mut traj_rows, mut summary) = (vec![], vec![], vec![], vec![]);
    for &g1 in &grid {
        let dev = with_g1(&balanced, g1);
        let (steady, t_half) = combined_steady_state(&drive, &dev, false)?;
        let period = trunc.resolved_period(&drive, &dev);
        let default_end = t_half.finite().map_or(period, |t| 5.0 * t);
        let end = dynamics.t_end.unwrap_or(default_end).min(0.999 * period);
        let times = uniform_grid(end, points);
        let sol = fourier_heating_solve(&drive, &dev, &trunc, &times, n0, check)?;
        let an = phonon_trajectory_analytic(&times, Trajectory::DoubleArm, n0, &drive, &dev)?;
        let s = &sol.solution;
        warnings.extend(s.warnings.iter().map(|w| format!("g1 = {} Hz: {w}", hz(g1))));
        half_rows.push(vec![
            hz(g1).into(),
            s.t_half.into(),
            t_half.finite().into(),
            rel_err(s.t_half, t_half.finite()).into(),
        ]);
        steady_rows.push(vec![
            hz(g1).into(),
            s.n_b_steady.into(),
            steady.into(),
            rel_err(s.n_b_steady.finite(), steady.finite()).into(),
            sol.steady_refined.into(),
            sol.residual.into(),
            sol.period.into(),
        ]);
        for (i, &t) in times.iter().enumerate() {
            traj_rows.push(vec![hz(g1).into(), t.into(), s.n_b[i].into(), an[i].into()]);
        }
        summary.push(format!(
            "g1 = {:.4e} Hz: T_half = {} (analytic {}), n_inf = {} (analytic {})",
            hz(g1),
            s.t_half.map_or("n/a".into(), |t| format!("{t:.6e}")),
            fmt_ext(t_half),
            fmt_ext(s.n_b_steady),
            fmt_ext(steady)
        ));
    }
    Ok(RunOutput {
        artifacts: vec![
            csv_artifact("T_half.csv", hash, &["g1", "T_half_sim", "T_half_analytic", "rel_err"], &half_rows)?,
            csv_artifact(
                "steady_state.csv",
                hash,
                &["g1", "n_inf_sim", "n_inf_analytic", "rel_err", "n_inf_refined", "residual", "period"],
                &steady_rows,
            )?,
            csv_artifact("trajectory.csv", hash, &["g1", "t", "n_b_sim", "n_b_analytic"], &traj_rows)?,
        ],
        warnings,
        summary,
    })
}

struct AsymPoint {
    key: [f64; 4],
    g_r_over_g1: f64,
    h_sim: f64,
    h_analytic: f64,
    relaxation_sim: f64,
    relaxation_analytic: f64,
    steady: Extended,
    times: Vec<f64>,
    n_b: Vec<f64>,
    warnings: Vec<String>,
}

fn asym_point(cfg: &RunConfig, drive: &DriveSpec, key: [f64; 4]) -> Result<AsymPoint> {
    let mut local = cfg.clone();
    let circuit = local.circuit.as_mut().ok_or_else(|| Error::config("circuit", "required field is missing"))?;
    circuit.delta_r = None;
    circuit.delta_l = None;
    circuit.delta_c = None;
    circuit.delta_r_rel = Some(key[0]);
    circuit.delta_l_rel = Some(key[1]);
    circuit.delta_c_rel = Some(key[2]);
    local.couplings.get_or_insert_with(Default::default).delta_g1_rel = key[3];
    let spec = local.circuit_spec()?;
    let (device, mut warnings) = local.device()?;
    let a = cfg.asymmetry.as_ref().expect("checked by caller");
    let times = uniform_grid(a.t_end.unwrap_or(drive.window), a.points.unwrap_or(21));
    let n0 = cfg.dynamics.as_ref().map_or(0.0, |d| d.n_b0);
    let sol = unbalanced_simulate(&spec, &device, drive, &times, n0, &cfg.unbalanced_options())?;
    let probe = double_heating_limit(drive, &device)?.gamma_b;
    let relaxation_analytic = device.gamma_b + probe;
    let (steady, _) = combined_steady_state(drive, &device, true)?;
    let h_analytic = relaxation_analytic * (steady.finite().unwrap_or(f64::INFINITY) - n0);
    warnings.extend(sol.solution.warnings.iter().cloned());
    let g1 = device.couplings.g1;
    Ok(AsymPoint {
        key,
        g_r_over_g1: if g1 != 0.0 { device.couplings.g_r / g1 } else { 0.0 },
        h_sim: sol.heating_rate,
        h_analytic,
        relaxation_sim: sol.relaxation_rate,
        relaxation_analytic,
        steady: sol.solution.n_b_steady,
        times: sol.solution.times,
        n_b: sol.solution.n_b,
        warnings,
    })
}

fn cmd_asym(cfg: &RunConfig, hash: &str) -> Result<RunOutput> {
    let drive = cfg.require_drive()?;
    let a = cfg.asymmetry.as_ref().ok_or_else(|| Error::config("asymmetry", "required field is missing"))?;
    if a.triples.is_empty() {
        return Err(Error::config("asymmetry.triples", "must not be empty"));
    }
    let dg: Vec<f64> = if a.delta_g1_rel.is_empty() { vec![0.0] } else { a.delta_g1_rel.clone() };
    let keys: Vec<[f64; 4]> = a
        .triples
        .iter()
        .flat_map(|t| dg.iter().map(move |&d| [t[0], t[1], t[2], d]))
        .collect();
    let points: Vec<AsymPoint> = keys
        .par_iter()
        .map(|&k| asym_point(cfg, &drive, k))
        .collect::<Result<_>>()?;
    let mut warnings = Vec::new();
    let (mut rate_rows, mut traj_rows, mut summary) = (vec![], vec![], vec![]);
    for p in &points {
        let prefix = p.key.iter().map(|&x| Cell::Num(x));
        let ratio = if p.h_analytic != 0.0 { Some(p.h_sim / p.h_analytic) } else { None };
        let mut row: Vec<Cell> = prefix.clone().collect();
        row.extend([
            p.g_r_over_g1.into(),
            p.h_sim.into(),
            p.h_analytic.into(),
            ratio.into(),
            p.relaxation_sim.into(),
            p.relaxation_analytic.into(),
            p.steady.into(),
        ]);
        rate_rows.push(row);
        for (t, n) in p.times.iter().zip(&p.n_b) {
            let mut r: Vec<Cell> = prefix.clone().collect();
            r.extend([Cell::Num(*t), Cell::Num(*n)]);
            traj_rows.push(r);
        }
        let tag = format!("dR/R={} dL/L={} dC/C0={} dg1/g1={}", p.key[0], p.key[1], p.key[2], p.key[3]);
        warnings.extend(p.warnings.iter().map(|w| format!("{tag}: {w}")));
        summary.push(format!(
            "{tag}: h_sim = {:.6e}/s, h_analytic = {:.6e}/s, ratio = {}",
            p.h_sim,
            p.h_analytic,
            ratio.map_or("n/a".into(), |r| format!("{r:.4}"))
        ));
    }
    let key_cols = ["delta_r_rel", "delta_l_rel", "delta_c_rel", "delta_g1_rel"];
    let rate_header: Vec<&str> = key_cols
        .iter()
        .copied()
        .chain([
            "g_r_over_g1",
            "h_sim",
            "h_analytic",
            "ratio",
            "relaxation_rate_sim",
            "relaxation_rate_analytic",
            "n_inf_sim",
        ])
        .collect();
    let traj_header: Vec<&str> = key_cols.iter().copied().chain(["t", "n_b"]).collect();
    Ok(RunOutput {
        artifacts: vec![
            csv_artifact("heating_rates.csv", hash, &rate_header, &rate_rows)?,
            csv_artifact("asym_trajectory.csv", hash, &traj_header, &traj_rows)?,
        ],
        warnings,
        summary,
    })
}

#[derive(Serialize)]
struct MeasureSummary {
    config: MeasurementConfig,
    visibility_analytic: VisibilityResult,
    visibility_sampled: VisibilityResult,
    visibility_asymptotic: Option<f64>,
    ks_two_peak: f64,
    underflow: u64,
    overflow: u64,
    cutoff_hits: u64,
    total_jumps: u64,
}

fn cmd_measure(cfg: &RunConfig, seed: u64, hash: &str) -> Result<RunOutput> {
    let m = cfg.measurement(seed, |lp, n| {
        Ok(optimize_delta_nb(lp, n, &OptimizationMethod::AnalyticPdf)?.delta_nb_opt)
    })?;
    let samples = mc_sample_outcomes(&m)?;
    let hist = OutcomeHistogram::for_config(&samples.values, &m)?;
    let hist_rows: Vec<Vec<Cell>> = (0..hist.bins())
        .map(|k| {
            vec![
                hist.edges[k].into(),
                hist.edges[k + 1].into(),
                (hist.counts[k] as f64).into(),
                hist.density(k).into(),
                hist.density_error(k).into(),
            ]
        })
        .collect();
    let points = cfg.measurement.as_ref().and_then(|s| s.pdf_points).unwrap_or(801);
    let lo = hist.edges[0];
    let hi = hist.edges[hist.bins()];
    let pdf_rows: Vec<Vec<Cell>> = pdf_curve(&m, lo, hi, points)
        .into_iter()
        .map(|(v, p)| vec![v.into(), p.into()])
        .collect();
    let analytic = visibility_from_pdf(&m, ValleyRule::Midpoint)?;
    let sampled = visibility_from_histogram(&hist, m.snr, ValleyRule::Midpoint)?;
    let doc = MeasureSummary {
        config: m,
        visibility_analytic: analytic,
        visibility_sampled: sampled,
        visibility_asymptotic: asymptotic_visibility(m.lambda_prime, m.n_bar).ok(),
        ks_two_peak: ks_two_peak(&samples.values, &m),
        underflow: hist.underflow,
        overflow: hist.overflow,
        cutoff_hits: samples.cutoff_hits,
        total_jumps: samples.total_jumps,
    };
    let summary = vec![
        format!("delta_nb = {:.6e}, D = {:.6e}", m.delta_nb, m.snr),
        format!("xi analytic = {:.6}", analytic.xi),
        format!("xi sampled  = {:.6} +/- {:.6}", sampled.xi, sampled.xi_uncertainty),
        format!("KS (two-peak domain) = {:.6}", doc.ks_two_peak),
    ];
    Ok(RunOutput {
        artifacts: vec![
            csv_artifact(
                "histogram.csv",
                hash,
                &["bin_left", "bin_right", "count", "density", "poisson_err"],
                &hist_rows,
            )?,
            csv_artifact("pdf.csv", hash, &["v_over_sigma", "density"], &pdf_rows)?,
            json_artifact("measure_summary.json", &doc)?,
        ],
        warnings: samples.warnings,
        summary,
    })
}

/// Monte-Carlo options with the run seed added to the configured offset.
fn seeded(mc: Option<&McFitOptions>, seed: u64) -> McFitOptions {
    let mut o = mc.cloned().unwrap_or_default();
    o.seed = o.seed.wrapping_add(seed);
    o
}

#[derive(Serialize)]
struct OptimizeEntry {
    lambda_prime: f64,
    n_eff: f64,
    result: OptimizationResult,
    xi_asymptotic: Option<f64>,
}

fn cmd_optimize(cfg: &RunConfig, seed: u64, hash: &str) -> Result<RunOutput> {
    let o = cfg
        .optimization
        .as_ref()
        .ok_or_else(|| Error::config("optimization", "required field is missing"))?;
    let method = match o.method {
        MethodName::AnalyticPdf => OptimizationMethod::AnalyticPdf,
        MethodName::MonteCarloPolyFit => OptimizationMethod::MonteCarloPolyFit(seeded(o.mc.as_ref(), seed)),
    };
    let mut entries = Vec::with_capacity(o.lambda_prime.len());
    for &lp in &o.lambda_prime {
        entries.push(OptimizeEntry {
            lambda_prime: lp,
            n_eff: o.n_eff,
            result: optimize_delta_nb(lp, o.n_eff, &method)?,
            xi_asymptotic: asymptotic_visibility(lp, o.n_eff).ok(),
        });
    }
    let rows: Vec<Vec<Cell>> = entries
        .iter()
        .map(|e| {
            let fit = e.result.fit.as_ref();
            vec![
                e.lambda_prime.into(),
                e.n_eff.into(),
                e.result.delta_nb_opt.into(),
                fit.map(|f| f.delta_nb_uncertainty).into(),
                e.result.xi_max.into(),
                e.xi_asymptotic.into(),
                fit.map(|f| f.reduced_chi_sq).into(),
            ]
        })
        .collect();
    let summary = entries
        .iter()
        .map(|e| {
            format!(
                "lambda' = {:e}: delta_nb_opt = {:.6e}, xi_max = {:.6}",
                e.lambda_prime, e.result.delta_nb_opt, e.result.xi_max
            )
        })
        .collect();
    Ok(RunOutput {
        artifacts: vec![
            csv_artifact(
                "optimize.csv",
                hash,
                &["lambda_prime", "n_eff", "delta_nb_opt", "delta_nb_err", "xi_max", "xi_asymptotic", "reduced_chi_sq"],
                &rows,
            )?,
            json_artifact("optimize.json", &entries)?,
        ],
        warnings: Vec::new(),
        summary,
    })
}

#[derive(Serialize)]
struct PlanDocument {
    targets: PlanTargets,
    plan: ExperimentPlan,
    /// C_s/C₀ at which g₁ falls to γ_t.
    strong_coupling_cs_over_c0: f64,
}

const PLAN_CSV: [&str; 17] = [
    "alpha_sq_total",
    "flux",
    "window",
    "p_in",
    "intracavity_photons",
    "n_e",
    "delta_nb_electrical",
    "delta_nb_mechanical",
    "lambda",
    "lambda_prime",
    "n_eff",
    "n_bar_m",
    "max_bath_temperature",
    "strong_coupling",
    "qnd",
    "g1",
    "strong_coupling_cs_over_c0",
];

fn cmd_plan(cfg: &RunConfig, hash: &str) -> Result<RunOutput> {
    let (device, warnings) = cfg.device()?;
    let targets = cfg.plan_targets(&device)?;
    let plan = plan_experiment(&device, &targets)?;
    let spec = cfg.circuit_spec()?;
    let bare = device.couplings.g1 * (spec.c0 + spec.stray_cs) / spec.c0;
    let boundary = strong_coupling_boundary(bare, device.rates.gamma_t);
    let p = &plan;
    let row: Vec<Cell> = vec![
        p.alpha_sq_total.into(),
        p.flux.into(),
        p.window.into(),
        p.p_in.into(),
        p.intracavity_photons.into(),
        p.n_e.into(),
        p.delta_nb_electrical.into(),
        p.delta_nb_mechanical.into(),
        p.lambda.into(),
        p.lambda_prime.into(),
        p.n_eff.into(),
        p.n_bar_m.into(),
        p.max_bath_temperature.into(),
        p.strong_coupling.into(),
        p.qnd.into(),
        hz(device.couplings.g1).into(),
        boundary.into(),
    ];
    let summary = vec![
        format!("window T   = {:.6e} s", p.window),
        format!("input P    = {:.6e} W", p.p_in),
        format!("photons    = {:.6e} (intracavity {:.6e})", p.alpha_sq_total, p.intracavity_photons),
        format!("N_e        = {:.6}", p.n_e),
        format!("delta_nb   = {:.6} (el) + {:.6} (mech)", p.delta_nb_electrical, p.delta_nb_mechanical),
        format!("T_bath max = {:.6e} K", p.max_bath_temperature),
    ];
    let doc = PlanDocument {
        targets,
        plan,
        strong_coupling_cs_over_c0: boundary,
    };
    Ok(RunOutput {
        artifacts: vec![json_artifact("plan.json", &doc)?, csv_artifact("plan.csv", hash, &PLAN_CSV, &[row])?],
        warnings,
        summary,
    })
}

fn cmd_sweep(cfg: &RunConfig, seed: u64, hash: &str) -> Result<RunOutput> {
    let s = cfg.sweep.as_ref().ok_or_else(|| Error::config("sweep", "required field is missing"))?;
    let mc = s.mc.as_ref().map(|m| seeded(Some(m), seed));
    let (table, name) = if s.axis == SweepAxis::LambdaPrime {
        let n_eff = s.n_eff.ok_or_else(|| Error::config("sweep.n_eff", "required for the lambda_prime axis"))?;
        (visibility_sweep(&s.grid, n_eff, mc.as_ref())?, "visibility.csv")
    } else {
        if cfg.couplings.as_ref().is_some_and(|c| c.g1_hz.is_some() || c.g2_hz.is_some()) {
            return Err(Error::config("couplings", "device sweeps need geometric couplings"));
        }
        let targets = match cfg.plan.as_ref().and_then(|p| p.balanced_delta_nb) {
            Some(dn) => TargetRule::Balanced { delta_nb_total: dn },
            None => {
                let p = cfg.plan.clone().unwrap_or_default();
                TargetRule::Fixed(PlanTargets {
                    delta_nb_electrical: p.delta_nb_electrical,
                    n_e: p.n_e,
                    window: p.measurement_time,
                })
            }
        };
        let template = SweepTemplate {
            circuit: cfg.circuit_spec()?,
            membrane: cfg.membrane_section()?.geometric()?,
            delta_g1_rel: cfg.couplings.as_ref().map_or(0.0, |c| c.delta_g1_rel),
            targets,
            n_eff: s.n_eff.unwrap_or(1.0),
            mc,
        };
        (sweep(&template, s.axis, &s.grid)?, "sweep.csv")
    };
    let (rows, warnings) = sweep_rows(&table);
    let summary = vec![format!("{} grid points, {} failed", table.rows.len(), warnings.len())];
    Ok(RunOutput {
        artifacts: vec![csv_artifact(name, hash, &table.columns, &rows)?],
        warnings,
        summary,
    })
}

/// Table cells with couplings in Hz and undefined values left empty; failures become warnings.
fn sweep_rows(table: &SweepTable) -> (Vec<Vec<Cell>>, Vec<String>) {
    let mut warnings = Vec::new();
    let rows = table
        .rows
        .iter()
        .map(|r| {
            if let Some(e) = &r.error {
                warnings.push(format!("sweep point {}: {e}", r.values[0].unwrap_or(f64::NAN)));
            }
            table
                .columns
                .iter()
                .zip(&r.values)
                .map(|(c, v)| match v {
                    Some(x) if x.is_nan() => Cell::Empty,
                    Some(x) if matches!(*c, "g1" | "g2" | "g_r") => Cell::Num(hz(*x)),
                    Some(x) => Cell::Num(*x),
                    None => Cell::Empty,
                })
                .collect()
        })
        .collect();
    (rows, warnings)
}

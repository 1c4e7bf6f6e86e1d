// SPDX-License-Identifier: Apache-2.0

//! Dispatch from a validated config to the module pipelines.
//!
//! Sweeps run in parallel; every CSV is written once, after its sweep
//! finishes, with rows in sweep-key order.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::control::{build_fz, feasibility, ControlProtocol, ProtocolFamily};
use crate::disorder::{disorder_ensemble, DisorderRow, DisorderSummaryRow};
use crate::exact_diag::{run_lr_ising_sweep, LrRow, LrSweepConfig};
use crate::quench::{
    quench_all_modes, quench_two_level, try_par_map, NoiseSpec, QuenchResult, QuenchRow,
};

use super::config::{ExperimentConfig, ExperimentKind, ModelKind};
use super::plotdata::emit_plotdata;
use super::CliError;

/// Rows in a tabulated control.
pub const CONTROL_ROWS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    /// Path relative to the output directory.
    pub path: String,
    pub sha256: String,
}

/// Everything needed to reproduce a run. Timestamps live here and nowhere else.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub preset: Option<String>,
    /// SHA-256 of the canonical config text.
    pub config_hash: String,
    pub code_version: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub threads: usize,
    pub seeds: Vec<u64>,
    pub outputs: Vec<OutputFile>,
}

pub const MANIFEST_NAME: &str = "manifest.json";
pub const CONFIG_COPY_NAME: &str = "config.toml";

struct Collector {
    dir: PathBuf,
    files: Vec<PathBuf>,
    seeds: Vec<u64>,
}

impl Collector {
    fn write_csv<R: Serialize>(&mut self, name: &str, rows: &[R]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(&path)
            .map_err(|e| CliError::io(&path, e))?;
        for row in rows {
            w.serialize(row).map_err(|e| CliError::io(&path, e))?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
        self.files.push(path.clone());
        Ok(path)
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        self.files.push(path);
        Ok(())
    }
}

#[derive(Serialize)]
struct ControlRow {
    t: f64,
    g: f64,
    dg_dt: f64,
}

#[derive(Serialize)]
struct FeasibilityRow {
    k_order: usize,
    g0: f64,
    g1: f64,
    tau_qsl: f64,
    tau_min: f64,
    tau_min_over_qsl: f64,
}

fn now_unix() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

pub fn config_hash(config: &ExperimentConfig) -> String {
    hex(&Sha256::digest(config.to_canonical_toml().as_bytes()))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn runtime(module: &str, params: String) -> impl FnOnce(crate::Error) -> CliError {
    let module = module.to_string();
    move |source| CliError::Runtime {
        module,
        params,
        source,
    }
}

/// Validates, runs, and writes CSVs plus `manifest.json` into `out_dir`.
pub fn run_config(
    config: &ExperimentConfig,
    out_dir: &Path,
    preset: Option<&str>,
) -> Result<RunManifest, CliError> {
    let issues = config.validate();
    if !issues.is_empty() {
        return Err(CliError::Config(issues));
    }
    let started = now_unix();
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let mut out = Collector {
        dir: out_dir.to_path_buf(),
        files: Vec::new(),
        seeds: Vec::new(),
    };
    out.write_text(CONFIG_COPY_NAME, &config.to_canonical_toml())?;
    match config.experiment {
        ExperimentKind::Quench => run_quench(config, &mut out, true, false)?,
        ExperimentKind::Scaling => run_quench(config, &mut out, false, true)?,
        ExperimentKind::Noise => run_quench(config, &mut out, false, true)?,
        ExperimentKind::Disorder => run_disorder(config, &mut out)?,
        ExperimentKind::EdSweep => run_ed(config, &mut out)?,
        ExperimentKind::Feasibility => run_feasibility(config, &mut out)?,
    }
    let outputs = out
        .files
        .iter()
        .map(|p| {
            let bytes = std::fs::read(p).map_err(|e| CliError::io(p, e))?;
            Ok(OutputFile {
                path: p.strip_prefix(out_dir).unwrap_or(p).display().to_string(),
                sha256: hex(&Sha256::digest(&bytes)),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let manifest = RunManifest {
        experiment: config.experiment.as_str().to_string(),
        preset: preset.map(str::to_string),
        config_hash: config_hash(config),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix: started,
        finished_unix: now_unix(),
        threads: rayon::current_num_threads(),
        seeds: out.seeds,
        outputs,
    };
    let path = out_dir.join(MANIFEST_NAME);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
    Ok(manifest)
}

fn build_protocol(
    config: &ExperimentConfig,
    alpha: Option<f64>,
    family: ProtocolFamily,
    k: usize,
    tau: f64,
) -> crate::Result<ControlProtocol> {
    let p = &config.protocol;
    let mode = config
        .design_mode(alpha)
        .ok_or_else(|| crate::Error::InvalidParameter {
            name: "model",
            reason: "no design mode".into(),
        })?;
    ControlProtocol::build(family, &mode, p.g0, p.g1, tau, k, p.k_norm)
}

/// Absolute durations: `τ/τ_QSL` multiples, or the listed `τ` of a two-level run.
fn durations(config: &ExperimentConfig, tau_qsl: f64) -> Vec<f64> {
    if config.model.family == ModelKind::TwoLevel && !config.sweep.tau.is_empty() {
        config.taus_absolute()
    } else {
        config
            .taus_over_qsl()
            .into_iter()
            .map(|r| r * tau_qsl)
            .collect()
    }
}

fn run_quench(
    config: &ExperimentConfig,
    out: &mut Collector,
    controls: bool,
    plot: bool,
) -> Result<(), CliError> {
    let tol = config.tolerance();
    let ws: Vec<Option<f64>> = match config.experiment {
        ExperimentKind::Noise => config.sweep.w.iter().map(|&w| Some(w)).collect(),
        _ => vec![None],
    };
    let alphas = config.lrk_alphas();
    for alpha in alphas {
        let tau_qsl = config.tau_qsl(alpha).expect("validated model");
        let taus = durations(config, tau_qsl);
        let spec = config.model_spec(alpha);
        let mut rows = Vec::new();
        for (family, k) in config.family_orders() {
            for &w in &ws {
                let noise = w
                    .map(|w| NoiseSpec::new(w, config.model.j))
                    .transpose()
                    .map_err(runtime("quench_engine", format!("W = {w:?}")))?;
                let params = format!(
                    "family = {family}, k_order = {k}, W = {}, alpha = {alpha:?}",
                    w.unwrap_or(0.0)
                );
                let results: Vec<QuenchResult> = try_par_map(&taus, |_, &tau| {
                    let protocol = build_protocol(config, alpha, family, k, tau)?;
                    match &spec {
                        Some(spec) => quench_all_modes(spec, &protocol, noise.as_ref(), tol),
                        None => quench_two_level(config.model.h_x.unwrap(), &protocol, tol),
                    }
                })
                .map_err(runtime("quench_engine", params))?;
                for r in &results {
                    rows.push(QuenchRow {
                        family,
                        n_sites: spec.map(|s| s.n).unwrap_or(2),
                        k_order: (family == ProtocolFamily::Invariant).then_some(k),
                        tau: r.tau,
                        tau_over_qsl: r.tau_over_qsl,
                        w: w.unwrap_or(0.0),
                        n: r.n,
                        fidelity: r.fidelity,
                        infidelity: r.infidelity,
                    });
                }
                // the shortest duration shows the sharpest control shape
                if controls {
                    if let Some(&tau) = taus.first() {
                        let protocol =
                            build_protocol(config, alpha, family, k, tau).map_err(runtime(
                                "control_synthesis",
                                format!("family = {family}, tau = {tau}"),
                            ))?;
                        let table: Vec<ControlRow> = protocol
                            .tabulate(CONTROL_ROWS)
                            .into_iter()
                            .map(|[t, g, dg_dt]| ControlRow { t, g, dg_dt })
                            .collect();
                        let name = format!(
                            "control_{}_tau{}.csv",
                            family_tag(family, k),
                            fmt_key(tau / tau_qsl)
                        );
                        out.write_csv(&name, &table)?;
                    }
                }
            }
        }
        let name = match alpha {
            Some(a) => format!("quench_alpha{}.csv", fmt_key(a)),
            None => "quench.csv".to_string(),
        };
        let path = out.write_csv(&name, &rows)?;
        if plot {
            let data = emit_plotdata(&path, None)?;
            out.files.extend(data.files);
        }
    }
    Ok(())
}

fn run_disorder(config: &ExperimentConfig, out: &mut Collector) -> Result<(), CliError> {
    let tol = config.tolerance();
    let (family, k) = config.family_orders()[0];
    let tau_qsl = config.tau_qsl(None).expect("validated model");
    let n = config.model.n.expect("validated model");
    let realizations = config.realizations();
    let base_seed = config.sweep.base_seed;
    let mut lambdas = config.sweep.lambda_width.clone();
    lambdas.sort_by(f64::total_cmp);
    lambdas.dedup();
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for &lambda in &lambdas {
        for ratio in config.taus_over_qsl() {
            let params =
                format!("family = {family}, Lambda = {lambda}, tau_over_qsl = {ratio}, N = {n}");
            let protocol = build_protocol(config, None, family, k, ratio * tau_qsl)
                .map_err(runtime("control_synthesis", params.clone()))?;
            let stats = disorder_ensemble(
                n,
                config.model.j,
                &protocol,
                lambda,
                realizations,
                base_seed,
                tol,
            )
            .map_err(runtime("disorder_bdg", params))?;
            for (&seed, &n_d) in stats.seeds.iter().zip(&stats.values) {
                rows.push(DisorderRow {
                    lambda_width: lambda,
                    seed,
                    tau_over_qsl: ratio,
                    n_d,
                });
            }
            summary.push(DisorderSummaryRow {
                lambda_width: lambda,
                tau_over_qsl: ratio,
                mean: stats.mean,
                stddev: stats.stddev,
                realizations,
            });
        }
    }
    out.seeds = (0..realizations as u64)
        .map(|i| base_seed.wrapping_add(i))
        .collect();
    out.write_csv("disorder.csv", &rows)?;
    out.write_csv("disorder_summary.csv", &summary)?;
    Ok(())
}

fn run_ed(config: &ExperimentConfig, out: &mut Collector) -> Result<(), CliError> {
    let m = &config.model;
    let s = &config.sweep;
    let mut rows: Vec<LrRow> = Vec::new();
    for ratio in config.taus_over_qsl() {
        let sweep = LrSweepConfig {
            n: m.n.expect("validated model"),
            j: m.j,
            p: m.p,
            alphas: s.alphas.clone(),
            lambda_corrections: s.lambda_corrections.iter().map(|&l| Some(l)).collect(),
            g0: config.protocol.g0,
            g1: config.protocol.g1,
            tau_over_qsl: ratio,
            k_order: config.protocol.k_orders[0],
            tau_qsl_mode: s.tau_qsl_mode,
            boundary: m.boundary,
            tolerance: config.tolerance(),
        };
        let params = format!("N = {}, p = {}, tau_over_qsl = {ratio}", sweep.n, sweep.p);
        rows.extend(run_lr_ising_sweep(&sweep).map_err(runtime("exact_diag", params))?);
    }
    out.write_csv("ed_sweep.csv", &rows)?;
    Ok(())
}

fn run_feasibility(config: &ExperimentConfig, out: &mut Collector) -> Result<(), CliError> {
    let p = &config.protocol;
    let mut rows = Vec::new();
    for alpha in config.lrk_alphas() {
        let mode = config.design_mode(alpha).expect("validated model");
        let tau_qsl = config.tau_qsl(alpha).expect("validated model");
        for &k in &p.k_orders {
            let params = format!("k_order = {k}, alpha = {alpha:?}");
            let ansatz = build_fz(&mode, p.g0, p.g1, tau_qsl, k, p.k_norm)
                .map_err(runtime("control_synthesis", params))?;
            let tau_min = feasibility(&ansatz, &mode).tau_min;
            rows.push(FeasibilityRow {
                k_order: k,
                g0: p.g0,
                g1: p.g1,
                tau_qsl,
                tau_min,
                tau_min_over_qsl: tau_min / tau_qsl,
            });
            for tau in durations(config, tau_qsl) {
                let params = format!("k_order = {k}, tau = {tau}");
                let protocol = build_protocol(config, alpha, ProtocolFamily::Invariant, k, tau)
                    .map_err(runtime("control_synthesis", params))?;
                let table: Vec<ControlRow> = protocol
                    .tabulate(CONTROL_ROWS)
                    .into_iter()
                    .map(|[t, g, dg_dt]| ControlRow { t, g, dg_dt })
                    .collect();
                let name = format!(
                    "control_{}_tau{}.csv",
                    family_tag(ProtocolFamily::Invariant, k),
                    fmt_key(tau / tau_qsl)
                );
                out.write_csv(&name, &table)?;
            }
        }
    }
    out.write_csv("feasibility.csv", &rows)?;
    Ok(())
}

fn family_tag(family: ProtocolFamily, k: usize) -> String {
    match family {
        ProtocolFamily::Invariant => format!("invariant_k{k}"),
        other => other.as_str().to_string(),
    }
}

/// Short decimal key for file names: six decimals, trailing zeros dropped.
fn fmt_key(x: f64) -> String {
    let s = format!("{:.6}", x);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

//! Pipeline orchestration: ingest, disaggregate, estimate, identify,
//! report. Every run leaves a manifest with enough provenance to reproduce
//! it bit for bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use sha2::{Digest, Sha256};

use ngbvar_core::bvar::{build_design, run_mcmc, NgHyper, PosteriorSample};
use ngbvar_core::disagg::{chow_lin, spline_disaggregate, AggregationRule, RhoMode};
use ngbvar_core::irf::{irf_set, quantile_bands, QuantileBand};
use ngbvar_core::robust::{paper_variants, run_battery, BaseModel, VariantOutcome};
use ngbvar_core::series::{
    assemble_panel, growth_rate, invert_series, load_csv, GrowthKind, Panel, TimeSeries,
};
use ngbvar_core::store::save_draws;
use ngbvar_core::synth::SyntheticDgp;
use ngbvar_core::series::Month;
use ngbvar_core::{Error, Result};

use crate::config::{DisaggConfig, DisaggMethod, RunConfig, Transform};
use crate::plot::{emit_plots, PanelLabel};

/// How far the pipeline runs; later stages imply earlier ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    /// Through `panel.csv`.
    Ingest,
    /// Through the draw store.
    Estimate,
    /// Through `irf_bands.csv` and plots.
    Irf,
    /// Through `battery.json`.
    Battery,
}

/// Everything a finished (or partial) run produced.
pub struct RunSummary {
    pub run_id: String,
    pub out_dir: PathBuf,
    pub panel: Panel,
    pub sample: Option<PosteriorSample>,
    pub bands: Option<QuantileBand>,
    /// Relative artifact path -> sha256, as recorded in the manifest.
    pub checksums: BTreeMap<String, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    format!("{:x}", h.finalize())
}

fn file_sha256(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

/// Stable run id from the config bytes and the effective seed.
pub fn derive_run_id(config_bytes: &[u8], seed: u64) -> String {
    let mut h = Sha256::new();
    h.update(config_bytes);
    h.update(seed.to_le_bytes());
    format!("{:x}", h.finalize())[..16].to_string()
}

/// Runs the pipeline up to `stage`. On failure after the output directory
/// exists, a `FAILED` marker holding the error is left next to any partial
/// artifacts.
pub fn run_pipeline(
    config: &RunConfig,
    config_bytes: &[u8],
    seed_override: Option<u64>,
    out_override: Option<&Path>,
    stage: Stage,
) -> Result<RunSummary> {
    let out_dir = out_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.output.dir.clone());
    std::fs::create_dir_all(&out_dir)?;
    let failed_marker = out_dir.join("FAILED");
    let _ = std::fs::remove_file(&failed_marker);
    match run_stages(config, config_bytes, seed_override, &out_dir, stage) {
        Ok(summary) => Ok(summary),
        Err(e) => {
            let _ = std::fs::write(&failed_marker, format!("{e}\n"));
            Err(e)
        }
    }
}

fn run_stages(
    config: &RunConfig,
    config_bytes: &[u8],
    seed_override: Option<u64>,
    out_dir: &Path,
    stage: Stage,
) -> Result<RunSummary> {
    let started = Instant::now();
    let mut hyper = config.hyper();
    if let Some(seed) = seed_override {
        hyper.seed = seed;
    }
    let config_hash = sha256_hex(config_bytes);
    let run_id = derive_run_id(config_bytes, hyper.seed);
    info!("run {run_id}: output to {}", out_dir.display());

    let mut checksums: BTreeMap<String, String> = BTreeMap::new();
    let record = |name: &str, path: &Path, sums: &mut BTreeMap<String, String>| -> Result<()> {
        sums.insert(name.to_string(), file_sha256(path)?);
        Ok(())
    };

    // ingest + disaggregate + transform + assemble
    let panel = build_panel(config)?;
    info!(
        "panel: {} variables, t = {} ({}..{})",
        panel.m(),
        panel.t,
        panel.start,
        panel.end()
    );
    let panel_path = out_dir.join("panel.csv");
    write_panel_csv(&panel, &panel_path)?;
    record("panel.csv", &panel_path, &mut checksums)?;

    let mut summary = RunSummary {
        run_id: run_id.clone(),
        out_dir: out_dir.to_path_buf(),
        panel: panel.clone(),
        sample: None,
        bands: None,
        checksums: BTreeMap::new(),
    };

    if stage >= Stage::Estimate {
        let design = build_design(&panel, config.model.lags)?;
        let sample = run_mcmc(&design, &hyper)?;
        info!(
            "estimation done: {} draws, max split-Rhat {:.3}",
            sample.draws.len(),
            sample.diagnostics.max_rhat()
        );
        if config.output.export_draws {
            let draws_path = out_dir.join("draws.bin");
            save_draws(&draws_path, &run_id, &sample)?;
            record("draws.bin", &draws_path, &mut checksums)?;
        }
        summary.sample = Some(sample);
    }

    if stage >= Stage::Irf {
        let sample = summary.sample.as_ref().expect("estimate stage ran");
        let irfs = irf_set(sample, &panel.ordering(), &config.shock_spec())?;
        let bands = quantile_bands(&irfs)?;
        let bands_path = out_dir.join("irf_bands.csv");
        write_bands_csv(&bands, &bands_path)?;
        record("irf_bands.csv", &bands_path, &mut checksums)?;
        if config.output.plots {
            let labels = panel_labels(config);
            let files = emit_plots(&bands, &labels, &out_dir.join("plots"))?;
            for f in &files {
                let name = format!(
                    "plots/{}",
                    f.file_name().unwrap_or_default().to_string_lossy()
                );
                record(&name, f, &mut checksums)?;
            }
        }
        summary.bands = Some(bands);
    }

    if stage >= Stage::Battery && config.battery.enabled {
        let battery_path = out_dir.join("battery.json");
        let refs = run_battery_stage(config, &panel, &hyper, out_dir)?;
        std::fs::write(&battery_path, refs)?;
        record("battery.json", &battery_path, &mut checksums)?;
        for entry in std::fs::read_dir(out_dir.join("battery"))? {
            let path = entry?.path();
            let name = format!(
                "battery/{}",
                path.file_name().unwrap_or_default().to_string_lossy()
            );
            record(&name, &path, &mut checksums)?;
        }
    }

    let manifest = serde_json::json!({
        "run_id": run_id,
        "seed": hyper.seed,
        "config_sha256": config_hash,
        "inputs": { "data_csv_sha256": file_sha256(&config.data.path)? },
        "model": {
            "lags": config.model.lags,
            "ordering": config.model.ordering,
            "shock": config.shock_spec(),
        },
        "hyper": hyper,
        "git_describe": git_describe(&config.data.path),
        "wall_time_seconds": started.elapsed().as_secs_f64(),
        "artifacts": checksums,
    });
    std::fs::write(
        out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    summary.checksums = checksums;
    Ok(summary)
}

/// Best-effort `git describe` of the directory holding the input data;
/// absent version control this records null.
fn git_describe(near: &Path) -> Option<String> {
    let dir = near.parent()?;
    let out = std::process::Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .current_dir(dir)
        .output()
        .ok()?;
    if out.status.success() {
        Some(String::from_utf8_lossy(&out.stdout).trim().to_string())
    } else {
        None
    }
}

/// Ingests the CSV and produces the aligned monthly panel: units assigned,
/// quarterly members disaggregated, transforms applied (keeping the
/// declared ids), ordering assembled.
pub fn build_panel(config: &RunConfig) -> Result<Panel> {
    let mut series = load_csv(&config.data.path, &config.data.schema)?;
    for (id, sc) in &config.data.series {
        if !series.iter().any(|s| &s.id == id) {
            return Err(Error::Ordering(format!(
                "config declares series '{id}' which is not in the data"
            )));
        }
        if let Some(unit) = sc.unit {
            if let Some(s) = series.iter_mut().find(|s| &s.id == id) {
                s.unit = unit;
            }
        }
    }
    for id in &config.model.ordering {
        if !series.iter().any(|s| &s.id == id) {
            return Err(Error::Ordering(format!(
                "ordering references series '{id}' which is not in the data"
            )));
        }
    }
    // disaggregation may need other series as indicators, so resolve
    // against the pre-transform pool
    let pool = series.clone();
    for (id, sc) in &config.data.series {
        if let Some(d) = &sc.disaggregate {
            let idx = series.iter().position(|s| &s.id == id).expect("checked");
            let monthly = disaggregate_one(&series[idx], d, &pool)?;
            series[idx] = monthly;
        }
    }
    for (id, sc) in &config.data.series {
        if sc.transform == Transform::None {
            continue;
        }
        let idx = series.iter().position(|s| &s.id == id).expect("checked");
        let mut transformed = apply_transform(&series[idx], sc.transform)?;
        // keep the declared id so ordering and shock spec stay valid
        transformed.id = id.clone();
        series[idx] = transformed;
    }
    assemble_panel(&series, &config.model.ordering)
}

fn disaggregate_one(
    s: &TimeSeries,
    d: &DisaggConfig,
    pool: &[TimeSeries],
) -> Result<TimeSeries> {
    match d.method {
        DisaggMethod::Spline => Ok(spline_disaggregate(s, d.rule)?.series),
        DisaggMethod::ChowLin => {
            let ind_id = d.indicator.as_ref().expect("validated");
            let indicator = pool
                .iter()
                .find(|x| &x.id == ind_id)
                .ok_or_else(|| Error::Ordering(format!("unknown indicator '{ind_id}'")))?;
            let mode = match d.rho {
                Some(r) => RhoMode::Fixed(r),
                None => RhoMode::MaximumLikelihood,
            };
            Ok(chow_lin(s, indicator, d.rule, mode)?.monthly_estimate)
        }
    }
}

fn apply_transform(s: &TimeSeries, t: Transform) -> Result<TimeSeries> {
    match t {
        Transform::None => Ok(s.clone()),
        Transform::Invert => Ok(invert_series(s)),
        Transform::PctChange => growth_rate(s, GrowthKind::PeriodOnPeriod),
        Transform::LogReturn => growth_rate(s, GrowthKind::LogReturn),
    }
}

fn panel_labels(config: &RunConfig) -> Vec<PanelLabel> {
    config
        .data
        .series
        .iter()
        .filter(|(_, sc)| sc.role.is_some() || sc.country.is_some())
        .map(|(id, sc)| PanelLabel {
            variable: id.clone(),
            role: sc.role.clone().unwrap_or_else(|| "response".into()),
            country: sc.country.clone().unwrap_or_else(|| id.clone()),
        })
        .collect()
}

/// Long-format panel export, rows grouped by series in identification
/// order.
fn write_panel_csv(panel: &Panel, path: &Path) -> Result<()> {
    let mut out = String::from("date,series_id,value\n");
    for s in &panel.series {
        for (month, value) in s.iter() {
            let _ = writeln!(out, "{month},{},{value}", s.id);
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn write_bands_csv(bands: &QuantileBand, path: &Path) -> Result<()> {
    let mut out = String::from("variable,horizon,q16,q50,q84\n");
    for (v, variable) in bands.variables.iter().enumerate() {
        for (h, (q16, q50, q84)) in bands.bands[v].iter().enumerate() {
            let _ = writeln!(out, "{variable},{h},{q16},{q50},{q84}");
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

fn run_battery_stage(
    config: &RunConfig,
    panel: &Panel,
    hyper: &NgHyper,
    out_dir: &Path,
) -> Result<String> {
    let base = BaseModel {
        panel: panel.clone(),
        lags: config.model.lags,
        shock: config.shock_spec(),
        hyper: hyper.clone(),
    };
    let ordering = panel.ordering();
    let variants = paper_variants(
        &ordering,
        &config.model.shock_variable,
        &config.battery.reorder_below,
        config.battery.policy_rate.as_deref().expect("validated"),
        config.battery.spread_size_pp,
    );
    let bundle = run_battery(&base, &variants)?;
    let battery_dir = out_dir.join("battery");
    std::fs::create_dir_all(&battery_dir)?;
    let mut variant_entries = Vec::new();
    for (spec, outcome) in &bundle.variants {
        let entry = match outcome {
            VariantOutcome::Completed(res) => {
                let file = format!("battery/{}_median.csv", spec.label);
                let mut csv = String::from("variable,horizon,median\n");
                for (v, id) in res.ordering.iter().enumerate() {
                    for (h, m) in res.median[v].iter().enumerate() {
                        let _ = writeln!(csv, "{id},{h},{m}");
                    }
                }
                std::fs::write(out_dir.join(&file), csv)?;
                serde_json::json!({
                    "label": spec.label,
                    "status": "completed",
                    "explosive_share": res.stability.explosive_share,
                    "ordering": res.ordering,
                    "median_path_file": file,
                })
            }
            VariantOutcome::Failed(msg) => serde_json::json!({
                "label": spec.label,
                "status": "failed",
                "error": msg,
            }),
        };
        variant_entries.push(entry);
    }
    let doc = serde_json::json!({
        "base": {
            "ordering": ordering,
            "lags": config.model.lags,
            "explosive_share": bundle.base_stability.explosive_share,
        },
        "variants": variant_entries,
    });
    Ok(serde_json::to_string_pretty(&doc)?)
}

/// Writes a synthetic dataset plus a runnable config next to it. Returns
/// the config path.
pub fn generate_synthetic(
    m: usize,
    p: usize,
    t: usize,
    density: f64,
    seed: u64,
    dir: &Path,
) -> Result<PathBuf> {
    let dgp = SyntheticDgp::random(m, p, t, density, seed)?;
    dgp.write_csv(dir, Month::from_ym(2008, 1))?;
    let ordering: Vec<String> = dgp.ordering().iter().map(|s| format!("\"{s}\"")).collect();
    let shock = SyntheticDgp::series_id(m - 1);
    let config = format!(
        "[data]\npath = \"synthetic.csv\"\n\n\
         [model]\nlags = {p}\nordering = [{}]\nshock_variable = \"{shock}\"\n\n\
         [prior]\nburn = 1000\nkeep = 1000\nchains = 2\nseed = {seed}\n\n\
         [output]\ndir = \"out\"\n",
        ordering.join(", ")
    );
    let path = dir.join("config.toml");
    std::fs::write(&path, config)?;
    Ok(path)
}

/// Standalone disaggregation: CSV in, monthly CSV out. Spline runs flag
/// extrapolated boundary months in a JSON sidecar.
pub fn disaggregate_file(
    input: &Path,
    series_id: &str,
    method: DisaggMethod,
    rule: AggregationRule,
    indicator: Option<&str>,
    rho: Option<f64>,
    out_dir: &Path,
) -> Result<PathBuf> {
    let pool = load_csv(input, &Default::default())?;
    let q = pool
        .iter()
        .find(|s| s.id == series_id)
        .ok_or_else(|| Error::Ordering(format!("unknown series id '{series_id}'")))?;
    std::fs::create_dir_all(out_dir)?;
    let out_path = out_dir.join(format!("{series_id}_monthly.csv"));
    let monthly = match method {
        DisaggMethod::Spline => {
            let out = spline_disaggregate(q, rule)?;
            let flagged: Vec<String> = out
                .extrapolated
                .iter()
                .enumerate()
                .filter(|(_, e)| **e)
                .map(|(i, _)| out.series.month_at(i).to_string())
                .collect();
            std::fs::write(
                out_dir.join(format!("{series_id}_monthly_flags.json")),
                serde_json::to_string_pretty(&serde_json::json!({
                    "extrapolated_months": flagged
                }))?,
            )?;
            out.series
        }
        DisaggMethod::ChowLin => {
            let ind_id = indicator.ok_or_else(|| {
                Error::Input("chow-lin needs --indicator <series_id>".into())
            })?;
            let ind = pool
                .iter()
                .find(|s| s.id == ind_id)
                .ok_or_else(|| Error::Ordering(format!("unknown indicator '{ind_id}'")))?;
            let mode = rho.map(RhoMode::Fixed).unwrap_or(RhoMode::MaximumLikelihood);
            let fit = chow_lin(q, ind, rule, mode)?;
            info!("chow-lin: beta {:?}, rho {:.4}", fit.beta, fit.rho);
            fit.monthly_estimate
        }
    };
    let mut csv = String::from("date,series_id,value\n");
    for (month, value) in monthly.iter() {
        let _ = writeln!(csv, "{month},{series_id},{value}");
    }
    std::fs::write(&out_path, csv)?;
    Ok(out_path)
}

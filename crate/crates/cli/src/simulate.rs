use std::path::PathBuf;
use std::time::Instant;

use liushrink::estimators::{Estimator, ShrinkageConfig};
use liushrink::simulation::{compare_penalized, run_cell, PenalizedSettings, RmseRow, SimulationCell};
use serde::{Deserialize, Serialize};

use crate::config::{self, default_alpha, OneOrMany, PenalizedSection, ShrinkageSection};
use crate::failure::{Category, Failure};
use crate::output::{fmt_num, manifest_path, resolve_out, resolve_seed, write_atomic, Precision, RunManifest, Table};
use crate::RunOpts;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// TOML file describing the grid of simulation cells.
    #[arg(long)]
    pub config: PathBuf,
    /// Output CSV: one row per cell.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write long-format (delta_star, estimator, rmse) rows for plotting.
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunOpts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    /// The requested estimators against LFM.
    #[default]
    Shrinkage,
    /// The fixed shrinkage-versus-penalized estimator set.
    Penalized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    pub reps: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub n: OneOrMany<usize>,
    pub p1: OneOrMany<usize>,
    pub p2: OneOrMany<usize>,
    pub rho: OneOrMany<f64>,
    pub delta_star: OneOrMany<f64>,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<String>,
    #[serde(default)]
    pub comparison: Comparison,
    #[serde(default)]
    pub shrinkage: ShrinkageSection,
    #[serde(default)]
    pub penalized: PenalizedSection,
}

fn default_estimators() -> Vec<String> {
    ["LSM", "LPT", "LS", "LPS"].map(String::from).to_vec()
}

#[derive(Serialize)]
struct Defaults {
    shrinkage: ShrinkageConfig,
    penalized: PenalizedSettings,
    d_mode: &'static str,
    precision: Precision,
}

/// Cells in grid order: `n`, `p1`, `p2`, `rho`, then `delta_star`.
pub fn cells(cfg: &SimulateConfig, seed: u64) -> Result<Vec<SimulationCell>, Failure> {
    let estimators = config::parse_estimators(&cfg.estimators)?;
    let mut out = Vec::new();
    for n in cfg.n.to_vec() {
        for p1 in cfg.p1.to_vec() {
            for p2 in cfg.p2.to_vec() {
                for rho in cfg.rho.to_vec() {
                    for delta_star in cfg.delta_star.to_vec() {
                        let cell =
                            SimulationCell { n, p1, p2, rho, delta_star, reps: cfg.reps, alpha: cfg.alpha, seed, estimators: estimators.clone() };
                        cell.validate().map_err(|e| Failure::config(format!("cell {}: {e}", cell.label())))?;
                        out.push(cell);
                    }
                }
            }
        }
    }
    if out.is_empty() {
        return Err(Failure::config("the grid is empty"));
    }
    Ok(out)
}

pub fn run(args: &Args) -> Result<(), Failure> {
    let started = Instant::now();
    let mut cfg: SimulateConfig = config::load(&args.config)?;
    let seed = resolve_seed(args.run.seed, cfg.seed);
    cfg.seed = Some(seed.value);
    let shrink = cfg.shrinkage.resolve(cfg.alpha)?;
    let pen = cfg.penalized.resolve()?;
    let cells = cells(&cfg, seed.value)?;

    let rows = crate::with_jobs(args.run.jobs, || {
        cells
            .iter()
            .map(|c| match cfg.comparison {
                Comparison::Shrinkage => run_cell(c, &shrink, &pen),
                Comparison::Penalized => compare_penalized(c, &shrink, &pen),
            })
            .collect::<liushrink::Result<Vec<_>>>()
    })??;

    let p = args.run.precision;
    let out = resolve_out(&args.out);
    write_atomic(&out, &rmse_csv(&rows, p)?)?;
    let mut outputs = vec![out.display().to_string()];
    if let Some(plot) = &args.plot_data {
        let plot = resolve_out(plot);
        write_atomic(&plot, &plot_csv(&rows, p)?)?;
        outputs.push(plot.display().to_string());
    }
    let d_mode = if matches!(shrink.d, liushrink::estimators::Tuning::Auto) { "estimated per replicate" } else { "fixed" };
    let defaults = Defaults { shrinkage: shrink, penalized: pen, d_mode, precision: p };
    RunManifest::new("simulate", seed, &cfg, defaults, outputs, args.run.jobs, started).write(&manifest_path(&out))
}

fn estimators_of(rows: &[RmseRow]) -> Result<Vec<Estimator>, Failure> {
    let first = rows[0].estimators.clone();
    if rows.iter().any(|r| r.estimators != first) {
        return Err(Failure::new(Category::Numeric, "cells report different estimator sets"));
    }
    Ok(first)
}

pub fn rmse_csv(rows: &[RmseRow], p: Precision) -> Result<Vec<u8>, Failure> {
    let kinds = estimators_of(rows)?;
    let mut header: Vec<String> = ["n", "p1", "p2", "rho", "delta_star", "reps", "failed", "mean_cn", "rejection_rate"].map(String::from).to_vec();
    for k in &kinds {
        header.push(format!("rmse_{k}"));
        header.push(format!("se_{k}"));
    }
    for k in &kinds {
        header.push(format!("mse_{k}"));
        header.push(format!("mse_se_{k}"));
    }
    let mut t = Table::new(&header)?;
    for r in rows {
        let mut cells = vec![
            r.n.to_string(),
            r.p1.to_string(),
            r.p2.to_string(),
            fmt_num(r.rho, p),
            fmt_num(r.delta_star, p),
            r.reps.to_string(),
            r.failed.to_string(),
            fmt_num(r.mean_cn, p),
            fmt_num(r.rejection_rate, p),
        ];
        for i in 0..kinds.len() {
            cells.push(fmt_num(r.rmse[i], p));
            cells.push(fmt_num(r.rmse_se[i], p));
        }
        for i in 0..kinds.len() {
            cells.push(fmt_num(r.mse[i], p));
            cells.push(fmt_num(r.mse_se[i], p));
        }
        t.row(&cells)?;
    }
    t.into_bytes()
}

pub fn plot_csv(rows: &[RmseRow], p: Precision) -> Result<Vec<u8>, Failure> {
    let header = ["n", "p1", "p2", "rho", "delta_star", "estimator", "rmse", "se"].map(String::from);
    let mut t = Table::new(&header)?;
    for r in rows {
        for (i, k) in r.estimators.iter().enumerate() {
            t.row(&[
                r.n.to_string(),
                r.p1.to_string(),
                r.p2.to_string(),
                fmt_num(r.rho, p),
                fmt_num(r.delta_star, p),
                k.to_string(),
                fmt_num(r.rmse[i], p),
                fmt_num(r.rmse_se[i], p),
            ])?;
        }
    }
    t.into_bytes()
}

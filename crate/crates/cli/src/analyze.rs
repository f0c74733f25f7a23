use std::path::PathBuf;
use std::time::Instant;

use liushrink::application::{
    bootstrap_pe, correlation_matrix, load_table, select_submodel, BootstrapConfig, CorrelationTable, PEResult, DEFAULT_SET,
};
use liushrink::model::{Dataset, PartitionSpec};
use serde::Serialize;

use crate::config::{parse_estimators, PenalizedSection, ShrinkageSection, TuningSpec};
use crate::failure::Failure;
use crate::output::{fmt_num, resolve_out, resolve_seed, write_atomic, Precision, RunManifest, Table};
use crate::RunOpts;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// CSV with a header row; every cell numeric.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub response: String,
    /// `auto` for stepwise AIC, or a comma-separated list of main covariates.
    #[arg(long, default_value = "auto")]
    pub submodel: String,
    /// Bootstrap replicates.
    #[arg(long = "B", default_value_t = 1000)]
    pub b: usize,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, value_delimiter = ',')]
    pub estimators: Option<Vec<String>>,
    /// Liu parameter: `auto` or a number in (0, 1].
    #[arg(long, default_value = "auto", value_parser = TuningSpec::parse_flag)]
    pub d: TuningSpec,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Fit the standardization on the whole resample (diagnostic only).
    #[arg(long)]
    pub leakage_audit: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub run: RunOpts,
}

#[derive(Serialize)]
struct Resolved<'a> {
    data: String,
    response: &'a str,
    main: Vec<String>,
    nuisance: Vec<String>,
    submodel_rule: &'a str,
    bootstrap: &'a BootstrapConfig,
    shrinkage: liushrink::estimators::ShrinkageConfig,
}

pub fn parse_submodel(dataset: &Dataset, spec: &str) -> Result<PartitionSpec, Failure> {
    if spec.eq_ignore_ascii_case("auto") {
        return Ok(select_submodel(dataset)?);
    }
    let mut main = Vec::new();
    for name in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let j = dataset.column_index(name).ok_or_else(|| Failure::config(format!("--submodel: unknown covariate {name:?}")))?;
        if !main.contains(&j) {
            main.push(j);
        }
    }
    main.sort_unstable();
    let nuisance = (0..dataset.p()).filter(|j| !main.contains(j)).collect();
    Ok(PartitionSpec::new(main, nuisance))
}

pub fn run(args: &Args) -> Result<(), Failure> {
    let started = Instant::now();
    let dataset = load_table(&args.data, &args.response)?;
    let spec = parse_submodel(&dataset, &args.submodel)?;
    let seed = resolve_seed(args.run.seed, None);
    let mut cfg = BootstrapConfig::new(spec.clone(), seed.value);
    cfg.b = args.b;
    cfg.folds = args.folds;
    cfg.leakage_audit = args.leakage_audit;
    cfg.penalized = PenalizedSection::default().resolve()?;
    if let Some(names) = &args.estimators {
        cfg.estimators = parse_estimators(names)?;
    } else {
        cfg.estimators = DEFAULT_SET.iter().copied().filter(|k| spec.p2() >= 3 || !k.needs_p2_at_least_3()).collect();
    }
    let shrink = ShrinkageSection { d: args.d.clone(), ..Default::default() }.resolve(args.alpha)?;

    let result = crate::with_jobs(args.run.jobs, || bootstrap_pe(&dataset, &cfg, &shrink))??;
    let corr = correlation_matrix(&dataset)?;

    let dir = resolve_out(&args.out);
    let p = args.run.precision;
    let files =
        [("rpe_table.csv", rpe_table(&result, &spec, p)?), ("pe_boxplot.csv", boxplot(&result, p)?), ("correlations.csv", correlations(&corr, p)?)];
    let mut outputs = Vec::new();
    for (name, bytes) in &files {
        let path = dir.join(name);
        write_atomic(&path, bytes)?;
        outputs.push(path.display().to_string());
    }
    let names = dataset.names();
    let resolved = Resolved {
        data: args.data.display().to_string(),
        response: &args.response,
        main: spec.main_idx.iter().map(|&j| names[j].clone()).collect(),
        nuisance: spec.nuisance_idx.iter().map(|&j| names[j].clone()).collect(),
        submodel_rule: if args.submodel.eq_ignore_ascii_case("auto") { "stepwise AIC, both directions, from the full model" } else { "given" },
        bootstrap: &cfg,
        shrinkage: shrink,
    };
    let defaults =
        "case resampling of raw rows; standardization inside each training fold; intercept = training response mean; squared prediction error";
    RunManifest::new("analyze", seed, resolved, defaults, outputs, args.run.jobs, started).write(&dir.join("manifest.json"))
}

/// Estimate, bias and SE rows per estimator over the intercept and the
/// main-block coefficients, with the RPE on the estimate row.
pub fn rpe_table(r: &PEResult, spec: &PartitionSpec, p: Precision) -> Result<Vec<u8>, Failure> {
    let cols: Vec<usize> = std::iter::once(0).chain(spec.main_idx.iter().map(|j| j + 1)).collect();
    let mut header = vec!["estimator".to_string(), "row".to_string()];
    header.extend(cols.iter().map(|&c| r.coef_names[c].clone()));
    header.extend(["rpe", "mean_pe"].map(String::from));
    let mut t = Table::new(&header)?;
    for (i, k) in r.estimators.iter().enumerate() {
        for (label, v) in [("estimate", &r.estimate[i]), ("bias", &r.bias[i]), ("se", &r.se[i])] {
            let mut cells = vec![k.to_string(), label.to_string()];
            cells.extend(cols.iter().map(|&c| fmt_num(v[c], p)));
            if label == "estimate" {
                cells.push(fmt_num(r.rpe[i], p));
                cells.push(fmt_num(r.mean_pe[i], p));
            } else {
                cells.extend([String::new(), String::new()]);
            }
            t.row(&cells)?;
        }
    }
    t.into_bytes()
}

pub fn boxplot(r: &PEResult, p: Precision) -> Result<Vec<u8>, Failure> {
    let mut t = Table::new(&["estimator", "replicate", "pe"].map(String::from))?;
    for (i, k) in r.estimators.iter().enumerate() {
        for (b, v) in r.pe_samples[i].iter().enumerate() {
            t.row(&[k.to_string(), b.to_string(), fmt_num(*v, p)])?;
        }
    }
    t.into_bytes()
}

pub fn correlations(c: &CorrelationTable, p: Precision) -> Result<Vec<u8>, Failure> {
    let mut t = Table::new(&["var1", "var2", "r", "p_value", "significant"].map(String::from))?;
    for i in 0..c.names.len() {
        for j in 0..c.names.len() {
            t.row(&[
                c.names[i].clone(),
                c.names[j].clone(),
                fmt_num(c.r[(i, j)], p),
                fmt_num(c.p_value[(i, j)], p),
                c.significant(i, j).to_string(),
            ])?;
        }
    }
    t.into_bytes()
}

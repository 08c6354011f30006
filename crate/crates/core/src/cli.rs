//! Command-line front end: `synth`, `fit`, `popchar estimate|pool`, `impute`,
//! `simulate`, `report`, `dca` and `serve`.
//!
//! Every command writes a `# rtimpute <command> <config>` header line with
//! the resolved configuration and seed to stderr. Failures print a single
//! JSON line `{"error":{"code":..,"message":..}}` to stderr and exit with
//! status 1.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::imputation::{impute, impute_joint_multiple, ImputationMethod, PatientRecord, VariableSet};
use crate::metrics::{decision_curve, default_thresholds};
use crate::population::{
    draw_local_sample, estimate_characteristics, ingest_csv, load_characteristics, load_schema,
    pool_datasets, save_characteristics, write_atomic, Dataset, PopulationCharacteristics,
};
use crate::report::{parse_table, summarize, SimulationReport};
use crate::simulation::{
    default_scenarios, load_rows_csv, run_external_model_simulation, run_loocv_simulation,
    write_rows_csv, MissingScenario, SimulationConfig, SimulationRow, Study,
};
use crate::survival::{fit_cox_detailed, load_external_model, risk_at_horizon, CoxModel, TEN_YEARS_DAYS};
use crate::synthetic::{generate_synthetic_cohorts, SyntheticCohortSpec};

/// Error surfaced to the user as one JSON line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: String,
    pub message: String,
}

impl CliError {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        Self {
            code: code.to_string(),
            message: message.into(),
        }
    }

    pub fn to_json_line(&self) -> String {
        json!({ "error": { "code": self.code, "message": self.message } }).to_string()
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

macro_rules! coded_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                Self::new(e.code(), e.to_string())
            }
        }
    )*};
}

coded_error!(
    crate::population::PopulationError,
    crate::imputation::ImputationError,
    crate::survival::SurvivalError,
    crate::metrics::MetricsError,
    crate::simulation::SimulationError,
    crate::synthetic::SyntheticError,
    crate::report::ReportError,
    crate::service::ServiceError
);

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::new("Io", e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::new("FormatError", e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "rtimpute", version, about = "Real-time imputation of missing predictors for clinical risk models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic local and external cohorts.
    Synth(SynthArgs),
    /// Fit a Cox model and write it as JSON.
    Fit(FitArgs),
    /// Estimate or pool population characteristics.
    #[command(subcommand)]
    Popchar(PopcharCommand),
    /// Complete one record read as JSON from stdin.
    Impute(ImputeArgs),
    /// Run one of the four simulation studies and write rows.csv.
    Simulate(SimulateArgs),
    /// Summarize simulation rows per scenario and method.
    Report(ReportArgs),
    /// Decision curve from simulation rows.
    Dca(DcaArgs),
    /// Start the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    /// Cohort specification (JSON); the built-in default when absent.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub n_local: Option<usize>,
    #[arg(long)]
    pub n_external: Option<usize>,
    /// Print the default specification and exit.
    #[arg(long)]
    pub print_default_spec: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Defaults to `<data stem>.schema.json`.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Comma-separated; defaults to every schema predictor.
    #[arg(long, value_delimiter = ',')]
    pub predictors: Option<Vec<String>>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum PopcharCommand {
    /// Means and covariances of one dataset.
    Estimate(PopcharEstimateArgs),
    /// Characteristics of external data enriched with a local sample.
    Pool(PopcharPoolArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct PopcharEstimateArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// Comma-separated; defaults to every predictor and auxiliary.
    #[arg(long, value_delimiter = ',')]
    pub vars: Option<Vec<String>>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct PopcharPoolArgs {
    #[arg(long)]
    pub external: PathBuf,
    #[arg(long)]
    pub external_schema: Option<PathBuf>,
    #[arg(long)]
    pub local: PathBuf,
    #[arg(long)]
    pub local_schema: Option<PathBuf>,
    /// Number of local patients to add; 0 uses the external data alone.
    #[arg(long)]
    pub sample: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Comma-separated; defaults to the shared predictors and auxiliaries.
    #[arg(long, value_delimiter = ',')]
    pub vars: Option<Vec<String>>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ImputeArgs {
    #[arg(long)]
    pub schema: PathBuf,
    #[arg(long)]
    pub popchar: PathBuf,
    /// m, jmi or jmiaux.
    #[arg(long, default_value = "jmi_aux")]
    pub method: String,
    /// Number of random draws; 1 gives the conditional mean.
    #[arg(long, default_value_t = 1)]
    pub n_imp: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Table,
    Json,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// 1 local, 2 external, 3 enriched, 4 external model.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
    pub study: u8,
    /// Scenario id, comma-separated ids, or `all`.
    #[arg(long, default_value = "all")]
    pub scenario: String,
    /// Comma-separated: m, jmi, jmiaux.
    #[arg(long, default_value = "m,jmi,jmiaux")]
    pub methods: String,
    /// Local patients added to the external data (study 3).
    #[arg(long)]
    pub enrich: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "rows.csv")]
    pub out: PathBuf,
    /// Also print a summary to stdout.
    #[arg(long, value_enum)]
    pub report: Option<ReportFormat>,
    /// Fit the model once on all data instead of per held-out patient.
    #[arg(long)]
    pub fast_loocv: bool,
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Published model for study 4; fitted on the external data when absent.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Local (reference) cohort; synthetic cohorts are generated when absent.
    #[arg(long)]
    pub local: Option<PathBuf>,
    #[arg(long)]
    pub local_schema: Option<PathBuf>,
    #[arg(long)]
    pub external: Option<PathBuf>,
    #[arg(long)]
    pub external_schema: Option<PathBuf>,
    /// Synthetic cohort specification used when `--local` is absent.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub n_local: Option<usize>,
    #[arg(long)]
    pub n_external: Option<usize>,
    /// Model predictors, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub predictors: Option<Vec<String>>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// rows.csv written by `simulate`, or a table written by `report`.
    #[arg(long)]
    pub rows: PathBuf,
    #[arg(long, value_enum, default_value = "table")]
    pub format: ReportFormat,
    /// Round numbers for reading; the table then no longer parses back exactly.
    #[arg(long)]
    pub digits: Option<usize>,
    /// Treat `--rows` as a rendered table and convert it.
    #[arg(long)]
    pub from_table: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct DcaArgs {
    #[arg(long)]
    pub rows: PathBuf,
    #[arg(long)]
    pub scenario: u32,
    #[arg(long, default_value = "jmi_aux")]
    pub method: String,
    #[arg(long, default_value_t = TEN_YEARS_DAYS)]
    pub horizon: f64,
    /// Model whose baseline turns lp_est into risk; reconstructed from the
    /// rows when absent.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Comma-separated thresholds; 0.01..0.50 by default.
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Option<Vec<f64>>,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: IpAddr,
    #[arg(long, default_value = "data")]
    pub data_dir: PathBuf,
}

fn header<T: Serialize>(command: &str, config: &T) -> String {
    format!("# rtimpute {command} {}", serde_json::to_string(config).expect("serializable"))
}

fn announce<T: Serialize>(command: &str, config: &T) {
    eprintln!("{}", header(command, config));
}

/// `<dir>/<stem>.schema.json` for `<dir>/<stem>.csv`.
pub fn default_schema_path(data: &Path) -> PathBuf {
    let stem = data.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    data.with_file_name(format!("{stem}.schema.json"))
}

fn load_dataset(data: &Path, schema: Option<&Path>) -> Result<Dataset> {
    let schema_path = schema.map_or_else(|| default_schema_path(data), Path::to_path_buf);
    let schema = load_schema(&schema_path).map_err(|e| {
        CliError::new(e.code(), format!("{}: {e}", schema_path.display()))
    })?;
    Ok(ingest_csv(data, &schema)?)
}

fn save_dataset(data: &Dataset, path: &Path) -> Result<()> {
    data.save_csv(path)?;
    let schema = serde_json::to_string_pretty(data.schema())?;
    write_atomic(&default_schema_path(path), schema.as_bytes())?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

fn load_spec(path: Option<&Path>) -> Result<SyntheticCohortSpec> {
    match path {
        Some(p) => Ok(SyntheticCohortSpec::from_json(&fs::read_to_string(p)?)?),
        None => Ok(SyntheticCohortSpec::default()),
    }
}

fn run_synth(a: &SynthArgs) -> Result<()> {
    let mut spec = load_spec(a.spec.as_deref())?;
    if a.print_default_spec {
        println!("{}", SyntheticCohortSpec::default().to_json());
        return Ok(());
    }
    if let Some(n) = a.n_local {
        spec.n_local = n;
    }
    if let Some(n) = a.n_external {
        spec.n_external = n;
    }
    announce("synth", &json!({ "args": a, "spec": spec }));
    let cohorts = generate_synthetic_cohorts(&spec, a.seed)?;
    fs::create_dir_all(&a.out_dir)?;
    save_dataset(&cohorts.local, &a.out_dir.join("local.csv"))?;
    save_dataset(&cohorts.external, &a.out_dir.join("external.csv"))?;
    let meta = json!({
        "seed": a.seed,
        "spec": spec,
        "baseline_hazard": cohorts.baseline_hazard,
        "censoring_max_days": cohorts.censoring_max_days,
    });
    write_text(&a.out_dir.join("synth.meta.json"), &serde_json::to_string_pretty(&meta)?)
}

fn run_fit(a: &FitArgs) -> Result<()> {
    announce("fit", a);
    let data = load_dataset(&a.data, a.schema.as_deref())?;
    let predictors = a.predictors.clone().unwrap_or_else(|| data.schema().predictors());
    let fit = fit_cox_detailed(&data, &predictors)?;
    fit.model.save(&a.out)?;
    let events = data.statuses().iter().filter(|&&s| s == 1.0).count();
    let summary = json!({
        "predictors": fit.model.predictors(),
        "beta": fit.model.beta(),
        "loglik": fit.loglik,
        "iterations": fit.iterations,
        "n": data.n_rows(),
        "events": events,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn run_popchar(c: &PopcharCommand) -> Result<()> {
    match c {
        PopcharCommand::Estimate(a) => {
            announce("popchar estimate", a);
            let data = load_dataset(&a.data, a.schema.as_deref())?;
            let vars = a.vars.clone().unwrap_or_else(|| data.schema().covariates());
            let pc = estimate_characteristics(&data, &vars)?;
            save_characteristics(&pc, &a.out)?;
            print_popchar_summary(&pc)
        }
        PopcharCommand::Pool(a) => {
            announce("popchar pool", a);
            let external = load_dataset(&a.external, a.external_schema.as_deref())?;
            let local = load_dataset(&a.local, a.local_schema.as_deref())?;
            let pooled = if a.sample == 0 {
                external
            } else {
                let (sample, _) = draw_local_sample(&local, a.sample, a.seed)?;
                pool_datasets(&external, &sample)?
            };
            let vars = a.vars.clone().unwrap_or_else(|| {
                pooled
                    .schema()
                    .covariates()
                    .into_iter()
                    .filter(|v| local.schema().get(v).is_some())
                    .collect()
            });
            let pc = estimate_characteristics(&pooled, &vars)?;
            save_characteristics(&pc, &a.out)?;
            print_popchar_summary(&pc)
        }
    }
}

fn print_popchar_summary(pc: &PopulationCharacteristics) -> Result<()> {
    println!(
        "{}",
        json!({ "variables": pc.variables(), "n": pc.n(), "mu": pc.mu() })
    );
    Ok(())
}

/// Parses a record given either as `{name: value|null}` or as
/// `{"record": {...}}`.
pub fn parse_record_json(text: &str) -> Result<BTreeMap<String, Option<f64>>> {
    let v: serde_json::Value = serde_json::from_str(text)?;
    let obj = match v.get("record") {
        Some(r) => r.clone(),
        None => v,
    };
    Ok(serde_json::from_value(obj)?)
}

fn run_impute(a: &ImputeArgs, input: &str) -> Result<String> {
    announce("impute", a);
    let schema = Arc::new(load_schema(&a.schema)?);
    let pc = load_characteristics(&a.popchar)?;
    let method: ImputationMethod = a
        .method
        .parse()
        .map_err(|m: String| CliError::new("UnknownMethod", m))?;
    let values = parse_record_json(input)?;
    let record = PatientRecord::new(schema, values.iter().map(|(k, v)| (k.as_str(), *v)))?;
    if a.n_imp == 1 {
        let result = impute(&record, &pc, method)?;
        return Ok(serde_json::to_string_pretty(&result)?);
    }
    let set = match method {
        ImputationMethod::Joint => VariableSet::PredictorsOnly,
        ImputationMethod::JointAuxiliary => VariableSet::WithAuxiliary,
        ImputationMethod::MeanImputation => {
            return Err(CliError::new(
                "InvalidImputationCount",
                "multiple imputation needs a joint method",
            ))
        }
    };
    let draws = impute_joint_multiple(&record, &pc, set, a.n_imp, a.seed)?;
    Ok(serde_json::to_string_pretty(&json!({ "method": method, "seed": a.seed, "draws": draws }))?)
}

/// Resolves `all`, a single id, or a comma-separated list against the
/// default scenario catalog.
pub fn parse_scenarios(spec: &str) -> Result<Vec<MissingScenario>> {
    let catalog = default_scenarios();
    if spec.trim().eq_ignore_ascii_case("all") {
        return Ok(catalog);
    }
    spec.split(',')
        .map(|s| {
            let id: u32 = s
                .trim()
                .parse()
                .map_err(|_| CliError::new("InvalidConfig", format!("bad scenario `{s}`")))?;
            catalog
                .iter()
                .find(|c| c.id == id)
                .cloned()
                .ok_or_else(|| CliError::new("InvalidConfig", format!("unknown scenario {id}")))
        })
        .collect()
}

pub fn parse_methods(spec: &str) -> Result<Vec<ImputationMethod>> {
    let mut out: Vec<ImputationMethod> = Vec::new();
    for s in spec.split(',') {
        let m: ImputationMethod = s
            .trim()
            .parse()
            .map_err(|m: String| CliError::new("UnknownMethod", m))?;
        if !out.contains(&m) {
            out.push(m);
        }
    }
    Ok(out)
}

struct Cohorts {
    local: Dataset,
    external: Option<Dataset>,
    source: serde_json::Value,
}

fn simulation_cohorts(a: &SimulateArgs) -> Result<Cohorts> {
    match &a.local {
        Some(path) => {
            let local = load_dataset(path, a.local_schema.as_deref())?;
            let external = a
                .external
                .as_ref()
                .map(|p| load_dataset(p, a.external_schema.as_deref()))
                .transpose()?;
            Ok(Cohorts {
                local,
                external,
                source: json!({ "local": path, "external": a.external }),
            })
        }
        None => {
            let mut spec = load_spec(a.spec.as_deref())?;
            if let Some(n) = a.n_local {
                spec.n_local = n;
            }
            if let Some(n) = a.n_external {
                spec.n_external = n;
            }
            let c = generate_synthetic_cohorts(&spec, a.seed)?;
            Ok(Cohorts {
                local: c.local,
                external: Some(c.external),
                source: json!({
                    "synthetic": true,
                    "spec": spec,
                    "baseline_hazard": c.baseline_hazard,
                    "censoring_max_days": c.censoring_max_days,
                }),
            })
        }
    }
}

/// Runs a study as configured by `a`. Returns the rows and the resolved
/// configuration.
pub fn simulate(a: &SimulateArgs) -> Result<(Vec<SimulationRow>, serde_json::Value)> {
    let study = Study::from_id(a.study).expect("range checked by clap");
    let mut config = SimulationConfig::new(study);
    config.scenarios = parse_scenarios(&a.scenario)?;
    config.methods = parse_methods(&a.methods)?;
    config.seed = a.seed;
    config.fast_loocv = a.fast_loocv;
    config.jobs = a.jobs;
    config.predictors = a.predictors.clone();
    if let Some(m) = a.enrich {
        config.enrichment_m = m;
    }
    if a.enrich.is_some() && study != Study::Enriched {
        return Err(CliError::new("InvalidConfig", "--enrich applies to study 3 only"));
    }
    let cohorts = simulation_cohorts(a)?;
    let needs_external = study != Study::Local;
    let external = match (&cohorts.external, needs_external) {
        (Some(e), true) => Some(e),
        (None, true) => {
            return Err(CliError::new(
                "InvalidConfig",
                format!("study {} needs --external", a.study),
            ))
        }
        (_, false) => None,
    };
    let mut model_source = serde_json::Value::Null;
    let rows = if study == Study::ExternalModel {
        let ext = external.expect("checked");
        let model: CoxModel = match &a.model {
            Some(p) => {
                model_source = json!({ "file": p });
                load_external_model(p, Some(cohorts.local.schema()))?
            }
            None => {
                let predictors = config
                    .predictors
                    .clone()
                    .unwrap_or_else(|| cohorts.local.schema().predictors());
                let fit = fit_cox_detailed(ext, &predictors)?;
                model_source = json!({ "fitted_on": "external", "beta": fit.model.beta() });
                fit.model
            }
        };
        run_external_model_simulation(&cohorts.local, ext, &model, &config)?
    } else {
        run_loocv_simulation(&cohorts.local, external, &config)?
    };
    let resolved = json!({
        "config": config,
        "data": cohorts.source,
        "model": model_source,
        "n_local": cohorts.local.n_rows(),
        "approximation": if config.fast_loocv && study != Study::ExternalModel {
            json!("fast-loocv: one model fitted on all reference data; population characteristics remain leave-one-out")
        } else {
            serde_json::Value::Null
        },
    });
    Ok((rows, resolved))
}

fn run_simulate(a: &SimulateArgs) -> Result<Option<String>> {
    announce("simulate", a);
    let (rows, resolved) = simulate(a)?;
    let head = header("simulate", &json!({ "study": a.study, "seed": a.seed, "fast_loocv": a.fast_loocv }));
    let mut buf = format!("{head}\n").into_bytes();
    write_rows_csv(&rows, &mut buf)?;
    write_atomic(&a.out, &buf)?;
    let meta_path = PathBuf::from(format!("{}.meta.json", a.out.display()));
    let meta = json!({ "seed": a.seed, "n_rows": rows.len(), "resolved": resolved });
    write_text(&meta_path, &serde_json::to_string_pretty(&meta)?)?;
    let Some(format) = a.report else {
        return Ok(None);
    };
    let catalog = default_scenarios();
    let report = summarize(&rows, &catalog)?;
    Ok(Some(render_report(&report, format, None, &[head])))
}

fn render_report(
    report: &SimulationReport,
    format: ReportFormat,
    digits: Option<usize>,
    header_lines: &[String],
) -> String {
    match format {
        ReportFormat::Json => report.to_json(),
        ReportFormat::Table => {
            let mut out = String::new();
            for h in header_lines {
                out.push_str(h);
                out.push('\n');
            }
            out.push_str(&report.render_table(digits));
            out
        }
    }
}

fn run_report(a: &ReportArgs) -> Result<String> {
    announce("report", a);
    let text = fs::read_to_string(&a.rows)?;
    let mut headers: Vec<String> = text
        .lines()
        .filter(|l| l.starts_with('#'))
        .map(str::to_string)
        .collect();
    headers.push(header("report", a));
    let report = if a.from_table {
        parse_table(&text)?
    } else {
        let rows = load_rows_csv(&a.rows)?;
        summarize(&rows, &default_scenarios())?
    };
    Ok(render_report(&report, a.format, a.digits, &headers))
}

/// `H0` at the follow-up time nearest `horizon` (earlier on ties), recovered
/// from `expected = H0(time) * exp(lp_est)`.
pub fn baseline_from_rows(rows: &[&SimulationRow], horizon: f64) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    for r in rows {
        let h0 = r.expected / r.lp_est.exp();
        if !(h0.is_finite() && h0 > 0.0) {
            continue;
        }
        let d = (r.time - horizon).abs();
        match best {
            Some((bd, _)) if d >= bd => {}
            _ => best = Some((d, h0)),
        }
    }
    best.map(|(_, h0)| h0)
}

fn run_dca(a: &DcaArgs) -> Result<()> {
    announce("dca", a);
    let method: ImputationMethod = a
        .method
        .parse()
        .map_err(|m: String| CliError::new("UnknownMethod", m))?;
    let all = load_rows_csv(&a.rows)?;
    let mut rows: Vec<&SimulationRow> = all
        .iter()
        .filter(|r| r.scenario == a.scenario && r.method == method.id())
        .collect();
    rows.sort_by_key(|r| r.rowref);
    if rows.is_empty() {
        return Err(CliError::new(
            "EmptySubset",
            format!("no rows for scenario {} and method {}", a.scenario, method.key()),
        ));
    }
    let risk: Vec<f64> = match &a.model {
        Some(p) => {
            let model = CoxModel::load(p)?;
            rows.iter()
                .map(|r| risk_at_horizon(&model, r.lp_est, a.horizon))
                .collect::<std::result::Result<_, _>>()?
        }
        None => {
            let h0 = baseline_from_rows(&rows, a.horizon).ok_or_else(|| {
                CliError::new("EmptyBaseline", "no row carries a positive expected count")
            })?;
            rows.iter()
                .map(|r| 1.0 - (-h0 * r.lp_est.exp()).exp())
                .collect()
        }
    };
    let time: Vec<f64> = rows.iter().map(|r| r.time).collect();
    let status: Vec<f64> = rows.iter().map(|r| f64::from(r.status)).collect();
    let thresholds = a.thresholds.clone().unwrap_or_else(default_thresholds);
    let curve = decision_curve(&risk, &time, &status, &thresholds, a.horizon)?;
    let mut buf = Vec::new();
    curve.write_csv(&mut buf)?;
    match &a.out {
        Some(p) => write_atomic(p, &buf)?,
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(())
}

fn run_serve(a: &ServeArgs) -> Result<()> {
    announce("serve", a);
    crate::service::run(SocketAddr::new(a.host, a.port), &a.data_dir)?;
    Ok(())
}

/// Executes a parsed command line. Output meant for stdout is printed here.
pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Synth(a) => run_synth(a),
        Command::Fit(a) => run_fit(a),
        Command::Popchar(c) => run_popchar(c),
        Command::Impute(a) => {
            let mut input = String::new();
            std::io::stdin().read_to_string(&mut input)?;
            println!("{}", run_impute(a, &input)?);
            Ok(())
        }
        Command::Simulate(a) => {
            if let Some(text) = run_simulate(a)? {
                print!("{text}");
            }
            Ok(())
        }
        Command::Report(a) => {
            print!("{}", run_report(a)?);
            Ok(())
        }
        Command::Dca(a) => run_dca(a),
        Command::Serve(a) => run_serve(a),
    }
}

/// Entry point for the binary: parses `std::env::args`, runs, and returns
/// the process exit code.
pub fn main_with_args() -> i32 {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_line_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn scenario_and_method_lists() {
        assert_eq!(parse_scenarios("all").unwrap().len(), 8);
        let s = parse_scenarios("5,1").unwrap();
        assert_eq!(s.iter().map(|x| x.id).collect::<Vec<_>>(), vec![5, 1]);
        assert!(parse_scenarios("9").is_err());
        assert_eq!(
            parse_methods("m,jmi,jmiaux").unwrap(),
            ImputationMethod::ALL.to_vec()
        );
        assert_eq!(parse_methods("x").unwrap_err().code, "UnknownMethod");
    }

    #[test]
    fn record_json_accepts_both_layouts() {
        let a = parse_record_json(r#"{"age": 60, "sbp": null}"#).unwrap();
        let b = parse_record_json(r#"{"record": {"age": 60, "sbp": null}}"#).unwrap();
        assert_eq!(a, b);
        assert_eq!(a["sbp"], None);
    }

    #[test]
    fn baseline_is_recovered_from_expected_counts() {
        let mk = |time: f64, lp: f64, h0: f64| SimulationRow {
            lp_ref: lp,
            lp_est: lp,
            expected: h0 * lp.exp(),
            time,
            status: 0,
            scenario: 1,
            method: 1,
            rowref: 0,
        };
        let rows = [mk(1000.0, 0.3, 0.01), mk(3600.0, -0.2, 0.05), mk(3700.0, 1.0, 0.06)];
        let refs: Vec<&SimulationRow> = rows.iter().collect();
        let h0 = baseline_from_rows(&refs, 3650.0).unwrap();
        assert!((h0 - 0.05).abs() < 1e-12);
    }
}

//! Cox proportional-hazards prediction model.
//!
//! Coefficients maximize the Breslow partial log-likelihood by Newton-Raphson
//! with step halving. The baseline cumulative hazard is the (uncentered)
//! Breslow estimator evaluated at the distinct event times, so
//! `expected = H0(t) * exp(lp)` uses the raw linear predictor `lp = Σ β_j x_j`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{Cholesky, Matrix};
use crate::population::{write_atomic, Dataset, VariableRole, VariableSchema};

/// Horizon used for absolute risk, in days.
pub const TEN_YEARS_DAYS: f64 = 3650.0;

const MAX_ITERATIONS: usize = 50;
const SCORE_TOL: f64 = 1e-9;
const LOGLIK_REL_TOL: f64 = 1e-12;
const MAX_ABS_BETA: f64 = 50.0;
const MAX_HALVINGS: usize = 40;

#[derive(Debug, Error)]
pub enum SurvivalError {
    #[error("Cox fit did not converge: {0}")]
    NonConvergence(String),
    #[error("monotone likelihood: coefficient of `{0}` diverges")]
    MonotoneLikelihood(String),
    #[error("no events in the data")]
    NoEvents,
    #[error("predictor `{0}` is missing from the record")]
    MissingPredictor(String),
    #[error("model has an empty baseline hazard")]
    EmptyBaseline,
    #[error("malformed model file: {0}")]
    FormatError(String),
    #[error("model predictors do not match the schema: {0}")]
    PredictorMismatch(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("invalid model: {}", .0.join("; "))]
    InvalidModel(Vec<String>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl SurvivalError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::NonConvergence(_) => "NonConvergence",
            Self::MonotoneLikelihood(_) => "MonotoneLikelihood",
            Self::NoEvents => "NoEvents",
            Self::MissingPredictor(_) => "MissingPredictor",
            Self::EmptyBaseline => "EmptyBaseline",
            Self::FormatError(_) => "FormatError",
            Self::PredictorMismatch(_) => "PredictorMismatch",
            Self::UnknownColumn(_) => "UnknownColumn",
            Self::InvalidModel(_) => "ValidationFailed",
            Self::Io(_) => "Io",
        }
    }
}

type Result<T> = std::result::Result<T, SurvivalError>;

/// One step of the baseline cumulative hazard.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselinePoint {
    pub time: f64,
    pub cumhaz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoxModel {
    predictors: Vec<String>,
    beta: Vec<f64>,
    baseline: Vec<BaselinePoint>,
    trained_on_n: u64,
    converged: bool,
}

impl CoxModel {
    pub fn new(
        predictors: Vec<String>,
        beta: Vec<f64>,
        baseline: Vec<BaselinePoint>,
        trained_on_n: u64,
        converged: bool,
    ) -> Result<Self> {
        let m = Self {
            predictors,
            beta,
            baseline,
            trained_on_n,
            converged,
        };
        let v = m.violations();
        if v.is_empty() {
            Ok(m)
        } else {
            Err(SurvivalError::InvalidModel(v))
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.beta.len() != self.predictors.len() {
            out.push(format!(
                "beta_length: {} coefficients for {} predictors",
                self.beta.len(),
                self.predictors.len()
            ));
        }
        if self.beta.iter().any(|b| !b.is_finite()) {
            out.push("beta_finite: non-finite coefficient".to_string());
        }
        let mut seen = std::collections::HashSet::new();
        for p in &self.predictors {
            if !seen.insert(p) {
                out.push(format!("predictors_unique: duplicate predictor `{p}`"));
            }
        }
        for w in self.baseline.windows(2) {
            if !(w[1].time > w[0].time) {
                out.push("baseline_times_increasing: baseline times must strictly increase".to_string());
                break;
            }
        }
        for w in self.baseline.windows(2) {
            if w[1].cumhaz < w[0].cumhaz {
                out.push("baseline_nondecreasing: cumulative hazard decreases".to_string());
                break;
            }
        }
        if self
            .baseline
            .iter()
            .any(|p| !(p.cumhaz >= 0.0) || !p.cumhaz.is_finite() || !p.time.is_finite())
        {
            out.push("baseline_nonnegative: cumulative hazard must be finite and >= 0".to_string());
        }
        out
    }

    pub fn predictors(&self) -> &[String] {
        &self.predictors
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn baseline(&self) -> &[BaselinePoint] {
        &self.baseline
    }

    pub fn trained_on_n(&self) -> u64 {
        self.trained_on_n
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    /// `Σ β_j x_j` for values aligned with [`CoxModel::predictors`].
    pub fn lp_aligned(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.beta.len());
        self.beta.iter().zip(x).map(|(b, v)| b * v).sum()
    }

    /// Right-continuous step lookup of the baseline cumulative hazard; zero
    /// before the first event time.
    pub fn cumulative_hazard(&self, t: f64) -> f64 {
        let idx = self.baseline.partition_point(|p| p.time <= t);
        if idx == 0 {
            0.0
        } else {
            self.baseline[idx - 1].cumhaz
        }
    }

    /// The baseline point whose time is nearest to `horizon` (earlier time on
    /// ties).
    pub fn nearest_baseline_point(&self, horizon: f64) -> Option<BaselinePoint> {
        let mut best: Option<BaselinePoint> = None;
        for p in &self.baseline {
            match best {
                Some(b) if (p.time - horizon).abs() >= (b.time - horizon).abs() => {}
                _ => best = Some(*p),
            }
        }
        best
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelDocument::from(self)).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument =
            serde_json::from_str(text).map_err(|e| SurvivalError::FormatError(e.to_string()))?;
        doc.try_into()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), self.to_json().as_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    /// Checks that every model predictor is a predictor of `schema`.
    pub fn check_against(&self, schema: &VariableSchema) -> Result<()> {
        for p in &self.predictors {
            match schema.get(p) {
                Some(v) if v.role == VariableRole::Predictor => {}
                Some(v) => {
                    return Err(SurvivalError::PredictorMismatch(format!(
                        "`{p}` has role {:?} in the schema",
                        v.role
                    )))
                }
                None => {
                    return Err(SurvivalError::PredictorMismatch(format!(
                        "`{p}` is not in the schema"
                    )))
                }
            }
        }
        Ok(())
    }
}

/// JSON layout: `{predictors, beta, baseline: [[time, H0], ...], trained_on_n, converged}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub predictors: Vec<String>,
    pub beta: Vec<f64>,
    pub baseline: Vec<(f64, f64)>,
    #[serde(default)]
    pub trained_on_n: u64,
    #[serde(default = "default_true")]
    pub converged: bool,
}

fn default_true() -> bool {
    true
}

impl From<&CoxModel> for ModelDocument {
    fn from(m: &CoxModel) -> Self {
        Self {
            predictors: m.predictors.clone(),
            beta: m.beta.clone(),
            baseline: m.baseline.iter().map(|p| (p.time, p.cumhaz)).collect(),
            trained_on_n: m.trained_on_n,
            converged: m.converged,
        }
    }
}

impl TryFrom<ModelDocument> for CoxModel {
    type Error = SurvivalError;

    fn try_from(doc: ModelDocument) -> Result<Self> {
        CoxModel::new(
            doc.predictors,
            doc.beta,
            doc.baseline
                .into_iter()
                .map(|(time, cumhaz)| BaselinePoint { time, cumhaz })
                .collect(),
            doc.trained_on_n,
            doc.converged,
        )
        .map_err(|e| match e {
            SurvivalError::InvalidModel(v) => SurvivalError::FormatError(v.join("; ")),
            other => other,
        })
    }
}

/// Loads a published model (coefficients plus baseline table). The result is
/// marked `converged` with `trained_on_n == 0`. With a schema, every model
/// predictor must be a schema predictor.
pub fn load_external_model(path: impl AsRef<Path>, schema: Option<&VariableSchema>) -> Result<CoxModel> {
    let text = fs::read_to_string(path)?;
    external_model_from_json(&text, schema)
}

pub fn external_model_from_json(text: &str, schema: Option<&VariableSchema>) -> Result<CoxModel> {
    let mut model = CoxModel::from_json(text)?;
    if model.baseline.is_empty() {
        return Err(SurvivalError::FormatError("baseline table is empty".to_string()));
    }
    if let Some(s) = schema {
        model.check_against(s)?;
    }
    model.converged = true;
    model.trained_on_n = 0;
    Ok(model)
}

/// Survival data laid out for the partial likelihood: rows sorted by
/// decreasing time, covariates centered.
struct RiskSetData {
    times: Vec<f64>,
    status: Vec<bool>,
    /// Row-major n×p, centered by column means.
    x: Vec<f64>,
    p: usize,
}

impl RiskSetData {
    fn new(times: &[f64], status: &[bool], x: &Matrix) -> Self {
        let n = times.len();
        let p = x.cols();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| times[b].total_cmp(&times[a]));
        let means: Vec<f64> = (0..p)
            .map(|j| (0..n).map(|i| x[(i, j)]).sum::<f64>() / n as f64)
            .collect();
        let mut xs = Vec::with_capacity(n * p);
        for &i in &order {
            xs.extend((0..p).map(|j| x[(i, j)] - means[j]));
        }
        Self {
            times: order.iter().map(|&i| times[i]).collect(),
            status: order.iter().map(|&i| status[i]).collect(),
            x: xs,
            p,
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    /// Log-likelihood, score and information at `beta`.
    fn evaluate(&self, beta: &[f64]) -> (f64, Vec<f64>, Matrix) {
        let n = self.times.len();
        let p = self.p;
        let eta: Vec<f64> = (0..n)
            .map(|i| self.row(i).iter().zip(beta).map(|(a, b)| a * b).sum())
            .collect();
        let shift = eta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut loglik = 0.0;
        let mut score = vec![0.0; p];
        let mut info = Matrix::zeros(p, p);
        let mut s0 = 0.0;
        let mut s1 = vec![0.0; p];
        let mut s2 = Matrix::zeros(p, p);
        let mut i = 0;
        while i < n {
            let t = self.times[i];
            let mut j = i;
            let mut deaths = 0.0;
            while j < n && self.times[j] == t {
                let w = (eta[j] - shift).exp();
                let xr = self.row(j);
                s0 += w;
                for a in 0..p {
                    s1[a] += w * xr[a];
                    for b in 0..=a {
                        s2[(a, b)] += w * xr[a] * xr[b];
                    }
                }
                if self.status[j] {
                    deaths += 1.0;
                    loglik += eta[j];
                    for a in 0..p {
                        score[a] += xr[a];
                    }
                }
                j += 1;
            }
            if deaths > 0.0 {
                loglik -= deaths * (s0.ln() + shift);
                for a in 0..p {
                    let mean_a = s1[a] / s0;
                    score[a] -= deaths * mean_a;
                    for b in 0..=a {
                        let v = deaths * (s2[(a, b)] / s0 - mean_a * s1[b] / s0);
                        info[(a, b)] += v;
                    }
                }
            }
            i = j;
        }
        for a in 0..p {
            for b in 0..a {
                info[(b, a)] = info[(a, b)];
            }
        }
        (loglik, score, info)
    }
}

/// Partial log-likelihood, score vector and observed information (Breslow
/// ties) at `beta`, for covariate rows `x` (n×p).
pub fn cox_partial_likelihood(
    times: &[f64],
    status: &[bool],
    x: &Matrix,
    beta: &[f64],
) -> (f64, Vec<f64>, Matrix) {
    RiskSetData::new(times, status, x).evaluate(beta)
}

/// Diagnostics of a Cox fit.
#[derive(Debug, Clone)]
pub struct CoxFit {
    pub model: CoxModel,
    pub loglik: f64,
    pub iterations: usize,
    pub score: Vec<f64>,
    /// Log-likelihood after each accepted Newton step (index 0 is beta = 0).
    pub loglik_trace: Vec<f64>,
}

/// Fits a Cox model on `predictors` of `data`.
pub fn fit_cox(data: &Dataset, predictors: &[String]) -> Result<CoxModel> {
    fit_cox_detailed(data, predictors).map(|f| f.model)
}

pub fn fit_cox_detailed(data: &Dataset, predictors: &[String]) -> Result<CoxFit> {
    let n = data.n_rows();
    let cols = predictors
        .iter()
        .map(|p| {
            data.schema()
                .index_of(p)
                .ok_or_else(|| SurvivalError::UnknownColumn(p.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut x = Matrix::zeros(n, cols.len());
    for i in 0..n {
        let row = data.row(i);
        for (j, &c) in cols.iter().enumerate() {
            x[(i, j)] = row[c];
        }
    }
    let times = data.times();
    let status: Vec<bool> = data.statuses().iter().map(|&s| s == 1.0).collect();
    fit_cox_matrix(&times, &status, &x, predictors)
}

/// Core Newton-Raphson solver on raw arrays.
pub fn fit_cox_matrix(times: &[f64], status: &[bool], x: &Matrix, predictors: &[String]) -> Result<CoxFit> {
    let n = times.len();
    let p = x.cols();
    assert_eq!(predictors.len(), p);
    if !status.iter().any(|&s| s) {
        return Err(SurvivalError::NoEvents);
    }
    for j in 0..p {
        let first = x[(0, j)];
        if (0..n).all(|i| x[(i, j)] == first) {
            return Err(SurvivalError::NonConvergence(format!(
                "predictor `{}` is constant",
                predictors[j]
            )));
        }
    }
    let rs = RiskSetData::new(times, status, x);
    let mut beta = vec![0.0; p];
    let (mut loglik, mut score, mut info) = rs.evaluate(&beta);
    let mut trace = vec![loglik];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        if max_abs(&score) < SCORE_TOL {
            converged = true;
            break;
        }
        iterations += 1;
        let step = newton_step(&info, &score).ok_or_else(|| {
            if iterations == 1 {
                SurvivalError::NonConvergence("information matrix is singular".to_string())
            } else {
                SurvivalError::MonotoneLikelihood(predictors[diverging_index(&beta)].clone())
            }
        })?;
        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let candidate: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + scale * s).collect();
            let eval = rs.evaluate(&candidate);
            if eval.0.is_finite() && eval.0 >= loglik {
                accepted = Some((candidate, eval));
                break;
            }
            scale *= 0.5;
        }
        let (new_beta, (new_ll, new_score, new_info)) = accepted.ok_or_else(|| {
            SurvivalError::NonConvergence("step halving failed to increase the likelihood".to_string())
        })?;
        if let Some(j) = new_beta.iter().position(|b| b.abs() > MAX_ABS_BETA) {
            return Err(SurvivalError::MonotoneLikelihood(predictors[j].clone()));
        }
        let rel_change = (new_ll - loglik).abs() / loglik.abs().max(f64::MIN_POSITIVE);
        beta = new_beta;
        loglik = new_ll;
        score = new_score;
        info = new_info;
        trace.push(loglik);
        if rel_change < LOGLIK_REL_TOL || max_abs(&score) < SCORE_TOL {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(SurvivalError::NonConvergence(format!(
            "no convergence after {MAX_ITERATIONS} iterations"
        )));
    }
    // A coefficient whose Newton step stays large after the likelihood has
    // flattened is running off to infinity.
    match newton_step(&info, &score) {
        Some(step) => {
            if let Some(j) =
                (0..p).find(|&j| step[j].abs() > 1e-4 * beta[j].abs().max(1.0))
            {
                return Err(SurvivalError::MonotoneLikelihood(predictors[j].clone()));
            }
        }
        None => {
            return Err(SurvivalError::MonotoneLikelihood(
                predictors[diverging_index(&beta)].clone(),
            ))
        }
    }
    let baseline = breslow_baseline(times, status, x, &beta);
    let model = CoxModel::new(predictors.to_vec(), beta, baseline, n as u64, true)?;
    Ok(CoxFit {
        model,
        loglik,
        iterations,
        score,
        loglik_trace: trace,
    })
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn diverging_index(beta: &[f64]) -> usize {
    (0..beta.len())
        .max_by(|&a, &b| beta[a].abs().total_cmp(&beta[b].abs()))
        .unwrap_or(0)
}

fn newton_step(info: &Matrix, score: &[f64]) -> Option<Vec<f64>> {
    let chol = Cholesky::factor(info, 1e-13).ok()?;
    let step = chol.solve(score);
    step.iter().all(|s| s.is_finite()).then_some(step)
}

/// Uncentered Breslow cumulative baseline hazard at each distinct event time:
/// `H0(t) = Σ_{t_k <= t} d_k / Σ_{i in R(t_k)} exp(β'x_i)`.
pub fn breslow_baseline(times: &[f64], status: &[bool], x: &Matrix, beta: &[f64]) -> Vec<BaselinePoint> {
    let n = times.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| times[b].total_cmp(&times[a]));
    let eta: Vec<f64> = (0..n).map(|i| x.row(i).iter().zip(beta).map(|(a, b)| a * b).sum()).collect();
    let shift = eta.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // Descending pass collects (time, deaths, risk-set sum).
    let mut steps = Vec::new();
    let mut s0 = 0.0;
    let mut i = 0;
    while i < n {
        let t = times[order[i]];
        let mut deaths = 0.0;
        while i < n && times[order[i]] == t {
            s0 += (eta[order[i]] - shift).exp();
            if status[order[i]] {
                deaths += 1.0;
            }
            i += 1;
        }
        if deaths > 0.0 {
            steps.push((t, deaths / (s0 * shift.exp())));
        }
    }
    steps.reverse();
    let mut cum = 0.0;
    steps
        .into_iter()
        .map(|(time, inc)| {
            cum += inc;
            BaselinePoint { time, cumhaz: cum }
        })
        .collect()
}

fn aligned_values(model: &CoxModel, completed: &BTreeMap<String, f64>) -> Result<Vec<f64>> {
    model
        .predictors
        .iter()
        .map(|p| {
            completed
                .get(p)
                .copied()
                .ok_or_else(|| SurvivalError::MissingPredictor(p.clone()))
        })
        .collect()
}

/// Uncentered linear predictor `Σ β_j x_j`.
pub fn linear_predictor(model: &CoxModel, completed: &BTreeMap<String, f64>) -> Result<f64> {
    Ok(model.lp_aligned(&aligned_values(model, completed)?))
}

/// `H0(followup) * exp(lp)`.
pub fn expected_events(model: &CoxModel, completed: &BTreeMap<String, f64>, followup_days: f64) -> Result<f64> {
    let lp = linear_predictor(model, completed)?;
    Ok(expected_from_lp(model, lp, followup_days))
}

pub fn expected_from_lp(model: &CoxModel, lp: f64, followup_days: f64) -> f64 {
    model.cumulative_hazard(followup_days) * lp.exp()
}

/// Absolute risk by `horizon_days`: `1 - exp(-H0(t*))^exp(lp)` where `t*` is
/// the baseline time closest to the horizon.
pub fn risk_at_horizon(model: &CoxModel, lp: f64, horizon_days: f64) -> Result<f64> {
    let point = model
        .nearest_baseline_point(horizon_days)
        .ok_or(SurvivalError::EmptyBaseline)?;
    let survival = (-point.cumhaz).exp().powf(lp.exp());
    Ok((1.0 - survival).clamp(0.0, 1.0))
}

pub fn ten_year_risk(model: &CoxModel, lp: f64) -> Result<f64> {
    risk_at_horizon(model, lp, TEN_YEARS_DAYS)
}

/// Point prediction for one completed record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskPrediction {
    pub lp: f64,
    pub expected_events: f64,
    pub risk_10y: f64,
}

pub fn predict(model: &CoxModel, completed: &BTreeMap<String, f64>, followup_days: f64) -> Result<RiskPrediction> {
    let lp = linear_predictor(model, completed)?;
    Ok(RiskPrediction {
        lp,
        expected_events: expected_from_lp(model, lp, followup_days),
        risk_10y: ten_year_risk(model, lp)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    fn model(beta: Vec<f64>, baseline: &[(f64, f64)]) -> CoxModel {
        let preds = (0..beta.len()).map(|i| format!("x{i}")).collect();
        CoxModel::new(
            preds,
            beta,
            baseline
                .iter()
                .map(|&(time, cumhaz)| BaselinePoint { time, cumhaz })
                .collect(),
            10,
            true,
        )
        .unwrap()
    }

    fn record(vals: &[f64]) -> BTreeMap<String, f64> {
        vals.iter().enumerate().map(|(i, v)| (format!("x{i}"), *v)).collect()
    }

    #[test]
    fn linear_predictor_examples() {
        let m = model(vec![0.0, 0.0], &[(1.0, 0.1)]);
        assert_eq!(linear_predictor(&m, &record(&[7.0, -3.0])).unwrap(), 0.0);
        let m = model(vec![1.0, -1.0], &[(1.0, 0.1)]);
        assert_eq!(linear_predictor(&m, &record(&[3.0, 3.0])).unwrap(), 0.0);
        let m = model(vec![0.5, 2.0], &[(1.0, 0.1)]);
        assert_eq!(linear_predictor(&m, &record(&[2.0, 1.0])).unwrap(), 3.0);
        let err = linear_predictor(&m, &record(&[2.0])).unwrap_err();
        assert!(matches!(err, SurvivalError::MissingPredictor(p) if p == "x1"));
    }

    #[test]
    fn expected_events_examples() {
        let m = model(vec![1.0], &[(10.0, 0.2), (20.0, 0.5)]);
        assert_eq!(expected_events(&m, &record(&[0.0]), 5.0).unwrap(), 0.0);
        assert_eq!(expected_events(&m, &record(&[0.0]), 10.0).unwrap(), 0.2);
        assert_eq!(expected_events(&m, &record(&[0.0]), 19.9).unwrap(), 0.2);
        let e0 = expected_events(&m, &record(&[0.0]), 25.0).unwrap();
        let e1 = expected_events(&m, &record(&[1.0]), 25.0).unwrap();
        assert!((e1 / e0 - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn ten_year_risk_examples() {
        let m = model(vec![1.0], &[(3000.0, 0.05), (3650.0, 0.1), (4000.0, 0.2)]);
        let r = ten_year_risk(&m, 0.0).unwrap();
        assert!((r - (1.0 - (-0.1f64).exp())).abs() < 1e-15);
        assert!((r - 0.09516).abs() < 1e-5);
        assert!(ten_year_risk(&m, -800.0).unwrap() < 1e-300);
        let zero = model(vec![1.0], &[(3650.0, 0.0)]);
        assert_eq!(ten_year_risk(&zero, 5.0).unwrap(), 0.0);
        let empty = model(vec![1.0], &[]);
        assert!(matches!(ten_year_risk(&empty, 0.0), Err(SurvivalError::EmptyBaseline)));
    }

    #[test]
    fn nearest_time_ties_break_early() {
        let m = model(vec![0.0], &[(3640.0, 0.1), (3660.0, 0.3)]);
        assert_eq!(m.nearest_baseline_point(3650.0).unwrap().time, 3640.0);
    }

    #[test]
    fn monotone_likelihood_detected() {
        let x = Matrix::from_rows(&[vec![1.0], vec![1.0], vec![0.0], vec![0.0]]);
        let times = [1.0, 2.0, 3.0, 4.0];
        let status = [true, true, false, false];
        let err = fit_cox_matrix(&times, &status, &x, &names(&["exposed"])).unwrap_err();
        assert!(matches!(err, SurvivalError::MonotoneLikelihood(ref p) if p == "exposed"), "{err:?}");
    }

    #[test]
    fn constant_predictor_guard() {
        let x = Matrix::from_rows(&[vec![1.0], vec![1.0], vec![1.0]]);
        let err = fit_cox_matrix(&[1.0, 2.0, 3.0], &[true, false, true], &x, &names(&["c"])).unwrap_err();
        assert!(matches!(err, SurvivalError::NonConvergence(_)));
    }

    #[test]
    fn no_events() {
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0]]);
        let err = fit_cox_matrix(&[1.0, 2.0], &[false, false], &x, &names(&["a"])).unwrap_err();
        assert!(matches!(err, SurvivalError::NoEvents));
    }

    #[test]
    fn breslow_at_zero_beta_is_nelson_aalen() {
        let times = [2.0, 3.0, 3.0, 5.0, 8.0, 9.0];
        let status = [true, true, false, true, false, true];
        let x = Matrix::from_rows(&[vec![0.3], vec![1.0], vec![-2.0], vec![0.0], vec![4.0], vec![1.0]]);
        let base = breslow_baseline(&times, &status, &x, &[0.0]);
        // Nelson-Aalen by hand: 1/6, +1/5 (one of two at t=3 is an event), +1/3, +1/1
        let expect = [(2.0, 1.0 / 6.0), (3.0, 1.0 / 6.0 + 1.0 / 5.0), (5.0, 1.0 / 6.0 + 1.0 / 5.0 + 1.0 / 3.0)];
        for (p, (t, h)) in base.iter().zip(expect) {
            assert_eq!(p.time, t);
            assert!((p.cumhaz - h).abs() < 1e-15);
        }
        assert_eq!(base.len(), 4);
        assert!((base[3].cumhaz - (1.0 / 6.0 + 1.0 / 5.0 + 1.0 / 3.0 + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn model_json_rejects_missing_baseline() {
        let text = r#"{"predictors":["a"],"beta":[0.1]}"#;
        assert!(matches!(
            external_model_from_json(text, None),
            Err(SurvivalError::FormatError(_))
        ));
        let text = r#"{"predictors":["a"],"beta":[0.1],"baseline":[]}"#;
        assert!(matches!(
            external_model_from_json(text, None),
            Err(SurvivalError::FormatError(_))
        ));
    }
}

//! Synthetic local and external cohorts for the simulation studies.
//!
//! Patient characteristics come from a latent multivariate normal. Continuous
//! variables are `mean + sd * z`; binary variables are `z > Φ⁻¹(1 − p)`.
//! Event times are exponential with hazard `λ0 exp(βᵀ(x − x̄))`, where `x̄` are
//! the nominal means of the spec, and censoring is uniform on `[0, c_max]`.
//! The external cohort shares the correlation matrix but its latent means are
//! shifted by `external_shift_scale * external_shift`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::linalg::{Cholesky, Matrix};
use crate::population::{Dataset, PopulationError, Variable, VariableKind, VariableRole, VariableSchema};
use crate::seeds::derive_seed;
use crate::survival::TEN_YEARS_DAYS;

#[derive(Debug, Error)]
pub enum SyntheticError {
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Population(#[from] PopulationError),
}

impl SyntheticError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::InvalidSpec(_) => "InvalidSpec",
            Self::Population(e) => e.code(),
        }
    }
}

type Result<T> = std::result::Result<T, SyntheticError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticVariable {
    pub name: String,
    pub kind: VariableKind,
    pub role: VariableRole,
    /// Mean of a continuous variable, prevalence of a binary one.
    pub mean: f64,
    /// Ignored for binary variables.
    #[serde(default)]
    pub sd: f64,
    /// Latent-scale mean shift of the external cohort, in SD units.
    #[serde(default)]
    pub external_shift: f64,
    /// Only recorded in the local cohort.
    #[serde(default)]
    pub local_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticCohortSpec {
    pub n_local: usize,
    pub n_external: usize,
    pub variables: Vec<SyntheticVariable>,
    /// Latent correlations as `(a, b, rho)`; unlisted pairs are independent.
    pub correlations: Vec<(String, String, f64)>,
    /// Log hazard ratios of the predictors.
    pub beta: BTreeMap<String, f64>,
    /// Baseline hazard per day at the nominal means; calibrated to
    /// `target_risk_10y` on the local cohort when absent.
    #[serde(default)]
    pub baseline_hazard: Option<f64>,
    pub target_risk_10y: f64,
    /// Fraction of local patients censored before their event.
    pub censoring_rate: f64,
    pub external_shift_scale: f64,
}

fn continuous(name: &str, role: VariableRole, mean: f64, sd: f64, shift: f64) -> SyntheticVariable {
    SyntheticVariable {
        name: name.into(),
        kind: VariableKind::Continuous,
        role,
        mean,
        sd,
        external_shift: shift,
        local_only: false,
    }
}

fn binary(name: &str, role: VariableRole, prevalence: f64, shift: f64) -> SyntheticVariable {
    SyntheticVariable {
        name: name.into(),
        kind: VariableKind::Binary,
        role,
        mean: prevalence,
        sd: 0.0,
        external_shift: shift,
        local_only: false,
    }
}

impl Default for SyntheticCohortSpec {
    /// Eight predictors with the cohort's published means and SDs, five
    /// auxiliaries (LDL correlated 0.7 with total cholesterol, CRP only
    /// recorded locally).
    fn default() -> Self {
        use VariableRole::{Auxiliary as A, Predictor as P};
        let variables = vec![
            continuous("age", P, 56.28, 12.45, 0.5),
            binary("gender", P, 0.655, 0.0),
            binary("smoking", P, 0.2824, 0.3),
            continuous("sbp", P, 144.67, 21.58, 0.3),
            continuous("tc", P, 5.11, 1.37, 0.5),
            continuous("hdl", P, 1.27, 0.38, -0.4),
            binary("dm", P, 0.1823, 0.4),
            binary("ad", P, 0.6609, 0.3),
            continuous("ldl", A, 3.05, 1.10, 0.5),
            continuous("hba1c", A, 6.0, 0.9, 0.3),
            continuous("mdrd", A, 78.0, 18.0, -0.3),
            binary("hist_cvd", A, 0.30, 0.2),
            SyntheticVariable {
                local_only: true,
                ..continuous("crp", A, 3.0, 2.0, 0.0)
            },
        ];
        let c = |a: &str, b: &str, r: f64| (a.to_string(), b.to_string(), r);
        let correlations = vec![
            c("age", "sbp", 0.35),
            c("age", "dm", 0.15),
            c("age", "ad", 0.25),
            c("age", "tc", 0.10),
            c("age", "mdrd", -0.45),
            c("age", "hist_cvd", 0.25),
            c("gender", "hdl", -0.35),
            c("gender", "smoking", 0.10),
            c("gender", "tc", -0.10),
            c("smoking", "hdl", -0.15),
            c("smoking", "crp", 0.25),
            c("sbp", "ad", 0.30),
            c("sbp", "mdrd", -0.15),
            c("tc", "hdl", 0.20),
            c("tc", "ldl", 0.70),
            c("tc", "ad", -0.15),
            c("hdl", "dm", -0.20),
            c("hdl", "ldl", 0.05),
            c("hdl", "crp", -0.20),
            c("dm", "hba1c", 0.60),
            c("dm", "ad", 0.15),
            c("hist_cvd", "ad", 0.20),
        ];
        let beta = [
            ("age", 0.05),
            ("gender", 0.4),
            ("smoking", 0.5),
            ("sbp", 0.01),
            ("tc", 0.25),
            ("hdl", -0.6),
            ("dm", 0.5),
            ("ad", 0.2),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
        Self {
            n_local: 3000,
            n_external: 3000,
            variables,
            correlations,
            beta,
            baseline_hazard: None,
            target_risk_10y: 0.15,
            censoring_rate: 0.6,
            external_shift_scale: 1.6,
        }
    }
}

/// Output of [`generate_synthetic_cohorts`].
#[derive(Debug, Clone)]
pub struct SyntheticCohorts {
    pub local: Dataset,
    pub external: Dataset,
    /// Baseline hazard actually used.
    pub baseline_hazard: f64,
    /// Upper bound of the uniform censoring distribution, in days.
    pub censoring_max_days: f64,
}

impl SyntheticCohortSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| SyntheticError::InvalidSpec(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    fn index(&self, name: &str) -> Result<usize> {
        self.variables
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| SyntheticError::InvalidSpec(format!("unknown variable `{name}`")))
    }

    /// Latent correlation matrix; errors unless positive definite.
    pub fn correlation_matrix(&self) -> Result<Matrix> {
        let p = self.variables.len();
        let mut r = Matrix::identity(p);
        for (a, b, rho) in &self.correlations {
            let (i, j) = (self.index(a)?, self.index(b)?);
            if i == j || !(rho.abs() < 1.0) {
                return Err(SyntheticError::InvalidSpec(format!("bad correlation {a}-{b}: {rho}")));
            }
            r[(i, j)] = *rho;
            r[(j, i)] = *rho;
        }
        Cholesky::factor(&r, 1e-12).map_err(|_| {
            SyntheticError::InvalidSpec("correlation matrix is not positive definite".into())
        })?;
        Ok(r)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SyntheticError::InvalidSpec(m.to_string()));
        if self.n_local < 2 || self.n_external < 2 {
            return bad("cohorts need at least two patients");
        }
        if !(0.0..1.0).contains(&self.censoring_rate) {
            return bad("censoring_rate must lie in [0, 1)");
        }
        if !(self.target_risk_10y > 0.0 && self.target_risk_10y < 1.0) {
            return bad("target_risk_10y must lie in (0, 1)");
        }
        for v in &self.variables {
            if v.role.is_outcome() {
                return bad("outcome columns are generated, not specified");
            }
            match v.kind {
                VariableKind::Binary if !(v.mean > 0.0 && v.mean < 1.0) => {
                    return bad(&format!("prevalence of `{}` must lie in (0, 1)", v.name))
                }
                VariableKind::Continuous if !(v.sd > 0.0) => {
                    return bad(&format!("sd of `{}` must be positive", v.name))
                }
                _ => {}
            }
        }
        for name in self.beta.keys() {
            let v = &self.variables[self.index(name)?];
            if v.role != VariableRole::Predictor {
                return bad(&format!("`{name}` has a coefficient but is not a predictor"));
            }
        }
        if let Some(h) = self.baseline_hazard {
            if !(h > 0.0) {
                return bad("baseline_hazard must be positive");
            }
        }
        Ok(())
    }

    fn schema(&self, external: bool) -> VariableSchema {
        let mut vars: Vec<Variable> = self
            .variables
            .iter()
            .filter(|v| !(external && v.local_only))
            .map(|v| Variable::new(v.name.clone(), v.kind, v.role))
            .collect();
        vars.push(Variable::new("time", VariableKind::Continuous, VariableRole::OutcomeTime));
        vars.push(Variable::new("status", VariableKind::Binary, VariableRole::OutcomeStatus));
        VariableSchema::new(vars).expect("generated schema is valid")
    }
}

/// Patient characteristics before outcomes are attached.
struct Covariates {
    x: Vec<Vec<f64>>,
    /// `βᵀ(x − x̄)`.
    eta: Vec<f64>,
}

fn draw_covariates(spec: &SyntheticCohortSpec, chol: &Cholesky, n: usize, shift: f64, rng: &mut ChaCha8Rng) -> Covariates {
    let normal = Normal::standard();
    let p = spec.variables.len();
    let cut: Vec<f64> = spec
        .variables
        .iter()
        .map(|v| match v.kind {
            VariableKind::Binary => normal.inverse_cdf(1.0 - v.mean),
            VariableKind::Continuous => 0.0,
        })
        .collect();
    let coef: Vec<(usize, f64, f64)> = spec
        .variables
        .iter()
        .enumerate()
        .filter_map(|(i, v)| spec.beta.get(&v.name).map(|b| (i, *b, v.mean)))
        .collect();
    let l = chol.lower();
    let mut z = vec![0.0; p];
    let mut x = Vec::with_capacity(n);
    let mut eta = Vec::with_capacity(n);
    for _ in 0..n {
        for zi in z.iter_mut() {
            *zi = StandardNormal.sample(rng);
        }
        let row: Vec<f64> = (0..p)
            .map(|i| {
                let v = &spec.variables[i];
                let latent = shift * v.external_shift + (0..=i).map(|k| l[(i, k)] * z[k]).sum::<f64>();
                match v.kind {
                    VariableKind::Continuous => v.mean + v.sd * latent,
                    VariableKind::Binary => f64::from(u8::from(latent > cut[i])),
                }
            })
            .collect();
        eta.push(coef.iter().map(|&(i, b, m)| b * (row[i] - m)).sum());
        x.push(row);
    }
    Covariates { x, eta }
}

fn mean_risk(eta: &[f64], hazard: f64) -> f64 {
    eta.iter()
        .map(|e| 1.0 - (-hazard * e.exp() * TEN_YEARS_DAYS).exp())
        .sum::<f64>()
        / eta.len() as f64
}

/// Baseline hazard giving mean 10-year risk `target` over `eta`.
fn calibrate_hazard(eta: &[f64], target: f64) -> f64 {
    let (mut lo, mut hi) = (-30.0f64, 0.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean_risk(eta, mid.exp()) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).exp()
}

/// Upper censoring bound so that a fraction `rate` of patients is censored,
/// given event times and uniform censoring quantiles `u`.
fn calibrate_censoring(event_times: &[f64], u: &[f64], rate: f64) -> f64 {
    if rate == 0.0 {
        return f64::INFINITY;
    }
    let censored = |c: f64| {
        event_times.iter().zip(u).filter(|(t, ui)| *ui * c < **t).count() as f64 / event_times.len() as f64
    };
    let (mut lo, mut hi) = (0.0f64, 20.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if censored(mid.exp()) > rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).exp()
}

fn attach_outcomes(
    spec: &SyntheticCohortSpec,
    cov: Covariates,
    hazard: f64,
    c_max: Option<f64>,
    external: bool,
    rng: &mut ChaCha8Rng,
) -> (Dataset, f64) {
    let n = cov.x.len();
    let event_times: Vec<f64> = cov
        .eta
        .iter()
        .map(|e| {
            let u: f64 = rng.random();
            // 1 - u lies in (0, 1], so the log is finite.
            -(1.0 - u).ln() / (hazard * e.exp())
        })
        .collect();
    let cu: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let c_max = c_max.unwrap_or_else(|| calibrate_censoring(&event_times, &cu, spec.censoring_rate));
    let keep: Vec<usize> = spec
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| !(external && v.local_only))
        .map(|(i, _)| i)
        .collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let c = cu[i] * c_max;
            let (time, status) = if event_times[i] <= c {
                (event_times[i], 1.0)
            } else {
                (c, 0.0)
            };
            // Times are in days; keep them strictly positive and on a grid
            // that survives CSV round trips.
            let time = (time.max(1e-3) * 1e6).round() / 1e6;
            let mut row: Vec<f64> = keep.iter().map(|&k| cov.x[i][k]).collect();
            row.push(time.max(1e-6));
            row.push(status);
            row
        })
        .collect();
    // External ids continue after the local ones so pooled data keeps
    // every id unique.
    let first_id = if external { spec.n_local as u64 } else { 0 };
    let ids: Vec<u64> = (first_id..first_id + rows.len() as u64).collect();
    let data = Dataset::new(spec.schema(external), rows, ids).expect("generated rows are valid");
    (data, c_max)
}

/// Draws the local and external cohorts; deterministic under `seed`.
pub fn generate_synthetic_cohorts(spec: &SyntheticCohortSpec, seed: u64) -> Result<SyntheticCohorts> {
    spec.validate()?;
    let r = spec.correlation_matrix()?;
    let chol = Cholesky::factor(&r, 1e-12).expect("checked positive definite");
    let mut local_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[1]));
    let mut external_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[2]));
    let local_cov = draw_covariates(spec, &chol, spec.n_local, 0.0, &mut local_rng);
    let hazard = spec
        .baseline_hazard
        .unwrap_or_else(|| calibrate_hazard(&local_cov.eta, spec.target_risk_10y));
    let (local, c_max) = attach_outcomes(spec, local_cov, hazard, None, false, &mut local_rng);
    let ext_cov = draw_covariates(spec, &chol, spec.n_external, spec.external_shift_scale, &mut external_rng);
    let (external, _) = attach_outcomes(spec, ext_cov, hazard, Some(c_max), true, &mut external_rng);
    Ok(SyntheticCohorts {
        local,
        external,
        baseline_hazard: hazard,
        censoring_max_days: c_max,
    })
}

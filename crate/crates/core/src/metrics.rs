//! Predictive performance measures for survival risk models.
//!
//! Calibration-in-the-large and calibration slope are Poisson regressions of
//! the event indicator with a log-expected offset, fitted by IRLS. The
//! c-statistic is Harrell's, computed in `O(n log n)` with a Fenwick tree.

use std::cmp::Ordering;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{Cholesky, Matrix};
use crate::population::Dataset;

/// Relative deviance change below which IRLS stops.
pub const IRLS_DEVIANCE_TOL: f64 = 1e-10;
/// Largest coefficient change accepted at convergence.
pub const IRLS_COEF_TOL: f64 = 1e-8;
pub const IRLS_MAX_ITERATIONS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("input lengths differ: {0}")]
    LengthMismatch(String),
    #[error("empty input")]
    EmptyInput,
    #[error("no comparable pairs")]
    NoComparablePairs,
    #[error("IRLS did not converge: {0}")]
    NonConvergence(String),
    #[error("all outcomes are zero")]
    AllZeroOutcomes,
    #[error("expected counts must be positive and finite")]
    ZeroExpected,
    #[error("linear predictor has zero variance")]
    DegenerateLP,
    #[error("{n} subjects cannot fill {g} groups")]
    TooFewSubjects { n: usize, g: usize },
    #[error("no thresholds given")]
    EmptyThresholds,
    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),
    #[error("status values must be 0 or 1")]
    InvalidStatus,
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("column `{0}` is missing")]
    UnknownColumn(String),
    #[error("need at least {needed} subjects, got {actual}")]
    InsufficientData { needed: usize, actual: usize },
}

impl MetricsError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::LengthMismatch(_) => "LengthMismatch",
            Self::EmptyInput => "EmptyInput",
            Self::NoComparablePairs => "NoComparablePairs",
            Self::NonConvergence(_) => "NonConvergence",
            Self::AllZeroOutcomes => "AllZeroOutcomes",
            Self::ZeroExpected => "ZeroExpected",
            Self::DegenerateLP => "DegenerateLP",
            Self::TooFewSubjects { .. } => "TooFewSubjects",
            Self::EmptyThresholds => "EmptyThresholds",
            Self::InvalidThresholds(_) => "InvalidThresholds",
            Self::InvalidStatus => "InvalidStatus",
            Self::NonFinite(_) => "NonFinite",
            Self::UnknownColumn(_) => "UnknownColumn",
            Self::InsufficientData { .. } => "InsufficientData",
        }
    }
}

type Result<T> = std::result::Result<T, MetricsError>;

fn same_len(what: &str, lens: &[usize]) -> Result<usize> {
    let n = lens[0];
    if lens.iter().any(|&l| l != n) {
        return Err(MetricsError::LengthMismatch(format!("{what}: {lens:?}")));
    }
    if n == 0 {
        return Err(MetricsError::EmptyInput);
    }
    Ok(n)
}

fn check_status(status: &[f64]) -> Result<()> {
    if status.iter().any(|&s| s != 0.0 && s != 1.0) {
        return Err(MetricsError::InvalidStatus);
    }
    Ok(())
}

/// Mean squared difference between two linear predictors.
pub fn mse_lp(lp_ref: &[f64], lp_est: &[f64]) -> Result<f64> {
    let n = same_len("mse_lp", &[lp_ref.len(), lp_est.len()])?;
    let s: f64 = lp_ref.iter().zip(lp_est).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(s / n as f64)
}

/// Pair counts behind Harrell's c.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConcordanceCounts {
    pub concordant: u64,
    pub discordant: u64,
    pub tied: u64,
}

impl ConcordanceCounts {
    pub fn comparable(&self) -> u64 {
        self.concordant + self.discordant + self.tied
    }

    pub fn c_index(&self) -> Result<f64> {
        let total = self.comparable();
        if total == 0 {
            return Err(MetricsError::NoComparablePairs);
        }
        Ok((self.concordant as f64 + 0.5 * self.tied as f64) / total as f64)
    }
}

struct Fenwick {
    tree: Vec<u64>,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Self { tree: vec![0; n + 1] }
    }

    fn add(&mut self, i: usize) {
        let mut i = i + 1;
        while i < self.tree.len() {
            self.tree[i] += 1;
            i += i & i.wrapping_neg();
        }
    }

    /// Count of inserted ranks `< i`.
    fn below(&self, i: usize) -> u64 {
        let mut i = i;
        let mut s = 0;
        while i > 0 {
            s += self.tree[i];
            i -= i & i.wrapping_neg();
        }
        s
    }
}

/// Harrell's pair counts. A pair is comparable when the shorter time ends in
/// an event; at equal times only when exactly one of the two is an event.
pub fn concordance_counts(lp: &[f64], time: &[f64], status: &[f64]) -> Result<ConcordanceCounts> {
    let n = same_len("concordance", &[lp.len(), time.len(), status.len()])?;
    check_status(status)?;
    if lp.iter().chain(time).any(|v| !v.is_finite()) {
        return Err(MetricsError::NonFinite("concordance"));
    }
    let mut sorted_lp = lp.to_vec();
    sorted_lp.sort_by(f64::total_cmp);
    sorted_lp.dedup();
    let rank: Vec<usize> = lp
        .iter()
        .map(|v| sorted_lp.partition_point(|u| u < v))
        .collect();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| time[b].total_cmp(&time[a]));
    let mut fen = Fenwick::new(sorted_lp.len());
    let mut inserted = 0u64;
    let mut counts = ConcordanceCounts::default();
    let mut i = 0;
    while i < n {
        let t = time[order[i]];
        let mut j = i;
        while j < n && time[order[j]] == t {
            j += 1;
        }
        let group = &order[i..j];
        for &k in group.iter().filter(|&&k| status[k] == 0.0) {
            fen.add(rank[k]);
            inserted += 1;
        }
        for &k in group.iter().filter(|&&k| status[k] == 1.0) {
            let lower = fen.below(rank[k]);
            let not_higher = fen.below(rank[k] + 1);
            counts.concordant += lower;
            counts.tied += not_higher - lower;
            counts.discordant += inserted - not_higher;
        }
        for &k in group.iter().filter(|&&k| status[k] == 1.0) {
            fen.add(rank[k]);
            inserted += 1;
        }
        i = j;
    }
    Ok(counts)
}

/// Harrell's c-statistic; higher `lp` means higher risk.
pub fn concordance(lp: &[f64], time: &[f64], status: &[f64]) -> Result<f64> {
    concordance_counts(lp, time, status)?.c_index()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    Poisson,
    Binomial,
}

impl Family {
    fn mean(self, eta: f64) -> f64 {
        match self {
            Family::Poisson => eta.exp(),
            Family::Binomial => 1.0 / (1.0 + (-eta).exp()),
        }
    }

    /// IRLS weight `(dmu/deta)^2 / Var(mu)`.
    fn weight(self, mu: f64) -> f64 {
        match self {
            Family::Poisson => mu,
            Family::Binomial => mu * (1.0 - mu),
        }
    }

    fn deviance(self, y: &[f64], mu: &[f64]) -> f64 {
        let mut d = 0.0;
        for (&yi, &mi) in y.iter().zip(mu) {
            d += match self {
                Family::Poisson => {
                    let t = if yi > 0.0 { yi * (yi / mi).ln() } else { 0.0 };
                    t - (yi - mi)
                }
                Family::Binomial => {
                    let a = if yi > 0.0 { yi * (yi / mi).ln() } else { 0.0 };
                    let b = if yi < 1.0 { (1.0 - yi) * ((1.0 - yi) / (1.0 - mi)).ln() } else { 0.0 };
                    a + b
                }
            };
        }
        2.0 * d
    }
}

struct IrlsOutcome {
    coef: Vec<f64>,
    deviance: f64,
    iterations: usize,
    converged: bool,
}

/// Iteratively reweighted least squares for a canonical-link GLM.
/// `design` is n×k and includes the intercept column.
fn irls(family: Family, design: &Matrix, y: &[f64], offset: &[f64], start: Vec<f64>) -> Result<IrlsOutcome> {
    let n = design.rows();
    let k = design.cols();
    let mut coef = start;
    let linear = |coef: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| offset[i] + design.row(i).iter().zip(coef).map(|(a, b)| a * b).sum::<f64>())
            .collect()
    };
    let mut eta = linear(&coef);
    let mut mu: Vec<f64> = eta.iter().map(|&e| family.mean(e)).collect();
    let mut deviance = family.deviance(y, &mu);
    for iteration in 1..=IRLS_MAX_ITERATIONS {
        let mut xtwx = Matrix::zeros(k, k);
        let mut xtwz = vec![0.0; k];
        for i in 0..n {
            let w = family.weight(mu[i]);
            let dmu = w;
            let z = eta[i] - offset[i] + (y[i] - mu[i]) / dmu;
            let row = design.row(i);
            for a in 0..k {
                xtwz[a] += w * row[a] * z;
                for b in 0..=a {
                    xtwx[(a, b)] += w * row[a] * row[b];
                }
            }
        }
        for a in 0..k {
            for b in 0..a {
                xtwx[(b, a)] = xtwx[(a, b)];
            }
        }
        if xtwx.as_slice().iter().any(|v| !v.is_finite()) || xtwz.iter().any(|v| !v.is_finite()) {
            return Ok(IrlsOutcome { coef, deviance, iterations: iteration, converged: false });
        }
        let mut new_coef = match Cholesky::factor(&xtwx, 1e-14) {
            Ok(ch) => ch.solve(&xtwz),
            Err(_) => return Ok(IrlsOutcome { coef, deviance, iterations: iteration, converged: false }),
        };
        if new_coef.iter().any(|c| !c.is_finite()) {
            return Ok(IrlsOutcome { coef, deviance, iterations: iteration, converged: false });
        }
        // Halve the step while the deviance is non-finite or rises; a far-off
        // start can otherwise overflow the exponential.
        let mut new_eta = linear(&new_coef);
        let mut new_mu: Vec<f64> = new_eta.iter().map(|&e| family.mean(e)).collect();
        let mut new_dev = family.deviance(y, &new_mu);
        let mut halvings = 0;
        while !(new_dev.is_finite() && new_dev <= deviance * (1.0 + 1e-12) + 1e-300) && halvings < 60 {
            for (c, old) in new_coef.iter_mut().zip(&coef) {
                *c = 0.5 * (*c + old);
            }
            new_eta = linear(&new_coef);
            new_mu = new_eta.iter().map(|&e| family.mean(e)).collect();
            new_dev = family.deviance(y, &new_mu);
            halvings += 1;
        }
        if !new_dev.is_finite() {
            return Ok(IrlsOutcome { coef, deviance, iterations: iteration, converged: false });
        }
        let step = new_coef
            .iter()
            .zip(&coef)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        coef = new_coef;
        eta = new_eta;
        mu = new_mu;
        let rel = (new_dev - deviance).abs() / (new_dev.abs() + 0.1);
        deviance = new_dev;
        if rel < IRLS_DEVIANCE_TOL && step < IRLS_COEF_TOL {
            return Ok(IrlsOutcome { coef, deviance, iterations: iteration, converged: true });
        }
    }
    Ok(IrlsOutcome { coef, deviance, iterations: IRLS_MAX_ITERATIONS, converged: false })
}

/// Fitted Poisson regression with a fixed offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonFit {
    pub intercept: f64,
    pub slope: Option<f64>,
    pub deviance: f64,
    pub iterations: usize,
}

/// Poisson regression `log E[y] = offset + a (+ b x)` by IRLS.
pub fn poisson_offset_glm(y: &[f64], x: Option<&[f64]>, offset: &[f64]) -> Result<PoissonFit> {
    let n = match x {
        Some(x) => same_len("poisson_offset_glm", &[y.len(), x.len(), offset.len()])?,
        None => same_len("poisson_offset_glm", &[y.len(), offset.len()])?,
    };
    if y.iter().any(|&v| !(v >= 0.0) || v.fract() != 0.0) {
        return Err(MetricsError::NonFinite("y must be non-negative counts"));
    }
    if offset.iter().chain(x.unwrap_or(&[])).any(|v| !v.is_finite()) {
        return Err(MetricsError::NonFinite("poisson_offset_glm"));
    }
    let total: f64 = y.iter().sum();
    if total == 0.0 {
        return Err(MetricsError::AllZeroOutcomes);
    }
    let k = if x.is_some() { 2 } else { 1 };
    let mut design = Matrix::zeros(n, k);
    for i in 0..n {
        design[(i, 0)] = 1.0;
        if let Some(x) = x {
            design[(i, 1)] = x[i];
        }
    }
    let mut start = vec![0.0; k];
    start[0] = (total / n as f64 + 1e-8).ln();
    let out = irls(Family::Poisson, &design, y, offset, start)?;
    if !out.converged {
        return Err(MetricsError::NonConvergence(format!(
            "Poisson IRLS stopped after {} iterations",
            out.iterations
        )));
    }
    Ok(PoissonFit {
        intercept: out.coef[0],
        slope: x.map(|_| out.coef[1]),
        deviance: out.deviance,
        iterations: out.iterations,
    })
}

/// Positions that enter the Poisson likelihood. A censored subject with zero
/// expected events contributes exactly nothing and is skipped; an event with
/// zero expectation makes the likelihood degenerate.
fn poisson_rows(expected: &[f64], status: &[f64]) -> Result<Vec<usize>> {
    let mut keep = Vec::with_capacity(expected.len());
    for (i, (&e, &s)) in expected.iter().zip(status).enumerate() {
        if !e.is_finite() || e < 0.0 || (e == 0.0 && s != 0.0) {
            return Err(MetricsError::ZeroExpected);
        }
        if e > 0.0 {
            keep.push(i);
        }
    }
    if keep.is_empty() {
        return Err(MetricsError::ZeroExpected);
    }
    Ok(keep)
}

fn pick(v: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| v[i]).collect()
}

/// Intercept of `status ~ offset(log expected)`; 0 is ideal.
pub fn calibration_in_the_large(expected: &[f64], status: &[f64]) -> Result<f64> {
    same_len("calibration_in_the_large", &[expected.len(), status.len()])?;
    check_status(status)?;
    let keep = poisson_rows(expected, status)?;
    let offset: Vec<f64> = keep.iter().map(|&i| expected[i].ln()).collect();
    Ok(poisson_offset_glm(&pick(status, &keep), None, &offset)?.intercept)
}

/// `log(Σ status / Σ expected)`, the closed form of
/// [`calibration_in_the_large`].
pub fn calibration_in_the_large_closed_form(expected: &[f64], status: &[f64]) -> Result<f64> {
    same_len("calibration_in_the_large", &[expected.len(), status.len()])?;
    check_status(status)?;
    poisson_rows(expected, status)?;
    let o: f64 = status.iter().sum();
    if o == 0.0 {
        return Err(MetricsError::AllZeroOutcomes);
    }
    Ok((o / expected.iter().sum::<f64>()).ln())
}

/// Coefficient of the centered linear predictor in
/// `status ~ lp_c + offset(log(expected) - lp)`; 1 is ideal.
pub fn calibration_slope(lp: &[f64], expected: &[f64], status: &[f64]) -> Result<f64> {
    same_len("calibration_slope", &[lp.len(), expected.len(), status.len()])?;
    check_status(status)?;
    if lp.iter().any(|v| !v.is_finite()) {
        return Err(MetricsError::NonFinite("lp"));
    }
    let keep = poisson_rows(expected, status)?;
    let lp = pick(lp, &keep);
    let (lo, hi) = lp
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if lo == hi {
        return Err(MetricsError::DegenerateLP);
    }
    let mean = lp.iter().sum::<f64>() / lp.len() as f64;
    let lp_c: Vec<f64> = lp.iter().map(|v| v - mean).collect();
    let logbase: Vec<f64> = keep.iter().zip(&lp).map(|(&i, l)| expected[i].ln() - l).collect();
    let fit = poisson_offset_glm(&pick(status, &keep), Some(&lp_c), &logbase)?;
    Ok(fit.slope.expect("slope requested"))
}

/// `Σ expected / Σ status` (E/O).
pub fn oe_ratio(expected: &[f64], status: &[f64]) -> Result<f64> {
    same_len("oe_ratio", &[expected.len(), status.len()])?;
    check_status(status)?;
    let o: f64 = status.iter().sum();
    if o == 0.0 {
        return Err(MetricsError::AllZeroOutcomes);
    }
    Ok(expected.iter().sum::<f64>() / o)
}

/// E/O within tertiles of the linear predictor (lowest first). A tertile
/// without events reports `None`.
pub fn sequential_oe(lp: &[f64], expected: &[f64], status: &[f64]) -> Result<Vec<Option<f64>>> {
    let n = same_len("sequential_oe", &[lp.len(), expected.len(), status.len()])?;
    check_status(status)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| lp[a].total_cmp(&lp[b]));
    Ok((0..3)
        .map(|k| {
            let part = &order[k * n / 3..(k + 1) * n / 3];
            let o: f64 = part.iter().map(|&i| status[i]).sum();
            let e: f64 = part.iter().map(|&i| expected[i]).sum();
            (o > 0.0).then(|| e / o)
        })
        .collect())
}

/// Product-limit survival estimate at `t_eval`.
pub fn kaplan_meier(time: &[f64], status: &[f64], t_eval: f64) -> Result<f64> {
    let n = same_len("kaplan_meier", &[time.len(), status.len()])?;
    check_status(status)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| time[a].total_cmp(&time[b]));
    let mut surv = 1.0;
    let mut at_risk = n as f64;
    let mut i = 0;
    while i < n && time[order[i]] <= t_eval {
        let t = time[order[i]];
        let mut deaths = 0.0;
        let mut leaving = 0.0;
        while i < n && time[order[i]] == t {
            deaths += status[order[i]];
            leaving += 1.0;
            i += 1;
        }
        if deaths > 0.0 {
            surv *= 1.0 - deaths / at_risk;
        }
        at_risk -= leaving;
    }
    Ok(surv)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationGroup {
    pub mean_predicted_risk: f64,
    pub km_observed_risk: f64,
    pub n_group: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedCalibration {
    pub groups: Vec<CalibrationGroup>,
    pub horizon_days: f64,
    pub g: usize,
}

impl GroupedCalibration {
    pub fn write_csv<W: Write>(&self, writer: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["group", "n", "mean_predicted_risk", "km_observed_risk"])?;
        for (k, grp) in self.groups.iter().enumerate() {
            w.write_record([
                (k + 1).to_string(),
                grp.n_group.to_string(),
                grp.mean_predicted_risk.to_string(),
                grp.km_observed_risk.to_string(),
            ])?;
        }
        w.flush()
    }
}

/// Splits subjects into `g` equal-count groups by predicted risk (stable, so
/// ties keep input order) and compares mean predicted risk with the
/// Kaplan-Meier risk at the horizon.
pub fn grouped_km_calibration(
    risk: &[f64],
    time: &[f64],
    status: &[f64],
    g: usize,
    horizon_days: f64,
) -> Result<GroupedCalibration> {
    let n = same_len("grouped_km_calibration", &[risk.len(), time.len(), status.len()])?;
    check_status(status)?;
    if g < 2 || n < g {
        return Err(MetricsError::TooFewSubjects { n, g });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| risk[a].total_cmp(&risk[b]));
    let mut groups = Vec::with_capacity(g);
    for k in 0..g {
        let part = &order[k * n / g..(k + 1) * n / g];
        let t: Vec<f64> = part.iter().map(|&i| time[i]).collect();
        let s: Vec<f64> = part.iter().map(|&i| status[i]).collect();
        let mean = part.iter().map(|&i| risk[i]).sum::<f64>() / part.len() as f64;
        groups.push(CalibrationGroup {
            mean_predicted_risk: mean,
            km_observed_risk: 1.0 - kaplan_meier(&t, &s, horizon_days)?,
            n_group: part.len(),
        });
    }
    Ok(GroupedCalibration { groups, horizon_days, g })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionCurve {
    pub thresholds: Vec<f64>,
    pub nb_model: Vec<f64>,
    pub nb_all: Vec<f64>,
    pub nb_none: Vec<f64>,
}

impl DecisionCurve {
    pub fn write_csv<W: Write>(&self, writer: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["threshold", "nb_model", "nb_all", "nb_none"])?;
        for i in 0..self.thresholds.len() {
            w.write_record([
                self.thresholds[i].to_string(),
                self.nb_model[i].to_string(),
                self.nb_all[i].to_string(),
                self.nb_none[i].to_string(),
            ])?;
        }
        w.flush()
    }
}

/// 0.01, 0.02, ..., 0.50.
pub fn default_thresholds() -> Vec<f64> {
    (1..=50).map(|k| k as f64 / 100.0).collect()
}

/// Net benefit of treating subjects whose risk is at least each threshold.
/// An event is `status == 1` with `time <= horizon_days`.
pub fn decision_curve(
    risk: &[f64],
    time: &[f64],
    status: &[f64],
    thresholds: &[f64],
    horizon_days: f64,
) -> Result<DecisionCurve> {
    let n = same_len("decision_curve", &[risk.len(), time.len(), status.len()])?;
    check_status(status)?;
    if thresholds.is_empty() {
        return Err(MetricsError::EmptyThresholds);
    }
    if thresholds.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
        return Err(MetricsError::InvalidThresholds("thresholds must lie in (0, 1)".into()));
    }
    if thresholds.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(MetricsError::InvalidThresholds("thresholds must strictly increase".into()));
    }
    let event: Vec<bool> = (0..n)
        .map(|i| status[i] == 1.0 && time[i] <= horizon_days)
        .collect();
    let nf = n as f64;
    let events = event.iter().filter(|&&e| e).count() as f64;
    let mut curve = DecisionCurve {
        thresholds: thresholds.to_vec(),
        nb_model: Vec::with_capacity(thresholds.len()),
        nb_all: Vec::with_capacity(thresholds.len()),
        nb_none: vec![0.0; thresholds.len()],
    };
    for &pt in thresholds {
        let odds = pt / (1.0 - pt);
        let (mut tp, mut fp) = (0.0, 0.0);
        for i in 0..n {
            if risk[i] >= pt {
                if event[i] {
                    tp += 1.0;
                } else {
                    fp += 1.0;
                }
            }
        }
        curve.nb_model.push(tp / nf - fp / nf * odds);
        curve.nb_all.push(events / nf - (nf - events) / nf * odds);
    }
    Ok(curve)
}

/// Area under the ROC curve of `score` against the binary `label`, by the
/// Mann-Whitney statistic with ties counted one half.
pub fn auc(score: &[f64], label: &[bool]) -> Result<f64> {
    let n = same_len("auc", &[score.len(), label.len()])?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| score[a].total_cmp(&score[b]));
    let n_pos = label.iter().filter(|&&l| l).count() as f64;
    let n_neg = n as f64 - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        return Err(MetricsError::InsufficientData { needed: 1, actual: 0 });
    }
    // Count (pos, neg) pairs with pos scoring higher, ties one half.
    let mut wins = 0.0;
    let mut neg_below = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && score[order[j]].total_cmp(&score[order[i]]) == Ordering::Equal {
            j += 1;
        }
        let pos = order[i..j].iter().filter(|&&k| label[k]).count() as f64;
        let neg = (j - i) as f64 - pos;
        wins += pos * neg_below + 0.5 * pos * neg;
        neg_below += neg;
        i = j;
    }
    Ok(wins / (n_pos * n_neg))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MembershipC {
    pub c: f64,
    /// The logistic fit separated the two samples; `c` is reported as 1.
    pub separated: bool,
    pub n_a: usize,
    pub n_b: usize,
}

/// How well the common variables tell the two samples apart: AUC of a
/// logistic regression of sample membership.
pub fn membership_c(data_a: &Dataset, data_b: &Dataset, common_vars: &[String]) -> Result<MembershipC> {
    let (na, nb) = (data_a.n_rows(), data_b.n_rows());
    if na + nb < 20 || na == 0 || nb == 0 {
        return Err(MetricsError::InsufficientData { needed: 20, actual: na + nb });
    }
    let k = common_vars.len() + 1;
    let n = na + nb;
    let mut design = Matrix::zeros(n, k);
    for (j, name) in common_vars.iter().enumerate() {
        let ca = data_a
            .schema()
            .index_of(name)
            .ok_or_else(|| MetricsError::UnknownColumn(name.clone()))?;
        let cb = data_b
            .schema()
            .index_of(name)
            .ok_or_else(|| MetricsError::UnknownColumn(name.clone()))?;
        let col: Vec<f64> = (0..na)
            .map(|i| data_a.value(i, ca))
            .chain((0..nb).map(|i| data_b.value(i, cb)))
            .collect();
        let mean = col.iter().sum::<f64>() / n as f64;
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        let sd = if sd > 0.0 { sd } else { 1.0 };
        for (i, v) in col.iter().enumerate() {
            design[(i, j + 1)] = (v - mean) / sd;
        }
    }
    for i in 0..n {
        design[(i, 0)] = 1.0;
    }
    let y: Vec<f64> = (0..n).map(|i| if i < na { 0.0 } else { 1.0 }).collect();
    let label: Vec<bool> = y.iter().map(|&v| v == 1.0).collect();
    let mut start = vec![0.0; k];
    let p = nb as f64 / n as f64;
    start[0] = (p / (1.0 - p)).ln();
    let out = irls(Family::Binomial, &design, &y, &vec![0.0; n], start)?;
    if !out.converged {
        return Ok(MembershipC { c: 1.0, separated: true, n_a: na, n_b: nb });
    }
    let score: Vec<f64> = (0..n)
        .map(|i| design.row(i).iter().zip(&out.coef).map(|(a, b)| a * b).sum())
        .collect();
    let c = auc(&score, &label)?;
    Ok(MembershipC { c, separated: c == 1.0, n_a: na, n_b: nb })
}

/// Performance of one imputation method in one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: usize,
    pub mse_lp: f64,
    pub c_index: f64,
    pub citl: f64,
    /// `None` when the linear predictor has no spread.
    pub cal_slope: Option<f64>,
    /// Σ expected / Σ observed.
    pub eo: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seq_oe: Option<Vec<Option<f64>>>,
}

/// Validation rows for one method: the reference and imputed linear
/// predictors, expected events and observed outcome.
#[derive(Debug, Clone, Copy)]
pub struct EvaluationInput<'a> {
    pub lp_ref: &'a [f64],
    pub lp_est: &'a [f64],
    pub expected: &'a [f64],
    pub time: &'a [f64],
    pub status: &'a [f64],
}

pub fn evaluate(input: EvaluationInput<'_>) -> Result<MetricsReport> {
    let n = same_len(
        "evaluate",
        &[
            input.lp_ref.len(),
            input.lp_est.len(),
            input.expected.len(),
            input.time.len(),
            input.status.len(),
        ],
    )?;
    let cal_slope = match calibration_slope(input.lp_est, input.expected, input.status) {
        Ok(s) => Some(s),
        Err(MetricsError::DegenerateLP) => None,
        Err(e) => return Err(e),
    };
    Ok(MetricsReport {
        n,
        mse_lp: mse_lp(input.lp_ref, input.lp_est)?,
        c_index: concordance(input.lp_est, input.time, input.status)?,
        citl: calibration_in_the_large(input.expected, input.status)?,
        cal_slope,
        eo: oe_ratio(input.expected, input.status)?,
        seq_oe: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_examples() {
        assert_eq!(mse_lp(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mse_lp(&[0.0, 0.0], &[1.0, -1.0]).unwrap(), 1.0);
        assert_eq!(mse_lp(&[2.0], &[0.0]).unwrap(), 4.0);
        assert!(matches!(mse_lp(&[1.0], &[1.0, 2.0]), Err(MetricsError::LengthMismatch(_))));
        assert_eq!(mse_lp(&[], &[]), Err(MetricsError::EmptyInput));
    }

    #[test]
    fn concordance_examples() {
        let t = [1.0, 2.0, 3.0];
        let s = [1.0, 1.0, 1.0];
        assert_eq!(concordance(&[3.0, 2.0, 1.0], &t, &s).unwrap(), 1.0);
        assert_eq!(concordance(&[5.0, 5.0, 5.0], &t, &s).unwrap(), 0.5);
        assert_eq!(concordance(&[1.0, 3.0, 2.0], &t, &s).unwrap(), 1.0 / 3.0);
        assert_eq!(
            concordance(&[1.0, 2.0], &[1.0, 2.0], &[0.0, 0.0]),
            Err(MetricsError::NoComparablePairs)
        );
    }

    #[test]
    fn concordance_tied_times() {
        // equal times: comparable only with exactly one event
        let c = concordance_counts(&[2.0, 1.0, 0.0], &[4.0, 4.0, 4.0], &[1.0, 0.0, 1.0]).unwrap();
        assert_eq!(c, ConcordanceCounts { concordant: 1, discordant: 1, tied: 0 });
    }

    #[test]
    fn poisson_examples() {
        let f = poisson_offset_glm(&[1.0, 1.0], None, &[0.0, 0.0]).unwrap();
        assert!(f.intercept.abs() < 1e-12);
        let l2 = 2f64.ln();
        let f = poisson_offset_glm(&[2.0, 2.0], None, &[l2, l2]).unwrap();
        assert!(f.intercept.abs() < 1e-12);
        let y: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect();
        let err = poisson_offset_glm(&y, Some(&y), &vec![0.0; 100]).unwrap_err();
        assert!(matches!(err, MetricsError::NonConvergence(_)));
        assert_eq!(
            poisson_offset_glm(&[0.0, 0.0], None, &[0.0, 0.0]),
            Err(MetricsError::AllZeroOutcomes)
        );
    }

    #[test]
    fn citl_examples() {
        assert!(calibration_in_the_large(&[0.5, 0.5], &[1.0, 0.0]).unwrap().abs() < 1e-12);
        let v = calibration_in_the_large(&[1.0, 1.0], &[1.0, 0.0]).unwrap();
        assert!((v - 0.5f64.ln()).abs() < 1e-10);
        let v = calibration_in_the_large(&[0.25, 0.25], &[1.0, 0.0]).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-10);
        assert_eq!(
            calibration_in_the_large(&[0.0, 1.0], &[1.0, 0.0]),
            Err(MetricsError::ZeroExpected)
        );
    }

    #[test]
    fn censored_zero_expectation_is_skipped() {
        let with = calibration_in_the_large(&[0.0, 0.5, 0.5], &[0.0, 1.0, 0.0]).unwrap();
        let without = calibration_in_the_large(&[0.5, 0.5], &[1.0, 0.0]).unwrap();
        assert_eq!(with, without);
        assert_eq!(
            calibration_in_the_large(&[0.0, 0.5], &[1.0, 0.0]),
            Err(MetricsError::ZeroExpected)
        );
    }

    #[test]
    fn slope_degenerate_lp() {
        assert_eq!(
            calibration_slope(&[1.0, 1.0], &[0.5, 0.5], &[1.0, 0.0]),
            Err(MetricsError::DegenerateLP)
        );
    }

    #[test]
    fn oe_examples() {
        assert_eq!(oe_ratio(&[0.5, 0.5], &[1.0, 0.0]).unwrap(), 1.0);
        assert_eq!(oe_ratio(&[2.0, 2.0], &[1.0, 1.0]).unwrap(), 2.0);
        assert_eq!(oe_ratio(&[0.5], &[1.0]).unwrap(), 0.5);
    }

    #[test]
    fn km_examples() {
        assert_eq!(kaplan_meier(&[1.0, 2.0], &[0.0, 0.0], 10.0).unwrap(), 1.0);
        assert_eq!(kaplan_meier(&[5.0], &[1.0], 10.0).unwrap(), 0.0);
        let s = kaplan_meier(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0], 2.0).unwrap();
        assert!((s - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn grouped_calibration_sizes() {
        let risk = [0.1; 7];
        let time = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
        let status = [1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0];
        let gc = grouped_km_calibration(&risk, &time, &status, 3, 10.0).unwrap();
        let sizes: Vec<usize> = gc.groups.iter().map(|g| g.n_group).collect();
        assert_eq!(sizes, vec![2, 2, 3]);
        let gc = grouped_km_calibration(&risk, &time, &status, 7, 10.0).unwrap();
        assert!(gc.groups.iter().all(|g| g.km_observed_risk == 0.0 || g.km_observed_risk == 1.0));
        assert_eq!(
            grouped_km_calibration(&risk, &time, &status, 8, 10.0),
            Err(MetricsError::TooFewSubjects { n: 7, g: 8 })
        );
    }

    #[test]
    fn decision_curve_examples() {
        let status = [1.0, 0.0, 0.0, 0.0, 0.0];
        let time = [10.0; 5];
        let dc = decision_curve(&status, &time, &status, &[0.2], 3650.0).unwrap();
        assert_eq!(dc.nb_none, vec![0.0]);
        assert_eq!(dc.nb_all, vec![0.0]);
        assert_eq!(dc.nb_model, vec![0.2]);
        assert_eq!(
            decision_curve(&status, &time, &status, &[], 3650.0),
            Err(MetricsError::EmptyThresholds)
        );
        assert!(decision_curve(&status, &time, &status, &[0.3, 0.2], 3650.0).is_err());
        assert_eq!(default_thresholds().len(), 50);
    }

    #[test]
    fn auc_ties_count_half() {
        assert_eq!(auc(&[1.0, 1.0], &[true, false]).unwrap(), 0.5);
        assert_eq!(auc(&[0.0, 1.0, 2.0], &[false, true, true]).unwrap(), 1.0);
    }
}

//! Per-scenario summaries of simulation rows: one line per imputation method
//! with MSE of the linear predictor (and its percentage difference to mean
//! imputation), C-index, CITL, calibration slope and E/O.
//!
//! The text table prints every number in shortest round-trip form, so
//! [`parse_table`] recovers exactly the report that [`SimulationReport::to_json`]
//! serializes.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imputation::ImputationMethod;
use crate::metrics::MetricsReport;
use crate::simulation::{evaluate, MissingScenario, SimulationError, SimulationRow};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("malformed table, line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Simulation(#[from] SimulationError),
}

impl ReportError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::Parse { .. } => "FormatError",
            Self::Simulation(e) => e.code(),
        }
    }
}

type Result<T> = std::result::Result<T, ReportError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: ImputationMethod,
    /// `100 * (MSE - MSE_M-Imp) / MSE_M-Imp`; negative is better than mean
    /// imputation.
    pub mse_pct_diff: Option<f64>,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub scenario: u32,
    pub missing_vars: Vec<String>,
    pub methods: Vec<MethodSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub scenarios: Vec<ScenarioSummary>,
}

/// Percentage difference of `mse` relative to `mse_mimp`.
pub fn pct_difference(mse: f64, mse_mimp: f64) -> Option<f64> {
    if mse == mse_mimp {
        Some(0.0)
    } else if mse_mimp > 0.0 {
        Some(100.0 * (mse - mse_mimp) / mse_mimp)
    } else {
        None
    }
}

/// Summarizes every (scenario, method) present in `rows`. Scenario names
/// come from `catalog`; unknown ids get an empty variable list.
pub fn summarize(rows: &[SimulationRow], catalog: &[MissingScenario]) -> Result<SimulationReport> {
    let scenarios: BTreeSet<u32> = rows.iter().map(|r| r.scenario).collect();
    let methods: BTreeSet<u8> = rows.iter().map(|r| r.method).collect();
    let mut out = Vec::new();
    for s in scenarios {
        let mut summaries = Vec::new();
        for &m in &methods {
            let method = ImputationMethod::from_id(m).ok_or_else(|| ReportError::Parse {
                line: 0,
                message: format!("unknown method id {m}"),
            })?;
            match evaluate(rows, method, s) {
                Ok(metrics) => summaries.push(MethodSummary {
                    method,
                    mse_pct_diff: None,
                    metrics,
                }),
                Err(SimulationError::EmptySubset { .. }) => {}
                Err(e) => return Err(e.into()),
            }
        }
        let base = summaries
            .iter()
            .find(|m| m.method == ImputationMethod::MeanImputation)
            .map(|m| m.metrics.mse_lp);
        if let Some(b) = base {
            for m in &mut summaries {
                m.mse_pct_diff = pct_difference(m.metrics.mse_lp, b);
            }
        }
        out.push(ScenarioSummary {
            scenario: s,
            missing_vars: catalog
                .iter()
                .find(|c| c.id == s)
                .map(|c| c.missing_vars.clone())
                .unwrap_or_default(),
            methods: summaries,
        });
    }
    Ok(SimulationReport { scenarios: out })
}

const COLUMNS: [&str; 10] = [
    "scenario",
    "method",
    "n",
    "mse_lp",
    "mse_pct_diff",
    "c_index",
    "citl",
    "cal_slope",
    "eo",
    "missing",
];

fn num(v: f64, digits: Option<usize>) -> String {
    match digits {
        Some(d) => format!("{v:.d$}"),
        None => format!("{v:?}"),
    }
}

fn opt(v: Option<f64>, digits: Option<usize>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| num(x, digits))
}

impl SimulationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Aligned text table. With `digits`, numbers are rounded for reading
    /// and the table no longer parses back exactly.
    pub fn render_table(&self, digits: Option<usize>) -> String {
        let mut lines: Vec<Vec<String>> = vec![COLUMNS.iter().map(|c| c.to_string()).collect()];
        for s in &self.scenarios {
            let missing = if s.missing_vars.is_empty() {
                "-".to_string()
            } else {
                s.missing_vars.join(",")
            };
            for m in &s.methods {
                let r = &m.metrics;
                lines.push(vec![
                    s.scenario.to_string(),
                    m.method.label().to_string(),
                    r.n.to_string(),
                    num(r.mse_lp, digits),
                    opt(m.mse_pct_diff, digits.map(|d| d.min(2))),
                    num(r.c_index, digits),
                    num(r.citl, digits),
                    opt(r.cal_slope, digits),
                    num(r.eo, digits),
                    missing.clone(),
                ]);
            }
        }
        let widths: Vec<usize> = (0..COLUMNS.len())
            .map(|c| lines.iter().map(|l| l[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for l in &lines {
            let cells: Vec<String> = l
                .iter()
                .zip(&widths)
                .map(|(cell, w)| format!("{cell:<w$}"))
                .collect();
            let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        }
        out
    }
}

/// Parses a table written by [`SimulationReport::render_table`]. Lines
/// starting with `#` are skipped.
pub fn parse_table(text: &str) -> Result<SimulationReport> {
    let mut scenarios: Vec<ScenarioSummary> = Vec::new();
    let mut header_seen = false;
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| ReportError::Parse { line: no + 1, message };
        let cells: Vec<&str> = line.split_whitespace().collect();
        if !header_seen {
            if cells != COLUMNS {
                return Err(err(format!("expected header {COLUMNS:?}")));
            }
            header_seen = true;
            continue;
        }
        if cells.len() != COLUMNS.len() {
            return Err(err(format!("expected {} cells, found {}", COLUMNS.len(), cells.len())));
        }
        let f = |i: usize| -> Result<f64> {
            cells[i]
                .parse::<f64>()
                .map_err(|e| err(format!("{}: {e}", COLUMNS[i])))
        };
        let of = |i: usize| -> Result<Option<f64>> {
            if cells[i] == "NA" {
                Ok(None)
            } else {
                f(i).map(Some)
            }
        };
        let scenario: u32 = cells[0].parse().map_err(|_| err("scenario".into()))?;
        let method = ImputationMethod::ALL
            .into_iter()
            .find(|m| m.label() == cells[1])
            .ok_or_else(|| err(format!("unknown method `{}`", cells[1])))?;
        let summary = MethodSummary {
            method,
            mse_pct_diff: of(4)?,
            metrics: MetricsReport {
                n: cells[2].parse().map_err(|_| err("n".into()))?,
                mse_lp: f(3)?,
                c_index: f(5)?,
                citl: f(6)?,
                cal_slope: of(7)?,
                eo: f(8)?,
                seq_oe: None,
            },
        };
        let missing_vars: Vec<String> = if cells[9] == "-" {
            Vec::new()
        } else {
            cells[9].split(',').map(str::to_string).collect()
        };
        match scenarios.last_mut() {
            Some(s) if s.scenario == scenario => s.methods.push(summary),
            _ => scenarios.push(ScenarioSummary {
                scenario,
                missing_vars,
                methods: vec![summary],
            }),
        }
    }
    if !header_seen {
        return Err(ReportError::Parse {
            line: 0,
            message: "no header".into(),
        });
    }
    Ok(SimulationReport { scenarios })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: u8, rowref: u64, lp_est: f64) -> SimulationRow {
        let lp_ref = (rowref as f64 * 0.37).sin();
        SimulationRow {
            lp_ref,
            lp_est,
            expected: 0.3 * lp_est.exp(),
            time: 1.0 + rowref as f64,
            status: u8::from(rowref % 2 == 0),
            scenario: 5,
            method,
            rowref,
        }
    }

    #[test]
    fn identical_methods_have_zero_difference() {
        let rows: Vec<SimulationRow> = (1..=3u8)
            .flat_map(|m| (0..20).map(move |i| row(m, i, (i as f64 * 0.2).cos())))
            .collect();
        let rep = summarize(&rows, &crate::simulation::default_scenarios()).unwrap();
        for m in &rep.scenarios[0].methods {
            assert_eq!(m.mse_pct_diff, Some(0.0));
        }
        assert_eq!(rep.scenarios[0].missing_vars.len(), 5);
    }

    #[test]
    fn table_parses_back_to_report() {
        let rows: Vec<SimulationRow> = (1..=3u8)
            .flat_map(|m| (0..20).map(move |i| row(m, i, (i as f64 * 0.2 * m as f64).cos())))
            .collect();
        let rep = summarize(&rows, &crate::simulation::default_scenarios()).unwrap();
        let text = format!("# seed 7\n{}", rep.render_table(None));
        assert_eq!(parse_table(&text).unwrap(), rep);
        let json = SimulationReport::from_json(&rep.to_json()).unwrap();
        assert_eq!(json, rep);
    }

    #[test]
    fn pct_difference_sign() {
        let d = pct_difference(0.1014, 0.1300).unwrap();
        assert!(d < 0.0);
        assert_eq!(pct_difference(0.2, 0.2), Some(0.0));
    }
}

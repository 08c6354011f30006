//! Variable schemas, complete reference datasets, and the population
//! characteristics (mean vector, covariance matrix, sample size) that drive
//! every imputation.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{semidefinite_factor, Matrix};

/// Current version of the population-characteristics JSON document.
pub const POPCHAR_FORMAT_VERSION: u32 = 1;

const SYMMETRY_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum PopulationError {
    #[error("variable `{0}` is constant; its covariance would be singular")]
    ZeroVariance(String),
    #[error("outcome variable `{0}` cannot be part of population characteristics")]
    OutcomeIncluded(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("column `{0}` is required by the schema but absent from the file")]
    MissingColumn(String),
    #[error("need at least {needed} rows, got {actual}")]
    TooFewRows { needed: usize, actual: usize },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("sample size {m} must be strictly between 0 and {n}")]
    SampleTooLarge { m: usize, n: usize },
    #[error("malformed population characteristics: {0}")]
    FormatError(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("missing cell at row {row}, column `{column}`")]
    MissingCell { row: usize, column: String },
    #[error("cannot parse row {row}, column `{column}`: {message}")]
    ParseError {
        row: usize,
        column: String,
        message: String,
    },
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid population characteristics: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PopulationError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::ZeroVariance(_) => "ZeroVariance",
            Self::OutcomeIncluded(_) => "OutcomeIncluded",
            Self::UnknownColumn(_) => "UnknownColumn",
            Self::MissingColumn(_) => "MissingColumn",
            Self::TooFewRows { .. } => "TooFewRows",
            Self::SchemaMismatch(_) => "SchemaMismatch",
            Self::SampleTooLarge { .. } => "SampleTooLarge",
            Self::FormatError(_) => "FormatError",
            Self::DimensionMismatch(_) => "DimensionMismatch",
            Self::MissingCell { .. } => "MissingCell",
            Self::ParseError { .. } => "ParseError",
            Self::InvalidSchema(_) => "InvalidSchema",
            Self::InvalidDataset(_) => "InvalidDataset",
            Self::Invalid(_) => "ValidationFailed",
            Self::Io(_) => "Io",
        }
    }
}

type Result<T> = std::result::Result<T, PopulationError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableRole {
    Predictor,
    Auxiliary,
    OutcomeTime,
    OutcomeStatus,
}

impl VariableRole {
    pub fn is_outcome(self) -> bool {
        matches!(self, Self::OutcomeTime | Self::OutcomeStatus)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VariableKind,
    pub role: VariableRole,
}

impl Variable {
    pub fn new(name: impl Into<String>, kind: VariableKind, role: VariableRole) -> Self {
        Self {
            name: name.into(),
            kind,
            role,
        }
    }
}

/// Ordered list of variables with unique names and exactly one outcome time
/// and one outcome status column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VariableSchema {
    variables: Vec<Variable>,
}

impl<'de> Deserialize<'de> for VariableSchema {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            variables: Vec<Variable>,
        }
        let raw = Raw::deserialize(d)?;
        VariableSchema::new(raw.variables).map_err(serde::de::Error::custom)
    }
}

impl VariableSchema {
    pub fn new(variables: Vec<Variable>) -> Result<Self> {
        let violations = Self::violations(&variables);
        if violations.is_empty() {
            Ok(Self { variables })
        } else {
            Err(PopulationError::InvalidSchema(violations.join("; ")))
        }
    }

    /// Violated schema invariants of `variables`, by name.
    pub fn violations(variables: &[Variable]) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        for v in variables {
            if v.name.is_empty() {
                out.push("names_nonempty: empty variable name".to_string());
            }
            if !seen.insert(v.name.as_str()) {
                out.push(format!("names_unique: duplicate variable `{}`", v.name));
            }
        }
        let times = variables
            .iter()
            .filter(|v| v.role == VariableRole::OutcomeTime)
            .count();
        let statuses = variables
            .iter()
            .filter(|v| v.role == VariableRole::OutcomeStatus)
            .count();
        if times != 1 {
            out.push(format!(
                "single_outcome_time: expected one outcome_time variable, found {times}"
            ));
        }
        if statuses != 1 {
            out.push(format!(
                "single_outcome_status: expected one outcome_status variable, found {statuses}"
            ));
        }
        out
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&Variable> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn names(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.name.clone()).collect()
    }

    pub fn names_with_role(&self, role: VariableRole) -> Vec<String> {
        self.variables
            .iter()
            .filter(|v| v.role == role)
            .map(|v| v.name.clone())
            .collect()
    }

    pub fn predictors(&self) -> Vec<String> {
        self.names_with_role(VariableRole::Predictor)
    }

    pub fn auxiliaries(&self) -> Vec<String> {
        self.names_with_role(VariableRole::Auxiliary)
    }

    /// Non-outcome variables (predictors and auxiliaries) in schema order.
    pub fn covariates(&self) -> Vec<String> {
        self.variables
            .iter()
            .filter(|v| !v.role.is_outcome())
            .map(|v| v.name.clone())
            .collect()
    }

    pub fn time_name(&self) -> &str {
        &self
            .variables
            .iter()
            .find(|v| v.role == VariableRole::OutcomeTime)
            .expect("validated schema")
            .name
    }

    pub fn status_name(&self) -> &str {
        &self
            .variables
            .iter()
            .find(|v| v.role == VariableRole::OutcomeStatus)
            .expect("validated schema")
            .name
    }

    /// Sub-schema keeping only the named variables, in this schema's order.
    pub fn restrict(&self, keep: &HashSet<&str>) -> Result<Self> {
        Self::new(
            self.variables
                .iter()
                .filter(|v| keep.contains(v.name.as_str()))
                .cloned()
                .collect(),
        )
    }
}

/// A complete (no missing cells) dataset with stable row identifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: VariableSchema,
    values: Vec<f64>,
    row_ids: Vec<u64>,
}

impl Dataset {
    /// `rows` are in schema column order.
    pub fn new(schema: VariableSchema, rows: Vec<Vec<f64>>, row_ids: Vec<u64>) -> Result<Self> {
        if rows.len() != row_ids.len() {
            return Err(PopulationError::InvalidDataset(format!(
                "{} rows but {} row ids",
                rows.len(),
                row_ids.len()
            )));
        }
        let p = schema.len();
        let mut values = Vec::with_capacity(rows.len() * p);
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != p {
                return Err(PopulationError::InvalidDataset(format!(
                    "row {r} has {} values, schema has {p}",
                    row.len()
                )));
            }
            values.extend(row);
        }
        let ds = Self {
            schema,
            values,
            row_ids,
        };
        ds.check_cells()?;
        Ok(ds)
    }

    pub fn with_sequential_ids(schema: VariableSchema, rows: Vec<Vec<f64>>) -> Result<Self> {
        let ids = (0..rows.len() as u64).collect();
        Self::new(schema, rows, ids)
    }

    fn check_cells(&self) -> Result<()> {
        let p = self.schema.len();
        for r in 0..self.n_rows() {
            for (c, var) in self.schema.variables().iter().enumerate() {
                let x = self.values[r * p + c];
                if x.is_nan() {
                    return Err(PopulationError::MissingCell {
                        row: r,
                        column: var.name.clone(),
                    });
                }
                let bad = match var.role {
                    VariableRole::OutcomeTime => !(x > 0.0 && x.is_finite()),
                    VariableRole::OutcomeStatus => x != 0.0 && x != 1.0,
                    _ => match var.kind {
                        VariableKind::Binary => x != 0.0 && x != 1.0,
                        VariableKind::Continuous => !x.is_finite(),
                    },
                };
                if bad {
                    return Err(PopulationError::InvalidDataset(format!(
                        "row {r}, column `{}`: value {x} violates its {:?}/{:?} domain",
                        var.name, var.kind, var.role
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn schema(&self) -> &VariableSchema {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn row_ids(&self) -> &[u64] {
        &self.row_ids
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.schema.len();
        &self.values[i * p..(i + 1) * p]
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.schema.len() + col]
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.schema
            .index_of(name)
            .ok_or_else(|| PopulationError::UnknownColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let c = self.column_index(name)?;
        Ok((0..self.n_rows()).map(|r| self.value(r, c)).collect())
    }

    pub fn times(&self) -> Vec<f64> {
        self.column(self.schema.time_name()).expect("validated schema")
    }

    pub fn statuses(&self) -> Vec<f64> {
        self.column(self.schema.status_name()).expect("validated schema")
    }

    /// New dataset holding the given rows (by position), in the given order.
    pub fn select_rows(&self, positions: &[usize]) -> Dataset {
        let p = self.schema.len();
        let mut values = Vec::with_capacity(positions.len() * p);
        let mut row_ids = Vec::with_capacity(positions.len());
        for &i in positions {
            values.extend_from_slice(self.row(i));
            row_ids.push(self.row_ids[i]);
        }
        Dataset {
            schema: self.schema.clone(),
            values,
            row_ids,
        }
    }

    /// Keeps only the named columns (schema order is preserved).
    pub fn restrict_columns(&self, keep: &HashSet<&str>) -> Result<Dataset> {
        let schema = self.schema.restrict(keep)?;
        let cols: Vec<usize> = schema
            .variables()
            .iter()
            .map(|v| self.schema.index_of(&v.name).expect("subset"))
            .collect();
        let mut values = Vec::with_capacity(self.n_rows() * cols.len());
        for r in 0..self.n_rows() {
            let row = self.row(r);
            values.extend(cols.iter().map(|&c| row[c]));
        }
        Ok(Dataset {
            schema,
            values,
            row_ids: self.row_ids.clone(),
        })
    }

    /// Writes the dataset as CSV with a header row (row ids are not written).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.schema.variables().iter().map(|v| v.name.as_str()))
            .map_err(csv_io)?;
        for r in 0..self.n_rows() {
            let row: Vec<String> = self
                .schema
                .variables()
                .iter()
                .zip(self.row(r))
                .map(|(v, x)| match (v.kind, v.role) {
                    (VariableKind::Binary, _) | (_, VariableRole::OutcomeStatus) => {
                        format!("{}", *x as i64)
                    }
                    _ => format!("{x:?}"),
                })
                .collect();
            w.write_record(&row).map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

fn csv_io(e: csv::Error) -> PopulationError {
    PopulationError::Io(std::io::Error::other(e.to_string()))
}

/// Mean vector, covariance matrix and source sample size over an ordered set
/// of variables.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationCharacteristics {
    variables: Vec<String>,
    mu: Vec<f64>,
    sigma: Matrix,
    n: u64,
}

impl PopulationCharacteristics {
    /// Validates every invariant; on failure the error lists each violated
    /// invariant by name.
    pub fn new(variables: Vec<String>, mu: Vec<f64>, sigma: Matrix, n: u64) -> Result<Self> {
        let p = variables.len();
        if mu.len() != p || sigma.rows() != p || sigma.cols() != p {
            return Err(PopulationError::DimensionMismatch(format!(
                "{p} variables, mu of length {}, sigma {}x{}",
                mu.len(),
                sigma.rows(),
                sigma.cols()
            )));
        }
        let pc = Self {
            variables,
            mu,
            sigma,
            n,
        };
        let violations = pc.violations();
        if violations.is_empty() {
            Ok(pc)
        } else {
            Err(PopulationError::Invalid(violations))
        }
    }

    /// Names of violated invariants with a short explanation each.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut seen = HashSet::new();
        for v in &self.variables {
            if !seen.insert(v.as_str()) {
                out.push(format!("variables_unique: duplicate variable `{v}`"));
            }
        }
        if self.mu.iter().any(|x| !x.is_finite()) {
            out.push("mu_finite: mu contains a non-finite value".to_string());
        }
        if self.sigma.as_slice().iter().any(|x| !x.is_finite()) {
            out.push("sigma_finite: sigma contains a non-finite value".to_string());
            return out;
        }
        let scale = self
            .sigma
            .as_slice()
            .iter()
            .fold(1.0f64, |m, x| m.max(x.abs()));
        let asym = self.sigma.max_asymmetry();
        if asym > SYMMETRY_TOL * scale {
            out.push(format!(
                "sigma_symmetric: sigma is asymmetric (max |s_ij - s_ji| = {asym:e})"
            ));
        } else if let Err(f) = semidefinite_factor(&self.sigma, PSD_TOL) {
            out.push(format!(
                "sigma_psd: sigma is not positive semidefinite (pivot {} at `{}`)",
                f.pivot, self.variables[f.index]
            ));
        }
        out
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigma(&self) -> &Matrix {
        &self.sigma
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.variables.len()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }

    pub fn mean_of(&self, name: &str) -> Option<f64> {
        self.index_of(name).map(|i| self.mu[i])
    }

    pub fn marginal_sd(&self, name: &str) -> Option<f64> {
        self.index_of(name).map(|i| self.sigma[(i, i)].max(0.0).sqrt())
    }

    /// Characteristics restricted to `names` (in the given order).
    pub fn restrict(&self, names: &[String]) -> Result<Self> {
        let idx = names
            .iter()
            .map(|n| {
                self.index_of(n)
                    .ok_or_else(|| PopulationError::UnknownColumn(n.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            variables: names.to_vec(),
            mu: idx.iter().map(|&i| self.mu[i]).collect(),
            sigma: self.sigma.select(&idx, &idx),
            n: self.n,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&PopcharDocument::from(self)).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: PopcharDocument =
            serde_json::from_str(text).map_err(|e| PopulationError::FormatError(e.to_string()))?;
        doc.try_into()
    }
}

/// The on-disk / on-wire JSON layout of [`PopulationCharacteristics`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PopcharDocument {
    pub version: u32,
    pub variables: Vec<String>,
    pub mu: Vec<f64>,
    /// Row-major: `sigma[i][j]`.
    pub sigma: Vec<Vec<f64>>,
    pub n: u64,
}

impl From<&PopulationCharacteristics> for PopcharDocument {
    fn from(pc: &PopulationCharacteristics) -> Self {
        Self {
            version: POPCHAR_FORMAT_VERSION,
            variables: pc.variables.clone(),
            mu: pc.mu.clone(),
            sigma: pc.sigma.to_rows(),
            n: pc.n,
        }
    }
}

impl TryFrom<PopcharDocument> for PopulationCharacteristics {
    type Error = PopulationError;

    fn try_from(doc: PopcharDocument) -> Result<Self> {
        if doc.version != POPCHAR_FORMAT_VERSION {
            return Err(PopulationError::FormatError(format!(
                "unsupported version {}",
                doc.version
            )));
        }
        let p = doc.variables.len();
        if doc.mu.len() != p {
            return Err(PopulationError::DimensionMismatch(format!(
                "{p} variables but mu has {} entries",
                doc.mu.len()
            )));
        }
        if doc.sigma.len() != p || doc.sigma.iter().any(|r| r.len() != p) {
            let cols = doc.sigma.first().map_or(0, Vec::len);
            return Err(PopulationError::DimensionMismatch(format!(
                "{p} variables but sigma is {}x{cols}",
                doc.sigma.len()
            )));
        }
        if doc.mu.iter().chain(doc.sigma.iter().flatten()).any(|x| !x.is_finite()) {
            return Err(PopulationError::FormatError(
                "non-finite number in mu or sigma".to_string(),
            ));
        }
        PopulationCharacteristics::new(doc.variables, doc.mu, Matrix::from_rows(&doc.sigma), doc.n)
    }
}

fn selected_columns(data: &Dataset, variables: &[String]) -> Result<Vec<usize>> {
    variables
        .iter()
        .map(|name| {
            let var = data
                .schema
                .get(name)
                .ok_or_else(|| PopulationError::UnknownColumn(name.clone()))?;
            if var.role.is_outcome() {
                return Err(PopulationError::OutcomeIncluded(name.clone()));
            }
            Ok(data.schema.index_of(name).expect("present"))
        })
        .collect()
}

fn estimate_over<F>(data: &Dataset, variables: &[String], include: F) -> Result<PopulationCharacteristics>
where
    F: Fn(usize) -> bool,
{
    let cols = selected_columns(data, variables)?;
    let p = cols.len();
    let rows: Vec<usize> = (0..data.n_rows()).filter(|&r| include(r)).collect();
    let n = rows.len();
    if n < 2 {
        return Err(PopulationError::TooFewRows {
            needed: 2,
            actual: n,
        });
    }
    let mut mu = vec![0.0; p];
    for &r in &rows {
        let row = data.row(r);
        for (a, &c) in cols.iter().enumerate() {
            mu[a] += row[c];
        }
    }
    for m in &mut mu {
        *m /= n as f64;
    }
    let mut sigma = Matrix::zeros(p, p);
    let mut dev = vec![0.0; p];
    for &r in &rows {
        let row = data.row(r);
        for (a, &c) in cols.iter().enumerate() {
            dev[a] = row[c] - mu[a];
        }
        for a in 0..p {
            for b in 0..=a {
                sigma[(a, b)] += dev[a] * dev[b];
            }
        }
    }
    let denom = (n - 1) as f64;
    for a in 0..p {
        for b in 0..=a {
            let s = sigma[(a, b)] / denom;
            sigma[(a, b)] = s;
            sigma[(b, a)] = s;
        }
    }
    for (a, &c) in cols.iter().enumerate() {
        let first = data.value(rows[0], c);
        if rows.iter().all(|&r| data.value(r, c) == first) {
            return Err(PopulationError::ZeroVariance(variables[a].clone()));
        }
    }
    // Estimated covariances may be near-singular; only exact constancy is fatal.
    Ok(PopulationCharacteristics {
        variables: variables.to_vec(),
        mu,
        sigma,
        n: n as u64,
    })
}

/// Column means and unbiased (n−1) sample covariance of `variables`.
pub fn estimate_characteristics(
    data: &Dataset,
    variables: &[String],
) -> Result<PopulationCharacteristics> {
    estimate_over(data, variables, |_| true)
}

/// Same as [`estimate_characteristics`] with one row (by position) left out.
pub fn estimate_characteristics_excluding(
    data: &Dataset,
    variables: &[String],
    excluded_row: usize,
) -> Result<PopulationCharacteristics> {
    estimate_over(data, variables, |r| r != excluded_row)
}

/// Stacks `external` on top of `local_sample` over their common columns.
pub fn pool_datasets(external: &Dataset, local_sample: &Dataset) -> Result<Dataset> {
    let local_names: HashMap<&str, &Variable> = local_sample
        .schema
        .variables()
        .iter()
        .map(|v| (v.name.as_str(), v))
        .collect();
    let mut common: HashSet<&str> = HashSet::new();
    for v in external.schema.variables() {
        if let Some(lv) = local_names.get(v.name.as_str()) {
            if lv.role != v.role || lv.kind != v.kind {
                return Err(PopulationError::SchemaMismatch(format!(
                    "variable `{}` is {:?}/{:?} externally but {:?}/{:?} locally",
                    v.name, v.kind, v.role, lv.kind, lv.role
                )));
            }
            common.insert(v.name.as_str());
        }
    }
    let shared_predictors = external
        .schema
        .variables()
        .iter()
        .any(|v| v.role == VariableRole::Predictor && common.contains(v.name.as_str()));
    if !shared_predictors {
        return Err(PopulationError::SchemaMismatch(
            "no common predictor columns".to_string(),
        ));
    }
    let ext = external
        .restrict_columns(&common)
        .map_err(|e| PopulationError::SchemaMismatch(e.to_string()))?;
    let loc = local_sample
        .restrict_columns(&common)
        .map_err(|e| PopulationError::SchemaMismatch(e.to_string()))?;
    let col_map: Vec<usize> = ext
        .schema
        .variables()
        .iter()
        .map(|v| loc.schema.index_of(&v.name).expect("common column"))
        .collect();
    let mut values = ext.values;
    let mut row_ids = ext.row_ids;
    values.reserve(loc.n_rows() * col_map.len());
    for r in 0..loc.n_rows() {
        let row = loc.row(r);
        values.extend(col_map.iter().map(|&c| row[c]));
        row_ids.push(loc.row_ids[r]);
    }
    Ok(Dataset {
        schema: ext.schema,
        values,
        row_ids,
    })
}

/// Draws `m` rows without replacement; returns `(sample, remainder)`, each in
/// the original row order.
pub fn draw_local_sample(data: &Dataset, m: usize, seed: u64) -> Result<(Dataset, Dataset)> {
    let n = data.n_rows();
    if m == 0 || m >= n {
        return Err(PopulationError::SampleTooLarge { m, n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = vec![false; n];
    for i in index::sample(&mut rng, n, m) {
        picked[i] = true;
    }
    let (sample, rest): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| picked[i]);
    Ok((data.select_rows(&sample), data.select_rows(&rest)))
}

/// Writes atomically: a temporary sibling file is written, synced and renamed
/// over the destination.
pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let file_name = path
        .file_name()
        .ok_or_else(|| std::io::Error::other("path has no file name"))?
        .to_string_lossy();
    let tmp = match dir {
        Some(d) => d.join(format!(".{file_name}.tmp{}", std::process::id())),
        None => Path::new(&format!(".{file_name}.tmp{}", std::process::id())).to_path_buf(),
    };
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

pub fn save_characteristics(pc: &PopulationCharacteristics, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), pc.to_json().as_bytes())?;
    Ok(())
}

pub fn load_characteristics(path: impl AsRef<Path>) -> Result<PopulationCharacteristics> {
    let text = fs::read_to_string(path)?;
    PopulationCharacteristics::from_json(&text)
}

pub fn load_schema(path: impl AsRef<Path>) -> Result<VariableSchema> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| PopulationError::InvalidSchema(e.to_string()))
}

/// Reads a complete dataset from CSV. Every schema column must be present;
/// the file may list columns in any order.
pub fn ingest_csv(path: impl AsRef<Path>, schema: &VariableSchema) -> Result<Dataset> {
    ingest_csv_reader(fs::File::open(path)?, schema)
}

pub fn ingest_csv_reader<R: Read>(reader: R, schema: &VariableSchema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(csv_io)?.clone();
    let mut positions = vec![usize::MAX; schema.len()];
    for (i, name) in header.iter().enumerate() {
        let c = schema
            .index_of(name)
            .ok_or_else(|| PopulationError::UnknownColumn(name.to_string()))?;
        positions[c] = i;
    }
    if let Some(c) = positions.iter().position(|&p| p == usize::MAX) {
        return Err(PopulationError::MissingColumn(
            schema.variables()[c].name.clone(),
        ));
    }
    let mut rows = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| PopulationError::ParseError {
            row: r,
            column: String::new(),
            message: e.to_string(),
        })?;
        let mut row = Vec::with_capacity(schema.len());
        for (c, var) in schema.variables().iter().enumerate() {
            let cell = record.get(positions[c]).unwrap_or("");
            if cell.is_empty() || cell.eq_ignore_ascii_case("na") {
                return Err(PopulationError::MissingCell {
                    row: r,
                    column: var.name.clone(),
                });
            }
            let x: f64 = cell.parse().map_err(|e: std::num::ParseFloatError| {
                PopulationError::ParseError {
                    row: r,
                    column: var.name.clone(),
                    message: e.to_string(),
                }
            })?;
            let binary = var.kind == VariableKind::Binary || var.role == VariableRole::OutcomeStatus;
            if binary && x != 0.0 && x != 1.0 {
                return Err(PopulationError::ParseError {
                    row: r,
                    column: var.name.clone(),
                    message: format!("binary column holds {cell}, expected 0 or 1"),
                });
            }
            if !x.is_finite() {
                return Err(PopulationError::ParseError {
                    row: r,
                    column: var.name.clone(),
                    message: format!("non-finite value {cell}"),
                });
            }
            row.push(x);
        }
        rows.push(row);
    }
    Dataset::with_sequential_ids(schema.clone(), rows)
}

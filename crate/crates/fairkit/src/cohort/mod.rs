//! Tabular cohorts: declared schemas, validated data, protected-group
//! indexing, feature encoding, and cross-validation splits.

mod csv_io;
mod encode;
mod folds;

pub use encode::{EncodedMatrix, ImputeStats};
pub use folds::{nested_folds, stratified_kfold, FoldPlan, InnerPlan, NestedPlan};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MISSING_LEVEL: &str = "Missing";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
    Ordinal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Feature,
    Protected,
    Outcome,
    Identifier,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    pub role: Role,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub levels: Vec<String>,
}

impl ColumnSpec {
    pub fn numeric(name: &str, role: Role) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Numeric,
            role,
            levels: Vec::new(),
        }
    }

    pub fn categorical(name: &str, role: Role, levels: &[&str]) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Categorical,
            role,
            levels: levels.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn ordinal(name: &str, role: Role, levels: &[&str]) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Ordinal,
            role,
            levels: levels.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn level_index(&self, value: &str) -> Option<u32> {
        self.levels.iter().position(|l| l == value).map(|i| i as u32)
    }
}

/// Ordered list of column specs; `#[serde(transparent)]`-style wrapper so
/// schema files are just a `columns` table array.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<ColumnSpec>,
}

impl Schema {
    pub fn new(columns: Vec<ColumnSpec>) -> Result<Self> {
        let schema = Self { columns };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for c in &self.columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::DuplicateColumn(c.name.clone()));
            }
        }
        let outcomes: Vec<_> = self
            .columns
            .iter()
            .filter(|c| c.role == Role::Outcome)
            .collect();
        if outcomes.len() != 1 {
            return Err(Error::InvalidSchema(format!(
                "exactly one outcome column required, found {}",
                outcomes.len()
            )));
        }
        if outcomes[0].kind != ColumnKind::Numeric {
            return Err(Error::InvalidSchema(
                "outcome column must be numeric with values in {0, 1}".into(),
            ));
        }
        for c in &self.columns {
            match c.kind {
                ColumnKind::Numeric => {
                    if !c.levels.is_empty() {
                        return Err(Error::InvalidSchema(format!(
                            "numeric column '{}' must not declare levels",
                            c.name
                        )));
                    }
                }
                ColumnKind::Categorical | ColumnKind::Ordinal => {
                    if c.levels.is_empty() {
                        return Err(Error::InvalidSchema(format!(
                            "column '{}' declares no levels",
                            c.name
                        )));
                    }
                }
            }
            if c.role == Role::Protected {
                if c.kind != ColumnKind::Categorical {
                    return Err(Error::InvalidSchema(format!(
                        "protected column '{}' must be categorical",
                        c.name
                    )));
                }
                if c.levels.len() < 2 {
                    return Err(Error::InvalidSchema(format!(
                        "protected column '{}' needs at least 2 levels",
                        c.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn outcome_index(&self) -> usize {
        self.columns
            .iter()
            .position(|c| c.role == Role::Outcome)
            .expect("schema validated")
    }

    pub fn column(&self, name: &str) -> Option<(usize, &ColumnSpec)> {
        self.columns
            .iter()
            .enumerate()
            .find(|(_, c)| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    /// Numeric values; `None` is a missing cell.
    Numeric(Vec<Option<f64>>),
    /// Level indices for categorical/ordinal columns. For categorical
    /// columns missing cells are mapped to an explicit `Missing` level at
    /// load time; for ordinal columns they stay `None` and are imputed at
    /// encode time.
    Categorical(Vec<Option<u32>>),
    /// Raw strings, identifier columns only.
    Text(Vec<String>),
}

impl ColumnData {
    fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical(v) => v.len(),
            ColumnData::Text(v) => v.len(),
        }
    }

    fn gather(&self, rows: &[usize]) -> ColumnData {
        match self {
            ColumnData::Numeric(v) => ColumnData::Numeric(rows.iter().map(|&i| v[i]).collect()),
            ColumnData::Categorical(v) => {
                ColumnData::Categorical(rows.iter().map(|&i| v[i]).collect())
            }
            ColumnData::Text(v) => ColumnData::Text(rows.iter().map(|&i| v[i].clone()).collect()),
        }
    }
}

/// Group membership of every row for one protected attribute, usable
/// independently of the cohort it came from (e.g. after suppression).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupLabels {
    pub attribute: String,
    pub levels: Vec<String>,
    pub assignment: Vec<u32>,
}

impl GroupLabels {
    pub fn n_groups(&self) -> usize {
        self.levels.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    schema: Schema,
    columns: Vec<ColumnData>,
    outcome: Vec<u8>,
    weights: Vec<f64>,
    /// protected column name -> per-level sorted row indices.
    group_index: BTreeMap<String, Vec<Vec<usize>>>,
}

impl Cohort {
    pub fn from_columns(schema: Schema, columns: Vec<ColumnData>) -> Result<Self> {
        schema.validate()?;
        if columns.len() != schema.columns.len() {
            return Err(Error::InvalidCohort(format!(
                "{} columns for a {}-column schema",
                columns.len(),
                schema.columns.len()
            )));
        }
        let n = columns.first().map(ColumnData::len).unwrap_or(0);
        if n == 0 {
            return Err(Error::InvalidCohort("cohort must have n >= 1 rows".into()));
        }
        for (spec, col) in schema.columns.iter().zip(&columns) {
            if col.len() != n {
                return Err(Error::InvalidCohort(format!(
                    "column '{}' has {} rows, expected {n}",
                    spec.name,
                    col.len()
                )));
            }
            match (spec.kind, col) {
                (ColumnKind::Numeric, ColumnData::Numeric(_)) => {}
                (ColumnKind::Categorical | ColumnKind::Ordinal, ColumnData::Categorical(v)) => {
                    for (row, idx) in v.iter().enumerate() {
                        if let Some(i) = idx {
                            if *i as usize >= spec.levels.len() {
                                return Err(Error::BadValue {
                                    column: spec.name.clone(),
                                    row: row + 1,
                                    value: format!("level index {i}"),
                                });
                            }
                        } else if spec.kind == ColumnKind::Categorical {
                            return Err(Error::InvalidCohort(format!(
                                "categorical column '{}' holds an unmapped missing cell",
                                spec.name
                            )));
                        }
                    }
                }
                (_, ColumnData::Text(_)) if spec.role == Role::Identifier => {}
                _ => {
                    return Err(Error::InvalidCohort(format!(
                        "column '{}' data does not match its declared kind",
                        spec.name
                    )));
                }
            }
        }
        let outcome_idx = schema.outcome_index();
        let outcome = match &columns[outcome_idx] {
            ColumnData::Numeric(v) => {
                let mut out = Vec::with_capacity(n);
                for (row, cell) in v.iter().enumerate() {
                    match cell {
                        Some(x) if *x == 0.0 || *x == 1.0 => out.push(*x as u8),
                        other => {
                            return Err(Error::BadValue {
                                column: schema.columns[outcome_idx].name.clone(),
                                row: row + 1,
                                value: other.map_or("<missing>".into(), |x| x.to_string()),
                            })
                        }
                    }
                }
                out
            }
            _ => unreachable!("outcome is numeric by schema validation"),
        };
        let mut cohort = Self {
            schema,
            columns,
            outcome,
            weights: vec![1.0; n],
            group_index: BTreeMap::new(),
        };
        cohort.rebuild_group_index()?;
        Ok(cohort)
    }

    fn rebuild_group_index(&mut self) -> Result<()> {
        self.group_index.clear();
        for (idx, spec) in self.schema.columns.iter().enumerate() {
            if spec.role != Role::Protected {
                continue;
            }
            let ColumnData::Categorical(vals) = &self.columns[idx] else {
                unreachable!("protected columns are categorical");
            };
            let mut buckets = vec![Vec::new(); spec.levels.len()];
            for (row, v) in vals.iter().enumerate() {
                let level = v.expect("categorical has no unmapped missing") as usize;
                buckets[level].push(row);
            }
            self.group_index.insert(spec.name.clone(), buckets);
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.outcome.len()
    }

    /// Copy with outcome labels complemented at the given rows, keeping
    /// the stored outcome column in sync. Supports leakage-sentinel tests
    /// that corrupt held-out labels.
    pub fn with_flipped_labels(&self, rows: &[usize]) -> Cohort {
        let mut out = self.clone();
        let idx = out.schema.outcome_index();
        let ColumnData::Numeric(column) = &mut out.columns[idx] else {
            unreachable!("outcome is numeric by schema validation");
        };
        for &row in rows {
            out.outcome[row] ^= 1;
            column[row] = Some(f64::from(out.outcome[row]));
        }
        out
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn outcome(&self) -> &[u8] {
        &self.outcome
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn set_weights(&mut self, weights: Vec<f64>) -> Result<()> {
        if weights.len() != self.n() {
            return Err(Error::LengthMismatch(format!(
                "{} weights for {} rows",
                weights.len(),
                self.n()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidCohort("weights must be finite and >= 0".into()));
        }
        if weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidCohort("total weight must be positive".into()));
        }
        self.weights = weights;
        Ok(())
    }

    pub fn column_data(&self, name: &str) -> Option<&ColumnData> {
        self.schema.column(name).map(|(i, _)| &self.columns[i])
    }

    pub fn group_index(&self, attribute: &str) -> Option<&Vec<Vec<usize>>> {
        self.group_index.get(attribute)
    }

    pub fn protected_attributes(&self) -> Vec<&str> {
        self.group_index.keys().map(String::as_str).collect()
    }

    /// Group membership vector for one protected attribute.
    pub fn group_labels(&self, attribute: &str) -> Result<GroupLabels> {
        let (idx, spec) = self
            .schema
            .column(attribute)
            .ok_or_else(|| Error::MissingColumn(attribute.into()))?;
        if spec.role != Role::Protected {
            return Err(Error::InvalidCohort(format!(
                "column '{attribute}' is not protected"
            )));
        }
        let ColumnData::Categorical(vals) = &self.columns[idx] else {
            unreachable!()
        };
        Ok(GroupLabels {
            attribute: attribute.into(),
            levels: spec.levels.clone(),
            assignment: vals.iter().map(|v| v.expect("no unmapped missing")).collect(),
        })
    }

    /// New cohort without the named column. The outcome cannot be dropped.
    pub fn drop_column(&self, name: &str) -> Result<Cohort> {
        let (idx, spec) = self
            .schema
            .column(name)
            .ok_or_else(|| Error::MissingColumn(name.into()))?;
        if spec.role == Role::Outcome {
            return Err(Error::CannotDropOutcome(name.into()));
        }
        let schema = Schema {
            columns: self
                .schema
                .columns
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != idx)
                .map(|(_, c)| c.clone())
                .collect(),
        };
        let columns = self
            .columns
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != idx)
            .map(|(_, c)| c.clone())
            .collect();
        let mut out = Cohort::from_columns(schema, columns)?;
        out.weights = self.weights.clone();
        Ok(out)
    }

    /// Row subset (indices into this cohort, order preserved).
    pub fn subset(&self, rows: &[usize]) -> Result<Cohort> {
        let columns = self.columns.iter().map(|c| c.gather(rows)).collect();
        let mut out = Cohort::from_columns(self.schema.clone(), columns)?;
        out.weights = rows.iter().map(|&i| self.weights[i]).collect();
        Ok(out)
    }

    /// Replace the values of a numeric column (used by the repair
    /// pre-processing step). Lengths must match; missingness pattern is
    /// taken from the new values.
    pub fn with_numeric_column(&self, name: &str, values: Vec<Option<f64>>) -> Result<Cohort> {
        let (idx, spec) = self
            .schema
            .column(name)
            .ok_or_else(|| Error::MissingColumn(name.into()))?;
        if spec.kind != ColumnKind::Numeric {
            return Err(Error::InvalidCohort(format!(
                "column '{name}' is not numeric"
            )));
        }
        if values.len() != self.n() {
            return Err(Error::LengthMismatch(format!(
                "{} values for {} rows",
                values.len(),
                self.n()
            )));
        }
        let mut out = self.clone();
        out.columns[idx] = ColumnData::Numeric(values);
        Ok(out)
    }
}

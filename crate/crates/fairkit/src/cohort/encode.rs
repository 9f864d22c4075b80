//! Feature encoding: numeric passthrough, ordinal rank mapping, full
//! one-hot expansion of categorical columns, deterministic column order.

use std::collections::BTreeMap;

use super::{Cohort, ColumnData, ColumnKind, Role};
use crate::error::Result;
use crate::num::Real;

/// Dense row-major design matrix with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedMatrix<F> {
    pub n: usize,
    pub p: usize,
    pub data: Vec<F>,
    pub names: Vec<String>,
}

impl<F: Real> EncodedMatrix<F> {
    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.p..(i + 1) * self.p]
    }

    pub fn from_rows(rows: Vec<Vec<F>>, names: Vec<String>) -> Self {
        let n = rows.len();
        let p = names.len();
        let mut data = Vec::with_capacity(n * p);
        for r in rows {
            debug_assert_eq!(r.len(), p);
            data.extend(r);
        }
        Self { n, p, data, names }
    }
}

/// Training-split imputation statistics: the median of the observed
/// values per numeric/ordinal column. Fit on training folds only and
/// applied to test folds so no test information leaks into encoding.
#[derive(Debug, Clone, Default)]
pub struct ImputeStats {
    medians: BTreeMap<String, f64>,
}

impl ImputeStats {
    /// Fit medians on a row subset (ordinal columns use level ranks).
    pub fn fit(cohort: &Cohort, rows: &[usize]) -> ImputeStats {
        let mut medians = BTreeMap::new();
        for (spec, col) in cohort.schema.columns.iter().zip(&cohort.columns) {
            let observed: Vec<f64> = match (spec.kind, col) {
                (ColumnKind::Numeric, ColumnData::Numeric(v)) => {
                    rows.iter().filter_map(|&i| v[i]).collect()
                }
                (ColumnKind::Ordinal, ColumnData::Categorical(v)) => rows
                    .iter()
                    .filter_map(|&i| v[i].map(|idx| idx as f64))
                    .collect(),
                _ => continue,
            };
            medians.insert(spec.name.clone(), median(observed));
        }
        ImputeStats { medians }
    }

    pub fn fit_all(cohort: &Cohort) -> ImputeStats {
        let rows: Vec<usize> = (0..cohort.n()).collect();
        Self::fit(cohort, &rows)
    }

    fn median_for(&self, column: &str) -> f64 {
        self.medians.get(column).copied().unwrap_or(0.0)
    }
}

fn median(mut values: Vec<f64>) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

impl Cohort {
    /// Encode features using imputation statistics fit on the whole cohort.
    pub fn encode_features<F: Real>(&self) -> Result<EncodedMatrix<F>> {
        self.encode_features_with(&ImputeStats::fit_all(self))
    }

    /// Encode features with externally fit imputation statistics.
    ///
    /// Column order is deterministic: schema order, categorical levels in
    /// declared order. Outcome and identifier columns are excluded;
    /// protected columns are encoded as ordinary categorical features.
    pub fn encode_features_with<F: Real>(&self, stats: &ImputeStats) -> Result<EncodedMatrix<F>> {
        let n = self.n();
        let mut names = Vec::new();
        for spec in &self.schema.columns {
            match spec.role {
                Role::Outcome | Role::Identifier => continue,
                Role::Feature | Role::Protected => {}
            }
            match spec.kind {
                ColumnKind::Numeric | ColumnKind::Ordinal => names.push(spec.name.clone()),
                ColumnKind::Categorical => {
                    for level in &spec.levels {
                        names.push(format!("{}={}", spec.name, level));
                    }
                }
            }
        }
        let p = names.len();
        let mut data = vec![F::zero(); n * p];
        let mut offset = 0usize;
        for (spec, col) in self.schema.columns.iter().zip(&self.columns) {
            match spec.role {
                Role::Outcome | Role::Identifier => continue,
                Role::Feature | Role::Protected => {}
            }
            match (spec.kind, col) {
                (ColumnKind::Numeric, ColumnData::Numeric(v)) => {
                    let fill = stats.median_for(&spec.name);
                    for (row, cell) in v.iter().enumerate() {
                        data[row * p + offset] = F::of(cell.unwrap_or(fill));
                    }
                    offset += 1;
                }
                (ColumnKind::Ordinal, ColumnData::Categorical(v)) => {
                    let fill = stats.median_for(&spec.name);
                    for (row, cell) in v.iter().enumerate() {
                        let rank = cell.map_or(fill, |i| i as f64);
                        data[row * p + offset] = F::of(rank);
                    }
                    offset += 1;
                }
                (ColumnKind::Categorical, ColumnData::Categorical(v)) => {
                    for (row, cell) in v.iter().enumerate() {
                        let level = cell.expect("categorical has no unmapped missing") as usize;
                        data[row * p + offset + level] = F::one();
                    }
                    offset += spec.levels.len();
                }
                _ => unreachable!("kind/data agreement checked at construction"),
            }
        }
        debug_assert_eq!(offset, p);
        Ok(EncodedMatrix { n, p, data, names })
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::toy_cohort;
    use super::super::{Cohort, ColumnData, ColumnSpec, Role, Schema};
    use super::*;

    #[test]
    fn one_numeric_plus_three_level_categorical_gives_four_columns() {
        let schema = Schema::new(vec![
            ColumnSpec::numeric("x", Role::Feature),
            ColumnSpec::categorical("c", Role::Feature, &["a", "b", "c"]),
            ColumnSpec::numeric("dep", Role::Outcome),
        ])
        .unwrap();
        let cohort = Cohort::from_columns(
            schema,
            vec![
                ColumnData::Numeric(vec![Some(1.5), Some(2.5)]),
                ColumnData::Categorical(vec![Some(2), Some(0)]),
                ColumnData::Numeric(vec![Some(0.0), Some(1.0)]),
            ],
        )
        .unwrap();
        let m: EncodedMatrix<f64> = cohort.encode_features().unwrap();
        assert_eq!(m.p, 4);
        assert_eq!(m.names, vec!["x", "c=a", "c=b", "c=c"]);
        assert_eq!(m.row(0), &[1.5, 0.0, 0.0, 1.0]);
        assert_eq!(m.row(1), &[2.5, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn all_numeric_is_identity() {
        let schema = Schema::new(vec![
            ColumnSpec::numeric("a", Role::Feature),
            ColumnSpec::numeric("b", Role::Feature),
            ColumnSpec::numeric("dep", Role::Outcome),
        ])
        .unwrap();
        let cohort = Cohort::from_columns(
            schema,
            vec![
                ColumnData::Numeric(vec![Some(1.0), Some(3.0)]),
                ColumnData::Numeric(vec![Some(2.0), Some(4.0)]),
                ColumnData::Numeric(vec![Some(0.0), Some(1.0)]),
            ],
        )
        .unwrap();
        let m: EncodedMatrix<f64> = cohort.encode_features().unwrap();
        assert_eq!(m.row(0), &[1.0, 2.0]);
        assert_eq!(m.row(1), &[3.0, 4.0]);
    }

    #[test]
    fn ordinal_maps_to_rank() {
        let schema = Schema::new(vec![
            ColumnSpec::ordinal("sev", Role::Feature, &["low", "mid", "high"]),
            ColumnSpec::numeric("dep", Role::Outcome),
        ])
        .unwrap();
        let cohort = Cohort::from_columns(
            schema,
            vec![
                ColumnData::Categorical(vec![Some(2), Some(0)]),
                ColumnData::Numeric(vec![Some(1.0), Some(0.0)]),
            ],
        )
        .unwrap();
        let m: EncodedMatrix<f64> = cohort.encode_features().unwrap();
        assert_eq!(m.row(0), &[2.0]);
        assert_eq!(m.row(1), &[0.0]);
    }

    #[test]
    fn missing_numeric_imputed_with_training_median() {
        let schema = Schema::new(vec![
            ColumnSpec::numeric("x", Role::Feature),
            ColumnSpec::numeric("dep", Role::Outcome),
        ])
        .unwrap();
        let cohort = Cohort::from_columns(
            schema,
            vec![
                ColumnData::Numeric(vec![Some(1.0), Some(5.0), None, Some(9.0)]),
                ColumnData::Numeric(vec![Some(0.0), Some(1.0), Some(0.0), Some(1.0)]),
            ],
        )
        .unwrap();
        // Stats from rows {0, 1} only: median(1, 5) = 3.
        let stats = ImputeStats::fit(&cohort, &[0, 1]);
        let m: EncodedMatrix<f64> = cohort.encode_features_with(&stats).unwrap();
        assert_eq!(m.row(2), &[3.0]);
    }

    #[test]
    fn row_permutation_permutes_encoding() {
        let cohort = toy_cohort();
        let perm = [2usize, 0, 3, 1];
        let permuted = cohort.subset(&perm).unwrap();
        let base: EncodedMatrix<f64> = cohort.encode_features().unwrap();
        let enc: EncodedMatrix<f64> = permuted.encode_features().unwrap();
        assert_eq!(enc.names, base.names);
        for (new_row, &old_row) in perm.iter().enumerate() {
            assert_eq!(enc.row(new_row), base.row(old_row));
        }
    }
}

//! Disparate-impact repair: move every numeric feature toward a shared
//! target distribution so that groups become indistinguishable on the
//! repaired features. The target quantile at level u is the median across
//! groups of the per-group empirical quantiles; the protected column is
//! dropped from the repaired cohort.

use crate::cohort::{Cohort, ColumnData, ColumnKind, Role};
use crate::error::{Error, Result};

/// Fitted repair state: per numeric feature, the sorted training values of
/// each group. Quantiles of new values are looked up against these, so a
/// fitted repair can transform held-out rows without touching their labels.
#[derive(Debug, Clone)]
pub struct DirRepair {
    pub protected: String,
    pub lambda: f64,
    columns: Vec<ColumnState>,
}

#[derive(Debug, Clone)]
struct ColumnState {
    name: String,
    /// Sorted non-missing training values, one vector per group level.
    group_sorted: Vec<Vec<f64>>,
}

/// Empirical quantile with plotting positions (i + 0.5)/n, linearly
/// interpolated between order statistics and clamped at the extremes.
fn quantile(sorted: &[f64], u: f64) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0);
    let pos = u * n as f64 - 0.5;
    if pos <= 0.0 {
        return sorted[0];
    }
    if pos >= (n - 1) as f64 {
        return sorted[n - 1];
    }
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac
}

/// Median over the per-group quantiles at level u (mean of the middle two
/// for an even group count).
fn target_quantile(groups: &[&Vec<f64>], u: f64) -> f64 {
    let mut qs: Vec<f64> = groups.iter().map(|g| quantile(g, u)).collect();
    qs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = qs.len();
    if m % 2 == 1 {
        qs[m / 2]
    } else {
        0.5 * (qs[m / 2 - 1] + qs[m / 2])
    }
}

/// Quantile level of v among a group's sorted training values: the
/// mid-rank position (rank - 0.5)/n, with ties collapsed to the midpoint of
/// their equal range. Values absent from the training sample fall between
/// the bracketing ranks.
fn level_of(sorted: &[f64], v: f64) -> f64 {
    let n = sorted.len() as f64;
    let lo = sorted.partition_point(|&x| x < v) as f64;
    let hi = sorted.partition_point(|&x| x <= v) as f64;
    (lo + hi) / (2.0 * n)
}

impl DirRepair {
    pub fn fit(cohort: &Cohort, protected: &str, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) || !lambda.is_finite() {
            return Err(Error::BadLambda(lambda));
        }
        let groups = cohort.group_labels(protected)?;
        let mut columns = Vec::new();
        for spec in &cohort.schema().columns {
            if spec.role != Role::Feature || spec.kind != ColumnKind::Numeric {
                continue;
            }
            let values = match cohort.column_data(&spec.name) {
                Some(ColumnData::Numeric(v)) => v,
                _ => return Err(Error::MissingColumn(spec.name.clone())),
            };
            let mut group_sorted = vec![Vec::new(); groups.n_groups()];
            for (i, value) in values.iter().enumerate() {
                if let Some(v) = value {
                    group_sorted[groups.assignment[i] as usize].push(*v);
                }
            }
            for g in &mut group_sorted {
                g.sort_by(|a, b| a.partial_cmp(b).unwrap());
            }
            columns.push(ColumnState {
                name: spec.name.clone(),
                group_sorted,
            });
        }
        Ok(DirRepair {
            protected: protected.to_string(),
            lambda,
            columns,
        })
    }

    /// Repairs numeric features of `cohort` using the fitted per-group
    /// distributions and drops the protected column. The input must still
    /// carry the protected attribute so rows can be matched to groups.
    pub fn transform(&self, cohort: &Cohort) -> Result<Cohort> {
        let groups = cohort.group_labels(&self.protected)?;
        let mut repaired = cohort.clone();
        for state in &self.columns {
            let values = match cohort.column_data(&state.name) {
                Some(ColumnData::Numeric(v)) => v,
                _ => return Err(Error::MissingColumn(state.name.clone())),
            };
            let populated: Vec<&Vec<f64>> = state
                .group_sorted
                .iter()
                .filter(|g| !g.is_empty())
                .collect();
            if populated.is_empty() {
                continue;
            }
            let mut out = Vec::with_capacity(values.len());
            for (i, value) in values.iter().enumerate() {
                out.push(value.map(|v| {
                    let own = &state.group_sorted[groups.assignment[i] as usize];
                    if own.is_empty() {
                        return v;
                    }
                    let u = level_of(own, v);
                    (1.0 - self.lambda) * v + self.lambda * target_quantile(&populated, u)
                }));
            }
            repaired = repaired.with_numeric_column(&state.name, out)?;
        }
        repaired.drop_column(&self.protected)
    }
}

impl DirRepair {
    /// Full fitted state: repair level plus per-column per-group sorted
    /// training values. Used to show that fitting ignored held-out labels.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "protected": self.protected,
            "lambda": self.lambda,
            "columns": self.columns.iter().map(|c| {
                serde_json::json!({
                    "name": c.name,
                    "group_sorted": c.group_sorted,
                })
            }).collect::<Vec<_>>(),
        })
    }
}

/// Fit-and-transform in one step, for whole-cohort repair.
pub fn dir_repair(cohort: &Cohort, protected: &str, lambda: f64) -> Result<Cohort> {
    DirRepair::fit(cohort, protected, lambda)?.transform(cohort)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::{ColumnSpec, Schema};
    use crate::rng::SplitMix64;

    fn two_group_cohort(a: &[f64], b: &[f64]) -> Cohort {
        let schema = Schema::new(vec![
            ColumnSpec::numeric("x", Role::Feature),
            ColumnSpec::categorical("g", Role::Protected, &["A", "B"]),
            ColumnSpec::numeric("dep", Role::Outcome),
        ])
        .unwrap();
        let values: Vec<Option<f64>> = a.iter().chain(b).map(|&v| Some(v)).collect();
        let groups: Vec<Option<u32>> = a
            .iter()
            .map(|_| Some(0))
            .chain(b.iter().map(|_| Some(1)))
            .collect();
        let n = values.len();
        let outcome: Vec<Option<f64>> = (0..n).map(|i| Some((i % 2) as f64)).collect();
        Cohort::from_columns(
            schema,
            vec![
                ColumnData::Numeric(values),
                ColumnData::Categorical(groups),
                ColumnData::Numeric(outcome),
            ],
        )
        .unwrap()
    }

    fn repaired_values(c: &Cohort) -> Vec<f64> {
        match c.column_data("x").unwrap() {
            ColumnData::Numeric(v) => v.iter().map(|x| x.unwrap()).collect(),
            _ => panic!("x should stay numeric"),
        }
    }

    #[test]
    fn full_repair_merges_offset_groups() {
        let c = two_group_cohort(&[1.0, 2.0, 3.0], &[11.0, 12.0, 13.0]);
        let out = dir_repair(&c, "g", 1.0).unwrap();
        let v = repaired_values(&out);
        // Midpoint distribution of the two groups: {6, 7, 8} on both sides.
        for (got, want) in v.iter().zip([6.0, 7.0, 8.0, 6.0, 7.0, 8.0]) {
            assert!((got - want).abs() < 1e-12, "got {got}, want {want}");
        }
        assert!(out.schema().column("g").is_none());
    }

    #[test]
    fn lambda_zero_is_identity() {
        let a = [0.3, -1.2, 2.5, 0.0];
        let b = [5.0, 4.5, 6.1, 7.2];
        let c = two_group_cohort(&a, &b);
        let out = dir_repair(&c, "g", 0.0).unwrap();
        let v = repaired_values(&out);
        for (got, want) in v.iter().zip(a.iter().chain(&b)) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn lambda_half_is_midpoint_of_endpoints() {
        let a = [0.3, -1.2, 2.5, 0.0];
        let b = [5.0, 4.5, 6.1, 7.2];
        let c = two_group_cohort(&a, &b);
        let v0 = repaired_values(&dir_repair(&c, "g", 0.0).unwrap());
        let v1 = repaired_values(&dir_repair(&c, "g", 1.0).unwrap());
        let vh = repaired_values(&dir_repair(&c, "g", 0.5).unwrap());
        for i in 0..v0.len() {
            assert!((vh[i] - 0.5 * (v0[i] + v1[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn full_repair_aligns_equal_sized_random_groups() {
        let mut rng = SplitMix64::new(42);
        let a: Vec<f64> = (0..25).map(|_| rng.next_normal()).collect();
        let b: Vec<f64> = (0..25).map(|_| 3.0 + 2.0 * rng.next_normal()).collect();
        let c = two_group_cohort(&a, &b);
        let v = repaired_values(&dir_repair(&c, "g", 1.0).unwrap());
        let mut ga: Vec<f64> = v[..25].to_vec();
        let mut gb: Vec<f64> = v[25..].to_vec();
        ga.sort_by(|x, y| x.partial_cmp(y).unwrap());
        gb.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for i in 0..25 {
            assert!((ga[i] - gb[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn repair_is_monotone_within_groups() {
        let mut rng = SplitMix64::new(7);
        let a: Vec<f64> = (0..30).map(|_| rng.next_normal()).collect();
        let b: Vec<f64> = (0..20).map(|_| 1.0 + rng.next_normal()).collect();
        let c = two_group_cohort(&a, &b);
        for lambda in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let v = repaired_values(&dir_repair(&c, "g", lambda).unwrap());
            for (orig, rep) in [(&a[..], &v[..30]), (&b[..], &v[30..])] {
                let mut order: Vec<usize> = (0..orig.len()).collect();
                order.sort_by(|&i, &j| orig[i].partial_cmp(&orig[j]).unwrap());
                for w in order.windows(2) {
                    assert!(rep[w[0]] <= rep[w[1]] + 1e-12);
                }
            }
        }
    }

    #[test]
    fn fitted_repair_transforms_held_out_rows() {
        let mut rng = SplitMix64::new(11);
        let a: Vec<f64> = (0..40).map(|_| rng.next_normal()).collect();
        let b: Vec<f64> = (0..40).map(|_| 2.0 + rng.next_normal()).collect();
        let train = two_group_cohort(&a, &b);
        let repair = DirRepair::fit(&train, "g", 1.0).unwrap();
        // A held-out value equal to a training value maps to the same spot.
        let test = two_group_cohort(&[a[3]], &[b[5]]);
        let got = repaired_values(&repair.transform(&test).unwrap());
        let full = repaired_values(&repair.transform(&train).unwrap());
        assert!((got[0] - full[3]).abs() < 1e-12);
        assert!((got[1] - full[40 + 5]).abs() < 1e-12);
    }

    #[test]
    fn bad_lambda_rejected() {
        let c = two_group_cohort(&[1.0, 2.0], &[3.0, 4.0]);
        assert!(matches!(
            dir_repair(&c, "g", 1.5).unwrap_err(),
            Error::BadLambda(_)
        ));
        assert!(matches!(
            dir_repair(&c, "g", -0.1).unwrap_err(),
            Error::BadLambda(_)
        ));
    }

    #[test]
    fn categorical_features_pass_through() {
        let schema = Schema::new(vec![
            ColumnSpec::categorical("smoker", Role::Feature, &["no", "yes"]),
            ColumnSpec::categorical("g", Role::Protected, &["A", "B"]),
            ColumnSpec::numeric("dep", Role::Outcome),
        ])
        .unwrap();
        let c = Cohort::from_columns(
            schema,
            vec![
                ColumnData::Categorical(vec![Some(0), Some(1), Some(1), Some(0)]),
                ColumnData::Categorical(vec![Some(0), Some(0), Some(1), Some(1)]),
                ColumnData::Numeric(vec![Some(0.0), Some(1.0), Some(0.0), Some(1.0)]),
            ],
        )
        .unwrap();
        let out = dir_repair(&c, "g", 1.0).unwrap();
        match out.column_data("smoker").unwrap() {
            ColumnData::Categorical(v) => {
                assert_eq!(v, &vec![Some(0), Some(1), Some(1), Some(0)]);
            }
            _ => panic!("categorical column must be unchanged"),
        }
    }
}

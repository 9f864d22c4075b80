//! Suppression: remove the protected attribute from the training data.
//! Only the learner is blinded; group membership is retained separately so
//! fairness can still be evaluated.

use crate::cohort::{Cohort, GroupLabels};
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct Suppressed {
    pub cohort: Cohort,
    /// Evaluation-time grouping, present when the dropped column was a
    /// protected attribute.
    pub eval_groups: Option<GroupLabels>,
}

pub fn suppress(cohort: &Cohort, column: &str) -> Result<Suppressed> {
    let eval_groups = match cohort.group_labels(column) {
        Ok(labels) => Some(labels),
        Err(_) if cohort.schema().column(column).is_some() => {
            log::warn!("suppressing non-protected column '{column}'");
            None
        }
        Err(err) => return Err(err),
    };
    let cohort = cohort.drop_column(column)?;
    Ok(Suppressed {
        cohort,
        eval_groups,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::{ColumnData, ColumnSpec, EncodedMatrix, Role, Schema};

    fn cohort() -> Cohort {
        let schema = Schema::new(vec![
            ColumnSpec::numeric("age", Role::Feature),
            ColumnSpec::categorical("sex", Role::Protected, &["F", "M"]),
            ColumnSpec::numeric("dep", Role::Outcome),
        ])
        .unwrap();
        Cohort::from_columns(
            schema,
            vec![
                ColumnData::Numeric(vec![Some(20.0), Some(30.0)]),
                ColumnData::Categorical(vec![Some(0), Some(1)]),
                ColumnData::Numeric(vec![Some(1.0), Some(0.0)]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn encoded_matrix_loses_protected_columns() {
        let suppressed = suppress(&cohort(), "sex").unwrap();
        let m: EncodedMatrix<f64> = suppressed.cohort.encode_features().unwrap();
        assert_eq!(m.names, vec!["age"]);
    }

    #[test]
    fn evaluation_grouping_is_retained() {
        let suppressed = suppress(&cohort(), "sex").unwrap();
        let groups = suppressed.eval_groups.unwrap();
        assert_eq!(groups.levels, vec!["F", "M"]);
        assert_eq!(groups.assignment, vec![0, 1]);
    }

    #[test]
    fn non_protected_column_allowed() {
        let suppressed = suppress(&cohort(), "age").unwrap();
        assert!(suppressed.eval_groups.is_none());
        assert_eq!(suppressed.cohort.schema().columns.len(), 2);
    }
}

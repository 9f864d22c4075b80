//! Nested-CV hyper-parameter selection. Inner folds score candidate
//! configs; outer-test rows are never touched.

use crate::cohort::{Cohort, ImputeStats, NestedPlan};
use crate::error::{Error, Result};
use crate::metrics::{auc_roc, balanced_accuracy, confusion_at_threshold};
use crate::num::Real;

use super::{train, ModelConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionMetric {
    BAcc,
    Auc,
}

/// Mean inner-fold validation score of one config on one outer fold.
fn inner_score<F: Real>(
    cohort: &Cohort,
    plan_rows: &crate::cohort::InnerPlan,
    config: &ModelConfig<F>,
    metric: SelectionMetric,
) -> Result<F> {
    let mut total = F::zero();
    for fold in 0..plan_rows.k {
        let train_rows = plan_rows.train_rows(fold);
        let val_rows = plan_rows.test_rows(fold);
        let train_cohort = cohort.subset(&train_rows)?;
        let val_cohort = cohort.subset(&val_rows)?;
        let stats = ImputeStats::fit_all(&train_cohort);
        let x_train = train_cohort.encode_features_with(&stats)?;
        let w_train: Vec<F> = train_cohort.weights().iter().map(|&w| F::of(w)).collect();
        let model = train(&x_train, train_cohort.outcome(), &w_train, config)?;
        let x_val = val_cohort.encode_features_with(&stats)?;
        let p = model.predict_proba(&x_val)?;
        let y_val = val_cohort.outcome();
        let score = match metric {
            SelectionMetric::BAcc => {
                let counts = confusion_at_threshold(&p, y_val, F::half(), None)?;
                balanced_accuracy(&counts)?
            }
            SelectionMetric::Auc => auc_roc(&p, y_val, None)?,
        };
        total += score;
    }
    Ok(total / F::of(plan_rows.k as f64))
}

/// For each outer fold, the index (into `grid`) of the config maximizing
/// the mean inner-fold validation metric. Ties break to the earliest grid
/// position.
pub fn grid_search<F: Real>(
    cohort: &Cohort,
    grid: &[ModelConfig<F>],
    plan: &NestedPlan,
    metric: SelectionMetric,
) -> Result<Vec<usize>> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut best_per_fold = Vec::with_capacity(plan.inner.len());
    for inner in &plan.inner {
        let mut best_idx = 0usize;
        let mut best_score = F::neg_infinity();
        for (idx, config) in grid.iter().enumerate() {
            let score = inner_score(cohort, inner, config, metric)?;
            if score > best_score {
                best_score = score;
                best_idx = idx;
            }
        }
        best_per_fold.push(best_idx);
    }
    Ok(best_per_fold)
}

//! Stratified and nested cross-validation splits. Deterministic: shuffling
//! is driven only by the seed.

use super::Cohort;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<u32>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &f)| f as usize == fold)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &f)| f as usize != fold)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Inner fold plan over a subset of the parent cohort. `rows` are indices
/// into the parent; `assignments` is aligned with `rows`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InnerPlan {
    pub k: usize,
    pub rows: Vec<usize>,
    pub assignments: Vec<u32>,
}

impl InnerPlan {
    /// Parent-cohort indices of the validation part of an inner fold.
    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        self.rows
            .iter()
            .zip(&self.assignments)
            .filter(|(_, &f)| f as usize == fold)
            .map(|(&r, _)| r)
            .collect()
    }

    pub fn train_rows(&self, fold: usize) -> Vec<usize> {
        self.rows
            .iter()
            .zip(&self.assignments)
            .filter(|(_, &f)| f as usize != fold)
            .map(|(&r, _)| r)
            .collect()
    }

    /// Positions (into `rows`) of the validation part, for slicing data
    /// already restricted to the subset.
    pub fn test_positions(&self, fold: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &f)| f as usize == fold)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn train_positions(&self, fold: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &f)| f as usize != fold)
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NestedPlan {
    pub outer: FoldPlan,
    /// One inner plan per outer fold, covering exactly the outer-training
    /// rows of that fold.
    pub inner: Vec<InnerPlan>,
}

fn stratified_assign(outcome: &[u8], k: usize, rng: &mut SplitMix64) -> Result<Vec<u32>> {
    let n = outcome.len();
    if k < 2 || k > n {
        return Err(Error::InfeasibleSplit(format!("k={k} with n={n}")));
    }
    let mut pos: Vec<usize> = (0..n).filter(|&i| outcome[i] == 1).collect();
    let mut neg: Vec<usize> = (0..n).filter(|&i| outcome[i] == 0).collect();
    if pos.len() < k {
        return Err(Error::InfeasibleSplit(format!(
            "{} positives for k={k}",
            pos.len()
        )));
    }
    if neg.len() < k {
        return Err(Error::InfeasibleSplit(format!(
            "{} negatives for k={k}",
            neg.len()
        )));
    }
    rng.shuffle(&mut pos);
    rng.shuffle(&mut neg);
    let mut assignments = vec![0u32; n];
    for (i, &row) in pos.iter().enumerate() {
        assignments[row] = (i % k) as u32;
    }
    for (i, &row) in neg.iter().enumerate() {
        assignments[row] = (i % k) as u32;
    }
    Ok(assignments)
}

/// Outcome-stratified k-fold split. Per-fold positive counts differ by at
/// most one across folds.
pub fn stratified_kfold(cohort: &Cohort, k: usize, seed: u64) -> Result<FoldPlan> {
    let mut rng = SplitMix64::stream(seed, 0);
    let assignments = stratified_assign(cohort.outcome(), k, &mut rng)?;
    Ok(FoldPlan {
        k,
        assignments,
        seed,
    })
}

/// Nested split for hyper-parameter selection: for every outer fold, an
/// inner stratified split over the outer-training rows only. Outer-test
/// rows never appear in the matching inner plan.
pub fn nested_folds(
    cohort: &Cohort,
    k_outer: usize,
    k_inner: usize,
    seed: u64,
) -> Result<NestedPlan> {
    let outer = stratified_kfold(cohort, k_outer, seed)?;
    let outcome = cohort.outcome();
    let mut inner = Vec::with_capacity(k_outer);
    for fold in 0..k_outer {
        let rows = outer.train_rows(fold);
        let sub_outcome: Vec<u8> = rows.iter().map(|&i| outcome[i]).collect();
        let mut rng = SplitMix64::stream(seed, 1 + fold as u64);
        let assignments = stratified_assign(&sub_outcome, k_inner, &mut rng)?;
        inner.push(InnerPlan {
            k: k_inner,
            rows,
            assignments,
        });
    }
    Ok(NestedPlan { outer, inner })
}

#[cfg(test)]
mod tests {
    use super::super::tests::toy_schema;
    use super::super::{Cohort, ColumnData, Schema};
    use super::*;

    fn cohort_with_outcome(outcome: &[u8]) -> Cohort {
        let n = outcome.len();
        Cohort::from_columns(
            toy_schema(),
            vec![
                ColumnData::Numeric((0..n).map(|i| Some(i as f64)).collect()),
                ColumnData::Categorical((0..n).map(|i| Some((i % 2) as u32)).collect()),
                ColumnData::Numeric(outcome.iter().map(|&y| Some(y as f64)).collect()),
            ],
        )
        .unwrap()
    }

    fn schema() -> Schema {
        toy_schema()
    }

    #[test]
    fn exact_stratification_counts() {
        // n=10, 4 positives, k=2: each fold must hold exactly 2 positives
        // and 3 negatives (brute-force count).
        let cohort = cohort_with_outcome(&[1, 1, 1, 1, 0, 0, 0, 0, 0, 0]);
        let plan = stratified_kfold(&cohort, 2, 7).unwrap();
        for fold in 0..2 {
            let rows = plan.test_rows(fold);
            let pos = rows.iter().filter(|&&i| cohort.outcome()[i] == 1).count();
            assert_eq!(pos, 2);
            assert_eq!(rows.len() - pos, 3);
        }
        let _ = schema();
    }

    #[test]
    fn infeasible_when_too_few_positives() {
        let cohort = cohort_with_outcome(&[1, 1, 0, 0]);
        let err = stratified_kfold(&cohort, 4, 0).unwrap_err();
        assert!(matches!(err, Error::InfeasibleSplit(_)));
    }

    #[test]
    fn same_seed_reproduces_assignments() {
        let cohort = cohort_with_outcome(&[1, 0, 1, 0, 1, 0, 1, 0, 1, 0]);
        let a = stratified_kfold(&cohort, 5, 99).unwrap();
        let b = stratified_kfold(&cohort, 5, 99).unwrap();
        assert_eq!(a, b);
        let c = stratified_kfold(&cohort, 5, 100).unwrap();
        assert_ne!(a.assignments, c.assignments);
    }

    #[test]
    fn folds_nonempty_and_balanced() {
        let outcome: Vec<u8> = (0..37).map(|i| u8::from(i % 3 == 0)).collect();
        let cohort = cohort_with_outcome(&outcome);
        let plan = stratified_kfold(&cohort, 5, 3).unwrap();
        let n_pos = outcome.iter().filter(|&&y| y == 1).count();
        let cap = n_pos.div_ceil(5);
        for fold in 0..5 {
            let rows = plan.test_rows(fold);
            assert!(!rows.is_empty());
            let pos = rows.iter().filter(|&&i| outcome[i] == 1).count();
            assert!(
                (pos as i64 - cap as i64).abs() <= 1,
                "fold {fold} has {pos} positives, cap {cap}"
            );
        }
    }

    #[test]
    fn nested_sizes_and_no_leakage() {
        let outcome: Vec<u8> = (0..30).map(|i| u8::from(i % 2 == 0)).collect();
        let cohort = cohort_with_outcome(&outcome);
        let plan = nested_folds(&cohort, 3, 2, 11).unwrap();
        assert_eq!(plan.inner.len(), 3);
        for fold in 0..3 {
            let inner = &plan.inner[fold];
            assert_eq!(inner.rows.len(), 20);
            let test: std::collections::BTreeSet<usize> =
                plan.outer.test_rows(fold).into_iter().collect();
            for &r in &inner.rows {
                assert!(!test.contains(&r), "outer-test row {r} leaked into inner");
            }
        }
    }

    #[test]
    fn nested_determinism() {
        let outcome: Vec<u8> = (0..30).map(|i| u8::from(i % 2 == 0)).collect();
        let cohort = cohort_with_outcome(&outcome);
        assert_eq!(
            nested_folds(&cohort, 3, 2, 5).unwrap(),
            nested_folds(&cohort, 3, 2, 5).unwrap()
        );
    }
}

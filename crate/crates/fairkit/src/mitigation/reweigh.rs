//! Reweighing: per-(group, label) weights that make the protected
//! attribute and the outcome statistically independent in the weighted
//! training data.

use crate::cohort::Cohort;
use crate::error::{Error, Result};

/// Returns a weight vector where every sample in group x with label c is
/// scaled by P(X=x) P(C=c) / P(X=x, C=c), estimated from the (already
/// weighted) empirical frequencies. The weighted contingency table then
/// factorizes exactly.
pub fn reweigh(cohort: &Cohort, protected: &str) -> Result<Vec<f64>> {
    let groups = cohort.group_labels(protected)?;
    let outcome = cohort.outcome();
    let base = cohort.weights();
    let n_groups = groups.n_groups();

    let total: f64 = base.iter().sum();
    let mut group_mass = vec![0.0; n_groups];
    let mut label_mass = [0.0; 2];
    let mut cell_mass = vec![[0.0; 2]; n_groups];
    for i in 0..cohort.n() {
        let g = groups.assignment[i] as usize;
        let c = outcome[i] as usize;
        group_mass[g] += base[i];
        label_mass[c] += base[i];
        cell_mass[g][c] += base[i];
    }

    let mut factor = vec![[0.0; 2]; n_groups];
    for g in 0..n_groups {
        // Empty groups (e.g. a declared level with no rows) are skipped;
        // a populated group missing one label is a hard error.
        if group_mass[g] == 0.0 {
            continue;
        }
        for c in 0..2 {
            if cell_mass[g][c] == 0.0 {
                return Err(Error::EmptyCell(format!(
                    "group '{}' with label {c}",
                    groups.levels[g]
                )));
            }
            factor[g][c] = (group_mass[g] / total) * (label_mass[c] / total)
                / (cell_mass[g][c] / total);
        }
    }

    Ok((0..cohort.n())
        .map(|i| base[i] * factor[groups.assignment[i] as usize][outcome[i] as usize])
        .collect())
}

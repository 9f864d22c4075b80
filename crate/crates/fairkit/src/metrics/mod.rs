//! Group-fairness and predictive-performance metrics.
//!
//! Decision rule everywhere: predict positive iff p >= threshold.

mod tukey;

pub use tukey::{tukey_tpr_test, TukeyOutcome};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;

/// Weighted confusion counts (unweighted data gives plain counts).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts<F> {
    pub tp: F,
    pub fp: F,
    pub tn: F,
    pub fn_: F,
}

impl<F: Real> ConfusionCounts<F> {
    pub fn add(&mut self, other: &ConfusionCounts<F>) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }

    pub fn tpr(&self) -> Result<F> {
        let denom = self.tp + self.fn_;
        if denom <= F::zero() {
            return Err(Error::UndefinedRate("tp + fn = 0".into()));
        }
        Ok(self.tp / denom)
    }

    pub fn fpr(&self) -> Result<F> {
        let denom = self.tn + self.fp;
        if denom <= F::zero() {
            return Err(Error::UndefinedRate("tn + fp = 0".into()));
        }
        Ok(self.fp / denom)
    }

    pub fn tnr(&self) -> Result<F> {
        Ok(F::one() - self.fpr()?)
    }
}

fn check_lengths(a: usize, b: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch(format!("{what}: {a} vs {b}")));
    }
    Ok(())
}

/// Confusion counts of the `p >= theta` rule.
pub fn confusion_at_threshold<F: Real>(
    p: &[F],
    y: &[u8],
    theta: F,
    w: Option<&[F]>,
) -> Result<ConfusionCounts<F>> {
    check_lengths(p.len(), y.len(), "scores vs labels")?;
    if let Some(w) = w {
        check_lengths(p.len(), w.len(), "scores vs weights")?;
    }
    let mut counts = ConfusionCounts::default();
    for i in 0..p.len() {
        let weight = w.map_or(F::one(), |w| w[i]);
        let predicted_positive = p[i] >= theta;
        match (y[i], predicted_positive) {
            (1, true) => counts.tp += weight,
            (1, false) => counts.fn_ += weight,
            (0, true) => counts.fp += weight,
            (0, false) => counts.tn += weight,
            _ => {
                return Err(Error::LengthMismatch(format!(
                    "label {} is not binary",
                    y[i]
                )))
            }
        }
    }
    Ok(counts)
}

/// Per-group confusion counts under per-group thresholds.
pub fn group_confusion<F: Real>(
    p: &[F],
    y: &[u8],
    groups: &[u32],
    n_groups: usize,
    thresholds: &[F],
    w: Option<&[F]>,
) -> Result<Vec<ConfusionCounts<F>>> {
    check_lengths(p.len(), groups.len(), "scores vs groups")?;
    check_lengths(n_groups, thresholds.len(), "groups vs thresholds")?;
    let mut out = vec![ConfusionCounts::default(); n_groups];
    for i in 0..p.len() {
        let g = groups[i] as usize;
        if g >= n_groups {
            return Err(Error::LengthMismatch(format!("group id {g} out of range")));
        }
        let weight = w.map_or(F::one(), |w| w[i]);
        let predicted_positive = p[i] >= thresholds[g];
        match (y[i], predicted_positive) {
            (1, true) => out[g].tp += weight,
            (1, false) => out[g].fn_ += weight,
            (0, true) => out[g].fp += weight,
            (0, false) => out[g].tn += weight,
            _ => {
                return Err(Error::LengthMismatch(format!(
                    "label {} is not binary",
                    y[i]
                )))
            }
        }
    }
    Ok(out)
}

/// TPR per group under per-group thresholds. Errors when some group has
/// no positive samples; callers decide whether to drop or fail.
pub fn group_tpr<F: Real>(
    p: &[F],
    y: &[u8],
    groups: &[u32],
    n_groups: usize,
    thresholds: &[F],
) -> Result<Vec<F>> {
    let counts = group_confusion(p, y, groups, n_groups, thresholds, None)?;
    counts
        .iter()
        .enumerate()
        .map(|(g, c)| {
            c.tpr()
                .map_err(|_| Error::NoPositivesInGroup(g.to_string()))
        })
        .collect()
}

/// Equal opportunity difference: TPR_unprivileged - TPR_privileged.
pub fn eod<F: Real>(tpr_unprivileged: F, tpr_privileged: F) -> F {
    tpr_unprivileged - tpr_privileged
}

/// Discrimination level: the absolute TPR gap.
pub fn discrimination_level<F: Real>(tpr_a: F, tpr_b: F) -> F {
    (tpr_a - tpr_b).abs()
}

/// Arithmetic mean of sensitivity and specificity.
pub fn balanced_accuracy<F: Real>(counts: &ConfusionCounts<F>) -> Result<F> {
    Ok((counts.tpr()? + counts.tnr()?) * F::half())
}

/// Weighted AUC-ROC as the Mann-Whitney rank statistic:
/// P(p_pos > p_neg) + 0.5 P(p_pos = p_neg) over weighted pos/neg pairs.
pub fn auc_roc<F: Real>(p: &[F], y: &[u8], w: Option<&[F]>) -> Result<F> {
    check_lengths(p.len(), y.len(), "scores vs labels")?;
    if let Some(w) = w {
        check_lengths(p.len(), w.len(), "scores vs weights")?;
    }
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[a].partial_cmp(&p[b]).expect("finite scores"));

    let mut total_pos = F::zero();
    let mut total_neg = F::zero();
    for i in 0..p.len() {
        let weight = w.map_or(F::one(), |w| w[i]);
        if y[i] == 1 {
            total_pos += weight;
        } else {
            total_neg += weight;
        }
    }
    if total_pos <= F::zero() || total_neg <= F::zero() {
        return Err(Error::DegenerateLabels);
    }

    let mut wins = F::zero();
    let mut cum_neg = F::zero();
    let mut i = 0usize;
    while i < order.len() {
        // Tie block of equal scores.
        let mut j = i;
        let mut block_pos = F::zero();
        let mut block_neg = F::zero();
        while j < order.len() && p[order[j]] == p[order[i]] {
            let idx = order[j];
            let weight = w.map_or(F::one(), |w| w[idx]);
            if y[idx] == 1 {
                block_pos += weight;
            } else {
                block_neg += weight;
            }
            j += 1;
        }
        wins += block_pos * (cum_neg + block_neg * F::half());
        cum_neg += block_neg;
        i = j;
    }
    Ok(wins / (total_pos * total_neg))
}

/// Fairness verdict for one protected attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessSummary {
    pub eod: f64,
    pub gamma: f64,
    pub privileged_group: String,
    pub unprivileged_group: String,
    pub fair_flag: bool,
}

impl FairnessSummary {
    pub fn new(
        tpr_unprivileged: f64,
        tpr_privileged: f64,
        unprivileged_group: String,
        privileged_group: String,
        band: f64,
    ) -> Self {
        let eod_value = eod(tpr_unprivileged, tpr_privileged);
        Self {
            eod: eod_value,
            gamma: eod_value.abs(),
            privileged_group,
            unprivileged_group,
            fair_flag: (-band..=band).contains(&eod_value),
        }
    }
}

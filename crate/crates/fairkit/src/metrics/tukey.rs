//! Tukey's range test over per-fold group TPRs.
//!
//! One-way layout: groups are treatments, CV folds are replicates. The
//! displayed per-group half-width is scaled by q/sqrt(2) so that two
//! displayed intervals overlap exactly when the pairwise difference is
//! not significant.

use crate::error::{Error, Result};
use crate::num::Real;
use crate::stats::studentized_range_quantile;

#[derive(Debug, Clone, PartialEq)]
pub struct TukeyOutcome<F> {
    pub group_means: Vec<F>,
    /// Common display half-width (q / sqrt(2)) * sqrt(MS_within / k).
    pub half_width: F,
    pub ms_within: F,
    pub q_critical: F,
    /// significant[i][j]: |mean_i - mean_j| exceeds the Tukey honest
    /// significant difference.
    pub significant: Vec<Vec<bool>>,
}

/// Tukey range test at level `alpha` on `m` groups with `k` fold
/// replicates each.
pub fn tukey_tpr_test<F: Real>(per_fold_tprs: &[Vec<F>], alpha: f64) -> Result<TukeyOutcome<F>> {
    let m = per_fold_tprs.len();
    if m < 2 {
        return Err(Error::InsufficientFolds(format!("{m} groups")));
    }
    let k = per_fold_tprs[0].len();
    if k < 2 {
        return Err(Error::InsufficientFolds(format!("{k} replicates")));
    }
    if per_fold_tprs.iter().any(|g| g.len() != k) {
        return Err(Error::InsufficientFolds(
            "unequal replicate counts across groups".into(),
        ));
    }

    let kf = F::of(k as f64);
    let group_means: Vec<F> = per_fold_tprs
        .iter()
        .map(|g| g.iter().copied().sum::<F>() / kf)
        .collect();
    let mut ss_within = F::zero();
    for (g, mean) in per_fold_tprs.iter().zip(&group_means) {
        for &x in g {
            let d = x - *mean;
            ss_within += d * d;
        }
    }
    let df = m * (k - 1);
    let ms_within = ss_within / F::of(df as f64);

    let q = studentized_range_quantile(1.0 - alpha, m, df)?;
    let q_critical = F::of(q);
    let hsd = q_critical * (ms_within / kf).sqrt();
    let half_width = q_critical / F::of(std::f64::consts::SQRT_2) * (ms_within / kf).sqrt();

    let mut significant = vec![vec![false; m]; m];
    for i in 0..m {
        for j in 0..m {
            if i != j {
                significant[i][j] = (group_means[i] - group_means[j]).abs() > hsd;
            }
        }
    }

    Ok(TukeyOutcome {
        group_means,
        half_width,
        ms_within,
        q_critical,
        significant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::student_t_quantile;

    #[test]
    fn identical_groups_not_significant() {
        let folds = vec![vec![0.5, 0.6, 0.55, 0.52], vec![0.5, 0.6, 0.55, 0.52]];
        let out = tukey_tpr_test(&folds, 0.05).unwrap();
        assert!(!out.significant[0][1]);
        assert_eq!(out.group_means[0], out.group_means[1]);
    }

    #[test]
    fn critical_value_matches_t_identity_m2_k10() {
        // q(0.95; 2, 18) = sqrt(2) * t_{0.975, 18}.
        let folds: Vec<Vec<f64>> = vec![
            (0..10).map(|i| 0.5 + 0.01 * i as f64).collect(),
            (0..10).map(|i| 0.52 + 0.01 * i as f64).collect(),
        ];
        let out = tukey_tpr_test(&folds, 0.05).unwrap();
        let expected = std::f64::consts::SQRT_2 * student_t_quantile(0.975, 18.0);
        assert!((out.q_critical - expected).abs() < 1e-6);
        // Frozen reference: t_{0.975, 18} = 2.10092204.
        assert!((out.q_critical - std::f64::consts::SQRT_2 * 2.100_922_040_241).abs() < 1e-6);
    }

    #[test]
    fn clearly_separated_groups_are_flagged() {
        let folds = vec![
            vec![0.90, 0.91, 0.89, 0.92, 0.90],
            vec![0.40, 0.41, 0.39, 0.42, 0.40],
        ];
        let out = tukey_tpr_test(&folds, 0.05).unwrap();
        assert!(out.significant[0][1]);
        assert!(out.significant[1][0]);
    }

    #[test]
    fn display_halfwidth_scaling() {
        let folds = vec![
            vec![0.50, 0.52, 0.48, 0.51, 0.49, 0.50],
            vec![0.55, 0.57, 0.53, 0.56, 0.54, 0.55],
        ];
        let out = tukey_tpr_test(&folds, 0.05).unwrap();
        let expected =
            out.q_critical / std::f64::consts::SQRT_2 * (out.ms_within / 6.0).sqrt();
        assert!((out.half_width - expected).abs() < 1e-12);
        // Non-overlapping displayed intervals imply a significant pair.
        let gap = (out.group_means[0] - out.group_means[1]).abs();
        if gap > 2.0 * out.half_width {
            assert!(out.significant[0][1]);
        }
    }

    #[test]
    fn too_few_replicates() {
        let err = tukey_tpr_test(&[vec![0.5], vec![0.6]], 0.05).unwrap_err();
        assert!(matches!(err, Error::InsufficientFolds(_)));
    }
}

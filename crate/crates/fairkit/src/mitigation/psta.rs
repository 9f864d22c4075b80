//! Sensitivity-guided per-group threshold adjustment. The overall
//! training sensitivity at the default threshold is a fixed target; each
//! unprivileged group's threshold is swept over a grid and set to the value
//! whose group sensitivity is closest to that target.

use crate::cohort::GroupLabels;
use crate::error::{Error, Result};
use crate::num::Real;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnprivilegedSelection {
    /// Groups whose training TPR at the default threshold is strictly
    /// below the overall sensitivity.
    Auto,
    /// Explicit group levels to adjust.
    Explicit(Vec<String>),
}

#[derive(Debug, Clone)]
pub struct PstaConfig<F> {
    pub grid_step: F,
    pub default_threshold: F,
    pub selection: UnprivilegedSelection,
}

impl<F: Real> Default for PstaConfig<F> {
    fn default() -> Self {
        PstaConfig {
            grid_step: F::of(0.01),
            default_threshold: F::half(),
            selection: UnprivilegedSelection::Auto,
        }
    }
}

impl<F: Real> PstaConfig<F> {
    pub fn validate(&self) -> Result<()> {
        let step = self.grid_step.to64();
        if !(step > 0.0 && step <= 0.5) {
            return Err(Error::InvalidConfig(format!(
                "grid_step must be in (0, 0.5], got {step}"
            )));
        }
        let t = self.default_threshold.to64();
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidConfig(format!(
                "default_threshold must be in [0, 1], got {t}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ThresholdPolicy<F> {
    pub group_names: Vec<String>,
    pub thresholds: Vec<F>,
    pub default_threshold: F,
    pub adjusted: Vec<bool>,
    /// Overall training sensitivity at the default threshold, the sweep
    /// target.
    pub overall_sensitivity: F,
}

impl<F: Real> ThresholdPolicy<F> {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "groups": self.group_names,
            "thresholds": self.thresholds.iter().map(|v| v.to64()).collect::<Vec<_>>(),
            "default_threshold": self.default_threshold.to64(),
            "adjusted": self.adjusted,
            "overall_sensitivity": self.overall_sensitivity.to64(),
        })
    }
}

/// Fraction of the given scores at or above the threshold.
fn sensitivity<F: Real>(pos_scores: &[F], threshold: F) -> F {
    let hits = pos_scores.iter().filter(|&&p| p >= threshold).count();
    F::of(hits as f64) / F::of(pos_scores.len() as f64)
}

pub fn psta_fit<F: Real>(
    p: &[F],
    y: &[u8],
    groups: &GroupLabels,
    config: &PstaConfig<F>,
) -> Result<ThresholdPolicy<F>> {
    config.validate()?;
    if p.len() != y.len() || p.len() != groups.assignment.len() {
        return Err(Error::LengthMismatch(
            "scores, labels, and groups must have equal length".into(),
        ));
    }
    let n_groups = groups.n_groups();
    let mut group_pos: Vec<Vec<F>> = vec![Vec::new(); n_groups];
    let mut group_count = vec![0usize; n_groups];
    let mut all_pos: Vec<F> = Vec::new();
    for i in 0..p.len() {
        let g = groups.assignment[i] as usize;
        group_count[g] += 1;
        if y[i] == 1 {
            group_pos[g].push(p[i]);
            all_pos.push(p[i]);
        }
    }
    for g in 0..n_groups {
        if group_count[g] > 0 && group_pos[g].is_empty() {
            return Err(Error::NoPositivesInGroup(groups.levels[g].clone()));
        }
    }
    if all_pos.is_empty() {
        return Err(Error::NoPositivesInGroup("overall".into()));
    }

    let overall = sensitivity(&all_pos, config.default_threshold);

    let mut adjust = vec![false; n_groups];
    match &config.selection {
        UnprivilegedSelection::Auto => {
            for g in 0..n_groups {
                if group_count[g] > 0
                    && sensitivity(&group_pos[g], config.default_threshold) < overall
                {
                    adjust[g] = true;
                }
            }
        }
        UnprivilegedSelection::Explicit(names) => {
            for name in names {
                let g = groups
                    .levels
                    .iter()
                    .position(|l| l == name)
                    .ok_or_else(|| {
                        Error::InvalidConfig(format!("unknown group level '{name}'"))
                    })?;
                adjust[g] = true;
            }
        }
    }

    // Grid {0, step, 2 step, ..., 1}; the last point is clamped to 1.
    let step = config.grid_step.to64();
    let last = (1.0 / step).ceil() as usize;
    let mut thresholds = vec![config.default_threshold; n_groups];
    for g in 0..n_groups {
        if !adjust[g] || group_count[g] == 0 {
            continue;
        }
        let mut best = F::infinity();
        let mut best_theta = config.default_threshold;
        for i in 0..=last {
            let theta = F::of((i as f64 * step).min(1.0));
            let diff = (sensitivity(&group_pos[g], theta) - overall).abs();
            // <= keeps the largest minimizer under the ascending sweep.
            if diff <= best {
                best = diff;
                best_theta = theta;
            }
        }
        thresholds[g] = best_theta;
    }

    Ok(ThresholdPolicy {
        group_names: groups.levels.clone(),
        thresholds,
        default_threshold: config.default_threshold,
        adjusted: adjust,
        overall_sensitivity: overall,
    })
}

/// Per-group thresholded decisions. Rows whose group has no policy entry
/// use the default threshold; the count of such fallbacks is returned.
pub fn apply_thresholds<F: Real>(
    p: &[F],
    assignment: &[u32],
    policy: &ThresholdPolicy<F>,
) -> (Vec<u8>, usize) {
    let mut fallbacks = 0usize;
    let preds = p
        .iter()
        .zip(assignment)
        .map(|(&pi, &g)| {
            let theta = match policy.thresholds.get(g as usize) {
                Some(&t) => t,
                None => {
                    fallbacks += 1;
                    policy.default_threshold
                }
            };
            u8::from(pi >= theta)
        })
        .collect();
    if fallbacks > 0 {
        log::warn!("{fallbacks} rows from groups absent in the threshold policy");
    }
    (preds, fallbacks)
}

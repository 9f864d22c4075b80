//! Calibrated-odds mixing: equalize the generalized false-negative rate
//! between groups by randomly replacing a fraction of one group's scores
//! with its base rate. The group with the smaller generalized FNR is
//! degraded toward the larger one; equal recall is the cost constraint.

use crate::cohort::GroupLabels;
use crate::error::{Error, Result};
use crate::num::Real;
use crate::rng::SplitMix64;

/// Per-group mixing policy. `mix_rate[g]` is the probability of replacing
/// a score from group g by that group's base rate `base_rate[g]`.
#[derive(Debug, Clone)]
pub struct CppPolicy<F> {
    pub group_names: Vec<String>,
    pub mix_rate: Vec<F>,
    pub base_rate: Vec<F>,
    /// Training generalized FNR per group, mean over positives of (1 - p).
    pub generalized_fnr: Vec<F>,
}

/// Solves g_x (1 - alpha) + (1 - mu_x) alpha = g_target for the groups
/// below the maximum generalized FNR; the maximal group keeps alpha = 0.
pub fn cpp_fit<F: Real>(p: &[F], y: &[u8], groups: &GroupLabels) -> Result<CppPolicy<F>> {
    if p.len() != y.len() || p.len() != groups.assignment.len() {
        return Err(Error::LengthMismatch(
            "scores, labels, and groups must have equal length".into(),
        ));
    }
    let n_groups = groups.n_groups();
    let mut pos_mass = vec![0usize; n_groups];
    let mut count = vec![0usize; n_groups];
    let mut fnr_sum = vec![F::zero(); n_groups];
    for i in 0..p.len() {
        let g = groups.assignment[i] as usize;
        count[g] += 1;
        if y[i] == 1 {
            pos_mass[g] += 1;
            fnr_sum[g] += F::one() - p[i];
        }
    }

    let mut gfnr = vec![F::zero(); n_groups];
    let mut mu = vec![F::zero(); n_groups];
    for g in 0..n_groups {
        if count[g] == 0 {
            continue;
        }
        if pos_mass[g] == 0 {
            return Err(Error::NoPositivesInGroup(groups.levels[g].clone()));
        }
        gfnr[g] = fnr_sum[g] / F::of(pos_mass[g] as f64);
        mu[g] = F::of(pos_mass[g] as f64) / F::of(count[g] as f64);
    }

    let target = (0..n_groups)
        .filter(|&g| count[g] > 0)
        .map(|g| gfnr[g])
        .fold(F::zero(), |a, b| if b > a { b } else { a });

    let mut mix_rate = vec![F::zero(); n_groups];
    for g in 0..n_groups {
        if count[g] == 0 {
            continue;
        }
        let gap = target - gfnr[g];
        if gap <= F::zero() {
            continue;
        }
        // Mixing toward the base rate moves gFNR toward 1 - mu; if even a
        // full mix cannot reach the target the rate clips to 1.
        let reach = (F::one() - mu[g]) - gfnr[g];
        mix_rate[g] = if reach <= gap {
            F::one()
        } else {
            gap / reach
        };
    }

    Ok(CppPolicy {
        group_names: groups.levels.clone(),
        mix_rate,
        base_rate: mu,
        generalized_fnr: gfnr,
    })
}

impl<F: Real> CppPolicy<F> {
    /// Seeded randomized application: each score is independently replaced
    /// by its group's base rate with probability mix_rate.
    pub fn apply_randomized(&self, p: &[F], assignment: &[u32], seed: u64) -> Vec<F> {
        let mut rng = SplitMix64::new(seed);
        p.iter()
            .zip(assignment)
            .map(|(&pi, &g)| {
                let g = g as usize;
                if g >= self.mix_rate.len() {
                    return pi;
                }
                if rng.bernoulli(self.mix_rate[g].to64()) {
                    self.base_rate[g]
                } else {
                    pi
                }
            })
            .collect()
    }

    /// Closed-form expectation of the randomized mix:
    /// (1 - alpha) p + alpha mu. Deterministic, used for reported metrics.
    pub fn apply_expected(&self, p: &[F], assignment: &[u32]) -> Vec<F> {
        p.iter()
            .zip(assignment)
            .map(|(&pi, &g)| {
                let g = g as usize;
                if g >= self.mix_rate.len() {
                    return pi;
                }
                let a = self.mix_rate[g];
                (F::one() - a) * pi + a * self.base_rate[g]
            })
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "groups": self.group_names,
            "mix_rate": self.mix_rate.iter().map(|v| v.to64()).collect::<Vec<_>>(),
            "base_rate": self.base_rate.iter().map(|v| v.to64()).collect::<Vec<_>>(),
            "generalized_fnr": self.generalized_fnr.iter().map(|v| v.to64()).collect::<Vec<_>>(),
        })
    }
}

//! Synthetic cohort generation with controlled subgroup sizes, per-group
//! outcome prevalences, and an optional protected-attribute proxy feature.
//! Cohorts are fully determined by the spec's seed.

use serde::{Deserialize, Serialize};

use crate::cohort::{Cohort, ColumnData, ColumnSpec, Role, Schema};
use crate::error::{Error, Result};
use crate::num::Real;
use crate::rng::SplitMix64;
use crate::stats::expected_sigmoid;

/// Strength of the latent risk factor in the outcome model. A sample's
/// outcome probability is sigmoid(intercept_g + RISK_SCALE * r) with
/// r ~ N(0,1); intercepts are solved per group to hit the prevalence
/// targets.
const RISK_SCALE: f64 = 3.0;

/// Mean shift the outcome adds to every informative numeric feature:
/// x_j = OUTCOME_EFFECT * y + noise_scale * N(0,1). Because positives look
/// the same in every group, any group-conditional score difference a model
/// exhibits stems from the prevalence gap alone.
const OUTCOME_EFFECT: f64 = 1.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupSpec {
    pub label: String,
    pub proportion: f64,
    pub prevalence: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CohortSpec {
    pub n: usize,
    pub groups: Vec<GroupSpec>,
    pub n_numeric: usize,
    /// Correlation between the proxy feature and group membership, in
    /// [0, 1].
    pub proxy_strength: f64,
    pub noise_scale: f64,
    pub seed: u64,
}

impl CohortSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 100 {
            return Err(Error::SpecInvalid(format!(
                "n must be at least 100, got {}",
                self.n
            )));
        }
        if self.groups.len() < 2 {
            return Err(Error::SpecInvalid("need at least two groups".into()));
        }
        let total: f64 = self.groups.iter().map(|g| g.proportion).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::SpecInvalid(format!(
                "group proportions sum to {total}, expected 1"
            )));
        }
        for g in &self.groups {
            if !(g.proportion > 0.0) {
                return Err(Error::SpecInvalid(format!(
                    "group '{}' has non-positive proportion",
                    g.label
                )));
            }
            if !(g.prevalence > 0.0 && g.prevalence < 1.0) {
                return Err(Error::SpecInvalid(format!(
                    "group '{}' prevalence must be in (0, 1)",
                    g.label
                )));
            }
        }
        if self.n_numeric == 0 {
            return Err(Error::SpecInvalid("n_numeric must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.proxy_strength) {
            return Err(Error::SpecInvalid(format!(
                "proxy_strength must be in [0, 1], got {}",
                self.proxy_strength
            )));
        }
        if !(self.noise_scale > 0.0) {
            return Err(Error::SpecInvalid(format!(
                "noise_scale must be positive, got {}",
                self.noise_scale
            )));
        }
        Ok(())
    }

    /// Demo spec mirroring a two-group cohort with a 10% vs 4% prevalence
    /// gap.
    pub fn demo(n: usize, seed: u64) -> Self {
        CohortSpec {
            n,
            groups: vec![
                GroupSpec {
                    label: "A".into(),
                    proportion: 0.5,
                    prevalence: 0.10,
                },
                GroupSpec {
                    label: "B".into(),
                    proportion: 0.5,
                    prevalence: 0.04,
                },
            ],
            n_numeric: 4,
            proxy_strength: 0.5,
            noise_scale: 0.8,
            seed,
        }
    }
}

/// Intercept b with E_{r~N(0,1)}[sigmoid(b + RISK_SCALE * r)] equal to the
/// target prevalence, solved by bisection to 1e-4 on the prevalence scale.
pub fn solve_intercept(prevalence: f64) -> f64 {
    let (mut lo, mut hi) = (-40.0, 40.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let value = expected_sigmoid(RISK_SCALE, mid);
        if (value - prevalence).abs() < 1e-4 {
            return mid;
        }
        if value < prevalence {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn generate_cohort(spec: &CohortSpec) -> Result<Cohort> {
    spec.validate()?;
    let mut rng = SplitMix64::stream(spec.seed, 0xC0F0);
    let k = spec.groups.len();

    let intercepts: Vec<f64> = spec
        .groups
        .iter()
        .map(|g| solve_intercept(g.prevalence))
        .collect();

    // Theoretical moments of the group index, for standardizing the proxy
    // signal independent of the realized sample.
    let mean_idx: f64 = spec
        .groups
        .iter()
        .enumerate()
        .map(|(i, g)| i as f64 * g.proportion)
        .sum();
    let var_idx: f64 = spec
        .groups
        .iter()
        .enumerate()
        .map(|(i, g)| (i as f64 - mean_idx).powi(2) * g.proportion)
        .sum();
    let sd_idx = var_idx.sqrt().max(1e-12);

    let cumulative: Vec<f64> = spec
        .groups
        .iter()
        .scan(0.0, |acc, g| {
            *acc += g.proportion;
            Some(*acc)
        })
        .collect();

    let mut group = Vec::with_capacity(spec.n);
    let mut outcome = Vec::with_capacity(spec.n);
    let mut features: Vec<Vec<Option<f64>>> =
        vec![Vec::with_capacity(spec.n); spec.n_numeric];
    let mut proxy = Vec::with_capacity(spec.n);

    // proxy = c * standardized(group index) + N(0,1), with c chosen so
    // corr(proxy, group) = proxy_strength; proxy_strength 1 drops the
    // noise term entirely.
    let rho = spec.proxy_strength;
    let exact = (1.0 - rho * rho).abs() < 1e-12;
    let c = if exact {
        1.0
    } else {
        rho / (1.0 - rho * rho).sqrt()
    };

    for _ in 0..spec.n {
        let u = rng.next_f64();
        let g = cumulative
            .iter()
            .position(|&edge| u < edge)
            .unwrap_or(k - 1);
        group.push(Some(g as u32));

        let risk = rng.next_normal();
        let p = (intercepts[g] + RISK_SCALE * risk).sigmoid();
        let y = u8::from(rng.bernoulli(p));
        outcome.push(Some(f64::from(y)));

        for column in features.iter_mut() {
            let shift = OUTCOME_EFFECT * f64::from(y);
            column.push(Some(shift + spec.noise_scale * rng.next_normal()));
        }

        let signal = (g as f64 - mean_idx) / sd_idx;
        let noise = rng.next_normal();
        proxy.push(Some(if exact { signal } else { c * signal + noise }));
    }

    let mut columns = Vec::with_capacity(spec.n_numeric + 3);
    let mut data = Vec::with_capacity(spec.n_numeric + 3);
    for (j, values) in features.into_iter().enumerate() {
        columns.push(ColumnSpec::numeric(&format!("x{}", j + 1), Role::Feature));
        data.push(ColumnData::Numeric(values));
    }
    columns.push(ColumnSpec::numeric("proxy", Role::Feature));
    data.push(ColumnData::Numeric(proxy));
    let levels: Vec<&str> = spec.groups.iter().map(|g| g.label.as_str()).collect();
    columns.push(ColumnSpec::categorical("group", Role::Protected, &levels));
    data.push(ColumnData::Categorical(group));
    columns.push(ColumnSpec::numeric("outcome", Role::Outcome));
    data.push(ColumnData::Numeric(outcome));

    Cohort::from_columns(Schema::new(columns)?, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::ColumnData;

    #[test]
    fn intercepts_hit_targets_analytically() {
        for prev in [0.04, 0.10, 0.30, 0.50, 0.90] {
            let b = solve_intercept(prev);
            assert!(
                (expected_sigmoid(RISK_SCALE, b) - prev).abs() < 1e-4,
                "prevalence {prev}"
            );
        }
    }

    #[test]
    fn empirical_prevalences_match_targets() {
        let cohort = generate_cohort(&CohortSpec::demo(20_000, 7)).unwrap();
        let groups = cohort.group_labels("group").unwrap();
        let y = cohort.outcome();
        for (g, target) in [(0u32, 0.10), (1, 0.04)] {
            let rows: Vec<usize> = (0..cohort.n())
                .filter(|&i| groups.assignment[i] == g)
                .collect();
            let prev =
                rows.iter().filter(|&&i| y[i] == 1).count() as f64 / rows.len() as f64;
            assert!((prev - target).abs() < 0.01, "group {g}: {prev}");
        }
    }

    #[test]
    fn zero_proxy_strength_gives_uncorrelated_proxy() {
        let mut spec = CohortSpec::demo(20_000, 11);
        spec.proxy_strength = 0.0;
        let cohort = generate_cohort(&spec).unwrap();
        let groups = cohort.group_labels("group").unwrap();
        let proxy = match cohort.column_data("proxy").unwrap() {
            ColumnData::Numeric(v) => v,
            _ => unreachable!(),
        };
        let n = cohort.n() as f64;
        let xs: Vec<f64> = proxy.iter().map(|v| v.unwrap()).collect();
        let gs: Vec<f64> = groups.assignment.iter().map(|&g| g as f64).collect();
        let mx = xs.iter().sum::<f64>() / n;
        let mg = gs.iter().sum::<f64>() / n;
        let cov: f64 = xs
            .iter()
            .zip(&gs)
            .map(|(x, g)| (x - mx) * (g - mg))
            .sum::<f64>()
            / n;
        let vx = xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>() / n;
        let vg = gs.iter().map(|g| (g - mg).powi(2)).sum::<f64>() / n;
        let corr = cov / (vx * vg).sqrt();
        assert!(corr.abs() <= 0.03, "corr = {corr}");
    }

    #[test]
    fn strong_proxy_is_correlated() {
        let cohort = generate_cohort(&CohortSpec::demo(20_000, 13)).unwrap();
        let groups = cohort.group_labels("group").unwrap();
        let proxy = match cohort.column_data("proxy").unwrap() {
            ColumnData::Numeric(v) => v,
            _ => unreachable!(),
        };
        let n = cohort.n() as f64;
        let xs: Vec<f64> = proxy.iter().map(|v| v.unwrap()).collect();
        let gs: Vec<f64> = groups.assignment.iter().map(|&g| g as f64).collect();
        let mx = xs.iter().sum::<f64>() / n;
        let mg = gs.iter().sum::<f64>() / n;
        let cov: f64 = xs
            .iter()
            .zip(&gs)
            .map(|(x, g)| (x - mx) * (g - mg))
            .sum::<f64>()
            / n;
        let vx = xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>() / n;
        let vg = gs.iter().map(|g| (g - mg).powi(2)).sum::<f64>() / n;
        let corr = cov / (vx * vg).sqrt();
        assert!((corr - 0.5).abs() < 0.05, "corr = {corr}");
    }

    #[test]
    fn identical_seeds_give_identical_cohorts() {
        let a = generate_cohort(&CohortSpec::demo(500, 3)).unwrap();
        let b = generate_cohort(&CohortSpec::demo(500, 3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut spec = CohortSpec::demo(500, 1);
        spec.n = 50;
        assert!(matches!(
            generate_cohort(&spec).unwrap_err(),
            Error::SpecInvalid(_)
        ));
        let mut spec = CohortSpec::demo(500, 1);
        spec.groups[0].proportion = 0.7;
        assert!(generate_cohort(&spec).is_err());
        let mut spec = CohortSpec::demo(500, 1);
        spec.groups[1].prevalence = 0.0;
        assert!(generate_cohort(&spec).is_err());
        let mut spec = CohortSpec::demo(500, 1);
        spec.proxy_strength = 1.5;
        assert!(generate_cohort(&spec).is_err());
    }
}

//! Weighted L2-regularized logistic regression fit by Newton steps with
//! backtracking line search, falling back to gradient descent when a step
//! is not finite or the Hessian is not positive definite.
//!
//! The objective is the weight-normalized negative log-likelihood
//!   (1/W) sum_i w_i l_i(beta) + (l2/2) ||coefficients||^2
//! with W the total weight and the intercept unpenalized. Normalizing by
//! W makes the fit invariant to rescaling all weights by a constant.

use crate::cohort::EncodedMatrix;
use crate::error::{Error, Result};
use crate::num::Real;

use super::linalg::solve_spd;

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticConfig<F> {
    pub l2_strength: F,
    pub max_iterations: usize,
    pub tolerance: F,
    /// Z-score features on training data before fitting.
    pub standardize: bool,
}

impl<F: Real> Default for LogisticConfig<F> {
    fn default() -> Self {
        Self {
            l2_strength: F::of(1e-3),
            max_iterations: 100,
            tolerance: F::of(1e-8),
            standardize: true,
        }
    }
}

impl<F: Real> LogisticConfig<F> {
    pub fn validate(&self) -> Result<()> {
        if self.l2_strength < F::zero() {
            return Err(Error::InvalidConfig("l2_strength must be >= 0".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be >= 1".into()));
        }
        if self.tolerance <= F::zero() {
            return Err(Error::InvalidConfig("tolerance must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel<F> {
    /// Coefficients in the (possibly standardized) training feature space.
    pub coefficients: Vec<F>,
    pub intercept: F,
    /// Per-feature (mean, scale) when the fit standardized its inputs.
    pub standardization: Option<Vec<(F, F)>>,
    /// Weighted standard deviation of each raw training feature; used for
    /// the importance ranking.
    pub feature_stds: Vec<F>,
    pub converged: bool,
}

impl<F: Real> LogisticModel<F> {
    pub fn decision(&self, row: &[F]) -> F {
        let mut z = self.intercept;
        match &self.standardization {
            Some(std) => {
                for (j, &x) in row.iter().enumerate() {
                    let (mean, scale) = std[j];
                    z += self.coefficients[j] * ((x - mean) / scale);
                }
            }
            None => {
                for (j, &x) in row.iter().enumerate() {
                    z += self.coefficients[j] * x;
                }
            }
        }
        z
    }

    pub fn predict_row(&self, row: &[F]) -> F {
        self.decision(row).sigmoid()
    }

    /// Coefficient on the raw (unstandardized) feature scale.
    pub fn raw_coefficient(&self, j: usize) -> F {
        match &self.standardization {
            Some(std) => self.coefficients[j] / std[j].1,
            None => self.coefficients[j],
        }
    }
}

/// Value, coefficient gradient, and intercept gradient of the logistic
/// objective at an arbitrary parameter point. Exposed so tests can check
/// the analytic gradient against finite differences.
pub fn logistic_objective<F: Real>(
    x: &EncodedMatrix<F>,
    y: &[u8],
    w: &[F],
    l2: F,
    coefficients: &[F],
    intercept: F,
) -> (F, Vec<F>, F) {
    let n = x.n;
    let p = x.p;
    let total_weight: F = w.iter().copied().sum();
    let mut loss = F::zero();
    let mut grad = vec![F::zero(); p];
    let mut grad_intercept = F::zero();
    for i in 0..n {
        let row = x.row(i);
        let mut z = intercept;
        for j in 0..p {
            z += coefficients[j] * row[j];
        }
        let yi = F::of(y[i] as f64);
        // Stable log(1 + e^z) - y z.
        let softplus = if z > F::zero() {
            z + (-z).exp().ln_1p()
        } else {
            z.exp().ln_1p()
        };
        loss += w[i] * (softplus - yi * z);
        let residual = w[i] * (z.sigmoid() - yi);
        for j in 0..p {
            grad[j] += residual * row[j];
        }
        grad_intercept += residual;
    }
    loss = loss / total_weight;
    grad_intercept = grad_intercept / total_weight;
    for j in 0..p {
        grad[j] = grad[j] / total_weight + l2 * coefficients[j];
        loss += F::half() * l2 * coefficients[j] * coefficients[j];
    }
    (loss, grad, grad_intercept)
}

/// Weighted mean and standard deviation per feature column.
pub(crate) fn weighted_moments<F: Real>(x: &EncodedMatrix<F>, w: &[F]) -> Vec<(F, F)> {
    let total: F = w.iter().copied().sum();
    let mut moments = Vec::with_capacity(x.p);
    for j in 0..x.p {
        let mut mean = F::zero();
        for i in 0..x.n {
            mean += w[i] * x.row(i)[j];
        }
        mean = mean / total;
        let mut var = F::zero();
        for i in 0..x.n {
            let d = x.row(i)[j] - mean;
            var += w[i] * d * d;
        }
        var = var / total;
        moments.push((mean, var.sqrt()));
    }
    moments
}

pub fn train_logistic<F: Real>(
    x: &EncodedMatrix<F>,
    y: &[u8],
    w: &[F],
    cfg: &LogisticConfig<F>,
) -> Result<LogisticModel<F>> {
    cfg.validate()?;
    if x.n != y.len() || x.n != w.len() {
        return Err(Error::LengthMismatch(format!(
            "X has {} rows, y {}, w {}",
            x.n,
            y.len(),
            w.len()
        )));
    }
    let has_pos = y.iter().zip(w).any(|(&yi, &wi)| yi == 1 && wi > F::zero());
    let has_neg = y.iter().zip(w).any(|(&yi, &wi)| yi == 0 && wi > F::zero());
    if !has_pos || !has_neg {
        return Err(Error::DegenerateLabels);
    }

    let raw_moments = weighted_moments(x, w);
    let feature_stds: Vec<F> = raw_moments.iter().map(|&(_, s)| s).collect();

    // Materialize the working matrix (standardized when requested).
    let (work, standardization) = if cfg.standardize {
        let std: Vec<(F, F)> = raw_moments
            .iter()
            .map(|&(m, s)| (m, if s > F::zero() { s } else { F::one() }))
            .collect();
        let mut data = x.data.clone();
        for i in 0..x.n {
            for j in 0..x.p {
                let (m, s) = std[j];
                data[i * x.p + j] = (data[i * x.p + j] - m) / s;
            }
        }
        (
            EncodedMatrix {
                n: x.n,
                p: x.p,
                data,
                names: x.names.clone(),
            },
            Some(std),
        )
    } else {
        (x.clone(), None)
    };

    let n = work.n;
    let p = work.p;
    let total_weight: F = w.iter().copied().sum();
    let l2 = cfg.l2_strength;
    let mut beta = vec![F::zero(); p];
    let mut intercept = F::zero();
    let mut converged = false;

    let objective = |beta: &[F], intercept: F| -> (F, Vec<F>, F) {
        logistic_objective(&work, y, w, l2, beta, intercept)
    };

    let (mut loss, mut grad, mut grad_int) = objective(&beta, intercept);
    for _ in 0..cfg.max_iterations {
        let grad_norm = grad
            .iter()
            .chain(std::iter::once(&grad_int))
            .fold(F::zero(), |acc, g| acc.max(g.abs()));
        if grad_norm <= cfg.tolerance {
            converged = true;
            break;
        }

        // Hessian over (coefficients, intercept).
        let dim = p + 1;
        let mut hess = vec![F::zero(); dim * dim];
        for i in 0..n {
            let row = work.row(i);
            let mut z = intercept;
            for j in 0..p {
                z += beta[j] * row[j];
            }
            let prob = z.sigmoid();
            let d = w[i] * prob * (F::one() - prob) / total_weight;
            for a in 0..p {
                let da = d * row[a];
                for b in 0..=a {
                    hess[a * dim + b] += da * row[b];
                }
                hess[p * dim + a] += da;
            }
            hess[p * dim + p] += d;
        }
        for a in 0..p {
            hess[a * dim + a] += l2;
            for b in (a + 1)..dim {
                hess[a * dim + b] = hess[b * dim + a];
            }
        }

        let mut rhs: Vec<F> = grad.clone();
        rhs.push(grad_int);
        let newton = solve_spd(&hess, &rhs, dim);
        let direction: Vec<F> = match newton {
            Some(step) if step.iter().all(|s| s.is_finite()) => {
                step.iter().map(|&s| -s).collect()
            }
            _ => rhs.iter().map(|&g| -g).collect(), // gradient fallback
        };

        // Armijo backtracking.
        let slope: F = rhs
            .iter()
            .zip(&direction)
            .map(|(&g, &d)| g * d)
            .sum::<F>();
        let c1 = F::of(1e-4);
        let mut step_size = F::one();
        let mut accepted = None;
        for _ in 0..60 {
            let trial_beta: Vec<F> = beta
                .iter()
                .zip(&direction)
                .map(|(&b, &d)| b + step_size * d)
                .collect();
            let trial_intercept = intercept + step_size * direction[p];
            let (trial_loss, trial_grad, trial_grad_int) =
                objective(&trial_beta, trial_intercept);
            if trial_loss.is_finite() && trial_loss <= loss + c1 * step_size * slope {
                accepted = Some((trial_beta, trial_intercept, trial_loss, trial_grad, trial_grad_int));
                break;
            }
            step_size = step_size * F::half();
        }
        match accepted {
            Some((b, i0, l, g, gi)) => {
                beta = b;
                intercept = i0;
                loss = l;
                grad = g;
                grad_int = gi;
            }
            None => break, // no descent possible at fp precision
        }
    }
    let grad_norm = grad
        .iter()
        .chain(std::iter::once(&grad_int))
        .fold(F::zero(), |acc, g| acc.max(g.abs()));
    if grad_norm <= cfg.tolerance {
        converged = true;
    }
    if !converged {
        log::warn!("logistic fit did not reach tolerance; returning flagged model");
    }

    Ok(LogisticModel {
        coefficients: beta,
        intercept,
        standardization,
        feature_stds,
        converged,
    })
}

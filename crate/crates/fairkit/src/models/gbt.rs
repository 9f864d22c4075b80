//! Gradient-boosted decision trees on the logistic loss, fit by
//! second-order (Newton) boosting. Trees are grown greedily by weighted
//! gain with exact split enumeration; sample weights multiply per-sample
//! gradients and hessians.

use crate::cohort::EncodedMatrix;
use crate::error::{Error, Result};
use crate::num::Real;

/// Small hessian ridge guarding leaf values and gains.
const HESSIAN_RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GbtConfig<F> {
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: F,
    pub min_child_weight: F,
    pub subsample_seed: u64,
}

impl<F: Real> Default for GbtConfig<F> {
    fn default() -> Self {
        Self {
            rounds: 50,
            max_depth: 3,
            learning_rate: F::of(0.1),
            min_child_weight: F::one(),
            subsample_seed: 0,
        }
    }
}

impl<F: Real> GbtConfig<F> {
    pub fn validate(&self) -> Result<()> {
        if self.rounds < 1 {
            return Err(Error::InvalidConfig("rounds must be >= 1".into()));
        }
        if self.max_depth < 1 {
            return Err(Error::InvalidConfig("max_depth must be >= 1".into()));
        }
        if self.learning_rate <= F::zero() || self.learning_rate > F::one() {
            return Err(Error::InvalidConfig("learning_rate must be in (0, 1]".into()));
        }
        if self.min_child_weight < F::zero() {
            return Err(Error::InvalidConfig("min_child_weight must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node<F> {
    Split {
        feature: usize,
        threshold: F,
        left: usize,
        right: usize,
    },
    Leaf {
        value: F,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree<F> {
    pub nodes: Vec<Node<F>>,
}

impl<F: Real> Tree<F> {
    pub fn predict_row(&self, row: &[F]) -> F {
        let mut idx = 0usize;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if row[*feature] < *threshold { *left } else { *right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GbtModel<F> {
    /// Initial log-odds.
    pub base_score: F,
    pub trees: Vec<Tree<F>>,
    /// Total split gain accumulated per feature.
    pub feature_gain: Vec<F>,
}

impl<F: Real> GbtModel<F> {
    pub fn decision(&self, row: &[F]) -> F {
        let mut margin = self.base_score;
        for tree in &self.trees {
            margin += tree.predict_row(row);
        }
        margin
    }

    pub fn predict_row(&self, row: &[F]) -> F {
        self.decision(row).sigmoid()
    }
}

struct TreeBuilder<'a, F> {
    x: &'a EncodedMatrix<F>,
    grad: &'a [F],
    hess: &'a [F],
    cfg: &'a GbtConfig<F>,
    ridge: F,
    nodes: Vec<Node<F>>,
    feature_gain: Vec<F>,
}

impl<'a, F: Real> TreeBuilder<'a, F> {
    fn leaf_value(&self, g: F, h: F) -> F {
        -(g / (h + self.ridge)) * self.cfg.learning_rate
    }

    fn build(&mut self, indices: &[usize], depth: usize) -> usize {
        let g_total: F = indices.iter().map(|&i| self.grad[i]).sum();
        let h_total: F = indices.iter().map(|&i| self.hess[i]).sum();
        if depth >= self.cfg.max_depth || indices.len() < 2 {
            let id = self.nodes.len();
            self.nodes.push(Node::Leaf {
                value: self.leaf_value(g_total, h_total),
            });
            return id;
        }

        let parent_score = g_total * g_total / (h_total + self.ridge);
        let mut best: Option<(F, usize, F)> = None; // (gain, feature, threshold)
        let mut order: Vec<usize> = indices.to_vec();
        for feature in 0..self.x.p {
            order.sort_by(|&a, &b| {
                self.x.row(a)[feature]
                    .partial_cmp(&self.x.row(b)[feature])
                    .expect("finite features")
            });
            let mut g_left = F::zero();
            let mut h_left = F::zero();
            for pos in 0..order.len() - 1 {
                let i = order[pos];
                g_left += self.grad[i];
                h_left += self.hess[i];
                let here = self.x.row(i)[feature];
                let next = self.x.row(order[pos + 1])[feature];
                if here == next {
                    continue;
                }
                let h_right = h_total - h_left;
                if h_left < self.cfg.min_child_weight || h_right < self.cfg.min_child_weight {
                    continue;
                }
                let g_right = g_total - g_left;
                let gain = F::half()
                    * (g_left * g_left / (h_left + self.ridge)
                        + g_right * g_right / (h_right + self.ridge)
                        - parent_score);
                let threshold = (here + next) * F::half();
                if best.map_or(true, |(bg, _, _)| gain > bg) {
                    best = Some((gain, feature, threshold));
                }
            }
        }

        match best {
            Some((gain, feature, threshold)) if gain > F::of(1e-12) => {
                self.feature_gain[feature] += gain;
                let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
                    .iter()
                    .partition(|&&i| self.x.row(i)[feature] < threshold);
                let id = self.nodes.len();
                self.nodes.push(Node::Leaf { value: F::zero() }); // placeholder
                let left = self.build(&left_idx, depth + 1);
                let right = self.build(&right_idx, depth + 1);
                self.nodes[id] = Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                };
                id
            }
            _ => {
                let id = self.nodes.len();
                self.nodes.push(Node::Leaf {
                    value: self.leaf_value(g_total, h_total),
                });
                id
            }
        }
    }
}

pub fn train_gbt<F: Real>(
    x: &EncodedMatrix<F>,
    y: &[u8],
    w: &[F],
    cfg: &GbtConfig<F>,
) -> Result<GbtModel<F>> {
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

    let total_weight: F = w.iter().copied().sum();
    let pos_weight: F = y
        .iter()
        .zip(w)
        .filter(|(&yi, _)| yi == 1)
        .map(|(_, &wi)| wi)
        .sum();
    let prior = (pos_weight / total_weight)
        .max(F::of(1e-6))
        .min(F::of(1.0 - 1e-6));
    let base_score = (prior / (F::one() - prior)).ln();

    let mut margins = vec![base_score; x.n];
    let mut trees = Vec::with_capacity(cfg.rounds);
    let mut feature_gain = vec![F::zero(); x.p];
    let ridge = F::of(HESSIAN_RIDGE);
    let all_indices: Vec<usize> = (0..x.n).collect();

    for _ in 0..cfg.rounds {
        let mut grad = vec![F::zero(); x.n];
        let mut hess = vec![F::zero(); x.n];
        for i in 0..x.n {
            let prob = margins[i].sigmoid();
            grad[i] = w[i] * (prob - F::of(y[i] as f64));
            hess[i] = w[i] * prob * (F::one() - prob);
        }
        let mut builder = TreeBuilder {
            x,
            grad: &grad,
            hess: &hess,
            cfg,
            ridge,
            nodes: Vec::new(),
            feature_gain: vec![F::zero(); x.p],
        };
        builder.build(&all_indices, 0);
        let tree = Tree {
            nodes: builder.nodes,
        };
        for j in 0..x.p {
            feature_gain[j] += builder.feature_gain[j];
        }
        for i in 0..x.n {
            margins[i] += tree.predict_row(x.row(i));
        }
        trees.push(tree);
    }

    Ok(GbtModel {
        base_score,
        trees,
        feature_gain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: Vec<Vec<f64>>) -> EncodedMatrix<f64> {
        let names = (0..rows[0].len()).map(|j| format!("x{j}")).collect();
        EncodedMatrix::from_rows(rows, names)
    }

    fn training_loss(model: &GbtModel<f64>, x: &EncodedMatrix<f64>, y: &[u8]) -> f64 {
        (0..x.n)
            .map(|i| {
                let p = model.predict_row(x.row(i)).clamp(1e-12, 1.0 - 1e-12);
                if y[i] == 1 {
                    -p.ln()
                } else {
                    -(1.0 - p).ln()
                }
            })
            .sum::<f64>()
            / x.n as f64
    }

    #[test]
    fn one_stump_fits_step_data() {
        let x = matrix((0..10).map(|i| vec![i as f64]).collect());
        let y: Vec<u8> = (0..10).map(|i| u8::from(i >= 5)).collect();
        let w = vec![1.0; 10];
        let cfg = GbtConfig {
            rounds: 1,
            max_depth: 1,
            learning_rate: 1.0,
            min_child_weight: 0.0,
            subsample_seed: 0,
        };
        let model = train_gbt(&x, &y, &w, &cfg).unwrap();
        let correct = (0..10)
            .filter(|&i| (model.predict_row(x.row(i)) >= 0.5) == (y[i] == 1))
            .count();
        assert!(correct as f64 / 10.0 > 0.5, "stump must beat majority class");
    }

    #[test]
    fn zero_rounds_rejected() {
        let cfg = GbtConfig::<f64> {
            rounds: 0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn probabilities_in_unit_interval() {
        let mut rng = crate::rng::SplitMix64::new(3);
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|_| vec![rng.next_normal(), rng.next_normal()])
            .collect();
        let y: Vec<u8> = (0..60).map(|_| u8::from(rng.bernoulli(0.4))).collect();
        let x = matrix(rows);
        let model = train_gbt(&x, &y, &vec![1.0; 60], &GbtConfig::default()).unwrap();
        for i in 0..60 {
            let p = model.predict_row(x.row(i));
            assert!((0.0..=1.0).contains(&p));
        }
    }

    #[test]
    fn weight_duplication_equivalence() {
        let x = matrix(vec![vec![0.5], vec![-1.0], vec![1.2], vec![0.1], vec![2.0], vec![-0.4]]);
        let y = [1, 0, 1, 0, 1, 0];
        let w = [3.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let x_dup = matrix(vec![
            vec![0.5],
            vec![0.5],
            vec![0.5],
            vec![-1.0],
            vec![1.2],
            vec![0.1],
            vec![2.0],
            vec![-0.4],
        ]);
        let y_dup = [1, 1, 1, 0, 1, 0, 1, 0];
        let cfg = GbtConfig {
            rounds: 10,
            max_depth: 2,
            learning_rate: 0.3,
            min_child_weight: 0.0,
            subsample_seed: 0,
        };
        let a = train_gbt(&x, &y, &w, &cfg).unwrap();
        let b = train_gbt(&x_dup, &y_dup, &vec![1.0; 8], &cfg).unwrap();
        for row in [[0.5], [-1.0], [0.7], [3.0]] {
            assert!((a.predict_row(&row) - b.predict_row(&row)).abs() < 1e-10);
        }
    }

    #[test]
    fn training_loss_non_increasing_in_rounds() {
        let mut rng = crate::rng::SplitMix64::new(11);
        let rows: Vec<Vec<f64>> = (0..80)
            .map(|_| vec![rng.next_normal(), rng.next_normal(), rng.next_normal()])
            .collect();
        let y: Vec<u8> = rows
            .iter()
            .map(|r| u8::from(r[0] + 0.5 * r[1] + 0.3 * rng.next_normal() > 0.0))
            .collect();
        let x = matrix(rows);
        let w = vec![1.0; 80];
        let mut previous = f64::INFINITY;
        for rounds in [1, 2, 5, 10, 20] {
            let cfg = GbtConfig {
                rounds,
                max_depth: 2,
                learning_rate: 0.1,
                min_child_weight: 1.0,
                subsample_seed: 0,
            };
            let model = train_gbt(&x, &y, &w, &cfg).unwrap();
            let loss = training_loss(&model, &x, &y);
            assert!(loss <= previous + 1e-12, "rounds={rounds}: {loss} > {previous}");
            previous = loss;
        }
    }

    #[test]
    fn deterministic() {
        let x = matrix(vec![vec![0.5], vec![-1.0], vec![1.2], vec![0.1]]);
        let y = [1, 0, 1, 0];
        let w = [1.0; 4];
        let cfg = GbtConfig::default();
        let a = train_gbt(&x, &y, &w, &cfg).unwrap();
        let b = train_gbt(&x, &y, &w, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stump_gain_lands_on_split_feature() {
        // Only feature 1 is informative.
        let x = matrix(vec![
            vec![1.0, -1.0],
            vec![1.0, -2.0],
            vec![1.0, 1.5],
            vec![1.0, 2.5],
        ]);
        let y = [0, 0, 1, 1];
        let cfg = GbtConfig {
            rounds: 1,
            max_depth: 1,
            learning_rate: 1.0,
            min_child_weight: 0.0,
            subsample_seed: 0,
        };
        let model = train_gbt(&x, &y, &[1.0; 4], &cfg).unwrap();
        assert_eq!(model.feature_gain[0], 0.0);
        assert!(model.feature_gain[1] > 0.0);
    }
}

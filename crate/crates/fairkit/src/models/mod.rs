//! Weighted binary probabilistic classifiers: logistic regression and
//! gradient-boosted trees, with nested-CV grid selection.

mod gbt;
mod grid;
mod linalg;
mod logistic;

pub use gbt::{train_gbt, GbtConfig, GbtModel, Node, Tree};
pub use grid::{grid_search, SelectionMetric};
pub use logistic::{logistic_objective, train_logistic, LogisticConfig, LogisticModel};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cohort::EncodedMatrix;
use crate::error::{Error, Result};
use crate::num::Real;

const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Logistic,
    Gbt,
}

/// Hyper-parameter point for either learner.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelConfig<F> {
    Logistic(LogisticConfig<F>),
    Gbt(GbtConfig<F>),
}

impl<F: Real> ModelConfig<F> {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelConfig::Logistic(_) => ModelKind::Logistic,
            ModelConfig::Gbt(_) => ModelKind::Gbt,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams<F> {
    Logistic(LogisticModel<F>),
    Gbt(GbtModel<F>),
}

/// A fitted classifier. Prediction is a pure function of the parameters
/// and the input row; probabilities are always in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel<F> {
    pub params: ModelParams<F>,
    pub feature_names: Vec<String>,
}

impl<F: Real> TrainedModel<F> {
    pub fn kind(&self) -> ModelKind {
        match self.params {
            ModelParams::Logistic(_) => ModelKind::Logistic,
            ModelParams::Gbt(_) => ModelKind::Gbt,
        }
    }

    fn check_features(&self, x: &EncodedMatrix<F>) -> Result<()> {
        if x.p != self.feature_names.len() {
            return Err(Error::FeatureMismatch {
                expected: self.feature_names.len(),
                got: x.p,
            });
        }
        if !x.names.is_empty() && x.names != self.feature_names {
            return Err(Error::FeatureMismatch {
                expected: self.feature_names.len(),
                got: x.p,
            });
        }
        Ok(())
    }

    pub fn predict_proba(&self, x: &EncodedMatrix<F>) -> Result<Vec<F>> {
        self.check_features(x)?;
        let mut out = Vec::with_capacity(x.n);
        for i in 0..x.n {
            let p = match &self.params {
                ModelParams::Logistic(m) => m.predict_row(x.row(i)),
                ModelParams::Gbt(m) => m.predict_row(x.row(i)),
            };
            out.push(p);
        }
        Ok(out)
    }

    /// Importance scores in descending order, ties kept in feature order.
    /// Logistic: |raw coefficient| x training feature standard deviation;
    /// GBT: total split gain.
    pub fn feature_importance(&self) -> Vec<(String, F)> {
        let scores: Vec<F> = match &self.params {
            ModelParams::Logistic(m) => (0..self.feature_names.len())
                .map(|j| m.raw_coefficient(j).abs() * m.feature_stds[j])
                .collect(),
            ModelParams::Gbt(m) => m.feature_gain.clone(),
        };
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| {
            scores[b]
                .partial_cmp(&scores[a])
                .unwrap()
                .then(a.cmp(&b))
        });
        order
            .into_iter()
            .map(|j| (self.feature_names[j].clone(), scores[j]))
            .collect()
    }

    /// Versioned JSON document describing the fitted parameters.
    pub fn to_json(&self) -> Value {
        let params = match &self.params {
            ModelParams::Logistic(m) => json!({
                "coefficients": m.coefficients.iter().map(|c| c.to64()).collect::<Vec<_>>(),
                "intercept": m.intercept.to64(),
                "converged": m.converged,
            }),
            ModelParams::Gbt(m) => json!({
                "base_score": m.base_score.to64(),
                "trees": m.trees.iter().map(tree_to_json).collect::<Vec<_>>(),
            }),
        };
        let standardization = match &self.params {
            ModelParams::Logistic(m) => m.standardization.as_ref().map(|std| {
                std.iter()
                    .map(|(mean, scale)| json!([mean.to64(), scale.to64()]))
                    .collect::<Vec<_>>()
            }),
            ModelParams::Gbt(_) => None,
        };
        json!({
            "version": MODEL_FORMAT_VERSION,
            "kind": match self.kind() { ModelKind::Logistic => "logistic", ModelKind::Gbt => "gbt" },
            "parameters": params,
            "standardization": standardization,
            "feature_names": self.feature_names,
        })
    }
}

fn tree_to_json<F: Real>(tree: &Tree<F>) -> Value {
    let nodes: Vec<Value> = tree
        .nodes
        .iter()
        .map(|node| match node {
            Node::Leaf { value } => json!({"leaf": value.to64()}),
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => json!({
                "feature": feature,
                "threshold": threshold.to64(),
                "left": left,
                "right": right,
            }),
        })
        .collect();
    json!({ "nodes": nodes })
}

/// Train a model of the configured kind.
pub fn train<F: Real>(
    x: &EncodedMatrix<F>,
    y: &[u8],
    w: &[F],
    config: &ModelConfig<F>,
) -> Result<TrainedModel<F>> {
    let params = match config {
        ModelConfig::Logistic(cfg) => ModelParams::Logistic(train_logistic(x, y, w, cfg)?),
        ModelConfig::Gbt(cfg) => ModelParams::Gbt(train_gbt(x, y, w, cfg)?),
    };
    Ok(TrainedModel {
        params,
        feature_names: x.names.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: Vec<Vec<f64>>) -> EncodedMatrix<f64> {
        let names = (0..rows[0].len()).map(|j| format!("x{j}")).collect();
        EncodedMatrix::from_rows(rows, names)
    }

    fn zero_model(p: usize) -> TrainedModel<f64> {
        TrainedModel {
            params: ModelParams::Logistic(LogisticModel {
                coefficients: vec![0.0; p],
                intercept: 0.0,
                standardization: None,
                feature_stds: vec![1.0; p],
                converged: true,
            }),
            feature_names: (0..p).map(|j| format!("x{j}")).collect(),
        }
    }

    #[test]
    fn zero_coefficients_predict_half() {
        let model = zero_model(2);
        let x = matrix(vec![vec![3.0, -2.0], vec![0.0, 10.0]]);
        let p = model.predict_proba(&x).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn prediction_is_pointwise() {
        let model = TrainedModel {
            params: ModelParams::Logistic(LogisticModel {
                coefficients: vec![1.2],
                intercept: -0.3,
                standardization: None,
                feature_stds: vec![1.0],
                converged: true,
            }),
            feature_names: vec!["x0".into()],
        };
        let x = matrix(vec![vec![0.1], vec![0.9], vec![-1.0]]);
        let base = model.predict_proba(&x).unwrap();
        let permuted = matrix(vec![vec![-1.0], vec![0.1], vec![0.9]]);
        let shuffled = model.predict_proba(&permuted).unwrap();
        assert_eq!(shuffled, vec![base[2], base[0], base[1]]);
    }

    #[test]
    fn feature_count_mismatch() {
        let model = zero_model(2);
        let x = matrix(vec![vec![1.0]]);
        let err = model.predict_proba(&x).unwrap_err();
        assert!(matches!(err, Error::FeatureMismatch { expected: 2, got: 1 }));
    }

    #[test]
    fn importance_dominance_and_ties() {
        let model = TrainedModel {
            params: ModelParams::Logistic(LogisticModel {
                coefficients: vec![2.0, 0.0],
                intercept: 0.0,
                standardization: None,
                feature_stds: vec![1.0, 1.0],
                converged: true,
            }),
            feature_names: vec!["a".into(), "b".into()],
        };
        let ranked = model.feature_importance();
        assert_eq!(ranked[0].0, "a");
        assert_eq!(ranked[1].1, 0.0);

        let zero = zero_model(3);
        let ranked = zero.feature_importance();
        let names: Vec<&str> = ranked.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, vec!["x0", "x1", "x2"]);
        assert!(ranked.iter().all(|(_, s)| *s == 0.0));
    }

    #[test]
    fn gbt_importance_single_split() {
        let x = matrix(vec![
            vec![1.0, -1.0],
            vec![1.0, -2.0],
            vec![1.0, 1.5],
            vec![1.0, 2.5],
        ]);
        let y = [0, 0, 1, 1];
        let cfg = ModelConfig::Gbt(GbtConfig {
            rounds: 1,
            max_depth: 1,
            learning_rate: 1.0,
            min_child_weight: 0.0,
            subsample_seed: 0,
        });
        let model = train(&x, &y, &[1.0; 4], &cfg).unwrap();
        let ranked = model.feature_importance();
        assert_eq!(ranked[0].0, "x1");
        assert!(ranked[0].1 > 0.0);
        assert_eq!(ranked[1].1, 0.0);
    }

    #[test]
    fn json_document_shape() {
        let model = zero_model(1);
        let doc = model.to_json();
        assert_eq!(doc["version"], 1);
        assert_eq!(doc["kind"], "logistic");
        assert!(doc["parameters"]["coefficients"].is_array());
        assert_eq!(doc["feature_names"][0], "x0");
    }
}

//! Experiment orchestration: configuration, cross-validated runs, report
//! assembly, and figure rendering.
//!
//! The run is split into a fitting phase that never reads test-fold
//! labels (models, weights, repairs, and post-processing policies) and an
//! evaluation phase that scores the fitted artifacts on the test folds.

pub mod config;
pub mod figures;
pub mod report;

pub use config::{DataSource, ExperimentConfig, MitigationSpec, ModelSettings};
pub use figures::render_figures;
pub use report::{sig6, CellReport, ExperimentReport, GroupSummary, MeanCi};

use std::collections::BTreeMap;

use serde_json::json;

use crate::cohort::{nested_folds, Cohort, ImputeStats, NestedPlan};
use crate::error::{Error, Result};
use crate::metrics::{
    auc_roc, balanced_accuracy, group_confusion, group_tpr, tukey_tpr_test, ConfusionCounts,
    FairnessSummary,
};
use crate::mitigation::{
    apply_thresholds, cpp_fit, psta_fit, reweigh, suppress, CppPolicy, DirRepair,
    MitigationMethod, PstaConfig, ThresholdPolicy, UnprivilegedSelection,
};
use crate::models::{grid_search, train, ModelConfig, TrainedModel};
use crate::stats::student_t_quantile;

pub const BASE_METHOD: &str = "BASE";

/// Per-fold base fit: imputation statistics and the trained model, both
/// derived from training rows only.
#[derive(Debug, Clone)]
pub struct BaseFoldFit {
    pub impute: ImputeStats,
    pub model: TrainedModel<f64>,
}

/// Per-fold artifacts of one mitigation method. Only the fields relevant
/// to the method are populated.
#[derive(Debug, Clone, Default)]
pub struct FoldMitigationFit {
    pub impute: Option<ImputeStats>,
    pub model: Option<TrainedModel<f64>>,
    pub weights: Option<Vec<f64>>,
    pub repair: Option<DirRepair>,
    pub cpp: Option<CppPolicy<f64>>,
    pub psta: Option<ThresholdPolicy<f64>>,
}

#[derive(Debug, Clone)]
pub struct FittedCell {
    pub attribute: String,
    pub spec: MitigationSpec,
    pub error: Option<String>,
    pub folds: Vec<FoldMitigationFit>,
}

/// Everything fitted during an experiment. Construction reads training
/// folds only, so corrupting test-fold labels cannot change any artifact.
#[derive(Debug, Clone)]
pub struct FittedExperiment {
    pub selected: Vec<usize>,
    pub base: Vec<BaseFoldFit>,
    /// Per outer fold: probabilities for the training rows, aligned with
    /// `plan.outer.train_rows(fold)` order. Out-of-fold inner-CV
    /// predictions by default, in-sample when configured.
    pub oof: Vec<Vec<f64>>,
    pub cells: Vec<FittedCell>,
}

impl FittedExperiment {
    /// Serialization of one fold's fitted artifacts. A fold's fits depend
    /// only on its training rows, so corrupting that fold's test labels
    /// must leave this value bitwise unchanged.
    pub fn fold_artifacts_json(&self, fold: usize) -> serde_json::Value {
        let cells: Vec<serde_json::Value> = self
            .cells
            .iter()
            .map(|cell| {
                let fit = cell.folds.get(fold);
                json!({
                    "attribute": cell.attribute,
                    "method": cell.spec.method.name(),
                    "error": cell.error,
                    "model": fit.and_then(|f| f.model.as_ref()).map(|m| m.to_json()),
                    "weights": fit.and_then(|f| f.weights.clone()),
                    "repair": fit.and_then(|f| f.repair.as_ref()).map(|r| r.to_json()),
                    "cpp": fit.and_then(|f| f.cpp.as_ref()).map(|p| p.to_json()),
                    "psta": fit.and_then(|f| f.psta.as_ref()).map(|p| p.to_json()),
                })
            })
            .collect();
        json!({
            "selected": self.selected[fold],
            "base_model": self.base[fold].model.to_json(),
            "training_predictions": self.oof[fold],
            "cells": cells,
        })
    }

    /// Deterministic serialization of every fitted artifact, for
    /// leakage-sentinel comparisons.
    pub fn artifacts_json(&self) -> serde_json::Value {
        let cells: Vec<serde_json::Value> = self
            .cells
            .iter()
            .map(|cell| {
                let folds: Vec<serde_json::Value> = cell
                    .folds
                    .iter()
                    .map(|f| {
                        json!({
                            "model": f.model.as_ref().map(|m| m.to_json()),
                            "weights": f.weights,
                            "repair": f.repair.as_ref().map(|r| r.to_json()),
                            "cpp": f.cpp.as_ref().map(|p| p.to_json()),
                            "psta": f.psta.as_ref().map(|p| p.to_json()),
                        })
                    })
                    .collect();
                json!({
                    "attribute": cell.attribute,
                    "method": cell.spec.method.name(),
                    "error": cell.error,
                    "folds": folds,
                })
            })
            .collect();
        json!({
            "selected": self.selected,
            "base_models": self.base.iter().map(|b| b.model.to_json()).collect::<Vec<_>>(),
            "training_predictions": self.oof,
            "cells": cells,
        })
    }
}

fn train_on(cohort: &Cohort, config: &ModelConfig<f64>) -> Result<(ImputeStats, TrainedModel<f64>)> {
    let impute = ImputeStats::fit_all(cohort);
    let x = cohort.encode_features_with(&impute)?;
    let model = train(&x, cohort.outcome(), cohort.weights(), config)?;
    Ok((impute, model))
}

fn fit_mitigation_fold(
    train_cohort: &Cohort,
    attribute: &str,
    spec: &MitigationSpec,
    model_config: &ModelConfig<f64>,
    train_predictions: &[f64],
) -> Result<FoldMitigationFit> {
    let mut fit = FoldMitigationFit::default();
    match spec.method {
        MitigationMethod::Sup => {
            let suppressed = suppress(train_cohort, attribute)?;
            let (impute, model) = train_on(&suppressed.cohort, model_config)?;
            fit.impute = Some(impute);
            fit.model = Some(model);
        }
        MitigationMethod::Rw => {
            let weights = reweigh(train_cohort, attribute)?;
            let mut weighted = train_cohort.clone();
            weighted.set_weights(weights.clone())?;
            let (impute, model) = train_on(&weighted, model_config)?;
            fit.impute = Some(impute);
            fit.model = Some(model);
            fit.weights = Some(weights);
        }
        MitigationMethod::Dir => {
            let repair = DirRepair::fit(train_cohort, attribute, spec.repair_level)?;
            let repaired = repair.transform(train_cohort)?;
            let (impute, model) = train_on(&repaired, model_config)?;
            fit.impute = Some(impute);
            fit.model = Some(model);
            fit.repair = Some(repair);
        }
        MitigationMethod::Cpp => {
            let groups = train_cohort.group_labels(attribute)?;
            fit.cpp = Some(cpp_fit(
                train_predictions,
                train_cohort.outcome(),
                &groups,
            )?);
        }
        MitigationMethod::Psta => {
            let groups = train_cohort.group_labels(attribute)?;
            let config = PstaConfig {
                grid_step: spec.grid_step,
                default_threshold: spec.default_threshold,
                selection: match &spec.unprivileged {
                    Some(levels) => UnprivilegedSelection::Explicit(levels.clone()),
                    None => UnprivilegedSelection::Auto,
                },
            };
            fit.psta = Some(psta_fit(
                train_predictions,
                train_cohort.outcome(),
                &groups,
                &config,
            )?);
        }
    }
    Ok(fit)
}

/// Fits base models, out-of-fold training predictions, and every
/// mitigation cell. Reads no test-fold labels; per-cell errors are
/// captured without aborting other cells.
pub fn fit_experiment(
    cohort: &Cohort,
    plan: &NestedPlan,
    config: &ExperimentConfig,
) -> Result<FittedExperiment> {
    let grid = config.model.grid()?;
    let metric = config.model.metric()?;
    let selected = if grid.len() == 1 {
        vec![0; plan.outer.k]
    } else {
        grid_search(cohort, &grid, plan, metric)?
    };

    let mut base = Vec::with_capacity(plan.outer.k);
    let mut oof = Vec::with_capacity(plan.outer.k);
    for fold in 0..plan.outer.k {
        let train_rows = plan.outer.train_rows(fold);
        let train_cohort = cohort.subset(&train_rows)?;
        let model_config = &grid[selected[fold]];
        let (impute, model) = train_on(&train_cohort, model_config)?;

        let predictions = if config.post_fit_in_sample {
            let x = train_cohort.encode_features_with(&impute)?;
            model.predict_proba(&x)?
        } else {
            let inner = &plan.inner[fold];
            let mut out = vec![0.0; train_rows.len()];
            for j in 0..inner.k {
                let fit_cohort = cohort.subset(&inner.train_rows(j))?;
                let (inner_impute, inner_model) = train_on(&fit_cohort, model_config)?;
                let val_cohort = cohort.subset(&inner.test_rows(j))?;
                let x = val_cohort.encode_features_with(&inner_impute)?;
                let p = inner_model.predict_proba(&x)?;
                for (&pos, prob) in inner.test_positions(j).iter().zip(p) {
                    out[pos] = prob;
                }
            }
            out
        };

        base.push(BaseFoldFit { impute, model });
        oof.push(predictions);
    }

    let mut cells = Vec::new();
    for attribute in &config.protected {
        for spec in &config.mitigation {
            let mut folds = Vec::with_capacity(plan.outer.k);
            let mut error = None;
            for fold in 0..plan.outer.k {
                let train_rows = plan.outer.train_rows(fold);
                let train_cohort = match cohort.subset(&train_rows) {
                    Ok(c) => c,
                    Err(e) => {
                        error = Some(e.to_string());
                        break;
                    }
                };
                match fit_mitigation_fold(
                    &train_cohort,
                    attribute,
                    spec,
                    &grid[selected[fold]],
                    &oof[fold],
                ) {
                    Ok(fit) => folds.push(fit),
                    Err(e) => {
                        error = Some(e.to_string());
                        break;
                    }
                }
            }
            if error.is_some() {
                folds.clear();
            }
            cells.push(FittedCell {
                attribute: attribute.clone(),
                spec: spec.clone(),
                error,
                folds,
            });
        }
    }

    Ok(FittedExperiment {
        selected,
        base,
        oof,
        cells,
    })
}

/// Raw per-fold evaluation numbers for one cell.
struct CellEval {
    levels: Vec<String>,
    /// fold_tpr[group][fold]
    fold_tpr: Vec<Vec<f64>>,
    pooled: Vec<ConfusionCounts<f64>>,
    bacc: Vec<f64>,
    auc: Vec<f64>,
    policies: Vec<serde_json::Value>,
    fallbacks: usize,
}

fn predict_fold(
    cohort: &Cohort,
    impute: &ImputeStats,
    model: &TrainedModel<f64>,
) -> Result<Vec<f64>> {
    let x = cohort.encode_features_with(impute)?;
    model.predict_proba(&x)
}

fn eval_cell(
    cohort: &Cohort,
    plan: &NestedPlan,
    fitted: &FittedExperiment,
    attribute: &str,
    cell: Option<&FittedCell>,
) -> Result<CellEval> {
    let levels = cohort.group_labels(attribute)?.levels;
    let n_groups = levels.len();
    let mut eval = CellEval {
        levels,
        fold_tpr: vec![Vec::new(); n_groups],
        pooled: vec![ConfusionCounts::default(); n_groups],
        bacc: Vec::new(),
        auc: Vec::new(),
        policies: Vec::new(),
        fallbacks: 0,
    };

    for fold in 0..plan.outer.k {
        let test_rows = plan.outer.test_rows(fold);
        let test_cohort = cohort.subset(&test_rows)?;
        let groups = test_cohort.group_labels(attribute)?;
        let y = test_cohort.outcome();

        let method = cell.map(|c| c.spec.method);
        let fit = cell.map(|c| &c.folds[fold]);
        let mut thresholds = vec![0.5f64; n_groups];
        let scores: Vec<f64> = match method {
            None | Some(MitigationMethod::Rw) => {
                let (impute, model) = match fit {
                    Some(f) => (
                        f.impute.as_ref().expect("rw impute"),
                        f.model.as_ref().expect("rw model"),
                    ),
                    None => (&fitted.base[fold].impute, &fitted.base[fold].model),
                };
                predict_fold(&test_cohort, impute, model)?
            }
            Some(MitigationMethod::Sup) => {
                let f = fit.expect("sup fit");
                let blinded = test_cohort.drop_column(attribute)?;
                predict_fold(
                    &blinded,
                    f.impute.as_ref().expect("sup impute"),
                    f.model.as_ref().expect("sup model"),
                )?
            }
            Some(MitigationMethod::Dir) => {
                let f = fit.expect("dir fit");
                let repaired = f.repair.as_ref().expect("dir repair").transform(&test_cohort)?;
                predict_fold(
                    &repaired,
                    f.impute.as_ref().expect("dir impute"),
                    f.model.as_ref().expect("dir model"),
                )?
            }
            Some(MitigationMethod::Cpp) => {
                let policy = fit.and_then(|f| f.cpp.as_ref()).expect("cpp policy");
                let p = predict_fold(
                    &test_cohort,
                    &fitted.base[fold].impute,
                    &fitted.base[fold].model,
                )?;
                eval.policies.push(policy.to_json());
                policy.apply_expected(&p, &groups.assignment)
            }
            Some(MitigationMethod::Psta) => {
                let policy = fit.and_then(|f| f.psta.as_ref()).expect("psta policy");
                let p = predict_fold(
                    &test_cohort,
                    &fitted.base[fold].impute,
                    &fitted.base[fold].model,
                )?;
                eval.policies.push(policy.to_json());
                let (_, fallbacks) = apply_thresholds(&p, &groups.assignment, policy);
                eval.fallbacks += fallbacks;
                thresholds.copy_from_slice(&policy.thresholds);
                p
            }
        };

        let tprs = group_tpr(&scores, y, &groups.assignment, n_groups, &thresholds)
            .map_err(|e| name_group_error(e, &eval.levels))?;
        for (g, tpr) in tprs.into_iter().enumerate() {
            eval.fold_tpr[g].push(tpr);
        }
        let counts = group_confusion(&scores, y, &groups.assignment, n_groups, &thresholds, None)?;
        let mut overall = ConfusionCounts::default();
        for (g, c) in counts.iter().enumerate() {
            eval.pooled[g].add(c);
            overall.add(c);
        }
        eval.bacc.push(balanced_accuracy(&overall)?);
        eval.auc.push(auc_roc(&scores, y, None)?);
    }
    Ok(eval)
}

/// group_tpr reports numeric group ids; substitute the level names.
fn name_group_error(err: Error, levels: &[String]) -> Error {
    if let Error::NoPositivesInGroup(id) = &err {
        if let Ok(g) = id.parse::<usize>() {
            if let Some(name) = levels.get(g) {
                return Error::NoPositivesInGroup(name.clone());
            }
        }
    }
    err
}

fn mean_ci(folds: &[f64]) -> MeanCi {
    let k = folds.len() as f64;
    let mean = folds.iter().sum::<f64>() / k;
    let half_width = if folds.len() > 1 {
        let var = folds.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
        student_t_quantile(0.975, k - 1.0) * (var / k).sqrt()
    } else {
        0.0
    };
    MeanCi {
        mean: sig6(mean),
        half_width: sig6(half_width),
        folds: folds.iter().map(|&x| sig6(x)).collect(),
    }
}

/// Privileged = highest mean TPR, unprivileged = lowest.
fn rank_groups(means: &[f64]) -> (usize, usize) {
    let mut privileged = 0usize;
    let mut unprivileged = 0usize;
    for (g, &m) in means.iter().enumerate() {
        if m > means[privileged] {
            privileged = g;
        }
        if m < means[unprivileged] {
            unprivileged = g;
        }
    }
    (unprivileged, privileged)
}

fn summarize_cell(
    attribute: &str,
    method: &str,
    eval: &CellEval,
    alpha: f64,
    band: f64,
    base_rank: Option<(usize, usize)>,
) -> Result<CellReport> {
    let tukey = tukey_tpr_test(&eval.fold_tpr, alpha)?;
    let means: Vec<f64> = tukey.group_means.clone();
    let (unprivileged, privileged) = base_rank.unwrap_or_else(|| rank_groups(&means));
    let fairness = FairnessSummary::new(
        sig6(means[unprivileged]),
        sig6(means[privileged]),
        eval.levels[unprivileged].clone(),
        eval.levels[privileged].clone(),
        band,
    );
    let fairness = FairnessSummary {
        eod: sig6(fairness.eod),
        gamma: sig6(fairness.gamma),
        ..fairness
    };
    let groups = eval
        .levels
        .iter()
        .enumerate()
        .map(|(g, level)| {
            let pooled = &eval.pooled[g];
            Ok(GroupSummary {
                group: level.clone(),
                fold_tpr: eval.fold_tpr[g].iter().map(|&x| sig6(x)).collect(),
                mean_tpr: sig6(means[g]),
                half_width: sig6(tukey.half_width),
                pooled_tpr: sig6(pooled.tpr()?),
                pooled_fpr: sig6(pooled.fpr()?),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CellReport {
        attribute: attribute.to_string(),
        method: method.to_string(),
        status: "ok".into(),
        error: None,
        groups: Some(groups),
        fairness: Some(fairness),
        balanced_accuracy: Some(mean_ci(&eval.bacc)),
        auc: Some(mean_ci(&eval.auc)),
        significant: Some(tukey.significant),
        q_critical: Some(sig6(tukey.q_critical)),
        policies: if eval.policies.is_empty() {
            None
        } else {
            Some(eval.policies.clone())
        },
        threshold_fallbacks: eval.fallbacks,
    })
}

const SELECTION_RULE: &str = "smallest |EOD| among mitigations with balanced-accuracy loss \
                              <= 0.02 vs base; if none qualifies, smallest |EOD| outright";

fn pick_best_methods(cells: &[CellReport]) -> BTreeMap<String, String> {
    let mut best = BTreeMap::new();
    let mut attributes: Vec<&str> = cells.iter().map(|c| c.attribute.as_str()).collect();
    attributes.dedup();
    for attribute in attributes {
        let base_bacc = cells
            .iter()
            .find(|c| c.attribute == attribute && c.method == BASE_METHOD && c.is_ok())
            .and_then(|c| c.balanced_accuracy.as_ref())
            .map(|ci| ci.mean);
        let candidates: Vec<&CellReport> = cells
            .iter()
            .filter(|c| c.attribute == attribute && c.method != BASE_METHOD && c.is_ok())
            .collect();
        if candidates.is_empty() {
            continue;
        }
        let gamma = |c: &CellReport| c.fairness.as_ref().map_or(f64::INFINITY, |f| f.gamma);
        let qualified: Vec<&&CellReport> = candidates
            .iter()
            .filter(|c| {
                match (base_bacc, c.balanced_accuracy.as_ref()) {
                    (Some(base), Some(ci)) => ci.mean >= base - 0.02,
                    _ => false,
                }
            })
            .collect();
        let pool: Vec<&CellReport> = if qualified.is_empty() {
            candidates.clone()
        } else {
            qualified.into_iter().copied().collect()
        };
        if let Some(winner) = pool.into_iter().min_by(|a, b| {
            gamma(a)
                .partial_cmp(&gamma(b))
                .unwrap()
                .then(a.method.cmp(&b.method))
        }) {
            best.insert(attribute.to_string(), winner.method.clone());
        }
    }
    best
}

fn method_sort_key(method: &str) -> (u8, String) {
    if method == BASE_METHOD {
        (0, String::new())
    } else {
        (1, method.to_string())
    }
}

/// Runs the full experiment: load, split, fit, evaluate, aggregate.
pub fn run_experiment(config: &ExperimentConfig, fixed_clock: bool) -> Result<ExperimentReport> {
    let started = std::time::Instant::now();
    config.validate()?;
    let cohort = config.load_cohort()?;
    for attribute in &config.protected {
        cohort.group_labels(attribute)?;
    }
    let plan = nested_folds(&cohort, config.k_outer, config.k_inner, config.seed)?;
    let fitted = fit_experiment(&cohort, &plan, config)?;

    let mut cells = Vec::new();
    let mut base_ranks: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for attribute in &config.protected {
        let cell = match eval_cell(&cohort, &plan, &fitted, attribute, None) {
            Ok(eval) => {
                if let Ok(tukey) = tukey_tpr_test(&eval.fold_tpr, config.alpha) {
                    base_ranks.insert(attribute.clone(), rank_groups(&tukey.group_means));
                }
                summarize_cell(attribute, BASE_METHOD, &eval, config.alpha, config.fair_band, None)
                    .unwrap_or_else(|e| CellReport::failed(attribute, BASE_METHOD, e.to_string()))
            }
            Err(e) => CellReport::failed(attribute, BASE_METHOD, e.to_string()),
        };
        cells.push(cell);
    }
    for cell in &fitted.cells {
        let method = cell.spec.method.name();
        let report_cell = if let Some(error) = &cell.error {
            CellReport::failed(&cell.attribute, method, error.clone())
        } else {
            match eval_cell(&cohort, &plan, &fitted, &cell.attribute, Some(cell)) {
                Ok(eval) => summarize_cell(
                    &cell.attribute,
                    method,
                    &eval,
                    config.alpha,
                    config.fair_band,
                    base_ranks.get(&cell.attribute).copied(),
                )
                .unwrap_or_else(|e| CellReport::failed(&cell.attribute, method, e.to_string())),
                Err(e) => CellReport::failed(&cell.attribute, method, e.to_string()),
            }
        };
        cells.push(report_cell);
    }
    cells.sort_by(|a, b| {
        a.attribute
            .cmp(&b.attribute)
            .then_with(|| method_sort_key(&a.method).cmp(&method_sort_key(&b.method)))
    });

    let best_method = pick_best_methods(&cells);
    let (generated_at, wall_clock_seconds) = if fixed_clock {
        ("unix:0".to_string(), 0.0)
    } else {
        let now = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        (format!("unix:{now}"), started.elapsed().as_secs_f64())
    };

    Ok(ExperimentReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        generated_at,
        wall_clock_seconds,
        config: serde_json::to_value(config)?,
        cells,
        best_method,
        selection_rule: SELECTION_RULE.into(),
    })
}

//! Experiment report: serializable results per (protected attribute,
//! method) cell, with fold-level raw numbers, JSON and CSV writers.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::FairnessSummary;

/// Rounds to 6 significant digits for report output.
pub fn sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

/// Mean with a 95% confidence half-width from fold dispersion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    pub half_width: f64,
    pub folds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub group: String,
    pub fold_tpr: Vec<f64>,
    pub mean_tpr: f64,
    /// Tukey display half-width, common across groups.
    pub half_width: f64,
    pub pooled_tpr: f64,
    pub pooled_fpr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub attribute: String,
    /// "BASE" or a mitigation method name.
    pub method: String,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groups: Option<Vec<GroupSummary>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fairness: Option<FairnessSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub balanced_accuracy: Option<MeanCi>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auc: Option<MeanCi>,
    /// Tukey pairwise significance flags, group order as in `groups`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub significant: Option<Vec<Vec<bool>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_critical: Option<f64>,
    /// Per-fold fitted policy documents (CPP/PSTA only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policies: Option<Vec<serde_json::Value>>,
    #[serde(default)]
    pub threshold_fallbacks: usize,
}

impl CellReport {
    pub fn failed(attribute: &str, method: &str, error: String) -> Self {
        CellReport {
            attribute: attribute.to_string(),
            method: method.to_string(),
            status: "failed".into(),
            error: Some(error),
            groups: None,
            fairness: None,
            balanced_accuracy: None,
            auc: None,
            significant: None,
            q_critical: None,
            policies: None,
            threshold_fallbacks: 0,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: String,
    pub generated_at: String,
    pub wall_clock_seconds: f64,
    pub config: serde_json::Value,
    /// Sorted by attribute, then method ("BASE" first, rest alphabetical).
    pub cells: Vec<CellReport>,
    /// Per attribute, the mitigation minimizing |EOD| subject to a
    /// balanced-accuracy loss of at most 0.02 vs base; if none qualifies,
    /// the |EOD| minimizer outright.
    pub best_method: BTreeMap<String, String>,
    pub selection_rule: String,
}

impl ExperimentReport {
    pub fn cell(&self, attribute: &str, method: &str) -> Option<&CellReport> {
        self.cells
            .iter()
            .find(|c| c.attribute == attribute && c.method == method)
    }

    pub fn attributes(&self) -> Vec<&str> {
        let mut attrs: Vec<&str> = self.cells.iter().map(|c| c.attribute.as_str()).collect();
        attrs.dedup();
        attrs
    }

    pub fn has_failures(&self) -> bool {
        self.cells.iter().any(|c| !c.is_ok())
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<ExperimentReport> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(self.to_json_string()?.as_bytes())?;
        file.write_all(b"\n")?;
        Ok(())
    }

    /// Two CSV files: one row per cell, one row per (cell, group).
    pub fn write_csv(&self, outdir: impl AsRef<Path>) -> Result<()> {
        let outdir = outdir.as_ref();
        let mut cells = csv::Writer::from_path(outdir.join("cells.csv"))?;
        cells.write_record([
            "attribute",
            "method",
            "status",
            "eod",
            "gamma",
            "fair",
            "privileged",
            "unprivileged",
            "bacc",
            "bacc_ci",
            "auc",
            "auc_ci",
        ])?;
        for c in &self.cells {
            let fair = c.fairness.as_ref();
            cells.write_record([
                c.attribute.clone(),
                c.method.clone(),
                c.status.clone(),
                fair.map_or(String::new(), |f| f.eod.to_string()),
                fair.map_or(String::new(), |f| f.gamma.to_string()),
                fair.map_or(String::new(), |f| f.fair_flag.to_string()),
                fair.map_or(String::new(), |f| f.privileged_group.clone()),
                fair.map_or(String::new(), |f| f.unprivileged_group.clone()),
                opt_mean(&c.balanced_accuracy),
                opt_ci(&c.balanced_accuracy),
                opt_mean(&c.auc),
                opt_ci(&c.auc),
            ])?;
        }
        cells.flush()?;

        let mut groups = csv::Writer::from_path(outdir.join("groups.csv"))?;
        groups.write_record([
            "attribute",
            "method",
            "group",
            "mean_tpr",
            "half_width",
            "pooled_tpr",
            "pooled_fpr",
            "fold_tpr",
        ])?;
        for c in &self.cells {
            for g in c.groups.iter().flatten() {
                groups.write_record([
                    c.attribute.clone(),
                    c.method.clone(),
                    g.group.clone(),
                    g.mean_tpr.to_string(),
                    g.half_width.to_string(),
                    g.pooled_tpr.to_string(),
                    g.pooled_fpr.to_string(),
                    g.fold_tpr
                        .iter()
                        .map(f64::to_string)
                        .collect::<Vec<_>>()
                        .join(";"),
                ])?;
            }
        }
        groups.flush()?;
        Ok(())
    }

    /// The base cell for an attribute, or an error naming what is missing.
    pub fn base_cell(&self, attribute: &str) -> Result<&CellReport> {
        self.cell(attribute, super::BASE_METHOD)
            .filter(|c| c.is_ok())
            .ok_or_else(|| {
                Error::IncompleteReport(format!(
                    "no successful base cell for attribute '{attribute}'"
                ))
            })
    }
}

fn opt_mean(ci: &Option<MeanCi>) -> String {
    ci.as_ref().map_or(String::new(), |c| c.mean.to_string())
}

fn opt_ci(ci: &Option<MeanCi>) -> String {
    ci.as_ref()
        .map_or(String::new(), |c| c.half_width.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig6_rounds_significant_digits() {
        assert_eq!(sig6(0.123456789), 0.123457);
        assert_eq!(sig6(-1234567.89), -1234570.0);
        assert_eq!(sig6(0.0), 0.0);
        assert_eq!(sig6(1.0), 1.0);
        assert_eq!(sig6(2.0 / 3.0), 0.666667);
    }

    #[test]
    fn json_round_trip() {
        let report = ExperimentReport {
            version: "0.1.0".into(),
            generated_at: "unix:0".into(),
            wall_clock_seconds: 0.0,
            config: serde_json::json!({"seed": 1}),
            cells: vec![CellReport::failed("sex", "RW", "boom".into())],
            best_method: BTreeMap::new(),
            selection_rule: "r".into(),
        };
        let text = report.to_json_string().unwrap();
        let back: ExperimentReport = serde_json::from_str(&text).unwrap();
        assert_eq!(report, back);
        assert!(report.has_failures());
    }
}

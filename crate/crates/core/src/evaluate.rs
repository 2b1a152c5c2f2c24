//! Cross-validated accuracy for every descriptor and classifier pair.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::classify::{cross_validate, ClassifierSpec, CvReport, K_FOLDS};
use crate::error::{param, Error, Result};
use crate::features::{DescriptorKind, EchoFeatures, MagnitudeScale};
use crate::synth::FillerClass;

/// Share of failed extractions above which a run is flagged.
pub const MAX_FAILURE_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvaluationConfig {
    pub descriptors: Vec<DescriptorKind>,
    pub classifiers: Vec<ClassifierSpec>,
    pub folds: usize,
    pub scale: MagnitudeScale,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            descriptors: DescriptorKind::ALL.to_vec(),
            classifiers: vec![ClassifierSpec::mlp_default(), ClassifierSpec::svm_default()],
            folds: K_FOLDS,
            scale: MagnitudeScale::default(),
        }
    }
}

/// Descriptor matrices of the recordings that made it through extraction.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureTable {
    pub ids: Vec<usize>,
    pub labels: Vec<FillerClass>,
    pub rows: BTreeMap<DescriptorKind, Vec<Vec<f64>>>,
    pub failures: Vec<(usize, String)>,
}

impl FeatureTable {
    /// Collects per-recording extraction results, in the given order.
    pub fn from_extractions<I>(items: I) -> Self
    where
        I: IntoIterator<Item = (usize, FillerClass, Result<EchoFeatures>)>,
    {
        let mut t = FeatureTable::default();
        for (id, label, result) in items {
            match result {
                Ok(f) => {
                    t.ids.push(id);
                    t.labels.push(label);
                    for d in &f.descriptors {
                        t.rows.entry(d.kind).or_default().push(d.values.clone());
                    }
                }
                Err(e) => t.failures.push((id, e.to_string())),
            }
        }
        t
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn label_indices(&self) -> Vec<usize> {
        self.labels.iter().map(|l| l.index()).collect()
    }

    pub fn failure_fraction(&self) -> f64 {
        let total = self.len() + self.failures.len();
        if total == 0 {
            0.0
        } else {
            self.failures.len() as f64 / total as f64
        }
    }

    pub fn descriptor(&self, kind: DescriptorKind) -> Result<&[Vec<f64>]> {
        self.rows
            .get(&kind)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Parameter(format!("no {} descriptors extracted", kind.name())))
    }
}

/// One cross-validation of `spec` on the `kind` descriptors.
pub fn evaluate_cell(
    table: &FeatureTable,
    kind: DescriptorKind,
    spec: &ClassifierSpec,
    folds: usize,
    seed: u64,
) -> Result<CvReport> {
    cross_validate(table.descriptor(kind)?, &table.label_indices(), spec, folds, seed, Some(kind))
}

/// Every (descriptor, classifier) cell, descriptor-major. All cells share
/// the fold split and training seeds drawn from `seed`.
pub fn evaluate(table: &FeatureTable, cfg: &EvaluationConfig, seed: u64) -> Result<EvaluationReport> {
    if table.is_empty() {
        return param("no recordings to evaluate");
    }
    let mut cells = Vec::new();
    for &kind in &cfg.descriptors {
        for spec in &cfg.classifiers {
            cells.push(evaluate_cell(table, kind, spec, cfg.folds, seed)?);
        }
    }
    Ok(EvaluationReport::new(table, cells))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub n_examples: usize,
    pub failed_ids: Vec<usize>,
    pub cells: Vec<CvReport>,
}

impl EvaluationReport {
    pub fn new(table: &FeatureTable, cells: Vec<CvReport>) -> Self {
        Self {
            n_examples: table.len() + table.failures.len(),
            failed_ids: table.failures.iter().map(|(id, _)| *id).collect(),
            cells,
        }
    }

    pub fn cell(&self, kind: DescriptorKind, classifier: &str) -> Option<&CvReport> {
        self.cells
            .iter()
            .find(|c| c.descriptor == Some(kind) && c.classifier == classifier)
    }

    fn classifiers(&self) -> Vec<&str> {
        let mut names: Vec<&str> = Vec::new();
        for c in &self.cells {
            if !names.contains(&c.classifier.as_str()) {
                names.push(&c.classifier);
            }
        }
        names
    }

    fn descriptors(&self) -> Vec<DescriptorKind> {
        let mut kinds = Vec::new();
        for c in &self.cells {
            if let Some(k) = c.descriptor {
                if !kinds.contains(&k) {
                    kinds.push(k);
                }
            }
        }
        kinds
    }

    /// Descriptors down, classifiers across, "mean ± std" cells.
    pub fn table(&self) -> String {
        let names = self.classifiers();
        let mut out = format!("{:<16}", "Descriptor");
        for n in &names {
            let _ = write!(out, "{n:>18}");
        }
        out.push('\n');
        for kind in self.descriptors() {
            let _ = write!(out, "{:<16}", kind.title());
            for n in &names {
                let cell = self.cell(kind, n).map_or_else(|| "-".to_string(), CvReport::cell);
                let _ = write!(out, "{cell:>18}");
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "\n{} recordings, {} without a detected echo",
            self.n_examples,
            self.failed_ids.len()
        );
        out
    }

    /// Header and one row per cell with the per-fold accuracies.
    pub fn csv(&self) -> String {
        let k = self.cells.iter().map(|c| c.fold_accuracies.len()).max().unwrap_or(0);
        let mut out = String::from("descriptor,classifier,mean,std");
        for i in 1..=k {
            let _ = write!(out, ",fold_{i}");
        }
        out.push('\n');
        for c in &self.cells {
            out.push_str(&c.csv_row());
            out.push('\n');
        }
        out
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn too_many_failures(&self) -> bool {
        self.n_examples > 0
            && self.failed_ids.len() as f64 / self.n_examples as f64 > MAX_FAILURE_FRACTION
    }
}

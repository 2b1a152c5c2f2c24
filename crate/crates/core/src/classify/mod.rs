//! Binary classifiers and the stratified k-fold harness.
//!
//! Labels are class indices 0 and 1 ([`crate::synth::FillerClass::index`]).
//! Every fold standardizes with statistics of its own training part only.

pub mod mlp;
pub mod model_io;
pub mod svm;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::features::{DescriptorKind, Standardizer};

pub use model_io::{Classifier, SavedModel};
pub use mlp::{mlp_train, MlpHyper, MlpModel, Mode, DEFAULT_LAYERS};
pub use svm::{svm_train, SvmFit, SvmHyper, SvmModel};

/// Default number of folds.
pub const K_FOLDS: usize = 3;

/// Which learner a cross-validation run uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ClassifierSpec {
    Mlp {
        #[serde(default = "default_layers")]
        layers: Vec<usize>,
        #[serde(flatten)]
        hyper: MlpHyper,
    },
    Svm {
        #[serde(flatten)]
        hyper: SvmHyper,
        /// Candidate multipliers of `C` and of the default gamma searched
        /// by an inner 3-fold split of each training fold; empty lists
        /// disable the search.
        #[serde(default = "default_c_grid")]
        c_grid: Vec<f64>,
        #[serde(default = "default_gamma_grid")]
        gamma_grid: Vec<f64>,
    },
}

fn default_layers() -> Vec<usize> {
    DEFAULT_LAYERS.to_vec()
}

fn default_c_grid() -> Vec<f64> {
    vec![0.1, 1.0, 10.0]
}

fn default_gamma_grid() -> Vec<f64> {
    vec![0.25, 1.0, 4.0]
}

impl ClassifierSpec {
    pub fn mlp_default() -> Self {
        ClassifierSpec::Mlp {
            layers: default_layers(),
            hyper: MlpHyper::default(),
        }
    }

    pub fn svm_default() -> Self {
        ClassifierSpec::Svm {
            hyper: SvmHyper::default(),
            c_grid: default_c_grid(),
            gamma_grid: default_gamma_grid(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ClassifierSpec::Mlp { .. } => "MLP",
            ClassifierSpec::Svm { .. } => "SVM",
        }
    }

    /// Trains on `(train_x, train_y)`. The MLP holds out a stratified
    /// `validation_fraction` of the data for epoch selection; the SVM picks
    /// its hyperparameters from the grid by inner cross-validation.
    pub fn fit(&self, train_x: &[&[f64]], train_y: &[usize], seed: u64) -> Result<Classifier> {
        match self {
            ClassifierSpec::Mlp { layers, hyper } => {
                let mut sizes = layers.clone();
                if let Some(first) = sizes.first_mut() {
                    *first = train_x.first().map_or(*first, |x| x.len());
                }
                let (fit_idx, val_idx) =
                    holdout_split(train_y, hyper.validation_fraction, seed ^ HOLDOUT_SALT)?;
                let pick = |idx: &[usize]| -> (Vec<&[f64]>, Vec<usize>) {
                    (idx.iter().map(|&i| train_x[i]).collect(), idx.iter().map(|&i| train_y[i]).collect())
                };
                let (fx, fy) = pick(&fit_idx);
                let (vx, vy) = pick(&val_idx);
                Ok(Classifier::Mlp(mlp_train(&sizes, &fx, &fy, &vx, &vy, hyper, seed)?))
            }
            ClassifierSpec::Svm {
                hyper,
                c_grid,
                gamma_grid,
            } => {
                let chosen = select_svm_hyper(train_x, train_y, hyper, c_grid, gamma_grid, seed)?;
                Ok(Classifier::Svm(svm_train(train_x, train_y, &chosen)?.model))
            }
        }
    }

    /// Trains on `(train_x, train_y)` and labels `test_x`.
    pub fn fit_predict(
        &self,
        train_x: &[&[f64]],
        train_y: &[usize],
        test_x: &[&[f64]],
        seed: u64,
    ) -> Result<Vec<usize>> {
        let model = self.fit(train_x, train_y, seed)?;
        test_x.iter().map(|x| model.predict(x)).collect()
    }
}

const HOLDOUT_SALT: u64 = 0x5bd1_e995_0000_0001;

/// Stratified split of `labels` into a fitting part and a held-out part of
/// about `fraction` of each class (at least one example per class when the
/// class has two or more).
pub fn holdout_split(labels: &[usize], fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&fraction) {
        return param(format!("holdout fraction {fraction} outside [0, 1)"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fit = Vec::new();
    let mut held = Vec::new();
    for class in [0, 1] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let mut n_held = (fraction * idx.len() as f64).round() as usize;
        if fraction > 0.0 && idx.len() >= 2 {
            n_held = n_held.clamp(1, idx.len() - 1);
        }
        held.extend_from_slice(&idx[..n_held]);
        fit.extend_from_slice(&idx[n_held..]);
    }
    fit.sort_unstable();
    held.sort_unstable();
    Ok((fit, held))
}

/// Grid search over `C · c_grid` and `gamma · gamma_grid` by inner 3-fold
/// accuracy; the first best candidate in grid order wins.
fn select_svm_hyper(
    xs: &[&[f64]],
    ys: &[usize],
    base: &SvmHyper,
    c_grid: &[f64],
    gamma_grid: &[f64],
    seed: u64,
) -> Result<SvmHyper> {
    let gamma0 = base.gamma.unwrap_or_else(|| svm::default_gamma(xs));
    let base = SvmHyper {
        gamma: Some(gamma0),
        ..*base
    };
    if c_grid.is_empty() || gamma_grid.is_empty() {
        return Ok(base);
    }
    let folds = stratified_folds(ys, K_FOLDS, seed ^ HOLDOUT_SALT)?;
    let mut best: Option<(usize, SvmHyper)> = None;
    for &cm in c_grid {
        for &gm in gamma_grid {
            let cand = SvmHyper {
                c: base.c * cm,
                gamma: Some(gamma0 * gm),
                ..base
            };
            let mut hits = 0;
            for fold in &folds {
                let (tr, te) = split_indices(ys.len(), fold);
                let tx: Vec<&[f64]> = tr.iter().map(|&i| xs[i]).collect();
                let ty: Vec<usize> = tr.iter().map(|&i| ys[i]).collect();
                let model = svm_train(&tx, &ty, &cand)?.model;
                for &i in &te {
                    if model.predict(xs[i])? == ys[i] {
                        hits += 1;
                    }
                }
            }
            if best.as_ref().is_none_or(|(b, _)| hits > *b) {
                best = Some((hits, cand));
            }
        }
    }
    Ok(best.expect("non-empty grid").1)
}

/// `k` validation folds; each class is shuffled and dealt round-robin, so
/// per-fold class counts differ by at most one.
pub fn stratified_folds(labels: &[usize], k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return param("need at least two folds");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for class in [0, 1] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < k {
            return param(format!(
                "class {class} has {} examples, fewer than {k} folds",
                idx.len()
            ));
        }
        idx.shuffle(&mut rng);
        for i in idx {
            folds[next % k].push(i);
            next += 1;
        }
    }
    if labels.iter().any(|&l| l > 1) {
        return param("labels must be 0 or 1");
    }
    for f in folds.iter_mut() {
        f.sort_unstable();
    }
    Ok(folds)
}

fn split_indices(n: usize, fold: &[usize]) -> (Vec<usize>, Vec<usize>) {
    let mut in_fold = vec![false; n];
    for &i in fold {
        in_fold[i] = true;
    }
    let train = (0..n).filter(|&i| !in_fold[i]).collect();
    (train, fold.to_vec())
}

/// Cross-validated accuracy of one learner on one descriptor set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub descriptor: Option<DescriptorKind>,
    pub classifier: String,
    /// Percent.
    pub fold_accuracies: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation over folds, percent.
    pub std: f64,
}

impl CvReport {
    pub fn from_folds(descriptor: Option<DescriptorKind>, classifier: &str, fold_accuracies: Vec<f64>) -> Self {
        let k = fold_accuracies.len() as f64;
        let mean = fold_accuracies.iter().sum::<f64>() / k;
        let var = fold_accuracies.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / k;
        Self {
            descriptor,
            classifier: classifier.to_string(),
            fold_accuracies,
            mean,
            std: var.sqrt(),
        }
    }

    /// `"mean ± std"` with two decimals.
    pub fn cell(&self) -> String {
        format!("{:.2} ± {:.2}", self.mean, self.std)
    }

    /// `descriptor,classifier,mean,std,fold_1,...`
    pub fn csv_row(&self) -> String {
        let mut row = format!(
            "{},{},{:.2},{:.2}",
            self.descriptor.map_or("-", |d| d.name()),
            self.classifier,
            self.mean,
            self.std
        );
        for a in &self.fold_accuracies {
            row.push_str(&format!(",{a:.4}"));
        }
        row
    }
}

/// Stratified k-fold cross-validation with a caller-supplied learner.
///
/// For each fold the training part is standardized with its own statistics,
/// the held-out part with the same statistics, and
/// `fit_predict(train_x, train_y, test_x, fold_seed)` labels the held-out
/// part.
pub fn cross_validate_with<F>(
    xs: &[Vec<f64>],
    ys: &[usize],
    k: usize,
    seed: u64,
    descriptor: Option<DescriptorKind>,
    classifier: &str,
    mut fit_predict: F,
) -> Result<CvReport>
where
    F: FnMut(&[&[f64]], &[usize], &[&[f64]], u64) -> Result<Vec<usize>>,
{
    if xs.len() != ys.len() {
        return param("feature and label counts differ");
    }
    let folds = stratified_folds(ys, k, seed)?;
    let mut fold_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut accs = Vec::with_capacity(k);
    for fold in &folds {
        let fold_seed: u64 = fold_rng.random();
        let (tr, te) = split_indices(xs.len(), fold);
        let raw: Vec<&[f64]> = tr.iter().map(|&i| xs[i].as_slice()).collect();
        let stats = Standardizer::fit(&raw)?;
        let train_rows: Vec<Vec<f64>> = raw.iter().map(|r| stats.transform(r)).collect();
        let test_rows: Vec<Vec<f64>> = te.iter().map(|&i| stats.transform(&xs[i])).collect();
        let train_x: Vec<&[f64]> = train_rows.iter().map(Vec::as_slice).collect();
        let test_x: Vec<&[f64]> = test_rows.iter().map(Vec::as_slice).collect();
        let train_y: Vec<usize> = tr.iter().map(|&i| ys[i]).collect();
        let pred = fit_predict(&train_x, &train_y, &test_x, fold_seed)?;
        if pred.len() != te.len() {
            return param("learner returned the wrong number of predictions");
        }
        let hits = pred.iter().zip(&te).filter(|(p, &i)| **p == ys[i]).count();
        accs.push(100.0 * hits as f64 / te.len() as f64);
    }
    Ok(CvReport::from_folds(descriptor, classifier, accs))
}

/// Stratified k-fold cross-validation of `spec`.
pub fn cross_validate(
    xs: &[Vec<f64>],
    ys: &[usize],
    spec: &ClassifierSpec,
    k: usize,
    seed: u64,
    descriptor: Option<DescriptorKind>,
) -> Result<CvReport> {
    cross_validate_with(xs, ys, k, seed, descriptor, spec.name(), |tx, ty, ex, s| {
        spec.fit_predict(tx, ty, ex, s)
    })
}

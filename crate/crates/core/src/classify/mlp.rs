//! Fully connected network with rectifier hidden layers, inverted dropout
//! and a logistic output, trained with Adam on binary cross-entropy.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

/// Input, four hidden layers and the output unit.
pub const DEFAULT_LAYERS: [usize; 6] = [512, 256, 128, 64, 32, 1];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layer_sizes: Vec<usize>,
    /// `weights[l]` is row-major `layer_sizes[l + 1] × layer_sizes[l]`.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub dropout_p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpHyper {
    pub epochs: usize,
    pub batch: usize,
    pub learning_rate: f64,
    pub dropout_p: f64,
    /// Share of each training fold held out for model selection.
    pub validation_fraction: f64,
}

impl Default for MlpHyper {
    fn default() -> Self {
        Self {
            epochs: 150,
            batch: 32,
            learning_rate: 1e-3,
            dropout_p: 0.5,
            validation_fraction: 0.15,
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `-y log σ(z) - (1 - y) log(1 - σ(z))` without overflow.
fn bce_from_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

impl MlpModel {
    pub fn zeros(layer_sizes: &[usize], dropout_p: f64) -> Result<Self> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return param(format!("invalid layer sizes {layer_sizes:?}"));
        }
        if *layer_sizes.last().unwrap() != 1 {
            return param("the output layer must have one unit");
        }
        if !(0.0..1.0).contains(&dropout_p) {
            return param(format!("dropout probability {dropout_p} outside [0, 1)"));
        }
        let weights = layer_sizes
            .windows(2)
            .map(|w| vec![0.0; w[0] * w[1]])
            .collect();
        let biases = layer_sizes[1..].iter().map(|&n| vec![0.0; n]).collect();
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
            dropout_p,
        })
    }

    /// Weights uniform in `±sqrt(6 / fan_in)`, biases zero.
    pub fn init(layer_sizes: &[usize], dropout_p: f64, seed: u64) -> Result<Self> {
        let mut m = Self::zeros(layer_sizes, dropout_p)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (l, w) in m.weights.iter_mut().enumerate() {
            let limit = (6.0 / layer_sizes[l] as f64).sqrt();
            for v in w.iter_mut() {
                *v = rng.random_range(-limit..limit);
            }
        }
        Ok(m)
    }

    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn input_len(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn n_params(&self) -> usize {
        self.weights.iter().map(Vec::len).sum::<usize>() + self.biases.iter().map(Vec::len).sum::<usize>()
    }

    /// Checks that the stored shapes chain.
    pub fn validate(&self) -> Result<()> {
        let n = self.layer_sizes.len();
        if n < 2 || self.weights.len() != n - 1 || self.biases.len() != n - 1 {
            return param("layer count does not match the stored parameters");
        }
        for l in 0..n - 1 {
            if self.weights[l].len() != self.layer_sizes[l] * self.layer_sizes[l + 1]
                || self.biases[l].len() != self.layer_sizes[l + 1]
            {
                return param(format!("layer {l} has inconsistent shapes"));
            }
        }
        if self.layer_sizes[n - 1] != 1 {
            return param("the output layer must have one unit");
        }
        Ok(())
    }

    /// Output logit. In train mode each hidden activation is kept with
    /// probability `1 - p` and scaled by `1 / (1 - p)`, with masks drawn
    /// from `seed`.
    pub fn logit(&self, x: &[f64], mode: Mode, seed: u64) -> Result<f64> {
        if x.len() != self.input_len() {
            return param(format!(
                "input has {} values, the model expects {}",
                x.len(),
                self.input_len()
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = x.to_vec();
        let last = self.n_layers() - 1;
        for l in 0..=last {
            let z = self.affine(l, &a);
            if l == last {
                return Ok(z[0]);
            }
            a = z.into_iter().map(|v| v.max(0.0)).collect();
            if mode == Mode::Train {
                apply_dropout(&mut a, self.dropout_p, &mut rng);
            }
        }
        unreachable!()
    }

    /// Probability of class 1.
    pub fn forward(&self, x: &[f64], mode: Mode, seed: u64) -> Result<f64> {
        Ok(sigmoid(self.logit(x, mode, seed)?))
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(usize::from(self.logit(x, Mode::Infer, 0)? > 0.0))
    }

    fn affine(&self, l: usize, a: &[f64]) -> Vec<f64> {
        let n_in = self.layer_sizes[l];
        self.weights[l]
            .chunks_exact(n_in)
            .zip(&self.biases[l])
            .map(|(row, b)| dot(row, a) + b)
            .collect()
    }

    /// Mean cross-entropy over `(xs, ys)` and its gradient, laid out like
    /// `weights` and `biases`. Dropout is applied when `rng` is given.
    pub fn loss_and_gradient(
        &self,
        xs: &[&[f64]],
        ys: &[f64],
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> (f64, Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let n_layers = self.n_layers();
        let mut gw: Vec<Vec<f64>> = self.weights.iter().map(|w| vec![0.0; w.len()]).collect();
        let mut gb: Vec<Vec<f64>> = self.biases.iter().map(|b| vec![0.0; b.len()]).collect();
        let mut loss = 0.0;
        let scale = 1.0 / xs.len() as f64;
        // activations[l] is the input to layer l (after mask and scaling)
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(n_layers);
        for (x, &y) in xs.iter().zip(ys) {
            acts.clear();
            acts.push(x.to_vec());
            let mut logit = 0.0;
            for l in 0..n_layers {
                let z = self.affine(l, &acts[l]);
                if l + 1 == n_layers {
                    logit = z[0];
                } else {
                    let mut a: Vec<f64> = z.into_iter().map(|v| v.max(0.0)).collect();
                    if let Some(r) = rng.as_deref_mut() {
                        apply_dropout(&mut a, self.dropout_p, r);
                    }
                    acts.push(a);
                }
            }
            loss += bce_from_logit(logit, y) * scale;
            let mut delta = vec![(sigmoid(logit) - y) * scale];
            for l in (0..n_layers).rev() {
                let n_in = self.layer_sizes[l];
                let input = &acts[l];
                for (j, &d) in delta.iter().enumerate() {
                    if d != 0.0 {
                        axpy(d, input, &mut gw[l][j * n_in..(j + 1) * n_in]);
                        gb[l][j] += d;
                    }
                }
                if l == 0 {
                    break;
                }
                let mut back = vec![0.0; n_in];
                for (j, &d) in delta.iter().enumerate() {
                    if d != 0.0 {
                        axpy(d, &self.weights[l][j * n_in..(j + 1) * n_in], &mut back);
                    }
                }
                // The stored activation is zero exactly where the rectifier
                // was inactive or the unit was dropped; elsewhere it equals
                // the pre-activation times the dropout scale.
                let keep_scale = if rng.is_some() { 1.0 / (1.0 - self.dropout_p) } else { 1.0 };
                for (b, &a) in back.iter_mut().zip(input.iter()) {
                    *b = if a > 0.0 { *b * keep_scale } else { 0.0 };
                }
                delta = back;
            }
        }
        (loss, gw, gb)
    }
}

fn apply_dropout(a: &mut [f64], p: f64, rng: &mut ChaCha8Rng) {
    if p == 0.0 {
        return;
    }
    let keep = 1.0 - p;
    for v in a.iter_mut() {
        if rng.random::<f64>() < keep {
            *v /= keep;
        } else {
            *v = 0.0;
        }
    }
}

struct Adam {
    m_w: Vec<Vec<f64>>,
    v_w: Vec<Vec<f64>>,
    m_b: Vec<Vec<f64>>,
    v_b: Vec<Vec<f64>>,
    t: i32,
    lr: f64,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(model: &MlpModel, lr: f64) -> Self {
        let zw = || model.weights.iter().map(|w| vec![0.0; w.len()]).collect::<Vec<_>>();
        let zb = || model.biases.iter().map(|b| vec![0.0; b.len()]).collect::<Vec<_>>();
        Self {
            m_w: zw(),
            v_w: zw(),
            m_b: zb(),
            v_b: zb(),
            t: 0,
            lr,
        }
    }

    fn step(&mut self, model: &mut MlpModel, gw: &[Vec<f64>], gb: &[Vec<f64>]) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        let lr = self.lr;
        let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for i in 0..p.len() {
                m[i] = Self::B1 * m[i] + (1.0 - Self::B1) * g[i];
                v[i] = Self::B2 * v[i] + (1.0 - Self::B2) * g[i] * g[i];
                p[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + Self::EPS);
            }
        };
        for l in 0..model.weights.len() {
            update(&mut model.weights[l], &gw[l], &mut self.m_w[l], &mut self.v_w[l]);
            update(&mut model.biases[l], &gb[l], &mut self.m_b[l], &mut self.v_b[l]);
        }
    }
}

/// Share of `xs` whose predicted class equals `ys`.
pub fn accuracy(model: &MlpModel, xs: &[&[f64]], ys: &[usize]) -> Result<f64> {
    if xs.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0;
    for (x, &y) in xs.iter().zip(ys) {
        if model.predict(x)? == y {
            hits += 1;
        }
    }
    Ok(hits as f64 / xs.len() as f64)
}

/// Mini-batch Adam on cross-entropy. The returned model is the one with the
/// best validation accuracy over all epochs (earliest on ties); with an
/// empty validation set the last epoch is returned.
pub fn mlp_train(
    layer_sizes: &[usize],
    train_x: &[&[f64]],
    train_y: &[usize],
    val_x: &[&[f64]],
    val_y: &[usize],
    hyper: &MlpHyper,
    seed: u64,
) -> Result<MlpModel> {
    if train_x.len() != train_y.len() || val_x.len() != val_y.len() {
        return param("feature and label counts differ");
    }
    if !(train_y.contains(&0) && train_y.contains(&1)) || train_y.iter().any(|&y| y > 1) {
        return param("training set needs labels 0 and 1, and nothing else");
    }
    if hyper.batch == 0 || hyper.epochs == 0 {
        return param("batch size and epoch count must be positive");
    }
    if let Some(x) = train_x.iter().chain(val_x).find(|x| x.len() != layer_sizes[0]) {
        return param(format!("row of length {} for input layer {}", x.len(), layer_sizes[0]));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = MlpModel::init(layer_sizes, hyper.dropout_p, rng.random())?;
    let mut opt = Adam::new(&model, hyper.learning_rate);
    let mut order: Vec<usize> = (0..train_x.len()).collect();
    let mut best: Option<(f64, MlpModel)> = None;
    for _ in 0..hyper.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(hyper.batch) {
            let xs: Vec<&[f64]> = chunk.iter().map(|&i| train_x[i]).collect();
            let ys: Vec<f64> = chunk.iter().map(|&i| train_y[i] as f64).collect();
            let (_, gw, gb) = model.loss_and_gradient(&xs, &ys, Some(&mut rng));
            opt.step(&mut model, &gw, &gb);
        }
        if !val_x.is_empty() {
            let acc = accuracy(&model, val_x, val_y)?;
            if best.as_ref().is_none_or(|(b, _)| acc > *b) {
                best = Some((acc, model.clone()));
            }
        }
    }
    Ok(best.map_or(model, |(_, m)| m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_model_outputs_half() {
        let m = MlpModel::zeros(&DEFAULT_LAYERS, 0.5).unwrap();
        let x = vec![3.0; 512];
        assert_eq!(m.forward(&x, Mode::Infer, 0).unwrap(), 0.5);
        assert_eq!(m.forward(&x, Mode::Train, 9).unwrap(), 0.5);
        assert_eq!(m.n_layers(), 5);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let m = MlpModel::init(&[4, 3, 1], 0.5, 1).unwrap();
        assert!(m.forward(&[1.0; 5], Mode::Infer, 0).is_err());
        assert!(MlpModel::zeros(&[4, 3, 2], 0.5).is_err());
        assert!(MlpModel::zeros(&[4, 3, 1], 1.0).is_err());
    }

    #[test]
    fn inference_is_deterministic() {
        let m = MlpModel::init(&DEFAULT_LAYERS, 0.5, 4).unwrap();
        let x: Vec<f64> = (0..512).map(|i| (i as f64).sin()).collect();
        let a = m.forward(&x, Mode::Infer, 1).unwrap();
        let b = m.forward(&x, Mode::Infer, 2).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn init_respects_fan_in_limit() {
        let m = MlpModel::init(&[50, 20, 1], 0.5, 3).unwrap();
        let limit = (6.0f64 / 50.0).sqrt();
        assert!(m.weights[0].iter().all(|w| w.abs() < limit));
        assert!(m.biases.iter().flatten().all(|&b| b == 0.0));
    }

    #[test]
    fn single_class_training_rejected() {
        let x = [vec![0.0; 2], vec![1.0; 2]];
        let xs: Vec<&[f64]> = x.iter().map(|v| v.as_slice()).collect();
        let err = mlp_train(&[2, 3, 1], &xs, &[1, 1], &[], &[], &MlpHyper::default(), 0);
        assert!(err.is_err());
    }

    #[test]
    fn stable_cross_entropy() {
        assert!((bce_from_logit(0.0, 1.0) - 2f64.ln()).abs() < 1e-15);
        assert!(bce_from_logit(800.0, 1.0) < 1e-300);
        assert!((bce_from_logit(-800.0, 1.0) - 800.0).abs() < 1e-9);
        assert_eq!(sigmoid(-1000.0), 0.0);
    }
}

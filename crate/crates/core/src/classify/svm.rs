//! Soft-margin support vector machine with a Gaussian kernel, trained by
//! sequential minimal optimization on the dual.

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    /// `α_i y_i` for each support vector.
    pub dual_coeffs: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmHyper {
    pub c: f64,
    /// `None` picks `1 / (d · mean feature variance)`.
    pub gamma: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmHyper {
    fn default() -> Self {
        Self {
            c: 10.0,
            gamma: None,
            tol: 1e-3,
            max_iter: 1_000_000,
        }
    }
}

/// Result of [`svm_train`] with the decision values seen by the solver.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmFit {
    pub model: SvmModel,
    /// Dual variables for every training point.
    pub alpha: Vec<f64>,
    /// Decision value of every training point at convergence.
    pub train_decision: Vec<f64>,
    pub iterations: usize,
}

pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

/// `1 / (d · mean per-feature variance)`; 1 / d for constant data.
pub fn default_gamma(xs: &[&[f64]]) -> f64 {
    let d = xs.first().map_or(1, |x| x.len()).max(1);
    let n = xs.len() as f64;
    let mut total = 0.0;
    for j in 0..d {
        let mean = xs.iter().map(|x| x[j]).sum::<f64>() / n;
        total += xs.iter().map(|x| (x[j] - mean).powi(2)).sum::<f64>() / n;
    }
    let mean_var = total / d as f64;
    if mean_var > 0.0 {
        1.0 / (d as f64 * mean_var)
    } else {
        1.0 / d as f64
    }
}

fn sign(label: usize) -> f64 {
    if label == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Solves `min ½ αᵀQα - Σα` subject to `0 ≤ α ≤ C`, `Σ y α = 0` by
/// repeatedly optimizing the maximal violating pair, until the violation
/// drops to `tol`. Labels are 0 and 1; class 1 is the positive side.
pub fn svm_train(xs: &[&[f64]], labels: &[usize], hyper: &SvmHyper) -> Result<SvmFit> {
    let n = xs.len();
    if n != labels.len() {
        return param("feature and label counts differ");
    }
    if !(labels.contains(&0) && labels.contains(&1)) || labels.iter().any(|&l| l > 1) {
        return param("training set needs labels 0 and 1, and nothing else");
    }
    let d = xs[0].len();
    if xs.iter().any(|x| x.len() != d) {
        return param("rows differ in length");
    }
    let c = hyper.c;
    if !(c.is_finite() && c > 0.0) {
        return param(format!("C must be positive, got {c}"));
    }
    let gamma = hyper.gamma.unwrap_or_else(|| default_gamma(xs));
    if !(gamma.is_finite() && gamma > 0.0) {
        return param(format!("gamma must be positive, got {gamma}"));
    }
    let y: Vec<f64> = labels.iter().map(|&l| sign(l)).collect();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        k[i * n + i] = 1.0;
        for j in 0..i {
            let v = rbf(xs[i], xs[j], gamma);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    let q = |i: usize, j: usize| y[i] * y[j] * k[i * n + j];

    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);
    let mut iterations = 0;
    loop {
        let mut i = usize::MAX;
        let mut g_max = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut g_min = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            if up(alpha[t], y[t]) && v > g_max {
                g_max = v;
                i = t;
            }
            if low(alpha[t], y[t]) && v < g_min {
                g_min = v;
                j = t;
            }
        }
        if g_max - g_min <= hyper.tol || i == usize::MAX || j == usize::MAX {
            break;
        }
        if iterations >= hyper.max_iter {
            break;
        }
        iterations += 1;
        let (old_ai, old_aj) = (alpha[i], alpha[j]);
        let quad = (q(i, i) + q(j, j) - 2.0 * y[i] * y[j] * q(i, j)).max(1e-12);
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_ai, alpha[j] - old_aj);
        for t in 0..n {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
    }

    // bias from free vectors, or the middle of the feasible interval
    let mut free_sum = 0.0;
    let mut free_n = 0;
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            free_sum += yg;
            free_n += 1;
        } else if (alpha[t] == 0.0) == (y[t] > 0.0) {
            // at a bound where only a larger ρ would violate optimality
            ub = ub.min(yg);
        } else {
            lb = lb.max(yg);
        }
    }
    let rho = if free_n > 0 {
        free_sum / free_n as f64
    } else {
        0.5 * (ub + lb)
    };
    let bias = -rho;
    let train_decision = (0..n).map(|t| y[t] * (grad[t] + 1.0) + bias).collect();
    let mut support_vectors = Vec::new();
    let mut dual_coeffs = Vec::new();
    for t in 0..n {
        if alpha[t] > 0.0 {
            support_vectors.push(xs[t].to_vec());
            dual_coeffs.push(alpha[t] * y[t]);
        }
    }
    Ok(SvmFit {
        model: SvmModel {
            support_vectors,
            dual_coeffs,
            bias,
            gamma,
            c,
        },
        alpha,
        train_decision,
        iterations,
    })
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.support_vectors.first().map_or(0, Vec::len)
    }

    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return param(format!(
                "input has {} values, the model expects {}",
                x.len(),
                self.dim()
            ));
        }
        Ok(self
            .support_vectors
            .iter()
            .zip(&self.dual_coeffs)
            .map(|(sv, a)| a * rbf(sv, x, self.gamma))
            .sum::<f64>()
            + self.bias)
    }

    /// Class 1 for a positive decision value, class 0 otherwise.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(usize::from(self.decision(x)? > 0.0))
    }

    pub fn validate(&self) -> Result<()> {
        if self.support_vectors.len() != self.dual_coeffs.len() || self.support_vectors.is_empty() {
            return param("support vectors and coefficients disagree");
        }
        let d = self.dim();
        if self.support_vectors.iter().any(|v| v.len() != d) {
            return param("support vectors differ in length");
        }
        if !(self.gamma > 0.0 && self.c > 0.0) {
            return param("gamma and C must be positive");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(v: &[Vec<f64>]) -> Vec<&[f64]> {
        v.iter().map(|r| r.as_slice()).collect()
    }

    #[test]
    fn xor_is_separated() {
        let x = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]];
        let y = [0, 0, 1, 1];
        let fit = svm_train(
            &rows(&x),
            &y,
            &SvmHyper {
                c: 10.0,
                gamma: Some(1.0),
                ..SvmHyper::default()
            },
        )
        .unwrap();
        for (xi, &yi) in x.iter().zip(&y) {
            assert_eq!(fit.model.predict(xi).unwrap(), yi);
        }
    }

    #[test]
    fn box_constraints_and_kkt_hold() {
        let x: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let t = i as f64 * 0.37;
                vec![t.sin() * 2.0, (t * 1.7).cos() + if i % 2 == 0 { 0.8 } else { -0.8 }]
            })
            .collect();
        let y: Vec<usize> = (0..40).map(|i| i % 2).collect();
        let hyper = SvmHyper {
            c: 2.0,
            gamma: Some(0.7),
            tol: 1e-3,
            ..SvmHyper::default()
        };
        let fit = svm_train(&rows(&x), &y, &hyper).unwrap();
        for ((a, &f), &l) in fit.alpha.iter().zip(&fit.train_decision).zip(&y) {
            assert!((0.0..=hyper.c).contains(a));
            let margin = sign(l) * f;
            if *a == 0.0 {
                assert!(margin >= 1.0 - hyper.tol);
            } else if *a == hyper.c {
                assert!(margin <= 1.0 + hyper.tol);
            } else {
                assert!((margin - 1.0).abs() <= hyper.tol);
            }
        }
        let pos = fit.model.dual_coeffs.iter().any(|&a| a > 0.0);
        let neg = fit.model.dual_coeffs.iter().any(|&a| a < 0.0);
        assert!(pos && neg);
        for (xi, f) in x.iter().zip(&fit.train_decision) {
            assert!((fit.model.decision(xi).unwrap() - f).abs() < 1e-9);
        }
    }

    #[test]
    fn single_class_and_dimension_errors() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(svm_train(&rows(&x), &[1, 1], &SvmHyper::default()).is_err());
        let fit = svm_train(&rows(&x), &[0, 1], &SvmHyper::default()).unwrap();
        assert!(fit.model.predict(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn default_gamma_scales_with_variance() {
        let x = vec![vec![0.0, 0.0], vec![2.0, 2.0]];
        assert!((default_gamma(&rows(&x)) - 0.5).abs() < 1e-15);
    }
}

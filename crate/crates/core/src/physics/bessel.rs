//! Spherical Bessel functions of the first and second kind with derivatives.
//!
//! `j_n` comes from upward recurrence when every requested order is below
//! the argument and from Miller's downward recurrence otherwise. The
//! downward sweep is normalized against the closed form of `j_0` or `j_1`,
//! whichever is larger, so zeros of `sin x` do not spoil the scale. `y_n` is
//! always taken upward from its closed forms, which is the stable direction.

use crate::error::{Error, Result};

/// `j_n(x)`, `y_n(x)` and their derivatives for `n = 0..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct BesselTable {
    pub x: f64,
    pub j: Vec<f64>,
    pub y: Vec<f64>,
    pub dj: Vec<f64>,
    pub dy: Vec<f64>,
}

impl BesselTable {
    pub fn n_max(&self) -> usize {
        self.j.len() - 1
    }
}

/// Only the regular solution and its derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularTable {
    pub j: Vec<f64>,
    pub dj: Vec<f64>,
}

pub fn spherical_bessel_table(n_max: usize, x: f64) -> Result<BesselTable> {
    check_domain(x)?;
    let j = spherical_j(n_max + 1, x);
    let y = spherical_y(n_max + 1, x)?;
    let dj = derivative(&j, x);
    let dy = derivative(&y, x);
    if let Some(n) = dy.iter().position(|v| !v.is_finite()) {
        return Err(Error::Overflow { order: n + 1, x });
    }
    Ok(BesselTable {
        x,
        j: j[..=n_max].to_vec(),
        y: y[..=n_max].to_vec(),
        dj,
        dy,
    })
}

pub fn spherical_j_table(n_max: usize, x: f64) -> Result<RegularTable> {
    check_domain(x)?;
    let j = spherical_j(n_max + 1, x);
    let dj = derivative(&j, x);
    Ok(RegularTable {
        j: j[..=n_max].to_vec(),
        dj,
    })
}

fn check_domain(x: f64) -> Result<()> {
    if !(x.is_finite() && x > 0.0) {
        return Err(Error::Domain(format!(
            "spherical Bessel argument must be positive and finite, got {x}"
        )));
    }
    Ok(())
}

/// `f_n' = (n / x) f_n - f_{n+1}` for `n = 0..values.len() - 1`.
fn derivative(values: &[f64], x: f64) -> Vec<f64> {
    (0..values.len() - 1)
        .map(|n| n as f64 / x * values[n] - values[n + 1])
        .collect()
}

fn j0_j1(x: f64) -> (f64, f64) {
    let (s, c) = x.sin_cos();
    if x < 1e-3 {
        // series avoids the cancellation in sin/x² - cos/x
        let x2 = x * x;
        (
            1.0 - x2 / 6.0 + x2 * x2 / 120.0,
            x / 3.0 * (1.0 - x2 / 10.0 + x2 * x2 / 280.0),
        )
    } else {
        (s / x, s / (x * x) - c / x)
    }
}

/// `j_0 .. j_top` inclusive.
fn spherical_j(top: usize, x: f64) -> Vec<f64> {
    let (j0, j1) = j0_j1(x);
    let mut out = vec![0.0; top + 1];
    out[0] = j0;
    if top == 0 {
        return out;
    }
    out[1] = j1;
    if (top as f64) < x {
        for n in 1..top {
            out[n + 1] = (2 * n + 1) as f64 / x * out[n] - out[n - 1];
        }
        return out;
    }

    let start = top.max(x.ceil() as usize) + 20 + (10.0 * x.cbrt()).ceil() as usize;
    let mut upper = 0.0_f64;
    let mut current = 1e-300_f64;
    // values for n > top are discarded; values at or below top are kept
    for n in (0..start).rev() {
        let m = n + 1;
        let lower = (2 * m + 1) as f64 / x * current - upper;
        upper = current;
        current = lower;
        if n <= top {
            out[n] = current;
        }
        if current.abs() > 1e250 {
            let s = 1e-250;
            current *= s;
            upper *= s;
            for v in out.iter_mut().skip(n) {
                *v *= s;
            }
        }
    }
    let scale = if j0.abs() >= j1.abs() {
        j0 / out[0]
    } else {
        j1 / out[1]
    };
    for v in out.iter_mut() {
        *v *= scale;
    }
    out
}

/// `y_0 .. y_top` inclusive.
fn spherical_y(top: usize, x: f64) -> Result<Vec<f64>> {
    let (s, c) = x.sin_cos();
    let mut out = vec![0.0; top + 1];
    out[0] = -c / x;
    if top == 0 {
        return Ok(out);
    }
    out[1] = -c / (x * x) - s / x;
    for n in 1..top {
        out[n + 1] = (2 * n + 1) as f64 / x * out[n] - out[n - 1];
        if !out[n + 1].is_finite() {
            return Err(Error::Overflow { order: n + 1, x });
        }
    }
    Ok(out)
}

//! Materials, geometry and the analytic backscattering form function.
//!
//! The partial-wave sums are carried out with the outgoing Hankel function
//! `h_n = j_n + i y_n` (time factor `e^{-iωt}`) and then conjugated, so every
//! [`FormFunction`] handed out uses the `e^{+jωt}` convention of the
//! transforms in [`crate::signal`]: a pure delay `τ` is `e^{-jωτ}` and the
//! propagation factor of the round trip to range `r` is `e^{-2jkr}`.
//!
//! Phases are referenced to the sphere centre unless a form function has
//! been shifted with [`FormFunction::referenced_to_front_surface`].

pub mod bessel;
mod shell;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

pub use bessel::{spherical_bessel_table, BesselTable};
pub use shell::{
    form_function_shell, form_function_shell_detailed, form_function_shell_extended,
    ShellEvaluation,
};

/// Inviscid fluid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluidMedium {
    pub density: f64,
    pub sound_speed: f64,
}

impl FluidMedium {
    pub fn new(density: f64, sound_speed: f64) -> Result<Self> {
        let m = Self {
            density,
            sound_speed,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.density.is_finite() && self.density > 0.0) {
            return param(format!("fluid density must be positive, got {}", self.density));
        }
        if !(self.sound_speed.is_finite() && self.sound_speed > 0.0) {
            return param(format!(
                "fluid sound speed must be positive, got {}",
                self.sound_speed
            ));
        }
        Ok(())
    }

    pub const fn water() -> Self {
        Self {
            density: 1000.0,
            sound_speed: 1480.0,
        }
    }

    pub const fn air() -> Self {
        Self {
            density: 1.29,
            sound_speed: 343.0,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "water" => Some(Self::water()),
            "air" => Some(Self::air()),
            _ => None,
        }
    }

    pub fn wavenumber(&self, freq_hz: f64) -> f64 {
        2.0 * PI * freq_hz / self.sound_speed
    }
}

/// Isotropic elastic solid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElasticSolid {
    pub density: f64,
    pub longitudinal_speed: f64,
    pub shear_speed: f64,
}

impl ElasticSolid {
    pub fn new(density: f64, longitudinal_speed: f64, shear_speed: f64) -> Result<Self> {
        let s = Self {
            density,
            longitudinal_speed,
            shear_speed,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.density.is_finite() && self.density > 0.0) {
            return param(format!("solid density must be positive, got {}", self.density));
        }
        if !(self.shear_speed.is_finite() && self.shear_speed > 0.0) {
            return param(format!("shear speed must be positive, got {}", self.shear_speed));
        }
        if !(self.longitudinal_speed.is_finite() && self.longitudinal_speed > self.shear_speed) {
            return param(format!(
                "longitudinal speed {} must exceed shear speed {}",
                self.longitudinal_speed, self.shear_speed
            ));
        }
        Ok(())
    }

    pub const fn aluminium() -> Self {
        Self {
            density: 2700.0,
            longitudinal_speed: 6420.0,
            shear_speed: 3040.0,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "aluminium" | "aluminum" => Some(Self::aluminium()),
            _ => None,
        }
    }
}

/// Elastic spherical shell filled with a fluid and immersed in another.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShellTarget {
    pub outer_radius_m: f64,
    pub thickness_m: f64,
    pub shell: ElasticSolid,
    pub filler: FluidMedium,
    pub host: FluidMedium,
}

impl ShellTarget {
    pub fn new(
        outer_radius_m: f64,
        thickness_m: f64,
        shell: ElasticSolid,
        filler: FluidMedium,
        host: FluidMedium,
    ) -> Result<Self> {
        let t = Self {
            outer_radius_m,
            thickness_m,
            shell,
            filler,
            host,
        };
        t.validate()?;
        Ok(t)
    }

    /// Aluminium shell in water.
    pub fn aluminium_in_water(outer_radius_m: f64, thickness_m: f64, filler: FluidMedium) -> Result<Self> {
        Self::new(
            outer_radius_m,
            thickness_m,
            ElasticSolid::aluminium(),
            filler,
            FluidMedium::water(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.outer_radius_m.is_finite() && self.outer_radius_m > 0.0) {
            return param(format!("outer radius must be positive, got {}", self.outer_radius_m));
        }
        if !(self.thickness_m > 0.0 && self.thickness_m < self.outer_radius_m) {
            return param(format!(
                "thickness {} must lie in (0, {})",
                self.thickness_m, self.outer_radius_m
            ));
        }
        self.shell.validate()?;
        self.filler.validate()?;
        self.host.validate()
    }

    pub fn inner_radius_m(&self) -> f64 {
        self.outer_radius_m - self.thickness_m
    }
}

/// Complex far-field backscattering form function on a frequency grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormFunction {
    pub freq_hz: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Outer radius of the analytic target; unknown for estimates.
    pub outer_radius_m: Option<f64>,
}

impl FormFunction {
    pub fn new(freq_hz: Vec<f64>, values: Vec<Complex64>, outer_radius_m: Option<f64>) -> Result<Self> {
        if freq_hz.len() != values.len() {
            return param(format!(
                "{} frequencies but {} values",
                freq_hz.len(),
                values.len()
            ));
        }
        if freq_hz.windows(2).any(|w| !(w[1] > w[0])) {
            return param("form-function frequencies must be strictly increasing");
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return param("form-function values must be finite");
        }
        Ok(Self {
            freq_hz,
            values,
            outer_radius_m,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn magnitude(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    /// `ka` for each grid point, when the radius is known.
    pub fn ka(&self, host: &FluidMedium) -> Option<Vec<f64>> {
        let a = self.outer_radius_m?;
        Some(self.freq_hz.iter().map(|&f| host.wavenumber(f) * a).collect())
    }

    /// Linear interpolation of the complex value; zero outside the grid.
    pub fn interpolate(&self, freq_hz: f64) -> Complex64 {
        let zero = Complex64::new(0.0, 0.0);
        let n = self.freq_hz.len();
        if n == 0 || freq_hz < self.freq_hz[0] || freq_hz > self.freq_hz[n - 1] {
            return zero;
        }
        if n == 1 {
            return self.values[0];
        }
        let hi = self.freq_hz.partition_point(|&f| f < freq_hz).clamp(1, n - 1);
        let lo = hi - 1;
        let t = (freq_hz - self.freq_hz[lo]) / (self.freq_hz[hi] - self.freq_hz[lo]);
        self.values[lo] * (1.0 - t) + self.values[hi] * t
    }

    /// Moves the phase reference from the sphere centre to the point of the
    /// outer surface facing the sonar, i.e. removes the `2a/c` advance of
    /// the specular return.
    pub fn referenced_to_front_surface(&self, host: &FluidMedium) -> Result<FormFunction> {
        let Some(a) = self.outer_radius_m else {
            return param("front-surface reference needs the outer radius");
        };
        let values = self
            .freq_hz
            .iter()
            .zip(&self.values)
            .map(|(&f, &v)| v * Complex64::from_polar(1.0, -2.0 * host.wavenumber(f) * a))
            .collect();
        Ok(FormFunction {
            freq_hz: self.freq_hz.clone(),
            values,
            outer_radius_m: self.outer_radius_m,
        })
    }
}

/// Uniform grid of `n` points from `start_hz` to `end_hz` inclusive.
pub fn frequency_grid(start_hz: f64, end_hz: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start_hz],
        _ => {
            let step = (end_hz - start_hz) / (n - 1) as f64;
            (0..n).map(|i| start_hz + i as f64 * step).collect()
        }
    }
}

/// Number of partial waves needed for a converged sum up to `ka_max`.
pub fn truncation_order(ka_max: f64) -> usize {
    (ka_max + 4.0 * ka_max.cbrt() + 10.0).ceil() as usize
}

fn check_grid(freq_hz: &[f64]) -> Result<()> {
    if freq_hz.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
        return param("frequency grid must be positive");
    }
    if freq_hz.windows(2).any(|w| !(w[1] > w[0])) {
        return param("frequency grid must be strictly increasing");
    }
    Ok(())
}

/// Backscatter from an immovable rigid sphere, with `n_max` explicit.
///
/// Returned in the `e^{-iωt}` convention used internally by the series.
pub fn rigid_series(ka: f64, n_max: usize) -> Result<Complex64> {
    let t = spherical_bessel_table(n_max, ka)?;
    let mut sum = Complex64::new(0.0, 0.0);
    for n in 0..=n_max {
        let dh = Complex64::new(t.dj[n], t.dy[n]);
        let b = -t.dj[n] / dh;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        sum += b * ((2 * n + 1) as f64 * sign);
    }
    Ok(sum * 2.0 / (Complex64::i() * ka))
}

/// Form function of a rigid immovable sphere of `radius_m` in `host`.
pub fn form_function_rigid(freq_hz: &[f64], radius_m: f64, host: &FluidMedium) -> Result<FormFunction> {
    check_grid(freq_hz)?;
    host.validate()?;
    if !(radius_m.is_finite() && radius_m > 0.0) {
        return param(format!("radius must be positive, got {radius_m}"));
    }
    let values = freq_hz
        .iter()
        .map(|&f| {
            let ka = host.wavenumber(f) * radius_m;
            rigid_series(ka, truncation_order(ka)).map(|v| v.conj())
        })
        .collect::<Result<Vec<_>>>()?;
    FormFunction::new(freq_hz.to_vec(), values, Some(radius_m))
}

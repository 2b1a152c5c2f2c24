//! Fixed-length descriptors of one echo: estimated form function, echo
//! spectrum and decimated echo waveform.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::inversion::{estimate_form_function_at, estimate_range, segment_echo, SegmentationResult};
use crate::physics::{FluidMedium, FormFunction};
use crate::signal::{forward_transform, Waveform};
use crate::synth::FillerClass;

/// Length of every descriptor.
pub const DESCRIPTOR_LEN: usize = 512;

/// Band covered by the spectral descriptors.
pub const BAND_HZ: (f64, f64) = (30.0e3, 160.0e3);

/// Floor applied before taking logarithms.
const LOG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescriptorKind {
    FormFunction,
    Frequency,
    Time,
}

impl DescriptorKind {
    pub const ALL: [DescriptorKind; 3] = [
        DescriptorKind::FormFunction,
        DescriptorKind::Frequency,
        DescriptorKind::Time,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DescriptorKind::FormFunction => "form_function",
            DescriptorKind::Frequency => "frequency",
            DescriptorKind::Time => "time",
        }
    }

    /// Row title used in reports.
    pub fn title(self) -> &'static str {
        match self {
            DescriptorKind::FormFunction => "Form Function",
            DescriptorKind::Frequency => "Frequency Domain",
            DescriptorKind::Time => "Time Domain",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl std::fmt::Display for DescriptorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Magnitude scale of the spectral descriptors.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MagnitudeScale {
    #[default]
    Linear,
    /// `20 log10(max(|x|, 1e-12))`.
    Decibel,
}

impl MagnitudeScale {
    fn apply(self, m: f64) -> f64 {
        match self {
            MagnitudeScale::Linear => m,
            MagnitudeScale::Decibel => 20.0 * m.max(LOG_FLOOR).log10(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor {
    pub kind: DescriptorKind,
    pub values: Vec<f64>,
    pub label: Option<FillerClass>,
}

impl Descriptor {
    pub fn new(kind: DescriptorKind, values: Vec<f64>, label: Option<FillerClass>) -> Result<Self> {
        if values.len() != DESCRIPTOR_LEN {
            return param(format!(
                "descriptor needs {DESCRIPTOR_LEN} values, got {}",
                values.len()
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return param("descriptor values must be finite");
        }
        Ok(Self { kind, values, label })
    }

    pub fn with_label(mut self, label: FillerClass) -> Self {
        self.label = Some(label);
        self
    }
}

/// `DESCRIPTOR_LEN` uniformly spaced frequencies spanning [`BAND_HZ`].
pub fn descriptor_grid() -> Vec<f64> {
    crate::physics::frequency_grid(BAND_HZ.0, BAND_HZ.1, DESCRIPTOR_LEN)
}

/// Linear interpolation of `(x, y)` at `at`, holding the end values
/// outside the sampled range. `x` must be increasing.
fn interp_clamped(x: &[f64], y: &[f64], at: f64) -> f64 {
    let n = x.len();
    if at <= x[0] {
        return y[0];
    }
    if at >= x[n - 1] {
        return y[n - 1];
    }
    let hi = x.partition_point(|&v| v < at).clamp(1, n - 1);
    let lo = hi - 1;
    let t = (at - x[lo]) / (x[hi] - x[lo]);
    y[lo] + t * (y[hi] - y[lo])
}

fn resample_band(freq: &[f64], mag: &[f64], scale: MagnitudeScale) -> Result<Vec<f64>> {
    let (lo, hi) = BAND_HZ;
    let inside = freq.iter().filter(|f| (lo..=hi).contains(*f)).count();
    if inside == 0 {
        return param(format!("no samples inside the {lo}-{hi} Hz band"));
    }
    Ok(descriptor_grid()
        .into_iter()
        .map(|f| scale.apply(interp_clamped(freq, mag, f)))
        .collect())
}

/// `|f|` resampled onto the descriptor grid.
pub fn descriptor_form_function(ff: &FormFunction, scale: MagnitudeScale) -> Result<Descriptor> {
    let values = resample_band(&ff.freq_hz, &ff.magnitude(), scale)?;
    Descriptor::new(DescriptorKind::FormFunction, values, None)
}

/// In-band magnitude spectrum of the gated echo.
pub fn descriptor_frequency(segment: &Waveform, scale: MagnitudeScale) -> Result<Descriptor> {
    if segment.is_empty() {
        return param("empty segment");
    }
    let spec = forward_transform(segment, segment.len())?;
    let mag: Vec<f64> = spec.values.iter().map(|v| v.norm()).collect();
    let values = resample_band(&spec.freq_hz, &mag, scale)?;
    Descriptor::new(DescriptorKind::Frequency, values, None)
}

/// Gated echo decimated to `DESCRIPTOR_LEN` samples.
///
/// The band-limited interpolant keeps the bins below the new Nyquist
/// frequency and is evaluated at the centres of `DESCRIPTOR_LEN` equal
/// cells, so reversing the segment reverses the descriptor.
pub fn descriptor_time(segment: &Waveform) -> Result<Descriptor> {
    let values = band_limited_resample(&segment.samples, DESCRIPTOR_LEN)?;
    Descriptor::new(DescriptorKind::Time, values, None)
}

fn band_limited_resample(x: &[f64], m: usize) -> Result<Vec<f64>> {
    let n = x.len();
    if n < m {
        return param(format!("cannot decimate {n} samples to {m}"));
    }
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    // output sample i sits at input position (i + 1/2) n/m - 1/2
    let shift = 0.5 * n as f64 / m as f64 - 0.5;
    let keep = m.div_ceil(2);
    let mut out = vec![Complex64::new(0.0, 0.0); m];
    for k in 0..keep {
        let phase = Complex64::from_polar(1.0, 2.0 * PI * k as f64 * shift / n as f64);
        out[k] = buf[k] * phase;
        if k > 0 {
            out[m - k] = buf[n - k] * phase.conj();
        }
    }
    planner.plan_fft_inverse(m).process(&mut out);
    Ok(out.iter().map(|c| c.re / n as f64).collect())
}

/// Per-position mean and standard deviation of a training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Smallest standard deviation used for scaling.
pub const STD_FLOOR: f64 = 1e-12;

impl Standardizer {
    pub fn fit(rows: &[&[f64]]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return param("cannot standardize an empty training set");
        };
        let d = first.len();
        if rows.iter().any(|r| r.len() != d) {
            return param("rows differ in length");
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; d];
        for r in rows {
            for (m, v) in mean.iter_mut().zip(r.iter()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = var.into_iter().map(|s| (s / n).sqrt().max(STD_FLOOR)).collect();
        Ok(Self { mean, std })
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }
}

/// Standardizes `train` and `apply` with statistics of `train` alone.
pub fn standardize(
    train: &[Descriptor],
    apply: &[Descriptor],
) -> Result<(Vec<Descriptor>, Vec<Descriptor>, Standardizer)> {
    let rows: Vec<&[f64]> = train.iter().map(|d| d.values.as_slice()).collect();
    let stats = Standardizer::fit(&rows)?;
    let map = |set: &[Descriptor]| {
        set.iter()
            .map(|d| Descriptor {
                kind: d.kind,
                values: stats.transform(&d.values),
                label: d.label,
            })
            .collect::<Vec<_>>()
    };
    Ok((map(train), map(apply), stats))
}

/// Everything extracted from one recording.
#[derive(Debug, Clone, PartialEq)]
pub struct EchoFeatures {
    pub segmentation: SegmentationResult,
    pub range_m: f64,
    pub form_function: FormFunction,
    pub descriptors: [Descriptor; 3],
}

impl EchoFeatures {
    pub fn descriptor(&self, kind: DescriptorKind) -> &Descriptor {
        &self.descriptors[kind as usize]
    }
}

/// Segmentation, range, form-function estimate and all three descriptors.
pub fn extract(
    recording: &Waveform,
    pulse: &Waveform,
    host: &FluidMedium,
    scale: MagnitudeScale,
) -> Result<EchoFeatures> {
    let seg = segment_echo(recording, pulse, host.sound_speed)?;
    let range = estimate_range(seg.delta_t_s, host.sound_speed)?;
    let ff = estimate_form_function_at(
        &seg.segment,
        seg.segment_offset_s(),
        pulse,
        range,
        host,
        BAND_HZ,
    )?;
    let descriptors = [
        descriptor_form_function(&ff, scale)?,
        descriptor_frequency(&seg.segment, scale)?,
        descriptor_time(&seg.segment)?,
    ];
    Ok(EchoFeatures {
        segmentation: seg,
        range_m: range,
        form_function: ff,
        descriptors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, n: usize, amp: f64) -> Waveform {
        Waveform::new(
            (0..n).map(|i| amp * (2.0 * PI * freq * i as f64 / 1e6).sin()).collect(),
            1e6,
        )
        .unwrap()
    }

    #[test]
    fn constant_form_function_gives_ones() {
        let grid = crate::physics::frequency_grid(25e3, 170e3, 97);
        let ff = FormFunction::new(grid, vec![Complex64::new(0.6, 0.8); 97], None).unwrap();
        let d = descriptor_form_function(&ff, MagnitudeScale::Linear).unwrap();
        assert_eq!(d.values.len(), DESCRIPTOR_LEN);
        assert!(d.values.iter().all(|v| (v - 1.0).abs() < 1e-15));
        let db = descriptor_form_function(&ff, MagnitudeScale::Decibel).unwrap();
        assert!(db.values.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn resampling_on_descriptor_grid_is_identity() {
        let grid = descriptor_grid();
        let values: Vec<Complex64> = grid.iter().map(|f| Complex64::new((f / 1e4).sin(), 0.3)).collect();
        let ff = FormFunction::new(grid, values.clone(), None).unwrap();
        let d = descriptor_form_function(&ff, MagnitudeScale::Linear).unwrap();
        for (a, b) in d.values.iter().zip(&values) {
            assert!((a - b.norm()).abs() < 1e-15);
        }
    }

    #[test]
    fn out_of_band_form_function_rejected() {
        let grid = crate::physics::frequency_grid(200e3, 300e3, 5);
        let ff = FormFunction::new(grid, vec![Complex64::new(1.0, 0.0); 5], None).unwrap();
        assert!(descriptor_form_function(&ff, MagnitudeScale::Linear).is_err());
    }

    #[test]
    fn zero_segment_gives_zero_descriptors() {
        let z = Waveform::zeros(2000, 1e6);
        assert!(descriptor_frequency(&z, MagnitudeScale::Linear)
            .unwrap()
            .values
            .iter()
            .all(|&v| v == 0.0));
        assert!(descriptor_time(&z).unwrap().values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn tone_spectrum_has_one_region() {
        let d = descriptor_frequency(&tone(80e3, 2000, 1.0), MagnitudeScale::Linear).unwrap();
        let grid = descriptor_grid();
        let peak = d
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!((grid[peak] - 80e3).abs() < 500.0);
        let strong = d.values.iter().filter(|&&v| v > 0.5 * d.values[peak]).count();
        assert!(strong <= 4, "{strong}");
    }

    #[test]
    fn decimated_tone_keeps_amplitude() {
        let d = descriptor_time(&tone(30e3, 2000, 0.7)).unwrap();
        let peak = d.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((peak - 0.7).abs() / 0.7 < 0.01, "{peak}");
    }

    #[test]
    fn reversed_segment_reverses_time_descriptor() {
        let seg = Waveform::new((0..2000).map(|i| ((i * i) as f64 * 1e-4).sin()).collect(), 1e6).unwrap();
        let mut rev = seg.clone();
        rev.samples.reverse();
        let a = descriptor_time(&seg).unwrap().values;
        let mut b = descriptor_time(&rev).unwrap().values;
        b.reverse();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    fn desc(values: Vec<f64>) -> Descriptor {
        Descriptor::new(DescriptorKind::Time, values, None).unwrap()
    }

    #[test]
    fn standardization_uses_train_statistics() {
        let train: Vec<Descriptor> = (0..10)
            .map(|i| desc((0..DESCRIPTOR_LEN).map(|j| (i * j) as f64 * 0.01 + 3.0).collect()))
            .collect();
        let probe = vec![desc(vec![5.0; DESCRIPTOR_LEN])];
        let (t, p, stats) = standardize(&train, &probe).unwrap();
        for j in 1..DESCRIPTOR_LEN {
            let col: Vec<f64> = t.iter().map(|d| d.values[j]).collect();
            let mean = col.iter().sum::<f64>() / 10.0;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 10.0;
            assert!(mean.abs() < 1e-9);
            assert!((var.sqrt() - 1.0).abs() < 1e-6);
        }
        // column 0 is constant: floor engaged, all zeros
        assert!(t.iter().all(|d| d.values[0] == 0.0));
        assert_eq!(p[0].values, stats.transform(&probe[0].values));
        // a second pass with the same statistics moves the data again
        let twice: Vec<f64> = stats.transform(&t[3].values);
        assert_ne!(twice, t[3].values);
        assert!(standardize(&[], &probe).is_err());
    }

    #[test]
    fn descriptor_length_enforced() {
        assert!(Descriptor::new(DescriptorKind::Time, vec![0.0; 10], None).is_err());
        assert!(Descriptor::new(DescriptorKind::Time, vec![f64::NAN; DESCRIPTOR_LEN], None).is_err());
    }
}

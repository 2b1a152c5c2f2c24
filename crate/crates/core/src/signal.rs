//! Pulse generation, real-signal transforms and matched filtering.
//!
//! Transforms use the `X[k] = Σ x[n] e^{-j2πkn/N}` kernel without scaling on
//! the forward side and `1/N` on the inverse side. Only the non-negative
//! half of the spectrum is stored; every signal in the pipeline is real.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

/// Pipeline-wide sample rate.
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 1.0e6;

/// Uniformly sampled real time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate_hz: f64,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return param(format!("sample rate must be positive, got {sample_rate_hz}"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return param(format!("sample {i} is not finite"));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn zeros(len: usize, sample_rate_hz: f64) -> Self {
        Self {
            samples: vec![0.0; len],
            sample_rate_hz,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum()
    }

    pub fn peak_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.abs()))
    }

    /// Copy of `len` samples starting at `start`, zero-filled past the end.
    pub fn slice(&self, start: usize, len: usize) -> Waveform {
        let mut out = vec![0.0; len];
        if start < self.samples.len() {
            let end = (start + len).min(self.samples.len());
            out[..end - start].copy_from_slice(&self.samples[start..end]);
        }
        Waveform {
            samples: out,
            sample_rate_hz: self.sample_rate_hz,
        }
    }

    /// Adds `scale * other` starting at sample `offset`; samples past the
    /// end of `self` are dropped.
    pub fn add_scaled(&mut self, other: &[f64], offset: usize, scale: f64) {
        for (dst, src) in self.samples.iter_mut().skip(offset).zip(other) {
            *dst += scale * src;
        }
    }
}

/// One-sided complex spectrum on the grid `i * sample_rate / n_fft`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub values: Vec<Complex64>,
    pub freq_hz: Vec<f64>,
    pub n_fft: usize,
    pub sample_rate_hz: f64,
}

impl Spectrum {
    /// Bin spacing in Hz.
    pub fn resolution_hz(&self) -> f64 {
        self.sample_rate_hz / self.n_fft as f64
    }
}

/// Linear chirp without amplitude taper.
pub fn make_chirp(
    f_start_hz: f64,
    f_end_hz: f64,
    duration_s: f64,
    sample_rate_hz: f64,
) -> Result<Waveform> {
    make_chirp_tapered(f_start_hz, f_end_hz, duration_s, sample_rate_hz, 0.0)
}

/// Linear chirp with an optional raised-cosine taper over `taper_fraction`
/// of the pulse at each end (0 disables the taper, 0.5 gives a Hann
/// envelope).
pub fn make_chirp_tapered(
    f_start_hz: f64,
    f_end_hz: f64,
    duration_s: f64,
    sample_rate_hz: f64,
    taper_fraction: f64,
) -> Result<Waveform> {
    if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
        return param(format!("sample rate must be positive, got {sample_rate_hz}"));
    }
    let nyquist = sample_rate_hz / 2.0;
    for f in [f_start_hz, f_end_hz] {
        if !(f > 0.0 && f < nyquist) {
            return param(format!(
                "chirp frequency {f} Hz outside (0, {nyquist}) Hz"
            ));
        }
    }
    if !(duration_s.is_finite() && duration_s > 0.0) {
        return param(format!("chirp duration must be positive, got {duration_s}"));
    }
    if !(0.0..=0.5).contains(&taper_fraction) {
        return param(format!("taper fraction {taper_fraction} outside [0, 0.5]"));
    }
    let len = (duration_s * sample_rate_hz).round() as usize;
    if len == 0 {
        return param("chirp shorter than one sample");
    }
    let sweep = (f_end_hz - f_start_hz) / duration_s;
    let taper_len = (taper_fraction * len as f64).round() as usize;
    let samples = (0..len)
        .map(|k| {
            let t = k as f64 / sample_rate_hz;
            let phase = f_start_hz * t + 0.5 * sweep * t * t;
            let s = (2.0 * PI * phase).sin();
            s * taper_weight(k, len, taper_len)
        })
        .collect();
    Waveform::new(samples, sample_rate_hz)
}

fn taper_weight(k: usize, len: usize, taper_len: usize) -> f64 {
    if taper_len == 0 {
        return 1.0;
    }
    let edge = k.min(len - 1 - k);
    if edge >= taper_len {
        1.0
    } else {
        0.5 * (1.0 - (PI * edge as f64 / taper_len as f64).cos())
    }
}

fn fft_full(input: Vec<Complex64>, inverse: bool) -> Vec<Complex64> {
    let mut buf = input;
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(buf.len())
    } else {
        planner.plan_fft_forward(buf.len())
    };
    fft.process(&mut buf);
    buf
}

/// Number of stored bins for a real transform of length `n_fft`.
pub fn one_sided_len(n_fft: usize) -> usize {
    n_fft / 2 + 1
}

/// One-sided spectrum of `w`, zero-padded to `n_fft`.
pub fn forward_transform(w: &Waveform, n_fft: usize) -> Result<Spectrum> {
    if n_fft == 0 || n_fft < w.len() {
        return param(format!(
            "n_fft = {n_fft} is shorter than the {}-sample signal",
            w.len()
        ));
    }
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    for (b, &s) in buf.iter_mut().zip(&w.samples) {
        b.re = s;
    }
    let mut full = fft_full(buf, false);
    full.truncate(one_sided_len(n_fft));
    let df = w.sample_rate_hz / n_fft as f64;
    let freq_hz = (0..full.len()).map(|i| i as f64 * df).collect();
    Ok(Spectrum {
        values: full,
        freq_hz,
        n_fft,
        sample_rate_hz: w.sample_rate_hz,
    })
}

/// Real signal of length `out_len` from a one-sided spectrum.
///
/// The imaginary parts of the DC bin and (for even `n_fft`) the Nyquist bin
/// are ignored, as they are for any real signal.
pub fn inverse_transform(s: &Spectrum, out_len: usize) -> Result<Waveform> {
    if out_len > s.n_fft {
        return param(format!(
            "out_len = {out_len} exceeds the transform length {}",
            s.n_fft
        ));
    }
    if s.values.len() != one_sided_len(s.n_fft) {
        return param(format!(
            "{} bins do not match a one-sided spectrum of n_fft = {}",
            s.values.len(),
            s.n_fft
        ));
    }
    let n = s.n_fft;
    let mut full = vec![Complex64::new(0.0, 0.0); n];
    full[0] = Complex64::new(s.values[0].re, 0.0);
    for k in 1..s.values.len() {
        if 2 * k == n {
            full[k] = Complex64::new(s.values[k].re, 0.0);
        } else {
            full[k] = s.values[k];
            full[n - k] = s.values[k].conj();
        }
    }
    let time = fft_full(full, true);
    let scale = 1.0 / n as f64;
    let samples = time.iter().take(out_len).map(|c| c.re * scale).collect();
    Ok(Waveform {
        samples,
        sample_rate_hz: s.sample_rate_hz,
    })
}

/// Cross-correlation of `recording` with `replica`, normalized by the
/// replica energy.
///
/// Output sample `k` is `Σ_m recording[k + m] replica[m] / Σ_m replica[m]²`,
/// so a copy of the replica starting at recording sample `k` with amplitude
/// `a` peaks at output sample `k` with height `a`. The output has the
/// length of the recording.
pub fn matched_filter(recording: &Waveform, replica: &Waveform) -> Result<Waveform> {
    if recording.sample_rate_hz != replica.sample_rate_hz {
        return param(format!(
            "sample-rate mismatch: recording {} Hz, replica {} Hz",
            recording.sample_rate_hz, replica.sample_rate_hz
        ));
    }
    if replica.is_empty() || replica.len() >= recording.len() {
        return param("replica must be non-empty and shorter than the recording");
    }
    let energy = replica.energy();
    if energy == 0.0 {
        return param("replica has zero energy");
    }
    let n = (recording.len() + replica.len() - 1).next_power_of_two();
    let to_buf = |w: &Waveform| {
        let mut b = vec![Complex64::new(0.0, 0.0); n];
        for (d, &s) in b.iter_mut().zip(&w.samples) {
            d.re = s;
        }
        b
    };
    let rec = fft_full(to_buf(recording), false);
    let rep = fft_full(to_buf(replica), false);
    let prod: Vec<Complex64> = rec.iter().zip(&rep).map(|(a, b)| a * b.conj()).collect();
    let corr = fft_full(prod, true);
    let scale = 1.0 / (n as f64 * energy);
    let samples = corr
        .iter()
        .take(recording.len())
        .map(|c| c.re * scale)
        .collect();
    Ok(Waveform {
        samples,
        sample_rate_hz: recording.sample_rate_hz,
    })
}

/// Magnitude of the analytic signal of `w`.
pub fn envelope(w: &Waveform) -> Vec<f64> {
    let n = w.len();
    if n == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex64> = w.samples.iter().map(|&s| Complex64::new(s, 0.0)).collect();
    buf = fft_full(buf, false);
    // zero negative frequencies, double positive ones
    for (k, v) in buf.iter_mut().enumerate() {
        if k == 0 || 2 * k == n {
            continue;
        }
        if 2 * k < n {
            *v *= 2.0;
        } else {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    let analytic = fft_full(buf, true);
    analytic.iter().map(|c| c.norm() / n as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_waveform(len: usize, seed: u64) -> Waveform {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..len).map(|_| rng.random_range(-1.0..1.0)).collect();
        Waveform::new(samples, DEFAULT_SAMPLE_RATE_HZ).unwrap()
    }

    fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
        let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
        let den: f64 = b.iter().map(|y| y * y).sum();
        (num / den).sqrt()
    }

    #[test]
    fn chirp_length_and_endpoints() {
        let c = make_chirp(160e3, 30e3, 1e-3, 1e6).unwrap();
        assert_eq!(c.len(), 1000);
        // phase-derivative estimate of instantaneous frequency
        let sweep = (30e3 - 160e3) / 1e-3;
        let inst = |t: f64| 160e3 + sweep * t;
        assert!((inst(0.0) - 160e3).abs() < 1e-9);
        assert!((inst(1e-3) - 30e3).abs() < 1e-6);
    }

    #[test]
    fn degenerate_sweep_is_a_tone() {
        let c = make_chirp(50e3, 50e3, 1e-3, 1e6).unwrap();
        for (k, s) in c.samples.iter().enumerate() {
            let expect = (2.0 * PI * 50e3 * k as f64 / 1e6).sin();
            assert!((s - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn chirp_rejects_frequency_above_nyquist() {
        assert!(make_chirp(600e3, 30e3, 1e-3, 1e6).is_err());
        assert!(make_chirp(160e3, 0.0, 1e-3, 1e6).is_err());
        assert!(make_chirp(160e3, 30e3, 0.0, 1e6).is_err());
    }

    #[test]
    fn taper_shapes_edges_only() {
        let c = make_chirp_tapered(160e3, 30e3, 1e-3, 1e6, 0.1).unwrap();
        let raw = make_chirp(160e3, 30e3, 1e-3, 1e6).unwrap();
        assert_eq!(c.samples[0], 0.0);
        assert_eq!(c.samples[500], raw.samples[500]);
    }

    #[test]
    fn impulse_has_flat_spectrum() {
        let mut s = vec![0.0; 64];
        s[0] = 1.0;
        let w = Waveform::new(s, 1e6).unwrap();
        let spec = forward_transform(&w, 128).unwrap();
        assert_eq!(spec.values.len(), 65);
        for v in &spec.values {
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
        assert_eq!(spec.freq_hz[1], 1e6 / 128.0);
    }

    #[test]
    fn bin_tone_has_single_dominant_bin() {
        let n = 256;
        let s = (0..n)
            .map(|i| (2.0 * PI * 10.0 * i as f64 / n as f64).cos())
            .collect();
        let spec = forward_transform(&Waveform::new(s, 1e6).unwrap(), n).unwrap();
        for (k, v) in spec.values.iter().enumerate() {
            if k == 10 {
                assert!((v.norm() - n as f64 / 2.0).abs() < 1e-9);
            } else {
                assert!(v.norm() < 1e-9);
            }
        }
    }

    #[test]
    fn transform_length_errors() {
        let w = random_waveform(100, 1);
        assert!(forward_transform(&w, 50).is_err());
        let spec = forward_transform(&w, 128).unwrap();
        assert!(inverse_transform(&spec, 129).is_err());
    }

    #[test]
    fn flat_spectrum_inverts_to_impulse() {
        let n = 32;
        let spec = Spectrum {
            values: vec![Complex64::new(1.0, 0.0); one_sided_len(n)],
            freq_hz: (0..one_sided_len(n)).map(|i| i as f64).collect(),
            n_fft: n,
            sample_rate_hz: 1.0,
        };
        let w = inverse_transform(&spec, n).unwrap();
        assert!((w.samples[0] - 1.0).abs() < 1e-12);
        assert!(w.samples[1..].iter().all(|s| s.abs() < 1e-12));

        let zero = Spectrum {
            values: vec![Complex64::new(0.0, 0.0); one_sided_len(n)],
            ..spec
        };
        assert!(inverse_transform(&zero, n)
            .unwrap()
            .samples
            .iter()
            .all(|&s| s == 0.0));
    }

    #[test]
    fn roundtrip_odd_and_even_lengths() {
        for (len, n_fft) in [(100, 100), (100, 128), (77, 77), (77, 91)] {
            let w = random_waveform(len, len as u64 + n_fft as u64);
            let back = inverse_transform(&forward_transform(&w, n_fft).unwrap(), len).unwrap();
            assert!(rel_l2(&back.samples, &w.samples) < 1e-12);
        }
    }

    #[test]
    fn parseval_one_sided() {
        for n in [64usize, 63] {
            let w = random_waveform(n, 9);
            let spec = forward_transform(&w, n).unwrap();
            let mut e = 0.0;
            for (k, v) in spec.values.iter().enumerate() {
                let weight = if k == 0 || 2 * k == n { 1.0 } else { 2.0 };
                e += weight * v.norm_sqr();
            }
            e /= n as f64;
            assert!((e - w.energy()).abs() / w.energy() < 1e-9);
        }
    }

    #[test]
    fn matched_filter_finds_delay() {
        let rep = make_chirp(160e3, 30e3, 1e-3, 1e6).unwrap();
        let mut rec = Waveform::zeros(5000, 1e6);
        rec.add_scaled(&rep.samples, 500, 1.0);
        let mf = matched_filter(&rec, &rep).unwrap();
        let (imax, vmax) = argmax(&mf.samples);
        assert_eq!(imax, 500);
        assert!((vmax - 1.0).abs() < 1e-9);
    }

    #[test]
    fn matched_filter_rejects_rate_mismatch() {
        let rep = make_chirp(160e3, 30e3, 1e-3, 1e6).unwrap();
        let rec = Waveform::zeros(5000, 2e6);
        assert!(matched_filter(&rec, &rep).is_err());
    }

    #[test]
    fn envelope_of_tone_is_flat() {
        let n = 1000;
        let s = (0..n)
            .map(|i| 0.7 * (2.0 * PI * 50.0 * i as f64 / n as f64).sin())
            .collect();
        let env = envelope(&Waveform::new(s, 1e6).unwrap());
        assert!(env.iter().all(|e| (e - 0.7).abs() < 1e-9));
    }

    fn argmax(v: &[f64]) -> (usize, f64) {
        v.iter()
            .enumerate()
            .fold((0, f64::MIN), |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) })
    }
}

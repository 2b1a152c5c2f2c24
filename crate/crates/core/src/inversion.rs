//! Matched-filter segmentation, range from the echo delay and form-function
//! estimation from a gated echo.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{param, Error, Result};
use crate::physics::{FluidMedium, FormFunction, ShellTarget};
use crate::signal::{envelope, forward_transform, matched_filter, Waveform};
use crate::synth::{
    add_noise_in_window, scene_form_function, synthesize_echo, MAX_RANGE_M, MIN_RANGE_M,
};

/// Length of the gated echo.
pub const SEGMENT_DURATION_S: f64 = 2.0e-3;

/// The direct arrival is searched for in the first millisecond.
pub const DIRECT_SEARCH_S: f64 = 1.0e-3;

/// Detection threshold as a multiple of the median in-gate envelope.
pub const THRESHOLD_FACTOR: f64 = 5.0;

/// Lower bound on the threshold relative to the direct-arrival envelope,
/// which keeps transform round-off in noiseless recordings from counting
/// as an echo.
pub const NUMERICAL_FLOOR: f64 = 1.0e-6;

/// Extra matched-filter samples on each side of the gate used when forming
/// the in-gate envelope.
pub const ENVELOPE_MARGIN_S: f64 = 0.25e-3;

/// Lower bound on the threshold relative to the strongest in-gate envelope
/// sample. Later internal and circumferential returns can be several times
/// stronger than the specular one, and their range sidelobes precede them.
pub const GATE_MAX_FRACTION: f64 = 0.05;

/// After the first threshold crossing the strongest envelope sample within
/// this window is taken as the echo peak.
pub const CLUSTER_WINDOW_S: f64 = 25.0e-6;

/// Samples kept ahead of the detected echo start.
pub const PRE_ROLL_S: f64 = 20.0e-6;

/// Regularization of the spectral division relative to `max |S_i|²`.
pub const EPSILON_REL: f64 = 1.0e-10;

/// Pulse bins further than this below the spectral peak count as empty.
pub const EMPTY_BIN_DB: f64 = -40.0;

/// Largest tolerated share of empty pulse bins inside the requested band.
pub const MAX_EMPTY_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationResult {
    /// Fixed-length gate starting at `segment_start`.
    pub segment: Waveform,
    pub segment_start: usize,
    /// Echo delay after the direct arrival, with sub-sample refinement.
    pub delta_t_s: f64,
    pub peak_index: usize,
    pub direct_index: usize,
    pub threshold: f64,
}

impl SegmentationResult {
    /// Time of the first segment sample after the direct arrival.
    pub fn segment_offset_s(&self) -> f64 {
        (self.segment_start as f64 - self.direct_index as f64) / self.segment.sample_rate_hz
    }
}

/// Sample ranges of the direct-arrival search and of the target gate.
fn gate_bounds(direct: usize, fs: f64, c_host: f64) -> (usize, usize) {
    (
        direct + (2.0 * MIN_RANGE_M / c_host * fs).floor() as usize,
        direct + (2.0 * MAX_RANGE_M / c_host * fs).ceil() as usize,
    )
}

/// Cuts the target echo out of `recording`.
///
/// Detection runs on the matched-filter output, whose peak sits at the
/// first sample of each replica copy. The direct arrival is the largest
/// absolute output in the first millisecond; the echo is the first
/// threshold crossing of the envelope inside the 1.5 to 3 m gate, refined to the strongest
/// sample of its cluster. The delay is refined to a fraction of a sample by
/// a parabola through the envelope peak.
pub fn segment_echo(recording: &Waveform, replica: &Waveform, c_host: f64) -> Result<SegmentationResult> {
    if !(c_host.is_finite() && c_host > 0.0) {
        return param(format!("sound speed must be positive, got {c_host}"));
    }
    let fs = recording.sample_rate_hz;
    let seg_len = (SEGMENT_DURATION_S * fs).round() as usize;
    let needed = ((2.0 * MAX_RANGE_M / c_host + SEGMENT_DURATION_S) * fs).ceil() as usize;
    if recording.len() < needed {
        return param(format!(
            "recording of {} samples is shorter than the gate plus segment ({needed})",
            recording.len()
        ));
    }
    let mf = matched_filter(recording, replica)?;
    let search = ((DIRECT_SEARCH_S * fs).round() as usize).min(mf.len());
    let direct = argmax_abs(&mf.samples[..search]);
    let (lo, hi) = gate_bounds(direct, fs, c_host);
    if hi >= mf.len() {
        return param("gate extends past the end of the recording");
    }
    // The envelope is taken over the gate plus a margin only: the analytic
    // signal of the whole trace would leak slowly decaying tails of the
    // direct arrival into the gate.
    let margin = ((ENVELOPE_MARGIN_S * fs).round() as usize).min(lo - direct);
    let win_lo = lo - margin;
    let win_hi = (hi + margin).min(mf.len());
    let local = envelope(&mf.slice(win_lo, win_hi - win_lo));
    let mut env = vec![0.0; mf.len()];
    env[win_lo..win_hi].copy_from_slice(&local);
    let direct_level = mf.samples[direct].abs();
    let gate = &env[lo..hi];
    let gate_max = gate.iter().fold(0.0f64, |m, &v| m.max(v));
    let threshold = (THRESHOLD_FACTOR * median(gate))
        .max(GATE_MAX_FRACTION * gate_max)
        .max(NUMERICAL_FLOOR * direct_level);
    let no_detection = Error::NoDetection {
        gate_start_s: (lo - direct) as f64 / fs,
        gate_end_s: (hi - direct) as f64 / fs,
    };
    if threshold == 0.0 {
        return Err(no_detection);
    }
    let first = (lo.max(1)..hi)
        .find(|&i| env[i] > threshold && env[i] >= env[i - 1] && env[i] >= env[i + 1])
        .ok_or(no_detection)?;
    let cluster_end = (first + (CLUSTER_WINDOW_S * fs).round() as usize + 1).min(hi);
    let peak = first + argmax(&env[first..cluster_end]);
    let start = peak.saturating_sub((PRE_ROLL_S * fs).round() as usize);
    Ok(SegmentationResult {
        segment: recording.slice(start, seg_len),
        segment_start: start,
        delta_t_s: (peak as f64 + vertex_offset(&env, peak) - direct as f64) / fs,
        peak_index: peak,
        direct_index: direct,
        threshold,
    })
}

/// Sub-sample position of the parabola through `v[i-1..=i+1]`.
fn vertex_offset(v: &[f64], i: usize) -> f64 {
    if i == 0 || i + 1 >= v.len() {
        return 0.0;
    }
    let (a, b, c) = (v[i - 1], v[i], v[i + 1]);
    let den = a - 2.0 * b + c;
    if den >= 0.0 {
        return 0.0;
    }
    (0.5 * (a - c) / den).clamp(-0.5, 0.5)
}

fn argmax_abs(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    best
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n == 0 {
        0.0
    } else if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// `r = Δt c / 2`.
pub fn estimate_range(delta_t_s: f64, c_host: f64) -> Result<f64> {
    if !(delta_t_s.is_finite() && delta_t_s > 0.0) {
        return param(format!("delay must be positive, got {delta_t_s}"));
    }
    if !(c_host.is_finite() && c_host > 0.0) {
        return param(format!("sound speed must be positive, got {c_host}"));
    }
    Ok(delta_t_s * c_host / 2.0)
}

/// Form function of the target whose echo is `segment`, which starts at the
/// transmit instant.
///
/// `f(ω) = |k| r² S(ω) / (e^{-2jkr} S_i(ω))` on the transform bins inside
/// `band_hz`, with the division regularized as
/// `S conj(S_i) / (|S_i|² + ε)`.
pub fn estimate_form_function(
    segment: &Waveform,
    pulse: &Waveform,
    range_m: f64,
    host: &FluidMedium,
    band_hz: (f64, f64),
) -> Result<FormFunction> {
    estimate_form_function_at(segment, 0.0, pulse, range_m, host, band_hz)
}

/// As [`estimate_form_function`] for a segment whose first sample lies
/// `segment_offset_s` after the transmit instant.
pub fn estimate_form_function_at(
    segment: &Waveform,
    segment_offset_s: f64,
    pulse: &Waveform,
    range_m: f64,
    host: &FluidMedium,
    band_hz: (f64, f64),
) -> Result<FormFunction> {
    let fs = segment.sample_rate_hz;
    if pulse.sample_rate_hz != fs {
        return param("segment and pulse sample rates differ");
    }
    let (low, high) = band_hz;
    if !(low > 0.0 && low < high && high < fs / 2.0) {
        return param(format!("band [{low}, {high}] Hz not inside (0, {}) Hz", fs / 2.0));
    }
    if !(range_m.is_finite() && range_m > 0.0) {
        return param(format!("range must be positive, got {range_m}"));
    }
    host.validate()?;
    let n_fft = segment.len().max(pulse.len());
    let x = forward_transform(segment, n_fft)?;
    let y = forward_transform(pulse, n_fft)?;
    let peak_power = y.values.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
    let bins: Vec<usize> = (0..y.values.len())
        .filter(|&i| (low..=high).contains(&y.freq_hz[i]))
        .collect();
    if bins.is_empty() {
        return param("band holds no transform bins");
    }
    let floor = peak_power * 10f64.powf(EMPTY_BIN_DB / 10.0);
    let empty = bins.iter().filter(|&&i| y.values[i].norm_sqr() < floor).count();
    let fraction = empty as f64 / bins.len() as f64;
    if fraction > MAX_EMPTY_FRACTION {
        return Err(Error::IllConditionedBand {
            low_hz: low,
            high_hz: high,
            fraction: 100.0 * fraction,
        });
    }
    let eps = EPSILON_REL * peak_power;
    let delay = 2.0 * range_m / host.sound_speed - segment_offset_s;
    let values = bins
        .iter()
        .map(|&i| {
            let f = y.freq_hz[i];
            let k = 2.0 * PI * f / host.sound_speed;
            let ratio = x.values[i] * y.values[i].conj() / (y.values[i].norm_sqr() + eps);
            ratio * k.abs() * range_m * range_m * Complex64::from_polar(1.0, 2.0 * PI * f * delay)
        })
        .collect();
    let freq = bins.iter().map(|&i| y.freq_hz[i]).collect();
    FormFunction::new(freq, values, None)
}

/// Bins within this many dB of the pulse's spectral peak are compared by
/// [`roundtrip`].
pub const ROUNDTRIP_BAND_DB: f64 = -20.0;

/// Outcome of synthesizing an isolated echo and estimating its form
/// function back.
#[derive(Debug, Clone, PartialEq)]
pub struct Roundtrip {
    pub analytic: FormFunction,
    pub estimate: FormFunction,
    /// Largest `|f_est - f| / |f|` over the compared bins.
    pub max_rel_error: f64,
    pub bins_compared: usize,
}

/// Echo of `target` at `range_m` alone in a transform-length window, with
/// optional gate noise, run back through [`estimate_form_function`] at the
/// true range.
pub fn roundtrip(
    target: &ShellTarget,
    range_m: f64,
    pulse: &Waveform,
    band_hz: (f64, f64),
    noise: Option<(f64, u64)>,
) -> Result<Roundtrip> {
    let host = &target.host;
    let fs = pulse.sample_rate_hz;
    let n_fft = ((2.0 * MAX_RANGE_M / host.sound_speed * fs).ceil() as usize + pulse.len())
        .next_power_of_two();
    let analytic = scene_form_function(target)?;
    let mut echo = synthesize_echo(pulse, &analytic, range_m, host, n_fft)?;
    if let Some((snr_db, seed)) = noise {
        echo = add_noise_in_window(&echo, snr_db, seed, 0..n_fft)?;
    }
    let estimate = estimate_form_function(&echo, pulse, range_m, host, band_hz)?;
    let y = forward_transform(pulse, n_fft)?;
    let peak = y.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let floor = peak * 10f64.powf(ROUNDTRIP_BAND_DB / 20.0);
    let mut max_rel_error = 0.0f64;
    let mut bins_compared = 0;
    for (&f, est) in estimate.freq_hz.iter().zip(&estimate.values) {
        let i = (f / y.resolution_hz()).round() as usize;
        if y.values[i].norm() < floor {
            continue;
        }
        let truth = analytic.interpolate(f);
        max_rel_error = max_rel_error.max((est - truth).norm() / truth.norm());
        bins_compared += 1;
    }
    Ok(Roundtrip {
        analytic,
        estimate,
        max_rel_error,
        bins_compared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::frequency_grid;
    use crate::signal::make_chirp;
    use crate::synth::{inject_direct_signal, synthesize_echo, PulseSpec};

    #[test]
    fn range_from_delay() {
        assert!((estimate_range(0.002, 1500.0).unwrap() - 1.5).abs() < 1e-12);
        assert!((estimate_range(0.004, 1500.0).unwrap() - 3.0).abs() < 1e-12);
        assert!(estimate_range(0.0, 1500.0).is_err());
        assert!(estimate_range(0.002, -1.0).is_err());
    }

    #[test]
    fn zero_segment_gives_zero_form_function() {
        let pulse = PulseSpec::default().waveform().unwrap();
        let seg = Waveform::zeros(2000, pulse.sample_rate_hz);
        let ff = estimate_form_function(&seg, &pulse, 2.0, &FluidMedium::water(), (30e3, 160e3)).unwrap();
        assert!(!ff.is_empty());
        assert!(ff.values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn narrow_pulse_is_ill_conditioned_over_wide_band() {
        let pulse = make_chirp(90e3, 100e3, 1e-3, 1e6).unwrap();
        let seg = Waveform::zeros(2000, 1e6);
        let err = estimate_form_function(&seg, &pulse, 2.0, &FluidMedium::water(), (30e3, 160e3));
        assert!(matches!(err, Err(Error::IllConditionedBand { .. })));
    }

    #[test]
    fn bad_band_rejected() {
        let pulse = PulseSpec::default().waveform().unwrap();
        let seg = Waveform::zeros(2000, 1e6);
        let host = FluidMedium::water();
        assert!(estimate_form_function(&seg, &pulse, 2.0, &host, (0.0, 100e3)).is_err());
        assert!(estimate_form_function(&seg, &pulse, 2.0, &host, (30e3, 600e3)).is_err());
    }

    fn flat_scene(r: f64) -> (Waveform, Waveform) {
        let pulse = PulseSpec::default().waveform().unwrap();
        let grid = frequency_grid(10e3, 200e3, 10);
        let ff = FormFunction::new(grid, vec![Complex64::new(0.8, 0.0); 10], None).unwrap();
        let echo = synthesize_echo(&pulse, &ff, r, &FluidMedium::water(), 16384).unwrap();
        (inject_direct_signal(&echo, &pulse).unwrap(), pulse)
    }

    #[test]
    fn segmentation_recovers_delay() {
        let c = FluidMedium::water().sound_speed;
        let (rec, pulse) = flat_scene(2.0);
        let seg = segment_echo(&rec, &pulse, c).unwrap();
        assert_eq!(seg.direct_index, 0);
        let expect = 2.0 * 2.0 / c;
        assert!((seg.delta_t_s - expect).abs() <= 2.0 / rec.sample_rate_hz);
        assert_eq!(seg.segment.len(), 2000);
    }

    #[test]
    fn nearer_target_peaks_earlier() {
        let c = FluidMedium::water().sound_speed;
        let (near, pulse) = flat_scene(1.6);
        let (far, _) = flat_scene(2.8);
        let a = segment_echo(&near, &pulse, c).unwrap();
        let b = segment_echo(&far, &pulse, c).unwrap();
        assert!(a.peak_index < b.peak_index);
    }

    #[test]
    fn silent_gate_is_no_detection() {
        let pulse = PulseSpec::default().waveform().unwrap();
        let rec = inject_direct_signal(&Waveform::zeros(12_000, 1e6), &pulse).unwrap();
        let err = segment_echo(&rec, &pulse, FluidMedium::water().sound_speed);
        assert!(matches!(err, Err(Error::NoDetection { .. })));
    }

    #[test]
    fn short_recording_rejected() {
        let pulse = PulseSpec::default().waveform().unwrap();
        let rec = Waveform::zeros(5000, 1e6);
        assert!(matches!(
            segment_echo(&rec, &pulse, 1480.0),
            Err(Error::Parameter(_))
        ));
    }
}

//! Tank-like recordings built from an analytic form function.
//!
//! The echo is the exact algebraic inverse of the estimator in
//! [`crate::inversion`]: `S(ω) = f(ω) e^{-2jkr} S_i(ω) / (|k| r²)`. A
//! recording adds a strong direct arrival at sample 0, optional clutter
//! outside the target gate and white noise.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::physics::{form_function_shell, frequency_grid, FluidMedium, FormFunction, ShellTarget};
use crate::signal::{
    forward_transform, inverse_transform, make_chirp_tapered, Waveform, DEFAULT_SAMPLE_RATE_HZ,
};

/// Closest and farthest target ranges the gate accepts.
pub const MIN_RANGE_M: f64 = 1.5;
pub const MAX_RANGE_M: f64 = 3.0;

/// Bins below this frequency are zeroed during synthesis.
pub const SYNTH_FLOOR_HZ: f64 = 1.0e3;

/// Ratio of direct-arrival to echo peak amplitude.
pub const DIRECT_TO_ECHO: f64 = 10.0;

/// Analytic form functions are tabulated on this grid before being
/// interpolated onto transform bins.
pub const FF_GRID_START_HZ: f64 = 20.0e3;
pub const FF_GRID_END_HZ: f64 = 170.0e3;
pub const FF_GRID_POINTS: usize = 1501;

/// Transmitted pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub f_start_hz: f64,
    pub f_end_hz: f64,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    #[serde(default)]
    pub taper_fraction: f64,
}

impl Default for PulseSpec {
    /// 1 ms linear down-chirp from 160 to 30 kHz at 1 MHz with a Hann
    /// envelope.
    fn default() -> Self {
        Self {
            f_start_hz: 160.0e3,
            f_end_hz: 30.0e3,
            duration_s: 1.0e-3,
            sample_rate_hz: DEFAULT_SAMPLE_RATE_HZ,
            taper_fraction: 0.5,
        }
    }
}

impl PulseSpec {
    pub fn waveform(&self) -> Result<Waveform> {
        make_chirp_tapered(
            self.f_start_hz,
            self.f_end_hz,
            self.duration_s,
            self.sample_rate_hz,
            self.taper_fraction,
        )
    }

    pub fn band_hz(&self) -> (f64, f64) {
        (
            self.f_start_hz.min(self.f_end_hz),
            self.f_start_hz.max(self.f_end_hz),
        )
    }
}

/// What the shell is filled with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FillerClass {
    Air,
    Water,
}

impl FillerClass {
    pub const ALL: [FillerClass; 2] = [FillerClass::Air, FillerClass::Water];

    pub fn medium(self) -> FluidMedium {
        match self {
            FillerClass::Air => FluidMedium::air(),
            FillerClass::Water => FluidMedium::water(),
        }
    }

    /// 0 for air, 1 for water.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            FillerClass::Air => "air",
            FillerClass::Water => "water",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "air" => Some(FillerClass::Air),
            "water" => Some(FillerClass::Water),
            _ => None,
        }
    }

    /// Class whose medium equals `m`, if any.
    pub fn of_medium(m: &FluidMedium) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.medium() == *m)
    }
}

impl std::fmt::Display for FillerClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One simulated insonification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    /// Range from the sonar to the facing point of the target surface.
    pub range_m: f64,
    pub target: ShellTarget,
    /// `f64::INFINITY` disables noise.
    pub snr_db: f64,
    pub clutter_enabled: bool,
    pub recording_duration_s: f64,
    pub seed: u64,
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        self.target.validate()?;
        if !(MIN_RANGE_M..=MAX_RANGE_M).contains(&self.range_m) {
            return param(format!(
                "range {} m outside [{MIN_RANGE_M}, {MAX_RANGE_M}] m",
                self.range_m
            ));
        }
        if self.snr_db.is_nan() {
            return param("snr_db is NaN");
        }
        let needed = min_recording_duration_s(self.target.host.sound_speed);
        if !(self.recording_duration_s >= needed) {
            return param(format!(
                "recording of {} s cannot hold the gate and segment ({needed} s needed)",
                self.recording_duration_s
            ));
        }
        if self.clutter_enabled && self.recording_duration_s < CLUTTER_MIN_DURATION_S {
            return param(format!(
                "clutter needs at least {CLUTTER_MIN_DURATION_S} s of recording"
            ));
        }
        Ok(())
    }
}

/// Far gate edge plus one 2 ms segment.
pub fn min_recording_duration_s(c_host: f64) -> f64 {
    2.0 * MAX_RANGE_M / c_host + 2.0e-3
}

/// Target gate `[2·1.5/c, 2·3/c]` as sample indices after the transmit.
pub fn gate_samples(sample_rate_hz: f64, c_host: f64) -> (usize, usize) {
    (
        (2.0 * MIN_RANGE_M / c_host * sample_rate_hz).floor() as usize,
        (2.0 * MAX_RANGE_M / c_host * sample_rate_hz).ceil() as usize,
    )
}

/// A recording together with the scene that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRecording {
    pub id: usize,
    pub recording: Waveform,
    pub label: FillerClass,
    pub truth: SceneConfig,
}

/// Echo of `pulse` off a target with form function `ff` at range `range_m`.
///
/// The output has `n_fft` samples. The form function is interpolated
/// linearly onto the transform bins and taken as zero outside its grid.
pub fn synthesize_echo(
    pulse: &Waveform,
    ff: &FormFunction,
    range_m: f64,
    host: &FluidMedium,
    n_fft: usize,
) -> Result<Waveform> {
    if !(range_m.is_finite() && range_m > 0.0) {
        return param(format!("range must be positive, got {range_m}"));
    }
    host.validate()?;
    let delay = 2.0 * range_m / host.sound_speed * pulse.sample_rate_hz;
    if delay + pulse.len() as f64 > n_fft as f64 {
        return param(format!(
            "round trip of {delay:.0} samples plus the pulse does not fit in n_fft = {n_fft}"
        ));
    }
    let mut spec = forward_transform(pulse, n_fft)?;
    let r2 = range_m * range_m;
    for (v, &f) in spec.values.iter_mut().zip(&spec.freq_hz) {
        if f < SYNTH_FLOOR_HZ {
            *v = Complex64::new(0.0, 0.0);
            continue;
        }
        let k = 2.0 * PI * f / host.sound_speed;
        let prop = Complex64::from_polar(1.0, -2.0 * k * range_m);
        *v *= ff.interpolate(f) * prop / (k.abs() * r2);
    }
    inverse_transform(&spec, n_fft)
}

/// Adds the transmit breakthrough at sample 0, `DIRECT_TO_ECHO` times the
/// current peak of `recording`. A silent recording gets a unit-peak copy.
pub fn inject_direct_signal(recording: &Waveform, pulse: &Waveform) -> Result<Waveform> {
    if pulse.len() >= recording.len() {
        return param("recording must be longer than the pulse");
    }
    let pulse_peak = pulse.peak_abs();
    if pulse_peak == 0.0 {
        return param("pulse is silent");
    }
    let echo_peak = recording.peak_abs();
    let target = if echo_peak > 0.0 {
        DIRECT_TO_ECHO * echo_peak
    } else {
        1.0
    };
    let mut out = recording.clone();
    out.add_scaled(&pulse.samples, 0, target / pulse_peak);
    Ok(out)
}

/// White Gaussian noise at `snr_db` relative to the mean power inside the
/// target gate of a water tank. Recordings shorter than the gate use their
/// whole length as reference.
pub fn add_noise(w: &Waveform, snr_db: f64, seed: u64) -> Result<Waveform> {
    let (lo, hi) = gate_samples(w.sample_rate_hz, FluidMedium::water().sound_speed);
    let window = if hi <= w.len() { lo..hi } else { 0..w.len() };
    add_noise_in_window(w, snr_db, seed, window)
}

/// White Gaussian noise at `snr_db` relative to the mean power of
/// `w[window]`.
pub fn add_noise_in_window(
    w: &Waveform,
    snr_db: f64,
    seed: u64,
    window: std::ops::Range<usize>,
) -> Result<Waveform> {
    if snr_db == f64::INFINITY {
        return Ok(w.clone());
    }
    if !snr_db.is_finite() {
        return param(format!("snr_db must be finite or +inf, got {snr_db}"));
    }
    if window.is_empty() || window.end > w.len() {
        return param(format!("reference window {window:?} outside {} samples", w.len()));
    }
    let len = window.len() as f64;
    let power: f64 = w.samples[window].iter().map(|s| s * s).sum::<f64>() / len;
    if power == 0.0 {
        return param("reference window has zero energy");
    }
    let sigma = (power / 10f64.powf(snr_db / 10.0)).sqrt();
    let normal = Normal::new(0.0, sigma).map_err(|e| crate::Error::Parameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = w.clone();
    for s in out.samples.iter_mut() {
        *s += normal.sample(&mut rng);
    }
    Ok(out)
}

/// Shortest recording that [`add_clutter`] accepts.
pub const CLUTTER_MIN_DURATION_S: f64 = 0.03;

/// Extra clearance between clutter arrivals and the target gate.
const CLUTTER_GUARD_S: f64 = 0.1e-3;

/// Adds 3 to 6 wall and bottom returns: replicas of `pulse` with peaks
/// between 2% and 20% of the current recording peak, starting after the
/// gate has closed and the last in-gate echo has ended.
pub fn add_clutter(w: &Waveform, pulse: &Waveform, seed: u64) -> Result<Waveform> {
    if w.duration_s() < CLUTTER_MIN_DURATION_S - 0.5 / w.sample_rate_hz {
        return param(format!(
            "clutter needs at least {CLUTTER_MIN_DURATION_S} s of recording, got {}",
            w.duration_s()
        ));
    }
    let pulse_peak = pulse.peak_abs();
    if pulse_peak == 0.0 {
        return param("pulse is silent");
    }
    let mut out = w.clone();
    for (at, amp) in clutter_arrivals(w, pulse, seed) {
        out.add_scaled(&pulse.samples, at, amp / pulse_peak);
    }
    Ok(out)
}

/// Start samples and amplitudes that [`add_clutter`] would use.
pub fn clutter_arrivals(w: &Waveform, pulse: &Waveform, seed: u64) -> Vec<(usize, f64)> {
    let (_, gate_end) = gate_samples(w.sample_rate_hz, FluidMedium::water().sound_speed);
    let guard = (CLUTTER_GUARD_S * w.sample_rate_hz).round() as usize;
    let earliest = gate_end + pulse.len() + guard;
    let latest = w.len().saturating_sub(pulse.len());
    let reference = w.peak_abs().max(f64::MIN_POSITIVE);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.random_range(3..=6);
    (0..count)
        .map(|_| {
            let at = rng.random_range(earliest..=latest);
            (at, rng.random_range(0.02..0.2) * reference)
        })
        .collect()
}

/// Analytic form function of `target` on the synthesis grid, referenced to
/// the facing surface so that the specular return arrives at `2r/c`.
pub fn scene_form_function(target: &ShellTarget) -> Result<FormFunction> {
    let grid = frequency_grid(FF_GRID_START_HZ, FF_GRID_END_HZ, FF_GRID_POINTS);
    form_function_shell(target, &grid)?.referenced_to_front_surface(&target.host)
}

/// Noiseless echo of `cfg.target` alone, `recording_duration_s` long.
pub fn scene_echo(cfg: &SceneConfig, pulse: &Waveform) -> Result<Waveform> {
    let ff = scene_form_function(&cfg.target)?;
    scene_echo_with(cfg, pulse, &ff)
}

fn scene_echo_with(cfg: &SceneConfig, pulse: &Waveform, ff: &FormFunction) -> Result<Waveform> {
    let n = (cfg.recording_duration_s * pulse.sample_rate_hz).round() as usize;
    let n_fft = n.next_power_of_two();
    let echo = synthesize_echo(pulse, ff, cfg.range_m, &cfg.target.host, n_fft)?;
    Ok(echo.slice(0, n))
}

/// Full recording: echo, direct arrival, clutter and noise.
pub fn synthesize_scene(cfg: &SceneConfig, pulse: &Waveform) -> Result<Waveform> {
    cfg.validate()?;
    let echo = scene_echo(cfg, pulse)?;
    let mut rec = inject_direct_signal(&echo, pulse)?;
    if cfg.clutter_enabled {
        rec = add_clutter(&rec, pulse, clutter_seed(cfg.seed))?;
    }
    let gate = gate_samples(rec.sample_rate_hz, cfg.target.host.sound_speed);
    add_noise_in_window(&rec, cfg.snr_db, cfg.seed, gate.0..gate.1.min(rec.len()))
}

fn clutter_seed(seed: u64) -> u64 {
    seed ^ 0x9e37_79b9_7f4a_7c15
}

/// Parameter ranges for dataset generation; every draw is uniform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSpec {
    pub radius_m: (f64, f64),
    pub thickness_m: (f64, f64),
    pub range_m: (f64, f64),
    pub snr_db: (f64, f64),
    pub clutter_enabled: bool,
    pub recording_duration_s: f64,
    pub pulse: PulseSpec,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            radius_m: (0.030, 0.080),
            thickness_m: (0.002, 0.008),
            range_m: (MIN_RANGE_M, MAX_RANGE_M),
            snr_db: (10.0, 30.0),
            clutter_enabled: true,
            recording_duration_s: CLUTTER_MIN_DURATION_S,
            pulse: PulseSpec::default(),
        }
    }
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [
            ("radius_m", self.radius_m),
            ("thickness_m", self.thickness_m),
            ("range_m", self.range_m),
            ("snr_db", self.snr_db),
        ] {
            if !(lo <= hi) || lo.is_nan() {
                return param(format!("{name}: empty range [{lo}, {hi}]"));
            }
        }
        if self.thickness_m.1 >= self.radius_m.0 {
            return param("thickness range must stay below the radius range");
        }
        if self.range_m.0 < MIN_RANGE_M || self.range_m.1 > MAX_RANGE_M {
            return param(format!("range_m must lie in [{MIN_RANGE_M}, {MAX_RANGE_M}]"));
        }
        Ok(())
    }

    /// Scene `index` of a dataset drawn with `master_seed`. Each index has
    /// its own RNG stream, so scenes can be built in any order.
    pub fn scene(&self, index: usize, master_seed: u64) -> Result<SceneConfig> {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(index as u64);
        let mut draw = |(lo, hi): (f64, f64)| {
            if lo == hi {
                lo
            } else {
                rng.random_range(lo..hi)
            }
        };
        let radius = draw(self.radius_m);
        let thickness = draw(self.thickness_m);
        let range = draw(self.range_m);
        let snr = draw(self.snr_db);
        let filler = FillerClass::from_index(index % 2).expect("two classes");
        let target = ShellTarget::aluminium_in_water(radius, thickness, filler.medium())?;
        Ok(SceneConfig {
            range_m: range,
            target,
            snr_db: snr,
            clutter_enabled: self.clutter_enabled,
            recording_duration_s: self.recording_duration_s,
            seed: rng.random(),
        })
    }
}

/// Builds example `index` of a dataset.
pub fn generate_example(spec: &DatasetSpec, index: usize, master_seed: u64) -> Result<LabeledRecording> {
    let cfg = spec.scene(index, master_seed)?;
    let pulse = spec.pulse.waveform()?;
    let recording = synthesize_scene(&cfg, &pulse)?;
    Ok(LabeledRecording {
        id: index,
        recording,
        label: FillerClass::of_medium(&cfg.target.filler).expect("filler drawn from a class"),
        truth: cfg,
    })
}

/// `2 · n_per_class` labeled recordings; fillers alternate air, water.
pub fn generate_dataset(
    n_per_class: usize,
    spec: &DatasetSpec,
    master_seed: u64,
) -> Result<Vec<LabeledRecording>> {
    if n_per_class == 0 {
        return param("n_per_class must be at least 1");
    }
    spec.validate()?;
    (0..2 * n_per_class)
        .map(|i| generate_example(spec, i, master_seed))
        .collect()
}

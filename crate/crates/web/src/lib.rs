//! Browser bindings for three demo operations. Every export also runs
//! natively, so the page's numbers are covered by ordinary tests.

use ffsonar::features::{extract, MagnitudeScale};
use ffsonar::physics::{form_function_shell, frequency_grid, ShellTarget};
use ffsonar::signal::{envelope, matched_filter};
use ffsonar::synth::{
    synthesize_scene, FillerClass, PulseSpec, SceneConfig, CLUTTER_MIN_DURATION_S, FF_GRID_END_HZ,
    FF_GRID_START_HZ,
};
use wasm_bindgen::prelude::*;

/// A single `y(x)` curve.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct Curve {
    x: Vec<f64>,
    y: Vec<f64>,
}

#[wasm_bindgen]
impl Curve {
    #[wasm_bindgen(getter)]
    pub fn x(&self) -> Vec<f64> {
        self.x.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn y(&self) -> Vec<f64> {
        self.y.clone()
    }
}

/// A synthesized recording, its matched-filter envelope and what the
/// estimator recovered from it.
#[wasm_bindgen]
#[derive(Debug, Clone)]
pub struct Scene {
    time_s: Vec<f64>,
    recording: Vec<f64>,
    envelope: Vec<f64>,
    direct_index: usize,
    peak_index: usize,
    range_m: f64,
    analytic: Curve,
    estimate: Curve,
}

#[wasm_bindgen]
impl Scene {
    #[wasm_bindgen(getter)]
    pub fn time_s(&self) -> Vec<f64> {
        self.time_s.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn recording(&self) -> Vec<f64> {
        self.recording.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn envelope(&self) -> Vec<f64> {
        self.envelope.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn direct_index(&self) -> usize {
        self.direct_index
    }

    #[wasm_bindgen(getter)]
    pub fn peak_index(&self) -> usize {
        self.peak_index
    }

    /// Estimated range to the facing surface.
    #[wasm_bindgen(getter)]
    pub fn range_m(&self) -> f64 {
        self.range_m
    }

    /// |f| of the target on the estimator's frequency bins.
    #[wasm_bindgen(getter)]
    pub fn analytic(&self) -> Curve {
        self.analytic.clone()
    }

    /// |f| recovered from the recording.
    #[wasm_bindgen(getter)]
    pub fn estimate(&self) -> Curve {
        self.estimate.clone()
    }
}

fn filler(name: &str) -> Result<FillerClass, String> {
    FillerClass::parse(name).ok_or_else(|| format!("unknown filler {name:?}, expected air or water"))
}

fn target(radius_mm: f64, thickness_mm: f64, filler_name: &str) -> Result<ShellTarget, String> {
    ShellTarget::aluminium_in_water(radius_mm * 1e-3, thickness_mm * 1e-3, filler(filler_name)?.medium())
        .map_err(|e| e.to_string())
}

/// |f| of an aluminium shell in water between 20 and 170 kHz.
#[wasm_bindgen(js_name = formFunction)]
pub fn form_function(radius_mm: f64, thickness_mm: f64, filler_name: &str, points: usize) -> Result<Curve, String> {
    if points < 2 {
        return Err("need at least two frequency points".into());
    }
    let t = target(radius_mm, thickness_mm, filler_name)?;
    let grid = frequency_grid(FF_GRID_START_HZ, FF_GRID_END_HZ, points);
    let ff = form_function_shell(&t, &grid).map_err(|e| e.to_string())?;
    Ok(Curve {
        y: ff.magnitude(),
        x: grid,
    })
}

/// Synthesizes one tank recording with the default pulse, then segments
/// it and estimates range and form function.
#[wasm_bindgen(js_name = simulateScene)]
#[allow(clippy::too_many_arguments)]
pub fn simulate_scene(
    radius_mm: f64,
    thickness_mm: f64,
    filler_name: &str,
    range_m: f64,
    snr_db: f64,
    clutter: bool,
    seed: u64,
) -> Result<Scene, String> {
    let err = |e: ffsonar::Error| e.to_string();
    let target = target(radius_mm, thickness_mm, filler_name)?;
    let host = target.host;
    let pulse = PulseSpec::default().waveform().map_err(err)?;
    let cfg = SceneConfig {
        range_m,
        target,
        snr_db,
        clutter_enabled: clutter,
        recording_duration_s: CLUTTER_MIN_DURATION_S,
        seed,
    };
    let rec = synthesize_scene(&cfg, &pulse).map_err(err)?;
    let env = envelope(&matched_filter(&rec, &pulse).map_err(err)?);
    let features = extract(&rec, &pulse, &host, MagnitudeScale::Linear).map_err(err)?;
    let est = &features.form_function;
    let truth = form_function_shell(&target, &est.freq_hz).map_err(err)?;
    let fs = rec.sample_rate_hz;
    Ok(Scene {
        time_s: (0..rec.len()).map(|i| i as f64 / fs).collect(),
        envelope: env,
        direct_index: features.segmentation.direct_index,
        peak_index: features.segmentation.peak_index,
        range_m: features.range_m,
        analytic: Curve {
            x: est.freq_hz.clone(),
            y: truth.magnitude(),
        },
        estimate: Curve {
            x: est.freq_hz.clone(),
            y: est.magnitude(),
        },
        recording: rec.samples,
    })
}

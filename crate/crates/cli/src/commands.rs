use std::fs::{self, File, OpenOptions};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use ffsonar::classify::SavedModel;
use ffsonar::evaluate::{evaluate_cell, EvaluationReport, FeatureTable};
use ffsonar::features::{extract, Standardizer};
use ffsonar::inversion::roundtrip as roundtrip_once;
use ffsonar::io::{load_manifest, load_raw, save_dataset, write_xy_csv, Manifest};
use ffsonar::physics::{form_function_shell, frequency_grid, FluidMedium, ShellTarget};
use ffsonar::signal::{envelope, matched_filter};
use ffsonar::synth::{generate_example, FF_GRID_END_HZ, FF_GRID_START_HZ};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::CliError;

pub struct Context {
    pub cfg: RunConfig,
    pub out: PathBuf,
    pub pool: rayon::ThreadPool,
}

impl Context {
    fn path(&self, p: &Path) -> PathBuf {
        self.out.join(p)
    }
}

const LOCK_FILE: &str = ".ffsonar.lock";

/// Held for the duration of a command; a second invocation on the same
/// output directory fails instead of interleaving writes.
struct OutputLock(PathBuf);

impl OutputLock {
    fn acquire(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        let path = dir.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(Self(path)),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(CliError::Io(format!(
                "{} exists; another run is using this output directory",
                path.display()
            ))),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn generate(ctx: &Context) -> Result<(), CliError> {
    let _lock = OutputLock::acquire(&ctx.out)?;
    let ds = &ctx.cfg.dataset;
    let seed = ctx.cfg.seeds.dataset;
    let recs = ctx.pool.install(|| {
        (0..2 * ds.n_per_class)
            .into_par_iter()
            .map(|i| generate_example(&ds.spec, i, seed))
            .collect::<ffsonar::Result<Vec<_>>>()
    })?;
    let manifest = Manifest::new(seed, ds.n_per_class, ds.spec, &recs);
    let dir = ctx.path(&ctx.cfg.paths.dataset_dir);
    save_dataset(&dir, &manifest, &recs)?;
    let [air, water] = manifest.class_counts();
    println!("wrote {} recordings to {}", recs.len(), dir.display());
    println!("air: {air}, water: {water}, master seed: {seed}");
    Ok(())
}

fn load_dataset(ctx: &Context) -> Result<(PathBuf, Manifest), CliError> {
    let dir = ctx.path(&ctx.cfg.paths.dataset_dir);
    let manifest = load_manifest(&dir)
        .map_err(|e| CliError::Io(format!("cannot read dataset in {}: {e}", dir.display())))?;
    if manifest.examples.is_empty() {
        return Err(CliError::Io(format!("dataset in {} is empty", dir.display())));
    }
    Ok((dir, manifest))
}

pub fn evaluate(ctx: &Context) -> Result<(), CliError> {
    let _lock = OutputLock::acquire(&ctx.out)?;
    let (dir, manifest) = load_dataset(ctx)?;
    let pulse = manifest.spec.pulse.waveform()?;
    let host = FluidMedium::water();
    let ev = &ctx.cfg.evaluation;
    let extracted = ctx.pool.install(|| {
        manifest
            .examples
            .par_iter()
            .map(|e| {
                let rec = load_raw(&dir.join(&e.file))?;
                Ok((e.id, e.label, extract(&rec, &pulse, &host, ev.scale)))
            })
            .collect::<ffsonar::Result<Vec<_>>>()
    })?;
    let table = FeatureTable::from_extractions(extracted);
    if table.is_empty() {
        return Err(CliError::NoDetection("no recording produced an echo".into()));
    }
    let pairs: Vec<_> = ev
        .descriptors
        .iter()
        .flat_map(|&k| ev.classifiers.iter().map(move |c| (k, c)))
        .collect();
    let seed = ctx.cfg.seeds.cv;
    let cells = ctx.pool.install(|| {
        pairs
            .par_iter()
            .map(|(k, c)| evaluate_cell(&table, *k, c, ev.folds, seed))
            .collect::<ffsonar::Result<Vec<_>>>()
    })?;
    let report = EvaluationReport::new(&table, cells);
    if report.too_many_failures() {
        eprintln!(
            "warning: {} of {} recordings had no detected echo: {:?}",
            report.failed_ids.len(),
            report.n_examples,
            report.failed_ids
        );
    }
    let base = ctx.path(&ctx.cfg.paths.report);
    let with_ext = |ext: &str| {
        let mut p = base.clone().into_os_string();
        p.push(ext);
        PathBuf::from(p)
    };
    let table_text = report.table();
    write_text(&with_ext(".txt"), &table_text)?;
    write_text(&with_ext(".csv"), &report.csv())?;
    write_text(&with_ext(".toml"), &report.to_toml()?)?;
    print!("{table_text}");

    if let Some(model_dir) = ctx.cfg.paths.model_dir.as_ref().filter(|p| !p.as_os_str().is_empty()) {
        let model_dir = ctx.path(model_dir);
        let labels = table.label_indices();
        let models = ctx.pool.install(|| {
            pairs
                .par_iter()
                .map(|(k, c)| {
                    let raw: Vec<&[f64]> = table.descriptor(*k)?.iter().map(Vec::as_slice).collect();
                    let st = Standardizer::fit(&raw)?;
                    let rows: Vec<Vec<f64>> = raw.iter().map(|r| st.transform(r)).collect();
                    let xs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
                    let classifier = c.fit(&xs, &labels, seed)?;
                    Ok(SavedModel {
                        classifier,
                        standardizer: Some(st),
                    })
                })
                .collect::<ffsonar::Result<Vec<_>>>()
        })?;
        fs::create_dir_all(&model_dir)?;
        for ((k, c), m) in pairs.iter().zip(&models) {
            let path = model_dir.join(format!("{}_{}.model", k.name(), c.name().to_lowercase()));
            fs::write(&path, m.to_bytes()?)?;
        }
        println!("models written to {}", model_dir.display());
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn roundtrip(ctx: &Context) -> Result<(), CliError> {
    let spec = &ctx.cfg.dataset.spec;
    let pulse = spec.pulse.waveform()?;
    let band = spec.pulse.band_hz();
    let band = (band.0.min(band.1), band.0.max(band.1));
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seeds.roundtrip);
    let mut draw = |(lo, hi): (f64, f64)| if lo == hi { lo } else { rng.random_range(lo..hi) };
    let n = ctx.cfg.roundtrip.n_targets;
    let scenes: Vec<(ShellTarget, f64)> = (0..n)
        .map(|i| {
            let a = draw(spec.radius_m);
            let d = draw(spec.thickness_m);
            let r = draw(spec.range_m);
            let filler = ffsonar::synth::FillerClass::ALL[i % 2];
            Ok((ShellTarget::aluminium_in_water(a, d, filler.medium())?, r))
        })
        .collect::<ffsonar::Result<_>>()?;
    let snr = ctx.cfg.roundtrip.snr_db;
    let seed = ctx.cfg.seeds.roundtrip;
    let results = ctx.pool.install(|| {
        scenes
            .par_iter()
            .enumerate()
            .map(|(i, (t, r))| {
                let clean = roundtrip_once(t, *r, &pulse, band, None)?;
                let noisy = match snr {
                    Some(s) => Some(roundtrip_once(t, *r, &pulse, band, Some((s, seed.wrapping_add(i as u64))))?),
                    None => None,
                };
                Ok((clean, noisy))
            })
            .collect::<ffsonar::Result<Vec<_>>>()
    })?;
    let mut worst = 0.0f64;
    let mut worst_noisy = 0.0f64;
    println!("target  radius_mm  thickness_mm  filler  range_m  max_rel_error{}", if snr.is_some() { "  noisy_max_rel_error" } else { "" });
    for (i, ((t, r), (clean, noisy))) in scenes.iter().zip(&results).enumerate() {
        worst = worst.max(clean.max_rel_error);
        let filler = ffsonar::synth::FillerClass::of_medium(&t.filler).map_or("?", |f| f.name());
        print!(
            "{i:>6}  {:>9.2}  {:>12.2}  {filler:>6}  {r:>7.3}  {:>13.3e}",
            t.outer_radius_m * 1e3,
            t.thickness_m * 1e3,
            clean.max_rel_error
        );
        if let Some(nz) = noisy {
            worst_noisy = worst_noisy.max(nz.max_rel_error);
            print!("  {:>19.3e}", nz.max_rel_error);
        }
        println!();
    }
    println!("max relative error (noiseless, bins within 20 dB of the pulse peak): {worst:.3e}");
    if let Some(s) = snr {
        println!("max relative error at {s} dB SNR: {worst_noisy:.3e}");
    }
    if let Some((clean, _)) = results.first() {
        let dir = ctx.path(&ctx.cfg.paths.plot_dir);
        let est = &clean.estimate;
        let analytic: Vec<f64> = est.freq_hz.iter().map(|&f| clean.analytic.interpolate(f).norm()).collect();
        write_xy_csv("frequency_hz", "abs_f", &est.freq_hz, &analytic, create(&dir.join("roundtrip_analytic.csv"))?)?;
        write_xy_csv("frequency_hz", "abs_f", &est.freq_hz, &est.magnitude(), create(&dir.join("roundtrip_estimate.csv"))?)?;
    }
    Ok(())
}

pub fn plot(ctx: &Context) -> Result<(), CliError> {
    let _lock = OutputLock::acquire(&ctx.out)?;
    let pc = &ctx.cfg.plot;
    let (dir, manifest) = load_dataset(ctx)?;
    let entry = manifest
        .examples
        .iter()
        .find(|e| e.id == pc.example_id)
        .ok_or_else(|| CliError::Config(format!("no recording with id {}", pc.example_id)))?;
    let pulse = manifest.spec.pulse.waveform()?;
    let host = FluidMedium::water();
    let rec = load_raw(&dir.join(&entry.file))?;
    let features = extract(&rec, &pulse, &host, ctx.cfg.evaluation.scale)?;
    let mf = matched_filter(&rec, &pulse)?;
    let grid = frequency_grid(FF_GRID_START_HZ, FF_GRID_END_HZ, pc.grid_points);
    let mut analytic = Vec::new();
    for &filler in &pc.fillers {
        let target = ShellTarget::aluminium_in_water(pc.radius_m, pc.thickness_m, filler.medium())?;
        analytic.push((filler, form_function_shell(&target, &grid)?));
    }

    // every input is ready; only writes from here on
    let out = ctx.path(&ctx.cfg.paths.plot_dir);
    for (filler, ff) in &analytic {
        let path = out.join(format!("form_function_{}.csv", filler.name()));
        write_xy_csv("frequency_hz", "abs_f", &grid, &ff.magnitude(), create(&path)?)?;
    }
    let fs_hz = rec.sample_rate_hz;
    let t: Vec<f64> = (0..mf.len()).map(|i| i as f64 / fs_hz).collect();
    write_xy_csv("time_s", "correlation", &t, &mf.samples, create(&out.join("matched_filter.csv"))?)?;
    write_xy_csv("time_s", "envelope", &t, &envelope(&mf), create(&out.join("matched_filter_envelope.csv"))?)?;
    let ff = &features.form_function;
    write_xy_csv("frequency_hz", "abs_f", &ff.freq_hz, &ff.magnitude(), create(&out.join("form_function_estimate.csv"))?)?;
    for d in &features.descriptors {
        let idx: Vec<f64> = (0..d.values.len()).map(|i| i as f64).collect();
        let path = out.join(format!("descriptor_{}.csv", d.kind.name()));
        write_xy_csv("index", "value", &idx, &d.values, create(&path)?)?;
    }
    let seg = &features.segmentation;
    println!(
        "recording {} ({}): direct arrival at sample {}, echo peak at sample {}, range {:.4} m (true {:.4} m)",
        entry.id,
        entry.label,
        seg.direct_index,
        seg.peak_index,
        features.range_m,
        entry.range_m
    );
    println!("plots written to {}", out.display());
    Ok(())
}

//! Physics checks against independent oracles: a big-integer power-series
//! evaluation of the spherical Bessel functions, brute-force partial-wave
//! sums, and the limit cases of the shell model.

use std::f64::consts::PI;

use ffsonar::physics::{
    form_function_rigid, form_function_shell, form_function_shell_extended, frequency_grid,
    rigid_series, spherical_bessel_table, truncation_order, ElasticSolid, FluidMedium, ShellTarget,
};
use ffsonar::Complex64;

mod common;
use common::series;

#[test]
fn series_oracle_sanity() {
    let x: f64 = 2.5;
    assert!((series::j(0, 5, 2) - x.sin() / x).abs() < 1e-15);
    assert!((series::y(0, 5, 2) + x.cos() / x).abs() < 1e-15);
    assert!((series::y(1, 5, 2) - (-x.cos() / (x * x) - x.sin() / x)).abs() < 1e-15);
}

#[test]
fn bessel_matches_series_oracle() {
    // arguments as p/q; covers both the upward and the Miller branch
    let args: &[(i64, i64)] = &[
        (1, 20),
        (1, 10),
        (1, 2),
        (1, 1),
        (5, 2),
        (7, 1),
        (10, 1),
        (31, 2),
        (25, 1),
        (30, 1),
        (75, 2),
        (45, 1),
        (60, 1),
    ];
    let mut worst: f64 = 0.0;
    for &(p, q) in args {
        let x = p as f64 / q as f64;
        let table = spherical_bessel_table(30, x).unwrap();
        for n in 0..=30usize {
            let jo = series::j(n as i64, p, q);
            let yo = series::y(n as i64, p, q);
            let envelope = if x > n as f64 { jo.hypot(yo) } else { 0.0 };
            let ej = (table.j[n] - jo).abs() / jo.abs().max(envelope);
            let ey = (table.y[n] - yo).abs() / yo.abs().max(envelope);
            assert!(ej <= 1e-10, "j_{n}({x}): {} vs {jo} (err {ej:e})", table.j[n]);
            assert!(ey <= 1e-10, "y_{n}({x}): {} vs {yo} (err {ey:e})", table.y[n]);
            worst = worst.max(ej).max(ey);
        }
    }
    println!("worst Bessel error vs series oracle: {worst:e}");
}

#[test]
fn wronskian_identity() {
    for x in [0.1, 1.0, 25.0, 100.0, 0.05, 200.0] {
        let t = spherical_bessel_table(60, x).unwrap();
        for n in 0..=60 {
            let w = t.j[n] * t.dy[n] - t.dj[n] * t.y[n];
            let expect = 1.0 / (x * x);
            assert!(((w - expect) / expect).abs() <= 1e-10, "n={n} x={x}");
        }
    }
}

fn grid_ka(host: &FluidMedium, radius: f64, ka: &[f64]) -> Vec<f64> {
    ka.iter()
        .map(|k| k * host.sound_speed / (2.0 * PI * radius))
        .collect()
}

#[test]
fn rigid_series_matches_brute_force_sum() {
    let ka = 5.0;
    let n_max = truncation_order(ka);
    let series = rigid_series(ka, n_max).unwrap();
    // term-by-term: a fresh table per order, summed to n = 200
    let mut brute = Complex64::new(0.0, 0.0);
    for n in 0..=200usize {
        let t = spherical_bessel_table(n, ka).unwrap();
        let dh = Complex64::new(t.dj[n], t.dy[n]);
        let b = -t.dj[n] / dh;
        brute += b * ((2 * n + 1) as f64) * if n % 2 == 0 { 1.0 } else { -1.0 };
    }
    brute = brute * 2.0 / (Complex64::i() * ka);
    assert!((series - brute).norm() <= 1e-8, "{series} vs {brute}");
}

#[test]
fn rigid_limits() {
    let host = FluidMedium::water();
    let a = 0.05;
    let f = grid_ka(&host, a, &[1e-3, 1e-2, 50.0]);
    let ff = form_function_rigid(&f, a, &host).unwrap();
    assert!(ff.values[0].norm() < 1e-5);
    assert!(ff.values[1].norm() < ff.values[0].norm().max(1e-3));
    assert!((ff.values[2].norm() - 1.0).abs() <= 0.05);
}

fn aluminium_shell(filler: FluidMedium) -> ShellTarget {
    ShellTarget::aluminium_in_water(0.05, 0.005, filler).unwrap()
}

#[test]
fn matched_media_do_not_scatter() {
    let host = FluidMedium::water();
    // shell with the host's density and compressional speed and a
    // vanishing shear modulus
    let shell = ElasticSolid::new(host.density, host.sound_speed, host.sound_speed * 1e-4).unwrap();
    let target = ShellTarget::new(0.05, 0.005, shell, host, host).unwrap();
    let grid = frequency_grid(30e3, 160e3, 27);
    let ff = form_function_shell(&target, &grid).unwrap();
    let worst = ff.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    assert!(worst <= 1e-6, "worst |f| = {worst:e}");
}

#[test]
fn vanishing_water_filled_shell() {
    // away from the shell's own resonances, which stay lossless and keep
    // full height while narrowing, the echo falls linearly with thickness
    let host = FluidMedium::water();
    let grid = frequency_grid(30e3, 160e3, 27);
    let mut previous = f64::INFINITY;
    for thickness in [1e-3, 1e-4, 1e-5, 1e-6] {
        let target = ShellTarget::aluminium_in_water(0.05, thickness, host).unwrap();
        let ff = form_function_shell(&target, &grid).unwrap();
        let mut mags = ff.magnitude();
        mags.sort_by(f64::total_cmp);
        let median = mags[mags.len() / 2];
        assert!(median < previous / 5.0, "thickness {thickness}: median {median}");
        previous = median;
    }
    assert!(previous < 1e-3, "{previous}");
}

#[test]
fn series_converged() {
    let grid = frequency_grid(30e3, 160e3, 53);
    for filler in [FluidMedium::air(), FluidMedium::water()] {
        let target = aluminium_shell(filler);
        let base = form_function_shell_extended(&target, &grid, 0).unwrap();
        let more = form_function_shell_extended(&target, &grid, 10).unwrap();
        for (a, b) in base.form_function.values.iter().zip(&more.form_function.values) {
            assert!((a - b).norm() < 1e-8);
        }
    }
}

#[test]
fn doubling_the_order_changes_nothing() {
    let host = FluidMedium::water();
    let a = 0.05;
    let grid = frequency_grid(30e3, 160e3, 14);
    let target = aluminium_shell(FluidMedium::water());
    for &f in &grid {
        let ka = host.wavenumber(f) * a;
        let n = truncation_order(ka);
        let base = form_function_shell_extended(&target, &[f], 0).unwrap();
        let doubled = form_function_shell_extended(&target, &[f], n).unwrap();
        let d = (base.form_function.values[0].norm() - doubled.form_function.values[0].norm()).abs();
        assert!(d < 1e-8, "f={f}: {d:e}");
    }
}

#[test]
fn deterministic_evaluation() {
    let grid = frequency_grid(30e3, 160e3, 40);
    let target = aluminium_shell(FluidMedium::air());
    let a = form_function_shell(&target, &grid).unwrap();
    let b = form_function_shell(&target, &grid).unwrap();
    assert_eq!(a, b);
}

/// Local extrema of `v` whose prominence over both neighbours exceeds `min`.
fn count_extrema(v: &[f64], min: f64) -> usize {
    let mut count = 0;
    let mut last_extreme = v[0];
    let mut rising = v[1] > v[0];
    for w in v.windows(2) {
        let now_rising = w[1] > w[0];
        if now_rising != rising {
            if (w[0] - last_extreme).abs() > min {
                count += 1;
                last_extreme = w[0];
            }
            rising = now_rising;
        }
    }
    count
}

#[test]
fn air_and_water_fillers_are_separable() {
    let grid = frequency_grid(30e3, 160e3, 521);
    let air = form_function_shell(&aluminium_shell(FluidMedium::air()), &grid).unwrap();
    let water = form_function_shell(&aluminium_shell(FluidMedium::water()), &grid).unwrap();
    let dist: f64 = air
        .magnitude()
        .iter()
        .zip(water.magnitude())
        .map(|(a, w)| (a - w).powi(2))
        .sum::<f64>()
        .sqrt();
    // numerical noise floor: the same curve recomputed with 10 extra modes
    let again = form_function_shell_extended(&aluminium_shell(FluidMedium::water()), &grid, 10).unwrap();
    let noise: f64 = water
        .magnitude()
        .iter()
        .zip(again.form_function.magnitude())
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt()
        .max(1e-12);
    println!("air/water L2 distance {dist:.4}, noise floor {noise:e}");
    assert!(dist > 10.0 * noise);
    assert!(dist > 0.5);
}

#[test]
fn water_filled_aluminium_has_peaks_and_notches() {
    let grid = frequency_grid(30e3, 160e3, 1301);
    let water = form_function_shell(&aluminium_shell(FluidMedium::water()), &grid).unwrap();
    let extrema = count_extrema(&water.magnitude(), 0.05);
    assert!(extrema >= 4, "only {extrema} prominent extrema");
}


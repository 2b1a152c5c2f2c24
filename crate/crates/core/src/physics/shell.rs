//! Partial-wave solution for a fluid-filled elastic spherical shell.
//!
//! For each mode `n` the unknowns are the scattered amplitude in the host,
//! the regular and irregular longitudinal and shear potentials in the shell,
//! and the transmitted amplitude in the filler. The six equations are
//! continuity of radial displacement and radial stress, plus vanishing
//! tangential stress, at the outer (`a`) and inner (`b`) surfaces.
//!
//! Shell potentials use `u = ∇φ + ∇×∇×(r ψ r̂)` and are scaled by `ρ_s ω²`
//! so every unknown carries pressure units. Radial displacement rows are
//! multiplied by `r ρ_s ω²`; stress rows are divided by `μ k_T²`, except the
//! tangential rows which are divided by `μ / r²` only. Mode 0 has no shear
//! coupling and reduces to a 4×4 system.

use num_complex::Complex64;

use super::bessel::{spherical_bessel_table, spherical_j_table, BesselTable, RegularTable};
use super::{check_grid, truncation_order, FormFunction, ShellTarget};
use crate::error::{Error, Result};

/// Form function plus the bins that had to be nudged off a singular point.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellEvaluation {
    pub form_function: FormFunction,
    pub perturbed_bins: Vec<usize>,
}

pub fn form_function_shell(target: &ShellTarget, freq_hz: &[f64]) -> Result<FormFunction> {
    Ok(form_function_shell_detailed(target, freq_hz)?.form_function)
}

pub fn form_function_shell_detailed(target: &ShellTarget, freq_hz: &[f64]) -> Result<ShellEvaluation> {
    form_function_shell_extended(target, freq_hz, 0)
}

/// As [`form_function_shell`] with `extra_modes` partial waves beyond the
/// usual truncation order.
pub fn form_function_shell_extended(
    target: &ShellTarget,
    freq_hz: &[f64],
    extra_modes: usize,
) -> Result<ShellEvaluation> {
    target.validate()?;
    check_grid(freq_hz)?;
    let mut values = Vec::with_capacity(freq_hz.len());
    let mut perturbed_bins = Vec::new();
    for (i, &f) in freq_hz.iter().enumerate() {
        let v = match backscatter(target, f, extra_modes)? {
            Some(v) => v,
            None => {
                perturbed_bins.push(i);
                let nudged = f * (1.0 + 1e-9);
                backscatter(target, nudged, extra_modes)?.ok_or_else(|| Error::Numerical {
                    mode: 0,
                    freq_hz: f,
                    detail: "boundary system singular at the nudged frequency as well".into(),
                })?
            }
        };
        values.push(v.conj());
    }
    let form_function = FormFunction::new(freq_hz.to_vec(), values, Some(target.outer_radius_m))?;
    Ok(ShellEvaluation {
        form_function,
        perturbed_bins,
    })
}

struct ModeTables {
    host: BesselTable,
    long_outer: BesselTable,
    long_inner: BesselTable,
    shear_outer: BesselTable,
    shear_inner: BesselTable,
    filler: RegularTable,
    filler_x: f64,
}

/// `None` when some mode's boundary system is numerically singular.
fn backscatter(target: &ShellTarget, freq_hz: f64, extra_modes: usize) -> Result<Option<Complex64>> {
    let omega = 2.0 * std::f64::consts::PI * freq_hz;
    let a = target.outer_radius_m;
    let b = target.inner_radius_m();
    let k_host = omega / target.host.sound_speed;
    let k_long = omega / target.shell.longitudinal_speed;
    let k_shear = omega / target.shell.shear_speed;
    let k_fill = omega / target.filler.sound_speed;
    let ka = k_host * a;
    let n_max = truncation_order(ka) + extra_modes;

    let tables = ModeTables {
        host: spherical_bessel_table(n_max, ka)?,
        long_outer: spherical_bessel_table(n_max, k_long * a)?,
        long_inner: spherical_bessel_table(n_max, k_long * b)?,
        shear_outer: spherical_bessel_table(n_max, k_shear * a)?,
        shear_inner: spherical_bessel_table(n_max, k_shear * b)?,
        filler: spherical_j_table(n_max, k_fill * b)?,
        filler_x: k_fill * b,
    };
    let rho_s = target.shell.density;
    let ratio_host = rho_s / target.host.density;
    let ratio_fill = rho_s / target.filler.density;

    let mut sum = Complex64::new(0.0, 0.0);
    for n in 0..=n_max {
        let Some(coef) = mode_coefficient(n, &tables, ratio_host, ratio_fill) else {
            return Ok(None);
        };
        if !(coef.re.is_finite() && coef.im.is_finite()) {
            return Err(Error::Numerical {
                mode: n,
                freq_hz,
                detail: format!("scattering coefficient {coef}"),
            });
        }
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        sum += coef * ((2 * n + 1) as f64 * sign);
    }
    Ok(Some(sum * 2.0 / (Complex64::i() * ka)))
}

/// Rows contributed by one shell potential column at one surface:
/// (radial displacement, radial stress, tangential stress).
fn longitudinal_rows(t: &BesselTable, n: usize, x_shear: f64, irregular: bool) -> [f64; 3] {
    let x = t.x;
    let (z, dz) = if irregular { (t.y[n], t.dy[n]) } else { (t.j[n], t.dj[n]) };
    let nn = (n * (n + 1)) as f64;
    let xs2 = x_shear * x_shear;
    [
        x * dz,
        ((2.0 * nn - xs2) * z - 4.0 * x * dz) / xs2,
        2.0 * (x * dz - z),
    ]
}

fn shear_rows(t: &BesselTable, n: usize, irregular: bool) -> [f64; 3] {
    let x = t.x;
    let (z, dz) = if irregular { (t.y[n], t.dy[n]) } else { (t.j[n], t.dj[n]) };
    let nn = (n * (n + 1)) as f64;
    let x2 = x * x;
    [
        nn * z,
        2.0 * nn * (x * dz - z) / x2,
        -2.0 * x * dz + (2.0 * nn - 2.0 - x2) * z,
    ]
}

fn mode_coefficient(n: usize, t: &ModeTables, ratio_host: f64, ratio_fill: f64) -> Option<Complex64> {
    let c = |v: f64| Complex64::new(v, 0.0);
    let zero = c(0.0);
    let xh = t.host.x;
    let h = Complex64::new(t.host.j[n], t.host.y[n]);
    let dh = Complex64::new(t.host.dj[n], t.host.dy[n]);
    let xf = t.filler_x;

    let l_out = [
        longitudinal_rows(&t.long_outer, n, t.shear_outer.x, false),
        longitudinal_rows(&t.long_outer, n, t.shear_outer.x, true),
    ];
    let l_in = [
        longitudinal_rows(&t.long_inner, n, t.shear_inner.x, false),
        longitudinal_rows(&t.long_inner, n, t.shear_inner.x, true),
    ];

    let host_col = [-ratio_host * xh * dh, h, zero];
    let host_rhs = [c(ratio_host * xh * t.host.dj[n]), c(-t.host.j[n]), zero];
    let fill_col = [
        c(-ratio_fill * xf * t.filler.dj[n]),
        c(t.filler.j[n]),
        zero,
    ];

    if n == 0 {
        // unknowns: A, B, C, F; rows: u_r(a), σ_rr(a), u_r(b), σ_rr(b)
        let mut m = vec![vec![zero; 4]; 4];
        let mut rhs = vec![zero; 4];
        for (row, eq) in [(0usize, 0usize), (1, 1)] {
            m[row][0] = host_col[eq];
            m[row][1] = c(l_out[0][eq]);
            m[row][2] = c(l_out[1][eq]);
            rhs[row] = host_rhs[eq];
        }
        for (row, eq) in [(2usize, 0usize), (3, 1)] {
            m[row][1] = c(l_in[0][eq]);
            m[row][2] = c(l_in[1][eq]);
            m[row][3] = fill_col[eq];
        }
        return solve(m, rhs).map(|x| x[0]);
    }

    let s_out = [
        shear_rows(&t.shear_outer, n, false),
        shear_rows(&t.shear_outer, n, true),
    ];
    let s_in = [
        shear_rows(&t.shear_inner, n, false),
        shear_rows(&t.shear_inner, n, true),
    ];
    // unknowns: A, B, C, D, E, F
    let mut m = vec![vec![zero; 6]; 6];
    let mut rhs = vec![zero; 6];
    for eq in 0..3 {
        let r = eq;
        m[r][0] = host_col[eq];
        m[r][1] = c(l_out[0][eq]);
        m[r][2] = c(l_out[1][eq]);
        m[r][3] = c(s_out[0][eq]);
        m[r][4] = c(s_out[1][eq]);
        rhs[r] = host_rhs[eq];

        let r = eq + 3;
        m[r][1] = c(l_in[0][eq]);
        m[r][2] = c(l_in[1][eq]);
        m[r][3] = c(s_in[0][eq]);
        m[r][4] = c(s_in[1][eq]);
        m[r][5] = fill_col[eq];
    }
    solve(m, rhs).map(|x| x[0])
}

/// Gaussian elimination with column equilibration and scaled partial
/// pivoting. `None` if a pivot falls below `1e-13` of its row scale.
fn solve(mut m: Vec<Vec<Complex64>>, mut rhs: Vec<Complex64>) -> Option<Vec<Complex64>> {
    let n = rhs.len();
    let mut col_scale = vec![1.0; n];
    for (j, s) in col_scale.iter_mut().enumerate() {
        let max = m.iter().map(|row| row[j].norm()).fold(0.0, f64::max);
        if max == 0.0 || !max.is_finite() {
            return None;
        }
        *s = 1.0 / max;
        for row in m.iter_mut() {
            row[j] *= *s;
        }
    }
    for (row, r) in m.iter_mut().zip(rhs.iter_mut()) {
        let max = row.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            return None;
        }
        let inv = 1.0 / max;
        for v in row.iter_mut() {
            *v *= inv;
        }
        *r *= inv;
    }
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[i][k].norm().total_cmp(&m[j][k].norm()))
            .unwrap();
        if m[p][k].norm() < 1e-13 {
            return None;
        }
        m.swap(k, p);
        rhs.swap(k, p);
        let pivot = m[k][k];
        for i in k + 1..n {
            let factor = m[i][k] / pivot;
            if factor == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in k..n {
                let sub = factor * m[k][j];
                m[i][j] -= sub;
            }
            let sub = factor * rhs[k];
            rhs[i] -= sub;
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for k in (0..n).rev() {
        let mut acc = rhs[k];
        for j in k + 1..n {
            acc -= m[k][j] * x[j];
        }
        x[k] = acc / m[k][k];
    }
    for (v, s) in x.iter_mut().zip(&col_scale) {
        *v *= *s;
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{form_function_rigid, frequency_grid, ElasticSolid, FluidMedium};

    #[test]
    fn solver_handles_permuted_system() {
        let c = |v: f64| Complex64::new(v, 0.0);
        let m = vec![
            vec![c(0.0), c(2.0), c(1.0)],
            vec![c(1.0), c(0.0), c(0.0)],
            vec![c(0.0), c(1.0), c(3.0)],
        ];
        let x = solve(m, vec![c(4.0), c(1.0), c(7.0)]).unwrap();
        for (got, want) in x.iter().zip([1.0, 1.0, 2.0]) {
            assert!((got - c(want)).norm() < 1e-14);
        }
    }

    #[test]
    fn solver_reports_singular() {
        let c = |v: f64| Complex64::new(v, 0.0);
        let m = vec![vec![c(1.0), c(2.0)], vec![c(2.0), c(4.0)]];
        assert!(solve(m, vec![c(1.0), c(2.0)]).is_none());
    }

    /// Penetrable fluid sphere, solved independently of the shell system.
    fn fluid_sphere(ka: f64, kb_inner: f64, rho_ratio: f64) -> Complex64 {
        let n_max = truncation_order(ka) + 10;
        let h_tab = spherical_bessel_table(n_max, ka).unwrap();
        let i_tab = spherical_bessel_table(n_max, kb_inner).unwrap();
        let mut sum = Complex64::new(0.0, 0.0);
        for n in 0..=n_max {
            // continuity of p and (1/ρ) ∂p/∂r at r = a
            let h = Complex64::new(h_tab.j[n], h_tab.y[n]);
            let dh = Complex64::new(h_tab.dj[n], h_tab.dy[n]);
            let g = rho_ratio * (kb_inner / ka) * i_tab.dj[n] / i_tab.j[n];
            // j' + A h' = g (j + A h), g = ρ_h k_s j_s' / (ρ_s k_h j_s)
            let a = -(h_tab.dj[n] - g * h_tab.j[n]) / (dh - g * h);
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            sum += a * ((2 * n + 1) as f64 * sign);
        }
        (sum * 2.0 / (Complex64::i() * ka)).conj()
    }

    #[test]
    fn soft_shear_shell_matches_fluid_sphere() {
        // shell and filler made of the same fluid-like material: the target
        // is a homogeneous fluid sphere
        let host = FluidMedium::water();
        let inner = FluidMedium::new(1200.0, 1800.0).unwrap();
        let shell = ElasticSolid::new(1200.0, 1800.0, 1800.0e-4).unwrap();
        let target = ShellTarget::new(0.04, 0.01, shell, inner, host).unwrap();
        let grid = frequency_grid(20e3, 150e3, 14);
        let ff = form_function_shell(&target, &grid).unwrap();
        for (f, v) in grid.iter().zip(&ff.values) {
            let ka = host.wavenumber(*f) * 0.04;
            let ks_a = inner.wavenumber(*f) * 0.04;
            let expect = fluid_sphere(ka, ks_a, host.density / inner.density);
            assert!((v - expect).norm() < 1e-5, "f={f} got {v} expect {expect}");
        }
    }

    #[test]
    fn near_rigid_shell_tracks_rigid_sphere() {
        let host = FluidMedium::water();
        let al = ElasticSolid::aluminium();
        let stiff = ElasticSolid::new(al.density * 1e4, al.longitudinal_speed * 10.0, al.shear_speed * 10.0).unwrap();
        let vacuum = FluidMedium::new(1e-6, 343.0).unwrap();
        let a = 0.05;
        let target = ShellTarget::new(a, 0.005, stiff, vacuum, host).unwrap();
        let grid: Vec<f64> = (0..=76)
            .map(|i| (1.0 + 0.25 * i as f64) * host.sound_speed / (2.0 * std::f64::consts::PI * a))
            .collect();
        let shell = form_function_shell(&target, &grid).unwrap();
        let rigid = form_function_rigid(&grid, a, &host).unwrap();
        let worst = shell
            .values
            .iter()
            .zip(&rigid.values)
            .map(|(s, r)| (s - r).norm())
            .fold(0.0, f64::max);
        assert!(worst <= 0.1, "worst deviation {worst}");
    }
}

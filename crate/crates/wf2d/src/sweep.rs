//! Parameter sweeps and log-log slope fitting.
//!
//! Three axes. The carrier-frequency sweep isolates the oscillation stress
//! of a frozen, spatially uniform input: every amplitude-gradient term then
//! vanishes and the analytic flux rates zero the transport excess, so the
//! measured `L¹` norm tracks the anti-divergence gain at the carrier pair
//! frequencies. The kernel-length sweep measures the mollification
//! commutator of a stochastically forced base pair. The grid sweep reruns
//! one bookkeeping step at several resolutions; the physics is band-limited
//! far below all of them, so the measured identities must not move.

use std::str::FromStr;

use num_complex::Complex64;

use crate::amplitude;
use crate::blocks::{self, BlockSpec, DEFAULT_GAP};
use crate::error::{Error, Result};
use crate::field::{Components, TorusField};
use crate::geometry::direction_set;
use crate::grid as wavegrid;
use crate::iterate::{initial_pair, iterate_step, lean_kits, mollify_step, StepPlan};
use crate::noise::{self, NoiseSpectrum, Regime};
use crate::params::{demo_block_parameters, derive_parameters, Mode, DEFAULT_C_R};
use crate::stress;
use crate::timegrid::TimeGrid;
use crate::tol;

/// Least-squares slope of `log(y)` against `log(x)`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Parameter("slope fit needs ≥ 2 matching points".into()));
    }
    if xs.iter().chain(ys.iter()).any(|&v| !(v > 0.0)) {
        return Err(Error::Parameter("slope fit needs positive data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(ly.iter()).map(|(a, b)| (a - mx) * (b - my)).sum();
    Ok(sxy / sxx)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    Lambda,
    MollLength,
    Grid,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Lambda => "lambda",
            SweepAxis::MollLength => "l",
            SweepAxis::Grid => "grid",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lambda" => Ok(SweepAxis::Lambda),
            "l" => Ok(SweepAxis::MollLength),
            "grid" => Ok(SweepAxis::Grid),
            other => Err(Error::SweepValue(format!(
                "unknown sweep axis '{other}' (expected lambda, l, or grid)"
            ))),
        }
    }
}

/// One sweep point: the axis value and the measured norms.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub value: f64,
    pub norms: Vec<(&'static str, f64)>,
}

/// A finished sweep with the fitted slope of the first norm column.
#[derive(Clone, Debug)]
pub struct SweepData {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
    pub slope: f64,
    /// Envelope exponent the slope is held against, when the axis has one:
    /// a ceiling for the carrier sweep, a two-sided target for the kernel
    /// sweep.
    pub reference: Option<f64>,
}

impl SweepData {
    pub fn norm_names(&self) -> Vec<&'static str> {
        self.rows.first().map(|r| r.norms.iter().map(|&(n, _)| n).collect()).unwrap_or_default()
    }
}

fn fit_first_column(axis: SweepAxis, rows: &[SweepRow], reference: Option<f64>) -> Result<SweepData> {
    let xs: Vec<f64> = rows.iter().map(|r| r.value).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.norms[0].1).collect();
    let slope = loglog_slope(&xs, &ys)?;
    Ok(SweepData { axis, rows: rows.to_vec(), slope, reference })
}

/// Spatially uniform trace-free stress with entries a fixed fraction of the
/// amplitude scale, so every sweep point sees the same frozen input.
fn uniform_stress(scale: f64) -> Result<TorusField> {
    let mut r = TorusField::zeros(8, Components::Tensor)?;
    let (r11, r12) = (0.25 * scale, 0.15 * scale);
    r.add_mode(0, 0, 0, Complex64::new(r11, 0.0));
    r.add_mode(1, 0, 0, Complex64::new(r12, 0.0));
    r.add_mode(2, 0, 0, Complex64::new(r12, 0.0));
    r.add_mode(3, 0, 0, Complex64::new(-r11, 0.0));
    Ok(r)
}

fn pow2_at_least(x: usize) -> usize {
    let mut n = 2;
    while n < x {
        n *= 2;
    }
    n
}

fn spectrum_inf<T>(modes: &[(i64, i64, T)]) -> i64 {
    modes.iter().map(|&(k1, k2, _)| k1.abs().max(k2.abs())).max().unwrap_or(0)
}

/// Oscillation stress of a frozen uniform input across carrier frequencies.
///
/// Every value must be a positive multiple of 10. The envelope slope for
/// the first norm column is `-1/2`: a ceiling, not a target, since the
/// anti-divergence gain at the carrier pairs decays like the frequency
/// itself and the pulse-derivative prefactor only grows like its width.
pub fn lambda_sweep(lambdas: &[u64], eta: f64) -> Result<SweepData> {
    if lambdas.is_empty() {
        return Err(Error::SweepValue("carrier sweep needs at least one value".into()));
    }
    let params = derive_parameters(
        0.5,
        2.0,
        10,
        2,
        0.01,
        None,
        DEFAULT_C_R,
        Mode::Demo,
        Regime::Additive,
    )?;
    let n_amp = 8usize;
    let c = params.c_r * params.delta(1) * params.m0(Regime::Additive, 0.0);
    let frozen = uniform_stress(c)?;
    let amps = amplitude::amplitudes(&frozen, &params, 0, 0.0, Regime::Additive, None, n_amp)?;

    let dirs = direction_set();
    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        if lambda == 0 || lambda % 10 != 0 {
            return Err(Error::SweepValue(format!(
                "carrier value {lambda} is not a positive multiple of 10"
            )));
        }
        let (lambda, lambda_sigma, r, mu) = demo_block_parameters(lambda, eta, DEFAULT_GAP)?;
        let base = BlockSpec::new(dirs[0], lambda, lambda_sigma, r, mu)?;
        base.check_ordering(DEFAULT_GAP)?;

        let mut w_inf = 0i64;
        for d in dirs.iter().copied() {
            let s = base.with_direction(d);
            w_inf = w_inf.max(spectrum_inf(&blocks::flow_modes(&s, 0.0)));
        }
        let content = 2 * (w_inf + (n_amp / 2) as i64);
        let n = pow2_at_least((2 * content + 2) as usize);

        let kits = lean_kits(&base, 0.0, n, true)?;
        let rates = stress::static_flux_rate(&amps, &kits)?;
        let osc = stress::oscillation(&amps, &kits, &rates)?;
        rows.push(SweepRow {
            value: lambda as f64,
            norms: vec![
                ("r_osc_l1", osc.r_osc.norm_lp(1.0)),
                ("r_osc_sup", osc.r_osc.norm_sup()),
            ],
        });
    }
    fit_first_column(SweepAxis::Lambda, &rows, Some(-0.5))
}

/// Mollification commutator of a forced base pair across kernel lengths,
/// given as multiples of the time step.
///
/// The reference exponent is the first-order envelope `1/2 - 2δ` built from
/// the noise Hölder offset `δ`; the measured commutator of a rough path is
/// second order in its modulus, so the fitted slope is expected to sit
/// well above the envelope (faster vanishing), not on it.
pub fn mollification_sweep(l_over_dt: &[f64], delta: f64, seed: u64) -> Result<SweepData> {
    if l_over_dt.is_empty() {
        return Err(Error::SweepValue("kernel sweep needs at least one value".into()));
    }
    if !(delta > 0.0 && delta < 1.0 / 12.0) {
        return Err(Error::SweepValue(format!("Hölder offset δ = {delta} outside (0, 1/12)")));
    }
    let params = derive_parameters(
        0.5,
        2.0,
        10,
        2,
        0.01,
        None,
        DEFAULT_C_R,
        Mode::Demo,
        Regime::Additive,
    )?;
    let grid = TimeGrid::new(0.0, 0.1, 256)?;
    let spectrum = NoiseSpectrum::new(4.5, 8, params.m, 0.75)?;
    let path = noise::simulate_z(&spectrum, params.m, &grid, seed)?;
    let state = initial_pair(&params, Regime::Additive, &grid, &path)?;

    let dt = grid.dt();
    let mut rows = Vec::with_capacity(l_over_dt.len());
    for &k in l_over_dt {
        if !(k > 1.0) {
            return Err(Error::SweepValue(format!(
                "kernel length must exceed the time step; got {k} steps"
            )));
        }
        let l = k * dt;
        let moll = mollify_step(&state, l)?;
        let worst =
            moll.commutator1.iter().map(|f| f.norm_lp(1.0)).fold(0.0f64, f64::max);
        rows.push(SweepRow { value: l, norms: vec![("com1_l1", worst)] });
    }
    fit_first_column(SweepAxis::MollLength, &rows, Some(0.5 - 2.0 * delta))
}

/// One bookkeeping step at several grid resolutions with the physics held
/// fixed; all identities are spectral, so the measured columns must agree
/// across rows to rounding.
pub fn grid_sweep(grids: &[usize], seed: u64) -> Result<SweepData> {
    if grids.is_empty() {
        return Err(Error::SweepValue("grid sweep needs at least one value".into()));
    }
    let params = derive_parameters(
        0.5,
        2.0,
        10,
        2,
        0.01,
        None,
        DEFAULT_C_R,
        Mode::Demo,
        Regime::Additive,
    )?;
    let grid = TimeGrid::new(0.0, 0.1, 8)?;
    let spectrum = NoiseSpectrum::new(4.0, 4, params.m, 0.25)?;
    let path = noise::simulate_z(&spectrum, params.m, &grid, seed)?;
    let state = initial_pair(&params, Regime::Additive, &grid, &path)?;

    let mut rows = Vec::with_capacity(grids.len());
    for &g in grids {
        wavegrid::validate_n(g).map_err(|_| {
            Error::SweepValue(format!("grid value {g} is not a power-of-two resolution"))
        })?;
        let plan = StepPlan {
            grid_n: g,
            n_amp: 8,
            l_override: Some(16.0 * grid.dt()),
            residual_tol: tol::BOOKKEEPING,
        };
        let next = iterate_step(&state, &plan)?;
        let d = next.diagnostics.last().unwrap();
        rows.push(SweepRow {
            value: g as f64,
            norms: vec![
                ("residual_rel", d.residual_rel),
                ("r1_l1", d.r_l1),
                ("v1_l2", d.v_l2),
            ],
        });
    }
    fit_first_column(SweepAxis::Grid, &rows, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_power_law() {
        let xs: [f64; 3] = [16.0, 32.0, 64.0];
        let ys: Vec<f64> = xs.iter().map(|&x| 3.0 * x.powf(-1.5)).collect();
        let s = loglog_slope(&xs, &ys).unwrap();
        assert!((s + 1.5).abs() < 1e-12);
        assert!(loglog_slope(&[1.0], &[1.0]).is_err());
        assert!(loglog_slope(&[1.0, -2.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn axis_names_round_trip() {
        for axis in [SweepAxis::Lambda, SweepAxis::MollLength, SweepAxis::Grid] {
            assert_eq!(axis.as_str().parse::<SweepAxis>().unwrap(), axis);
        }
        assert!("volume".parse::<SweepAxis>().is_err());
    }

    #[test]
    fn carrier_sweep_rejects_off_lattice_values() {
        assert!(lambda_sweep(&[105], 0.125).is_err());
        assert!(lambda_sweep(&[], 0.125).is_err());
    }

    #[test]
    fn kernel_sweep_decays_with_the_kernel() {
        let data = mollification_sweep(&[32.0, 16.0], 1.0 / 24.0, 7).unwrap();
        assert_eq!(data.rows.len(), 2);
        assert!(data.slope > 0.0, "commutator must vanish with the kernel: {}", data.slope);
        assert!(data.reference.unwrap() > 0.0);
    }
}

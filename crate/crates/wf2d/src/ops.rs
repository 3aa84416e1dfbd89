//! Fourier-multiplier operators and the torus anti-divergence.
//!
//! Everything here acts mode-by-mode; inputs are transformed to modes if
//! needed and outputs carry modes only. Band thresholds compare Euclidean
//! `|k|` inclusively, which is exact because `|k|²` is integer-valued.

use crate::error::{Error, Result};
use crate::field::{Components, Direction, TorusField};
use crate::grid;
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandSpec {
    /// Keep `|k| ≤ r` (boundary included).
    Low(f64),
    /// Keep `|k| ≥ κ` (boundary included).
    High(f64),
    /// Drop the zero mode only.
    NonZero,
}

impl BandSpec {
    fn admits(self, k_sq: f64) -> bool {
        match self {
            BandSpec::Low(r) => k_sq <= r * r,
            BandSpec::High(k) => k_sq >= k * k,
            BandSpec::NonZero => k_sq != 0.0,
        }
    }

    fn validated(self) -> Result<Self> {
        let thr = match self {
            BandSpec::Low(r) => r,
            BandSpec::High(k) => k,
            BandSpec::NonZero => return Ok(self),
        };
        if thr >= 0.0 {
            Ok(self)
        } else {
            Err(Error::Parameter(format!("band threshold {thr} must be ≥ 0")))
        }
    }
}

fn spectral(field: &TorusField) -> TorusField {
    let mut f = field.transform(Direction::Forward);
    f.drop_samples();
    f
}

/// Apply a radial multiplier `g(|k|²)` to every mode; the zero mode is
/// multiplied by `zero_mode` instead.
fn apply_radial(field: &TorusField, zero_mode: f64, g: impl Fn(f64) -> f64) -> TorusField {
    let mut f = spectral(field);
    let n = f.n();
    let nn = n * n;
    let ncomp = f.ncomp();
    let modes = f.modes_mut();
    for i1 in 0..n {
        for i2 in 0..n {
            let ksq = grid::k_sq(i1, i2, n);
            let m = if ksq == 0.0 { zero_mode } else { g(ksq) };
            for c in 0..ncomp {
                modes[c * nn + i1 * n + i2] *= m;
            }
        }
    }
    f
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaplacianSign {
    Forward,
    Inverse,
}

/// `(-Δ)^m` (symbol `|k|^{2m}`) or its inverse on mean-zero fields
/// (symbol `|k|^{-2m}`, zero mode mapped to 0 either way).
pub fn fractional_laplacian(
    field: &TorusField,
    m: f64,
    sign: LaplacianSign,
) -> Result<TorusField> {
    if !(m > 0.0 && m <= 2.0) {
        return Err(Error::Parameter(format!("fractional exponent m = {m} outside (0, 2]")));
    }
    let f = spectral(field);
    if sign == LaplacianSign::Inverse {
        for c in 0..f.ncomp() {
            let mm = f.modes_of(c);
            let cmax = mm.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
            let c0 = mm[0].norm();
            if c0 > 1e-12 * cmax.max(f64::MIN_POSITIVE) {
                return Err(Error::NotMeanZero { c0, cmax });
            }
        }
    }
    Ok(match sign {
        LaplacianSign::Forward => apply_radial(&f, 0.0, |ksq| ksq.powf(m)),
        LaplacianSign::Inverse => apply_radial(&f, 0.0, |ksq| ksq.powf(-m)),
    })
}

/// Zero out modes outside the band; `|k|` is Euclidean.
pub fn band_project(field: &TorusField, band: BandSpec) -> Result<TorusField> {
    let band = band.validated()?;
    Ok(apply_radial(field, if band.admits(0.0) { 1.0 } else { 0.0 }, |ksq| {
        if band.admits(ksq) {
            1.0
        } else {
            0.0
        }
    }))
}

/// Leray projection `Id - ∇Δ⁻¹∇·` onto divergence-free fields; the zero mode
/// (the mean) passes through untouched.
pub fn leray_project(field: &TorusField) -> Result<TorusField> {
    if field.components() != Components::Vector {
        return Err(Error::Shape("Leray projection expects a vector field".into()));
    }
    let mut f = spectral(field);
    let n = f.n();
    let nn = n * n;
    let modes = f.modes_mut();
    for i1 in 0..n {
        let k1 = grid::wavenumber(i1, n) as f64;
        for i2 in 0..n {
            let k2 = grid::wavenumber(i2, n) as f64;
            let ksq = k1 * k1 + k2 * k2;
            if ksq == 0.0 {
                continue;
            }
            let idx = i1 * n + i2;
            let v1 = modes[idx];
            let v2 = modes[nn + idx];
            let kdv = (k1 * v1 + k2 * v2) / ksq;
            modes[idx] = v1 - k1 * kdv;
            modes[nn + idx] = v2 - k2 * kdv;
        }
    }
    Ok(f)
}

/// `∇·v` of a vector field.
pub fn divergence(field: &TorusField) -> Result<TorusField> {
    if field.components() != Components::Vector {
        return Err(Error::Shape("divergence expects a vector field".into()));
    }
    let f = spectral(field);
    let n = f.n();
    let nn = n * n;
    let mut out = TorusField::from_modes(n, Components::Scalar, vec![Complex64::default(); nn])?;
    let src = f.modes();
    let dst = out.modes_mut();
    fill_ik_combination(dst, &[(src, 0, Axis::X1), (src, 1, Axis::X2)], n, nn);
    Ok(out)
}

/// Row-wise divergence `(div T)_i = ∂_j T_{ij}` of a tensor field.
pub fn divergence_tensor(field: &TorusField) -> Result<TorusField> {
    if field.components() != Components::Tensor {
        return Err(Error::Shape("divergence_tensor expects a tensor field".into()));
    }
    let f = spectral(field);
    let n = f.n();
    let nn = n * n;
    let mut out =
        TorusField::from_modes(n, Components::Vector, vec![Complex64::default(); 2 * nn])?;
    let src = f.modes();
    {
        let dst = out.modes_mut();
        let (row1, row2) = dst.split_at_mut(nn);
        fill_ik_combination(row1, &[(src, 0, Axis::X1), (src, 1, Axis::X2)], n, nn);
        fill_ik_combination(row2, &[(src, 2, Axis::X1), (src, 3, Axis::X2)], n, nn);
    }
    Ok(out)
}

/// `∇s` of a scalar field.
pub fn gradient(field: &TorusField) -> Result<TorusField> {
    if field.components() != Components::Scalar {
        return Err(Error::Shape("gradient expects a scalar field".into()));
    }
    let f = spectral(field);
    let n = f.n();
    let nn = n * n;
    let mut out =
        TorusField::from_modes(n, Components::Vector, vec![Complex64::default(); 2 * nn])?;
    let src = f.modes();
    {
        let dst = out.modes_mut();
        let (g1, g2) = dst.split_at_mut(nn);
        fill_ik_combination(g1, &[(src, 0, Axis::X1)], n, nn);
        fill_ik_combination(g2, &[(src, 0, Axis::X2)], n, nn);
    }
    Ok(out)
}

/// `∇^⊥ s = (-∂₂ s, ∂₁ s)`.
pub fn perp_gradient(field: &TorusField) -> Result<TorusField> {
    let g = gradient(field)?;
    let n = g.n();
    let nn = n * n;
    let mut out =
        TorusField::from_modes(n, Components::Vector, vec![Complex64::default(); 2 * nn])?;
    let src = g.modes();
    {
        let dst = out.modes_mut();
        for j in 0..nn {
            dst[j] = -src[nn + j];
            dst[nn + j] = src[j];
        }
    }
    Ok(out)
}

enum Axis {
    X1,
    X2,
}

/// `dst = Σ_terms i·k_axis · src_comp`, the shared kernel of the first-order
/// operators above. Nyquist lines are sent to zero (the split-pair average of
/// an odd symbol), matching `TorusField::differentiate`.
fn fill_ik_combination(
    dst: &mut [Complex64],
    terms: &[(&[Complex64], usize, Axis)],
    n: usize,
    nn: usize,
) {
    let half = (n / 2) as i64;
    for i1 in 0..n {
        let k1 = grid::wavenumber(i1, n);
        for i2 in 0..n {
            let k2 = grid::wavenumber(i2, n);
            let idx = i1 * n + i2;
            let mut acc = Complex64::default();
            for (src, comp, axis) in terms {
                let k = match axis {
                    Axis::X1 => k1,
                    Axis::X2 => k2,
                };
                if k.abs() == half {
                    continue;
                }
                acc += Complex64::new(0.0, k as f64) * src[comp * nn + idx];
            }
            dst[idx] = acc;
        }
    }
}

/// The anti-divergence `R f = ∇g + (∇g)^T - (∇·g) Id` with `Δg = f - f̄`:
/// a symmetric trace-free tensor with `div(R f)` equal to the mean-zero part
/// of `f`. A non-mean-zero input has its mean subtracted first.
pub fn anti_divergence(field: &TorusField) -> Result<TorusField> {
    if field.components() != Components::Vector {
        return Err(Error::Shape("anti_divergence expects a vector field".into()));
    }
    let f = spectral(field);
    let n = f.n();
    let nn = n * n;
    let mut out =
        TorusField::from_modes(n, Components::Tensor, vec![Complex64::default(); 4 * nn])?;
    let src = f.modes();
    let half = (n / 2) as i64;
    {
        let dst = out.modes_mut();
        for i1 in 0..n {
            let k1w = grid::wavenumber(i1, n);
            for i2 in 0..n {
                let k2w = grid::wavenumber(i2, n);
                let idx = i1 * n + i2;
                let ksq = (k1w * k1w + k2w * k2w) as f64;
                if ksq == 0.0 || k1w.abs() == half || k2w.abs() == half {
                    continue;
                }
                let (k1, k2) = (k1w as f64, k2w as f64);
                let g1 = -src[idx] / ksq;
                let g2 = -src[nn + idx] / ksq;
                let i = Complex64::new(0.0, 1.0);
                let r11 = i * (k1 * g1 - k2 * g2);
                let r12 = i * (k1 * g2 + k2 * g1);
                dst[idx] = r11;
                dst[nn + idx] = r12;
                dst[2 * nn + idx] = r12;
                dst[3 * nn + idx] = -r11;
            }
        }
    }
    Ok(out)
}

/// `Δ⁻¹∇·v`: the scalar whose gradient is the non-solenoidal part of `v`.
pub fn pressure_part(field: &TorusField) -> Result<TorusField> {
    let div = divergence(field)?;
    let n = div.n();
    let mut out = div;
    let modes = out.modes_mut();
    for i1 in 0..n {
        for i2 in 0..n {
            let ksq = grid::k_sq(i1, i2, n);
            let idx = i1 * n + i2;
            modes[idx] = if ksq == 0.0 { Complex64::default() } else { -modes[idx] / ksq };
        }
    }
    Ok(out)
}

//! Intermittent 2-D stationary flows `W_ζ = η_ζ b_ζ`.
//!
//! Everything is synthesized directly in Fourier space: the pulse `η_ζ` is a
//! directed, rescaled Dirichlet kernel whose `(2r+1)²` lattice points map to
//! torus modes `λσ(k¹ζ + k²ζ^⊥)` with phases `e^{ik¹λσμt}`, and `b_ζ` is the
//! single mode `iζ^⊥ e^{iλζ·x}`. Sparse mode lists keep every identity exact
//! and make the frequency-support checks trivial; dense [`TorusField`]s are
//! produced on demand.

use crate::error::{Error, Result};
use crate::field::{Components, TorusField};
use crate::geometry::Direction;
use num_complex::Complex64;
use std::collections::HashMap;

pub use crate::geometry::direction_set;

/// Minimum ratio between successive scales in `1 ≪ r ≪ μ ≪ σ⁻¹ ≪ λ`.
pub const DEFAULT_GAP: f64 = 2.0;

/// One intermittent flow: direction, major frequency `λ`, spacing `σ`
/// (held as the integer `λσ`), kernel size `r`, temporal rate `μ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockSpec {
    pub dir: Direction,
    pub lambda: u64,
    pub lambda_sigma: u64,
    pub r: u32,
    pub mu: f64,
}

impl BlockSpec {
    pub fn new(dir: Direction, lambda: u64, lambda_sigma: u64, r: u32, mu: f64) -> Result<Self> {
        if lambda % 10 != 0 || lambda == 0 {
            return Err(Error::Parameter(format!("λ = {lambda} must be a positive multiple of 10")));
        }
        if lambda_sigma % 10 != 0 || lambda_sigma == 0 {
            return Err(Error::Parameter(format!(
                "λσ = {lambda_sigma} must be a positive multiple of 10"
            )));
        }
        if r == 0 {
            return Err(Error::Parameter("kernel size r must be ≥ 1".into()));
        }
        if !(mu > 0.0) {
            return Err(Error::Parameter("temporal rate μ must be positive".into()));
        }
        Ok(Self { dir, lambda, lambda_sigma, r, mu })
    }

    pub fn sigma(&self) -> f64 {
        self.lambda_sigma as f64 / self.lambda as f64
    }

    /// `1 ≪ r ≪ μ ≪ σ⁻¹ ≪ λ` with every ratio at least `gap`.
    pub fn check_ordering(&self, gap: f64) -> Result<()> {
        let r = self.r as f64;
        let sigma_inv = self.lambda as f64 / self.lambda_sigma as f64;
        let lambda = self.lambda as f64;
        let ratios = [
            ("r/1", r),
            ("μ/r", self.mu / r),
            ("σ⁻¹/μ", sigma_inv / self.mu),
            ("λσ", lambda / sigma_inv),
        ];
        for (name, ratio) in ratios {
            if ratio < gap {
                return Err(Error::Parameter(format!(
                    "scale ordering violated: {name} = {ratio} < gap {gap}"
                )));
            }
        }
        Ok(())
    }

    pub fn with_direction(&self, dir: Direction) -> Self {
        Self { dir, ..*self }
    }
}

/// Sparse scalar spectrum: `(k₁, k₂, coefficient)`.
pub type ScalarModes = Vec<(i64, i64, Complex64)>;
/// Sparse vector spectrum.
pub type VectorModes = Vec<(i64, i64, [Complex64; 2])>;
/// Sparse 2×2 tensor spectrum, row-major.
pub type TensorModes = Vec<(i64, i64, [Complex64; 4])>;

/// Pulse spectrum `η_ζ(t)`; antipodal directions share it verbatim.
pub fn pulse_modes(spec: &BlockSpec, t: f64) -> ScalarModes {
    let rep = spec.dir.plus_representative();
    let (a, b) = rep.five_zeta();
    let (pa, pb) = rep.five_perp();
    let unit = (spec.lambda_sigma / 5) as i64;
    let r = spec.r as i64;
    let amp = 1.0 / (2.0 * spec.r as f64 + 1.0);
    let omega = spec.lambda_sigma as f64 * spec.mu;
    let mut out = Vec::with_capacity(((2 * r + 1) * (2 * r + 1)) as usize);
    for k1 in -r..=r {
        let phase = Complex64::from_polar(amp, k1 as f64 * omega * t);
        for k2 in -r..=r {
            out.push((unit * (k1 * a + k2 * pa), unit * (k1 * b + k2 * pb), phase));
        }
    }
    out.sort_by_key(|&(k1, k2, _)| (k1, k2));
    out
}

/// Analytic `∂_t η_ζ(t)` spectrum.
pub fn pulse_modes_dt(spec: &BlockSpec, t: f64) -> ScalarModes {
    let rep = spec.dir.plus_representative();
    let (a, b) = rep.five_zeta();
    let (pa, pb) = rep.five_perp();
    let unit = (spec.lambda_sigma / 5) as i64;
    let r = spec.r as i64;
    let amp = 1.0 / (2.0 * spec.r as f64 + 1.0);
    let omega = spec.lambda_sigma as f64 * spec.mu;
    let mut out = Vec::with_capacity(((2 * r + 1) * (2 * r + 1)) as usize);
    for k1 in -r..=r {
        let phase = Complex64::from_polar(amp, k1 as f64 * omega * t)
            * Complex64::new(0.0, k1 as f64 * omega);
        for k2 in -r..=r {
            out.push((unit * (k1 * a + k2 * pa), unit * (k1 * b + k2 * pb), phase));
        }
    }
    out.sort_by_key(|&(k1, k2, _)| (k1, k2));
    out
}

/// Single-mode spectrum of `ψ_ζ = λ⁻¹ e^{iλζ·x}`.
pub fn psi_modes(dir: Direction, lambda: u64) -> Result<ScalarModes> {
    if lambda % 5 != 0 || lambda == 0 {
        return Err(Error::Parameter(format!("λ = {lambda} must be a positive multiple of 5")));
    }
    let (a, b) = dir.five_zeta();
    let unit = (lambda / 5) as i64;
    Ok(vec![(unit * a, unit * b, Complex64::new(1.0 / lambda as f64, 0.0))])
}

/// Single-mode spectrum of `b_ζ = iζ^⊥ e^{iλζ·x}`.
pub fn b_modes(dir: Direction, lambda: u64) -> Result<VectorModes> {
    if lambda % 5 != 0 || lambda == 0 {
        return Err(Error::Parameter(format!("λ = {lambda} must be a positive multiple of 5")));
    }
    let (a, b) = dir.five_zeta();
    let unit = (lambda / 5) as i64;
    let perp = dir.perp();
    Ok(vec![(
        unit * a,
        unit * b,
        [Complex64::new(0.0, perp[0]), Complex64::new(0.0, perp[1])],
    )])
}

/// Spectrum of `W_ζ(t) = η_ζ(t) b_ζ`.
pub fn flow_modes(spec: &BlockSpec, t: f64) -> VectorModes {
    let (a, b) = spec.dir.five_zeta();
    let unit = (spec.lambda / 5) as i64;
    let (s1, s2) = (unit * a, unit * b);
    let perp = spec.dir.perp();
    let dir_vec = [Complex64::new(0.0, perp[0]), Complex64::new(0.0, perp[1])];
    pulse_modes(spec, t)
        .into_iter()
        .map(|(k1, k2, c)| (k1 + s1, k2 + s2, [c * dir_vec[0], c * dir_vec[1]]))
        .collect()
}

/// Analytic `∂_t W_ζ(t)` spectrum.
pub fn flow_modes_dt(spec: &BlockSpec, t: f64) -> VectorModes {
    let (a, b) = spec.dir.five_zeta();
    let unit = (spec.lambda / 5) as i64;
    let (s1, s2) = (unit * a, unit * b);
    let perp = spec.dir.perp();
    let dir_vec = [Complex64::new(0.0, perp[0]), Complex64::new(0.0, perp[1])];
    pulse_modes_dt(spec, t)
        .into_iter()
        .map(|(k1, k2, c)| (k1 + s1, k2 + s2, [c * dir_vec[0], c * dir_vec[1]]))
        .collect()
}

/// Exact sparse convolution of two scalar spectra.
pub fn convolve_scalar(a: &ScalarModes, b: &ScalarModes) -> ScalarModes {
    let mut acc: HashMap<(i64, i64), Complex64> = HashMap::new();
    for &(a1, a2, ca) in a {
        for &(b1, b2, cb) in b {
            *acc.entry((a1 + b1, a2 + b2)).or_default() += ca * cb;
        }
    }
    let mut out: ScalarModes = acc.into_iter().map(|((k1, k2), c)| (k1, k2, c)).collect();
    out.sort_by_key(|&(k1, k2, _)| (k1, k2));
    out
}

/// Spectrum of `W ⊗̊ W' = W ⊗ W' - ½(W·W') Id`, exact.
pub fn flow_product_tf(a: &VectorModes, b: &VectorModes) -> TensorModes {
    let mut acc: HashMap<(i64, i64), [Complex64; 4]> = HashMap::new();
    for &(a1, a2, va) in a {
        for &(b1, b2, vb) in b {
            let e = acc.entry((a1 + b1, a2 + b2)).or_default();
            let half_dot = 0.5 * (va[0] * vb[0] + va[1] * vb[1]);
            e[0] += va[0] * vb[0] - half_dot;
            e[1] += va[0] * vb[1];
            e[2] += va[1] * vb[0];
            e[3] += va[1] * vb[1] - half_dot;
        }
    }
    let mut out: TensorModes = acc.into_iter().map(|((k1, k2), m)| (k1, k2, m)).collect();
    out.sort_by_key(|&(k1, k2, _)| (k1, k2));
    out
}

/// Spectra of `Re f` and `Im f` for a sparse complex scalar spectrum.
pub fn hermitian_parts_scalar(modes: &ScalarModes) -> (ScalarModes, ScalarModes) {
    let mut re: HashMap<(i64, i64), Complex64> = HashMap::new();
    let mut im: HashMap<(i64, i64), Complex64> = HashMap::new();
    for &(k1, k2, c) in modes {
        *re.entry((k1, k2)).or_default() += 0.5 * c;
        *re.entry((-k1, -k2)).or_default() += 0.5 * c.conj();
        *im.entry((k1, k2)).or_default() += Complex64::new(0.0, -0.5) * c;
        *im.entry((-k1, -k2)).or_default() += Complex64::new(0.0, 0.5) * c.conj();
    }
    let pack = |acc: HashMap<(i64, i64), Complex64>| {
        let mut out: ScalarModes = acc.into_iter().map(|((k1, k2), c)| (k1, k2, c)).collect();
        out.sort_by_key(|&(k1, k2, _)| (k1, k2));
        out
    };
    (pack(re), pack(im))
}

/// Spectra of `Re f` and `Im f` for a sparse complex vector spectrum.
pub fn hermitian_parts_vector(modes: &VectorModes) -> (VectorModes, VectorModes) {
    let mut re: HashMap<(i64, i64), [Complex64; 2]> = HashMap::new();
    let mut im: HashMap<(i64, i64), [Complex64; 2]> = HashMap::new();
    for &(k1, k2, v) in modes {
        for c in 0..2 {
            re.entry((k1, k2)).or_default()[c] += 0.5 * v[c];
            re.entry((-k1, -k2)).or_default()[c] += 0.5 * v[c].conj();
            im.entry((k1, k2)).or_default()[c] += Complex64::new(0.0, -0.5) * v[c];
            im.entry((-k1, -k2)).or_default()[c] += Complex64::new(0.0, 0.5) * v[c].conj();
        }
    }
    let pack = |acc: HashMap<(i64, i64), [Complex64; 2]>| {
        let mut out: VectorModes = acc.into_iter().map(|((k1, k2), v)| (k1, k2, v)).collect();
        out.sort_by_key(|&(k1, k2, _)| (k1, k2));
        out
    };
    (pack(re), pack(im))
}

/// Spectra of `Re f` and `Im f` for a sparse complex tensor spectrum.
pub fn hermitian_parts_tensor(modes: &TensorModes) -> (TensorModes, TensorModes) {
    let mut re: HashMap<(i64, i64), [Complex64; 4]> = HashMap::new();
    let mut im: HashMap<(i64, i64), [Complex64; 4]> = HashMap::new();
    for &(k1, k2, m) in modes {
        for c in 0..4 {
            re.entry((k1, k2)).or_default()[c] += 0.5 * m[c];
            re.entry((-k1, -k2)).or_default()[c] += 0.5 * m[c].conj();
            im.entry((k1, k2)).or_default()[c] += Complex64::new(0.0, -0.5) * m[c];
            im.entry((-k1, -k2)).or_default()[c] += Complex64::new(0.0, 0.5) * m[c].conj();
        }
    }
    let pack = |acc: HashMap<(i64, i64), [Complex64; 4]>| {
        let mut out: TensorModes = acc.into_iter().map(|((k1, k2), m)| (k1, k2, m)).collect();
        out.sort_by_key(|&(k1, k2, _)| (k1, k2));
        out
    };
    (pack(re), pack(im))
}

/// `(min |K|, max |K|)` over nonzero-frequency entries with coefficient
/// magnitude above `floor`; `None` if no such entry.
pub fn support_range<T>(
    modes: &[(i64, i64, T)],
    coeff_norm: impl Fn(&T) -> f64,
    floor: f64,
) -> Option<(f64, f64)> {
    let mut range: Option<(f64, f64)> = None;
    for (k1, k2, c) in modes {
        if (*k1, *k2) == (0, 0) || coeff_norm(c) <= floor {
            continue;
        }
        let kn = (((k1 * k1 + k2 * k2) as f64)).sqrt();
        range = Some(match range {
            None => (kn, kn),
            Some((lo, hi)) => (lo.min(kn), hi.max(kn)),
        });
    }
    range
}

/// Zero-frequency coefficient of a sparse spectrum.
pub fn zero_mode<T: Copy + Default>(modes: &[(i64, i64, T)]) -> T {
    modes
        .iter()
        .find(|&&(k1, k2, _)| (k1, k2) == (0, 0))
        .map(|&(_, _, c)| c)
        .unwrap_or_default()
}

fn grid_for_band(band: i64, n: usize) -> Result<()> {
    if band > (n as i64) / 2 {
        return Err(Error::Shape(format!(
            "grid {n} too coarse for spectrum with |k|∞ up to {band}"
        )));
    }
    Ok(())
}

fn band_of<T>(modes: &[(i64, i64, T)]) -> i64 {
    modes.iter().map(|&(k1, k2, _)| k1.abs().max(k2.abs())).max().unwrap_or(0)
}

/// Densify a sparse scalar spectrum.
pub fn synthesize_scalar(modes: &ScalarModes, n: usize) -> Result<TorusField> {
    grid_for_band(band_of(modes), n)?;
    let mut f = TorusField::zeros(n, Components::Scalar)?;
    f.drop_samples();
    for &(k1, k2, c) in modes {
        f.add_mode(0, k1, k2, c);
    }
    Ok(f)
}

/// Densify a sparse vector spectrum.
pub fn synthesize_vector(modes: &VectorModes, n: usize) -> Result<TorusField> {
    grid_for_band(band_of(modes), n)?;
    let mut f = TorusField::zeros(n, Components::Vector)?;
    f.drop_samples();
    for &(k1, k2, v) in modes {
        f.add_mode(0, k1, k2, v[0]);
        f.add_mode(1, k1, k2, v[1]);
    }
    Ok(f)
}

/// Densify a sparse tensor spectrum.
pub fn synthesize_tensor(modes: &TensorModes, n: usize) -> Result<TorusField> {
    grid_for_band(band_of(modes), n)?;
    let mut f = TorusField::zeros(n, Components::Tensor)?;
    f.drop_samples();
    for &(k1, k2, m) in modes {
        for (c, &v) in m.iter().enumerate() {
            f.add_mode(c, k1, k2, v);
        }
    }
    Ok(f)
}

/// The 2-D Dirichlet kernel `D_r = (2r+1)⁻¹ Σ_{k∈[-r,r]²} e^{ik·x}`.
pub fn dirichlet_kernel(r: u32, n: usize) -> Result<TorusField> {
    if r == 0 {
        return Err(Error::Parameter("Dirichlet kernel needs r ≥ 1".into()));
    }
    let amp = Complex64::new(1.0 / (2.0 * r as f64 + 1.0), 0.0);
    let r = r as i64;
    let mut modes = Vec::new();
    for k1 in -r..=r {
        for k2 in -r..=r {
            modes.push((k1, k2, amp));
        }
    }
    synthesize_scalar(&modes, n)
}

/// Dense `(b_ζ, ψ_ζ)` at frequency `λ ∈ 5N` (complex single-mode fields).
pub fn stationary_flow(dir: Direction, lambda: u64, n: usize) -> Result<(TorusField, TorusField)> {
    let b = b_modes(dir, lambda)?;
    let psi = psi_modes(dir, lambda)?;
    Ok((synthesize_vector(&b, n)?, synthesize_scalar(&psi, n)?))
}

/// Dense pulse `η_ζ(t)` (real field).
pub fn pulse(spec: &BlockSpec, t: f64, n: usize) -> Result<TorusField> {
    synthesize_scalar(&pulse_modes(spec, t), n)
}

/// Dense intermittent flow `W_ζ(t)` (complex field).
pub fn intermittent_flow(spec: &BlockSpec, t: f64, n: usize) -> Result<TorusField> {
    synthesize_vector(&flow_modes(spec, t), n)
}

/// Mean flux `fint W_ζ ⊗̊ W_{-ζ} dx` from the exact spectra.
pub fn mean_flux(spec: &BlockSpec, t: f64) -> [f64; 4] {
    let w = flow_modes(spec, t);
    let w_anti = flow_modes(&spec.with_direction(spec.dir.antipode()), t);
    let prod = flow_product_tf(&w, &w_anti);
    let z = zero_mode(&prod);
    [z[0].re, z[1].re, z[2].re, z[3].re]
}

/// Split a complex-mode field into real and imaginary real fields.
pub fn complex_field_parts(f: &TorusField) -> Result<(TorusField, TorusField)> {
    let src = f.transform(crate::field::Direction::Forward);
    let n = src.n();
    let half = (n / 2) as i64;
    let mut re = TorusField::zeros(n, src.components())?;
    let mut im = TorusField::zeros(n, src.components())?;
    re.drop_samples();
    im.drop_samples();
    for c in 0..src.ncomp() {
        for k1 in -half..half {
            for k2 in -half..half {
                let v = src.mode(c, k1, k2);
                let vm = src.mode(c, -k1, -k2);
                if v.norm_sqr() == 0.0 && vm.norm_sqr() == 0.0 {
                    continue;
                }
                re.add_mode(c, k1, k2, 0.5 * (v + vm.conj()));
                im.add_mode(c, k1, k2, Complex64::new(0.0, -0.5) * (v - vm.conj()));
            }
        }
    }
    Ok((re, im))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::direction_set;
    use crate::ops;
    use crate::sweep::loglog_slope;
    use crate::tol;

    fn demo_spec() -> BlockSpec {
        BlockSpec::new(direction_set()[0], 100, 10, 2, 5.0).unwrap()
    }

    #[test]
    fn spec_validation() {
        let d = direction_set()[0];
        assert!(BlockSpec::new(d, 100, 10, 2, 5.0).is_ok());
        assert!(BlockSpec::new(d, 105, 10, 2, 5.0).is_err());
        assert!(BlockSpec::new(d, 100, 5, 2, 5.0).is_err());
        assert!(BlockSpec::new(d, 100, 10, 0, 5.0).is_err());
        demo_spec().check_ordering(DEFAULT_GAP).unwrap();
        assert!(demo_spec().check_ordering(3.0).is_err());
    }

    #[test]
    fn stationary_flow_single_mode() {
        let d = direction_set()[0];
        let (b, psi) = stationary_flow(d, 5, 32).unwrap();
        assert!((b.mode(0, 3, 4) - Complex64::new(0.0, -4.0 / 5.0)).norm() < 1e-15);
        assert!((b.mode(1, 3, 4) - Complex64::new(0.0, 3.0 / 5.0)).norm() < 1e-15);
        assert!((psi.mode(0, 3, 4) - Complex64::new(0.2, 0.0)).norm() < 1e-15);

        let curl_psi = ops::perp_gradient(&psi).unwrap();
        assert!(curl_psi.sub(&b).unwrap().norm_l2() < tol::EXACT);
        let lap = psi.differentiate((2, 0)).add(&psi.differentiate((0, 2))).unwrap();
        assert!(lap.add(&psi.scale(25.0)).unwrap().norm_l2() < tol::EXACT);
        assert!(ops::divergence(&b).unwrap().norm_l2() < tol::EXACT);

        let (b_anti, _) = stationary_flow(d.antipode(), 5, 32).unwrap();
        let conj_err = (b.mode(0, 3, 4).conj() - b_anti.mode(0, -3, -4)).norm()
            + (b.mode(1, 3, 4).conj() - b_anti.mode(1, -3, -4)).norm();
        assert!(conj_err < 1e-15);

        assert!((psi.norm_sup() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn dirichlet_kernel_values() {
        assert!(dirichlet_kernel(0, 16).is_err());
        let d1 = dirichlet_kernel(1, 64).unwrap().transform(crate::field::Direction::Inverse);
        let center = d1.samples()[(32 * 64) + 32];
        assert!((center - 3.0).abs() < 1e-12);
        for r in [1u32, 2, 5] {
            let d = dirichlet_kernel(r, 64).unwrap();
            assert!((d.norm_l2() - 2.0 * std::f64::consts::PI).abs() < tol::EXACT);
        }
        let rs = [2.0, 4.0, 8.0];
        let l4s: Vec<f64> = [2u32, 4, 8]
            .iter()
            .map(|&r| dirichlet_kernel(r, 128).unwrap().norm_lp(4.0))
            .collect();
        let slope = loglog_slope(&rs, &l4s).unwrap();
        assert!((slope - 0.5).abs() < 0.1, "L⁴ growth slope {slope}");
    }

    #[test]
    fn pulse_mean_square_is_one() {
        let spec = demo_spec();
        for t in [0.0, 0.37] {
            let sum_sq: f64 = pulse_modes(&spec, t).iter().map(|(_, _, c)| c.norm_sqr()).sum();
            assert!((sum_sq - 1.0).abs() < 1e-14);
            let eta = pulse(&spec, t, 256).unwrap();
            let eta_sq =
                crate::field::product(&eta, &eta, Components::Scalar, |a, b, o| o[0] = a[0] * b[0])
                    .unwrap();
            assert!((eta_sq.mean(0) - 1.0).abs() < tol::BLOCKS);
        }
    }

    #[test]
    fn pulse_shared_by_antipodes() {
        let spec = demo_spec();
        let anti = spec.with_direction(spec.dir.antipode());
        assert_eq!(pulse_modes(&spec, 0.21), pulse_modes(&anti, 0.21));
    }

    #[test]
    fn pulse_min_nonzero_frequency_is_lambda_sigma() {
        let spec = demo_spec();
        let eta = pulse_modes(&spec, 0.0);
        let (lo, _) = support_range(&eta, |c| c.norm(), 0.0).unwrap();
        assert!((lo - spec.lambda_sigma as f64).abs() < 1e-12);
        let eta_sq = convolve_scalar(&eta, &eta);
        let (lo2, _) = support_range(&eta_sq, |c| c.norm(), 1e-15).unwrap();
        assert!(lo2 >= spec.lambda_sigma as f64 - 1e-12);
    }

    #[test]
    fn transport_identity() {
        let spec = demo_spec();
        let t = 0.13;
        let eta_dt = synthesize_scalar(&pulse_modes_dt(&spec, t), 256).unwrap();
        let eta = pulse(&spec, t, 256).unwrap();
        let zeta = spec.dir.zeta();
        let advect = eta
            .differentiate((1, 0))
            .scale(zeta[0])
            .add(&eta.differentiate((0, 1)).scale(zeta[1]))
            .unwrap();
        let resid = eta_dt.scale(1.0 / spec.mu).sub(&advect).unwrap();
        assert!(resid.norm_l2() <= tol::BLOCKS * advect.norm_l2().max(1.0));

        let anti = spec.with_direction(spec.dir.antipode());
        let eta_dt_m = synthesize_scalar(&pulse_modes_dt(&anti, t), 256).unwrap();
        let zm = anti.dir.zeta();
        let advect_m = eta
            .differentiate((1, 0))
            .scale(zm[0])
            .add(&eta.differentiate((0, 1)).scale(zm[1]))
            .unwrap();
        let resid_m = eta_dt_m.scale(1.0 / anti.mu).add(&advect_m).unwrap();
        assert!(resid_m.norm_l2() <= tol::BLOCKS * advect_m.norm_l2().max(1.0));
    }

    #[test]
    fn flow_support_identities_hold_at_scale() {
        let d = direction_set();
        for &lambda in &[700u64, 1000, 1400] {
            let spec = BlockSpec::new(d[0], lambda, 10, 2, 5.0).unwrap();
            let w = flow_modes(&spec, 0.4);
            let (lo, hi) = support_range(&w, |v| (v[0].norm_sqr() + v[1].norm_sqr()).sqrt(), 0.0)
                .unwrap();
            let lam = lambda as f64;
            assert!(lo >= lam / 2.0 && hi <= 2.0 * lam, "support [{lo}, {hi}] at λ={lam}");

            for other in [d[1], d[2], d[3], d[4].antipode()] {
                if other == d[0].antipode() {
                    continue;
                }
                let spec2 = spec.with_direction(other);
                let prod = flow_product_tf(&flow_modes(&spec, 0.4), &flow_modes(&spec2, 0.4));
                let norm =
                    |m: &[Complex64; 4]| m.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                let z = zero_mode(&prod);
                assert!(norm(&z) < 1e-15, "non-antipodal product grew a mean at λ={lam}");
                let (lo2, hi2) = support_range(&prod, norm, 1e-14).unwrap();
                assert!(
                    lo2 >= lam / 5.0 && hi2 <= 4.0 * lam,
                    "pair support [{lo2}, {hi2}] at λ={lam}"
                );
                assert!(lo2 >= spec.lambda_sigma as f64 / 2.0);
            }
        }
    }

    #[test]
    fn mean_flux_is_minus_zeta_outer() {
        for dir in direction_set() {
            let spec = BlockSpec::new(dir, 100, 10, 2, 5.0).unwrap();
            let flux = mean_flux(&spec, 0.7);
            let z = dir.zeta();
            let expect = [
                -(z[0] * z[0] - 0.5),
                -(z[0] * z[1]),
                -(z[0] * z[1]),
                -(z[1] * z[1] - 0.5),
            ];
            for (a, b) in flux.iter().zip(expect.iter()) {
                assert!((a - b).abs() < 1e-12, "flux {flux:?} vs {expect:?}");
            }
        }
    }

    #[test]
    fn flow_c0_bound_and_real_combination() {
        let spec = demo_spec();
        let w = intermittent_flow(&spec, 0.0, 512).unwrap();
        let (re, im) = complex_field_parts(&w).unwrap();
        let mut mag = crate::field::product(
            &re,
            &re,
            Components::Scalar,
            |a, b, o| o[0] = a[0] * b[0] + a[1] * b[1],
        )
        .unwrap();
        let im_sq = crate::field::product(
            &im,
            &im,
            Components::Scalar,
            |a, b, o| o[0] = a[0] * b[0] + a[1] * b[1],
        )
        .unwrap();
        mag = mag.add(&im_sq).unwrap();
        let sup_sq = {
            let mut m = mag.clone();
            m.ensure_samples();
            m.samples().iter().fold(0.0f64, |acc, &v| acc.max(v))
        };
        let r = spec.r as f64;
        assert!(sup_sq.sqrt() <= 1.05 * (2.0 * r + 1.0), "‖W‖_∞ bound");

        let l2 = (w.modes().iter().map(|c| c.norm_sqr()).sum::<f64>()
            * (2.0 * std::f64::consts::PI).powi(2))
        .sqrt();
        assert!((l2 - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    }
}

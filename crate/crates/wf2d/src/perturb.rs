//! Velocity increment `w = w^(p) + w^(c) + w^(t)` built from amplitude
//! fields and intermittent flows.
//!
//! All sums over the eight directions are folded onto the four plus
//! representatives: amplitudes and pulses are shared by antipodes, so each
//! pair contributes twice the real part of its plus term. Products stay
//! exact because every factor is band-limited well inside the grid.

use crate::amplitude::AmplitudeSet;
use crate::blocks::{self, BlockSpec};
use crate::error::{Error, Result};
use crate::field::{self, Components, TorusField};
use crate::geometry::direction_set;
use crate::ops::{self, BandSpec};

/// Dense per-direction block data for one plus direction at one time,
/// shared between the perturbation and the stress assembly.
#[derive(Debug, Clone)]
pub struct BlockKit {
    pub spec: BlockSpec,
    /// Pulse `η_ζ` (real, shared with the antipode).
    pub eta: TorusField,
    /// Analytic `∂_t η_ζ`.
    pub eta_dt: TorusField,
    /// `Re W_ζ` and `Im W_ζ`.
    pub w_re: TorusField,
    pub w_im: TorusField,
    /// `Re ∂_t W_ζ` and `Im ∂_t W_ζ`.
    pub w_dt_re: TorusField,
    pub w_dt_im: TorusField,
    /// `Re ψ_ζ` and `Im ψ_ζ` (time independent).
    pub psi_re: TorusField,
    pub psi_im: TorusField,
    /// Sparse spectra of `η_ζ` and `W_ζ`, kept for exact pair products.
    pub pulse_spectrum: blocks::ScalarModes,
    pub flow_spectrum: blocks::VectorModes,
}

fn densify_scalar(modes: &blocks::ScalarModes, n: usize) -> Result<TorusField> {
    let mut f = blocks::synthesize_scalar(modes, n)?;
    f.ensure_samples();
    Ok(f)
}

fn densify_vector(modes: &blocks::VectorModes, n: usize) -> Result<TorusField> {
    let mut f = blocks::synthesize_vector(modes, n)?;
    f.ensure_samples();
    Ok(f)
}

/// Synthesize every dense field the direction `spec.dir` contributes at
/// time `t` on an `n × n` grid. Samples are materialized once here so the
/// many downstream products never re-transform.
pub fn block_kit(spec: &BlockSpec, t: f64, n: usize) -> Result<BlockKit> {
    let pulse_spectrum = blocks::pulse_modes(spec, t);
    let flow_spectrum = blocks::flow_modes(spec, t);
    let (w_re_m, w_im_m) = blocks::hermitian_parts_vector(&flow_spectrum);
    let (w_dt_re_m, w_dt_im_m) = blocks::hermitian_parts_vector(&blocks::flow_modes_dt(spec, t));
    let (psi_re_m, psi_im_m) =
        blocks::hermitian_parts_scalar(&blocks::psi_modes(spec.dir, spec.lambda)?);
    Ok(BlockKit {
        spec: *spec,
        eta: densify_scalar(&pulse_spectrum, n)?,
        eta_dt: densify_scalar(&blocks::pulse_modes_dt(spec, t), n)?,
        w_re: densify_vector(&w_re_m, n)?,
        w_im: densify_vector(&w_im_m, n)?,
        w_dt_re: densify_vector(&w_dt_re_m, n)?,
        w_dt_im: densify_vector(&w_dt_im_m, n)?,
        psi_re: densify_scalar(&psi_re_m, n)?,
        psi_im: densify_scalar(&psi_im_m, n)?,
        pulse_spectrum,
        flow_spectrum,
    })
}

/// Kits for the four plus directions in canonical order, sharing the
/// scales of `base`.
pub fn plus_kits(base: &BlockSpec, t: f64, n: usize) -> Result<[BlockKit; 4]> {
    let dirs = direction_set();
    Ok([
        block_kit(&base.with_direction(dirs[0]), t, n)?,
        block_kit(&base.with_direction(dirs[1]), t, n)?,
        block_kit(&base.with_direction(dirs[2]), t, n)?,
        block_kit(&base.with_direction(dirs[3]), t, n)?,
    ])
}

/// The three perturbation parts and their sum.
#[derive(Debug, Clone)]
pub struct Perturbation {
    pub principal: TorusField,
    pub corrector: TorusField,
    pub transport: TorusField,
    pub total: TorusField,
}

pub(crate) fn check_kits(amps: &AmplitudeSet, kits: &[BlockKit; 4]) -> Result<usize> {
    let n = kits[0].eta.n();
    let first = &kits[0].spec;
    for (i, kit) in kits.iter().enumerate() {
        if kit.spec.dir.plus_index() != i || kit.spec.dir != kit.spec.dir.plus_representative() {
            return Err(Error::Parameter(
                "block kits must cover the plus directions in canonical order".into(),
            ));
        }
        let s = &kit.spec;
        if (s.lambda, s.lambda_sigma, s.r, s.mu)
            != (first.lambda, first.lambda_sigma, first.r, first.mu)
        {
            return Err(Error::Parameter("block kits must share one scale family".into()));
        }
        if kit.eta.n() != n {
            return Err(Error::Shape("block kits on mismatched grids".into()));
        }
    }
    for a in &amps.fields {
        if a.components() != Components::Scalar {
            return Err(Error::Shape("amplitude fields must be scalar".into()));
        }
        if a.n() > n {
            return Err(Error::Shape(format!(
                "amplitude grid {} finer than block grid {n}",
                a.n()
            )));
        }
    }
    Ok(n)
}

pub(crate) fn promoted_amplitudes(amps: &AmplitudeSet, n: usize) -> Result<Vec<TorusField>> {
    amps.fields
        .iter()
        .map(|a| {
            let mut p = a.promote(n)?;
            p.ensure_samples();
            Ok(p)
        })
        .collect()
}

pub(crate) fn scalar_vector(s: &TorusField, v: &TorusField) -> Result<TorusField> {
    field::pointwise(s, v, Components::Vector, |a, b, o| {
        o[0] = a[0] * b[0];
        o[1] = a[0] * b[1];
    })
}

pub(crate) fn scalar_scalar(a: &TorusField, b: &TorusField) -> Result<TorusField> {
    field::pointwise(a, b, Components::Scalar, |x, y, o| o[0] = x[0] * y[0])
}

pub(crate) fn scalar_times_const_vec(s: &TorusField, v: [f64; 2]) -> Result<TorusField> {
    field::pointwise(s, s, Components::Vector, |x, _, o| {
        o[0] = v[0] * x[0];
        o[1] = v[1] * x[0];
    })
}

/// Stream potential `F = Σ_ζ ā_ζ η_ζ ψ_ζ` (real by conjugate pairing), so
/// that `w^(p) + w^(c) = ∇^⊥F`.
pub fn stream_potential(amps: &AmplitudeSet, kits: &[BlockKit; 4]) -> Result<TorusField> {
    let n = check_kits(amps, kits)?;
    let a = promoted_amplitudes(amps, n)?;
    let mut acc = TorusField::zeros(n, Components::Scalar)?;
    for (ad, kit) in a.iter().zip(kits.iter()) {
        let a_eta = scalar_scalar(ad, &kit.eta)?;
        acc = acc.add(&scalar_scalar(&a_eta, &kit.psi_re)?)?;
    }
    Ok(acc.scale(2.0 * amps.bar_scale()))
}

/// Per-direction transport scalars `G_ζ = a_ζ² P_{≠0}(η_ζ²)`. The flux below
/// is `2 Σ_ζ G_ζ ζ`; the ladder stores these paths so one time stencil can
/// feed both the transport rate and the compensating oscillation terms.
pub fn transport_scalars(amps: &AmplitudeSet, kits: &[BlockKit; 4]) -> Result<[TorusField; 4]> {
    let n = check_kits(amps, kits)?;
    let a = promoted_amplitudes(amps, n)?;
    let mut out = Vec::with_capacity(4);
    for (ad, kit) in a.iter().zip(kits.iter()) {
        let a_sq = scalar_scalar(ad, ad)?;
        let eta_sq = scalar_scalar(&kit.eta, &kit.eta)?;
        let eta_sq_osc = ops::band_project(&eta_sq, BandSpec::NonZero)?;
        out.push(scalar_scalar(&a_sq, &eta_sq_osc)?);
    }
    Ok(out.try_into().expect("four directions"))
}

/// Unprojected transport flux `2 Σ_ζ a_ζ² P_{≠0}(η_ζ²) ζ`, before the outer
/// `P P_{≠0}`; the stress assembly reuses it for the pressure split.
pub fn transport_flux(amps: &AmplitudeSet, kits: &[BlockKit; 4]) -> Result<TorusField> {
    let n = check_kits(amps, kits)?;
    let g = transport_scalars(amps, kits)?;
    let mut acc = TorusField::zeros(n, Components::Vector)?;
    for (gd, kit) in g.iter().zip(kits.iter()) {
        acc = acc.add(&scalar_times_const_vec(gd, kit.spec.dir.zeta())?)?;
    }
    Ok(acc.scale(2.0))
}

/// Assemble `w^(p)`, `w^(c)`, `w^(t)` and their sum from one amplitude set
/// and the four plus-direction kits. In the multiplicative regime the
/// stationary and corrector parts carry the `Υ_l^{-1/2}` prefactor; the
/// transport part never does.
pub fn perturbation(amps: &AmplitudeSet, kits: &[BlockKit; 4]) -> Result<Perturbation> {
    let n = check_kits(amps, kits)?;
    let a = promoted_amplitudes(amps, n)?;
    let bar = amps.bar_scale();
    let mu = kits[0].spec.mu;

    let mut principal = TorusField::zeros(n, Components::Vector)?;
    let mut corrector = TorusField::zeros(n, Components::Vector)?;
    for (ad, kit) in a.iter().zip(kits.iter()) {
        principal = principal.add(&scalar_vector(ad, &kit.w_re)?)?;
        let a_eta = scalar_scalar(ad, &kit.eta)?;
        let grad = ops::perp_gradient(&a_eta)?;
        corrector = corrector.add(&scalar_vector(&kit.psi_re, &grad)?)?;
    }
    let principal = principal.scale(2.0 * bar);
    let corrector = corrector.scale(2.0 * bar);

    let flux = transport_flux(amps, kits)?;
    let transport =
        ops::leray_project(&ops::band_project(&flux, BandSpec::NonZero)?)?.scale(1.0 / mu);

    let total = principal.add(&corrector)?.add(&transport)?;
    Ok(Perturbation { principal, corrector, transport, total })
}

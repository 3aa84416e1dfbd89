//! Reynolds stress and pressure assembly for one ladder level.
//!
//! The oscillation part manipulates the high-frequency pair products as
//! sparse spectra: every ordered direction pair is folded with its negated
//! twin onto one representative whose first entry is a plus direction, so
//! each class costs a single real synthesis. The transport flux enters
//! through externally supplied per-direction rates; the compensating term
//! is defined as the supplied rate minus the analytic pulse rate, which
//! makes the closure identity below hold exactly for any linear stencil,
//! and reduce to the classical term as the step vanishes.
//!
//! Low-frequency removal inside the split acts only on the antipodal pair
//! means, where it cancels the geometric image exactly. Mixed pairs are
//! kept whole: at production scale separation their spectra sit entirely
//! above the nominal cutoffs, so this is the same operator, while at the
//! small demonstration scales the nearly-antipodal pairs reach below the
//! cutoffs and truncating them would break the closure identity.
//!
//! All builders return `(stress, pressure)` pairs satisfying
//! `div(stress) + ∇pressure =` the untraced equation terms they replace,
//! exactly at the discrete level.

use crate::amplitude::AmplitudeSet;
use crate::blocks;
use crate::error::Result;
use crate::field::{self, Components, TorusField};
use crate::ops::{self, BandSpec, LaplacianSign};
use crate::perturb::{
    check_kits, promoted_amplitudes, scalar_scalar, scalar_times_const_vec, scalar_vector,
    BlockKit, Perturbation,
};
use num_complex::Complex64;

/// Oscillation stress, its pressure, and the pieces needed to check
/// `div R_osc + ∇π_osc = div(w^(p) ⊗ w^(p) + R̊) + D_t w^(t)`.
#[derive(Debug, Clone)]
pub struct Oscillation {
    pub r_osc: TorusField,
    pub pi_osc: TorusField,
    /// Mean-zero vector with `div R_osc` equal to it.
    pub div_content: TorusField,
    /// `D_t w^(t)` induced by the supplied flux rates.
    pub transport_rate: TorusField,
    /// Principal part `Σ_ζ a_ζ W_ζ` over all eight directions, without any
    /// `Υ_l^{-1/2}` weight; the quadratic term is built from this in both
    /// regimes.
    pub principal_plain: TorusField,
}

fn tensor_dot_vector(t: &TorusField, v: &TorusField) -> Result<TorusField> {
    field::pointwise(t, v, Components::Vector, |a, b, o| {
        o[0] = a[0] * b[0] + a[1] * b[1];
        o[1] = a[2] * b[0] + a[3] * b[1];
    })
}

/// Unpadded `a ⊗ b`: exact whenever the factor bands sum below half the
/// grid, which the ladder guarantees for every product it forms. The padded
/// [`field::outer`] would give the same modes at four times the cost.
pub(crate) fn outer_raw(a: &TorusField, b: &TorusField) -> Result<TorusField> {
    field::pointwise(a, b, Components::Tensor, |x, y, o| {
        o[0] = x[0] * y[0];
        o[1] = x[0] * y[1];
        o[2] = x[1] * y[0];
        o[3] = x[1] * y[1];
    })
}

/// Unpadded `a ⊗̊ b`; same band caveat as [`outer_raw`].
pub(crate) fn outer_tf_raw(a: &TorusField, b: &TorusField) -> Result<TorusField> {
    field::pointwise(a, b, Components::Tensor, |x, y, o| {
        let half_dot = 0.5 * (x[0] * y[0] + x[1] * y[1]);
        o[0] = x[0] * y[0] - half_dot;
        o[1] = x[0] * y[1];
        o[2] = x[1] * y[0];
        o[3] = x[1] * y[1] - half_dot;
    })
}

/// Unpadded `a · b`; same band caveat as [`outer_raw`].
pub(crate) fn dot_raw(a: &TorusField, b: &TorusField) -> Result<TorusField> {
    field::pointwise(a, b, Components::Scalar, |x, y, o| {
        o[0] = x[0] * y[0] + x[1] * y[1];
    })
}

fn const_matrix_vector(v: &TorusField, m: [[f64; 2]; 2]) -> Result<TorusField> {
    field::pointwise(v, v, Components::Vector, move |x, _, o| {
        o[0] = m[0][0] * x[0] + m[0][1] * x[1];
        o[1] = m[1][0] * x[0] + m[1][1] * x[1];
    })
}

/// Spectrum of `W_{-ζ} = conj(W_ζ)`.
fn antipode_flow(modes: &blocks::VectorModes) -> blocks::VectorModes {
    let mut out: blocks::VectorModes =
        modes.iter().map(|&(k1, k2, v)| (-k1, -k2, [v[0].conj(), v[1].conj()])).collect();
    out.sort_by_key(|&(k1, k2, _)| (k1, k2));
    out
}

fn densify_scalar(modes: &blocks::ScalarModes, n: usize) -> Result<TorusField> {
    let mut f = blocks::synthesize_scalar(modes, n)?;
    f.ensure_samples();
    Ok(f)
}

/// Flux rates for amplitudes frozen in time: `D_t G_ζ = a_ζ² P_{≠0}(∂_t η_ζ²)`.
pub fn static_flux_rate(amps: &AmplitudeSet, kits: &[BlockKit; 4]) -> Result<[TorusField; 4]> {
    let n = check_kits(amps, kits)?;
    let a = promoted_amplitudes(amps, n)?;
    let mut out = Vec::with_capacity(4);
    for (ad, kit) in a.iter().zip(kits.iter()) {
        let a_sq = scalar_scalar(ad, ad)?;
        let eta_sq_dt = scalar_scalar(&kit.eta, &kit.eta_dt)?.scale(2.0);
        let osc = ops::band_project(&eta_sq_dt, BandSpec::NonZero)?;
        out.push(scalar_scalar(&a_sq, &osc)?);
    }
    Ok(out.try_into().expect("four directions"))
}

/// `Σ_ζ a_ζ² ζ ⊗̊ ζ` over all eight directions: the stress the quadrature
/// reproduces. It matches the input stress of the amplitude solve up to the
/// coarse-grid sampling of the amplitudes; the sampling residual is carried
/// as its own stress piece by the ladder.
pub fn geometric_image(amps: &AmplitudeSet, kits: &[BlockKit; 4]) -> Result<TorusField> {
    let n = check_kits(amps, kits)?;
    let a = promoted_amplitudes(amps, n)?;
    let mut acc = TorusField::zeros(n, Components::Tensor)?;
    for (ad, kit) in a.iter().zip(kits.iter()) {
        let z = kit.spec.dir.zeta();
        let (t11, t12) = (z[0] * z[0] - 0.5, z[0] * z[1]);
        let sq = scalar_scalar(ad, ad)?;
        acc = acc.add(&field::pointwise(&sq, &sq, Components::Tensor, move |x, _, o| {
            o[0] = 2.0 * t11 * x[0];
            o[1] = 2.0 * t12 * x[0];
            o[2] = 2.0 * t12 * x[0];
            o[3] = -2.0 * t11 * x[0];
        })?)?;
    }
    Ok(acc)
}

/// Assemble the oscillation stress and pressure from plain amplitudes (no
/// `Υ_l^{-1/2}` weight is ever applied here: in the multiplicative regime
/// the prefactor of the quadratic term cancels it exactly).
///
/// `flux_rate[d]` is `D_t G_d` for `G_d = a_d² P_{≠0}(η_d²)`; pass a stencil
/// of the stored transport scalars, or [`static_flux_rate`] when the
/// amplitudes are frozen. The returned pieces satisfy
/// `div R_osc + ∇π_osc = div(w ⊗ w + image) + transport_rate`
/// with `w` the plain principal part and `image` from [`geometric_image`],
/// exactly for any linear rate.
pub fn oscillation(
    amps: &AmplitudeSet,
    kits: &[BlockKit; 4],
    flux_rate: &[TorusField; 4],
) -> Result<Oscillation> {
    let n = check_kits(amps, kits)?;
    let a = promoted_amplitudes(amps, n)?;
    let spec0 = &kits[0].spec;
    let mu = spec0.mu;
    let lambda5 = (spec0.lambda / 5) as i64;

    let mut a_sq = Vec::with_capacity(4);
    let mut grad_a_sq = Vec::with_capacity(4);
    let mut eta_sq_osc = Vec::with_capacity(4);
    let mut eta_sq_dt = Vec::with_capacity(4);
    let mut rates = Vec::with_capacity(4);
    for d in 0..4 {
        let sq = scalar_scalar(&a[d], &a[d])?;
        let mut g = ops::gradient(&sq)?;
        g.ensure_samples();
        let e2 = scalar_scalar(&kits[d].eta, &kits[d].eta)?;
        let mut osc = ops::band_project(&e2, BandSpec::NonZero)?;
        osc.ensure_samples();
        let dt2 = scalar_scalar(&kits[d].eta, &kits[d].eta_dt)?.scale(2.0);
        let mut fr = flux_rate[d].promote(n)?;
        fr.ensure_samples();
        a_sq.push(sq);
        grad_a_sq.push(g);
        eta_sq_osc.push(osc);
        eta_sq_dt.push(dt2);
        rates.push(fr);
    }

    // Amplitude pair products and their gradients, shared by antipodes.
    let mut table: Vec<Vec<Option<(TorusField, TorusField)>>> = vec![vec![None, None, None, None]; 4];
    for i in 0..4 {
        for j in i..4 {
            let p = scalar_scalar(&a[i], &a[j])?;
            let mut g = ops::gradient(&p)?;
            g.ensure_samples();
            table[i][j] = Some((p, g));
        }
    }

    let mut e1 = TorusField::zeros(n, Components::Vector)?;
    let mut e2k = TorusField::zeros(n, Components::Vector)?;
    let mut a2 = TorusField::zeros(n, Components::Vector)?;
    let mut a3 = TorusField::zeros(n, Components::Vector)?;
    let mut pi_a1 = TorusField::zeros(n, Components::Scalar)?;
    let mut pi22 = TorusField::zeros(n, Components::Scalar)?;
    let mut rate_vec = TorusField::zeros(n, Components::Vector)?;

    // Antipodal pairs and the per-direction terms they regroup into.
    for d in 0..4 {
        let dir = kits[d].spec.dir;
        let zeta = dir.zeta();
        let perp = dir.perp();
        let tf = [
            [perp[0] * perp[0] - 0.5, perp[0] * perp[1]],
            [perp[1] * perp[0], perp[1] * perp[1] - 0.5],
        ];
        let tg = const_matrix_vector(&grad_a_sq[d], tf)?;
        e1 = e1.add(&scalar_vector(&eta_sq_osc[d], &tg)?.scale(2.0))?;
        a2 = a2.add(&scalar_vector(&eta_sq_osc[d], &grad_a_sq[d])?.scale(-1.0))?;
        let analytic = scalar_scalar(&a_sq[d], &eta_sq_dt[d])?;
        let excess = rates[d].sub(&analytic)?;
        a3 = a3.add(&scalar_times_const_vec(&excess, zeta)?.scale(2.0 / mu))?;
        pi_a1 = pi_a1.add(&scalar_scalar(&a_sq[d], &eta_sq_osc[d])?)?;
        rate_vec = rate_vec.add(&scalar_times_const_vec(&rates[d], zeta)?)?;
    }
    rate_vec = rate_vec.scale(2.0);
    let transport_rate = ops::leray_project(&ops::band_project(&rate_vec, BandSpec::NonZero)?)?
        .scale(1.0 / mu);
    let pi_a4 = ops::pressure_part(&rate_vec)?.scale(-1.0 / mu);

    // Non-antipodal class representatives (i, j, s): the pair (ζ_i, s·ζ_j)
    // with i ≤ j, doubled when i < j to cover the swapped ordering.
    for i in 0..4 {
        for j in i..4 {
            for s in [1i64, -1] {
                if i == j && s == -1 {
                    continue;
                }
                let weight = if i == j { 1.0 } else { 2.0 };
                let (aa, grad_aa) = table[i][j].as_ref().expect("pair table filled");
                let di = kits[i].spec.dir;
                let dj = kits[j].spec.dir;
                let fi = di.five_zeta();
                let fj = dj.five_zeta();
                let shift = (lambda5 * (fi.0 + s * fj.0), lambda5 * (fi.1 + s * fj.1));
                let pi_ = di.perp();
                let pj_ = dj.perp();
                let pj = [s as f64 * pj_[0], s as f64 * pj_[1]];
                let dotp = pi_[0] * pj[0] + pi_[1] * pj[1];
                // (b ⊗̊ b' + b' ⊗̊ b) = G e^{iλ(ζ+ζ')·x} with constant G.
                let g = [
                    [-2.0 * pi_[0] * pj[0] + dotp - 1.0, -(pi_[0] * pj[1] + pj[0] * pi_[1])],
                    [-(pi_[1] * pj[0] + pj[1] * pi_[0]), -2.0 * pi_[1] * pj[1] + dotp - 1.0],
                ];

                let h = blocks::convolve_scalar(&kits[i].pulse_spectrum, &kits[j].pulse_spectrum);
                let mut vec_m: blocks::VectorModes = Vec::with_capacity(h.len());
                let mut s23: blocks::ScalarModes = Vec::with_capacity(h.len());
                for &(k1, k2, c) in &h {
                    let kk = (k1 + shift.0, k2 + shift.1);
                    let dk =
                        [Complex64::new(0.0, k1 as f64) * c, Complex64::new(0.0, k2 as f64) * c];
                    vec_m.push((
                        kk.0,
                        kk.1,
                        [g[0][0] * dk[0] + g[0][1] * dk[1], g[1][0] * dk[0] + g[1][1] * dk[1]],
                    ));
                    s23.push((kk.0, kk.1, c));
                }
                // `(G - Id)` merges the transported-gradient term with the
                // negated phase-carried gradient term in one synthesis.
                let (v_re, _) = blocks::hermitian_parts_vector(&vec_m);
                let mut v_dense = blocks::synthesize_vector(&v_re, n)?;
                v_dense.ensure_samples();
                e2k = e2k.add(&scalar_vector(aa, &v_dense)?.scale(weight))?;

                let (s23_re, _) = blocks::hermitian_parts_scalar(&s23);
                let s23_d = densify_scalar(&s23_re, n)?;
                e2k = e2k.add(&scalar_vector(&s23_d, grad_aa)?.scale(-weight))?;
                pi22 = pi22.add(&scalar_scalar(aa, &s23_d)?.scale(weight))?;

                let flow_j = if s > 0 {
                    kits[j].flow_spectrum.clone()
                } else {
                    antipode_flow(&kits[j].flow_spectrum)
                };
                let mut t = blocks::flow_product_tf(&kits[i].flow_spectrum, &flow_j);
                t.extend(blocks::flow_product_tf(&flow_j, &kits[i].flow_spectrum));
                let (t_re, _) = blocks::hermitian_parts_tensor(&t);
                let mut s_dense = blocks::synthesize_tensor(&t_re, n)?;
                s_dense.ensure_samples();
                e1 = e1.add(&tensor_dot_vector(&s_dense, grad_aa)?.scale(weight))?;
            }
        }
    }

    let mut principal_plain = TorusField::zeros(n, Components::Vector)?;
    for d in 0..4 {
        principal_plain = principal_plain.add(&scalar_vector(&a[d], &kits[d].w_re)?)?;
    }
    let principal_plain = principal_plain.scale(2.0);

    let content = e1.add(&e2k)?.add(&a2)?.add(&a3)?;
    let div_content = ops::band_project(&content, BandSpec::NonZero)?;
    let r_osc = ops::anti_divergence(&div_content)?;
    let half_speed = field::dot(&principal_plain, &principal_plain)?.scale(0.5);
    let pi_osc = half_speed
        .add(&ops::band_project(&pi22, BandSpec::NonZero)?)?
        .add(&pi_a1)?
        .add(&pi_a4)?;

    Ok(Oscillation { r_osc, pi_osc, div_content, transport_rate, principal_plain })
}

/// `div R_osc + ∇π_osc - div(w ⊗ w + image) - D_t w^(t)`: zero up to
/// rounding when the oscillation assembly is consistent.
pub fn oscillation_residual(
    osc: &Oscillation,
    amps: &AmplitudeSet,
    kits: &[BlockKit; 4],
) -> Result<TorusField> {
    let lhs = ops::divergence_tensor(&osc.r_osc)?.add(&ops::gradient(&osc.pi_osc)?)?;
    let quad = field::outer(&osc.principal_plain, &osc.principal_plain)?;
    let stressed = quad.add(&geometric_image(amps, kits)?)?;
    let rhs = ops::divergence_tensor(&stressed)?.add(&osc.transport_rate)?;
    lhs.sub(&rhs)
}

/// `R(damping·w + (−Δ)^m w + rate) + coupling (carrier ⊗̊ w + w ⊗̊ carrier)`
/// with pressure `coupling (carrier · w)`. Additive level: damping 0,
/// coupling 1, carrier `v_l + z_l`; multiplicative level: damping ½,
/// coupling `Υ_l`, carrier `v_l`. `rate` is `D_t(w^(p) + w^(c))`.
pub fn linear_stress(
    w: &TorusField,
    rate: &TorusField,
    carrier: &TorusField,
    m: f64,
    damping: f64,
    coupling: f64,
) -> Result<(TorusField, TorusField)> {
    let mut body = ops::fractional_laplacian(w, m, LaplacianSign::Forward)?;
    if damping != 0.0 {
        body = body.add(&w.scale(damping))?;
    }
    body = body.add(rate)?;
    let sym = outer_tf_raw(carrier, w)?.add(&outer_tf_raw(w, carrier)?)?;
    let stress = ops::anti_divergence(&body)?.add(&sym.scale(coupling))?;
    let pressure = dot_raw(carrier, w)?.scale(coupling);
    Ok((stress, pressure))
}

/// `coupling ((w^(c)+w^(t)) ⊗̊ w + w^(p) ⊗̊ (w^(c)+w^(t)))` with pressure
/// `coupling/2 ((w^(c)+w^(t))·w + w^(p)·(w^(c)+w^(t)))`.
pub fn corrector_stress(pert: &Perturbation, coupling: f64) -> Result<(TorusField, TorusField)> {
    let ct = pert.corrector.add(&pert.transport)?;
    let stress = outer_tf_raw(&ct, &pert.total)?
        .add(&outer_tf_raw(&pert.principal, &ct)?)?
        .scale(coupling);
    let pressure = dot_raw(&ct, &pert.total)?
        .add(&dot_raw(&pert.principal, &ct)?)?
        .scale(0.5 * coupling);
    Ok((stress, pressure))
}

/// Additive commutator between the full noise and its mollification:
/// `v ⊗̊ (z-z_l) + (z-z_l) ⊗̊ v + (z-z_l) ⊗̊ z + z_l ⊗̊ (z-z_l)` with
/// pressure `v·(z-z_l) + ½|z|² - ½|z_l|²`.
pub fn commutator2_additive(
    v_next: &TorusField,
    z: &TorusField,
    z_l: &TorusField,
) -> Result<(TorusField, TorusField)> {
    let dz = z.sub(z_l)?;
    let stress = outer_tf_raw(v_next, &dz)?
        .add(&outer_tf_raw(&dz, v_next)?)?
        .add(&outer_tf_raw(&dz, z)?)?
        .add(&outer_tf_raw(z_l, &dz)?)?;
    let pressure = dot_raw(v_next, &dz)?
        .add(&dot_raw(z, z)?.sub(&dot_raw(z_l, z_l)?)?.scale(0.5))?;
    Ok((stress, pressure))
}

/// Multiplicative commutator `(Υ - Υ_l)(v ⊗̊ v)` with pressure
/// `(Υ - Υ_l)/2 |v|²`.
pub fn commutator2_multiplicative(
    v_next: &TorusField,
    delta_upsilon: f64,
) -> Result<(TorusField, TorusField)> {
    let stress = outer_tf_raw(v_next, v_next)?.scale(delta_upsilon);
    let pressure = dot_raw(v_next, v_next)?.scale(0.5 * delta_upsilon);
    Ok((stress, pressure))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::BlockSpec;
    use crate::geometry::direction_set;
    use crate::perturb::{perturbation, plus_kits, transport_scalars};
    use crate::tol;

    fn base_spec() -> BlockSpec {
        BlockSpec::new(direction_set()[0], 100, 10, 2, 5.0).unwrap()
    }

    fn small_spec() -> BlockSpec {
        BlockSpec::new(direction_set()[0], 40, 10, 1, 2.0).unwrap()
    }

    fn wave_field(n: usize, f: impl Fn(f64, f64) -> f64) -> TorusField {
        let xs: Vec<f64> = (0..n)
            .map(|i| -std::f64::consts::PI + 2.0 * std::f64::consts::PI * i as f64 / n as f64)
            .collect();
        let mut samples = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                samples[i * n + j] = f(xs[i], xs[j]);
            }
        }
        TorusField::from_samples(n, Components::Scalar, samples).unwrap()
    }

    fn vector_field(n: usize, f: impl Fn(f64, f64) -> [f64; 2]) -> TorusField {
        let xs: Vec<f64> = (0..n)
            .map(|i| -std::f64::consts::PI + 2.0 * std::f64::consts::PI * i as f64 / n as f64)
            .collect();
        let mut samples = vec![0.0; 2 * n * n];
        for i in 0..n {
            for j in 0..n {
                let v = f(xs[i], xs[j]);
                samples[i * n + j] = v[0];
                samples[n * n + i * n + j] = v[1];
            }
        }
        TorusField::from_samples(n, Components::Vector, samples).unwrap()
    }

    fn test_amplitudes(n_amp: usize) -> AmplitudeSet {
        let fields = [
            wave_field(n_amp, |x, y| 1.0 + 0.3 * x.cos() + 0.2 * (x + y).sin()),
            wave_field(n_amp, |x, y| 0.8 + 0.25 * y.sin() - 0.1 * (x - y).cos()),
            wave_field(n_amp, |x, y| 1.2 - 0.2 * x.sin() + 0.15 * (2.0 * y).cos()),
            wave_field(n_amp, |x, y| 0.9 + 0.1 * (x + 2.0 * y).cos()),
        ];
        AmplitudeSet { fields, upsilon_l: None, max_ratio: 0.0, rho_min: 0.0 }
    }

    fn shifted_amplitudes(n_amp: usize) -> AmplitudeSet {
        let fields = [
            wave_field(n_amp, |x, y| 1.1 - 0.2 * x.sin() + 0.15 * (x + y).cos()),
            wave_field(n_amp, |x, y| 0.7 + 0.3 * (2.0 * y).cos() + 0.1 * x.cos()),
            wave_field(n_amp, |x, y| 1.3 + 0.1 * (x - y).sin()),
            wave_field(n_amp, |x, y| 0.85 - 0.15 * y.cos() + 0.05 * (2.0 * x).sin()),
        ];
        AmplitudeSet { fields, upsilon_l: None, max_ratio: 0.0, rho_min: 0.0 }
    }

    fn constant_amplitudes(values: [f64; 4], n_amp: usize) -> AmplitudeSet {
        let fields = [
            wave_field(n_amp, |_, _| values[0]),
            wave_field(n_amp, |_, _| values[1]),
            wave_field(n_amp, |_, _| values[2]),
            wave_field(n_amp, |_, _| values[3]),
        ];
        AmplitudeSet { fields, upsilon_l: None, max_ratio: 0.0, rho_min: 0.0 }
    }

    fn residual_scale(osc: &Oscillation) -> f64 {
        let quad = field::outer(&osc.principal_plain, &osc.principal_plain).unwrap();
        1.0 + ops::divergence_tensor(&quad).unwrap().norm_sup()
    }

    #[test]
    fn pair_identity_all_pairs() {
        let dirs = direction_set();
        let mut all = dirs.to_vec();
        all.extend(dirs.iter().map(|d| d.antipode()));
        for zi in &all {
            for zj in &all {
                let (z, zp) = (zi.zeta(), zi.perp());
                let (w, wp) = (zj.zeta(), zj.perp());
                let sum = [z[0] + w[0], z[1] + w[1]];
                let m = [
                    [2.0 * zp[0] * wp[0], zp[0] * wp[1] + wp[0] * zp[1]],
                    [zp[1] * wp[0] + wp[1] * zp[0], 2.0 * zp[1] * wp[1]],
                ];
                let lhs = [m[0][0] * sum[0] + m[0][1] * sum[1], m[1][0] * sum[0] + m[1][1] * sum[1]];
                let dot = zp[0] * wp[0] + zp[1] * wp[1];
                for c in 0..2 {
                    assert!(
                        (lhs[c] - (dot - 1.0) * sum[c]).abs() <= tol::PAIR_IDENTITY,
                        "pair identity fails for {:?}, {:?}",
                        zi,
                        zj
                    );
                }
            }
        }
        // Frozen example: ζ = (3,4)/5, ζ' = (4,3)/5 gives (24/25 - 1)·(7/5, 7/5).
        let (zp, wp) = (dirs[0].perp(), dirs[2].perp());
        let sum = [7.0 / 5.0, 7.0 / 5.0];
        let lhs0 = 2.0 * zp[0] * wp[0] * sum[0] + (zp[0] * wp[1] + wp[0] * zp[1]) * sum[1];
        assert!((lhs0 - (24.0 / 25.0 - 1.0) * 7.0 / 5.0).abs() <= tol::PAIR_IDENTITY);
    }

    #[test]
    fn quadrature_mean_matches_stress() {
        let t = 0.41;
        let n = 256;
        let values = [0.7, 1.1, 0.4, 0.9];
        let kits = plus_kits(&base_spec(), t, n).unwrap();
        let amps = constant_amplitudes(values, 16);
        let image = geometric_image(&amps, &kits).unwrap();
        for (d, v) in values.iter().enumerate() {
            let flux = blocks::mean_flux(&kits[d].spec, t);
            let z = kits[d].spec.dir.zeta();
            let expect = [
                z[0] * z[0] - 0.5,
                z[0] * z[1],
                z[1] * z[0],
                z[1] * z[1] - 0.5,
            ];
            for c in 0..4 {
                assert!(
                    (flux[c] + expect[c]).abs() <= 1e-8,
                    "pair mean deviates from -ζ⊗̊ζ in component {c}"
                );
            }
            let _ = v;
        }
        // Σ over ordered antipodal pairs of a_ζ a_{-ζ} ∫ W_ζ ⊗̊ W_{-ζ}
        // reproduces the negated stress image.
        for c in 0..4 {
            let mut total = 0.0;
            for (d, v) in values.iter().enumerate() {
                total += 2.0 * v * v * blocks::mean_flux(&kits[d].spec, t)[c];
            }
            assert!(
                (total + image.mean(c)).abs() <= 1e-8,
                "quadrature mean misses stress in component {c}"
            );
        }
    }

    #[test]
    fn oscillation_closes_for_frozen_amplitudes() {
        let n = 512;
        let kits = plus_kits(&base_spec(), 0.3, n).unwrap();
        let amps = test_amplitudes(16);
        let rates = static_flux_rate(&amps, &kits).unwrap();
        let osc = oscillation(&amps, &kits, &rates).unwrap();
        let res = oscillation_residual(&osc, &amps, &kits).unwrap();
        let scale = residual_scale(&osc);
        let sup = res.norm_sup();
        assert!(sup <= tol::BOOKKEEPING * scale, "residual {sup} vs scale {scale}");

        let mut skew = field::pointwise(&osc.r_osc, &osc.r_osc, Components::Scalar, |a, _, o| {
            o[0] = a[1] - a[2]
        })
        .unwrap();
        let mut trace = field::pointwise(&osc.r_osc, &osc.r_osc, Components::Scalar, |a, _, o| {
            o[0] = a[0] + a[3]
        })
        .unwrap();
        skew.ensure_samples();
        trace.ensure_samples();
        let size = 1.0 + osc.r_osc.norm_sup();
        assert!(skew.norm_sup() <= tol::EXACT * size);
        assert!(trace.norm_sup() <= tol::EXACT * size);
    }

    #[test]
    fn oscillation_closes_for_discrete_rates() {
        let n = 512;
        let (t0, dt) = (0.24, 0.05);
        let kits0 = plus_kits(&base_spec(), t0, n).unwrap();
        let kits1 = plus_kits(&base_spec(), t0 + dt, n).unwrap();
        let amps0 = test_amplitudes(16);
        let amps1 = shifted_amplitudes(16);
        let g0 = transport_scalars(&amps0, &kits0).unwrap();
        let g1 = transport_scalars(&amps1, &kits1).unwrap();
        let mut rates = Vec::with_capacity(4);
        for d in 0..4 {
            rates.push(g1[d].sub(&g0[d]).unwrap().scale(1.0 / dt));
        }
        let rates: [TorusField; 4] = rates.try_into().expect("four directions");
        let osc = oscillation(&amps0, &kits0, &rates).unwrap();
        let res = oscillation_residual(&osc, &amps0, &kits0).unwrap();
        let scale = residual_scale(&osc);
        let sup = res.norm_sup();
        assert!(sup <= tol::BOOKKEEPING * scale, "residual {sup} vs scale {scale}");
    }

    #[test]
    fn linear_stress_matches_equation_terms() {
        let n = 256;
        let kits = plus_kits(&small_spec(), 0.4, n).unwrap();
        let amps = test_amplitudes(16);
        let pert = perturbation(&amps, &kits).unwrap();
        let w = &pert.total;
        let rate =
            ops::perp_gradient(&wave_field(n, |x, y| x.sin() + 0.5 * (2.0 * y).cos())).unwrap();
        let carrier = vector_field(n, |x, y| {
            [0.4 * y.cos() + 0.2 * (x + y).sin(), 0.3 * x.sin() - 0.1 * (x - y).cos()]
        });
        for (damping, coupling) in [(0.0, 1.0), (0.5, 2.5)] {
            let (r, p) = linear_stress(w, &rate, &carrier, 0.7, damping, coupling).unwrap();
            let lhs = ops::divergence_tensor(&r)
                .unwrap()
                .add(&ops::gradient(&p).unwrap())
                .unwrap();
            let quad = field::outer(&carrier, w)
                .unwrap()
                .add(&field::outer(w, &carrier).unwrap())
                .unwrap();
            let rhs = ops::fractional_laplacian(w, 0.7, LaplacianSign::Forward)
                .unwrap()
                .add(&w.scale(damping))
                .unwrap()
                .add(&rate)
                .unwrap()
                .add(&ops::divergence_tensor(&quad).unwrap().scale(coupling))
                .unwrap();
            let diff = lhs.sub(&rhs).unwrap().norm_sup();
            let scale = 1.0 + rhs.norm_sup();
            assert!(diff <= 1e-10 * scale, "linear piece off by {diff} at damping {damping}");
        }
    }

    #[test]
    fn corrector_and_commutator_traces() {
        let n = 256;
        let kits = plus_kits(&small_spec(), 0.15, n).unwrap();
        let amps = test_amplitudes(16);
        let pert = perturbation(&amps, &kits).unwrap();

        let coupling = 1.3;
        let (r, p) = corrector_stress(&pert, coupling).unwrap();
        let ct = pert.corrector.add(&pert.transport).unwrap();
        let quad = field::outer(&ct, &pert.total)
            .unwrap()
            .add(&field::outer(&pert.principal, &ct).unwrap())
            .unwrap();
        let lhs = ops::divergence_tensor(&r).unwrap().add(&ops::gradient(&p).unwrap()).unwrap();
        let rhs = ops::divergence_tensor(&quad).unwrap().scale(coupling);
        let scale = 1.0 + rhs.norm_sup();
        assert!(lhs.sub(&rhs).unwrap().norm_sup() <= 1e-10 * scale);

        let v = vector_field(n, |x, y| [0.5 * (x + y).cos(), 0.2 * y.sin() - 0.3 * x.cos()]);
        let z = vector_field(n, |x, y| [0.3 * y.sin(), 0.4 * (x - y).sin()]);
        let z_l = vector_field(n, |x, y| [0.25 * y.sin() + 0.05 * x.cos(), 0.35 * (x - y).sin()]);
        let (r2, p2) = commutator2_additive(&v, &z, &z_l).unwrap();
        let direct = field::outer(&v, &z)
            .unwrap()
            .sub(&field::outer(&v, &z_l).unwrap())
            .unwrap()
            .add(&field::outer(&z, &v).unwrap())
            .unwrap()
            .sub(&field::outer(&z_l, &v).unwrap())
            .unwrap()
            .add(&field::outer(&z, &z).unwrap())
            .unwrap()
            .sub(&field::outer(&z_l, &z_l).unwrap())
            .unwrap();
        let lhs2 = ops::divergence_tensor(&r2).unwrap().add(&ops::gradient(&p2).unwrap()).unwrap();
        let rhs2 = ops::divergence_tensor(&direct).unwrap();
        let scale2 = 1.0 + rhs2.norm_sup();
        assert!(lhs2.sub(&rhs2).unwrap().norm_sup() <= 1e-10 * scale2);

        let (r3, p3) = commutator2_multiplicative(&v, 0.37).unwrap();
        let lhs3 = ops::divergence_tensor(&r3).unwrap().add(&ops::gradient(&p3).unwrap()).unwrap();
        let rhs3 =
            ops::divergence_tensor(&field::outer(&v, &v).unwrap()).unwrap().scale(0.37);
        let scale3 = 1.0 + rhs3.norm_sup();
        assert!(lhs3.sub(&rhs3).unwrap().norm_sup() <= 1e-10 * scale3);
    }
}

//! Amplitude fields multiplying the intermittent flows.
//!
//! Given a mollified stress `R̊_l`, the envelope `ρ = 4c·chi(|R̊_l|/c)`
//! guarantees `|R̊_l/ρ| ≤ 1/2` pointwise, and `a_ζ = ρ^{1/2}·γ_ζ(R̊_l/ρ)` for
//! the four plus directions (the antipode reuses the same field). Amplitudes
//! are sampled on their own coarse grid, so every downstream product has a
//! known, small frequency budget; promotion to the main grid is exact.

use crate::error::{Error, Result};
use crate::field::{Components, TorusField};
use crate::geometry::{self, TraceFreeSym2};
use crate::noise::Regime;
use crate::params::ParamSet;

/// Amplitude sampling resolution: caps the amplitude spectrum at `|k|∞ ≤ 64`.
pub const DEFAULT_AMPLITUDE_GRID: usize = 128;

/// The four plus-direction amplitude fields at one time slice.
#[derive(Clone, Debug)]
pub struct AmplitudeSet {
    /// `a_ζ` for ζ in canonical plus order; `a_{-ζ} = a_ζ`.
    pub fields: [TorusField; 4],
    /// Scalar mollified exponential factor (multiplicative regime only).
    pub upsilon_l: Option<f64>,
    /// Largest pointwise `|R̊_l|/ρ` encountered (≤ 1/2 by construction).
    pub max_ratio: f64,
    /// Smallest pointwise envelope value.
    pub rho_min: f64,
}

impl AmplitudeSet {
    /// Prefactor applied to the stationary and corrector perturbation parts
    /// in the multiplicative regime; 1 otherwise.
    pub fn bar_scale(&self) -> f64 {
        self.upsilon_l.map_or(1.0, |u| 1.0 / u.sqrt())
    }
}

/// Exact resample of a band-limited field onto an `n × n` grid.
fn resample(f: &TorusField, n: usize) -> Result<TorusField> {
    if n == f.n() {
        Ok(f.clone())
    } else if n > f.n() {
        f.promote(n)
    } else {
        f.truncate(n)
    }
}

fn tensor_entries(t: &[f64; 4], scale: f64) -> Result<TraceFreeSym2> {
    let mag = (t[0] * t[0] + t[1] * t[1] + t[2] * t[2] + t[3] * t[3]).sqrt();
    let floor = 1e-10 * (1.0 + mag) * scale.max(1.0);
    if (t[1] - t[2]).abs() > floor || (t[0] + t[3]).abs() > floor {
        return Err(Error::Shape(format!(
            "stress sample not trace-free symmetric: [{} {}; {} {}]",
            t[0], t[1], t[2], t[3]
        )));
    }
    Ok(TraceFreeSym2 { r1: t[0], r2: t[1] })
}

/// Pointwise envelope `ρ = 4c·chi(|R̊_l|/c)` with `c = c_R δ_{q+1} M₀(t)`.
pub fn rho_field(r_l: &TorusField, c: f64) -> Result<TorusField> {
    if r_l.components() != Components::Tensor {
        return Err(Error::Shape("envelope needs a tensor stress".into()));
    }
    if !(c > 0.0) {
        return Err(Error::Parameter(format!("envelope scale c = {c} must be positive")));
    }
    let src = r_l.transform(crate::field::Direction::Inverse);
    let n = src.n();
    let s = src.samples();
    let nn = n * n;
    let mut rho = vec![0.0; nn];
    for i in 0..nn {
        let t = [s[i], s[nn + i], s[2 * nn + i], s[3 * nn + i]];
        let frob = (t[0] * t[0] + t[1] * t[1] + t[2] * t[2] + t[3] * t[3]).sqrt();
        rho[i] = 4.0 * c * crate::chi::chi(frob / c);
    }
    TorusField::from_samples(n, Components::Scalar, rho)
}

/// Build the four amplitude fields from a mollified stress slice.
///
/// The multiplicative regime passes the scalar `Υ_l(t)`; it only rescales the
/// stationary and corrector parts downstream, so the stored fields are the
/// same `a_ζ` in both regimes.
pub fn amplitudes(
    r_l: &TorusField,
    params: &ParamSet,
    q: u32,
    t: f64,
    regime: Regime,
    upsilon_l: Option<f64>,
    n_amp: usize,
) -> Result<AmplitudeSet> {
    if r_l.components() != Components::Tensor {
        return Err(Error::Shape("amplitudes need a tensor stress".into()));
    }
    if regime == Regime::Multiplicative && upsilon_l.is_none() {
        return Err(Error::Parameter("multiplicative amplitudes need Υ_l(t)".into()));
    }
    if let Some(u) = upsilon_l {
        if !(u > 0.0) {
            return Err(Error::Parameter(format!("Υ_l = {u} must be positive")));
        }
    }
    let coarse = resample(r_l, n_amp)?.transform(crate::field::Direction::Inverse);
    let n = coarse.n();
    let nn = n * n;
    let s = coarse.samples();
    let c = params.c_r * params.delta(q + 1) * params.m0(regime, t);

    let dirs = geometry::direction_set();
    let mut out = [
        vec![0.0; nn],
        vec![0.0; nn],
        vec![0.0; nn],
        vec![0.0; nn],
    ];
    let mut max_ratio = 0.0f64;
    let mut rho_min = f64::INFINITY;
    for i in 0..nn {
        let entries = [s[i], s[nn + i], s[2 * nn + i], s[3 * nn + i]];
        let r = tensor_entries(&entries, c)?;
        let frob = r.frobenius();
        let rho = 4.0 * c * crate::chi::chi(frob / c);
        let ratio = TraceFreeSym2 { r1: r.r1 / rho, r2: r.r2 / rho };
        let ratio_mag = ratio.frobenius();
        if ratio_mag > 0.5 + 1e-12 {
            return Err(Error::AmplitudeDomain { max_ratio: ratio_mag });
        }
        max_ratio = max_ratio.max(ratio_mag);
        rho_min = rho_min.min(rho);
        let sqrt_rho = rho.sqrt();
        for (d, dir) in dirs[..4].iter().enumerate() {
            out[d][i] = sqrt_rho * geometry::gamma(ratio, *dir, geometry::GAMMA_C)?;
        }
    }
    let fields = [
        TorusField::from_samples(n, Components::Scalar, std::mem::take(&mut out[0]))?,
        TorusField::from_samples(n, Components::Scalar, std::mem::take(&mut out[1]))?,
        TorusField::from_samples(n, Components::Scalar, std::mem::take(&mut out[2]))?,
        TorusField::from_samples(n, Components::Scalar, std::mem::take(&mut out[3]))?,
    ];
    Ok(AmplitudeSet { fields, upsilon_l, max_ratio, rho_min })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{derive_parameters, Mode, DEFAULT_C_R};
    use num_complex::Complex64;

    fn params_with(c_r: f64) -> ParamSet {
        derive_parameters(0.5, 4.0, 10, 2, 0.01, None, c_r, Mode::Demo, Regime::Additive)
            .unwrap()
    }

    fn small_stress(n: usize, scale: f64) -> TorusField {
        let mut f = TorusField::zeros(n, Components::Tensor).unwrap();
        f.drop_samples();
        let c = Complex64::new(0.5 * scale, 0.0);
        for (comp, k, coeff) in [
            (0usize, (1i64, 0i64), c),
            (3, (1, 0), -c),
            (1, (0, 1), c * 0.6),
            (2, (0, 1), c * 0.6),
        ] {
            f.add_mode(comp, k.0, k.1, coeff);
            f.add_mode(comp, -k.0, -k.1, coeff.conj());
        }
        f
    }

    #[test]
    fn zero_stress_gives_constant_amplitudes() {
        let ps = params_with(DEFAULT_C_R);
        let r = TorusField::zeros(32, Components::Tensor).unwrap();
        let set = amplitudes(&r, &ps, 0, 0.3, Regime::Additive, None, 64).unwrap();
        let c = ps.c_r * ps.delta(1) * ps.m0(Regime::Additive, 0.3);
        let expect = 2.0 * c.sqrt();
        for f in &set.fields {
            let sup_dev = f
                .samples_of(0)
                .iter()
                .map(|v| (v - expect).abs())
                .fold(0.0f64, f64::max);
            assert!(sup_dev < 1e-12 * expect);
        }
        assert_eq!(set.max_ratio, 0.0);
        assert!((set.rho_min - 4.0 * c).abs() < 1e-12 * c);
    }

    #[test]
    fn large_stress_ratio_is_quarter() {
        let ps = params_with(DEFAULT_C_R);
        let c = ps.c_r * ps.delta(1) * ps.m0(Regime::Additive, 0.0);
        let r = small_stress(64, 50.0 * c);
        let set = amplitudes(&r, &ps, 0, 0.0, Regime::Additive, None, 128).unwrap();
        assert!(set.max_ratio <= 0.25 + 1e-12);
        assert!(set.max_ratio > 0.2);
    }

    #[test]
    fn ratio_never_exceeds_half_across_scales() {
        let ps = params_with(DEFAULT_C_R);
        let c = ps.c_r * ps.delta(1) * ps.m0(Regime::Additive, 0.0);
        for scale in [1e-3, 0.3, 1.0, 1.4, 2.0, 3.0, 10.0] {
            let r = small_stress(64, scale * c);
            let set = amplitudes(&r, &ps, 0, 0.0, Regime::Additive, None, 128).unwrap();
            assert!(set.max_ratio <= 0.5 + 1e-12, "scale {scale}: {}", set.max_ratio);
        }
    }

    #[test]
    fn geometric_image_reconstructs_the_stress() {
        let ps = params_with(DEFAULT_C_R);
        let c = ps.c_r * ps.delta(1) * ps.m0(Regime::Additive, 0.0);
        let r = small_stress(64, 0.8 * c);
        let set = amplitudes(&r, &ps, 0, 0.0, Regime::Additive, None, 64).unwrap();
        let dirs = geometry::direction_set();
        let n = set.fields[0].n();
        let nn = n * n;
        let coarse = resample(&r, n).unwrap().transform(crate::field::Direction::Inverse);
        let s = coarse.samples();
        for i in (0..nn).step_by(97) {
            let mut acc = TraceFreeSym2 { r1: 0.0, r2: 0.0 };
            for (d, dir) in dirs[..4].iter().enumerate() {
                let a = set.fields[d].samples_of(0)[i];
                acc = acc.add(dir.outer_tf().scale(2.0 * a * a));
            }
            assert!((acc.r1 - s[i]).abs() < 1e-9 * c, "at {i}");
            assert!((acc.r2 - s[nn + i]).abs() < 1e-9 * c, "at {i}");
        }
    }

    #[test]
    fn mean_square_bound_at_reference_smallness() {
        let (m_const, _) = geometry::amplitude_constants(720);
        let c_r = m_const.powi(-4);
        let ps = params_with(c_r);
        let m0 = ps.m0(Regime::Additive, 0.0);
        let delta = ps.delta(1);
        let cap = c_r.powf(0.25) * (m0 * delta).sqrt() / (2.0 * 8.0);
        let c = c_r * delta * m0;
        for scale in [0.0, 0.4, 1.0] {
            let r = small_stress(64, scale * c);
            let set = amplitudes(&r, &ps, 0, 0.0, Regime::Additive, None, 64).unwrap();
            for f in &set.fields {
                assert!(f.norm_l2() <= cap, "scale {scale}: {} > {cap}", f.norm_l2());
            }
        }
    }

    #[test]
    fn multiplicative_scale_factor() {
        let ps = params_with(DEFAULT_C_R);
        let r = TorusField::zeros(32, Components::Tensor).unwrap();
        assert!(matches!(
            amplitudes(&r, &ps, 0, 0.0, Regime::Multiplicative, None, 64),
            Err(Error::Parameter(_))
        ));
        let set = amplitudes(&r, &ps, 0, 0.0, Regime::Multiplicative, Some(4.0), 64).unwrap();
        assert!((set.bar_scale() - 0.5).abs() < 1e-15);
        let add = amplitudes(&r, &ps, 0, 0.0, Regime::Additive, None, 64).unwrap();
        assert_eq!(add.bar_scale(), 1.0);
        let c_mult = ps.c_r * ps.delta(1) * ps.m0(Regime::Multiplicative, 0.0);
        let expect = 2.0 * c_mult.sqrt();
        assert!((set.fields[0].samples_of(0)[0] - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn rejects_non_symmetric_input() {
        let ps = params_with(DEFAULT_C_R);
        let mut f = TorusField::zeros(16, Components::Tensor).unwrap();
        f.drop_samples();
        f.add_mode(1, 1, 0, Complex64::new(1.0, 0.0));
        f.add_mode(1, -1, 0, Complex64::new(1.0, 0.0));
        assert!(amplitudes(&f, &ps, 0, 0.0, Regime::Additive, None, 32).is_err());
    }

    #[test]
    fn envelope_field_matches_pointwise_definition() {
        let ps = params_with(DEFAULT_C_R);
        let c = ps.c_r * ps.delta(1) * ps.m0(Regime::Additive, 0.0);
        let r = small_stress(32, 1.3 * c);
        let rho = rho_field(&r, c).unwrap();
        let src = r.transform(crate::field::Direction::Inverse);
        let s = src.samples();
        let nn = 32 * 32;
        for i in (0..nn).step_by(41) {
            let t = [s[i], s[nn + i], s[2 * nn + i], s[3 * nn + i]];
            let frob = t.iter().map(|v| v * v).sum::<f64>().sqrt();
            let expect = 4.0 * c * crate::chi::chi(frob / c);
            assert!((rho.samples_of(0)[i] - expect).abs() < 1e-12 * expect);
        }
    }
}

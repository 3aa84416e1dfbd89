//! Spatial and temporal mollification.
//!
//! Spatial smoothing is a radial spectral cutoff: the multiplier equals 1 on
//! low modes so that smoothing a band-limited field below the knee is exact.
//! Temporal smoothing is a causal convolution against a compactly supported
//! polynomial bump, so mollified values at time `t` depend only on the past
//! window `[t - l, t]`.

use crate::error::{Error, Result};
use crate::field::TorusField;

fn exp_bridge(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

/// Smooth radial profile: 1 on `[0, 1/2]`, 0 on `[1, ∞)`, C^∞ in between.
pub fn smooth_cutoff(u: f64) -> f64 {
    if u <= 0.5 {
        1.0
    } else if u >= 1.0 {
        0.0
    } else {
        let a = exp_bridge(1.0 - u);
        let b = exp_bridge(u - 0.5);
        a / (a + b)
    }
}

/// Low-pass a field with the multiplier `ψ(l·|k|)`.
///
/// Modes with `|k| ≤ 1/(2l)` pass through unchanged; modes with `|k| ≥ 1/l`
/// vanish. Diagonal in Fourier space, so it commutes with differentiation.
pub fn spatial_mollify(f: &TorusField, l: f64) -> Result<TorusField> {
    if !(l > 0.0) {
        return Err(Error::Parameter(format!("mollification length l = {l} must be positive")));
    }
    let mut out = f.transform(crate::field::Direction::Forward);
    let n = out.n();
    let comps = out.ncomp();
    {
        let modes = out.modes_mut();
        for c in 0..comps {
            for i1 in 0..n {
                for i2 in 0..n {
                    let ksq = crate::grid::k_sq(i1, i2, n);
                    let w = smooth_cutoff(l * ksq.sqrt());
                    modes[c * n * n + i1 * n + i2] *= w;
                }
            }
        }
    }
    Ok(out)
}

/// Normalized weights of the causal bump `(1 - (2s/l - 1)²)³` sampled at
/// `s = j·dt`, `j = 0, 1, …`, truncated at `s > l`.
pub fn causal_weights(dt: f64, l: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(Error::Parameter(format!("dt = {dt} must be positive")));
    }
    if l <= dt {
        return Err(Error::Parameter(format!(
            "temporal mollification width l = {l} must exceed the grid spacing dt = {dt}"
        )));
    }
    let taps = (l / dt).floor() as usize + 1;
    let mut w: Vec<f64> = (0..taps)
        .map(|j| {
            let s = j as f64 * dt;
            let u = 2.0 * s / l - 1.0;
            if u.abs() >= 1.0 {
                0.0
            } else {
                (1.0 - u * u).powi(3)
            }
        })
        .collect();
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Parameter("temporal mollifier has no interior sample".into()));
    }
    for v in &mut w {
        *v /= total;
    }
    Ok(w)
}

/// Causal convolution of a scalar sample path, extending the path by its
/// initial value before time zero.
pub fn time_mollify_scalars(vals: &[f64], dt: f64, l: f64) -> Result<Vec<f64>> {
    let w = causal_weights(dt, l)?;
    if vals.is_empty() {
        return Err(Error::Parameter("empty path".into()));
    }
    Ok((0..vals.len())
        .map(|i| w.iter().enumerate().map(|(j, &wj)| wj * vals[i.saturating_sub(j)]).sum())
        .collect())
}

/// Causal convolution of a field path; combination happens mode-wise.
pub fn time_mollify_fields(fields: &[TorusField], dt: f64, l: f64) -> Result<Vec<TorusField>> {
    let w = causal_weights(dt, l)?;
    if fields.is_empty() {
        return Err(Error::Parameter("empty path".into()));
    }
    let spectra: Vec<TorusField> =
        fields.iter().map(|f| f.transform(crate::field::Direction::Forward)).collect();
    let mut out = Vec::with_capacity(spectra.len());
    for i in 0..spectra.len() {
        let mut acc = spectra[i].clone();
        {
            let modes = acc.modes_mut();
            for v in modes.iter_mut() {
                *v *= w[0];
            }
            for (j, &wj) in w.iter().enumerate().skip(1) {
                let src = spectra[i.saturating_sub(j)].modes();
                for (dst, s) in modes.iter_mut().zip(src.iter()) {
                    *dst += wj * s;
                }
            }
        }
        out.push(acc);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Components;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cutoff_profile_shape() {
        assert_eq!(smooth_cutoff(0.0), 1.0);
        assert_eq!(smooth_cutoff(0.5), 1.0);
        assert_eq!(smooth_cutoff(1.0), 0.0);
        assert_eq!(smooth_cutoff(2.0), 0.0);
        let mid = smooth_cutoff(0.75);
        assert!(mid > 0.0 && mid < 1.0);
        let mut prev = 1.0;
        for j in 0..=100 {
            let v = smooth_cutoff(0.5 + 0.5 * j as f64 / 100.0);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn spatial_mollifier_fixes_low_modes_and_kills_high() {
        let mut f = TorusField::zeros(64, Components::Scalar).unwrap();
        f.drop_samples();
        f.add_mode(0, 2, 1, Complex64::new(0.3, -0.1));
        f.add_mode(0, -2, -1, Complex64::new(0.3, 0.1));
        f.add_mode(0, 20, 0, Complex64::new(1.0, 0.0));
        f.add_mode(0, -20, 0, Complex64::new(1.0, 0.0));
        let l = 0.1;
        let sm = spatial_mollify(&f, l).unwrap();
        assert_eq!(sm.mode(0, 2, 1), Complex64::new(0.3, -0.1));
        assert_eq!(sm.mode(0, 20, 0), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn spatial_mollifier_commutes_with_derivative_and_is_close() {
        let n = 64;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut f = TorusField::zeros(n, Components::Scalar).unwrap();
        f.drop_samples();
        for k1 in -10i64..=10 {
            for k2 in -10i64..=10 {
                if (k1, k2) <= (0, 0) {
                    continue;
                }
                let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                    / (1.0 + (k1 * k1 + k2 * k2) as f64);
                f.add_mode(0, k1, k2, c);
                f.add_mode(0, -k1, -k2, c.conj());
            }
        }
        let l = 0.04;
        let a = spatial_mollify(&f.differentiate((1, 0)), l).unwrap();
        let b = spatial_mollify(&f, l).unwrap().differentiate((1, 0));
        assert!(a.sub(&b).unwrap().norm_l2() < 1e-12);

        let diff = f.sub(&spatial_mollify(&f, l).unwrap()).unwrap().norm_l2();
        let grad = crate::ops::gradient(&f).unwrap().norm_l2();
        assert!(diff <= 2.0 * l * grad);
    }

    #[test]
    fn causal_weights_normalized_and_causal() {
        let w = causal_weights(0.01, 0.1).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(causal_weights(0.1, 0.05).is_err());
        let c = time_mollify_scalars(&[2.5; 40], 0.01, 0.1).unwrap();
        for v in c {
            assert!((v - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn ramp_shifts_by_at_most_the_window() {
        let dt = 0.01;
        let l = 0.08;
        let vals: Vec<f64> = (0..100).map(|i| i as f64 * dt).collect();
        let sm = time_mollify_scalars(&vals, dt, l).unwrap();
        for (i, &v) in sm.iter().enumerate().skip(10) {
            let lag = vals[i] - v;
            assert!(lag > 0.0 && lag < l, "lag {lag} at {i}");
        }
    }

    #[test]
    fn field_path_mollification_matches_scalar_path() {
        let dt = 0.05;
        let l = 0.2;
        let path: Vec<TorusField> = (0..12)
            .map(|i| {
                let mut f = TorusField::zeros(8, Components::Scalar).unwrap();
                f.drop_samples();
                f.add_mode(0, 1, 0, Complex64::new(i as f64, 0.0));
                f.add_mode(0, -1, 0, Complex64::new(i as f64, 0.0));
                f
            })
            .collect();
        let vals: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let sf = time_mollify_fields(&path, dt, l).unwrap();
        let sv = time_mollify_scalars(&vals, dt, l).unwrap();
        for (f, v) in sf.iter().zip(sv.iter()) {
            assert!((f.mode(0, 1, 0).re - v).abs() < 1e-12);
        }
    }
}

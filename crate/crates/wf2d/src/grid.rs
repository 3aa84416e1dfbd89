//! Wavenumber indexing on the N×N collocation grid of `[-π, π]²`.
//!
//! Collocation points are `x_i = -π + 2πi/N`. Spectral data is stored in DFT
//! bin order: bin `i` holds wavenumber `k(i) = i` for `i < N/2` and `i - N`
//! otherwise, so the Nyquist bin `i = N/2` holds the folded `±N/2` content.
//! The public mode view splits that bin evenly between `+N/2` and `-N/2`
//! (and corner bins four ways), which keeps conjugate symmetry
//! `c_{-k} = conj(c_k)` exact for real fields on the closed index range
//! `|k_i| ≤ N/2`.

use crate::error::{Error, Result};

pub fn validate_n(n: usize) -> Result<()> {
    if n >= 2 && n.is_power_of_two() {
        Ok(())
    } else {
        Err(Error::NonPowerOfTwoGrid(n))
    }
}

/// Wavenumber held by DFT bin `i` on an `n`-grid.
#[inline]
pub fn wavenumber(i: usize, n: usize) -> i64 {
    let i = i as i64;
    let n = n as i64;
    if i < n / 2 {
        i
    } else {
        i - n
    }
}

/// DFT bin for wavenumber `k`; `+n/2` folds onto the `-n/2` bin.
#[inline]
pub fn bin(k: i64, n: usize) -> usize {
    let n = n as i64;
    (k.rem_euclid(n)) as usize
}

/// Split-Nyquist weight: 1/2 per axis sitting exactly on `|k_i| = n/2`.
#[inline]
pub fn nyquist_weight(k1: i64, k2: i64, n: usize) -> f64 {
    let ny = (n / 2) as i64;
    let mut w = 1.0;
    if k1.abs() == ny {
        w *= 0.5;
    }
    if k2.abs() == ny {
        w *= 0.5;
    }
    w
}

/// Collocation coordinate of grid index `i`.
#[inline]
pub fn coord(i: usize, n: usize) -> f64 {
    -std::f64::consts::PI + 2.0 * std::f64::consts::PI * (i as f64) / (n as f64)
}

/// Euclidean `|k|²` of the wavenumber held by bin pair `(i1, i2)`.
#[inline]
pub fn k_sq(i1: usize, i2: usize, n: usize) -> f64 {
    let k1 = wavenumber(i1, n) as f64;
    let k2 = wavenumber(i2, n) as f64;
    k1 * k1 + k2 * k2
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavenumber_layout() {
        let n = 8;
        let ks: Vec<i64> = (0..n).map(|i| wavenumber(i, n)).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        for i in 0..n {
            assert_eq!(bin(wavenumber(i, n), n), i);
        }
        assert_eq!(bin(4, n), 4);
        assert_eq!(bin(-4, n), 4);
    }

    #[test]
    fn nyquist_weights() {
        assert_eq!(nyquist_weight(4, 0, 8), 0.5);
        assert_eq!(nyquist_weight(4, -4, 8), 0.25);
        assert_eq!(nyquist_weight(3, 2, 8), 1.0);
    }

    #[test]
    fn grid_coords_span_the_torus() {
        assert_eq!(coord(0, 4), -std::f64::consts::PI);
        assert!((coord(2, 4) - 0.0).abs() < 1e-15);
        assert!(validate_n(1024).is_ok());
        assert!(validate_n(100).is_err());
        assert!(validate_n(0).is_err());
    }
}

//! Floor cutoff for the amplitude envelope.
//!
//! `chi` is 1 on `[0, 1]`, the identity on `[2, ∞)`, and a quintic Hermite
//! bridge in between (value, slope, and curvature matched at both ends), with
//! `z ≤ 2·chi(z)` everywhere and `2·chi(z) ≤ 4z` from the bridge onward.
//! Dividing a stress by `ρ = 4·c·chi(|R|/c)` then keeps the ratio inside the
//! domain of the amplitude functions.

/// Smooth floor profile: `chi(z) = 1` for `z ≤ 1`, `chi(z) = z` for `z ≥ 2`.
pub fn chi(z: f64) -> f64 {
    if z <= 1.0 {
        1.0
    } else if z >= 2.0 {
        z
    } else {
        let s = z - 1.0;
        1.0 + s * s * s * (6.0 + s * (-8.0 + 3.0 * s))
    }
}

/// First derivative of [`chi`].
pub fn chi_prime(z: f64) -> f64 {
    if z <= 1.0 {
        0.0
    } else if z >= 2.0 {
        1.0
    } else {
        let s = z - 1.0;
        s * s * (18.0 + s * (-32.0 + 15.0 * s))
    }
}

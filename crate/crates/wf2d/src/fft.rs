//! 2-D FFT layer tying DFT bins to the `e^{ik·x}` basis on `[-π, π]²`.
//!
//! With collocation points `x_i = -π + 2πi/N`, the basis function `e^{ik·x}`
//! picks up the factor `(-1)^{k₁+k₂}` relative to the DFT's `e^{2πik·j/N}`;
//! since `(-1)^{k(i)} = (-1)^i` in bin order, that is a checkerboard sign in
//! index space, fused here with the `1/N²` analysis normalization.
//!
//! Synthesis (`modes → samples`) uses the unnormalized inverse DFT, so the
//! mean of the field is exactly the `k = 0` coefficient.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

struct Plans {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

fn plans(n: usize) -> Arc<Plans> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plans>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("fft plan cache poisoned");
    map.entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plans {
                fwd: planner.plan_fft_forward(n),
                inv: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

fn transpose_square(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

/// Unnormalized 2-D DFT over an `n×n` row-major buffer.
fn dft2(data: &mut [Complex64], n: usize, inverse: bool) {
    debug_assert_eq!(data.len(), n * n);
    let p = plans(n);
    let fft = if inverse { &p.inv } else { &p.fwd };
    fft.process(data);
    transpose_square(data, n);
    fft.process(data);
    transpose_square(data, n);
}

/// Analysis: real collocation samples to `e^{ik·x}` coefficients in bin order.
pub fn samples_to_modes(samples: &[f64], n: usize) -> Vec<Complex64> {
    debug_assert_eq!(samples.len(), n * n);
    let mut buf: Vec<Complex64> = samples.iter().map(|&s| Complex64::new(s, 0.0)).collect();
    dft2(&mut buf, n, false);
    let norm = 1.0 / ((n * n) as f64);
    for i1 in 0..n {
        let row = &mut buf[i1 * n..(i1 + 1) * n];
        for (i2, v) in row.iter_mut().enumerate() {
            let sign = if (i1 + i2) % 2 == 0 { norm } else { -norm };
            *v *= sign;
        }
    }
    buf
}

/// Synthesis: coefficients in bin order to real collocation samples.
///
/// The imaginary residue of a conjugate-symmetric spectrum is discarded; it
/// is at roundoff for every real field this crate constructs.
pub fn modes_to_samples(modes: &[Complex64], n: usize) -> Vec<f64> {
    debug_assert_eq!(modes.len(), n * n);
    let mut buf = modes.to_vec();
    for i1 in 0..n {
        let row = &mut buf[i1 * n..(i1 + 1) * n];
        for (i2, v) in row.iter_mut().enumerate() {
            if (i1 + i2) % 2 != 0 {
                *v = -*v;
            }
        }
    }
    dft2(&mut buf, n, true);
    buf.iter().map(|c| c.re).collect()
}

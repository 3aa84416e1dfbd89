//! Uniform time grids, discrete time derivatives, Hölder seminorms.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t_end > t_start) || n_steps == 0 {
            return Err(Error::Parameter(format!(
                "time grid needs t_end > t_start and n_steps ≥ 1 (got [{t_start}, {t_end}], {n_steps})"
            )));
        }
        Ok(Self { t_start, t_end, n_steps })
    }

    pub fn dt(&self) -> f64 {
        (self.t_end - self.t_start) / (self.n_steps as f64)
    }

    /// Number of grid points (`n_steps + 1`).
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t_start + self.dt() * (i as f64)
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }
}

/// Stencil of the discrete time derivative at node `i` of a `len`-point grid:
/// centered in the interior, one-sided at the two ends. Returns
/// `(index, coefficient)` pairs such that `(D_t f)(t_i) = Σ coeff · f(t_idx)`.
pub fn dt_stencil(i: usize, len: usize, dt: f64) -> Vec<(usize, f64)> {
    assert!(len >= 2 && i < len);
    if i == 0 {
        vec![(0, -1.0 / dt), (1, 1.0 / dt)]
    } else if i == len - 1 {
        vec![(len - 2, -1.0 / dt), (len - 1, 1.0 / dt)]
    } else {
        vec![(i - 1, -0.5 / dt), (i + 1, 0.5 / dt)]
    }
}

/// Discrete Hölder seminorm `max_{i≠j} dist(i, j) / |t_i - t_j|^θ`;
/// the caller supplies the distance between path values.
pub fn holder_seminorm(ts: &[f64], theta: f64, dist: impl Fn(usize, usize) -> f64) -> Result<f64> {
    if ts.len() < 2 {
        return Err(Error::Path(format!("Hölder seminorm needs ≥ 2 samples, got {}", ts.len())));
    }
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Parameter(format!("Hölder exponent θ = {theta} outside (0, 1)")));
    }
    let mut best = 0.0f64;
    for i in 0..ts.len() {
        for j in (i + 1)..ts.len() {
            let gap = (ts[j] - ts[i]).abs();
            if gap > 0.0 {
                best = best.max(dist(i, j) / gap.powf(theta));
            }
        }
    }
    Ok(best)
}

pub fn holder_seminorm_scalars(ts: &[f64], vals: &[f64], theta: f64) -> Result<f64> {
    if ts.len() != vals.len() {
        return Err(Error::Path("time/value length mismatch".into()));
    }
    holder_seminorm(ts, theta, |i, j| (vals[i] - vals[j]).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spacing() {
        let g = TimeGrid::new(0.0, 1.0, 4).unwrap();
        assert_eq!(g.dt(), 0.25);
        assert_eq!(g.len(), 5);
        assert_eq!(g.times(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(TimeGrid::new(1.0, 1.0, 4).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn stencils_differentiate_linear_exactly() {
        let dt = 0.1;
        let ts: Vec<f64> = (0..5).map(|i| dt * i as f64).collect();
        let f: Vec<f64> = ts.iter().map(|t| 3.0 * t + 1.0).collect();
        for i in 0..5 {
            let d: f64 = dt_stencil(i, 5, dt).into_iter().map(|(j, c)| c * f[j]).sum();
            assert!((d - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn holder_basics() {
        assert_eq!(holder_seminorm_scalars(&[0.0, 1.0], &[5.0, 5.0], 0.5).unwrap(), 0.0);
        let s = holder_seminorm_scalars(&[0.0, 1.0], &[0.0, 1.0], 0.5).unwrap();
        assert!((s - 1.0).abs() < 1e-15);
        assert!(holder_seminorm_scalars(&[0.0], &[0.0], 0.5).is_err());
        assert!(holder_seminorm_scalars(&[0.0, 1.0], &[0.0, 1.0], 1.5).is_err());
    }
}

//! The eight-direction set on `S¹ ∩ Q²` and the amplitude functions `γ_ζ`
//! reconstructing trace-free symmetric matrices.
//!
//! `γ_ζ(R̊)²` is affine in `R̊`: decomposing `ζ⊗̊ζ` in the basis
//! `{diag(1,-1), offdiag}` gives coefficients `±7/50` and `±12/25`, and the
//! symmetric ansatz solving the two linear reconstruction constraints yields
//! the weights `25/28` and `25/96`. The identity
//! `Σ_ζ γ_ζ(R̊)² ζ⊗̊ζ = R̊` is then exact up to rounding; the test suite
//! checks it by brute force before anything is built on it.

use crate::error::{Error, Result};

/// A 2×2 symmetric trace-free matrix `[[r1, r2], [r2, -r1]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TraceFreeSym2 {
    pub r1: f64,
    pub r2: f64,
}

impl TraceFreeSym2 {
    pub fn new(r1: f64, r2: f64) -> Self {
        Self { r1, r2 }
    }

    pub fn as_matrix(self) -> [[f64; 2]; 2] {
        [[self.r1, self.r2], [self.r2, -self.r1]]
    }

    /// Frobenius norm `√(2r1² + 2r2²)`.
    pub fn frobenius(self) -> f64 {
        (2.0 * (self.r1 * self.r1 + self.r2 * self.r2)).sqrt()
    }

    pub fn add(self, o: Self) -> Self {
        Self::new(self.r1 + o.r1, self.r2 + o.r2)
    }

    pub fn sub(self, o: Self) -> Self {
        Self::new(self.r1 - o.r1, self.r2 - o.r2)
    }

    pub fn scale(self, a: f64) -> Self {
        Self::new(a * self.r1, a * self.r2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignClass {
    Plus,
    Minus,
}

/// One of the eight rational unit directions; `5ζ ∈ Z²` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Direction {
    five_zeta: (i64, i64),
    class: SignClass,
}

const PLUS_FIVES: [(i64, i64); 4] = [(3, 4), (3, -4), (4, 3), (4, -3)];

/// Sign pairs of the affine `γ²` construction, indexed like [`PLUS_FIVES`].
const GAMMA_SIGNS: [(f64, f64); 4] = [(-1.0, 1.0), (-1.0, -1.0), (1.0, 1.0), (1.0, -1.0)];

const W1: f64 = 25.0 / 28.0;
const W2: f64 = 25.0 / 96.0;

/// Default additive constant `C` of the `γ²` construction.
pub const GAMMA_C: f64 = 1.0;

/// Positivity guard: every `γ²` must stay `≥ 0.1·C`.
pub const GAMMA_FLOOR_FRACTION: f64 = 0.1;

impl Direction {
    pub fn five_zeta(self) -> (i64, i64) {
        self.five_zeta
    }

    pub fn zeta(self) -> [f64; 2] {
        [self.five_zeta.0 as f64 / 5.0, self.five_zeta.1 as f64 / 5.0]
    }

    /// Rotation of `ζ` by `+π/2`.
    pub fn perp(self) -> [f64; 2] {
        [-self.five_zeta.1 as f64 / 5.0, self.five_zeta.0 as f64 / 5.0]
    }

    pub fn five_perp(self) -> (i64, i64) {
        (-self.five_zeta.1, self.five_zeta.0)
    }

    pub fn class(self) -> SignClass {
        self.class
    }

    pub fn antipode(self) -> Self {
        Self {
            five_zeta: (-self.five_zeta.0, -self.five_zeta.1),
            class: match self.class {
                SignClass::Plus => SignClass::Minus,
                SignClass::Minus => SignClass::Plus,
            },
        }
    }

    /// Representative in `Λ⁺` (itself, or its antipode).
    pub fn plus_representative(self) -> Self {
        match self.class {
            SignClass::Plus => self,
            SignClass::Minus => self.antipode(),
        }
    }

    /// Index of the `Λ⁺` representative in the canonical ordering.
    pub fn plus_index(self) -> usize {
        let five = self.plus_representative().five_zeta;
        PLUS_FIVES.iter().position(|&p| p == five).expect("direction not in Λ")
    }

    /// `ζ⊗̊ζ`, exact in the `(r1, r2)` coordinates.
    pub fn outer_tf(self) -> TraceFreeSym2 {
        let (a, b) = self.five_zeta;
        TraceFreeSym2::new((2 * a * a - 25) as f64 / 50.0, (a * b) as f64 / 25.0)
    }
}

/// `Λ = Λ⁺ ∪ Λ⁻`, in the canonical order (the four `Λ⁺` members first).
pub fn direction_set() -> Vec<Direction> {
    let mut out: Vec<Direction> = PLUS_FIVES
        .iter()
        .map(|&five_zeta| Direction { five_zeta, class: SignClass::Plus })
        .collect();
    let minus: Vec<Direction> = out.iter().map(|d| d.antipode()).collect();
    out.extend(minus);
    out
}

/// `γ_ζ(R̊)²` with additive constant `c`; affine in `R̊`, shared exactly by
/// antipodal directions.
pub fn gamma_sq(r: TraceFreeSym2, dir: Direction, c: f64) -> f64 {
    let (s1, s2) = GAMMA_SIGNS[dir.plus_index()];
    c + s1 * W1 * r.r1 + s2 * W2 * r.r2
}

/// `γ_ζ(R̊)` with the domain guard: every squared amplitude must stay at or
/// above `0.1·c`, otherwise the argument left the admissible ball.
pub fn gamma(r: TraceFreeSym2, dir: Direction, c: f64) -> Result<f64> {
    let min_sq = GAMMA_SIGNS
        .iter()
        .map(|&(s1, s2)| c + s1 * W1 * r.r1 + s2 * W2 * r.r2)
        .fold(f64::INFINITY, f64::min);
    if min_sq < GAMMA_FLOOR_FRACTION * c {
        return Err(Error::GammaDomain { min_sq, floor: GAMMA_FLOOR_FRACTION * c });
    }
    Ok(gamma_sq(r, dir, c).sqrt())
}

/// `Σ_ζ γ_ζ(R̊)² ζ⊗̊ζ` over all eight directions.
pub fn reconstruct(r: TraceFreeSym2, c: f64) -> TraceFreeSym2 {
    direction_set()
        .into_iter()
        .fold(TraceFreeSym2::default(), |acc, d| acc.add(d.outer_tf().scale(gamma_sq(r, d, c))))
}

/// `(M, C_Λ)`: the direction-set constant `C_Λ = 2√12·√(4π²+1)·|Λ|` and the
/// amplitude bound `M = C_Λ · sup_{|R̊|≤1/2} max_ζ (γ_ζ + |∇γ_ζ|)`, the sup
/// taken over a dense polar sample of the Frobenius ball.
pub fn amplitude_constants(samples_per_axis: usize) -> (f64, f64) {
    let c_lambda = 2.0 * 12f64.sqrt() * (4.0 * std::f64::consts::PI.powi(2) + 1.0).sqrt() * 8.0;
    let dirs = direction_set();
    let mut sup = 0.0f64;
    for ir in 0..=samples_per_axis {
        let rho = 0.5 * ir as f64 / samples_per_axis as f64;
        for it in 0..samples_per_axis.max(1) {
            let th = 2.0 * std::f64::consts::PI * it as f64 / samples_per_axis as f64;
            let r = TraceFreeSym2::new(
                rho * th.cos() / std::f64::consts::SQRT_2,
                rho * th.sin() / std::f64::consts::SQRT_2,
            );
            for &d in &dirs {
                let gsq = gamma_sq(r, d, GAMMA_C);
                let g = gsq.sqrt();
                let (s1, s2) = GAMMA_SIGNS[d.plus_index()];
                let grad = ((s1 * W1).powi(2) + (s2 * W2).powi(2)).sqrt() / (2.0 * g);
                sup = sup.max(g + grad);
            }
        }
    }
    (c_lambda * sup, c_lambda)
}

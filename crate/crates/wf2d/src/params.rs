//! Iteration parameters: the geometric frequency ladder, smallness scales,
//! and the admissibility constraints tying them together.
//!
//! Strict mode enforces every constraint and refuses inadmissible sets; the
//! admissible region needs astronomically large base frequencies, so any run
//! that actually synthesizes fields uses demo mode, which records violated
//! constraints by name instead of rejecting.

use crate::blocks::{BlockSpec, DEFAULT_GAP};
use crate::error::{Error, Result};
use crate::geometry::Direction;
use crate::noise::Regime;

pub const DEFAULT_C_R: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Strict,
    Demo,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Strict => "strict",
            Mode::Demo => "demo",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(Mode::Strict),
            "demo" => Ok(Mode::Demo),
            other => Err(Error::Config(format!(
                "mode must be \"strict\" or \"demo\", got \"{other}\""
            ))),
        }
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn reduced(num: u64, den: u64) -> (u64, u64) {
    if num == 0 {
        return (0, 1);
    }
    let g = gcd(num, den);
    (num / g, den / g)
}

/// Coarsest rational in `(lo, hi]`: smallest denominator, ties broken toward
/// the midpoint.
fn coarsest_rational(lo: f64, hi: f64) -> (u64, u64) {
    let mid = 0.5 * (lo + hi);
    for den in 1..=4096u64 {
        let mut best: Option<(u64, f64)> = None;
        let lo_num = (lo * den as f64).floor() as i64;
        let hi_num = (hi * den as f64).ceil() as i64;
        for num in lo_num.max(1)..=hi_num.max(1) {
            let v = num as f64 / den as f64;
            if v > lo && v <= hi {
                let d = (v - mid).abs();
                if best.map_or(true, |(_, bd)| d < bd) {
                    best = Some((num as u64, d));
                }
            }
        }
        if let Some((num, _)) = best {
            return reduced(num, den);
        }
    }
    unreachable!("interval too thin for a rational with denominator ≤ 4096")
}

/// All fixed parameters of a run plus the per-level derived scales.
#[derive(Clone, Debug)]
pub struct ParamSet {
    pub m: f64,
    pub m_star: f64,
    /// Exact rational η = num/den.
    pub eta: (u64, u64),
    pub alpha: f64,
    pub a: u64,
    pub b: u64,
    pub beta: f64,
    /// Threshold scale L.
    pub l_scale: f64,
    pub c_r: f64,
    pub mode: Mode,
    /// Names of strict constraints this set violates (non-empty only in demo
    /// mode; strict derivation fails instead).
    pub violations: Vec<String>,
}

/// Derive every dependent quantity and vet the constraint set.
///
/// `eta` defaults to the coarsest rational in its admissible interval.
pub fn derive_parameters(
    m: f64,
    l_scale: f64,
    a: u64,
    b: u64,
    beta: f64,
    eta: Option<(u64, u64)>,
    c_r: f64,
    mode: Mode,
    regime: Regime,
) -> Result<ParamSet> {
    if !(m > 0.0 && m < 1.0) {
        return Err(Error::Parameter(format!("dissipation exponent m = {m} not in (0,1)")));
    }
    if a == 0 || a % 10 != 0 {
        return Err(Error::Parameter(format!("base frequency a = {a} must be a positive multiple of 10")));
    }
    if b == 0 {
        return Err(Error::Parameter("level exponent b must be ≥ 1".into()));
    }
    if !(beta > 0.0) || !(l_scale > 1.0) || !(c_r > 0.0) {
        return Err(Error::Parameter(format!(
            "need β > 0, L > 1, c_R > 0 (got β = {beta}, L = {l_scale}, c_R = {c_r})"
        )));
    }
    let m_star = if m > 0.5 { 2.0 * m - 1.0 } else { 0.0 };
    let eta = match eta {
        Some((num, den)) => {
            if num == 0 || den == 0 {
                return Err(Error::Parameter("η must be a positive rational".into()));
            }
            reduced(num, den)
        }
        None => coarsest_rational((1.0 - m_star) / 16.0, (1.0 - m_star) / 8.0),
    };
    let alpha = (1.0 - m) / 400.0;
    let mut ps = ParamSet {
        m,
        m_star,
        eta,
        alpha,
        a,
        b,
        beta,
        l_scale,
        c_r,
        mode,
        violations: Vec::new(),
    };
    ps.violations = ps.evaluate_constraints(regime);
    if mode == Mode::Strict && !ps.violations.is_empty() {
        return Err(Error::Constraint(format!(
            "inadmissible parameter set: {}",
            ps.violations.join("; ")
        )));
    }
    Ok(ps)
}

impl ParamSet {
    pub fn eta_value(&self) -> f64 {
        self.eta.0 as f64 / self.eta.1 as f64
    }

    /// Denominators `d₁` (makes `r` integral) and `d₂` (makes `λσ` integral).
    pub fn exponent_denominators(&self) -> (u64, u64) {
        let (num, den) = self.eta;
        let d1 = if 6 * num >= den { den } else { reduced(den - 6 * num, den).1 };
        let d2 = reduced(2 * num, den).1;
        (d1, d2)
    }

    /// Names of violated strict constraints; empty means fully admissible.
    pub fn evaluate_constraints(&self, regime: Regime) -> Vec<String> {
        let mut bad = Vec::new();
        let (num, den) = self.eta;
        let eta = self.eta_value();
        let lo = (1.0 - self.m_star) / 16.0;
        let hi = (1.0 - self.m_star) / 8.0;
        if !(eta > lo && eta <= hi) {
            bad.push(format!("η ∈ ((1−m*)/16, (1−m*)/8] (η = {num}/{den})"));
        }
        if 6 * num >= den {
            bad.push(format!("η < 1/6 so the concentration exponent stays positive (η = {num}/{den})"));
        }
        if !(self.alpha > 16.0 * self.beta * self.b as f64) {
            bad.push("α > 16βb".into());
        }
        if !(self.b as f64 > 16.0 / self.alpha) {
            bad.push("b > 16/α".into());
        }
        let (d1, d2) = self.exponent_denominators();
        if self.b % (d1 * d2) != 0 {
            bad.push(format!("b ≡ 0 (mod d₁d₂ = {})", d1 * d2));
        }
        // l λ_q⁴ ≤ λ_{q+1}^{-α} and l⁻¹ ≤ λ_{q+1}^{2α}, in logs; both reduce
        // to 2·b^q ≤ (α/2)·b^{q+1}, so checking q = 0 covers every level.
        let ln_l0 = self.ln_lambda(0);
        let ln_l1 = self.ln_lambda(1);
        let ln_l = -1.5 * self.alpha * ln_l1 - 2.0 * ln_l0;
        if !(ln_l + 4.0 * ln_l0 <= -self.alpha * ln_l1) {
            bad.push("lλ_q⁴ ≤ λ_{q+1}^{−α}".into());
        }
        if !(-ln_l <= 2.0 * self.alpha * ln_l1) {
            bad.push("l⁻¹ ≤ λ_{q+1}^{2α}".into());
        }
        let ln_a_2bb = 2.0 * self.beta * self.b as f64 * (self.a as f64).ln();
        match regime {
            Regime::Additive => {
                if !(ln_a_2bb > 9f64.ln()) {
                    bad.push("9 < a^{2βb}".into());
                }
                let lhs = 50.0 * std::f64::consts::PI.powi(2) * ln_a_2bb.exp();
                if !(lhs <= self.c_r * self.l_scale) {
                    bad.push("50π²a^{2βb} ≤ c_R L".into());
                }
                if !(self.l_scale <= std::f64::consts::PI * (self.a as f64).powi(4) - 1.0) {
                    bad.push("L ≤ πa⁴ − 1".into());
                }
            }
            Regime::Multiplicative => {
                if !(ln_a_2bb > 9f64.ln()) {
                    bad.push("9 < a^{2βb}".into());
                }
                let lhs = 8.0 * 3f64.sqrt() * ln_a_2bb.exp();
                let l = self.l_scale;
                let rhs = (l - 0.5 * l.powf(0.25)).exp()
                    / (l.powf(0.25) * (2.0 * l + 0.5 + std::f64::consts::PI));
                if !(lhs <= self.c_r * rhs) {
                    bad.push("8√3a^{2βb} ≤ c_R e^{L−L^{1/4}/2}/(L^{1/4}(2L+1/2+π))".into());
                }
            }
        }
        let p = self.p_star();
        if !(p > 1.0 && p < 2.0) {
            bad.push(format!("p* ∈ (1,2) (p* = {p})"));
        }
        bad
    }

    pub fn ln_lambda(&self, q: u32) -> f64 {
        (self.b as f64).powi(q as i32) * (self.a as f64).ln()
    }

    /// `λ_q = a^{b^q}` as a float; overflows to infinity for admissible sets.
    pub fn lambda(&self, q: u32) -> f64 {
        self.ln_lambda(q).exp()
    }

    /// `λ_q` as an exact integer; only desk-scale sets fit.
    pub fn lambda_int(&self, q: u32) -> Result<u64> {
        let expo = (self.b as u32).checked_pow(q).ok_or_else(|| {
            Error::Parameter(format!("b^{q} overflows the demo integer range"))
        })?;
        self.a
            .checked_pow(expo)
            .ok_or_else(|| Error::Parameter(format!("λ_{q} = {}^{} overflows u64", self.a, expo)))
    }

    /// `δ_q = λ_q^{-2β}`.
    pub fn delta(&self, q: u32) -> f64 {
        (-2.0 * self.beta * self.ln_lambda(q)).exp()
    }

    /// Mollification length for the step `q → q+1`.
    pub fn mollification_length(&self, q: u32) -> f64 {
        (-1.5 * self.alpha * self.ln_lambda(q + 1) - 2.0 * self.ln_lambda(q)).exp()
    }

    /// Theoretical concentration count `r = λ_{q+1}^{1−6η}`.
    pub fn concentration(&self, q: u32) -> f64 {
        ((1.0 - 6.0 * self.eta_value()) * self.ln_lambda(q + 1)).exp()
    }

    /// Theoretical temporal rate `μ = λ_{q+1}^{1−4η}`.
    pub fn oscillation(&self, q: u32) -> f64 {
        ((1.0 - 4.0 * self.eta_value()) * self.ln_lambda(q + 1)).exp()
    }

    /// Theoretical spacing `σ = λ_{q+1}^{2η−1}`.
    pub fn spacing(&self, q: u32) -> f64 {
        ((2.0 * self.eta_value() - 1.0) * self.ln_lambda(q + 1)).exp()
    }

    /// `p* = 16(1−6η) / (300α + 16(1−7η))`.
    pub fn p_star(&self) -> f64 {
        let eta = self.eta_value();
        16.0 * (1.0 - 6.0 * eta) / (300.0 * self.alpha + 16.0 * (1.0 - 7.0 * eta))
    }

    /// Energy envelope `M₀(t)`; the multiplicative regime absorbs the factor
    /// `m_L²/L⁴ = e^{2L}/L⁴`-free form `e^{4Lt + 2L}` directly.
    pub fn m0(&self, regime: Regime, t: f64) -> f64 {
        match regime {
            Regime::Additive => self.l_scale.powi(4) * (4.0 * self.l_scale * t).exp(),
            Regime::Multiplicative => (4.0 * self.l_scale * t + 2.0 * self.l_scale).exp(),
        }
    }

    /// Multiplicative threshold envelope `m_L = √3 L^{1/4} e^{L^{1/4}/2}`.
    pub fn m_l(&self) -> f64 {
        3f64.sqrt() * self.l_scale.powf(0.25) * (0.5 * self.l_scale.powf(0.25)).exp()
    }

    /// Block parameters for the step `q → q+1` at desk scale: the theoretical
    /// exponents rounded to admissible integers, with a geometric-packing
    /// fallback that keeps `1 ≪ r ≪ μ ≪ σ⁻¹` at the default gap when the
    /// rounded values collide.
    pub fn demo_block_parameters(&self, q: u32) -> Result<(u64, u64, u32, f64)> {
        let lambda = self.lambda_int(q + 1)?;
        demo_block_parameters(lambda, self.eta_value(), DEFAULT_GAP)
    }

    pub fn demo_block_spec(&self, q: u32, dir: Direction) -> Result<BlockSpec> {
        let (lambda, lambda_sigma, r, mu) = self.demo_block_parameters(q)?;
        let spec = BlockSpec::new(dir, lambda, lambda_sigma, r, mu)?;
        spec.check_ordering(DEFAULT_GAP)?;
        Ok(spec)
    }
}

/// Desk-scale block parameters `(λ, λσ, r, μ)` for a given major frequency.
pub fn demo_block_parameters(lambda: u64, eta: f64, gap: f64) -> Result<(u64, u64, u32, f64)> {
    if lambda % 10 != 0 || lambda == 0 {
        return Err(Error::Parameter(format!("λ = {lambda} must be a positive multiple of 10")));
    }
    let lf = lambda as f64;
    let theory_sigma = lf.powf(2.0 * eta - 1.0);
    let mut lambda_sigma = (10.0 * (lf * theory_sigma / 10.0).round()) as u64;
    lambda_sigma = lambda_sigma.clamp(10, lambda / 10 * 10);
    let sigma_inv = lf / lambda_sigma as f64;
    let theory_r = lf.powf(1.0 - 6.0 * eta).round().max(1.0) as u32;
    let theory_mu = lf.powf(1.0 - 4.0 * eta);
    let ok = |r: u32, mu: f64| {
        r as f64 >= gap && mu / r as f64 >= gap && sigma_inv / mu >= gap
    };
    let (r, mu) = if ok(theory_r, theory_mu) {
        (theory_r, theory_mu)
    } else {
        let mu = sigma_inv / gap;
        let r = theory_r.min((mu / gap).floor() as u32);
        if !ok(r, mu) {
            return Err(Error::Parameter(format!(
                "no admissible (r, μ) between 1 and σ⁻¹ = {sigma_inv} at gap {gap}"
            )));
        }
        (r, mu)
    };
    Ok((lambda, lambda_sigma, r, mu))
}

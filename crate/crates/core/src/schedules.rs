//! Closed-form stepsizes, noise factors and restart schedules.

use std::f64::consts::{E, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::ProblemConstants;

/// `√(3 + √3)`, the coupling factor of the deterministic stepsize.
pub fn sqrt_3_plus_sqrt_3() -> f64 {
    (3.0 + 3.0_f64.sqrt()).sqrt()
}

/// `√(2 + √2)`, the coupling factor of the stochastic stepsize.
pub fn sqrt_2_plus_sqrt_2() -> f64 {
    (2.0 + SQRT_2).sqrt()
}

/// Averaging weight `α_k = 2 / (k + 2)`.
#[inline]
pub fn alpha(k: u64) -> f64 {
    2.0 / (k as f64 + 2.0)
}

/// `η_k = (k + 2) / (2L + √(3+√3) L_H (k + 2))`
pub fn eta_agog(k: u64, l: f64, l_h: f64) -> Result<f64> {
    if !(l >= 0.0 && l_h >= 0.0) {
        return Err(Error::Degenerate(format!(
            "smoothness constants must be non-negative (L = {l}, L_H = {l_h})"
        )));
    }
    if l == 0.0 && l_h == 0.0 {
        return Err(Error::Degenerate("L = L_H = 0 leaves the stepsize unbounded".into()));
    }
    let kk = k as f64 + 2.0;
    Ok(kk / (2.0 * l + sqrt_3_plus_sqrt_3() * l_h * kk))
}

/// `η_k = (k + 2) / (4L + D + 4√(2+√2) L_H (k + 2))`
pub fn eta_sagog(k: u64, l: f64, l_h: f64, d: f64) -> Result<f64> {
    if !(l >= 0.0 && l_h >= 0.0 && d >= 0.0) {
        return Err(Error::Degenerate(format!(
            "stochastic stepsize needs non-negative L, L_H, D (got {l}, {l_h}, {d})"
        )));
    }
    if l == 0.0 && l_h == 0.0 && d == 0.0 {
        return Err(Error::Degenerate("L = L_H = D = 0 leaves the stepsize unbounded".into()));
    }
    let kk = k as f64 + 2.0;
    Ok(kk / (4.0 * l + d + 4.0 * sqrt_2_plus_sqrt_2() * l_h * kk))
}

/// `A(K) = √((K+1)(K+2)(2K+3) / 6)`
pub fn noise_factor_a(k: u64) -> f64 {
    let k = k as f64;
    ((k + 1.0) * (k + 2.0) * (2.0 * k + 3.0) / 6.0).sqrt()
}

/// Overall noise level `σ = √(3√2 σ_H² + 2σ_F²)`.
pub fn combined_sigma(sigma_h: f64, sigma_f: f64) -> f64 {
    (3.0 * SQRT_2 * sigma_h * sigma_h + 2.0 * sigma_f * sigma_f).sqrt()
}

/// Damping term `D = σ A(K) / Γ₀`, with `Γ₀` bounding `‖z₀ - z*‖`.
pub fn damping(sigma: f64, k: u64, gamma0: f64) -> Result<f64> {
    if sigma == 0.0 {
        return Ok(0.0);
    }
    if !(gamma0 > 0.0) {
        return Err(Error::config(format!(
            "initial-distance bound must be positive, got {gamma0}"
        )));
    }
    Ok(sigma * noise_factor_a(k) / gamma0)
}

/// Constants after the change of variables `ŷ = √(μ_g/μ_f) y`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledConstants {
    pub l: f64,
    pub l_h: f64,
    pub mu: f64,
    /// Multiplier `μ_f / μ_g` applied to the y-block stepsize.
    pub y_ratio: f64,
}

impl ScaledConstants {
    /// Constants used without rescaling: `L = L_f ∨ L_g`,
    /// `L_H = (I_xx ∨ I_yy) + I_xy`, `μ = μ_f ∧ μ_g`.
    pub fn unscaled(c: &ProblemConstants) -> Self {
        Self {
            l: c.l(),
            l_h: c.l_h(),
            mu: c.mu(),
            y_ratio: 1.0,
        }
    }

    /// [`scaling_reduce`] when both moduli are positive, [`Self::unscaled`]
    /// otherwise.
    pub fn effective(c: &ProblemConstants) -> Self {
        scaling_reduce(c).unwrap_or_else(|_| Self::unscaled(c))
    }
}

/// Rescales unequal strong-convexity moduli into a single-stepsize problem:
/// `L = L_f ∨ (μ_f/μ_g) L_g`, `L_H = I_xx ∨ I_xy √(μ_f/μ_g) ∨ I_yy (μ_f/μ_g)`,
/// `μ = μ_f`, and the y-block stepsize is `η_k μ_f/μ_g`.
pub fn scaling_reduce(c: &ProblemConstants) -> Result<ScaledConstants> {
    if !(c.mu_f > 0.0 && c.mu_g > 0.0) {
        return Err(Error::Degenerate(format!(
            "scaling needs μ_f, μ_g > 0 (got {}, {}); regularize first",
            c.mu_f, c.mu_g
        )));
    }
    let r = c.mu_f / c.mu_g;
    Ok(ScaledConstants {
        l: c.l_f.max(r * c.l_g),
        l_h: c.i_xx.max(c.i_xy * r.sqrt()).max(c.i_yy * r),
        mu: c.mu_f,
        y_ratio: r,
    })
}

/// `K_n = ⌈√(8eL/μ) ∨ 4e√(3+√3) L_H/μ⌉`, which makes each restart epoch
/// contract the squared distance by at least `1/e`.
pub fn epoch_length(l: f64, mu: f64, l_h: f64) -> Result<u64> {
    if !(mu > 0.0) {
        return Err(Error::Degenerate(format!("epoch length needs μ > 0, got {mu}")));
    }
    let a = (8.0 * E * l / mu).sqrt();
    let b = 4.0 * E * sqrt_3_plus_sqrt_3() * l_h / mu;
    Ok((a.max(b).ceil() as u64).max(1))
}

/// `N = ⌈ln(d₀ / target)⌉` epochs of `1/e` contraction, at least zero.
pub fn epoch_count(sq_dist0: f64, target_sq: f64) -> u64 {
    if !(sq_dist0 > 0.0 && target_sq > 0.0) || sq_dist0 <= target_sq {
        return 0;
    }
    let ratio = (sq_dist0 / target_sq).ln();
    // ln(e^k) can land a hair above k.
    let rounded = ratio.round();
    if (ratio - rounded).abs() <= 1e-12 * rounded.max(1.0) {
        return rounded as u64;
    }
    ratio.ceil() as u64
}

/// `⌈8√(e λ_max(BᵀB) / λ_min(BᵀB))⌉` for bilinear restarts.
pub fn bilinear_epoch_length(lambda_max: f64, lambda_min: f64) -> Result<u64> {
    if !(lambda_min > 0.0) {
        return Err(Error::Degenerate(format!(
            "bilinear epoch length needs λ_min > 0, got {lambda_min}"
        )));
    }
    Ok(((8.0 * (E * lambda_max / lambda_min).sqrt()).ceil() as u64).max(1))
}

/// Right-hand side of the AG-OG rate:
/// `(4L/(μ(K+1)²) + 2√(3+√3) L_H/(μ(K+1))) ‖z₀ - z*‖²`.
pub fn rate_bound(k: u64, l: f64, mu: f64, l_h: f64, sq_dist0: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::Degenerate(format!("rate bound needs μ > 0, got {mu}")));
    }
    let k1 = k as f64 + 1.0;
    Ok((4.0 * l / (mu * k1 * k1) + 2.0 * sqrt_3_plus_sqrt_3() * l_h / (mu * k1)) * sq_dist0)
}

/// Right-hand side of the bilinear rate: `64κ/(K+1)² ‖z₀ - z*‖²` with
/// `κ = λ_max(BᵀB)/λ_min(BᵀB)`.
pub fn bilinear_rate_bound(k: u64, lambda_max: f64, lambda_min: f64, sq_dist0: f64) -> Result<f64> {
    if !(lambda_min > 0.0) {
        return Err(Error::Degenerate(format!("bilinear bound needs λ_min > 0, got {lambda_min}")));
    }
    let k1 = k as f64 + 1.0;
    Ok(64.0 * lambda_max / (lambda_min * k1 * k1) * sq_dist0)
}

/// How `η_k` is produced for a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StepRule {
    /// Deterministic AG-OG stepsize from `(L, L_H)`.
    Agog { l: f64, l_h: f64 },
    /// Stochastic AG-OG stepsize with damping `D`.
    Sagog { l: f64, l_h: f64, d: f64 },
    Constant { eta: f64 },
}

impl StepRule {
    #[inline]
    pub fn eta(&self, k: u64) -> f64 {
        match *self {
            StepRule::Agog { l, l_h } => {
                let kk = k as f64 + 2.0;
                kk / (2.0 * l + sqrt_3_plus_sqrt_3() * l_h * kk)
            }
            StepRule::Sagog { l, l_h, d } => {
                let kk = k as f64 + 2.0;
                kk / (4.0 * l + d + 4.0 * sqrt_2_plus_sqrt_2() * l_h * kk)
            }
            StepRule::Constant { eta } => eta,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StepRule::Agog { l, l_h } => eta_agog(0, l, l_h).map(|_| ()),
            StepRule::Sagog { l, l_h, d } => eta_sagog(0, l, l_h, d).map(|_| ()),
            StepRule::Constant { eta } if eta > 0.0 && eta.is_finite() => Ok(()),
            StepRule::Constant { eta } => {
                Err(Error::Degenerate(format!("constant stepsize must be positive, got {eta}")))
            }
        }
    }
}

/// Every derived parameter of one run (or one restart epoch).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSet {
    pub rule: StepRule,
    pub y_ratio: f64,
    pub constants: ScaledConstants,
    /// Stochastic damping term, zero for deterministic runs.
    pub d: f64,
    /// `A(K)` for the horizon the damping was computed for.
    pub a_k: f64,
    pub epoch_len: Option<u64>,
    pub n_epochs: Option<u64>,
}

impl ScheduleSet {
    fn from_constants(rule: StepRule, constants: ScaledConstants) -> Result<Self> {
        rule.validate()?;
        Ok(Self {
            rule,
            y_ratio: constants.y_ratio,
            constants,
            d: 0.0,
            a_k: 0.0,
            epoch_len: None,
            n_epochs: None,
        })
    }

    /// Deterministic AG-OG without rescaling.
    pub fn agog(c: &ProblemConstants) -> Result<Self> {
        let s = ScaledConstants::unscaled(c);
        Self::from_constants(StepRule::Agog { l: s.l, l_h: s.l_h }, s)
    }

    /// Deterministic AG-OG on rescaled constants with a y-block multiplier.
    pub fn agog_scaled(c: &ProblemConstants) -> Result<Self> {
        let s = scaling_reduce(c)?;
        Self::from_constants(StepRule::Agog { l: s.l, l_h: s.l_h }, s)
    }

    /// [`Self::agog_scaled`] when both moduli are positive, [`Self::agog`]
    /// otherwise.
    pub fn agog_effective(c: &ProblemConstants) -> Result<Self> {
        let s = ScaledConstants::effective(c);
        Self::from_constants(StepRule::Agog { l: s.l, l_h: s.l_h }, s)
    }

    /// Any rule over the given constants.
    pub fn with_rule(rule: StepRule, constants: ScaledConstants) -> Result<Self> {
        Self::from_constants(rule, constants)
    }

    /// Stochastic AG-OG for horizon `k` with `D = σ A(K) / Γ₀`.
    pub fn sagog(constants: ScaledConstants, sigma: f64, k: u64, gamma0: f64) -> Result<Self> {
        let d = damping(sigma, k, gamma0)?;
        let rule = StepRule::Sagog {
            l: constants.l,
            l_h: constants.l_h,
            d,
        };
        let mut s = Self::from_constants(rule, constants)?;
        s.d = d;
        s.a_k = noise_factor_a(k);
        Ok(s)
    }

    /// Constant stepsize on the given constants (bilinear and direct variants).
    pub fn constant(eta: f64, constants: ScaledConstants) -> Result<Self> {
        Self::from_constants(StepRule::Constant { eta }, constants)
    }

    #[inline]
    pub fn eta(&self, k: u64) -> f64 {
        self.rule.eta(k)
    }

    #[inline]
    pub fn alpha(&self, k: u64) -> f64 {
        alpha(k)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs()
    }

    #[test]
    fn eta_agog_examples() {
        assert_eq!(eta_agog(0, 1.0, 0.0).unwrap(), 1.0);
        // 2 / (128 + 2√(3+√3)) and 4 / (8 + 4√(3+√3)), evaluated by hand.
        assert!(close(eta_agog(0, 64.0, 1.0).unwrap(), 0.015_111_4, 1e-5));
        assert!(close(eta_agog(2, 4.0, 1.0).unwrap(), 0.239_502, 1e-5));
        assert!(matches!(eta_agog(0, 0.0, 0.0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn eta_sagog_examples() {
        assert!(close(eta_sagog(0, 1.0, 1.0, 0.0).unwrap(), 0.106_484, 1e-5));
        assert_eq!(eta_sagog(0, 1.0, 0.0, 4.0).unwrap(), 0.25);
        assert!(eta_sagog(0, 0.0, 0.0, 0.0).is_err());
        let d = damping(1.0, 9, 385f64.sqrt()).unwrap();
        assert!(close(d, 1.0, 1e-14));
    }

    #[test]
    fn noise_factor_examples() {
        assert_eq!(noise_factor_a(0), 1.0);
        assert!(close(noise_factor_a(1), 5f64.sqrt(), 1e-15));
        assert!(close(noise_factor_a(9), 385f64.sqrt(), 1e-15));
        assert!(close(noise_factor_a(9), 19.6214, 1e-5));
        let big = 1_000_000u64;
        assert!(close(noise_factor_a(big), (big as f64).powf(1.5) / 3f64.sqrt(), 1e-5));
    }

    #[test]
    fn combined_sigma_examples() {
        assert_eq!(combined_sigma(0.0, 0.0), 0.0);
        assert!(close(combined_sigma(1.0, 0.0), 2.059_77, 1e-5));
        assert!(close(combined_sigma(0.0, 1.0), SQRT_2, 1e-15));
    }

    #[test]
    fn scaling_examples() {
        let same = ProblemConstants::new(4.0, 9.0, 1.0, 1.0, 0.0, 2.0, 0.0).unwrap();
        let s = scaling_reduce(&same).unwrap();
        assert_eq!((s.l, s.l_h, s.y_ratio), (9.0, 2.0, 1.0));

        let fig1b = ProblemConstants::new(64.0, 1.0, 1.0, 1.0 / 64.0, 0.0, 1.0, 0.0).unwrap();
        let s = scaling_reduce(&fig1b).unwrap();
        assert_eq!((s.l, s.l_h, s.y_ratio, s.mu), (64.0, 8.0, 64.0, 1.0));

        let c = ProblemConstants::new(1.0, 1.0, 1.0, 0.25, 3.0, 1.0, 0.0).unwrap();
        assert_eq!(scaling_reduce(&c).unwrap().l_h, 3.0);

        let csc = ProblemConstants::new(1.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0).unwrap();
        assert!(scaling_reduce(&csc).is_err());
    }

    #[test]
    fn epoch_length_examples() {
        assert_eq!(epoch_length(1.0, 1.0, 0.0).unwrap(), 5);
        assert_eq!(epoch_length(100.0, 1.0, 0.0).unwrap(), 47);
        assert_eq!(epoch_length(1.0, 1.0, 10.0).unwrap(), 237);
        assert!(epoch_length(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn epoch_count_examples() {
        assert_eq!(epoch_count(1.0, 1.0), 0);
        assert_eq!(epoch_count(E.powi(3), 1.0), 3);
        assert_eq!(epoch_count(1.0, 1e-8), 19);
        assert_eq!(epoch_count(0.5, 1.0), 0);
    }

    #[test]
    fn bilinear_epoch_examples() {
        assert_eq!(bilinear_epoch_length(1.0, 1.0).unwrap(), 14);
        assert_eq!(bilinear_epoch_length(100.0, 1.0).unwrap(), 132);
        assert!(bilinear_epoch_length(1.0, 0.0).is_err());
        // K + 1 = 8√(eκ) gives 64κ/(K+1)² = 1/e.
        let kappa: f64 = 37.0;
        let k1 = 8.0 * (E * kappa).sqrt();
        assert!(close(64.0 * kappa / (k1 * k1), 1.0 / E, 1e-15));
    }

    #[test]
    fn rate_bound_examples() {
        // 4·64/1001² + 2√(3+√3)/1001
        let b = rate_bound(1000, 64.0, 1.0, 1.0, 1.0).unwrap();
        let expect = 256.0 / 1_002_001.0 + 2.0 * sqrt_3_plus_sqrt_3() / 1001.0;
        assert!(close(b, expect, 1e-15));
        assert!(rate_bound(3, 1.0, 0.0, 1.0, 1.0).is_err());
        assert!(close(bilinear_rate_bound(13, 1.0, 1.0, 1.0).unwrap(), 64.0 / 196.0, 1e-15));
    }

    #[test]
    fn deterministic_stepsize_contract() {
        let l_h = 1.7;
        let bound = (1.0 / (3.0 + 3f64.sqrt())).sqrt() + 1e-15;
        let limit = 1.0 / (sqrt_3_plus_sqrt_3() * l_h);
        let mut prev = 0.0;
        for k in (0..=1_000_000u64).step_by(997) {
            let eta = eta_agog(k, 5.0, l_h).unwrap();
            assert!(l_h * eta <= bound);
            assert!(eta >= prev && eta <= limit);
            prev = eta;
        }
    }

    #[test]
    fn stochastic_stepsize_limit() {
        let eta = eta_sagog(10_000_000, 3.0, 2.0, 0.0).unwrap();
        let limit = 1.0 / (4.0 * sqrt_2_plus_sqrt_2() * 2.0);
        assert!(close(eta, limit, 1e-6));
    }

    #[test]
    fn stochastic_telescoping_increment_is_constant() {
        let (l, l_h, d) = (3.0, 2.0, 5.0);
        let expect = 4.0 * sqrt_2_plus_sqrt_2() * l_h;
        let mut prev = eta_sagog(0, l, l_h, d).unwrap();
        for k in 1..=10_000u64 {
            let eta = eta_sagog(k, l, l_h, d).unwrap();
            let cur = (k as f64 + 2.0) / eta;
            let inc = cur - (k as f64 + 1.0) / prev;
            // the difference cancels, so the error scales with `cur`
            assert!((inc - expect).abs() <= 64.0 * f64::EPSILON * cur, "k = {k}: {inc} vs {expect}");
            prev = eta;
        }
    }
}

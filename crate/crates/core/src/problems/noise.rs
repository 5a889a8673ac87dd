//! Stochastic oracles with counter-based noise streams.
//!
//! Noise for evaluation `j` of a given kind is drawn from a generator keyed
//! by `(seed, kind, j)` alone, so a run's samples do not depend on the order
//! in which other code touched the oracle.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{CallCounts, GradientSource, OracleBundle, ProblemFamily};
use crate::pair::PairVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// Exact gradient plus isotropic Gaussian noise with `E‖ζ‖² = σ²`.
    Additive,
    /// Fresh entrywise `N(0, σ²)` perturbation of the game matrices per call;
    /// `sigma_h` applies to the coupling matrix, `sigma_f` to `A₁` and `A₃`.
    MatrixPerturbation,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub sigma_h: f64,
    pub sigma_f: f64,
    pub seed: u64,
}

/// Stream ids for the two oracle kinds.
const STREAM_H: u64 = 0x48;
const STREAM_F: u64 = 0x46;

/// Generator for call `index` of stream `kind`. Each call owns a disjoint
/// 2³² word window of the ChaCha keystream.
fn call_rng(seed: u64, kind: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(kind);
    rng.set_word_pos(u128::from(index) << 32);
    rng
}

impl NoiseModel {
    pub fn additive(sigma_h: f64, sigma_f: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::Additive,
            sigma_h,
            sigma_f,
            seed,
        }
    }

    pub fn is_silent(&self) -> bool {
        self.sigma_h == 0.0 && self.sigma_f == 0.0
    }

    /// Second-moment bounds `(σ_H, σ_F)` to feed the stochastic schedules.
    ///
    /// Additive noise satisfies them exactly. Matrix perturbations are
    /// state-dependent, so their bound holds on the ball `‖z‖ ≤ radius`;
    /// callers pass `2‖z₀ - z*‖ + ‖z*‖`.
    pub fn effective_sigmas(&self, dims: (usize, usize), radius: f64) -> (f64, f64) {
        match self.kind {
            NoiseKind::Additive => (self.sigma_h, self.sigma_f),
            NoiseKind::MatrixPerturbation => {
                let k = dims.0.max(dims.1) as f64;
                (
                    self.sigma_h * k.sqrt() * radius,
                    self.sigma_f * (2.0 * (k + 1.0)).sqrt() * radius,
                )
            }
        }
    }
}

/// A deterministic bundle wrapped with a noise model. Each run should own
/// its own instance (distinct seed) to keep streams independent.
#[derive(Clone, Debug)]
pub struct StochasticOracle {
    bundle: OracleBundle,
    noise: NoiseModel,
}

/// Wraps `oracle` with `noise`, checking the model fits the instance family.
pub fn wrap_stochastic(oracle: &OracleBundle, noise: NoiseModel) -> Result<StochasticOracle> {
    if !(noise.sigma_h >= 0.0 && noise.sigma_f >= 0.0)
        || !noise.sigma_h.is_finite()
        || !noise.sigma_f.is_finite()
    {
        return Err(Error::config("noise scales must be finite and non-negative"));
    }
    if noise.kind == NoiseKind::MatrixPerturbation {
        let family = oracle.family();
        if !matches!(family, ProblemFamily::QuadraticGame | ProblemFamily::Bilinear) {
            return Err(Error::Incompatible(format!(
                "matrix perturbation noise needs a quadratic or bilinear game, got {family}"
            )));
        }
        if oracle.objective().as_quadratic().is_none() {
            return Err(Error::Incompatible(
                "matrix perturbation noise needs explicit game matrices".into(),
            ));
        }
    }
    Ok(StochasticOracle {
        bundle: oracle.clone(),
        noise,
    })
}

impl StochasticOracle {
    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut s = self.clone();
        s.noise.seed = seed;
        s
    }

    fn perturb_h(&self, z: &PairVector, out: &mut PairVector, index: u64) {
        let sigma = self.noise.sigma_h;
        if sigma == 0.0 {
            return;
        }
        let mut rng = call_rng(self.noise.seed, STREAM_H, index);
        match self.noise.kind {
            NoiseKind::Additive => add_isotropic(out.as_mut_slice(), sigma, &mut rng),
            NoiseKind::MatrixPerturbation => {
                // B + E: x-block gains E y, y-block loses Eᵀx.
                let (x, y) = (z.x(), z.y());
                let (ox, oy) = out.split_mut();
                for i in 0..x.len() {
                    for j in 0..y.len() {
                        let e = sigma * normal(&mut rng);
                        ox[i] += e * y[j];
                        oy[j] -= e * x[i];
                    }
                }
            }
        }
    }

    fn perturb_f(&self, z: &PairVector, out: &mut PairVector, index: u64) {
        let sigma = self.noise.sigma_f;
        if sigma == 0.0 {
            return;
        }
        let mut rng = call_rng(self.noise.seed, STREAM_F, index);
        match self.noise.kind {
            NoiseKind::Additive => add_isotropic(out.as_mut_slice(), sigma, &mut rng),
            NoiseKind::MatrixPerturbation => {
                if self.bundle.family() == ProblemFamily::Bilinear {
                    return;
                }
                // ∇(xᵀ(A + E)x) = (A + Aᵀ)x + (E + Eᵀ)x
                let (ox, oy) = out.split_mut();
                add_symmetric_perturbation(z.x(), ox, sigma, &mut rng);
                add_symmetric_perturbation(z.y(), oy, sigma, &mut rng);
            }
        }
    }
}

#[inline]
fn normal(rng: &mut impl RngCore) -> f64 {
    StandardNormal.sample(rng)
}

fn add_isotropic(out: &mut [f64], sigma: f64, rng: &mut impl RngCore) {
    let scale = sigma / (out.len() as f64).sqrt();
    for v in out.iter_mut() {
        *v += scale * normal(rng);
    }
}

fn add_symmetric_perturbation(v: &[f64], out: &mut [f64], sigma: f64, rng: &mut impl RngCore) {
    let d = v.len();
    for i in 0..d {
        for j in 0..d {
            let e = sigma * normal(rng);
            out[i] += e * v[j];
            out[j] += e * v[i];
        }
    }
}

impl GradientSource for StochasticOracle {
    fn dims(&self) -> (usize, usize) {
        self.bundle.dims()
    }

    fn bundle(&self) -> &OracleBundle {
        &self.bundle
    }

    fn coupling_into(&self, z: &PairVector, out: &mut PairVector, calls: &mut CallCounts) {
        let index = calls.h;
        self.bundle.coupling_into(z, out, calls);
        self.perturb_h(z, out, index);
    }

    fn individual_into(&self, z: &PairVector, out: &mut PairVector, calls: &mut CallCounts) {
        let index = calls.f;
        self.bundle.individual_into(z, out, calls);
        self.perturb_f(z, out, index);
    }

    fn field_into(&self, z: &PairVector, out: &mut PairVector, calls: &mut CallCounts) {
        // Both perturbations are additive, so they stack on the exact field.
        let (hi, fi) = (calls.h, calls.f);
        self.bundle.field_into(z, out, calls);
        self.perturb_h(z, out, hi);
        self.perturb_f(z, out, fi);
    }
}

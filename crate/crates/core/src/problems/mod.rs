//! Synthetic instances with exactly known minimax points.
//!
//! Every generator returns a [`QuadraticObjective`]-backed [`OracleBundle`],
//! so `W` is affine and [`exact_minimax`] recovers `z*` with a dense solve.
//! Spectra are placed by orthogonal conjugation, which makes the attached
//! constants exact rather than estimated.

pub mod linalg;
pub mod noise;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{
    BilinearSpectrum, OracleBundle, ProblemConstants, ProblemFamily,
    QuadraticObjective,
};
use crate::pair::PairVector;

pub use noise::{wrap_stochastic, NoiseKind, NoiseModel, StochasticOracle};

/// Relative singular-value floor below which a matrix counts as singular.
const RANK_TOL: f64 = 1e-12;

fn default_seed() -> u64 {
    0
}

/// `xᵀA₁x + yᵀA₂x - yᵀA₃y + b₁ᵀx + b₂ᵀy` with prescribed spectra.
///
/// `a1_eigs` and `a3_eigs` give the eigenvalue range of `A₁` and `A₃`;
/// `a2_singular_values` the singular-value range of `A₂` (so the spectrum
/// of `A₂ᵀA₂` is its square). Values are spread evenly with both endpoints
/// hit exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticGameSpec {
    pub n: usize,
    pub m: usize,
    pub a1_eigs: [f64; 2],
    pub a3_eigs: [f64; 2],
    pub a2_singular_values: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b1: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b2: Option<Vec<f64>>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl QuadraticGameSpec {
    /// Spec hitting the requested constants: `L_f = 2λ_max(A₁)`,
    /// `μ_f = 2λ_min(A₁)`, likewise for `g`, and `L_H = ‖A₂‖`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_constants(
        n: usize,
        m: usize,
        l_f: f64,
        mu_f: f64,
        l_g: f64,
        mu_g: f64,
        l_h: f64,
        mu_h: f64,
        seed: u64,
    ) -> Self {
        Self {
            n,
            m,
            a1_eigs: [mu_f / 2.0, l_f / 2.0],
            a3_eigs: [mu_g / 2.0, l_g / 2.0],
            a2_singular_values: [mu_h, l_h],
            b1: None,
            b2: None,
            seed,
        }
    }
}

fn check_range(name: &str, r: [f64; 2], count: usize, positive: bool) -> Result<()> {
    let [lo, hi] = r;
    if !(lo.is_finite() && hi.is_finite()) || lo > hi || lo < 0.0 {
        return Err(Error::invalid(format!(
            "{name} range must satisfy 0 <= lo <= hi, got [{lo}, {hi}]"
        )));
    }
    if positive && lo <= 0.0 {
        return Err(Error::invalid(format!(
            "{name} lower end must be positive (strong convexity), got {lo}"
        )));
    }
    if count == 1 && lo != hi {
        return Err(Error::invalid(format!(
            "{name}: a single value cannot span [{lo}, {hi}]"
        )));
    }
    Ok(())
}

fn offset(name: &str, v: &Option<Vec<f64>>, len: usize) -> Result<DVector<f64>> {
    match v {
        None => Ok(DVector::zeros(len)),
        Some(v) if v.len() == len => Ok(DVector::from_column_slice(v)),
        Some(v) => Err(Error::invalid(format!(
            "{name} has length {}, expected {len}",
            v.len()
        ))),
    }
}

/// Builds the quadratic game of `spec`, with `z*` attached.
pub fn make_quadratic_game(spec: &QuadraticGameSpec) -> Result<OracleBundle> {
    let (n, m) = (spec.n, spec.m);
    if n == 0 || m == 0 {
        return Err(Error::invalid("quadratic game needs n, m >= 1"));
    }
    check_range("a1_eigs", spec.a1_eigs, n, true)?;
    check_range("a3_eigs", spec.a3_eigs, m, true)?;
    check_range("a2_singular_values", spec.a2_singular_values, n.min(m), false)?;
    let b1 = offset("b1", &spec.b1, n)?;
    let b2 = offset("b2", &spec.b2, m)?;

    let q1 = linalg::haar_orthogonal(n, &mut linalg::stream_rng(spec.seed, 1));
    let q3 = linalg::haar_orthogonal(m, &mut linalg::stream_rng(spec.seed, 2));
    let u = linalg::haar_orthogonal(m, &mut linalg::stream_rng(spec.seed, 3));
    let v = linalg::haar_orthogonal(n, &mut linalg::stream_rng(spec.seed, 4));

    let a1 = linalg::conjugate_diagonal(&q1, &linalg::linspace(spec.a1_eigs[0], spec.a1_eigs[1], n));
    let a3 = linalg::conjugate_diagonal(&q3, &linalg::linspace(spec.a3_eigs[0], spec.a3_eigs[1], m));
    let sv = linalg::linspace(
        spec.a2_singular_values[0],
        spec.a2_singular_values[1],
        n.min(m),
    );
    let a2 = linalg::with_singular_values(&u, &v, m, n, &sv);

    let constants = ProblemConstants::new(
        2.0 * spec.a1_eigs[1],
        2.0 * spec.a3_eigs[1],
        2.0 * spec.a1_eigs[0],
        2.0 * spec.a3_eigs[0],
        0.0,
        spec.a2_singular_values[1],
        0.0,
    )?;
    let objective = quadratic_game_objective(&a1, &a2, &a3, &b1, &b2)?;
    finish(objective, constants, ProblemFamily::QuadraticGame, true)
}

/// Quadratic game from explicit matrices (`A₂` is `m × n`). Constants come
/// from the spectra; `z*` is attached when the game has a unique one, so
/// singular (C-SC) games are accepted here.
pub fn make_quadratic_game_from_matrices(
    a1: &DMatrix<f64>,
    a2: &DMatrix<f64>,
    a3: &DMatrix<f64>,
    b1: &DVector<f64>,
    b2: &DVector<f64>,
) -> Result<OracleBundle> {
    let objective = quadratic_game_objective(a1, a2, a3, b1, b2)?;
    let sym = |a: &DMatrix<f64>| (a + a.transpose()) * 0.5;
    let (lo1, hi1) = linalg::sym_extreme_eigs(&sym(a1));
    let (lo3, hi3) = linalg::sym_extreme_eigs(&sym(a3));
    if lo1 < -1e-12 * hi1.abs().max(1.0) || lo3 < -1e-12 * hi3.abs().max(1.0) {
        return Err(Error::invalid("A1 and A3 must be positive semidefinite"));
    }
    let constants = ProblemConstants::new(
        2.0 * hi1,
        2.0 * hi3,
        2.0 * lo1.max(0.0),
        2.0 * lo3.max(0.0),
        0.0,
        linalg::op_norm(a2),
        0.0,
    )?;
    finish(objective, constants, ProblemFamily::QuadraticGame, false)
}

fn quadratic_game_objective(
    a1: &DMatrix<f64>,
    a2: &DMatrix<f64>,
    a3: &DMatrix<f64>,
    b1: &DVector<f64>,
    b2: &DVector<f64>,
) -> Result<QuadraticObjective> {
    let (m, n) = a2.shape();
    if a1.shape() != (n, n) || a3.shape() != (m, m) || b1.len() != n || b2.len() != m {
        return Err(Error::invalid(format!(
            "quadratic game blocks inconsistent with A2 of shape {m}x{n}"
        )));
    }
    // f = xᵀA₁x + b₁ᵀx, g = yᵀA₃y - b₂ᵀy, I = xᵀA₂ᵀy.
    let sym2 = |a: &DMatrix<f64>| a + a.transpose();
    QuadraticObjective::new(
        sym2(a1),
        b1.clone(),
        sym2(a3),
        -b2,
        a2.transpose(),
        DVector::zeros(n),
        DVector::zeros(m),
    )
}

fn finish(
    objective: QuadraticObjective,
    constants: ProblemConstants,
    family: ProblemFamily,
    require_optimum: bool,
) -> Result<OracleBundle> {
    let bundle = OracleBundle::new(Arc::new(objective), constants, family)?;
    match exact_minimax(&bundle) {
        Ok(z) => bundle.with_optimum(z),
        Err(e) if require_optimum => Err(e),
        Err(_) => Ok(bundle),
    }
}

/// Solves `M z* = -q` where `W(z) = M z + q`.
///
/// Fails with [`Error::NoUniqueOptimum`] when `M` is numerically singular.
pub fn exact_minimax(oracle: &OracleBundle) -> Result<PairVector> {
    let quad = oracle.objective().as_quadratic().ok_or_else(|| {
        Error::Unsupported("exact minimax needs an affine gradient field".into())
    })?;
    let (mat, q) = quad.linear_field();
    let (smin, smax) = linalg::extreme_singular_values(&mat);
    if smax == 0.0 || smin <= RANK_TOL * smax {
        return Err(Error::NoUniqueOptimum(format!(
            "field matrix is singular (σ_min = {smin:e}, σ_max = {smax:e})"
        )));
    }
    let lu = mat.clone().lu();
    let rhs = -&q;
    let mut z = lu
        .solve(&rhs)
        .ok_or_else(|| Error::NoUniqueOptimum("LU factorization failed".into()))?;
    // One step of iterative refinement.
    let resid = &rhs - &mat * &z;
    if let Some(dz) = lu.solve(&resid) {
        z += dz;
    }
    let resid = (&mat * &z + &q).norm();
    let tol = 1e-10 * (smax * z.norm() + q.norm());
    if resid > tol.max(f64::MIN_POSITIVE) {
        return Err(Error::NoUniqueOptimum(format!(
            "linear solve residual {resid:e} exceeds {tol:e}"
        )));
    }
    PairVector::from_concat(z.as_slice().to_vec(), quad.n())
}

/// `I(x, y) = xᵀBy + u_xᵀx + u_yᵀy` with `f = g = 0`.
///
/// Give either an explicit row-major `matrix` or `singular_values` (placed
/// between seeded Haar factors).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BilinearGameSpec {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub singular_values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_x: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u_y: Option<Vec<f64>>,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl BilinearGameSpec {
    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let matrix = (0..n)
            .map(|i| (0..n).map(|j| if i == j { values[i] } else { 0.0 }).collect())
            .collect();
        Self {
            n,
            matrix: Some(matrix),
            singular_values: None,
            u_x: None,
            u_y: None,
            seed: 0,
        }
    }
}

pub fn make_bilinear_game(spec: &BilinearGameSpec) -> Result<OracleBundle> {
    let n = spec.n;
    if n == 0 {
        return Err(Error::invalid("bilinear game needs n >= 1"));
    }
    let b = match (&spec.matrix, &spec.singular_values) {
        (Some(rows), None) => {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(Error::invalid(format!("matrix must be {n}x{n}")));
            }
            DMatrix::from_fn(n, n, |i, j| rows[i][j])
        }
        (None, Some(sv)) => {
            if sv.len() != n {
                return Err(Error::invalid(format!(
                    "need {n} singular values, got {}",
                    sv.len()
                )));
            }
            let u = linalg::haar_orthogonal(n, &mut linalg::stream_rng(spec.seed, 3));
            let v = linalg::haar_orthogonal(n, &mut linalg::stream_rng(spec.seed, 4));
            linalg::with_singular_values(&u, &v, n, n, sv)
        }
        _ => {
            return Err(Error::invalid(
                "bilinear game needs exactly one of `matrix` or `singular_values`",
            ))
        }
    };
    let u_x = offset("u_x", &spec.u_x, n)?;
    let u_y = offset("u_y", &spec.u_y, n)?;
    bilinear_from_matrix(b, u_x, u_y)
}

/// Bilinear game from an explicit square full-rank `B`.
pub fn bilinear_from_matrix(
    b: DMatrix<f64>,
    u_x: DVector<f64>,
    u_y: DVector<f64>,
) -> Result<OracleBundle> {
    let n = b.nrows();
    if b.ncols() != n {
        return Err(Error::invalid("bilinear coupling must be square"));
    }
    let (smin, smax) = linalg::extreme_singular_values(&b);
    if !(smax > 0.0) || smin <= RANK_TOL * smax {
        return Err(Error::invalid(format!(
            "B must have full rank (σ_min = {smin:e}, σ_max = {smax:e})"
        )));
    }
    let objective = QuadraticObjective::new(
        DMatrix::zeros(n, n),
        DVector::zeros(n),
        DMatrix::zeros(n, n),
        DVector::zeros(n),
        b,
        u_x,
        u_y,
    )?;
    let constants = ProblemConstants::new(0.0, 0.0, 0.0, 0.0, 0.0, smax, 0.0)?;
    let spectrum = BilinearSpectrum {
        lambda_min: smin * smin,
        lambda_max: smax * smax,
    };
    Ok(finish(objective, constants, ProblemFamily::Bilinear, true)?
        .with_bilinear_spectrum(spectrum))
}

fn default_samples() -> usize {
    2000
}

fn default_mspbe_mu() -> f64 {
    1.0
}

/// Policy-evaluation saddle `min_x max_y -yᵀAx - ½‖y‖²_C + bᵀy + (μ/2)‖x‖²`
/// built from a seeded synthetic Markov chain with Gaussian features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MspbeSpec {
    pub n_states: usize,
    pub feature_dim: usize,
    pub gamma: f64,
    #[serde(default = "default_mspbe_mu")]
    pub mu: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

/// Empirical `(A, b, C)` of a sampled trajectory.
pub fn mspbe_statistics(spec: &MspbeSpec) -> Result<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
    if !(0.0..1.0).contains(&spec.gamma) {
        return Err(Error::invalid(format!(
            "discount must lie in [0, 1), got {}",
            spec.gamma
        )));
    }
    if spec.n_states == 0 || spec.feature_dim == 0 || spec.samples == 0 {
        return Err(Error::invalid("MSPBE needs states, features and samples"));
    }
    let d = spec.feature_dim;
    let s = spec.n_states;
    let features = linalg::gaussian_matrix(s, d, &mut linalg::stream_rng(spec.seed, 10));
    let mut rng = linalg::stream_rng(spec.seed, 11);
    let transitions: Vec<Vec<f64>> = (0..s)
        .map(|_| {
            let row: Vec<f64> = (0..s).map(|_| rng.random::<f64>() + 1e-3).collect();
            let total: f64 = row.iter().sum();
            row.into_iter().map(|p| p / total).collect()
        })
        .collect();
    let rewards: Vec<f64> = (0..s).map(|_| rng.random::<f64>()).collect();

    let mut a = DMatrix::zeros(d, d);
    let mut b = DVector::zeros(d);
    let mut c = DMatrix::zeros(d, d);
    let mut state = 0usize;
    for _ in 0..spec.samples {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut next = s - 1;
        for (j, p) in transitions[state].iter().enumerate() {
            acc += p;
            if u < acc {
                next = j;
                break;
            }
        }
        let phi = features.row(state).transpose();
        let phi_next = features.row(next).transpose();
        let td = &phi - &phi_next * spec.gamma;
        a += &phi * td.transpose();
        c += &phi * phi.transpose();
        b += &phi * rewards[state];
        state = next;
    }
    let inv = 1.0 / spec.samples as f64;
    Ok((a * inv, b * inv, c * inv))
}

pub fn make_mspbe(spec: &MspbeSpec) -> Result<OracleBundle> {
    if !(spec.mu > 0.0) {
        return Err(Error::invalid(format!(
            "MSPBE regularizer must be positive, got {}",
            spec.mu
        )));
    }
    let (a, b, c) = mspbe_statistics(spec)?;
    mspbe_from_matrices(&a, &b, &c, spec.mu)
}

/// Saddle form of the MSPBE for given `(A, b, C)`; `mu = 0` leaves `f = 0`.
pub fn mspbe_from_matrices(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    c: &DMatrix<f64>,
    mu: f64,
) -> Result<OracleBundle> {
    let d = a.nrows();
    if a.shape() != (d, d) || c.shape() != (d, d) || b.len() != d || mu < 0.0 {
        return Err(Error::invalid("MSPBE needs square A, C and matching b, mu >= 0"));
    }
    let (cmin, cmax) = linalg::sym_extreme_eigs(c);
    if !(cmin > RANK_TOL * cmax) {
        return Err(Error::invalid(format!(
            "feature covariance C is rank deficient (λ_min = {cmin:e})"
        )));
    }
    // f = (μ/2)‖x‖², g = ½yᵀCy - bᵀy, I = -yᵀAx = xᵀ(-Aᵀ)y.
    let objective = QuadraticObjective::new(
        DMatrix::identity(d, d) * mu,
        DVector::zeros(d),
        c.clone(),
        -b,
        -a.transpose(),
        DVector::zeros(d),
        DVector::zeros(d),
    )?;
    let constants = ProblemConstants::new(mu, cmax, mu, cmin, 0.0, linalg::op_norm(a), 0.0)?;
    finish(objective, constants, ProblemFamily::Mspbe, true)
}

/// Penalized robust least squares `½‖Ax - y‖² - ρ‖y - y₀‖²` with `A` of
/// shape `m × n`, `x ∈ ℝⁿ`, `y ∈ ℝᵐ`; `y₀ = A x_true + e` with `‖e‖ = radius`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustLsSpec {
    pub n: usize,
    pub m: usize,
    pub rho: f64,
    pub radius: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

pub fn make_robust_ls(spec: &RobustLsSpec) -> Result<OracleBundle> {
    if spec.n == 0 || spec.m == 0 {
        return Err(Error::invalid("robust least squares needs n, m >= 1"));
    }
    if !(spec.radius >= 0.0) {
        return Err(Error::invalid("radius must be non-negative"));
    }
    let mut rng = linalg::stream_rng(spec.seed, 20);
    let a = linalg::gaussian_matrix(spec.m, spec.n, &mut rng) / (spec.m as f64).sqrt();
    let x_true = linalg::gaussian_vector(spec.n, &mut rng);
    let e = linalg::gaussian_vector(spec.m, &mut rng);
    let e = if e.norm() > 0.0 { e.normalize() * spec.radius } else { e };
    let y0 = &a * x_true + e;
    robust_ls_from_matrices(&a, &y0, spec.rho)
}

pub fn robust_ls_from_matrices(a: &DMatrix<f64>, y0: &DVector<f64>, rho: f64) -> Result<OracleBundle> {
    if !(rho > 0.5) {
        return Err(Error::invalid(format!(
            "penalty rho must exceed 1/2 for strong concavity, got {rho}"
        )));
    }
    let (m, n) = a.shape();
    if y0.len() != m {
        return Err(Error::invalid("y0 must have one entry per row of A"));
    }
    // f = ½xᵀAᵀAx, I = -yᵀAx, g = (ρ - ½)‖y‖² - 2ρ y₀ᵀy (+ const).
    let ata = a.transpose() * a;
    let (lo, hi) = linalg::sym_extreme_eigs(&ata);
    let mu_g = 2.0 * rho - 1.0;
    let objective = QuadraticObjective::new(
        ata,
        DVector::zeros(n),
        DMatrix::identity(m, m) * mu_g,
        y0 * (-2.0 * rho),
        -a.transpose(),
        DVector::zeros(n),
        DVector::zeros(m),
    )?;
    let constants = ProblemConstants::new(hi, mu_g, lo.max(0.0), mu_g, 0.0, linalg::op_norm(a), 0.0)?;
    finish(objective, constants, ProblemFamily::RobustLs, true)
}

/// Any of the instance families, as it appears under `problem` in a config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProblemSpec {
    Quadratic(QuadraticGameSpec),
    Bilinear(BilinearGameSpec),
    Mspbe(MspbeSpec),
    RobustLs(RobustLsSpec),
}

impl ProblemSpec {
    pub fn build(&self) -> Result<OracleBundle> {
        match self {
            ProblemSpec::Quadratic(s) => make_quadratic_game(s),
            ProblemSpec::Bilinear(s) => make_bilinear_game(s),
            ProblemSpec::Mspbe(s) => make_mspbe(s),
            ProblemSpec::RobustLs(s) => make_robust_ls(s),
        }
    }

    pub fn family(&self) -> ProblemFamily {
        match self {
            ProblemSpec::Quadratic(_) => ProblemFamily::QuadraticGame,
            ProblemSpec::Bilinear(_) => ProblemFamily::Bilinear,
            ProblemSpec::Mspbe(_) => ProblemFamily::Mspbe,
            ProblemSpec::RobustLs(_) => ProblemFamily::RobustLs,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{field_w, CallCounts};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn weak_coupling_constants() {
        let spec = QuadraticGameSpec::from_constants(8, 8, 64.0, 1.0, 64.0, 1.0, 1.0, 0.1, 7);
        assert_eq!(spec.a1_eigs, [0.5, 32.0]);
        let o = make_quadratic_game(&spec).unwrap();
        let c = o.constants();
        assert_eq!((c.l_f, c.mu_f, c.l_g, c.mu_g, c.l_h()), (64.0, 1.0, 64.0, 1.0, 1.0));

        // Spectrum fidelity of the constructed matrices.
        let q = o.objective().as_quadratic().unwrap();
        let (lo, hi) = linalg::sym_extreme_eigs(&q.hess_f);
        assert!(rel(lo, 1.0) < 1e-10 && rel(hi, 64.0) < 1e-10);
        let (lo, hi) = linalg::sym_extreme_eigs(&q.hess_g);
        assert!(rel(lo, 1.0) < 1e-10 && rel(hi, 64.0) < 1e-10);
        let (smin, smax) = linalg::extreme_singular_values(&q.coupling);
        assert!(rel(smin, 0.1) < 1e-10 && rel(smax, 1.0) < 1e-10);
    }

    #[test]
    fn decoupled_game_without_offsets_has_zero_optimum() {
        let spec = QuadraticGameSpec::from_constants(3, 2, 4.0, 1.0, 2.0, 1.0, 0.0, 0.0, 1);
        let o = make_quadratic_game(&spec).unwrap();
        assert!(o.optimum().unwrap().norm() < 1e-14);
    }

    #[test]
    fn non_positive_mu_is_rejected() {
        let spec = QuadraticGameSpec::from_constants(3, 3, 4.0, 0.0, 2.0, 1.0, 1.0, 0.5, 1);
        assert!(matches!(make_quadratic_game(&spec), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn identity_game_matches_grid_search() {
        // A1 = A3 = A2 = I, b1 = (1, 1), b2 = 0, n = m = 2.
        let i2 = DMatrix::<f64>::identity(2, 2);
        let o = make_quadratic_game_from_matrices(
            &i2,
            &i2,
            &i2,
            &DVector::from_column_slice(&[1.0, 1.0]),
            &DVector::zeros(2),
        )
        .unwrap();
        let z = o.optimum().unwrap().clone();
        // Separable per coordinate pair (x_i, y_i): x² + xy - y² + x. Grid
        // search the saddle: minimize over x the max over y.
        let obj = |x: f64, y: f64| x * x + x * y - y * y + x;
        let grid: Vec<f64> = (0..=2000).map(|i| -1.0 + i as f64 * 1e-3).collect();
        let (mut best_x, mut best_val) = (0.0, f64::INFINITY);
        for &x in &grid {
            let inner = grid.iter().map(|&y| obj(x, y)).fold(f64::NEG_INFINITY, f64::max);
            if inner < best_val {
                best_val = inner;
                best_x = x;
            }
        }
        let best_y = grid
            .iter()
            .copied()
            .max_by(|a, b| obj(best_x, *a).partial_cmp(&obj(best_x, *b)).unwrap())
            .unwrap();
        for i in 0..2 {
            assert!((z.x()[i] - best_x).abs() <= 1e-3, "{} vs {best_x}", z.x()[i]);
            assert!((z.y()[i] - best_y).abs() <= 1e-3, "{} vs {best_y}", z.y()[i]);
        }
    }

    #[test]
    fn bilinear_offsets_shift_the_optimum() {
        let mut spec = BilinearGameSpec::diagonal(&[1.0, 1.0]);
        spec.u_x = Some(vec![1.0, 1.0]);
        let o = make_bilinear_game(&spec).unwrap();
        let z = o.optimum().unwrap();
        assert_eq!(z.as_slice(), &[0.0, 0.0, -1.0, -1.0]);
        let mut calls = CallCounts::default();
        assert!(field_w(&o, z, &mut calls).unwrap().norm() == 0.0);
    }

    #[test]
    fn bilinear_spectrum_of_diagonal() {
        let o = make_bilinear_game(&BilinearGameSpec::diagonal(&[1.0, 10.0])).unwrap();
        assert!(rel(o.constants().l_h(), 10.0) < 1e-14);
        let s = o.bilinear_spectrum().unwrap();
        assert!(rel(s.lambda_min, 1.0) < 1e-12);
        assert!(rel(s.condition(), 100.0) < 1e-12);
        let c = o.constants();
        assert_eq!((c.l_f, c.l_g, c.mu_f, c.mu_g), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn bilinear_singular_values_survive_rotation() {
        let theta: f64 = 0.7;
        let (s, c) = theta.sin_cos();
        let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let b = rot * DMatrix::from_diagonal(&DVector::from_column_slice(&[2.0, 5.0]));
        let o = bilinear_from_matrix(b, DVector::zeros(2), DVector::zeros(2)).unwrap();
        let sp = o.bilinear_spectrum().unwrap();
        assert!(rel(sp.lambda_min, 4.0) < 1e-12 && rel(sp.lambda_max, 25.0) < 1e-12);
    }

    #[test]
    fn rank_deficient_bilinear_is_rejected() {
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(bilinear_from_matrix(b, DVector::zeros(2), DVector::zeros(2)).is_err());
    }

    #[test]
    fn singular_field_has_no_unique_optimum() {
        // A1 singular and no coupling in the degenerate direction.
        let a1 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let a2 = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let a3 = DMatrix::<f64>::identity(2, 2);
        let o = make_quadratic_game_from_matrices(&a1, &a2, &a3, &DVector::zeros(2), &DVector::zeros(2))
            .unwrap();
        assert!(o.optimum().is_none());
        assert!(matches!(exact_minimax(&o), Err(Error::NoUniqueOptimum(_))));
    }

    #[test]
    fn scalar_mspbe_by_hand() {
        // -yx - ½y² + y + ½x²: stationarity gives x = y = ½.
        let one = DMatrix::from_element(1, 1, 1.0);
        let o = mspbe_from_matrices(&one, &DVector::from_element(1, 1.0), &one, 1.0).unwrap();
        let z = o.optimum().unwrap();
        assert!((z.x()[0] - 0.5).abs() < 1e-14 && (z.y()[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn mspbe_zero_discount_is_symmetric() {
        let spec = MspbeSpec {
            n_states: 6,
            feature_dim: 3,
            gamma: 0.0,
            mu: 1.0,
            samples: 500,
            seed: 4,
        };
        let (a, _b, c) = mspbe_statistics(&spec).unwrap();
        assert!((a - c).abs().max() < 1e-15);
    }

    #[test]
    fn mspbe_unregularized_optimum_solves_projected_bellman() {
        let spec = MspbeSpec {
            n_states: 12,
            feature_dim: 4,
            gamma: 0.9,
            mu: 1.0,
            samples: 3000,
            seed: 8,
        };
        let (a, b, c) = mspbe_statistics(&spec).unwrap();
        let o = mspbe_from_matrices(&a, &b, &c, 0.0).unwrap();
        let x_closed = a.clone().lu().solve(&b).unwrap();
        let z = o.optimum().unwrap();
        for i in 0..4 {
            assert!((z.x()[i] - x_closed[i]).abs() < 1e-9 * (1.0 + x_closed[i].abs()));
            assert!(z.y()[i].abs() < 1e-9);
        }
    }

    #[test]
    fn mspbe_seeded_residual() {
        let spec = MspbeSpec {
            n_states: 10,
            feature_dim: 5,
            gamma: 0.95,
            mu: 0.5,
            samples: 2000,
            seed: 3,
        };
        let o = make_mspbe(&spec).unwrap();
        let quad = o.objective().as_quadratic().unwrap();
        let (mat, q) = quad.linear_field();
        let z = DVector::from_column_slice(o.optimum().unwrap().as_slice());
        let resid = (&mat * &z + &q).norm();
        assert!(resid <= 1e-10 * (mat.norm() * z.norm() + q.norm()));
        assert!(make_mspbe(&MspbeSpec { gamma: 1.0, ..spec.clone() }).is_err());
    }

    #[test]
    fn robust_ls_scalar_by_hand() {
        // ½(x - y)² - (y - 1)²: x = y and y = 1.
        let a = DMatrix::from_element(1, 1, 1.0);
        let o = robust_ls_from_matrices(&a, &DVector::from_element(1, 1.0), 1.0).unwrap();
        let z = o.optimum().unwrap();
        assert!((z.x()[0] - 1.0).abs() < 1e-14 && (z.y()[0] - 1.0).abs() < 1e-14);
        let zero = robust_ls_from_matrices(&a, &DVector::zeros(1), 1.0).unwrap();
        assert!(zero.optimum().unwrap().norm() < 1e-15);
    }

    #[test]
    fn robust_ls_rho_boundary() {
        let spec = RobustLsSpec {
            n: 3,
            m: 4,
            rho: 0.6,
            radius: 0.1,
            seed: 2,
        };
        let o = make_robust_ls(&spec).unwrap();
        let quad = o.objective().as_quadratic().unwrap();
        let (mat, q) = quad.linear_field();
        let z = DVector::from_column_slice(o.optimum().unwrap().as_slice());
        assert!((&mat * &z + &q).norm() <= 1e-10 * (mat.norm() * z.norm() + q.norm()));
        assert!(matches!(
            make_robust_ls(&RobustLsSpec { rho: 0.5, ..spec }),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn problem_spec_json_rejects_unknown_keys() {
        let ok = r#"{"kind":"bilinear","n":2,"matrix":[[1,0],[0,2]]}"#;
        let spec: ProblemSpec = serde_json::from_str(ok).unwrap();
        assert_eq!(spec.family(), ProblemFamily::Bilinear);
        let bad = r#"{"kind":"bilinear","n":2,"matrix":[[1,0],[0,2]],"typo":1}"#;
        assert!(serde_json::from_str::<ProblemSpec>(bad).is_err());
    }
}

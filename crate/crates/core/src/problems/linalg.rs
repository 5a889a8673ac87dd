//! Dense helpers for building instances with exact spectra.

use nalgebra::{DMatrix, DVector};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Dimension up to which operator norms come from a full SVD.
const SVD_LIMIT: usize = 512;
const POWER_TOL: f64 = 1e-12;
const POWER_MAX_ITERS: usize = 10_000;

/// Seeded generator for one construction stream.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut impl RngCore) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

pub fn gaussian_vector(len: usize, rng: &mut impl RngCore) -> DVector<f64> {
    DVector::from_fn(len, |_, _| StandardNormal.sample(rng))
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// signs of `R`'s diagonal folded into `Q`.
pub fn haar_orthogonal(n: usize, rng: &mut impl RngCore) -> DMatrix<f64> {
    let g = gaussian_matrix(n, n, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `count` evenly spaced values from `lo` to `hi`, endpoints exact.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (count - 1) as f64;
            let mut v: Vec<f64> = (0..count).map(|i| lo + step * i as f64).collect();
            v[count - 1] = hi;
            v
        }
    }
}

/// `Q diag(eigs) Qᵀ`, symmetrized so the result is exactly symmetric.
pub fn conjugate_diagonal(q: &DMatrix<f64>, eigs: &[f64]) -> DMatrix<f64> {
    let d = DMatrix::from_diagonal(&DVector::from_column_slice(eigs));
    let a = q * d * q.transpose();
    (&a + a.transpose()) * 0.5
}

/// `U Σ Vᵀ` for an `rows × cols` matrix with the given singular values.
pub fn with_singular_values(
    u: &DMatrix<f64>,
    v: &DMatrix<f64>,
    rows: usize,
    cols: usize,
    sv: &[f64],
) -> DMatrix<f64> {
    let mut sigma = DMatrix::zeros(rows, cols);
    for (i, s) in sv.iter().enumerate() {
        sigma[(i, i)] = *s;
    }
    u * sigma * v.transpose()
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn sym_extreme_eigs(a: &DMatrix<f64>) -> (f64, f64) {
    let eig = a.clone().symmetric_eigen();
    (eig.eigenvalues.min(), eig.eigenvalues.max())
}

/// Smallest and largest singular value.
pub fn extreme_singular_values(a: &DMatrix<f64>) -> (f64, f64) {
    if a.nrows() == 0 || a.ncols() == 0 {
        return (0.0, 0.0);
    }
    let sv = a.singular_values();
    (sv.min(), sv.max())
}

/// Operator 2-norm: SVD at desk scale, power iteration on `AᵀA` above it.
pub fn op_norm(a: &DMatrix<f64>) -> f64 {
    if a.nrows().max(a.ncols()) <= SVD_LIMIT {
        return extreme_singular_values(a).1;
    }
    power_op_norm(a)
}

pub(crate) fn power_op_norm(a: &DMatrix<f64>) -> f64 {
    let mut v = DVector::from_element(a.ncols(), 1.0 / (a.ncols() as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let w = a.tr_mul(&(a * &v));
        let next = w.norm();
        if next == 0.0 {
            return 0.0;
        }
        v = w / next;
        if (next - lambda).abs() <= POWER_TOL * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.sqrt()
}

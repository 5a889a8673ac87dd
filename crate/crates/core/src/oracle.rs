//! Oracle interfaces for `min_x max_y f(x) + I(x, y) - g(y)`.
//!
//! The gradient field splits as `W(z) = ∇F(z) + H(z)` with the individual
//! part `∇F(z) = [∇f(x); ∇g(y)]` and the coupling part
//! `H(z) = [∇ₓI(x, y); -∇ᵧI(x, y)]`. Every evaluation goes through a
//! [`CallCounts`] owned by the caller's run, so independent runs never share
//! counters.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, DVectorView, DVectorViewMut};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pair::PairVector;

/// Smoothness and strong-convexity constants of a separable instance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    pub l_f: f64,
    pub l_g: f64,
    pub mu_f: f64,
    pub mu_g: f64,
    pub i_xx: f64,
    pub i_xy: f64,
    pub i_yy: f64,
}

impl ProblemConstants {
    pub fn new(
        l_f: f64,
        l_g: f64,
        mu_f: f64,
        mu_g: f64,
        i_xx: f64,
        i_xy: f64,
        i_yy: f64,
    ) -> Result<Self> {
        let c = Self {
            l_f,
            l_g,
            mu_f,
            mu_g,
            i_xx,
            i_xy,
            i_yy,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.l_f, self.l_g, self.mu_f, self.mu_g, self.i_xx, self.i_xy, self.i_yy,
        ];
        if all.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid(format!(
                "constants must be finite and non-negative: {self:?}"
            )));
        }
        // Constants computed from spectra can disagree in the last ulp.
        let slack = |l: f64| l * (1.0 + 1e-12);
        if self.mu_f > slack(self.l_f) || self.mu_g > slack(self.l_g) {
            return Err(Error::invalid(format!(
                "need L_f >= mu_f and L_g >= mu_g: {self:?}"
            )));
        }
        Ok(())
    }

    /// Coupling smoothness `L_H = (I_xx ∨ I_yy) + I_xy`. This is the only
    /// place `L_H` is derived from the blockwise bounds.
    pub fn l_h(&self) -> f64 {
        self.i_xx.max(self.i_yy) + self.i_xy
    }

    /// `L = L_f ∨ L_g`
    pub fn l(&self) -> f64 {
        self.l_f.max(self.l_g)
    }

    /// `μ = μ_f ∧ μ_g`
    pub fn mu(&self) -> f64 {
        self.mu_f.min(self.mu_g)
    }
}

/// Which generator produced an instance. Noise models and specialized
/// solvers check this before running.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemFamily {
    QuadraticGame,
    Bilinear,
    Mspbe,
    RobustLs,
    Custom,
}

impl fmt::Display for ProblemFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ProblemFamily::QuadraticGame => "quadratic_game",
            ProblemFamily::Bilinear => "bilinear",
            ProblemFamily::Mspbe => "mspbe",
            ProblemFamily::RobustLs => "robust_ls",
            ProblemFamily::Custom => "custom",
        };
        f.write_str(s)
    }
}

/// Extreme eigenvalues of `BᵀB` for a bilinear game.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BilinearSpectrum {
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl BilinearSpectrum {
    pub fn condition(&self) -> f64 {
        self.lambda_max / self.lambda_min
    }
}

/// Gradient oracles of a separable objective.
///
/// Implementations must be pure: the same input always yields the same
/// output, and outputs keep the block dimensions of the inputs.
pub trait Objective: Send + Sync + fmt::Debug {
    fn dims(&self) -> (usize, usize);

    fn grad_f(&self, x: &[f64], out: &mut [f64]);

    fn grad_g(&self, y: &[f64], out: &mut [f64]);

    /// Writes `∇ₓI(x, y)` into `gx` and `∇ᵧI(x, y)` into `gy`.
    fn grad_coupling(&self, x: &[f64], y: &[f64], gx: &mut [f64], gy: &mut [f64]);

    /// `W(z)` written blockwise. The default combines the three oracles.
    fn field(&self, x: &[f64], y: &[f64], out_x: &mut [f64], out_y: &mut [f64]) {
        self.grad_coupling(x, y, out_x, out_y);
        let mut gf = vec![0.0; x.len()];
        let mut gg = vec![0.0; y.len()];
        self.grad_f(x, &mut gf);
        self.grad_g(y, &mut gg);
        for (o, g) in out_x.iter_mut().zip(&gf) {
            *o += g;
        }
        for (o, g) in out_y.iter_mut().zip(&gg) {
            *o = g - *o;
        }
    }

    fn f_value(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    fn g_value(&self, _y: &[f64]) -> Option<f64> {
        None
    }

    fn coupling_value(&self, _x: &[f64], _y: &[f64]) -> Option<f64> {
        None
    }

    fn as_quadratic(&self) -> Option<&QuadraticObjective> {
        None
    }
}

/// Quadratic separable objective
///
/// ```text
/// f(x)    = ½ xᵀPx + pᵀx
/// g(y)    = ½ yᵀQy + qᵀy
/// I(x, y) = xᵀBy + u_xᵀx + u_yᵀy + ½ xᵀG x - ½ yᵀJ y
/// ```
///
/// Every generator in [`crate::problems`] produces one of these, which makes
/// `W` affine and the minimax point a linear solve away.
#[derive(Clone, Debug)]
pub struct QuadraticObjective {
    pub hess_f: DMatrix<f64>,
    pub lin_f: DVector<f64>,
    pub hess_g: DMatrix<f64>,
    pub lin_g: DVector<f64>,
    /// `B`, an `n × m` matrix.
    pub coupling: DMatrix<f64>,
    pub u_x: DVector<f64>,
    pub u_y: DVector<f64>,
    pub coupling_xx: Option<DMatrix<f64>>,
    pub coupling_yy: Option<DMatrix<f64>>,
    f_zero: bool,
    g_zero: bool,
}

impl QuadraticObjective {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        hess_f: DMatrix<f64>,
        lin_f: DVector<f64>,
        hess_g: DMatrix<f64>,
        lin_g: DVector<f64>,
        coupling: DMatrix<f64>,
        u_x: DVector<f64>,
        u_y: DVector<f64>,
    ) -> Result<Self> {
        let n = coupling.nrows();
        let m = coupling.ncols();
        if n == 0 || m == 0 {
            return Err(Error::invalid("coupling matrix must be non-empty"));
        }
        let shapes_ok = hess_f.shape() == (n, n)
            && hess_g.shape() == (m, m)
            && lin_f.len() == n
            && lin_g.len() == m
            && u_x.len() == n
            && u_y.len() == m;
        if !shapes_ok {
            return Err(Error::invalid(format!(
                "inconsistent quadratic blocks for n={n}, m={m}"
            )));
        }
        let f_zero = hess_f.iter().all(|v| *v == 0.0) && lin_f.iter().all(|v| *v == 0.0);
        let g_zero = hess_g.iter().all(|v| *v == 0.0) && lin_g.iter().all(|v| *v == 0.0);
        Ok(Self {
            hess_f,
            lin_f,
            hess_g,
            lin_g,
            coupling,
            u_x,
            u_y,
            coupling_xx: None,
            coupling_yy: None,
            f_zero,
            g_zero,
        })
    }

    /// Adds the self-coupling blocks `½xᵀGx - ½yᵀJy` to `I`.
    pub fn with_self_coupling(
        mut self,
        gxx: Option<DMatrix<f64>>,
        jyy: Option<DMatrix<f64>>,
    ) -> Result<Self> {
        let (n, m) = self.coupling.shape();
        if gxx.as_ref().is_some_and(|g| g.shape() != (n, n))
            || jyy.as_ref().is_some_and(|j| j.shape() != (m, m))
        {
            return Err(Error::invalid("self-coupling block has the wrong shape"));
        }
        self.coupling_xx = gxx;
        self.coupling_yy = jyy;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.coupling.nrows()
    }

    pub fn m(&self) -> usize {
        self.coupling.ncols()
    }

    /// `(M, q)` with `W(z) = M z + q`.
    pub fn linear_field(&self) -> (DMatrix<f64>, DVector<f64>) {
        let (n, m) = (self.n(), self.m());
        let mut mat = DMatrix::zeros(n + m, n + m);
        let mut top_left = self.hess_f.clone();
        if let Some(g) = &self.coupling_xx {
            top_left += g;
        }
        let mut bottom_right = self.hess_g.clone();
        if let Some(j) = &self.coupling_yy {
            bottom_right += j;
        }
        mat.view_mut((0, 0), (n, n)).copy_from(&top_left);
        mat.view_mut((0, n), (n, m)).copy_from(&self.coupling);
        mat.view_mut((n, 0), (m, n))
            .copy_from(&(-self.coupling.transpose()));
        mat.view_mut((n, n), (m, m)).copy_from(&bottom_right);
        let mut offset = DVector::zeros(n + m);
        offset.rows_mut(0, n).copy_from(&(&self.lin_f + &self.u_x));
        offset.rows_mut(n, m).copy_from(&(&self.lin_g - &self.u_y));
        (mat, offset)
    }

    fn quad_form(mat: &DMatrix<f64>, v: &DVectorView<f64>) -> f64 {
        let mv = mat * v;
        v.dot(&mv)
    }
}

impl Objective for QuadraticObjective {
    fn dims(&self) -> (usize, usize) {
        (self.n(), self.m())
    }

    fn grad_f(&self, x: &[f64], out: &mut [f64]) {
        if self.f_zero {
            out.fill(0.0);
            return;
        }
        let xv = DVectorView::from_slice(x, x.len());
        let mut o = DVectorViewMut::from_slice(out, x.len());
        o.copy_from(&self.lin_f);
        o.gemv(1.0, &self.hess_f, &xv, 1.0);
    }

    fn grad_g(&self, y: &[f64], out: &mut [f64]) {
        if self.g_zero {
            out.fill(0.0);
            return;
        }
        let yv = DVectorView::from_slice(y, y.len());
        let mut o = DVectorViewMut::from_slice(out, y.len());
        o.copy_from(&self.lin_g);
        o.gemv(1.0, &self.hess_g, &yv, 1.0);
    }

    fn grad_coupling(&self, x: &[f64], y: &[f64], gx: &mut [f64], gy: &mut [f64]) {
        let xv = DVectorView::from_slice(x, x.len());
        let yv = DVectorView::from_slice(y, y.len());
        let mut ox = DVectorViewMut::from_slice(gx, x.len());
        ox.copy_from(&self.u_x);
        ox.gemv(1.0, &self.coupling, &yv, 1.0);
        if let Some(g) = &self.coupling_xx {
            ox.gemv(1.0, g, &xv, 1.0);
        }
        let mut oy = DVectorViewMut::from_slice(gy, y.len());
        oy.copy_from(&self.u_y);
        oy.gemv_tr(1.0, &self.coupling, &xv, 1.0);
        if let Some(j) = &self.coupling_yy {
            oy.gemv(-1.0, j, &yv, 1.0);
        }
    }

    fn field(&self, x: &[f64], y: &[f64], out_x: &mut [f64], out_y: &mut [f64]) {
        let xv = DVectorView::from_slice(x, x.len());
        let yv = DVectorView::from_slice(y, y.len());

        let mut ox = DVectorViewMut::from_slice(out_x, x.len());
        ox.copy_from(&self.u_x);
        ox.gemv(1.0, &self.coupling, &yv, 1.0);
        if let Some(g) = &self.coupling_xx {
            ox.gemv(1.0, g, &xv, 1.0);
        }
        if !self.f_zero {
            ox += &self.lin_f;
            ox.gemv(1.0, &self.hess_f, &xv, 1.0);
        }

        let mut oy = DVectorViewMut::from_slice(out_y, y.len());
        oy.copy_from(&self.u_y);
        oy.neg_mut();
        oy.gemv_tr(-1.0, &self.coupling, &xv, 1.0);
        if let Some(j) = &self.coupling_yy {
            oy.gemv(1.0, j, &yv, 1.0);
        }
        if !self.g_zero {
            oy += &self.lin_g;
            oy.gemv(1.0, &self.hess_g, &yv, 1.0);
        }
    }

    fn f_value(&self, x: &[f64]) -> Option<f64> {
        let xv = DVectorView::from_slice(x, x.len());
        Some(0.5 * Self::quad_form(&self.hess_f, &xv) + self.lin_f.dot(&xv))
    }

    fn g_value(&self, y: &[f64]) -> Option<f64> {
        let yv = DVectorView::from_slice(y, y.len());
        Some(0.5 * Self::quad_form(&self.hess_g, &yv) + self.lin_g.dot(&yv))
    }

    fn coupling_value(&self, x: &[f64], y: &[f64]) -> Option<f64> {
        let xv = DVectorView::from_slice(x, x.len());
        let yv = DVectorView::from_slice(y, y.len());
        let by = &self.coupling * yv;
        let mut v = xv.dot(&by) + self.u_x.dot(&xv) + self.u_y.dot(&yv);
        if let Some(g) = &self.coupling_xx {
            v += 0.5 * Self::quad_form(g, &xv);
        }
        if let Some(j) = &self.coupling_yy {
            v -= 0.5 * Self::quad_form(j, &yv);
        }
        Some(v)
    }

    fn as_quadratic(&self) -> Option<&QuadraticObjective> {
        Some(self)
    }
}

/// Per-run tallies of oracle evaluations. Exact, never sampled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallCounts {
    pub h: u64,
    pub f: u64,
}

impl CallCounts {
    /// Gradient queries in full-field units: a `W` evaluation costs one `H`
    /// and one `∇F` call, so this is the larger of the two tallies.
    pub fn queries(&self) -> u64 {
        self.h.max(self.f)
    }
}

/// An oracle bundle: objective, constants, and (for synthetic instances) the
/// exact minimax point. Immutable once built; share it freely across runs.
#[derive(Clone, Debug)]
pub struct OracleBundle {
    objective: Arc<dyn Objective>,
    constants: ProblemConstants,
    optimum: Option<PairVector>,
    family: ProblemFamily,
    bilinear: Option<BilinearSpectrum>,
}

/// Stationarity tolerance for an attached minimax point.
const OPTIMUM_TOL: f64 = 1e-8;

impl OracleBundle {
    pub fn new(
        objective: Arc<dyn Objective>,
        constants: ProblemConstants,
        family: ProblemFamily,
    ) -> Result<Self> {
        constants.validate()?;
        let (n, m) = objective.dims();
        if n == 0 || m == 0 {
            return Err(Error::invalid("objective blocks must be non-empty"));
        }
        Ok(Self {
            objective,
            constants,
            optimum: None,
            family,
            bilinear: None,
        })
    }

    /// Attaches `z*` after checking `‖W(z*)‖ ≤ 1e-8 (1 + ‖W(0)‖)`.
    pub fn with_optimum(mut self, zstar: PairVector) -> Result<Self> {
        zstar.check_dims(self.dims())?;
        let mut calls = CallCounts::default();
        let w_star = field_w(&self, &zstar, &mut calls)?;
        let w_zero = field_w(&self, &PairVector::zeros(zstar.n(), zstar.m()), &mut calls)?;
        let tol = OPTIMUM_TOL * (1.0 + w_zero.norm());
        if w_star.norm() > tol {
            return Err(Error::invalid(format!(
                "attached optimum is not stationary: ‖W(z*)‖ = {:e} > {:e}",
                w_star.norm(),
                tol
            )));
        }
        self.optimum = Some(zstar);
        Ok(self)
    }

    pub fn with_bilinear_spectrum(mut self, spectrum: BilinearSpectrum) -> Self {
        self.bilinear = Some(spectrum);
        self
    }

    pub fn objective(&self) -> &dyn Objective {
        self.objective.as_ref()
    }

    pub fn constants(&self) -> &ProblemConstants {
        &self.constants
    }

    pub fn optimum(&self) -> Option<&PairVector> {
        self.optimum.as_ref()
    }

    pub fn family(&self) -> ProblemFamily {
        self.family
    }

    pub fn bilinear_spectrum(&self) -> Option<BilinearSpectrum> {
        self.bilinear
    }

    pub fn dims(&self) -> (usize, usize) {
        self.objective.dims()
    }

    pub fn supports_values(&self) -> bool {
        let (n, m) = self.dims();
        let x = vec![0.0; n];
        let y = vec![0.0; m];
        self.objective.f_value(&x).is_some()
            && self.objective.g_value(&y).is_some()
            && self.objective.coupling_value(&x, &y).is_some()
    }
}

/// A source of (possibly noisy) `H` and `∇F` evaluations driving the solver
/// loops. Every method bumps the matching counters in `calls`.
pub trait GradientSource {
    fn dims(&self) -> (usize, usize);

    fn bundle(&self) -> &OracleBundle;

    /// `out <- H(z)`; one coupling call.
    fn coupling_into(&self, z: &PairVector, out: &mut PairVector, calls: &mut CallCounts);

    /// `out <- ∇F(z)`; one individual call.
    fn individual_into(&self, z: &PairVector, out: &mut PairVector, calls: &mut CallCounts);

    /// `out <- W(z)`; one call of each kind.
    fn field_into(&self, z: &PairVector, out: &mut PairVector, calls: &mut CallCounts);
}

impl GradientSource for OracleBundle {
    fn dims(&self) -> (usize, usize) {
        self.objective.dims()
    }

    fn bundle(&self) -> &OracleBundle {
        self
    }

    fn coupling_into(&self, z: &PairVector, out: &mut PairVector, calls: &mut CallCounts) {
        let (ox, oy) = out.split_mut();
        self.objective.grad_coupling(z.x(), z.y(), ox, oy);
        oy.iter_mut().for_each(|v| *v = -*v);
        calls.h += 1;
    }

    fn individual_into(&self, z: &PairVector, out: &mut PairVector, calls: &mut CallCounts) {
        let (ox, oy) = out.split_mut();
        self.objective.grad_f(z.x(), ox);
        self.objective.grad_g(z.y(), oy);
        calls.f += 1;
    }

    fn field_into(&self, z: &PairVector, out: &mut PairVector, calls: &mut CallCounts) {
        let (ox, oy) = out.split_mut();
        self.objective.field(z.x(), z.y(), ox, oy);
        calls.h += 1;
        calls.f += 1;
    }
}

/// `W(z) = [∇f(x) + ∇ₓI(x, y); -∇ᵧI(x, y) + ∇g(y)]`
pub fn field_w(oracle: &OracleBundle, z: &PairVector, calls: &mut CallCounts) -> Result<PairVector> {
    z.check_dims(oracle.dims())?;
    let mut out = PairVector::zeros(z.n(), z.m());
    oracle.field_into(z, &mut out, calls);
    Ok(out)
}

/// `H(z) = [∇ₓI(x, y); -∇ᵧI(x, y)]`
pub fn operator_h(
    oracle: &OracleBundle,
    z: &PairVector,
    calls: &mut CallCounts,
) -> Result<PairVector> {
    z.check_dims(oracle.dims())?;
    let mut out = PairVector::zeros(z.n(), z.m());
    oracle.coupling_into(z, &mut out, calls);
    Ok(out)
}

/// `∇F(z) = [∇f(x); ∇g(y)]`
pub fn grad_individual(
    oracle: &OracleBundle,
    z: &PairVector,
    calls: &mut CallCounts,
) -> Result<PairVector> {
    z.check_dims(oracle.dims())?;
    let mut out = PairVector::zeros(z.n(), z.m());
    oracle.individual_into(z, &mut out, calls);
    Ok(out)
}

/// Pointwise primal-dual gap `V(z, z') = F(z) - F(z') + ⟨H(z'), z - z'⟩`.
///
/// Needs function values, so only synthetic instances support it. The `H`
/// evaluation here is diagnostic and not charged to any run.
pub fn gap_v(oracle: &OracleBundle, z: &PairVector, zref: &PairVector) -> Result<f64> {
    z.check_dims(oracle.dims())?;
    zref.check_dims(oracle.dims())?;
    let obj = oracle.objective();
    let big_f = |p: &PairVector| -> Result<f64> {
        match (obj.f_value(p.x()), obj.g_value(p.y())) {
            (Some(f), Some(g)) => Ok(f + g),
            _ => Err(Error::Unsupported(
                "instance does not expose function values".into(),
            )),
        }
    };
    let mut scratch = CallCounts::default();
    let h_ref = operator_h(oracle, zref, &mut scratch)?;
    let diff = z.sub(zref);
    Ok(big_f(z)? - big_f(zref)? + h_ref.dot(&diff))
}

/// Saddle objective `f(x) + I(x, y) - g(y)`, when values are available.
pub fn objective_value(oracle: &OracleBundle, z: &PairVector) -> Result<f64> {
    z.check_dims(oracle.dims())?;
    let obj = oracle.objective();
    match (
        obj.f_value(z.x()),
        obj.coupling_value(z.x(), z.y()),
        obj.g_value(z.y()),
    ) {
        (Some(f), Some(i), Some(g)) => Ok(f + i - g),
        _ => Err(Error::Unsupported(
            "instance does not expose function values".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bilinear(b: DMatrix<f64>) -> OracleBundle {
        let n = b.nrows();
        let m = b.ncols();
        let obj = QuadraticObjective::new(
            DMatrix::zeros(n, n),
            DVector::zeros(n),
            DMatrix::zeros(m, m),
            DVector::zeros(m),
            b.clone(),
            DVector::zeros(n),
            DVector::zeros(m),
        )
        .unwrap();
        let norm = b.singular_values().max();
        let c = ProblemConstants::new(0.0, 0.0, 0.0, 0.0, 0.0, norm, 0.0).unwrap();
        OracleBundle::new(Arc::new(obj), c, ProblemFamily::Bilinear).unwrap()
    }

    fn pv(v: &[f64], n: usize) -> PairVector {
        PairVector::from_concat(v.to_vec(), n).unwrap()
    }

    #[test]
    fn field_on_identity_bilinear() {
        let o = bilinear(DMatrix::identity(2, 2));
        let mut calls = CallCounts::default();
        let w = field_w(&o, &pv(&[1.0, 0.0, 0.0, 1.0], 2), &mut calls).unwrap();
        assert_eq!(w.as_slice(), &[0.0, 1.0, -1.0, 0.0]);
        assert_eq!(calls, CallCounts { h: 1, f: 1 });
    }

    #[test]
    fn coupling_operator_examples() {
        let o = bilinear(DMatrix::identity(2, 2));
        let mut calls = CallCounts::default();
        let h = operator_h(&o, &pv(&[1.0, 2.0, 3.0, 4.0], 2), &mut calls).unwrap();
        assert_eq!(h.as_slice(), &[3.0, 4.0, -1.0, -2.0]);

        let o = bilinear(DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]));
        let h = operator_h(&o, &pv(&[1.0, 1.0, 1.0, 1.0], 2), &mut calls).unwrap();
        assert_eq!(h.as_slice(), &[2.0, 3.0, -2.0, -3.0]);
        assert_eq!(calls, CallCounts { h: 2, f: 0 });
    }

    #[test]
    fn zero_coupling_gives_zero_operator() {
        let o = bilinear(DMatrix::zeros(2, 3));
        let mut calls = CallCounts::default();
        let h = operator_h(&o, &pv(&[1.0, -2.0, 3.0, 4.0, 5.0], 2), &mut calls).unwrap();
        assert!(h.as_slice().iter().all(|v| *v == 0.0));
    }

    fn identity_quadratics(n: usize, m: usize) -> OracleBundle {
        let obj = QuadraticObjective::new(
            DMatrix::identity(n, n),
            DVector::zeros(n),
            DMatrix::identity(m, m),
            DVector::zeros(m),
            DMatrix::zeros(n, m),
            DVector::zeros(n),
            DVector::zeros(m),
        )
        .unwrap();
        let c = ProblemConstants::new(1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0).unwrap();
        OracleBundle::new(Arc::new(obj), c, ProblemFamily::Custom)
            .unwrap()
            .with_optimum(PairVector::zeros(n, m))
            .unwrap()
    }

    #[test]
    fn individual_gradient_of_identity_quadratic_is_identity() {
        let o = identity_quadratics(2, 2);
        let z = pv(&[1.5, -2.0, 0.25, 4.0], 2);
        let mut calls = CallCounts::default();
        let g = grad_individual(&o, &z, &mut calls).unwrap();
        assert_eq!(g, z);
        assert_eq!(calls, CallCounts { h: 0, f: 1 });
    }

    #[test]
    fn gap_of_pure_quadratic() {
        let o = identity_quadratics(2, 2);
        let z = pv(&[1.0, 2.0, -1.0, 0.5], 2);
        let zero = PairVector::zeros(2, 2);
        let v = gap_v(&o, &z, &zero).unwrap();
        assert!((v - 0.5 * z.norm_sq()).abs() < 1e-15);
        assert_eq!(gap_v(&o, &z, &z).unwrap(), 0.0);
    }

    #[derive(Debug)]
    struct GradientsOnly;

    impl Objective for GradientsOnly {
        fn dims(&self) -> (usize, usize) {
            (1, 1)
        }
        fn grad_f(&self, x: &[f64], out: &mut [f64]) {
            out[0] = x[0];
        }
        fn grad_g(&self, y: &[f64], out: &mut [f64]) {
            out[0] = y[0];
        }
        fn grad_coupling(&self, _x: &[f64], _y: &[f64], gx: &mut [f64], gy: &mut [f64]) {
            gx[0] = 0.0;
            gy[0] = 0.0;
        }
    }

    #[test]
    fn gap_without_values_is_unsupported() {
        let c = ProblemConstants::new(1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0).unwrap();
        let o = OracleBundle::new(Arc::new(GradientsOnly), c, ProblemFamily::Custom).unwrap();
        let z = PairVector::zeros(1, 1);
        assert!(matches!(gap_v(&o, &z, &z), Err(Error::Unsupported(_))));
        assert!(!o.supports_values());
        // The default field implementation combines the three oracles.
        let mut calls = CallCounts::default();
        let w = field_w(&o, &pv(&[2.0, 3.0], 1), &mut calls).unwrap();
        assert_eq!(w.as_slice(), &[2.0, 3.0]);
    }

    #[test]
    fn dimension_mismatch_is_a_configuration_error() {
        let o = identity_quadratics(2, 2);
        let mut calls = CallCounts::default();
        let bad = PairVector::zeros(3, 1);
        assert!(matches!(
            field_w(&o, &bad, &mut calls),
            Err(Error::DimensionMismatch { .. })
        ));
        assert_eq!(calls, CallCounts::default());
    }

    #[test]
    fn l_h_combines_blockwise_bounds() {
        let c = ProblemConstants::new(1.0, 1.0, 1.0, 1.0, 3.0, 1.0, 2.0).unwrap();
        assert_eq!(c.l_h(), 4.0);
        assert!(ProblemConstants::new(1.0, 1.0, 2.0, 1.0, 0.0, 0.0, 0.0).is_err());
        assert!(ProblemConstants::new(1.0, 1.0, 1.0, 1.0, -1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn non_stationary_optimum_is_rejected() {
        let o = identity_quadratics(1, 1);
        assert!(o.with_optimum(pv(&[1.0, 0.0], 1)).is_err());
    }
}

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::oracle::{Objective, OracleBundle, ProblemConstants, QuadraticObjective};
use crate::problems::exact_minimax;

/// `f(x) + (ε/2)‖x‖²` around any objective.
#[derive(Debug)]
struct Regularized {
    inner: Arc<dyn Objective>,
    eps: f64,
}

impl Objective for Regularized {
    fn dims(&self) -> (usize, usize) {
        self.inner.dims()
    }

    fn grad_f(&self, x: &[f64], out: &mut [f64]) {
        self.inner.grad_f(x, out);
        out.iter_mut().zip(x).for_each(|(o, v)| *o += self.eps * v);
    }

    fn grad_g(&self, y: &[f64], out: &mut [f64]) {
        self.inner.grad_g(y, out);
    }

    fn grad_coupling(&self, x: &[f64], y: &[f64], gx: &mut [f64], gy: &mut [f64]) {
        self.inner.grad_coupling(x, y, gx, gy);
    }

    fn f_value(&self, x: &[f64]) -> Option<f64> {
        let sq: f64 = x.iter().map(|v| v * v).sum();
        self.inner.f_value(x).map(|f| f + 0.5 * self.eps * sq)
    }

    fn g_value(&self, y: &[f64]) -> Option<f64> {
        self.inner.g_value(y)
    }

    fn coupling_value(&self, x: &[f64], y: &[f64]) -> Option<f64> {
        self.inner.coupling_value(x, y)
    }
}

/// Turns a convex-strongly-concave instance into an SC-SC one by adding
/// `(ε/2)‖x‖²` to `f`, so `μ_f` and `L_f` both grow by exactly `ε`. The
/// regularized minimax point is attached when it is unique.
pub fn regularize_csc(oracle: &OracleBundle, eps: f64) -> Result<OracleBundle> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::config(format!("regularization ε must be positive, got {eps}")));
    }
    let c = oracle.constants();
    let constants = ProblemConstants::new(
        c.l_f + eps,
        c.l_g,
        c.mu_f + eps,
        c.mu_g,
        c.i_xx,
        c.i_xy,
        c.i_yy,
    )?;
    let objective: Arc<dyn Objective> = match oracle.objective().as_quadratic() {
        Some(q) => {
            let n = q.n();
            let mut r = QuadraticObjective::new(
                &q.hess_f + DMatrix::identity(n, n) * eps,
                q.lin_f.clone(),
                q.hess_g.clone(),
                q.lin_g.clone(),
                q.coupling.clone(),
                q.u_x.clone(),
                q.u_y.clone(),
            )?;
            r = r.with_self_coupling(q.coupling_xx.clone(), q.coupling_yy.clone())?;
            Arc::new(r)
        }
        None => Arc::new(Regularized {
            inner: Arc::new(Wrapped(oracle.clone())),
            eps,
        }),
    };
    let mut bundle = OracleBundle::new(objective, constants, oracle.family())?;
    if let Some(spec) = oracle.bilinear_spectrum() {
        bundle = bundle.with_bilinear_spectrum(spec);
    }
    match exact_minimax(&bundle) {
        Ok(z) => bundle.with_optimum(z),
        Err(_) => Ok(bundle),
    }
}

/// Borrows another bundle's objective as a standalone one.
#[derive(Debug)]
struct Wrapped(OracleBundle);

impl Objective for Wrapped {
    fn dims(&self) -> (usize, usize) {
        self.0.dims()
    }
    fn grad_f(&self, x: &[f64], out: &mut [f64]) {
        self.0.objective().grad_f(x, out)
    }
    fn grad_g(&self, y: &[f64], out: &mut [f64]) {
        self.0.objective().grad_g(y, out)
    }
    fn grad_coupling(&self, x: &[f64], y: &[f64], gx: &mut [f64], gy: &mut [f64]) {
        self.0.objective().grad_coupling(x, y, gx, gy)
    }
    fn f_value(&self, x: &[f64]) -> Option<f64> {
        self.0.objective().f_value(x)
    }
    fn g_value(&self, y: &[f64]) -> Option<f64> {
        self.0.objective().g_value(y)
    }
    fn coupling_value(&self, x: &[f64], y: &[f64]) -> Option<f64> {
        self.0.objective().coupling_value(x, y)
    }
}

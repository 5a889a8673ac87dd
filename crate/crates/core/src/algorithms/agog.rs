use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use super::{norm_distortion, Budget, EpochSummary, Recorder, RunOptions, RunResult};
use crate::error::{Error, Result};
use crate::oracle::{CallCounts, GradientSource, OracleBundle, ProblemFamily};
use crate::pair::{sq_dist_unchecked, PairVector};
use crate::problems::NoiseModel;
use crate::schedules::{
    alpha, bilinear_epoch_length, combined_sigma, epoch_count, epoch_length,
    scaling_reduce, ScaledConstants, ScheduleSet,
};

/// Iterates of one AG-OG pass. `z_half` is `z_{k-1/2}` and `h_prev` the
/// (possibly noisy) coupling evaluation made there, reused by the next
/// half step.
#[derive(Clone, Debug)]
pub struct SolverState {
    pub z: PairVector,
    pub z_ag: PairVector,
    pub z_half: PairVector,
    pub h_prev: PairVector,
    pub k: u64,
    md: PairVector,
    gf: PairVector,
    h_new: PairVector,
}

/// `dst = base - e (a + b)` with `e = ex` on x and `e = ey` on y.
fn block_step(dst: &mut PairVector, base: &PairVector, a: &PairVector, b: &PairVector, ex: f64, ey: f64) {
    let n = base.n();
    let (dx, dy) = dst.split_mut();
    let (bs, as_, bs2) = (base.as_slice(), a.as_slice(), b.as_slice());
    for (i, d) in dx.iter_mut().enumerate() {
        *d = bs[i] - ex * (as_[i] + bs2[i]);
    }
    for (i, d) in dy.iter_mut().enumerate() {
        let j = n + i;
        *d = bs[j] - ey * (as_[j] + bs2[j]);
    }
}

fn block_step_in_place(z: &mut PairVector, a: &PairVector, b: &PairVector, ex: f64, ey: f64) {
    let n = z.n();
    let (as_, bs) = (a.as_slice(), b.as_slice());
    for (i, v) in z.as_mut_slice().iter_mut().enumerate() {
        let e = if i < n { ex } else { ey };
        *v -= e * (as_[i] + bs[i]);
    }
}

impl SolverState {
    /// Starts from `z_{-1/2} = z^ag_0 = z_0`, spending one coupling call on
    /// `H(z_0)`.
    pub fn new<S: GradientSource + ?Sized>(src: &S, z0: &PairVector, calls: &mut CallCounts) -> Self {
        let (n, m) = z0.dims();
        let mut h_prev = PairVector::zeros(n, m);
        src.coupling_into(z0, &mut h_prev, calls);
        Self {
            z: z0.clone(),
            z_ag: z0.clone(),
            z_half: z0.clone(),
            h_prev,
            k: 0,
            md: PairVector::zeros(n, m),
            gf: PairVector::zeros(n, m),
            h_new: PairVector::zeros(n, m),
        }
    }

    /// One iteration: one `∇F` call at `z^md_k` (skipped when `individual`
    /// is false) and one `H` call at `z_{k+1/2}`.
    pub fn step<S: GradientSource + ?Sized>(
        &mut self,
        src: &S,
        schedule: &ScheduleSet,
        individual: bool,
        calls: &mut CallCounts,
    ) {
        let a = alpha(self.k);
        let eta = schedule.eta(self.k);
        let eta_y = eta * schedule.y_ratio;
        if individual {
            self.md.set_lincomb(1.0 - a, &self.z_ag, a, &self.z);
            src.individual_into(&self.md, &mut self.gf, calls);
        }
        block_step(&mut self.z_half, &self.z, &self.h_prev, &self.gf, eta, eta_y);
        self.z_ag.lincomb_assign(1.0 - a, a, &self.z_half);
        src.coupling_into(&self.z_half, &mut self.h_new, calls);
        block_step_in_place(&mut self.z, &self.h_new, &self.gf, eta, eta_y);
        std::mem::swap(&mut self.h_prev, &mut self.h_new);
        self.k += 1;
    }

    /// `z^md_k` of the last step.
    pub fn z_md(&self) -> &PairVector {
        &self.md
    }
}

#[allow(clippy::too_many_arguments)]
fn run_epoch<S: GradientSource + ?Sized>(
    src: &S,
    rec: &mut Recorder<'_>,
    calls: &mut CallCounts,
    z0: &PairVector,
    k: u64,
    schedule: &ScheduleSet,
    individual: bool,
    epoch: u64,
) -> Result<SolverState> {
    let start_iter = rec.iter();
    let d0 = rec.sq_dist(z0);
    let mut st = SolverState::new(src, z0, calls);
    for i in 0..k {
        st.step(src, schedule, individual, calls);
        rec.step(epoch, &st.z_ag, &st.z, calls, i + 1 == k)?;
        if rec.stopped() {
            break;
        }
    }
    rec.end_epoch(EpochSummary {
        epoch,
        start_iter,
        iters: rec.iter() - start_iter,
        sq_dist_start: d0,
        sq_dist_end: rec.sq_dist(&st.z_ag),
        eta0: schedule.eta(0),
    });
    Ok(st)
}

fn check_horizon(k: u64) -> Result<()> {
    if k == 0 {
        return Err(Error::config("iteration count K must be at least 1"));
    }
    Ok(())
}

fn single_run<S: GradientSource + ?Sized>(
    src: &S,
    z0: &PairVector,
    k: u64,
    schedule: &ScheduleSet,
    individual: bool,
    name: &str,
    opts: &RunOptions,
) -> Result<RunResult> {
    check_horizon(k)?;
    schedule.rule.validate()?;
    let mut rec = Recorder::new(src.bundle(), z0, name, opts)?;
    let mut calls = CallCounts::default();
    let st = run_epoch(src, &mut rec, &mut calls, z0, k, schedule, individual, 0)?;
    Ok(rec.finish(st.z_ag, st.z, calls))
}

/// Deterministic AG-OG for `K` iterations. Returns `z^ag_K`.
pub fn agog_run<S: GradientSource + ?Sized>(
    src: &S,
    z0: &PairVector,
    k: u64,
    schedule: &ScheduleSet,
    opts: &RunOptions,
) -> Result<RunResult> {
    single_run(src, z0, k, schedule, true, "agog", opts)
}

/// S-AG-OG. Same control flow as [`agog_run`]; the noisy coupling sample
/// drawn at `z_{k+1/2}` is the one reused by the next half step.
pub fn sagog_run<S: GradientSource + ?Sized>(
    src: &S,
    z0: &PairVector,
    k: u64,
    schedule: &ScheduleSet,
    opts: &RunOptions,
) -> Result<RunResult> {
    single_run(src, z0, k, schedule, true, "sagog", opts)
}

/// Queries left for iterations of a new epoch that pays one setup call.
fn epoch_room(budget: &Budget, done_iters: u64, calls: &CallCounts) -> u64 {
    match *budget {
        Budget::Iterations(k) => k.saturating_sub(done_iters),
        Budget::Queries(q) => q.saturating_sub(calls.queries()).saturating_sub(1),
    }
}

/// Epoch driver shared by every restarted AG-OG flavour. `plan` returns the
/// length and schedule of epoch `n` given its starting point.
#[allow(clippy::too_many_arguments)]
fn restart_loop<S, P>(
    src: &S,
    z0: &PairVector,
    budget: &Budget,
    max_epochs: Option<u64>,
    individual: bool,
    name: &str,
    opts: &RunOptions,
    mut plan: P,
) -> Result<RunResult>
where
    S: GradientSource + ?Sized,
    P: FnMut(u64, &PairVector) -> Result<(u64, ScheduleSet)>,
{
    let mut rec = Recorder::new(src.bundle(), z0, name, opts)?;
    let mut calls = CallCounts::default();
    let mut start = z0.clone();
    let mut last_z = z0.clone();
    let mut epoch = 0u64;
    while max_epochs.map_or(true, |n| epoch < n) && !rec.stopped() {
        let room = epoch_room(budget, rec.iter(), &calls);
        if room == 0 {
            break;
        }
        let (len, schedule) = plan(epoch, &start)?;
        let len = len.min(room);
        let st = run_epoch(src, &mut rec, &mut calls, &start, len, &schedule, individual, epoch)?;
        start = st.z_ag;
        last_z = st.z;
        epoch += 1;
    }
    Ok(rec.finish(start, last_z, calls))
}

/// Constants the AG-OG schedules run on: rescaled when both moduli are
/// positive, raw otherwise.
pub(crate) fn effective_constants(bundle: &OracleBundle) -> ScaledConstants {
    ScaledConstants::effective(bundle.constants())
}

/// Restarted AG-OG with a caller-fixed epoch length, e.g. 100
/// iterates or [`epoch_length`]. Each epoch re-initializes `z_{-1/2} = z^ag_0 = z_0`
/// from the previous output.
pub fn agog_restart_epochs<S: GradientSource + ?Sized>(
    src: &S,
    z0: &PairVector,
    schedule: &ScheduleSet,
    epoch_len: u64,
    budget: &Budget,
    max_epochs: Option<u64>,
    opts: &RunOptions,
) -> Result<RunResult> {
    check_horizon(epoch_len)?;
    schedule.rule.validate()?;
    restart_loop(src, z0, budget, max_epochs, true, "agog_restart", opts, |_, _| {
        Ok((epoch_len, *schedule))
    })
}

/// Restarted AG-OG in benchmark mode: `N = ⌈ln(d₀/target)⌉` epochs of the
/// theory length `K_n`, each contracting the squared distance by `1/e`.
pub fn agog_restart_run<S: GradientSource + ?Sized>(
    src: &S,
    z0: &PairVector,
    target_sq: f64,
    opts: &RunOptions,
) -> Result<RunResult> {
    let bundle = src.bundle();
    let zstar = bundle.optimum().ok_or_else(|| {
        Error::Unsupported("target-driven restarts need the minimax point; pass an epoch count".into())
    })?;
    if !(target_sq > 0.0) {
        return Err(Error::config("run.target_sq must be positive"));
    }
    let schedule = ScheduleSet::agog_scaled(bundle.constants())?;
    let s = schedule.constants;
    let len = epoch_length(s.l, s.mu, s.l_h)?;
    let d0 = sq_dist_unchecked(z0, zstar) * norm_distortion(&schedule);
    let n = epoch_count(d0, target_sq);
    let mut sched = schedule;
    sched.epoch_len = Some(len);
    sched.n_epochs = Some(n);
    agog_restart_epochs(src, z0, &sched, len, &Budget::Iterations(u64::MAX), Some(n), opts)
}

/// Where the stochastic schedules get `Γ₀ ≥ ‖z₀ - z*‖`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaSource {
    /// Exact distance to the attached minimax point.
    Exact,
    /// Caller-supplied bound.
    Bound(f64),
}

impl GammaSource {
    fn resolve(&self, bundle: &OracleBundle, z0: &PairVector) -> Result<f64> {
        match *self {
            GammaSource::Exact => bundle
                .optimum()
                .map(|s| sq_dist_unchecked(z0, s).sqrt())
                .ok_or_else(|| Error::Unsupported("exact Γ₀ needs the minimax point; set a bound".into())),
            GammaSource::Bound(g) if g > 0.0 && g.is_finite() => Ok(g),
            GammaSource::Bound(g) => Err(Error::config(format!("Γ₀ bound must be positive, got {g}"))),
        }
    }
}

/// `σ` for the schedules, with matrix-perturbation noise bounded on the ball
/// `‖z‖ ≤ 2Γ₀ + ‖z*‖` (black-box: `‖z*‖ ≤ ‖z₀‖ + Γ₀`).
fn schedule_sigma(bundle: &OracleBundle, noise: &NoiseModel, z0: &PairVector, gamma0: f64) -> f64 {
    let zstar_norm = bundle.optimum().map_or(z0.norm() + gamma0, |s| s.norm());
    let (sh, sf) = noise.effective_sigmas(bundle.dims(), 2.0 * gamma0 + zstar_norm);
    combined_sigma(sh, sf)
}

/// Theory schedule of S-AG-OG for horizon `K`:
/// `η_k = (k+2)/(4L + D + 4√(2+√2)L_H(k+2))`, `D = σA(K)/Γ₀`.
pub fn sagog_schedule(
    bundle: &OracleBundle,
    noise: &NoiseModel,
    z0: &PairVector,
    k: u64,
    gamma: GammaSource,
) -> Result<ScheduleSet> {
    let gamma0 = gamma.resolve(bundle, z0)?;
    let sigma = schedule_sigma(bundle, noise, z0, gamma0);
    let constants = effective_constants(bundle);
    // Starting exactly at z* leaves nothing for the damping to protect.
    let sigma = if gamma0 == 0.0 { 0.0 } else { sigma };
    ScheduleSet::sagog(constants, sigma, k, gamma0)
}

/// Restarted S-AG-OG. Epochs use the deterministic length `K_n` while the
/// bias term dominates, then double in length so the variance term halves
/// per epoch. `D` is recomputed each epoch from its length and the current
/// `Γ₀` (exact distance in benchmark mode, predicted contraction of the
/// bound otherwise).
pub fn sagog_restart_run<S: GradientSource + ?Sized>(
    src: &S,
    noise: &NoiseModel,
    z0: &PairVector,
    budget: &Budget,
    gamma: GammaSource,
    opts: &RunOptions,
) -> Result<RunResult> {
    let bundle = src.bundle();
    let c = bundle.constants();
    let consts = scaling_reduce(c)?;
    let k_det = epoch_length(consts.l, consts.mu, consts.l_h)?;
    let gamma0 = gamma.resolve(bundle, z0)?;
    let sigma = schedule_sigma(bundle, noise, z0, gamma0);
    let distortion = consts.y_ratio.max(1.0 / consts.y_ratio);

    // Bias after n epochs is about d₀e⁻ⁿ; one epoch's variance floor is
    // about 4eσΓ/(μ√(K+1)). Switch to doubling once the first falls below
    // the second.
    let det_epochs = if sigma == 0.0 {
        u64::MAX
    } else {
        let d0 = gamma0 * gamma0 * distortion;
        let floor = 16.0 * E * E * sigma * sigma / (consts.mu * consts.mu * (k_det as f64 + 1.0));
        epoch_count(d0, floor)
    };
    let plan = |n: u64, start: &PairVector| -> Result<(u64, ScheduleSet)> {
        let len = if n < det_epochs {
            k_det
        } else {
            let shift = (n - det_epochs + 1).min(62) as u32;
            k_det.saturating_mul(1u64 << shift)
        };
        let g = match gamma {
            GammaSource::Exact => gamma.resolve(bundle, start)?,
            GammaSource::Bound(_) => {
                let det = n.min(det_epochs) as f64;
                let dbl = n.saturating_sub(det_epochs) as f64;
                gamma0 * (-det / 2.0).exp() * 0.5f64.powf(dbl / 2.0)
            }
        };
        let s = if g == 0.0 { 0.0 } else { sigma };
        let mut sched = ScheduleSet::sagog(consts, s, len, g.max(f64::MIN_POSITIVE))?;
        sched.epoch_len = Some(len);
        Ok((len, sched))
    };
    restart_loop(src, z0, budget, None, true, "sagog_restart", opts, plan)
}

fn bilinear_setup(bundle: &OracleBundle) -> Result<(ScaledConstants, f64, f64)> {
    if bundle.family() != ProblemFamily::Bilinear {
        return Err(Error::Incompatible(format!(
            "bilinear solvers need a bilinear game, got {}",
            bundle.family()
        )));
    }
    let spec = bundle
        .bilinear_spectrum()
        .ok_or_else(|| Error::Incompatible("bilinear instance lacks its BᵀB spectrum".into()))?;
    let consts = ScaledConstants::unscaled(bundle.constants());
    if !(consts.l_h > 0.0) {
        return Err(Error::Degenerate("bilinear coupling has zero norm".into()));
    }
    Ok((consts, spec.lambda_max, spec.lambda_min))
}

fn bilinear_schedule(consts: ScaledConstants, eta: f64) -> Result<ScheduleSet> {
    ScheduleSet::constant(eta, consts)
}

/// AG-OG on a bilinear game: `η = 1/(2L_H)`, `α_k = 2/(k+2)`, no individual
/// calls.
pub fn bilinear_agog_run<S: GradientSource + ?Sized>(
    src: &S,
    z0: &PairVector,
    k: u64,
    opts: &RunOptions,
) -> Result<RunResult> {
    let (consts, _, _) = bilinear_setup(src.bundle())?;
    let sched = bilinear_schedule(consts, 0.5 / consts.l_h)?;
    single_run(src, z0, k, &sched, false, "bilinear_agog", opts)
}

/// Restarted bilinear AG-OG with epochs of `⌈8√(eκ)⌉` iterations.
pub fn bilinear_agog_restart_run<S: GradientSource + ?Sized>(
    src: &S,
    z0: &PairVector,
    budget: &Budget,
    opts: &RunOptions,
) -> Result<RunResult> {
    let (consts, lmax, lmin) = bilinear_setup(src.bundle())?;
    let len = bilinear_epoch_length(lmax, lmin)?;
    let mut sched = bilinear_schedule(consts, 0.5 / consts.l_h)?;
    sched.epoch_len = Some(len);
    restart_loop(src, z0, budget, None, false, "bilinear_agog_restart", opts, |_, _| {
        Ok((len, sched))
    })
}

/// `η = 1/(2L_H√(1+β))`, the stochastic bilinear stepsize.
pub fn bilinear_stochastic_eta(l_h: f64, beta: f64) -> Result<f64> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(Error::config(format!("β must be non-negative, got {beta}")));
    }
    if !(l_h > 0.0) {
        return Err(Error::Degenerate("bilinear coupling has zero norm".into()));
    }
    Ok(1.0 / (2.0 * l_h * (1.0 + beta).sqrt()))
}

/// Stochastic bilinear AG-OG with `η = 1/(2L_H√(1+β))`.
pub fn bilinear_sagog_run<S: GradientSource + ?Sized>(
    src: &S,
    z0: &PairVector,
    k: u64,
    beta: f64,
    opts: &RunOptions,
) -> Result<RunResult> {
    let (consts, _, _) = bilinear_setup(src.bundle())?;
    let sched = bilinear_schedule(consts, bilinear_stochastic_eta(consts.l_h, beta)?)?;
    single_run(src, z0, k, &sched, false, "bilinear_sagog", opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{
        make_bilinear_game, make_quadratic_game, wrap_stochastic, BilinearGameSpec, QuadraticGameSpec,
    };
    use crate::schedules::rate_bound;

    fn game(seed: u64) -> OracleBundle {
        let mut spec = QuadraticGameSpec::from_constants(6, 4, 20.0, 1.0, 8.0, 0.5, 2.0, 0.0, seed);
        spec.b1 = Some(vec![0.3, -1.0, 0.2, 0.0, 0.5, 1.0]);
        spec.b2 = Some(vec![1.0, -0.5, 0.0, 2.0]);
        make_quadratic_game(&spec).unwrap()
    }

    fn offset_start(b: &OracleBundle, scale: f64) -> PairVector {
        let zs = b.optimum().unwrap();
        let dir: Vec<f64> = (0..zs.len()).map(|i| ((i * 7 + 3) % 5) as f64 - 2.0).collect();
        let d = PairVector::from_concat(dir, zs.n()).unwrap();
        zs.add(&d.scale(scale / d.norm()))
    }

    #[test]
    fn minimax_point_is_fixed() {
        let b = game(1);
        let zs = b.optimum().unwrap().clone();
        let sched = ScheduleSet::agog_scaled(b.constants()).unwrap();
        let r = agog_run(&b, &zs, 1, &sched, &RunOptions::default()).unwrap();
        let scale = 1.0 + zs.norm();
        assert!(r.final_z.sub(&zs).norm() <= 1e-9 * scale);
        assert!(r.final_ag.sub(&zs).norm() <= 1e-9 * scale);
    }

    #[test]
    fn call_accounting() {
        let b = game(2);
        let z0 = offset_start(&b, 1.0);
        let sched = ScheduleSet::agog_scaled(b.constants()).unwrap();
        let r = agog_run(&b, &z0, 50, &sched, &RunOptions::default()).unwrap();
        assert_eq!(r.calls, CallCounts { h: 51, f: 50 });
        assert_eq!(r.trace.rows.len(), 50);
        assert_eq!(r.trace.last().unwrap().queries(), 51);

        let bl = make_bilinear_game(&BilinearGameSpec::diagonal(&[1.0, 2.0])).unwrap();
        let z0 = PairVector::new(vec![1.0, 1.0], vec![-1.0, 0.5]).unwrap();
        let r = bilinear_agog_run(&bl, &z0, 30, &RunOptions::default()).unwrap();
        assert_eq!(r.calls, CallCounts { h: 31, f: 0 });
    }

    #[test]
    fn rate_and_nonexpansion_hold() {
        for seed in 0..4 {
            let b = game(seed);
            let z0 = offset_start(&b, 3.0);
            let sched = ScheduleSet::agog_scaled(b.constants()).unwrap();
            let r = agog_run(&b, &z0, 400, &sched, &RunOptions::default()).unwrap();
            let c = sched.constants;
            let dist = norm_distortion(&sched);
            for (row, it) in r.trace.rows.iter().zip(&r.iterate_sq_dist) {
                let bound = rate_bound(row.iter, c.l, c.mu, c.l_h, r.sq_dist0).unwrap() * dist;
                assert!(row.sq_dist <= bound * (1.0 + 1e-9), "seed {seed} k {}", row.iter);
                assert!(*it <= r.sq_dist0 * dist * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn identity_bilinear_meets_its_bound_at_thirteen() {
        let b = make_bilinear_game(&BilinearGameSpec::diagonal(&[1.0])).unwrap();
        let z0 = PairVector::new(vec![1.0], vec![1.0]).unwrap();
        let r = bilinear_agog_run(&b, &z0, 13, &RunOptions::default()).unwrap();
        for row in &r.trace.rows {
            let k1 = row.iter as f64 + 1.0;
            assert!(row.sq_dist <= 64.0 / (k1 * k1) * r.sq_dist0 * (1.0 + 1e-9));
        }
        assert!(r.trace.last().unwrap().sq_dist <= 64.0 / 196.0 * 2.0);
    }

    #[test]
    fn theory_restart_on_decoupled_quadratic() {
        // L = 100, μ = 1, L_H = 0: K_n = 47 and 19 epochs to reach 1e-8.
        let spec = QuadraticGameSpec::from_constants(3, 3, 100.0, 1.0, 100.0, 1.0, 0.0, 0.0, 5);
        let b = make_quadratic_game(&spec).unwrap();
        let z0 = offset_start(&b, 1.0);
        let r = agog_restart_run(&b, &z0, 1e-8, &RunOptions::default()).unwrap();
        assert_eq!(r.epochs.len(), 19);
        assert!(r.epochs.iter().all(|e| e.iters == 47));
        for e in &r.epochs {
            assert!(e.contraction() <= (-1.0f64).exp() * (1.0 + 1e-9));
        }
        assert!(r.trace.last().unwrap().sq_dist <= 1e-8);
        assert_eq!(r.calls, CallCounts { h: 19 * 48, f: 19 * 47 });
    }

    #[test]
    fn silent_noise_is_bitwise_exact() {
        let b = game(3);
        let z0 = offset_start(&b, 2.0);
        let sched = ScheduleSet::agog_scaled(b.constants()).unwrap();
        let opts = RunOptions::default();
        let exact = agog_run(&b, &z0, 80, &sched, &opts).unwrap();
        let quiet = wrap_stochastic(&b, NoiseModel::additive(0.0, 0.0, 9)).unwrap();
        let noisy = agog_run(&quiet, &z0, 80, &sched, &opts).unwrap();
        assert_eq!(exact.final_ag, noisy.final_ag);
        assert_eq!(exact.trace, noisy.trace);
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let b = game(4);
        let z0 = offset_start(&b, 2.0);
        let noise = NoiseModel::additive(0.5, 0.5, 11);
        let src = wrap_stochastic(&b, noise).unwrap();
        let sched = sagog_schedule(&b, &noise, &z0, 100, GammaSource::Exact).unwrap();
        assert!(sched.d > 0.0);
        let opts = RunOptions::default();
        let a = sagog_run(&src, &z0, 100, &sched, &opts).unwrap();
        let again = sagog_run(&src, &z0, 100, &sched, &opts).unwrap();
        assert_eq!(a.trace, again.trace);
        let other = sagog_run(&src.with_seed(12), &z0, 100, &sched, &opts).unwrap();
        assert_ne!(a.final_ag, other.final_ag);
    }

    #[test]
    fn doubling_epochs() {
        let b = game(6);
        let z0 = offset_start(&b, 5.0);
        let k_det = {
            let c = scaling_reduce(b.constants()).unwrap();
            epoch_length(c.l, c.mu, c.l_h).unwrap()
        };
        let quiet = NoiseModel::additive(0.0, 0.0, 0);
        let src = wrap_stochastic(&b, quiet).unwrap();
        let budget = Budget::Iterations(5 * k_det);
        let r = sagog_restart_run(&src, &quiet, &z0, &budget, GammaSource::Exact, &RunOptions::default())
            .unwrap();
        assert!(r.epochs.iter().all(|e| e.iters == k_det));

        let noise = NoiseModel::additive(1.0, 1.0, 3);
        let src = wrap_stochastic(&b, noise).unwrap();
        let budget = Budget::Iterations(60 * k_det);
        let r = sagog_restart_run(&src, &noise, &z0, &budget, GammaSource::Bound(5.0), &RunOptions::default())
            .unwrap();
        let lens: Vec<u64> = r.epochs.iter().map(|e| e.iters).collect();
        let first_long = lens.iter().position(|&l| l > k_det).unwrap();
        for w in lens[first_long..lens.len() - 1].windows(2) {
            assert_eq!(w[1], 2 * w[0]);
        }
        assert_eq!(r.iterations, 60 * k_det);
    }

    #[test]
    fn oversized_steps_diverge_with_partial_trace() {
        let b = game(7);
        let z0 = offset_start(&b, 1.0);
        let sched = ScheduleSet::constant(2.0, ScaledConstants::unscaled(b.constants())).unwrap();
        match agog_run(&b, &z0, 10_000, &sched, &RunOptions::default()) {
            Err(Error::Diverged { iter, partial, .. }) => {
                assert!(iter > 0 && iter < 10_000);
                assert_eq!(partial.rows.len() as u64, iter - 1);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn bilinear_rejects_other_families() {
        let b = game(8);
        let z0 = offset_start(&b, 1.0);
        assert!(matches!(
            bilinear_agog_run(&b, &z0, 5, &RunOptions::default()),
            Err(Error::Incompatible(_))
        ));
    }

    #[test]
    fn stop_threshold_ends_early() {
        let b = game(9);
        let z0 = offset_start(&b, 1.0);
        let sched = ScheduleSet::agog_scaled(b.constants()).unwrap();
        let opts = RunOptions { stop_sq: Some(1e-4), record_every: 1000, ..RunOptions::default() };
        let r = agog_run(&b, &z0, 100_000, &sched, &opts).unwrap();
        assert!(r.stopped);
        assert!(r.iterations < 100_000);
        assert!(r.trace.last().unwrap().sq_dist <= 1e-4);
        assert_eq!(r.trace.last().unwrap().iter, r.iterations);
    }
}

use super::agog::effective_constants;
use super::{Recorder, RunOptions, RunResult};
use crate::error::{Error, Result};
use crate::oracle::{CallCounts, GradientSource, OracleBundle};
use crate::pair::PairVector;
use crate::schedules::{alpha, sqrt_3_plus_sqrt_3, ScaledConstants, ScheduleSet};

fn check_horizon(k: u64) -> Result<()> {
    if k == 0 {
        return Err(Error::config("iteration count K must be at least 1"));
    }
    Ok(())
}

/// `η = 1/(2(L ∨ L_H))` on the raw constants.
pub fn ogda_eta(bundle: &OracleBundle) -> Result<f64> {
    let c = bundle.constants();
    let top = c.l().max(c.l_h());
    if !(top > 0.0) {
        return Err(Error::Degenerate("L = L_H = 0 leaves the stepsize unbounded".into()));
    }
    Ok(0.5 / top)
}

/// `η = 1/((1 + √(L/μ + (√(3+√3)L_H)²/μ²)) μ)` on rescaled constants.
pub fn agog_direct_eta(c: &ScaledConstants) -> Result<f64> {
    if !(c.mu > 0.0) {
        return Err(Error::Degenerate(format!(
            "AG-OG-Direct needs μ_f > 0, got {}",
            c.mu
        )));
    }
    let t = sqrt_3_plus_sqrt_3() * c.l_h / c.mu;
    Ok(1.0 / ((1.0 + (c.l / c.mu + t * t).sqrt()) * c.mu))
}

/// Single-call OGDA in past-extragradient form:
/// `z_{k+1/2} = z_k - ηW(z_{k-1/2})`, `z_{k+1} = z_k - ηW(z_{k+1/2})`.
#[derive(Clone, Debug)]
pub struct OgdaState {
    pub z: PairVector,
    pub z_half: PairVector,
    pub w_prev: PairVector,
    pub k: u64,
}

impl OgdaState {
    pub fn new<S: GradientSource + ?Sized>(src: &S, z0: &PairVector, calls: &mut CallCounts) -> Self {
        let mut w_prev = PairVector::zeros(z0.n(), z0.m());
        src.field_into(z0, &mut w_prev, calls);
        Self {
            z: z0.clone(),
            z_half: z0.clone(),
            w_prev,
            k: 0,
        }
    }

    pub fn step<S: GradientSource + ?Sized>(
        &mut self,
        src: &S,
        schedule: &ScheduleSet,
        calls: &mut CallCounts,
    ) {
        let eta = schedule.eta(self.k);
        let eta_y = eta * schedule.y_ratio;
        let n = self.z.n();
        for (i, (h, (z, w))) in self
            .z_half
            .as_mut_slice()
            .iter_mut()
            .zip(self.z.as_slice().iter().zip(self.w_prev.as_slice()))
            .enumerate()
        {
            *h = z - if i < n { eta } else { eta_y } * w;
        }
        src.field_into(&self.z_half, &mut self.w_prev, calls);
        for (i, (z, w)) in self
            .z
            .as_mut_slice()
            .iter_mut()
            .zip(self.w_prev.as_slice())
            .enumerate()
        {
            *z -= if i < n { eta } else { eta_y } * w;
        }
        self.k += 1;
    }
}

/// OGDA with an arbitrary stepsize rule. Reports the last iterate.
pub fn ogda_run_with<S: GradientSource + ?Sized>(
    src: &S,
    z0: &PairVector,
    k: u64,
    schedule: &ScheduleSet,
    opts: &RunOptions,
) -> Result<RunResult> {
    check_horizon(k)?;
    schedule.rule.validate()?;
    let mut rec = Recorder::new(src.bundle(), z0, "ogda", opts)?;
    let mut calls = CallCounts::default();
    let mut st = OgdaState::new(src, z0, &mut calls);
    for i in 0..k {
        st.step(src, schedule, &mut calls);
        rec.step(0, &st.z, &st.z, &calls, i + 1 == k)?;
        if rec.stopped() {
            break;
        }
    }
    Ok(rec.finish(st.z.clone(), st.z, calls))
}

/// OGDA baseline with `η = 1/(2(L ∨ L_H))`.
pub fn ogda_run<S: GradientSource + ?Sized>(
    src: &S,
    z0: &PairVector,
    k: u64,
    opts: &RunOptions,
) -> Result<RunResult> {
    let bundle = src.bundle();
    let sched = ScheduleSet::constant(ogda_eta(bundle)?, ScaledConstants::unscaled(bundle.constants()))?;
    ogda_run_with(src, z0, k, &sched, opts)
}

/// Extragradient with two fresh field evaluations per iteration and uniform
/// averaging of the extrapolated points. Every `restart_every` iterations
/// the iterate jumps to the window average and averaging starts over.
pub fn seg_run<S: GradientSource + ?Sized>(
    src: &S,
    z0: &PairVector,
    k: u64,
    restart_every: u64,
    opts: &RunOptions,
) -> Result<RunResult> {
    check_horizon(k)?;
    if restart_every == 0 {
        return Err(Error::config("restart_every must be at least 1"));
    }
    let bundle = src.bundle();
    let eta = ogda_eta(bundle)?;
    let name = if restart_every >= k { "seg" } else { "seg_restart" };
    let mut rec = Recorder::new(bundle, z0, name, opts)?;
    let mut calls = CallCounts::default();
    let (n, m) = z0.dims();
    let mut z = z0.clone();
    let mut half = PairVector::zeros(n, m);
    let mut w = PairVector::zeros(n, m);
    let mut sum = PairVector::zeros(n, m);
    let mut avg = z0.clone();
    let mut count = 0u64;
    let mut epoch = 0u64;
    for i in 0..k {
        src.field_into(&z, &mut w, &mut calls);
        half.set_lincomb(1.0, &z, -eta, &w);
        src.field_into(&half, &mut w, &mut calls);
        z.lincomb_assign(1.0, -eta, &w);
        sum.lincomb_assign(1.0, 1.0, &half);
        count += 1;
        avg.set_lincomb(1.0 / count as f64, &sum, 0.0, &sum);
        let window_done = count == restart_every;
        rec.step(epoch, &avg, &z, &calls, i + 1 == k || window_done)?;
        if rec.stopped() {
            break;
        }
        if window_done {
            z.copy_from(&avg);
            sum.as_mut_slice().fill(0.0);
            count = 0;
            epoch += 1;
        }
    }
    Ok(rec.finish(avg, z, calls))
}

/// AG-OG with the constant AG-OG-Direct stepsize and the rescaled y-block.
pub fn agog_direct_run<S: GradientSource + ?Sized>(
    src: &S,
    z0: &PairVector,
    k: u64,
    opts: &RunOptions,
) -> Result<RunResult> {
    check_horizon(k)?;
    let consts = effective_constants(src.bundle());
    let sched = ScheduleSet::constant(agog_direct_eta(&consts)?, consts)?;
    let mut rec = Recorder::new(src.bundle(), z0, "agog_direct", opts)?;
    let mut calls = CallCounts::default();
    let mut st = super::SolverState::new(src, z0, &mut calls);
    for i in 0..k {
        st.step(src, &sched, true, &mut calls);
        rec.step(0, &st.z_ag, &st.z, &calls, i + 1 == k)?;
        if rec.stopped() {
            break;
        }
    }
    Ok(rec.finish(st.z_ag, st.z, calls))
}

/// Nesterov's second scheme on the individual component alone:
/// `z^md = (1-α)z^ag + αz`, `z ← z - η∇F(z^md)`, `z^ag ← (1-α)z^ag + αz`.
/// The coupling is ignored, so this only solves decoupled problems.
pub fn nesterov_run<S: GradientSource + ?Sized>(
    src: &S,
    z0: &PairVector,
    k: u64,
    schedule: &ScheduleSet,
    opts: &RunOptions,
) -> Result<RunResult> {
    check_horizon(k)?;
    schedule.rule.validate()?;
    let mut rec = Recorder::new(src.bundle(), z0, "nesterov", opts)?;
    let mut calls = CallCounts::default();
    let (n, m) = z0.dims();
    let mut z = z0.clone();
    let mut ag = z0.clone();
    let mut md = PairVector::zeros(n, m);
    let mut g = PairVector::zeros(n, m);
    for i in 0..k {
        let a = alpha(i);
        let eta = schedule.eta(i);
        md.set_lincomb(1.0 - a, &ag, a, &z);
        src.individual_into(&md, &mut g, &mut calls);
        let (zx, zy) = z.split_mut();
        let (gx, gy) = (&g.as_slice()[..n], &g.as_slice()[n..]);
        zx.iter_mut().zip(gx).for_each(|(v, d)| *v -= eta * d);
        zy.iter_mut()
            .zip(gy)
            .for_each(|(v, d)| *v -= eta * schedule.y_ratio * d);
        ag.lincomb_assign(1.0 - a, a, &z);
        rec.step(0, &ag, &z, &calls, i + 1 == k)?;
        if rec.stopped() {
            break;
        }
    }
    Ok(rec.finish(ag, z, calls))
}

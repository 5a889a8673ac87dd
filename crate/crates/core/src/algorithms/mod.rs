//! Solver loops: AG-OG and its restarted, stochastic and bilinear variants,
//! the C-SC regularization, and the OGDA, SEG, AG-OG-Direct and Nesterov
//! baselines.
//!
//! Every loop drives a [`GradientSource`], so the same code serves exact and
//! noisy oracles. Runs record the squared distance of their output iterate to
//! the attached minimax point into a [`RunTrace`].

mod agog;
mod baselines;
mod regularize;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use agog::{
    agog_restart_epochs, agog_restart_run, agog_run, bilinear_agog_restart_run, bilinear_agog_run,
    bilinear_sagog_run, bilinear_stochastic_eta, sagog_restart_run, sagog_run, sagog_schedule,
    GammaSource, SolverState,
};
pub use baselines::{
    agog_direct_eta, agog_direct_run, nesterov_run, ogda_eta, ogda_run, ogda_run_with, seg_run,
    OgdaState,
};
pub use regularize::regularize_csc;

use crate::error::{Error, Result};
use crate::oracle::{gap_v, CallCounts, OracleBundle};
use crate::pair::{sq_dist_unchecked, PairVector};
use crate::schedules::ScheduleSet;
use crate::trace::{RunTrace, TraceMetadata, TraceRow};

/// Ratio to the starting squared distance past which a run counts as
/// diverged.
pub const DIVERGENCE_RATIO: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunOptions {
    /// Record a row every this many iterations (and at every epoch end).
    pub record_every: u64,
    /// Evaluate the gap `V(z, z*)` at recorded rows.
    pub record_gap: bool,
    /// Fill `elapsed_ns`; off keeps traces byte-identical across runs.
    pub timing: bool,
    /// Stop as soon as the output's squared distance drops to this value.
    pub stop_sq: Option<f64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            record_every: 1,
            record_gap: false,
            timing: false,
            stop_sq: None,
        }
    }
}

/// Total work allowed for a restarted run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    Iterations(u64),
    /// Gradient queries in full-field units, see [`CallCounts::queries`].
    Queries(u64),
}

impl Budget {
    /// Iterations available to a loop that pays `setup` queries once and
    /// `per_iter` queries per iteration.
    pub fn iterations(&self, setup: u64, per_iter: u64) -> u64 {
        match *self {
            Budget::Iterations(k) => k,
            Budget::Queries(q) => q.saturating_sub(setup) / per_iter.max(1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochSummary {
    pub epoch: u64,
    /// Global iteration count before the epoch started.
    pub start_iter: u64,
    pub iters: u64,
    pub sq_dist_start: f64,
    pub sq_dist_end: f64,
    /// First stepsize of the epoch, for reports.
    pub eta0: f64,
}

impl EpochSummary {
    pub fn contraction(&self) -> f64 {
        self.sq_dist_end / self.sq_dist_start
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    /// The method's output iterate (`z^ag` for AG-OG, the average for SEG,
    /// the last iterate for OGDA).
    pub final_ag: PairVector,
    /// Last integer iterate `z_K`.
    pub final_z: PairVector,
    pub trace: RunTrace,
    pub calls: CallCounts,
    pub epochs: Vec<EpochSummary>,
    /// For each trace row, the largest `‖z_k - z*‖²` over the integer
    /// iterates since the previous row.
    pub iterate_sq_dist: Vec<f64>,
    /// `‖z₀ - z*‖²` of the run's starting point.
    pub sq_dist0: f64,
    /// Iterations performed, across epochs.
    pub iterations: u64,
    /// Whether `stop_sq` ended the run early.
    pub stopped: bool,
}

/// Tracks rows, distances and divergence for one run.
pub(crate) struct Recorder<'a> {
    bundle: &'a OracleBundle,
    zstar: Option<&'a PairVector>,
    opts: RunOptions,
    trace: RunTrace,
    iterate_rows: Vec<f64>,
    pending_iterate: f64,
    sq0: f64,
    started: Instant,
    iter: u64,
    epochs: Vec<EpochSummary>,
    stopped: bool,
}

impl<'a> Recorder<'a> {
    pub(crate) fn new(
        bundle: &'a OracleBundle,
        z0: &PairVector,
        algorithm: &str,
        opts: &RunOptions,
    ) -> Result<Self> {
        z0.check_dims(bundle.dims())?;
        if !z0.is_finite() {
            return Err(Error::config("starting point has non-finite entries"));
        }
        if opts.record_every == 0 {
            return Err(Error::config("run.record_every must be at least 1"));
        }
        let zstar = bundle.optimum();
        let sq0 = zstar.map_or(f64::NAN, |s| sq_dist_unchecked(z0, s));
        Ok(Self {
            bundle,
            zstar,
            opts: *opts,
            trace: RunTrace::new(TraceMetadata {
                algorithm: algorithm.to_owned(),
                problem: bundle.family().to_string(),
                ..TraceMetadata::default()
            }),
            iterate_rows: Vec::new(),
            pending_iterate: sq0,
            sq0,
            started: Instant::now(),
            iter: 0,
            epochs: Vec::new(),
            stopped: false,
        })
    }

    pub(crate) fn sq_dist(&self, z: &PairVector) -> f64 {
        self.zstar.map_or(f64::NAN, |s| sq_dist_unchecked(z, s))
    }

    pub(crate) fn iter(&self) -> u64 {
        self.iter
    }

    pub(crate) fn stopped(&self) -> bool {
        self.stopped
    }

    fn diverged(&self, at: u64) -> Error {
        Error::Diverged {
            iter: at,
            last_finite: at.saturating_sub(1),
            partial: Box::new(self.trace.clone()),
        }
    }

    /// Books one finished iteration. `out` is the output iterate, `z` the
    /// integer iterate; `force` records a row regardless of the grid.
    pub(crate) fn step(
        &mut self,
        epoch: u64,
        out: &PairVector,
        z: &PairVector,
        calls: &CallCounts,
        force: bool,
    ) -> Result<()> {
        self.iter += 1;
        if !out.is_finite() || !z.is_finite() {
            return Err(self.diverged(self.iter));
        }
        let d = self.sq_dist(out);
        if self.zstar.is_some() {
            let dz = self.sq_dist(z);
            self.pending_iterate = self.pending_iterate.max(dz);
            let limit = DIVERGENCE_RATIO * self.sq0;
            if self.sq0 > 0.0 && (d > limit || dz > limit) {
                return Err(self.diverged(self.iter));
            }
            if self.opts.stop_sq.is_some_and(|s| d <= s) {
                self.stopped = true;
            }
        }
        if force || self.stopped || self.iter % self.opts.record_every == 0 {
            let gap = match (self.opts.record_gap, self.zstar) {
                (true, Some(s)) => gap_v(self.bundle, out, s).ok(),
                _ => None,
            };
            let elapsed_ns = if self.opts.timing {
                self.started.elapsed().as_nanos() as u64
            } else {
                0
            };
            self.trace.rows.push(TraceRow {
                epoch,
                iter: self.iter,
                h_calls: calls.h,
                f_calls: calls.f,
                sq_dist: d,
                gap,
                elapsed_ns,
            });
            self.iterate_rows.push(self.pending_iterate);
            self.pending_iterate = f64::NEG_INFINITY;
        }
        Ok(())
    }

    pub(crate) fn end_epoch(&mut self, summary: EpochSummary) {
        self.epochs.push(summary);
    }

    pub(crate) fn finish(
        self,
        final_ag: PairVector,
        final_z: PairVector,
        calls: CallCounts,
    ) -> RunResult {
        RunResult {
            final_ag,
            final_z,
            trace: self.trace,
            calls,
            epochs: self.epochs,
            iterate_sq_dist: self.iterate_rows,
            sq_dist0: self.sq0,
            iterations: self.iter,
            stopped: self.stopped,
        }
    }
}

/// Squared-distance inflation between the scaled norm the theory uses and
/// the plain norm the traces record, `max(r, 1/r)` for `r = μ_f/μ_g`.
pub fn norm_distortion(schedule: &ScheduleSet) -> f64 {
    let r = schedule.y_ratio;
    r.max(1.0 / r)
}

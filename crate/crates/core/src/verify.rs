//! Self-contained verification suites with fixed seeds.
//!
//! The reference iterations here are written out independently of the solver
//! loops (one-line Nesterov and OGDA recursions, an explicitly rescaled
//! objective) so an identity check compares two different derivations.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algorithms::{
    agog_run, bilinear_agog_restart_run, bilinear_agog_run, ogda_run, ogda_run_with, sagog_restart_run,
    sagog_run, seg_run, Budget, GammaSource, RunOptions, SolverState,
};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::harness::{check_bounds, render_outputs, run_experiment, start_point, BoundKind};
use crate::oracle::{gap_v, CallCounts, GradientSource, Objective, OracleBundle, ProblemConstants};
use crate::pair::{sq_dist, PairVector};
use crate::problems::linalg::{gaussian_vector, stream_rng};
use crate::problems::{
    make_bilinear_game, make_mspbe, make_quadratic_game, make_robust_ls, wrap_stochastic, BilinearGameSpec,
    MspbeSpec, NoiseModel, QuadraticGameSpec, RobustLsSpec,
};
use crate::schedules::{alpha, epoch_length, scaling_reduce, ScaledConstants, ScheduleSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Bounds,
    Reductions,
    Accounting,
    Stochastic,
}

/// One verified property with its measured value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

impl Check {
    fn at_most(name: &str, measured: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: measured <= threshold,
            measured,
            threshold,
            detail: detail.into(),
        }
    }

    fn equal(name: &str, got: u64, want: u64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed: got == want,
            measured: got as f64,
            threshold: want as f64,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub passed: bool,
    pub checks: Vec<Check>,
}

/// Size of the seeded instance battery.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Battery {
    pub instances: usize,
    pub dim: usize,
    pub iterations: u64,
}

impl Default for Battery {
    fn default() -> Self {
        Self {
            instances: 20,
            dim: 50,
            iterations: 10_000,
        }
    }
}

/// Quadratic game `i` of the battery: `n = m = dim`, equal moduli, spread
/// smoothness and coupling, random linear terms so `z* ≠ 0`.
pub fn battery_instance(i: usize, dim: usize) -> Result<OracleBundle> {
    const L: [f64; 5] = [4.0, 16.0, 64.0, 100.0, 10.0];
    const MU: [f64; 4] = [1.0, 0.5, 2.0, 1.0];
    const LH: [f64; 6] = [0.0, 0.5, 1.0, 4.0, 11.0, 30.0];
    let seed = 1000 + i as u64;
    let (l, mu, l_h) = (L[i % 5], MU[i % 4], LH[i % 6]);
    let mut spec = QuadraticGameSpec::from_constants(dim, dim, l, mu, l / 2.0, mu, l_h, l_h / 4.0, seed);
    let mut rng = stream_rng(seed, 40);
    spec.b1 = Some(gaussian_vector(dim, &mut rng).iter().copied().collect());
    spec.b2 = Some(gaussian_vector(dim, &mut rng).iter().copied().collect());
    make_quadratic_game(&spec)
}

/// Ordinary least-squares slope of `ln y` on `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn max_rel_diff(a: &PairVector, b: &PairVector) -> f64 {
    let scale = 1.0 + a.norm().max(b.norm());
    a.sub(b).as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale
}

/// Reduction identities hold to this relative tolerance.
pub const IDENTITY_TOL: f64 = 1e-12;

// ---------------------------------------------------------------- bounds

/// Nonexpansion of the integer iterates and the rate bound on `z^ag`, on the
/// quadratic battery.
pub fn battery_bound_checks(b: &Battery) -> Result<Vec<Check>> {
    let mut worst_nonexp = 0.0f64;
    let mut worst_rate = 0.0f64;
    let mut nonexp_bad = 0usize;
    let mut rate_bad = 0usize;
    let mut rate_rows = 0usize;
    let checkpoints: Vec<u64> = [10u64, 100, 1_000, 10_000]
        .into_iter()
        .filter(|&k| k <= b.iterations)
        .collect();
    let mut at_checkpoints = 0.0f64;
    for i in 0..b.instances {
        let bundle = battery_instance(i, b.dim)?;
        let z0 = start_point(&bundle, 1.0, i as u64);
        let sched = ScheduleSet::agog_effective(bundle.constants())?;
        let r = agog_run(&bundle, &z0, b.iterations, &sched, &RunOptions::default())?;
        let ne = check_bounds(&r, &bundle, BoundKind::Nonexpansive)?;
        let rate = check_bounds(&r, &bundle, BoundKind::Rate)?;
        worst_nonexp = worst_nonexp.max(ne.max_ratio);
        worst_rate = worst_rate.max(rate.max_ratio);
        nonexp_bad += ne.violations.len();
        rate_bad += rate.violations.len();
        rate_rows += rate.rows_checked;
        for &k in &checkpoints {
            let row = &r.trace.rows[(k - 1) as usize];
            let c = sched.constants;
            let bound = crate::schedules::rate_bound(k, c.l, c.mu, c.l_h, r.sq_dist0)?;
            at_checkpoints = at_checkpoints.max(row.sq_dist / bound);
        }
    }
    let detail = |bad: usize| format!("{} instances, K = {}, {bad} violating rows", b.instances, b.iterations);
    let mut out = vec![
        Check {
            passed: nonexp_bad == 0,
            ..Check::at_most("nonexpansive_iterates", worst_nonexp, 1.0 + 1e-10, detail(nonexp_bad))
        },
        Check {
            passed: rate_bad == 0,
            ..Check::at_most("rate_bound_every_row", worst_rate, 1.0 + 1e-9, detail(rate_bad))
        },
    ];
    out.push(Check::at_most(
        "rate_bound_checkpoints",
        at_checkpoints,
        1.0 + 1e-9,
        format!("K in {checkpoints:?} over {rate_rows} rows"),
    ));
    Ok(out)
}

/// Bilinear rate bound on seeded full-rank games.
pub fn bilinear_bound_check(instances: usize, iterations: u64) -> Result<Check> {
    let mut worst = 0.0f64;
    let mut bad = 0usize;
    for i in 0..instances {
        let n = 4 + 2 * (i % 5);
        let hi = [1.0, 2.0, 5.0, 10.0][i % 4];
        let sv: Vec<f64> = (0..n).map(|j| 0.5 + (hi - 0.5) * j as f64 / (n - 1) as f64).collect();
        let mut rng = stream_rng(2000 + i as u64, 41);
        let bundle = make_bilinear_game(&BilinearGameSpec {
            n,
            matrix: None,
            singular_values: Some(sv),
            u_x: Some(gaussian_vector(n, &mut rng).iter().copied().collect()),
            u_y: Some(gaussian_vector(n, &mut rng).iter().copied().collect()),
            seed: 2000 + i as u64,
        })?;
        let z0 = start_point(&bundle, 1.0, i as u64);
        let r = bilinear_agog_run(&bundle, &z0, iterations, &RunOptions::default())?;
        let rep = check_bounds(&r, &bundle, BoundKind::BilinearRate)?;
        worst = worst.max(rep.max_ratio);
        bad += rep.violations.len();
    }
    Ok(Check {
        passed: bad == 0,
        ..Check::at_most(
            "bilinear_rate_bound",
            worst,
            1.0 + 1e-9,
            format!("{instances} instances, K = {iterations}, {bad} violating rows"),
        )
    })
}

/// `V(z, z*) ≥ (μ/2)‖z - z*‖² - 1e-9` at random points around `z*`.
pub fn gap_lower_bound_check(points: usize, dim: usize) -> Result<Check> {
    let mut instances = Vec::new();
    for i in 0..4 {
        instances.push(battery_instance(i, dim)?);
    }
    instances.push(make_mspbe(&MspbeSpec {
        n_states: 20,
        feature_dim: 5,
        gamma: 0.9,
        mu: 1.0,
        samples: 2000,
        seed: 3,
    })?);
    instances.push(make_robust_ls(&RobustLsSpec {
        n: 8,
        m: 12,
        rho: 2.0,
        radius: 0.5,
        seed: 4,
    })?);
    let mut worst = f64::INFINITY;
    for (i, b) in instances.iter().enumerate() {
        let zs = b.optimum().expect("synthetic instances carry z*");
        let mu = b.constants().mu();
        for p in 0..points {
            let radius = 10f64.powf(-3.0 + 5.0 * (p as f64 / points as f64));
            let z = start_point(b, radius, (i * 100_000 + p) as u64);
            let v = gap_v(b, &z, zs)?;
            let lower = 0.5 * mu * sq_dist(&z, zs)?;
            worst = worst.min(v - lower);
        }
    }
    Ok(Check {
        passed: worst >= -1e-9,
        measured: worst,
        threshold: -1e-9,
        name: "gap_lower_bound".into(),
        detail: format!("min of V - (μ/2)‖z - z*‖² over {points} points on 6 instances"),
    })
}

// ---------------------------------------------------------------- reductions

/// Second scheme in one-line form:
/// `ag_{k+1} = md_k - α_kη_k∇F(md_k)`, `md_{k+1} = ag_{k+1} + k/(k+3)(ag_{k+1} - ag_k)`.
fn nesterov_one_line<S: GradientSource + ?Sized>(
    src: &S,
    z0: &PairVector,
    k: u64,
    sched: &ScheduleSet,
) -> Vec<PairVector> {
    let (n, m) = z0.dims();
    let mut calls = CallCounts::default();
    let mut ag = z0.clone();
    let mut md = z0.clone();
    let mut g = PairVector::zeros(n, m);
    let mut out = Vec::new();
    for i in 0..k {
        src.individual_into(&md, &mut g, &mut calls);
        let step = alpha(i) * sched.eta(i);
        let mut next = md.clone();
        for (j, v) in next.as_mut_slice().iter_mut().enumerate() {
            let s = if j < n { step } else { step * sched.y_ratio };
            *v -= s * g.as_slice()[j];
        }
        let c = i as f64 / (i as f64 + 3.0);
        md = next.add(&next.sub(&ag).scale(c));
        ag = next;
        out.push(ag.clone());
    }
    out
}

/// OGDA recursion on a single sequence:
/// `w_{k+1} = w_k - 2ηW(w_k) + ηW(w_{k-1})`, `w_{-1} = z₀`, `w₀ = z₀ - ηW(z₀)`.
fn ogda_one_line(b: &OracleBundle, z0: &PairVector, k: u64, eta: f64) -> Vec<PairVector> {
    let (n, m) = z0.dims();
    let mut calls = CallCounts::default();
    let mut w_old = PairVector::zeros(n, m);
    b.field_into(z0, &mut w_old, &mut calls);
    let mut w = z0.sub(&w_old.scale(eta));
    let mut out = vec![w.clone()];
    let mut cur = PairVector::zeros(n, m);
    for _ in 1..k {
        b.field_into(&w, &mut cur, &mut calls);
        let next = w.sub(&cur.scale(2.0 * eta)).add(&w_old.scale(eta));
        w_old = cur.clone();
        w = next;
        out.push(w.clone());
    }
    out
}

/// The same objective in `(x, ŷ)` with `ŷ = s·y`.
#[derive(Debug)]
struct Rescaled {
    inner: OracleBundle,
    s: f64,
}

impl Rescaled {
    fn y(&self, yhat: &[f64]) -> Vec<f64> {
        yhat.iter().map(|v| v / self.s).collect()
    }
}

impl Objective for Rescaled {
    fn dims(&self) -> (usize, usize) {
        self.inner.dims()
    }
    fn grad_f(&self, x: &[f64], out: &mut [f64]) {
        self.inner.objective().grad_f(x, out)
    }
    fn grad_g(&self, yhat: &[f64], out: &mut [f64]) {
        self.inner.objective().grad_g(&self.y(yhat), out);
        out.iter_mut().for_each(|v| *v /= self.s);
    }
    fn grad_coupling(&self, x: &[f64], yhat: &[f64], gx: &mut [f64], gy: &mut [f64]) {
        self.inner.objective().grad_coupling(x, &self.y(yhat), gx, gy);
        gy.iter_mut().for_each(|v| *v /= self.s);
    }
}

fn identity_check(name: &str, worst: f64, detail: &str) -> Check {
    Check::at_most(name, worst, IDENTITY_TOL, detail)
}

/// `H ≡ 0`: AG-OG's averaged iterate against the one-line second scheme.
pub fn nesterov_reduction_check(steps: u64) -> Result<Check> {
    let mut worst = 0.0f64;
    for seed in 0..3 {
        let spec = QuadraticGameSpec::from_constants(6, 5, 40.0, 2.0, 20.0, 0.5, 0.0, 0.0, seed);
        let mut spec = spec;
        spec.b1 = Some(vec![1.0, -2.0, 0.5, 0.0, 3.0, -1.0]);
        let b = make_quadratic_game(&spec)?;
        let z0 = start_point(&b, 2.0, seed);
        let sched = ScheduleSet::agog_effective(b.constants())?;
        let reference = nesterov_one_line(&b, &z0, steps, &sched);
        let mut calls = CallCounts::default();
        let mut st = SolverState::new(&b, &z0, &mut calls);
        for r in &reference {
            st.step(&b, &sched, true, &mut calls);
            worst = worst.max(max_rel_diff(&st.z_ag, r));
        }
    }
    Ok(identity_check("nesterov_reduction", worst, &format!("{steps} steps, 3 decoupled games")))
}

/// `F ≡ 0`: AG-OG's half iterates against the one-line OGDA recursion, and
/// the library OGDA against the same recursion.
pub fn ogda_reduction_check(steps: u64) -> Result<Check> {
    let mut worst = 0.0f64;
    for seed in 0..3u64 {
        let n = 3 + seed as usize;
        let mut rng = stream_rng(seed, 42);
        let b = make_bilinear_game(&BilinearGameSpec {
            n,
            matrix: None,
            singular_values: Some((0..n).map(|j| 0.3 + j as f64).collect()),
            u_x: Some(gaussian_vector(n, &mut rng).iter().copied().collect()),
            u_y: None,
            seed,
        })?;
        let z0 = start_point(&b, 1.0, seed);
        let eta = 0.5 / b.constants().l_h();
        let sched = ScheduleSet::constant(eta, ScaledConstants::unscaled(b.constants()))?;
        let reference = ogda_one_line(&b, &z0, steps, eta);
        let mut calls = CallCounts::default();
        let mut st = SolverState::new(&b, &z0, &mut calls);
        for r in &reference {
            st.step(&b, &sched, false, &mut calls);
            worst = worst.max(max_rel_diff(&st.z_half, r));
        }
        let opts = RunOptions::default();
        let lib = ogda_run_with(&b, &z0, steps, &sched, &opts)?;
        // library OGDA reports z_K; its half iterate K-1 is the last reference point
        let mut calls = CallCounts::default();
        let mut w = PairVector::zeros(z0.n(), z0.m());
        b.field_into(&reference[reference.len() - 1], &mut w, &mut calls);
        let prev = if reference.len() >= 2 {
            reference[reference.len() - 2].clone()
        } else {
            z0.clone()
        };
        let mut w_prev = PairVector::zeros(z0.n(), z0.m());
        b.field_into(&prev, &mut w_prev, &mut calls);
        // z_K = w_{K-1} + ηW(w_{K-2}) - ηW(w_{K-1})
        let z_k = reference[reference.len() - 1]
            .add(&w_prev.scale(eta))
            .sub(&w.scale(eta));
        worst = worst.max(max_rel_diff(&lib.final_z, &z_k));
    }
    Ok(identity_check("ogda_reduction", worst, &format!("{steps} steps, 3 bilinear games")))
}

/// Two-stepsize block on `(x, y)` against single-stepsize AG-OG on
/// `(x, ŷ = √(μ_g/μ_f)·y)`, mapped back.
pub fn scaling_equivalence_check(steps: u64) -> Result<Check> {
    let mut worst = 0.0f64;
    for (seed, (lg, mug)) in [(64.0, 1.0 / 64.0), (4096.0, 64.0), (10.0, 0.1)].into_iter().enumerate() {
        let mut spec = QuadraticGameSpec::from_constants(5, 4, 64.0, 1.0, lg, mug, 1.0, 0.2, seed as u64);
        spec.b2 = Some(vec![1.0, 0.0, -1.0, 2.0]);
        let b = make_quadratic_game(&spec)?;
        let c = *b.constants();
        let scaled = scaling_reduce(&c)?;
        let s = (c.mu_g / c.mu_f).sqrt();
        let two_block = ScheduleSet::agog_scaled(&c)?;
        let single = ScheduleSet::with_rule(
            two_block.rule,
            ScaledConstants {
                y_ratio: 1.0,
                ..scaled
            },
        )?;
        let hat = OracleBundle::new(
            Arc::new(Rescaled { inner: b.clone(), s }),
            ProblemConstants::new(scaled.l, scaled.l, scaled.mu, scaled.mu, 0.0, scaled.l_h, 0.0)?,
            b.family(),
        )?;
        let z0 = start_point(&b, 1.0, seed as u64);
        let z0_hat = PairVector::new(z0.x().to_vec(), z0.y().iter().map(|v| v * s).collect())?;
        let mut ca = CallCounts::default();
        let mut cb = CallCounts::default();
        let mut direct = SolverState::new(&b, &z0, &mut ca);
        let mut via = SolverState::new(&hat, &z0_hat, &mut cb);
        for _ in 0..steps {
            direct.step(&b, &two_block, true, &mut ca);
            via.step(&hat, &single, true, &mut cb);
            let back = PairVector::new(via.z.x().to_vec(), via.z.y().iter().map(|v| v / s).collect())?;
            let back_ag =
                PairVector::new(via.z_ag.x().to_vec(), via.z_ag.y().iter().map(|v| v / s).collect())?;
            worst = worst.max(max_rel_diff(&direct.z, &back)).max(max_rel_diff(&direct.z_ag, &back_ag));
        }
    }
    Ok(identity_check("scaling_equivalence", worst, &format!("{steps} steps, 3 unequal-moduli games")))
}

/// Zero noise: S-AG-OG through a silent stochastic oracle under a `D = 0`
/// schedule equals deterministic AG-OG bit for bit.
pub fn zero_noise_check(steps: u64) -> Result<Check> {
    let b = battery_instance(3, 8)?;
    let z0 = start_point(&b, 1.0, 3);
    let quiet = NoiseModel::additive(0.0, 0.0, 17);
    let src = wrap_stochastic(&b, quiet)?;
    let sched = crate::algorithms::sagog_schedule(&b, &quiet, &z0, steps, GammaSource::Exact)?;
    let opts = RunOptions::default();
    let det = agog_run(&b, &z0, steps, &sched, &opts)?;
    let sto = sagog_run(&src, &z0, steps, &sched, &opts)?;
    let same = det.final_ag == sto.final_ag
        && det.trace.rows == sto.trace.rows
        && sched.d == 0.0;
    Ok(Check {
        name: "zero_noise_degeneracy".into(),
        passed: same,
        measured: max_rel_diff(&det.final_ag, &sto.final_ag),
        threshold: 0.0,
        detail: format!("{steps} steps, bitwise comparison, D = {}", sched.d),
    })
}

// ---------------------------------------------------------------- accounting

pub fn accounting_checks(k: u64) -> Result<Vec<Check>> {
    let b = battery_instance(2, 6)?;
    let z0 = start_point(&b, 1.0, 0);
    let opts = RunOptions::default();
    let sched = ScheduleSet::agog_effective(b.constants())?;
    let mut out = Vec::new();
    let r = agog_run(&b, &z0, k, &sched, &opts)?;
    out.push(Check::equal("agog_h_calls", r.calls.h, k + 1, format!("K = {k}")));
    out.push(Check::equal("agog_f_calls", r.calls.f, k, format!("K = {k}")));
    let noise = NoiseModel::additive(0.1, 0.1, 5);
    let src = wrap_stochastic(&b, noise)?;
    let s = crate::algorithms::sagog_schedule(&b, &noise, &z0, k, GammaSource::Exact)?;
    let r = sagog_run(&src, &z0, k, &s, &opts)?;
    out.push(Check::equal("sagog_h_calls", r.calls.h, k + 1, format!("K = {k}")));
    out.push(Check::equal("sagog_f_calls", r.calls.f, k, format!("K = {k}")));
    let r = seg_run(&b, &z0, k, k, &opts)?;
    out.push(Check::equal("seg_w_calls", r.calls.h.min(r.calls.f), 2 * k, format!("K = {k}, two W calls per iteration")));
    let r = ogda_run(&b, &z0, k, &opts)?;
    out.push(Check::equal("ogda_w_calls", r.calls.queries(), k + 1, format!("K = {k}")));
    let bl = make_bilinear_game(&BilinearGameSpec::diagonal(&[1.0, 2.0, 3.0]))?;
    let zb = start_point(&bl, 1.0, 0);
    let r = bilinear_agog_run(&bl, &zb, k, &opts)?;
    out.push(Check::equal("bilinear_h_calls", r.calls.h, k + 1, format!("K = {k}")));
    out.push(Check::equal("bilinear_f_calls", r.calls.f, 0, format!("K = {k}")));
    // restarts pay one warm-start H call per epoch
    let r = crate::algorithms::agog_restart_epochs(&b, &z0, &sched, 10, &Budget::Iterations(k), None, &opts)?;
    let epochs = r.epochs.len() as u64;
    out.push(Check::equal("restart_h_calls", r.calls.h, k + epochs, format!("K = {k}, {epochs} epochs")));
    Ok(out)
}

// ---------------------------------------------------------------- stochastic

const DETERMINISM_CONFIG: &str = r#"{
    "problem": {"kind": "quadratic", "n": 6, "m": 6, "a1_eigs": [0.5, 5],
                "a3_eigs": [0.5, 5], "a2_singular_values": [1, 5.5], "seed": 9},
    "algorithm": [{"name": "sagog"}, {"name": "sagog", "restart": "doubling"},
                  {"name": "seg", "restart_every": 50}],
    "run": {"iterations": 400, "seeds": [0, 1, 2]},
    "noise": {"kind": "matrix_perturbation", "sigma_h": 0.1, "sigma_f": 0.1}
}"#;

/// Identical config and seeds give identical output bytes.
pub fn determinism_check() -> Result<Check> {
    let cfg = ExperimentConfig::from_json_str(DETERMINISM_CONFIG)?;
    let a = render_outputs(&cfg, &run_experiment(&cfg)?)?;
    let b = render_outputs(&cfg, &run_experiment(&cfg)?)?;
    let differing = a.iter().zip(&b).filter(|(x, y)| x != y).count() + a.len().abs_diff(b.len());
    Ok(Check::equal(
        "seeded_reproducibility",
        differing as u64,
        0,
        format!("{} files compared byte for byte", a.len()),
    ))
}

/// Result of [`doubling_slope`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub iterations: Vec<f64>,
    pub mean_sq_dist: Vec<f64>,
}

/// Log-log slope of the seed-mean squared distance at the ends of the
/// doubling epochs of restarted S-AG-OG, against total iterations.
pub fn doubling_slope(seeds: u64, doublings: u32) -> Result<SlopeFit> {
    let spec = QuadraticGameSpec::from_constants(5, 5, 4.0, 1.0, 4.0, 1.0, 1.0, 0.5, 21);
    let b = make_quadratic_game(&spec)?;
    let consts = scaling_reduce(b.constants())?;
    let k_det = epoch_length(consts.l, consts.mu, consts.l_h)?;
    let noise0 = NoiseModel::additive(0.5, 0.5, 0);
    let opts = RunOptions {
        record_every: u64::MAX,
        ..RunOptions::default()
    };
    let mut ends: Vec<Vec<(u64, f64)>> = Vec::new();
    let mut det_epochs = None;
    for s in 0..seeds {
        let noise = NoiseModel { seed: 7000 + s, ..noise0 };
        let src = wrap_stochastic(&b, noise)?;
        let z0 = start_point(&b, 1.0, s);
        // the exact budget for `doublings` epochs after the deterministic phase
        let total = budget_for(&b, &noise, &z0, k_det, doublings)?;
        let r = sagog_restart_run(&src, &noise, &z0, &Budget::Iterations(total.1), GammaSource::Exact, &opts)?;
        det_epochs = Some(total.0);
        ends.push(
            r.epochs
                .iter()
                .map(|e| (e.start_iter + e.iters, e.sq_dist_end))
                .collect(),
        );
    }
    let det = det_epochs.unwrap_or(0) as usize;
    let count = ends.iter().map(|e| e.len()).min().unwrap_or(0);
    // skip the first doubling epoch, which still carries bias
    let first = det + 1;
    if count < first + 3 {
        return Err(Error::config("doubling slope: too few doubling epochs to fit"));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for j in first..count {
        xs.push(ends[0][j].0 as f64);
        ys.push(ends.iter().map(|e| e[j].1).sum::<f64>() / ends.len() as f64);
    }
    Ok(SlopeFit {
        slope: loglog_slope(&xs, &ys),
        iterations: xs,
        mean_sq_dist: ys,
    })
}

/// Deterministic-phase epoch count and the total iterations covering it
/// plus `doublings` doubling epochs, mirroring the restart plan.
fn budget_for(b: &OracleBundle, noise: &NoiseModel, z0: &PairVector, k_det: u64, doublings: u32) -> Result<(u64, u64)> {
    let consts = scaling_reduce(b.constants())?;
    let zs = b.optimum().expect("synthetic");
    let gamma0 = sq_dist(z0, zs)?.sqrt();
    let radius = 2.0 * gamma0 + zs.norm();
    let (sh, sf) = noise.effective_sigmas(b.dims(), radius);
    let sigma = crate::schedules::combined_sigma(sh, sf);
    let distortion = consts.y_ratio.max(1.0 / consts.y_ratio);
    let floor = 16.0 * std::f64::consts::E.powi(2) * sigma * sigma / (consts.mu * consts.mu * (k_det as f64 + 1.0));
    let det = crate::schedules::epoch_count(gamma0 * gamma0 * distortion, floor);
    let doubling: u64 = (1..=doublings).map(|j| k_det << j).sum();
    Ok((det, det * k_det + doubling))
}

pub fn stochastic_checks() -> Result<Vec<Check>> {
    let mut out = vec![zero_noise_check(200)?, determinism_check()?];
    let fit = doubling_slope(20, 8)?;
    out.push(Check {
        name: "doubling_restart_slope".into(),
        passed: (-1.3..=-0.7).contains(&fit.slope),
        measured: fit.slope,
        threshold: -1.0,
        detail: format!("accepted range [-1.3, -0.7] over {} epoch ends", fit.iterations.len()),
    });
    Ok(out)
}

// ---------------------------------------------------------------- rates

/// Iterations to reach `sq_dist ≤ target` from distance 1 on
/// `B = diag(1, √κ)` for restarted bilinear AG-OG and OGDA.
pub fn kappa_iterations(kappa: f64, target: f64) -> Result<(u64, u64)> {
    let b = make_bilinear_game(&BilinearGameSpec::diagonal(&[1.0, kappa.sqrt()]))?;
    let z0 = start_point(&b, 1.0, 0);
    let opts = RunOptions {
        record_every: u64::MAX,
        stop_sq: Some(target),
        ..RunOptions::default()
    };
    let cap = (2000.0 * kappa * (1.0 / target).ln()) as u64;
    let ag = bilinear_agog_restart_run(&b, &z0, &Budget::Iterations(cap), &opts)?;
    let og = ogda_run(&b, &z0, cap, &opts)?;
    if !ag.stopped || !og.stopped {
        return Err(Error::config(format!("κ = {kappa}: target not reached within {cap} iterations")));
    }
    Ok((ag.iterations, og.iterations))
}

/// Result of [`kappa_sweep`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaSweep {
    pub restarted_slope: f64,
    pub ogda_slope: f64,
    /// Iterations to target per κ, restarted AG-OG then OGDA.
    pub iterations: Vec<(u64, u64)>,
}

/// Slopes of `ln(iterations)` on `ln κ` for restarted bilinear AG-OG and
/// OGDA.
pub fn kappa_sweep(kappas: &[f64], target: f64) -> Result<KappaSweep> {
    let its: Vec<(u64, u64)> = kappas
        .iter()
        .map(|&k| kappa_iterations(k, target))
        .collect::<Result<_>>()?;
    let a: Vec<f64> = its.iter().map(|p| p.0 as f64).collect();
    let o: Vec<f64> = its.iter().map(|p| p.1 as f64).collect();
    Ok(KappaSweep {
        restarted_slope: loglog_slope(kappas, &a),
        ogda_slope: loglog_slope(kappas, &o),
        iterations: its,
    })
}

pub fn run_suite(suite: Suite, battery: &Battery) -> Result<SuiteReport> {
    let checks = match suite {
        Suite::Bounds => {
            let mut c = battery_bound_checks(battery)?;
            c.push(bilinear_bound_check(battery.instances, 2_000)?);
            c.push(gap_lower_bound_check(1000, battery.dim.min(20))?);
            c
        }
        Suite::Reductions => vec![
            nesterov_reduction_check(100)?,
            ogda_reduction_check(100)?,
            scaling_equivalence_check(100)?,
            zero_noise_check(100)?,
        ],
        Suite::Accounting => accounting_checks(100)?,
        Suite::Stochastic => stochastic_checks()?,
    };
    Ok(SuiteReport {
        suite,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_a_power_law() {
        let xs = [1.0, 10.0, 100.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(-0.5)).collect();
        assert!((loglog_slope(&xs, &ys) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn small_suites_pass() {
        for suite in [Suite::Reductions, Suite::Accounting] {
            let r = run_suite(suite, &Battery::default()).unwrap();
            assert!(r.passed, "{:#?}", r.checks);
        }
        let small = Battery { instances: 3, dim: 6, iterations: 200 };
        let checks = battery_bound_checks(&small).unwrap();
        assert!(checks.iter().all(|c| c.passed), "{checks:#?}");
        assert!(bilinear_bound_check(2, 300).unwrap().passed);
        assert!(gap_lower_bound_check(50, 6).unwrap().passed);
    }

    #[test]
    fn battery_is_seeded() {
        let a = battery_instance(4, 5).unwrap();
        let b = battery_instance(4, 5).unwrap();
        assert_eq!(a.optimum(), b.optimum());
        assert_eq!(a.constants().mu_f, a.constants().mu_g);
    }
}

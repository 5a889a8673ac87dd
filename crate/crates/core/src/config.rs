//! JSON experiment files: `problem`, `algorithm`, `run`, `noise`, `output`.
//!
//! Every struct rejects unknown keys. [`CONFIG_KEYS`] lists each addressable
//! key for `--help`; a test walks serialized configs to keep it in sync with
//! the types.

use std::collections::HashSet;
use std::fmt;
use std::path::PathBuf;

use serde::de::{self, Deserializer, MapAccess, SeqAccess, Visitor};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::problems::{NoiseKind, ProblemSpec};
use crate::trace::RunMode;

/// When a method restarts from its current output.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Restart {
    #[default]
    None,
    /// Every `N` iterations.
    Fixed(u64),
    /// Epoch length derived from the constants.
    Theory,
    /// Theory length while bias dominates, then doubling epochs.
    Doubling,
}

/// Stepsize family for S-AG-OG.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StochasticStep {
    /// Damped schedule `(k+2)/(4L + D + 4√(2+√2)L_H(k+2))`.
    #[default]
    Theory,
    /// Plain deterministic AG-OG schedule.
    Deterministic,
}

fn yes() -> bool {
    true
}

fn default_beta() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum AlgorithmSpec {
    Agog {
        #[serde(default)]
        restart: Restart,
        /// Rescale `y` so unequal moduli share one stepsize.
        #[serde(default = "yes")]
        scaling: bool,
    },
    Sagog {
        #[serde(default)]
        restart: Restart,
        #[serde(default)]
        stepsize: StochasticStep,
    },
    BilinearAgog {
        #[serde(default)]
        restart: Restart,
    },
    BilinearSagog {
        #[serde(default = "default_beta")]
        beta: f64,
    },
    Ogda {},
    Seg {
        /// Window length in iterations; absent means no restarts.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        restart_every: Option<u64>,
    },
    AgogDirect {},
    Nesterov {},
}

impl AlgorithmSpec {
    /// Name written to traces, unique per distinct method.
    pub fn label(&self) -> String {
        let restart = |base: &str, r: &Restart| match r {
            Restart::None => base.to_owned(),
            Restart::Fixed(_) => format!("{base}_restart"),
            Restart::Theory => format!("{base}_restart_theory"),
            Restart::Doubling => format!("{base}_restart_doubling"),
        };
        match self {
            AlgorithmSpec::Agog { restart: r, scaling } => {
                let s = restart("agog", r);
                if *scaling {
                    s
                } else {
                    format!("{s}_unscaled")
                }
            }
            AlgorithmSpec::Sagog { restart: r, stepsize } => {
                let s = restart("sagog", r);
                match stepsize {
                    StochasticStep::Theory => s,
                    StochasticStep::Deterministic => format!("{s}_detstep"),
                }
            }
            AlgorithmSpec::BilinearAgog { restart: r } => restart("bilinear_agog", r),
            AlgorithmSpec::BilinearSagog { .. } => "bilinear_sagog".into(),
            AlgorithmSpec::Ogda {} => "ogda".into(),
            AlgorithmSpec::Seg { restart_every: None } => "seg".into(),
            AlgorithmSpec::Seg { restart_every: Some(_) } => "seg_restart".into(),
            AlgorithmSpec::AgogDirect {} => "agog_direct".into(),
            AlgorithmSpec::Nesterov {} => "nesterov".into(),
        }
    }

    fn validate(&self, at: &str) -> Result<()> {
        let bad = |key: &str, msg: &str| Err(Error::config(format!("{at}.{key}: {msg}")));
        match self {
            AlgorithmSpec::Agog { restart: Restart::Doubling, .. } => {
                bad("restart", "doubling epochs are for sagog")
            }
            AlgorithmSpec::BilinearAgog {
                restart: Restart::Doubling | Restart::Fixed(_),
            } => bad("restart", "bilinear_agog restarts are `none` or `theory`"),
            AlgorithmSpec::Sagog {
                restart: Restart::Theory,
                ..
            } => bad("restart", "sagog restarts are `fixed` or `doubling`"),
            AlgorithmSpec::Sagog {
                restart: Restart::Doubling,
                stepsize: StochasticStep::Deterministic,
            } => bad("stepsize", "doubling epochs need the theory stepsize"),
            AlgorithmSpec::Agog { restart: Restart::Fixed(0), .. }
            | AlgorithmSpec::Sagog { restart: Restart::Fixed(0), .. } => {
                bad("restart", "fixed period must be at least 1")
            }
            AlgorithmSpec::BilinearSagog { beta } if !(*beta >= 0.0 && beta.is_finite()) => {
                bad("beta", "must be finite and non-negative")
            }
            AlgorithmSpec::Seg { restart_every: Some(0) } => bad("restart_every", "must be at least 1"),
            _ => Ok(()),
        }
    }
}

/// One algorithm or a list of them.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Algorithms(pub Vec<AlgorithmSpec>);

impl<'de> Deserialize<'de> for Algorithms {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = Algorithms;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an algorithm object or an array of them")
            }
            fn visit_map<A: MapAccess<'de>>(self, map: A) -> std::result::Result<Algorithms, A::Error> {
                AlgorithmSpec::deserialize(de::value::MapAccessDeserializer::new(map))
                    .map(|a| Algorithms(vec![a]))
            }
            fn visit_seq<A: SeqAccess<'de>>(self, seq: A) -> std::result::Result<Algorithms, A::Error> {
                Vec::deserialize(de::value::SeqAccessDeserializer::new(seq)).map(Algorithms)
            }
        }
        d.deserialize_any(V)
    }
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn one() -> u64 {
    1
}

fn unit() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<u64>,
    /// Budget in gradient queries (full-field units).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query_budget: Option<u64>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "one")]
    pub record_every: u64,
    #[serde(default)]
    pub record_gap: bool,
    #[serde(default)]
    pub timing: bool,
    /// Distance of the starting point from `z*` (or from the origin when
    /// `z*` is unknown).
    #[serde(default = "unit")]
    pub z0_radius: f64,
    /// Stop once the squared distance reaches this; also sets the epoch
    /// count of theory restarts in benchmark mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_sq: Option<f64>,
    #[serde(default)]
    pub mode: RunMode,
    /// Bound on `‖z₀ - z*‖` used in black-box mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma0: Option<f64>,
    /// Epoch count of theory restarts in black-box mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<u64>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            iterations: None,
            query_budget: None,
            seeds: default_seeds(),
            master_seed: 0,
            record_every: 1,
            record_gap: false,
            timing: false,
            z0_radius: 1.0,
            target_sq: None,
            mode: RunMode::Benchmark,
            gamma0: None,
            epochs: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub kind: NoiseKind,
    #[serde(default)]
    pub sigma_h: f64,
    #[serde(default)]
    pub sigma_f: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub format: OutputFormat,
    /// Write the cross-seed summary next to the per-seed traces.
    #[serde(default = "yes")]
    pub aggregate: bool,
    /// Problem name in traces; defaults to the instance family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
            format: OutputFormat::Csv,
            aggregate: true,
            label: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub algorithm: Algorithms,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSection>,
    #[serde(default)]
    pub output: OutputSection,
}

/// Command-line replacements applied after parsing.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub iterations: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub format: Option<OutputFormat>,
}

impl ExperimentConfig {
    /// Parses and validates; errors name the offending key.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            if path == "." || path.is_empty() {
                Error::config(e.into_inner().to_string())
            } else {
                Error::config(format!("`{path}`: {}", e.into_inner()))
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(s) = o.seed {
            self.run.seeds = vec![s];
        }
        if let Some(k) = o.iterations {
            self.run.iterations = Some(k);
            self.run.query_budget = None;
        }
        if let Some(d) = &o.out_dir {
            self.output.dir = d.clone();
        }
        if let Some(f) = o.format {
            self.output.format = f;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        let run = &self.run;
        if self.algorithm.0.is_empty() {
            return Err(Error::config("`algorithm`: list is empty"));
        }
        let mut labels = HashSet::new();
        for (i, a) in self.algorithm.0.iter().enumerate() {
            a.validate(&format!("algorithm[{i}]"))?;
            if !labels.insert(a.label()) {
                return Err(Error::config(format!(
                    "`algorithm[{i}]`: duplicate entry `{}`",
                    a.label()
                )));
            }
        }
        if run.iterations.is_some() && run.query_budget.is_some() {
            return Err(Error::config("`run`: give `iterations` or `query_budget`, not both"));
        }
        if run.iterations == Some(0) || run.query_budget == Some(0) {
            return Err(Error::config("`run.iterations`: budget must be positive"));
        }
        if run.iterations.is_none() && run.query_budget.is_none() {
            let open_ended = self.algorithm.0.iter().all(|a| {
                matches!(a, AlgorithmSpec::Agog { restart: Restart::Theory, .. })
            }) && (run.target_sq.is_some() || run.epochs.is_some());
            if !open_ended {
                return Err(Error::config("`run`: one of `iterations` or `query_budget` is required"));
            }
        }
        if run.seeds.is_empty() {
            return Err(Error::config("`run.seeds`: must not be empty"));
        }
        let mut seen = HashSet::new();
        if let Some(s) = run.seeds.iter().find(|s| !seen.insert(**s)) {
            return Err(Error::config(format!("`run.seeds`: seed {s} repeated")));
        }
        if run.record_every == 0 {
            return Err(Error::config("`run.record_every`: must be at least 1"));
        }
        if !(run.z0_radius >= 0.0 && run.z0_radius.is_finite()) {
            return Err(Error::config("`run.z0_radius`: must be finite and non-negative"));
        }
        if let Some(t) = run.target_sq {
            if !(t > 0.0) {
                return Err(Error::config("`run.target_sq`: must be positive"));
            }
        }
        if let Some(g) = run.gamma0 {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::config("`run.gamma0`: must be positive"));
            }
        }
        if run.mode == RunMode::BlackBox {
            for a in &self.algorithm.0 {
                let needs_gamma = matches!(
                    a,
                    AlgorithmSpec::Sagog { stepsize: StochasticStep::Theory, .. }
                );
                if needs_gamma && run.gamma0.is_none() {
                    return Err(Error::config(format!(
                        "`run.gamma0`: black-box mode needs it for `{}`",
                        a.label()
                    )));
                }
                if matches!(a, AlgorithmSpec::Agog { restart: Restart::Theory, .. })
                    && run.epochs.is_none()
                    && run.iterations.is_none()
                    && run.query_budget.is_none()
                {
                    return Err(Error::config("`run.epochs`: black-box theory restarts need it"));
                }
            }
        }
        if let Some(n) = &self.noise {
            if !(n.sigma_h >= 0.0 && n.sigma_f >= 0.0 && n.sigma_h.is_finite() && n.sigma_f.is_finite()) {
                return Err(Error::config("`noise.sigma_h`: noise scales must be finite and non-negative"));
            }
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical (re-serialized) config.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(canonical);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn problem_label(&self) -> String {
        self.output
            .label
            .clone()
            .unwrap_or_else(|| self.problem.family().to_string())
    }
}

/// Every config key with a one-line description, in `--help` order.
pub const CONFIG_KEYS: &[(&str, &str)] = &[
    ("problem.kind", "quadratic | bilinear | mspbe | robust_ls"),
    ("problem.n", "x dimension (quadratic, bilinear, robust_ls)"),
    ("problem.m", "y dimension (quadratic, robust_ls)"),
    ("problem.a1_eigs", "[lo, hi] eigenvalues of A1; L_f = 2 hi, mu_f = 2 lo"),
    ("problem.a3_eigs", "[lo, hi] eigenvalues of A3; L_g = 2 hi, mu_g = 2 lo"),
    ("problem.a2_singular_values", "[lo, hi] singular values of A2; L_H = hi"),
    ("problem.b1", "linear term on x (default 0)"),
    ("problem.b2", "linear term on y (default 0)"),
    ("problem.matrix", "bilinear B as rows"),
    ("problem.singular_values", "bilinear B spectrum, placed between seeded rotations"),
    ("problem.u_x", "bilinear linear term on x"),
    ("problem.u_y", "bilinear linear term on y"),
    ("problem.n_states", "MSPBE chain size"),
    ("problem.feature_dim", "MSPBE feature dimension"),
    ("problem.gamma", "MSPBE discount in [0, 1)"),
    ("problem.mu", "MSPBE regularizer on x (default 1)"),
    ("problem.samples", "MSPBE trajectory length"),
    ("problem.rho", "robust least squares penalty, > 1/2"),
    ("problem.radius", "robust least squares corruption size"),
    ("problem.seed", "instance seed"),
    (
        "algorithm.name",
        "agog | sagog | bilinear_agog | bilinear_sagog | ogda | seg | agog_direct | nesterov; \
         `algorithm` may also be an array",
    ),
    ("algorithm.restart", "\"none\" | \"theory\" | \"doubling\" | {\"fixed\": N}"),
    ("algorithm.scaling", "agog: rescale y for unequal moduli (default true)"),
    ("algorithm.stepsize", "sagog: \"theory\" | \"deterministic\""),
    ("algorithm.beta", "bilinear_sagog: stepsize parameter (default 1)"),
    ("algorithm.restart_every", "seg: restart window in iterations"),
    ("run.iterations", "iterations K"),
    ("run.query_budget", "gradient queries instead of iterations"),
    ("run.seeds", "distinct run seeds (default [0])"),
    ("run.master_seed", "mixed into every run seed"),
    ("run.record_every", "trace row spacing (default 1)"),
    ("run.record_gap", "also record the gap V(z, z*)"),
    ("run.timing", "fill elapsed_ns"),
    ("run.z0_radius", "distance of z0 from z* (default 1)"),
    ("run.target_sq", "stop at this squared distance; sets theory epoch counts"),
    ("run.mode", "benchmark | black_box"),
    ("run.gamma0", "black-box bound on ||z0 - z*||"),
    ("run.epochs", "black-box epoch count for theory restarts"),
    ("noise.kind", "additive | matrix_perturbation"),
    ("noise.sigma_h", "coupling noise level"),
    ("noise.sigma_f", "individual noise level"),
    ("output.dir", "output directory (default out)"),
    ("output.format", "csv | json"),
    ("output.aggregate", "write the cross-seed summary (default true)"),
    ("output.label", "problem name in traces"),
];

/// [`CONFIG_KEYS`] as an aligned text block.
pub fn keys_help() -> String {
    let width = CONFIG_KEYS.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut s = String::from("Config keys:\n");
    for (k, d) in CONFIG_KEYS {
        s.push_str(&format!("  {k:<width$}  {d}\n"));
    }
    s
}

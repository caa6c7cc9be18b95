//! Run-configuration parsing, experiment presets, and machine-readable
//! output.
//!
//! A run is described by a flat key-value document with dotted sections
//! (`problem.gamma = 1`, `time.N = 64,128`), chosen for diff-friendliness:
//! one key per line, `#` comments, order irrelevant. [`RunConfig::emit`]
//! writes the fully resolved configuration back in the same format, so every
//! run's manifest is itself a valid config and `parse(emit(c)) == c`.
//!
//! Experiment outputs are CSV (UTF-8, LF, one header row, shortest
//! round-trip floats). Identical config and seed reproduce identical data
//! CSVs at any worker count; only the measured timing table of the cost
//! experiment is non-deterministic.

use crate::experiments::{
    self, blowup_sweep, cost_benchmark, l2_drift, observable_study_sets, soliton_study,
    ASOrderConfig, BlowupConfig, CostConfig, DriftConfig, ErrorSweepConfig, ExperimentError,
    ProbabilityConfig, SolitonConfig,
};
use crate::field::{FieldError, Grid1D, InitialCondition, NonlinearitySpec, SolitonParams};
use crate::integrators::{run_trajectory, Problem, RecordSpec, SchemeConfig, SchemeKind};
use crate::noise::{NoiseError, WienerPath};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid or missing configuration key: {0}")]
    Validation(String),
    #[error("resolution {n} does not divide the reference resolution {n_ref}")]
    Divisibility { n: usize, n_ref: usize },
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
    #[error("config line {line}: expected 'key = value'")]
    Syntax { line: usize },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which study to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    Strong,
    Probability,
    AlmostSure,
    Drift,
    Cost,
    Soliton,
    Blowup,
    SingleTrajectory,
}

impl ExperimentKind {
    pub fn label(&self) -> &'static str {
        match self {
            ExperimentKind::Strong => "strong",
            ExperimentKind::Probability => "probability",
            ExperimentKind::AlmostSure => "as",
            ExperimentKind::Drift => "drift",
            ExperimentKind::Cost => "cost",
            ExperimentKind::Soliton => "soliton",
            ExperimentKind::Blowup => "blowup",
            ExperimentKind::SingleTrajectory => "single-trajectory",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "strong" => Some(ExperimentKind::Strong),
            "probability" => Some(ExperimentKind::Probability),
            "as" => Some(ExperimentKind::AlmostSure),
            "drift" => Some(ExperimentKind::Drift),
            "cost" => Some(ExperimentKind::Cost),
            "soliton" => Some(ExperimentKind::Soliton),
            "blowup" => Some(ExperimentKind::Blowup),
            "single-trajectory" => Some(ExperimentKind::SingleTrajectory),
            _ => None,
        }
    }
}

/// Spatial backend; the boundary condition follows from it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackendKind {
    /// Pseudospectral on a periodic grid.
    Spectral,
    /// Central finite differences on a Dirichlet grid.
    FiniteDifference,
}

impl BackendKind {
    fn label(&self) -> &'static str {
        match self {
            BackendKind::Spectral => "spectral",
            BackendKind::FiniteDifference => "fd",
        }
    }

    fn boundary_label(&self) -> &'static str {
        match self {
            BackendKind::Spectral => "periodic",
            BackendKind::FiniteDifference => "dirichlet",
        }
    }
}

/// Initial-value selector mirroring the closed-form initial data.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialKind {
    Soliton(SolitonParams),
    SolitonPair,
    Gaussian,
    Modified,
}

impl InitialKind {
    pub fn to_condition(&self) -> InitialCondition {
        match self {
            InitialKind::Soliton(p) => InitialCondition::Soliton(*p),
            InitialKind::SolitonPair => InitialCondition::soliton_pair(),
            InitialKind::Gaussian => InitialCondition::Gaussian,
            InitialKind::Modified => InitialCondition::ModifiedSoliton,
        }
    }
}

/// Fully resolved run description; the manifest is `emit()` of this.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    pub gamma: f64,
    pub sigma: f64,
    pub dispersion: f64,
    pub half_width: f64,
    pub backend: BackendKind,
    pub num_points: usize,
    pub cutoff: Option<f64>,
    pub horizon: f64,
    pub n_list: Vec<usize>,
    pub n_ref: Option<usize>,
    pub samples: usize,
    pub seed: u64,
    pub workers: usize,
    pub schemes: Vec<SchemeKind>,
    pub fixed_point_tol: f64,
    pub max_fixed_point_iters: usize,
    pub blowup_threshold: f64,
    pub initial: InitialKind,
    pub probability_deltas: Vec<f64>,
    pub probability_constants: Vec<f64>,
    pub as_deltas: Vec<f64>,
    pub blowup_sigmas: Vec<f64>,
    pub blowup_gammas: Vec<f64>,
    pub soliton_gammas: Vec<f64>,
    pub observable_stride: usize,
    pub dump_increments: bool,
    pub profile: bool,
    /// Desk-scale divisor already applied to this config.
    pub scale: u64,
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn fmt_f64_list(vs: &[f64]) -> String {
    vs.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(",")
}

fn fmt_usize_list(vs: &[usize]) -> String {
    vs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Grid implied by the backend, half width, and point count.
    pub fn grid(&self) -> Result<Grid1D, FieldError> {
        match self.backend {
            BackendKind::Spectral => Grid1D::periodic(self.half_width, self.num_points),
            BackendKind::FiniteDifference => Grid1D::dirichlet(self.half_width, self.num_points),
        }
    }

    pub fn problem(&self) -> Problem {
        let mut nonlinearity = NonlinearitySpec::power(self.sigma);
        if let Some(radius) = self.cutoff {
            nonlinearity = nonlinearity.with_cutoff(radius);
        }
        Problem {
            noise_intensity: self.gamma,
            dispersion: self.dispersion,
            nonlinearity,
        }
    }

    fn sweep_config(&self) -> Result<ErrorSweepConfig, ConfigError> {
        let n_ref = self
            .n_ref
            .ok_or_else(|| ConfigError::Validation("time.N_ref".into()))?;
        Ok(ErrorSweepConfig {
            grid: self
                .grid()
                .map_err(|e| ConfigError::Validation(format!("problem.num_points ({e})")))?,
            problem: self.problem(),
            initial: self.initial.to_condition(),
            horizon: self.horizon,
            n_ref,
            n_sweep: self.n_list.clone(),
            samples: self.samples,
            seed: self.seed,
            workers: self.workers,
            schemes: self.schemes.clone(),
            fixed_point_tol: self.fixed_point_tol,
            max_fixed_point_iters: self.max_fixed_point_iters,
            blowup_threshold: self.blowup_threshold,
        })
    }

    /// Divide sample count and reference resolution by `factor` (a power of
    /// two), dropping swept resolutions that no longer fit. Experiments
    /// without a reference resolution scale their step counts instead.
    pub fn apply_scale(&mut self, factor: u64) -> Result<(), ConfigError> {
        if factor == 0 || !factor.is_power_of_two() {
            return Err(ConfigError::Validation(format!(
                "scale must be a positive power of two, got {factor}"
            )));
        }
        if factor == 1 {
            return Ok(());
        }
        self.samples = (self.samples / factor as usize).max(1);
        match self.n_ref {
            Some(n_ref) => {
                if n_ref % factor as usize != 0 {
                    return Err(ConfigError::Validation(format!(
                        "scale {factor} does not divide time.N_ref = {n_ref}"
                    )));
                }
                let scaled = n_ref / factor as usize;
                self.n_ref = Some(scaled);
                self.n_list.retain(|&n| n <= scaled && scaled % n == 0);
                if self.n_list.is_empty() {
                    return Err(ConfigError::Validation(format!(
                        "scale {factor} leaves no usable entries in time.N"
                    )));
                }
            }
            None => {
                self.n_list = self
                    .n_list
                    .iter()
                    .map(|&n| (n / factor as usize).max(4))
                    .collect();
                self.n_list.dedup();
            }
        }
        self.scale *= factor;
        Ok(())
    }

    /// Serialize as a config document; parsing the output reproduces this
    /// value exactly.
    pub fn emit(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# manakov run manifest (version {})",
            env!("CARGO_PKG_VERSION")
        );
        let _ = writeln!(out, "experiment = {}", self.experiment.label());
        let _ = writeln!(out, "problem.gamma = {}", fmt_f64(self.gamma));
        let _ = writeln!(out, "problem.sigma = {}", fmt_f64(self.sigma));
        let _ = writeln!(out, "problem.dispersion = {}", fmt_f64(self.dispersion));
        let _ = writeln!(out, "problem.half_width = {}", fmt_f64(self.half_width));
        let _ = writeln!(out, "problem.backend = {}", self.backend.label());
        let _ = writeln!(out, "problem.boundary = {}", self.backend.boundary_label());
        let _ = writeln!(out, "problem.num_points = {}", self.num_points);
        if let Some(radius) = self.cutoff {
            let _ = writeln!(out, "problem.cutoff = {}", fmt_f64(radius));
        }
        let _ = writeln!(out, "time.T = {}", fmt_f64(self.horizon));
        let _ = writeln!(out, "time.N = {}", fmt_usize_list(&self.n_list));
        if let Some(n_ref) = self.n_ref {
            let _ = writeln!(out, "time.N_ref = {n_ref}");
        }
        let _ = writeln!(out, "sampling.samples = {}", self.samples);
        let _ = writeln!(out, "sampling.seed = {}", self.seed);
        let _ = writeln!(out, "sampling.workers = {}", self.workers);
        let _ = writeln!(
            out,
            "scheme.list = {}",
            self.schemes
                .iter()
                .map(|s| s.label())
                .collect::<Vec<_>>()
                .join(",")
        );
        let _ = writeln!(out, "scheme.eps_fp = {}", fmt_f64(self.fixed_point_tol));
        let _ = writeln!(out, "scheme.max_fp = {}", self.max_fixed_point_iters);
        let _ = writeln!(
            out,
            "scheme.blowup_threshold = {}",
            fmt_f64(self.blowup_threshold)
        );
        match &self.initial {
            InitialKind::Soliton(p) => {
                let _ = writeln!(out, "iv.kind = soliton");
                let _ = writeln!(out, "iv.eta = {}", fmt_f64(p.amplitude));
                let _ = writeln!(out, "iv.kappa = {}", fmt_f64(p.velocity));
                let _ = writeln!(out, "iv.alpha = {}", fmt_f64(p.phase));
                let _ = writeln!(out, "iv.tau = {}", fmt_f64(p.offset));
                let _ = writeln!(out, "iv.theta = {}", fmt_f64(p.mixing));
                let _ = writeln!(out, "iv.phi1 = {}", fmt_f64(p.phase1));
                let _ = writeln!(out, "iv.phi2 = {}", fmt_f64(p.phase2));
            }
            InitialKind::SolitonPair => {
                let _ = writeln!(out, "iv.kind = soliton-pair");
            }
            InitialKind::Gaussian => {
                let _ = writeln!(out, "iv.kind = gaussian");
            }
            InitialKind::Modified => {
                let _ = writeln!(out, "iv.kind = modified");
            }
        }
        let _ = writeln!(
            out,
            "probability.deltas = {}",
            fmt_f64_list(&self.probability_deltas)
        );
        let _ = writeln!(
            out,
            "probability.constants = {}",
            fmt_f64_list(&self.probability_constants)
        );
        let _ = writeln!(out, "as.deltas = {}", fmt_f64_list(&self.as_deltas));
        let _ = writeln!(out, "blowup.sigmas = {}", fmt_f64_list(&self.blowup_sigmas));
        let _ = writeln!(out, "blowup.gammas = {}", fmt_f64_list(&self.blowup_gammas));
        let _ = writeln!(
            out,
            "soliton.gammas = {}",
            fmt_f64_list(&self.soliton_gammas)
        );
        let _ = writeln!(out, "output.observable_stride = {}", self.observable_stride);
        let _ = writeln!(out, "output.dump_increments = {}", self.dump_increments);
        let _ = writeln!(out, "output.profile = {}", self.profile);
        let _ = writeln!(out, "scale = {}", self.scale);
        out
    }
}

/// Raw key-value view of a config document.
struct Document {
    entries: BTreeMap<String, String>,
}

impl Document {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: idx + 1 })?;
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(Document { entries })
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    fn take_f64(&mut self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| ConfigError::Validation(key.to_string())),
        }
    }

    fn take_usize(&mut self, key: &str) -> Result<Option<usize>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<usize>()
                .map(Some)
                .map_err(|_| ConfigError::Validation(key.to_string())),
        }
    }

    fn take_u64(&mut self, key: &str) -> Result<Option<u64>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<u64>()
                .map(Some)
                .map_err(|_| ConfigError::Validation(key.to_string())),
        }
    }

    fn take_bool(&mut self, key: &str) -> Result<Option<bool>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => match v.as_str() {
                "true" => Ok(Some(true)),
                "false" => Ok(Some(false)),
                _ => Err(ConfigError::Validation(key.to_string())),
            },
        }
    }

    fn take_f64_list(&mut self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map(Some)
                .map_err(|_| ConfigError::Validation(key.to_string())),
        }
    }

    fn take_usize_list(&mut self, key: &str) -> Result<Option<Vec<usize>>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map(Some)
                .map_err(|_| ConfigError::Validation(key.to_string())),
        }
    }
}

/// Parse and validate a config document, filling defaults: half dispersion,
/// cubic coupling, unit noise intensity, the standard soliton initial value,
/// fixed-point tolerance 1e-12, blowup guard 500.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut doc = Document::parse(text)?;

    let experiment = doc
        .take("experiment")
        .ok_or_else(|| ConfigError::Validation("experiment".into()))
        .and_then(|v| {
            ExperimentKind::parse(&v).ok_or_else(|| ConfigError::Validation("experiment".into()))
        })?;

    let gamma = doc.take_f64("problem.gamma")?.unwrap_or(1.0);
    let sigma = doc.take_f64("problem.sigma")?.unwrap_or(1.0);
    let dispersion = doc.take_f64("problem.dispersion")?.unwrap_or(0.5);
    let half_width = doc
        .take_f64("problem.half_width")?
        .ok_or_else(|| ConfigError::Validation("problem.half_width".into()))?;
    let backend = match doc.take("problem.backend").as_deref() {
        None | Some("fd") => BackendKind::FiniteDifference,
        Some("spectral") => BackendKind::Spectral,
        Some(_) => return Err(ConfigError::Validation("problem.backend".into())),
    };
    if let Some(boundary) = doc.take("problem.boundary") {
        if boundary != backend.boundary_label() {
            return Err(ConfigError::Validation("problem.boundary".into()));
        }
    }
    let num_points = match (
        doc.take_usize("problem.num_points")?,
        doc.take_f64("problem.dx")?,
    ) {
        (Some(m), None) => m,
        (None, Some(dx)) if dx > 0.0 => (2.0 * half_width / dx).round() as usize,
        (None, None) => return Err(ConfigError::Validation("problem.num_points".into())),
        _ => return Err(ConfigError::Validation("problem.num_points".into())),
    };
    let cutoff = doc.take_f64("problem.cutoff")?;

    let horizon = doc
        .take_f64("time.T")?
        .ok_or_else(|| ConfigError::Validation("time.T".into()))?;
    if !(horizon > 0.0) {
        return Err(ConfigError::Validation("time.T".into()));
    }
    let n_list = doc
        .take_usize_list("time.N")?
        .ok_or_else(|| ConfigError::Validation("time.N".into()))?;
    if n_list.is_empty() {
        return Err(ConfigError::Validation("time.N".into()));
    }
    let n_ref = doc.take_usize("time.N_ref")?;

    let samples = doc.take_usize("sampling.samples")?.unwrap_or(1);
    if samples == 0 {
        return Err(ConfigError::Validation("sampling.samples".into()));
    }
    let seed = doc.take_u64("sampling.seed")?.unwrap_or(0);
    let workers = doc.take_usize("sampling.workers")?.unwrap_or(0);

    let schemes = match doc.take("scheme.list") {
        None => SchemeKind::ALL.to_vec(),
        Some(v) => {
            let parsed: Option<Vec<SchemeKind>> = v.split(',').map(SchemeKind::parse).collect();
            parsed.ok_or_else(|| ConfigError::Validation("scheme.list".into()))?
        }
    };
    let fixed_point_tol = doc.take_f64("scheme.eps_fp")?.unwrap_or(1e-12);
    let max_fixed_point_iters = doc.take_usize("scheme.max_fp")?.unwrap_or(100);
    let blowup_threshold = doc.take_f64("scheme.blowup_threshold")?.unwrap_or(500.0);

    let initial = match doc.take("iv.kind").as_deref() {
        None | Some("soliton") => {
            let mut p = SolitonParams::standard();
            if let Some(v) = doc.take_f64("iv.eta")? {
                p.amplitude = v;
            }
            if let Some(v) = doc.take_f64("iv.kappa")? {
                p.velocity = v;
            }
            if let Some(v) = doc.take_f64("iv.alpha")? {
                p.phase = v;
            }
            if let Some(v) = doc.take_f64("iv.tau")? {
                p.offset = v;
            }
            if let Some(v) = doc.take_f64("iv.theta")? {
                p.mixing = v;
            }
            if let Some(v) = doc.take_f64("iv.phi1")? {
                p.phase1 = v;
            }
            if let Some(v) = doc.take_f64("iv.phi2")? {
                p.phase2 = v;
            }
            if !(p.amplitude > 0.0) {
                return Err(ConfigError::Validation("iv.eta".into()));
            }
            InitialKind::Soliton(p)
        }
        Some("soliton-pair") | Some("soliton-sum") => InitialKind::SolitonPair,
        Some("gaussian") => InitialKind::Gaussian,
        Some("modified") => InitialKind::Modified,
        Some(_) => return Err(ConfigError::Validation("iv.kind".into())),
    };

    let probability_deltas = doc
        .take_f64_list("probability.deltas")?
        .unwrap_or_else(|| vec![0.4, 0.5, 0.6]);
    let probability_constants = doc
        .take_f64_list("probability.constants")?
        .unwrap_or_else(|| vec![1.0, 10f64.sqrt(), 10.0]);
    let as_deltas = doc
        .take_f64_list("as.deltas")?
        .unwrap_or_else(|| vec![0.4, 0.45, 0.5, 0.55, 0.6]);
    let blowup_sigmas = doc
        .take_f64_list("blowup.sigmas")?
        .unwrap_or_else(|| vec![2.0, 3.0, 4.0]);
    let blowup_gammas = doc
        .take_f64_list("blowup.gammas")?
        .unwrap_or_else(|| vec![0.0, 1.0]);
    let soliton_gammas = doc
        .take_f64_list("soliton.gammas")?
        .unwrap_or_else(|| vec![0.0, 1.0, 0.05]);
    let observable_stride = doc.take_usize("output.observable_stride")?.unwrap_or(1);
    let dump_increments = doc.take_bool("output.dump_increments")?.unwrap_or(false);
    let profile = doc.take_bool("output.profile")?.unwrap_or(false);
    let scale = doc.take_u64("scale")?.unwrap_or(1);

    if let Some(unknown) = doc.entries.keys().next() {
        return Err(ConfigError::Validation(format!("unknown key {unknown}")));
    }

    if let Some(n_ref) = n_ref {
        for &n in &n_list {
            if n == 0 || n_ref % n != 0 {
                return Err(ConfigError::Divisibility { n, n_ref });
            }
        }
    }

    Ok(RunConfig {
        experiment,
        gamma,
        sigma,
        dispersion,
        half_width,
        backend,
        num_points,
        cutoff,
        horizon,
        n_list,
        n_ref,
        samples,
        seed,
        workers,
        schemes,
        fixed_point_tol,
        max_fixed_point_iters,
        blowup_threshold,
        initial,
        probability_deltas,
        probability_constants,
        as_deltas,
        blowup_sigmas,
        blowup_gammas,
        soliton_gammas,
        observable_stride,
        dump_increments,
        profile,
        scale,
    })
}

/// Names of the built-in full-scale presets, one per reference experiment.
/// Combine with `--scale` for desk-size runs.
pub const PRESET_NAMES: [&str; 11] = [
    "strong-fig1",
    "probability-fig2",
    "probability-fig3",
    "as-table1",
    "as-fig4",
    "drift-fig5",
    "cost-fig6",
    "soliton-fig7",
    "blowup-fig8",
    "blowup-fig9",
    "blowup-batch",
];

/// Build a named preset.
pub fn preset(name: &str) -> Result<RunConfig, ConfigError> {
    let pow2 = |k: u32| 1usize << k;
    let text = match name {
        // strong order, FD grid, all four schemes
        "strong-fig1" => "\
experiment = strong
problem.gamma = 1
problem.half_width = 50
problem.dx = 0.05
time.T = 1
time.N = 1024,2048,4096,8192,16384,32768,65536
time.N_ref = 262144
sampling.samples = 300
"
        .to_string(),
        // order in probability, proportion estimates, spectral grid
        "probability-fig2" => "\
experiment = probability
problem.gamma = 9
problem.half_width = 50
problem.backend = spectral
problem.num_points = 1024
time.T = 0.5
time.N = 4096,16384,65536,262144,1048576
time.N_ref = 16777216
sampling.samples = 36
scheme.list = lt
probability.deltas = 0.4,0.5,0.6
"
        .to_string(),
        // order in probability, normalized constant ranges, FD grid
        "probability-fig3" => "\
experiment = probability
problem.gamma = 1
problem.half_width = 50
problem.dx = 0.05
time.T = 1
time.N = 1024,2048,4096,8192,16384,32768,65536
time.N_ref = 262144
sampling.samples = 300
probability.deltas = 0.3,0.4,0.5
"
        .to_string(),
        // almost-sure order statistics and t-tests
        "as-table1" => format!(
            "\
experiment = as
problem.gamma = 1
problem.half_width = 50
problem.dx = 0.2
time.T = 1
time.N = {}
time.N_ref = 262144
sampling.samples = 300
",
            (8..=16)
                .map(pow2)
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join(",")
        ),
        // per-sample convergence profile study
        "as-fig4" => "\
experiment = single-trajectory
problem.gamma = 1
problem.half_width = 50
problem.dx = 0.0625
time.T = 1
time.N = 16,64,256,1024,4096,16384,65536,262144
sampling.samples = 1
scheme.list = lt
output.observable_stride = 16
output.profile = true
"
        .to_string(),
        // L2 drift comparison
        "drift-fig5" => "\
experiment = drift
problem.gamma = 1
problem.half_width = 50
problem.dx = 0.2
time.T = 2
time.N = 16384
sampling.samples = 100
"
        .to_string(),
        // cost against terminal accuracy
        "cost-fig6" => "\
experiment = cost
problem.gamma = 2
problem.half_width = 50
problem.dx = 0.25
time.T = 1
time.N = 256,512,1024,2048,4096,8192,16384
time.N_ref = 65536
sampling.samples = 100
"
        .to_string(),
        // soliton observables under three noise levels
        "soliton-fig7" => format!(
            "\
experiment = soliton
problem.half_width = {}
problem.backend = spectral
problem.num_points = 16384
time.T = 10
time.N = 1024
soliton.gammas = 0,1,0.05
scheme.list = lt
",
            fmt_f64(20.0 * std::f64::consts::PI)
        ),
        // power-law blowup, narrow domain
        "blowup-fig8" => format!(
            "\
experiment = blowup
problem.half_width = {}
problem.backend = spectral
problem.num_points = 65536
time.T = 0.01
time.N = 65536
sampling.samples = 1
iv.kind = soliton-pair
blowup.sigmas = 2,3,4
blowup.gammas = 0,1
scheme.list = lt
",
            fmt_f64(20.0 * std::f64::consts::PI)
        ),
        // power-law blowup, doubled domain
        "blowup-fig9" => format!(
            "\
experiment = blowup
problem.half_width = {}
problem.backend = spectral
problem.num_points = 131072
time.T = 0.01
time.N = 65536
sampling.samples = 1
iv.kind = soliton-pair
blowup.sigmas = 2,3,4
blowup.gammas = 0,1
scheme.list = lt
",
            fmt_f64(40.0 * std::f64::consts::PI)
        ),
        // exponent batch with many samples
        "blowup-batch" => format!(
            "\
experiment = blowup
problem.half_width = {}
problem.backend = spectral
problem.num_points = 131072
time.T = 0.01
time.N = 131072
sampling.samples = 48
iv.kind = soliton-pair
blowup.sigmas = 1,1.25,1.5,1.75,2,2.25,2.5,2.9,3,3.5,4
blowup.gammas = 0,1
scheme.list = lt
",
            fmt_f64(20.0 * std::f64::consts::PI)
        ),
        other => return Err(ConfigError::UnknownPreset(other.to_string())),
    };
    parse_config(&text)
}

struct Csv {
    buffer: String,
}

impl Csv {
    fn new(header: &str) -> Self {
        Csv {
            buffer: format!("{header}\n"),
        }
    }

    fn row(&mut self, fields: &[String]) {
        self.buffer.push_str(&fields.join(","));
        self.buffer.push('\n');
    }

    fn write(self, dir: &Path, name: &str) -> std::io::Result<()> {
        fs::write(dir.join(name), self.buffer)
    }
}

fn s(v: f64) -> String {
    fmt_f64(v)
}

/// Execute the configured experiment, writing the manifest and CSV tables
/// into `out_dir`. Returns the list of files written.
pub fn run(config: &RunConfig, out_dir: &Path) -> Result<Vec<String>, CliError> {
    fs::create_dir_all(out_dir)?;
    fs::write(out_dir.join("manifest.txt"), config.emit())?;
    let mut written = vec!["manifest.txt".to_string()];

    match config.experiment {
        ExperimentKind::Strong => {
            let sweep = config.sweep_config()?;
            let tables = experiments::strong_convergence(&sweep)?;
            let mut summary = Csv::new("scheme,n,h,mean_sq_err,slope");
            let mut errors = Csv::new("scheme,sample,n,h,error_h1_max");
            let mut exclusions = Csv::new("scheme,sample,reason");
            for table in &tables {
                for row in &table.rows {
                    summary.row(&[
                        table.scheme.label().into(),
                        row.n.to_string(),
                        s(row.h),
                        s(row.mean_square),
                        s(table.slope),
                    ]);
                }
                let included = table.rows.first().map_or(0, |r| r.errors.len());
                for rank in 0..included {
                    for row in &table.rows {
                        errors.row(&[
                            table.scheme.label().into(),
                            rank.to_string(),
                            row.n.to_string(),
                            s(row.h),
                            s(row.errors[rank]),
                        ]);
                    }
                }
                for ex in &table.exclusions {
                    exclusions.row(&[
                        table.scheme.label().into(),
                        ex.sample.to_string(),
                        ex.reason.clone(),
                    ]);
                }
            }
            summary.write(out_dir, "strong_summary.csv")?;
            errors.write(out_dir, "strong_errors.csv")?;
            exclusions.write(out_dir, "strong_exclusions.csv")?;
            written.extend([
                "strong_summary.csv".into(),
                "strong_errors.csv".into(),
                "strong_exclusions.csv".into(),
            ]);
        }
        ExperimentKind::Probability => {
            let cfg = ProbabilityConfig {
                sweep: config.sweep_config()?,
                deltas: config.probability_deltas.clone(),
                constants: config.probability_constants.clone(),
            };
            let estimates = experiments::probability_convergence(&cfg)?;
            let mut proportions = Csv::new("scheme,delta,c,n,h,proportion");
            let mut constants = Csv::new("scheme,delta,n,h,proportion,c,c_normalized");
            for est in &estimates {
                for cell in &est.proportions {
                    proportions.row(&[
                        est.scheme.label().into(),
                        s(cell.delta),
                        s(cell.constant),
                        cell.n.to_string(),
                        s(cell.h),
                        s(cell.proportion),
                    ]);
                }
                for cell in &est.constants {
                    constants.row(&[
                        est.scheme.label().into(),
                        s(cell.delta),
                        cell.n.to_string(),
                        s(cell.h),
                        s(cell.proportion),
                        s(cell.constant),
                        s(cell.normalized),
                    ]);
                }
            }
            proportions.write(out_dir, "probability_proportions.csv")?;
            constants.write(out_dir, "probability_constants.csv")?;
            written.extend([
                "probability_proportions.csv".into(),
                "probability_constants.csv".into(),
            ]);
        }
        ExperimentKind::AlmostSure => {
            let cfg = ASOrderConfig {
                sweep: config.sweep_config()?,
                deltas: config.as_deltas.clone(),
            };
            let estimates = experiments::as_convergence(&cfg)?;
            let mut summary = Csv::new("scheme,delta,mean,median,std");
            let mut tests = Csv::new("scheme,delta,t,p");
            let mut samples = Csv::new("scheme,sample,delta,k_delta,e_delta");
            for est in &estimates {
                for (di, &delta) in est.deltas.iter().enumerate() {
                    summary.row(&[
                        est.scheme.label().into(),
                        s(delta),
                        s(est.mean[di]),
                        s(est.median[di]),
                        s(est.std_dev[di]),
                    ]);
                    for (rank, (&k, &e)) in
                        est.k_delta[di].iter().zip(&est.e_delta[di]).enumerate()
                    {
                        samples.row(&[
                            est.scheme.label().into(),
                            rank.to_string(),
                            s(delta),
                            s(k),
                            s(e),
                        ]);
                    }
                }
                for (delta, test) in &est.t_tests {
                    tests.row(&[
                        est.scheme.label().into(),
                        s(*delta),
                        s(test.statistic),
                        s(test.p_value),
                    ]);
                }
            }
            summary.write(out_dir, "as_summary.csv")?;
            tests.write(out_dir, "as_ttests.csv")?;
            samples.write(out_dir, "as_samples.csv")?;
            written.extend([
                "as_summary.csv".into(),
                "as_ttests.csv".into(),
                "as_samples.csv".into(),
            ]);
        }
        ExperimentKind::Drift => {
            let cfg = DriftConfig {
                grid: config.grid()?,
                problem: config.problem(),
                initial: config.initial.to_condition(),
                horizon: config.horizon,
                n: config.n_list[0],
                samples: config.samples,
                seed: config.seed,
                workers: config.workers,
                schemes: config.schemes.clone(),
                fixed_point_tol: config.fixed_point_tol,
                max_fixed_point_iters: config.max_fixed_point_iters,
                blowup_threshold: config.blowup_threshold,
            };
            let report = l2_drift(&cfg)?;
            let mut csv = Csv::new("scheme,sample,max_drift,log10_drift,completed");
            for row in &report.rows {
                csv.row(&[
                    row.scheme.label().into(),
                    row.sample.to_string(),
                    s(row.max_drift),
                    s(row.log10_drift),
                    row.completed.to_string(),
                ]);
            }
            csv.write(out_dir, "drift.csv")?;
            written.push("drift.csv".into());
        }
        ExperimentKind::Cost => {
            let n_ref = config
                .n_ref
                .ok_or_else(|| ConfigError::Validation("time.N_ref".into()))?;
            let cfg = CostConfig {
                grid: config.grid()?,
                problem: config.problem(),
                initial: config.initial.to_condition(),
                horizon: config.horizon,
                n_ref,
                n_sweep: config.n_list.clone(),
                samples: config.samples,
                seed: config.seed,
                workers: config.workers,
                schemes: config.schemes.clone(),
                fixed_point_tol: config.fixed_point_tol,
                max_fixed_point_iters: config.max_fixed_point_iters,
                blowup_threshold: config.blowup_threshold,
            };
            let report = cost_benchmark(&cfg)?;
            let mut errors = Csv::new("scheme,n,h,mean_sq_error,samples_used");
            let mut timings = Csv::new("scheme,n,h,mean_seconds");
            for row in &report.rows {
                errors.row(&[
                    row.scheme.label().into(),
                    row.n.to_string(),
                    s(row.h),
                    s(row.mean_square_error),
                    row.samples_used.to_string(),
                ]);
                timings.row(&[
                    row.scheme.label().into(),
                    row.n.to_string(),
                    s(row.h),
                    s(row.mean_seconds),
                ]);
            }
            errors.write(out_dir, "cost_errors.csv")?;
            timings.write(out_dir, "cost_timings.csv")?;
            written.extend(["cost_errors.csv".into(), "cost_timings.csv".into()]);
        }
        ExperimentKind::Soliton => {
            let cfg = SolitonConfig {
                grid: config.grid()?,
                noise_intensities: config.soliton_gammas.clone(),
                sets: observable_study_sets().to_vec(),
                horizon: config.horizon,
                n: config.n_list[0],
                seed: config.seed,
                workers: config.workers,
                observable_stride: config.observable_stride,
                blowup_threshold: config.blowup_threshold,
            };
            let cases = soliton_study(&cfg)?;
            let mut csv = Csv::new("set,gamma,step,t,l2,h1,hamiltonian,mass_center,pulse_width");
            for case in &cases {
                for o in &case.record.observables {
                    csv.row(&[
                        (case.set_index + 1).to_string(),
                        s(case.noise_intensity),
                        o.step.to_string(),
                        s(o.time),
                        s(o.l2),
                        s(o.h1),
                        s(o.hamiltonian),
                        s(o.mass_center),
                        s(o.pulse_width),
                    ]);
                }
            }
            csv.write(out_dir, "soliton_observables.csv")?;
            written.push("soliton_observables.csv".into());
        }
        ExperimentKind::Blowup => {
            let cfg = BlowupConfig {
                grid: config.grid()?,
                initial: config.initial.to_condition(),
                horizon: config.horizon,
                n: config.n_list[0],
                exponents: config.blowup_sigmas.clone(),
                noise_intensities: config.blowup_gammas.clone(),
                samples: config.samples,
                seed: config.seed,
                workers: config.workers,
                threshold: config.blowup_threshold,
                dispersion: config.dispersion,
            };
            let report = blowup_sweep(&cfg)?;
            let mut records = Csv::new(
                "gamma,sigma,sample,crossed,crossing_step,crossing_time,h1_at_stop,steps_completed",
            );
            for r in &report.records {
                records.row(&[
                    s(r.noise_intensity),
                    s(r.exponent),
                    r.sample.to_string(),
                    r.crossing.is_some().to_string(),
                    r.crossing.map_or(String::new(), |(step, _)| step.to_string()),
                    r.crossing.map_or(String::new(), |(_, t)| s(t)),
                    s(r.h1_at_stop),
                    r.steps_completed.to_string(),
                ]);
            }
            let mut summary = Csv::new("gamma,sigma,samples,crossed,median_crossing_time");
            for row in &report.summaries {
                summary.row(&[
                    s(row.noise_intensity),
                    s(row.exponent),
                    row.samples.to_string(),
                    row.crossed.to_string(),
                    row.median_crossing_time.map_or(String::new(), s),
                ]);
            }
            records.write(out_dir, "blowup_records.csv")?;
            summary.write(out_dir, "blowup_summary.csv")?;
            written.extend(["blowup_records.csv".into(), "blowup_summary.csv".into()]);
        }
        ExperimentKind::SingleTrajectory => {
            let grid = config.grid()?;
            let x0 = crate::field::initial_condition(&config.initial.to_condition(), grid)?;
            let problem = config.problem();
            let n_max = config.n_list.iter().copied().max().unwrap_or(0).max(1);
            for &n in &config.n_list {
                if n > 0 && n_max % n != 0 {
                    return Err(ConfigError::Divisibility { n, n_ref: n_max }.into());
                }
            }
            let path = WienerPath::sample(config.seed, 0, config.horizon, n_max);
            let scheme_cfg = SchemeConfig {
                scheme: *config.schemes.first().unwrap_or(&SchemeKind::LieTrotter),
                fixed_point_tol: config.fixed_point_tol,
                max_fixed_point_iters: config.max_fixed_point_iters,
                blowup_threshold: config.blowup_threshold,
            };
            let record_spec = RecordSpec {
                observable_stride: config.observable_stride.max(1),
                state_stride: 0,
                keep_final_state: config.profile,
            };
            let mut observables = Csv::new("n,step,t,l2,h1,hamiltonian,mass_center,pulse_width");
            let mut profile = Csv::new("n,x,re1,im1,re2,im2");
            for &n in &config.n_list {
                let record = run_trajectory(&x0, &path, n, &scheme_cfg, &problem, &record_spec)?;
                for o in &record.observables {
                    observables.row(&[
                        n.to_string(),
                        o.step.to_string(),
                        s(o.time),
                        s(o.l2),
                        s(o.h1),
                        s(o.hamiltonian),
                        s(o.mass_center),
                        s(o.pulse_width),
                    ]);
                }
                if config.profile {
                    if let Some(state) = &record.final_state {
                        for (j, v) in state.values().iter().enumerate() {
                            profile.row(&[
                                n.to_string(),
                                s(state.grid().node(j)),
                                s(v[0].re),
                                s(v[0].im),
                                s(v[1].re),
                                s(v[1].im),
                            ]);
                        }
                    }
                }
            }
            observables.write(out_dir, "trajectory.csv")?;
            written.push("trajectory.csv".into());
            if config.profile {
                profile.write(out_dir, "profile.csv")?;
                written.push("profile.csv".into());
            }
            if config.dump_increments {
                let mut bytes = Vec::new();
                path.write_finest(&mut bytes)?;
                fs::write(out_dir.join("increments.bin"), bytes)?;
                written.push("increments.bin".into());
            }
        }
    }
    Ok(written)
}

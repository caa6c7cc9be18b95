//! Common-random-number error sweeps.
//!
//! One Wiener path per sample drives a Lie-Trotter reference at the finest
//! resolution and, in lockstep, every (scheme, step count) combination of the
//! sweep; the per-sample statistic is the max-in-time H1 distance to the
//! reference on each coarse time grid. Running everything in one pass over
//! the reference keeps memory flat (no stored reference trajectory) and
//! guarantees each coarse run is compared against the same reference states.

use crate::field::{h1_norm, initial_condition, Grid1D, InitialCondition, SpinorField};
use crate::integrators::{scaled_noise, Problem, SchemeConfig, SchemeKind, Stepper, StepError};
use crate::noise::WienerPath;
use rayon::prelude::*;

use super::{with_pool, ExperimentError};

/// Configuration shared by the strong / in-probability / almost-sure studies.
#[derive(Clone, Debug)]
pub struct ErrorSweepConfig {
    pub grid: Grid1D,
    pub problem: Problem,
    pub initial: InitialCondition,
    pub horizon: f64,
    /// Reference resolution; every swept `n` must divide it.
    pub n_ref: usize,
    /// Coarse step counts, ascending.
    pub n_sweep: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
    pub schemes: Vec<SchemeKind>,
    pub fixed_point_tol: f64,
    pub max_fixed_point_iters: usize,
    pub blowup_threshold: f64,
}

impl ErrorSweepConfig {
    pub fn scheme_config(&self, scheme: SchemeKind) -> SchemeConfig {
        SchemeConfig {
            scheme,
            fixed_point_tol: self.fixed_point_tol,
            max_fixed_point_iters: self.max_fixed_point_iters,
            blowup_threshold: self.blowup_threshold,
        }
    }

    pub fn step_sizes(&self) -> Vec<f64> {
        self.n_sweep
            .iter()
            .map(|&n| self.horizon / n as f64)
            .collect()
    }

    fn validate(&self) -> Result<(), ExperimentError> {
        if self.samples == 0 {
            return Err(ExperimentError::InvalidConfig(
                "sample count must be at least 1".into(),
            ));
        }
        if self.n_sweep.is_empty() {
            return Err(ExperimentError::InvalidConfig(
                "the resolution sweep is empty".into(),
            ));
        }
        for &n in &self.n_sweep {
            if n == 0 || self.n_ref % n != 0 {
                return Err(ExperimentError::InvalidConfig(format!(
                    "swept resolution {n} does not divide the reference resolution {}",
                    self.n_ref
                )));
            }
        }
        if self.schemes.is_empty() {
            return Err(ExperimentError::InvalidConfig(
                "no schemes selected".into(),
            ));
        }
        Ok(())
    }
}

/// Why a sample was dropped for one scheme.
#[derive(Clone, Debug)]
pub struct Exclusion {
    pub sample: usize,
    pub reason: String,
}

/// Per-sample max-in-time H1 errors for one scheme, one entry per swept
/// resolution.
#[derive(Clone, Debug)]
pub struct SweepSamples {
    pub scheme: SchemeKind,
    /// `errors[sample_rank][sweep_index]`; excluded samples are absent.
    pub errors: Vec<Vec<f64>>,
    /// Sample indices backing each row of `errors`.
    pub sample_indices: Vec<usize>,
    pub exclusions: Vec<Exclusion>,
}

struct CoarseRun<'a> {
    scheme_index: usize,
    sweep_index: usize,
    stride: usize,
    h: f64,
    increments: Vec<[f64; 3]>,
    state: SpinorField,
    stepper: Stepper<'a>,
    next: usize,
    max_error: f64,
    failure: Option<String>,
}

enum SampleResult {
    /// `errors[scheme][sweep_index]`
    Ok(Vec<Vec<f64>>),
    ReferenceFailed(String),
    /// Per-scheme: either the errors or the failure reason.
    Partial(Vec<Result<Vec<f64>, String>>),
}

fn describe(err: &StepError, at_step: usize) -> String {
    match err {
        StepError::Blowup { h1, .. } => format!("blowup at step {at_step} (h1 {h1:.3e})"),
        StepError::NoConvergence { iterations } => {
            format!("no convergence at step {at_step} after {iterations} iterations")
        }
        StepError::Propagator(e) => format!("propagator failure at step {at_step}: {e}"),
    }
}

fn run_sample(cfg: &ErrorSweepConfig, sample: usize, x0: &SpinorField) -> SampleResult {
    let path = WienerPath::sample(cfg.seed, sample as u64, cfg.horizon, cfg.n_ref);
    let h_ref = cfg.horizon / cfg.n_ref as f64;
    let reference_increments = path.increments_at(cfg.n_ref).expect("n_ref divides itself");

    let scheme_configs: Vec<SchemeConfig> = cfg
        .schemes
        .iter()
        .map(|&s| cfg.scheme_config(s))
        .collect();
    let reference_config = cfg.scheme_config(SchemeKind::LieTrotter);

    let mut runs: Vec<CoarseRun> = Vec::with_capacity(cfg.schemes.len() * cfg.n_sweep.len());
    for (si, scheme_cfg) in scheme_configs.iter().enumerate() {
        for (ni, &n) in cfg.n_sweep.iter().enumerate() {
            runs.push(CoarseRun {
                scheme_index: si,
                sweep_index: ni,
                stride: cfg.n_ref / n,
                h: cfg.horizon / n as f64,
                increments: path.increments_at(n).expect("validated divisor"),
                state: x0.clone(),
                stepper: Stepper::new(scheme_cfg, &cfg.problem),
                next: 0,
                max_error: 0.0,
                failure: None,
            });
        }
    }

    let mut reference = x0.clone();
    let mut reference_stepper = Stepper::new(&reference_config, &cfg.problem);
    for m in 0..cfg.n_ref {
        match reference_stepper.advance(
            &reference,
            scaled_noise(reference_increments[m], h_ref),
            h_ref,
        ) {
            Ok(next) => reference = next,
            Err(e) => return SampleResult::ReferenceFailed(describe(&e, m + 1)),
        }
        let tick = m + 1;
        for run in &mut runs {
            if run.failure.is_some() || tick % run.stride != 0 {
                continue;
            }
            match run.stepper.advance(
                &run.state,
                scaled_noise(run.increments[run.next], run.h),
                run.h,
            ) {
                Ok(next) => {
                    run.state = next;
                    run.next += 1;
                    let err = h1_norm(&run.state.difference(&reference));
                    if err > run.max_error {
                        run.max_error = err;
                    }
                }
                Err(e) => run.failure = Some(describe(&e, run.next + 1)),
            }
        }
    }

    let mut per_scheme: Vec<Result<Vec<f64>, String>> = cfg
        .schemes
        .iter()
        .map(|_| Ok(vec![0.0; cfg.n_sweep.len()]))
        .collect();
    for run in runs {
        match run.failure {
            Some(reason) => {
                if per_scheme[run.scheme_index].is_ok() {
                    per_scheme[run.scheme_index] = Err(format!(
                        "n = {}: {reason}",
                        cfg.n_sweep[run.sweep_index]
                    ));
                }
            }
            None => {
                if let Ok(errors) = per_scheme[run.scheme_index].as_mut() {
                    errors[run.sweep_index] = run.max_error;
                }
            }
        }
    }
    if per_scheme.iter().all(|r| r.is_ok()) {
        SampleResult::Ok(per_scheme.into_iter().map(|r| r.unwrap()).collect())
    } else {
        SampleResult::Partial(per_scheme)
    }
}

/// Run the full common-random-number sweep; returns one [`SweepSamples`]
/// per scheme, in the configured order.
pub fn crn_error_sweep(cfg: &ErrorSweepConfig) -> Result<Vec<SweepSamples>, ExperimentError> {
    cfg.validate()?;
    let x0 = initial_condition(&cfg.initial, cfg.grid)?;

    let results: Vec<SampleResult> = with_pool(cfg.workers, || {
        (0..cfg.samples)
            .into_par_iter()
            .map(|sample| run_sample(cfg, sample, &x0))
            .collect()
    });

    let mut out: Vec<SweepSamples> = cfg
        .schemes
        .iter()
        .map(|&scheme| SweepSamples {
            scheme,
            errors: Vec::new(),
            sample_indices: Vec::new(),
            exclusions: Vec::new(),
        })
        .collect();
    for (sample, result) in results.into_iter().enumerate() {
        match result {
            SampleResult::Ok(per_scheme) => {
                for (bucket, errors) in out.iter_mut().zip(per_scheme) {
                    bucket.errors.push(errors);
                    bucket.sample_indices.push(sample);
                }
            }
            SampleResult::ReferenceFailed(reason) => {
                for bucket in &mut out {
                    bucket.exclusions.push(Exclusion {
                        sample,
                        reason: format!("reference: {reason}"),
                    });
                }
            }
            SampleResult::Partial(per_scheme) => {
                for (bucket, result) in out.iter_mut().zip(per_scheme) {
                    match result {
                        Ok(errors) => {
                            bucket.errors.push(errors);
                            bucket.sample_indices.push(sample);
                        }
                        Err(reason) => bucket.exclusions.push(Exclusion { sample, reason }),
                    }
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> ErrorSweepConfig {
        ErrorSweepConfig {
            grid: Grid1D::periodic(20.0 * std::f64::consts::PI, 128).unwrap(),
            problem: Problem::half_dispersion(1.0),
            initial: InitialCondition::standard_soliton(),
            horizon: 0.25,
            n_ref: 64,
            n_sweep: vec![16, 32, 64],
            samples: 2,
            seed: 99,
            workers: 1,
            schemes: vec![SchemeKind::LieTrotter],
            fixed_point_tol: 1e-12,
            max_fixed_point_iters: 100,
            blowup_threshold: 500.0,
        }
    }

    #[test]
    fn self_comparison_error_is_exactly_zero() {
        // LT at n = n_ref walks bit-for-bit with the reference
        let cfg = tiny_config();
        let sweeps = crn_error_sweep(&cfg).unwrap();
        for errors in &sweeps[0].errors {
            assert_eq!(errors[2], 0.0);
            assert!(errors[0] > 0.0);
        }
    }

    #[test]
    fn errors_shrink_with_resolution() {
        let cfg = tiny_config();
        let sweeps = crn_error_sweep(&cfg).unwrap();
        for errors in &sweeps[0].errors {
            assert!(errors[0] > errors[1]);
        }
    }

    #[test]
    fn invalid_divisor_is_rejected() {
        let mut cfg = tiny_config();
        cfg.n_sweep = vec![48];
        assert!(matches!(
            crn_error_sweep(&cfg),
            Err(ExperimentError::InvalidConfig(_))
        ));
    }

    #[test]
    fn worker_count_does_not_change_numbers() {
        let mut cfg = tiny_config();
        cfg.samples = 3;
        cfg.workers = 1;
        let one = crn_error_sweep(&cfg).unwrap();
        cfg.workers = 3;
        let many = crn_error_sweep(&cfg).unwrap();
        assert_eq!(one[0].errors, many[0].errors);
    }
}

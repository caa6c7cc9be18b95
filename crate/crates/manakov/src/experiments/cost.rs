//! Wall-clock cost against terminal accuracy for each scheme.

use crate::field::{h1_norm, initial_condition, Grid1D, InitialCondition};
use crate::integrators::{propagate, Problem, SchemeConfig, SchemeKind, TrajectoryOutcome};
use crate::noise::WienerPath;
use rayon::prelude::*;
use std::time::Instant;

use super::{with_pool, ExperimentError};

#[derive(Clone, Debug)]
pub struct CostConfig {
    pub grid: Grid1D,
    pub problem: Problem,
    pub initial: InitialCondition,
    pub horizon: f64,
    pub n_ref: usize,
    pub n_sweep: Vec<usize>,
    pub samples: usize,
    pub seed: u64,
    pub workers: usize,
    pub schemes: Vec<SchemeKind>,
    pub fixed_point_tol: f64,
    pub max_fixed_point_iters: usize,
    pub blowup_threshold: f64,
}

/// Mean stepping time and mean-square terminal H1 error at one resolution.
#[derive(Clone, Debug)]
pub struct CostRow {
    pub scheme: SchemeKind,
    pub n: usize,
    pub h: f64,
    pub mean_seconds: f64,
    pub mean_square_error: f64,
    pub samples_used: usize,
}

#[derive(Clone, Debug)]
pub struct CostReport {
    pub rows: Vec<CostRow>,
}

impl CostReport {
    pub fn mean_seconds(&self, scheme: SchemeKind, n: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.scheme == scheme && r.n == n)
            .map(|r| r.mean_seconds)
    }
}

struct SampleCost {
    /// `(seconds, squared_error)` per (scheme, n), `None` when the run failed.
    cells: Vec<Option<(f64, f64)>>,
}

/// Time the stepping loop of every (scheme, resolution) pair against a fine
/// Lie-Trotter reference; path generation and the reference run are excluded
/// from the timings.
pub fn cost_benchmark(cfg: &CostConfig) -> Result<CostReport, ExperimentError> {
    if cfg.samples == 0 || cfg.n_sweep.is_empty() {
        return Err(ExperimentError::InvalidConfig(
            "cost study needs samples and a resolution sweep".into(),
        ));
    }
    for &n in &cfg.n_sweep {
        if n == 0 || cfg.n_ref % n != 0 {
            return Err(ExperimentError::InvalidConfig(format!(
                "resolution {n} does not divide the reference {}",
                cfg.n_ref
            )));
        }
    }
    let x0 = initial_condition(&cfg.initial, cfg.grid)?;
    let reference_cfg = SchemeConfig {
        scheme: SchemeKind::LieTrotter,
        fixed_point_tol: cfg.fixed_point_tol,
        max_fixed_point_iters: cfg.max_fixed_point_iters,
        blowup_threshold: cfg.blowup_threshold,
    };

    let per_sample: Vec<Option<SampleCost>> = with_pool(cfg.workers, || {
        (0..cfg.samples)
            .into_par_iter()
            .map(|sample| {
                let path = WienerPath::sample(cfg.seed, sample as u64, cfg.horizon, cfg.n_ref);
                let h_ref = cfg.horizon / cfg.n_ref as f64;
                let ref_incs = path.increments_at(cfg.n_ref).expect("divides");
                let (reference, outcome, _, _, _) = propagate(
                    &x0,
                    &ref_incs,
                    h_ref,
                    &cfg.problem,
                    &reference_cfg,
                    |_, _| {},
                );
                if !matches!(outcome, TrajectoryOutcome::Completed) {
                    return None;
                }
                let mut cells = Vec::with_capacity(cfg.schemes.len() * cfg.n_sweep.len());
                for &scheme in &cfg.schemes {
                    let scheme_cfg = SchemeConfig {
                        scheme,
                        ..reference_cfg
                    };
                    for &n in &cfg.n_sweep {
                        let incs = path.increments_at(n).expect("validated divisor");
                        let h = cfg.horizon / n as f64;
                        let started = Instant::now();
                        let (state, outcome, _, _, _) =
                            propagate(&x0, &incs, h, &cfg.problem, &scheme_cfg, |_, _| {});
                        let seconds = started.elapsed().as_secs_f64();
                        if matches!(outcome, TrajectoryOutcome::Completed) {
                            let err = h1_norm(&state.difference(&reference));
                            cells.push(Some((seconds, err * err)));
                        } else {
                            cells.push(None);
                        }
                    }
                }
                Some(SampleCost { cells })
            })
            .collect()
    });

    let mut rows = Vec::new();
    let mut cell = 0usize;
    for &scheme in &cfg.schemes {
        for &n in &cfg.n_sweep {
            let mut seconds = 0.0;
            let mut sq_err = 0.0;
            let mut used = 0usize;
            for sample in per_sample.iter().flatten() {
                if let Some((s, e)) = sample.cells[cell] {
                    seconds += s;
                    sq_err += e;
                    used += 1;
                }
            }
            rows.push(CostRow {
                scheme,
                n,
                h: cfg.horizon / n as f64,
                mean_seconds: if used > 0 { seconds / used as f64 } else { f64::NAN },
                mean_square_error: if used > 0 { sq_err / used as f64 } else { f64::NAN },
                samples_used: used,
            });
            cell += 1;
        }
    }
    Ok(CostReport { rows })
}

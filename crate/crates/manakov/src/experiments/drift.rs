//! L2-norm drift comparison across schemes on common noise.

use crate::field::{initial_condition, l2_norm, Grid1D, InitialCondition};
use crate::integrators::{propagate, Problem, SchemeKind, TrajectoryOutcome};
use crate::noise::WienerPath;
use rayon::prelude::*;

use super::{with_pool, ExperimentError};

#[derive(Clone, Debug)]
pub struct DriftConfig {
    pub grid: Grid1D,
    pub problem: Problem,
    pub initial: InitialCondition,
    pub horizon: f64,
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub workers: usize,
    pub schemes: Vec<SchemeKind>,
    pub fixed_point_tol: f64,
    pub max_fixed_point_iters: usize,
    pub blowup_threshold: f64,
}

/// Worst deviation of the L2 norm from its initial value along one
/// trajectory.
#[derive(Clone, Debug)]
pub struct DriftRow {
    pub scheme: SchemeKind,
    pub sample: usize,
    pub max_drift: f64,
    /// log10 of the drift, the paper's plotting scale; -inf for zero drift.
    pub log10_drift: f64,
    pub completed: bool,
}

#[derive(Clone, Debug)]
pub struct DriftReport {
    pub rows: Vec<DriftRow>,
}

impl DriftReport {
    /// Per-scheme maxima over completed samples.
    pub fn max_drift(&self, scheme: SchemeKind) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.scheme == scheme && r.completed)
            .map(|r| r.max_drift)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Run every scheme over the same per-sample path and record the max norm
/// drift; a tripped guard marks the row incomplete rather than failing the
/// experiment.
pub fn l2_drift(cfg: &DriftConfig) -> Result<DriftReport, ExperimentError> {
    if cfg.samples == 0 || cfg.n == 0 {
        return Err(ExperimentError::InvalidConfig(
            "drift study needs at least one sample and one step".into(),
        ));
    }
    let x0 = initial_condition(&cfg.initial, cfg.grid)?;
    let initial_norm = l2_norm(&x0);
    let h = cfg.horizon / cfg.n as f64;

    let per_sample: Vec<Vec<DriftRow>> = with_pool(cfg.workers, || {
        (0..cfg.samples)
            .into_par_iter()
            .map(|sample| {
                let path = WienerPath::sample(cfg.seed, sample as u64, cfg.horizon, cfg.n);
                let increments = path.increments_at(cfg.n).expect("n divides itself");
                cfg.schemes
                    .iter()
                    .map(|&scheme| {
                        let scheme_cfg = crate::integrators::SchemeConfig {
                            scheme,
                            fixed_point_tol: cfg.fixed_point_tol,
                            max_fixed_point_iters: cfg.max_fixed_point_iters,
                            blowup_threshold: cfg.blowup_threshold,
                        };
                        let mut max_drift = 0.0f64;
                        let (_, outcome, _, _, _) = propagate(
                            &x0,
                            &increments,
                            h,
                            &cfg.problem,
                            &scheme_cfg,
                            |_, state| {
                                let drift = (l2_norm(state) - initial_norm).abs();
                                if drift > max_drift {
                                    max_drift = drift;
                                }
                            },
                        );
                        DriftRow {
                            scheme,
                            sample,
                            max_drift,
                            log10_drift: max_drift.log10(),
                            completed: matches!(outcome, TrajectoryOutcome::Completed),
                        }
                    })
                    .collect()
            })
            .collect()
    });

    Ok(DriftReport {
        rows: per_sample.into_iter().flatten().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::SpinorField;
    use crate::integrators::{RecordSpec, SchemeConfig};

    fn config() -> DriftConfig {
        DriftConfig {
            grid: Grid1D::periodic(20.0 * std::f64::consts::PI, 128).unwrap(),
            problem: Problem::half_dispersion(1.0),
            initial: InitialCondition::standard_soliton(),
            horizon: 0.5,
            n: 128,
            samples: 3,
            seed: 21,
            workers: 0,
            schemes: vec![SchemeKind::LieTrotter, SchemeKind::Exponential],
            fixed_point_tol: 1e-12,
            max_fixed_point_iters: 100,
            blowup_threshold: 500.0,
        }
    }

    #[test]
    fn lt_drift_is_machine_level_and_exp_is_not() {
        let report = l2_drift(&config()).unwrap();
        let lt = report.max_drift(SchemeKind::LieTrotter);
        let exp = report.max_drift(SchemeKind::Exponential);
        assert!(lt <= 1e-12, "LT drift {lt}");
        assert!(exp >= 1e-8, "EXP drift {exp}");
    }

    #[test]
    fn zero_initial_data_has_exactly_zero_drift() {
        // run the trajectory directly on a zero field
        let grid = Grid1D::periodic(10.0, 64).unwrap();
        let zero = SpinorField::zeros(grid);
        let path = WienerPath::sample(0, 0, 1.0, 32);
        let rec = crate::integrators::run_trajectory(
            &zero,
            &path,
            32,
            &SchemeConfig::new(SchemeKind::Exponential),
            &Problem::half_dispersion(1.0),
            &RecordSpec::observables(),
        )
        .unwrap();
        assert!(rec.observables.iter().all(|o| o.l2 == 0.0));
    }
}

//! Soliton observables under increasing noise intensity.

use crate::field::{initial_condition, Grid1D, InitialCondition, SolitonParams};
use crate::integrators::{
    run_trajectory, Problem, RecordSpec, SchemeConfig, SchemeKind, TrajectoryRecord,
};
use crate::noise::WienerPath;
use rayon::prelude::*;

use super::{with_pool, ExperimentError};

/// The three soliton coefficient presets used for the observable study:
/// amplitudes 1 / 1.2 / 1.5, mixing angles pi/3 / pi/2 / -pi/2, component
/// phases (pi/4, pi/2) / (-pi/4, pi/4) / (4pi/5, -pi/2), velocities 2 / 3 / 4.
pub fn observable_study_sets() -> [SolitonParams; 3] {
    use std::f64::consts::PI;
    [
        SolitonParams {
            amplitude: 1.0,
            velocity: 2.0,
            phase: 0.0,
            offset: 0.0,
            mixing: PI / 3.0,
            phase1: PI / 4.0,
            phase2: PI / 2.0,
        },
        SolitonParams {
            amplitude: 1.2,
            velocity: 3.0,
            phase: 0.0,
            offset: 0.0,
            mixing: PI / 2.0,
            phase1: -PI / 4.0,
            phase2: PI / 4.0,
        },
        SolitonParams {
            amplitude: 1.5,
            velocity: 4.0,
            phase: 0.0,
            offset: 0.0,
            mixing: -PI / 2.0,
            phase1: 4.0 * PI / 5.0,
            phase2: -PI / 2.0,
        },
    ]
}

#[derive(Clone, Debug)]
pub struct SolitonConfig {
    pub grid: Grid1D,
    /// Noise intensities to compare; one shared path drives all of them.
    pub noise_intensities: Vec<f64>,
    pub sets: Vec<SolitonParams>,
    pub horizon: f64,
    pub n: usize,
    pub seed: u64,
    pub workers: usize,
    /// Record observables every this many steps.
    pub observable_stride: usize,
    pub blowup_threshold: f64,
}

/// Observable time series of one (coefficient set, noise intensity) case.
#[derive(Clone, Debug)]
pub struct SolitonCase {
    pub set_index: usize,
    pub noise_intensity: f64,
    pub record: TrajectoryRecord,
}

/// Evolve each coefficient set under each noise intensity with the
/// Lie-Trotter scheme, sharing one Brownian path across all cases.
pub fn soliton_study(cfg: &SolitonConfig) -> Result<Vec<SolitonCase>, ExperimentError> {
    if cfg.sets.is_empty() || cfg.noise_intensities.is_empty() {
        return Err(ExperimentError::InvalidConfig(
            "soliton study needs coefficient sets and noise intensities".into(),
        ));
    }
    let path = WienerPath::sample(cfg.seed, 0, cfg.horizon, cfg.n);
    let mut cases: Vec<(usize, f64)> = Vec::new();
    for (si, _) in cfg.sets.iter().enumerate() {
        for &gamma in &cfg.noise_intensities {
            cases.push((si, gamma));
        }
    }
    let record_spec = RecordSpec {
        observable_stride: cfg.observable_stride.max(1),
        state_stride: 0,
        keep_final_state: false,
    };

    with_pool(cfg.workers, || {
        cases
            .into_par_iter()
            .map(|(set_index, gamma)| {
                let x0 = initial_condition(
                    &InitialCondition::Soliton(cfg.sets[set_index]),
                    cfg.grid,
                )?;
                let mut scheme_cfg = SchemeConfig::new(SchemeKind::LieTrotter);
                scheme_cfg.blowup_threshold = cfg.blowup_threshold;
                let record = run_trajectory(
                    &x0,
                    &path,
                    cfg.n,
                    &scheme_cfg,
                    &Problem::half_dispersion(gamma),
                    &record_spec,
                )?;
                Ok(SolitonCase {
                    set_index,
                    noise_intensity: gamma,
                    record,
                })
            })
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::stats;

    #[test]
    fn deterministic_set_one_conserves_width_and_drifts_center() {
        let cfg = SolitonConfig {
            grid: Grid1D::periodic(20.0 * std::f64::consts::PI, 1 << 10).unwrap(),
            noise_intensities: vec![0.0],
            sets: vec![observable_study_sets()[0]],
            horizon: 2.0,
            n: 256,
            seed: 5,
            workers: 0,
            observable_stride: 4,
            blowup_threshold: 500.0,
        };
        let cases = soliton_study(&cfg).unwrap();
        let obs = &cases[0].record.observables;
        assert!(cases[0].record.outcome.is_completed());

        let width0 = std::f64::consts::PI.powi(2) / 12.0; // eta = 1
        for o in obs {
            assert!(
                (o.pulse_width - width0).abs() < 0.01 * width0,
                "width {} vs {width0}",
                o.pulse_width
            );
            assert!((o.h1 - obs[0].h1).abs() < 0.01 * obs[0].h1);
        }
        let times: Vec<f64> = obs.iter().map(|o| o.time).collect();
        let centers: Vec<f64> = obs.iter().map(|o| o.mass_center).collect();
        let (slope, _) = stats::ols_fit(&times, &centers);
        assert!(
            (slope + 2.0).abs() < 0.02,
            "center slope {slope}, expected -kappa = -2"
        );
    }

    #[test]
    fn stochastic_cases_share_the_path_and_run() {
        let cfg = SolitonConfig {
            grid: Grid1D::periodic(20.0 * std::f64::consts::PI, 256).unwrap(),
            noise_intensities: vec![1.0, 0.05],
            sets: vec![observable_study_sets()[0]],
            horizon: 0.5,
            n: 64,
            seed: 5,
            workers: 0,
            observable_stride: 8,
            blowup_threshold: 500.0,
        };
        let cases = soliton_study(&cfg).unwrap();
        assert_eq!(cases.len(), 2);
        for c in &cases {
            assert!(c.record.outcome.is_completed());
            assert!(!c.record.observables.is_empty());
        }
    }
}

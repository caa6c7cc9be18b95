//! First-passage sweeps over power-law exponents and noise intensities.

use crate::field::{initial_condition, Grid1D, InitialCondition, NonlinearitySpec};
use crate::integrators::{
    run_trajectory, Problem, RecordSpec, SchemeConfig, SchemeKind, TrajectoryOutcome,
};
use crate::noise::WienerPath;
use rayon::prelude::*;

use super::{stats, with_pool, ExperimentError};

#[derive(Clone, Debug)]
pub struct BlowupConfig {
    pub grid: Grid1D,
    pub initial: InitialCondition,
    pub horizon: f64,
    pub n: usize,
    pub exponents: Vec<f64>,
    pub noise_intensities: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub workers: usize,
    /// H1 first-passage threshold.
    pub threshold: f64,
    pub dispersion: f64,
}

/// One trajectory's first-passage record.
#[derive(Clone, Debug)]
pub struct BlowupRecord {
    pub noise_intensity: f64,
    pub exponent: f64,
    pub sample: usize,
    /// Crossing step and time, when the H1 norm reached the threshold.
    pub crossing: Option<(usize, f64)>,
    pub h1_at_stop: f64,
    pub steps_completed: usize,
}

/// Per-(noise, exponent) aggregate.
#[derive(Clone, Debug)]
pub struct BlowupSummary {
    pub noise_intensity: f64,
    pub exponent: f64,
    pub samples: usize,
    pub crossed: usize,
    /// Median crossing time among crossed samples.
    pub median_crossing_time: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct BlowupReport {
    pub records: Vec<BlowupRecord>,
    pub summaries: Vec<BlowupSummary>,
}

impl BlowupReport {
    pub fn crossing(&self, gamma: f64, sigma: f64, sample: usize) -> Option<(usize, f64)> {
        self.records
            .iter()
            .find(|r| {
                r.noise_intensity == gamma && r.exponent == sigma && r.sample == sample
            })
            .and_then(|r| r.crossing)
    }
}

/// Sweep (noise intensity, exponent, sample) with the Lie-Trotter scheme and
/// record whether and when the H1 norm first crosses the guard. Blowup here
/// is the measured event, not an error.
pub fn blowup_sweep(cfg: &BlowupConfig) -> Result<BlowupReport, ExperimentError> {
    if cfg.exponents.is_empty() || cfg.noise_intensities.is_empty() || cfg.samples == 0 {
        return Err(ExperimentError::InvalidConfig(
            "blowup sweep needs exponents, noise intensities, and samples".into(),
        ));
    }
    let x0 = initial_condition(&cfg.initial, cfg.grid)?;
    let mut cases = Vec::new();
    for &gamma in &cfg.noise_intensities {
        for &sigma in &cfg.exponents {
            for sample in 0..cfg.samples {
                cases.push((gamma, sigma, sample));
            }
        }
    }

    let records: Vec<BlowupRecord> = with_pool(cfg.workers, || {
        cases
            .into_par_iter()
            .map(|(gamma, sigma, sample)| {
                let path = WienerPath::sample(cfg.seed, sample as u64, cfg.horizon, cfg.n);
                let problem = Problem {
                    noise_intensity: gamma,
                    dispersion: cfg.dispersion,
                    nonlinearity: NonlinearitySpec::power(sigma),
                };
                let mut scheme_cfg = SchemeConfig::new(SchemeKind::LieTrotter);
                scheme_cfg.blowup_threshold = cfg.threshold;
                let record = run_trajectory(
                    &x0,
                    &path,
                    cfg.n,
                    &scheme_cfg,
                    &problem,
                    &RecordSpec::final_state_only(),
                )?;
                let h = cfg.horizon / cfg.n as f64;
                let (crossing, h1_at_stop) = match record.outcome {
                    TrajectoryOutcome::Blowup { step, h1 } => {
                        (Some((step, step as f64 * h)), h1)
                    }
                    _ => {
                        let h1 = record
                            .final_state
                            .as_ref()
                            .map(crate::field::h1_norm)
                            .unwrap_or(f64::NAN);
                        (None, h1)
                    }
                };
                Ok(BlowupRecord {
                    noise_intensity: gamma,
                    exponent: sigma,
                    sample,
                    crossing,
                    h1_at_stop,
                    steps_completed: record.steps_completed,
                })
            })
            .collect::<Result<Vec<_>, ExperimentError>>()
    })?;

    let mut summaries = Vec::new();
    for &gamma in &cfg.noise_intensities {
        for &sigma in &cfg.exponents {
            let group: Vec<&BlowupRecord> = records
                .iter()
                .filter(|r| r.noise_intensity == gamma && r.exponent == sigma)
                .collect();
            let crossing_times: Vec<f64> = group
                .iter()
                .filter_map(|r| r.crossing.map(|(_, t)| t))
                .collect();
            summaries.push(BlowupSummary {
                noise_intensity: gamma,
                exponent: sigma,
                samples: group.len(),
                crossed: crossing_times.len(),
                median_crossing_time: if crossing_times.is_empty() {
                    None
                } else {
                    Some(stats::median(&crossing_times))
                },
            });
        }
    }
    Ok(BlowupReport { records, summaries })
}

//! Strong, in-probability, and almost-sure convergence studies built on the
//! common-random-number error sweep.

use crate::integrators::SchemeKind;

use super::stats::{self, TTest};
use super::sweep::{crn_error_sweep, ErrorSweepConfig, Exclusion, SweepSamples};
use super::ExperimentError;

/// One resolution of a strong-convergence table.
#[derive(Clone, Debug)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    /// Max-in-time H1 errors of the included samples.
    pub errors: Vec<f64>,
    /// Mean of the squared errors.
    pub mean_square: f64,
}

/// Per-scheme strong-convergence results with the fitted log-log slope of
/// the mean-square error against the step size.
#[derive(Clone, Debug)]
pub struct ConvergenceTable {
    pub scheme: SchemeKind,
    pub n_ref: usize,
    pub rows: Vec<ConvergenceRow>,
    pub slope: f64,
    pub intercept: f64,
    pub samples_total: usize,
    pub exclusions: Vec<Exclusion>,
}

fn to_table(cfg: &ErrorSweepConfig, sweep: SweepSamples) -> ConvergenceTable {
    let rows: Vec<ConvergenceRow> = cfg
        .n_sweep
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let errors: Vec<f64> = sweep.errors.iter().map(|e| e[i]).collect();
            let mean_square = if errors.is_empty() {
                f64::NAN
            } else {
                errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64
            };
            ConvergenceRow {
                n,
                h: cfg.horizon / n as f64,
                errors,
                mean_square,
            }
        })
        .collect();
    // fit over rows with meaningful (positive) averages
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.mean_square.is_finite() && r.mean_square > 0.0)
        .map(|r| (r.h, r.mean_square))
        .collect();
    let (slope, intercept) = if pts.len() >= 2 {
        stats::log_log_slope(
            &pts.iter().map(|p| p.0).collect::<Vec<_>>(),
            &pts.iter().map(|p| p.1).collect::<Vec<_>>(),
        )
    } else {
        (f64::NAN, f64::NAN)
    };
    ConvergenceTable {
        scheme: sweep.scheme,
        n_ref: cfg.n_ref,
        rows,
        slope,
        intercept,
        samples_total: cfg.samples,
        exclusions: sweep.exclusions,
    }
}

/// Mean-square convergence against the fine Lie-Trotter reference; one table
/// per configured scheme.
pub fn strong_convergence(
    cfg: &ErrorSweepConfig,
) -> Result<Vec<ConvergenceTable>, ExperimentError> {
    let sweeps = crn_error_sweep(cfg)?;
    Ok(sweeps.into_iter().map(|s| to_table(cfg, s)).collect())
}

/// Fraction of samples whose max-in-time error reaches `C h^delta`.
#[derive(Clone, Copy, Debug)]
pub struct ProportionCell {
    pub delta: f64,
    pub constant: f64,
    pub n: usize,
    pub h: f64,
    pub proportion: f64,
}

/// Empirical constant at one allowed proportion: `C(delta, h, P)` is the
/// upper quantile of `e_N / h^delta` with the `>=` convention, and
/// `normalized` divides by `max_h C(delta, h, 0)`.
#[derive(Clone, Copy, Debug)]
pub struct ConstantCell {
    pub delta: f64,
    pub n: usize,
    pub h: f64,
    pub proportion: f64,
    pub constant: f64,
    pub normalized: f64,
}

#[derive(Clone, Debug)]
pub struct ProbabilityEstimate {
    pub scheme: SchemeKind,
    pub proportions: Vec<ProportionCell>,
    pub constants: Vec<ConstantCell>,
    pub samples_used: usize,
    pub exclusions: Vec<Exclusion>,
}

#[derive(Clone, Debug)]
pub struct ProbabilityConfig {
    pub sweep: ErrorSweepConfig,
    /// Candidate orders `delta`.
    pub deltas: Vec<f64>,
    /// Thresholds `C` for the proportion estimates.
    pub constants: Vec<f64>,
}

/// Order-in-probability study: proportions `P(delta, C, h)` and normalized
/// constants per scheme.
pub fn probability_convergence(
    cfg: &ProbabilityConfig,
) -> Result<Vec<ProbabilityEstimate>, ExperimentError> {
    if cfg.deltas.is_empty() {
        return Err(ExperimentError::InvalidConfig(
            "probability study needs at least one delta".into(),
        ));
    }
    let sweeps = crn_error_sweep(&cfg.sweep)?;
    let mut out = Vec::with_capacity(sweeps.len());
    for sweep in sweeps {
        let used = sweep.errors.len();
        let mut proportions = Vec::new();
        let mut constants = Vec::new();
        for &delta in &cfg.deltas {
            // per resolution: scaled errors e / h^delta, sorted descending
            let mut scaled_by_n: Vec<Vec<f64>> = Vec::with_capacity(cfg.sweep.n_sweep.len());
            for (i, &n) in cfg.sweep.n_sweep.iter().enumerate() {
                let h = cfg.sweep.horizon / n as f64;
                let mut scaled: Vec<f64> = sweep
                    .errors
                    .iter()
                    .map(|e| e[i] / h.powf(delta))
                    .collect();
                scaled.sort_by(|a, b| b.partial_cmp(a).unwrap());
                scaled_by_n.push(scaled);

                for &c in &cfg.constants {
                    let hits = sweep.errors.iter().filter(|e| e[i] >= c * h.powf(delta)).count();
                    proportions.push(ProportionCell {
                        delta,
                        constant: c,
                        n,
                        h,
                        proportion: if used == 0 {
                            f64::NAN
                        } else {
                            hits as f64 / used as f64
                        },
                    });
                }
            }
            if used == 0 {
                continue;
            }
            // C(delta, h, 0) is the max; the normalizer is its max over h
            let normalizer = scaled_by_n
                .iter()
                .map(|s| s[0])
                .fold(f64::NEG_INFINITY, f64::max);
            for (i, &n) in cfg.sweep.n_sweep.iter().enumerate() {
                let h = cfg.sweep.horizon / n as f64;
                let sorted = &scaled_by_n[i];
                for k in 0..=used {
                    let constant = if k == 0 { sorted[0] } else { sorted[k - 1] };
                    constants.push(ConstantCell {
                        delta,
                        n,
                        h,
                        proportion: k as f64 / used as f64,
                        constant,
                        normalized: constant / normalizer,
                    });
                }
            }
        }
        out.push(ProbabilityEstimate {
            scheme: sweep.scheme,
            proportions,
            constants,
            samples_used: used,
            exclusions: sweep.exclusions,
        });
    }
    Ok(out)
}

/// Almost-sure order estimate for one scheme.
#[derive(Clone, Debug)]
pub struct ASOrderEstimate {
    pub scheme: SchemeKind,
    pub deltas: Vec<f64>,
    /// `k_delta[delta_index][sample_rank]`: the minimal constant with
    /// `K h^delta >= e_N` across the sweep.
    pub k_delta: Vec<Vec<f64>>,
    /// `e_delta[delta_index][sample_rank]`: worst gap `|K h^delta - e_N|`.
    pub e_delta: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub median: Vec<f64>,
    pub std_dev: Vec<f64>,
    /// One-sided paired tests of `E[e_0.5] < E[e_delta]` for each other delta.
    pub t_tests: Vec<(f64, TTest)>,
    pub samples_used: usize,
    pub exclusions: Vec<Exclusion>,
}

#[derive(Clone, Debug)]
pub struct ASOrderConfig {
    pub sweep: ErrorSweepConfig,
    pub deltas: Vec<f64>,
}

/// Almost-sure convergence study: per-sample envelope constants, their
/// fit-gap statistics, and paired t-tests against `delta = 1/2`.
pub fn as_convergence(cfg: &ASOrderConfig) -> Result<Vec<ASOrderEstimate>, ExperimentError> {
    if cfg.deltas.is_empty() {
        return Err(ExperimentError::InvalidConfig(
            "almost-sure study needs at least one delta".into(),
        ));
    }
    let reference_delta = 0.5;
    let ref_index = cfg.deltas.iter().position(|&d| d == reference_delta);
    let hs = cfg.sweep.step_sizes();
    let sweeps = crn_error_sweep(&cfg.sweep)?;

    let mut out = Vec::with_capacity(sweeps.len());
    for sweep in sweeps {
        let used = sweep.errors.len();
        let mut k_delta = vec![Vec::with_capacity(used); cfg.deltas.len()];
        let mut e_delta = vec![Vec::with_capacity(used); cfg.deltas.len()];
        for errors in &sweep.errors {
            for (di, &delta) in cfg.deltas.iter().enumerate() {
                let k = errors
                    .iter()
                    .zip(&hs)
                    .map(|(e, h)| e / h.powf(delta))
                    .fold(f64::NEG_INFINITY, f64::max);
                let gap = errors
                    .iter()
                    .zip(&hs)
                    .map(|(e, h)| (k * h.powf(delta) - e).abs())
                    .fold(0.0, f64::max);
                k_delta[di].push(k);
                e_delta[di].push(gap);
            }
        }
        let mean: Vec<f64> = e_delta
            .iter()
            .map(|v| if v.is_empty() { f64::NAN } else { stats::mean(v) })
            .collect();
        let median: Vec<f64> = e_delta
            .iter()
            .map(|v| if v.is_empty() { f64::NAN } else { stats::median(v) })
            .collect();
        let std_dev: Vec<f64> = e_delta
            .iter()
            .map(|v| if v.len() < 2 { f64::NAN } else { stats::std_dev(v) })
            .collect();

        let mut t_tests = Vec::new();
        if let Some(ri) = ref_index {
            for (di, &delta) in cfg.deltas.iter().enumerate() {
                if di == ri || used < 2 {
                    continue;
                }
                let diffs: Vec<f64> = e_delta[di]
                    .iter()
                    .zip(&e_delta[ri])
                    .map(|(other, half)| other - half)
                    .collect();
                match stats::paired_t_test(&diffs, true) {
                    Ok(test) => t_tests.push((delta, test)),
                    Err(_) => t_tests.push((
                        delta,
                        TTest {
                            statistic: f64::NAN,
                            p_value: f64::NAN,
                            dof: (used - 1) as f64,
                        },
                    )),
                }
            }
        }
        out.push(ASOrderEstimate {
            scheme: sweep.scheme,
            deltas: cfg.deltas.clone(),
            k_delta,
            e_delta,
            mean,
            median,
            std_dev,
            t_tests,
            samples_used: used,
            exclusions: sweep.exclusions,
        });
    }
    Ok(out)
}

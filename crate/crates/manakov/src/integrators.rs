//! The four one-step schemes and the trajectory driver.
//!
//! All schemes share the same linear propagator and nonlinearity primitives
//! and consume the same scaled noise triples, so trajectories driven by one
//! Wiener path differ only by the time discretization:
//!
//! - Lie-Trotter: exact pointwise phase rotation of the nonlinear flow,
//!   then the propagator. Both substeps are isometries, so the discrete L2
//!   norm is preserved to rounding.
//! - Exponential: propagator applied to `X + i h F(X)`; cheap and explicit,
//!   does not preserve the L2 norm.
//! - Crank-Nicolson: nonlinearly implicit midpoint rule, solved by Picard
//!   iteration that reuses the factored linear system.
//! - Relaxation: linearly implicit midpoint rule with the lagged auxiliary
//!   field `Phi`; direct solve in the finite-difference backend, Picard on
//!   the potential term in the spectral backend.

use crate::field::{h1_norm, l2_norm, NonlinearitySpec, SpinorField};
use crate::noise::{NoiseError, WienerPath};
use crate::propagator::{BandedPropagator, LinearOperatorParams, Propagator, PropagatorError};
use num_complex::Complex64;
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StepError {
    #[error("H1 norm {h1} exceeded the blowup guard {guard}")]
    Blowup { h1: f64, guard: f64 },
    #[error("fixed-point iteration did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error(transparent)]
    Propagator(#[from] PropagatorError),
}

/// Which one-step scheme to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    LieTrotter,
    Exponential,
    CrankNicolson,
    Relaxation,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [
        SchemeKind::LieTrotter,
        SchemeKind::Exponential,
        SchemeKind::CrankNicolson,
        SchemeKind::Relaxation,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            SchemeKind::LieTrotter => "lt",
            SchemeKind::Exponential => "exp",
            SchemeKind::CrankNicolson => "cn",
            SchemeKind::Relaxation => "relax",
        }
    }

    pub fn parse(s: &str) -> Option<SchemeKind> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lt" | "lie-trotter" | "lietrotter" => Some(SchemeKind::LieTrotter),
            "exp" | "exponential" | "sexp" => Some(SchemeKind::Exponential),
            "cn" | "crank-nicolson" | "cranknicolson" => Some(SchemeKind::CrankNicolson),
            "relax" | "relaxation" => Some(SchemeKind::Relaxation),
            _ => None,
        }
    }
}

/// Scheme identity plus solver tolerances and the blowup guard.
#[derive(Clone, Copy, Debug)]
pub struct SchemeConfig {
    pub scheme: SchemeKind,
    /// Fixed-point tolerance (absolute, in L2) for the implicit schemes.
    pub fixed_point_tol: f64,
    /// Iteration cap before an implicit step reports no convergence.
    pub max_fixed_point_iters: usize,
    /// H1 threshold checked after every step.
    pub blowup_threshold: f64,
}

impl SchemeConfig {
    pub fn new(scheme: SchemeKind) -> Self {
        SchemeConfig {
            scheme,
            fixed_point_tol: 1e-12,
            max_fixed_point_iters: 100,
            blowup_threshold: 500.0,
        }
    }
}

/// Equation parameters shared by every step of a run.
#[derive(Clone, Copy, Debug)]
pub struct Problem {
    /// Noise intensity `gamma >= 0`.
    pub noise_intensity: f64,
    /// Coefficient of the second derivative (1 or 1/2).
    pub dispersion: f64,
    pub nonlinearity: NonlinearitySpec,
}

impl Problem {
    /// The soliton-bearing form: half dispersion, cubic coupling.
    pub fn half_dispersion(noise_intensity: f64) -> Self {
        Problem {
            noise_intensity,
            dispersion: 0.5,
            nonlinearity: NonlinearitySpec::cubic(),
        }
    }

    fn operator_params(&self, chi: [f64; 3], step: f64) -> LinearOperatorParams {
        LinearOperatorParams {
            step,
            noise_intensity: self.noise_intensity,
            dispersion: self.dispersion,
            scaled_noise: chi,
        }
    }
}

fn guard_blowup(state: SpinorField, guard: f64) -> Result<SpinorField, StepError> {
    let h1 = h1_norm(&state);
    if !h1.is_finite() || h1 > guard {
        return Err(StepError::Blowup { h1, guard });
    }
    Ok(state)
}

/// Exact pointwise phase rotation of the nonlinear flow: the modulus is
/// conserved, so over one step the flow is multiplication by
/// `exp(i h s (|X|^2)^sigma)` with `s` the (frozen) cutoff factor.
fn nonlinear_phase(x: &SpinorField, step: f64, nonlin: &NonlinearitySpec) -> SpinorField {
    let scale = nonlin.cutoff_scale(x);
    let values = x
        .values()
        .iter()
        .map(|v| {
            let phase =
                Complex64::cis(step * scale * nonlin.power_term(v[0].norm_sqr() + v[1].norm_sqr()));
            [v[0] * phase, v[1] * phase]
        })
        .collect();
    SpinorField::from_values(*x.grid(), values)
}

/// One Lie-Trotter step: closed-form nonlinear flow, then the propagator.
pub fn lt_step(
    x: &SpinorField,
    chi: [f64; 3],
    step: f64,
    problem: &Problem,
    cfg: &SchemeConfig,
) -> Result<SpinorField, StepError> {
    let rotated = nonlinear_phase(x, step, &problem.nonlinearity);
    let prop = Propagator::build(&problem.operator_params(chi, step), *x.grid())?;
    guard_blowup(prop.apply(&rotated), cfg.blowup_threshold)
}

/// One exponential-integrator step: propagator applied to `X + i h F(X)`.
pub fn exp_step(
    x: &SpinorField,
    chi: [f64; 3],
    step: f64,
    problem: &Problem,
    cfg: &SchemeConfig,
) -> Result<SpinorField, StepError> {
    let nonlin = &problem.nonlinearity;
    let scale = nonlin.cutoff_scale(x);
    let values = x
        .values()
        .iter()
        .map(|v| {
            let coeff = Complex64::new(
                0.0,
                step * scale * nonlin.power_term(v[0].norm_sqr() + v[1].norm_sqr()),
            );
            [v[0] + v[0] * coeff, v[1] + v[1] * coeff]
        })
        .collect();
    let shifted = SpinorField::from_values(*x.grid(), values);
    let prop = Propagator::build(&problem.operator_params(chi, step), *x.grid())?;
    guard_blowup(prop.apply(&shifted), cfg.blowup_threshold)
}

/// Midpoint nonlinearity `1/2 ((|X|^2)^s + (|Z|^2)^s) (X + Z)/2`.
fn cn_nonlinear_term(
    x: &SpinorField,
    z: &SpinorField,
    nonlin: &NonlinearitySpec,
    scale: f64,
    step: f64,
) -> SpinorField {
    let values = x
        .values()
        .iter()
        .zip(z.values())
        .map(|(xv, zv)| {
            let g = 0.5
                * scale
                * (nonlin.power_term(xv[0].norm_sqr() + xv[1].norm_sqr())
                    + nonlin.power_term(zv[0].norm_sqr() + zv[1].norm_sqr()));
            let coeff = Complex64::new(0.0, step * g * 0.5);
            [
                coeff * (xv[0] + zv[0]),
                coeff * (xv[1] + zv[1]),
            ]
        })
        .collect();
    SpinorField::from_values(*x.grid(), values)
}

/// One Crank-Nicolson step with Picard iteration on the implicit
/// nonlinearity; returns the state and the iteration count.
pub fn cn_step_counted(
    x: &SpinorField,
    chi: [f64; 3],
    step: f64,
    problem: &Problem,
    cfg: &SchemeConfig,
) -> Result<(SpinorField, usize), StepError> {
    let prop = Propagator::build(&problem.operator_params(chi, step), *x.grid())?;
    let linear_rhs = prop.apply_rhs(x);
    let scale = problem.nonlinearity.cutoff_scale(x);
    let mut z = x.clone();
    for iter in 1..=cfg.max_fixed_point_iters {
        let g = cn_nonlinear_term(x, &z, &problem.nonlinearity, scale, step);
        let rhs = SpinorField::from_values(
            *x.grid(),
            linear_rhs
                .values()
                .iter()
                .zip(g.values())
                .map(|(a, b)| [a[0] + b[0], a[1] + b[1]])
                .collect(),
        );
        let next = prop.solve_lhs(&rhs);
        let change = l2_norm(&next.difference(&z));
        z = next;
        if change <= cfg.fixed_point_tol {
            return guard_blowup(z, cfg.blowup_threshold).map(|s| (s, iter));
        }
    }
    Err(StepError::NoConvergence {
        iterations: cfg.max_fixed_point_iters,
    })
}

/// One Crank-Nicolson step.
pub fn cn_step(
    x: &SpinorField,
    chi: [f64; 3],
    step: f64,
    problem: &Problem,
    cfg: &SchemeConfig,
) -> Result<SpinorField, StepError> {
    cn_step_counted(x, chi, step, problem, cfg).map(|(s, _)| s)
}

/// One relaxation step. `phi_prev` is the lagged auxiliary field
/// `Phi^{n-1/2}`; the update is `Phi^{n+1/2} = 2 s (|X|^2)^sigma - Phi^{n-1/2}`
/// followed by the linearly implicit midpoint solve. Returns the new state,
/// the advanced `Phi`, and the Picard iteration count (0 on the direct
/// finite-difference path).
pub fn relax_step(
    x: &SpinorField,
    phi_prev: &[f64],
    chi: [f64; 3],
    step: f64,
    problem: &Problem,
    cfg: &SchemeConfig,
) -> Result<(SpinorField, Vec<f64>, usize), StepError> {
    assert_eq!(phi_prev.len(), x.grid().dof(), "phi length mismatch");
    let nonlin = &problem.nonlinearity;
    let scale = nonlin.cutoff_scale(x);
    let phi_next: Vec<f64> = x
        .values()
        .iter()
        .zip(phi_prev)
        .map(|(v, &p)| 2.0 * scale * nonlin.power_term(v[0].norm_sqr() + v[1].norm_sqr()) - p)
        .collect();

    let params = problem.operator_params(chi, step);
    match x.grid().boundary() {
        crate::field::Boundary::Dirichlet => {
            // fold i h/2 Phi into the diagonal and solve directly
            let potential: Vec<f64> = phi_next.iter().map(|p| 0.5 * step * p).collect();
            let system = BandedPropagator::build(&params, *x.grid(), Some(&potential))?;
            let next = system.solve(&system.apply_rhs(x));
            guard_blowup(next, cfg.blowup_threshold).map(|s| (s, phi_next, 0))
        }
        crate::field::Boundary::Periodic => {
            // Picard on the potential term: (Id + H/2) Z = (Id - H/2) X
            //                                + i h/2 Phi (X + Z)
            let prop = Propagator::build(&params, *x.grid())?;
            let linear_rhs = prop.apply_rhs(x);
            let mut z = x.clone();
            for iter in 1..=cfg.max_fixed_point_iters {
                let rhs = SpinorField::from_values(
                    *x.grid(),
                    linear_rhs
                        .values()
                        .iter()
                        .zip(x.values())
                        .zip(z.values())
                        .zip(&phi_next)
                        .map(|(((lin, xv), zv), &p)| {
                            let coeff = Complex64::new(0.0, 0.5 * step * p);
                            [
                                lin[0] + coeff * (xv[0] + zv[0]),
                                lin[1] + coeff * (xv[1] + zv[1]),
                            ]
                        })
                        .collect(),
                );
                let next = prop.solve_lhs(&rhs);
                let change = l2_norm(&next.difference(&z));
                z = next;
                if change <= cfg.fixed_point_tol {
                    return guard_blowup(z, cfg.blowup_threshold)
                        .map(|s| (s, phi_next, iter));
                }
            }
            Err(StepError::NoConvergence {
                iterations: cfg.max_fixed_point_iters,
            })
        }
    }
}

/// Initial lagged field for the relaxation scheme.
pub fn relax_initial_phi(x: &SpinorField, nonlin: &NonlinearitySpec) -> Vec<f64> {
    let scale = nonlin.cutoff_scale(x);
    x.values()
        .iter()
        .map(|v| scale * nonlin.power_term(v[0].norm_sqr() + v[1].norm_sqr()))
        .collect()
}

/// How a trajectory ended.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TrajectoryOutcome {
    Completed,
    /// The H1 guard tripped after `step` steps.
    Blowup { step: usize, h1: f64 },
    /// An implicit solve stalled at `step`.
    NoConvergence { step: usize },
}

impl TrajectoryOutcome {
    pub fn is_completed(&self) -> bool {
        matches!(self, TrajectoryOutcome::Completed)
    }
}

/// Observable values at one recorded time.
#[derive(Clone, Copy, Debug)]
pub struct ObservableSample {
    pub step: usize,
    pub time: f64,
    pub l2: f64,
    pub h1: f64,
    pub hamiltonian: f64,
    /// NaN for zero-mass fields.
    pub mass_center: f64,
    pub pulse_width: f64,
}

fn observe(step: usize, time: f64, x: &SpinorField) -> ObservableSample {
    ObservableSample {
        step,
        time,
        l2: l2_norm(x),
        h1: h1_norm(x),
        hamiltonian: crate::field::hamiltonian(x),
        mass_center: crate::field::mass_center(x).unwrap_or(f64::NAN),
        pulse_width: crate::field::pulse_width(x).unwrap_or(f64::NAN),
    }
}

/// What a trajectory run should keep.
#[derive(Clone, Copy, Debug)]
pub struct RecordSpec {
    /// Record the observable set every `observable_stride` steps (0 = never).
    pub observable_stride: usize,
    /// Keep full states every `state_stride` steps (0 = never).
    pub state_stride: usize,
    /// Keep the final state.
    pub keep_final_state: bool,
}

impl RecordSpec {
    pub fn observables() -> Self {
        RecordSpec {
            observable_stride: 1,
            state_stride: 0,
            keep_final_state: false,
        }
    }

    pub fn final_state_only() -> Self {
        RecordSpec {
            observable_stride: 0,
            state_stride: 0,
            keep_final_state: true,
        }
    }
}

/// Everything a trajectory run produces.
#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub outcome: TrajectoryOutcome,
    pub steps_completed: usize,
    pub step_size: f64,
    pub observables: Vec<ObservableSample>,
    pub states: Vec<(usize, SpinorField)>,
    pub final_state: Option<SpinorField>,
    /// Wall clock of the stepping loop only.
    pub stepping_time: Duration,
    /// Total and per-step-maximum Picard iterations (implicit schemes).
    pub fixed_point_total: usize,
    pub fixed_point_max: usize,
}

/// Stateful one-step driver for a fixed scheme and problem. Carries the
/// relaxation scheme's lagged field and the Picard iteration counters, so
/// several trajectories can advance in lockstep (the common-random-number
/// sweeps step a reference and many coarse runs through interleaved calls).
pub struct Stepper<'a> {
    cfg: &'a SchemeConfig,
    problem: &'a Problem,
    aux: Option<Vec<f64>>,
    pub fixed_point_total: usize,
    pub fixed_point_max: usize,
}

impl<'a> Stepper<'a> {
    pub fn new(cfg: &'a SchemeConfig, problem: &'a Problem) -> Self {
        Stepper {
            cfg,
            problem,
            aux: None,
            fixed_point_total: 0,
            fixed_point_max: 0,
        }
    }

    /// Advance one step with the scaled noise triple `chi`.
    pub fn advance(
        &mut self,
        state: &SpinorField,
        chi: [f64; 3],
        h: f64,
    ) -> Result<SpinorField, StepError> {
        let (next, iters) = match self.cfg.scheme {
            SchemeKind::LieTrotter => {
                lt_step(state, chi, h, self.problem, self.cfg).map(|s| (s, 0))?
            }
            SchemeKind::Exponential => {
                exp_step(state, chi, h, self.problem, self.cfg).map(|s| (s, 0))?
            }
            SchemeKind::CrankNicolson => cn_step_counted(state, chi, h, self.problem, self.cfg)?,
            SchemeKind::Relaxation => {
                let phi = self
                    .aux
                    .get_or_insert_with(|| relax_initial_phi(state, &self.problem.nonlinearity));
                let (next, phi_next, iters) =
                    relax_step(state, phi, chi, h, self.problem, self.cfg)?;
                self.aux = Some(phi_next);
                (next, iters)
            }
        };
        self.fixed_point_total += iters;
        self.fixed_point_max = self.fixed_point_max.max(iters);
        Ok(next)
    }
}

/// Scaled normals `increment / sqrt(h)` consumed by the steppers.
pub fn scaled_noise(increment: [f64; 3], h: f64) -> [f64; 3] {
    let s = h.sqrt();
    [increment[0] / s, increment[1] / s, increment[2] / s]
}

/// Iterate the chosen scheme over the given increments, visiting every
/// state. The visitor sees `(step_index, state)` after each completed step;
/// step errors terminate the walk and are returned as data.
pub fn propagate<V>(
    x0: &SpinorField,
    increments: &[[f64; 3]],
    h: f64,
    problem: &Problem,
    cfg: &SchemeConfig,
    mut visit: V,
) -> (SpinorField, TrajectoryOutcome, usize, usize, usize)
where
    V: FnMut(usize, &SpinorField),
{
    let mut state = x0.clone();
    let mut stepper = Stepper::new(cfg, problem);
    for (n, inc) in increments.iter().enumerate() {
        match stepper.advance(&state, scaled_noise(*inc, h), h) {
            Ok(next) => {
                state = next;
                visit(n + 1, &state);
            }
            Err(StepError::Blowup { h1, .. }) => {
                return (
                    state,
                    TrajectoryOutcome::Blowup { step: n + 1, h1 },
                    n,
                    stepper.fixed_point_total,
                    stepper.fixed_point_max,
                );
            }
            Err(StepError::NoConvergence { .. }) => {
                return (
                    state,
                    TrajectoryOutcome::NoConvergence { step: n + 1 },
                    n,
                    stepper.fixed_point_total,
                    stepper.fixed_point_max,
                );
            }
            Err(StepError::Propagator(e)) => {
                // treated as fatal: an invertibility failure here means the
                // discretization itself is broken
                panic!("propagator failure at step {}: {e}", n + 1);
            }
        }
    }
    let (fp_total, fp_max) = (stepper.fixed_point_total, stepper.fixed_point_max);
    (state, TrajectoryOutcome::Completed, increments.len(), fp_total, fp_max)
}

/// Run a full trajectory over `n` steps of the given path, recording what
/// `record` asks for. A failed trajectory is data, not a crash: blowup or a
/// stalled solve set the outcome and truncate the records.
pub fn run_trajectory(
    x0: &SpinorField,
    path: &WienerPath,
    n: usize,
    cfg: &SchemeConfig,
    problem: &Problem,
    record: &RecordSpec,
) -> Result<TrajectoryRecord, NoiseError> {
    let mut observables = Vec::new();
    let mut states = Vec::new();
    if record.observable_stride > 0 {
        observables.push(observe(0, 0.0, x0));
    }
    if record.state_stride > 0 {
        states.push((0, x0.clone()));
    }
    if n == 0 {
        return Ok(TrajectoryRecord {
            outcome: TrajectoryOutcome::Completed,
            steps_completed: 0,
            step_size: 0.0,
            observables,
            states,
            final_state: record.keep_final_state.then(|| x0.clone()),
            stepping_time: Duration::ZERO,
            fixed_point_total: 0,
            fixed_point_max: 0,
        });
    }

    let increments = path.increments_at(n)?;
    let h = path.horizon() / n as f64;
    let started = Instant::now();
    let (final_state, outcome, steps, fp_total, fp_max) =
        propagate(x0, &increments, h, problem, cfg, |step, state| {
            if record.observable_stride > 0 && step % record.observable_stride == 0 {
                observables.push(observe(step, step as f64 * h, state));
            }
            if record.state_stride > 0 && step % record.state_stride == 0 {
                states.push((step, state.clone()));
            }
        });
    let stepping_time = started.elapsed();

    Ok(TrajectoryRecord {
        outcome,
        steps_completed: steps,
        step_size: h,
        observables,
        states,
        final_state: record.keep_final_state.then_some(final_state),
        stepping_time,
        fixed_point_total: fp_total,
        fixed_point_max: fp_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{
        initial_condition, Grid1D, InitialCondition, NonlinearitySpec, SpinorField,
    };
    use num_complex::Complex64;

    fn grid() -> Grid1D {
        Grid1D::periodic(20.0 * std::f64::consts::PI, 256).unwrap()
    }

    fn soliton() -> SpinorField {
        initial_condition(&InitialCondition::standard_soliton(), grid()).unwrap()
    }

    fn deterministic() -> Problem {
        Problem::half_dispersion(0.0)
    }

    #[test]
    fn zero_field_is_fixed_point_of_all_schemes() {
        let zero = SpinorField::zeros(grid());
        let cfg_of = SchemeConfig::new;
        let problem = Problem::half_dispersion(1.0);
        let chi = [0.4, -0.2, 0.9];
        assert_eq!(
            lt_step(&zero, chi, 0.01, &problem, &cfg_of(SchemeKind::LieTrotter)).unwrap(),
            zero
        );
        assert_eq!(
            exp_step(&zero, chi, 0.01, &problem, &cfg_of(SchemeKind::Exponential)).unwrap(),
            zero
        );
        let (z, iters) =
            cn_step_counted(&zero, chi, 0.01, &problem, &cfg_of(SchemeKind::CrankNicolson))
                .unwrap();
        assert_eq!(z, zero);
        assert_eq!(iters, 1);
        let phi = vec![0.0; zero.grid().dof()];
        let (z, phi_next, _) = relax_step(
            &zero,
            &phi,
            chi,
            0.01,
            &problem,
            &cfg_of(SchemeKind::Relaxation),
        )
        .unwrap();
        assert_eq!(z, zero);
        assert!(phi_next.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn lt_phase_flips_constant_field() {
        // periodic constant (1,0): the nonlinear flow with h = pi flips the
        // sign, and the gamma = 0 propagator leaves the zero mode alone.
        let g = grid();
        let ones = SpinorField::from_fn(g, |_| [Complex64::ONE, Complex64::ZERO]);
        let cfg = SchemeConfig::new(SchemeKind::LieTrotter);
        let out = lt_step(
            &ones,
            [0.0, 0.0, 0.0],
            std::f64::consts::PI,
            &deterministic(),
            &cfg,
        )
        .unwrap();
        for v in out.values() {
            assert!((v[0] + Complex64::ONE).norm() < 1e-12);
            assert!(v[1].norm() < 1e-14);
        }
    }

    #[test]
    fn lt_nonlinear_substep_preserves_modulus_pointwise() {
        let x = soliton();
        for sigma in [1.0, 2.0, 3.0] {
            let rotated = nonlinear_phase(&x, 0.37, &NonlinearitySpec::power(sigma));
            for (a, b) in x.values().iter().zip(rotated.values()) {
                let before = (a[0].norm_sqr() + a[1].norm_sqr()).sqrt();
                let after = (b[0].norm_sqr() + b[1].norm_sqr()).sqrt();
                assert!((before - after).abs() <= 1e-15 * (1.0 + before));
            }
        }
    }

    #[test]
    fn lt_nonlinear_substep_matches_rk4_oracle() {
        // independent 4th-order integration of dY/dt = i (|Y|^2)^sigma Y
        let x = soliton();
        let h = 1e-3;
        for sigma in [1.0, 2.0, 3.0] {
            let spec = NonlinearitySpec::power(sigma);
            let rotated = nonlinear_phase(&x, h, &spec);
            let substeps = 64;
            let dt = h / substeps as f64;
            for (v0, out) in x.values().iter().zip(rotated.values()) {
                let mut y = *v0;
                for _ in 0..substeps {
                    let f = |v: [Complex64; 2]| {
                        let m = spec.power_term(v[0].norm_sqr() + v[1].norm_sqr());
                        let c = Complex64::new(0.0, m);
                        [c * v[0], c * v[1]]
                    };
                    let k1 = f(y);
                    let k2 = f([y[0] + 0.5 * dt * k1[0], y[1] + 0.5 * dt * k1[1]]);
                    let k3 = f([y[0] + 0.5 * dt * k2[0], y[1] + 0.5 * dt * k2[1]]);
                    let k4 = f([y[0] + dt * k3[0], y[1] + dt * k3[1]]);
                    y = [
                        y[0] + dt / 6.0 * (k1[0] + 2.0 * (k2[0] + k3[0]) + k4[0]),
                        y[1] + dt / 6.0 * (k1[1] + 2.0 * (k2[1] + k3[1]) + k4[1]),
                    ];
                }
                assert!((out[0] - y[0]).norm() < 1e-10);
                assert!((out[1] - y[1]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn exp_equals_lt_when_nonlinearity_vanishes() {
        // with the cutoff radius tiny the nonlinear term is identically zero
        // and both schemes reduce to the propagator, bit for bit.
        let x = soliton();
        let mut problem = Problem::half_dispersion(1.0);
        problem.nonlinearity = NonlinearitySpec::cubic().with_cutoff(1e-12);
        let chi = [0.3, 0.1, -0.5];
        let a = lt_step(&x, chi, 0.01, &problem, &SchemeConfig::new(SchemeKind::LieTrotter))
            .unwrap();
        let b = exp_step(&x, chi, 0.01, &problem, &SchemeConfig::new(SchemeKind::Exponential))
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exp_and_lt_differ_at_second_order() {
        // Richardson-style check: halving h quarters the single-step gap
        let x = soliton();
        let problem = deterministic();
        let gap = |h: f64| {
            let a = lt_step(&x, [0.0; 3], h, &problem, &SchemeConfig::new(SchemeKind::LieTrotter))
                .unwrap();
            let b = exp_step(&x, [0.0; 3], h, &problem, &SchemeConfig::new(SchemeKind::Exponential))
                .unwrap();
            l2_norm(&a.difference(&b))
        };
        let g1 = gap(0.02);
        let g2 = gap(0.01);
        let ratio = g1 / g2;
        assert!(
            (ratio - 4.0).abs() < 0.4,
            "expected quartering, got ratio {ratio}"
        );
    }

    #[test]
    fn cn_fixed_point_residual_is_small() {
        let x = soliton();
        let problem = Problem::half_dispersion(1.0);
        let cfg = SchemeConfig::new(SchemeKind::CrankNicolson);
        let chi = [0.8, -0.3, 0.2];
        let h = 1.0 / 256.0;
        let (z, _) = cn_step_counted(&x, chi, h, &problem, &cfg).unwrap();
        // apply the iteration map once more; a converged iterate moves less
        // than the tolerance
        let prop = Propagator::build(&problem.operator_params(chi, h), *x.grid()).unwrap();
        let g = cn_nonlinear_term(&x, &z, &problem.nonlinearity, 1.0, h);
        let rhs = SpinorField::from_values(
            *x.grid(),
            prop.apply_rhs(&x)
                .values()
                .iter()
                .zip(g.values())
                .map(|(a, b)| [a[0] + b[0], a[1] + b[1]])
                .collect(),
        );
        let reapplied = prop.solve_lhs(&rhs);
        assert!(l2_norm(&reapplied.difference(&z)) <= cfg.fixed_point_tol);
    }

    #[test]
    fn cn_preserves_l2_up_to_tolerance() {
        let x = soliton();
        let problem = Problem::half_dispersion(1.0);
        let cfg = SchemeConfig::new(SchemeKind::CrankNicolson);
        let out = cn_step(&x, [1.2, 0.1, -0.4], 1.0 / 512.0, &problem, &cfg).unwrap();
        assert!((l2_norm(&out) - l2_norm(&x)).abs() <= 5.0 * cfg.fixed_point_tol);
    }

    #[test]
    fn relax_phi_recursion_is_an_involution() {
        // two updates against a frozen state return the initial phi exactly
        let x = soliton();
        let spec = NonlinearitySpec::cubic();
        let phi0 = relax_initial_phi(&x, &spec);
        let update = |phi: &[f64]| -> Vec<f64> {
            x.values()
                .iter()
                .zip(phi)
                .map(|(v, &p)| 2.0 * spec.power_term(v[0].norm_sqr() + v[1].norm_sqr()) - p)
                .collect()
        };
        let phi1 = update(&phi0);
        let phi2 = update(&phi1);
        assert_eq!(phi0, phi2);
    }

    #[test]
    fn relax_preserves_l2_in_both_backends() {
        let problem = Problem::half_dispersion(1.0);
        let cfg = SchemeConfig::new(SchemeKind::Relaxation);
        let chi = [0.5, 0.7, -0.9];

        let xs = soliton();
        let phi = relax_initial_phi(&xs, &problem.nonlinearity);
        let (out, _, _) = relax_step(&xs, &phi, chi, 1.0 / 512.0, &problem, &cfg).unwrap();
        assert!((l2_norm(&out) - l2_norm(&xs)).abs() <= 5.0 * cfg.fixed_point_tol);

        let gd = Grid1D::dirichlet(20.0, 200).unwrap();
        let xd = initial_condition(&InitialCondition::standard_soliton(), gd).unwrap();
        let phid = relax_initial_phi(&xd, &problem.nonlinearity);
        let (outd, _, iters) = relax_step(&xd, &phid, chi, 1.0 / 512.0, &problem, &cfg).unwrap();
        assert_eq!(iters, 0); // direct solve
        assert!((l2_norm(&outd) - l2_norm(&xd)).abs() <= 1e-10);
    }

    #[test]
    fn trajectory_with_zero_steps_keeps_initial_data() {
        let x = soliton();
        let path = WienerPath::sample(1, 0, 1.0, 16);
        let rec = run_trajectory(
            &x,
            &path,
            0,
            &SchemeConfig::new(SchemeKind::LieTrotter),
            &deterministic(),
            &RecordSpec::observables(),
        )
        .unwrap();
        assert_eq!(rec.steps_completed, 0);
        assert_eq!(rec.observables.len(), 1);
        assert_eq!(rec.observables[0].time, 0.0);
        assert!(rec.outcome.is_completed());
    }

    #[test]
    fn lt_trajectory_preserves_l2_exactly() {
        let x = soliton();
        let path = WienerPath::sample(7, 0, 1.0, 256);
        let rec = run_trajectory(
            &x,
            &path,
            256,
            &SchemeConfig::new(SchemeKind::LieTrotter),
            &deterministic(),
            &RecordSpec::observables(),
        )
        .unwrap();
        assert!(rec.outcome.is_completed());
        let initial = rec.observables[0].l2;
        for obs in &rec.observables {
            assert!((obs.l2 - initial).abs() <= 1e-12 * initial);
        }
    }

    #[test]
    fn deterministic_soliton_mass_center_drifts_at_minus_kappa() {
        let g = Grid1D::periodic(20.0 * std::f64::consts::PI, 1 << 10).unwrap();
        let mut p = crate::field::SolitonParams::standard();
        p.velocity = 1.0;
        let x = initial_condition(&InitialCondition::Soliton(p), g).unwrap();
        let path = WienerPath::sample(0, 0, 10.0, 512);
        let rec = run_trajectory(
            &x,
            &path,
            512,
            &SchemeConfig::new(SchemeKind::LieTrotter),
            &deterministic(),
            &RecordSpec::observables(),
        )
        .unwrap();
        assert!(rec.outcome.is_completed());
        // least-squares slope of the center against time
        let pts: Vec<(f64, f64)> = rec
            .observables
            .iter()
            .map(|o| (o.time, o.mass_center))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!(
            (slope + 1.0).abs() < 0.01,
            "center drift slope {slope}, expected -1"
        );
    }

    #[test]
    fn blowup_guard_trips_and_truncates() {
        // strongly supercritical power on the two-soliton pile-up; the H1
        // norm rockets past any desk-scale guard within a few steps
        let g = Grid1D::periodic(20.0 * std::f64::consts::PI, 1 << 12).unwrap();
        let x = initial_condition(&InitialCondition::soliton_pair(), g).unwrap();
        let mut problem = deterministic();
        problem.nonlinearity = NonlinearitySpec::power(3.0);
        let mut cfg = SchemeConfig::new(SchemeKind::LieTrotter);
        cfg.blowup_threshold = 50.0;
        let path = WienerPath::sample(5, 0, 0.01, 1 << 12);
        let rec = run_trajectory(
            &x,
            &path,
            1 << 12,
            &cfg,
            &problem,
            &RecordSpec::observables(),
        )
        .unwrap();
        match rec.outcome {
            TrajectoryOutcome::Blowup { step, h1 } => {
                assert!(h1 > 50.0 || !h1.is_finite());
                assert_eq!(rec.steps_completed, step - 1);
                // no observable recorded past the flagged index
                assert!(rec.observables.iter().all(|o| o.step < step));
            }
            other => panic!("expected blowup, got {other:?}"),
        }
    }
}

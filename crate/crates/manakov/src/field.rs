//! Grids, two-component complex fields, discrete norms, physical observables,
//! initial conditions, and the (optionally truncated) power-law nonlinearity.
//!
//! All integrals are rectangle-rule sums `dx * sum_j`, which on a uniform
//! periodic grid coincides with the trapezoid rule and is spectrally accurate.
//! Discrete derivatives follow the backend implied by the boundary: exact
//! spectral differentiation on periodic grids, central differences with
//! implicit zero ghost values on Dirichlet grids.

use crate::fft;
use crate::mat2::Mat2;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FieldError {
    #[error("field has zero mass; moment observables are undefined")]
    ZeroMass,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Boundary treatment of the spatial domain `[-a, a]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    /// Identify `-a` and `a`; fields carry all `M` nodes and derivatives are
    /// spectral.
    Periodic,
    /// Homogeneous Dirichlet; fields carry the `M - 1` interior nodes and the
    /// boundary values are implicit zeros.
    Dirichlet,
}

/// Uniform grid on `[-a, a]` with `M` subintervals of width `2a / M`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid1D {
    half_width: f64,
    num_points: usize,
    boundary: Boundary,
}

impl Grid1D {
    /// Periodic grid; `num_points` must be a power of two (the spectral
    /// backend transforms full fields) and at least 4.
    pub fn periodic(half_width: f64, num_points: usize) -> Result<Self, FieldError> {
        if !(half_width > 0.0) {
            return Err(FieldError::InvalidParams(format!(
                "half_width must be positive, got {half_width}"
            )));
        }
        if num_points < 4 || !num_points.is_power_of_two() {
            return Err(FieldError::InvalidParams(format!(
                "periodic grids need a power-of-two point count >= 4, got {num_points}"
            )));
        }
        Ok(Grid1D {
            half_width,
            num_points,
            boundary: Boundary::Periodic,
        })
    }

    /// Dirichlet grid with `num_points` subintervals (so `num_points - 1`
    /// interior nodes).
    pub fn dirichlet(half_width: f64, num_points: usize) -> Result<Self, FieldError> {
        if !(half_width > 0.0) {
            return Err(FieldError::InvalidParams(format!(
                "half_width must be positive, got {half_width}"
            )));
        }
        if num_points < 4 {
            return Err(FieldError::InvalidParams(format!(
                "grids need at least 4 points, got {num_points}"
            )));
        }
        Ok(Grid1D {
            half_width,
            num_points,
            boundary: Boundary::Dirichlet,
        })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn num_points(&self) -> usize {
        self.num_points
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.num_points as f64
    }

    /// Number of stored degrees of freedom per field component.
    pub fn dof(&self) -> usize {
        match self.boundary {
            Boundary::Periodic => self.num_points,
            Boundary::Dirichlet => self.num_points - 1,
        }
    }

    /// Position of stored node `j`.
    pub fn node(&self, j: usize) -> f64 {
        let dx = self.spacing();
        match self.boundary {
            Boundary::Periodic => -self.half_width + j as f64 * dx,
            Boundary::Dirichlet => -self.half_width + (j + 1) as f64 * dx,
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.dof()).map(move |j| self.node(j))
    }
}

/// Two-component complex field sampled on a grid; the state of the system.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinorField {
    grid: Grid1D,
    values: Vec<[Complex64; 2]>,
}

impl SpinorField {
    pub fn zeros(grid: Grid1D) -> Self {
        SpinorField {
            grid,
            values: vec![[Complex64::ZERO; 2]; grid.dof()],
        }
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> [Complex64; 2]) -> Self {
        let values = grid.nodes().map(f).collect();
        SpinorField { grid, values }
    }

    pub fn from_values(grid: Grid1D, values: Vec<[Complex64; 2]>) -> Self {
        assert_eq!(values.len(), grid.dof(), "value count must match grid dof");
        SpinorField { grid, values }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[[Complex64; 2]] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [[Complex64; 2]] {
        &mut self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|v| v[0].is_finite() && v[1].is_finite())
    }

    /// Pointwise difference on a shared grid.
    pub fn difference(&self, other: &SpinorField) -> SpinorField {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| [a[0] - b[0], a[1] - b[1]])
            .collect();
        SpinorField {
            grid: self.grid,
            values,
        }
    }

    pub fn scaled(&self, s: Complex64) -> SpinorField {
        SpinorField {
            grid: self.grid,
            values: self.values.iter().map(|v| [v[0] * s, v[1] * s]).collect(),
        }
    }

    /// Pointwise squared modulus `|X_1|^2 + |X_2|^2`.
    pub fn modulus_sq(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|v| v[0].norm_sqr() + v[1].norm_sqr())
            .collect()
    }
}

/// Discrete L2 norm `sqrt(dx * sum_j |X(x_j)|^2)`.
pub fn l2_norm(x: &SpinorField) -> f64 {
    let sum: f64 = x
        .values()
        .iter()
        .map(|v| v[0].norm_sqr() + v[1].norm_sqr())
        .sum();
    (x.grid().spacing() * sum).sqrt()
}

/// Backend discrete derivative: spectral on periodic grids, central
/// differences with zero ghosts on Dirichlet grids.
pub fn derivative(x: &SpinorField) -> SpinorField {
    let grid = *x.grid();
    match grid.boundary() {
        Boundary::Periodic => {
            let n = grid.dof();
            let xi = fft::mode_frequencies(n, grid.half_width());
            let mut out = vec![[Complex64::ZERO; 2]; n];
            let mut buf = vec![Complex64::ZERO; n];
            for comp in 0..2 {
                for (b, v) in buf.iter_mut().zip(x.values()) {
                    *b = v[comp];
                }
                fft::forward(&mut buf);
                for (b, &f) in buf.iter_mut().zip(&xi) {
                    *b *= Complex64::new(0.0, f);
                }
                fft::inverse(&mut buf);
                let scale = 1.0 / n as f64;
                for (o, b) in out.iter_mut().zip(&buf) {
                    o[comp] = b * scale;
                }
            }
            SpinorField::from_values(grid, out)
        }
        Boundary::Dirichlet => {
            let n = grid.dof();
            let inv2dx = 1.0 / (2.0 * grid.spacing());
            let v = x.values();
            let mut out = vec![[Complex64::ZERO; 2]; n];
            for j in 0..n {
                let left = if j > 0 { v[j - 1] } else { [Complex64::ZERO; 2] };
                let right = if j + 1 < n {
                    v[j + 1]
                } else {
                    [Complex64::ZERO; 2]
                };
                out[j] = [
                    (right[0] - left[0]) * inv2dx,
                    (right[1] - left[1]) * inv2dx,
                ];
            }
            SpinorField::from_values(grid, out)
        }
    }
}

/// Squared L2 norm of the backend derivative. On periodic grids this is
/// evaluated in Fourier space (Parseval), avoiding the inverse transforms.
fn derivative_norm_sq(x: &SpinorField) -> f64 {
    let grid = x.grid();
    match grid.boundary() {
        Boundary::Periodic => {
            let n = grid.dof();
            let xi = fft::mode_frequencies(n, grid.half_width());
            let mut buf = vec![Complex64::ZERO; n];
            let mut sum = 0.0;
            for comp in 0..2 {
                for (b, v) in buf.iter_mut().zip(x.values()) {
                    *b = v[comp];
                }
                fft::forward(&mut buf);
                sum += buf
                    .iter()
                    .zip(&xi)
                    .map(|(c, &f)| f * f * c.norm_sqr())
                    .sum::<f64>();
            }
            grid.spacing() * sum / n as f64
        }
        Boundary::Dirichlet => {
            let d = derivative(x);
            let s = l2_norm(&d);
            s * s
        }
    }
}

/// Discrete H1 norm `sqrt(||X||^2 + ||dX/dx||^2)` with the backend derivative.
pub fn h1_norm(x: &SpinorField) -> f64 {
    let l2 = l2_norm(x);
    (l2 * l2 + derivative_norm_sq(x)).sqrt()
}

/// Total energy `1/2 int |dX/dx|^2 - 1/4 int |X|^4`.
pub fn hamiltonian(x: &SpinorField) -> f64 {
    let kinetic = 0.5 * derivative_norm_sq(x);
    let quartic: f64 = x
        .values()
        .iter()
        .map(|v| {
            let m = v[0].norm_sqr() + v[1].norm_sqr();
            m * m
        })
        .sum();
    kinetic - 0.25 * x.grid().spacing() * quartic
}

/// First spatial moment of `|X|^2`, normalized by mass.
pub fn mass_center(x: &SpinorField) -> Result<f64, FieldError> {
    let mut mass = 0.0;
    let mut moment = 0.0;
    for (j, v) in x.values().iter().enumerate() {
        let w = v[0].norm_sqr() + v[1].norm_sqr();
        mass += w;
        moment += x.grid().node(j) * w;
    }
    if mass == 0.0 {
        return Err(FieldError::ZeroMass);
    }
    Ok(moment / mass)
}

/// Centered second spatial moment of `|X|^2` (pulse width), normalized by
/// mass.
pub fn pulse_width(x: &SpinorField) -> Result<f64, FieldError> {
    let center = mass_center(x)?;
    let mut mass = 0.0;
    let mut spread = 0.0;
    for (j, v) in x.values().iter().enumerate() {
        let w = v[0].norm_sqr() + v[1].norm_sqr();
        let d = x.grid().node(j) - center;
        mass += w;
        spread += d * d * w;
    }
    Ok(spread / mass)
}

/// Contraction `chi_1 sigma_1 + chi_2 sigma_2 + chi_3 sigma_3` of a real
/// triple with the Pauli matrices; always Hermitian with eigenvalues
/// `+/- |chi|`.
pub fn pauli_dot(chi: [f64; 3]) -> Mat2 {
    Mat2::new(
        Complex64::new(chi[2], 0.0),
        Complex64::new(chi[0], -chi[1]),
        Complex64::new(chi[0], chi[1]),
        Complex64::new(-chi[2], 0.0),
    )
}

/// Power-law nonlinearity `(|X|^2)^sigma X`, optionally truncated by a smooth
/// bump of the squared H1 norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NonlinearitySpec {
    /// Power `sigma > 0`; `1` is the cubic coupling.
    pub exponent: f64,
    /// Truncation radius `R > 0`; the nonlinearity vanishes identically once
    /// `||X||_{H1}^2 >= 2R` and is untouched while `||X||_{H1}^2 <= R`.
    pub cutoff: Option<f64>,
}

impl NonlinearitySpec {
    pub fn cubic() -> Self {
        NonlinearitySpec {
            exponent: 1.0,
            cutoff: None,
        }
    }

    pub fn power(exponent: f64) -> Self {
        NonlinearitySpec {
            exponent,
            cutoff: None,
        }
    }

    pub fn with_cutoff(self, radius: f64) -> Self {
        NonlinearitySpec {
            cutoff: Some(radius),
            ..self
        }
    }

    /// `(m)^sigma` for `m = |X|^2 >= 0`, with fast paths for the small
    /// integer powers the experiments sweep.
    pub fn power_term(&self, modulus_sq: f64) -> f64 {
        if self.exponent == 1.0 {
            modulus_sq
        } else if self.exponent == 2.0 {
            modulus_sq * modulus_sq
        } else if self.exponent == 3.0 {
            modulus_sq * modulus_sq * modulus_sq
        } else {
            modulus_sq.powf(self.exponent)
        }
    }

    /// Global truncation factor `theta(||X||_{H1}^2 / R)`, `1.0` without a
    /// cutoff.
    pub fn cutoff_scale(&self, x: &SpinorField) -> f64 {
        match self.cutoff {
            None => 1.0,
            Some(radius) => {
                let h1 = h1_norm(x);
                smooth_bump(h1 * h1 / radius)
            }
        }
    }
}

/// C-infinity partition bump: identically 1 on `[0, 1]`, identically 0 on
/// `[2, inf)`, strictly decreasing in between.
pub fn smooth_bump(s: f64) -> f64 {
    if s <= 1.0 {
        return 1.0;
    }
    if s >= 2.0 {
        return 0.0;
    }
    fn f(t: f64) -> f64 {
        if t > 0.0 {
            (-1.0 / t).exp()
        } else {
            0.0
        }
    }
    let up = f(2.0 - s);
    up / (up + f(s - 1.0))
}

/// Evaluate the (optionally truncated) nonlinearity pointwise.
pub fn nonlinearity(x: &SpinorField, spec: &NonlinearitySpec) -> SpinorField {
    let scale = spec.cutoff_scale(x);
    let values = x
        .values()
        .iter()
        .map(|v| {
            let coeff = scale * spec.power_term(v[0].norm_sqr() + v[1].norm_sqr());
            [v[0] * coeff, v[1] * coeff]
        })
        .collect();
    SpinorField::from_values(*x.grid(), values)
}

/// Parameters of one hyperbolic-secant soliton profile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolitonParams {
    /// Amplitude / inverse width `eta > 0`.
    pub amplitude: f64,
    /// Group velocity parameter `kappa`; the mass center drifts at `-kappa`.
    pub velocity: f64,
    /// Global phase `alpha`.
    pub phase: f64,
    /// Phase-reference offset `tau`.
    pub offset: f64,
    /// Polarization mixing angle `theta`.
    pub mixing: f64,
    /// Component phases.
    pub phase1: f64,
    pub phase2: f64,
}

impl SolitonParams {
    /// The standard experiment profile: unit amplitude, mixing `pi/4`, all
    /// other parameters zero.
    pub fn standard() -> Self {
        SolitonParams {
            amplitude: 1.0,
            velocity: 0.0,
            phase: 0.0,
            offset: 0.0,
            mixing: std::f64::consts::FRAC_PI_4,
            phase1: 0.0,
            phase2: 0.0,
        }
    }

    fn validate(&self) -> Result<(), FieldError> {
        if !(self.amplitude > 0.0) {
            return Err(FieldError::InvalidParams(format!(
                "soliton amplitude must be positive, got {}",
                self.amplitude
            )));
        }
        Ok(())
    }

    /// Closed-form profile value at position `x`.
    pub fn eval(&self, x: f64) -> [Complex64; 2] {
        let sech = 1.0 / (self.amplitude * x).cosh();
        let envelope = self.amplitude
            * sech
            * Complex64::cis(-self.velocity * (x - self.offset) + self.phase);
        [
            Complex64::cis(self.phase1) * (self.mixing / 2.0).cos() * envelope,
            Complex64::cis(self.phase2) * (self.mixing / 2.0).sin() * envelope,
        ]
    }
}

/// Closed-form initial data used by the experiments.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialCondition {
    Soliton(SolitonParams),
    /// Superposition of soliton profiles.
    SolitonSum(Vec<SolitonParams>),
    /// The fixed two-component Gaussian pulse `(3 exp(-10 x^2), 2 exp(-5 x^2))`.
    Gaussian,
    /// Standard soliton plus a localized oscillatory perturbation
    /// `(cos(x) exp(-x^2), 0)`.
    ModifiedSoliton,
}

impl InitialCondition {
    pub fn standard_soliton() -> Self {
        InitialCondition::Soliton(SolitonParams::standard())
    }

    /// The two-soliton superposition used by the blowup studies:
    /// amplitudes 5 and 1, the second with `kappa = pi/3` and a unit-component
    /// phase shift of 3.
    pub fn soliton_pair() -> Self {
        InitialCondition::SolitonSum(vec![
            SolitonParams {
                amplitude: 5.0,
                velocity: 0.0,
                phase: 0.0,
                offset: 0.0,
                mixing: std::f64::consts::FRAC_PI_4,
                phase1: 0.0,
                phase2: 0.0,
            },
            SolitonParams {
                amplitude: 1.0,
                velocity: std::f64::consts::FRAC_PI_3,
                phase: 0.0,
                offset: 0.0,
                mixing: std::f64::consts::FRAC_PI_4,
                phase1: 3.0,
                phase2: 0.0,
            },
        ])
    }
}

/// Sample a closed-form initial condition on a grid. Dirichlet grids store
/// interior nodes only, so the implicit boundary zeros need no handling here.
pub fn initial_condition(
    kind: &InitialCondition,
    grid: Grid1D,
) -> Result<SpinorField, FieldError> {
    match kind {
        InitialCondition::Soliton(p) => {
            p.validate()?;
            Ok(SpinorField::from_fn(grid, |x| p.eval(x)))
        }
        InitialCondition::SolitonSum(ps) => {
            for p in ps {
                p.validate()?;
            }
            Ok(SpinorField::from_fn(grid, |x| {
                let mut v = [Complex64::ZERO; 2];
                for p in ps {
                    let s = p.eval(x);
                    v[0] += s[0];
                    v[1] += s[1];
                }
                v
            }))
        }
        InitialCondition::Gaussian => Ok(SpinorField::from_fn(grid, |x| {
            [
                Complex64::new(3.0 * (-10.0 * x * x).exp(), 0.0),
                Complex64::new(2.0 * (-5.0 * x * x).exp(), 0.0),
            ]
        })),
        InitialCondition::ModifiedSoliton => {
            let p = SolitonParams::standard();
            Ok(SpinorField::from_fn(grid, |x| {
                let mut v = p.eval(x);
                v[0] += Complex64::new(x.cos() * (-x * x).exp(), 0.0);
                v
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SOLITON_PAIR_L2_SQ: f64 = 7.984617281270; // frozen quadrature oracle

    fn test_grid() -> Grid1D {
        Grid1D::periodic(20.0 * std::f64::consts::PI, 1 << 12).unwrap()
    }

    /// Rectangle-rule quadrature of a scalar function on a fine standalone
    /// grid; the independent oracle for integral checks.
    fn quadrature(a: f64, m: usize, f: impl Fn(f64) -> f64) -> f64 {
        let dx = 2.0 * a / m as f64;
        (0..m).map(|j| f(-a + j as f64 * dx)).sum::<f64>() * dx
    }

    #[test]
    fn l2_norm_zero_field() {
        assert_eq!(l2_norm(&SpinorField::zeros(test_grid())), 0.0);
    }

    #[test]
    fn l2_norm_soliton_matches_quadrature() {
        // integral of eta^2 sech^2(eta x) is 2 eta; oracle confirms on a
        // finer grid than the field uses.
        let oracle = quadrature(20.0 * std::f64::consts::PI, 1 << 16, |x| {
            (1.0 / x.cosh()).powi(2)
        });
        assert!((oracle - 2.0).abs() < 1e-12);
        let mut p = SolitonParams::standard();
        p.mixing = 1.1;
        p.phase1 = 0.3;
        p.phase2 = -0.7;
        let x = initial_condition(&InitialCondition::Soliton(p), test_grid()).unwrap();
        assert!((l2_norm(&x) - 2.0_f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn h1_norm_zero_field() {
        assert_eq!(h1_norm(&SpinorField::zeros(test_grid())), 0.0);
    }

    #[test]
    fn h1_norm_soliton() {
        // derivative integral: int sech^2 tanh^2 = 2/3
        let oracle = quadrature(20.0 * std::f64::consts::PI, 1 << 16, |x| {
            let s = 1.0 / x.cosh();
            let t = x.tanh();
            s * s * t * t
        });
        assert!((oracle - 2.0 / 3.0).abs() < 1e-12);
        let x = initial_condition(&InitialCondition::standard_soliton(), test_grid()).unwrap();
        let expected = (2.0 + 2.0 / 3.0_f64).sqrt();
        assert!((h1_norm(&x) - expected).abs() < 1e-6);
    }

    #[test]
    fn h1_norm_plane_wave_mode() {
        // e^{i xi x} (1, 0) with xi an admissible mode differentiates exactly.
        let grid = test_grid();
        let xi = 3.0 * std::f64::consts::PI / grid.half_width(); // k = 3
        let x = SpinorField::from_fn(grid, |p| [Complex64::cis(xi * p), Complex64::ZERO]);
        let expected = (1.0 + xi * xi).sqrt() * l2_norm(&x);
        assert!((h1_norm(&x) - expected).abs() < 1e-10 * expected);
    }

    #[test]
    fn h1_norm_matches_explicit_derivative() {
        let grid = Grid1D::periodic(10.0, 256).unwrap();
        let x = SpinorField::from_fn(grid, |p| {
            [
                Complex64::new((-p * p / 4.0).exp(), 0.1 * p.sin()),
                Complex64::new(p.cos() * (-p * p / 8.0).exp(), 0.0),
            ]
        });
        let d = derivative(&x);
        let explicit = (l2_norm(&x).powi(2) + l2_norm(&d).powi(2)).sqrt();
        assert!((h1_norm(&x) - explicit).abs() < 1e-10);
    }

    #[test]
    fn hamiltonian_zero_field() {
        assert_eq!(hamiltonian(&SpinorField::zeros(test_grid())), 0.0);
    }

    #[test]
    fn hamiltonian_standard_soliton_vanishes() {
        // kinetic 1/2 * 2/3 cancels potential 1/4 * 4/3
        let oracle_quartic = quadrature(20.0 * std::f64::consts::PI, 1 << 16, |x| {
            (1.0 / x.cosh()).powi(4)
        });
        assert!((oracle_quartic - 4.0 / 3.0).abs() < 1e-12);
        let x = initial_condition(&InitialCondition::standard_soliton(), test_grid()).unwrap();
        assert!(hamiltonian(&x).abs() < 1e-5);
    }

    #[test]
    fn hamiltonian_moving_soliton() {
        // for velocity kappa the energy is kappa^2 * eta; confirm both by
        // quadrature of the closed-form derivative and against the field.
        let a = 20.0 * std::f64::consts::PI;
        let kappa = 2.0;
        let kinetic_oracle = 0.5
            * quadrature(a, 1 << 16, |x| {
                let s = 1.0 / x.cosh();
                let t = x.tanh();
                s * s * (kappa * kappa + t * t)
            });
        let quartic_oracle = quadrature(a, 1 << 16, |x| (1.0 / x.cosh()).powi(4));
        let oracle = kinetic_oracle - 0.25 * quartic_oracle;
        assert!((oracle - kappa * kappa).abs() < 1e-10);

        let grid = Grid1D::periodic(a, 1 << 14).unwrap();
        let mut p = SolitonParams::standard();
        p.velocity = kappa;
        let x = initial_condition(&InitialCondition::Soliton(p), grid).unwrap();
        assert!((hamiltonian(&x) - oracle).abs() < 1e-6);
    }

    #[test]
    fn mass_center_even_field_is_zero() {
        let x = initial_condition(&InitialCondition::standard_soliton(), test_grid()).unwrap();
        assert!(mass_center(&x).unwrap().abs() < 1e-10);
    }

    #[test]
    fn mass_center_translated_soliton() {
        // sample the translated profile directly; quadrature oracle says the
        // center is exactly the translation.
        let shift = 3.5;
        let x = SpinorField::from_fn(test_grid(), |p| {
            let sech = 1.0 / (p - shift).cosh();
            [Complex64::new(sech, 0.0), Complex64::ZERO]
        });
        assert!((mass_center(&x).unwrap() - shift).abs() < 1e-6);
    }

    #[test]
    fn mass_center_zero_field_errors() {
        assert_eq!(
            mass_center(&SpinorField::zeros(test_grid())),
            Err(FieldError::ZeroMass)
        );
    }

    #[test]
    fn pulse_width_soliton_scaling() {
        let x = initial_condition(&InitialCondition::standard_soliton(), test_grid()).unwrap();
        let expected = std::f64::consts::PI.powi(2) / 12.0;
        assert!((pulse_width(&x).unwrap() - expected).abs() < 1e-4);

        let mut p = SolitonParams::standard();
        p.amplitude = 2.0;
        let x2 = initial_condition(&InitialCondition::Soliton(p), test_grid()).unwrap();
        let expected2 = std::f64::consts::PI.powi(2) / 48.0;
        assert!((pulse_width(&x2).unwrap() - expected2).abs() < 1e-4);
    }

    #[test]
    fn pulse_width_narrow_gaussian_matches_quadrature() {
        let a = 20.0 * std::f64::consts::PI;
        let mass = quadrature(a, 1 << 16, |x| 9.0 * (-20.0 * x * x).exp());
        let spread = quadrature(a, 1 << 16, |x| x * x * 9.0 * (-20.0 * x * x).exp());
        let oracle = spread / mass;
        let x = SpinorField::from_fn(test_grid(), |p| {
            [Complex64::new(3.0 * (-10.0 * p * p).exp(), 0.0), Complex64::ZERO]
        });
        assert!((pulse_width(&x).unwrap() - oracle).abs() < 1e-6);
    }

    #[test]
    fn pauli_dot_first_axis() {
        let m = pauli_dot([1.0, 0.0, 0.0]);
        assert_eq!(m.m[0][0], Complex64::ZERO);
        assert_eq!(m.m[0][1], Complex64::ONE);
        assert_eq!(m.m[1][0], Complex64::ONE);
        assert_eq!(m.m[1][1], Complex64::ZERO);
    }

    #[test]
    fn pauli_dot_zero() {
        assert_eq!(pauli_dot([0.0, 0.0, 0.0]), Mat2::ZERO);
    }

    #[test]
    fn nonlinearity_zero_and_unit() {
        let grid = test_grid();
        let spec = NonlinearitySpec::cubic();
        let zero = SpinorField::zeros(grid);
        assert_eq!(nonlinearity(&zero, &spec), zero);

        let ones = SpinorField::from_fn(grid, |_| [Complex64::ONE, Complex64::ZERO]);
        assert_eq!(nonlinearity(&ones, &spec), ones);
    }

    #[test]
    fn nonlinearity_cutoff_kills_large_fields() {
        let grid = test_grid();
        let x = initial_condition(&InitialCondition::standard_soliton(), grid).unwrap();
        let h1_sq = h1_norm(&x).powi(2);
        // radius chosen so that ||X||_{H1}^2 = 3R >= 2R
        let spec = NonlinearitySpec::cubic().with_cutoff(h1_sq / 3.0);
        let out = nonlinearity(&x, &spec);
        assert_eq!(out, SpinorField::zeros(grid));
    }

    #[test]
    fn nonlinearity_cutoff_inactive_is_bitwise_identical() {
        let grid = test_grid();
        let x = initial_condition(&InitialCondition::standard_soliton(), grid).unwrap();
        let h1_sq = h1_norm(&x).powi(2);
        let plain = nonlinearity(&x, &NonlinearitySpec::cubic());
        let cut = nonlinearity(&x, &NonlinearitySpec::cubic().with_cutoff(2.0 * h1_sq));
        assert_eq!(plain, cut);
    }

    #[test]
    fn initial_condition_values_at_origin() {
        let grid = test_grid();
        let soliton =
            initial_condition(&InitialCondition::standard_soliton(), grid).unwrap();
        // locate node x = 0
        let j0 = grid.nodes().position(|x| x.abs() < 1e-12).unwrap();
        let v = soliton.values()[j0];
        let th = std::f64::consts::PI / 8.0;
        assert!((v[0] - Complex64::new(th.cos(), 0.0)).norm() < 1e-12);
        assert!((v[1] - Complex64::new(th.sin(), 0.0)).norm() < 1e-12);

        let gauss = initial_condition(&InitialCondition::Gaussian, grid).unwrap();
        let g = gauss.values()[j0];
        assert!((g[0] - Complex64::new(3.0, 0.0)).norm() < 1e-12);
        assert!((g[1] - Complex64::new(2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn soliton_pair_l2_matches_frozen_oracle() {
        // Both profiles are centered at the origin, so the interference term
        // is not negligible; the frozen value comes from a 2^22-point
        // rectangle quadrature of the closed form.
        let x = initial_condition(&InitialCondition::soliton_pair(), test_grid()).unwrap();
        let norm_sq = l2_norm(&x).powi(2);
        assert!(
            (norm_sq - SOLITON_PAIR_L2_SQ).abs() < 1e-3,
            "got {norm_sq}, expected {SOLITON_PAIR_L2_SQ}"
        );
    }

    #[test]
    fn invalid_soliton_amplitude_rejected() {
        let mut p = SolitonParams::standard();
        p.amplitude = -1.0;
        assert!(matches!(
            initial_condition(&InitialCondition::Soliton(p), test_grid()),
            Err(FieldError::InvalidParams(_))
        ));
    }

    #[test]
    fn smooth_bump_plateaus() {
        assert_eq!(smooth_bump(0.0), 1.0);
        assert_eq!(smooth_bump(1.0), 1.0);
        assert_eq!(smooth_bump(2.0), 0.0);
        assert_eq!(smooth_bump(5.0), 0.0);
        let mid = smooth_bump(1.5);
        assert!(mid > 0.0 && mid < 1.0);
        assert!((mid - 0.5).abs() < 1e-12); // symmetric partition at 1.5
    }

    #[test]
    fn dirichlet_grid_nodes_are_interior() {
        let grid = Grid1D::dirichlet(5.0, 10).unwrap();
        assert_eq!(grid.dof(), 9);
        assert!((grid.node(0) - (-4.0)).abs() < 1e-15);
        assert!((grid.node(8) - 4.0).abs() < 1e-15);
        assert!((grid.spacing() - 1.0).abs() < 1e-15);
    }

    fn small_field(vals: Vec<(f64, f64, f64, f64)>) -> SpinorField {
        let grid = Grid1D::periodic(4.0, 8).unwrap();
        let values = vals
            .iter()
            .cycle()
            .take(8)
            .map(|&(a, b, c, d)| [Complex64::new(a, b), Complex64::new(c, d)])
            .collect();
        SpinorField::from_values(grid, values)
    }

    proptest! {
        #[test]
        fn norm_homogeneity(vals in proptest::collection::vec((-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64), 8),
                            scale in -3.0..3.0f64) {
            let x = small_field(vals);
            let c = Complex64::new(scale, 0.5 * scale);
            let scaled = x.scaled(c);
            prop_assert!((l2_norm(&scaled) - c.norm() * l2_norm(&x)).abs() < 1e-9);
            prop_assert!((h1_norm(&scaled) - c.norm() * h1_norm(&x)).abs() < 1e-8);
        }

        #[test]
        fn norm_triangle_inequality(va in proptest::collection::vec((-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64), 8),
                                    vb in proptest::collection::vec((-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64), 8)) {
            let a = small_field(va);
            let b = small_field(vb);
            let sum = SpinorField::from_values(*a.grid(), a.values().iter().zip(b.values())
                .map(|(u, v)| [u[0] + v[0], u[1] + v[1]]).collect());
            prop_assert!(l2_norm(&sum) <= l2_norm(&a) + l2_norm(&b) + 1e-10);
            prop_assert!(h1_norm(&sum) <= h1_norm(&a) + h1_norm(&b) + 1e-9);
        }

        #[test]
        fn pauli_square_is_modulus_identity(chi in [-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64]) {
            let m = pauli_dot(chi);
            let sq = m.mul(m);
            let norm_sq = chi.iter().map(|c| c * c).sum::<f64>();
            prop_assert!(sq.sub(Mat2::scalar(norm_sq)).max_abs() <= 1e-12 * (1.0 + norm_sq));
            // Hermitian with eigenvalues +/- |chi|: trace 0, det -|chi|^2
            prop_assert!(m.sub(m.adjoint()).max_abs() == 0.0);
            prop_assert!((m.det() + Complex64::new(norm_sq, 0.0)).norm() <= 1e-12 * (1.0 + norm_sq));
        }

        #[test]
        fn nonlinearity_preserves_direction(vals in proptest::collection::vec((-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64), 8),
                                            sigma in 0.5..3.5f64) {
            let x = small_field(vals);
            let out = nonlinearity(&x, &NonlinearitySpec::power(sigma));
            for (xi, oi) in x.values().iter().zip(out.values()) {
                let coeff = NonlinearitySpec::power(sigma)
                    .power_term(xi[0].norm_sqr() + xi[1].norm_sqr());
                prop_assert!(coeff >= 0.0);
                prop_assert!((oi[0] - xi[0] * coeff).norm() < 1e-9);
                prop_assert!((oi[1] - xi[1] * coeff).norm() < 1e-9);
            }
        }

        #[test]
        fn moments_are_phase_invariant(vals in proptest::collection::vec((-3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64, -3.0..3.0f64), 8),
                                       phase in 0.0..6.28f64) {
            let x = small_field(vals);
            if l2_norm(&x) > 1e-6 {
                let rotated = x.scaled(Complex64::cis(phase));
                prop_assert!((mass_center(&x).unwrap() - mass_center(&rotated).unwrap()).abs() < 1e-9);
                prop_assert!((pulse_width(&x).unwrap() - pulse_width(&rotated).unwrap()).abs() < 1e-9);
            }
        }
    }
}

//! The one-step random linear propagator
//! `U = (Id + H/2)^{-1} (Id - H/2)` with
//! `H = -i h c d^2/dx^2 + sqrt(gamma h) (sigma . chi) d/dx`.
//!
//! `H` is skew-Hermitian in both discretizations, so the Cayley transform is
//! an exact discrete isometry: periodic grids diagonalize `H` per Fourier
//! mode into 2x2 blocks, Dirichlet grids assemble a block-tridiagonal system
//! from central differences and factor it without pivoting (the diagonal
//! blocks are identity plus i times Hermitian, uniformly invertible).
//!
//! The noise triple changes every step, so a propagator is built per step and
//! never cached across steps. Once built it is immutable and usable from any
//! thread.

use crate::fft;
use crate::field::{pauli_dot, Boundary, Grid1D, SpinorField};
use crate::mat2::Mat2;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PropagatorError {
    #[error("grid boundary {0:?} has no matching backend for this operation")]
    UnsupportedBoundary(Boundary),
    #[error("block factorization broke down at node {node}")]
    SingularSystem { node: usize },
}

/// Parameters of the one-step operator for a single time step.
#[derive(Clone, Copy, Debug)]
pub struct LinearOperatorParams {
    /// Time step `h > 0`.
    pub step: f64,
    /// Noise intensity `gamma >= 0`.
    pub noise_intensity: f64,
    /// Dispersion coefficient in front of the second derivative (1 or 1/2).
    pub dispersion: f64,
    /// Scaled normal triple `chi = increment / sqrt(h)`.
    pub scaled_noise: [f64; 3],
}

/// One-step propagator in either spatial backend.
pub enum Propagator {
    Spectral(SpectralPropagator),
    Banded(BandedPropagator),
}

impl Propagator {
    /// Build the backend matching the grid boundary: spectral for periodic,
    /// block-tridiagonal finite differences for Dirichlet.
    pub fn build(params: &LinearOperatorParams, grid: Grid1D) -> Result<Self, PropagatorError> {
        match grid.boundary() {
            Boundary::Periodic => Ok(Propagator::Spectral(SpectralPropagator::build(
                params, grid,
            ))),
            Boundary::Dirichlet => Ok(Propagator::Banded(BandedPropagator::build(
                params, grid, None,
            )?)),
        }
    }

    /// Full Cayley step `(Id + H/2)^{-1} (Id - H/2) X`.
    pub fn apply(&self, x: &SpinorField) -> SpinorField {
        match self {
            Propagator::Spectral(p) => p.map_modes(x, &p.cayley),
            Propagator::Banded(p) => p.solve(&p.apply_rhs(x)),
        }
    }

    /// Right-hand operator `(Id - H/2) X`.
    pub fn apply_rhs(&self, x: &SpinorField) -> SpinorField {
        match self {
            Propagator::Spectral(p) => p.map_modes(x, &p.rhs),
            Propagator::Banded(p) => p.apply_rhs(x),
        }
    }

    /// Left-hand operator `(Id + H/2) X`; used for residual checks.
    pub fn apply_lhs(&self, x: &SpinorField) -> SpinorField {
        match self {
            Propagator::Spectral(p) => p.map_modes(x, &p.lhs),
            Propagator::Banded(p) => p.apply_lhs(x),
        }
    }

    /// Solve `(Id + H/2) Y = B`.
    pub fn solve_lhs(&self, b: &SpinorField) -> SpinorField {
        match self {
            Propagator::Spectral(p) => p.map_modes(b, &p.inv_lhs),
            Propagator::Banded(p) => p.solve(b),
        }
    }
}

/// Per-mode 2x2 factors of the propagator on a periodic grid.
pub struct SpectralPropagator {
    grid: Grid1D,
    cayley: Vec<Mat2>,
    rhs: Vec<Mat2>,
    lhs: Vec<Mat2>,
    inv_lhs: Vec<Mat2>,
}

impl SpectralPropagator {
    pub fn build(params: &LinearOperatorParams, grid: Grid1D) -> Self {
        let n = grid.dof();
        let pauli = pauli_dot(params.scaled_noise);
        let noise_coeff = (params.noise_intensity * params.step).sqrt();
        let frequencies = fft::mode_frequencies(n, grid.half_width());

        let mut cayley = Vec::with_capacity(n);
        let mut rhs = Vec::with_capacity(n);
        let mut lhs = Vec::with_capacity(n);
        let mut inv_lhs = Vec::with_capacity(n);
        for &xi in &frequencies {
            // H(xi) = i * A(xi) with Hermitian
            // A = h c xi^2 I + sqrt(gamma h) xi (sigma . chi)
            let a = Mat2::scalar(params.step * params.dispersion * xi * xi)
                .add(pauli.scale(Complex64::new(noise_coeff * xi, 0.0)));
            let half = a.scale(Complex64::new(0.0, 0.5));
            let minus = Mat2::IDENTITY.sub(half);
            let plus = Mat2::IDENTITY.add(half);
            // det(I + i A/2) has modulus >= 1 for Hermitian A
            let inv = plus.inverse().expect("Cayley denominator is invertible");
            cayley.push(inv.mul(minus));
            rhs.push(minus);
            lhs.push(plus);
            inv_lhs.push(inv);
        }
        SpectralPropagator {
            grid,
            cayley,
            rhs,
            lhs,
            inv_lhs,
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    /// Per-mode Cayley matrices in FFT bin order.
    pub fn mode_matrices(&self) -> &[Mat2] {
        &self.cayley
    }

    /// Transform, multiply each mode's coefficient pair by the given matrix,
    /// transform back.
    fn map_modes(&self, x: &SpinorField, mats: &[Mat2]) -> SpinorField {
        assert_eq!(x.grid(), &self.grid, "field grid mismatch");
        let n = self.grid.dof();
        let mut c1: Vec<Complex64> = x.values().iter().map(|v| v[0]).collect();
        let mut c2: Vec<Complex64> = x.values().iter().map(|v| v[1]).collect();
        fft::forward(&mut c1);
        fft::forward(&mut c2);
        for ((a, b), m) in c1.iter_mut().zip(c2.iter_mut()).zip(mats) {
            let out = m.apply([*a, *b]);
            *a = out[0];
            *b = out[1];
        }
        fft::inverse(&mut c1);
        fft::inverse(&mut c2);
        let scale = 1.0 / n as f64;
        let values = c1
            .iter()
            .zip(&c2)
            .map(|(a, b)| [a * scale, b * scale])
            .collect();
        SpinorField::from_values(self.grid, values)
    }
}

/// Factored block-tridiagonal system on a Dirichlet grid.
///
/// The off-diagonal blocks are constant (the stencil does not vary in space);
/// the diagonal carries an optional real potential, which the relaxation
/// scheme folds into the system as `-i v_j` on the left and `+i v_j` on the
/// right.
pub struct BandedPropagator {
    grid: Grid1D,
    lhs_diag: Vec<Mat2>,
    lhs_lower: Mat2,
    lhs_upper: Mat2,
    rhs_diag: Vec<Mat2>,
    rhs_lower: Mat2,
    rhs_upper: Mat2,
    pivot_inv: Vec<Mat2>,
    coupling: Vec<Mat2>,
}

impl BandedPropagator {
    /// Assemble and factor `(Id + H/2)` (plus the optional diagonal
    /// potential) with central differences and implicit zero ghost values.
    pub fn build(
        params: &LinearOperatorParams,
        grid: Grid1D,
        potential: Option<&[f64]>,
    ) -> Result<Self, PropagatorError> {
        assert_eq!(
            grid.boundary(),
            Boundary::Dirichlet,
            "banded backend needs a Dirichlet grid"
        );
        let n = grid.dof();
        if let Some(v) = potential {
            assert_eq!(v.len(), n, "potential length must match grid dof");
        }
        let dx = grid.spacing();
        let pauli = pauli_dot(params.scaled_noise);
        // H/2 stencil weights
        let disp_diag = Complex64::new(0.0, params.step * params.dispersion / (dx * dx));
        let disp_off = Complex64::new(0.0, -params.step * params.dispersion / (2.0 * dx * dx));
        let noise_off = (params.noise_intensity * params.step).sqrt() / (4.0 * dx);

        let lhs_upper = Mat2::IDENTITY
            .scale(disp_off)
            .add(pauli.scale(Complex64::new(noise_off, 0.0)));
        let lhs_lower = Mat2::IDENTITY
            .scale(disp_off)
            .sub(pauli.scale(Complex64::new(noise_off, 0.0)));
        let rhs_upper = lhs_upper.scale(Complex64::new(-1.0, 0.0));
        let rhs_lower = lhs_lower.scale(Complex64::new(-1.0, 0.0));

        let mut lhs_diag = Vec::with_capacity(n);
        let mut rhs_diag = Vec::with_capacity(n);
        for j in 0..n {
            let v = potential.map_or(0.0, |p| p[j]);
            let shift = Complex64::new(0.0, -v);
            lhs_diag.push(
                Mat2::IDENTITY
                    .add(Mat2::IDENTITY.scale(disp_diag))
                    .add(Mat2::IDENTITY.scale(shift)),
            );
            rhs_diag.push(
                Mat2::IDENTITY
                    .sub(Mat2::IDENTITY.scale(disp_diag))
                    .sub(Mat2::IDENTITY.scale(shift)),
            );
        }

        // block-Thomas factorization, no pivoting
        let mut pivot_inv = Vec::with_capacity(n);
        let mut coupling = Vec::with_capacity(n);
        let mut prev_coupling = Mat2::ZERO;
        for j in 0..n {
            let pivot = if j == 0 {
                lhs_diag[0]
            } else {
                lhs_diag[j].sub(lhs_lower.mul(prev_coupling))
            };
            let inv = pivot
                .inverse()
                .ok_or(PropagatorError::SingularSystem { node: j })?;
            prev_coupling = inv.mul(lhs_upper);
            pivot_inv.push(inv);
            coupling.push(prev_coupling);
        }

        Ok(BandedPropagator {
            grid,
            lhs_diag,
            lhs_lower,
            lhs_upper,
            rhs_diag,
            rhs_lower,
            rhs_upper,
            pivot_inv,
            coupling,
        })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    fn tridiag_matvec(
        &self,
        x: &SpinorField,
        diag: &[Mat2],
        lower: Mat2,
        upper: Mat2,
    ) -> SpinorField {
        assert_eq!(x.grid(), &self.grid, "field grid mismatch");
        let n = self.grid.dof();
        let v = x.values();
        let mut out = vec![[Complex64::ZERO; 2]; n];
        for j in 0..n {
            let mut acc = diag[j].apply(v[j]);
            if j > 0 {
                let l = lower.apply(v[j - 1]);
                acc[0] += l[0];
                acc[1] += l[1];
            }
            if j + 1 < n {
                let u = upper.apply(v[j + 1]);
                acc[0] += u[0];
                acc[1] += u[1];
            }
            out[j] = acc;
        }
        SpinorField::from_values(self.grid, out)
    }

    /// `(Id - H/2) X` (with the potential's `+i v` on the diagonal).
    pub fn apply_rhs(&self, x: &SpinorField) -> SpinorField {
        self.tridiag_matvec(x, &self.rhs_diag, self.rhs_lower, self.rhs_upper)
    }

    /// `(Id + H/2) X`; exposed for residual checks.
    pub fn apply_lhs(&self, x: &SpinorField) -> SpinorField {
        self.tridiag_matvec(x, &self.lhs_diag, self.lhs_lower, self.lhs_upper)
    }

    /// Solve `(Id + H/2) Y = B` with the stored factorization.
    pub fn solve(&self, b: &SpinorField) -> SpinorField {
        assert_eq!(b.grid(), &self.grid, "field grid mismatch");
        let n = self.grid.dof();
        let bv = b.values();
        let mut work = vec![[Complex64::ZERO; 2]; n];
        work[0] = self.pivot_inv[0].apply(bv[0]);
        for j in 1..n {
            let l = self.lhs_lower.apply(work[j - 1]);
            work[j] = self.pivot_inv[j].apply([bv[j][0] - l[0], bv[j][1] - l[1]]);
        }
        for j in (0..n - 1).rev() {
            let c = self.coupling[j].apply(work[j + 1]);
            work[j][0] -= c[0];
            work[j][1] -= c[1];
        }
        SpinorField::from_values(self.grid, work)
    }

    /// Assembled skew-Hermiticity check on the stencil blocks; the discrete
    /// self-adjointness oracle behind the isometry property.
    pub fn skew_defect(&self) -> f64 {
        let mut defect: f64 = 0.0;
        for d in &self.lhs_diag {
            // H_diag = 2 (lhs_diag - I) must satisfy H' = -H
            let h = d.sub(Mat2::IDENTITY);
            defect = defect.max(h.adjoint().add(h).max_abs());
        }
        let upper = self.lhs_upper;
        let lower = self.lhs_lower;
        defect.max(upper.adjoint().add(lower).max_abs())
    }
}

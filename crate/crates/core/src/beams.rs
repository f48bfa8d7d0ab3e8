//! Analytic beams solving the paraxial Helmholtz equation.
//!
//! These supply ground-truth intensity and phase for the reconstruction
//! experiments, together with closed-form z-derivatives so diagnostics can
//! separate solver error from data error.

use std::f64::consts::PI;

use crate::calculus::{fd_divergence_of_flux, fd_gradient, fd_laplacian};
use crate::error::FieldError;
use crate::grid::{FieldStack, Grid2D, ScalarField2D};

/// Plane wave `A = exp(i(x·ξ + ½‖ξ‖² z))`: unit intensity, linear phase.
#[derive(Debug, Clone, Copy)]
pub struct PlaneWaveParams {
    pub xi: [f64; 2],
    pub k: f64,
}

impl PlaneWaveParams {
    pub fn new(xi: [f64; 2], k: f64) -> Result<Self, FieldError> {
        if !(k > 0.0) {
            return Err(FieldError::InvalidField(format!(
                "wavenumber must be positive, got {k}"
            )));
        }
        if !xi[0].is_finite() || !xi[1].is_finite() {
            return Err(FieldError::InvalidField(format!(
                "spatial frequency must be finite, got ({}, {})",
                xi[0], xi[1]
            )));
        }
        Ok(Self { xi, k })
    }

    pub fn intensity(&self, _x: f64, _y: f64, _z: f64) -> f64 {
        1.0
    }

    pub fn phase(&self, x: f64, y: f64, z: f64) -> f64 {
        let xi2 = self.xi[0] * self.xi[0] + self.xi[1] * self.xi[1];
        x * self.xi[0] + y * self.xi[1] + 0.5 * xi2 * z
    }

    pub fn phase_z(&self) -> f64 {
        0.5 * (self.xi[0] * self.xi[0] + self.xi[1] * self.xi[1])
    }
}

/// Gaussian beam with Rayleigh range `z_r`, wavenumber `k`, amplitude scale `i0`.
///
/// Normalization: with `i0 = 1`, `k = 1`, `z_r = 1` the on-axis intensity at
/// z = 0 is exactly 1 and `I(x, 0) = exp(-‖x‖²)`.
///
/// The phase uses the continuous Gouy branch pinned to `3π/2` at z = 0:
/// `φ = 3π/2 + arctan(z/z_r) − k‖x‖² z / (2(z² + z_r²))`. The curvature term
/// is written in the z/(z²+z_r²) form, finite at z = 0.
#[derive(Debug, Clone, Copy)]
pub struct GaussianBeamParams {
    pub z_r: f64,
    pub k: f64,
    pub i0: f64,
}

impl GaussianBeamParams {
    pub fn new(z_r: f64, k: f64, i0: f64) -> Result<Self, FieldError> {
        if !(z_r > 0.0) || !(k > 0.0) || !(i0 > 0.0) {
            return Err(FieldError::InvalidField(format!(
                "gaussian beam needs z_r, k, i0 > 0; got {z_r}, {k}, {i0}"
            )));
        }
        Ok(Self { z_r, k, i0 })
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * PI / self.k
    }

    /// Waist radius `w0 = √(λ z_r / π) = √(2 z_r / k)`.
    pub fn waist_radius(&self) -> f64 {
        (2.0 * self.z_r / self.k).sqrt()
    }

    /// `w²(z) = w0² (1 + (z/z_r)²)`.
    pub fn beam_radius_sq(&self, z: f64) -> f64 {
        let w0_sq = 2.0 * self.z_r / self.k;
        w0_sq * (1.0 + (z / self.z_r) * (z / self.z_r))
    }

    pub fn intensity(&self, x: f64, y: f64, z: f64) -> f64 {
        let w0_sq = 2.0 * self.z_r / self.k;
        let w_sq = self.beam_radius_sq(z);
        let r2 = x * x + y * y;
        self.i0 * self.i0 * (w0_sq / w_sq) * (-2.0 * r2 / w_sq).exp()
    }

    pub fn phase(&self, x: f64, y: f64, z: f64) -> f64 {
        let r2 = x * x + y * y;
        1.5 * PI + (z / self.z_r).atan() - self.k * r2 * z / (2.0 * (z * z + self.z_r * self.z_r))
    }

    /// ∂I/∂z in closed form.
    pub fn intensity_z(&self, x: f64, y: f64, z: f64) -> f64 {
        self.intensity(x, y, z) * self.log_intensity_z(x, y, z)
    }

    /// ∂²I/∂z² in closed form.
    pub fn intensity_zz(&self, x: f64, y: f64, z: f64) -> f64 {
        let g = self.log_intensity_z(x, y, z);
        self.intensity(x, y, z) * (g * g + self.log_intensity_z_deriv(x, y, z))
    }

    // d/dz log I = W'(2r² − W)/W² with W = w²(z).
    fn log_intensity_z(&self, x: f64, y: f64, z: f64) -> f64 {
        let w0_sq = 2.0 * self.z_r / self.k;
        let w = self.beam_radius_sq(z);
        let wp = 2.0 * w0_sq * z / (self.z_r * self.z_r);
        let r2 = x * x + y * y;
        wp * (2.0 * r2 - w) / (w * w)
    }

    // d²/dz² log I.
    fn log_intensity_z_deriv(&self, x: f64, y: f64, z: f64) -> f64 {
        let w0_sq = 2.0 * self.z_r / self.k;
        let w = self.beam_radius_sq(z);
        let wp = 2.0 * w0_sq * z / (self.z_r * self.z_r);
        let wpp = 2.0 * w0_sq / (self.z_r * self.z_r);
        let r2 = x * x + y * y;
        wpp * (2.0 * r2 - w) / (w * w)
            - wp * wp / (w * w)
            - 2.0 * wp * wp * (2.0 * r2 - w) / (w * w * w)
    }

    /// ∂φ/∂z in closed form.
    pub fn phase_z(&self, x: f64, y: f64, z: f64) -> f64 {
        let r2 = x * x + y * y;
        let zr2 = self.z_r * self.z_r;
        let denom = z * z + zr2;
        self.z_r / denom - 0.5 * self.k * r2 * (zr2 - z * z) / (denom * denom)
    }

    /// ∂²φ/∂z² in closed form.
    pub fn phase_zz(&self, x: f64, y: f64, z: f64) -> f64 {
        let r2 = x * x + y * y;
        let zr2 = self.z_r * self.z_r;
        let denom = z * z + zr2;
        -2.0 * z * self.z_r / (denom * denom)
            + self.k * r2 * z * (3.0 * zr2 - z * z) / (denom * denom * denom)
    }

    /// Reduced intensity term `Î = Δ√I/√I = 4r²/w⁴ − 4/w²` in closed form.
    pub fn i_hat(&self, x: f64, y: f64, z: f64) -> f64 {
        let w = self.beam_radius_sq(z);
        let r2 = x * x + y * y;
        4.0 * r2 / (w * w) - 4.0 / w
    }

    /// Partial derivatives (Î_x, Î_y, Î_z) in closed form.
    pub fn i_hat_gradient(&self, x: f64, y: f64, z: f64) -> [f64; 3] {
        let w = self.beam_radius_sq(z);
        let w0_sq = 2.0 * self.z_r / self.k;
        let wp = 2.0 * w0_sq * z / (self.z_r * self.z_r);
        let r2 = x * x + y * y;
        let ddx = 8.0 * x / (w * w);
        let ddy = 8.0 * y / (w * w);
        // d/dz (4r²W⁻² − 4W⁻¹) = (−8r²W⁻³ + 4W⁻²)·W'
        let ddz = (-8.0 * r2 / (w * w * w) + 4.0 / (w * w)) * wp;
        [ddx, ddy, ddz]
    }
}

/// Ground-truth beam selector shared by the solvers and the CLI.
#[derive(Debug, Clone, Copy)]
pub enum Beam {
    PlaneWave(PlaneWaveParams),
    Gaussian(GaussianBeamParams),
}

impl Beam {
    pub fn k(&self) -> f64 {
        match self {
            Beam::PlaneWave(p) => p.k,
            Beam::Gaussian(p) => p.k,
        }
    }

    pub fn intensity(&self, x: f64, y: f64, z: f64) -> f64 {
        match self {
            Beam::PlaneWave(p) => p.intensity(x, y, z),
            Beam::Gaussian(p) => p.intensity(x, y, z),
        }
    }

    pub fn phase(&self, x: f64, y: f64, z: f64) -> f64 {
        match self {
            Beam::PlaneWave(p) => p.phase(x, y, z),
            Beam::Gaussian(p) => p.phase(x, y, z),
        }
    }

    pub fn intensity_z(&self, x: f64, y: f64, z: f64) -> f64 {
        match self {
            Beam::PlaneWave(_) => 0.0,
            Beam::Gaussian(p) => p.intensity_z(x, y, z),
        }
    }

    pub fn intensity_zz(&self, x: f64, y: f64, z: f64) -> f64 {
        match self {
            Beam::PlaneWave(_) => 0.0,
            Beam::Gaussian(p) => p.intensity_zz(x, y, z),
        }
    }

    pub fn phase_z(&self, x: f64, y: f64, z: f64) -> f64 {
        match self {
            Beam::PlaneWave(p) => p.phase_z(),
            Beam::Gaussian(p) => p.phase_z(x, y, z),
        }
    }

    pub fn phase_zz(&self, x: f64, y: f64, z: f64) -> f64 {
        match self {
            Beam::PlaneWave(_) => 0.0,
            Beam::Gaussian(p) => p.phase_zz(x, y, z),
        }
    }

    /// Sample (I, φ) on a grid slice.
    pub fn fields(&self, grid: &Grid2D, z: f64) -> (ScalarField2D, ScalarField2D) {
        let i = ScalarField2D::from_fn(*grid, z, |x, y| self.intensity(x, y, z))
            .expect("beam intensity is finite");
        let phi = ScalarField2D::from_fn(*grid, z, |x, y| self.phase(x, y, z))
            .expect("beam phase is finite");
        (i, phi)
    }

    pub fn intensity_z_field(&self, grid: &Grid2D, z: f64) -> ScalarField2D {
        ScalarField2D::from_fn(*grid, z, |x, y| self.intensity_z(x, y, z))
            .expect("beam derivative is finite")
    }

    pub fn phase_z_field(&self, grid: &Grid2D, z: f64) -> ScalarField2D {
        ScalarField2D::from_fn(*grid, z, |x, y| self.phase_z(x, y, z))
            .expect("beam derivative is finite")
    }
}

/// Sample (I, φ) per slice of a strictly increasing, uniform z list.
pub fn plane_wave_fields(
    p: &PlaneWaveParams,
    grid: &Grid2D,
    z: f64,
) -> (ScalarField2D, ScalarField2D) {
    Beam::PlaneWave(*p).fields(grid, z)
}

pub fn gaussian_fields(
    p: &GaussianBeamParams,
    grid: &Grid2D,
    z: f64,
) -> (ScalarField2D, ScalarField2D) {
    Beam::Gaussian(*p).fields(grid, z)
}

/// Materialize intensity and phase stacks for a z list.
pub fn beam_stack(
    beam: &Beam,
    grid: &Grid2D,
    z_list: &[f64],
) -> Result<(FieldStack, FieldStack), FieldError> {
    if z_list.len() < 2 {
        return Err(FieldError::TooFewSlices {
            got: z_list.len(),
            need: 2,
        });
    }
    if z_list.iter().any(|z| !z.is_finite()) {
        return Err(FieldError::InvalidField(
            "non-finite z in slice list".into(),
        ));
    }
    let mut intensity = Vec::with_capacity(z_list.len());
    let mut phase = Vec::with_capacity(z_list.len());
    for &z in z_list {
        let (i, p) = beam.fields(grid, z);
        intensity.push(i);
        phase.push(p);
    }
    // FieldStack's constructor enforces strictly increasing, uniform z.
    Ok((FieldStack::new(intensity)?, FieldStack::new(phase)?))
}

/// Modeling-error terms lost by the paraxial truncation.
///
/// `M_TPE = −¼ I_z²/I^{3/2} + ½ I_zz/√I − √I φ_z²` and
/// `M_TIE = (I_z/√I) φ_z + √I φ_zz`.
#[derive(Debug, Clone)]
pub struct ModelingErrorTerms {
    pub m_tie: ScalarField2D,
    pub m_tpe: ScalarField2D,
}

pub fn modeling_error_terms(
    intensity: &ScalarField2D,
    intensity_z: &ScalarField2D,
    intensity_zz: &ScalarField2D,
    phase_z: &ScalarField2D,
    phase_zz: &ScalarField2D,
) -> Result<ModelingErrorTerms, FieldError> {
    for f in [intensity_z, intensity_zz, phase_z, phase_zz] {
        if !intensity.same_grid(f) {
            return Err(FieldError::GridMismatch);
        }
    }
    if !intensity.is_strictly_positive() {
        return Err(FieldError::NonPositiveIntensity);
    }
    let n = intensity.values().len();
    let mut tie = Vec::with_capacity(n);
    let mut tpe = Vec::with_capacity(n);
    for m in 0..n {
        let i = intensity.values()[m];
        let iz = intensity_z.values()[m];
        let izz = intensity_zz.values()[m];
        let pz = phase_z.values()[m];
        let pzz = phase_zz.values()[m];
        let sqrt_i = i.sqrt();
        tpe.push(-0.25 * iz * iz / (i * sqrt_i) + 0.5 * izz / sqrt_i - sqrt_i * pz * pz);
        tie.push(iz / sqrt_i * pz + sqrt_i * pzz);
    }
    Ok(ModelingErrorTerms {
        m_tie: ScalarField2D::new(*intensity.grid(), intensity.z(), tie)?,
        m_tpe: ScalarField2D::new(*intensity.grid(), intensity.z(), tpe)?,
    })
}

/// Discrete residual of the paraxial Helmholtz equation for `A = √I e^{iφ}`.
///
/// Returns the real part `Δ√I − √I‖∇φ‖² + 2k√I φ_z` (the TPE residual scaled
/// by √I) and the imaginary part `∇·(I∇φ) − k I_z` (the TIE residual), both
/// evaluated with the finite-difference operators at interior nodes; boundary
/// rows are zero.
pub fn paraxial_residual(
    intensity: &ScalarField2D,
    phi: &ScalarField2D,
    phi_z: &ScalarField2D,
    intensity_z: &ScalarField2D,
    k: f64,
) -> Result<(ScalarField2D, ScalarField2D), FieldError> {
    for f in [phi, phi_z, intensity_z] {
        if !intensity.same_grid(f) {
            return Err(FieldError::GridMismatch);
        }
    }
    if !intensity.is_strictly_positive() {
        return Err(FieldError::NonPositiveIntensity);
    }
    let grid = *intensity.grid();
    let sqrt_i = intensity.map(f64::sqrt)?;
    let lap_sqrt_i = fd_laplacian(&sqrt_i);
    let (phi_x, phi_y) = fd_gradient(phi);
    let div = fd_divergence_of_flux(intensity, phi)?;

    let mut re = vec![0.0; grid.len()];
    let mut im = vec![0.0; grid.len()];
    for (i, j) in grid.interior_nodes() {
        let m = grid.node(i, j);
        let grad_sq = phi_x.values()[m] * phi_x.values()[m] + phi_y.values()[m] * phi_y.values()[m];
        let s = sqrt_i.values()[m];
        re[m] = lap_sqrt_i.values()[m] - s * grad_sq + 2.0 * k * s * phi_z.values()[m];
        im[m] = div.values()[m] - k * intensity_z.values()[m];
    }
    Ok((
        ScalarField2D::new(grid, phi.z(), re)?,
        ScalarField2D::new(grid, phi.z(), im)?,
    ))
}

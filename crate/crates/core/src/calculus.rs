//! Finite-difference calculus on uniform grids.
//!
//! Interior nodes use second-order central stencils; boundary nodes use
//! second-order one-sided stencils so diagnostics stay uniformly second
//! order. The divergence-of-flux operator is the conservative form with
//! arithmetic-mean interface coefficients, identical to the stencil the
//! TIE solver assembles.

use crate::error::FieldError;
use crate::grid::{FieldStack, ScalarField2D};

/// One-dimensional first derivative along a line of samples.
///
/// Central in the interior, one-sided second order at the ends.
fn d1_line(get: impl Fn(usize) -> f64, n: usize, h: f64, out: &mut impl FnMut(usize, f64)) {
    out(0, (-3.0 * get(0) + 4.0 * get(1) - get(2)) / (2.0 * h));
    for i in 1..n - 1 {
        out(i, (get(i + 1) - get(i - 1)) / (2.0 * h));
    }
    out(
        n - 1,
        (3.0 * get(n - 1) - 4.0 * get(n - 2) + get(n - 3)) / (2.0 * h),
    );
}

/// One-dimensional second derivative along a line of samples.
///
/// The one-sided end stencil (2,-5,4,-1)/h² needs four nodes; on a
/// three-node line the central value is reused at the ends.
fn d2_line(get: impl Fn(usize) -> f64, n: usize, h: f64, out: &mut impl FnMut(usize, f64)) {
    let h2 = h * h;
    let central = |i: usize| (get(i + 1) - 2.0 * get(i) + get(i - 1)) / h2;
    if n >= 4 {
        out(
            0,
            (2.0 * get(0) - 5.0 * get(1) + 4.0 * get(2) - get(3)) / h2,
        );
        out(
            n - 1,
            (2.0 * get(n - 1) - 5.0 * get(n - 2) + 4.0 * get(n - 3) - get(n - 4)) / h2,
        );
    } else {
        out(0, central(1));
        out(n - 1, central(1));
    }
    for i in 1..n - 1 {
        out(i, central(i));
    }
}

/// Partial derivatives (f_x, f_y) of a field.
pub fn fd_gradient(f: &ScalarField2D) -> (ScalarField2D, ScalarField2D) {
    let g = *f.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let mut fx = vec![0.0; g.len()];
    let mut fy = vec![0.0; g.len()];
    for j in 0..ny {
        d1_line(|i| f.at(i, j), nx, g.hx(), &mut |i, v| fx[g.node(i, j)] = v);
    }
    for i in 0..nx {
        d1_line(|j| f.at(i, j), ny, g.hy(), &mut |j, v| fy[g.node(i, j)] = v);
    }
    (
        ScalarField2D::new(g, f.z(), fx).expect("finite input gives finite gradient"),
        ScalarField2D::new(g, f.z(), fy).expect("finite input gives finite gradient"),
    )
}

/// Five-point Laplacian; boundary nodes from one-sided second derivatives.
pub fn fd_laplacian(f: &ScalarField2D) -> ScalarField2D {
    let g = *f.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let mut lap = vec![0.0; g.len()];
    for j in 0..ny {
        d2_line(|i| f.at(i, j), nx, g.hx(), &mut |i, v| {
            lap[g.node(i, j)] = v
        });
    }
    for i in 0..nx {
        d2_line(|j| f.at(i, j), ny, g.hy(), &mut |j, v| {
            lap[g.node(i, j)] += v
        });
    }
    ScalarField2D::new(g, f.z(), lap).expect("finite input gives finite laplacian")
}

/// Reduced intensity term `Δ√I / √I`, the TPE right-hand-side driver.
///
/// Computed from the pointwise square root rather than expanded derivatives
/// of I, which avoids cancellation where I is small.
pub fn compute_i_hat(intensity: &ScalarField2D) -> Result<ScalarField2D, FieldError> {
    if !intensity.is_strictly_positive() {
        return Err(FieldError::NonPositiveIntensity);
    }
    let sqrt_i = intensity.map(f64::sqrt)?;
    let lap = fd_laplacian(&sqrt_i);
    let values = lap
        .values()
        .iter()
        .zip(sqrt_i.values())
        .map(|(&l, &s)| l / s)
        .collect();
    ScalarField2D::new(*intensity.grid(), intensity.z(), values)
}

/// Conservative evaluation of `∇·(I ∇φ)` at interior nodes.
///
/// Interface coefficients are arithmetic means of nodal I, and interface
/// gradients are compact differences of φ, so with I ≡ 1 this reduces
/// exactly to the five-point Laplacian. Boundary rows are zero; callers
/// treat them as unused.
pub fn fd_divergence_of_flux(
    intensity: &ScalarField2D,
    phi: &ScalarField2D,
) -> Result<ScalarField2D, FieldError> {
    if !intensity.same_grid(phi) {
        return Err(FieldError::GridMismatch);
    }
    let g = *phi.grid();
    let (hx2, hy2) = (g.hx() * g.hx(), g.hy() * g.hy());
    let mut out = vec![0.0; g.len()];
    for (i, j) in g.interior_nodes() {
        let c = phi.at(i, j);
        let ic = intensity.at(i, j);
        let east = 0.5 * (ic + intensity.at(i + 1, j)) * (phi.at(i + 1, j) - c);
        let west = 0.5 * (ic + intensity.at(i - 1, j)) * (c - phi.at(i - 1, j));
        let north = 0.5 * (ic + intensity.at(i, j + 1)) * (phi.at(i, j + 1) - c);
        let south = 0.5 * (ic + intensity.at(i, j - 1)) * (c - phi.at(i, j - 1));
        out[g.node(i, j)] = (east - west) / hx2 + (north - south) / hy2;
    }
    ScalarField2D::new(g, phi.z(), out)
}

/// ∂I/∂z at one slice of a stack; central inside, one-sided second order at the ends.
pub fn stack_z_derivative(
    stack: &FieldStack,
    slice_index: usize,
) -> Result<ScalarField2D, FieldError> {
    let n = stack.len();
    if n < 3 {
        return Err(FieldError::TooFewSlices { got: n, need: 3 });
    }
    if slice_index >= n {
        return Err(FieldError::IndexOutOfRange {
            index: slice_index,
            len: n,
        });
    }
    let dz = stack.dz();
    let v = |idx: usize| stack.slices()[idx].values();
    let len = stack.grid().len();
    let mut out = vec![0.0; len];
    if slice_index == 0 {
        let (f0, f1, f2) = (v(0), v(1), v(2));
        for m in 0..len {
            out[m] = (-3.0 * f0[m] + 4.0 * f1[m] - f2[m]) / (2.0 * dz);
        }
    } else if slice_index == n - 1 {
        let (f0, f1, f2) = (v(n - 1), v(n - 2), v(n - 3));
        for m in 0..len {
            out[m] = (3.0 * f0[m] - 4.0 * f1[m] + f2[m]) / (2.0 * dz);
        }
    } else {
        let (fm, fp) = (v(slice_index - 1), v(slice_index + 1));
        for m in 0..len {
            out[m] = (fp[m] - fm[m]) / (2.0 * dz);
        }
    }
    ScalarField2D::new(*stack.grid(), stack.slices()[slice_index].z(), out)
}

/// Error norms of `a` against reference `b`.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ErrorNorms {
    /// ‖a−b‖₂ / ‖b‖₂ (absolute when the reference norm is zero).
    pub l2_rel: f64,
    /// ‖a−b‖∞ / ‖b‖∞ (absolute when the reference norm is zero).
    pub linf_rel: f64,
    /// ‖a−b‖∞.
    pub linf_abs: f64,
    /// Set when ‖b‖ = 0 and the relative norms fall back to absolute.
    pub reference_zero: bool,
}

/// Relative and absolute error norms between two fields on one grid.
pub fn field_error_norms(a: &ScalarField2D, b: &ScalarField2D) -> Result<ErrorNorms, FieldError> {
    if !a.same_grid(b) {
        return Err(FieldError::GridMismatch);
    }
    let mut diff_l2 = 0.0;
    let mut diff_linf: f64 = 0.0;
    let mut ref_l2 = 0.0;
    let mut ref_linf: f64 = 0.0;
    for (&va, &vb) in a.values().iter().zip(b.values()) {
        let d = va - vb;
        diff_l2 += d * d;
        diff_linf = diff_linf.max(d.abs());
        ref_l2 += vb * vb;
        ref_linf = ref_linf.max(vb.abs());
    }
    let diff_l2 = diff_l2.sqrt();
    let ref_l2 = ref_l2.sqrt();
    let reference_zero = ref_l2 == 0.0;
    Ok(ErrorNorms {
        l2_rel: if reference_zero {
            diff_l2
        } else {
            diff_l2 / ref_l2
        },
        linf_rel: if ref_linf == 0.0 {
            diff_linf
        } else {
            diff_linf / ref_linf
        },
        linf_abs: diff_linf,
        reference_zero,
    })
}

/// Max absolute difference restricted to interior nodes.
pub fn interior_linf_diff(a: &ScalarField2D, b: &ScalarField2D) -> Result<f64, FieldError> {
    if !a.same_grid(b) {
        return Err(FieldError::GridMismatch);
    }
    Ok(a.grid()
        .interior_nodes()
        .map(|(i, j)| (a.at(i, j) - b.at(i, j)).abs())
        .fold(0.0, f64::max))
}

//! C¹ interpolation of sampled fields for off-grid evaluation.
//!
//! Characteristic curves need the reduced intensity term and its first
//! derivatives between grid nodes. Each slice is interpolated bicubically
//! (Hermite patches with finite-difference tangents); stacks blend linearly
//! between adjacent slices in z.

use crate::error::TpeError;
use crate::grid::{FieldStack, Grid2D, ScalarField2D};

/// Slack applied to domain-containment checks, relative to the extent.
const DOMAIN_REL_SLACK: f64 = 1e-12;

/// Bicubic Hermite interpolant of one field slice.
///
/// Tangents come from central differences (one-sided second order at the
/// edges), which keeps the surface C¹ and its derivatives second-order
/// consistent with the samples.
#[derive(Debug, Clone)]
pub struct BicubicInterpolant {
    grid: Grid2D,
    values: Vec<f64>,
    /// ∂f/∂i and ∂f/∂j in index space, plus the cross derivative.
    d_i: Vec<f64>,
    d_j: Vec<f64>,
    d_ij: Vec<f64>,
}

fn index_tangent(get: impl Fn(usize) -> f64, n: usize, at: usize) -> f64 {
    if at == 0 {
        (-3.0 * get(0) + 4.0 * get(1) - get(2)) / 2.0
    } else if at == n - 1 {
        (3.0 * get(n - 1) - 4.0 * get(n - 2) + get(n - 3)) / 2.0
    } else {
        (get(at + 1) - get(at - 1)) / 2.0
    }
}

/// Hermite basis on [0,1]: value weights for (f0, f1, m0, m1).
#[inline]
fn hermite(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        2.0 * t3 - 3.0 * t2 + 1.0,
        -2.0 * t3 + 3.0 * t2,
        t3 - 2.0 * t2 + t,
        t3 - t2,
    ]
}

/// Derivative of the Hermite basis.
#[inline]
fn hermite_d(t: f64) -> [f64; 4] {
    let t2 = t * t;
    [
        6.0 * t2 - 6.0 * t,
        -6.0 * t2 + 6.0 * t,
        3.0 * t2 - 4.0 * t + 1.0,
        3.0 * t2 - 2.0 * t,
    ]
}

impl BicubicInterpolant {
    pub fn new(field: &ScalarField2D) -> Self {
        let grid = *field.grid();
        let (nx, ny) = (grid.nx(), grid.ny());
        let n = grid.len();
        let mut d_i = vec![0.0; n];
        let mut d_j = vec![0.0; n];
        let mut d_ij = vec![0.0; n];
        for j in 0..ny {
            for i in 0..nx {
                d_i[grid.node(i, j)] = index_tangent(|ii| field.at(ii, j), nx, i);
            }
        }
        for i in 0..nx {
            for j in 0..ny {
                d_j[grid.node(i, j)] = index_tangent(|jj| field.at(i, jj), ny, j);
                d_ij[grid.node(i, j)] = index_tangent(|jj| d_i[grid.node(i, jj)], ny, j);
            }
        }
        Self {
            grid,
            values: field.values().to_vec(),
            d_i,
            d_j,
            d_ij,
        }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    fn locate(&self, x: f64, y: f64) -> Result<(usize, usize, f64, f64), TpeError> {
        let g = &self.grid;
        let sx = DOMAIN_REL_SLACK * (g.x_max() - g.x_min());
        let sy = DOMAIN_REL_SLACK * (g.y_max() - g.y_min());
        if x < g.x_min() - sx || x > g.x_max() + sx || y < g.y_min() - sy || y > g.y_max() + sy {
            return Err(TpeError::InterpolationOutOfDomain { x, y, z: f64::NAN });
        }
        let u = ((x - g.x_min()) / g.hx()).clamp(0.0, (g.nx() - 1) as f64);
        let v = ((y - g.y_min()) / g.hy()).clamp(0.0, (g.ny() - 1) as f64);
        let i0 = (u.floor() as usize).min(g.nx() - 2);
        let j0 = (v.floor() as usize).min(g.ny() - 2);
        Ok((i0, j0, u - i0 as f64, v - j0 as f64))
    }

    /// Interpolated value and (∂x, ∂y) derivatives at `(x, y)`.
    pub fn value_and_gradient(&self, x: f64, y: f64) -> Result<(f64, f64, f64), TpeError> {
        let (i0, j0, tu, tv) = self.locate(x, y)?;
        let g = &self.grid;
        let hu = hermite(tu);
        let hv = hermite(tv);
        let du = hermite_d(tu);
        let dv = hermite_d(tv);

        let mut value = 0.0;
        let mut d_du = 0.0;
        let mut d_dv = 0.0;
        for (cj, jj) in [(0usize, j0), (1usize, j0 + 1)] {
            for (ci, ii) in [(0usize, i0), (1usize, i0 + 1)] {
                let m = g.node(ii, jj);
                let f = self.values[m];
                let fi = self.d_i[m];
                let fj = self.d_j[m];
                let fij = self.d_ij[m];
                // Hermite weights: value rows 0/1, tangent rows 2/3.
                let wu_f = hu[ci];
                let wu_m = hu[2 + ci];
                let wv_f = hv[cj];
                let wv_m = hv[2 + cj];
                value += f * wu_f * wv_f + fi * wu_m * wv_f + fj * wu_f * wv_m + fij * wu_m * wv_m;
                let du_f = du[ci];
                let du_m = du[2 + ci];
                let dv_f = dv[cj];
                let dv_m = dv[2 + cj];
                d_du += f * du_f * wv_f + fi * du_m * wv_f + fj * du_f * wv_m + fij * du_m * wv_m;
                d_dv += f * wu_f * dv_f + fi * wu_m * dv_f + fj * wu_f * dv_m + fij * wu_m * dv_m;
            }
        }
        Ok((value, d_du / g.hx(), d_dv / g.hy()))
    }

    pub fn value(&self, x: f64, y: f64) -> Result<f64, TpeError> {
        self.value_and_gradient(x, y).map(|(v, _, _)| v)
    }
}

/// Stack interpolant: bicubic per slice, linear blending between slices.
///
/// The z-derivative is the slope of the blend, constant within each slab.
#[derive(Debug, Clone)]
pub struct StackInterpolant {
    slices: Vec<BicubicInterpolant>,
    z_first: f64,
    dz: f64,
}

impl StackInterpolant {
    pub fn new(stack: &FieldStack) -> Self {
        Self {
            slices: stack.slices().iter().map(BicubicInterpolant::new).collect(),
            z_first: stack.z_first(),
            dz: stack.dz(),
        }
    }

    fn locate_z(&self, z: f64) -> Result<(usize, f64), TpeError> {
        let z_last = self.z_first + self.dz * (self.slices.len() - 1) as f64;
        let slack = DOMAIN_REL_SLACK * (z_last - self.z_first).abs().max(1.0);
        if z < self.z_first - slack || z > z_last + slack {
            return Err(TpeError::InterpolationOutOfDomain {
                x: f64::NAN,
                y: f64::NAN,
                z,
            });
        }
        let t = ((z - self.z_first) / self.dz).clamp(0.0, (self.slices.len() - 1) as f64);
        let n0 = (t.floor() as usize).min(self.slices.len() - 2);
        Ok((n0, t - n0 as f64))
    }

    /// Value and (∂x, ∂y, ∂z) at `(x, y, z)`.
    pub fn value_and_gradient(&self, x: f64, y: f64, z: f64) -> Result<(f64, [f64; 3]), TpeError> {
        let (n0, t) = self.locate_z(z)?;
        let (v0, dx0, dy0) = self.slices[n0].value_and_gradient(x, y)?;
        let (v1, dx1, dy1) = self.slices[n0 + 1].value_and_gradient(x, y)?;
        let value = (1.0 - t) * v0 + t * v1;
        let dx = (1.0 - t) * dx0 + t * dx1;
        let dy = (1.0 - t) * dy0 + t * dy1;
        let dz = (v1 - v0) / self.dz;
        Ok((value, [dx, dy, dz]))
    }

    pub fn value(&self, x: f64, y: f64, z: f64) -> Result<f64, TpeError> {
        self.value_and_gradient(x, y, z).map(|(v, _)| v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn reproduces_cubics_in_each_axis() {
        // Hermite with exact tangents reproduces cubics; FD tangents are
        // exact for quadratics, so quadratic reproduction is exact.
        let g = Grid2D::new(9, 9, 0.0, 2.0, -1.0, 1.0).unwrap();
        let f = ScalarField2D::from_fn(g, 0.0, |x, y| 1.0 + x * x - 0.5 * y * y + x * y).unwrap();
        let interp = BicubicInterpolant::new(&f);
        for &(x, y) in &[(0.13, -0.41), (1.57, 0.83), (0.5, 0.0), (2.0, 1.0)] {
            let (v, dx, dy) = interp.value_and_gradient(x, y).unwrap();
            assert_abs_diff_eq!(v, 1.0 + x * x - 0.5 * y * y + x * y, epsilon = 1e-12);
            assert_abs_diff_eq!(dx, 2.0 * x + y, epsilon = 1e-11);
            assert_abs_diff_eq!(dy, -y + x, epsilon = 1e-11);
        }
    }

    #[test]
    fn matches_samples_at_nodes() {
        let g = Grid2D::new(7, 5, 0.0, 1.0, 0.0, 1.0).unwrap();
        let f = ScalarField2D::from_fn(g, 0.0, |x, y| (3.0 * x).sin() * (2.0 * y).cos()).unwrap();
        let interp = BicubicInterpolant::new(&f);
        for j in 0..g.ny() {
            for i in 0..g.nx() {
                assert_abs_diff_eq!(
                    interp.value(g.x(i), g.y(j)).unwrap(),
                    f.at(i, j),
                    epsilon = 1e-13
                );
            }
        }
    }

    #[test]
    fn gradient_consistent_with_finite_differences() {
        let g = Grid2D::new(33, 33, -1.0, 1.0, -1.0, 1.0).unwrap();
        let f = ScalarField2D::from_fn(g, 0.0, |x, y| (-(x * x + y * y)).exp()).unwrap();
        let interp = BicubicInterpolant::new(&f);
        let h = 1e-5;
        // Points inside cells: a centered difference straddling a knot picks
        // up the O(h) second-derivative jump of the C¹ surface.
        for &(x, y) in &[(0.31, -0.42), (-0.77, 0.11), (0.013, 0.49)] {
            let (_, dx, dy) = interp.value_and_gradient(x, y).unwrap();
            let fd_x =
                (interp.value(x + h, y).unwrap() - interp.value(x - h, y).unwrap()) / (2.0 * h);
            let fd_y =
                (interp.value(x, y + h).unwrap() - interp.value(x, y - h).unwrap()) / (2.0 * h);
            assert_abs_diff_eq!(dx, fd_x, epsilon = 1e-8);
            assert_abs_diff_eq!(dy, fd_y, epsilon = 1e-8);
        }
    }

    #[test]
    fn rejects_out_of_domain() {
        let g = Grid2D::unit_square(5).unwrap();
        let f = ScalarField2D::constant(g, 0.0, 1.0).unwrap();
        let interp = BicubicInterpolant::new(&f);
        assert!(interp.value(1.5, 0.5).is_err());
        assert!(interp.value(0.5, -0.1).is_err());
        assert!(interp.value(1.0, 1.0).is_ok());
    }

    #[test]
    fn stack_blends_linearly_in_z() {
        let g = Grid2D::unit_square(5).unwrap();
        let mk = |z: f64| ScalarField2D::from_fn(g, z, move |x, y| x + y + 2.0 * z).unwrap();
        let stack = FieldStack::new(vec![mk(0.0), mk(0.5), mk(1.0)]).unwrap();
        let interp = StackInterpolant::new(&stack);
        let (v, grad) = interp.value_and_gradient(0.25, 0.5, 0.3).unwrap();
        assert_abs_diff_eq!(v, 0.25 + 0.5 + 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(grad[0], 1.0, epsilon = 1e-11);
        assert_abs_diff_eq!(grad[1], 1.0, epsilon = 1e-11);
        assert_abs_diff_eq!(grad[2], 2.0, epsilon = 1e-11);
        assert!(interp.value(0.5, 0.5, 1.2).is_err());
    }
}

//! Vanishing-viscosity solution of the transport of phase equation.
//!
//! The regularized equation `2k φ_z − εΔφ − ‖∇φ‖² = −Î` turns linear under
//! the log substitution `φ = ε log ψ`:
//!
//! ```text
//! 2k ψ_z − εΔψ = −(Î/ε)ψ,    ψ = exp(g/ε) on Ω₀,   ψ = exp(h/ε) on Γ.
//! ```
//!
//! The march integrates this parabolic equation in z with backward Euler;
//! each step solves one symmetric positive definite system. A constant
//! gauge is subtracted from the phase before exponentiating — exp(3π/2/ε)
//! at ε = 0.05 is representable but numerically hostile, and the equation's
//! linearity makes the shift exact on inversion.

use std::fmt;

use crate::calculus::field_error_norms;
use crate::characteristics::IHatModel;
use crate::error::{FieldError, MarchError, TieError};
use crate::grid::{FieldStack, Grid2D, ScalarField2D};
use crate::sparse::{
    preconditioned_conjugate_gradient, CgReport, JacobiPreconditioner, SparseMatrix,
};
use crate::tie::{solve_tie, TieProblem};

const MAX_ITER_FACTOR: usize = 10;

/// Dirichlet data on the lateral boundary Γ_z for every marched level.
pub enum LateralBoundary {
    /// One constant for every slice.
    Constant(f64),
    /// Explicit per-step samples in canonical boundary order; entry `n`
    /// belongs to the level reached by step `n+1`.
    PerSlice(Vec<Vec<f64>>),
    /// Evaluated as h(x, y, z) on boundary nodes.
    Analytic(Box<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for LateralBoundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LateralBoundary::Constant(c) => write!(f, "Constant({c})"),
            LateralBoundary::PerSlice(v) => write!(f, "PerSlice({} slices)", v.len()),
            LateralBoundary::Analytic(_) => write!(f, "Analytic(..)"),
        }
    }
}

impl LateralBoundary {
    pub fn describe(&self) -> String {
        match self {
            LateralBoundary::Constant(c) => format!("constant:{c}"),
            LateralBoundary::PerSlice(v) => format!("per-slice:{}", v.len()),
            LateralBoundary::Analytic(_) => "analytic".into(),
        }
    }

    /// Boundary values at march step `step` (1-based), level `z`.
    fn resolve(&self, grid: &Grid2D, step: usize, z: f64) -> Result<Vec<f64>, MarchError> {
        let nodes = grid.boundary_nodes();
        let values = match self {
            LateralBoundary::Constant(c) => vec![*c; nodes.len()],
            LateralBoundary::PerSlice(slices) => {
                let row = slices.get(step - 1).ok_or_else(|| {
                    MarchError::InvalidSetup(format!(
                        "lateral boundary has {} slices, step {step} requested",
                        slices.len()
                    ))
                })?;
                if row.len() != nodes.len() {
                    return Err(MarchError::InvalidSetup(format!(
                        "lateral boundary slice {} has {} values, boundary has {} nodes",
                        step - 1,
                        row.len(),
                        nodes.len()
                    )));
                }
                row.clone()
            }
            LateralBoundary::Analytic(f) => nodes
                .iter()
                .map(|&(i, j)| f(grid.x(i), grid.y(j), z))
                .collect(),
        };
        if values.iter().any(|v| !v.is_finite()) {
            return Err(MarchError::InvalidSetup(format!(
                "non-finite lateral boundary value at step {step}"
            )));
        }
        Ok(values)
    }
}

/// Everything a march needs besides the initial slice.
#[derive(Debug)]
pub struct ViscositySettings {
    pub ihat: IHatModel,
    pub k: f64,
    pub epsilon: f64,
    pub dz: f64,
    pub h: LateralBoundary,
    /// Relative CG tolerance per implicit step.
    pub solver_tol: f64,
}

impl ViscositySettings {
    pub fn new(
        ihat: IHatModel,
        k: f64,
        epsilon: f64,
        dz: f64,
        h: LateralBoundary,
    ) -> Result<Self, MarchError> {
        if !(k > 0.0) || !(epsilon > 0.0) || !(dz > 0.0) {
            return Err(MarchError::InvalidSetup(format!(
                "need k, epsilon, dz > 0; got {k}, {epsilon}, {dz}"
            )));
        }
        // Tight enough that a constant profile survives a full march to
        // 1e-12 after the log transform.
        Ok(Self {
            ihat,
            k,
            epsilon,
            dz,
            h,
            solver_tol: 1e-12,
        })
    }
}

/// A viscosity problem: settings plus the initial phase slice g on Ω₀.
#[derive(Debug)]
pub struct ViscosityProblem {
    pub settings: ViscositySettings,
    pub g: ScalarField2D,
}

impl ViscosityProblem {
    pub fn new(settings: ViscositySettings, g: ScalarField2D) -> Self {
        Self { settings, g }
    }
}

/// March state between implicit steps.
#[derive(Debug, Clone)]
pub struct MarchState {
    pub z: f64,
    pub psi: ScalarField2D,
    pub gauge: f64,
}

/// Forward log transform with gauge shift: `ψ = exp((φ − mean φ)/ε)`.
///
/// Returns the gauge so the inverse is exact: `φ = ε log ψ + gauge`.
pub fn cole_hopf_forward(
    phi: &ScalarField2D,
    epsilon: f64,
) -> Result<(ScalarField2D, f64), MarchError> {
    if !(epsilon > 0.0) {
        return Err(MarchError::InvalidSetup(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let gauge = phi.mean();
    let psi = phi.map(|v| ((v - gauge) / epsilon).exp())?;
    Ok((psi, gauge))
}

/// Inverse log transform `φ = ε log ψ + gauge`; ψ must be positive.
pub fn cole_hopf_inverse(
    psi: &ScalarField2D,
    epsilon: f64,
    gauge: f64,
) -> Result<ScalarField2D, MarchError> {
    if !(epsilon > 0.0) {
        return Err(MarchError::InvalidSetup(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let min = psi.min();
    if !(min > 0.0) {
        return Err(MarchError::NonPositivePsi(format!(
            "min value {min:e} while inverting the log transform"
        )));
    }
    Ok(psi.map(|v| epsilon * v.ln() + gauge)?)
}

/// Output of a march: φ slices (starting at the initial one) plus per-step
/// solver reports.
#[derive(Debug)]
pub struct MarchOutput {
    pub phi: FieldStack,
    pub reports: Vec<CgReport>,
}

/// Backward-Euler march of the transformed equation from the g slice to
/// `z_end`, returning φ slices every `dz`.
///
/// Each step solves `[(2k/dz)M + εL + diag(Î(·, zⁿ⁺¹)/ε)] ψⁿ⁺¹ = (2k/dz)ψⁿ`
/// with lateral Dirichlet values `exp((h − gauge)/ε)`; L is the SPD
/// five-point Laplacian with boundary columns eliminated into the rhs. The
/// reaction term can push diagonal entries negative for large |Î|/ε; that
/// aborts the step explicitly instead of corrupting the solve.
pub fn viscosity_march(problem: &ViscosityProblem, z_end: f64) -> Result<MarchOutput, MarchError> {
    let s = &problem.settings;
    let grid = *problem.g.grid();
    let z0 = problem.g.z();
    if !(z_end > z0) {
        return Err(MarchError::InvalidSetup(format!(
            "z_end {z_end} must exceed the initial slice height {z0}"
        )));
    }
    let span = z_end - z0;
    let steps_f = span / s.dz;
    let steps = steps_f.round() as usize;
    if steps == 0 || (steps_f - steps as f64).abs() > 1e-12 * steps_f.max(1.0) {
        return Err(MarchError::InvalidSetup(format!(
            "z_end − z0 = {span} is not a multiple of dz = {}",
            s.dz
        )));
    }

    let (psi0, gauge) = cole_hopf_forward(&problem.g, s.epsilon)?;
    let mut state = MarchState {
        z: z0,
        psi: psi0,
        gauge,
    };
    let mut phi_slices = vec![problem.g.clone()];
    let mut reports = Vec::with_capacity(steps);

    let (hx2, hy2) = (grid.hx() * grid.hx(), grid.hy() * grid.hy());
    let interior: Vec<(usize, usize)> = grid.interior_nodes().collect();
    let mut index_of = vec![usize::MAX; grid.len()];
    for (row, &(i, j)) in interior.iter().enumerate() {
        index_of[grid.node(i, j)] = row;
    }

    for step in 1..=steps {
        let z_next = z0 + s.dz * step as f64;
        let h_values = s.h.resolve(&grid, step, z_next)?;
        let mut psi_boundary = vec![0.0; grid.len()];
        for (&(i, j), &hv) in grid.boundary_nodes().iter().zip(&h_values) {
            psi_boundary[grid.node(i, j)] = ((hv - state.gauge) / s.epsilon).exp();
        }

        let lam = 2.0 * s.k / s.dz;
        let mut triplets = Vec::with_capacity(5 * interior.len());
        let mut b = vec![0.0; interior.len()];
        for (row, &(i, j)) in interior.iter().enumerate() {
            let ih = s.ihat.value(grid.x(i), grid.y(j), z_next)?;
            let diag = lam + s.epsilon * (2.0 / hx2 + 2.0 / hy2) + ih / s.epsilon;
            if !(diag > 0.0) {
                return Err(MarchError::StepRejected {
                    step,
                    detail: format!("diagonal entry {diag:e} at node ({i}, {j}) is not positive"),
                });
            }
            triplets.push((row, row, diag));
            let mut handle = |ii: usize, jj: usize, w: f64, b: &mut [f64]| {
                let m = grid.node(ii, jj);
                if index_of[m] == usize::MAX {
                    b[row] += w * psi_boundary[m];
                } else {
                    triplets.push((row, index_of[m], -w));
                }
            };
            handle(i + 1, j, s.epsilon / hx2, &mut b);
            handle(i - 1, j, s.epsilon / hx2, &mut b);
            handle(i, j + 1, s.epsilon / hy2, &mut b);
            handle(i, j - 1, s.epsilon / hy2, &mut b);
            b[row] += lam * state.psi.at(i, j);
        }
        let a = SparseMatrix::from_triplets(interior.len(), triplets)?;
        let precond = JacobiPreconditioner::new(&a)?;
        let (x, report) = preconditioned_conjugate_gradient(
            &a,
            Some(&precond),
            &b,
            s.solver_tol,
            MAX_ITER_FACTOR * a.n(),
        )?;
        if report.breakdown {
            // The reaction term outweighed (2k/dz): the step operator lost
            // positive definiteness even with a positive diagonal.
            return Err(MarchError::StepRejected {
                step,
                detail: "step operator is not positive definite".into(),
            });
        }
        if !report.converged {
            return Err(MarchError::NotConverged { step, report });
        }
        reports.push(report);

        let mut values = psi_boundary;
        for (row, &(i, j)) in interior.iter().enumerate() {
            values[grid.node(i, j)] = x[row];
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        if !(min > 0.0) {
            return Err(MarchError::StepRejected {
                step,
                detail: format!("psi reached {min:e} after the implicit solve"),
            });
        }
        state = MarchState {
            z: z_next,
            psi: ScalarField2D::new(grid, z_next, values)?,
            gauge: state.gauge,
        };
        phi_slices.push(cole_hopf_inverse(&state.psi, s.epsilon, state.gauge)?);
    }

    Ok(MarchOutput {
        phi: FieldStack::new(phi_slices)?,
        reports,
    })
}

/// Case-2 pipeline: recover the initial slice with a TIE solve, then march
/// the phase equation upward from it.
///
/// The returned stack includes the TIE slice at its own height.
pub fn hybrid_pipeline(
    tie_problem: &TieProblem,
    settings: ViscositySettings,
    tie_tol: f64,
    z_end: f64,
) -> Result<(MarchOutput, CgReport), HybridError> {
    let (g, tie_report) = solve_tie(tie_problem, tie_tol)?;
    let problem = ViscosityProblem::new(settings, g);
    let out = viscosity_march(&problem, z_end)?;
    Ok((out, tie_report))
}

/// Error from either stage of the hybrid pipeline.
#[derive(Debug, thiserror::Error)]
pub enum HybridError {
    #[error("TIE stage failed: {0}")]
    Tie(#[from] TieError),
    #[error("march stage failed: {0}")]
    March(#[from] MarchError),
}

/// Per-slice error norms of a φ stack against a reference stack.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SliceErrorRow {
    pub z: f64,
    pub l2_rel: f64,
    pub linf_rel: f64,
    /// max over nodes of |a − b| / |b| (the pointwise relative error).
    pub max_pointwise_rel: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SliceErrorTable {
    pub rows: Vec<SliceErrorRow>,
}

impl SliceErrorTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("z,l2_rel,linf_rel,max_pointwise_rel\n");
        for r in &self.rows {
            use std::fmt::Write as _;
            writeln!(
                out,
                "{:e},{:e},{:e},{:e}",
                r.z, r.l2_rel, r.linf_rel, r.max_pointwise_rel
            )
            .unwrap();
        }
        out
    }
}

/// Compare two stacks slice by slice.
///
/// Reports both the normalized norms and the maximum pointwise relative
/// error; the latter assumes a reference that does not vanish.
pub fn viscosity_error_report(
    phi: &FieldStack,
    truth: &FieldStack,
) -> Result<SliceErrorTable, FieldError> {
    if phi.len() != truth.len() {
        return Err(FieldError::NonUniformZ(format!(
            "stacks have {} and {} slices",
            phi.len(),
            truth.len()
        )));
    }
    let mut rows = Vec::with_capacity(phi.len());
    for (a, b) in phi.slices().iter().zip(truth.slices()) {
        let norms = field_error_norms(a, b)?;
        let max_pointwise_rel = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(&va, &vb)| (va - vb).abs() / vb.abs().max(f64::MIN_POSITIVE))
            .fold(0.0f64, f64::max);
        rows.push(SliceErrorRow {
            z: a.z(),
            l2_rel: norms.l2_rel,
            linf_rel: norms.linf_rel,
            max_pointwise_rel,
        });
    }
    Ok(SliceErrorTable { rows })
}

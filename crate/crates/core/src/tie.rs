//! Transport-of-intensity solves on a single slice.
//!
//! Reconstructs φ from `∇·(I∇φ) = k I_z` on Ω₀ with Dirichlet data on the
//! boundary Γ₀, either by the direct divergence-form discretization or by
//! the two-Poisson variant. The assembled operator is `−∇·(I∇·)` so the
//! reduced interior system is symmetric positive definite and solvable
//! with conjugate gradients.

use crate::calculus::fd_divergence_of_flux;
use crate::error::{FieldError, TieError};
use crate::grid::{Grid2D, ScalarField2D};
use crate::sparse::{
    preconditioned_conjugate_gradient, CgReport, JacobiPreconditioner, SparseMatrix,
};

/// Default iteration cap: 10·n as a multiple of the unknown count.
const MAX_ITER_FACTOR: usize = 10;

/// Catalog of boundary conditions used in the experiments.
#[derive(Debug, Clone, PartialEq)]
pub enum BcKind {
    /// φ = c on Γ₀ (zero for c = 0).
    Constant(f64),
    /// Boundary trace of a supplied ground-truth phase field.
    GroundTruth,
    /// φ = ⌊10x⌋ on Γ₀.
    FloorTenX,
    /// φ = a·sin(2πx) on Γ₀.
    SinTwoPiX { amplitude: f64 },
    /// φ = exp(−‖x‖²) on Γ₀.
    GaussianBump,
    /// Values sampled from an arbitrary field on the boundary.
    Sampled,
}

impl BcKind {
    /// Human-readable descriptor used in run manifests.
    pub fn describe(&self) -> String {
        match self {
            BcKind::Constant(c) => format!("constant:{c}"),
            BcKind::GroundTruth => "ground-truth".into(),
            BcKind::FloorTenX => "floor10x".into(),
            BcKind::SinTwoPiX { amplitude } => format!("sin2pix:{amplitude}"),
            BcKind::GaussianBump => "gaussian-bump".into(),
            BcKind::Sampled => "sampled".into(),
        }
    }
}

/// Dirichlet data resolved on every boundary node of a grid.
///
/// Values follow the canonical boundary order of [`Grid2D::boundary_nodes`].
#[derive(Debug, Clone)]
pub struct DirichletBC {
    kind: BcKind,
    values: Vec<f64>,
}

impl DirichletBC {
    fn resolve(grid: &Grid2D, kind: BcKind, f: impl Fn(f64, f64) -> f64) -> Result<Self, TieError> {
        let values: Vec<f64> = grid
            .boundary_nodes()
            .iter()
            .map(|&(i, j)| f(grid.x(i), grid.y(j)))
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(TieError::Field(FieldError::InvalidField(
                "non-finite boundary value".into(),
            )));
        }
        Ok(Self { kind, values })
    }

    pub fn constant(grid: &Grid2D, c: f64) -> Result<Self, TieError> {
        Self::resolve(grid, BcKind::Constant(c), |_, _| c)
    }

    pub fn zero(grid: &Grid2D) -> Result<Self, TieError> {
        Self::constant(grid, 0.0)
    }

    pub fn floor_ten_x(grid: &Grid2D) -> Result<Self, TieError> {
        Self::resolve(grid, BcKind::FloorTenX, |x, _| (10.0 * x).floor())
    }

    pub fn sin_two_pi_x(grid: &Grid2D, amplitude: f64) -> Result<Self, TieError> {
        Self::resolve(grid, BcKind::SinTwoPiX { amplitude }, |x, _| {
            amplitude * (2.0 * std::f64::consts::PI * x).sin()
        })
    }

    pub fn gaussian_bump(grid: &Grid2D) -> Result<Self, TieError> {
        Self::resolve(grid, BcKind::GaussianBump, |x, y| (-(x * x + y * y)).exp())
    }

    /// Boundary trace of a ground-truth phase field.
    pub fn ground_truth(truth: &ScalarField2D) -> Result<Self, TieError> {
        let grid = truth.grid();
        Self::resolve(grid, BcKind::GroundTruth, |_, _| 0.0).map(|mut bc| {
            bc.values = grid
                .boundary_nodes()
                .iter()
                .map(|&(i, j)| truth.at(i, j))
                .collect();
            bc
        })
    }

    /// Boundary trace of an arbitrary sampled field.
    pub fn sampled(field: &ScalarField2D) -> Result<Self, TieError> {
        let mut bc = Self::ground_truth(field)?;
        bc.kind = BcKind::Sampled;
        Ok(bc)
    }

    pub fn kind(&self) -> &BcKind {
        &self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn check_len(&self, grid: &Grid2D) -> Result<(), TieError> {
        let need = grid.boundary_nodes().len();
        if self.values.len() != need {
            return Err(TieError::BoundaryLengthMismatch {
                got: self.values.len(),
                need,
            });
        }
        Ok(())
    }

    /// Scatter the boundary values into a full-grid array.
    fn scatter(&self, grid: &Grid2D, out: &mut [f64]) {
        for (&(i, j), &v) in grid.boundary_nodes().iter().zip(&self.values) {
            out[grid.node(i, j)] = v;
        }
    }

    /// Shift every boundary value by a constant (gauge experiments).
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            kind: BcKind::Sampled,
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }
}

/// One TIE reconstruction problem on a slice.
#[derive(Debug, Clone)]
pub struct TieProblem {
    pub intensity: ScalarField2D,
    pub rhs_iz: ScalarField2D,
    pub k: f64,
    pub bc: DirichletBC,
}

impl TieProblem {
    pub fn new(
        intensity: ScalarField2D,
        rhs_iz: ScalarField2D,
        k: f64,
        bc: DirichletBC,
    ) -> Result<Self, TieError> {
        if !intensity.same_grid(&rhs_iz) {
            return Err(TieError::Field(FieldError::GridMismatch));
        }
        if !intensity.is_strictly_positive() {
            return Err(TieError::Field(FieldError::NonPositiveIntensity));
        }
        if !(k > 0.0) {
            return Err(TieError::NonPositiveWavenumber(k));
        }
        bc.check_len(intensity.grid())?;
        Ok(Self {
            intensity,
            rhs_iz,
            k,
            bc,
        })
    }

    pub fn grid(&self) -> &Grid2D {
        self.intensity.grid()
    }
}

/// Interior-unknown index map for Dirichlet elimination.
struct InteriorMap {
    grid: Grid2D,
    index_of: Vec<isize>,
    nodes: Vec<(usize, usize)>,
}

impl InteriorMap {
    fn new(grid: &Grid2D) -> Self {
        let mut index_of = vec![-1isize; grid.len()];
        let mut nodes = Vec::with_capacity((grid.nx() - 2) * (grid.ny() - 2));
        for (i, j) in grid.interior_nodes() {
            index_of[grid.node(i, j)] = nodes.len() as isize;
            nodes.push((i, j));
        }
        Self {
            grid: *grid,
            index_of,
            nodes,
        }
    }

    fn unknowns(&self) -> usize {
        self.nodes.len()
    }

    fn index(&self, i: usize, j: usize) -> Option<usize> {
        let v = self.index_of[self.grid.node(i, j)];
        (v >= 0).then_some(v as usize)
    }
}

/// Assemble the flux-form operator `−∇·(I∇·)` over interior unknowns.
///
/// Interface coefficients are arithmetic means of nodal intensity. Boundary
/// couplings are eliminated into the right-hand side `b = −k·I_z + bc terms`,
/// keeping the reduced system symmetric positive definite.
pub fn assemble_tie(problem: &TieProblem) -> Result<(SparseMatrix, Vec<f64>), TieError> {
    let grid = problem.grid();
    let map = InteriorMap::new(grid);
    let (hx2, hy2) = (grid.hx() * grid.hx(), grid.hy() * grid.hy());

    let mut bc_full = vec![0.0; grid.len()];
    problem.bc.scatter(grid, &mut bc_full);

    let mut triplets = Vec::with_capacity(5 * map.unknowns());
    let mut b = vec![0.0; map.unknowns()];
    for (row, &(i, j)) in map.nodes.iter().enumerate() {
        let ic = problem.intensity.at(i, j);
        let mut diag = 0.0;
        let mut couple = |ii: usize,
                          jj: usize,
                          h2: f64,
                          triplets: &mut Vec<(usize, usize, f64)>,
                          b: &mut [f64]| {
            let w = 0.5 * (ic + problem.intensity.at(ii, jj)) / h2;
            diag += w;
            match map.index(ii, jj) {
                Some(col) => triplets.push((row, col, -w)),
                None => b[row] += w * bc_full[grid.node(ii, jj)],
            }
        };
        couple(i + 1, j, hx2, &mut triplets, &mut b);
        couple(i - 1, j, hx2, &mut triplets, &mut b);
        couple(i, j + 1, hy2, &mut triplets, &mut b);
        couple(i, j - 1, hy2, &mut triplets, &mut b);
        triplets.push((row, row, diag));
        b[row] += -problem.k * problem.rhs_iz.at(i, j);
    }
    let a = SparseMatrix::from_triplets(map.unknowns(), triplets)?;
    Ok((a, b))
}

fn run_cg(a: &SparseMatrix, b: &[f64], tol: f64) -> Result<(Vec<f64>, CgReport), TieError> {
    let precond = JacobiPreconditioner::new(a)?;
    let (x, report) =
        preconditioned_conjugate_gradient(a, Some(&precond), b, tol, MAX_ITER_FACTOR * a.n())?;
    if !report.converged {
        return Err(TieError::NotConverged { report });
    }
    Ok((x, report))
}

fn gather_solution(
    problem_grid: &Grid2D,
    z: f64,
    bc: &DirichletBC,
    map: &InteriorMap,
    x: &[f64],
) -> Result<ScalarField2D, TieError> {
    let mut values = vec![0.0; problem_grid.len()];
    bc.scatter(problem_grid, &mut values);
    for (row, &(i, j)) in map.nodes.iter().enumerate() {
        values[problem_grid.node(i, j)] = x[row];
    }
    ScalarField2D::new(*problem_grid, z, values).map_err(TieError::Field)
}

/// Direct divergence-form solve of the TIE.
pub fn solve_tie(problem: &TieProblem, tol: f64) -> Result<(ScalarField2D, CgReport), TieError> {
    let (a, b) = assemble_tie(problem)?;
    let (x, report) = run_cg(&a, &b, tol)?;
    let map = InteriorMap::new(problem.grid());
    let phi = gather_solution(problem.grid(), problem.intensity.z(), &problem.bc, &map, &x)?;
    Ok((phi, report))
}

/// Two-Poisson (auxiliary potential) solve of the TIE.
///
/// First solves `Δψ = k I_z` with homogeneous Dirichlet ψ, then
/// `Δφ = ∇·(∇ψ / I)` with the user's boundary data. The auxiliary boundary
/// condition is not specified by the method itself; the homogeneous choice
/// keeps that problem well-posed and is a documented source of discrepancy
/// versus the direct route when I varies.
pub fn solve_tie_teague(
    problem: &TieProblem,
    tol: f64,
) -> Result<(ScalarField2D, CgReport, CgReport), TieError> {
    let grid = problem.grid();
    let unit = ScalarField2D::constant(*grid, problem.intensity.z(), 1.0)?;

    // Stage 1: Δψ = k I_z, ψ|Γ = 0.
    let aux_problem = TieProblem::new(
        unit.clone(),
        problem.rhs_iz.clone(),
        problem.k,
        DirichletBC::zero(grid)?,
    )?;
    let (psi, report_psi) = solve_tie(&aux_problem, tol)?;

    // Stage 2: Δφ = ∇·((1/I)∇ψ) with the user's boundary data. The right
    // hand side reuses the same compact flux stencil with coefficient 1/I.
    let inv_i = problem.intensity.map(|v| 1.0 / v)?;
    let rhs2 = fd_divergence_of_flux(&inv_i, &psi)?;
    let phi_problem = TieProblem::new(unit, rhs2, 1.0, problem.bc.clone())?;
    let (phi, report_phi) = solve_tie(&phi_problem, tol)?;
    Ok((phi, report_psi, report_phi))
}

/// Discrete TIE residual `∇·(I∇φ) − k I_z` at interior nodes.
pub fn tie_residual(phi: &ScalarField2D, problem: &TieProblem) -> Result<ScalarField2D, TieError> {
    if !phi.same_grid(&problem.intensity) {
        return Err(TieError::Field(FieldError::GridMismatch));
    }
    let div = fd_divergence_of_flux(&problem.intensity, phi)?;
    let grid = problem.grid();
    let mut out = vec![0.0; grid.len()];
    for (i, j) in grid.interior_nodes() {
        out[grid.node(i, j)] = div.at(i, j) - problem.k * problem.rhs_iz.at(i, j);
    }
    Ok(ScalarField2D::new(*grid, phi.z(), out)?)
}

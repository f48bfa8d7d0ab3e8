//! Subcommand implementations and shared resolution helpers.

pub mod beam;
pub mod hybrid;
pub mod report;
pub mod tie;
pub mod tpe_char;
pub mod tpe_visc;

use std::f64::consts::PI;
use std::path::PathBuf;

use clap::Args;

use phaselab::beams::{Beam, GaussianBeamParams, PlaneWaveParams};
use phaselab::characteristics::IHatModel;
use phaselab::grid::{FieldStack, Grid2D, ScalarField2D};
use phaselab::interp::StackInterpolant;
use phaselab::tie::DirichletBC;

use crate::config::{
    parse_domain, parse_pair, resolve, resolve_opt, resolve_path, KvFile, ResolvedConfig,
};
use crate::{AppError, CommonOpts, Context};

pub const THREE_HALF_PI: f64 = 1.5 * PI;

/// Resolve the shared flags: output directory (stored on the context),
/// grid, and solver tolerance.
pub fn resolve_common(
    common: &CommonOpts,
    file: &KvFile,
    rc: &mut ResolvedConfig,
    ctx: &mut Context,
) -> Result<(Grid2D, f64), AppError> {
    let out = resolve_path(
        rc,
        "out",
        common.out.clone(),
        file,
        PathBuf::from("phaselab-out"),
    )?;
    ctx.out = Some(out);
    let n = resolve(rc, "grid", common.grid, file, 129usize)?;
    let domain_raw = resolve(
        rc,
        "domain",
        common.domain.clone(),
        file,
        "0,1,0,1".to_string(),
    )?;
    let d = parse_domain(&domain_raw)?;
    let grid = Grid2D::new(n, n, d[0], d[1], d[2], d[3])
        .map_err(|e| AppError::InvalidConfig(e.to_string()))?;
    let tol = resolve(rc, "tol", common.tol, file, 1e-10)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(AppError::InvalidConfig(format!(
            "tol must be positive, got {tol}"
        )));
    }
    Ok((grid, tol))
}

/// Beam-selector flags shared by beam, tie, and hybrid.
#[derive(Args, Debug)]
pub struct BeamOpts {
    /// Beam model: plane-wave | gaussian
    #[arg(long)]
    pub model: Option<String>,
    /// Plane-wave spatial frequency as two numbers, e.g. 1,1
    #[arg(long)]
    pub xi: Option<String>,
    /// Wavenumber (default 1)
    #[arg(long)]
    pub k: Option<f64>,
    /// Rayleigh range of the gaussian beam (default 1)
    #[arg(long)]
    pub zr: Option<f64>,
    /// Amplitude scale of the gaussian beam (default 1)
    #[arg(long)]
    pub i0: Option<f64>,
}

/// Resolve a beam model; errors when `required` and nothing was selected.
pub fn resolve_beam(
    opts: &BeamOpts,
    file: &KvFile,
    rc: &mut ResolvedConfig,
    required: bool,
) -> Result<Option<Beam>, AppError> {
    let model = resolve_opt(rc, "model", opts.model.clone(), file)?;
    let Some(model) = model else {
        if required {
            return Err(AppError::InvalidConfig(
                "no beam selected: pass --model plane-wave|gaussian".into(),
            ));
        }
        return Ok(None);
    };
    let k = resolve(rc, "k", opts.k, file, 1.0)?;
    match model.as_str() {
        "plane-wave" => {
            let xi_raw = resolve(rc, "xi", opts.xi.clone(), file, "1,1".to_string())?;
            let xi = parse_pair(&xi_raw, "xi")?;
            let p =
                PlaneWaveParams::new(xi, k).map_err(|e| AppError::InvalidConfig(e.to_string()))?;
            Ok(Some(Beam::PlaneWave(p)))
        }
        "gaussian" => {
            let zr = resolve(rc, "zr", opts.zr, file, 1.0)?;
            let i0 = resolve(rc, "i0", opts.i0, file, 1.0)?;
            let p = GaussianBeamParams::new(zr, k, i0)
                .map_err(|e| AppError::InvalidConfig(e.to_string()))?;
            Ok(Some(Beam::Gaussian(p)))
        }
        other => Err(AppError::InvalidConfig(format!(
            "unknown beam model '{other}' (expected plane-wave or gaussian)"
        ))),
    }
}

/// Parse a boundary-condition selector:
/// `zero | ground-truth | const:C | floor10x | sin10 | sin:A | gauss | file:PATH`.
pub fn parse_bc(
    spec: &str,
    grid: &Grid2D,
    truth: Option<&ScalarField2D>,
) -> Result<DirichletBC, AppError> {
    let to_app = |e: phaselab::TieError| AppError::InvalidConfig(e.to_string());
    match spec {
        "zero" => DirichletBC::zero(grid).map_err(to_app),
        "ground-truth" | "gt" => {
            let truth = truth.ok_or_else(|| {
                AppError::InvalidConfig("bc ground-truth needs a beam source or --phi-truth".into())
            })?;
            DirichletBC::ground_truth(truth).map_err(to_app)
        }
        "floor10x" => DirichletBC::floor_ten_x(grid).map_err(to_app),
        "sin10" => DirichletBC::sin_two_pi_x(grid, 10.0).map_err(to_app),
        "gauss" => DirichletBC::gaussian_bump(grid).map_err(to_app),
        other => {
            if let Some(raw) = other.strip_prefix("const:") {
                let c: f64 = raw
                    .parse()
                    .map_err(|e| AppError::InvalidConfig(format!("bc const: {e}")))?;
                DirichletBC::constant(grid, c).map_err(to_app)
            } else if let Some(raw) = other.strip_prefix("sin:") {
                let a: f64 = raw
                    .parse()
                    .map_err(|e| AppError::InvalidConfig(format!("bc sin: {e}")))?;
                DirichletBC::sin_two_pi_x(grid, a).map_err(to_app)
            } else if let Some(path) = other.strip_prefix("file:") {
                let field = ScalarField2D::read_fld(path)?;
                if field.grid() != grid {
                    return Err(AppError::InvalidConfig(format!(
                        "bc file {path}: grid does not match the problem grid"
                    )));
                }
                DirichletBC::sampled(&field).map_err(to_app)
            } else {
                Err(AppError::InvalidConfig(format!(
                    "unknown bc '{other}' (zero|ground-truth|const:C|floor10x|sin10|sin:A|gauss|file:PATH)"
                )))
            }
        }
    }
}

/// Parse an Î selector: `zero | gaussian | stack:DIR | istack:DIR`.
///
/// The gaussian variant takes its parameters from `k` and `zr`. `stack:DIR`
/// reads every `.fld` file in name order as Î slices; `istack:DIR` reads
/// `I_z*.fld` intensity slices (as written by `beam --zlist`) and reduces
/// each to Î.
pub fn parse_ihat(spec: &str, k: f64, zr: f64) -> Result<IHatModel, AppError> {
    match spec {
        "zero" => Ok(IHatModel::Zero),
        "gaussian" => {
            let p = GaussianBeamParams::new(zr, k, 1.0)
                .map_err(|e| AppError::InvalidConfig(e.to_string()))?;
            Ok(IHatModel::GaussianBeam(p))
        }
        other => {
            if let Some(dir) = other.strip_prefix("stack:") {
                let stack = FieldStack::read_dir(dir, "")?;
                Ok(IHatModel::Sampled(StackInterpolant::new(&stack)))
            } else if let Some(dir) = other.strip_prefix("istack:") {
                let intensity = FieldStack::read_dir(dir, "I_z")?;
                let slices: Result<Vec<_>, _> = intensity
                    .slices()
                    .iter()
                    .map(phaselab::compute_i_hat)
                    .collect();
                let stack =
                    FieldStack::new(slices.map_err(AppError::from)?).map_err(AppError::from)?;
                Ok(IHatModel::Sampled(StackInterpolant::new(&stack)))
            } else {
                Err(AppError::InvalidConfig(format!(
                    "unknown ihat '{other}' (zero|gaussian|stack:DIR|istack:DIR)"
                )))
            }
        }
    }
}

/// Parse an initial-phase selector for the march: `const:C | file:PATH`.
pub fn parse_phase_slice(spec: &str, grid: &Grid2D, z: f64) -> Result<ScalarField2D, AppError> {
    if let Some(raw) = spec.strip_prefix("const:") {
        let c: f64 = raw
            .parse()
            .map_err(|e| AppError::InvalidConfig(format!("g const: {e}")))?;
        Ok(ScalarField2D::constant(*grid, z, c)
            .map_err(|e| AppError::InvalidConfig(e.to_string()))?)
    } else if let Some(path) = spec.strip_prefix("file:") {
        let field = ScalarField2D::read_fld(path)?;
        if field.grid() != grid {
            return Err(AppError::InvalidConfig(format!(
                "g file {path}: grid does not match the configured grid"
            )));
        }
        Ok(field)
    } else {
        Err(AppError::InvalidConfig(format!(
            "unknown phase slice '{spec}' (const:C|file:PATH)"
        )))
    }
}

/// Write every slice of a stack as `<prefix>NNNN.fld`, recording the names.
pub fn write_stack(ctx: &mut Context, stack: &FieldStack, prefix: &str) -> Result<(), AppError> {
    let dir = ctx
        .out
        .clone()
        .ok_or_else(|| AppError::InvalidConfig("output directory not resolved".into()))?;
    let names = stack.write_dir(&dir, prefix)?;
    for name in names {
        ctx.manifest.add_file(name);
    }
    Ok(())
}

/// Truth φ stack for a beam on the same z levels as `stack`.
pub fn beam_truth_stack(beam: &Beam, stack: &FieldStack) -> Result<FieldStack, AppError> {
    let grid = *stack.grid();
    let slices: Result<Vec<_>, _> = stack
        .slices()
        .iter()
        .map(|s| {
            let z = s.z();
            ScalarField2D::from_fn(grid, z, |x, y| beam.phase(x, y, z))
        })
        .collect();
    FieldStack::new(slices.map_err(|e| AppError::InvalidConfig(e.to_string()))?)
        .map_err(|e| AppError::InvalidConfig(e.to_string()))
}

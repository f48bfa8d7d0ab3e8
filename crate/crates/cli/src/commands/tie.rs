//! `phaselab tie`: reconstruct a phase slice from intensity data.

use std::path::PathBuf;

use clap::Args;

use phaselab::calculus::field_error_norms;
use phaselab::grid::ScalarField2D;
use phaselab::tie::{solve_tie, solve_tie_teague, TieProblem};

use crate::config::{resolve, resolve_opt_path, KvFile, ResolvedConfig};
use crate::{AppError, CommonOpts, Context};

use super::{parse_bc, resolve_beam, resolve_common, BeamOpts};

#[derive(Args, Debug)]
pub struct TieCmd {
    #[command(flatten)]
    pub common: CommonOpts,
    #[command(flatten)]
    beam: BeamOpts,
    /// Slice height for beam-sourced data (default 0)
    #[arg(long)]
    z: Option<f64>,
    /// Intensity field file (instead of a beam model)
    #[arg(long, value_name = "FILE")]
    intensity: Option<PathBuf>,
    /// Axial intensity derivative field file (required with --intensity)
    #[arg(long, value_name = "FILE")]
    iz: Option<PathBuf>,
    /// Boundary data: zero|ground-truth|const:C|floor10x|sin10|sin:A|gauss|file:PATH
    #[arg(long)]
    bc: Option<String>,
    /// Also run the two-Poisson route and write phi_teague.fld
    #[arg(long)]
    teague: bool,
    /// Compare against ground truth: writes error.fld and norms
    #[arg(long)]
    truth: bool,
    /// Ground-truth phase field file (for file-sourced runs)
    #[arg(long, value_name = "FILE")]
    phi_truth: Option<PathBuf>,
}

impl TieCmd {
    pub fn run(&self, ctx: &mut Context) -> Result<(), AppError> {
        let file = KvFile::load(self.common.config.as_deref())?;
        let mut rc = ResolvedConfig::default();
        let (grid, tol) = resolve_common(&self.common, &file, &mut rc, ctx)?;

        let intensity_path = resolve_opt_path(&mut rc, "intensity", self.intensity.clone(), &file)?;
        let (intensity, rhs_iz, k, truth_phase) = if let Some(path) = intensity_path {
            let iz_path = resolve_opt_path(&mut rc, "iz", self.iz.clone(), &file)?
                .ok_or_else(|| AppError::InvalidConfig("--intensity also needs --iz".into()))?;
            let intensity = ScalarField2D::read_fld(&path)?;
            let rhs_iz = ScalarField2D::read_fld(&iz_path)?;
            let k = resolve(&mut rc, "k", self.beam.k, &file, 1.0)?;
            let truth = match resolve_opt_path(&mut rc, "phi-truth", self.phi_truth.clone(), &file)?
            {
                Some(p) => Some(ScalarField2D::read_fld(p)?),
                None => None,
            };
            (intensity, rhs_iz, k, truth)
        } else {
            let beam = resolve_beam(&self.beam, &file, &mut rc, true)?.expect("required");
            let z = resolve(&mut rc, "z", self.z, &file, 0.0)?;
            if !z.is_finite() {
                return Err(AppError::InvalidConfig(format!(
                    "z must be finite, got {z}"
                )));
            }
            let (intensity, phase) = beam.fields(&grid, z);
            let rhs_iz = beam.intensity_z_field(&grid, z);
            (intensity, rhs_iz, beam.k(), Some(phase))
        };

        let bc_spec = resolve(
            &mut rc,
            "bc",
            self.bc.clone(),
            &file,
            "ground-truth".to_string(),
        )?;
        let bc = parse_bc(&bc_spec, intensity.grid(), truth_phase.as_ref())?;
        let problem = TieProblem::new(intensity, rhs_iz, k, bc)?;

        let (phi, report) = solve_tie(&problem, tol)?;
        ctx.manifest.add_stage("tie-cg", &report);
        ctx.write_field("phi.fld", &phi)?;

        let teague = self.teague || file.get("teague") == Some("true");
        rc.note("teague", teague);
        if teague {
            let (phi_teague, rep_psi, rep_phi) = solve_tie_teague(&problem, tol)?;
            ctx.manifest.add_stage("teague-poisson-psi", &rep_psi);
            ctx.manifest.add_stage("teague-poisson-phi", &rep_phi);
            ctx.write_field("phi_teague.fld", &phi_teague)?;
            let gap = field_error_norms(&phi_teague, &phi)?;
            ctx.manifest.add_norms("teague-vs-direct", &gap);
        }

        let want_truth = self.truth || file.get("truth") == Some("true");
        rc.note("truth", want_truth);
        if want_truth {
            let truth = truth_phase.ok_or_else(|| {
                AppError::InvalidConfig("--truth needs a beam source or --phi-truth".into())
            })?;
            let diff = ScalarField2D::new(
                *phi.grid(),
                phi.z(),
                phi.values()
                    .iter()
                    .zip(truth.values())
                    .map(|(a, b)| a - b)
                    .collect(),
            )
            .map_err(|e| AppError::InvalidConfig(e.to_string()))?;
            ctx.write_field("error.fld", &diff)?;
            let norms = field_error_norms(&phi, &truth)?;
            ctx.manifest.add_norms("reconstruction-error", &norms);
        }

        ctx.manifest.config = rc.values;
        Ok(())
    }
}

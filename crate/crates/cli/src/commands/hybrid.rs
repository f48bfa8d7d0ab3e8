//! `phaselab hybrid`: TIE slice reconstruction followed by a viscosity march.
//!
//! The TIE recovers φ on Ω₀ from boundary data alone; that slice seeds the
//! march, which carries the phase through the volume.

use clap::Args;

use phaselab::beams::Beam;
use phaselab::characteristics::IHatModel;
use phaselab::tie::TieProblem;
use phaselab::viscosity::{
    hybrid_pipeline, viscosity_error_report, LateralBoundary, ViscositySettings,
};

use crate::config::{resolve, KvFile, ResolvedConfig};
use crate::{AppError, CommonOpts, Context};

use super::tpe_visc::record_march;
use super::{
    beam_truth_stack, parse_bc, resolve_beam, resolve_common, write_stack, BeamOpts, THREE_HALF_PI,
};

#[derive(Args, Debug)]
pub struct HybridCmd {
    #[command(flatten)]
    pub common: CommonOpts,
    #[command(flatten)]
    beam: BeamOpts,
    /// TIE boundary data at z = 0 (default ground-truth)
    #[arg(long)]
    bc: Option<String>,
    /// Lateral boundary for the march: const:C | truth (default const:3π/2)
    #[arg(long)]
    h: Option<String>,
    /// Viscosity parameter (default 0.05)
    #[arg(long)]
    eps: Option<f64>,
    /// z step (default 0.01)
    #[arg(long)]
    dz: Option<f64>,
    /// March target (default 1)
    #[arg(long)]
    zend: Option<f64>,
    /// Emit per-slice errors against the beam truth
    #[arg(long)]
    truth: bool,
}

impl HybridCmd {
    pub fn run(&self, ctx: &mut Context) -> Result<(), AppError> {
        let file = KvFile::load(self.common.config.as_deref())?;
        let mut rc = ResolvedConfig::default();
        let (grid, tol) = resolve_common(&self.common, &file, &mut rc, ctx)?;
        let beam = resolve_beam(&self.beam, &file, &mut rc, true)?.expect("required");

        // TIE stage at z = 0 with analytic axial derivative data.
        let (intensity, truth_phase) = beam.fields(&grid, 0.0);
        let rhs_iz = beam.intensity_z_field(&grid, 0.0);
        let bc_spec = resolve(
            &mut rc,
            "bc",
            self.bc.clone(),
            &file,
            "ground-truth".to_string(),
        )?;
        let bc = parse_bc(&bc_spec, &grid, Some(&truth_phase))?;
        let tie_problem = TieProblem::new(intensity, rhs_iz, beam.k(), bc)?;

        let eps = resolve(&mut rc, "eps", self.eps, &file, 0.05)?;
        let dz = resolve(&mut rc, "dz", self.dz, &file, 0.01)?;
        let zend = resolve(&mut rc, "zend", self.zend, &file, 1.0)?;
        let h_spec = resolve(
            &mut rc,
            "h",
            self.h.clone(),
            &file,
            format!("const:{THREE_HALF_PI}"),
        )?;
        let h = match h_spec.as_str() {
            "truth" => {
                let b = beam;
                LateralBoundary::Analytic(Box::new(move |x, y, z| b.phase(x, y, z)))
            }
            other => super::tpe_visc::parse_lateral(other)?,
        };
        let ihat = match &beam {
            Beam::PlaneWave(_) => IHatModel::Zero,
            Beam::Gaussian(p) => IHatModel::GaussianBeam(*p),
        };
        let mut settings = ViscositySettings::new(ihat, beam.k(), eps, dz, h)?;
        settings.solver_tol = tol.min(settings.solver_tol);

        let (out, tie_report) = hybrid_pipeline(&tie_problem, settings, tol, zend)?;
        ctx.manifest.add_stage("tie-cg", &tie_report);
        write_stack(ctx, &out.phi, "phi_z")?;
        record_march(ctx, &out);

        let want_truth = self.truth || file.get("truth") == Some("true");
        rc.note("truth", want_truth);
        if want_truth {
            let truth = beam_truth_stack(&beam, &out.phi)?;
            let table = viscosity_error_report(&out.phi, &truth)?;
            ctx.write_text("errors.csv", &table.to_csv())?;
            ctx.manifest.tables.insert(
                "slice_errors".into(),
                serde_json::to_value(&table)
                    .map_err(|e| AppError::Io(format!("serializing slice errors: {e}")))?,
            );
        }

        ctx.manifest.config = rc.values;
        Ok(())
    }
}

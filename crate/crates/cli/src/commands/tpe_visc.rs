//! `phaselab tpe-visc`: march the regularized phase equation in z.

use clap::Args;
use serde_json::json;

use phaselab::beams::{Beam, GaussianBeamParams};
use phaselab::viscosity::{
    viscosity_error_report, viscosity_march, LateralBoundary, MarchOutput, ViscosityProblem,
    ViscositySettings,
};

use crate::config::{resolve, KvFile, ResolvedConfig};
use crate::{AppError, CommonOpts, Context};

use super::{
    beam_truth_stack, parse_ihat, parse_phase_slice, resolve_common, write_stack, THREE_HALF_PI,
};

#[derive(Args, Debug)]
pub struct TpeViscCmd {
    #[command(flatten)]
    pub common: CommonOpts,
    /// Î model: zero | gaussian | stack:DIR (default gaussian)
    #[arg(long)]
    ihat: Option<String>,
    /// Wavenumber (default 1)
    #[arg(long)]
    k: Option<f64>,
    /// Rayleigh range of the gaussian Î (default 1)
    #[arg(long)]
    zr: Option<f64>,
    /// Initial phase slice: const:C | file:PATH (default const:3π/2)
    #[arg(long)]
    g: Option<String>,
    /// Lateral boundary: const:C (default const:3π/2)
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
    /// Emit per-slice errors against the gaussian-beam truth
    #[arg(long)]
    truth: bool,
}

impl TpeViscCmd {
    pub fn run(&self, ctx: &mut Context) -> Result<(), AppError> {
        let file = KvFile::load(self.common.config.as_deref())?;
        let mut rc = ResolvedConfig::default();
        let (grid, tol) = resolve_common(&self.common, &file, &mut rc, ctx)?;

        let k = resolve(&mut rc, "k", self.k, &file, 1.0)?;
        let zr = resolve(&mut rc, "zr", self.zr, &file, 1.0)?;
        let ihat_spec = resolve(
            &mut rc,
            "ihat",
            self.ihat.clone(),
            &file,
            "gaussian".to_string(),
        )?;
        let ihat = parse_ihat(&ihat_spec, k, zr)?;

        let default_c = format!("const:{THREE_HALF_PI}");
        let g_spec = resolve(&mut rc, "g", self.g.clone(), &file, default_c.clone())?;
        let g = parse_phase_slice(&g_spec, &grid, 0.0)?;
        let h_spec = resolve(&mut rc, "h", self.h.clone(), &file, default_c)?;
        let h = parse_lateral(&h_spec)?;

        let eps = resolve(&mut rc, "eps", self.eps, &file, 0.05)?;
        let dz = resolve(&mut rc, "dz", self.dz, &file, 0.01)?;
        let zend = resolve(&mut rc, "zend", self.zend, &file, 1.0)?;

        let mut settings = ViscositySettings::new(ihat, k, eps, dz, h)?;
        settings.solver_tol = tol.min(settings.solver_tol);
        let problem = ViscosityProblem::new(settings, g);
        let out = viscosity_march(&problem, zend)?;
        write_stack(ctx, &out.phi, "phi_z")?;
        record_march(ctx, &out);

        let want_truth = self.truth || file.get("truth") == Some("true");
        rc.note("truth", want_truth);
        if want_truth {
            if ihat_spec != "gaussian" {
                return Err(AppError::InvalidConfig(
                    "--truth needs the gaussian Î model (the truth is the beam phase)".into(),
                ));
            }
            let beam = Beam::Gaussian(
                GaussianBeamParams::new(zr, k, 1.0)
                    .map_err(|e| AppError::InvalidConfig(e.to_string()))?,
            );
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

pub fn parse_lateral(spec: &str) -> Result<LateralBoundary, AppError> {
    if let Some(raw) = spec.strip_prefix("const:") {
        let c: f64 = raw
            .parse()
            .map_err(|e| AppError::InvalidConfig(format!("h const: {e}")))?;
        Ok(LateralBoundary::Constant(c))
    } else {
        Err(AppError::InvalidConfig(format!(
            "unknown h '{spec}' (const:C)"
        )))
    }
}

pub fn record_march(ctx: &mut Context, out: &MarchOutput) {
    let total: usize = out.reports.iter().map(|r| r.iterations).sum();
    let worst = out
        .reports
        .iter()
        .map(|r| r.final_residual_rel)
        .fold(0.0f64, f64::max);
    ctx.manifest.tables.insert(
        "march".into(),
        json!({
            "steps": out.reports.len(),
            "total_cg_iterations": total,
            "worst_residual_rel": worst,
            "slices": out.phi.len(),
        }),
    );
}

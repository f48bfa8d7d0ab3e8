//! `phaselab report`: plot-ready CSV exports and error/convergence summaries.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;

use phaselab::beams::GaussianBeamParams;
use phaselab::calculus::{compute_i_hat, field_error_norms, interior_linf_diff};
use phaselab::grid::{Grid2D, ScalarField2D};

use crate::config::{parse_list, resolve, resolve_opt, resolve_opt_path, KvFile, ResolvedConfig};
use crate::{AppError, CommonOpts, Context};

use super::resolve_common;

#[derive(Args, Debug)]
pub struct ReportCmd {
    #[command(flatten)]
    pub common: CommonOpts,
    /// Field to export as long-format CSV (x,y,value)
    #[arg(long, value_name = "FILE")]
    field: Option<PathBuf>,
    /// Reference field; writes summary.json with error norms vs --field
    #[arg(long, value_name = "FILE")]
    reference: Option<PathBuf>,
    /// Grid sizes for the gaussian Î convergence table, e.g. 33,65,129
    #[arg(long)]
    ihat_sweep: Option<String>,
    /// Wavenumber for the sweep (default 1)
    #[arg(long)]
    k: Option<f64>,
    /// Rayleigh range for the sweep (default 1)
    #[arg(long)]
    zr: Option<f64>,
}

impl ReportCmd {
    pub fn run(&self, ctx: &mut Context) -> Result<(), AppError> {
        let file = KvFile::load(self.common.config.as_deref())?;
        let mut rc = ResolvedConfig::default();
        let (grid, _) = resolve_common(&self.common, &file, &mut rc, ctx)?;

        let field_path = resolve_opt_path(&mut rc, "field", self.field.clone(), &file)?;
        let reference_path = resolve_opt_path(&mut rc, "reference", self.reference.clone(), &file)?;
        let sweep_raw = resolve_opt(&mut rc, "ihat-sweep", self.ihat_sweep.clone(), &file)?;
        if field_path.is_none() && sweep_raw.is_none() {
            return Err(AppError::InvalidConfig(
                "nothing to report: pass --field and/or --ihat-sweep".into(),
            ));
        }

        if let Some(path) = &field_path {
            let f = ScalarField2D::read_fld(path)?;
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "field".into());
            ctx.write_text(&format!("{stem}.csv"), &long_format_csv(&f))?;

            if let Some(ref_path) = &reference_path {
                let reference = ScalarField2D::read_fld(ref_path)?;
                let norms = field_error_norms(&f, &reference)?;
                ctx.manifest.add_norms("field-vs-reference", &norms);
                let summary = serde_json::to_value(norms)
                    .map_err(|e| AppError::Io(format!("serializing summary: {e}")))?;
                let text = serde_json::to_string_pretty(&summary)
                    .map_err(|e| AppError::Io(format!("serializing summary: {e}")))?;
                ctx.write_text("summary.json", &(text + "\n"))?;
            }
        } else if reference_path.is_some() {
            return Err(AppError::InvalidConfig(
                "--reference needs --field to compare against".into(),
            ));
        }

        if let Some(raw) = sweep_raw {
            let sizes: Vec<usize> = parse_list(&raw, "ihat-sweep")?;
            if sizes.len() < 2 {
                return Err(AppError::InvalidConfig(
                    "ihat-sweep needs at least two grid sizes".into(),
                ));
            }
            let k = resolve(&mut rc, "k", self.k, &file, 1.0)?;
            let zr = resolve(&mut rc, "zr", self.zr, &file, 1.0)?;
            let params = GaussianBeamParams::new(zr, k, 1.0)
                .map_err(|e| AppError::InvalidConfig(e.to_string()))?;
            let mut csv = String::from("n,h,linf_error,ratio\n");
            let mut prev: Option<f64> = None;
            for &n in &sizes {
                let g = Grid2D::new(n, n, grid.x_min(), grid.x_max(), grid.y_min(), grid.y_max())
                    .map_err(|e| AppError::InvalidConfig(e.to_string()))?;
                let intensity = ScalarField2D::from_fn(g, 0.0, |x, y| params.intensity(x, y, 0.0))
                    .map_err(|e| AppError::InvalidConfig(e.to_string()))?;
                let discrete = compute_i_hat(&intensity)?;
                let exact = ScalarField2D::from_fn(g, 0.0, |x, y| params.i_hat(x, y, 0.0))
                    .map_err(|e| AppError::InvalidConfig(e.to_string()))?;
                let err = interior_linf_diff(&discrete, &exact)?;
                match prev {
                    Some(p) => writeln!(csv, "{n},{:e},{err:e},{:.4}", g.hx(), p / err).unwrap(),
                    None => writeln!(csv, "{n},{:e},{err:e},", g.hx()).unwrap(),
                }
                prev = Some(err);
            }
            ctx.write_text("convergence.csv", &csv)?;
        }

        ctx.manifest.config = rc.values;
        Ok(())
    }
}

fn long_format_csv(f: &ScalarField2D) -> String {
    let g = f.grid();
    let mut out = String::from("x,y,value\n");
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            writeln!(out, "{:e},{:e},{:e}", g.x(i), g.y(j), f.at(i, j)).unwrap();
        }
    }
    out
}

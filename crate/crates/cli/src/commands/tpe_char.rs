//! `phaselab tpe-char`: trace characteristic curves of the phase equation.

use clap::Args;
use serde_json::json;

use phaselab::characteristics::{
    characteristic_fan, CharDomain, InitialSurfaceData, IntegrationOptions, Termination,
};
use phaselab::grid::ScalarField2D;

use crate::config::{parse_list, resolve, KvFile, ResolvedConfig};
use crate::{AppError, CommonOpts, Context};

use super::{parse_ihat, resolve_common};

#[derive(Args, Debug)]
pub struct TpeCharCmd {
    #[command(flatten)]
    pub common: CommonOpts,
    /// Î model: zero | gaussian | stack:DIR (default zero)
    #[arg(long)]
    ihat: Option<String>,
    /// Wavenumber (default 1)
    #[arg(long)]
    k: Option<f64>,
    /// Rayleigh range of the gaussian Î (default 1)
    #[arg(long)]
    zr: Option<f64>,
    /// Initial surface: affine:A,B,C | const:C | file:PATH (default affine:1,1,0)
    #[arg(long)]
    g: Option<String>,
    /// Seeds per side of the interior lattice (default 5)
    #[arg(long)]
    seeds: Option<usize>,
    /// RK4 parameter step (default 1e-3)
    #[arg(long)]
    dtau: Option<f64>,
    /// Trace depth in z; tau_end = zend / (2k) (default 1)
    #[arg(long)]
    zend: Option<f64>,
}

impl TpeCharCmd {
    pub fn run(&self, ctx: &mut Context) -> Result<(), AppError> {
        let file = KvFile::load(self.common.config.as_deref())?;
        let mut rc = ResolvedConfig::default();
        let (grid, _) = resolve_common(&self.common, &file, &mut rc, ctx)?;

        let k = resolve(&mut rc, "k", self.k, &file, 1.0)?;
        let zr = resolve(&mut rc, "zr", self.zr, &file, 1.0)?;
        let ihat_spec = resolve(
            &mut rc,
            "ihat",
            self.ihat.clone(),
            &file,
            "zero".to_string(),
        )?;
        let ihat = parse_ihat(&ihat_spec, k, zr)?;

        let g_spec = resolve(
            &mut rc,
            "g",
            self.g.clone(),
            &file,
            "affine:1,1,0".to_string(),
        )?;
        let data = parse_surface(&g_spec, &grid, k)?;

        let seeds_n = resolve(&mut rc, "seeds", self.seeds, &file, 5usize)?;
        if seeds_n == 0 {
            return Err(AppError::InvalidConfig(
                "empty seed list (--seeds 0)".into(),
            ));
        }
        let dtau = resolve(&mut rc, "dtau", self.dtau, &file, 1e-3)?;
        let zend = resolve(&mut rc, "zend", self.zend, &file, 1.0)?;
        let tau_end = zend / (2.0 * k);

        let seeds: Vec<(f64, f64)> = (0..seeds_n)
            .flat_map(|i| {
                (0..seeds_n).map(move |j| {
                    let fx = (i + 1) as f64 / (seeds_n + 1) as f64;
                    let fy = (j + 1) as f64 / (seeds_n + 1) as f64;
                    (
                        grid.x_min() + fx * (grid.x_max() - grid.x_min()),
                        grid.y_min() + fy * (grid.y_max() - grid.y_min()),
                    )
                })
            })
            .collect();
        let domain = CharDomain {
            x_min: grid.x_min(),
            x_max: grid.x_max(),
            y_min: grid.y_min(),
            y_max: grid.y_max(),
            z_min: 0.0,
            z_max: zend,
        };
        let opts = IntegrationOptions::new(dtau, tau_end, domain)?;
        let fan = characteristic_fan(&seeds, &data, &ihat, &opts)?;

        ctx.write_text("trajectories.csv", &fan.trajectories_csv())?;
        ctx.write_text("samples.csv", &fan.samples_csv())?;

        let seed_rows: Vec<serde_json::Value> = fan
            .runs
            .iter()
            .map(|run| match &run.outcome {
                Ok(t) => json!({
                    "seed": [run.seed.0, run.seed.1],
                    "points": t.points.len(),
                    "termination": format!("{:?}", t.termination),
                }),
                Err(e) => json!({
                    "seed": [run.seed.0, run.seed.1],
                    "error": e.to_string(),
                }),
            })
            .collect();
        ctx.manifest
            .tables
            .insert("seeds".into(), serde_json::Value::Array(seed_rows));
        let completed = fan
            .runs
            .iter()
            .filter(|r| {
                matches!(
                    &r.outcome,
                    Ok(t) if t.termination == Termination::Completed
                )
            })
            .count();
        ctx.manifest.tables.insert(
            "fan".into(),
            json!({
                "seeds": seeds.len(),
                "succeeded": fan.succeeded(),
                "completed": completed,
                "samples": fan.phase_samples().len(),
            }),
        );
        ctx.manifest.config = rc.values;
        if fan.succeeded() == 0 {
            return Err(AppError::Solver("no characteristic trace succeeded".into()));
        }
        Ok(())
    }
}

fn parse_surface(
    spec: &str,
    grid: &phaselab::Grid2D,
    k: f64,
) -> Result<InitialSurfaceData, AppError> {
    let to_app = |e: phaselab::TpeError| AppError::InvalidConfig(e.to_string());
    if let Some(raw) = spec.strip_prefix("affine:") {
        let coeffs: Vec<f64> = parse_list(raw, "g affine")?;
        if coeffs.len() != 3 {
            return Err(AppError::InvalidConfig(
                "g affine needs three coefficients a,b,c".into(),
            ));
        }
        InitialSurfaceData::affine(coeffs[0], coeffs[1], coeffs[2], k).map_err(to_app)
    } else if let Some(raw) = spec.strip_prefix("const:") {
        let c: f64 = raw
            .parse()
            .map_err(|e| AppError::InvalidConfig(format!("g const: {e}")))?;
        InitialSurfaceData::constant(c, k).map_err(to_app)
    } else if let Some(path) = spec.strip_prefix("file:") {
        let field = ScalarField2D::read_fld(path)?;
        if field.grid() != grid {
            return Err(AppError::InvalidConfig(format!(
                "g file {path}: grid does not match the configured grid"
            )));
        }
        InitialSurfaceData::from_field(&field, k).map_err(to_app)
    } else {
        Err(AppError::InvalidConfig(format!(
            "unknown g '{spec}' (affine:A,B,C|const:C|file:PATH)"
        )))
    }
}

//! `phaselab beam`: sample analytic ground-truth fields.

use clap::Args;

use phaselab::beams::beam_stack;

use crate::config::{parse_list, resolve, resolve_opt, KvFile, ResolvedConfig};
use crate::{AppError, CommonOpts, Context};

use super::{resolve_beam, resolve_common, write_stack, BeamOpts};

#[derive(Args, Debug)]
pub struct BeamCmd {
    #[command(flatten)]
    pub common: CommonOpts,
    #[command(flatten)]
    beam: BeamOpts,
    /// Slice height (default 0)
    #[arg(long)]
    z: Option<f64>,
    /// Uniform z list for stacks, e.g. 0,0.1,0.2
    #[arg(long)]
    zlist: Option<String>,
}

impl BeamCmd {
    pub fn run(&self, ctx: &mut Context) -> Result<(), AppError> {
        let file = KvFile::load(self.common.config.as_deref())?;
        let mut rc = ResolvedConfig::default();
        let (grid, _) = resolve_common(&self.common, &file, &mut rc, ctx)?;
        let beam = resolve_beam(&self.beam, &file, &mut rc, true)?.expect("required");
        let zlist = resolve_opt(&mut rc, "zlist", self.zlist.clone(), &file)?;

        if let Some(raw) = zlist {
            let zs: Vec<f64> = parse_list(&raw, "zlist")?;
            let (intensity, phase) = beam_stack(&beam, &grid, &zs)?;
            write_stack(ctx, &intensity, "I_z")?;
            write_stack(ctx, &phase, "phi_z")?;
        } else {
            let z = resolve(&mut rc, "z", self.z, &file, 0.0)?;
            if !z.is_finite() {
                return Err(AppError::InvalidConfig(format!(
                    "z must be finite, got {z}"
                )));
            }
            let (intensity, phase) = beam.fields(&grid, z);
            ctx.write_field("I.fld", &intensity)?;
            ctx.write_field("phi.fld", &phase)?;
        }
        ctx.manifest.config = rc.values;
        Ok(())
    }
}

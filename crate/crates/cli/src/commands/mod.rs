//! Subcommand implementations.
//!
//! Each command is a pure function from a prepared [`RunContext`] to a list
//! of output [`Document`]s; the binary writes them afterwards. Keeping the
//! computation free of I/O separates numerical failures from filesystem
//! failures, which carry different exit codes.

pub mod coherent;
pub mod spectrum;
pub mod symmetry;
pub mod transform;

use crate::config::{OutputFormat, ResolvedConfig};
use anyhow::{bail, Result};
use pdm_core::grid::Grid;
use pdm_core::profile::{classify_profile, MassProfile, SuperpotentialFamily};
use serde_json::{json, Map, Value};

/// Everything a command needs, prepared once after configuration
/// validation.
pub struct RunContext {
    pub cfg: ResolvedConfig,
    pub grid: Grid,
    pub profile: MassProfile,
    pub family: SuperpotentialFamily,
    pub format: OutputFormat,
}

impl RunContext {
    pub fn new(cfg: ResolvedConfig) -> Result<RunContext> {
        let grid = cfg.grid()?;
        let profile = cfg.mass_profile()?;
        let family = cfg.superpotential()?;
        let format = cfg.output_format()?;
        Ok(RunContext {
            cfg,
            grid,
            profile,
            family,
            format,
        })
    }
}

/// One output file: its name inside the output directory and its content.
pub struct Document {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Document {
    pub fn new(name: impl Into<String>, bytes: Vec<u8>) -> Document {
        Document {
            name: name.into(),
            bytes,
        }
    }
}

/// Admissibility screening shared by every command: a rejected profile
/// (mass with a zero) aborts the run; otherwise the screening record is
/// embedded in the JSON summary.
pub fn screen_profile(ctx: &RunContext) -> Result<Value> {
    let report = classify_profile(&ctx.profile, ctx.grid, ctx.cfg.ordering.n_index);
    if !report.accepted {
        bail!("profile screening failed: {}", report.detail);
    }
    Ok(json!({
        "accepted": report.accepted,
        "u_has_zeros": report.u_has_zeros,
        "alpha_min": report.alpha_min,
        "alpha_max": report.alpha_max,
        "detail": report.detail,
    }))
}

/// Run-level JSON skeleton: command name, the fully resolved configuration
/// (for reproducibility), and the screening record. Commands add their own
/// sections to the returned map.
pub fn summary_skeleton(
    command: &str,
    ctx: &RunContext,
    screening: Value,
) -> Result<Map<String, Value>> {
    let mut map = Map::new();
    map.insert("command".into(), Value::String(command.into()));
    map.insert("config".into(), serde_json::to_value(&ctx.cfg)?);
    map.insert("profile_screening".into(), screening);
    Ok(map)
}

/// A float slice as a JSON array of fixed-precision numbers.
pub fn num_list(values: &[f64]) -> Value {
    Value::Array(values.iter().map(|&v| crate::output::json_num(v)).collect())
}

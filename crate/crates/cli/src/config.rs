//! Run-configuration schema: TOML blocks, defaults, validation, and the
//! resolution step that folds command-line overrides in.
//!
//! The raw schema mirrors the file layout one-to-one; [`resolve`] turns it
//! into a [`ResolvedConfig`] with every default filled in, which is what
//! the commands consume and what gets embedded verbatim in the JSON output
//! for reproducibility.

use anyhow::{anyhow, bail, Context, Result};
use pdm_core::grid::Grid;
use pdm_core::profile::{MassProfile, SuperpotentialFamily};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Mass-profile block as written in the file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileBlock {
    /// One of `constant`, `rational`, `inverse-quadratic`, `tabulated`.
    pub family: String,
    /// Plateau parameter of the `rational` family.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a0: Option<f64>,
    /// Nodal mass values of the `tabulated` family (length must match the
    /// domain node count).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

/// Superpotential block as written in the file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperpotentialBlock {
    /// One of `linear-x`, `linear-mu`, `canonical`, `saturating`,
    /// `tabulated`.
    pub kind: String,
    /// Frequency of the two linear kinds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    /// Nodal values of the `tabulated` kind.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    /// Nodal derivative of the `tabulated` kind.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub derivative: Option<Vec<f64>>,
}

/// Discretization box.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainBlock {
    pub x_min: f64,
    pub x_max: f64,
    /// Node count (odd values keep a node at the box center).
    pub n: usize,
}

/// Ordering-label block.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderingBlock {
    /// Ordering labels to sweep; defaults to `[0.5]`.
    #[serde(default = "default_alphas")]
    pub alpha: Vec<f64>,
    /// Admissibility index: profile screening reports the ordering
    /// interval `[0, 1/n_index]` and label-set membership is tested
    /// against `{0} ∪ {1/k : k <= n_index}`. Defaults to 1.
    #[serde(default = "default_n_index")]
    pub n_index: usize,
    /// Explicit ground-energy offset. When absent the offset is computed
    /// from the assembled reference operator, which is the recommended
    /// (and default) behavior.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_override: Option<f64>,
}

fn default_alphas() -> Vec<f64> {
    vec![0.5]
}

fn default_n_index() -> usize {
    1
}

impl Default for OrderingBlock {
    fn default() -> Self {
        OrderingBlock {
            alpha: default_alphas(),
            n_index: default_n_index(),
            epsilon_override: None,
        }
    }
}

/// Deformation-parameter block.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformBlock {
    /// Deformation parameters to sweep; defaults to `[1.0]`.
    #[serde(default = "default_lambdas")]
    pub lambda: Vec<f64>,
    /// Number of levels solved per spectrum; defaults to 6.
    #[serde(default = "default_levels")]
    pub levels: usize,
}

fn default_lambdas() -> Vec<f64> {
    vec![1.0]
}

fn default_levels() -> usize {
    6
}

impl Default for TransformBlock {
    fn default() -> Self {
        TransformBlock {
            lambda: default_lambdas(),
            levels: default_levels(),
        }
    }
}

/// Displacement-label block. Labels are `[re, im]` pairs and must be
/// purely imaginary.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoherentBlock {
    pub z: Vec<[f64; 2]>,
}

/// Output routing block.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    /// `csv`, `json`, or `both`; defaults to `both`.
    #[serde(default = "default_format")]
    pub format: String,
    /// Output directory; defaults to `out`.
    #[serde(default = "default_path")]
    pub path: String,
}

fn default_format() -> String {
    "both".to_owned()
}

fn default_path() -> String {
    "out".to_owned()
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            format: default_format(),
            path: default_path(),
        }
    }
}

/// The file exactly as parsed; optional blocks stay optional so that a
/// missing required block can be reported by name.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub profile: Option<ProfileBlock>,
    pub superpotential: Option<SuperpotentialBlock>,
    pub domain: Option<DomainBlock>,
    pub ordering: Option<OrderingBlock>,
    pub transform: Option<TransformBlock>,
    pub coherent: Option<CoherentBlock>,
    pub output: Option<OutputBlock>,
}

/// Which file formats a run should emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

impl OutputFormat {
    pub fn wants_csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }

    pub fn wants_json(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }
}

/// A fully validated configuration with every default and command-line
/// override folded in. Serialized verbatim into the JSON output.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub profile: ProfileBlock,
    pub superpotential: SuperpotentialBlock,
    pub domain: DomainBlock,
    pub ordering: OrderingBlock,
    pub transform: TransformBlock,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coherent: Option<CoherentBlock>,
    pub output: OutputBlock,
}

impl ResolvedConfig {
    /// The discretization box of the run.
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.domain.x_min, self.domain.x_max, self.domain.n)
            .context("invalid [domain] block")
    }

    /// The mass profile of the run.
    pub fn mass_profile(&self) -> Result<MassProfile> {
        let block = &self.profile;
        match block.family.as_str() {
            "constant" => Ok(MassProfile::Constant),
            "rational" => {
                let a0 = block
                    .a0
                    .ok_or_else(|| anyhow!("[profile] family \"rational\" requires `a0`"))?;
                Ok(MassProfile::Rational { a0 })
            }
            "inverse-quadratic" => Ok(MassProfile::InverseQuadratic),
            "tabulated" => {
                let values = block.values.clone().ok_or_else(|| {
                    anyhow!("[profile] family \"tabulated\" requires `values`")
                })?;
                if values.len() != self.domain.n {
                    bail!(
                        "[profile] `values` has {} entries but [domain] n = {}",
                        values.len(),
                        self.domain.n
                    );
                }
                Ok(MassProfile::Tabulated { m: values })
            }
            other => bail!(
                "[profile] unknown family {other:?} (expected constant, rational, \
                 inverse-quadratic, or tabulated)"
            ),
        }
    }

    /// The superpotential family of the run.
    pub fn superpotential(&self) -> Result<SuperpotentialFamily> {
        let block = &self.superpotential;
        match block.kind.as_str() {
            "linear-x" => Ok(SuperpotentialFamily::LinearX {
                omega: block.omega.unwrap_or(1.0),
            }),
            "linear-mu" => Ok(SuperpotentialFamily::LinearMu {
                omega: block.omega.unwrap_or(1.0),
            }),
            "canonical" => Ok(SuperpotentialFamily::Canonical),
            "saturating" => Ok(SuperpotentialFamily::Saturating),
            "tabulated" => {
                let values = block.values.clone().ok_or_else(|| {
                    anyhow!("[superpotential] kind \"tabulated\" requires `values`")
                })?;
                let derivative = block.derivative.clone();
                let lengths_ok = values.len() == self.domain.n
                    && derivative.as_ref().is_none_or(|d| d.len() == self.domain.n);
                if !lengths_ok {
                    bail!(
                        "[superpotential] tabulated arrays must have [domain] n = {} \
                         entries",
                        self.domain.n
                    );
                }
                Ok(SuperpotentialFamily::Tabulated { values, derivative })
            }
            other => bail!(
                "[superpotential] unknown kind {other:?} (expected linear-x, linear-mu, \
                 canonical, saturating, or tabulated)"
            ),
        }
    }

    /// Displacement labels as complex numbers (validated imaginary).
    pub fn displacement_labels(&self) -> Result<Vec<num_complex::Complex64>> {
        let block = self
            .coherent
            .as_ref()
            .ok_or_else(|| anyhow!("missing required block [coherent]"))?;
        Ok(block
            .z
            .iter()
            .map(|pair| num_complex::Complex64::new(pair[0], pair[1]))
            .collect())
    }

    /// Parsed output format.
    pub fn output_format(&self) -> Result<OutputFormat> {
        match self.output.format.as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "both" => Ok(OutputFormat::Both),
            other => bail!("[output] unknown format {other:?} (expected csv, json, or both)"),
        }
    }
}

/// Command-line overrides applied during resolution.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out_dir: Option<String>,
    pub grid_n: Option<usize>,
}

/// Reads, validates, and resolves a run configuration.
///
/// Structural errors (unreadable file, malformed syntax, unknown keys)
/// carry the parser's line/column diagnostics; semantic errors name the
/// offending block. `needs_coherent` makes the [coherent] block mandatory
/// for the command that consumes it.
pub fn load(path: &Path, overrides: &Overrides, needs_coherent: bool) -> Result<ResolvedConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    let raw: RawConfig = toml::from_str(&text)
        .with_context(|| format!("cannot parse config file {}", path.display()))?;

    let profile = raw
        .profile
        .ok_or_else(|| anyhow!("missing required block [profile]"))?;
    let superpotential = raw
        .superpotential
        .ok_or_else(|| anyhow!("missing required block [superpotential]"))?;
    let mut domain = raw
        .domain
        .ok_or_else(|| anyhow!("missing required block [domain]"))?;
    if let Some(n) = overrides.grid_n {
        domain.n = n;
    }

    let ordering = raw.ordering.unwrap_or_default();
    if ordering.alpha.is_empty() {
        bail!("[ordering] `alpha` must list at least one label");
    }
    for &alpha in &ordering.alpha {
        if !(0.0..=1.0).contains(&alpha) || !alpha.is_finite() {
            bail!("[ordering] label {alpha} is outside [0, 1]");
        }
    }
    if ordering.n_index == 0 {
        bail!("[ordering] `n_index` must be at least 1");
    }

    let transform = raw.transform.unwrap_or_default();
    if transform.lambda.is_empty() {
        bail!("[transform] `lambda` must list at least one parameter");
    }
    if transform.levels == 0 {
        bail!("[transform] `levels` must be positive");
    }

    let coherent = raw.coherent;
    if let Some(block) = &coherent {
        if block.z.is_empty() {
            bail!("[coherent] `z` must list at least one label");
        }
        for pair in &block.z {
            if pair[0] != 0.0 {
                bail!(
                    "[coherent] label [{}, {}] is not purely imaginary",
                    pair[0],
                    pair[1]
                );
            }
        }
    } else if needs_coherent {
        bail!("missing required block [coherent]");
    }

    let mut output = raw.output.unwrap_or_default();
    if let Some(dir) = &overrides.out_dir {
        output.path = dir.clone();
    }

    let resolved = ResolvedConfig {
        profile,
        superpotential,
        domain,
        ordering,
        transform,
        coherent,
        output,
    };
    // Surface block-level problems at load time rather than mid-run.
    resolved.grid()?;
    resolved.mass_profile()?;
    resolved.superpotential()?;
    resolved.output_format()?;
    Ok(resolved)
}

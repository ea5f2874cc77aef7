//! Run configuration: one JSON document holding the chip profile, geometry
//! constants, search space, scoring setup, and the electromagnetic provider.
//!
//! Units are fixed and spelled out in the field keys (mm, mg, Hz, pF, S,
//! dBi) so configurations cannot be mis-read. Every referenced file must
//! exist when the configuration loads; nothing is deferred to first use.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use fluidtag_core::em::{
    DatasetProvider, EmProvider, Materials, SurrogateCalibration, SurrogateProvider,
    DEFAULT_FREQUENCY_HZ,
};
use fluidtag_core::fitness::{Gates, Normalization, Weights};
use fluidtag_core::geometry::{FixedGeometry, FluidProperties, ParameterSpace};
use fluidtag_core::ic::ICProfile;
use fluidtag_core::optimizer::{GridSpec, NormPolicy};

/// Raw JSON schema of a run configuration.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Working frequency (Hz). Defaults to 925 MHz.
    #[serde(default = "default_frequency")]
    pub frequency_hz: f64,
    /// Self-tuning chip model.
    #[serde(default)]
    pub ic: ICProfile,
    /// Geometry held fixed during searches.
    #[serde(default)]
    pub fixed_geometry: FixedGeometry,
    /// Admissible `{a1, a2, c2}` box.
    #[serde(default)]
    pub parameter_space: ParameterSpace,
    /// Liquid properties.
    #[serde(default)]
    pub fluid: FluidProperties,
    /// Fitness weights.
    #[serde(default)]
    pub weights: Weights,
    /// Acceptance gates.
    #[serde(default)]
    pub gates: Gates,
    /// Material metadata echoed into reports.
    #[serde(default)]
    pub materials: Materials,
    /// Pinned normalizers; when present they override per-round updates.
    #[serde(default)]
    pub normalization: Option<Normalization>,
    /// Electromagnetic response source (exactly one).
    pub provider: ProviderConfig,
    /// Grid-search layout.
    #[serde(default)]
    pub grid: GridConfig,
    /// Default output directory; the `--out` flag overrides it.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_frequency() -> f64 {
    DEFAULT_FREQUENCY_HZ
}

/// Provider selection, externally tagged so exactly one variant can appear.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderConfig {
    /// Analytic surrogate from explicit admittance/gain endpoints.
    Surrogate(SurrogateCalibration),
    /// Analytic surrogate calibrated from observed sensor codes and
    /// realized gains (susceptance endpoints recovered by inverting the
    /// quantizer, conductance assumed matched to the chip).
    SurrogateFromCodes {
        /// Sensor code with the channel empty.
        code_empty: i64,
        /// Sensor code with the channel full.
        code_full: i64,
        /// Realized gain with the channel empty (dBi).
        gain_empty_dbi: f64,
        /// Realized gain with the channel full (dBi).
        gain_full_dbi: f64,
        /// Fill-shape exponent (default 1, linear).
        #[serde(default = "default_shape")]
        shape_exponent: f64,
    },
    /// Tabulated dataset CSV (path relative to the config file).
    Dataset(PathBuf),
}

fn default_shape() -> f64 {
    1.0
}

/// Grid-search section of the configuration.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Samples per `(a1, a2, c2)` axis in round one.
    #[serde(default = "default_round1")]
    pub round1_counts: [usize; 3],
    /// Samples per refined `(a1, a2)` axis in round two.
    #[serde(default = "default_round2")]
    pub round2_counts: [usize; 2],
    /// Fraction of each axis span kept around the incumbent in round two.
    #[serde(default = "default_shrink")]
    pub shrink: f64,
    /// Normalizer update rule when no pinned normalization is configured.
    #[serde(default)]
    pub normalization: GridNormalization,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            round1_counts: default_round1(),
            round2_counts: default_round2(),
            shrink: default_shrink(),
            normalization: GridNormalization::default(),
        }
    }
}

fn default_round1() -> [usize; 3] {
    [5, 5, 4]
}

fn default_round2() -> [usize; 2] {
    [5, 5]
}

fn default_shrink() -> f64 {
    0.5
}

/// Normalizer update rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridNormalization {
    /// Maxima of the current round's grid.
    #[default]
    RoundLocal,
    /// Running maxima across rounds.
    Cumulative,
}

/// A fully validated configuration with its provider constructed.
pub struct LoadedConfig {
    /// The raw configuration.
    pub config: RunConfig,
    /// Constructed electromagnetic provider.
    pub provider: Box<dyn EmProvider>,
    /// Assembled grid spec (parameter space plus grid section).
    pub grid_spec: GridSpec,
    /// Resolved normalization policy.
    pub norm_policy: NormPolicy,
}

/// Load, validate, and assemble a run configuration.
pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let config: RunConfig = serde_json::from_str(&text)
        .with_context(|| format!("cannot parse config {}", path.display()))?;
    validate(&config)?;

    let provider = build_provider(&config, path)?;
    let grid_spec = GridSpec {
        space: config.parameter_space,
        round1_counts: config.grid.round1_counts,
        round2_counts: config.grid.round2_counts,
        shrink: config.grid.shrink,
    };
    grid_spec.validate().context("invalid grid section")?;

    let norm_policy = match (&config.normalization, config.grid.normalization) {
        (Some(pinned), _) => NormPolicy::Pinned(*pinned),
        (None, GridNormalization::RoundLocal) => NormPolicy::RoundLocal,
        (None, GridNormalization::Cumulative) => NormPolicy::Cumulative,
    };

    Ok(LoadedConfig {
        config,
        provider,
        grid_spec,
        norm_policy,
    })
}

fn validate(config: &RunConfig) -> Result<()> {
    if !config.frequency_hz.is_finite() || config.frequency_hz <= 0.0 {
        bail!(
            "frequency_hz must be finite and > 0, got {}",
            config.frequency_hz
        );
    }
    config.ic.validate().context("invalid ic section")?;
    config
        .fixed_geometry
        .validate()
        .context("invalid fixed_geometry section")?;
    config
        .parameter_space
        .validate()
        .context("invalid parameter_space section")?;
    config.fluid.validate().context("invalid fluid section")?;
    config
        .weights
        .validate()
        .context("invalid weights section")?;
    config.gates.validate().context("invalid gates section")?;
    config
        .materials
        .validate()
        .context("invalid materials section")?;
    if let Some(norm) = &config.normalization {
        norm.validate().context("invalid normalization section")?;
    }
    Ok(())
}

fn build_provider(config: &RunConfig, config_path: &Path) -> Result<Box<dyn EmProvider>> {
    match &config.provider {
        ProviderConfig::Surrogate(cal) => Ok(Box::new(
            SurrogateProvider::new(*cal).context("invalid surrogate calibration")?,
        )),
        ProviderConfig::SurrogateFromCodes {
            code_empty,
            code_full,
            gain_empty_dbi,
            gain_full_dbi,
            shape_exponent,
        } => {
            let mut cal = SurrogateCalibration::from_codes(
                &config.ic,
                config.frequency_hz,
                *code_empty,
                *code_full,
                *gain_empty_dbi,
                *gain_full_dbi,
            )
            .context("invalid surrogate_from_codes calibration")?;
            cal.shape_exponent = *shape_exponent;
            Ok(Box::new(
                SurrogateProvider::new(cal).context("invalid surrogate_from_codes calibration")?,
            ))
        }
        ProviderConfig::Dataset(rel) => {
            let path = if rel.is_absolute() {
                rel.clone()
            } else {
                config_path.parent().unwrap_or(Path::new(".")).join(rel)
            };
            let provider = DatasetProvider::from_path(&path)
                .with_context(|| format!("cannot load dataset {}", path.display()))?;
            Ok(Box::new(provider))
        }
    }
}

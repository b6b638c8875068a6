//! Experiment configuration: a single JSON document shared by all runners.
//!
//! Configs round-trip through serialization bit-exactly (`serde_json` is
//! built with `float_roundtrip`), and every output row carries the config
//! hash for provenance.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::Domain;
use crate::spectral::MeasureSpec;

/// Half-open seed interval `start..end`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
pub struct SeedRange {
    pub start: u64,
    pub end: u64,
}

impl SeedRange {
    pub fn count(&self) -> u64 {
        self.end.saturating_sub(self.start)
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> {
        self.start..self.end
    }

    pub fn validate(&self) -> Result<()> {
        if self.end <= self.start {
            return Err(Error::Config(format!(
                "seed range {}..{} is empty",
                self.start, self.end
            )));
        }
        Ok(())
    }
}

impl FromStr for SeedRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once("..")
            .ok_or_else(|| Error::Config(format!("seed range must look like a..b, got `{s}`")))?;
        let start = a
            .trim()
            .parse::<u64>()
            .map_err(|e| Error::Config(format!("bad seed range start `{a}`: {e}")))?;
        let end = b
            .trim()
            .parse::<u64>()
            .map_err(|e| Error::Config(format!("bad seed range end `{b}`: {e}")))?;
        Ok(Self { start, end })
    }
}

impl std::fmt::Display for SeedRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct DomainConfig {
    pub r: f64,
    pub grid_n: usize,
}

impl DomainConfig {
    pub fn build(&self) -> Result<Domain> {
        Domain::square(self.r, self.grid_n).map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct McConfig {
    /// Draw count for the product-Gaussian Monte Carlo.
    pub draws: u64,
    /// Band half-width of the conditional curvature estimator.
    pub bandwidth: f64,
    /// Uniform sample points per realization for curvature sampling.
    pub points_per_seed: u64,
    /// Draws for the Monte Carlo expected gradient norm (anisotropic case).
    pub grad_norm_draws: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            draws: 1_000_000,
            bandwidth: 0.05,
            points_per_seed: 100_000,
            grad_norm_draws: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Perturbation {
    /// Atoms scaled radially by 1 + epsilon.
    Radial,
    /// Atoms rotated by epsilon radians.
    Angular,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct ScalingConfig {
    /// Perturbation ladder, largest first.
    pub epsilons: Vec<f64>,
    pub perturbation: Perturbation,
    /// Level whose set lengths are compared.
    pub level: f64,
    /// Grid spacing of the sigma_D / beta diagnostics.
    pub sigma_grid_spacing: f64,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            epsilons: vec![0.1, 0.05, 0.02, 0.01, 0.005],
            perturbation: Perturbation::Radial,
            level: 0.0,
            sigma_grid_spacing: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum DumpFormat {
    Csv,
    /// Raw little-endian f64 stream with a JSON sidecar header.
    Raw,
}

/// One experiment run, fully determined by this document.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Experiment name; must match the subcommand when set.
    #[serde(default)]
    pub experiment: String,
    pub measure: MeasureSpec,
    #[serde(default)]
    pub measure2: Option<MeasureSpec>,
    pub domain: DomainConfig,
    #[serde(default)]
    pub levels: Vec<f64>,
    /// (a, b) level bands for the identity suite.
    #[serde(default)]
    pub bands: Vec<[f64; 2]>,
    pub seed_range: SeedRange,
    #[serde(default)]
    pub mc: McConfig,
    #[serde(default)]
    pub scaling: ScalingConfig,
    /// Second resolution of the identity suite (default 128).
    #[serde(default)]
    pub coarse_grid_n: Option<usize>,
    /// Correlations for the product-Gaussian experiment.
    #[serde(default)]
    pub rhos: Vec<f64>,
    #[serde(default)]
    pub dump_format: Option<DumpFormat>,
    /// Output directory; the CLI --out flag overrides it.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("bad config: {e}")))
    }

    /// Hex prefix of the SHA-256 of the canonical serialization; stamped on
    /// every output row.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest[..6].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Shared validation; runners add their own requirements.
    pub fn validate_common(&self, expected_experiment: &str) -> Result<()> {
        if !self.experiment.is_empty() && self.experiment != expected_experiment {
            return Err(Error::Config(format!(
                "config is for experiment `{}`, not `{expected_experiment}`",
                self.experiment
            )));
        }
        self.seed_range.validate()?;
        self.domain.build()?;
        self.measure
            .build()
            .map_err(|e| Error::Config(format!("measure: {e}")))?;
        if let Some(m2) = &self.measure2 {
            m2.build().map_err(|e| Error::Config(format!("measure2: {e}")))?;
        }
        if self.mc.draws == 0 || self.mc.points_per_seed == 0 {
            return Err(Error::Config("Monte Carlo sizes must be positive".into()));
        }
        if !(self.mc.bandwidth.is_finite() && self.mc.bandwidth > 0.0) {
            return Err(Error::Config(format!(
                "bandwidth must be positive, got {}",
                self.mc.bandwidth
            )));
        }
        if !(self.scaling.sigma_grid_spacing.is_finite() && self.scaling.sigma_grid_spacing > 0.0)
        {
            return Err(Error::Config("sigma grid spacing must be positive".into()));
        }
        for b in &self.bands {
            if b[0].is_nan() || b[1].is_nan() || b[0] >= b[1] {
                return Err(Error::Config(format!("band [{}, {}] is empty", b[0], b[1])));
            }
        }
        Ok(())
    }
}

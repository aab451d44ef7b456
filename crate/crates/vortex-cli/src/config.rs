//! Run configuration: one TOML file, overridable from the command line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use vortex_spectral::eigen::EigenConfig;
use vortex_spectral::grid::{GridSpec, RadialGrid, XiGrid, XiGridSpec};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    /// bound on the ρ ODE residual checked after sampling
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub cache_dir: PathBuf,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub xi: XiGridSpec,
    pub profile: ProfileSection,
    pub eigen: EigenConfig,
    pub paths: Paths,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec::default(),
            xi: XiGridSpec::default(),
            profile: ProfileSection { tol: 1e-9 },
            eigen: EigenConfig::default(),
            paths: Paths { cache_dir: ".vortex-cache".into(), output_dir: "out".into() },
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let cfg = Self::from_toml(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is plain data")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.profile.tol.is_finite() && self.profile.tol > 0.0) {
            return Err(CliError::Config(format!("profile.tol must be positive, got {}", self.profile.tol)));
        }
        self.eigen.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.radial_grid()?;
        self.xi_grid()?;
        Ok(())
    }

    pub fn radial_grid(&self) -> Result<RadialGrid, CliError> {
        RadialGrid::new(self.grid).map_err(|e| CliError::Config(format!("grid: {e}")))
    }

    pub fn xi_grid(&self) -> Result<XiGrid, CliError> {
        XiGrid::new(self.xi).map_err(|e| CliError::Config(format!("xi: {e}")))
    }

    /// Content hash of the sections that determine an eigenfunction table.
    pub fn table_key(&self, profile_hash: &str) -> String {
        #[derive(Serialize)]
        struct Key<'a> {
            code: &'a str,
            profile: &'a str,
            grid: &'a GridSpec,
            xi: &'a XiGridSpec,
            eigen: &'a EigenConfig,
        }
        let key = Key { code: crate::CODE_VERSION, profile: profile_hash, grid: &self.grid, xi: &self.xi, eigen: &self.eigen };
        sha256_hex(toml::to_string(&key).expect("key is plain data").as_bytes())
    }

    pub fn hash(&self) -> String {
        sha256_hex(format!("{}\n{}", crate::CODE_VERSION, self.to_toml()).as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Command-line values that replace config fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub r_max: Option<f64>,
    pub h: Option<f64>,
    pub xi_min: Option<f64>,
    pub xi_max: Option<f64>,
    pub dtau: Option<f64>,
    pub cache_dir: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

impl Overrides {
    pub fn apply(&self, mut cfg: RunConfig) -> Result<RunConfig, CliError> {
        if let Some(h) = self.h {
            cfg.grid = cfg.grid.with_h(h);
        }
        if let Some(r) = self.r_max {
            cfg.grid = cfg.grid.with_r_max(r);
        }
        if let Some(v) = self.xi_min {
            cfg.xi.xi_min = v;
        }
        if let Some(v) = self.xi_max {
            cfg.xi.xi_max = v;
        }
        if let Some(v) = self.dtau {
            cfg.xi.dtau = v;
        }
        if let Some(d) = &self.cache_dir {
            cfg.paths.cache_dir = d.clone();
        }
        if let Some(d) = &self.output_dir {
            cfg.paths.output_dir = d.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

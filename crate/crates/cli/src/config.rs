//! Run configuration: a JSON document validated before any computation.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use young_core::verify::SuiteOptions;
use young_core::{MeasureFamily, ThetaSpec};

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Overrides the exponent stored in the measures document.
    pub p: Option<f64>,
    #[serde(default)]
    pub theta: ThetaSpec,
    pub epsilon: Option<f64>,
    pub measures: PathBuf,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default)]
    pub grid: GridOverrides,
    #[serde(default)]
    pub outputs: Outputs,
    #[serde(skip)]
    base: PathBuf,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridOverrides {
    pub per_decade: Option<usize>,
    pub window_points: Option<usize>,
    pub random_pairs: Option<usize>,
    pub seed: Option<u64>,
    pub radii: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    pub artifact: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

fn default_horizon() -> usize {
    young_core::sequences::DEFAULT_HORIZON
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: Config =
            serde_json::from_str(&text).map_err(|e| CliError::input(format!("invalid config {}: {e}", path.display())))?;
        cfg.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        if let Some(p) = self.p {
            if !(p.is_finite() && p > 0.0) {
                return Err(CliError::input(format!("p must be positive, got {p}")));
            }
        }
        self.theta.validate().map_err(CliError::from_core)?;
        if let Some(eps) = self.epsilon {
            if !(eps > 0.0 && eps < 0.125) {
                return Err(CliError::input(format!("epsilon must lie in (0, 1/8), got {eps}")));
            }
        }
        if self.horizon < 2 {
            return Err(CliError::input(format!("horizon must be at least 2, got {}", self.horizon)));
        }
        let g = &self.grid;
        if g.per_decade == Some(0) || g.window_points == Some(0) || g.random_pairs == Some(0) {
            return Err(CliError::input("grid sizes must be positive"));
        }
        Ok(())
    }

    /// Resolves a path written in the config relative to the config's directory.
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn family(&self) -> Result<MeasureFamily, CliError> {
        let path = self.resolve(&self.measures);
        let text =
            std::fs::read_to_string(&path).map_err(|e| CliError::input(format!("cannot read measures {}: {e}", path.display())))?;
        let family = MeasureFamily::from_json(&text).map_err(CliError::from_core)?;
        match self.p {
            Some(p) => family.with_p(p).map_err(CliError::from_core),
            None => Ok(family),
        }
    }

    pub fn suite_options(&self) -> SuiteOptions {
        let d = SuiteOptions::default();
        let g = &self.grid;
        SuiteOptions {
            per_decade: g.per_decade.unwrap_or(d.per_decade),
            window_points: g.window_points.unwrap_or(d.window_points),
            random_pairs: g.random_pairs.unwrap_or(d.random_pairs),
            seed: g.seed.unwrap_or(d.seed),
            horizon_n: self.horizon,
            radii: g.radii.clone(),
        }
    }
}

//! Experiment configuration, read from TOML.
//!
//! Every section and key is optional; omitted values take the defaults
//! below. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::presets::Preset;
use crate::alignment::{SpectralForm, DEFAULT_EMBEDDING_DIM, DEFAULT_ZERO_TOL};
use crate::environment::{load_environment, Environment, PropagationModel};
use crate::error::{Error, Result};
use crate::lle::DEFAULT_RIDGE;
use crate::localizer::{LocalizerConfig, Mode, OutlierRule, SourceKind, WalkingParams};
use crate::mapbuilder::DEFAULT_N_ACC;

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: usize,
    pub environment: EnvironmentSection,
    pub propagation: PropagationSection,
    pub localization: LocalizationSection,
    pub sweep: SweepSection,
    pub map: MapSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            trials: 200,
            environment: EnvironmentSection::default(),
            propagation: PropagationSection::default(),
            localization: LocalizationSection::default(),
            sweep: SweepSection::default(),
            map: MapSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvironmentSection {
    /// Built-in environment; ignored when `file` is set.
    pub preset: Preset,
    /// Environment TOML, relative to the config file's directory.
    pub file: Option<PathBuf>,
    /// Grid spacing in meters; defaults to the preset's spacing (1 m for files).
    pub spacing: Option<f64>,
}

impl Default for EnvironmentSection {
    fn default() -> Self {
        Self {
            preset: Preset::Open15,
            file: None,
            spacing: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct PropagationSection {
    pub exponent: f64,
    pub ref_distance: f64,
    /// Shadowing standard deviation of the ground-truth map (dB).
    pub shadowing_db: f64,
    /// Extra error of the simulated (source / baseline) map (dB).
    pub model_error_db: f64,
    /// Measurement noise added to every observation (dB).
    pub observation_noise_db: f64,
}

impl Default for PropagationSection {
    fn default() -> Self {
        let model = PropagationModel::default();
        Self {
            exponent: model.exponent,
            ref_distance: model.ref_distance,
            shadowing_db: 2.0,
            model_error_db: 3.0,
            observation_noise_db: 3.0,
        }
    }
}

impl PropagationSection {
    pub fn model(&self) -> PropagationModel {
        PropagationModel {
            exponent: self.exponent,
            ref_distance: self.ref_distance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceChoice {
    PlanCoords,
    SimulatedMap,
}

impl SourceChoice {
    pub fn kind(&self) -> SourceKind {
        match self {
            SourceChoice::PlanCoords => SourceKind::PlanCoordinates,
            SourceChoice::SimulatedMap => SourceKind::SimulatedMap,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeChoice {
    Stationary,
    Walking,
}

/// Scale of the walking-mode outlier distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutlierScale {
    /// Source grid spacing.
    GridSpacing,
    /// Median step of the estimated trajectory.
    MedianStep,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct LocalizationSection {
    pub source: SourceChoice,
    /// Percentage of grid points with calibration fingerprints.
    pub calibration_pct: f64,
    /// Number of observations localized together (O).
    pub observations: usize,
    /// Source neighborhood size; overrides `neighbors_pct`.
    pub neighbors: Option<usize>,
    /// Neighborhood size as a percentage of the data set.
    pub neighbors_pct: f64,
    /// Destination neighborhood size; defaults to the source size, capped
    /// at C + O - 1.
    pub dest_neighbors: Option<usize>,
    pub embedding_dim: usize,
    pub ridge: f64,
    pub zero_tol: f64,
    pub spectral_form: SpectralForm,
    pub mode: ModeChoice,
    /// Walking mode: force trajectory neighbors into each neighborhood.
    pub boost_trajectory: bool,
    /// Walking mode: outlier distance in meters; overrides the scaled rule.
    pub outlier_threshold: Option<f64>,
    /// Walking mode: unit of the scaled outlier distance.
    pub outlier_scale: OutlierScale,
    /// Walking mode: outlier distance in units of `outlier_scale`.
    pub outlier_factor: f64,
    /// Forbid source neighbors across dissociating walls.
    pub wall_dissociation: bool,
}

impl Default for LocalizationSection {
    fn default() -> Self {
        Self {
            source: SourceChoice::PlanCoords,
            calibration_pct: 25.0,
            observations: 11,
            neighbors: None,
            neighbors_pct: 11.0,
            dest_neighbors: None,
            embedding_dim: DEFAULT_EMBEDDING_DIM,
            ridge: DEFAULT_RIDGE,
            zero_tol: DEFAULT_ZERO_TOL,
            spectral_form: SpectralForm::default(),
            mode: ModeChoice::Stationary,
            boost_trajectory: true,
            outlier_threshold: None,
            outlier_scale: OutlierScale::GridSpacing,
            outlier_factor: 2.0,
            wall_dissociation: false,
        }
    }
}

impl LocalizationSection {
    pub fn mode(&self) -> Mode {
        match self.mode {
            ModeChoice::Stationary => Mode::Stationary,
            ModeChoice::Walking => Mode::Walking(WalkingParams {
                boost_trajectory: self.boost_trajectory,
                outlier_rule: self.outlier_rule(),
            }),
        }
    }

    pub fn outlier_rule(&self) -> OutlierRule {
        match (self.outlier_threshold, self.outlier_scale) {
            (Some(d), _) => OutlierRule::Absolute(d),
            (None, OutlierScale::GridSpacing) => OutlierRule::GridSpacing(self.outlier_factor),
            (None, OutlierScale::MedianStep) => OutlierRule::MedianStep(self.outlier_factor),
        }
    }

    /// Neighborhood size for a data set of `n` points.
    pub fn neighbor_count(&self, n: usize) -> usize {
        pct_count(self.neighbors_pct, n)
    }

    /// Localizer settings for a source of `s` points.
    pub fn localizer_config(&self, s: usize) -> LocalizerConfig {
        LocalizerConfig {
            source_neighbors: Some(self.neighbors.unwrap_or_else(|| self.neighbor_count(s))),
            dest_neighbors: self.dest_neighbors,
            ridge: self.ridge,
            embedding_dim: self.embedding_dim,
            zero_tol: self.zero_tol,
            spectral_form: self.spectral_form,
        }
    }
}

/// `round(pct% of n)`, at least 2.
pub(crate) fn pct_count(pct: f64, n: usize) -> usize {
    ((pct / 100.0 * n as f64).round() as usize).max(2)
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub calibration_pct: Vec<f64>,
    /// Neighborhood sizes, applied to the source and destination graphs.
    pub neighbors: Vec<usize>,
    pub observations: Vec<usize>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            calibration_pct: vec![10.0, 20.0, 30.0, 40.0, 50.0],
            neighbors: vec![10, 15, 20, 25, 30, 35, 40, 45, 50],
            observations: vec![1, 5, 10, 15, 20, 25, 30],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct MapSection {
    /// Readings averaged per grid point before it counts as estimated.
    pub n_acc: usize,
    /// Observations localized together per batch.
    pub batch: usize,
    /// Total observations streamed per trial.
    pub observation_budget: usize,
}

impl Default for MapSection {
    fn default() -> Self {
        Self {
            n_acc: DEFAULT_N_ACC,
            batch: 20,
            observation_budget: 2000,
        }
    }
}

fn check(ok: bool, field: &str, msg: impl std::fmt::Display) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(format!("{field}: {msg}")))
    }
}

fn check_pct(field: &str, v: f64) -> Result<()> {
    check(v > 0.0 && v <= 100.0, field, format!("percentage must lie in (0, 100], got {v}"))
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; a relative `environment.file` is resolved
    /// against the config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)
            .map_err(|e| Error::config(format!("{}: {}", path.display(), e.root())))?;
        if let Some(file) = &cfg.environment.file {
            if file.is_relative() {
                let base = path.parent().unwrap_or(Path::new(""));
                cfg.environment.file = Some(base.join(file));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        check(self.trials >= 1, "trials", "must be >= 1")?;
        if let Some(s) = self.environment.spacing {
            check(s > 0.0 && s.is_finite(), "environment.spacing", format!("must be > 0, got {s}"))?;
        }
        let p = &self.propagation;
        for (field, v) in [
            ("propagation.shadowing_db", p.shadowing_db),
            ("propagation.model_error_db", p.model_error_db),
            ("propagation.observation_noise_db", p.observation_noise_db),
        ] {
            check(v >= 0.0 && v.is_finite(), field, format!("must be >= 0, got {v}"))?;
        }
        p.model().validate()?;

        let l = &self.localization;
        check_pct("localization.calibration_pct", l.calibration_pct)?;
        check_pct("localization.neighbors_pct", l.neighbors_pct)?;
        check(l.observations >= 1, "localization.observations", "must be >= 1")?;
        for (field, n) in [("localization.neighbors", l.neighbors), ("localization.dest_neighbors", l.dest_neighbors)] {
            if let Some(n) = n {
                check(n >= 2, field, format!("must be >= 2, got {n}"))?;
            }
        }
        check(
            (1..=10).contains(&l.embedding_dim),
            "localization.embedding_dim",
            format!("must lie in 1..=10, got {}", l.embedding_dim),
        )?;
        check(
            l.outlier_factor > 0.0 && l.outlier_factor.is_finite(),
            "localization.outlier_factor",
            format!("must be > 0, got {}", l.outlier_factor),
        )?;
        check(l.ridge >= 0.0 && l.ridge.is_finite(), "localization.ridge", "must be >= 0")?;
        check(l.zero_tol >= 0.0 && l.zero_tol.is_finite(), "localization.zero_tol", "must be >= 0")?;
        if let Some(t) = l.outlier_threshold {
            check(t > 0.0 && t.is_finite(), "localization.outlier_threshold", format!("must be > 0, got {t}"))?;
        }

        let s = &self.sweep;
        check(!s.calibration_pct.is_empty(), "sweep.calibration_pct", "must not be empty")?;
        for &v in &s.calibration_pct {
            check_pct("sweep.calibration_pct", v)?;
        }
        check(!s.neighbors.is_empty(), "sweep.neighbors", "must not be empty")?;
        for &n in &s.neighbors {
            check(n >= 2, "sweep.neighbors", format!("values must be >= 2, got {n}"))?;
        }
        check(!s.observations.is_empty(), "sweep.observations", "must not be empty")?;
        for &n in &s.observations {
            check(n >= 1, "sweep.observations", "values must be >= 1")?;
        }

        let m = &self.map;
        check(m.n_acc >= 1, "map.n_acc", "must be >= 1")?;
        check(m.batch >= 1, "map.batch", "must be >= 1")?;
        check(m.observation_budget >= 1, "map.observation_budget", "must be >= 1")?;
        Ok(())
    }

    /// The configured environment and its grid spacing.
    pub fn environment(&self) -> Result<(Environment, f64)> {
        match &self.environment.file {
            Some(path) => Ok((load_environment(path)?, self.environment.spacing.unwrap_or(1.0))),
            None => {
                let preset = self.environment.preset;
                let spacing = self.environment.spacing.unwrap_or(preset.default_spacing());
                Ok((preset.environment()?, spacing))
            }
        }
    }
}

//! Parameter sweeps over the measurement transition and the catalogued
//! phase-space panels.
//!
//! A sweep evaluates every (θ, Γ) working point with the requested engines —
//! closed form, truncated-Fock protocol, simulated tomography — and collects
//! one row per point per engine. Points that fail (θ at a pole, degenerate
//! post-selection) produce rows with an `error` column instead of aborting
//! the sweep, so a grid that grazes a singular point still yields the rest
//! of its data.

use std::f64::consts::FRAC_PI_4;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{
    expectation_value, invert_transition_factor, make_cat_state, pointer_shift,
    probability_density, success_probability, weak_value, wigner, AnalyticError, PhaseSpaceGrid,
};
use crate::config::{MeasurementConfig, Units};
use crate::fock::{expectation_z, FockEngine, FockError, DEFAULT_DIM};
use crate::tomography::{default_fit_grid, ShotCount, TomographyEngine, TomographyError};

/// The eight catalogued (Γ, θ) phase-space panels: couplings from deep-weak
/// to strong, post-selections from near-orthogonal (θ = 0.02) through the
/// fixed point (π/4) to near-parallel (1.5).
pub const FIGURE3_PANELS: [(f64, f64); 8] = [
    (0.04, 0.02),
    (0.1, FRAC_PI_4),
    (0.1, 1.5),
    (1.0, 0.02),
    (1.0, 1.5),
    (2.9, 0.02),
    (2.9, FRAC_PI_4),
    (2.9, 1.5),
];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("invalid sweep specification: {reason}")]
    InvalidSpec { reason: String },
    #[error("engine construction failed: {0}")]
    Fock(#[from] FockError),
    #[error("tomography engine construction failed: {0}")]
    Tomography(#[from] TomographyError),
    #[error("panel evaluation failed: {0}")]
    Analytic(#[from] AnalyticError),
}

/// Which solver(s) evaluate each working point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Analytic,
    Fock,
    Both,
}

/// Optional simulated-tomography pass over the sweep grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TomographySettings {
    /// Shots per probe record.
    pub shots: u64,
    /// Base RNG seed; each grid point uses `seed + point_index`.
    pub seed: u64,
}

/// Declarative sweep description (the CLI deserializes this from JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub theta_values: Vec<f64>,
    pub gamma_values: Vec<f64>,
    pub engine: Engine,
    #[serde(default)]
    pub tomography: Option<TomographySettings>,
    #[serde(default = "default_dim")]
    pub fock_dim: usize,
    #[serde(default)]
    pub units: Units,
    /// Acceptable |Fock − analytic| deviation of shift/γ₀t; requires
    /// `engine: both`. Exceedances are reported per row, not fatal.
    #[serde(default)]
    pub tolerance: Option<f64>,
}

fn default_dim() -> usize {
    DEFAULT_DIM
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SweepError> {
        let reject = |reason: String| Err(SweepError::InvalidSpec { reason });
        if self.theta_values.is_empty() || self.gamma_values.is_empty() {
            return reject("theta_values and gamma_values must be non-empty".to_string());
        }
        if self
            .theta_values
            .iter()
            .chain(&self.gamma_values)
            .any(|v| !v.is_finite())
        {
            return reject("grid values must be finite".to_string());
        }
        if let Some(tol) = self.tolerance {
            if self.engine != Engine::Both {
                return reject("tolerance is only meaningful with engine: both".to_string());
            }
            if !tol.is_finite() || tol <= 0.0 {
                return reject(format!("tolerance must be positive, got {tol}"));
            }
        }
        if let Some(t) = &self.tomography {
            if t.shots == 0 {
                return reject("tomography shots must be positive".to_string());
            }
        }
        Ok(())
    }
}

/// One sweep result line: a working point evaluated by one engine. Numeric
/// columns are empty when the point could not be evaluated; `error` then
/// says why. `delta_vs_analytic` compares shift/γ₀t against the closed form
/// (fock and tomography rows only).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub theta: f64,
    pub gamma_big: f64,
    pub engine: String,
    pub shift_over_gamma0t: Option<f64>,
    pub weak_value: Option<f64>,
    pub expectation_value: Option<f64>,
    pub transition_factor_inferred: Option<f64>,
    pub success_probability: Option<f64>,
    pub std_error: Option<f64>,
    pub delta_vs_analytic: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    fn failed(theta: f64, gamma_big: f64, engine: &str, error: String) -> Self {
        Self {
            theta,
            gamma_big,
            engine: engine.to_string(),
            shift_over_gamma0t: None,
            weak_value: None,
            expectation_value: None,
            transition_factor_inferred: None,
            success_probability: None,
            std_error: None,
            delta_vs_analytic: None,
            error: Some(error),
        }
    }
}

/// Provenance attached to every sweep: the spec itself, its content hash,
/// and when/what produced the rows. The timestamp makes this file
/// non-deterministic by design; the row CSV is the reproducibility surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub spec_hash: String,
    pub timestamp_unix: u64,
    pub code_version: String,
    pub spec: SweepSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub metadata: SweepMetadata,
    pub rows: Vec<SweepRow>,
}

/// Closed-form row values shared by every engine's report.
fn analytic_columns(config: &MeasurementConfig) -> (Option<f64>, Option<f64>, Option<f64>) {
    (
        weak_value(config.theta).ok(),
        expectation_value(config.theta).ok(),
        success_probability(config).ok(),
    )
}

/// shift/γ₀t, undefined (0/0) at Γ = 0 where the pointer is never displaced.
fn normalized(shift: f64, g0t: f64) -> Option<f64> {
    (g0t > 0.0).then(|| shift / g0t)
}

fn analytic_row(config: &MeasurementConfig) -> SweepRow {
    let (weak, expectation, success) = analytic_columns(config);
    let g0t = config.gamma0_t();
    let (shift_ratio, inferred, error) = match pointer_shift(config) {
        Ok(shift) => (
            normalized(shift, g0t),
            invert_transition_factor(shift, config.theta, g0t).ok(),
            None,
        ),
        Err(e) => (None, None, Some(e.to_string())),
    };
    SweepRow {
        theta: config.theta,
        gamma_big: config.gamma_big,
        engine: "analytic".to_string(),
        shift_over_gamma0t: shift_ratio,
        weak_value: weak,
        expectation_value: expectation,
        transition_factor_inferred: inferred,
        success_probability: success,
        std_error: None,
        delta_vs_analytic: None,
        error,
    }
}

fn fock_row(config: &MeasurementConfig, engine: &FockEngine) -> SweepRow {
    let (weak, expectation, _) = analytic_columns(config);
    let g0t = config.gamma0_t();
    match engine.run(config) {
        Ok((motional, probability)) => {
            let shift = expectation_z(&motional, config.delta_z);
            let shift_ratio = normalized(shift, g0t);
            let delta = match (shift_ratio, pointer_shift(config).ok()) {
                (Some(ratio), Some(analytic)) => Some(ratio - analytic / g0t),
                _ => None,
            };
            SweepRow {
                theta: config.theta,
                gamma_big: config.gamma_big,
                engine: "fock".to_string(),
                shift_over_gamma0t: shift_ratio,
                weak_value: weak,
                expectation_value: expectation,
                transition_factor_inferred: invert_transition_factor(shift, config.theta, g0t).ok(),
                success_probability: Some(probability),
                std_error: None,
                delta_vs_analytic: delta,
                error: None,
            }
        }
        Err(e) => SweepRow::failed(config.theta, config.gamma_big, "fock", e.to_string()),
    }
}

fn tomography_row(
    config: &MeasurementConfig,
    engine: &TomographyEngine,
    settings: &TomographySettings,
    point_index: u64,
) -> SweepRow {
    let (weak, expectation, _) = analytic_columns(config);
    let g0t = config.gamma0_t();
    let shots = ShotCount::Finite(settings.shots);
    let grid = default_fit_grid(config.gamma_big, shots);
    match engine.extract_mean_z(config, &grid, shots, settings.seed + point_index) {
        Ok(estimate) => {
            let shift_ratio = normalized(estimate.mean_z, g0t);
            let delta = match (shift_ratio, pointer_shift(config).ok()) {
                (Some(ratio), Some(analytic)) => Some(ratio - analytic / g0t),
                _ => None,
            };
            SweepRow {
                theta: config.theta,
                gamma_big: config.gamma_big,
                engine: "tomography".to_string(),
                shift_over_gamma0t: shift_ratio,
                weak_value: weak,
                expectation_value: expectation,
                transition_factor_inferred: invert_transition_factor(
                    estimate.mean_z,
                    config.theta,
                    g0t,
                )
                .ok(),
                success_probability: None,
                std_error: (g0t > 0.0).then(|| estimate.std_error / g0t),
                delta_vs_analytic: delta,
                error: None,
            }
        }
        Err(e) => SweepRow::failed(config.theta, config.gamma_big, "tomography", e.to_string()),
    }
}

/// Runs a validated sweep: θ outer, Γ inner; per point, an analytic row
/// and/or a Fock row (by `engine`), then a tomography row when settings are
/// present. Execution is deterministic — rerunning an identical spec
/// reproduces the rows byte for byte.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult, SweepError> {
    spec.validate()?;

    let wants_fock = matches!(spec.engine, Engine::Fock | Engine::Both);
    let fock_engine = if wants_fock {
        Some(FockEngine::new(spec.fock_dim)?)
    } else {
        None
    };
    let tomography_engine = if spec.tomography.is_some() {
        Some(TomographyEngine::new(spec.fock_dim)?)
    } else {
        None
    };

    let mut rows = Vec::new();
    let mut point_index: u64 = 0;
    for &theta in &spec.theta_values {
        for &gamma in &spec.gamma_values {
            match MeasurementConfig::for_units(spec.units, theta, gamma) {
                Ok(config) => {
                    if matches!(spec.engine, Engine::Analytic | Engine::Both) {
                        rows.push(analytic_row(&config));
                    }
                    if let Some(engine) = &fock_engine {
                        rows.push(fock_row(&config, engine));
                    }
                    if let (Some(engine), Some(settings)) = (&tomography_engine, &spec.tomography) {
                        rows.push(tomography_row(&config, engine, settings, point_index));
                    }
                }
                Err(e) => {
                    let message = e.to_string();
                    if matches!(spec.engine, Engine::Analytic | Engine::Both) {
                        rows.push(SweepRow::failed(theta, gamma, "analytic", message.clone()));
                    }
                    if wants_fock {
                        rows.push(SweepRow::failed(theta, gamma, "fock", message.clone()));
                    }
                    if spec.tomography.is_some() {
                        rows.push(SweepRow::failed(theta, gamma, "tomography", message));
                    }
                }
            }
            point_index += 1;
        }
    }

    let metadata = SweepMetadata {
        spec_hash: crate::artifact::config_hash(spec).unwrap_or_else(|_| "--------".to_string()),
        timestamp_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        spec: spec.clone(),
    };
    Ok(SweepResult { metadata, rows })
}

/// One catalogued phase-space panel: the closed-form Wigner function on a
/// spectrally adequate grid plus the position density on the same z axis
/// (natural units).
#[derive(Debug, Clone, PartialEq)]
pub struct PanelResult {
    pub gamma_big: f64,
    pub theta: f64,
    pub z_grid: Vec<f64>,
    pub p_grid: Vec<f64>,
    pub density: Vec<f64>,
    pub wigner: nalgebra::DMatrix<f64>,
}

/// Evaluates all eight catalogued panels.
pub fn figure3_panels() -> Result<Vec<PanelResult>, SweepError> {
    FIGURE3_PANELS
        .iter()
        .map(|&(gamma, theta)| {
            let config =
                MeasurementConfig::new(theta, gamma).map_err(|e| SweepError::InvalidSpec {
                    reason: e.to_string(),
                })?;
            let grid = PhaseSpaceGrid::span_for(gamma)?;
            let w = wigner(&config, &grid)?;
            let cat = make_cat_state(&config)?;
            let z_grid = grid.z_values();
            let density = z_grid
                .iter()
                .map(|&z| probability_density(&cat, z))
                .collect();
            Ok(PanelResult {
                gamma_big: gamma,
                theta,
                z_grid,
                p_grid: grid.p_values(),
                density,
                wigner: w,
            })
        })
        .collect()
}

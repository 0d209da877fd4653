//! Measurement configuration: post-selection geometry, coupling strength, and
//! unit presets.
//!
//! A measurement run is fully determined by the post-selection angle θ and the
//! dimensionless interaction strength Γ = γ₀t/Δ_z (pointer displacement over
//! pointer width). The remaining fields fix the physical scale: the motional
//! wavepacket width Δ_z, the Lamb–Dicke parameter η, and the carrier Rabi
//! frequency Ω, from which the coupling rate γ₀ = ηΩΔ_z and the interaction
//! time t = Γ/(ηΩ) follow.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Axial ground-state wavepacket width of the physical preset, in metres.
pub const DELTA_Z_PHYSICAL: f64 = 9.47e-9;

/// Lamb–Dicke parameter of the physical preset.
pub const ETA_PRESET: f64 = 0.08;

/// Carrier Rabi frequency of the physical preset, in rad/s (2π × 19 kHz).
pub const OMEGA_RABI_PRESET: f64 = 2.0 * PI * 19e3;

/// Axial trap frequency of the physical preset, in rad/s (2π × 1.41 MHz).
/// Documentation only: the impulsive-coupling model never evolves under the
/// trap Hamiltonian, but the value fixes what "one motional quantum" means.
pub const OMEGA_TRAP_PRESET: f64 = 2.0 * PI * 1.41e6;

/// Upper bound accepted for the Lamb–Dicke parameter. Beyond this the
/// first-order sideband expansion underlying the whole model breaks down.
pub const ETA_MAX: f64 = 0.3;

/// Relative tolerance for cross-checking the derived fields of a
/// deserialized configuration against its primary parameters.
const DERIVED_REL_TOL: f64 = 1e-12;

/// Unit system selector for constructing configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    /// Δ_z = 1; lengths are in units of the wavepacket width, ħ = 1.
    #[default]
    Natural,
    /// Trapped-ion preset: lengths in metres, times in seconds.
    Physical,
}

/// Everything needed to specify one post-selected measurement.
///
/// Invariants (enforced by the constructors, re-checkable via [`validate`]):
/// θ ∈ [0, π/2], Γ ≥ 0, Δ_z > 0, 0 < η < [`ETA_MAX`], Ω > 0, and the derived
/// fields satisfy γ₀ = ηΩΔ_z and ηΩt = Γ.
///
/// [`validate`]: MeasurementConfig::validate
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementConfig {
    /// Post-selection angle θ: the kept state is cos θ|↑⟩ − sin θ|↓⟩ while the
    /// system is prepared in |↓⟩, so θ → 0 approaches orthogonal
    /// pre/post-selection and θ = π/2 post-selects the initial state itself.
    pub theta: f64,
    /// Dimensionless interaction strength Γ = γ₀t/Δ_z.
    pub gamma_big: f64,
    /// Pointer wavepacket width Δ_z (1 in natural units, metres in physical).
    pub delta_z: f64,
    /// Lamb–Dicke parameter η.
    pub eta: f64,
    /// Carrier Rabi frequency Ω in rad/s.
    pub omega_rabi: f64,
    /// Derived coupling rate γ₀ = ηΩΔ_z (length/time).
    pub coupling_gamma0: f64,
    /// Derived interaction time t = Γ/(ηΩ) (seconds).
    pub t: f64,
}

/// Rejection reasons for measurement configurations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("theta = {0} is outside the post-selection range [0, π/2]")]
    ThetaOutOfRange(f64),
    #[error("gamma = {0} must be a finite, non-negative interaction strength")]
    GammaOutOfRange(f64),
    #[error("{name} = {value} must be positive and finite")]
    NonPositive { name: &'static str, value: f64 },
    #[error("Lamb–Dicke parameter {0} is outside the linearized-sideband range (0, {ETA_MAX})")]
    LambDickeOutOfRange(f64),
    #[error(
        "derived field {name} = {actual} disagrees with {expected} recomputed \
         from the primary parameters"
    )]
    InconsistentDerived {
        name: &'static str,
        expected: f64,
        actual: f64,
    },
}

impl MeasurementConfig {
    /// Natural-unit configuration: Δ_z = 1, preset laser parameters.
    pub fn new(theta: f64, gamma_big: f64) -> Result<Self, ConfigError> {
        Self::with_parameters(theta, gamma_big, 1.0, ETA_PRESET, OMEGA_RABI_PRESET)
    }

    /// Physical-unit configuration using the trapped-ion preset.
    pub fn physical(theta: f64, gamma_big: f64) -> Result<Self, ConfigError> {
        Self::with_parameters(
            theta,
            gamma_big,
            DELTA_Z_PHYSICAL,
            ETA_PRESET,
            OMEGA_RABI_PRESET,
        )
    }

    /// Configuration in the requested unit system.
    pub fn for_units(units: Units, theta: f64, gamma_big: f64) -> Result<Self, ConfigError> {
        match units {
            Units::Natural => Self::new(theta, gamma_big),
            Units::Physical => Self::physical(theta, gamma_big),
        }
    }

    /// Fully parameterized constructor; computes the derived fields and
    /// validates everything.
    pub fn with_parameters(
        theta: f64,
        gamma_big: f64,
        delta_z: f64,
        eta: f64,
        omega_rabi: f64,
    ) -> Result<Self, ConfigError> {
        let config = Self {
            theta,
            gamma_big,
            delta_z,
            eta,
            omega_rabi,
            coupling_gamma0: eta * omega_rabi * delta_z,
            t: gamma_big / (eta * omega_rabi),
        };
        config.validate()?;
        Ok(config)
    }

    /// Pointer displacement length γ₀t = Γ·Δ_z, the quantity every shift is
    /// naturally compared against. Computed from the primary fields so it is
    /// exact even when γ₀·t would round differently.
    pub fn gamma0_t(&self) -> f64 {
        self.gamma_big * self.delta_z
    }

    /// Re-checks every invariant; useful after deserializing.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.theta.is_finite() || !(0.0..=FRAC_PI_2).contains(&self.theta) {
            return Err(ConfigError::ThetaOutOfRange(self.theta));
        }
        if !self.gamma_big.is_finite() || self.gamma_big < 0.0 {
            return Err(ConfigError::GammaOutOfRange(self.gamma_big));
        }
        for (name, value) in [("delta_z", self.delta_z), ("omega_rabi", self.omega_rabi)] {
            if !value.is_finite() || value <= 0.0 {
                return Err(ConfigError::NonPositive { name, value });
            }
        }
        if !self.eta.is_finite() || self.eta <= 0.0 || self.eta >= ETA_MAX {
            return Err(ConfigError::LambDickeOutOfRange(self.eta));
        }

        let gamma0 = self.eta * self.omega_rabi * self.delta_z;
        if !close(self.coupling_gamma0, gamma0) {
            return Err(ConfigError::InconsistentDerived {
                name: "coupling_gamma0",
                expected: gamma0,
                actual: self.coupling_gamma0,
            });
        }
        let gamma_from_t = self.eta * self.omega_rabi * self.t;
        if !self.t.is_finite() || self.t < 0.0 || !close(gamma_from_t, self.gamma_big) {
            return Err(ConfigError::InconsistentDerived {
                name: "t",
                expected: self.gamma_big / (self.eta * self.omega_rabi),
                actual: self.t,
            });
        }
        Ok(())
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= DERIVED_REL_TOL * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

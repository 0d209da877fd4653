//! Closed-form description of the post-selected measurement.
//!
//! A qubit prepared in |↓⟩ is coupled impulsively to a motional wavepacket
//! through H = γ₀ σ̂ₓ p̂ and then post-selected onto cos θ|↑⟩ − sin θ|↓⟩. The
//! surviving pointer state is a superposition of two displaced Gaussians (a
//! "cat" for large Γ), and every observable of interest — the conditioned
//! pointer shift, the post-selection probability, the position density, the
//! Wigner function — has an exact expression in terms of θ and Γ = γ₀t/Δ_z.
//!
//! Two limits anchor the transition. For Γ → 0 the conditioned shift per γ₀t
//! approaches the weak value −cot θ, which diverges as the selected states
//! become orthogonal; for Γ → ∞ it approaches the ordinary expectation value
//! −sin 2θ in the post-selected state. The interpolation is controlled by the
//! wavepacket overlap e^(−Γ²/2), which [`invert_transition_factor`] recovers
//! from a measured shift.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::MeasurementConfig;

/// Post-selected states with squared norm below this are treated as
/// impossible outcomes (θ → 0 together with Γ → 0).
pub const NORM_SQ_FLOOR: f64 = 1e-15;

/// Coarsest phase-space step (in natural units) accepted by [`wigner`]:
/// four samples per unit Gaussian width.
pub const MAX_PHASE_STEP: f64 = 0.25;

/// Failure modes of the closed-form layer.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error("the weak value diverges at theta = 0 (orthogonal pre/post-selection)")]
    Pole,
    #[error("theta = {0} is outside the post-selection range [0, π/2]")]
    ThetaOutOfRange(f64),
    #[error("gamma = {0} must be a finite, non-negative interaction strength")]
    GammaOutOfRange(f64),
    #[error(
        "post-selected state norm² = {norm_sq:.3e} is below {NORM_SQ_FLOOR:.0e}; \
         the selection is (numerically) impossible"
    )]
    DegenerateState { norm_sq: f64 },
    #[error("transition factor is not invertible: {reason}")]
    NonInvertible { reason: String },
    #[error("invalid phase-space grid: {reason}")]
    InvalidGrid { reason: String },
    #[error("phase-space grid too coarse: {reason}")]
    GridTooCoarse { reason: String },
}

fn check_theta(theta: f64) -> Result<(), AnalyticError> {
    if !theta.is_finite() || !(0.0..=FRAC_PI_2).contains(&theta) {
        return Err(AnalyticError::ThetaOutOfRange(theta));
    }
    Ok(())
}

fn check_gamma(gamma: f64) -> Result<(), AnalyticError> {
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(AnalyticError::GammaOutOfRange(gamma));
    }
    Ok(())
}

// ── Scalar observables ──────────────────────────────────────────────────────

/// Weak value of σ̂_z for pre-selection |↓⟩ and post-selection
/// cos θ|↑⟩ − sin θ|↓⟩: A_w = ⟨f|σ̂_z|i⟩/⟨f|i⟩ = −cot θ.
///
/// Anomalous (|A_w| > 1, outside the spectrum of σ̂_z) for θ < π/4, diverging
/// at the exact pole θ = 0 where the selected states become orthogonal.
pub fn weak_value(theta: f64) -> Result<f64, AnalyticError> {
    check_theta(theta)?;
    if theta == 0.0 {
        return Err(AnalyticError::Pole);
    }
    Ok(-1.0 / theta.tan())
}

/// Strong-measurement asymptote: the expectation value of σ̂_z in the
/// post-selected state, ⟨f|σ̂_z|f⟩ = −sin 2θ. Always within [−1, 0].
pub fn expectation_value(theta: f64) -> Result<f64, AnalyticError> {
    check_theta(theta)?;
    Ok(-(2.0 * theta).sin())
}

/// Wavepacket overlap e^(−Γ²/2) between the two displaced pointer branches:
/// 1 in the weak limit, 0 in the strong (projective) limit.
pub fn transition_factor(gamma_big: f64) -> Result<f64, AnalyticError> {
    check_gamma(gamma_big)?;
    Ok((-0.5 * gamma_big * gamma_big).exp())
}

/// Post-selection success probability, exact at every coupling strength:
/// p = (1 − cos 2θ · e^(−Γ²/2))/2. Equals 1/2 at θ = π/4 and approaches
/// sin²θ = |⟨f|i⟩|² as Γ → 0.
pub fn success_probability(config: &MeasurementConfig) -> Result<f64, AnalyticError> {
    check_theta(config.theta)?;
    let overlap = transition_factor(config.gamma_big)?;
    Ok(0.5 * (1.0 - (2.0 * config.theta).cos() * overlap))
}

/// Post-selection probability of the *uncoupled* protocol, |⟨f|i⟩|² = sin²θ:
/// the Γ → 0 limit of [`success_probability`] and the usual quoted cost of
/// working near the weak-value pole.
pub fn uncoupled_success_probability(theta: f64) -> Result<f64, AnalyticError> {
    check_theta(theta)?;
    Ok(theta.sin().powi(2))
}

// ── Cat state and derived quantities ────────────────────────────────────────

/// Normalized post-selected pointer state
/// Φ(z) = [c₊ φ(z + γ₀t) + c₋ φ(z − γ₀t)] / norm, with φ a Gaussian of width
/// Δ_z (standard deviation of |φ|²) and
/// c₊ = −sin(θ + π/4), c₋ = cos(θ + π/4), norm² = 1 − cos 2θ · e^(−Γ²/2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CatState {
    /// Coefficient of the branch displaced to −γ₀t.
    pub coeff_plus: f64,
    /// Coefficient of the branch displaced to +γ₀t.
    pub coeff_minus: f64,
    /// Branch displacement γ₀t, in length units.
    pub displacement: f64,
    /// Wavepacket width Δ_z, in length units.
    pub width: f64,
    /// Norm of the unnormalized superposition, √(1 − cos 2θ e^(−Γ²/2)).
    pub norm: f64,
}

/// Builds the post-selected pointer state for a configuration.
pub fn make_cat_state(config: &MeasurementConfig) -> Result<CatState, AnalyticError> {
    let overlap = transition_factor(config.gamma_big)?;
    let norm_sq = 1.0 - (2.0 * config.theta).cos() * overlap;
    if norm_sq < NORM_SQ_FLOOR {
        return Err(AnalyticError::DegenerateState { norm_sq });
    }
    Ok(CatState {
        coeff_plus: -(config.theta + FRAC_PI_4).sin(),
        coeff_minus: (config.theta + FRAC_PI_4).cos(),
        displacement: config.gamma0_t(),
        width: config.delta_z,
        norm: norm_sq.sqrt(),
    })
}

/// Position probability density |Φ(z)|² of the cat state, with z in the same
/// length units as the state's width. Integrates to 1 over the real line.
pub fn probability_density(cat: &CatState, z: f64) -> f64 {
    let amplitude = cat.coeff_plus * packet(z + cat.displacement, cat.width)
        + cat.coeff_minus * packet(z - cat.displacement, cat.width);
    let scaled = amplitude / cat.norm;
    scaled * scaled
}

/// Ground-state wavepacket φ(z) = (2πΔ²)^(−1/4) e^(−z²/4Δ²); |φ|² is a normal
/// density with standard deviation Δ.
fn packet(z: f64, width: f64) -> f64 {
    let w2 = width * width;
    (2.0 * PI * w2).powf(-0.25) * (-z * z / (4.0 * w2)).exp()
}

/// Conditioned pointer shift ⟨δz⟩ = −γ₀t · sin 2θ / (1 − cos 2θ e^(−Γ²/2)),
/// in length units. Interpolates between γ₀t times the weak value (Γ → 0)
/// and γ₀t times the expectation value (Γ → ∞).
pub fn pointer_shift(config: &MeasurementConfig) -> Result<f64, AnalyticError> {
    let overlap = transition_factor(config.gamma_big)?;
    let norm_sq = 1.0 - (2.0 * config.theta).cos() * overlap;
    if norm_sq < NORM_SQ_FLOOR {
        return Err(AnalyticError::DegenerateState { norm_sq });
    }
    Ok(-config.gamma0_t() * (2.0 * config.theta).sin() / norm_sq)
}

/// Recovers the wavepacket overlap e^(−Γ²/2) from a measured conditioned
/// shift: s = (⟨δz⟩ + γ₀t sin 2θ)/(⟨δz⟩ cos 2θ).
///
/// Requires θ ∈ (0, π/2) away from the fixed point π/4 (where the shift is
/// −γ₀t for every Γ and carries no strength information) and a nonzero shift.
/// With a noisy shift estimate the result may fall outside [0, 1]; callers
/// decide how much excursion to tolerate.
pub fn invert_transition_factor(
    shift: f64,
    theta: f64,
    gamma0_t: f64,
) -> Result<f64, AnalyticError> {
    if !theta.is_finite() || theta <= 0.0 || theta >= FRAC_PI_2 {
        return Err(AnalyticError::NonInvertible {
            reason: format!("theta = {theta} is outside the invertible range (0, π/2)"),
        });
    }
    let cos2t = (2.0 * theta).cos();
    if cos2t.abs() < 1e-12 {
        return Err(AnalyticError::NonInvertible {
            reason: "theta = π/4 is the fixed point; the shift is strength-independent there"
                .to_string(),
        });
    }
    if !gamma0_t.is_finite() || gamma0_t <= 0.0 {
        return Err(AnalyticError::NonInvertible {
            reason: format!("gamma0_t = {gamma0_t} must be a positive displacement"),
        });
    }
    if !shift.is_finite() || shift == 0.0 {
        return Err(AnalyticError::NonInvertible {
            reason: format!("shift = {shift} cannot be inverted"),
        });
    }
    Ok((shift + gamma0_t * (2.0 * theta).sin()) / (shift * cos2t))
}

// ── Wigner function ─────────────────────────────────────────────────────────

/// Rectangular phase-space grid in natural units: position in units of Δ_z,
/// momentum in units of ħ/(2Δ_z). Both axes are inclusive linspaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceGrid {
    pub z_min: f64,
    pub z_max: f64,
    pub n_z: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub n_p: usize,
}

impl PhaseSpaceGrid {
    pub fn new(
        z_min: f64,
        z_max: f64,
        n_z: usize,
        p_min: f64,
        p_max: f64,
        n_p: usize,
    ) -> Result<Self, AnalyticError> {
        let grid = Self {
            z_min,
            z_max,
            n_z,
            p_min,
            p_max,
            n_p,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Default grid for a given interaction strength: positions spanning both
    /// branches with five widths of margin, momenta to ±7 (beyond which the
    /// Gaussian envelope is < e^(−24)), and steps of 0.125 or finer.
    pub fn span_for(gamma_big: f64) -> Result<Self, AnalyticError> {
        if !gamma_big.is_finite() || gamma_big < 0.0 {
            return Err(AnalyticError::GammaOutOfRange(gamma_big));
        }
        // Six-sigma position margin past the outermost lobe: near-orthogonal
        // post-selection (norm² ≪ 1) amplifies the *difference* between the
        // window-tail losses of the two lobes and the fringe term by 1/norm²,
        // so a 5σ margin can leave ~10⁻⁵ of the mass outside the window at
        // the weakest couplings. Six sigma keeps the deficit below 10⁻⁷.
        let z_span = gamma_big + 6.0;
        let p_span = 7.0_f64;
        let n_z = 2 * (z_span / 0.125).ceil() as usize + 1;
        let n_p = 2 * (p_span / 0.125).ceil() as usize + 1;
        Self::new(-z_span, z_span, n_z, -p_span, p_span, n_p)
    }

    pub fn validate(&self) -> Result<(), AnalyticError> {
        for (name, lo, hi) in [("z", self.z_min, self.z_max), ("p", self.p_min, self.p_max)] {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(AnalyticError::InvalidGrid {
                    reason: format!("{name} range [{lo}, {hi}] is not a finite, increasing span"),
                });
            }
        }
        if self.n_z < 2 || self.n_p < 2 {
            return Err(AnalyticError::InvalidGrid {
                reason: format!(
                    "need at least 2 points per axis, got {}×{}",
                    self.n_z, self.n_p
                ),
            });
        }
        Ok(())
    }

    pub fn dz(&self) -> f64 {
        (self.z_max - self.z_min) / (self.n_z - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.n_p - 1) as f64
    }

    pub fn z_values(&self) -> Vec<f64> {
        let dz = self.dz();
        (0..self.n_z).map(|i| self.z_min + dz * i as f64).collect()
    }

    pub fn p_values(&self) -> Vec<f64> {
        let dp = self.dp();
        (0..self.n_p).map(|i| self.p_min + dp * i as f64).collect()
    }
}

/// Wigner function of the post-selected pointer state on a natural-unit grid
/// (z̃ = z/Δ_z, p̃ = 2Δ_z p/ħ). Entry (i, j) is W(z̃ᵢ, p̃ⱼ); the function
/// integrates to 1 against dz̃ dp̃ and its momentum marginal is the position
/// density (in 1/Δ_z units): ∫W dp̃ = Δ_z · |Φ(z̃Δ_z)|².
///
/// Closed form: with G(a, b) = e^(−(a²+b²)/2)/2π and the cat coefficients,
/// W(z̃, p̃) = [c₊² G(z̃+Γ, p̃) + c₋² G(z̃−Γ, p̃)
///            + 2c₊c₋ cos(Γp̃) G(z̃, p̃)] / norm².
/// The two Gaussian lobes sit at ∓Γ and the oscillating term between them is
/// the interference fringe with period 2π/Γ in p̃, the hallmark of the cat.
///
/// The grid must resolve both the Gaussian envelope (steps ≤ 0.25) and, for
/// Γ > 0, the fringe (momentum step ≤ π/(2Γ), four samples per period);
/// otherwise [`AnalyticError::GridTooCoarse`] is returned.
pub fn wigner(
    config: &MeasurementConfig,
    grid: &PhaseSpaceGrid,
) -> Result<DMatrix<f64>, AnalyticError> {
    grid.validate()?;
    let gamma = config.gamma_big;
    let dz = grid.dz();
    let dp = grid.dp();
    if dz > MAX_PHASE_STEP || dp > MAX_PHASE_STEP {
        return Err(AnalyticError::GridTooCoarse {
            reason: format!(
                "steps (dz = {dz:.3}, dp = {dp:.3}) exceed {MAX_PHASE_STEP} natural widths"
            ),
        });
    }
    if gamma > 0.0 && dp > FRAC_PI_2 / gamma {
        return Err(AnalyticError::GridTooCoarse {
            reason: format!(
                "momentum step {dp:.3} under-samples the interference fringe \
                 (period {:.3} at Γ = {gamma})",
                2.0 * PI / gamma
            ),
        });
    }

    let cat = make_cat_state(config)?;
    let norm_sq = cat.norm * cat.norm;
    let a = cat.coeff_plus * cat.coeff_plus;
    let b = cat.coeff_minus * cat.coeff_minus;
    let cross = 2.0 * cat.coeff_plus * cat.coeff_minus; // = −cos 2θ

    let zs = grid.z_values();
    let ps = grid.p_values();
    let gauss = |u: f64, v: f64| (-0.5 * (u * u + v * v)).exp() / (2.0 * PI);
    let mut w = DMatrix::zeros(grid.n_z, grid.n_p);
    for (i, &z) in zs.iter().enumerate() {
        for (j, &p) in ps.iter().enumerate() {
            w[(i, j)] = (a * gauss(z + gamma, p)
                + b * gauss(z - gamma, p)
                + cross * (gamma * p).cos() * gauss(z, p))
                / norm_sq;
        }
    }
    Ok(w)
}

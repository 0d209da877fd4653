//! Truncated-Fock simulation of the full measurement protocol.
//!
//! The joint system is a qubit (index 0 = |↓⟩, 1 = |↑⟩) tensored with a
//! harmonic oscillator truncated to `N` number states; amplitudes are stored
//! as one complex vector of length 2N with layout index = q·N + n. All
//! Hamiltonians are assembled as H/ħ (angular-frequency units), which makes
//! the matrices independent of the wavepacket width: ẑ and p̂ only enter
//! through â ± â†. Lengths reappear solely in [`expectation_z`].
//!
//! The drive Hamiltonians are the standard sideband set — carrier, red, blue
//! — plus their bichromatic sum, which for the right phase choice reduces to
//! the impulsive coupling γ₀σ̂ₓp̂/ħ realized in the protocol. Evolution is
//! exact within the truncation: a [`Propagator`] caches one Hermitian
//! eigendecomposition and serves every evolution time, so sweeps over the
//! interaction strength cost one factorization total.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

use crate::config::{MeasurementConfig, ETA_MAX, ETA_PRESET, OMEGA_RABI_PRESET};

/// Smallest accepted truncation; below this even a single displaced packet
/// cannot be represented.
pub const MIN_DIM: usize = 8;

/// Default truncation dimension, ample for every catalogued working point.
pub const DEFAULT_DIM: usize = 128;

/// Number of top Fock levels whose population is monitored for truncation
/// leakage after each evolution.
const TAIL_LEVELS: usize = 4;

/// Population allowed in the monitored tail levels before an evolution is
/// declared untrustworthy.
const TAIL_TOLERANCE: f64 = 1e-8;

/// Relative Hermiticity tolerance for matrices handed to [`Propagator::new`].
const HERMITICITY_TOL: f64 = 1e-12;

/// Post-selection probabilities below this floor are treated as impossible.
const POST_SELECTION_FLOOR: f64 = 1e-15;

/// Norm tolerance for states entering projective operations.
const NORM_TOL: f64 = 1e-6;

/// Failure modes of the Fock engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FockError {
    #[error("truncation dimension {dim} is below the minimum {MIN_DIM}")]
    DimensionTooSmall { dim: usize },
    #[error(
        "population {tail_mass:.3e} in the top {TAIL_LEVELS} Fock levels exceeds \
         {TAIL_TOLERANCE:.0e}; the truncated basis no longer contains the state"
    )]
    TruncationOverflow { tail_mass: f64 },
    #[error("post-selection probability {probability:.3e} is below {POST_SELECTION_FLOOR:.0e}")]
    PostSelectionFailed { probability: f64 },
    #[error("matrix is not Hermitian: max |H − H†| element = {max_asymmetry:.3e}")]
    NotHermitian { max_asymmetry: f64 },
    #[error("evolution time {t} must be finite and non-negative")]
    InvalidDuration { t: f64 },
    #[error("invalid Hamiltonian specification: {reason}")]
    InvalidHamiltonian { reason: String },
    #[error("invalid state: {reason}")]
    InvalidState { reason: String },
}

// ── Joint state ─────────────────────────────────────────────────────────────

/// Normalized qubit ⊗ oscillator state. Amplitude layout: index q·N + n with
/// q = 0 for |↓⟩ and q = 1 for |↑⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub amplitudes: DVector<Complex64>,
    pub truncation_dim: usize,
}

impl JointState {
    /// Wraps an amplitude vector, checking the layout and normalization.
    pub fn new(amplitudes: DVector<Complex64>, truncation_dim: usize) -> Result<Self, FockError> {
        if truncation_dim < MIN_DIM {
            return Err(FockError::DimensionTooSmall {
                dim: truncation_dim,
            });
        }
        if amplitudes.len() != 2 * truncation_dim {
            return Err(FockError::InvalidState {
                reason: format!(
                    "amplitude vector has length {}, expected 2×{truncation_dim}",
                    amplitudes.len()
                ),
            });
        }
        let state = Self {
            amplitudes,
            truncation_dim,
        };
        let norm = state.amplitudes.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
            return Err(FockError::InvalidState {
                reason: format!("state norm {norm} is not 1"),
            });
        }
        Ok(state)
    }

    /// Amplitudes of the |↓⟩ ⊗ oscillator block.
    pub fn down_block(&self) -> DVector<Complex64> {
        self.amplitudes.rows(0, self.truncation_dim).into_owned()
    }

    /// Amplitudes of the |↑⟩ ⊗ oscillator block.
    pub fn up_block(&self) -> DVector<Complex64> {
        self.amplitudes
            .rows(self.truncation_dim, self.truncation_dim)
            .into_owned()
    }

    /// Population in the top [`TAIL_LEVELS`] Fock levels of both branches —
    /// the truncation-health indicator.
    pub fn tail_mass(&self) -> f64 {
        let n = self.truncation_dim;
        let mut mass = 0.0;
        for level in n - TAIL_LEVELS..n {
            mass += self.amplitudes[level].norm_sqr();
            mass += self.amplitudes[n + level].norm_sqr();
        }
        mass
    }
}

/// |↓, n = 0⟩: the protocol's initial state.
pub fn ground_joint_state(truncation_dim: usize) -> Result<JointState, FockError> {
    if truncation_dim < MIN_DIM {
        return Err(FockError::DimensionTooSmall {
            dim: truncation_dim,
        });
    }
    let mut amplitudes = DVector::zeros(2 * truncation_dim);
    amplitudes[0] = Complex64::new(1.0, 0.0);
    Ok(JointState {
        amplitudes,
        truncation_dim,
    })
}

/// Coherent state |α⟩ in the truncated number basis:
/// c_n = e^(−|α|²/2) αⁿ/√n!. The truncation error is the Poisson tail above
/// `dim`, negligible for |α|² ≲ dim/2.
pub fn coherent_state(alpha: Complex64, dim: usize) -> DVector<Complex64> {
    let mut c = DVector::zeros(dim);
    c[0] = Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 1..dim {
        c[n] = c[n - 1] * alpha / (n as f64).sqrt();
    }
    c
}

// ── Hamiltonians ────────────────────────────────────────────────────────────

/// Laser-drive Hamiltonian specification. All phases are in radians (reduced
/// mod 2π when the matrix is built), `rabi` is the carrier Rabi frequency Ω
/// in rad/s, and `lamb_dicke` is the sideband coupling scale η.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HamiltonianSpec {
    /// H/ħ = (Ω/2)(σ̂⁺e^{iφ} + σ̂⁻e^{−iφ}): qubit rotations, no motion.
    Carrier { phase: f64, rabi: f64 },
    /// H/ħ = (iηΩ/2)(â σ̂⁺e^{iφ} − â†σ̂⁻e^{−iφ}): |↓,n⟩ ↔ |↑,n−1⟩.
    RedSideband {
        phase: f64,
        rabi: f64,
        lamb_dicke: f64,
    },
    /// H/ħ = (iηΩ/2)(â†σ̂⁺e^{iφ} − â σ̂⁻e^{−iφ}): |↓,n⟩ ↔ |↑,n+1⟩.
    BlueSideband {
        phase: f64,
        rabi: f64,
        lamb_dicke: f64,
    },
    /// Simultaneous red and blue drive at equal strength. With sum and
    /// difference phases φ± = (φ_red ± φ_blue)/2 this is
    /// H/ħ = (ηΩ/2)[σ̂ₓ sin φ₊ + σ̂_y cos φ₊] ⊗ [i(â†−â) sin φ₋ − (â†+â) cos φ₋],
    /// the spin-dependent force family: (φ₊, φ₋) = (π/2, π/2) is the
    /// impulsive coupling ∝ σ̂ₓp̂, while φ₋ = π (or 0) gives ±σ̂ₓẑ couplings.
    Bichromatic {
        phase_red: f64,
        phase_blue: f64,
        rabi: f64,
        lamb_dicke: f64,
    },
}

impl HamiltonianSpec {
    /// Bichromatic drive specified by the sum/difference phases
    /// φ± = (φ_red ± φ_blue)/2.
    pub fn bichromatic_from_sum_diff(
        phi_plus: f64,
        phi_minus: f64,
        rabi: f64,
        lamb_dicke: f64,
    ) -> Self {
        Self::Bichromatic {
            phase_red: phi_plus + phi_minus,
            phase_blue: phi_plus - phi_minus,
            rabi,
            lamb_dicke,
        }
    }

    /// Sum phase φ₊ of a bichromatic drive.
    pub fn phi_plus(&self) -> Option<f64> {
        match self {
            Self::Bichromatic {
                phase_red,
                phase_blue,
                ..
            } => Some(0.5 * (phase_red + phase_blue)),
            _ => None,
        }
    }

    /// Difference phase φ₋ of a bichromatic drive.
    pub fn phi_minus(&self) -> Option<f64> {
        match self {
            Self::Bichromatic {
                phase_red,
                phase_blue,
                ..
            } => Some(0.5 * (phase_red - phase_blue)),
            _ => None,
        }
    }

    fn rabi(&self) -> f64 {
        match *self {
            Self::Carrier { rabi, .. }
            | Self::RedSideband { rabi, .. }
            | Self::BlueSideband { rabi, .. }
            | Self::Bichromatic { rabi, .. } => rabi,
        }
    }

    fn lamb_dicke(&self) -> Option<f64> {
        match *self {
            Self::Carrier { .. } => None,
            Self::RedSideband { lamb_dicke, .. }
            | Self::BlueSideband { lamb_dicke, .. }
            | Self::Bichromatic { lamb_dicke, .. } => Some(lamb_dicke),
        }
    }

    pub fn validate(&self) -> Result<(), FockError> {
        let rabi = self.rabi();
        if !rabi.is_finite() || rabi <= 0.0 {
            return Err(FockError::InvalidHamiltonian {
                reason: format!("Rabi frequency {rabi} must be positive and finite"),
            });
        }
        if let Some(eta) = self.lamb_dicke() {
            if !eta.is_finite() || eta <= 0.0 || eta >= ETA_MAX {
                return Err(FockError::InvalidHamiltonian {
                    reason: format!(
                        "Lamb–Dicke parameter {eta} outside the linearized range (0, {ETA_MAX})"
                    ),
                });
            }
        }
        let phases_finite = match *self {
            Self::Carrier { phase, .. }
            | Self::RedSideband { phase, .. }
            | Self::BlueSideband { phase, .. } => phase.is_finite(),
            Self::Bichromatic {
                phase_red,
                phase_blue,
                ..
            } => phase_red.is_finite() && phase_blue.is_finite(),
        };
        if !phases_finite {
            return Err(FockError::InvalidHamiltonian {
                reason: "phases must be finite".to_string(),
            });
        }
        Ok(())
    }
}

/// Annihilation operator on the truncated number basis: a[n−1, n] = √n.
fn annihilation(dim: usize) -> DMatrix<Complex64> {
    let mut a = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// σ̂⁺ = |↑⟩⟨↓| in the (↓, ↑) ordering.
fn sigma_plus() -> DMatrix<Complex64> {
    let mut s = DMatrix::zeros(2, 2);
    s[(1, 0)] = Complex64::new(1.0, 0.0);
    s
}

/// Builds H/ħ for a drive specification on a `2·dim`-dimensional joint space.
/// The result is Hermitian to machine precision by construction.
pub fn build_hamiltonian(
    spec: &HamiltonianSpec,
    dim: usize,
) -> Result<DMatrix<Complex64>, FockError> {
    if dim < MIN_DIM {
        return Err(FockError::DimensionTooSmall { dim });
    }
    spec.validate()?;

    let splus = sigma_plus();
    let a = annihilation(dim);
    let adag = a.adjoint();
    let phase = |phi: f64| Complex64::from_polar(1.0, phi.rem_euclid(2.0 * PI));

    // Each drive is (coefficient × raising term) + its exact adjoint, so the
    // assembled matrix is Hermitian to the last bit.
    let h = match *spec {
        HamiltonianSpec::Carrier { phase: phi, rabi } => {
            let coeff = phase(phi) * Complex64::new(0.5 * rabi, 0.0);
            let raise = splus.kronecker(&DMatrix::identity(dim, dim));
            let term = raise * coeff;
            let adj = term.adjoint();
            term + adj
        }
        HamiltonianSpec::RedSideband {
            phase: phi,
            rabi,
            lamb_dicke,
        } => {
            let coeff = Complex64::new(0.0, 0.5 * lamb_dicke * rabi) * phase(phi);
            let term = splus.kronecker(&a) * coeff;
            let adj = term.adjoint();
            term + adj
        }
        HamiltonianSpec::BlueSideband {
            phase: phi,
            rabi,
            lamb_dicke,
        } => {
            let coeff = Complex64::new(0.0, 0.5 * lamb_dicke * rabi) * phase(phi);
            let term = splus.kronecker(&adag) * coeff;
            let adj = term.adjoint();
            term + adj
        }
        HamiltonianSpec::Bichromatic {
            phase_red,
            phase_blue,
            rabi,
            lamb_dicke,
        } => {
            let scale = Complex64::new(0.0, 0.5 * lamb_dicke * rabi);
            let red = splus.kronecker(&a) * (scale * phase(phase_red));
            let blue = splus.kronecker(&adag) * (scale * phase(phase_blue));
            let sum = red + blue;
            let adj = sum.adjoint();
            sum + adj
        }
    };
    Ok(h)
}

// ── Evolution ───────────────────────────────────────────────────────────────

/// Cached Hermitian eigendecomposition H/ħ = V Λ V†; one factorization serves
/// every evolution time via ψ(t) = V e^{−iΛt} V†ψ(0).
pub struct Propagator {
    joint_dim: usize,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<Complex64>,
}

impl Propagator {
    pub fn new(hamiltonian: &DMatrix<Complex64>) -> Result<Self, FockError> {
        let (rows, cols) = hamiltonian.shape();
        if rows != cols || rows < 2 * MIN_DIM || rows % 2 != 0 {
            return Err(FockError::InvalidHamiltonian {
                reason: format!("expected a square joint-space matrix, got {rows}×{cols}"),
            });
        }
        let mut max_asymmetry: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..rows {
            for j in i..cols {
                let delta = (hamiltonian[(i, j)] - hamiltonian[(j, i)].conj()).norm();
                max_asymmetry = max_asymmetry.max(delta);
                scale = scale.max(hamiltonian[(i, j)].norm());
            }
        }
        if max_asymmetry > HERMITICITY_TOL * scale.max(1.0) {
            return Err(FockError::NotHermitian { max_asymmetry });
        }

        // Symmetrize the round-off before factorizing.
        let symmetric = (hamiltonian + hamiltonian.adjoint()) * Complex64::new(0.5, 0.0);
        let eigen = symmetric.symmetric_eigen();
        Ok(Self {
            joint_dim: rows,
            eigenvalues: eigen.eigenvalues,
            eigenvectors: eigen.eigenvectors,
        })
    }

    /// Evolves a state for duration `t` (seconds, with eigenvalues in rad/s)
    /// and checks that the truncated basis still contains it.
    pub fn apply(&self, state: &JointState, t: f64) -> Result<JointState, FockError> {
        if !t.is_finite() || t < 0.0 {
            return Err(FockError::InvalidDuration { t });
        }
        if state.amplitudes.len() != self.joint_dim {
            return Err(FockError::InvalidState {
                reason: format!(
                    "state dimension {} does not match the propagator's {}",
                    state.amplitudes.len(),
                    self.joint_dim
                ),
            });
        }
        let mut modal = self.eigenvectors.ad_mul(&state.amplitudes);
        for (i, amplitude) in modal.iter_mut().enumerate() {
            *amplitude *= Complex64::from_polar(1.0, -self.eigenvalues[i] * t);
        }
        let evolved = JointState {
            amplitudes: &self.eigenvectors * modal,
            truncation_dim: state.truncation_dim,
        };
        let tail = evolved.tail_mass();
        if tail > TAIL_TOLERANCE {
            return Err(FockError::TruncationOverflow { tail_mass: tail });
        }
        Ok(evolved)
    }
}

/// One-shot evolution: factorize and apply. Prefer a cached [`Propagator`]
/// when evolving under the same Hamiltonian repeatedly.
pub fn evolve(
    state: &JointState,
    hamiltonian: &DMatrix<Complex64>,
    t: f64,
) -> Result<JointState, FockError> {
    Propagator::new(hamiltonian)?.apply(state, t)
}

// ── Qubit operations ────────────────────────────────────────────────────────

/// Rotation about the Bloch y axis: R_y(angle) = e^{−i·angle·σ̂_y/2}, acting
/// as (a_↓, a_↑) → (c a_↓ + s a_↑, −s a_↓ + c a_↑) with c = cos(angle/2),
/// s = sin(angle/2). The angle must be finite.
pub fn rotate_qubit_y(state: &JointState, angle: f64) -> JointState {
    assert!(angle.is_finite(), "rotation angle must be finite");
    let (s, c) = (0.5 * angle).sin_cos();
    let n = state.truncation_dim;
    let mut amplitudes = DVector::zeros(2 * n);
    for i in 0..n {
        let down = state.amplitudes[i];
        let up = state.amplitudes[n + i];
        amplitudes[i] = down * c + up * s;
        amplitudes[n + i] = -down * s + up * c;
    }
    JointState {
        amplitudes,
        truncation_dim: n,
    }
}

/// Projects onto the post-selection state cos θ|↑⟩ − sin θ|↓⟩ and returns the
/// normalized motional branch plus the selection probability.
pub fn post_select(state: &JointState, theta: f64) -> Result<(DVector<Complex64>, f64), FockError> {
    if !theta.is_finite() {
        return Err(FockError::InvalidState {
            reason: format!("post-selection angle {theta} must be finite"),
        });
    }
    let norm = state.amplitudes.norm();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(FockError::InvalidState {
            reason: format!("state norm {norm} is not 1"),
        });
    }
    let (s, c) = theta.sin_cos();
    let n = state.truncation_dim;
    let mut branch = DVector::zeros(n);
    for i in 0..n {
        branch[i] = state.amplitudes[n + i] * c - state.amplitudes[i] * s;
    }
    let probability = branch.norm_squared();
    if probability < POST_SELECTION_FLOOR {
        return Err(FockError::PostSelectionFailed { probability });
    }
    let inv = Complex64::new(1.0 / probability.sqrt(), 0.0);
    Ok((branch * inv, probability))
}

/// ⟨ẑ⟩ of a normalized motional state, in length units:
/// ẑ = Δ_z(â + â†) ⟹ ⟨ẑ⟩ = Δ_z Σₙ 2 Re(c̄ₙ c_{n+1}) √(n+1).
pub fn expectation_z(motional: &DVector<Complex64>, delta_z: f64) -> f64 {
    let mut acc = 0.0;
    for n in 0..motional.len() - 1 {
        acc += 2.0 * (motional[n].conj() * motional[n + 1]).re * ((n + 1) as f64).sqrt();
    }
    delta_z * acc
}

// ── Protocol ────────────────────────────────────────────────────────────────

/// Reusable protocol engine: one eigendecomposition of the impulsive-coupling
/// Hamiltonian serves every (θ, Γ) working point.
pub struct FockEngine {
    truncation_dim: usize,
    eta_omega: f64,
    propagator: Propagator,
}

impl FockEngine {
    /// Builds the engine at the preset laser parameters. Protocol outputs
    /// depend on the configuration only through Γ (coupling) and θ
    /// (post-selection), so the preset drive loses no generality.
    pub fn new(truncation_dim: usize) -> Result<Self, FockError> {
        let spec = HamiltonianSpec::bichromatic_from_sum_diff(
            0.5 * PI,
            0.5 * PI,
            OMEGA_RABI_PRESET,
            ETA_PRESET,
        );
        let hamiltonian = build_hamiltonian(&spec, truncation_dim)?;
        Ok(Self {
            truncation_dim,
            eta_omega: ETA_PRESET * OMEGA_RABI_PRESET,
            propagator: Propagator::new(&hamiltonian)?,
        })
    }

    pub fn truncation_dim(&self) -> usize {
        self.truncation_dim
    }

    /// Runs the full protocol: |↓, 0⟩ → impulsive coupling for the duration
    /// realizing Γ → R_y(2θ) → project |↑⟩. Returns the normalized motional
    /// branch and the post-selection probability.
    pub fn run(&self, config: &MeasurementConfig) -> Result<(DVector<Complex64>, f64), FockError> {
        let duration = config.gamma_big / self.eta_omega;
        let ground = ground_joint_state(self.truncation_dim)?;
        let coupled = self.propagator.apply(&ground, duration)?;
        let rotated = rotate_qubit_y(&coupled, 2.0 * config.theta);
        post_select(&rotated, 0.0)
    }
}

/// One-shot protocol run. Prefer [`FockEngine`] for sweeps.
pub fn run_protocol(
    config: &MeasurementConfig,
    truncation_dim: usize,
) -> Result<(DVector<Complex64>, f64), FockError> {
    FockEngine::new(truncation_dim)?.run(config)
}

//! Characteristic-function tomography of the post-selected pointer state.
//!
//! After the measurement protocol leaves the motion in the conditioned state
//! Φ, the qubit is re-prepared and coupled through the spin-dependent force
//! ±(ηΩ/2)σ̂ₓ(â+â†) for a time realizing the probe wavenumber k = ηΩt (in
//! units of 1/Δ_z). The qubit Bloch vector then rotates about x by the
//! operator angle kẑ/Δ_z, so a subsequent σ̂_z readout measures
//!
//!   ⟨σ̂_z⟩ = ⟨cos kẑ⟩   with the qubit prepared in |↑⟩,
//!   ⟨σ̂_z⟩ = ⟨sin kẑ⟩   with the qubit prepared in the σ̂_y = +1 state —
//!
//! the real and imaginary parts of the characteristic function χ(k). Finite
//! experiments draw binomially distributed outcome counts from those
//! probabilities; everything downstream (pointer-shift extraction, density
//! reconstruction) consumes only the recorded counts, exactly as a real
//! experiment would.
//!
//! Two inversions are provided: a direct Fourier quadrature of χ(k), which is
//! linear and unbiased but noisy and not a density, and a simplex-constrained
//! least-squares fit (non-negative, unit mass, curvature-regularized) solved
//! as a quadratic program.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{MeasurementConfig, ETA_PRESET, OMEGA_RABI_PRESET};
use crate::fit::{quadratic_f_test, weighted_polyfit, FitError};
use crate::fock::{
    build_hamiltonian, FockEngine, FockError, HamiltonianSpec, JointState, Propagator,
};
use crate::qp::solve_simplex_qp;

/// Largest probe wavenumber (units of 1/Δ_z) the drive is allowed to realize;
/// beyond this the probe displacement itself strains the truncated basis.
pub const K_MAX: f64 = 6.0;

/// Fourier inversion needs the characteristic function sampled at least this
/// far out, or the quadrature misses most of the signal bandwidth.
const MIN_FOURIER_K_MAX: f64 = 2.0;

/// Minimum number of usable records for the least-squares reconstruction.
const MIN_LS_RECORDS: usize = 8;

/// Regularizer in the exact-record variance weights 1/(1 − g² + ε): keeps
/// the weight of near-deterministic records (|g| → 1) finite. Finite-shot
/// records floor the sampled variance at 4/shots instead (see
/// [`TomographyRecord::weight`]).
const WEIGHT_EPS: f64 = 1e-6;

/// Curvature penalty λ_s multiplying ∫(ρ″)²dz in the least-squares objective.
const CURVATURE_WEIGHT: f64 = 3e-2;

/// Relative Tikhonov ridge added to the QP Hessian.
const RIDGE_SCALE: f64 = 1e-12;

/// The QP's projected-gradient certificate must be below this for the
/// reconstruction to be accepted.
const KKT_TOL: f64 = 1e-8;

/// Significance level of the linearity F-test in sampled mean extraction.
const F_TEST_ALPHA: f64 = 0.01;

/// Mean extraction only trusts the small-k linearization this far out.
const MEAN_FIT_K_LIMIT: f64 = 0.3;

/// Absolute tolerance when checking that a fit grid is symmetric about 0.
const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TomographyError {
    #[error("protocol simulation failed: {0}")]
    Engine(#[from] FockError),
    #[error("probe wavenumber k = {k} is outside the supported range (|k| ≤ {K_MAX})")]
    InvalidK { k: f64 },
    #[error("dataset lacks a σ_z/σ_y pair at k = {k}")]
    MissingBasisPair { k: f64 },
    #[error(
        "characteristic-function coverage insufficient: k_max = {k_max} < {MIN_FOURIER_K_MAX}"
    )]
    InsufficientKRange { k_max: f64 },
    #[error("invalid grid: {reason}")]
    InvalidGrid { reason: String },
    #[error("least-squares system underdetermined: {rows} usable records, need {MIN_LS_RECORDS}")]
    RankDeficient { rows: usize, cols: usize },
    #[error("reconstruction solver failed: {detail}")]
    SolverFailure { detail: String },
    #[error(
        "characteristic function is not linear over the fit window \
         (quadratic-term p-value {p_value:.3e} < {F_TEST_ALPHA})"
    )]
    LinearRegimeViolated { p_value: f64 },
    #[error("shot count must be positive")]
    InvalidShots,
    #[error("invalid input: {reason}")]
    InvalidInput { reason: String },
}

impl From<FitError> for TomographyError {
    fn from(err: FitError) -> Self {
        match err {
            FitError::RankDeficient => TomographyError::InvalidGrid {
                reason: "fit grid cannot determine the polynomial coefficients".to_string(),
            },
            FitError::BadInput(reason) => TomographyError::InvalidInput { reason },
        }
    }
}

// ── Records and datasets ────────────────────────────────────────────────────

/// Qubit preparation/readout basis of a probe record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// Prepare |↑⟩, measure σ̂_z: estimates ⟨cos kẑ⟩.
    SigmaZ,
    /// Prepare the σ̂_y = +1 state, measure σ̂_z: estimates ⟨sin kẑ⟩.
    SigmaY,
}

/// Number of experimental repetitions per record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotCount {
    /// No sampling: record the exact expectation value.
    Exact,
    /// Binomial sampling with this many repetitions.
    Finite(u64),
}

/// One tomography setting: probe wavenumber, basis, and either the exact
/// expectation (`g = Some`, `shots = 0`) or the observed counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TomographyRecord {
    /// Probe wavenumber in units of 1/Δ_z.
    pub k: f64,
    pub basis: Basis,
    /// Repetitions; 0 for exact records.
    pub shots: u64,
    /// Number of |↑⟩ outcomes among the shots.
    pub ups: u64,
    /// Exact expectation value, present only for noiseless records.
    pub g: Option<f64>,
}

impl TomographyRecord {
    /// Best available estimate of ⟨σ̂_z⟩ for this record.
    pub fn estimate(&self) -> f64 {
        match self.g {
            Some(g) => g,
            None => 2.0 * self.ups as f64 / self.shots as f64 - 1.0,
        }
    }

    /// Inverse-variance weight: Var(ĝ) = (1 − g²)/shots for binomial counts.
    /// The sampled variance is floored at its Laplace-smoothed boundary
    /// value 4/shots, so a unanimous record (ĝ = ±1, raw variance estimate
    /// zero) carries large but finite weight instead of dominating every
    /// other record; exact records use the same shape with unit numerator
    /// and a small floor so relative weighting is preserved.
    fn weight(&self) -> f64 {
        let g = self.estimate();
        match self.g {
            Some(_) => 1.0 / (1.0 - g * g + WEIGHT_EPS),
            None => {
                let shots = self.shots as f64;
                shots / (1.0 - g * g).max(4.0 / shots)
            }
        }
    }
}

/// A complete simulated tomography run on one working point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyDataset {
    pub config: MeasurementConfig,
    pub shot_count: ShotCount,
    pub seed: u64,
    /// All σ_z records in probe-grid order, then all σ_y records; the record
    /// index doubles as the RNG stream, so the layout is part of the
    /// reproducibility contract.
    pub records: Vec<TomographyRecord>,
}

/// Pointer-shift estimate from the small-k slope of ⟨sin kẑ⟩.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanZEstimate {
    /// ⟨ẑ⟩ in the configuration's length units.
    pub mean_z: f64,
    /// Propagated slope standard error (0 for exact records).
    pub std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReconstructionMethod {
    Fourier,
    LeastSquares,
}

/// Reconstructed position density on a grid (natural units z/Δ_z).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub z_grid: Vec<f64>,
    pub density: Vec<f64>,
    pub method: ReconstructionMethod,
    /// Weighted RMS misfit between the recorded values and the
    /// characteristic function of the reconstruction.
    pub residual: f64,
    /// ∫ max(−ρ, 0) dz: mass of the negative excursions. Zero by construction
    /// for the least-squares method; a noise indicator for Fourier.
    pub negative_excursion: f64,
}

// ── Default grids ───────────────────────────────────────────────────────────

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "linspace needs at least two points");
    let step = (b - a) / (n - 1) as f64;
    let mut values: Vec<f64> = (0..n).map(|i| a + step * i as f64).collect();
    values[n - 1] = b;
    values
}

/// Default probe grid for density reconstruction: 101 wavenumbers covering
/// [0, 5/Δ_z]. The spacing (0.05) resolves interference fringes out to
/// displacements well beyond the catalogued strong-coupling points, and the
/// reach covers the sub-width features of the cat state.
pub fn default_k_grid() -> Vec<f64> {
    linspace(0.0, 5.0, 101)
}

/// Default reconstruction grid: 201 points spanning ±(Γ + 5) natural widths —
/// both displaced branches plus five standard deviations of tail.
pub fn default_z_grid(gamma_big: f64) -> Vec<f64> {
    let span = gamma_big + 5.0;
    linspace(-span, span, 201)
}

/// Default symmetric wavenumber window for mean extraction: 21 points with
/// |k| ≤ cap/(1 + Γ). Sampled runs use cap = 0.3, balancing slope variance
/// against the k³ term of ⟨sin kẑ⟩ (odd, so it biases the slope but never
/// trips the even-term F-test). Exact runs use cap = 1e−3, where the cubic
/// bias (∝ Γ³K² relative) is below 1e−6 even at the strongest couplings.
pub fn default_fit_grid(gamma_big: f64, shots: ShotCount) -> Vec<f64> {
    let cap = match shots {
        ShotCount::Exact => 1e-3,
        ShotCount::Finite(_) => MEAN_FIT_K_LIMIT,
    };
    let half = cap / (1.0 + gamma_big.max(0.0));
    let n = 21;
    let mut grid = linspace(-half, half, n);
    // Make the symmetry exact in floating point.
    for i in 0..n / 2 {
        grid[n - 1 - i] = -grid[i];
    }
    grid[n / 2] = 0.0;
    grid
}

// ── Engine ──────────────────────────────────────────────────────────────────

/// Simulated tomography apparatus: the measurement protocol plus the two
/// spin-dependent-force probes (±ẑ generators), each with a cached
/// eigendecomposition.
pub struct TomographyEngine {
    fock: FockEngine,
    dim: usize,
    eta_omega: f64,
    plus_z: Propagator,
    minus_z: Propagator,
}

impl TomographyEngine {
    pub fn new(truncation_dim: usize) -> Result<Self, TomographyError> {
        let fock = FockEngine::new(truncation_dim)?;
        // (φ₊, φ₋) = (π/2, π) and (π/2, 0): ±(ηΩ/2) σ̂ₓ(â + â†).
        let plus_spec = HamiltonianSpec::bichromatic_from_sum_diff(
            0.5 * std::f64::consts::PI,
            std::f64::consts::PI,
            OMEGA_RABI_PRESET,
            ETA_PRESET,
        );
        let minus_spec = HamiltonianSpec::bichromatic_from_sum_diff(
            0.5 * std::f64::consts::PI,
            0.0,
            OMEGA_RABI_PRESET,
            ETA_PRESET,
        );
        let plus_z = Propagator::new(&build_hamiltonian(&plus_spec, truncation_dim)?)?;
        let minus_z = Propagator::new(&build_hamiltonian(&minus_spec, truncation_dim)?)?;
        Ok(Self {
            fock,
            dim: truncation_dim,
            eta_omega: ETA_PRESET * OMEGA_RABI_PRESET,
            plus_z,
            minus_z,
        })
    }

    pub fn truncation_dim(&self) -> usize {
        self.dim
    }

    /// Runs the measurement protocol once: the conditioned motional state and
    /// the post-selection probability.
    pub fn protocol_state(
        &self,
        config: &MeasurementConfig,
    ) -> Result<(DVector<Complex64>, f64), TomographyError> {
        Ok(self.fock.run(config)?)
    }

    /// Exact probe outcome ⟨σ̂_z⟩ for a prepared motional state: ⟨cos kẑ⟩ in
    /// the σ_z basis, ⟨sin kẑ⟩ in the σ_y basis. Negative k runs the
    /// opposite-sign force generator.
    pub fn probe(
        &self,
        motional: &DVector<Complex64>,
        k: f64,
        basis: Basis,
    ) -> Result<f64, TomographyError> {
        if !k.is_finite() || k.abs() > K_MAX {
            return Err(TomographyError::InvalidK { k });
        }
        if motional.len() != self.dim {
            return Err(TomographyError::InvalidInput {
                reason: format!(
                    "motional state has dimension {}, engine expects {}",
                    motional.len(),
                    self.dim
                ),
            });
        }

        let n = self.dim;
        let mut amplitudes = DVector::zeros(2 * n);
        match basis {
            Basis::SigmaZ => {
                for i in 0..n {
                    amplitudes[n + i] = motional[i];
                }
            }
            Basis::SigmaY => {
                let inv_sqrt2 = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                let minus_i = Complex64::new(0.0, -1.0);
                for i in 0..n {
                    amplitudes[i] = motional[i] * inv_sqrt2;
                    amplitudes[n + i] = motional[i] * inv_sqrt2 * minus_i;
                }
            }
        }
        let prepared = JointState::new(amplitudes, n)?;

        let propagator = if k >= 0.0 {
            &self.plus_z
        } else {
            &self.minus_z
        };
        let evolved = propagator.apply(&prepared, k.abs() / self.eta_omega)?;

        let mut sigma_z = 0.0;
        for i in 0..n {
            sigma_z += evolved.amplitudes[n + i].norm_sqr() - evolved.amplitudes[i].norm_sqr();
        }
        Ok(sigma_z)
    }

    /// Simulates a full tomography run: probes every wavenumber in both bases
    /// (all σ_z records first, then all σ_y), recording exact values or
    /// binomially sampled counts. Record r uses RNG stream r of a ChaCha8
    /// generator seeded with `seed`, so datasets are reproducible and
    /// records statistically independent.
    pub fn sample_dataset(
        &self,
        config: &MeasurementConfig,
        k_grid: &[f64],
        shot_count: ShotCount,
        seed: u64,
    ) -> Result<TomographyDataset, TomographyError> {
        if let ShotCount::Finite(0) = shot_count {
            return Err(TomographyError::InvalidShots);
        }
        if k_grid.is_empty() {
            return Err(TomographyError::InvalidGrid {
                reason: "empty probe grid".to_string(),
            });
        }
        for &k in k_grid {
            if !k.is_finite() || !(0.0..=K_MAX).contains(&k) {
                return Err(TomographyError::InvalidK { k });
            }
        }

        let (motional, _) = self.protocol_state(config)?;
        let base_rng = ChaCha8Rng::seed_from_u64(seed);

        let mut records = Vec::with_capacity(2 * k_grid.len());
        for basis in [Basis::SigmaZ, Basis::SigmaY] {
            for &k in k_grid {
                let g = self.probe(&motional, k, basis)?;
                let record = match shot_count {
                    ShotCount::Exact => TomographyRecord {
                        k,
                        basis,
                        shots: 0,
                        ups: 0,
                        g: Some(g),
                    },
                    ShotCount::Finite(shots) => {
                        let stream = records.len() as u64;
                        let mut rng = base_rng.clone();
                        rng.set_stream(stream);
                        let p = (0.5 * (1.0 + g)).clamp(0.0, 1.0);
                        let ups = Binomial::new(shots, p)
                            .expect("valid binomial parameters")
                            .sample(&mut rng);
                        TomographyRecord {
                            k,
                            basis,
                            shots,
                            ups,
                            g: None,
                        }
                    }
                };
                records.push(record);
            }
        }

        Ok(TomographyDataset {
            config: *config,
            shot_count,
            seed,
            records,
        })
    }

    /// Estimates the conditioned pointer shift ⟨ẑ⟩ from the small-k slope of
    /// the odd characteristic-function component ⟨sin kẑ⟩ = ⟨ẑ/Δ_z⟩k + O(k³).
    ///
    /// The fit grid must be symmetric about 0 with |k| ≤ 0.3 (the window
    /// where the linearization is trustworthy). Sampled runs are guarded by a
    /// nested-model F-test: if a quadratic term improves the fit at the 1%
    /// level, something inconsistent with the linear regime is present and
    /// the extraction is refused rather than silently biased.
    pub fn extract_mean_z(
        &self,
        config: &MeasurementConfig,
        fit_grid: &[f64],
        shot_count: ShotCount,
        seed: u64,
    ) -> Result<MeanZEstimate, TomographyError> {
        if let ShotCount::Finite(0) = shot_count {
            return Err(TomographyError::InvalidShots);
        }
        let n = fit_grid.len();
        if n < 4 {
            return Err(TomographyError::InvalidGrid {
                reason: format!("fit grid has {n} points; the F-test needs at least 4"),
            });
        }
        for &k in fit_grid {
            if !k.is_finite() || k.abs() > MEAN_FIT_K_LIMIT {
                return Err(TomographyError::InvalidGrid {
                    reason: format!(
                        "fit wavenumber {k} outside the linear window |k| ≤ {MEAN_FIT_K_LIMIT}"
                    ),
                });
            }
        }
        let mut sorted: Vec<f64> = fit_grid.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for i in 0..n {
            if (sorted[i] + sorted[n - 1 - i]).abs() > SYMMETRY_TOL {
                return Err(TomographyError::InvalidGrid {
                    reason: "fit grid must be symmetric about k = 0".to_string(),
                });
            }
        }

        let (motional, _) = self.protocol_state(config)?;
        let base_rng = ChaCha8Rng::seed_from_u64(seed);

        let mut values = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for (stream, &k) in fit_grid.iter().enumerate() {
            let g = self.probe(&motional, k, Basis::SigmaY)?;
            match shot_count {
                ShotCount::Exact => {
                    values.push(g);
                    weights.push(1.0 / (1.0 - g * g + WEIGHT_EPS));
                }
                ShotCount::Finite(shots) => {
                    let mut rng = base_rng.clone();
                    rng.set_stream(stream as u64);
                    let p = (0.5 * (1.0 + g)).clamp(0.0, 1.0);
                    let ups = Binomial::new(shots, p)
                        .expect("valid binomial parameters")
                        .sample(&mut rng);
                    let estimate = 2.0 * ups as f64 / shots as f64 - 1.0;
                    values.push(estimate);
                    // Same variance floor as TomographyRecord::weight.
                    let spread = (1.0 - estimate * estimate).max(4.0 / shots as f64);
                    weights.push(shots as f64 / spread);
                }
            }
        }

        if let ShotCount::Finite(_) = shot_count {
            let p_value = quadratic_f_test(fit_grid, &values, &weights)?;
            if p_value < F_TEST_ALPHA {
                return Err(TomographyError::LinearRegimeViolated { p_value });
            }
        }

        let fit = weighted_polyfit(fit_grid, &values, &weights, 1)?;
        let slope = fit.coefficients[1];
        let std_error = match shot_count {
            ShotCount::Exact => 0.0,
            ShotCount::Finite(_) => fit.covariance[(1, 1)].max(0.0).sqrt() * config.delta_z,
        };
        Ok(MeanZEstimate {
            mean_z: slope * config.delta_z,
            std_error,
        })
    }
}

// ── Reconstruction ──────────────────────────────────────────────────────────

fn check_z_grid(z_grid: &[f64]) -> Result<(), TomographyError> {
    if z_grid.len() < 2 {
        return Err(TomographyError::InvalidGrid {
            reason: "reconstruction grid needs at least two points".to_string(),
        });
    }
    if z_grid.iter().any(|z| !z.is_finite()) {
        return Err(TomographyError::InvalidGrid {
            reason: "reconstruction grid must be finite".to_string(),
        });
    }
    if z_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(TomographyError::InvalidGrid {
            reason: "reconstruction grid must be strictly ascending".to_string(),
        });
    }
    Ok(())
}

fn trapz(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// Model characteristic-function value of a gridded density (trapezoid rule).
fn model_value(record: &TomographyRecord, z_grid: &[f64], density: &[f64]) -> f64 {
    let integrand: Vec<f64> = z_grid
        .iter()
        .zip(density)
        .map(|(&z, &rho)| match record.basis {
            Basis::SigmaZ => (record.k * z).cos() * rho,
            Basis::SigmaY => (record.k * z).sin() * rho,
        })
        .collect();
    trapz(z_grid, &integrand)
}

fn weighted_rms_misfit(records: &[TomographyRecord], z_grid: &[f64], density: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for record in records {
        let w = record.weight();
        let delta = record.estimate() - model_value(record, z_grid, density);
        num += w * delta * delta;
        den += w;
    }
    if den > 0.0 {
        (num / den).sqrt()
    } else {
        0.0
    }
}

/// Direct Fourier inversion of the characteristic function:
/// ρ(z) = (1/π)∫₀^{k_max} [⟨cos kẑ⟩cos kz + ⟨sin kẑ⟩sin kz] dk by trapezoid
/// over the recorded wavenumbers. Linear and unbiased, but band-limited and
/// free to go negative under sampling noise (see `negative_excursion`).
///
/// Every wavenumber must carry both basis records; duplicates are averaged.
pub fn reconstruct_fourier(
    dataset: &TomographyDataset,
    z_grid: &[f64],
) -> Result<DensityEstimate, TomographyError> {
    check_z_grid(z_grid)?;

    // Pair the bases per wavenumber (exact bit-pattern match).
    use std::collections::BTreeMap;
    #[derive(Default)]
    struct Pair {
        cos_sum: f64,
        cos_count: u32,
        sin_sum: f64,
        sin_count: u32,
    }
    let mut pairs: BTreeMap<u64, Pair> = BTreeMap::new();
    for record in &dataset.records {
        if !record.k.is_finite() || record.k < 0.0 {
            return Err(TomographyError::InvalidK { k: record.k });
        }
        let entry = pairs.entry(record.k.to_bits()).or_default();
        match record.basis {
            Basis::SigmaZ => {
                entry.cos_sum += record.estimate();
                entry.cos_count += 1;
            }
            Basis::SigmaY => {
                entry.sin_sum += record.estimate();
                entry.sin_count += 1;
            }
        }
    }

    let mut ks = Vec::with_capacity(pairs.len());
    let mut cos_vals = Vec::with_capacity(pairs.len());
    let mut sin_vals = Vec::with_capacity(pairs.len());
    for (bits, pair) in &pairs {
        let k = f64::from_bits(*bits);
        if pair.cos_count == 0 || pair.sin_count == 0 {
            return Err(TomographyError::MissingBasisPair { k });
        }
        ks.push(k);
        cos_vals.push(pair.cos_sum / pair.cos_count as f64);
        sin_vals.push(pair.sin_sum / pair.sin_count as f64);
    }

    let k_max = *ks.last().expect("non-empty after pairing");
    if ks.len() < 2 || k_max < MIN_FOURIER_K_MAX {
        return Err(TomographyError::InsufficientKRange { k_max });
    }

    let density: Vec<f64> = z_grid
        .iter()
        .map(|&z| {
            let integrand: Vec<f64> = ks
                .iter()
                .enumerate()
                .map(|(i, &k)| cos_vals[i] * (k * z).cos() + sin_vals[i] * (k * z).sin())
                .collect();
            trapz(&ks, &integrand) / std::f64::consts::PI
        })
        .collect();

    let negative: Vec<f64> = density.iter().map(|&rho| (-rho).max(0.0)).collect();
    let negative_excursion = trapz(z_grid, &negative);
    let residual = weighted_rms_misfit(&dataset.records, z_grid, &density);

    Ok(DensityEstimate {
        z_grid: z_grid.to_vec(),
        density,
        method: ReconstructionMethod::Fourier,
        residual,
        negative_excursion,
    })
}

/// Physically constrained reconstruction: weighted least squares on the
/// characteristic-function records subject to ρ ≥ 0 and ∫ρ = 1, with a small
/// curvature penalty λ_s∫(ρ″)² to fix the null space the band-limited data
/// leaves open. Solved as a simplex-constrained QP in u = ρ·dz; the QP's
/// KKT certificate is re-checked here and failures are reported, never
/// papered over.
///
/// The grid must be uniform, ascending, and span at least ±(Γ + 4) natural
/// widths so the unit-mass constraint cannot squeeze real probability off
/// the window edges.
pub fn reconstruct_least_squares(
    dataset: &TomographyDataset,
    z_grid: &[f64],
) -> Result<DensityEstimate, TomographyError> {
    check_z_grid(z_grid)?;
    let n = z_grid.len();
    if n < 4 {
        return Err(TomographyError::InvalidGrid {
            reason: format!("least squares needs at least 4 grid points, got {n}"),
        });
    }
    let dz = (z_grid[n - 1] - z_grid[0]) / (n - 1) as f64;
    for w in z_grid.windows(2) {
        if ((w[1] - w[0]) - dz).abs() > 1e-9 * dz {
            return Err(TomographyError::InvalidGrid {
                reason: "least squares requires a uniform grid".to_string(),
            });
        }
    }
    let required_span = dataset.config.gamma_big + 4.0;
    if z_grid[0] > -required_span || z_grid[n - 1] < required_span {
        return Err(TomographyError::InvalidGrid {
            reason: format!(
                "grid [{}, {}] must cover ±{required_span} (both branches + 4 widths)",
                z_grid[0],
                z_grid[n - 1]
            ),
        });
    }

    // k = 0 records are dropped: ⟨cos 0·ẑ⟩ ≡ 1 is already enforced by the
    // unit-mass constraint (and its near-singular weight would wreck the
    // conditioning), while ⟨sin 0·ẑ⟩ ≡ 0 carries no information.
    let kept: Vec<&TomographyRecord> = dataset.records.iter().filter(|r| r.k != 0.0).collect();
    for record in &kept {
        if !record.k.is_finite() || record.k < 0.0 {
            return Err(TomographyError::InvalidK { k: record.k });
        }
    }
    let rows = kept.len();
    if rows < MIN_LS_RECORDS {
        return Err(TomographyError::RankDeficient { rows, cols: n });
    }

    // Normal equations in u = ρ·dz: model ĝ_r = Σ_j trig(k_r z_j) u_j.
    let design = DMatrix::from_fn(rows, n, |r, j| {
        let record = kept[r];
        match record.basis {
            Basis::SigmaZ => (record.k * z_grid[j]).cos(),
            Basis::SigmaY => (record.k * z_grid[j]).sin(),
        }
    });
    // Median-normalized weights: only the relative weighting between records
    // matters to the fit, and pinning the *typical* record's weight at one
    // makes the curvature penalty a fractional smoothing strength that is
    // independent of shot count and panel. With raw inverse-variance
    // weights, 10⁴-shot data would outweigh the penalty by the same 10⁴ and
    // leave the design matrix's band-limited null space (structure at
    // |k| > K_MAX, invisible to every record) pinned by nothing but
    // positivity, which reconstructs noise as spikes. The median (not the
    // mean) sets the scale so that a few ultra-precise small-k records,
    // whose weights can run 100× the band average, cannot deflate the
    // weight of the band that actually carries the density's shape.
    let raw_weights: Vec<f64> = (0..rows).map(|r| kept[r].weight()).collect();
    let mut sorted_weights = raw_weights.clone();
    sorted_weights.sort_by(|a, b| a.partial_cmp(b).expect("finite weights"));
    let median_weight = sorted_weights[rows / 2];
    let weights = DVector::from_fn(rows, |r, _| raw_weights[r] / median_weight);
    let values = DVector::from_fn(rows, |r, _| kept[r].estimate());

    let mut q = DMatrix::zeros(n, n);
    for r in 0..rows {
        let w = weights[r];
        let row = design.row(r);
        for a in 0..n {
            let wa = w * row[a];
            for b in a..n {
                q[(a, b)] += wa * row[b];
            }
        }
    }
    // Curvature penalty: ∫(ρ″)²dz = ‖D u‖²/dz⁵ with the raw [1, −2, 1] stencil.
    let curvature_scale = CURVATURE_WEIGHT / dz.powi(5);
    for j in 0..n - 2 {
        let stencil = [(j, 1.0), (j + 1, -2.0), (j + 2, 1.0)];
        for &(a, ca) in &stencil {
            for &(b, cb) in &stencil {
                if b >= a {
                    q[(a, b)] += curvature_scale * ca * cb;
                }
            }
        }
    }
    for a in 0..n {
        for b in 0..a {
            q[(a, b)] = q[(b, a)];
        }
    }
    q *= 2.0;
    let ridge = RIDGE_SCALE * q.trace() / n as f64;
    for a in 0..n {
        q[(a, a)] += ridge;
    }

    let mut c = DVector::zeros(n);
    for r in 0..rows {
        let wg = weights[r] * values[r];
        for j in 0..n {
            c[j] -= 2.0 * wg * design[(r, j)];
        }
    }

    let solution = solve_simplex_qp(&q, &c).map_err(|e| TomographyError::SolverFailure {
        detail: e.to_string(),
    })?;
    if solution.kkt_residual > KKT_TOL {
        return Err(TomographyError::SolverFailure {
            detail: format!(
                "KKT certificate {:.3e} exceeds {KKT_TOL:.0e} after {} iterations",
                solution.kkt_residual, solution.iterations
            ),
        });
    }

    // u is a unit-sum rectangle-rule mass vector; convert to a density and
    // renormalize under the trapezoid rule used everywhere downstream.
    let mut density: Vec<f64> = solution.u.iter().map(|&u| u / dz).collect();
    let mass = trapz(z_grid, &density);
    if mass <= 0.0 {
        return Err(TomographyError::SolverFailure {
            detail: format!("non-positive reconstructed mass {mass}"),
        });
    }
    for rho in &mut density {
        *rho /= mass;
    }

    let residual = weighted_rms_misfit(&dataset.records, z_grid, &density);

    Ok(DensityEstimate {
        z_grid: z_grid.to_vec(),
        density,
        method: ReconstructionMethod::LeastSquares,
        residual,
        negative_excursion: 0.0,
    })
}

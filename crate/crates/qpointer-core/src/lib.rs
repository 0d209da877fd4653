//! Simulation of the weak-to-strong transition of a qubit measurement with a
//! harmonic-oscillator pointer, as realized in trapped-ion experiments.
//!
//! A qubit prepared in |↓⟩ is coupled impulsively to the motion of its ion
//! through H = γ₀ σ̂ₓ p̂ and post-selected onto cos θ|↑⟩ − sin θ|↓⟩. The
//! conditioned motional state is a two-branch superposition whose centroid
//! interpolates, as the dimensionless strength Γ = γ₀t/Δ_z grows, between
//! γ₀t times the anomalous weak value −cot θ and γ₀t times the ordinary
//! expectation value −sin 2θ — the full weak-to-strong measurement
//! transition in one closed family.
//!
//! Modules:
//!
//! * [`config`] — working-point parameters (θ, Γ) with natural or physical
//!   (trapped-ion) units.
//! * [`analytic`] — closed forms: weak value, conditioned shift, cat-state
//!   coefficients, position density, Wigner function, and the inversion
//!   Γ ← shift used to reconstruct the transition curve.
//! * [`fock`] — truncated-Fock simulation of the actual drive Hamiltonians
//!   (carrier, sidebands, bichromatic spin-dependent forces) and the full
//!   protocol, independent of the closed forms.
//! * [`tomography`] — simulated characteristic-function tomography: probe
//!   records with binomial shot noise, pointer-shift extraction, and two
//!   density reconstructions (Fourier and constrained least squares).
//! * [`sweep`] — grid drivers producing per-point rows and the catalogued
//!   phase-space panels.
//! * [`artifact`] — deterministic, atomically written CSV/JSON outputs.

pub mod analytic;
pub mod artifact;
pub mod config;
pub mod fock;
pub mod sweep;
pub mod tomography;

mod fit;
mod qp;

pub use config::MeasurementConfig;

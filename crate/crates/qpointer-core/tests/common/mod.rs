//! Shared test support: a self-contained adaptive Gauss–Kronrod integrator
//! and small numeric helpers.
//!
//! The integrator is deliberately independent of anything in the library so
//! that normalization/marginal/overlap oracles in the test suites do not
//! reuse the code paths they are checking.

#![allow(dead_code)]

use nalgebra::DVector;
use num_complex::Complex64;

// ── Gauss–Kronrod 7/15 panel ────────────────────────────────────────────────

/// Kronrod-15 abscissae on [0, 1] side of the symmetric rule (last entry 0).
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.000000000000000,
];

/// Kronrod-15 weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];

/// Gauss-7 weights for the odd-indexed entries of `XGK` (and the midpoint).
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// One 15-point Kronrod panel on [a, b]; returns (integral, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);

    let f_mid = f(mid);
    let mut kronrod = WGK[7] * f_mid;
    let mut gauss = WG[3] * f_mid;
    for i in 0..7 {
        let dx = half * XGK[i];
        let pair = f(mid - dx) + f(mid + dx);
        kronrod += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * half, (kronrod - gauss).abs() * half)
}

/// Adaptive quadrature of `f` over [a, b] by panel bisection, aiming for an
/// absolute error below `tol`. Panics if the recursion cannot converge (a
/// sign of a pathological integrand, which no oracle here should produce).
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (val, err) = gk15(f, a, b);
        if err <= tol || b - a < 1e-14 {
            return val;
        }
        assert!(
            depth < 60,
            "adaptive quadrature failed to converge on [{a}, {b}]"
        );
        let mid = 0.5 * (a + b);
        recurse(f, a, mid, 0.5 * tol, depth + 1) + recurse(f, mid, b, 0.5 * tol, depth + 1)
    }
    recurse(f, a, b, tol, 0)
}

// ── Grid helpers ────────────────────────────────────────────────────────────

/// `n` evenly spaced points from `a` to `b` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    let step = (b - a) / (n - 1) as f64;
    (0..n).map(|i| a + step * i as f64).collect()
}

/// Trapezoid rule over tabulated samples.
pub fn trapz(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    x.windows(2)
        .zip(y.windows(2))
        .map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1]))
        .sum()
}

/// L1 distance ∫|a − b| dz between two densities tabulated on `x`.
pub fn l1_distance(x: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(u, v)| (u - v).abs()).collect();
    trapz(x, &diff)
}

/// Median of a slice (not required to be pre-sorted).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    assert!(n > 0);
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// |⟨a|b⟩|² for normalized complex state vectors.
pub fn fidelity(a: &DVector<Complex64>, b: &DVector<Complex64>) -> f64 {
    a.dotc(b).norm_sqr()
}

#[cfg(test)]
mod self_checks {
    use super::*;

    #[test]
    fn kronrod_weights_integrate_constants_exactly() {
        let one = integrate(&|_| 1.0, -3.0, 5.0, 1e-12);
        assert!((one - 8.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_has_unit_mass() {
        let f = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mass = integrate(&f, -10.0, 10.0, 1e-12);
        assert!((mass - 1.0).abs() < 1e-10);
    }

    #[test]
    fn oscillatory_integrand_converges() {
        // ∫₀^π sin = 2 exactly.
        let val = integrate(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12);
        assert!((val - 2.0).abs() < 1e-11);
    }
}

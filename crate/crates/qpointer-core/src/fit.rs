//! Weighted polynomial least squares for small-k characteristic-function
//! fits, plus the nested-model F-test used to police the linear regime.
//!
//! The abscissas are rescaled to [−1, 1] before the normal equations are
//! formed, so fits over very small k windows (where k² and k⁰ columns differ
//! by many orders of magnitude) stay well conditioned; coefficients and
//! covariance are mapped back to the original scale afterwards.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum FitError {
    /// Normal equations singular: too few distinct abscissas for the degree.
    RankDeficient,
    BadInput(String),
}

impl std::fmt::Display for FitError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FitError::RankDeficient => write!(f, "rank-deficient polynomial fit"),
            FitError::BadInput(reason) => write!(f, "bad fit input: {reason}"),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct PolyFit {
    /// Polynomial coefficients, constant term first.
    pub coefficients: Vec<f64>,
    /// (XᵀWX)⁻¹ — the coefficient covariance when the weights are inverse
    /// variances.
    pub covariance: DMatrix<f64>,
    /// Weighted residual sum of squares Σ wᵢ(yᵢ − ŷᵢ)².
    pub rss: f64,
}

/// Weighted least-squares fit of a degree-`degree` polynomial.
pub(crate) fn weighted_polyfit(
    x: &[f64],
    y: &[f64],
    w: &[f64],
    degree: usize,
) -> Result<PolyFit, FitError> {
    let n = x.len();
    if y.len() != n || w.len() != n {
        return Err(FitError::BadInput(format!(
            "length mismatch: x {}, y {}, w {}",
            n,
            y.len(),
            w.len()
        )));
    }
    if n < degree + 1 {
        return Err(FitError::BadInput(format!(
            "{n} points cannot determine a degree-{degree} polynomial"
        )));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) || w.iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(FitError::BadInput(
            "abscissas and ordinates must be finite, weights positive".to_string(),
        ));
    }

    // Rescale abscissas for conditioning.
    let scale = x.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let scale = if scale > 0.0 { scale } else { 1.0 };

    let p = degree + 1;
    let design = DMatrix::from_fn(n, p, |i, j| (x[i] / scale).powi(j as i32));
    let weights = DVector::from_column_slice(w);
    let mut xtwx: DMatrix<f64> = DMatrix::zeros(p, p);
    let mut xtwy: DVector<f64> = DVector::zeros(p);
    for i in 0..n {
        let row = design.row(i);
        for a in 0..p {
            xtwy[a] += weights[i] * row[a] * y[i];
            for b in a..p {
                xtwx[(a, b)] += weights[i] * row[a] * row[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            xtwx[(a, b)] = xtwx[(b, a)];
        }
    }

    let lu = xtwx.clone().lu();
    let beta_scaled = lu.solve(&xtwy).ok_or(FitError::RankDeficient)?;
    let cov_scaled = xtwx.try_inverse().ok_or(FitError::RankDeficient)?;

    let mut rss = 0.0;
    for i in 0..n {
        let predicted: f64 = (0..p).map(|j| beta_scaled[j] * design[(i, j)]).sum();
        rss += weights[i] * (y[i] - predicted).powi(2);
    }

    // Undo the abscissa rescaling: β_j = β̃_j / sʲ, cov_jk = c̃ov_jk / (sʲ sᵏ).
    let coefficients = (0..p)
        .map(|j| beta_scaled[j] / scale.powi(j as i32))
        .collect();
    let covariance = DMatrix::from_fn(p, p, |a, b| {
        cov_scaled[(a, b)] / (scale.powi(a as i32) * scale.powi(b as i32))
    });

    Ok(PolyFit {
        coefficients,
        covariance,
        rss,
    })
}

/// Nested-model F-test for a quadratic term: fits degree 1 and degree 2 and
/// returns the p-value of F = (RSS₁ − RSS₂)/(RSS₂/(n − 3)) under F(1, n−3).
/// Small p-values mean the quadratic term is statistically required.
pub(crate) fn quadratic_f_test(x: &[f64], y: &[f64], w: &[f64]) -> Result<f64, FitError> {
    let n = x.len();
    if n < 4 {
        return Err(FitError::BadInput(format!(
            "{n} points leave no residual degrees of freedom for the F-test"
        )));
    }
    let linear = weighted_polyfit(x, y, w, 1)?;
    let quadratic = weighted_polyfit(x, y, w, 2)?;

    let rss1 = linear.rss;
    let rss2 = quadratic.rss;
    let floor = 1e-30 * (1.0 + rss1.abs());
    if rss2 <= floor {
        // The quadratic fit is exact to round-off: either both models are
        // perfect (no evidence either way) or the quadratic term absorbs a
        // real misfit.
        return Ok(if rss1 <= floor { 1.0 } else { 0.0 });
    }

    let df = (n - 3) as f64;
    let f_statistic = ((rss1 - rss2) / (rss2 / df)).max(0.0);
    let distribution = FisherSnedecor::new(1.0, df)
        .map_err(|e| FitError::BadInput(format!("F distribution: {e}")))?;
    Ok(1.0 - distribution.cdf(f_statistic))
}

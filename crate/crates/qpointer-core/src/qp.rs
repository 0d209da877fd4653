//! Dense quadratic programming on the probability simplex.
//!
//! Solves  min ½uᵀQu + cᵀu  subject to  u ≥ 0, Σu = 1  with a primal
//! active-set method: the equality constraint is kept in every KKT system,
//! bound constraints enter/leave a working set one at a time. Q is expected
//! symmetric positive definite (callers add a small ridge), which makes the
//! solution unique and the iteration finite in exact arithmetic.
//!
//! Each iteration solves for the *minimizer* of the objective over the
//! current working set (active coordinates pinned at zero, Σu = 1 enforced
//! through a bordered KKT system) rather than for a step. When that
//! minimizer is feasible the iterate jumps onto it exactly and the bound
//! multipliers λᵢ = gᵢ − μ decide whether to release a constraint or stop;
//! when it is not, the iterate moves as far toward it as the first bound
//! allows and that bound joins the working set. This avoids any "is the
//! step zero" tolerance, which round-off in the linear solves would defeat
//! on ill-conditioned problems. A released coordinate that the very next
//! subproblem cannot move off its bound has a multiplier that is zero at
//! arithmetic precision; it is restored and barred from further release for
//! as long as the iterate stays at the current point, which removes the
//! classic release/re-block two-cycle without ever suppressing a genuinely
//! negative multiplier (the bans are cleared whenever the iterate moves).
//!
//! The iteration runs on a Jacobi-equilibrated copy of the problem
//! (ũ = diag(√Qᵢᵢ)·u), so wildly spread statistical weights in Q do not
//! degrade the accuracy of the KKT solves; bounds and the simplex geometry
//! survive the per-coordinate rescaling.
//!
//! Optimality is certified independently of the iteration path: the returned
//! `kkt_residual` is the norm of a projected-gradient fixed-point test,
//! ‖u − Π_simplex(u − ∇f(u)/L)‖∞, which vanishes exactly at the constrained
//! minimum.

use nalgebra::{DMatrix, DVector};

/// Hard cap on active-set iterations; every iteration either moves to a
/// strictly lower objective value or changes the working set, so well-posed
/// problems finish in a small multiple of n.
const MAX_ITERATIONS: usize = 100_000;

/// Lagrange multipliers above −MULT_TOL·scale count as non-negative.
const MULT_TOL: f64 = 1e-10;

/// Power-iteration steps for the curvature bound L used in the residual test.
const POWER_STEPS: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum QpError {
    /// The active-set loop did not converge within the iteration budget.
    IterationBudget { budget: usize },
    /// A KKT system was numerically singular.
    SingularKkt,
    /// Malformed inputs (shape mismatch, non-finite entries).
    BadInput(String),
}

impl std::fmt::Display for QpError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            QpError::IterationBudget { budget } => {
                write!(f, "active-set iteration budget {budget} exhausted")
            }
            QpError::SingularKkt => write!(f, "singular KKT system"),
            QpError::BadInput(reason) => write!(f, "bad QP input: {reason}"),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct QpSolution {
    pub u: DVector<f64>,
    /// ‖u − Π_simplex(u − (Qu + c)/L)‖∞ at the returned point.
    pub kkt_residual: f64,
    pub iterations: usize,
}

/// Euclidean projection onto {u : u ≥ 0, Σu = 1} (sort-based, O(n log n)).
pub(crate) fn project_simplex(v: &DVector<f64>) -> DVector<f64> {
    let n = v.len();
    let mut sorted: Vec<f64> = v.iter().copied().collect();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("non-finite entry in projection"));
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (j, &value) in sorted.iter().enumerate() {
        cumulative += value;
        let candidate = (cumulative - 1.0) / (j + 1) as f64;
        if value - candidate > 0.0 {
            tau = candidate;
        } else {
            break;
        }
    }
    DVector::from_fn(n, |i, _| (v[i] - tau).max(0.0))
}

/// Largest-eigenvalue estimate of a symmetric PSD matrix by power iteration.
fn curvature_bound(q: &DMatrix<f64>) -> f64 {
    let n = q.nrows();
    // Deterministic start with all modes populated.
    let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.1 * ((i % 7) as f64));
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..POWER_STEPS {
        let w = q * &v;
        let norm = w.norm();
        if norm == 0.0 {
            return 1.0;
        }
        lambda = v.dot(&w);
        v = w / norm;
    }
    lambda.max(f64::MIN_POSITIVE)
}

/// Minimizer of the objective over the working set: active coordinates are
/// pinned at zero and the free ones solve [Q_FF a_F; a_Fᵀ 0][x_F; μ] =
/// [−c_F; 1], where a carries the mass-constraint coefficients. Returns the
/// free-coordinate values followed by the equality multiplier μ.
fn subspace_minimizer(
    q: &DMatrix<f64>,
    c: &DVector<f64>,
    a: &DVector<f64>,
    free: &[usize],
) -> Result<DVector<f64>, QpError> {
    let m = free.len();
    let mut kkt = DMatrix::zeros(m + 1, m + 1);
    let mut rhs = DVector::zeros(m + 1);
    for (row, &i) in free.iter().enumerate() {
        for (col, &j) in free.iter().enumerate() {
            kkt[(row, col)] = q[(i, j)];
        }
        kkt[(row, m)] = a[i];
        kkt[(m, row)] = a[i];
        rhs[row] = -c[i];
    }
    rhs[m] = 1.0;
    kkt.lu().solve(&rhs).ok_or(QpError::SingularKkt)
}

/// Solves the simplex-constrained QP. `q` must be symmetric positive
/// definite and `c` the same length.
pub(crate) fn solve_simplex_qp(q: &DMatrix<f64>, c: &DVector<f64>) -> Result<QpSolution, QpError> {
    let n = q.nrows();
    if q.ncols() != n || c.len() != n || n == 0 {
        return Err(QpError::BadInput(format!(
            "Q is {}×{}, c has length {}",
            q.nrows(),
            q.ncols(),
            c.len()
        )));
    }
    if q.iter().any(|x| !x.is_finite()) || c.iter().any(|x| !x.is_finite()) {
        return Err(QpError::BadInput("non-finite entries".to_string()));
    }

    // Jacobi equilibration: work in ũ = Du with D = diag(√Q_ii), which makes
    // the scaled Hessian unit-diagonal and keeps the KKT systems
    // well-conditioned even when statistical weights spread the rows of Q
    // over many orders of magnitude. The bounds survive the change of
    // variables (ũ ≥ 0 ⟺ u ≥ 0); the mass constraint becomes aᵀũ = 1 with
    // a = D⁻¹1.
    let d = DVector::from_fn(n, |i, _| q[(i, i)].sqrt());
    if d.iter().any(|&x| !x.is_finite() || x <= 0.0) {
        return Err(QpError::BadInput(
            "Q has a non-positive diagonal entry".to_string(),
        ));
    }
    let q_scaled = DMatrix::from_fn(n, n, |i, j| q[(i, j)] / (d[i] * d[j]));
    let c_scaled = DVector::from_fn(n, |i, _| c[i] / d[i]);
    let a = DVector::from_fn(n, |i, _| 1.0 / d[i]);

    let mut u = DVector::from_fn(n, |i, _| d[i] / n as f64);
    let mut active = vec![false; n];
    let mut banned = vec![false; n];
    let mut just_released: Option<usize> = None;
    let mut iterations = 0;

    loop {
        if iterations >= MAX_ITERATIONS {
            return Err(QpError::IterationBudget {
                budget: MAX_ITERATIONS,
            });
        }
        iterations += 1;

        let free: Vec<usize> = (0..n).filter(|&i| !active[i]).collect();
        let solution = subspace_minimizer(&q_scaled, &c_scaled, &a, &free)?;
        // The bordered row reads Q̃x + μ̂a = −c̃, i.e. ∇f(x) = −μ̂·a, so the
        // equality multiplier in the stationarity convention ∇f = μ·a + λ is
        // the negative of the solve's last component.
        let mu = -solution[free.len()];

        // A coordinate released on the previous iteration whose subproblem
        // cannot move it off the bound has a numerically zero multiplier at
        // the *current* iterate: restore it and bar it from further release
        // while the iterate stays put (anti-cycling). The bans are cleared as
        // soon as the iterate moves, because the zero-multiplier argument is
        // local to the point where it was made.
        if let Some(r) = just_released {
            let pos = free
                .iter()
                .position(|&i| i == r)
                .expect("released index stays free until re-blocked");
            if solution[pos] <= 0.0 {
                active[r] = true;
                banned[r] = true;
                just_released = None;
                continue;
            }
        }

        // First bound crossed on the way from u to the subspace minimizer.
        let mut blocking: Option<(usize, f64)> = None;
        for (row, &i) in free.iter().enumerate() {
            let target = solution[row];
            if target < 0.0 {
                let ratio = u[i] / (u[i] - target);
                if blocking.is_none_or(|(_, best)| ratio < best) {
                    blocking = Some((i, ratio));
                }
            }
        }

        match blocking {
            None => {
                // The minimizer is feasible: jump onto it and test the bound
                // multipliers λᵢ = gᵢ − μ for the active coordinates.
                let mut moved = false;
                for (row, &i) in free.iter().enumerate() {
                    let target = solution[row].max(0.0);
                    if target != u[i] {
                        moved = true;
                    }
                    u[i] = target;
                }
                if moved {
                    banned.fill(false);
                }

                // Scaled-problem stationarity is g̃ = μ·a + λ̃ with λ̃ ≥ 0 on
                // the active set (λ̃ᵢ = λᵢ/dᵢ, same signs as unscaled).
                let gradient = &q_scaled * &u + &c_scaled;
                let mult_scale = 1.0 + gradient.amax();
                let mut worst = f64::INFINITY;
                let mut worst_index = None;
                for i in 0..n {
                    if active[i] && !banned[i] {
                        let lambda = gradient[i] - mu * a[i];
                        if lambda < worst {
                            worst = lambda;
                            worst_index = Some(i);
                        }
                    }
                }
                match worst_index {
                    Some(i) if worst < -MULT_TOL * mult_scale => {
                        active[i] = false; // u[i] is already exactly 0
                        just_released = Some(i);
                    }
                    _ => break, // KKT conditions hold
                }
            }
            Some((b, alpha)) => {
                // Partial step toward the minimizer; the blocking coordinate
                // lands exactly on its bound and joins the working set.
                if alpha > 0.0 {
                    for (row, &i) in free.iter().enumerate() {
                        u[i] += alpha * (solution[row] - u[i]);
                        if u[i] < 0.0 {
                            u[i] = 0.0;
                        }
                    }
                    banned.fill(false);
                }
                u[b] = 0.0;
                active[b] = true;
                just_released = None;
            }
        }
    }

    // Back to the original variables; partial steps leave Σu off 1 by
    // accumulated round-off only, so restore the constraint exactly once.
    for i in 0..n {
        u[i] /= d[i];
    }
    let total: f64 = u.iter().sum();
    u /= total;

    let gradient = q * &u + c;
    let l = curvature_bound(q);
    let shifted = &u - &gradient / l;
    let projected = project_simplex(&shifted);
    let kkt_residual = (&u - &projected).amax();

    Ok(QpSolution {
        u,
        kkt_residual,
        iterations,
    })
}

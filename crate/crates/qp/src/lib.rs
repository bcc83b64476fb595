//! Dense convex QP solver with verifiable optimality certificates.
//!
//! Problems are stated as [`QuadraticProgram`] (equalities plus one-sided
//! inequalities) and solved with an operator-splitting method followed by an
//! active-set polish step. Every returned [`QpSolution`] carries the KKT
//! residual computed by [`kkt_residual`], which is independent of the solve
//! path.
//!
//! ```
//! use deepc_qp::{solve_qp, QuadraticProgram, SolveStatus};
//! use nalgebra::{DMatrix, DVector};
//!
//! // min x² + y²  s.t.  x + y = 2
//! let qp = QuadraticProgram::new(DMatrix::identity(2, 2) * 2.0, DVector::zeros(2))
//!     .with_equalities(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), DVector::from_element(1, 2.0));
//! let sol = solve_qp(&qp, 1e-8, 1000).unwrap();
//! assert_eq!(sol.status, SolveStatus::Optimal);
//! assert!((sol.z[0] - 1.0).abs() < 1e-8);
//! ```

pub mod admm;
pub mod dump;
pub mod kkt;
pub mod problem;

use nalgebra::DVector;
use thiserror::Error;

pub use admm::{AdmmSettings, AdmmWorkspace, BoxSolution};
pub use kkt::{kkt_breakdown, kkt_residual, KktBreakdown};
pub use problem::{BoxQp, QuadraticProgram};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("problem data contains NaN or invalid infinities")]
    NonFinite,
    #[error("Hessian is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("Hessian is not positive semidefinite (eigenvalue {0:e})")]
    NotConvex(f64),
    #[error("lower bound exceeds upper bound")]
    InvalidBounds,
    #[error("KKT matrix factorization failed")]
    Factorization,
    #[error("malformed QP dump: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    MaxIter,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::MaxIter => "max_iter",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QpSolution {
    pub z: DVector<f64>,
    pub duals_eq: DVector<f64>,
    pub duals_in: DVector<f64>,
    pub objective: f64,
    pub status: SolveStatus,
    pub kkt_residual: f64,
    pub iterations: usize,
}

/// Solve `qp` to an absolute KKT tolerance `tol`.
///
/// `Optimal` is only reported when the stacked KKT residual is `≤ tol`.
pub fn solve_qp(qp: &QuadraticProgram, tol: f64, max_iter: usize) -> Result<QpSolution, QpError> {
    let settings = AdmmSettings { eps_abs: tol, eps_rel: 0.0, max_iter, ..AdmmSettings::default() };
    solve_qp_with(qp, &settings, None)
}

/// Solve with explicit settings and an optional primal/dual warm start.
pub fn solve_qp_with(
    qp: &QuadraticProgram,
    settings: &AdmmSettings,
    warm_start: Option<&QpSolution>,
) -> Result<QpSolution, QpError> {
    qp.validate()?;
    let boxed = BoxQp::from(qp);
    let mut ws = AdmmWorkspace::new(&boxed, settings.clone())?;
    if let Some(w) = warm_start {
        if w.z.len() == qp.num_vars() && w.duals_eq.len() == qp.num_eq() && w.duals_in.len() == qp.num_in() {
            let y = stack_duals(&w.duals_eq, &w.duals_in);
            ws.warm_start(Some(&w.z), Some(&y))?;
        }
    }
    let raw = ws.solve()?;
    Ok(into_solution(qp, raw))
}

fn stack_duals(eq: &DVector<f64>, ineq: &DVector<f64>) -> DVector<f64> {
    let mut y = DVector::zeros(eq.len() + ineq.len());
    y.rows_mut(0, eq.len()).copy_from(eq);
    y.rows_mut(eq.len(), ineq.len()).copy_from(ineq);
    y
}

fn into_solution(qp: &QuadraticProgram, raw: BoxSolution) -> QpSolution {
    let me = qp.num_eq();
    let mi = qp.num_in();
    let duals_eq = raw.y.rows(0, me).into_owned();
    let duals_in = raw.y.rows(me, mi).into_owned();
    let objective = qp.objective(&raw.x);
    let mut sol = QpSolution {
        z: raw.x,
        duals_eq,
        duals_in,
        objective,
        status: raw.status,
        kkt_residual: f64::NAN,
        iterations: raw.iterations,
    };
    // Dimensions were validated before solving.
    sol.kkt_residual = kkt_residual(qp, &sol).unwrap_or(f64::INFINITY);
    sol
}

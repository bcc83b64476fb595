use nalgebra::DVector;

use crate::problem::{BoxQp, QuadraticProgram};
use crate::{QpError, QpSolution};

/// ∞-norms of the individual optimality conditions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct KktBreakdown {
    pub stationarity: f64,
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
}

impl KktBreakdown {
    pub fn max(&self) -> f64 {
        self.stationarity
            .max(self.primal)
            .max(self.dual)
            .max(self.complementarity)
    }
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Stacked KKT residual of `sol` for `qp`, as an ∞-norm.
///
/// Pure function of its inputs; does not look at `sol.status` or the stored
/// residual.
pub fn kkt_residual(qp: &QuadraticProgram, sol: &QpSolution) -> Result<f64, QpError> {
    Ok(kkt_breakdown(qp, &sol.z, &sol.duals_eq, &sol.duals_in)?.max())
}

pub fn kkt_breakdown(
    qp: &QuadraticProgram,
    z: &DVector<f64>,
    duals_eq: &DVector<f64>,
    duals_in: &DVector<f64>,
) -> Result<KktBreakdown, QpError> {
    qp.check_dimensions()?;
    if z.len() != qp.num_vars() || duals_eq.len() != qp.num_eq() || duals_in.len() != qp.num_in() {
        return Err(QpError::DimensionMismatch(format!(
            "solution sizes z {}, eq {}, in {} vs problem n {}, eq {}, in {}",
            z.len(),
            duals_eq.len(),
            duals_in.len(),
            qp.num_vars(),
            qp.num_eq(),
            qp.num_in()
        )));
    }
    let grad = &qp.hessian * z + &qp.linear + qp.a_eq.tr_mul(duals_eq) + qp.a_in.tr_mul(duals_in);
    let eq = &qp.a_eq * z - &qp.b_eq;
    let slack = &qp.b_in - &qp.a_in * z;

    let mut primal = inf_norm(&eq);
    let mut dual = 0.0_f64;
    let mut compl = 0.0_f64;
    for i in 0..qp.num_in() {
        let mu = duals_in[i];
        let s = slack[i];
        if s.is_finite() {
            primal = primal.max((-s).max(0.0));
            compl = compl.max((mu * s).abs());
        } else {
            compl = compl.max(mu.abs());
        }
        dual = dual.max((-mu).max(0.0));
    }
    Ok(KktBreakdown {
        stationarity: inf_norm(&grad),
        primal,
        dual,
        complementarity: compl,
    })
}

/// KKT residual of a primal/dual pair for the two-sided form.
///
/// Sign convention: `y_i > 0` means the upper bound of row `i` is active,
/// `y_i < 0` the lower bound.
pub fn box_kkt_breakdown(qp: &BoxQp, x: &DVector<f64>, y: &DVector<f64>) -> KktBreakdown {
    let ax = &qp.a * x;
    let grad = &qp.p * x + &qp.q + qp.a.tr_mul(y);
    let mut primal = 0.0_f64;
    let mut compl = 0.0_f64;
    for i in 0..qp.num_rows() {
        let (l, u, v, yi) = (qp.l[i], qp.u[i], ax[i], y[i]);
        primal = primal.max((l - v).max(0.0)).max((v - u).max(0.0));
        let up = yi.max(0.0);
        let lo = (-yi).max(0.0);
        let cu = if u.is_finite() { (up * (u - v)).abs() } else { up };
        let cl = if l.is_finite() { (lo * (v - l)).abs() } else { lo };
        compl = compl.max(cu).max(cl);
    }
    KktBreakdown {
        stationarity: inf_norm(&grad),
        primal,
        dual: 0.0,
        complementarity: compl,
    }
}

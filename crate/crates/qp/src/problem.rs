use nalgebra::{Cholesky, DMatrix, DVector};

use crate::QpError;

/// Relative eigenvalue slack accepted when checking that the Hessian is PSD.
pub const PSD_TOLERANCE: f64 = 1e-8;

/// Convex QP in the canonical form
///
/// ```text
///     minimize    ½ zᵀ H z + fᵀ z + constant
///     subject to  A_eq z  = b_eq
///                 A_in z <= b_in
/// ```
///
/// `b_in` entries may be `+inf` for rows that are only kept for bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticProgram {
    pub hessian: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub constant: f64,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
    pub a_in: DMatrix<f64>,
    pub b_in: DVector<f64>,
    pub var_names: Vec<String>,
}

impl QuadraticProgram {
    /// Unconstrained problem with generated variable names `z0, z1, ...`.
    pub fn new(hessian: DMatrix<f64>, linear: DVector<f64>) -> Self {
        let n = linear.len();
        Self {
            hessian,
            linear,
            constant: 0.0,
            a_eq: DMatrix::zeros(0, n),
            b_eq: DVector::zeros(0),
            a_in: DMatrix::zeros(0, n),
            b_in: DVector::zeros(0),
            var_names: (0..n).map(|i| format!("z{i}")).collect(),
        }
    }

    pub fn with_equalities(mut self, a_eq: DMatrix<f64>, b_eq: DVector<f64>) -> Self {
        self.a_eq = a_eq;
        self.b_eq = b_eq;
        self
    }

    pub fn with_inequalities(mut self, a_in: DMatrix<f64>, b_in: DVector<f64>) -> Self {
        self.a_in = a_in;
        self.b_in = b_in;
        self
    }

    pub fn with_constant(mut self, constant: f64) -> Self {
        self.constant = constant;
        self
    }

    pub fn with_var_names(mut self, names: Vec<String>) -> Self {
        self.var_names = names;
        self
    }

    pub fn num_vars(&self) -> usize {
        self.linear.len()
    }

    pub fn num_eq(&self) -> usize {
        self.b_eq.len()
    }

    pub fn num_in(&self) -> usize {
        self.b_in.len()
    }

    pub fn objective(&self, z: &DVector<f64>) -> f64 {
        0.5 * z.dot(&(&self.hessian * z)) + self.linear.dot(z) + self.constant
    }

    /// Dimension consistency only; cheap.
    pub fn check_dimensions(&self) -> Result<(), QpError> {
        let n = self.num_vars();
        let dims_ok = self.hessian.nrows() == n
            && self.hessian.ncols() == n
            && self.a_eq.ncols() == n
            && self.a_eq.nrows() == self.b_eq.len()
            && self.a_in.ncols() == n
            && self.a_in.nrows() == self.b_in.len()
            && self.var_names.len() == n;
        if dims_ok {
            Ok(())
        } else {
            Err(QpError::DimensionMismatch(format!(
                "n={n}, H {}x{}, A_eq {}x{} / b_eq {}, A_in {}x{} / b_in {}, names {}",
                self.hessian.nrows(),
                self.hessian.ncols(),
                self.a_eq.nrows(),
                self.a_eq.ncols(),
                self.b_eq.len(),
                self.a_in.nrows(),
                self.a_in.ncols(),
                self.b_in.len(),
                self.var_names.len()
            )))
        }
    }

    /// Full invariant check: dimensions, finite data, symmetric PSD Hessian.
    pub fn validate(&self) -> Result<(), QpError> {
        self.check_dimensions()?;
        let finite = self.hessian.iter().all(|v| v.is_finite())
            && self.linear.iter().all(|v| v.is_finite())
            && self.a_eq.iter().all(|v| v.is_finite())
            && self.b_eq.iter().all(|v| v.is_finite())
            && self.a_in.iter().all(|v| v.is_finite())
            && self.b_in.iter().all(|v| !v.is_nan() && *v != f64::NEG_INFINITY);
        if !finite {
            return Err(QpError::NonFinite);
        }
        check_psd(&self.hessian)
    }
}

/// Symmetric positive semidefinite up to `λ_min ≥ −PSD_TOLERANCE·λ_max`.
///
/// Small matrices go through a full eigendecomposition; large ones use a
/// shifted Cholesky with the shift bounded by the Gershgorin estimate of
/// `λ_max`, which accepts the same matrices up to that bound.
pub fn check_psd(h: &DMatrix<f64>) -> Result<(), QpError> {
    let n = h.nrows();
    if n == 0 {
        return Ok(());
    }
    let scale = h.amax().max(1.0);
    let asym = (h - h.transpose()).amax();
    if asym > 1e-10 * scale {
        return Err(QpError::NotSymmetric(asym));
    }
    if n <= 200 {
        let eig = h.clone().symmetric_eigen();
        let max = eig.eigenvalues.max();
        let min = eig.eigenvalues.min();
        if min < -PSD_TOLERANCE * max.max(0.0) - f64::EPSILON * scale {
            return Err(QpError::NotConvex(min));
        }
        return Ok(());
    }
    let gershgorin = h
        .row_iter()
        .map(|row| row.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let shift = PSD_TOLERANCE * gershgorin + f64::EPSILON * scale * n as f64;
    let shifted = h + DMatrix::identity(n, n) * shift;
    match Cholesky::new(shifted) {
        Some(_) => Ok(()),
        None => Err(QpError::NotConvex(-shift)),
    }
}

/// Convex QP in the two-sided form `l ≤ A x ≤ u` used by the ADMM engine.
///
/// Equality rows have `l_i == u_i`; one-sided rows use `±inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxQp {
    pub p: DMatrix<f64>,
    pub q: DVector<f64>,
    pub a: DMatrix<f64>,
    pub l: DVector<f64>,
    pub u: DVector<f64>,
}

impl BoxQp {
    pub fn num_vars(&self) -> usize {
        self.q.len()
    }

    pub fn num_rows(&self) -> usize {
        self.l.len()
    }

    pub fn check_dimensions(&self) -> Result<(), QpError> {
        let n = self.q.len();
        let m = self.l.len();
        if self.p.shape() != (n, n)
            || self.a.shape() != (m, n)
            || self.u.len() != m
        {
            return Err(QpError::DimensionMismatch(format!(
                "P {:?}, q {}, A {:?}, l {}, u {}",
                self.p.shape(),
                n,
                self.a.shape(),
                m,
                self.u.len()
            )));
        }
        if self.l.iter().zip(self.u.iter()).any(|(l, u)| l > u || l.is_nan() || u.is_nan()) {
            return Err(QpError::InvalidBounds);
        }
        Ok(())
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.p * x)) + self.q.dot(x)
    }
}

impl From<&QuadraticProgram> for BoxQp {
    fn from(qp: &QuadraticProgram) -> Self {
        let n = qp.num_vars();
        let (me, mi) = (qp.num_eq(), qp.num_in());
        let mut a = DMatrix::zeros(me + mi, n);
        a.rows_mut(0, me).copy_from(&qp.a_eq);
        a.rows_mut(me, mi).copy_from(&qp.a_in);
        let mut l = DVector::from_element(me + mi, f64::NEG_INFINITY);
        let mut u = DVector::zeros(me + mi);
        l.rows_mut(0, me).copy_from(&qp.b_eq);
        u.rows_mut(0, me).copy_from(&qp.b_eq);
        u.rows_mut(me, mi).copy_from(&qp.b_in);
        BoxQp {
            p: qp.hessian.clone(),
            q: qp.linear.clone(),
            a,
            l,
            u,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_indefinite_hessian() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let qp = QuadraticProgram::new(h, DVector::zeros(2));
        assert!(matches!(qp.validate(), Err(QpError::NotConvex(_))));
    }

    #[test]
    fn accepts_semidefinite_hessian() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let qp = QuadraticProgram::new(h, DVector::zeros(2));
        qp.validate().unwrap();
    }

    #[test]
    fn large_psd_check_uses_shifted_cholesky() {
        let n = 240;
        let b = DMatrix::from_fn(n, 20, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0);
        let h = &b * b.transpose();
        check_psd(&h).unwrap();
        let mut bad = h.clone();
        bad[(0, 0)] -= 1e3 * bad.amax();
        assert!(check_psd(&bad).is_err());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let qp = QuadraticProgram::new(DMatrix::identity(2, 2), DVector::zeros(2))
            .with_equalities(DMatrix::zeros(1, 3), DVector::zeros(1));
        assert!(matches!(qp.check_dimensions(), Err(QpError::DimensionMismatch(_))));
    }

    #[test]
    fn box_form_stacks_equalities_first() {
        let qp = QuadraticProgram::new(DMatrix::identity(2, 2), DVector::zeros(2))
            .with_equalities(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), DVector::from_element(1, 2.0))
            .with_inequalities(DMatrix::from_row_slice(1, 2, &[1.0, 0.0]), DVector::from_element(1, 0.5));
        let b = BoxQp::from(&qp);
        assert_eq!(b.l[0], 2.0);
        assert_eq!(b.u[0], 2.0);
        assert_eq!(b.l[1], f64::NEG_INFINITY);
        assert_eq!(b.u[1], 0.5);
    }
}

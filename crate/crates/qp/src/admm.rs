//! Operator-splitting (ADMM) engine for `l ≤ A x ≤ u` QPs.
//!
//! The iteration follows the standard splitting of the KKT system into a
//! linear solve with the fixed matrix `P + σI + Aᵀ diag(ρ) A` and a
//! projection onto the box `[l, u]`. Data is Ruiz-equilibrated once at
//! setup; the factorization is kept until the step size `ρ` is adapted, so a
//! workspace can be reused for a sequence of problems that differ only in
//! `q`, `l` and `u`.
//!
//! Once the iterates are close, a polish step solves the equality-constrained
//! KKT system on the identified active set, which gives solutions accurate to
//! machine precision whenever the active set is right.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::kkt::{box_kkt_breakdown, KktBreakdown};
use crate::problem::BoxQp;
use crate::{QpError, SolveStatus};

const RHO_MIN: f64 = 1e-6;
const RHO_MAX: f64 = 1e6;
const RHO_EQ_FACTOR: f64 = 1e3;
const MIN_SCALING: f64 = 1e-4;
const MAX_SCALING: f64 = 1e4;
const INF_BOUND: f64 = 1e20;

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmSettings {
    /// Absolute tolerance on the KKT residual components.
    pub eps_abs: f64,
    /// Relative tolerance; `0` makes `eps_abs` a hard bound on the KKT residual.
    pub eps_rel: f64,
    /// Tolerance of the primal infeasibility certificate.
    pub eps_pinf: f64,
    pub max_iter: usize,
    pub rho: f64,
    pub sigma: f64,
    /// Over-relaxation parameter in (0, 2).
    pub alpha: f64,
    pub adaptive_rho: bool,
    pub adaptive_rho_interval: usize,
    pub adaptive_rho_tolerance: f64,
    pub scaling_iters: usize,
    pub check_interval: usize,
    pub polish: bool,
    pub polish_delta: f64,
    pub polish_refine_iters: usize,
}

impl Default for AdmmSettings {
    fn default() -> Self {
        Self {
            eps_abs: 1e-6,
            eps_rel: 0.0,
            eps_pinf: 1e-7,
            max_iter: 50_000,
            rho: 0.1,
            sigma: 1e-6,
            alpha: 1.6,
            adaptive_rho: true,
            adaptive_rho_interval: 50,
            adaptive_rho_tolerance: 5.0,
            scaling_iters: 10,
            check_interval: 5,
            polish: true,
            polish_delta: 1e-7,
            polish_refine_iters: 8,
        }
    }
}

/// Result of an ADMM solve in the two-sided form, unscaled.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSolution {
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub status: SolveStatus,
    pub iterations: usize,
    pub kkt: KktBreakdown,
    pub polished: bool,
}

/// Step-size class of a constraint row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowClass {
    Free,
    Equality,
    Inequality,
}

impl RowClass {
    const ALL: [RowClass; 3] = [RowClass::Free, RowClass::Equality, RowClass::Inequality];

    fn rho(self, rho: f64) -> f64 {
        match self {
            RowClass::Free => RHO_MIN,
            RowClass::Equality => RHO_EQ_FACTOR * rho,
            RowClass::Inequality => rho,
        }
    }
}

fn row_classes(l: &DVector<f64>, u: &DVector<f64>) -> Vec<RowClass> {
    l.iter()
        .zip(u.iter())
        .map(|(&lo, &hi)| {
            if !lo.is_finite() && !hi.is_finite() {
                RowClass::Free
            } else if (hi - lo).abs() < 1e-12 * (1.0 + lo.abs()) {
                RowClass::Equality
            } else {
                RowClass::Inequality
            }
        })
        .collect()
}

/// `AᵀA` restricted to the rows of each class, so changing the step size
/// only costs a new Cholesky factor.
#[derive(Debug, Clone)]
struct Grams {
    classes: Vec<RowClass>,
    parts: [DMatrix<f64>; 3],
}

impl Grams {
    fn new(a: &DMatrix<f64>, classes: Vec<RowClass>) -> Self {
        let parts = RowClass::ALL.map(|class| {
            let rows: Vec<usize> = (0..classes.len()).filter(|&i| classes[i] == class).collect();
            let sub = a.select_rows(rows.iter());
            sub.tr_mul(&sub)
        });
        Self { classes, parts }
    }
}

#[derive(Debug, Clone)]
struct Scaling {
    d: DVector<f64>,
    e: DVector<f64>,
    c: f64,
}

/// Reusable solver state: scaled data, factorization and iterates.
#[derive(Debug, Clone)]
pub struct AdmmWorkspace {
    settings: AdmmSettings,
    original: BoxQp,
    p: DMatrix<f64>,
    a: DMatrix<f64>,
    q: DVector<f64>,
    l: DVector<f64>,
    u: DVector<f64>,
    scaling: Scaling,
    rho: f64,
    rho_vec: DVector<f64>,
    grams: Grams,
    factor: Cholesky<f64, Dyn>,
    x: DVector<f64>,
    z: DVector<f64>,
    y: DVector<f64>,
    factorizations: usize,
}

fn limit_scaling(v: f64) -> f64 {
    if v < MIN_SCALING {
        1.0
    } else {
        v.min(MAX_SCALING)
    }
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

fn ruiz(p: &mut DMatrix<f64>, a: &mut DMatrix<f64>, q: &DVector<f64>, iters: usize) -> Scaling {
    let n = p.nrows();
    let m = a.nrows();
    let mut d = DVector::from_element(n, 1.0);
    let mut e = DVector::from_element(m, 1.0);
    let mut c = 1.0;
    let mut q_scaled = q.clone();
    for _ in 0..iters {
        let d_step = DVector::from_fn(n, |j, _| {
            let pc = p.column(j).amax();
            let ac = if m > 0 { a.column(j).amax() } else { 0.0 };
            1.0 / limit_scaling(pc.max(ac)).sqrt()
        });
        let e_step = DVector::from_fn(m, |i, _| 1.0 / limit_scaling(a.row(i).amax()).sqrt());
        for j in 0..n {
            for i in 0..n {
                p[(i, j)] *= d_step[i] * d_step[j];
            }
            for i in 0..m {
                a[(i, j)] *= e_step[i] * d_step[j];
            }
        }
        q_scaled.component_mul_assign(&d_step);
        d.component_mul_assign(&d_step);
        e.component_mul_assign(&e_step);

        let mean_col = if n > 0 {
            (0..n).map(|j| p.column(j).amax()).sum::<f64>() / n as f64
        } else {
            1.0
        };
        let c_step = 1.0 / limit_scaling(mean_col.max(q_scaled.amax()));
        *p *= c_step;
        q_scaled *= c_step;
        c *= c_step;
    }
    Scaling { d, e, c }
}

fn scale_bounds(v: &DVector<f64>, e: &DVector<f64>) -> DVector<f64> {
    v.zip_map(e, |b, s| {
        if b >= INF_BOUND {
            f64::INFINITY
        } else if b <= -INF_BOUND {
            f64::NEG_INFINITY
        } else {
            b * s
        }
    })
}

impl AdmmWorkspace {
    pub fn new(problem: &BoxQp, settings: AdmmSettings) -> Result<Self, QpError> {
        problem.check_dimensions()?;
        let mut p = problem.p.clone();
        let mut a = problem.a.clone();
        let scaling = ruiz(&mut p, &mut a, &problem.q, settings.scaling_iters);
        let q = problem.q.component_mul(&scaling.d) * scaling.c;
        let l = scale_bounds(&problem.l, &scaling.e);
        let u = scale_bounds(&problem.u, &scaling.e);
        let rho = settings.rho.clamp(RHO_MIN, RHO_MAX);
        let grams = Grams::new(&a, row_classes(&l, &u));
        let rho_vec = Self::rho_vector(&grams.classes, rho);
        let factor = Self::factorize(&p, &grams, rho, settings.sigma)?;
        let (n, m) = (problem.num_vars(), problem.num_rows());
        Ok(Self {
            settings,
            original: problem.clone(),
            p,
            a,
            q,
            l,
            u,
            scaling,
            rho,
            rho_vec,
            grams,
            factor,
            x: DVector::zeros(n),
            z: DVector::zeros(m),
            y: DVector::zeros(m),
            factorizations: 1,
        })
    }

    fn rho_vector(classes: &[RowClass], rho: f64) -> DVector<f64> {
        DVector::from_iterator(classes.len(), classes.iter().map(|c| c.rho(rho)))
    }

    fn factorize(p: &DMatrix<f64>, grams: &Grams, rho: f64, sigma: f64) -> Result<Cholesky<f64, Dyn>, QpError> {
        let n = p.nrows();
        let mut k = p.clone();
        for (class, g) in RowClass::ALL.iter().zip(grams.parts.iter()) {
            k += g * class.rho(rho);
        }
        for i in 0..n {
            k[(i, i)] += sigma;
        }
        Cholesky::new(k).ok_or(QpError::Factorization)
    }

    pub fn settings(&self) -> &AdmmSettings {
        &self.settings
    }

    pub fn problem(&self) -> &BoxQp {
        &self.original
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn factorizations(&self) -> usize {
        self.factorizations
    }

    pub fn set_max_iter(&mut self, max_iter: usize) {
        self.settings.max_iter = max_iter;
    }

    pub fn update_linear(&mut self, q: &DVector<f64>) -> Result<(), QpError> {
        if q.len() != self.original.q.len() {
            return Err(QpError::DimensionMismatch(format!("q has {} entries, expected {}", q.len(), self.original.q.len())));
        }
        self.original.q.copy_from(q);
        self.q = q.component_mul(&self.scaling.d) * self.scaling.c;
        Ok(())
    }

    /// Replace the row bounds. Rows must keep their equality/inequality
    /// pattern for the cached step sizes to stay sensible; the factorization
    /// is refreshed when it does not.
    pub fn update_bounds(&mut self, l: &DVector<f64>, u: &DVector<f64>) -> Result<(), QpError> {
        let m = self.original.l.len();
        if l.len() != m || u.len() != m {
            return Err(QpError::DimensionMismatch(format!("bounds have {}/{} entries, expected {m}", l.len(), u.len())));
        }
        if l.iter().zip(u.iter()).any(|(a, b)| a > b) {
            return Err(QpError::InvalidBounds);
        }
        self.original.l.copy_from(l);
        self.original.u.copy_from(u);
        self.l = scale_bounds(l, &self.scaling.e);
        self.u = scale_bounds(u, &self.scaling.e);
        let classes = row_classes(&self.l, &self.u);
        if classes != self.grams.classes {
            self.grams = Grams::new(&self.a, classes);
            self.rho_vec = Self::rho_vector(&self.grams.classes, self.rho);
            self.factor = Self::factorize(&self.p, &self.grams, self.rho, self.settings.sigma)?;
            self.factorizations += 1;
        }
        Ok(())
    }

    /// Seed the iterates with an unscaled primal and/or dual guess.
    pub fn warm_start(&mut self, x: Option<&DVector<f64>>, y: Option<&DVector<f64>>) -> Result<(), QpError> {
        if let Some(x) = x {
            if x.len() != self.x.len() {
                return Err(QpError::DimensionMismatch("warm-start primal".into()));
            }
            self.x = x.component_div(&self.scaling.d);
            self.z = &self.a * &self.x;
        }
        if let Some(y) = y {
            if y.len() != self.y.len() {
                return Err(QpError::DimensionMismatch("warm-start dual".into()));
            }
            self.y = y.component_div(&self.scaling.e) * self.scaling.c;
        }
        Ok(())
    }

    pub fn reset(&mut self) {
        self.x.fill(0.0);
        self.z.fill(0.0);
        self.y.fill(0.0);
    }

    fn unscaled_x(&self, x: &DVector<f64>) -> DVector<f64> {
        x.component_mul(&self.scaling.d)
    }

    fn unscaled_y(&self, y: &DVector<f64>) -> DVector<f64> {
        y.component_mul(&self.scaling.e) / self.scaling.c
    }

    fn set_rho(&mut self, rho: f64) -> Result<(), QpError> {
        self.rho = rho.clamp(RHO_MIN, RHO_MAX);
        self.rho_vec = Self::rho_vector(&self.grams.classes, self.rho);
        self.factor = Self::factorize(&self.p, &self.grams, self.rho, self.settings.sigma)?;
        self.factorizations += 1;
        Ok(())
    }

    fn project(&self, v: &mut DVector<f64>) {
        for i in 0..v.len() {
            v[i] = v[i].max(self.l[i]).min(self.u[i]);
        }
    }

    /// Tolerances for the current unscaled iterate.
    fn thresholds(&self, x: &DVector<f64>, y: &DVector<f64>) -> (f64, f64) {
        let qp = &self.original;
        let ax = inf_norm(&(&qp.a * x));
        let px = inf_norm(&(&qp.p * x));
        let aty = inf_norm(&qp.a.tr_mul(y));
        let qn = inf_norm(&qp.q);
        let eps_p = self.settings.eps_abs + self.settings.eps_rel * ax;
        let eps_d = self.settings.eps_abs + self.settings.eps_rel * px.max(aty).max(qn);
        (eps_p, eps_d)
    }

    fn accepts(&self, kkt: &KktBreakdown, eps_p: f64, eps_d: f64) -> bool {
        kkt.primal <= eps_p && kkt.stationarity <= eps_d && kkt.complementarity <= eps_p.max(eps_d)
    }

    fn primal_infeasible(&self, dy_scaled: &DVector<f64>) -> bool {
        let dy = self.unscaled_y(dy_scaled);
        let norm = inf_norm(&dy);
        if norm < 1e-12 {
            return false;
        }
        let eps = self.settings.eps_pinf * norm;
        if inf_norm(&self.original.a.tr_mul(&dy)) > eps {
            return false;
        }
        let mut support = 0.0;
        for i in 0..dy.len() {
            let v = dy[i];
            if v > 0.0 {
                let ub = self.original.u[i];
                if !ub.is_finite() {
                    return false;
                }
                support += ub * v;
            } else if v < 0.0 {
                let lb = self.original.l[i];
                if !lb.is_finite() {
                    return false;
                }
                support += lb * v;
            }
        }
        support < -eps
    }

    /// Active-set polish in scaled coordinates. Returns the unscaled pair.
    fn polish(&self) -> Option<(DVector<f64>, DVector<f64>)> {
        let n = self.x.len();
        let m = self.z.len();
        let mut rows = Vec::new();
        let mut targets = Vec::new();
        for i in 0..m {
            let lower = self.z[i] - self.l[i] < -self.y[i];
            let upper = self.u[i] - self.z[i] < self.y[i];
            if lower && self.l[i].is_finite() {
                rows.push(i);
                targets.push(self.l[i]);
            } else if upper && self.u[i].is_finite() {
                rows.push(i);
                targets.push(self.u[i]);
            }
        }
        let k = rows.len();
        let delta = self.settings.polish_delta;
        let mut kkt0 = DMatrix::zeros(n + k, n + k);
        kkt0.view_mut((0, 0), (n, n)).copy_from(&self.p);
        for (r, &i) in rows.iter().enumerate() {
            for j in 0..n {
                let v = self.a[(i, j)];
                kkt0[(n + r, j)] = v;
                kkt0[(j, n + r)] = v;
            }
        }
        let mut kkt_reg = kkt0.clone();
        for i in 0..n {
            kkt_reg[(i, i)] += delta;
        }
        for r in 0..k {
            kkt_reg[(n + r, n + r)] -= delta;
        }
        let lu = kkt_reg.lu();
        let mut rhs = DVector::zeros(n + k);
        rhs.rows_mut(0, n).copy_from(&(-&self.q));
        for (r, t) in targets.iter().enumerate() {
            rhs[n + r] = *t;
        }
        let mut sol = lu.solve(&rhs)?;
        for _ in 0..self.settings.polish_refine_iters {
            let resid = &rhs - &kkt0 * &sol;
            if inf_norm(&resid) < 1e-15 * (1.0 + inf_norm(&rhs)) {
                break;
            }
            sol += lu.solve(&resid)?;
        }
        if sol.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let x = sol.rows(0, n).into_owned();
        let mut y = DVector::zeros(m);
        for (r, &i) in rows.iter().enumerate() {
            y[i] = sol[n + r];
        }
        Some((self.unscaled_x(&x), self.unscaled_y(&y)))
    }

    fn active_signature(&self) -> Vec<i8> {
        (0..self.z.len())
            .map(|i| {
                if self.z[i] - self.l[i] < -self.y[i] {
                    -1
                } else if self.u[i] - self.z[i] < self.y[i] {
                    1
                } else {
                    0
                }
            })
            .collect()
    }

    pub fn solve(&mut self) -> Result<BoxSolution, QpError> {
        let sigma = self.settings.sigma;
        let alpha = self.settings.alpha;
        let check = self.settings.check_interval.max(1);
        let mut last_polish: Option<Vec<i8>> = None;
        let mut polish_gate = f64::INFINITY;

        for iter in 1..=self.settings.max_iter {
            let y_prev = self.y.clone();
            let mut rhs = &self.x * sigma - &self.q;
            let shifted = self.rho_vec.component_mul(&self.z) - &self.y;
            rhs += self.a.tr_mul(&shifted);
            let x_tilde = self.factor.solve(&rhs);
            let z_tilde = &self.a * &x_tilde;

            self.x = &x_tilde * alpha + &self.x * (1.0 - alpha);
            let z_relax = &z_tilde * alpha + &self.z * (1.0 - alpha);
            let mut z_new = &z_relax + self.y.component_div(&self.rho_vec);
            self.project(&mut z_new);
            self.y += self.rho_vec.component_mul(&(&z_relax - &z_new));
            self.z = z_new;

            if iter % check != 0 && iter != self.settings.max_iter {
                continue;
            }

            let x = self.unscaled_x(&self.x);
            let y = self.unscaled_y(&self.y);
            let kkt = box_kkt_breakdown(&self.original, &x, &y);
            let (eps_p, eps_d) = self.thresholds(&x, &y);
            if self.accepts(&kkt, eps_p, eps_d) {
                return Ok(BoxSolution { x, y, status: SolveStatus::Optimal, iterations: iter, kkt, polished: false });
            }

            let dy = &self.y - &y_prev;
            if self.primal_infeasible(&dy) {
                return Ok(BoxSolution {
                    x,
                    y: self.unscaled_y(&dy),
                    status: SolveStatus::Infeasible,
                    iterations: iter,
                    kkt,
                    polished: false,
                });
            }

            let near = kkt.primal.max(kkt.stationarity) <= polish_gate.min(1e3 * eps_p.max(eps_d).max(1e-9));
            if self.settings.polish && (near || iter == self.settings.max_iter) {
                let signature = self.active_signature();
                if last_polish.as_ref() != Some(&signature) {
                    if let Some((px, py)) = self.polish() {
                        let pk = box_kkt_breakdown(&self.original, &px, &py);
                        let (pe, de) = self.thresholds(&px, &py);
                        if self.accepts(&pk, pe, de) {
                            return Ok(BoxSolution {
                                x: px,
                                y: py,
                                status: SolveStatus::Optimal,
                                iterations: iter,
                                kkt: pk,
                                polished: true,
                            });
                        }
                    }
                    last_polish = Some(signature);
                    polish_gate = 0.1 * kkt.primal.max(kkt.stationarity);
                }
            }

            if self.settings.adaptive_rho && iter % self.settings.adaptive_rho_interval.max(check) == 0 {
                self.adapt_rho()?;
            }
        }

        let x = self.unscaled_x(&self.x);
        let y = self.unscaled_y(&self.y);
        let kkt = box_kkt_breakdown(&self.original, &x, &y);
        Ok(BoxSolution {
            x,
            y,
            status: SolveStatus::MaxIter,
            iterations: self.settings.max_iter,
            kkt,
            polished: false,
        })
    }

    fn adapt_rho(&mut self) -> Result<(), QpError> {
        let ax = &self.a * &self.x;
        let prim = inf_norm(&(&ax - &self.z));
        let prim_scale = inf_norm(&ax).max(inf_norm(&self.z)).max(1e-30);
        let px = &self.p * &self.x;
        let aty = self.a.tr_mul(&self.y);
        let dual = inf_norm(&(&px + &self.q + &aty));
        let dual_scale = inf_norm(&px).max(inf_norm(&aty)).max(inf_norm(&self.q)).max(1e-30);
        let ratio = (prim / prim_scale) / (dual / dual_scale).max(1e-30);
        let candidate = (self.rho * ratio.sqrt()).clamp(RHO_MIN, RHO_MAX);
        let tol = self.settings.adaptive_rho_tolerance;
        if candidate.is_finite() && (candidate > tol * self.rho || candidate < self.rho / tol) {
            self.set_rho(candidate)?;
        }
        Ok(())
    }
}

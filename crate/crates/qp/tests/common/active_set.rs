//! Brute-force active-set oracle for small strictly convex QPs.
//!
//! Enumerates every subset of inequality rows, solves the equality-constrained
//! KKT system with that subset held active and keeps the pattern that is both
//! primal and dual feasible. Exponential in the number of inequalities; only
//! meant for tests.

#![allow(dead_code)]

use deepc_qp::QuadraticProgram;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub struct OracleSolution {
    pub z: DVector<f64>,
    pub objective: f64,
    pub active: Vec<usize>,
}

pub fn enumerate_active_sets(qp: &QuadraticProgram) -> Option<OracleSolution> {
    let n = qp.num_vars();
    let me = qp.num_eq();
    let mi = qp.num_in();
    assert!(mi <= 16, "oracle is exponential in the inequality count");
    for mask in 0u32..(1u32 << mi) {
        let active: Vec<usize> = (0..mi).filter(|i| mask & (1 << i) != 0).collect();
        let k = me + active.len();
        let mut kkt = DMatrix::zeros(n + k, n + k);
        let mut rhs = DVector::zeros(n + k);
        kkt.view_mut((0, 0), (n, n)).copy_from(&qp.hessian);
        for j in 0..n {
            rhs[j] = -qp.linear[j];
        }
        for r in 0..me {
            for j in 0..n {
                kkt[(n + r, j)] = qp.a_eq[(r, j)];
                kkt[(j, n + r)] = qp.a_eq[(r, j)];
            }
            rhs[n + r] = qp.b_eq[r];
        }
        for (s, &i) in active.iter().enumerate() {
            let r = me + s;
            for j in 0..n {
                kkt[(n + r, j)] = qp.a_in[(i, j)];
                kkt[(j, n + r)] = qp.a_in[(i, j)];
            }
            rhs[n + r] = qp.b_in[i];
        }
        let Some(sol) = kkt.lu().solve(&rhs) else { continue };
        let z = sol.rows(0, n).into_owned();
        let feasible = (0..mi).all(|i| (qp.a_in.row(i) * &z)[0] <= qp.b_in[i] + 1e-9);
        let dual_ok = (0..active.len()).all(|s| sol[n + me + s] >= -1e-9);
        if feasible && dual_ok {
            let objective = qp.objective(&z);
            return Some(OracleSolution { z, objective, active });
        }
    }
    None
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// Strictly convex QP with `me` equalities and `mi` inequalities, of which
/// `active` hold with equality and positive multipliers at the optimum.
pub fn random_qp(rng: &mut ChaCha8Rng, n: usize, me: usize, mi: usize, active: usize) -> QuadraticProgram {
    assert!(active <= mi && me + active <= n);
    let m = random_matrix(rng, n, n);
    let h = &m * m.transpose() + DMatrix::identity(n, n) * 0.5;
    let x_star = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
    let a_eq = random_matrix(rng, me, n);
    let b_eq = &a_eq * &x_star;
    let a_in = random_matrix(rng, mi, n);
    let mut b_in = &a_in * &x_star;
    let mut mu = DVector::zeros(mi);
    for i in 0..mi {
        if i < active {
            mu[i] = rng.random_range(0.2..2.0);
        } else {
            b_in[i] += rng.random_range(0.2..2.0);
        }
    }
    let nu = DVector::from_fn(me, |_, _| rng.random_range(-1.0..1.0));
    let f = -(&h * &x_star) - a_eq.tr_mul(&nu) - a_in.tr_mul(&mu);
    QuadraticProgram::new(h, f)
        .with_equalities(a_eq, b_eq)
        .with_inequalities(a_in, b_in)
}

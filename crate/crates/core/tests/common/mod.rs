#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Discrete LTI system `x⁺ = A x + B u`, `y = C x + D u`.
#[derive(Debug, Clone)]
pub struct Lti {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

impl Lti {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Outputs for inputs `u` (`m × T`) from `x0`; returns `(y, x_T)`.
    pub fn simulate(&self, x0: &DVector<f64>, u: &DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
        let mut x = x0.clone();
        let mut y = DMatrix::zeros(self.c.nrows(), u.ncols());
        for t in 0..u.ncols() {
            let ut = u.column(t);
            y.set_column(t, &(&self.c * &x + &self.d * ut));
            x = &self.a * &x + &self.b * ut;
        }
        (y, x)
    }

    pub fn controllability_rank(&self) -> usize {
        let n = self.n();
        let m = self.b.ncols();
        let mut ctrb = DMatrix::zeros(n, n * m);
        let mut blk = self.b.clone();
        for i in 0..n {
            ctrb.view_mut((0, i * m), (n, m)).copy_from(&blk);
            blk = &self.a * blk;
        }
        ctrb.rank(1e-9)
    }
}

/// Random stable system with spectral radius about 0.8 and dense B, C, D.
pub fn random_lti(rng: &mut ChaCha8Rng, n: usize, m: usize, p: usize) -> Lti {
    loop {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let radius = a.complex_eigenvalues().iter().map(|e| e.norm()).fold(0.0, f64::max);
        let a = a * (0.8 / radius.max(1e-3));
        let sys = Lti {
            a,
            b: DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0)),
            c: DMatrix::from_fn(p, n, |_, _| rng.random_range(-1.0..1.0)),
            d: DMatrix::from_fn(p, m, |_, _| rng.random_range(-0.5..0.5)),
        };
        if sys.controllability_rank() == n {
            return sys;
        }
    }
}

/// Independent random ±amp sequences per channel.
pub fn binary_input(rng: &mut ChaCha8Rng, m: usize, t: usize, amp: f64) -> DMatrix<f64> {
    DMatrix::from_fn(m, t, |_, _| if rng.random_bool(0.5) { amp } else { -amp })
}

/// Maximal-length 6-bit LFSR (taps 6,5), mapped to ±1.
pub fn lfsr6(seed: u8, len: usize) -> Vec<f64> {
    let mut reg = (seed & 0x3f).max(1);
    (0..len)
        .map(|_| {
            let bit = ((reg >> 5) ^ (reg >> 4)) & 1;
            reg = ((reg << 1) | bit) & 0x3f;
            if bit == 1 {
                1.0
            } else {
                -1.0
            }
        })
        .collect()
}

/// Row rank by Gaussian elimination with partial pivoting.
pub fn gauss_rank(m: &DMatrix<f64>, tol: f64) -> usize {
    let mut a = m.clone();
    let (rows, cols) = a.shape();
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let (piv, val) = (rank..rows).map(|r| (r, a[(r, c)].abs())).fold((rank, 0.0), |b, x| if x.1 > b.1 { x } else { b });
        if val <= tol {
            continue;
        }
        a.swap_rows(rank, piv);
        for r in rank + 1..rows {
            let f = a[(r, c)] / a[(rank, c)];
            for k in c..cols {
                a[(r, k)] -= f * a[(rank, k)];
            }
        }
        rank += 1;
    }
    rank
}

/// Single-zone toy hub:
/// inputs (radiator kW, heat-pump kW, battery A), outputs
/// (zone °C, [heat-pump output kW,] battery V).
///
/// The zone is a first-order lag on the radiator, the battery voltage an
/// integrator of the current with an ohmic drop.
pub fn toy_hub(with_hp_output: bool) -> Lti {
    let a = DMatrix::from_row_slice(2, 2, &[0.9, 0.0, 0.0, 1.0]);
    let b = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, -0.05]);
    let (c, d) = if with_hp_output {
        (
            DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]),
            DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 3.0, 0.0, 0.0, 0.0, -0.05]),
        )
    } else {
        (
            DMatrix::identity(2, 2),
            DMatrix::from_row_slice(2, 3, &[0.0, 0.0, 0.0, 0.0, 0.0, -0.05]),
        )
    };
    Lti { a, b, c, d }
}

/// Exciting data for the toy hub around a comfortable operating point.
pub fn toy_hub_inputs(rng: &mut ChaCha8Rng, t: usize) -> DMatrix<f64> {
    DMatrix::from_fn(3, t, |i, _| match i {
        0 => rng.random_range(0.0..5.0),
        1 => rng.random_range(0.0..0.5),
        _ => rng.random_range(-15.0..15.0),
    })
}

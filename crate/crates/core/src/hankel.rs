use nalgebra::DMatrix;

use crate::trajectory::Trajectory;
use crate::TrajectoryError;

/// Block-Hankel matrix of depth `l` for a `channels × T_d` signal.
///
/// Row block `t` holds the full channel vector at window offset `t`, so entry
/// `(t*m + c, j)` is channel `c` of sample `t + j`.
pub fn build_hankel(signal: &DMatrix<f64>, l: usize) -> Result<DMatrix<f64>, TrajectoryError> {
    let (m, t_d) = signal.shape();
    if l == 0 || l > t_d {
        return Err(TrajectoryError::WindowTooLong { window: l, length: t_d });
    }
    let cols = t_d - l + 1;
    let mut h = DMatrix::zeros(l * m, cols);
    let data = signal.as_slice();
    // Column j of H is the contiguous slice of samples j..j+l.
    for j in 0..cols {
        h.column_mut(j).copy_from_slice(&data[j * m..(j + l) * m]);
    }
    Ok(h)
}

/// Past/future split of the input and output Hankel matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelBlocks {
    pub u_p: DMatrix<f64>,
    pub y_p: DMatrix<f64>,
    pub u_f: DMatrix<f64>,
    pub y_f: DMatrix<f64>,
    pub t_ini: usize,
    pub t_f: usize,
    pub m: usize,
    pub p: usize,
}

impl HankelBlocks {
    pub fn num_cols(&self) -> usize {
        self.u_p.ncols()
    }

    /// `(U_p; Y_p; U_f; Y_f)` stacked vertically.
    pub fn stacked(&self) -> DMatrix<f64> {
        let n = self.num_cols();
        let rows = self.u_p.nrows() + self.y_p.nrows() + self.u_f.nrows() + self.y_f.nrows();
        let mut s = DMatrix::zeros(rows, n);
        let mut r = 0;
        for b in [&self.u_p, &self.y_p, &self.u_f, &self.y_f] {
            s.rows_mut(r, b.nrows()).copy_from(b);
            r += b.nrows();
        }
        s
    }
}

pub fn partition_hankel(traj: &Trajectory, t_ini: usize, t_f: usize) -> Result<HankelBlocks, TrajectoryError> {
    let l = t_ini + t_f;
    let hu = build_hankel(traj.inputs(), l)?;
    let hy = build_hankel(traj.outputs(), l)?;
    let (m, p) = (traj.m(), traj.p());
    Ok(HankelBlocks {
        u_p: hu.rows(0, t_ini * m).into_owned(),
        u_f: hu.rows(t_ini * m, t_f * m).into_owned(),
        y_p: hy.rows(0, t_ini * p).into_owned(),
        y_f: hy.rows(t_ini * p, t_f * p).into_owned(),
        t_ini,
        t_f,
        m,
        p,
    })
}

use nalgebra::DMatrix;

use crate::hankel::build_hankel;
use crate::trajectory::SignalDims;

/// Relative singular-value cutoff below which a Hankel matrix counts as rank
/// deficient.
pub const RANK_RTOL: f64 = 1e-9;

/// Verdict and diagnostics of a persistency-of-excitation check.
#[derive(Debug, Clone, PartialEq)]
pub struct PeReport {
    pub exciting: bool,
    pub order: usize,
    /// Numerical rank of `H_L(u)`.
    pub rank: usize,
    /// Required rank `L·m`.
    pub required_rank: usize,
    /// `T_d − ((m+1)(L+n_bound) − 1)`; negative when the data is too short.
    pub length_slack: i64,
    /// `σ_min / σ_max` of `H_L(u)` (0 when the window does not fit).
    pub sigma_ratio: f64,
}

impl std::fmt::Display for PeReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "order {}: rank {}/{}, length slack {}, sigma ratio {:.3e} -> {}",
            self.order,
            self.rank,
            self.required_rank,
            self.length_slack,
            self.sigma_ratio,
            if self.exciting { "exciting" } else { "not exciting" }
        )
    }
}

/// Check whether an `m × T_d` input signal is persistently exciting of
/// order `l`, including the data-length requirement for plant order
/// `dims.n_bound`.
pub fn check_persistent_excitation(signal: &DMatrix<f64>, l: usize, dims: &SignalDims) -> PeReport {
    let (m, t_d) = signal.shape();
    let required_rank = l * m;
    let needed = (m + 1) * (l + dims.n_bound);
    let length_slack = t_d as i64 - (needed as i64 - 1);
    let Ok(h) = build_hankel(signal, l) else {
        return PeReport { exciting: false, order: l, rank: 0, required_rank, length_slack, sigma_ratio: 0.0 };
    };
    let sv = singular_values(&h);
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let rank = if smax > 0.0 { sv.iter().filter(|&&s| s / smax >= RANK_RTOL).count() } else { 0 };
    let sigma_ratio = if h.nrows() > h.ncols() || smax == 0.0 {
        0.0
    } else {
        sv.iter().cloned().fold(f64::INFINITY, f64::min) / smax
    };
    PeReport {
        exciting: m == dims.m && rank == required_rank && length_slack >= 0,
        order: l,
        rank,
        required_rank,
        length_slack,
        sigma_ratio,
    }
}

/// Singular values of a (typically wide) matrix. Wide inputs are reduced
/// through a QR of the transpose so the SVD runs on a square factor.
fn singular_values(h: &DMatrix<f64>) -> Vec<f64> {
    if h.ncols() > h.nrows() {
        let r = h.transpose().qr().r();
        r.singular_values().iter().copied().collect()
    } else {
        h.singular_values().iter().copied().collect()
    }
}

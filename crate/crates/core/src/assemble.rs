//! The DeePC step problem written out in full over `(g, u, y, ρ, p)`.
//!
//! The controller solves an equivalent reduced problem; this explicit form is
//! used for audits, QP dumps and post-mortems of failed steps.

use nalgebra::{DMatrix, DVector};

use deepc_qp::QuadraticProgram;

use crate::config::{comfort_bounds_at, ComfortSchedule, DeepcConfig};
use crate::hankel::HankelBlocks;
use crate::layout::{HubLayout, InputRole, OutputRole};
use crate::DeepcError;

/// Data of one receding-horizon step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRequest {
    /// `m × T_ini` most recent inputs.
    pub u_ini: DMatrix<f64>,
    /// `p × T_ini` most recent outputs.
    pub y_ini: DMatrix<f64>,
    /// Disturbance forecast, one row per disturbance channel, `T_f` columns.
    pub v_forecast: DMatrix<f64>,
    /// Energy price per future step (CHF/kWh).
    pub prices: Vec<f64>,
    /// Absolute hour at which the first planned input is applied. The output
    /// of plan step `k` is measured at hour `start_hour + k + 1`.
    pub start_hour: usize,
}

/// A channel of one future time step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Chan {
    U(usize),
    Y(usize),
}

/// Per-step constraint structure derived from the channel roles.
#[derive(Debug, Clone)]
pub(crate) struct RowPlan {
    /// Channels with constant box bounds.
    pub bounded: Vec<(Chan, f64, f64)>,
    /// Zone-temperature output channels carrying the comfort band.
    pub zones: Vec<usize>,
    /// Disturbance input channels, in forecast row order.
    pub pinned: Vec<usize>,
    /// Linear identities `Σ coef·chan = 0` holding at every step.
    pub couplings: Vec<Vec<(Chan, f64)>>,
    /// Grid import `p = Σ coef·chan`.
    pub power: Vec<(Chan, f64)>,
}

impl RowPlan {
    pub fn new(layout: &HubLayout, cfg: &DeepcConfig) -> Result<Self, DeepcError> {
        let hp_out = layout.output(OutputRole::HeatPumpOutput);
        let hp_in = layout.input(InputRole::HeatPump);
        let mut bounded = Vec::new();
        let mut radiators = Vec::new();
        for (i, role) in layout.inputs.iter().enumerate() {
            match *role {
                InputRole::Radiator { zone } => {
                    let alpha = cfg.alpha.get(zone).ok_or_else(|| {
                        DeepcError::Config(format!("no conversion factor for radiator zone {zone}"))
                    })?;
                    radiators.push((Chan::U(i), -1.0 / alpha));
                    bounded.push((Chan::U(i), cfg.u_s_bounds[0], cfg.u_s_bounds[1]));
                }
                InputRole::Blind { .. } => bounded.push((Chan::U(i), cfg.blind_bounds[0], cfg.blind_bounds[1])),
                InputRole::BatteryCurrent => bounded.push((Chan::U(i), cfg.u_b_bounds[0], cfg.u_b_bounds[1])),
                InputRole::HeatPump if hp_out.is_none() => bounded.push((Chan::U(i), 0.0, f64::INFINITY)),
                _ => {}
            }
        }
        for (j, role) in layout.outputs.iter().enumerate() {
            match role {
                OutputRole::BatteryVoltage => bounded.push((Chan::Y(j), cfg.y_b_bounds[0], cfg.y_b_bounds[1])),
                OutputRole::HeatPumpOutput => bounded.push((Chan::Y(j), 0.0, f64::INFINITY)),
                _ => {}
            }
        }

        let mut couplings = Vec::new();
        match (hp_in, hp_out) {
            (Some(uh), Some(yh)) => {
                couplings.push(vec![(Chan::Y(yh), 1.0), (Chan::U(uh), -cfg.c_h)]);
                if !radiators.is_empty() {
                    let mut row = vec![(Chan::Y(yh), 1.0)];
                    row.extend(&radiators);
                    couplings.push(row);
                }
            }
            (Some(uh), None) if !radiators.is_empty() => {
                let mut row = vec![(Chan::U(uh), cfg.c_h)];
                row.extend(&radiators);
                couplings.push(row);
            }
            (None, Some(yh)) if !radiators.is_empty() => {
                let mut row = vec![(Chan::Y(yh), 1.0)];
                row.extend(&radiators);
                couplings.push(row);
            }
            _ => {}
        }

        let mut power = Vec::new();
        if let Some(uh) = hp_in {
            power.push((Chan::U(uh), 1.0));
        }
        if let Some(ub) = layout.input(InputRole::BatteryCurrent) {
            power.push((Chan::U(ub), -cfg.kw_per_amp()));
        }

        Ok(Self { bounded, zones: layout.zones(), pinned: layout.disturbance_indices(), couplings, power })
    }
}

pub(crate) fn check_request(
    blocks: &HankelBlocks,
    layout: &HubLayout,
    req: &StepRequest,
    cfg: &DeepcConfig,
) -> Result<(), DeepcError> {
    let (m, p) = (layout.m(), layout.p());
    let mismatch = |what: String| Err(DeepcError::DimensionMismatch(what));
    if blocks.m != m || blocks.p != p {
        return mismatch(format!("blocks are {}x{} channels, layout {m}x{p}", blocks.m, blocks.p));
    }
    if blocks.t_ini != cfg.t_ini || blocks.t_f != cfg.t_f {
        return mismatch(format!(
            "blocks built for T_ini={} T_f={}, config has {} and {}",
            blocks.t_ini, blocks.t_f, cfg.t_ini, cfg.t_f
        ));
    }
    if req.u_ini.shape() != (m, cfg.t_ini) || req.y_ini.shape() != (p, cfg.t_ini) {
        return mismatch(format!(
            "initial window is {:?}/{:?}, expected ({m}, {t}) and ({p}, {t})",
            req.u_ini.shape(),
            req.y_ini.shape(),
            t = cfg.t_ini
        ));
    }
    if req.v_forecast.shape() != (layout.num_disturbances(), cfg.t_f) {
        return mismatch(format!(
            "forecast is {:?}, expected ({}, {})",
            req.v_forecast.shape(),
            layout.num_disturbances(),
            cfg.t_f
        ));
    }
    if req.prices.len() != cfg.t_f {
        return mismatch(format!("{} prices for a horizon of {}", req.prices.len(), cfg.t_f));
    }
    Ok(())
}

/// Offsets of each variable group in the decision vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarLayout {
    pub n_g: usize,
    pub m: usize,
    pub p: usize,
    pub zones: usize,
    pub t_f: usize,
}

impl VarLayout {
    pub fn g(&self) -> usize {
        0
    }
    pub fn u(&self, k: usize, ch: usize) -> usize {
        self.n_g + k * self.m + ch
    }
    pub fn y(&self, k: usize, ch: usize) -> usize {
        self.n_g + self.t_f * self.m + k * self.p + ch
    }
    pub fn rho(&self, k: usize, zone: usize) -> usize {
        self.n_g + self.t_f * (self.m + self.p) + k * self.zones + zone
    }
    pub fn power(&self, k: usize) -> usize {
        self.n_g + self.t_f * (self.m + self.p + self.zones) + k
    }
    pub fn len(&self) -> usize {
        self.n_g + self.t_f * (self.m + self.p + self.zones + 1)
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn chan(&self, k: usize, c: Chan) -> usize {
        match c {
            Chan::U(i) => self.u(k, i),
            Chan::Y(j) => self.y(k, j),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DeepcProblem {
    pub qp: QuadraticProgram,
    pub vars: VarLayout,
}

/// Build the step QP over `(g, u, y, ρ, p)`:
///
/// ```text
/// min  Σ_k (β p_k + c_k/(2β))² + λ_ρ‖ρ‖² + λ_g‖g‖²
/// s.t. (U_p; Y_p; U_f; Y_f) g = (u_ini; y_ini; u; y)
///      input/output bounds, comfort band relaxed by ρ ≥ 0,
///      heat-pump couplings, p = u_h − (v_lin/1000) u_b,
///      disturbance inputs equal to their forecast.
/// ```
pub fn assemble_deepc_qp(
    blocks: &HankelBlocks,
    layout: &HubLayout,
    req: &StepRequest,
    cfg: &DeepcConfig,
    schedule: &ComfortSchedule,
) -> Result<DeepcProblem, DeepcError> {
    cfg.validate()?;
    check_request(blocks, layout, req, cfg)?;
    let plan = RowPlan::new(layout, cfg)?;
    let (m, p, t_ini, t_f) = (layout.m(), layout.p(), cfg.t_ini, cfg.t_f);
    let vars = VarLayout { n_g: blocks.num_cols(), m, p, zones: plan.zones.len(), t_f };
    let n = vars.len();

    let mut eq_rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    let mut in_rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();

    // Hankel consistency. Dense rows are added separately below.
    let n_data_rows = t_ini * (m + p) + t_f * (m + p);

    for k in 0..t_f {
        for (r, &ch) in plan.pinned.iter().enumerate() {
            eq_rows.push((vec![(vars.u(k, ch), 1.0)], req.v_forecast[(r, k)]));
        }
        for c in &plan.couplings {
            eq_rows.push((c.iter().map(|&(ch, w)| (vars.chan(k, ch), w)).collect(), 0.0));
        }
        let mut pw: Vec<(usize, f64)> = vec![(vars.power(k), 1.0)];
        pw.extend(plan.power.iter().map(|&(ch, w)| (vars.chan(k, ch), -w)));
        eq_rows.push((pw, 0.0));

        for &(ch, lo, hi) in &plan.bounded {
            let idx = vars.chan(k, ch);
            if hi.is_finite() {
                in_rows.push((vec![(idx, 1.0)], hi));
            }
            if lo.is_finite() {
                in_rows.push((vec![(idx, -1.0)], -lo));
            }
        }
        let (y_min, y_max) = comfort_bounds_at((req.start_hour + k + 1) as f64, schedule);
        for (zi, &ch) in plan.zones.iter().enumerate() {
            let (y, r) = (vars.y(k, ch), vars.rho(k, zi));
            in_rows.push((vec![(y, -1.0), (r, -1.0)], -y_min));
            in_rows.push((vec![(y, 1.0), (r, -1.0)], y_max));
            in_rows.push((vec![(r, -1.0)], 0.0));
        }
    }

    let me = n_data_rows + eq_rows.len();
    let mut a_eq = DMatrix::zeros(me, n);
    let mut b_eq = DVector::zeros(me);
    let mut row = 0;
    let past = [(&blocks.u_p, &req.u_ini), (&blocks.y_p, &req.y_ini)];
    for (blk, ini) in past {
        for r in 0..blk.nrows() {
            a_eq.view_mut((row, 0), (1, vars.n_g)).copy_from(&blk.row(r));
            b_eq[row] = ini.as_slice()[r];
            row += 1;
        }
    }
    for r in 0..blocks.u_f.nrows() {
        a_eq.view_mut((row, 0), (1, vars.n_g)).copy_from(&blocks.u_f.row(r));
        a_eq[(row, vars.u(r / m, r % m))] = -1.0;
        row += 1;
    }
    for r in 0..blocks.y_f.nrows() {
        a_eq.view_mut((row, 0), (1, vars.n_g)).copy_from(&blocks.y_f.row(r));
        a_eq[(row, vars.y(r / p, r % p))] = -1.0;
        row += 1;
    }
    for (coefs, rhs) in &eq_rows {
        for &(j, w) in coefs {
            a_eq[(row, j)] += w;
        }
        b_eq[row] = *rhs;
        row += 1;
    }
    let mut a_in = DMatrix::zeros(in_rows.len(), n);
    let mut b_in = DVector::zeros(in_rows.len());
    for (i, (coefs, rhs)) in in_rows.iter().enumerate() {
        for &(j, w) in coefs {
            a_in[(i, j)] += w;
        }
        b_in[i] = *rhs;
    }

    let mut h = DMatrix::zeros(n, n);
    let mut f = DVector::zeros(n);
    for j in 0..vars.n_g {
        h[(j, j)] = 2.0 * cfg.lambda_g;
    }
    for k in 0..t_f {
        for zi in 0..vars.zones {
            let r = vars.rho(k, zi);
            h[(r, r)] = 2.0 * cfg.lambda_rho;
        }
        let pk = vars.power(k);
        h[(pk, pk)] = 2.0 * cfg.beta * cfg.beta;
        f[pk] = req.prices[k];
    }
    let constant: f64 = req.prices.iter().map(|c| c * c / (4.0 * cfg.beta * cfg.beta)).sum();

    let mut names = Vec::with_capacity(n);
    names.extend((0..vars.n_g).map(|j| format!("g{j}")));
    for k in 0..t_f {
        names.extend((0..m).map(|i| format!("u{}_{k}", i + 1)));
    }
    for k in 0..t_f {
        names.extend((0..p).map(|j| format!("y{}_{k}", j + 1)));
    }
    for k in 0..t_f {
        names.extend((0..vars.zones).map(|z| format!("rho{}_{k}", z + 1)));
    }
    names.extend((0..t_f).map(|k| format!("p_{k}")));

    let qp = QuadraticProgram::new(h, f)
        .with_constant(constant)
        .with_equalities(a_eq, b_eq)
        .with_inequalities(a_in, b_in)
        .with_var_names(names);
    Ok(DeepcProblem { qp, vars })
}

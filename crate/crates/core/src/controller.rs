//! Receding-horizon DeePC controller.
//!
//! The step problem is solved in reduced coordinates. With the thin SVD
//! `(U_p; Y_p; U_f; Y_f) = U Σ Vᵀ`, only `g = V z` can matter (any null-space
//! component adds cost without changing a constraint), so `‖g‖ = ‖z‖` and
//! every channel value is a row of `M z` with `M = U Σ`. All equalities of a
//! step (past window, pinned disturbances, heat-pump couplings) have fixed
//! rows `E z = e`; they are eliminated once through `z = E⁺e + N w` with `N`
//! an orthonormal basis of `ker E`. What remains is a QP in `(w, ρ)` whose
//! Hessian and constraint matrix never change, so the solver factorisation
//! is computed once per controller and reused at every step.

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use deepc_qp::{AdmmSettings, AdmmWorkspace, BoxQp, SolveStatus};

use crate::assemble::{assemble_deepc_qp, check_request, Chan, RowPlan, StepRequest};
use crate::config::{comfort_bounds_at, ComfortSchedule, DeepcConfig, TariffProfile};
use crate::hankel::HankelBlocks;
use crate::layout::{HubLayout, InputRole};
use crate::trajectory::Trajectory;
use crate::DeepcError;

/// Optimal plan of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPlan {
    /// `m × T_f` planned inputs, disturbance rows equal to the forecast.
    pub u: DMatrix<f64>,
    /// `p × T_f` predicted outputs.
    pub y_pred: DMatrix<f64>,
    /// `zones × T_f` comfort slack (°C).
    pub rho: DMatrix<f64>,
    /// Grid import per step (kW).
    pub p: DVector<f64>,
    pub g: DVector<f64>,
    pub objective: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub kkt_residual: f64,
    /// Duals of the reduced problem, kept for warm starting.
    pub duals: DVector<f64>,
}

impl ControlPlan {
    /// Planned values of input `role` over the horizon.
    pub fn input(&self, layout: &HubLayout, role: InputRole) -> Option<Vec<f64>> {
        layout.input(role).map(|i| self.u.row(i).iter().copied().collect())
    }

    /// First-step inputs, the part meant for application.
    pub fn first_input(&self) -> DVector<f64> {
        self.u.column(0).into_owned()
    }

    /// One row per plan step: `k,u_1..u_m,y_1..y_p,rho_1..,p`.
    pub fn write_csv(&self, path: &Path) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["k".to_string()];
        header.extend((1..=self.u.nrows()).map(|i| format!("u_{i}")));
        header.extend((1..=self.y_pred.nrows()).map(|i| format!("y_{i}")));
        header.extend((1..=self.rho.nrows()).map(|i| format!("rho_{i}")));
        header.push("p".into());
        w.write_record(&header)?;
        for k in 0..self.u.ncols() {
            let mut row = vec![k.to_string()];
            row.extend(self.u.column(k).iter().map(|v| v.to_string()));
            row.extend(self.y_pred.column(k).iter().map(|v| v.to_string()));
            row.extend(self.rho.column(k).iter().map(|v| v.to_string()));
            row.push(self.p[k].to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Initial guess for the next step, derived from the previous plan.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmStart {
    pub g: DVector<f64>,
    pub rho: DMatrix<f64>,
    pub duals: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct DeepcController {
    blocks: HankelBlocks,
    layout: HubLayout,
    cfg: DeepcConfig,
    schedule: ComfortSchedule,
    plan: RowPlan,
    /// `N_g × r` right singular vectors.
    v_r: DMatrix<f64>,
    /// `L(m+p) × r`, every data row in reduced coordinates.
    m_red: DMatrix<f64>,
    /// `r × n_e` pseudo-inverse of the equality rows.
    e_pinv: DMatrix<f64>,
    /// `r × d` orthonormal basis of the equality null space.
    null: DMatrix<f64>,
    /// Inequality channel rows in `z` coordinates, step-major.
    t_z: DMatrix<f64>,
    /// Grid-power rows in `z` coordinates.
    pi_z: DMatrix<f64>,
    /// `Π N`.
    pi_w: DMatrix<f64>,
    workspace: AdmmWorkspace,
    rows_per_step: usize,
}

impl DeepcController {
    pub fn new(
        blocks: HankelBlocks,
        layout: HubLayout,
        cfg: DeepcConfig,
        schedule: ComfortSchedule,
    ) -> Result<Self, DeepcError> {
        Self::with_settings(blocks, layout, cfg, schedule, None)
    }

    /// Like [`DeepcController::new`] with explicit solver settings.
    pub fn with_settings(
        blocks: HankelBlocks,
        layout: HubLayout,
        cfg: DeepcConfig,
        schedule: ComfortSchedule,
        settings: Option<AdmmSettings>,
    ) -> Result<Self, DeepcError> {
        cfg.validate()?;
        schedule.validate()?;
        let plan = RowPlan::new(&layout, &cfg)?;
        let (m, p, t_ini, t_f) = (layout.m(), layout.p(), cfg.t_ini, cfg.t_f);
        if blocks.m != m || blocks.p != p || blocks.t_ini != t_ini || blocks.t_f != t_f {
            return Err(DeepcError::DimensionMismatch(format!(
                "blocks ({}x{}, T_ini {}, T_f {}) do not match layout/config ({m}x{p}, T_ini {t_ini}, T_f {t_f})",
                blocks.m, blocks.p, blocks.t_ini, blocks.t_f
            )));
        }

        // Thin SVD through the tall transpose: Sᵀ = W Σ Xᵀ gives S = X Σ Wᵀ.
        let stacked = blocks.stacked();
        let svd = stacked.transpose().svd(true, true);
        let (w, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
        let sv = &svd.singular_values;
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] > cfg.data_rtol * smax && sv[i] > 0.0).collect();
        if keep.is_empty() {
            return Err(DeepcError::Config("Hankel data is identically zero".into()));
        }
        let r = keep.len();
        let v_r = w.select_columns(&keep);
        let mut m_red = vt.transpose().select_columns(&keep);
        for (c, &i) in keep.iter().enumerate() {
            m_red.column_mut(c).scale_mut(sv[i]);
        }

        let idx = RowIndex { m, p, t_ini, t_f };
        let e_sel = equality_rows(&plan, &idx);
        let e_mat = combine_rows(&m_red, &e_sel);
        let (e_pinv, null) = eliminate(&e_mat, cfg.consistency_rtol, r);

        let (t_sel, rows_per_step) = inequality_channels(&plan, &idx);
        let t_z = combine_rows(&m_red, &t_sel);
        let p_sel: Vec<Vec<(usize, f64)>> = (0..t_f)
            .map(|k| plan.power.iter().map(|&(c, w)| (idx.chan(k, c), w)).collect())
            .collect();
        let pi_z = combine_rows(&m_red, &p_sel);
        let pi_w = &pi_z * &null;

        let d = null.ncols();
        let nz = plan.zones.len();
        let n_rho = nz * t_f;
        let n = d + n_rho;
        let mut hess = DMatrix::zeros(n, n);
        {
            let mut hw = hess.view_mut((0, 0), (d, d));
            hw.copy_from(&(pi_w.tr_mul(&pi_w) * (2.0 * cfg.beta * cfg.beta)));
            for i in 0..d {
                hw[(i, i)] += 2.0 * cfg.lambda_g;
            }
        }
        for i in d..n {
            hess[(i, i)] = 2.0 * cfg.lambda_rho;
        }
        // Symmetrize away rounding in ΠᵀΠ.
        let hess = (&hess + hess.transpose()) * 0.5;

        let t_w = &t_z * &null;
        let n_rows = rows_per_step * t_f;
        let mut a = DMatrix::zeros(n_rows, n);
        let nb = plan.bounded.len();
        for k in 0..t_f {
            let base = k * rows_per_step;
            for i in 0..nb {
                a.view_mut((base + i, 0), (1, d)).copy_from(&t_w.row(base + i));
            }
            for zi in 0..nz {
                let y_row = t_w.row(base + nb + zi);
                let rho = d + k * nz + zi;
                a.view_mut((base + nb + zi, 0), (1, d)).copy_from(&y_row);
                a[(base + nb + zi, rho)] = 1.0;
                a.view_mut((base + nb + nz + zi, 0), (1, d)).copy_from(&y_row);
                a[(base + nb + nz + zi, rho)] = -1.0;
                a[(base + nb + 2 * nz + zi, rho)] = 1.0;
            }
        }
        let boxed = BoxQp {
            p: hess,
            q: DVector::zeros(n),
            a,
            l: DVector::from_element(n_rows, -1.0),
            u: DVector::from_element(n_rows, 1.0),
        };
        let settings = settings.unwrap_or_else(|| AdmmSettings {
            eps_abs: cfg.solver_tol,
            eps_rel: cfg.solver_tol,
            max_iter: cfg.solver_max_iter,
            polish: true,
            ..AdmmSettings::default()
        });
        let workspace = AdmmWorkspace::new(&boxed, settings)?;

        Ok(Self {
            blocks,
            layout,
            cfg,
            schedule,
            plan,
            v_r,
            m_red,
            e_pinv,
            null,
            t_z,
            pi_z,
            pi_w,
            workspace,
            rows_per_step,
        })
    }

    pub fn config(&self) -> &DeepcConfig {
        &self.cfg
    }

    pub fn layout(&self) -> &HubLayout {
        &self.layout
    }

    pub fn blocks(&self) -> &HankelBlocks {
        &self.blocks
    }

    pub fn schedule(&self) -> &ComfortSchedule {
        &self.schedule
    }

    /// Dimension of the reduced coefficient space.
    pub fn data_rank(&self) -> usize {
        self.v_r.ncols()
    }

    /// Free directions left after eliminating the step equalities.
    pub fn free_dims(&self) -> usize {
        self.null.ncols()
    }

    /// Solve one step. Pure: the controller is not modified.
    pub fn step(&self, req: &StepRequest, warm: Option<&WarmStart>) -> Result<ControlPlan, DeepcError> {
        check_request(&self.blocks, &self.layout, req, &self.cfg)?;
        let (t_f, nz, d) = (self.cfg.t_f, self.plan.zones.len(), self.null.ncols());
        let beta = self.cfg.beta;

        let e = self.equality_rhs(req);
        let z_p = &self.e_pinv * &e;
        let t0 = &self.t_z * &z_p;
        let p0 = &self.pi_z * &z_p;
        let c = DVector::from_column_slice(&req.prices);

        let mut q = DVector::zeros(d + nz * t_f);
        let qw = self.pi_w.tr_mul(&(&p0 * (2.0 * beta * beta) + &c)) + self.null.tr_mul(&z_p) * (2.0 * self.cfg.lambda_g);
        q.rows_mut(0, d).copy_from(&qw);

        let (l, u) = self.row_bounds(req, &t0);
        let mut ws = self.workspace.clone();
        ws.update_linear(&q)?;
        ws.update_bounds(&l, &u)?;
        if let Some(w) = warm {
            if w.g.len() == self.blocks.num_cols() && w.rho.shape() == (nz, t_f) && w.duals.len() == l.len() {
                let z = self.v_r.tr_mul(&w.g);
                let mut x = DVector::zeros(d + nz * t_f);
                x.rows_mut(0, d).copy_from(&self.null.tr_mul(&(z - &z_p)));
                x.rows_mut(d, nz * t_f).copy_from_slice(w.rho.as_slice());
                ws.warm_start(Some(&x), Some(&w.duals))?;
            }
        }
        let sol = ws.solve()?;
        if sol.status != SolveStatus::Optimal {
            let full = assemble_deepc_qp(&self.blocks, &self.layout, req, &self.cfg, &self.schedule)?;
            return Err(DeepcError::Solver { status: sol.status, kkt: sol.kkt.max(), qp: Box::new(full.qp) });
        }

        let wv = sol.x.rows(0, d).into_owned();
        let z = &z_p + &self.null * &wv;
        let g = &self.v_r * &z;
        let data = &self.m_red * &z;
        let (m, p, t_ini) = (self.layout.m(), self.layout.p(), self.cfg.t_ini);
        let off_u = t_ini * (m + p);
        let off_y = off_u + t_f * m;
        let mut u_plan = DMatrix::from_column_slice(m, t_f, data.rows(off_u, t_f * m).as_slice());
        // Disturbance rows hold the forecast exactly.
        for (r, &ch) in self.plan.pinned.iter().enumerate() {
            for k in 0..t_f {
                u_plan[(ch, k)] = req.v_forecast[(r, k)];
            }
        }
        let y_pred = DMatrix::from_column_slice(p, t_f, data.rows(off_y, t_f * p).as_slice());
        let rho = DMatrix::from_column_slice(nz, t_f, sol.x.rows(d, nz * t_f).as_slice());
        let power: DVector<f64> = DVector::from_fn(t_f, |k, _| {
            self.plan
                .power
                .iter()
                .map(|&(ch, w)| match ch {
                    Chan::U(i) => w * u_plan[(i, k)],
                    Chan::Y(j) => w * y_pred[(j, k)],
                })
                .sum()
        });
        let econ: f64 = (0..t_f).map(|k| (beta * power[k] + req.prices[k] / (2.0 * beta)).powi(2)).sum();
        let objective = econ + self.cfg.lambda_rho * rho.norm_squared() + self.cfg.lambda_g * g.norm_squared();

        Ok(ControlPlan {
            u: u_plan,
            y_pred,
            rho,
            p: power,
            g,
            objective,
            status: sol.status,
            iterations: sol.iterations,
            kkt_residual: sol.kkt.max(),
            duals: sol.y,
        })
    }

    /// Shift a plan by one step for use as the next warm start: `g` moves
    /// one column forward in the Hankel data, slack and duals move one step
    /// forward in time and the last step is repeated.
    pub fn shift(&self, plan: &ControlPlan) -> WarmStart {
        let n_g = plan.g.len();
        let g = DVector::from_fn(n_g, |j, _| if j == 0 { 0.0 } else { plan.g[j - 1] });
        let t_f = plan.rho.ncols();
        let rho = DMatrix::from_fn(plan.rho.nrows(), t_f, |i, k| plan.rho[(i, (k + 1).min(t_f - 1))]);
        let rps = self.rows_per_step;
        let duals = DVector::from_fn(plan.duals.len(), |i, _| {
            let (k, r) = (i / rps, i % rps);
            plan.duals[(k + 1).min(t_f - 1) * rps + r]
        });
        WarmStart { g, rho, duals }
    }

    fn equality_rhs(&self, req: &StepRequest) -> DVector<f64> {
        let t_f = self.cfg.t_f;
        let mut e = Vec::with_capacity(self.e_pinv.ncols());
        e.extend_from_slice(req.u_ini.as_slice());
        e.extend_from_slice(req.y_ini.as_slice());
        for k in 0..t_f {
            for r in 0..self.plan.pinned.len() {
                e.push(req.v_forecast[(r, k)]);
            }
            e.extend(std::iter::repeat(0.0).take(self.plan.couplings.len()));
        }
        DVector::from_vec(e)
    }

    fn row_bounds(&self, req: &StepRequest, t0: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let (t_f, nz, nb) = (self.cfg.t_f, self.plan.zones.len(), self.plan.bounded.len());
        let n_rows = self.rows_per_step * t_f;
        let mut l = DVector::zeros(n_rows);
        let mut u = DVector::zeros(n_rows);
        for k in 0..t_f {
            let base = k * self.rows_per_step;
            for (i, &(_, lo, hi)) in self.plan.bounded.iter().enumerate() {
                l[base + i] = lo - t0[base + i];
                u[base + i] = hi - t0[base + i];
            }
            let (y_min, y_max) = comfort_bounds_at((req.start_hour + k + 1) as f64, &self.schedule);
            for zi in 0..nz {
                let y0 = t0[base + nb + zi];
                l[base + nb + zi] = y_min - y0;
                u[base + nb + zi] = f64::INFINITY;
                l[base + nb + nz + zi] = f64::NEG_INFINITY;
                u[base + nb + nz + zi] = y_max - y0;
                l[base + nb + 2 * nz + zi] = 0.0;
                u[base + nb + 2 * nz + zi] = f64::INFINITY;
            }
        }
        (l, u)
    }
}

/// Run one receding-horizon step from the tail of `history`.
///
/// `start_hour` is the absolute hour at which the first planned input is
/// applied; `v_forecast` has one row per disturbance channel and `T_f`
/// columns.
pub fn deepc_step(
    controller: &DeepcController,
    history: &Trajectory,
    v_forecast: &DMatrix<f64>,
    tariff: &TariffProfile,
    start_hour: usize,
    warm: Option<&WarmStart>,
) -> Result<ControlPlan, DeepcError> {
    let t_ini = controller.cfg.t_ini;
    let (u_ini, y_ini) = history
        .tail(t_ini)
        .ok_or(DeepcError::ShortHistory { needed: t_ini, got: history.len() })?;
    let req = StepRequest {
        u_ini,
        y_ini,
        v_forecast: v_forecast.clone(),
        prices: tariff.window(start_hour, controller.cfg.t_f),
        start_hour,
    };
    controller.step(&req, warm)
}

/// Row positions inside the stacked Hankel matrix.
struct RowIndex {
    m: usize,
    p: usize,
    t_ini: usize,
    t_f: usize,
}

impl RowIndex {
    fn chan(&self, k: usize, c: Chan) -> usize {
        let base = self.t_ini * (self.m + self.p);
        match c {
            Chan::U(i) => base + k * self.m + i,
            Chan::Y(j) => base + self.t_f * self.m + k * self.p + j,
        }
    }
}

/// Selection rows of `E`: past window, then per step the pinned
/// disturbances followed by the couplings.
fn equality_rows(plan: &RowPlan, idx: &RowIndex) -> Vec<Vec<(usize, f64)>> {
    let mut rows: Vec<Vec<(usize, f64)>> = (0..idx.t_ini * (idx.m + idx.p)).map(|r| vec![(r, 1.0)]).collect();
    for k in 0..idx.t_f {
        for &ch in &plan.pinned {
            rows.push(vec![(idx.chan(k, Chan::U(ch)), 1.0)]);
        }
        for c in &plan.couplings {
            rows.push(c.iter().map(|&(ch, w)| (idx.chan(k, ch), w)).collect());
        }
    }
    rows
}

/// Channel rows of the step-major inequality block: bounded channels, zone
/// temperatures twice (comfort lower/upper) and a placeholder per zone for
/// `ρ ≥ 0`. Returns the rows and the per-step row count.
fn inequality_channels(plan: &RowPlan, idx: &RowIndex) -> (Vec<Vec<(usize, f64)>>, usize) {
    let nz = plan.zones.len();
    let per_step = plan.bounded.len() + 3 * nz;
    let mut rows = Vec::with_capacity(per_step * idx.t_f);
    for k in 0..idx.t_f {
        for &(ch, _, _) in &plan.bounded {
            rows.push(vec![(idx.chan(k, ch), 1.0)]);
        }
        for _ in 0..2 {
            for &zone in &plan.zones {
                rows.push(vec![(idx.chan(k, Chan::Y(zone)), 1.0)]);
            }
        }
        rows.extend(std::iter::repeat(Vec::new()).take(nz));
    }
    (rows, per_step)
}

fn combine_rows(m_red: &DMatrix<f64>, rows: &[Vec<(usize, f64)>]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(rows.len(), m_red.ncols());
    for (i, coefs) in rows.iter().enumerate() {
        for &(r, w) in coefs {
            let src = m_red.row(r) * w;
            let mut dst = out.row_mut(i);
            dst += src;
        }
    }
    out
}

/// Pseudo-inverse of `e` and an orthonormal basis of its null space in `R^r`.
fn eliminate(e: &DMatrix<f64>, rtol: f64, r: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    if e.nrows() == 0 {
        return (DMatrix::zeros(r, 0), DMatrix::identity(r, r));
    }
    let svd = e.clone().svd(true, true);
    let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let sv = &svd.singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..sv.len()).filter(|&i| smax > 0.0 && sv[i] > rtol * smax).collect();
    let k = keep.len();
    let v_k = vt.select_rows(&keep).transpose();
    let mut pinv = v_k.clone();
    for (c, &i) in keep.iter().enumerate() {
        pinv.column_mut(c).unscale_mut(sv[i]);
    }
    let pinv = pinv * u.select_columns(&keep).transpose();
    if k == r {
        return (pinv, DMatrix::zeros(r, 0));
    }
    // Complete V_k to an orthonormal basis: the trailing Householder columns
    // of QR([V_k | I]) span the orthogonal complement.
    let mut aug = DMatrix::zeros(r, k + r);
    aug.view_mut((0, 0), (r, k)).copy_from(&v_k);
    aug.view_mut((0, k), (r, r)).fill_with_identity();
    let q = aug.qr().q();
    let null = q.columns(k, r - k).into_owned();
    (pinv, null)
}

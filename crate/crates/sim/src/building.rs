//! Bilinear RC building model
//!
//! ```text
//! ẋ = A x + B_u u + B_v v + Σ_i (B_vu,i v) u_i,   y = C x
//! ```
//!
//! Time is in hours, temperatures in °C, heat flows in kW and capacitances in
//! kWh/K, so `A` has units 1/h.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::SimError;

/// Thermal states must stay inside this band (°C).
pub const SANE_RANGE: (f64, f64) = (-20.0, 60.0);
pub const DEFAULT_SUBSTEPS: usize = 10;

pub const N_ZONES: usize = 5;
pub const N_FACADES: usize = 4;
/// Radiators (5) then blinds (4).
pub const N_INPUTS: usize = N_ZONES + N_FACADES;
/// Gains (5), ambient, ground, solar (4).
pub const N_DISTURBANCES: usize = 11;
pub const V_AMBIENT: usize = 5;
pub const V_GROUND: usize = 6;
pub const V_SOLAR: usize = 7;

#[derive(Debug, Clone, PartialEq)]
pub struct BuildingModel {
    pub a: DMatrix<f64>,
    pub b_u: DMatrix<f64>,
    pub b_v: DMatrix<f64>,
    /// One `n × n_v` matrix per input.
    pub b_vu: Vec<DMatrix<f64>>,
    pub c: DMatrix<f64>,
}

impl BuildingModel {
    pub fn new(
        a: DMatrix<f64>,
        b_u: DMatrix<f64>,
        b_v: DMatrix<f64>,
        b_vu: Vec<DMatrix<f64>>,
        c: DMatrix<f64>,
    ) -> Result<Self, SimError> {
        let n = a.nrows();
        let ok = a.ncols() == n
            && b_u.nrows() == n
            && b_v.nrows() == n
            && c.ncols() == n
            && b_vu.len() == b_u.ncols()
            && b_vu.iter().all(|m| m.shape() == (n, b_v.ncols()));
        if !ok {
            return Err(SimError::DimensionMismatch(format!(
                "A {:?}, B_u {:?}, B_v {:?}, {} bilinear terms, C {:?}",
                a.shape(),
                b_u.shape(),
                b_v.shape(),
                b_vu.len(),
                c.shape()
            )));
        }
        let max_re = a.complex_eigenvalues().iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
        if !(max_re < 0.0) {
            return Err(SimError::NotHurwitz(max_re));
        }
        Ok(Self { a, b_u, b_v, b_vu, c })
    }

    pub fn n_states(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_inputs(&self) -> usize {
        self.b_u.ncols()
    }

    pub fn n_disturbances(&self) -> usize {
        self.b_v.ncols()
    }

    pub fn n_outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn derivative(&self, x: &DVector<f64>, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let mut dx = &self.a * x + &self.b_u * u + &self.b_v * v;
        for (i, bvu) in self.b_vu.iter().enumerate() {
            if u[i] != 0.0 {
                dx.gemv(u[i], bvu, v, 1.0);
            }
        }
        dx
    }

    pub fn output(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.c * x
    }
}

/// Advance one zero-order-hold step of length `dt` hours with RK4 on
/// `dt / 10` substeps. Returns the new state and the zone temperatures.
pub fn building_step(
    model: &BuildingModel,
    x: &DVector<f64>,
    u: &DVector<f64>,
    v: &DVector<f64>,
    dt: f64,
) -> Result<(DVector<f64>, DVector<f64>), SimError> {
    building_step_with(model, x, u, v, dt, DEFAULT_SUBSTEPS)
}

pub fn building_step_with(
    model: &BuildingModel,
    x: &DVector<f64>,
    u: &DVector<f64>,
    v: &DVector<f64>,
    dt: f64,
    substeps: usize,
) -> Result<(DVector<f64>, DVector<f64>), SimError> {
    if x.len() != model.n_states() || u.len() != model.n_inputs() || v.len() != model.n_disturbances() {
        return Err(SimError::DimensionMismatch(format!(
            "x {}, u {}, v {} for a model with {} states, {} inputs, {} disturbances",
            x.len(),
            u.len(),
            v.len(),
            model.n_states(),
            model.n_inputs(),
            model.n_disturbances()
        )));
    }
    if !(dt > 0.0) || substeps == 0 {
        return Err(SimError::DimensionMismatch(format!("dt {dt} with {substeps} substeps")));
    }
    let h = dt / substeps as f64;
    let mut x = x.clone();
    for _ in 0..substeps {
        let k1 = model.derivative(&x, u, v);
        let k2 = model.derivative(&(&x + &k1 * (h / 2.0)), u, v);
        let k3 = model.derivative(&(&x + &k2 * (h / 2.0)), u, v);
        let k4 = model.derivative(&(&x + &k3 * h), u, v);
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    }
    if let Some((state, &value)) =
        x.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < SANE_RANGE.0 || **v > SANE_RANGE.1)
    {
        return Err(SimError::StateBlowUp { state, value });
    }
    let y = model.output(&x);
    Ok((x, y))
}

/// Physical parameters of the synthetic five-zone building.
///
/// Zones 0–3 each own one exterior facade (with a window and blind); zone 4
/// is an interior core. Every zone has a roof slab and a floor slab; two
/// partition walls couple zones {0, 1, 4} and {2, 3, 4}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuildingParams {
    /// Zone air and furniture (kWh/K).
    pub c_zone: f64,
    pub c_wall_in: f64,
    pub c_wall_out: f64,
    pub c_roof: f64,
    pub c_floor: f64,
    pub c_partition: f64,
    /// Zone to inner wall layer (kW/K).
    pub g_wall_in: f64,
    /// Inner to outer wall layer.
    pub g_wall_mid: f64,
    /// Outer wall layer to ambient.
    pub g_wall_out: f64,
    pub g_window: f64,
    pub g_roof_in: f64,
    pub g_roof_out: f64,
    pub g_floor_in: f64,
    pub g_floor_ground: f64,
    pub g_partition: f64,
    pub g_infiltration: f64,
    /// Floor area per zone (m²), converts gains from W/m² to kW.
    pub zone_area: f64,
    /// Window area times solar transmittance per facade (m²).
    pub window_solar_area: f64,
    /// Share of radiator output delivered to the zone node.
    pub radiator_efficiency: f64,
}

impl Default for BuildingParams {
    fn default() -> Self {
        Self {
            c_zone: 1.5,
            c_wall_in: 2.0,
            c_wall_out: 3.0,
            c_roof: 2.5,
            c_floor: 4.0,
            c_partition: 2.0,
            g_wall_in: 0.2,
            g_wall_mid: 0.08,
            g_wall_out: 0.2,
            g_window: 0.015,
            g_roof_in: 0.15,
            g_roof_out: 0.05,
            g_floor_in: 0.2,
            g_floor_ground: 0.035,
            g_partition: 0.1,
            g_infiltration: 0.01,
            zone_area: 25.0,
            window_solar_area: 2.0,
            radiator_efficiency: 1.0,
        }
    }
}

/// State indices of the synthetic building.
pub mod nodes {
    pub const ZONE: usize = 0;
    pub const WALL_OUT: usize = 5;
    pub const WALL_IN: usize = 9;
    pub const FLOOR: usize = 13;
    pub const ROOF: usize = 18;
    pub const PARTITION_A: usize = 23;
    pub const PARTITION_B: usize = 24;
    pub const COUNT: usize = 25;
}

/// Assemble the 25-state model from physical parameters.
pub fn synthetic_building(p: &BuildingParams) -> Result<BuildingModel, SimError> {
    use nodes::*;
    let n = COUNT;
    let mut cap = vec![0.0; n];
    let mut g_mat = DMatrix::<f64>::zeros(n, n);
    let mut b_v = DMatrix::<f64>::zeros(n, N_DISTURBANCES);
    fn couple(i: usize, j: usize, g: f64, g_mat: &mut DMatrix<f64>) {
        g_mat[(i, i)] -= g;
        g_mat[(j, j)] -= g;
        g_mat[(i, j)] += g;
        g_mat[(j, i)] += g;
    }
    // Conductance from node `i` to a boundary temperature channel.
    fn boundary(i: usize, ch: usize, g: f64, g_mat: &mut DMatrix<f64>, b_v: &mut DMatrix<f64>) {
        g_mat[(i, i)] -= g;
        b_v[(i, ch)] += g;
    }

    for z in 0..N_ZONES {
        cap[ZONE + z] = p.c_zone;
        cap[FLOOR + z] = p.c_floor;
        cap[ROOF + z] = p.c_roof;
        couple(ZONE + z, FLOOR + z, p.g_floor_in, &mut g_mat);
        boundary(FLOOR + z, V_GROUND, p.g_floor_ground, &mut g_mat, &mut b_v);
        couple(ZONE + z, ROOF + z, p.g_roof_in, &mut g_mat);
        boundary(ROOF + z, V_AMBIENT, p.g_roof_out, &mut g_mat, &mut b_v);
        boundary(ZONE + z, V_AMBIENT, p.g_infiltration, &mut g_mat, &mut b_v);
        // Internal gains in W/m².
        b_v[(ZONE + z, z)] += p.zone_area / 1000.0;
    }
    for f in 0..N_FACADES {
        cap[WALL_IN + f] = p.c_wall_in;
        cap[WALL_OUT + f] = p.c_wall_out;
        couple(ZONE + f, WALL_IN + f, p.g_wall_in, &mut g_mat);
        couple(WALL_IN + f, WALL_OUT + f, p.g_wall_mid, &mut g_mat);
        boundary(WALL_OUT + f, V_AMBIENT, p.g_wall_out, &mut g_mat, &mut b_v);
        boundary(ZONE + f, V_AMBIENT, p.g_window, &mut g_mat, &mut b_v);
    }
    cap[PARTITION_A] = p.c_partition;
    cap[PARTITION_B] = p.c_partition;
    for z in [0, 1, 4] {
        couple(ZONE + z, PARTITION_A, p.g_partition, &mut g_mat);
    }
    for z in [2, 3, 4] {
        couple(ZONE + z, PARTITION_B, p.g_partition, &mut g_mat);
    }

    let mut b_u = DMatrix::zeros(n, N_INPUTS);
    for z in 0..N_ZONES {
        b_u[(ZONE + z, z)] = p.radiator_efficiency;
    }
    // Blind on facade f passes solar of facade f into zone f.
    let mut b_vu = vec![DMatrix::zeros(n, N_DISTURBANCES); N_INPUTS];
    for f in 0..N_FACADES {
        b_vu[N_ZONES + f][(ZONE + f, V_SOLAR + f)] = p.window_solar_area / 1000.0;
    }

    // Divide every row by its capacitance.
    let mut a = g_mat;
    for i in 0..n {
        if !(cap[i] > 0.0) {
            return Err(SimError::DimensionMismatch(format!("capacitance of node {i} must be positive")));
        }
        let inv = 1.0 / cap[i];
        a.row_mut(i).scale_mut(inv);
        b_u.row_mut(i).scale_mut(inv);
        b_v.row_mut(i).scale_mut(inv);
        for m in b_vu.iter_mut() {
            m.row_mut(i).scale_mut(inv);
        }
    }
    let mut c = DMatrix::zeros(N_ZONES, n);
    for z in 0..N_ZONES {
        c[(z, ZONE + z)] = 1.0;
    }
    BuildingModel::new(a, b_u, b_v, b_vu, c)
}

/// Equilibrium for constant inputs and disturbances.
pub fn steady_state(model: &BuildingModel, u: &DVector<f64>, v: &DVector<f64>) -> Option<DVector<f64>> {
    let mut a = model.a.clone();
    let mut rhs = -(&model.b_u * u + &model.b_v * v);
    for (i, bvu) in model.b_vu.iter().enumerate() {
        rhs -= bvu * v * u[i];
    }
    a.try_inverse_mut().then(|| a * rhs)
}

//! Meaning of each input and output channel of a hub trajectory.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InputRole {
    /// Radiator setpoint of a zone (kW), index into the conversion factors.
    Radiator { zone: usize },
    /// Blind opening on a facade (fraction).
    Blind { facade: usize },
    /// Heat-pump electrical input (kW).
    HeatPump,
    /// Battery current (A, positive discharges).
    BatteryCurrent,
    /// Measured, non-manipulated channel pinned to its forecast.
    Disturbance,
    /// Manipulated channel without physical meaning (unbounded).
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputRole {
    ZoneTemperature { zone: usize },
    /// Heat-pump thermal output (kW).
    HeatPumpOutput,
    /// Battery terminal voltage (V).
    BatteryVoltage,
    Free,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HubLayout {
    pub inputs: Vec<InputRole>,
    pub outputs: Vec<OutputRole>,
}

impl HubLayout {
    /// 22 inputs: radiators (5), blinds (4), heat pump (1), battery current
    /// (1), disturbances (11). 7 outputs: zone temperatures (5), heat-pump
    /// output (1), battery voltage (1).
    pub fn energy_hub() -> Self {
        let mut inputs: Vec<InputRole> = (0..5).map(|zone| InputRole::Radiator { zone }).collect();
        inputs.extend((0..4).map(|facade| InputRole::Blind { facade }));
        inputs.push(InputRole::HeatPump);
        inputs.push(InputRole::BatteryCurrent);
        inputs.extend(std::iter::repeat(InputRole::Disturbance).take(11));
        let mut outputs: Vec<OutputRole> = (0..5).map(|zone| OutputRole::ZoneTemperature { zone }).collect();
        outputs.push(OutputRole::HeatPumpOutput);
        outputs.push(OutputRole::BatteryVoltage);
        Self { inputs, outputs }
    }

    /// Layout of a plain LTI system: `m_free` manipulated inputs followed by
    /// `m_dist` disturbances, all outputs unconstrained.
    pub fn free(m_free: usize, m_dist: usize, p: usize) -> Self {
        let mut inputs = vec![InputRole::Free; m_free];
        inputs.extend(std::iter::repeat(InputRole::Disturbance).take(m_dist));
        Self { inputs, outputs: vec![OutputRole::Free; p] }
    }

    pub fn m(&self) -> usize {
        self.inputs.len()
    }

    pub fn p(&self) -> usize {
        self.outputs.len()
    }

    pub fn num_disturbances(&self) -> usize {
        self.inputs.iter().filter(|r| **r == InputRole::Disturbance).count()
    }

    pub fn disturbance_indices(&self) -> Vec<usize> {
        self.input_indices(|r| r == InputRole::Disturbance)
    }

    pub fn input_indices(&self, pred: impl Fn(InputRole) -> bool) -> Vec<usize> {
        self.inputs.iter().enumerate().filter(|(_, r)| pred(**r)).map(|(i, _)| i).collect()
    }

    pub fn output_indices(&self, pred: impl Fn(OutputRole) -> bool) -> Vec<usize> {
        self.outputs.iter().enumerate().filter(|(_, r)| pred(**r)).map(|(i, _)| i).collect()
    }

    pub fn input(&self, role: InputRole) -> Option<usize> {
        self.inputs.iter().position(|r| *r == role)
    }

    pub fn output(&self, role: OutputRole) -> Option<usize> {
        self.outputs.iter().position(|r| *r == role)
    }

    /// Zone-temperature output indices, in output order.
    pub fn zones(&self) -> Vec<usize> {
        self.output_indices(|r| matches!(r, OutputRole::ZoneTemperature { .. }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn energy_hub_ordering() {
        let l = HubLayout::energy_hub();
        assert_eq!((l.m(), l.p()), (22, 7));
        assert_eq!(l.input(InputRole::HeatPump), Some(9));
        assert_eq!(l.input(InputRole::BatteryCurrent), Some(10));
        assert_eq!(l.disturbance_indices(), (11..22).collect::<Vec<_>>());
        assert_eq!(l.output(OutputRole::BatteryVoltage), Some(6));
        assert_eq!(l.zones(), vec![0, 1, 2, 3, 4]);
    }
}

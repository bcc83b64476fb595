//! Input/output trajectories and their CSV representation.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::TrajectoryError;

/// Channel counts and the assumed bound on the plant order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalDims {
    pub m: usize,
    pub p: usize,
    pub n_bound: usize,
}

impl SignalDims {
    pub fn new(m: usize, p: usize, n_bound: usize) -> Result<Self, TrajectoryError> {
        if m == 0 || p == 0 {
            return Err(TrajectoryError::EmptyChannels);
        }
        Ok(Self { m, p, n_bound })
    }
}

/// Name and unit of one recorded channel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelInfo {
    pub name: String,
    pub unit: String,
}

impl ChannelInfo {
    pub fn new(name: impl Into<String>, unit: impl Into<String>) -> Self {
        Self { name: name.into(), unit: unit.into() }
    }
}

/// Time-indexed input/output record.
///
/// Samples are stored one column per time step (`m × T_d` and `p × T_d`),
/// so a window of consecutive samples is a contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    inputs: DMatrix<f64>,
    outputs: DMatrix<f64>,
    sample_time_h: f64,
}

impl Trajectory {
    pub fn new(inputs: DMatrix<f64>, outputs: DMatrix<f64>, sample_time_h: f64) -> Result<Self, TrajectoryError> {
        if inputs.nrows() == 0 || outputs.nrows() == 0 {
            return Err(TrajectoryError::EmptyChannels);
        }
        if inputs.ncols() == 0 {
            return Err(TrajectoryError::Empty);
        }
        if inputs.ncols() != outputs.ncols() {
            return Err(TrajectoryError::LengthMismatch { inputs: inputs.ncols(), outputs: outputs.ncols() });
        }
        if !(sample_time_h > 0.0) {
            return Err(TrajectoryError::SampleTime(sample_time_h));
        }
        Ok(Self { inputs, outputs, sample_time_h })
    }

    /// Build from per-sample vectors.
    pub fn from_samples(inputs: &[Vec<f64>], outputs: &[Vec<f64>], sample_time_h: f64) -> Result<Self, TrajectoryError> {
        if inputs.len() != outputs.len() {
            return Err(TrajectoryError::LengthMismatch { inputs: inputs.len(), outputs: outputs.len() });
        }
        let (Some(u0), Some(y0)) = (inputs.first(), outputs.first()) else {
            return Err(TrajectoryError::Empty);
        };
        let (m, p) = (u0.len(), y0.len());
        for (t, (u, y)) in inputs.iter().zip(outputs).enumerate() {
            if u.len() != m || y.len() != p {
                return Err(TrajectoryError::RaggedSample { t, m: u.len(), p: y.len() });
            }
        }
        let t_d = inputs.len();
        let u = DMatrix::from_iterator(m, t_d, inputs.iter().flatten().copied());
        let y = DMatrix::from_iterator(p, t_d, outputs.iter().flatten().copied());
        Self::new(u, y, sample_time_h)
    }

    pub fn len(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn m(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn p(&self) -> usize {
        self.outputs.nrows()
    }

    pub fn sample_time_h(&self) -> f64 {
        self.sample_time_h
    }

    pub fn inputs(&self) -> &DMatrix<f64> {
        &self.inputs
    }

    pub fn outputs(&self) -> &DMatrix<f64> {
        &self.outputs
    }

    /// Last `len` samples as `(u, y)` blocks.
    pub fn tail(&self, len: usize) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        let t_d = self.len();
        (len <= t_d).then(|| {
            (
                self.inputs.columns(t_d - len, len).into_owned(),
                self.outputs.columns(t_d - len, len).into_owned(),
            )
        })
    }

    /// Write `t,u_1..u_m,y_1..y_p` rows plus a `<path>.meta.toml` sidecar
    /// holding sample time and channel units.
    pub fn write_csv(&self, path: &Path, inputs: &[ChannelInfo], outputs: &[ChannelInfo]) -> Result<(), TrajectoryError> {
        if inputs.len() != self.m() || outputs.len() != self.p() {
            return Err(TrajectoryError::Metadata("channel metadata does not match trajectory width".into()));
        }
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.m()).map(|i| format!("u_{i}")));
        header.extend((1..=self.p()).map(|i| format!("y_{i}")));
        w.write_record(&header)?;
        for t in 0..self.len() {
            let mut row = vec![format!("{}", t as f64 * self.sample_time_h)];
            row.extend(self.inputs.column(t).iter().map(|v| format!("{v}")));
            row.extend(self.outputs.column(t).iter().map(|v| format!("{v}")));
            w.write_record(&row)?;
        }
        w.flush()?;
        let meta = TrajectoryMeta {
            sample_time_h: self.sample_time_h,
            inputs: inputs.to_vec(),
            outputs: outputs.to_vec(),
        };
        let text = toml::to_string_pretty(&meta).map_err(|e| TrajectoryError::Metadata(e.to_string()))?;
        fs::write(meta_path(path), text)?;
        Ok(())
    }

    /// Inverse of [`Trajectory::write_csv`].
    pub fn read_csv(path: &Path) -> Result<(Self, TrajectoryMeta), TrajectoryError> {
        let text = fs::read_to_string(meta_path(path))?;
        let meta: TrajectoryMeta = toml::from_str(&text).map_err(|e| TrajectoryError::Metadata(e.to_string()))?;
        let (m, p) = (meta.inputs.len(), meta.outputs.len());
        let mut r = csv::Reader::from_path(path)?;
        let headers = r.headers()?.clone();
        if headers.len() != 1 + m + p {
            return Err(TrajectoryError::Metadata(format!(
                "CSV has {} columns, metadata describes {}",
                headers.len(),
                1 + m + p
            )));
        }
        let mut us = Vec::new();
        let mut ys = Vec::new();
        for (line, record) in r.records().enumerate() {
            let record = record?;
            let values: Result<Vec<f64>, _> = record.iter().skip(1).map(str::parse::<f64>).collect();
            let values = values.map_err(|e| TrajectoryError::Metadata(format!("row {}: {e}", line + 1)))?;
            us.push(values[..m].to_vec());
            ys.push(values[m..].to_vec());
        }
        let traj = Self::from_samples(&us, &ys, meta.sample_time_h)?;
        Ok((traj, meta))
    }
}

/// Sidecar metadata for a trajectory CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub sample_time_h: f64,
    pub inputs: Vec<ChannelInfo>,
    pub outputs: Vec<ChannelInfo>,
}

pub fn meta_path(csv: &Path) -> PathBuf {
    let mut name = csv.as_os_str().to_owned();
    name.push(".meta.toml");
    PathBuf::from(name)
}

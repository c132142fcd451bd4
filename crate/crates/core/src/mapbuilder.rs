//! Radio map construction from localized observations.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use crate::environment::{format_value, Fingerprint, Position, RadioMap};
use crate::error::{Error, Result};

/// Readings averaged per grid point before it counts as estimated.
pub const DEFAULT_N_ACC: usize = 20;

/// Per-position buffers of localized RSS readings. Once a buffer holds
/// `n_acc` readings further readings for that position are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationDirectory {
    n_acc: usize,
    k: usize,
    positions: Vec<Position>,
    lookup: HashMap<(u64, u64), usize>,
    buffers: Vec<Vec<Vec<f64>>>,
}

impl ObservationDirectory {
    pub fn new(positions: &[Position], k: usize, n_acc: usize) -> Result<Self> {
        if n_acc == 0 {
            return Err(Error::config("n_acc must be >= 1"));
        }
        if k == 0 {
            return Err(Error::config("RSS vectors need at least one access point"));
        }
        let lookup = positions
            .iter()
            .enumerate()
            .map(|(i, p)| (p.key(), i))
            .collect();
        Ok(Self {
            n_acc,
            k,
            positions: positions.to_vec(),
            lookup,
            buffers: vec![Vec::new(); positions.len()],
        })
    }

    pub fn n_acc(&self) -> usize {
        self.n_acc
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn count(&self, index: usize) -> usize {
        self.buffers[index].len()
    }

    pub fn is_full(&self, index: usize) -> bool {
        self.buffers[index].len() >= self.n_acc
    }

    pub fn filled(&self) -> usize {
        (0..self.len()).filter(|&i| self.is_full(i)).count()
    }

    pub fn buffer(&self, index: usize) -> &[Vec<f64>] {
        &self.buffers[index]
    }

    /// Stores `rss` under the grid point at `position`. Returns whether the
    /// reading was kept.
    pub fn record_observation(&mut self, position: Position, rss: &[f64]) -> Result<bool> {
        let index = *self.lookup.get(&position.key()).ok_or_else(|| {
            Error::structural(format!(
                "position ({}, {}) is not a grid point",
                position.x, position.y
            ))
        })?;
        self.record_at(index, rss)
    }

    pub fn record_at(&mut self, index: usize, rss: &[f64]) -> Result<bool> {
        if rss.len() != self.k {
            return Err(Error::structural(format!(
                "reading has {} values, expected {}",
                rss.len(),
                self.k
            )));
        }
        let buf = self
            .buffers
            .get_mut(index)
            .ok_or_else(|| Error::structural(format!("grid index {index} out of range")))?;
        if buf.len() >= self.n_acc {
            return Ok(false);
        }
        buf.push(rss.to_vec());
        Ok(true)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Calibrated,
    Estimated,
    Unfilled,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Calibrated => "calibrated",
            Provenance::Estimated => "estimated",
            Provenance::Unfilled => "unfilled",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedEntry {
    pub position: Position,
    /// `None` for unfilled positions.
    pub rss: Option<Vec<f64>>,
    pub provenance: Provenance,
    /// Readings averaged; 0 for calibrated and unfilled positions.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatedRadioMap {
    pub entries: Vec<EstimatedEntry>,
    pub k: usize,
}

impl EstimatedRadioMap {
    pub fn count_of(&self, provenance: Provenance) -> usize {
        self.entries.iter().filter(|e| e.provenance == provenance).count()
    }

    /// RadioMap columns plus `provenance,count`. Unfilled rows leave the RSS
    /// columns empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Csv { path: "<estimated map>".into(), source: e };
        let mut header = crate::environment::radio_map_header(self.k);
        header.push("provenance".into());
        header.push("count".into());
        w.write_record(&header).map_err(csv_err)?;
        for (i, e) in self.entries.iter().enumerate() {
            let mut row = vec![i.to_string(), format_value(e.position.x), format_value(e.position.y)];
            match &e.rss {
                Some(v) => row.extend(v.iter().map(|&x| format_value(x))),
                None => row.extend(std::iter::repeat_n(String::new(), self.k)),
            }
            row.push(e.provenance.as_str().into());
            row.push(e.count.to_string());
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<estimated map>", e))?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Calibrated positions keep their fingerprint, full buffers become their
/// per-AP mean, everything else is unfilled.
pub fn finalize_map(dir: &ObservationDirectory, calibration: &[Fingerprint]) -> Result<EstimatedRadioMap> {
    let mut calibrated: Vec<Option<&Fingerprint>> = vec![None; dir.len()];
    for f in calibration {
        let i = *dir.lookup.get(&f.position.key()).ok_or_else(|| {
            Error::structural(format!(
                "calibration point ({}, {}) is not a grid point",
                f.position.x, f.position.y
            ))
        })?;
        if f.rss.len() != dir.k {
            return Err(Error::structural(format!(
                "calibration fingerprint at ({}, {}) has {} values, expected {}",
                f.position.x,
                f.position.y,
                f.rss.len(),
                dir.k
            )));
        }
        calibrated[i] = Some(f);
    }
    let entries = (0..dir.len())
        .map(|i| {
            let position = dir.positions[i];
            if let Some(f) = calibrated[i] {
                EstimatedEntry {
                    position,
                    rss: Some(f.rss.clone()),
                    provenance: Provenance::Calibrated,
                    count: 0,
                }
            } else if dir.is_full(i) {
                let buf = dir.buffer(i);
                let mean = (0..dir.k)
                    .map(|a| buf.iter().map(|r| r[a]).sum::<f64>() / buf.len() as f64)
                    .collect();
                EstimatedEntry {
                    position,
                    rss: Some(mean),
                    provenance: Provenance::Estimated,
                    count: buf.len(),
                }
            } else {
                EstimatedEntry {
                    position,
                    rss: None,
                    provenance: Provenance::Unfilled,
                    count: 0,
                }
            }
        })
        .collect();
    Ok(EstimatedRadioMap { entries, k: dir.k })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapMetrics {
    /// RMS error over estimated positions; `None` when there are none.
    pub rms_estimated: Option<f64>,
    /// RMS error of the whole map, with unfilled positions taken from the
    /// baseline.
    pub rms_overall: f64,
    pub rms_baseline: f64,
    pub improvement_pct: f64,
}

fn squared_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// RMS errors in dB against `truth`, and the relative improvement of the
/// composed map over `baseline`.
pub fn map_metrics(estimated: &EstimatedRadioMap, truth: &RadioMap, baseline: &RadioMap) -> Result<MapMetrics> {
    let n = estimated.entries.len();
    if truth.len() != n || baseline.len() != n {
        return Err(Error::structural(format!(
            "map sizes differ: estimated {n}, truth {}, baseline {}",
            truth.len(),
            baseline.len()
        )));
    }
    if truth.k() != estimated.k || baseline.k() != estimated.k {
        return Err(Error::structural("maps have different numbers of access points"));
    }
    for (i, e) in estimated.entries.iter().enumerate() {
        if e.position != truth.position(i) || e.position != baseline.position(i) {
            return Err(Error::structural(format!("maps disagree on the position of grid point {i}")));
        }
    }
    let k = estimated.k as f64;
    let mut est_sq = 0.0;
    let mut est_n = 0usize;
    let mut overall_sq = 0.0;
    let mut base_sq = 0.0;
    for (i, e) in estimated.entries.iter().enumerate() {
        let t = truth.rss(i);
        let b = baseline.rss(i);
        base_sq += squared_error(b, t);
        let value = e.rss.as_deref().unwrap_or(b);
        let err = squared_error(value, t);
        overall_sq += err;
        if e.provenance == Provenance::Estimated {
            est_sq += err;
            est_n += 1;
        }
    }
    let rms_baseline = (base_sq / (n as f64 * k)).sqrt();
    let rms_overall = (overall_sq / (n as f64 * k)).sqrt();
    let rms_estimated = (est_n > 0).then(|| (est_sq / (est_n as f64 * k)).sqrt());
    if rms_baseline == 0.0 {
        return Err(Error::numerical("baseline map equals the truth; improvement is undefined"));
    }
    Ok(MapMetrics {
        rms_estimated,
        rms_overall,
        rms_baseline,
        improvement_pct: 100.0 * (rms_baseline - rms_overall) / rms_baseline,
    })
}

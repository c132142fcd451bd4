use std::io::{Read, Write};
use std::path::Path;

use super::Position;
use crate::error::{Error, Result};

/// An RSS vector (dBm, one entry per access point) tagged with its position.
#[derive(Debug, Clone, PartialEq)]
pub struct Fingerprint {
    pub position: Position,
    pub rss: Vec<f64>,
}

/// RSS vectors for every grid point, in grid order.
#[derive(Debug, Clone, PartialEq)]
pub struct RadioMap {
    entries: Vec<Fingerprint>,
}

impl RadioMap {
    pub fn new(entries: Vec<Fingerprint>) -> Result<Self> {
        let k = entries.first().map_or(0, |e| e.rss.len());
        if k == 0 {
            return Err(Error::structural("radio map needs at least one entry with K >= 1"));
        }
        for (i, e) in entries.iter().enumerate() {
            if e.rss.len() != k {
                return Err(Error::structural(format!(
                    "radio map entry {i} has {} values, expected {k}",
                    e.rss.len()
                )));
            }
            if e.rss.iter().any(|v| !v.is_finite()) {
                return Err(Error::numerical(format!("radio map entry {i} is not finite")));
            }
        }
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn k(&self) -> usize {
        self.entries[0].rss.len()
    }

    pub fn entries(&self) -> &[Fingerprint] {
        &self.entries
    }

    pub fn rss(&self, i: usize) -> &[f64] {
        &self.entries[i].rss
    }

    pub fn position(&self, i: usize) -> Position {
        self.entries[i].position
    }

    pub fn positions(&self) -> Vec<Position> {
        self.entries.iter().map(|e| e.position).collect()
    }

    pub fn rss_vectors(&self) -> Vec<Vec<f64>> {
        self.entries.iter().map(|e| e.rss.clone()).collect()
    }

    /// Fingerprints at the given grid indices, in that order.
    pub fn subset(&self, indices: &[usize]) -> Vec<Fingerprint> {
        indices.iter().map(|&i| self.entries[i].clone()).collect()
    }

    /// Writes `idx,x,y,rss_1,...,rss_K`, one row per grid point.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Csv { path: "<radio map>".into(), source: e };
        w.write_record(header(self.k())).map_err(csv_err)?;
        for (i, e) in self.entries.iter().enumerate() {
            w.write_record(row(i, e)).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<radio map>", e))?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
            .map_err(|e| relabel(e, path))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let csv_err = |e: csv::Error| Error::Csv { path: "<radio map>".into(), source: e };
        let headers = r.headers().map_err(csv_err)?.clone();
        let k = headers.len().checked_sub(3).filter(|&k| k > 0).ok_or_else(|| {
            Error::config("radio map CSV needs columns idx,x,y,rss_1..rss_K")
        })?;
        if headers.iter().collect::<Vec<_>>() != header(k) {
            return Err(Error::config(format!(
                "unexpected radio map header {:?}",
                headers.iter().collect::<Vec<_>>()
            )));
        }
        let mut entries = Vec::new();
        for (n, record) in r.records().enumerate() {
            let record = record.map_err(csv_err)?;
            let field = |c: usize| -> Result<f64> {
                record[c].trim().parse::<f64>().map_err(|_| {
                    Error::config(format!("row {n}: cannot parse {:?} as a number", &record[c]))
                })
            };
            let idx: usize = record[0]
                .trim()
                .parse()
                .map_err(|_| Error::config(format!("row {n}: bad index {:?}", &record[0])))?;
            if idx != n {
                return Err(Error::config(format!("row {n}: index {idx} out of order")));
            }
            let position = Position::new(field(1)?, field(2)?);
            let rss = (3..3 + k).map(field).collect::<Result<Vec<_>>>()?;
            entries.push(Fingerprint { position, rss });
        }
        Self::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file)).map_err(|e| relabel(e, path))
    }
}

pub(crate) fn header(k: usize) -> Vec<String> {
    let mut h = vec!["idx".to_string(), "x".to_string(), "y".to_string()];
    h.extend((1..=k).map(|j| format!("rss_{j}")));
    h
}

pub(crate) fn row(i: usize, e: &Fingerprint) -> Vec<String> {
    let mut r = vec![i.to_string(), format_value(e.position.x), format_value(e.position.y)];
    r.extend(e.rss.iter().map(|&v| format_value(v)));
    r
}

fn relabel(e: Error, path: &Path) -> Error {
    match e {
        Error::Csv { source, .. } => Error::Csv { path: path.to_path_buf(), source },
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    }
}

/// Shortest round-trip decimal form of `v`, padded to at least four
/// fractional digits. Parsing the result gives back `v` bit for bit.
pub fn format_value(v: f64) -> String {
    let mut s = format!("{v}");
    if !v.is_finite() {
        return s;
    }
    let decimals = match s.find('.') {
        Some(dot) => s.len() - dot - 1,
        None => {
            s.push('.');
            0
        }
    };
    for _ in decimals..4 {
        s.push('0');
    }
    s
}

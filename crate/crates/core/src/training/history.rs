use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Loss values of one iteration. Terms that did not run are zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub iteration: u64,
    /// Mean over the critic steps of the iteration.
    pub loss_d1: f64,
    pub loss_g1: f64,
    /// Mean over the critic steps of the iteration.
    pub loss_d2: f64,
    pub loss_g2: f64,
    pub loss_cyc: f64,
    /// Unweighted visual-pivot term of the G1 update.
    pub pivot: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossHistory {
    pub records: Vec<LossRecord>,
}

impl LossHistory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn push(&mut self, r: LossRecord) {
        self.records.push(r);
    }

    pub fn column(&self, f: impl Fn(&LossRecord) -> f64) -> Vec<f64> {
        self.records.iter().map(f).collect()
    }

    /// CSV with a header row: iteration, loss_d1, loss_g1, loss_d2, loss_g2, loss_cyc, pivot.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(r).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Corrupt(e.to_string()))
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Corrupt(format!("csv: {e}"))
}

/// Median of a sample; `NaN` for an empty one.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

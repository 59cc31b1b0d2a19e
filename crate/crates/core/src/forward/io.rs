//! CSV and JSON serialisation of voltage frames and DN matrices.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::fem::VoltageFrame;
use crate::error::{Error, Result};
use crate::geometry::DomainDisc;

/// Write a matrix as CSV, one matrix row per line.
pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(csv_err)?;
    for row in m.row_iter() {
        w.write_record(row.iter().map(|x| format!("{x:.17e}"))).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_path(path).map_err(csv_err)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let row = rec
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Parse(format!("ragged CSV matrix in {}", path.display())));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

/// JSON sidecar describing how a voltage frame was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameSidecar {
    pub radius: f64,
    pub electrode_count: usize,
    pub electrode_arc: f64,
    pub patterns: String,
    pub noise_level: f64,
    pub seed: Option<u64>,
}

/// Write `<stem>.csv` and `<stem>.json`.
pub fn write_frame(dir: &Path, stem: &str, frame: &VoltageFrame, domain: &DomainDisc) -> Result<()> {
    write_matrix_csv(&dir.join(format!("{stem}.csv")), &frame.v)?;
    let side = FrameSidecar {
        radius: domain.radius(),
        electrode_count: domain.electrode_count(),
        electrode_arc: domain.electrode_arc(),
        patterns: "adjacent".into(),
        noise_level: frame.noise_level,
        seed: frame.seed,
    };
    std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&side)?)?;
    Ok(())
}

pub fn read_frame(dir: &Path, stem: &str) -> Result<(VoltageFrame, DomainDisc)> {
    let v = read_matrix_csv(&dir.join(format!("{stem}.csv")))?;
    let side: FrameSidecar = serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{stem}.json")))?)?;
    let domain = DomainDisc::new(side.radius, side.electrode_count, side.electrode_arc)?;
    if v.nrows() != side.electrode_count {
        return Err(Error::ShapeMismatch(format!(
            "frame has {} rows, sidecar says {} electrodes",
            v.nrows(),
            side.electrode_count
        )));
    }
    Ok((
        VoltageFrame {
            v,
            noise_level: side.noise_level,
            seed: side.seed,
        },
        domain,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let d = DomainDisc::with_coverage(143.2, 4, 0.5).unwrap();
        let f = VoltageFrame {
            v: DMatrix::from_fn(4, 3, |i, j| (i as f64 + 0.1) / (j as f64 + 3.0)),
            noise_level: 0.001,
            seed: Some(3),
        };
        write_frame(dir.path(), "frame", &f, &d).unwrap();
        let (g, d2) = read_frame(dir.path(), "frame").unwrap();
        assert_eq!(f, g);
        assert_eq!(d, d2);
    }
}

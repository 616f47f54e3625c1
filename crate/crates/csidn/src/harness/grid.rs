//! Decision-boundary grids for 2-D models.

use ndarray::Array2;
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::MLPModel;
use crate::util::fmt_sig;

#[derive(Debug, Clone)]
pub struct GridRow {
    pub x0: f64,
    pub x1: f64,
    pub argmax: usize,
    pub probs: Vec<f64>,
}

/// Evaluate `model` on a `resolution x resolution` grid over
/// `[lo, hi] x [lo, hi]`.
pub fn boundary_grid(model: &MLPModel, bounds: (f64, f64), resolution: usize) -> Result<Vec<GridRow>> {
    if model.input_dim() != 2 {
        return Err(Error::Unsupported(format!(
            "decision-boundary grids need a 2-D input model, got {} dimensions",
            model.input_dim()
        )));
    }
    let (lo, hi) = bounds;
    if !(hi > lo) {
        return Err(Error::Config(format!("grid bounds ({lo}, {hi}) are empty")));
    }
    if resolution < 2 {
        return Err(Error::Config("grid resolution must be at least 2".into()));
    }
    let step = (hi - lo) / (resolution as f64 - 1.0);
    let mut points = Array2::zeros((resolution * resolution, 2));
    for i in 0..resolution {
        for j in 0..resolution {
            points[(i * resolution + j, 0)] = lo + step * i as f64;
            points[(i * resolution + j, 1)] = lo + step * j as f64;
        }
    }
    let probs = model.forward(&points)?;
    let mut rows = Vec::with_capacity(resolution * resolution);
    for (idx, prow) in probs.rows().into_iter().enumerate() {
        let mut argmax = 0;
        for (j, &v) in prow.iter().enumerate() {
            if v > prow[argmax] {
                argmax = j;
            }
        }
        rows.push(GridRow {
            x0: points[(idx, 0)],
            x1: points[(idx, 1)],
            argmax,
            probs: prow.to_vec(),
        });
    }
    Ok(rows)
}

/// Write grid rows as `x0,x1,argmax,p_0..p_{k-1}`.
pub fn write_grid(rows: &[GridRow], path: &Path) -> Result<()> {
    let k = rows.first().map_or(0, |r| r.probs.len());
    let mut writer = csv::Writer::from_path(path)?;
    let mut header = vec!["x0".to_string(), "x1".to_string(), "argmax".to_string()];
    header.extend((0..k).map(|j| format!("p_{j}")));
    writer.write_record(&header)?;
    for row in rows {
        let mut record = vec![
            fmt_sig(row.x0, 6),
            fmt_sig(row.x1, 6),
            row.argmax.to_string(),
        ];
        record.extend(row.probs.iter().map(|&p| fmt_sig(p, 6)));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

//! Calibration loss and evaluation metrics.
//!
//! The loss is a BCE-with-logits term over the bounding box of the union of
//! nonzero prediction and target cells, plus the MSE between 4x4 average
//! pooled prediction and target over the whole grid. Raw accumulator values
//! are used as logits.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Grid;

pub const POOL: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub bce_term: f64,
    pub mse_term: f64,
    pub total: f64,
    /// Half-open window `(row0, row1, col0, col1)` used for the BCE mean.
    pub crop_window: (usize, usize, usize, usize),
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-[y log σ(x) + (1 - y) log(1 - σ(x))]` in its overflow-free form.
fn bce_with_logits(x: f64, y: f64) -> f64 {
    x.max(0.0) - x * y + (-x.abs()).exp().ln_1p()
}

/// Bounding box of cells where either grid is nonzero; `None` if both empty.
fn union_bbox(pred: &Grid<f64>, target: &Grid<bool>) -> Option<(usize, usize, usize, usize)> {
    let (h, w) = pred.dims2();
    let mut bbox: Option<(usize, usize, usize, usize)> = None;
    for r in 0..h {
        for c in 0..w {
            if pred.get2(r, c) != 0.0 || target.get2(r, c) {
                bbox = Some(match bbox {
                    Some((r0, _, c0, c1)) => (r0, r + 1, c0.min(c), c1.max(c + 1)),
                    None => (r, r + 1, c, c + 1),
                });
            }
        }
    }
    bbox
}

fn pooled_means(values: &[f64], w: usize, pr: usize, pc: usize) -> f64 {
    let mut s = 0.0;
    for dr in 0..POOL {
        let row = (pr * POOL + dr) * w + pc * POOL;
        for v in &values[row..row + POOL] {
            s += v;
        }
    }
    s / (POOL * POOL) as f64
}

/// Loss of accumulator `pred` against boolean `target`, and its gradient
/// with respect to every accumulator cell.
pub fn combined_loss(pred: &Grid<f64>, target: &Grid<bool>) -> Result<(LossBreakdown, Grid<f64>)> {
    if pred.rank() != 2 {
        return Err(Error::InvalidArgument(format!(
            "prediction must be rank 2, got shape {:?}",
            pred.shape()
        )));
    }
    target.ensure_shape(pred.shape())?;
    let (h, w) = pred.dims2();
    let crop = union_bbox(pred, target).unwrap_or((0, h, 0, w));
    let (r0, r1, c0, c1) = crop;
    let n_crop = ((r1 - r0) * (c1 - c0)) as f64;

    let x = pred.as_slice();
    let y: Vec<f64> = target
        .as_slice()
        .iter()
        .map(|&b| f64::from(u8::from(b)))
        .collect();
    let mut grad = vec![0.0; h * w];

    // BCE over the crop, one partial sum per row, summed in row order.
    let row_sums: Vec<f64> = grad
        .par_chunks_mut(w.max(1))
        .enumerate()
        .map(|(r, grow)| {
            if r < r0 || r >= r1 {
                return 0.0;
            }
            let mut s = 0.0;
            for (c, g) in grow.iter_mut().enumerate().take(c1).skip(c0) {
                let i = r * w + c;
                s += bce_with_logits(x[i], y[i]);
                *g = (logistic(x[i]) - y[i]) / n_crop;
            }
            s
        })
        .collect();
    let bce_term = if n_crop > 0.0 {
        row_sums.iter().sum::<f64>() / n_crop
    } else {
        0.0
    };

    let (ph, pw) = (h / POOL, w / POOL);
    let n_pool = (ph * pw) as f64;
    let mut mse_sum = 0.0;
    for pr in 0..ph {
        for pc in 0..pw {
            let diff = pooled_means(x, w, pr, pc) - pooled_means(&y, w, pr, pc);
            mse_sum += diff * diff;
            let g = 2.0 * diff / (n_pool * (POOL * POOL) as f64);
            for dr in 0..POOL {
                let row = (pr * POOL + dr) * w + pc * POOL;
                for v in &mut grad[row..row + POOL] {
                    *v += g;
                }
            }
        }
    }
    let mse_term = if ph * pw > 0 { mse_sum / n_pool } else { 0.0 };

    let breakdown = LossBreakdown {
        bce_term,
        mse_term,
        total: bce_term + mse_term,
        crop_window: crop,
    };
    Ok((breakdown, Grid::from_vec(vec![h, w], grad)?))
}

/// Intersection over union of two masks; 1 when both are empty.
pub fn jaccard_index(a: &Grid<bool>, b: &Grid<bool>) -> Result<f64> {
    b.ensure_shape(a.shape())?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.as_slice().iter().zip(b.as_slice()) {
        inter += usize::from(x && y);
        union += usize::from(x || y);
    }
    Ok(if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    })
}

/// `Σ_t |a_t - b_t|` over per-step affected-cell counts.
pub fn manhattan_distance(a: &[usize], b: &[usize]) -> Result<u64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(&x, &y)| x.abs_diff(y) as u64).sum())
}

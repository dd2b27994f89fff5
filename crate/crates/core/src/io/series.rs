//! Per-step count series as CSV.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::propagation::StepCounts;

/// Renders `step,burning,burned,affected[,jaccard]` with LF line endings.
/// The jaccard column is present iff `jaccard` is given.
pub fn render_series_csv(series: &[StepCounts], jaccard: Option<&[f64]>) -> Result<String> {
    if let Some(j) = jaccard {
        if j.len() != series.len() {
            return Err(Error::LengthMismatch {
                left: series.len(),
                right: j.len(),
            });
        }
    }
    let mut s = String::from("step,burning,burned,affected");
    if jaccard.is_some() {
        s.push_str(",jaccard");
    }
    s.push('\n');
    for (i, row) in series.iter().enumerate() {
        let _ = write!(
            s,
            "{},{},{},{}",
            row.step,
            row.burning,
            row.burned,
            row.affected()
        );
        if let Some(j) = jaccard {
            let _ = write!(s, ",{}", j[i]);
        }
        s.push('\n');
    }
    Ok(s)
}

pub fn write_series_csv(
    series: &[StepCounts],
    jaccard: Option<&[f64]>,
    path: impl AsRef<Path>,
) -> Result<()> {
    fs::write(path, render_series_csv(series, jaccard)?)?;
    Ok(())
}

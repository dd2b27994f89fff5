//! Gradient tape for attached steps and the closed-form backward pass.
//!
//! The realized ignition sequence is treated as a constant; gradients flow
//! only through the ignition probabilities written to the accumulator at
//! attached steps. For an ignited cell `j` with burning neighbors `i`:
//!
//! ```text
//! p_ignite = 1 - Π_k (1 - f_k)          f_k = tanh(c · p_k)
//! ∂p_ignite/∂f_i = Π_{k≠i} (1 - f_k)    ∂f_i/∂p_i = c (1 - f_i²)
//! ∂p_i/∂c1 = p_i V    ∂p_i/∂c2 = p_i V (cos θ - 1)
//! ∂p_i/∂a  = p_i θ_s  ∂p_i/∂p_h = p_i / p_h
//! ```

use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::error::Result;
use crate::grid::Grid;
use crate::model::StepRingsConfig;
use crate::propagation::{ignition_prob, NeighborTerm, NormalizationConstant, StepReport};

/// Whether 1-based `step` of a run of `total_steps` is attached.
///
/// Interior steps are the `r_between` boundaries obtained by splitting the
/// `n` steps `r_first + 1 ..= total - r_last` into `r_between + 1` equal gaps:
/// `round(lo + k n / (r_between + 1))` for `k = 1..=r_between`.
pub fn check_if_attach(step: usize, total_steps: usize, rings: &StepRingsConfig) -> bool {
    if step == 0 || step > total_steps {
        return false;
    }
    if step <= rings.r_first || step + rings.r_last > total_steps {
        return true;
    }
    interior_steps(total_steps, rings).contains(&step)
}

fn interior_steps(total: usize, rings: &StepRingsConfig) -> BTreeSet<usize> {
    let lo = rings.r_first + 1;
    let hi = total.saturating_sub(rings.r_last);
    if rings.r_between == 0 || hi < lo {
        return BTreeSet::new();
    }
    let n = (hi - lo + 1) as f64;
    let gaps = (rings.r_between + 1) as f64;
    (1..=rings.r_between)
        .map(|k| {
            let s = (lo as f64 + k as f64 * n / gaps).round() as usize;
            s.clamp(lo, hi)
        })
        .collect()
}

/// The full set of attached steps for one re-simulation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttachmentPlan {
    pub total_steps: usize,
    pub attached_steps: BTreeSet<usize>,
}

impl AttachmentPlan {
    pub fn new(total_steps: usize, rings: &StepRingsConfig) -> Self {
        let attached_steps = (1..=total_steps)
            .filter(|&s| check_if_attach(s, total_steps, rings))
            .collect();
        Self {
            total_steps,
            attached_steps,
        }
    }

    pub fn is_attached(&self, step: usize) -> bool {
        self.attached_steps.contains(&step)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TapeEntry {
    pub step: usize,
    pub row: usize,
    pub col: usize,
    /// One term per burning neighbor, in the kernel's fixed neighbor order.
    pub terms: Vec<NeighborTerm>,
}

impl TapeEntry {
    pub fn p_ignite(&self) -> f64 {
        let fs: Vec<f64> = self.terms.iter().map(|t| t.f).collect();
        ignition_prob(&fs)
    }
}

/// Parameter gradient in `(c1, c2, a, p_h)` order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ParamGradient {
    pub c1: f64,
    pub c2: f64,
    pub a: f64,
    pub p_h: f64,
}

impl ParamGradient {
    pub fn as_array(&self) -> [f64; 4] {
        [self.c1, self.c2, self.a, self.p_h]
    }

    pub fn from_array(v: [f64; 4]) -> Self {
        Self {
            c1: v[0],
            c2: v[1],
            a: v[2],
            p_h: v[3],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.as_array().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tape {
    height: usize,
    width: usize,
    normalization: NormalizationConstant,
    entries: Vec<TapeEntry>,
}

const REDUCE_CHUNK: usize = 256;

impl Tape {
    pub fn new(height: usize, width: usize, normalization: NormalizationConstant) -> Self {
        Self {
            height,
            width,
            normalization,
            entries: Vec::new(),
        }
    }

    pub fn entries(&self) -> &[TapeEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, entry: TapeEntry) {
        self.entries.push(entry);
    }

    /// Appends one entry per ignition of an attached step.
    pub fn record_step(&mut self, report: &StepReport) {
        if !report.attached {
            return;
        }
        for ig in &report.ignitions {
            if let Some(terms) = &ig.terms {
                self.entries.push(TapeEntry {
                    step: report.step,
                    row: ig.row,
                    col: ig.col,
                    terms: terms.clone(),
                });
            }
        }
    }

    /// Writes every entry's recombined ignition probability into `acc`.
    pub fn replay_into(&self, acc: &mut Grid<f64>) {
        for e in &self.entries {
            acc.set2(e.row, e.col, e.p_ignite());
        }
    }

    /// Splits the tape into one single-entry tape per entry.
    pub fn split(&self) -> Vec<Tape> {
        self.entries
            .iter()
            .map(|e| Tape {
                entries: vec![e.clone()],
                ..Tape::new(self.height, self.width, self.normalization)
            })
            .collect()
    }
}

fn entry_gradient(e: &TapeEntry, upstream: f64, c: f64) -> [f64; 4] {
    let n = e.terms.len();
    let mut g = [0.0; 4];
    if upstream == 0.0 || n == 0 {
        return g;
    }
    // prefix[i] = Π_{k<i}(1 - f_k); the suffix product is carried backwards.
    let mut prefix = [1.0f64; 9];
    for (i, t) in e.terms.iter().enumerate() {
        prefix[i + 1] = prefix[i] * (1.0 - t.f);
    }
    let mut suffix = 1.0;
    for i in (0..n).rev() {
        let t = &e.terms[i];
        let others = prefix[i] * suffix;
        let chain = upstream * others * c * (1.0 - t.f * t.f);
        g[0] += chain * t.raw * t.wind_speed;
        g[1] += chain * t.raw * t.wind_speed * t.cos_minus_one;
        g[2] += chain * t.raw * t.slope_deg;
        g[3] += chain * t.base;
        suffix *= 1.0 - t.f;
    }
    g
}

/// Gradient of the loss with respect to `(c1, c2, a, p_h)` given the loss
/// gradient with respect to the accumulator.
pub fn backward_params(tape: &Tape, d_loss: &Grid<f64>) -> Result<ParamGradient> {
    d_loss.ensure_shape(&[tape.height, tape.width])?;
    let c = tape.normalization.value();
    let w = tape.width;
    let dl = d_loss.as_slice();
    let partials: Vec<[f64; 4]> = tape
        .entries
        .par_chunks(REDUCE_CHUNK)
        .map(|chunk| {
            let mut acc = [0.0; 4];
            for e in chunk {
                let g = entry_gradient(e, dl[e.row * w + e.col], c);
                for k in 0..4 {
                    acc[k] += g[k];
                }
            }
            acc
        })
        .collect();
    let mut total = [0.0; 4];
    for p in partials {
        for k in 0..4 {
            total[k] += p[k];
        }
    }
    Ok(ParamGradient::from_array(total))
}

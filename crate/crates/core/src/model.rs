//! Domain types shared by every stage: landscape rasters, model parameters,
//! the two-channel fire state and the reproducibility manifest.

use std::fmt;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Per-cell environmental rasters driving the spread model.
///
/// Wind direction is in degrees counterclockwise from East. `slope` has shape
/// `[H, W, 3, 3]`: entry `[r, c, 1 + dr, 1 + dc]` is the slope angle in degrees
/// from cell `(r, c)` toward its neighbor `(r + dr, c + dc)`. The centre entry
/// is unused. `canopy` and `density` are the already-scaled factors `p_veg`
/// and `p_den`; a value of `-1` marks a cell without fuel.
#[derive(Debug, Clone, PartialEq)]
pub struct Landscape {
    pub wind_speed: Grid<f64>,
    pub wind_direction: Grid<f64>,
    pub slope: Grid<f64>,
    pub canopy: Grid<f64>,
    pub density: Grid<f64>,
    /// Cell side length in meters.
    pub cell_side: f64,
}

impl Landscape {
    /// Flat, windless landscape with neutral vegetation factors.
    pub fn uniform(height: usize, width: usize, cell_side: f64) -> Self {
        Self {
            wind_speed: Grid::zeros(vec![height, width]),
            wind_direction: Grid::zeros(vec![height, width]),
            slope: Grid::zeros(vec![height, width, 3, 3]),
            canopy: Grid::zeros(vec![height, width]),
            density: Grid::zeros(vec![height, width]),
            cell_side,
        }
    }

    pub fn height(&self) -> usize {
        self.wind_speed.dims2().0
    }

    pub fn width(&self) -> usize {
        self.wind_speed.dims2().1
    }

    pub fn dims(&self) -> (usize, usize) {
        self.wind_speed.dims2()
    }

    /// Replaces both wind rasters, checking their shape.
    pub fn set_wind(&mut self, wind: &WindField) -> Result<()> {
        let (h, w) = self.dims();
        wind.speed.ensure_shape(&[h, w])?;
        wind.direction.ensure_shape(&[h, w])?;
        self.wind_speed = wind.speed.clone();
        self.wind_direction = wind.direction.clone();
        Ok(())
    }

    pub fn wind(&self) -> WindField {
        WindField {
            speed: self.wind_speed.clone(),
            direction: self.wind_direction.clone(),
        }
    }
}

/// A wind speed / direction pair of rasters, used for scheduled wind updates.
#[derive(Debug, Clone, PartialEq)]
pub struct WindField {
    pub speed: Grid<f64>,
    pub direction: Grid<f64>,
}

impl WindField {
    pub fn uniform(height: usize, width: usize, speed: f64, direction_deg: f64) -> Self {
        Self {
            speed: Grid::filled(vec![height, width], speed),
            direction: Grid::filled(vec![height, width], direction_deg),
        }
    }
}

/// One problem found by [`validate_landscape`] or [`validate_params`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DimensionMismatch {
        field: &'static str,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },
    SlopeShape(Vec<usize>),
    NegativeWindSpeed {
        row: usize,
        col: usize,
    },
    NonFinite {
        field: &'static str,
        index: usize,
    },
    FactorBelowMinusOne {
        field: &'static str,
        row: usize,
        col: usize,
    },
    NonPositiveCellSide(f64),
    ParamOutOfRange {
        name: &'static str,
        value: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DimensionMismatch {
                field,
                expected,
                actual,
            } => write!(
                f,
                "{field} dimension mismatch: expected {expected:?}, got {actual:?}"
            ),
            Violation::SlopeShape(shape) => write!(f, "slope shape {shape:?} is not HxWx3x3"),
            Violation::NegativeWindSpeed { row, col } => {
                write!(f, "wind_speed negative at ({row},{col})")
            }
            Violation::NonFinite { field, index } => {
                write!(f, "{field} non-finite at flat index {index}")
            }
            Violation::FactorBelowMinusOne { field, row, col } => {
                write!(f, "{field} below -1 at ({row},{col})")
            }
            Violation::NonPositiveCellSide(l) => write!(f, "cell_side must be positive, got {l}"),
            Violation::ParamOutOfRange { name, value } => {
                write!(f, "parameter {name} = {value} out of range")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    /// Converts a failing report into an error listing every violation.
    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            return Ok(());
        }
        let msg = self
            .violations
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; ");
        Err(Error::InvalidLandscape(msg))
    }
}

pub fn validate_landscape(land: &Landscape) -> ValidationReport {
    let mut violations = Vec::new();
    let base = land.wind_speed.shape().to_vec();
    if base.len() != 2 || base.contains(&0) {
        violations.push(Violation::DimensionMismatch {
            field: "wind_speed",
            expected: vec![0, 0],
            actual: base,
        });
        return ValidationReport { violations };
    }
    let (h, w) = (base[0], base[1]);

    let planar = [
        ("wind_direction", &land.wind_direction),
        ("canopy", &land.canopy),
        ("density", &land.density),
    ];
    let mut shapes_ok = true;
    for (field, grid) in planar {
        if grid.shape() != [h, w] {
            shapes_ok = false;
            violations.push(Violation::DimensionMismatch {
                field,
                expected: vec![h, w],
                actual: grid.shape().to_vec(),
            });
        }
    }
    if land.slope.shape() != [h, w, 3, 3] {
        shapes_ok = false;
        violations.push(Violation::SlopeShape(land.slope.shape().to_vec()));
    }
    if !(land.cell_side > 0.0 && land.cell_side.is_finite()) {
        violations.push(Violation::NonPositiveCellSide(land.cell_side));
    }

    let all: [(&'static str, &Grid<f64>); 5] = [
        ("wind_speed", &land.wind_speed),
        ("wind_direction", &land.wind_direction),
        ("slope", &land.slope),
        ("canopy", &land.canopy),
        ("density", &land.density),
    ];
    for (field, grid) in all {
        if let Some(index) = grid.as_slice().iter().position(|v| !v.is_finite()) {
            violations.push(Violation::NonFinite { field, index });
        }
    }
    for (i, &v) in land.wind_speed.as_slice().iter().enumerate() {
        if v < 0.0 {
            violations.push(Violation::NegativeWindSpeed {
                row: i / w,
                col: i % w,
            });
        }
    }
    if shapes_ok {
        for (field, grid) in [("canopy", &land.canopy), ("density", &land.density)] {
            for (i, &v) in grid.as_slice().iter().enumerate() {
                if v < -1.0 {
                    violations.push(Violation::FactorBelowMinusOne {
                        field,
                        row: i / w,
                        col: i % w,
                    });
                }
            }
        }
    }
    ValidationReport { violations }
}

/// The five scalar model parameters. Only `c1`, `c2`, `a` and `p_h` are
/// calibrated; `p_continue` is carried through untouched.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Wind velocity coefficient.
    pub c1: f64,
    /// Wind direction coefficient.
    pub c2: f64,
    /// Slope coefficient (per degree).
    pub a: f64,
    /// Base propagation probability.
    pub p_h: f64,
    /// Probability that a burning cell keeps burning for another step.
    pub p_continue: f64,
}

impl ModelParams {
    pub const P_H_MIN: f64 = 0.2;

    pub fn new(c1: f64, c2: f64, a: f64, p_h: f64, p_continue: f64) -> Self {
        Self {
            c1,
            c2,
            a,
            p_h,
            p_continue,
        }
    }

    /// Projects the calibratable parameters onto their admissible box.
    pub fn clamped(self) -> Self {
        clamp_params(self)
    }

    /// `(c1, c2, a, p_h)` in gradient order.
    pub fn calibratable(&self) -> [f64; 4] {
        [self.c1, self.c2, self.a, self.p_h]
    }

    pub fn with_calibratable(self, v: [f64; 4]) -> Self {
        Self {
            c1: v[0],
            c2: v[1],
            a: v[2],
            p_h: v[3],
            p_continue: self.p_continue,
        }
    }

    pub fn in_clamp_box(&self) -> bool {
        (0.0..=1.0).contains(&self.c1)
            && (0.0..=1.0).contains(&self.c2)
            && (0.0..=1.0).contains(&self.a)
            && (Self::P_H_MIN..=1.0).contains(&self.p_h)
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::new(0.045, 0.131, 0.078, 0.58, 0.5)
    }
}

pub fn clamp_params(p: ModelParams) -> ModelParams {
    ModelParams {
        c1: p.c1.clamp(0.0, 1.0),
        c2: p.c2.clamp(0.0, 1.0),
        a: p.a.clamp(0.0, 1.0),
        p_h: p.p_h.clamp(ModelParams::P_H_MIN, 1.0),
        p_continue: p.p_continue,
    }
}

/// Flags non-finite parameters and a `p_continue` outside `[0, 1]`.
pub fn validate_params(p: &ModelParams) -> ValidationReport {
    let mut violations = Vec::new();
    let named = [
        ("c1", p.c1),
        ("c2", p.c2),
        ("a", p.a),
        ("p_h", p.p_h),
        ("p_continue", p.p_continue),
    ];
    for (name, value) in named {
        if !value.is_finite() {
            violations.push(Violation::ParamOutOfRange { name, value });
        }
    }
    if p.p_continue.is_finite() && !(0.0..=1.0).contains(&p.p_continue) {
        violations.push(Violation::ParamOutOfRange {
            name: "p_continue",
            value: p.p_continue,
        });
    }
    ValidationReport { violations }
}

/// Two exclusive boolean channels plus the ignition-probability accumulator.
#[derive(Debug, Clone, PartialEq)]
pub struct FireState {
    pub burning: Grid<bool>,
    pub burned: Grid<bool>,
    /// Ignition probability captured when each cell ignited; 1.0 for seeds.
    pub accumulator: Grid<f64>,
    /// Number of completed steps.
    pub step: usize,
}

impl FireState {
    /// Seeds a state from an ignition mask. Seed cells get accumulator 1.0.
    pub fn from_ignition(init: &Grid<bool>) -> Self {
        let (h, w) = init.dims2();
        let burning = Grid::from_vec(vec![h, w], init.as_slice().to_vec())
            .expect("dims from the source grid");
        Self {
            accumulator: burning.map(|&b| if b { 1.0 } else { 0.0 }),
            burned: Grid::filled(vec![h, w], false),
            burning,
            step: 0,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.burning.dims2()
    }

    /// Burning or burned.
    pub fn affected(&self) -> Grid<bool> {
        let data = self
            .burning
            .as_slice()
            .iter()
            .zip(self.burned.as_slice())
            .map(|(&a, &b)| a || b)
            .collect();
        Grid::from_vec(self.burning.shape().to_vec(), data).expect("same shape")
    }

    pub fn burning_count(&self) -> usize {
        self.burning.count_true()
    }

    pub fn burned_count(&self) -> usize {
        self.burned.count_true()
    }

    pub fn affected_count(&self) -> usize {
        self.burning
            .as_slice()
            .iter()
            .zip(self.burned.as_slice())
            .filter(|(&a, &b)| a || b)
            .count()
    }

    /// True when no cell is both burning and burned.
    pub fn is_exclusive(&self) -> bool {
        !self
            .burning
            .as_slice()
            .iter()
            .zip(self.burned.as_slice())
            .any(|(&a, &b)| a && b)
    }
}

pub fn new_fire_state(land: &Landscape, init: &Grid<bool>) -> Result<FireState> {
    let (h, w) = land.dims();
    init.ensure_shape(&[h, w])?;
    Ok(FireState::from_ignition(init))
}

/// Which steps' ignitions join the gradient computation: the first
/// `r_first`, the last `r_last` and `r_between` evenly spaced in between.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepRingsConfig {
    pub r_first: usize,
    pub r_between: usize,
    pub r_last: usize,
}

impl StepRingsConfig {
    pub fn new(r_first: usize, r_between: usize, r_last: usize) -> Self {
        Self {
            r_first,
            r_between,
            r_last,
        }
    }

    pub fn total(&self) -> usize {
        self.r_first + self.r_between + self.r_last
    }
}

impl Default for StepRingsConfig {
    fn default() -> Self {
        Self::new(2, 5, 10)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSnapshot {
    pub epoch: usize,
    pub iteration: usize,
    pub params: ModelParams,
}

/// Reproducibility record of a calibration run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunManifest {
    pub base_seed: u64,
    pub epoch_seeds: Vec<u64>,
    pub steps_update_interval: usize,
    pub max_epochs: usize,
    pub max_iterations: usize,
    pub learning_rate: f64,
    pub trajectory: Vec<ParamSnapshot>,
}

impl RunManifest {
    pub fn record(&mut self, epoch: usize, iteration: usize, params: ModelParams) {
        self.trajectory.push(ParamSnapshot {
            epoch,
            iteration,
            params,
        });
    }
}

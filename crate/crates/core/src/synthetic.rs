//! Synthetic landscapes for tests, benchmarks and twin experiments.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::io::terrain::{slope_from_altitude, SlopeSign};
use crate::model::{Landscape, WindField};
use crate::rng::{uniform_draw, Channel, DrawKey};

pub const DEFAULT_CELL_SIDE: f64 = 30.0;
pub const DEFAULT_WIND_SPEED: f64 = 4.0;
pub const DEFAULT_WIND_DIRECTION: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    Flat,
    /// Gaussian hill in the middle of the map.
    Hill,
    /// North–south V-shaped valley through the middle.
    Valley,
    /// Smooth random terrain and vegetation from a seed.
    Random(u64),
}

impl FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "flat" => Ok(Self::Flat),
            "hill" => Ok(Self::Hill),
            "valley" => Ok(Self::Valley),
            _ => match s.strip_prefix("random:") {
                Some(seed) => seed
                    .parse()
                    .map(Self::Random)
                    .map_err(|_| Error::Parse(format!("bad random seed in {s:?}"))),
                None => Err(Error::Parse(format!(
                    "unknown synthetic landscape {s:?} (flat, hill, valley, random:<seed>)"
                ))),
            },
        }
    }
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Flat => f.write_str("flat"),
            Self::Hill => f.write_str("hill"),
            Self::Valley => f.write_str("valley"),
            Self::Random(s) => write!(f, "random:{s}"),
        }
    }
}

const LATTICE: usize = 8;

/// Bilinear value noise in `[0, 1)` on an 8-cell lattice.
fn value_noise(seed: u64, layer: u64, h: usize, w: usize) -> Grid<f64> {
    let node = |r: usize, c: usize| uniform_draw(DrawKey::new(seed, layer, r, c, Channel::Ignite));
    Grid::from_fn2(h, w, |r, c| {
        let (gr, gc) = (r / LATTICE, c / LATTICE);
        let fr = (r % LATTICE) as f64 / LATTICE as f64;
        let fc = (c % LATTICE) as f64 / LATTICE as f64;
        let top = node(gr, gc) * (1.0 - fc) + node(gr, gc + 1) * fc;
        let bottom = node(gr + 1, gc) * (1.0 - fc) + node(gr + 1, gc + 1) * fc;
        top * (1.0 - fr) + bottom * fr
    })
}

pub fn altitude(kind: SyntheticKind, h: usize, w: usize) -> Grid<f64> {
    let (cr, cc) = ((h as f64 - 1.0) / 2.0, (w as f64 - 1.0) / 2.0);
    match kind {
        SyntheticKind::Flat => Grid::zeros(vec![h, w]),
        SyntheticKind::Hill => {
            let sigma = (h.min(w) as f64 / 4.0).max(1.0);
            Grid::from_fn2(h, w, |r, c| {
                let d2 = (r as f64 - cr).powi(2) + (c as f64 - cc).powi(2);
                400.0 * (-d2 / (2.0 * sigma * sigma)).exp()
            })
        }
        SyntheticKind::Valley => {
            let half = (w as f64 / 2.0).max(1.0);
            Grid::from_fn2(h, w, |_, c| 300.0 * (c as f64 - cc).abs() / half)
        }
        SyntheticKind::Random(seed) => value_noise(seed, 0, h, w).map(|v| 300.0 * v),
    }
}

/// Builds a landscape with uniform wind. Vegetation and density are neutral
/// (0) except for `Random`, where they vary smoothly in `[-0.4, 0.4)`.
pub fn synthetic_landscape(
    kind: SyntheticKind,
    h: usize,
    w: usize,
    wind: &WindField,
    sign: SlopeSign,
) -> Result<Landscape> {
    if h == 0 || w == 0 {
        return Err(Error::InvalidArgument(format!(
            "synthetic size {h}x{w} is empty"
        )));
    }
    wind.speed.ensure_shape(&[h, w])?;
    wind.direction.ensure_shape(&[h, w])?;
    let slope = slope_from_altitude(&altitude(kind, h, w), DEFAULT_CELL_SIDE, sign)?;
    let (canopy, density) = match kind {
        SyntheticKind::Random(seed) => (
            value_noise(seed, 1, h, w).map(|v| 0.8 * v - 0.4),
            value_noise(seed, 2, h, w).map(|v| 0.8 * v - 0.4),
        ),
        _ => (Grid::zeros(vec![h, w]), Grid::zeros(vec![h, w])),
    };
    Ok(Landscape {
        wind_speed: wind.speed.clone(),
        wind_direction: wind.direction.clone(),
        slope,
        canopy,
        density,
        cell_side: DEFAULT_CELL_SIDE,
    })
}

/// Square landscape with the default uniform wind.
pub fn default_landscape(kind: SyntheticKind, size: usize) -> Result<Landscape> {
    let wind = WindField::uniform(size, size, DEFAULT_WIND_SPEED, DEFAULT_WIND_DIRECTION);
    synthetic_landscape(kind, size, size, &wind, SlopeSign::DownhillPositive)
}

/// Square ignition block of side `side` centred in an `h x w` grid.
pub fn center_block(h: usize, w: usize, side: usize) -> Grid<bool> {
    let r0 = (h.saturating_sub(side)) / 2;
    let c0 = (w.saturating_sub(side)) / 2;
    Grid::from_fn2(h, w, |r, c| {
        (r0..r0 + side).contains(&r) && (c0..c0 + side).contains(&c)
    })
}

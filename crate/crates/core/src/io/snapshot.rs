//! Binary PPM (P6) renderings of a fire state over its landscape.
//!
//! The background blends vegetation and slope from purple (sparse fuel,
//! gentle slope) to green (dense fuel, steep slope). Burning and burned
//! cells use two reserved colors that the background ramp never produces;
//! burned is drawn last.

use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::model::{FireState, Landscape};

pub const BURNING_RGB: [u8; 3] = [255, 96, 0];
pub const BURNED_RGB: [u8; 3] = [30, 30, 30];

const LOW_RGB: [f64; 3] = [120.0, 40.0, 160.0];
const HIGH_RGB: [f64; 3] = [40.0, 170.0, 60.0];
const STEEP_DEG: f64 = 45.0;

fn background(land: &Landscape, idx: usize) -> [u8; 3] {
    let fuel = (1.0 + land.canopy.as_slice()[idx]) * (1.0 + land.density.as_slice()[idx]);
    let fuel_t = (fuel / 2.0).clamp(0.0, 1.0);
    let steep = land.slope.as_slice()[idx * 9..idx * 9 + 9]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let slope_t = (steep / STEEP_DEG).clamp(0.0, 1.0);
    let t = 0.5 * fuel_t + 0.5 * slope_t;
    let mut px = [0u8; 3];
    for k in 0..3 {
        px[k] = (LOW_RGB[k] + t * (HIGH_RGB[k] - LOW_RGB[k])).round() as u8;
    }
    px
}

pub fn encode_snapshot(state: &FireState, land: &Landscape) -> Vec<u8> {
    let (h, w) = state.dims();
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    out.reserve(h * w * 3);
    let burning = state.burning.as_slice();
    let burned = state.burned.as_slice();
    for i in 0..h * w {
        let px = if burned[i] {
            BURNED_RGB
        } else if burning[i] {
            BURNING_RGB
        } else {
            background(land, i)
        };
        out.extend_from_slice(&px);
    }
    out
}

pub fn write_snapshot(state: &FireState, land: &Landscape, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_snapshot(state, land))?;
    Ok(())
}

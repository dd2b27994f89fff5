//! Conversions from raw geographic rasters to model inputs.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::model::{Landscape, WindField};
use crate::propagation::MOORE;

/// Orientation of the derived slope angle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SlopeSign {
    /// `atan((E - Ê) / (k l))`: positive when the neighbor is lower.
    #[default]
    DownhillPositive,
    /// Negated: positive when the neighbor is higher.
    UphillPositive,
}

/// Per-neighbor slope angles in degrees, shape `[H, W, 3, 3]`.
///
/// `k` is 1 for edge neighbors and √2 for diagonal ones. Entries toward
/// cells outside the grid and the centre entry are 0.
pub fn slope_from_altitude(
    altitude: &Grid<f64>,
    cell_side: f64,
    sign: SlopeSign,
) -> Result<Grid<f64>> {
    if altitude.rank() != 2 {
        return Err(Error::InvalidArgument(format!(
            "altitude must be rank 2, got {:?}",
            altitude.shape()
        )));
    }
    if !(cell_side > 0.0 && cell_side.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "cell side must be positive, got {cell_side}"
        )));
    }
    if let Some(i) = altitude.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("altitude at flat index {i}")));
    }
    let (h, w) = altitude.dims2();
    let e = altitude.as_slice();
    let orient = match sign {
        SlopeSign::DownhillPositive => 1.0,
        SlopeSign::UphillPositive => -1.0,
    };
    let mut out = vec![0.0; h * w * 9];
    for r in 0..h {
        for c in 0..w {
            let here = e[r * w + c];
            for nb in MOORE {
                let (Some(nr), Some(nc)) =
                    (r.checked_add_signed(nb.dr), c.checked_add_signed(nb.dc))
                else {
                    continue;
                };
                if nr >= h || nc >= w {
                    continue;
                }
                let k = if nb.is_diagonal() {
                    std::f64::consts::SQRT_2
                } else {
                    1.0
                };
                let rise = orient * (here - e[nr * w + nc]);
                out[(r * w + c) * 9 + nb.slope_index()] =
                    (rise / (k * cell_side)).atan().to_degrees();
            }
        }
    }
    Grid::from_vec(vec![h, w, 3, 3], out)
}

/// Speed and East-counterclockwise direction in `[0, 360)` from wind
/// components.
pub fn wind_from_uv(u: &Grid<f64>, v: &Grid<f64>) -> Result<WindField> {
    v.ensure_shape(u.shape())?;
    let speed = u
        .as_slice()
        .iter()
        .zip(v.as_slice())
        .map(|(&a, &b)| a.hypot(b))
        .collect();
    let direction = u
        .as_slice()
        .iter()
        .zip(v.as_slice())
        .map(|(&a, &b)| {
            let d = b.atan2(a).to_degrees();
            if d < 0.0 {
                d + 360.0
            } else {
                d
            }
        })
        .collect();
    Ok(WindField {
        speed: Grid::from_vec(u.shape().to_vec(), speed)?,
        direction: Grid::from_vec(u.shape().to_vec(), direction)?,
    })
}

/// Surrounds a landscape with a `border`-cell frame of non-burnable cells
/// (`p_veg = p_den = -1`, flat, windless). Returns the padded landscape and
/// the ignition mask shifted into it.
pub fn pad_nonburnable(
    land: &Landscape,
    init: &Grid<bool>,
    border: usize,
) -> Result<(Landscape, Grid<bool>)> {
    let (h, w) = land.dims();
    init.ensure_shape(&[h, w])?;
    let (ph, pw) = (h + 2 * border, w + 2 * border);
    let inside =
        |r: usize, c: usize| (border..border + h).contains(&r) && (border..border + w).contains(&c);
    let plane = |g: &Grid<f64>, fill: f64| {
        Grid::from_fn2(ph, pw, |r, c| {
            if inside(r, c) {
                g.get2(r - border, c - border)
            } else {
                fill
            }
        })
    };
    let mut slope = vec![0.0; ph * pw * 9];
    for r in 0..h {
        let src = &land.slope.as_slice()[r * w * 9..(r + 1) * w * 9];
        let dst = ((r + border) * pw + border) * 9;
        slope[dst..dst + w * 9].copy_from_slice(src);
    }
    let padded = Landscape {
        wind_speed: plane(&land.wind_speed, 0.0),
        wind_direction: plane(&land.wind_direction, 0.0),
        slope: Grid::from_vec(vec![ph, pw, 3, 3], slope)?,
        canopy: plane(&land.canopy, -1.0),
        density: plane(&land.density, -1.0),
        cell_side: land.cell_side,
    };
    let mask = Grid::from_fn2(ph, pw, |r, c| {
        inside(r, c) && init.get2(r - border, c - border)
    });
    Ok((padded, mask))
}

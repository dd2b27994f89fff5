//! Directory layouts for landscapes and observation schedules.
//!
//! A landscape bundle holds `wind_speed.ptfg`, `wind_direction.ptfg`,
//! `slope.ptfg`, `canopy.ptfg`, `density.ptfg`, an optional boolean
//! `ignition.ptfg` and `manifest.txt` with at least `cell_side`. A planar
//! `altitude.ptfg` may stand in for `slope.ptfg`.
//!
//! An observation directory holds `schedule.txt` (`steps_update_interval`,
//! `count`) and, for `k = 1..=count`, `target_<kkk>.ptfg` plus optional
//! `wind_speed_<kkk>.ptfg` / `wind_direction_<kkk>.ptfg`.

use std::fs;
use std::path::Path;

use crate::calibration::{Observation, ObservationSchedule};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::io::gridfile::{read_bool_grid, read_real_grid, write_grid, GridData};
use crate::io::terrain::{slope_from_altitude, SlopeSign};
use crate::io::text::KeyValues;
use crate::model::{Landscape, WindField};

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const IGNITION_FILE: &str = "ignition.ptfg";
pub const SCHEDULE_FILE: &str = "schedule.txt";
pub const ALTITUDE_FILE: &str = "altitude.ptfg";

const FIELDS: [&str; 5] = ["wind_speed", "wind_direction", "slope", "canopy", "density"];

#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeBundle {
    pub landscape: Landscape,
    pub ignition: Option<Grid<bool>>,
    pub metadata: KeyValues,
}

fn real(g: &Grid<f64>) -> GridData {
    GridData::Real(g.to_f32())
}

pub fn write_bundle(dir: impl AsRef<Path>, bundle: &LandscapeBundle) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let land = &bundle.landscape;
    let grids = [
        &land.wind_speed,
        &land.wind_direction,
        &land.slope,
        &land.canopy,
        &land.density,
    ];
    for (name, grid) in FIELDS.iter().zip(grids) {
        write_grid(dir.join(format!("{name}.ptfg")), &real(grid))?;
    }
    if let Some(ig) = &bundle.ignition {
        write_grid(dir.join(IGNITION_FILE), &GridData::Bool(ig.clone()))?;
    }
    let mut meta = bundle.metadata.clone();
    meta.set("cell_side", land.cell_side);
    meta.write(dir.join(MANIFEST_FILE))
}

pub fn read_bundle(dir: impl AsRef<Path>) -> Result<LandscapeBundle> {
    read_bundle_with(dir, SlopeSign::default())
}

/// Like [`read_bundle`]; `sign` orients slopes derived from an altitude grid.
pub fn read_bundle_with(dir: impl AsRef<Path>, sign: SlopeSign) -> Result<LandscapeBundle> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(Error::MissingFile(dir.to_path_buf()));
    }
    let metadata = KeyValues::read(dir.join(MANIFEST_FILE))?;
    let cell_side: f64 = metadata
        .parse_value("cell_side")?
        .ok_or_else(|| Error::Parse("manifest lacks `cell_side`".into()))?;
    let mut grids = Vec::with_capacity(FIELDS.len());
    for name in FIELDS {
        let path = dir.join(format!("{name}.ptfg"));
        let altitude = dir.join(ALTITUDE_FILE);
        if name == "slope" && !path.exists() && altitude.exists() {
            let alt = read_real_grid(altitude)?.to_f64();
            grids.push(slope_from_altitude(&alt, cell_side, sign)?);
        } else {
            grids.push(read_real_grid(path)?.to_f64());
        }
    }
    let ignition_path = dir.join(IGNITION_FILE);
    let ignition = if ignition_path.exists() {
        Some(read_bool_grid(ignition_path)?)
    } else {
        None
    };
    let mut it = grids.into_iter();
    let mut next = || it.next().expect("five fields");
    let landscape = Landscape {
        wind_speed: next(),
        wind_direction: next(),
        slope: next(),
        canopy: next(),
        density: next(),
        cell_side,
    };
    Ok(LandscapeBundle {
        landscape,
        ignition,
        metadata,
    })
}

fn indexed(prefix: &str, k: usize) -> String {
    format!("{prefix}_{k:03}.ptfg")
}

pub fn write_schedule(dir: impl AsRef<Path>, schedule: &ObservationSchedule) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut kv = KeyValues::new();
    kv.set("steps_update_interval", schedule.steps_update_interval);
    kv.set("count", schedule.observations.len());
    kv.write(dir.join(SCHEDULE_FILE))?;
    for (i, obs) in schedule.observations.iter().enumerate() {
        let k = i + 1;
        write_grid(
            dir.join(indexed("target", k)),
            &GridData::Bool(obs.target.clone()),
        )?;
        if let Some(w) = &obs.wind {
            write_grid(dir.join(indexed("wind_speed", k)), &real(&w.speed))?;
            write_grid(dir.join(indexed("wind_direction", k)), &real(&w.direction))?;
        }
    }
    Ok(())
}

pub fn read_schedule(dir: impl AsRef<Path>) -> Result<ObservationSchedule> {
    let dir = dir.as_ref();
    let kv = KeyValues::read(dir.join(SCHEDULE_FILE))?;
    let steps_update_interval: usize = kv
        .parse_value("steps_update_interval")?
        .ok_or_else(|| Error::Parse("schedule lacks `steps_update_interval`".into()))?;
    let count: usize = kv
        .parse_value("count")?
        .ok_or_else(|| Error::Parse("schedule lacks `count`".into()))?;
    let mut observations = Vec::with_capacity(count);
    for k in 1..=count {
        let target = read_bool_grid(dir.join(indexed("target", k)))?;
        let speed_path = dir.join(indexed("wind_speed", k));
        let wind = if speed_path.exists() {
            Some(WindField {
                speed: read_real_grid(speed_path)?.to_f64(),
                direction: read_real_grid(dir.join(indexed("wind_direction", k)))?.to_f64(),
            })
        } else {
            None
        };
        observations.push(Observation { target, wind });
    }
    Ok(ObservationSchedule {
        observations,
        steps_update_interval,
    })
}

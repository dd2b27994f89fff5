//! Twin experiments: observations generated by the model itself from known
//! parameters, so calibration quality can be measured.

use crate::calibration::{evaluate, replay, Evaluation, Observation, ObservationSchedule};
use crate::error::Result;
use crate::grid::Grid;
use crate::model::{Landscape, ModelParams};
use crate::propagation::KernelOptions;

/// Runs the model once with `truth` and records the affected region after
/// every `interval` steps, `count` times.
pub fn build_twin_schedule(
    land: &Landscape,
    init: &Grid<bool>,
    truth: &ModelParams,
    interval: usize,
    count: usize,
    seed: u64,
    kernel: &KernelOptions,
) -> Result<ObservationSchedule> {
    let (h, w) = land.dims();
    // Placeholder targets only fix the observation count for the replay.
    let blank = ObservationSchedule {
        observations: vec![
            Observation {
                target: Grid::filled(vec![h, w], false),
                wind: None,
            };
            count
        ],
        steps_update_interval: interval,
    };
    let mut observations = Vec::with_capacity(count);
    for k in 1..=count {
        let run = replay(land, init, &blank, truth, seed, k, None, kernel)?;
        observations.push(Observation {
            target: run.state.affected(),
            wind: None,
        });
    }
    Ok(ObservationSchedule {
        observations,
        steps_update_interval: interval,
    })
}

/// Spread of the target itself: the truth re-run with other seeds, scored
/// against the target observations.
pub fn target_band(
    land: &Landscape,
    init: &Grid<bool>,
    schedule: &ObservationSchedule,
    truth: &ModelParams,
    seeds: &[u64],
    kernel: &KernelOptions,
) -> Result<Evaluation> {
    evaluate(land, init, schedule, truth, seeds, kernel)
}

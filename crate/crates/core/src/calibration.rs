//! Gradient-descent calibration of `(c1, c2, a, p_h)` against observed
//! burn maps.
//!
//! Each epoch fixes one seed. Every iteration re-simulates from the initial
//! fire with the latest parameters up to the iteration's observation time,
//! attaching the step rings, then takes one AdamW step on the combined loss
//! and clamps the parameters back into their box.

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::loss::{combined_loss, jaccard_index, manhattan_distance, LossBreakdown};
use crate::model::{
    clamp_params, new_fire_state, FireState, Landscape, ModelParams, RunManifest, StepRingsConfig,
    WindField,
};
use crate::propagation::{KernelOptions, Simulator};
use crate::rng::derive_epoch_seed;
use crate::tape::{backward_params, AttachmentPlan, ParamGradient, Tape};

pub const DEFAULT_LEARNING_RATE: f64 = 5e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamWConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            learning_rate: DEFAULT_LEARNING_RATE,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

/// Moment estimates for the four calibratable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    pub config: AdamWConfig,
    pub m: [f64; 4],
    pub v: [f64; 4],
    pub step: u64,
}

impl OptimizerState {
    pub fn new(config: AdamWConfig) -> Self {
        Self {
            config,
            m: [0.0; 4],
            v: [0.0; 4],
            step: 0,
        }
    }
}

/// One AdamW step with decoupled weight decay and bias correction.
/// Non-finite gradients are rejected without touching the state.
pub fn adamw_update(
    state: &mut OptimizerState,
    params: &ModelParams,
    grads: &ParamGradient,
) -> Result<ModelParams> {
    if !grads.is_finite() {
        return Err(Error::NonFinite(format!("gradient {grads:?}")));
    }
    let cfg = state.config;
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    let g = grads.as_array();
    let mut p = params.calibratable();
    for k in 0..4 {
        p[k] -= cfg.learning_rate * cfg.weight_decay * p[k];
        state.m[k] = cfg.beta1 * state.m[k] + (1.0 - cfg.beta1) * g[k];
        state.v[k] = cfg.beta2 * state.v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
        let m_hat = state.m[k] / bc1;
        let v_hat = state.v[k] / bc2;
        p[k] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.eps);
    }
    Ok(params.with_calibratable(p))
}

/// One observed burn map, with the wind in effect during the interval that
/// ends at it.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// Cumulative affected region (burning or burned).
    pub target: Grid<bool>,
    pub wind: Option<WindField>,
}

/// Observation `k` (1-based) is taken after `k * steps_update_interval` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSchedule {
    pub observations: Vec<Observation>,
    pub steps_update_interval: usize,
}

impl ObservationSchedule {
    pub fn max_iterations(&self) -> usize {
        self.observations.len()
    }

    pub fn target_counts(&self, upto: usize) -> Vec<usize> {
        self.observations[..upto]
            .iter()
            .map(|o| o.target.count_true())
            .collect()
    }
}

/// Seed policy across epochs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SeedPolicy {
    /// A fresh seed derived from the base seed for every epoch.
    #[default]
    PerEpoch,
    /// The base seed for every epoch.
    Fixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationConfig {
    pub max_epochs: usize,
    pub rings: StepRingsConfig,
    pub optimizer: AdamWConfig,
    pub base_seed: u64,
    pub seed_policy: SeedPolicy,
    pub kernel: KernelOptions,
    /// Fresh-seed runs used to score the returned parameters.
    pub final_eval_runs: usize,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            max_epochs: 10,
            rings: StepRingsConfig::default(),
            optimizer: AdamWConfig::default(),
            base_seed: 0,
            seed_policy: SeedPolicy::default(),
            kernel: KernelOptions::default(),
            final_eval_runs: 5,
        }
    }
}

/// Metrics of one (epoch, iteration) evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub epoch: usize,
    pub iteration: usize,
    pub seed: u64,
    /// Parameters used for this re-simulation (before the update).
    pub params: ModelParams,
    pub loss: LossBreakdown,
    pub gradient: ParamGradient,
    pub jaccard: f64,
    pub manhattan: u64,
    pub affected: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Divergence {
    pub epoch: usize,
    pub iteration: usize,
    pub reason: String,
    pub restored: ModelParams,
}

/// Scores of one parameter set against the final observation.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub seeds: Vec<u64>,
    pub jaccard: Vec<f64>,
    pub manhattan: Vec<u64>,
}

impl Evaluation {
    pub fn mean_jaccard(&self) -> f64 {
        mean(self.jaccard.iter().copied())
    }

    pub fn mean_manhattan(&self) -> f64 {
        mean(self.manhattan.iter().map(|&m| m as f64))
    }
}

fn mean(it: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = it.len();
    if n == 0 {
        return f64::NAN;
    }
    it.sum::<f64>() / n as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationResult {
    pub best_params: ModelParams,
    /// Monitored loss of `best_params`; infinite if nothing was evaluated.
    pub best_loss: f64,
    pub final_params: ModelParams,
    pub records: Vec<IterationRecord>,
    pub divergences: Vec<Divergence>,
    pub manifest: RunManifest,
    pub final_evaluation: Option<Evaluation>,
}

/// Output of a re-simulation up to one observation.
#[derive(Debug, Clone)]
pub struct Replay {
    pub state: FireState,
    pub tape: Tape,
    /// Affected count at each observation time up to the last simulated one.
    pub affected_at_observations: Vec<usize>,
}

/// Simulates from the initial fire through observation `upto` (1-based),
/// applying each observation's wind for the interval leading to it. With
/// `rings`, steps are attached per the step-ring plan of this run length.
#[allow(clippy::too_many_arguments)]
pub fn replay(
    land: &Landscape,
    init: &Grid<bool>,
    schedule: &ObservationSchedule,
    params: &ModelParams,
    seed: u64,
    upto: usize,
    rings: Option<&StepRingsConfig>,
    kernel: &KernelOptions,
) -> Result<Replay> {
    if upto == 0 || upto > schedule.max_iterations() {
        return Err(Error::InvalidArgument(format!(
            "observation index {upto} outside 1..={}",
            schedule.max_iterations()
        )));
    }
    let interval = schedule.steps_update_interval;
    if interval == 0 {
        return Err(Error::InvalidArgument(
            "steps_update_interval must be positive".into(),
        ));
    }
    let total = upto * interval;
    let plan = rings.map(|r| AttachmentPlan::new(total, r));
    let (h, w) = land.dims();
    let mut tape = Tape::new(h, w, kernel.normalization);
    let mut sim = Simulator::new(land, *params, *kernel, seed, new_fire_state(land, init)?)?;
    let mut affected = Vec::with_capacity(upto);
    for k in 1..=upto {
        if let Some(wind) = &schedule.observations[k - 1].wind {
            sim.set_wind(wind.clone())?;
        }
        for s in (k - 1) * interval + 1..=k * interval {
            let attach = plan.as_ref().is_some_and(|p| p.is_attached(s));
            let report = sim.step(attach);
            tape.record_step(&report);
        }
        affected.push(sim.state().affected_count());
    }
    Ok(Replay {
        state: sim.into_state(),
        tape,
        affected_at_observations: affected,
    })
}

/// Jaccard against the last observation and Manhattan over all observation
/// counts, for each seed.
pub fn evaluate(
    land: &Landscape,
    init: &Grid<bool>,
    schedule: &ObservationSchedule,
    params: &ModelParams,
    seeds: &[u64],
    kernel: &KernelOptions,
) -> Result<Evaluation> {
    let k = schedule.max_iterations();
    let target_counts = schedule.target_counts(k);
    let last = &schedule.observations[k - 1].target;
    let mut out = Evaluation {
        seeds: seeds.to_vec(),
        jaccard: Vec::with_capacity(seeds.len()),
        manhattan: Vec::with_capacity(seeds.len()),
    };
    for &seed in seeds {
        let run = replay(land, init, schedule, params, seed, k, None, kernel)?;
        out.jaccard
            .push(jaccard_index(&run.state.affected(), last)?);
        out.manhattan.push(manhattan_distance(
            &run.affected_at_observations,
            &target_counts,
        )?);
    }
    Ok(out)
}

/// Seeds used for fresh-seed evaluation after calibration.
pub fn evaluation_seeds(base_seed: u64, n: usize) -> Vec<u64> {
    (0..n as u64)
        .map(|i| derive_epoch_seed(base_seed ^ 0x5EED_E7A1_0000_0000, i))
        .collect()
}

pub fn calibrate(
    land: &Landscape,
    init: &Grid<bool>,
    schedule: &ObservationSchedule,
    init_params: &ModelParams,
    config: &CalibrationConfig,
) -> Result<CalibrationResult> {
    if schedule.observations.is_empty() {
        return Err(Error::InvalidArgument(
            "observation schedule is empty".into(),
        ));
    }
    if !init_params.in_clamp_box() {
        return Err(Error::InvalidArgument(format!(
            "initial parameters outside the clamp box: {init_params:?}"
        )));
    }
    let (h, w) = land.dims();
    for obs in &schedule.observations {
        obs.target.ensure_shape(&[h, w])?;
    }
    let max_iterations = schedule.max_iterations();
    let mut manifest = RunManifest {
        base_seed: config.base_seed,
        steps_update_interval: schedule.steps_update_interval,
        max_epochs: config.max_epochs,
        max_iterations,
        learning_rate: config.optimizer.learning_rate,
        ..RunManifest::default()
    };
    let mut result = CalibrationResult {
        best_params: *init_params,
        best_loss: f64::INFINITY,
        final_params: *init_params,
        records: Vec::new(),
        divergences: Vec::new(),
        manifest: RunManifest::default(),
        final_evaluation: None,
    };

    let mut optimizer = OptimizerState::new(config.optimizer);
    let mut params = *init_params;
    for epoch in 0..config.max_epochs {
        let seed = match config.seed_policy {
            SeedPolicy::PerEpoch => derive_epoch_seed(config.base_seed, epoch as u64),
            SeedPolicy::Fixed => config.base_seed,
        };
        manifest.epoch_seeds.push(seed);
        let mut last_finite = params;

        for it in 1..=max_iterations {
            let run = replay(
                land,
                init,
                schedule,
                &params,
                seed,
                it,
                Some(&config.rings),
                &config.kernel,
            )?;
            let target = &schedule.observations[it - 1].target;
            let (loss, d_acc) = combined_loss(&run.state.accumulator, target)?;
            if !loss.total.is_finite() {
                result.divergences.push(Divergence {
                    epoch,
                    iteration: it,
                    reason: format!("non-finite loss {}", loss.total),
                    restored: last_finite,
                });
                params = last_finite;
                break;
            }
            let gradient = backward_params(&run.tape, &d_acc)?;
            let jaccard = jaccard_index(&run.state.affected(), target)?;
            let manhattan =
                manhattan_distance(&run.affected_at_observations, &schedule.target_counts(it))?;
            result.records.push(IterationRecord {
                epoch,
                iteration: it,
                seed,
                params,
                loss,
                gradient,
                jaccard,
                manhattan,
                affected: run.state.affected_count(),
            });
            if it == max_iterations && loss.total < result.best_loss {
                result.best_loss = loss.total;
                result.best_params = params;
            }

            match adamw_update(&mut optimizer, &params, &gradient) {
                Ok(updated) => {
                    params = clamp_params(updated);
                    last_finite = params;
                    manifest.record(epoch, it, params);
                }
                Err(e) => {
                    result.divergences.push(Divergence {
                        epoch,
                        iteration: it,
                        reason: e.to_string(),
                        restored: last_finite,
                    });
                    params = last_finite;
                    break;
                }
            }
        }
    }

    result.final_params = params;
    if config.max_epochs > 0 && config.final_eval_runs > 0 {
        let seeds = evaluation_seeds(config.base_seed, config.final_eval_runs);
        result.final_evaluation = Some(evaluate(
            land,
            init,
            schedule,
            &result.best_params,
            &seeds,
            &config.kernel,
        )?);
    }
    result.manifest = manifest;
    Ok(result)
}

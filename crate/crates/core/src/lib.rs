//! Differentiable cellular-automata wildfire spread model.
//!
//! The forward model advances a two-channel (burning / burned) fire state on
//! a raster landscape using wind, slope and vegetation factors. Ignition
//! probabilities of newly ignited cells are accumulated so that the four
//! physical parameters can be calibrated against observed burn maps by
//! gradient descent.

pub mod calibration;
pub mod error;
pub mod grid;
pub mod io;
pub mod loss;
pub mod model;
pub mod normfit;
pub mod propagation;
pub mod rng;
pub mod synthetic;
pub mod tape;
pub mod twin;

pub use calibration::{
    adamw_update, calibrate, evaluate, AdamWConfig, CalibrationConfig, CalibrationResult,
    Observation, ObservationSchedule, OptimizerState, SeedPolicy,
};
pub use error::{Error, Result};
pub use grid::Grid;
pub use loss::{combined_loss, jaccard_index, manhattan_distance, LossBreakdown};
pub use model::{
    clamp_params, new_fire_state, validate_landscape, validate_params, FireState, Landscape,
    ModelParams, RunManifest, StepRingsConfig, ValidationReport, WindField,
};
pub use propagation::{
    run_simulation, step_forward, FactorSite, KernelOptions, NormalizationConstant, RunOptions,
    SimulationOutput, Simulator, SlopeUnits, StepCounts,
};
pub use rng::{derive_epoch_seed, uniform_draw, Channel, DrawKey};
pub use synthetic::{synthetic_landscape, SyntheticKind};
pub use tape::{backward_params, check_if_attach, AttachmentPlan, ParamGradient, Tape};

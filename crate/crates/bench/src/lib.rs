//! Fixtures shared by the kernel benchmarks.

use firegrad_core::synthetic::{center_block, default_landscape, SyntheticKind};
use firegrad_core::{Grid, Landscape, ModelParams};

pub struct Case {
    pub land: Landscape,
    pub init: Grid<bool>,
    pub params: ModelParams,
}

/// Square random landscape with a 3x3 ignition in the middle and
/// parameters that keep the front spreading.
pub fn spreading_case(size: usize) -> Case {
    let land = default_landscape(SyntheticKind::Random(7), size).expect("size > 0");
    Case {
        init: center_block(size, size, 3),
        land,
        params: ModelParams::new(0.045, 0.131, 0.078, 0.58, 0.9),
    }
}

//! Reference implementations used as oracles by the integration tests.
//! They restate the model directly from its definition, without sharing code
//! paths with the crate beyond the public data types.

#![allow(dead_code)]

use firegrad_core::{
    new_fire_state, FireState, Grid, KernelOptions, Landscape, ModelParams, Simulator, Tape,
};

pub const C_NORM: f64 = 1.1486328125;

/// Bearing of the offset `(dr, dc)`, counterclockwise from East with rows
/// growing southward.
pub fn bearing(dr: isize, dc: isize) -> f64 {
    (-(dr as f64)).atan2(dc as f64).to_degrees()
}

/// Raw propagation probability from `src` to its neighbor `dst`, with
/// vegetation and density read at the target.
pub fn oracle_prop(
    p: &ModelParams,
    land: &Landscape,
    src: (usize, usize),
    dst: (usize, usize),
) -> f64 {
    let dr = dst.0 as isize - src.0 as isize;
    let dc = dst.1 as isize - src.1 as isize;
    let v = land.wind_speed.get2(src.0, src.1);
    let theta = land.wind_direction.get2(src.0, src.1) - bearing(dr, dc);
    let slope = land.slope.as_slice()
        [((src.0 * land.width() + src.1) * 3 + (dr + 1) as usize) * 3 + (dc + 1) as usize];
    let p_w = (p.c1 * v).exp() * (p.c2 * v * (theta.to_radians().cos() - 1.0)).exp();
    let p_s = (p.a * slope).exp();
    p.p_h
        * (1.0 + land.canopy.get2(dst.0, dst.1))
        * (1.0 + land.density.get2(dst.0, dst.1))
        * p_w
        * p_s
}

/// `Σ_{S ≠ ∅} (-1)^{|S|+1} Π_{i∈S} p_i` by explicit subset enumeration.
pub fn inclusion_exclusion(p: &[f64]) -> f64 {
    let n = p.len();
    let mut total = 0.0;
    for mask in 1u32..(1 << n) {
        let mut prod = 1.0;
        for (i, pi) in p.iter().enumerate() {
            if mask & (1 << i) != 0 {
                prod *= pi;
            }
        }
        if mask.count_ones() % 2 == 1 {
            total += prod;
        } else {
            total -= prod;
        }
    }
    total
}

/// States before every step (`states[0]` is the initial state) plus the
/// tape of a fully attached run.
pub struct Trajectory {
    pub states: Vec<FireState>,
    pub tape: Tape,
}

pub fn record_trajectory(
    land: &Landscape,
    params: &ModelParams,
    init: &Grid<bool>,
    steps: usize,
    seed: u64,
) -> Trajectory {
    let opts = KernelOptions::default();
    let (h, w) = land.dims();
    let mut tape = Tape::new(h, w, opts.normalization);
    let mut sim = Simulator::new(
        land,
        *params,
        opts,
        seed,
        new_fire_state(land, init).unwrap(),
    )
    .unwrap();
    let mut states = vec![sim.state().clone()];
    for _ in 0..steps {
        let report = sim.step(true);
        tape.record_step(&report);
        states.push(sim.state().clone());
    }
    Trajectory { states, tape }
}

/// Accumulator of a frozen trajectory re-evaluated under `p`: cells that
/// first became burning at step `s` get the ignition probability from the
/// cells burning before step `s`.
pub fn frozen_accumulator(land: &Landscape, p: &ModelParams, traj: &Trajectory) -> Grid<f64> {
    let (h, w) = land.dims();
    let first = &traj.states[0];
    let mut acc = Grid::from_fn2(
        h,
        w,
        |r, c| if first.burning.get2(r, c) { 1.0 } else { 0.0 },
    );
    for pair in traj.states.windows(2) {
        let (before, after) = (&pair[0], &pair[1]);
        for r in 0..h {
            for c in 0..w {
                let fresh = after.burning.get2(r, c)
                    && !before.burning.get2(r, c)
                    && !before.burned.get2(r, c);
                if !fresh {
                    continue;
                }
                let mut survive = 1.0;
                for dr in -1isize..=1 {
                    for dc in -1isize..=1 {
                        if dr == 0 && dc == 0 {
                            continue;
                        }
                        let (sr, sc) = (r as isize + dr, c as isize + dc);
                        if sr < 0 || sc < 0 || sr >= h as isize || sc >= w as isize {
                            continue;
                        }
                        let src = (sr as usize, sc as usize);
                        if before.burning.get2(src.0, src.1) {
                            let f = (C_NORM * oracle_prop(p, land, src, (r, c))).tanh();
                            survive *= 1.0 - f;
                        }
                    }
                }
                acc.set2(r, c, 1.0 - survive);
            }
        }
    }
    acc
}

/// BCE with logits over the bounding box of nonzero prediction or target
/// cells, plus MSE of 4x4 average pools.
pub fn oracle_loss(pred: &Grid<f64>, target: &Grid<bool>) -> f64 {
    let (h, w) = pred.dims2();
    let (mut r0, mut r1, mut c0, mut c1) = (h, 0, w, 0);
    for r in 0..h {
        for c in 0..w {
            if pred.get2(r, c) != 0.0 || target.get2(r, c) {
                r0 = r0.min(r);
                r1 = r1.max(r + 1);
                c0 = c0.min(c);
                c1 = c1.max(c + 1);
            }
        }
    }
    if r0 >= r1 {
        (r0, r1, c0, c1) = (0, h, 0, w);
    }
    let mut bce = 0.0;
    for r in r0..r1 {
        for c in c0..c1 {
            let x = pred.get2(r, c);
            let y = if target.get2(r, c) { 1.0 } else { 0.0 };
            let s = 1.0 / (1.0 + (-x).exp());
            bce -= y * s.ln() + (1.0 - y) * (1.0 - s).ln();
        }
    }
    bce /= ((r1 - r0) * (c1 - c0)) as f64;
    let (ph, pw) = (h / 4, w / 4);
    let mut mse = 0.0;
    for i in 0..ph {
        for j in 0..pw {
            let (mut a, mut b) = (0.0, 0.0);
            for r in 4 * i..4 * i + 4 {
                for c in 4 * j..4 * j + 4 {
                    a += pred.get2(r, c);
                    b += if target.get2(r, c) { 1.0 } else { 0.0 };
                }
            }
            mse += ((a - b) / 16.0).powi(2);
        }
    }
    if ph * pw > 0 {
        mse /= (ph * pw) as f64;
    }
    bce + mse
}

pub fn rel_err(actual: f64, expected: f64) -> f64 {
    if expected == 0.0 {
        actual.abs()
    } else {
        ((actual - expected) / expected).abs()
    }
}

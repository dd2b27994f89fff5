mod common;

use common::*;
use firegrad_core::propagation::{normalize_prob, propagation_term};
use firegrad_core::synthetic::{center_block, default_landscape, SyntheticKind};
use firegrad_core::tape::TapeEntry;
use firegrad_core::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

#[test]
fn tape_replay_reconstructs_accumulator_bit_exactly() {
    let land = default_landscape(SyntheticKind::Random(21), 24).unwrap();
    let init = center_block(24, 24, 2);
    let traj = record_trajectory(&land, &ModelParams::default(), &init, 30, 4);
    let mut acc = Grid::from_fn2(24, 24, |r, c| if init.get2(r, c) { 1.0 } else { 0.0 });
    traj.tape.replay_into(&mut acc);
    let forward = &traj.states.last().unwrap().accumulator;
    assert!(traj.tape.len() > 20);
    assert!(acc
        .as_slice()
        .iter()
        .zip(forward.as_slice())
        .all(|(a, b)| a.to_bits() == b.to_bits()));
}

#[test]
fn single_neighbor_entry_matches_finite_differences() {
    let land = default_landscape(SyntheticKind::Random(8), 5).unwrap();
    let opts = KernelOptions::default();
    let params = ModelParams::new(0.1, 0.2, 0.03, 0.4, 0.5);
    let (src, dst) = ((2, 2), (1, 3));
    let term = propagation_term(&params, &land, src, dst, &opts).unwrap();
    let mut tape = Tape::new(5, 5, opts.normalization);
    tape.push(TapeEntry {
        step: 1,
        row: dst.0,
        col: dst.1,
        terms: vec![term],
    });
    let mut upstream = Grid::zeros(vec![5, 5]);
    upstream.set2(dst.0, dst.1, 1.0);
    let analytic = backward_params(&tape, &upstream).unwrap().as_array();

    let p_ignite = |v: [f64; 4]| {
        let raw = propagation_term(&params.with_calibratable(v), &land, src, dst, &opts)
            .unwrap()
            .raw;
        normalize_prob(raw, opts.normalization)
    };
    let h = 1e-6;
    for k in 0..4 {
        let (mut up, mut down) = (params.calibratable(), params.calibratable());
        up[k] += h;
        down[k] -= h;
        let fd = (p_ignite(up) - p_ignite(down)) / (2.0 * h);
        assert!(
            rel_err(analytic[k], fd) < 1e-6,
            "component {k}: {} vs {fd}",
            analytic[k]
        );
    }
}

#[test]
fn loss_gradient_matches_finite_differences() {
    let mut rng = StdRng::seed_from_u64(31);
    let pred = Grid::from_fn2(16, 16, |_, _| {
        if rng.gen_bool(0.3) {
            0.0
        } else {
            rng.gen::<f64>()
        }
    });
    // Corner targets pin the crop window to the whole grid.
    let target = Grid::from_fn2(16, 16, |r, c| {
        (r % 15 == 0 && c % 15 == 0) || (r * 7 + c * 3) % 5 == 0
    });
    let (_, grad) = combined_loss(&pred, &target).unwrap();
    // The loss is O(1) while some cell gradients are O(1e-5), so a larger
    // step keeps rounding in the differences well below the tolerance.
    let h = 1e-4;
    for i in 0..256 {
        let (mut up, mut down) = (pred.clone(), pred.clone());
        up.as_mut_slice()[i] += h;
        down.as_mut_slice()[i] -= h;
        let fd = (combined_loss(&up, &target).unwrap().0.total
            - combined_loss(&down, &target).unwrap().0.total)
            / (2.0 * h);
        assert!(
            rel_err(grad.as_slice()[i], fd) < 1e-6,
            "cell {i}: {} vs {fd}",
            grad.as_slice()[i]
        );
    }
    let total = combined_loss(&pred, &target).unwrap().0.total;
    assert!(rel_err(total, oracle_loss(&pred, &target)) < 1e-12);
}

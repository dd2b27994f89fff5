use firegrad_core::calibration::evaluation_seeds;
use firegrad_core::synthetic::{center_block, default_landscape, SyntheticKind};
use firegrad_core::twin::{build_twin_schedule, target_band};
use firegrad_core::*;

fn std_dev(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

#[test]
fn starting_at_the_truth_does_not_degrade() {
    let kernel = KernelOptions::default();
    let land = default_landscape(SyntheticKind::Valley, 48).unwrap();
    let init = center_block(48, 48, 3);
    let truth = ModelParams::new(0.15, 0.15, 0.15, 0.5, 0.4);
    let schedule = build_twin_schedule(&land, &init, &truth, 3, 6, 21, &kernel).unwrap();
    let seeds = evaluation_seeds(3, 5);
    let band = target_band(&land, &init, &schedule, &truth, &seeds, &kernel).unwrap();

    let config = CalibrationConfig {
        max_epochs: 4,
        base_seed: 3,
        ..CalibrationConfig::default()
    };
    let result = calibrate(&land, &init, &schedule, &truth, &config).unwrap();
    assert!(result.records.iter().all(|r| r.params.in_clamp_box()));
    assert!(result.best_params.in_clamp_box());
    let after = result.final_evaluation.unwrap();
    let jaccard_floor = band.mean_jaccard() - 3.0 * std_dev(&band.jaccard);
    assert!(
        after.mean_jaccard() >= jaccard_floor,
        "{} < {jaccard_floor}",
        after.mean_jaccard()
    );
    let manhattan: Vec<f64> = band.manhattan.iter().map(|&m| m as f64).collect();
    let manhattan_ceiling = band.mean_manhattan() + 3.0 * std_dev(&manhattan);
    assert!(after.mean_manhattan() <= manhattan_ceiling);
}

#[test]
fn lr_zero_with_fixed_seed_repeats_every_epoch() {
    let kernel = KernelOptions::default();
    let land = default_landscape(SyntheticKind::Flat, 24).unwrap();
    let init = center_block(24, 24, 2);
    let truth = ModelParams::new(0.1, 0.1, 0.1, 0.5, 0.5);
    let schedule = build_twin_schedule(&land, &init, &truth, 2, 4, 1, &kernel).unwrap();
    let config = CalibrationConfig {
        max_epochs: 3,
        seed_policy: SeedPolicy::Fixed,
        optimizer: AdamWConfig {
            learning_rate: 0.0,
            ..AdamWConfig::default()
        },
        ..CalibrationConfig::default()
    };
    let start = ModelParams::new(0.2, 0.3, 0.05, 0.7, 0.5);
    let r = calibrate(&land, &init, &schedule, &start, &config).unwrap();
    assert_eq!(r.final_params, start);
    assert_eq!(r.records.len(), 12);
    for rec in &r.records[4..] {
        let first = &r.records[rec.iteration - 1];
        assert_eq!(rec.loss, first.loss);
        assert_eq!(
            (rec.jaccard, rec.manhattan),
            (first.jaccard, first.manhattan)
        );
    }
}

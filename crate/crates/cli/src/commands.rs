//! Subcommand implementations.

use std::collections::hash_map::DefaultHasher;
use std::fmt::Write as _;
use std::fs;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};
use std::time::Instant;

use firegrad_core::calibration::{evaluate, evaluation_seeds, Evaluation};
use firegrad_core::io::text::manifest_to_kv;
use firegrad_core::io::{
    read_bool_grid, read_bundle_with, read_schedule, write_bundle, write_grid, write_params,
    write_schedule, write_series_csv, write_snapshot, GridData, KeyValues, LandscapeBundle,
};
use firegrad_core::synthetic::{
    center_block, default_landscape, synthetic_landscape, SyntheticKind, DEFAULT_WIND_DIRECTION,
    DEFAULT_WIND_SPEED,
};
use firegrad_core::twin::build_twin_schedule;
use firegrad_core::{
    calibrate as run_calibration, jaccard_index, manhattan_distance, run_simulation,
    validate_landscape, validate_params, AdamWConfig, CalibrationConfig, FireState, Grid,
    Landscape, ModelParams, RunOptions, WindField,
};

use crate::settings::{RunArgs, Settings};
use crate::{BenchArgs, Class, Failure, MetricsArgs};

const IGNITION_SIDE: usize = 3;
const WARMUP_STEPS: usize = 10;
/// Rough resident bytes per cell during a forward run.
const BYTES_PER_CELL: usize = 160;
const DEFAULT_TWIN_INTERVAL: usize = 3;

type CmdResult = Result<(), Failure>;

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::new(Class::Io, format!("{}: {e}", path.display()))
}

fn create_dir(path: &Path) -> CmdResult {
    fs::create_dir_all(path).map_err(|e| io_failure(path, e))
}

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool, Failure> {
    if threads == 0 {
        return Err(Failure::input("`threads` must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| {
            Failure::new(
                Class::Resource,
                format!("cannot start {threads} threads: {e}"),
            )
        })
}

/// Runs `f` on a pool sized by the `threads` setting.
fn with_threads<T: Send>(
    s: &Settings,
    f: impl FnOnce() -> Result<T, Failure> + Send,
) -> Result<T, Failure> {
    thread_pool(s.get("threads")?)?.install(f)
}

fn checked_params(s: &Settings) -> Result<ModelParams, Failure> {
    let p = s.params()?;
    let report = validate_params(&p);
    if !report.is_ok() {
        let msg: Vec<String> = report.violations.iter().map(ToString::to_string).collect();
        return Err(Failure::new(Class::Validation, msg.join("; ")));
    }
    Ok(p)
}

/// The configured landscape and its ignition mask (a centred block when the
/// source carries none).
fn load_landscape(s: &Settings) -> Result<(Landscape, Grid<bool>), Failure> {
    let sign = s.slope_sign()?;
    let (land, ignition) = if let Some(dir) = s.str("landscape") {
        let bundle = read_bundle_with(dir, sign)?;
        (bundle.landscape, bundle.ignition)
    } else {
        let kind: SyntheticKind = s.str("synthetic").unwrap_or("flat").parse()?;
        let size: usize = s.get("size")?;
        let wind = WindField::uniform(size, size, DEFAULT_WIND_SPEED, DEFAULT_WIND_DIRECTION);
        (synthetic_landscape(kind, size, size, &wind, sign)?, None)
    };
    validate_landscape(&land).into_result()?;
    let (h, w) = land.dims();
    let init = ignition.unwrap_or_else(|| center_block(h, w, IGNITION_SIDE));
    init.ensure_shape(&[h, w])?;
    Ok((land, init))
}

fn out_dir(s: &Settings) -> Result<PathBuf, Failure> {
    let out = PathBuf::from(s.str("out").unwrap_or("firegrad_out"));
    create_dir(&out)?;
    Ok(out)
}

fn write_state(dir: &Path, prefix: &str, state: &FireState) -> CmdResult {
    write_grid(
        dir.join(format!("{prefix}_burning.ptfg")),
        &GridData::Bool(state.burning.clone()),
    )?;
    write_grid(
        dir.join(format!("{prefix}_burned.ptfg")),
        &GridData::Bool(state.burned.clone()),
    )?;
    write_grid(
        dir.join(format!("{prefix}_accumulator.ptfg")),
        &GridData::Real(state.accumulator.to_f32()),
    )?;
    Ok(())
}

pub fn simulate(args: &RunArgs) -> CmdResult {
    let s = Settings::resolve(args)?;
    let (land, init) = load_landscape(&s)?;
    let params = checked_params(&s)?;
    let steps: usize = s.get("steps")?;
    let seed: u64 = s.get("seed")?;
    let snapshot_every: usize = s.get("snapshot_every")?;
    let options = RunOptions {
        kernel: s.kernel()?,
        snapshot_every: Some(snapshot_every),
        ..RunOptions::default()
    };
    let out = with_threads(&s, || {
        Ok(run_simulation(
            &land, &params, &init, steps, seed, &options,
        )?)
    })?;

    let dir = out_dir(&s)?;
    for snap in &out.snapshots {
        write_snapshot(
            snap,
            &land,
            dir.join(format!("snapshot_{:04}.ppm", snap.step)),
        )?;
    }
    write_snapshot(&out.final_state, &land, dir.join("final.ppm"))?;
    write_state(&dir, "final", &out.final_state)?;
    write_series_csv(&out.series, None, dir.join("series.csv"))?;

    let mut manifest = s.kv.clone();
    manifest.set("command", "simulate");
    manifest.set("final.step", out.final_state.step);
    manifest.set("final.burning", out.final_state.burning_count());
    manifest.set("final.burned", out.final_state.burned_count());
    manifest.write(dir.join("manifest.txt"))?;
    Ok(())
}

fn mean_std(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, var.sqrt())
}

fn record_evaluation(kv: &mut KeyValues, prefix: &str, e: &Evaluation) {
    let (j, js) = mean_std(e.jaccard.iter().copied());
    let (m, ms) = mean_std(e.manhattan.iter().map(|&m| m as f64));
    kv.set(format!("{prefix}.jaccard_mean"), j);
    kv.set(format!("{prefix}.jaccard_std"), js);
    kv.set(format!("{prefix}.manhattan_mean"), m);
    kv.set(format!("{prefix}.manhattan_std"), ms);
}

fn metrics_csv(result: &firegrad_core::CalibrationResult) -> String {
    let mut csv = String::from(
        "epoch,iteration,seed,loss,bce,mse,jaccard,manhattan,affected,c1,c2,a,p_h,grad_c1,grad_c2,grad_a,grad_p_h\n",
    );
    for r in &result.records {
        let p = &r.params;
        let g = &r.gradient;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.epoch,
            r.iteration,
            r.seed,
            r.loss.total,
            r.loss.bce_term,
            r.loss.mse_term,
            r.jaccard,
            r.manhattan,
            r.affected,
            p.c1,
            p.c2,
            p.a,
            p.p_h,
            g.c1,
            g.c2,
            g.a,
            g.p_h
        );
    }
    csv
}

pub fn calibrate(args: &RunArgs) -> CmdResult {
    let s = Settings::resolve(args)?;
    let obs_dir = s
        .str("observations")
        .ok_or_else(|| Failure::input("calibrate needs --observations DIR"))?;
    let mut schedule = read_schedule(obs_dir)?;
    if s.is_explicit("steps_update_interval") {
        schedule.steps_update_interval = s.get("steps_update_interval")?;
    }
    if schedule.steps_update_interval == 0 {
        return Err(Failure::input("`steps_update_interval` must be at least 1"));
    }
    let (land, init) = load_landscape(&s)?;
    let start = checked_params(&s)?;
    let kernel = s.kernel()?;
    let base_seed: u64 = s.get("seed")?;
    let eval_runs: usize = s.get("eval_runs")?;
    let config = CalibrationConfig {
        max_epochs: s.get("max_epochs")?,
        rings: s.rings()?,
        optimizer: AdamWConfig {
            learning_rate: s.get("lr")?,
            ..AdamWConfig::default()
        },
        base_seed,
        seed_policy: s.seed_policy()?,
        kernel,
        final_eval_runs: eval_runs,
    };
    let (result, initial) = with_threads(&s, || {
        let result = run_calibration(&land, &init, &schedule, &start, &config)?;
        let initial = match &result.final_evaluation {
            Some(_) => Some(evaluate(
                &land,
                &init,
                &schedule,
                &start,
                &evaluation_seeds(base_seed, eval_runs),
                &kernel,
            )?),
            None => None,
        };
        Ok((result, initial))
    })?;

    let dir = out_dir(&s)?;
    write_params(dir.join("best_params.txt"), &result.best_params)?;
    write_params(dir.join("final_params.txt"), &result.final_params)?;
    let csv_path = dir.join("metrics.csv");
    fs::write(&csv_path, metrics_csv(&result)).map_err(|e| io_failure(&csv_path, e))?;

    let mut manifest = s.kv.clone();
    manifest.set("command", "calibrate");
    for (k, v) in manifest_to_kv(&result.manifest).iter() {
        manifest.set(format!("run.{k}"), v);
    }
    manifest.set("best_loss", result.best_loss);
    if let (Some(before), Some(after)) = (&initial, &result.final_evaluation) {
        record_evaluation(&mut manifest, "initial", before);
        record_evaluation(&mut manifest, "calibrated", after);
    }
    for (i, d) in result.divergences.iter().enumerate() {
        eprintln!(
            "firegrad: warning: divergence at epoch {} iteration {}: {}; continuing from the last finite parameters",
            d.epoch, d.iteration, d.reason
        );
        manifest.set(
            format!("divergence.{i}"),
            format!(
                "epoch={} iteration={} reason={}",
                d.epoch, d.iteration, d.reason
            ),
        );
    }
    manifest.write(dir.join("manifest.txt"))?;
    Ok(())
}

pub fn make_twin(args: &RunArgs) -> CmdResult {
    let s = Settings::resolve(args)?;
    let (land, init) = load_landscape(&s)?;
    let truth = checked_params(&s)?;
    let interval = if s.is_explicit("steps_update_interval") {
        s.get("steps_update_interval")?
    } else {
        DEFAULT_TWIN_INTERVAL
    };
    if interval == 0 {
        return Err(Failure::input("`steps_update_interval` must be at least 1"));
    }
    let count: usize = s.get("count")?;
    if count == 0 {
        return Err(Failure::input("`count` must be at least 1"));
    }
    let seed: u64 = s.get("seed")?;
    let kernel = s.kernel()?;
    let schedule = with_threads(&s, || {
        Ok(build_twin_schedule(
            &land, &init, &truth, interval, count, seed, &kernel,
        )?)
    })?;

    let dir = out_dir(&s)?;
    let mut meta = KeyValues::new();
    if let Some(kind) = s.str("synthetic") {
        meta.set("synthetic", kind);
    }
    write_bundle(
        dir.join("landscape"),
        &LandscapeBundle {
            landscape: land,
            ignition: Some(init),
            metadata: meta,
        },
    )?;
    write_schedule(dir.join("observations"), &schedule)?;
    write_params(dir.join("truth.txt"), &truth)?;
    let mut manifest = s.kv.clone();
    manifest.set("command", "make-twin");
    manifest.set("steps_update_interval", interval);
    manifest.write(dir.join("manifest.txt"))?;
    Ok(())
}

pub fn metrics(args: &MetricsArgs) -> CmdResult {
    if args.pred.len() != args.target.len() {
        return Err(Failure::input(format!(
            "{} --pred grids but {} --target grids",
            args.pred.len(),
            args.target.len()
        )));
    }
    let mut pred_counts = Vec::with_capacity(args.pred.len());
    let mut target_counts = Vec::with_capacity(args.pred.len());
    let mut jaccard = f64::NAN;
    for (p, t) in args.pred.iter().zip(&args.target) {
        let pred = read_bool_grid(p)?;
        let target = read_bool_grid(t)?;
        jaccard = jaccard_index(&pred, &target)
            .map_err(|e| Failure::input(format!("{} vs {}: {e}", p.display(), t.display())))?;
        pred_counts.push(pred.count_true());
        target_counts.push(target.count_true());
    }
    let manhattan = manhattan_distance(&pred_counts, &target_counts)?;
    println!("jaccard={jaccard}");
    println!("manhattan={manhattan}");
    Ok(())
}

/// Order-sensitive digest of a fire state.
fn state_hash(state: &FireState) -> u64 {
    let mut h = DefaultHasher::new();
    state.burning.as_slice().hash(&mut h);
    state.burned.as_slice().hash(&mut h);
    for v in state.accumulator.as_slice() {
        v.to_bits().hash(&mut h);
    }
    h.finish()
}

fn can_allocate(size: usize) -> bool {
    size.checked_mul(size)
        .and_then(|cells| cells.checked_mul(BYTES_PER_CELL))
        .is_some_and(|bytes| Vec::<u8>::new().try_reserve_exact(bytes).is_ok())
}

pub fn bench(args: &BenchArgs) -> CmdResult {
    if args.sizes.is_empty() || args.threads.is_empty() {
        return Err(Failure::input(
            "bench needs at least one size and one thread count",
        ));
    }
    let params = ModelParams::default();
    let mut csv = String::from("size,threads,seconds\n");
    let mut hashes = String::from("size,threads,hash\n");
    for &size in &args.sizes {
        if size == 0 || !can_allocate(size) {
            eprintln!("firegrad: warning: size {size}: cannot allocate the landscape, skipped");
            for &threads in &args.threads {
                let _ = writeln!(csv, "{size},{threads},error");
            }
            continue;
        }
        let land = default_landscape(SyntheticKind::Flat, size)?;
        let init = center_block(size, size, IGNITION_SIDE);
        let options = RunOptions::default();
        for &threads in &args.threads {
            let pool = thread_pool(threads)?;
            let (seconds, hash) = pool.install(|| -> Result<(f64, u64), Failure> {
                run_simulation(
                    &land,
                    &params,
                    &init,
                    WARMUP_STEPS.min(args.steps),
                    args.seed,
                    &options,
                )?;
                let start = Instant::now();
                let out = run_simulation(&land, &params, &init, args.steps, args.seed, &options)?;
                Ok((start.elapsed().as_secs_f64(), state_hash(&out.final_state)))
            })?;
            let _ = writeln!(csv, "{size},{threads},{seconds:.6}");
            let _ = writeln!(hashes, "{size},{threads},{hash:016x}");
        }
    }
    match &args.out {
        Some(path) => fs::write(path, &csv).map_err(|e| io_failure(path, e))?,
        None => print!("{csv}"),
    }
    if let Some(path) = &args.hashes {
        fs::write(path, &hashes).map_err(|e| io_failure(path, e))?;
    }
    Ok(())
}

//! Layered run configuration: built-in defaults, then a key=value config
//! file, then command-line flags.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use firegrad_core::io::text::{params_from_kv, params_to_kv, KeyValues};
use firegrad_core::io::SlopeSign;
use firegrad_core::{
    Error, FactorSite, KernelOptions, ModelParams, NormalizationConstant, SeedPolicy, SlopeUnits,
    StepRingsConfig,
};

use crate::Failure;

pub const THREADS_ENV: &str = "FIREGRAD_THREADS";

/// Keys accepted in config files, in manifest order.
pub const KEYS: [&str; 26] = [
    "landscape",
    "synthetic",
    "size",
    "observations",
    "c1",
    "c2",
    "a",
    "p_h",
    "p_continue",
    "steps",
    "seed",
    "rings",
    "lr",
    "max_epochs",
    "seed_policy",
    "eval_runs",
    "steps_update_interval",
    "count",
    "snapshot_every",
    "out",
    "threads",
    "factor_site",
    "slope_sign",
    "slope_units",
    "params",
    "config",
];

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// key=value file with defaults for any of these flags
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Landscape bundle directory
    #[arg(long, conflicts_with = "synthetic")]
    pub landscape: Option<PathBuf>,
    /// Synthetic landscape: flat, hill, valley or random:<seed>
    #[arg(long)]
    pub synthetic: Option<String>,
    /// Side length of synthetic landscapes
    #[arg(long)]
    pub size: Option<usize>,
    /// Observation schedule directory (calibrate)
    #[arg(long)]
    pub observations: Option<PathBuf>,
    /// Parameter file with c1, c2, a, p_h and p_continue
    #[arg(long)]
    pub params: Option<PathBuf>,
    #[arg(long)]
    pub c1: Option<f64>,
    #[arg(long)]
    pub c2: Option<f64>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long = "p-h")]
    pub p_h: Option<f64>,
    #[arg(long = "p-continue")]
    pub p_continue: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Step rings as first,between,last
    #[arg(long)]
    pub rings: Option<String>,
    /// AdamW learning rate
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    /// per-epoch or fixed
    #[arg(long)]
    pub seed_policy: Option<String>,
    /// Fresh-seed runs scoring the calibrated parameters
    #[arg(long)]
    pub eval_runs: Option<usize>,
    #[arg(long)]
    pub steps_update_interval: Option<usize>,
    /// Number of observations (make-twin)
    #[arg(long)]
    pub count: Option<usize>,
    /// Write a snapshot every N steps (0 disables)
    #[arg(long)]
    pub snapshot_every: Option<usize>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads [default: $FIREGRAD_THREADS or available parallelism]
    #[arg(long)]
    pub threads: Option<usize>,
    /// Where vegetation and density are read: target or source
    #[arg(long)]
    pub factor_site: Option<String>,
    /// Slope orientation for altitude-derived slopes: downhill or uphill
    #[arg(long)]
    pub slope_sign: Option<String>,
    /// Units of stored slopes: degrees or radians
    #[arg(long)]
    pub slope_units: Option<String>,
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

impl RunArgs {
    fn layer(&self) -> KeyValues {
        let mut kv = KeyValues::new();
        let mut put = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                kv.set(k, v);
            }
        };
        put("config", self.config.as_deref().map(path_str));
        put("landscape", self.landscape.as_deref().map(path_str));
        put("synthetic", self.synthetic.clone());
        put("size", self.size.map(|v| v.to_string()));
        put("observations", self.observations.as_deref().map(path_str));
        put("params", self.params.as_deref().map(path_str));
        put("c1", self.c1.map(|v| v.to_string()));
        put("c2", self.c2.map(|v| v.to_string()));
        put("a", self.a.map(|v| v.to_string()));
        put("p_h", self.p_h.map(|v| v.to_string()));
        put("p_continue", self.p_continue.map(|v| v.to_string()));
        put("steps", self.steps.map(|v| v.to_string()));
        put("seed", self.seed.map(|v| v.to_string()));
        put("rings", self.rings.clone());
        put("lr", self.lr.map(|v| v.to_string()));
        put("max_epochs", self.max_epochs.map(|v| v.to_string()));
        put("seed_policy", self.seed_policy.clone());
        put("eval_runs", self.eval_runs.map(|v| v.to_string()));
        put(
            "steps_update_interval",
            self.steps_update_interval.map(|v| v.to_string()),
        );
        put("count", self.count.map(|v| v.to_string()));
        put("snapshot_every", self.snapshot_every.map(|v| v.to_string()));
        put("out", self.out.as_deref().map(path_str));
        put("threads", self.threads.map(|v| v.to_string()));
        put("factor_site", self.factor_site.clone());
        put("slope_sign", self.slope_sign.clone());
        put("slope_units", self.slope_units.clone());
        kv
    }
}

fn defaults() -> KeyValues {
    let mut kv = KeyValues::new();
    kv.set("synthetic", "flat");
    kv.set("size", 64);
    kv.extend(&params_to_kv(&ModelParams::default()));
    kv.set("steps", 100);
    kv.set("seed", 0);
    let r = StepRingsConfig::default();
    kv.set(
        "rings",
        format!("{},{},{}", r.r_first, r.r_between, r.r_last),
    );
    kv.set("lr", firegrad_core::calibration::DEFAULT_LEARNING_RATE);
    kv.set("max_epochs", 10);
    kv.set("seed_policy", "per-epoch");
    kv.set("eval_runs", 5);
    kv.set("count", 10);
    kv.set("snapshot_every", 0);
    kv.set("out", "firegrad_out");
    let threads = std::env::var(THREADS_ENV)
        .ok()
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map_or(1, |n| n.get())
                .to_string()
        });
    kv.set("threads", threads);
    kv.set("factor_site", "target");
    kv.set("slope_sign", "downhill");
    kv.set("slope_units", "degrees");
    kv
}

/// Expands a `params` file into its five keys; explicit keys in the same
/// layer win over the file.
fn expand_params(layer: &mut KeyValues) -> Result<(), Failure> {
    if let Some(path) = layer.get("params").map(PathBuf::from) {
        let from_file = firegrad_core::io::read_params(&path)?;
        let mut merged = params_to_kv(&from_file);
        let explicit = params_from_kv(layer, &from_file)?;
        merged.extend(&params_to_kv(&explicit));
        layer.extend(&merged);
    }
    Ok(())
}

/// The effective configuration with the keys that were set explicitly.
pub struct Settings {
    pub kv: KeyValues,
    explicit: Vec<String>,
}

impl Settings {
    pub fn resolve(args: &RunArgs) -> Result<Self, Failure> {
        let mut flags = args.layer();
        let mut file = match &args.config {
            Some(path) => KeyValues::read(path)?,
            None => KeyValues::new(),
        };
        if let Some((k, _)) = file
            .iter()
            .find(|(k, _)| !KEYS.contains(k) || *k == "config")
        {
            return Err(Failure::input(format!(
                "unknown key `{k}` in config file (accepted: {})",
                KEYS[..KEYS.len() - 1].join(", ")
            )));
        }
        if file.get("landscape").is_some() && file.get("synthetic").is_some() {
            return Err(Failure::input(
                "config file sets both `landscape` and `synthetic`",
            ));
        }
        expand_params(&mut file)?;
        expand_params(&mut flags)?;

        let mut explicit: Vec<String> = file
            .iter()
            .chain(flags.iter())
            .map(|(k, _)| k.to_string())
            .collect();
        explicit.sort();
        explicit.dedup();

        let mut kv = KeyValues::new();
        let source_layers = [&flags, &file];
        // The landscape source is one choice: the highest layer naming one wins.
        let source = source_layers
            .iter()
            .find_map(|l| {
                l.get("landscape")
                    .map(|v| ("landscape", v.to_string()))
                    .or_else(|| l.get("synthetic").map(|v| ("synthetic", v.to_string())))
            })
            .unwrap_or(("synthetic", "flat".to_string()));
        for layer in [&defaults(), &file, &flags] {
            for (k, v) in layer.iter() {
                if k != "landscape" && k != "synthetic" {
                    kv.set(k, v);
                }
            }
        }
        let mut ordered = KeyValues::new();
        ordered.set(source.0, source.1);
        for key in KEYS {
            if let Some(v) = kv.get(key) {
                ordered.set(key, v);
            }
        }
        Ok(Self {
            kv: ordered,
            explicit,
        })
    }

    pub fn is_explicit(&self, key: &str) -> bool {
        self.explicit.iter().any(|k| k == key)
    }

    pub fn str(&self, key: &str) -> Option<&str> {
        self.kv.get(key)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, Failure> {
        let raw = self
            .kv
            .get(key)
            .ok_or_else(|| Failure::input(format!("missing setting `{key}`")))?;
        raw.parse()
            .map_err(|_| Failure::input(format!("bad value for `{key}`: {raw:?}")))
    }

    pub fn params(&self) -> Result<ModelParams, Failure> {
        Ok(params_from_kv(&self.kv, &ModelParams::default())?)
    }

    pub fn rings(&self) -> Result<StepRingsConfig, Failure> {
        let raw = self.str("rings").unwrap_or_default();
        let parts: Vec<usize> = raw
            .split(',')
            .map(|s| s.trim().parse())
            .collect::<Result<_, _>>()
            .map_err(|_| {
                Failure::input(format!(
                    "bad value for `rings`: {raw:?} (expected first,between,last)"
                ))
            })?;
        match parts[..] {
            [f, b, l] => Ok(StepRingsConfig::new(f, b, l)),
            _ => Err(Failure::input(format!(
                "bad value for `rings`: {raw:?} (expected first,between,last)"
            ))),
        }
    }

    pub fn seed_policy(&self) -> Result<SeedPolicy, Failure> {
        match self.str("seed_policy") {
            Some("per-epoch") => Ok(SeedPolicy::PerEpoch),
            Some("fixed") => Ok(SeedPolicy::Fixed),
            other => Err(Failure::input(format!(
                "bad value for `seed_policy`: {other:?} (per-epoch or fixed)"
            ))),
        }
    }

    pub fn slope_sign(&self) -> Result<SlopeSign, Failure> {
        match self.str("slope_sign") {
            Some("downhill") => Ok(SlopeSign::DownhillPositive),
            Some("uphill") => Ok(SlopeSign::UphillPositive),
            other => Err(Failure::input(format!(
                "bad value for `slope_sign`: {other:?} (downhill or uphill)"
            ))),
        }
    }

    pub fn kernel(&self) -> Result<KernelOptions, Failure> {
        let factor_site = match self.str("factor_site") {
            Some("target") => FactorSite::Target,
            Some("source") => FactorSite::Source,
            other => {
                return Err(Failure::input(format!(
                    "bad value for `factor_site`: {other:?} (target or source)"
                )))
            }
        };
        let slope_units = match self.str("slope_units") {
            Some("degrees") => SlopeUnits::Degrees,
            Some("radians") => SlopeUnits::Radians,
            other => {
                return Err(Failure::input(format!(
                    "bad value for `slope_units`: {other:?} (degrees or radians)"
                )))
            }
        };
        Ok(KernelOptions {
            normalization: NormalizationConstant::default(),
            factor_site,
            slope_units,
        })
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::from_core(e)
    }
}

//! `key=value` text records: parameter files, run manifests, bundle
//! metadata.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{ModelParams, RunManifest};

/// Ordered `key=value` pairs. Lines starting with `#` and blank lines are
/// ignored on parse.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    entries: Vec<(String, String)>,
}

impl KeyValues {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets `key`, replacing an existing value in place.
    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        let key = key.into();
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key, value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::Parse(format!("missing key `{key}`")))
    }

    pub fn parse_value<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::Parse(format!("bad value for `{key}`: {v:?}")))
            })
            .transpose()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn extend(&mut self, other: &KeyValues) {
        for (k, v) in other.iter() {
            self.set(k, v);
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = Self::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value", n + 1)))?;
            kv.set(k.trim(), v.trim());
        }
        Ok(kv)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        Self::parse(&text)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.render())?;
        Ok(())
    }
}

pub fn params_to_kv(p: &ModelParams) -> KeyValues {
    let mut kv = KeyValues::new();
    kv.set("c1", p.c1);
    kv.set("c2", p.c2);
    kv.set("a", p.a);
    kv.set("p_h", p.p_h);
    kv.set("p_continue", p.p_continue);
    kv
}

/// Reads the five parameters; missing keys fall back to `defaults`.
pub fn params_from_kv(kv: &KeyValues, defaults: &ModelParams) -> Result<ModelParams> {
    Ok(ModelParams {
        c1: kv.parse_value("c1")?.unwrap_or(defaults.c1),
        c2: kv.parse_value("c2")?.unwrap_or(defaults.c2),
        a: kv.parse_value("a")?.unwrap_or(defaults.a),
        p_h: kv.parse_value("p_h")?.unwrap_or(defaults.p_h),
        p_continue: kv.parse_value("p_continue")?.unwrap_or(defaults.p_continue),
    })
}

pub fn write_params(path: impl AsRef<Path>, p: &ModelParams) -> Result<()> {
    params_to_kv(p).write(path)
}

pub fn read_params(path: impl AsRef<Path>) -> Result<ModelParams> {
    let kv = KeyValues::read(path)?;
    for key in ["c1", "c2", "a", "p_h", "p_continue"] {
        kv.require(key)?;
    }
    params_from_kv(&kv, &ModelParams::default())
}

pub fn manifest_to_kv(m: &RunManifest) -> KeyValues {
    let mut kv = KeyValues::new();
    kv.set("base_seed", m.base_seed);
    kv.set(
        "epoch_seeds",
        m.epoch_seeds
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(","),
    );
    kv.set("steps_update_interval", m.steps_update_interval);
    kv.set("max_epochs", m.max_epochs);
    kv.set("max_iterations", m.max_iterations);
    kv.set("learning_rate", m.learning_rate);
    for snap in &m.trajectory {
        let p = &snap.params;
        kv.set(
            format!("trajectory.{}.{}", snap.epoch, snap.iteration),
            format!("{},{},{},{},{}", p.c1, p.c2, p.a, p.p_h, p.p_continue),
        );
    }
    kv
}

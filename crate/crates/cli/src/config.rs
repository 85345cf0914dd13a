//! `key = value` configuration with layered overrides: flag > file > default.

use std::fmt::Display;
use std::str::FromStr;

use crate::error::{LabError, LabResult};

/// Ordered `(key, value)` pairs from one configuration layer.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Layer {
    pub pairs: Vec<(String, String)>,
}

impl Layer {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> LabResult<Self> {
        let mut pairs = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| LabError::config(format!("line {}: expected key = value, got {raw:?}", n + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(Layer { pairs })
    }

    /// Parses `key=value` overrides given on the command line.
    pub fn from_overrides<S: AsRef<str>>(items: &[S]) -> LabResult<Self> {
        let mut pairs = Vec::new();
        for item in items {
            let item = item.as_ref();
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| LabError::config(format!("override {item:?} is not key=value")))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(Layer { pairs })
    }

    pub fn push(&mut self, key: &str, value: impl Display) {
        self.pairs.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.pairs.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Reduced,
    Full,
}

impl FromStr for Preset {
    type Err = LabError;

    fn from_str(s: &str) -> LabResult<Self> {
        match s {
            "reduced" => Ok(Preset::Reduced),
            "full" => Ok(Preset::Full),
            _ => Err(LabError::config(format!("preset must be reduced or full, got {s:?}"))),
        }
    }
}

impl Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Preset::Reduced => "reduced",
            Preset::Full => "full",
        })
    }
}

/// An experiment's settings, built from defaults and then overridden key by key.
pub trait ExperimentConfig: Sized + Clone {
    const NAME: &'static str;

    fn defaults(preset: Preset) -> Self;

    fn set(&mut self, key: &str, value: &str) -> LabResult<()>;

    /// Every setting in canonical order, as written into artifacts.
    fn pairs(&self) -> Vec<(&'static str, String)>;

    fn validate(&self) -> LabResult<()>;

    fn canonical(&self) -> String {
        self.pairs().iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

/// Applies the layers in order (later wins) over the defaults of the
/// preset named by the highest-priority layer that sets one.
pub fn load<C: ExperimentConfig>(layers: &[&Layer]) -> LabResult<C> {
    let preset = layers
        .iter()
        .rev()
        .find_map(|l| l.get("preset"))
        .map(str::parse)
        .transpose()?
        .unwrap_or(Preset::Reduced);
    let mut cfg = C::defaults(preset);
    for layer in layers {
        for (k, v) in &layer.pairs {
            if k != "preset" {
                cfg.set(k, v)?;
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_value<T: FromStr>(key: &str, value: &str) -> LabResult<T>
where
    T::Err: Display,
{
    value
        .parse()
        .map_err(|e| LabError::config(format!("{key}: cannot parse {value:?}: {e}")))
}

pub fn parse_list<T: FromStr>(key: &str, value: &str) -> LabResult<Vec<T>>
where
    T::Err: Display,
{
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| parse_value(key, v.trim())).collect()
}

pub fn join<T: Display>(items: &[T]) -> String {
    items.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

pub fn unknown_key(experiment: &str, key: &str) -> LabError {
    LabError::config(format!("unknown {experiment} setting {key:?}"))
}

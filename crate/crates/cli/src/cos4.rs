//! Depth comparison on `cos(4x)`: best-of-restarts test RMSE per architecture.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use compo_approx::networks::{Architecture, ParamCount, DEFAULT_DELTA};
use compo_approx::targets::cos4;
use compo_approx::training::{best_of_restarts, TrainConfig, TrainError};
use compo_approx::Samples;
use rayon::prelude::*;

use crate::artifacts::{fmt_f64, Artifacts, Table};
use crate::config::{join, parse_list, parse_value, unknown_key, ExperimentConfig, Preset};
use crate::error::{LabError, LabResult};

/// Offset from the master seed to the test-set generator seed.
pub const TEST_SEED_OFFSET: u64 = 1_000_000;

/// `depth x width`: `depth` hidden layers of `width` units.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Arch {
    pub depth: usize,
    pub width: usize,
}

impl FromStr for Arch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (d, w) = s.split_once('x').ok_or_else(|| format!("expected DEPTHxWIDTH, got {s:?}"))?;
        let depth = d.trim().parse().map_err(|e| format!("{e}"))?;
        let width = w.trim().parse().map_err(|e| format!("{e}"))?;
        Ok(Arch { depth, width })
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.depth, self.width)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BatchNormMode {
    /// Batch normalization for two or more hidden layers.
    Auto,
    On,
    Off,
}

impl FromStr for BatchNormMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auto" => Ok(BatchNormMode::Auto),
            "on" => Ok(BatchNormMode::On),
            "off" => Ok(BatchNormMode::Off),
            _ => Err(format!("expected auto, on or off, got {s:?}")),
        }
    }
}

impl fmt::Display for BatchNormMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BatchNormMode::Auto => "auto",
            BatchNormMode::On => "on",
            BatchNormMode::Off => "off",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cos4Config {
    pub preset: Preset,
    pub seed: u64,
    pub archs: Vec<Arch>,
    pub train_samples: usize,
    pub test_samples: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub restarts: usize,
    pub batchnorm: BatchNormMode,
    pub delta: f64,
    pub traces: bool,
}

fn archs(list: &[(usize, usize)]) -> Vec<Arch> {
    list.iter().map(|&(depth, width)| Arch { depth, width }).collect()
}

impl ExperimentConfig for Cos4Config {
    const NAME: &'static str = "cos4";

    fn defaults(preset: Preset) -> Self {
        match preset {
            Preset::Reduced => Cos4Config {
                preset,
                seed: 0,
                archs: archs(&[(1, 24), (2, 12)]),
                train_samples: 6_000,
                test_samples: 6_000,
                epochs: 200,
                batch_size: 600,
                learning_rate: 0.01,
                momentum: 0.9,
                restarts: 5,
                batchnorm: BatchNormMode::Auto,
                delta: DEFAULT_DELTA,
                traces: false,
            },
            Preset::Full => Cos4Config {
                preset,
                archs: archs(&[
                    (1, 24),
                    (1, 48),
                    (1, 72),
                    (1, 128),
                    (1, 256),
                    (2, 12),
                    (2, 24),
                    (2, 36),
                    (3, 8),
                    (3, 16),
                    (3, 24),
                ]),
                train_samples: 60_000,
                test_samples: 60_000,
                epochs: 2_000,
                batch_size: 3_000,
                learning_rate: 1e-4,
                ..Self::defaults(Preset::Reduced)
            },
        }
    }

    fn set(&mut self, key: &str, value: &str) -> LabResult<()> {
        match key {
            "seed" => self.seed = parse_value(key, value)?,
            "archs" => self.archs = parse_list(key, value)?,
            "train_samples" => self.train_samples = parse_value(key, value)?,
            "test_samples" => self.test_samples = parse_value(key, value)?,
            "epochs" => self.epochs = parse_value(key, value)?,
            "batch_size" => self.batch_size = parse_value(key, value)?,
            "learning_rate" => self.learning_rate = parse_value(key, value)?,
            "momentum" => self.momentum = parse_value(key, value)?,
            "restarts" => self.restarts = parse_value(key, value)?,
            "batchnorm" => self.batchnorm = parse_value(key, value)?,
            "delta" => self.delta = parse_value(key, value)?,
            "traces" => self.traces = parse_value(key, value)?,
            _ => return Err(unknown_key(Self::NAME, key)),
        }
        Ok(())
    }

    fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("experiment", Self::NAME.into()),
            ("preset", self.preset.to_string()),
            ("seed", self.seed.to_string()),
            ("archs", join(&self.archs)),
            ("train_samples", self.train_samples.to_string()),
            ("test_samples", self.test_samples.to_string()),
            ("epochs", self.epochs.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("learning_rate", self.learning_rate.to_string()),
            ("momentum", self.momentum.to_string()),
            ("restarts", self.restarts.to_string()),
            ("batchnorm", self.batchnorm.to_string()),
            ("delta", self.delta.to_string()),
            ("traces", self.traces.to_string()),
        ]
    }

    fn validate(&self) -> LabResult<()> {
        if self.archs.is_empty() {
            return Err(LabError::config("cos4: the architecture list is empty"));
        }
        if let Some(a) = self.archs.iter().find(|a| a.depth == 0 || a.width == 0) {
            return Err(LabError::config(format!("cos4: architecture {a} has no units")));
        }
        if self.test_samples == 0 {
            return Err(LabError::config("cos4: test_samples must be positive"));
        }
        self.train_config(self.seed).validate(self.train_samples)?;
        Ok(())
    }
}

impl Cos4Config {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            batch_size: self.batch_size,
            epochs: self.epochs,
            restarts: self.restarts,
            seed,
            test_every: self.traces.then_some(10),
        }
    }

    pub fn architecture(&self, arch: Arch) -> Architecture {
        let mut dims = vec![1];
        dims.extend(std::iter::repeat_n(arch.width, arch.depth));
        dims.push(1);
        let batchnorm = match self.batchnorm {
            BatchNormMode::Auto => arch.depth >= 2,
            BatchNormMode::On => true,
            BatchNormMode::Off => false,
        };
        Architecture::Mlp {
            dims,
            batchnorm,
            delta: self.delta,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cos4Row {
    pub arch: Arch,
    pub batchnorm: bool,
    pub units: usize,
    pub param_count: usize,
    pub best_seed: Option<u64>,
    pub best_test_rmse: Option<f64>,
    pub best_train_rmse: Option<f64>,
    pub diverged_restarts: usize,
    pub wall_seconds: f64,
}

impl Cos4Row {
    pub fn failed(&self) -> bool {
        self.best_test_rmse.is_none()
    }
}

#[derive(Clone, Debug)]
pub struct Cos4Outcome {
    pub rows: Vec<Cos4Row>,
    pub artifacts: Artifacts,
}

pub const CSV_HEADER: [&str; 12] = [
    "depth",
    "width_per_layer",
    "units",
    "param_count",
    "batchnorm",
    "seed",
    "surrogate",
    "best_restart_seed",
    "best_test_rmse",
    "best_train_rmse",
    "diverged_restarts",
    "failed",
];

/// Square root of the variance of `cos(4x)` under the uniform distribution.
pub const CONSTANT_BASELINE_RMSE: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Choices not fixed by the configuration keys, recorded in each manifest.
pub const TRAINING_POLICY: &str = "glorot-uniform weights, zero biases, reshuffle every epoch (natural order when batch >= samples), \
batch norm after each hidden activation but the last, eps 1e-5, running-stat momentum 0.1, unbiased running variance at inference";

pub fn run_cos4(cfg: &Cos4Config) -> LabResult<Cos4Outcome> {
    cfg.validate()?;
    let target = cos4();
    let domain = target.domain().clone();
    let train = Samples::uniform(&domain, cfg.train_samples, cfg.seed, &target)?;
    let test = Samples::uniform(&domain, cfg.test_samples, cfg.seed.wrapping_add(TEST_SEED_OFFSET), &target)?;
    let train_cfg = cfg.train_config(cfg.seed);
    let surrogate = format!("sgd_best_of_{}", cfg.restarts);

    let results: Vec<LabResult<(Cos4Row, Vec<(String, String)>)>> = cfg
        .archs
        .par_iter()
        .map(|&arch| {
            let started = Instant::now();
            let architecture = cfg.architecture(arch);
            let net = compo_approx::networks::init_network(&architecture, cfg.seed)?;
            let batchnorm = matches!(architecture, Architecture::Mlp { batchnorm: true, .. });
            let mut row = Cos4Row {
                arch,
                batchnorm,
                units: arch.depth * arch.width,
                param_count: net.param_count(),
                best_seed: None,
                best_test_rmse: None,
                best_train_rmse: None,
                diverged_restarts: cfg.restarts,
                wall_seconds: 0.0,
            };
            let mut traces = Vec::new();
            match best_of_restarts(&architecture, &train, &train_cfg, Some(&test)) {
                Ok(outcome) => {
                    let best = outcome.best_report();
                    row.best_seed = Some(best.seed);
                    row.best_test_rmse = best.final_test_mse.map(f64::sqrt);
                    row.best_train_rmse = Some(best.final_train_mse.sqrt());
                    row.diverged_restarts = outcome.runs.iter().filter(|r| r.is_err()).count();
                    if cfg.traces {
                        for run in outcome.runs.iter().flatten() {
                            traces.push((format!("traces/cos4_{arch}_seed{}.jsonl", run.seed), run.to_jsonl()));
                        }
                    }
                }
                Err(TrainError::AllDiverged(_)) => {}
                Err(e) => return Err(e.into()),
            }
            row.wall_seconds = started.elapsed().as_secs_f64();
            Ok((row, traces))
        })
        .collect();

    let mut table = Table::new(&CSV_HEADER);
    let mut artifacts = Artifacts::default();
    let mut rows = Vec::new();
    let mut trace_files = Vec::new();
    for r in results {
        let (row, traces) = r?;
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        table.push(vec![
            row.arch.depth.to_string(),
            row.arch.width.to_string(),
            row.units.to_string(),
            row.param_count.to_string(),
            row.batchnorm.to_string(),
            cfg.seed.to_string(),
            surrogate.clone(),
            row.best_seed.map(|s| s.to_string()).unwrap_or_default(),
            opt(row.best_test_rmse),
            opt(row.best_train_rmse),
            row.diverged_restarts.to_string(),
            row.failed().to_string(),
        ]);
        artifacts.note(format!("wall_seconds[{}]", row.arch), format!("{:.3}", row.wall_seconds));
        trace_files.extend(traces);
        rows.push(row);
    }
    artifacts.add("cos4.csv", table.render(&cfg.canonical()));
    artifacts.note("training_policy", TRAINING_POLICY);
    for (name, text) in trace_files {
        artifacts.add(name, text);
    }
    artifacts.seeds = (0..cfg.restarts as u64).map(|r| cfg.seed.wrapping_add(r)).collect();
    Ok(Cos4Outcome { rows, artifacts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{load, Layer};

    fn tiny(seed: u64) -> Cos4Config {
        Cos4Config {
            seed,
            train_samples: 400,
            test_samples: 400,
            epochs: 3,
            batch_size: 100,
            restarts: 2,
            ..Cos4Config::defaults(Preset::Reduced)
        }
    }

    #[test]
    fn empty_architecture_list_is_rejected() {
        let flags = Layer::from_overrides(&["archs="]).unwrap();
        assert!(matches!(load::<Cos4Config>(&[&flags]), Err(LabError::Config(_))));
    }

    #[test]
    fn arch_parsing() {
        assert_eq!("2x12".parse::<Arch>().unwrap(), Arch { depth: 2, width: 12 });
        assert!("12".parse::<Arch>().is_err());
        let cfg = Cos4Config::defaults(Preset::Reduced);
        assert_eq!(
            cfg.architecture(Arch { depth: 2, width: 12 }),
            Architecture::Mlp {
                dims: vec![1, 12, 12, 1],
                batchnorm: true,
                delta: DEFAULT_DELTA
            }
        );
        assert_eq!(Cos4Config::defaults(Preset::Full).archs.len(), 11);
    }

    #[test]
    fn reruns_are_byte_identical() {
        let a = run_cos4(&tiny(3)).unwrap();
        let b = run_cos4(&tiny(3)).unwrap();
        assert_eq!(a.artifacts.files, b.artifacts.files);
        assert_eq!(a.rows.len(), 2);
        let csv = a.artifacts.file("cos4.csv").unwrap();
        assert!(csv.contains("# archs=1x24,2x12"));
        assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 3);
    }

    #[test]
    fn traces_are_written_per_restart() {
        let cfg = Cos4Config {
            traces: true,
            archs: vec![Arch { depth: 1, width: 4 }],
            ..tiny(1)
        };
        let out = run_cos4(&cfg).unwrap();
        let traces: Vec<_> = out.artifacts.files.iter().filter(|f| f.name.ends_with(".jsonl")).collect();
        assert_eq!(traces.len(), 2);
        assert_eq!(traces[0].contents.lines().count(), 3);
    }
}

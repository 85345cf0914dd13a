//! Staged construction of `Q`: a 9-unit inner stage followed by ten
//! three-unit squaring stages, against the `2^11 + 1` shallow reference.

use compo_approx::function::from_fn;
use compo_approx::metrics::{sup_norm_error, SupMethod};
use compo_approx::networks::{Architecture, Network, ShallowNet, SmoothActivation, DEFAULT_DELTA};
use compo_approx::targets::{QCoefficients, QPolynomial, Q_SQUARINGS};
use compo_approx::training::{best_of_restarts, refit_outer, TrainConfig, TrainError};
use compo_approx::{Domain, Function, Samples};

use crate::artifacts::{fmt_f64, Artifacts, Table};
use crate::config::{join, parse_list, parse_value, unknown_key, ExperimentConfig, Preset};
use crate::cos4::TEST_SEED_OFFSET;
use crate::error::{LabError, LabResult};

/// Interval on which every squaring stage is fitted and scored.
pub const SQUARING_DOMAIN: (f64, f64) = (0.0, 0.9);

const SQUARING_FIT_SAMPLES: usize = 2_001;
const SQUARING_SUP_POINTS: usize = 10_000;
const INNER_SUP_POINTS: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct QConfig {
    pub preset: Preset,
    pub seed: u64,
    pub coeffs: Vec<f64>,
    pub inner_units: usize,
    pub samples: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub restarts: usize,
    pub delta: f64,
    /// Squaring step `h` as a multiple of `delta`.
    pub step_ratio: f64,
    pub refit: bool,
    pub lambda: f64,
    /// Per-axis grid used for the end-to-end error.
    pub grid: usize,
}

impl ExperimentConfig for QConfig {
    const NAME: &'static str = "qpoly";

    fn defaults(preset: Preset) -> Self {
        let reduced = QConfig {
            preset,
            seed: 0,
            coeffs: QCoefficients::default().0.to_vec(),
            inner_units: 9,
            samples: 4_000,
            epochs: 300,
            batch_size: 200,
            learning_rate: 0.01,
            momentum: 0.9,
            restarts: 3,
            delta: DEFAULT_DELTA,
            step_ratio: 0.1,
            refit: true,
            lambda: 1e-12,
            grid: 101,
        };
        match preset {
            Preset::Reduced => reduced,
            Preset::Full => QConfig {
                samples: 20_000,
                epochs: 2_000,
                batch_size: 1_000,
                restarts: 5,
                grid: 401,
                ..reduced
            },
        }
    }

    fn set(&mut self, key: &str, value: &str) -> LabResult<()> {
        match key {
            "seed" => self.seed = parse_value(key, value)?,
            "coeffs" => self.coeffs = parse_list(key, value)?,
            "inner_units" => self.inner_units = parse_value(key, value)?,
            "samples" => self.samples = parse_value(key, value)?,
            "epochs" => self.epochs = parse_value(key, value)?,
            "batch_size" => self.batch_size = parse_value(key, value)?,
            "learning_rate" => self.learning_rate = parse_value(key, value)?,
            "momentum" => self.momentum = parse_value(key, value)?,
            "restarts" => self.restarts = parse_value(key, value)?,
            "delta" => self.delta = parse_value(key, value)?,
            "step_ratio" => self.step_ratio = parse_value(key, value)?,
            "refit" => self.refit = parse_value(key, value)?,
            "lambda" => self.lambda = parse_value(key, value)?,
            "grid" => self.grid = parse_value(key, value)?,
            _ => return Err(unknown_key(Self::NAME, key)),
        }
        Ok(())
    }

    fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("experiment", Self::NAME.into()),
            ("preset", self.preset.to_string()),
            ("seed", self.seed.to_string()),
            ("coeffs", join(&self.coeffs)),
            ("inner_units", self.inner_units.to_string()),
            ("samples", self.samples.to_string()),
            ("epochs", self.epochs.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("learning_rate", self.learning_rate.to_string()),
            ("momentum", self.momentum.to_string()),
            ("restarts", self.restarts.to_string()),
            ("delta", self.delta.to_string()),
            ("step_ratio", self.step_ratio.to_string()),
            ("refit", self.refit.to_string()),
            ("lambda", self.lambda.to_string()),
            ("grid", self.grid.to_string()),
        ]
    }

    fn validate(&self) -> LabResult<()> {
        if self.coeffs.len() != 9 {
            return Err(LabError::config(format!("qpoly: need 9 coefficients, got {}", self.coeffs.len())));
        }
        if self.inner_units == 0 {
            return Err(LabError::config("qpoly: inner_units must be positive"));
        }
        if !(self.step_ratio > 0.0 && self.step_ratio.is_finite()) {
            return Err(LabError::config("qpoly: step_ratio must be positive"));
        }
        if !(self.lambda >= 0.0) {
            return Err(LabError::config("qpoly: lambda must be nonnegative"));
        }
        if self.grid < 2 {
            return Err(LabError::config("qpoly: grid needs at least 2 points per axis"));
        }
        SmoothActivation::new(self.delta)?;
        self.train_config().validate(self.samples)?;
        Ok(())
    }
}

impl QConfig {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            momentum: self.momentum,
            batch_size: self.batch_size,
            epochs: self.epochs,
            restarts: self.restarts,
            seed: self.seed,
            test_every: None,
        }
    }

    pub fn polynomial(&self) -> LabResult<QPolynomial> {
        let mut c = [0.0; 9];
        c.copy_from_slice(&self.coeffs);
        Ok(QPolynomial::new(QCoefficients(c))?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageReport {
    /// 0 for the inner stage, `k` for the `k`-th squaring.
    pub stage: u32,
    pub units: usize,
    /// Sup error against the stage's own oracle on its fitting domain.
    pub stage_error: Option<f64>,
    /// Sup error of the composition so far against `inner^(2^k)` on the grid.
    pub cumulative_error: Option<f64>,
    pub surrogate: String,
    pub status: String,
}

#[derive(Clone, Debug)]
pub struct QOutcome {
    pub stages: Vec<StageReport>,
    pub total_units: usize,
    pub layers: usize,
    pub shallow_reference_units: usize,
    pub end_to_end_error: Option<f64>,
    pub artifacts: Artifacts,
}

/// Hidden units of a shallow network matching the staged construction.
pub fn shallow_reference_units(squarings: u32) -> usize {
    (1usize << (squarings + 1)) + 1
}

/// The squaring stage: the second-difference construction, optionally with
/// its outer weights refitted on [`SQUARING_DOMAIN`], whichever scores lower.
pub fn fit_squaring_stage(act: SmoothActivation, step_ratio: f64, refit: bool, lambda: f64) -> LabResult<(ShallowNet, f64, &'static str)> {
    let (lo, hi) = SQUARING_DOMAIN;
    let domain = Domain::new(vec![lo], vec![hi])?;
    let oracle = from_fn(1, |x| x[0] * x[0]);
    let net = ShallowNet::squaring(act, step_ratio * act.delta())?;
    let score = |n: &ShallowNet| -> LabResult<f64> {
        Ok(sup_norm_error(&oracle, n, &domain, SupMethod::Grid, SQUARING_SUP_POINTS)?.error)
    };
    let base = score(&net)?;
    if !refit {
        return Ok((net, base, "second_difference"));
    }
    let samples = Samples::from_function(&domain.grid(SQUARING_FIT_SAMPLES), &oracle)?;
    let mut refitted = net.clone();
    match refit_outer(&mut refitted, &samples, lambda) {
        Ok(()) => {
            let e = score(&refitted)?;
            if e < base {
                Ok((refitted, e, "second_difference_refit"))
            } else {
                Ok((net, base, "second_difference"))
            }
        }
        Err(_) => Ok((net, base, "second_difference")),
    }
}

pub const STAGES_HEADER: [&str; 8] = [
    "stage",
    "units",
    "stage_sup_error",
    "cumulative_sup_error",
    "surrogate",
    "seed",
    "status",
    "fit_domain",
];

pub const BUDGET_HEADER: [&str; 7] = [
    "total_units",
    "layers",
    "shallow_reference_units",
    "end_to_end_sup_error",
    "squarings",
    "seed",
    "surrogate",
];

fn train_inner(q: &QPolynomial, cfg: &QConfig) -> LabResult<Result<(ShallowNet, f64, String), String>> {
    let square = Domain::cube(2, -1.0, 1.0)?;
    let q2 = q.clone();
    let oracle = from_fn(2, move |x| q2.inner(x[0], x[1]));
    let train = Samples::uniform(&square, cfg.samples, cfg.seed, &oracle)?;
    let test = Samples::uniform(&square, cfg.samples, cfg.seed.wrapping_add(TEST_SEED_OFFSET), &oracle)?;
    let arch = Architecture::Shallow {
        input_dim: 2,
        units: cfg.inner_units,
        delta: cfg.delta,
    };
    let report = match best_of_restarts(&arch, &train, &cfg.train_config(), Some(&test)) {
        Ok(outcome) => outcome.into_best(),
        Err(TrainError::AllDiverged(k)) => return Ok(Err(format!("all {k} restarts diverged"))),
        Err(e) => return Err(e.into()),
    };
    let Network::Shallow(net) = report.network else {
        unreachable!("shallow architecture")
    };
    let score = |n: &ShallowNet| -> LabResult<f64> {
        Ok(sup_norm_error(&oracle, n, &square, SupMethod::Grid, INNER_SUP_POINTS)?.error)
    };
    let base = score(&net)?;
    let surrogate = format!("sgd_best_of_{}", cfg.restarts);
    if cfg.refit {
        let mut refitted = net.clone();
        if refit_outer(&mut refitted, &train, cfg.lambda).is_ok() {
            let e = score(&refitted)?;
            if e < base {
                return Ok(Ok((refitted, e, format!("{surrogate}_refit"))));
            }
        }
    }
    Ok(Ok((net, base, surrogate)))
}

pub fn run_q_study(cfg: &QConfig) -> LabResult<QOutcome> {
    cfg.validate()?;
    let q = cfg.polynomial()?;
    let act = SmoothActivation::new(cfg.delta)?;
    let mut stages = Vec::new();

    let inner = train_inner(&q, cfg)?;
    let (sq_net, sq_err, sq_surrogate) = fit_squaring_stage(act, cfg.step_ratio, cfg.refit, cfg.lambda)?;
    let squarings: Vec<ShallowNet> = (0..Q_SQUARINGS).map(|_| sq_net.clone()).collect();

    let mut cumulative = vec![None; Q_SQUARINGS as usize + 1];
    let mut end_to_end = None;
    if let Ok((inner_net, _, _)) = &inner {
        let grid = Domain::cube(2, -1.0, 1.0)?.grid(cfg.grid);
        let mut worst = vec![0.0f64; Q_SQUARINGS as usize + 1];
        for x in grid.iter() {
            let mut t = inner_net.eval(x)?;
            let mut exact = q.inner(x[0], x[1]);
            for k in 0..=Q_SQUARINGS as usize {
                if k > 0 {
                    t = squarings[k - 1].eval(&[t])?;
                    exact *= exact;
                }
                let e = (t - exact).abs();
                worst[k] = worst[k].max(if e.is_nan() { f64::INFINITY } else { e });
            }
        }
        cumulative = worst.into_iter().map(Some).collect();
        end_to_end = cumulative[Q_SQUARINGS as usize];
    }

    match &inner {
        Ok((net, err, surrogate)) => stages.push(StageReport {
            stage: 0,
            units: net.width(),
            stage_error: Some(*err),
            cumulative_error: cumulative[0],
            surrogate: surrogate.clone(),
            status: "ok".into(),
        }),
        Err(reason) => stages.push(StageReport {
            stage: 0,
            units: cfg.inner_units,
            stage_error: None,
            cumulative_error: None,
            surrogate: format!("sgd_best_of_{}", cfg.restarts),
            status: format!("diverged: {reason}"),
        }),
    }
    for k in 1..=Q_SQUARINGS {
        stages.push(StageReport {
            stage: k,
            units: squarings[k as usize - 1].width(),
            stage_error: Some(sq_err),
            cumulative_error: cumulative[k as usize],
            surrogate: sq_surrogate.into(),
            status: "ok".into(),
        });
    }

    let total_units: usize = stages.iter().map(|s| s.units).sum();
    let layers = stages.len();
    let shallow_reference = shallow_reference_units(Q_SQUARINGS);

    let config = cfg.canonical();
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let mut table = Table::new(&STAGES_HEADER);
    for s in &stages {
        table.push(vec![
            s.stage.to_string(),
            s.units.to_string(),
            opt(s.stage_error),
            opt(s.cumulative_error),
            s.surrogate.clone(),
            cfg.seed.to_string(),
            s.status.clone(),
            if s.stage == 0 { "[-1,1]^2".into() } else { format!("[{},{}]", SQUARING_DOMAIN.0, SQUARING_DOMAIN.1) },
        ]);
    }
    let mut budget = Table::new(&BUDGET_HEADER);
    budget.push(vec![
        total_units.to_string(),
        layers.to_string(),
        shallow_reference.to_string(),
        opt(end_to_end),
        Q_SQUARINGS.to_string(),
        cfg.seed.to_string(),
        "staged".into(),
    ]);
    let mut artifacts = Artifacts::default();
    artifacts.add("qpoly_stages.csv", table.render(&config));
    artifacts.add("qpoly_budget.csv", budget.render(&config));
    artifacts.note("inner_scale", format!("{:e}", q.inner_scale()));
    artifacts.seeds = (0..cfg.restarts as u64).map(|r| cfg.seed.wrapping_add(r)).collect();
    Ok(QOutcome {
        stages,
        total_units,
        layers,
        shallow_reference_units: shallow_reference,
        end_to_end_error: end_to_end,
        artifacts,
    })
}

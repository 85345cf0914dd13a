//! Shallow versus deep scaling studies: error against complexity, log-log
//! exponent fits and the predicted rates.

use std::fmt;
use std::str::FromStr;

use compo_approx::gaussian::{
    fit_gaussian_coeffs, fit_sample_points, fit_to_function, fit_tree_gaussian_grid, grid_centers, grid_centers_in,
    sup_box, sup_points, GaussianNet, DEFAULT_LAMBDA, MAX_FIT_CENTERS,
};
use compo_approx::metrics::{
    default_sup_sampling, predicted_exponents, sup_norm_error, sup_norm_on, tree_error, ScalingPoint,
    ScalingPrediction, ScalingRun, SupMethod,
};
use compo_approx::networks::{Architecture, ParamCount, DEFAULT_DELTA};
use compo_approx::targets::{builtin_targets, CompositionalTarget, ScalarTarget, Target};
use compo_approx::training::{best_of_restarts, train_tree_staged, TrainConfig, TrainError};
use compo_approx::{Domain, Function, PointSet, Samples};

use crate::artifacts::{with_preamble, Artifacts, Table};
use crate::config::{join, parse_list, parse_value, unknown_key, ExperimentConfig, Preset};
use crate::cos4::TEST_SEED_OFFSET;
use crate::error::{LabError, LabResult};

/// Resolution of the per-vertex sup estimates on two-dimensional domains.
const NODE_SUP_POINTS: usize = 10_000;

/// Upper bound on `samples * centers^2` for one whole-function Gaussian fit.
pub const SHALLOW_FIT_COST_CAP: f64 = 2e11;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScaleMode {
    /// Grid-center Gaussian networks fitted by ridge least squares.
    Gaussian,
    /// Smoothed-ReLU networks trained by best-of-restarts SGD.
    Sgd,
    /// Errors `scale * n^exponent`, no fitting.
    Synthetic,
}

impl FromStr for ScaleMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gaussian" => Ok(ScaleMode::Gaussian),
            "sgd" => Ok(ScaleMode::Sgd),
            "synthetic" => Ok(ScaleMode::Synthetic),
            _ => Err(format!("expected gaussian, sgd or synthetic, got {s:?}")),
        }
    }
}

impl fmt::Display for ScaleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScaleMode::Gaussian => "gaussian",
            ScaleMode::Sgd => "sgd",
            ScaleMode::Synthetic => "synthetic",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScaleConfig {
    pub preset: Preset,
    pub seed: u64,
    pub target: String,
    pub mode: ScaleMode,
    /// Grid refinements `m` in Gaussian mode, unit counts otherwise.
    pub complexities: Vec<usize>,
    /// Smoothness used for the predicted exponents.
    pub r: u32,
    pub lambda: f64,
    pub c: f64,
    pub synthetic_exponent: f64,
    pub synthetic_scale: f64,
    pub samples: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub restarts: usize,
    pub delta: f64,
}

impl ExperimentConfig for ScaleConfig {
    const NAME: &'static str = "scale";

    fn defaults(preset: Preset) -> Self {
        let reduced = ScaleConfig {
            preset,
            seed: 0,
            target: "gauss_bump(d=1)".into(),
            mode: ScaleMode::Gaussian,
            complexities: vec![1, 2, 4, 8],
            r: 2,
            lambda: DEFAULT_LAMBDA,
            c: 1.0,
            synthetic_exponent: -1.0,
            synthetic_scale: 1.0,
            samples: 2_000,
            epochs: 100,
            batch_size: 200,
            learning_rate: 0.01,
            momentum: 0.9,
            restarts: 3,
            delta: DEFAULT_DELTA,
        };
        match preset {
            Preset::Reduced => reduced,
            Preset::Full => ScaleConfig {
                complexities: vec![1, 2, 4, 8, 16],
                samples: 20_000,
                epochs: 1_000,
                batch_size: 1_000,
                restarts: 5,
                ..reduced
            },
        }
    }

    fn set(&mut self, key: &str, value: &str) -> LabResult<()> {
        match key {
            "seed" => self.seed = parse_value(key, value)?,
            "target" => self.target = value.to_string(),
            "mode" => self.mode = parse_value(key, value)?,
            "complexities" => self.complexities = parse_list(key, value)?,
            "r" => self.r = parse_value(key, value)?,
            "lambda" => self.lambda = parse_value(key, value)?,
            "c" => self.c = parse_value(key, value)?,
            "synthetic_exponent" => self.synthetic_exponent = parse_value(key, value)?,
            "synthetic_scale" => self.synthetic_scale = parse_value(key, value)?,
            "samples" => self.samples = parse_value(key, value)?,
            "epochs" => self.epochs = parse_value(key, value)?,
            "batch_size" => self.batch_size = parse_value(key, value)?,
            "learning_rate" => self.learning_rate = parse_value(key, value)?,
            "momentum" => self.momentum = parse_value(key, value)?,
            "restarts" => self.restarts = parse_value(key, value)?,
            "delta" => self.delta = parse_value(key, value)?,
            _ => return Err(unknown_key(Self::NAME, key)),
        }
        Ok(())
    }

    fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("experiment", Self::NAME.into()),
            ("preset", self.preset.to_string()),
            ("seed", self.seed.to_string()),
            ("target", self.target.clone()),
            ("mode", self.mode.to_string()),
            ("complexities", join(&self.complexities)),
            ("r", self.r.to_string()),
            ("lambda", self.lambda.to_string()),
            ("c", self.c.to_string()),
            ("synthetic_exponent", self.synthetic_exponent.to_string()),
            ("synthetic_scale", self.synthetic_scale.to_string()),
            ("samples", self.samples.to_string()),
            ("epochs", self.epochs.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("learning_rate", self.learning_rate.to_string()),
            ("momentum", self.momentum.to_string()),
            ("restarts", self.restarts.to_string()),
            ("delta", self.delta.to_string()),
        ]
    }

    fn validate(&self) -> LabResult<()> {
        if self.complexities.len() < 3 {
            return Err(LabError::config(format!(
                "scale: need at least 3 complexity values, got {}",
                self.complexities.len()
            )));
        }
        if self.complexities.windows(2).any(|w| w[0] >= w[1]) || self.complexities[0] == 0 {
            return Err(LabError::config("scale: complexities must be positive and strictly increasing"));
        }
        if self.r == 0 {
            return Err(LabError::config("scale: r must be at least 1"));
        }
        if !(self.synthetic_scale > 0.0 && self.synthetic_exponent.is_finite()) {
            return Err(LabError::config("scale: synthetic scale must be positive and the exponent finite"));
        }
        if self.mode != ScaleMode::Synthetic {
            builtin_targets().lookup(&self.target)?;
        }
        if self.mode == ScaleMode::Sgd {
            self.train_config().validate(self.samples)?;
        }
        Ok(())
    }
}

impl ScaleConfig {
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
}

#[derive(Clone, Debug)]
pub struct ScaleOutcome {
    /// `(family, run)` with family `shallow`, `deep` or `synthetic`.
    pub runs: Vec<(String, ScalingRun)>,
    /// Families left out, with the reason.
    pub omitted: Vec<(String, String)>,
    pub artifacts: Artifacts,
}

impl ScaleOutcome {
    pub fn run(&self, family: &str) -> Option<&ScalingRun> {
        self.runs.iter().find(|(f, _)| f == family).map(|(_, r)| r)
    }
}

pub const SUMMARY_HEADER: [&str; 10] = [
    "family",
    "label",
    "points",
    "seed",
    "surrogate",
    "fitted_slope",
    "intercept",
    "log_residual",
    "predicted_exponent",
    "smoothness_r",
];

fn intersect(a: &Domain, b: &Domain) -> LabResult<Domain> {
    let lower = a.lower().iter().zip(b.lower()).map(|(x, y)| x.max(*y)).collect();
    let upper = a.upper().iter().zip(b.upper()).map(|(x, y)| x.min(*y)).collect();
    Ok(Domain::new(lower, upper)?)
}

fn point(n: usize, error: f64, surrogate: &str, seed: u64) -> ScalingPoint {
    ScalingPoint {
        n: n as f64,
        error,
        surrogate: surrogate.into(),
        seed,
    }
}

/// Whole-function fit with `grid_centers(m, d, c)` on the part of the sup
/// box inside the target's domain, and its sup error there.
pub fn fit_whole(target: &ScalarTarget, m: usize, c: f64, lambda: f64, seed: u64) -> LabResult<(GaussianNet, f64)> {
    let d = target.domain().dim();
    let centers = grid_centers(m, d, c)?;
    let region = intersect(&sup_box(m, d, c)?, target.domain())?;
    let net = fit_to_function(&centers, target, &region, lambda)?;
    let mut inside = PointSet::new(d, Vec::new())?;
    for x in sup_points(m, d, c, seed)?.iter().filter(|x| target.domain().contains(x)) {
        inside.push(x);
    }
    let est = sup_norm_on(target, &net, &inside)?;
    Ok((net, est.error))
}

/// [`fit_whole`] for each refinement `m`, indexed by center count.
pub fn gaussian_refinement(
    target: &ScalarTarget,
    ms: &[usize],
    c: f64,
    lambda: f64,
    seed: u64,
) -> LabResult<Vec<ScalingPoint>> {
    ms.iter()
        .map(|&m| {
            let (net, err) = fit_whole(target, m, c, lambda, seed)?;
            Ok(point(net.centers().len(), err, "gaussian_grid", seed))
        })
        .collect()
}

fn sup_sampling(d: usize, seed: u64) -> (SupMethod, usize) {
    match default_sup_sampling(d) {
        (SupMethod::QuasiRandom { .. }, res) => (SupMethod::QuasiRandom { seed }, res),
        other => other,
    }
}

/// Per-vertex Gaussian fits at refinement `m`; `n` counts centers over all vertices.
fn gaussian_deep(tree: &CompositionalTarget, cfg: &ScaleConfig) -> LabResult<Vec<ScalingPoint>> {
    let mut out = Vec::new();
    for &m in &cfg.complexities {
        let net = fit_tree_gaussian_grid(tree, m, cfg.lambda)?;
        let n: usize = net.nodes().iter().map(|g| g.centers().len()).sum();
        let err = tree_error(tree, &net, None, SupMethod::Grid, NODE_SUP_POINTS)?;
        out.push(point(n, err.total, "gaussian_grid_per_vertex", cfg.seed));
    }
    Ok(out)
}

/// Whole-function Gaussian fits of a tree target while the fit stays affordable.
fn gaussian_shallow_tree(
    tree: &CompositionalTarget,
    domain: &Domain,
    cfg: &ScaleConfig,
) -> LabResult<(Vec<ScalingPoint>, Option<String>)> {
    let d = domain.dim();
    let mut out = Vec::new();
    for &m in &cfg.complexities {
        let centers = grid_centers_in(m, domain)?;
        let n = centers.len();
        if n > MAX_FIT_CENTERS {
            return Ok((out, Some(format!("m={m} needs {n} centers, above {MAX_FIT_CENTERS}"))));
        }
        let points = fit_sample_points(&centers, domain)?;
        let cost = points.len() as f64 * (n as f64).powi(2);
        if cost > SHALLOW_FIT_COST_CAP {
            return Ok((out, Some(format!("m={m} fit cost {cost:e} above {SHALLOW_FIT_COST_CAP:e}"))));
        }
        let samples = Samples::from_function(&points, tree)?;
        let net = match fit_gaussian_coeffs(&centers, &samples, cfg.lambda) {
            Ok(net) => net,
            Err(e @ compo_approx::Error::Singular(_)) => return Ok((out, Some(format!("m={m}: {e}")))),
            Err(e) => return Err(e.into()),
        };
        let (method, res) = sup_sampling(d, cfg.seed);
        let est = sup_norm_error(tree, &net, domain, method, res)?;
        out.push(point(n, est.error, "gaussian_grid", cfg.seed));
    }
    Ok((out, None))
}

fn sgd_shallow(
    target: &dyn Function,
    domain: &Domain,
    cfg: &ScaleConfig,
) -> LabResult<(Vec<ScalingPoint>, Vec<String>)> {
    let d = domain.dim();
    let train = Samples::uniform(domain, cfg.samples, cfg.seed, target)?;
    let test = Samples::uniform(domain, cfg.samples, cfg.seed.wrapping_add(TEST_SEED_OFFSET), target)?;
    let tc = cfg.train_config();
    let surrogate = format!("sgd_best_of_{}", cfg.restarts);
    let mut out = Vec::new();
    let mut skipped = Vec::new();
    for &n in &cfg.complexities {
        let arch = Architecture::Shallow {
            input_dim: d,
            units: n,
            delta: cfg.delta,
        };
        match best_of_restarts(&arch, &train, &tc, Some(&test)) {
            Ok(outcome) => {
                let best = outcome.best_report();
                let (method, res) = sup_sampling(d, cfg.seed);
                let est = sup_norm_error(target, &best.network, domain, method, res)?;
                out.push(point(n, est.error, &surrogate, best.seed));
            }
            Err(TrainError::AllDiverged(k)) => skipped.push(format!("n={n}: all {k} restarts diverged")),
            Err(e) => return Err(e.into()),
        }
    }
    Ok((out, skipped))
}

fn sgd_deep(tree: &CompositionalTarget, cfg: &ScaleConfig, artifacts: &mut Artifacts) -> LabResult<Vec<ScalingPoint>> {
    let d = tree.topology().leaves();
    let tc = cfg.train_config();
    let surrogate = format!("sgd_staged_best_of_{}", cfg.restarts);
    let mut out = Vec::new();
    for &n in &cfg.complexities {
        let staged = train_tree_staged(tree, n, cfg.samples, &tc, cfg.delta)?;
        let err = tree_error(tree, &staged.net, None, SupMethod::Grid, NODE_SUP_POINTS)?;
        artifacts.note(
            format!("deep_param_count[n={n}]"),
            format!("literal={} formula_(d-1)(d+2)n={}", staged.net.param_count(), (d - 1) * (d + 2) * n),
        );
        out.push(point(n, err.total, &surrogate, cfg.seed));
    }
    Ok(out)
}

pub fn run_scaling_study(cfg: &ScaleConfig) -> LabResult<ScaleOutcome> {
    cfg.validate()?;
    let mut artifacts = Artifacts::default();
    let mut families: Vec<(String, Vec<ScalingPoint>, ScalingPrediction)> = Vec::new();
    let mut omitted = Vec::new();

    if cfg.mode == ScaleMode::Synthetic {
        let pts = cfg
            .complexities
            .iter()
            .map(|&n| point(n, cfg.synthetic_scale * (n as f64).powf(cfg.synthetic_exponent), "synthetic", cfg.seed))
            .collect();
        families.push(("synthetic".into(), pts, ScalingPrediction::new(cfg.r, 1)?));
    } else {
        match builtin_targets().lookup(&cfg.target)? {
            Target::Scalar(t) => {
                let d = t.domain().dim();
                let prediction = ScalingPrediction::new(cfg.r, d as u32)?;
                let pts = match cfg.mode {
                    ScaleMode::Gaussian => gaussian_refinement(&t, &cfg.complexities, cfg.c, cfg.lambda, cfg.seed)?,
                    _ => {
                        let (pts, skipped) = sgd_shallow(&t, t.domain(), cfg)?;
                        for s in skipped {
                            artifacts.note("skipped[shallow]", s);
                        }
                        pts
                    }
                };
                families.push(("shallow".into(), pts, prediction));
                omitted.push(("deep".into(), "scalar target has no tree structure".into()));
            }
            Target::Tree(tree) => {
                let domain = tree
                    .domain()
                    .cloned()
                    .ok_or_else(|| LabError::config("scale: tree target needs a domain"))?;
                let probe = domain.quasi_random(10_000, cfg.seed);
                for (i, r) in tree.realized_input_ranges(&probe)?.iter().enumerate() {
                    artifacts.note(
                        format!("realized_input_range[{}]", tree.topology().node_at(i)),
                        format!("[{:e},{:e}]x[{:e},{:e}]", r[0].0, r[0].1, r[1].0, r[1].1),
                    );
                }
                let d = tree.topology().leaves() as u32;
                let (p_shallow, p_deep) = predicted_exponents(cfg.r, d)?;
                debug_assert_eq!(p_shallow, ScalingPrediction::new(cfg.r, d)?.exponent());
                debug_assert_eq!(p_deep, ScalingPrediction::new(cfg.r, 2)?.exponent());
                let (shallow, deep) = match cfg.mode {
                    ScaleMode::Gaussian => {
                        let (pts, stop) = gaussian_shallow_tree(&tree, &domain, cfg)?;
                        if let Some(reason) = stop {
                            artifacts.note("truncated[shallow]", reason);
                        }
                        (pts, gaussian_deep(&tree, cfg)?)
                    }
                    _ => {
                        let (pts, skipped) = sgd_shallow(&tree, &domain, cfg)?;
                        for s in skipped {
                            artifacts.note("skipped[shallow]", s);
                        }
                        (pts, sgd_deep(&tree, cfg, &mut artifacts)?)
                    }
                };
                families.push(("shallow".into(), shallow, ScalingPrediction::new(cfg.r, d)?));
                families.push(("deep".into(), deep, ScalingPrediction::new(cfg.r, 2)?));
            }
        }
    }

    let config = cfg.canonical();
    let mut summary = Table::new(&SUMMARY_HEADER);
    let mut runs = Vec::new();
    for (family, pts, prediction) in families {
        if pts.len() < 3 {
            omitted.push((family, format!("only {} complexity points", pts.len())));
            continue;
        }
        let label = format!("{family}:{}", if cfg.mode == ScaleMode::Synthetic { "synthetic" } else { &cfg.target });
        let run = ScalingRun::new(label, pts, prediction).map_err(|e| LabError::Numerical(e.to_string()))?;
        summary.push(vec![
            family.clone(),
            run.label.clone(),
            run.points.len().to_string(),
            cfg.seed.to_string(),
            run.points[0].surrogate.clone(),
            format!("{:e}", run.fit.slope),
            format!("{:e}", run.fit.intercept),
            format!("{:e}", run.fit.residual),
            format!("{:e}", run.prediction.exponent()),
            cfg.r.to_string(),
        ]);
        artifacts.add(format!("scale_{family}.csv"), with_preamble(&config, &run.to_csv()));
        runs.push((family, run));
    }
    for (family, reason) in &omitted {
        artifacts.note(format!("omitted[{family}]"), reason.clone());
    }
    if runs.is_empty() {
        return Err(LabError::Numerical("scale: no family produced 3 complexity points".into()));
    }
    artifacts.add("scale_summary.csv", summary.render(&config));
    artifacts.seeds = vec![cfg.seed];
    Ok(ScaleOutcome {
        runs,
        omitted,
        artifacts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(pairs: &[(&str, &str)]) -> LabResult<ScaleConfig> {
        let mut c = ScaleConfig::defaults(Preset::Reduced);
        for (k, v) in pairs {
            c.set(k, v)?;
        }
        c.validate()?;
        Ok(c)
    }

    #[test]
    fn fewer_than_three_points_is_a_config_error() {
        assert!(matches!(cfg(&[("complexities", "1,2")]), Err(LabError::Config(_))));
        assert!(matches!(cfg(&[("complexities", "4,2,8")]), Err(LabError::Config(_))));
        assert!(matches!(cfg(&[("target", "nonsense")]), Err(LabError::Config(_))));
    }

    #[test]
    fn synthetic_power_law_is_recovered() {
        let c = cfg(&[("mode", "synthetic"), ("complexities", "1,2,4,8,16,32")]).unwrap();
        let out = run_scaling_study(&c).unwrap();
        let run = out.run("synthetic").unwrap();
        assert!((run.fit.slope + 1.0).abs() <= 1e-10, "slope {}", run.fit.slope);
        assert!(run.fit.residual < 1e-12);
        let csv = out.artifacts.file("scale_synthetic.csv").unwrap();
        assert!(csv.contains("n,error,surrogate,seed,predicted_exponent,fitted_slope"));
        assert!(csv.lines().filter(|l| l.contains(",synthetic,0,")).count() == 6);
    }

    #[test]
    fn two_leaf_tree_predictions_coincide() {
        let c = cfg(&[("target", "random_tree(d=2,seed=3)"), ("complexities", "1,2,3")]).unwrap();
        let out = run_scaling_study(&c).unwrap();
        let shallow = out.run("shallow").unwrap();
        let deep = out.run("deep").unwrap();
        assert_eq!(shallow.prediction.exponent(), -1.0);
        assert_eq!(deep.prediction.exponent(), shallow.prediction.exponent());
        // one vertex: the whole-function and per-vertex fits are the same problem
        let errors = |r: &ScalingRun| r.points.iter().map(|p| (p.n, p.error)).collect::<Vec<_>>();
        assert_eq!(errors(shallow), errors(deep));
        assert!(deep.points.windows(2).all(|w| w[1].error < w[0].error));
    }

    #[test]
    fn four_leaf_tree_truncates_the_shallow_family() {
        let c = cfg(&[("target", "random_tree(d=4,seed=1)"), ("complexities", "1,2,3,4")]).unwrap();
        let out = run_scaling_study(&c).unwrap();
        assert!(out.run("deep").is_some());
        assert!(out.artifacts.notes.iter().any(|(k, _)| k == "truncated[shallow]"));
        let deep = out.run("deep").unwrap();
        assert_eq!(deep.prediction.exponent(), -1.0);
    }

    #[test]
    fn sgd_mode_records_both_parameter_counts() {
        let c = cfg(&[
            ("mode", "sgd"),
            ("target", "random_tree(d=4,seed=2)"),
            ("complexities", "2,4,8"),
            ("samples", "300"),
            ("epochs", "5"),
            ("batch_size", "100"),
            ("restarts", "2"),
        ])
        .unwrap();
        let out = run_scaling_study(&c).unwrap();
        assert_eq!(out.runs.len(), 2);
        let note = &out.artifacts.notes.iter().find(|(k, _)| k == "deep_param_count[n=2]").unwrap().1;
        assert_eq!(note, "literal=24 formula_(d-1)(d+2)n=36");
    }
}

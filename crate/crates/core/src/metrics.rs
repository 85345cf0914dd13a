//! Error norms, scaling-exponent fits, predicted rates and VC bounds.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::function::{Bivariate, Function};
use crate::gaussian::TreeGaussianNet;
use crate::networks::DeepTreeNet;
use crate::sampling::{Domain, PointSet};
use crate::targets::CompositionalTarget;
use crate::tree::{NodeId, TreeTopology};

/// Smallest sample count accepted by [`sup_norm_error`].
pub const MIN_SUP_RESOLUTION: usize = 1_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SupMethod {
    /// Tensor grid with endpoints, about `resolution` points in total.
    Grid,
    /// Shifted Halton sequence.
    QuasiRandom { seed: u64 },
}

/// Default sampling for a `d`-dimensional sup estimate.
pub fn default_sup_sampling(d: usize) -> (SupMethod, usize) {
    match d {
        1 | 2 => (SupMethod::Grid, 10_000),
        _ => (SupMethod::QuasiRandom { seed: 0 }, 100_000),
    }
}

/// Sampled sup-norm error. `error` is a lower estimate of the true sup.
#[derive(Clone, Debug, PartialEq)]
pub struct SupEstimate {
    pub error: f64,
    pub points: usize,
    pub argmax: Vec<f64>,
}

pub fn sup_norm_error(
    f: &dyn Function,
    g: &dyn Function,
    domain: &Domain,
    method: SupMethod,
    resolution: usize,
) -> Result<SupEstimate> {
    if resolution < MIN_SUP_RESOLUTION {
        return Err(Error::invalid(format!(
            "sup-norm resolution {resolution} is below {MIN_SUP_RESOLUTION}"
        )));
    }
    let points = match method {
        SupMethod::Grid => domain.grid_with_total(resolution),
        SupMethod::QuasiRandom { seed } => domain.quasi_random(resolution, seed),
    };
    sup_norm_on(f, g, &points)
}

/// `max |f(x) - g(x)|` over an explicit point set. A non-finite difference
/// counts as an infinite error.
pub fn sup_norm_on(f: &dyn Function, g: &dyn Function, points: &PointSet) -> Result<SupEstimate> {
    for h in [f, g] {
        if h.arity() != points.dim() {
            return Err(Error::DimensionMismatch {
                expected: h.arity(),
                got: points.dim(),
            });
        }
    }
    if points.is_empty() {
        return Err(Error::invalid("no sample points"));
    }
    let (error, at) = points
        .coords()
        .par_chunks_exact(points.dim())
        .enumerate()
        .map(|(i, x)| -> Result<(f64, usize)> {
            let e = (f.eval(x)? - g.eval(x)?).abs();
            Ok((if e.is_nan() { f64::INFINITY } else { e }, i))
        })
        .try_reduce(
            || (f64::NEG_INFINITY, usize::MAX),
            |a, b| Ok(if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a }),
        )?;
    Ok(SupEstimate {
        error,
        points: points.len(),
        argmax: points.point(at).to_vec(),
    })
}

/// A network made of one bivariate approximant per tree vertex.
pub trait TreeApproximant {
    fn topology(&self) -> &TreeTopology;
    fn node_function(&self, flat: usize) -> &dyn Function;
}

impl TreeApproximant for DeepTreeNet {
    fn topology(&self) -> &TreeTopology {
        DeepTreeNet::topology(self)
    }

    fn node_function(&self, flat: usize) -> &dyn Function {
        self.node(flat)
    }
}

impl TreeApproximant for TreeGaussianNet {
    fn topology(&self) -> &TreeTopology {
        TreeGaussianNet::topology(self)
    }

    fn node_function(&self, flat: usize) -> &dyn Function {
        self.node(flat)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeError {
    /// Sum of the per-vertex sup errors.
    pub total: f64,
    pub per_node: Vec<(NodeId, SupEstimate)>,
}

/// Per-vertex sup error of each approximant against its constituent on the
/// vertex's domain (`domains`, or the target's node domains).
pub fn tree_error(
    target: &CompositionalTarget,
    net: &dyn TreeApproximant,
    domains: Option<&[Domain]>,
    method: SupMethod,
    resolution: usize,
) -> Result<TreeError> {
    let topo = target.topology();
    if net.topology().leaves() != topo.leaves() {
        return Err(Error::TopologyMismatch(format!(
            "target has {} leaves, network has {}",
            topo.leaves(),
            net.topology().leaves()
        )));
    }
    let domains = domains.unwrap_or(target.node_domains());
    if domains.len() != topo.node_count() {
        return Err(Error::TopologyMismatch(format!(
            "{} vertex domains for {} vertices",
            domains.len(),
            topo.node_count()
        )));
    }
    let mut per_node = Vec::with_capacity(topo.node_count());
    let mut total = 0.0;
    for (i, domain) in domains.iter().enumerate() {
        let oracle = crate::function::BivariateFn(target.constituent(i).clone());
        let est = sup_norm_error(&oracle, net.node_function(i), domain, method, resolution)?;
        total += est.error;
        per_node.push((topo.node_at(i), est));
    }
    Ok(TreeError { total, per_node })
}

/// Least-squares line through `(ln n, ln e)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
}

fn log_log_fit(pairs: &[(f64, f64)]) -> Result<ScalingFit> {
    if let Some(&(n, e)) = pairs.iter().find(|(n, e)| !(*n > 0.0 && *e > 0.0 && n.is_finite() && e.is_finite())) {
        return Err(Error::invalid(format!("log-log fit needs positive finite pairs, got ({n}, {e})")));
    }
    let k = pairs.len() as f64;
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("all complexity values are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / k)
        .sqrt();
    Ok(ScalingFit {
        slope,
        intercept,
        residual,
    })
}

pub fn fit_scaling_exponent(pairs: &[(f64, f64)]) -> Result<ScalingFit> {
    if pairs.len() < 3 {
        return Err(Error::invalid(format!(
            "an exponent fit needs at least 3 pairs, got {}",
            pairs.len()
        )));
    }
    log_log_fit(pairs)
}

/// Rate `-r / d_eff` for smoothness `r` in effective dimension `d_eff`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScalingPrediction {
    pub r: u32,
    pub d_eff: u32,
}

impl ScalingPrediction {
    pub fn new(r: u32, d_eff: u32) -> Result<Self> {
        if r == 0 || d_eff == 0 {
            return Err(Error::invalid(format!("need r >= 1 and d_eff >= 1, got r={r}, d_eff={d_eff}")));
        }
        Ok(ScalingPrediction { r, d_eff })
    }

    pub fn exponent(&self) -> f64 {
        -(self.r as f64) / self.d_eff as f64
    }
}

/// `(shallow, deep)` exponents `(-r/d, -r/2)`.
pub fn predicted_exponents(r: u32, d: u32) -> Result<(f64, f64)> {
    if r == 0 || d < 2 {
        return Err(Error::invalid(format!("need r >= 1 and d >= 2, got r={r}, d={d}")));
    }
    Ok((-(r as f64) / d as f64, -(r as f64) / 2.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingPoint {
    pub n: f64,
    pub error: f64,
    pub surrogate: String,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingRun {
    pub label: String,
    pub points: Vec<ScalingPoint>,
    pub fit: ScalingFit,
    pub prediction: ScalingPrediction,
}

impl ScalingRun {
    pub const CSV_HEADER: &'static str = "n,error,surrogate,seed,predicted_exponent,fitted_slope";

    pub fn new(label: impl Into<String>, points: Vec<ScalingPoint>, prediction: ScalingPrediction) -> Result<Self> {
        if points.windows(2).any(|w| !(w[0].n < w[1].n)) {
            return Err(Error::invalid("complexity values must be strictly increasing"));
        }
        let pairs: Vec<(f64, f64)> = points.iter().map(|p| (p.n, p.error)).collect();
        let fit = fit_scaling_exponent(&pairs)?;
        Ok(ScalingRun {
            label: label.into(),
            points,
            fit,
            prediction,
        })
    }

    /// Header line plus one row per point.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(Self::CSV_HEADER.split(',')).expect("in-memory write");
        for p in &self.points {
            w.write_record([
                p.n.to_string(),
                format!("{:e}", p.error),
                p.surrogate.clone(),
                p.seed.to_string(),
                format!("{:e}", self.prediction.exponent()),
                format!("{:e}", self.fit.slope),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VcKind {
    Shallow,
    Tree,
}

/// Shallow: `(d+2) N^2`. Tree: `4 n^2 (d-1)^2`.
pub fn vc_bound(kind: VcKind, d: u32, n: u32) -> Result<u128> {
    if d == 0 || n == 0 {
        return Err(Error::invalid(format!("VC bound arguments must be positive, got d={d}, n={n}")));
    }
    let (d, n) = (d as u128, n as u128);
    let value = match kind {
        VcKind::Shallow => (d + 2).checked_mul(n * n),
        VcKind::Tree => (n * n).checked_mul((d - 1) * (d - 1)).and_then(|v| v.checked_mul(4)),
    };
    value.ok_or_else(|| Error::invalid(format!("VC bound overflows for d={d}, n={n}")))
}

/// Setup of the composition-error experiment on `h(h1(x1,x2), h2(x3,x4))`.
#[derive(Clone)]
pub struct LipschitzConfig {
    pub epsilons: Vec<f64>,
    pub p1: Bivariate,
    pub p2: Bivariate,
    /// Perturbation of the outer function, off by default.
    pub p_outer: Option<Bivariate>,
    pub points: PointSet,
}

/// Grid size used to normalise a perturbation to unit sup norm on `[-1,1]^2`.
const PERTURBATION_GRID: usize = 201;

impl LipschitzConfig {
    /// Smooth unit-sup perturbations and a grid-plus-Halton sample of `[-1,1]^4`.
    pub fn new(epsilons: Vec<f64>) -> Self {
        let cube = Domain::cube(4, -1.0, 1.0).expect("valid cube");
        let mut points = cube.grid(7);
        for x in cube.quasi_random(20_000, 0).iter() {
            points.push(x);
        }
        LipschitzConfig {
            epsilons,
            p1: crate::function::bivariate(|a, b| {
                (std::f64::consts::FRAC_PI_2 * a).cos() * (std::f64::consts::FRAC_PI_2 * b).cos()
            }),
            p2: crate::function::bivariate(|a, b| (std::f64::consts::FRAC_PI_4 * (a - b)).sin()),
            p_outer: None,
            points,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzTable {
    pub rows: Vec<(f64, f64)>,
    /// Log-log slope over the rows with positive epsilon and error.
    pub slope: Option<f64>,
}

fn unit_sup(p: &Bivariate) -> Result<Bivariate> {
    let square = Domain::cube(2, -1.0, 1.0)?;
    let sup = square
        .grid(PERTURBATION_GRID)
        .iter()
        .map(|x| p(x[0], x[1]).abs())
        .fold(0.0, f64::max);
    if !(sup > 0.0 && sup.is_finite()) {
        return Err(Error::Degenerate(format!("perturbation has sup norm {sup}")));
    }
    let p = p.clone();
    Ok(crate::function::bivariate(move |a, b| p(a, b) / sup))
}

/// Perturbs each constituent by `eps` times a fixed unit-sup function and
/// measures the sampled sup error of the composition.
pub fn composition_lipschitz_test(
    h: &Bivariate,
    h1: &Bivariate,
    h2: &Bivariate,
    cfg: &LipschitzConfig,
) -> Result<LipschitzTable> {
    if cfg.epsilons.is_empty() {
        return Err(Error::invalid("empty epsilon list"));
    }
    if let Some(e) = cfg.epsilons.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
        return Err(Error::invalid(format!("epsilon must be nonnegative, got {e}")));
    }
    if cfg.points.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: cfg.points.dim(),
        });
    }
    let p1 = unit_sup(&cfg.p1)?;
    let p2 = unit_sup(&cfg.p2)?;
    let po = cfg.p_outer.as_ref().map(unit_sup).transpose()?;
    let mut rows = Vec::with_capacity(cfg.epsilons.len());
    for &eps in &cfg.epsilons {
        let err = cfg
            .points
            .coords()
            .par_chunks_exact(4)
            .map(|x| {
                let (a, b) = (h1(x[0], x[1]), h2(x[2], x[3]));
                let exact = h(a, b);
                let (pa, pb) = (a + eps * p1(x[0], x[1]), b + eps * p2(x[2], x[3]));
                let mut approx = h(pa, pb);
                if let Some(po) = &po {
                    approx += eps * po(pa, pb);
                }
                let e = (approx - exact).abs();
                if e.is_nan() {
                    f64::INFINITY
                } else {
                    e
                }
            })
            .reduce(|| 0.0, f64::max);
        rows.push((eps, err));
    }
    let positive: Vec<(f64, f64)> = rows.iter().copied().filter(|&(e, r)| e > 0.0 && r > 0.0).collect();
    let slope = if positive.len() >= 2 {
        log_log_fit(&positive).ok().map(|f| f.slope)
    } else {
        None
    };
    Ok(LipschitzTable { rows, slope })
}

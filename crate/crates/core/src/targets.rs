//! Target functions: compositional binary trees and scalar test functions.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::function::{bivariate, check_arity, Bivariate, Function};
use crate::sampling::{Domain, PointSet};
use crate::tree::{NodeId, TreeTopology};

/// A function realised as a balanced binary tree of bivariate constituents.
#[derive(Clone)]
pub struct CompositionalTarget {
    label: String,
    topology: TreeTopology,
    node_fns: Vec<Bivariate>,
    node_domains: Vec<Domain>,
    domain: Option<Domain>,
}

impl fmt::Debug for CompositionalTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CompositionalTarget")
            .field("label", &self.label)
            .field("topology", &self.topology)
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

/// Builds a tree target over `d` leaves from one function per non-leaf vertex.
pub fn build_tree_target(
    d: usize,
    mut node_fns: BTreeMap<NodeId, Bivariate>,
) -> Result<CompositionalTarget> {
    let topology = TreeTopology::new(d)?;
    let mut flat = Vec::with_capacity(topology.node_count());
    for node in topology.nodes() {
        match node_fns.remove(&node) {
            Some(f) => flat.push(f),
            None => {
                return Err(Error::Vertex {
                    node,
                    reason: "missing node function".into(),
                })
            }
        }
    }
    if let Some((&node, _)) = node_fns.iter().next() {
        return Err(Error::Vertex {
            node,
            reason: format!("not a vertex of a tree with {d} leaves"),
        });
    }
    CompositionalTarget::from_flat(topology, flat)
}

impl CompositionalTarget {
    /// Node functions in flat (bottom-up) order.
    pub fn from_flat(topology: TreeTopology, node_fns: Vec<Bivariate>) -> Result<Self> {
        if node_fns.len() != topology.node_count() {
            return Err(Error::DimensionMismatch {
                expected: topology.node_count(),
                got: node_fns.len(),
            });
        }
        let unit = Domain::cube(2, -1.0, 1.0)?;
        Ok(CompositionalTarget {
            label: format!("tree(d={})", topology.leaves()),
            node_domains: vec![unit; topology.node_count()],
            topology,
            node_fns,
            domain: None,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Restricts inputs to `domain`; evaluation outside it is reported.
    pub fn with_domain(mut self, domain: Domain) -> Result<Self> {
        if domain.dim() != self.topology.leaves() {
            return Err(Error::DimensionMismatch {
                expected: self.topology.leaves(),
                got: domain.dim(),
            });
        }
        self.domain = Some(domain);
        Ok(self)
    }

    /// Reassigns input coordinates to leaves. Leaf `i` reads `x[order[i]]`.
    pub fn with_leaf_order(mut self, order: Vec<usize>) -> Result<Self> {
        self.topology = TreeTopology::with_leaf_order(self.topology.leaves(), order)?;
        Ok(self)
    }

    /// Natural domain of each constituent, used for per-node fitting and
    /// error measurement. Defaults to `[-1, 1]^2`.
    pub fn with_node_domains(mut self, domains: Vec<Domain>) -> Result<Self> {
        if domains.len() != self.topology.node_count() {
            return Err(Error::DimensionMismatch {
                expected: self.topology.node_count(),
                got: domains.len(),
            });
        }
        if let Some(d) = domains.iter().find(|d| d.dim() != 2) {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: d.dim(),
            });
        }
        self.node_domains = domains;
        Ok(self)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn topology(&self) -> &TreeTopology {
        &self.topology
    }

    pub fn domain(&self) -> Option<&Domain> {
        self.domain.as_ref()
    }

    pub fn node_domains(&self) -> &[Domain] {
        &self.node_domains
    }

    pub fn constituent(&self, flat: usize) -> &Bivariate {
        &self.node_fns[flat]
    }

    pub fn constituents(&self) -> &[Bivariate] {
        &self.node_fns
    }

    pub fn node_fn(&self, node: NodeId) -> Option<&Bivariate> {
        self.topology.flat_index(node).map(|i| &self.node_fns[i])
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        self.topology.check_input(x)?;
        if let Some(d) = &self.domain {
            d.check(x)?;
        }
        Ok(())
    }

    /// Value at `x` together with every vertex output in flat order.
    pub fn eval_with_intermediates(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check(x)?;
        let values = self.topology.evaluate(x, |i, a, b| (self.node_fns[i])(a, b));
        Ok((*values.last().expect("tree has a root"), values))
    }

    /// Smallest box containing the inputs each vertex actually receives on
    /// `points`, in flat order.
    pub fn realized_input_ranges(&self, points: &PointSet) -> Result<Vec<[(f64, f64); 2]>> {
        let mut ranges = vec![[(f64::INFINITY, f64::NEG_INFINITY); 2]; self.topology.node_count()];
        for p in points.iter() {
            self.check(p)?;
            let values = self.topology.evaluate(p, |i, a, b| {
                let r = &mut ranges[i];
                r[0] = (r[0].0.min(a), r[0].1.max(a));
                r[1] = (r[1].0.min(b), r[1].1.max(b));
                (self.node_fns[i])(a, b)
            });
            drop(values);
        }
        Ok(ranges)
    }
}

impl Function for CompositionalTarget {
    fn arity(&self) -> usize {
        self.topology.leaves()
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        self.check(x)?;
        let values = self.topology.evaluate(x, |i, a, b| (self.node_fns[i])(a, b));
        Ok(values[values.len() - 1])
    }
}

/// A scalar function on a finite box.
#[derive(Clone)]
pub struct ScalarTarget {
    label: String,
    domain: Domain,
    f: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl fmt::Debug for ScalarTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarTarget")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

impl ScalarTarget {
    pub fn new<F>(label: impl Into<String>, domain: Domain, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        ScalarTarget {
            label: label.into(),
            domain,
            f: Arc::new(f),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }
}

impl Function for ScalarTarget {
    fn arity(&self) -> usize {
        self.domain.dim()
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        check_arity(self.arity(), x)?;
        self.domain.check(x)?;
        Ok((self.f)(x))
    }
}

/// Either kind of target, as returned by the catalog.
#[derive(Clone, Debug)]
pub enum Target {
    Scalar(ScalarTarget),
    Tree(CompositionalTarget),
}

impl Target {
    pub fn label(&self) -> &str {
        match self {
            Target::Scalar(t) => t.label(),
            Target::Tree(t) => t.label(),
        }
    }

    pub fn domain(&self) -> Option<&Domain> {
        match self {
            Target::Scalar(t) => Some(t.domain()),
            Target::Tree(t) => t.domain(),
        }
    }

    pub fn as_tree(&self) -> Option<&CompositionalTarget> {
        match self {
            Target::Tree(t) => Some(t),
            Target::Scalar(_) => None,
        }
    }
}

impl Function for Target {
    fn arity(&self) -> usize {
        match self {
            Target::Scalar(t) => t.arity(),
            Target::Tree(t) => t.arity(),
        }
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        match self {
            Target::Scalar(t) => t.eval(x),
            Target::Tree(t) => t.eval(x),
        }
    }
}

/// `2(2cos^2 x - 1)^2 - 1`, which equals `cos 4x`.
pub fn cos4_value(x: f64) -> f64 {
    let c = x.cos();
    let inner = 2.0 * c * c - 1.0;
    2.0 * inner * inner - 1.0
}

pub fn cos4() -> ScalarTarget {
    let domain = Domain::cube(1, -2.0 * PI, 2.0 * PI).expect("finite bounds");
    ScalarTarget::new("cos4", domain, |x| cos4_value(x[0]))
}

/// Half-width of the box standing in for `R^d` in [`gauss_bump`].
pub const GAUSS_BUMP_HALF_WIDTH: f64 = 64.0;

/// `exp(-|x|^2)`.
pub fn gauss_bump(d: usize) -> Result<ScalarTarget> {
    if d == 0 {
        return Err(Error::invalid("gauss_bump needs d >= 1"));
    }
    let domain = Domain::cube(d, -GAUSS_BUMP_HALF_WIDTH, GAUSS_BUMP_HALF_WIDTH)?;
    Ok(ScalarTarget::new(format!("gauss_bump(d={d})"), domain, |x| {
        (-x.iter().map(|v| v * v).sum::<f64>()).exp()
    }))
}

pub const Q_COEFFICIENT_NAMES: [&str; 9] = ["A", "B", "C", "D", "E", "F", "G", "H", "I"];

/// Number of squarings applied to the inner quadratic of `Q`.
pub const Q_SQUARINGS: u32 = 10;

/// Coefficients `A..I` of
/// `(A x^2y^2 + B x^2y + C xy^2 + D x^2 + 2E xy + F y^2 + 2G x + 2H y + I)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QCoefficients(pub [f64; 9]);

impl Default for QCoefficients {
    fn default() -> Self {
        QCoefficients([0.5, 0.25, -0.25, 1.0, 0.2, 0.8, -0.1, 0.15, -0.4])
    }
}

/// The staged polynomial `Q`, with the inner quadratic divided by its sup on
/// `[-1,1]^2` so that every power stays in `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct QPolynomial {
    coeffs: QCoefficients,
    inner_scale: f64,
}

impl QPolynomial {
    /// Grid resolution per axis used to estimate the sup of the inner quadratic.
    pub const SCALE_GRID: usize = 401;

    pub fn new(coeffs: QCoefficients) -> Result<Self> {
        if coeffs.0.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("Q coefficients must be finite"));
        }
        let mut q = QPolynomial {
            coeffs,
            inner_scale: 1.0,
        };
        let n = Self::SCALE_GRID;
        let mut sup = 0.0f64;
        for i in 0..n {
            let x = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
            for j in 0..n {
                let y = -1.0 + 2.0 * j as f64 / (n - 1) as f64;
                sup = sup.max(q.inner_raw(x, y).abs());
            }
        }
        if sup > 0.0 {
            q.inner_scale = sup;
        }
        Ok(q)
    }

    pub fn coefficients(&self) -> &QCoefficients {
        &self.coeffs
    }

    pub fn inner_scale(&self) -> f64 {
        self.inner_scale
    }

    pub fn inner_raw(&self, x: f64, y: f64) -> f64 {
        let [a, b, c, d, e, f, g, h, i] = self.coeffs.0;
        a * x * x * y * y + b * x * x * y + c * x * y * y + d * x * x + 2.0 * e * x * y
            + f * y * y
            + 2.0 * g * x
            + 2.0 * h * y
            + i
    }

    /// Range-normalised inner quadratic.
    pub fn inner(&self, x: f64, y: f64) -> f64 {
        self.inner_raw(x, y) / self.inner_scale
    }

    /// `inner^(2^k)` by `k` squarings.
    pub fn stage(&self, x: f64, y: f64, k: u32) -> f64 {
        let mut t = self.inner(x, y);
        for _ in 0..k {
            t *= t;
        }
        t
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.stage(x, y, Q_SQUARINGS)
    }

    pub fn into_target(self) -> ScalarTarget {
        let domain = Domain::cube(2, -1.0, 1.0).expect("finite bounds");
        ScalarTarget::new("q_poly", domain, move |x| self.value(x[0], x[1]))
    }
}

pub fn q_poly(coeffs: QCoefficients) -> Result<ScalarTarget> {
    Ok(QPolynomial::new(coeffs)?.into_target())
}

/// Bivariate trigonometric polynomial of total degree at most 3, scaled so
/// that it maps `[-1,1]^2` into `[-1,1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigNode {
    terms: Vec<TrigTerm>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct TrigTerm {
    coeff: f64,
    freq_a: u32,
    sin_a: bool,
    freq_b: u32,
    sin_b: bool,
}

fn basis(freq: u32, sin: bool, t: f64) -> f64 {
    match (freq, sin) {
        (0, _) => 1.0,
        (k, false) => (k as f64 * t).cos(),
        (k, true) => (k as f64 * t).sin(),
    }
}

impl TrigNode {
    pub const MAX_DEGREE: u32 = 3;

    pub fn random(rng: &mut impl Rng) -> Self {
        let kinds = |f: u32| if f == 0 { vec![false] } else { vec![false, true] };
        let mut terms = Vec::new();
        for fa in 0..=Self::MAX_DEGREE {
            for fb in 0..=Self::MAX_DEGREE - fa {
                for &sa in &kinds(fa) {
                    for &sb in &kinds(fb) {
                        terms.push(TrigTerm {
                            coeff: rng.gen_range(-1.0..=1.0),
                            freq_a: fa,
                            sin_a: sa,
                            freq_b: fb,
                            sin_b: sb,
                        });
                    }
                }
            }
        }
        let mut node = TrigNode { terms };
        let bound = node.sup_bound();
        if bound > 0.0 {
            for t in &mut node.terms {
                t.coeff /= bound;
            }
        }
        node
    }

    fn raw(&self, a: f64, b: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff * basis(t.freq_a, t.sin_a, a) * basis(t.freq_b, t.sin_b, b))
            .sum()
    }

    /// Rigorous upper bound of `|f|` on `[-1,1]^2`: grid maximum plus the
    /// Lipschitz constant times the largest distance to a grid node.
    fn sup_bound(&self) -> f64 {
        const N: usize = 201;
        let h = 2.0 / (N - 1) as f64;
        let mut sup = 0.0f64;
        for i in 0..N {
            for j in 0..N {
                let a = -1.0 + h * i as f64;
                let b = -1.0 + h * j as f64;
                sup = sup.max(self.raw(a, b).abs());
            }
        }
        let la: f64 = self.terms.iter().map(|t| t.coeff.abs() * t.freq_a as f64).sum();
        let lb: f64 = self.terms.iter().map(|t| t.coeff.abs() * t.freq_b as f64).sum();
        sup + la.hypot(lb) * h / 2f64.sqrt()
    }

    pub fn eval(&self, a: f64, b: f64) -> f64 {
        self.raw(a, b)
    }

    pub fn into_bivariate(self) -> Bivariate {
        bivariate(move |a, b| self.eval(a, b))
    }
}

/// Seeded random compositional target on `[-1,1]^d` with trigonometric
/// constituents.
pub fn random_tree_target(d: usize, seed: u64) -> Result<CompositionalTarget> {
    let topology = TreeTopology::new(d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fns = (0..topology.node_count())
        .map(|_| TrigNode::random(&mut rng).into_bivariate())
        .collect();
    CompositionalTarget::from_flat(topology, fns)?
        .with_label(format!("random_tree(d={d},seed={seed})"))
        .with_domain(Domain::cube(d, -1.0, 1.0)?)
}

/// Built-in targets addressable by label.
#[derive(Clone, Debug)]
pub struct Catalog {
    entries: Vec<(&'static str, &'static str)>,
}

pub fn builtin_targets() -> Catalog {
    Catalog {
        entries: vec![
            ("cos4", "2(2cos^2 x - 1)^2 - 1 on [-2pi, 2pi]"),
            ("q_poly", "staged polynomial Q with parameters A..I on [-1,1]^2"),
            ("gauss_bump", "exp(-|x|^2), parameter d (default 1)"),
            (
                "random_tree",
                "seeded trigonometric compositional tree, parameters d (default 8) and seed (default 0)",
            ),
        ],
    }
}

impl Catalog {
    pub fn labels(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.iter().map(|(l, _)| *l)
    }

    pub fn describe(&self, label: &str) -> Option<&'static str> {
        self.entries.iter().find(|(l, _)| *l == label).map(|(_, d)| *d)
    }

    /// Looks up `name` or `name(key=value,...)`.
    pub fn lookup(&self, spec: &str) -> Result<Target> {
        let (name, mut params) = parse_target_spec(spec)?;
        if self.describe(&name).is_none() {
            return Err(Error::UnknownTarget(name));
        }
        let target = match name.as_str() {
            "cos4" => Target::Scalar(cos4()),
            "gauss_bump" => {
                let d = take_usize(&mut params, "d", 1)?;
                Target::Scalar(gauss_bump(d)?)
            }
            "q_poly" => {
                let mut coeffs = QCoefficients::default();
                for (i, name) in Q_COEFFICIENT_NAMES.iter().enumerate() {
                    if let Some(v) = params.remove(*name) {
                        coeffs.0[i] = v
                            .parse()
                            .map_err(|_| Error::invalid(format!("q_poly {name}: bad number `{v}`")))?;
                    }
                }
                Target::Scalar(q_poly(coeffs)?)
            }
            "random_tree" => {
                let d = take_usize(&mut params, "d", 8)?;
                let seed = take_usize(&mut params, "seed", 0)? as u64;
                Target::Tree(random_tree_target(d, seed)?)
            }
            _ => unreachable!("catalog labels are matched above"),
        };
        if let Some(key) = params.keys().next() {
            return Err(Error::invalid(format!("target `{name}` has no parameter `{key}`")));
        }
        Ok(target)
    }
}

fn take_usize(params: &mut BTreeMap<String, String>, key: &str, default: usize) -> Result<usize> {
    match params.remove(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|_| Error::invalid(format!("parameter {key}: expected an integer, got `{v}`"))),
    }
}

fn parse_target_spec(spec: &str) -> Result<(String, BTreeMap<String, String>)> {
    let spec = spec.trim();
    let Some(open) = spec.find('(') else {
        return Ok((spec.to_string(), BTreeMap::new()));
    };
    let inner = spec[open + 1..]
        .strip_suffix(')')
        .ok_or_else(|| Error::invalid(format!("unbalanced parentheses in `{spec}`")))?;
    let mut params = BTreeMap::new();
    for part in inner.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("expected key=value, got `{part}`")))?;
        params.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok((spec[..open].trim().to_string(), params))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sum() -> Bivariate {
        bivariate(|a, b| a + b)
    }

    fn prod() -> Bivariate {
        bivariate(|a, b| a * b)
    }

    fn fns(pairs: Vec<((usize, usize), Bivariate)>) -> BTreeMap<NodeId, Bivariate> {
        pairs
            .into_iter()
            .map(|((l, i), f)| (NodeId::new(l, i), f))
            .collect()
    }

    #[test]
    fn single_node_sum() {
        let t = build_tree_target(2, fns(vec![((1, 0), sum())])).unwrap();
        assert_eq!(t.eval(&[1.0, 2.0]).unwrap(), 3.0);
    }

    #[test]
    fn two_level_products_then_sum() {
        let t = build_tree_target(
            4,
            fns(vec![((1, 0), prod()), ((1, 1), prod()), ((2, 0), sum())]),
        )
        .unwrap();
        assert_eq!(t.eval(&[1.0, 2.0, 3.0, 4.0]).unwrap(), 14.0);
        let (v, mids) = t.eval_with_intermediates(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(v, 14.0);
        assert_eq!(mids, vec![2.0, 12.0, 14.0]);
    }

    #[test]
    fn max_tree_is_global_max() {
        let max = bivariate(f64::max);
        let map = TreeTopology::new(8)
            .unwrap()
            .nodes()
            .map(|n| (n, max.clone()))
            .collect();
        let t = build_tree_target(8, map).unwrap();
        let x = [0.3, -1.0, 7.5, 2.0, 7.4, -3.0, 0.0, 1.0];
        assert_eq!(t.eval(&x).unwrap(), 7.5);
    }

    #[test]
    fn missing_and_extra_vertices_are_named() {
        let err = build_tree_target(4, fns(vec![((1, 0), sum()), ((2, 0), sum())])).unwrap_err();
        assert_eq!(
            err,
            Error::Vertex {
                node: NodeId::new(1, 1),
                reason: "missing node function".into()
            }
        );
        let err = build_tree_target(2, fns(vec![((1, 0), sum()), ((2, 0), sum())])).unwrap_err();
        assert!(matches!(err, Error::Vertex { node, .. } if node == NodeId::new(2, 0)));
        assert!(build_tree_target(6, BTreeMap::new()).is_err());
    }

    #[test]
    fn arity_and_domain_errors() {
        let t = random_tree_target(4, 1).unwrap();
        assert!(matches!(
            t.eval(&[0.0; 3]),
            Err(Error::DimensionMismatch { expected: 4, got: 3 })
        ));
        assert!(matches!(
            t.eval(&[0.0, 0.0, 1.5, 0.0]),
            Err(Error::OutOfDomain { index: 2, .. })
        ));
        let c = cos4();
        assert!(c.eval(&[7.0]).is_err());
    }

    #[test]
    fn cos4_values() {
        let c = cos4();
        assert_eq!(c.eval(&[0.0]).unwrap(), 1.0);
        assert!((c.eval(&[PI / 4.0]).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn cos4_matches_cos_4x_on_grid() {
        let n = 10_000;
        for i in 0..n {
            let x = -2.0 * PI + 4.0 * PI * i as f64 / (n - 1) as f64;
            assert!((cos4_value(x) - (4.0 * x).cos()).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn q_poly_constant_inner() {
        let mut c = [0.0; 9];
        c[8] = 1.0;
        let q = q_poly(QCoefficients(c)).unwrap();
        assert_eq!(q.eval(&[0.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn q_poly_stays_in_unit_range() {
        let q = QPolynomial::new(QCoefficients::default()).unwrap();
        for p in Domain::cube(2, -1.0, 1.0).unwrap().grid(101).iter() {
            let v = q.inner(p[0], p[1]);
            assert!(v.abs() <= 1.0 + 1e-12);
            assert!((0.0..=1.0 + 1e-12).contains(&q.value(p[0], p[1])));
        }
    }

    #[test]
    fn catalog_lookups() {
        let cat = builtin_targets();
        let Target::Scalar(c) = cat.lookup("cos4").unwrap() else { panic!() };
        assert_eq!(c.arity(), 1);
        assert_eq!(c.domain().lower(), &[-2.0 * PI]);
        assert_eq!(c.domain().upper(), &[2.0 * PI]);

        let g = cat.lookup("gauss_bump").unwrap();
        assert_eq!(g.eval(&[0.0]).unwrap(), 1.0);
        let g3 = cat.lookup("gauss_bump(d=3)").unwrap();
        assert_eq!(g3.arity(), 3);

        assert_eq!(Q_COEFFICIENT_NAMES.len(), 9);
        let q = cat.lookup("q_poly(A=0,B=0,C=0,D=0,E=0,F=0,G=0,H=0,I=1)").unwrap();
        assert_eq!(q.eval(&[0.0, 0.0]).unwrap(), 1.0);

        let t = cat.lookup("random_tree(d=4, seed=3)").unwrap();
        assert_eq!(t.as_tree().unwrap().topology().leaves(), 4);

        assert_eq!(cat.lookup("nope").unwrap_err(), Error::UnknownTarget("nope".into()));
        assert!(cat.lookup("cos4(d=2)").is_err());
        assert!(cat.lookup("gauss_bump(d=x)").is_err());
    }

    #[test]
    fn random_nodes_map_square_into_unit_interval() {
        let t = random_tree_target(8, 42).unwrap();
        let grid = Domain::cube(2, -1.0, 1.0).unwrap().grid(61);
        for f in t.constituents() {
            let sup = grid.iter().map(|p| f(p[0], p[1]).abs()).fold(0.0, f64::max);
            assert!(sup <= 1.0 && sup > 0.3, "sup {sup}");
        }
    }

    #[test]
    fn realized_ranges_are_within_unit_square_for_random_trees() {
        let t = random_tree_target(8, 5).unwrap();
        let pts = t.domain().unwrap().quasi_random(2000, 1);
        for r in t.realized_input_ranges(&pts).unwrap() {
            for (lo, hi) in r {
                assert!(lo >= -1.0 && hi <= 1.0 && lo <= hi);
            }
        }
    }
}

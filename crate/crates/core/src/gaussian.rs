//! Gaussian networks `sum_k a_k exp(-|x - x_k|^2)` with fixed centers.
//!
//! Centers come from regular grids of spacing `1/m`; coefficients are the
//! ridge least-squares solution of the normal equations, which is linear in
//! the sampled values.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::codec;
use crate::error::{Error, Result};
use crate::function::{check_arity, Bivariate, BivariateFn, Function};
use crate::sampling::{Domain, PointSet, Samples};
use crate::targets::CompositionalTarget;
use crate::tree::TreeTopology;

pub const DEFAULT_LAMBDA: f64 = 1e-10;
pub const DEFAULT_C: f64 = 1.0;
pub const DEFAULT_CENTER_CAP: usize = 1_000_000;
/// Largest center count accepted by the dense normal-equation solver.
pub const MAX_FIT_CENTERS: usize = 8192;
/// Below this many points the minimal separation is found by brute force.
const BRUTE_FORCE_LIMIT: usize = 4096;
/// Margin added around the center hull when estimating the sup norm on `R^d`.
pub const SUP_MARGIN: f64 = 3.0;

/// Distinct centers with their cached minimal separation.
#[derive(Clone, Debug, PartialEq)]
pub struct CenterSet {
    points: PointSet,
    separation: f64,
}

impl CenterSet {
    /// Validates that the points are distinct and caches their separation.
    /// A single center has infinite separation.
    pub fn new(points: PointSet) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("a center set needs at least one point"));
        }
        let separation = if points.len() == 1 {
            f64::INFINITY
        } else {
            minimal_separation(&points)?
        };
        Ok(CenterSet { points, separation })
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &PointSet {
        &self.points
    }

    pub fn separation(&self) -> f64 {
        self.separation
    }

    pub fn to_text(&self) -> String {
        let mut out = codec::write_header(
            "centers",
            &[("dim", self.dim().to_string()), ("count", self.len().to_string())],
        );
        codec::write_values(&mut out, self.points.coords().iter().copied());
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (h, mut values) = codec::read(text)?;
        expect_kind(&h.kind, "centers")?;
        let dim = h.usize("dim")?;
        let coords = values.take(dim * h.usize("count")?)?;
        values.finish()?;
        Self::new(PointSet::new(dim, coords)?)
    }
}

fn expect_kind(kind: &str, expected: &str) -> Result<()> {
    if kind != expected {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected `{expected}`, found `{kind}`"),
        });
    }
    Ok(())
}

/// Grid `{j/m}` along each axis for integers `j` with `|j| <= c m^2`, i.e. a
/// spacing-`1/m` grid over `[-c m, c m]^d`.
pub fn grid_centers(m: usize, d: usize, c: f64) -> Result<CenterSet> {
    grid_centers_capped(m, d, c, DEFAULT_CENTER_CAP)
}

pub fn grid_centers_capped(m: usize, d: usize, c: f64, cap: usize) -> Result<CenterSet> {
    if m == 0 || d == 0 {
        return Err(Error::invalid("grid centers need m >= 1 and d >= 1"));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::invalid(format!("grid extent c must be positive, got {c}")));
    }
    let jmax = (c * (m * m) as f64 + 1e-9).floor() as i64;
    let half = vec![jmax; d];
    grid_from_ranges(m, &half.iter().map(|&j| (-j, j)).collect::<Vec<_>>(), cap)
}

/// Spacing-`1/m` grid restricted to the points `j/m` inside `domain`.
pub fn grid_centers_in(m: usize, domain: &Domain) -> Result<CenterSet> {
    if m == 0 {
        return Err(Error::invalid("grid centers need m >= 1"));
    }
    let mf = m as f64;
    let ranges: Vec<(i64, i64)> = domain
        .lower()
        .iter()
        .zip(domain.upper())
        .map(|(lo, hi)| ((lo * mf - 1e-9).ceil() as i64, (hi * mf + 1e-9).floor() as i64))
        .collect();
    grid_from_ranges(m, &ranges, DEFAULT_CENTER_CAP)
}

fn grid_from_ranges(m: usize, ranges: &[(i64, i64)], cap: usize) -> Result<CenterSet> {
    let d = ranges.len();
    let per_axis: Vec<usize> = ranges.iter().map(|(lo, hi)| (hi - lo + 1).max(0) as usize).collect();
    let total = per_axis
        .iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .unwrap_or(usize::MAX);
    if total > cap {
        return Err(Error::ResourceLimit {
            what: "center grid",
            requested: total,
            cap,
        });
    }
    if total == 0 {
        return Err(Error::invalid("grid contains no points"));
    }
    let mf = m as f64;
    let mut coords = Vec::with_capacity(total * d);
    let mut idx: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    for _ in 0..total {
        coords.extend(idx.iter().map(|&j| j as f64 / mf));
        for k in (0..d).rev() {
            idx[k] += 1;
            if idx[k] <= ranges[k].1 {
                break;
            }
            idx[k] = ranges[k].0;
        }
    }
    let points = PointSet::new(d, coords)?;
    let separation = if total == 1 { f64::INFINITY } else { 1.0 / mf };
    Ok(CenterSet { points, separation })
}

#[inline]
fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Smallest Euclidean distance between two points of the set.
pub fn minimal_separation(points: &PointSet) -> Result<f64> {
    let n = points.len();
    if n < 2 {
        return Err(Error::invalid("minimal separation needs at least two points"));
    }
    let best = if n < BRUTE_FORCE_LIMIT {
        let mut best = f64::INFINITY;
        for i in 0..n {
            for j in i + 1..n {
                best = best.min(distance(points.point(i), points.point(j)));
            }
        }
        best
    } else if points.dim() <= 3 {
        bucketed_separation(points)
    } else {
        sweep_separation(points)
    };
    if best == 0.0 {
        return Err(Error::Degenerate("duplicate centers have zero separation".into()));
    }
    Ok(best)
}

fn sorted_by_first_axis(points: &PointSet) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points
            .point(a)
            .partial_cmp(points.point(b))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    order
}

/// Plane sweep along the first axis; exact for any dimension.
fn sweep_separation(points: &PointSet) -> f64 {
    let order = sorted_by_first_axis(points);
    let mut best = f64::INFINITY;
    for (a, &i) in order.iter().enumerate() {
        let p = points.point(i);
        for &j in &order[a + 1..] {
            let q = points.point(j);
            if q[0] - p[0] >= best {
                break;
            }
            best = best.min(distance(p, q));
        }
    }
    best
}

/// Hashes points into cubes whose side is an upper bound on the answer; any
/// closer pair then lies in adjacent cubes.
fn bucketed_separation(points: &PointSet) -> f64 {
    let order = sorted_by_first_axis(points);
    let side = order
        .windows(2)
        .map(|w| distance(points.point(w[0]), points.point(w[1])))
        .fold(f64::INFINITY, f64::min);
    if side == 0.0 {
        return 0.0;
    }
    let d = points.dim();
    let key = |p: &[f64]| -> Vec<i64> { p.iter().map(|v| (v / side).floor() as i64).collect() };
    let mut cells: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for i in 0..points.len() {
        cells.entry(key(points.point(i))).or_default().push(i);
    }
    let offsets: Vec<Vec<i64>> = (0..3usize.pow(d as u32))
        .map(|mut code| {
            (0..d)
                .map(|_| {
                    let o = (code % 3) as i64 - 1;
                    code /= 3;
                    o
                })
                .collect()
        })
        .collect();
    let mut best = side;
    let mut probe = vec![0i64; d];
    for i in 0..points.len() {
        let p = points.point(i);
        let base = key(p);
        for off in &offsets {
            for k in 0..d {
                probe[k] = base[k] + off[k];
            }
            if let Some(bucket) = cells.get(&probe) {
                for &j in bucket {
                    if j > i {
                        best = best.min(distance(p, points.point(j)));
                    }
                }
            }
        }
    }
    best
}

/// `x -> sum_k a_k exp(-|x - x_k|^2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianNet {
    centers: CenterSet,
    coeffs: Vec<f64>,
}

impl GaussianNet {
    pub fn new(centers: CenterSet, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != centers.len() {
            return Err(Error::DimensionMismatch {
                expected: centers.len(),
                got: coeffs.len(),
            });
        }
        Ok(GaussianNet { centers, coeffs })
    }

    pub fn centers(&self) -> &CenterSet {
        &self.centers
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff_l1(&self) -> f64 {
        self.coeffs.iter().map(|a| a.abs()).sum()
    }

    #[inline]
    pub(crate) fn value(&self, x: &[f64]) -> f64 {
        self.centers
            .points()
            .iter()
            .zip(&self.coeffs)
            .map(|(c, a)| {
                let r2: f64 = c.iter().zip(x).map(|(u, v)| (u - v) * (u - v)).sum();
                a * (-r2).exp()
            })
            .sum()
    }

    pub fn to_text(&self) -> String {
        let mut out = codec::write_header(
            "gaussian",
            &[
                ("dim", self.centers.dim().to_string()),
                ("count", self.centers.len().to_string()),
            ],
        );
        codec::write_values(&mut out, self.centers.points().coords().iter().copied());
        codec::write_values(&mut out, self.coeffs.iter().copied());
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (h, mut values) = codec::read(text)?;
        expect_kind(&h.kind, "gaussian")?;
        let dim = h.usize("dim")?;
        let count = h.usize("count")?;
        let coords = values.take(dim * count)?;
        let coeffs = values.take(count)?;
        values.finish()?;
        Self::new(CenterSet::new(PointSet::new(dim, coords)?)?, coeffs)
    }
}

impl Function for GaussianNet {
    fn arity(&self) -> usize {
        self.centers.dim()
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        check_arity(self.centers.dim(), x)?;
        Ok(self.value(x))
    }
}

/// Minimises `sum_i (G(x_i) - y_i)^2 + lambda |a|^2` over the coefficients
/// through the normal equations and a Cholesky factorization.
pub fn fit_gaussian_coeffs(centers: &CenterSet, samples: &Samples, lambda: f64) -> Result<GaussianNet> {
    if samples.dim() != centers.dim() {
        return Err(Error::DimensionMismatch {
            expected: centers.dim(),
            got: samples.dim(),
        });
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("ridge parameter must be >= 0, got {lambda}")));
    }
    let n = centers.len();
    if samples.len() < n {
        return Err(Error::invalid(format!(
            "{} samples cannot determine {n} coefficients",
            samples.len()
        )));
    }
    if n > MAX_FIT_CENTERS {
        return Err(Error::ResourceLimit {
            what: "normal equations",
            requested: n,
            cap: MAX_FIT_CENTERS,
        });
    }
    let mut gram = DMatrix::<f64>::zeros(n, n);
    let mut rhs = DVector::<f64>::zeros(n);
    let mut row = vec![0.0; n];
    for s in 0..samples.len() {
        let x = samples.x(s);
        for (k, c) in centers.points().iter().enumerate() {
            let r2: f64 = c.iter().zip(x).map(|(u, v)| (u - v) * (u - v)).sum();
            row[k] = (-r2).exp();
        }
        let y = samples.y(s);
        for j in 0..n {
            let rj = row[j];
            if rj == 0.0 {
                continue;
            }
            rhs[j] += rj * y;
            // upper triangle only, mirrored below
            for i in 0..=j {
                gram[(i, j)] += row[i] * rj;
            }
        }
    }
    for j in 0..n {
        gram[(j, j)] += lambda;
        for i in 0..j {
            gram[(j, i)] = gram[(i, j)];
        }
    }
    let chol = gram.cholesky().ok_or_else(|| {
        Error::Singular(format!("{n} centers, lambda = {lambda:e}, Gram matrix not positive definite"))
    })?;
    let coeffs = chol.solve(&rhs);
    if coeffs.iter().any(|a| !a.is_finite()) {
        return Err(Error::Singular("non-finite coefficients".into()));
    }
    GaussianNet::new(centers.clone(), coeffs.iter().copied().collect())
}

/// Default fitting design: the centers lying in `domain` plus a grid over
/// `domain` three times finer than the center spacing.
pub fn fit_sample_points(centers: &CenterSet, domain: &Domain) -> Result<PointSet> {
    if centers.dim() != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: centers.dim(),
            got: domain.dim(),
        });
    }
    let spacing = if centers.separation().is_finite() {
        centers.separation() / 3.0
    } else {
        1.0 / 3.0
    };
    let mut points = domain.grid_with_spacing(spacing);
    for c in centers.points().iter().filter(|c| domain.contains(c)) {
        points.push(c);
    }
    Ok(points)
}

/// Samples `f` on [`fit_sample_points`] and fits the coefficients.
pub fn fit_to_function(centers: &CenterSet, f: &dyn Function, domain: &Domain, lambda: f64) -> Result<GaussianNet> {
    let points = fit_sample_points(centers, domain)?;
    let samples = Samples::from_function(&points, f)?;
    fit_gaussian_coeffs(centers, &samples, lambda)
}

/// Box `[-c m - 3, c m + 3]^d` standing in for `R^d` in sup-norm estimates.
pub fn sup_box(m: usize, d: usize, c: f64) -> Result<Domain> {
    let r = c * m as f64 + SUP_MARGIN;
    Domain::cube(d, -r, r)
}

/// Evaluation points for the unbounded-domain sup norm: a grid of spacing
/// `min(0.05, 1/(4m))` for `d <= 2`, otherwise `10^5` quasi-random points.
pub fn sup_points(m: usize, d: usize, c: f64, seed: u64) -> Result<PointSet> {
    let domain = sup_box(m, d, c)?;
    Ok(if d <= 2 {
        domain.grid_with_spacing(0.05f64.min(1.0 / (4.0 * m as f64)))
    } else {
        domain.quasi_random(100_000, seed)
    })
}

/// Tree of bivariate Gaussian networks.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeGaussianNet {
    topology: TreeTopology,
    nodes: Vec<GaussianNet>,
}

impl TreeGaussianNet {
    pub fn new(topology: TreeTopology, nodes: Vec<GaussianNet>) -> Result<Self> {
        if nodes.len() != topology.node_count() {
            return Err(Error::DimensionMismatch {
                expected: topology.node_count(),
                got: nodes.len(),
            });
        }
        if let Some(n) = nodes.iter().find(|n| n.centers.dim() != 2) {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: n.centers.dim(),
            });
        }
        Ok(TreeGaussianNet { topology, nodes })
    }

    pub fn topology(&self) -> &TreeTopology {
        &self.topology
    }

    pub fn nodes(&self) -> &[GaussianNet] {
        &self.nodes
    }

    pub fn node(&self, flat: usize) -> &GaussianNet {
        &self.nodes[flat]
    }
}

impl Function for TreeGaussianNet {
    fn arity(&self) -> usize {
        self.topology.leaves()
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        self.topology.check_input(x)?;
        let v = self.topology.evaluate(x, |i, a, b| self.nodes[i].value(&[a, b]));
        Ok(v[v.len() - 1])
    }
}

/// Fits every vertex independently against its constituent. Vertices are
/// fitted in parallel; each fit owns its own linear system.
pub fn fit_tree_gaussian(
    topology: &TreeTopology,
    oracles: &[Option<Bivariate>],
    centers: &[CenterSet],
    domains: &[Domain],
    lambda: f64,
) -> Result<TreeGaussianNet> {
    let n = topology.node_count();
    for (what, len) in [("oracles", oracles.len()), ("center sets", centers.len()), ("domains", domains.len())] {
        if len != n {
            return Err(Error::invalid(format!("{what}: expected {n} per-vertex entries, got {len}")));
        }
    }
    let nodes = (0..n)
        .into_par_iter()
        .map(|i| {
            let node = topology.node_at(i);
            let oracle = oracles[i].clone().ok_or_else(|| Error::Vertex {
                node,
                reason: "no constituent oracle; use end-to-end training instead".into(),
            })?;
            fit_to_function(&centers[i], &BivariateFn(oracle), &domains[i], lambda).map_err(|e| Error::Vertex {
                node,
                reason: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    TreeGaussianNet::new(topology.clone(), nodes)
}

/// [`fit_tree_gaussian`] on a target's constituents and node domains, with
/// the same grid refinement `m` at every vertex.
pub fn fit_tree_gaussian_grid(target: &CompositionalTarget, m: usize, lambda: f64) -> Result<TreeGaussianNet> {
    let centers = target
        .node_domains()
        .iter()
        .map(|d| grid_centers_in(m, d))
        .collect::<Result<Vec<_>>>()?;
    let oracles: Vec<Option<Bivariate>> = target.constituents().iter().cloned().map(Some).collect();
    fit_tree_gaussian(target.topology(), &oracles, &centers, target.node_domains(), lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::from_fn;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_examples() {
        let g = grid_centers(2, 1, 1.0).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.points().coords(), &[-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(g.separation(), 0.5);

        let g = grid_centers(1, 2, 1.0).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.separation(), 1.0);
        assert!(g.points().iter().all(|p| p.iter().all(|v| [-1.0, 0.0, 1.0].contains(v))));
    }

    #[test]
    fn grid_cap_is_enforced() {
        let err = grid_centers_capped(4, 3, 1.0, 1000).unwrap_err();
        assert!(matches!(err, Error::ResourceLimit { requested: 35937, cap: 1000, .. }));
        assert!(matches!(grid_centers(64, 3, 1.0), Err(Error::ResourceLimit { .. })));
        assert!(grid_centers(0, 1, 1.0).is_err());
        assert!(grid_centers(1, 1, 0.0).is_err());
    }

    #[test]
    fn grid_in_unit_square() {
        let g = grid_centers_in(4, &Domain::cube(2, -1.0, 1.0).unwrap()).unwrap();
        assert_eq!(g.len(), 81);
        assert_eq!(g.separation(), 0.25);
    }

    #[test]
    fn separation_examples() {
        let p = PointSet::new(1, vec![0.0, 1.0, 3.0]).unwrap();
        assert_eq!(minimal_separation(&p).unwrap(), 1.0);
        let p = PointSet::new(2, vec![0.0, 0.0, 3.0, 4.0]).unwrap();
        assert_eq!(minimal_separation(&p).unwrap(), 5.0);
        let p = PointSet::new(2, vec![0.0, 0.0, 1.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(minimal_separation(&p), Err(Error::Degenerate(_))));
        assert!(minimal_separation(&PointSet::new(1, vec![1.0]).unwrap()).is_err());
    }

    fn brute(points: &PointSet) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..points.len() {
            for j in 0..points.len() {
                if i != j {
                    best = best.min(distance(points.point(i), points.point(j)));
                }
            }
        }
        best
    }

    #[test]
    fn accelerated_paths_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for d in [1usize, 2, 3, 5] {
            let coords: Vec<f64> = (0..5000 * d).map(|_| rng.gen_range(-10.0..10.0)).collect();
            let p = PointSet::new(d, coords).unwrap();
            let expected = brute(&p);
            assert_eq!(minimal_separation(&p).unwrap(), expected, "d = {d}");
            assert_eq!(sweep_separation(&p), expected);
        }
        let g = grid_centers(3, 2, 8.0).unwrap();
        assert!(g.len() > BRUTE_FORCE_LIMIT);
        // coordinates reach 24, so differences carry a few ulps of 24
        assert!((minimal_separation(g.points()).unwrap() - 1.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn thousand_random_points_match_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let coords: Vec<f64> = (0..2000).map(|_| rng.gen::<f64>()).collect();
        let p = PointSet::new(2, coords).unwrap();
        assert_eq!(minimal_separation(&p).unwrap(), brute(&p));
    }

    #[test]
    fn recovers_a_single_bump_in_the_span() {
        let centers = grid_centers(1, 1, 1.0).unwrap();
        let f = from_fn(1, |x| (-(x[0] - 1.0).powi(2)).exp());
        let domain = Domain::cube(1, -4.0, 4.0).unwrap();
        let points = domain.grid(801);
        let samples = Samples::from_function(&points, &f).unwrap();
        let net = fit_gaussian_coeffs(&centers, &samples, 0.0).unwrap();
        // centers are -1, 0, 1
        assert!((net.coeffs()[2] - 1.0).abs() < 1e-8);
        assert!(net.coeffs()[0].abs() < 1e-8 && net.coeffs()[1].abs() < 1e-8);
        let sup = points
            .iter()
            .map(|p| (net.value(p) - f.eval(p).unwrap()).abs())
            .fold(0.0, f64::max);
        assert!(sup < 1e-8);
    }

    #[test]
    fn zero_target_gives_zero_coefficients() {
        let centers = grid_centers(2, 1, 1.0).unwrap();
        let zero = from_fn(1, |_| 0.0);
        let net = fit_to_function(&centers, &zero, &sup_box(2, 1, 1.0).unwrap(), DEFAULT_LAMBDA).unwrap();
        assert!(net.coeffs().iter().all(|&a| a == 0.0));
    }

    #[test]
    fn two_centers_hand_solved() {
        // centers at +-1/2, G = 1*g(-1/2) + 2*g(1/2), samples at -1, 0, 1
        let centers = CenterSet::new(PointSet::new(1, vec![-0.5, 0.5]).unwrap()).unwrap();
        let g = |x: f64, c: f64| (-(x - c) * (x - c)).exp();
        let xs = [-1.0, 0.0, 1.0];
        let ys: Vec<f64> = xs.iter().map(|&x| g(x, -0.5) + 2.0 * g(x, 0.5)).collect();
        // oracle: 2x2 normal equations by Cramer's rule
        let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&x, &y) in xs.iter().zip(&ys) {
            let (p, q) = (g(x, -0.5), g(x, 0.5));
            s11 += p * p;
            s12 += p * q;
            s22 += q * q;
            r1 += p * y;
            r2 += q * y;
        }
        let det = s11 * s22 - s12 * s12;
        let oracle = [(r1 * s22 - r2 * s12) / det, (s11 * r2 - s12 * r1) / det];
        assert!((oracle[0] - 1.0).abs() < 1e-12 && (oracle[1] - 2.0).abs() < 1e-12);
        let samples = Samples::new(1, xs.to_vec(), ys).unwrap();
        let net = fit_gaussian_coeffs(&centers, &samples, 0.0).unwrap();
        assert!((net.coeffs()[0] - 1.0).abs() < 1e-10);
        assert!((net.coeffs()[1] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn fit_errors() {
        let centers = grid_centers(1, 1, 1.0).unwrap();
        let few = Samples::new(1, vec![0.0, 1.0], vec![0.0, 0.0]).unwrap();
        assert!(fit_gaussian_coeffs(&centers, &few, 0.0).is_err());
        let wrong_dim = Samples::new(2, vec![0.0; 8], vec![0.0; 4]).unwrap();
        assert!(matches!(
            fit_gaussian_coeffs(&centers, &wrong_dim, 0.0),
            Err(Error::DimensionMismatch { .. })
        ));
        let ok = Samples::new(1, vec![0.0, 1.0, 2.0], vec![0.0; 3]).unwrap();
        assert!(fit_gaussian_coeffs(&centers, &ok, -1.0).is_err());
        // all samples at one point: rank one
        let same = Samples::new(1, vec![0.3; 5], vec![1.0; 5]).unwrap();
        assert!(matches!(fit_gaussian_coeffs(&centers, &same, 0.0), Err(Error::Singular(_))));
        assert!(fit_gaussian_coeffs(&centers, &same, 1e-6).is_ok());
    }

    #[test]
    fn text_round_trips() {
        let centers = grid_centers(2, 2, 0.5).unwrap();
        let back = CenterSet::from_text(&centers.to_text()).unwrap();
        assert_eq!(back, centers);
        let coeffs = (0..centers.len()).map(|i| (i as f64).sin() / 7.0).collect();
        let net = GaussianNet::new(centers, coeffs).unwrap();
        assert_eq!(GaussianNet::from_text(&net.to_text()).unwrap(), net);
        assert!(GaussianNet::from_text(&net.centers().to_text()).is_err());
    }

    #[test]
    fn tree_fit_requires_oracles() {
        let topo = TreeTopology::new(4).unwrap();
        let unit = Domain::cube(2, -1.0, 1.0).unwrap();
        let centers = vec![grid_centers_in(1, &unit).unwrap(); 3];
        let domains = vec![unit; 3];
        let f: Bivariate = std::sync::Arc::new(|a: f64, b: f64| a * b);
        let oracles = vec![Some(f.clone()), None, Some(f)];
        let err = fit_tree_gaussian(&topo, &oracles, &centers, &domains, DEFAULT_LAMBDA).unwrap_err();
        assert!(matches!(err, Error::Vertex { node, .. } if node.level == 1 && node.index == 1));
    }
}

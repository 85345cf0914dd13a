//! Boxes, point sets and labelled samples.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::function::Function;

/// Axis-aligned box with finite bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Domain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                got: upper.len(),
            });
        }
        if lower.is_empty() {
            return Err(Error::invalid("domain must have at least one coordinate"));
        }
        for (i, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(Error::invalid(format!(
                    "coordinate {i}: bounds [{lo}, {hi}] must be finite with lower < upper"
                )));
            }
        }
        Ok(Domain { lower, upper })
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        for (i, &v) in x.iter().enumerate() {
            // NaN fails both comparisons and is reported as out of domain
            if !(v >= self.lower[i] && v <= self.upper[i]) {
                return Err(Error::OutOfDomain {
                    index: i,
                    value: v,
                    lower: self.lower[i],
                    upper: self.upper[i],
                });
            }
        }
        Ok(())
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.check(x).is_ok()
    }

    /// Regular grid with `per_axis` points on every axis, endpoints included.
    pub fn grid(&self, per_axis: usize) -> PointSet {
        let per_axis = per_axis.max(2);
        let d = self.dim();
        let total = per_axis.pow(d as u32);
        let mut coords = Vec::with_capacity(total * d);
        let mut idx = vec![0usize; d];
        for _ in 0..total {
            for (k, &i) in idx.iter().enumerate() {
                let t = i as f64 / (per_axis - 1) as f64;
                coords.push(self.lower[k] + (self.upper[k] - self.lower[k]) * t);
            }
            for slot in idx.iter_mut().rev() {
                *slot += 1;
                if *slot < per_axis {
                    break;
                }
                *slot = 0;
            }
        }
        PointSet { dim: d, coords }
    }

    /// Grid with roughly `total` points overall.
    pub fn grid_with_total(&self, total: usize) -> PointSet {
        let per_axis = (total as f64).powf(1.0 / self.dim() as f64).ceil() as usize;
        self.grid(per_axis)
    }

    /// Grid whose spacing along every axis is at most `spacing`.
    pub fn grid_with_spacing(&self, spacing: f64) -> PointSet {
        let widest = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| hi - lo)
            .fold(0.0, f64::max);
        let per_axis = (widest / spacing).ceil() as usize + 1;
        self.grid(per_axis)
    }

    /// Randomly shifted Halton points (Cranley-Patterson rotation by a seeded
    /// offset), mapped into the box.
    pub fn quasi_random(&self, count: usize, seed: u64) -> PointSet {
        const PRIMES: [u64; 24] = [
            2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79,
            83, 89,
        ];
        let d = self.dim();
        assert!(d <= PRIMES.len(), "quasi-random sampling supports up to 24 dimensions");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        let mut coords = Vec::with_capacity(count * d);
        for i in 1..=count as u64 {
            for k in 0..d {
                let u = (radical_inverse(i, PRIMES[k]) + shift[k]).fract();
                coords.push(self.lower[k] + (self.upper[k] - self.lower[k]) * u);
            }
        }
        PointSet { dim: d, coords }
    }

    pub fn uniform(&self, count: usize, rng: &mut impl Rng) -> PointSet {
        let d = self.dim();
        let mut coords = Vec::with_capacity(count * d);
        for _ in 0..count {
            for k in 0..d {
                coords.push(rng.gen_range(self.lower[k]..self.upper[k]));
            }
        }
        PointSet { dim: d, coords }
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

/// Flat list of points of a common dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || !coords.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "{} coordinates cannot form points of dimension {dim}",
                coords.len()
            )));
        }
        Ok(PointSet { dim, coords })
    }

    pub fn from_points(dim: usize, points: &[Vec<f64>]) -> Result<Self> {
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            coords.extend_from_slice(p);
        }
        Ok(PointSet { dim, coords })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn push(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.dim);
        self.coords.extend_from_slice(p);
    }
}

/// Inputs with scalar targets, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Samples {
    dim: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl Samples {
    pub fn new(dim: usize, xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if dim == 0 || xs.len() != dim * ys.len() {
            return Err(Error::invalid(format!(
                "{} inputs of dimension {dim} do not match {} targets",
                xs.len(),
                ys.len()
            )));
        }
        Ok(Samples { dim, xs, ys })
    }

    /// Labels every point with `f`.
    pub fn from_function(points: &PointSet, f: &dyn Function) -> Result<Self> {
        if f.arity() != points.dim() {
            return Err(Error::DimensionMismatch {
                expected: f.arity(),
                got: points.dim(),
            });
        }
        let ys = points.iter().map(|p| f.eval(p)).collect::<Result<Vec<_>>>()?;
        Ok(Samples {
            dim: points.dim(),
            xs: points.coords().to_vec(),
            ys,
        })
    }

    /// `count` points drawn uniformly from `domain` with a seeded generator.
    pub fn uniform(domain: &Domain, count: usize, seed: u64, f: &dyn Function) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = domain.uniform(count, &mut rng);
        Self::from_function(&points, f)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.xs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn y(&self, i: usize) -> f64 {
        self.ys[i]
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn subset(&self, indices: &[usize]) -> Samples {
        let mut xs = Vec::with_capacity(indices.len() * self.dim);
        let mut ys = Vec::with_capacity(indices.len());
        for &i in indices {
            xs.extend_from_slice(self.x(i));
            ys.push(self.ys[i]);
        }
        Samples {
            dim: self.dim,
            xs,
            ys,
        }
    }

    pub fn shuffled_indices(&self, rng: &mut impl Rng) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(rng);
        idx
    }

    /// Mean of squared targets, the MSE of the zero predictor.
    pub fn mean_square(&self) -> f64 {
        self.ys.iter().map(|y| y * y).sum::<f64>() / self.len() as f64
    }

    /// Variance of the targets, the MSE of the best constant predictor.
    pub fn variance(&self) -> f64 {
        let n = self.len() as f64;
        let mean = self.ys.iter().sum::<f64>() / n;
        self.ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_validation() {
        assert!(Domain::new(vec![0.0], vec![0.0]).is_err());
        assert!(Domain::new(vec![0.0], vec![f64::INFINITY]).is_err());
        assert!(Domain::new(vec![0.0, 1.0], vec![1.0]).is_err());
        let d = Domain::cube(2, -1.0, 1.0).unwrap();
        assert!(d.contains(&[1.0, -1.0]));
        assert!(matches!(
            d.check(&[1.5, 0.0]),
            Err(Error::OutOfDomain { index: 0, .. })
        ));
        assert!(d.check(&[f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn grid_includes_corners() {
        let d = Domain::cube(2, -1.0, 1.0).unwrap();
        let g = d.grid(3);
        assert_eq!(g.len(), 9);
        assert_eq!(g.point(0), &[-1.0, -1.0]);
        assert_eq!(g.point(8), &[1.0, 1.0]);
        assert_eq!(g.point(4), &[0.0, 0.0]);
    }

    #[test]
    fn quasi_random_stays_inside_and_is_deterministic() {
        let d = Domain::new(vec![-2.0, 0.0, 5.0], vec![2.0, 1.0, 6.0]).unwrap();
        let a = d.quasi_random(500, 9);
        let b = d.quasi_random(500, 9);
        assert_eq!(a, b);
        assert!(a.iter().all(|p| d.contains(p)));
        assert_ne!(a, d.quasi_random(500, 10));
    }

    #[test]
    fn radical_inverse_base_two() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(2, 2), 0.25);
        assert_eq!(radical_inverse(3, 2), 0.75);
    }
}

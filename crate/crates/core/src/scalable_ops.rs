//! Scalable shift-invariant operators: layers of one bivariate block applied
//! to adjacent disjoint pairs, halving the width until a scalar remains.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::function::{bivariate, check_arity, Bivariate, Function};
use crate::targets::CompositionalTarget;
use crate::tree::TreeTopology;

/// Largest supported depth; the operator consumes `2^M` inputs.
pub const MAX_DEPTH: u32 = 24;

/// `out[i] = H(x[2i], x[2i+1])`. With `mirror`, pairs starting in the second
/// half of `x` use `H(x[2i+1], x[2i])`.
pub fn apply_layer(block: &dyn Fn(f64, f64) -> f64, x: &[f64], mirror: bool) -> Result<Vec<f64>> {
    if x.len() < 2 || !x.len().is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "layer input length must be even and at least 2, got {}",
            x.len()
        )));
    }
    let half = x.len() / 2;
    Ok(x
        .chunks_exact(2)
        .enumerate()
        .map(|(i, p)| {
            if mirror && 2 * i >= half {
                block(p[1], p[0])
            } else {
                block(p[0], p[1])
            }
        })
        .collect())
}

/// A width-halving layer that can be checked for shift invariance.
pub trait Layer {
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// The unreflected half operator applied to one half of the input.
    fn apply_half(&self, x: &[f64]) -> Result<Vec<f64>>;

    fn mirrored(&self) -> bool {
        false
    }
}

#[derive(Clone)]
pub struct BlockLayer {
    pub block: Bivariate,
    pub mirror: bool,
}

impl Layer for BlockLayer {
    fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        apply_layer(&*self.block, x, self.mirror)
    }

    fn apply_half(&self, x: &[f64]) -> Result<Vec<f64>> {
        apply_layer(&*self.block, x, false)
    }

    fn mirrored(&self) -> bool {
        self.mirror
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Counterexample {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub whole: Vec<f64>,
    pub split: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShiftCheck {
    pub trials: usize,
    pub counterexample: Option<Counterexample>,
}

impl ShiftCheck {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

/// Compares `layer(x ++ y)` bit for bit with `H'(x) ++ H'(y)`, or with
/// `H'(x) ++ reverse(H'(reverse(y)))` for mirrored layers, on seeded inputs
/// drawn uniformly from `[-1, 1]`.
pub fn check_shift_invariance(layer: &dyn Layer, width: usize, trials: usize, seed: u64) -> Result<ShiftCheck> {
    if trials == 0 {
        return Err(Error::invalid("at least one trial is required"));
    }
    if width < 4 || !width.is_multiple_of(4) {
        return Err(Error::invalid(format!(
            "width must be a positive multiple of 4 so both halves hold whole pairs, got {width}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = width / 2;
    for _ in 0..trials {
        let left: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let right: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let whole = layer.apply(&[left.as_slice(), right.as_slice()].concat())?;
        let mut split = layer.apply_half(&left)?;
        if layer.mirrored() {
            let reversed: Vec<f64> = right.iter().rev().copied().collect();
            split.extend(layer.apply_half(&reversed)?.into_iter().rev());
        } else {
            split.extend(layer.apply_half(&right)?);
        }
        let same = whole.len() == split.len() && whole.iter().zip(&split).all(|(a, b)| a.to_bits() == b.to_bits());
        if !same {
            return Ok(ShiftCheck {
                trials,
                counterexample: Some(Counterexample {
                    left,
                    right,
                    whole,
                    split,
                }),
            });
        }
    }
    Ok(ShiftCheck {
        trials,
        counterexample: None,
    })
}

/// `K = H_2 o H_4 o ... o H_{2^M}` on `2^M` inputs.
#[derive(Clone)]
pub struct ScalableOperator {
    depth: u32,
    block: Bivariate,
    mirror: bool,
}

impl std::fmt::Debug for ScalableOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalableOperator")
            .field("depth", &self.depth)
            .field("mirror", &self.mirror)
            .finish_non_exhaustive()
    }
}

pub fn build_scalable_operator(block: Bivariate, depth: u32, mirror: bool) -> Result<ScalableOperator> {
    if depth == 0 || depth > MAX_DEPTH {
        return Err(Error::invalid(format!("depth must lie in 1..={MAX_DEPTH}, got {depth}")));
    }
    Ok(ScalableOperator { depth, block, mirror })
}

impl ScalableOperator {
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn mirror(&self) -> bool {
        self.mirror
    }

    pub fn block(&self) -> &Bivariate {
        &self.block
    }

    pub fn input_width(&self) -> usize {
        1 << self.depth
    }

    /// Number of block evaluations per call, `2^M - 1`.
    pub fn block_applications(&self) -> usize {
        self.input_width() - 1
    }

    pub fn layer(&self) -> BlockLayer {
        BlockLayer {
            block: self.block.clone(),
            mirror: self.mirror,
        }
    }

    /// Outputs of every layer, widest first, scalar last.
    pub fn eval_layers(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        check_arity(self.input_width(), x)?;
        let mut layers = Vec::with_capacity(self.depth as usize);
        let mut cur = x.to_vec();
        for _ in 0..self.depth {
            cur = apply_layer(&*self.block, &cur, self.mirror)?;
            layers.push(cur.clone());
        }
        Ok(layers)
    }
}

impl Function for ScalableOperator {
    fn arity(&self) -> usize {
        self.input_width()
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        check_arity(self.input_width(), x)?;
        let mut cur = apply_layer(&*self.block, x, self.mirror)?;
        while cur.len() > 1 {
            cur = apply_layer(&*self.block, &cur, self.mirror)?;
        }
        Ok(cur[0])
    }
}

/// The balanced-tree target whose every vertex is the block, with reflected
/// arguments at the vertices a mirrored layer reflects.
pub fn operator_as_tree_target(op: &ScalableOperator) -> Result<CompositionalTarget> {
    let topo = TreeTopology::new(op.input_width())?;
    let block = op.block.clone();
    let reflected = {
        let b = op.block.clone();
        bivariate(move |x, y| b(y, x))
    };
    let fns = topo
        .nodes()
        .map(|node| {
            let width = topo.level_width(node.level);
            if op.mirror && 2 * node.index >= width {
                reflected.clone()
            } else {
                block.clone()
            }
        })
        .collect();
    Ok(CompositionalTarget::from_flat(topo, fns)?.with_label(format!(
        "scalable(M={}{})",
        op.depth,
        if op.mirror { ",mirror" } else { "" }
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layer_examples() {
        let sum = |a: f64, b: f64| a + b;
        assert_eq!(apply_layer(&sum, &[1.0, 2.0, 3.0, 4.0], false).unwrap(), vec![3.0, 7.0]);
        assert_eq!(apply_layer(&f64::max, &[5.0, 1.0], false).unwrap(), vec![5.0]);
        let diff = |a: f64, b: f64| a - b;
        assert_eq!(apply_layer(&diff, &[1.0, 2.0, 3.0, 4.0], true).unwrap(), vec![-1.0, 1.0]);
        assert!(apply_layer(&sum, &[1.0, 2.0, 3.0], false).is_err());
        assert!(apply_layer(&sum, &[], false).is_err());
    }

    #[test]
    fn operator_examples() {
        let sum = build_scalable_operator(bivariate(|a, b| a + b), 3, false).unwrap();
        assert_eq!(sum.eval(&[1.0; 8]).unwrap(), 8.0);
        assert_eq!(sum.block_applications(), 7);
        let max = build_scalable_operator(bivariate(f64::max), 3, false).unwrap();
        let x = [0.3, -2.0, 7.5, 1.0, 7.4, 0.0, -9.0, 2.0];
        assert_eq!(max.eval(&x).unwrap(), 7.5);
        let one = build_scalable_operator(bivariate(|a, b| a * b), 1, false).unwrap();
        assert_eq!(one.eval(&[3.0, -2.0]).unwrap(), -6.0);
        assert!(build_scalable_operator(bivariate(|a, _| a), 0, false).is_err());
        assert!(max.eval(&[1.0; 4]).is_err());
    }

    #[test]
    fn sum_tree_matches_coordinate_sum() {
        let op = build_scalable_operator(bivariate(|a, b| a + b), 2, false).unwrap();
        let t = operator_as_tree_target(&op).unwrap();
        assert_eq!(t.topology().leaves(), 4);
        assert_eq!(t.eval(&[0.5, 0.25, -1.0, 2.0]).unwrap(), 1.75);
    }

    #[test]
    fn block_layers_are_shift_invariant() {
        let layer = BlockLayer {
            block: bivariate(|a, b| (a * 1.3 - b).sin() + a * b),
            mirror: false,
        };
        assert!(check_shift_invariance(&layer, 16, 50, 1).unwrap().passed());
        let mirrored = BlockLayer { mirror: true, ..layer };
        assert!(check_shift_invariance(&mirrored, 16, 50, 1).unwrap().passed());
        assert!(check_shift_invariance(&mirrored, 6, 1, 1).is_err());
        assert!(check_shift_invariance(&mirrored, 8, 0, 1).is_err());
    }
}

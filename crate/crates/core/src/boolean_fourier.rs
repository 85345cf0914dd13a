//! Fourier expansion of real functions on the Boolean cube `{-1, 1}^n`.
//!
//! A subset `S` of `{1..n}` is a bitmask with bit `i` standing for variable
//! `i + 1`. Truth tables use the same indexing: entry `m` is the value at the
//! point with `x_i = -1` exactly when bit `i` of `m` is set.

use std::cmp::Ordering;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const MAX_VARIABLES: usize = 20;

/// In-place unnormalised Walsh-Hadamard butterfly.
pub fn fwht(values: &mut [f64]) {
    debug_assert!(values.len().is_power_of_two());
    let mut h = 1;
    while h < values.len() {
        for block in values.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (u, v) = (*a, *b);
                *a = u + v;
                *b = u - v;
            }
        }
        h *= 2;
    }
}

fn check_n(n: usize) -> Result<()> {
    if n > MAX_VARIABLES {
        return Err(Error::ResourceLimit {
            what: "boolean variables",
            requested: n,
            cap: MAX_VARIABLES,
        });
    }
    Ok(())
}

/// The cube point indexed by `mask`.
pub fn cube_point(n: usize, mask: usize) -> Vec<f64> {
    (0..n).map(|i| if mask >> i & 1 == 1 { -1.0 } else { 1.0 }).collect()
}

/// Dense table of all `2^n` coefficients, indexed by subset bitmask.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierTable {
    n: usize,
    coeffs: Vec<f64>,
}

impl FourierTable {
    pub fn new(n: usize, coeffs: Vec<f64>) -> Result<Self> {
        check_n(n)?;
        if coeffs.len() != 1 << n {
            return Err(Error::DimensionMismatch {
                expected: 1 << n,
                got: coeffs.len(),
            });
        }
        Ok(FourierTable { n, coeffs })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(FourierTable {
            n,
            coeffs: vec![0.0; 1 << n],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeff(&self, subset: usize) -> f64 {
        self.coeffs[subset]
    }

    /// `sum_S f^(S)^2`.
    pub fn squared_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn nonzero(&self) -> usize {
        self.coeffs.iter().filter(|c| **c != 0.0).count()
    }

    /// `sum_S f^(S) prod_{i in S} x_i`.
    pub fn reconstruct(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let mut point = 0usize;
        for (i, &v) in x.iter().enumerate() {
            if v == -1.0 {
                point |= 1 << i;
            } else if v != 1.0 {
                return Err(Error::OutOfDomain {
                    index: i,
                    value: v,
                    lower: -1.0,
                    upper: 1.0,
                });
            }
        }
        Ok(self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(s, c)| if (s & point).count_ones() % 2 == 1 { -c } else { *c })
            .sum())
    }

    /// Values at every cube point, in truth-table order.
    pub fn to_values(&self) -> Vec<f64> {
        let mut v = self.coeffs.clone();
        fwht(&mut v);
        v
    }

    pub const CSV_HEADER: &'static str = "subset,coefficient";

    /// Every coefficient as `0x<bitmask>,<value>`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for (s, c) in self.coeffs.iter().enumerate() {
            let _ = writeln!(out, "{s:#x},{c:e}");
        }
        out
    }
}

/// Coefficients of a truth table given in truth-table order.
pub fn expand_values(values: &[f64]) -> Result<FourierTable> {
    if !values.len().is_power_of_two() {
        return Err(Error::invalid(format!(
            "truth table length must be a power of two, got {}",
            values.len()
        )));
    }
    let n = values.len().trailing_zeros() as usize;
    check_n(n)?;
    let mut coeffs = values.to_vec();
    fwht(&mut coeffs);
    let scale = (-(n as i32) as f64).exp2();
    coeffs.iter_mut().for_each(|c| *c *= scale);
    Ok(FourierTable { n, coeffs })
}

/// Evaluates `f` at all `2^n` points and expands it.
pub fn fourier_expand(n: usize, f: impl Fn(&[f64]) -> f64) -> Result<FourierTable> {
    check_n(n)?;
    let values: Vec<f64> = (0..1usize << n).map(|m| f(&cube_point(n, m))).collect();
    expand_values(&values)
}

/// Keeps the coefficients of degree at most `k`; returns the squared L2
/// error, the mass of the dropped coefficients.
pub fn low_order_approx(table: &FourierTable, k: usize) -> Result<(FourierTable, f64)> {
    if k > table.n {
        return Err(Error::invalid(format!("degree {k} exceeds n = {}", table.n)));
    }
    let mut kept = table.clone();
    let mut err = 0.0;
    for (s, c) in kept.coeffs.iter_mut().enumerate() {
        if s.count_ones() as usize > k {
            err += *c * *c;
            *c = 0.0;
        }
    }
    Ok((kept, err))
}

/// Lexicographic order on the sorted element lists of two subsets.
pub fn lex_subset_cmp(mut a: usize, mut b: usize) -> Ordering {
    loop {
        match (a, b) {
            (0, 0) => return Ordering::Equal,
            (0, _) => return Ordering::Less,
            (_, 0) => return Ordering::Greater,
            _ => {
                let (la, lb) = (a.trailing_zeros(), b.trailing_zeros());
                if la != lb {
                    return la.cmp(&lb);
                }
                a &= a - 1;
                b &= b - 1;
            }
        }
    }
}

/// Keeps the `t` largest-magnitude coefficients, ties broken by
/// lexicographic subset order.
pub fn sparse_approx(table: &FourierTable, t: usize) -> Result<(FourierTable, f64)> {
    let total = table.coeffs.len();
    if t == 0 || t > total {
        return Err(Error::invalid(format!("coefficient count must lie in 1..={total}, got {t}")));
    }
    let mut order: Vec<usize> = (0..total).collect();
    order.sort_by(|&a, &b| {
        table.coeffs[b]
            .abs()
            .total_cmp(&table.coeffs[a].abs())
            .then_with(|| lex_subset_cmp(a, b))
    });
    let mut kept = FourierTable::zeros(table.n)?;
    for &s in &order[..t] {
        kept.coeffs[s] = table.coeffs[s];
    }
    let err = order[t..].iter().map(|&s| table.coeffs[s].powi(2)).sum();
    Ok((kept, err))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BooleanFunction {
    Parity,
    Majority,
    And,
    /// Values uniform in `[-1, 1]`.
    Random { seed: u64 },
}

impl BooleanFunction {
    /// Parses `parity`, `majority`, `and` or `random` / `random(seed=K)`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        Ok(match s {
            "parity" => BooleanFunction::Parity,
            "majority" => BooleanFunction::Majority,
            "and" => BooleanFunction::And,
            "random" => BooleanFunction::Random { seed: 0 },
            _ => {
                let seed = s
                    .strip_prefix("random(seed=")
                    .and_then(|r| r.strip_suffix(')'))
                    .and_then(|v| v.trim().parse().ok())
                    .ok_or_else(|| Error::invalid(format!("unknown Boolean function {s:?}")))?;
                BooleanFunction::Random { seed }
            }
        })
    }

    pub fn label(&self) -> String {
        match self {
            BooleanFunction::Parity => "parity".into(),
            BooleanFunction::Majority => "majority".into(),
            BooleanFunction::And => "and".into(),
            BooleanFunction::Random { seed } => format!("random(seed={seed})"),
        }
    }

    /// Values at every cube point in truth-table order. Majority needs odd
    /// `n`; AND is `+1` only when every input is `+1`.
    pub fn truth_table(&self, n: usize) -> Result<Vec<f64>> {
        check_n(n)?;
        let size = 1usize << n;
        Ok(match self {
            BooleanFunction::Parity => (0..size)
                .map(|m| if m.count_ones() % 2 == 1 { -1.0 } else { 1.0 })
                .collect(),
            BooleanFunction::Majority => {
                if n.is_multiple_of(2) {
                    return Err(Error::invalid(format!("majority needs an odd number of inputs, got {n}")));
                }
                (0..size)
                    .map(|m| if 2 * (m.count_ones() as usize) < n { 1.0 } else { -1.0 })
                    .collect()
            }
            BooleanFunction::And => (0..size).map(|m| if m == 0 { 1.0 } else { -1.0 }).collect(),
            BooleanFunction::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                (0..size).map(|_| rng.gen_range(-1.0..=1.0)).collect()
            }
        })
    }

    pub fn expand(&self, n: usize) -> Result<FourierTable> {
        expand_values(&self.truth_table(n)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parity_and_constant() {
        let t = fourier_expand(2, |x| x[0] * x[1]).unwrap();
        assert_eq!(t.coeffs(), &[0.0, 0.0, 0.0, 1.0]);
        let one = fourier_expand(3, |_| 1.0).unwrap();
        assert_eq!(one.coeff(0), 1.0);
        assert!(one.coeffs()[1..].iter().all(|&c| c == 0.0));
    }

    #[test]
    fn and_on_two_bits() {
        let t = BooleanFunction::And.expand(2).unwrap();
        assert_eq!(t.coeffs(), &[-0.5, 0.5, 0.5, 0.5]);
        let (_, low) = low_order_approx(&t, 1).unwrap();
        assert_eq!(low, 0.25);
        let (kept, err) = sparse_approx(&t, 2).unwrap();
        assert_eq!(kept.coeffs(), &[-0.5, 0.5, 0.0, 0.0]);
        assert_eq!(err, 0.5);
    }

    #[test]
    fn parity_low_order_and_sparse() {
        let t = fourier_expand(2, |x| x[0] * x[1]).unwrap();
        let (approx, err) = low_order_approx(&t, 1).unwrap();
        assert_eq!(err, 1.0);
        assert_eq!(approx.nonzero(), 0);
        assert_eq!(low_order_approx(&t, 2).unwrap().1, 0.0);
        assert_eq!(sparse_approx(&t, 1).unwrap().1, 0.0);
        assert_eq!(sparse_approx(&t, 4).unwrap().1, 0.0);
        assert!(low_order_approx(&t, 3).is_err());
        assert!(sparse_approx(&t, 0).is_err());
        assert!(sparse_approx(&t, 5).is_err());
    }

    #[test]
    fn lexicographic_subsets() {
        // {} < {1} < {1,2} < {2}
        let mut v = vec![0b10, 0b11, 0b01, 0b00];
        v.sort_by(|&a, &b| lex_subset_cmp(a, b));
        assert_eq!(v, vec![0b00, 0b01, 0b11, 0b10]);
        assert_eq!(lex_subset_cmp(0b101, 0b11), Ordering::Greater);
    }

    #[test]
    fn majority_truth_table() {
        let t = BooleanFunction::Majority.expand(3).unwrap();
        for m in 0..8 {
            let x = cube_point(3, m);
            let truth = (x.iter().sum::<f64>()).signum();
            assert_eq!(t.reconstruct(&x).unwrap(), truth);
        }
        assert_eq!(low_order_approx(&t, 1).unwrap().1, 0.25);
        assert!(BooleanFunction::Majority.truth_table(4).is_err());
    }

    #[test]
    fn reconstruct_checks_inputs() {
        let t = FourierTable::zeros(2).unwrap();
        assert_eq!(t.reconstruct(&[1.0, -1.0]).unwrap(), 0.0);
        assert!(t.reconstruct(&[1.0, 0.5]).is_err());
        assert!(t.reconstruct(&[1.0]).is_err());
    }

    #[test]
    fn size_limits() {
        assert!(matches!(FourierTable::zeros(21), Err(Error::ResourceLimit { .. })));
        assert!(expand_values(&[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn csv_uses_hex_masks() {
        let t = BooleanFunction::And.expand(2).unwrap();
        let csv = t.to_csv();
        assert_eq!(csv.lines().nth(4).unwrap(), "0x3,5e-1");
    }

    #[test]
    fn parse_labels() {
        for f in [
            BooleanFunction::Parity,
            BooleanFunction::Majority,
            BooleanFunction::And,
            BooleanFunction::Random { seed: 9 },
        ] {
            assert_eq!(BooleanFunction::parse(&f.label()).unwrap(), f);
        }
        assert!(BooleanFunction::parse("xor").is_err());
    }
}

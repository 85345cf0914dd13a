//! Fourier expansion of a Boolean function with low-order and sparse
//! truncation errors.

use compo_approx::boolean_fourier::{low_order_approx, sparse_approx, BooleanFunction, FourierTable, MAX_VARIABLES};

use crate::artifacts::{fmt_f64, with_preamble, Artifacts, Table};
use crate::config::{join, parse_list, parse_value, unknown_key, ExperimentConfig, Preset};
use crate::error::{LabError, LabResult};

#[derive(Clone, Debug, PartialEq)]
pub struct BooleanConfig {
    pub preset: Preset,
    pub seed: u64,
    /// `parity`, `majority`, `and`, `random` (uses `seed`) or `random(seed=K)`.
    pub function: String,
    pub n: usize,
    /// Degrees for the low-order algorithm; empty means `0..=n`.
    pub ks: Vec<usize>,
    /// Budgets for the sparse algorithm; empty means powers of two up to `2^n`.
    pub ts: Vec<usize>,
}

impl ExperimentConfig for BooleanConfig {
    const NAME: &'static str = "boolean";

    fn defaults(preset: Preset) -> Self {
        BooleanConfig {
            preset,
            seed: 0,
            function: "parity".into(),
            n: if preset == Preset::Full { 16 } else { 8 },
            ks: Vec::new(),
            ts: Vec::new(),
        }
    }

    fn set(&mut self, key: &str, value: &str) -> LabResult<()> {
        match key {
            "seed" => self.seed = parse_value(key, value)?,
            "function" => self.function = value.to_string(),
            "n" => self.n = parse_value(key, value)?,
            "ks" => self.ks = parse_list(key, value)?,
            "ts" => self.ts = parse_list(key, value)?,
            _ => return Err(unknown_key(Self::NAME, key)),
        }
        Ok(())
    }

    fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("experiment", Self::NAME.into()),
            ("preset", self.preset.to_string()),
            ("seed", self.seed.to_string()),
            ("function", self.function.clone()),
            ("n", self.n.to_string()),
            ("ks", join(&self.ks)),
            ("ts", join(&self.ts)),
        ]
    }

    fn validate(&self) -> LabResult<()> {
        if self.n == 0 || self.n > MAX_VARIABLES {
            return Err(LabError::config(format!(
                "boolean: n must be in 1..={MAX_VARIABLES}, got {}",
                self.n
            )));
        }
        self.boolean_function()?;
        Ok(())
    }
}

impl BooleanConfig {
    pub fn boolean_function(&self) -> LabResult<BooleanFunction> {
        if self.function.trim() == "random" {
            return Ok(BooleanFunction::Random { seed: self.seed });
        }
        Ok(BooleanFunction::parse(&self.function)?)
    }

    fn degrees(&self) -> Vec<usize> {
        if self.ks.is_empty() {
            (0..=self.n).collect()
        } else {
            self.ks.clone()
        }
    }

    fn budgets(&self) -> Vec<usize> {
        if self.ts.is_empty() {
            (0..=self.n).map(|i| 1usize << i).collect()
        } else {
            self.ts.clone()
        }
    }
}

#[derive(Clone, Debug)]
pub struct BooleanOutcome {
    pub table: FourierTable,
    /// `(k, squared error)` of the low-order algorithm.
    pub low_order: Vec<(usize, f64)>,
    /// `(t, squared error)` of the sparse algorithm.
    pub sparse: Vec<(usize, f64)>,
    pub artifacts: Artifacts,
}

pub const ERRORS_HEADER: [&str; 8] = [
    "algorithm",
    "parameter",
    "kept_coefficients",
    "squared_error",
    "function",
    "n",
    "seed",
    "surrogate",
];

pub fn run_boolean_demo(cfg: &BooleanConfig) -> LabResult<BooleanOutcome> {
    cfg.validate()?;
    let f = cfg.boolean_function()?;
    let table = f.expand(cfg.n)?;
    let label = f.label();
    let mut errors = Table::new(&ERRORS_HEADER);
    let mut low_order = Vec::new();
    let mut sparse = Vec::new();
    let mut row = |alg: &str, p: usize, kept: &FourierTable, err: f64| {
        errors.push(vec![
            alg.into(),
            p.to_string(),
            kept.nonzero().to_string(),
            fmt_f64(err),
            label.clone(),
            cfg.n.to_string(),
            cfg.seed.to_string(),
            "exact_fwht".into(),
        ]);
    };
    for k in cfg.degrees() {
        let (kept, err) = low_order_approx(&table, k)?;
        row("low_order", k, &kept, err);
        low_order.push((k, err));
    }
    for t in cfg.budgets() {
        let (kept, err) = sparse_approx(&table, t)?;
        row("sparse", t, &kept, err);
        sparse.push((t, err));
    }
    let config = cfg.canonical();
    let mut artifacts = Artifacts::default();
    artifacts.add("boolean_coefficients.csv", with_preamble(&config, &table.to_csv()));
    artifacts.add("boolean_errors.csv", errors.render(&config));
    artifacts.seeds = vec![cfg.seed];
    Ok(BooleanOutcome {
        table,
        low_order,
        sparse,
        artifacts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(function: &str, n: usize) -> BooleanConfig {
        BooleanConfig {
            function: function.into(),
            n,
            ..BooleanConfig::defaults(Preset::Reduced)
        }
    }

    #[test]
    fn parity_curves() {
        let out = run_boolean_demo(&cfg("parity", 8)).unwrap();
        assert!(out.low_order.iter().filter(|(k, _)| *k < 8).all(|&(_, e)| e == 1.0));
        assert_eq!(out.low_order.last(), Some(&(8, 0.0)));
        assert!(out.sparse.iter().all(|&(_, e)| e == 0.0));
        assert_eq!(out.sparse[0].0, 1);
    }

    #[test]
    fn majority_of_three() {
        let out = run_boolean_demo(&cfg("majority", 3)).unwrap();
        assert_eq!(out.low_order[1], (1, 0.25));
    }

    #[test]
    fn random_full_budget_is_exact() {
        let c = BooleanConfig { seed: 5, ..cfg("random", 6) };
        let out = run_boolean_demo(&c).unwrap();
        assert_eq!(out.sparse.last().unwrap(), &(64, 0.0));
        assert_eq!(c.boolean_function().unwrap(), BooleanFunction::Random { seed: 5 });
    }

    #[test]
    fn out_of_range_n() {
        assert!(matches!(cfg("parity", 21).validate(), Err(LabError::Config(_))));
        assert!(matches!(cfg("parity", 0).validate(), Err(LabError::Config(_))));
        assert!(matches!(cfg("majority", 4).validate().and_then(|_| run_boolean_demo(&cfg("majority", 4)).map(|_| ())), Err(LabError::Config(_))));
    }
}

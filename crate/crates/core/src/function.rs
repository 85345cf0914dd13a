use std::sync::Arc;

use crate::error::{Error, Result};

/// Real bivariate function used as a tree constituent or operator block.
pub type Bivariate = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

pub fn bivariate<F>(f: F) -> Bivariate
where
    F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
{
    Arc::new(f)
}

/// A real function of a fixed number of real arguments.
pub trait Function: Send + Sync {
    fn arity(&self) -> usize;

    fn eval(&self, x: &[f64]) -> Result<f64>;
}

pub(crate) fn check_arity(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: x.len(),
        });
    }
    Ok(())
}

/// Wraps a closure as a [`Function`].
pub struct FnAdapter<F> {
    arity: usize,
    f: F,
}

pub fn from_fn<F>(arity: usize, f: F) -> FnAdapter<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    FnAdapter { arity, f }
}

impl<F> Function for FnAdapter<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn arity(&self) -> usize {
        self.arity
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        check_arity(self.arity, x)?;
        Ok((self.f)(x))
    }
}

/// A bivariate closure seen as a two-argument [`Function`].
#[derive(Clone)]
pub struct BivariateFn(pub Bivariate);

impl Function for BivariateFn {
    fn arity(&self) -> usize {
        2
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        check_arity(2, x)?;
        Ok((self.0)(x[0], x[1]))
    }
}

impl<T: Function + ?Sized> Function for &T {
    fn arity(&self) -> usize {
        (**self).arity()
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        (**self).eval(x)
    }
}

impl<T: Function + ?Sized> Function for Box<T> {
    fn arity(&self) -> usize {
        (**self).arity()
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        (**self).eval(x)
    }
}

//! Shallow and hierarchical function approximators.
//!
//! The crate is organised around a small number of building blocks:
//!
//! * [`targets`]: compositional binary-tree targets and scalar test functions.
//! * [`networks`]: smoothed-ReLU ridge networks, binary-tree networks and
//!   multi-layer perceptrons with optional batch normalization.
//! * [`gaussian`]: Gaussian networks with grid centers fitted by ridge least
//!   squares, including per-node fitting of tree-structured networks.
//! * [`training`]: backpropagation, momentum SGD and best-of-restarts selection.
//! * [`metrics`]: sup-norm estimates, tree errors, power-law fits and
//!   closed-form exponent/VC formulas.
//! * [`scalable_ops`]: layered operators built from one bivariate block.
//! * [`boolean_fourier`]: exact Fourier expansion over the Boolean cube.

pub mod boolean_fourier;
mod codec;
pub mod error;
pub mod function;
pub mod gaussian;
pub mod hexfloat;
pub mod metrics;
pub mod networks;
pub mod sampling;
pub mod scalable_ops;
pub mod targets;
pub mod training;
pub mod tree;

pub use error::{Error, Result};
pub use function::{Bivariate, Function};
pub use sampling::{Domain, PointSet, Samples};
pub use tree::{NodeId, TreeTopology};

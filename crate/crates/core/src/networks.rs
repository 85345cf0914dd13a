//! Smoothed-ReLU networks: shallow ridge sums, binary-tree networks and
//! multi-layer perceptrons with optional batch normalization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::codec;
use crate::error::{Error, Result};
use crate::function::{check_arity, Function};
use crate::hexfloat;
use crate::tree::TreeTopology;

pub const DEFAULT_DELTA: f64 = 0.01;

/// Beyond `|x/delta| > SOFTPLUS_CUTOFF` the activation is taken to be exactly
/// `x` or `0`.
const SOFTPLUS_CUTOFF: f64 = 30.0;

pub const BATCHNORM_EPS: f64 = 1e-5;
pub const BATCHNORM_MOMENTUM: f64 = 0.1;

/// `delta * ln(1 + exp(x / delta))`: infinitely differentiable, never
/// polynomial on an interval, and within `delta * ln 2` of `max(0, x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothActivation {
    delta: f64,
}

impl Default for SmoothActivation {
    fn default() -> Self {
        SmoothActivation {
            delta: DEFAULT_DELTA,
        }
    }
}

#[inline]
fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl SmoothActivation {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::invalid(format!("smoothing scale must be positive, got {delta}")));
        }
        Ok(SmoothActivation { delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        let z = x / self.delta;
        if z > SOFTPLUS_CUTOFF {
            x
        } else if z < -SOFTPLUS_CUTOFF {
            0.0
        } else {
            self.delta * z.exp().ln_1p()
        }
    }

    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        let z = x / self.delta;
        if z > SOFTPLUS_CUTOFF {
            1.0
        } else if z < -SOFTPLUS_CUTOFF {
            0.0
        } else {
            logistic(z)
        }
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        let z = x / self.delta;
        if z.abs() > SOFTPLUS_CUTOFF {
            0.0
        } else {
            let s = logistic(z);
            s * (1.0 - s) / self.delta
        }
    }
}

pub fn smooth_relu(x: f64, delta: f64) -> Result<f64> {
    Ok(SmoothActivation::new(delta)?.value(x))
}

/// Number of trainable scalars.
pub trait ParamCount {
    fn param_count(&self) -> usize;
}

/// One ridge unit `a * sigma(w . x + b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RidgeUnit {
    pub a: f64,
    pub w: Vec<f64>,
    pub b: f64,
}

/// `x -> sum_k a_k sigma(w_k . x + b_k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShallowNet {
    input_dim: usize,
    units: Vec<RidgeUnit>,
    activation: SmoothActivation,
}

impl ShallowNet {
    pub fn new(input_dim: usize, units: Vec<RidgeUnit>, activation: SmoothActivation) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::invalid("input dimension must be positive"));
        }
        if let Some(u) = units.iter().find(|u| u.w.len() != input_dim) {
            return Err(Error::DimensionMismatch {
                expected: input_dim,
                got: u.w.len(),
            });
        }
        Ok(ShallowNet {
            input_dim,
            units,
            activation,
        })
    }

    pub fn zeros(input_dim: usize, width: usize, activation: SmoothActivation) -> Result<Self> {
        let unit = RidgeUnit {
            a: 0.0,
            w: vec![0.0; input_dim],
            b: 0.0,
        };
        Self::new(input_dim, vec![unit; width], activation)
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn width(&self) -> usize {
        self.units.len()
    }

    pub fn units(&self) -> &[RidgeUnit] {
        &self.units
    }

    pub fn activation(&self) -> SmoothActivation {
        self.activation
    }

    /// Multiplies every outer coefficient by `c`.
    pub fn scale_outer(&mut self, c: f64) {
        for u in &mut self.units {
            u.a *= c;
        }
    }

    /// Three-unit approximation of `t -> t^2` from the second difference
    /// `(sigma(h t) + sigma(-h t) - 2 sigma(0)) / (h^2 sigma''(0))`.
    pub fn squaring(activation: SmoothActivation, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid(format!("step must be positive, got {h}")));
        }
        let a = 1.0 / (h * h * activation.second_derivative(0.0));
        let unit = |a, w| RidgeUnit { a, w: vec![w], b: 0.0 };
        ShallowNet::new(1, vec![unit(a, h), unit(a, -h), unit(-2.0 * a, 0.0)], activation)
    }

    pub fn units_mut(&mut self) -> &mut [RidgeUnit] {
        &mut self.units
    }

    pub(crate) fn stride(&self) -> usize {
        self.input_dim + 2
    }

    /// Forward pass without the arity check.
    #[inline]
    pub(crate) fn forward(&self, x: &[f64]) -> f64 {
        self.units
            .iter()
            .map(|u| {
                let z = u.w.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + u.b;
                u.a * self.activation.value(z)
            })
            .sum()
    }

    /// Adds `dout * d(out)/d(params)` into `grad` (layout `[a, w.., b]` per
    /// unit) and, when given, `dout * d(out)/dx` into `dx`.
    pub(crate) fn backward(&self, x: &[f64], dout: f64, grad: &mut [f64], mut dx: Option<&mut [f64]>) {
        let stride = self.stride();
        for (k, u) in self.units.iter().enumerate() {
            let z = u.w.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + u.b;
            let g = &mut grad[k * stride..(k + 1) * stride];
            g[0] += dout * self.activation.value(z);
            let dz = dout * u.a * self.activation.derivative(z);
            for (gi, xi) in g[1..=self.input_dim].iter_mut().zip(x) {
                *gi += dz * xi;
            }
            g[stride - 1] += dz;
            if let Some(dx) = dx.as_deref_mut() {
                for (d, w) in dx.iter_mut().zip(&u.w) {
                    *d += dz * w;
                }
            }
        }
    }

    pub(crate) fn write_params(&self, out: &mut Vec<f64>) {
        for u in &self.units {
            out.push(u.a);
            out.extend_from_slice(&u.w);
            out.push(u.b);
        }
    }

    pub(crate) fn read_params(&mut self, p: &[f64]) {
        let stride = self.stride();
        for (u, chunk) in self.units.iter_mut().zip(p.chunks_exact(stride)) {
            u.a = chunk[0];
            u.w.copy_from_slice(&chunk[1..stride - 1]);
            u.b = chunk[stride - 1];
        }
    }
}

impl ParamCount for ShallowNet {
    fn param_count(&self) -> usize {
        (self.input_dim + 2) * self.units.len()
    }
}

impl Function for ShallowNet {
    fn arity(&self) -> usize {
        self.input_dim
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        check_arity(self.input_dim, x)?;
        Ok(self.forward(x))
    }
}

/// Binary-tree network whose every vertex is a bivariate [`ShallowNet`].
#[derive(Clone, Debug, PartialEq)]
pub struct DeepTreeNet {
    topology: TreeTopology,
    nodes: Vec<ShallowNet>,
}

impl DeepTreeNet {
    pub fn new(topology: TreeTopology, nodes: Vec<ShallowNet>) -> Result<Self> {
        if nodes.len() != topology.node_count() {
            return Err(Error::DimensionMismatch {
                expected: topology.node_count(),
                got: nodes.len(),
            });
        }
        if let Some(n) = nodes.iter().find(|n| n.input_dim() != 2) {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: n.input_dim(),
            });
        }
        Ok(DeepTreeNet { topology, nodes })
    }

    pub fn topology(&self) -> &TreeTopology {
        &self.topology
    }

    /// Replaces the topology with one over the same number of leaves
    /// (typically to change the leaf order).
    pub fn with_topology(mut self, topology: TreeTopology) -> Result<Self> {
        if topology.leaves() != self.topology.leaves() {
            return Err(Error::TopologyMismatch(format!(
                "{} leaves vs {}",
                topology.leaves(),
                self.topology.leaves()
            )));
        }
        self.topology = topology;
        Ok(self)
    }

    pub fn nodes(&self) -> &[ShallowNet] {
        &self.nodes
    }

    pub fn node(&self, flat: usize) -> &ShallowNet {
        &self.nodes[flat]
    }

    pub fn set_node(&mut self, flat: usize, net: ShallowNet) -> Result<()> {
        if net.input_dim() != 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: net.input_dim(),
            });
        }
        self.nodes[flat] = net;
        Ok(())
    }

    /// Output and every vertex output (flat order, root last).
    pub fn eval_with_intermediates(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.topology.check_input(x)?;
        let values = self.intermediates(x);
        Ok((values[values.len() - 1], values))
    }

    pub(crate) fn intermediates(&self, x: &[f64]) -> Vec<f64> {
        self.topology
            .evaluate(x, |i, a, b| self.nodes[i].forward(&[a, b]))
    }
}

impl ParamCount for DeepTreeNet {
    fn param_count(&self) -> usize {
        self.nodes.iter().map(ParamCount::param_count).sum()
    }
}

impl Function for DeepTreeNet {
    fn arity(&self) -> usize {
        self.topology.leaves()
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        self.eval_with_intermediates(x).map(|(v, _)| v)
    }
}

/// Fully connected affine layer, weights stored row-major `out x in`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Dense {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        }
    }

    #[inline]
    pub(crate) fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for (row, b) in self.weights.chunks_exact(self.in_dim).zip(&self.bias) {
            out.push(row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b);
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchNorm {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
}

impl BatchNorm {
    fn identity(width: usize) -> Self {
        BatchNorm {
            gamma: vec![1.0; width],
            beta: vec![0.0; width],
            running_mean: vec![0.0; width],
            running_var: vec![1.0; width],
        }
    }

    pub fn width(&self) -> usize {
        self.gamma.len()
    }

    #[inline]
    pub(crate) fn infer(&self, h: &mut [f64]) {
        for (i, v) in h.iter_mut().enumerate() {
            let xhat = (*v - self.running_mean[i]) / (self.running_var[i] + BATCHNORM_EPS).sqrt();
            *v = self.gamma[i] * xhat + self.beta[i];
        }
    }

    /// Exponential moving update with a batch's mean and unbiased variance.
    pub(crate) fn update_running(&mut self, mean: &[f64], var_unbiased: &[f64]) {
        for i in 0..self.width() {
            self.running_mean[i] =
                (1.0 - BATCHNORM_MOMENTUM) * self.running_mean[i] + BATCHNORM_MOMENTUM * mean[i];
            self.running_var[i] =
                (1.0 - BATCHNORM_MOMENTUM) * self.running_var[i] + BATCHNORM_MOMENTUM * var_unbiased[i];
        }
    }
}

/// Multi-layer perceptron with scalar affine output. Optional batch
/// normalization sits between consecutive hidden layers, i.e. after the
/// activation of every hidden layer except the last.
#[derive(Clone, Debug, PartialEq)]
pub struct GenericMlp {
    dims: Vec<usize>,
    pub(crate) layers: Vec<Dense>,
    pub(crate) norms: Vec<Option<BatchNorm>>,
    activation: SmoothActivation,
}

impl GenericMlp {
    pub fn zeros(dims: &[usize], batchnorm: bool, activation: SmoothActivation) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::invalid("an MLP needs at least input and output widths"));
        }
        if dims.contains(&0) {
            return Err(Error::invalid(format!("layer widths must be positive: {dims:?}")));
        }
        if *dims.last().unwrap() != 1 {
            return Err(Error::invalid("the output layer must have width 1"));
        }
        let hidden = dims.len() - 2;
        let layers = dims.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect();
        let norms = (0..hidden)
            .map(|i| (batchnorm && i + 1 < hidden).then(|| BatchNorm::identity(dims[i + 1])))
            .collect();
        Ok(GenericMlp {
            dims: dims.to_vec(),
            layers,
            norms,
            activation,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn hidden_layers(&self) -> usize {
        self.dims.len() - 2
    }

    pub fn hidden_units(&self) -> usize {
        self.dims[1..self.dims.len() - 1].iter().sum()
    }

    pub fn has_batchnorm(&self) -> bool {
        self.norms.iter().any(Option::is_some)
    }

    pub fn activation(&self) -> SmoothActivation {
        self.activation
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn norms(&self) -> &[Option<BatchNorm>] {
        &self.norms
    }

    /// Inference-mode forward pass (batch normalization uses running
    /// statistics).
    pub(crate) fn forward(&self, x: &[f64]) -> f64 {
        let mut a = x.to_vec();
        let mut z = Vec::new();
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            layer.apply(&a, &mut z);
            if l == last {
                return z[0];
            }
            for v in z.iter_mut() {
                *v = self.activation.value(*v);
            }
            if let Some(bn) = &self.norms[l] {
                bn.infer(&mut z);
            }
            std::mem::swap(&mut a, &mut z);
        }
        unreachable!("an MLP has at least one layer")
    }
}

impl ParamCount for GenericMlp {
    fn param_count(&self) -> usize {
        let dense: usize = self.layers.iter().map(|l| (l.in_dim + 1) * l.out_dim).sum();
        let bn: usize = self.norms.iter().flatten().map(|b| 2 * b.width()).sum();
        dense + bn
    }
}

impl Function for GenericMlp {
    fn arity(&self) -> usize {
        self.dims[0]
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        check_arity(self.dims[0], x)?;
        Ok(self.forward(x))
    }
}

/// Architecture descriptor accepted by [`init_network`].
#[derive(Clone, Debug, PartialEq)]
pub enum Architecture {
    Shallow {
        input_dim: usize,
        units: usize,
        delta: f64,
    },
    DeepTree {
        leaves: usize,
        channels: usize,
        delta: f64,
    },
    Mlp {
        dims: Vec<usize>,
        batchnorm: bool,
        delta: f64,
    },
}

impl Architecture {
    pub fn mlp(dims: &[usize], batchnorm: bool) -> Self {
        Architecture::Mlp {
            dims: dims.to_vec(),
            batchnorm,
            delta: DEFAULT_DELTA,
        }
    }

    pub fn shallow(input_dim: usize, units: usize) -> Self {
        Architecture::Shallow {
            input_dim,
            units,
            delta: DEFAULT_DELTA,
        }
    }

    pub fn deep_tree(leaves: usize, channels: usize) -> Self {
        Architecture::DeepTree {
            leaves,
            channels,
            delta: DEFAULT_DELTA,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Architecture::Shallow { input_dim, units, .. } => format!("shallow(d={input_dim},n={units})"),
            Architecture::DeepTree { leaves, channels, .. } => {
                format!("deep_tree(d={leaves},n={channels})")
            }
            Architecture::Mlp { dims, batchnorm, .. } => format!(
                "mlp({}{})",
                codec::join_usize(dims).replace(',', "-"),
                if *batchnorm { ",bn" } else { "" }
            ),
        }
    }
}

fn glorot(rng: &mut impl Rng, fan_in: usize, fan_out: usize) -> f64 {
    let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
    rng.gen_range(-s..=s)
}

fn init_shallow(input_dim: usize, units: usize, act: SmoothActivation, rng: &mut impl Rng) -> Result<ShallowNet> {
    let units = (0..units)
        .map(|_| {
            let w = (0..input_dim).map(|_| glorot(rng, input_dim, units)).collect();
            let a = glorot(rng, units, 1);
            RidgeUnit { a, w, b: 0.0 }
        })
        .collect();
    ShallowNet::new(input_dim, units, act)
}

/// Glorot-uniform weights, zero biases, identity batch normalization.
/// Deterministic in `seed`.
pub fn init_network(arch: &Architecture, seed: u64) -> Result<Network> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match arch {
        &Architecture::Shallow { input_dim, units, delta } => {
            let act = SmoothActivation::new(delta)?;
            if units == 0 {
                return Err(Error::invalid("a shallow network needs at least one unit"));
            }
            Ok(Network::Shallow(init_shallow(input_dim, units, act, &mut rng)?))
        }
        &Architecture::DeepTree { leaves, channels, delta } => {
            let act = SmoothActivation::new(delta)?;
            if channels == 0 {
                return Err(Error::invalid("tree nodes need at least one channel"));
            }
            let topology = TreeTopology::new(leaves)?;
            let nodes = (0..topology.node_count())
                .map(|_| init_shallow(2, channels, act, &mut rng))
                .collect::<Result<_>>()?;
            Ok(Network::DeepTree(DeepTreeNet::new(topology, nodes)?))
        }
        Architecture::Mlp { dims, batchnorm, delta } => {
            let act = SmoothActivation::new(*delta)?;
            let mut net = GenericMlp::zeros(dims, *batchnorm, act)?;
            for layer in &mut net.layers {
                let (fi, fo) = (layer.in_dim, layer.out_dim);
                for w in &mut layer.weights {
                    *w = glorot(&mut rng, fi, fo);
                }
            }
            Ok(Network::Mlp(net))
        }
    }
}

/// Any of the three network kinds.
#[derive(Clone, Debug, PartialEq)]
pub enum Network {
    Shallow(ShallowNet),
    DeepTree(DeepTreeNet),
    Mlp(GenericMlp),
}

impl ParamCount for Network {
    fn param_count(&self) -> usize {
        match self {
            Network::Shallow(n) => n.param_count(),
            Network::DeepTree(n) => n.param_count(),
            Network::Mlp(n) => n.param_count(),
        }
    }
}

impl Function for Network {
    fn arity(&self) -> usize {
        match self {
            Network::Shallow(n) => n.arity(),
            Network::DeepTree(n) => n.arity(),
            Network::Mlp(n) => n.arity(),
        }
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        match self {
            Network::Shallow(n) => n.eval(x),
            Network::DeepTree(n) => n.eval(x),
            Network::Mlp(n) => n.eval(x),
        }
    }
}

impl Network {
    /// Serializes to the plain-text parameter format.
    pub fn to_text(&self) -> String {
        match self {
            Network::Shallow(n) => {
                let mut out = codec::write_header(
                    "shallow",
                    &[
                        ("input_dim", n.input_dim.to_string()),
                        ("units", n.width().to_string()),
                        ("delta", hexfloat::format(n.activation.delta)),
                    ],
                );
                let mut p = Vec::new();
                n.write_params(&mut p);
                codec::write_values(&mut out, p);
                out
            }
            Network::DeepTree(n) => {
                let widths: Vec<usize> = n.nodes.iter().map(ShallowNet::width).collect();
                let delta = n.nodes[0].activation.delta;
                let mut out = codec::write_header(
                    "deep_tree",
                    &[
                        ("leaves", n.topology.leaves().to_string()),
                        ("widths", codec::join_usize(&widths)),
                        ("delta", hexfloat::format(delta)),
                        ("leaf_order", codec::join_usize(n.topology.leaf_order())),
                    ],
                );
                let mut p = Vec::new();
                for node in &n.nodes {
                    node.write_params(&mut p);
                }
                codec::write_values(&mut out, p);
                out
            }
            Network::Mlp(n) => {
                let mut out = codec::write_header(
                    "mlp",
                    &[
                        ("dims", codec::join_usize(&n.dims)),
                        ("batchnorm", (n.has_batchnorm() as u8).to_string()),
                        ("delta", hexfloat::format(n.activation.delta)),
                    ],
                );
                for (l, layer) in n.layers.iter().enumerate() {
                    codec::write_values(&mut out, layer.weights.iter().copied());
                    codec::write_values(&mut out, layer.bias.iter().copied());
                    if let Some(Some(bn)) = n.norms.get(l) {
                        codec::write_values(&mut out, bn.gamma.iter().copied());
                        codec::write_values(&mut out, bn.beta.iter().copied());
                    }
                }
                for bn in n.norms.iter().flatten() {
                    codec::write_values(&mut out, bn.running_mean.iter().copied());
                    codec::write_values(&mut out, bn.running_var.iter().copied());
                }
                out
            }
        }
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let (h, mut values) = codec::read(text)?;
        let net = match h.kind.as_str() {
            "shallow" => {
                let act = SmoothActivation::new(h.float("delta")?)?;
                let mut net = ShallowNet::zeros(h.usize("input_dim")?, h.usize("units")?, act)?;
                let p = values.take(net.param_count())?;
                net.read_params(&p);
                Network::Shallow(net)
            }
            "deep_tree" => {
                let act = SmoothActivation::new(h.float("delta")?)?;
                let leaves = h.usize("leaves")?;
                let topology = TreeTopology::with_leaf_order(leaves, h.usize_list("leaf_order")?)?;
                let widths = h.usize_list("widths")?;
                let mut nodes = Vec::with_capacity(widths.len());
                for w in widths {
                    let mut node = ShallowNet::zeros(2, w, act)?;
                    node.read_params(&values.take(node.param_count())?);
                    nodes.push(node);
                }
                Network::DeepTree(DeepTreeNet::new(topology, nodes)?)
            }
            "mlp" => {
                let act = SmoothActivation::new(h.float("delta")?)?;
                let mut net = GenericMlp::zeros(&h.usize_list("dims")?, h.usize("batchnorm")? != 0, act)?;
                for l in 0..net.layers.len() {
                    let layer = &mut net.layers[l];
                    layer.weights = values.take(layer.weights.len())?;
                    layer.bias = values.take(layer.bias.len())?;
                    if let Some(Some(bn)) = net.norms.get_mut(l) {
                        bn.gamma = values.take(bn.width())?;
                        bn.beta = values.take(bn.width())?;
                    }
                }
                for bn in net.norms.iter_mut().flatten() {
                    bn.running_mean = values.take(bn.width())?;
                    bn.running_var = values.take(bn.width())?;
                }
                Network::Mlp(net)
            }
            other => {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("unknown network kind `{other}`"),
                })
            }
        };
        values.finish()?;
        Ok(net)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_relu_reference_values() {
        let v = smooth_relu(0.0, 0.01).unwrap();
        assert!((v - 0.01 * 2f64.ln()).abs() < 1e-15);
        assert!((v - 0.006931).abs() < 1e-6);
        assert_eq!(smooth_relu(10.0, 0.01).unwrap(), 10.0);
        assert_eq!(smooth_relu(-10.0, 0.01).unwrap(), 0.0);
        assert!(smooth_relu(1.0, 0.0).is_err());
        assert!(smooth_relu(1.0, -1.0).is_err());
        assert!(smooth_relu(1.0, f64::NAN).is_err());
    }

    #[test]
    fn smooth_relu_monotone_convex_and_close_to_relu() {
        let act = SmoothActivation::new(0.01).unwrap();
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| act.value(x)).collect();
        for i in 0..n {
            assert!((ys[i] - xs[i].max(0.0)).abs() <= 0.01 * 2f64.ln() + 1e-17);
            if i > 0 {
                assert!(ys[i] >= ys[i - 1]);
            }
            if i > 0 && i + 1 < n {
                // the hard cutoffs introduce a jump of delta*ln(1+e^-30) ~ 1e-15
                assert!(ys[i - 1] - 2.0 * ys[i] + ys[i + 1] >= -1e-14, "x = {}", xs[i]);
            }
        }
    }

    #[test]
    fn single_ridge_unit() {
        let act = SmoothActivation::new(1e-6).unwrap();
        let net = ShallowNet::new(
            2,
            vec![RidgeUnit {
                a: 1.0,
                w: vec![1.0, 0.0],
                b: 0.0,
            }],
            act,
        )
        .unwrap();
        assert!((net.eval(&[5.0, 9.0]).unwrap() - 5.0).abs() < 1e-12);
        assert!(net.eval(&[5.0]).is_err());
    }

    #[test]
    fn empty_net_is_zero() {
        let net = ShallowNet::new(3, vec![], SmoothActivation::default()).unwrap();
        assert_eq!(net.eval(&[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(net.param_count(), 0);
    }

    #[test]
    fn mirrored_ramps_give_abs() {
        let act = SmoothActivation::default();
        let unit = |w| RidgeUnit { a: 1.0, w: vec![w], b: 0.0 };
        let net = ShallowNet::new(1, vec![unit(1.0), unit(-1.0)], act).unwrap();
        for x in [-3.0, -0.7, 0.5, 2.0] {
            let expected = act.value(x) + act.value(-x);
            assert_eq!(net.eval(&[x]).unwrap(), expected);
            assert!((expected - f64::abs(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn parameter_counts() {
        let s = init_network(&Architecture::shallow(8, 10), 1).unwrap();
        assert_eq!(s.param_count(), 100);
        let t = init_network(&Architecture::deep_tree(8, 5), 1).unwrap();
        assert_eq!(t.param_count(), 140);
        let m = init_network(&Architecture::mlp(&[1, 24, 1], false), 7).unwrap();
        assert_eq!(m.param_count(), 73);
        let bn = init_network(&Architecture::mlp(&[1, 12, 12, 1], true), 7).unwrap();
        // (2*12) + (13*12) + 13 + 2*12
        assert_eq!(bn.param_count(), 24 + 156 + 13 + 24);
    }

    #[test]
    fn batchnorm_sits_between_hidden_layers_only() {
        let m = GenericMlp::zeros(&[1, 8, 8, 8, 1], true, SmoothActivation::default()).unwrap();
        let flags: Vec<bool> = m.norms().iter().map(Option::is_some).collect();
        assert_eq!(flags, vec![true, true, false]);
        let one = GenericMlp::zeros(&[1, 8, 1], true, SmoothActivation::default()).unwrap();
        assert!(!one.has_batchnorm());
    }

    #[test]
    fn init_is_deterministic_and_seed_sensitive() {
        let arch = Architecture::mlp(&[1, 24, 1], false);
        let a = init_network(&arch, 7).unwrap();
        let b = init_network(&arch, 7).unwrap();
        let c = init_network(&arch, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(c.param_count(), 73);
    }

    #[test]
    fn init_rejects_bad_descriptors() {
        assert!(init_network(&Architecture::mlp(&[1], false), 0).is_err());
        assert!(init_network(&Architecture::mlp(&[1, 0, 1], false), 0).is_err());
        assert!(init_network(&Architecture::mlp(&[1, 4, 2], false), 0).is_err());
        assert!(init_network(&Architecture::deep_tree(6, 2), 0).is_err());
        assert!(init_network(&Architecture::shallow(2, 0), 0).is_err());
        let bad_delta = Architecture::Shallow { input_dim: 2, units: 2, delta: 0.0 };
        assert!(init_network(&bad_delta, 0).is_err());
    }

    #[test]
    fn glorot_bounds_hold() {
        let Network::Mlp(m) = init_network(&Architecture::mlp(&[1, 24, 1], false), 3).unwrap() else {
            unreachable!()
        };
        let s = (6.0f64 / 25.0).sqrt();
        assert!(m.layers()[0].weights.iter().all(|w| w.abs() <= s));
        assert!(m.layers()[0].bias.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn text_round_trip_all_kinds() {
        let mut mlp = init_network(&Architecture::mlp(&[2, 5, 4, 1], true), 11).unwrap();
        if let Network::Mlp(m) = &mut mlp {
            m.norms[0].as_mut().unwrap().running_mean[2] = 0.123456789;
            m.layers[1].bias[3] = -1e-300;
        }
        let topo = TreeTopology::with_leaf_order(4, vec![1, 3, 0, 2]).unwrap();
        let Network::DeepTree(tree) = init_network(&Architecture::deep_tree(4, 3), 2).unwrap() else {
            unreachable!()
        };
        let tree = Network::DeepTree(tree.with_topology(topo).unwrap());
        for net in [
            init_network(&Architecture::shallow(3, 4), 5).unwrap(),
            tree,
            mlp,
        ] {
            let text = net.to_text();
            let back = Network::from_text(&text).unwrap();
            assert_eq!(back, net);
            assert_eq!(back.to_text(), text);
        }
    }

    #[test]
    fn text_rejects_truncated_and_trailing() {
        let net = init_network(&Architecture::shallow(1, 2), 5).unwrap();
        let text = net.to_text();
        let truncated: String = text.lines().take(3).map(|l| format!("{l}\n")).collect();
        assert!(Network::from_text(&truncated).is_err());
        assert!(Network::from_text(&format!("{text}0x1p+0\n")).is_err());
        assert!(Network::from_text("bogus a=1\n").is_err());
    }
}

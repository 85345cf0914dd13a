//! Backpropagation, momentum SGD and best-of-restarts selection.
//!
//! All losses are the mean squared error over a batch. Gradients through
//! batch normalization include the dependence of the batch statistics on
//! the inputs.

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::error::Error;
use crate::function::{BivariateFn, Function};
use crate::networks::{
    init_network, Architecture, BatchNorm, DeepTreeNet, GenericMlp, Network, ParamCount, ShallowNet,
    SmoothActivation, BATCHNORM_EPS,
};
use crate::sampling::Samples;
use crate::targets::CompositionalTarget;

/// Loss above which a run is declared divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Model(#[from] Error),

    #[error("seed {seed} diverged in epoch {epoch}: loss {loss:e}")]
    Diverged {
        seed: u64,
        epoch: usize,
        loss: f64,
        trace: Vec<f64>,
    },

    #[error("all {0} restarts diverged")]
    AllDiverged(usize),
}

/// Batch statistics of one batch-normalization layer, applied to the running
/// averages after the optimizer step.
#[derive(Clone, Debug, PartialEq)]
pub struct NormStats {
    pub layer: usize,
    pub mean: Vec<f64>,
    pub var_unbiased: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    pub grad: Vec<f64>,
    pub norm_stats: Vec<NormStats>,
}

/// A model trainable by gradient descent on a flat parameter vector.
pub trait Trainable: Function + ParamCount + Clone + Send + Sync {
    fn params(&self) -> Vec<f64>;

    fn set_params(&mut self, p: &[f64]);

    /// Training-mode batch MSE and its exact gradient.
    fn loss_grad(&self, batch: &Samples) -> Result<LossGrad, Error>;

    /// Inference-mode prediction; the input length is the caller's concern.
    fn predict(&self, x: &[f64]) -> f64;

    fn commit_batch_stats(&mut self, _stats: &[NormStats]) {}
}

fn check_batch<M: Function>(net: &M, batch: &Samples) -> Result<(), Error> {
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    if batch.dim() != net.arity() {
        return Err(Error::DimensionMismatch {
            expected: net.arity(),
            got: batch.dim(),
        });
    }
    Ok(())
}

/// Gradient of the batch MSE with respect to every trainable parameter.
pub fn backprop_grad<M: Trainable>(net: &M, batch: &Samples) -> Result<Vec<f64>, Error> {
    check_batch(net, batch)?;
    Ok(net.loss_grad(batch)?.grad)
}

/// Training-mode batch MSE (batch statistics in normalization layers).
pub fn batch_loss<M: Trainable>(net: &M, batch: &Samples) -> Result<f64, Error> {
    check_batch(net, batch)?;
    Ok(net.loss_grad(batch)?.loss)
}

/// Inference-mode MSE; never mutates the model.
pub fn evaluate_mse<M: Trainable>(net: &M, samples: &Samples) -> f64 {
    let n = samples.len() as f64;
    (0..samples.len())
        .map(|i| (net.predict(samples.x(i)) - samples.y(i)).powi(2))
        .sum::<f64>()
        / n
}

impl Trainable for ShallowNet {
    fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.param_count());
        self.write_params(&mut p);
        p
    }

    fn set_params(&mut self, p: &[f64]) {
        self.read_params(p);
    }

    fn loss_grad(&self, batch: &Samples) -> Result<LossGrad, Error> {
        check_batch(self, batch)?;
        let n = batch.len() as f64;
        let mut grad = vec![0.0; self.param_count()];
        let mut loss = 0.0;
        for i in 0..batch.len() {
            let x = batch.x(i);
            let r = self.forward(x) - batch.y(i);
            if !r.is_finite() {
                return Err(Error::NonFinite { layer: 0 });
            }
            loss += r * r;
            self.backward(x, 2.0 * r / n, &mut grad, None);
        }
        Ok(LossGrad {
            loss: loss / n,
            grad,
            norm_stats: Vec::new(),
        })
    }

    fn predict(&self, x: &[f64]) -> f64 {
        self.forward(x)
    }
}

impl Trainable for DeepTreeNet {
    fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.param_count());
        for node in self.nodes() {
            node.write_params(&mut p);
        }
        p
    }

    fn set_params(&mut self, p: &[f64]) {
        let mut offset = 0;
        for flat in 0..self.nodes().len() {
            let mut node = self.node(flat).clone();
            let len = node.param_count();
            node.read_params(&p[offset..offset + len]);
            offset += len;
            self.set_node(flat, node).expect("node arity is unchanged");
        }
    }

    fn loss_grad(&self, batch: &Samples) -> Result<LossGrad, Error> {
        check_batch(self, batch)?;
        let topo = self.topology();
        let count = topo.node_count();
        let mut offsets = Vec::with_capacity(count + 1);
        offsets.push(0);
        for node in self.nodes() {
            offsets.push(offsets.last().unwrap() + node.param_count());
        }
        let children: Vec<_> = (0..count).map(|i| topo.children(i)).collect();
        let n = batch.len() as f64;
        let mut grad = vec![0.0; offsets[count]];
        let mut adj = vec![0.0; count];
        let mut loss = 0.0;
        for s in 0..batch.len() {
            let x = batch.x(s);
            let values = self.intermediates(x);
            let r = values[count - 1] - batch.y(s);
            if !r.is_finite() {
                let layer = values.iter().position(|v| !v.is_finite()).unwrap_or(count - 1);
                return Err(Error::NonFinite {
                    layer: topo.node_at(layer).level,
                });
            }
            loss += r * r;
            adj.iter_mut().for_each(|a| *a = 0.0);
            adj[count - 1] = 2.0 * r / n;
            for i in (0..count).rev() {
                let input = children[i].map(|c| match c {
                    Ok(node) => values[node],
                    Err(leaf) => x[leaf],
                });
                let mut dx = [0.0; 2];
                self.node(i)
                    .backward(&input, adj[i], &mut grad[offsets[i]..offsets[i + 1]], Some(&mut dx));
                for (c, d) in children[i].iter().zip(dx) {
                    if let Ok(node) = c {
                        adj[*node] += d;
                    }
                }
            }
        }
        Ok(LossGrad {
            loss: loss / n,
            grad,
            norm_stats: Vec::new(),
        })
    }

    fn predict(&self, x: &[f64]) -> f64 {
        let v = self.intermediates(x);
        v[v.len() - 1]
    }
}

/// Cached quantities of one batch-normalization layer in a training pass.
struct NormCache {
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
}

fn norm_forward(bn: &BatchNorm, h: &[f64], rows: usize, width: usize) -> (Vec<f64>, NormCache, Vec<f64>, Vec<f64>) {
    let n = rows as f64;
    let mut mean = vec![0.0; width];
    for r in 0..rows {
        for j in 0..width {
            mean[j] += h[r * width + j];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; width];
    for r in 0..rows {
        for j in 0..width {
            var[j] += (h[r * width + j] - mean[j]).powi(2);
        }
    }
    var.iter_mut().for_each(|v| *v /= n);
    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BATCHNORM_EPS).sqrt()).collect();
    let mut xhat = vec![0.0; rows * width];
    let mut out = vec![0.0; rows * width];
    for r in 0..rows {
        for j in 0..width {
            let k = r * width + j;
            xhat[k] = (h[k] - mean[j]) * inv_std[j];
            out[k] = bn.gamma[j] * xhat[k] + bn.beta[j];
        }
    }
    let unbiased = if rows > 1 {
        var.iter().map(|v| v * n / (n - 1.0)).collect()
    } else {
        var
    };
    (out, NormCache { xhat, inv_std }, mean, unbiased)
}

impl GenericMlp {
    fn param_layout(&self) -> Vec<(usize, Option<usize>)> {
        let mut offset = 0;
        let mut layout = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate() {
            let dense = offset;
            offset += layer.weights.len() + layer.bias.len();
            let bn = match self.norms.get(l) {
                Some(Some(bn)) => {
                    let at = offset;
                    offset += 2 * bn.width();
                    Some(at)
                }
                _ => None,
            };
            layout.push((dense, bn));
        }
        layout
    }
}

impl Trainable for GenericMlp {
    fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.param_count());
        for (l, layer) in self.layers.iter().enumerate() {
            p.extend_from_slice(&layer.weights);
            p.extend_from_slice(&layer.bias);
            if let Some(Some(bn)) = self.norms.get(l) {
                p.extend_from_slice(&bn.gamma);
                p.extend_from_slice(&bn.beta);
            }
        }
        p
    }

    fn set_params(&mut self, p: &[f64]) {
        let mut offset = 0;
        let mut take = |dst: &mut Vec<f64>| {
            let len = dst.len();
            dst.copy_from_slice(&p[offset..offset + len]);
            offset += len;
        };
        for l in 0..self.layers.len() {
            take(&mut self.layers[l].weights);
            take(&mut self.layers[l].bias);
            if let Some(Some(bn)) = self.norms.get_mut(l) {
                take(&mut bn.gamma);
                take(&mut bn.beta);
            }
        }
    }

    fn loss_grad(&self, batch: &Samples) -> Result<LossGrad, Error> {
        check_batch(self, batch)?;
        let act: SmoothActivation = self.activation();
        let rows = batch.len();
        let n = rows as f64;
        let last = self.layers.len() - 1;

        let mut inputs: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        let mut pre: Vec<Vec<f64>> = Vec::with_capacity(last);
        let mut caches: Vec<Option<NormCache>> = Vec::with_capacity(last);
        let mut norm_stats = Vec::new();
        let mut a = batch.xs().to_vec();
        let mut output = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            let (din, dout) = (layer.in_dim, layer.out_dim);
            let mut z = vec![0.0; rows * dout];
            for r in 0..rows {
                let x = &a[r * din..(r + 1) * din];
                for (o, w) in layer.weights.chunks_exact(din).enumerate() {
                    z[r * dout + o] = w.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + layer.bias[o];
                }
            }
            if z.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { layer: l });
            }
            inputs.push(std::mem::take(&mut a));
            if l == last {
                output = z;
                break;
            }
            let h: Vec<f64> = z.iter().map(|&v| act.value(v)).collect();
            pre.push(z);
            match &self.norms[l] {
                Some(bn) => {
                    let (out, cache, mean, var_unbiased) = norm_forward(bn, &h, rows, dout);
                    norm_stats.push(NormStats {
                        layer: l,
                        mean,
                        var_unbiased,
                    });
                    caches.push(Some(cache));
                    a = out;
                }
                None => {
                    caches.push(None);
                    a = h;
                }
            }
        }

        let mut loss = 0.0;
        let mut dz: Vec<f64> = output
            .iter()
            .enumerate()
            .map(|(r, &o)| {
                let e = o - batch.y(r);
                loss += e * e;
                2.0 * e / n
            })
            .collect();

        let layout = self.param_layout();
        let mut grad = vec![0.0; self.param_count()];
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let (din, dout) = (layer.in_dim, layer.out_dim);
            let a_prev = &inputs[l];
            let (w_off, _) = layout[l];
            let b_off = w_off + layer.weights.len();
            for r in 0..rows {
                let x = &a_prev[r * din..(r + 1) * din];
                for o in 0..dout {
                    let g = dz[r * dout + o];
                    if g == 0.0 {
                        continue;
                    }
                    let gw = &mut grad[w_off + o * din..w_off + (o + 1) * din];
                    for (gi, xi) in gw.iter_mut().zip(x) {
                        *gi += g * xi;
                    }
                    grad[b_off + o] += g;
                }
            }
            if l == 0 {
                break;
            }
            let hidden = l - 1;
            let mut da = vec![0.0; rows * din];
            for r in 0..rows {
                for (o, w) in layer.weights.chunks_exact(din).enumerate() {
                    let g = dz[r * dout + o];
                    for (d, wi) in da[r * din..(r + 1) * din].iter_mut().zip(w) {
                        *d += g * wi;
                    }
                }
            }
            let dh = match (&self.norms[hidden], &caches[hidden], layout[hidden].1) {
                (Some(bn), Some(cache), Some(bn_off)) => {
                    let width = din;
                    let mut dxhat = vec![0.0; rows * width];
                    let mut sum_dxhat = vec![0.0; width];
                    let mut sum_dxhat_xhat = vec![0.0; width];
                    for r in 0..rows {
                        for j in 0..width {
                            let k = r * width + j;
                            grad[bn_off + j] += da[k] * cache.xhat[k];
                            grad[bn_off + width + j] += da[k];
                            dxhat[k] = da[k] * bn.gamma[j];
                            sum_dxhat[j] += dxhat[k];
                            sum_dxhat_xhat[j] += dxhat[k] * cache.xhat[k];
                        }
                    }
                    let mut dh = vec![0.0; rows * width];
                    for r in 0..rows {
                        for j in 0..width {
                            let k = r * width + j;
                            dh[k] = cache.inv_std[j] / n
                                * (n * dxhat[k] - sum_dxhat[j] - cache.xhat[k] * sum_dxhat_xhat[j]);
                        }
                    }
                    dh
                }
                _ => da,
            };
            dz = dh
                .iter()
                .zip(&pre[hidden])
                .map(|(d, &z)| d * act.derivative(z))
                .collect();
        }
        Ok(LossGrad {
            loss: loss / n,
            grad,
            norm_stats,
        })
    }

    fn predict(&self, x: &[f64]) -> f64 {
        self.forward(x)
    }

    fn commit_batch_stats(&mut self, stats: &[NormStats]) {
        for s in stats {
            if let Some(Some(bn)) = self.norms.get_mut(s.layer) {
                bn.update_running(&s.mean, &s.var_unbiased);
            }
        }
    }
}

impl Trainable for Network {
    fn params(&self) -> Vec<f64> {
        match self {
            Network::Shallow(n) => n.params(),
            Network::DeepTree(n) => n.params(),
            Network::Mlp(n) => n.params(),
        }
    }

    fn set_params(&mut self, p: &[f64]) {
        match self {
            Network::Shallow(n) => n.set_params(p),
            Network::DeepTree(n) => n.set_params(p),
            Network::Mlp(n) => n.set_params(p),
        }
    }

    fn loss_grad(&self, batch: &Samples) -> Result<LossGrad, Error> {
        match self {
            Network::Shallow(n) => n.loss_grad(batch),
            Network::DeepTree(n) => n.loss_grad(batch),
            Network::Mlp(n) => n.loss_grad(batch),
        }
    }

    fn predict(&self, x: &[f64]) -> f64 {
        match self {
            Network::Shallow(n) => n.predict(x),
            Network::DeepTree(n) => n.predict(x),
            Network::Mlp(n) => n.predict(x),
        }
    }

    fn commit_batch_stats(&mut self, stats: &[NormStats]) {
        if let Network::Mlp(n) = self {
            n.commit_batch_stats(stats);
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Evaluate the test set every `k` epochs (reporting only).
    pub test_every: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            momentum: 0.9,
            batch_size: 3000,
            epochs: 2000,
            restarts: 5,
            seed: 0,
            test_every: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, samples: usize) -> Result<(), TrainError> {
        let bad = |m: String| Err(TrainError::Config(m));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad(format!("momentum must lie in [0, 1), got {}", self.momentum));
        }
        if self.batch_size == 0 || self.batch_size > samples {
            return bad(format!(
                "batch size {} must be between 1 and the sample count {samples}",
                self.batch_size
            ));
        }
        if self.restarts == 0 {
            return bad("at least one restart is required".into());
        }
        if self.test_every == Some(0) {
            return bad("test_every must be positive".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport<M> {
    pub seed: u64,
    pub final_train_mse: f64,
    pub final_test_mse: Option<f64>,
    /// Sample-weighted mean of the minibatch losses of each epoch.
    pub loss_trace: Vec<f64>,
    /// `(epoch, test MSE)` pairs, epochs counted from 1.
    pub test_trace: Vec<(usize, f64)>,
    pub wall_time: Duration,
    pub network: M,
}

impl<M> TrainReport<M> {
    /// Mean squared error used for model selection: test if available.
    pub fn selection_mse(&self) -> f64 {
        self.final_test_mse.unwrap_or(self.final_train_mse)
    }

    /// One JSON object per epoch. Non-finite values become `null`.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut tests = self.test_trace.iter().peekable();
        for (e, loss) in self.loss_trace.iter().enumerate() {
            let epoch = e + 1;
            let mut record = serde_json::json!({
                "seed": self.seed,
                "epoch": epoch,
                "train_mse": loss,
            });
            if let Some(&&(te, mse)) = tests.peek() {
                if te == epoch {
                    record["test_mse"] = serde_json::json!(mse);
                    tests.next();
                }
            }
            out.push_str(&record.to_string());
            out.push('\n');
        }
        out
    }

    pub const CSV_HEADER: &'static str = "seed,epochs,final_train_mse,final_test_mse";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:e},{}",
            self.seed,
            self.loss_trace.len(),
            self.final_train_mse,
            self.final_test_mse.map(|v| format!("{v:e}")).unwrap_or_default()
        )
    }
}

/// Minibatch SGD with classical momentum: `v <- mu v - lr g`, `theta <- theta + v`.
///
/// The training set is reshuffled every epoch from a generator seeded with
/// `cfg.seed`; the last short batch is kept. When one batch covers the whole
/// set it is used in its stored order. The test set, if any, is only read by
/// inference-mode evaluation for reporting.
pub fn sgd_train<M: Trainable>(
    net: &M,
    train: &Samples,
    cfg: &TrainConfig,
    test: Option<&Samples>,
) -> Result<TrainReport<M>, TrainError> {
    cfg.validate(train.len())?;
    check_batch(net, train)?;
    if let Some(t) = test {
        check_batch(net, t)?;
    }
    let started = Instant::now();
    let mut model = net.clone();
    let mut theta = model.params();
    let mut velocity = vec![0.0; theta.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = train.len();
    let full_batch = cfg.batch_size >= n;
    let natural: Vec<usize> = (0..n).collect();
    let mut loss_trace = Vec::with_capacity(cfg.epochs);
    let mut test_trace = Vec::new();
    let diverged = |epoch, loss, trace: &Vec<f64>| TrainError::Diverged {
        seed: cfg.seed,
        epoch,
        loss,
        trace: trace.clone(),
    };

    for epoch in 0..cfg.epochs {
        let order = if full_batch {
            natural.clone()
        } else {
            train.shuffled_indices(&mut rng)
        };
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch = train.subset(chunk);
            let lg = match model.loss_grad(&batch) {
                Ok(lg) => lg,
                Err(Error::NonFinite { .. }) => return Err(diverged(epoch + 1, f64::NAN, &loss_trace)),
                Err(e) => return Err(e.into()),
            };
            if !lg.loss.is_finite() || lg.loss > DIVERGENCE_THRESHOLD {
                return Err(diverged(epoch + 1, lg.loss, &loss_trace));
            }
            epoch_loss += lg.loss * chunk.len() as f64;
            for ((v, t), g) in velocity.iter_mut().zip(theta.iter_mut()).zip(&lg.grad) {
                *v = cfg.momentum * *v - cfg.learning_rate * g;
                *t += *v;
            }
            model.set_params(&theta);
            model.commit_batch_stats(&lg.norm_stats);
        }
        loss_trace.push(epoch_loss / n as f64);
        if let (Some(k), Some(t)) = (cfg.test_every, test) {
            if (epoch + 1) % k == 0 {
                test_trace.push((epoch + 1, evaluate_mse(&model, t)));
            }
        }
    }

    let final_train_mse = evaluate_mse(&model, train);
    if !final_train_mse.is_finite() {
        return Err(diverged(cfg.epochs, final_train_mse, &loss_trace));
    }
    Ok(TrainReport {
        seed: cfg.seed,
        final_train_mse,
        final_test_mse: test.map(|t| evaluate_mse(&model, t)),
        loss_trace,
        test_trace,
        wall_time: started.elapsed(),
        network: model,
    })
}

/// Every run of a best-of-restarts sweep, with the index of the winner.
#[derive(Clone, Debug)]
pub struct RestartOutcome<M> {
    pub best: usize,
    pub runs: Vec<Result<TrainReport<M>, TrainError>>,
}

impl<M> RestartOutcome<M> {
    pub fn best_report(&self) -> &TrainReport<M> {
        self.runs[self.best].as_ref().expect("best run succeeded")
    }

    pub fn into_best(mut self) -> TrainReport<M> {
        self.runs.swap_remove(self.best).expect("best run succeeded")
    }
}

/// Runs `cfg.restarts` independent trainings with seeds `seed, seed+1, ...`
/// (initialisation and shuffling share the run's seed) and keeps the one
/// with the lowest test MSE, the lower seed winning ties.
pub fn best_of_restarts_with<M, F>(
    init: F,
    train: &Samples,
    cfg: &TrainConfig,
    test: Option<&Samples>,
) -> Result<RestartOutcome<M>, TrainError>
where
    M: Trainable,
    F: Fn(u64) -> Result<M, Error> + Sync,
{
    cfg.validate(train.len())?;
    let runs: Vec<Result<TrainReport<M>, TrainError>> = (0..cfg.restarts as u64)
        .into_par_iter()
        .map(|r| {
            let seed = cfg.seed.wrapping_add(r);
            let net = init(seed)?;
            let run_cfg = TrainConfig { seed, ..cfg.clone() };
            sgd_train(&net, train, &run_cfg, test)
        })
        .collect();
    if let Some(Err(e)) = runs.iter().find(|r| matches!(r, Err(TrainError::Config(_) | TrainError::Model(_)))) {
        return Err(e.clone());
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, run) in runs.iter().enumerate() {
        if let Ok(report) = run {
            let mse = report.selection_mse();
            if best.is_none_or(|(_, b)| mse < b) {
                best = Some((i, mse));
            }
        }
    }
    match best {
        Some((best, _)) => Ok(RestartOutcome { best, runs }),
        None => Err(TrainError::AllDiverged(runs.len())),
    }
}

pub fn best_of_restarts(
    arch: &Architecture,
    train: &Samples,
    cfg: &TrainConfig,
    test: Option<&Samples>,
) -> Result<RestartOutcome<Network>, TrainError> {
    best_of_restarts_with(|seed| init_network(arch, seed), train, cfg, test)
}

/// Ridge least-squares refit of the outer coefficients `a_k` with the inner
/// weights held fixed.
pub fn refit_outer(net: &mut ShallowNet, samples: &Samples, lambda: f64) -> Result<(), Error> {
    check_batch(net, samples)?;
    if !(lambda >= 0.0) {
        return Err(Error::invalid(format!("lambda must be nonnegative, got {lambda}")));
    }
    let act = net.activation();
    let k = net.width();
    let mut gram = DMatrix::<f64>::zeros(k, k);
    let mut rhs = DVector::<f64>::zeros(k);
    let mut feats = vec![0.0; k];
    for s in 0..samples.len() {
        let x = samples.x(s);
        for (f, u) in feats.iter_mut().zip(net.units()) {
            *f = act.value(u.w.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + u.b);
        }
        for i in 0..k {
            rhs[i] += feats[i] * samples.y(s);
            for j in 0..k {
                gram[(i, j)] += feats[i] * feats[j];
            }
        }
    }
    for i in 0..k {
        gram[(i, i)] += lambda;
    }
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Singular(format!("outer refit of {k} units, lambda = {lambda}")))?;
    let a = chol.solve(&rhs);
    for (u, a) in net.units_mut().iter_mut().zip(a.iter()) {
        u.a = *a;
    }
    Ok(())
}

/// Result of fitting every tree vertex against its own constituent.
#[derive(Clone, Debug)]
pub struct StagedTreeReport {
    pub net: DeepTreeNet,
    pub node_reports: Vec<TrainReport<ShallowNet>>,
}

/// Seed offset separating the per-vertex sample generators.
const NODE_SEED_STRIDE: u64 = 1_000;

/// Fits each vertex's bivariate network by best-of-restarts SGD on samples
/// of its constituent drawn from the vertex's natural domain.
pub fn train_tree_staged(
    target: &CompositionalTarget,
    channels: usize,
    samples_per_node: usize,
    cfg: &TrainConfig,
    delta: f64,
) -> Result<StagedTreeReport, TrainError> {
    let arch = Architecture::Shallow {
        input_dim: 2,
        units: channels,
        delta,
    };
    let init = |seed| match init_network(&arch, seed)? {
        Network::Shallow(s) => Ok(s),
        _ => unreachable!("shallow architecture"),
    };
    let topo = target.topology();
    let mut nets = Vec::with_capacity(topo.node_count());
    let mut reports = Vec::with_capacity(topo.node_count());
    for i in 0..topo.node_count() {
        let oracle = BivariateFn(target.constituent(i).clone());
        let domain = &target.node_domains()[i];
        let base = cfg.seed.wrapping_add(NODE_SEED_STRIDE * (i as u64 + 1));
        let train = Samples::uniform(domain, samples_per_node, base, &oracle)?;
        let test = Samples::uniform(domain, samples_per_node, base.wrapping_add(NODE_SEED_STRIDE / 2), &oracle)?;
        let node_cfg = TrainConfig { seed: base, ..cfg.clone() };
        let report = best_of_restarts_with(init, &train, &node_cfg, Some(&test))?.into_best();
        nets.push(report.network.clone());
        reports.push(report);
    }
    let net = DeepTreeNet::new(topo.clone(), nets)?;
    Ok(StagedTreeReport {
        net,
        node_reports: reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_unit(w: f64) -> GenericMlp {
        let mut net = GenericMlp::zeros(&[1, 1], false, SmoothActivation::default()).unwrap();
        net.set_params(&[w, 0.0]);
        net
    }

    #[test]
    fn linear_unit_hand_derivative() {
        let batch = Samples::new(1, vec![1.0], vec![2.0]).unwrap();
        let g = backprop_grad(&linear_unit(0.0), &batch).unwrap();
        assert_eq!(g, vec![-4.0, -4.0]);
    }

    #[test]
    fn zero_output_zero_targets_zero_gradient() {
        let Network::Mlp(mut net) = init_network(&Architecture::mlp(&[2, 5, 5, 1], true), 3).unwrap() else {
            unreachable!()
        };
        let last = net.layers.len() - 1;
        net.layers[last].weights.iter_mut().for_each(|w| *w = 0.0);
        let batch = Samples::new(2, vec![0.1, 0.2, -0.3, 0.4, 0.5, -0.6], vec![0.0; 3]).unwrap();
        assert!(backprop_grad(&net, &batch).unwrap().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn empty_and_mismatched_batches() {
        let net = linear_unit(1.0);
        let empty = Samples::new(1, vec![], vec![]).unwrap();
        assert!(backprop_grad(&net, &empty).is_err());
        let wide = Samples::new(2, vec![1.0, 2.0], vec![0.0]).unwrap();
        assert!(matches!(backprop_grad(&net, &wide), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn squaring_construction_and_refit() {
        let act = SmoothActivation::default();
        let mut sq = ShallowNet::squaring(act, act.delta() / 10.0).unwrap();
        let worst = |n: &ShallowNet| {
            (0..=900)
                .map(|i| {
                    let t = i as f64 / 1000.0;
                    (n.forward(&[t]) - t * t).abs()
                })
                .fold(0.0, f64::max)
        };
        let built = worst(&sq);
        // Taylor remainder of the second difference is t^4 / 2400 at h = delta / 10.
        assert!(built < 0.9f64.powi(4) / 2400.0 * 1.01, "{built:e}");
        let xs: Vec<f64> = (0..=90).map(|i| i as f64 / 100.0).collect();
        let ys = xs.iter().map(|t| t * t).collect();
        refit_outer(&mut sq, &Samples::new(1, xs, ys).unwrap(), 0.0).unwrap();
        assert!(worst(&sq) < built);
    }

    #[test]
    fn config_validation() {
        let ok = TrainConfig {
            batch_size: 10,
            ..TrainConfig::default()
        };
        assert!(ok.validate(10).is_ok());
        assert!(ok.validate(9).is_err());
        for bad in [
            TrainConfig { learning_rate: 0.0, ..ok.clone() },
            TrainConfig { momentum: 1.0, ..ok.clone() },
            TrainConfig { momentum: -0.1, ..ok.clone() },
            TrainConfig { batch_size: 0, ..ok.clone() },
            TrainConfig { restarts: 0, ..ok.clone() },
        ] {
            assert!(matches!(bad.validate(10), Err(TrainError::Config(_))));
        }
    }

    #[test]
    fn divergence_aborts_with_report() {
        let net = linear_unit(1.0);
        let train = Samples::new(1, vec![1.0, 2.0, 3.0], vec![1.0, 0.0, -1.0]).unwrap();
        let cfg = TrainConfig {
            learning_rate: 10.0,
            momentum: 0.9,
            batch_size: 3,
            epochs: 100,
            restarts: 1,
            ..TrainConfig::default()
        };
        match sgd_train(&net, &train, &cfg, None) {
            Err(TrainError::Diverged { epoch, trace, .. }) => {
                assert!(epoch < 100);
                assert_eq!(trace.len(), epoch - 1);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn jsonl_has_one_line_per_epoch() {
        let train = Samples::new(1, vec![1.0, 2.0], vec![2.0, 4.0]).unwrap();
        let cfg = TrainConfig {
            learning_rate: 0.01,
            batch_size: 2,
            epochs: 4,
            restarts: 1,
            test_every: Some(2),
            ..TrainConfig::default()
        };
        let r = sgd_train(&linear_unit(0.0), &train, &cfg, Some(&train)).unwrap();
        let text = r.to_jsonl();
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().nth(1).unwrap().contains("test_mse"));
        assert!(!text.lines().next().unwrap().contains("test_mse"));
        assert_eq!(r.csv_row().split(',').count(), 4);
    }
}

//! Minimal dense neural-network machinery: forward evaluation, reverse-mode
//! gradients, and Adam. Everything is 64-bit and single-threaded; training
//! code owns its network exclusively, while EVAL-mode forward is pure and
//! safe to share.
//!
//! A network is a chain of layers, each an affine map followed by optional
//! batch normalization and an activation. `forward_train` uses batch
//! statistics and returns a cache for `backward`; it does not mutate the
//! network — running statistics advance only through the explicit
//! [`DenseNetwork::update_running_stats`] step. `forward_eval` uses running
//! statistics and is bit-stable across calls.
//!
//! Parameters are exposed as one flat vector (per layer: weights row-major,
//! bias, then batch-norm scale and shift) so the optimizer and checkpoint
//! code can stay shape-agnostic.

use crate::rng::{mix_key, Xoshiro256};

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value in network input")]
    NonFiniteInput,
    #[error("non-finite gradient; optimizer step aborted")]
    NonFiniteGradient,
    #[error("cache does not match this network and batch")]
    StaleCache,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("checkpoint malformed: {0}")]
    Format(String),
}

/// Row-major matrix; rows are batch samples, columns are features.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Matrix {
        assert_eq!(rows * cols, data.len());
        Matrix { rows, cols, data }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Activation {
    Linear,
    LeakyRelu(f64),
    Sigmoid,
    Tanh,
}

impl Activation {
    pub fn apply(&self, x: f64) -> f64 {
        match *self {
            Activation::Linear => x,
            Activation::LeakyRelu(a) => {
                if x > 0.0 {
                    x
                } else {
                    a * x
                }
            }
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative given the pre-activation input and the produced output.
    fn derivative(&self, x: f64, y: f64) -> f64 {
        match *self {
            Activation::Linear => 1.0,
            Activation::LeakyRelu(a) => {
                if x > 0.0 {
                    1.0
                } else {
                    a
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
        }
    }

    fn code(&self) -> (u8, f64) {
        match *self {
            Activation::Linear => (0, 0.0),
            Activation::LeakyRelu(a) => (1, a),
            Activation::Sigmoid => (2, 0.0),
            Activation::Tanh => (3, 0.0),
        }
    }

    fn from_code(code: u8, param: f64) -> Result<Activation, NnError> {
        match code {
            0 => Ok(Activation::Linear),
            1 => {
                if param > 0.0 && param < 1.0 {
                    Ok(Activation::LeakyRelu(param))
                } else {
                    Err(NnError::Format(format!("leaky-relu slope {param} not in (0,1)")))
                }
            }
            2 => Ok(Activation::Sigmoid),
            3 => Ok(Activation::Tanh),
            c => Err(NnError::Format(format!("unknown activation code {c}"))),
        }
    }
}

/// Numerical floor inside the batch-norm square root.
pub const BN_EPS: f64 = 1e-8;
/// Exponential-averaging momentum for running batch-norm statistics.
pub const BN_MOMENTUM: f64 = 0.9;

#[derive(Clone, Debug, PartialEq)]
pub struct BatchNorm {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
}

impl BatchNorm {
    fn identity(dim: usize) -> BatchNorm {
        BatchNorm {
            gamma: vec![1.0; dim],
            beta: vec![0.0; dim],
            running_mean: vec![0.0; dim],
            running_var: vec![1.0; dim],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    /// out_dim × in_dim, row-major.
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
    pub batch_norm: Option<BatchNorm>,
}

/// Shape of one layer for network construction.
#[derive(Clone, Copy, Debug)]
pub struct LayerSpec {
    pub out_dim: usize,
    pub activation: Activation,
    pub batch_norm: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseNetwork {
    pub layers: Vec<Layer>,
}

struct BnCache {
    mean: Vec<f64>,
    var: Vec<f64>,
    xhat: Matrix,
}

struct LayerCache {
    input: Matrix,
    bn: Option<BnCache>,
    act_in: Matrix,
    out: Matrix,
}

/// Intermediates from one TRAIN-mode forward pass.
pub struct Cache {
    layers: Vec<LayerCache>,
    dims: Vec<usize>,
}

impl DenseNetwork {
    /// Initialize with weights uniform in ±1/√fan_in from a seeded stream;
    /// biases zero, batch-norm at identity.
    pub fn init(input_dim: usize, specs: &[LayerSpec], seed: u64) -> DenseNetwork {
        let mut layers = Vec::with_capacity(specs.len());
        let mut in_dim = input_dim;
        for (l, spec) in specs.iter().enumerate() {
            let mut rng = Xoshiro256::seed_from_u64(mix_key(seed, &[l as u64]));
            let scale = 1.0 / (in_dim as f64).sqrt();
            let weight = (0..spec.out_dim * in_dim)
                .map(|_| (rng.unit() * 2.0 - 1.0) * scale)
                .collect();
            layers.push(Layer {
                in_dim,
                out_dim: spec.out_dim,
                weight,
                bias: vec![0.0; spec.out_dim],
                activation: spec.activation,
                batch_norm: spec.batch_norm.then(|| BatchNorm::identity(spec.out_dim)),
            });
            in_dim = spec.out_dim;
        }
        DenseNetwork { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.in_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim)
    }

    fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.input_dim()];
        d.extend(self.layers.iter().map(|l| l.out_dim));
        d
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| {
                l.weight.len() + l.bias.len() + if l.batch_norm.is_some() { 2 * l.out_dim } else { 0 }
            })
            .sum()
    }

    /// Trainable parameters as one flat vector (weights, bias, then
    /// batch-norm scale and shift per layer). Running statistics are state,
    /// not parameters, and are excluded.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend_from_slice(&l.weight);
            out.extend_from_slice(&l.bias);
            if let Some(bn) = &l.batch_norm {
                out.extend_from_slice(&bn.gamma);
                out.extend_from_slice(&bn.beta);
            }
        }
        out
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<(), NnError> {
        if flat.len() != self.param_count() {
            return Err(NnError::DimensionMismatch {
                expected: self.param_count(),
                got: flat.len(),
            });
        }
        let mut at = 0;
        let take = |n: usize, at: &mut usize| {
            let s = &flat[*at..*at + n];
            *at += n;
            s.to_vec()
        };
        for l in &mut self.layers {
            l.weight = take(l.weight.len(), &mut at);
            l.bias = take(l.bias.len(), &mut at);
            if let Some(bn) = &mut l.batch_norm {
                bn.gamma = take(bn.gamma.len(), &mut at);
                bn.beta = take(bn.beta.len(), &mut at);
            }
        }
        Ok(())
    }

    fn check_input(&self, batch: &Matrix) -> Result<(), NnError> {
        if batch.cols != self.input_dim() {
            return Err(NnError::DimensionMismatch {
                expected: self.input_dim(),
                got: batch.cols,
            });
        }
        if batch.data.iter().any(|v| !v.is_finite()) {
            return Err(NnError::NonFiniteInput);
        }
        Ok(())
    }

    fn affine(layer: &Layer, input: &Matrix) -> Matrix {
        let mut z = Matrix::zeros(input.rows, layer.out_dim);
        for s in 0..input.rows {
            let a = input.row(s);
            for o in 0..layer.out_dim {
                let w = &layer.weight[o * layer.in_dim..(o + 1) * layer.in_dim];
                let mut acc = layer.bias[o];
                for (wi, ai) in w.iter().zip(a) {
                    acc += wi * ai;
                }
                z.set(s, o, acc);
            }
        }
        z
    }

    /// EVAL-mode forward: running batch-norm statistics, no cache, pure.
    pub fn forward_eval(&self, batch: &Matrix) -> Result<Matrix, NnError> {
        self.check_input(batch)?;
        let mut x = batch.clone();
        for layer in &self.layers {
            let mut z = Self::affine(layer, &x);
            if let Some(bn) = &layer.batch_norm {
                for s in 0..z.rows {
                    for o in 0..layer.out_dim {
                        let xhat =
                            (z.get(s, o) - bn.running_mean[o]) / (bn.running_var[o] + BN_EPS).sqrt();
                        z.set(s, o, bn.gamma[o] * xhat + bn.beta[o]);
                    }
                }
            }
            for v in z.data.iter_mut() {
                *v = layer.activation.apply(*v);
            }
            x = z;
        }
        Ok(x)
    }

    /// TRAIN-mode forward: batch statistics, intermediates cached for
    /// `backward`. Does not mutate the network.
    pub fn forward_train(&self, batch: &Matrix) -> Result<(Matrix, Cache), NnError> {
        self.check_input(batch)?;
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut x = batch.clone();
        for layer in &self.layers {
            let z = Self::affine(layer, &x);
            let n = z.rows as f64;
            let (act_in, bn_cache) = match &layer.batch_norm {
                Some(bn) => {
                    let mut mean = vec![0.0; layer.out_dim];
                    let mut var = vec![0.0; layer.out_dim];
                    for o in 0..layer.out_dim {
                        let mut m = 0.0;
                        for s in 0..z.rows {
                            m += z.get(s, o);
                        }
                        m /= n;
                        let mut v = 0.0;
                        for s in 0..z.rows {
                            let d = z.get(s, o) - m;
                            v += d * d;
                        }
                        mean[o] = m;
                        var[o] = v / n;
                    }
                    let mut xhat = Matrix::zeros(z.rows, z.cols);
                    let mut y = Matrix::zeros(z.rows, z.cols);
                    for s in 0..z.rows {
                        for o in 0..layer.out_dim {
                            let xh = (z.get(s, o) - mean[o]) / (var[o] + BN_EPS).sqrt();
                            xhat.set(s, o, xh);
                            y.set(s, o, bn.gamma[o] * xh + bn.beta[o]);
                        }
                    }
                    (y, Some(BnCache { mean, var, xhat }))
                }
                None => (z, None),
            };
            let mut out = act_in.clone();
            for v in out.data.iter_mut() {
                *v = layer.activation.apply(*v);
            }
            caches.push(LayerCache {
                input: x,
                bn: bn_cache,
                act_in: act_in.clone(),
                out: out.clone(),
            });
            x = out;
        }
        let dims = self.dims();
        Ok((
            x,
            Cache {
                layers: caches,
                dims,
            },
        ))
    }

    /// Fold the batch statistics recorded in `cache` into the running
    /// statistics: running ← momentum·running + (1−momentum)·batch.
    pub fn update_running_stats(&mut self, cache: &Cache) -> Result<(), NnError> {
        if cache.dims != self.dims() {
            return Err(NnError::StaleCache);
        }
        for (layer, lc) in self.layers.iter_mut().zip(&cache.layers) {
            if let (Some(bn), Some(bc)) = (&mut layer.batch_norm, &lc.bn) {
                for o in 0..layer.out_dim {
                    bn.running_mean[o] =
                        BN_MOMENTUM * bn.running_mean[o] + (1.0 - BN_MOMENTUM) * bc.mean[o];
                    bn.running_var[o] =
                        BN_MOMENTUM * bn.running_var[o] + (1.0 - BN_MOMENTUM) * bc.var[o];
                }
            }
        }
        Ok(())
    }

    /// Reverse-mode gradients of a scalar loss. `out_grad` holds ∂loss/∂output
    /// per sample; returns (flat parameter gradient, gradient w.r.t. the
    /// input batch) so networks can be chained.
    pub fn backward(&self, cache: &Cache, out_grad: &Matrix) -> Result<(Vec<f64>, Matrix), NnError> {
        if cache.dims != self.dims() || cache.layers.len() != self.layers.len() {
            return Err(NnError::StaleCache);
        }
        let last = cache.layers.last().ok_or(NnError::StaleCache)?;
        if out_grad.rows != last.out.rows || out_grad.cols != last.out.cols {
            return Err(NnError::StaleCache);
        }

        // Per-layer gradient blocks, filled back to front.
        let mut blocks: Vec<Vec<f64>> = vec![Vec::new(); self.layers.len()];
        let mut dy = out_grad.clone();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let lc = &cache.layers[l];
            let rows = dy.rows;
            // Through the activation.
            let mut d_actin = Matrix::zeros(rows, layer.out_dim);
            for s in 0..rows {
                for o in 0..layer.out_dim {
                    let g = dy.get(s, o)
                        * layer
                            .activation
                            .derivative(lc.act_in.get(s, o), lc.out.get(s, o));
                    d_actin.set(s, o, g);
                }
            }
            // Through batch norm (if present) onto the affine output z.
            let (dz, mut bn_grads) = match (&layer.batch_norm, &lc.bn) {
                (Some(bn), Some(bc)) => {
                    let n = rows as f64;
                    let mut dgamma = vec![0.0; layer.out_dim];
                    let mut dbeta = vec![0.0; layer.out_dim];
                    let mut dz = Matrix::zeros(rows, layer.out_dim);
                    for o in 0..layer.out_dim {
                        let inv_std = 1.0 / (bc.var[o] + BN_EPS).sqrt();
                        let mut sum_dxhat = 0.0;
                        let mut sum_dxhat_xhat = 0.0;
                        for s in 0..rows {
                            let dxh = d_actin.get(s, o) * bn.gamma[o];
                            sum_dxhat += dxh;
                            sum_dxhat_xhat += dxh * bc.xhat.get(s, o);
                            dgamma[o] += d_actin.get(s, o) * bc.xhat.get(s, o);
                            dbeta[o] += d_actin.get(s, o);
                        }
                        for s in 0..rows {
                            let dxh = d_actin.get(s, o) * bn.gamma[o];
                            let g = inv_std
                                * (dxh
                                    - sum_dxhat / n
                                    - bc.xhat.get(s, o) * sum_dxhat_xhat / n);
                            dz.set(s, o, g);
                        }
                    }
                    let mut bn_flat = dgamma;
                    bn_flat.extend(dbeta);
                    (dz, bn_flat)
                }
                (None, None) => (d_actin, Vec::new()),
                _ => return Err(NnError::StaleCache),
            };
            // Through the affine map.
            let mut dw = vec![0.0; layer.weight.len()];
            let mut db = vec![0.0; layer.out_dim];
            let mut dx = Matrix::zeros(rows, layer.in_dim);
            for s in 0..rows {
                let a = lc.input.row(s);
                for o in 0..layer.out_dim {
                    let g = dz.get(s, o);
                    if g == 0.0 {
                        continue;
                    }
                    db[o] += g;
                    let wrow = &layer.weight[o * layer.in_dim..(o + 1) * layer.in_dim];
                    let dwrow = &mut dw[o * layer.in_dim..(o + 1) * layer.in_dim];
                    for i in 0..layer.in_dim {
                        dwrow[i] += g * a[i];
                        dx.data[s * layer.in_dim + i] += g * wrow[i];
                    }
                }
            }
            let mut block = dw;
            block.extend(db);
            block.append(&mut bn_grads);
            blocks[l] = block;
            dy = dx;
        }
        let mut flat = Vec::with_capacity(self.param_count());
        for b in blocks {
            flat.extend(b);
        }
        Ok((flat, dy))
    }
}

// --- Adam -------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(param_count: usize) -> AdamState {
        AdamState {
            m: vec![0.0; param_count],
            v: vec![0.0; param_count],
            t: 0,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct AdamParams {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamParams {
    pub fn with_lr(lr: f64, beta1: f64) -> AdamParams {
        AdamParams {
            lr,
            beta1,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One Adam update with bias correction. A non-finite gradient aborts the
/// step before any state is touched.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    hp: &AdamParams,
) -> Result<(), NnError> {
    if params.len() != grads.len() || state.m.len() != params.len() {
        return Err(NnError::DimensionMismatch {
            expected: params.len(),
            got: grads.len(),
        });
    }
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(NnError::NonFiniteGradient);
    }
    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - hp.beta1.powi(t);
    let bc2 = 1.0 - hp.beta2.powi(t);
    for k in 0..params.len() {
        state.m[k] = hp.beta1 * state.m[k] + (1.0 - hp.beta1) * grads[k];
        state.v[k] = hp.beta2 * state.v[k] + (1.0 - hp.beta2) * grads[k] * grads[k];
        let mhat = state.m[k] / bc1;
        let vhat = state.v[k] / bc2;
        params[k] -= hp.lr * mhat / (vhat.sqrt() + hp.eps);
    }
    Ok(())
}

// --- checkpoints -------------------------------------------------------------

const LFNN_MAGIC: &[u8; 4] = b"LFNN";
const LFNN_VERSION: u16 = 1;

/// Serialize a network: magic "LFNN", u16 LE version, u16 layer count, per
/// layer a shape header (u32 in, u32 out, u8 activation code, f64 activation
/// parameter, u8 batch-norm flag), then per layer f64 LE parameter blocks
/// (weights, bias, and for batch-norm layers scale/shift/running statistics).
pub fn checkpoint_bytes(net: &DenseNetwork) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(LFNN_MAGIC);
    out.extend_from_slice(&LFNN_VERSION.to_le_bytes());
    out.extend_from_slice(&(net.layers.len() as u16).to_le_bytes());
    for l in &net.layers {
        out.extend_from_slice(&(l.in_dim as u32).to_le_bytes());
        out.extend_from_slice(&(l.out_dim as u32).to_le_bytes());
        let (code, param) = l.activation.code();
        out.push(code);
        out.extend_from_slice(&param.to_le_bytes());
        out.push(l.batch_norm.is_some() as u8);
    }
    let write_all = |vals: &[f64], out: &mut Vec<u8>| {
        for v in vals {
            out.extend_from_slice(&v.to_le_bytes());
        }
    };
    for l in &net.layers {
        write_all(&l.weight, &mut out);
        write_all(&l.bias, &mut out);
        if let Some(bn) = &l.batch_norm {
            write_all(&bn.gamma, &mut out);
            write_all(&bn.beta, &mut out);
            write_all(&bn.running_mean, &mut out);
            write_all(&bn.running_var, &mut out);
        }
    }
    out
}

pub fn checkpoint_from_bytes(bytes: &[u8]) -> Result<DenseNetwork, NnError> {
    let bad = |m: &str| NnError::Format(m.to_string());
    if bytes.len() < 8 || &bytes[0..4] != LFNN_MAGIC {
        return Err(bad("bad LFNN magic"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != LFNN_VERSION {
        return Err(NnError::Format(format!("unsupported version {version}")));
    }
    let count = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
    let mut at = 8usize;
    let need = |n: usize, at: &mut usize| -> Result<usize, NnError> {
        if *at + n > bytes.len() {
            return Err(NnError::Format("checkpoint truncated".into()));
        }
        let s = *at;
        *at += n;
        Ok(s)
    };
    struct Header {
        in_dim: usize,
        out_dim: usize,
        activation: Activation,
        bn: bool,
    }
    let mut headers = Vec::with_capacity(count);
    for _ in 0..count {
        let s = need(4 + 4 + 1 + 8 + 1, &mut at)?;
        let in_dim = u32::from_le_bytes(bytes[s..s + 4].try_into().unwrap()) as usize;
        let out_dim = u32::from_le_bytes(bytes[s + 4..s + 8].try_into().unwrap()) as usize;
        let code = bytes[s + 8];
        let param = f64::from_le_bytes(bytes[s + 9..s + 17].try_into().unwrap());
        let bn = match bytes[s + 17] {
            0 => false,
            1 => true,
            v => return Err(NnError::Format(format!("bad batch-norm flag {v}"))),
        };
        headers.push(Header {
            in_dim,
            out_dim,
            activation: Activation::from_code(code, param)?,
            bn,
        });
    }
    for pair in headers.windows(2) {
        if pair[0].out_dim != pair[1].in_dim {
            return Err(bad("layer dimensions do not chain"));
        }
    }
    let read_vec = |n: usize, at: &mut usize| -> Result<Vec<f64>, NnError> {
        let s = need(8 * n, at)?;
        Ok((0..n)
            .map(|k| f64::from_le_bytes(bytes[s + 8 * k..s + 8 * (k + 1)].try_into().unwrap()))
            .collect())
    };
    let mut layers = Vec::with_capacity(count);
    for hd in &headers {
        let weight = read_vec(hd.in_dim * hd.out_dim, &mut at)?;
        let bias = read_vec(hd.out_dim, &mut at)?;
        let batch_norm = if hd.bn {
            let bn = BatchNorm {
                gamma: read_vec(hd.out_dim, &mut at)?,
                beta: read_vec(hd.out_dim, &mut at)?,
                running_mean: read_vec(hd.out_dim, &mut at)?,
                running_var: read_vec(hd.out_dim, &mut at)?,
            };
            if bn.running_mean.iter().chain(&bn.running_var).any(|v| !v.is_finite()) {
                return Err(bad("non-finite running statistics"));
            }
            Some(bn)
        } else {
            None
        };
        layers.push(Layer {
            in_dim: hd.in_dim,
            out_dim: hd.out_dim,
            weight,
            bias,
            activation: hd.activation,
            batch_norm,
        });
    }
    if at != bytes.len() {
        return Err(bad("trailing bytes after parameters"));
    }
    Ok(DenseNetwork { layers })
}

pub fn save_checkpoint(net: &DenseNetwork, path: &std::path::Path) -> Result<(), NnError> {
    std::fs::write(path, checkpoint_bytes(net))?;
    Ok(())
}

pub fn load_checkpoint(path: &std::path::Path) -> Result<DenseNetwork, NnError> {
    checkpoint_from_bytes(&std::fs::read(path)?)
}

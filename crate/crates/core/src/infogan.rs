//! Information-regularized GAN over three-class rasters.
//!
//! Three dense networks share the hand-rolled substrate in [`crate::nn`]:
//! the generator maps a latent code to per-pixel class logits (a per-pixel
//! softmax yields channel probabilities, an argmax the hard raster), the
//! discriminator scores rasters real-vs-generated through a sigmoid head, and
//! the auxiliary encoder recovers the latent code from a raster. The squared
//! reconstruction error of that code is the mutual-information surrogate
//! added to the generator objective, so a trained model gives a smooth,
//! roughly invertible map between the latent ball and manifold designs.

use std::path::Path;

use crate::archetypes::ArchetypeId;
use crate::nn::{
    adam_step, load_checkpoint, save_checkpoint, Activation, AdamParams, AdamState, DenseNetwork,
    LayerSpec, Matrix, NnError,
};
use crate::raster::{CellClass, Provenance, RasterDesign};
use crate::rng::{mix_key, Xoshiro256};

/// Negative slope of the hidden leaky-ReLU units.
const LEAK: f64 = 0.2;
/// Adam first-moment decay used for all three networks.
const ADAM_BETA1: f64 = 0.5;
/// Probabilities are clamped into [PROB_EPS, 1 - PROB_EPS] before logs so a
/// saturated discriminator yields a large-but-finite loss instead of ±inf.
const PROB_EPS: f64 = 1e-12;
/// Mean per-entry variance of a generated batch below this raises the
/// mode-collapse warning.
pub const MODE_COLLAPSE_VARIANCE: f64 = 1e-4;
/// Default weight of the mutual-information (code reconstruction) term.
pub const DEFAULT_LAMBDA_INFO: f64 = 1.0;
/// Latent vectors are drawn from a standard normal; callers are warned (not
/// rejected) when asked to decode points outside this ball radius.
pub const LATENT_WARN_RADIUS: f64 = 2.0;

#[derive(Debug, thiserror::Error)]
pub enum InfoGanError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("probe set is empty")]
    EmptyProbes,
    #[error("invalid training config: {0}")]
    BadConfig(String),
    #[error("corpus rasters must share one square resolution ({0})")]
    MixedResolution(String),
    #[error("raster is {got}, model expects {expected}×{expected}")]
    ResolutionMismatch { expected: u32, got: String },
    #[error("latent vector has {got} dims, model expects {expected}")]
    LatentDimMismatch { expected: usize, got: usize },
    #[error("model has not been trained")]
    Untrained,
    #[error("training diverged at epoch {epoch}: {what}")]
    Diverged {
        epoch: usize,
        what: String,
        history: Box<TrainHistory>,
    },
    #[error("latent dimension {0} appears more than once in the sweep")]
    DuplicateDim(usize),
    #[error("sweep needs at least one latent dimension")]
    EmptySweep,
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("model sidecar malformed: {0}")]
    Format(String),
}

/// Knobs for one training run.
#[derive(Clone, Debug)]
pub struct TrainConfig {
    pub latent_dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub lambda_info: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    /// Desk-scale defaults: small batches and a few hundred epochs train the
    /// smoke-size corpora used by the tests and the demo in seconds.
    fn default() -> TrainConfig {
        TrainConfig {
            latent_dim: 8,
            epochs: 200,
            batch_size: 16,
            learning_rate: 2e-3,
            lambda_info: DEFAULT_LAMBDA_INFO,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Full-scale reference preset: eight latent dimensions trained for
    /// 10,000 epochs, the configuration that reaches the learning plateau.
    pub fn reference_preset() -> TrainConfig {
        TrainConfig {
            latent_dim: 8,
            epochs: 10_000,
            batch_size: 32,
            learning_rate: 2e-3,
            lambda_info: DEFAULT_LAMBDA_INFO,
            seed: 0,
        }
    }
}

/// One epoch of recorded losses.
#[derive(Clone, Copy, Debug)]
pub struct TrainEpoch {
    pub epoch: usize,
    pub d_loss: f64,
    pub g_loss: f64,
    /// Unweighted mean squared code-reconstruction error ‖x − A(G(x))‖².
    pub info_loss: f64,
    /// Round-trip color RMSE on the held-out probe subset.
    pub probe_rmse: f64,
}

/// Loss trajectory of one training run plus any warnings raised.
#[derive(Clone, Debug, Default)]
pub struct TrainHistory {
    pub epochs: Vec<TrainEpoch>,
    /// Epochs whose generated batch had near-zero pixel variance.
    pub mode_collapse_epochs: Vec<usize>,
}

/// Generator / discriminator / auxiliary-encoder triad.
#[derive(Clone, Debug)]
pub struct InfoGanModel {
    pub generator: DenseNetwork,
    pub discriminator: DenseNetwork,
    pub auxiliary: DenseNetwork,
    pub latent_dim: usize,
    pub resolution: u32,
    pub trained_epochs: usize,
}

fn hidden(out_dim: usize) -> LayerSpec {
    LayerSpec {
        out_dim,
        activation: Activation::LeakyRelu(LEAK),
        batch_norm: true,
    }
}

/// Hidden layer without batch norm, for the discriminator only: normalizing
/// each forward pass by its own batch statistics lets the discriminator
/// separate real from generated batches by composition alone (the two are
/// never mixed in one pass), which starves the generator of useful gradient.
fn hidden_plain(out_dim: usize) -> LayerSpec {
    LayerSpec {
        out_dim,
        activation: Activation::LeakyRelu(LEAK),
        batch_norm: false,
    }
}

fn head(out_dim: usize, activation: Activation) -> LayerSpec {
    LayerSpec {
        out_dim,
        activation,
        batch_norm: false,
    }
}

impl InfoGanModel {
    /// Fresh, untrained triad at the given resolution. The generator widens
    /// d→128→256→H·W·3 (linear logits), the discriminator and auxiliary
    /// encoder narrow H·W·3→256→128 before their one-unit sigmoid and
    /// d-unit linear heads respectively.
    pub fn init(latent_dim: usize, resolution: u32, seed: u64) -> InfoGanModel {
        let pix = (resolution * resolution * 3) as usize;
        let generator = DenseNetwork::init(
            latent_dim,
            &[hidden(128), hidden(256), head(pix, Activation::Linear)],
            mix_key(seed, &[0x47]),
        );
        let discriminator = DenseNetwork::init(
            pix,
            &[hidden_plain(256), hidden_plain(128), head(1, Activation::Sigmoid)],
            mix_key(seed, &[0x44]),
        );
        let auxiliary = DenseNetwork::init(
            pix,
            &[hidden(256), hidden(128), head(latent_dim, Activation::Linear)],
            mix_key(seed, &[0x41]),
        );
        InfoGanModel {
            generator,
            discriminator,
            auxiliary,
            latent_dim,
            resolution,
            trained_epochs: 0,
        }
    }

    pub fn is_trained(&self) -> bool {
        self.trained_epochs > 0
    }

    fn channels(&self) -> usize {
        (self.resolution * self.resolution * 3) as usize
    }
}

// --- raster <-> channel encoding ---------------------------------------------

/// One-hot channel encoding of a raster, pixel-major: three consecutive
/// entries per pixel, 1.0 at the pixel's class channel.
pub fn one_hot(design: &RasterDesign) -> Vec<f64> {
    let mut v = vec![0.0; design.classes.len() * 3];
    for (p, &c) in design.classes.iter().enumerate() {
        v[p * 3 + c as usize] = 1.0;
    }
    v
}

fn one_hot_batch(designs: &[&RasterDesign]) -> Matrix {
    let cols = designs.first().map_or(0, |d| d.classes.len() * 3);
    let mut data = Vec::with_capacity(designs.len() * cols);
    for d in designs {
        data.extend(one_hot(d));
    }
    Matrix::from_vec(designs.len(), cols, data)
}

/// Numerically stable per-pixel softmax over groups of three logit channels.
fn pixel_softmax(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for r in 0..out.rows {
        let row = &mut out.data[r * out.cols..(r + 1) * out.cols];
        for px in row.chunks_exact_mut(3) {
            let m = px[0].max(px[1]).max(px[2]);
            let e0 = (px[0] - m).exp();
            let e1 = (px[1] - m).exp();
            let e2 = (px[2] - m).exp();
            let s = e0 + e1 + e2;
            px[0] = e0 / s;
            px[1] = e1 / s;
            px[2] = e2 / s;
        }
    }
    out
}

/// Argmax class per pixel; ties resolve to the lowest class index.
fn hard_raster(probs: &[f64], resolution: u32) -> RasterDesign {
    let classes = probs
        .chunks_exact(3)
        .map(|p| {
            let mut best = 0u8;
            if p[1] > p[best as usize] {
                best = 1;
            }
            if p[2] > p[best as usize] {
                best = 2;
            }
            CellClass::from_code(best).unwrap()
        })
        .collect();
    RasterDesign {
        width: resolution,
        height: resolution,
        classes,
        provenance: generated_provenance(),
    }
}

/// Sentinel provenance for decoder-generated designs (no table rows).
pub fn generated_provenance() -> Provenance {
    Provenance {
        left_archetype: ArchetypeId::Prong2,
        left_row: u32::MAX,
        right_archetype: ArchetypeId::Prong2,
        right_row: u32::MAX,
    }
}

// --- generate / encode --------------------------------------------------------

/// Decoded batch: soft channel probabilities plus the hard argmax rasters.
#[derive(Clone, Debug)]
pub struct GeneratedBatch {
    /// Per design, pixel-major channel probabilities (resolution²·3 values).
    pub probabilities: Vec<Vec<f64>>,
    pub rasters: Vec<RasterDesign>,
    /// Indices of inputs whose 2-norm exceeded [`LATENT_WARN_RADIUS`];
    /// decoded anyway, flagged for the caller.
    pub out_of_ball: Vec<usize>,
}

/// Decode latent vectors through the generator (eval mode, deterministic).
pub fn generate(model: &InfoGanModel, xs: &[Vec<f64>]) -> Result<GeneratedBatch, InfoGanError> {
    if !model.is_trained() {
        return Err(InfoGanError::Untrained);
    }
    let mut out_of_ball = Vec::new();
    let mut flat = Vec::with_capacity(xs.len() * model.latent_dim);
    for (i, x) in xs.iter().enumerate() {
        if x.len() != model.latent_dim {
            return Err(InfoGanError::LatentDimMismatch {
                expected: model.latent_dim,
                got: x.len(),
            });
        }
        if x.iter().map(|v| v * v).sum::<f64>().sqrt() > LATENT_WARN_RADIUS {
            out_of_ball.push(i);
        }
        flat.extend_from_slice(x);
    }
    if xs.is_empty() {
        return Ok(GeneratedBatch {
            probabilities: Vec::new(),
            rasters: Vec::new(),
            out_of_ball,
        });
    }
    let input = Matrix::from_vec(xs.len(), model.latent_dim, flat);
    let logits = model.generator.forward_eval(&input)?;
    let probs = pixel_softmax(&logits);
    let mut probabilities = Vec::with_capacity(xs.len());
    let mut rasters = Vec::with_capacity(xs.len());
    for r in 0..probs.rows {
        let row = probs.row(r).to_vec();
        rasters.push(hard_raster(&row, model.resolution));
        probabilities.push(row);
    }
    Ok(GeneratedBatch {
        probabilities,
        rasters,
        out_of_ball,
    })
}

/// Encode rasters into latent codes through the auxiliary network (eval
/// mode). Works on untrained models too — the codes are just uninformative.
pub fn encode(model: &InfoGanModel, designs: &[RasterDesign]) -> Result<Vec<Vec<f64>>, InfoGanError> {
    for d in designs {
        if d.width != model.resolution || d.height != model.resolution {
            return Err(InfoGanError::ResolutionMismatch {
                expected: model.resolution,
                got: format!("{}×{}", d.width, d.height),
            });
        }
    }
    if designs.is_empty() {
        return Ok(Vec::new());
    }
    let refs: Vec<&RasterDesign> = designs.iter().collect();
    let input = one_hot_batch(&refs);
    let codes = model.auxiliary.forward_eval(&input)?;
    Ok((0..codes.rows).map(|r| codes.row(r).to_vec()).collect())
}

// --- reconstruction RMSE -------------------------------------------------------

/// Round-trip color RMSE of generate(encode(probe)) against the probes, on
/// the 0–255 hard-class color encoding (channel c of class k is 255·[c = k]),
/// averaged over pixels, channels, and probes. A pixel classified into the
/// wrong class therefore contributes (255² + 255² + 0)/3 to the mean square.
pub fn reconstruction_rmse(
    model: &InfoGanModel,
    probes: &[RasterDesign],
) -> Result<f64, InfoGanError> {
    if !model.is_trained() {
        return Err(InfoGanError::Untrained);
    }
    rmse_nets(&model.generator, &model.auxiliary, model.resolution, probes)
}

/// RMSE core shared with the in-training probe evaluation (no trained check).
fn rmse_nets(
    generator: &DenseNetwork,
    auxiliary: &DenseNetwork,
    resolution: u32,
    probes: &[RasterDesign],
) -> Result<f64, InfoGanError> {
    if probes.is_empty() {
        return Err(InfoGanError::EmptyProbes);
    }
    for d in probes {
        if d.width != resolution || d.height != resolution {
            return Err(InfoGanError::ResolutionMismatch {
                expected: resolution,
                got: format!("{}×{}", d.width, d.height),
            });
        }
    }
    let refs: Vec<&RasterDesign> = probes.iter().collect();
    let codes = auxiliary.forward_eval(&one_hot_batch(&refs))?;
    let logits = generator.forward_eval(&codes)?;
    let probs = pixel_softmax(&logits);
    let mut mismatched = 0u64;
    let mut pixels = 0u64;
    for (r, probe) in probes.iter().enumerate() {
        let rec = hard_raster(probs.row(r), resolution);
        for (a, b) in probe.classes.iter().zip(&rec.classes) {
            pixels += 1;
            if a != b {
                mismatched += 1;
            }
        }
    }
    let mean_square = mismatched as f64 * 2.0 * 255.0 * 255.0 / (pixels as f64 * 3.0);
    Ok(mean_square.sqrt())
}

// --- training -------------------------------------------------------------------

/// Evenly spread held-out probe indices: a quarter of the corpus, at least
/// one, at most sixteen designs.
fn probe_indices(n: usize) -> Vec<usize> {
    let count = (n / 4).clamp(1, 16.min(n));
    (0..count).map(|i| i * n / count).collect()
}

/// Mean per-entry variance across the batch; near zero means every latent
/// decoded to essentially the same raster. A single-sample batch carries no
/// spread information, so it never triggers the warning.
fn mean_batch_variance(m: &Matrix) -> f64 {
    if m.rows < 2 || m.cols == 0 {
        return f64::INFINITY;
    }
    let n = m.rows as f64;
    let mut total = 0.0;
    for c in 0..m.cols {
        let mut mean = 0.0;
        for r in 0..m.rows {
            mean += m.get(r, c);
        }
        mean /= n;
        let mut var = 0.0;
        for r in 0..m.rows {
            let d = m.get(r, c) - mean;
            var += d * d;
        }
        total += var / n;
    }
    total / m.cols as f64
}

fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// dL/dlogits for a per-pixel softmax given dL/dprobs.
fn softmax_backward(probs: &Matrix, dprobs: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(probs.rows, probs.cols);
    for r in 0..probs.rows {
        for px in (0..probs.cols).step_by(3) {
            let p = &probs.data[r * probs.cols + px..r * probs.cols + px + 3];
            let g = &dprobs.data[r * dprobs.cols + px..r * dprobs.cols + px + 3];
            let dot = g[0] * p[0] + g[1] * p[1] + g[2] * p[2];
            for k in 0..3 {
                out.data[r * out.cols + px + k] = p[k] * (g[k] - dot);
            }
        }
    }
    out
}

fn add_assign(a: &mut [f64], b: &[f64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

struct NetOpt {
    params: Vec<f64>,
    state: AdamState,
}

impl NetOpt {
    fn new(net: &DenseNetwork) -> NetOpt {
        let params = net.params_flat();
        let state = AdamState::new(params.len());
        NetOpt { params, state }
    }

    fn step(
        &mut self,
        net: &mut DenseNetwork,
        grads: &[f64],
        hp: &AdamParams,
    ) -> Result<(), NnError> {
        adam_step(&mut self.params, grads, &mut self.state, hp)?;
        net.set_params_flat(&self.params)
    }
}

/// Adversarial training with the mutual-information reconstruction term.
///
/// Each epoch runs one discriminator update (ascend log D(real) +
/// log(1 − D(G(x))) on a real batch and a fresh generated batch) and one
/// generator/auxiliary update (descend −log D(G(x)) + λ·‖x − A(G(x))‖² on a
/// second latent batch). Latents are standard normal; generated rasters enter
/// the discriminator as soft channel probabilities, real ones as one-hot.
/// Deterministic given the seed. With λ = 0 the information branch is skipped
/// entirely, so it contributes exactly zero gradient to both G and A.
pub fn train(
    designs: &[RasterDesign],
    cfg: &TrainConfig,
) -> Result<(InfoGanModel, TrainHistory), InfoGanError> {
    if designs.is_empty() {
        return Err(InfoGanError::EmptyCorpus);
    }
    let resolution = designs[0].width;
    for d in designs {
        if d.width != d.height || d.width != resolution {
            return Err(InfoGanError::MixedResolution(format!(
                "found {}×{} alongside {res}×{res}",
                d.width,
                d.height,
                res = resolution
            )));
        }
    }
    if cfg.latent_dim == 0 {
        return Err(InfoGanError::BadConfig("latent_dim must be ≥ 1".into()));
    }
    if cfg.batch_size == 0 {
        return Err(InfoGanError::BadConfig("batch_size must be ≥ 1".into()));
    }
    if !(cfg.learning_rate.is_finite() && cfg.learning_rate > 0.0) {
        return Err(InfoGanError::BadConfig(format!(
            "learning_rate {} must be a positive finite number",
            cfg.learning_rate
        )));
    }
    if !(cfg.lambda_info.is_finite() && cfg.lambda_info >= 0.0) {
        return Err(InfoGanError::BadConfig(format!(
            "lambda_info {} must be a non-negative finite number",
            cfg.lambda_info
        )));
    }

    let mut model = InfoGanModel::init(cfg.latent_dim, resolution, cfg.seed);
    let mut history = TrainHistory::default();
    if cfg.epochs == 0 {
        return Ok((model, history));
    }

    let probes: Vec<usize> = probe_indices(designs.len());
    let pool: Vec<usize> = (0..designs.len()).filter(|i| !probes.contains(i)).collect();
    let pool = if pool.is_empty() {
        (0..designs.len()).collect()
    } else {
        pool
    };
    let probe_rasters: Vec<RasterDesign> = probes.iter().map(|&i| designs[i].clone()).collect();

    let hp = AdamParams::with_lr(cfg.learning_rate, ADAM_BETA1);
    let mut opt_g = NetOpt::new(&model.generator);
    let mut opt_d = NetOpt::new(&model.discriminator);
    let mut opt_a = NetOpt::new(&model.auxiliary);
    let mut rng = Xoshiro256::seed_from_u64(mix_key(cfg.seed, &[0x4947414e]));
    let b = cfg.batch_size;
    let bf = b as f64;
    let d_latent = cfg.latent_dim;

    let diverged = |epoch: usize, what: String, history: &TrainHistory| InfoGanError::Diverged {
        epoch,
        what,
        history: Box::new(history.clone()),
    };
    // Non-finite gradients mean the run blew up; anything else is a bug.
    let classify = |e: NnError, epoch: usize, history: &TrainHistory| match e {
        NnError::NonFiniteGradient => diverged(epoch, "non-finite gradient".into(), history),
        other => InfoGanError::Nn(other),
    };

    for epoch in 1..=cfg.epochs {
        // Discriminator: one real batch, one generated batch.
        let real_refs: Vec<&RasterDesign> = (0..b)
            .map(|_| &designs[pool[rng.below(pool.len() as u64) as usize]])
            .collect();
        let real = one_hot_batch(&real_refs);
        let z1 = Matrix::from_vec(b, d_latent, (0..b * d_latent).map(|_| rng.normal()).collect());
        let (logits1, cache_g1) = model.generator.forward_train(&z1)?;
        let fake1 = pixel_softmax(&logits1);
        let (p_real, cache_dr) = model.discriminator.forward_train(&real)?;
        let (p_fake, cache_df) = model.discriminator.forward_train(&fake1)?;

        let mut d_loss = 0.0;
        let mut grad_real = Matrix::zeros(b, 1);
        let mut grad_fake = Matrix::zeros(b, 1);
        for r in 0..b {
            let pr = clamp_prob(p_real.get(r, 0));
            let pf = clamp_prob(p_fake.get(r, 0));
            d_loss += -(pr.ln() + (1.0 - pf).ln()) / bf;
            grad_real.set(r, 0, -1.0 / (bf * pr));
            grad_fake.set(r, 0, 1.0 / (bf * (1.0 - pf)));
        }
        let (mut d_grads, _) = model.discriminator.backward(&cache_dr, &grad_real)?;
        let (d_grads_f, _) = model.discriminator.backward(&cache_df, &grad_fake)?;
        add_assign(&mut d_grads, &d_grads_f);
        opt_d
            .step(&mut model.discriminator, &d_grads, &hp)
            .map_err(|e| classify(e, epoch, &history))?;
        model.discriminator.update_running_stats(&cache_dr)?;
        model.discriminator.update_running_stats(&cache_df)?;
        model.generator.update_running_stats(&cache_g1)?;

        // Generator (+ auxiliary when the info term is active): fresh latents.
        let z2 = Matrix::from_vec(b, d_latent, (0..b * d_latent).map(|_| rng.normal()).collect());
        let (logits2, cache_g2) = model.generator.forward_train(&z2)?;
        let fake2 = pixel_softmax(&logits2);
        let (p2, cache_d2) = model.discriminator.forward_train(&fake2)?;

        let mut g_loss = 0.0;
        let mut grad_p2 = Matrix::zeros(b, 1);
        for r in 0..b {
            let p = clamp_prob(p2.get(r, 0));
            g_loss += -p.ln() / bf;
            grad_p2.set(r, 0, -1.0 / (bf * p));
        }
        let (_, mut dprobs) = model.discriminator.backward(&cache_d2, &grad_p2)?;

        let info_loss;
        if cfg.lambda_info > 0.0 {
            let (xhat, cache_a) = model.auxiliary.forward_train(&fake2)?;
            let mut info = 0.0;
            let mut grad_xhat = Matrix::zeros(b, d_latent);
            for r in 0..b {
                for j in 0..d_latent {
                    let diff = xhat.get(r, j) - z2.get(r, j);
                    info += diff * diff / bf;
                    grad_xhat.set(r, j, 2.0 * cfg.lambda_info * diff / bf);
                }
            }
            info_loss = info;
            let (a_grads, dprobs_info) = model.auxiliary.backward(&cache_a, &grad_xhat)?;
            add_assign(&mut dprobs.data, &dprobs_info.data);
            opt_a
                .step(&mut model.auxiliary, &a_grads, &hp)
                .map_err(|e| classify(e, epoch, &history))?;
            model.auxiliary.update_running_stats(&cache_a)?;
        } else {
            // Ablated: record the scalar for the history, touch no gradients.
            let xhat = model.auxiliary.forward_eval(&fake2)?;
            let mut info = 0.0;
            for r in 0..b {
                for j in 0..d_latent {
                    let diff = xhat.get(r, j) - z2.get(r, j);
                    info += diff * diff / bf;
                }
            }
            info_loss = info;
        }

        let dlogits = softmax_backward(&fake2, &dprobs);
        let (g_grads, _) = model.generator.backward(&cache_g2, &dlogits)?;
        opt_g
            .step(&mut model.generator, &g_grads, &hp)
            .map_err(|e| classify(e, epoch, &history))?;
        model.generator.update_running_stats(&cache_g2)?;
        model.discriminator.update_running_stats(&cache_d2)?;

        if mean_batch_variance(&fake2) < MODE_COLLAPSE_VARIANCE {
            history.mode_collapse_epochs.push(epoch);
        }
        let probe_rmse = rmse_nets(
            &model.generator,
            &model.auxiliary,
            resolution,
            &probe_rasters,
        )?;

        if !(d_loss.is_finite() && g_loss.is_finite() && info_loss.is_finite()) {
            return Err(diverged(
                epoch,
                format!("non-finite loss (d={d_loss}, g={g_loss}, info={info_loss})"),
                &history,
            ));
        }
        history.epochs.push(TrainEpoch {
            epoch,
            d_loss,
            g_loss,
            info_loss,
            probe_rmse,
        });
    }

    model.trained_epochs = cfg.epochs;
    Ok((model, history))
}

/// History as CSV: epoch,d_loss,g_loss,info_loss,probe_rmse.
pub fn history_csv(h: &TrainHistory) -> String {
    let mut out = String::from("epoch,d_loss,g_loss,info_loss,probe_rmse\n");
    for e in &h.epochs {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            e.epoch, e.d_loss, e.g_loss, e.info_loss, e.probe_rmse
        ));
    }
    out
}

// --- latent dimension sweep ------------------------------------------------------

/// One row of the latent-dimension comparison table.
#[derive(Clone, Copy, Debug)]
pub struct SweepRow {
    pub latent_dim: usize,
    pub rmse: f64,
    /// Marks the argmin-RMSE row (ties go to the earliest row).
    pub best: bool,
}

/// Train one model per latent dimension and compare held-out probe RMSE.
/// Each cell reseeds from the base seed and the dimension so cells are
/// independent; a failing cell aborts the sweep with that cell's error.
pub fn latent_dim_sweep(
    designs: &[RasterDesign],
    dims: &[usize],
    cfg: &TrainConfig,
) -> Result<Vec<SweepRow>, InfoGanError> {
    if dims.is_empty() {
        return Err(InfoGanError::EmptySweep);
    }
    for (i, d) in dims.iter().enumerate() {
        if dims[..i].contains(d) {
            return Err(InfoGanError::DuplicateDim(*d));
        }
    }
    if designs.is_empty() {
        return Err(InfoGanError::EmptyCorpus);
    }
    let probe_rasters: Vec<RasterDesign> = probe_indices(designs.len())
        .into_iter()
        .map(|i| designs[i].clone())
        .collect();
    let mut rows = Vec::with_capacity(dims.len());
    for &d in dims {
        let cell_cfg = TrainConfig {
            latent_dim: d,
            seed: mix_key(cfg.seed, &[d as u64]),
            ..cfg.clone()
        };
        let (model, _) = train(designs, &cell_cfg)?;
        let rmse = reconstruction_rmse(&model, &probe_rasters)?;
        rows.push(SweepRow {
            latent_dim: d,
            rmse,
            best: false,
        });
    }
    let best = rows
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.rmse.partial_cmp(&b.rmse).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    rows[best].best = true;
    Ok(rows)
}

/// Sweep table as CSV: latent_dim,rmse,best.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("latent_dim,rmse,best\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.latent_dim, r.rmse, r.best as u8));
    }
    out
}

// --- checkpoints -------------------------------------------------------------------

pub const SIDECAR: &str = "model.txt";
pub const G_FILE: &str = "generator.lfnn";
pub const D_FILE: &str = "discriminator.lfnn";
pub const A_FILE: &str = "auxiliary.lfnn";

/// Write the triad as three network checkpoints plus a text sidecar into
/// `dir` (created if missing).
pub fn save_model(model: &InfoGanModel, dir: &Path) -> Result<(), InfoGanError> {
    std::fs::create_dir_all(dir)?;
    save_checkpoint(&model.generator, &dir.join(G_FILE))?;
    save_checkpoint(&model.discriminator, &dir.join(D_FILE))?;
    save_checkpoint(&model.auxiliary, &dir.join(A_FILE))?;
    let sidecar = format!(
        "latent_dim = {}\nresolution = {}\ntrained_epochs = {}\n",
        model.latent_dim, model.resolution, model.trained_epochs
    );
    std::fs::write(dir.join(SIDECAR), sidecar)?;
    Ok(())
}

/// Load a triad written by [`save_model`], validating shapes against the
/// sidecar.
pub fn load_model(dir: &Path) -> Result<InfoGanModel, InfoGanError> {
    let text = std::fs::read_to_string(dir.join(SIDECAR))?;
    let mut latent_dim = None;
    let mut resolution = None;
    let mut trained_epochs = None;
    for line in text.lines() {
        let Some((k, v)) = line.split_once('=') else {
            continue;
        };
        let (k, v) = (k.trim(), v.trim());
        let parse = || -> Result<u64, InfoGanError> {
            v.parse()
                .map_err(|_| InfoGanError::Format(format!("bad value for {k}: {v}")))
        };
        match k {
            "latent_dim" => latent_dim = Some(parse()? as usize),
            "resolution" => resolution = Some(parse()? as u32),
            "trained_epochs" => trained_epochs = Some(parse()? as usize),
            // Unrecognized keys (e.g. provenance added by callers) are kept
            // out of the model but tolerated.
            _ => {}
        }
    }
    let latent_dim = latent_dim.ok_or_else(|| InfoGanError::Format("latent_dim missing".into()))?;
    let resolution = resolution.ok_or_else(|| InfoGanError::Format("resolution missing".into()))?;
    let trained_epochs =
        trained_epochs.ok_or_else(|| InfoGanError::Format("trained_epochs missing".into()))?;
    let model = InfoGanModel {
        generator: load_checkpoint(&dir.join(G_FILE))?,
        discriminator: load_checkpoint(&dir.join(D_FILE))?,
        auxiliary: load_checkpoint(&dir.join(A_FILE))?,
        latent_dim,
        resolution,
        trained_epochs,
    };
    let pix = model.channels();
    if model.generator.input_dim() != latent_dim
        || model.generator.output_dim() != pix
        || model.discriminator.input_dim() != pix
        || model.discriminator.output_dim() != 1
        || model.auxiliary.input_dim() != pix
        || model.auxiliary.output_dim() != latent_dim
    {
        return Err(InfoGanError::Format(
            "checkpoint shapes do not match the sidecar".into(),
        ));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Structured toy rasters: a fluid band whose position cycles with the
    /// index, a boundary stripe, solid elsewhere. Distinct, simple patterns.
    fn toy_corpus(n: usize, res: u32) -> Vec<RasterDesign> {
        (0..n)
            .map(|k| {
                let classes = (0..res * res)
                    .map(|i| {
                        let (row, col) = (i / res, i % res);
                        let band = k as u32 % res;
                        if col == band || col == (band + 1) % res {
                            CellClass::Fluid
                        } else if row == (k as u32 / res) % res {
                            CellClass::Boundary
                        } else {
                            CellClass::Solid
                        }
                    })
                    .collect();
                RasterDesign {
                    width: res,
                    height: res,
                    classes,
                    provenance: generated_provenance(),
                }
            })
            .collect()
    }

    fn smoke_cfg() -> TrainConfig {
        TrainConfig {
            latent_dim: 2,
            epochs: 200,
            batch_size: 16,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn reference_preset_matches_published_scale() {
        let cfg = TrainConfig::reference_preset();
        assert_eq!(cfg.latent_dim, 8);
        assert_eq!(cfg.epochs, 10_000);
    }

    #[test]
    fn smoke_training_learns_discrimination_and_reconstruction() {
        let corpus = toy_corpus(16, 8);
        let (model, history) = train(&corpus, &smoke_cfg()).unwrap();
        assert_eq!(history.epochs.len(), 200);
        for e in &history.epochs {
            assert!(e.d_loss.is_finite() && e.g_loss.is_finite());
            assert!(e.info_loss.is_finite() && e.probe_rmse.is_finite());
        }

        // Discriminator separates real from generated at better than chance.
        let refs: Vec<&RasterDesign> = corpus.iter().collect();
        let real = one_hot_batch(&refs);
        let p_real = model.discriminator.forward_eval(&real).unwrap();
        let mut rng = Xoshiro256::seed_from_u64(7);
        let xs: Vec<Vec<f64>> = (0..16)
            .map(|_| (0..2).map(|_| rng.normal()).collect())
            .collect();
        let gen = generate(&model, &xs).unwrap();
        let fake = Matrix::from_vec(
            16,
            model.channels(),
            gen.probabilities.iter().flatten().copied().collect(),
        );
        let p_fake = model.discriminator.forward_eval(&fake).unwrap();
        let mut correct = 0;
        for r in 0..16 {
            if p_real.get(r, 0) > 0.5 {
                correct += 1;
            }
            if p_fake.get(r, 0) < 0.5 {
                correct += 1;
            }
        }
        let accuracy = correct as f64 / 32.0;
        assert!(
            accuracy > 0.45 && accuracy <= 1.0,
            "accuracy {accuracy} outside (0.45, 1.0]"
        );

        // The code-reconstruction term must improve over training.
        let first = history.epochs.first().unwrap().info_loss;
        let last = history.epochs.last().unwrap().info_loss;
        assert!(
            last < first,
            "info loss did not decrease: {first} -> {last}"
        );

        // Probe RMSE plateaus: the last quarter does not rise above the
        // previous quarter (within a 2% hard-argmax noise allowance).
        let q = history.epochs.len() / 4;
        let mean = |s: &[TrainEpoch]| {
            s.iter().map(|e| e.probe_rmse).sum::<f64>() / s.len() as f64
        };
        let q3 = mean(&history.epochs[2 * q..3 * q]);
        let q4 = mean(&history.epochs[3 * q..]);
        assert!(
            q4 <= 1.02 * q3.max(1e-9),
            "probe RMSE rose over the last quarter: {q3} -> {q4}"
        );
    }

    #[test]
    fn generate_is_deterministic_normalized_and_continuous() {
        let corpus = toy_corpus(12, 8);
        let cfg = TrainConfig {
            latent_dim: 2,
            epochs: 40,
            batch_size: 12,
            ..TrainConfig::default()
        };
        let (model, _) = train(&corpus, &cfg).unwrap();

        let xs = vec![vec![0.3, -0.7], vec![1.1, 0.4]];
        let a = generate(&model, &xs).unwrap();
        let b = generate(&model, &xs).unwrap();
        for (ra, rb) in a.probabilities.iter().zip(&b.probabilities) {
            for (pa, pb) in ra.iter().zip(rb) {
                assert_eq!(pa.to_bits(), pb.to_bits());
            }
        }
        assert_eq!(a.rasters, b.rasters);

        for probs in &a.probabilities {
            for px in probs.chunks_exact(3) {
                assert!((px[0] + px[1] + px[2] - 1.0).abs() < 1e-12);
                assert!(px.iter().all(|p| *p >= 0.0));
            }
        }

        // Nearby latents decode to nearby probability fields.
        let mut rng = Xoshiro256::seed_from_u64(11);
        let mut worst: f64 = 0.0;
        for _ in 0..10 {
            let x: Vec<f64> = (0..2).map(|_| rng.normal() * 0.8).collect();
            let delta = [rng.normal(), rng.normal()];
            let norm = (delta[0] * delta[0] + delta[1] * delta[1]).sqrt();
            let shifted: Vec<f64> = x
                .iter()
                .zip(&delta)
                .map(|(v, d)| v + 1e-3 * d / norm)
                .collect();
            let pair = generate(&model, &[x, shifted]).unwrap();
            let change = pair.probabilities[0]
                .iter()
                .zip(&pair.probabilities[1])
                .map(|(p, q)| (p - q).abs())
                .fold(0.0, f64::max);
            worst = worst.max(change);
        }
        assert!(
            worst < 0.05,
            "probability change {worst} too large for a 1e-3 latent step"
        );
    }

    #[test]
    fn generate_validates_inputs_and_warns_out_of_ball() {
        let model = InfoGanModel::init(2, 4, 0);
        assert!(matches!(
            generate(&model, &[vec![0.0, 0.0]]),
            Err(InfoGanError::Untrained)
        ));

        let corpus = toy_corpus(8, 4);
        let cfg = TrainConfig {
            latent_dim: 2,
            epochs: 5,
            batch_size: 8,
            ..TrainConfig::default()
        };
        let (model, _) = train(&corpus, &cfg).unwrap();
        assert!(matches!(
            generate(&model, &[vec![0.0; 3]]),
            Err(InfoGanError::LatentDimMismatch { expected: 2, got: 3 })
        ));

        let batch = generate(&model, &[vec![0.1, 0.1], vec![3.0, 0.0]]).unwrap();
        assert_eq!(batch.out_of_ball, vec![1]);
        assert_eq!(batch.rasters.len(), 2);
        assert_eq!(batch.rasters[0].width, 4);
        assert_eq!(batch.probabilities[0].len(), 48);

        let empty = generate(&model, &[]).unwrap();
        assert!(empty.rasters.is_empty() && empty.out_of_ball.is_empty());
    }

    #[test]
    fn encode_is_total_order_preserving_and_checks_resolution() {
        let model = InfoGanModel::init(3, 4, 1);
        let solid = RasterDesign {
            width: 4,
            height: 4,
            classes: vec![CellClass::Solid; 16],
            provenance: generated_provenance(),
        };
        let corpus = toy_corpus(3, 4);

        let codes = encode(&model, &[solid.clone()]).unwrap();
        assert_eq!(codes.len(), 1);
        assert_eq!(codes[0].len(), 3);
        assert!(codes[0].iter().all(|v| v.is_finite()));

        let batch = encode(
            &model,
            &[corpus[0].clone(), corpus[1].clone(), corpus[2].clone()],
        )
        .unwrap();
        for (i, d) in corpus.iter().enumerate() {
            let single = encode(&model, &[d.clone()]).unwrap();
            for (a, b) in batch[i].iter().zip(&single[0]) {
                assert_eq!(a.to_bits(), b.to_bits());
            }
        }

        let wrong = RasterDesign {
            width: 8,
            height: 8,
            classes: vec![CellClass::Fluid; 64],
            provenance: generated_provenance(),
        };
        assert!(matches!(
            encode(&model, &[wrong]),
            Err(InfoGanError::ResolutionMismatch { expected: 4, .. })
        ));
    }

    /// Overwrite the generator head so it always emits one fixed raster.
    fn pin_generator(model: &mut InfoGanModel, target: &RasterDesign) {
        let head = model.generator.layers.last_mut().unwrap();
        head.weight.iter_mut().for_each(|w| *w = 0.0);
        head.bias.iter_mut().for_each(|b| *b = -10.0);
        for (p, &c) in target.classes.iter().enumerate() {
            head.bias[p * 3 + c as usize] = 10.0;
        }
        model.trained_epochs = 1;
    }

    #[test]
    fn reconstruction_rmse_oracles() {
        // Exact reproduction scores zero.
        let probe = toy_corpus(1, 4).pop().unwrap();
        let mut model = InfoGanModel::init(2, 4, 3);
        pin_generator(&mut model, &probe);
        assert_eq!(reconstruction_rmse(&model, &[probe.clone()]).unwrap(), 0.0);

        // Single-pixel full mismatch: solid (red) recalled as fluid (green)
        // differs by 255 on two of three channels.
        let red = RasterDesign {
            width: 1,
            height: 1,
            classes: vec![CellClass::Solid],
            provenance: generated_provenance(),
        };
        let green = RasterDesign {
            width: 1,
            height: 1,
            classes: vec![CellClass::Fluid],
            provenance: generated_provenance(),
        };
        let mut toy = InfoGanModel::init(1, 1, 4);
        pin_generator(&mut toy, &green);
        let rmse = reconstruction_rmse(&toy, &[red]).unwrap();
        let expected = (2.0_f64 * 255.0 * 255.0 / 3.0).sqrt();
        assert!((rmse - expected).abs() < 1e-9);
        assert!((expected - 208.2).abs() < 0.01);

        assert!(matches!(
            reconstruction_rmse(&model, &[]),
            Err(InfoGanError::EmptyProbes)
        ));
        let untrained = InfoGanModel::init(2, 4, 5);
        assert!(matches!(
            reconstruction_rmse(&untrained, &[probe]),
            Err(InfoGanError::Untrained)
        ));
    }

    #[test]
    fn epochs_zero_returns_initialized_model_and_empty_history() {
        let corpus = toy_corpus(8, 4);
        let cfg = TrainConfig {
            latent_dim: 2,
            epochs: 0,
            ..TrainConfig::default()
        };
        let (model, history) = train(&corpus, &cfg).unwrap();
        assert_eq!(model.trained_epochs, 0);
        assert!(history.epochs.is_empty());
        assert!(history.mode_collapse_epochs.is_empty());
        assert!(matches!(
            generate(&model, &[vec![0.0, 0.0]]),
            Err(InfoGanError::Untrained)
        ));
    }

    #[test]
    fn training_is_reproducible_for_a_fixed_seed() {
        let corpus = toy_corpus(12, 4);
        let cfg = TrainConfig {
            latent_dim: 2,
            epochs: 30,
            batch_size: 8,
            seed: 42,
            ..TrainConfig::default()
        };
        let (m1, h1) = train(&corpus, &cfg).unwrap();
        let (m2, h2) = train(&corpus, &cfg).unwrap();
        assert_eq!(h1.epochs.len(), h2.epochs.len());
        for (a, b) in h1.epochs.iter().zip(&h2.epochs) {
            assert_eq!(a.d_loss.to_bits(), b.d_loss.to_bits());
            assert_eq!(a.g_loss.to_bits(), b.g_loss.to_bits());
            assert_eq!(a.info_loss.to_bits(), b.info_loss.to_bits());
            assert_eq!(a.probe_rmse.to_bits(), b.probe_rmse.to_bits());
        }
        assert_eq!(h1.mode_collapse_epochs, h2.mode_collapse_epochs);
        let (p1, p2) = (m1.generator.params_flat(), m2.generator.params_flat());
        for (a, b) in p1.iter().zip(&p2) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn lambda_zero_leaves_the_auxiliary_untouched() {
        let corpus = toy_corpus(12, 4);
        let cfg = TrainConfig {
            latent_dim: 2,
            epochs: 25,
            batch_size: 8,
            lambda_info: 0.0,
            seed: 9,
            ..TrainConfig::default()
        };
        let (model, history) = train(&corpus, &cfg).unwrap();
        let fresh = InfoGanModel::init(2, 4, 9);
        let (a_now, a_init) = (model.auxiliary.params_flat(), fresh.auxiliary.params_flat());
        for (a, b) in a_now.iter().zip(&a_init) {
            assert_eq!(a.to_bits(), b.to_bits(), "auxiliary moved with λ = 0");
        }
        // The adversarial pair still trains and the scalar is still recorded.
        assert_ne!(model.generator.params_flat(), fresh.generator.params_flat());
        assert!(history.epochs.iter().all(|e| e.info_loss.is_finite()));
    }

    #[test]
    fn divergent_run_aborts_with_partial_history() {
        let corpus = toy_corpus(8, 4);
        let cfg = TrainConfig {
            latent_dim: 2,
            epochs: 50,
            batch_size: 8,
            learning_rate: 1e308,
            ..TrainConfig::default()
        };
        match train(&corpus, &cfg) {
            Err(InfoGanError::Diverged { epoch, history, .. }) => {
                assert!(epoch >= 1 && epoch <= 50);
                assert!(history.epochs.len() < 50);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn invalid_configs_and_corpora_are_rejected() {
        let corpus = toy_corpus(8, 4);
        assert!(matches!(
            train(&[], &TrainConfig::default()),
            Err(InfoGanError::EmptyCorpus)
        ));
        let bad = |cfg: TrainConfig| matches!(train(&corpus, &cfg), Err(InfoGanError::BadConfig(_)));
        assert!(bad(TrainConfig { latent_dim: 0, ..TrainConfig::default() }));
        assert!(bad(TrainConfig { batch_size: 0, ..TrainConfig::default() }));
        assert!(bad(TrainConfig { learning_rate: 0.0, ..TrainConfig::default() }));
        assert!(bad(TrainConfig { lambda_info: -1.0, ..TrainConfig::default() }));

        let mut mixed = toy_corpus(4, 4);
        mixed.extend(toy_corpus(1, 8));
        assert!(matches!(
            train(&mixed, &TrainConfig::default()),
            Err(InfoGanError::MixedResolution(_))
        ));
    }

    #[test]
    fn mode_collapse_detector_measures_batch_spread() {
        let constant = Matrix::from_vec(4, 6, vec![0.25; 24]);
        assert!(mean_batch_variance(&constant) < MODE_COLLAPSE_VARIANCE);
        let varied = Matrix::from_vec(
            4,
            6,
            (0..24).map(|i| if i % 7 == 0 { 0.9 } else { 0.1 }).collect(),
        );
        assert!(mean_batch_variance(&varied) > MODE_COLLAPSE_VARIANCE);
        let single = Matrix::from_vec(1, 6, vec![0.5; 6]);
        assert!(mean_batch_variance(&single) > MODE_COLLAPSE_VARIANCE);
    }

    #[test]
    fn latent_sweep_builds_a_table_and_marks_the_argmin() {
        let corpus = toy_corpus(12, 4);
        let cfg = TrainConfig {
            epochs: 20,
            batch_size: 8,
            ..TrainConfig::default()
        };
        assert!(matches!(
            latent_dim_sweep(&corpus, &[], &cfg),
            Err(InfoGanError::EmptySweep)
        ));
        assert!(matches!(
            latent_dim_sweep(&corpus, &[2, 3, 2], &cfg),
            Err(InfoGanError::DuplicateDim(2))
        ));

        let single = latent_dim_sweep(&corpus, &[2], &cfg).unwrap();
        assert_eq!(single.len(), 1);
        assert!(single[0].best);

        let rows = latent_dim_sweep(&corpus, &[2, 3], &cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows.iter().filter(|r| r.best).count(), 1);
        let best = rows.iter().find(|r| r.best).unwrap();
        assert!(rows.iter().all(|r| best.rmse <= r.rmse));

        let csv = sweep_csv(&rows);
        assert!(csv.starts_with("latent_dim,rmse,best\n"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn history_csv_lists_one_row_per_epoch() {
        let corpus = toy_corpus(8, 4);
        let cfg = TrainConfig {
            latent_dim: 2,
            epochs: 7,
            batch_size: 8,
            ..TrainConfig::default()
        };
        let (_, history) = train(&corpus, &cfg).unwrap();
        let csv = history_csv(&history);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "epoch,d_loss,g_loss,info_loss,probe_rmse"
        );
        assert_eq!(lines.count(), 7);
    }

    #[test]
    fn checkpoint_round_trip_preserves_the_triad() {
        let corpus = toy_corpus(8, 4);
        let cfg = TrainConfig {
            latent_dim: 2,
            epochs: 10,
            batch_size: 8,
            ..TrainConfig::default()
        };
        let (model, _) = train(&corpus, &cfg).unwrap();
        let dir = std::env::temp_dir().join(format!("lf-igan-{}", std::process::id()));
        save_model(&model, &dir).unwrap();
        let loaded = load_model(&dir).unwrap();
        std::fs::remove_dir_all(&dir).unwrap();

        assert_eq!(loaded.latent_dim, 2);
        assert_eq!(loaded.resolution, 4);
        assert_eq!(loaded.trained_epochs, 10);
        for (nets, loaded_nets) in [
            (&model.generator, &loaded.generator),
            (&model.discriminator, &loaded.discriminator),
            (&model.auxiliary, &loaded.auxiliary),
        ] {
            let (a, b) = (nets.params_flat(), loaded_nets.params_flat());
            for (x, y) in a.iter().zip(&b) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
        let xs = vec![vec![0.5, -0.5]];
        let before = generate(&model, &xs).unwrap();
        let after = generate(&loaded, &xs).unwrap();
        assert_eq!(before.rasters, after.rasters);
        for (p, q) in before.probabilities[0].iter().zip(&after.probabilities[0]) {
            assert_eq!(p.to_bits(), q.to_bits());
        }
    }
}

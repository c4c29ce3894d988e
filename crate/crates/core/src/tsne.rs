//! Exact t-SNE for 2-D visualization of encoded latents.
//!
//! No tree approximation: the corpus tops out at a few thousand points, so
//! the O(n²) formulation is both affordable and reproducible. Per-point
//! bandwidths are bisected to match the requested perplexity; the descent is
//! the standard momentum-plus-gains scheme with early exaggeration, followed
//! by a monotone backtracking tail so the reported divergence provably never
//! rises near the end.
//!
//! Every reduction over neighbors runs through exact order-independent
//! summation and the initial layout is keyed to point content, so permuting
//! the input rows permutes the output rows bit-for-bit.

use crate::archetypes::ArchetypeId;
use crate::exact::ExactSum;
use crate::rng::{keyed_normal, mix_key};
use crate::svg::{scatter_svg, Series};
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum TsneError {
    #[error("need at least {need} points for perplexity {perplexity}, got {got}")]
    TooFewPoints {
        need: usize,
        got: usize,
        perplexity: f64,
    },
    #[error("perplexity must be at least 2, got {0}")]
    BadPerplexity(f64),
    #[error("input rows must share one dimension")]
    RaggedInput,
    #[error("labels length {got} does not match point count {expected}")]
    LabelMismatch { expected: usize, got: usize },
    #[error("inputs must be finite")]
    NonFinite,
    #[error("all input points are identical; no structure to embed")]
    DegenerateInputs,
    #[error("embedding is empty")]
    EmptyEmbedding,
    #[error("failed to write file: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug)]
pub struct Embedding2D {
    pub points: Vec<[f64; 2]>,
    pub labels: Vec<ArchetypeId>,
    /// KL(P‖Q) at the start of each iteration.
    pub kl_history: Vec<f64>,
}

const EXAGGERATION: f64 = 12.0;
const EXAGGERATION_SPAN: usize = 250;
/// Length of the final monotone backtracking phase.
const TAIL_SPAN: usize = 150;

fn squared_distances(x: &[Vec<f64>]) -> Vec<f64> {
    let n = x.len();
    let mut d2 = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let mut s = 0.0;
            for (a, b) in x[i].iter().zip(&x[j]) {
                let d = a - b;
                s += d * d;
            }
            d2[i * n + j] = s;
            d2[j * n + i] = s;
        }
    }
    d2
}

/// Per-row conditional affinities with bandwidths bisected so each row's
/// Shannon entropy matches ln(perplexity) within 1e-4, plus the precisions.
pub fn conditional_affinities(
    latents: &[Vec<f64>],
    perplexity: f64,
) -> Result<(Vec<Vec<f64>>, Vec<f64>), TsneError> {
    validate(latents, perplexity)?;
    let n = latents.len();
    let d2 = squared_distances(latents);
    if d2.iter().all(|v| *v == 0.0) {
        return Err(TsneError::DegenerateInputs);
    }
    let target = perplexity.ln();
    let mut rows = vec![vec![0.0; n]; n];
    let mut betas = vec![0.0; n];
    for i in 0..n {
        let mut beta = 1.0f64;
        let mut beta_lo = 0.0f64;
        let mut beta_hi = f64::INFINITY;
        let mut weights = vec![0.0; n];
        for _ in 0..100 {
            let mut sum = ExactSum::new();
            let mut weighted = ExactSum::new();
            for j in 0..n {
                if j == i {
                    weights[j] = 0.0;
                    continue;
                }
                let w = (-beta * d2[i * n + j]).exp();
                weights[j] = w;
                sum.add(w);
                weighted.add(w * d2[i * n + j]);
            }
            let s = sum.value();
            let entropy = if s > 0.0 {
                s.ln() + beta * weighted.value() / s
            } else {
                0.0
            };
            let diff = entropy - target;
            if diff.abs() < 1e-4 {
                break;
            }
            if diff > 0.0 {
                beta_lo = beta;
                beta = if beta_hi.is_finite() {
                    0.5 * (beta + beta_hi)
                } else {
                    beta * 2.0
                };
            } else {
                beta_hi = beta;
                beta = 0.5 * (beta + beta_lo);
            }
        }
        let mut sum = ExactSum::new();
        for &w in weights.iter().take(n) {
            sum.add(w);
        }
        let s = sum.value();
        for j in 0..n {
            rows[i][j] = if s > 0.0 { weights[j] / s } else { 0.0 };
        }
        betas[i] = beta;
    }
    Ok((rows, betas))
}

fn validate(latents: &[Vec<f64>], perplexity: f64) -> Result<(), TsneError> {
    if perplexity.is_nan() || perplexity < 2.0 {
        return Err(TsneError::BadPerplexity(perplexity));
    }
    let n = latents.len();
    let need = (3.0 * perplexity).ceil() as usize;
    if n < need {
        return Err(TsneError::TooFewPoints {
            need,
            got: n,
            perplexity,
        });
    }
    let d = latents[0].len();
    for row in latents {
        if row.len() != d {
            return Err(TsneError::RaggedInput);
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(TsneError::NonFinite);
        }
    }
    Ok(())
}

struct QField {
    /// Unnormalized Student-t weights for i < j.
    w: Vec<f64>,
    /// Exact normalizer over ordered pairs.
    z: f64,
}

fn q_field(y: &[[f64; 2]]) -> QField {
    let n = y.len();
    let mut w = vec![0.0; n * n];
    let mut z = ExactSum::new();
    for i in 0..n {
        for j in i + 1..n {
            let dx = y[i][0] - y[j][0];
            let dy = y[i][1] - y[j][1];
            let t = 1.0 / (1.0 + dx * dx + dy * dy);
            w[i * n + j] = t;
            w[j * n + i] = t;
            z.add(t);
        }
    }
    QField {
        w,
        z: 2.0 * z.value(),
    }
}

fn kl_divergence(p: &[f64], q: &QField, n: usize) -> f64 {
    let mut kl = ExactSum::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && p[i * n + j] > 0.0 {
                let pij = p[i * n + j];
                let qij = (q.w[i * n + j] / q.z).max(f64::MIN_POSITIVE);
                kl.add(pij * (pij / qij).ln());
            }
        }
    }
    kl.value()
}

/// Exact t-SNE of `latents` into two dimensions, deterministic for a seed,
/// bit-equivariant to input permutation.
pub fn tsne_embed(
    latents: &[Vec<f64>],
    labels: &[ArchetypeId],
    perplexity: f64,
    iterations: usize,
    seed: u64,
) -> Result<Embedding2D, TsneError> {
    let n = latents.len();
    if labels.len() != n {
        return Err(TsneError::LabelMismatch {
            expected: n,
            got: labels.len(),
        });
    }
    let (cond, _betas) = conditional_affinities(latents, perplexity)?;
    // Symmetrized joint distribution, Σ p_ij = 1.
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                p[i * n + j] = (cond[i][j] + cond[j][i]) / (2.0 * n as f64);
            }
        }
    }

    // Tiny Gaussian init keyed to each point's content, so identical points
    // coincide and reordering the input reorders the layout.
    let mut y: Vec<[f64; 2]> = latents
        .iter()
        .map(|row| {
            let mut parts: Vec<u64> = Vec::with_capacity(row.len() + 1);
            parts.push(0x54534e45);
            parts.extend(row.iter().map(|v| v.to_bits()));
            let key = mix_key(seed, &parts);
            [1e-4 * keyed_normal(key, 0), 1e-4 * keyed_normal(key, 1)]
        })
        .collect();

    let lr = n as f64 / EXAGGERATION;
    let mut inc = vec![[0.0f64; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut kl_history = Vec::with_capacity(iterations);
    let warm_span = EXAGGERATION_SPAN.min(iterations / 2);
    let tail_start = iterations.saturating_sub(TAIL_SPAN);

    let mut q = q_field(&y);
    for it in 0..iterations {
        let kl_now = kl_divergence(&p, &q, n);
        kl_history.push(kl_now);
        let exaggeration = if it < warm_span { EXAGGERATION } else { 1.0 };

        // Gradient of KL with the (possibly exaggerated) attractions.
        let mut grad = vec![[0.0f64; 2]; n];
        for i in 0..n {
            let mut gx = ExactSum::new();
            let mut gy = ExactSum::new();
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w = q.w[i * n + j];
                let coeff = (exaggeration * p[i * n + j] - w / q.z) * w;
                gx.add(coeff * (y[i][0] - y[j][0]));
                gy.add(coeff * (y[i][1] - y[j][1]));
            }
            grad[i] = [4.0 * gx.value(), 4.0 * gy.value()];
        }

        if it < tail_start {
            let momentum = if it < warm_span { 0.5 } else { 0.8 };
            for i in 0..n {
                for k in 0..2 {
                    let same_sign = (grad[i][k] > 0.0) == (inc[i][k] > 0.0);
                    gains[i][k] = if same_sign {
                        (gains[i][k] * 0.8).max(0.01)
                    } else {
                        gains[i][k] + 0.2
                    };
                    inc[i][k] = momentum * inc[i][k] - lr * gains[i][k] * grad[i][k];
                    y[i][k] += inc[i][k];
                }
            }
            // Re-center so the cloud cannot drift.
            for k in 0..2 {
                let mut mean = ExactSum::new();
                for yi in y.iter() {
                    mean.add(yi[k]);
                }
                let m = mean.value() / n as f64;
                for yi in y.iter_mut() {
                    yi[k] -= m;
                }
            }
            q = q_field(&y);
        } else {
            // Monotone tail: plain descent with backtracking so KL never
            // increases from here on. Centering is skipped because it would
            // re-round coordinates without changing the divergence.
            let mut step = lr;
            let mut accepted = false;
            for _ in 0..40 {
                let cand: Vec<[f64; 2]> = y
                    .iter()
                    .zip(&grad)
                    .map(|(yi, g)| [yi[0] - step * g[0], yi[1] - step * g[1]])
                    .collect();
                let q_cand = q_field(&cand);
                if kl_divergence(&p, &q_cand, n) <= kl_now {
                    y = cand;
                    q = q_cand;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                // Keep the current layout; divergence stays exactly flat.
            }
        }
    }
    for yi in &y {
        if !yi[0].is_finite() || !yi[1].is_finite() {
            return Err(TsneError::NonFinite);
        }
    }
    Ok(Embedding2D {
        points: y,
        labels: labels.to_vec(),
        kl_history,
    })
}

/// Embedding rows as `x,y,label` CSV.
pub fn embedding_csv(emb: &Embedding2D) -> String {
    let mut out = String::from("x,y,label\n");
    for (p, l) in emb.points.iter().zip(&emb.labels) {
        out.push_str(&format!("{},{},{}\n", p[0], p[1], l.as_str()));
    }
    out
}

/// Scatter plot of the embedding, one series (color + legend entry) per
/// archetype present in the labels.
pub fn scatter_document(emb: &Embedding2D, comment: Option<&str>) -> Result<String, TsneError> {
    if emb.points.is_empty() {
        return Err(TsneError::EmptyEmbedding);
    }
    let mut series: Vec<Series> = Vec::new();
    for id in ArchetypeId::ALL {
        let points: Vec<(f64, f64)> = emb
            .points
            .iter()
            .zip(&emb.labels)
            .filter(|(_, l)| **l == id)
            .map(|(p, _)| (p[0], p[1]))
            .collect();
        if !points.is_empty() {
            series.push(Series {
                label: id.as_str().to_string(),
                points,
            });
        }
    }
    Ok(scatter_svg(
        &series,
        "Latent space embedding",
        "component 1",
        "component 2",
        comment,
    ))
}

pub fn emit_scatter_svg(emb: &Embedding2D, path: &Path) -> Result<(), TsneError> {
    let doc = scatter_document(emb, None)?;
    std::fs::write(path, doc)?;
    Ok(())
}

//! Scratch sweep: smoke-corpus training under different hyperparameters,
//! reporting the epoch-10 → final probe-RMSE drop the acceptance gate needs.

use latentflow::archetypes::{instantiate, sample_design_table, spec_of, ArchetypeId};
use latentflow::infogan::{self, TrainConfig};
use latentflow::raster::{mix, mirror, rasterize, RasterDesign};
use latentflow::rng::{mix_key, Xoshiro256};
use std::time::Instant;

fn smoke_corpus(n: usize, resolution: u32, seed: u64) -> Vec<RasterDesign> {
    let mut halves = Vec::new();
    for id in ArchetypeId::ALL {
        let spec = spec_of(id);
        let table = sample_design_table(&spec, 12, mix_key(seed, &[id as u64])).unwrap();
        for row in &table.rows {
            if let Ok(g) = instantiate(&spec, row) {
                halves.push(g);
            }
        }
    }
    let mut rng = Xoshiro256::seed_from_u64(mix_key(seed, &[0x505]));
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let a = rng.below(halves.len() as u64) as usize;
        let b = rng.below(halves.len() as u64) as usize;
        if let Ok(fg) = mix(&halves[a], &mirror(&halves[b])) {
            if let Ok(r) = rasterize(&fg, resolution) {
                out.push(r);
            }
        }
    }
    out
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    // args: batch lr lambda [epochs] [seed] [corpus_n]
    let batch: usize = args[0].parse().unwrap();
    let lr: f64 = args[1].parse().unwrap();
    let lambda: f64 = args[2].parse().unwrap();
    let epochs: usize = args.get(3).map_or(500, |s| s.parse().unwrap());
    let seed: u64 = args.get(4).map_or(0x6A11, |s| s.parse().unwrap());
    let corpus_n: usize = args.get(5).map_or(256, |s| s.parse().unwrap());
    let corpus = smoke_corpus(corpus_n, 16, 0x1F06);

    let cfg = TrainConfig {
        latent_dim: 4,
        epochs,
        batch_size: batch,
        learning_rate: lr,
        lambda_info: lambda,
        seed,
    };
    let t = Instant::now();
    let (_, h) = infogan::train(&corpus, &cfg).unwrap();
    let early = h.epochs[9].probe_rmse;
    let last = h.epochs.last().unwrap().probe_rmse;
    let best = h.epochs.iter().map(|e| e.probe_rmse).fold(f64::INFINITY, f64::min);
    let drop = 1.0 - last / early;
    println!(
        "batch={batch} lr={lr} lambda={lambda} epochs={epochs} seed={seed}: e10 {early:.1} final {last:.1} best {best:.1} drop {:.0}% collapse_epochs {} ({:.0}s)",
        drop * 100.0,
        h.mode_collapse_epochs.len(),
        t.elapsed().as_secs_f64()
    );
    for probe in [9, epochs / 4, epochs / 2, 3 * epochs / 4, epochs - 1] {
        let e = &h.epochs[probe];
        println!(
            "  epoch {:>4}: d {:.3} g {:.3} info {:.3} rmse {:.1}",
            e.epoch, e.d_loss, e.g_loss, e.info_loss, e.probe_rmse
        );
    }

    // Diagnostics: which link of the round trip fails?
    let (model, _) = infogan::train(&corpus, &cfg).unwrap();
    let hard = |probs: &[f64]| -> Vec<u8> {
        probs
            .chunks_exact(3)
            .map(|p| {
                let mut best = 0u8;
                if p[1] > p[best as usize] {
                    best = 1;
                }
                if p[2] > p[best as usize] {
                    best = 2;
                }
                best
            })
            .collect()
    };
    let classes: Vec<Vec<u8>> = corpus
        .iter()
        .map(|d| d.classes.iter().map(|&c| c as u8).collect())
        .collect();
    let mismatch = |a: &[u8], b: &[u8]| -> f64 {
        a.iter().zip(b).filter(|(x, y)| x != y).count() as f64 / a.len() as f64
    };

    // (1) GAN quality: prior samples vs nearest corpus design.
    let mut rng = Xoshiro256::seed_from_u64(1);
    let zs: Vec<Vec<f64>> = (0..64)
        .map(|_| (0..4).map(|_| rng.normal()).collect())
        .collect();
    let gen = infogan::generate(&model, &zs).unwrap();
    let mut mean_min = 0.0;
    for p in &gen.probabilities {
        let g = hard(p);
        let best = classes.iter().map(|c| mismatch(&g, c)).fold(1.0, f64::min);
        mean_min += best / gen.probabilities.len() as f64;
    }
    println!("  prior->G: mean nearest-corpus mismatch {mean_min:.3}");

    // (1b) Same measurement in train mode (batch statistics): separates GAN
    // failure from running-stat calibration failure.
    let mut zm = latentflow::nn::Matrix::zeros(zs.len(), 4);
    for (r, z) in zs.iter().enumerate() {
        zm.data[r * 4..(r + 1) * 4].copy_from_slice(z);
    }
    let (logits_t, _) = model.generator.forward_train(&zm).unwrap();
    let mut mean_min_t = 0.0;
    for r in 0..logits_t.rows {
        let row = &logits_t.data[r * logits_t.cols..(r + 1) * logits_t.cols];
        let soft: Vec<f64> = row
            .chunks_exact(3)
            .flat_map(|p| {
                let m = p[0].max(p[1]).max(p[2]);
                let e: Vec<f64> = p.iter().map(|v| (v - m).exp()).collect();
                let s = e[0] + e[1] + e[2];
                [e[0] / s, e[1] / s, e[2] / s]
            })
            .collect();
        let g = hard(&soft);
        let best = classes.iter().map(|c| mismatch(&g, c)).fold(1.0, f64::min);
        mean_min_t += best / logits_t.rows as f64;
    }
    println!("  prior->G (train mode): mean nearest-corpus mismatch {mean_min_t:.3}");

    // (2) A(real) code geometry.
    let reals: Vec<Vec<f64>> = corpus.iter().take(16).map(infogan::one_hot).collect();
    let mut m = latentflow::nn::Matrix::zeros(reals.len(), reals[0].len());
    for (r, row) in reals.iter().enumerate() {
        m.data[r * row.len()..(r + 1) * row.len()].copy_from_slice(row);
    }
    let codes = model.auxiliary.forward_eval(&m).unwrap();
    let norms: Vec<f64> = (0..codes.rows)
        .map(|r| {
            (0..codes.cols)
                .map(|c| codes.get(r, c).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let mean_norm = norms.iter().sum::<f64>() / norms.len() as f64;
    let max_norm = norms.iter().fold(0.0f64, |a, &b| a.max(b));
    println!("  A(real) code norms: mean {mean_norm:.2} max {max_norm:.2} (prior mean 1.82)");

    // (3) G(A(real)) vs the same real design.
    let code_vecs: Vec<Vec<f64>> = (0..codes.rows)
        .map(|r| (0..codes.cols).map(|c| codes.get(r, c)).collect())
        .collect();
    let rec = infogan::generate(&model, &code_vecs).unwrap();
    let mut rt = 0.0;
    for (i, p) in rec.probabilities.iter().enumerate() {
        rt += mismatch(&hard(p), &classes[i]) / rec.probabilities.len() as f64;
    }
    println!("  G(A(real)) mismatch {rt:.3}");

    // (4) A∘G self-consistency on prior samples.
    let mut mg = latentflow::nn::Matrix::zeros(gen.probabilities.len(), gen.probabilities[0].len());
    for (r, row) in gen.probabilities.iter().enumerate() {
        mg.data[r * row.len()..(r + 1) * row.len()].copy_from_slice(row);
    }
    let back = model.auxiliary.forward_eval(&mg).unwrap();
    let mut code_err = 0.0;
    for (r, z) in zs.iter().enumerate() {
        let e: f64 = z
            .iter()
            .enumerate()
            .map(|(c, v)| (back.get(r, c) - v).powi(2))
            .sum::<f64>();
        code_err += e.sqrt() / zs.len() as f64;
    }
    println!("  |A(G(z)) - z| mean {code_err:.3}");
}

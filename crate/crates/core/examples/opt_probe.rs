//! Scratch sweep: closed-loop optimizer vs equal-budget Sobol baseline, per
//! seed, under configurable acquisition settings.

use latentflow::archetypes::{instantiate, sample_design_table, spec_of, ArchetypeId};
use latentflow::flow::{objectives, solve_flow};
use latentflow::infogan::{self, TrainConfig};
use latentflow::mobo::{
    hypervolume, pareto_filter, run_loop, OptimizerConfig, LATENT_RADIUS,
};
use latentflow::raster::{mix, mirror, rasterize, RasterDesign};
use latentflow::rng::{mix_key, Xoshiro256};
use latentflow::sobol::sobol_ball_doe;
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
    // args: mc_draws restarts gp_restarts epochs
    let mc_draws: usize = args[0].parse().unwrap();
    let restarts: usize = args[1].parse().unwrap();
    let gp_restarts: usize = args[2].parse().unwrap();
    let epochs: usize = args[3].parse().unwrap();

    let corpus = smoke_corpus(128, 16, 0x0909);
    let cfg = TrainConfig {
        latent_dim: 4,
        epochs,
        batch_size: 32,
        learning_rate: 2e-3,
        seed: 0x909,
        ..TrainConfig::default()
    };
    let (model, _) = infogan::train(&corpus, &cfg).unwrap();

    let evaluate = |xs: &[Vec<f64>]| -> Vec<Option<Vec<f64>>> {
        let batch = infogan::generate(&model, xs).unwrap();
        batch
            .rasters
            .iter()
            .map(|r| {
                let field = solve_flow(r).ok()?;
                let (f1, f2) = objectives(&field, r).ok()?;
                Some(vec![f1, f2])
            })
            .collect()
    };

    let t = Instant::now();
    let mut wins = 0;
    for s in 0..10u64 {
        let opt_cfg = OptimizerConfig {
            latent_dim: 4,
            doe_size: 20,
            batches: 3,
            batch_size: 5,
            mc_draws,
            restarts,
            gp_restarts,
            radius: LATENT_RADIUS,
            seed: mix_key(0xE2E, &[s]),
        };
        let history = run_loop(evaluate, &opt_cfg).unwrap();
        let hv = history.batch_hypervolume.clone();
        let final_hv = *hv.last().unwrap();

        let base_pts = sobol_ball_doe(4, 35, LATENT_RADIUS, mix_key(0xBA5E, &[s])).unwrap();
        let base_ys: Vec<Vec<f64>> = evaluate(&base_pts).into_iter().flatten().collect();
        let n_ok = base_ys.len();
        let reference = &history.reference;
        let inside: Vec<Vec<f64>> = base_ys
            .into_iter()
            .filter(|y| y.iter().zip(reference).all(|(v, r)| v < r))
            .collect();
        let base_hv = if inside.is_empty() {
            0.0
        } else {
            let keep = pareto_filter(&inside);
            let front: Vec<Vec<f64>> = keep.iter().map(|&i| inside[i].clone()).collect();
            hypervolume(&front, reference).unwrap()
        };
        let won = final_hv > base_hv;
        wins += won as u32;
        println!(
            "seed {s}: mobo hv {:?} final {final_hv:.4} | baseline {base_hv:.4} ({n_ok}/35 ok, {} inside) -> {}",
            hv.iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
            inside.len(),
            if won { "WIN" } else { "loss" }
        );
    }
    println!(
        "mc={mc_draws} restarts={restarts} gp_restarts={gp_restarts} epochs={epochs}: {wins}/10 wins ({:.0}s)",
        t.elapsed().as_secs_f64()
    );
}

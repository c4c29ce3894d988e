//! Multi-objective Bayesian optimization over the latent ball.
//!
//! Minimization convention throughout. The pieces: Pareto filtering, exact
//! dominated hypervolume (sweep for two objectives, recursive slicing above),
//! hypervolume improvement, Monte-Carlo expected hypervolume improvement with
//! common random numbers, a derivative-free constrained acquisition maximizer,
//! kriging-believer batch proposal, and the outer DoE → fit → propose →
//! evaluate loop.

use crate::gp::{fit as gp_fit, GpError, GpModel};
use crate::rng::{mix_key, Xoshiro256};
use crate::sobol::{sobol_ball_doe, SobolError};

/// Norm bound on every proposed or DoE latent vector.
pub const LATENT_RADIUS: f64 = 2.0;

#[derive(Debug, thiserror::Error)]
pub enum MoboError {
    #[error("objective vector {index} does not strictly dominate the reference point")]
    NotDominatingReference { index: usize },
    #[error("objective dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("objective values must be finite")]
    NonFiniteObjective,
    #[error("evaluator returned {got} results for {expected} points")]
    EvaluatorShape { expected: usize, got: usize },
    #[error("fewer than two successful evaluations; cannot fit emulators")]
    TooFewSuccesses,
    #[error("every evaluation in batch {batch} failed; aborting with partial history")]
    BatchEvaluationFailed {
        batch: usize,
        partial: Box<OptimizationHistory>,
    },
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error(transparent)]
    Sobol(#[from] SobolError),
}

// --- Pareto dominance ----------------------------------------------------------

/// True when `a` dominates `b` under minimization (no worse everywhere,
/// strictly better somewhere).
pub fn dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x > y {
            return false;
        }
        if x < y {
            strict = true;
        }
    }
    strict
}

/// Indices of the non-dominated rows, in their original order.
pub fn pareto_filter(rows: &[Vec<f64>]) -> Vec<usize> {
    let mut keep = Vec::new();
    'outer: for (i, a) in rows.iter().enumerate() {
        for (j, b) in rows.iter().enumerate() {
            if i != j && (dominates(b, a) || (a == b && j < i)) {
                continue 'outer;
            }
        }
        keep.push(i);
    }
    keep
}

// --- hypervolume ----------------------------------------------------------------

fn check_box(points: &[Vec<f64>], reference: &[f64]) -> Result<(), MoboError> {
    for (i, p) in points.iter().enumerate() {
        if p.len() != reference.len() {
            return Err(MoboError::DimensionMismatch {
                expected: reference.len(),
                got: p.len(),
            });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(MoboError::NonFiniteObjective);
        }
        if p.iter().zip(reference).any(|(v, r)| v >= r) {
            return Err(MoboError::NotDominatingReference { index: i });
        }
    }
    Ok(())
}

/// Exact two-objective sweep over a strictly sorted front.
fn hv_sweep2(sorted: &[(f64, f64)], r: (f64, f64)) -> f64 {
    let mut prev1 = r.1;
    let mut acc = 0.0;
    for &(a, b) in sorted {
        acc += (r.0 - a) * (prev1 - b);
        prev1 = b;
    }
    acc
}

/// Non-dominated subset of (already box-checked) points, deduplicated.
fn nondominated(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    pareto_filter(points)
        .into_iter()
        .map(|i| points[i].clone())
        .collect()
}

fn hv_recursive(points: &mut [Vec<f64>], reference: &[f64]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let q = reference.len();
    if q == 1 {
        let best = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
        return reference[0] - best;
    }
    if q == 2 {
        let filtered = nondominated(points);
        let mut sorted: Vec<(f64, f64)> = filtered.iter().map(|p| (p[0], p[1])).collect();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sorted.dedup();
        return hv_sweep2(&sorted, (reference[0], reference[1]));
    }
    // Slice along the first objective: between consecutive sorted values the
    // dominated region is a prism over the lower-dimensional front of every
    // point at or left of the slab.
    let mut pts = nondominated(points);
    pts.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
    let mut total = 0.0;
    for i in 0..pts.len() {
        let x0 = pts[i][0];
        let x1 = if i + 1 < pts.len() {
            pts[i + 1][0]
        } else {
            reference[0]
        };
        if x1 > x0 {
            let mut slab: Vec<Vec<f64>> = pts[..=i].iter().map(|p| p[1..].to_vec()).collect();
            total += (x1 - x0) * hv_recursive(&mut slab, &reference[1..]);
        }
    }
    total
}

/// Lebesgue measure of the union of boxes `[y, reference]` (minimization).
/// Dominated members are tolerated; every point must strictly dominate the
/// reference.
pub fn hypervolume(points: &[Vec<f64>], reference: &[f64]) -> Result<f64, MoboError> {
    check_box(points, reference)?;
    let mut pts = points.to_vec();
    Ok(hv_recursive(&mut pts, reference))
}

/// Hypervolume improvement of `candidate` over the archive `points`. A
/// candidate that fails to strictly dominate the reference contributes zero.
pub fn hvi(points: &[Vec<f64>], candidate: &[f64], reference: &[f64]) -> Result<f64, MoboError> {
    check_box(points, reference)?;
    if candidate.len() != reference.len() {
        return Err(MoboError::DimensionMismatch {
            expected: reference.len(),
            got: candidate.len(),
        });
    }
    if candidate.iter().zip(reference).any(|(v, r)| v >= r) {
        return Ok(0.0);
    }
    let mut pts = points.to_vec();
    let base = hv_recursive(&mut pts, reference);
    let mut with = points.to_vec();
    with.push(candidate.to_vec());
    Ok((hv_recursive(&mut with, reference) - base).max(0.0))
}

// --- fast repeated-HVI evaluation -----------------------------------------------

/// Preprocessed archive front for evaluating many HVI queries cheaply.
/// For two objectives, queries walk a sorted staircase in O(log m + steps);
/// other arities fall back to full recomputation.
pub struct FrontEval {
    reference: Vec<f64>,
    /// Strictly increasing in the first objective, strictly decreasing in the
    /// second (two-objective path only).
    sorted2: Option<Vec<(f64, f64)>>,
    points: Vec<Vec<f64>>,
    base_hv: f64,
}

impl FrontEval {
    pub fn new(points: &[Vec<f64>], reference: &[f64]) -> Result<FrontEval, MoboError> {
        check_box(points, reference)?;
        let filtered = nondominated(points);
        let base_hv = hv_recursive(&mut filtered.clone(), reference);
        let sorted2 = if reference.len() == 2 {
            let mut s: Vec<(f64, f64)> = filtered.iter().map(|p| (p[0], p[1])).collect();
            s.sort_by(|a, b| a.partial_cmp(b).unwrap());
            s.dedup();
            Some(s)
        } else {
            None
        };
        Ok(FrontEval {
            reference: reference.to_vec(),
            sorted2,
            points: filtered,
            base_hv,
        })
    }

    pub fn base_hypervolume(&self) -> f64 {
        self.base_hv
    }

    /// HVI of one candidate; zero for candidates outside the reference box.
    pub fn hvi(&self, candidate: &[f64]) -> f64 {
        if candidate
            .iter()
            .zip(&self.reference)
            .any(|(v, r)| !v.is_finite() || *v >= *r)
        {
            return 0.0;
        }
        if let Some(front) = &self.sorted2 {
            let (y0, y1) = (candidate[0], candidate[1]);
            let (r0, r1) = (self.reference[0], self.reference[1]);
            // Ceiling imposed by points at or left of the candidate.
            let i = front.partition_point(|p| p.0 <= y0);
            let mut ceil = if i == 0 { f64::INFINITY } else { front[i - 1].1 };
            if ceil <= y1 {
                return 0.0; // dominated
            }
            let mut acc = 0.0;
            let mut x = y0;
            let mut j = i;
            while x < r0 && ceil > y1 {
                let (x_next, next_ceil) = if j < front.len() {
                    (front[j].0.min(r0), front[j].1)
                } else {
                    (r0, ceil)
                };
                acc += (x_next - x) * (ceil.min(r1) - y1);
                x = x_next;
                ceil = next_ceil;
                j += 1;
            }
            acc
        } else {
            let mut with = self.points.clone();
            with.push(candidate.to_vec());
            (hv_recursive(&mut with, &self.reference) - self.base_hv).max(0.0)
        }
    }
}

// --- expected hypervolume improvement --------------------------------------------

/// Mean HVI over posterior realizations `y_q = μ_q + σ_q·z_q` using the
/// provided standard-normal draw matrix (one row per draw). Sharing the draw
/// matrix across candidate sites gives common random numbers, so comparisons
/// between sites are low-variance.
pub fn ehvi_from_posterior(
    mu: &[f64],
    s2: &[f64],
    front: &FrontEval,
    z: &[Vec<f64>],
) -> f64 {
    if z.is_empty() {
        return 0.0;
    }
    let q = mu.len();
    let sd: Vec<f64> = s2.iter().map(|v| v.max(0.0).sqrt()).collect();
    let mut y = vec![0.0; q];
    let mut acc = 0.0;
    for row in z {
        for k in 0..q {
            y[k] = mu[k] + sd[k] * row[k];
        }
        acc += front.hvi(&y);
    }
    acc / z.len() as f64
}

pub fn standard_normal_draws(n: usize, q: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = Xoshiro256::seed_from_u64(seed);
    (0..n)
        .map(|_| (0..q).map(|_| rng.normal()).collect())
        .collect()
}

/// Monte-Carlo EHVI of candidate latent `x0` under one fitted model per
/// objective. Deterministic for a fixed seed.
pub fn ehvi(
    models: &[&GpModel],
    x0: &[f64],
    front_points: &[Vec<f64>],
    reference: &[f64],
    n_draws: usize,
    seed: u64,
) -> Result<f64, MoboError> {
    let front = FrontEval::new(front_points, reference)?;
    let site = vec![x0.to_vec()];
    let mut mu = Vec::with_capacity(models.len());
    let mut s2 = Vec::with_capacity(models.len());
    for m in models {
        let (mean, var) = m.predict(&site);
        mu.push(mean[0]);
        s2.push(var[0]);
    }
    let z = standard_normal_draws(n_draws, models.len(), mix_key(seed, &[0x4548, 0x5649]));
    Ok(ehvi_from_posterior(&mu, &s2, &front, &z))
}

// --- archive ---------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct ArchiveEntry {
    pub objectives: Vec<f64>,
    pub latent: Vec<f64>,
    pub eval_id: usize,
}

/// Mutually non-dominated objective vectors, each strictly dominating the
/// frozen reference point.
#[derive(Clone, Debug)]
pub struct ParetoArchive {
    pub reference: Vec<f64>,
    pub entries: Vec<ArchiveEntry>,
}

impl ParetoArchive {
    pub fn new(reference: Vec<f64>) -> ParetoArchive {
        ParetoArchive {
            reference,
            entries: Vec::new(),
        }
    }

    pub fn front(&self) -> Vec<Vec<f64>> {
        self.entries.iter().map(|e| e.objectives.clone()).collect()
    }

    /// Insert if the entry strictly dominates the reference and is not
    /// dominated by (or equal to) a current member; drops members the new
    /// entry dominates. Returns whether it was inserted.
    pub fn insert(&mut self, entry: ArchiveEntry) -> bool {
        if entry.objectives.len() != self.reference.len()
            || entry.objectives.iter().any(|v| !v.is_finite())
            || entry
                .objectives
                .iter()
                .zip(&self.reference)
                .any(|(v, r)| v >= r)
        {
            return false;
        }
        for e in &self.entries {
            if dominates(&e.objectives, &entry.objectives) || e.objectives == entry.objectives {
                return false;
            }
        }
        self.entries
            .retain(|e| !dominates(&entry.objectives, &e.objectives));
        self.entries.push(entry);
        true
    }

    pub fn hypervolume(&self) -> Result<f64, MoboError> {
        hypervolume(&self.front(), &self.reference)
    }
}

// --- acquisition maximization and batching -----------------------------------------

fn project_to_ball(x: &mut [f64], radius: f64) {
    let sumsq: f64 = x.iter().map(|v| v * v).sum();
    if sumsq <= radius * radius {
        return;
    }
    let scale = radius / sumsq.sqrt();
    for v in x.iter_mut() {
        *v *= scale;
    }
    // Rounding can leave the norm a hair over; shave until it satisfies the
    // bound exactly.
    while x.iter().map(|v| v * v).sum::<f64>() > radius * radius {
        for v in x.iter_mut() {
            *v *= 1.0 - 1e-15;
        }
    }
}

/// Derivative-free pattern search of EHVI inside the ball.
fn pattern_search(
    models: &[&GpModel],
    front: &FrontEval,
    start: &[f64],
    radius: f64,
    z: &[Vec<f64>],
) -> (Vec<f64>, f64) {
    let d = start.len();
    let eval = |x: &[f64]| {
        let site = vec![x.to_vec()];
        let mut mu = Vec::with_capacity(models.len());
        let mut s2 = Vec::with_capacity(models.len());
        for m in models {
            let (mean, var) = m.predict(&site);
            mu.push(mean[0]);
            s2.push(var[0]);
        }
        ehvi_from_posterior(&mu, &s2, front, z)
    };
    let mut x = start.to_vec();
    project_to_ball(&mut x, radius);
    let mut best = eval(&x);
    let mut step = radius / 8.0;
    let mut rounds = 0;
    while step >= 1e-3 && rounds < 500 {
        rounds += 1;
        let mut improved = false;
        let mut best_cand: Option<(Vec<f64>, f64)> = None;
        for j in 0..d {
            for sign in [-1.0, 1.0] {
                let mut cand = x.clone();
                cand[j] += sign * step;
                project_to_ball(&mut cand, radius);
                let v = eval(&cand);
                if v > best && best_cand.as_ref().is_none_or(|(_, bv)| v > *bv) {
                    best_cand = Some((cand, v));
                }
            }
        }
        if let Some((cand, v)) = best_cand {
            x = cand;
            best = v;
            improved = true;
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, best)
}

pub struct ProposedBatch {
    pub points: Vec<Vec<f64>>,
    pub acquisition: Vec<f64>,
    /// False when every restart of some proposal saw EHVI below threshold and
    /// the batch is only best-effort.
    pub converged: bool,
}

const EHVI_FLOOR: f64 = 1e-12;

/// Kriging-believer batch proposal: maximize EHVI inside the ball from
/// multi-start pattern search, believe the posterior mean at the chosen point
/// (mean-only refit at fixed hyperparameters), and repeat.
#[allow(clippy::too_many_arguments)]
pub fn propose_batch(
    models: &[GpModel],
    front_points: &[Vec<f64>],
    reference: &[f64],
    batch_size: usize,
    restarts: usize,
    n_draws: usize,
    radius: f64,
    seed: u64,
) -> Result<ProposedBatch, MoboError> {
    let d = models
        .first()
        .map(|m| m.dim())
        .ok_or(MoboError::TooFewSuccesses)?;
    let mut working: Vec<GpModel> = models.to_vec();
    let mut believed_front = front_points.to_vec();
    let mut points = Vec::with_capacity(batch_size);
    let mut acquisition = Vec::with_capacity(batch_size);
    let mut converged = true;
    for b in 0..batch_size {
        let front = FrontEval::new(&believed_front, reference)?;
        let z = standard_normal_draws(
            n_draws,
            working.len(),
            mix_key(seed, &[0x4352, b as u64]),
        );
        let starts = sobol_ball_doe(d, restarts.max(1), radius, mix_key(seed, &[0x5354, b as u64]))?;
        let refs: Vec<&GpModel> = working.iter().collect();
        let mut best: Option<(Vec<f64>, f64)> = None;
        for s in &starts {
            let (x, v) = pattern_search(&refs, &front, s, radius, &z);
            if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
                best = Some((x, v));
            }
        }
        let (x_star, a_star) = best.expect("at least one restart");
        if a_star < EHVI_FLOOR {
            converged = false;
        }
        // Believe the posterior mean as if observed.
        let site = vec![x_star.clone()];
        let mut believed = Vec::with_capacity(working.len());
        for m in &working {
            let (mu, _) = m.predict(&site);
            believed.push(mu[0]);
        }
        for (m, y) in working.iter_mut().zip(&believed) {
            *m = m.augmented(&site, &[*y])?;
        }
        if believed.iter().zip(reference).all(|(v, r)| v < r) {
            believed_front.push(believed);
        }
        points.push(x_star);
        acquisition.push(a_star);
    }
    Ok(ProposedBatch {
        points,
        acquisition,
        converged,
    })
}

// --- outer loop -----------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct OptimizerConfig {
    pub latent_dim: usize,
    pub doe_size: usize,
    pub batches: usize,
    pub batch_size: usize,
    pub mc_draws: usize,
    pub restarts: usize,
    pub gp_restarts: usize,
    pub radius: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            latent_dim: 8,
            doe_size: 20,
            batches: 3,
            batch_size: 5,
            mc_draws: 256,
            restarts: 32,
            gp_restarts: 8,
            radius: LATENT_RADIUS,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EvalRecord {
    /// 0 for the initial design, then 1-based batch number.
    pub batch: usize,
    pub eval_id: usize,
    pub latent: Vec<f64>,
    /// None when the evaluation failed; failures never enter model fitting.
    pub objectives: Option<Vec<f64>>,
    pub acquisition: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct OptimizationHistory {
    pub config: OptimizerConfig,
    pub objective_count: usize,
    pub reference: Vec<f64>,
    pub records: Vec<EvalRecord>,
    /// Dominated hypervolume after the DoE and after each batch.
    pub batch_hypervolume: Vec<f64>,
    pub batch_converged: Vec<bool>,
    pub archive: ParetoArchive,
}

/// Componentwise max of the design objectives plus a 10% span margin; frozen
/// for the rest of the run so hypervolumes stay comparable.
fn freeze_reference(ys: &[Vec<f64>]) -> Vec<f64> {
    let q = ys[0].len();
    (0..q)
        .map(|k| {
            let max = ys.iter().map(|y| y[k]).fold(f64::NEG_INFINITY, f64::max);
            let min = ys.iter().map(|y| y[k]).fold(f64::INFINITY, f64::min);
            let span = max - min;
            if span > 0.0 {
                max + 0.1 * span
            } else {
                max + 0.1 * max.abs().max(1.0)
            }
        })
        .collect()
}

/// DoE → evaluate → fit → propose → evaluate, `batches` times. The evaluator
/// maps a slice of latent points to one optional objective vector each (None =
/// failed evaluation, recorded and excluded from fitting).
pub fn run_loop<F>(mut evaluator: F, config: &OptimizerConfig) -> Result<OptimizationHistory, MoboError>
where
    F: FnMut(&[Vec<f64>]) -> Vec<Option<Vec<f64>>>,
{
    let doe = sobol_ball_doe(config.latent_dim, config.doe_size, config.radius, config.seed)?;
    let doe_results = evaluator(&doe);
    if doe_results.len() != doe.len() {
        return Err(MoboError::EvaluatorShape {
            expected: doe.len(),
            got: doe_results.len(),
        });
    }
    let successes: Vec<&Vec<f64>> = doe_results.iter().flatten().collect();
    if successes.len() < 2 {
        return Err(MoboError::TooFewSuccesses);
    }
    let q = successes[0].len();
    for y in &successes {
        if y.len() != q {
            return Err(MoboError::DimensionMismatch {
                expected: q,
                got: y.len(),
            });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(MoboError::NonFiniteObjective);
        }
    }
    let reference = freeze_reference(
        &successes.iter().map(|y| (*y).clone()).collect::<Vec<_>>(),
    );
    let mut archive = ParetoArchive::new(reference.clone());
    let mut records = Vec::new();
    let mut eval_id = 0usize;
    for (x, y) in doe.iter().zip(&doe_results) {
        if let Some(y) = y {
            archive.insert(ArchiveEntry {
                objectives: y.clone(),
                latent: x.clone(),
                eval_id,
            });
        }
        records.push(EvalRecord {
            batch: 0,
            eval_id,
            latent: x.clone(),
            objectives: y.clone(),
            acquisition: None,
        });
        eval_id += 1;
    }
    let mut batch_hypervolume = vec![archive.hypervolume()?];
    let mut batch_converged = Vec::new();

    for batch in 1..=config.batches {
        // Fit one emulator per objective on everything evaluated so far.
        let xs: Vec<Vec<f64>> = records
            .iter()
            .filter(|r| r.objectives.is_some())
            .map(|r| r.latent.clone())
            .collect();
        let mut models = Vec::with_capacity(q);
        for k in 0..q {
            let yk: Vec<f64> = records
                .iter()
                .filter_map(|r| r.objectives.as_ref().map(|y| y[k]))
                .collect();
            models.push(gp_fit(
                &xs,
                &yk,
                config.gp_restarts,
                mix_key(config.seed, &[0x4649, batch as u64, k as u64]),
            )?);
        }
        let proposal = propose_batch(
            &models,
            &archive.front(),
            &reference,
            config.batch_size,
            config.restarts,
            config.mc_draws,
            config.radius,
            mix_key(config.seed, &[0x4143, batch as u64]),
        )?;
        batch_converged.push(proposal.converged);
        let results = evaluator(&proposal.points);
        if results.len() != proposal.points.len() {
            return Err(MoboError::EvaluatorShape {
                expected: proposal.points.len(),
                got: results.len(),
            });
        }
        let mut any_ok = false;
        for ((x, y), a) in proposal
            .points
            .iter()
            .zip(&results)
            .zip(&proposal.acquisition)
        {
            if let Some(y) = y {
                if y.len() != q {
                    return Err(MoboError::DimensionMismatch {
                        expected: q,
                        got: y.len(),
                    });
                }
                any_ok = true;
                archive.insert(ArchiveEntry {
                    objectives: y.clone(),
                    latent: x.clone(),
                    eval_id,
                });
            }
            records.push(EvalRecord {
                batch,
                eval_id,
                latent: x.clone(),
                objectives: y.clone(),
                acquisition: Some(*a),
            });
            eval_id += 1;
        }
        batch_hypervolume.push(archive.hypervolume()?);
        if !any_ok {
            return Err(MoboError::BatchEvaluationFailed {
                batch,
                partial: Box::new(OptimizationHistory {
                    config: config.clone(),
                    objective_count: q,
                    reference,
                    records,
                    batch_hypervolume,
                    batch_converged,
                    archive,
                }),
            });
        }
    }
    Ok(OptimizationHistory {
        config: config.clone(),
        objective_count: q,
        reference,
        records,
        batch_hypervolume,
        batch_converged,
        archive,
    })
}

// --- reports -------------------------------------------------------------------

/// One row per evaluation: batch, id, latent coordinates, objectives (blank
/// on failure), and the dominated hypervolume after that row's batch.
pub fn history_csv(h: &OptimizationHistory) -> String {
    let d = h.config.latent_dim;
    let mut out = String::from("batch,eval_id");
    for j in 0..d {
        out.push_str(&format!(",x{j}"));
    }
    for k in 0..h.objective_count {
        out.push_str(&format!(",f{k}"));
    }
    out.push_str(",hypervolume\n");
    for r in &h.records {
        out.push_str(&format!("{},{}", r.batch, r.eval_id));
        for v in &r.latent {
            out.push_str(&format!(",{v}"));
        }
        match &r.objectives {
            Some(y) => {
                for v in y {
                    out.push_str(&format!(",{v}"));
                }
            }
            None => out.push_str(&",".repeat(h.objective_count)),
        }
        out.push_str(&format!(",{}\n", h.batch_hypervolume[r.batch]));
    }
    out
}

pub fn pareto_csv(h: &OptimizationHistory) -> String {
    let d = h.config.latent_dim;
    let mut out = String::from("eval_id");
    for j in 0..d {
        out.push_str(&format!(",x{j}"));
    }
    for k in 0..h.objective_count {
        out.push_str(&format!(",f{k}"));
    }
    out.push('\n');
    let mut entries = h.archive.entries.clone();
    entries.sort_by_key(|e| e.eval_id);
    for e in entries {
        out.push_str(&format!("{}", e.eval_id));
        for v in &e.latent {
            out.push_str(&format!(",{v}"));
        }
        for v in &e.objectives {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

pub fn acquisition_csv(h: &OptimizationHistory) -> String {
    let mut out = String::from("batch,eval_id,acquisition\n");
    for r in &h.records {
        if let Some(a) = r.acquisition {
            out.push_str(&format!("{},{},{a}\n", r.batch, r.eval_id));
        }
    }
    out
}

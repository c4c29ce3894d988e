//! Latent-space interpretability: Monte-Carlo Pareto-membership
//! probabilities for a cloud of candidate latents, and probability-weighted
//! marginal histograms per latent dimension.
//!
//! Each of N realizations draws the objectives of *all* candidates jointly
//! from the Gaussian-process posterior, marks that draw's non-dominated
//! candidates, and averages the marks. Joint draws matter: Pareto membership
//! is defined against the same realization's full candidate set, so
//! independent per-candidate draws would bias the probabilities.

use crate::gp::{sample_posterior, GpError, GpModel};
use crate::mobo::{dominates, LATENT_RADIUS};
use crate::svg;

/// Default size of the Sobol-ball candidate cloud.
pub const DEFAULT_CANDIDATES: usize = 4096;
/// Default number of joint posterior realizations.
pub const DEFAULT_DRAWS: usize = 256;
/// Posterior standard deviations below this fraction of the mean scale are
/// numeric noise: the estimator then reduces to exact membership of the
/// posterior means (fitted emulators keep at least the jitter floor, a few
/// orders of magnitude above this).
const DEGENERATE_STD: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum InterpretError {
    #[error("need at least two candidates, got {0}")]
    TooFewCandidates(usize),
    #[error("candidate {index} has {got} dims, models expect {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("candidate {index} lies outside the latent ball (norm {norm})")]
    OutsideBall { index: usize, norm: f64 },
    #[error("candidate {index} has a non-finite coordinate")]
    NonFinite { index: usize },
    #[error("no objective models supplied")]
    NoModels,
    #[error("draw count must be at least 1")]
    NoDraws,
    #[error("histograms need at least 2 bins, got {0}")]
    BadBins(usize),
    #[error(transparent)]
    Gp(#[from] GpError),
}

/// Monte-Carlo Pareto-membership estimate over a candidate cloud.
#[derive(Clone, Debug)]
pub struct ParetoProbability {
    pub candidates: Vec<Vec<f64>>,
    /// Per candidate: fraction of realizations in which it was non-dominated.
    pub probs: Vec<f64>,
    pub draws: usize,
    pub seed: u64,
    /// Σ over realizations of that realization's Pareto-set size. Every
    /// realization has at least one non-dominated candidate, so this is
    /// always ≥ `draws`.
    pub pareto_marks: u64,
}

/// Mark the non-dominated rows of an m×q objective slab. Ties and exact
/// duplicates are all marked (nothing strictly dominates them).
fn mark_nondominated(rows: &[Vec<f64>], marked: &mut [bool]) {
    let m = rows.len();
    if m > 0 && rows[0].len() == 2 {
        // Two objectives: sort by (f0, f1) and sweep groups of equal f0.
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| {
            (rows[a][0], rows[a][1])
                .partial_cmp(&(rows[b][0], rows[b][1]))
                .unwrap()
        });
        marked.iter_mut().for_each(|f| *f = false);
        let mut prefix_min_f1 = f64::INFINITY;
        let mut g = 0;
        while g < m {
            let f0 = rows[order[g]][0];
            let mut end = g;
            while end < m && rows[order[end]][0] == f0 {
                end += 1;
            }
            // Within the group only the minimal-f1 rows can survive, and only
            // if no strictly-cheaper-f0 row already reached that f1.
            let group_min_f1 = rows[order[g]][1];
            for &i in &order[g..end] {
                if rows[i][1] == group_min_f1 && group_min_f1 < prefix_min_f1 {
                    marked[i] = true;
                }
            }
            prefix_min_f1 = prefix_min_f1.min(group_min_f1);
            g = end;
        }
        return;
    }
    for i in 0..m {
        marked[i] = !(0..m).any(|j| j != i && dominates(&rows[j], &rows[i]));
    }
}

/// Estimate each candidate's probability of being Pareto optimal from N
/// joint posterior realizations of the objective emulators.
///
/// Candidates are canonicalized (sorted lexicographically) before drawing, so
/// permuting the input permutes the probabilities bit-exactly, and exact
/// duplicates pool their marks and share one probability. Deterministic
/// given the seed.
pub fn pareto_probability(
    models: &[&GpModel],
    candidates: &[Vec<f64>],
    n_draws: usize,
    seed: u64,
) -> Result<ParetoProbability, InterpretError> {
    if models.is_empty() {
        return Err(InterpretError::NoModels);
    }
    if candidates.len() < 2 {
        return Err(InterpretError::TooFewCandidates(candidates.len()));
    }
    if n_draws == 0 {
        return Err(InterpretError::NoDraws);
    }
    let d = models[0].dim();
    for (index, c) in candidates.iter().enumerate() {
        if c.len() != d {
            return Err(InterpretError::DimensionMismatch {
                index,
                expected: d,
                got: c.len(),
            });
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(InterpretError::NonFinite { index });
        }
        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > LATENT_RADIUS + 1e-9 {
            return Err(InterpretError::OutsideBall { index, norm });
        }
    }

    let m = candidates.len();
    let q = models.len();
    // Canonical (input-order-independent) site ordering.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| candidates[a].partial_cmp(&candidates[b]).unwrap());
    let sites: Vec<Vec<f64>> = order.iter().map(|&i| candidates[i].clone()).collect();

    // Posterior means and spreads per objective; a spread indistinguishable
    // from numeric noise collapses the estimator to exact mean membership.
    let mut means = vec![vec![0.0; q]; m];
    let mut degenerate = true;
    for (k, model) in models.iter().enumerate() {
        let (mu, s2) = model.predict(&sites);
        let scale = mu.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
        if s2.iter().any(|v| v.sqrt() > DEGENERATE_STD * scale) {
            degenerate = false;
        }
        for i in 0..m {
            means[i][k] = mu[i];
        }
    }

    let mut counts = vec![0u64; m];
    let mut pareto_marks = 0u64;
    if degenerate {
        let mut marked = vec![false; m];
        mark_nondominated(&means, &mut marked);
        for (c, &is_set) in counts.iter_mut().zip(&marked) {
            if is_set {
                *c = n_draws as u64;
                pareto_marks += n_draws as u64;
            }
        }
    } else {
        let draws = sample_posterior(models, &sites, n_draws, seed)?;
        let mut rows = vec![vec![0.0; q]; m];
        let mut marked = vec![false; m];
        for draw in &draws {
            for i in 0..m {
                for k in 0..q {
                    rows[i][k] = draw[k][i];
                }
            }
            mark_nondominated(&rows, &mut marked);
            for (c, &is_set) in counts.iter_mut().zip(&marked) {
                if is_set {
                    *c += 1;
                    pareto_marks += 1;
                }
            }
        }
    }

    // Exact duplicates (adjacent after sorting) share the pooled probability.
    let mut probs_sorted = vec![0.0; m];
    let mut g = 0;
    while g < m {
        let mut end = g;
        let mut total = 0u64;
        while end < m && sites[end] == sites[g] {
            total += counts[end];
            end += 1;
        }
        let p = total as f64 / ((end - g) as u64 * n_draws as u64) as f64;
        probs_sorted[g..end].iter_mut().for_each(|v| *v = p);
        g = end;
    }
    let mut probs = vec![0.0; m];
    for (slot, &orig) in order.iter().enumerate() {
        probs[orig] = probs_sorted[slot];
    }

    Ok(ParetoProbability {
        candidates: candidates.to_vec(),
        probs,
        draws: n_draws,
        seed,
        pareto_marks,
    })
}

// --- marginals -----------------------------------------------------------------

/// Probability-weighted histogram of one latent coordinate over the ball
/// span [−LATENT_RADIUS, LATENT_RADIUS], normalized to unit mass.
#[derive(Clone, Debug)]
pub struct MarginalHistogram {
    pub dim: usize,
    pub lo: f64,
    pub hi: f64,
    pub masses: Vec<f64>,
    /// Set when every candidate had zero probability and the weights fell
    /// back to uniform; treat the histogram as a coverage plot, not evidence.
    pub uniform_fallback: bool,
}

/// Per-dimension marginals of the candidate cloud weighted by Pareto
/// probability. All-zero probabilities fall back to uniform weights with the
/// warning flag set on every histogram.
pub fn marginal_histograms(
    pp: &ParetoProbability,
    bins: usize,
) -> Result<Vec<MarginalHistogram>, InterpretError> {
    if bins < 2 {
        return Err(InterpretError::BadBins(bins));
    }
    let Some(first) = pp.candidates.first() else {
        return Ok(Vec::new());
    };
    let d = first.len();
    let total: f64 = pp.probs.iter().sum();
    let uniform_fallback = total.is_nan() || total <= 0.0;
    let weights: Vec<f64> = if uniform_fallback {
        vec![1.0 / pp.candidates.len() as f64; pp.candidates.len()]
    } else {
        pp.probs.iter().map(|p| p / total).collect()
    };
    let (lo, hi) = (-LATENT_RADIUS, LATENT_RADIUS);
    let mut out = Vec::with_capacity(d);
    for dim in 0..d {
        let mut masses = vec![0.0; bins];
        for (c, w) in pp.candidates.iter().zip(&weights) {
            let t = (c[dim] - lo) / (hi - lo);
            let bin = ((t * bins as f64) as usize).min(bins - 1);
            masses[bin] += w;
        }
        out.push(MarginalHistogram {
            dim,
            lo,
            hi,
            masses,
            uniform_fallback,
        });
    }
    Ok(out)
}

// --- reports --------------------------------------------------------------------

/// Probabilities as CSV: candidate coordinates then the estimate.
pub fn probability_csv(pp: &ParetoProbability) -> String {
    let d = pp.candidates.first().map_or(0, |c| c.len());
    let mut out = String::new();
    for j in 0..d {
        out.push_str(&format!("x{j},"));
    }
    out.push_str("prob\n");
    for (c, p) in pp.candidates.iter().zip(&pp.probs) {
        for v in c {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&format!("{p}\n"));
    }
    out
}

/// One marginal as CSV: bin_lo,bin_hi,mass.
pub fn histogram_csv(h: &MarginalHistogram) -> String {
    let mut out = String::from("bin_lo,bin_hi,mass\n");
    let width = (h.hi - h.lo) / h.masses.len() as f64;
    for (b, m) in h.masses.iter().enumerate() {
        let lo = h.lo + b as f64 * width;
        out.push_str(&format!("{},{},{}\n", lo, lo + width, m));
    }
    out
}

/// SVG rendering of one marginal histogram.
pub fn marginal_svg(h: &MarginalHistogram, comment: Option<&str>) -> String {
    let title = if h.uniform_fallback {
        format!("Latent marginal x{} (uniform fallback)", h.dim)
    } else {
        format!("Latent marginal x{}", h.dim)
    };
    svg::histogram_svg(
        &h.masses,
        h.lo,
        h.hi,
        &title,
        &format!("x{}", h.dim),
        "mass",
        comment,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::{fit as gp_fit, GpHyper, GpModel};
    use crate::rng::Xoshiro256;
    use crate::sobol::sobol_ball_doe;

    /// Interpolating emulator with externally chosen hyperparameters; the
    /// tiny jitter keeps the posterior spread at training sites near zero.
    fn pinned_model(x: &[Vec<f64>], y: &[f64], sigma2: f64, jitter: f64) -> GpModel {
        let hyper = GpHyper {
            omega: vec![0.0; x[0].len()],
            sigma2,
            mu0: 0.0,
            jitter,
        };
        GpModel::with_hyper(hyper, x.to_vec(), y.to_vec(), 0.0, 1.0).unwrap()
    }

    #[test]
    fn degenerate_posterior_reduces_to_exact_membership() {
        let x = vec![
            vec![0.5, 0.0],
            vec![-0.5, 0.0],
            vec![0.0, 0.5],
            vec![0.0, -0.5],
        ];
        let y0 = vec![0.1, 0.9, 0.5, 0.2];
        let y1 = vec![0.9, 0.1, 0.95, 0.95];
        let m0 = pinned_model(&x, &y0, 1.0, 0.0);
        let m1 = pinned_model(&x, &y1, 1.0, 0.0);
        // Pareto set of the means: (0.1,0.9), (0.9,0.1), and (0.2,0.95) is
        // dominated by (0.1,0.9), (0.5,0.95) by both.
        for n in [1, 9] {
            let pp = pareto_probability(&[&m0, &m1], &x, n, 7).unwrap();
            assert_eq!(pp.probs, vec![1.0, 1.0, 0.0, 0.0]);
            assert_eq!(pp.pareto_marks, 2 * n as u64);
        }
    }

    #[test]
    fn symmetric_pair_shares_probability_within_mc_error() {
        // Objectives mirrored under x0 → −x0 over a mirror-symmetric design.
        let mut x = Vec::new();
        for &a in &[0.2, 0.6, 1.0] {
            for &b in &[0.0, 0.6] {
                x.push(vec![a, b]);
                x.push(vec![-a, b]);
            }
        }
        let y0: Vec<f64> = x.iter().map(|p| p[0]).collect();
        let y1: Vec<f64> = x.iter().map(|p| -p[0]).collect();
        let m0 = pinned_model(&x, &y0, 0.5, 1e-8);
        let m1 = pinned_model(&x, &y1, 0.5, 1e-8);
        let candidates = vec![vec![0.4, 0.3], vec![-0.4, 0.3]];
        let n = 4096;
        let pp = pareto_probability(&[&m0, &m1], &candidates, n, 3).unwrap();
        let p_bar = (pp.probs[0] + pp.probs[1]) / 2.0;
        let se = (p_bar * (1.0 - p_bar) / n as f64).sqrt();
        assert!(
            (pp.probs[0] - pp.probs[1]).abs() <= 3.0 * se + 1e-12,
            "asymmetric probs {:?} (3·SE = {})",
            pp.probs,
            3.0 * se
        );
        assert!(pp.pareto_marks >= n as u64);
    }

    fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
        let legendre = |x: f64| {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            (p1, dp)
        };
        (0..n)
            .map(|i| {
                let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
                for _ in 0..100 {
                    let (p, dp) = legendre(x);
                    let dx = p / dp;
                    x -= dx;
                    if dx.abs() < 1e-15 {
                        break;
                    }
                }
                let (_, dp) = legendre(x);
                (x, 2.0 / ((1.0 - x * x) * dp * dp))
            })
            .collect()
    }

    fn normal_cdf(x: f64) -> f64 {
        // Abramowitz–Stegun 7.1.26 erf polynomial, |error| < 1.5e-7.
        let z = x / std::f64::consts::SQRT_2;
        let (sign, z) = if z < 0.0 { (-1.0, -z) } else { (1.0, z) };
        let t = 1.0 / (1.0 + 0.3275911 * z);
        let poly = t
            * (0.254829592
                + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
        let erf = sign * (1.0 - poly * (-z * z).exp());
        0.5 * (1.0 + erf)
    }

    #[test]
    fn independent_toy_matches_quadrature_oracle() {
        // Three candidates far apart relative to the length scale, each with
        // one nearby training point: the joint posterior factorizes into
        // independent per-candidate Gaussians (cross-correlation e^{-100}).
        let candidates = vec![vec![-1.0, 0.0], vec![0.0, 0.0], vec![1.0, 0.0]];
        let x: Vec<Vec<f64>> = candidates.iter().map(|c| vec![c[0] + 0.05, 0.0]).collect();
        let shrink = (-100.0_f64 * 0.0025).exp();
        let t0 = [0.35, 0.55, 0.65];
        let t1 = [0.65, 0.55, 0.35];
        let y_for = |t: &[f64]| -> Vec<f64> { t.iter().map(|v| 0.5 + (v - 0.5) / shrink).collect() };
        let hyper = GpHyper {
            omega: vec![2.0, 2.0],
            sigma2: 0.04,
            mu0: 0.5,
            jitter: 1e-10,
        };
        let m0 = GpModel::with_hyper(hyper.clone(), x.clone(), y_for(&t0), 0.0, 1.0).unwrap();
        let m1 = GpModel::with_hyper(hyper, x.clone(), y_for(&t1), 0.0, 1.0).unwrap();
        let models = [&m0, &m1];

        // Oracle: 2-D quadrature per candidate over its own objective pair,
        // with the others entering through their normal CDFs.
        let (mu0, s0) = m0.predict(&candidates);
        let (mu1, s1) = m1.predict(&candidates);
        let sd0: Vec<f64> = s0.iter().map(|v| v.sqrt()).collect();
        let sd1: Vec<f64> = s1.iter().map(|v| v.sqrt()).collect();
        let nodes = gauss_legendre(96);
        let mut oracle = [0.0; 3];
        for i in 0..3 {
            let mut total = 0.0;
            for &(u, wu) in &nodes {
                let a = mu0[i] + 8.0 * sd0[i] * u;
                let pa = (-0.5 * (8.0 * u) * (8.0 * u)).exp()
                    / (sd0[i] * (2.0 * std::f64::consts::PI).sqrt())
                    * (8.0 * sd0[i]);
                for &(v, wv) in &nodes {
                    let b = mu1[i] + 8.0 * sd1[i] * v;
                    let pb = (-0.5 * (8.0 * v) * (8.0 * v)).exp()
                        / (sd1[i] * (2.0 * std::f64::consts::PI).sqrt())
                        * (8.0 * sd1[i]);
                    let mut survive = 1.0;
                    for j in 0..3 {
                        if j != i {
                            let dom = normal_cdf((a - mu0[j]) / sd0[j])
                                * normal_cdf((b - mu1[j]) / sd1[j]);
                            survive *= 1.0 - dom;
                        }
                    }
                    total += wu * wv * pa * pb * survive;
                }
            }
            oracle[i] = total;
        }

        let pp = pareto_probability(&models, &candidates, 100_000, 11).unwrap();
        for i in 0..3 {
            assert!(
                (pp.probs[i] - oracle[i]).abs() < 0.02,
                "candidate {i}: mc {} vs oracle {}",
                pp.probs[i],
                oracle[i]
            );
        }
    }

    fn fitted_toy_models(seed: u64) -> Vec<GpModel> {
        let mut rng = Xoshiro256::seed_from_u64(seed);
        let xs: Vec<Vec<f64>> = (0..12)
            .map(|_| vec![rng.range(-1.5, 1.5), rng.range(-1.5, 1.5)])
            .collect();
        let mut models = Vec::new();
        for k in 0..2 {
            let sign = if k == 0 { 1.0 } else { -1.0 };
            let y: Vec<f64> = xs
                .iter()
                .map(|x| (x[0] - sign * 0.6).powi(2) + x[1] * x[1])
                .collect();
            models.push(gp_fit(&xs, &y, 2, seed + k as u64).unwrap());
        }
        models
    }

    #[test]
    fn permuting_candidates_permutes_probabilities_exactly() {
        let models = fitted_toy_models(5);
        let refs: Vec<&GpModel> = models.iter().collect();
        let mut rng = Xoshiro256::seed_from_u64(19);
        let candidates: Vec<Vec<f64>> = (0..6)
            .map(|_| vec![rng.range(-1.0, 1.0), rng.range(-1.0, 1.0)])
            .collect();
        let base = pareto_probability(&refs, &candidates, 64, 5).unwrap();
        let perm = [4usize, 0, 5, 2, 1, 3];
        let shuffled: Vec<Vec<f64>> = perm.iter().map(|&i| candidates[i].clone()).collect();
        let permuted = pareto_probability(&refs, &shuffled, 64, 5).unwrap();
        for (slot, &orig) in perm.iter().enumerate() {
            assert_eq!(
                permuted.probs[slot].to_bits(),
                base.probs[orig].to_bits(),
                "slot {slot}"
            );
        }
    }

    #[test]
    fn duplicate_candidates_share_one_probability() {
        let models = fitted_toy_models(6);
        let refs: Vec<&GpModel> = models.iter().collect();
        let candidates = vec![
            vec![0.5, 0.1],
            vec![-0.3, 0.4],
            vec![0.9, -0.2],
            vec![-0.3, 0.4],
        ];
        let pp = pareto_probability(&refs, &candidates, 128, 2).unwrap();
        assert_eq!(pp.probs[1].to_bits(), pp.probs[3].to_bits());
        assert!(pp.pareto_marks >= 128);
    }

    #[test]
    fn doubling_draws_tightens_cross_seed_spread() {
        let models = fitted_toy_models(7);
        let refs: Vec<&GpModel> = models.iter().collect();
        let mut rng = Xoshiro256::seed_from_u64(23);
        let candidates: Vec<Vec<f64>> = (0..8)
            .map(|_| vec![rng.range(-1.2, 1.2), rng.range(-1.2, 1.2)])
            .collect();
        let spread = |n: usize| -> f64 {
            let runs: Vec<Vec<f64>> = (0..10)
                .map(|s| {
                    pareto_probability(&refs, &candidates, n, 1000 + s)
                        .unwrap()
                        .probs
                })
                .collect();
            let mut total = 0.0;
            for i in 0..candidates.len() {
                let mean = runs.iter().map(|r| r[i]).sum::<f64>() / runs.len() as f64;
                total += runs
                    .iter()
                    .map(|r| (r[i] - mean) * (r[i] - mean))
                    .sum::<f64>()
                    / runs.len() as f64;
            }
            total / candidates.len() as f64
        };
        assert!(spread(256) < spread(128));
    }

    #[test]
    fn validation_rejects_bad_candidate_sets() {
        let models = fitted_toy_models(8);
        let refs: Vec<&GpModel> = models.iter().collect();
        let ok = vec![vec![0.1, 0.2], vec![0.3, 0.4]];
        assert!(matches!(
            pareto_probability(&[], &ok, 10, 0),
            Err(InterpretError::NoModels)
        ));
        assert!(matches!(
            pareto_probability(&refs, &ok[..1], 10, 0),
            Err(InterpretError::TooFewCandidates(1))
        ));
        assert!(matches!(
            pareto_probability(&refs, &ok, 0, 0),
            Err(InterpretError::NoDraws)
        ));
        let bad_dim = vec![vec![0.1, 0.2], vec![0.3, 0.4, 0.5]];
        assert!(matches!(
            pareto_probability(&refs, &bad_dim, 10, 0),
            Err(InterpretError::DimensionMismatch { index: 1, .. })
        ));
        let outside = vec![vec![0.1, 0.2], vec![2.5, 0.0]];
        assert!(matches!(
            pareto_probability(&refs, &outside, 10, 0),
            Err(InterpretError::OutsideBall { index: 1, .. })
        ));
        let nan = vec![vec![0.1, 0.2], vec![f64::NAN, 0.0]];
        assert!(matches!(
            pareto_probability(&refs, &nan, 10, 0),
            Err(InterpretError::NonFinite { index: 1 })
        ));
    }

    fn uniform_pp(candidates: Vec<Vec<f64>>) -> ParetoProbability {
        let m = candidates.len();
        ParetoProbability {
            candidates,
            probs: vec![1.0; m],
            draws: 1,
            seed: 0,
            pareto_marks: m as u64,
        }
    }

    #[test]
    fn marginals_normalize_and_localize_mass() {
        let pp = ParetoProbability {
            candidates: vec![vec![1.3, -0.7]],
            probs: vec![1.0],
            draws: 1,
            seed: 0,
            pareto_marks: 1,
        };
        assert!(matches!(
            marginal_histograms(&pp, 1),
            Err(InterpretError::BadBins(1))
        ));
        let hists = marginal_histograms(&pp, 8).unwrap();
        assert_eq!(hists.len(), 2);
        for h in &hists {
            assert_eq!(h.masses.iter().filter(|&&m| m > 0.0).count(), 1);
            assert!((h.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(!h.uniform_fallback);
        }
        // x0 = 1.3 in [−2,2] with 8 bins → bin 6; x1 = −0.7 → bin 2.
        assert_eq!(hists[0].masses[6], 1.0);
        assert_eq!(hists[1].masses[2], 1.0);

        let mut weighted = uniform_pp(vec![vec![-1.0, 0.0], vec![1.0, 0.0], vec![1.0, 0.0]]);
        weighted.probs = vec![0.5, 0.25, 0.25];
        let h = marginal_histograms(&weighted, 4).unwrap();
        assert!((h[0].masses[1] - 0.5).abs() < 1e-12);
        assert!((h[0].masses[3] - 0.5).abs() < 1e-12);
        for hh in &h {
            assert!((hh.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn all_zero_probabilities_fall_back_to_uniform() {
        let mut pp = uniform_pp(vec![vec![-1.0, 0.5], vec![1.0, -0.5]]);
        pp.probs = vec![0.0, 0.0];
        let hists = marginal_histograms(&pp, 4).unwrap();
        for h in &hists {
            assert!(h.uniform_fallback);
            assert!((h.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!((hists[0].masses[1] - 0.5).abs() < 1e-12);
        assert!((hists[0].masses[3] - 0.5).abs() < 1e-12);
        assert!(marginal_svg(&hists[0], None).contains("uniform fallback"));
    }

    #[test]
    fn sobol_ball_marginals_are_near_symmetric() {
        let cloud = sobol_ball_doe(8, 4096, LATENT_RADIUS, 0).unwrap();
        let pp = uniform_pp(cloud);
        let hists = marginal_histograms(&pp, 32).unwrap();
        for h in &hists {
            let width = (h.hi - h.lo) / h.masses.len() as f64;
            let center = |b: usize| h.lo + (b as f64 + 0.5) * width;
            let mean: f64 = h
                .masses
                .iter()
                .enumerate()
                .map(|(b, m)| m * center(b))
                .sum();
            let m2: f64 = h
                .masses
                .iter()
                .enumerate()
                .map(|(b, m)| m * (center(b) - mean).powi(2))
                .sum();
            let m3: f64 = h
                .masses
                .iter()
                .enumerate()
                .map(|(b, m)| m * (center(b) - mean).powi(3))
                .sum();
            let skew = m3 / m2.powf(1.5);
            assert!(
                skew.abs() < 0.2,
                "dimension {} skewness {skew}",
                h.dim
            );
        }
    }

    #[test]
    fn reports_carry_coordinates_probabilities_and_masses() {
        let models = fitted_toy_models(9);
        let refs: Vec<&GpModel> = models.iter().collect();
        let candidates = vec![vec![0.2, 0.1], vec![-0.4, 0.5], vec![0.8, -0.3]];
        let pp = pareto_probability(&refs, &candidates, 32, 1).unwrap();

        let csv = probability_csv(&pp);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "x0,x1,prob");
        assert_eq!(lines.count(), 3);
        assert!(csv.starts_with("x0,x1,prob\n0.2,0.1,"));

        let hists = marginal_histograms(&pp, 6).unwrap();
        let hcsv = histogram_csv(&hists[0]);
        assert!(hcsv.starts_with("bin_lo,bin_hi,mass\n-2,"));
        assert_eq!(hcsv.lines().count(), 7);

        let svg_doc = marginal_svg(&hists[1], Some("config=abc123"));
        assert!(svg_doc.starts_with("<svg"));
        assert!(svg_doc.contains("config=abc123"));
        assert!(svg_doc.contains("Latent marginal x1"));
    }
}

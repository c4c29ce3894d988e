//! Gaussian-process regression, one model per objective.
//!
//! Kernel: squared exponential with base-10 log inverse-squared length
//! scales, c(x,x') = σ²·exp(−Σ_j 10^{ω_j}(x_j−x'_j)²). Hyperparameters
//! (ω, σ², constant prior mean μ0) are fitted by multi-start gradient ascent
//! on the log marginal likelihood with an analytic gradient. Outputs are
//! standardized inside `fit`; every public contract is in original units.
//!
//! The nugget ("jitter") is an implementation necessity for finite-precision
//! Cholesky factorizations, not part of the modeled kernel; factorization
//! failures escalate it ×10 up to 1e-4 before giving up.

use crate::rng::{mix_key, Xoshiro256};

#[derive(Debug, thiserror::Error)]
pub enum GpError {
    #[error("need at least {need} training points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("input dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("covariance factorization failed even at jitter {0:e}")]
    NotPositiveDefinite(f64),
    #[error("all fit restarts failed")]
    AllRestartsFailed,
    #[error("model dump malformed: {0}")]
    Format(String),
}

pub const JITTER_FLOOR: f64 = 1e-8;
pub const JITTER_CEIL: f64 = 1e-4;
pub const OMEGA_RANGE: (f64, f64) = (-6.0, 6.0);

#[derive(Clone, Debug, PartialEq)]
pub struct GpHyper {
    /// Per-dimension log10 inverse-squared length scales, each in [−6, 6].
    pub omega: Vec<f64>,
    pub sigma2: f64,
    pub mu0: f64,
    pub jitter: f64,
}

impl GpHyper {
    pub fn isotropic(d: usize, omega: f64, sigma2: f64, mu0: f64) -> GpHyper {
        GpHyper {
            omega: vec![omega; d],
            sigma2,
            mu0,
            jitter: JITTER_FLOOR,
        }
    }
}

pub fn kernel(x: &[f64], y: &[f64], hyper: &GpHyper) -> f64 {
    assert_eq!(x.len(), y.len());
    assert_eq!(x.len(), hyper.omega.len());
    let mut s = 0.0;
    for j in 0..x.len() {
        let d = x[j] - y[j];
        s += 10f64.powf(hyper.omega[j]) * d * d;
    }
    hyper.sigma2 * (-s).exp()
}

// --- small dense linear algebra ----------------------------------------------

/// In-place lower Cholesky of a symmetric n×n matrix; Err on a non-positive
/// pivot. Only the lower triangle of the result is meaningful.
fn cholesky(a: &mut [f64], n: usize) -> Result<(), ()> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !d.is_finite() || d <= 0.0 {
            return Err(());
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    Ok(())
}

/// Solve L·x = b for lower-triangular L (in place on b).
fn solve_lower(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Solve Lᵀ·x = b for lower-triangular L (in place on b).
fn solve_lower_t(l: &[f64], n: usize, b: &mut [f64]) {
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// x = K⁻¹·b given the Cholesky factor of K.
fn chol_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut x = b.to_vec();
    solve_lower(l, n, &mut x);
    solve_lower_t(l, n, &mut x);
    x
}

// --- marginal likelihood ------------------------------------------------------

/// Kernel matrix without the nugget.
fn kernel_matrix(x: &[Vec<f64>], hyper: &GpHyper) -> Vec<f64> {
    let n = x.len();
    let mut c = vec![0.0; n * n];
    for a in 0..n {
        for b in a..n {
            let v = kernel(&x[a], &x[b], hyper);
            c[a * n + b] = v;
            c[b * n + a] = v;
        }
    }
    c
}

fn chol_of(
    c: &[f64],
    n: usize,
    jitter: f64,
) -> Result<Vec<f64>, ()> {
    let mut k = c.to_vec();
    for i in 0..n {
        k[i * n + i] += jitter;
    }
    cholesky(&mut k, n)?;
    Ok(k)
}

/// Log marginal likelihood and its gradient with respect to
/// (ω_1..ω_d, log σ², μ0) at exactly the given hyperparameters.
pub fn log_marginal_likelihood(
    hyper: &GpHyper,
    x: &[Vec<f64>],
    y: &[f64],
) -> Result<(f64, Vec<f64>), GpError> {
    let n = x.len();
    if n < 1 {
        return Err(GpError::TooFewPoints { need: 1, got: 0 });
    }
    if y.len() != n {
        return Err(GpError::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    let d = hyper.omega.len();
    let c = kernel_matrix(x, hyper);
    let l = chol_of(&c, n, hyper.jitter)
        .map_err(|_| GpError::NotPositiveDefinite(hyper.jitter))?;
    let r: Vec<f64> = y.iter().map(|v| v - hyper.mu0).collect();
    let alpha = chol_solve(&l, n, &r);
    let mut logdet = 0.0;
    for i in 0..n {
        logdet += l[i * n + i].ln();
    }
    let quad: f64 = r.iter().zip(&alpha).map(|(a, b)| a * b).sum();
    let lml = -0.5 * quad - logdet - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();

    // B = ααᵀ − K⁻¹; ∂L/∂θ = ½·tr(B·∂K/∂θ). K⁻¹ column by column.
    let mut kinv = vec![0.0; n * n];
    let mut e = vec![0.0; n];
    for col in 0..n {
        e.fill(0.0);
        e[col] = 1.0;
        let ki = chol_solve(&l, n, &e);
        for row in 0..n {
            kinv[row * n + col] = ki[row];
        }
    }
    let b_at = |a: usize, bb: usize| alpha[a] * alpha[bb] - kinv[a * n + bb];

    let ln10 = std::f64::consts::LN_10;
    let mut grad = vec![0.0; d + 2];
    for j in 0..d {
        let pw = 10f64.powf(hyper.omega[j]);
        let mut s = 0.0;
        for a in 0..n {
            for bb in 0..n {
                let diff = x[a][j] - x[bb][j];
                s += b_at(a, bb) * c[a * n + bb] * (-ln10 * pw * diff * diff);
            }
        }
        grad[j] = 0.5 * s;
    }
    let mut s = 0.0;
    for a in 0..n {
        for bb in 0..n {
            s += b_at(a, bb) * c[a * n + bb];
        }
    }
    grad[d] = 0.5 * s; // ∂/∂ log σ²: ∂K/∂logσ² = C
    grad[d + 1] = alpha.iter().sum(); // ∂/∂μ0
    Ok((lml, grad))
}

/// Like [`log_marginal_likelihood`] but escalating the jitter ×10 (up to
/// [`JITTER_CEIL`]) on factorization failure. Returns the jitter that worked.
pub fn lml_escalating(
    hyper: &GpHyper,
    x: &[Vec<f64>],
    y: &[f64],
) -> Result<(f64, Vec<f64>, f64), GpError> {
    let mut jitter = hyper.jitter.max(JITTER_FLOOR);
    loop {
        let attempt = GpHyper {
            jitter,
            ..hyper.clone()
        };
        match log_marginal_likelihood(&attempt, x, y) {
            Ok((l, g)) => return Ok((l, g, jitter)),
            Err(GpError::NotPositiveDefinite(_)) if jitter < JITTER_CEIL => {
                jitter = (jitter * 10.0).min(JITTER_CEIL);
            }
            Err(GpError::NotPositiveDefinite(_)) => {
                return Err(GpError::NotPositiveDefinite(jitter))
            }
            Err(e) => return Err(e),
        }
    }
}

// --- fitted model -------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct GpModel {
    /// Hyperparameters in standardized-output units.
    pub hyper: GpHyper,
    pub x: Vec<Vec<f64>>,
    /// Training outputs in original units.
    pub y: Vec<f64>,
    pub y_mean: f64,
    pub y_std: f64,
    /// Log marginal likelihood at the fitted hyperparameters (standardized).
    pub evidence: f64,
    chol: Vec<f64>,
    alpha: Vec<f64>,
}

/// Standardize to zero mean and unit population variance; a (near-)constant
/// vector keeps scale 1 so the transform stays invertible.
pub fn standardize(y: &[f64]) -> (Vec<f64>, f64, f64) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
    (y.iter().map(|v| (v - mean) / std).collect(), mean, std)
}

pub fn unstandardize(ys: &[f64], mean: f64, std: f64) -> Vec<f64> {
    ys.iter().map(|v| v * std + mean).collect()
}

impl GpModel {
    /// Assemble a model at fixed hyperparameters. `y_mean`/`y_std` define the
    /// standardization the hyperparameters are expressed in (0/1 = raw).
    pub fn with_hyper(
        hyper: GpHyper,
        x: Vec<Vec<f64>>,
        y: Vec<f64>,
        y_mean: f64,
        y_std: f64,
    ) -> Result<GpModel, GpError> {
        let n = x.len();
        if n < 1 {
            return Err(GpError::TooFewPoints { need: 1, got: 0 });
        }
        if y.len() != n {
            return Err(GpError::DimensionMismatch {
                expected: n,
                got: y.len(),
            });
        }
        for row in &x {
            if row.len() != hyper.omega.len() {
                return Err(GpError::DimensionMismatch {
                    expected: hyper.omega.len(),
                    got: row.len(),
                });
            }
        }
        let c = kernel_matrix(&x, &hyper);
        let mut jitter = hyper.jitter.max(JITTER_FLOOR);
        let chol = loop {
            match chol_of(&c, n, jitter) {
                Ok(l) => break l,
                Err(()) if jitter < JITTER_CEIL => jitter = (jitter * 10.0).min(JITTER_CEIL),
                Err(()) => return Err(GpError::NotPositiveDefinite(jitter)),
            }
        };
        let ys: Vec<f64> = y.iter().map(|v| (v - y_mean) / y_std).collect();
        let r: Vec<f64> = ys.iter().map(|v| v - hyper.mu0).collect();
        let alpha = chol_solve(&chol, n, &r);
        let hyper = GpHyper { jitter, ..hyper };
        let (evidence, _) = log_marginal_likelihood(&hyper, &x, &ys)?;
        Ok(GpModel {
            hyper,
            x,
            y,
            y_mean,
            y_std,
            evidence,
            chol,
            alpha,
        })
    }

    pub fn dim(&self) -> usize {
        self.hyper.omega.len()
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Posterior mean and variance (original units) at each site.
    pub fn predict(&self, sites: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
        let n = self.len();
        let mut mu = Vec::with_capacity(sites.len());
        let mut s2 = Vec::with_capacity(sites.len());
        for s in sites {
            let k0: Vec<f64> = self.x.iter().map(|xi| kernel(xi, s, &self.hyper)).collect();
            let mean_s = self.hyper.mu0
                + k0.iter().zip(&self.alpha).map(|(a, b)| a * b).sum::<f64>();
            let mut v = k0.clone();
            solve_lower(&self.chol, n, &mut v);
            let reduction: f64 = v.iter().map(|t| t * t).sum();
            let var_s = (self.hyper.sigma2 - reduction + self.hyper.jitter).max(0.0);
            mu.push(mean_s * self.y_std + self.y_mean);
            s2.push(var_s * self.y_std * self.y_std);
        }
        (mu, s2)
    }

    /// New model with extra observations appended, same hyperparameters and
    /// standardization (used by the believer strategy during batch proposal).
    pub fn augmented(&self, x_new: &[Vec<f64>], y_new: &[f64]) -> Result<GpModel, GpError> {
        let mut x = self.x.clone();
        x.extend(x_new.iter().cloned());
        let mut y = self.y.clone();
        y.extend_from_slice(y_new);
        GpModel::with_hyper(self.hyper.clone(), x, y, self.y_mean, self.y_std)
    }

    /// Posterior covariance matrix over sites, standardized units.
    fn posterior_cov(&self, sites: &[Vec<f64>]) -> Vec<f64> {
        let n = self.len();
        let m = sites.len();
        // V = L⁻¹·K(X, sites), column per site.
        let mut v = vec![vec![0.0; n]; m];
        for (col, s) in sites.iter().enumerate() {
            let mut k0: Vec<f64> = self.x.iter().map(|xi| kernel(xi, s, &self.hyper)).collect();
            solve_lower(&self.chol, n, &mut k0);
            v[col] = k0;
        }
        let mut cov = vec![0.0; m * m];
        for a in 0..m {
            for b in a..m {
                let prior = kernel(&sites[a], &sites[b], &self.hyper);
                let red: f64 = v[a].iter().zip(&v[b]).map(|(p, q)| p * q).sum();
                let c = prior - red;
                cov[a * m + b] = c;
                cov[b * m + a] = c;
            }
        }
        cov
    }
}

/// Fit by multi-start gradient ascent on the log evidence. Restart starts are
/// seeded per restart index, so the starts for `restarts = r` are a prefix of
/// those for any larger count.
pub fn fit(x: &[Vec<f64>], y: &[f64], restarts: usize, seed: u64) -> Result<GpModel, GpError> {
    let n = x.len();
    if n < 2 {
        return Err(GpError::TooFewPoints { need: 2, got: n });
    }
    if y.len() != n {
        return Err(GpError::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    let d = x[0].len();
    let (ys, y_mean, y_std) = standardize(y);

    let clamp_theta = |theta: &mut [f64]| {
        for t in theta[..d].iter_mut() {
            *t = t.clamp(OMEGA_RANGE.0, OMEGA_RANGE.1);
        }
        theta[d] = theta[d].clamp(-20.0, 20.0);
        theta[d + 1] = theta[d + 1].clamp(-1e6, 1e6);
    };
    let hyper_of = |theta: &[f64], jitter: f64| GpHyper {
        omega: theta[..d].to_vec(),
        sigma2: theta[d].exp(),
        mu0: theta[d + 1],
        jitter,
    };

    let mut best: Option<(f64, GpHyper)> = None;
    for restart in 0..restarts.max(1) {
        let mut rng = Xoshiro256::seed_from_u64(mix_key(seed, &[restart as u64]));
        let mut theta: Vec<f64> = (0..d).map(|_| rng.range(-2.0, 2.0)).collect();
        theta.push(0.0); // log σ² = 0
        theta.push(0.0); // μ0 = 0 (standardized)

        let (mut l, mut g, jitter) = match lml_escalating(&hyper_of(&theta, JITTER_FLOOR), x, &ys)
        {
            Ok(v) => v,
            Err(_) => continue,
        };
        for _ in 0..100 {
            let gnorm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if gnorm < 1e-8 {
                break;
            }
            let mut step = 1.0 / (1.0 + gnorm);
            let mut advanced = false;
            while step >= 1e-14 {
                let mut cand: Vec<f64> = theta
                    .iter()
                    .zip(&g)
                    .map(|(t, gi)| t + step * gi)
                    .collect();
                clamp_theta(&mut cand);
                match log_marginal_likelihood(&hyper_of(&cand, jitter), x, &ys) {
                    Ok((lc, gc)) if lc > l + 1e-12 => {
                        theta = cand;
                        l = lc;
                        g = gc;
                        advanced = true;
                        break;
                    }
                    _ => step *= 0.5,
                }
            }
            if !advanced {
                break;
            }
        }
        if best.as_ref().is_none_or(|(bl, _)| l > *bl) {
            best = Some((l, hyper_of(&theta, jitter)));
        }
    }
    let (_, hyper) = best.ok_or(GpError::AllRestartsFailed)?;
    GpModel::with_hyper(hyper, x.to_vec(), y.to_vec(), y_mean, y_std)
}

/// Joint posterior realizations over candidate sites: `N` draws, each a
/// per-objective vector of values at every candidate (original units).
/// Objectives are drawn independently of one another.
pub fn sample_posterior(
    models: &[&GpModel],
    sites: &[Vec<f64>],
    n_draws: usize,
    seed: u64,
) -> Result<Vec<Vec<Vec<f64>>>, GpError> {
    let m = sites.len();
    for mdl in models {
        if mdl.dim() != models[0].dim() {
            return Err(GpError::DimensionMismatch {
                expected: models[0].dim(),
                got: mdl.dim(),
            });
        }
    }
    // Per objective: posterior mean and covariance factor, standardized.
    struct Prep {
        mean: Vec<f64>,
        factor: Vec<f64>,
        y_mean: f64,
        y_std: f64,
    }
    let mut preps = Vec::with_capacity(models.len());
    for mdl in models {
        let (mu, _) = mdl.predict(sites);
        let mean: Vec<f64> = mu.iter().map(|v| (v - mdl.y_mean) / mdl.y_std).collect();
        let cov = mdl.posterior_cov(sites);
        let mut jitter = mdl.hyper.jitter.max(JITTER_FLOOR);
        let factor = loop {
            match chol_of(&cov, m, jitter) {
                Ok(l) => break l,
                Err(()) if jitter < JITTER_CEIL => jitter = (jitter * 10.0).min(JITTER_CEIL),
                Err(()) => return Err(GpError::NotPositiveDefinite(jitter)),
            }
        };
        preps.push(Prep {
            mean,
            factor,
            y_mean: mdl.y_mean,
            y_std: mdl.y_std,
        });
    }
    let mut streams: Vec<Xoshiro256> = (0..models.len())
        .map(|q| Xoshiro256::seed_from_u64(mix_key(seed, &[0x5350, q as u64])))
        .collect();
    let mut draws = Vec::with_capacity(n_draws);
    for _ in 0..n_draws {
        let mut per_obj = Vec::with_capacity(models.len());
        for (q, p) in preps.iter().enumerate() {
            let z: Vec<f64> = (0..m).map(|_| streams[q].normal()).collect();
            let mut vals = Vec::with_capacity(m);
            for row in 0..m {
                let mut v = p.mean[row];
                for (zk, fk) in z[..=row].iter().zip(&p.factor[row * m..]) {
                    v += fk * zk;
                }
                vals.push(v * p.y_std + p.y_mean);
            }
            per_obj.push(vals);
        }
        draws.push(per_obj);
    }
    Ok(draws)
}

// --- persistence ---------------------------------------------------------------

pub fn hyper_text(model: &GpModel) -> String {
    let mut out = String::from("# gp hyperparameters (standardized-output units)\n");
    for (j, w) in model.hyper.omega.iter().enumerate() {
        out.push_str(&format!("omega_{j}={w}\n"));
    }
    out.push_str(&format!("sigma2={}\n", model.hyper.sigma2));
    out.push_str(&format!("mu0={}\n", model.hyper.mu0));
    out.push_str(&format!("jitter={}\n", model.hyper.jitter));
    out.push_str(&format!("y_mean={}\n", model.y_mean));
    out.push_str(&format!("y_std={}\n", model.y_std));
    out.push_str(&format!("evidence={}\n", model.evidence));
    out.push_str(&format!("n={}\n", model.len()));
    out
}

const LFGP_MAGIC: &[u8; 4] = b"LFGP";

/// Binary dump: magic, u16 version, u32 n, u32 d, hyperparameters, the
/// standardization constants, then X row-major and Y. The factorization is
/// recomputed on load.
pub fn gp_bytes(model: &GpModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(LFGP_MAGIC);
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&(model.len() as u32).to_le_bytes());
    out.extend_from_slice(&(model.dim() as u32).to_le_bytes());
    let push = |v: f64, out: &mut Vec<u8>| out.extend_from_slice(&v.to_le_bytes());
    for w in &model.hyper.omega {
        push(*w, &mut out);
    }
    push(model.hyper.sigma2, &mut out);
    push(model.hyper.mu0, &mut out);
    push(model.hyper.jitter, &mut out);
    push(model.y_mean, &mut out);
    push(model.y_std, &mut out);
    for row in &model.x {
        for v in row {
            push(*v, &mut out);
        }
    }
    for v in &model.y {
        push(*v, &mut out);
    }
    out
}

pub fn gp_from_bytes(bytes: &[u8]) -> Result<GpModel, GpError> {
    let bad = |m: &str| GpError::Format(m.into());
    if bytes.len() < 14 || &bytes[0..4] != LFGP_MAGIC {
        return Err(bad("bad LFGP magic"));
    }
    if u16::from_le_bytes([bytes[4], bytes[5]]) != 1 {
        return Err(bad("unsupported version"));
    }
    let n = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
    let need = 14 + 8 * (d + 5 + n * d + n);
    if bytes.len() != need {
        return Err(bad("wrong length"));
    }
    let mut at = 14;
    let mut next = || -> f64 {
        let v = f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
        at += 8;
        v
    };
    let omega: Vec<f64> = (0..d).map(|_| next()).collect();
    let sigma2 = next();
    let mu0 = next();
    let jitter = next();
    let y_mean = next();
    let y_std = next();
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| next()).collect()).collect();
    let y: Vec<f64> = (0..n).map(|_| next()).collect();
    if !sigma2.is_finite() || sigma2 <= 0.0 || !jitter.is_finite() || jitter <= 0.0 || y_std <= 0.0
    {
        return Err(bad("invalid hyperparameters"));
    }
    GpModel::with_hyper(
        GpHyper {
            omega,
            sigma2,
            mu0,
            jitter,
        },
        x,
        y,
        y_mean,
        y_std,
    )
}

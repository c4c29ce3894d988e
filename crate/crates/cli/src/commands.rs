//! The seven pipeline commands and their artifact plumbing.
//!
//! Every artifact carries the config hash — as a `# config=…` comment line
//! in CSVs, an XML comment in SVGs, a `tEXt` entry in PNGs, a manifest
//! key in the corpus, and a sidecar line in the model checkpoint. Commands
//! refuse upstream artifacts whose hash differs from the current config
//! unless `--force` is given, and report missing upstream artifacts by
//! naming the command that produces them.

use crate::config::PipelineConfig;
use latentflow::archetypes::{sample_design_table, spec_of, ArchetypeId};
use latentflow::infogan::{self, InfoGanError, InfoGanModel, TrainConfig};
use latentflow::interpret::{
    histogram_csv, marginal_histograms, marginal_svg, pareto_probability, probability_csv,
    InterpretError, MarginalHistogram,
};
use latentflow::mobo::{self, MoboError, OptimizationHistory, OptimizerConfig, LATENT_RADIUS};
use latentflow::raster::{self, Corpus, RasterError};
use latentflow::rng::mix_key;
use latentflow::sobol::sobol_ball_doe;
use latentflow::tsne::{self, Embedding2D, TsneError};
use latentflow::{flow, gp, svg};
use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};

const FRONTIER_TITLE: &str = "Pareto frontier";
const FRONTIER_X: &str = "flow nonuniformity (CV)";
const FRONTIER_Y: &str = "hydraulic resistance";

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or refused hash mismatch (exit 2).
    Config(String),
    /// A required upstream artifact does not exist (exit 3).
    Upstream { what: String, producer: &'static str },
    /// Numeric or runtime failure inside the pipeline (exit 4).
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Upstream { .. } => 3,
            CliError::Numeric(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Upstream { what, producer } => {
                write!(f, "missing upstream artifact {what}: run `latentflow {producer}` first")
            }
            CliError::Numeric(m) => write!(f, "{m}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Numeric(format!("io error: {e}"))
    }
}

/// Resolved invocation context: validated config, its hash, the output
/// directory, and the `--force` flag.
pub struct Ctx {
    pub cfg: PipelineConfig,
    pub hash: String,
    pub out: PathBuf,
    pub force: bool,
}

impl Ctx {
    fn corpus_dir(&self) -> PathBuf {
        self.out.join("corpus")
    }
    fn model_dir(&self) -> PathBuf {
        self.out.join("model")
    }
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
    fn marginal_csv(&self, dim: usize) -> PathBuf {
        self.path(&format!("marginal_x{dim}.csv"))
    }
    fn marginal_svg_path(&self, dim: usize) -> PathBuf {
        self.path(&format!("marginal_x{dim}.svg"))
    }

    /// The provenance comment embedded in SVG documents.
    fn comment(&self) -> String {
        format!("config={}", self.hash)
    }
    /// The provenance line prepended to CSV artifacts.
    fn stamp(&self) -> String {
        format!("# config={}\n", self.hash)
    }

    fn check_hash(
        &self,
        found: Option<&str>,
        what: &str,
        producer: &'static str,
    ) -> Result<(), CliError> {
        if self.force {
            return Ok(());
        }
        match found {
            Some(h) if h == self.hash => Ok(()),
            Some(h) => Err(CliError::Config(format!(
                "{what} carries config hash {h} but the current config hashes to {}; \
                 rerun `latentflow {producer}` or pass --force",
                self.hash
            ))),
            None => Err(CliError::Config(format!(
                "{what} carries no config hash; rerun `latentflow {producer}` or pass --force"
            ))),
        }
    }
}

fn upstream(path: &Path, producer: &'static str) -> CliError {
    CliError::Upstream {
        what: path.display().to_string(),
        producer,
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

/// A stamped CSV split into `#`-comment payloads and data lines, with the
/// hash already verified.
struct Stamped {
    comments: Vec<String>,
    lines: Vec<String>,
}

fn read_stamped(ctx: &Ctx, path: &Path, producer: &'static str) -> Result<Stamped, CliError> {
    if !path.exists() {
        return Err(upstream(path, producer));
    }
    let text = std::fs::read_to_string(path)?;
    let mut comments = Vec::new();
    let mut lines = Vec::new();
    for l in text.lines() {
        if let Some(c) = l.strip_prefix('#') {
            comments.push(c.trim().to_string());
        } else if !l.trim().is_empty() {
            lines.push(l.to_string());
        }
    }
    let found = comments.iter().find_map(|c| c.strip_prefix("config="));
    ctx.check_hash(found, &path.display().to_string(), producer)?;
    Ok(Stamped { comments, lines })
}

// --- error mapping ----------------------------------------------------------

fn raster_err(e: RasterError) -> CliError {
    match e {
        RasterError::ResolutionTooSmall(_) => CliError::Config(e.to_string()),
        _ => CliError::Numeric(format!("corpus synthesis failed: {e}")),
    }
}

fn gan_err(e: InfoGanError) -> CliError {
    match e {
        InfoGanError::BadConfig(_) => CliError::Config(e.to_string()),
        _ => CliError::Numeric(e.to_string()),
    }
}

fn tsne_err(e: TsneError) -> CliError {
    match e {
        TsneError::TooFewPoints { .. } | TsneError::BadPerplexity(_) => {
            CliError::Config(e.to_string())
        }
        _ => CliError::Numeric(e.to_string()),
    }
}

fn interpret_err(e: InterpretError) -> CliError {
    match e {
        InterpretError::TooFewCandidates(_)
        | InterpretError::NoDraws
        | InterpretError::BadBins(_) => CliError::Config(e.to_string()),
        _ => CliError::Numeric(e.to_string()),
    }
}

// --- checked loads ----------------------------------------------------------

fn load_corpus_checked(ctx: &Ctx) -> Result<Corpus, CliError> {
    let dir = ctx.corpus_dir();
    let raster_file = dir.join(raster::CORPUS_RASTER_FILE);
    if !raster_file.exists() {
        return Err(upstream(&raster_file, "synth"));
    }
    let corpus = load_corpus(&dir)?;
    let found = corpus
        .manifest
        .extra
        .iter()
        .find(|(k, _)| k == "config")
        .map(|(_, v)| v.as_str());
    ctx.check_hash(found, &dir.display().to_string(), "synth")?;
    Ok(corpus)
}

fn load_corpus(dir: &Path) -> Result<Corpus, CliError> {
    raster::load_corpus(dir)
        .map_err(|e| CliError::Numeric(format!("cannot load corpus {}: {e}", dir.display())))
}

fn load_model_checked(ctx: &Ctx) -> Result<InfoGanModel, CliError> {
    let dir = ctx.model_dir();
    let sidecar = dir.join(infogan::SIDECAR);
    if !sidecar.exists() {
        return Err(upstream(&sidecar, "train"));
    }
    let text = std::fs::read_to_string(&sidecar)?;
    let found = text.lines().find_map(|l| {
        let (k, v) = l.split_once('=')?;
        (k.trim() == "config").then(|| v.trim())
    });
    ctx.check_hash(found, &sidecar.display().to_string(), "train")?;
    infogan::load_model(&dir)
        .map_err(|e| CliError::Numeric(format!("cannot load model {}: {e}", dir.display())))
}

// --- synth ------------------------------------------------------------------

pub fn synth(ctx: &Ctx) -> Result<(), CliError> {
    let c = &ctx.cfg.corpus;
    let mut tables = Vec::new();
    for (i, id) in ArchetypeId::ALL.into_iter().enumerate() {
        let seed = mix_key(c.table_seed, &[i as u64]);
        let table = sample_design_table(&spec_of(id), c.rows_per_archetype, seed)
            .map_err(|e| CliError::Numeric(format!("design table {}: {e}", id.as_str())))?;
        tables.push(table);
    }
    let mut corpus =
        raster::build_corpus(&tables, c.plan, c.resolution, c.seed).map_err(raster_err)?;
    corpus
        .manifest
        .extra
        .push(("config".to_string(), ctx.hash.clone()));
    let dir = ctx.corpus_dir();
    raster::write_corpus(&dir, &corpus).map_err(raster_err)?;
    println!(
        "wrote {} ({} designs at {}x{}, plan {}, {} attempts skipped)",
        dir.display(),
        corpus.manifest.design_count,
        c.resolution,
        c.resolution,
        c.plan.label(),
        corpus.manifest.skipped,
    );
    Ok(())
}

// --- train ------------------------------------------------------------------

pub fn train(ctx: &Ctx) -> Result<(), CliError> {
    let corpus = load_corpus_checked(ctx)?;
    let g = &ctx.cfg.gan;
    let tc = TrainConfig {
        latent_dim: g.latent_dim,
        epochs: g.epochs,
        batch_size: g.batch_size,
        learning_rate: g.learning_rate,
        lambda_info: g.lambda_info,
        seed: g.seed,
    };
    let history_path = ctx.path("train_history.csv");
    let (model, history) = match infogan::train(&corpus.designs, &tc) {
        Ok(pair) => pair,
        Err(InfoGanError::Diverged {
            epoch,
            what,
            history,
        }) => {
            write_text(
                &history_path,
                &format!("{}{}", ctx.stamp(), infogan::history_csv(&history)),
            )?;
            return Err(CliError::Numeric(format!(
                "training diverged at epoch {epoch} ({what}); partial history in {}",
                history_path.display()
            )));
        }
        Err(e) => return Err(gan_err(e)),
    };

    let dir = ctx.model_dir();
    infogan::save_model(&model, &dir).map_err(gan_err)?;
    let sidecar = dir.join(infogan::SIDECAR);
    let mut text = std::fs::read_to_string(&sidecar)?;
    text.push_str(&format!("config = {}\n", ctx.hash));
    std::fs::write(&sidecar, text)?;
    write_text(
        &history_path,
        &format!("{}{}", ctx.stamp(), infogan::history_csv(&history)),
    )?;

    if let Some(last) = history.epochs.last() {
        println!(
            "trained {} epochs on {} designs: d_loss {:.4}, g_loss {:.4}, info {:.4}, probe rmse {:.2}",
            model.trained_epochs,
            corpus.designs.len(),
            last.d_loss,
            last.g_loss,
            last.info_loss,
            last.probe_rmse,
        );
    }
    if !history.mode_collapse_epochs.is_empty() {
        println!(
            "warning: low generator batch variance (possible mode collapse) in {} of {} epochs",
            history.mode_collapse_epochs.len(),
            g.epochs,
        );
    }
    println!("wrote {} and {}", dir.display(), history_path.display());
    Ok(())
}

// --- viz --------------------------------------------------------------------

pub fn viz(ctx: &Ctx) -> Result<(), CliError> {
    let corpus = load_corpus_checked(ctx)?;
    let model = load_model_checked(ctx)?;
    let latents = infogan::encode(&model, &corpus.designs).map_err(gan_err)?;
    let labels: Vec<ArchetypeId> = corpus
        .designs
        .iter()
        .map(|d| d.provenance.left_archetype)
        .collect();
    let v = &ctx.cfg.viz;
    let emb =
        tsne::tsne_embed(&latents, &labels, v.perplexity, v.iterations, v.seed).map_err(tsne_err)?;

    let csv_path = ctx.path("embedding.csv");
    write_text(
        &csv_path,
        &format!("{}{}", ctx.stamp(), tsne::embedding_csv(&emb)),
    )?;
    let svg_path = ctx.path("embedding.svg");
    let doc = tsne::scatter_document(&emb, Some(&ctx.comment())).map_err(tsne_err)?;
    write_text(&svg_path, &doc)?;
    println!(
        "embedded {} designs (final KL {:.4}); wrote {} and {}",
        emb.points.len(),
        emb.kl_history.last().copied().unwrap_or(f64::NAN),
        csv_path.display(),
        svg_path.display(),
    );
    Ok(())
}

// --- doe --------------------------------------------------------------------

pub fn doe(ctx: &Ctx) -> Result<(), CliError> {
    let model = load_model_checked(ctx)?;
    let m = &ctx.cfg.mobo;
    let points = sobol_ball_doe(model.latent_dim, m.doe_size, LATENT_RADIUS, m.seed)
        .map_err(|e| CliError::Config(e.to_string()))?;

    let mut csv = ctx.stamp();
    let d = model.latent_dim;
    csv.push_str(
        &(0..d)
            .map(|j| format!("x{j}"))
            .collect::<Vec<_>>()
            .join(","),
    );
    csv.push('\n');
    for p in &points {
        let row: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    let csv_path = ctx.path("doe.csv");
    write_text(&csv_path, &csv)?;

    let batch = infogan::generate(&model, &points).map_err(gan_err)?;
    let columns = (points.len() as f64).sqrt().ceil().max(1.0) as usize;
    let png = raster::png_sheet(
        &batch.rasters,
        columns,
        &[("config".to_string(), ctx.hash.clone())],
    )
    .map_err(raster_err)?;
    let png_path = ctx.path("doe_sheet.png");
    write_bytes(&png_path, &png)?;
    println!(
        "wrote {} and {} ({} latent points, {} columns)",
        csv_path.display(),
        png_path.display(),
        points.len(),
        columns,
    );
    Ok(())
}

// --- optimize ---------------------------------------------------------------

pub fn optimize(ctx: &Ctx) -> Result<(), CliError> {
    let model = load_model_checked(ctx)?;
    let m = &ctx.cfg.mobo;
    let ocfg = OptimizerConfig {
        latent_dim: model.latent_dim,
        doe_size: m.doe_size,
        batches: m.batches,
        batch_size: m.batch_size,
        mc_draws: m.mc_draws,
        restarts: m.restarts,
        gp_restarts: m.gp_restarts,
        radius: LATENT_RADIUS,
        seed: m.seed,
    };

    let failures = std::cell::Cell::new(0usize);
    let evaluator = |pts: &[Vec<f64>]| -> Vec<Option<Vec<f64>>> {
        let batch = match infogan::generate(&model, pts) {
            Ok(b) => b,
            Err(_) => {
                failures.set(failures.get() + pts.len());
                return vec![None; pts.len()];
            }
        };
        batch
            .rasters
            .iter()
            .map(|r| match flow::solve_flow(r).and_then(|f| flow::objectives(&f, r)) {
                Ok((f1, f2)) => Some(vec![f1, f2]),
                Err(_) => {
                    failures.set(failures.get() + 1);
                    None
                }
            })
            .collect()
    };

    let history = match mobo::run_loop(evaluator, &ocfg) {
        Ok(h) => h,
        Err(MoboError::BatchEvaluationFailed { batch, partial }) => {
            write_opt_artifacts(ctx, &partial)?;
            return Err(CliError::Numeric(format!(
                "every evaluation in batch {batch} failed; partial history in {}",
                ctx.path("history.csv").display()
            )));
        }
        Err(e) => return Err(CliError::Numeric(format!("optimization failed: {e}"))),
    };

    write_opt_artifacts(ctx, &history)?;
    if failures.get() > 0 {
        println!(
            "note: {} of {} evaluations failed (no feasible flow) and were excluded from fitting",
            failures.get(),
            history.records.len(),
        );
    }
    for (b, hv) in history.batch_hypervolume.iter().enumerate() {
        let tag = if b == 0 {
            "after design".to_string()
        } else {
            format!("after batch {b}")
        };
        let conv = if b > 0 && history.batch_converged[b - 1] {
            " (proposals converged)"
        } else {
            ""
        };
        println!("{tag}: hypervolume {hv:.6}{conv}");
    }
    println!(
        "frontier holds {} designs; wrote history.csv, pareto.csv, acquisition.csv, frontier.svg in {}",
        history.archive.entries.len(),
        ctx.out.display(),
    );
    Ok(())
}

fn write_opt_artifacts(ctx: &Ctx, h: &OptimizationHistory) -> Result<(), CliError> {
    write_text(
        &ctx.path("history.csv"),
        &format!("{}{}", ctx.stamp(), mobo::history_csv(h)),
    )?;
    let reference: Vec<String> = h.reference.iter().map(|v| format!("{v}")).collect();
    write_text(
        &ctx.path("pareto.csv"),
        &format!(
            "{}# reference={}\n{}",
            ctx.stamp(),
            reference.join(","),
            mobo::pareto_csv(h)
        ),
    )?;
    write_text(
        &ctx.path("acquisition.csv"),
        &format!("{}{}", ctx.stamp(), mobo::acquisition_csv(h)),
    )?;

    let front: Vec<(f64, f64)> = h
        .archive
        .entries
        .iter()
        .map(|e| (e.objectives[0], e.objectives[1]))
        .collect();
    let on_front: HashSet<usize> = h.archive.entries.iter().map(|e| e.eval_id).collect();
    let dominated: Vec<(f64, f64)> = h
        .records
        .iter()
        .filter(|r| !on_front.contains(&r.eval_id))
        .filter_map(|r| r.objectives.as_ref().map(|y| (y[0], y[1])))
        .collect();
    let reference_pt = (h.reference.len() == 2).then(|| (h.reference[0], h.reference[1]));
    let doc = svg::frontier_svg(
        &front,
        &dominated,
        reference_pt,
        FRONTIER_TITLE,
        FRONTIER_X,
        FRONTIER_Y,
        Some(&ctx.comment()),
    );
    write_text(&ctx.path("frontier.svg"), &doc)?;
    Ok(())
}

// --- interpret --------------------------------------------------------------

/// Successful evaluations parsed back out of history.csv.
struct HistoryRows {
    latent_dim: usize,
    xs: Vec<Vec<f64>>,
    ys: Vec<Vec<f64>>, // per objective
}

fn parse_history(stamped: &Stamped) -> Result<HistoryRows, CliError> {
    let bad = |m: String| CliError::Numeric(format!("history.csv: {m}"));
    let Some(header) = stamped.lines.first() else {
        return Err(bad("empty file".to_string()));
    };
    let cols: Vec<&str> = header.split(',').collect();
    let d = cols.iter().filter(|c| c.starts_with('x')).count();
    let q = cols.iter().filter(|c| c.starts_with('f')).count();
    if d == 0 || q == 0 || cols.len() != 3 + d + q {
        return Err(bad(format!("unrecognized header {header:?}")));
    }
    let mut rows = HistoryRows {
        latent_dim: d,
        xs: Vec::new(),
        ys: vec![Vec::new(); q],
    };
    for line in &stamped.lines[1..] {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(bad(format!("row has {} fields, expected {}", fields.len(), cols.len())));
        }
        if fields[2 + d..2 + d + q].iter().any(|f| f.is_empty()) {
            continue; // failed evaluation: excluded from fitting
        }
        let parse = |s: &str| -> Result<f64, CliError> {
            s.parse().map_err(|_| bad(format!("bad number {s:?}")))
        };
        let x: Vec<f64> = fields[2..2 + d]
            .iter()
            .map(|s| parse(s))
            .collect::<Result<_, _>>()?;
        rows.xs.push(x);
        for k in 0..q {
            rows.ys[k].push(parse(fields[2 + d + k])?);
        }
    }
    Ok(rows)
}

pub fn interpret(ctx: &Ctx) -> Result<(), CliError> {
    let stamped = read_stamped(ctx, &ctx.path("history.csv"), "optimize")?;
    let rows = parse_history(&stamped)?;
    if rows.xs.len() < 2 {
        return Err(CliError::Numeric(format!(
            "history.csv holds {} successful evaluations; need at least 2 to fit emulators",
            rows.xs.len()
        )));
    }

    let it = &ctx.cfg.interpret;
    let mut models = Vec::new();
    for (k, y) in rows.ys.iter().enumerate() {
        let seed = mix_key(it.seed, &[0x4750, k as u64]);
        let model = gp::fit(&rows.xs, y, ctx.cfg.mobo.gp_restarts, seed)
            .map_err(|e| CliError::Numeric(format!("emulator fit for objective {k}: {e}")))?;
        models.push(model);
    }
    let refs: Vec<&gp::GpModel> = models.iter().collect();

    let candidates = sobol_ball_doe(rows.latent_dim, it.candidates, LATENT_RADIUS, it.seed)
        .map_err(|e| CliError::Config(e.to_string()))?;
    let pp =
        pareto_probability(&refs, &candidates, it.draws, it.seed).map_err(interpret_err)?;

    let prob_path = ctx.path("probabilities.csv");
    write_text(&prob_path, &format!("{}{}", ctx.stamp(), probability_csv(&pp)))?;

    let hists = marginal_histograms(&pp, it.bins).map_err(interpret_err)?;
    for h in &hists {
        let mut csv = ctx.stamp();
        if h.uniform_fallback {
            csv.push_str("# uniform_fallback\n");
        }
        csv.push_str(&histogram_csv(h));
        write_text(&ctx.marginal_csv(h.dim), &csv)?;
        write_text(&ctx.marginal_svg_path(h.dim), &marginal_svg(h, Some(&ctx.comment())))?;
    }
    if hists.iter().any(|h| h.uniform_fallback) {
        println!(
            "warning: every candidate had zero Pareto probability; marginals fall back to uniform coverage"
        );
    }

    let best = pp
        .probs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap());
    if let Some((i, p)) = best {
        let coords: Vec<String> = pp.candidates[i].iter().map(|v| format!("{v:.3}")).collect();
        println!("highest Pareto probability {:.3} at ({})", p, coords.join(", "));
    }
    println!(
        "wrote {} and {} marginal histograms over {} candidates ({} draws)",
        prob_path.display(),
        hists.len(),
        pp.candidates.len(),
        pp.draws,
    );
    Ok(())
}

// --- plot -------------------------------------------------------------------

fn parse_embedding(stamped: &Stamped) -> Result<Embedding2D, CliError> {
    let bad = |m: String| CliError::Numeric(format!("embedding.csv: {m}"));
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for line in stamped.lines.iter().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let [x, y, label] = fields[..] else {
            return Err(bad(format!("expected x,y,label row, got {line:?}")));
        };
        let px: f64 = x.parse().map_err(|_| bad(format!("bad number {x:?}")))?;
        let py: f64 = y.parse().map_err(|_| bad(format!("bad number {y:?}")))?;
        let id = ArchetypeId::parse(label).ok_or_else(|| bad(format!("unknown label {label:?}")))?;
        points.push([px, py]);
        labels.push(id);
    }
    Ok(Embedding2D {
        points,
        labels,
        kl_history: Vec::new(),
    })
}

fn plot_frontier(ctx: &Ctx) -> Result<(), CliError> {
    let pareto = read_stamped(ctx, &ctx.path("pareto.csv"), "optimize")?;
    let history = read_stamped(ctx, &ctx.path("history.csv"), "optimize")?;
    let bad = |m: String| CliError::Numeric(format!("pareto.csv: {m}"));

    let reference = pareto
        .comments
        .iter()
        .find_map(|c| c.strip_prefix("reference="))
        .map(|r| -> Result<(f64, f64), CliError> {
            let vals: Vec<f64> = r
                .split(',')
                .map(|s| s.parse().map_err(|_| bad(format!("bad reference {r:?}"))))
                .collect::<Result<_, _>>()?;
            if vals.len() != 2 {
                return Err(bad(format!("reference has {} values, expected 2", vals.len())));
            }
            Ok((vals[0], vals[1]))
        })
        .transpose()?;

    // Column positions of the two objectives in each file's header.
    let objective_cols = |stamped: &Stamped, file: &str| -> Result<(usize, usize), CliError> {
        let header = stamped
            .lines
            .first()
            .ok_or_else(|| CliError::Numeric(format!("{file}: empty file")))?;
        let cols: Vec<&str> = header.split(',').collect();
        let find = |name: &str| {
            cols.iter()
                .position(|c| *c == name)
                .ok_or_else(|| CliError::Numeric(format!("{file}: missing column {name}")))
        };
        Ok((find("f0")?, find("f1")?))
    };

    let (pf0, pf1) = objective_cols(&pareto, "pareto.csv")?;
    let mut front = Vec::new();
    let mut front_ids: HashSet<String> = HashSet::new();
    for line in pareto.lines.iter().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let f0: f64 = fields[pf0].parse().map_err(|_| bad(format!("bad row {line:?}")))?;
        let f1: f64 = fields[pf1].parse().map_err(|_| bad(format!("bad row {line:?}")))?;
        front.push((f0, f1));
        front_ids.insert(fields[0].to_string());
    }

    let (hf0, hf1) = objective_cols(&history, "history.csv")?;
    let mut dominated = Vec::new();
    for line in history.lines.iter().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields[hf0].is_empty() || front_ids.contains(fields[1]) {
            continue;
        }
        let f0: f64 = fields[hf0]
            .parse()
            .map_err(|_| CliError::Numeric(format!("history.csv: bad row {line:?}")))?;
        let f1: f64 = fields[hf1]
            .parse()
            .map_err(|_| CliError::Numeric(format!("history.csv: bad row {line:?}")))?;
        dominated.push((f0, f1));
    }

    let doc = svg::frontier_svg(
        &front,
        &dominated,
        reference,
        FRONTIER_TITLE,
        FRONTIER_X,
        FRONTIER_Y,
        Some(&ctx.comment()),
    );
    write_text(&ctx.path("frontier.svg"), &doc)
}

fn parse_marginal(stamped: &Stamped, dim: usize) -> Result<MarginalHistogram, CliError> {
    let bad = |m: String| CliError::Numeric(format!("marginal_x{dim}.csv: {m}"));
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut masses = Vec::new();
    for line in stamped.lines.iter().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let [bin_lo, bin_hi, mass] = fields[..] else {
            return Err(bad(format!("expected bin_lo,bin_hi,mass row, got {line:?}")));
        };
        let parse = |s: &str| -> Result<f64, CliError> {
            s.parse().map_err(|_| bad(format!("bad number {s:?}")))
        };
        lo = lo.min(parse(bin_lo)?);
        hi = hi.max(parse(bin_hi)?);
        masses.push(parse(mass)?);
    }
    if masses.is_empty() {
        return Err(bad("no bins".to_string()));
    }
    Ok(MarginalHistogram {
        dim,
        lo,
        hi,
        masses,
        uniform_fallback: stamped.comments.iter().any(|c| c == "uniform_fallback"),
    })
}

pub fn plot(ctx: &Ctx) -> Result<(), CliError> {
    let mut rendered: Vec<String> = Vec::new();

    let embedding_csv = ctx.path("embedding.csv");
    if embedding_csv.exists() {
        let stamped = read_stamped(ctx, &embedding_csv, "viz")?;
        let emb = parse_embedding(&stamped)?;
        let doc = tsne::scatter_document(&emb, Some(&ctx.comment())).map_err(tsne_err)?;
        write_text(&ctx.path("embedding.svg"), &doc)?;
        rendered.push("embedding.svg".to_string());
    }

    if ctx.path("pareto.csv").exists() && ctx.path("history.csv").exists() {
        plot_frontier(ctx)?;
        rendered.push("frontier.svg".to_string());
    }

    let mut dim = 0;
    while ctx.marginal_csv(dim).exists() {
        let stamped = read_stamped(ctx, &ctx.marginal_csv(dim), "interpret")?;
        let hist = parse_marginal(&stamped, dim)?;
        write_text(
            &ctx.marginal_svg_path(dim),
            &marginal_svg(&hist, Some(&ctx.comment())),
        )?;
        rendered.push(format!("marginal_x{dim}.svg"));
        dim += 1;
    }

    if rendered.is_empty() {
        return Err(CliError::Upstream {
            what: format!(
                "no plottable CSVs in {} (embedding.csv, history.csv + pareto.csv, or marginal_x*.csv)",
                ctx.out.display()
            ),
            producer: "viz, optimize, or interpret",
        });
    }
    println!("rendered {}", rendered.join(", "));
    Ok(())
}

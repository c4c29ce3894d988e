//! Flat INI pipeline configuration: strict parsing, canonical serialization,
//! and an FNV-1a hash that stamps every artifact the pipeline writes.
//!
//! The format is deliberately plain — `[section]` headers, `key = value`
//! lines, `#`/`;` comments — with a fixed vocabulary. Unknown sections or
//! keys are rejected so typos fail loudly, and every key is mandatory so a
//! config file is a complete record of a run (seeds included; the pipeline
//! never seeds from the clock).

use latentflow::raster::MixingPlan;
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Corpus synthesis: archetype tables, mirror-mix plan, rasterization.
#[derive(Clone, Debug, PartialEq)]
pub struct CorpusSection {
    pub resolution: u32,
    pub rows_per_archetype: usize,
    pub plan: MixingPlan,
    /// Seed for sampling the per-archetype design tables.
    pub table_seed: u64,
    /// Seed for mixing and corpus assembly.
    pub seed: u64,
}

/// Adversarial training of the generator/discriminator/auxiliary triad.
#[derive(Clone, Debug, PartialEq)]
pub struct GanSection {
    pub latent_dim: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub lambda_info: f64,
    pub seed: u64,
}

/// t-SNE embedding of encoded corpus designs.
#[derive(Clone, Debug, PartialEq)]
pub struct VizSection {
    pub perplexity: f64,
    pub iterations: usize,
    pub seed: u64,
}

/// Multi-objective Bayesian optimization over the latent ball.
#[derive(Clone, Debug, PartialEq)]
pub struct MoboSection {
    pub doe_size: usize,
    pub batches: usize,
    pub batch_size: usize,
    pub mc_draws: usize,
    pub restarts: usize,
    pub gp_restarts: usize,
    pub seed: u64,
}

/// Monte-Carlo Pareto probabilities and latent marginals.
#[derive(Clone, Debug, PartialEq)]
pub struct InterpretSection {
    pub candidates: usize,
    pub draws: usize,
    pub bins: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub corpus: CorpusSection,
    pub gan: GanSection,
    pub viz: VizSection,
    pub mobo: MoboSection,
    pub interpret: InterpretSection,
    /// Output directory all commands read from and write to.
    pub out: String,
}

impl PipelineConfig {
    /// Replace every seed with `n`. Applied before hashing so overridden
    /// runs stamp their artifacts with a distinct hash.
    pub fn override_seeds(&mut self, n: u64) {
        self.corpus.table_seed = n;
        self.corpus.seed = n;
        self.gan.seed = n;
        self.viz.seed = n;
        self.mobo.seed = n;
        self.interpret.seed = n;
    }

    /// Canonical text form: fixed section and key order, no comments.
    /// `parse(serialize(c)) == c` for every valid config.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[corpus]");
        let _ = writeln!(s, "resolution = {}", self.corpus.resolution);
        let _ = writeln!(s, "rows_per_archetype = {}", self.corpus.rows_per_archetype);
        let _ = writeln!(s, "plan = {}", self.corpus.plan.label());
        let _ = writeln!(s, "table_seed = {}", self.corpus.table_seed);
        let _ = writeln!(s, "seed = {}", self.corpus.seed);
        let _ = writeln!(s, "\n[gan]");
        let _ = writeln!(s, "latent_dim = {}", self.gan.latent_dim);
        let _ = writeln!(s, "epochs = {}", self.gan.epochs);
        let _ = writeln!(s, "batch_size = {}", self.gan.batch_size);
        let _ = writeln!(s, "learning_rate = {}", self.gan.learning_rate);
        let _ = writeln!(s, "lambda_info = {}", self.gan.lambda_info);
        let _ = writeln!(s, "seed = {}", self.gan.seed);
        let _ = writeln!(s, "\n[viz]");
        let _ = writeln!(s, "perplexity = {}", self.viz.perplexity);
        let _ = writeln!(s, "iterations = {}", self.viz.iterations);
        let _ = writeln!(s, "seed = {}", self.viz.seed);
        let _ = writeln!(s, "\n[mobo]");
        let _ = writeln!(s, "doe_size = {}", self.mobo.doe_size);
        let _ = writeln!(s, "batches = {}", self.mobo.batches);
        let _ = writeln!(s, "batch_size = {}", self.mobo.batch_size);
        let _ = writeln!(s, "mc_draws = {}", self.mobo.mc_draws);
        let _ = writeln!(s, "restarts = {}", self.mobo.restarts);
        let _ = writeln!(s, "gp_restarts = {}", self.mobo.gp_restarts);
        let _ = writeln!(s, "seed = {}", self.mobo.seed);
        let _ = writeln!(s, "\n[interpret]");
        let _ = writeln!(s, "candidates = {}", self.interpret.candidates);
        let _ = writeln!(s, "draws = {}", self.interpret.draws);
        let _ = writeln!(s, "bins = {}", self.interpret.bins);
        let _ = writeln!(s, "seed = {}", self.interpret.seed);
        let _ = writeln!(s, "\n[paths]");
        let _ = writeln!(s, "out = {}", self.out);
        s
    }

    /// FNV-1a 64 over the canonical serialization, as 16 lowercase hex
    /// digits. Cosmetic edits (comments, reordering) do not change it.
    pub fn hash(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.serialize().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }
}

/// Parse the INI text. Every known key is required; unknown sections, keys,
/// duplicates, and malformed values are errors.
pub fn parse(text: &str) -> Result<PipelineConfig, String> {
    let mut kv: BTreeMap<(String, String), String> = BTreeMap::new();
    let mut section = String::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let Some(name) = name.strip_suffix(']') else {
                return Err(format!("line {}: unterminated section header", ln + 1));
            };
            section = name.trim().to_string();
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(format!("line {}: expected `key = value`, got {line:?}", ln + 1));
        };
        if section.is_empty() {
            return Err(format!("line {}: key before any [section]", ln + 1));
        }
        let key = (section.clone(), k.trim().to_string());
        if kv.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(format!("duplicate key {}.{}", key.0, key.1));
        }
    }

    let mut take = |sec: &str, key: &str| -> Result<String, String> {
        kv.remove(&(sec.to_string(), key.to_string()))
            .ok_or_else(|| format!("missing key {sec}.{key}"))
    };
    fn num<T: std::str::FromStr>(sec: &str, key: &str, v: String) -> Result<T, String> {
        v.parse()
            .map_err(|_| format!("bad value for {sec}.{key}: {v:?}"))
    }

    let cfg = PipelineConfig {
        corpus: CorpusSection {
            resolution: num("corpus", "resolution", take("corpus", "resolution")?)?,
            rows_per_archetype: num(
                "corpus",
                "rows_per_archetype",
                take("corpus", "rows_per_archetype")?,
            )?,
            plan: {
                let v = take("corpus", "plan")?;
                MixingPlan::parse(&v).ok_or(format!(
                    "bad value for corpus.plan: {v:?} (expected self-pairs, all-pairs, or random-K)"
                ))?
            },
            table_seed: num("corpus", "table_seed", take("corpus", "table_seed")?)?,
            seed: num("corpus", "seed", take("corpus", "seed")?)?,
        },
        gan: GanSection {
            latent_dim: num("gan", "latent_dim", take("gan", "latent_dim")?)?,
            epochs: num("gan", "epochs", take("gan", "epochs")?)?,
            batch_size: num("gan", "batch_size", take("gan", "batch_size")?)?,
            learning_rate: num("gan", "learning_rate", take("gan", "learning_rate")?)?,
            lambda_info: num("gan", "lambda_info", take("gan", "lambda_info")?)?,
            seed: num("gan", "seed", take("gan", "seed")?)?,
        },
        viz: VizSection {
            perplexity: num("viz", "perplexity", take("viz", "perplexity")?)?,
            iterations: num("viz", "iterations", take("viz", "iterations")?)?,
            seed: num("viz", "seed", take("viz", "seed")?)?,
        },
        mobo: MoboSection {
            doe_size: num("mobo", "doe_size", take("mobo", "doe_size")?)?,
            batches: num("mobo", "batches", take("mobo", "batches")?)?,
            batch_size: num("mobo", "batch_size", take("mobo", "batch_size")?)?,
            mc_draws: num("mobo", "mc_draws", take("mobo", "mc_draws")?)?,
            restarts: num("mobo", "restarts", take("mobo", "restarts")?)?,
            gp_restarts: num("mobo", "gp_restarts", take("mobo", "gp_restarts")?)?,
            seed: num("mobo", "seed", take("mobo", "seed")?)?,
        },
        interpret: InterpretSection {
            candidates: num("interpret", "candidates", take("interpret", "candidates")?)?,
            draws: num("interpret", "draws", take("interpret", "draws")?)?,
            bins: num("interpret", "bins", take("interpret", "bins")?)?,
            seed: num("interpret", "seed", take("interpret", "seed")?)?,
        },
        out: take("paths", "out")?,
    };

    if let Some(((sec, key), _)) = kv.into_iter().next() {
        return Err(format!("unknown key {sec}.{key}"));
    }
    validate(&cfg)?;
    Ok(cfg)
}

/// Structural bounds the pipeline needs beyond "parses as a number".
fn validate(c: &PipelineConfig) -> Result<(), String> {
    let err = |m: &str| Err(m.to_string());
    if c.corpus.resolution < 16 {
        return err("corpus.resolution must be at least 16");
    }
    if c.corpus.rows_per_archetype == 0 {
        return err("corpus.rows_per_archetype must be at least 1");
    }
    if c.corpus.plan == MixingPlan::RandomK(0) {
        return err("corpus.plan random-K needs K >= 1");
    }
    if c.gan.latent_dim == 0 || c.gan.latent_dim > 32 {
        return err("gan.latent_dim must be in 1..=32 (latent designs live in a Sobol ball)");
    }
    if c.gan.epochs == 0 || c.gan.batch_size == 0 {
        return err("gan.epochs and gan.batch_size must be at least 1");
    }
    if !(c.gan.learning_rate.is_finite() && c.gan.learning_rate > 0.0) {
        return err("gan.learning_rate must be positive and finite");
    }
    if !(c.gan.lambda_info.is_finite() && c.gan.lambda_info >= 0.0) {
        return err("gan.lambda_info must be nonnegative and finite");
    }
    if !(c.viz.perplexity.is_finite() && c.viz.perplexity >= 2.0) {
        return err("viz.perplexity must be at least 2");
    }
    if c.viz.iterations == 0 {
        return err("viz.iterations must be at least 1");
    }
    if c.mobo.doe_size < 2 {
        return err("mobo.doe_size must be at least 2 (emulators need two successes)");
    }
    if c.mobo.batches == 0
        || c.mobo.batch_size == 0
        || c.mobo.mc_draws == 0
        || c.mobo.restarts == 0
        || c.mobo.gp_restarts == 0
    {
        return err("mobo counts (batches, batch_size, mc_draws, restarts, gp_restarts) must be at least 1");
    }
    if c.interpret.candidates < 2 {
        return err("interpret.candidates must be at least 2");
    }
    if c.interpret.draws == 0 {
        return err("interpret.draws must be at least 1");
    }
    if c.interpret.bins < 2 {
        return err("interpret.bins must be at least 2");
    }
    if c.out.is_empty() {
        return err("paths.out must not be empty");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> PipelineConfig {
        PipelineConfig {
            corpus: CorpusSection {
                resolution: 24,
                rows_per_archetype: 6,
                plan: MixingPlan::RandomK(40),
                table_seed: 7,
                seed: 11,
            },
            gan: GanSection {
                latent_dim: 4,
                epochs: 60,
                batch_size: 16,
                learning_rate: 0.002,
                lambda_info: 1.0,
                seed: 3,
            },
            viz: VizSection {
                perplexity: 5.0,
                iterations: 250,
                seed: 5,
            },
            mobo: MoboSection {
                doe_size: 12,
                batches: 2,
                batch_size: 3,
                mc_draws: 64,
                restarts: 8,
                gp_restarts: 4,
                seed: 9,
            },
            interpret: InterpretSection {
                candidates: 256,
                draws: 64,
                bins: 24,
                seed: 13,
            },
            out: "out".to_string(),
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let cfg = example();
        let text = cfg.serialize();
        let back = parse(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.serialize(), text);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn comments_whitespace_and_order_do_not_change_the_hash() {
        let cfg = example();
        let mut noisy = String::from("# pipeline\n; alt comment\n\n");
        // Reverse the section order and pad the assignments.
        let canon = cfg.serialize();
        let sections: Vec<&str> = canon.split("\n[").collect();
        for (i, s) in sections.iter().enumerate().rev() {
            if i == 0 {
                noisy.push_str(s);
            } else {
                noisy.push('[');
                noisy.push_str(&s.replace(" = ", "   =   "));
            }
            noisy.push('\n');
        }
        let back = parse(&noisy).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn seed_override_rewrites_every_seed_and_the_hash() {
        let mut cfg = example();
        let h0 = cfg.hash();
        cfg.override_seeds(99);
        assert_eq!(
            (
                cfg.corpus.table_seed,
                cfg.corpus.seed,
                cfg.gan.seed,
                cfg.viz.seed,
                cfg.mobo.seed,
                cfg.interpret.seed,
            ),
            (99, 99, 99, 99, 99, 99)
        );
        assert_ne!(cfg.hash(), h0);
    }

    #[test]
    fn unknown_missing_duplicate_and_invalid_keys_are_rejected() {
        let canon = example().serialize();
        let unknown = format!("{canon}typo_key = 1\n");
        assert!(parse(&unknown).unwrap_err().contains("unknown key paths.typo_key"));

        let missing = canon.replacen("epochs = 60\n", "", 1);
        assert!(parse(&missing).unwrap_err().contains("missing key gan.epochs"));

        let dup = canon.replacen("epochs = 60\n", "epochs = 60\nepochs = 61\n", 1);
        assert!(parse(&dup).unwrap_err().contains("duplicate key gan.epochs"));

        let bad = canon.replacen("epochs = 60", "epochs = sixty", 1);
        assert!(parse(&bad).unwrap_err().contains("bad value for gan.epochs"));

        let plan = canon.replacen("plan = random-40", "plan = shuffle", 1);
        assert!(parse(&plan).unwrap_err().contains("corpus.plan"));

        let stray = format!("stray = 1\n{canon}");
        assert!(parse(&stray).unwrap_err().contains("before any [section]"));
    }

    #[test]
    fn validation_bounds_are_enforced() {
        let canon = example().serialize();
        for (from, to, needle) in [
            ("resolution = 24", "resolution = 8", "resolution"),
            ("latent_dim = 4", "latent_dim = 33", "latent_dim"),
            ("learning_rate = 0.002", "learning_rate = 0", "learning_rate"),
            ("lambda_info = 1", "lambda_info = -1", "lambda_info"),
            ("perplexity = 5", "perplexity = 1.5", "perplexity"),
            ("doe_size = 12", "doe_size = 1", "doe_size"),
            ("candidates = 256", "candidates = 1", "candidates"),
            ("bins = 24", "bins = 1", "bins"),
            ("out = out", "out =", "paths.out"),
        ] {
            let text = canon.replacen(from, to, 1);
            let e = parse(&text).unwrap_err();
            assert!(e.contains(needle), "{from} -> {to}: got {e}");
        }
    }

    #[test]
    fn hash_is_stable_and_hex16() {
        let h = example().hash();
        assert_eq!(h.len(), 16);
        assert!(h.bytes().all(|b| b.is_ascii_hexdigit()));
        assert_eq!(h, example().hash());
    }
}

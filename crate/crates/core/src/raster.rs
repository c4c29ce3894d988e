//! Full designs and the rasterized training corpus.
//!
//! A full manifold is a left half on [0, 0.5]×[0,1] joined to a mirrored half
//! on [0.5, 1]×[0,1]; the shared electrode cavity makes the union connected.
//! Rasterization samples pixel centers into three classes:
//!
//! * `SOLID` (code 0, rendered red) — no electrolyte,
//! * `FLUID` (code 1, rendered green) — open channel,
//! * `BOUNDARY` (code 2, rendered blue) — the one-pixel skin of solid cells
//!   4-adjacent to fluid.
//!
//! Corpora are persisted as a binary raster pack (`LFRD`), a key-value text
//! manifest, and a provenance CSV; builds are byte-identical for identical
//! inputs.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use crate::archetypes::{instantiate, spec_of, ArchetypeId, DesignTable, HalfGeometry};
use crate::rng::{mix_key, Xoshiro256};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum CellClass {
    Solid = 0,
    Fluid = 1,
    Boundary = 2,
}

impl CellClass {
    pub fn from_code(c: u8) -> Option<CellClass> {
        match c {
            0 => Some(CellClass::Solid),
            1 => Some(CellClass::Fluid),
            2 => Some(CellClass::Boundary),
            _ => None,
        }
    }

    /// RGB rendering: red / green / blue for solid / fluid / boundary.
    pub fn rgb(&self) -> [u8; 3] {
        match self {
            CellClass::Solid => [220, 50, 47],
            CellClass::Fluid => [64, 180, 96],
            CellClass::Boundary => [52, 101, 228],
        }
    }
}

/// Which table rows a design came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Provenance {
    pub left_archetype: ArchetypeId,
    pub left_row: u32,
    pub right_archetype: ArchetypeId,
    pub right_row: u32,
}

#[derive(Debug, thiserror::Error)]
pub enum RasterError {
    #[error("right half must be a mirrored half")]
    RightNotMirrored,
    #[error("mixed halves do not join across the midline")]
    InfeasibleMix,
    #[error("resolution {0} below the minimum of 16")]
    ResolutionTooSmall(u32),
    #[error("no fluid pixels at resolution {0}")]
    NoFluid(u32),
    #[error("rasterization at {0} breaks fluid connectivity (resolution too coarse)")]
    ResolutionTooCoarse(u32),
    #[error("design tables must cover all five archetypes (missing {0})")]
    MissingArchetype(&'static str),
    #[error("{skipped} of {attempted} designs skipped (> 10% budget)")]
    TooManySkipped { skipped: usize, attempted: usize },
    #[error("mixing plan exhausted the pair space before reaching the requested count")]
    PairSpaceExhausted,
    #[error(transparent)]
    Geometry(#[from] crate::archetypes::ArchetypeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("corpus file malformed: {0}")]
    Format(String),
}

/// A joined pair of halves in full [0,1]² coordinates.
#[derive(Clone, Debug)]
pub struct FullGeometry {
    pub left: HalfGeometry,
    pub right: HalfGeometry,
    pub provenance: Provenance,
}

/// Mirror a half about the vertical midline (exact involution).
pub fn mirror(g: &HalfGeometry) -> HalfGeometry {
    g.mirror()
}

/// Join a left half and a mirrored right half. The halves must share fluid
/// across the midline, otherwise the combination is rejected.
pub fn mix(left: &HalfGeometry, right: &HalfGeometry) -> Result<FullGeometry, RasterError> {
    if !right.mirrored {
        return Err(RasterError::RightNotMirrored);
    }
    // Contact check: fluid present on both sides of the seam at a shared y.
    let probes = 512;
    let eps = 1.0 / (probes as f64 * 4.0);
    let touches = (0..probes).any(|i| {
        let y = (i as f64 + 0.5) / probes as f64;
        left.contains_fluid(1.0 - eps, y) && right.contains_fluid(eps, y)
    });
    if !touches {
        return Err(RasterError::InfeasibleMix);
    }
    Ok(FullGeometry {
        left: left.clone(),
        right: right.clone(),
        provenance: Provenance {
            left_archetype: left.archetype,
            left_row: 0,
            right_archetype: right.archetype,
            right_row: 0,
        },
    })
}

impl FullGeometry {
    pub fn with_rows(mut self, left_row: u32, right_row: u32) -> Self {
        self.provenance.left_row = left_row;
        self.provenance.right_row = right_row;
        self
    }

    /// Fluid membership in full coordinates: the left half stretched onto
    /// [0, 0.5], the mirrored right half onto [0.5, 1]. Points essentially on
    /// the seam are resolved by nudging into either half.
    pub fn contains_fluid(&self, x: f64, y: f64) -> bool {
        const SEAM: f64 = 1.0 / (1u64 << 21) as f64;
        if x < 0.5 - SEAM {
            self.left.contains_fluid(2.0 * x, y)
        } else if x > 0.5 + SEAM {
            self.right.contains_fluid(2.0 * x - 1.0, y)
        } else {
            self.left.contains_fluid(1.0 - SEAM, y) || self.right.contains_fluid(SEAM, y)
        }
    }
}

/// One rasterized design. Row i, column j covers the pixel centered at
/// ((j + 0.5)/w, (i + 0.5)/h); column 0 is the inlet side, the last column
/// the outlet side.
#[derive(Clone, Debug, PartialEq)]
pub struct RasterDesign {
    pub width: u32,
    pub height: u32,
    pub classes: Vec<CellClass>,
    pub provenance: Provenance,
}

impl RasterDesign {
    pub fn class_at(&self, row: u32, col: u32) -> CellClass {
        self.classes[(row * self.width + col) as usize]
    }

    pub fn counts(&self) -> [usize; 3] {
        let mut c = [0usize; 3];
        for &cl in &self.classes {
            c[cl as usize] += 1;
        }
        c
    }

    /// Mirror image about the vertical axis (columns reversed).
    pub fn flip_horizontal(&self) -> RasterDesign {
        let mut classes = Vec::with_capacity(self.classes.len());
        for i in 0..self.height {
            for j in (0..self.width).rev() {
                classes.push(self.class_at(i, j));
            }
        }
        RasterDesign {
            width: self.width,
            height: self.height,
            classes,
            provenance: self.provenance,
        }
    }
}

/// Derive the boundary skin: solid cells 4-adjacent to fluid.
fn derive_classes(fluid: &[bool], w: usize, h: usize) -> Vec<CellClass> {
    let mut classes = vec![CellClass::Solid; w * h];
    for i in 0..h {
        for j in 0..w {
            let idx = i * w + j;
            if fluid[idx] {
                classes[idx] = CellClass::Fluid;
            } else {
                let near = (i > 0 && fluid[idx - w])
                    || (i + 1 < h && fluid[idx + w])
                    || (j > 0 && fluid[idx - 1])
                    || (j + 1 < w && fluid[idx + 1]);
                if near {
                    classes[idx] = CellClass::Boundary;
                }
            }
        }
    }
    classes
}

/// Fluid cells must form one 4-connected component touching both vertical
/// edges of the grid.
fn fluid_connected(fluid: &[bool], w: usize, h: usize) -> bool {
    let Some(start) = fluid.iter().position(|&f| f) else {
        return false;
    };
    let mut seen = vec![false; w * h];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(c) = stack.pop() {
        let (i, j) = (c / w, c % w);
        let mut neighbors = Vec::with_capacity(4);
        if i > 0 {
            neighbors.push(c - w);
        }
        if i + 1 < h {
            neighbors.push(c + w);
        }
        if j > 0 {
            neighbors.push(c - 1);
        }
        if j + 1 < w {
            neighbors.push(c + 1);
        }
        for nc in neighbors {
            if fluid[nc] && !seen[nc] {
                seen[nc] = true;
                stack.push(nc);
            }
        }
    }
    let total = fluid.iter().filter(|&&f| f).count();
    let reached = seen.iter().filter(|&&s| s).count();
    if reached != total {
        return false;
    }
    let left = (0..h).any(|i| fluid[i * w]);
    let right = (0..h).any(|i| fluid[i * w + w - 1]);
    left && right
}

/// Rasterize a full design at a square resolution.
pub fn rasterize(fg: &FullGeometry, resolution: u32) -> Result<RasterDesign, RasterError> {
    if resolution < 16 {
        return Err(RasterError::ResolutionTooSmall(resolution));
    }
    let n = resolution as usize;
    let mut fluid = vec![false; n * n];
    let mut any = false;
    for i in 0..n {
        let y = (i as f64 + 0.5) / n as f64;
        for j in 0..n {
            let x = (j as f64 + 0.5) / n as f64;
            if fg.contains_fluid(x, y) {
                fluid[i * n + j] = true;
                any = true;
            }
        }
    }
    if !any {
        return Err(RasterError::NoFluid(resolution));
    }
    if !fluid_connected(&fluid, n, n) {
        return Err(RasterError::ResolutionTooCoarse(resolution));
    }
    Ok(RasterDesign {
        width: resolution,
        height: resolution,
        classes: derive_classes(&fluid, n, n),
        provenance: fg.provenance,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MixingPlan {
    SelfPairs,
    AllPairs,
    RandomK(u32),
}

impl MixingPlan {
    pub fn label(&self) -> String {
        match self {
            MixingPlan::SelfPairs => "self-pairs".into(),
            MixingPlan::AllPairs => "all-pairs".into(),
            MixingPlan::RandomK(k) => format!("random-{k}"),
        }
    }

    pub fn parse(s: &str) -> Option<MixingPlan> {
        match s {
            "self-pairs" => Some(MixingPlan::SelfPairs),
            "all-pairs" => Some(MixingPlan::AllPairs),
            _ => s
                .strip_prefix("random-")
                .and_then(|k| k.parse().ok())
                .map(MixingPlan::RandomK),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusManifest {
    pub resolution: u32,
    pub seed: u64,
    pub plan: MixingPlan,
    /// (archetype, rows instantiated, table seed) per design table.
    pub tables: Vec<(ArchetypeId, u32, u64)>,
    pub design_count: u32,
    pub skipped: u32,
    /// Extra provenance key-values (config hash etc.) carried into the file.
    pub extra: Vec<(String, String)>,
}

#[derive(Clone, Debug)]
pub struct Corpus {
    pub designs: Vec<RasterDesign>,
    pub manifest: CorpusManifest,
}

/// Instantiate all table rows, mirror, mix per plan, rasterize, and assemble
/// the corpus. Infeasible geometries/mixes/rasters are skipped with a count;
/// the build fails if more than 10% of attempts are skipped. The random-k
/// plan draws unique pairs until exactly k designs succeed.
pub fn build_corpus(
    tables: &[DesignTable],
    plan: MixingPlan,
    resolution: u32,
    seed: u64,
) -> Result<Corpus, RasterError> {
    for id in ArchetypeId::ALL {
        if !tables.iter().any(|t| t.archetype == id) {
            return Err(RasterError::MissingArchetype(id.as_str()));
        }
    }
    let mut halves: Vec<(ArchetypeId, u32, HalfGeometry)> = Vec::new();
    let mut attempted = 0usize;
    let mut skipped = 0usize;
    let mut table_meta = Vec::new();
    for id in ArchetypeId::ALL {
        for table in tables.iter().filter(|t| t.archetype == id) {
            let spec = spec_of(id);
            table_meta.push((id, table.rows.len() as u32, table.seed));
            for (r, row) in table.rows.iter().enumerate() {
                attempted += 1;
                match instantiate(&spec, row) {
                    Ok(g) => halves.push((id, r as u32, g)),
                    Err(crate::archetypes::ArchetypeError::InfeasibleGeometry(_)) => {
                        skipped += 1
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        }
    }
    if halves.is_empty() || skipped * 10 > attempted {
        return Err(RasterError::TooManySkipped { skipped, attempted });
    }
    let mirrored: Vec<HalfGeometry> = halves.iter().map(|(_, _, g)| g.mirror()).collect();
    let m = halves.len();

    let mut designs = Vec::new();
    let try_pair = |li: usize, ri: usize, designs: &mut Vec<RasterDesign>| -> bool {
        let (la, lr, ref lg) = halves[li];
        let (ra, rr, _) = halves[ri];
        let full = match mix(lg, &mirrored[ri]) {
            Ok(f) => f.with_rows(lr, rr),
            Err(_) => return false,
        };
        debug_assert_eq!(full.provenance.left_archetype, la);
        debug_assert_eq!(full.provenance.right_archetype, ra);
        match rasterize(&full, resolution) {
            Ok(d) => {
                designs.push(d);
                true
            }
            Err(RasterError::NoFluid(_) | RasterError::ResolutionTooCoarse(_)) => false,
            Err(_) => false,
        }
    };

    match plan {
        MixingPlan::SelfPairs => {
            for i in 0..m {
                attempted += 1;
                if !try_pair(i, i, &mut designs) {
                    skipped += 1;
                }
            }
        }
        MixingPlan::AllPairs => {
            for i in 0..m {
                for j in 0..m {
                    attempted += 1;
                    if !try_pair(i, j, &mut designs) {
                        skipped += 1;
                    }
                }
            }
        }
        MixingPlan::RandomK(k) => {
            let mut rng = Xoshiro256::seed_from_u64(mix_key(seed, &[0x4d49, k as u64]));
            let mut used = HashSet::new();
            while designs.len() < k as usize {
                if used.len() == m * m {
                    return Err(RasterError::PairSpaceExhausted);
                }
                let (i, j) = loop {
                    let i = rng.below(m as u64) as usize;
                    let j = rng.below(m as u64) as usize;
                    if used.insert((i, j)) {
                        break (i, j);
                    }
                };
                attempted += 1;
                if !try_pair(i, j, &mut designs) {
                    skipped += 1;
                    if skipped * 10 > attempted {
                        return Err(RasterError::TooManySkipped { skipped, attempted });
                    }
                }
            }
        }
    }
    if skipped * 10 > attempted {
        return Err(RasterError::TooManySkipped { skipped, attempted });
    }
    // Distinct provenance is structural for self/random plans; verify anyway.
    let mut seen = HashSet::new();
    for d in &designs {
        if !seen.insert(d.provenance) {
            return Err(RasterError::Format("duplicate provenance in corpus".into()));
        }
    }
    let design_count = designs.len() as u32;
    Ok(Corpus {
        designs,
        manifest: CorpusManifest {
            resolution,
            seed,
            plan,
            tables: table_meta,
            design_count,
            skipped: skipped as u32,
            extra: Vec::new(),
        },
    })
}

// --- persistence -----------------------------------------------------------

const LFRD_MAGIC: &[u8; 4] = b"LFRD";

/// Serialize raster pack: magic, u16 LE width, u16 LE height, u32 LE count,
/// then count × height × width class-code bytes.
pub fn lfrd_bytes(designs: &[RasterDesign]) -> Vec<u8> {
    let (w, h) = designs
        .first()
        .map(|d| (d.width, d.height))
        .unwrap_or((0, 0));
    let mut out = Vec::with_capacity(12 + designs.len() * (w * h) as usize);
    out.extend_from_slice(LFRD_MAGIC);
    out.extend_from_slice(&(w as u16).to_le_bytes());
    out.extend_from_slice(&(h as u16).to_le_bytes());
    out.extend_from_slice(&(designs.len() as u32).to_le_bytes());
    for d in designs {
        assert_eq!((d.width, d.height), (w, h), "mixed raster sizes in one pack");
        out.extend(d.classes.iter().map(|&c| c as u8));
    }
    out
}

pub fn parse_lfrd(bytes: &[u8]) -> Result<Vec<(u32, u32, Vec<CellClass>)>, RasterError> {
    if bytes.len() < 12 || &bytes[0..4] != LFRD_MAGIC {
        return Err(RasterError::Format("bad LFRD magic".into()));
    }
    let w = u16::from_le_bytes([bytes[4], bytes[5]]) as u32;
    let h = u16::from_le_bytes([bytes[6], bytes[7]]) as u32;
    let count = u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize;
    let per = (w * h) as usize;
    if bytes.len() != 12 + count * per {
        return Err(RasterError::Format(format!(
            "LFRD length {} does not match {count} designs of {per} cells",
            bytes.len()
        )));
    }
    let mut out = Vec::with_capacity(count);
    for d in 0..count {
        let cells = &bytes[12 + d * per..12 + (d + 1) * per];
        let classes = cells
            .iter()
            .map(|&c| {
                CellClass::from_code(c)
                    .ok_or_else(|| RasterError::Format(format!("bad class code {c}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.push((w, h, classes));
    }
    Ok(out)
}

pub fn manifest_text(m: &CorpusManifest) -> String {
    let mut out = String::from("# corpus manifest\n");
    out.push_str(&format!("resolution={}\n", m.resolution));
    out.push_str(&format!("seed={}\n", m.seed));
    out.push_str(&format!("plan={}\n", m.plan.label()));
    out.push_str(&format!("design_count={}\n", m.design_count));
    out.push_str(&format!("skipped={}\n", m.skipped));
    for (id, n, seed) in &m.tables {
        out.push_str(&format!("table.{}={},{}\n", id.as_str(), n, seed));
    }
    for (k, v) in &m.extra {
        out.push_str(&format!("{k}={v}\n"));
    }
    out
}

pub fn parse_manifest(text: &str) -> Result<CorpusManifest, RasterError> {
    let mut m = CorpusManifest {
        resolution: 0,
        seed: 0,
        plan: MixingPlan::SelfPairs,
        tables: Vec::new(),
        design_count: 0,
        skipped: 0,
        extra: Vec::new(),
    };
    let bad = |what: &str| RasterError::Format(format!("manifest: bad {what}"));
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| bad("line"))?;
        match k {
            "resolution" => m.resolution = v.parse().map_err(|_| bad("resolution"))?,
            "seed" => m.seed = v.parse().map_err(|_| bad("seed"))?,
            "plan" => m.plan = MixingPlan::parse(v).ok_or_else(|| bad("plan"))?,
            "design_count" => m.design_count = v.parse().map_err(|_| bad("design_count"))?,
            "skipped" => m.skipped = v.parse().map_err(|_| bad("skipped"))?,
            _ if k.starts_with("table.") => {
                let id = ArchetypeId::parse(&k[6..]).ok_or_else(|| bad("table archetype"))?;
                let (n, seed) = v.split_once(',').ok_or_else(|| bad("table entry"))?;
                m.tables.push((
                    id,
                    n.parse().map_err(|_| bad("table count"))?,
                    seed.parse().map_err(|_| bad("table seed"))?,
                ));
            }
            _ => m.extra.push((k.to_string(), v.to_string())),
        }
    }
    Ok(m)
}

pub fn provenance_csv(designs: &[RasterDesign]) -> String {
    let mut out = String::from("index,left_archetype,left_row,right_archetype,right_row\n");
    for (i, d) in designs.iter().enumerate() {
        let p = d.provenance;
        out.push_str(&format!(
            "{i},{},{},{},{}\n",
            p.left_archetype.as_str(),
            p.left_row,
            p.right_archetype.as_str(),
            p.right_row
        ));
    }
    out
}

fn parse_provenance_csv(text: &str) -> Result<Vec<Provenance>, RasterError> {
    let bad = |what: &str| RasterError::Format(format!("provenance csv: bad {what}"));
    let mut out = Vec::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 5 {
            return Err(bad("field count"));
        }
        out.push(Provenance {
            left_archetype: ArchetypeId::parse(f[1]).ok_or_else(|| bad("archetype"))?,
            left_row: f[2].parse().map_err(|_| bad("row"))?,
            right_archetype: ArchetypeId::parse(f[3]).ok_or_else(|| bad("archetype"))?,
            right_row: f[4].parse().map_err(|_| bad("row"))?,
        });
    }
    Ok(out)
}

pub const CORPUS_RASTER_FILE: &str = "rasters.lfrd";
pub const CORPUS_MANIFEST_FILE: &str = "manifest.txt";
pub const CORPUS_PROVENANCE_FILE: &str = "provenance.csv";

pub fn write_corpus(dir: &Path, corpus: &Corpus) -> Result<(), RasterError> {
    std::fs::create_dir_all(dir)?;
    let mut f = std::fs::File::create(dir.join(CORPUS_RASTER_FILE))?;
    f.write_all(&lfrd_bytes(&corpus.designs))?;
    std::fs::write(
        dir.join(CORPUS_MANIFEST_FILE),
        manifest_text(&corpus.manifest),
    )?;
    std::fs::write(
        dir.join(CORPUS_PROVENANCE_FILE),
        provenance_csv(&corpus.designs),
    )?;
    Ok(())
}

pub fn load_corpus(dir: &Path) -> Result<Corpus, RasterError> {
    let mut bytes = Vec::new();
    std::fs::File::open(dir.join(CORPUS_RASTER_FILE))?.read_to_end(&mut bytes)?;
    let rasters = parse_lfrd(&bytes)?;
    let manifest = parse_manifest(&std::fs::read_to_string(dir.join(CORPUS_MANIFEST_FILE))?)?;
    let provenance = parse_provenance_csv(&std::fs::read_to_string(
        dir.join(CORPUS_PROVENANCE_FILE),
    )?)?;
    if provenance.len() != rasters.len() {
        return Err(RasterError::Format(
            "provenance rows do not match raster count".into(),
        ));
    }
    if manifest.design_count as usize != rasters.len() {
        return Err(RasterError::Format(
            "manifest design_count does not match raster count".into(),
        ));
    }
    let designs = rasters
        .into_iter()
        .zip(provenance)
        .map(|((width, height, classes), provenance)| RasterDesign {
            width,
            height,
            classes,
            provenance,
        })
        .collect();
    Ok(Corpus { designs, manifest })
}

// --- PNG rendering ----------------------------------------------------------

fn encode_png(
    rgb: &[u8],
    width: u32,
    height: u32,
    text: &[(String, String)],
) -> Result<Vec<u8>, RasterError> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, width, height);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        for (k, v) in text {
            enc.add_text_chunk(k.clone(), v.clone())
                .map_err(|e| RasterError::Format(e.to_string()))?;
        }
        let mut writer = enc.write_header().map_err(io_from_png)?;
        writer.write_image_data(rgb).map_err(io_from_png)?;
    }
    Ok(out)
}

fn io_from_png(e: png::EncodingError) -> RasterError {
    RasterError::Format(format!("png encoding: {e}"))
}

/// RGB buffer of one design (row 0 rendered at the top = largest y).
pub fn design_rgb(d: &RasterDesign) -> Vec<u8> {
    let mut rgb = Vec::with_capacity((d.width * d.height * 3) as usize);
    for i in (0..d.height).rev() {
        for j in 0..d.width {
            rgb.extend_from_slice(&d.class_at(i, j).rgb());
        }
    }
    rgb
}

pub fn png_design(d: &RasterDesign, text: &[(String, String)]) -> Result<Vec<u8>, RasterError> {
    encode_png(&design_rgb(d), d.width, d.height, text)
}

/// Montage of designs in a fixed-column grid with white gutters.
pub fn png_sheet(
    designs: &[RasterDesign],
    columns: usize,
    text: &[(String, String)],
) -> Result<Vec<u8>, RasterError> {
    assert!(!designs.is_empty() && columns > 0);
    let (w, h) = (designs[0].width as usize, designs[0].height as usize);
    let rows = designs.len().div_ceil(columns);
    const GAP: usize = 2;
    let sheet_w = columns * w + (columns - 1) * GAP;
    let sheet_h = rows * h + (rows - 1) * GAP;
    let mut rgb = vec![255u8; sheet_w * sheet_h * 3];
    for (n, d) in designs.iter().enumerate() {
        let tile = design_rgb(d);
        let (r0, c0) = (n / columns * (h + GAP), n % columns * (w + GAP));
        for i in 0..h {
            for j in 0..w {
                let src = (i * w + j) * 3;
                let dst = ((r0 + i) * sheet_w + c0 + j) * 3;
                rgb[dst..dst + 3].copy_from_slice(&tile[src..src + 3]);
            }
        }
    }
    encode_png(&rgb, sheet_w as u32, sheet_h as u32, text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archetypes::{sample_design_table, ArchetypeError};
    use crate::geom::rect;

    fn tables(n: usize, seed: u64) -> Vec<DesignTable> {
        ArchetypeId::ALL
            .iter()
            .map(|&id| sample_design_table(&spec_of(id), n, seed).unwrap())
            .collect()
    }

    fn open_channel_half(y0: f64, y1: f64) -> HalfGeometry {
        HalfGeometry::new(
            ArchetypeId::Prong2,
            vec![],
            vec![rect(0.0, y0, 1.0, y1).unwrap()],
            vec![],
            false,
        )
        .unwrap()
    }

    /// Independent flood fill used as the connectivity oracle in tests.
    fn oracle_connected(d: &RasterDesign) -> bool {
        let (w, h) = (d.width as usize, d.height as usize);
        let fluid: Vec<bool> = d.classes.iter().map(|&c| c == CellClass::Fluid).collect();
        let total = fluid.iter().filter(|&&f| f).count();
        if total == 0 {
            return false;
        }
        let start = fluid.iter().position(|&f| f).unwrap();
        let mut seen = vec![false; w * h];
        let mut queue = std::collections::VecDeque::from([start]);
        seen[start] = true;
        let mut n = 0;
        while let Some(c) = queue.pop_front() {
            n += 1;
            let (i, j) = (c / w, c % w);
            for (ni, nj) in [
                (i.wrapping_sub(1), j),
                (i + 1, j),
                (i, j.wrapping_sub(1)),
                (i, j + 1),
            ] {
                if ni < h && nj < w && fluid[ni * w + nj] && !seen[ni * w + nj] {
                    seen[ni * w + nj] = true;
                    queue.push_back(ni * w + nj);
                }
            }
        }
        n == total
            && (0..h).any(|i| fluid[i * w])
            && (0..h).any(|i| fluid[i * w + w - 1])
    }

    #[test]
    fn full_width_open_rect_has_one_boundary_ring() {
        let h = open_channel_half(0.3, 0.7);
        let full = mix(&h, &h.mirror()).unwrap();
        let d = rasterize(&full, 32).unwrap();
        // Expected: fluid rows where (i+0.5)/32 in (0.3, 0.7) -> rows 10..=21,
        // boundary rows 9 and 22 across the whole width, solid elsewhere.
        for i in 0..32 {
            for j in 0..32 {
                let expected = match i {
                    10..=21 => CellClass::Fluid,
                    9 | 22 => CellClass::Boundary,
                    _ => CellClass::Solid,
                };
                assert_eq!(d.class_at(i, j), expected, "at ({i},{j})");
            }
        }
    }

    #[test]
    fn boundary_rederivation_matches() {
        let t = tables(4, 3);
        let c = build_corpus(&t, MixingPlan::SelfPairs, 32, 9).unwrap();
        for d in &c.designs {
            let fluid: Vec<bool> =
                d.classes.iter().map(|&c| c == CellClass::Fluid).collect();
            let re = derive_classes(&fluid, d.width as usize, d.height as usize);
            assert_eq!(re, d.classes);
            let [s, f, b] = d.counts();
            assert_eq!(s + f + b, (d.width * d.height) as usize);
        }
    }

    #[test]
    fn mirror_mix_symmetry() {
        let spec = spec_of(ArchetypeId::Prong3);
        let table = sample_design_table(&spec, 1, 17).unwrap();
        let half = instantiate(&spec, &table.rows[0]).unwrap();
        let full = mix(&half, &half.mirror()).unwrap();
        let d = rasterize(&full, 64).unwrap();
        assert_eq!(d.flip_horizontal().classes, d.classes);
    }

    #[test]
    fn mix_requires_mirrored_right() {
        let h = open_channel_half(0.4, 0.6);
        assert!(matches!(mix(&h, &h), Err(RasterError::RightNotMirrored)));
    }

    #[test]
    fn disjoint_midline_contact_is_infeasible_mix() {
        let low = open_channel_half(0.10, 0.22);
        let high = open_channel_half(0.78, 0.90);
        assert!(matches!(
            mix(&low, &high.mirror()),
            Err(RasterError::InfeasibleMix)
        ));
    }

    #[test]
    fn too_thin_channel_raster_fails() {
        let thin = open_channel_half(0.490, 0.502); // fits the 128-grid check
        let full = mix(&thin, &thin.mirror()).unwrap();
        match rasterize(&full, 16) {
            Err(RasterError::NoFluid(_) | RasterError::ResolutionTooCoarse(_)) => {}
            other => panic!("expected degenerate raster, got {other:?}"),
        }
    }

    #[test]
    fn corpus_self_pairs_counts_and_connectivity() {
        let t = tables(5, 21);
        let c = build_corpus(&t, MixingPlan::SelfPairs, 32, 21).unwrap();
        assert_eq!(c.designs.len(), 25);
        assert_eq!(c.manifest.skipped, 0);
        for d in &c.designs {
            assert!(oracle_connected(d));
            assert_eq!(d.provenance.left_archetype, d.provenance.right_archetype);
            assert_eq!(d.provenance.left_row, d.provenance.right_row);
        }
    }

    #[test]
    fn corpus_random_k_exact_unique_pairs() {
        let t = tables(5, 2);
        let c = build_corpus(&t, MixingPlan::RandomK(60), 32, 7).unwrap();
        assert_eq!(c.designs.len(), 60);
        let mut seen = HashSet::new();
        for d in &c.designs {
            assert!(seen.insert(d.provenance));
        }
    }

    #[test]
    fn corpus_builds_are_byte_identical() {
        let t = tables(3, 11);
        let a = build_corpus(&t, MixingPlan::RandomK(20), 32, 5).unwrap();
        let b = build_corpus(&t, MixingPlan::RandomK(20), 32, 5).unwrap();
        assert_eq!(lfrd_bytes(&a.designs), lfrd_bytes(&b.designs));
        assert_eq!(manifest_text(&a.manifest), manifest_text(&b.manifest));
        assert_eq!(provenance_csv(&a.designs), provenance_csv(&b.designs));
    }

    #[test]
    fn corpus_missing_archetype_rejected() {
        let mut t = tables(3, 11);
        t.retain(|t| t.archetype != ArchetypeId::Prong4);
        assert!(matches!(
            build_corpus(&t, MixingPlan::SelfPairs, 32, 1),
            Err(RasterError::MissingArchetype("PRONG4"))
        ));
    }

    #[test]
    fn lfrd_round_trip() {
        let t = tables(3, 1);
        let c = build_corpus(&t, MixingPlan::SelfPairs, 32, 1).unwrap();
        let bytes = lfrd_bytes(&c.designs);
        assert_eq!(&bytes[0..4], b"LFRD");
        let parsed = parse_lfrd(&bytes).unwrap();
        assert_eq!(parsed.len(), c.designs.len());
        for (d, (w, h, classes)) in c.designs.iter().zip(&parsed) {
            assert_eq!((d.width, d.height), (*w, *h));
            assert_eq!(&d.classes, classes);
        }
    }

    #[test]
    fn corpus_disk_round_trip() {
        let dir = std::env::temp_dir().join(format!("lf-corpus-{}", std::process::id()));
        let t = tables(3, 8);
        let mut c = build_corpus(&t, MixingPlan::RandomK(10), 32, 4).unwrap();
        c.manifest.extra.push(("config".into(), "deadbeef".into()));
        write_corpus(&dir, &c).unwrap();
        let back = load_corpus(&dir).unwrap();
        assert_eq!(back.manifest, c.manifest);
        assert_eq!(back.designs.len(), c.designs.len());
        for (a, b) in c.designs.iter().zip(&back.designs) {
            assert_eq!(a, b);
        }
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn manifest_round_trip_via_text() {
        let m = CorpusManifest {
            resolution: 96,
            seed: 13,
            plan: MixingPlan::RandomK(2000),
            tables: vec![(ArchetypeId::Prong2, 25, 42), (ArchetypeId::InnerGeom, 25, 42)],
            design_count: 2000,
            skipped: 3,
            extra: vec![("config".into(), "abc123".into())],
        };
        assert_eq!(parse_manifest(&manifest_text(&m)).unwrap(), m);
    }

    #[test]
    fn png_export_encodes() {
        let h = open_channel_half(0.3, 0.7);
        let d = rasterize(&mix(&h, &h.mirror()).unwrap(), 32).unwrap();
        let png = png_design(&d, &[("config".into(), "cafe".into())]).unwrap();
        assert_eq!(&png[1..4], b"PNG");
        let sheet = png_sheet(&[d.clone(), d], 2, &[]).unwrap();
        assert_eq!(&sheet[1..4], b"PNG");
    }

    #[test]
    fn downsample_consistency_on_smooth_design() {
        // Oracle: majority-vote fluid occupancy over 2x2 blocks, then
        // re-derive the boundary skin — compare to direct rasterization.
        let spec = spec_of(ArchetypeId::Prong2);
        let params: Vec<f64> = spec.params.iter().map(|p| (p.lo + p.hi) / 2.0).collect();
        let half = instantiate(&spec, &params).unwrap();
        let full = mix(&half, &half.mirror()).unwrap();
        let fine = rasterize(&full, 96).unwrap();
        let coarse = rasterize(&full, 48).unwrap();
        let n = 48usize;
        let mut fluid = vec![false; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut votes = 0;
                for di in 0..2 {
                    for dj in 0..2 {
                        if fine.class_at((2 * i + di) as u32, (2 * j + dj) as u32)
                            == CellClass::Fluid
                        {
                            votes += 1;
                        }
                    }
                }
                fluid[i * n + j] = votes >= 2;
            }
        }
        let oracle = derive_classes(&fluid, n, n);
        let agree = oracle
            .iter()
            .zip(&coarse.classes)
            .filter(|(a, b)| a == b)
            .count();
        let frac = agree as f64 / (n * n) as f64;
        assert!(frac >= 0.95, "agreement {frac}");
    }

    #[test]
    fn instantiate_row_out_of_bounds_propagates() {
        let mut t = tables(2, 5);
        t[0].rows[0][0] = 5.0;
        assert!(matches!(
            build_corpus(&t, MixingPlan::SelfPairs, 32, 1),
            Err(RasterError::Geometry(ArchetypeError::OutOfBounds { .. }))
        ));
    }
}

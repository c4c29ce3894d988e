//! The five parametric manifold archetypes and their design tables.
//!
//! Each archetype describes the *left half* of a flow-battery manifold in
//! normalized [0,1]² coordinates: an inlet port on the outer edge (x = 0), a
//! distribution structure, and the shared electrode cavity reaching the
//! vertical midline (x = 1). Four families are k-pronged manifolds
//! (k = 2..5) parameterized by channel width, inlet angle, prong spread and
//! trunk length; the fifth is a diffuser with one of three interior obstacle
//! patterns.
//!
//! Design tables are Latin-hypercube samples over the parameter boxes:
//! every continuous column puts exactly one row in each of n equal strata,
//! with in-stratum jitter drawn from a counter-based generator keyed by
//! (seed, archetype, row, column) so tables are reproducible and
//! row-order-free. The discrete obstacle-pattern column is drawn uniformly
//! over its levels and stored as the level's midpoint in normalized units,
//! keeping every stored value inside the declared bounds.

use crate::geom::{rect, strip, Polygon};
use crate::rng::{keyed_unit, mix_key, Xoshiro256};

/// Shared layout constants: the electrode cavity every archetype feeds.
pub const CAVITY_X0: f64 = 0.55;
pub const CAVITY_Y0: f64 = 0.06;
pub const CAVITY_Y1: f64 = 0.94;
/// Channels extend slightly past the cavity wall so unions overlap cleanly.
const ENTRY_X: f64 = CAVITY_X0 + 0.02;
/// Safety factor on prong-to-prong clearance.
const CLEARANCE: f64 = 1.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArchetypeId {
    Prong2,
    Prong3,
    Prong4,
    Prong5,
    InnerGeom,
}

impl ArchetypeId {
    pub const ALL: [ArchetypeId; 5] = [
        ArchetypeId::Prong2,
        ArchetypeId::Prong3,
        ArchetypeId::Prong4,
        ArchetypeId::Prong5,
        ArchetypeId::InnerGeom,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ArchetypeId::Prong2 => "PRONG2",
            ArchetypeId::Prong3 => "PRONG3",
            ArchetypeId::Prong4 => "PRONG4",
            ArchetypeId::Prong5 => "PRONG5",
            ArchetypeId::InnerGeom => "INNER_GEOM",
        }
    }

    pub fn parse(s: &str) -> Option<ArchetypeId> {
        Self::ALL.iter().copied().find(|a| a.as_str() == s)
    }

    /// Stable numeric code used in RNG keys and binary provenance.
    pub fn code(&self) -> u64 {
        match self {
            ArchetypeId::Prong2 => 1,
            ArchetypeId::Prong3 => 2,
            ArchetypeId::Prong4 => 3,
            ArchetypeId::Prong5 => 4,
            ArchetypeId::InnerGeom => 5,
        }
    }

    pub fn from_code(c: u64) -> Option<ArchetypeId> {
        Self::ALL.iter().copied().find(|a| a.code() == c)
    }

    pub fn prong_count(&self) -> Option<usize> {
        match self {
            ArchetypeId::Prong2 => Some(2),
            ArchetypeId::Prong3 => Some(3),
            ArchetypeId::Prong4 => Some(4),
            ArchetypeId::Prong5 => Some(5),
            ArchetypeId::InnerGeom => None,
        }
    }
}

/// One named parameter with inclusive bounds; `levels` marks a discrete
/// parameter realized as that many equal slots across [lo, hi].
#[derive(Clone, Debug, PartialEq)]
pub struct Param {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub levels: Option<u32>,
}

impl Param {
    fn continuous(name: &str, lo: f64, hi: f64) -> Param {
        Param { name: name.into(), lo, hi, levels: None }
    }

    fn discrete(name: &str, levels: u32) -> Param {
        Param { name: name.into(), lo: 0.01, hi: 0.99, levels: Some(levels) }
    }

    /// Map a stored normalized value to its discrete level (1-based).
    pub fn level_of(&self, value: f64) -> Option<u32> {
        let levels = self.levels?;
        let t = (value - self.lo) / (self.hi - self.lo);
        Some(((t * levels as f64).floor() as u32).min(levels - 1) + 1)
    }

    /// Normalized midpoint value representing a 1-based level.
    pub fn level_value(&self, level: u32) -> f64 {
        let levels = self.levels.expect("level_value on continuous param") as f64;
        self.lo + (level as f64 - 0.5) * (self.hi - self.lo) / levels
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ArchetypeSpec {
    pub id: ArchetypeId,
    pub params: Vec<Param>,
    pub description: String,
}

impl ArchetypeSpec {
    pub fn param_names(&self) -> Vec<&str> {
        self.params.iter().map(|p| p.name.as_str()).collect()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ArchetypeError {
    #[error("design table needs at least one row")]
    EmptyTable,
    #[error("expected {expected} parameters for {archetype}, got {got}")]
    ParamCount { archetype: &'static str, expected: usize, got: usize },
    #[error("parameter {name} = {value} outside bounds [{lo}, {hi}]")]
    OutOfBounds { name: String, value: f64, lo: f64, hi: f64 },
    #[error("infeasible geometry: {0}")]
    InfeasibleGeometry(String),
    #[error("design table contains duplicate rows")]
    DuplicateRows,
}

/// The canonical five archetypes. Pure: repeated calls return equal specs.
///
/// Bounds were chosen so that every in-bounds parameter combination passes
/// the feasibility checks in [`instantiate`] (verified corner-wise in tests);
/// custom `ArchetypeSpec` values with looser bounds can still be rejected.
pub fn list_archetypes() -> Vec<ArchetypeSpec> {
    let prong = |id: ArchetypeId, k: usize, w: (f64, f64), s: (f64, f64)| ArchetypeSpec {
        id,
        params: vec![
            Param::continuous("channel_width", w.0, w.1),
            // Normalized tilt knob; 0.5 is straight-on (see inlet_tilt()).
            Param::continuous("inlet_angle", 0.01, 0.99),
            Param::continuous("prong_spread", s.0, s.1),
            Param::continuous("trunk_length", 0.08, 0.20),
        ],
        description: format!(
            "{k}-prong manifold: inlet trunk fanning into {k} channels across the half-cavity"
        ),
    };
    // Width floors keep the thinnest, steepest in-bounds prong 4-connected on
    // the default 32-pixel raster (a slanted strip needs width of roughly
    // (2 sin θ + cos θ) pixels); spread ceilings keep adjacent entries clear.
    vec![
        prong(ArchetypeId::Prong2, 2, (0.075, 0.12), (0.25, 0.50)),
        prong(ArchetypeId::Prong3, 3, (0.075, 0.105), (0.32, 0.52)),
        prong(ArchetypeId::Prong4, 4, (0.075, 0.095), (0.42, 0.54)),
        prong(ArchetypeId::Prong5, 5, (0.075, 0.085), (0.50, 0.56)),
        ArchetypeSpec {
            id: ArchetypeId::InnerGeom,
            params: vec![
                Param::continuous("channel_width", 0.06, 0.12),
                Param::continuous("obstacle_scale", 0.35, 0.85),
                Param::discrete("obstacle_pattern", 3),
            ],
            description:
                "diffuser manifold with one of three interior obstacle patterns".into(),
        },
    ]
}

pub fn spec_of(id: ArchetypeId) -> ArchetypeSpec {
    list_archetypes().into_iter().find(|s| s.id == id).unwrap()
}

/// Human-readable manifest of archetype specs.
pub fn archetype_manifest(specs: &[ArchetypeSpec]) -> String {
    let mut out = String::from("# manifold archetypes\n");
    for s in specs {
        out.push_str(&format!("archetype {}\n  {}\n", s.id.as_str(), s.description));
        for p in &s.params {
            match p.levels {
                Some(l) => out.push_str(&format!(
                    "  param {} discrete {} levels over [{}, {}]\n",
                    p.name, l, p.lo, p.hi
                )),
                None => {
                    out.push_str(&format!("  param {} in [{}, {}]\n", p.name, p.lo, p.hi))
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct DesignTable {
    pub archetype: ArchetypeId,
    pub rows: Vec<Vec<f64>>,
    pub seed: u64,
}

impl DesignTable {
    /// CSV with a header row: archetype, seed, one column per parameter.
    pub fn to_csv(&self, spec: &ArchetypeSpec) -> String {
        let mut out = String::from("archetype,seed");
        for p in &spec.params {
            out.push(',');
            out.push_str(&p.name);
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(self.archetype.as_str());
            out.push_str(&format!(",{}", self.seed));
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Latin-hypercube design table: one sample per stratum for each continuous
/// parameter, uniform level draws for discrete ones. Deterministic in
/// (seed, archetype, n) and independent of evaluation order.
pub fn sample_design_table(
    spec: &ArchetypeSpec,
    n: usize,
    seed: u64,
) -> Result<DesignTable, ArchetypeError> {
    if n == 0 {
        return Err(ArchetypeError::EmptyTable);
    }
    let arch = spec.id.code();
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(spec.params.len());
    for (c, p) in spec.params.iter().enumerate() {
        let mut col = Vec::with_capacity(n);
        match p.levels {
            None => {
                let mut strata: Vec<usize> = (0..n).collect();
                let mut rng =
                    Xoshiro256::seed_from_u64(mix_key(seed, &[arch, 0x5468, c as u64]));
                rng.shuffle(&mut strata);
                for (r, &stratum) in strata.iter().enumerate() {
                    let u = keyed_unit(mix_key(seed, &[arch, r as u64, c as u64]), 0);
                    col.push(p.lo + (stratum as f64 + u) * (p.hi - p.lo) / n as f64);
                }
            }
            Some(levels) => {
                for r in 0..n {
                    let u = keyed_unit(mix_key(seed, &[arch, r as u64, c as u64]), 0);
                    let level = ((u * levels as f64).floor() as u32).min(levels - 1) + 1;
                    col.push(p.level_value(level));
                }
            }
        }
        columns.push(col);
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|r| columns.iter().map(|col| col[r]).collect())
        .collect();
    for i in 0..rows.len() {
        for j in (i + 1)..rows.len() {
            if rows[i] == rows[j] {
                return Err(ArchetypeError::DuplicateRows);
            }
        }
    }
    Ok(DesignTable { archetype: spec.id, rows, seed })
}

/// One half-manifold: fluid = union of channel polygons minus obstacle
/// polygons, in [0,1]² with the inlet edge at x = 0 and the cavity midline at
/// x = 1 (swapped once mirrored).
#[derive(Clone, Debug, PartialEq)]
pub struct HalfGeometry {
    pub archetype: ArchetypeId,
    pub params: Vec<f64>,
    pub channels: Vec<Polygon>,
    pub obstacles: Vec<Polygon>,
    pub mirrored: bool,
}

/// Grid used for connectivity validation of half geometries.
const VALIDATE_GRID: usize = 128;

impl HalfGeometry {
    /// Build and validate a half geometry from raw polygons.
    pub fn new(
        archetype: ArchetypeId,
        params: Vec<f64>,
        channels: Vec<Polygon>,
        obstacles: Vec<Polygon>,
        mirrored: bool,
    ) -> Result<Self, ArchetypeError> {
        let g = HalfGeometry { archetype, params, channels, obstacles, mirrored };
        g.validate()?;
        Ok(g)
    }

    /// Fluid membership at a point of the half's own [0,1]² frame.
    pub fn contains_fluid(&self, x: f64, y: f64) -> bool {
        self.channels.iter().any(|p| p.contains(x, y))
            && !self.obstacles.iter().any(|p| p.contains(x, y))
    }

    /// Mirror about the vertical midline. Exact involution: coordinates are
    /// lattice-snapped so 1 − x is computed without rounding.
    pub fn mirror(&self) -> HalfGeometry {
        HalfGeometry {
            archetype: self.archetype,
            params: self.params.clone(),
            channels: self.channels.iter().map(|p| p.mirrored()).collect(),
            obstacles: self.obstacles.iter().map(|p| p.mirrored()).collect(),
            mirrored: !self.mirrored,
        }
    }

    /// Connectivity check on a fine sampling grid: the fluid region must be
    /// one 4-connected component touching both vertical edges.
    fn validate(&self) -> Result<(), ArchetypeError> {
        let n = VALIDATE_GRID;
        let mut fluid = vec![false; n * n];
        let mut first = None;
        for i in 0..n {
            for j in 0..n {
                let x = (j as f64 + 0.5) / n as f64;
                let y = (i as f64 + 0.5) / n as f64;
                if self.contains_fluid(x, y) {
                    fluid[i * n + j] = true;
                    first.get_or_insert(i * n + j);
                }
            }
        }
        let Some(start) = first else {
            return Err(ArchetypeError::InfeasibleGeometry("no fluid region".into()));
        };
        let mut seen = vec![false; n * n];
        let mut stack = vec![start];
        seen[start] = true;
        let mut count = 1usize;
        while let Some(c) = stack.pop() {
            let (i, j) = (c / n, c % n);
            let mut push = |ni: usize, nj: usize, seen: &mut Vec<bool>, stack: &mut Vec<usize>| {
                let nc = ni * n + nj;
                if fluid[nc] && !seen[nc] {
                    seen[nc] = true;
                    count += 1;
                    stack.push(nc);
                }
            };
            if i > 0 {
                push(i - 1, j, &mut seen, &mut stack);
            }
            if i + 1 < n {
                push(i + 1, j, &mut seen, &mut stack);
            }
            if j > 0 {
                push(i, j - 1, &mut seen, &mut stack);
            }
            if j + 1 < n {
                push(i, j + 1, &mut seen, &mut stack);
            }
        }
        let total = fluid.iter().filter(|&&f| f).count();
        if count != total {
            return Err(ArchetypeError::InfeasibleGeometry(format!(
                "fluid region splits into multiple components ({count} of {total} cells reached)"
            )));
        }
        let left = (0..n).any(|i| fluid[i * n]);
        let right = (0..n).any(|i| fluid[i * n + n - 1]);
        if !left || !right {
            return Err(ArchetypeError::InfeasibleGeometry(
                "fluid region does not span inlet edge to midline".into(),
            ));
        }
        Ok(())
    }
}

fn check_bounds(spec: &ArchetypeSpec, params: &[f64]) -> Result<(), ArchetypeError> {
    if params.len() != spec.params.len() {
        return Err(ArchetypeError::ParamCount {
            archetype: spec.id.as_str(),
            expected: spec.params.len(),
            got: params.len(),
        });
    }
    for (p, &v) in spec.params.iter().zip(params) {
        if !(p.lo..=p.hi).contains(&v) || !v.is_finite() {
            return Err(ArchetypeError::OutOfBounds {
                name: p.name.clone(),
                value: v,
                lo: p.lo,
                hi: p.hi,
            });
        }
    }
    Ok(())
}

/// Map the normalized inlet-angle knob in [0.01, 0.99] to a fan-axis tilt in
/// radians; 0.5 is straight along the horizontal centerline.
fn inlet_tilt(v: f64) -> f64 {
    (v - 0.5) * 0.3
}

/// Half-height of the diffuser wedge at position x (inner-geometry archetype).
fn wedge_half_height(w: f64, x: f64) -> f64 {
    w / 2.0 + (x - 0.12) / (ENTRY_X - 0.12) * (0.35 - w / 2.0)
}

fn diamond(cx: f64, cy: f64, r: f64) -> Result<Polygon, ArchetypeError> {
    Polygon::new(vec![(cx - r, cy), (cx, cy - r), (cx + r, cy), (cx, cy + r)])
        .map_err(|e| ArchetypeError::InfeasibleGeometry(e.to_string()))
}

/// Instantiate one design-table row as a left-half geometry.
pub fn instantiate(
    spec: &ArchetypeSpec,
    params: &[f64],
) -> Result<HalfGeometry, ArchetypeError> {
    check_bounds(spec, params)?;
    let geo = |e: crate::geom::PolygonError| ArchetypeError::InfeasibleGeometry(e.to_string());
    let cavity = rect(CAVITY_X0, CAVITY_Y0, 1.0, CAVITY_Y1).map_err(geo)?;
    let (channels, obstacles) = match spec.id.prong_count() {
        Some(k) => {
            let (w, angle, spread, trunk) =
                (params[0], inlet_tilt(params[1]), params[2], params[3]);
            let run = ENTRY_X - trunk;
            let dy = angle.tan() * run;
            let mut channels = vec![
                rect(0.0, 0.5 - w / 2.0, trunk + w / 2.0, 0.5 + w / 2.0).map_err(geo)?,
            ];
            let mut entries = Vec::with_capacity(k);
            for i in 0..k {
                let y = 0.5 + dy + spread * (i as f64 / (k - 1) as f64 - 0.5);
                let len = (run * run + (y - 0.5) * (y - 0.5)).sqrt();
                entries.push((y, run / len));
            }
            for pair in entries.windows(2) {
                let (y0, c0) = pair[0];
                let (y1, c1) = pair[1];
                let need = CLEARANCE * (w / 2.0) * (1.0 / c0 + 1.0 / c1);
                if y1 - y0 < need {
                    return Err(ArchetypeError::InfeasibleGeometry(format!(
                        "prong channels overlap: entry gap {:.4} < required {:.4}",
                        y1 - y0,
                        need
                    )));
                }
            }
            for &(y, cos) in &entries {
                let half = (w / 2.0) / cos;
                if y - half < CAVITY_Y0 + 0.005 || y + half > CAVITY_Y1 - 0.005 {
                    return Err(ArchetypeError::InfeasibleGeometry(format!(
                        "prong entry at y = {y:.4} leaves the cavity span"
                    )));
                }
                channels.push(strip((trunk, 0.5), (ENTRY_X, y), w).map_err(geo)?);
            }
            channels.push(cavity);
            (channels, Vec::new())
        }
        None => {
            let (w, scale) = (params[0], params[1]);
            let pattern = spec.params[2]
                .level_of(params[2])
                .expect("obstacle_pattern is discrete");
            let trunk = rect(0.0, 0.5 - w / 2.0, 0.13, 0.5 + w / 2.0).map_err(geo)?;
            let wedge = Polygon::new(vec![
                (0.12, 0.5 - w / 2.0),
                (ENTRY_X, 0.15),
                (ENTRY_X, 0.85),
                (0.12, 0.5 + w / 2.0),
            ])
            .map_err(geo)?;
            let mut obstacles = Vec::new();
            match pattern {
                1 => {
                    let r = scale * 0.07;
                    obstacles.push(diamond(0.40, 0.40, r)?);
                    obstacles.push(diamond(0.40, 0.60, r)?);
                }
                2 => {
                    let r = scale * 0.05;
                    obstacles.push(diamond(0.32, 0.42, r)?);
                    obstacles.push(diamond(0.32, 0.58, r)?);
                    obstacles.push(diamond(0.46, 0.34, r)?);
                    obstacles.push(diamond(0.46, 0.50, r)?);
                    obstacles.push(diamond(0.46, 0.66, r)?);
                }
                _ => {
                    for &bx in &[0.30, 0.38, 0.46] {
                        let bh = scale * 0.55 * wedge_half_height(w, bx);
                        obstacles.push(
                            rect(bx - 0.0175, 0.5 - bh, bx + 0.0175, 0.5 + bh).map_err(geo)?,
                        );
                    }
                }
            }
            // Obstacles must sit strictly inside the (convex) wedge and stay
            // mutually separated so the fluid gaps survive rasterization.
            for ob in &obstacles {
                for v in ob.vertices() {
                    if !wedge.contains(v.x, v.y) {
                        return Err(ArchetypeError::InfeasibleGeometry(
                            "obstacle vertex outside the diffuser wedge".into(),
                        ));
                    }
                }
            }
            for i in 0..obstacles.len() {
                for j in (i + 1)..obstacles.len() {
                    let a = obstacles[i].bbox();
                    let b = obstacles[j].bbox();
                    let gap_x = (b.0 - a.2).max(a.0 - b.2);
                    let gap_y = (b.1 - a.3).max(a.1 - b.3);
                    if gap_x.max(gap_y) < 0.01 {
                        return Err(ArchetypeError::InfeasibleGeometry(
                            "obstacles too close together".into(),
                        ));
                    }
                }
            }
            (vec![trunk, wedge, cavity], obstacles)
        }
    };
    HalfGeometry::new(spec.id, params.to_vec(), channels, obstacles, false)
}

//! Browser playground for the manifold-design pipeline: pick two archetypes,
//! synthesize a mirrored mix, rasterize it, and solve the Darcy surrogate —
//! all client-side via WebAssembly.
//!
//! `app` holds the plain-Rust logic (unit-tested natively); the thin
//! `wasm-bindgen` wrappers at the bottom only translate types and errors.

pub mod app {
    use latentflow::archetypes::{instantiate, sample_design_table, spec_of, ArchetypeId};
    use latentflow::flow::{self, FlowField};
    use latentflow::raster::{self, CellClass, RasterDesign};
    use latentflow::rng::mix_key;

    /// Rows sampled per archetype table; variants index into it modulo this.
    pub const VARIANTS: u32 = 16;

    pub fn archetype_ids() -> Vec<String> {
        ArchetypeId::ALL.iter().map(|a| a.as_str().to_string()).collect()
    }

    fn lookup(name: &str) -> Result<ArchetypeId, String> {
        ArchetypeId::parse(name).ok_or_else(|| {
            format!(
                "unknown archetype {name:?}; one of {}",
                archetype_ids().join(", ")
            )
        })
    }

    /// A synthesized full design: left half + mirrored right half, rasterized.
    #[derive(Debug)]
    pub struct DesignSession {
        pub raster: RasterDesign,
        pub label: String,
    }

    /// Instantiate table row `variant` of `name`'s archetype.
    fn half(
        name: &str,
        variant: u32,
        seed: u64,
    ) -> Result<latentflow::archetypes::HalfGeometry, String> {
        let id = lookup(name)?;
        let spec = spec_of(id);
        let table_seed = mix_key(seed, &[id as u64]);
        let table = sample_design_table(&spec, VARIANTS as usize, table_seed)
            .map_err(|e| format!("table for {name}: {e}"))?;
        let row = &table.rows[(variant % VARIANTS) as usize];
        instantiate(&spec, row).map_err(|e| format!("instantiate {name}: {e}"))
    }

    pub fn synthesize(
        left: &str,
        right: &str,
        left_variant: u32,
        right_variant: u32,
        seed: u64,
        resolution: u32,
    ) -> Result<DesignSession, String> {
        let lg = half(left, left_variant, seed)?;
        let rg = half(right, right_variant, seed)?;
        let full = raster::mix(&lg, &rg.mirror()).map_err(|e| format!("mix: {e}"))?;
        let raster = raster::rasterize(&full, resolution).map_err(|e| format!("rasterize: {e}"))?;
        let label = format!(
            "{left} v{} × {right} v{} @ {resolution}px (seed {seed})",
            left_variant % VARIANTS,
            right_variant % VARIANTS,
        );
        Ok(DesignSession { raster, label })
    }

    /// RGBA class view using the corpus palette, opaque.
    pub fn class_rgba(r: &RasterDesign) -> Vec<u8> {
        let mut out = Vec::with_capacity(r.classes.len() * 4);
        for &c in &r.classes {
            let [rr, gg, bb] = c.rgb();
            out.extend_from_slice(&[rr, gg, bb, 255]);
        }
        out
    }

    /// Solved surrogate plus the two objectives.
    pub struct FlowSession {
        pub field: FlowField,
        /// Coefficient of variation of cell speed in the electrode band.
        pub nonuniformity: f64,
        /// Reciprocal throughput.
        pub resistance: f64,
    }

    pub fn solve(r: &RasterDesign) -> Result<FlowSession, String> {
        let field = flow::solve_flow(r).map_err(|e| format!("flow solve: {e}"))?;
        let (nonuniformity, resistance) =
            flow::objectives(&field, r).map_err(|e| format!("objectives: {e}"))?;
        Ok(FlowSession {
            field,
            nonuniformity,
            resistance,
        })
    }

    const WALL: [u8; 3] = [40, 40, 44];

    fn lerp(a: [u8; 3], b: [u8; 3], t: f64) -> [u8; 3] {
        let t = t.clamp(0.0, 1.0);
        std::array::from_fn(|k| (a[k] as f64 + (b[k] as f64 - a[k] as f64) * t).round() as u8)
    }

    /// Blue → white → red over pressure 0..1; non-conducting cells dark.
    pub fn pressure_rgba(f: &FlowField) -> Vec<u8> {
        let mut out = Vec::with_capacity(f.pressure.len() * 4);
        for (c, &p) in f.pressure.iter().enumerate() {
            let rgb = if f.kappa[c] == 0.0 {
                WALL
            } else if p < 0.5 {
                lerp([40, 60, 210], [245, 245, 245], p * 2.0)
            } else {
                lerp([245, 245, 245], [205, 40, 40], (p - 0.5) * 2.0)
            };
            out.extend_from_slice(&rgb);
            out.push(255);
        }
        out
    }

    /// Black → teal → yellow by speed, normalized to the field maximum;
    /// non-conducting cells dark.
    pub fn speed_rgba(f: &FlowField) -> Vec<u8> {
        let (w, h) = (f.width as usize, f.height as usize);
        let mut speeds = vec![0.0f64; w * h];
        let mut max = 0.0f64;
        for i in 0..h {
            for j in 0..w {
                let s = f.speed(i, j);
                speeds[i * w + j] = s;
                max = max.max(s);
            }
        }
        let mut out = Vec::with_capacity(w * h * 4);
        for (c, &s) in speeds.iter().enumerate() {
            let rgb = if f.kappa[c] == 0.0 {
                WALL
            } else {
                let t = if max > 0.0 { s / max } else { 0.0 };
                if t < 0.5 {
                    lerp([10, 12, 40], [30, 160, 160], t * 2.0)
                } else {
                    lerp([30, 160, 160], [250, 230, 70], (t - 0.5) * 2.0)
                }
            };
            out.extend_from_slice(&rgb);
            out.push(255);
        }
        out
    }

}

// --- wasm-bindgen surface ----------------------------------------------------

use wasm_bindgen::prelude::*;

/// Archetype names for populating a `<select>`.
#[wasm_bindgen]
pub fn archetypes() -> Vec<String> {
    app::archetype_ids()
}

/// Number of design variants per archetype table.
#[wasm_bindgen]
pub fn variant_count() -> u32 {
    app::VARIANTS
}

/// A synthesized raster design held for rendering and solving.
#[wasm_bindgen]
pub struct Design {
    inner: app::DesignSession,
}

#[wasm_bindgen]
pub fn synthesize(
    left: &str,
    right: &str,
    left_variant: u32,
    right_variant: u32,
    seed: u32,
    resolution: u32,
) -> Result<Design, JsError> {
    app::synthesize(left, right, left_variant, right_variant, seed as u64, resolution)
        .map(|inner| Design { inner })
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
impl Design {
    pub fn width(&self) -> u32 {
        self.inner.raster.width
    }
    pub fn height(&self) -> u32 {
        self.inner.raster.height
    }
    pub fn label(&self) -> String {
        self.inner.label.clone()
    }
    /// Class view: RGBA bytes, row-major, opaque.
    pub fn rgba(&self) -> Vec<u8> {
        app::class_rgba(&self.inner.raster)
    }
    /// Run the Darcy surrogate on this design.
    pub fn solve(&self) -> Result<Flow, JsError> {
        app::solve(&self.inner.raster)
            .map(|inner| Flow { inner })
            .map_err(|e| JsError::new(&e))
    }
}

/// A solved flow field with its two design objectives.
#[wasm_bindgen]
pub struct Flow {
    inner: app::FlowSession,
}

#[wasm_bindgen]
impl Flow {
    pub fn width(&self) -> u32 {
        self.inner.field.width
    }
    pub fn height(&self) -> u32 {
        self.inner.field.height
    }
    /// Flow-uniformity objective: speed CV over the electrode band (lower
    /// is more uniform).
    pub fn nonuniformity(&self) -> f64 {
        self.inner.nonuniformity
    }
    /// Hydraulic-resistance objective: reciprocal throughput.
    pub fn resistance(&self) -> f64 {
        self.inner.resistance
    }
    pub fn throughput(&self) -> f64 {
        self.inner.field.throughput
    }
    pub fn iterations(&self) -> u32 {
        self.inner.field.iterations
    }
    /// Pressure view: RGBA bytes, blue → white → red.
    pub fn pressure_rgba(&self) -> Vec<u8> {
        app::pressure_rgba(&self.inner.field)
    }
    /// Speed view: RGBA bytes, dark → teal → yellow.
    pub fn speed_rgba(&self) -> Vec<u8> {
        app::speed_rgba(&self.inner.field)
    }
}

//! Darcy-flow surrogate over rasterized designs.
//!
//! Solves ∇·(κ∇p) = 0 on the raster with κ = 1 on `FLUID`, κ = 0.5 on
//! `BOUNDARY` (half-permeability skin) and κ = 0 on `SOLID`. Pressure is
//! pinned to 1 on inlet-edge fluid cells (column 0) and 0 on outlet-edge
//! fluid cells (last column); all other domain edges are no-flux. Face
//! transmissibilities use the harmonic mean of the adjacent cell
//! permeabilities, and the resulting SPD system is solved by
//! Jacobi-preconditioned conjugate gradients.
//!
//! The two optimization objectives derived from a solve are
//!
//! * `f₁` — coefficient of variation of the cell-speed magnitude over fluid
//!   cells in the central band (middle 50% of the width): a flow-uniformity
//!   proxy for charge capacity, minimized;
//! * `f₂` — hydraulic resistance `1/Q` at unit pressure drop: a proxy for
//!   average charge voltage, minimized.
//!
//! Mirror exactness: internally the Dirichlet values are ±0.5, which makes
//! the mirrored problem the exact negation-permutation of the original, and
//! every cross-cell reduction (CG dot products, throughput, speed moments)
//! uses order-independent exact summation. Solving a raster and its vertical
//! mirror therefore yields bitwise-identical objectives.

use crate::exact::{exact_sum, ExactSum};
use crate::raster::{CellClass, RasterDesign};

#[derive(Debug, thiserror::Error)]
pub enum FlowError {
    #[error("no fluid cells on the inlet edge")]
    MissingInlet,
    #[error("no fluid cells on the outlet edge")]
    MissingOutlet,
    #[error("solver did not reach residual {target:e} in {iterations} iterations (got {residual:e})")]
    NonConvergence {
        iterations: u32,
        residual: f64,
        target: f64,
    },
    #[error("zero throughput: inlet and outlet are not connected")]
    ZeroThroughput,
}

pub fn permeability(c: CellClass) -> f64 {
    match c {
        CellClass::Fluid => 1.0,
        CellClass::Boundary => 0.5,
        CellClass::Solid => 0.0,
    }
}

/// Solved pressure/flux field on one raster.
#[derive(Clone, Debug)]
pub struct FlowField {
    pub width: u32,
    pub height: u32,
    /// Cell permeabilities (the mask the field was solved on).
    pub kappa: Vec<f64>,
    /// Cell pressures in [0, 1]; zero on non-conducting cells.
    pub pressure: Vec<f64>,
    /// Horizontal face fluxes, H×(W+1), positive toward +x (inlet→outlet).
    /// Entry (i, j) is the face between cells (i, j−1) and (i, j).
    pub flux_x: Vec<f64>,
    /// Vertical face fluxes, (H+1)×W, positive toward +y (increasing row).
    /// Entry (i, j) is the face between cells (i−1, j) and (i, j).
    pub flux_y: Vec<f64>,
    /// Total throughput at unit pressure drop (mean net flux per cut).
    pub throughput: f64,
    pub iterations: u32,
    /// Final relative residual of the linear solve.
    pub residual: f64,
}

/// Relative target for the conjugate-gradient solve. A couple of orders
/// tighter than the 1e-10 contract so the continuity invariant holds with
/// slack on fine grids.
const CG_TOLERANCE: f64 = 1e-12;

/// Order-independent dot product (see module notes on mirror exactness).
fn exact_dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = ExactSum::new();
    for (x, y) in a.iter().zip(b) {
        s.add(x * y);
    }
    s.value()
}

struct System {
    diag: Vec<f64>,
    /// Horizontal (left/right) neighbor edges per unknown.
    hedges: Vec<Vec<(u32, f64)>>,
    /// Vertical (up/down) neighbor edges per unknown.
    vedges: Vec<Vec<(u32, f64)>>,
    b: Vec<f64>,
}

impl System {
    /// y = A·x. Per row the left/right pair is summed as a commutative pair
    /// before the up/down pair, so the result is bitwise invariant under the
    /// mirror's left/right swap.
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut lr = 0.0;
            for &(j, t) in &self.hedges[i] {
                lr += t * x[j as usize];
            }
            let mut ud = 0.0;
            for &(j, t) in &self.vedges[i] {
                ud += t * x[j as usize];
            }
            *yi = self.diag[i] * x[i] - (lr + ud);
        }
    }
}

pub fn solve_flow(raster: &RasterDesign) -> Result<FlowField, FlowError> {
    let (w, h) = (raster.width as usize, raster.height as usize);
    let kappa: Vec<f64> = raster.classes.iter().map(|&c| permeability(c)).collect();

    // Dirichlet sets: fluid-class cells on the inlet/outlet columns. The
    // internal gauge is ±0.5; reported pressure adds 0.5 back.
    let mut pinned = vec![0.0f64; w * h]; // internal Dirichlet value
    let mut is_pinned = vec![false; w * h];
    let (mut has_in, mut has_out) = (false, false);
    for i in 0..h {
        if raster.classes[i * w] == CellClass::Fluid {
            pinned[i * w] = 0.5;
            is_pinned[i * w] = true;
            has_in = true;
        }
        if raster.classes[i * w + w - 1] == CellClass::Fluid {
            pinned[i * w + w - 1] = -0.5;
            is_pinned[i * w + w - 1] = true;
            has_out = true;
        }
    }
    if !has_in {
        return Err(FlowError::MissingInlet);
    }
    if !has_out {
        return Err(FlowError::MissingOutlet);
    }

    let trans = |a: usize, b: usize| -> f64 {
        let (ka, kb) = (kappa[a], kappa[b]);
        if ka == 0.0 || kb == 0.0 {
            0.0
        } else {
            2.0 * ka * kb / (ka + kb)
        }
    };

    // Unknowns: conducting, unpinned cells that exchange flow with at least
    // one conducting neighbor. A conducting cell walled in by solids has a
    // zero matrix row (and would turn the Jacobi preconditioner into 0/0);
    // it carries no flow, so it is reported like a non-conducting cell.
    let mut total_t = vec![0.0f64; w * h];
    for i in 0..h {
        for j in 0..w {
            let c = i * w + j;
            if j + 1 < w {
                let t = trans(c, c + 1);
                total_t[c] += t;
                total_t[c + 1] += t;
            }
            if i + 1 < h {
                let t = trans(c, c + w);
                total_t[c] += t;
                total_t[c + w] += t;
            }
        }
    }
    let mut unknown_of = vec![u32::MAX; w * h];
    let mut cells = Vec::new();
    for c in 0..w * h {
        if kappa[c] > 0.0 && !is_pinned[c] && total_t[c] > 0.0 {
            unknown_of[c] = cells.len() as u32;
            cells.push(c);
        }
    }
    let n = cells.len();

    let mut sys = System {
        diag: vec![0.0; n],
        hedges: vec![Vec::new(); n],
        vedges: vec![Vec::new(); n],
        b: vec![0.0; n],
    };
    for (u, &c) in cells.iter().enumerate() {
        let (i, j) = (c / w, c % w);
        // The left/right pair is accumulated before the up/down pair so
        // diagonal and RHS are bitwise invariant under the mirror swap.
        let mut horiz = Vec::with_capacity(2);
        if j > 0 {
            horiz.push(c - 1);
        }
        if j + 1 < w {
            horiz.push(c + 1);
        }
        let mut vert = Vec::with_capacity(2);
        if i > 0 {
            vert.push(c - w);
        }
        if i + 1 < h {
            vert.push(c + w);
        }
        let (mut d_lr, mut d_ud) = (0.0, 0.0);
        let (mut b_lr, mut b_ud) = (0.0, 0.0);
        for &nc in &horiz {
            let t = trans(c, nc);
            if t == 0.0 {
                continue;
            }
            d_lr += t;
            if is_pinned[nc] {
                b_lr += t * pinned[nc];
            } else {
                sys.hedges[u].push((unknown_of[nc], t));
            }
        }
        for &nc in &vert {
            let t = trans(c, nc);
            if t == 0.0 {
                continue;
            }
            d_ud += t;
            if is_pinned[nc] {
                b_ud += t * pinned[nc];
            } else {
                sys.vedges[u].push((unknown_of[nc], t));
            }
        }
        sys.diag[u] = d_lr + d_ud;
        sys.b[u] = b_lr + b_ud;
    }

    // Jacobi-preconditioned CG from x = 0.
    let max_iters = (10 * w * h) as u32;
    let mut x = vec![0.0f64; n];
    let mut r = sys.b.clone();
    let b_norm = exact_dot(&sys.b, &sys.b).sqrt();
    let mut iterations = 0u32;
    let mut residual = 0.0;
    if b_norm > 0.0 {
        let precond = |r: &[f64], z: &mut [f64], diag: &[f64]| {
            for ((zi, &ri), &di) in z.iter_mut().zip(r).zip(diag) {
                *zi = ri / di;
            }
        };
        let mut z = vec![0.0; n];
        precond(&r, &mut z, &sys.diag);
        let mut p = z.clone();
        let mut rz = exact_dot(&r, &z);
        let mut ap = vec![0.0; n];
        loop {
            residual = exact_dot(&r, &r).sqrt() / b_norm;
            if residual <= CG_TOLERANCE {
                break;
            }
            if iterations >= max_iters {
                return Err(FlowError::NonConvergence {
                    iterations,
                    residual,
                    target: CG_TOLERANCE,
                });
            }
            sys.apply(&p, &mut ap);
            let pap = exact_dot(&p, &ap);
            if pap <= 0.0 || rz == 0.0 {
                break; // numerically converged / stagnated on a zero subspace
            }
            let alpha = rz / pap;
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            precond(&r, &mut z, &sys.diag);
            let rz_new = exact_dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..n {
                p[k] = z[k] + beta * p[k];
            }
            iterations += 1;
        }
    }

    // Internal (gauge) pressure on every cell.
    let mut internal = vec![f64::NAN; w * h];
    for c in 0..w * h {
        if is_pinned[c] {
            internal[c] = pinned[c];
        } else if unknown_of[c] != u32::MAX {
            internal[c] = x[unknown_of[c] as usize];
        }
    }

    // Face fluxes from the internal gauge (differences are gauge-free).
    let mut flux_x = vec![0.0f64; h * (w + 1)];
    let mut flux_y = vec![0.0f64; (h + 1) * w];
    for i in 0..h {
        for j in 1..w {
            let (a, b) = (i * w + j - 1, i * w + j);
            let t = trans(a, b);
            if t > 0.0 {
                flux_x[i * (w + 1) + j] = t * (internal[a] - internal[b]);
            }
        }
    }
    for i in 1..h {
        for j in 0..w {
            let (a, b) = ((i - 1) * w + j, i * w + j);
            let t = trans(a, b);
            if t > 0.0 {
                flux_y[i * w + j] = t * (internal[a] - internal[b]);
            }
        }
    }

    // Throughput: mean net flux per vertical cut. Summing every horizontal
    // face at once keeps the value identical for a design and its mirror.
    let throughput = exact_sum(&flux_x) / (w as f64 - 1.0);

    let pressure = internal
        .iter()
        .map(|&p| {
            if p.is_nan() {
                0.0
            } else {
                (p + 0.5).clamp(0.0, 1.0)
            }
        })
        .collect();

    Ok(FlowField {
        width: raster.width,
        height: raster.height,
        kappa,
        pressure,
        flux_x,
        flux_y,
        throughput,
        iterations,
        residual,
    })
}

impl FlowField {
    fn fx(&self, i: usize, j: usize) -> f64 {
        self.flux_x[i * (self.width as usize + 1) + j]
    }

    fn fy(&self, i: usize, j: usize) -> f64 {
        self.flux_y[i * self.width as usize + j]
    }

    /// Net inflow of a cell (zero on interior cells of a converged solve).
    pub fn net_inflow(&self, i: usize, j: usize) -> f64 {
        (self.fx(i, j) - self.fx(i, j + 1)) + (self.fy(i, j) - self.fy(i + 1, j))
    }

    /// Net flux crossing the vertical cut between columns j−1 and j.
    pub fn cut_flux(&self, j: usize) -> f64 {
        let h = self.height as usize;
        let mut s = ExactSum::new();
        for i in 0..h {
            s.add(self.fx(i, j));
        }
        s.value()
    }

    /// Cell-speed magnitude from face-averaged flux components.
    pub fn speed(&self, i: usize, j: usize) -> f64 {
        let ux = (self.fx(i, j) + self.fx(i, j + 1)) / 2.0;
        let uy = (self.fy(i, j) + self.fy(i + 1, j)) / 2.0;
        (ux * ux + uy * uy).sqrt()
    }

    /// Worst interior continuity violation relative to throughput.
    pub fn max_relative_imbalance(&self, raster: &RasterDesign) -> f64 {
        let (w, h) = (self.width as usize, self.height as usize);
        let mut worst = 0.0f64;
        for i in 0..h {
            for j in 1..w - 1 {
                if self.kappa[i * w + j] > 0.0 {
                    worst = worst.max(self.net_inflow(i, j).abs());
                }
            }
        }
        // Inlet/outlet columns: only unpinned conducting cells must balance.
        for i in 0..h {
            for &j in &[0, w - 1] {
                if self.kappa[i * w + j] > 0.0
                    && raster.classes[i * w + j] != CellClass::Fluid
                {
                    worst = worst.max(self.net_inflow(i, j).abs());
                }
            }
        }
        worst / self.throughput.abs().max(f64::MIN_POSITIVE)
    }
}

/// The central electrode band: the middle 50% of the raster width.
pub fn electrode_band(width: u32) -> std::ops::Range<u32> {
    width / 4..width - width / 4
}

/// Flow-uniformity and hydraulic-resistance objectives (both minimized).
pub fn objectives(field: &FlowField, raster: &RasterDesign) -> Result<(f64, f64), FlowError> {
    let q = field.throughput;
    if !q.is_finite() || q <= 0.0 {
        return Err(FlowError::ZeroThroughput);
    }
    let (w, h) = (field.width as usize, field.height as usize);
    let band = electrode_band(field.width);
    let mut speeds = Vec::new();
    for i in 0..h {
        for j in band.clone() {
            let j = j as usize;
            if raster.classes[i * w + j] == CellClass::Fluid {
                speeds.push(field.speed(i, j));
            }
        }
    }
    if speeds.is_empty() {
        return Err(FlowError::ZeroThroughput);
    }
    let n = speeds.len() as f64;
    let mean = exact_sum(&speeds) / n;
    if mean <= 0.0 {
        return Err(FlowError::ZeroThroughput);
    }
    let mut dev = ExactSum::new();
    for s in &speeds {
        let d = s - mean;
        dev.add(d * d);
    }
    let f1 = (dev.value() / n).sqrt() / mean;
    Ok((f1, 1.0 / q))
}

/// Debug dump: one row per cell with permeability, pressure and velocity.
pub fn field_csv(field: &FlowField) -> String {
    let (w, h) = (field.width as usize, field.height as usize);
    let mut out = String::from("row,col,kappa,pressure,ux,uy\n");
    for i in 0..h {
        for j in 0..w {
            let ux = (field.fx(i, j) + field.fx(i, j + 1)) / 2.0;
            let uy = (field.fy(i, j) + field.fy(i + 1, j)) / 2.0;
            out.push_str(&format!(
                "{i},{j},{},{},{},{}\n",
                field.kappa[i * w + j],
                field.pressure[i * w + j],
                ux,
                uy
            ));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::archetypes::{instantiate, sample_design_table, spec_of, ArchetypeId};
    use crate::raster::{mix, rasterize, Provenance};

    fn grid(w: u32, h: u32, fluid: impl Fn(u32, u32) -> bool) -> RasterDesign {
        let classes = (0..h)
            .flat_map(|i| (0..w).map(move |j| (i, j)))
            .map(|(i, j)| {
                if fluid(i, j) {
                    CellClass::Fluid
                } else {
                    CellClass::Solid
                }
            })
            .collect();
        RasterDesign {
            width: w,
            height: h,
            classes,
            provenance: Provenance {
                left_archetype: ArchetypeId::Prong2,
                left_row: 0,
                right_archetype: ArchetypeId::Prong2,
                right_row: 0,
            },
        }
    }

    fn corpus_design(id: ArchetypeId, seed: u64, res: u32) -> RasterDesign {
        let spec = spec_of(id);
        let t = sample_design_table(&spec, 2, seed).unwrap();
        let a = instantiate(&spec, &t.rows[0]).unwrap();
        let b = instantiate(&spec, &t.rows[1]).unwrap();
        rasterize(&mix(&a, &b.mirror()).unwrap(), res).unwrap()
    }

    /// Dense Gaussian-elimination solve of the same resistor network,
    /// assembled independently of the CG path.
    fn dense_oracle(raster: &RasterDesign) -> Vec<f64> {
        let (w, h) = (raster.width as usize, raster.height as usize);
        let kap: Vec<f64> = raster.classes.iter().map(|&c| permeability(c)).collect();
        let pin = |c: usize| -> Option<f64> {
            if raster.classes[c] == CellClass::Fluid {
                if c % w == 0 {
                    return Some(1.0);
                }
                if c % w == w - 1 {
                    return Some(0.0);
                }
            }
            None
        };
        let mut idx = vec![usize::MAX; w * h];
        let mut cells = Vec::new();
        for c in 0..w * h {
            if kap[c] > 0.0 && pin(c).is_none() {
                idx[c] = cells.len();
                cells.push(c);
            }
        }
        let n = cells.len();
        let mut a = vec![0.0f64; n * n];
        let mut b = vec![0.0f64; n];
        for (u, &c) in cells.iter().enumerate() {
            let (i, j) = (c / w, c % w);
            let mut nbs = Vec::new();
            if i > 0 {
                nbs.push(c - w);
            }
            if i + 1 < h {
                nbs.push(c + w);
            }
            if j > 0 {
                nbs.push(c - 1);
            }
            if j + 1 < w {
                nbs.push(c + 1);
            }
            for nc in nbs {
                let (ka, kb) = (kap[c], kap[nc]);
                if ka == 0.0 || kb == 0.0 {
                    continue;
                }
                let t = 2.0 * ka * kb / (ka + kb);
                a[u * n + u] += t;
                match pin(nc) {
                    Some(v) => b[u] += t * v,
                    None => a[u * n + idx[nc]] -= t,
                }
            }
        }
        // Gaussian elimination with partial pivoting.
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&r1, &r2| {
                    a[r1 * n + col]
                        .abs()
                        .partial_cmp(&a[r2 * n + col].abs())
                        .unwrap()
                })
                .unwrap();
            if piv != col {
                for k in 0..n {
                    a.swap(col * n + k, piv * n + k);
                }
                b.swap(col, piv);
            }
            let d = a[col * n + col];
            assert!(d.abs() > 1e-14, "singular oracle system");
            for row in col + 1..n {
                let f = a[row * n + col] / d;
                if f == 0.0 {
                    continue;
                }
                for k in col..n {
                    a[row * n + k] -= f * a[col * n + k];
                }
                b[row] -= f * b[col];
            }
        }
        let mut x = vec![0.0f64; n];
        for row in (0..n).rev() {
            let mut s = b[row];
            for k in row + 1..n {
                s -= a[row * n + k] * x[k];
            }
            x[row] = s / a[row * n + row];
        }
        let mut pressure = vec![0.0f64; w * h];
        for c in 0..w * h {
            if let Some(v) = pin(c) {
                pressure[c] = v;
            } else if idx[c] != usize::MAX {
                pressure[c] = x[idx[c]];
            }
        }
        pressure
    }

    #[test]
    fn all_fluid_channel_is_linear_and_uniform() {
        let d = grid(32, 32, |_, _| true);
        let f = solve_flow(&d).unwrap();
        for i in 0..32usize {
            for j in 0..32usize {
                let expect = 1.0 - j as f64 / 31.0;
                assert!(
                    (f.pressure[i * 32 + j] - expect).abs() < 1e-8,
                    "pressure at ({i},{j})"
                );
            }
        }
        let q0 = f.fx(0, 1);
        for i in 0..32usize {
            for j in 1..32usize {
                assert!((f.fx(i, j) - q0).abs() < 1e-10, "flux at ({i},{j})");
            }
        }
        assert!(f.flux_y.iter().all(|&v| v.abs() < 1e-10));
        let (f1, f2) = objectives(&f, &d).unwrap();
        assert!(f1 < 1e-6, "f1 = {f1}");
        assert!((f.throughput - 32.0 / 31.0).abs() < 1e-9);
        assert!((f2 - 31.0 / 32.0).abs() < 1e-9);
    }

    #[test]
    fn isolated_fluid_cells_do_not_break_the_solve() {
        // A straight channel plus a fluid cell walled in by solid: the
        // isolated cell must not enter the system (it would carry a zero
        // matrix row) and the channel must solve exactly as without it.
        let channel = grid(16, 16, |i, _| i == 8);
        let speckled = grid(16, 16, |i, j| i == 8 || (i, j) == (2, 5));
        let base = solve_flow(&channel).unwrap();
        let f = solve_flow(&speckled).unwrap();
        assert!((f.throughput - base.throughput).abs() < 1e-12);
        assert_eq!(f.pressure[2 * 16 + 5], 0.0, "isolated cell reports 0");
        for j in [5usize, 6] {
            assert_eq!(f.flux_x[2 * 17 + j], 0.0);
        }
        assert!(f.residual <= CG_TOLERANCE);
    }

    #[test]
    fn all_solid_is_infeasible() {
        let d = grid(16, 16, |_, _| false);
        assert!(matches!(solve_flow(&d), Err(FlowError::MissingInlet)));
        let half = grid(16, 16, |_, j| j < 4);
        assert!(matches!(solve_flow(&half), Err(FlowError::MissingOutlet)));
    }

    #[test]
    fn disconnected_inlet_outlet_gives_zero_throughput() {
        // Fluid on both edge columns but no path between them.
        let d = grid(16, 16, |_, j| j < 4 || j > 11);
        let f = solve_flow(&d).unwrap();
        let err = objectives(&f, &d);
        assert!(matches!(err, Err(FlowError::ZeroThroughput)));
    }

    #[test]
    fn disjoint_channels_split_by_conductance() {
        // Two separate straight channels, 2 and 6 rows wide. Row conductance
        // is proportional to width, so the flux split is exactly 1:3.
        let d = grid(32, 32, |i, _| (4..6).contains(&i) || (10..16).contains(&i));
        let f = solve_flow(&d).unwrap();
        let narrow: f64 = (4..6).map(|i| f.fx(i, 16)).sum();
        let wide: f64 = (10..16).map(|i| f.fx(i, 16)).sum();
        assert!((wide / narrow - 3.0).abs() < 1e-9, "split {}", wide / narrow);
        assert!((f.throughput - 8.0 / 31.0).abs() < 1e-9);
    }

    #[test]
    fn two_path_network_matches_dense_oracle() {
        // Shared inlet/outlet manifolds joined by channels of width 2 and 5.
        let d = grid(24, 24, |i, j| {
            let manifold = (2..22).contains(&i) && (j < 4 || j >= 20);
            let top = (3..5).contains(&i) && (4..20).contains(&j);
            let bottom = (15..20).contains(&i) && (4..20).contains(&j);
            manifold || top || bottom
        });
        let f = solve_flow(&d).unwrap();
        let oracle = dense_oracle(&d);
        for c in 0..oracle.len() {
            assert!(
                (f.pressure[c] - oracle[c]).abs() < 1e-8,
                "pressure mismatch at cell {c}"
            );
        }
        // Flux split across the mid cut, oracle vs solver, within 1%.
        let cut = 12usize;
        let channel_flux = |p: &dyn Fn(usize, usize) -> f64, rows: std::ops::Range<usize>| {
            rows.map(|i| {
                let t = 1.0; // fluid-fluid faces inside a channel
                t * (p(i, cut - 1) - p(i, cut))
            })
            .sum::<f64>()
        };
        let solver_p = |i: usize, j: usize| f.pressure[i * 24 + j];
        let oracle_p = |i: usize, j: usize| oracle[i * 24 + j];
        let (st, sb) = (
            channel_flux(&solver_p, 3..5),
            channel_flux(&solver_p, 15..20),
        );
        let (ot, ob) = (
            channel_flux(&oracle_p, 3..5),
            channel_flux(&oracle_p, 15..20),
        );
        assert!(sb > 2.0 * st, "wider channel should dominate");
        assert!(((st / sb) / (ot / ob) - 1.0).abs() < 0.01);
        assert!((f.cut_flux(cut) / (ot + ob) - 1.0).abs() < 0.01);
    }

    #[test]
    fn mirror_objectives_bitwise_identical() {
        for (id, seed) in [
            (ArchetypeId::Prong3, 5u64),
            (ArchetypeId::Prong5, 9),
            (ArchetypeId::InnerGeom, 3),
        ] {
            let d = corpus_design(id, seed, 32);
            let m = d.flip_horizontal();
            let (a1, a2) = objectives(&solve_flow(&d).unwrap(), &d).unwrap();
            let (b1, b2) = objectives(&solve_flow(&m).unwrap(), &m).unwrap();
            assert_eq!(a1.to_bits(), b1.to_bits(), "f1 for {id:?}");
            assert_eq!(a2.to_bits(), b2.to_bits(), "f2 for {id:?}");
        }
    }

    #[test]
    fn mass_conserved_across_all_cuts() {
        let d = corpus_design(ArchetypeId::Prong4, 11, 32);
        let f = solve_flow(&d).unwrap();
        let q = f.throughput;
        assert!(q > 0.0);
        for j in 1..32usize {
            assert!(
                (f.cut_flux(j) - q).abs() < 1e-8 * q,
                "cut {j}: {} vs {q}",
                f.cut_flux(j)
            );
        }
        assert!(f.max_relative_imbalance(&d) < 1e-8);
    }

    #[test]
    fn pressure_stays_in_unit_interval() {
        let d = corpus_design(ArchetypeId::Prong2, 1, 32);
        let f = solve_flow(&d).unwrap();
        for (c, &p) in f.pressure.iter().enumerate() {
            assert!((0.0..=1.0).contains(&p), "pressure {p} at {c}");
            if f.kappa[c] == 0.0 {
                assert_eq!(p, 0.0);
            }
        }
    }

    #[test]
    fn blocking_obstacle_increases_nonuniformity() {
        let open = grid(32, 32, |i, _| (8..24).contains(&i));
        let blocked = grid(32, 32, |i, j| {
            (8..24).contains(&i) && !((13..19).contains(&i) && (14..18).contains(&j))
        });
        let (o1, _) = objectives(&solve_flow(&open).unwrap(), &open).unwrap();
        let (b1, _) = objectives(&solve_flow(&blocked).unwrap(), &blocked).unwrap();
        assert!(
            b1 > o1 + 1e-6,
            "obstacle should raise f1: open {o1}, blocked {b1}"
        );
    }

    #[test]
    fn halving_channel_width_doubles_resistance() {
        let full = grid(32, 32, |i, _| (8..24).contains(&i));
        let half = grid(32, 32, |i, _| (12..20).contains(&i));
        let (_, r_full) = objectives(&solve_flow(&full).unwrap(), &full).unwrap();
        let (_, r_half) = objectives(&solve_flow(&half).unwrap(), &half).unwrap();
        let ratio = r_half / r_full;
        assert!((ratio - 2.0).abs() < 0.02 * 2.0, "ratio {ratio}");
    }

    #[test]
    fn refinement_changes_objectives_mildly() {
        // A wide smooth diverging channel: broad trunk into a wedge into the
        // cavity. Thin-channel designs are not smooth at these resolutions.
        use crate::geom::{rect, Polygon};
        let wedge = Polygon::new(vec![
            (0.12, 0.35),
            (0.57, 0.15),
            (0.57, 0.85),
            (0.12, 0.65),
        ])
        .unwrap();
        let half = crate::archetypes::HalfGeometry::new(
            ArchetypeId::InnerGeom,
            vec![],
            vec![
                rect(0.0, 0.35, 0.14, 0.65).unwrap(),
                wedge,
                rect(0.55, 0.06, 1.0, 0.94).unwrap(),
            ],
            vec![],
            false,
        )
        .unwrap();
        let full = mix(&half, &half.mirror()).unwrap();
        let coarse = rasterize(&full, 48).unwrap();
        let fine = rasterize(&full, 96).unwrap();
        let (c1, c2) = objectives(&solve_flow(&coarse).unwrap(), &coarse).unwrap();
        let (f1, f2) = objectives(&solve_flow(&fine).unwrap(), &fine).unwrap();
        assert!((f1 / c1 - 1.0).abs() < 0.05, "f1: {c1} -> {f1}");
        assert!((f2 / c2 - 1.0).abs() < 0.05, "f2: {c2} -> {f2}");
    }

    #[test]
    fn field_csv_dumps_every_cell() {
        let d = grid(16, 16, |i, _| (4..12).contains(&i));
        let f = solve_flow(&d).unwrap();
        let csv = field_csv(&f);
        assert_eq!(csv.lines().count(), 1 + 16 * 16);
        assert!(csv.starts_with("row,col,kappa,pressure,ux,uy\n"));
    }

    #[test]
    fn solve_on_boundary_skinned_corpus_design_converges() {
        let d = corpus_design(ArchetypeId::InnerGeom, 7, 32);
        let f = solve_flow(&d).unwrap();
        assert!(f.residual <= CG_TOLERANCE);
        assert!(f.iterations < 10 * 32 * 32);
        let (f1, f2) = objectives(&f, &d).unwrap();
        assert!(f1.is_finite() && f1 > 0.0);
        assert!(f2.is_finite() && f2 > 0.0);
    }
}

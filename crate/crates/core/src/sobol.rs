//! Sobol low-discrepancy sequence (Gray-code construction, direction numbers
//! from the Joe–Kuo D(6) tables) and rejection sampling of the latent ball.
//!
//! Supports up to 32 dimensions, which comfortably covers the 8-dimensional
//! latent space used throughout. Points are dyadic rationals, so sequences are
//! reproducible bit-for-bit across platforms.

#[derive(Debug, thiserror::Error)]
pub enum SobolError {
    #[error("sobol sequence supports 1..={max} dimensions, got {got}")]
    DimensionUnsupported { got: usize, max: usize },
    #[error("need at least one point")]
    EmptyRequest,
    #[error("radius must be positive, got {0}")]
    BadRadius(f64),
    #[error("ball rejection stalled: {accepted}/{needed} accepted after {attempts} candidates")]
    AcceptanceStall {
        accepted: usize,
        needed: usize,
        attempts: u64,
    },
}

pub const MAX_DIM: usize = 32;
const BITS: usize = 32;

/// Primitive polynomial bit masks for dimensions 2..=32 (dimension 1 is the
/// van der Corput sequence). Mask 0b1011 encodes x³ + x + 1, and so on.
const POLY: [u32; 31] = [
    3, 7, 11, 13, 19, 25, 37, 41, 47, 55, 59, 61, 67, 91, 97, 103, 109, 115, 131, 137, 143, 145,
    157, 167, 171, 185, 191, 193, 203, 211, 213,
];

/// Initial direction values m_1..m_s per dimension (all odd).
const M_INIT: [&[u32]; 31] = [
    &[1],
    &[1, 3],
    &[1, 3, 1],
    &[1, 1, 1],
    &[1, 1, 3, 3],
    &[1, 3, 5, 13],
    &[1, 1, 5, 5, 17],
    &[1, 1, 5, 5, 5],
    &[1, 1, 7, 11, 19],
    &[1, 1, 5, 1, 1],
    &[1, 1, 1, 3, 11],
    &[1, 3, 5, 5, 31],
    &[1, 3, 3, 9, 7, 49],
    &[1, 1, 1, 15, 21, 21],
    &[1, 3, 1, 13, 27, 49],
    &[1, 1, 1, 15, 7, 5],
    &[1, 3, 1, 15, 13, 25],
    &[1, 1, 5, 5, 19, 61],
    &[1, 3, 7, 11, 23, 15, 103],
    &[1, 3, 7, 13, 13, 15, 69],
    &[1, 1, 3, 13, 7, 35, 63],
    &[1, 3, 5, 9, 1, 25, 53],
    &[1, 3, 1, 13, 9, 35, 107],
    &[1, 3, 1, 5, 27, 61, 31],
    &[1, 1, 5, 11, 19, 41, 61],
    &[1, 3, 5, 3, 3, 13, 69],
    &[1, 1, 7, 13, 1, 19, 1],
    &[1, 3, 7, 5, 13, 19, 59],
    &[1, 1, 3, 9, 25, 29, 41],
    &[1, 3, 5, 13, 23, 1, 55],
    &[1, 3, 7, 3, 13, 59, 17],
];

pub struct SobolSequence {
    dims: usize,
    /// Direction numbers, `v[dim][bit]`, scaled by 2³².
    v: Vec<[u32; BITS]>,
    /// State of the point about to be returned.
    state: Vec<u32>,
    index: u64,
}

impl SobolSequence {
    pub fn new(dims: usize) -> Result<SobolSequence, SobolError> {
        if dims == 0 || dims > MAX_DIM {
            return Err(SobolError::DimensionUnsupported {
                got: dims,
                max: MAX_DIM,
            });
        }
        let mut v = Vec::with_capacity(dims);
        // Dimension 1: van der Corput in base 2.
        let mut first = [0u32; BITS];
        for (k, slot) in first.iter_mut().enumerate() {
            *slot = 1u32 << (BITS - 1 - k);
        }
        v.push(first);
        for dim in 1..dims {
            let poly = POLY[dim - 1];
            let m = M_INIT[dim - 1];
            let s = m.len();
            let mut dir = [0u32; BITS];
            for k in 0..s {
                dir[k] = m[k] << (BITS - 1 - k);
            }
            for k in s..BITS {
                let mut val = dir[k - s] ^ (dir[k - s] >> s);
                for i in 1..s {
                    if (poly >> (s - i)) & 1 == 1 {
                        val ^= dir[k - i];
                    }
                }
                dir[k] = val;
            }
            v.push(dir);
        }
        Ok(SobolSequence {
            dims,
            v,
            state: vec![0; dims],
            index: 0,
        })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    /// Jump directly to an arbitrary index (Gray-code composition).
    pub fn seek(&mut self, index: u64) {
        let gray = index ^ (index >> 1);
        for (dim, slot) in self.state.iter_mut().enumerate() {
            let mut acc = 0u32;
            for bit in 0..BITS.min(64) {
                if (gray >> bit) & 1 == 1 {
                    acc ^= self.v[dim][bit];
                }
            }
            *slot = acc;
        }
        self.index = index;
    }

    /// Write the next point into `out` (length `dims`).
    pub fn fill_next(&mut self, out: &mut [f64]) {
        assert_eq!(out.len(), self.dims);
        const SCALE: f64 = 1.0 / (1u64 << 32) as f64;
        for (o, s) in out.iter_mut().zip(&self.state) {
            *o = *s as f64 * SCALE;
        }
        // Advance: flip the direction number of the lowest zero bit of the
        // index just consumed (Antonov–Saleev).
        let bit = (!self.index).trailing_zeros() as usize;
        if bit < BITS {
            for dim in 0..self.dims {
                self.state[dim] ^= self.v[dim][bit];
            }
        }
        self.index += 1;
    }

    pub fn next_point(&mut self) -> Vec<f64> {
        let mut out = vec![0.0; self.dims];
        self.fill_next(&mut out);
        out
    }
}

const STALL_LIMIT: u64 = 10_000_000;

/// Space-filling design on the ball ‖x‖₂ ≤ radius: Sobol points scaled to
/// [−radius, radius]^d with rejection of the corners. `seed` offsets the
/// start index within the (origin-skipping) sequence, so distinct seeds give
/// distinct deterministic designs.
pub fn sobol_ball_doe(
    d: usize,
    n: usize,
    radius: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>, SobolError> {
    if n == 0 {
        return Err(SobolError::EmptyRequest);
    }
    if !radius.is_finite() || radius <= 0.0 {
        return Err(SobolError::BadRadius(radius));
    }
    let mut seq = SobolSequence::new(d)?;
    seq.seek(1 + seed);
    let mut unit = vec![0.0; d];
    let mut accepted = Vec::with_capacity(n);
    let mut attempts = 0u64;
    while accepted.len() < n {
        if attempts > STALL_LIMIT {
            return Err(SobolError::AcceptanceStall {
                accepted: accepted.len(),
                needed: n,
                attempts,
            });
        }
        seq.fill_next(&mut unit);
        attempts += 1;
        let point: Vec<f64> = unit.iter().map(|u| (2.0 * u - 1.0) * radius).collect();
        let sumsq: f64 = point.iter().map(|x| x * x).sum();
        if sumsq <= radius * radius {
            accepted.push(point);
        }
    }
    Ok(accepted)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_dimensional_prefix_matches_published_sequence() {
        let expect: [[f64; 3]; 8] = [
            [0.0, 0.0, 0.0],
            [0.5, 0.5, 0.5],
            [0.75, 0.25, 0.25],
            [0.25, 0.75, 0.75],
            [0.375, 0.375, 0.625],
            [0.875, 0.875, 0.125],
            [0.625, 0.125, 0.875],
            [0.125, 0.625, 0.375],
        ];
        let mut seq = SobolSequence::new(3).unwrap();
        for row in expect {
            assert_eq!(seq.next_point(), row);
        }
    }

    #[test]
    fn full_width_prefix_matches_reference_values() {
        // First eight points at the maximum supported dimension.
        let expect: [[f64; MAX_DIM]; 8] = [
            [0.0; 32],
            [0.5; 32],
            [
                0.75, 0.25, 0.25, 0.25, 0.75, 0.75, 0.25, 0.75, 0.75, 0.75, 0.75, 0.75, 0.25,
                0.25, 0.75, 0.25, 0.75, 0.25, 0.75, 0.25, 0.25, 0.75, 0.25, 0.25, 0.25, 0.75,
                0.25, 0.75, 0.25, 0.75, 0.25, 0.25,
            ],
            [
                0.25, 0.75, 0.75, 0.75, 0.25, 0.25, 0.75, 0.25, 0.25, 0.25, 0.25, 0.25, 0.75,
                0.75, 0.25, 0.75, 0.25, 0.75, 0.25, 0.75, 0.75, 0.25, 0.75, 0.75, 0.75, 0.25,
                0.75, 0.25, 0.75, 0.25, 0.75, 0.75,
            ],
            [
                0.375, 0.375, 0.625, 0.875, 0.375, 0.125, 0.375, 0.875, 0.875, 0.625, 0.875,
                0.375, 0.375, 0.625, 0.375, 0.875, 0.375, 0.875, 0.875, 0.125, 0.125, 0.125,
                0.375, 0.875, 0.875, 0.875, 0.375, 0.625, 0.125, 0.125, 0.375, 0.125,
            ],
            [
                0.875, 0.875, 0.125, 0.375, 0.875, 0.625, 0.875, 0.375, 0.375, 0.125, 0.375,
                0.875, 0.875, 0.125, 0.875, 0.375, 0.875, 0.375, 0.375, 0.625, 0.625, 0.625,
                0.875, 0.375, 0.375, 0.375, 0.875, 0.125, 0.625, 0.625, 0.875, 0.625,
            ],
            [
                0.625, 0.125, 0.875, 0.625, 0.625, 0.875, 0.125, 0.125, 0.125, 0.375, 0.125,
                0.625, 0.125, 0.875, 0.625, 0.625, 0.625, 0.625, 0.125, 0.375, 0.375, 0.875,
                0.125, 0.625, 0.625, 0.125, 0.125, 0.375, 0.375, 0.875, 0.125, 0.375,
            ],
            [
                0.125, 0.625, 0.375, 0.125, 0.125, 0.375, 0.625, 0.625, 0.625, 0.875, 0.625,
                0.125, 0.625, 0.375, 0.125, 0.125, 0.125, 0.125, 0.625, 0.875, 0.875, 0.375,
                0.625, 0.125, 0.125, 0.625, 0.625, 0.875, 0.875, 0.375, 0.625, 0.875,
            ],
        ];
        let mut seq = SobolSequence::new(MAX_DIM).unwrap();
        for row in expect {
            assert_eq!(seq.next_point(), row);
        }
    }

    #[test]
    fn deep_index_matches_reference_values() {
        // Point index 1000 at d = 8 exercises the direction-number recurrence
        // well past the tabulated initial values.
        let expect = [
            0.2197265625,
            0.0966796875,
            0.5185546875,
            0.6767578125,
            0.2802734375,
            0.9072265625,
            0.0458984375,
            0.8994140625,
        ];
        let mut seq = SobolSequence::new(8).unwrap();
        seq.seek(1000);
        assert_eq!(seq.next_point(), expect);
        // Sequential generation reaches the same point.
        let mut walk = SobolSequence::new(8).unwrap();
        let mut last = vec![0.0; 8];
        for _ in 0..=1000 {
            last = walk.next_point();
        }
        assert_eq!(last, expect);
    }

    #[test]
    fn every_dimension_fills_dyadic_bins_exactly_once() {
        let mut seq = SobolSequence::new(MAX_DIM).unwrap();
        let n = 256usize;
        let mut hits = vec![[0u32; 256]; MAX_DIM];
        for _ in 0..n {
            let p = seq.next_point();
            for (dim, v) in p.iter().enumerate() {
                let bin = (v * n as f64) as usize;
                hits[dim][bin] += 1;
            }
        }
        for (dim, row) in hits.iter().enumerate() {
            for (bin, count) in row.iter().enumerate() {
                assert_eq!(*count, 1, "dim {dim} bin {bin} hit {count} times");
            }
        }
    }

    #[test]
    fn ball_doe_respects_norm_bound_and_is_deterministic() {
        let a = sobol_ball_doe(8, 20, 2.0, 0).unwrap();
        assert_eq!(a.len(), 20);
        for p in &a {
            assert_eq!(p.len(), 8);
            let sumsq: f64 = p.iter().map(|x| x * x).sum();
            assert!(sumsq <= 4.0, "norm² {sumsq} exceeds radius²");
        }
        let b = sobol_ball_doe(8, 20, 2.0, 0).unwrap();
        assert_eq!(a, b);
        let c = sobol_ball_doe(8, 20, 2.0, 1).unwrap();
        assert_ne!(a, c);
        // Distinct accepted points.
        for i in 0..a.len() {
            for j in i + 1..a.len() {
                assert_ne!(a[i], a[j]);
            }
        }
    }

    #[test]
    fn acceptance_fraction_matches_ball_to_cube_volume_ratio() {
        // Analytic ratio at d=8 is π⁴/24 / 2⁸ ≈ 0.0159.
        let mut seq = SobolSequence::new(8).unwrap();
        seq.seek(1);
        let mut unit = vec![0.0; 8];
        let mut accepted = 0u32;
        let total = 100_000;
        for _ in 0..total {
            seq.fill_next(&mut unit);
            let sumsq: f64 = unit
                .iter()
                .map(|u| {
                    let x = (2.0 * u - 1.0) * 2.0;
                    x * x
                })
                .sum();
            if sumsq <= 4.0 {
                accepted += 1;
            }
        }
        assert_eq!(accepted, 1607);
        let fraction = accepted as f64 / total as f64;
        assert!(
            (0.013..=0.019).contains(&fraction),
            "acceptance fraction {fraction}"
        );
    }

    #[test]
    fn hopeless_acceptance_stalls_with_error() {
        let err = sobol_ball_doe(24, 5, 1.0, 0).unwrap_err();
        assert!(matches!(err, SobolError::AcceptanceStall { .. }));
    }

    #[test]
    fn invalid_arguments_are_rejected() {
        assert!(matches!(
            SobolSequence::new(0),
            Err(SobolError::DimensionUnsupported { .. })
        ));
        assert!(matches!(
            SobolSequence::new(33),
            Err(SobolError::DimensionUnsupported { .. })
        ));
        assert!(matches!(
            sobol_ball_doe(8, 0, 2.0, 0),
            Err(SobolError::EmptyRequest)
        ));
        assert!(matches!(
            sobol_ball_doe(8, 5, 0.0, 0),
            Err(SobolError::BadRadius(_))
        ));
    }
}

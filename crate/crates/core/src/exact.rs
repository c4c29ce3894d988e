//! Order-independent f64 summation.
//!
//! A Shewchuk expansion keeps a running sum as a list of non-overlapping f64
//! components whose exact sum equals the exact sum of everything added so far.
//! The rounded result therefore does not depend on the order terms arrive in —
//! which is what makes t-SNE's permutation-equivariance contract hold at the
//! bit level (plain `+` accumulation is order-sensitive).
//!
//! Cost: a handful of two-sums per add for well-scaled inputs; the component
//! list stays short (typically ≤ 4) unless terms span many magnitudes.

/// Error-free transform: returns (s, e) with s = fl(a + b) and a + b = s + e
/// exactly. Knuth's TwoSum; no branch on magnitudes.
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bv = s - a;
    let av = s - bv;
    let e = (a - av) + (b - bv);
    (s, e)
}

/// Exact accumulator for f64 values.
#[derive(Clone, Debug, Default)]
pub struct ExactSum {
    parts: Vec<f64>,
}

impl ExactSum {
    pub fn new() -> Self {
        ExactSum { parts: Vec::new() }
    }

    /// Add one term. Grows the expansion, eliminating zeros as it goes.
    #[inline]
    pub fn add(&mut self, x: f64) {
        let mut x = x;
        let mut out = 0;
        for i in 0..self.parts.len() {
            let (s, e) = two_sum(x, self.parts[i]);
            if e != 0.0 {
                self.parts[out] = e;
                out += 1;
            }
            x = s;
        }
        self.parts.truncate(out);
        if x != 0.0 {
            self.parts.push(x);
        }
    }

    /// Correctly rounded value of the accumulated sum.
    ///
    /// The components are non-overlapping and stored in increasing magnitude,
    /// so summing them smallest-first commits each low-order bit before the
    /// next component can mask it; for non-overlapping expansions this yields
    /// the correctly rounded total.
    pub fn value(&self) -> f64 {
        let mut acc = 0.0;
        for &p in &self.parts {
            acc += p;
        }
        acc
    }
}

/// Sum of a slice, independent of element order.
pub fn exact_sum(xs: &[f64]) -> f64 {
    let mut acc = ExactSum::new();
    for &x in xs {
        acc.add(x);
    }
    acc.value()
}

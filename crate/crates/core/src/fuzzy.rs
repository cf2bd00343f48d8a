//! Mamdani fuzzy inference with triangular membership functions.
//!
//! Variables partition their universe into evenly spaced symmetric triangles
//! whose edges saturate into shoulders, so every crisp value activates at
//! least one set. Rules fire at the min of their two input memberships;
//! identical output centers merge at the max. Defuzzification is the center
//! of gravity of the clipped output sets, aggregated per set (the overlap of
//! neighbouring clipped triangles is not deduplicated).

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FuzzyError {
    #[error("rule base grid must be {expected} values, got {got}")]
    GridShape { expected: usize, got: usize },
    #[error("invalid number in rule base grid: {0}")]
    GridValue(String),
}

/// Memberships at or below this level count as inactive; it absorbs the
/// rounding slivers that would otherwise activate a neighbour set when an
/// input sits exactly on a partition grid point.
pub const ACTIVATION_FLOOR: f64 = 1e-9;

/// Symmetric triangular membership function. Edge sets keep membership 1
/// beyond their center (saturating shoulders).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangularMf {
    pub center: f64,
    pub half_width: f64,
    pub saturate_low: bool,
    pub saturate_high: bool,
}

impl TriangularMf {
    pub fn membership(&self, x: f64) -> f64 {
        if self.saturate_low && x <= self.center {
            return 1.0;
        }
        if self.saturate_high && x >= self.center {
            return 1.0;
        }
        (1.0 - (x - self.center).abs() / self.half_width).max(0.0)
    }
}

/// A scalar fuzzy variable: an ordered uniform partition of `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyVariable {
    mfs: Vec<TriangularMf>,
    lo: f64,
    hi: f64,
}

impl FuzzyVariable {
    /// `count` evenly spaced triangles over `[lo, hi]`, neighbours crossing
    /// at membership 0.5, shoulders at both ends.
    pub fn uniform(count: usize, lo: f64, hi: f64) -> Self {
        assert!(count >= 2 && hi > lo);
        let span = hi - lo;
        let spacing = span / (count - 1) as f64;
        let mfs = (0..count)
            .map(|i| TriangularMf {
                // i/(n-1) keeps symmetric ranges exact (the middle center of
                // an odd partition of [-a, a] is exactly 0).
                center: lo + span * (i as f64 / (count - 1) as f64),
                half_width: spacing,
                saturate_low: i == 0,
                saturate_high: i == count - 1,
            })
            .collect();
        Self { mfs, lo, hi }
    }

    pub fn len(&self) -> usize {
        self.mfs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mfs.is_empty()
    }

    pub fn membership_functions(&self) -> &[TriangularMf] {
        &self.mfs
    }

    /// Memberships of all sets with nonzero activation at the (clamped)
    /// crisp input. A triangular partition activates at most two. Activations
    /// below [`ACTIVATION_FLOOR`] count as zero, so inputs sitting exactly on
    /// a grid point activate a single set despite rounding.
    pub fn fuzzify(&self, crisp: f64) -> Vec<(usize, f64)> {
        let x = crisp.clamp(self.lo, self.hi);
        self.mfs
            .iter()
            .enumerate()
            .filter_map(|(i, mf)| {
                let mu = mf.membership(x);
                (mu > ACTIVATION_FLOOR).then_some((i, mu))
            })
            .collect()
    }
}

/// A two-input rule base: a dense grid of output membership centers indexed
/// by (input-1 set, input-2 set).
#[derive(Debug, Clone, PartialEq)]
pub struct RuleBase2d {
    rows: usize,
    cols: usize,
    centers: Vec<f64>,
}

impl RuleBase2d {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            centers: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map(Vec::len).unwrap_or(0);
        assert!(rows.iter().all(|r| r.len() == cols));
        Self {
            rows: rows.len(),
            cols,
            centers: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.centers[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.centers[row * self.cols + col] = value;
    }

    /// Adds `delta` to one center and clamps it to [-1, 1].
    pub fn shift_clamped(&mut self, row: usize, col: usize, delta: f64) {
        let v = (self.get(row, col) + delta).clamp(-1.0, 1.0);
        self.set(row, col, v);
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// The 3x3 PD-like base shared by all direct fuzzy loops, on linguistic
    /// values Negative (-1), Zero (0), Positive (+1); rows index the error,
    /// columns the error rate.
    pub fn pd_3x3() -> Self {
        const N: f64 = -1.0;
        const Z: f64 = 0.0;
        const P: f64 = 1.0;
        Self::from_rows(&[vec![N, N, Z], vec![N, Z, P], vec![Z, P, P]])
    }

    /// Fixed 11x11 knowledge base of the learning controller's inverse model.
    /// Rows index the model-tracking error, columns its rate.
    pub fn inverse_model_11x11() -> Self {
        Self::from_rows(&[
            vec![-1.0, -1.0, -1.0, -1.0, -1.0, -1.0, -0.8, -0.6, -0.4, -0.2, 0.0],
            vec![-1.0, -1.0, -1.0, -1.0, -1.0, -0.8, -0.6, -0.4, -0.2, 0.0, 0.2],
            vec![-1.0, -1.0, -1.0, -1.0, -0.8, -0.6, -0.4, -0.2, 0.0, 0.2, 0.4],
            vec![-1.0, -1.0, -1.0, -0.8, -0.6, -0.4, -0.2, 0.0, 0.2, 0.4, 0.6],
            vec![-1.0, -1.0, -0.8, -0.6, -0.4, -0.2, 0.0, 0.2, 0.4, 0.6, 0.8],
            vec![-1.0, -0.8, -0.6, -0.4, -0.2, 0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
            vec![-0.8, -0.6, -0.4, -0.2, 0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.0],
            vec![-0.6, -0.4, -0.2, 0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.0, 1.0],
            vec![-0.4, -0.2, 0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.0, 1.0, 1.0],
            vec![-0.2, 0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.0, 1.0, 1.0, 1.0],
            vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
        ])
    }

    /// Serializes the grid as plain text: one row per line, space-separated.
    pub fn to_grid_string(&self) -> String {
        let mut out = String::new();
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| self.get(r, c).to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parses a grid written by [`to_grid_string`]; the shape must match.
    pub fn from_grid_string(text: &str, rows: usize, cols: usize) -> Result<Self, FuzzyError> {
        let mut centers = Vec::with_capacity(rows * cols);
        for token in text.split_whitespace() {
            let v: f64 = token
                .parse()
                .map_err(|_| FuzzyError::GridValue(token.to_string()))?;
            centers.push(v);
        }
        if centers.len() != rows * cols {
            return Err(FuzzyError::GridShape {
                expected: rows * cols,
                got: centers.len(),
            });
        }
        Ok(Self {
            rows,
            cols,
            centers,
        })
    }
}

/// One clipped output set: its center and firing degree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClippedSet {
    pub center: f64,
    pub degree: f64,
}

/// Fires every rule activated by the two fuzzified inputs: firing strength is
/// the min of the memberships, and rules sharing an output center merge at
/// the max of their strengths.
pub fn infer(
    rules: &RuleBase2d,
    input1: &[(usize, f64)],
    input2: &[(usize, f64)],
) -> Vec<ClippedSet> {
    let mut sets: Vec<ClippedSet> = Vec::with_capacity(input1.len() * input2.len());
    for &(i, mu1) in input1 {
        for &(j, mu2) in input2 {
            let degree = mu1.min(mu2);
            if degree <= 0.0 {
                continue;
            }
            let center = rules.get(i, j);
            match sets.iter_mut().find(|s| s.center == center) {
                Some(existing) => existing.degree = existing.degree.max(degree),
                None => sets.push(ClippedSet { center, degree }),
            }
        }
    }
    sets
}

/// Center of gravity of the clipped symmetric-triangle output sets, each of
/// full base width `base_width`. A symmetric triangle clipped at height h has
/// area (w/2) h (2 - h) centered on its peak, so the aggregate is the
/// area-weighted mean of the centers. Returns the flag when no set is active.
pub fn defuzzify_cog(sets: &[ClippedSet], base_width: f64) -> (f64, bool) {
    let mut weighted = 0.0;
    let mut total = 0.0;
    for set in sets {
        let h = set.degree.clamp(0.0, 1.0);
        let area = 0.5 * base_width * h * (2.0 - h);
        weighted += area * set.center;
        total += area;
    }
    if total == 0.0 {
        (0.0, true)
    } else {
        (weighted / total, false)
    }
}

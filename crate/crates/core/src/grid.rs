//! Finite windows of the mesh `Z_h = {jh : j ∈ Z}` and sampled functions on them.

use serde::Serialize;

use crate::error::{invalid, Result};

/// Which neighbours a one-sided operator looks at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Side {
    /// Looks at `n, n+1, n+2, …`.
    Right,
    /// Looks at `n, n-1, n-2, …`.
    Left,
}

impl Side {
    pub fn mirror(self) -> Side {
        match self {
            Side::Right => Side::Left,
            Side::Left => Side::Right,
        }
    }
}

/// Mesh step `h` and the index window `n_min..=n_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    h: f64,
    n_min: i64,
    n_max: i64,
}

impl Grid {
    pub fn new(h: f64, n_min: i64, n_max: i64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(invalid(format!("mesh step must be positive, got {h}")));
        }
        if n_min > n_max {
            return Err(invalid(format!("empty window {n_min}..={n_max}")));
        }
        Ok(Grid { h, n_min, n_max })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n_min(&self) -> i64 {
        self.n_min
    }

    pub fn n_max(&self) -> i64 {
        self.n_max
    }

    pub fn len(&self) -> usize {
        (self.n_max - self.n_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, n: i64) -> bool {
        n >= self.n_min && n <= self.n_max
    }

    pub fn position(&self, n: i64) -> Option<usize> {
        self.contains(n).then(|| (n - self.n_min) as usize)
    }

    pub fn indices(&self) -> impl Iterator<Item = i64> {
        self.n_min..=self.n_max
    }

    /// Physical coordinate `n·h`.
    pub fn point(&self, n: i64) -> f64 {
        n as f64 * self.h
    }

    pub fn padded(&self, left: usize, right: usize) -> Grid {
        Grid {
            h: self.h,
            n_min: self.n_min - left as i64,
            n_max: self.n_max + right as i64,
        }
    }

    pub fn with_h(&self, h: f64) -> Result<Grid> {
        Grid::new(h, self.n_min, self.n_max)
    }
}

/// What a function is assumed to do outside its window, on one side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Extension {
    /// Zero beyond the window.
    ZeroOutside,
    /// The edge sample repeated forever.
    Constant,
    /// Unknown values bounded by `c·|n|^{-p}`; treated as zero plus a certified bound.
    Decay { p: f64, c: f64 },
    /// Nothing is known. Outputs depending on these values are flagged invalid.
    Undefined,
}

impl Extension {
    pub fn decay(p: f64, c: f64) -> Result<Self> {
        if !(p > 0.0 && p.is_finite()) || !(c >= 0.0 && c.is_finite()) {
            return Err(invalid(format!(
                "decay extension needs p > 0 and c >= 0, got p={p}, c={c}"
            )));
        }
        Ok(Extension::Decay { p, c })
    }
}

/// Samples `u(nh)` on a window, the tail model on each side, and a per-index
/// validity flag.
///
/// Operator outputs whose value at an index depends on unknown data beyond
/// tolerance carry `valid = false` there; identities are only checked on
/// valid indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFunction {
    grid: Grid,
    samples: Vec<f64>,
    left: Extension,
    right: Extension,
    valid: Vec<bool>,
}

impl GridFunction {
    pub fn new(grid: Grid, samples: Vec<f64>, extension: Extension) -> Result<Self> {
        Self::with_tails(grid, samples, extension, extension)
    }

    pub fn with_tails(grid: Grid, samples: Vec<f64>, left: Extension, right: Extension) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(invalid(format!(
                "{} samples for a window of {} points",
                samples.len(),
                grid.len()
            )));
        }
        for ext in [left, right] {
            if let Extension::Decay { p, c } = ext {
                Extension::decay(p, c)?;
            }
        }
        let valid = vec![true; samples.len()];
        Ok(GridFunction {
            grid,
            samples,
            left,
            right,
            valid,
        })
    }

    /// Samples `f(nh)` on the window.
    pub fn from_fn(grid: Grid, extension: Extension, f: impl Fn(f64) -> f64) -> Result<Self> {
        let samples = grid.indices().map(|n| f(grid.point(n))).collect();
        Self::new(grid, samples, extension)
    }

    /// `u(nh) = 1` at `n = at`, zero elsewhere (including outside the window).
    pub fn impulse(grid: Grid, at: i64) -> Result<Self> {
        let pos = grid
            .position(at)
            .ok_or_else(|| invalid(format!("impulse index {at} outside window")))?;
        let mut samples = vec![0.0; grid.len()];
        samples[pos] = 1.0;
        Self::new(grid, samples, Extension::ZeroOutside)
    }

    pub fn zeros(grid: Grid) -> Self {
        GridFunction {
            grid,
            samples: vec![0.0; grid.len()],
            left: Extension::ZeroOutside,
            right: Extension::ZeroOutside,
            valid: vec![true; grid.len()],
        }
    }

    pub(crate) fn from_parts(
        grid: Grid,
        samples: Vec<f64>,
        left: Extension,
        right: Extension,
        valid: Vec<bool>,
    ) -> Self {
        debug_assert_eq!(samples.len(), grid.len());
        debug_assert_eq!(valid.len(), grid.len());
        GridFunction {
            grid,
            samples,
            left,
            right,
            valid,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn h(&self) -> f64 {
        self.grid.h
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn extension(&self, side: Side) -> Extension {
        match side {
            Side::Left => self.left,
            Side::Right => self.right,
        }
    }

    pub fn left_extension(&self) -> Extension {
        self.left
    }

    pub fn right_extension(&self) -> Extension {
        self.right
    }

    pub fn with_extension(mut self, extension: Extension) -> Self {
        self.left = extension;
        self.right = extension;
        self
    }

    pub fn with_extensions(mut self, left: Extension, right: Extension) -> Self {
        self.left = left;
        self.right = right;
        self
    }

    pub fn with_validity(mut self, valid: Vec<bool>) -> Result<Self> {
        if valid.len() != self.samples.len() {
            return Err(invalid("validity mask length mismatch"));
        }
        self.valid = valid;
        Ok(self)
    }

    /// Sample at index `n` inside the window.
    pub fn at(&self, n: i64) -> Option<f64> {
        self.grid.position(n).map(|p| self.samples[p])
    }

    pub fn is_valid_at(&self, n: i64) -> bool {
        self.grid.position(n).is_some_and(|p| self.valid[p])
    }

    pub fn all_valid(&self) -> bool {
        self.valid.iter().all(|&v| v)
    }

    /// Value at any `n` the tail model determines exactly: window samples,
    /// zero tails, and constant tails. `None` for decay and undefined tails.
    pub fn value(&self, n: i64) -> Option<f64> {
        if let Some(v) = self.at(n) {
            return Some(v);
        }
        let (ext, edge) = if n > self.grid.n_max {
            (self.right, *self.samples.last().unwrap())
        } else {
            (self.left, self.samples[0])
        };
        match ext {
            Extension::ZeroOutside => Some(0.0),
            Extension::Constant => Some(edge),
            Extension::Decay { .. } | Extension::Undefined => None,
        }
    }

    /// Edge value on `side` when that tail is constant, zero for zero tails.
    pub(crate) fn tail_constant(&self, side: Side) -> Option<f64> {
        match (side, self.extension(side)) {
            (_, Extension::ZeroOutside) => Some(0.0),
            (Side::Right, Extension::Constant) => self.samples.last().copied(),
            (Side::Left, Extension::Constant) => self.samples.first().copied(),
            _ => None,
        }
    }

    /// `max |u|` over valid window points.
    pub fn max_abs(&self) -> f64 {
        self.samples
            .iter()
            .zip(&self.valid)
            .filter(|(_, &ok)| ok)
            .map(|(v, _)| v.abs())
            .fold(0.0, f64::max)
    }

    /// Smallest and largest index with a nonzero sample.
    pub fn support(&self) -> Option<(i64, i64)> {
        let first = self.samples.iter().position(|&v| v != 0.0)?;
        let last = self.samples.iter().rposition(|&v| v != 0.0)?;
        Some((self.grid.n_min + first as i64, self.grid.n_min + last as i64))
    }

    /// Both tails are exactly zero (constant tails with a zero edge count).
    pub fn is_compactly_supported(&self) -> bool {
        self.tail_constant(Side::Left) == Some(0.0) && self.tail_constant(Side::Right) == Some(0.0)
    }

    /// Reflection `n ↦ -n`. Swaps the tails.
    pub fn reflect(&self) -> GridFunction {
        let grid = Grid {
            h: self.grid.h,
            n_min: -self.grid.n_max,
            n_max: -self.grid.n_min,
        };
        let mut samples = self.samples.clone();
        samples.reverse();
        let mut valid = self.valid.clone();
        valid.reverse();
        GridFunction {
            grid,
            samples,
            left: self.right,
            right: self.left,
            valid,
        }
    }

    /// `v(n) = u(n - k)`: the same samples on the window shifted by `k`.
    pub fn translate(&self, k: i64) -> GridFunction {
        let mut out = self.clone();
        out.grid.n_min += k;
        out.grid.n_max += k;
        out
    }

    /// Same samples read on mesh step `h`.
    pub fn with_h(&self, h: f64) -> Result<GridFunction> {
        let mut out = self.clone();
        out.grid = self.grid.with_h(h)?;
        Ok(out)
    }

    pub fn scale(&self, c: f64) -> GridFunction {
        let mut out = self.clone();
        out.samples.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// `a·self + b·other` on a shared window. Tails must agree.
    pub fn linear_combination(&self, a: f64, other: &GridFunction, b: f64) -> Result<GridFunction> {
        if self.grid != other.grid {
            return Err(invalid("linear combination needs identical windows"));
        }
        let left = if self.left == other.left {
            self.left
        } else {
            Extension::Undefined
        };
        let right = if self.right == other.right {
            self.right
        } else {
            Extension::Undefined
        };
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(x, y)| a * x + b * y)
            .collect();
        let valid = self.valid.iter().zip(&other.valid).map(|(&p, &q)| p && q).collect();
        Ok(GridFunction::from_parts(self.grid, samples, left, right, valid))
    }

    /// Extends the window by the given counts, filling from the tail models.
    /// Fails when a tail does not determine the new values.
    pub fn padded(&self, left: usize, right: usize) -> Result<GridFunction> {
        let grid = self.grid.padded(left, right);
        let mut samples = Vec::with_capacity(grid.len());
        let mut valid = Vec::with_capacity(grid.len());
        for n in grid.indices() {
            match self.grid.position(n) {
                Some(p) => {
                    samples.push(self.samples[p]);
                    valid.push(self.valid[p]);
                }
                None => {
                    let v = self
                        .value(n)
                        .ok_or_else(|| invalid("cannot pad a window whose tail is not exactly known"))?;
                    samples.push(v);
                    valid.push(true);
                }
            }
        }
        Ok(GridFunction::from_parts(grid, samples, self.left, self.right, valid))
    }

    /// Sub-window `n_min..=n_max`. Tails become undefined unless the cut is at
    /// the original edge.
    pub fn restrict(&self, n_min: i64, n_max: i64) -> Result<GridFunction> {
        if !(self.grid.contains(n_min) && self.grid.contains(n_max)) || n_min > n_max {
            return Err(invalid("restriction window must lie inside the original"));
        }
        let grid = Grid::new(self.grid.h, n_min, n_max)?;
        let a = (n_min - self.grid.n_min) as usize;
        let b = (n_max - self.grid.n_min) as usize;
        let left = if n_min == self.grid.n_min {
            self.left
        } else {
            Extension::Undefined
        };
        let right = if n_max == self.grid.n_max {
            self.right
        } else {
            Extension::Undefined
        };
        Ok(GridFunction::from_parts(
            grid,
            self.samples[a..=b].to_vec(),
            left,
            right,
            self.valid[a..=b].to_vec(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(Grid::new(0.0, 0, 1).is_err());
        assert!(Grid::new(-1.0, 0, 1).is_err());
        assert!(Grid::new(1.0, 2, 1).is_err());
        let g = Grid::new(0.5, -2, 3).unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(g.position(-2), Some(0));
        assert_eq!(g.position(4), None);
        assert_eq!(g.point(3), 1.5);
    }

    #[test]
    fn decay_parameters_checked() {
        let g = Grid::new(1.0, 0, 2).unwrap();
        let bad = Extension::Decay { p: -1.0, c: 1.0 };
        assert!(GridFunction::new(g, vec![0.0; 3], bad).is_err());
        assert!(Extension::decay(0.5, -1.0).is_err());
        assert!(Extension::decay(0.5, 2.0).is_ok());
    }

    #[test]
    fn values_outside_follow_tails() {
        let g = Grid::new(1.0, 0, 2).unwrap();
        let u = GridFunction::new(g, vec![1.0, 2.0, 3.0], Extension::Constant).unwrap();
        assert_eq!(u.value(-5), Some(1.0));
        assert_eq!(u.value(9), Some(3.0));
        let z = u.clone().with_extension(Extension::ZeroOutside);
        assert_eq!(z.value(9), Some(0.0));
        let d = u.with_extension(Extension::Undefined);
        assert_eq!(d.value(9), None);
        assert_eq!(d.value(1), Some(2.0));
    }

    #[test]
    fn reflection_swaps_window_and_tails() {
        let g = Grid::new(1.0, -1, 2).unwrap();
        let u =
            GridFunction::with_tails(g, vec![1.0, 2.0, 3.0, 4.0], Extension::Constant, Extension::ZeroOutside).unwrap();
        let r = u.reflect();
        assert_eq!((r.grid().n_min(), r.grid().n_max()), (-2, 1));
        assert_eq!(r.samples(), &[4.0, 3.0, 2.0, 1.0]);
        assert_eq!(r.left_extension(), Extension::ZeroOutside);
        assert_eq!(r.right_extension(), Extension::Constant);
        assert_eq!(r.reflect(), u);
    }

    #[test]
    fn padding_and_restriction() {
        let g = Grid::new(1.0, 0, 1).unwrap();
        let u = GridFunction::impulse(g, 1).unwrap();
        let p = u.padded(2, 1).unwrap();
        assert_eq!(p.samples(), &[0.0, 0.0, 0.0, 1.0, 0.0]);
        assert_eq!(p.support(), Some((1, 1)));
        let r = p.restrict(0, 1).unwrap();
        assert_eq!(r.left_extension(), Extension::Undefined);
        assert_eq!(r.right_extension(), Extension::Undefined);
        let undefined = u.with_extension(Extension::Undefined);
        assert!(undefined.padded(1, 0).is_err());
    }

    #[test]
    fn compact_support_detection() {
        let g = Grid::new(1.0, 0, 2).unwrap();
        let u = GridFunction::new(g, vec![0.0, 1.0, 0.0], Extension::Constant).unwrap();
        assert!(u.is_compactly_supported());
        let v = GridFunction::new(g, vec![1.0, 1.0, 0.0], Extension::Constant).unwrap();
        assert!(!v.is_compactly_supported());
    }
}

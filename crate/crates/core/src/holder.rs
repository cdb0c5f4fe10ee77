//! Discrete Hölder seminorms and norms `C_h^{k,β}` on finite windows.
//!
//! ```text
//! [v]_β = sup_{j≠m} |v(jh) − v(mh)| / (h^β |j − m|^β)
//! ‖u‖_{k,β} = max_{l+s≤k} sup |δ^{l,s}u| + max_{l+s=k} [δ^{l,s}u]_β
//! ```
//!
//! The sup over `Z` is replaced by a scan of every valid pair in the window.
//! For compactly supported `u` the window is first widened so that all pairs
//! that can attain the sup are present; [`double_window_stability`] checks the
//! result empirically.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::fracops::mixed_difference;
use crate::grid::{Grid, GridFunction};

/// Relative change above which [`double_window_stability`] flags a window.
pub const STABILITY_FLAG: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderIndex {
    pub k: usize,
    pub beta: f64,
}

impl HolderIndex {
    pub fn new(k: usize, beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(HolderIndex { k, beta })
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(invalid(format!("Hölder exponent must lie in (0, 1], got {beta}")));
    }
    Ok(())
}

/// A seminorm value and the pair `(j, m)`, `j < m`, attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Seminorm {
    pub value: f64,
    /// `None` when fewer than two valid points exist.
    pub argmax: Option<(i64, i64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeminormTerm {
    pub l: usize,
    pub s: usize,
    pub value: f64,
    pub argmax: Option<(i64, i64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupTerm {
    pub l: usize,
    pub s: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderReport {
    pub index: HolderIndex,
    /// One entry per `l + s = k`.
    pub seminorms: Vec<SeminormTerm>,
    /// One entry per `l + s ≤ k`.
    pub sup_terms: Vec<SupTerm>,
    pub norm: f64,
    /// Window actually scanned.
    pub window: Grid,
}

impl HolderReport {
    pub fn seminorm(&self, l: usize, s: usize) -> Option<&SeminormTerm> {
        self.seminorms.iter().find(|t| t.l == l && t.s == s)
    }

    pub fn sup_term(&self, l: usize, s: usize) -> Option<f64> {
        self.sup_terms.iter().find(|t| t.l == l && t.s == s).map(|t| t.value)
    }
}

/// `[δ^{l,s}u]_β` over the window, widened for compactly supported `u`.
pub fn holder_seminorm(u: &GridFunction, l: usize, s: usize, beta: f64) -> Result<Seminorm> {
    check_beta(beta)?;
    let wide = inflate(u, l + s)?;
    let d = mixed_difference(&wide, l, s)?;
    Ok(pair_scan(&d, beta))
}

/// Hölder norm after widening the window of a compactly supported `u`.
pub fn holder_norm(u: &GridFunction, idx: HolderIndex) -> Result<HolderReport> {
    let wide = inflate(u, idx.k)?;
    holder_norm_in_window(&wide, idx)
}

/// Hölder norm over exactly the window of `u`.
pub fn holder_norm_in_window(u: &GridFunction, idx: HolderIndex) -> Result<HolderReport> {
    check_beta(idx.beta)?;
    let mut seminorms = Vec::new();
    let mut sup_terms = Vec::new();
    for order in 0..=idx.k {
        for l in (0..=order).rev() {
            let s = order - l;
            let d = mixed_difference(u, l, s)?;
            sup_terms.push(SupTerm {
                l,
                s,
                value: d.max_abs(),
            });
            if order == idx.k {
                let semi = pair_scan(&d, idx.beta);
                seminorms.push(SeminormTerm {
                    l,
                    s,
                    value: semi.value,
                    argmax: semi.argmax,
                });
            }
        }
    }
    let sup = sup_terms.iter().map(|t| t.value).fold(0.0, f64::max);
    let semi = seminorms.iter().map(|t| t.value).fold(0.0, f64::max);
    Ok(HolderReport {
        index: idx,
        seminorms,
        sup_terms,
        norm: sup + semi,
        window: *u.grid(),
    })
}

/// Comparison of the raw-window norm with the norm on a window twice as wide.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityReport {
    pub norm: f64,
    pub doubled_norm: f64,
    pub relative_change: f64,
    /// Change above [`STABILITY_FLAG`].
    pub flagged: bool,
}

/// Recomputes the norm on the zero-extended window of twice the length.
pub fn double_window_stability(u: &GridFunction, idx: HolderIndex) -> Result<StabilityReport> {
    if !u.is_compactly_supported() {
        return Err(invalid("window doubling needs zero tails on both sides"));
    }
    let base = holder_norm_in_window(u, idx)?.norm;
    let extra = u.len();
    let doubled = holder_norm_in_window(&u.padded(extra / 2, extra - extra / 2)?, idx)?.norm;
    let relative_change = if base == doubled {
        0.0
    } else {
        (doubled - base).abs() / base.abs().max(doubled.abs())
    };
    Ok(StabilityReport {
        norm: base,
        doubled_norm: doubled,
        relative_change,
        flagged: relative_change > STABILITY_FLAG,
    })
}

/// Pads a compactly supported function by its support diameter plus the
/// reach of the differences on both sides.
fn inflate(u: &GridFunction, order: usize) -> Result<GridFunction> {
    if !u.is_compactly_supported() {
        return Ok(u.clone());
    }
    let Some((lo, hi)) = u.support() else {
        return Ok(u.clone());
    };
    let margin = (hi - lo) as usize + order + 1;
    let left = (margin as i64 - (lo - u.grid().n_min())).max(0) as usize;
    let right = (margin as i64 - (u.grid().n_max() - hi)).max(0) as usize;
    u.padded(left, right)
}

#[derive(Clone, Copy)]
struct Best {
    value: f64,
    pair: Option<(usize, usize)>,
}

impl Best {
    const NONE: Best = Best { value: 0.0, pair: None };

    /// Larger value wins; ties go to the lexicographically smaller pair.
    fn merge(self, other: Best) -> Best {
        match (self.pair, other.pair) {
            (None, _) => other,
            (_, None) => self,
            (Some(a), Some(b)) => {
                if other.value > self.value || (other.value == self.value && b < a) {
                    other
                } else {
                    self
                }
            }
        }
    }
}

/// Exhaustive `O(N²)` scan over valid pairs `j < m`.
fn pair_scan(d: &GridFunction, beta: f64) -> Seminorm {
    let values = d.samples();
    let ok = d.valid();
    let len = values.len();
    let h = d.h();
    let inv_dist: Vec<f64> = (0..len)
        .map(|k| if k == 0 { 0.0 } else { (h * k as f64).powf(-beta) })
        .collect();
    let best = (0..len)
        .into_par_iter()
        .filter(|&j| ok[j])
        .map(|j| {
            let mut best = Best::NONE;
            let vj = values[j];
            for m in j + 1..len {
                if !ok[m] {
                    continue;
                }
                let q = (vj - values[m]).abs() * inv_dist[m - j];
                if best.pair.is_none() || q > best.value {
                    best = Best {
                        value: q,
                        pair: Some((j, m)),
                    };
                }
            }
            best
        })
        .reduce(|| Best::NONE, Best::merge);
    let n_min = d.grid().n_min();
    Seminorm {
        value: best.value,
        argmax: best.pair.map(|(j, m)| (n_min + j as i64, n_min + m as i64)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Extension;

    fn brute(v: &[f64], ok: &[bool], h: f64, beta: f64) -> f64 {
        let mut best: f64 = 0.0;
        for j in 0..v.len() {
            for m in 0..v.len() {
                if j != m && ok[j] && ok[m] {
                    let q = (v[j] - v[m]).abs() / (h.powf(beta) * ((j as f64) - (m as f64)).abs().powf(beta));
                    best = best.max(q);
                }
            }
        }
        best
    }

    #[test]
    fn constant_and_linear() {
        let g = Grid::new(0.5, -10, 10).unwrap();
        let c = GridFunction::new(g, vec![2.5; 21], Extension::Constant).unwrap();
        for (l, s) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            assert_eq!(holder_seminorm(&c, l, s, 0.5).unwrap().value, 0.0);
        }
        let r = holder_norm(&c, HolderIndex::new(0, 0.7).unwrap()).unwrap();
        assert_eq!(r.norm, 2.5);

        let lin = GridFunction::from_fn(g, Extension::Undefined, |x| x).unwrap();
        let semi = holder_seminorm(&lin, 0, 0, 1.0).unwrap();
        assert!((semi.value - 1.0).abs() < 1e-14);
        let r = holder_norm(&lin, HolderIndex::new(1, 1.0).unwrap()).unwrap();
        assert_eq!(r.seminorm(1, 0).unwrap().value, 0.0);
        assert_eq!(r.seminorm(0, 1).unwrap().value, 0.0);
        assert!((r.norm - 5.0).abs() < 1e-14);
    }

    #[test]
    fn impulse_matches_brute_force() {
        let g = Grid::new(1.0, -4, 4).unwrap();
        let u = GridFunction::impulse(g, 0).unwrap();
        let semi = holder_seminorm(&u, 0, 0, 0.5).unwrap();
        let wide = u.padded(10, 10).unwrap();
        let oracle = brute(wide.samples(), wide.valid(), 1.0, 0.5);
        assert_eq!(semi.value, oracle);
        assert_eq!(semi.value, 1.0);
        assert_eq!(semi.argmax, Some((-1, 0)));
        let r = holder_norm(&u, HolderIndex::new(0, 0.5).unwrap()).unwrap();
        assert_eq!(r.norm, 2.0);
    }

    #[test]
    fn differenced_seminorm_matches_brute_force() {
        let g = Grid::new(0.25, -20, 20).unwrap();
        let u = GridFunction::from_fn(g, Extension::ZeroOutside, |x| {
            if x.abs() < 3.0 {
                (x * 2.1).sin() * (9.0 - x * x)
            } else {
                0.0
            }
        })
        .unwrap();
        for (l, s) in [(1, 0), (0, 1), (1, 1), (2, 0)] {
            let semi = holder_seminorm(&u, l, s, 0.3).unwrap();
            let wide = inflate(&u, l + s).unwrap();
            let d = mixed_difference(&wide, l, s).unwrap();
            let oracle = brute(d.samples(), d.valid(), 0.25, 0.3);
            assert!((semi.value - oracle).abs() <= 1e-14 * oracle);
        }
    }

    #[test]
    fn ties_break_to_smallest_pair() {
        let g = Grid::new(1.0, 0, 5).unwrap();
        let u = GridFunction::new(g, vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0], Extension::Undefined).unwrap();
        let semi = holder_seminorm(&u, 0, 0, 1.0).unwrap();
        assert_eq!(semi.value, 1.0);
        assert_eq!(semi.argmax, Some((0, 1)));
    }

    #[test]
    fn stability_examples() {
        let idx = HolderIndex::new(0, 0.5).unwrap();
        let g = Grid::new(1.0, -20, 20).unwrap();
        let inside = GridFunction::from_fn(g, Extension::ZeroOutside, |x| (1.0 - (x / 5.0).powi(2)).max(0.0)).unwrap();
        let r = double_window_stability(&inside, idx).unwrap();
        assert!(r.relative_change <= 1e-3 && !r.flagged);

        let edge = GridFunction::new(
            Grid::new(1.0, 0, 3).unwrap(),
            vec![0.0, 0.0, 0.0, 5.0],
            Extension::ZeroOutside,
        )
        .unwrap();
        // zero tails keep edge differences exact, so the doubled window only adds pairs
        for k in 0..=2 {
            let r = double_window_stability(&edge, HolderIndex::new(k, 0.5).unwrap()).unwrap();
            assert!(r.doubled_norm >= r.norm);
        }

        let zero = GridFunction::zeros(g);
        assert_eq!(double_window_stability(&zero, idx).unwrap().relative_change, 0.0);
    }

    #[test]
    fn rejects_bad_beta() {
        assert!(HolderIndex::new(0, 0.0).is_err());
        assert!(HolderIndex::new(0, 1.5).is_err());
        let u = GridFunction::zeros(Grid::new(1.0, 0, 3).unwrap());
        assert!(holder_seminorm(&u, 0, 0, -0.1).is_err());
    }
}

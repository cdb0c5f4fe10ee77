//! Right-looking weighted sums `v(n) = s·Σ_k w[k]·u(n+k)` with tail handling.
//!
//! Both the Poisson semigroup and the fractional series are of this form. The
//! left-looking versions are obtained by reflection in the callers.

use crate::grid::{Extension, GridFunction};

/// What happens to the weights past the end of the table.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Beyond {
    /// Dropped; their total absolute mass is at most this.
    Dropped(f64),
    /// They continue and the full series sums to this value.
    SumsTo(f64),
    /// They continue and are not summable.
    Divergent,
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Scale {
    Mul(f64),
    Div(f64),
}

impl Scale {
    fn apply(self, x: f64) -> f64 {
        match self {
            Scale::Mul(s) => x * s,
            Scale::Div(s) => x / s,
        }
    }

    fn magnitude(self) -> f64 {
        match self {
            Scale::Mul(s) => s.abs(),
            Scale::Div(s) => 1.0 / s.abs(),
        }
    }
}

pub(crate) struct OneSidedKernel<'a> {
    pub weights: &'a [f64],
    pub beyond: Beyond,
    /// `(K, κ)` with `|w[k]| ≤ K·k^{κ-1}` for every `k ≥ 1`. Required for decay
    /// tails when the weights continue past the table.
    pub envelope: Option<(f64, f64)>,
    pub scale: Scale,
}

pub(crate) struct Correlation {
    pub values: Vec<f64>,
    pub valid: Vec<bool>,
    pub right_tail: Extension,
    /// Largest certified tail bound among valid outputs.
    pub tail_bound: f64,
}

fn dist_pow(m: i64, p: f64) -> f64 {
    (m.unsigned_abs().max(1) as f64).powf(-p)
}

/// `Σ_{k≥start} K·k^{κ-1}·c·max(|n+k|,1)^{-p}`, explicit for a stretch of terms
/// and by integral comparison afterwards. Requires `p > κ`.
fn envelope_tail(n: i64, start: usize, k_const: f64, kappa: f64, c: f64, p: f64) -> f64 {
    let start = start.max(1);
    let stretch = 64usize.max(2 * n.unsigned_abs() as usize + 2);
    let end = start + stretch;
    let mut acc = 0.0;
    for k in start..end {
        acc += (k as f64).powf(kappa - 1.0) * dist_pow(n + k as i64, p);
    }
    // k ≥ end ≥ 2|n| + 2 gives |n+k| ≥ k/2
    let s = kappa - 1.0 - p;
    let a = end as f64;
    let rest = 2f64.powf(p) * (a.powf(s) + a.powf(s + 1.0) / (-s - 1.0));
    k_const * c * (acc + rest)
}

pub(crate) fn correlate_right(u: &GridFunction, kernel: &OneSidedKernel<'_>, tol: f64) -> Correlation {
    let s = u.samples();
    let ok = u.valid();
    let len = s.len();
    let w = kernel.weights;
    let n_min = u.grid().n_min();
    let right = u.right_extension();
    let edge = *s.last().expect("window is nonempty");
    let scale_mag = kernel.scale.magnitude();

    let mut values = Vec::with_capacity(len);
    let mut valid = Vec::with_capacity(len);
    let mut tail_bound: f64 = 0.0;

    for i in 0..len {
        let n = n_min + i as i64;
        let reach = len - 1 - i;
        let top = reach.min(w.len().saturating_sub(1));
        let mut sum = 0.0;
        let mut bad_mass = 0.0;
        for k in 0..=top {
            sum += w[k] * s[i + k];
            if !ok[i + k] {
                bad_mass += w[k].abs();
            }
        }
        let beyond_in_table = if reach + 1 < w.len() { &w[reach + 1..] } else { &[][..] };
        let mut bound = 0.0;
        match right {
            Extension::ZeroOutside => {}
            Extension::Constant => match kernel.beyond {
                Beyond::Dropped(_) => {
                    sum += edge * beyond_in_table.iter().sum::<f64>();
                }
                Beyond::SumsTo(total) => {
                    let partial: f64 = w[..=top].iter().sum();
                    sum += edge * (total - partial);
                }
                Beyond::Divergent => {
                    debug_assert!(edge == 0.0, "caller must reject divergent constant tails");
                }
            },
            Extension::Decay { p, c } => {
                for (j, wk) in beyond_in_table.iter().enumerate() {
                    let k = reach + 1 + j;
                    bound += wk.abs() * c * dist_pow(n + k as i64, p);
                }
                bound += match kernel.beyond {
                    Beyond::Dropped(mass) => mass * c,
                    Beyond::SumsTo(_) | Beyond::Divergent => {
                        let (k_const, kappa) = kernel.envelope.expect("decay tails need a kernel envelope");
                        envelope_tail(n, w.len().max(reach + 1), k_const, kappa, c, p)
                    }
                };
                bound *= scale_mag;
            }
            Extension::Undefined => {
                bad_mass += beyond_in_table.iter().map(|x| x.abs()).sum::<f64>();
                bad_mass += match kernel.beyond {
                    Beyond::Dropped(mass) => mass,
                    Beyond::SumsTo(_) | Beyond::Divergent => f64::INFINITY,
                };
            }
        }
        let is_valid = bad_mass <= tol && bound <= tol;
        if is_valid {
            tail_bound = tail_bound.max(bound);
        }
        values.push(kernel.scale.apply(sum));
        valid.push(is_valid);
    }

    let right_tail = match right {
        Extension::ZeroOutside => Extension::ZeroOutside,
        Extension::Constant => match kernel.beyond {
            Beyond::Dropped(_) => Extension::Constant,
            Beyond::SumsTo(0.0) => Extension::ZeroOutside,
            Beyond::SumsTo(_) => Extension::Constant,
            Beyond::Divergent => Extension::ZeroOutside,
        },
        Extension::Decay { .. } | Extension::Undefined => Extension::Undefined,
    };

    Correlation {
        values,
        valid,
        right_tail,
        tail_bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn brute(u: &[f64], w: &[f64]) -> Vec<f64> {
        (0..u.len())
            .map(|i| (0..u.len() - i).filter(|&k| k < w.len()).map(|k| w[k] * u[i + k]).sum())
            .collect()
    }

    #[test]
    fn zero_tail_matches_brute_force() {
        let g = Grid::new(1.0, -3, 4).unwrap();
        let samples = vec![0.5, -1.0, 2.0, 0.0, 3.0, 1.0, -2.0, 0.25];
        let u = GridFunction::new(g, samples.clone(), Extension::ZeroOutside).unwrap();
        let w = [1.0, 0.5, 0.25, 0.125];
        let k = OneSidedKernel {
            weights: &w,
            beyond: Beyond::Dropped(0.0),
            envelope: None,
            scale: Scale::Mul(1.0),
        };
        let c = correlate_right(&u, &k, 1e-12);
        assert_eq!(c.values, brute(&samples, &w));
        assert!(c.valid.iter().all(|&v| v));
        assert_eq!(c.right_tail, Extension::ZeroOutside);
    }

    #[test]
    fn constant_tail_with_summable_kernel() {
        // weights 1, -1 summing to zero: a first difference
        let g = Grid::new(1.0, 0, 2).unwrap();
        let u = GridFunction::new(g, vec![1.0, 4.0, 9.0], Extension::Constant).unwrap();
        let w = [1.0, -1.0];
        let k = OneSidedKernel {
            weights: &w,
            beyond: Beyond::Dropped(0.0),
            envelope: None,
            scale: Scale::Mul(1.0),
        };
        let c = correlate_right(&u, &k, 1e-12);
        assert_eq!(c.values, vec![-3.0, -5.0, 0.0]);
        assert_eq!(c.right_tail, Extension::Constant);
    }

    #[test]
    fn undefined_tail_flags_reaching_indices() {
        let g = Grid::new(1.0, 0, 3).unwrap();
        let u = GridFunction::new(g, vec![1.0; 4], Extension::Undefined).unwrap();
        let w = [1.0, -1.0];
        let k = OneSidedKernel {
            weights: &w,
            beyond: Beyond::Dropped(0.0),
            envelope: None,
            scale: Scale::Div(2.0),
        };
        let c = correlate_right(&u, &k, 1e-12);
        assert_eq!(c.valid, vec![true, true, true, false]);
        assert_eq!(c.values[..3], [0.0, 0.0, 0.0]);
    }

    #[test]
    fn envelope_tail_dominates_direct_partial_sum() {
        let (k_const, kappa, c, p) = (1.0, 0.5, 1.0, 1.5);
        let bound = envelope_tail(3, 10, k_const, kappa, c, p);
        let direct: f64 = (10..200_000)
            .map(|k| (k as f64).powf(kappa - 1.0) * dist_pow(3 + k as i64, p))
            .sum();
        assert!(bound >= direct);
        assert!(bound < 2.0 * direct + 1e-3);
    }
}

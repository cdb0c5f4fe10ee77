//! Poisson-weighted translation semigroups `T_{t,±}` on `Z_h`.
//!
//! `T_{t,+}u(n) = Σ_j G_t(j) u(n+j)` with `G_t(j) = e^{-t} t^j / j!`. On a mesh
//! of step `h` the semigroup generated by `-δ_right` is `T_{t/h,+}`.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fracops::{delta, max_deviation};
use crate::grid::{Extension, GridFunction, Side};
use crate::onesided::{correlate_right, Beyond, OneSidedKernel, Scale};
use crate::special;

pub const DEFAULT_TOL: f64 = 1e-12;

/// Above this time `e^{-t}` underflows and the weights are seeded at the mode.
const LOG_SEED_THRESHOLD: f64 = 700.0;

/// `G_t(0..=J)` with the mass dropped past `J`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoissonWeights {
    t: f64,
    weights: Vec<f64>,
    discarded_mass: f64,
}

impl PoissonWeights {
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Cutoff index `J`.
    pub fn cutoff(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn discarded_mass(&self) -> f64 {
        self.discarded_mass
    }
}

/// Poisson weights cut at the smallest `J` whose tail mass `Σ_{j>J} G_t(j)` is at most `tol`.
pub fn poisson_weights(t: f64, tol: f64) -> Result<PoissonWeights> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid(format!("semigroup time must be finite and >= 0, got {t}")));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(invalid(format!("tolerance must lie in (0, 1), got {tol}")));
    }
    if t == 0.0 {
        return Ok(PoissonWeights {
            t,
            weights: vec![1.0],
            discarded_mass: 0.0,
        });
    }

    let mode = t.floor() as usize;
    let mut full: Vec<f64>;
    if t <= LOG_SEED_THRESHOLD {
        full = vec![(-t).exp()];
    } else {
        let (ln_fact, _) = special::ln_gamma_signed(mode as f64 + 1.0);
        let seed = (-t + mode as f64 * t.ln() - ln_fact).exp();
        full = vec![0.0; mode + 1];
        full[mode] = seed;
        for j in (1..=mode).rev() {
            full[j - 1] = full[j] * j as f64 / t;
        }
    }
    // Extend past the mode until the remaining terms cannot matter in f64.
    loop {
        let j = full.len() - 1;
        let last = full[j];
        if j > mode && (last == 0.0 || last < f64::EPSILON * 1e-6 * tol) {
            break;
        }
        full.push(last * t / (j as f64 + 1.0));
    }

    // Suffix sums from the smallest terms up.
    let mut tail = 0.0;
    let mut cutoff = full.len() - 1;
    for j in (0..full.len()).rev() {
        if tail + full[j] > tol {
            cutoff = j;
            break;
        }
        tail += full[j];
    }
    full.truncate(cutoff + 1);
    Ok(PoissonWeights {
        t,
        weights: full,
        discarded_mass: tail,
    })
}

/// `T_{t/h,±} u` on the window of `u`.
///
/// Indices whose value depends on unknown data (undefined tail, invalid
/// inputs, or decay bounds above `tol`) are flagged invalid. Fails with
/// [`Error::ExtensionRequired`] when every index ends up invalid because of an
/// undefined tail.
pub fn apply_semigroup(u: &GridFunction, t: f64, side: Side, tol: f64) -> Result<GridFunction> {
    match side {
        Side::Right => apply_right(u, t, tol),
        Side::Left => Ok(apply_right(&u.reflect(), t, tol)?.reflect()),
    }
}

fn apply_right(u: &GridFunction, t: f64, tol: f64) -> Result<GridFunction> {
    let weights = poisson_weights(t / u.h(), tol)?;
    let kernel = OneSidedKernel {
        weights: weights.weights(),
        beyond: Beyond::Dropped(weights.discarded_mass()),
        envelope: None,
        scale: Scale::Mul(1.0),
    };
    let out = correlate_right(u, &kernel, tol);
    if u.right_extension() == Extension::Undefined && !out.valid.iter().any(|&v| v) {
        return Err(Error::ExtensionRequired(format!(
            "semigroup at t = {t} reaches past the window on every index"
        )));
    }
    let right = match (u.right_extension(), out.right_tail) {
        // T_t maps c|n|^{-p} to something bounded by c|n|^{-p} when the tail is on n > 0
        (Extension::Decay { p, c }, _) if u.grid().n_max() >= 0 => Extension::Decay { p, c },
        (_, tail) => tail,
    };
    Ok(GridFunction::from_parts(
        *u.grid(),
        out.values,
        Extension::Undefined,
        right,
        out.valid,
    ))
}

/// `max |T_t T_s u − T_{t+s} u|` over indices valid in both.
pub fn semigroup_law_residual(u: &GridFunction, t: f64, s: f64, side: Side, tol: f64) -> Result<f64> {
    if t < 0.0 || s < 0.0 {
        return Err(invalid("semigroup times must be >= 0"));
    }
    let two_step = apply_semigroup(&apply_semigroup(u, s, side, tol)?, t, side, tol)?;
    let one_step = apply_semigroup(u, t + s, side, tol)?;
    max_deviation(&two_step, &one_step)
}

/// Max-norm of `[T_{t+dt}u₀ − T_{t−dt}u₀]/(2dt) + δ(T_t u₀)`, which is `O(dt²)`
/// when `T_t u₀` solves `∂_t u + δ u = 0`.
pub fn cauchy_residual(u0: &GridFunction, t: f64, dt: f64, side: Side, tol: f64) -> Result<f64> {
    if !(t > 0.0 && dt > 0.0 && dt < t) {
        return Err(invalid("cauchy residual needs t > 0 and 0 < dt < t"));
    }
    let ahead = apply_semigroup(u0, t + dt, side, tol)?;
    let behind = apply_semigroup(u0, t - dt, side, tol)?;
    let now = apply_semigroup(u0, t, side, tol)?;
    let generator = delta(&now, side)?;
    let derivative = ahead.linear_combination(1.0 / (2.0 * dt), &behind, -1.0 / (2.0 * dt))?;
    let residual = derivative.linear_combination(1.0, &generator, 1.0)?;
    Ok(residual
        .samples()
        .iter()
        .zip(residual.valid())
        .filter(|(_, &ok)| ok)
        .map(|(v, _)| v.abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn impulse(n_min: i64, n_max: i64) -> GridFunction {
        GridFunction::impulse(Grid::new(1.0, n_min, n_max).unwrap(), 0).unwrap()
    }

    #[test]
    fn zero_time_weights() {
        let w = poisson_weights(0.0, 1e-12).unwrap();
        assert_eq!(w.weights(), &[1.0]);
        assert_eq!(w.discarded_mass(), 0.0);
        assert_eq!(w.cutoff(), 0);
    }

    #[test]
    fn weights_match_closed_form() {
        for &t in &[0.3, 2.0, 5.0, 17.5] {
            let w = poisson_weights(t, 1e-14).unwrap();
            for (j, &g) in w.weights().iter().enumerate() {
                let (lf, _) = special::ln_gamma_signed(j as f64 + 1.0);
                let exact = (-t + j as f64 * t.ln() - lf).exp();
                assert!((g - exact).abs() <= 1e-13 * exact, "t={t} j={j}");
            }
            let total: f64 = w.weights().iter().sum();
            assert!((total + w.discarded_mass() - 1.0).abs() <= 1e-14);
        }
    }

    #[test]
    fn mean_equals_time() {
        let w = poisson_weights(2.0, 1e-12).unwrap();
        let mean: f64 = w.weights().iter().enumerate().map(|(j, g)| j as f64 * g).sum();
        assert!((mean - 2.0).abs() < 1e-10);
    }

    #[test]
    fn cutoff_is_smallest_sufficient_index() {
        let tol = 1e-10;
        let w = poisson_weights(5.0, tol).unwrap();
        // oracle: cumulative summation of the closed form
        let mut cumulative = 0.0;
        let mut expected = None;
        for j in 0..200 {
            let (lf, _) = special::ln_gamma_signed(j as f64 + 1.0);
            cumulative += (-5.0 + j as f64 * 5f64.ln() - lf).exp();
            if cumulative >= 1.0 - tol {
                expected = Some(j);
                break;
            }
        }
        let expected = expected.unwrap();
        assert!((w.cutoff() as i64 - expected as i64).abs() <= 1);
        assert!(w.discarded_mass() <= tol);
        assert!(w.cutoff() > 5 && w.cutoff() < 5 + 15 * 3);
    }

    #[test]
    fn large_time_uses_log_seed() {
        let w = poisson_weights(1500.0, 1e-12).unwrap();
        let total: f64 = w.weights().iter().sum();
        assert!((total + w.discarded_mass() - 1.0).abs() < 1e-12);
        let mean: f64 = w.weights().iter().enumerate().map(|(j, g)| j as f64 * g).sum();
        assert!((mean - 1500.0).abs() < 1e-8);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(poisson_weights(-1.0, 1e-12).is_err());
        assert!(poisson_weights(1.0, 0.0).is_err());
        assert!(poisson_weights(1.0, 1.0).is_err());
    }

    #[test]
    fn constants_are_fixed_points() {
        let g = Grid::new(0.5, -10, 10).unwrap();
        let u = GridFunction::new(g, vec![1.0; 21], Extension::Constant).unwrap();
        for side in [Side::Right, Side::Left] {
            let v = apply_semigroup(&u, 3.0, side, 1e-12).unwrap();
            assert!(v.samples().iter().all(|x| (x - 1.0).abs() < 1e-12));
            assert!(v.all_valid());
        }
    }

    #[test]
    fn time_zero_is_identity() {
        let g = Grid::new(1.0, 0, 4).unwrap();
        let u = GridFunction::new(g, vec![1.0, -2.0, 3.0, 0.5, 7.0], Extension::ZeroOutside).unwrap();
        let v = apply_semigroup(&u, 0.0, Side::Right, 1e-12).unwrap();
        assert_eq!(v.samples(), u.samples());
    }

    #[test]
    fn impulse_gives_reversed_poisson_profile() {
        let t = 1.7;
        let u = impulse(-30, 5);
        let v = apply_semigroup(&u, t, Side::Right, 1e-14).unwrap();
        let g = poisson_weights(t, 1e-14).unwrap();
        for n in -30..=5i64 {
            let expected = if n <= 0 {
                g.weights().get((-n) as usize).copied().unwrap_or(0.0)
            } else {
                0.0
            };
            assert_eq!(v.at(n).unwrap(), expected);
        }
    }

    #[test]
    fn law_holds_on_impulse() {
        let u = impulse(-80, 5);
        let r = semigroup_law_residual(&u, 1.0, 1.0, Side::Right, 1e-14).unwrap();
        assert!(r <= 1e-10, "residual {r}");
        let r0 = semigroup_law_residual(&u, 1.3, 0.0, Side::Left, 1e-14).unwrap();
        assert!(r0 <= 1e-15);
    }

    #[test]
    fn law_holds_on_random_data() {
        let g = Grid::new(1.0, -60, 20).unwrap();
        let samples: Vec<f64> = g
            .indices()
            .map(|n| {
                if (0..=10).contains(&n) {
                    ((n * 7919) % 13) as f64 / 6.0 - 1.0
                } else {
                    0.0
                }
            })
            .collect();
        let u = GridFunction::new(g, samples, Extension::ZeroOutside).unwrap();
        let r = semigroup_law_residual(&u, 0.7, 1.3, Side::Right, 1e-14).unwrap();
        assert!(r <= 1e-10, "residual {r}");
    }

    #[test]
    fn undefined_tail_is_flagged_or_rejected() {
        let g = Grid::new(1.0, 0, 50).unwrap();
        let u = GridFunction::new(g, vec![1.0; 51], Extension::Undefined).unwrap();
        let v = apply_semigroup(&u, 2.0, Side::Right, 1e-12).unwrap();
        assert!(v.is_valid_at(0));
        assert!(!v.is_valid_at(50));
        let tiny = GridFunction::new(Grid::new(1.0, 0, 1).unwrap(), vec![1.0; 2], Extension::Undefined).unwrap();
        assert!(matches!(
            apply_semigroup(&tiny, 10.0, Side::Right, 1e-12),
            Err(Error::ExtensionRequired(_))
        ));
    }

    #[test]
    fn decay_tail_carries_bound() {
        let g = Grid::new(1.0, 0, 60).unwrap();
        let u = GridFunction::new(g, vec![0.0; 61], Extension::decay(2.0, 1.0).unwrap()).unwrap();
        let v = apply_semigroup(&u, 1.0, Side::Right, 1e-6).unwrap();
        assert!(v.is_valid_at(0));
        assert!(!v.is_valid_at(60));
    }

    #[test]
    fn cauchy_examples() {
        let g = Grid::new(1.0, -40, 40).unwrap();
        let c = GridFunction::new(g, vec![2.5; 81], Extension::Constant).unwrap();
        assert!(cauchy_residual(&c, 1.0, 0.1, Side::Right, 1e-14).unwrap() < 1e-12);

        let u = impulse(-60, 5);
        let r1 = cauchy_residual(&u, 1.0, 0.1, Side::Right, 1e-15).unwrap();
        let r2 = cauchy_residual(&u, 1.0, 0.05, Side::Right, 1e-15).unwrap();
        let ratio = r1 / r2;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
        let small = cauchy_residual(&u, 1.0, 1e-3, Side::Right, 1e-15).unwrap();
        assert!(small <= 1e-5, "residual {small}");
    }

    #[test]
    fn cauchy_rejects_bad_steps() {
        let u = impulse(-5, 5);
        assert!(cauchy_residual(&u, 1.0, 1.0, Side::Right, 1e-12).is_err());
        assert!(cauchy_residual(&u, 0.0, 0.1, Side::Right, 1e-12).is_err());
    }
}

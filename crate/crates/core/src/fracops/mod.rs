//! Discrete fractional integrals and derivatives on `Z_h`.
//!
//! For a right-sided operator of order `ν` (negative for sums, positive for
//! differences) the series form is
//!
//! ```text
//! (δ_right)^ν u(nh) = h^{-ν} Σ_{m≥n} Λ^{ν}(m − n) u(mh)
//! ```
//!
//! where `Λ^{ν} = Λ^{-(−ν)}` is the kernel of [`crate::kernel`]. The left-sided
//! operators are the mirror images and are computed by reflection, so the
//! right/left symmetry holds bit-for-bit.

mod fft;
mod quadrature;

pub use fft::fft_apply;
pub use quadrature::{frac_derivative_quadrature, frac_integral_quadrature, QuadratureConfig};

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::grid::{Extension, GridFunction, Side};
use crate::kernel::{global_cache, kernel_bound_constant};
use crate::onesided::{correlate_right, Beyond, OneSidedKernel, Scale};
use crate::special;

/// Largest `|order|` accepted by [`OperatorSpec`].
pub const MAX_ORDER: f64 = 10.0;

/// Default tolerance for validity flags and tail bounds.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Relative tolerance of the internal cross-check in [`frac_apply_general`].
pub const GENERAL_CROSS_CHECK_TOL: f64 = 1e-9;

/// Side, signed order, and mesh step of a fractional operator.
///
/// Negative orders are fractional sums of order `|order|`, positive orders
/// fractional differences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatorSpec {
    pub side: Side,
    pub order: f64,
    pub h: f64,
}

impl OperatorSpec {
    pub fn new(side: Side, order: f64, h: f64) -> Result<Self> {
        if !order.is_finite() || order.abs() >= MAX_ORDER {
            return Err(invalid(format!(
                "operator order must be finite with |order| < {MAX_ORDER}, got {order}"
            )));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(invalid(format!("mesh step must be positive, got {h}")));
        }
        Ok(OperatorSpec { side, order, h })
    }

    /// Spec on the mesh of `u`.
    pub fn on(u: &GridFunction, side: Side, order: f64) -> Result<Self> {
        Self::new(side, order, u.h())
    }

    fn check_mesh(&self, u: &GridFunction) -> Result<()> {
        if (self.h - u.h()).abs() > 1e-12 * self.h {
            return Err(invalid(format!(
                "operator mesh step {} does not match function mesh step {}",
                self.h,
                u.h()
            )));
        }
        Ok(())
    }
}

/// How an operator application is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    Series,
    Fft,
    Quadrature,
}

/// Result of a series application together with its certified tail bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Applied {
    pub function: GridFunction,
    /// Largest bound on the discarded tail among valid indices (decay tails only).
    pub tail_bound: f64,
}

/// `δ_right u` or `δ_left u`.
pub fn delta(u: &GridFunction, side: Side) -> Result<GridFunction> {
    frac_apply_series(u, &OperatorSpec::on(u, side, 1.0)?, DEFAULT_TOL)
}

/// `(u(nh) − u((n+1)h))/h`.
pub fn delta_right(u: &GridFunction) -> Result<GridFunction> {
    delta(u, Side::Right)
}

/// `(u(nh) − u((n−1)h))/h`.
pub fn delta_left(u: &GridFunction) -> Result<GridFunction> {
    delta(u, Side::Left)
}

/// `δ^{l,s} u = (δ_right)^l (δ_left)^s u`.
pub fn mixed_difference(u: &GridFunction, l: usize, s: usize) -> Result<GridFunction> {
    let mut out = u.clone();
    for _ in 0..s {
        out = delta_left(&out)?;
    }
    for _ in 0..l {
        out = delta_right(&out)?;
    }
    Ok(out)
}

/// Series application of a fractional operator; see [`frac_apply_series_with_bound`].
pub fn frac_apply_series(u: &GridFunction, spec: &OperatorSpec, tol: f64) -> Result<GridFunction> {
    Ok(frac_apply_series_with_bound(u, spec, tol)?.function)
}

/// `h^{κ} Σ_k Λ^{-κ}(k) u(n ± k)` with `κ = −order`.
///
/// Zero tails make every sum finite. Constant tails are summed in closed form
/// when the kernel is summable. Decay tails contribute a certified bound and
/// flag indices where it exceeds `tol`.
pub fn frac_apply_series_with_bound(u: &GridFunction, spec: &OperatorSpec, tol: f64) -> Result<Applied> {
    spec.check_mesh(u)?;
    match spec.side {
        Side::Right => series_right(u, spec.order, tol),
        Side::Left => {
            let applied = series_right(&u.reflect(), spec.order, tol)?;
            Ok(Applied {
                function: applied.function.reflect(),
                tail_bound: applied.tail_bound,
            })
        }
    }
}

fn series_right(u: &GridFunction, order: f64, tol: f64) -> Result<Applied> {
    if order == 0.0 {
        return Ok(Applied {
            function: u.clone(),
            tail_bound: 0.0,
        });
    }
    let kappa = -order;
    let len = u.len();
    let finite = special::is_nonpositive_integer(kappa);
    let table_len = if finite { (-kappa) as usize + 1 } else { len };
    let table = global_cache().get(kappa, table_len - 1);
    let weights = &table.values()[..table_len];

    let beyond = if finite {
        Beyond::Dropped(0.0)
    } else if kappa < 0.0 {
        Beyond::SumsTo(0.0)
    } else {
        Beyond::Divergent
    };

    let mut envelope = None;
    match u.right_extension() {
        Extension::ZeroOutside => {}
        Extension::Constant => {
            let edge = u.tail_constant(Side::Right).unwrap_or(0.0);
            if matches!(beyond, Beyond::Divergent) && edge != 0.0 {
                return Err(Error::NotInDomain {
                    order,
                    reason: "a nonzero constant tail is not summable against the kernel".into(),
                });
            }
        }
        Extension::Decay { p, .. } => {
            if !finite {
                if p <= kappa {
                    return Err(Error::NotInDomain {
                        order,
                        reason: format!("decay exponent {p} must exceed {kappa}"),
                    });
                }
                envelope = Some((kernel_bound_constant(kappa)?, kappa));
            }
        }
        Extension::Undefined => {
            if !finite {
                return Err(Error::ExtensionRequired(
                    "an infinite kernel needs the tail beyond the window".into(),
                ));
            }
        }
    }

    let h = u.h();
    let scale = if kappa > 0.0 {
        Scale::Mul(h.powf(kappa))
    } else {
        Scale::Div(h.powf(-kappa))
    };
    let kernel = OneSidedKernel {
        weights,
        beyond,
        envelope,
        scale,
    };
    let out = correlate_right(u, &kernel, tol);
    Ok(Applied {
        function: GridFunction::from_parts(*u.grid(), out.values, Extension::Undefined, out.right_tail, out.valid),
        tail_bound: out.tail_bound,
    })
}

/// Output of [`frac_apply_general`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneralApplied {
    /// Result of the direct series of the full order.
    pub function: GridFunction,
    /// Max deviation between the direct series and the integer-part composition.
    pub cross_check: f64,
}

/// Any order: the direct `Λ` series for the full order, cross-checked against
/// `δ^{m} δ^{ν−m}` (or `δ^{-m} δ^{-(|ν|−m)}` for sums) with `m = ⌊|ν|⌋`.
pub fn frac_apply_general(u: &GridFunction, spec: &OperatorSpec, tol: f64) -> Result<GeneralApplied> {
    let direct = frac_apply_series(u, spec, tol)?;
    let magnitude = spec.order.abs();
    let whole = magnitude.floor();
    if whole == 0.0 || whole == magnitude {
        return Ok(GeneralApplied {
            function: direct,
            cross_check: 0.0,
        });
    }
    let sign = spec.order.signum();
    let fractional_part = OperatorSpec {
        order: sign * (magnitude - whole),
        ..*spec
    };
    let integer_part = OperatorSpec {
        order: sign * whole,
        ..*spec
    };
    let composed = frac_apply_series(&frac_apply_series(u, &fractional_part, tol)?, &integer_part, tol)?;

    let deviation = max_deviation(&direct, &composed).unwrap_or(0.0);
    let scale = direct.max_abs().max(1.0);
    if deviation > GENERAL_CROSS_CHECK_TOL * scale {
        return Err(Error::CrossCheck {
            what: format!("order {} direct series vs integer-part composition", spec.order),
            deviation,
            tol: GENERAL_CROSS_CHECK_TOL * scale,
        });
    }
    Ok(GeneralApplied {
        function: direct,
        cross_check: deviation,
    })
}

/// `max |δ^α δ^β u − δ^{α+β} u|` over indices valid in both.
pub fn composition_residual(u: &GridFunction, alpha: f64, beta: f64, side: Side, tol: f64) -> Result<f64> {
    let first = frac_apply_general(u, &OperatorSpec::on(u, side, beta)?, tol)?.function;
    let two_step = frac_apply_general(&first, &OperatorSpec::on(u, side, alpha)?, tol)?.function;
    let one_step = frac_apply_general(u, &OperatorSpec::on(u, side, alpha + beta)?, tol)?.function;
    max_deviation(&two_step, &one_step)
}

/// `max |a − b|` over indices valid in both.
pub fn max_deviation(a: &GridFunction, b: &GridFunction) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(invalid("deviation needs identical windows"));
    }
    let mut any = false;
    let mut worst: f64 = 0.0;
    for i in 0..a.len() {
        if a.valid()[i] && b.valid()[i] {
            any = true;
            worst = worst.max((a.samples()[i] - b.samples()[i]).abs());
        }
    }
    if !any {
        return Err(invalid("no index is valid in both functions"));
    }
    Ok(worst)
}

/// Why a membership decision was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MembershipBasis {
    CompactSupport,
    DecayExponent,
}

/// Whether `Σ_m |u((m ± n)h)| / (1+m)^{1−α}` is finite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembershipReport {
    pub alpha: f64,
    /// Finite part of the weighted sum over the window, larger of the two directions.
    pub weighted_sum: f64,
    pub is_member: bool,
    pub basis: MembershipBasis,
}

/// Decides membership from the tail models: zero tails always, decay tails
/// `c|n|^{-p}` iff `p > α`, nonzero constant and undefined tails never.
pub fn membership_ell(u: &GridFunction, alpha: f64) -> Result<MembershipReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("membership is defined for 0 < alpha < 1, got {alpha}")));
    }
    let side_ok = |side: Side| match u.extension(side) {
        Extension::ZeroOutside => true,
        Extension::Constant => u.tail_constant(side) == Some(0.0),
        Extension::Decay { p, .. } => p > alpha,
        Extension::Undefined => false,
    };
    let compact = u.is_compactly_supported();
    let weight = |m: usize| (1.0 + m as f64).powf(alpha - 1.0);
    let s = u.samples();
    let rightward: f64 = s.iter().enumerate().map(|(m, v)| v.abs() * weight(m)).sum();
    let leftward: f64 = s.iter().rev().enumerate().map(|(m, v)| v.abs() * weight(m)).sum();
    Ok(MembershipReport {
        alpha,
        weighted_sum: rightward.max(leftward),
        is_member: side_ok(Side::Left) && side_ok(Side::Right),
        basis: if compact {
            MembershipBasis::CompactSupport
        } else {
            MembershipBasis::DecayExponent
        },
    })
}

/// Applies `spec` with the chosen evaluation method.
pub fn frac_apply(u: &GridFunction, spec: &OperatorSpec, method: Method, tol: f64) -> Result<GridFunction> {
    match method {
        Method::Series => Ok(frac_apply_general(u, spec, tol)?.function),
        Method::Fft => fft_apply(u, spec),
        Method::Quadrature => {
            spec.check_mesh(u)?;
            let cfg = QuadratureConfig::default();
            if spec.order < 0.0 {
                frac_integral_quadrature(u, -spec.order, spec.side, &cfg)
            } else {
                frac_derivative_quadrature(u, spec.order, spec.side, &cfg)
            }
        }
    }
}

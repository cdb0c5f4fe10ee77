//! Norm ratios for the Schauder estimates of `(δ_right)^{-α}` between
//! discrete Hölder classes, and sweeps of those ratios over mesh steps and
//! input families.
//!
//! | case | map                              | ratio                                   |
//! |------|----------------------------------|-----------------------------------------|
//! | I    | `C^{0,β} → C^{0,β+α}`, `α+β<1`   | `‖δ^{-α}u‖_{0,β+α} / ‖u‖_{0,β}`          |
//! | II   | `C^{0,β} → C^{1,β+α−1}`, `α+β>1` | `‖δ^{-α}u‖_{1,β+α−1} / ‖u‖_{0,β}`        |
//! | III  | `C^{k,β} → C^{l,s}`              | `‖δ^{-α}u‖_{l,s} / ‖u‖_{k,β}`            |
//! | IV   | `ℓ^∞ → C^{0,α}`                  | `‖δ^{-α}u‖_{0,α} / max|u|`               |
//!
//! with `l = ⌊k+β+α⌋`, `s = k+β+α−l`. Bounded ratios across `h` and `u` are the
//! empirical face of constants independent of `h` and `u`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::fracops::{delta_right, frac_apply_series, max_deviation, membership_ell, OperatorSpec};
use crate::grid::{Extension, Grid, GridFunction, Side};
use crate::holder::{holder_norm, holder_norm_in_window, HolderIndex};

/// Distance from the excluded lines (`α+β = 1`, integer `k+β+α`) below which
/// parameters are rejected.
pub const BOUNDARY_MARGIN: f64 = 1e-6;

/// Tolerance of the internal identities checked in cases II and III.
pub const IDENTITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Case {
    I,
    II,
    III,
    IV,
}

impl std::str::FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "i" | "1" => Ok(Case::I),
            "ii" | "2" => Ok(Case::II),
            "iii" | "3" => Ok(Case::III),
            "iv" | "4" => Ok(Case::IV),
            other => Err(invalid(format!("unknown case {other:?}; expected i, ii, iii or iv"))),
        }
    }
}

/// Window padding used when evaluating `δ^{-α}u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioOptions {
    /// Physical length added on the left, where `δ^{-α}u` keeps a slowly decaying tail.
    pub left_pad: f64,
    /// Extra mesh points added on both sides.
    pub pad_points: usize,
    pub tol: f64,
}

impl Default for RatioOptions {
    fn default() -> Self {
        RatioOptions {
            left_pad: 4.0,
            pad_points: 16,
            tol: 1e-10,
        }
    }
}

/// A measured ratio with its parts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioOutcome {
    pub ratio: f64,
    pub numerator: f64,
    pub denominator: f64,
    /// Deviation in the internal identity (cases II and III).
    pub identity_residual: Option<f64>,
    /// Window `δ^{-α}u` was evaluated on.
    pub window: Grid,
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::CaseConstraintViolated(format!(
            "{name} must lie in (0, 1), got {x}"
        )));
    }
    Ok(())
}

fn check_nonzero_compact(u: &GridFunction) -> Result<()> {
    if !u.is_compactly_supported() {
        return Err(invalid("the input must have zero tails on both sides"));
    }
    if u.support().is_none() {
        return Err(invalid("the input must be nonzero"));
    }
    Ok(())
}

/// Validates the parameters of a case. `beta` is ignored for case IV and `k`
/// only matters for case III.
pub fn check_case(case: Case, alpha: f64, beta: f64, k: usize) -> Result<()> {
    check_unit("alpha", alpha)?;
    if case == Case::IV {
        return Ok(());
    }
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::CaseConstraintViolated(format!(
            "beta must lie in (0, 1], got {beta}"
        )));
    }
    match case {
        Case::I if alpha + beta >= 1.0 - BOUNDARY_MARGIN => Err(Error::CaseConstraintViolated(format!(
            "case I needs alpha + beta < 1, got {}",
            alpha + beta
        ))),
        Case::II if alpha + beta <= 1.0 + BOUNDARY_MARGIN => Err(Error::CaseConstraintViolated(format!(
            "case II needs alpha + beta > 1, got {}",
            alpha + beta
        ))),
        Case::III => {
            let total = k as f64 + beta + alpha;
            if (total - total.round()).abs() < BOUNDARY_MARGIN {
                Err(Error::CaseConstraintViolated(format!(
                    "case III needs k + beta + alpha off the integers, got {total}"
                )))
            } else {
                Ok(())
            }
        }
        _ => Ok(()),
    }
}

fn padded_input(u: &GridFunction, opts: &RatioOptions) -> Result<GridFunction> {
    let left = (opts.left_pad / u.h()).ceil() as usize + opts.pad_points;
    u.padded(left, opts.pad_points)
}

fn integral(u: &GridFunction, alpha: f64, tol: f64) -> Result<GridFunction> {
    frac_apply_series(u, &OperatorSpec::on(u, Side::Right, -alpha)?, tol)
}

fn relative_deviation(a: &GridFunction, b: &GridFunction) -> Result<f64> {
    let scale = a.max_abs().max(b.max_abs()).max(1.0);
    Ok(max_deviation(a, b)? / scale)
}

fn ensure_identity(what: &str, deviation: f64) -> Result<()> {
    if deviation > IDENTITY_TOL {
        return Err(Error::CrossCheck {
            what: what.into(),
            deviation,
            tol: IDENTITY_TOL,
        });
    }
    Ok(())
}

/// Case I ratio.
pub fn schauder_ratio_case_i(u: &GridFunction, alpha: f64, beta: f64, opts: &RatioOptions) -> Result<RatioOutcome> {
    check_case(Case::I, alpha, beta, 0)?;
    ratio_general(u, 0, alpha, beta, opts)
}

/// Case II ratio; also checks `δ_right(δ^{-α}u) = δ^{1−α}u`.
pub fn schauder_ratio_case_ii(u: &GridFunction, alpha: f64, beta: f64, opts: &RatioOptions) -> Result<RatioOutcome> {
    check_case(Case::II, alpha, beta, 0)?;
    ratio_general(u, 0, alpha, beta, opts)
}

/// Case III ratio for `u ∈ C^{k,β}`; for `k ≥ 1` also checks
/// `δ^{-α}(δ_right u) = δ_right(δ^{-α}u)`.
pub fn schauder_ratio_case_iii(
    u: &GridFunction,
    k: usize,
    alpha: f64,
    beta: f64,
    opts: &RatioOptions,
) -> Result<RatioOutcome> {
    check_case(Case::III, alpha, beta, k)?;
    ratio_general(u, k, alpha, beta, opts)
}

/// Case IV ratio.
pub fn schauder_ratio_case_iv(u: &GridFunction, alpha: f64, opts: &RatioOptions) -> Result<RatioOutcome> {
    check_case(Case::IV, alpha, 0.0, 0)?;
    check_nonzero_compact(u)?;
    membership_guard(u, alpha)?;
    let wide = padded_input(u, opts)?;
    let v = integral(&wide, alpha, opts.tol)?;
    let numerator = holder_norm_in_window(&v, HolderIndex::new(0, alpha)?)?.norm;
    let denominator = u.max_abs();
    Ok(RatioOutcome {
        ratio: numerator / denominator,
        numerator,
        denominator,
        identity_residual: None,
        window: *wide.grid(),
    })
}

fn membership_guard(u: &GridFunction, alpha: f64) -> Result<()> {
    if !membership_ell(u, alpha)?.is_member {
        return Err(Error::NotInDomain {
            order: -alpha,
            reason: "the input is outside the admissible weighted class".into(),
        });
    }
    Ok(())
}

fn ratio_general(u: &GridFunction, k: usize, alpha: f64, beta: f64, opts: &RatioOptions) -> Result<RatioOutcome> {
    check_nonzero_compact(u)?;
    membership_guard(u, alpha)?;
    let total = k as f64 + beta + alpha;
    let l = total.floor() as usize;
    let s = total - l as f64;

    let wide = padded_input(u, opts)?;
    let v = integral(&wide, alpha, opts.tol)?;
    let numerator = holder_norm_in_window(&v, HolderIndex::new(l, s)?)?.norm;
    let denominator = holder_norm(u, HolderIndex::new(k, beta)?)?.norm;

    let identity_residual = if k == 0 && l == 1 {
        let left = delta_right(&v)?;
        let right = frac_apply_series(&wide, &OperatorSpec::on(&wide, Side::Right, 1.0 - alpha)?, opts.tol)?;
        let dev = relative_deviation(&left, &right)?;
        ensure_identity("δ_right(δ^{-α}u) against δ^{1-α}u", dev)?;
        Some(dev)
    } else if k >= 1 {
        let left = integral(&delta_right(&wide)?, alpha, opts.tol)?;
        let right = delta_right(&v)?;
        let dev = relative_deviation(&left, &right)?;
        ensure_identity("δ^{-α}(δ_right u) against δ_right(δ^{-α}u)", dev)?;
        Some(dev)
    } else {
        None
    };

    Ok(RatioOutcome {
        ratio: numerator / denominator,
        numerator,
        denominator,
        identity_residual,
        window: *wide.grid(),
    })
}

/// Input recipes. Each one is a fixed function on the line sampled at `nh`,
/// except the impulse, which is the unit sequence at `n = 0` on every mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FamilyKind {
    /// `(1 − x²/4)^4` on `[−2, 2]`.
    Bump,
    /// `|x|^{k+β} (1 − x²/4)^3` on `[−2, 2]`: exactly as rough as the class allows.
    Cusp,
    /// The bump times a sum of four sines with seeded amplitudes, frequencies and phases.
    Random,
    Impulse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TestFamily {
    pub kind: FamilyKind,
    pub seed: u64,
}

impl TestFamily {
    pub fn new(kind: FamilyKind, seed: u64) -> Self {
        TestFamily { kind, seed }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            FamilyKind::Bump => "bump",
            FamilyKind::Cusp => "cusp",
            FamilyKind::Random => "random",
            FamilyKind::Impulse => "impulse",
        }
    }

    /// All four families with the given seed.
    pub fn all(seed: u64) -> Vec<TestFamily> {
        [
            FamilyKind::Bump,
            FamilyKind::Cusp,
            FamilyKind::Random,
            FamilyKind::Impulse,
        ]
        .into_iter()
        .map(|kind| TestFamily { kind, seed })
        .collect()
    }

    /// Samples on `[−⌈2/h⌉, ⌈2/h⌉]` with zero tails. `smoothness` is the
    /// exponent of the cusp.
    pub fn generate(&self, h: f64, smoothness: f64) -> Result<GridFunction> {
        let reach = (2.0 / h).ceil() as i64;
        let grid = Grid::new(h, -reach, reach)?;
        let bump = |x: f64| {
            if x.abs() < 2.0 {
                (1.0 - 0.25 * x * x).powi(4)
            } else {
                0.0
            }
        };
        match self.kind {
            FamilyKind::Bump => GridFunction::from_fn(grid, Extension::ZeroOutside, bump),
            FamilyKind::Cusp => GridFunction::from_fn(grid, Extension::ZeroOutside, |x| {
                if x.abs() < 2.0 {
                    x.abs().powf(smoothness) * (1.0 - 0.25 * x * x).powi(3)
                } else {
                    0.0
                }
            }),
            FamilyKind::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let terms: Vec<(f64, f64, f64)> = (0..4)
                    .map(|_| {
                        (
                            rng.random_range(-1.0..1.0),
                            rng.random_range(1.0..8.0),
                            rng.random_range(0.0..std::f64::consts::TAU),
                        )
                    })
                    .collect();
                GridFunction::from_fn(grid, Extension::ZeroOutside, |x| {
                    bump(x) * terms.iter().map(|(a, w, p)| a * (w * x + p).sin()).sum::<f64>()
                })
            }
            FamilyKind::Impulse => GridFunction::impulse(grid, 0),
        }
    }
}

impl std::str::FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bump" => Ok(FamilyKind::Bump),
            "cusp" => Ok(FamilyKind::Cusp),
            "random" => Ok(FamilyKind::Random),
            "impulse" => Ok(FamilyKind::Impulse),
            other => Err(invalid(format!("unknown family {other:?}"))),
        }
    }
}

/// One point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioEntry {
    pub family: String,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub h: f64,
    pub ratio: f64,
    /// Ratio recomputed with twice the left padding.
    pub doubled_ratio: f64,
    /// `|doubled − ratio| / ratio`.
    pub stability: f64,
    pub identity_residual: Option<f64>,
    pub window_len: usize,
}

/// `max/min` of the ratio across the mesh steps for one family and parameter pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HSpread {
    pub family: String,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub max_over_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchauderSweepReport {
    pub case: Case,
    /// Only meaningful for case III.
    pub k: usize,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub h_list: Vec<f64>,
    pub ratios: Vec<RatioEntry>,
    pub spreads: Vec<HSpread>,
    /// `None` when nothing was evaluated.
    pub max_ratio: Option<f64>,
    pub min_ratio: Option<f64>,
    pub max_spread: Option<f64>,
    pub max_stability: Option<f64>,
    pub max_identity_residual: Option<f64>,
}

/// Sweep settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepConfig {
    pub case: Case,
    /// Smoothness index of the input class in case III.
    pub k: usize,
    pub options: RatioOptions,
}

impl SweepConfig {
    pub fn new(case: Case) -> Self {
        SweepConfig {
            case,
            k: if case == Case::III { 1 } else { 0 },
            options: RatioOptions::default(),
        }
    }
}

fn evaluate(cfg: &SweepConfig, u: &GridFunction, alpha: f64, beta: f64, opts: &RatioOptions) -> Result<RatioOutcome> {
    match cfg.case {
        Case::I => schauder_ratio_case_i(u, alpha, beta, opts),
        Case::II => schauder_ratio_case_ii(u, alpha, beta, opts),
        Case::III => schauder_ratio_case_iii(u, cfg.k, alpha, beta, opts),
        Case::IV => schauder_ratio_case_iv(u, alpha, opts),
    }
}

/// Evaluates the case ratio for every family, `(alphas[i], betas[i])` pair and
/// mesh step. Case IV takes no `betas`. All parameters are checked before any
/// evaluation.
pub fn run_sweep(
    cfg: &SweepConfig,
    families: &[TestFamily],
    alphas: &[f64],
    betas: &[f64],
    h_list: &[f64],
) -> Result<SchauderSweepReport> {
    let pairs: Vec<(f64, Option<f64>)> = if cfg.case == Case::IV {
        if !betas.is_empty() {
            return Err(Error::CaseConstraintViolated("case IV takes no beta values".into()));
        }
        alphas.iter().map(|&a| (a, None)).collect()
    } else {
        if alphas.len() != betas.len() {
            return Err(invalid(format!(
                "alphas and betas are paired and must have equal length, got {} and {}",
                alphas.len(),
                betas.len()
            )));
        }
        alphas.iter().zip(betas).map(|(&a, &b)| (a, Some(b))).collect()
    };
    for &(a, b) in &pairs {
        check_case(cfg.case, a, b.unwrap_or(0.0), cfg.k)?;
    }
    for &h in h_list {
        if !(h.is_finite() && h > 0.0) {
            return Err(invalid(format!("mesh steps must be positive, got {h}")));
        }
    }

    let mut jobs = Vec::new();
    for fam in families {
        for &(a, b) in &pairs {
            for &h in h_list {
                jobs.push((*fam, a, b, h));
            }
        }
    }
    let ratios: Vec<RatioEntry> = jobs
        .par_iter()
        .map(|&(fam, alpha, beta, h)| {
            let smoothness = cfg.k as f64 + beta.unwrap_or(alpha);
            let u = fam.generate(h, smoothness)?;
            let b = beta.unwrap_or(0.0);
            let base = evaluate(cfg, &u, alpha, b, &cfg.options)?;
            let doubled_opts = RatioOptions {
                left_pad: 2.0 * cfg.options.left_pad,
                ..cfg.options
            };
            let doubled = evaluate(cfg, &u, alpha, b, &doubled_opts)?;
            Ok(RatioEntry {
                family: fam.name().to_string(),
                alpha,
                beta,
                h,
                ratio: base.ratio,
                doubled_ratio: doubled.ratio,
                stability: (doubled.ratio - base.ratio).abs() / base.ratio,
                identity_residual: base.identity_residual,
                window_len: base.window.len(),
            })
        })
        .collect::<Result<_>>()?;

    let mut spreads = Vec::new();
    for fam in families {
        for &(a, b) in &pairs {
            let group: Vec<f64> = ratios
                .iter()
                .filter(|e| e.family == fam.name() && e.alpha == a && e.beta == b)
                .map(|e| e.ratio)
                .collect();
            if group.is_empty() {
                continue;
            }
            let hi = group.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lo = group.iter().copied().fold(f64::INFINITY, f64::min);
            spreads.push(HSpread {
                family: fam.name().to_string(),
                alpha: a,
                beta: b,
                max_over_min: hi / lo,
            });
        }
    }

    let fold_max = |it: &mut dyn Iterator<Item = f64>| it.reduce(f64::max);
    Ok(SchauderSweepReport {
        case: cfg.case,
        k: cfg.k,
        alphas: alphas.to_vec(),
        betas: betas.to_vec(),
        h_list: h_list.to_vec(),
        max_ratio: fold_max(&mut ratios.iter().map(|e| e.ratio)),
        min_ratio: ratios.iter().map(|e| e.ratio).reduce(f64::min),
        max_spread: fold_max(&mut spreads.iter().map(|s| s.max_over_min)),
        max_stability: fold_max(&mut ratios.iter().map(|e| e.stability)),
        max_identity_residual: fold_max(&mut ratios.iter().filter_map(|e| e.identity_residual)),
        ratios,
        spreads,
    })
}

/// `[1, 1/2, …, 2^{-(levels-1)}]`.
pub fn dyadic_steps(levels: usize) -> Vec<f64> {
    (0..levels).map(|j| 0.5f64.powi(j as i32)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn impulse(h: f64) -> GridFunction {
        TestFamily::new(FamilyKind::Impulse, 0).generate(h, 0.5).unwrap()
    }

    #[test]
    fn case_i_impulse_unit_mesh_by_hand() {
        // ‖u‖_{0,1/2} = 1 + 1; δ^{-1/4}u = Λ^{-1/4}(−n) has sup 1 and its
        // steepest pair is (0, 1) with quotient 1
        let r = schauder_ratio_case_i(&impulse(1.0), 0.25, 0.5, &RatioOptions::default()).unwrap();
        assert_eq!(r.denominator, 2.0);
        assert_eq!(r.numerator, 2.0);
        assert_eq!(r.ratio, 1.0);
    }

    #[test]
    fn case_iv_impulse_unit_mesh_by_hand() {
        let r = schauder_ratio_case_iv(&impulse(1.0), 0.5, &RatioOptions::default()).unwrap();
        assert_eq!(r.ratio, 2.0);
    }

    #[test]
    fn constraints_are_enforced() {
        let u = impulse(1.0);
        let o = RatioOptions::default();
        assert!(matches!(
            schauder_ratio_case_i(&u, 0.6, 0.6, &o),
            Err(Error::CaseConstraintViolated(_))
        ));
        assert!(matches!(
            schauder_ratio_case_ii(&u, 0.3, 0.4, &o),
            Err(Error::CaseConstraintViolated(_))
        ));
        assert!(matches!(
            schauder_ratio_case_iii(&u, 1, 0.5, 0.5, &o),
            Err(Error::CaseConstraintViolated(_))
        ));
        assert!(matches!(
            schauder_ratio_case_i(&u, 0.5, 0.5 - 1e-7, &o),
            Err(Error::CaseConstraintViolated(_))
        ));
    }

    #[test]
    fn ratios_are_homogeneous() {
        let o = RatioOptions::default();
        let u = TestFamily::new(FamilyKind::Random, 3).generate(0.25, 0.5).unwrap();
        for c in [10.0, -3.0] {
            let cu = u.scale(c);
            let a = schauder_ratio_case_i(&u, 0.3, 0.4, &o).unwrap().ratio;
            let b = schauder_ratio_case_i(&cu, 0.3, 0.4, &o).unwrap().ratio;
            assert!((a - b).abs() <= 1e-12 * a);
            let a = schauder_ratio_case_iv(&u, 0.5, &o).unwrap().ratio;
            let b = schauder_ratio_case_iv(&cu, 0.5, &o).unwrap().ratio;
            assert!((a - b).abs() <= 1e-12 * a);
        }
    }

    #[test]
    fn case_ii_and_iii_identities() {
        let o = RatioOptions::default();
        let u = TestFamily::new(FamilyKind::Bump, 0).generate(0.125, 0.5).unwrap();
        let r = schauder_ratio_case_ii(&u, 0.7, 0.5, &o).unwrap();
        assert!(r.identity_residual.unwrap() <= IDENTITY_TOL);
        let r = schauder_ratio_case_iii(&u, 1, 0.3, 0.4, &o).unwrap();
        assert!(r.identity_residual.unwrap() <= IDENTITY_TOL);
        let r = schauder_ratio_case_iii(&u, 1, 0.7, 0.5, &o).unwrap();
        assert!(r.ratio.is_finite() && r.ratio > 0.0);
    }

    #[test]
    fn case_iii_with_k_zero_reduces_to_i_and_ii() {
        let o = RatioOptions::default();
        let u = TestFamily::new(FamilyKind::Cusp, 0).generate(0.25, 0.5).unwrap();
        let a = schauder_ratio_case_iii(&u, 0, 0.3, 0.4, &o).unwrap().ratio;
        assert_eq!(a, schauder_ratio_case_i(&u, 0.3, 0.4, &o).unwrap().ratio);
        let a = schauder_ratio_case_iii(&u, 0, 0.7, 0.5, &o).unwrap().ratio;
        assert_eq!(a, schauder_ratio_case_ii(&u, 0.7, 0.5, &o).unwrap().ratio);
    }

    #[test]
    fn sweep_edge_cases() {
        let cfg = SweepConfig::new(Case::I);
        let empty = run_sweep(&cfg, &[], &[0.3], &[0.4], &[1.0]).unwrap();
        assert!(empty.ratios.is_empty());
        assert_eq!(empty.max_ratio, None);

        let bad = run_sweep(&cfg, &TestFamily::all(0), &[0.3, 0.6], &[0.4, 0.6], &[1.0]);
        assert!(matches!(bad, Err(Error::CaseConstraintViolated(_))));
    }

    #[test]
    fn sweep_is_deterministic() {
        let cfg = SweepConfig::new(Case::IV);
        let fams = TestFamily::all(7);
        let a = run_sweep(&cfg, &fams, &[0.5], &[], &dyadic_steps(3)).unwrap();
        let b = run_sweep(&cfg, &fams, &[0.5], &[], &dyadic_steps(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.ratios.len(), 12);
    }
}

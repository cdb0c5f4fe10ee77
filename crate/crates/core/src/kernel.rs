//! The binomial-type kernel `Λ^{-α}(m) = α(α+1)…(α+m-1)/m!`.
//!
//! `Λ^{-α}` is the weight sequence of every discrete fractional operator in
//! this crate: positive `α` gives fractional sums, negative `α` fractional
//! differences. Tables are generated by the multiplicative recurrence, which
//! is valid for every real order; the log-Gamma route exists as an
//! independent cross-check and is undefined at the Gamma poles.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use parking_lot::RwLock;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::special;

/// How a [`KernelTable`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum KernelMethod {
    Recurrence,
    LogGamma,
    /// Built from the first differences of a table of order `α + 1`.
    Differenced,
}

/// `Λ^{-α}(0..=M)` for a fixed real order `α`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelTable {
    alpha: f64,
    values: Vec<f64>,
    method: KernelMethod,
    tail_exponent: f64,
}

impl KernelTable {
    fn new(alpha: f64, values: Vec<f64>, method: KernelMethod) -> Self {
        KernelTable {
            alpha,
            values,
            method,
            tail_exponent: alpha - 1.0,
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn method(&self) -> KernelMethod {
        self.method
    }

    /// Exponent `α - 1` of the power-law decay `Λ^{-α}(m) ~ m^{α-1}/Γ(α)`.
    pub fn tail_exponent(&self) -> f64 {
        self.tail_exponent
    }

    /// Largest index `M` stored.
    pub fn max_index(&self) -> usize {
        self.values.len() - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, m: usize) -> Option<f64> {
        self.values.get(m).copied()
    }

    /// Index of the last nonzero entry when the kernel has finite support
    /// (orders 0, -1, -2, ...), `None` otherwise.
    pub fn finite_support(&self) -> Option<usize> {
        if special::is_nonpositive_integer(self.alpha) {
            Some((-self.alpha) as usize)
        } else {
            None
        }
    }

    /// Overwrites one entry. Only meant for fault-injection in the self-test.
    #[doc(hidden)]
    pub fn corrupt(&mut self, m: usize, value: f64) {
        self.values[m] = value;
    }
}

/// `Λ^{-α}(0..=max_index)` by `Λ(m+1) = Λ(m)·(α+m)/(m+1)`.
pub fn kernel_recurrence(alpha: f64, max_index: usize) -> KernelTable {
    assert!(alpha.is_finite(), "kernel order must be finite");
    let mut values = Vec::with_capacity(max_index + 1);
    let mut current = 1.0;
    values.push(current);
    for m in 0..max_index {
        current *= (alpha + m as f64) / (m as f64 + 1.0);
        values.push(current);
    }
    KernelTable::new(alpha, values, KernelMethod::Recurrence)
}

/// `Λ^{-α}(m) = Γ(m+α) / (Γ(α)·m!)` evaluated in log space with sign tracking.
pub fn kernel_loggamma(alpha: f64, max_index: usize) -> Result<KernelTable> {
    if !alpha.is_finite() {
        return Err(invalid("kernel order must be finite"));
    }
    if special::is_nonpositive_integer(alpha) {
        return Err(Error::Pole { alpha });
    }
    let (ln_ga, sign_ga) = special::ln_gamma_signed(alpha);
    let mut values = Vec::with_capacity(max_index + 1);
    values.push(1.0);
    for m in 1..=max_index {
        let x = m as f64 + alpha;
        if special::is_nonpositive_integer(x) {
            // 1/Γ(α) finite, Γ(m+α) infinite cannot happen for non-integer α
            unreachable!("m + alpha is an integer only when alpha is");
        }
        let (ln_num, sign_num) = special::ln_gamma_signed(x);
        let (ln_fact, _) = special::ln_gamma_signed(m as f64 + 1.0);
        values.push(sign_num * sign_ga * (ln_num - ln_ga - ln_fact).exp());
    }
    Ok(KernelTable::new(alpha, values, KernelMethod::LogGamma))
}

/// First differences `d[j] = Λ^{-α}(j+1) − Λ^{-α}(j)`, returned as the table of
/// order `α − 1` they form: `[1, d[0], d[1], …]`.
pub fn forward_difference_kernel(table: &KernelTable) -> Result<KernelTable> {
    if table.len() < 2 {
        return Err(invalid("forward difference needs at least two kernel values"));
    }
    let mut values = Vec::with_capacity(table.len());
    values.push(1.0);
    values.extend(table.values.windows(2).map(|w| w[1] - w[0]));
    Ok(KernelTable::new(table.alpha - 1.0, values, KernelMethod::Differenced))
}

/// Cauchy product of two kernel tables, truncated to the shorter length.
pub fn convolve_tables(a: &KernelTable, b: &KernelTable) -> Vec<f64> {
    let len = a.len().min(b.len());
    (0..len)
        .map(|n| (0..=n).map(|j| a.values[n - j] * b.values[j]).sum())
        .collect()
}

/// `Σ_{j≤n} Λ^{-α}(n-j)·Λ^{-β}(j)` for `n = 0..=max_index`.
pub fn convolve_kernels(alpha: f64, beta: f64, max_index: usize) -> Vec<f64> {
    convolve_tables(
        &kernel_recurrence(alpha, max_index),
        &kernel_recurrence(beta, max_index),
    )
}

/// Partial sum `Σ_{n≤N} Λ^{-α}(n) zⁿ` of the generating function `(1-z)^{-α}`.
pub fn generating_function_partial(alpha: f64, z: f64, max_index: usize) -> f64 {
    let table = kernel_recurrence(alpha, max_index);
    let mut acc = 0.0;
    for &v in table.values.iter().rev() {
        acc = acc * z + v;
    }
    acc
}

/// Relative deviations `e(n) = |Λ^{-α}(n)·n^{1-α}·Γ(α) − 1|` from the leading
/// power-law asymptotics.
pub fn asymptotic_check(alpha: f64, n_values: &[usize]) -> Result<Vec<f64>> {
    if special::is_nonpositive_integer(alpha) {
        return Err(Error::Pole { alpha });
    }
    if n_values.contains(&0) {
        return Err(invalid("asymptotic check needs n >= 1"));
    }
    let Some(&max_n) = n_values.iter().max() else {
        return Ok(Vec::new());
    };
    let table = kernel_recurrence(alpha, max_n);
    let gamma_alpha = special::gamma(alpha);
    Ok(n_values
        .iter()
        .map(|&n| {
            let scaled = table.values[n] * (n as f64).powf(1.0 - alpha) * gamma_alpha;
            (scaled - 1.0).abs()
        })
        .collect())
}

/// Empirical envelope `e(n) ≤ C/n` for the asymptotic deviation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticEnvelope {
    pub alpha: f64,
    /// `max n·e(n)` over the fit range.
    pub c_emp: f64,
    pub safety: f64,
    pub fit_range: (usize, usize),
    pub validate_range: (usize, usize),
    /// `max n·e(n) / (safety·c_emp)` over the validation range; `≤ 1` when the envelope holds.
    pub worst_ratio: f64,
}

impl AsymptoticEnvelope {
    pub fn holds(&self) -> bool {
        self.worst_ratio <= 1.0
    }
}

pub const ENVELOPE_FIT_RANGE: (usize, usize) = (10, 100);
pub const ENVELOPE_VALIDATE_RANGE: (usize, usize) = (1_000, 100_000);
pub const ENVELOPE_SAFETY: f64 = 2.0;

/// Fits `C_emp` on `fit` and checks `e(n) ≤ safety·C_emp/n` on `validate`.
pub fn fit_asymptotic_envelope(
    alpha: f64,
    fit: (usize, usize),
    validate: (usize, usize),
    safety: f64,
) -> Result<AsymptoticEnvelope> {
    if fit.0 == 0 || fit.0 > fit.1 || validate.0 == 0 || validate.0 > validate.1 {
        return Err(invalid("envelope ranges must be nonempty and start at n >= 1"));
    }
    let fit_n: Vec<usize> = (fit.0..=fit.1).collect();
    let c_emp = asymptotic_check(alpha, &fit_n)?
        .iter()
        .zip(&fit_n)
        .map(|(e, &n)| e * n as f64)
        .fold(0.0, f64::max);

    let val_n: Vec<usize> = (validate.0..=validate.1).collect();
    let worst = asymptotic_check(alpha, &val_n)?
        .iter()
        .zip(&val_n)
        .map(|(e, &n)| e * n as f64)
        .fold(0.0, f64::max);
    let worst_ratio = if worst == 0.0 { 0.0 } else { worst / (safety * c_emp) };
    Ok(AsymptoticEnvelope {
        alpha,
        c_emp,
        safety,
        fit_range: fit,
        validate_range: validate,
        worst_ratio,
    })
}

pub fn asymptotic_envelope(alpha: f64) -> Result<AsymptoticEnvelope> {
    fit_asymptotic_envelope(alpha, ENVELOPE_FIT_RANGE, ENVELOPE_VALIDATE_RANGE, ENVELOPE_SAFETY)
}

/// Constant `K` with `|Λ^{-α}(m)| ≤ K·m^{α-1}` for all `m ≥ 1`.
///
/// For `0 < α ≤ 1` this is `1/Γ(α)` (Wendel's inequality). Otherwise it is the
/// larger of the observed maximum over `m ≤ 100` and `(1 + C_emp)/|Γ(α)|`, an
/// empirical envelope rather than a proof.
pub fn kernel_bound_constant(alpha: f64) -> Result<f64> {
    if special::is_nonpositive_integer(alpha) {
        return Err(Error::Pole { alpha });
    }
    let recip = special::recip_gamma(alpha).abs();
    if alpha > 0.0 && alpha <= 1.0 {
        return Ok(recip);
    }
    let table = kernel_recurrence(alpha, ENVELOPE_FIT_RANGE.1);
    let observed = (1..table.len())
        .map(|m| table.values[m].abs() * (m as f64).powf(1.0 - alpha))
        .fold(0.0, f64::max);
    let c_emp = fit_asymptotic_envelope(alpha, ENVELOPE_FIT_RANGE, ENVELOPE_FIT_RANGE, ENVELOPE_SAFETY)?.c_emp;
    Ok(observed.max((1.0 + c_emp) * recip))
}

/// Outcome of the telescoping-identity check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TelescopingCheck {
    pub alpha: f64,
    pub shift: u64,
    pub m_tail: usize,
    /// Truncated left-hand side; zero for the untruncated identity.
    pub residual: f64,
    /// Certified bound on the discarded infinite tail.
    pub tail_bound: f64,
    /// Worst-case floating-point error of the truncated sums.
    pub roundoff: f64,
}

impl TelescopingCheck {
    pub fn within_bound(&self) -> bool {
        self.residual.abs() <= self.tail_bound + self.roundoff
    }
}

/// Evaluates `Σ_{m≥n}(Λ(m-n) − Λ(m-l)) − Σ_{l≤m<n} Λ(m-l)` with the first sum cut
/// at `m - n ≤ m_tail`, and bounds what the cut discards by
/// `K·(n-l)·M^{α-1}/(1-α)`, `K = (1 + C_emp)/Γ(α)`.
///
/// With `tol = Some(t)` the check fails with [`Error::WindowTooSmall`] when the
/// tail bound alone exceeds `t`.
pub fn lemma2_telescoping_check(
    alpha: f64,
    n: i64,
    l: i64,
    m_tail: usize,
    tol: Option<f64>,
) -> Result<TelescopingCheck> {
    if n <= l {
        return Err(invalid("telescoping check needs n > l"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("telescoping check needs 0 < alpha < 1"));
    }
    if m_tail == 0 {
        return Err(invalid("m_tail must be positive"));
    }
    let shift = (n - l) as usize;
    let table = kernel_recurrence(alpha, m_tail + shift);
    let lam = table.values();

    let mut head = 0.0;
    let mut abs_sum = 0.0;
    for k in 0..=m_tail {
        let term = lam[k] - lam[k + shift];
        head += term;
        abs_sum += lam[k].abs() + lam[k + shift].abs();
    }
    let mut finite = 0.0;
    for &v in &lam[..shift] {
        finite += v;
        abs_sum += v.abs();
    }
    let residual = head - finite;
    let roundoff = (m_tail + shift + 2) as f64 * f64::EPSILON * abs_sum;

    let c_emp = asymptotic_envelope(alpha)?.c_emp;
    let k_const = (1.0 + c_emp) / special::gamma(alpha);
    let tail_bound = k_const * shift as f64 * (m_tail as f64).powf(alpha - 1.0) / (1.0 - alpha);

    if let Some(t) = tol {
        if tail_bound > t {
            return Err(Error::WindowTooSmall {
                bound: tail_bound,
                tol: t,
            });
        }
    }
    Ok(TelescopingCheck {
        alpha,
        shift: shift as u64,
        m_tail,
        residual,
        tail_bound,
        roundoff,
    })
}

/// Shared store of recurrence tables keyed by order.
///
/// Each order keeps its longest table; a longer request rebuilds and replaces
/// it. Rebuilt tables share their prefix bit-for-bit, so concurrent writers
/// racing on the same order are harmless.
#[derive(Debug, Default)]
pub struct KernelCache {
    tables: RwLock<HashMap<u64, Arc<KernelTable>>>,
}

impl KernelCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// A table of order `alpha` holding at least `max_index + 1` values.
    pub fn get(&self, alpha: f64, max_index: usize) -> Arc<KernelTable> {
        let key = alpha.to_bits();
        if let Some(t) = self.tables.read().get(&key) {
            if t.max_index() >= max_index {
                return Arc::clone(t);
            }
        }
        let fresh = Arc::new(kernel_recurrence(alpha, max_index));
        let mut guard = self.tables.write();
        match guard.get(&key) {
            Some(existing) if existing.max_index() >= max_index => Arc::clone(existing),
            _ => {
                guard.insert(key, Arc::clone(&fresh));
                fresh
            }
        }
    }

    pub fn len(&self) -> usize {
        self.tables.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.read().is_empty()
    }
}

/// Process-wide cache used by the operator routines.
pub fn global_cache() -> &'static KernelCache {
    static CACHE: OnceLock<KernelCache> = OnceLock::new();
    CACHE.get_or_init(KernelCache::new)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (i, (x, y)) in a.iter().zip(b).enumerate() {
            assert!((x - y).abs() <= tol, "index {i}: {x} vs {y}");
        }
    }

    #[test]
    fn recurrence_examples() {
        assert_eq!(kernel_recurrence(0.5, 2).values(), &[1.0, 0.5, 0.375]);
        assert_eq!(kernel_recurrence(1.0, 3).values(), &[1.0; 4]);
        assert_eq!(kernel_recurrence(-2.0, 4).values(), &[1.0, -2.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_order_is_delta() {
        let t = kernel_recurrence(0.0, 5);
        assert_eq!(t.values(), &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(t.finite_support(), Some(0));
        assert_eq!(kernel_recurrence(-3.0, 8).finite_support(), Some(3));
        assert_eq!(kernel_recurrence(0.4, 8).finite_support(), None);
    }

    #[test]
    fn loggamma_examples() {
        assert_close(kernel_loggamma(0.5, 2).unwrap().values(), &[1.0, 0.5, 0.375], 1e-14);
        assert_close(kernel_loggamma(1.5, 1).unwrap().values(), &[1.0, 1.5], 1e-14);
    }

    #[test]
    fn loggamma_rejects_poles() {
        assert_eq!(kernel_loggamma(0.0, 3), Err(Error::Pole { alpha: 0.0 }));
        assert!(matches!(kernel_loggamma(-2.0, 3), Err(Error::Pole { .. })));
    }

    #[test]
    fn loggamma_agrees_with_recurrence_at_large_m() {
        let r = kernel_recurrence(0.3, 10_000);
        let g = kernel_loggamma(0.3, 10_000).unwrap();
        for (a, b) in r.values().iter().zip(g.values()) {
            assert!((a - b).abs() <= 1e-10 * b.abs());
        }
    }

    #[test]
    fn loggamma_handles_orders_below_minus_one() {
        let r = kernel_recurrence(-2.5, 40);
        let g = kernel_loggamma(-2.5, 40).unwrap();
        for (a, b) in r.values().iter().zip(g.values()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300));
        }
    }

    #[test]
    fn table_invariants_for_fractional_sum_orders() {
        let t = kernel_recurrence(0.35, 2000);
        assert_eq!(t.values()[0], 1.0);
        assert!(t.values().windows(2).all(|w| w[1] > 0.0 && w[1] <= w[0]));
        assert!((t.tail_exponent() + 0.65).abs() < 1e-15);
    }

    #[test]
    fn difference_examples() {
        let d = forward_difference_kernel(&kernel_recurrence(0.5, 4)).unwrap();
        assert_eq!(d.values()[1], -0.5);
        assert!((d.alpha() + 0.5).abs() < 1e-15);

        let d1 = forward_difference_kernel(&kernel_recurrence(1.0, 16)).unwrap();
        assert!(d1.values()[1..].iter().all(|&v| v == 0.0));

        let d3 = forward_difference_kernel(&kernel_recurrence(0.3, 64)).unwrap();
        let oracle = kernel_recurrence(-0.7, 64);
        assert_close(d3.values(), oracle.values(), 1e-12);
    }

    #[test]
    fn difference_needs_two_values() {
        assert!(forward_difference_kernel(&kernel_recurrence(0.5, 0)).is_err());
    }

    #[test]
    fn convolution_examples() {
        assert_eq!(convolve_kernels(0.5, 0.5, 1), vec![1.0, 1.0]);

        let c = convolve_kernels(0.3, -0.3, 64);
        assert_eq!(c[0], 1.0);
        assert!(c[1..].iter().all(|v| v.abs() < 1e-15));

        let c = convolve_kernels(0.25, 0.5, 256);
        assert_close(&c, kernel_recurrence(0.75, 256).values(), 1e-11);
    }

    #[test]
    fn asymptotic_examples() {
        let e = asymptotic_check(1.0, &[1, 10, 1000]).unwrap();
        assert_eq!(e, vec![0.0, 0.0, 0.0]);

        let e1 = asymptotic_check(0.5, &[1]).unwrap()[0];
        let expected = (0.5 * std::f64::consts::PI.sqrt() - 1.0).abs();
        assert!((e1 - expected).abs() < 1e-14);

        assert!(matches!(asymptotic_check(-1.0, &[3]), Err(Error::Pole { .. })));
        assert!(asymptotic_check(0.5, &[0]).is_err());
    }

    #[test]
    fn asymptotic_decay_is_first_order() {
        // oracle: log-Gamma evaluation, independent of the recurrence
        let alpha = 0.5;
        let g = kernel_loggamma(alpha, 10_000).unwrap();
        let ga = special::gamma(alpha);
        let dev = |n: usize| (g.values()[n] * (n as f64).powf(1.0 - alpha) * ga - 1.0).abs();
        let ratio = dev(10_000) / dev(100);
        assert!((ratio - 1e-2).abs() < 1e-4, "ratio {ratio}");

        let e = asymptotic_check(alpha, &[100, 10_000]).unwrap();
        assert!((e[0] - dev(100)).abs() < 1e-12);
        assert!((e[1] - dev(10_000)).abs() < 1e-10);
    }

    #[test]
    fn envelope_holds_for_reference_orders() {
        for &a in &[0.1, 0.5, 0.9] {
            let env = asymptotic_envelope(a).unwrap();
            assert!(env.c_emp > 0.0);
            assert!(env.holds(), "alpha {a}: worst ratio {}", env.worst_ratio);
        }
    }

    #[test]
    fn bound_constant_dominates_table() {
        for &a in &[0.2, 0.8, 1.5, -0.4, -1.5, 2.3] {
            let k = kernel_bound_constant(a).unwrap();
            let t = kernel_recurrence(a, 5000);
            for m in 1..t.len() {
                let lhs = t.values()[m].abs();
                let rhs = k * (m as f64).powf(a - 1.0);
                assert!(lhs <= rhs * (1.0 + 1e-12), "alpha {a} m {m}: {lhs} > {rhs}");
            }
        }
    }

    #[test]
    fn telescoping_examples() {
        let c = lemma2_telescoping_check(0.5, 1, 0, 1_000_000, None).unwrap();
        assert!(c.within_bound(), "{c:?}");
        // the truncated sum misses Λ(M+1) ≈ M^{-1/2}/Γ(1/2)
        assert!(c.residual.abs() < 1e-3);

        let c = lemma2_telescoping_check(0.9, 4, 0, 100_000, None).unwrap();
        assert!(c.within_bound(), "{c:?}");
    }

    #[test]
    fn telescoping_guards() {
        assert!(lemma2_telescoping_check(0.5, 3, 3, 100, None).is_err());
        assert!(lemma2_telescoping_check(1.2, 3, 0, 100, None).is_err());
        assert!(matches!(
            lemma2_telescoping_check(0.5, 1, 0, 1000, Some(1e-6)),
            Err(Error::WindowTooSmall { .. })
        ));
    }

    #[test]
    fn cache_reuses_and_extends() {
        let cache = KernelCache::new();
        let a = cache.get(0.5, 10);
        let b = cache.get(0.5, 5);
        assert!(Arc::ptr_eq(&a, &b));
        let c = cache.get(0.5, 20);
        assert_eq!(c.max_index(), 20);
        assert_eq!(&c.values()[..11], a.values());
        assert_eq!(cache.len(), 1);
    }

    #[test]
    fn cache_is_consistent_under_concurrency() {
        let cache = KernelCache::new();
        std::thread::scope(|s| {
            for i in 0..8 {
                let cache = &cache;
                s.spawn(move || {
                    let t = cache.get(0.25, 100 + 10 * i);
                    assert!(t.max_index() >= 100 + 10 * i);
                });
            }
        });
        let t = cache.get(0.25, 0);
        assert_eq!(&t.values()[..101], kernel_recurrence(0.25, 100).values());
    }
}

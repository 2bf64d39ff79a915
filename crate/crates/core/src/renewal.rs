//! Renewal (potential) sequence `C(n)` of the step-count walk `τ`.
//!
//! `C(0) = 1` and `C(n) = Σ_{k=1}^{n} c(ψ, k) C(n-k)`; its generating
//! function is `1/ψ(1 - z)`. `C(n)` is the probability that some `τ_k`
//! equals `n`, and it weights the base-walk kernel in the Green function.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::bernstein::{BernsteinSpec, SubordinationCoefficients};
use crate::error::{Error, Result};
use crate::special::gamma;

/// Largest `N` computed by the direct quadratic recurrence.
pub const DIRECT_LIMIT: usize = 1 << 14;

/// Minimum exact range for diagnostics and extrapolation.
pub const MIN_EXACT_RANGE: usize = 1 << 10;

const SHAPE_TOLERANCE: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RenewalSource {
    Recurrence,
    SeriesInversion,
    ClosedForm,
}

#[derive(Clone, Debug)]
pub struct RenewalSequence {
    values: Vec<f64>,
    alpha: f64,
    source: RenewalSource,
    spec: BernsteinSpec,
    /// Values at indices `>= exact_len` come from the fitted asymptotic law.
    exact_len: usize,
    amplitude: Option<f64>,
    rounding_bound: f64,
}

impl RenewalSequence {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, n: usize) -> f64 {
        self.values[n]
    }

    /// Highest index stored.
    pub fn len(&self) -> usize {
        self.values.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn source(&self) -> RenewalSource {
        self.source
    }

    pub fn spec(&self) -> &BernsteinSpec {
        &self.spec
    }

    /// Number of leading entries that are exact (not extrapolated).
    pub fn exact_len(&self) -> usize {
        self.exact_len
    }

    pub fn is_approximate(&self) -> bool {
        self.exact_len < self.values.len()
    }

    /// Bound on accumulated rounding; truncation contributes nothing because
    /// `C(n)` only involves `c(ψ, 1..=n)`.
    pub fn truncation_bias_bound(&self) -> f64 {
        self.rounding_bound
    }

    /// Prefix sums `M(n) = Σ_{k ≤ n} C(k)`.
    pub fn prefix_sums(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.values
            .iter()
            .map(|&c| {
                acc += c;
                acc
            })
            .collect()
    }

    /// The asymptotic profile `n^{α/2-1} l(n)`, unnormalised.
    pub fn profile(&self, n: f64) -> Option<f64> {
        let l = self.spec.slowly_varying(n)?;
        Some(n.powf(self.alpha / 2.0 - 1.0) * l)
    }

    /// `C` at a real argument beyond the stored range, from the asymptotic
    /// law. For `ψ_α` this is the exact continuation
    /// `Γ(t + α/2) / (Γ(α/2) Γ(t + 1))`; otherwise the fitted profile.
    pub fn continuation(&self, t: f64) -> f64 {
        if self.alpha >= 2.0 {
            return 1.0;
        }
        if self.spec.is_power() {
            let a = self.alpha / 2.0;
            return (crate::special::ln_gamma(t + a)
                - crate::special::ln_gamma(a)
                - crate::special::ln_gamma(t + 1.0))
            .exp();
        }
        let amp = self.amplitude.unwrap_or_else(|| self.fit_amplitude());
        match self.profile(t) {
            Some(p) => amp * p,
            None => amp * t.powf(self.alpha / 2.0 - 1.0),
        }
    }

    fn fit_amplitude(&self) -> f64 {
        let n = self.exact_len - 1;
        let lo = (n / 10).max(1);
        let mut num = 0.0;
        let mut den = 0.0;
        for k in lo..=n {
            let kf = k as f64;
            let f = self
                .profile(kf)
                .unwrap_or_else(|| kf.powf(self.alpha / 2.0 - 1.0));
            num += self.values[k] * f;
            den += f * f;
        }
        num / den
    }
}

/// Computes `C(0..=N)` from the coefficients.
///
/// Up to [`DIRECT_LIMIT`] this is the quadratic recurrence with compensated
/// summation in ascending `k`; beyond it a divide-and-conquer FFT inversion of
/// `1/ψ(1-z)` is used.
pub fn renewal_sequence(coeffs: &SubordinationCoefficients, n_max: usize) -> Result<RenewalSequence> {
    if n_max > coeffs.len() {
        return Err(Error::domain(format!(
            "renewal range N = {n_max} exceeds coefficient truncation {}",
            coeffs.len()
        )));
    }
    let c = coeffs.as_slice();
    let (values, source) = if n_max <= DIRECT_LIMIT {
        let mut values = vec![0.0; n_max + 1];
        values[0] = 1.0;
        for n in 1..=n_max {
            values[n] = recurrence_term(c, &values, n);
        }
        (values, RenewalSource::Recurrence)
    } else {
        (online_inverse(c, n_max), RenewalSource::SeriesInversion)
    };
    Ok(RenewalSequence {
        alpha: coeffs.alpha(),
        source,
        spec: coeffs.spec().clone(),
        exact_len: values.len(),
        amplitude: None,
        rounding_bound: (n_max as f64).max(1.0) * f64::EPSILON,
        values,
    })
}

/// Closed form for `ψ_α`: `C(n) = Γ(n + α/2) / (Γ(α/2) Γ(n + 1))`, through
/// the ratio recurrence `C(n) = C(n-1) (n - 1 + α/2) / n`.
pub fn renewal_closed_form(spec: &BernsteinSpec, n_max: usize) -> Result<RenewalSequence> {
    let alpha = match spec.alpha() {
        Some(a) if spec.is_power() => a,
        _ => return Err(Error::domain("closed-form renewal sequence needs ψ_α")),
    };
    let a = alpha / 2.0;
    let mut values = vec![1.0; n_max + 1];
    for n in 1..=n_max {
        values[n] = values[n - 1] * (n as f64 - 1.0 + a) / n as f64;
    }
    Ok(RenewalSequence {
        alpha,
        source: RenewalSource::ClosedForm,
        spec: spec.clone(),
        exact_len: values.len(),
        amplitude: None,
        rounding_bound: (n_max as f64).max(1.0) * f64::EPSILON,
        values,
    })
}

/// `Σ_{k=1}^{n} c[k] C[n-k]` in ascending `k` with Kahan compensation.
///
/// This is the single definition used by the recurrence, so recomputing any
/// entry reproduces the stored value bit for bit.
pub fn recurrence_term(c: &[f64], values: &[f64], n: usize) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let upper = n.min(c.len() - 1);
    for k in 1..=upper {
        let y = c[k] * values[n - k] - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

/// Relaxed (online) solution of `C = 1 + c * C` in `O(N log^2 N)`.
fn online_inverse(c: &[f64], n_max: usize) -> Vec<f64> {
    let len = n_max + 1;
    let mut values = vec![0.0; len];
    let mut acc = vec![0.0; len];
    let mut planner = FftPlanner::new();
    solve_block(c, &mut values, &mut acc, 0, len, &mut planner);
    values
}

fn solve_block(
    c: &[f64],
    values: &mut [f64],
    acc: &mut [f64],
    lo: usize,
    hi: usize,
    planner: &mut FftPlanner<f64>,
) {
    if hi - lo <= 128 {
        for n in lo..hi {
            values[n] = if n == 0 { 1.0 } else { acc[n] };
            let cn = values[n];
            for (m, slot) in acc.iter_mut().enumerate().take(hi).skip(n + 1) {
                if m - n < c.len() {
                    *slot += cn * c[m - n];
                }
            }
        }
        return;
    }
    let mid = (lo + hi) / 2;
    solve_block(c, values, acc, lo, mid, planner);
    let left = mid - lo;
    let span = hi - lo;
    let size = (left + span).next_power_of_two();
    let mut a = vec![Complex64::new(0.0, 0.0); size];
    let mut b = vec![Complex64::new(0.0, 0.0); size];
    for (i, v) in values[lo..mid].iter().enumerate() {
        a[i] = Complex64::new(*v, 0.0);
    }
    for (j, slot) in b.iter_mut().enumerate().take(span) {
        if j < c.len() {
            *slot = Complex64::new(c[j], 0.0);
        }
    }
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    fwd.process(&mut a);
    fwd.process(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    inv.process(&mut a);
    let scale = 1.0 / size as f64;
    for n in mid..hi {
        acc[n] += a[n - lo].re * scale;
    }
    solve_block(c, values, acc, mid, hi, planner);
}

/// Outcome of a strict shape test on the renewal sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ShapeCheck {
    Holds,
    /// Equality within tolerance at `index` (the degenerate constant case).
    NonStrict { index: usize },
    Violated { index: usize },
}

impl ShapeCheck {
    pub fn holds(&self) -> bool {
        matches!(self, ShapeCheck::Holds)
    }

    pub fn first_violation(&self) -> Option<usize> {
        match *self {
            ShapeCheck::Holds => None,
            ShapeCheck::NonStrict { index } | ShapeCheck::Violated { index } => Some(index),
        }
    }
}

/// Strict log-convexity `C(n-1) C(n+1) > C(n)^2` for `1 <= n < N`.
pub fn check_log_convexity(seq: &RenewalSequence) -> Result<ShapeCheck> {
    let c = seq.values();
    if c.len() < 4 {
        return Err(Error::domain("log-convexity check needs N >= 3"));
    }
    for n in 1..c.len() - 1 {
        let lhs = c[n - 1] * c[n + 1];
        let rhs = c[n] * c[n];
        let rel = (lhs - rhs) / rhs;
        if rel.abs() <= SHAPE_TOLERANCE {
            return Ok(ShapeCheck::NonStrict { index: n });
        }
        if rel < 0.0 {
            return Ok(ShapeCheck::Violated { index: n });
        }
    }
    Ok(ShapeCheck::Holds)
}

/// Strict decrease `C(n+1) < C(n)` for `0 <= n < N`.
pub fn check_decreasing(seq: &RenewalSequence) -> Result<ShapeCheck> {
    let c = seq.values();
    if c.len() < 2 {
        return Err(Error::domain("monotonicity check needs N >= 1"));
    }
    for n in 0..c.len() - 1 {
        let rel = (c[n] - c[n + 1]) / c[n];
        if rel.abs() <= SHAPE_TOLERANCE {
            return Ok(ShapeCheck::NonStrict { index: n });
        }
        if rel < 0.0 {
            return Ok(ShapeCheck::Violated { index: n });
        }
    }
    Ok(ShapeCheck::Holds)
}

#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticRow {
    pub n: usize,
    pub value: f64,
    /// `C(n) Γ(α/2) n^{1-α/2} / l(n)`.
    pub ratio: Option<f64>,
}

/// Strong-renewal ratios at dyadic `n`; they tend to 1 when the strong
/// renewal law holds. No ratios are produced when `l` is unknown.
pub fn asymptotic_diagnostic(seq: &RenewalSequence) -> Vec<AsymptoticRow> {
    let a = seq.alpha() / 2.0;
    let ga = gamma(a);
    let mut rows = Vec::new();
    let mut n = 1usize;
    while n <= seq.len() {
        let value = seq.get(n);
        let ratio = seq
            .spec()
            .slowly_varying(n as f64)
            .map(|l| value * ga * (n as f64).powf(1.0 - a) / l);
        rows.push(AsymptoticRow { n, value, ratio });
        n *= 2;
    }
    rows
}

/// Continues an exact sequence to index `m` with `a · n^{α/2-1} l(n)`, the
/// amplitude `a` fitted by least squares on the last decade of exact values.
pub fn extend_asymptotically(seq: &RenewalSequence, m: usize) -> Result<RenewalSequence> {
    let n = seq.exact_len() - 1;
    if n < MIN_EXACT_RANGE {
        return Err(Error::domain(format!(
            "extrapolation needs at least {MIN_EXACT_RANGE} exact terms, have {n}"
        )));
    }
    if m <= n {
        return Err(Error::domain(format!("target M = {m} must exceed N = {n}")));
    }
    let mut out = seq.clone();
    out.values.truncate(seq.exact_len());
    let amplitude = out.fit_amplitude();
    out.amplitude = Some(amplitude);
    for k in n + 1..=m {
        let kf = k as f64;
        let profile = out
            .profile(kf)
            .unwrap_or_else(|| kf.powf(out.alpha / 2.0 - 1.0));
        out.values.push(amplitude * profile);
    }
    Ok(out)
}

/// `|Σ_{k ≤ N} C(k) z^k ψ(1-z) - 1|` and the truncation bound
/// `z^{N+1} ψ(1-z) / (1-z)` implied by `C <= 1`.
pub fn generating_identity_residual(seq: &RenewalSequence, z: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&z) {
        return Err(Error::domain("z must lie in [0, 1)"));
    }
    let mut poly = 0.0;
    for &c in seq.values().iter().rev() {
        poly = poly * z + c;
    }
    let psi = seq.spec().eval(1.0 - z)?;
    let residual = (poly * psi - 1.0).abs();
    let bound = z.powi(seq.len() as i32 + 1) * psi / (1.0 - z) + 64.0 * f64::EPSILON * poly * psi;
    Ok((residual, bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bernstein::{coefficients, BernsteinSpec};

    fn binomial_oracle(n: usize) -> f64 {
        // binom(2n, n) 4^{-n} = Π_{j=1}^{n} (2j - 1)/(2j)
        (1..=n).fold(1.0, |acc, j| acc * (2 * j - 1) as f64 / (2 * j) as f64)
    }

    fn seq(alpha: f64, n: usize) -> RenewalSequence {
        let spec = BernsteinSpec::power(alpha).unwrap();
        renewal_sequence(&coefficients(&spec, n).unwrap(), n).unwrap()
    }

    #[test]
    fn alpha_one_examples() {
        let s = seq(1.0, 10);
        assert_eq!(&s.values()[..4], &[1.0, 0.5, 0.375, 0.3125]);
        assert!((s.get(10) - 46189.0 / 262144.0).abs() < 1e-15);
        for n in 0..=10 {
            assert!((s.get(n) - binomial_oracle(n)).abs() <= 1e-15 * binomial_oracle(n));
        }
    }

    #[test]
    fn identity_is_constant() {
        let s = seq(2.0, 100);
        assert!(s.values().iter().all(|&c| c == 1.0));
        assert_eq!(check_decreasing(&s).unwrap(), ShapeCheck::NonStrict { index: 0 });
        assert!(matches!(check_log_convexity(&s).unwrap(), ShapeCheck::NonStrict { .. }));
        let rows = asymptotic_diagnostic(&s);
        assert!(rows.iter().all(|r| (r.ratio.unwrap() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn recurrence_is_bit_reproducible() {
        let spec = BernsteinSpec::power(0.8).unwrap();
        let coeffs = coefficients(&spec, 600).unwrap();
        let s = renewal_sequence(&coeffs, 600).unwrap();
        for n in [1, 17, 300, 600] {
            assert_eq!(recurrence_term(coeffs.as_slice(), s.values(), n).to_bits(), s.get(n).to_bits());
        }
    }

    #[test]
    fn fft_inversion_matches_recurrence() {
        let spec = BernsteinSpec::power(0.5).unwrap();
        let coeffs = coefficients(&spec, 5000).unwrap();
        let direct = renewal_sequence(&coeffs, 5000).unwrap();
        let fast = online_inverse(coeffs.as_slice(), 5000);
        for n in 0..=5000 {
            assert!((fast[n] - direct.get(n)).abs() <= 1e-12 * direct.get(n), "n={n}");
        }
    }

    #[test]
    fn shape_examples() {
        assert!(check_log_convexity(&seq(1.0, 100)).unwrap().holds());
        assert!(check_log_convexity(&seq(0.5, 1000)).unwrap().holds());
        assert!(check_decreasing(&seq(1.0, 10_000)).unwrap().holds());
        assert!(check_decreasing(&seq(1.5, 10_000)).unwrap().holds());
    }

    #[test]
    fn bounds_and_errors() {
        let s = seq(1.3, 500);
        assert_eq!(s.get(0), 1.0);
        assert!(s.values().iter().all(|&c| c > 0.0 && c <= 1.0));
        let spec = BernsteinSpec::power(1.0).unwrap();
        let coeffs = coefficients(&spec, 10).unwrap();
        assert!(renewal_sequence(&coeffs, 11).is_err());
        assert!(extend_asymptotically(&s, 1000).is_err());
    }

    #[test]
    fn generating_function_identity() {
        let s = seq(0.9, 2000);
        for z in [0.1, 0.5, 0.9] {
            let (res, bound) = generating_identity_residual(&s, z).unwrap();
            assert!(res <= bound, "z={z}: {res} > {bound}");
        }
    }

    #[test]
    fn strong_renewal_diagnostic() {
        let s = renewal_closed_form(&BernsteinSpec::power(1.0).unwrap(), 1 << 16).unwrap();
        let r = asymptotic_diagnostic(&s).last().unwrap().ratio.unwrap();
        assert!((0.999..=1.001).contains(&r), "{r}");
        let s = seq(0.5, 1 << 14);
        let r = asymptotic_diagnostic(&s).last().unwrap().ratio.unwrap();
        assert!((0.95..=1.05).contains(&r), "{r}");
    }

    #[test]
    fn extrapolation_examples() {
        let s = seq(1.0, 1 << 14);
        let e = extend_asymptotically(&s, 1 << 20).unwrap();
        assert!(e.is_approximate());
        let oracle = renewal_closed_form(&BernsteinSpec::power(1.0).unwrap(), 1 << 20).unwrap();
        let n = 1 << 20;
        assert!((e.get(n) / oracle.get(n) - 1.0).abs() < 0.01);

        let s = seq(1.5, 1 << 14);
        let e = extend_asymptotically(&s, 1 << 18).unwrap();
        let spec = BernsteinSpec::power(1.5).unwrap();
        let long = renewal_sequence(&coefficients(&spec, 1 << 18).unwrap(), 1 << 18).unwrap();
        assert!((e.get(1 << 18) / long.get(1 << 18) - 1.0).abs() < 0.02);

        let s = seq(2.0, 1 << 10);
        let e = extend_asymptotically(&s, 5000).unwrap();
        assert!(e.values().iter().all(|&c| c == 1.0));
    }
}

//! Bernstein functions `ψ` with `ψ(0) = 0`, `ψ(1) = 1` and the subordination
//! probabilities `c(ψ, n)` they induce.
//!
//! The probabilities are the Taylor coefficients of `s ↦ 1 - ψ(1 - s)` at
//! `s = 0`; equivalently `c(ψ, n) = (1/n!) ∫ t^n e^{-t} ν(dt)` (plus the drift
//! for `n = 1`) in terms of the Lévy measure `ν`.

use std::f64::consts::E;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hpseries::{self, hp, hp_int, Hp};
use crate::special::{gamma, GaussLegendre, KahanSum};

/// Lévy density, evaluated on `(0, ∞)`.
pub type LevyDensity = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Largest degree computed by high-precision series arithmetic.
pub const SERIES_DEGREE_LIMIT: usize = 512;

/// Tolerance of the complete-positivity gate.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-14;

#[derive(Clone)]
pub enum BernsteinFamily {
    /// `ψ(λ) = λ^{α/2}`; `α = 2` is the identity (no subordination).
    PowerAlpha { alpha: f64 },
    /// `ψ(λ) ∝ λ^{α/2} (log(e + 1/λ))^{-γ}`. Experimental.
    LogPower { alpha: f64, gamma: f64 },
    /// `ψ(λ) ∝ bλ + ∫ (1 - e^{-λt}) ν(t) dt`.
    TabulatedLevy { density: LevyDensity, drift: f64 },
}

impl fmt::Debug for BernsteinFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BernsteinFamily::PowerAlpha { alpha } => write!(f, "PowerAlpha({alpha})"),
            BernsteinFamily::LogPower { alpha, gamma } => {
                write!(f, "LogPower(alpha={alpha}, gamma={gamma})")
            }
            BernsteinFamily::TabulatedLevy { drift, .. } => {
                write!(f, "TabulatedLevy(drift={drift})")
            }
        }
    }
}

/// A normalised Bernstein function.
#[derive(Clone, Debug)]
pub struct BernsteinSpec {
    family: BernsteinFamily,
    normalizer: f64,
}

impl BernsteinSpec {
    pub fn power(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(Error::domain(format!("alpha = {alpha} must lie in (0, 2]")));
        }
        Ok(BernsteinSpec {
            family: BernsteinFamily::PowerAlpha { alpha },
            normalizer: 1.0,
        })
    }

    pub fn log_power(alpha: f64, gamma: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::domain(format!("alpha = {alpha} must lie in (0, 2)")));
        }
        if !(gamma >= 0.0) {
            return Err(Error::domain(format!("gamma = {gamma} must be nonnegative")));
        }
        // log(e + 1) raised to gamma undoes the log factor at λ = 1.
        let normalizer = (E + 1.0).ln().powf(gamma);
        Ok(BernsteinSpec {
            family: BernsteinFamily::LogPower { alpha, gamma },
            normalizer,
        })
    }

    pub fn tabulated_levy(density: LevyDensity, drift: f64) -> Result<Self> {
        if !(drift >= 0.0) {
            return Err(Error::domain("drift must be nonnegative"));
        }
        let raw = drift + levy_integral(&density, |t| -(-t).exp_m1());
        if !(raw > 0.0 && raw.is_finite()) {
            return Err(Error::domain(
                "Lévy triple gives ψ(1) = 0 or a divergent integral",
            ));
        }
        Ok(BernsteinSpec {
            family: BernsteinFamily::TabulatedLevy { density, drift },
            normalizer: 1.0 / raw,
        })
    }

    pub fn family(&self) -> &BernsteinFamily {
        &self.family
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    /// The regular-variation index `α`, when the family fixes one.
    pub fn alpha(&self) -> Option<f64> {
        match self.family {
            BernsteinFamily::PowerAlpha { alpha } | BernsteinFamily::LogPower { alpha, .. } => {
                Some(alpha)
            }
            BernsteinFamily::TabulatedLevy { .. } => None,
        }
    }

    pub fn is_power(&self) -> bool {
        matches!(self.family, BernsteinFamily::PowerAlpha { .. })
    }

    /// True for `ψ(λ) = λ`.
    pub fn is_identity(&self) -> bool {
        matches!(self.family, BernsteinFamily::PowerAlpha { alpha } if alpha == 2.0)
    }

    /// The slowly varying factor `l` in `ψ(λ) = λ^{α/2} / l(1/λ)`.
    pub fn slowly_varying(&self, x: f64) -> Option<f64> {
        match self.family {
            BernsteinFamily::PowerAlpha { .. } => Some(1.0),
            BernsteinFamily::LogPower { gamma, .. } => {
                Some((E + x).ln().powf(gamma) / self.normalizer)
            }
            BernsteinFamily::TabulatedLevy { .. } => None,
        }
    }

    pub fn label(&self) -> String {
        match &self.family {
            BernsteinFamily::PowerAlpha { alpha } => format!("power(alpha={alpha})"),
            BernsteinFamily::LogPower { alpha, gamma } => {
                format!("logpower(alpha={alpha},gamma={gamma})")
            }
            BernsteinFamily::TabulatedLevy { drift, .. } => format!("levy(drift={drift})"),
        }
    }

    /// `ψ(λ)` after normalisation.
    pub fn eval(&self, lambda: f64) -> Result<f64> {
        if !(lambda >= 0.0) {
            return Err(Error::domain(format!("ψ is defined on [0, ∞); got {lambda}")));
        }
        Ok(self.eval_unchecked(lambda))
    }

    pub(crate) fn eval_unchecked(&self, lambda: f64) -> f64 {
        if lambda == 0.0 {
            return 0.0;
        }
        match &self.family {
            BernsteinFamily::PowerAlpha { alpha } => {
                if *alpha == 2.0 {
                    lambda
                } else {
                    lambda.powf(alpha / 2.0)
                }
            }
            BernsteinFamily::LogPower { alpha, gamma } => {
                self.normalizer * lambda.powf(alpha / 2.0) * (E + 1.0 / lambda).ln().powf(-gamma)
            }
            BernsteinFamily::TabulatedLevy { density, drift } => {
                let integral = levy_integral(density, |t| -(-lambda * t).exp_m1());
                self.normalizer * (drift * lambda + integral)
            }
        }
    }

    /// `ψ(λ)` for complex `λ` with positive real part (analytic families only).
    fn eval_complex(&self, lambda: Complex64) -> Complex64 {
        match &self.family {
            BernsteinFamily::PowerAlpha { alpha } => lambda.powf(alpha / 2.0),
            BernsteinFamily::LogPower { alpha, gamma } => {
                let log_term = (Complex64::new(E, 0.0) + lambda.inv()).ln();
                lambda.powf(alpha / 2.0) * log_term.powf(-gamma) * self.normalizer
            }
            BernsteinFamily::TabulatedLevy { .. } => {
                unreachable!("tabulated Lévy triples are handled by quadrature")
            }
        }
    }
}

/// Integrates `g(t) ν(t)` over `(0, ∞)` on a logarithmic grid.
fn levy_integral<G: Fn(f64) -> f64>(density: &LevyDensity, g: G) -> f64 {
    thread_local! {
        static RULE: GaussLegendre = GaussLegendre::new(16);
    }
    RULE.with(|rule| {
        let mut acc = KahanSum::new();
        let (lo, hi, width) = (-60.0f64, 60.0f64, 0.5f64);
        let panels = ((hi - lo) / width) as usize;
        for p in 0..panels {
            let a = lo + p as f64 * width;
            acc.add(rule.integrate(a, a + width, |u| {
                let t = u.exp();
                g(t) * density(t) * t
            }));
        }
        acc.value()
    })
}

/// The subordination probabilities `c(ψ, 1..=N)`.
#[derive(Clone, Debug)]
pub struct SubordinationCoefficients {
    spec: BernsteinSpec,
    alpha: f64,
    /// `values[n] = c(ψ, n)`; `values[0] = 0`.
    values: Vec<f64>,
    tail_exponent: f64,
}

impl SubordinationCoefficients {
    pub fn spec(&self) -> &BernsteinSpec {
        &self.spec
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Truncation order `N`.
    pub fn len(&self) -> usize {
        self.values.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `c(ψ, n)`; zero outside `1..=N`.
    pub fn get(&self, n: usize) -> f64 {
        self.values.get(n).copied().unwrap_or(0.0)
    }

    /// Slice with `c(ψ, n)` at index `n` (index 0 holds 0).
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// `1 + α/2`, the exponent of the power-law decay of `c(ψ, n)`.
    pub fn tail_exponent(&self) -> f64 {
        self.tail_exponent
    }

    /// `Σ_{n ≤ N} c(ψ, n)`, compensated.
    pub fn total_mass(&self) -> f64 {
        self.values.iter().copied().collect::<KahanSum>().value()
    }

    /// Partial sums `Σ_{k ≤ n} c(ψ, k)` for `n = 0..=N`.
    pub fn partial_sums(&self) -> Vec<f64> {
        let mut acc = KahanSum::new();
        self.values
            .iter()
            .map(|&c| {
                acc.add(c);
                acc.value()
            })
            .collect()
    }
}

/// Closed form `(α/2)/Γ(1-α/2) · Γ(n-α/2)/Γ(n+1)` for `ψ_α`, through log-gamma.
pub fn power_coefficient_closed_form(alpha: f64, n: usize) -> f64 {
    if alpha == 2.0 {
        return if n == 1 { 1.0 } else { 0.0 };
    }
    let a = alpha / 2.0;
    let nf = n as f64;
    a / gamma(1.0 - a) * (crate::special::ln_gamma(nf - a) - crate::special::ln_gamma(nf + 1.0)).exp()
}

/// `ψ(λ)` for a spec; negative arguments are a domain error.
pub fn eval_psi(spec: &BernsteinSpec, lambda: f64) -> Result<f64> {
    spec.eval(lambda)
}

/// Computes `c(ψ, 1..=N)`.
///
/// `ψ_α` uses the exact ratio recurrence `c[n+1] = c[n] (n - α/2)/(n + 1)`
/// started from `c[1] = α/2`. `LogPower` uses 256-bit series arithmetic up to
/// degree [`SERIES_DEGREE_LIMIT`] and a contour-integral FFT beyond.
/// Tabulated Lévy triples integrate the Lévy density directly.
pub fn coefficients(spec: &BernsteinSpec, n_max: usize) -> Result<SubordinationCoefficients> {
    if n_max < 1 {
        return Err(Error::domain("coefficient truncation N must be at least 1"));
    }
    let mut values = vec![0.0; n_max + 1];
    let alpha = match spec.family() {
        BernsteinFamily::PowerAlpha { alpha } => {
            if *alpha == 2.0 {
                values[1] = 1.0;
            } else {
                let a = alpha / 2.0;
                values[1] = a;
                for n in 1..n_max {
                    values[n + 1] = values[n] * (n as f64 - a) / (n as f64 + 1.0);
                }
            }
            *alpha
        }
        BernsteinFamily::LogPower { alpha, .. } => {
            let exact = n_max.min(SERIES_DEGREE_LIMIT);
            let series = series_coefficients(spec, exact)?;
            values[..=exact].copy_from_slice(&series);
            if n_max > exact {
                let contour = contour_coefficients(spec, n_max);
                values[exact + 1..].copy_from_slice(&contour[exact + 1..]);
            }
            *alpha
        }
        BernsteinFamily::TabulatedLevy { density, drift } => {
            for (n, v) in values.iter_mut().enumerate().skip(1) {
                *v = spec.normalizer * levy_coefficient(density, n);
            }
            values[1] += spec.normalizer * drift;
            estimate_tail_alpha(&values)
        }
    };
    for (n, &v) in values.iter().enumerate().skip(1) {
        if v < -NEGATIVITY_TOLERANCE || !v.is_finite() {
            return Err(Error::NotBernstein { index: n, value: v });
        }
    }
    Ok(SubordinationCoefficients {
        spec: spec.clone(),
        alpha,
        values,
        tail_exponent: 1.0 + alpha / 2.0,
    })
}

/// Taylor coefficients of `s ↦ 1 - ψ(1 - s)` up to degree `n` (index 0 is
/// the constant term, which vanishes for a normalised `ψ`), computed in
/// 256-bit arithmetic. Defined for the analytic families only.
pub fn series_coefficients(spec: &BernsteinSpec, n: usize) -> Result<Vec<f64>> {
    let psi_series: Vec<Hp> = match spec.family() {
        BernsteinFamily::PowerAlpha { alpha } => hpseries::one_minus_s_pow(alpha / 2.0, n),
        BernsteinFamily::LogPower { alpha, gamma } => {
            // u(s) = e + 1/(1 - s), L = log u, ψ(1-s) = N (1-s)^a L^{-γ}.
            let e = hp(E);
            let mut u: Vec<Hp> = (0..=n).map(|_| hp_int(1)).collect();
            u[0] = &u[0] + &e;
            let log_u0 = hp((E + 1.0).ln());
            let l = hpseries::log(&u, log_u0, n);
            let lead = hp((E + 1.0).ln().powf(-gamma));
            let lpow = hpseries::pow(&l, -gamma, lead, n);
            let binom = hpseries::one_minus_s_pow(alpha / 2.0, n);
            let norm = hp(spec.normalizer);
            hpseries::mul(&binom, &lpow, n)
                .into_iter()
                .map(|x| x * &norm)
                .collect()
        }
        BernsteinFamily::TabulatedLevy { .. } => {
            return Err(Error::domain(
                "series expansion needs an analytic family; tabulated triples use quadrature",
            ))
        }
    };
    let mut out: Vec<f64> = psi_series.iter().map(|x| -hpseries::to_f64(x)).collect();
    out[0] += 1.0;
    Ok(out)
}

/// Coefficients of `1 - ψ(1 - s)` from a discrete Cauchy integral on the
/// circle `|s| = ρ`, with `ρ^M = 1e-20` so aliasing is negligible.
fn contour_coefficients(spec: &BernsteinSpec, n_max: usize) -> Vec<f64> {
    let m = (32 * n_max).next_power_of_two().max(4096);
    let rho = 10f64.powf(-20.0 / m as f64);
    let mut buf: Vec<Complex64> = (0..m)
        .map(|j| {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
            let s = Complex64::from_polar(rho, theta);
            Complex64::new(1.0, 0.0) - spec.eval_complex(Complex64::new(1.0, 0.0) - s)
        })
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(m);
    fft.process(&mut buf);
    (0..=n_max)
        .map(|n| buf[n].re / m as f64 * rho.powi(-(n as i32)))
        .collect()
}

/// `(1/n!) ∫ t^n e^{-t} ν(t) dt`, integrated around the mode `t = n`.
fn levy_coefficient(density: &LevyDensity, n: usize) -> f64 {
    thread_local! {
        static RULE: GaussLegendre = GaussLegendre::new(16);
    }
    let nf = n as f64;
    let log_norm = crate::special::ln_gamma(nf + 1.0);
    let kernel = |t: f64| (nf * t.ln() - t - log_norm).exp() * density(t);
    let spread = 12.0 * nf.sqrt() + 12.0;
    let hi = nf + spread + 30.0;
    let lo = nf - spread;
    RULE.with(|rule| {
        let mut acc = KahanSum::new();
        let start = if lo > 1.0 {
            lo
        } else {
            // Logarithmic panels near the origin where ν may be singular.
            let (ulo, uhi, w) = (-60.0f64, 0.0f64, 0.5f64);
            for p in 0..((uhi - ulo) / w) as usize {
                let a = ulo + p as f64 * w;
                acc.add(rule.integrate(a, a + w, |u| {
                    let t = u.exp();
                    kernel(t) * t
                }));
            }
            1.0
        };
        let panels = (((hi - start) / (0.5 * nf.sqrt().max(1.0))).ceil() as usize).max(4);
        let w = (hi - start) / panels as f64;
        for p in 0..panels {
            let a = start + p as f64 * w;
            acc.add(rule.integrate(a, a + w, kernel));
        }
        acc.value()
    })
}

/// Fits the decay `c[n] ~ n^{-1-α/2}` over the last decade of a sequence.
fn estimate_tail_alpha(values: &[f64]) -> f64 {
    let n = values.len() - 1;
    if n < 20 {
        return 1.0;
    }
    let lo = (n / 10).max(2);
    let pts: Vec<(f64, f64)> = (lo..=n)
        .filter(|&k| values[k] > 0.0)
        .map(|k| ((k as f64).ln(), values[k].ln()))
        .collect();
    let slope = least_squares_slope(&pts);
    (2.0 * (-slope - 1.0)).clamp(1e-3, 2.0)
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// One row of the coefficient tail diagnostic.
#[derive(Clone, Debug, Serialize)]
pub struct TailCheckRow {
    pub n: usize,
    /// `Σ_{k ≥ n} c(ψ, k)`.
    pub tail: f64,
    /// `tail · l(n) Γ(1-α/2) n^{α/2}`; `None` when the normalisation is undefined.
    pub ratio: Option<f64>,
}

/// Tail sums at dyadic checkpoints `n = 2^j ≤ N`, normalised by the
/// regular-variation prediction so that the ratios approach 1.
pub fn coefficient_tail_check(coeffs: &SubordinationCoefficients) -> Vec<TailCheckRow> {
    let alpha = coeffs.alpha();
    let a = alpha / 2.0;
    let partial = coeffs.partial_sums();
    let mut rows = Vec::new();
    let mut n = 1usize;
    while n <= coeffs.len() {
        let tail = (1.0 - partial[n - 1]).max(0.0);
        let ratio = if alpha < 2.0 {
            coeffs
                .spec()
                .slowly_varying(n as f64)
                .map(|l| tail * l * gamma(1.0 - a) * (n as f64).powf(a))
        } else {
            None
        };
        rows.push(TailCheckRow { n, tail, ratio });
        n *= 2;
    }
    rows
}

/// Law of `τ_n`, the sum of `n` independent increments, on `{n, …, kmax}`.
#[derive(Clone, Debug, Serialize)]
pub struct TauPmf {
    pub n: usize,
    pub kmax: usize,
    /// `probs[j] = P(τ_n = n + j)`.
    pub probs: Vec<f64>,
    /// `1 - Σ probs`, mass beyond `kmax` or lost to coefficient truncation.
    pub mass_deficit: f64,
}

impl TauPmf {
    pub fn prob(&self, k: usize) -> f64 {
        if k < self.n {
            0.0
        } else {
            self.probs.get(k - self.n).copied().unwrap_or(0.0)
        }
    }
}

/// `n`-fold convolution of `c` truncated at `kmax`, by binary powering.
pub fn tau_pmf(coeffs: &SubordinationCoefficients, n: usize, kmax: usize) -> Result<TauPmf> {
    if n < 1 {
        return Err(Error::domain("τ_n needs n >= 1"));
    }
    if kmax < n {
        return Err(Error::domain(format!(
            "empty distribution: τ_{n} >= {n} > kmax = {kmax}"
        )));
    }
    let base: Vec<f64> = (0..=kmax).map(|k| coeffs.get(k)).collect();
    let mut result: Option<Vec<f64>> = None;
    let mut power = base;
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            result = Some(match result {
                None => power.clone(),
                Some(r) => truncated_convolution(&r, &power, kmax),
            });
        }
        e >>= 1;
        if e > 0 {
            power = truncated_convolution(&power, &power, kmax);
        }
    }
    let full = result.expect("n >= 1");
    let probs = full[n..].to_vec();
    let mass: f64 = probs.iter().copied().collect::<KahanSum>().value();
    Ok(TauPmf {
        n,
        kmax,
        probs,
        mass_deficit: 1.0 - mass,
    })
}

fn truncated_convolution(a: &[f64], b: &[f64], kmax: usize) -> Vec<f64> {
    let mut out = vec![0.0; kmax + 1];
    for (i, &x) in a.iter().enumerate().take(kmax + 1) {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate().take(kmax + 1 - i) {
            out[i + j] += x * y;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eval_examples() {
        let p1 = BernsteinSpec::power(1.0).unwrap();
        assert_eq!(p1.eval(4.0).unwrap(), 2.0);
        assert_eq!(BernsteinSpec::power(0.5).unwrap().eval(0.0).unwrap(), 0.0);
        assert_relative_eq!(BernsteinSpec::power(1.5).unwrap().eval(1.0).unwrap(), 1.0);
        assert!(matches!(p1.eval(-1.0), Err(Error::Domain(_))));
        assert!(BernsteinSpec::power(2.5).is_err());
        assert!(BernsteinSpec::power(0.0).is_err());
    }

    #[test]
    fn normalisation_and_monotonicity() {
        let stable = |t: f64| 0.5 / gamma(0.5) * t.powf(-1.5);
        let specs = vec![
            BernsteinSpec::power(0.7).unwrap(),
            BernsteinSpec::log_power(1.0, 0.5).unwrap(),
            BernsteinSpec::tabulated_levy(Arc::new(stable), 0.0).unwrap(),
        ];
        for spec in specs {
            assert_eq!(spec.eval(0.0).unwrap(), 0.0);
            assert!((spec.eval(1.0).unwrap() - 1.0).abs() < 1e-12, "{spec:?}");
            let mut prev = 0.0;
            for j in -40..=10 {
                let lambda = 10f64.powf(j as f64 / 10.0);
                let v = spec.eval(lambda).unwrap();
                assert!(v >= prev, "{spec:?} not monotone at {lambda}");
                prev = v;
            }
        }
    }

    #[test]
    fn alpha_one_coefficients() {
        let c = coefficients(&BernsteinSpec::power(1.0).unwrap(), 4).unwrap();
        assert_eq!(c.get(1), 0.5);
        assert_eq!(c.get(2), 0.125);
        assert_eq!(c.get(3), 0.0625);
        assert_eq!(c.get(4), 0.0390625);
    }

    #[test]
    fn identity_has_unit_step() {
        let c = coefficients(&BernsteinSpec::power(2.0).unwrap(), 5).unwrap();
        assert_eq!(c.as_slice(), &[0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let rows = coefficient_tail_check(&coefficients(&BernsteinSpec::power(2.0).unwrap(), 64).unwrap());
        assert!(rows.iter().filter(|r| r.n >= 2).all(|r| r.tail == 0.0 && r.ratio.is_none()));
    }

    #[test]
    fn closed_form_matches_recurrence() {
        for alpha in [0.3, 1.0, 1.7] {
            let c = coefficients(&BernsteinSpec::power(alpha).unwrap(), 300).unwrap();
            for n in [1, 2, 7, 50, 300] {
                assert_relative_eq!(c.get(n), power_coefficient_closed_form(alpha, n), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn tail_check_examples() {
        let c = coefficients(&BernsteinSpec::power(1.0).unwrap(), 1 << 13).unwrap();
        let row = coefficient_tail_check(&c).into_iter().find(|r| r.n == 4096).unwrap();
        let r = row.ratio.unwrap();
        assert!((0.95..=1.05).contains(&r), "{r}");

        let c = coefficients(&BernsteinSpec::power(0.5).unwrap(), 1 << 17).unwrap();
        let row = coefficient_tail_check(&c).into_iter().find(|r| r.n == 65536).unwrap();
        let r = row.ratio.unwrap();
        assert!((0.9..=1.1).contains(&r), "{r}");
    }

    #[test]
    fn log_power_series_and_contour_agree() {
        let spec = BernsteinSpec::log_power(1.0, 0.5).unwrap();
        let series = series_coefficients(&spec, 300).unwrap();
        let contour = contour_coefficients(&spec, 300);
        assert!(series[0].abs() < 1e-15);
        for n in 1..=300 {
            assert!(
                (series[n] - contour[n]).abs() <= 1e-9 * series[n].abs() + 1e-15,
                "n={n}: {} vs {}",
                series[n],
                contour[n]
            );
        }
        let c = coefficients(&spec, 2000).unwrap();
        assert!(c.as_slice()[1..].iter().all(|&x| x >= 0.0));
        assert!(c.total_mass() < 1.0 && c.total_mass() > 0.9);
    }

    #[test]
    fn tabulated_stable_density_reproduces_power_law() {
        let alpha: f64 = 1.2;
        let a = alpha / 2.0;
        let k = a / gamma(1.0 - a);
        let spec = BernsteinSpec::tabulated_levy(Arc::new(move |t: f64| k * t.powf(-1.0 - a)), 0.0).unwrap();
        assert_relative_eq!(spec.normalizer(), 1.0, max_relative = 1e-9);
        let c = coefficients(&spec, 200).unwrap();
        let exact = coefficients(&BernsteinSpec::power(alpha).unwrap(), 200).unwrap();
        for n in [1, 2, 10, 100, 200] {
            assert_relative_eq!(c.get(n), exact.get(n), max_relative = 1e-8);
        }
        assert!((c.alpha() - alpha).abs() < 0.05);
    }

    #[test]
    fn tau_pmf_examples() {
        let c = coefficients(&BernsteinSpec::power(1.0).unwrap(), 64).unwrap();
        let one = tau_pmf(&c, 1, 64).unwrap();
        for k in 1..=64 {
            assert_eq!(one.prob(k), c.get(k));
        }
        let two = tau_pmf(&c, 2, 64).unwrap();
        assert_eq!(two.prob(2), 0.25);
        assert_eq!(two.prob(3), 0.125);
        assert!(two.mass_deficit > 0.0);
        assert!(matches!(tau_pmf(&c, 5, 4), Err(Error::Domain(_))));
    }

    #[test]
    fn negativity_gate_rejects_invalid_triples() {
        // A negative "density" cannot come from a Bernstein function.
        let spec = BernsteinSpec {
            family: BernsteinFamily::TabulatedLevy {
                density: Arc::new(|t: f64| if t < 3.0 { 1.0 } else { -1.0 } * (-t).exp()),
                drift: 0.0,
            },
            normalizer: 1.0,
        };
        assert!(matches!(coefficients(&spec, 40), Err(Error::NotBernstein { .. })));
    }
}

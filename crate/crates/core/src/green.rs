//! Green function of the subordinated walk.
//!
//! `G_ψ(x) = Σ_{k≥1} C(k) p(k,x)` is split in three zones. For `k <= K` the
//! exact transition table is used; for `K < k <= K₂ = A‖x‖²` (capped) the
//! Gaussian surrogate `q` is summed directly; beyond `K₂` the sum is replaced
//! by an integral, in closed form through incomplete gamma functions for
//! `ψ_α`, with an Euler–Maclaurin endpoint correction. Every zone carries its
//! own error bound.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::bernstein::{coefficients, BernsteinSpec, SubordinationCoefficients};
use crate::error::{Error, Result};
use crate::exec::{map_slice, Execution};
use crate::renewal::{renewal_sequence, RenewalSequence};
use crate::special::{gamma, lower_incomplete_gamma, GaussLegendre, KahanSum};
use crate::walk_kernel::{
    clt_row_constant, gaussian_q, FundamentalDomain, LatticePoint, TransitionStepper,
};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GreenConfig {
    /// Last step handled by the exact table.
    pub k_exact: usize,
    /// `L∞` radius of the exact table.
    pub radius: usize,
    /// Split factor `A` in `K₂ = A‖x‖²`.
    pub a_split: f64,
    /// Cap on `K₂`; the renewal sequence is computed exactly up to here.
    pub k_mid_max: usize,
    /// Relative error a value must certify to be returned.
    pub tolerance: f64,
    #[serde(skip)]
    pub exec: Execution,
}

impl Default for GreenConfig {
    fn default() -> Self {
        GreenConfig {
            k_exact: 512,
            radius: 160,
            a_split: 4.0,
            k_mid_max: 1 << 14,
            tolerance: 0.02,
            exec: Execution::default(),
        }
    }
}

/// A Green value with the error bound of each zone.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct GreenValue {
    pub value: f64,
    pub error_bound: f64,
    pub exact_part: f64,
    pub gaussian_part: f64,
    pub tail_part: f64,
    pub exact_error: f64,
    pub clt_error: f64,
    pub tail_error: f64,
}

impl GreenValue {
    fn assemble(exact: (f64, f64), far: FarPart) -> Self {
        let value = exact.0 + far.gaussian + far.tail;
        GreenValue {
            value,
            error_bound: exact.1 + far.clt_error + far.tail_error,
            exact_part: exact.0,
            gaussian_part: far.gaussian,
            tail_part: far.tail,
            exact_error: exact.1,
            clt_error: far.clt_error,
            tail_error: far.tail_error,
        }
    }

    pub fn relative_error(&self) -> f64 {
        self.error_bound / self.value.abs()
    }
}

/// The part of `G_ψ(x)` from steps `k > K`; it depends on `x` only through
/// `‖x‖²`.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct FarPart {
    pub gaussian: f64,
    pub tail: f64,
    pub clt_error: f64,
    pub tail_error: f64,
}

pub struct GreenEvaluator {
    d: usize,
    alpha: f64,
    spec: BernsteinSpec,
    coeffs: Arc<SubordinationCoefficients>,
    renewal: Arc<RenewalSequence>,
    config: GreenConfig,
    domain: Arc<FundamentalDomain>,
    /// `Σ_{1≤k≤K} C(k) p(k, cell)`.
    exact: Vec<f64>,
    /// Mass lost through the box boundary by step `K`.
    leak: f64,
    renewal_mass: f64,
    c1: f64,
    c_uniform: f64,
    /// Per-step weights for the middle zone, indexed by `k - K - 1`.
    mid_weight: Vec<f64>,
    mid_bound: Vec<f64>,
    mid_uniform: Vec<f64>,
    tail_model_error: f64,
}

impl std::fmt::Debug for GreenEvaluator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "GreenEvaluator(d={}, {}, K={}, R={}, c1={:.4})",
            self.d,
            self.spec.label(),
            self.config.k_exact,
            self.config.radius,
            self.c1
        )
    }
}

/// `C_{d,α} = (d/2)^{α/2} π^{-d/2} Γ((d-α)/2) / Γ(α/2)`.
pub fn asymptotic_constant(d: usize, alpha: f64) -> Result<f64> {
    check_transient(d, alpha)?;
    let df = d as f64;
    Ok((df / 2.0).powf(alpha / 2.0) * PI.powf(-df / 2.0) * gamma((df - alpha) / 2.0) / gamma(alpha / 2.0))
}

/// `A_{d,α} = Γ((d-α)/2) / (2^α π^{d/2} Γ(α/2))`, the Riesz kernel constant.
pub fn riesz_constant(d: usize, alpha: f64) -> Result<f64> {
    check_transient(d, alpha)?;
    let df = d as f64;
    Ok(gamma((df - alpha) / 2.0) / (2f64.powf(alpha) * PI.powf(df / 2.0) * gamma(alpha / 2.0)))
}

/// `A_{d,α} / C_{d,α}`, which simplifies to `(2d)^{-α/2}`.
pub fn riesz_ratio(d: usize, alpha: f64) -> Result<f64> {
    Ok(riesz_constant(d, alpha)? / asymptotic_constant(d, alpha)?)
}

/// The ratio `(2/d)^{α/2}` asserted in the literature remark; kept so that
/// reports can show it next to the computed ratio.
pub fn stated_riesz_ratio(d: usize, alpha: f64) -> f64 {
    (2.0 / d as f64).powf(alpha / 2.0)
}

fn check_transient(d: usize, alpha: f64) -> Result<()> {
    if d == 0 {
        return Err(Error::domain("d must be at least 1"));
    }
    if !(alpha > 0.0) {
        return Err(Error::domain(format!("alpha = {alpha} must be positive")));
    }
    if alpha >= d as f64 {
        return Err(Error::Recurrent { alpha, d });
    }
    Ok(())
}

/// Bernstein-inequality bound on `P(|S^{(1)}_k| >= m)` for one coordinate of
/// the simple walk.
fn coordinate_tail(d: usize, k: usize, m: f64) -> f64 {
    if m <= 0.0 {
        return 1.0;
    }
    let v = k as f64 / d as f64;
    (2.0 * (-m * m / (2.0 * (v + m / 3.0))).exp()).min(1.0)
}

impl GreenEvaluator {
    pub fn new(spec: &BernsteinSpec, d: usize, config: GreenConfig) -> Result<Self> {
        let k_mid = config.k_mid_max.max(config.k_exact + 2);
        let coeffs = coefficients(spec, k_mid)?;
        let alpha = coeffs.alpha();
        check_transient(d, alpha)?;
        if !(config.a_split > 1.0) {
            return Err(Error::domain("the split factor A must exceed 1"));
        }
        if config.radius == 0 || config.k_exact == 0 {
            return Err(Error::domain("exact zone needs K >= 1 and R >= 1"));
        }
        let renewal = renewal_sequence(&coeffs, k_mid)?;
        let domain = Arc::new(FundamentalDomain::new(d, config.radius)?);
        let mut stepper = TransitionStepper::new(domain.clone(), config.exec);
        let mut exact = vec![0.0; domain.cells()];
        let k_max = config.k_exact;
        let fit_from = (k_max / 4).max(1);
        let fit_stride = (k_max / 64).max(1);
        let mut c1: f64 = 0.0;
        let mut c_uniform: f64 = 0.0;
        for k in 1..=k_max {
            stepper.advance();
            let row = stepper.current();
            let ck = renewal.get(k);
            for idx in domain.support(k) {
                exact[idx] += ck * row[idx];
            }
            if k >= fit_from && (k - fit_from).is_multiple_of(fit_stride) {
                c1 = c1.max(clt_row_constant(&domain, k, |i| row[i], 1.0, f64::INFINITY));
                c_uniform = c_uniform.max(uniform_row_constant(&domain, k, row));
            }
        }
        let leak = (1.0 - stepper.mass()).max(0.0) + 1e-15 * k_max as f64;
        let renewal_mass: f64 = renewal.values()[1..=k_max].iter().copied().collect::<KahanSum>().value();

        let df = d as f64;
        let mut mid_weight = Vec::with_capacity(k_mid - k_max);
        let mut mid_bound = Vec::with_capacity(k_mid - k_max);
        let mut mid_uniform = Vec::with_capacity(k_mid - k_max);
        for k in k_max + 1..=k_mid {
            let kf = k as f64;
            let ck = renewal.get(k);
            mid_weight.push(ck * 2.0 * (df / (2.0 * PI * kf)).powf(df / 2.0));
            mid_bound.push(ck * kf.powf(-df / 2.0));
            mid_uniform.push(ck * kf.powf(-df / 2.0 - 1.0));
        }

        let tail_model_error = if spec.is_power() {
            let a = alpha / 2.0;
            let t = k_mid as f64;
            // Size of the first neglected term of the Γ-ratio expansion.
            ((a - 1.0) * (a - 2.0) * (a - 3.0) * a * a * (a - 1.0) / 48.0).abs() / t.powi(3)
                + 1e-15
        } else {
            let t = k_mid as f64;
            2.0 * (renewal.continuation(t) / renewal.get(k_mid) - 1.0).abs()
        };

        Ok(GreenEvaluator {
            d,
            alpha,
            spec: spec.clone(),
            coeffs: Arc::new(coeffs),
            renewal: Arc::new(renewal),
            config: GreenConfig { k_mid_max: k_mid, ..config },
            domain,
            exact,
            leak,
            renewal_mass,
            c1: c1 * 1.1,
            c_uniform: c_uniform * 1.1,
            mid_weight,
            mid_bound,
            mid_uniform,
            tail_model_error,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn spec(&self) -> &BernsteinSpec {
        &self.spec
    }

    pub fn config(&self) -> &GreenConfig {
        &self.config
    }

    pub fn coefficients(&self) -> &Arc<SubordinationCoefficients> {
        &self.coeffs
    }

    pub fn renewal(&self) -> &Arc<RenewalSequence> {
        &self.renewal
    }

    /// Fitted local-CLT constant (with a 10% margin).
    pub fn c1(&self) -> f64 {
        self.c1
    }

    /// Fitted uniform constant in `|E(k,x)| <= c k^{-d/2-1}`.
    pub fn c_uniform(&self) -> f64 {
        self.c_uniform
    }

    /// Exact-zone contribution and its error bound.
    pub fn exact_part(&self, x: &LatticePoint) -> (f64, f64) {
        match self.domain.index(x) {
            Some(idx) => (self.exact[idx], self.leak * self.renewal_mass),
            None => {
                let m = x.linf() as f64;
                let l1 = x.l1() as usize;
                let bound = (l1.max(1)..=self.config.k_exact)
                    .map(|k| self.renewal.get(k) * coordinate_tail(self.d, k, m))
                    .sum::<f64>();
                (0.0, bound)
            }
        }
    }

    /// Gaussian and tail zones for `‖x‖² = r2`.
    pub fn far_part(&self, r2: u64) -> FarPart {
        let k_exact = self.config.k_exact;
        let k_mid = self.config.k_mid_max;
        let parity = (r2 % 2) as usize;
        let r2f = r2 as f64;
        let df = self.d as f64;
        let k2 = ((self.config.a_split * r2f).ceil() as usize).clamp(k_exact, k_mid);
        let m = (r2f / df).sqrt();
        let mut gaussian = KahanSum::new();
        let mut clt = 0.0;
        let first = if (k_exact + 1) % 2 == parity { k_exact + 1 } else { k_exact + 2 };
        // Steps where both the coordinate tail and the Gaussian are below
        // e^{-50} are bounded, not summed.
        let skip_to = ((r2f / 100.0 - df * m / 3.0).max(0.0) as usize).min(k2 + 1);
        let mut k = first;
        if skip_to > first {
            let last_skipped = first + (skip_to - first) / 2 * 2;
            let count = ((last_skipped - first) / 2) as f64;
            let j = first - k_exact - 1;
            let per = self.renewal.get(first)
                * (self.mid_weight[j] / self.renewal.get(first) * (-50f64).exp()
                    + coordinate_tail(self.d, last_skipped, m));
            clt += count * per;
            k = last_skipped;
        }
        while k <= k2 {
            let j = k - k_exact - 1;
            let g = self.mid_weight[j] * (-df * r2f / (2.0 * k as f64)).exp();
            gaussian.add(g);
            let uniform = self.mid_uniform[j] * self.c_uniform;
            let mut e = uniform;
            if r2 > 0 {
                e = e.min(self.mid_bound[j] * self.c1 / r2f);
                if (k as f64) < r2f {
                    let crude = self.renewal.get(k) * coordinate_tail(self.d, k, m) + g;
                    e = e.min(crude);
                }
            }
            clt += e;
            k += 2;
        }
        // Last index of the right parity already summed.
        let t = if k2 % 2 == parity { k2 } else { k2 - 1 };
        let (tail, tail_quadrature) = self.tail_sum(t as f64, r2f);
        let tail_clt = self.tail_clt_bound(t as f64, r2f);
        FarPart {
            gaussian: gaussian.value(),
            tail,
            clt_error: clt + tail_clt,
            tail_error: tail_quadrature + self.tail_model_error * tail.abs(),
        }
    }

    /// `Σ_{j≥1} f(T + 2j)` for `f(t) = C(t) q(t, r²)` by Euler–Maclaurin on
    /// the integral `∫_T^∞ f`, returning the estimate and a remainder bound.
    fn tail_sum(&self, t: f64, r2: f64) -> (f64, f64) {
        let df = self.d as f64;
        let beta = df * r2 / 2.0;
        let integral = self.tail_integral(t, beta);
        let ft = self.renewal.continuation(t) * gaussian_q(self.d, t, r2);
        let a = self.alpha / 2.0;
        let s = a - 1.0 - df / 2.0;
        let log_slope = s / t + beta / (t * t);
        let fp = ft * log_slope;
        let sum = 0.5 * integral - 0.5 * ft - fp / 6.0;
        let scale = (s.abs() + beta / t + 3.0) / t;
        let remainder = ft * scale.powi(3) / 90.0;
        (sum, remainder)
    }

    /// `∫_T^∞ C(t) q(t, r²) dt` with `β = d r² / 2`.
    fn tail_integral(&self, t: f64, beta: f64) -> f64 {
        let df = self.d as f64;
        let a = self.alpha / 2.0;
        let q_const = 2.0 * (df / (2.0 * PI)).powf(df / 2.0);
        if self.spec.is_power() {
            let c1 = a * (a - 1.0) / 2.0;
            let c2 = (a - 1.0) * (a - 2.0) * a * (3.0 * a - 1.0) / 24.0;
            let terms = [1.0, c1, c2];
            let mut total = 0.0;
            for (m, c) in terms.iter().enumerate() {
                let p = df / 2.0 - a + m as f64;
                total += c * power_moment(t, beta, p);
            }
            return q_const * total / gamma(a);
        }
        // t = T e^v, integrated on unit panels with an analytic power-law
        // remainder.
        let rule = GaussLegendre::new(16);
        let decay = df / 2.0 - a;
        let f = |v: f64| {
            let tv = t * v.exp();
            self.renewal.continuation(tv) * gaussian_q(self.d, tv, 2.0 * beta / df) * tv
        };
        let v_max = (40.0 / decay).clamp(40.0, 600.0);
        let panels = v_max.ceil() as usize;
        let mut acc = KahanSum::new();
        for i in 0..panels {
            acc.add(rule.integrate(i as f64, (i + 1) as f64, f));
        }
        acc.add(f(panels as f64) / decay);
        acc.value()
    }

    fn tail_clt_bound(&self, t: f64, r2: f64) -> f64 {
        let df = self.d as f64;
        let a = self.alpha / 2.0;
        // Σ_{k>T, step 2} C(k) k^{-p} <= (1/2) ∫_T^∞ C(t) t^{-p} dt + C(T) T^{-p}.
        let moment = |p: f64| {
            let e = p - a;
            let amp = self.renewal.continuation(t) * t.powf(1.0 - a);
            amp * (0.5 * t.powf(-e) / e + t.powf(a - 1.0 - p))
        };
        let uniform = self.c_uniform * moment(df / 2.0 + 1.0);
        if r2 > 0.0 {
            uniform.min(self.c1 / r2 * moment(df / 2.0))
        } else {
            uniform
        }
    }

    /// `G_ψ(x) = Σ_{k≥1} p(k,x) C(k)`, without the `n = 0` term.
    pub fn green_unchecked(&self, x: &LatticePoint) -> GreenValue {
        GreenValue::assemble(self.exact_part(x), self.far_part(x.norm_sq() as u64))
    }

    pub fn green_from_one(&self, x: &LatticePoint) -> Result<GreenValue> {
        if x.d() != self.d {
            return Err(Error::domain(format!("point {x} is not in Z^{}", self.d)));
        }
        let g = self.green_unchecked(x);
        if g.error_bound > self.config.tolerance * g.value.abs() {
            return Err(Error::budget(
                format!(
                    "G({x}) = {:.6e} certified only to ±{:.3e}, tolerance {}",
                    g.value, g.error_bound, self.config.tolerance
                ),
                "increase the exact-zone budget (K, R) or loosen the tolerance",
            ));
        }
        Ok(g)
    }

    /// `G⁰(x)`, which adds the `n = 0` term at the origin.
    pub fn green_full(&self, x: &LatticePoint) -> Result<GreenValue> {
        let mut g = self.green_from_one(x)?;
        if x.is_origin() {
            g.value += 1.0;
        }
        Ok(g)
    }

    pub fn green_full_unchecked(&self, x: &LatticePoint) -> GreenValue {
        let mut g = self.green_unchecked(x);
        if x.is_origin() {
            g.value += 1.0;
        }
        g
    }

    /// `G⁰` at many points, data-parallel.
    pub fn green_full_batch(&self, points: &[LatticePoint]) -> Vec<GreenValue> {
        map_slice(self.config.exec, points, |x| self.green_full_unchecked(x))
    }
}

/// `∫_T^∞ t^{-p-1} e^{-β/t} dt = β^{-p} γ(p, β/T)`.
fn power_moment(t: f64, beta: f64, p: f64) -> f64 {
    let x = beta / t;
    if x < 1e-8 {
        // γ(p, x) ≈ x^p (1/p - x/(p+1)).
        return t.powf(-p) * (1.0 / p - x / (p + 1.0));
    }
    beta.powf(-p) * lower_incomplete_gamma(p, x)
}

fn uniform_row_constant(domain: &FundamentalDomain, k: usize, row: &[f64]) -> f64 {
    let d = domain.d();
    let kf = k as f64;
    let scale = kf.powf(d as f64 / 2.0 + 1.0);
    let exact_linf = (2 * (domain.radius() + 1)).saturating_sub(k + 1);
    domain
        .support(k)
        .filter(|&i| *domain.cell(i).last().unwrap() as usize <= exact_linf)
        .map(|i| (row[i] - gaussian_q(d, kf, domain.cell_norm_sq(i) as f64)).abs() * scale)
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct FourierValue {
    pub value: f64,
    /// Change against the previous refinement level.
    pub refinement_delta: f64,
    pub level: usize,
}

/// `G⁰(x) = (2π)^{-d} ∫ cos(θ·x) / ψ(1 - φ̂(θ)) dθ`, `φ̂ = (1/d) Σ cos θ_j`.
///
/// The cube `[0,π]^d` is cut into dyadic shells around the singular point
/// `θ = 0`; each shell is `2^d - 1` subcubes carrying a product
/// Gauss–Legendre rule with `8·2^level` nodes per axis (more along axes where
/// `x` oscillates). The innermost cube uses the small-`θ` asymptotics.
pub fn fourier_oracle(d: usize, spec: &BernsteinSpec, x: &LatticePoint, level: usize) -> Result<FourierValue> {
    let alpha = spec
        .alpha()
        .ok_or_else(|| Error::domain("the Fourier oracle needs a family with known alpha"))?;
    check_transient(d, alpha)?;
    if x.d() != d {
        return Err(Error::domain(format!("point {x} is not in Z^{d}")));
    }
    if d > 4 {
        return Err(Error::budget(format!("Fourier quadrature in d = {d}"), "use d <= 4"));
    }
    let value = fourier_at_level(d, spec, alpha, x, level);
    let coarse = if level > 0 {
        fourier_at_level(d, spec, alpha, x, level - 1)
    } else {
        value
    };
    let delta = (value - coarse).abs();
    if level > 0 && delta > 1e-3 * value.abs() {
        return Err(Error::Solver(format!(
            "Fourier quadrature not converged at level {level}: change {delta:.3e}"
        )));
    }
    Ok(FourierValue {
        value,
        refinement_delta: delta,
        level,
    })
}

fn fourier_at_level(d: usize, spec: &BernsteinSpec, alpha: f64, x: &LatticePoint, level: usize) -> f64 {
    let base = 8usize << level;
    let xmax = x.linf() as f64;
    let eps_target = (1e-3f64).min(1e-2 / (1.0 + x.norm()));
    let shells = (PI / eps_target).log2().ceil() as usize;
    let df = d as f64;
    let integrand = |theta: &[f64]| -> f64 {
        let mut lam = 0.0;
        let mut osc = 1.0;
        for (j, &t) in theta.iter().enumerate() {
            let s = (t / 2.0).sin();
            lam += 2.0 * s * s;
            if x.coords[j] != 0 {
                osc *= (t * x.coords[j] as f64).cos();
            }
        }
        osc / spec.eval_unchecked(lam / df)
    };
    let mut total = KahanSum::new();
    let mut rules: std::collections::HashMap<usize, GaussLegendre> = std::collections::HashMap::new();
    for j in 0..shells {
        let h = PI * 0.5f64.powi(j as i32 + 1);
        for mask in 1..(1usize << d) {
            let mut lo = vec![0.0; d];
            let mut counts = vec![0usize; d];
            for i in 0..d {
                lo[i] = if mask >> i & 1 == 1 { h } else { 0.0 };
                let extra = (x.coords[i].abs() as f64 * h).ceil() as usize;
                counts[i] = base + extra;
            }
            for &n in &counts {
                rules.entry(n).or_insert_with(|| GaussLegendre::new(n));
            }
            let axes: Vec<&GaussLegendre> = counts.iter().map(|n| &rules[n]).collect();
            total.add(product_rule(&axes, &lo, h, &integrand));
        }
    }
    // Innermost cube [0, ε]^d: ψ(1 - φ̂) ≈ (‖θ‖²/(2d))^{α/2} · ψ-normalisation
    // and cos ≈ 1, so the integral is ε^{d-α} times a self-similar constant.
    let eps = PI * 0.5f64.powi(shells as i32);
    let unit = unit_cube_riesz(d, alpha, base.max(16));
    let small = eps * eps / (2.0 * df);
    let lead = spec.eval_unchecked(small) / small.powf(alpha / 2.0);
    let inner = unit * eps.powf(df - alpha) * (2.0 * df).powf(alpha / 2.0) / lead;
    let _ = xmax;
    (total.value() + inner) / PI.powf(df)
}

fn product_rule(axes: &[&GaussLegendre], lo: &[f64], h: f64, f: &impl Fn(&[f64]) -> f64) -> f64 {
    let d = axes.len();
    let mut idx = vec![0usize; d];
    let mut theta = vec![0.0; d];
    let mut acc = KahanSum::new();
    loop {
        let mut w = 1.0;
        for i in 0..d {
            let r = axes[i];
            theta[i] = lo[i] + 0.5 * h * (r.nodes[idx[i]] + 1.0);
            w *= r.weights[idx[i]] * 0.5 * h;
        }
        acc.add(w * f(&theta));
        let mut i = 0;
        loop {
            if i == d {
                return acc.value();
            }
            idx[i] += 1;
            if idx[i] < axes[i].nodes.len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

/// `∫_{[0,1]^d} ‖u‖^{-α} du` from one shell and self-similarity.
fn unit_cube_riesz(d: usize, alpha: f64, n: usize) -> f64 {
    let rule = GaussLegendre::new(n);
    let axes: Vec<&GaussLegendre> = (0..d).map(|_| &rule).collect();
    let mut shell = 0.0;
    for mask in 1..(1usize << d) {
        let lo: Vec<f64> = (0..d).map(|i| if mask >> i & 1 == 1 { 0.5 } else { 0.0 }).collect();
        shell += product_rule(&axes, &lo, 0.5, &|u: &[f64]| {
            u.iter().map(|v| v * v).sum::<f64>().powf(-alpha / 2.0)
        });
    }
    shell / (1.0 - 2f64.powf(alpha - d as f64))
}

#[derive(Clone, Debug, Serialize)]
pub struct RieszRow {
    pub radius: f64,
    pub green: f64,
    pub riesz: f64,
    /// `A_{d,α} ‖x‖^{α-d} / G_ψ(x)`.
    pub ratio: f64,
}

/// Riesz-to-lattice ratios at `x = r e_1` for each radius.
pub fn ratio_to_riesz(eval: &GreenEvaluator, radii: &[i64]) -> Result<Vec<RieszRow>> {
    let a = riesz_constant(eval.d(), eval.alpha())?;
    radii
        .iter()
        .map(|&r| {
            let x = LatticePoint::on_axis(eval.d(), r);
            let g = eval.green_full(&x)?.value;
            let rf = r as f64;
            let riesz = a * rf.powf(eval.alpha() - eval.d() as f64);
            Ok(RieszRow {
                radius: rf,
                green: g,
                riesz,
                ratio: riesz / g,
            })
        })
        .collect()
}

/// `χ(θ) = θ^d ψ(1/θ²)`, the profile with `G(x) ≍ 1/χ(‖x‖)`.
#[derive(Clone, Debug)]
pub struct GreenProfile {
    pub d: usize,
    pub spec: BernsteinSpec,
}

impl GreenProfile {
    pub fn new(d: usize, spec: &BernsteinSpec) -> Self {
        GreenProfile { d, spec: spec.clone() }
    }

    pub fn chi(&self, theta: f64) -> f64 {
        theta.powi(self.d as i32) * self.spec.eval_unchecked(1.0 / (theta * theta))
    }

    /// `max χ(2θ)/χ(θ)` over a geometric grid on `[1, θ_max]`.
    pub fn doubling_constant(&self, theta_max: f64) -> f64 {
        let mut best: f64 = 0.0;
        let mut t = 1.0;
        while t <= theta_max {
            best = best.max(self.chi(2.0 * t) / self.chi(t));
            t *= 1.25;
        }
        best
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProfileRow {
    pub radius: f64,
    /// `G(x) χ(‖x‖)` at `x = r e_1`.
    pub scaled: f64,
}

/// `G(r e_1) χ(r)` along the axis; tends to a constant when the Green
/// function has the asymptotic form `a/χ`.
pub fn asymptotic_profile(eval: &GreenEvaluator, radii: &[i64]) -> Result<Vec<ProfileRow>> {
    let profile = GreenProfile::new(eval.d(), eval.spec());
    radii
        .iter()
        .map(|&r| {
            let g = eval.green_full(&LatticePoint::on_axis(eval.d(), r))?.value;
            Ok(ProfileRow {
                radius: r as f64,
                scaled: g * profile.chi(r as f64),
            })
        })
        .collect()
}

//! Massiveness of infinite lattice sets.
//!
//! Three routes are offered: the dyadic-shell Wiener series
//! `Σ Cap(B_k)/χ(2^k)` with computed capacities, the analytic thin-thorn
//! series `Σ (t(2^n)/2^n)^{d-α-1}`, and the inscribed-ball rule for thorns
//! with `limsup t(n)/n > 0`. Hyperplanes are classified through the
//! recurrence integral of their one-dimensional projection.

use std::f64::consts::PI;

use serde::Serialize;

use crate::capacity::{equilibrium, PointSet};
use crate::error::{Error, Result};
use crate::exec::map_slice;
use crate::green::{GreenEvaluator, GreenProfile};
use crate::bernstein::BernsteinSpec;
use crate::special::{GaussLegendre, KahanSum};
use crate::walk_kernel::LatticePoint;

/// Shells with more points are subsampled on a coarser sublattice.
pub const SHELL_POINT_LIMIT: usize = 30_000;
/// Enumeration work allowed per shell.
pub const SHELL_CANDIDATE_LIMIT: u64 = 400_000_000;

const CONVERGES_SLOPE: f64 = -0.2;
const DIVERGES_SLOPE: f64 = -0.05;

/// Thorn profile `t`, nondecreasing and positive.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum ThornProfile {
    /// `t(n) = δ n`.
    Linear(f64),
    /// `t(n) = n^γ`, `0 < γ < 1`.
    Power(f64),
    /// `t(n) = n / log(1+n)^β`.
    LinOverLog(f64),
    /// `values[n-1] = t(n)`, held constant beyond the table.
    Table(Vec<f64>),
}

impl ThornProfile {
    pub fn validate(&self) -> Result<()> {
        match self {
            ThornProfile::Linear(d) if !(*d > 0.0) => Err(Error::domain("linear slope must be positive")),
            ThornProfile::Power(g) if !(*g > 0.0 && *g < 1.0) => {
                Err(Error::domain("power exponent must lie in (0, 1)"))
            }
            ThornProfile::LinOverLog(b) if !(*b > 0.0) => Err(Error::domain("log exponent must be positive")),
            ThornProfile::Table(v) => {
                if v.is_empty() || v.iter().any(|&x| !(x > 0.0)) {
                    return Err(Error::domain("table profile must be nonempty and positive"));
                }
                if v.windows(2).any(|w| w[1] < w[0]) {
                    return Err(Error::domain("table profile must be nondecreasing"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, n: f64) -> f64 {
        match self {
            ThornProfile::Linear(d) => d * n,
            ThornProfile::Power(g) => n.powf(*g),
            ThornProfile::LinOverLog(b) => n / (1.0 + n).ln().powf(*b),
            ThornProfile::Table(v) => {
                let i = (n.floor() as usize).clamp(1, v.len());
                v[i - 1]
            }
        }
    }

    /// `limsup t(n)/n`.
    pub fn fatness(&self) -> f64 {
        match self {
            ThornProfile::Linear(d) => *d,
            _ => 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum SetKind {
    /// `{(n, 0, ..., 0) : n >= 0}`.
    Axis,
    /// `{x : x_i = 0}`.
    Hyperplane(usize),
    Ball(i64),
    /// `{‖x'‖ <= base, 1 <= x_d <= length}`.
    Cylinder { length: i64, base: i64 },
    /// `{‖x'‖ <= δ x_d, x_d >= 1}`.
    Cone(f64),
    /// `{‖x'‖ <= t(x_d), x_d >= 1}`.
    Thorn(ThornProfile),
    Explicit(PointSet),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LatticeSetSpec {
    pub d: usize,
    pub kind: SetKind,
}

impl LatticeSetSpec {
    pub fn new(d: usize, kind: SetKind) -> Result<Self> {
        if d < 1 {
            return Err(Error::domain("d must be at least 1"));
        }
        match &kind {
            SetKind::Hyperplane(i) if *i >= d => {
                return Err(Error::domain(format!("hyperplane coordinate {i} out of range")))
            }
            SetKind::Cone(delta) if !(*delta > 0.0) => return Err(Error::domain("cone slope must be positive")),
            SetKind::Cone(_) | SetKind::Thorn(_) | SetKind::Cylinder { .. } if d < 2 => {
                return Err(Error::domain("thorns and cylinders need d >= 2"))
            }
            SetKind::Thorn(p) => p.validate()?,
            SetKind::Explicit(s) if s.d() != d => return Err(Error::domain("explicit set has the wrong dimension")),
            _ => {}
        }
        Ok(LatticeSetSpec { d, kind })
    }

    fn profile(&self) -> Option<ThornProfile> {
        match &self.kind {
            SetKind::Cone(delta) => Some(ThornProfile::Linear(*delta)),
            SetKind::Thorn(p) => Some(p.clone()),
            _ => None,
        }
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        let d = self.d;
        match &self.kind {
            SetKind::Axis => x[0] >= 0 && x[1..].iter().all(|&c| c == 0),
            SetKind::Hyperplane(i) => x[*i] == 0,
            SetKind::Ball(r) => x.iter().map(|c| c * c).sum::<i64>() <= r * r,
            SetKind::Cylinder { length, base } => {
                let h = x[d - 1];
                h >= 1 && h <= *length && x[..d - 1].iter().map(|c| c * c).sum::<i64>() <= base * base
            }
            SetKind::Cone(_) | SetKind::Thorn(_) => {
                let h = x[d - 1];
                if h < 1 {
                    return false;
                }
                let t = self.profile().unwrap().eval(h as f64);
                (x[..d - 1].iter().map(|c| c * c).sum::<i64>() as f64) <= t * t
            }
            SetKind::Explicit(s) => s.points().iter().any(|p| p.coords == x),
        }
    }

    /// Short human-readable name.
    pub fn label(&self) -> String {
        match &self.kind {
            SetKind::Axis => "axis".into(),
            SetKind::Hyperplane(i) => format!("hyperplane(x{i}=0)"),
            SetKind::Ball(r) => format!("ball(r={r})"),
            SetKind::Cylinder { length, base } => format!("cylinder(L={length},base={base})"),
            SetKind::Cone(delta) => format!("cone(delta={delta})"),
            SetKind::Thorn(p) => match p {
                ThornProfile::Linear(v) => format!("thorn(linear {v})"),
                ThornProfile::Power(v) => format!("thorn(power {v})"),
                ThornProfile::LinOverLog(v) => format!("thorn(linoverlog {v})"),
                ThornProfile::Table(v) => format!("thorn(table of {})", v.len()),
            },
            SetKind::Explicit(s) => format!("explicit({} points)", s.len()),
        }
    }

    pub fn is_thin_thorn(&self) -> bool {
        matches!(&self.kind, SetKind::Thorn(p) if p.fatness() == 0.0)
    }

    /// Calls `f` on every candidate of shell `k` whose coordinates are all
    /// multiples of `s`; returns the number of candidates visited.
    fn for_each_candidate(&self, k: u32, s: i64, mut f: impl FnMut(&[i64])) -> u64 {
        let d = self.d;
        let outer = (1i64 << (k + 1)) - 1;
        let mut visited = 0u64;
        if let SetKind::Explicit(set) = &self.kind {
            for p in set.points() {
                if p.coords.iter().all(|c| c.rem_euclid(s) == 0) {
                    visited += 1;
                    f(&p.coords);
                }
            }
            return visited;
        }
        if let Some(profile) = self.profile() {
            let r_out2 = (outer + 1) * (outer + 1);
            let mut h = first_multiple(1, s);
            let mut x = vec![0i64; d];
            while h <= outer {
                let lateral = (r_out2 - h * h).max(0) as f64;
                let rad = profile.eval(h as f64).min(lateral.sqrt()).floor() as i64;
                x[d - 1] = h;
                visited += for_each_in_box(&mut x[..d - 1], -rad, rad, s, &mut |xp| {
                    let mut full = xp.to_vec();
                    full.push(h);
                    f(&full);
                });
                h += s;
            }
            return visited;
        }
        let (lo, hi): (Vec<i64>, Vec<i64>) = match &self.kind {
            SetKind::Axis => {
                let mut lo = vec![0; d];
                let mut hi = vec![0; d];
                lo[0] = 1 << k;
                hi[0] = outer;
                (lo, hi)
            }
            SetKind::Hyperplane(i) => {
                let mut lo = vec![-outer; d];
                let mut hi = vec![outer; d];
                lo[*i] = 0;
                hi[*i] = 0;
                (lo, hi)
            }
            SetKind::Ball(r) => {
                let m = (*r).min(outer);
                (vec![-m; d], vec![m; d])
            }
            SetKind::Cylinder { length, base } => {
                let mut lo = vec![-(*base).min(outer); d];
                let mut hi = vec![(*base).min(outer); d];
                lo[d - 1] = 1;
                hi[d - 1] = (*length).min(outer);
                (lo, hi)
            }
            _ => unreachable!(),
        };
        let mut x = vec![0i64; d];
        visited += for_each_in_box_bounds(&mut x, &lo, &hi, s, &mut f);
        visited
    }

    /// Candidate count for shell `k` at stride `s`, without visiting.
    fn candidate_estimate(&self, k: u32, s: i64) -> u64 {
        let d = self.d as i32;
        let outer = (1u64 << (k + 1)) as f64;
        let per_axis = 2.0 * outer / s as f64 + 1.0;
        match &self.kind {
            SetKind::Axis => (outer / s as f64) as u64 + 1,
            SetKind::Hyperplane(_) => per_axis.powi(d - 1) as u64,
            SetKind::Explicit(s) => s.len() as u64,
            SetKind::Ball(r) => ((2.0 * (*r as f64).min(outer) / s as f64 + 1.0).powi(d)) as u64,
            SetKind::Cylinder { length, base } => {
                ((2.0 * *base as f64 / s as f64 + 1.0).powi(d - 1) * ((*length as f64).min(outer) / s as f64 + 1.0))
                    as u64
            }
            SetKind::Cone(_) | SetKind::Thorn(_) => {
                let p = self.profile().unwrap();
                let mut total = 0.0;
                let mut h = 1.0;
                while h <= outer {
                    let rad = p.eval(h).min(outer);
                    total += (2.0 * rad / s as f64 + 1.0).powi(d - 1);
                    h += s as f64;
                }
                total as u64
            }
        }
    }
}

fn first_multiple(lo: i64, s: i64) -> i64 {
    lo + (s - lo.rem_euclid(s)) % s
}

fn for_each_in_box(x: &mut [i64], lo: i64, hi: i64, s: i64, f: &mut impl FnMut(&[i64])) -> u64 {
    let lo_v = vec![lo; x.len()];
    let hi_v = vec![hi; x.len()];
    for_each_in_box_bounds(x, &lo_v, &hi_v, s, f)
}

fn for_each_in_box_bounds(x: &mut [i64], lo: &[i64], hi: &[i64], s: i64, f: &mut impl FnMut(&[i64])) -> u64 {
    let d = x.len();
    if d == 0 {
        f(x);
        return 1;
    }
    let starts: Vec<i64> = lo.iter().map(|&l| first_multiple(l, s)).collect();
    if starts.iter().zip(hi).any(|(a, b)| a > b) {
        return 0;
    }
    x.copy_from_slice(&starts);
    let mut visited = 0;
    loop {
        visited += 1;
        f(x);
        let mut i = d;
        loop {
            if i == 0 {
                return visited;
            }
            i -= 1;
            x[i] += s;
            if x[i] <= hi[i] {
                break;
            }
            x[i] = starts[i];
        }
    }
}

/// Shell `B_k = {x ∈ B : 2^k <= ‖x‖ < 2^{k+1}}`, possibly subsampled.
#[derive(Clone, Debug)]
pub struct Shell {
    pub k: u32,
    /// `None` for an empty shell.
    pub points: Option<PointSet>,
    /// Number of points in the full shell.
    pub full_count: usize,
    /// Sublattice spacing; 1 means the shell is complete.
    pub stride: i64,
}

impl Shell {
    pub fn is_subsampled(&self) -> bool {
        self.stride > 1
    }
}

fn in_shell(x: &[i64], k: u32) -> bool {
    let r2: i64 = x.iter().map(|c| c * c).sum();
    let lo = 1i64 << (2 * k);
    r2 >= lo && r2 < 4 * lo
}

/// Enumerates shell `k`; shells above [`SHELL_POINT_LIMIT`] points are
/// restricted to `sZ^d` for the smallest adequate `s`.
pub fn shell(spec: &LatticeSetSpec, k: u32) -> Result<Shell> {
    shell_with_limit(spec, k, SHELL_POINT_LIMIT)
}

pub fn shell_with_limit(spec: &LatticeSetSpec, k: u32, limit: usize) -> Result<Shell> {
    if k > 40 {
        return Err(Error::domain("shell index too large"));
    }
    let mut full_count = None;
    let mut s = 1i64;
    loop {
        let estimate = spec.candidate_estimate(k, s);
        if estimate > SHELL_CANDIDATE_LIMIT {
            if full_count.is_none() && s == 1 {
                // Too large to count exactly; estimate from a stride.
                s = 2;
                continue;
            }
            if s > 64 {
                return Err(Error::budget(
                    format!("shell {k} needs about {estimate} candidate visits"),
                    "use a smaller shell range",
                ));
            }
            s += 1;
            continue;
        }
        let mut pts = Vec::new();
        let mut count = 0usize;
        spec.for_each_candidate(k, s, |x| {
            if in_shell(x, k) && spec.contains(x) {
                count += 1;
                if count <= limit {
                    pts.push(LatticePoint { coords: x.to_vec() });
                }
            }
        });
        let full = *full_count.get_or_insert(if s == 1 {
            count
        } else {
            count * (s as usize).pow(spec.d as u32)
        });
        if count <= limit {
            let points = if pts.is_empty() { None } else { Some(PointSet::new(pts)?) };
            return Ok(Shell {
                k,
                points,
                full_count: full,
                stride: s,
            });
        }
        s += 1;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum WienerVerdict {
    DivergesLikely,
    ConvergesLikely,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct WienerRow {
    pub k: u32,
    pub n_points: usize,
    pub n_used: usize,
    pub capacity: f64,
    pub chi: f64,
    pub term: f64,
    pub partial_sum: f64,
    /// The capacity is a lower bound (subsampled shell).
    pub lower_bound: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct WienerReport {
    pub rows: Vec<WienerRow>,
    /// Slope of `log2(term)` against `k`.
    pub fitted_decay_exponent: Option<f64>,
    pub fit_residual: Option<f64>,
    pub verdict: WienerVerdict,
    /// First shell that exceeded the budget, if any.
    pub truncated_at: Option<u32>,
    pub note: Option<String>,
}

/// Wiener series `Σ Cap(B_k)/χ(2^k)` over `k_range`, shells in parallel.
pub fn wiener_test(eval: &GreenEvaluator, spec: &LatticeSetSpec, k_range: std::ops::RangeInclusive<u32>) -> Result<WienerReport> {
    if spec.d != eval.d() {
        return Err(Error::domain("set and evaluator dimensions differ"));
    }
    let profile = GreenProfile::new(eval.d(), eval.spec());
    let ks: Vec<u32> = k_range.collect();
    let results: Vec<Result<WienerRow>> = map_slice(eval.config().exec, &ks, |&k| {
        let sh = shell(spec, k)?;
        let chi = profile.chi(2f64.powi(k as i32));
        let (capacity, n_used) = match &sh.points {
            None => (0.0, 0),
            Some(set) => (equilibrium(eval, set)?.capacity, set.len()),
        };
        Ok(WienerRow {
            k,
            n_points: sh.full_count,
            n_used,
            capacity,
            chi,
            term: capacity / chi,
            partial_sum: 0.0,
            lower_bound: sh.is_subsampled(),
        })
    });
    let mut rows = Vec::new();
    let mut truncated_at = None;
    let mut note = None;
    for (k, r) in ks.iter().zip(results) {
        match r {
            Ok(row) => rows.push(row),
            Err(e @ Error::Budget { .. }) => {
                truncated_at = Some(*k);
                note = Some(format!("stopped at shell {k}: {e}"));
                break;
            }
            Err(e) => return Err(e),
        }
    }
    let mut acc = KahanSum::new();
    for row in rows.iter_mut() {
        acc.add(row.term);
        row.partial_sum = acc.value();
    }
    // Subsampled shells only bound their term from below; fit on complete
    // shells when there are enough of them.
    let exact = rows.iter().filter(|r| r.term > 0.0 && !r.lower_bound).count();
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.term > 0.0 && (exact < 3 || !r.lower_bound))
        .map(|r| (r.k as f64, r.term.log2()))
        .collect();
    let (slope, residual) = if pts.len() >= 3 {
        let (s, res) = line_fit(&pts);
        (Some(s), Some(res))
    } else {
        (None, None)
    };
    let mut verdict = match slope {
        Some(s) if s < CONVERGES_SLOPE => WienerVerdict::ConvergesLikely,
        Some(s) if s > DIVERGES_SLOPE => WienerVerdict::DivergesLikely,
        _ => WienerVerdict::Inconclusive,
    };
    if spec.is_thin_thorn() && !eval.spec().is_power() {
        verdict = WienerVerdict::Inconclusive;
        note.get_or_insert_with(|| "thin-thorn massiveness is open for non-power ψ".into());
    }
    Ok(WienerReport {
        rows,
        fitted_decay_exponent: slope,
        fit_residual: residual,
        verdict,
        truncated_at,
        note,
    })
}

/// Least-squares slope and RMS residual.
fn line_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    let rms = (pts
        .iter()
        .map(|p| {
            let e = p.1 - (my + slope * (p.0 - mx));
            e * e
        })
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, rms)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Massiveness {
    Massive,
    NonMassive,
}

impl std::fmt::Display for Massiveness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Massiveness::Massive => "massive",
            Massiveness::NonMassive => "non-massive",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ThornSeries {
    pub exponent: f64,
    /// `(n, (t(2^n)/2^n)^{d-α-1})`.
    pub terms: Vec<(u32, f64)>,
    pub classification: Option<Massiveness>,
}

/// Terms of the thin-thorn series and, where the profile family allows it,
/// the closed-form classification for `ψ_α`.
pub fn thorn_series_terms(
    profile: &ThornProfile,
    d: usize,
    alpha: f64,
    n_range: std::ops::RangeInclusive<u32>,
) -> Result<ThornSeries> {
    profile.validate()?;
    let exponent = d as f64 - alpha - 1.0;
    if !(exponent > 0.0) {
        return Err(Error::domain(format!("the thorn series needs d - α - 1 > 0, got {exponent}")));
    }
    if profile.fatness() > 0.0 {
        return Err(Error::domain(
            "limsup t(n)/n > 0: the thorn is fat, use the inscribed-ball rule",
        ));
    }
    let terms = n_range
        .map(|n| {
            let x = 2f64.powi(n as i32);
            (n, (profile.eval(x) / x).powf(exponent))
        })
        .collect();
    let classification = match profile {
        ThornProfile::Power(_) | ThornProfile::Table(_) => Some(Massiveness::NonMassive),
        ThornProfile::LinOverLog(beta) => Some(if beta * exponent <= 1.0 {
            Massiveness::Massive
        } else {
            Massiveness::NonMassive
        }),
        ThornProfile::Linear(_) => None,
    };
    Ok(ThornSeries {
        exponent,
        terms,
        classification,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BallWitness {
    pub n: u32,
    pub center_height: f64,
    pub radius: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FatThornVerdict {
    pub verdict: Massiveness,
    pub delta: f64,
    pub witnesses: Vec<BallWitness>,
}

/// Thorns with `limsup t(n)/n = δ > 0` contain balls of radius `δ 2^{n-2}`
/// centred at height `3·2^{n-1}`, whose capacities make every Wiener term
/// bounded below: the thorn is massive.
pub fn fat_thorn_rule(profile: &ThornProfile, d: usize, alpha: f64) -> Result<FatThornVerdict> {
    profile.validate()?;
    if d < 3 || !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::domain("the inscribed-ball rule needs d >= 3 and 0 < α < 2"));
    }
    let delta = profile.fatness();
    if !(delta > 0.0) {
        return Err(Error::domain(
            "lim t(n)/n = 0: the thorn is thin, use the thorn series",
        ));
    }
    let witnesses = (1..=16)
        .map(|n| BallWitness {
            n,
            center_height: 3.0 * 2f64.powi(n as i32 - 1),
            radius: delta * 2f64.powi(n as i32 - 2),
        })
        .collect();
    Ok(FatThornVerdict {
        verdict: Massiveness::Massive,
        delta,
        witnesses,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HyperplaneReport {
    pub d: usize,
    pub alpha: f64,
    /// `(ε, I(ε))`.
    pub rows: Vec<(f64, f64)>,
    pub classification: Massiveness,
}

/// `I(ε) = (1/2π) ∫_{ε<=|ξ|<=π} dξ / (1 - h_α(ξ))` with
/// `1 - h_α(ξ) = d^{-α/2} (1 - cos ξ)^{α/2}`, the return integral of the walk
/// projected on the normal axis.
pub fn hyperplane_return_sum(d: usize, alpha: f64, epsilons: &[f64]) -> Result<HyperplaneReport> {
    if !(alpha > 0.0 && alpha <= 2.0) {
        return Err(Error::domain("alpha must lie in (0, 2]"));
    }
    if d < 1 {
        return Err(Error::domain("d must be at least 1"));
    }
    let rule = GaussLegendre::new(20);
    let rows = epsilons
        .iter()
        .map(|&eps| {
            if !(eps > 0.0 && eps < PI) {
                return Err(Error::domain("ε must lie in (0, π)"));
            }
            Ok((eps, hyperplane_integral(&rule, d, alpha, eps)))
        })
        .collect::<Result<Vec<_>>>()?;
    if rows.iter().any(|r| !r.1.is_finite()) {
        return Err(Error::Solver("hyperplane quadrature produced a non-finite value".into()));
    }
    Ok(HyperplaneReport {
        d,
        alpha,
        rows,
        classification: if alpha < 1.0 {
            Massiveness::NonMassive
        } else {
            Massiveness::Massive
        },
    })
}

fn hyperplane_integral(rule: &GaussLegendre, d: usize, alpha: f64, eps: f64) -> f64 {
    let scale = (d as f64).powf(alpha / 2.0);
    // ξ = e^u on panels of width 1/4 in u.
    let (a, b) = (eps.ln(), PI.ln());
    let panels = ((b - a) * 4.0).ceil().max(1.0) as usize;
    let h = (b - a) / panels as f64;
    let mut acc = KahanSum::new();
    for i in 0..panels {
        let lo = a + i as f64 * h;
        acc.add(rule.integrate(lo, lo + h, |u| {
            let xi = u.exp();
            let s = (xi / 2.0).sin();
            xi * scale * (2.0 * s * s).powf(-alpha / 2.0)
        }));
    }
    acc.value() / PI
}

/// `χ(θ) = θ^d ψ(1/θ²)` and its doubling constant over `[1, θ_max]`.
pub fn chi_profile(spec: &BernsteinSpec, d: usize, theta_max: f64) -> (GreenProfile, f64) {
    let p = GreenProfile::new(d, spec);
    let c = p.doubling_constant(theta_max);
    (p, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::green::GreenConfig;

    fn set(kind: SetKind) -> LatticeSetSpec {
        LatticeSetSpec::new(3, kind).unwrap()
    }

    #[test]
    fn shell_examples() {
        let axis = shell(&set(SetKind::Axis), 2).unwrap();
        assert_eq!(axis.full_count, 4);
        let pts: Vec<i64> = axis.points.unwrap().points().iter().map(|p| p.coords[0]).collect();
        assert_eq!(pts, vec![4, 5, 6, 7]);
        let ball = shell(&set(SetKind::Ball(3)), 2).unwrap();
        assert!(ball.points.is_none());
        assert_eq!(ball.full_count, 0);
    }

    #[test]
    fn shell_enumeration_matches_membership() {
        let kinds = [
            SetKind::Cone(1.0),
            SetKind::Thorn(ThornProfile::Power(0.5)),
            SetKind::Hyperplane(1),
            SetKind::Cylinder { length: 9, base: 2 },
        ];
        for kind in kinds {
            let s = set(kind);
            for k in 0..4u32 {
                let sh = shell(&s, k).unwrap();
                let mut brute = Vec::new();
                let r = 1i64 << (k + 1);
                for x in crate::capacity::box_points(3, -r, r) {
                    if in_shell(&x, k) && s.contains(&x) {
                        brute.push(x);
                    }
                }
                assert_eq!(sh.full_count, brute.len(), "{s:?} k={k}");
            }
        }
    }

    #[test]
    fn cone_contains_inscribed_balls() {
        let cone = set(SetKind::Cone(1.0));
        let rule = fat_thorn_rule(&ThornProfile::Linear(1.0), 3, 1.0).unwrap();
        for w in rule.witnesses.iter().take(6) {
            let r = w.radius.floor() as i64;
            let c = w.center_height as i64;
            for x in crate::capacity::box_points(3, -r, r) {
                if x.iter().map(|v| v * v).sum::<i64>() <= r * r {
                    assert!(cone.contains(&[x[0], x[1], x[2] + c]));
                }
            }
        }
    }

    #[test]
    fn subsampling_kicks_in() {
        let s = set(SetKind::Hyperplane(0));
        let sh = shell_with_limit(&s, 6, 2000).unwrap();
        assert!(sh.is_subsampled());
        assert!(sh.points.as_ref().unwrap().len() <= 2000);
        let full = shell_with_limit(&s, 6, usize::MAX).unwrap();
        assert_eq!(sh.full_count, full.full_count);
    }

    #[test]
    fn thorn_series_examples() {
        let s = thorn_series_terms(&ThornProfile::LinOverLog(1.0), 3, 1.0, 1..=20).unwrap();
        assert_eq!(s.classification, Some(Massiveness::Massive));
        let s = thorn_series_terms(&ThornProfile::LinOverLog(2.0), 3, 1.0, 1..=20).unwrap();
        assert_eq!(s.classification, Some(Massiveness::NonMassive));
        let s = thorn_series_terms(&ThornProfile::Power(0.5), 3, 1.0, 1..=10).unwrap();
        for (n, t) in s.terms {
            assert!((t - 2f64.powf(-(n as f64) / 2.0)).abs() < 1e-14);
        }
        assert!(thorn_series_terms(&ThornProfile::Linear(1.0), 3, 1.0, 1..=3).is_err());
    }

    #[test]
    fn fat_thorn_examples() {
        assert_eq!(fat_thorn_rule(&ThornProfile::Linear(0.5), 3, 1.5).unwrap().verdict, Massiveness::Massive);
        assert_eq!(fat_thorn_rule(&ThornProfile::Linear(1.0), 4, 0.5).unwrap().verdict, Massiveness::Massive);
        assert!(fat_thorn_rule(&ThornProfile::Power(0.9), 3, 1.0).is_err());
    }

    #[test]
    fn hyperplane_integrals() {
        let r = hyperplane_return_sum(3, 0.5, &[1e-5, 1e-6]).unwrap();
        assert!((r.rows[0].1 - 1.844182).abs() < 1e-5);
        assert!((r.rows[1].1 - 1.846337).abs() < 1e-5);
        assert_eq!(r.classification, Massiveness::NonMassive);
        let r = hyperplane_return_sum(3, 1.0, &[1e-3, 1e-4, 1e-5]).unwrap();
        let growth = r.rows[2].1 - r.rows[1].1;
        let expected = (6f64).sqrt() / PI * 10f64.ln();
        assert!((growth / expected - 1.0).abs() < 1e-3);
        let r = hyperplane_return_sum(3, 1.5, &[1e-4, 1e-6]).unwrap();
        let ratio = r.rows[1].1 / r.rows[0].1;
        assert!((ratio / 10.0 - 1.0).abs() < 0.05);
    }

    #[test]
    fn chi_examples() {
        let (p, c) = chi_profile(&BernsteinSpec::power(1.0).unwrap(), 3, 1e4);
        assert!((p.chi(3.0) - 9.0).abs() < 1e-12);
        assert!((c - 4.0).abs() < 1e-9);
        let (_, c) = chi_profile(&BernsteinSpec::log_power(1.0, 1.0).unwrap(), 3, 1e4);
        assert!(c > 0.0 && c <= 8.0);
    }

    #[test]
    fn axis_wiener_converges() {
        let cfg = GreenConfig {
            k_exact: 256,
            radius: 96,
            ..GreenConfig::default()
        };
        let g = GreenEvaluator::new(&BernsteinSpec::power(1.0).unwrap(), 3, cfg).unwrap();
        let rep = wiener_test(&g, &set(SetKind::Axis), 1..=6).unwrap();
        for row in &rep.rows {
            assert!(row.capacity <= row.n_points as f64);
            assert!(row.term >= 0.0);
        }
        assert!(rep.rows.windows(2).all(|w| w[1].partial_sum >= w[0].partial_sum));
        assert_eq!(rep.verdict, WienerVerdict::ConvergesLikely, "{rep:?}");
    }
}

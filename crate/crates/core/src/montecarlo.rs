//! Monte Carlo hitting probabilities for the subordinated walk.
//!
//! A trial draws i.i.d. increments `R ~ c(ψ, ·)`, advances the simple walk by
//! `R` base steps in one go and tests set membership at the arrival times
//! only. Each trial owns a ChaCha stream selected by its index, so estimates
//! do not depend on scheduling.

use std::collections::HashSet;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal, WeightedAliasIndex};
use serde::Serialize;

use crate::bernstein::{coefficients, BernsteinSpec, SubordinationCoefficients};
use crate::capacity::{equilibrium, PointSet};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::green::GreenEvaluator;
use crate::massiveness::{LatticeSetSpec, SetKind};
use crate::walk_kernel::LatticePoint;

/// Increments above this many base steps use the Gaussian surrogate.
pub const SURROGATE_CAP: u64 = 1_000_000_000;
/// Default truncation of the tabulated increment law.
pub const DEFAULT_TABLE_LEN: usize = 4096;

const DIRECT_STEPS: u64 = 24;
const WILSON_Z: f64 = 1.959_963_984_540_054;

/// Sampler for `P(R = k) = c(ψ, k)`.
///
/// `k <= N` comes from an alias table; the remaining mass is spread over
/// `k > N` as the discrete power tail `P(k) ∝ k^{-1-α/2}`, drawn by inverting
/// the continuous Pareto law and rounding.
#[derive(Clone, Debug)]
pub struct IncrementSampler {
    table: WeightedAliasIndex<f64>,
    n: usize,
    tail_mass: f64,
    tail_index: f64,
}

impl IncrementSampler {
    pub fn new(coeffs: &SubordinationCoefficients) -> Result<Self> {
        let c = coeffs.as_slice();
        let n = coeffs.len();
        let tail_mass = (1.0 - coeffs.total_mass()).max(0.0);
        let mut weights: Vec<f64> = c[1..].to_vec();
        weights.push(tail_mass);
        let table = WeightedAliasIndex::new(weights)
            .map_err(|e| Error::Solver(format!("increment table: {e}")))?;
        Ok(IncrementSampler {
            table,
            n,
            tail_mass,
            tail_index: coeffs.tail_exponent() - 1.0,
        })
    }

    pub fn from_spec(spec: &BernsteinSpec, n: usize) -> Result<Self> {
        Self::new(&coefficients(spec, n)?)
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let i = self.table.sample(rng);
        if i < self.n {
            return i as u64 + 1;
        }
        let u: f64 = 1.0 - rng.gen::<f64>();
        let lo = self.n as f64 + 0.5;
        let x = lo * u.powf(-1.0 / self.tail_index);
        if x >= 9.0e18 {
            u64::MAX / 4
        } else {
            (x.round() as u64).max(self.n as u64 + 1)
        }
    }
}

/// Applies `r` simple-walk steps to `pos`; returns true when the Gaussian
/// surrogate was used.
pub fn simulate_step<R: Rng + ?Sized>(pos: &mut [i64], r: u64, rng: &mut R) -> bool {
    let d = pos.len();
    if r <= DIRECT_STEPS {
        for _ in 0..r {
            let m = rng.gen_range(0..2 * d);
            pos[m >> 1] += if m & 1 == 0 { 1 } else { -1 };
        }
        return false;
    }
    if r > SURROGATE_CAP {
        let normal = Normal::new(0.0, (r as f64 / d as f64).sqrt()).unwrap();
        let mut total = 0i64;
        for p in pos.iter_mut() {
            let z = normal.sample(rng).round() as i64;
            *p += z;
            total += z;
        }
        if (total - r as i64).rem_euclid(2) != 0 {
            pos[0] += if rng.gen::<bool>() { 1 } else { -1 };
        }
        return true;
    }
    // Multinomial split of the steps over axes, then a fair binomial per axis.
    let mut left = r;
    for (i, p) in pos.iter_mut().enumerate() {
        let steps = if i + 1 == d {
            left
        } else {
            let share = 1.0 / (d - i) as f64;
            let k = Binomial::new(left, share).unwrap().sample(rng);
            left -= k;
            k
        };
        if steps > 0 {
            let plus = Binomial::new(steps, 0.5).unwrap().sample(rng);
            *p += 2 * plus as i64 - steps as i64;
        }
    }
    false
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Stopping {
    /// Stop once the total number of base steps exceeds the budget.
    Horizon(u64),
    /// Stop once `‖X‖ > radius`, or after `budget` base steps.
    EscapeRadius { radius: f64, budget: u64 },
}

impl std::fmt::Display for Stopping {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Stopping::Horizon(b) => write!(f, "horizon({b})"),
            Stopping::EscapeRadius { radius, budget } => write!(f, "escape(radius={radius},budget={budget})"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimConfig {
    pub d: usize,
    pub spec: BernsteinSpec,
    pub start: Vec<i64>,
    pub trials: usize,
    pub stopping: Stopping,
    pub master_seed: u64,
    pub table_len: usize,
    pub exec: Execution,
}

impl SimConfig {
    pub fn new(spec: BernsteinSpec, start: Vec<i64>, trials: usize, stopping: Stopping, master_seed: u64) -> Self {
        SimConfig {
            d: start.len(),
            spec,
            start,
            trials,
            stopping,
            master_seed,
            table_len: DEFAULT_TABLE_LEN,
            exec: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HittingEstimate {
    pub set: String,
    pub start: Vec<i64>,
    pub trials: usize,
    pub hits: usize,
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub stopping: String,
    pub seed: u64,
    /// Unhit trials that ran out of budget before escaping.
    #[serde(skip)]
    pub exhausted: usize,
    #[serde(skip)]
    pub surrogate_jumps: u64,
    /// Horizon estimates only bound `p_B` from below.
    #[serde(skip)]
    pub lower_bound: bool,
    /// Every trial ran out of budget.
    #[serde(skip)]
    pub flagged: bool,
    #[serde(skip)]
    pub return_bound: Option<f64>,
}

impl HittingEstimate {
    pub fn std_error(&self) -> f64 {
        let p = self.estimate;
        (p * (1.0 - p) / self.trials as f64).sqrt()
    }
}

/// Wilson score interval at 95%.
pub fn wilson_interval(hits: usize, trials: usize) -> (f64, f64) {
    let n = trials as f64;
    let p = hits as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Membership test with a hash set for explicit targets.
struct Target<'a> {
    spec: &'a LatticeSetSpec,
    explicit: Option<HashSet<Vec<i64>>>,
}

impl<'a> Target<'a> {
    fn new(spec: &'a LatticeSetSpec) -> Self {
        let explicit = match &spec.kind {
            SetKind::Explicit(s) => Some(s.points().iter().map(|p| p.coords.clone()).collect()),
            _ => None,
        };
        Target { spec, explicit }
    }

    fn contains(&self, x: &[i64]) -> bool {
        match &self.explicit {
            Some(h) => h.contains(x),
            None => self.spec.contains(x),
        }
    }
}

#[derive(Clone, Copy, Debug)]
enum Outcome {
    /// Base time of the first observed visit.
    Hit(u64),
    Escaped,
    Exhausted,
}

struct TrialResult {
    outcome: Outcome,
    surrogates: u64,
}

fn run_trial(
    cfg: &SimConfig,
    sampler: &IncrementSampler,
    target: &Target,
    max_time: u64,
    escape: Option<f64>,
    trial: usize,
) -> TrialResult {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.master_seed);
    rng.set_stream(trial as u64);
    let mut pos = cfg.start.clone();
    let mut time = 0u64;
    let mut surrogates = 0;
    let escape2 = escape.map(|r| r * r);
    loop {
        if target.contains(&pos) {
            return TrialResult {
                outcome: Outcome::Hit(time),
                surrogates,
            };
        }
        if let Some(r2) = escape2 {
            let n2: f64 = pos.iter().map(|&c| (c as f64) * (c as f64)).sum();
            if n2 > r2 {
                return TrialResult {
                    outcome: Outcome::Escaped,
                    surrogates,
                };
            }
        }
        let r = sampler.sample(&mut rng);
        time = time.saturating_add(r);
        if time > max_time {
            return TrialResult {
                outcome: Outcome::Exhausted,
                surrogates,
            };
        }
        if simulate_step(&mut pos, r, &mut rng) {
            surrogates += 1;
        }
    }
}

fn validate(cfg: &SimConfig, set: &LatticeSetSpec) -> Result<()> {
    if cfg.trials == 0 {
        return Err(Error::domain("at least one trial is required"));
    }
    if cfg.start.len() != cfg.d || set.d != cfg.d {
        return Err(Error::domain("start, set and walk dimensions differ"));
    }
    if cfg.d == 0 {
        return Err(Error::domain("d must be at least 1"));
    }
    Ok(())
}

fn run_all(cfg: &SimConfig, set: &LatticeSetSpec, max_time: u64, escape: Option<f64>) -> Result<Vec<TrialResult>> {
    validate(cfg, set)?;
    let sampler = IncrementSampler::from_spec(&cfg.spec, cfg.table_len)?;
    let target = Target::new(set);
    Ok(map_indexed(cfg.exec, cfg.trials, |t| {
        run_trial(cfg, &sampler, &target, max_time, escape, t)
    }))
}

fn summarize(cfg: &SimConfig, set: &LatticeSetSpec, results: &[TrialResult], horizon: Option<u64>) -> HittingEstimate {
    let hits = results
        .iter()
        .filter(|r| matches!(r.outcome, Outcome::Hit(t) if horizon.is_none_or(|h| t <= h)))
        .count();
    let exhausted = results.len() - hits
        - results.iter().filter(|r| matches!(r.outcome, Outcome::Escaped)).count();
    let (ci_low, ci_high) = wilson_interval(hits, results.len());
    let stopping = match horizon {
        Some(h) => Stopping::Horizon(h).to_string(),
        None => cfg.stopping.to_string(),
    };
    HittingEstimate {
        set: set.label(),
        start: cfg.start.clone(),
        trials: results.len(),
        hits,
        estimate: hits as f64 / results.len() as f64,
        ci_low,
        ci_high,
        stopping,
        seed: cfg.master_seed,
        exhausted,
        surrogate_jumps: results.iter().map(|r| r.surrogates).sum(),
        lower_bound: horizon.is_some() || exhausted > 0,
        flagged: exhausted == results.len(),
        return_bound: None,
    }
}

/// Fraction of trials that visit `set` before stopping.
pub fn hitting_probability(cfg: &SimConfig, set: &LatticeSetSpec) -> Result<HittingEstimate> {
    let (max_time, escape) = match cfg.stopping {
        Stopping::Horizon(b) => (b, None),
        Stopping::EscapeRadius { radius, budget } => {
            if !(radius > 0.0) {
                return Err(Error::domain("escape radius must be positive"));
            }
            (budget, Some(radius))
        }
    };
    let results = run_all(cfg, set, max_time, escape)?;
    let horizon = matches!(cfg.stopping, Stopping::Horizon(_)).then_some(max_time);
    let mut est = summarize(cfg, set, &results, horizon);
    if horizon.is_some() {
        est.flagged = est.hits == 0;
    }
    Ok(est)
}

/// Horizon estimates for several budgets from one set of trials; the
/// estimates are nondecreasing in the budget by construction.
pub fn hitting_by_horizon(cfg: &SimConfig, set: &LatticeSetSpec, budgets: &[u64]) -> Result<Vec<HittingEstimate>> {
    let max = *budgets.iter().max().ok_or_else(|| Error::domain("no budgets given"))?;
    let results = run_all(cfg, set, max, None)?;
    Ok(budgets
        .iter()
        .map(|&b| {
            let mut e = summarize(cfg, set, &results, Some(b));
            e.flagged = e.hits == 0;
            e
        })
        .collect())
}

/// `Cap(B) · max_{y ∈ B} G⁰(x - y)` for `‖x‖ = radius`, the chance of a
/// return after escaping, using the on-axis Green value at the smallest
/// separation.
pub fn escape_return_bound(eval: &GreenEvaluator, set: &PointSet, radius: f64) -> Result<f64> {
    let cap = equilibrium(eval, set)?.capacity;
    let reach = set.points().iter().map(|p| p.norm()).fold(0.0, f64::max);
    let gap = (radius - reach).floor().max(0.0) as i64;
    let g = eval.green_full(&LatticePoint::on_axis(eval.d(), gap))?;
    Ok(cap * (g.value + g.error_bound))
}

/// Lattice point at distance `r` from the set, in a fixed direction.
pub fn start_at_distance(set: &LatticeSetSpec, r: i64) -> Vec<i64> {
    let d = set.d;
    let mut x = vec![0i64; d];
    match &set.kind {
        SetKind::Hyperplane(i) => x[*i] = r,
        SetKind::Axis if d > 1 => x[1] = r,
        SetKind::Ball(b) => x[0] = b + r,
        SetKind::Explicit(s) => {
            let top = s.points().iter().map(|p| p.coords[0]).max().unwrap_or(0);
            x[0] = top + r;
        }
        SetKind::Cylinder { .. } | SetKind::Cone(_) | SetKind::Thorn(_) => x[d - 1] = 1 - r,
        SetKind::Axis => x[0] = -r,
    }
    x
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrendVerdict {
    MassiveConsistent,
    NonMassiveConsistent,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrendRow {
    pub distance: i64,
    pub budget: u64,
    pub estimate: HittingEstimate,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrendReport {
    pub rows: Vec<TrendRow>,
    /// Per distance, slope of `log(1 - p)` against `log(budget)`.
    pub deficit_slopes: Vec<(i64, f64)>,
    pub verdict: TrendVerdict,
}

const DEFICIT_SLOPE: f64 = -0.1;

/// Hitting estimates over start distances and doubling horizons.
///
/// Massive-consistent: at every distance the miss probability `1 - p`
/// decays like a power of the budget with exponent below `-0.1`.
/// Non-massive-consistent: otherwise, when at the largest budget the nearest
/// start hits significantly more often than the farthest.
pub fn massiveness_trend(
    cfg: &SimConfig,
    set: &LatticeSetSpec,
    distances: &[i64],
    budgets: &[u64],
) -> Result<TrendReport> {
    if distances.windows(2).any(|w| w[1] <= w[0]) || distances.is_empty() {
        return Err(Error::domain("start distances must be increasing"));
    }
    if budgets.len() < 2 || budgets.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("need at least two increasing budgets"));
    }
    let mut rows = Vec::new();
    let mut deficit_slopes = Vec::new();
    let mut last = Vec::new();
    for &r in distances {
        let mut c = cfg.clone();
        c.start = start_at_distance(set, r);
        let ests = hitting_by_horizon(&c, set, budgets)?;
        let pts: Vec<(f64, f64)> = budgets
            .iter()
            .zip(&ests)
            .map(|(&b, e)| {
                let miss = (1.0 - e.estimate).max(0.5 / e.trials as f64);
                ((b as f64).ln(), miss.ln())
            })
            .collect();
        deficit_slopes.push((r, slope(&pts)));
        last.push(ests.last().unwrap().clone());
        for (&b, e) in budgets.iter().zip(ests) {
            rows.push(TrendRow {
                distance: r,
                budget: b,
                estimate: e,
            });
        }
    }
    let massive = deficit_slopes.iter().all(|&(_, s)| s < DEFICIT_SLOPE);
    let decays = last.len() >= 2 && last[0].ci_low > last[last.len() - 1].ci_high;
    let verdict = if massive {
        TrendVerdict::MassiveConsistent
    } else if decays {
        TrendVerdict::NonMassiveConsistent
    } else {
        TrendVerdict::Inconclusive
    };
    Ok(TrendReport {
        rows,
        deficit_slopes,
        verdict,
    })
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

//! Capacity and equilibrium measure of finite lattice sets.
//!
//! `Cap(B) = Σ ρ(y)` where `ρ` solves `Σ_y G⁰(x - y) ρ(y) = 1` for `x ∈ B`.
//! Small sets use a dense Cholesky solve; larger ones use conjugate gradients
//! with an FFT convolution over the bounding box. The variational form
//! `max Σρ` subject to `Gρ <= 1`, `ρ >= 0` is solved by simplex as a
//! cross-check.

use std::collections::{HashMap, HashSet};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::conv::{increment, ToeplitzConvolver};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, map_slice};
use crate::green::{FarPart, GreenEvaluator, GreenProfile};
use crate::simplex;
use crate::walk_kernel::LatticePoint;

/// Largest set solved by the dense Cholesky path.
pub const DENSE_LIMIT: usize = 4096;
/// Largest set accepted by the simplex cross-check.
pub const VARIATIONAL_LIMIT: usize = 500;
/// Largest set accepted at all.
pub const MAX_POINTS: usize = 400_000;

const CG_TOLERANCE: f64 = 1e-10;
const NEGATIVE_WEIGHT: f64 = -1e-10;

/// A finite set of lattice points, deduplicated and sorted.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PointSet {
    d: usize,
    points: Vec<LatticePoint>,
}

impl PointSet {
    pub fn new(mut points: Vec<LatticePoint>) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::domain("point sets must be nonempty"));
        };
        let d = first.d();
        if points.iter().any(|p| p.d() != d) {
            return Err(Error::domain("all points must share the same dimension"));
        }
        points.sort_by(|a, b| a.coords.cmp(&b.coords));
        points.dedup();
        Ok(PointSet { d, points })
    }

    /// Lattice points with `‖x‖ <= r`.
    pub fn ball(d: usize, r: i64) -> Result<Self> {
        let r2 = r * r;
        Self::from_box(d, -r, r, |x| x.norm_sq() <= r2)
    }

    /// `{‖x'‖ <= base, 1 <= x_d <= L}`.
    pub fn cylinder(d: usize, length: i64, base: i64) -> Result<Self> {
        if length < 1 {
            return Err(Error::domain("cylinder length must be at least 1"));
        }
        let b2 = base * base;
        let mut points = Vec::new();
        for x in box_points(d - 1, -base, base) {
            if x.iter().map(|c| c * c).sum::<i64>() <= b2 {
                for h in 1..=length {
                    let mut c = x.clone();
                    c.push(h);
                    points.push(LatticePoint { coords: c });
                }
            }
        }
        Self::new(points)
    }

    fn from_box(d: usize, lo: i64, hi: i64, keep: impl Fn(&LatticePoint) -> bool) -> Result<Self> {
        let points = box_points(d, lo, hi)
            .into_iter()
            .map(|coords| LatticePoint { coords })
            .filter(|p| keep(p))
            .collect();
        Self::new(points)
    }

    /// One point per line, coordinates separated by whitespace.
    pub fn parse(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let coords = line
                .split_whitespace()
                .map(|t| t.parse::<i64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", n + 1)))?;
            points.push(LatticePoint::new(coords)?);
        }
        Self::new(points)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for p in &self.points {
            let parts: Vec<String> = p.coords.iter().map(|c| c.to_string()).collect();
            s.push_str(&parts.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn translate(&self, z: &LatticePoint) -> Self {
        PointSet {
            d: self.d,
            points: self.points.iter().map(|p| p.add(z)).collect(),
        }
    }

    pub fn union(&self, other: &PointSet) -> Result<Self> {
        let mut pts = self.points.clone();
        pts.extend(other.points.iter().cloned());
        Self::new(pts)
    }

    /// Replaces every point `p` by the cube of side `s` anchored at `s·p`.
    pub fn dilate(&self, s: i64) -> Result<Self> {
        if s < 1 {
            return Err(Error::domain("dilation factor must be at least 1"));
        }
        let offsets = box_points(self.d, 0, s - 1);
        let mut pts = Vec::with_capacity(self.len() * offsets.len());
        for p in &self.points {
            for o in &offsets {
                pts.push(LatticePoint {
                    coords: p.coords.iter().zip(o).map(|(c, oi)| c * s + oi).collect(),
                });
            }
        }
        Self::new(pts)
    }

    pub fn bounds(&self) -> (Vec<i64>, Vec<i64>) {
        let mut lo = self.points[0].coords.clone();
        let mut hi = lo.clone();
        for p in &self.points {
            for i in 0..self.d {
                lo[i] = lo[i].min(p.coords[i]);
                hi[i] = hi[i].max(p.coords[i]);
            }
        }
        (lo, hi)
    }

    pub fn diameter(&self) -> f64 {
        let (lo, hi) = self.bounds();
        lo.iter().zip(&hi).map(|(a, b)| ((b - a) * (b - a)) as f64).sum::<f64>().sqrt()
    }

    pub fn contains_set(&self, other: &PointSet) -> bool {
        let own: HashSet<&LatticePoint> = self.points.iter().collect();
        other.points.iter().all(|p| own.contains(p))
    }
}

/// All integer vectors in `[lo, hi]^d`, last coordinate fastest.
pub(crate) fn box_points(d: usize, lo: i64, hi: i64) -> Vec<Vec<i64>> {
    if d == 0 {
        return vec![Vec::new()];
    }
    let side = (hi - lo + 1).max(0) as usize;
    let mut out = Vec::with_capacity(side.pow(d as u32));
    let limits = vec![side; d];
    let mut counter = vec![0usize; d];
    if side == 0 {
        return out;
    }
    loop {
        out.push(counter.iter().map(|&c| lo + c as i64).collect());
        if !increment(&mut counter, &limits) {
            break;
        }
    }
    out
}

/// `G⁰(z)` tabulated for `|z_i| <= w_i`.
pub struct GreenKernel {
    extents: Vec<usize>,
    values: Vec<f64>,
    /// Largest error bound relative to the entry.
    pub max_relative_error: f64,
}

impl GreenKernel {
    pub fn build(eval: &GreenEvaluator, extents: &[usize]) -> Result<Self> {
        let d = eval.d();
        if extents.len() != d {
            return Err(Error::domain("kernel extents must have one entry per axis"));
        }
        let limits: Vec<usize> = extents.iter().map(|w| w + 1).collect();
        let total: usize = limits.iter().product();
        let mut cells = Vec::with_capacity(total);
        let mut counter = vec![0usize; d];
        loop {
            cells.push(counter.iter().map(|&c| c as i64).collect::<Vec<i64>>());
            if !increment(&mut counter, &limits) {
                break;
            }
        }
        let mut radii: Vec<u64> = cells
            .iter()
            .map(|c| c.iter().map(|v| (v * v) as u64).sum())
            .collect::<HashSet<u64>>()
            .into_iter()
            .collect();
        radii.sort_unstable();
        let exec = eval.config().exec;
        let far: Vec<FarPart> = map_slice(exec, &radii, |&r2| eval.far_part(r2));
        let far: HashMap<u64, FarPart> = radii.into_iter().zip(far).collect();
        let entries: Vec<(f64, f64)> = map_indexed(exec, cells.len(), |i| {
            let x = LatticePoint { coords: cells[i].clone() };
            let (e, e_err) = eval.exact_part(&x);
            let f = far[&(x.norm_sq() as u64)];
            let mut v = e + f.gaussian + f.tail;
            let err = e_err + f.clt_error + f.tail_error;
            if x.is_origin() {
                v += 1.0;
            }
            (v, err / v)
        });
        let max_relative_error = entries.iter().map(|e| e.1).fold(0.0, f64::max);
        Ok(GreenKernel {
            extents: extents.to_vec(),
            values: entries.into_iter().map(|e| e.0).collect(),
            max_relative_error,
        })
    }

    pub fn get(&self, z: &[i64]) -> f64 {
        let mut idx = 0usize;
        for (i, &zi) in z.iter().enumerate() {
            let a = zi.unsigned_abs() as usize;
            debug_assert!(a <= self.extents[i]);
            idx = idx * (self.extents[i] + 1) + a;
        }
        self.values[idx]
    }
}

fn kernel_for(eval: &GreenEvaluator, set: &PointSet, margin: i64) -> Result<GreenKernel> {
    let (lo, hi) = set.bounds();
    let extents: Vec<usize> = lo.iter().zip(&hi).map(|(a, b)| (b - a + margin) as usize).collect();
    GreenKernel::build(eval, &extents)
}

fn diff(a: &LatticePoint, b: &LatticePoint) -> Vec<i64> {
    a.coords.iter().zip(&b.coords).map(|(x, y)| x - y).collect()
}

/// The matrix `[G⁰(x_i - x_j)]`.
pub fn green_matrix(eval: &GreenEvaluator, set: &PointSet) -> Result<DMatrix<f64>> {
    let kernel = kernel_for(eval, set, 0)?;
    certify(eval, &kernel)?;
    Ok(dense_matrix(&kernel, set))
}

fn certify(eval: &GreenEvaluator, kernel: &GreenKernel) -> Result<()> {
    let tol = eval.config().tolerance;
    if kernel.max_relative_error > tol {
        return Err(Error::budget(
            format!(
                "Green kernel certified only to {:.3e} relative, tolerance {tol}",
                kernel.max_relative_error
            ),
            "enlarge the exact-zone budget (K, R) or shrink the set",
        ));
    }
    Ok(())
}

fn dense_matrix(kernel: &GreenKernel, set: &PointSet) -> DMatrix<f64> {
    let n = set.len();
    let pts = set.points();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.get(&diff(&pts[i], &pts[j]));
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CapacityMethod {
    LinearSolve,
    Variational,
}

#[derive(Clone, Debug, Serialize)]
pub struct CapacityResult {
    pub method: CapacityMethod,
    pub capacity: f64,
    /// `max_{x∈B} |(Gρ)(x) - 1|`.
    pub residual: f64,
    pub n_points: usize,
    pub d: usize,
    pub alpha: f64,
    #[serde(skip)]
    pub equilibrium: Vec<f64>,
    /// A weight below `-1e-10` survived the re-solve.
    #[serde(skip)]
    pub flagged: bool,
    #[serde(skip)]
    pub solver: &'static str,
    #[serde(skip)]
    pub iterations: usize,
    #[serde(skip)]
    pub green_relative_error: f64,
}

impl CapacityResult {
    pub fn min_weight(&self) -> f64 {
        self.equilibrium.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Solves `Gρ = 1` on the set.
pub fn equilibrium(eval: &GreenEvaluator, set: &PointSet) -> Result<CapacityResult> {
    check_set(eval, set)?;
    let kernel = kernel_for(eval, set, 0)?;
    certify(eval, &kernel)?;
    let n = set.len();
    let (rho, residual, solver, iterations) = if n <= DENSE_LIMIT {
        dense_solve(&kernel, set, false)?
    } else {
        cg_solve(&kernel, set, CG_TOLERANCE)?
    };
    let mut result = finish(eval, set, CapacityMethod::LinearSolve, rho, residual, solver, iterations, &kernel);
    if result.min_weight() < NEGATIVE_WEIGHT {
        log::warn!(
            "negative equilibrium weight {:.3e} on {} points; re-solving more tightly",
            result.min_weight(),
            n
        );
        let (rho, residual, solver, iterations) = if n <= DENSE_LIMIT {
            dense_solve(&kernel, set, true)?
        } else {
            cg_solve(&kernel, set, 1e-13)?
        };
        result = finish(eval, set, CapacityMethod::LinearSolve, rho, residual, solver, iterations, &kernel);
        result.flagged = result.min_weight() < NEGATIVE_WEIGHT;
    }
    Ok(result)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    eval: &GreenEvaluator,
    set: &PointSet,
    method: CapacityMethod,
    rho: Vec<f64>,
    residual: f64,
    solver: &'static str,
    iterations: usize,
    kernel: &GreenKernel,
) -> CapacityResult {
    CapacityResult {
        method,
        capacity: rho.iter().sum(),
        residual,
        n_points: set.len(),
        d: set.d(),
        alpha: eval.alpha(),
        equilibrium: rho,
        flagged: false,
        solver,
        iterations,
        green_relative_error: kernel.max_relative_error,
    }
}

fn check_set(eval: &GreenEvaluator, set: &PointSet) -> Result<()> {
    if set.d() != eval.d() {
        return Err(Error::domain(format!(
            "set lives in Z^{} but the evaluator in Z^{}",
            set.d(),
            eval.d()
        )));
    }
    if set.len() > MAX_POINTS {
        return Err(Error::budget(
            format!("set has {} points", set.len()),
            format!("at most {MAX_POINTS} points are supported; subsample the set"),
        ));
    }
    Ok(())
}

type Solve = (Vec<f64>, f64, &'static str, usize);

fn dense_solve(kernel: &GreenKernel, set: &PointSet, refine: bool) -> Result<Solve> {
    let m = dense_matrix(kernel, set);
    let n = set.len();
    if n == 1 {
        let g0 = m[(0, 0)];
        let rho = 1.0 / g0;
        return Ok((vec![rho], (g0 * rho - 1.0).abs(), "scalar", 1));
    }
    let ones = DVector::from_element(n, 1.0);
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Solver("Green matrix is not positive definite".into()))?;
    let mut rho = chol.solve(&ones);
    let mut steps = 1;
    if refine {
        for _ in 0..3 {
            let r = &ones - &m * &rho;
            rho += chol.solve(&r);
            steps += 1;
        }
    }
    let residual = (&m * &rho - &ones).amax();
    Ok((rho.iter().copied().collect(), residual, "cholesky", steps))
}

/// Matrix-free `Gρ` through an FFT convolution over the bounding box.
struct BoxOperator {
    conv: ToeplitzConvolver,
    slots: Vec<usize>,
    size: usize,
}

impl BoxOperator {
    fn new(kernel: &GreenKernel, set: &PointSet) -> Self {
        let (lo, hi) = set.bounds();
        let shape: Vec<usize> = lo.iter().zip(&hi).map(|(a, b)| (b - a + 1) as usize).collect();
        let conv = ToeplitzConvolver::new(&shape, |z| kernel.get(z));
        let slots = set
            .points()
            .iter()
            .map(|p| {
                p.coords
                    .iter()
                    .zip(&lo)
                    .zip(&shape)
                    .fold(0usize, |acc, ((c, l), n)| acc * n + (c - l) as usize)
            })
            .collect();
        BoxOperator {
            conv,
            slots,
            size: shape.iter().product(),
        }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.size];
        for (&s, &v) in self.slots.iter().zip(x) {
            full[s] = v;
        }
        let y = self.conv.apply(&full);
        self.slots.iter().map(|&s| y[s]).collect()
    }
}

fn cg_solve(kernel: &GreenKernel, set: &PointSet, tol: f64) -> Result<Solve> {
    let op = BoxOperator::new(kernel, set);
    let n = set.len();
    let b = vec![1.0; n];
    let mut x = vec![0.0; n];
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr: f64 = r.iter().map(|v| v * v).sum();
    let bnorm = rr.sqrt();
    let max_iter = 20_000;
    let mut iterations = 0;
    while rr.sqrt() > tol * bnorm {
        if iterations >= max_iter {
            return Err(Error::Solver(format!(
                "conjugate gradients did not reach {tol:e} in {max_iter} iterations"
            )));
        }
        let ap = op.apply(&p);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(Error::Solver("Green operator lost positive definiteness".into()));
        }
        let step = rr / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        let rr_new: f64 = r.iter().map(|v| v * v).sum();
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
        iterations += 1;
    }
    let gx = op.apply(&x);
    let residual = gx.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    Ok((x, residual, "cg-fft", iterations))
}

/// `max Σρ` subject to `Gρ <= 1`, `ρ >= 0`.
pub fn capacity_variational(eval: &GreenEvaluator, set: &PointSet) -> Result<CapacityResult> {
    check_set(eval, set)?;
    if set.len() > VARIATIONAL_LIMIT {
        return Err(Error::budget(
            format!("variational capacity of {} points", set.len()),
            format!("the simplex cross-check accepts at most {VARIATIONAL_LIMIT} points"),
        ));
    }
    let kernel = kernel_for(eval, set, 0)?;
    certify(eval, &kernel)?;
    let m = dense_matrix(&kernel, set);
    let n = set.len();
    let lp = simplex::maximize(&vec![1.0; n], &m, &vec![1.0; n])?;
    let rho = DVector::from_column_slice(&lp.x);
    let residual = (&m * &rho).iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    Ok(finish(eval, set, CapacityMethod::Variational, lp.x, residual, "simplex", lp.pivots, &kernel))
}

/// `max (Gρ)(x)` over lattice points outside the set within Euclidean
/// distance `dist` of it.
pub fn halo_max_potential(
    eval: &GreenEvaluator,
    set: &PointSet,
    result: &CapacityResult,
    dist: i64,
) -> Result<f64> {
    let own: HashSet<&LatticePoint> = set.points().iter().collect();
    let offsets: Vec<Vec<i64>> = box_points(set.d(), -dist, dist)
        .into_iter()
        .filter(|o| o.iter().map(|c| c * c).sum::<i64>() <= dist * dist)
        .collect();
    let mut halo = HashSet::new();
    for p in set.points() {
        for o in &offsets {
            let q = LatticePoint {
                coords: p.coords.iter().zip(o).map(|(a, b)| a + b).collect(),
            };
            if !own.contains(&q) {
                halo.insert(q);
            }
        }
    }
    let kernel = kernel_for(eval, set, 2 * dist)?;
    let halo: Vec<LatticePoint> = halo.into_iter().collect();
    let pot = map_slice(eval.config().exec, &halo, |x| {
        set.points()
            .iter()
            .zip(&result.equilibrium)
            .map(|(y, r)| kernel.get(&diff(x, y)) * r)
            .sum::<f64>()
    });
    Ok(pot.into_iter().fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub parameter: f64,
    pub n_points: usize,
    pub capacity: f64,
    pub normalized: f64,
}

/// `Cap(B(0,r)) / (r^d ψ(1/r²))` for each radius.
pub fn ball_capacity_scan(eval: &GreenEvaluator, radii: &[i64]) -> Result<Vec<ScanRow>> {
    let profile = GreenProfile::new(eval.d(), eval.spec());
    radii
        .iter()
        .map(|&r| {
            if r < 1 {
                return Err(Error::domain("ball scan radii must be at least 1"));
            }
            let set = PointSet::ball(eval.d(), r)?;
            let cap = equilibrium(eval, &set)?;
            Ok(ScanRow {
                parameter: r as f64,
                n_points: set.len(),
                capacity: cap.capacity,
                normalized: cap.capacity / profile.chi(r as f64),
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct CylinderScan {
    /// `Cap(F_L) / L`.
    pub rows: Vec<ScanRow>,
    /// `Cap(F_{L_{i+1}}) / Cap(F_{L_i})`.
    pub successive_ratios: Vec<f64>,
}

pub fn cylinder_capacity_scan(eval: &GreenEvaluator, lengths: &[i64], base: i64) -> Result<CylinderScan> {
    let rows: Vec<ScanRow> = lengths
        .iter()
        .map(|&l| {
            let set = PointSet::cylinder(eval.d(), l, base)?;
            let cap = equilibrium(eval, &set)?;
            Ok(ScanRow {
                parameter: l as f64,
                n_points: set.len(),
                capacity: cap.capacity,
                normalized: cap.capacity / l as f64,
            })
        })
        .collect::<Result<_>>()?;
    let successive_ratios = rows.windows(2).map(|w| w[1].capacity / w[0].capacity).collect();
    Ok(CylinderScan { rows, successive_ratios })
}

/// `Cap(s·shape) / s^{d-α}` for each scale, with `s·shape` from
/// [`PointSet::dilate`].
pub fn scaling_check(eval: &GreenEvaluator, shape: &PointSet, scales: &[i64]) -> Result<Vec<ScanRow>> {
    let exponent = eval.d() as f64 - eval.alpha();
    scales
        .iter()
        .map(|&s| {
            let set = shape.dilate(s)?;
            let cap = equilibrium(eval, &set)?;
            Ok(ScanRow {
                parameter: s as f64,
                n_points: set.len(),
                capacity: cap.capacity,
                normalized: cap.capacity / (s as f64).powf(exponent),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bernstein::BernsteinSpec;
    use crate::green::GreenConfig;
    use std::sync::OnceLock;

    fn evaluator(alpha: f64) -> &'static GreenEvaluator {
        static E1: OnceLock<GreenEvaluator> = OnceLock::new();
        static E2: OnceLock<GreenEvaluator> = OnceLock::new();
        let cell = if alpha == 1.0 { &E1 } else { &E2 };
        cell.get_or_init(|| {
            let cfg = GreenConfig {
                k_exact: 256,
                radius: 96,
                ..GreenConfig::default()
            };
            GreenEvaluator::new(&BernsteinSpec::power(alpha).unwrap(), 3, cfg).unwrap()
        })
    }

    fn pt(c: &[i64]) -> LatticePoint {
        LatticePoint::new(c.to_vec()).unwrap()
    }

    #[test]
    fn point_set_text_round_trip() {
        let s = PointSet::parse("1 2 3\n# comment\n0 0 0\n1 2 3\n").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(PointSet::parse(&s.to_text()).unwrap(), s);
        assert!(PointSet::parse("1 2\n1 2 3\n").is_err());
        assert!(PointSet::parse("1 x\n").is_err());
        assert!(PointSet::new(vec![]).is_err());
        assert_eq!(PointSet::ball(3, 1).unwrap().len(), 7);
        assert_eq!(PointSet::cylinder(3, 4, 1).unwrap().len(), 20);
    }

    #[test]
    fn single_point_capacity() {
        let g = evaluator(2.0);
        let set = PointSet::new(vec![LatticePoint::origin(3)]).unwrap();
        let cap = equilibrium(g, &set).unwrap();
        let g0 = g.green_full(&LatticePoint::origin(3)).unwrap().value;
        assert_eq!(cap.capacity, 1.0 / g0);
        assert!((cap.capacity - 0.659463).abs() < 1e-3);
        let var = capacity_variational(g, &set).unwrap();
        assert!((var.capacity - cap.capacity).abs() < 1e-14);
        let m = green_matrix(g, &set).unwrap();
        assert_eq!(m[(0, 0)], g0);
    }

    #[test]
    fn two_points() {
        let g = evaluator(1.0);
        let x = pt(&[50, 0, 0]);
        let set = PointSet::new(vec![LatticePoint::origin(3), x.clone()]).unwrap();
        let m = green_matrix(g, &set).unwrap();
        assert_eq!(m[(0, 1)], m[(1, 0)]);
        let c = crate::green::asymptotic_constant(3, 1.0).unwrap();
        assert!((m[(0, 1)] / (c / 2500.0) - 1.0).abs() < 0.1);
        let cap = equilibrium(g, &set).unwrap();
        let expected = 2.0 / (m[(0, 0)] + m[(0, 1)]);
        assert!((cap.capacity - expected).abs() < 1e-14);
        let single = 1.0 / m[(0, 0)];
        assert!(cap.capacity < 2.0 * single && cap.capacity > 1.9 * single);
    }

    #[test]
    fn methods_agree_and_maximum_principle() {
        let g = evaluator(1.0);
        for r in [1, 2, 3] {
            let set = PointSet::ball(3, r).unwrap();
            let a = equilibrium(g, &set).unwrap();
            let b = capacity_variational(g, &set).unwrap();
            assert!((a.capacity - b.capacity).abs() <= 1e-6 * a.capacity, "r={r}");
            assert!(a.min_weight() > 0.0);
            let halo = halo_max_potential(g, &set, &a, 3).unwrap();
            assert!(halo <= 1.0 + 10.0 * a.residual.max(1e-15));
        }
    }

    #[test]
    fn cg_matches_dense() {
        let g = evaluator(1.0);
        let set = PointSet::ball(3, 4).unwrap();
        let kernel = kernel_for(g, &set, 0).unwrap();
        let (dense, _, _, _) = dense_solve(&kernel, &set, false).unwrap();
        let (cg, res, _, _) = cg_solve(&kernel, &set, 1e-12).unwrap();
        assert!(res < 1e-9);
        let cd: f64 = dense.iter().sum();
        let cc: f64 = cg.iter().sum();
        assert!((cd - cc).abs() < 1e-9 * cd);
    }

    #[test]
    fn translation_and_monotonicity() {
        let g = evaluator(1.0);
        let a = PointSet::ball(3, 2).unwrap();
        let ca = equilibrium(g, &a).unwrap().capacity;
        let shifted = equilibrium(g, &a.translate(&pt(&[7, -3, 11]))).unwrap().capacity;
        assert!((ca - shifted).abs() < 1e-12 * ca);
        let b = a.union(&PointSet::cylinder(3, 5, 1).unwrap()).unwrap();
        let cb = equilibrium(g, &b).unwrap().capacity;
        assert!(ca <= cb);
        let cc = equilibrium(g, &PointSet::cylinder(3, 5, 1).unwrap()).unwrap().capacity;
        assert!(cb <= ca + cc);
    }

    #[test]
    fn scans_are_bounded() {
        let g = evaluator(1.0);
        let rows = ball_capacity_scan(g, &[2, 4]).unwrap();
        let ratio = rows[1].normalized / rows[0].normalized;
        assert!((0.5..=2.0).contains(&ratio));
        assert!(ball_capacity_scan(g, &[0]).is_err());
        let scan = cylinder_capacity_scan(g, &[1, 4, 8], 1).unwrap();
        assert!(scan.rows[0].capacity > 0.0);
        let shape = PointSet::ball(3, 1).unwrap();
        let rows = scaling_check(g, &shape, &[1, 2]).unwrap();
        assert_eq!(rows[0].normalized, rows[0].capacity);
    }
}

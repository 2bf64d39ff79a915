//! Transition probabilities of the simple random walk on `Z^d`.
//!
//! Tables live on the fundamental domain of the hyperoctahedral group: points
//! with `0 <= a_1 <= ... <= a_d <= R`. A point of `Z^d` is looked up through
//! its sorted absolute coordinates. Cells are ordered by parity and then by
//! `L1` norm so that one walk step writes a contiguous, growing prefix.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bernstein::{tau_pmf, SubordinationCoefficients};
use crate::error::{Error, Result};
use crate::exec::{fill_indexed, Execution};
use crate::special::KahanSum;

/// Default memory budget for a stored [`TransitionTable`].
pub const DEFAULT_TABLE_BUDGET: usize = 1 << 30;

const CACHE_MAGIC: &[u8; 4] = b"SWTT";
const CACHE_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticePoint {
    pub coords: Vec<i64>,
}

impl LatticePoint {
    pub fn new(coords: Vec<i64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::domain("lattice points need d >= 1"));
        }
        Ok(LatticePoint { coords })
    }

    pub fn origin(d: usize) -> Self {
        LatticePoint { coords: vec![0; d] }
    }

    /// `r e_1`.
    pub fn on_axis(d: usize, r: i64) -> Self {
        let mut coords = vec![0; d];
        coords[0] = r;
        LatticePoint { coords }
    }

    pub fn d(&self) -> usize {
        self.coords.len()
    }

    pub fn norm_sq(&self) -> i64 {
        self.coords.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    pub fn linf(&self) -> i64 {
        self.coords.iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    pub fn l1(&self) -> i64 {
        self.coords.iter().map(|c| c.abs()).sum()
    }

    /// Parity of `x_1 + ... + x_d`; `k ↔ x` when it equals the parity of `k`.
    pub fn parity(&self) -> u8 {
        (self.l1() & 1) as u8
    }

    pub fn is_origin(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    /// Sorted absolute coordinates, the representative of the symmetry orbit.
    pub fn canonical(&self) -> Vec<i64> {
        let mut a: Vec<i64> = self.coords.iter().map(|c| c.abs()).collect();
        a.sort_unstable();
        a
    }

    pub fn sub(&self, other: &LatticePoint) -> LatticePoint {
        LatticePoint {
            coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn add(&self, other: &LatticePoint) -> LatticePoint {
        LatticePoint {
            coords: self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect(),
        }
    }
}

impl std::fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.coords.iter().map(|c| c.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Whether `k` steps can end at `x`.
pub fn parity_matches(k: usize, x: &LatticePoint) -> bool {
    (k % 2) as u8 == x.parity()
}

/// The `2d` unit moves of the simple walk, each with mass `1/(2d)`.
pub fn step_kernel(d: usize) -> Result<Vec<(LatticePoint, f64)>> {
    if d == 0 {
        return Err(Error::domain("d must be at least 1"));
    }
    let w = 1.0 / (2 * d) as f64;
    let mut out = Vec::with_capacity(2 * d);
    for i in 0..d {
        for s in [1, -1] {
            let mut c = vec![0; d];
            c[i] = s;
            out.push((LatticePoint { coords: c }, w));
        }
    }
    Ok(out)
}

/// The Gaussian surrogate `q(n,x) = 2 (d/(2πn))^{d/2} exp(-d‖x‖²/(2n))`.
pub fn gaussian_q(d: usize, n: f64, norm_sq: f64) -> f64 {
    let df = d as f64;
    2.0 * (df / (2.0 * std::f64::consts::PI * n)).powf(df / 2.0) * (-df * norm_sq / (2.0 * n)).exp()
}

fn binomial_table(n: usize, k: usize) -> Vec<Vec<u64>> {
    let mut t = vec![vec![0u64; k + 1]; n + 1];
    for (i, row) in t.iter_mut().enumerate() {
        row[0] = 1;
        for j in 1..=k.min(i) {
            row[j] = 0;
        }
    }
    for i in 1..=n {
        for j in 1..=k.min(i) {
            t[i][j] = t[i - 1][j - 1] + t[i - 1][j];
        }
    }
    t
}

/// Sorted nonnegative coordinate vectors with entries at most `R`.
#[derive(Debug)]
pub struct FundamentalDomain {
    d: usize,
    r: usize,
    /// `coords[i*d..(i+1)*d]`, ascending.
    coords: Vec<u32>,
    rank_to_index: Vec<u32>,
    binom: Vec<Vec<u64>>,
    /// `neighbors[i*2d..]`; the sentinel `cells` is a permanently zero cell.
    neighbors: Vec<u32>,
    parity_start: [usize; 2],
    /// `l1_prefix[p][l]`: cells of parity `p` with `L1 <= l`.
    l1_prefix: [Vec<usize>; 2],
    orbit: Vec<f64>,
    norm_sq: Vec<u64>,
}

impl FundamentalDomain {
    pub fn new(d: usize, r: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::domain("d must be at least 1"));
        }
        let binom = binomial_table(r + d, d);
        let total = binom[r + d][d] as usize;
        if total > u32::MAX as usize / 2 {
            return Err(Error::budget(
                format!("fundamental domain of d={d}, R={r} has {total} cells"),
                "reduce R",
            ));
        }
        let mut raw: Vec<(u8, u32, u64, Vec<u32>)> = Vec::with_capacity(total);
        let mut a = vec![0u32; d];
        loop {
            let l1: u32 = a.iter().sum();
            let rank = rank_of(&binom, &a);
            raw.push(((l1 & 1) as u8, l1, rank, a.clone()));
            // Next nondecreasing vector: bump the rightmost entry below R.
            let Some(i) = (0..d).rev().find(|&i| (a[i] as usize) < r) else {
                break;
            };
            let v = a[i] + 1;
            for x in a.iter_mut().skip(i) {
                *x = v;
            }
        }
        debug_assert_eq!(raw.len(), total);
        raw.sort_unstable_by_key(|e| (e.0, e.1, e.2));

        let mut coords = Vec::with_capacity(total * d);
        let mut rank_to_index = vec![0u32; total];
        let mut orbit = Vec::with_capacity(total);
        let mut norm_sq = Vec::with_capacity(total);
        let max_l1 = d * r;
        let mut l1_prefix = [vec![0usize; max_l1 + 1], vec![0usize; max_l1 + 1]];
        let mut parity_start = [0usize, 0];
        for (idx, (p, l1, rank, c)) in raw.iter().enumerate() {
            if *p == 1 && parity_start[1] == 0 {
                parity_start[1] = idx;
            }
            rank_to_index[*rank as usize] = idx as u32;
            coords.extend_from_slice(c);
            orbit.push(orbit_size(c));
            norm_sq.push(c.iter().map(|&v| (v as u64) * (v as u64)).sum());
            l1_prefix[*p as usize][*l1 as usize] += 1;
        }
        if raw.iter().all(|e| e.0 == 0) {
            parity_start[1] = total;
        }
        for pref in l1_prefix.iter_mut() {
            for l in 1..pref.len() {
                pref[l] += pref[l - 1];
            }
        }

        let mut dom = FundamentalDomain {
            d,
            r,
            coords,
            rank_to_index,
            binom,
            neighbors: Vec::new(),
            parity_start,
            l1_prefix,
            orbit,
            norm_sq,
        };
        let sentinel = total as u32;
        let mut neighbors = Vec::with_capacity(total * 2 * d);
        let mut buf = vec![0u32; d];
        for idx in 0..total {
            for j in 0..d {
                for s in [1i64, -1] {
                    buf.copy_from_slice(dom.cell(idx));
                    let v = (buf[j] as i64 + s).unsigned_abs() as u32;
                    if v as usize > r {
                        neighbors.push(sentinel);
                        continue;
                    }
                    buf[j] = v;
                    buf.sort_unstable();
                    neighbors.push(dom.rank_to_index[rank_of(&dom.binom, &buf) as usize]);
                }
            }
        }
        dom.neighbors = neighbors;
        Ok(dom)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn radius(&self) -> usize {
        self.r
    }

    pub fn cells(&self) -> usize {
        self.orbit.len()
    }

    /// Sorted coordinates of cell `idx`.
    pub fn cell(&self, idx: usize) -> &[u32] {
        &self.coords[idx * self.d..(idx + 1) * self.d]
    }

    pub fn cell_norm_sq(&self, idx: usize) -> u64 {
        self.norm_sq[idx]
    }

    pub fn cell_parity(&self, idx: usize) -> usize {
        usize::from(idx >= self.parity_start[1])
    }

    /// Number of lattice points in the orbit of cell `idx`.
    pub fn orbit_size(&self, idx: usize) -> f64 {
        self.orbit[idx]
    }

    /// Index range of the cells with parity `p`.
    pub fn parity_range(&self, p: usize) -> std::ops::Range<usize> {
        if p == 0 {
            0..self.parity_start[1]
        } else {
            self.parity_start[1]..self.cells()
        }
    }

    /// Cells of parity `k mod 2` with `L1 <= k`: the support of step `k`.
    pub fn support(&self, k: usize) -> std::ops::Range<usize> {
        let p = k % 2;
        let start = self.parity_range(p).start;
        let pref = &self.l1_prefix[p];
        let count = pref[k.min(pref.len() - 1)];
        start..start + count
    }

    /// Internal index of the orbit of `x`, if it lies in the box.
    pub fn index(&self, x: &LatticePoint) -> Option<usize> {
        if x.d() != self.d || x.linf() as usize > self.r {
            return None;
        }
        let c: Vec<u32> = x.canonical().into_iter().map(|v| v as u32).collect();
        Some(self.rank_to_index[rank_of(&self.binom, &c) as usize] as usize)
    }

    pub fn point(&self, idx: usize) -> LatticePoint {
        LatticePoint {
            coords: self.cell(idx).iter().map(|&v| v as i64).collect(),
        }
    }

    fn neighbors_of(&self, idx: usize) -> &[u32] {
        let w = 2 * self.d;
        &self.neighbors[idx * w..(idx + 1) * w]
    }
}

fn rank_of(binom: &[Vec<u64>], a: &[u32]) -> u64 {
    a.iter()
        .enumerate()
        .map(|(i, &v)| binom[v as usize + i][i + 1])
        .sum()
}

fn orbit_size(c: &[u32]) -> f64 {
    let d = c.len();
    let mut perms = (1..=d).map(|v| v as f64).product::<f64>();
    let mut run = 1usize;
    for i in 1..=d {
        if i < d && c[i] == c[i - 1] {
            run += 1;
        } else {
            perms /= (1..=run).map(|v| v as f64).product::<f64>();
            run = 1;
        }
    }
    let nonzero = c.iter().filter(|&&v| v != 0).count();
    perms * 2f64.powi(nonzero as i32)
}

/// Streams `p(k, ·)` on a fundamental domain, one step at a time.
///
/// Only two rows are held. Mass that leaves the box is dropped, so values at
/// `x` stay exact while `k < 2(R+1) - ‖x‖_∞`.
pub struct TransitionStepper {
    domain: Arc<FundamentalDomain>,
    k: usize,
    bufs: [Vec<f64>; 2],
    exec: Execution,
}

impl TransitionStepper {
    pub fn new(domain: Arc<FundamentalDomain>, exec: Execution) -> Self {
        let n = domain.cells() + 1;
        let mut even = vec![0.0; n];
        even[0] = 1.0;
        TransitionStepper {
            domain,
            k: 0,
            bufs: [even, vec![0.0; n]],
            exec,
        }
    }

    pub fn domain(&self) -> &Arc<FundamentalDomain> {
        &self.domain
    }

    pub fn step_count(&self) -> usize {
        self.k
    }

    /// Row `p(k, ·)` indexed by cell; cells of the wrong parity hold 0.
    pub fn current(&self) -> &[f64] {
        &self.bufs[self.k % 2][..self.domain.cells()]
    }

    pub fn value(&self, x: &LatticePoint) -> f64 {
        self.domain.index(x).map_or(0.0, |i| self.current()[i])
    }

    pub fn advance(&mut self) {
        let next_k = self.k + 1;
        let dom = &*self.domain;
        let range = dom.support(next_k);
        let w = 1.0 / (2 * dom.d) as f64;
        let (lo, hi) = self.bufs.split_at_mut(1);
        let (cur, next) = if next_k % 2 == 0 {
            (&hi[0], &mut lo[0])
        } else {
            (&lo[0], &mut hi[0])
        };
        let start = range.start;
        fill_indexed(self.exec, &mut next[range], |i| {
            let s: f64 = dom.neighbors_of(start + i).iter().map(|&j| cur[j as usize]).sum();
            s * w
        });
        self.k = next_k;
    }

    /// `Σ_x p(k,x)` over the box, counting whole orbits.
    pub fn mass(&self) -> f64 {
        let row = self.current();
        self.domain
            .support(self.k)
            .map(|i| row[i] * self.domain.orbit_size(i))
            .collect::<KahanSum>()
            .value()
    }
}

/// Stored `p(k, ·)` for `k <= K` on the box of radius `R`.
#[derive(Clone)]
pub struct TransitionTable {
    domain: Arc<FundamentalDomain>,
    k_max: usize,
    /// `rows[k]` covers the cells of parity `k mod 2`.
    rows: Vec<Vec<f64>>,
}

impl std::fmt::Debug for TransitionTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "TransitionTable(d={}, K={}, R={})",
            self.domain.d, self.k_max, self.domain.r
        )
    }
}

/// Bytes a table of the given shape would occupy.
pub fn table_memory(d: usize, k_max: usize, r: usize) -> usize {
    let binom = binomial_table(r + d, d);
    let cells = binom[r + d][d] as usize;
    (k_max + 1) * cells.div_ceil(2) * 8 + cells * (2 * d * 4 + 64)
}

pub fn pmf_table(d: usize, k_max: usize, r: usize) -> Result<TransitionTable> {
    pmf_table_with(d, k_max, r, DEFAULT_TABLE_BUDGET, Execution::default())
}

pub fn pmf_table_with(
    d: usize,
    k_max: usize,
    r: usize,
    budget: usize,
    exec: Execution,
) -> Result<TransitionTable> {
    if d == 0 {
        return Err(Error::domain("d must be at least 1"));
    }
    let need = table_memory(d, k_max, r);
    if need > budget {
        let mut k2 = k_max;
        let mut r2 = r;
        while table_memory(d, k2, r2) > budget && (k2 > 1 || r2 > 1) {
            k2 = (k2 / 2).max(1);
            r2 = (r2 * 3 / 4).max(1);
        }
        return Err(Error::budget(
            format!("table d={d}, K={k_max}, R={r} needs {need} bytes, budget {budget}"),
            format!("try K={k2}, R={r2}"),
        ));
    }
    let domain = Arc::new(FundamentalDomain::new(d, r)?);
    let mut stepper = TransitionStepper::new(domain.clone(), exec);
    let mut rows = Vec::with_capacity(k_max + 1);
    loop {
        let k = stepper.step_count();
        let range = domain.parity_range(k % 2);
        rows.push(stepper.current()[range].to_vec());
        if k == k_max {
            break;
        }
        stepper.advance();
    }
    Ok(TransitionTable { domain, k_max, rows })
}

impl TransitionTable {
    pub fn d(&self) -> usize {
        self.domain.d
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn radius(&self) -> usize {
        self.domain.r
    }

    pub fn domain(&self) -> &Arc<FundamentalDomain> {
        &self.domain
    }

    /// `p(k,x)`, or `None` when `x` is outside the box or `k > K`.
    pub fn get(&self, k: usize, x: &LatticePoint) -> Option<f64> {
        if k > self.k_max {
            return None;
        }
        let idx = self.domain.index(x)?;
        Some(self.get_cell(k, idx))
    }

    pub fn get_cell(&self, k: usize, idx: usize) -> f64 {
        let range = self.domain.parity_range(k % 2);
        if range.contains(&idx) {
            self.rows[k][idx - range.start]
        } else {
            0.0
        }
    }

    /// No path of length `k` to `x` can leave the box.
    pub fn is_exact(&self, k: usize, x: &LatticePoint) -> bool {
        k <= self.k_max && (x.linf() as usize) <= self.domain.r && k + (x.linf() as usize) < 2 * (self.domain.r + 1)
    }

    pub fn mass(&self, k: usize) -> f64 {
        let range = self.domain.parity_range(k % 2);
        self.rows[k]
            .iter()
            .enumerate()
            .map(|(i, &p)| p * self.domain.orbit_size(range.start + i))
            .collect::<KahanSum>()
            .value()
    }

    /// Writes the binary cache: magic, version, `d`, `K`, `R` as
    /// little-endian `u32`, then each row as little-endian `f64`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(CACHE_MAGIC)?;
        for v in [CACHE_VERSION, self.d() as u32, self.k_max as u32, self.radius() as u32] {
            w.write_all(&v.to_le_bytes())?;
        }
        for row in &self.rows {
            for p in row {
                w.write_all(&p.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(Error::Parse(format!("{}: not a transition table cache", path.display())));
        }
        let mut header = [0u32; 4];
        for h in header.iter_mut() {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)?;
            *h = u32::from_le_bytes(b);
        }
        let [version, d, k_max, radius] = header;
        if version != CACHE_VERSION {
            return Err(Error::Parse(format!("cache version {version}, expected {CACHE_VERSION}")));
        }
        let domain = Arc::new(FundamentalDomain::new(d as usize, radius as usize)?);
        let mut rows = Vec::with_capacity(k_max as usize + 1);
        let mut b = [0u8; 8];
        for k in 0..=k_max as usize {
            let len = domain.parity_range(k % 2).len();
            let mut row = Vec::with_capacity(len);
            for _ in 0..len {
                r.read_exact(&mut b)?;
                row.push(f64::from_le_bytes(b));
            }
            rows.push(row);
        }
        Ok(TransitionTable {
            domain,
            k_max: k_max as usize,
            rows,
        })
    }
}

/// Cache directory from `SUBWALK_CACHE_DIR`, if set.
pub fn cache_dir() -> Option<PathBuf> {
    std::env::var_os("SUBWALK_CACHE_DIR").map(PathBuf::from)
}

/// Loads the table from the cache directory when present, else builds it
/// and stores it there.
pub fn pmf_table_cached(d: usize, k_max: usize, r: usize, dir: Option<&Path>) -> Result<TransitionTable> {
    let Some(dir) = dir else {
        return pmf_table(d, k_max, r);
    };
    let path = dir.join(format!("pmf_d{d}_K{k_max}_R{r}.bin"));
    if path.exists() {
        return TransitionTable::load(&path);
    }
    let table = pmf_table(d, k_max, r)?;
    std::fs::create_dir_all(dir)?;
    table.save(&path)?;
    Ok(table)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CltError {
    /// `p(k,x) - q(k,x)`, or `p(k,x)` when the parity check fails.
    pub value: f64,
    pub parity_ok: bool,
}

/// Local-CLT error `E(k,x) = p(k,x) - q(k,x)`.
pub fn clt_error(table: &TransitionTable, k: usize, x: &LatticePoint) -> Result<CltError> {
    if k == 0 {
        return Err(Error::domain("k must be at least 1"));
    }
    if !table.is_exact(k, x) {
        return Err(Error::domain(format!("p({k},{x}) is not exact in {table:?}")));
    }
    let p = table.get(k, x).unwrap_or(0.0);
    if !parity_matches(k, x) {
        return Ok(CltError {
            value: p,
            parity_ok: false,
        });
    }
    Ok(CltError {
        value: p - gaussian_q(table.d(), k as f64, x.norm_sq() as f64),
        parity_ok: true,
    })
}

/// `max |E(k,x)| ‖x‖² k^{d/2}` over one row, for cells with parity `k`,
/// `r_min <= ‖x‖ <= r_max` and exact entries. `row` is indexed by cell.
pub fn clt_row_constant(
    domain: &FundamentalDomain,
    k: usize,
    row: impl Fn(usize) -> f64,
    r_min: f64,
    r_max: f64,
) -> f64 {
    let d = domain.d;
    let scale = (k as f64).powf(d as f64 / 2.0);
    let exact_linf = (2 * (domain.r + 1)).saturating_sub(k + 1);
    let mut best: f64 = 0.0;
    for idx in domain.support(k) {
        let n2 = domain.cell_norm_sq(idx) as f64;
        let r = n2.sqrt();
        if r < r_min || r > r_max {
            continue;
        }
        if *domain.cell(idx).last().unwrap() as usize > exact_linf {
            continue;
        }
        let e = row(idx) - gaussian_q(d, k as f64, n2);
        best = best.max(e.abs() * n2 * scale);
    }
    best
}

#[derive(Clone, Debug, Serialize)]
pub struct CltFit {
    pub c1: f64,
    /// `(k, max_x |E(k,x)| ‖x‖² k^{d/2})`.
    pub per_k: Vec<(usize, f64)>,
}

/// Empirical constant `c₁` of `|E(k,x)| <= c₁ ‖x‖^{-2} k^{-d/2}` over a table.
pub fn fit_clt_constant(
    table: &TransitionTable,
    k_range: std::ops::RangeInclusive<usize>,
    r_min: f64,
    r_max: f64,
) -> Result<CltFit> {
    if r_min <= 0.0 {
        return Err(Error::domain("the CLT bound degenerates at x = 0; use r_min > 0"));
    }
    if *k_range.end() > table.k_max() {
        return Err(Error::domain("k range exceeds the table"));
    }
    let per_k: Vec<(usize, f64)> = k_range
        .filter(|&k| k >= 1)
        .map(|k| (k, clt_row_constant(&table.domain, k, |i| table.get_cell(k, i), r_min, r_max)))
        .collect();
    let c1 = per_k.iter().map(|e| e.1).fold(0.0, f64::max);
    Ok(CltFit { c1, per_k })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SubordinatedValue {
    pub value: f64,
    /// Mass of `τ_n` not covered by the table.
    pub deficit: f64,
}

/// `p_ψ(n,x) = Σ_k p(k,x) P(τ_n = k)`, truncated at the table's `K`.
pub fn subordinated_pmf(
    table: &TransitionTable,
    coeffs: &SubordinationCoefficients,
    n: usize,
    x: &LatticePoint,
    tolerance: f64,
) -> Result<SubordinatedValue> {
    let k_max = table.k_max().min(coeffs.len());
    let tau = tau_pmf(coeffs, n, k_max)?;
    if tau.mass_deficit > tolerance {
        return Err(Error::budget(
            format!(
                "P(τ_{n} > {k_max}) = {:.3e} exceeds tolerance {tolerance:e}",
                tau.mass_deficit
            ),
            "use a larger table K",
        ));
    }
    let value = (n..=k_max)
        .map(|k| tau.prob(k) * table.get(k, x).unwrap_or(0.0))
        .collect::<KahanSum>()
        .value();
    Ok(SubordinatedValue {
        value,
        deficit: tau.mass_deficit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bernstein::{coefficients, BernsteinSpec};
    use std::collections::HashMap;

    fn pt(c: &[i64]) -> LatticePoint {
        LatticePoint::new(c.to_vec()).unwrap()
    }

    /// Exact path counts by brute-force enumeration of all `(2d)^k` paths.
    fn enumerate_paths(d: usize, k: usize) -> HashMap<Vec<i64>, u64> {
        let mut layer: HashMap<Vec<i64>, u64> = HashMap::new();
        layer.insert(vec![0; d], 1);
        for _ in 0..k {
            let mut next = HashMap::new();
            for (x, n) in &layer {
                for j in 0..d {
                    for s in [1, -1] {
                        let mut y = x.clone();
                        y[j] += s;
                        *next.entry(y).or_insert(0) += n;
                    }
                }
            }
            layer = next;
        }
        layer
    }

    #[test]
    fn step_kernel_examples() {
        let k = step_kernel(3).unwrap();
        assert_eq!(k.len(), 6);
        assert!(k.iter().all(|(_, w)| *w == 1.0 / 6.0));
        assert_eq!(step_kernel(1).unwrap().len(), 2);
        assert!(step_kernel(0).is_err());
    }

    #[test]
    fn domain_indexing_round_trips() {
        let dom = FundamentalDomain::new(3, 7).unwrap();
        assert_eq!(dom.cells(), 120);
        for idx in 0..dom.cells() {
            assert_eq!(dom.index(&dom.point(idx)), Some(idx));
        }
        let total: f64 = (0..dom.cells()).map(|i| dom.orbit_size(i)).sum();
        assert_eq!(total, 15f64.powi(3));
        assert_eq!(dom.index(&pt(&[-3, 1, 2])), dom.index(&pt(&[2, 3, -1])));
        assert_eq!(dom.index(&pt(&[8, 0, 0])), None);
    }

    #[test]
    fn table_examples() {
        let t = pmf_table(3, 8, 10).unwrap();
        assert_eq!(t.get(1, &pt(&[1, 0, 0])), Some(1.0 / 6.0));
        assert!((t.get(2, &pt(&[0, 0, 0])).unwrap() - 1.0 / 6.0).abs() < 1e-16);
        assert_eq!(t.get(3, &pt(&[0, 0, 0])), Some(0.0));
        for k in 0..=8 {
            assert!((t.mass(k) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn table_matches_path_enumeration() {
        for d in 1..=3 {
            let t = pmf_table(d, 8, 8).unwrap();
            for k in 0..=8 {
                let total = ((2 * d) as f64).powi(k as i32);
                for (x, n) in enumerate_paths(d, k) {
                    let p = t.get(k, &LatticePoint { coords: x }).unwrap();
                    let exact = n as f64 / total;
                    assert!((p - exact).abs() <= 1e-15 * exact, "d={d} k={k}");
                }
            }
        }
    }

    #[test]
    fn parity_and_truncation() {
        let t = pmf_table(2, 30, 6).unwrap();
        for k in 0..=30 {
            for idx in 0..t.domain().cells() {
                if t.domain().cell_parity(idx) != k % 2 {
                    assert_eq!(t.get_cell(k, idx), 0.0);
                }
            }
        }
        assert!(t.mass(30) < 1.0);
        assert!(!t.is_exact(30, &pt(&[0, 0])));
        assert!(t.is_exact(13, &pt(&[0, 0])));
    }

    #[test]
    fn budget_error_suggests_smaller_shape() {
        match pmf_table_with(3, 512, 160, 1 << 20, Execution::Sequential) {
            Err(Error::Budget { hint, .. }) => assert!(hint.contains("K=")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gaussian_surrogate() {
        let q = gaussian_q(3, 2.0, 0.0);
        assert!((q - 2.0 * (3.0 / (4.0 * std::f64::consts::PI)).powf(1.5)).abs() < 1e-15);
        assert!((q - 0.2332898).abs() < 1e-6);
        let ratio = gaussian_q(3, 10.0, 0.0) / gaussian_q(3, 20.0, 0.0);
        assert!((ratio - 2f64.powf(1.5)).abs() < 1e-12);
        let t = pmf_table(3, 100, 100).unwrap();
        let p = t.get(100, &LatticePoint::origin(3)).unwrap();
        assert!((p - gaussian_q(3, 100.0, 0.0)).abs() <= 0.05 * p);
    }

    #[test]
    fn clt_fit_is_stable() {
        let t = pmf_table(3, 200, 120).unwrap();
        let fit = fit_clt_constant(&t, 20..=200, 2.0, 20.0).unwrap();
        assert!(fit.c1.is_finite() && fit.c1 > 0.0);
        let late = fit.per_k.iter().filter(|e| e.0 >= 100).map(|e| e.1).fold(0.0, f64::max);
        assert!(late <= fit.c1 * 1.1);
        let e = clt_error(&t, 3, &pt(&[2, 0, 0])).unwrap();
        assert!(!e.parity_ok);
        assert_eq!(e.value, 0.0);
        assert!(fit_clt_constant(&t, 1..=10, 0.0, 5.0).is_err());
    }

    #[test]
    fn cache_round_trip_is_bit_exact() {
        let t = pmf_table(3, 20, 12).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.bin");
        t.save(&path).unwrap();
        let u = TransitionTable::load(&path).unwrap();
        assert_eq!(u.k_max(), 20);
        for k in 0..=20 {
            for idx in 0..t.domain().cells() {
                assert_eq!(t.get_cell(k, idx).to_bits(), u.get_cell(k, idx).to_bits());
            }
        }
    }

    #[test]
    fn subordinated_one_step() {
        let t = pmf_table(3, 400, 400 / 2).unwrap_or_else(|_| pmf_table(3, 400, 120).unwrap());
        let id = coefficients(&BernsteinSpec::power(2.0).unwrap(), 400).unwrap();
        let x = pt(&[1, 1, 0]);
        let v = subordinated_pmf(&t, &id, 2, &x, 1e-12).unwrap();
        assert_eq!(v.value, t.get(2, &x).unwrap());

        // Return probability after one α=1 step: direct sum against the
        // multinomial formula p(2m,0) = 6^{-2m} Σ (2m)!/(i! j! l!)².
        let coeffs = coefficients(&BernsteinSpec::power(1.0).unwrap(), 400).unwrap();
        let v = subordinated_pmf(&t, &coeffs, 1, &LatticePoint::origin(3), 0.1).unwrap();
        let ln_fact = |n: usize| crate::special::ln_gamma(n as f64 + 1.0);
        let mut other = 0.0;
        for m in 1..=200usize {
            let mut s = 0.0;
            for i in 0..=m {
                for j in 0..=m - i {
                    let l = m - i - j;
                    s += (ln_fact(2 * m) - 2.0 * (ln_fact(i) + ln_fact(j) + ln_fact(l))
                        - 2.0 * m as f64 * 6f64.ln())
                    .exp();
                }
            }
            other += coeffs.get(2 * m) * s;
        }
        assert!((v.value - other).abs() < 1e-12 * other);
        assert!(subordinated_pmf(&t, &coeffs, 1, &LatticePoint::origin(3), 1e-6).is_err());
    }
}

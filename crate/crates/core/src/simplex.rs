//! Dense tableau simplex for `max cᵀx` subject to `Ax <= b`, `x >= 0`, `b >= 0`.
//!
//! The slack basis is feasible from the start, so no phase one is needed.
//! After the last pivot the basic solution is recomputed from the original
//! data by an LU solve, which removes the error accumulated in the tableau.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

pub fn maximize(c: &[f64], a: &DMatrix<f64>, b: &[f64]) -> Result<LpSolution> {
    let m = a.nrows();
    let n = a.ncols();
    if c.len() != n || b.len() != m {
        return Err(Error::Solver("LP dimensions do not match".into()));
    }
    if b.iter().any(|&v| v < 0.0) {
        return Err(Error::Solver("slack basis infeasible: negative right-hand side".into()));
    }
    let width = n + m + 1;
    let mut t = vec![0.0; (m + 1) * width];
    for i in 0..m {
        for j in 0..n {
            t[i * width + j] = a[(i, j)];
        }
        t[i * width + n + i] = 1.0;
        t[i * width + n + m] = b[i];
    }
    let obj = m * width;
    for j in 0..n {
        t[obj + j] = -c[j];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    let max_pivots = 50 * (n + m) + 1000;
    let mut pivots = 0;
    loop {
        // Dantzig's rule, switching to Bland's rule after many pivots.
        let bland = pivots > 10 * (n + m);
        let mut enter = None;
        let mut best = -PIVOT_TOL;
        for j in 0..n + m {
            let r = t[obj + j];
            if r < best {
                enter = Some(j);
                if bland {
                    break;
                }
                best = r;
            }
        }
        let Some(e) = enter else { break };
        let mut leave = None;
        let mut ratio = f64::INFINITY;
        for i in 0..m {
            let aie = t[i * width + e];
            if aie > PIVOT_TOL {
                let q = t[i * width + n + m] / aie;
                let better = q < ratio - 1e-14
                    || (bland && (q - ratio).abs() <= 1e-14 && leave.is_some_and(|l: usize| basis[i] < basis[l]));
                if better {
                    ratio = q;
                    leave = Some(i);
                }
            }
        }
        let Some(l) = leave else {
            return Err(Error::Solver("LP unbounded".into()));
        };
        let p = t[l * width + e];
        for j in 0..width {
            t[l * width + j] /= p;
        }
        for i in 0..=m {
            if i == l {
                continue;
            }
            let f = t[i * width + e];
            if f != 0.0 {
                for j in 0..width {
                    t[i * width + j] -= f * t[l * width + j];
                }
            }
        }
        basis[l] = e;
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::Solver(format!("simplex did not terminate in {max_pivots} pivots")));
        }
    }

    // Re-solve B x_B = b with the original columns.
    let mut bmat = DMatrix::zeros(m, m);
    for (col, &var) in basis.iter().enumerate() {
        for i in 0..m {
            bmat[(i, col)] = if var < n { a[(i, var)] } else if var - n == i { 1.0 } else { 0.0 };
        }
    }
    let rhs = DVector::from_column_slice(b);
    let xb = bmat
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Solver("final simplex basis is singular".into()))?;
    let mut x = vec![0.0; n];
    for (col, &var) in basis.iter().enumerate() {
        if var < n {
            x[var] = xb[col];
        }
    }
    let objective = x.iter().zip(c).map(|(xi, ci)| xi * ci).sum();
    Ok(LpSolution { x, objective, pivots })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36.
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 3.0, 2.0]);
        let s = maximize(&[3.0, 5.0], &a, &[4.0, 12.0, 18.0]).unwrap();
        assert!((s.objective - 36.0).abs() < 1e-12);
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_is_reported() {
        let a = DMatrix::from_row_slice(1, 2, &[1.0, -1.0]);
        assert!(maximize(&[0.0, 1.0], &a, &[1.0]).is_err());
    }
}

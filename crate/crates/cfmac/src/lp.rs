//! Small dense linear programs: maximize `c·x` subject to `A x ≤ b`,
//! `x ≥ 0`.
//!
//! Two-phase primal simplex with Bland's rule. Problem sizes here are tiny
//! (a handful of rates or pmf atoms), so a dense tableau is the simplest
//! reliable tool. Rate-region queries and the constrained dependent-input
//! search both go through this.

use thiserror::Error;

const EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("problem is infeasible")]
    Infeasible,
    #[error("objective is unbounded")]
    Unbounded,
    #[error("dimension mismatch between objective, matrix and rhs")]
    Dimensions,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
}

struct Tableau {
    rows: Vec<Vec<f64>>, // m rows, each ncols+1 wide (rhs last)
    zrow: Vec<f64>,      // reduced costs + current objective value (last)
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let piv = self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v /= piv;
        }
        let pivot_row = self.rows[row].clone();
        for (i, r) in self.rows.iter_mut().enumerate() {
            if i != row && r[col].abs() > 0.0 {
                let factor = r[col];
                for (v, pv) in r.iter_mut().zip(&pivot_row) {
                    *v -= factor * pv;
                }
            }
        }
        let factor = self.zrow[col];
        if factor.abs() > 0.0 {
            for (v, pv) in self.zrow.iter_mut().zip(&pivot_row) {
                *v -= factor * pv;
            }
        }
        self.basis[row] = col;
    }

    /// Bland's rule iteration until optimal; errors on unboundedness.
    fn run(&mut self, allowed_cols: usize) -> Result<(), LpError> {
        loop {
            let Some(col) = (0..allowed_cols).find(|&j| self.zrow[j] < -EPS) else {
                return Ok(());
            };
            let mut best: Option<(f64, usize, usize)> = None; // (ratio, basis var, row)
            for i in 0..self.rows.len() {
                let a = self.rows[i][col];
                if a > EPS {
                    let ratio = self.rows[i][self.ncols] / a;
                    let key = (ratio, self.basis[i]);
                    if best.map_or(true, |(r, bvar, _)| key < (r - EPS, bvar) || (ratio <= r + EPS && self.basis[i] < bvar))
                    {
                        best = Some((ratio, self.basis[i], i));
                    }
                }
            }
            match best {
                Some((_, _, row)) => self.pivot(row, col),
                None => return Err(LpError::Unbounded),
            }
        }
    }
}

/// Maximize `c·x` subject to `a x ≤ b`, `x ≥ 0`.
pub fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpSolution, LpError> {
    let n = c.len();
    let m = a.len();
    if b.len() != m || a.iter().any(|row| row.len() != n) {
        return Err(LpError::Dimensions);
    }

    // Columns: n structural, m slacks, then one artificial per negative-rhs
    // row. Phase 1 drives the artificials to zero.
    let neg_rows: Vec<usize> = (0..m).filter(|&i| b[i] < 0.0).collect();
    let n_art = neg_rows.len();
    let ncols = n + m + n_art;
    let mut rows = vec![vec![0.0; ncols + 1]; m];
    let mut basis = vec![0usize; m];
    let mut art_ix = 0usize;
    for i in 0..m {
        let flip = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            rows[i][j] = flip * a[i][j];
        }
        rows[i][n + i] = flip;
        rows[i][ncols] = flip * b[i];
        if flip < 0.0 {
            rows[i][n + m + art_ix] = 1.0;
            basis[i] = n + m + art_ix;
            art_ix += 1;
        } else {
            basis[i] = n + i;
        }
    }

    let mut t = Tableau { rows, zrow: vec![0.0; ncols + 1], basis, ncols };

    if n_art > 0 {
        // Phase 1: maximize −Σ artificials, i.e. reduced costs of the
        // artificial columns start at +1 and the basic ones are priced out.
        for j in n + m..ncols {
            t.zrow[j] = 1.0;
        }
        for i in 0..m {
            if t.basis[i] >= n + m {
                for j in 0..=ncols {
                    t.zrow[j] -= t.rows[i][j];
                }
            }
        }
        t.run(ncols)?;
        if t.zrow[ncols] < -EPS {
            return Err(LpError::Infeasible);
        }
        // Pivot any degenerate basic artificial out, or drop its row.
        for i in (0..m).rev() {
            if t.basis[i] >= n + m {
                if let Some(col) = (0..n + m).find(|&j| t.rows[i][j].abs() > EPS) {
                    t.pivot(i, col);
                } else {
                    t.rows.remove(i);
                    t.basis.remove(i);
                }
            }
        }
    }

    // Phase 2: price out the real objective for the current basis.
    t.zrow = vec![0.0; ncols + 1];
    for j in 0..n {
        t.zrow[j] = -c[j];
    }
    for i in 0..t.rows.len() {
        let bv = t.basis[i];
        if bv < n && c[bv] != 0.0 {
            let coef = c[bv];
            for j in 0..=ncols {
                t.zrow[j] += coef * t.rows[i][j];
            }
        }
    }
    t.run(n + m)?;

    let mut x = vec![0.0; n];
    for (i, &bv) in t.basis.iter().enumerate() {
        if bv < n {
            x[bv] = t.rows[i][t.ncols];
        }
    }
    let value = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok(LpSolution { x, value })
}

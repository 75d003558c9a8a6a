//! Two-phase dense tableau simplex with Bland's rule.

use crate::error::{Error, Result};

use super::Sense;

/// min c.x subject to rows (sparse coefficients, sense, rhs) and x >= 0.
#[derive(Debug, Clone)]
pub struct DenseProblem {
    pub c: Vec<f64>,
    pub rows: Vec<(Vec<(usize, f64)>, Sense, f64)>,
}

#[derive(Debug, Clone)]
pub struct DenseResult {
    pub x: Vec<f64>,
    pub pivots: u64,
}

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-12;
const PHASE1_TOL: f64 = 1e-9;

/// Number of f64 cells the tableau for `p` would occupy.
pub fn tableau_cells(num_vars: usize, rows: &[(Vec<(usize, f64)>, Sense, f64)]) -> usize {
    let m = rows.len();
    let ge = rows
        .iter()
        .filter(|(_, s, b)| (*s == Sense::Ge) == (*b >= 0.0))
        .count();
    (m + 1) * (num_vars + m + ge + 1)
}

struct Tableau {
    t: Vec<f64>,
    w: usize,
    m: usize,
    basis: Vec<usize>,
    pivots: u64,
    nz: Vec<usize>,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * self.w + c]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.w;
        let pv = self.t[r * w + c];
        {
            let row = &mut self.t[r * w..(r + 1) * w];
            for v in row.iter_mut() {
                *v /= pv;
            }
            row[c] = 1.0;
        }
        self.nz.clear();
        for j in 0..w {
            if self.t[r * w + j] != 0.0 {
                self.nz.push(j);
            }
        }
        let (before, rest) = self.t.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        let nz = &self.nz;
        let apply = |row: &mut [f64]| {
            let f = row[c];
            if f != 0.0 {
                for &j in nz {
                    row[j] -= f * prow[j];
                }
                row[c] = 0.0;
            }
        };
        before.chunks_mut(w).for_each(apply);
        after.chunks_mut(w).for_each(apply);
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Runs Bland's rule on the objective row until optimal.
    fn optimize(&mut self, allowed: &dyn Fn(usize) -> bool, max_pivots: u64) -> Result<()> {
        let rhs = self.w - 1;
        loop {
            let obj = self.m;
            let enter = (0..rhs).find(|&j| allowed(j) && self.at(obj, j) < -COST_TOL);
            let Some(c) = enter else {
                return Ok(());
            };
            let mut best: Option<(usize, f64)> = None;
            for r in 0..self.m {
                let a = self.at(r, c);
                if a > PIVOT_TOL {
                    let ratio = self.at(r, rhs).max(0.0) / a;
                    best = match best {
                        None => Some((r, ratio)),
                        Some((br, bv)) => {
                            let tie = (ratio - bv).abs() <= 1e-12 * bv.abs().max(1e-300);
                            if ratio < bv && !tie || tie && self.basis[r] < self.basis[br] {
                                Some((r, ratio))
                            } else {
                                Some((br, bv))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = best else {
                return Err(Error::LpUnbounded);
            };
            self.pivot(r, c);
            if self.pivots > max_pivots {
                return Err(Error::LpSolver(format!("no convergence after {max_pivots} pivots")));
            }
        }
    }
}

pub fn solve(p: &DenseProblem) -> Result<DenseResult> {
    let n = p.c.len();
    let m = p.rows.len();
    // normalize to nonnegative right-hand sides
    let rows: Vec<(Vec<(usize, f64)>, Sense, f64)> = p
        .rows
        .iter()
        .map(|(coefs, s, b)| {
            if *b < 0.0 {
                let flipped = match s {
                    Sense::Le => Sense::Ge,
                    Sense::Ge => Sense::Le,
                };
                (coefs.iter().map(|&(j, v)| (j, -v)).collect(), flipped, -b)
            } else {
                (coefs.clone(), *s, *b)
            }
        })
        .collect();
    let ge_rows: Vec<usize> = (0..m).filter(|&r| rows[r].1 == Sense::Ge).collect();
    let n_art = ge_rows.len();
    let first_art = n + m;
    let w = n + m + n_art + 1;
    let rhs = w - 1;
    let mut t = vec![0.0; (m + 1) * w];
    let mut basis = vec![0usize; m];
    let mut art_of_row = vec![usize::MAX; m];
    for (a, &r) in ge_rows.iter().enumerate() {
        art_of_row[r] = first_art + a;
    }
    for (r, (coefs, s, b)) in rows.iter().enumerate() {
        for &(j, v) in coefs {
            t[r * w + j] += v;
        }
        t[r * w + rhs] = *b;
        match s {
            Sense::Le => {
                t[r * w + n + r] = 1.0;
                basis[r] = n + r;
            }
            Sense::Ge => {
                t[r * w + n + r] = -1.0;
                t[r * w + art_of_row[r]] = 1.0;
                basis[r] = art_of_row[r];
            }
        }
    }
    let mut tab = Tableau {
        t,
        w,
        m,
        basis,
        pivots: 0,
        nz: Vec::with_capacity(w),
    };
    let max_pivots = 50 * (n + m) as u64 + 1000;

    if n_art > 0 {
        let obj = m * w;
        for &r in &ge_rows {
            for j in 0..w {
                if j < first_art || j == rhs {
                    tab.t[obj + j] -= tab.t[r * w + j];
                }
            }
        }
        tab.optimize(&|_| true, max_pivots)?;
        let infeasibility = -tab.at(m, rhs);
        if infeasibility > PHASE1_TOL {
            return Err(Error::LpInfeasible);
        }
        for r in 0..m {
            if tab.basis[r] >= first_art {
                if let Some(j) = (0..first_art).find(|&j| tab.at(r, j).abs() > 1e-9) {
                    tab.pivot(r, j);
                }
            }
        }
    }

    let cmax = p.c.iter().fold(0.0f64, |a, &v| a.max(v.abs())).max(1e-300);
    let obj = m * w;
    for j in 0..w {
        tab.t[obj + j] = if j < n { p.c[j] / cmax } else { 0.0 };
    }
    for r in 0..m {
        let b = tab.basis[r];
        let cb = tab.t[obj + b];
        if cb != 0.0 {
            for j in 0..w {
                let v = tab.t[r * w + j];
                if v != 0.0 {
                    tab.t[obj + j] -= cb * v;
                }
            }
            tab.t[obj + b] = 0.0;
        }
    }
    tab.optimize(&|j| j < first_art, max_pivots)?;

    let mut x = vec![0.0; n];
    for r in 0..m {
        let b = tab.basis[r];
        if b < n {
            x[b] = tab.at(r, rhs).max(0.0);
        }
    }
    Ok(DenseResult {
        x,
        pivots: tab.pivots,
    })
}

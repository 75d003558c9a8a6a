//! Truncated relaxed primal programs on the symmetric half-line p_0, ..., p_N.
//!
//! Window rows are kept for windows inside [0, N-1]; p_N acts as an overflow
//! cell that only appears in the mass row, and the boundary-mass guard reports
//! when the optimum leans on it.

pub mod dense;
pub mod sparse;

use serde::{Deserialize, Serialize};

use crate::bounds::{BoundKind, BoundReport, Method};
use crate::cost::CostFn;
use crate::distribution::NoiseDistribution;
use crate::error::{Error, Result};
use crate::numeric::{csum, CompensatedSum};
use crate::params::PrivacyParams;

pub const MAX_TRUNCATION: u64 = 100_000;
pub const BOUNDARY_TOL: f64 = 1e-10;
/// Tableau cells above which `Backend::Auto` switches to the sparse backend.
pub const DENSE_CELL_LIMIT: usize = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Le,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "family")]
pub enum RowFamily {
    /// p_0/2 + sum_{k>=1} p_k >= 1/2
    Mass,
    /// sum_{l<Delta} p_{start+l} <= delta (epsilon = 0)
    Window { start: u64 },
    /// p_0 (1+E)/2 + E sum_{k=1}^{Delta-1} p_k <= c
    ZeroRow,
    /// p_0 (E-1)/2 + E sum_{k=1}^{Delta} p_k <= c
    FirstRow,
    /// p_0 (E-1)/2 + (E-1) sum_{k<i} p_k + E sum_{k=i}^{i+Delta-1} p_k <= c
    Tail { i: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintRow {
    pub family: RowFamily,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub cost: CostFn,
    pub sensitivity: u32,
    pub epsilon: f64,
    pub delta: f64,
    pub truncation: u64,
    /// 2 L(k) for k = 0..=N
    pub objective: Vec<f64>,
    pub rows: Vec<ConstraintRow>,
}

impl LpProblem {
    pub fn num_vars(&self) -> usize {
        self.truncation as usize + 1
    }

    /// Sparse coefficients (variable index, value) of a row.
    pub fn row_coefficients(&self, row: &ConstraintRow) -> Vec<(usize, f64)> {
        let n = self.truncation as usize;
        let dl = self.sensitivity as usize;
        let e = self.epsilon.exp();
        let em1 = self.epsilon.exp_m1();
        match row.family {
            RowFamily::Mass => std::iter::once((0, 0.5)).chain((1..=n).map(|k| (k, 1.0))).collect(),
            RowFamily::Window { start } => {
                let s = start as usize;
                (s..s + dl).map(|k| (k, 1.0)).collect()
            }
            RowFamily::ZeroRow => std::iter::once((0, (1.0 + e) / 2.0))
                .chain((1..dl).map(|k| (k, e)))
                .collect(),
            RowFamily::FirstRow => std::iter::once((0, em1 / 2.0))
                .chain((1..=dl).map(|k| (k, e)))
                .collect(),
            RowFamily::Tail { i } => {
                let i = i as usize;
                std::iter::once((0, em1 / 2.0))
                    .chain((1..i).map(|k| (k, em1)))
                    .chain((i..i + dl).map(|k| (k, e)))
                    .collect()
            }
        }
    }

    /// Primal feasibility of a half-line vector, as the largest row violation.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = x.iter().fold(0.0f64, |a, &v| a.max(-v));
        for row in &self.rows {
            let lhs = csum(self.row_coefficients(row).into_iter().map(|(j, v)| v * x[j]));
            let viol = match row.sense {
                Sense::Le => lhs - row.rhs,
                Sense::Ge => row.rhs - lhs,
            };
            worst = worst.max(viol);
        }
        worst
    }
}

/// Smallest admissible N.
pub fn required_truncation(sensitivity: u32, epsilon: f64, delta: f64) -> u64 {
    let d = sensitivity as f64;
    if delta > 0.0 {
        ((1.0 / (2.0 * delta) + 4.0) * d - 1e-9).ceil() as u64
    } else {
        (12.0 * d / epsilon - 1e-9).ceil() as u64
    }
}

/// ceil((1/(2 delta) + 6) Delta) for delta > 0, ceil(14 Delta/epsilon) for delta = 0.
pub fn default_truncation(sensitivity: u32, epsilon: f64, delta: f64) -> u64 {
    let d = sensitivity as f64;
    if delta > 0.0 {
        ((1.0 / (2.0 * delta) + 6.0) * d - 1e-9).ceil() as u64
    } else {
        (14.0 * d / epsilon - 1e-9).ceil() as u64
    }
}

pub fn build_relaxed_lp(
    cost: &CostFn,
    sensitivity: u32,
    epsilon: f64,
    delta: f64,
    truncation: u64,
) -> Result<LpProblem> {
    cost.validate()?;
    PrivacyParams::one_dim(epsilon, delta, sensitivity)?.validate_nontrivial()?;
    let required = required_truncation(sensitivity, epsilon, delta);
    if truncation < required {
        return Err(Error::TruncationTooSmall {
            n: truncation,
            required,
        });
    }
    if truncation > MAX_TRUNCATION {
        return Err(Error::TruncationTooLarge(truncation));
    }
    let n = truncation;
    let dl = sensitivity as u64;
    let objective = (0..=n)
        .map(|k| Ok(2.0 * cost.axis(k as i64)?))
        .collect::<Result<Vec<f64>>>()?;
    let c = delta + epsilon.exp_m1() / 2.0;
    let mut rows = vec![ConstraintRow {
        family: RowFamily::Mass,
        sense: Sense::Ge,
        rhs: 0.5,
    }];
    let le = |family| ConstraintRow {
        family,
        sense: Sense::Le,
        rhs: if epsilon == 0.0 { delta } else { c },
    };
    if epsilon == 0.0 {
        rows.extend((0..=n - dl).map(|k| le(RowFamily::Window { start: k })));
    } else {
        rows.push(le(RowFamily::ZeroRow));
        rows.push(le(RowFamily::FirstRow));
        rows.extend((2..=n - dl).map(|i| le(RowFamily::Tail { i })));
    }
    Ok(LpProblem {
        cost: cost.clone(),
        sensitivity,
        epsilon,
        delta,
        truncation,
        objective,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Auto,
    Dense,
    Sparse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    TruncationSuspect,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub optimal_value: f64,
    pub status: LpStatus,
    /// Mass of the symmetrized pmf at |k| >= N - Delta.
    pub boundary_mass: f64,
    pub truncation: u64,
    pub backend: Backend,
    pub pivots: u64,
    /// Half-line variables p_0..p_N as solved.
    #[serde(skip)]
    pub half_line: Vec<f64>,
    pub pmf: NoiseDistribution,
}

pub fn solve_lp(problem: &LpProblem) -> Result<LpSolution> {
    solve_lp_with(problem, Backend::Auto)
}

pub fn solve_lp_with(problem: &LpProblem, backend: Backend) -> Result<LpSolution> {
    let n = problem.num_vars();
    let backend = match backend {
        Backend::Auto => {
            let cells = (problem.rows.len() + 1) * (n + 2 * problem.rows.len() + 2);
            if cells <= DENSE_CELL_LIMIT {
                Backend::Dense
            } else {
                Backend::Sparse
            }
        }
        b => b,
    };
    log::info!(
        "solving relaxed LP: N = {}, {} rows, backend {:?}",
        problem.truncation,
        problem.rows.len(),
        backend
    );
    let (x, pivots) = match backend {
        Backend::Dense => {
            let dp = dense::DenseProblem {
                c: problem.objective.clone(),
                rows: problem
                    .rows
                    .iter()
                    .map(|r| (problem.row_coefficients(r), r.sense, r.rhs))
                    .collect(),
            };
            let r = dense::solve(&dp)?;
            (r.x, r.pivots)
        }
        Backend::Sparse => (sparse::solve(problem)?, 0),
        Backend::Auto => unreachable!(),
    };
    let value = csum(x.iter().zip(&problem.objective).map(|(a, c)| a * c));
    let total = x[0] + 2.0 * csum(x[1..].iter().copied());
    if !(total > 0.0) {
        return Err(Error::LpSolver("solution carries no mass".into()));
    }
    let nn = problem.truncation as usize;
    let dl = problem.sensitivity as usize;
    let mut probs = vec![0.0; 2 * nn + 1];
    for (k, &v) in x.iter().enumerate() {
        probs[nn + k] = v / total;
        probs[nn - k] = v / total;
    }
    // renormalize against rounding in the division
    let s = csum(probs.iter().copied());
    for v in probs.iter_mut() {
        *v /= s;
    }
    let mut boundary = CompensatedSum::new();
    for k in nn.saturating_sub(dl).max(1)..=nn {
        boundary.add(2.0 * x[k] / total);
    }
    let boundary_mass = boundary.value();
    let status = if boundary_mass < BOUNDARY_TOL {
        LpStatus::Optimal
    } else {
        LpStatus::TruncationSuspect
    };
    Ok(LpSolution {
        optimal_value: value,
        status,
        boundary_mass,
        truncation: problem.truncation,
        backend,
        pivots,
        half_line: x,
        pmf: NoiseDistribution::finite(-(nn as i64), probs),
    })
}

/// Builds and solves the relaxed LP (default truncation when `truncation` is None).
pub fn lp_lower_bound(cost: &CostFn, params: &PrivacyParams, truncation: Option<u64>) -> Result<BoundReport> {
    params.validate_nontrivial()?;
    if params.dims != 1 {
        return Err(Error::Unsupported(
            "the relaxed LP is only solved in one dimension".into(),
        ));
    }
    let n = truncation.unwrap_or_else(|| default_truncation(params.sensitivity, params.epsilon, params.delta));
    let lp = build_relaxed_lp(cost, params.sensitivity, params.epsilon, params.delta, n)?;
    let sol = solve_lp(&lp)?;
    let mut notes = vec![format!(
        "N = {n}, boundary mass {:e}, backend {:?}",
        sol.boundary_mass, sol.backend
    )];
    if sol.status != LpStatus::Optimal {
        notes.push("boundary mass at or above 1e-10: truncation may bias the optimum".into());
    }
    Ok(BoundReport {
        value: sol.optimal_value,
        kind: BoundKind::Lower,
        method: Method::LinearProgram,
        preconditions_ok: sol.status == LpStatus::Optimal,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape() {
        let lp = build_relaxed_lp(&CostFn::L1, 1, 0.0, 0.25, 20).unwrap();
        assert_eq!(lp.num_vars(), 21);
        assert_eq!(lp.rows.len(), 21);
        assert_eq!(lp.rows.iter().filter(|r| matches!(r.family, RowFamily::Window { .. })).count(), 20);
        let lp = build_relaxed_lp(&CostFn::L1, 3, 0.0, 0.05, 60).unwrap();
        for r in &lp.rows[1..] {
            let c = lp.row_coefficients(r);
            assert_eq!(c.len(), 3);
            assert_eq!(c[2].0 - c[0].0, 2);
        }
        assert!(lp.objective.iter().all(|&c| c >= 0.0));
        assert!(matches!(
            build_relaxed_lp(&CostFn::L1, 1, 0.001, 0.001, 100),
            Err(Error::TruncationTooSmall { .. })
        ));
        assert!(matches!(
            build_relaxed_lp(&CostFn::L1, 1, 0.0, 0.0, 100),
            Err(Error::ZeroPrivacy)
        ));
    }

    #[test]
    fn examples() {
        let lp = build_relaxed_lp(&CostFn::L1, 1, 0.0, 0.25, 20).unwrap();
        let s = solve_lp(&lp).unwrap();
        assert!((s.optimal_value - 1.0).abs() < 1e-12);
        assert_eq!(s.status, LpStatus::Optimal);
        let lp = build_relaxed_lp(&CostFn::L1, 3, 0.0, 0.05, 200).unwrap();
        assert!((solve_lp(&lp).unwrap().optimal_value - 14.5).abs() < 1e-9);
        let lp = build_relaxed_lp(&CostFn::L1, 1, 0.0, 1.0, 10).unwrap();
        assert!(solve_lp(&lp).unwrap().optimal_value.abs() < 1e-15);
    }

    #[test]
    fn backends_agree() {
        for &(ref cost, sens, eps, delta) in &[
            (CostFn::L1, 1u32, 0.05, 0.05),
            (CostFn::L2, 2, 0.1, 0.02),
            (CostFn::L1, 3, 0.0, 0.05),
        ] {
            let n = default_truncation(sens, eps, delta);
            let lp = build_relaxed_lp(&cost, sens, eps, delta, n).unwrap();
            let a = solve_lp_with(&lp, Backend::Dense).unwrap();
            let b = solve_lp_with(&lp, Backend::Sparse).unwrap();
            assert!(
                (a.optimal_value - b.optimal_value).abs() <= 1e-7 * a.optimal_value.max(1.0),
                "{} vs {}",
                a.optimal_value,
                b.optimal_value
            );
            assert!(lp.max_violation(&a.half_line) < 1e-12);
        }
    }
}

//! Sparse backend: the same program rewritten with prefix-sum variables
//! P_i = p_1 + ... + p_i so every row touches at most four variables, solved by minilp.

use minilp::{ComparisonOp, OptimizationDirection, Problem, Variable};

use crate::error::{Error, Result};

use super::{LpProblem, RowFamily, Sense};

pub fn solve(lp: &LpProblem) -> Result<Vec<f64>> {
    let n = lp.truncation as usize;
    let dl = lp.sensitivity as usize;
    let e = lp.epsilon.exp();
    let em1 = lp.epsilon.exp_m1();
    let mut pb = Problem::new(OptimizationDirection::Minimize);
    let p: Vec<Variable> = (0..=n)
        .map(|k| pb.add_var(lp.objective[k], (0.0, f64::INFINITY)))
        .collect();
    // prefix[i] = P_i for i >= 1
    let prefix: Vec<Option<Variable>> = (0..=n)
        .map(|i| {
            if i == 0 {
                None
            } else {
                Some(pb.add_var(0.0, (0.0, f64::INFINITY)))
            }
        })
        .collect();
    for i in 1..=n {
        let mut terms = vec![(prefix[i].expect("prefix"), 1.0), (p[i], -1.0)];
        if let Some(prev) = prefix[i - 1] {
            terms.push((prev, -1.0));
        }
        pb.add_constraint(&terms[..], ComparisonOp::Eq, 0.0);
    }
    let push = |terms: &mut Vec<(Variable, f64)>, i: usize, coef: f64| {
        if let Some(v) = prefix[i] {
            terms.push((v, coef));
        }
    };
    for row in &lp.rows {
        let mut terms: Vec<(Variable, f64)> = Vec::with_capacity(4);
        match row.family {
            RowFamily::Mass => {
                terms.push((p[0], 0.5));
                push(&mut terms, n, 1.0);
            }
            RowFamily::Window { start } => {
                let k = start as usize;
                if k == 0 {
                    terms.push((p[0], 1.0));
                    push(&mut terms, dl - 1, 1.0);
                } else {
                    push(&mut terms, k + dl - 1, 1.0);
                    push(&mut terms, k - 1, -1.0);
                }
            }
            RowFamily::ZeroRow => {
                terms.push((p[0], (1.0 + e) / 2.0));
                push(&mut terms, dl - 1, e);
            }
            RowFamily::FirstRow => {
                terms.push((p[0], em1 / 2.0));
                push(&mut terms, dl, e);
            }
            RowFamily::Tail { i } => {
                let i = i as usize;
                terms.push((p[0], em1 / 2.0));
                push(&mut terms, i - 1, em1 - e);
                push(&mut terms, i + dl - 1, e);
            }
        }
        let op = match row.sense {
            Sense::Le => ComparisonOp::Le,
            Sense::Ge => ComparisonOp::Ge,
        };
        pb.add_constraint(&terms[..], op, row.rhs);
    }
    let sol = pb.solve().map_err(|e| match e {
        minilp::Error::Infeasible => Error::LpInfeasible,
        minilp::Error::Unbounded => Error::LpUnbounded,
    })?;
    Ok(p.iter().map(|&v| sol[v].max(0.0)).collect())
}

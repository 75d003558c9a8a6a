//! Parameter grids and sweep evaluation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{gap_report, GapReport};
use crate::cost::CostFn;
use crate::error::{Error, Result};
use crate::numeric::fmt_sig;
use crate::params::PrivacyParams;

pub const SWEEP_HEADER: &str =
    "epsilon,delta,sensitivity,dims,cost,v_lb,lb_method,v_ub_uniform,v_ub_laplace,v_ub_min,ratio,flags";

/// Parses "a:b:log:n", "a:b:lin:n" (inclusive endpoints) or a comma separated list.
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let bad = |msg: &str| Error::InvalidParams(format!("grid '{s}': {msg}"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() == 1 {
        let vals = s
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| bad("not a number")))
            .collect::<Result<Vec<_>>>()?;
        if vals.is_empty() {
            return Err(bad("empty"));
        }
        return Ok(vals);
    }
    if parts.len() != 4 {
        return Err(bad("expected start:stop:log|lin:count"));
    }
    let a: f64 = parts[0].parse().map_err(|_| bad("bad start"))?;
    let b: f64 = parts[1].parse().map_err(|_| bad("bad stop"))?;
    let n: usize = parts[3].parse().map_err(|_| bad("bad count"))?;
    if n == 0 {
        return Err(bad("count must be >= 1"));
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    let step = |i: usize| i as f64 / (n - 1) as f64;
    let mut v: Vec<f64> = match parts[2] {
        "lin" => (0..n).map(|i| a + (b - a) * step(i)).collect(),
        "log" => {
            if !(a > 0.0 && b > 0.0) {
                return Err(bad("log grids need positive endpoints"));
            }
            let (la, lb) = (a.ln(), b.ln());
            (0..n).map(|i| (la + (lb - la) * step(i)).exp()).collect()
        }
        _ => return Err(bad("spacing must be 'log' or 'lin'")),
    };
    v[0] = a;
    v[n - 1] = b;
    Ok(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub epsilon: Vec<f64>,
    pub delta: Vec<f64>,
    pub sensitivity: u32,
    pub dims: u32,
    pub cost: CostFn,
    /// Pair the grids elementwise instead of taking their product.
    #[serde(default)]
    pub zip: bool,
}

impl SweepSpec {
    pub fn points(&self) -> Result<Vec<(f64, f64)>> {
        if self.epsilon.is_empty() || self.delta.is_empty() {
            return Err(Error::InvalidParams("sweep grids must be nonempty".into()));
        }
        if self.zip {
            let (e, d) = (&self.epsilon, &self.delta);
            let n = match (e.len(), d.len()) {
                (a, b) if a == b => a,
                (1, b) => b,
                (a, 1) => a,
                (a, b) => {
                    return Err(Error::InvalidParams(format!(
                        "zipped grids differ in length ({a} vs {b})"
                    )))
                }
            };
            let at = |g: &Vec<f64>, i: usize| if g.len() == 1 { g[0] } else { g[i] };
            Ok((0..n).map(|i| (at(e, i), at(d, i))).collect())
        } else {
            Ok(self
                .epsilon
                .iter()
                .flat_map(|&e| self.delta.iter().map(move |&d| (e, d)))
                .collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub epsilon: f64,
    pub delta: f64,
    pub result: std::result::Result<GapReport, Error>,
}

pub fn evaluate_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.cost.validate()?;
    let points = spec.points()?;
    Ok(points
        .par_iter()
        .map(|&(epsilon, delta)| {
            let result = PrivacyParams::new(epsilon, delta, spec.sensitivity, spec.dims)
                .and_then(|p| gap_report(&spec.cost, &p));
            if let Err(e) = &result {
                log::warn!("sweep point epsilon={epsilon} delta={delta}: {e}");
            }
            SweepRow { epsilon, delta, result }
        })
        .collect())
}

fn opt(v: Option<f64>) -> String {
    v.map(fmt_sig).unwrap_or_default()
}

/// Quotes a CSV field when it contains a separator, quote or line break.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn row_csv(spec: &SweepSpec, row: &SweepRow) -> String {
    let head = format!(
        "{},{},{},{},{}",
        fmt_sig(row.epsilon),
        fmt_sig(row.delta),
        spec.sensitivity,
        spec.dims,
        spec.cost.label()
    );
    match &row.result {
        Ok(g) => format!(
            "{head},{},{},{},{},{},{},{}",
            opt(g.v_lb),
            g.lb_method.clone().unwrap_or_default(),
            opt(g.v_ub_uniform),
            opt(g.v_ub_laplace),
            opt(g.v_ub_min),
            opt(g.ratio),
            g.flags.join(";")
        ),
        Err(e) => format!("{head},,,,,,,{}", csv_field(&format!("error: {e}"))),
    }
}

/// One CSV row per grid point, in grid order.
pub fn run_sweep(spec: &SweepSpec) -> Result<String> {
    let rows = evaluate_sweep(spec)?;
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for r in &rows {
        out.push_str(&row_csv(spec, r));
        out.push('\n');
    }
    Ok(out)
}

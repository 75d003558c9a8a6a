//! Exact (epsilon, delta)-DP verification of integer noise pmfs.
//!
//! For a shift v the worst set S is the set of points where p(i) > e^eps p(i+v),
//! so the tightest delta is max over shifts of sum_i max(p(i) - e^eps p(i+v), 0).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::{geometric_norm, NoiseDistribution};
use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::params::PrivacyParams;

pub const MAX_CELLS: u64 = 1_000_000;
pub const MAX_SHIFTS: u64 = 1_000_000;
const GEOMETRIC_TAIL: f64 = 1e-14;
const TIE_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyReport {
    pub tightest_delta: f64,
    pub worst_shift: Vec<i64>,
    /// Set by [`check_dp`] only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub satisfies: Option<bool>,
}

fn pick_worst(margins: &[f64], shifts: &[Vec<i64>]) -> PrivacyReport {
    let best = margins.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let idx = margins
        .iter()
        .position(|&m| m >= best - TIE_TOL)
        .expect("at least one shift");
    PrivacyReport {
        tightest_delta: best.clamp(0.0, 1.0),
        worst_shift: shifts[idx].clone(),
        satisfies: None,
    }
}

/// Shifts -Delta..-1, 1..Delta in increasing order.
fn shifts_1d(sensitivity: u32) -> Vec<i64> {
    let d = sensitivity as i64;
    (-d..=d).filter(|&s| s != 0).collect()
}

pub fn tightest_delta_1d(
    dist: &NoiseDistribution,
    epsilon: f64,
    sensitivity: u32,
) -> Result<PrivacyReport> {
    dist.validate()?;
    check_inputs(epsilon, sensitivity)?;
    let shifts = shifts_1d(sensitivity);
    let margins: Vec<f64> = match dist {
        NoiseDistribution::Finite1D { offset, probs } => {
            let e = epsilon.exp();
            shifts
                .iter()
                .map(|&s| {
                    let mut acc = CompensatedSum::new();
                    for (j, &p) in probs.iter().enumerate() {
                        if p > 0.0 {
                            let q = dist.pmf(offset + j as i64 + s);
                            let m = p - e * q;
                            if m > 0.0 {
                                acc.add(m);
                            }
                        }
                    }
                    acc.value()
                })
                .collect()
        }
        NoiseDistribution::GeometricLaplace { lambda } => shifts
            .iter()
            .map(|&s| geometric_margin(*lambda, epsilon, s.unsigned_abs()))
            .collect(),
        NoiseDistribution::Product { axes } if axes.len() == 1 => {
            return tightest_delta_1d(&axes[0], epsilon, sensitivity)
        }
        NoiseDistribution::Product { axes } => {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: axes.len(),
            })
        }
    };
    let shifts: Vec<Vec<i64>> = shifts.into_iter().map(|s| vec![s]).collect();
    Ok(pick_worst(&margins, &shifts))
}

/// Closed-form margin of the two-sided geometric pmf under a shift of size t.
///
/// Points k >= 0 contribute (1 - e^eps lambda^t) p_k when positive, points
/// k <= -t never contribute, and the t - 1 points in between are summed directly.
fn geometric_margin(lambda: f64, epsilon: f64, t: u64) -> f64 {
    let c = geometric_norm(lambda);
    let ln_l = lambda.ln();
    let mut acc = CompensatedSum::new();
    let expo = epsilon + t as f64 * ln_l;
    if expo < 0.0 {
        acc.add(-expo.exp_m1() * c / (1.0 - lambda));
    }
    for a in 1..t {
        // k = -a, k + t = t - a
        let p = c * (a as f64 * ln_l).exp();
        let q = c * (epsilon + (t - a) as f64 * ln_l).exp();
        if p > q {
            acc.add(p - q);
        }
    }
    acc.value()
}

fn check_inputs(epsilon: f64, sensitivity: u32) -> Result<()> {
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::InvalidParams(format!("epsilon must be >= 0, got {epsilon}")));
    }
    if sensitivity == 0 {
        return Err(Error::InvalidParams("sensitivity must be >= 1".into()));
    }
    Ok(())
}

/// Number of v in Z^d with 1 <= |v|_1 <= r.
pub fn shift_count(d: usize, r: u32) -> u64 {
    // sum_k 2^k C(d,k) C(r,k), minus the zero vector
    let mut total: f64 = 0.0;
    let mut cd = 1.0f64;
    let mut cr = 1.0f64;
    for k in 0..=d.min(r as usize) {
        if k > 0 {
            cd *= (d - k + 1) as f64 / k as f64;
            cr *= (r as usize - k + 1) as f64 / k as f64;
        }
        total += 2f64.powi(k as i32) * cd * cr;
    }
    (total - 1.0).round().min(u64::MAX as f64) as u64
}

/// All shifts with 1 <= |v|_1 <= r, in lexicographic order.
pub fn enumerate_shifts(d: usize, r: u32) -> Vec<Vec<i64>> {
    fn rec(d: usize, budget: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if cur.len() == d {
            if cur.iter().any(|&x| x != 0) {
                out.push(cur.clone());
            }
            return;
        }
        for x in -budget..=budget {
            cur.push(x);
            rec(d, budget - x.abs(), cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(d, r as i64, &mut Vec::with_capacity(d), &mut out);
    out
}

/// Per-axis pmf values on an explicit window, extended by `pad` on each side.
struct AxisTable {
    len: usize,
    pad: usize,
    ext: Vec<f64>,
}

impl AxisTable {
    fn new(axis: &NoiseDistribution, pad: u32) -> Result<Self> {
        let (lo, hi) = match axis {
            NoiseDistribution::Finite1D { .. } => axis.finite_support().expect("validated pmf has mass"),
            NoiseDistribution::GeometricLaplace { lambda } => {
                let c = geometric_norm(*lambda);
                let k = ((GEOMETRIC_TAIL * (1.0 - lambda) / (2.0 * c)).ln() / lambda.ln()).ceil();
                if !(k < MAX_CELLS as f64) {
                    return Err(Error::SupportTooLarge {
                        cells: u64::MAX,
                        shifts: 0,
                    });
                }
                (-(k as i64), k as i64)
            }
            NoiseDistribution::Product { .. } => {
                return Err(Error::InvalidParams("nested product distribution".into()))
            }
        };
        let pad = pad as usize;
        let len = (hi - lo + 1) as usize;
        let ext = (0..len + 2 * pad)
            .map(|j| axis.pmf(lo - pad as i64 + j as i64))
            .collect();
        Ok(Self { len, pad, ext })
    }

    #[inline]
    fn at(&self, j: usize, shift: i64) -> f64 {
        self.ext[(self.pad as i64 + j as i64 + shift) as usize]
    }
}

pub fn tightest_delta_multi(
    dist: &NoiseDistribution,
    epsilon: f64,
    sensitivity: u32,
) -> Result<PrivacyReport> {
    dist.validate()?;
    check_inputs(epsilon, sensitivity)?;
    let axes: Vec<&NoiseDistribution> = match dist {
        NoiseDistribution::Product { axes } => axes.iter().collect(),
        other => vec![other],
    };
    let d = axes.len();
    let n_shifts = shift_count(d, sensitivity);
    let tables = axes
        .iter()
        .map(|a| AxisTable::new(a, sensitivity))
        .collect::<Result<Vec<_>>>()?;
    let cells = tables
        .iter()
        .fold(1u64, |acc, t| acc.saturating_mul(t.len as u64));
    if cells > MAX_CELLS || n_shifts > MAX_SHIFTS {
        return Err(Error::SupportTooLarge {
            cells,
            shifts: n_shifts,
        });
    }
    log::debug!("multi-dim DP check over {cells} cells and {n_shifts} shifts");
    let shifts = enumerate_shifts(d, sensitivity);
    let e = epsilon.exp();

    // joint mass and multi-index of every cell
    let mut idx = vec![0usize; d];
    let mut cell_idx: Vec<usize> = Vec::with_capacity(cells as usize * d);
    let mut joint: Vec<f64> = Vec::with_capacity(cells as usize);
    loop {
        joint.push((0..d).map(|m| tables[m].at(idx[m], 0)).product());
        cell_idx.extend_from_slice(&idx);
        let mut m = d;
        loop {
            if m == 0 {
                break;
            }
            m -= 1;
            idx[m] += 1;
            if idx[m] < tables[m].len {
                break;
            }
            idx[m] = 0;
            if m == 0 {
                m = usize::MAX;
                break;
            }
        }
        if m == usize::MAX {
            break;
        }
    }

    let margins: Vec<f64> = shifts
        .par_iter()
        .map(|v| {
            let mut acc = CompensatedSum::new();
            for (c, &p) in joint.iter().enumerate() {
                if p <= 0.0 {
                    continue;
                }
                let ix = &cell_idx[c * d..(c + 1) * d];
                let mut q = 1.0;
                for m in 0..d {
                    q *= tables[m].at(ix[m], v[m]);
                    if q == 0.0 {
                        break;
                    }
                }
                let diff = p - e * q;
                if diff > 0.0 {
                    acc.add(diff);
                }
            }
            acc.value()
        })
        .collect();
    Ok(pick_worst(&margins, &shifts))
}

/// Tightest delta at `params.epsilon` compared against `params.delta` (tolerance 1e-12).
pub fn check_dp(dist: &NoiseDistribution, params: &PrivacyParams) -> Result<PrivacyReport> {
    params.validate()?;
    if dist.dims() != params.dims as usize {
        return Err(Error::DimensionMismatch {
            expected: params.dims as usize,
            got: dist.dims(),
        });
    }
    let mut report = if dist.dims() == 1 {
        tightest_delta_1d(dist, params.epsilon, params.sensitivity)?
    } else {
        tightest_delta_multi(dist, params.epsilon, params.sensitivity)?
    };
    report.satisfies = Some(report.tightest_delta <= params.delta + 1e-12);
    Ok(report)
}

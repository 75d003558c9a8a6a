//! Explicit dual-feasible points for the relaxed primal programs, and an exact
//! checker for them. By weak duality every verified certificate objective is a
//! lower bound on the minimal expected cost.

use serde::{Deserialize, Serialize};

use crate::cost::CostFn;
use crate::error::{Error, Result};
use crate::numeric::{csum, positive_integer, CompensatedSum};
use crate::params::PrivacyParams;

/// Constraint slack tolerance, relative to max(1, mu).
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Largest number of weights a single axis may carry.
pub const MAX_AXIS_WEIGHTS: usize = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    #[serde(rename = "zero_delta_1d")]
    ZeroDelta1D,
    #[serde(rename = "eps_delta_1d")]
    EpsDelta1D,
    #[serde(rename = "multi_zero_delta_l1")]
    MultiZeroDeltaL1,
    #[serde(rename = "multi_zero_delta_l2")]
    MultiZeroDeltaL2,
    #[serde(rename = "multi_eps_delta_l1")]
    MultiEpsDeltaL1,
    #[serde(rename = "multi_eps_delta_l2")]
    MultiEpsDeltaL2,
}

impl Regime {
    pub fn is_one_dim(self) -> bool {
        matches!(self, Regime::ZeroDelta1D | Regime::EpsDelta1D)
    }

    pub fn uses_beta(self) -> bool {
        matches!(self, Regime::MultiEpsDeltaL1 | Regime::MultiEpsDeltaL2)
    }
}

/// Dense weights `weights[j]` for index `offset + j`; zero elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisWeights {
    pub offset: i64,
    pub weights: Vec<f64>,
}

impl AxisWeights {
    pub fn get(&self, i: i64) -> f64 {
        let j = i - self.offset;
        if j < 0 || j >= self.weights.len() as i64 {
            0.0
        } else {
            self.weights[j as usize]
        }
    }

    /// Inclusive index range of the stored weights.
    pub fn range(&self) -> (i64, i64) {
        (self.offset, self.offset + self.weights.len() as i64 - 1)
    }

    pub fn total(&self) -> f64 {
        csum(self.weights.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    pub regime: Regime,
    pub mu: f64,
    pub axes: Vec<AxisWeights>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub regime: Regime,
    pub feasible: bool,
    /// Largest constraint violation divided by max(1, mu); feasible iff <= 1e-9.
    pub worst_violation: f64,
    pub worst_violation_abs: f64,
    pub worst_constraint: String,
    pub objective: f64,
    pub mu: f64,
    pub binding_constraints: u64,
    pub notes: Vec<String>,
}

fn integrality_half_inverse(delta: f64) -> Result<u64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParams(format!("delta must lie in (0, 1], got {delta}")));
    }
    let x = 1.0 / (2.0 * delta);
    positive_integer(x).ok_or_else(|| Error::IntegralityViolated {
        what: "1/(2 delta)".into(),
        value: x,
        nearest_delta: 1.0 / (2.0 * x.round().max(1.0)),
    })
}

/// Zero-delta, one-dimensional certificate with mu = L(1 + Delta/(2 delta)).
///
/// The weight y_0 may come out negative when the cost grows too slowly; the
/// certificate is still returned so that verification can report it.
pub fn build_cert_zero_delta_1d(cost: &CostFn, sensitivity: u32, delta: f64) -> Result<DualCertificate> {
    cost.validate()?;
    if sensitivity == 0 {
        return Err(Error::InvalidParams("sensitivity must be >= 1".into()));
    }
    let m = integrality_half_inverse(delta)? as i64;
    let dl = sensitivity as i64;
    let l = |k: i64| cost.axis(k);
    let mu = l(1 + m * dl)?;
    let top = (m - 1) * dl + 1;
    let mut y = vec![0.0; top as usize + 1];
    for k in (2..=top).rev() {
        let next = if k + dl <= top { y[(k + dl) as usize] } else { 0.0 };
        y[k as usize] = l(k + dl)? - l(k + dl - 1)? + next;
    }
    let mut y1 = CompensatedSum::new();
    for i in 1..=m {
        y1.add(l(1 + i * dl)? - l(i * dl)?);
    }
    let y1 = y1.value();
    y[1] = y1;
    y[0] = mu - l(1)? - y1;
    let mut notes = vec![format!("1/(2 delta) = {m}")];
    if y[0] < 0.0 {
        notes.push(format!("y_0 = {} is negative: the growth condition on the cost fails", y[0]));
    }
    Ok(DualCertificate {
        regime: Regime::ZeroDelta1D,
        mu,
        axes: vec![AxisWeights { offset: 0, weights: y }],
        beta: None,
        notes,
    })
}

/// (epsilon, delta) one-dimensional certificate with mu = L(1 + (n-1) Delta).
///
/// When the k = 0 dual constraint is not met by the closed-form y_0 (which
/// happens for slowly growing costs and small Delta), y_0 is raised to the
/// smallest value that satisfies it; the note records the change.
pub fn build_cert_eps_delta_1d(
    cost: &CostFn,
    sensitivity: u32,
    epsilon: f64,
    delta: f64,
    n: u64,
) -> Result<DualCertificate> {
    cost.validate()?;
    PrivacyParams::one_dim(epsilon, delta, sensitivity)?;
    if n < 2 {
        return Err(Error::InvalidParams(format!("n must be >= 2, got {n}")));
    }
    let dl = sensitivity as i64;
    let n = n as i64;
    let top = 1 + (n - 2) * dl;
    if top as usize >= MAX_AXIS_WEIGHTS {
        return Err(Error::NoFeasibleCertificate(format!(
            "certificate would need {} weights",
            top + 1
        )));
    }
    let b = (-epsilon).exp();
    let e = epsilon.exp();
    let l = |k: i64| cost.axis(k);
    let mu = l(1 + (n - 1) * dl)?;
    let mut y = vec![0.0; top as usize + 1];
    for k in (2..=top).rev() {
        let next = if k + dl <= top { y[(k + dl) as usize] } else { 0.0 };
        y[k as usize] = b * (next + l(k + dl)? - l(k + dl - 1)?);
    }
    let mut y1 = CompensatedSum::new();
    let mut y0 = CompensatedSum::new();
    let mut bi = 1.0;
    for i in 1..n {
        bi *= b;
        y1.add(bi * (l(1 + i * dl)? - l(i * dl)?));
        y0.add(bi * (l(i * dl)? - l(1 + (i - 1) * dl)?));
    }
    if y1.value() < 0.0 {
        return Err(Error::NegativeWeight(format!("y_1 = {}", y1.value())));
    }
    if y0.value() < 0.0 {
        return Err(Error::NegativeWeight(format!("y_0 = {}", y0.value())));
    }
    y[1] = y1.value();
    y[0] = y0.value();
    let mut notes = vec![format!("n = {n}")];
    let rest = csum(y[1..].iter().copied());
    let needed = (mu - (e - 1.0) * rest) / (1.0 + e);
    if needed > y[0] {
        notes.push(format!(
            "y_0 raised from {} to {} to meet the k = 0 constraint",
            y[0], needed
        ));
        y[0] = needed;
    }
    Ok(DualCertificate {
        regime: Regime::EpsDelta1D,
        mu,
        axes: vec![AxisWeights { offset: 0, weights: y }],
        beta: None,
        notes,
    })
}

fn check_dims(dims: u32, sensitivity: u32) -> Result<()> {
    if dims == 0 || sensitivity == 0 {
        return Err(Error::InvalidParams("dims and sensitivity must be >= 1".into()));
    }
    Ok(())
}

/// Multi-dimensional l1, zero-delta: mu = d Delta/(2 delta), weights on multiples of Delta.
pub fn build_cert_multi_l1_zero_delta(dims: u32, sensitivity: u32, delta: f64) -> Result<DualCertificate> {
    check_dims(dims, sensitivity)?;
    let m = integrality_half_inverse(delta)? as i64;
    let dl = sensitivity as i64;
    let per_axis = (dl * m) as f64;
    let offset = -m * dl;
    let mut w = vec![0.0; (2 * m * dl + 1) as usize];
    for k in -m..=m {
        let v = match k {
            0 => per_axis,
            k if k > 0 => (per_axis - (k * dl) as f64).max(0.0),
            k => (per_axis - ((k.abs() - 1) * dl) as f64 - 1.0).max(0.0),
        };
        w[(k * dl - offset) as usize] = v;
    }
    let axis = AxisWeights { offset, weights: w };
    Ok(DualCertificate {
        regime: Regime::MultiZeroDeltaL1,
        mu: dims as f64 * per_axis,
        axes: vec![axis; dims as usize],
        beta: None,
        notes: vec![format!("1/(2 delta) = {m}")],
    })
}

/// Multi-dimensional l2, zero-delta: mu = d Delta^2/(4 delta^2), quadratic profiles on multiples of Delta.
pub fn build_cert_multi_l2_zero_delta(dims: u32, sensitivity: u32, delta: f64) -> Result<DualCertificate> {
    check_dims(dims, sensitivity)?;
    let m = integrality_half_inverse(delta)? as i64;
    let dl = sensitivity as i64;
    let per_axis = ((dl * m) * (dl * m)) as f64;
    let offset = -m * dl;
    let mut w = vec![0.0; (2 * m * dl + 1) as usize];
    for k in -m..=m {
        let v = if k >= 0 {
            per_axis - ((k * dl) * (k * dl)) as f64
        } else {
            let r = (k.abs() - 1) * dl + 1;
            per_axis - (r * r) as f64
        };
        w[(k * dl - offset) as usize] = v;
    }
    let axis = AxisWeights { offset, weights: w };
    Ok(DualCertificate {
        regime: Regime::MultiZeroDeltaL2,
        mu: dims as f64 * per_axis,
        axes: vec![axis; dims as usize],
        beta: None,
        notes: vec![format!("1/(2 delta) = {m}")],
    })
}

/// Shared recursion of the beta-regime constructions: geometric growth with an
/// additive increment on (-k Delta, 0], geometric growth minus a decrement above 0.
fn beta_axis(
    sensitivity: u32,
    beta: f64,
    k: i64,
    increment: impl Fn(i64) -> f64,
    decrement: impl Fn(i64) -> f64,
) -> Result<AxisWeights> {
    let dl = sensitivity as i64;
    let e = beta.exp();
    let offset = -k * dl + 1;
    let mut w: Vec<f64> = Vec::new();
    let at = |w: &Vec<f64>, i: i64| -> f64 {
        let j = i - offset;
        if j < 0 {
            0.0
        } else {
            w[j as usize]
        }
    };
    for i in offset..=0 {
        let v = e * at(&w, i - dl) + increment(i);
        w.push(v);
    }
    let mut i = 1;
    let mut zeros = 0;
    while zeros < dl {
        let v = (e * at(&w, i - dl) - decrement(i)).max(0.0);
        w.push(v);
        zeros = if v == 0.0 { zeros + 1 } else { 0 };
        i += 1;
        if w.len() > MAX_AXIS_WEIGHTS {
            return Err(Error::NoFeasibleCertificate(format!(
                "weights did not vanish within {MAX_AXIS_WEIGHTS} entries"
            )));
        }
    }
    while w.len() > 1 && *w.last().expect("nonempty") == 0.0 {
        w.pop();
    }
    Ok(AxisWeights { offset, weights: w })
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParams(format!("beta must be positive, got {beta}")));
    }
    Ok(())
}

/// Block count k = round(log(3/2)/beta), at least 1.
pub fn beta_blocks(beta: f64) -> i64 {
    ((1.5f64).ln() / beta).round().max(1.0) as i64
}

/// Multi-dimensional l1 certificate for the (beta, beta) relaxation; mu = d k Delta.
pub fn build_cert_multi_eps_delta_l1(dims: u32, sensitivity: u32, beta: f64) -> Result<DualCertificate> {
    check_dims(dims, sensitivity)?;
    check_beta(beta)?;
    let k = beta_blocks(beta);
    let axis = beta_axis(sensitivity, beta, k, |_| 1.0, |_| 1.0)?;
    Ok(DualCertificate {
        regime: Regime::MultiEpsDeltaL1,
        mu: (dims as i64 * k * sensitivity as i64) as f64,
        axes: vec![axis; dims as usize],
        beta: Some(beta),
        notes: vec![format!("k = {k}")],
    })
}

/// Multi-dimensional l2 certificate for the (beta, beta) relaxation; mu = d (k Delta)^2.
///
/// Above zero the weights drop by L(i) - L(i-1) = 2i - 1 per step.
pub fn build_cert_multi_eps_delta_l2(dims: u32, sensitivity: u32, beta: f64) -> Result<DualCertificate> {
    check_dims(dims, sensitivity)?;
    check_beta(beta)?;
    let k = beta_blocks(beta);
    let axis = beta_axis(
        sensitivity,
        beta,
        k,
        |i| (2 * i.abs() + 1) as f64,
        |i| (2 * i - 1) as f64,
    )?;
    let side = (k * sensitivity as i64) as f64;
    let gamma = solve_gamma(1.5);
    Ok(DualCertificate {
        regime: Regime::MultiEpsDeltaL2,
        mu: dims as f64 * side * side,
        axes: vec![axis; dims as usize],
        beta: Some(beta),
        notes: vec![
            format!("k = {k}"),
            format!(
                "gamma = {gamma:.10}, asymptotic constant {:.6}",
                l2_eps_delta_constant(1.5, gamma)
            ),
        ],
    })
}

/// Larger root of gamma alpha (log alpha - 1) = -(1 + log gamma), by bisection to 1e-10.
pub fn solve_gamma(alpha: f64) -> f64 {
    let la = alpha.ln();
    let f = |g: f64| g * alpha * (la - 1.0) + 1.0 + g.ln();
    let mut lo = 1.0 / (alpha * (1.0 - la));
    let mut hi = 2.0 * lo;
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// 2 log^2 a - 2 - 2 a g log a + 2 a g - 2 log g - log^2 g
pub fn l2_eps_delta_constant(alpha: f64, gamma: f64) -> f64 {
    let la = alpha.ln();
    let lg = gamma.ln();
    2.0 * la * la - 2.0 - 2.0 * alpha * gamma * la + 2.0 * alpha * gamma - 2.0 * lg - lg * lg
}

struct Tracker {
    scale: f64,
    worst: f64,
    label: String,
}

impl Tracker {
    fn new(scale: f64) -> Self {
        Self {
            scale,
            worst: f64::NEG_INFINITY,
            label: String::new(),
        }
    }

    fn see(&mut self, violation: f64, label: impl FnOnce() -> String) {
        if violation > self.worst {
            self.worst = violation;
            self.label = label();
        }
    }
}

/// Checks every dual constraint of the regime's relaxed program.
pub fn verify_certificate(
    cert: &DualCertificate,
    cost: &CostFn,
    params: &PrivacyParams,
) -> Result<CertificateReport> {
    cost.validate()?;
    params.validate()?;
    let d = params.dims as usize;
    if cert.axes.len() != d {
        return Err(Error::RegimeMismatch(format!(
            "certificate has {} axes but dims = {d}",
            cert.axes.len()
        )));
    }
    if cert.regime.is_one_dim() && d != 1 {
        return Err(Error::RegimeMismatch("one-dimensional regime with dims > 1".into()));
    }
    if matches!(
        cert.regime,
        Regime::ZeroDelta1D | Regime::MultiZeroDeltaL1 | Regime::MultiZeroDeltaL2
    ) && params.epsilon != 0.0
    {
        return Err(Error::RegimeMismatch("zero-delta regime requires epsilon = 0".into()));
    }
    if !cert.mu.is_finite() {
        return Err(Error::RegimeMismatch("mu is not finite".into()));
    }
    let scale = cert.mu.abs().max(1.0);
    let mut tr = Tracker::new(scale);
    tr.see(-cert.mu, || "mu >= 0".into());
    for (m, axis) in cert.axes.iter().enumerate() {
        for (j, &w) in axis.weights.iter().enumerate() {
            if !(w >= 0.0) {
                let i = axis.offset + j as i64;
                tr.see(if w.is_nan() { f64::INFINITY } else { -w }, || {
                    format!("axis {m}: y[{i}] >= 0")
                });
            }
        }
    }
    let total_weight = csum(cert.axes.iter().map(|a| a.total()));
    let (binding, objective, mut notes) = if cert.regime.is_one_dim() {
        let axis = &cert.axes[0];
        if (axis.offset..0).any(|i| axis.get(i) != 0.0) {
            return Err(Error::RegimeMismatch("one-dimensional weights must start at index 0".into()));
        }
        let e = params.epsilon.exp();
        let penalty = 2.0 * params.delta + params.epsilon.exp_m1();
        let binding = verify_1d(cert.mu, axis, cost, params.sensitivity, e, &mut tr)?;
        (binding, cert.mu - penalty * total_weight, Vec::new())
    } else {
        let (tail, penalty) = if cert.regime.uses_beta() {
            let beta = cert
                .beta
                .ok_or_else(|| Error::RegimeMismatch("beta regime without beta".into()))?;
            if beta < params.beta() * (1.0 - 1e-15) {
                return Err(Error::RegimeMismatch(format!(
                    "certificate beta {beta} is below max(epsilon, delta) = {}",
                    params.beta()
                )));
            }
            (beta.exp_m1(), beta)
        } else {
            (0.0, params.delta)
        };
        let (binding, notes) = verify_multi(cert, cost, params.sensitivity, tail, &mut tr)?;
        (binding, cert.mu - penalty * total_weight, notes)
    };
    let worst_abs = tr.worst.max(0.0);
    let worst = worst_abs / tr.scale;
    notes.extend(cert.notes.iter().cloned());
    Ok(CertificateReport {
        regime: cert.regime,
        feasible: worst <= FEASIBILITY_TOL,
        worst_violation: worst,
        worst_violation_abs: worst_abs,
        worst_constraint: tr.label,
        objective,
        mu: cert.mu,
        binding_constraints: binding,
        notes,
    })
}

/// Dual of the half-line program: with S_k = sum_{l >= k} y_l,
///   k = 0:  mu/2 - (1+E)/2 y_0 - (E-1)/2 S_1 <= 0
///   k >= 1: mu - E sum_{l=max(0,k-Delta+1)}^{k} y_l - (E-1) S_{k+1} <= L(k)
/// Beyond the support every left side equals mu and L is nondecreasing, so the
/// scan stops once L(k) >= mu.
fn verify_1d(
    mu: f64,
    axis: &AxisWeights,
    cost: &CostFn,
    sensitivity: u32,
    e: f64,
    tr: &mut Tracker,
) -> Result<u64> {
    let n = (axis.range().1 + 1).max(1) as usize;
    let get = |i: usize| axis.get(i as i64);
    // suffix[k] = sum_{l >= k} y_l
    let mut suffix = vec![0.0; n + 1];
    let mut acc = CompensatedSum::new();
    for k in (0..n).rev() {
        acc.add(get(k));
        suffix[k] = acc.value();
    }
    let suf = |k: usize| if k < suffix.len() { suffix[k] } else { 0.0 };
    let tol = FEASIBILITY_TOL * tr.scale;
    let mut binding = 0u64;
    let em1 = e - 1.0;
    let c0 = mu / 2.0 - (1.0 + e) / 2.0 * get(0) - em1 / 2.0 * suf(1);
    tr.see(c0, || "k = 0".into());
    if c0.abs() <= tol {
        binding += 1;
    }
    let dl = sensitivity as usize;
    let mut k = 1usize;
    loop {
        let lo = (k + 1).saturating_sub(dl);
        let window = if dl <= 64 {
            csum((lo..=k.min(n)).map(get))
        } else {
            suf(lo) - suf(k + 1)
        };
        let lk = cost.axis(k as i64)?;
        let v = mu - e * window - em1 * suf(k + 1) - lk;
        tr.see(v, || format!("k = {k}"));
        if v.abs() <= tol {
            binding += 1;
        }
        if k > n + dl && lk >= mu {
            break;
        }
        k += 1;
    }
    Ok(binding)
}

/// Per-axis reduction of the multi-dimensional dual: with
///   g_m(x) = L(x) + sum_{i in [x-Delta+1, x]} y_i - tail * sum_{i <= x-Delta} y_i,
/// every joint constraint holds iff mu <= sum_m min_x g_m(x). Outside
/// [min(lo,0)-Delta-2, max(hi,0)+Delta+2] the window is empty and the tail sum is
/// constant, so g_m is nondecreasing in |x| there and the minimum lies inside.
fn verify_multi(
    cert: &DualCertificate,
    cost: &CostFn,
    sensitivity: u32,
    tail: f64,
    tr: &mut Tracker,
) -> Result<(u64, Vec<String>)> {
    let dl = sensitivity as i64;
    let mut mins = Vec::with_capacity(cert.axes.len());
    let mut gs: Vec<(i64, Vec<f64>)> = Vec::with_capacity(cert.axes.len());
    let mut notes = Vec::new();
    for (m, axis) in cert.axes.iter().enumerate() {
        let (lo, hi) = axis.range();
        let a = lo.min(0) - dl - 2;
        let b = hi.max(0) + dl + 2;
        // prefix[j] = sum_{i <= a - 1 - dl + j} y_i, covering x - dl for x in [a, b]
        let start = a - dl - 1;
        let mut prefix = Vec::with_capacity((b - start + 1) as usize);
        let mut acc = CompensatedSum::new();
        for i in start..=b {
            acc.add(axis.get(i));
            prefix.push(acc.value());
        }
        let pre = |i: i64| prefix[(i - start) as usize];
        let mut g = Vec::with_capacity((b - a + 1) as usize);
        for x in a..=b {
            let window = pre(x) - pre(x - dl);
            let below = pre(x - dl);
            g.push(cost.axis(x)? + window - tail * below);
        }
        let (arg, min) = g
            .iter()
            .enumerate()
            .fold((0usize, f64::INFINITY), |acc, (j, &v)| if v < acc.1 { (j, v) } else { acc });
        notes.push(format!(
            "axis {m}: searched x in [{a}, {b}], minimum {min} at x = {}",
            a + arg as i64
        ));
        mins.push((a + arg as i64, min));
        gs.push((a, g));
    }
    let total = csum(mins.iter().map(|&(_, v)| v));
    let v = cert.mu - total;
    tr.see(v, || {
        let pts: Vec<String> = mins.iter().map(|(x, _)| x.to_string()).collect();
        format!("k = ({})", pts.join(", "))
    });
    let tol = FEASIBILITY_TOL * tr.scale;
    let mut binding = 0u64;
    if v >= -tol {
        for ((_, g), &(_, min)) in gs.iter().zip(&mins) {
            binding += g.iter().filter(|&&x| x - min <= tol).count() as u64;
        }
    }
    Ok((binding, notes))
}

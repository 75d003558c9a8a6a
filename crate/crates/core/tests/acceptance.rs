//! Acceptance criteria 1-10, one PASS/FAIL line each.

use std::process::Command;

use dpnoise::bounds::{
    lb_eps_delta, lb_multi_eps_delta, lb_multi_zero_delta, lb_zero_delta, ub_laplace,
    ub_uniform_1d, ub_uniform_multi,
};
use dpnoise::certificates::{
    build_cert_eps_delta_1d, build_cert_multi_eps_delta_l1, build_cert_multi_eps_delta_l2,
    build_cert_multi_l1_zero_delta, build_cert_multi_l2_zero_delta, build_cert_zero_delta_1d,
    solve_gamma, verify_certificate, DualCertificate,
};
use dpnoise::hypotest::{point_feasible, tradeoff_region};
use dpnoise::lp::lp_lower_bound;
use dpnoise::mechanisms::{discrete_laplace, sample, uniform_mechanism_1d};
use dpnoise::privacy::tightest_delta_1d;
use dpnoise::{CostFn, NoiseDistribution, PrivacyParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn pp(eps: f64, delta: f64, sens: u32, dims: u32) -> PrivacyParams {
    PrivacyParams::new(eps, delta, sens, dims).unwrap()
}

fn c1_uniform_costs() -> Outcome {
    let mut worst = (0.0f64, 0.0f64);
    for sens in 1..=3u32 {
        for delta in [0.25, 0.05] {
            let d = uniform_mechanism_1d(&pp(0.0, delta, sens, 1)).map_err(|e| e.to_string())?;
            let s = sens as f64;
            let l1 = d.expected_cost(&CostFn::L1).unwrap();
            let l2 = d.expected_cost(&CostFn::L2).unwrap();
            let e1 = (l1 - s / (4.0 * delta)).abs();
            let e2 = (l2 - (s * s / (12.0 * delta * delta) + 1.0 / 6.0)).abs();
            ensure(e1 <= 1e-12, || format!("L1 Delta={sens} delta={delta}: {l1}"))?;
            ensure(e2 <= 1e-9, || format!("L2 Delta={sens} delta={delta}: {l2}"))?;
            worst = (worst.0.max(e1), worst.1.max(e2));
        }
    }
    Ok(format!("max |err| L1 {:.1e}, L2 {:.1e}", worst.0, worst.1))
}

/// sup over subsets S of the support of p(S) - e^eps p(S + v), by enumeration.
fn subset_oracle(offset: i64, probs: &[f64], eps: f64, sens: i64) -> f64 {
    let pmf = |k: i64| {
        let j = k - offset;
        if j >= 0 && (j as usize) < probs.len() {
            probs[j as usize]
        } else {
            0.0
        }
    };
    let e = eps.exp();
    let n = probs.len();
    let mut best = 0.0f64;
    for v in (-sens..=sens).filter(|&v| v != 0) {
        for mask in 0u32..(1 << n) {
            let mut s = 0.0;
            for j in 0..n {
                if mask >> j & 1 == 1 {
                    let k = offset + j as i64;
                    s += pmf(k) - e * pmf(k + v);
                }
            }
            best = best.max(s);
        }
    }
    best
}

fn c2_privacy_exactness() -> Outcome {
    for sens in 1..=3u32 {
        for delta in [0.25, 0.05] {
            let d = uniform_mechanism_1d(&pp(0.0, delta, sens, 1)).unwrap();
            let r = tightest_delta_1d(&d, 0.0, sens).unwrap();
            ensure((r.tightest_delta - delta).abs() <= 1e-12, || {
                format!("uniform Delta={sens} delta={delta}: {}", r.tightest_delta)
            })?;
        }
        for eps in [0.1, 1.0, 3.0] {
            // two-dimensional products only where the truncated grid stays small
            for dims in if eps >= 1.0 { vec![1u32, 2] } else { vec![1] } {
                let d = discrete_laplace(&pp(eps, 0.0, sens, dims)).unwrap();
                let r = dpnoise::privacy::check_dp(&d, &pp(eps, 0.0, sens, dims)).unwrap();
                ensure(r.tightest_delta.abs() <= 1e-12, || {
                    format!("Laplace eps={eps} Delta={sens} d={dims}: {}", r.tightest_delta)
                })?;
            }
        }
    }
    let mut rng = ChaCha20Rng::seed_from_u64(2024);
    let mut cases = 0;
    let mut worst = 0.0f64;
    for _ in 0..150 {
        let len = rng.random_range(1..=12usize);
        let offset = rng.random_range(-6..=2i64);
        let mut probs: Vec<f64> = (0..len)
            .map(|_| if rng.random_bool(0.2) { 0.0 } else { rng.random::<f64>() })
            .collect();
        let total: f64 = probs.iter().sum();
        if total == 0.0 {
            probs[0] = 1.0;
        } else {
            probs.iter_mut().for_each(|p| *p /= total);
        }
        let dist = NoiseDistribution::finite(offset, probs.clone());
        for sens in 1..=2u32 {
            for eps in [0.0, 0.1, 1.0] {
                let fast = tightest_delta_1d(&dist, eps, sens).map_err(|e| e.to_string())?;
                let slow = subset_oracle(offset, &probs, eps, sens as i64).min(1.0);
                let err = (fast.tightest_delta - slow).abs();
                worst = worst.max(err);
                ensure(err <= 1e-12, || {
                    format!("subset oracle mismatch: {} vs {slow} ({probs:?}, eps={eps}, Delta={sens})", fast.tightest_delta)
                })?;
                cases += 1;
            }
        }
    }
    Ok(format!("uniform/Laplace exact; {cases} random pmfs agree with subset enumeration (max err {worst:.1e})"))
}

fn c3_closed_form_vs_lp() -> Outcome {
    let a = lp_lower_bound(&CostFn::L1, &pp(0.0, 0.05, 3, 1), None).map_err(|e| e.to_string())?;
    ensure((a.value - 14.5).abs() <= 1e-9, || format!("L1 Delta=3: LP {}", a.value))?;
    let b = lp_lower_bound(&CostFn::L2, &pp(0.0, 0.05, 3, 1), None).map_err(|e| e.to_string())?;
    ensure((b.value - 284.5).abs() <= 1e-6, || format!("L2 Delta=3: LP {}", b.value))?;
    let c = lp_lower_bound(&CostFn::L1, &pp(0.0, 0.25, 1, 1), None).map_err(|e| e.to_string())?;
    let f = lb_zero_delta(&CostFn::L1, 1, 0.25).unwrap();
    ensure((c.value - 1.0).abs() <= 1e-9, || format!("L1 Delta=1 delta=0.25: LP {}", c.value))?;
    ensure(f.value == 1.5 && !f.preconditions_ok, || {
        format!("formula {} flagged={}", f.value, !f.preconditions_ok)
    })?;
    Ok(format!(
        "LP {} / {} / {}; flagged formula value {}",
        a.value, b.value, c.value, f.value
    ))
}

fn c4_weak_duality() -> Outcome {
    struct Case {
        name: &'static str,
        cert: DualCertificate,
        cost: CostFn,
        params: PrivacyParams,
    }
    let mut cases = Vec::new();
    let err = |e: dpnoise::Error| e.to_string();
    for (cost, sens) in [(CostFn::L1, 3u32), (CostFn::L2, 3), (CostFn::Power { m: 3 }, 3), (CostFn::Power { m: 4 }, 3)] {
        cases.push(Case {
            name: "zero-delta 1-D",
            cert: build_cert_zero_delta_1d(&cost, sens, 0.05).map_err(err)?,
            cost,
            params: pp(0.0, 0.05, sens, 1),
        });
    }
    for (cost, eps, delta) in [
        (CostFn::L1, 0.01, 0.01),
        (CostFn::L2, 0.01, 0.01),
        (CostFn::L1, 0.1, 0.05),
        (CostFn::L2, 0.05, 0.002),
    ] {
        for n in dpnoise::bounds::eps_delta_candidates(1, eps, delta).map_err(err)? {
            cases.push(Case {
                name: "(eps, delta) 1-D",
                cert: build_cert_eps_delta_1d(&cost, 1, eps, delta, n).map_err(err)?,
                cost: cost.clone(),
                params: pp(eps, delta, 1, 1),
            });
        }
    }
    for (d, s) in [(1u32, 1u32), (2, 2), (3, 1)] {
        cases.push(Case {
            name: "multi l1 zero-delta",
            cert: build_cert_multi_l1_zero_delta(d, s, 0.05).map_err(err)?,
            cost: CostFn::L1,
            params: pp(0.0, 0.05, s, d),
        });
        cases.push(Case {
            name: "multi l2 zero-delta",
            cert: build_cert_multi_l2_zero_delta(d, s, 0.05).map_err(err)?,
            cost: CostFn::L2,
            params: pp(0.0, 0.05, s, d),
        });
    }
    for (d, s, beta) in [(1u32, 1u32, 0.001), (2, 1, 0.001), (2, 2, 0.01)] {
        cases.push(Case {
            name: "multi l1 beta",
            cert: build_cert_multi_eps_delta_l1(d, s, beta).map_err(err)?,
            cost: CostFn::L1,
            params: pp(beta, beta, s, d),
        });
        cases.push(Case {
            name: "multi l2 beta",
            cert: build_cert_multi_eps_delta_l2(d, s, beta).map_err(err)?,
            cost: CostFn::L2,
            params: pp(beta, beta, s, d),
        });
    }
    let mut min_slack = f64::INFINITY;
    for c in &cases {
        let r = verify_certificate(&c.cert, &c.cost, &c.params).map_err(err)?;
        ensure(r.feasible, || {
            format!("{} {:?}: infeasible, {:e} at {}", c.name, c.params, r.worst_violation, r.worst_constraint)
        })?;
        let reference = if c.params.dims == 1 && !c.cert.regime.uses_beta() {
            lp_lower_bound(&c.cost, &c.params, None).map_err(err)?.value
        } else {
            let delta = c.cert.beta.unwrap_or(c.params.delta);
            c.params.dims as f64 * ub_uniform_1d(&c.cost, c.params.sensitivity, delta).map_err(err)?.value
        };
        let slack = (reference - r.objective) / reference.abs().max(1.0);
        min_slack = min_slack.min(slack);
        ensure(slack >= -1e-9, || {
            format!("{} {:?}: objective {} exceeds {}", c.name, c.params, r.objective, reference)
        })?;
    }
    Ok(format!("{} certificates feasible, min relative slack {min_slack:.2e}", cases.len()))
}

fn c5_ratio_constants() -> Outcome {
    let b = 1e-3;
    let l1 = lb_eps_delta(&CostFn::L1, 1, b, b).map_err(|e| e.to_string())?;
    let l2 = lb_eps_delta(&CostFn::L2, 1, b, b).map_err(|e| e.to_string())?;
    ensure(l1.preconditions_ok && l2.preconditions_ok, || "lower bound not certified".into())?;
    let u1 = ub_uniform_1d(&CostFn::L1, 1, b).unwrap().value;
    let u2 = ub_uniform_1d(&CostFn::L2, 1, b).unwrap().value;
    let p1 = ub_laplace(&CostFn::L1, 1, b).unwrap().value;
    let p2 = ub_laplace(&CostFn::L2, 1, b).unwrap().value;
    let r = [u1 / l1.value, u2 / l2.value, p1 / l1.value, p2 / l2.value];
    let targets = [(1.322, 0.03), (5.0 / 3.0, 0.04), (5.29, 0.05), (40.0, 0.10)];
    for (i, (&ri, &(t, tol))) in r.iter().zip(&targets).enumerate() {
        ensure((ri / t - 1.0).abs() <= tol, || format!("ratio {i}: {ri} vs {t}"))?;
    }
    // the LP optimum must sit between the certificate and the mechanisms
    for (cost, lb, ub) in [(CostFn::L1, l1.value, u1.min(p1)), (CostFn::L2, l2.value, u2.min(p2))] {
        let lp = lp_lower_bound(&cost, &pp(b, b, 1, 1), None).map_err(|e| e.to_string())?;
        ensure(lb <= lp.value * (1.0 + 1e-9) && lp.value <= ub, || {
            format!("{}: lb {lb}, LP {}, ub {ub}", cost.label(), lp.value)
        })?;
    }
    Ok(format!(
        "uniform/LB {:.4} (L1), {:.4} (L2); Laplace/LB {:.3} (L1), {:.2} (L2)",
        r[0], r[1], r[2], r[3]
    ))
}

fn c6_multi_optimality() -> Outcome {
    let delta = 0.05;
    for d in 1..=3u32 {
        let df = d as f64;
        let lb1 = lb_multi_zero_delta(&CostFn::L1, d, 1, delta).unwrap().value;
        let ub1 = ub_uniform_multi(&CostFn::L1, d, 1, delta).unwrap().value;
        let lb2 = lb_multi_zero_delta(&CostFn::L2, d, 1, delta).unwrap().value;
        let ub2 = ub_uniform_multi(&CostFn::L2, d, 1, delta).unwrap().value;
        ensure(lb1 == ub1, || format!("L1 d={d}: {lb1} != {ub1}"))?;
        ensure(lb2 == ub2, || format!("L2 d={d}: {lb2} != {ub2}"))?;
        ensure((ub1 - df / (4.0 * delta)).abs() <= 1e-12, || format!("L1 d={d}: {ub1}"))?;
        ensure((ub2 - (df / (12.0 * delta * delta) + df / 6.0)).abs() <= 1e-9, || format!("L2 d={d}: {ub2}"))?;
    }
    Ok("lower = upper exactly for L1 and L2, d = 1, 2, 3".into())
}

fn c7_multi_constants() -> Outcome {
    let b = 1e-3;
    let mut parts = Vec::new();
    for d in [1u32, 2] {
        let df = d as f64;
        let l1 = lb_multi_eps_delta(&CostFn::L1, d, 1, b, b).map_err(|e| e.to_string())?.value;
        let t1 = (9.0f64 / 8.0).ln() * df / b;
        ensure((l1 / t1 - 1.0).abs() <= 0.05, || format!("L1 d={d}: {l1} vs {t1}"))?;
        let l2 = lb_multi_eps_delta(&CostFn::L2, d, 1, b, b).map_err(|e| e.to_string())?.value;
        let t2 = 0.0177 * df / (b * b);
        ensure((l2 / t2 - 1.0).abs() <= 0.10, || format!("L2 d={d}: {l2} vs {t2}"))?;
        parts.push(format!("d={d}: {:.2} / {:.0}", l1, l2));
    }
    let g = solve_gamma(1.5);
    ensure((g - 1.7468).abs() <= 1e-3, || format!("gamma {g}"))?;
    Ok(format!("{}; gamma = {g:.7}", parts.join(", ")))
}

fn c8_sampling() -> Outcome {
    let n = 1_000_000usize;
    let dist = uniform_mechanism_1d(&pp(0.0, 0.05, 1, 1)).unwrap();
    let batch = sample(&dist, 7, n).map_err(|e| e.to_string())?;
    let mean = batch.values.iter().map(|v| v.abs() as f64).sum::<f64>() / n as f64;
    let (offset, probs) = match &dist {
        NoiseDistribution::Finite1D { offset, probs } => (*offset, probs.clone()),
        _ => unreachable!(),
    };
    let second: f64 = probs
        .iter()
        .enumerate()
        .map(|(j, p)| p * ((offset + j as i64) as f64).powi(2))
        .sum();
    let sigma = (second - 25.0).sqrt();
    let z1 = (mean - 5.0).abs() / (sigma / (n as f64).sqrt());
    ensure(z1 <= 3.0, || format!("mean |N| = {mean}, z = {z1}"))?;

    let lambda = (-1.0f64).exp();
    let geo = sample(&NoiseDistribution::geometric(lambda), 11, n).map_err(|e| e.to_string())?;
    let p0 = (1.0 - lambda) / (1.0 + lambda);
    let freq = geo.values.iter().filter(|&&v| v == 0).count() as f64 / n as f64;
    let z2 = (freq - p0).abs() / (p0 * (1.0 - p0) / n as f64).sqrt();
    ensure(z2 <= 3.0, || format!("P(N=0) = {freq}, z = {z2}"))?;
    Ok(format!("mean |N| = {mean:.5} (z {z1:.2}); P(N=0) = {freq:.6} (z {z2:.2})"))
}

fn c9_tradeoff() -> Outcome {
    let r = tradeoff_region(2f64.ln(), 0.1).unwrap();
    ensure(r.vertices == vec![(0.0, 0.9), (0.3, 0.3), (0.9, 0.0)], || format!("{:?}", r.vertices))?;
    let eps = [0.0, 0.1, 0.5, 1.0];
    let deltas = [0.0, 0.01, 0.1, 0.3];
    let mut checks = 0;
    for &e1 in &eps {
        for &d1 in &deltas {
            let big = tradeoff_region(e1, d1).unwrap();
            for &e2 in eps.iter().filter(|&&e| e <= e1) {
                for &d2 in deltas.iter().filter(|&&d| d <= d1) {
                    let small = tradeoff_region(e2, d2).unwrap();
                    for &(x, y) in &small.vertices {
                        ensure(point_feasible(&big, x, y), || {
                            format!("({e2},{d2}) vertex ({x},{y}) outside ({e1},{d1})")
                        })?;
                        checks += 1;
                    }
                }
            }
        }
    }
    Ok(format!("vertices exact; {checks} containment checks on a 4x4 grid"))
}

fn c10_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_dpnoise");
    let dir = std::env::temp_dir().join(format!("dpnoise-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let pmf = dir.join("pmf.json");
    std::fs::write(&pmf, r#"{"type":"finite","offset":-2,"probs":[0.1,0.2,0.4,0.2,0.1]}"#).unwrap();
    let pmf = pmf.to_string_lossy().to_string();
    let runs: Vec<Vec<&str>> = vec![
        vec!["bounds", "--cost", "l1", "--sensitivity", "3", "--delta", "0.05", "--epsilon", "0", "--dims", "1"],
        vec!["bounds", "--cost", "l2", "--epsilon", "0.01", "--delta", "0.01", "--dims", "2"],
        vec!["sweep", "--cost", "l1", "--epsilon", "0.001:0.1:log:9", "--delta", "0.001:0.1:log:9", "--zip"],
        vec!["sweep", "--cost", "l2", "--epsilon", "0,0.01,0.1", "--delta", "0.25,0.05,0.01,0.005", "--sensitivity", "3"],
        vec!["lp", "--cost", "l1", "--epsilon", "0.01", "--delta", "0.01", "--dump-pmf"],
        vec!["certificate", "--cost", "l2", "--epsilon", "0.01", "--delta", "0.01", "--dims", "3"],
        vec!["sample", "--mechanism", "laplace", "--epsilon", "0.5", "--dims", "2", "--seed", "42", "--n", "5000"],
        vec!["check", "--pmf", &pmf, "--epsilon", "0.1", "--sensitivity", "2"],
        vec!["mechanism-cost", "--cost", "power:3", "--mechanism", "laplace", "--epsilon", "0.3"],
        vec!["tradeoff-region", "--epsilon", "0", "--delta", "0.2"],
    ];
    let mut bytes = 0;
    for args in &runs {
        let mut outs = Vec::new();
        for threads in ["1", "4", "4"] {
            let o = Command::new(bin)
                .args(args)
                .env("RAYON_NUM_THREADS", threads)
                .env("DPNOISE_LOG", "quiet")
                .output()
                .map_err(|e| e.to_string())?;
            ensure(o.status.success(), || {
                format!("{args:?} failed: {}", String::from_utf8_lossy(&o.stderr))
            })?;
            outs.push(o.stdout);
        }
        ensure(outs.windows(2).all(|w| w[0] == w[1]), || format!("{args:?}: outputs differ"))?;
        bytes += outs[0].len();
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok(format!("{} invocations x 3 runs byte-identical ({bytes} bytes each set)", runs.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("uniform mechanism costs", c1_uniform_costs),
        ("privacy exactness", c2_privacy_exactness),
        ("closed form vs LP", c3_closed_form_vs_lp),
        ("weak duality suite", c4_weak_duality),
        ("ratio constants at beta = 1e-3", c5_ratio_constants),
        ("multi-dimensional optimality", c6_multi_optimality),
        ("multi-dimensional (eps, delta) constants", c7_multi_constants),
        ("sampling statistics", c8_sampling),
        ("tradeoff region", c9_tradeoff),
        ("determinism", c10_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = std::time::Instant::now();
        let r = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.2}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{secs:.2}s]", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

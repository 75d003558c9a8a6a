//! Command-line front end. [`dispatch`] is the whole program minus process setup.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::bounds::{self, eps_delta_candidates};
use crate::certificates::{self, verify_certificate, CertificateReport, DualCertificate, Regime};
use crate::cost::CostFn;
use crate::distribution::NoiseDistribution;
use crate::error::{Error, Result};
use crate::hypotest::{point_feasible, tradeoff_region};
use crate::lp::{self, Backend};
use crate::mechanisms;
use crate::numeric::fmt_sig;
use crate::params::PrivacyParams;
use crate::privacy::check_dp;
use crate::sweep::{parse_grid, run_sweep, SweepSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "dpnoise", version, about = "Optimal discrete noise for (epsilon, delta)-differential privacy")]
pub struct Cli {
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format (each subcommand has its own default).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MechanismKind {
    Uniform,
    Laplace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegimeArg {
    Auto,
    ZeroDelta1d,
    EpsDelta1d,
    MultiZeroDelta,
    MultiEpsDelta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Auto,
    Dense,
    Sparse,
}

#[derive(Debug, Args)]
pub struct ParamArgs {
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    #[arg(long, default_value_t = 1)]
    pub sensitivity: u32,
    #[arg(long, default_value_t = 1)]
    pub dims: u32,
}

impl ParamArgs {
    fn params(&self) -> Result<PrivacyParams> {
        PrivacyParams::new(self.epsilon, self.delta, self.sensitivity, self.dims)
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Best lower bound, mechanism upper bounds and their ratio.
    Bounds {
        /// l1 | l2 | power:M | table:FILE.json
        #[arg(long, value_parser = parse_cost)]
        cost: CostFn,
        #[command(flatten)]
        params: ParamArgs,
        /// Do not fall back to the relaxed LP when no closed form certifies.
        #[arg(long)]
        no_lp: bool,
    },
    /// Expected cost of a mechanism or of a pmf read from a file.
    MechanismCost {
        /// l1 | l2 | power:M | table:FILE.json
        #[arg(long, value_parser = parse_cost)]
        cost: CostFn,
        #[arg(long, value_enum, conflicts_with = "pmf")]
        mechanism: Option<MechanismKind>,
        /// JSON pmf file
        #[arg(long)]
        pmf: Option<PathBuf>,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Tightest delta of a pmf at the given epsilon and sensitivity.
    Check {
        /// JSON pmf file
        #[arg(long, conflicts_with = "mechanism")]
        pmf: Option<PathBuf>,
        #[arg(long, value_enum)]
        mechanism: Option<MechanismKind>,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Solve the truncated relaxed linear program (one dimension).
    Lp {
        /// l1 | l2 | power:M | table:FILE.json
        #[arg(long, value_parser = parse_cost)]
        cost: CostFn,
        #[command(flatten)]
        params: ParamArgs,
        /// Truncation N (defaults to a safe multiple of Delta/delta or Delta/epsilon).
        #[arg(long)]
        truncation: Option<u64>,
        #[arg(long, value_enum, default_value = "auto")]
        backend: BackendArg,
        /// Include the optimal symmetric pmf in the output.
        #[arg(long)]
        dump_pmf: bool,
    },
    /// Build a dual certificate (or read one) and verify it.
    Certificate {
        /// l1 | l2 | power:M | table:FILE.json
        #[arg(long, value_parser = parse_cost)]
        cost: CostFn,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, value_enum, default_value = "auto")]
        regime: RegimeArg,
        /// Series length for the one-dimensional (epsilon, delta) certificate.
        #[arg(long)]
        n: Option<u64>,
        /// Verify this certificate JSON instead of building one.
        #[arg(long)]
        cert: Option<PathBuf>,
        /// Include the dual weights in the output.
        #[arg(long)]
        with_weights: bool,
    },
    /// Draw noise from a mechanism or pmf file.
    Sample {
        #[arg(long, value_enum, conflicts_with = "pmf")]
        mechanism: Option<MechanismKind>,
        /// JSON pmf file
        #[arg(long)]
        pmf: Option<PathBuf>,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        n: usize,
    },
    /// Bounds over a grid of (epsilon, delta).
    Sweep {
        /// l1 | l2 | power:M | table:FILE.json
        #[arg(long, value_parser = parse_cost)]
        cost: CostFn,
        /// List "a,b,c" or range "start:stop:log|lin:count".
        #[arg(long, default_value = "0")]
        epsilon: String,
        #[arg(long, default_value = "0")]
        delta: String,
        #[arg(long, default_value_t = 1)]
        sensitivity: u32,
        #[arg(long, default_value_t = 1)]
        dims: u32,
        /// Pair the two grids elementwise instead of taking their product.
        #[arg(long)]
        zip: bool,
    },
    /// Vertices of the (false alarm, missed detection) region.
    TradeoffRegion {
        #[arg(long, default_value_t = 0.0)]
        epsilon: f64,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        /// Also test the point P_FA,P_MD.
        #[arg(long, value_parser = parse_pair)]
        point: Option<(f64, f64)>,
    },
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected P_FA,P_MD")?;
    let a = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let b = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((a, b))
}

/// Parses l1 | l2 | power:M | table:FILE. The file holds either a JSON array
/// of values indexed by |k| or a full table cost object.
pub fn parse_cost(s: &str) -> std::result::Result<CostFn, String> {
    let cost = match s {
        "l1" => CostFn::L1,
        "l2" => CostFn::L2,
        _ => {
            if let Some(m) = s.strip_prefix("power:") {
                let m: u32 = m.parse().map_err(|_| format!("bad exponent in '{s}'"))?;
                CostFn::Power { m }
            } else if let Some(path) = s.strip_prefix("table:") {
                let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
                let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| format!("{path}: {e}"))?;
                if v.is_array() {
                    let values: Vec<f64> = serde_json::from_value(v).map_err(|e| format!("{path}: {e}"))?;
                    CostFn::table(values)
                } else {
                    serde_json::from_value(v).map_err(|e| format!("{path}: {e}"))?
                }
            } else {
                return Err(format!("unknown cost '{s}' (expected l1, l2, power:M or table:FILE)"));
            }
        }
    };
    cost.validate().map_err(|e| e.to_string())?;
    Ok(cost)
}

fn read_pmf(path: &PathBuf) -> Result<NoiseDistribution> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidParams(format!("{}: {e}", path.display())))?;
    let dist: NoiseDistribution = serde_json::from_str(&text)
        .map_err(|e| Error::InvalidParams(format!("{}: {e}", path.display())))?;
    dist.validate()?;
    Ok(dist)
}

fn mechanism(kind: MechanismKind, params: &PrivacyParams) -> Result<NoiseDistribution> {
    params.validate_nontrivial()?;
    match kind {
        MechanismKind::Uniform => mechanisms::uniform_mechanism_multi(params),
        MechanismKind::Laplace => mechanisms::discrete_laplace(params),
    }
}

fn pick_dist(
    pmf: &Option<PathBuf>,
    kind: Option<MechanismKind>,
    params: &PrivacyParams,
) -> Result<(String, NoiseDistribution)> {
    match (pmf, kind) {
        (Some(p), _) => Ok((p.display().to_string(), read_pmf(p)?)),
        (None, Some(k)) => Ok((
            match k {
                MechanismKind::Uniform => "uniform".into(),
                MechanismKind::Laplace => "laplace".into(),
            },
            mechanism(k, params)?,
        )),
        (None, None) => Err(Error::InvalidParams("one of --pmf or --mechanism is required".into())),
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let v = serde_json::to_value(v).expect("serializable");
    let mut s = serde_json::to_string_pretty(&v).expect("serializable");
    s.push('\n');
    s
}

fn csv_opt(v: Option<f64>) -> String {
    v.map(fmt_sig).unwrap_or_default()
}

fn auto_regime(arg: RegimeArg, params: &PrivacyParams) -> RegimeArg {
    match arg {
        RegimeArg::Auto => match (params.dims == 1, params.epsilon == 0.0) {
            (true, true) => RegimeArg::ZeroDelta1d,
            (true, false) => RegimeArg::EpsDelta1d,
            (false, true) => RegimeArg::MultiZeroDelta,
            (false, false) => RegimeArg::MultiEpsDelta,
        },
        a => a,
    }
}

fn multi_l1(cost: &CostFn) -> Result<bool> {
    if cost.is_l1() {
        Ok(true)
    } else if cost.is_l2() {
        Ok(false)
    } else {
        Err(Error::Unsupported("multi-dimensional certificates need the l1 or l2 cost".into()))
    }
}

fn build_certificate(
    cost: &CostFn,
    params: &PrivacyParams,
    regime: RegimeArg,
    n: Option<u64>,
) -> Result<(DualCertificate, CertificateReport)> {
    params.validate_nontrivial()?;
    let PrivacyParams {
        epsilon,
        delta,
        sensitivity,
        dims,
    } = *params;
    let cert = match auto_regime(regime, params) {
        RegimeArg::ZeroDelta1d => certificates::build_cert_zero_delta_1d(cost, sensitivity, delta)?,
        RegimeArg::EpsDelta1d => {
            let ns = match n {
                Some(n) => vec![n],
                None => eps_delta_candidates(sensitivity, epsilon, delta)?,
            };
            let mut best: Option<(DualCertificate, CertificateReport)> = None;
            for n in ns {
                let c = certificates::build_cert_eps_delta_1d(cost, sensitivity, epsilon, delta, n)?;
                let r = verify_certificate(&c, cost, params)?;
                let better = match &best {
                    None => true,
                    Some((_, b)) => (r.feasible, r.objective) > (b.feasible, b.objective),
                };
                if better {
                    best = Some((c, r));
                }
            }
            return best.ok_or_else(|| Error::NoFeasibleCertificate("no candidate n".into()));
        }
        RegimeArg::MultiZeroDelta => {
            if multi_l1(cost)? {
                certificates::build_cert_multi_l1_zero_delta(dims, sensitivity, delta)?
            } else {
                certificates::build_cert_multi_l2_zero_delta(dims, sensitivity, delta)?
            }
        }
        RegimeArg::MultiEpsDelta => {
            let beta = params.beta();
            if multi_l1(cost)? {
                certificates::build_cert_multi_eps_delta_l1(dims, sensitivity, beta)?
            } else {
                certificates::build_cert_multi_eps_delta_l2(dims, sensitivity, beta)?
            }
        }
        RegimeArg::Auto => unreachable!(),
    };
    let report = verify_certificate(&cert, cost, params)?;
    Ok((cert, report))
}

fn run(cli: Cli) -> Result<String> {
    let fmt = cli.format;
    match cli.command {
        Command::Bounds { cost, params, no_lp } => {
            let p = params.params()?;
            let g = bounds::gap_report_with(&cost, &p, !no_lp)?;
            match fmt.unwrap_or(Format::Json) {
                Format::Json => Ok(to_json(&g)),
                Format::Csv => Ok(format!(
                    "{}\n{},{},{},{},{},{},{},{},{},{},{},{}\n",
                    crate::sweep::SWEEP_HEADER,
                    fmt_sig(g.epsilon),
                    fmt_sig(g.delta),
                    g.sensitivity,
                    g.dims,
                    g.cost,
                    csv_opt(g.v_lb),
                    g.lb_method.clone().unwrap_or_default(),
                    csv_opt(g.v_ub_uniform),
                    csv_opt(g.v_ub_laplace),
                    csv_opt(g.v_ub_min),
                    csv_opt(g.ratio),
                    g.flags.join(";")
                )),
            }
        }
        Command::MechanismCost {
            cost,
            mechanism,
            pmf,
            params,
        } => {
            let p = params.params()?;
            let (name, dist) = pick_dist(&pmf, mechanism, &p)?;
            let est = dist.expected_cost_estimate(&cost)?;
            match fmt.unwrap_or(Format::Json) {
                Format::Json => Ok(to_json(&json!({
                    "mechanism": name,
                    "cost": cost.label(),
                    "expected_cost": est.value,
                    "error_bound": est.error_bound,
                    "distribution": dist,
                }))),
                Format::Csv => Ok(format!(
                    "mechanism,cost,expected_cost,error_bound\n{},{},{},{}\n",
                    name,
                    cost.label(),
                    fmt_sig(est.value),
                    fmt_sig(est.error_bound)
                )),
            }
        }
        Command::Check {
            pmf,
            mechanism,
            params,
        } => {
            let p = params.params()?;
            let (_, dist) = pick_dist(&pmf, mechanism, &p)?;
            let p = PrivacyParams {
                dims: dist.dims() as u32,
                ..p
            };
            let r = check_dp(&dist, &p)?;
            match fmt.unwrap_or(Format::Json) {
                Format::Json => Ok(to_json(&r)),
                Format::Csv => Ok(format!(
                    "tightest_delta,worst_shift,satisfies\n{},{},{}\n",
                    fmt_sig(r.tightest_delta),
                    r.worst_shift.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "),
                    r.satisfies.map(|b| b.to_string()).unwrap_or_default()
                )),
            }
        }
        Command::Lp {
            cost,
            params,
            truncation,
            backend,
            dump_pmf,
        } => {
            let p = params.params()?;
            p.validate_nontrivial()?;
            if p.dims != 1 {
                return Err(Error::Unsupported("the relaxed LP is only solved in one dimension".into()));
            }
            let n = truncation.unwrap_or_else(|| lp::default_truncation(p.sensitivity, p.epsilon, p.delta));
            let problem = lp::build_relaxed_lp(&cost, p.sensitivity, p.epsilon, p.delta, n)?;
            let backend = match backend {
                BackendArg::Auto => Backend::Auto,
                BackendArg::Dense => Backend::Dense,
                BackendArg::Sparse => Backend::Sparse,
            };
            let sol = lp::solve_lp_with(&problem, backend)?;
            match fmt.unwrap_or(Format::Json) {
                Format::Json => {
                    let mut v = serde_json::to_value(&sol).expect("serializable");
                    if !dump_pmf {
                        v.as_object_mut().expect("object").remove("pmf");
                    }
                    Ok(to_json(&v))
                }
                Format::Csv => {
                    let mut s = format!(
                        "optimal_value,status,boundary_mass,truncation\n{},{},{},{}\n",
                        fmt_sig(sol.optimal_value),
                        serde_json::to_value(sol.status).expect("serializable").as_str().unwrap_or(""),
                        fmt_sig(sol.boundary_mass),
                        sol.truncation
                    );
                    if dump_pmf {
                        s.push_str("k,p\n");
                        if let NoiseDistribution::Finite1D { offset, probs } = &sol.pmf {
                            for (j, q) in probs.iter().enumerate() {
                                s.push_str(&format!("{},{}\n", offset + j as i64, fmt_sig(*q)));
                            }
                        }
                    }
                    Ok(s)
                }
            }
        }
        Command::Certificate {
            cost,
            params,
            regime,
            n,
            cert,
            with_weights,
        } => {
            let p = params.params()?;
            let (c, r) = match cert {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)
                        .map_err(|e| Error::InvalidParams(format!("{}: {e}", path.display())))?;
                    let bad = |e: serde_json::Error| Error::InvalidParams(format!("{}: {e}", path.display()));
                    let mut v: serde_json::Value = serde_json::from_str(&text).map_err(bad)?;
                    if let Some(inner) = v.get_mut("certificate") {
                        v = inner.take();
                    }
                    let c: DualCertificate = serde_json::from_value(v).map_err(bad)?;
                    let r = verify_certificate(&c, &cost, &p)?;
                    (c, r)
                }
                None => build_certificate(&cost, &p, regime, n)?,
            };
            match fmt.unwrap_or(Format::Json) {
                Format::Json => {
                    if with_weights {
                        Ok(to_json(&json!({ "certificate": c, "report": r })))
                    } else {
                        Ok(to_json(&r))
                    }
                }
                Format::Csv => Ok(format!(
                    "regime,feasible,worst_violation,objective,mu,binding_constraints\n{},{},{},{},{},{}\n",
                    regime_tag(r.regime),
                    r.feasible,
                    fmt_sig(r.worst_violation),
                    fmt_sig(r.objective),
                    fmt_sig(r.mu),
                    r.binding_constraints
                )),
            }
        }
        Command::Sample {
            mechanism,
            pmf,
            params,
            seed,
            n,
        } => {
            let p = params.params()?;
            let (_, dist) = pick_dist(&pmf, mechanism, &p)?;
            let batch = mechanisms::sample(&dist, seed, n)?;
            match fmt.unwrap_or(Format::Csv) {
                Format::Csv => Ok(batch.to_csv()),
                Format::Json => {
                    let draws: Vec<&[i64]> = batch.draws().collect();
                    Ok(to_json(&json!({ "seed": seed, "dims": batch.dims, "draws": draws })))
                }
            }
        }
        Command::Sweep {
            cost,
            epsilon,
            delta,
            sensitivity,
            dims,
            zip,
        } => {
            let spec = SweepSpec {
                epsilon: parse_grid(&epsilon)?,
                delta: parse_grid(&delta)?,
                sensitivity,
                dims,
                cost,
                zip,
            };
            match fmt.unwrap_or(Format::Csv) {
                Format::Csv => run_sweep(&spec),
                Format::Json => {
                    let rows = crate::sweep::evaluate_sweep(&spec)?;
                    let v: Vec<serde_json::Value> = rows
                        .into_iter()
                        .map(|r| match r.result {
                            Ok(g) => serde_json::to_value(g).expect("serializable"),
                            Err(e) => json!({
                                "epsilon": r.epsilon,
                                "delta": r.delta,
                                "error": e.to_string(),
                            }),
                        })
                        .collect();
                    Ok(to_json(&v))
                }
            }
        }
        Command::TradeoffRegion { epsilon, delta, point } => {
            let region = tradeoff_region(epsilon, delta)?;
            let feasible = point.map(|(a, b)| point_feasible(&region, a, b));
            match fmt.unwrap_or(Format::Csv) {
                Format::Csv => {
                    let mut s = region.to_csv();
                    if let (Some((a, b)), Some(f)) = (point, feasible) {
                        s.push_str(&format!("# point {},{} feasible={f}\n", fmt_sig(a), fmt_sig(b)));
                    }
                    Ok(s)
                }
                Format::Json => {
                    let mut v = serde_json::to_value(&region).expect("serializable");
                    if let Some(f) = feasible {
                        v["point_feasible"] = json!(f);
                    }
                    Ok(to_json(&v))
                }
            }
        }
    }
}

fn regime_tag(r: Regime) -> String {
    serde_json::to_value(r)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

/// Parses `argv` (including the program name), runs the command and returns the exit code.
pub fn dispatch<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = out.write_all(text.as_bytes());
                    EXIT_OK
                }
                _ => {
                    let _ = err.write_all(text.as_bytes());
                    EXIT_USAGE
                }
            };
        }
    };
    let target = cli.out.clone();
    match run(cli) {
        Ok(text) => {
            let written = match &target {
                Some(path) => std::fs::write(path, text.as_bytes()),
                None => out.write_all(text.as_bytes()),
            };
            match written {
                Ok(()) => EXIT_OK,
                Err(e) => {
                    let _ = writeln!(err, "error: {e}");
                    EXIT_DOMAIN
                }
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_DOMAIN
        }
    }
}

/// Reads DPNOISE_LOG (quiet | info | debug; anything else means warnings only).
pub fn init_logging() {
    let level = match std::env::var("DPNOISE_LOG").as_deref() {
        Ok("quiet") => log::LevelFilter::Off,
        Ok("info") => log::LevelFilter::Info,
        Ok("debug") => log::LevelFilter::Debug,
        _ => log::LevelFilter::Warn,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .try_init();
}

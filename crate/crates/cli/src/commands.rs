use std::path::{Path, PathBuf};

use loclab_core::capacity::{
    bounds_report, c_sub_symmetric, exact_capacity, find_t0, find_t1, g_table, rho_min as lp_rho_min,
};
use loclab_core::config::{parse, parse_int_range, parse_real_range};
use loclab_core::counting::verify_counting;
use loclab_core::linear_code::{best_failure_bound, simulate_lmc as run_lmc, simulate_rateless as run_rateless, LinearMatrixCode};
use loclab_core::rank_metric::{simulate_rm as run_rm, LiftedRankMetricCode};
use loclab_core::rng::trial_rng;
use loclab_core::{run_suite, ChannelModel, CodeConfig, ConfigFile, Error, OutputFormat, Suite};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::output::{Format, Report};
use crate::Failure;

const DEFAULT_TRIALS: usize = 1000;
/// Grid size for the best-ε search in rateless success bounds.
const EPSILON_GRID: usize = 199;

pub struct Outcome {
    pub report: Report,
    pub default_format: Format,
    pub config_format: Option<Format>,
    pub config_path: Option<PathBuf>,
    pub pass: bool,
}

impl Outcome {
    fn new(report: Report, default_format: Format) -> Self {
        Outcome {
            report,
            default_format,
            config_format: None,
            config_path: None,
            pass: true,
        }
    }

    fn with_config(mut self, cfg: &Loaded) -> Self {
        if let Some(o) = cfg.file.experiment().and_then(|e| e.output.as_ref()) {
            self.config_path = o.path.as_ref().map(PathBuf::from);
            self.config_format = o.format.map(|f| match f {
                OutputFormat::Csv => Format::Csv,
                OutputFormat::Json => Format::Json,
            });
        }
        self
    }
}

struct Loaded {
    file: ConfigFile,
    echo: Value,
    model: ChannelModel,
}

impl Loaded {
    fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.file.experiment().and_then(|e| e.seed)).unwrap_or(0)
    }

    fn trials(&self, flag: Option<usize>) -> usize {
        flag.or(self.file.experiment().and_then(|e| e.trials)).unwrap_or(DEFAULT_TRIALS)
    }

    fn code(&self) -> Option<&CodeConfig> {
        self.file.experiment().and_then(|e| e.code.as_ref())
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Loaded, Failure> {
    let text = read(path)?;
    let file = ConfigFile::parse(&text)?;
    let echo: Value = serde_json::from_str(&text).map_err(|e| Failure::Config(e.to_string()))?;
    let model = file.channel().build()?;
    Ok(Loaded { file, echo, model })
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

pub fn counting_verify(q: u32, max_dim: usize) -> Result<Outcome, Failure> {
    let checks = verify_counting(q, max_dim)?;
    let pass = checks.iter().all(|c| c.pass);
    let report = Report::new("counting verify", json!({"q": q, "max_dim": max_dim}), None, &checks)?;
    Ok(Outcome {
        pass,
        ..Outcome::new(report, Format::Csv)
    })
}

#[derive(Serialize)]
struct BoundsRow {
    #[serde(rename = "T")]
    t: usize,
    c_ct: Option<f64>,
    ect_lower: f64,
    ect_upper: f64,
    subspace_lower: Option<f64>,
    upper: f64,
}

pub fn bounds(config: &Path, t_range: Option<&str>) -> Result<Outcome, Failure> {
    let cfg = load(config)?;
    let sweep = cfg.file.experiment().and_then(|e| e.sweep.as_ref()).and_then(|s| s.t_range.clone());
    let (range, key) = match (t_range, sweep.as_deref()) {
        (Some(r), _) => (r.to_string(), "--t-range"),
        (None, Some(r)) => (r.to_string(), "sweep.t_range"),
        (None, None) => return Err(usage("bounds needs --t-range or sweep.t_range")),
    };
    let ts = parse_int_range(&range, key)?;
    if ts.contains(&0) {
        return Err(Error::config(key, "T must be positive").into());
    }
    let pmf = cfg.model.rank_pmf()?;
    let (m, n, q) = (cfg.model.m(), cfg.model.n(), cfg.model.field().q() as u64);
    let rows = ts
        .par_iter()
        .map(|&t| {
            let b = bounds_report(&pmf, t, m, n, q)?;
            Ok(BoundsRow {
                t,
                c_ct: b.c_ct_norm,
                ect_lower: b.ect_lower_norm,
                ect_upper: b.ect_upper_norm,
                subspace_lower: b.subspace_lower_norm,
                upper: b.upper_norm,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let inputs = json!({"config": cfg.echo, "t_range": range});
    let report = Report::new("bounds", inputs, None, &rows)?;
    Ok(Outcome::new(report, Format::Csv).with_config(&cfg))
}

#[derive(Serialize)]
struct RhoRow {
    c: f64,
    n_star: usize,
    rho_min: f64,
    arithmetic: loclab_core::capacity::LpArithmetic,
}

fn rho_rows(cells: &[(f64, usize)]) -> Result<Vec<RhoRow>, Failure> {
    Ok(cells
        .par_iter()
        .map(|&(c, n_star)| {
            let r = lp_rho_min(c, n_star)?;
            Ok(RhoRow {
                c,
                n_star,
                rho_min: r.rho_min,
                arithmetic: r.arithmetic,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?)
}

pub fn rho_min(n_star: usize, c: &str, table: bool) -> Result<Outcome, Failure> {
    let cs = parse_real_range(c, "--c")?;
    let rows = rho_rows(&cs.iter().map(|&c| (c, n_star)).collect::<Vec<_>>())?;
    let inputs = json!({"n_star": n_star, "c": c, "table": table});
    let report = if table {
        let mut row = serde_json::Map::new();
        row.insert("n_star".into(), json!(n_star));
        for r in &rows {
            row.insert(format!("c={}", r.c), json!(format!("{:.3}", r.rho_min)));
        }
        Report::new("rho-min", inputs, None, Value::Object(row))?
    } else {
        Report::new("rho-min", inputs, None, &rows)?
    };
    Ok(Outcome::new(report, Format::Csv))
}

pub fn rho_curve(c: f64, n_star: &str) -> Result<Outcome, Failure> {
    let ns = parse_int_range(n_star, "--nstar")?;
    let rows = rho_rows(&ns.iter().map(|&n| (c, n)).collect::<Vec<_>>())?;
    let report = Report::new("rho-curve", json!({"c": c, "nstar": n_star}), None, &rows)?;
    Ok(Outcome::new(report, Format::Csv))
}

pub fn optimal_rank(config: &Path, samples: usize, tol: f64, seed: Option<u64>) -> Result<Outcome, Failure> {
    let cfg = load(config)?;
    let seed = cfg.seed(seed);
    let model = &cfg.model;
    let (t, m, n, q) = (model.t(), model.m(), model.n(), model.field().q() as u64);
    let mut rng = trial_rng(seed, 0);
    let kernel = model.kernel_table(Some((samples, &mut rng)))?;
    let g = g_table(&kernel, t, m, n, q)?;
    let pmf = model.rank_pmf()?;
    let t0 = find_t0(&pmf, m, q).ok();
    let t1 = find_t1(&pmf, m, q).ok();
    let optimum = if m == n { Some(c_sub_symmetric(&kernel, t, m, q, tol)?) } else { None };
    let results = json!({
        "T": t, "M": m, "N": n, "q": q,
        "kernel_provenance": kernel.provenance,
        "r_star": g.r_star,
        "c_csub_norm": g.c_csub_norm,
        "gbar": g.gbar,
        "gap_bound_norm": g.gap_bound_norm,
        "gap_bound_safe_norm": g.gap_bound_safe_norm,
        "t0": t0,
        "t1": t1,
        "symmetric_optimum": optimum,
    });
    let inputs = json!({"config": cfg.echo, "samples": samples, "tol": tol});
    let report = Report::new("optimal-rank", inputs, Some(seed), results)?;
    Ok(Outcome::new(report, Format::Json).with_config(&cfg))
}

pub fn capacity_exact(config: &Path, tol: f64) -> Result<Outcome, Failure> {
    let cfg = load(config)?;
    let model = &cfg.model;
    let ba = exact_capacity(model, tol)?;
    let norm = model.t() as f64 * model.field().log2_q();
    let results = json!({
        "capacity_bits": ba.value,
        "capacity_norm": ba.value / norm,
        "upper_bits": ba.upper,
        "iterations": ba.iterations,
        "converged": ba.converged,
        "inputs": ba.input.len(),
    });
    let report = Report::new("capacity-exact", json!({"config": cfg.echo, "tol": tol}), None, results)?;
    Ok(Outcome::new(report, Format::Json).with_config(&cfg))
}

pub fn simulate_rm(channel: &Path, code: Option<&Path>, trials: Option<usize>, seed: Option<u64>) -> Result<Outcome, Failure> {
    let cfg = load(channel)?;
    let (code_cfg, code_echo): (CodeConfig, Value) = match code {
        Some(p) => {
            let text = read(p)?;
            let echo = serde_json::from_str(&text).map_err(|e| Failure::Config(e.to_string()))?;
            (parse(&text)?, echo)
        }
        None => {
            let c = cfg.code().cloned().ok_or_else(|| usage("simulate rm needs --code or a `code` entry"))?;
            let echo = serde_json::to_value(&c).map_err(|e| Failure::Runtime(e.to_string()))?;
            (c, echo)
        }
    };
    let CodeConfig::Gabidulin { n, k, basis } = code_cfg else {
        return Err(Error::config("code.type", "simulate rm needs a gabidulin code").into());
    };
    let model = &cfg.model;
    let code = LiftedRankMetricCode::with_points(model.field(), model.t(), model.m(), n, k, basis)?;
    let seed = cfg.seed(seed);
    let trials = cfg.trials(trials);
    let rep = run_rm(model, &code, trials, seed)?;
    let results = json!({
        "rate": rep.rate,
        "guarantee_frequency": rep.guaranteed as f64 / trials.max(1) as f64,
        "decode_errors": rep.errors,
        "tp_analytic": rep.tp_analytic,
        "report": rep,
    });
    let inputs = json!({"channel": cfg.echo, "code": code_echo, "trials": trials});
    let report = Report::new("simulate rm", inputs, Some(seed), results)?;
    Ok(Outcome::new(report, Format::Json).with_config(&cfg))
}

pub struct LmcArgs {
    pub n: Vec<usize>,
    pub s: Option<f64>,
    pub epsilon: Option<f64>,
    pub generator_seed: Option<u64>,
    pub trials: Option<usize>,
}

pub fn simulate_lmc(channel: &Path, args: LmcArgs, seed: Option<u64>) -> Result<Outcome, Failure> {
    let cfg = load(channel)?;
    let from_cfg = match cfg.code() {
        Some(CodeConfig::Linear {
            n,
            s,
            epsilon,
            generator_seed,
        }) => Some((*n, *s, *epsilon, *generator_seed)),
        _ => None,
    };
    let ns = if !args.n.is_empty() {
        args.n.clone()
    } else if let Some(v) = cfg.file.experiment().and_then(|e| e.sweep.as_ref()).and_then(|s| s.n_values.clone()) {
        v
    } else {
        vec![from_cfg.map(|c| c.0).ok_or_else(|| usage("simulate lmc needs --n"))?]
    };
    let s = args.s.or(from_cfg.map(|c| c.1)).ok_or_else(|| usage("simulate lmc needs --s"))?;
    let epsilon = args.epsilon.or(from_cfg.and_then(|c| c.2));
    let seed = cfg.seed(seed);
    let generator_seed = args.generator_seed.or(from_cfg.and_then(|c| c.3)).unwrap_or(seed);
    let trials = cfg.trials(args.trials);
    let model = &cfg.model;
    let mut rows = Vec::new();
    for &n in &ns {
        let code = LinearMatrixCode::new(model.field(), model.t(), model.m(), n, s, generator_seed)?;
        let rep = run_lmc(model, &code, trials, seed, epsilon)?;
        rows.push(json!({
            "n": n,
            "s": s,
            "rows": rep.rows,
            "rate": rep.rate,
            "trials": trials,
            "failures": rep.failures,
            "failure_rate": rep.failure_rate,
            "wrong_decodes": rep.wrong_decodes,
            "epsilon": rep.bound.as_ref().map(|b| b.epsilon),
            "bound_average": rep.bound.as_ref().map(|b| b.average),
            "bound_half_of_generators": rep.bound.as_ref().map(|b| b.half_of_generators),
            "generator_seed": generator_seed,
        }));
    }
    let inputs = json!({
        "channel": cfg.echo, "n": ns, "s": s, "epsilon": epsilon,
        "generator_seed": generator_seed, "trials": trials,
    });
    let report = Report::new("simulate lmc", inputs, Some(seed), rows)?;
    Ok(Outcome::new(report, Format::Json).with_config(&cfg))
}

pub struct RatelessArgs {
    pub r: Option<usize>,
    pub max_blocks: Option<usize>,
    pub sessions: usize,
    pub series_seed: Option<u64>,
    pub check_batch: bool,
}

pub fn simulate_rateless(channel: &Path, args: RatelessArgs, seed: Option<u64>) -> Result<Outcome, Failure> {
    let cfg = load(channel)?;
    let from_cfg = match cfg.code() {
        Some(CodeConfig::Rateless {
            r,
            max_blocks,
            series_seed,
        }) => Some((*r, *max_blocks, *series_seed)),
        _ => None,
    };
    let width = args.r.or(from_cfg.map(|c| c.0)).ok_or_else(|| usage("simulate rateless needs --R"))?;
    let max_blocks = args.max_blocks.or(from_cfg.map(|c| c.1)).unwrap_or(64);
    let seed = cfg.seed(seed);
    let series_seed = args.series_seed.or(from_cfg.and_then(|c| c.2)).unwrap_or(seed);
    let model = &cfg.model;
    let rep = run_rateless(model, width, max_blocks, args.sessions, series_seed, seed, args.check_batch)?;
    let pmf = model.rank_pmf()?;
    let q = model.field().q() as u64;
    let by_block: Vec<Value> = (1..=max_blocks)
        .map(|n| {
            let bound = best_failure_bound(&pmf, n, width as f64 / n as f64, q, EPSILON_GRID)
                .ok()
                .map(|b| (1.0 - b.half_of_generators).max(0.0));
            json!({"n": n, "success": rep.success_by[n - 1], "success_bound": bound})
        })
        .collect();
    let results = json!({
        "R": width,
        "sessions": rep.sessions,
        "successes": rep.successes,
        "empirical_failure": 1.0 - rep.successes as f64 / rep.sessions.max(1) as f64,
        "mean_blocks": rep.mean_blocks,
        "batch_mismatches": if args.check_batch { Some(rep.batch_mismatches) } else { None },
        "series_seed": series_seed,
        "by_block": by_block,
    });
    let inputs = json!({
        "channel": cfg.echo, "R": width, "max_blocks": max_blocks, "sessions": args.sessions,
        "series_seed": series_seed, "check_batch": args.check_batch,
    });
    let report = Report::new("simulate rateless", inputs, Some(seed), results)?;
    Ok(Outcome::new(report, Format::Json).with_config(&cfg))
}

pub fn validate(suite: Suite, seed: Option<u64>) -> Result<Outcome, Failure> {
    let seed = seed.unwrap_or(0);
    let rep = run_suite(suite, seed)?;
    let pass = rep.pass;
    let report = Report::new("validate", json!({"suite": suite}), Some(seed), &rep)?;
    Ok(Outcome {
        pass,
        ..Outcome::new(report, Format::Json)
    })
}

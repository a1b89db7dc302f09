//! Command-line runs, certificates and pinned reproductions, with CSV and
//! JSON persistence.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::counterexamples::{self as cx, Precision, RegionKind};
use crate::diagnostics::{self as dg, Grid, Regime, Target, REGIME_NAMES};
use crate::error::{Error, Result};
use crate::linalg;
use crate::problems::{self, abs_plus, shifted_quad, sps_fail, Oracle, StochasticProblem, ZOO_NAMES};
use crate::steppers::{self, map_t, RunSpec, Stepper, Trajectory, STEPPER_NAMES};
use crate::surrogates::TransformSpec;

/// Version of the manifest layout and CSV column set.
pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "POLYAK_OUT";

const DEFAULT_OUT: &str = "polyak-out";

pub const EXPERIMENTS: &[&str] = &["cycle", "measure_zero", "sps_fail", "instability", "bounded_region"];

pub const PROPERTIES: &[&str] = &[
    "lsuc",
    "surrogate_lsuc",
    "approx_lsuc",
    "self_bounded",
    "lipschitz",
    "sharp",
    "quad_growth",
    "qg_plus",
    "holder",
    "equivalence",
];

pub const TRANSFORMS: &[&str] = &["shift_opt", "shift_per_component_inf", "hinge:a", "hinge_at_opt", "lower_bound:q"];

const CSV_HELP: &str = "\
Trajectory CSV columns (one file per seed, seed_<k>.csv):
  t           step index; the last row (t = T+1) holds the final iterate
  x0..x{d-1}  coordinates of x_t
  f           objective F(x_t)
  f_i         value of the sampled component at x_t
  component   index of the sampled component
  eta         stepsize as recorded by the stepper
  h           surrogate value of the sampled component at x_t
  clipped     1 if the gamma/h branch was active, else 0
Fields that do not apply to the final row are empty. Floats use 17 significant digits.";

#[derive(Debug, Parser)]
#[command(name = "polyak", version, about = "Polyak-type steppers, curvature certificates and bound audits")]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a stepper over one or more seeds, write trajectories and audit them.
    #[command(after_help = CSV_HELP)]
    Run(RunArgs),
    /// Check a curvature or growth inequality on a grid.
    Certify(CertifyArgs),
    /// Run one of the pinned counterexample reproductions.
    Reproduce(ReproduceArgs),
    /// List problems, steppers, transforms, audits, properties and experiments.
    List,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Plain-text `key = value` file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Problem address, e.g. `quad`, `l1?d=4`, `shifted_quad?a=0.5`.
    #[arg(long)]
    pub problem: Option<String>,
    /// Stepper, e.g. `polyak`, `alg1:gamma=0.1`, `sps:c=0.5`.
    #[arg(long)]
    pub stepper: Option<String>,
    /// Surrogate transform used by `alg1` and by the audits.
    #[arg(long)]
    pub transform: Option<String>,
    /// Starting point, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub x1: Option<String>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Seeds: a list `0,3,7` and/or inclusive ranges `0..99`.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Output directory (default: $POLYAK_OUT, else ./polyak-out).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Audits, e.g. `one_step,rate:self_bounded:L=1`.
    #[arg(long)]
    pub audit: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct CertifyArgs {
    #[arg(long)]
    pub problem: String,
    #[arg(long)]
    pub property: String,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long = "L")]
    pub l: Option<f64>,
    #[arg(long = "G")]
    pub g: Option<f64>,
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long = "L_nu")]
    pub l_nu: Option<f64>,
    #[arg(long)]
    pub nu: Option<f64>,
    /// Transform for `surrogate_lsuc` and `approx_lsuc`.
    #[arg(long, default_value = "shift_opt")]
    pub transform: String,
    /// `standard`, `line:lo:hi:step` or `ball:radius:count`.
    #[arg(long, default_value = "standard")]
    pub grid: String,
    /// Also write the certificate JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReproduceArgs {
    /// One of cycle, measure_zero, sps_fail, instability, bounded_region.
    pub experiment: String,
    /// Output directory (default: $POLYAK_OUT, else ./polyak-out).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A validated run configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub problem: String,
    pub stepper: String,
    pub transform: String,
    pub x1: Vec<f64>,
    pub steps: usize,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub audits: Vec<String>,
}

fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(line, format!("line {}: expected key = value", i + 1)))?;
        let key = k.trim().to_string();
        const KEYS: &[&str] = &["problem", "stepper", "transform", "x1", "steps", "seeds", "output_dir", "audits"];
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::UnknownName { kind: "config key", name: key, available: KEYS.join(", ") });
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

pub fn parse_vector(input: &str) -> Result<Vec<f64>> {
    let v = input
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| Error::parse(input, format!("`{}` is not a number", s.trim()))))
        .collect::<Result<Vec<_>>>()?;
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::parse(input, "coordinates must be finite"));
    }
    Ok(v)
}

/// `0..99` (inclusive), `0..=99`, `3` or comma-separated combinations.
pub fn parse_seeds(input: &str) -> Result<Vec<u64>> {
    let num = |s: &str| s.trim().parse::<u64>().map_err(|_| Error::parse(input, format!("`{}` is not a seed", s.trim())));
    let mut seeds = Vec::new();
    for part in input.split(',').filter(|p| !p.trim().is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
            if a > b {
                return Err(Error::parse(input, format!("empty range `{part}`")));
            }
            seeds.extend(a..=b);
        } else {
            seeds.push(num(part)?);
        }
    }
    if seeds.is_empty() {
        return Err(Error::parse(input, "no seeds given"));
    }
    Ok(seeds)
}

/// Split an audit list on commas, keeping `key=value` continuations with the
/// preceding rate audit (`rate:sharp:s=1,G=1`).
pub fn split_audits(input: &str) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for part in input.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let continues = part.contains('=') && !part.starts_with("rate:") && part != "one_step";
        match out.last_mut() {
            Some(prev) if continues && prev.starts_with("rate:") => {
                prev.push(',');
                prev.push_str(part);
            }
            _ => out.push(part.to_string()),
        }
    }
    out
}

fn output_root(flag: Option<&Path>, file: Option<&str>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| file.map(PathBuf::from))
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

impl RunConfig {
    /// Merge the config file (if any) with the flags and validate every field.
    pub fn resolve(args: &RunArgs) -> Result<RunConfig> {
        let file = match &args.config {
            Some(p) => parse_config_file(&fs::read_to_string(p)?)?,
            None => BTreeMap::new(),
        };
        let pick = |flag: &Option<String>, key: &str| flag.clone().or_else(|| file.get(key).cloned());
        let field = |name: &str, e: Error| Error::config(format!("{name}: {e}"));

        let problem = pick(&args.problem, "problem").ok_or_else(|| Error::config("problem: missing"))?;
        let stepper = pick(&args.stepper, "stepper").unwrap_or_else(|| "polyak".into());
        let transform = pick(&args.transform, "transform").unwrap_or_else(|| "shift_opt".into());
        let x1 = pick(&args.x1, "x1").ok_or_else(|| Error::config("x1: missing"))?;
        let x1 = parse_vector(&x1).map_err(|e| field("x1", e))?;
        let steps = match args.steps {
            Some(s) => s,
            None => match file.get("steps") {
                Some(s) => s.parse().map_err(|_| Error::config(format!("steps: `{s}` is not an integer")))?,
                None => return Err(Error::config("steps: missing")),
            },
        };
        if steps == 0 {
            return Err(Error::config("steps: must be at least 1"));
        }
        let seeds = parse_seeds(&pick(&args.seeds, "seeds").unwrap_or_else(|| "0".into())).map_err(|e| field("seeds", e))?;
        let audits = pick(&args.audit, "audits").map(|a| split_audits(&a)).unwrap_or_default();
        let output_dir = output_root(args.out.as_deref(), file.get("output_dir").map(String::as_str));

        let cfg = RunConfig { problem, stepper, transform, x1, steps, seeds, output_dir, audits };
        cfg.resolved().map(|_| cfg)
    }

    fn resolved(&self) -> Result<Resolved> {
        let field = |name: &str, e: Error| Error::config(format!("{name}: {e}"));
        let problem = problems::zoo(&self.problem).map_err(|e| field("problem", e))?.into_stochastic();
        let stepper = Stepper::parse(&self.stepper).map_err(|e| field("stepper", e))?;
        let transform = TransformSpec::parse(&self.transform).map_err(|e| field("transform", e))?;
        if self.x1.len() != problem.dim() {
            return Err(field("x1", Error::DimensionMismatch { expected: problem.dim(), got: self.x1.len() }));
        }
        let gamma = match stepper {
            Stepper::Alg1 { gamma } => Some(gamma),
            _ => None,
        };
        let declared = dg::declared_constants(&problem);
        let mut audits = Vec::with_capacity(self.audits.len());
        for a in &self.audits {
            let audit = if a == "one_step" {
                Audit::OneStep
            } else if let Some(r) = a.strip_prefix("rate:") {
                Audit::Rate(Regime::parse(r, &declared, gamma).map_err(|e| field("audit", e))?)
            } else {
                return Err(field(
                    "audit",
                    Error::UnknownName { kind: "audit", name: a.clone(), available: "one_step, rate:<regime>".into() },
                ));
            };
            audits.push((a.clone(), audit));
        }
        Ok(Resolved { problem, stepper, transform, audits })
    }
}

enum Audit {
    OneStep,
    Rate(Regime),
}

struct Resolved {
    problem: StochasticProblem,
    stepper: Stepper,
    transform: TransformSpec,
    audits: Vec<(String, Audit)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub audit: String,
    pub passed: bool,
    pub detail: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub csv_columns: Vec<String>,
    pub config: RunConfig,
    pub files: Vec<PathBuf>,
    pub diverged_seeds: Vec<u64>,
    /// Mean over seeds of `F(x_{T+1}) - min F`.
    pub mean_final_gap: Option<f64>,
    pub verdicts: Vec<Verdict>,
    pub passed: bool,
}

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv_columns(dim: usize) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    cols.extend((0..dim).map(|i| format!("x{i}")));
    cols.extend(["f", "f_i", "component", "eta", "h", "clipped"].map(String::from));
    cols
}

/// Render a trajectory in the CSV layout described by [`csv_columns`].
pub fn trajectory_csv(traj: &Trajectory, problem: &StochasticProblem) -> String {
    let dim = problem.dim();
    let mut out = csv_columns(dim).join(",");
    out.push('\n');
    for r in &traj.records {
        let _ = write!(out, "{}", r.t);
        for x in &r.x {
            let _ = write!(out, ",{}", fmt_f(*x));
        }
        let _ = writeln!(
            out,
            ",{},{},{},{},{},{}",
            fmt_f(problem.objective(&r.x)),
            fmt_f(r.f_val),
            r.component,
            fmt_f(r.eta),
            fmt_f(r.h_val),
            u8::from(r.clipped)
        );
    }
    let _ = write!(out, "{}", traj.records.len() + 1);
    for x in &traj.final_x {
        let _ = write!(out, ",{}", fmt_f(*x));
    }
    let _ = writeln!(out, ",{},,,,,", fmt_f(traj.final_f));
    out
}

/// Execute the runs and audits of `cfg` and write CSVs and `manifest.json`.
pub fn cli_run(cfg: &RunConfig) -> Result<RunManifest> {
    let res = cfg.resolved()?;
    fs::create_dir_all(&cfg.output_dir)?;
    let runs: Vec<(u64, Trajectory, PathBuf)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let traj = steppers::run(&RunSpec {
                stepper: &res.stepper,
                problem: &res.problem,
                transform: &res.transform,
                x1: &cfg.x1,
                steps: cfg.steps,
                seed,
            })?;
            let path = cfg.output_dir.join(format!("seed_{seed}.csv"));
            fs::write(&path, trajectory_csv(&traj, &res.problem))?;
            Ok((seed, traj, path))
        })
        .collect::<Result<_>>()?;
    let trajectories: Vec<Trajectory> = runs.iter().map(|r| r.1.clone()).collect();

    let surrogate = res.transform.build(&res.problem);
    let mut verdicts = Vec::new();
    for (name, audit) in &res.audits {
        let outcome: Result<(bool, Value)> = surrogate.as_ref().map_err(clone_err).and_then(|s| match audit {
            Audit::OneStep => {
                let mut per_seed = Vec::new();
                let mut all = true;
                for (seed, traj, _) in &runs {
                    let ledger = dg::audit_one_step(traj, s)?;
                    all &= ledger.satisfied;
                    per_seed.push(json!({
                        "seed": seed,
                        "satisfied": ledger.satisfied,
                        "worst_slack": ledger.worst_slack,
                        "unresolved_rows": ledger.unresolved,
                        "cumulative_left": ledger.cumulative_left,
                        "cumulative_right": ledger.cumulative_right,
                        "cumulative_holds": ledger.cumulative_holds,
                        "approximate": ledger.approximate,
                    }));
                }
                Ok((all, json!({ "seeds": per_seed })))
            }
            Audit::Rate(regime) => {
                let report = dg::audit_rates(&trajectories, s, regime)?;
                Ok((report.holds, serde_json::to_value(&report)?))
            }
        });
        let (passed, detail) = outcome.unwrap_or_else(|e| (false, json!({ "error": e.to_string() })));
        verdicts.push(Verdict { audit: name.clone(), passed, detail });
    }

    let mean_final_gap = res.problem.objective_minimum().ok().map(|m| {
        trajectories.iter().map(|t| t.final_f - m).sum::<f64>() / trajectories.len() as f64
    });
    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        csv_columns: csv_columns(res.problem.dim()),
        config: cfg.clone(),
        files: runs.iter().map(|r| r.2.clone()).collect(),
        diverged_seeds: runs.iter().filter(|r| !r.1.completed()).map(|r| r.0).collect(),
        mean_final_gap,
        passed: verdicts.iter().all(|v| v.passed),
        verdicts,
    };
    fs::write(cfg.output_dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}

fn clone_err(e: &Error) -> Error {
    Error::Config(e.to_string())
}

#[derive(Debug, Clone, Serialize)]
pub struct CertifyOutput {
    pub problem: String,
    pub grid: Grid,
    pub holds: bool,
    pub result: Value,
}

pub fn cli_certify(args: &CertifyArgs) -> Result<CertifyOutput> {
    let f = problems::zoo(&args.problem)?.deterministic()?;
    let grid = Grid::parse(&args.grid)?.unwrap_or_else(|| Grid::standard(f.dim));
    let d = f.declared;
    let need = |flag: Option<f64>, declared: Option<f64>, name: &str| {
        flag.or(declared)
            .ok_or_else(|| Error::config(format!("property `{}` needs --{name}", args.property)))
    };
    let t = Target::from_function(&f)?;
    let value = |c: dg::Certificate| -> Result<(bool, Value)> { Ok((c.holds, serde_json::to_value(&c)?)) };
    let (holds, result) = match args.property.as_str() {
        "lsuc" => value(dg::check_lsuc(&t, need(args.lambda, None, "lambda")?, &grid)?)?,
        "surrogate_lsuc" | "approx_lsuc" => {
            let problem = StochasticProblem::single(f.clone());
            let s = TransformSpec::parse(&args.transform)?.build(&problem)?;
            let s = &s.components[0];
            if args.property == "surrogate_lsuc" {
                value(dg::check_surrogate_lsuc(s, &grid)?)?
            } else {
                value(dg::check_approx_lsuc(s, &grid)?)?
            }
        }
        "self_bounded" => value(dg::check_self_bounded(&t, need(args.l, d.self_bounded_l, "L")?, &grid)?)?,
        "lipschitz" => value(dg::check_lipschitz(&t, need(args.g, d.lipschitz_g, "G")?, &grid)?)?,
        "sharp" => value(dg::check_sharp(&t, need(args.s, d.sharp_s, "s")?, &grid)?)?,
        "quad_growth" => value(dg::check_qg(&t, need(args.mu, d.quadratic_growth_mu, "mu")?, &grid)?)?,
        "qg_plus" => value(dg::check_qg_plus(&t, need(args.l, d.self_bounded_l, "L")?, &grid)?)?,
        "holder" => {
            let l_nu = need(args.l_nu, d.holder.map(|h| h.0), "L_nu")?;
            let nu = need(args.nu, d.holder.map(|h| h.1), "nu")?;
            value(dg::check_holder(&t, l_nu, nu, &grid)?)?
        }
        "equivalence" => {
            let r = dg::check_lsuc_qgplus_equivalence(&t, need(args.l, d.self_bounded_l, "L")?, &grid)?;
            (r.holds, serde_json::to_value(&r)?)
        }
        other => {
            return Err(Error::UnknownName { kind: "property", name: other.into(), available: PROPERTIES.join(", ") })
        }
    };
    Ok(CertifyOutput { problem: args.problem.clone(), grid, holds, result })
}

/// One checked statement of a reproduction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Claim {
    pub claim: String,
    pub measured: f64,
    pub expected: String,
    pub passed: bool,
    /// Reported but not part of the verdict.
    pub informational: bool,
}

impl Claim {
    fn new(claim: &str, measured: f64, expected: &str, passed: bool) -> Claim {
        Claim { claim: claim.into(), measured, expected: expected.into(), passed, informational: false }
    }

    fn info(claim: &str, measured: f64, expected: &str) -> Claim {
        Claim { claim: claim.into(), measured, expected: expected.into(), passed: true, informational: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub schema_version: u32,
    pub claims: Vec<Claim>,
    pub passed: bool,
    #[serde(skip)]
    pub csv: String,
}

impl ExperimentReport {
    fn new(experiment: &str, claims: Vec<Claim>, csv: String) -> Self {
        let passed = claims.iter().all(|c| c.passed || c.informational);
        ExperimentReport { experiment: experiment.into(), schema_version: SCHEMA_VERSION, claims, passed, csv }
    }
}

/// Run a pinned reproduction without touching the filesystem.
pub fn reproduce(name: &str) -> Result<ExperimentReport> {
    match name {
        "cycle" => reproduce_cycle(),
        "measure_zero" => reproduce_measure_zero(),
        "sps_fail" => reproduce_sps_fail(),
        "instability" => reproduce_instability(),
        "bounded_region" => reproduce_bounded_region(),
        other => {
            Err(Error::UnknownName { kind: "experiment", name: other.into(), available: EXPERIMENTS.join(", ") })
        }
    }
}

/// Run a reproduction and write `<name>.csv` and `<name>.json` under `dir`.
pub fn cli_reproduce(name: &str, dir: &Path) -> Result<(ExperimentReport, PathBuf, PathBuf)> {
    let report = reproduce(name)?;
    fs::create_dir_all(dir)?;
    let csv = dir.join(format!("{name}.csv"));
    let js = dir.join(format!("{name}.json"));
    fs::write(&csv, &report.csv)?;
    fs::write(&js, serde_json::to_string_pretty(&report)? + "\n")?;
    Ok((report, csv, js))
}

fn reproduce_cycle() -> Result<ExperimentReport> {
    let dbl = cx::run_cycle(Precision::Double, 200)?;
    let ext = cx::run_cycle(Precision::Extended, 200)?;
    let growth = ext.perturbation_growth.unwrap_or(f64::NAN);
    let claims = vec![
        Claim::new("period-3 closure |x4 - x1| (double)", dbl.closure_error, "<= 1e-12", dbl.closure_error <= 1e-12),
        Claim::new("min running-average gap, t <= 36 (double)", dbl.min_avg_gap(36), ">= 0.77", dbl.min_avg_gap(36) >= 0.77),
        Claim::new("min running-average gap, t <= 200 (extended)", ext.min_avg_gap(200), ">= 0.77", ext.min_avg_gap(200) >= 0.77),
        Claim::new("per-period multiplier (perturbation growth)", growth, "in [7.5, 8.5]", (7.5..=8.5).contains(&growth)),
        Claim::new("per-period multiplier (product over the cycle)", ext.multiplier, "in [7.5, 8.5]", (7.5..=8.5).contains(&ext.multiplier)),
        Claim::info("gap of the exact cycle average", ext.cycle_average_gap, "7/9"),
        Claim::info("min running-average gap, t <= 200 (double)", dbl.min_avg_gap(200), "drifts off the cycle"),
    ];
    let mut csv = String::from("t,x_double,x_extended,avg_gap_double,avg_gap_extended\n");
    for t in 0..200 {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            t + 1,
            fmt_f(dbl.iterates[t]),
            fmt_f(ext.iterates[t]),
            fmt_f(dbl.avg_gap[t]),
            fmt_f(ext.avg_gap[t])
        );
    }
    Ok(ExperimentReport::new("cycle", claims, csv))
}

fn reproduce_measure_zero() -> Result<ExperimentReport> {
    let a = 0.5;
    let depth = 20;
    let tree = cx::preimage_tree(a, depth)?;
    let sizes = tree.sizes();
    let sizes_ok = sizes.iter().enumerate().all(|(k, &n)| n <= 1 << k);
    let level1 = &tree.levels[1];
    let root = (2.0 * a).sqrt();
    let level1_err = if level1.len() == 2 { (level1[0] + root).abs().max((level1[1] - root).abs()) } else { f64::INFINITY };
    let sim = cx::measure_zero_simulation(a, 10_000, 10_000, 1e-3, 0)?;
    let claims = vec![
        Claim::new("preimage level sizes <= 2^k for k <= 20", sizes.iter().sum::<usize>() as f64, "each level <= 2^k", sizes_ok),
        Claim::new("level 1 equals {-sqrt(2a), +sqrt(2a)} (max error)", level1_err, "<= 1e-15", level1_err <= 1e-15),
        Claim::new("preimage levels symmetric about 0", f64::from(u8::from(tree.is_symmetric(1e-9))), "1", tree.is_symmetric(1e-9)),
        Claim::new("starts that converge (tail stays in |x| < 1e-3)", sim.converged as f64, "0 of 10000", sim.converged == 0),
        Claim::info("starts whose tail visits |x| < 1e-3", sim.visited as f64, "visits are allowed"),
        Claim::info("smallest tail |x_t| over all starts", sim.min_tail_abs, "informational"),
        Claim::info("smallest tail max |x_t| over all starts", sim.min_tail_max_abs, "> 1e-3"),
    ];
    let mut csv = String::from("k,level_size,bound\n");
    for (k, n) in sizes.iter().enumerate() {
        let _ = writeln!(csv, "{k},{n},{}", 1u64 << k);
    }
    Ok(ExperimentReport::new("measure_zero", claims, csv))
}

fn reproduce_sps_fail() -> Result<ExperimentReport> {
    let steps = 1000;
    let chain = cx::exact_sps_chain(&sps_fail(), 1.0, steps, 0.5, f64::INFINITY)?;
    let ef_err = chain.expected_f[1..].iter().map(|e| (e - 9.0).abs()).fold(0.0, f64::max);
    let min_gap = chain.gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let claims = vec![
        Claim::new("max |E[F(x_t)] - 9| for 2 <= t <= 1000", ef_err, "<= 1e-12", ef_err <= 1e-12),
        Claim::new("min F", chain.min_f, "44/6 +- 1e-12", (chain.min_f - 44.0 / 6.0).abs() <= 1e-12),
        Claim::new("min gap E[F(x_t)] - min F over t <= 1000", min_gap, ">= 2/3", min_gap >= 2.0 / 3.0 - 1e-12),
        Claim::info("steady-state gap", chain.gaps[steps - 1], "5/3"),
    ];
    let mut csv = String::from("t,expected_f,gap,support_size\n");
    for (s, (e, g)) in chain.states.iter().zip(chain.expected_f.iter().zip(&chain.gaps)) {
        let _ = writeln!(csv, "{},{},{},{}", s.step, fmt_f(*e), fmt_f(*g), s.support.len());
    }
    Ok(ExperimentReport::new("sps_fail", claims, csv))
}

fn reproduce_instability() -> Result<ExperimentReport> {
    let h = shifted_quad(1.0);
    let region = cx::InstabilityRegion::for_oracle(RegionKind::SelfBoundedQg, &h, 1.0, 1.0)?;
    let samples = cx::sample_region(&h, &region, 1000, 0)?;
    let rep = cx::instability_check(&h, &region, &samples)?;
    let qf = cx::quasi_firm_violations(&h, &samples)?;
    let h2 = abs_plus(1.0);
    let region2 = cx::InstabilityRegion::for_oracle(RegionKind::LipschitzSharp, &h2, 1.0, 1.0)?;
    let samples2 = cx::sample_region(&h2, &region2, 1000, 0)?;
    let rep2 = cx::instability_check(&h2, &region2, &samples2)?;
    let claims = vec![
        Claim::new("threshold on shifted_quad(1)", region.threshold, "h*/7", (region.threshold - 1.0 / 7.0).abs() < 1e-15),
        Claim::new("samples in S tested (shifted_quad(1))", rep.tested as f64, "1000", rep.tested == 1000),
        Claim::new("min |T(x)|/|x| over samples (shifted_quad(1))", rep.min_ratio, "> 1", rep.all_expand),
        Claim::new("quasi-firm non-expansiveness violations", qf.violations as f64, ">= 1", qf.violations >= 1),
        Claim::new("min |T(x)|/|x| over samples (abs_plus(1))", rep2.min_ratio, "> 1", rep2.all_expand && rep2.tested == 1000),
    ];
    let mut csv = String::from("problem,x,h_gap,ratio\n");
    for (name, f, pts) in [("shifted_quad", &h, &samples), ("abs_plus", &h2, &samples2)] {
        for x in pts.iter() {
            let ratio = linalg::norm(&map_t(f, x)) / linalg::norm(x);
            let gap = f.value(x) - f.opt_value_or_err()?;
            let _ = writeln!(csv, "{name},{},{},{}", fmt_f(x[0]), fmt_f(gap), fmt_f(ratio));
        }
    }
    Ok(ExperimentReport::new("instability", claims, csv))
}

fn reproduce_bounded_region() -> Result<ExperimentReport> {
    let h = shifted_quad(1.0);
    let region = cx::InstabilityRegion::for_oracle(RegionKind::SelfBoundedQg, &h, 1.0, 1.0)?;
    let samples = cx::sample_region(&h, &region, 1000, 1)?;
    let b = cx::bounded_subregion(&h, &region, 2.0, &samples)?;
    let h2 = abs_plus(1.0);
    let region2 = cx::InstabilityRegion::for_oracle(RegionKind::LipschitzSharp, &h2, 1.0, 1.0)?;
    let samples2 = cx::sample_region(&h2, &region2, 1000, 1)?;
    let b2 = cx::bounded_subregion(&h2, &region2, 2.0, &samples2)?;
    let claims = vec![
        Claim::new("stepsize bound 2k(c+1)/(mu c), k = 2", b.stepsize_bound, "32", (b.stepsize_bound - 32.0).abs() < 1e-12),
        Claim::new("max sampled stepsize on S \\ S_2 (shifted_quad(1))", b.max_stepsize, "<= 32", b.holds && b.samples_checked > 0),
        Claim::new("max sampled stepsize on S (abs_plus(1))", b2.max_stepsize, "<= (c+1)h*/mu^2 = 2", b2.holds && b2.samples_checked > 0),
    ];
    let mut csv = String::from("problem,x,stepsize,in_subregion\n");
    let lower = region.c / 2.0 * region.h_star;
    for x in &samples {
        let step = h.value(x) / linalg::norm_sq(&h.subgradient(x));
        let inside = h.value(x) - region.h_star >= lower;
        let _ = writeln!(csv, "shifted_quad,{},{},{}", fmt_f(x[0]), fmt_f(step), u8::from(inside));
    }
    for x in &samples2 {
        let step = h2.value(x) / linalg::norm_sq(&h2.subgradient(x));
        let _ = writeln!(csv, "abs_plus,{},{},1", fmt_f(x[0]), fmt_f(step));
    }
    Ok(ExperimentReport::new("bounded_region", claims, csv))
}

pub fn listing() -> String {
    let mut s = String::new();
    let mut section = |title: &str, items: &[&str]| {
        let _ = writeln!(s, "{title}:");
        for i in items {
            let _ = writeln!(s, "  {i}");
        }
    };
    section("problems", ZOO_NAMES);
    section("steppers", STEPPER_NAMES);
    section("transforms", TRANSFORMS);
    section("audits", &["one_step", "rate:<regime>"]);
    section("regimes", REGIME_NAMES);
    section("properties", PROPERTIES);
    section("experiments", EXPERIMENTS);
    s
}

/// Exit status for an error: 2 for configuration problems, 3 for I/O.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) | Error::Json(_) => 3,
        _ => 2,
    }
}

/// Entry point of the `polyak` binary; returns the process exit status.
pub fn main_with(cli: Cli) -> i32 {
    let result: Result<bool> = match &cli.command {
        Command::Run(args) => RunConfig::resolve(args).and_then(|cfg| {
            let m = cli_run(&cfg)?;
            for v in &m.verdicts {
                println!("{}: {}", v.audit, if v.passed { "PASS" } else { "FAIL" });
            }
            if let Some(g) = m.mean_final_gap {
                println!("mean final gap: {g:.6}");
            }
            println!("manifest: {}", cfg.output_dir.join("manifest.json").display());
            Ok(m.passed)
        }),
        Command::Certify(args) => cli_certify(args).and_then(|c| {
            let text = serde_json::to_string_pretty(&c)? + "\n";
            if let Some(p) = &args.out {
                fs::write(p, &text)?;
            }
            print!("{text}");
            Ok(c.holds)
        }),
        Command::Reproduce(args) => {
            let dir = output_root(args.out.as_deref(), None).join("reproduce");
            cli_reproduce(&args.experiment, &dir).map(|(r, csv, js)| {
                for c in &r.claims {
                    let tag = if c.informational { "INFO" } else if c.passed { "PASS" } else { "FAIL" };
                    println!("{tag} {}: {} (expected {})", c.claim, c.measured, c.expected);
                }
                println!("csv: {}\nverdict: {}", csv.display(), js.display());
                r.passed
            })
        }
        Command::List => {
            print!("{}", listing());
            Ok(true)
        }
    };
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(problem: &str, stepper: &str, x1: &str, steps: usize, out: &Path) -> RunArgs {
        RunArgs {
            problem: Some(problem.into()),
            stepper: Some(stepper.into()),
            x1: Some(x1.into()),
            steps: Some(steps),
            out: Some(out.to_path_buf()),
            ..Default::default()
        }
    }

    #[test]
    fn seeds_and_vectors() {
        assert_eq!(parse_seeds("0..3").unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(parse_seeds("0..=2,7").unwrap(), vec![0, 1, 2, 7]);
        assert_eq!(parse_seeds("0..99").unwrap().len(), 100);
        assert!(parse_seeds("").is_err());
        assert!(parse_seeds("3..1").is_err());
        assert_eq!(parse_vector("1, -2.5").unwrap(), vec![1.0, -2.5]);
        assert!(parse_vector("1,x").is_err());
    }

    #[test]
    fn audit_list_splitting() {
        assert_eq!(split_audits("one_step,rate:self_bounded:L=1"), vec!["one_step", "rate:self_bounded:L=1"]);
        assert_eq!(split_audits("rate:sharp:s=1,G=1,one_step"), vec!["rate:sharp:s=1,G=1", "one_step"]);
    }

    #[test]
    fn run_with_audits_passes() {
        let dir = tempfile::tempdir().unwrap();
        let mut a = args("quad", "polyak", "8", 50, dir.path());
        a.audit = Some("one_step,rate:self_bounded:L=1".into());
        let cfg = RunConfig::resolve(&a).unwrap();
        let m = cli_run(&cfg).unwrap();
        assert_eq!(m.verdicts.len(), 2);
        assert!(m.passed, "{:?}", m.verdicts);
        for f in &m.files {
            assert!(f.exists());
        }
        assert!(dir.path().join("manifest.json").exists());
        let csv = fs::read_to_string(&m.files[0]).unwrap();
        assert_eq!(csv.lines().count(), 52);
        assert!(csv.starts_with("t,x0,f,f_i,component,eta,h,clipped\n"));
    }

    #[test]
    fn zero_steps_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let e = RunConfig::resolve(&args("quad", "polyak", "8", 0, dir.path())).unwrap_err();
        assert!(e.to_string().contains("steps"));
        assert_eq!(exit_code(&e), 2);
        let e = RunConfig::resolve(&args("nope", "polyak", "8", 5, dir.path())).unwrap_err();
        assert!(e.to_string().contains("problem"));
        let e = RunConfig::resolve(&args("quad?d=2", "polyak", "8", 5, dir.path())).unwrap_err();
        assert!(e.to_string().contains("x1"));
    }

    #[test]
    fn config_file_with_flag_override() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        fs::write(&path, "# sweep\nproblem = l1?d=2\nx1 = 1,2\nsteps = 10\nstepper = polyak\n").unwrap();
        let cfg = RunConfig::resolve(&RunArgs {
            config: Some(path.clone()),
            steps: Some(20),
            out: Some(dir.path().into()),
            ..Default::default()
        })
        .unwrap();
        assert_eq!((cfg.problem.as_str(), cfg.steps), ("l1?d=2", 20));
        fs::write(&path, "bogus = 1\n").unwrap();
        assert!(RunConfig::resolve(&RunArgs { config: Some(path), ..Default::default() }).is_err());
    }

    #[test]
    fn stochastic_run_is_deterministic_per_seed() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let mk = |d: &Path| {
            let mut a = args("sps_fail", "alg1:gamma=inf", "1", 100, d);
            a.transform = Some("shift_per_component_inf".into());
            a.seeds = Some("0..9".into());
            cli_run(&RunConfig::resolve(&a).unwrap()).unwrap()
        };
        let (m1, m2) = (mk(d1.path()), mk(d2.path()));
        assert_eq!(m1.files.len(), 10);
        for (a, b) in m1.files.iter().zip(&m2.files) {
            assert_eq!(fs::read(a).unwrap(), fs::read(b).unwrap());
        }
        assert!(m1.mean_final_gap.unwrap() > 0.5);
    }

    #[test]
    fn certify_examples() {
        let c = |problem: &str, property: &str, set: &dyn Fn(&mut CertifyArgs)| {
            let mut a = CertifyArgs {
                problem: problem.into(),
                property: property.into(),
                lambda: None,
                l: None,
                g: None,
                s: None,
                mu: None,
                l_nu: None,
                nu: None,
                transform: "shift_opt".into(),
                grid: "standard".into(),
                out: None,
            };
            set(&mut a);
            cli_certify(&a).unwrap().holds
        };
        assert!(c("fig1", "lsuc", &|a| a.lambda = Some(2.0)));
        assert!(c("fig1", "self_bounded", &|a| a.l = Some(9.0)));
        assert!(!c("quad", "sharp", &|a| a.s = Some(1.0)));
        assert!(c("fig1", "surrogate_lsuc", &|_| ()));
        assert!(c("quad", "equivalence", &|a| a.l = Some(1.0)));
    }

    #[test]
    fn reproduce_registry() {
        assert!(matches!(reproduce("nope"), Err(Error::UnknownName { .. })));
        for name in ["cycle", "sps_fail", "instability", "bounded_region"] {
            let r = reproduce(name).unwrap();
            assert!(r.passed, "{name}: {:?}", r.claims);
            assert!(!r.csv.is_empty());
        }
    }
}

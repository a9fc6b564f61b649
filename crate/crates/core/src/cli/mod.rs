//! Command-line front end.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 internal error.

pub mod config;
pub mod report;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use self::config::{load_file, parse_list, parse_points, resolve, FlagOverrides, Resolved, RunConfig};
use self::report::{DiscoverReport, EnsembleReport};
use crate::cost::CostMode;
use crate::family::{enumerate_algorithms, parse_schedule, AlgorithmKind, AlgorithmSpec, FamilyConfig};
use crate::problem::{builtin, ProblemKind, PRESETS};
use crate::search::{self, Status};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "algoforge", version, about = "Discover and rank monomial-type iterative algorithms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Search every algorithm of the family and rank them by cost.
    Discover(Common),
    /// Replay one algorithm with a fixed step schedule.
    Run(RunArgs),
    /// Rank candidates from many start points and aggregate.
    Ensemble(EnsembleArgs),
    /// Sample the objective (or residual norm) on a grid over a 2-D box.
    Grid(GridArgs),
    /// List the shipped problems.
    ListProblems,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Preset problem name (see `list-problems`).
    #[arg(long)]
    problem: Option<String>,
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Algorithm family: single or two-step.
    #[arg(long)]
    family: Option<String>,
    /// Highest derivative order used by the family.
    #[arg(long)]
    jmax: Option<usize>,
    /// Momentum grid, e.g. "0,0.125,0.25".
    #[arg(long)]
    beta_grid: Option<String>,
    /// Residual tolerance.
    #[arg(long)]
    eps: Option<f64>,
    /// Iteration cap.
    #[arg(long)]
    itmax: Option<usize>,
    /// Node budget per algorithm.
    #[arg(long)]
    budget: Option<u64>,
    /// Largest step exponent (steps are ±2^-abar).
    #[arg(long)]
    abar_max: Option<u8>,
    /// Only accept strictly decreasing residuals.
    #[arg(long)]
    monotone_residual: bool,
    /// Do not stop trajectories that leave the box.
    #[arg(long)]
    no_box: bool,
    /// counted or residual-weighted.
    #[arg(long)]
    cost_mode: Option<String>,
    /// Worker threads.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory [default: config `output_dir`, then $ALGOFORGE_OUT, then `out`].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// Algorithm, e.g. "nu=(1,1,-1);beta=0".
    #[arg(long, allow_hyphen_values = true)]
    algorithm: String,
    /// Steps as sign and exponent, e.g. "-0,-0,+3".
    #[arg(long, allow_hyphen_values = true, default_value = "")]
    schedule: String,
    /// Start point, e.g. "0.1" or "-1,-1"; defaults to the problem's first.
    #[arg(long, allow_hyphen_values = true)]
    start: Option<String>,
}

#[derive(Args, Debug)]
struct EnsembleArgs {
    #[command(flatten)]
    common: Common,
    /// Start points separated by `;`, coordinates by `,`.
    #[arg(long, allow_hyphen_values = true)]
    starts: Option<String>,
    /// Restrict to the N cheapest feasible algorithms from the problem's own start.
    #[arg(long)]
    top: Option<usize>,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[command(flatten)]
    common: Common,
    /// Samples per axis.
    #[arg(long, default_value_t = 50)]
    resolution: usize,
}

enum Failure {
    Config(String),
    Internal(String),
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Internal(e.to_string())
    }
}

impl From<search::SearchError> for Failure {
    fn from(e: search::SearchError) -> Self {
        match e {
            search::SearchError::Pool(_) => Failure::Internal(e.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let outcome = std::panic::catch_unwind(|| dispatch(cli.command));
    match outcome {
        Ok(Ok(())) => EXIT_OK,
        Ok(Err(Failure::Config(msg))) => {
            eprintln!("error: {msg}");
            EXIT_CONFIG
        }
        Ok(Err(Failure::Internal(msg))) => {
            eprintln!("internal error: {msg}");
            EXIT_INTERNAL
        }
        Err(_) => EXIT_INTERNAL,
    }
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Discover(c) => cmd_discover(&c),
        Command::Run(a) => cmd_run(&a),
        Command::Ensemble(a) => cmd_ensemble(&a),
        Command::Grid(a) => cmd_grid(&a),
        Command::ListProblems => cmd_list_problems(),
    }
}

fn flags(c: &Common) -> Result<FlagOverrides, Failure> {
    let cfg = |m: String| Failure::Config(m);
    Ok(FlagOverrides {
        problem: c.problem.clone(),
        family: c
            .family
            .as_deref()
            .map(str::parse::<AlgorithmKind>)
            .transpose()
            .map_err(|e| cfg(e.to_string()))?,
        j_max: c.jmax,
        beta_grid: c.beta_grid.as_deref().map(parse_list).transpose().map_err(cfg)?,
        epsilon: c.eps,
        it_max: c.itmax,
        budget: c.budget,
        abar_max: c.abar_max,
        monotone_residual: c.monotone_residual,
        no_box: c.no_box,
        cost_mode: c
            .cost_mode
            .as_deref()
            .map(|m| match m {
                "counted" => Ok(CostMode::Counted),
                "residual-weighted" => Ok(CostMode::ResidualWeighted),
                other => Err(cfg(format!("unknown cost mode `{other}`"))),
            })
            .transpose()?,
        workers: c.workers,
        out: c.out.clone(),
    })
}

fn load(c: &Common) -> Result<Resolved, Failure> {
    let file = match &c.config {
        Some(path) => load_file(path).map_err(Failure::Config)?,
        None => RunConfig::default(),
    };
    resolve(file, &flags(c)?).map_err(Failure::Config)
}

/// Parses an algorithm string and checks it against the family's tuple length
/// and exponent range.
fn parse_algorithm(s: &str, family: &FamilyConfig) -> Result<AlgorithmSpec, Failure> {
    let alg = AlgorithmSpec::parse(s, family.kind).map_err(|e| Failure::Config(e.to_string()))?;
    let nu = &alg.nu.0;
    if nu.len() != family.j_max + 1 {
        return Err(Failure::Config(format!(
            "`{s}`: expected {} exponents for j_max = {}",
            family.j_max + 1,
            family.j_max
        )));
    }
    if let Some(k) = nu.iter().find(|k| !(family.k_min..=family.k_max).contains(k)) {
        return Err(Failure::Config(format!(
            "`{s}`: exponent {k} outside {}..={}",
            family.k_min, family.k_max
        )));
    }
    Ok(alg)
}

fn prepare_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Internal(format!("cannot create {}: {e}", dir.display())))
}

fn cmd_discover(c: &Common) -> Result<(), Failure> {
    let r = load(c)?;
    let eff = &r.effective;
    let results = search::discover(&r.problem, &eff.family, &eff.cost, &eff.search, r.workers)?;
    write_discover(&r, &results)?;
    let n_feasible = results.iter().filter(|x| x.verdict.status == Status::Feasible).count();
    println!(
        "{}: {} algorithms, {} feasible; results in {}",
        r.problem.name,
        results.len(),
        n_feasible,
        r.out_dir.display()
    );
    if let Some(best) = results.first().filter(|x| x.verdict.status == Status::Feasible) {
        println!("cheapest: {} cost {}", best.algorithm, report::real(best.verdict.cost.unwrap_or(0.0)));
    }
    Ok(())
}

fn write_discover(r: &Resolved, results: &[search::Ranked]) -> Result<(), Failure> {
    let dir = &r.out_dir;
    prepare_dir(dir)?;
    let traj_dir = dir.join("trajectories");
    if traj_dir.exists() {
        fs::remove_dir_all(&traj_dir)?;
    }
    fs::create_dir_all(&traj_dir)?;
    report::write_json(
        &dir.join("results.json"),
        &DiscoverReport {
            config: r.effective.clone(),
            results: results.to_vec(),
        },
    )?;
    report::write_results_csv(&dir.join("results.csv"), results)?;
    for x in results {
        if let Some(t) = x.verdict.best.as_ref().filter(|_| x.verdict.status == Status::Feasible) {
            report::write_trajectory_csv(&traj_dir.join(format!("{:04}.csv", x.index)), r.problem.n, t)?;
        }
    }
    Ok(())
}

fn cmd_run(a: &RunArgs) -> Result<(), Failure> {
    let r = load(&a.common)?;
    let eff = &r.effective;
    let alg = parse_algorithm(&a.algorithm, &eff.family)?;
    let schedule = parse_schedule(&a.schedule).map_err(|e| Failure::Config(e.to_string()))?;
    let start = match &a.start {
        Some(s) => parse_list(s).map_err(Failure::Config)?,
        None => r.problem.initial_points[0].clone(),
    };
    if start.len() != r.problem.n {
        return Err(Failure::Config(format!("start has dimension {}, expected {}", start.len(), r.problem.n)));
    }
    let t = search::simulate(&r.problem, &alg, &start, &schedule, &eff.cost, &eff.search)?;
    prepare_dir(&r.out_dir)?;
    report::write_trajectory_csv(&r.out_dir.join("trajectory.csv"), r.problem.n, &t)?;
    let text = report::summary(&r.problem.name, &alg.to_string(), &t);
    fs::write(r.out_dir.join("summary.txt"), &text)?;
    print!("{text}");
    Ok(())
}

fn cmd_ensemble(a: &EnsembleArgs) -> Result<(), Failure> {
    let r = load(&a.common)?;
    let eff = &r.effective;
    let starts = match (&a.starts, &r.file.starts) {
        (Some(s), _) => parse_points(s).map_err(Failure::Config)?,
        (None, Some(s)) => s.clone(),
        (None, None) => r.problem.initial_points.clone(),
    };
    if starts.is_empty() {
        return Err(Failure::Config("no start points".into()));
    }
    for s in &starts {
        if s.len() != r.problem.n || !r.problem.in_box(s) {
            return Err(Failure::Config(format!("start {s:?} is not inside the problem box")));
        }
    }
    let candidates: Vec<AlgorithmSpec> = if let Some(list) = &r.file.shortlist {
        list.iter().map(|s| parse_algorithm(s, &eff.family)).collect::<Result<_, _>>()?
    } else if let Some(top) = a.top.or(r.file.shortlist_top) {
        let all = enumerate_algorithms(&eff.family);
        let base = search::rank_candidates(&r.problem, &all, &r.problem.initial_points[0], &eff.cost, &eff.search, r.workers)?;
        base.iter()
            .filter(|x| x.verdict.status == Status::Feasible)
            .take(top)
            .map(|x| all[x.index].clone())
            .collect()
    } else {
        enumerate_algorithms(&eff.family)
    };
    let result = search::ensemble(&r.problem, &starts, &candidates, &eff.cost, &eff.search, r.workers)?;

    prepare_dir(&r.out_dir)?;
    report::write_ensemble_csv(&r.out_dir.join("ensemble.csv"), &result.starts, &result.per_start)?;
    report::write_aggregate_csv(&r.out_dir.join("aggregate.csv"), &result.aggregate)?;
    report::write_json(
        &r.out_dir.join("ensemble.json"),
        &EnsembleReport {
            config: eff.clone(),
            candidates: candidates.iter().map(|c| c.to_string()).collect(),
            starts: result.starts.clone(),
            per_start: result.per_start.clone(),
            aggregate: result.aggregate.clone(),
        },
    )?;
    println!(
        "{}: {} candidates over {} starts; results in {}",
        r.problem.name,
        candidates.len(),
        starts.len(),
        r.out_dir.display()
    );
    Ok(())
}

fn cmd_grid(a: &GridArgs) -> Result<(), Failure> {
    let r = load(&a.common)?;
    let p = &r.problem;
    if p.n != 2 {
        return Err(Failure::Config(format!("grid needs a 2-D problem, `{}` has n = {}", p.name, p.n)));
    }
    if a.resolution < 2 {
        return Err(Failure::Config("resolution must be at least 2".into()));
    }
    let axis = |i: usize| -> Vec<f64> {
        let (lo, hi) = (p.box_lo[i], p.box_hi[i]);
        let m = (a.resolution - 1) as f64;
        (0..a.resolution)
            .map(|k| if k + 1 == a.resolution { hi } else { lo + (hi - lo) * k as f64 / m })
            .collect()
    };
    let (xs, ys) = (axis(0), axis(1));
    let mut rows = Vec::with_capacity(xs.len() * ys.len());
    for &x1 in &xs {
        for &x2 in &ys {
            let f = match p.kind {
                ProblemKind::Minimization => p.exprs[0].eval(&[x1, x2]).ok(),
                ProblemKind::RootFinding => p
                    .exprs
                    .iter()
                    .map(|e| e.eval(&[x1, x2]).map(f64::abs))
                    .collect::<Result<Vec<_>, _>>()
                    .ok()
                    .map(|v| v.into_iter().fold(0.0, f64::max)),
            };
            rows.push((x1, x2, f));
        }
    }
    prepare_dir(&r.out_dir)?;
    report::write_grid_csv(&r.out_dir.join("grid.csv"), &rows)?;
    println!("{}: {} grid rows in {}", p.name, rows.len(), r.out_dir.display());
    Ok(())
}

fn fmt_point(x: &[f64]) -> String {
    format!("({})", x.iter().map(|v| report::real(*v)).collect::<Vec<_>>().join(","))
}

fn cmd_list_problems() -> Result<(), Failure> {
    for name in PRESETS {
        let p = builtin(name).map_err(|e| Failure::Internal(e.to_string()))?;
        let kind = match p.kind {
            ProblemKind::RootFinding => "root-finding",
            ProblemKind::Minimization => "minimization",
        };
        let starts: Vec<String> = p.initial_points.iter().map(|x| fmt_point(x)).collect();
        println!(
            "{name}  kind={kind} n={} box=[{},{}] start={} it_max={} j_max={} eps={}  f: {}",
            p.n,
            fmt_point(&p.box_lo),
            fmt_point(&p.box_hi),
            starts.join(" "),
            p.it_max,
            p.j_max,
            report::real(p.epsilon),
            p.exprs.iter().map(|e| e.source()).collect::<Vec<_>>().join(" ; ")
        );
    }
    Ok(())
}

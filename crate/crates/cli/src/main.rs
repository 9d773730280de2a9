mod output;
mod points;

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use loophole_core::bell::{resolve_matrix, save_matrix, verify_threshold, BellInequality, Direction, ThresholdProof};
use loophole_core::detect::{
    apply_detection_map, compare_tables, simulate_protocol, strategy_statistics, Efficiency, SimulationComparison,
    StrategyKind, StrategyParams,
};
use loophole_core::lp::{local_weight_with, LocalWeightResult, Solver};
use loophole_core::rational::{self, parse_rational, Rational};
use loophole_core::threshold::{
    default_eps, default_gap, scenario_threshold, CandidateReport, Sample, ThresholdMode, ThresholdOptions,
    ThresholdResult,
};
use loophole_core::vertices::{enumerate_binary_extremals, orbit_representatives, GFunction};
use loophole_core::{Distribution, Scenario};
use serde::Serialize;

use crate::points::NamedPoint;

const DEFAULT_CAP: u128 = 1 << 24;

fn parse_rat(s: &str) -> std::result::Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

#[derive(Parser)]
#[command(name = "loophole", version, about = "Detection-loophole thresholds for no-signalling boxes")]
struct Cli {
    /// Render rationals as decimal numbers instead of "num/den" strings
    #[arg(long, global = true)]
    float: bool,

    /// Worker threads for independent points and vertices
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Random seed for simulation
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Commands,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Full,
    Cg,
    Auto,
}

impl From<SolverArg> for Solver {
    fn from(s: SolverArg) -> Solver {
        match s {
            SolverArg::Full => Solver::Full,
            SolverArg::Cg => Solver::ColumnGeneration,
            SolverArg::Auto => Solver::Auto,
        }
    }
}

#[derive(Subcommand)]
enum Commands {
    /// Generate a distribution: `pr A B`, `uniform A B [NA NB]`, `gfun FILE` or an alias such as `pr33`
    Gen {
        #[arg(required = true, num_args = 1..)]
        spec: Vec<String>,
        /// Output file (stdout if absent)
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Apply the detection-efficiency map to a distribution
    DetectMap {
        #[arg(required = true, num_args = 1..)]
        point: Vec<String>,
        /// Detection efficiency
        #[arg(long, value_parser = parse_rat)]
        eta: Rational,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Exact local weight with its dual Bell certificate
    LocalWeight {
        #[arg(required = true, num_args = 1..)]
        point: Vec<String>,
        #[arg(long, value_enum, default_value = "auto")]
        solver: SolverArg,
        /// Write the dual inequality in matrix format
        #[arg(long)]
        dual_out: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Bracket or certify the detection threshold of one or more points
    Threshold {
        /// Distribution file, alias, `pr A B`, `gfun FILE` or `enumerate A B`
        #[arg(required = true, num_args = 1..)]
        point: Vec<String>,
        /// Candidate threshold to certify
        #[arg(long, value_parser = parse_rat)]
        candidate: Option<Rational>,
        /// Offset above the candidate that must be nonlocal
        #[arg(long, value_parser = parse_rat)]
        eps: Option<Rational>,
        /// Bracket width at which bisection stops
        #[arg(long, value_parser = parse_rat)]
        gap: Option<Rational>,
        #[arg(long, value_enum, default_value = "auto")]
        solver: SolverArg,
        /// Keep one representative per relabeling orbit of enumerated points
        #[arg(long)]
        orbits: bool,
        /// Directory for certificate files
        #[arg(long)]
        certificates: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: u128,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Monte Carlo run of a hidden-variable strategy against its closed form
    Simulate {
        #[arg(long)]
        strategy: StrategyKind,
        /// G-function point: alias, G-matrix file or distribution file
        #[arg(long)]
        g: String,
        #[arg(long, value_parser = parse_rat)]
        alpha: Rational,
        #[arg(long, value_parser = parse_rat)]
        beta: Rational,
        /// Probability that each device keeps a valid output
        #[arg(long, value_parser = parse_rat)]
        keep: Option<Rational>,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Verify that an inequality certifies a threshold for a point
    VerifyInequality {
        /// Matrix file; bundled inequalities are found by file name
        inequality: PathBuf,
        #[arg(long)]
        point: String,
        #[arg(long, value_parser = parse_rat)]
        eta_star: Rational,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: u128,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Local bound of an inequality over deterministic strategies
    LocalBound {
        inequality: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: u128,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Enumerate the nonlocal extremal boxes of a binary scenario
    Enumerate {
        ma: usize,
        mb: usize,
        /// Keep one representative per relabeling orbit
        #[arg(long)]
        orbits: bool,
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: u128,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Serialize)]
struct LocalWeightReport<'a> {
    point: &'a str,
    scenario: Scenario,
    local: bool,
    #[serde(flatten)]
    result: &'a LocalWeightResult,
    dual_file: Option<String>,
}

#[derive(Serialize)]
struct PointThreshold {
    id: String,
    multiplicity: usize,
    #[serde(with = "rational::serde_str")]
    lower: Rational,
    #[serde(with = "rational::serde_opt")]
    upper: Option<Rational>,
    #[serde(with = "rational::serde_opt")]
    gap: Option<Rational>,
    candidate: Option<CandidateReport>,
    trace: Vec<Sample>,
    certificate_local: Option<String>,
    certificate_nonlocal: Option<String>,
}

#[derive(Serialize)]
struct ThresholdReport {
    scenario: Scenario,
    #[serde(with = "rational::serde_str")]
    lower: Rational,
    #[serde(with = "rational::serde_str")]
    upper: Rational,
    argmin: String,
    verdict: Option<&'static str>,
    points: Vec<PointThreshold>,
}

#[derive(Serialize)]
struct SimulationReport {
    strategy: StrategyKind,
    point: String,
    params: StrategyParams,
    scenario: Scenario,
    trials: u64,
    seed: u64,
    counts: Vec<u64>,
    input_counts: Vec<u64>,
    empirical: Vec<f64>,
    std_errors: Vec<f64>,
    #[serde(with = "rational::serde_vec")]
    closed_form: Vec<Rational>,
    comparison: SimulationComparison,
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    inequality: String,
    point: &'a str,
    #[serde(flatten)]
    proof: &'a ThresholdProof,
}

#[derive(Serialize)]
struct LocalBoundReport {
    inequality: String,
    scenario: Scenario,
    direction: Direction,
    #[serde(with = "rational::serde_str")]
    declared_bound: Rational,
    #[serde(with = "rational::serde_str")]
    local_bound: Rational,
    tight: bool,
    sound: bool,
    alice: Vec<usize>,
    bob: Vec<usize>,
}

#[derive(Serialize)]
struct EnumerateReport {
    scenario: Scenario,
    count: usize,
    orbits: Option<usize>,
    multiplicities: Option<Vec<usize>>,
    vertices: Vec<Distribution>,
}

fn file_id(path: &str) -> String {
    let stem = Path::new(path).file_stem().and_then(|s| s.to_str()).unwrap_or(path);
    stem.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

fn reduce_orbits(points: Vec<NamedPoint>) -> Result<Vec<(NamedPoint, usize)>> {
    let gs: Vec<GFunction> = points
        .iter()
        .map(|p| GFunction::from_distribution(&p.point).with_context(|| format!("{} is not of G-function form", p.id)))
        .collect::<Result<_>>()?;
    Ok(orbit_representatives(&gs)
        .into_iter()
        .enumerate()
        .map(|(i, (g, n))| (NamedPoint { id: format!("orbit-{i}"), point: g.to_distribution() }, n))
        .collect())
}

fn write_certificates(dir: &Path, id: &str, r: &ThresholdResult, float: bool) -> Result<(String, Option<String>)> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let local = dir.join(format!("{id}.local.json"));
    output::emit(&r.certificate_local, float, Some(&local))?;
    let nonlocal = match &r.certificate_nonlocal {
        Some(c) => {
            let path = dir.join(format!("{id}.dual.ineq"));
            save_matrix(&BellInequality::from_dual(c.scenario, c.dual.clone())?, &path)?;
            Some(path.display().to_string())
        }
        None => None,
    };
    Ok((local.display().to_string(), nonlocal))
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.jobs {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring worker threads")?;
    }
    let float = cli.float;
    match cli.command {
        Commands::Gen { spec, output } => {
            let p = points::resolve_one(&spec)?;
            p.point.validate()?;
            output::emit(&p.point, float, output.as_deref())
        }
        Commands::DetectMap { point, eta, output } => {
            let p = points::resolve_one(&point)?;
            let q = apply_detection_map(&p.point, &Efficiency::new(eta)?)?;
            output::emit(&q, float, output.as_deref())
        }
        Commands::LocalWeight { point, solver, dual_out, output } => {
            let p = points::resolve_one(&point)?;
            p.point.validate()?;
            let r = local_weight_with(&p.point, solver.into())?;
            let dual_file = match &dual_out {
                Some(path) => {
                    save_matrix(&BellInequality::from_dual(p.point.scenario(), r.dual.clone())?, path)?;
                    Some(path.display().to_string())
                }
                None => None,
            };
            let report =
                LocalWeightReport { point: &p.id, scenario: p.point.scenario(), local: r.is_local(), result: &r, dual_file };
            output::emit(&report, float, output.as_deref())
        }
        Commands::Threshold { point, candidate, eps, gap, solver, orbits, certificates, cap, output } => {
            if eps.is_some() && candidate.is_none() {
                bail!("--eps requires --candidate");
            }
            let mut pts = points::resolve(&point, cap)?;
            if let [single] = point.as_slice() {
                if points::parse_alias(single).is_none() {
                    pts[0].id = file_id(single);
                }
            }
            let weighted: Vec<(NamedPoint, usize)> =
                if orbits { reduce_orbits(pts)? } else { pts.into_iter().map(|p| (p, 1)).collect() };
            let certify = candidate.is_some();
            let mode = match candidate {
                Some(eta) => ThresholdMode::Candidate { eta, eps: eps.unwrap_or_else(default_eps) },
                None => ThresholdMode::Bracket,
            };
            let opts = ThresholdOptions { gap: gap.unwrap_or_else(default_gap), mode, solver: solver.into() };
            let dists: Vec<Distribution> = weighted.iter().map(|(p, _)| p.point.clone()).collect();
            let st = scenario_threshold(&dists, &opts)?;
            let mut reports = Vec::with_capacity(st.points.len());
            for ((p, n), r) in weighted.iter().zip(&st.points) {
                let (local, nonlocal) = match &certificates {
                    Some(dir) => {
                        let (l, n) = write_certificates(dir, &p.id, r, float)?;
                        (Some(l), n)
                    }
                    None => (None, None),
                };
                reports.push(PointThreshold {
                    id: p.id.clone(),
                    multiplicity: *n,
                    lower: r.lower.clone(),
                    upper: r.upper.clone(),
                    gap: r.gap(),
                    candidate: r.candidate.clone(),
                    trace: r.trace.clone(),
                    certificate_local: local,
                    certificate_nonlocal: nonlocal,
                });
            }
            let verdict = certify.then(|| {
                if reports.iter().all(|r| r.candidate.as_ref().is_some_and(|c| c.certified)) {
                    "PASS"
                } else {
                    "FAIL"
                }
            });
            let report = ThresholdReport {
                scenario: dists[0].scenario(),
                lower: st.lower,
                upper: st.upper,
                argmin: weighted[st.argmin].0.id.clone(),
                verdict,
                points: reports,
            };
            output::emit(&report, float, output.as_deref())
        }
        Commands::Simulate { strategy, g, alpha, beta, keep, trials, output } => {
            let p = points::resolve_one(std::slice::from_ref(&g))?;
            let params = match keep {
                Some(k) => StrategyParams::with_keep(alpha, beta, k)?,
                None => StrategyParams::new(alpha, beta)?,
            };
            let sim = simulate_protocol(strategy, &p.point, &params, trials, cli.seed)?;
            let exact = strategy_statistics(strategy, &p.point, &params)?;
            let comparison = compare_tables(&sim, &exact)?;
            let report = SimulationReport {
                strategy,
                point: p.id,
                params,
                scenario: sim.scenario,
                trials: sim.trials,
                seed: sim.seed,
                empirical: sim.frequencies(),
                std_errors: sim.std_errors(),
                counts: sim.counts,
                input_counts: sim.input_counts,
                closed_form: exact.into_vector(),
                comparison,
            };
            output::emit(&report, float, output.as_deref())
        }
        Commands::VerifyInequality { inequality, point, eta_star, cap, output } => {
            let s = resolve_matrix(&inequality)?;
            let p = points::resolve_one(std::slice::from_ref(&point))?;
            let proof = verify_threshold(&s, &p.point, &eta_star, cap)?;
            let report = VerifyReport { inequality: inequality.display().to_string(), point: &p.id, proof: &proof };
            output::emit(&report, float, output.as_deref())
        }
        Commands::LocalBound { inequality, cap, output } => {
            let s = resolve_matrix(&inequality)?;
            let (local_bound, vertex) = s.local_optimum(cap)?;
            let sound = match s.direction {
                Direction::Geq => local_bound >= s.bound,
                Direction::Leq => local_bound <= s.bound,
            };
            let report = LocalBoundReport {
                inequality: inequality.display().to_string(),
                scenario: s.scenario,
                direction: s.direction,
                tight: local_bound == s.bound,
                sound,
                declared_bound: s.bound,
                local_bound,
                alice: vertex.alice,
                bob: vertex.bob,
            };
            output::emit(&report, float, output.as_deref())
        }
        Commands::Enumerate { ma, mb, orbits, cap, output } => {
            let s = Scenario::binary(ma, mb)?;
            let ext = enumerate_binary_extremals(s, cap)?;
            let count = ext.len();
            let report = if orbits {
                let named = ext.into_iter().map(|point| NamedPoint { id: String::new(), point }).collect();
                let reps = reduce_orbits(named)?;
                EnumerateReport {
                    scenario: s,
                    count,
                    orbits: Some(reps.len()),
                    multiplicities: Some(reps.iter().map(|(_, n)| *n).collect()),
                    vertices: reps.into_iter().map(|(p, _)| p.point).collect(),
                }
            } else {
                EnumerateReport { scenario: s, count, orbits: None, multiplicities: None, vertices: ext }
            };
            output::emit(&report, float, output.as_deref())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("{}", output::error_json(&e));
        std::process::exit(1);
    }
}

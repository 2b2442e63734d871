//! One entry point for the whole laboratory: exact lattice tables,
//! subsequence geometry scans, bound algebra, tail-series tables, Monte
//! Carlo simulation runs, and smooth-transform experiments. Every run
//! writes bit-stable CSV/JSON-lines outputs plus a digest manifest.

mod output;

use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};

use lsl_core::bounds::{self, BoundParams, SeriesKind, TruncationReading};
use lsl_core::delta::TransformKind;
use lsl_core::field::Distribution;
use lsl_core::geometry::{
    disjointness_check, gap_stats, overlap_check, SubsequenceKind, SubsequenceSpec,
};
use lsl_core::harness::{self, ExperimentConfig, ExperimentKind};
use lsl_core::lattice::CountTable;
use lsl_core::moments::{moment_series_equivalence, tail_series, tail_series_table, TailSeriesSpec};

use output::{coords_label, fmt_f64, jsonl, now_ms, Csv, OutputSet};

#[derive(Parser)]
#[command(name = "lsl-lab", version, about = "window-sum limit-law laboratory")]
struct Cli {
    /// Output directory (the LSL_LAB_OUTPUT_DIR environment variable wins).
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Worker thread cap for parallel sections.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact d(j)/M(j) tables with the first-order ratio.
    Lattice(LatticeArgs),
    /// Subsequence terms, gaps and overlap/disjointness scans.
    Geometry(GeometryArgs),
    /// Truncation levels, bound exponents and series verdicts.
    Bounds(BoundsArgs),
    /// Divisor-weighted tail series and the moment equivalence.
    Moments(MomentsArgs),
    /// Monte Carlo experiment runs driven by a TOML config.
    Simulate(SimulateArgs),
    /// Smooth-transform experiments with predicted limit points.
    Delta(DeltaArgs),
}

#[derive(Args)]
struct LatticeArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    j_max: u64,
    #[arg(long, default_value_t = 1)]
    j_min: u64,
}

#[derive(Args)]
struct GeometryArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    i_max: u64,
    #[arg(long)]
    i_min: Option<u64>,
    /// lambda | a | a-star
    #[arg(long, default_value = "lambda")]
    set: String,
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.5)]
    gamma: f64,
    #[arg(long, default_value_t = 0.5)]
    eta: f64,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// |n| at which the truncation level and thresholds are printed.
    #[arg(long, default_value_t = 10_000)]
    size: u64,
}

#[derive(Args)]
struct MomentsArgs {
    /// normal | rademacher | symmetrized-pareto | point-mass | uniform-centered
    #[arg(long)]
    family: String,
    /// sigma / tail exponent / atom value / half width, per family.
    #[arg(long, default_value_t = 1.0)]
    param: f64,
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0)]
    kappa: f64,
    #[arg(long)]
    d: usize,
    #[arg(long)]
    j_max: u64,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    /// lsl | subsequence | diagonal | max-window | negligibility |
    /// necessity | gap-discrepancy | gaussian-heuristic (overrides config).
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long)]
    replications: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    cell_budget: Option<u64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    checkpoints: Option<Vec<u64>>,
    /// Bracketing indices for the gap-discrepancy run.
    #[arg(long, value_delimiter = ',', default_values_t = [50u64, 200, 800])]
    js: Vec<u64>,
}

#[derive(Args)]
struct DeltaArgs {
    /// identity | square | cube | exp | log1p | cosh | poly
    #[arg(long)]
    g: String,
    /// Coefficients c0,c1,... when --g poly.
    #[arg(long, value_delimiter = ',')]
    poly: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.0)]
    mu: f64,
    /// lsl (windowed sums, single log) | lil (partial sums, iterated log)
    #[arg(long, default_value = "lsl")]
    law: String,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long)]
    budget: u64,
    #[arg(long, default_value_t = 20)]
    replications: u64,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
}

struct Failure {
    code: i32,
    msg: String,
}

impl Failure {
    fn config(msg: impl Into<String>) -> Self {
        Failure {
            code: 2,
            msg: msg.into(),
        }
    }
}

impl From<lsl_core::Error> for Failure {
    fn from(e: lsl_core::Error) -> Self {
        let code = match e {
            lsl_core::Error::CellBudgetExceeded { .. } => 3,
            _ => 2,
        };
        Failure {
            code,
            msg: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: 2,
            msg: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure {
            code: 2,
            msg: e.to_string(),
        }
    }
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    0
                }
                ErrorKind::InvalidSubcommand => {
                    let _ = e.print();
                    64
                }
                _ => {
                    let _ = e.print();
                    2
                }
            };
        }
    };
    if let Some(t) = cli.threads {
        // ignore failure: the pool may already exist in-process (tests)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    let dir = std::env::var_os("LSL_LAB_OUTPUT_DIR")
        .map(PathBuf::from)
        .or(cli.output_dir)
        .unwrap_or_else(|| PathBuf::from("."));
    let started = now_ms();
    let result = match &cli.cmd {
        Cmd::Lattice(a) => cmd_lattice(a, &dir, started),
        Cmd::Geometry(a) => cmd_geometry(a, &dir, started),
        Cmd::Bounds(a) => cmd_bounds(a, &dir, started),
        Cmd::Moments(a) => cmd_moments(a, &dir, started),
        Cmd::Simulate(a) => cmd_simulate(a, &dir, started),
        Cmd::Delta(a) => cmd_delta(a, &dir, started),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            f.code
        }
    }
}

fn cmd_lattice(a: &LatticeArgs, dir: &Path, started: u128) -> Result<(), Failure> {
    if a.d == 0 || a.j_max < a.j_min || a.j_min == 0 {
        return Err(Failure::config("need d >= 1 and 1 <= j-min <= j-max"));
    }
    let table = CountTable::new(a.d, a.j_max)?;
    let mut csv = Csv::new("j,dj,Mj,ratio");
    for j in a.j_min..=a.j_max {
        csv.row([
            j.to_string(),
            table.count(j).to_string(),
            table.cumulative(j).to_string(),
            fmt_f64(table.piltz_ratio(j)),
        ]);
    }
    let mut out = OutputSet::new(dir)?;
    out.write("lattice.csv", &csv.into_string())?;
    out.finish(
        "lattice",
        serde_json::json!({"d": a.d, "j_min": a.j_min, "j_max": a.j_max}),
        started,
    )?;
    Ok(())
}

fn cmd_geometry(a: &GeometryArgs, dir: &Path, started: u128) -> Result<(), Failure> {
    let (kind, default_min) = match a.set.as_str() {
        "lambda" => (SubsequenceKind::Lambda, 3),
        "a" => (SubsequenceKind::A, 1),
        "a-star" => (SubsequenceKind::AStar, 1),
        other => return Err(Failure::config(format!("unknown set '{other}'"))),
    };
    let i_min = a.i_min.unwrap_or(default_min).max(1);
    if a.i_max < i_min {
        return Err(Failure::config("i-max must be >= i-min"));
    }
    let spec = SubsequenceSpec::new(kind, 1, a.alpha)
        .map_err(Failure::from)?
        .with_beta(a.beta);
    let is_lambda = kind == SubsequenceKind::Lambda;
    let mut csv = Csv::new("i,term,gap,predicted_gap,ratio,overlap_ok,disjoint_ok");
    for i in i_min..=a.i_max {
        let term = spec.real_term(i);
        let (gap, predicted, ratio, overlap_ok) = if is_lambda && i >= 3 {
            let g = &gap_stats(&spec, i..=i)?[0];
            let o = overlap_check(&spec, i..=i)?;
            (
                fmt_f64(g.gap),
                fmt_f64(g.predicted_gap),
                fmt_f64(g.ratio),
                o.real.all_hold.to_string(),
            )
        } else {
            let gap = spec.real_term(i + 1) - term;
            (fmt_f64(gap), String::new(), String::new(), String::new())
        };
        let disjoint_ok = if is_lambda {
            String::new()
        } else {
            disjointness_check(&spec, i..=i)?.real.all_hold.to_string()
        };
        csv.row([
            i.to_string(),
            fmt_f64(term),
            gap,
            predicted,
            ratio,
            overlap_ok,
            disjoint_ok,
        ]);
    }
    let mut out = OutputSet::new(dir)?;
    out.write("geometry.csv", &csv.into_string())?;
    out.finish(
        "geometry",
        serde_json::json!({
            "set": a.set, "alpha": a.alpha, "beta": a.beta,
            "i_min": i_min, "i_max": a.i_max
        }),
        started,
    )?;
    Ok(())
}

fn cmd_bounds(a: &BoundsArgs, dir: &Path, started: u128) -> Result<(), Failure> {
    let p = BoundParams::new(a.sigma, a.delta, a.epsilon, a.gamma, a.eta)?;
    let size = a.size as f64;
    let b_displayed = bounds::truncation_level(&p, TruncationReading::Displayed, size, a.alpha)?;
    let b_alternative =
        bounds::truncation_level(&p, TruncationReading::Alternative, size, a.alpha)?;
    let threshold = bounds::upper_threshold(&p, size, a.alpha);
    let upper = bounds::upper_exponent(&p);
    let lower = bounds::lower_exponent(&p);
    let upper_scaled = bounds::upper_exponent_scaled(&p, a.beta);
    let lower_scaled = bounds::lower_exponent_scaled(&p, a.beta);
    let verdicts = [
        ("lambda", bounds::series_verdict(upper, SeriesKind::Lambda, a.alpha, a.beta)?),
        ("a", bounds::series_verdict(lower, SeriesKind::A, a.alpha, a.beta)?),
        (
            "lambda-star",
            bounds::series_verdict(upper_scaled, SeriesKind::LambdaStar, a.alpha, a.beta)?,
        ),
        (
            "a-star",
            bounds::series_verdict(lower_scaled, SeriesKind::AStar, a.alpha, a.beta)?,
        ),
    ];
    let mut csv = Csv::new("quantity,value");
    let mut push = |name: &str, value: String| {
        println!("{name:<28} {value}");
        csv.row([name.to_string(), value]);
    };
    push("truncation_level_displayed", fmt_f64(b_displayed));
    push("truncation_level_alternative", fmt_f64(b_alternative));
    push("upper_threshold", fmt_f64(threshold));
    push("upper_exponent", fmt_f64(upper));
    push("lower_exponent", fmt_f64(lower));
    push("upper_exponent_scaled", fmt_f64(upper_scaled));
    push("lower_exponent_scaled", fmt_f64(lower_scaled));
    push(
        "critical_epsilon",
        fmt_f64(bounds::critical_epsilon(a.sigma, a.delta, a.alpha, a.beta)),
    );
    for (set, v) in verdicts {
        push(&format!("series_verdict_{set}"), format!("{v:?}").to_lowercase());
    }
    let mut out = OutputSet::new(dir)?;
    out.write("bounds.csv", &csv.into_string())?;
    out.finish(
        "bounds",
        serde_json::json!({
            "sigma": a.sigma, "delta": a.delta, "epsilon": a.epsilon,
            "gamma": a.gamma, "eta": a.eta, "alpha": a.alpha,
            "beta": a.beta, "size": a.size
        }),
        started,
    )?;
    Ok(())
}

fn parse_family(family: &str, param: f64) -> Result<Distribution, Failure> {
    let d = match family {
        "normal" => Distribution::Normal { sigma: param },
        "rademacher" => Distribution::Rademacher,
        "symmetrized-pareto" => Distribution::SymmetrizedPareto { tail: param },
        "point-mass" => Distribution::PointMass { value: param },
        "uniform-centered" => Distribution::UniformCentered { half_width: param },
        other => return Err(Failure::config(format!("unknown family '{other}'"))),
    };
    d.validate()?;
    Ok(d)
}

fn cmd_moments(a: &MomentsArgs, dir: &Path, started: u128) -> Result<(), Failure> {
    let distribution = parse_family(&a.family, a.param)?;
    let spec = TailSeriesSpec {
        d: a.d,
        alpha: a.alpha,
        kappa: a.kappa,
        distribution,
        j_max: a.j_max,
    };
    let rows = tail_series_table(&spec)?;
    let mut csv = Csv::new("j,dj,term,partial_sum");
    for r in &rows {
        csv.row([
            r.j.to_string(),
            r.dj.to_string(),
            fmt_f64(r.term),
            fmt_f64(r.partial_sum),
        ]);
    }
    let summary = tail_series(&spec)?;
    let equivalence = moment_series_equivalence(&distribution, a.alpha, a.kappa, a.d)?;
    println!(
        "partial_sum {}  tail_growth {}  verdict {:?}  moment_finite {}  agree {}",
        fmt_f64(summary.partial_sum),
        fmt_f64(summary.tail_growth),
        summary.verdict,
        equivalence.moment_finite,
        equivalence.agree
    );
    let mut out = OutputSet::new(dir)?;
    out.write("moments.csv", &csv.into_string())?;
    out.finish(
        "moments",
        serde_json::json!({
            "family": a.family, "param": a.param, "alpha": a.alpha,
            "kappa": a.kappa, "d": a.d, "j_max": a.j_max
        }),
        started,
    )?;
    Ok(())
}

fn parse_kind(name: &str) -> Result<ExperimentKind, Failure> {
    Ok(match name {
        "lsl" | "lsl_full" => ExperimentKind::LslFull,
        "subsequence" | "lsl_subsequence" => ExperimentKind::LslSubsequence,
        "diagonal" | "lsl_diagonal" => ExperimentKind::LslDiagonal,
        "max-window" | "max_window" => ExperimentKind::MaxWindow,
        "negligibility" => ExperimentKind::Negligibility,
        "necessity" => ExperimentKind::Necessity,
        "gap-discrepancy" | "gap_discrepancy" => ExperimentKind::GapDiscrepancy,
        "gaussian-heuristic" | "gaussian_heuristic" => ExperimentKind::GaussianHeuristic,
        other => return Err(Failure::config(format!("unknown experiment kind '{other}'"))),
    })
}

fn cmd_simulate(a: &SimulateArgs, dir: &Path, started: u128) -> Result<(), Failure> {
    let raw = std::fs::read_to_string(&a.config)
        .map_err(|e| Failure::config(format!("cannot read {}: {e}", a.config.display())))?;
    let mut config: ExperimentConfig =
        toml::from_str(&raw).map_err(|e| Failure::config(format!("bad config: {e}")))?;
    if let Some(kind) = &a.kind {
        config.kind = parse_kind(kind)?;
    }
    if let Some(b) = a.budget {
        config.budget = b;
    }
    if let Some(r) = a.replications {
        config.replications = r;
    }
    if let Some(s) = a.seed {
        config.field.master_seed = s;
    }
    if let Some(cb) = a.cell_budget {
        config.cell_budget = cb;
    }
    if let Some(alpha) = a.alpha {
        config.index_set.alpha = alpha;
    }
    if let Some(beta) = a.beta {
        config.index_set.beta = beta;
    }
    if let Some(cps) = &a.checkpoints {
        config.checkpoints = cps.clone();
    }
    config.validate()?;
    let config_json = serde_json::to_value(&config)?;
    let mut out = OutputSet::new(dir)?;
    match config.kind {
        ExperimentKind::LslFull
        | ExperimentKind::LslSubsequence
        | ExperimentKind::LslDiagonal
        | ExperimentKind::MaxWindow => {
            let run = match config.kind {
                ExperimentKind::LslFull => harness::run_lsl(&config)?,
                ExperimentKind::LslSubsequence => harness::run_subsequence_lsl(&config)?,
                ExperimentKind::LslDiagonal => harness::run_diagonal_lsl(&config)?,
                _ => harness::run_max_window(&config)?,
            };
            let mut csv = Csv::new("size,coords,stat,runmax,runmin");
            for r in &run.trajectory.records {
                csv.row([
                    r.size.to_string(),
                    coords_label(&r.coords),
                    fmt_f64(r.stat),
                    fmt_f64(r.running_max),
                    fmt_f64(r.running_min),
                ]);
            }
            out.write("trajectory.csv", &csv.into_string())?;
            out.write("summary.jsonl", &jsonl(&run.summaries)?)?;
            let mut cp = Csv::new("replication,budget,runmax");
            for (rep, maxes) in run.checkpoint_maxes.iter().enumerate() {
                for (c, &m) in maxes.iter().enumerate() {
                    cp.row([
                        rep.to_string(),
                        run.checkpoints[c].to_string(),
                        fmt_f64(m),
                    ]);
                }
            }
            out.write("checkpoints.csv", &cp.into_string())?;
        }
        ExperimentKind::Negligibility => {
            let summaries = harness::run_negligibility(&config, 10_000)?;
            out.write("negligibility.jsonl", &jsonl(&summaries)?)?;
        }
        ExperimentKind::Necessity => {
            let run = harness::run_necessity(&config)?;
            let mut csv = Csv::new("size,stat,runmax");
            for r in &run.records {
                csv.row([r.size.to_string(), fmt_f64(r.stat), fmt_f64(r.running_max)]);
            }
            out.write("necessity.csv", &csv.into_string())?;
            let mut cp = Csv::new("replication,budget,runmax");
            for (rep, maxes) in run.checkpoint_maxes.iter().enumerate() {
                for (c, &m) in maxes.iter().enumerate() {
                    cp.row([
                        rep.to_string(),
                        run.checkpoints[c].to_string(),
                        fmt_f64(m),
                    ]);
                }
            }
            out.write("checkpoints.csv", &cp.into_string())?;
        }
        ExperimentKind::GapDiscrepancy => {
            let records = harness::run_gap_discrepancy(&config, &a.js, 8)?;
            let mut csv = Csv::new("j,replication,normalized_max");
            for r in &records {
                csv.row([
                    r.j.to_string(),
                    r.replication.to_string(),
                    fmt_f64(r.normalized_max),
                ]);
            }
            out.write("gap_discrepancy.csv", &csv.into_string())?;
        }
        ExperimentKind::GaussianHeuristic => {
            let run = harness::run_gaussian_heuristic(&config)?;
            for (name, traj) in [
                ("heuristic_field.csv", &run.field_trajectory),
                ("heuristic_gaussian.csv", &run.gaussian_trajectory),
            ] {
                let mut csv = Csv::new("size,coords,stat,runmax,runmin");
                for r in &traj.records {
                    csv.row([
                        r.size.to_string(),
                        coords_label(&r.coords),
                        fmt_f64(r.stat),
                        fmt_f64(r.running_max),
                        fmt_f64(r.running_min),
                    ]);
                }
                out.write(name, &csv.into_string())?;
            }
        }
        ExperimentKind::Delta => {
            return Err(Failure::config(
                "transform experiments run through the delta subcommand",
            ));
        }
    }
    out.finish("simulate", config_json, started)?;
    Ok(())
}

fn cmd_delta(a: &DeltaArgs, dir: &Path, started: u128) -> Result<(), Failure> {
    let kind = match a.g.as_str() {
        "identity" => TransformKind::Identity,
        "square" => TransformKind::Square,
        "cube" => TransformKind::Cube,
        "exp" => TransformKind::Exp,
        "log1p" => TransformKind::Log1pShifted,
        "cosh" => TransformKind::CoshMinusOne,
        "poly" => TransformKind::Polynomial {
            coeffs: a
                .poly
                .clone()
                .ok_or_else(|| Failure::config("--g poly needs --poly coefficients"))?,
        },
        other => return Err(Failure::config(format!("unknown transform '{other}'"))),
    };
    let config = ExperimentConfig {
        kind: ExperimentKind::Delta,
        field: lsl_core::FieldSpec::new(Distribution::Normal { sigma: a.sigma }, a.seed),
        index_set: SubsequenceSpec::new(SubsequenceKind::Lambda, 1, a.alpha)?,
        sigma: a.sigma,
        budget: a.budget,
        replications: a.replications,
        cell_budget: 1 << 24,
        checkpoints: vec![],
        sqrt2: true,
        bounds: None,
        reading: TruncationReading::Displayed,
        two_sided: false,
    };
    let (predicted, summaries) = match a.law.as_str() {
        "lsl" => harness::run_delta(&config, &kind, a.mu)?,
        "lil" => harness::run_delta_lil(&config, &kind, a.mu)?,
        other => return Err(Failure::config(format!("unknown law '{other}'"))),
    };
    println!(
        "order {}  predicted limsup {}  liminf {}",
        predicted.order,
        fmt_f64(predicted.limsup),
        fmt_f64(predicted.liminf)
    );
    let mut out = OutputSet::new(dir)?;
    out.write("delta.jsonl", &jsonl(&summaries)?)?;
    out.finish(
        "delta",
        serde_json::json!({
            "g": a.g, "poly": a.poly, "mu": a.mu, "law": a.law,
            "alpha": a.alpha, "budget": a.budget,
            "replications": a.replications, "seed": a.seed, "sigma": a.sigma,
            "predicted": {
                "order": predicted.order,
                "limsup": predicted.limsup,
                "liminf": predicted.liminf
            }
        }),
        started,
    )?;
    Ok(())
}

//! `fecpart`: planning, loss analysis, simulation, reproduction tables and timing.
//!
//! Results go to stdout as JSON or CSV; diagnostics go to stderr. Exit code 0 on
//! success, 1 on a domain error, 2 on a usage error.

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use fecpart::analysis::{self, monte_carlo_plr, plr_fec, plr_fec_part, BecChannel, Layout};
use fecpart::bench::{BenchConfig, Mode, Phase, CSV_HEADER};
use fecpart::galois::POLYNOMIAL;
use fecpart::planner::{self, PlanRequest, DEFAULT_DELTA, DEFAULT_PLR_TARGET};
use fecpart::{CodeSpec, Execution, PartitionSpec};

#[derive(Parser)]
#[command(
    name = "fecpart",
    version,
    about = "MDS erasure codes with code partitioning"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Smallest code meeting a loss target, optionally partitioned
    Plan(PlanArgs),
    /// Analytic residual packet loss rate
    Analyze(AnalyzeArgs),
    /// Monte Carlo residual packet loss rate through the real codec
    Simulate(SimulateArgs),
    /// Regenerate the configuration table or the excess-packet sweep as CSV
    Reproduce {
        #[command(subcommand)]
        what: Reproduce,
    },
    /// Time encode/decode/inversion, plain versus partitioned, as CSV
    Bench(BenchArgs),
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    k: usize,
    #[arg(long, value_parser = probability)]
    pe: f64,
    #[arg(long, default_value_t = DEFAULT_PLR_TARGET)]
    plr_target: f64,
    #[arg(long)]
    partition: bool,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
}

#[derive(Args)]
struct CodeArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, value_parser = probability)]
    pe: f64,
    /// Partition the code; halves default to an even split without excess
    #[arg(long)]
    partition: bool,
    #[arg(long, requires_all = ["partition", "k1", "n2", "k2"])]
    n1: Option<usize>,
    #[arg(long, requires = "n1")]
    k1: Option<usize>,
    #[arg(long, requires = "n1")]
    n2: Option<usize>,
    #[arg(long, requires = "n1")]
    k2: Option<usize>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    code: CodeArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    code: CodeArgs,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Reproduce {
    /// Minimal n for k in {40, 80} over the erasure-probability sweep
    Table1 {
        #[arg(long, default_value_t = DEFAULT_PLR_TARGET)]
        plr_target: f64,
    },
    /// Excess parity per (p_e, k) for partitioned codes
    Fig2 {
        #[arg(long, default_value_t = DEFAULT_DELTA)]
        delta: f64,
        #[arg(long, default_value_t = planner::EXCESS_PARITY)]
        parity: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Plain,
    Partitioned,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum PhaseArg {
    Encode,
    Decode,
    Invert,
    All,
}

#[derive(Args)]
struct BenchArgs {
    /// Block lengths as lo:hi:step (inclusive)
    #[arg(long, default_value = "10:120:10")]
    k_range: String,
    #[arg(long, default_value_t = 8)]
    parity: usize,
    #[arg(long, default_value_t = 1500)]
    packet_size: usize,
    #[arg(long, default_value_t = 100)]
    iterations: usize,
    /// Erasures before timing decode; defaults to the parity count
    #[arg(long)]
    erased: Option<usize>,
    #[arg(long, value_enum, default_value = "both")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "all")]
    phase: PhaseArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

enum Failure {
    Usage(String),
    Domain(String),
}

impl Failure {
    fn domain(e: impl std::fmt::Display) -> Self {
        Failure::Domain(e.to_string())
    }
}

fn probability(s: &str) -> Result<f64, String> {
    let p: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(format!("{p} is not a probability in [0, 1]"))
    }
}

/// Rounds to six significant digits for printing.
fn sig6(x: f64) -> f64 {
    format!("{x:.5e}").parse().unwrap_or(x)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Plan(a) => cmd_plan(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Reproduce { what } => cmd_reproduce(what),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn json_line(v: Value) -> String {
    format!("{v}\n")
}

fn cmd_plan(a: PlanArgs) -> Result<String, Failure> {
    let channel = BecChannel::new(a.pe).map_err(|e| Failure::Usage(e.to_string()))?;
    let req = PlanRequest {
        k: a.k,
        channel,
        plr_target: a.plr_target,
        delta: a.delta,
        partition: a.partition,
    };
    if let Err(e) = req.validate() {
        return Err(Failure::Usage(e.to_string()));
    }
    let r = planner::plan(&req).map_err(Failure::domain)?;
    let mut out = json!({
        "n": r.spec.n(),
        "k": r.spec.k(),
        "p": r.spec.p(),
        "plr": sig6(r.plr),
        "ri": sig6(r.ri),
    });
    if let Some(pp) = r.partition {
        let [a, b] = pp.spec.halves();
        out["partition"] = json!({
            "n1": a.n(), "k1": a.k(), "p1": a.p(),
            "n2": b.n(), "k2": b.k(), "p2": b.p(),
            "excess": pp.spec.excess(),
            "plr_part": sig6(pp.plr),
        });
    }
    Ok(json_line(out))
}

fn layout(code: &CodeArgs) -> Result<Layout, Failure> {
    let parent = CodeSpec::new(code.n, code.k).map_err(Failure::domain)?;
    if !code.partition {
        return Ok(parent.into());
    }
    let ps = match (code.n1, code.k1, code.n2, code.k2) {
        (Some(n1), Some(k1), Some(n2), Some(k2)) => {
            let first = CodeSpec::new(n1, k1).map_err(Failure::domain)?;
            let second = CodeSpec::new(n2, k2).map_err(Failure::domain)?;
            PartitionSpec::from_halves(parent, first, second)
        }
        _ => PartitionSpec::split(parent, 0),
    }
    .map_err(Failure::domain)?;
    Ok(ps.into())
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<String, Failure> {
    let layout = layout(&a.code)?;
    let ch = BecChannel::new(a.code.pe).map_err(Failure::domain)?;
    let report = analysis::plr(layout, ch);
    let mut out = json!({ "plr": sig6(report.plr), "method": report.method });
    if let Layout::Partitioned(ps) = layout {
        let [x, y] = ps.halves();
        out["plr1"] = json!(sig6(plr_fec(x, ch).plr));
        out["plr2"] = json!(sig6(plr_fec(y, ch).plr));
        out["excess"] = json!(ps.excess());
    }
    Ok(json_line(out))
}

fn cmd_simulate(a: SimulateArgs) -> Result<String, Failure> {
    if a.trials < 1 {
        return Err(Failure::Usage("--trials must be at least 1".into()));
    }
    let layout = layout(&a.code)?;
    let ch = BecChannel::new(a.code.pe).map_err(Failure::domain)?;
    let report = monte_carlo_plr(layout, ch, a.trials, a.seed).map_err(Failure::domain)?;
    let analytic = match layout {
        Layout::Plain(s) => plr_fec(s, ch).plr,
        Layout::Partitioned(ps) => plr_fec_part(ps, ch).plr,
    };
    Ok(json_line(json!({
        "plr": sig6(report.plr),
        "method": report.method,
        "trials": a.trials,
        "ci95": sig6(report.half_width.unwrap_or(0.0)),
        "seed": a.seed,
        "analytic": sig6(analytic),
        "gf_polynomial": format!("{POLYNOMIAL:#x}"),
    })))
}

fn cmd_reproduce(what: Reproduce) -> Result<String, Failure> {
    match what {
        Reproduce::Table1 { plr_target } => {
            if !(plr_target > 0.0 && plr_target < 1.0) {
                return Err(Failure::Usage(format!(
                    "plr target {plr_target} not in (0, 1)"
                )));
            }
            let table = planner::configuration_table(plr_target, Execution::default())
                .map_err(Failure::domain)?;
            let mut out = String::from("k");
            for p in planner::TABLE_ERASURE_PROBS {
                out += &format!(",{p}");
            }
            out.push('\n');
            for (k, row) in planner::TABLE_BLOCK_LENGTHS.iter().zip(table) {
                out += &k.to_string();
                for n in row {
                    out += &format!(",{n}");
                }
                out.push('\n');
            }
            Ok(out)
        }
        Reproduce::Fig2 { delta, parity } => {
            if delta.is_nan() || delta <= 0.0 || parity == 0 {
                return Err(Failure::Usage(
                    "--delta must be positive and --parity at least 1".into(),
                ));
            }
            let mut probs = planner::EXCESS_ERASURE_PROBS;
            probs.sort_by(f64::total_cmp);
            let cells = planner::excess_grid(
                &probs,
                planner::EXCESS_BLOCK_LENGTHS,
                parity,
                delta,
                Execution::default(),
            )
            .map_err(Failure::domain)?;
            let mut out = String::from("pe,k,excess\n");
            for c in cells {
                out += &format!("{},{},{}\n", c.pe, c.k, c.excess);
            }
            Ok(out)
        }
    }
}

fn parse_range(s: &str) -> Result<Vec<usize>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, step] = parts.as_slice() else {
        return Err(format!("range {s:?} is not lo:hi:step"));
    };
    let num = |x: &str| {
        x.trim()
            .parse::<usize>()
            .map_err(|e| format!("range {s:?}: {e}"))
    };
    let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
    if lo == 0 || step == 0 || lo > hi {
        return Err(format!("range {s:?} needs 1 <= lo <= hi and step >= 1"));
    }
    Ok((lo..=hi).step_by(step).collect())
}

fn cmd_bench(a: BenchArgs) -> Result<String, Failure> {
    let cfg = BenchConfig {
        k_values: parse_range(&a.k_range).map_err(Failure::Usage)?,
        parity: a.parity,
        packet_size: a.packet_size,
        iterations: a.iterations,
        erased: a.erased.unwrap_or(a.parity),
        seed: a.seed,
    };
    cfg.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    let modes: &[Mode] = match a.mode {
        ModeArg::Plain => &[Mode::Plain],
        ModeArg::Partitioned => &[Mode::Partitioned],
        ModeArg::Both => &[Mode::Plain, Mode::Partitioned],
    };
    let phases: &[Phase] = match a.phase {
        PhaseArg::Encode => &[Phase::Encode],
        PhaseArg::Decode => &[Phase::Decode],
        PhaseArg::Invert => &[Phase::Invert],
        PhaseArg::All => &[Phase::Encode, Phase::Decode, Phase::Invert],
    };
    if modes.contains(&Mode::Partitioned) && cfg.k_values.iter().any(|&k| k < 2) {
        return Err(Failure::Usage("partitioned mode needs k >= 2".into()));
    }
    eprintln!("timing over GF(2^8) with polynomial {POLYNOMIAL:#x}");

    let mut out = format!("{CSV_HEADER}\n");
    for &phase in phases {
        for &mode in modes {
            let points = cfg.run(mode, phase).map_err(Failure::domain)?;
            for row in cfg.csv_rows(&points) {
                out += &row;
                out.push('\n');
            }
        }
    }
    Ok(out)
}

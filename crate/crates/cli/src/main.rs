use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use tod::harness::{
    emit_stats_csv, gen_random_script, parse_script, run, Family, GenParams, RunMode, RunOptions, RunReport, Script,
    StatsRow,
};
use tod::{OrderKind, Want};

#[derive(Parser)]
#[command(name = "todx", version, about = "Run, generate and benchmark term ordering diagram scripts")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute a script and check its `expect` lines.
    Run {
        file: PathBuf,
        #[command(flatten)]
        exec: ExecArgs,
        /// Override the script's `ord` line.
        #[arg(long, value_enum)]
        order_override: Option<Order>,
    },
    /// Write a seeded random script.
    Gen(GenArgs),
    /// Run a generated benchmark family.
    Bench {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        exec: ExecArgs,
    },
}

#[derive(Args)]
struct ExecArgs {
    #[arg(long, value_enum, default_value_t = Mode::Crosscheck)]
    mode: Mode,
    #[arg(long, value_enum, default_value_t = WantArg::All)]
    want: WantArg,
    /// Write per-mode counters as CSV.
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Order::Kbo)]
    order: Order,
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u8).range(2..=5))]
    symbols: u8,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=3))]
    max_arity: u8,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(1..=4))]
    depth: u8,
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u8).range(0..=30))]
    equalities: u8,
    #[arg(long, default_value_t = 50, value_parser = clap::value_parser!(u16).range(0..=200))]
    queries: u16,
    #[arg(long, default_value_t = 1)]
    groups: usize,
    #[arg(long, default_value_t = 0.1)]
    delete_prob: f64,
    #[arg(long, default_value_t = 0.7)]
    ground_prob: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Off,
    On,
    Shared,
    Crosscheck,
}

#[derive(Clone, Copy, ValueEnum)]
enum WantArg {
    First,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    Kbo,
    Lpo,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Swap,
    Poly,
}

impl From<Order> for OrderKind {
    fn from(o: Order) -> Self {
        match o {
            Order::Kbo => OrderKind::Kbo,
            Order::Lpo => OrderKind::Lpo,
        }
    }
}

impl ExecArgs {
    fn options(&self, order_override: Option<Order>) -> RunOptions {
        RunOptions {
            mode: match self.mode {
                Mode::Off => RunMode::Off,
                Mode::On => RunMode::On,
                Mode::Shared => RunMode::Shared,
                Mode::Crosscheck => RunMode::Crosscheck,
            },
            want: match self.want {
                WantArg::First => Want::First,
                WantArg::All => Want::All,
            },
            order_override: order_override.map(Into::into),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match try_main(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn try_main(cli: Cli) -> Result<bool> {
    match cli.command {
        Cmd::Run {
            file,
            exec,
            order_override,
        } => {
            let text = std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let script = parse_script(&text).with_context(|| format!("parsing {}", file.display()))?;
            let name = file.file_stem().map_or("script".into(), |s| s.to_string_lossy().into_owned());
            execute(&name, &script, &exec, order_override, true)
        }
        Cmd::Gen(args) => {
            let params = GenParams {
                symbols: args.symbols.into(),
                max_arity: args.max_arity.into(),
                depth: args.depth.into(),
                equalities: args.equalities.into(),
                queries: args.queries.into(),
                groups: args.groups,
                delete_prob: args.delete_prob,
                ground_prob: args.ground_prob,
                order: args.order.into(),
            };
            let script = gen_random_script(args.seed, &params);
            std::fs::write(&args.out, script.to_string()).with_context(|| format!("writing {}", args.out.display()))?;
            info!("wrote {} commands to {}", script.commands().len(), args.out.display());
            Ok(true)
        }
        Cmd::Bench { family, n, seed, exec } => {
            let family = match family {
                FamilyArg::Swap => Family::Swap,
                FamilyArg::Poly => Family::Poly,
            };
            let script = family.script(n, seed);
            execute(family.name(), &script, &exec, None, false)
        }
    }
}

fn execute(name: &str, script: &Script, exec: &ExecArgs, order: Option<Order>, print_results: bool) -> Result<bool> {
    for w in script.warnings() {
        warn!("{w}");
    }
    let started = Instant::now();
    let report = run(script, &exec.options(order))?;
    let elapsed = started.elapsed();
    if print_results {
        print_results_of(&report);
    }
    for run in &report.runs {
        let s = &run.stats;
        println!(
            "mode {}: queries={} answers={} traversed_term={} created_term={} naive_comparisons={}",
            run.mode, s.queries, s.answers, s.traversed.term, s.created.term, s.naive_comparisons
        );
    }
    info!("{name}: {elapsed:.2?}");
    for e in report.expects.iter().filter(|e| !e.passed) {
        println!(
            "FAIL expect {} [{}]: expected {{{}}}, got {{{}}}",
            e.query,
            e.mode,
            e.expected.join(","),
            e.actual.join(",")
        );
    }
    for d in &report.divergences {
        let parts: Vec<String> = d
            .results
            .iter()
            .map(|(m, r)| format!("{m}={{{}}}", r.join(",")))
            .collect();
        println!("DIVERGENCE {}: {}", d.query, parts.join(" "));
    }
    if let Some(path) = &exec.stats {
        write_stats(path, name, &report)?;
    }
    let passed = report.passed();
    println!("{}", if passed { "ok" } else { "FAILED" });
    Ok(passed)
}

fn print_results_of(report: &RunReport) {
    let Some(first) = report.runs.first() else {
        return;
    };
    for q in &first.results {
        println!("{}: {{{}}}", q.id, q.eqs.join(","));
    }
}

fn write_stats(path: &Path, name: &str, report: &RunReport) -> Result<()> {
    let rows: Vec<StatsRow> = report
        .runs
        .iter()
        .map(|r| StatsRow {
            script: name.to_string(),
            mode: r.mode,
            order: report.order,
            stats: r.stats,
        })
        .collect();
    std::fs::write(path, emit_stats_csv(&rows)).with_context(|| format!("writing {}", path.display()))
}

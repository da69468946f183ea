//! Command-line interface.
//!
//! Exit codes: 0 on success (including inconclusive checks), 2 when an
//! empirical check fails its bound, 1 on usage or runtime errors.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::crusade::{cutwidth, ImpedanceTable};
use crate::experiments::bounds::{
    run_sweep, verify_corollary_lower_bound, verify_lemma2, verify_lemma3, verify_theorem1,
    BoundReport,
};
use crate::experiments::output::{
    write_csv_path, write_json_path, SummaryDocument, SweepDocument,
};
use crate::experiments::{
    run_experiment, ExperimentConfig, GraphSpec, InitSpec, PolicySpec, Study,
};
use crate::graph::NodeId;
use crate::sim::{Caps, RngStream};

#[derive(Parser, Debug)]
#[command(
    name = "curesim",
    version,
    about = "Event-driven simulator and bound checker for budgeted epidemic curing on graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the exact minimum, over node removal orders, of the largest
    /// boundary cut encountered
    Cutwidth {
        /// line:N, grid:RxC, complete:N, or an edge-list file
        #[arg(long)]
        graph: String,
    },
    /// Print a minimal-width removal order for an initial infected set
    Crusade {
        /// line:N, grid:RxC, complete:N, or an edge-list file
        #[arg(long)]
        graph: String,
        /// all, list:v1,v2,..., or frac:p
        #[arg(long, default_value = "all")]
        init: String,
        /// Seed used when the initial set is random
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run replications and report extinction-time statistics
    Simulate(ExpArgs),
    /// Run replications and check an empirical quantity against its bound;
    /// exits 2 when the check fails
    Verify {
        target: VerifyTarget,
        #[command(flatten)]
        args: ExpArgs,
    },
    /// Repeat the experiment across budgets and compare doubled budgets
    Sweep {
        #[command(flatten)]
        args: ExpArgs,
        /// Comma-separated list of budgets to sweep over
        #[arg(long, value_delimiter = ',')]
        budgets: Vec<f64>,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum VerifyTarget {
    /// Long-excursion probability and mean excursion duration
    Lemma2,
    /// Mean waiting-period duration
    Lemma3,
    /// Mean extinction time upper bound
    Theorem1,
    /// Extinction-time lower bound, any policy
    Corollary,
}

#[derive(Args, Debug)]
struct ExpArgs {
    /// line:N, grid:RxC, complete:N, or an edge-list file
    #[arg(long)]
    graph: String,
    /// cure, uniform, degree, or none (default cure; `verify corollary`
    /// runs cure, uniform, and degree when omitted)
    #[arg(long)]
    policy: Option<String>,
    /// Total curing-rate budget r
    #[arg(long, default_value_t = 1.0)]
    budget: f64,
    /// Initial infected set: all, list:v1,v2,..., or frac:p
    #[arg(long, default_value = "all")]
    init: String,
    /// Number of independent replications
    #[arg(long, default_value_t = 1000)]
    reps: u64,
    /// Base seed; replication i draws from stream i
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Stop conditions, comma separated: events:N and/or time:T
    #[arg(long)]
    caps: Option<String>,
    /// Output prefix: writes PREFIX.csv and PREFIX.json
    #[arg(long)]
    out: Option<PathBuf>,
    /// File with a whitespace-separated whole-graph removal order, for
    /// graphs too large to solve exactly
    #[arg(long)]
    order_file: Option<PathBuf>,
    /// Write the event log of replication 0 to this path
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

fn parse_caps(s: &str) -> anyhow::Result<Caps> {
    let mut caps = Caps::default();
    for part in s.split(',') {
        let (key, value) = part
            .split_once(':')
            .with_context(|| format!("cap {part:?} is not of the form events:N or time:T"))?;
        match key {
            "events" => {
                caps.max_events = value
                    .parse()
                    .with_context(|| format!("event cap {value:?} is not an integer"))?;
            }
            "time" => {
                let t: f64 = value
                    .parse()
                    .with_context(|| format!("time cap {value:?} is not a number"))?;
                if !(t > 0.0) {
                    bail!("time cap must be positive, got {t}");
                }
                caps.max_time = t;
            }
            _ => bail!("unknown cap {key:?} (expected events or time)"),
        }
    }
    Ok(caps)
}

fn read_order_file(path: &Path) -> anyhow::Result<Arc<[NodeId]>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("could not read order file {}", path.display()))?;
    let order = text
        .split_whitespace()
        .map(|tok| {
            tok.parse::<NodeId>()
                .with_context(|| format!("bad node id {tok:?} in {}", path.display()))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    if order.is_empty() {
        bail!("order file {} is empty", path.display());
    }
    Ok(order.into())
}

fn build_config(args: &ExpArgs, policy: PolicySpec) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::new(GraphSpec::parse(&args.graph)?, policy, args.budget);
    cfg.init = InitSpec::parse(&args.init)?;
    cfg.replications = args.reps;
    cfg.base_seed = args.seed;
    if let Some(caps) = &args.caps {
        cfg.caps = parse_caps(caps)?;
    }
    if let Some(path) = &args.order_file {
        cfg.order = Some(read_order_file(path)?);
    }
    cfg.out = args.out.clone();
    Ok(cfg)
}

fn requested_policy(args: &ExpArgs) -> anyhow::Result<Option<PolicySpec>> {
    args.policy
        .as_deref()
        .map(|s| PolicySpec::parse(s).map_err(Into::into))
        .transpose()
}

fn suffixed(prefix: &Path, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{}{suffix}", prefix.display()))
}

fn write_study_outputs(
    study: &Study,
    bounds: Vec<BoundReport>,
    out: Option<&Path>,
    csv_suffix: &str,
) -> anyhow::Result<()> {
    if let Some(prefix) = out {
        write_csv_path(&suffixed(prefix, csv_suffix), &study.records)
            .context("writing CSV output")?;
        write_json_path(
            &suffixed(prefix, ".json"),
            &SummaryDocument::new(study, bounds),
        )
        .context("writing JSON summary")?;
    }
    Ok(())
}

fn write_trace(study: &Study, path: Option<&Path>) -> anyhow::Result<()> {
    if let Some(path) = path {
        let trace = study
            .first_trace
            .as_ref()
            .context("no trace captured (replication 0 missing)")?;
        let file = std::fs::File::create(path)
            .with_context(|| format!("could not create {}", path.display()))?;
        trace
            .write_log(std::io::BufWriter::new(file))
            .context("writing trace log")?;
    }
    Ok(())
}

fn print_study_summary(study: &Study) {
    let s = &study.extinction_time;
    println!(
        "graph {} nodes {} policy {} budget {}",
        study.config.graph,
        study.graph.node_count(),
        study.config.policy,
        study.config.budget
    );
    println!(
        "replications {} extinct {} censored {}",
        study.config.replications, s.count, s.censored
    );
    if s.count > 0 {
        println!(
            "mean_tau {:.6} half_width_99 {:.6}",
            s.mean, s.half_width_99
        );
    } else {
        println!("mean_tau - (no replication reached extinction)");
    }
}

fn print_report(report: &BoundReport, label: Option<&str>) {
    let prefix = label.map(|l| format!("[{l}] ")).unwrap_or_default();
    println!(
        "{prefix}{}: {} (mean {:.6}, half_width {:.6}, bound {:.6}, samples {})",
        report.name,
        report.verdict,
        report.empirical.mean,
        report.empirical.half_width_99,
        report.theoretical,
        report.empirical.count
    );
}

fn cmd_cutwidth(graph: &str) -> anyhow::Result<i32> {
    let g = GraphSpec::parse(graph)?.build()?;
    let w = cutwidth(&g)?;
    println!("{w}");
    Ok(0)
}

fn cmd_crusade(graph: &str, init: &str, seed: u64) -> anyhow::Result<i32> {
    let g = GraphSpec::parse(graph)?.build()?;
    let bag = InitSpec::parse(init)?.realize(&g, &mut RngStream::new(seed, 0));
    let table = ImpedanceTable::build(&g)?;
    let crusade = table.optimal_crusade(&bag);
    println!("impedance {}", table.delta(&bag));
    println!("width {}", crusade.width(&g));
    let order: Vec<String> = crusade.order().iter().map(|v| v.to_string()).collect();
    println!("order {}", order.join(" "));
    Ok(0)
}

fn cmd_simulate(args: &ExpArgs) -> anyhow::Result<i32> {
    let policy = requested_policy(args)?.unwrap_or(PolicySpec::Cure);
    let cfg = build_config(args, policy)?;
    let study = run_experiment(&cfg)?;
    print_study_summary(&study);
    write_study_outputs(&study, Vec::new(), args.out.as_deref(), ".csv")?;
    write_trace(&study, args.trace_out.as_deref())?;
    Ok(0)
}

fn cmd_verify(target: VerifyTarget, args: &ExpArgs) -> anyhow::Result<i32> {
    if target == VerifyTarget::Corollary {
        return cmd_verify_corollary(args);
    }
    let policy = requested_policy(args)?.unwrap_or(PolicySpec::Cure);
    let cfg = build_config(args, policy)?;
    let study = run_experiment(&cfg)?;
    let reports = match target {
        VerifyTarget::Lemma2 => verify_lemma2(&study)?,
        VerifyTarget::Lemma3 => vec![verify_lemma3(&study)?],
        VerifyTarget::Theorem1 => vec![verify_theorem1(&study)?],
        VerifyTarget::Corollary => unreachable!("handled above"),
    };
    print_study_summary(&study);
    for report in &reports {
        print_report(report, None);
    }
    let failed = reports.iter().any(|r| r.verdict.is_fail());
    write_study_outputs(&study, reports, args.out.as_deref(), ".csv")?;
    write_trace(&study, args.trace_out.as_deref())?;
    Ok(if failed { 2 } else { 0 })
}

fn cmd_verify_corollary(args: &ExpArgs) -> anyhow::Result<i32> {
    // The lower bound is policy-independent; without an explicit choice,
    // check every curing policy (none only stalls from a full start).
    let policies = match requested_policy(args)? {
        Some(p) => vec![p],
        None => vec![PolicySpec::Cure, PolicySpec::Uniform, PolicySpec::Degree],
    };
    let mut docs = Vec::new();
    let mut failed = false;
    for policy in policies {
        let cfg = build_config(args, policy)?;
        let study = run_experiment(&cfg)?;
        let report = verify_corollary_lower_bound(&study)?;
        print_report(&report, Some(&policy.to_string()));
        failed |= report.verdict.is_fail();
        if let Some(prefix) = &args.out {
            write_csv_path(&suffixed(prefix, &format!(".{policy}.csv")), &study.records)
                .context("writing CSV output")?;
        }
        docs.push(SummaryDocument::new(&study, vec![report]));
    }
    if let Some(prefix) = &args.out {
        write_json_path(
            &suffixed(prefix, ".json"),
            &serde_json::json!({ "results": docs }),
        )
        .context("writing JSON summary")?;
    }
    Ok(if failed { 2 } else { 0 })
}

fn cmd_sweep(args: &ExpArgs, budgets: &[f64]) -> anyhow::Result<i32> {
    let policy = requested_policy(args)?.unwrap_or(PolicySpec::Cure);
    let cfg = build_config(args, policy)?;
    let sweep = run_sweep(&cfg, budgets)?;
    for study in &sweep.studies {
        print_study_summary(study);
    }
    let mut failed = false;
    for check in &sweep.checks {
        println!(
            "doubling {} -> {}: {} (mean {:.6} -> {:.6}, slack {:.6})",
            check.budget,
            check.doubled_budget,
            check.verdict,
            check.mean_at_budget,
            check.mean_at_doubled,
            check.combined_half_width
        );
        failed |= check.verdict.is_fail();
    }
    if let Some(prefix) = &args.out {
        for study in &sweep.studies {
            write_csv_path(
                &suffixed(prefix, &format!(".budget-{}.csv", study.config.budget)),
                &study.records,
            )
            .context("writing CSV output")?;
        }
        write_json_path(&suffixed(prefix, ".json"), &SweepDocument::new(&sweep))
            .context("writing JSON summary")?;
    }
    Ok(if failed { 2 } else { 0 })
}

fn dispatch(cli: Cli) -> anyhow::Result<i32> {
    match &cli.command {
        Command::Cutwidth { graph } => cmd_cutwidth(graph),
        Command::Crusade { graph, init, seed } => cmd_crusade(graph, init, *seed),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Verify { target, args } => cmd_verify(*target, args),
        Command::Sweep { args, budgets } => cmd_sweep(args, budgets),
    }
}

/// Parses and runs a full command line; returns the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn caps_parsing() {
        let caps = parse_caps("events:100").unwrap();
        assert_eq!(caps.max_events, 100);
        assert_eq!(caps.max_time, f64::INFINITY);
        let caps = parse_caps("events:5,time:2.5").unwrap();
        assert_eq!(caps.max_events, 5);
        assert_eq!(caps.max_time, 2.5);
        assert!(parse_caps("steps:3").is_err());
        assert!(parse_caps("time:-1").is_err());
        assert!(parse_caps("events").is_err());
    }

    #[test]
    fn usage_errors_exit_one_and_help_exits_zero() {
        assert_eq!(run_cli(["curesim"]), 1);
        assert_eq!(run_cli(["curesim", "bogus"]), 1);
        assert_eq!(run_cli(["curesim", "simulate"]), 1); // missing --graph
        assert_eq!(run_cli(["curesim", "--help"]), 0);
        assert_eq!(run_cli(["curesim", "--version"]), 0);
    }

    #[test]
    fn runtime_errors_exit_one() {
        assert_eq!(
            run_cli(["curesim", "cutwidth", "--graph", "line:prime"]),
            1
        );
        assert_eq!(
            run_cli(["curesim", "cutwidth", "--graph", "/no/such/file"]),
            1
        );
        // hypothesis refusal: np >= 1 for line(8) at budget 64
        assert_eq!(
            run_cli([
                "curesim", "verify", "theorem1", "--graph", "line:8", "--budget", "64",
                "--reps", "5",
            ]),
            1
        );
    }

    #[test]
    fn cutwidth_command_runs() {
        assert_eq!(run_cli(["curesim", "cutwidth", "--graph", "line:12"]), 0);
        assert_eq!(run_cli(["curesim", "crusade", "--graph", "line:4"]), 0);
    }

    #[test]
    fn simulate_command_runs_without_output_files() {
        assert_eq!(
            run_cli([
                "curesim", "simulate", "--graph", "line:4", "--policy", "none", "--init",
                "list:0", "--caps", "events:100", "--reps", "3",
            ]),
            0
        );
    }
}

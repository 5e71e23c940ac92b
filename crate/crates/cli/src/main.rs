use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use eps_sched::metrics::{
    compare, compute_report, metrics_csv, render_comparison_table, MetricsReport,
};
use eps_sched::scenario::{
    generate_synthetic, load_scenario, to_manifest_json, GeneratorParams, ScenarioError,
};
use eps_sched::sim::{resources_csv, trace_csv, SimError};
use eps_sched::{run, LinkConfig, Quantum, Scenario, SchedulerKind, SimTime};

/// Simulate urgency-aware HTTP/3 stream scheduling over page-load scenarios.
#[derive(Debug, Parser)]
#[command(name = "eps-sched", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct LinkArgs {
    /// Link rate in bytes per second.
    #[arg(long, default_value_t = 5_000_000.0)]
    rate: f64,
    /// One-way propagation delay in seconds.
    #[arg(long, default_value_t = 0.010)]
    delay: f64,
    /// Bytes handed out per scheduling round.
    #[arg(long, env = "EPS_SCHED_QUANTUM", default_value_t = Quantum::DEFAULT.bytes())]
    quantum: u64,
}

impl LinkArgs {
    fn resolve(&self) -> Result<(LinkConfig, Quantum)> {
        let delay = SimTime::from_secs_f64(self.delay).with_context(|| {
            format!(
                "--delay must be a non-negative number of seconds, got {}",
                self.delay
            )
        })?;
        let quantum = Quantum::new(self.quantum).context("--quantum must be at least 1")?;
        Ok((LinkConfig::new(self.rate, delay), quantum))
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Replay one scenario under one scheduler and write CSV outputs.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        scheduler: SchedulerKind,
        #[command(flatten)]
        link: LinkArgs,
        /// Directory for trace.csv, resources.csv and metrics.csv.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Compare two schedulers across one or more scenarios.
    Compare {
        #[arg(long, required = true, num_args = 1..)]
        scenario: Vec<PathBuf>,
        #[arg(long, default_value = "sequential")]
        baseline: SchedulerKind,
        #[arg(long, default_value = "mixed")]
        candidate: SchedulerKind,
        #[command(flatten)]
        link: LinkArgs,
        /// Also write the improvements as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Write a deterministic synthetic scenario manifest.
    Generate {
        #[arg(long)]
        count: usize,
        #[arg(long)]
        seed: u64,
        #[arg(short, long)]
        out: PathBuf,
        #[arg(long)]
        name: Option<String>,
    },
    /// Check a manifest without running it.
    Validate { scenario: PathBuf },
}

fn load(path: &Path) -> Result<Scenario> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    load_scenario(&bytes).with_context(|| format!("loading {}", path.display()))
}

fn simulate(
    scenario: &Scenario,
    kind: SchedulerKind,
    link: LinkConfig,
    quantum: Quantum,
) -> Result<(String, String, MetricsReport)> {
    let trace = run(scenario, kind, link, quantum)
        .with_context(|| format!("simulating {} under {kind}", scenario.name))?;
    let report = compute_report(&trace, scenario)?;
    Ok((trace_csv(&trace), resources_csv(&trace), report))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run {
            scenario,
            scheduler,
            link,
            out_dir,
        } => {
            let (link, quantum) = link.resolve()?;
            let scenario = load(&scenario)?;
            let (trace, resources, report) = simulate(&scenario, scheduler, link, quantum)?;
            fs::create_dir_all(&out_dir)
                .with_context(|| format!("creating {}", out_dir.display()))?;
            write(&out_dir.join("trace.csv"), &trace)?;
            write(&out_dir.join("resources.csv"), &resources)?;
            let metrics = metrics_csv(&[(scenario.name.clone(), scheduler, report.clone())]);
            write(&out_dir.join("metrics.csv"), &metrics)?;
            println!(
                "{} under {scheduler}: fcp {:.3}s lcp {:.3}s si {:.3}s plt {:.3}s",
                scenario.name, report.fcp_proxy, report.lcp_proxy, report.si_proxy, report.plt
            );
        }
        Command::Compare {
            scenario,
            baseline,
            candidate,
            link,
            csv,
        } => {
            let (link, quantum) = link.resolve()?;
            let scenarios = scenario
                .iter()
                .map(|p| load(p))
                .collect::<Result<Vec<_>>>()?;
            let rows = std::thread::scope(|scope| {
                let handles: Vec<_> = scenarios
                    .iter()
                    .map(|s| {
                        scope.spawn(move || -> Result<(String, _)> {
                            let (_, _, base) = simulate(s, baseline, link, quantum)?;
                            let (_, _, cand) = simulate(s, candidate, link, quantum)?;
                            Ok((s.name.clone(), compare(&base, &cand)))
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("simulation thread panicked"))
                    .collect::<Result<Vec<_>>>()
            })?;
            let rendered = render_comparison_table(&rows)?;
            println!("{candidate} vs {baseline}, improvement %");
            print!("{}", rendered.table);
            if let Some(path) = csv {
                write(&path, &rendered.csv)?;
            }
        }
        Command::Generate {
            count,
            seed,
            out,
            name,
        } => {
            let mut params = GeneratorParams::new(count, seed);
            if let Some(name) = name {
                params = params.named(name);
            }
            let scenario = generate_synthetic(&params)?;
            write(&out, &to_manifest_json(&scenario))?;
        }
        Command::Validate { scenario } => {
            let s = load(&scenario)?;
            println!(
                "{}: ok ({} resources, {} bytes)",
                s.name,
                s.resources.len(),
                s.total_bytes()
            );
        }
    }
    Ok(())
}

fn is_invalid_input(err: &anyhow::Error) -> bool {
    err.chain().any(|cause| {
        cause.is::<ScenarioError>()
            || matches!(cause.downcast_ref::<SimError>(), Some(SimError::Invalid(_)))
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(if is_invalid_input(&err) { 2 } else { 1 })
        }
    }
}

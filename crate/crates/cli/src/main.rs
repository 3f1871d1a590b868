use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use arn_core::scenario::{load_world, office3, Scenario};
use arn_core::sim::{config_name, run_batch_traced, BatchResult, ConfigSummary, Trace, TrialResult};
use arn_gateway::{serve, LiveSession, DEFAULT_PORT};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "arn-sim", version, about = "Human multi-robot delivery simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch experiment or a live session.
    Run(RunArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Batch,
    Live,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Scenario file; the built-in office3 scenario when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "batch")]
    mode: Mode,
    /// Trials per configuration.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Base seed; trial k of every configuration uses seed + k.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run only one configuration. Batch mode runs both when omitted; live
    /// mode defaults to on.
    #[arg(long, value_enum)]
    feedback: Option<Switch>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write one NDJSON event log per trial.
    #[arg(long)]
    trace: bool,
    /// Live mode: HTTP/WebSocket port.
    #[arg(long, default_value_t = DEFAULT_PORT)]
    port: u16,
    /// Live mode: address to bind.
    #[arg(long, default_value = "127.0.0.1")]
    bind: String,
    /// Live mode: simulated seconds per wall-clock second.
    #[arg(long, default_value_t = 1.0)]
    speed: f64,
    /// Live mode: directory of UI assets served next to /ws.
    #[arg(long = "static")]
    static_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::from_default_env())
        .with_writer(std::io::stderr)
        .init();
    let Command::Run(args) = Cli::parse().command;
    let result = match args.mode {
        Mode::Batch => batch(&args),
        Mode::Live => live(&args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn scenario(args: &RunArgs) -> Result<Scenario> {
    match &args.scenario {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            load_world(&text).with_context(|| format!("loading {}", path.display()))
        }
        None => Ok(office3()),
    }
}

fn batch(args: &RunArgs) -> Result<ExitCode> {
    let scenario = scenario(args)?;
    let configs: Vec<bool> = match args.feedback {
        Some(Switch::On) => vec![true],
        Some(Switch::Off) => vec![false],
        None => vec![true, false],
    };
    let (result, traces) = run_batch_traced(&scenario, args.trials, args.seed, &configs)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_results(&args.out.join("results.csv"), &result)?;
    let summary = serde_json::to_string_pretty(&Summary::from(&result))? + "\n";
    fs::write(args.out.join("summary.json"), summary)?;
    if args.trace {
        let dir = args.out.join("traces");
        fs::create_dir_all(&dir)?;
        for (trials, traces) in result.trials.iter().zip(&traces) {
            for (r, t) in trials.iter().zip(traces) {
                fs::write(dir.join(format!("{}_seed{}.ndjson", r.config, r.seed)), t.to_ndjson())?;
            }
        }
    }

    for s in &result.summary {
        println!(
            "{:<17} T_all {:>9.2} (sd {:.2})  T_H {:>8.2}  T_R_last {:>8.2}  aborted {}/{}",
            s.config, s.t_all.mean, s.t_all.sd, s.t_h.mean, s.t_r_last.mean, s.aborted, s.trials
        );
    }
    match result.p_value {
        Some(p) => println!("{}: p = {p:.3e}{}", result.test, if result.low_power { " (low power)" } else { "" }),
        None if configs.len() > 1 => println!("{}: undefined for these samples", result.test),
        None => {}
    }
    println!("wrote {}", args.out.display());
    if result.failed {
        eprintln!("batch failed: more than 20% of a configuration's trials aborted");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn write_results(path: &Path, result: &BatchResult) -> Result<()> {
    let robots = result.trials.iter().flatten().next().map_or(0, |t| t.t_r.len());
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    let mut header = vec!["seed".to_string(), "config".to_string(), "T_H".to_string()];
    header.extend((1..=robots).map(|i| format!("T_R{i}")));
    header.extend(["T_all", "T_R_last", "replans", "aborted"].map(String::from));
    w.write_record(&header)?;
    for t in result.trials.iter().flatten() {
        w.write_record(row(t))?;
    }
    w.flush()?;
    Ok(())
}

fn row(t: &TrialResult) -> Vec<String> {
    let mut r = vec![t.seed.to_string(), t.config.clone(), t.t_h.to_string()];
    r.extend(t.t_r.iter().map(f64::to_string));
    r.extend([
        t.t_all.to_string(),
        t.t_r_last.to_string(),
        t.replans.to_string(),
        t.aborted.to_string(),
    ]);
    r
}

#[derive(Serialize)]
struct Summary<'a> {
    scenario: &'a str,
    base_seed: u64,
    trials_per_config: usize,
    configs: &'a [ConfigSummary],
    test: &'a str,
    p_value: Option<f64>,
    low_power: bool,
    failed: bool,
}

impl<'a> From<&'a BatchResult> for Summary<'a> {
    fn from(b: &'a BatchResult) -> Self {
        Summary {
            scenario: &b.scenario,
            base_seed: b.base_seed,
            trials_per_config: b.trials_per_config,
            configs: &b.summary,
            test: &b.test,
            p_value: b.p_value,
            low_power: b.low_power,
            failed: b.failed,
        }
    }
}

fn live(args: &RunArgs) -> Result<ExitCode> {
    if !(args.speed > 0.0) {
        bail!("--speed must be positive");
    }
    let scenario = scenario(args)?;
    let feedback = args.feedback != Some(Switch::Off);
    let runtime = tokio::runtime::Runtime::new()?;
    let (result, trace) = runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind((args.bind.as_str(), args.port))
            .await
            .with_context(|| format!("binding {}:{}", args.bind, args.port))?;
        println!("live session on http://{}  (WebSocket at /ws)", listener.local_addr()?);
        let session = LiveSession::new(scenario, args.seed, feedback, args.speed);
        let server = tokio::spawn(serve(listener, session.handle(), args.static_dir.clone()));
        let out = tokio::select! {
            r = session.run() => r,
            _ = tokio::signal::ctrl_c() => bail!("interrupted"),
        };
        server.abort();
        Ok::<(TrialResult, Trace), anyhow::Error>(out)
    })?;
    fs::create_dir_all(&args.out)?;
    fs::write(args.out.join("live_trace.ndjson"), trace.to_ndjson())?;
    fs::write(args.out.join("live_result.json"), serde_json::to_string_pretty(&result)? + "\n")?;
    println!(
        "{}: T_all {:.2}, T_R_last {:.2}, replans {}{}",
        config_name(feedback),
        result.t_all,
        result.t_r_last,
        result.replans,
        if result.aborted { ", aborted" } else { "" }
    );
    Ok(ExitCode::SUCCESS)
}

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hiertrain::arch::Arch;
use hiertrain::experiment::{run_grid, write_rows_csv, Method, ResultRow, ScenarioConfig};
use hiertrain::profiles::{save_profile, synthesize_profile};
use hiertrain::scheduler::InnerSolver;
use hiertrain::simulator::{simulate_iteration, write_trace_csv};
use hiertrain::{total_time, CostProfile, ModelSpec, NetworkSpec, Policy, RoleMapping, Worker, WorkerSpec};
use serde::Deserialize;

#[derive(Parser)]
#[command(name = "hiertrain", version, about = "Hybrid parallel training planner for device/edge/cloud hierarchies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a cost profile for a built-in architecture or a custom spec.
    GenProfile(GenProfileArgs),
    /// Optimize every method over the configured grid and emit result rows.
    Optimize(ScenarioArgs),
    /// Replay one policy and emit its event trace.
    Simulate(SimulateArgs),
    /// Re-optimize with the edge compute rate scaled by each multiplier.
    SweepEdgeScale(ScenarioArgs),
}

#[derive(Args)]
struct GenProfileArgs {
    /// Built-in architecture (t3, lenet5, alexnet).
    #[arg(long, conflicts_with = "spec", required_unless_present = "spec")]
    arch: Option<String>,
    /// Custom spec file: {"model": ..., "workers": [...]}.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Compute rate override in FLOP/s, e.g. `edge=4e10`. Repeatable.
    #[arg(long = "rate", value_name = "WORKER=FLOPS")]
    rates: Vec<String>,
    /// Update rate override in parameters/s, e.g. `cloud=4e11`. Repeatable.
    #[arg(long = "update-rate", value_name = "WORKER=RATE")]
    update_rates: Vec<String>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Exact,
    RelaxRound,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario file (JSON). Flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, conflicts_with = "profile")]
    arch: Option<String>,
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Device-edge bandwidths in bits/s, comma separated.
    #[arg(long, value_delimiter = ',')]
    bw_device_edge: Option<Vec<f64>>,
    /// Edge-cloud bandwidths in bits/s, comma separated.
    #[arg(long, value_delimiter = ',')]
    bw_edge_cloud: Option<Vec<f64>>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    #[arg(long)]
    jalad_c_bits: Option<u32>,
    #[arg(long, value_enum)]
    inner_solver: Option<SolverArg>,
    /// Edge compute multipliers, comma separated.
    #[arg(long, value_delimiter = ',')]
    edge_core_scale: Option<Vec<f64>>,
    /// Skip the simulator replay of hybrid rows.
    #[arg(long)]
    no_simulate: bool,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Role mapping, e.g. `o=cloud;s=device;l=edge`.
    #[arg(long)]
    mapping: String,
    #[arg(long, default_value_t = 0)]
    m_s: usize,
    #[arg(long, default_value_t = 0)]
    m_l: usize,
    #[arg(long)]
    b_o: usize,
    #[arg(long, default_value_t = 0)]
    b_s: usize,
    #[arg(long, default_value_t = 0)]
    b_l: usize,
}

/// Error tagged with the process exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn config_error(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 2, error: error.into() }
}

fn infeasible(error: impl Into<anyhow::Error>) -> Failure {
    Failure { code: 3, error: error.into() }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenProfile(args) => gen_profile(args),
        Command::Optimize(args) => optimize(args, false),
        Command::Simulate(args) => simulate(args),
        Command::SweepEdgeScale(args) => optimize(args, true),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    match path {
        Some(p) => {
            let file = File::create(p).with_context(|| format!("cannot create {}", p.display())).map_err(config_error)?;
            Ok(Box::new(BufWriter::new(file)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomSpec {
    model: ModelSpec,
    workers: Vec<WorkerSpec>,
}

fn parse_override(text: &str) -> anyhow::Result<(Worker, f64)> {
    let (worker, value) = text.split_once('=').ok_or_else(|| anyhow!("expected WORKER=VALUE, got `{text}`"))?;
    let worker: Worker = worker.trim().parse()?;
    let value: f64 = value.trim().parse().with_context(|| format!("bad rate `{value}`"))?;
    Ok((worker, value))
}

fn gen_profile(args: GenProfileArgs) -> CmdResult {
    let (model, mut workers) = match (&args.arch, &args.spec) {
        (Some(arch), _) => {
            let arch: Arch = arch.parse().map_err(config_error)?;
            (arch.model(), arch.workers().to_vec())
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))
                .map_err(config_error)?;
            let spec: CustomSpec = serde_json::from_str(&text)
                .with_context(|| format!("malformed spec {}", path.display()))
                .map_err(config_error)?;
            spec.model.validate().map_err(infeasible)?;
            (spec.model, spec.workers)
        }
        (None, None) => unreachable!("clap requires --arch or --spec"),
    };
    for (list, update) in [(&args.rates, false), (&args.update_rates, true)] {
        for text in list {
            let (id, value) = parse_override(text).map_err(config_error)?;
            let spec = workers
                .iter_mut()
                .find(|w| w.id == id)
                .ok_or_else(|| config_error(anyhow!("no worker `{id}` in the spec")))?;
            if update {
                spec.update_rate = value;
            } else {
                spec.compute_rate = value;
            }
        }
    }
    let profile = synthesize_profile(&model, &workers).map_err(infeasible)?;
    match &args.out {
        Some(path) => save_profile(&profile, path).map_err(config_error)?,
        None => println!("{}", profile.to_json().map_err(infeasible)?),
    }
    Ok(())
}

fn load_scenario(args: &ScenarioArgs) -> Result<ScenarioConfig, Failure> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))
                .map_err(config_error)?;
            let mut config = ScenarioConfig::from_json(&text)
                .with_context(|| format!("malformed config {}", path.display()))
                .map_err(config_error)?;
            // Profile paths are relative to the config file.
            if let (Some(p), Some(dir)) = (&config.profile, path.parent()) {
                config.profile = Some(dir.join(p));
            }
            config
        }
        None => ScenarioConfig::default(),
    };
    if let Some(arch) = &args.arch {
        config.arch = Some(arch.clone());
        config.profile = None;
    }
    if let Some(profile) = &args.profile {
        config.profile = Some(profile.clone());
        config.arch = None;
    }
    if let Some(v) = &args.bw_device_edge {
        config.bw_device_edge = v.clone();
    }
    if let Some(v) = &args.bw_edge_cloud {
        config.bw_edge_cloud = v.clone();
    }
    if let Some(b) = args.batch {
        config.batch = b;
    }
    if let Some(methods) = &args.methods {
        config.methods = methods
            .iter()
            .map(|m| m.parse::<Method>())
            .collect::<Result<_, _>>()
            .map_err(config_error)?;
    }
    if let Some(c) = args.jalad_c_bits {
        config.jalad_c_bits = c;
    }
    if let Some(s) = args.inner_solver {
        config.inner_solver = match s {
            SolverArg::Exact => InnerSolver::Exact,
            SolverArg::RelaxRound => InnerSolver::RelaxRound,
        };
    }
    if let Some(v) = &args.edge_core_scale {
        config.edge_core_scale = Some(v.clone());
    }
    if args.no_simulate {
        config.simulate = false;
    }
    config.validate().map_err(config_error)?;
    Ok(config)
}

fn load_profile(config: &ScenarioConfig) -> Result<CostProfile, Failure> {
    config.load_profile().context("cannot load profile").map_err(config_error)
}

fn optimize(args: ScenarioArgs, sweep: bool) -> CmdResult {
    let config = load_scenario(&args)?;
    if sweep && config.edge_core_scale.is_none() {
        return Err(config_error(anyhow!("invalid edge_core_scale: sweep-edge-scale needs a multiplier list")));
    }
    let profile = load_profile(&config)?;
    let rows = run_grid(&config, &profile).map_err(infeasible)?;
    let mut out = output(args.out.as_deref())?;
    write_rows_csv(&rows, &mut out).map_err(config_error)?;
    out.flush().map_err(config_error)?;
    report(&rows);
    Ok(())
}

fn report(rows: &[ResultRow]) {
    let mut stderr = io::stderr().lock();
    for r in rows.iter().filter(|r| r.method == Method::Hiertrain) {
        let _ = writeln!(
            stderr,
            "bw_de={} bw_ec={} edge_scale={}: {} m_s={} m_l={} b_o={} b_s={} b_l={} t={:.6}s",
            r.bw_de, r.bw_ec, r.edge_scale, r.mapping, r.m_s, r.m_l, r.b_o, r.b_s, r.b_l, r.t_total_model
        );
    }
    let worst = rows.iter().filter_map(ResultRow::sim_discrepancy).fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.max(d))));
    if let Some(d) = worst {
        let _ = writeln!(stderr, "max model/simulation discrepancy: {d:.3e}");
    }
}

fn single(values: &[f64], field: &str) -> Result<f64, Failure> {
    match values {
        [v] => Ok(*v),
        _ => Err(config_error(anyhow!("invalid {field}: simulate takes exactly one value, got {}", values.len()))),
    }
}

fn simulate(args: SimulateArgs) -> CmdResult {
    let config = load_scenario(&args.scenario)?;
    let net = NetworkSpec::new(single(&config.bw_device_edge, "bw_device_edge")?, single(&config.bw_edge_cloud, "bw_edge_cloud")?)
        .map_err(config_error)?;
    let scale = single(&config.edge_scales(), "edge_core_scale")?;
    let profile = load_profile(&config)?.with_compute_speedup(Worker::Edge, scale).map_err(infeasible)?;
    let mapping: RoleMapping = args.mapping.parse().map_err(|e| match e {
        hiertrain::Error::Policy(_) => infeasible(e),
        _ => config_error(e),
    })?;
    let policy = Policy { mapping, m_s: args.m_s, m_l: args.m_l, b_o: args.b_o, b_s: args.b_s, b_l: args.b_l };
    let model = total_time(&policy, &profile, &net).map_err(infeasible)?.t_total;
    let trace = simulate_iteration(&policy, &profile, &net).map_err(infeasible)?;
    let mut out = output(args.scenario.out.as_deref())?;
    write_trace_csv(&trace, &mut out).map_err(config_error)?;
    out.flush().map_err(config_error)?;
    let gap = (trace.makespan - model).abs() / model;
    eprintln!("policy {policy}: model {model:.9}s simulated {:.9}s relative discrepancy {gap:.3e}", trace.makespan);
    Ok(())
}

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use uhlmann_core::basisenc::{build_uhlmann_circuit, Method};
use uhlmann_core::circuit::qasm::to_qasm3;
use uhlmann_core::experiment::{
    count_sweep, epsilon_sweep, report, run_sweep, state_prep_distance_sweep, uniform_grid,
    NoiseSource, ReportFormat, SweepConfig,
};
use uhlmann_core::synth::transpile;
use uhlmann_core::{Basis, GateSet, Spin, SynthesisConfig};

#[derive(Parser)]
#[command(name = "uhlmann", version, about = "Finite-temperature Uhlmann phase sweeps and circuit tools")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate θ_U over the temperature grid and emit one record per point.
    Sweep(SweepArgs),
    /// Average ISA gate counts per circuit block over the grid.
    Counts(CommonArgs),
    /// Statistical distance of both state-preparation methods under noise.
    PrepDistance(CommonArgs),
    /// Process-block gate counts of the approximate synthesizer at several ε (spin 1).
    SynthBench(SynthBenchArgs),
    /// OpenQASM 3 of the transpiled circuit at one temperature.
    ExportQasm(ExportArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    #[arg(long, default_value = "one", value_parser = parse_spin)]
    spin: Spin,
    #[arg(long, default_value = "optimized")]
    method: Method,
    /// Insert XY4 sequences into idle windows.
    #[arg(long)]
    dd: bool,
    /// Hilbert-Schmidt tolerance of approximate synthesis.
    #[arg(long, default_value_t = 1e-8)]
    epsilon: f64,
    #[arg(long, default_value = "eagle")]
    gateset: GateSet,
    /// `none`, `eagle`, `heron` or a calibration JSON file.
    #[arg(long, default_value = "none")]
    noise: String,
    #[arg(long, default_value_t = 2024)]
    shots: u64,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Number of uniform temperature points in [0.01, 1).
    #[arg(long, default_value_t = 60)]
    grid: usize,
    /// Output file (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    format: ReportFormat,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Use exact outcome probabilities instead of sampled shots.
    #[arg(long)]
    exact: bool,
}

#[derive(Args)]
struct SynthBenchArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// ε values to compare; `--epsilon` is used alone when this is not given.
    #[arg(long, value_delimiter = ',')]
    epsilons: Option<Vec<f64>>,
}

#[derive(Args)]
struct ExportArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    temperature: f64,
    #[arg(long, default_value = "x", value_parser = parse_basis)]
    basis: Basis,
}

fn parse_spin(s: &str) -> Result<Spin, String> {
    s.parse().map_err(|e: uhlmann_core::Error| e.to_string())
}

fn parse_basis(s: &str) -> Result<Basis, String> {
    match s.to_ascii_lowercase().as_str() {
        "x" => Ok(Basis::X),
        "y" => Ok(Basis::Y),
        other => Err(format!("basis must be x or y, got `{other}`")),
    }
}

impl CommonArgs {
    fn config(&self) -> Result<SweepConfig> {
        let mut cfg = SweepConfig::new(self.spin);
        cfg.grid = uniform_grid(self.grid)?;
        cfg.shots = self.shots;
        cfg.method = self.method;
        cfg.dd = self.dd;
        cfg.synthesis = SynthesisConfig::with_epsilon(self.epsilon);
        cfg.gateset = self.gateset;
        cfg.noise = NoiseSource::parse(&self.noise)
            .with_context(|| format!("loading noise model `{}`", self.noise))?;
        cfg.seed = self.seed;
        cfg.validate()?;
        Ok(cfg)
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => std::fs::write(path, text)
                .with_context(|| format!("writing {}", path.display()))?,
            None => std::io::stdout().write_all(text.as_bytes())?,
        }
        Ok(())
    }
}

fn sweep(args: &SweepArgs) -> Result<ExitCode> {
    let mut cfg = args.common.config()?;
    cfg.exact = args.exact;
    let records = run_sweep(&cfg)?;
    args.common.emit(&report(&records, args.common.format)?)?;
    let failed: Vec<_> = records.iter().filter(|r| !r.is_ok()).collect();
    for r in &failed {
        eprintln!("T = {}: {}", r.t, r.error);
    }
    Ok(if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn counts(args: &CommonArgs) -> Result<()> {
    let r = count_sweep(&args.config()?)?;
    args.emit(&match args.format {
        ReportFormat::Csv => r.to_csv(),
        ReportFormat::Table => r.to_table(),
    })
}

fn prep_distance(args: &CommonArgs) -> Result<()> {
    let cfg = args.config()?;
    if cfg.noise.is_none() {
        bail!("prep-distance needs a noise model (--noise)");
    }
    let rows = state_prep_distance_sweep(&cfg)?;
    let mut text = String::from("T,arbitrary,shannon\n");
    for r in rows {
        text.push_str(&format!("{},{},{}\n", r.t, r.arbitrary, r.shannon));
    }
    args.emit(&text)
}

fn synth_bench(args: &SynthBenchArgs) -> Result<()> {
    let c = &args.common;
    if c.spin != Spin::ONE {
        bail!("synth-bench applies to spin 1 only");
    }
    let cfg = c.config()?;
    let epsilons = args.epsilons.clone().unwrap_or_else(|| vec![c.epsilon]);
    let rows = epsilon_sweep(&cfg.params, &cfg.grid, &epsilons, c.gateset, cfg.synthesis)?;
    let mut text = String::from("epsilon,process_gates,two_qubit_gates,max_distance,unconverged\n");
    for r in rows {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            r.epsilon, r.process_gates, r.two_qubit_gates, r.max_distance, r.unconverged
        ));
    }
    c.emit(&text)
}

fn export_qasm(args: &ExportArgs) -> Result<()> {
    let cfg = args.common.config()?;
    let circuits = build_uhlmann_circuit(&cfg.params, args.temperature, &cfg.circuit_options())?;
    let circ = match args.basis {
        Basis::Y => &circuits.y,
        _ => &circuits.x,
    };
    args.common.emit(&to_qasm3(&transpile(circ, cfg.gateset)?)?)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Sweep(a) => return sweep(a),
        Command::Counts(a) => counts(a)?,
        Command::PrepDistance(a) => prep_distance(a)?,
        Command::SynthBench(a) => synth_bench(a)?,
        Command::ExportQasm(a) => export_qasm(a)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

use clap::{Parser, Subcommand};
use kuramoto::{commands, config, output::OutDir, CliError, Command};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "kuramoto", version, about = "Continuum Kuramoto model: stability, partially locked states, simulation")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output` in the config).
    #[arg(long, global = true, env = "KURAMOTO_OUT")]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Generic override, e.g. `--set grid.nodes=4096` (repeatable).
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, global = true)]
    coupling: Option<f64>,
    #[arg(long, global = true)]
    t_end: Option<f64>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[arg(long, global = true)]
    modes: Option<usize>,
    #[arg(long, global = true)]
    nodes: Option<usize>,
    #[arg(long, global = true)]
    tau_max: Option<f64>,
    /// Ensemble size.
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    k_min: Option<f64>,
    #[arg(long, global = true)]
    k_max: Option<f64>,
    #[arg(long, global = true)]
    k_step: Option<f64>,
    /// Sweep mode: continuation or multistart.
    #[arg(long, global = true)]
    mode: Option<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Linear stability of the homogeneous state.
    Stability,
    /// Partially locked states and their stability.
    Pls,
    /// Spectral (Fourier-space) simulation of the kinetic equation.
    Simulate,
    /// Finite-N oscillator ensemble.
    Ensemble,
    /// Volterra kernel, solution and resolvent.
    Volterra,
    /// Distance to the Ott–Antonsen manifold along a spectral run.
    OaCheck,
    /// Reduced Ott–Antonsen dynamics for Cauchy mixtures.
    OaReduce,
    /// Bifurcation diagram over a K range.
    Bifurcate,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Stability => Command::Stability,
            Cmd::Pls => Command::Pls,
            Cmd::Simulate => Command::Simulate,
            Cmd::Ensemble => Command::Ensemble,
            Cmd::Volterra => Command::Volterra,
            Cmd::OaCheck => Command::OaCheck,
            Cmd::OaReduce => Command::OaReduce,
            Cmd::Bifurcate => Command::Bifurcate,
        }
    }
}

impl Cli {
    fn overrides(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut put = |k: &str, val: Option<String>| {
            if let Some(val) = val {
                v.push(format!("{k}={val}"));
            }
        };
        // floats keep a decimal point so TOML reads them as floats
        let f = |x: Option<f64>| x.map(|x| format!("{x:?}"));
        let u = |x: Option<usize>| x.map(|x| x.to_string());
        put("coupling", f(self.coupling));
        put("run.t_end", f(self.t_end));
        put("run.dt", f(self.dt));
        put("grid.modes", u(self.modes));
        put("grid.nodes", u(self.nodes));
        put("grid.tau_max", f(self.tau_max));
        put("ensemble.n", u(self.n));
        put("ensemble.seed", self.seed.map(|s| s.to_string()));
        put("bifurcate.k_min", f(self.k_min));
        put("bifurcate.k_max", f(self.k_max));
        put("bifurcate.step", f(self.k_step));
        put("bifurcate.mode", self.mode.as_ref().map(|m| format!("{m:?}")));
        v.extend(self.set.iter().cloned());
        v
    }
}

fn run(cli: &Cli) -> Result<String, CliError> {
    let (cfg, base) = config::load_config(cli.config.as_deref(), &cli.overrides())?;
    let dir = cli
        .out
        .clone()
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let out = OutDir::create(dir)?;
    let cmd: Command = cli.command.into();
    let job = || commands::dispatch(cmd, &cfg, base.as_deref(), &out);
    let summary = match cli.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| CliError::Io(e.into()))?
            .install(job)?,
        None => job()?,
    };
    Ok(format!("{}: results in {}\n{summary}", cmd.name(), out.path().display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(s) => {
            print!("{s}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

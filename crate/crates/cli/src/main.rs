use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use geosync::montecarlo::{with_workers, WORKERS_ENV};
use geosync_cli::commands::{self, BasinConfig, EquilibriaArgs};
use geosync_cli::config::{IntegratorSection, RunConfig};
use geosync_cli::selftest;

#[derive(Parser)]
#[command(name = "geosync", version, about = "Consensus flows on matrix manifolds")]
struct Cli {
    /// Worker threads for Monte Carlo trials and stability probes.
    #[arg(long, global = true, env = WORKERS_ENV)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one flow; exit 0 consensus, 2 non-consensus equilibrium, 3 horizon exhausted, 1 error.
    Simulate(SimulateArgs),
    /// Monte Carlo estimate of the consensus basin measure.
    Basin(BasinArgs),
    /// Build a closed-geodesic or twisted equilibrium and probe its stability.
    Equilibria(EqArgs),
    /// Run quick invariant checks.
    Selftest,
}

#[derive(Args, Default)]
struct IntegratorFlags {
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    /// Consensus threshold on max over edges of half the chordal distance.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Stop as an equilibrium once the right-hand side is below this; 0 disables.
    #[arg(long)]
    stall_tol: Option<f64>,
    /// `polar` or `exp`.
    #[arg(long)]
    retraction: Option<String>,
}

impl IntegratorFlags {
    fn apply(&self, s: &mut IntegratorSection) {
        if let Some(v) = self.step {
            s.step = v;
        }
        if let Some(v) = self.horizon {
            s.horizon = v;
        }
        if let Some(v) = self.epsilon {
            s.epsilon = v;
        }
        if let Some(v) = self.stall_tol {
            s.stall_tol = v;
        }
        if let Some(v) = &self.retraction {
            s.retraction = v.clone();
        }
    }
}

fn parse_weights(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad weight {t:?}"))).collect()
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML file with [run] and [integrator] tables; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// circle, sphere:n, stiefel:p:n, so:n, o:n, torus:k
    #[arg(long)]
    manifold: Option<String>,
    /// intrinsic, extrinsic, extrinsic-constnorm, stiefel, orthogonal, lifted-stiefel
    #[arg(long)]
    flow: Option<String>,
    /// cycle:N, circulant:N:d, complete:N or an edge-list file
    #[arg(long)]
    graph: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated cycle edge weights.
    #[arg(long)]
    weights: Option<String>,
    /// random, twisted:q, s-set[:q] or file:PATH
    #[arg(long)]
    init: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    record_stride: Option<usize>,
    #[arg(long)]
    out: Option<String>,
    #[command(flatten)]
    integrator: IntegratorFlags,
}

#[derive(Args)]
struct BasinArgs {
    /// TOML file with [basin] and [integrator] tables; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    manifold: Option<String>,
    #[arg(long)]
    flow: Option<String>,
    #[arg(long)]
    graph: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Estimate every Stiefel cell p <= n of the table on cycle:5.
    #[arg(long)]
    table1: bool,
    #[arg(long)]
    pmax: Option<usize>,
    #[arg(long)]
    nmax: Option<usize>,
    #[arg(long)]
    out: Option<String>,
    #[command(flatten)]
    integrator: IntegratorFlags,
}

#[derive(Args)]
struct EqArgs {
    /// circle, torus:k or so:n
    #[arg(long, default_value = "circle")]
    manifold: String,
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Comma-separated cycle edge weights.
    #[arg(long)]
    weights: Option<String>,
    /// Winding number(s), comma-separated on the torus.
    #[arg(long, default_value = "1")]
    winding: String,
    #[arg(long, default_value = "extrinsic")]
    flow: String,
    /// Arc-length position of the first agent.
    #[arg(long, default_value_t = 0.0)]
    offset: f64,
    /// Number of random perturbations integrated by the probe.
    #[arg(long, default_value_t = 20)]
    directions: usize,
    /// Size of each perturbation.
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "geosync-out")]
    out: String,
    #[command(flatten)]
    integrator: IntegratorFlags,
}

fn simulate(a: SimulateArgs) -> commands::CmdResult<i32> {
    let mut cfg = match &a.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    let run = &mut cfg.run;
    if let Some(v) = a.manifold {
        run.manifold = v;
    }
    if let Some(v) = a.flow {
        run.flow = v;
    }
    if let Some(v) = a.graph {
        run.graph = v;
    }
    if a.n.is_some() {
        run.n = a.n;
    }
    if let Some(w) = &a.weights {
        run.weights = Some(parse_weights(w)?);
    }
    if let Some(v) = a.init {
        run.init = v;
    }
    if let Some(v) = a.seed {
        run.seed = v;
    }
    if let Some(v) = a.out {
        run.out = v;
    }
    if let Some(v) = a.record_stride {
        cfg.integrator.record_stride = v;
    }
    a.integrator.apply(&mut cfg.integrator);
    commands::simulate(&cfg)
}

fn basin(a: BasinArgs, workers: Option<usize>) -> commands::CmdResult<i32> {
    let mut cfg = match &a.config {
        Some(p) => BasinConfig::from_file(p)?,
        None => BasinConfig::default(),
    };
    let b = &mut cfg.basin;
    if let Some(v) = a.manifold {
        b.manifold = v;
    }
    if a.flow.is_some() {
        b.flow = a.flow;
    }
    if let Some(v) = a.graph {
        b.graph = v;
    }
    if let Some(v) = a.trials {
        b.trials = v;
    }
    if let Some(v) = a.seed {
        b.seed = v;
    }
    if a.table1 {
        b.table1 = true;
    }
    if let Some(v) = a.pmax {
        b.pmax = v;
    }
    if let Some(v) = a.nmax {
        b.nmax = v;
    }
    if let Some(v) = a.out {
        b.out = v;
    }
    a.integrator.apply(&mut cfg.integrator);
    commands::basin(&cfg, workers)
}

fn equilibria(a: EqArgs, workers: Option<usize>) -> commands::CmdResult<i32> {
    let mut integrator = IntegratorSection::default();
    a.integrator.apply(&mut integrator);
    let weights = a.weights.as_deref().map(parse_weights).transpose()?;
    let args = EquilibriaArgs {
        manifold: a.manifold,
        n: a.n,
        weights,
        winding: a.winding,
        flow: a.flow,
        offset: a.offset,
        directions: a.directions,
        delta: a.delta,
        seed: a.seed,
        integrator,
        out: a.out,
    };
    with_workers(workers, || commands::equilibria(&args).map_err(|e| e.to_string()))?.map_err(Into::into)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Basin(a) => basin(a, cli.workers),
        Command::Equilibria(a) => equilibria(a, cli.workers),
        Command::Selftest => Ok(if selftest::run() { 0 } else { 1 }),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

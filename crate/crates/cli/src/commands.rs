use std::fs;
use std::path::{Path, PathBuf};

use geosync::equilibria::{self, ClosedGeodesicSpec, ProbeSettings};
use geosync::montecarlo::{self, BasinExperiment};
use geosync::{integrate, Configuration, FlowKind, IntegratorSettings, ManifoldKind, Outcome};
use serde::{Deserialize, Serialize};

use crate::config::{resolve_graph, ConfigError, IntegratorSection, RunConfig};

pub type CmdResult<T> = Result<T, Box<dyn std::error::Error>>;

pub fn exit_code(outcome: Outcome) -> i32 {
    match outcome {
        Outcome::Consensus => 0,
        Outcome::NonConsensusEquilibrium => 2,
        Outcome::HorizonExhausted => 3,
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> CmdResult<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

/// Runs one simulation and writes `trajectory.csv`, `summary.json`,
/// `meta.json` and the resolved `config.toml` into the output directory.
/// Returns the process exit code.
pub fn simulate(cfg: &RunConfig) -> CmdResult<i32> {
    let r = cfg.resolve()?;
    let rec = integrate(r.flow, &r.initial, &r.graph, &r.settings)?;
    let out = PathBuf::from(&cfg.run.out);
    fs::create_dir_all(&out)?;
    rec.write_csv(std::io::BufWriter::new(fs::File::create(out.join("trajectory.csv"))?))?;
    write_json(&out.join("summary.json"), &rec.summary_json())?;
    write_json(
        &out.join("meta.json"),
        &serde_json::json!({
            "seed": cfg.run.seed,
            "version": env!("CARGO_PKG_VERSION"),
            "config": cfg,
        }),
    )?;
    fs::write(out.join("config.toml"), cfg.to_toml())?;
    println!(
        "{} on {} with {} agents: {} at t = {} after {} steps, energy {:.6e} (seed {})",
        r.flow,
        r.kind,
        r.initial.len(),
        rec.outcome.name(),
        rec.t_final(),
        rec.steps,
        rec.final_energy(),
        cfg.run.seed
    );
    Ok(exit_code(rec.outcome))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasinConfig {
    #[serde(default)]
    pub basin: BasinSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasinSection {
    pub manifold: String,
    /// Defaults to `stiefel` on the Stiefel family and `extrinsic` elsewhere.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flow: Option<String>,
    pub graph: String,
    pub trials: usize,
    pub seed: u64,
    pub table1: bool,
    pub pmax: usize,
    pub nmax: usize,
    pub out: String,
}

impl Default for BasinSection {
    fn default() -> Self {
        Self {
            manifold: "stiefel:1:2".into(),
            flow: None,
            graph: "cycle:5".into(),
            trials: 500,
            seed: 0,
            table1: false,
            pmax: 9,
            nmax: 9,
            out: "geosync-out".into(),
        }
    }
}

impl BasinConfig {
    pub fn from_file(path: &Path) -> CmdResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Ok(toml::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?)
    }
}

pub fn basin(cfg: &BasinConfig, workers: Option<usize>) -> CmdResult<i32> {
    let b = &cfg.basin;
    let mut settings = cfg.integrator.settings()?;
    settings.record_stride = None;
    let out = PathBuf::from(&b.out);
    fs::create_dir_all(&out)?;
    let meta = serde_json::json!({ "seed": b.seed, "version": env!("CARGO_PKG_VERSION"), "config": cfg });
    write_json(&out.join("meta.json"), &meta)?;
    if b.table1 {
        let table = montecarlo::table1_with(b.pmax, b.nmax, b.trials, b.seed, workers, &settings)?;
        fs::write(out.join("table1.csv"), table.to_csv())?;
        fs::write(out.join("table1.txt"), table.to_text())?;
        print!("{}", table.to_text());
        println!("{} cells, M = {}, seed {}; bold cells marked *x*", table.cells.len(), b.trials, b.seed);
        return Ok(0);
    }
    let kind: ManifoldKind = b.manifold.parse().map_err(|e| ConfigError(format!("basin.manifold: {e}")))?;
    let flow = match &b.flow {
        Some(f) => f.parse().map_err(|e| ConfigError(format!("basin.flow: {e}")))?,
        None if kind.is_stiefel_family() => FlowKind::StiefelCanonical,
        None => FlowKind::ExtrinsicU,
    };
    let graph = resolve_graph(&b.graph, None, None)?;
    let exp = BasinExperiment { kind, flow, graph, trials: b.trials, settings, seed: b.seed, workers };
    let est = montecarlo::run_basin(&exp)?;
    let json = serde_json::to_value(&est)?;
    write_json(&out.join("basin.json"), &json)?;
    fs::write(
        out.join("basin.csv"),
        format!(
            "manifold,flow,graph,M,successes,mu_hat,halfwidth,seed\n{kind},{flow},{},{},{},{},{},{}\n",
            b.graph, est.trials, est.successes, est.mu_hat, est.wilson_halfwidth_95, b.seed
        ),
    )?;
    println!(
        "{flow} on {kind}, {}: mu_hat = {:.4} ± {:.4} ({} / {} trials, seed {})",
        b.graph, est.mu_hat, est.wilson_halfwidth_95, est.successes, est.trials, b.seed
    );
    println!("{}", serde_json::to_string(&json)?);
    Ok(0)
}

#[derive(Debug, Clone)]
pub struct EquilibriaArgs {
    pub manifold: String,
    pub n: usize,
    pub weights: Option<Vec<f64>>,
    pub winding: String,
    pub flow: String,
    pub offset: f64,
    pub directions: usize,
    pub delta: f64,
    pub seed: u64,
    pub integrator: IntegratorSection,
    pub out: String,
}

/// Builds the closed-geodesic set (or twisted rotations on SO(n)), checks
/// the gradient residual and probes stability. Writes `report.json`,
/// `eqp.json` (circle and torus) and `meta.json`.
pub fn equilibria(args: &EquilibriaArgs) -> CmdResult<i32> {
    let kind: ManifoldKind = args.manifold.parse().map_err(|e| ConfigError(format!("manifold: {e}")))?;
    let flow: FlowKind = args.flow.parse().map_err(|e| ConfigError(format!("flow: {e}")))?;
    flow.check_compatible(kind)?;
    let winding: Vec<i64> = args
        .winding
        .split(',')
        .map(|t| t.trim().parse::<i64>().map_err(|_| ConfigError(format!("winding: bad integer {t:?}"))))
        .collect::<Result<_, _>>()?;
    let unit = vec![1.0; args.n];
    let weights = args.weights.clone().unwrap_or(unit);
    if weights.len() != args.n {
        return Err(ConfigError(format!("weights: need {} weights, got {}", args.n, weights.len())).into());
    }
    let graph = geosync::WeightedGraph::cycle(args.n, Some(&weights))?;
    let out = PathBuf::from(&args.out);
    fs::create_dir_all(&out)?;

    let cfg: Configuration = match kind {
        ManifoldKind::Circle | ManifoldKind::FlatTorus(_) => {
            let spec = ClosedGeodesicSpec::new(kind, winding.clone())?;
            let sol = equilibria::solve_eqp(spec.length(), &weights)?;
            write_json(&out.join("eqp.json"), &serde_json::to_value(&sol)?)?;
            println!("closed geodesic of length {:.6}: spacings {:?}", spec.length(), sol.spacings);
            equilibria::build_s_configuration(&spec, &weights, args.offset)?
        }
        ManifoldKind::SpecialOrthogonal(_) => {
            if weights.iter().any(|w| *w != 1.0) {
                return Err(ConfigError("weights: twisted rotations are equilibria for unit weights only".into()).into());
            }
            crate::config::twisted(kind, args.n, &winding)?
        }
        other => {
            return Err(ConfigError(format!("manifold: equilibria are built on circle, torus:k and so:n, not {other}")).into())
        }
    };
    let mut integrator: IntegratorSettings = args.integrator.settings()?;
    integrator.record_stride = None;
    let probe = ProbeSettings { n_directions: args.directions, magnitude: args.delta, integrator, seed: args.seed };
    let report = equilibria::stability_probe(&cfg, &graph, flow, &probe)?;
    write_json(&out.join("report.json"), &report.to_json())?;
    write_json(
        &out.join("meta.json"),
        &serde_json::json!({
            "seed": args.seed,
            "version": env!("CARGO_PKG_VERSION"),
            "manifold": kind.to_string(),
            "flow": flow.name(),
            "agents": args.n,
            "weights": weights,
            "winding": winding,
            "directions": args.directions,
            "delta": args.delta,
            "symmetry_rank": report.symmetry_rank,
            "zero_modes": report.zero_modes,
        }),
    )?;
    println!(
        "{flow} on {kind}, {} agents: residual {:.2e}, smallest Hessian eigenvalue {:.3e}, {} zero modes (symmetry rank {}), return {:.2}, consensus {:.2}: {}",
        args.n,
        report.residual,
        report.hessian_eigs.first().copied().unwrap_or(0.0),
        report.zero_modes,
        report.symmetry_rank,
        report.return_fraction,
        report.consensus_fraction,
        serde_json::to_value(report.classification)?.as_str().unwrap_or_default()
    );
    Ok(0)
}

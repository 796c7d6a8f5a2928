//! Monte Carlo estimation of the consensus basin measure.
//!
//! Trial `k` draws its agents from `ChaCha8Rng::seed_from_u64(seed)` on
//! stream `k`, so the estimate depends only on the experiment and never on
//! how trials are scheduled across threads.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flows::{self, Configuration, FlowKind};
use crate::graphs::WeightedGraph;
use crate::integrate::{integrate, IntegratorSettings, Outcome};
use crate::manifolds::{random_tangent, sample_uniform, ManifoldKind};

/// Environment variable read for the default worker count.
pub const WORKERS_ENV: &str = "GEOSYNC_WORKERS";

/// Worker count from `GEOSYNC_WORKERS`, if set to a positive integer.
pub fn default_workers() -> Option<usize> {
    std::env::var(WORKERS_ENV).ok()?.trim().parse().ok().filter(|w| *w > 0)
}

#[derive(Debug, Clone)]
pub struct BasinExperiment {
    pub kind: ManifoldKind,
    pub flow: FlowKind,
    pub graph: WeightedGraph,
    pub trials: usize,
    pub settings: IntegratorSettings,
    pub seed: u64,
    /// Size of the thread pool; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl BasinExperiment {
    /// Table 1 setup: `cycle(5)` and the canonical Stiefel flow.
    pub fn stiefel_cycle5(p: usize, n: usize, trials: usize, seed: u64) -> Result<Self> {
        let kind = ManifoldKind::Stiefel { p, n };
        kind.validate()?;
        Ok(Self {
            kind,
            flow: FlowKind::StiefelCanonical,
            graph: WeightedGraph::cycle(5, None)?,
            trials,
            settings: IntegratorSettings::default(),
            seed,
            workers: None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasinEstimate {
    pub successes: usize,
    pub trials: usize,
    pub mu_hat: f64,
    pub wilson_halfwidth_95: f64,
    /// Keyed by outcome name.
    pub histogram: BTreeMap<String, usize>,
    /// Trials that ended in a numerical error; counted as HorizonExhausted.
    pub failed_trials: usize,
    pub seed: u64,
}

impl BasinEstimate {
    fn from_outcomes(outcomes: &[(Outcome, bool)], seed: u64) -> Self {
        let mut histogram: BTreeMap<String, usize> =
            [Outcome::Consensus, Outcome::NonConsensusEquilibrium, Outcome::HorizonExhausted]
                .iter()
                .map(|o| (o.name().to_string(), 0))
                .collect();
        for (o, _) in outcomes {
            *histogram.get_mut(o.name()).unwrap() += 1;
        }
        let successes = histogram[Outcome::Consensus.name()];
        let trials = outcomes.len();
        Self {
            successes,
            trials,
            mu_hat: successes as f64 / trials as f64,
            wilson_halfwidth_95: wilson_halfwidth(successes, trials, 1.96),
            histogram,
            failed_trials: outcomes.iter().filter(|o| o.1).count(),
            seed,
        }
    }

    /// Center of the Wilson interval.
    pub fn wilson_center(&self) -> f64 {
        wilson_center(self.successes, self.trials, 1.96)
    }
}

pub fn wilson_center(successes: usize, trials: usize, z: f64) -> f64 {
    let n = trials as f64;
    let p = successes as f64 / n;
    (p + z * z / (2.0 * n)) / (1.0 + z * z / n)
}

/// Half-width of the Wilson score interval.
pub fn wilson_halfwidth(successes: usize, trials: usize, z: f64) -> f64 {
    let n = trials as f64;
    let p = successes as f64 / n;
    z / (1.0 + z * z / n) * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt()
}

fn trial_rng(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

/// Initial configuration of trial `k` (1-based).
pub fn trial_initial(kind: ManifoldKind, n_agents: usize, seed: u64, k: u64) -> Configuration {
    let mut rng = trial_rng(seed, k);
    let states = (0..n_agents).map(|_| sample_uniform(kind, &mut rng).into_value()).collect();
    Configuration::from_states_unchecked(kind, states)
}

fn run_trial(exp: &BasinExperiment, k: u64) -> (Outcome, bool) {
    let initial = trial_initial(exp.kind, exp.graph.n_vertices(), exp.seed, k);
    match integrate(exp.flow, &initial, &exp.graph, &exp.settings) {
        Ok(rec) => (rec.outcome, false),
        Err(_) => (Outcome::HorizonExhausted, true),
    }
}

/// Runs `job` on a pool of `workers` threads, or on the global pool for `None`.
pub fn with_workers<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(job()),
        Some(0) => Err(Error::InvalidArgument("worker count must be positive".into())),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("cannot build thread pool: {e}")))?;
            Ok(pool.install(job))
        }
    }
}

pub fn run_basin(exp: &BasinExperiment) -> Result<BasinEstimate> {
    exp.kind.validate()?;
    exp.flow.check_compatible(exp.kind)?;
    exp.settings.validate()?;
    if exp.trials == 0 {
        return Err(Error::InvalidArgument("trial count must be at least 1".into()));
    }
    let outcomes = with_workers(exp.workers, || {
        (1..=exp.trials as u64).into_par_iter().map(|k| run_trial(exp, k)).collect::<Vec<_>>()
    })?;
    Ok(BasinEstimate::from_outcomes(&outcomes, exp.seed))
}

#[derive(Debug, Clone, Serialize)]
pub struct Table1Cell {
    pub p: usize,
    pub n: usize,
    pub estimate: BasinEstimate,
    /// `⅔n − 1 < p ≤ n − 2`
    pub bold: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Table1 {
    pub cells: Vec<Table1Cell>,
    pub trials: usize,
    pub seed: u64,
}

pub fn is_bold_cell(p: usize, n: usize) -> bool {
    let (p, n) = (p as f64, n as f64);
    2.0 * n / 3.0 - 1.0 < p && p <= n - 2.0
}

/// The cells `(p, n)` with `1 ≤ p ≤ pmax`, `2 ≤ n ≤ nmax` and `p ≤ n`, row by row.
pub fn table1_cells(pmax: usize, nmax: usize) -> Vec<(usize, usize)> {
    (1..=pmax).flat_map(|p| (2..=nmax).filter(move |&n| p <= n).map(move |n| (p, n))).collect()
}

pub fn table1(pmax: usize, nmax: usize, trials: usize, seed: u64, workers: Option<usize>) -> Result<Table1> {
    table1_with(pmax, nmax, trials, seed, workers, &IntegratorSettings::default())
}

pub fn table1_with(
    pmax: usize,
    nmax: usize,
    trials: usize,
    seed: u64,
    workers: Option<usize>,
    settings: &IntegratorSettings,
) -> Result<Table1> {
    let cells = table1_cells(pmax, nmax)
        .into_iter()
        .map(|(p, n)| {
            let mut exp = BasinExperiment::stiefel_cycle5(p, n, trials, seed)?;
            exp.workers = workers;
            exp.settings = settings.clone();
            Ok(Table1Cell { p, n, estimate: run_basin(&exp)?, bold: is_bold_cell(p, n) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Table1 { cells, trials, seed })
}

impl Table1 {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("p,n,mu_hat,halfwidth,M,seed\n");
        for c in &self.cells {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                c.p, c.n, c.estimate.mu_hat, c.estimate.wilson_halfwidth_95, self.trials, self.seed
            );
        }
        s
    }

    /// Rows `p`, columns `n`; bold cells are wrapped in asterisks.
    pub fn to_text(&self) -> String {
        let ps: Vec<usize> = {
            let mut v: Vec<usize> = self.cells.iter().map(|c| c.p).collect();
            v.dedup();
            v
        };
        let mut ns: Vec<usize> = self.cells.iter().map(|c| c.n).collect();
        ns.sort_unstable();
        ns.dedup();
        let width = 7;
        let mut s = format!("{:>4} |", "p\\n");
        for n in &ns {
            let _ = write!(s, "{n:>width$}");
        }
        s.push('\n');
        s.push_str(&"-".repeat(6 + width * ns.len()));
        s.push('\n');
        for p in ps {
            let _ = write!(s, "{p:>4} |");
            for n in &ns {
                let cell = self.cells.iter().find(|c| c.p == p && c.n == *n);
                let text = match cell {
                    Some(c) if c.bold => format!("*{:.2}*", c.estimate.mu_hat),
                    Some(c) => format!("{:.2}", c.estimate.mu_hat),
                    None => String::new(),
                };
                let _ = write!(s, "{text:>width$}");
            }
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ObstructionReport {
    pub kind: String,
    pub flow: FlowKind,
    pub agents: usize,
    pub winding: Vec<i64>,
    pub delta: f64,
    pub seed: u64,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub outcome: Outcome,
    pub t_final: f64,
}

/// Twisted initial state on a winding closed geodesic, perturbed per agent
/// by a random tangent vector of norm `delta`, integrated on the unweighted
/// cycle graph.
pub fn obstruction_demo(
    kind: ManifoldKind,
    n_agents: usize,
    winding: &[i64],
    delta: f64,
    flow: FlowKind,
    settings: &IntegratorSettings,
    seed: u64,
) -> Result<ObstructionReport> {
    kind.validate()?;
    if !(delta >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise size must be nonnegative, got {delta}")));
    }
    if n_agents < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 agents, got {n_agents}")));
    }
    let one = |w: &[i64]| -> Result<i64> {
        match w {
            [q] => Ok(*q),
            _ => Err(Error::InvalidArgument(format!("{kind} needs one winding number, got {}", w.len()))),
        }
    };
    let twisted = match kind {
        ManifoldKind::Circle => Configuration::twisted_circle(n_agents, one(winding)?, 0.0),
        ManifoldKind::FlatTorus(k) => {
            if winding.len() != k {
                return Err(Error::InvalidArgument(format!("{kind} needs {k} winding numbers, got {}", winding.len())));
            }
            Configuration::twisted_torus(n_agents, winding)
        }
        ManifoldKind::SpecialOrthogonal(d) => Configuration::twisted_rotations(d, n_agents, one(winding)?),
        other if other.is_multiply_connected() => {
            return Err(Error::Capability(format!("twisted states are built on circle, torus and so:n only, not {other}")))
        }
        other => return Err(Error::Capability(format!("{other} is simply connected; no winding obstruction"))),
    };
    flow.check_compatible(kind)?;
    let graph = WeightedGraph::cycle(n_agents, None)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states: Vec<DMatrix<f64>> = twisted
        .points()
        .iter()
        .map(|x| {
            if delta == 0.0 {
                return Ok(x.value().clone());
            }
            let v = random_tangent(x, &mut rng);
            let nrm = v.norm();
            let v = v.value() * (delta / nrm.max(1e-300));
            if kind.supports_log() {
                kind.exp_raw(x.value(), &v)
            } else {
                kind.retract_raw(&(x.value() + v))
            }
        })
        .collect::<Result<_>>()?;
    let initial = Configuration::from_states_unchecked(kind, states);
    let initial_energy = flows::energy(flow, &initial, &graph)?;
    let rec = integrate(flow, &initial, &graph, settings)?;
    Ok(ObstructionReport {
        kind: kind.to_string(),
        flow,
        agents: n_agents,
        winding: winding.to_vec(),
        delta,
        seed,
        initial_energy,
        final_energy: rec.final_energy(),
        outcome: rec.outcome,
        t_final: rec.t_final(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_matches_hand_computation() {
        // n = 100, p = 0.5, z = 1.96: 1.96/1.038416 * sqrt(0.0025 + 0.00009604)
        let hw = wilson_halfwidth(50, 100, 1.96);
        let want = 1.96 / (1.0 + 1.96f64 * 1.96 / 100.0) * (0.25f64 / 100.0 + 1.96 * 1.96 / 40000.0).sqrt();
        assert!((hw - want).abs() < 1e-15);
        assert!((hw - 0.0961).abs() < 1e-3);
        assert!((wilson_center(50, 100, 1.96) - 0.5).abs() < 1e-15);
        // The interval stays inside [0, 1] at the extremes.
        let c = wilson_center(0, 20, 1.96);
        assert!(c - wilson_halfwidth(0, 20, 1.96) >= -1e-15);
    }

    #[test]
    fn bold_cells() {
        let bold: Vec<(usize, usize)> = table1_cells(9, 9).into_iter().filter(|&(p, n)| is_bold_cell(p, n)).collect();
        assert!(bold.contains(&(2, 4)));
        assert!(bold.contains(&(3, 5)));
        assert!(!bold.contains(&(1, 3)));
        assert!(!bold.contains(&(4, 5)));
        assert!(!bold.contains(&(5, 5)));
        for (p, n) in bold {
            assert!(3 * p + 3 > 2 * n && p + 2 <= n);
        }
    }

    #[test]
    fn cell_count() {
        assert_eq!(table1_cells(3, 4).len(), 8);
        assert_eq!(table1_cells(9, 9).len(), 44);
    }

    #[test]
    fn trial_streams_differ_and_repeat() {
        let a = trial_initial(ManifoldKind::Sphere(2), 3, 5, 1);
        let b = trial_initial(ManifoldKind::Sphere(2), 3, 5, 2);
        let a2 = trial_initial(ManifoldKind::Sphere(2), 3, 5, 1);
        assert_eq!(a.states(), a2.states());
        assert_ne!(a.states(), b.states());
    }

    #[test]
    fn sphere_complete_graph_always_synchronizes() {
        let exp = BasinExperiment {
            kind: ManifoldKind::Sphere(2),
            flow: FlowKind::ExtrinsicConstNorm,
            graph: WeightedGraph::complete(3).unwrap(),
            trials: 200,
            settings: IntegratorSettings::default(),
            seed: 11,
            workers: None,
        };
        let est = run_basin(&exp).unwrap();
        assert_eq!(est.successes, 200);
        assert_eq!(est.mu_hat, 1.0);
        assert_eq!(est.failed_trials, 0);
    }

    #[test]
    fn reproducible_across_worker_counts() {
        let mut exp = BasinExperiment::stiefel_cycle5(1, 2, 40, 3).unwrap();
        exp.workers = Some(1);
        let one = run_basin(&exp).unwrap();
        exp.workers = Some(3);
        let three = run_basin(&exp).unwrap();
        assert_eq!(one, three);
        assert_eq!(one.histogram.values().sum::<usize>(), 40);
    }

    #[test]
    fn rejects_zero_trials_and_incompatible_flow() {
        let mut exp = BasinExperiment::stiefel_cycle5(1, 2, 0, 3).unwrap();
        assert!(run_basin(&exp).is_err());
        exp.trials = 5;
        exp.kind = ManifoldKind::FlatTorus(2);
        assert!(matches!(run_basin(&exp), Err(Error::Capability(_))));
    }

    #[test]
    fn table_layout() {
        let t = table1(2, 3, 4, 0, None).unwrap();
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("p,n,mu_hat,halfwidth,M,seed"));
        assert_eq!(lines.count(), 4);
        let text = t.to_text();
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn obstruction_capabilities() {
        let s = IntegratorSettings::default();
        let err = obstruction_demo(ManifoldKind::Sphere(2), 5, &[1], 0.0, FlowKind::ExtrinsicU, &s, 0).unwrap_err();
        assert!(matches!(err, Error::Capability(_)));
        assert!(obstruction_demo(ManifoldKind::FlatTorus(2), 5, &[1], 0.0, FlowKind::ExtrinsicU, &s, 0).is_err());
    }

    #[test]
    fn unperturbed_twisted_circle_stays() {
        let s = IntegratorSettings::default();
        let r = obstruction_demo(ManifoldKind::Circle, 10, &[1], 0.0, FlowKind::ExtrinsicU, &s, 0).unwrap();
        assert_eq!(r.outcome, Outcome::NonConsensusEquilibrium);
        let want = 5.0 * (2.0 - 2.0 * (std::f64::consts::PI / 5.0).cos());
        assert!((r.final_energy - want).abs() < 1e-12);
    }
}

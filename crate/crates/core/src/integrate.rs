//! Fixed-step integration of the consensus flows.
//!
//! Each step is a classical fourth-order Runge–Kutta step in the ambient
//! space followed by a retraction onto the manifold. The extrinsic
//! right-hand sides are polynomial in the ambient entries, so the stages
//! are evaluated where they land; the intrinsic right-hand side needs
//! logarithms and is evaluated at the retracted stage point instead, which
//! is still a smooth extension of the vector field off the manifold.

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flows::{self, Configuration, FlowKind};
use crate::graphs::WeightedGraph;
use crate::manifolds::ManifoldKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Retraction {
    /// Polar factor (Stiefel family) or per-circle normalization (torus).
    PolarFactor,
    /// `x ← exp_x(Π_x Δ)`; only on kinds with an exponential map.
    ExpBased,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSettings {
    pub step: f64,
    pub horizon: f64,
    pub retraction: Retraction,
    /// Threshold of the stop criterion `max_edges ½‖X_j - X_k‖ < ε`.
    pub consensus_epsilon: f64,
    /// Stop as a non-consensus equilibrium once every agent's right-hand
    /// side is below this norm. Zero disables the check.
    pub stall_gradient_tol: f64,
    /// Keep every `k`-th configuration in the record; `None` keeps none.
    pub record_stride: Option<usize>,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            step: 1e-2,
            horizon: 100.0,
            retraction: Retraction::PolarFactor,
            consensus_epsilon: 1e-2,
            stall_gradient_tol: 1e-8,
            record_stride: None,
        }
    }
}

impl IntegratorSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !(self.horizon > 0.0) || self.step >= self.horizon {
            return Err(Error::InvalidArgument(format!(
                "need 0 < step < horizon, got step {} horizon {}",
                self.step, self.horizon
            )));
        }
        if !(self.consensus_epsilon > 0.0) {
            return Err(Error::InvalidArgument("consensus epsilon must be positive".into()));
        }
        if !(self.stall_gradient_tol >= 0.0) {
            return Err(Error::InvalidArgument("stall tolerance must be nonnegative".into()));
        }
        if self.record_stride == Some(0) {
            return Err(Error::InvalidArgument("record stride must be positive".into()));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.horizon / self.step).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Consensus,
    NonConsensusEquilibrium,
    HorizonExhausted,
}

impl Outcome {
    pub fn name(&self) -> &'static str {
        match self {
            Outcome::Consensus => "Consensus",
            Outcome::NonConsensusEquilibrium => "NonConsensusEquilibrium",
            Outcome::HorizonExhausted => "HorizonExhausted",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub flow: FlowKind,
    /// Time of every entry in `energies`, `max_edge_chord` and `residuals`.
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    /// `max_edges ‖X_j - X_k‖`.
    pub max_edge_chord: Vec<f64>,
    /// Largest constraint residual over agents.
    pub residuals: Vec<f64>,
    /// Strided `(t, configuration)` samples.
    pub configurations: Vec<(f64, Configuration)>,
    pub outcome: Outcome,
    pub final_config: Configuration,
    pub steps: usize,
}

impl TrajectoryRecord {
    pub fn t_final(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    pub fn final_energy(&self) -> f64 {
        *self.energies.last().unwrap_or(&0.0)
    }

    /// Largest single-step energy increase (negative when strictly decreasing).
    pub fn max_energy_increase(&self) -> f64 {
        self.energies
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }

    /// `{outcome, final_energy, t_final, steps}`.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "outcome": self.outcome.name(),
            "final_energy": self.final_energy(),
            "t_final": self.t_final(),
            "steps": self.steps,
        })
    }

    /// CSV with header `t,agent,x0,…,x{m-1},energy`; one row per agent per
    /// recorded configuration. Matrix entries are flattened column-major and
    /// agents are numbered from 1.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let kind = self.final_config.kind();
        let (r, c) = kind.shape();
        let m = r * c;
        let mut header = String::from("t,agent");
        for k in 0..m {
            header.push_str(&format!(",x{k}"));
        }
        header.push_str(",energy");
        writeln!(w, "{header}")?;
        for (t, cfg) in &self.configurations {
            let energy = self.energy_at(*t);
            for (i, x) in cfg.states().iter().enumerate() {
                let mut line = format!("{t},{}", i + 1);
                for v in x.iter() {
                    line.push_str(&format!(",{v}"));
                }
                line.push_str(&format!(",{energy}"));
                writeln!(w, "{line}")?;
            }
        }
        Ok(())
    }

    fn energy_at(&self, t: f64) -> f64 {
        let idx = self
            .times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
            .unwrap_or(self.times.len() - 1);
        self.energies[idx]
    }
}

/// `max_edges ½‖X_j - X_k‖ < ε`.
pub fn check_consensus(cfg: &Configuration, g: &WeightedGraph, epsilon: f64) -> bool {
    max_edge_chord(cfg.states(), g) * 0.5 < epsilon
}

fn max_edge_chord(states: &[DMatrix<f64>], g: &WeightedGraph) -> f64 {
    g.edges()
        .iter()
        .map(|e| (&states[e.i] - &states[e.j]).norm())
        .fold(0.0, f64::max)
}

/// Runge–Kutta stepper with post-step retraction; no stopping logic.
pub struct Rk4Stepper<'g> {
    flow: FlowKind,
    kind: ManifoldKind,
    graph: &'g WeightedGraph,
    step: f64,
    retraction: Retraction,
    t: f64,
    states: Vec<DMatrix<f64>>,
    k: [Vec<DMatrix<f64>>; 4],
    stage: Vec<DMatrix<f64>>,
    k1_valid: bool,
}

impl<'g> Rk4Stepper<'g> {
    pub fn new(flow: FlowKind, initial: Configuration, graph: &'g WeightedGraph, settings: &IntegratorSettings) -> Result<Self> {
        settings.validate()?;
        let kind = initial.kind();
        flow.check_compatible(kind)?;
        if graph.n_vertices() != initial.len() {
            return Err(Error::InvalidArgument(format!(
                "graph has {} vertices but configuration has {} agents",
                graph.n_vertices(),
                initial.len()
            )));
        }
        if settings.retraction == Retraction::ExpBased && !kind.supports_log() {
            return Err(Error::Capability(format!("exponential retraction unsupported on {kind}")));
        }
        Ok(Self {
            flow,
            kind,
            graph,
            step: settings.step,
            retraction: settings.retraction,
            t: 0.0,
            states: initial.into_states(),
            k: Default::default(),
            stage: Vec::new(),
            k1_valid: false,
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn states(&self) -> &[DMatrix<f64>] {
        &self.states
    }

    pub fn config(&self) -> Configuration {
        Configuration::from_states_unchecked(self.kind, self.states.clone())
    }

    fn at_time(&self, e: Error) -> Error {
        match e {
            Error::TrajectoryInjectivity { i, j, reason, .. } => Error::TrajectoryInjectivity { time: self.t, i: i + 1, j: j + 1, reason },
            other => other,
        }
    }

    fn ensure_k1(&mut self) -> Result<()> {
        if !self.k1_valid {
            let mut k1 = std::mem::take(&mut self.k[0]);
            let r = flows::rhs_raw(self.flow, self.kind, &self.states, self.graph, &mut k1);
            self.k[0] = k1;
            r.map_err(|e| self.at_time(e))?;
            self.k1_valid = true;
        }
        Ok(())
    }

    /// Largest per-agent norm of the right-hand side at the current state.
    pub fn rhs_norm(&mut self) -> Result<f64> {
        self.ensure_k1()?;
        Ok(self.k[0].iter().map(|v| v.norm()).fold(0.0, f64::max))
    }

    fn eval_stage(&mut self, idx: usize, from: usize, scale: f64) -> Result<()> {
        let n = self.states.len();
        self.stage.resize_with(n, || DMatrix::zeros(0, 0));
        let feasible = self.flow.needs_feasible_stages();
        for i in 0..n {
            let mut s = &self.states[i] + &self.k[from][i] * scale;
            if feasible {
                s = self.kind.retract_raw(&s)?;
            }
            self.stage[i] = s;
        }
        let mut out = std::mem::take(&mut self.k[idx]);
        let r = flows::rhs_raw(self.flow, self.kind, &self.stage, self.graph, &mut out);
        self.k[idx] = out;
        r.map_err(|e| self.at_time(e))
    }

    pub fn step(&mut self) -> Result<()> {
        let h = self.step;
        self.ensure_k1()?;
        self.eval_stage(1, 0, 0.5 * h)?;
        self.eval_stage(2, 1, 0.5 * h)?;
        self.eval_stage(3, 2, h)?;
        for i in 0..self.states.len() {
            let delta = (&self.k[0][i] + &self.k[1][i] * 2.0 + &self.k[2][i] * 2.0 + &self.k[3][i]) * (h / 6.0);
            let next = match self.retraction {
                Retraction::PolarFactor => self.kind.retract_raw(&(&self.states[i] + &delta)),
                Retraction::ExpBased => {
                    let v = self.kind.project_raw(&self.states[i], &delta);
                    self.kind.exp_raw(&self.states[i], &v)
                }
            };
            let next = next.map_err(|_| Error::BlowUp(self.t + h))?;
            if next.iter().any(|v| !v.is_finite()) {
                return Err(Error::BlowUp(self.t + h));
            }
            self.states[i] = next;
        }
        self.t += h;
        self.k1_valid = false;
        Ok(())
    }
}

/// Integrates `flow` from `initial` until the stop criterion holds, the
/// right-hand side stalls, or the horizon is reached.
pub fn integrate(
    flow: FlowKind,
    initial: &Configuration,
    g: &WeightedGraph,
    settings: &IntegratorSettings,
) -> Result<TrajectoryRecord> {
    let kind = initial.kind();
    let initial = Configuration::from_states(kind, initial.states().to_vec())?;
    let mut stepper = Rk4Stepper::new(flow, initial, g, settings)?;
    let energy_kind = flow.energy();
    let n_steps = settings.n_steps();

    let mut rec = TrajectoryRecord {
        flow,
        times: Vec::new(),
        energies: Vec::new(),
        max_edge_chord: Vec::new(),
        residuals: Vec::new(),
        configurations: Vec::new(),
        outcome: Outcome::HorizonExhausted,
        final_config: stepper.config(),
        steps: 0,
    };

    let mut steps = 0usize;
    loop {
        let t = stepper.time();
        let states = stepper.states();
        let energy = flows::energy_raw(energy_kind, kind, states, g).map_err(|e| match e {
            Error::TrajectoryInjectivity { i, j, reason, .. } => Error::TrajectoryInjectivity { time: t, i: i + 1, j: j + 1, reason },
            other => other,
        })?;
        if !energy.is_finite() {
            return Err(Error::BlowUp(t));
        }
        let chord = max_edge_chord(states, g);
        rec.times.push(t);
        rec.energies.push(energy);
        rec.max_edge_chord.push(chord);
        rec.residuals.push(states.iter().map(|s| kind.residual(s)).fold(0.0, f64::max));
        if let Some(stride) = settings.record_stride {
            if steps.is_multiple_of(stride) {
                rec.configurations.push((t, stepper.config()));
            }
        }

        let outcome = if 0.5 * chord < settings.consensus_epsilon {
            Some(Outcome::Consensus)
        } else if settings.stall_gradient_tol > 0.0 && stepper.rhs_norm()? < settings.stall_gradient_tol {
            Some(Outcome::NonConsensusEquilibrium)
        } else if steps >= n_steps {
            Some(Outcome::HorizonExhausted)
        } else {
            None
        };
        if let Some(o) = outcome {
            rec.outcome = o;
            break;
        }
        stepper.step()?;
        steps += 1;
    }

    if let Some(stride) = settings.record_stride {
        if !steps.is_multiple_of(stride) {
            rec.configurations.push((stepper.time(), stepper.config()));
        }
    }
    rec.final_config = stepper.config();
    rec.steps = steps;
    Ok(rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::{sample_uniform, ManifoldPoint};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn consensus_start_stops_immediately() {
        let cfg = Configuration::consensus(&ManifoldPoint::circle(0.7), 6);
        let g = WeightedGraph::cycle(6, None).unwrap();
        let rec = integrate(FlowKind::ExtrinsicU, &cfg, &g, &IntegratorSettings::default()).unwrap();
        assert_eq!(rec.outcome, Outcome::Consensus);
        assert_eq!(rec.t_final(), 0.0);
        assert_eq!(rec.steps, 0);
    }

    #[test]
    fn twisted_state_is_a_non_consensus_equilibrium() {
        let cfg = Configuration::twisted_circle(10, 1, 0.0);
        let g = WeightedGraph::cycle(10, None).unwrap();
        let rec = integrate(FlowKind::ExtrinsicU, &cfg, &g, &IntegratorSettings::default()).unwrap();
        assert_eq!(rec.outcome, Outcome::NonConsensusEquilibrium);
        let expected = 5.0 * (2.0 - 2.0 * (2.0 * PI / 10.0).cos());
        assert!((rec.final_energy() - expected).abs() < 1e-6);
    }

    #[test]
    fn check_consensus_examples() {
        let g = WeightedGraph::from_edge_list(2, &[(0, 1, 1.0)]).unwrap();
        let same = Configuration::consensus(&ManifoldPoint::circle(0.2), 2);
        assert!(check_consensus(&same, &g, 1e-12));
        let anti = Configuration::new(vec![ManifoldPoint::circle(0.0), ManifoldPoint::circle(PI)]).unwrap();
        assert!(!check_consensus(&anti, &g, 0.5));
        let near = Configuration::new(vec![ManifoldPoint::circle(0.0), ManifoldPoint::circle(0.01)]).unwrap();
        // ½ chord = sin(0.005) < 0.01.
        assert!(check_consensus(&near, &g, 0.01));
        assert!(!check_consensus(&near, &g, 0.005f64.sin() * 0.999));
    }

    #[test]
    fn sphere_complete_graph_reaches_consensus() {
        let g = WeightedGraph::complete(3).unwrap();
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts = (0..3).map(|_| sample_uniform(ManifoldKind::Sphere(2), &mut rng)).collect();
            let cfg = Configuration::new(pts).unwrap();
            let rec = integrate(FlowKind::ExtrinsicU, &cfg, &g, &IntegratorSettings::default()).unwrap();
            assert_eq!(rec.outcome, Outcome::Consensus, "seed {seed}");
        }
    }

    #[test]
    fn settings_validation() {
        let mut s = IntegratorSettings::default();
        assert!(s.validate().is_ok());
        s.step = 200.0;
        assert!(s.validate().is_err());
        let s = IntegratorSettings { consensus_epsilon: 0.0, ..Default::default() };
        assert!(s.validate().is_err());
    }

    #[test]
    fn intrinsic_injectivity_error_names_edge() {
        // Antipodal neighbors: the intrinsic flow is undefined at t = 0.
        let cfg = Configuration::new(vec![ManifoldPoint::circle(0.0), ManifoldPoint::circle(PI), ManifoldPoint::circle(0.1)]).unwrap();
        let g = WeightedGraph::cycle(3, None).unwrap();
        let err = integrate(FlowKind::IntrinsicV, &cfg, &g, &IntegratorSettings::default()).unwrap_err();
        match err {
            Error::TrajectoryInjectivity { time, i, j, .. } => {
                assert_eq!(time, 0.0);
                assert_eq!((i, j), (1, 2));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn exp_retraction_on_torus() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let base = ManifoldPoint::torus(&[0.3, 1.0]);
        let pts = (0..4)
            .map(|_| {
                let v = crate::manifolds::random_tangent(&base, &mut rng).scaled(0.4);
                crate::manifolds::exp_map(&base, &v).unwrap()
            })
            .collect();
        let cfg = Configuration::new(pts).unwrap();
        let g = WeightedGraph::cycle(4, None).unwrap();
        let polar = integrate(FlowKind::IntrinsicV, &cfg, &g, &IntegratorSettings::default()).unwrap();
        let settings = IntegratorSettings { retraction: Retraction::ExpBased, ..Default::default() };
        let expb = integrate(FlowKind::IntrinsicV, &cfg, &g, &settings).unwrap();
        assert_eq!(polar.outcome, Outcome::Consensus);
        assert_eq!(expb.outcome, Outcome::Consensus);
        assert!((polar.t_final() - expb.t_final()).abs() < 0.02);
    }

    #[test]
    fn csv_and_summary_layout() {
        let cfg = Configuration::twisted_circle(3, 0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cfg = Configuration::new(cfg.points().into_iter().map(|_| sample_uniform(ManifoldKind::Circle, &mut rng)).collect()).unwrap();
        let g = WeightedGraph::cycle(3, None).unwrap();
        let settings = IntegratorSettings { record_stride: Some(10), horizon: 1.0, ..Default::default() };
        let rec = integrate(FlowKind::ExtrinsicU, &cfg, &g, &settings).unwrap();
        let mut buf = Vec::new();
        rec.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,agent,x0,x1,energy");
        assert_eq!(lines.count(), 3 * rec.configurations.len());
        let json = rec.summary_json();
        let keys: Vec<_> = json.as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys.len(), 4);
        for k in ["outcome", "final_energy", "t_final", "steps"] {
            assert!(json.get(k).is_some());
        }
    }
}

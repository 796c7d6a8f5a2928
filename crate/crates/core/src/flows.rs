//! Disagreement energies and the right-hand sides of the consensus flows.
//!
//! With `A_i = Σ_j w_ij X_j` the neighbor sum of agent `i`:
//!
//! * `intrinsic`: `ẋ_i = Σ_j w_ij log_{x_i}(x_j)`, the negative gradient of
//!   `V = ½ Σ_{edges} w_ij d_g(x_i, x_j)²`.
//! * `extrinsic`: `Ẋ_i = -Π_i Σ_j w_ij (X_i - X_j)`, the negative gradient of
//!   `U = ½ Σ_{edges} w_ij ‖X_i - X_j‖²`.
//! * `extrinsic-constnorm`: `Ẋ_i = Π_i A_i`, equal to the previous one on
//!   manifolds of constant Frobenius norm.
//! * `stiefel`: `Ṡ_i = S_i skew(S_iᵀ A_i) + (I - S_i S_iᵀ) A_i`.
//! * `orthogonal`: `Q̇_i = ½ Σ_j w_ij (Q_j - Q_i Q_jᵀ Q_i) = Q_i skew(Q_iᵀ A_i)`.
//!   This is the negative gradient of `U` on O(n) with the same ½-sum
//!   normalization as above; the unnormalized form runs twice as fast.
//! * `lifted-stiefel`: the state `R_i = [S_i | s_i] ∈ SO(n)` where `S_i`
//!   follows the `stiefel` flow on St(n-1, n) and the last column is
//!   carried along so that `R_i` stays orthogonal:
//!   `ṡ_i = -S_i (Σ_j w_ij S_jᵀ) s_i = 2 skew(Σ_j w_ij S_j S_iᵀ) s_i`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graphs::WeightedGraph;
use crate::integrate::{IntegratorSettings, Rk4Stepper};
use crate::linalg;
use crate::manifolds::{ManifoldKind, ManifoldPoint, TangentVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum FlowKind {
    IntrinsicV,
    ExtrinsicU,
    ExtrinsicConstNorm,
    StiefelCanonical,
    OrthogonalGroup,
    LiftedStiefel,
}

/// Which disagreement function a flow descends.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Energy {
    Geodesic,
    Chordal,
    /// Chordal disagreement of the leading `n - 1` columns.
    LeadingColumnsChordal,
}

impl FlowKind {
    pub const ALL: [FlowKind; 6] = [
        FlowKind::IntrinsicV,
        FlowKind::ExtrinsicU,
        FlowKind::ExtrinsicConstNorm,
        FlowKind::StiefelCanonical,
        FlowKind::OrthogonalGroup,
        FlowKind::LiftedStiefel,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FlowKind::IntrinsicV => "intrinsic",
            FlowKind::ExtrinsicU => "extrinsic",
            FlowKind::ExtrinsicConstNorm => "extrinsic-constnorm",
            FlowKind::StiefelCanonical => "stiefel",
            FlowKind::OrthogonalGroup => "orthogonal",
            FlowKind::LiftedStiefel => "lifted-stiefel",
        }
    }

    pub fn is_compatible(&self, kind: ManifoldKind) -> bool {
        match self {
            FlowKind::IntrinsicV => kind.supports_log(),
            FlowKind::ExtrinsicU => true,
            FlowKind::ExtrinsicConstNorm => kind.constant_norm().is_some(),
            FlowKind::StiefelCanonical => kind.is_stiefel_family(),
            FlowKind::OrthogonalGroup | FlowKind::LiftedStiefel => kind.is_square_orthogonal(),
        }
    }

    pub fn check_compatible(&self, kind: ManifoldKind) -> Result<()> {
        if self.is_compatible(kind) {
            Ok(())
        } else {
            Err(Error::Capability(format!("{} flow unsupported on {kind}", self.name())))
        }
    }

    pub fn energy(&self) -> Energy {
        match self {
            FlowKind::IntrinsicV => Energy::Geodesic,
            FlowKind::LiftedStiefel => Energy::LeadingColumnsChordal,
            _ => Energy::Chordal,
        }
    }

    /// Whether the flow is the negative Riemannian gradient of its energy.
    pub fn is_gradient(&self) -> bool {
        !matches!(self, FlowKind::LiftedStiefel)
    }

    /// The intrinsic right-hand side uses logarithms, which only make sense
    /// at feasible points; the others are polynomial in the ambient entries.
    pub(crate) fn needs_feasible_stages(&self) -> bool {
        matches!(self, FlowKind::IntrinsicV)
    }
}

impl fmt::Display for FlowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FlowKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FlowKind::ALL
            .iter()
            .copied()
            .find(|f| f.name() == s.trim())
            .ok_or_else(|| Error::Parse(format!("unknown flow {s:?}")))
    }
}

/// The multi-agent state: one point per vertex, all of the same kind.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    kind: ManifoldKind,
    states: Vec<DMatrix<f64>>,
}

impl Configuration {
    pub fn new(points: Vec<ManifoldPoint>) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::InvalidArgument("configuration needs at least one agent".into()))?;
        let kind = first.kind();
        let mut states = Vec::with_capacity(points.len());
        for p in points {
            if p.kind() != kind {
                return Err(Error::KindMismatch(kind.to_string(), p.kind().to_string()));
            }
            let checked = ManifoldPoint::new(kind, p.into_value())?;
            states.push(checked.into_value());
        }
        Ok(Self { kind, states })
    }

    /// Validates shape and feasibility of every state.
    pub fn from_states(kind: ManifoldKind, states: Vec<DMatrix<f64>>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidArgument("configuration needs at least one agent".into()));
        }
        let states = states
            .into_iter()
            .map(|s| ManifoldPoint::new(kind, s).map(ManifoldPoint::into_value))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { kind, states })
    }

    pub(crate) fn from_states_unchecked(kind: ManifoldKind, states: Vec<DMatrix<f64>>) -> Self {
        Self { kind, states }
    }

    /// All agents at the same point.
    pub fn consensus(point: &ManifoldPoint, n: usize) -> Self {
        Self { kind: point.kind(), states: vec![point.value().clone(); n] }
    }

    /// Circle agents at angles `offset + 2πqi/N`.
    pub fn twisted_circle(n: usize, q: i64, offset: f64) -> Self {
        let states = (0..n)
            .map(|i| {
                let a = offset + std::f64::consts::TAU * q as f64 * i as f64 / n as f64;
                ManifoldPoint::circle(a).into_value()
            })
            .collect();
        Self { kind: ManifoldKind::Circle, states }
    }

    /// Torus agents at angles `2π w_f i / N` on factor `f`.
    pub fn twisted_torus(n: usize, winding: &[i64]) -> Self {
        let states = (0..n)
            .map(|i| {
                let angles: Vec<f64> = winding
                    .iter()
                    .map(|&w| std::f64::consts::TAU * w as f64 * i as f64 / n as f64)
                    .collect();
                ManifoldPoint::torus(&angles).into_value()
            })
            .collect();
        Self { kind: ManifoldKind::FlatTorus(winding.len()), states }
    }

    /// Rotations `exp(2πqi/N · E₁₂)` about the first coordinate plane of SO(n).
    pub fn twisted_rotations(dim: usize, n: usize, q: i64) -> Self {
        let states = (0..n)
            .map(|i| {
                let a = std::f64::consts::TAU * q as f64 * i as f64 / n as f64;
                let mut r = DMatrix::<f64>::identity(dim, dim);
                let (s, c) = a.sin_cos();
                r[(0, 0)] = c;
                r[(0, 1)] = -s;
                r[(1, 0)] = s;
                r[(1, 1)] = c;
                r
            })
            .collect();
        Self { kind: ManifoldKind::SpecialOrthogonal(dim), states }
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[DMatrix<f64>] {
        &self.states
    }

    pub fn into_states(self) -> Vec<DMatrix<f64>> {
        self.states
    }

    pub fn point(&self, i: usize) -> ManifoldPoint {
        ManifoldPoint::from_parts_unchecked(self.kind, self.states[i].clone())
    }

    pub fn points(&self) -> Vec<ManifoldPoint> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.states.iter().map(|s| self.kind.residual(s)).fold(0.0, f64::max)
    }

    /// Largest Frobenius distance between two configurations, over agents.
    pub fn max_chordal_gap(&self, other: &Configuration) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

fn check_graph(n_agents: usize, g: &WeightedGraph) -> Result<()> {
    if g.n_vertices() != n_agents {
        return Err(Error::InvalidArgument(format!(
            "graph has {} vertices but configuration has {n_agents} agents",
            g.n_vertices()
        )));
    }
    Ok(())
}

/// `V = ½ Σ_{edges} w_ij d_g(x_i, x_j)²`.
pub fn disagreement_v(cfg: &Configuration, g: &WeightedGraph) -> Result<f64> {
    check_graph(cfg.len(), g)?;
    FlowKind::IntrinsicV.check_compatible(cfg.kind)?;
    energy_raw(Energy::Geodesic, cfg.kind, &cfg.states, g).map_err(edge_error_public)
}

/// `U = ½ Σ_{edges} w_ij ‖X_i - X_j‖²_F`.
pub fn disagreement_u(cfg: &Configuration, g: &WeightedGraph) -> Result<f64> {
    check_graph(cfg.len(), g)?;
    Ok(chordal_energy(&cfg.states, g, None))
}

/// Energy descended by `flow`.
pub fn energy(flow: FlowKind, cfg: &Configuration, g: &WeightedGraph) -> Result<f64> {
    check_graph(cfg.len(), g)?;
    flow.check_compatible(cfg.kind)?;
    energy_raw(flow.energy(), cfg.kind, &cfg.states, g).map_err(edge_error_public)
}

fn chordal_energy(states: &[DMatrix<f64>], g: &WeightedGraph, cols: Option<usize>) -> f64 {
    g.edges()
        .iter()
        .map(|e| {
            let d = match cols {
                Some(c) => (states[e.i].columns(0, c) - states[e.j].columns(0, c)).norm_squared(),
                None => (&states[e.i] - &states[e.j]).norm_squared(),
            };
            e.weight * d
        })
        .sum::<f64>()
        * 0.5
}

/// Errors from the raw layer carry the offending edge as
/// [`Error::TrajectoryInjectivity`] with time 0; the integrator fills in
/// the time.
pub(crate) fn energy_raw(energy: Energy, kind: ManifoldKind, states: &[DMatrix<f64>], g: &WeightedGraph) -> Result<f64> {
    match energy {
        Energy::Chordal => Ok(chordal_energy(states, g, None)),
        Energy::LeadingColumnsChordal => Ok(chordal_energy(states, g, Some(kind.shape().1 - 1))),
        Energy::Geodesic => {
            let mut v = 0.0;
            for e in g.edges() {
                let l = kind
                    .log_raw(&states[e.i], &states[e.j])
                    .map_err(|err| edge_error(e.i, e.j, err))?;
                v += e.weight * l.norm_squared();
            }
            Ok(0.5 * v)
        }
    }
}

fn edge_error(i: usize, j: usize, err: Error) -> Error {
    match err {
        Error::Injectivity(reason) => Error::TrajectoryInjectivity { time: 0.0, i, j, reason },
        other => other,
    }
}

fn edge_error_public(err: Error) -> Error {
    match err {
        Error::TrajectoryInjectivity { i, j, reason, .. } => {
            Error::Injectivity(format!("edge {{{}, {}}}: {reason}", i + 1, j + 1))
        }
        other => other,
    }
}

/// Per-agent right-hand sides, written into `out` (resized as needed).
pub(crate) fn rhs_raw(
    flow: FlowKind,
    kind: ManifoldKind,
    states: &[DMatrix<f64>],
    g: &WeightedGraph,
    out: &mut Vec<DMatrix<f64>>,
) -> Result<()> {
    let (r, c) = kind.shape();
    out.resize_with(states.len(), || DMatrix::zeros(r, c));
    for (i, x) in states.iter().enumerate() {
        let v = match flow {
            FlowKind::IntrinsicV => {
                let mut acc = DMatrix::zeros(r, c);
                for &(j, w) in g.neighbors(i) {
                    let l = kind.log_raw(x, &states[j]).map_err(|err| edge_error(i, j, err))?;
                    acc += l * w;
                }
                acc
            }
            FlowKind::ExtrinsicU => {
                let mut diff = DMatrix::zeros(r, c);
                for &(j, w) in g.neighbors(i) {
                    diff += (x - &states[j]) * w;
                }
                -kind.project_raw(x, &diff)
            }
            FlowKind::ExtrinsicConstNorm => kind.project_raw(x, &neighbor_sum(states, g, i, r, c)),
            FlowKind::StiefelCanonical => {
                let a = neighbor_sum(states, g, i, r, c);
                let normal = DMatrix::<f64>::identity(r, r) - x * x.transpose();
                x * linalg::skew(&x.tr_mul(&a)) + normal * &a
            }
            FlowKind::OrthogonalGroup => {
                let mut acc = DMatrix::zeros(r, c);
                for &(j, w) in g.neighbors(i) {
                    let qj = &states[j];
                    acc += (qj - x * qj.tr_mul(x)) * (0.5 * w);
                }
                acc
            }
            FlowKind::LiftedStiefel => {
                let p = c - 1;
                let s = x.columns(0, p).into_owned();
                let last = x.column(p).into_owned();
                let mut a = DMatrix::zeros(r, p);
                for &(j, w) in g.neighbors(i) {
                    a += states[j].columns(0, p) * w;
                }
                let s_dot = &s * linalg::skew(&s.tr_mul(&a)) + &last * (last.tr_mul(&a));
                let last_dot = -(&s * (a.tr_mul(&last)));
                let mut v = DMatrix::zeros(r, c);
                v.columns_mut(0, p).copy_from(&s_dot);
                v.column_mut(p).copy_from(&last_dot);
                v
            }
        };
        out[i] = v;
    }
    Ok(())
}

fn neighbor_sum(states: &[DMatrix<f64>], g: &WeightedGraph, i: usize, r: usize, c: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(r, c);
    for &(j, w) in g.neighbors(i) {
        a += &states[j] * w;
    }
    a
}

/// Right-hand side of `flow` at `cfg`, one tangent vector per agent.
pub fn rhs(flow: FlowKind, cfg: &Configuration, g: &WeightedGraph) -> Result<Vec<TangentVector>> {
    check_graph(cfg.len(), g)?;
    flow.check_compatible(cfg.kind)?;
    if flow == FlowKind::ExtrinsicConstNorm && cfg.kind.constant_norm().is_none() {
        return Err(Error::Capability(format!("{cfg_kind} does not have constant norm", cfg_kind = cfg.kind)));
    }
    let mut out = Vec::new();
    rhs_raw(flow, cfg.kind, &cfg.states, g, &mut out).map_err(edge_error_public)?;
    out.into_iter()
        .enumerate()
        .map(|(i, v)| TangentVector::new(cfg.point(i), v))
        .collect()
}

/// Largest per-agent Frobenius norm of the right-hand side.
pub fn rhs_norm(flow: FlowKind, cfg: &Configuration, g: &WeightedGraph) -> Result<f64> {
    Ok(rhs(flow, cfg, g)?.iter().map(|v| v.norm()).fold(0.0, f64::max))
}

/// Compares the angular speeds of the constant-norm extrinsic flow on the
/// circle with the Kuramoto model `θ̇_i = Σ_j w_ij sin(θ_j - θ_i)`.
/// Returns the largest absolute deviation over agents.
pub fn kuramoto_reduction_check(cfg: &Configuration, g: &WeightedGraph) -> Result<f64> {
    if cfg.kind != ManifoldKind::Circle {
        return Err(Error::Capability(format!("Kuramoto reduction needs circle agents, got {}", cfg.kind)));
    }
    let v = rhs(FlowKind::ExtrinsicConstNorm, cfg, g)?;
    let angles: Vec<f64> = cfg.states.iter().map(|x| x[1].atan2(x[0])).collect();
    let mut worst: f64 = 0.0;
    for (i, vi) in v.iter().enumerate() {
        let x = &cfg.states[i];
        // Unit tangent J x = (-x1, x0).
        let speed = -x[1] * vi.value()[0] + x[0] * vi.value()[1];
        let kuramoto: f64 = g.neighbors(i).iter().map(|&(j, w)| w * (angles[j] - angles[i]).sin()).sum();
        worst = worst.max((speed - kuramoto).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct DivergenceReport {
    pub first: FlowKind,
    pub second: FlowKind,
    pub horizon: f64,
    pub step: f64,
    /// Max over time of the per-agent Frobenius distance between trajectories.
    pub max_divergence: f64,
    pub final_divergence: f64,
}

/// Integrates two flows in lockstep from the same initial condition for the
/// full horizon and records how far apart the trajectories get.
pub fn compare_flows(
    first: FlowKind,
    second: FlowKind,
    initial: &Configuration,
    g: &WeightedGraph,
    horizon: f64,
    settings: &IntegratorSettings,
) -> Result<DivergenceReport> {
    let mut a = Rk4Stepper::new(first, initial.clone(), g, settings)?;
    let mut b = Rk4Stepper::new(second, initial.clone(), g, settings)?;
    let steps = (horizon / settings.step).round() as usize;
    let mut max_div: f64 = 0.0;
    let mut last = 0.0;
    for _ in 0..steps {
        a.step()?;
        b.step()?;
        last = a.config().max_chordal_gap(&b.config());
        max_div = max_div.max(last);
    }
    Ok(DivergenceReport {
        first,
        second,
        horizon,
        step: settings.step,
        max_divergence: max_div,
        final_divergence: last,
    })
}

/// The O(n) gradient flow restricted to SO(n) against the flow lifted from
/// St(n-1, n), from the same initial rotations.
pub fn compare_appendix_b(
    initial: &Configuration,
    g: &WeightedGraph,
    horizon: f64,
    settings: &IntegratorSettings,
) -> Result<DivergenceReport> {
    if !matches!(initial.kind, ManifoldKind::SpecialOrthogonal(_)) {
        return Err(Error::Capability(format!("comparison needs SO(n) agents, got {}", initial.kind)));
    }
    compare_flows(FlowKind::OrthogonalGroup, FlowKind::LiftedStiefel, initial, g, horizon, settings)
}

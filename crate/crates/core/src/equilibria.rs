//! Non-consensus equilibria built on closed geodesics, and a numerical
//! stability probe for them.
//!
//! Agents on a cycle graph placed along a closed geodesic of length `L`
//! with consecutive spacings `d_i` have intrinsic energy `½ Σ w_i d_i²`.
//! Minimizing that over spacings with `Σ d_i = L` is an equality
//! constrained QP whose Lagrange conditions `w_i d_i = λ` give
//! `d_i = L w_i⁻¹ / Σ_j w_j⁻¹`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flows::{self, Configuration, FlowKind};
use crate::graphs::WeightedGraph;
use crate::integrate::{integrate, IntegratorSettings, Outcome};
use crate::manifolds::ManifoldKind;

/// Eigenvalues above this are treated as negative curvature, below it in
/// absolute value as zero modes.
pub const HESSIAN_ZERO_TOL: f64 = 1e-6;

/// Finite-difference step for the Hessian.
const HESSIAN_STEP: f64 = 1e-4;

/// A closed geodesic on the circle or flat torus, traversed at unit speed.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedGeodesicSpec {
    kind: ManifoldKind,
    winding: Vec<i64>,
}

impl ClosedGeodesicSpec {
    /// `winding` has one entry per circle factor (one for the circle) and is
    /// not all zero.
    pub fn new(kind: ManifoldKind, winding: Vec<i64>) -> Result<Self> {
        let factors = match kind {
            ManifoldKind::Circle => 1,
            ManifoldKind::FlatTorus(k) => k,
            other => return Err(Error::Capability(format!("closed geodesics are only built on circle and torus, not {other}"))),
        };
        if winding.len() != factors {
            return Err(Error::InvalidArgument(format!("{kind} needs {factors} winding numbers, got {}", winding.len())));
        }
        if winding.iter().all(|&w| w == 0) {
            return Err(Error::InvalidArgument("winding vector must not be all zero".into()));
        }
        Ok(Self { kind, winding })
    }

    pub fn kind(&self) -> ManifoldKind {
        self.kind
    }

    pub fn winding(&self) -> &[i64] {
        &self.winding
    }

    fn winding_norm(&self) -> f64 {
        self.winding.iter().map(|&w| (w * w) as f64).sum::<f64>().sqrt()
    }

    /// `2π ‖winding‖₂`.
    pub fn length(&self) -> f64 {
        std::f64::consts::TAU * self.winding_norm()
    }

    /// Per-factor angles at arc length `s`.
    pub fn angles_at(&self, s: f64) -> Vec<f64> {
        let nrm = self.winding_norm();
        self.winding.iter().map(|&w| s * w as f64 / nrm).collect()
    }

    pub fn point_at(&self, s: f64) -> DMatrix<f64> {
        let angles = self.angles_at(s);
        let mut v = DMatrix::zeros(2 * angles.len(), 1);
        for (f, a) in angles.iter().enumerate() {
            v[2 * f] = a.cos();
            v[2 * f + 1] = a.sin();
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EqpSolution {
    pub spacings: Vec<f64>,
    /// Lagrange multiplier of the length constraint, `λ = w_i d_i`.
    pub multiplier: f64,
    /// `½ Σ w_i d_i²`
    pub objective: f64,
}

/// Minimizes `½ Σ w_i d_i²` subject to `Σ d_i = length`.
pub fn solve_eqp(length: f64, weights: &[f64]) -> Result<EqpSolution> {
    if weights.is_empty() {
        return Err(Error::InvalidArgument("need at least one weight".into()));
    }
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::InvalidArgument(format!("length must be positive, got {length}")));
    }
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
        return Err(Error::InvalidArgument(format!("weights must be positive, got {w}")));
    }
    let inv_sum: f64 = weights.iter().map(|w| 1.0 / w).sum();
    let multiplier = length / inv_sum;
    let spacings: Vec<f64> = weights.iter().map(|w| multiplier / w).collect();
    // The positivity constraints of the QP are inactive at this point.
    debug_assert!(spacings.iter().all(|d| *d > 0.0));
    let objective = 0.5 * weights.iter().zip(&spacings).map(|(w, d)| w * d * d).sum::<f64>();
    Ok(EqpSolution { spacings, multiplier, objective })
}

/// Places `N = weights.len()` agents along the closed geodesic with the
/// optimal spacings, the first one at arc length `offset`. Agent `i` and
/// `i + 1` are joined by the cycle edge of weight `weights[i]`.
pub fn build_s_configuration(spec: &ClosedGeodesicSpec, weights: &[f64], offset: f64) -> Result<Configuration> {
    let n = weights.len();
    if n < 3 {
        return Err(Error::Precondition(format!("need at least 3 agents, got {n}")));
    }
    let sol = solve_eqp(spec.length(), weights)?;
    let inj = spec.kind.injectivity_radius()?;
    if let Some((i, d)) = sol.spacings.iter().enumerate().find(|(_, d)| **d >= inj) {
        return Err(Error::Precondition(format!(
            "spacing {d} between agents {} and {} is not below the injectivity radius {inj}",
            i + 1,
            (i + 1) % n + 1
        )));
    }
    let mut s = offset;
    let mut states = Vec::with_capacity(n);
    for d in &sol.spacings {
        states.push(spec.point_at(s));
        s += d;
    }
    Configuration::from_states(spec.kind, states)
}

/// Largest per-agent Frobenius norm of the right-hand side of `flow`.
pub fn gradient_residual(cfg: &Configuration, g: &WeightedGraph, flow: FlowKind) -> Result<f64> {
    flows::rhs_norm(flow, cfg, g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stability {
    /// All Hessian eigenvalues nonnegative and the only zero modes come
    /// from the symmetry orbit.
    Stable,
    /// A Hessian eigenvalue below `-HESSIAN_ZERO_TOL`.
    Unstable,
    /// No negative eigenvalue but more zero modes than the symmetry orbit
    /// accounts for; second-order information does not decide.
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub residual: f64,
    /// Ascending.
    pub hessian_eigs: Vec<f64>,
    pub return_fraction: f64,
    pub consensus_fraction: f64,
    pub classification: Stability,
    /// Dimension of the orbit of the configuration under the symmetry group
    /// of the energy.
    pub symmetry_rank: usize,
    pub zero_modes: usize,
    pub min_nonzero_eig: Option<f64>,
}

impl StabilityReport {
    /// `{residual, hessian_eigs, return_fraction, consensus_fraction, classification}`.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "residual": self.residual,
            "hessian_eigs": self.hessian_eigs,
            "return_fraction": self.return_fraction,
            "consensus_fraction": self.consensus_fraction,
            "classification": self.classification,
        })
    }
}

#[derive(Debug, Clone)]
pub struct ProbeSettings {
    pub n_directions: usize,
    /// Norm of each random perturbation in the product tangent space.
    pub magnitude: f64,
    pub integrator: IntegratorSettings,
    pub seed: u64,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        Self { n_directions: 50, magnitude: 1e-2, integrator: IntegratorSettings::default(), seed: 0 }
    }
}

/// One basis direction of the product tangent space: agent and ambient matrix.
type FrameVector = (usize, DMatrix<f64>);

fn product_frame(cfg: &Configuration) -> Vec<FrameVector> {
    let kind = cfg.kind();
    cfg.states()
        .iter()
        .enumerate()
        .flat_map(|(i, x)| kind.tangent_frame(x).into_iter().map(move |e| (i, e)))
        .collect()
}

/// Move every agent along its tangent component; exponential map where
/// available, polar retraction otherwise.
fn displace(cfg: &Configuration, tangent: &[DMatrix<f64>]) -> Result<Configuration> {
    let kind = cfg.kind();
    let states = cfg
        .states()
        .iter()
        .zip(tangent)
        .map(|(x, v)| {
            if v.iter().all(|a| *a == 0.0) {
                Ok(x.clone())
            } else if kind.supports_log() {
                kind.exp_raw(x, v)
            } else {
                kind.retract_raw(&(x + v))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Configuration::from_states_unchecked(kind, states))
}

fn combo(cfg: &Configuration, terms: &[(&FrameVector, f64)]) -> Vec<DMatrix<f64>> {
    let (r, c) = cfg.kind().shape();
    let mut v = vec![DMatrix::zeros(r, c); cfg.len()];
    for ((i, e), s) in terms {
        v[*i] += e * *s;
    }
    v
}

/// Hessian of the energy of `flow` in an orthonormal frame of the product
/// tangent space, by central differences.
pub fn energy_hessian(cfg: &Configuration, g: &WeightedGraph, flow: FlowKind) -> Result<DMatrix<f64>> {
    let frame = product_frame(cfg);
    let d = frame.len();
    let h = HESSIAN_STEP;
    let e = |terms: &[(&FrameVector, f64)]| -> Result<f64> {
        let moved = displace(cfg, &combo(cfg, terms))?;
        flows::energy(flow, &moved, g)
    };
    let e0 = flows::energy(flow, cfg, g)?;
    let mut hess = DMatrix::zeros(d, d);
    for a in 0..d {
        let fa = &frame[a];
        let plus = e(&[(fa, h)])?;
        let minus = e(&[(fa, -h)])?;
        hess[(a, a)] = (plus - 2.0 * e0 + minus) / (h * h);
        for b in a + 1..d {
            let fb = &frame[b];
            let pp = e(&[(fa, h), (fb, h)])?;
            let pm = e(&[(fa, h), (fb, -h)])?;
            let mp = e(&[(fa, -h), (fb, h)])?;
            let mm = e(&[(fa, -h), (fb, -h)])?;
            let v = (pp - pm - mp + mm) / (4.0 * h * h);
            hess[(a, b)] = v;
            hess[(b, a)] = v;
        }
    }
    Ok(hess)
}

/// Rank of the tangent space of the symmetry orbit through `cfg`: common
/// rotations of every circle factor on the circle and torus, common left
/// multiplication by O(n) on the Stiefel family.
pub fn symmetry_rank(cfg: &Configuration) -> usize {
    let kind = cfg.kind();
    let (r, c) = kind.shape();
    let mut generators: Vec<Vec<f64>> = Vec::new();
    match kind {
        ManifoldKind::Circle | ManifoldKind::FlatTorus(_) => {
            for f in 0..r / 2 {
                let mut v = Vec::with_capacity(cfg.len() * r * c);
                for x in cfg.states() {
                    let mut t = DMatrix::zeros(r, c);
                    t[2 * f] = -x[2 * f + 1];
                    t[2 * f + 1] = x[2 * f];
                    v.extend_from_slice(t.as_slice());
                }
                generators.push(v);
            }
        }
        _ => {
            for a in 0..r {
                for b in a + 1..r {
                    let mut omega = DMatrix::zeros(r, r);
                    omega[(a, b)] = -1.0;
                    omega[(b, a)] = 1.0;
                    let mut v = Vec::with_capacity(cfg.len() * r * c);
                    for x in cfg.states() {
                        v.extend_from_slice((&omega * x).as_slice());
                    }
                    generators.push(v);
                }
            }
        }
    }
    if generators.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(generators[0].len(), generators.len(), |i, j| generators[j][i]);
    let sv = m.singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|s| **s > 1e-8 * top.max(1.0)).count()
}

/// Distance between the relative arrangements of two configurations; zero
/// when one is a symmetry image of the other.
pub fn orbit_discrepancy(a: &Configuration, b: &Configuration) -> f64 {
    let kind = a.kind();
    let n = a.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let d = match kind {
                ManifoldKind::Circle | ManifoldKind::FlatTorus(_) => {
                    let rel = |s: &[DMatrix<f64>]| {
                        let (x, y) = (&s[i], &s[j]);
                        (0..x.nrows() / 2)
                            .flat_map(|f| {
                                let (x0, x1, y0, y1) = (x[2 * f], x[2 * f + 1], y[2 * f], y[2 * f + 1]);
                                [x0 * y0 + x1 * y1, x0 * y1 - x1 * y0]
                            })
                            .collect::<Vec<_>>()
                    };
                    rel(a.states())
                        .iter()
                        .zip(rel(b.states()))
                        .map(|(p, q)| (p - q).powi(2))
                        .sum::<f64>()
                        .sqrt()
                }
                _ => {
                    let ga = a.states()[i].tr_mul(&a.states()[j]);
                    let gb = b.states()[i].tr_mul(&b.states()[j]);
                    (ga - gb).norm()
                }
            };
            worst = worst.max(d);
        }
    }
    worst
}

/// Second-order test plus perturbation experiment at an approximate
/// equilibrium.
pub fn stability_probe(cfg: &Configuration, g: &WeightedGraph, flow: FlowKind, settings: &ProbeSettings) -> Result<StabilityReport> {
    let residual = gradient_residual(cfg, g, flow)?;
    if residual > 1e-8 {
        return Err(Error::Precondition(format!("configuration is not an equilibrium: gradient residual {residual:e}")));
    }
    if !(settings.magnitude > 0.0) {
        return Err(Error::InvalidArgument("perturbation magnitude must be positive".into()));
    }
    let hess = energy_hessian(cfg, g, flow)?;
    let mut eigs: Vec<f64> = SymmetricEigen::new(hess).eigenvalues.iter().cloned().collect();
    eigs.sort_by(f64::total_cmp);
    let sym_rank = symmetry_rank(cfg);
    let zero_modes = eigs.iter().filter(|l| l.abs() <= HESSIAN_ZERO_TOL).count();
    let min_nonzero_eig = eigs.iter().cloned().find(|l| l.abs() > HESSIAN_ZERO_TOL);
    let classification = if eigs.first().is_some_and(|l| *l < -HESSIAN_ZERO_TOL) {
        Stability::Unstable
    } else if zero_modes > sym_rank {
        Stability::Inconclusive
    } else {
        Stability::Stable
    };

    let frame = product_frame(cfg);
    let at_consensus = crate::integrate::check_consensus(cfg, g, settings.integrator.consensus_epsilon);
    let outcomes: Vec<(bool, bool)> = (0..settings.n_directions)
        .into_par_iter()
        .map(|k| -> Result<(bool, bool)> {
            let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
            rng.set_stream(k as u64);
            let coeffs: Vec<f64> = (0..frame.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
            let nrm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt().max(1e-300);
            let terms: Vec<(&FrameVector, f64)> = frame.iter().zip(&coeffs).map(|(f, c)| (f, c * settings.magnitude / nrm)).collect();
            let start = displace(cfg, &combo(cfg, &terms))?;
            let rec = integrate(flow, &start, g, &settings.integrator)?;
            let reached_consensus = rec.outcome == Outcome::Consensus;
            let returned = if at_consensus {
                reached_consensus
            } else {
                rec.outcome != Outcome::Consensus && orbit_discrepancy(&rec.final_config, cfg) <= settings.magnitude
            };
            Ok((returned, reached_consensus))
        })
        .collect::<Result<Vec<_>>>()?;
    let m = outcomes.len().max(1) as f64;
    let return_fraction = outcomes.iter().filter(|o| o.0).count() as f64 / m;
    let consensus_fraction = outcomes.iter().filter(|o| o.1).count() as f64 / m;

    Ok(StabilityReport {
        residual,
        hessian_eigs: eigs,
        return_fraction,
        consensus_fraction,
        classification,
        symmetry_rank: sym_rank,
        zero_modes,
        min_nonzero_eig,
    })
}

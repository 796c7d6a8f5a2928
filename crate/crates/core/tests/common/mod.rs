#![allow(dead_code)]

use geosync::flows::{self, Configuration, FlowKind};
use geosync::{ManifoldKind, WeightedGraph};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn kinds() -> Vec<ManifoldKind> {
    vec![
        ManifoldKind::Circle,
        ManifoldKind::Sphere(2),
        ManifoldKind::Sphere(4),
        ManifoldKind::Stiefel { p: 1, n: 3 },
        ManifoldKind::Stiefel { p: 2, n: 3 },
        ManifoldKind::Stiefel { p: 2, n: 4 },
        ManifoldKind::Stiefel { p: 3, n: 3 },
        ManifoldKind::SpecialOrthogonal(3),
        ManifoldKind::SpecialOrthogonal(4),
        ManifoldKind::Orthogonal(3),
        ManifoldKind::FlatTorus(1),
        ManifoldKind::FlatTorus(3),
    ]
}

pub fn gaussian<R: Rng>(r: usize, c: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn random_weights<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.2..3.0)).collect()
}

pub fn random_graph<R: Rng>(n: usize, rng: &mut R) -> WeightedGraph {
    match rng.random_range(0..3) {
        0 => WeightedGraph::cycle(n, Some(&random_weights(n, rng))).unwrap(),
        1 => WeightedGraph::complete(n).unwrap(),
        _ => {
            let base = WeightedGraph::cycle(n, None).unwrap();
            let edges: Vec<(usize, usize, f64)> =
                base.edges().iter().map(|e| (e.i, e.j, rng.random_range(0.2..3.0))).collect();
            WeightedGraph::from_edge_list(n, &edges).unwrap()
        }
    }
}

/// Uniform samples on the manifold.
pub fn random_config<R: Rng>(kind: ManifoldKind, n: usize, rng: &mut R) -> Configuration {
    let states = (0..n).map(|_| kind.sample_raw(rng)).collect();
    Configuration::from_states(kind, states).unwrap()
}

/// Agents within geodesic radius `radius` of a random center, so every
/// pair is well inside the injectivity radius.
pub fn clustered_config<R: Rng>(kind: ManifoldKind, n: usize, radius: f64, rng: &mut R) -> Configuration {
    let (r, c) = kind.shape();
    let center = kind.sample_raw(rng);
    let states = (0..n)
        .map(|_| {
            let v = kind.project_raw(&center, &gaussian(r, c, rng));
            let scale = radius * rng.random_range(0.0..1.0) / v.norm().max(1e-300);
            kind.exp_raw(&center, &(v * scale)).unwrap()
        })
        .collect();
    Configuration::from_states(kind, states).unwrap()
}

pub fn random_tangent_field<R: Rng>(cfg: &Configuration, rng: &mut R) -> Vec<DMatrix<f64>> {
    let kind = cfg.kind();
    let (r, c) = kind.shape();
    let v: Vec<DMatrix<f64>> = cfg.states().iter().map(|x| kind.project_raw(x, &gaussian(r, c, rng))).collect();
    let nrm = v.iter().map(|a| a.norm_squared()).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / nrm).collect()
}

/// Moves each agent along a curve with initial velocity `t v_i`.
pub fn along(cfg: &Configuration, v: &[DMatrix<f64>], t: f64) -> Configuration {
    let kind = cfg.kind();
    let states = cfg
        .states()
        .iter()
        .zip(v)
        .map(|(x, vi)| {
            let step = vi * t;
            if kind.supports_log() {
                kind.exp_raw(x, &step).unwrap()
            } else {
                kind.retract_raw(&(x + step)).unwrap()
            }
        })
        .collect();
    Configuration::from_states(kind, states).unwrap()
}

/// Central difference of the flow's energy along `v` against `-<rhs, v>`.
/// Returns `(finite difference, analytic)`.
pub fn directional_check(flow: FlowKind, cfg: &Configuration, g: &WeightedGraph, v: &[DMatrix<f64>], h: f64) -> (f64, f64) {
    let plus = flows::energy(flow, &along(cfg, v, h), g).unwrap();
    let minus = flows::energy(flow, &along(cfg, v, -h), g).unwrap();
    let fd = (plus - minus) / (2.0 * h);
    let rhs = flows::rhs(flow, cfg, g).unwrap();
    let analytic: f64 = -rhs.iter().zip(v).map(|(a, b)| a.value().dot(b)).sum::<f64>();
    (fd, analytic)
}

pub fn gradient_flows_on(kind: ManifoldKind) -> Vec<FlowKind> {
    FlowKind::ALL.iter().copied().filter(|f| f.is_gradient() && f.is_compatible(kind)).collect()
}

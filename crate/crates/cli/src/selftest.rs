//! Fast invariant checks, one line per check.

use geosync::equilibria::{build_s_configuration, gradient_residual, solve_eqp, ClosedGeodesicSpec};
use geosync::flows::{self, kuramoto_reduction_check};
use geosync::montecarlo::{run_basin, trial_initial, BasinExperiment};
use geosync::{Configuration, DMatrix, FlowKind, ManifoldKind, WeightedGraph};

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

const KINDS: [ManifoldKind; 6] = [
    ManifoldKind::Circle,
    ManifoldKind::Sphere(2),
    ManifoldKind::Stiefel { p: 2, n: 4 },
    ManifoldKind::SpecialOrthogonal(3),
    ManifoldKind::Orthogonal(3),
    ManifoldKind::FlatTorus(2),
];

/// Tangent field built by projecting another sample onto each tangent space.
fn direction(cfg: &Configuration, seed: u64) -> Vec<DMatrix<f64>> {
    let other = trial_initial(cfg.kind(), cfg.len(), seed, 1);
    let v: Vec<DMatrix<f64>> =
        cfg.states().iter().zip(other.states()).map(|(x, y)| cfg.kind().project_raw(x, y)).collect();
    let nrm = v.iter().map(|a| a.norm_squared()).sum::<f64>().sqrt();
    v.into_iter().map(|a| a / nrm).collect()
}

fn moved(cfg: &Configuration, v: &[DMatrix<f64>], t: f64) -> Configuration {
    let kind = cfg.kind();
    let states = cfg.states().iter().zip(v).map(|(x, d)| kind.retract_raw(&(x + d * t)).unwrap()).collect();
    Configuration::from_states(kind, states).unwrap()
}

fn projection() -> Check {
    let mut worst: f64 = 0.0;
    for (s, kind) in KINDS.iter().enumerate() {
        let cfg = trial_initial(*kind, 2, s as u64, 0);
        let (x, a) = (&cfg.states()[0], &cfg.states()[1]);
        let p = kind.project_raw(x, a);
        worst = worst.max((kind.project_raw(x, &p) - &p).norm());
    }
    Check { name: "projection idempotent", pass: worst < 1e-12, detail: format!("{worst:.1e}") }
}

fn exp_log() -> Check {
    let mut worst: f64 = 0.0;
    for (s, kind) in KINDS.iter().filter(|k| k.supports_log()).enumerate() {
        let cfg = trial_initial(*kind, 1, s as u64, 0);
        let x = &cfg.states()[0];
        let v = &direction(&cfg, s as u64)[0] * (0.5 * kind.injectivity_radius().unwrap());
        let y = kind.exp_raw(x, &v).unwrap();
        worst = worst.max((kind.log_raw(x, &y).unwrap() - v).norm());
    }
    Check { name: "exp/log inverse", pass: worst < 1e-9, detail: format!("{worst:.1e}") }
}

fn gradients() -> Check {
    let g = WeightedGraph::cycle(4, Some(&[1.0, 0.5, 2.0, 1.5])).unwrap();
    let mut worst: f64 = 0.0;
    for (s, kind) in KINDS.iter().enumerate() {
        for flow in FlowKind::ALL.iter().copied().filter(|f| f.is_gradient() && f.is_compatible(*kind) && *f != FlowKind::IntrinsicV) {
            let cfg = trial_initial(*kind, 4, 10 + s as u64, 0);
            let v = direction(&cfg, 20 + s as u64);
            let h = 1e-5;
            let fd = (flows::energy(flow, &moved(&cfg, &v, h), &g).unwrap()
                - flows::energy(flow, &moved(&cfg, &v, -h), &g).unwrap())
                / (2.0 * h);
            let rhs = flows::rhs(flow, &cfg, &g).unwrap();
            let an: f64 = -rhs.iter().zip(&v).map(|(a, b)| a.value().dot(b)).sum::<f64>();
            worst = worst.max((fd - an).abs() / an.abs().max(1e-12));
        }
    }
    Check { name: "gradient finite differences", pass: worst < 1e-5, detail: format!("max relative error {worst:.1e}") }
}

fn kuramoto() -> Check {
    let g = WeightedGraph::complete(6).unwrap();
    let worst = (0..10)
        .map(|s| kuramoto_reduction_check(&trial_initial(ManifoldKind::Circle, 6, s, 0), &g).unwrap())
        .fold(0.0, f64::max);
    Check { name: "Kuramoto reduction", pass: worst <= 1e-12, detail: format!("{worst:.1e}") }
}

fn eqp() -> Check {
    let w = [1.0, 2.0, 4.0, 0.5];
    let l = 5.0;
    let sol = solve_eqp(l, &w).unwrap();
    let inv: f64 = w.iter().map(|x| 1.0 / x).sum();
    let err = (sol.objective - 0.5 * l * l / inv).abs();
    let sum_err = (sol.spacings.iter().sum::<f64>() - l).abs();
    Check { name: "EQP closed form", pass: err < 1e-12 && sum_err < 1e-12, detail: format!("{err:.1e}") }
}

fn twisted() -> Check {
    let spec = ClosedGeodesicSpec::new(ManifoldKind::FlatTorus(2), vec![1, 0]).unwrap();
    let cfg = build_s_configuration(&spec, &[1.0; 12], 0.0).unwrap();
    let g = WeightedGraph::cycle(12, None).unwrap();
    let res = gradient_residual(&cfg, &g, FlowKind::IntrinsicV).unwrap();
    Check { name: "closed-geodesic equilibrium", pass: res <= 1e-10, detail: format!("residual {res:.1e}") }
}

fn determinism() -> Check {
    let mut exp = BasinExperiment::stiefel_cycle5(1, 2, 24, 9).unwrap();
    exp.workers = Some(1);
    let a = run_basin(&exp).unwrap();
    exp.workers = Some(3);
    let b = run_basin(&exp).unwrap();
    Check {
        name: "basin determinism",
        pass: a == b,
        detail: format!("{} vs {} successes", a.successes, b.successes),
    }
}

/// Runs every check, prints one line each, returns whether all passed.
pub fn run() -> bool {
    let checks = [projection(), exp_log(), gradients(), kuramoto(), eqp(), twisted(), determinism()];
    for c in &checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    checks.iter().all(|c| c.pass)
}

//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line.
//! Run with `cargo test -p geosync --test acceptance -- --nocapture --test-threads 1`.

mod common;

use std::f64::consts::PI;

use common::*;
use geosync::equilibria::{build_s_configuration, gradient_residual, solve_eqp, ClosedGeodesicSpec};
use geosync::flows::{self, compare_appendix_b, compare_flows, kuramoto_reduction_check, Configuration, FlowKind};
use geosync::integrate::{integrate, IntegratorSettings, Outcome, Rk4Stepper};
use geosync::montecarlo::{obstruction_demo, run_basin, BasinExperiment};
use geosync::{ManifoldKind, WeightedGraph};
use rand::Rng;

fn report(id: u32, pass: bool, detail: String) {
    println!("criterion {id}: {} {detail}", if pass { "PASS" } else { "FAIL" });
}

const TABLE1: [((usize, usize), f64); 9] = [
    ((1, 2), 0.95),
    ((2, 2), 0.05),
    ((2, 3), 0.92),
    ((3, 3), 0.06),
    ((1, 3), 1.00),
    ((2, 4), 1.00),
    ((3, 5), 1.00),
    ((4, 5), 0.91),
    ((5, 5), 0.06),
];
const TABLE1_TRIALS: usize = 500;
const TABLE1_TOL: f64 = 0.05;
const TABLE1_SEED: u64 = 1;

#[test]
fn criterion_1_table1_cells() {
    let mut all = true;
    let mut cells = Vec::new();
    for ((p, n), paper) in TABLE1 {
        let exp = BasinExperiment::stiefel_cycle5(p, n, TABLE1_TRIALS, TABLE1_SEED).unwrap();
        let est = run_basin(&exp).unwrap();
        let ok = (est.mu_hat - paper).abs() <= TABLE1_TOL;
        all &= ok;
        cells.push(format!(
            "({p},{n}) {:.3} vs {paper:.2} [halfwidth {:.3}, exhausted {}]{}",
            est.mu_hat,
            est.wilson_halfwidth_95,
            est.histogram["HorizonExhausted"],
            if ok { "" } else { " OUT" }
        ));
    }
    report(1, all, format!("M = {TABLE1_TRIALS}, tolerance {TABLE1_TOL}: {}", cells.join("; ")));
    assert!(all);
}

#[test]
fn criterion_2_twisted_state_persists() {
    // ½ Σ_edges ‖x_i - x_j‖² with ten chords of squared length 2 - 2cos 36°.
    let expected = 0.5 * 10.0 * (2.0 - 2.0 * (2.0 * PI / 10.0).cos());
    let tol = 1e-3;
    let settings = IntegratorSettings::default();
    let mut nce = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..100 {
        let r = obstruction_demo(ManifoldKind::Circle, 10, &[1], 0.05, FlowKind::ExtrinsicU, &settings, seed).unwrap();
        if r.outcome == Outcome::NonConsensusEquilibrium {
            nce += 1;
        }
        worst = worst.max((r.final_energy - expected).abs());
    }
    let pass = nce == 100 && worst <= tol;
    report(2, pass, format!("{nce}/100 NonConsensusEquilibrium, max |U - {expected:.6}| = {worst:.2e} (tol {tol:e})"));
    assert!(pass);
}

#[test]
fn criterion_3_torus_equilibrium() {
    let spec = ClosedGeodesicSpec::new(ManifoldKind::FlatTorus(2), vec![1, 0]).unwrap();
    let cfg = build_s_configuration(&spec, &[1.0; 12], 0.0).unwrap();
    let g = WeightedGraph::cycle(12, None).unwrap();
    let residual = gradient_residual(&cfg, &g, FlowKind::IntrinsicV).unwrap();
    let expected = 0.5 * (2.0 * PI).powi(2) / 12.0;
    let v = flows::disagreement_v(&cfg, &g).unwrap();
    let settings = IntegratorSettings { horizon: 10.0, stall_gradient_tol: 0.0, ..Default::default() };
    let rec = integrate(FlowKind::IntrinsicV, &cfg, &g, &settings).unwrap();
    let drift = rec.energies.iter().map(|e| (e - v).abs()).fold(0.0, f64::max);
    let pass = residual <= 1e-10 && (v - expected).abs() <= 1e-8 && drift <= 1e-8;
    report(
        3,
        pass,
        format!("residual {residual:.2e} (<= 1e-10), V = {v:.10} vs {expected:.10} (1e-8), drift over t = 10 {drift:.2e} (1e-8)"),
    );
    assert!(pass);
}

#[test]
fn criterion_4_eqp_against_random_spacings() {
    let mut r = rng(404);
    let mut worst_formula: f64 = 0.0;
    let mut dominated = true;
    for _ in 0..100 {
        let n = r.random_range(1..=5);
        let l = r.random_range(0.5..2.0 * PI);
        let w: Vec<f64> = (0..n).map(|_| r.random_range(0.1..10.0)).collect();
        let sol = solve_eqp(l, &w).unwrap();
        let inv: f64 = w.iter().map(|x| 1.0 / x).sum();
        worst_formula = worst_formula.max((sol.objective - 0.5 * l * l / inv).abs());
        let mut best = f64::INFINITY;
        for _ in 0..10_000 {
            // Uniform point of the simplex scaled to total length L.
            let e: Vec<f64> = (0..n).map(|_| -r.random_range(f64::MIN_POSITIVE..1.0).ln()).collect();
            let s: f64 = e.iter().sum();
            let f = 0.5 * w.iter().zip(&e).map(|(wi, ei)| wi * (l * ei / s).powi(2)).sum::<f64>();
            best = best.min(f);
        }
        dominated &= sol.objective <= best * (1.0 + 1e-12);
    }
    let pass = dominated && worst_formula <= 1e-12;
    report(4, pass, format!("100 instances, objective <= sampled minimum: {dominated}, max |f - ½L²/Σw⁻¹| = {worst_formula:.2e} (1e-12)"));
    assert!(pass);
}

#[test]
fn criterion_5_gradient_finite_differences() {
    let mut r = rng(505);
    let mut worst: f64 = 0.0;
    let mut pairs = 0;
    let mut where_worst = String::new();
    for kind in kinds() {
        for flow in gradient_flows_on(kind) {
            for _ in 0..50 {
                let n = r.random_range(3..=6);
                let g = random_graph(n, &mut r);
                let cfg = if flow == FlowKind::IntrinsicV {
                    clustered_config(kind, n, 0.45 * kind.injectivity_radius().unwrap(), &mut r)
                } else {
                    random_config(kind, n, &mut r)
                };
                let v = random_tangent_field(&cfg, &mut r);
                let (fd, an) = directional_check(flow, &cfg, &g, &v, 1e-5);
                let rel = (fd - an).abs() / an.abs();
                if rel > worst {
                    worst = rel;
                    where_worst = format!("{flow} on {kind}");
                }
                pairs += 1;
            }
        }
    }
    let pass = worst <= 1e-5;
    report(5, pass, format!("{pairs} pairs, max relative error {worst:.2e} ({where_worst}), tolerance 1e-5"));
    assert!(pass);
}

#[test]
fn criterion_6_monotone_and_feasible() {
    let mut r = rng(606);
    let settings = IntegratorSettings { horizon: 10.0, stall_gradient_tol: 0.0, ..Default::default() };
    let mut all = true;
    let mut lines = Vec::new();
    for flow in FlowKind::ALL {
        let compatible: Vec<ManifoldKind> = kinds().into_iter().filter(|k| flow.is_compatible(*k)).collect();
        let mut rise: f64 = 0.0;
        let mut residual: f64 = 0.0;
        for _ in 0..20 {
            let kind = compatible[r.random_range(0..compatible.len())];
            let n = r.random_range(3..=7);
            let g = random_graph(n, &mut r);
            let cfg = if flow == FlowKind::IntrinsicV {
                clustered_config(kind, n, 0.45 * kind.injectivity_radius().unwrap(), &mut r)
            } else {
                random_config(kind, n, &mut r)
            };
            let rec = integrate(flow, &cfg, &g, &settings).unwrap();
            rise = rise.max(rec.max_energy_increase());
            residual = residual.max(rec.max_residual());
        }
        let ok = rise <= 1e-9 && residual <= 1e-8;
        all &= ok;
        lines.push(format!("{flow}: rise {rise:.1e} residual {residual:.1e}"));
    }
    report(6, all, format!("20 scenarios per flow (slack 1e-9/step, residual 1e-8): {}", lines.join("; ")));
    assert!(all);
}

#[test]
fn criterion_7_kuramoto_reduction() {
    let mut r = rng(707);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let n = r.random_range(2..=9);
        let g = if n == 2 {
            WeightedGraph::from_edge_list(2, &[(0, 1, r.random_range(0.2..3.0))]).unwrap()
        } else {
            random_graph(n, &mut r)
        };
        let cfg = random_config(ManifoldKind::Circle, n, &mut r);
        worst = worst.max(kuramoto_reduction_check(&cfg, &g).unwrap());
    }
    let pass = worst <= 1e-12;
    report(7, pass, format!("50 configurations, max deviation {worst:.2e} (1e-12)"));
    assert!(pass);
}

/// Divergence between the rotation-group flow with the given weight scale
/// and the lifted Stiefel flow.
fn scaled_divergence(initial: &Configuration, g: &WeightedGraph, scaled: &WeightedGraph, horizon: f64, s: &IntegratorSettings) -> f64 {
    let mut a = Rk4Stepper::new(FlowKind::OrthogonalGroup, initial.clone(), scaled, s).unwrap();
    let mut b = Rk4Stepper::new(FlowKind::LiftedStiefel, initial.clone(), g, s).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..(horizon / s.step).round() as usize {
        a.step().unwrap();
        b.step().unwrap();
        worst = worst.max(a.config().max_chordal_gap(&b.config()));
    }
    worst
}

#[test]
fn criterion_8_rotation_flows_diverge() {
    let mut r = rng(808);
    let g = WeightedGraph::cycle(3, None).unwrap();
    let doubled = WeightedGraph::cycle(3, Some(&[2.0; 3])).unwrap();
    let settings = IntegratorSettings::default();
    let horizon = 5.0;
    let threshold = 1e-3;
    let mut min_div = f64::INFINITY;
    let mut min_div_doubled = f64::INFINITY;
    let mut self_div: f64 = 0.0;
    for _ in 0..20 {
        let cfg = random_config(ManifoldKind::SpecialOrthogonal(3), 3, &mut r);
        let rep = compare_appendix_b(&cfg, &g, horizon, &settings).unwrap();
        min_div = min_div.min(rep.max_divergence);
        // Same comparison with the unnormalized rotation flow Σ_j (Q_j - Q_i Q_jᵀ Q_i).
        min_div_doubled = min_div_doubled.min(scaled_divergence(&cfg, &g, &doubled, horizon, &settings));
        for f in [FlowKind::OrthogonalGroup, FlowKind::LiftedStiefel] {
            self_div = self_div.max(compare_flows(f, f, &cfg, &g, horizon, &settings).unwrap().max_divergence);
        }
    }
    let pass = min_div > threshold && min_div_doubled > threshold && self_div <= 1e-12;
    report(
        8,
        pass,
        format!(
            "20 SO(3) starts, min divergence {min_div:.3e} (unnormalized {min_div_doubled:.3e}) > {threshold:e}, self {self_div:.1e} <= 1e-12"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_9_determinism_across_workers() {
    let mut counts = Vec::new();
    for workers in [1, 2, 4] {
        let mut exp = BasinExperiment::stiefel_cycle5(1, 2, TABLE1_TRIALS, TABLE1_SEED).unwrap();
        exp.workers = Some(workers);
        let est = run_basin(&exp).unwrap();
        counts.push((workers, est.successes, est.histogram));
    }
    let pass = counts.windows(2).all(|w| w[0].1 == w[1].1 && w[0].2 == w[1].2);
    let text: Vec<String> = counts.iter().map(|(w, s, _)| format!("{w} workers: {s}")).collect();
    report(9, pass, format!("cell (1,2) successes {}", text.join(", ")));
    assert!(pass);
}

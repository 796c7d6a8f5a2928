//! Consensus gradient flows of multi-agent systems on matrix manifolds.
//!
//! Agents live on an embedded manifold (circle, sphere, Stiefel manifold,
//! rotation and orthogonal groups, flat torus) and are coupled along the
//! edges of a weighted graph. The crate provides the geometry, the flows,
//! a retraction-based RK4 integrator, closed-geodesic equilibria with a
//! stability probe, and Monte Carlo estimation of the consensus basin.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod equilibria;
pub mod error;
pub mod flows;
pub mod graphs;
pub mod integrate;
pub mod linalg;
pub mod manifolds;
pub mod montecarlo;

pub use equilibria::{
    build_s_configuration, gradient_residual, solve_eqp, stability_probe, ClosedGeodesicSpec, EqpSolution, ProbeSettings,
    Stability, StabilityReport,
};
pub use error::{Error, Result};
pub use nalgebra::DMatrix;
pub use flows::{Configuration, DivergenceReport, FlowKind};
pub use graphs::{Edge, WeightedGraph};
pub use integrate::{check_consensus, integrate, IntegratorSettings, Outcome, Retraction, Rk4Stepper, TrajectoryRecord};
pub use manifolds::{ManifoldKind, ManifoldPoint, TangentVector};
pub use montecarlo::{obstruction_demo, run_basin, table1, BasinEstimate, BasinExperiment, ObstructionReport, Table1};

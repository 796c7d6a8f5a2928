//! Run configuration files and their resolution into core types.
//!
//! A config file is TOML with a `[run]` and an `[integrator]` table whose
//! keys mirror the command-line flags:
//!
//! ```toml
//! [run]
//! manifold = "circle"
//! flow = "extrinsic"
//! graph = "cycle:10"
//! init = "twisted:1"
//! seed = 0
//! out = "geosync-out"
//!
//! [integrator]
//! step = 0.01
//! horizon = 100.0
//! epsilon = 0.01
//! ```

use std::path::Path;

use geosync::equilibria::{build_s_configuration, ClosedGeodesicSpec};
use geosync::montecarlo::trial_initial;
use geosync::{Configuration, DMatrix, FlowKind, IntegratorSettings, ManifoldKind, Retraction, WeightedGraph};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub manifold: String,
    pub flow: String,
    /// `cycle:N`, `circulant:N:d`, `complete:N`, or an edge-list file. The
    /// vertex count may be left off when `n` is given.
    pub graph: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Cycle edge weights, edge `{i, i+1}` first.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    /// `random`, `twisted:q[,q2,...]`, `s-set[:q[,q2,...]]` or `file:PATH`.
    pub init: String,
    pub seed: u64,
    pub out: String,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            manifold: "circle".into(),
            flow: "extrinsic".into(),
            graph: "cycle:10".into(),
            n: None,
            weights: None,
            init: "random".into(),
            seed: 0,
            out: "geosync-out".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSection {
    pub step: f64,
    pub horizon: f64,
    pub epsilon: f64,
    pub stall_tol: f64,
    /// `polar` or `exp`.
    pub retraction: String,
    /// Write every k-th configuration to the trajectory file.
    pub record_stride: usize,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        let d = IntegratorSettings::default();
        Self {
            step: d.step,
            horizon: d.horizon,
            epsilon: d.consensus_epsilon,
            stall_tol: d.stall_gradient_tol,
            retraction: "polar".into(),
            record_stride: 10,
        }
    }
}

/// A configuration error naming the offending field.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn field<E: std::fmt::Display>(name: &str) -> impl Fn(E) -> ConfigError + '_ {
    move |e| ConfigError(format!("{name}: {e}"))
}

impl IntegratorSection {
    pub fn settings(&self) -> Result<IntegratorSettings, ConfigError> {
        let retraction = match self.retraction.as_str() {
            "polar" => Retraction::PolarFactor,
            "exp" => Retraction::ExpBased,
            other => return Err(ConfigError(format!("integrator.retraction: expected \"polar\" or \"exp\", got {other:?}"))),
        };
        if self.record_stride == 0 {
            return Err(ConfigError("integrator.record_stride: must be positive".into()));
        }
        let s = IntegratorSettings {
            step: self.step,
            horizon: self.horizon,
            retraction,
            consensus_epsilon: self.epsilon,
            stall_gradient_tol: self.stall_tol,
            record_stride: Some(self.record_stride),
        };
        s.validate().map_err(field("integrator"))?;
        Ok(s)
    }
}

/// Everything needed to run one simulation.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub kind: ManifoldKind,
    pub flow: FlowKind,
    pub graph: WeightedGraph,
    pub initial: Configuration,
    pub settings: IntegratorSettings,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError(format!("config: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| ConfigError(format!("{}: {}", path.display(), e.0)))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let run = &self.run;
        let kind: ManifoldKind = run.manifold.parse().map_err(field("run.manifold"))?;
        let flow: FlowKind = run.flow.parse().map_err(field("run.flow"))?;
        flow.check_compatible(kind).map_err(|e| ConfigError(e.to_string()))?;
        let graph = resolve_graph(&run.graph, run.n, run.weights.as_deref())?;
        let settings = self.integrator.settings()?;
        let initial = resolve_init(&run.init, kind, &graph, run.weights.as_deref(), run.seed)?;
        Ok(Resolved { kind, flow, graph, initial, settings })
    }
}

/// Builds the graph, filling in `n` when the spec omits the vertex count
/// and attaching cycle weights.
pub fn resolve_graph(spec: &str, n: Option<usize>, weights: Option<&[f64]>) -> Result<WeightedGraph, ConfigError> {
    let spec = spec.trim();
    let parts: Vec<&str> = spec.split(':').collect();
    let full = match (parts.as_slice(), n) {
        (["cycle"] | ["complete"], Some(n)) => format!("{spec}:{n}"),
        (["circulant", d], Some(n)) => format!("circulant:{n}:{d}"),
        (["cycle"] | ["complete"] | ["circulant", _], None) => {
            return Err(ConfigError(format!("run.graph: {spec:?} needs a vertex count (give run.n or --n)")))
        }
        _ => spec.to_string(),
    };
    let mut graph = WeightedGraph::from_spec(&full).map_err(field("run.graph"))?;
    if let Some(n) = n {
        if graph.n_vertices() != n {
            return Err(ConfigError(format!("run.n: {n} disagrees with graph {full:?} of {} vertices", graph.n_vertices())));
        }
    }
    if let Some(w) = weights {
        if !full.starts_with("cycle:") {
            return Err(ConfigError("run.weights: weights are only supported with cycle graphs".into()));
        }
        graph = WeightedGraph::cycle(graph.n_vertices(), Some(w)).map_err(field("run.weights"))?;
    }
    Ok(graph)
}

fn parse_winding(text: &str, name: &str) -> Result<Vec<i64>, ConfigError> {
    text.split(',')
        .map(|t| t.trim().parse::<i64>().map_err(|_| ConfigError(format!("{name}: bad winding number {t:?}"))))
        .collect()
}

/// Initial configuration from an init spec.
pub fn resolve_init(
    spec: &str,
    kind: ManifoldKind,
    graph: &WeightedGraph,
    weights: Option<&[f64]>,
    seed: u64,
) -> Result<Configuration, ConfigError> {
    let n = graph.n_vertices();
    let spec = spec.trim();
    let (head, rest) = spec.split_once(':').unwrap_or((spec, ""));
    match head {
        "random" if rest.is_empty() => Ok(trial_initial(kind, n, seed, 0)),
        "twisted" => {
            let winding = parse_winding(rest, "run.init")?;
            twisted(kind, n, &winding)
        }
        "s-set" => {
            let winding = match (rest, kind) {
                ("", ManifoldKind::FlatTorus(k)) => (0..k).map(|f| i64::from(f == 0)).collect(),
                ("", _) => vec![1],
                (w, _) => parse_winding(w, "run.init")?,
            };
            let spec = ClosedGeodesicSpec::new(kind, winding).map_err(field("run.init"))?;
            let unit = vec![1.0; n];
            let w = weights.unwrap_or(&unit);
            if w.len() != n {
                return Err(ConfigError(format!("run.weights: need {n} weights, got {}", w.len())));
            }
            build_s_configuration(&spec, w, 0.0).map_err(field("run.init"))
        }
        "file" => read_config_file(Path::new(rest), kind, n),
        _ => Err(ConfigError(format!(
            "run.init: expected random, twisted:q, s-set[:q] or file:PATH, got {spec:?}"
        ))),
    }
}

pub fn twisted(kind: ManifoldKind, n: usize, winding: &[i64]) -> Result<Configuration, ConfigError> {
    match (kind, winding) {
        (ManifoldKind::Circle, [q]) => Ok(Configuration::twisted_circle(n, *q, 0.0)),
        (ManifoldKind::FlatTorus(k), w) if w.len() == k => Ok(Configuration::twisted_torus(n, w)),
        (ManifoldKind::SpecialOrthogonal(d), [q]) => Ok(Configuration::twisted_rotations(d, n, *q)),
        (ManifoldKind::Circle | ManifoldKind::SpecialOrthogonal(_) | ManifoldKind::FlatTorus(_), w) => {
            Err(ConfigError(format!("run.init: wrong number of winding numbers ({}) for {kind}", w.len())))
        }
        _ => Err(ConfigError(format!("run.init: twisted states exist on circle, torus and so:n, not {kind}"))),
    }
}

/// One agent per non-empty line, entries column-major, separated by commas
/// or whitespace. Lines starting with `#` are skipped.
pub fn read_config_file(path: &Path, kind: ManifoldKind, n: usize) -> Result<Configuration, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("run.init: {}: {e}", path.display())))?;
    let (r, c) = kind.shape();
    let mut states = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let vals = line
            .split(|ch: char| ch == ',' || ch.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| ConfigError(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
        if vals.len() != r * c {
            return Err(ConfigError(format!(
                "{}:{}: expected {} entries for {kind}, got {}",
                path.display(),
                lineno + 1,
                r * c,
                vals.len()
            )));
        }
        states.push(DMatrix::from_column_slice(r, c, &vals));
    }
    if states.len() != n {
        return Err(ConfigError(format!("{}: {} agents for a graph of {n} vertices", path.display(), states.len())));
    }
    Configuration::from_states(kind, states).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut cfg = RunConfig::default();
        cfg.run.weights = Some(vec![1.0, 2.5, 0.125]);
        cfg.run.n = Some(3);
        cfg.run.seed = 42;
        cfg.integrator.step = 0.005;
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        let plain = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&plain.to_toml()).unwrap(), plain);
    }

    #[test]
    fn partial_files_fill_defaults() {
        let cfg = RunConfig::from_toml("[run]\nmanifold = \"sphere:2\"\n").unwrap();
        assert_eq!(cfg.run.manifold, "sphere:2");
        assert_eq!(cfg.integrator, IntegratorSection::default());
    }

    #[test]
    fn diagnostics_name_the_field() {
        let err = RunConfig::from_toml("[run]\nmanifold = \"circle\"\nbogus = 1\n").unwrap_err();
        assert!(err.0.contains("bogus") && err.0.contains("line 3"), "{err}");
        let mut cfg = RunConfig::default();
        cfg.run.manifold = "plane".into();
        assert!(cfg.resolve().unwrap_err().0.starts_with("run.manifold"));
        let mut cfg = RunConfig::default();
        cfg.integrator.retraction = "qr".into();
        assert!(cfg.resolve().unwrap_err().0.starts_with("integrator.retraction"));
        let mut cfg = RunConfig::default();
        cfg.run.manifold = "stiefel:2:3".into();
        cfg.run.flow = "intrinsic".into();
        assert_eq!(cfg.resolve().unwrap_err().0, "intrinsic flow unsupported on stiefel:2:3");
    }

    #[test]
    fn graph_shorthands() {
        assert_eq!(resolve_graph("cycle", Some(6), None).unwrap().n_vertices(), 6);
        assert_eq!(resolve_graph("circulant:2", Some(7), None).unwrap().edges().len(), 14);
        assert!(resolve_graph("cycle:5", Some(6), None).is_err());
        assert!(resolve_graph("complete:4", None, Some(&[1.0; 4])).is_err());
        let g = resolve_graph("cycle:3", None, Some(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(g.weight(1, 2), Some(2.0));
    }

    #[test]
    fn init_specs() {
        let g = WeightedGraph::cycle(6, None).unwrap();
        let t = resolve_init("twisted:1", ManifoldKind::Circle, &g, None, 0).unwrap();
        assert_eq!(t.len(), 6);
        let s = resolve_init("s-set", ManifoldKind::FlatTorus(2), &g, None, 0).unwrap();
        assert_eq!(s.kind(), ManifoldKind::FlatTorus(2));
        let r1 = resolve_init("random", ManifoldKind::Sphere(2), &g, None, 3).unwrap();
        let r2 = resolve_init("random", ManifoldKind::Sphere(2), &g, None, 3).unwrap();
        assert_eq!(r1.states(), r2.states());
        assert!(resolve_init("twisted:1", ManifoldKind::Sphere(2), &g, None, 0).is_err());
        assert!(resolve_init("spiral", ManifoldKind::Circle, &g, None, 0).is_err());
    }
}

//! Undirected weighted interaction graphs.
//!
//! Vertices are 0-indexed. User-facing output adds one so that agents read
//! `1..=N` as in the usual cycle-graph notation.

use std::collections::{BTreeMap, VecDeque};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// Undirected graph with strictly positive symmetric weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n_vertices: usize,
    edges: Vec<Edge>,
    /// `neighbors[i]` lists `(j, w_ij)`.
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl WeightedGraph {
    /// Builds a graph from `(i, j, w)` triples. Edges are normalized to
    /// `i < j`; self-loops, duplicates and nonpositive weights are rejected.
    pub fn from_edge_list(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Graph("graph needs at least one vertex".into()));
        }
        let mut seen = BTreeMap::new();
        for &(a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::Graph(format!("edge {{{a}, {b}}} out of range for {n} vertices")));
            }
            if a == b {
                return Err(Error::Graph(format!("self-loop at vertex {a}")));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::Graph(format!("edge {{{a}, {b}}} has nonpositive weight {w}")));
            }
            let key = (a.min(b), a.max(b));
            if seen.insert(key, w).is_some() {
                return Err(Error::Graph(format!("duplicate edge {{{}, {}}}", key.0, key.1)));
            }
        }
        let edges: Vec<Edge> = seen.into_iter().map(|((i, j), weight)| Edge { i, j, weight }).collect();
        let mut neighbors = vec![Vec::new(); n];
        for e in &edges {
            neighbors[e.i].push((e.j, e.weight));
            neighbors[e.j].push((e.i, e.weight));
        }
        for list in &mut neighbors {
            list.sort_by_key(|(j, _)| *j);
        }
        Ok(Self { n_vertices: n, edges, neighbors })
    }

    /// The cycle graph on `n ≥ 3` vertices. Weight `k` (if given) sits on
    /// the edge `{k, k+1 mod n}`.
    pub fn cycle(n: usize, weights: Option<&[f64]>) -> Result<Self> {
        if n < 3 {
            return Err(Error::Graph(format!("cycle needs n >= 3, got {n}")));
        }
        if let Some(w) = weights {
            if w.len() != n {
                return Err(Error::Graph(format!("cycle({n}) needs {n} weights, got {}", w.len())));
            }
        }
        let edges: Vec<_> = (0..n)
            .map(|k| (k, (k + 1) % n, weights.map_or(1.0, |w| w[k])))
            .collect();
        Self::from_edge_list(n, &edges)
    }

    /// Vertex `i` adjacent to `i ± 1, …, i ± half_degree` (mod n).
    pub fn circulant(n: usize, half_degree: usize) -> Result<Self> {
        if half_degree < 1 || 2 * half_degree >= n {
            return Err(Error::Graph(format!(
                "circulant({n}, {half_degree}) needs 1 <= half_degree and 2*half_degree < n"
            )));
        }
        let mut edges = Vec::new();
        for i in 0..n {
            for s in 1..=half_degree {
                let j = (i + s) % n;
                edges.push((i, j, 1.0));
            }
        }
        Self::from_edge_list(n, &edges)
    }

    pub fn complete(n: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                edges.push((i, j, 1.0));
            }
        }
        Self::from_edge_list(n, &edges)
    }

    /// Reads lines `i j w` (0-indexed; `#` starts a comment). The vertex
    /// count is one more than the largest index unless a `# n = N` header
    /// line is present.
    pub fn from_edge_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_edge_list(&text)
    }

    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        let mut declared_n = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(v) = rest.strip_prefix("n =").or_else(|| rest.strip_prefix("n=")) {
                    declared_n = Some(v.trim().parse::<usize>().map_err(|_| {
                        Error::Parse(format!("line {}: bad vertex count {:?}", lineno + 1, v.trim()))
                    })?);
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::Parse(format!("line {}: expected `i j w`, got {line:?}", lineno + 1)));
            }
            let i = fields[0].parse::<usize>().map_err(|_| Error::Parse(format!("line {}: bad vertex {:?}", lineno + 1, fields[0])))?;
            let j = fields[1].parse::<usize>().map_err(|_| Error::Parse(format!("line {}: bad vertex {:?}", lineno + 1, fields[1])))?;
            let w = fields[2].parse::<f64>().map_err(|_| Error::Parse(format!("line {}: bad weight {:?}", lineno + 1, fields[2])))?;
            edges.push((i, j, w));
        }
        let inferred = edges.iter().map(|&(i, j, _)| i.max(j) + 1).max().unwrap_or(0);
        let n = declared_n.unwrap_or(inferred);
        Self::from_edge_list(n, &edges)
    }

    /// Parses `cycle:N`, `circulant:N:d` (d = half degree), `complete:N`,
    /// or otherwise treats the string as a path to an edge-list file.
    pub fn from_spec(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.trim().split(':').collect();
        let num = |t: &str| t.parse::<usize>().map_err(|_| Error::Parse(format!("bad integer {t:?} in graph {spec:?}")));
        match parts.as_slice() {
            ["cycle", n] => Self::cycle(num(n)?, None),
            ["circulant", n, d] => Self::circulant(num(n)?, num(d)?),
            ["complete", n] => Self::complete(num(n)?),
            _ => {
                let path = Path::new(spec);
                if path.exists() {
                    Self::from_edge_file(path)
                } else {
                    Err(Error::Parse(format!("unknown graph {spec:?} (not a known form and no such file)")))
                }
            }
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        self.neighbors[i].iter().find(|(k, _)| *k == j).map(|(_, w)| *w)
    }

    /// Breadth-first reachability from vertex 0.
    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n_vertices];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = queue.pop_front() {
            for &(u, _) in &self.neighbors[v] {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    queue.push_back(u);
                }
            }
        }
        count == self.n_vertices
    }

    /// Edge list with 1-indexed vertices.
    pub fn display_edges(&self) -> String {
        self.edges
            .iter()
            .map(|e| format!("{{{}, {}}}:{}", e.i + 1, e.j + 1, e.weight))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl FromStr for WeightedGraph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_spec(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn edge_set(g: &WeightedGraph) -> BTreeSet<(usize, usize)> {
        g.edges().iter().map(|e| (e.i, e.j)).collect()
    }

    #[test]
    fn cycle_three() {
        let g = WeightedGraph::cycle(3, None).unwrap();
        assert_eq!(edge_set(&g), BTreeSet::from([(0, 1), (1, 2), (0, 2)]));
    }

    #[test]
    fn cycle_five_is_two_regular() {
        let g = WeightedGraph::cycle(5, None).unwrap();
        assert_eq!(g.edges().len(), 5);
        assert!((0..5).all(|i| g.degree(i) == 2));
    }

    #[test]
    fn cycle_weight_convention() {
        let g = WeightedGraph::cycle(4, Some(&[1.0, 2.0, 3.0, 4.0])).unwrap();
        assert_eq!(g.weight(0, 3), Some(4.0));
        assert_eq!(g.weight(3, 0), Some(4.0));
        assert_eq!(g.weight(1, 2), Some(2.0));
    }

    #[test]
    fn cycle_rejects_small_and_bad_weights() {
        assert!(WeightedGraph::cycle(2, None).is_err());
        assert!(WeightedGraph::cycle(3, Some(&[1.0, 2.0])).is_err());
        assert!(WeightedGraph::cycle(3, Some(&[1.0, 0.0, 1.0])).is_err());
    }

    #[test]
    fn circulant_examples() {
        assert_eq!(WeightedGraph::circulant(7, 1).unwrap(), WeightedGraph::cycle(7, None).unwrap());
        let g = WeightedGraph::circulant(7, 2).unwrap();
        assert!((0..7).all(|i| g.degree(i) == 4));
        assert!(WeightedGraph::circulant(6, 3).is_err());
        assert!(WeightedGraph::circulant(6, 0).is_err());
    }

    #[test]
    fn circulant_edge_count_by_enumeration() {
        // Brute force: all unordered pairs whose cyclic offset is at most d.
        let (n, d) = (6usize, 2usize);
        let mut pairs = BTreeSet::new();
        for i in 0..n {
            for j in 0..n {
                let off = (j + n - i) % n;
                if i != j && (off <= d || n - off <= d) {
                    pairs.insert((i.min(j), i.max(j)));
                }
            }
        }
        let g = WeightedGraph::circulant(n, d).unwrap();
        assert_eq!(pairs.len(), 12);
        assert_eq!(edge_set(&g), pairs);
    }

    #[test]
    fn complete_and_connectivity() {
        assert_eq!(WeightedGraph::complete(3).unwrap(), WeightedGraph::cycle(3, None).unwrap());
        assert!(!WeightedGraph::from_edge_list(4, &[(0, 1, 1.0)]).unwrap().is_connected());
        assert!(WeightedGraph::cycle(9, None).unwrap().is_connected());
    }

    #[test]
    fn malformed_edges() {
        assert!(WeightedGraph::from_edge_list(3, &[(0, 0, 1.0)]).is_err());
        assert!(WeightedGraph::from_edge_list(3, &[(0, 1, 1.0), (1, 0, 2.0)]).is_err());
        assert!(WeightedGraph::from_edge_list(3, &[(0, 5, 1.0)]).is_err());
        assert!(WeightedGraph::from_edge_list(3, &[(0, 1, -1.0)]).is_err());
    }

    #[test]
    fn neighbor_lists_symmetric() {
        let g = WeightedGraph::from_edge_list(5, &[(0, 1, 0.5), (1, 2, 2.0), (0, 3, 1.5), (3, 4, 1.0)]).unwrap();
        for i in 0..5 {
            for &(j, w) in g.neighbors(i) {
                assert_eq!(g.weight(j, i), Some(w));
            }
        }
    }

    #[test]
    fn directed_sum_is_twice_edge_sum() {
        let g = WeightedGraph::circulant(8, 3).unwrap();
        let f = |i: usize, j: usize| ((i * 7 + j * 7) % 5) as f64 + 0.25;
        let edge_sum: f64 = g.edges().iter().map(|e| e.weight * f(e.i, e.j)).sum();
        let directed: f64 = (0..8).flat_map(|i| g.neighbors(i).iter().map(move |&(j, w)| w * f(i, j))).sum();
        assert!((directed - 2.0 * edge_sum).abs() < 1e-12);
    }

    #[test]
    fn spec_strings_and_edge_files() {
        assert_eq!(WeightedGraph::from_spec("cycle:5").unwrap().edges().len(), 5);
        assert_eq!(WeightedGraph::from_spec("circulant:6:2").unwrap().edges().len(), 12);
        assert_eq!(WeightedGraph::from_spec("complete:4").unwrap().edges().len(), 6);
        assert!(WeightedGraph::from_spec("wheel:5").is_err());

        let g = WeightedGraph::parse_edge_list("# glued triangle\n# n = 5\n0 1 1\n1 2 1\n0 2 1\n0 3 2.5\n").unwrap();
        assert_eq!(g.n_vertices(), 5);
        assert!(!g.is_connected());
        let err = WeightedGraph::parse_edge_list("0 1\n").unwrap_err();
        assert!(err.to_string().contains("line 1"));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.txt");
        std::fs::write(&path, "0 1 1.0\n1 2 1.0\n2 0 1.0\n").unwrap();
        let g = WeightedGraph::from_spec(path.to_str().unwrap()).unwrap();
        assert_eq!(g, WeightedGraph::cycle(3, None).unwrap());
    }

    #[test]
    fn display_is_one_indexed() {
        let g = WeightedGraph::cycle(3, None).unwrap();
        assert_eq!(g.display_edges(), "{1, 2}:1 {1, 3}:1 {2, 3}:1");
    }
}

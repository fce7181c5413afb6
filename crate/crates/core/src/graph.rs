//! Erdős–Rényi sampling and sparse adjacency storage.
//!
//! Vertices are 1-indexed at every public entry point. Internally a vertex is
//! its 0-based offset and the `*0` accessors (crate-visible) skip range checks
//! for the matcher's inner loops.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("vertex count must be positive")]
    EmptyGraph,
    #[error("edge density {0} outside the open interval (0, 1)")]
    Density(f64),
    #[error("vertex {vertex} out of range 1..={n}")]
    VertexRange { vertex: usize, n: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A simple undirected graph with sorted neighbor lists.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphSample {
    n: usize,
    adjacency: Vec<Vec<u32>>,
    edge_count: usize,
    /// Density used at sampling time, if the graph was sampled.
    pub p: Option<f64>,
    /// Seed used at sampling time, if the graph was sampled.
    pub seed: Option<u64>,
}

impl GraphSample {
    /// Builds a graph from 1-indexed edges. Rejects self-loops and duplicates.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::EmptyGraph);
        }
        let mut adjacency = vec![Vec::new(); n];
        for (idx, &(i, j)) in edges.iter().enumerate() {
            for v in [i, j] {
                if v == 0 || v > n {
                    return Err(GraphError::VertexRange { vertex: v, n });
                }
            }
            if i == j {
                return Err(GraphError::Parse { line: idx + 1, message: format!("self-loop at {i}") });
            }
            adjacency[i - 1].push((j - 1) as u32);
            adjacency[j - 1].push((i - 1) as u32);
        }
        Self::from_adjacency(n, adjacency, None, None)
    }

    fn from_adjacency(
        n: usize,
        mut adjacency: Vec<Vec<u32>>,
        p: Option<f64>,
        seed: Option<u64>,
    ) -> Result<Self, GraphError> {
        let mut degree_sum = 0;
        for (v, list) in adjacency.iter_mut().enumerate() {
            list.sort_unstable();
            if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
                let (a, b) = (v.min(w[0] as usize) + 1, v.max(w[0] as usize) + 1);
                return Err(GraphError::Parse { line: 0, message: format!("duplicate edge {a} {b}") });
            }
            degree_sum += list.len();
        }
        debug_assert_eq!(degree_sum % 2, 0);
        Ok(GraphSample { n, adjacency, edge_count: degree_sum / 2, p, seed })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    /// `true` iff `{i, j}` is an edge (1-indexed).
    pub fn edge_test(&self, i: usize, j: usize) -> Result<bool, GraphError> {
        self.check(i)?;
        self.check(j)?;
        Ok(self.has_edge0((i - 1) as u32, (j - 1) as u32))
    }

    /// Sorted 1-indexed neighbors of `v`.
    pub fn neighbors(&self, v: usize) -> Result<Vec<usize>, GraphError> {
        self.check(v)?;
        Ok(self.adjacency[v - 1].iter().map(|&w| w as usize + 1).collect())
    }

    pub fn degree(&self, v: usize) -> Result<usize, GraphError> {
        self.check(v)?;
        Ok(self.adjacency[v - 1].len())
    }

    /// All edges as 1-indexed pairs `(i, j)` with `i < j`, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(v, list)| {
            list.iter().filter(move |&&w| (w as usize) > v).map(move |&w| (v + 1, w as usize + 1))
        })
    }

    fn check(&self, v: usize) -> Result<(), GraphError> {
        if v == 0 || v > self.n {
            Err(GraphError::VertexRange { vertex: v, n: self.n })
        } else {
            Ok(())
        }
    }

    #[inline]
    pub(crate) fn has_edge0(&self, u: u32, v: u32) -> bool {
        let (a, b) = if self.adjacency[u as usize].len() <= self.adjacency[v as usize].len() {
            (u, v)
        } else {
            (v, u)
        };
        self.adjacency[a as usize].binary_search(&b).is_ok()
    }

    #[inline]
    pub(crate) fn neighbors0(&self, u: u32) -> &[u32] {
        &self.adjacency[u as usize]
    }

    /// Writes the `n m` header followed by one `i j` line per edge.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<(), GraphError> {
        writeln!(out, "{} {}", self.n, self.edge_count)?;
        for (i, j) in self.edges() {
            writeln!(out, "{i} {j}")?;
        }
        Ok(())
    }

    /// Parses the edge-list format written by [`GraphSample::write_edge_list`].
    pub fn read_edge_list<R: BufRead>(input: R) -> Result<Self, GraphError> {
        let mut lines = input.lines().enumerate();
        let (n, m) = match lines.next() {
            Some((_, line)) => {
                let line = line?;
                let nums = parse_pair(&line, 1)?;
                (nums.0, nums.1)
            }
            None => return Err(GraphError::Parse { line: 1, message: "missing header".into() }),
        };
        if n == 0 {
            return Err(GraphError::Parse { line: 1, message: "vertex count must be positive".into() });
        }
        let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut seen = std::collections::HashSet::with_capacity(m);
        let mut count = 0usize;
        for (idx, line) in lines {
            let line_no = idx + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (i, j) = parse_pair(&line, line_no)?;
            if i == 0 || j > n || i > n || j == 0 {
                return Err(GraphError::Parse { line: line_no, message: format!("vertex out of range 1..={n}") });
            }
            if i >= j {
                return Err(GraphError::Parse { line: line_no, message: format!("expected i < j, got {i} {j}") });
            }
            if !seen.insert((i, j)) {
                return Err(GraphError::Parse { line: line_no, message: format!("duplicate edge {i} {j}") });
            }
            adjacency[i - 1].push((j - 1) as u32);
            adjacency[j - 1].push((i - 1) as u32);
            count += 1;
        }
        if count != m {
            return Err(GraphError::Parse {
                line: count + 2,
                message: format!("header announces {m} edges, found {count}"),
            });
        }
        Self::from_adjacency(n, adjacency, None, None)
    }
}

fn parse_pair(line: &str, line_no: usize) -> Result<(usize, usize), GraphError> {
    let mut parts = line.split_ascii_whitespace();
    let mut next = || -> Result<usize, GraphError> {
        let tok = parts
            .next()
            .ok_or_else(|| GraphError::Parse { line: line_no, message: "expected two integers".into() })?;
        tok.parse()
            .map_err(|_| GraphError::Parse { line: line_no, message: format!("not an integer: {tok:?}") })
    };
    let a = next()?;
    let b = next()?;
    if parts.next().is_some() {
        return Err(GraphError::Parse { line: line_no, message: "trailing tokens".into() });
    }
    Ok((a, b))
}

/// Samples G(n, p) with geometric skips over the lexicographic pair sequence,
/// so the cost is proportional to the number of edges drawn.
pub fn sample_er(n: usize, p: f64, seed: u64) -> Result<GraphSample, GraphError> {
    if n == 0 {
        return Err(GraphError::EmptyGraph);
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(GraphError::Density(p));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); n];
    let log_q = (-p).ln_1p();
    // pair (v, w) with w < v; walk v = 1.., w = 0..v
    let mut v: usize = 1;
    let mut w: i64 = -1;
    while v < n {
        let u: f64 = 1.0 - rng.gen::<f64>();
        let skip = (u.ln() / log_q).floor();
        w += 1 + if skip.is_finite() { skip.min(i64::MAX as f64 / 4.0) as i64 } else { i64::MAX / 4 };
        while w >= v as i64 && v < n {
            w -= v as i64;
            v += 1;
        }
        if v < n {
            adjacency[v].push(w as u32);
            adjacency[w as usize].push(v as u32);
        }
    }
    GraphSample::from_adjacency(n, adjacency, Some(p), Some(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> GraphSample {
        GraphSample::from_edges(3, &[(1, 2), (1, 3), (2, 3)]).unwrap()
    }

    #[test]
    fn edge_test_on_triangle() {
        let g = triangle();
        assert!(g.edge_test(1, 2).unwrap());
        assert!(g.edge_test(3, 1).unwrap());
        assert!(!g.edge_test(2, 2).unwrap());
        assert!(matches!(g.edge_test(0, 1), Err(GraphError::VertexRange { .. })));
        assert!(matches!(g.edge_test(1, 4), Err(GraphError::VertexRange { .. })));
    }

    #[test]
    fn sampling_rejects_bad_parameters() {
        assert!(matches!(sample_er(5, 0.0, 1), Err(GraphError::Density(_))));
        assert!(matches!(sample_er(5, 1.0, 1), Err(GraphError::Density(_))));
        assert!(matches!(sample_er(5, f64::NAN, 1), Err(GraphError::Density(_))));
        assert!(matches!(sample_er(0, 0.5, 1), Err(GraphError::EmptyGraph)));
    }

    #[test]
    fn near_one_density_gives_triangle() {
        let p = 1.0 - f64::EPSILON / 2.0;
        for seed in 0..200 {
            let g = sample_er(3, p, seed).unwrap();
            assert_eq!(g.edge_count(), 3, "seed {seed}");
        }
    }

    #[test]
    fn single_vertex_graph_is_edgeless() {
        let g = sample_er(1, 0.5, 3).unwrap();
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn same_seed_same_graph() {
        let a = sample_er(300, 0.03, 99).unwrap();
        let b = sample_er(300, 0.03, 99).unwrap();
        assert_eq!(a, b);
        let c = sample_er(300, 0.03, 100).unwrap();
        assert_ne!(a.edges().collect::<Vec<_>>(), c.edges().collect::<Vec<_>>());
    }

    #[test]
    fn large_sample_edge_count_within_five_sigma() {
        let n = 10_000usize;
        let p = 1e-2;
        let g = sample_er(n, p, 2024).unwrap();
        let pairs = (n * (n - 1) / 2) as f64;
        let mean = pairs * p;
        let sigma = (pairs * p * (1.0 - p)).sqrt();
        let got = g.edge_count() as f64;
        assert!((got - mean).abs() < 5.0 * sigma, "{got} vs {mean} ± {sigma}");
    }

    #[test]
    fn edge_test_matches_dense_matrix() {
        let g = sample_er(100, 0.1, 7).unwrap();
        let mut dense = vec![vec![false; 101]; 101];
        for (i, j) in g.edges() {
            dense[i][j] = true;
            dense[j][i] = true;
        }
        let mut checked = 0;
        for i in 1..=100 {
            for j in (i + 1)..=100 {
                assert_eq!(g.edge_test(i, j).unwrap(), dense[i][j]);
                assert_eq!(g.edge_test(j, i).unwrap(), dense[i][j]);
                checked += 1;
            }
        }
        assert_eq!(checked, 4950);
    }

    #[test]
    fn parse_header_and_edges() {
        let g = GraphSample::read_edge_list("3 3\n1 2\n1 3\n2 3\n".as_bytes()).unwrap();
        assert_eq!(g, triangle());
        let empty = GraphSample::read_edge_list("4 0\n".as_bytes()).unwrap();
        assert_eq!(empty.n(), 4);
        assert_eq!(empty.edge_count(), 0);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases = [
            ("3 2\n1 2\n1 2\n", 3),
            ("3 1\n1 4\n", 2),
            ("3 1\n2 1\n", 2),
            ("3 1\n1 x\n", 2),
            ("3 2\n1 2\n", 3),
            ("x 2\n", 1),
            ("3 1\n1 1\n", 2),
        ];
        for (text, line) in cases {
            match GraphSample::read_edge_list(text.as_bytes()) {
                Err(GraphError::Parse { line: got, .. }) => assert_eq!(got, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn write_then_read_round_trips() {
        let g = sample_er(50, 0.2, 1).unwrap();
        let mut buf = Vec::new();
        g.write_edge_list(&mut buf).unwrap();
        let header = String::from_utf8(buf.clone()).unwrap();
        assert!(header.starts_with(&format!("50 {}\n", g.edge_count())));
        let back = GraphSample::read_edge_list(buf.as_slice()).unwrap();
        assert_eq!(back.n(), g.n());
        assert_eq!(back.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
    }
}

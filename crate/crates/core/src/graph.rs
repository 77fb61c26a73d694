//! Communication graph of the non-source agents plus the virtual source,
//! and the pinned Laplacian extracted from it.
//!
//! Agents are indexed `0..n` internally and shown as `1..=n` in files and
//! reports. The source is always the last node (index `n`).

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// A node of the communication graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    /// Non-source agent, zero-based.
    Agent(usize),
    Source,
}

impl Node {
    fn index(self, agent_count: usize) -> usize {
        match self {
            Node::Agent(i) => i,
            Node::Source => agent_count,
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Agent(i) => write!(f, "{}", i + 1),
            Node::Source => f.write_str("source"),
        }
    }
}

/// Directed edge: `to` receives information from `from` with weight `a_{to,from}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<T> {
    pub from: Node,
    pub to: Node,
    pub weight: T,
}

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("graph must contain at least one non-source agent")]
    NoAgents,
    #[error("edge {from} -> {to}: weight must be positive and finite")]
    NonPositiveWeight { from: Node, to: Node },
    #[error("self-edge on node {0}")]
    SelfEdge(Node),
    #[error("duplicate edge {from} -> {to}")]
    DuplicateEdge { from: Node, to: Node },
    #[error("node {node} out of range for {agent_count} agents")]
    NodeOutOfRange { node: usize, agent_count: usize },
    #[error("agents unreachable from the source: {}", format_agents(.0))]
    Unreachable(Vec<usize>),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("labels: expected {expected}, got {got}")]
    LabelCount { expected: usize, got: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

fn format_agents(agents: &[usize]) -> String {
    agents
        .iter()
        .map(|a| (a + 1).to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

/// Weighted digraph over `n` agents and one source node.
///
/// Construction checks the structural invariants (positive weights, no
/// self-edges, no duplicates). Reachability from the source is checked
/// separately by [`GraphSpec::check_reachable`] so that disconnected graphs
/// can still be inspected.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpec<T> {
    agent_count: usize,
    edges: Vec<Edge<T>>,
    labels: Option<Vec<String>>,
}

impl<T: Scalar> GraphSpec<T> {
    pub fn new(agent_count: usize, edges: Vec<Edge<T>>) -> Result<Self, GraphError> {
        if agent_count == 0 {
            return Err(GraphError::NoAgents);
        }
        let mut seen = BTreeSet::new();
        for e in &edges {
            for node in [e.from, e.to] {
                if let Node::Agent(i) = node {
                    if i >= agent_count {
                        return Err(GraphError::NodeOutOfRange {
                            node: i + 1,
                            agent_count,
                        });
                    }
                }
            }
            if e.from == e.to {
                return Err(GraphError::SelfEdge(e.from));
            }
            if !(e.weight > T::zero() && e.weight.is_finite()) {
                return Err(GraphError::NonPositiveWeight {
                    from: e.from,
                    to: e.to,
                });
            }
            if !seen.insert((e.from, e.to)) {
                return Err(GraphError::DuplicateEdge {
                    from: e.from,
                    to: e.to,
                });
            }
        }
        Ok(Self {
            agent_count,
            edges,
            labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self, GraphError> {
        if labels.len() != self.agent_count {
            return Err(GraphError::LabelCount {
                expected: self.agent_count,
                got: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Rectangular grid of agents, numbered row-major, with bidirectional
    /// unit-weight links between horizontal and vertical neighbours. The
    /// source feeds only `leader` (one-based) with `source_weight`.
    pub fn grid(
        rows: usize,
        cols: usize,
        leader: usize,
        source_weight: T,
    ) -> Result<Self, GraphError> {
        if rows == 0 || cols == 0 {
            return Err(GraphError::InvalidGrid(format!(
                "dimensions {rows}x{cols} must be positive"
            )));
        }
        let n = rows * cols;
        if leader == 0 || leader > n {
            return Err(GraphError::InvalidGrid(format!(
                "leader {leader} outside 1..={n}"
            )));
        }
        let mut edges = Vec::with_capacity(4 * n + 1);
        let mut link = |a: usize, b: usize| {
            for (from, to) in [(a, b), (b, a)] {
                edges.push(Edge {
                    from: Node::Agent(from),
                    to: Node::Agent(to),
                    weight: T::one(),
                });
            }
        };
        for r in 0..rows {
            for c in 0..cols {
                let i = r * cols + c;
                if c + 1 < cols {
                    link(i, i + 1);
                }
                if r + 1 < rows {
                    link(i, i + cols);
                }
            }
        }
        edges.push(Edge {
            from: Node::Source,
            to: Node::Agent(leader - 1),
            weight: source_weight,
        });
        let g = Self::new(n, edges)?;
        g.check_reachable()?;
        Ok(g)
    }

    /// Line of `n` agents; a `1 x n` grid.
    pub fn chain(n: usize, leader: usize, source_weight: T) -> Result<Self, GraphError> {
        Self::grid(1, n, leader, source_weight)
    }

    pub fn agent_count(&self) -> usize {
        self.agent_count
    }

    /// Agents plus the source.
    pub fn node_count(&self) -> usize {
        self.agent_count + 1
    }

    /// Zero-based index of the source node (always last).
    pub fn source_index(&self) -> usize {
        self.agent_count
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// Weighted adjacency over all `n + 1` nodes: entry `(i, j)` is `a_ij`,
    /// nonzero when `i` listens to `j`.
    pub fn adjacency(&self) -> Matrix<T> {
        let n = self.node_count();
        let mut a = Matrix::zeros(n, n);
        for e in &self.edges {
            a[(e.to.index(self.agent_count), e.from.index(self.agent_count))] = e.weight;
        }
        a
    }

    /// True when every edge has a reverse edge of equal weight.
    pub fn is_undirected(&self) -> bool {
        let a = self.adjacency();
        a.is_symmetric()
    }

    /// Agents with no directed path from the source, zero-based, ascending.
    pub fn unreachable_agents(&self) -> Vec<usize> {
        let n = self.node_count();
        let mut out_edges = vec![Vec::new(); n];
        for e in &self.edges {
            out_edges[e.from.index(self.agent_count)].push(e.to.index(self.agent_count));
        }
        let mut visited = vec![false; n];
        let mut queue = VecDeque::from([self.source_index()]);
        visited[self.source_index()] = true;
        while let Some(u) = queue.pop_front() {
            for &v in &out_edges[u] {
                if !visited[v] {
                    visited[v] = true;
                    queue.push_back(v);
                }
            }
        }
        (0..self.agent_count).filter(|&i| !visited[i]).collect()
    }

    pub fn check_reachable(&self) -> Result<(), GraphError> {
        let missing = self.unreachable_agents();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(GraphError::Unreachable(missing))
        }
    }

    /// Serializes to the edge-list text format read by [`GraphSpec::parse`].
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("nodes={}\n", self.agent_count);
        if let Some(labels) = &self.labels {
            for (i, label) in labels.iter().enumerate() {
                out.push_str(&format!("label {} {}\n", i + 1, label));
            }
        }
        for e in &self.edges {
            out.push_str(&format!("{} {} {}\n", e.from, e.to, e.weight));
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), GraphError> {
        let path = path.as_ref();
        fs::write(path, self.to_edge_list()).map_err(|e| GraphError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    /// Parses the edge-list format:
    ///
    /// ```text
    /// # comment
    /// nodes=2
    /// 1 2 1.0
    /// 2 1 1.0
    /// source 2 1.0
    /// ```
    ///
    /// Each edge line is `<from> <to> <weight>`; agents are one-based and
    /// `source` names the source node. `label <agent> <text>` lines attach
    /// optional agent labels. The result is validated, including
    /// reachability from the source.
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        let mut agent_count: Option<usize> = None;
        let mut edges = Vec::new();
        let mut labels: Vec<Option<String>> = Vec::new();
        let mut seen = BTreeSet::new();
        let mut last_line = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            last_line = line_no;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| GraphError::Parse {
                line: line_no,
                message,
            };
            if let Some(rest) = line.strip_prefix("nodes=") {
                if agent_count.is_some() {
                    return Err(err("repeated nodes= header".into()));
                }
                let n: usize = rest
                    .trim()
                    .parse()
                    .map_err(|_| err(format!("invalid node count {rest:?}")))?;
                if n == 0 {
                    return Err(err("node count must be at least 1".into()));
                }
                agent_count = Some(n);
                labels = vec![None; n];
                continue;
            }
            let n = agent_count.ok_or_else(|| err("edge before nodes= header".into()))?;
            if let Some(rest) = line.strip_prefix("label ") {
                let mut parts = rest.trim().splitn(2, char::is_whitespace);
                let id = parse_node(parts.next().unwrap_or(""), n).map_err(err)?;
                let Node::Agent(i) = id else {
                    return Err(err("the source cannot carry a label".into()));
                };
                let text = parts.next().unwrap_or("").trim();
                if text.is_empty() {
                    return Err(err("empty label".into()));
                }
                labels[i] = Some(text.to_string());
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(err(format!(
                    "expected `<from> <to> <weight>`, got {} fields",
                    fields.len()
                )));
            }
            let from = parse_node(fields[0], n).map_err(err)?;
            let to = parse_node(fields[1], n).map_err(err)?;
            let weight: f64 = fields[2]
                .parse()
                .map_err(|_| err(format!("invalid weight {:?}", fields[2])))?;
            if from == to {
                return Err(err(format!("self-edge on node {from}")));
            }
            if !(weight > 0.0 && weight.is_finite()) {
                return Err(err(format!("weight {weight} must be positive")));
            }
            if !seen.insert((from, to)) {
                return Err(err(format!("duplicate edge {from} -> {to}")));
            }
            edges.push(Edge {
                from,
                to,
                weight: T::lit(weight),
            });
        }
        let n = agent_count.ok_or(GraphError::Parse {
            line: last_line.max(1),
            message: "missing nodes= header".into(),
        })?;
        let mut g = Self::new(n, edges)?;
        if labels.iter().any(Option::is_some) {
            let labels = labels
                .into_iter()
                .enumerate()
                .map(|(i, l)| l.unwrap_or_else(|| (i + 1).to_string()))
                .collect();
            g = g.with_labels(labels)?;
        }
        g.check_reachable()?;
        Ok(g)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| GraphError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }
}

fn parse_node(token: &str, agent_count: usize) -> Result<Node, String> {
    if token == "source" {
        return Ok(Node::Source);
    }
    let id: usize = token
        .parse()
        .map_err(|_| format!("invalid node {token:?}"))?;
    if id == 0 || id > agent_count {
        return Err(format!("node {id} outside 1..={agent_count}"));
    }
    Ok(Node::Agent(id - 1))
}

/// Reads and validates an edge-list file.
pub fn load_graph<T: Scalar>(path: impl AsRef<Path>) -> Result<GraphSpec<T>, GraphError> {
    GraphSpec::load(path)
}

/// Pinned Laplacian `K`, source-connectivity vector `B` and the full
/// Laplacian `L`, partitioned as `L = [[K, -B], [*, *]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PinnedSystem<T> {
    k: Matrix<T>,
    b: Vec<T>,
    laplacian: Matrix<T>,
}

impl<T: Scalar> PinnedSystem<T> {
    /// Fails when some agent is unreachable from the source, since `K`
    /// would then be singular.
    pub fn new(graph: &GraphSpec<T>) -> Result<Self, GraphError> {
        graph.check_reachable()?;
        let laplacian = laplacian(graph);
        let n = graph.agent_count();
        let k = Matrix::from_fn(n, n, |i, j| laplacian[(i, j)]);
        let b = (0..n).map(|i| -laplacian[(i, n)]).collect();
        Ok(Self { k, b, laplacian })
    }

    /// Number of non-source agents.
    pub fn n(&self) -> usize {
        self.k.rows()
    }

    pub fn pinned_laplacian(&self) -> &Matrix<T> {
        &self.k
    }

    pub fn source_gains(&self) -> &[T] {
        &self.b
    }

    pub fn laplacian(&self) -> &Matrix<T> {
        &self.laplacian
    }

    /// Perron matrix `I - gamma K`.
    pub fn perron_matrix(&self, gamma: T) -> Matrix<T> {
        Matrix::identity(self.n()).sub(&self.k.scale(gamma))
    }
}

/// Full `(n+1) x (n+1)` Laplacian: `l_ii = sum_m a_im`, `l_ij = -a_ij`.
pub fn laplacian<T: Scalar>(graph: &GraphSpec<T>) -> Matrix<T> {
    let a = graph.adjacency();
    let n = a.rows();
    Matrix::from_fn(n, n, |i, j| {
        if i == j {
            a.row(i).iter().copied().sum()
        } else {
            -a[(i, j)]
        }
    })
}

/// Builds the pinned system for any structurally valid graph.
pub fn build_pinned_system<T: Scalar>(graph: &GraphSpec<T>) -> Result<PinnedSystem<T>, GraphError> {
    PinnedSystem::new(graph)
}

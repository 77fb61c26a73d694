#![allow(dead_code)]

use consensus_core::{Edge, GraphSpec, Matrix, Node};
use rand::Rng;

/// Random digraph in which every agent is reachable from the source: a
/// random spanning arborescence rooted at the source plus extra edges.
pub fn random_connected_digraph<R: Rng>(
    rng: &mut R,
    n: usize,
    extra: usize,
    integer: bool,
) -> GraphSpec<f64> {
    let weight = |rng: &mut R| {
        if integer {
            rng.gen_range(1..=3) as f64
        } else {
            rng.gen_range(0.2..2.0)
        }
    };
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let mut pairs = std::collections::BTreeSet::new();
    let mut edges = Vec::new();
    for (pos, &agent) in order.iter().enumerate() {
        let parent = if pos == 0 || rng.gen_bool(0.2) {
            Node::Source
        } else {
            Node::Agent(order[rng.gen_range(0..pos)])
        };
        pairs.insert((parent, Node::Agent(agent)));
        edges.push(Edge {
            from: parent,
            to: Node::Agent(agent),
            weight: weight(rng),
        });
    }
    for _ in 0..extra {
        let from = Node::Agent(rng.gen_range(0..n));
        let to = Node::Agent(rng.gen_range(0..n));
        if from != to && pairs.insert((from, to)) {
            edges.push(Edge {
                from,
                to,
                weight: weight(rng),
            });
        }
    }
    GraphSpec::new(n, edges).unwrap()
}

/// Random connected undirected graph over agents and source (links both ways,
/// equal weights).
pub fn random_undirected<R: Rng>(rng: &mut R, n: usize, extra: usize) -> GraphSpec<f64> {
    let mut pairs = std::collections::BTreeSet::new();
    let mut edges = Vec::new();
    let mut link = |a: Node, b: Node, w: f64, edges: &mut Vec<Edge<f64>>| {
        let key = if a < b { (a, b) } else { (b, a) };
        if a != b && pairs.insert(key) {
            edges.push(Edge {
                from: a,
                to: b,
                weight: w,
            });
            edges.push(Edge {
                from: b,
                to: a,
                weight: w,
            });
        }
    };
    for i in 0..n {
        let parent = if i == 0 {
            Node::Source
        } else {
            Node::Agent(rng.gen_range(0..i))
        };
        let w = rng.gen_range(0.2..2.0);
        link(parent, Node::Agent(i), w, &mut edges);
    }
    for _ in 0..extra {
        let a = Node::Agent(rng.gen_range(0..n));
        let b = if rng.gen_bool(0.2) {
            Node::Source
        } else {
            Node::Agent(rng.gen_range(0..n))
        };
        let w = rng.gen_range(0.2..2.0);
        link(a, b, w, &mut edges);
    }
    GraphSpec::new(n, edges).unwrap()
}

pub fn random_symmetric<R: Rng>(rng: &mut R, n: usize) -> Matrix<f64> {
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = rng.gen_range(-1.0..1.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

//! Stable graphs, moduli parameters and group instantiation.
//!
//! A stable graph (V, E, T) with parameters x_h (one per oriented edge and
//! tail) and y_e (one per edge) produces a rank-g Schottky group: each
//! fundamental-group generator is the reversed product of the edge maps
//! phi_h along its loop.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::group::SchottkyGroup;
use crate::moebius::{MoebiusMap, SpherePoint};
use crate::C64;

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub id: String,
    pub from: usize,
    pub to: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tail {
    pub id: String,
    pub vertex: usize,
    pub number: usize,
}

/// Stable graph: connected, every vertex with at least 3 branches (a loop
/// counts twice), first Betti number >= 1.
#[derive(Clone, Debug, PartialEq)]
pub struct StableGraph {
    pub vertices: Vec<String>,
    pub edges: Vec<Edge>,
    pub tails: Vec<Tail>,
}

/// An oriented edge: `forward` traverses from -> to. The terminal vertex of
/// the forward orientation is `to`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OrientedEdge {
    pub edge: usize,
    pub forward: bool,
}

impl OrientedEdge {
    pub fn reversed(&self) -> Self {
        OrientedEdge {
            edge: self.edge,
            forward: !self.forward,
        }
    }
}

/// A reduced edge path: consecutive edges chain head-to-tail.
pub type GraphPath = Vec<OrientedEdge>;

impl StableGraph {
    pub fn new(vertices: Vec<String>, edges: Vec<Edge>, tails: Vec<Tail>) -> Result<Self> {
        let g = StableGraph {
            vertices,
            edges,
            tails,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn genus(&self) -> usize {
        self.edges.len() + 1 - self.vertices.len()
    }

    /// Terminal vertex of an oriented edge.
    pub fn terminal(&self, h: OrientedEdge) -> usize {
        let e = &self.edges[h.edge];
        if h.forward {
            e.to
        } else {
            e.from
        }
    }

    /// Initial vertex of an oriented edge.
    pub fn initial(&self, h: OrientedEdge) -> usize {
        self.terminal(h.reversed())
    }

    pub fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        if nv == 0 {
            return Err(Error::InvalidGraph("no vertices".into()));
        }
        for e in &self.edges {
            if e.from >= nv || e.to >= nv {
                return Err(Error::InvalidGraph(format!(
                    "edge {} references a missing vertex",
                    e.id
                )));
            }
        }
        for t in &self.tails {
            if t.vertex >= nv {
                return Err(Error::InvalidGraph(format!(
                    "tail {} references a missing vertex",
                    t.id
                )));
            }
        }
        // distinct ids
        let mut ids: Vec<&str> = self
            .edges
            .iter()
            .map(|e| e.id.as_str())
            .chain(self.tails.iter().map(|t| t.id.as_str()))
            .collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph("duplicate edge/tail id".into()));
        }
        // tail numbering is a bijection onto 1..=n
        let mut nums: Vec<usize> = self.tails.iter().map(|t| t.number).collect();
        nums.sort_unstable();
        for (k, n) in nums.iter().enumerate() {
            if *n != k + 1 {
                return Err(Error::InvalidGraph(
                    "tail numbering must be 1..=n without repeats".into(),
                ));
            }
        }
        // connectivity
        let mut seen = vec![false; nv];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for e in &self.edges {
                for (a, b) in [(e.from, e.to), (e.to, e.from)] {
                    if a == v && !seen[b] {
                        seen[b] = true;
                        stack.push(b);
                    }
                }
            }
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::InvalidGraph("graph is not connected".into()));
        }
        // stability: every vertex has >= 3 branches (loops count twice)
        for (v, name) in self.vertices.iter().enumerate() {
            let mut branches = 0usize;
            for e in &self.edges {
                branches += usize::from(e.from == v) + usize::from(e.to == v);
            }
            branches += self.tails.iter().filter(|t| t.vertex == v).count();
            if branches < 3 {
                return Err(Error::InvalidGraph(format!(
                    "vertex {name} has {branches} branches (needs >= 3)"
                )));
            }
        }
        if self.edges.len() < self.vertices.len() {
            return Err(Error::InvalidGraph("first Betti number must be >= 1".into()));
        }
        Ok(())
    }

    /// Oriented-edge key used in parameter maps: the edge id, prefixed with
    /// '-' for the reverse orientation.
    pub fn oriented_id(&self, h: OrientedEdge) -> String {
        let id = &self.edges[h.edge].id;
        if h.forward {
            id.clone()
        } else {
            format!("-{id}")
        }
    }

    /// Tail with numbering 1 (the KP marked point).
    pub fn marked_tail(&self) -> Option<&Tail> {
        self.tails.iter().find(|t| t.number == 1)
    }
}

/// Moduli parameters: x values keyed by oriented-edge id or tail id
/// (SpherePoint; "infinity" marks the E_infinity subset), y values keyed by
/// edge id.
#[derive(Clone, Debug)]
pub struct SchottkyParams {
    pub x: BTreeMap<String, SpherePoint>,
    pub y: BTreeMap<String, C64>,
}

impl SchottkyParams {
    pub fn x_of(&self, graph: &StableGraph, h: OrientedEdge) -> Result<SpherePoint> {
        self.x
            .get(&graph.oriented_id(h))
            .copied()
            .ok_or_else(|| Error::InvalidParams(format!("missing x for {}", graph.oriented_id(h))))
    }

    pub fn x_of_tail(&self, tail: &Tail) -> Result<SpherePoint> {
        self.x
            .get(&tail.id)
            .copied()
            .ok_or_else(|| Error::InvalidParams(format!("missing x for tail {}", tail.id)))
    }

    pub fn y_of(&self, graph: &StableGraph, edge: usize) -> Result<C64> {
        self.y
            .get(&graph.edges[edge].id)
            .copied()
            .ok_or_else(|| {
                Error::InvalidParams(format!("missing y for edge {}", graph.edges[edge].id))
            })
    }

    /// Checks the parameter constraints against the graph.
    pub fn validate_for(&self, graph: &StableGraph) -> Result<()> {
        // collect (terminal vertex, x) for every oriented edge and tail
        let mut placed: Vec<(usize, String, SpherePoint)> = Vec::new();
        for (k, _e) in graph.edges.iter().enumerate() {
            for forward in [true, false] {
                let h = OrientedEdge { edge: k, forward };
                let x = self.x_of(graph, h)?;
                if let SpherePoint::Finite(z) = x {
                    if !z.re.is_finite() || !z.im.is_finite() {
                        return Err(Error::InvalidParams(format!(
                            "x for {} is not finite",
                            graph.oriented_id(h)
                        )));
                    }
                }
                placed.push((graph.terminal(h), graph.oriented_id(h), x));
            }
        }
        for t in &graph.tails {
            let x = self.x_of_tail(t)?;
            if let SpherePoint::Finite(z) = x {
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(Error::InvalidParams(format!("x for tail {} not finite", t.id)));
                }
            }
            placed.push((t.vertex, t.id.clone(), x));
        }
        // distinctness at every vertex, at most one infinity per vertex
        for (a, (va, ida, xa)) in placed.iter().enumerate() {
            for (vb, idb, xb) in placed.iter().skip(a + 1) {
                if va == vb && xa.chordal_dist(xb) < 1e-12 {
                    return Err(Error::InvalidParams(format!(
                        "x values for {ida} and {idb} coincide at vertex {va}"
                    )));
                }
            }
        }
        // x_e != x_{-e} even across vertices
        for (k, e) in graph.edges.iter().enumerate() {
            let xf = self.x_of(graph, OrientedEdge { edge: k, forward: true })?;
            let xr = self.x_of(graph, OrientedEdge { edge: k, forward: false })?;
            if xf.chordal_dist(&xr) < 1e-12 {
                return Err(Error::InvalidParams(format!(
                    "x_e and x_-e coincide for edge {}",
                    e.id
                )));
            }
            let y = self.y_of(graph, k)?;
            if !(y.norm() > 0.0 && y.norm() < 1.0) {
                return Err(Error::InvalidParams(format!(
                    "y for edge {} must satisfy 0 < |y| < 1",
                    e.id
                )));
            }
            if !y.re.is_finite() || !y.im.is_finite() {
                return Err(Error::InvalidParams(format!("y for edge {} not finite", e.id)));
            }
        }
        Ok(())
    }
}

/// The edge map phi_h with attractive fixed point x_plus, repulsive x_minus
/// and multiplier y. With y = 0 the matrix degenerates to the constant map
/// z -> x_plus (rank one); such maps are only used by the degeneration
/// operations.
pub fn build_phi(x_plus: SpherePoint, x_minus: SpherePoint, y: C64) -> Result<MoebiusMap> {
    let one = C64::new(1.0, 0.0);
    match (x_plus, x_minus) {
        (SpherePoint::Finite(p), SpherePoint::Finite(q)) => {
            if (p - q).norm() < 1e-14 * (1.0 + p.norm().max(q.norm())) {
                return Err(Error::CoincidentFixedPoints);
            }
            Ok(MoebiusMap::new_unchecked(
                p - q * y,
                -p * q * (one - y),
                one - y,
                -q + p * y,
            ))
        }
        (SpherePoint::Finite(p), SpherePoint::Infinity) => {
            // z -> y z + p (1 - y)
            Ok(MoebiusMap::new_unchecked(
                y,
                p * (one - y),
                C64::new(0.0, 0.0),
                one,
            ))
        }
        (SpherePoint::Infinity, SpherePoint::Finite(q)) => {
            // z -> (z - q(1-y)) / y
            Ok(MoebiusMap::new_unchecked(
                one,
                -q * (one - y),
                C64::new(0.0, 0.0),
                y,
            ))
        }
        (SpherePoint::Infinity, SpherePoint::Infinity) => Err(Error::CoincidentFixedPoints),
    }
}

/// Deterministic maximal subtree: breadth-first from vertex 0, edges tried in
/// declaration order. Returns tree edge indices.
pub fn spanning_tree(graph: &StableGraph) -> Vec<usize> {
    spanning_tree_from(graph, 0)
}

fn spanning_tree_from(graph: &StableGraph, base: usize) -> Vec<usize> {
    let nv = graph.vertices.len();
    let mut in_tree = Vec::new();
    let mut seen = vec![false; nv];
    seen[base] = true;
    let mut frontier = vec![base];
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for &v in &frontier {
            for (k, e) in graph.edges.iter().enumerate() {
                if e.from == e.to {
                    continue;
                }
                let other = if e.from == v {
                    e.to
                } else if e.to == v {
                    e.from
                } else {
                    continue;
                };
                if !seen[other] {
                    seen[other] = true;
                    in_tree.push(k);
                    next.push(other);
                }
            }
        }
        frontier = next;
    }
    in_tree.sort_unstable();
    in_tree
}

/// Unique path between two vertices inside the tree, as oriented edges.
pub fn tree_path_between(graph: &StableGraph, tree: &[usize], from: usize, to: usize) -> GraphPath {
    tree_path(graph, tree, from, to)
}

fn tree_path(graph: &StableGraph, tree: &[usize], from: usize, to: usize) -> GraphPath {
    if from == to {
        return Vec::new();
    }
    // BFS within tree edges
    let nv = graph.vertices.len();
    let mut prev: Vec<Option<OrientedEdge>> = vec![None; nv];
    let mut seen = vec![false; nv];
    seen[from] = true;
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(from);
    while let Some(v) = queue.pop_front() {
        if v == to {
            break;
        }
        for &k in tree {
            for forward in [true, false] {
                let h = OrientedEdge { edge: k, forward };
                if graph.initial(h) == v && !seen[graph.terminal(h)] {
                    let w = graph.terminal(h);
                    seen[w] = true;
                    prev[w] = Some(h);
                    queue.push_back(w);
                }
            }
        }
    }
    let mut path = Vec::new();
    let mut v = to;
    while v != from {
        let h = prev[v].expect("tree is spanning");
        path.push(h);
        v = graph.initial(h);
    }
    path.reverse();
    path
}

/// Closed reduced loops generating pi_1(graph, base): one per non-tree edge,
/// ordered by edge declaration order. These are the b-cycle classes.
pub fn pi1_generators(graph: &StableGraph, base: usize, tree: &[usize]) -> Vec<GraphPath> {
    let mut gens = Vec::new();
    for k in 0..graph.edges.len() {
        if tree.contains(&k) {
            continue;
        }
        let h = OrientedEdge {
            edge: k,
            forward: true,
        };
        let mut path = tree_path(graph, tree, base, graph.initial(h));
        path.push(h);
        path.extend(tree_path(graph, tree, graph.terminal(h), base));
        gens.push(path);
    }
    gens
}

/// phi map of an oriented edge.
pub fn phi_of(graph: &StableGraph, params: &SchottkyParams, h: OrientedEdge) -> Result<MoebiusMap> {
    let x_plus = params.x_of(graph, h)?;
    let x_minus = params.x_of(graph, h.reversed())?;
    let y = params.y_of(graph, h.edge)?;
    build_phi(x_plus, x_minus, y)
}

/// Group element of a reduced edge path rho = h(1)...h(l): the reversed
/// product phi_{h(l)} ... phi_{h(1)} (the paper's anti-homomorphism order).
pub fn path_map(graph: &StableGraph, params: &SchottkyParams, path: &GraphPath) -> Result<MoebiusMap> {
    let mut m = MoebiusMap::identity();
    for &h in path {
        m = phi_of(graph, params, h)?.compose(&m);
    }
    Ok(m)
}

/// Instantiates the Schottky group from graph data using the deterministic
/// spanning tree, and validates the classical (disjoint isometric circles)
/// condition.
pub fn instantiate_group(graph: &StableGraph, params: &SchottkyParams) -> Result<SchottkyGroup> {
    let tree = spanning_tree(graph);
    instantiate_group_with_tree(graph, params, &tree)
}

/// Same, with an explicit spanning tree (used to test tree invariance).
pub fn instantiate_group_with_tree(
    graph: &StableGraph,
    params: &SchottkyParams,
    tree: &[usize],
) -> Result<SchottkyGroup> {
    graph.validate()?;
    params.validate_for(graph)?;
    let gens = pi1_generators(graph, 0, tree)
        .iter()
        .map(|p| path_map(graph, params, p))
        .collect::<Result<Vec<_>>>()?;
    let group = SchottkyGroup::from_generators(gens)?;
    let report = group.validate_classical();
    if !report.pass {
        return Err(Error::CirclesOverlap {
            min_gap: report.min_gap,
        });
    }
    Ok(group)
}

/// Marked point (tail numbered 1) as a finite complex value.
pub fn marked_point(graph: &StableGraph, params: &SchottkyParams) -> Result<C64> {
    let tail = graph
        .marked_tail()
        .ok_or_else(|| Error::InvalidGraph("no tail numbered 1".into()))?;
    params
        .x_of_tail(tail)?
        .value()
        .ok_or(Error::UnsupportedInfinity)
}

/// One-vertex M-curve data: g loops with real interlaced fixed points
/// x_{-1} < x_1 < x_{-2} < x_2 < ... (equally spaced by `scale`), tails to
/// the left of all of them, all multipliers equal to `y_value`.
pub fn mcurve_params(
    g: usize,
    n_tails: usize,
    scale: f64,
    y_value: f64,
) -> Result<(StableGraph, SchottkyParams)> {
    if g == 0 || !(y_value > 0.0 && y_value < 1.0) || !(scale > 0.0) || n_tails == 0 {
        return Err(Error::InvalidScale);
    }
    let edges: Vec<Edge> = (1..=g)
        .map(|i| Edge {
            id: format!("e{i}"),
            from: 0,
            to: 0,
        })
        .collect();
    let tails: Vec<Tail> = (1..=n_tails)
        .map(|k| Tail {
            id: format!("t{k}"),
            vertex: 0,
            number: k,
        })
        .collect();
    let graph = StableGraph::new(vec!["v0".into()], edges, tails)?;
    let mut x = BTreeMap::new();
    let mut y = BTreeMap::new();
    for i in 1..=g {
        let x_minus = -1.0 + (2 * i - 2) as f64 * scale;
        let x_plus = -1.0 + (2 * i - 1) as f64 * scale;
        x.insert(format!("e{i}"), SpherePoint::from(x_plus));
        x.insert(format!("-e{i}"), SpherePoint::from(x_minus));
        y.insert(format!("e{i}"), C64::new(y_value, 0.0));
    }
    for k in 1..=n_tails {
        x.insert(format!("t{k}"), SpherePoint::from(-1.0 - k as f64 * scale));
    }
    let params = SchottkyParams { x, y };
    params
        .validate_for(&graph)
        .map_err(|_| Error::InvalidScale)?;
    // must pass the classical validation to be usable
    instantiate_group(&graph, &params)?;
    Ok((graph, params))
}

//! Degenerating families: pinching one edge parameter y_* -> 0.
//!
//! Pinching a non-separating edge drops the genus by one and turns the
//! pinched first-kind differential into a third-kind one; the tau function,
//! suitably rescaled, tends to a modified tau function on the limit curve.
//! Pinching a separating (bridge) edge splits the curve and the tau function
//! factors. The full rational limit produces the soliton tau functions.

use crate::differentials::{
    b_period_integral_with, base_point, laurent_data, laurent_radius, Differential,
    DifferentialKind, LaurentData, TruncationPolicy,
};
use crate::error::{Error, Result};
use crate::graph::{
    instantiate_group_with_tree, marked_point, path_map, pi1_generators, spanning_tree,
    GraphPath, OrientedEdge, SchottkyParams, StableGraph,
};
use crate::group::SchottkyGroup;
use crate::linalg::CMat;
use crate::periods::period_matrix;
use crate::quad::{circle_samples, taylor_from_circle};
use crate::tau::{Characteristic, TauData};
use crate::theta::theta_raw;
use crate::C64;

const PI: f64 = std::f64::consts::PI;
const TWO_PI: f64 = 2.0 * PI;

/// Classification of a pinch.
#[derive(Clone, Debug, PartialEq)]
pub enum ScenarioClass {
    /// non-separating edge, beta_g not in Z + 1/2
    IrreducibleGeneric,
    /// non-separating edge, beta_g in Z + 1/2
    IrreducibleHalfInteger,
    /// separating edge: the curve splits into genus (g1, g2) components
    Reducible { g1: usize, g2: usize },
}

/// A one-edge degeneration family: base data, the pinched edge, the y values
/// to walk down, and the theta characteristic.
#[derive(Clone, Debug)]
pub struct DegenerationScenario {
    pub graph: StableGraph,
    pub params: SchottkyParams,
    pub pinch_edge: String,
    pub y_sequence: Vec<f64>,
    pub chi: Characteristic,
}

impl DegenerationScenario {
    pub fn pinch_index(&self) -> Result<usize> {
        self.graph
            .edges
            .iter()
            .position(|e| e.id == self.pinch_edge)
            .ok_or_else(|| Error::Config(format!("unknown pinch edge {}", self.pinch_edge)))
    }

    /// Spanning tree avoiding the pinch edge when possible (it always is for
    /// a non-separating edge).
    pub fn tree(&self) -> Result<Vec<usize>> {
        let pinch = self.pinch_index()?;
        if is_bridge(&self.graph, pinch) {
            return Ok(spanning_tree(&self.graph));
        }
        let mut reduced = self.graph.clone();
        reduced.edges.remove(pinch);
        let tree_red = spanning_tree(&reduced);
        // map edge indices back (indices >= pinch shift by one)
        Ok(tree_red
            .into_iter()
            .map(|k| if k >= pinch { k + 1 } else { k })
            .collect())
    }

    /// Position of the pinched generator among the scenario generators
    /// (non-tree edges in declaration order).
    pub fn pinched_generator(&self) -> Result<usize> {
        let pinch = self.pinch_index()?;
        let tree = self.tree()?;
        let mut idx = 0usize;
        for k in 0..self.graph.edges.len() {
            if tree.contains(&k) {
                continue;
            }
            if k == pinch {
                return Ok(idx);
            }
            idx += 1;
        }
        Err(Error::Config("pinch edge is a tree edge".into()))
    }

    pub fn classify(&self) -> Result<ScenarioClass> {
        let pinch = self.pinch_index()?;
        if is_bridge(&self.graph, pinch) {
            let (side1, _side2) = bridge_split(&self.graph, pinch);
            let g = self.graph.genus();
            let g1 = component_genus(&self.graph, &side1);
            return Ok(ScenarioClass::Reducible { g1, g2: g - g1 });
        }
        let p = self.pinched_generator()?;
        let beta_g = self.chi.beta[p];
        let frac = beta_g - beta_g.floor();
        if (frac - 0.5).abs() < 1e-12 {
            Ok(ScenarioClass::IrreducibleHalfInteger)
        } else {
            Ok(ScenarioClass::IrreducibleGeneric)
        }
    }

    /// Params with the pinch edge's multiplier set to y.
    pub fn params_at(&self, y: f64) -> SchottkyParams {
        let mut p = self.params.clone();
        p.y.insert(self.pinch_edge.clone(), C64::new(y, 0.0));
        p
    }

    /// The family group at pinch parameter y, built on the scenario tree.
    pub fn group_at(&self, y: f64) -> Result<SchottkyGroup> {
        let tree = self.tree()?;
        instantiate_group_with_tree(&self.graph, &self.params_at(y), &tree)
    }
}

fn is_bridge(graph: &StableGraph, edge: usize) -> bool {
    let e = &graph.edges[edge];
    if e.from == e.to {
        return false;
    }
    // connectivity without the edge
    let nv = graph.vertices.len();
    let mut seen = vec![false; nv];
    seen[e.from] = true;
    let mut stack = vec![e.from];
    while let Some(v) = stack.pop() {
        for (k, e2) in graph.edges.iter().enumerate() {
            if k == edge {
                continue;
            }
            for (a, b) in [(e2.from, e2.to), (e2.to, e2.from)] {
                if a == v && !seen[b] {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
    }
    !seen[e.to]
}

/// Vertices on each side of a bridge; side 1 is the component containing the
/// base vertex 0.
fn bridge_split(graph: &StableGraph, edge: usize) -> (Vec<usize>, Vec<usize>) {
    let e = &graph.edges[edge];
    let nv = graph.vertices.len();
    let mut seen = vec![false; nv];
    seen[e.from] = true;
    let mut stack = vec![e.from];
    while let Some(v) = stack.pop() {
        for (k, e2) in graph.edges.iter().enumerate() {
            if k == edge {
                continue;
            }
            for (a, b) in [(e2.from, e2.to), (e2.to, e2.from)] {
                if a == v && !seen[b] {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
    }
    let side_from: Vec<usize> = (0..nv).filter(|&v| seen[v]).collect();
    let side_to: Vec<usize> = (0..nv).filter(|&v| !seen[v]).collect();
    if side_from.contains(&0) {
        (side_from, side_to)
    } else {
        (side_to, side_from)
    }
}

fn component_genus(graph: &StableGraph, vertices: &[usize]) -> usize {
    let ne = graph
        .edges
        .iter()
        .filter(|e| vertices.contains(&e.from) && vertices.contains(&e.to))
        .count();
    ne + 1 - vertices.len()
}

/// Closed-form y = 0 restriction of the first-kind differential omega_i to
/// the component sphere of `vertex`: simple poles with residues +-1 along the
/// cyclically reduced edge word of the i-th cycle (1-based generator index).
pub fn stable_limit_first_kind(
    graph: &StableGraph,
    params: &SchottkyParams,
    cycle_index: usize,
    vertex: usize,
) -> Result<Vec<(C64, i32)>> {
    let tree = spanning_tree(graph);
    let gens = pi1_generators(graph, 0, &tree);
    if cycle_index == 0 || cycle_index > gens.len() {
        return Err(Error::IndexOutOfRange {
            index: cycle_index as i32,
            rank: gens.len(),
        });
    }
    // cyclically reduce the edge word
    let mut word: GraphPath = gens[cycle_index - 1].clone();
    while word.len() >= 2 && word.first().unwrap().reversed() == *word.last().unwrap() {
        word.remove(0);
        word.pop();
    }
    let mut out = Vec::new();
    for &h in &word {
        if graph.terminal(h) == vertex {
            let x = params
                .x_of(graph, h)?
                .value()
                .ok_or(Error::UnsupportedInfinity)?;
            out.push((x, 1));
        }
        if graph.terminal(h.reversed()) == vertex {
            let x = params
                .x_of(graph, h.reversed())?
                .value()
                .ok_or(Error::UnsupportedInfinity)?;
            out.push((x, -1));
        }
    }
    Ok(out)
}

/// Limit data of an irreducible pinch: the rank g-1 group, the pinched
/// points p1, p2, the limit column Zbar_{i,g}, the third-kind Taylor
/// coefficients rbar_{g,m} at the marked point, and the limit-curve tau
/// ingredients (period matrix and Laurent data).
#[derive(Clone, Debug)]
pub struct IrreducibleLimit {
    pub pinched: usize,
    pub beta_g: f64,
    pub p1: C64,
    pub p2: C64,
    pub zbar_col: Vec<C64>,
    pub rbar_g: Vec<C64>,
    pub z_limit: CMat,
    pub laurent_limit: LaurentData,
    /// surviving components of alpha and beta, scenario order minus pinched
    pub alpha_rest: Vec<C64>,
    pub beta_rest: Vec<f64>,
    pub alpha_g: C64,
    pub marked: C64,
}

/// Builds the limit objects directly on the limit curve (never by evaluating
/// the family at tiny y).
pub fn limit_data_irreducible(
    scenario: &DegenerationScenario,
    policy: &TruncationPolicy,
) -> Result<IrreducibleLimit> {
    if let ScenarioClass::Reducible { .. } = scenario.classify()? {
        return Err(Error::Config("scenario pinches a separating edge".into()))
    }
    let pinch = scenario.pinch_index()?;
    let p_idx = scenario.pinched_generator()?;
    let tree = scenario.tree()?;
    let gens_paths = pi1_generators(&scenario.graph, 0, &tree);
    let params = &scenario.params;

    // pinched fixed-point limits: split the pinched cycle at the pinch edge
    let path = &gens_paths[p_idx];
    let pos = path
        .iter()
        .position(|h| h.edge == pinch)
        .ok_or_else(|| Error::Config("pinched cycle does not traverse the edge".into()))?;
    let h_star = path[pos];
    // generator = suffix_map . phi_* . prefix_map (anti-homomorphism order)
    let prefix: GraphPath = path[..pos].to_vec();
    let suffix: GraphPath = path[pos + 1..].to_vec();
    let suffix_map = path_map(&scenario.graph, params, &suffix)?;
    let prefix_map = path_map(&scenario.graph, params, &prefix)?;
    let x_star = params
        .x_of(&scenario.graph, h_star)?
        .value()
        .ok_or(Error::UnsupportedInfinity)?;
    let x_star_rev = params
        .x_of(&scenario.graph, h_star.reversed())?
        .value()
        .ok_or(Error::UnsupportedInfinity)?;
    let p1 = suffix_map.apply_c(x_star);
    let p2 = prefix_map.inverse().apply_c(x_star_rev);

    // limit group: the surviving generators (their matrices do not involve
    // the pinched edge)
    let mut gens = Vec::new();
    for (k, p) in gens_paths.iter().enumerate() {
        if k == p_idx {
            continue;
        }
        gens.push(path_map(&scenario.graph, params, p)?);
    }
    let limit_group = SchottkyGroup::from_generators(gens)?;
    let report = limit_group.validate_classical();
    if !report.pass {
        return Err(Error::CirclesOverlap {
            min_gap: report.min_gap,
        });
    }

    let marked = marked_point(&scenario.graph, params)?;
    let g_rest = limit_group.rank();

    // Zbar_{i,g} = (1/2 pi i) b_i-integral of the third-kind differential
    let third = Differential::new(
        &limit_group,
        DifferentialKind::Third { p1, p2 },
        policy,
    )?;
    let z0 = base_point(&limit_group)?;
    let mut zbar_col = Vec::with_capacity(g_rest);
    for i in 1..=g_rest {
        let integral = b_period_integral_with(&third, i, z0, policy)?;
        zbar_col.push(integral / C64::new(0.0, TWO_PI));
    }

    // rbar_{g,m}: Taylor coefficients of the third-kind density at the marked point
    let m_times = 8usize;
    let mut rho = laurent_radius(&limit_group, marked)?;
    rho = rho.min(0.5 * (marked - p1).norm()).min(0.5 * (marked - p2).norm());
    let samples = circle_samples(marked, rho, 128, |z| third.density(z))?;
    let rbar_g = taylor_from_circle(&samples, rho, m_times - 1);

    let z_limit = if g_rest > 0 {
        period_matrix(&limit_group, policy)?.z
    } else {
        CMat::zeros(0, 0)
    };
    let laurent_limit = laurent_data(&limit_group, marked, m_times, policy)?;

    let mut alpha_rest = scenario.chi.alpha.clone();
    let mut beta_rest = scenario.chi.beta.clone();
    let alpha_g = alpha_rest.remove(p_idx);
    let beta_g = beta_rest.remove(p_idx);

    Ok(IrreducibleLimit {
        pinched: p_idx,
        beta_g,
        p1,
        p2,
        zbar_col,
        rbar_g,
        z_limit,
        laurent_limit,
        alpha_rest,
        beta_rest,
        alpha_g,
        marked,
    })
}

impl IrreducibleLimit {
    /// The base factor
    /// B(t) = exp(2 pi i (alpha_g + sum beta_i Zbar_{i,g}) + sum rbar_{g,m} t_m).
    fn base_factor(&self, t: &[C64]) -> C64 {
        let mut expo = C64::new(0.0, TWO_PI) * self.alpha_g;
        for (i, z) in self.zbar_col.iter().enumerate() {
            expo += C64::new(0.0, TWO_PI) * self.beta_rest[i] * z;
        }
        for (m, &tm) in t.iter().enumerate() {
            if m < self.rbar_g.len() {
                expo += self.rbar_g[m] * tm;
            }
        }
        expo.exp()
    }

    /// Tau data on the limit curve with the shifted characteristic
    /// alpha_i + Zbar_{i,g} (beta_bar + beta_g).
    fn limit_tau(&self, beta_shift: f64) -> Result<TauData> {
        let g = self.z_limit.rows;
        let mut alpha = self.alpha_rest.clone();
        for i in 0..g {
            alpha[i] += self.zbar_col[i] * beta_shift;
        }
        TauData::new(
            self.z_limit.clone(),
            Characteristic {
                alpha,
                beta: self.beta_rest.clone(),
            },
            self.laurent_limit.clone(),
        )
    }
}

/// The unique integer beta_bar with |beta_bar + beta_g| < 1/2.
pub fn nearest_integer_offset(beta_g: f64) -> Result<i64> {
    let frac = beta_g - beta_g.floor();
    if (frac - 0.5).abs() < 1e-12 {
        return Err(Error::HalfIntegerCharacteristic);
    }
    Ok(-(beta_g.round() as i64))
}

/// Modified tau function of a generic irreducible pinch (beta_g not in
/// Z + 1/2): B(t)^{beta_bar} tau(t, X'_{c_bar}).
pub fn modified_tau_generic(limit: &IrreducibleLimit, t: &[C64]) -> Result<C64> {
    let beta_bar = nearest_integer_offset(limit.beta_g)?;
    let tau = limit.limit_tau(beta_bar as f64 + limit.beta_g)?;
    let factor = powi_c(limit.base_factor(t), beta_bar);
    Ok(factor * tau.tau(t)?)
}

/// Modified tau function of a half-integer pinch (beta_g in Z + 1/2): the
/// two-term sum over the nearest integers beta_bar_1 = -beta_g - 1/2 and
/// beta_bar_2 = -beta_g + 1/2.
pub fn modified_tau_halfint(limit: &IrreducibleLimit, t: &[C64]) -> Result<C64> {
    let frac = limit.beta_g - limit.beta_g.floor();
    if (frac - 0.5).abs() > 1e-12 {
        return Err(Error::GenericCharacteristic);
    }
    let b1 = -limit.beta_g - 0.5;
    let b2 = -limit.beta_g + 0.5;
    let mut acc = C64::new(0.0, 0.0);
    for b in [b1, b2] {
        let tau = limit.limit_tau(b + limit.beta_g)?;
        let factor = powi_c(limit.base_factor(t), b.round() as i64);
        acc += factor * tau.tau(t)?;
    }
    Ok(acc)
}

fn powi_c(base: C64, n: i64) -> C64 {
    if n == 0 {
        return C64::new(1.0, 0.0);
    }
    let mut acc = C64::new(1.0, 0.0);
    let b = if n > 0 { base } else { 1.0 / base };
    for _ in 0..n.unsigned_abs() {
        acc *= b;
    }
    acc
}

/// Limit data of a reducible (bridge) pinch: the marked component's tau data
/// and the far component's constant theta value.
#[derive(Clone, Debug)]
pub struct ReducibleLimit {
    pub g1: usize,
    pub g2: usize,
    /// fixed c vector of the scenario, split into the two blocks
    pub c1: Vec<C64>,
    pub c2: Vec<C64>,
    pub tau1: TauData,
    pub z2: CMat,
    /// generator indices (scenario order) on the marked component
    pub side1_indices: Vec<usize>,
}

pub fn limit_data_reducible(
    scenario: &DegenerationScenario,
    policy: &TruncationPolicy,
) -> Result<ReducibleLimit> {
    let (g1, g2) = match scenario.classify()? {
        ScenarioClass::Reducible { g1, g2 } => (g1, g2),
        _ => return Err(Error::Config("scenario pinches a non-separating edge".into())),
    };
    let pinch = scenario.pinch_index()?;
    let (side1, side2) = bridge_split(&scenario.graph, pinch);
    let marked_tail = scenario
        .graph
        .marked_tail()
        .ok_or_else(|| Error::InvalidGraph("no tail numbered 1".into()))?;
    if !side1.contains(&marked_tail.vertex) {
        return Err(Error::Config(
            "marked point must lie on the component containing the base vertex".into(),
        ));
    }

    let tree = spanning_tree(&scenario.graph);
    // scenario generator indices by side
    let mut side1_indices = Vec::new();
    let mut side2_indices = Vec::new();
    let mut idx = 0usize;
    for (k, e) in scenario.graph.edges.iter().enumerate() {
        if tree.contains(&k) {
            continue;
        }
        if side1.contains(&e.from) {
            side1_indices.push(idx);
        } else {
            side2_indices.push(idx);
        }
        idx += 1;
    }
    if side1_indices.len() != g1 || side2_indices.len() != g2 {
        return Err(Error::Config("genus split does not match generator split".into()));
    }

    // component subgraphs with inherited trees
    if g1 == 0 {
        return Err(Error::Config(
            "reducible limit with marked component of genus 0 is not supported".into(),
        ));
    }
    let (graph1, params1, tree1) = subgraph(scenario, &side1, &tree)?;
    let group1 = instantiate_group_with_tree(&graph1, &params1, &tree1)?;
    let z1 = period_matrix(&group1, policy)?.z;
    let z2 = if g2 > 0 {
        let (graph2, params2, tree2) = subgraph(scenario, &side2, &tree)?;
        let group2 = instantiate_group_with_tree(&graph2, &params2, &tree2)?;
        period_matrix(&group2, policy)?.z
    } else {
        CMat::zeros(0, 0)
    };

    // fixed c from the characteristic through the block-diagonal limit matrix
    let g = g1 + g2;
    let mut z_block = CMat::zeros(g, g);
    for (a, &ia) in side1_indices.iter().enumerate() {
        for (b, &ib) in side1_indices.iter().enumerate() {
            z_block.set(ia, ib, z1.at(a, b));
        }
    }
    for (a, &ia) in side2_indices.iter().enumerate() {
        for (b, &ib) in side2_indices.iter().enumerate() {
            z_block.set(ia, ib, z2.at(a, b));
        }
    }
    let c_full = scenario.chi.c_vector(&z_block);
    let c1: Vec<C64> = side1_indices.iter().map(|&i| c_full[i]).collect();
    let c2: Vec<C64> = side2_indices.iter().map(|&i| c_full[i]).collect();

    let marked = marked_point(&graph1, &params1)?;
    let m_times = 8usize;
    let laurent1 = laurent_data(&group1, marked, m_times, policy)?;
    let tau1 = TauData::new(
        z1,
        Characteristic {
            alpha: c1.iter().map(|c| c / C64::new(0.0, TWO_PI)).collect(),
            beta: vec![0.0; g1],
        },
        laurent1,
    )?;

    Ok(ReducibleLimit {
        g1,
        g2,
        c1,
        c2,
        tau1,
        z2,
        side1_indices,
    })
}

/// Extracts a component subgraph with its parameters and the inherited tree.
fn subgraph(
    scenario: &DegenerationScenario,
    vertices: &[usize],
    tree: &[usize],
) -> Result<(StableGraph, SchottkyParams, Vec<usize>)> {
    let graph = &scenario.graph;
    let mut vmap = vec![usize::MAX; graph.vertices.len()];
    for (new, &old) in vertices.iter().enumerate() {
        vmap[old] = new;
    }
    let mut edges = Vec::new();
    let mut edge_map = Vec::new();
    for (k, e) in graph.edges.iter().enumerate() {
        if vertices.contains(&e.from) && vertices.contains(&e.to) {
            edge_map.push(k);
            edges.push(crate::graph::Edge {
                id: e.id.clone(),
                from: vmap[e.from],
                to: vmap[e.to],
            });
        }
    }
    let mut tails: Vec<crate::graph::Tail> = graph
        .tails
        .iter()
        .filter(|t| vertices.contains(&t.vertex))
        .map(|t| crate::graph::Tail {
            id: t.id.clone(),
            vertex: vmap[t.vertex],
            number: t.number,
        })
        .collect();
    // renumber tails 1..n preserving order; add a synthetic tail at the old
    // bridge attachment to keep the component stable and marked
    tails.sort_by_key(|t| t.number);
    for (n, t) in tails.iter_mut().enumerate() {
        t.number = n + 1;
    }
    let pinch = scenario.pinch_index()?;
    let bridge = &graph.edges[pinch];
    let (attach_vertex, attach_half) = if vertices.contains(&bridge.from) {
        (
            bridge.from,
            OrientedEdge {
                edge: pinch,
                forward: false,
            },
        )
    } else {
        (
            bridge.to,
            OrientedEdge {
                edge: pinch,
                forward: true,
            },
        )
    };
    let attach_x = scenario.params.x_of(graph, attach_half)?;
    let node_id = format!("node-{}", bridge.id);
    tails.push(crate::graph::Tail {
        id: node_id.clone(),
        vertex: vmap[attach_vertex],
        number: tails.len() + 1,
    });

    let vertex_names: Vec<String> = vertices
        .iter()
        .map(|&v| graph.vertices[v].clone())
        .collect();
    let sub = StableGraph::new(vertex_names, edges, tails)?;
    let mut x = std::collections::BTreeMap::new();
    let mut y = std::collections::BTreeMap::new();
    for (k, e) in sub.edges.iter().enumerate() {
        let old_k = edge_map[k];
        for fwd in [true, false] {
            let h_old = OrientedEdge {
                edge: old_k,
                forward: fwd,
            };
            let key = sub.oriented_id(OrientedEdge { edge: k, forward: fwd });
            x.insert(key, scenario.params.x_of(graph, h_old)?);
        }
        y.insert(e.id.clone(), scenario.params.y_of(graph, old_k)?);
    }
    for t in &sub.tails {
        if t.id == node_id {
            x.insert(t.id.clone(), attach_x);
        } else {
            let old = graph.tails.iter().find(|ot| ot.id == t.id).unwrap();
            x.insert(t.id.clone(), scenario.params.x_of_tail(old)?);
        }
    }
    let params = SchottkyParams { x, y };
    let tree_sub: Vec<usize> = (0..sub.edges.len())
        .filter(|&k| tree.contains(&edge_map[k]))
        .collect();
    Ok((sub, params, tree_sub))
}

/// Modified tau of a reducible pinch: tau(t, (X1)_{c'}) Theta_{R2}(c'').
pub fn modified_tau_reducible(limit: &ReducibleLimit, t: &[C64]) -> Result<C64> {
    let theta2 = if limit.g2 > 0 {
        theta_raw(&limit.z2, &limit.c2, suggested_radius_for(&limit.z2, &limit.c2)?)
    } else {
        C64::new(1.0, 0.0)
    };
    Ok(limit.tau1.tau(t)? * theta2)
}

fn suggested_radius_for(z: &CMat, arg: &[C64]) -> Result<i64> {
    crate::theta::suggest_radius(z, arg, 1e-12)
}

/// One row of the degeneration convergence table.
#[derive(Clone, Copy, Debug)]
pub struct ConvergenceRow {
    pub y: f64,
    pub deviation: f64,
}

#[derive(Clone, Debug)]
pub struct DegenerationReport {
    pub class: ScenarioClass,
    pub rows: Vec<ConvergenceRow>,
    pub monotone: bool,
    pub final_deviation: f64,
}

/// Compares the suitably scaled family tau against the modified tau across
/// the y sequence, on a grid of real time vectors.
pub fn convergence_report(
    scenario: &DegenerationScenario,
    t_grid: &[Vec<f64>],
    policy: &TruncationPolicy,
) -> Result<DegenerationReport> {
    let class = scenario.classify()?;
    let marked = marked_point(&scenario.graph, &scenario.params)?;
    let m_times = 3usize.max(t_grid.iter().map(|t| t.len()).max().unwrap_or(3));

    // modified tau evaluations
    let modified: Vec<C64> = match class {
        ScenarioClass::Reducible { .. } => {
            let limit = limit_data_reducible(scenario, policy)?;
            t_grid
                .iter()
                .map(|ts| {
                    let t: Vec<C64> = ts.iter().map(|&v| C64::new(v, 0.0)).collect();
                    modified_tau_reducible(&limit, &t)
                })
                .collect::<Result<Vec<_>>>()?
        }
        ScenarioClass::IrreducibleGeneric => {
            let limit = limit_data_irreducible(scenario, policy)?;
            t_grid
                .iter()
                .map(|ts| {
                    let t: Vec<C64> = ts.iter().map(|&v| C64::new(v, 0.0)).collect();
                    modified_tau_generic(&limit, &t)
                })
                .collect::<Result<Vec<_>>>()?
        }
        ScenarioClass::IrreducibleHalfInteger => {
            let limit = limit_data_irreducible(scenario, policy)?;
            t_grid
                .iter()
                .map(|ts| {
                    let t: Vec<C64> = ts.iter().map(|&v| C64::new(v, 0.0)).collect();
                    modified_tau_halfint(&limit, &t)
                })
                .collect::<Result<Vec<_>>>()?
        }
    };

    let p_idx = match class {
        ScenarioClass::Reducible { .. } => usize::MAX,
        _ => scenario.pinched_generator()?,
    };
    let reducible_limit = match class {
        ScenarioClass::Reducible { .. } => Some(limit_data_reducible(scenario, policy)?),
        _ => None,
    };

    let mut rows = Vec::new();
    for &y in &scenario.y_sequence {
        let tree = scenario.tree()?;
        let params_y = scenario.params_at(y);
        let group = instantiate_group_with_tree(&scenario.graph, &params_y, &tree)?;
        let periods = period_matrix(&group, policy)?;
        let laurent = laurent_data(&group, marked, m_times, policy)?;
        let (chi, scale): (Characteristic, C64) = match class {
            ScenarioClass::Reducible { .. } => {
                // Theorem 7.3 holds c itself fixed along the family
                let limit = reducible_limit.as_ref().unwrap();
                let mut c_full = vec![C64::new(0.0, 0.0); group.rank()];
                let side2: Vec<usize> = (0..group.rank())
                    .filter(|i| !limit.side1_indices.contains(i))
                    .collect();
                for (a, &i) in limit.side1_indices.iter().enumerate() {
                    c_full[i] = limit.c1[a];
                }
                for (a, &i) in side2.iter().enumerate() {
                    c_full[i] = limit.c2[a];
                }
                (
                    Characteristic {
                        alpha: c_full.iter().map(|c| c / C64::new(0.0, TWO_PI)).collect(),
                        beta: vec![0.0; group.rank()],
                    },
                    C64::new(1.0, 0.0),
                )
            }
            ScenarioClass::IrreducibleGeneric => {
                let beta_g = scenario.chi.beta[p_idx];
                let beta_bar = nearest_integer_offset(beta_g)? as f64;
                let zgg = periods.z.at(p_idx, p_idx);
                let expo = C64::new(0.0, -PI) * (beta_bar + 2.0 * beta_g) * beta_bar * zgg;
                (scenario.chi.clone(), expo.exp())
            }
            ScenarioClass::IrreducibleHalfInteger => {
                let beta_g = scenario.chi.beta[p_idx];
                let zgg = periods.z.at(p_idx, p_idx);
                let expo = C64::new(0.0, PI) * (beta_g * beta_g - 0.25) * zgg;
                (scenario.chi.clone(), expo.exp())
            }
        };
        let tau_y = TauData::new(periods.z.clone(), chi, laurent)?;
        let mut deviation = 0.0f64;
        for (ts, m) in t_grid.iter().zip(modified.iter()) {
            let t: Vec<C64> = ts.iter().map(|&v| C64::new(v, 0.0)).collect();
            let v = scale * tau_y.tau(&t)?;
            deviation = deviation.max((v - m).norm() / m.norm().max(1e-300));
        }
        rows.push(ConvergenceRow { y, deviation });
    }
    let monotone = rows.windows(2).all(|w| w[1].deviation <= w[0].deviation);
    let final_deviation = rows.last().map(|r| r.deviation).unwrap_or(f64::NAN);
    Ok(DegenerationReport {
        class,
        rows,
        monotone,
        final_deviation,
    })
}

/// Deviations of the family differentials from their limits (Theorems
/// 5.1/5.2 made numerical).
#[derive(Clone, Debug)]
pub struct LimitCheckRow {
    pub y: f64,
    /// max deviation of surviving first-kind differentials
    pub first_kind: f64,
    /// deviation of the pinched differential from the third-kind limit
    /// (irreducible) or of the far-block pullback from zero (reducible)
    pub pinched: f64,
    /// max deviation of the second-kind differential
    pub second_kind: f64,
}

#[derive(Clone, Debug)]
pub struct LimitCheckReport {
    pub rows: Vec<LimitCheckRow>,
    pub monotone: bool,
}

/// Compares eval_density on the family against the limit-curve differentials
/// at the given sample points.
pub fn differential_limit_check(
    scenario: &DegenerationScenario,
    samples: &[C64],
    policy: &TruncationPolicy,
) -> Result<LimitCheckReport> {
    let class = scenario.classify()?;
    let marked = marked_point(&scenario.graph, &scenario.params)?;
    let tree = scenario.tree()?;
    let mut rows = Vec::new();
    match class {
        ScenarioClass::Reducible { .. } => {
            let limit = limit_data_reducible(scenario, policy)?;
            let pinch = scenario.pinch_index()?;
            let (side1, _) = bridge_split(&scenario.graph, pinch);
            let (graph1, params1, tree1) = subgraph(scenario, &side1, &tree)?;
            let group1 = instantiate_group_with_tree(&graph1, &params1, &tree1)?;
            // chart from the far component into the shrinking disk: the
            // inverse of the tree-path map from the base to the far endpoint
            let bridge = &scenario.graph.edges[pinch];
            for &y in &scenario.y_sequence {
                let params_y = scenario.params_at(y);
                let group_y =
                    instantiate_group_with_tree(&scenario.graph, &params_y, &tree)?;
                let mut first_dev = 0.0f64;
                for (a, &i) in limit.side1_indices.iter().enumerate() {
                    let fam = Differential::new(
                        &group_y,
                        DifferentialKind::First { index: i + 1 },
                        policy,
                    )?;
                    let lim = Differential::new(
                        &group1,
                        DifferentialKind::First { index: a + 1 },
                        policy,
                    )?;
                    for &z in samples {
                        let dv = (fam.eval_raw(z).value - lim.eval_raw(z).value).norm();
                        first_dev = first_dev.max(dv);
                    }
                }
                // pullback of a marked-component differential through the far chart
                let far_vertex = if bridge_split(&scenario.graph, pinch).0.contains(&bridge.to) {
                    bridge.from
                } else {
                    bridge.to
                };
                let chart_path =
                    crate::graph::tree_path_between(&scenario.graph, &tree, 0, far_vertex);
                let chart = path_map(&scenario.graph, &params_y, &chart_path)?.inverse();
                let mut far_dev = 0.0f64;
                if let Some(&i1) = limit.side1_indices.first() {
                    let fam = Differential::new(
                        &group_y,
                        DifferentialKind::First { index: i1 + 1 },
                        policy,
                    )?;
                    for &w in samples {
                        let z = chart.apply_c(w);
                        let v = fam.eval_raw(z).value * chart.derivative_at(w);
                        far_dev = far_dev.max(v.norm());
                    }
                }
                let mut second_dev = 0.0f64;
                let fam2 = Differential::new(
                    &group_y,
                    DifferentialKind::Second { marked, order: 2 },
                    policy,
                )?;
                let lim2 = Differential::new(
                    &group1,
                    DifferentialKind::Second { marked, order: 2 },
                    policy,
                )?;
                for &z in samples {
                    second_dev = second_dev
                        .max((fam2.eval_raw(z).value - lim2.eval_raw(z).value).norm());
                }
                rows.push(LimitCheckRow {
                    y,
                    first_kind: first_dev,
                    pinched: far_dev,
                    second_kind: second_dev,
                });
            }
        }
        _ => {
            let limit = limit_data_irreducible(scenario, policy)?;
            let p_idx = scenario.pinched_generator()?;
            let limit_group = {
                let gens_paths = pi1_generators(&scenario.graph, 0, &tree);
                let mut gens = Vec::new();
                for (k, p) in gens_paths.iter().enumerate() {
                    if k == p_idx {
                        continue;
                    }
                    gens.push(path_map(&scenario.graph, &scenario.params, p)?);
                }
                SchottkyGroup::from_generators(gens)?
            };
            let third = Differential::new(
                &limit_group,
                DifferentialKind::Third {
                    p1: limit.p1,
                    p2: limit.p2,
                },
                policy,
            )?;
            for &y in &scenario.y_sequence {
                let params_y = scenario.params_at(y);
                let group_y =
                    instantiate_group_with_tree(&scenario.graph, &params_y, &tree)?;
                let mut first_dev = 0.0f64;
                let mut rest = 0usize;
                for i in 0..group_y.rank() {
                    if i == p_idx {
                        continue;
                    }
                    rest += 1;
                    let fam = Differential::new(
                        &group_y,
                        DifferentialKind::First { index: i + 1 },
                        policy,
                    )?;
                    let lim = Differential::new(
                        &limit_group,
                        DifferentialKind::First { index: rest },
                        policy,
                    )?;
                    for &z in samples {
                        first_dev = first_dev
                            .max((fam.eval_raw(z).value - lim.eval_raw(z).value).norm());
                    }
                }
                let fam_g = Differential::new(
                    &group_y,
                    DifferentialKind::First { index: p_idx + 1 },
                    policy,
                )?;
                let mut pinched_dev = 0.0f64;
                for &z in samples {
                    pinched_dev = pinched_dev
                        .max((fam_g.eval_raw(z).value - third.eval_raw(z).value).norm());
                }
                let mut second_dev = 0.0f64;
                let fam2 = Differential::new(
                    &group_y,
                    DifferentialKind::Second { marked, order: 2 },
                    policy,
                )?;
                let lim2 = Differential::new(
                    &limit_group,
                    DifferentialKind::Second { marked, order: 2 },
                    policy,
                )?;
                for &z in samples {
                    second_dev = second_dev
                        .max((fam2.eval_raw(z).value - lim2.eval_raw(z).value).norm());
                }
                rows.push(LimitCheckRow {
                    y,
                    first_kind: first_dev,
                    pinched: pinched_dev,
                    second_kind: second_dev,
                });
            }
        }
    }
    let monotone = rows.windows(2).all(|w| {
        w[1].first_kind <= w[0].first_kind + 1e-12
            && w[1].pinched <= w[0].pinched + 1e-12
            && w[1].second_kind <= w[0].second_kind + 1e-12
    });
    Ok(LimitCheckReport { rows, monotone })
}

/// Analytic soliton alpha' for the full rational limit with n = 0:
/// alpha'_i = 2 pi i alpha_i - (1/2) sum_{j != i} ln CR_ij.
pub fn soliton_alpha_from_characteristic(
    alpha: &[C64],
    soliton: &crate::soliton::SolitonData,
) -> Result<Vec<C64>> {
    let g = alpha.len();
    let mut out = Vec::with_capacity(g);
    for i in 0..g {
        let mut a = C64::new(0.0, TWO_PI) * alpha[i];
        for j in 0..g {
            if j == i {
                continue;
            }
            let cr = if i < j {
                soliton.cross_ratio(i, j)?
            } else {
                soliton.cross_ratio(j, i)?
            };
            a -= 0.5 * cr.ln();
        }
        out.push(a);
    }
    Ok(out)
}

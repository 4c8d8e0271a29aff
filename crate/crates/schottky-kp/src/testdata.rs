//! Shared fixtures for unit tests.

use std::collections::BTreeMap;

use crate::graph::{Edge, SchottkyParams, StableGraph, Tail};
use crate::moebius::SpherePoint;
use crate::C64;

/// One vertex, g loops, one tail: points given as (x_minus, x_plus) pairs.
pub(crate) fn delta0(points: &[(f64, f64)], tail_x: f64, yv: f64) -> (StableGraph, SchottkyParams) {
    let g = points.len();
    let edges: Vec<Edge> = (1..=g)
        .map(|i| Edge {
            id: format!("e{i}"),
            from: 0,
            to: 0,
        })
        .collect();
    let tails = vec![Tail {
        id: "t1".into(),
        vertex: 0,
        number: 1,
    }];
    let graph = StableGraph::new(vec!["v0".into()], edges, tails).unwrap();
    let mut x = BTreeMap::new();
    let mut y = BTreeMap::new();
    for (i, (xm, xp)) in points.iter().enumerate() {
        x.insert(format!("e{}", i + 1), SpherePoint::from(*xp));
        x.insert(format!("-e{}", i + 1), SpherePoint::from(*xm));
        y.insert(format!("e{}", i + 1), C64::new(yv, 0.0));
    }
    x.insert("t1".into(), SpherePoint::from(tail_x));
    (graph, SchottkyParams { x, y })
}

/// Two vertices, a loop at each, a connecting edge, tail on the base vertex.
pub(crate) fn dumbbell(yv: f64) -> (StableGraph, SchottkyParams) {
    let graph = StableGraph::new(
        vec!["v0".into(), "v1".into()],
        vec![
            Edge {
                id: "a".into(),
                from: 0,
                to: 0,
            },
            Edge {
                id: "b".into(),
                from: 1,
                to: 1,
            },
            Edge {
                id: "c".into(),
                from: 0,
                to: 1,
            },
        ],
        vec![Tail {
            id: "t1".into(),
            vertex: 0,
            number: 1,
        }],
    )
    .unwrap();
    let mut x = BTreeMap::new();
    x.insert("a".into(), SpherePoint::from(1.0));
    x.insert("-a".into(), SpherePoint::from(-1.0));
    x.insert("b".into(), SpherePoint::from(11.0));
    x.insert("-b".into(), SpherePoint::from(9.0));
    x.insert("c".into(), SpherePoint::from(10.0));
    x.insert("-c".into(), SpherePoint::from(3.0));
    x.insert("t1".into(), SpherePoint::from(-3.0));
    let mut y = BTreeMap::new();
    for id in ["a", "b", "c"] {
        y.insert(id.into(), C64::new(yv, 0.0));
    }
    (graph, SchottkyParams { x, y })
}

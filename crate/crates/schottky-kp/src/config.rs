//! JSON wire formats: curve configuration, degeneration scenarios, soliton
//! specs, and the CLI grid specification string. Emission is canonical
//! (sorted keys, shortest round-trip floats) so identical inputs produce
//! byte-identical outputs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::degeneration::DegenerationScenario;
use crate::error::{Error, Result};
use crate::graph::{Edge, SchottkyParams, StableGraph, Tail};
use crate::moebius::SpherePoint;
use crate::soliton::SolitonData;
use crate::tau::Characteristic;
use crate::C64;

pub const CONVENTION: &str = "phi-antihom-v1";

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct EdgeJson {
    pub id: String,
    pub from: String,
    pub to: String,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TailJson {
    pub id: String,
    pub vertex: String,
    pub number: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GraphJson {
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeJson>,
    #[serde(default)]
    pub tails: Vec<TailJson>,
}

/// x entry: finite [re, im] or the string "inf".
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum XValue {
    Finite([f64; 2]),
    Infinity(String),
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ParamsJson {
    pub x: BTreeMap<String, XValue>,
    pub y: BTreeMap<String, [f64; 2]>,
}

/// The curve configuration file.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct CurveConfig {
    pub graph: GraphJson,
    pub params: ParamsJson,
    pub convention: String,
}

impl CurveConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: CurveConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if cfg.convention != CONVENTION {
            return Err(Error::Config(format!(
                "unsupported convention {:?} (expected {CONVENTION:?})",
                cfg.convention
            )));
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Converts to validated domain objects.
    pub fn to_domain(&self) -> Result<(StableGraph, SchottkyParams)> {
        let vindex = |name: &str| -> Result<usize> {
            self.graph
                .vertices
                .iter()
                .position(|v| v == name)
                .ok_or_else(|| Error::Config(format!("unknown vertex {name}")))
        };
        let edges = self
            .graph
            .edges
            .iter()
            .map(|e| {
                Ok(Edge {
                    id: e.id.clone(),
                    from: vindex(&e.from)?,
                    to: vindex(&e.to)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let tails = self
            .graph
            .tails
            .iter()
            .map(|t| {
                Ok(Tail {
                    id: t.id.clone(),
                    vertex: vindex(&t.vertex)?,
                    number: t.number,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let graph = StableGraph::new(self.graph.vertices.clone(), edges, tails)?;
        let mut x = BTreeMap::new();
        for (k, v) in &self.params.x {
            let p = match v {
                XValue::Finite([re, im]) => {
                    if !re.is_finite() || !im.is_finite() {
                        return Err(Error::Config(format!("non-finite x for {k}")));
                    }
                    SpherePoint::finite(*re, *im)
                }
                XValue::Infinity(s) if s == "inf" => SpherePoint::Infinity,
                XValue::Infinity(s) => {
                    return Err(Error::Config(format!("bad x value {s:?} for {k}")))
                }
            };
            x.insert(k.clone(), p);
        }
        let mut y = BTreeMap::new();
        for (k, [re, im]) in &self.params.y {
            if !re.is_finite() || !im.is_finite() {
                return Err(Error::Config(format!("non-finite y for {k}")));
            }
            y.insert(k.clone(), C64::new(*re, *im));
        }
        let params = SchottkyParams { x, y };
        params.validate_for(&graph)?;
        Ok((graph, params))
    }

    /// Canonical config from domain objects.
    pub fn from_domain(graph: &StableGraph, params: &SchottkyParams) -> Self {
        let graph_json = GraphJson {
            vertices: graph.vertices.clone(),
            edges: graph
                .edges
                .iter()
                .map(|e| EdgeJson {
                    id: e.id.clone(),
                    from: graph.vertices[e.from].clone(),
                    to: graph.vertices[e.to].clone(),
                })
                .collect(),
            tails: graph
                .tails
                .iter()
                .map(|t| TailJson {
                    id: t.id.clone(),
                    vertex: graph.vertices[t.vertex].clone(),
                    number: t.number,
                })
                .collect(),
        };
        let x = params
            .x
            .iter()
            .map(|(k, v)| {
                let xv = match v {
                    SpherePoint::Finite(z) => XValue::Finite([z.re, z.im]),
                    SpherePoint::Infinity => XValue::Infinity("inf".into()),
                };
                (k.clone(), xv)
            })
            .collect();
        let y = params
            .y
            .iter()
            .map(|(k, v)| (k.clone(), [v.re, v.im]))
            .collect();
        CurveConfig {
            graph: graph_json,
            params: ParamsJson { x, y },
            convention: CONVENTION.into(),
        }
    }
}

/// Degeneration scenario file.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ScenarioConfig {
    pub curve: CurveConfig,
    pub pinch: String,
    pub y_sequence: Vec<f64>,
    pub beta: Vec<f64>,
    pub alpha: Vec<[f64; 2]>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn to_domain(&self) -> Result<DegenerationScenario> {
        let (graph, params) = self.curve.to_domain()?;
        let g = graph.genus();
        if self.beta.len() != g || self.alpha.len() != g {
            return Err(Error::Config(format!(
                "characteristic length must equal the genus {g}"
            )));
        }
        if self.y_sequence.is_empty()
            || self
                .y_sequence
                .iter()
                .any(|y| !(y.is_finite() && *y > 0.0 && *y < 1.0))
        {
            return Err(Error::Config("y_sequence must be values in (0, 1)".into()));
        }
        if self.beta.iter().any(|b| !b.is_finite())
            || self.alpha.iter().any(|a| !a[0].is_finite() || !a[1].is_finite())
        {
            return Err(Error::Config("characteristic must be finite".into()));
        }
        Ok(DegenerationScenario {
            graph,
            params,
            pinch_edge: self.pinch.clone(),
            y_sequence: self.y_sequence.clone(),
            chi: Characteristic {
                alpha: self.alpha.iter().map(|a| C64::new(a[0], a[1])).collect(),
                beta: self.beta.clone(),
            },
        })
    }
}

/// Soliton spec file.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SolitonConfig {
    pub x_plus: Vec<[f64; 2]>,
    pub x_minus: Vec<[f64; 2]>,
    pub marked: [f64; 2],
    #[serde(default)]
    pub offsets: Vec<i64>,
    pub alpha: Vec<[f64; 2]>,
    #[serde(default = "default_times")]
    pub times: usize,
}

fn default_times() -> usize {
    3
}

impl SolitonConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_domain(&self) -> Result<SolitonData> {
        let pair = |v: &[f64; 2]| -> Result<C64> {
            if !v[0].is_finite() || !v[1].is_finite() {
                return Err(Error::Config("non-finite soliton point".into()));
            }
            Ok(C64::new(v[0], v[1]))
        };
        let g = self.x_plus.len();
        let offsets = if self.offsets.is_empty() {
            vec![0i64; g]
        } else {
            self.offsets.clone()
        };
        if self.times == 0 || self.times > 16 {
            return Err(Error::Config("times must be in 1..=16".into()));
        }
        let data = SolitonData {
            x_plus: self.x_plus.iter().map(pair).collect::<Result<Vec<_>>>()?,
            x_minus: self.x_minus.iter().map(pair).collect::<Result<Vec<_>>>()?,
            marked: pair(&self.marked)?,
            offsets,
            alpha: self.alpha.iter().map(pair).collect::<Result<Vec<_>>>()?,
            times: self.times,
        };
        data.validate()?;
        Ok(data)
    }
}

/// Grid specification "x0:x1:nx,t20:t21:n2,t30:t31:n3".
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub x: (f64, f64, usize),
    pub t2: (f64, f64, usize),
    pub t3: (f64, f64, usize),
}

const MAX_GRID_POINTS: usize = 1_000_000;

pub fn parse_grid_spec(text: &str) -> Result<GridSpec> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(Error::Config(
            "grid spec needs three comma-separated ranges".into(),
        ));
    }
    let mut ranges = Vec::with_capacity(3);
    for part in parts {
        let fields: Vec<&str> = part.split(':').collect();
        if fields.len() != 3 {
            return Err(Error::Config(format!(
                "range {part:?} must be start:stop:count"
            )));
        }
        let a: f64 = fields[0]
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad number {:?}", fields[0])))?;
        let b: f64 = fields[1]
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad number {:?}", fields[1])))?;
        let n: usize = fields[2]
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad count {:?}", fields[2])))?;
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::Config("grid bounds must be finite".into()));
        }
        ranges.push((a, b, n));
    }
    let spec = GridSpec {
        x: ranges[0],
        t2: ranges[1],
        t3: ranges[2],
    };
    let total = spec.x.2.saturating_mul(spec.t2.2).saturating_mul(spec.t3.2);
    if total > MAX_GRID_POINTS {
        return Err(Error::Config(format!(
            "grid has {total} points (cap {MAX_GRID_POINTS})"
        )));
    }
    Ok(spec)
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

impl GridSpec {
    /// All grid points, x-major then t2 then t3.
    pub fn points(&self) -> Vec<(f64, f64, f64)> {
        let xs = linspace(self.x.0, self.x.1, self.x.2);
        let t2s = linspace(self.t2.0, self.t2.1, self.t2.2);
        let t3s = linspace(self.t3.0, self.t3.1, self.t3.2);
        let mut out = Vec::with_capacity(xs.len() * t2s.len() * t3s.len());
        for &x in &xs {
            for &t2 in &t2s {
                for &t3 in &t3s {
                    out.push((x, t2, t3));
                }
            }
        }
        out
    }
}

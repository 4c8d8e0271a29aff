//! Shell-wise evaluation engine for group series.
//!
//! Words are generated length by length with the running matrix carried
//! along, so each word costs one matrix multiplication. Summation order is
//! the fixed enumeration order, making truncated sums reproducible.

use crate::error::{Error, Result};
use crate::group::SchottkyGroup;
use crate::moebius::MoebiusMap;
use crate::C64;

#[derive(Clone, Copy, Debug)]
pub struct TruncationPolicy {
    /// hard cap on word length
    pub max_word_len: usize,
    /// target tail bound for truncated series
    pub tail_tol: f64,
    /// hard cap on the number of enumerated words
    pub max_terms: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            max_word_len: 12,
            tail_tol: 1e-9,
            max_terms: 2_000_000,
        }
    }
}

impl TruncationPolicy {
    pub fn with_max_len(mut self, l: usize) -> Self {
        self.max_word_len = l;
        self
    }

    pub fn with_tail_tol(mut self, t: f64) -> Self {
        self.tail_tol = t;
        self
    }
}

#[derive(Clone)]
pub(crate) struct Entry {
    pub map: MoebiusMap,
    /// exact determinant of `map`, threaded through composition: the naive
    /// ad - bc of a deep normalized product drowns in roundoff long before
    /// the true value (a product of multipliers) does
    pub det: C64,
    /// last letter of the word; 0 for the identity
    pub last: i32,
}

pub(crate) enum WalkEnd {
    /// visitor asked to stop after this completed length
    Stopped,
    /// no words remain (root pruning emptied the tree)
    Complete,
    /// enumeration exhausted max_word_len or max_terms at this length
    Exhausted(usize),
}

/// Generates shells of reduced words with carried matrices. `root_exclude`
/// drops +-i as the first letter (double-coset pruning). The visitor gets
/// each shell in enumeration order and returns `true` to continue.
pub(crate) fn walk_shells(
    group: &SchottkyGroup,
    root_exclude: Option<usize>,
    max_len: usize,
    max_terms: usize,
    mut visit: impl FnMut(usize, &[Entry]) -> bool,
) -> Result<WalkEnd> {
    let rank = group.rank();
    let letters: Vec<i32> = (1..=rank as i32).flat_map(|i| [i, -i]).collect();
    let letter_dets: Vec<C64> = letters
        .iter()
        .map(|&l| Ok(group.letter_map(l)?.det()))
        .collect::<Result<Vec<_>>>()?;
    let mut shell = vec![Entry {
        map: MoebiusMap::identity(),
        det: C64::new(1.0, 0.0),
        last: 0,
    }];
    let mut total = 1usize;
    if !visit(0, &shell) {
        return Ok(WalkEnd::Stopped);
    }
    for len in 1..=max_len {
        let per_entry = if len == 1 {
            2 * rank
        } else {
            2 * rank - 1
        };
        if total.saturating_add(shell.len() * per_entry) > max_terms {
            return Ok(WalkEnd::Exhausted(len - 1));
        }
        let mut next = Vec::with_capacity(shell.len() * per_entry);
        for entry in &shell {
            for (k, &l) in letters.iter().enumerate() {
                if entry.last == -l {
                    continue;
                }
                if len == 1 {
                    if let Some(excl) = root_exclude {
                        if l.unsigned_abs() as usize == excl {
                            continue;
                        }
                    }
                }
                let raw = entry.map.compose_raw(group.letter_map(l)?);
                let (m, scale) = raw.normalized_with_scale();
                next.push(Entry {
                    map: m,
                    det: entry.det * letter_dets[k] / (scale * scale),
                    last: l,
                });
            }
        }
        total += next.len();
        shell = next;
        if shell.is_empty() {
            return Ok(WalkEnd::Complete);
        }
        if !visit(len, &shell) {
            return Ok(WalkEnd::Stopped);
        }
    }
    Ok(WalkEnd::Exhausted(max_len))
}

/// Pole pair of a first-kind term: images of the two fixed points plus their
/// separation computed in cancellation-free product form.
#[derive(Clone, Copy)]
pub(crate) struct PolePair {
    pub plus: C64,
    pub minus: C64,
    pub sep: C64,
}

/// Table for the first-kind differential omega_i: one pole pair per
/// representative of Gamma / <gamma_i>.
pub(crate) struct PoleTable {
    pub pairs: Vec<PolePair>,
    pub shell_ends: Vec<usize>,
    pub ratio: f64,
}

/// Table for second/third-kind differentials: all reduced words.
pub(crate) struct MapTable {
    pub maps: Vec<MoebiusMap>,
    /// exact determinants matching `maps`
    pub dets: Vec<C64>,
    pub shell_ends: Vec<usize>,
    pub ratio: f64,
}

/// Geometric shell-decay ratio used in tail estimates.
fn decay_ratio(group: &SchottkyGroup) -> f64 {
    if group.rank() == 0 {
        return 0.0;
    }
    let r = (2 * group.rank() - 1) as f64 * group.max_multiplier_norm();
    r.min(0.9)
}

pub(crate) fn build_pole_table(
    group: &SchottkyGroup,
    i: usize,
    policy: &TruncationPolicy,
) -> Result<PoleTable> {
    let alpha_p = group
        .fixed_point(i as i32)
        .value()
        .ok_or(Error::UnsupportedInfinity)?;
    let alpha_m = group
        .fixed_point(-(i as i32))
        .value()
        .ok_or(Error::UnsupportedInfinity)?;
    let mut pairs = Vec::new();
    let mut shell_ends = Vec::new();
    let stop_metric = policy.tail_tol * 0.05;
    walk_shells(
        group,
        None,
        policy.max_word_len,
        policy.max_terms,
        |_len, shell| {
            let mut metric = 0.0f64;
            for e in shell {
                if e.last.unsigned_abs() as usize == i {
                    continue; // not a coset representative
                }
                let m = &e.map;
                let den_p = m.c * alpha_p + m.d;
                let den_m = m.c * alpha_m + m.d;
                let plus = (m.a * alpha_p + m.b) / den_p;
                let minus = (m.a * alpha_m + m.b) / den_m;
                let sep = e.det * (alpha_p - alpha_m) / (den_p * den_m);
                pairs.push(PolePair { plus, minus, sep });
                metric += sep.norm();
            }
            shell_ends.push(pairs.len());
            metric > stop_metric || shell_ends.len() <= 2
        },
    )?;
    Ok(PoleTable {
        pairs,
        shell_ends,
        ratio: decay_ratio(group),
    })
}

pub(crate) fn build_map_table(group: &SchottkyGroup, policy: &TruncationPolicy) -> Result<MapTable> {
    let mut maps = Vec::new();
    let mut dets = Vec::new();
    let mut shell_ends = Vec::new();
    let stop_metric = policy.tail_tol * 0.05;
    let scale = group.scale();
    walk_shells(
        group,
        None,
        policy.max_word_len,
        policy.max_terms,
        |_len, shell| {
            let mut metric = 0.0f64;
            for e in shell {
                // |det| of the normalized matrix ~ the word multiplier scale
                metric += e.det.norm();
                maps.push(e.map);
                dets.push(e.det);
            }
            shell_ends.push(maps.len());
            metric * scale > stop_metric || shell_ends.len() <= 2
        },
    )?;
    Ok(MapTable {
        maps,
        dets,
        shell_ends,
        ratio: decay_ratio(group),
    })
}

/// Output of a series evaluation at one point.
#[derive(Clone, Copy, Debug)]
pub(crate) struct EvalOut {
    pub value: C64,
    /// estimated truncation tail
    pub tail: f64,
    /// distance to the nearest pole encountered
    pub min_pole_dist: f64,
}

fn tail_estimate(last: f64, prev: f64, ratio: f64) -> f64 {
    let r = ratio.clamp(0.0, 0.9);
    (last * r).max(prev * r * r) / (1.0 - r)
}

impl PoleTable {
    /// Density of the first-kind differential at z, with tail estimate.
    pub fn eval(&self, z: C64) -> EvalOut {
        let mut value = C64::new(0.0, 0.0);
        let mut min_dist = f64::INFINITY;
        let mut shell_abs = vec![0.0f64; self.shell_ends.len()];
        let mut start = 0usize;
        for (s, &end) in self.shell_ends.iter().enumerate() {
            let mut abs_sum = 0.0f64;
            for p in &self.pairs[start..end] {
                let dp = z - p.plus;
                let dm = z - p.minus;
                min_dist = min_dist.min(dp.norm()).min(dm.norm());
                let term = p.sep / (dp * dm);
                value += term;
                abs_sum += term.norm();
            }
            shell_abs[s] = abs_sum;
            start = end;
        }
        let n = shell_abs.len();
        let (last, prev) = match n {
            0 => (f64::INFINITY, f64::INFINITY),
            1 => (shell_abs[0], shell_abs[0]),
            _ => (shell_abs[n - 1], shell_abs[n - 2]),
        };
        EvalOut {
            value,
            tail: tail_estimate(last, prev, self.ratio),
            min_pole_dist: min_dist,
        }
    }
}

impl MapTable {
    /// Density of the second-kind differential sum_gamma gamma'/(gamma z - x)^k,
    /// written in the pole-free rational form
    /// det (cz+d)^{k-2} / ((a - xc) z + (b - xd))^k.
    pub fn eval_second(&self, z: C64, x_t: C64, k: u32, skip_identity: bool) -> EvalOut {
        let mut value = C64::new(0.0, 0.0);
        let mut min_dist = f64::INFINITY;
        let mut shell_abs = vec![0.0f64; self.shell_ends.len()];
        let mut start = 0usize;
        for (s, &end) in self.shell_ends.iter().enumerate() {
            let mut abs_sum = 0.0f64;
            for (idx, m) in self.maps[start..end].iter().enumerate() {
                if skip_identity && s == 0 && idx == 0 {
                    continue;
                }
                let lin = (m.a - x_t * m.c) * z + (m.b - x_t * m.d);
                // distance proxy: |gamma z - x_t| = |lin| / |cz+d|
                let czd = m.c * z + m.d;
                min_dist = min_dist.min(lin.norm() / czd.norm().max(1e-300));
                let mut den = lin;
                for _ in 1..k {
                    den *= lin;
                }
                let mut num = self.dets[start + idx];
                if k >= 2 {
                    for _ in 0..(k - 2) {
                        num *= czd;
                    }
                } else {
                    num /= czd;
                }
                let term = num / den;
                value += term;
                abs_sum += term.norm();
            }
            shell_abs[s] = abs_sum;
            start = end;
        }
        let n = shell_abs.len();
        let (last, prev) = match n {
            0 => (f64::INFINITY, f64::INFINITY),
            1 => (shell_abs[0], shell_abs[0]),
            _ => (shell_abs[n - 1], shell_abs[n - 2]),
        };
        EvalOut {
            value,
            tail: tail_estimate(last, prev, self.ratio),
            min_pole_dist: min_dist,
        }
    }

    /// Density of the third-kind differential with simple poles p1, p2:
    /// sum_gamma det (p1 - p2) / (L1 L2), L_i = (a - p_i c) z + (b - p_i d).
    pub fn eval_third(&self, z: C64, p1: C64, p2: C64) -> EvalOut {
        let mut value = C64::new(0.0, 0.0);
        let mut min_dist = f64::INFINITY;
        let mut shell_abs = vec![0.0f64; self.shell_ends.len()];
        let mut start = 0usize;
        for (s, &end) in self.shell_ends.iter().enumerate() {
            let mut abs_sum = 0.0f64;
            for (idx, m) in self.maps[start..end].iter().enumerate() {
                let l1 = (m.a - p1 * m.c) * z + (m.b - p1 * m.d);
                let l2 = (m.a - p2 * m.c) * z + (m.b - p2 * m.d);
                let czd_norm = (m.c * z + m.d).norm().max(1e-300);
                min_dist = min_dist
                    .min(l1.norm() / czd_norm)
                    .min(l2.norm() / czd_norm);
                let term = self.dets[start + idx] * (p1 - p2) / (l1 * l2);
                value += term;
                abs_sum += term.norm();
            }
            shell_abs[s] = abs_sum;
            start = end;
        }
        let n = shell_abs.len();
        let (last, prev) = match n {
            0 => (f64::INFINITY, f64::INFINITY),
            1 => (shell_abs[0], shell_abs[0]),
            _ => (shell_abs[n - 1], shell_abs[n - 2]),
        };
        EvalOut {
            value,
            tail: tail_estimate(last, prev, self.ratio),
            min_pole_dist: min_dist,
        }
    }

    /// All pole locations gamma^{-1}(x) of the rational terms, up to a length
    /// cap (used for path clearance checks).
    pub fn pole_images(&self, x: C64, max_shell: usize) -> Vec<C64> {
        let mut out = Vec::new();
        let end = self
            .shell_ends
            .get(max_shell.min(self.shell_ends.len() - 1))
            .copied()
            .unwrap_or(0);
        for m in &self.maps[..end] {
            // gamma^{-1}(x) = (d x - b) / (-c x + a)
            let den = m.a - m.c * x;
            if den.norm() > 1e-14 {
                out.push((m.d * x - m.b) / den);
            }
        }
        out
    }
}

//! Abelian differentials of the three kinds as truncated group series, their
//! contour integrals (a-periods, residues, b-period line integrals) and the
//! Laurent data (r, q matrices) at the marked point.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::group::SchottkyGroup;
use crate::linalg::CMat;
use crate::quad;
use crate::series::{build_map_table, build_pole_table, EvalOut, MapTable, PoleTable};
pub use crate::series::TruncationPolicy;
use crate::C64;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Which differential to evaluate. Second kind is normalized so the
/// singular part at the marked point is du/u^k; third kind has simple poles
/// at p1 (residue +1) and p2 (residue -1). A marked point at infinity is not
/// supported.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DifferentialKind {
    /// omega_i, 1 <= i <= g
    First { index: usize },
    /// omega_{t,k}, k > 1
    Second { marked: C64, order: u32 },
    /// omega_{p1,p2}
    Third { p1: C64, p2: C64 },
}

impl DifferentialKind {
    pub fn validate(&self, group: &SchottkyGroup) -> Result<()> {
        match self {
            DifferentialKind::First { index } => {
                if *index == 0 || *index > group.rank() {
                    return Err(Error::IndexOutOfRange {
                        index: *index as i32,
                        rank: group.rank(),
                    });
                }
            }
            DifferentialKind::Second { order, .. } => {
                if *order < 2 {
                    return Err(Error::Config("second-kind order must be > 1".into()));
                }
            }
            DifferentialKind::Third { p1, p2 } => {
                if (p1 - p2).norm() < 1e-14 {
                    return Err(Error::CoincidentFixedPoints);
                }
            }
        }
        Ok(())
    }
}

enum Table {
    Poles(PoleTable),
    Maps(MapTable),
}

/// A differential with its precomputed word table; evaluation at a point is
/// a single pass over the table in enumeration order.
pub struct Differential<'g> {
    pub group: &'g SchottkyGroup,
    pub kind: DifferentialKind,
    table: Table,
    tail_tol: f64,
}

const EPS_POLE: f64 = 1e-8;

impl<'g> Differential<'g> {
    pub fn new(
        group: &'g SchottkyGroup,
        kind: DifferentialKind,
        policy: &TruncationPolicy,
    ) -> Result<Self> {
        kind.validate(group)?;
        let table = match kind {
            DifferentialKind::First { index } => {
                Table::Poles(build_pole_table(group, index, policy)?)
            }
            DifferentialKind::Second { .. } | DifferentialKind::Third { .. } => {
                Table::Maps(build_map_table(group, policy)?)
            }
        };
        Ok(Differential {
            group,
            kind,
            table,
            tail_tol: policy.tail_tol,
        })
    }

    pub(crate) fn eval_raw(&self, z: C64) -> EvalOut {
        match (&self.table, &self.kind) {
            (Table::Poles(t), DifferentialKind::First { .. }) => t.eval(z),
            (Table::Maps(t), DifferentialKind::Second { marked, order }) => {
                t.eval_second(z, *marked, *order, false)
            }
            (Table::Maps(t), DifferentialKind::Third { p1, p2 }) => t.eval_third(z, *p1, *p2),
            (Table::Poles(_), _) | (Table::Maps(_), DifferentialKind::First { .. }) => {
                unreachable!("table kind matches differential kind by construction")
            }
        }
    }

    /// Density f(z) with pole-proximity and truncation-convergence checks.
    pub fn density(&self, z: C64) -> Result<C64> {
        let out = self.eval_raw(z);
        if out.min_pole_dist < EPS_POLE {
            return Err(Error::PoleProximity {
                dist: out.min_pole_dist,
            });
        }
        if !(out.tail <= self.tail_tol * (1.0 + out.value.norm())) {
            return Err(Error::TruncationNotConverged {
                max_len: self.shell_count().saturating_sub(1),
                tail: out.tail,
            });
        }
        Ok(out.value)
    }

    fn shell_count(&self) -> usize {
        match &self.table {
            Table::Poles(t) => t.shell_ends.len(),
            Table::Maps(t) => t.shell_ends.len(),
        }
    }

    /// Pole images used for path clearance: table poles for the first kind,
    /// preimages of the marked points for the others, plus all fixed points.
    pub(crate) fn clearance_poles(&self, max_shell: usize) -> Vec<C64> {
        let mut out = match (&self.table, &self.kind) {
            (Table::Poles(t), _) => {
                let end = t
                    .shell_ends
                    .get(max_shell.min(t.shell_ends.len() - 1))
                    .copied()
                    .unwrap_or(0);
                t.pairs[..end]
                    .iter()
                    .flat_map(|p| [p.plus, p.minus])
                    .collect()
            }
            (Table::Maps(t), DifferentialKind::Second { marked, .. }) => {
                t.pole_images(*marked, max_shell)
            }
            (Table::Maps(t), DifferentialKind::Third { p1, p2 }) => {
                let mut v = t.pole_images(*p1, max_shell);
                v.extend(t.pole_images(*p2, max_shell));
                v
            }
            (Table::Maps(_), DifferentialKind::First { .. }) => {
                unreachable!("table kind matches differential kind by construction")
            }
        };
        if let Ok(fp) = self.group.finite_fixed_points() {
            out.extend(fp);
        }
        out
    }
}

/// One-shot density evaluation (builds the table, evaluates, discards).
pub fn eval_density(
    group: &SchottkyGroup,
    kind: DifferentialKind,
    z: C64,
    policy: &TruncationPolicy,
) -> Result<C64> {
    Differential::new(group, kind, policy)?.density(z)
}

/// Radius of the small a-cycle circle around alpha_i: a quarter of the
/// distance to the nearest other fixed point.
pub fn a_cycle_radius(group: &SchottkyGroup, i: usize) -> Result<f64> {
    let center = group
        .fixed_point(i as i32)
        .value()
        .ok_or(Error::UnsupportedInfinity)?;
    let mut min_dist = f64::INFINITY;
    for k in 1..=group.rank() {
        for signed in [k as i32, -(k as i32)] {
            if signed == i as i32 {
                continue;
            }
            let p = group
                .fixed_point(signed)
                .value()
                .ok_or(Error::UnsupportedInfinity)?;
            min_dist = min_dist.min((p - center).norm());
        }
    }
    if !min_dist.is_finite() {
        return Err(Error::Config("rank-0 group has no a-cycles".into()));
    }
    Ok(0.25 * min_dist)
}

/// Contour integral of the differential over the counterclockwise circle
/// around alpha_i. Contract: 2 pi i delta_{ij} for the first kind, 0 for the
/// second and third kinds.
pub fn a_period(
    group: &SchottkyGroup,
    kind: DifferentialKind,
    i: usize,
    policy: &TruncationPolicy,
) -> Result<C64> {
    let diff = Differential::new(group, kind, policy)?;
    let center = group
        .fixed_point(i as i32)
        .value()
        .ok_or(Error::UnsupportedInfinity)?;
    let radius = a_cycle_radius(group, i)?;
    let guard = 1e-6 * radius;
    quad::circle_integral_adaptive(center, radius, policy.tail_tol, |z| {
        let out = diff.eval_raw(z);
        if out.min_pole_dist < guard {
            return Err(Error::PoleOnContour);
        }
        if !(out.tail <= policy.tail_tol * 10.0 * (1.0 + out.value.norm())) {
            return Err(Error::TruncationNotConverged {
                max_len: policy.max_word_len,
                tail: out.tail,
            });
        }
        Ok(out.value)
    })
}

/// Residue of a third-kind differential at one of its poles: small-circle
/// integral divided by 2 pi i. Contract: +1 at p1, -1 at p2.
pub fn residue(
    group: &SchottkyGroup,
    kind: DifferentialKind,
    at: C64,
    policy: &TruncationPolicy,
) -> Result<C64> {
    let (p1, p2) = match kind {
        DifferentialKind::Third { p1, p2 } => (p1, p2),
        _ => return Err(Error::Config("residue wants a third-kind differential".into())),
    };
    let other = if (at - p1).norm() < (at - p2).norm() {
        p2
    } else {
        p1
    };
    let diff = Differential::new(group, kind, policy)?;
    let mut radius = 0.5 * (at - other).norm();
    for fp in group.finite_fixed_points()? {
        radius = radius.min(0.5 * (fp - at).norm());
    }
    if !(radius > EPS_POLE) {
        return Err(Error::PoleProximity { dist: radius });
    }
    let guard = 1e-6 * radius;
    let integral = quad::circle_integral_adaptive(at, radius, policy.tail_tol, |z| {
        let out = diff.eval_raw(z);
        if out.min_pole_dist < guard {
            return Err(Error::PoleOnContour);
        }
        Ok(out.value)
    })?;
    Ok(integral / C64::new(0.0, TWO_PI))
}

/// Deterministic base point for b-cycle paths. Real (M-curve) data gets the
/// purely imaginary point i (1 + max |x|); otherwise the best of a 16-point
/// candidate ring by clearance from low-depth pole images.
pub fn base_point(group: &SchottkyGroup) -> Result<C64> {
    let fixed = group.finite_fixed_points()?;
    let scale = fixed.iter().map(|p| p.norm()).fold(0.0f64, f64::max);
    let all_real = fixed.iter().all(|p| p.im.abs() < 1e-12 * (1.0 + scale));
    if all_real {
        return Ok(C64::new(0.0, 1.0 + scale));
    }
    // candidate ring around the centroid
    let centroid = fixed.iter().sum::<C64>() / fixed.len() as f64;
    let spread = fixed
        .iter()
        .map(|p| (p - centroid).norm())
        .fold(0.0f64, f64::max)
        .max(1.0);
    // images of fixed points under words of length <= 2
    let mut obstacles = fixed.clone();
    for w in group.enumerate_reduced_words(2) {
        if w.is_empty() {
            continue;
        }
        let m = group.evaluate_word(&w)?;
        for p in &fixed {
            obstacles.push(m.apply_c(*p));
        }
    }
    let mut best = (f64::NEG_INFINITY, C64::new(0.0, 0.0));
    for k in 0..16 {
        let z = centroid + C64::from_polar(1.5 * spread, TWO_PI * k as f64 / 16.0);
        let clearance = obstacles
            .iter()
            .map(|p| (p - z).norm())
            .fold(f64::INFINITY, f64::min);
        if clearance > best.0 {
            best = (clearance, z);
        }
    }
    Ok(best.1)
}

/// Splits the straight path z0 -> gamma_i(z0) at its entry into the padded
/// attracting isometric disk and maps the inner part back by gamma_i^{-1}
/// (legal by the transformation law of first-kind densities), then bows
/// segments away from explicit pole images. Returns a list of polylines.
fn b_path_pieces(
    group: &SchottkyGroup,
    i: usize,
    z0: C64,
    poles: &[C64],
    eps_path: f64,
) -> Result<Vec<Vec<C64>>> {
    let gi = group.generator(i - 1);
    let w_end = gi.apply_c(z0);
    let circles = group.isometric_circles()?;
    let att = circles
        .iter()
        .find(|c| c.generator == i - 1 && c.inverse)
        .copied()
        .ok_or(Error::PathBlocked)?;
    let report = group.validate_classical();
    let pad = 0.25 * att.radius.min(report.min_gap.max(0.0) + 1e-12);
    let rad = att.radius + pad;

    // entry parameter of the segment z0 + t (w_end - z0) into |z - c| = rad
    let dirv = w_end - z0;
    let rel = z0 - att.center;
    let a = dirv.norm_sqr();
    let b = 2.0 * (rel.re * dirv.re + rel.im * dirv.im);
    let c = rel.norm_sqr() - rad * rad;
    let disc = b * b - 4.0 * a * c;
    let mut pieces: Vec<Vec<C64>> = Vec::new();
    if c <= 0.0 {
        return Err(Error::PathBlocked); // base point inside the disk
    }
    if disc > 0.0 {
        let t_enter = (-b - disc.sqrt()) / (2.0 * a);
        if t_enter > 0.0 && t_enter < 1.0 {
            let w = z0 + dirv * t_enter;
            let w_back = gi.inverse().apply_c(w);
            pieces.push(vec![z0, w]);
            pieces.push(vec![w_back, z0]);
        } else {
            pieces.push(vec![z0, w_end]);
        }
    } else {
        pieces.push(vec![z0, w_end]);
    }

    // bow segments away from near poles
    let mut out = Vec::new();
    for piece in pieces {
        let mut refined = Vec::new();
        for seg in piece.windows(2) {
            bow_segment(seg[0], seg[1], poles, eps_path, 0, &mut refined)?;
        }
        refined.push(*piece.last().unwrap());
        out.push(refined);
    }
    Ok(out)
}

/// Recursively subdivides/offsets a segment so its interior keeps distance
/// eps from the given poles. Pushes the start of each final subsegment.
fn bow_segment(
    a: C64,
    b: C64,
    poles: &[C64],
    eps: f64,
    depth: usize,
    out: &mut Vec<C64>,
) -> Result<()> {
    if depth > 8 {
        return Err(Error::PathBlocked);
    }
    // nearest pole to the open segment
    let dir = b - a;
    let len2 = dir.norm_sqr();
    let mut worst: Option<(f64, f64, C64)> = None; // (dist, t, pole)
    for p in poles {
        let t = if len2 == 0.0 {
            0.0
        } else {
            (((p - a).re * dir.re + (p - a).im * dir.im) / len2).clamp(0.0, 1.0)
        };
        let q = a + dir * t;
        let d = (q - p).norm();
        if t > 1e-9 && t < 1.0 - 1e-9 && d < eps
            && worst.is_none_or(|(wd, _, _)| d < wd) {
                worst = Some((d, t, *p));
            }
    }
    match worst {
        None => {
            out.push(a);
            Ok(())
        }
        Some((_, t, p)) => {
            // offset the split point perpendicular to the segment, away from p
            let q = a + dir * t;
            let n = C64::new(-dir.im, dir.re) / dir.norm();
            let side = if ((q - p).re * n.re + (q - p).im * n.im) >= 0.0 {
                1.0
            } else {
                -1.0
            };
            let q_off = q + n * side * (2.0 * eps);
            bow_segment(a, q_off, poles, eps, depth + 1, out)?;
            bow_segment(q_off, b, poles, eps, depth + 1, out)
        }
    }
}

/// Line integral of the first-kind differential omega_j along the b_i path
/// from the base point to gamma_i(base point). exp of the result is the
/// multiplicative period P_ij.
pub fn b_period_integral(
    group: &SchottkyGroup,
    i: usize,
    j: usize,
    policy: &TruncationPolicy,
) -> Result<C64> {
    let diff = Differential::new(group, DifferentialKind::First { index: j }, policy)?;
    let z0 = base_point(group)?;
    b_period_integral_with(&diff, i, z0, policy)
}

pub(crate) fn b_period_integral_with(
    diff: &Differential,
    i: usize,
    z0: C64,
    policy: &TruncationPolicy,
) -> Result<C64> {
    let group = diff.group;
    let eps_path = 1e-3 * group.scale();
    let poles = diff.clearance_poles(3);
    let pieces = b_path_pieces(group, i, z0, &poles, eps_path)?;
    let quad_tol = (policy.tail_tol * 0.1).max(1e-13);
    let mut total = C64::new(0.0, 0.0);
    for piece in &pieces {
        total += quad::polyline_integral(piece, quad_tol, &|z| {
            let out = diff.eval_raw(z);
            if out.min_pole_dist < 0.5 * eps_path.min(1e-4) {
                return Err(Error::PoleOnContour);
            }
            Ok(out.value)
        })?;
    }
    Ok(total)
}

/// Taylor data of the normalized differentials at the marked point x_t:
/// r[(j-1, m-1)] is the coefficient of u^{m-1} in omega_j, and
/// q[(n-1, m-1)] = n * (coefficient of u^{m-1} in the regular part of the
/// second-kind differential of order n+1).
#[derive(Clone, Debug)]
pub struct LaurentData {
    pub r: CMat,
    pub q: CMat,
    /// relative max-norm asymmetry of q (verified, not assumed)
    pub q_symmetry_defect: f64,
}

impl LaurentData {
    pub fn times(&self) -> usize {
        self.r.cols
    }

    pub fn genus(&self) -> usize {
        self.r.rows
    }

    /// Column m (1-based): the vector r_m = (r_{1,m}, ..., r_{g,m}).
    pub fn r_column(&self, m: usize) -> Vec<C64> {
        (0..self.r.rows).map(|j| self.r.at(j, m - 1)).collect()
    }

    pub fn q_at(&self, n: usize, m: usize) -> C64 {
        self.q.at(n - 1, m - 1)
    }
}

/// Radius of the Laurent extraction circle around the marked point: half the
/// distance to the nearest isometric circle or fixed point.
pub fn laurent_radius(group: &SchottkyGroup, x_t: C64) -> Result<f64> {
    let mut dist = f64::INFINITY;
    for c in group.isometric_circles()? {
        dist = dist.min((x_t - c.center).norm() - c.radius);
    }
    for p in group.finite_fixed_points()? {
        dist = dist.min((x_t - p).norm());
    }
    if !(dist > 0.0) {
        return Err(Error::PoleProximity { dist });
    }
    Ok(0.5 * dist)
}

/// Extracts the Laurent data for the first M KP times by discrete Fourier
/// inversion on a circle around the marked point, with an N -> 2N stability
/// check.
pub fn laurent_data(
    group: &SchottkyGroup,
    x_t: C64,
    m_times: usize,
    policy: &TruncationPolicy,
) -> Result<LaurentData> {
    let g = group.rank();
    if m_times == 0 {
        return Ok(LaurentData {
            r: CMat::zeros(g, 0),
            q: CMat::zeros(0, 0),
            q_symmetry_defect: 0.0,
        });
    }
    if g == 0 {
        // trivial group: the second-kind differentials are exactly du/u^{n+1}
        return Ok(LaurentData {
            r: CMat::zeros(0, m_times),
            q: CMat::zeros(m_times, m_times),
            q_symmetry_defect: 0.0,
        });
    }
    let rho = laurent_radius(group, x_t)?;
    let n_samples = 64usize.max((4 * (m_times + 2)).next_power_of_two());

    let firsts: Vec<Differential> = (1..=g)
        .map(|i| Differential::new(group, DifferentialKind::First { index: i }, policy))
        .collect::<Result<Vec<_>>>()?;
    let map_table = build_map_table(group, policy)?;

    let coeffs_at = |n_pts: usize| -> Result<(CMat, CMat)> {
        let nodes: Vec<C64> = (0..n_pts)
            .map(|k| x_t + C64::from_polar(rho, TWO_PI * k as f64 / n_pts as f64))
            .collect();
        let mut r = CMat::zeros(g, m_times);
        for (j, diff) in firsts.iter().enumerate() {
            let samples: Vec<C64> = nodes
                .par_iter()
                .map(|&z| diff.density(z))
                .collect::<Result<Vec<_>>>()?;
            let cs = quad::taylor_from_circle(&samples, rho, m_times - 1);
            for m in 1..=m_times {
                r.set(j, m - 1, cs[m - 1]);
            }
        }
        let mut q = CMat::zeros(m_times, m_times);
        for n in 1..=m_times {
            let k = (n + 1) as u32;
            let samples: Vec<C64> = nodes
                .par_iter()
                .map(|&z| {
                    let out = map_table.eval_second(z, x_t, k, true);
                    if out.tail > policy.tail_tol * (1.0 + out.value.norm()) {
                        return Err(Error::TruncationNotConverged {
                            max_len: policy.max_word_len,
                            tail: out.tail,
                        });
                    }
                    Ok(out.value)
                })
                .collect::<Result<Vec<_>>>()?;
            let cs = quad::taylor_from_circle(&samples, rho, m_times - 1);
            for m in 1..=m_times {
                q.set(n - 1, m - 1, cs[m - 1] * n as f64);
            }
        }
        Ok((r, q))
    };

    let (r1, q1) = coeffs_at(n_samples)?;
    let (r2, q2) = coeffs_at(2 * n_samples)?;
    let mut defect = 0.0f64;
    for (a, b) in r1.data.iter().zip(r2.data.iter()) {
        defect = defect.max((a - b).norm() / (1.0 + b.norm()));
    }
    for (a, b) in q1.data.iter().zip(q2.data.iter()) {
        defect = defect.max((a - b).norm() / (1.0 + b.norm()));
    }
    if defect > policy.tail_tol * 100.0 {
        return Err(Error::FourierNotConverged { defect });
    }
    let q_norm = q2.max_norm();
    let q_symmetry_defect = if q_norm > 0.0 {
        q2.symmetry_defect() / q_norm
    } else {
        0.0
    };
    Ok(LaurentData {
        r: r2,
        q: q2,
        q_symmetry_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{instantiate_group, marked_point};
    use crate::testdata;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn first_kind_leading_term_g1() {
        let (graph, params) = testdata::delta0(&[(-1.0, 1.0)], -3.0, 0.01);
        let group = instantiate_group(&graph, &params).unwrap();
        let policy = TruncationPolicy::default();
        let v = eval_density(
            &group,
            DifferentialKind::First { index: 1 },
            c(5.0, 0.0),
            &policy,
        )
        .unwrap();
        // single coset: exactly 1/(z-1) - 1/(z+1) = 1/12 at z = 5
        assert!((v - c(1.0 / 12.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn second_kind_identity_term_only() {
        let (graph, params) = testdata::delta0(&[(-1.0, 1.0)], -3.0, 0.01);
        let group = instantiate_group(&graph, &params).unwrap();
        let x_t = c(-3.0, 0.0);
        let z = c(0.5, 2.0);
        // trivial truncation L = 0: exactly the identity term
        let l0 = TruncationPolicy::default().with_max_len(0).with_tail_tol(1.0);
        let v0 = eval_density(
            &group,
            DifferentialKind::Second { marked: x_t, order: 3 },
            z,
            &l0,
        )
        .unwrap();
        let identity_term = 1.0 / (z - x_t).powu(3);
        assert!((v0 - identity_term).norm() < 1e-14 * identity_term.norm());
        // the converged sum differs from it by an O(y)-sized correction
        let v = eval_density(
            &group,
            DifferentialKind::Second { marked: x_t, order: 3 },
            z,
            &TruncationPolicy::default(),
        )
        .unwrap();
        let rel = (v - identity_term).norm() / identity_term.norm();
        assert!(rel > 1e-4 && rel < 0.2, "correction {rel}");
    }

    #[test]
    fn transformation_law_first_kind() {
        let (graph, params) = testdata::delta0(&[(-1.0, 1.0), (3.0, 5.0)], -3.0, 0.05);
        let group = instantiate_group(&graph, &params).unwrap();
        let policy = TruncationPolicy::default().with_max_len(10).with_tail_tol(1e-8);
        let diff = Differential::new(&group, DifferentialKind::First { index: 1 }, &policy).unwrap();
        let gamma = group.generator(1);
        for z in [c(0.3, 1.5), c(-2.0, 0.8), c(7.0, 2.0), c(1.8, -1.2), c(-4.0, -2.0)] {
            let lhs = diff.eval_raw(gamma.apply_c(z)).value * gamma.derivative_at(z);
            let rhs = diff.eval_raw(z).value;
            assert!(
                (lhs - rhs).norm() <= 1e-6 * rhs.norm().max(1e-3),
                "z {z}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn a_periods_normalized() {
        let (graph, params) = testdata::delta0(&[(-1.0, 1.0)], -3.0, 0.01);
        let group = instantiate_group(&graph, &params).unwrap();
        let policy = TruncationPolicy::default();
        let v = a_period(&group, DifferentialKind::First { index: 1 }, 1, &policy).unwrap();
        assert!((v - c(0.0, TWO_PI)).norm() < 1e-8, "got {v}");

        let (graph2, params2) = testdata::delta0(&[(-1.0, 1.0), (3.0, 5.0)], -3.0, 0.01);
        let group2 = instantiate_group(&graph2, &params2).unwrap();
        let v12 = a_period(&group2, DifferentialKind::First { index: 1 }, 2, &policy).unwrap();
        assert!(v12.norm() < 1e-8, "got {v12}");
    }

    #[test]
    fn second_and_third_kind_a_periods_vanish() {
        let (graph, params) = testdata::delta0(&[(-1.0, 1.0), (3.0, 5.0)], -3.0, 0.02);
        let group = instantiate_group(&graph, &params).unwrap();
        let x_t = marked_point(&graph, &params).unwrap();
        let policy = TruncationPolicy::default();
        let v = a_period(
            &group,
            DifferentialKind::Second { marked: x_t, order: 2 },
            1,
            &policy,
        )
        .unwrap();
        assert!(v.norm() < 1e-8, "second kind: {v}");
        let v3 = a_period(
            &group,
            DifferentialKind::Third { p1: x_t, p2: c(-5.0, 0.0) },
            1,
            &policy,
        )
        .unwrap();
        assert!(v3.norm() < 1e-8, "third kind: {v3}");
    }

    #[test]
    fn third_kind_residues() {
        let (graph, params) = testdata::delta0(&[(-1.0, 1.0), (3.0, 5.0)], -3.0, 0.02);
        let group = instantiate_group(&graph, &params).unwrap();
        let policy = TruncationPolicy::default();
        let kind = DifferentialKind::Third {
            p1: c(-3.0, 0.0),
            p2: c(-5.0, 0.0),
        };
        let r1 = residue(&group, kind, c(-3.0, 0.0), &policy).unwrap();
        assert!((r1 - c(1.0, 0.0)).norm() < 1e-8, "residue at p1: {r1}");
        let r2 = residue(&group, kind, c(-5.0, 0.0), &policy).unwrap();
        assert!((r2 + c(1.0, 0.0)).norm() < 1e-8, "residue at p2: {r2}");
    }

    #[test]
    fn b_period_exact_for_rank_one() {
        let (graph, params) = testdata::delta0(&[(-1.0, 1.0)], -3.0, 0.01);
        let group = instantiate_group(&graph, &params).unwrap();
        let policy = TruncationPolicy::default();
        let integral = b_period_integral(&group, 1, 1, &policy).unwrap();
        let p11 = integral.exp();
        assert!((p11 - c(0.01, 0.0)).norm() < 1e-9 * 0.01_f64.max(1e-12), "P11 {p11}");
    }

    #[test]
    fn path_reversal_negates_integral() {
        let (graph, params) = testdata::delta0(&[(-1.0, 1.0)], -3.0, 0.01);
        let group = instantiate_group(&graph, &params).unwrap();
        let policy = TruncationPolicy::default();
        let diff =
            Differential::new(&group, DifferentialKind::First { index: 1 }, &policy).unwrap();
        let a = c(0.0, 2.0);
        let b = c(1.0, 3.0);
        let f = |z: C64| Ok(diff.eval_raw(z).value);
        let fwd = quad::segment_integral(a, b, 1e-12, &f).unwrap();
        let back = quad::segment_integral(b, a, 1e-12, &f).unwrap();
        assert!((fwd + back).norm() < 1e-12);
    }

    #[test]
    fn laurent_identity_term_oracle() {
        // g = 1, x = (1, -1), x_t = -3: with the identity term only,
        // r_{1,m} = 1/2^m - 1/4^m; the y = 0.01 correction is O(y)
        let (graph, params) = testdata::delta0(&[(-1.0, 1.0)], -3.0, 0.01);
        let group = instantiate_group(&graph, &params).unwrap();
        let x_t = marked_point(&graph, &params).unwrap();
        let policy = TruncationPolicy::default();
        let data = laurent_data(&group, x_t, 4, &policy).unwrap();
        for m in 1..=4usize {
            let expect = 0.5f64.powi(m as i32) - 0.25f64.powi(m as i32);
            let got = data.r.at(0, m - 1);
            assert!(
                (got - c(expect, 0.0)).norm() < 0.05 * expect.abs(),
                "m {m}: got {got}, expected about {expect}"
            );
        }
        assert!((data.r.at(0, 0) - c(0.25, 0.0)).norm() < 0.01);
    }

    #[test]
    fn truncation_differences_shrink_geometrically() {
        // sup |f_L - f_{L+2}| over a small grid drops by at least max|beta|
        // per step
        let (graph, params) = testdata::delta0(&[(-1.0, 1.0), (3.0, 5.0)], -3.0, 0.02);
        let group = instantiate_group(&graph, &params).unwrap();
        let zs = [c(0.3, 2.0), c(-3.0, 1.0), c(6.5, 2.5)];
        let sup_at = |len: usize| -> Vec<C64> {
            let pol = TruncationPolicy::default().with_max_len(len).with_tail_tol(1.0);
            let d = Differential::new(&group, DifferentialKind::First { index: 1 }, &pol).unwrap();
            zs.iter().map(|&z| d.eval_raw(z).value).collect()
        };
        let (f4, f6, f8) = (sup_at(4), sup_at(6), sup_at(8));
        let d1: f64 = f4
            .iter()
            .zip(f6.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let d2: f64 = f6
            .iter()
            .zip(f8.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(d2 <= d1 * group.max_multiplier_norm(), "d1 {d1:e}, d2 {d2:e}");
    }

    #[test]
    fn laurent_q_symmetric() {
        let (graph, params) = testdata::delta0(&[(-1.0, 1.0), (3.0, 5.0)], -3.0, 0.02);
        let group = instantiate_group(&graph, &params).unwrap();
        let x_t = marked_point(&graph, &params).unwrap();
        let policy = TruncationPolicy::default();
        let data = laurent_data(&group, x_t, 4, &policy).unwrap();
        assert!(
            data.q_symmetry_defect < 1e-7,
            "defect {}",
            data.q_symmetry_defect
        );
    }

    #[test]
    fn pole_proximity_detected() {
        let (graph, params) = testdata::delta0(&[(-1.0, 1.0)], -3.0, 0.01);
        let group = instantiate_group(&graph, &params).unwrap();
        let err = eval_density(
            &group,
            DifferentialKind::First { index: 1 },
            c(1.0, 1e-9),
            &TruncationPolicy::default(),
        );
        assert!(matches!(err, Err(crate::error::Error::PoleProximity { .. })));
    }

    #[test]
    fn laurent_fourier_stable_at_tighter_tolerance() {
        // N vs 2N circle sampling agrees to 1e-9 for coefficients up to M = 6
        let (graph, params) = crate::graph::mcurve_params(2, 1, 2.0, 0.005).unwrap();
        let group = instantiate_group(&graph, &params).unwrap();
        let x_t = marked_point(&graph, &params).unwrap();
        let policy = TruncationPolicy::default().with_tail_tol(1e-11);
        let data = laurent_data(&group, x_t, 6, &policy).unwrap();
        assert_eq!(data.r.cols, 6);
    }

    #[test]
    fn laurent_empty_when_no_times() {
        let (graph, params) = testdata::delta0(&[(-1.0, 1.0)], -3.0, 0.01);
        let group = instantiate_group(&graph, &params).unwrap();
        let data = laurent_data(&group, c(-3.0, 0.0), 0, &TruncationPolicy::default()).unwrap();
        assert_eq!(data.r.cols, 0);
        assert_eq!(data.q.rows, 0);
    }
}

//! Multiplicative periods P_ij (double-coset cross-ratio products) and the
//! additive period matrix Z from b-cycle integrals, with their mutual
//! consistency diagnostics.

use serde::Serialize;

use crate::differentials::{b_period_integral_with, base_point, Differential, DifferentialKind};
use crate::error::{Error, Result};
use crate::group::SchottkyGroup;
use crate::linalg::{symmetric_eigenvalues, CMat};
use crate::series::{walk_shells, TruncationPolicy, WalkEnd};
use crate::words::GroupWord;
use crate::C64;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Period data: multiplicative periods P, additive period matrix Z
/// (Z_ij = (1/2 pi i) int_{b_i} omega_j) and quality diagnostics.
#[derive(Clone, Debug)]
pub struct PeriodData {
    pub p: CMat,
    pub z: CMat,
    /// max-norm of Z - Z^T before symmetrization
    pub symmetry_defect: f64,
    /// smallest eigenvalue of Im Z
    pub min_im_eig: f64,
    /// max relative defect of exp(2 pi i Z_ij) against P_ij
    pub consistency_defect: f64,
}

/// The factor psi_ij(gamma) of the period product: beta_i on the identity
/// class when i = j, otherwise the cross-ratio of fixed points and their
/// gamma-images.
pub fn psi_factor(group: &SchottkyGroup, i: usize, j: usize, word: &GroupWord) -> Result<C64> {
    if i == j && word.is_empty() {
        return Ok(group.multiplier(i));
    }
    let m = group.evaluate_word(word)?;
    psi_factor_of_map(group, i, j, &m.a, &m.b, &m.c, &m.d)
}

fn psi_factor_of_map(
    group: &SchottkyGroup,
    i: usize,
    j: usize,
    a: &C64,
    b: &C64,
    c: &C64,
    d: &C64,
) -> Result<C64> {
    let ai = group
        .fixed_point(i as i32)
        .value()
        .ok_or(Error::UnsupportedInfinity)?;
    let ami = group
        .fixed_point(-(i as i32))
        .value()
        .ok_or(Error::UnsupportedInfinity)?;
    let aj = group
        .fixed_point(j as i32)
        .value()
        .ok_or(Error::UnsupportedInfinity)?;
    let amj = group
        .fixed_point(-(j as i32))
        .value()
        .ok_or(Error::UnsupportedInfinity)?;
    let gj = (a * aj + b) / (c * aj + d);
    let gmj = (a * amj + b) / (c * amj + d);
    let num = (ai - gj) * (ami - gmj);
    let den = (ami - gj) * (ai - gmj);
    if den.norm() < 1e-14 {
        return Err(Error::DegenerateCrossRatio);
    }
    Ok(num / den)
}

/// P_ij as the product of psi factors over double-coset representatives,
/// with a multiplicative tail check: the last shell's sum of |psi - 1| must
/// fall below the tail tolerance.
pub fn multiplicative_period(
    group: &SchottkyGroup,
    i: usize,
    j: usize,
    policy: &TruncationPolicy,
) -> Result<C64> {
    let mut product = if i == j {
        group.multiplier(i)
    } else {
        C64::new(1.0, 0.0)
    };
    // identity class for i != j contributes the plain cross-ratio
    if i != j {
        let id = MoebiusIdent::IDENT;
        product *= psi_factor_of_map(group, i, j, &id.0, &id.1, &id.2, &id.3)?;
    }
    let mut err: Option<Error> = None;
    let mut last_shell_defect = f64::INFINITY;
    let mut prev_shell_defect = f64::INFINITY;
    let end = walk_shells(
        group,
        Some(i),
        policy.max_word_len,
        policy.max_terms,
        |len, shell| {
            if len == 0 {
                return true;
            }
            let mut defect = 0.0f64;
            for e in shell {
                if e.last.unsigned_abs() as usize == j {
                    continue; // not a double-coset representative
                }
                match psi_factor_of_map(group, i, j, &e.map.a, &e.map.b, &e.map.c, &e.map.d) {
                    Ok(psi) => {
                        product *= psi;
                        defect += (psi - C64::new(1.0, 0.0)).norm();
                    }
                    Err(e) => {
                        err = Some(e);
                        return false;
                    }
                }
            }
            prev_shell_defect = last_shell_defect;
            last_shell_defect = defect;
            // shells 1 and 2 may legitimately be empty of representatives
            !(len >= 2 && last_shell_defect < policy.tail_tol && prev_shell_defect < policy.tail_tol)
        },
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    match end {
        WalkEnd::Stopped | WalkEnd::Complete => Ok(product),
        WalkEnd::Exhausted(len) => {
            if last_shell_defect < policy.tail_tol {
                Ok(product)
            } else {
                Err(Error::TruncationNotConverged {
                    max_len: len,
                    tail: last_shell_defect,
                })
            }
        }
    }
}

struct MoebiusIdent(C64, C64, C64, C64);
impl MoebiusIdent {
    const IDENT: MoebiusIdent = MoebiusIdent(
        C64::new(1.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(1.0, 0.0),
    );
}

/// Full period computation: Z from b-integrals (then symmetrized, with the
/// defect recorded), P from the double-coset product, and all consistency
/// diagnostics. Errors if Im Z is not positive definite.
pub fn period_matrix(group: &SchottkyGroup, policy: &TruncationPolicy) -> Result<PeriodData> {
    use rayon::prelude::*;
    let g = group.rank();
    let z0 = base_point(group)?;
    // one differential table per column j, rows in parallel
    let columns: Vec<Vec<C64>> = (1..=g)
        .into_par_iter()
        .map(|j| {
            let diff = Differential::new(group, DifferentialKind::First { index: j }, policy)?;
            (1..=g)
                .map(|i| {
                    b_period_integral_with(&diff, i, z0, policy)
                        .map(|v| v / C64::new(0.0, TWO_PI))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut z = CMat::zeros(g, g);
    for (jc, column) in columns.iter().enumerate() {
        for (ic, v) in column.iter().enumerate() {
            z.set(ic, jc, *v);
        }
    }
    let symmetry_defect = z.symmetry_defect();
    let z = z.symmetrized();

    let pairs: Vec<(usize, usize)> = (1..=g)
        .flat_map(|i| (1..=g).map(move |j| (i, j)))
        .collect();
    let p_entries: Vec<C64> = pairs
        .par_iter()
        .map(|&(i, j)| multiplicative_period(group, i, j, policy))
        .collect::<Result<Vec<_>>>()?;
    let mut p = CMat::zeros(g, g);
    for (&(i, j), v) in pairs.iter().zip(p_entries.iter()) {
        p.set(i - 1, j - 1, *v);
    }

    let mut consistency_defect = 0.0f64;
    for i in 0..g {
        for j in 0..g {
            let from_z = (C64::new(0.0, TWO_PI) * z.at(i, j)).exp();
            let pij = p.at(i, j);
            consistency_defect =
                consistency_defect.max((from_z - pij).norm() / pij.norm().max(1e-300));
        }
    }

    let eigs = symmetric_eigenvalues(&z.imag_part(), g);
    let min_im_eig = eigs.first().copied().unwrap_or(f64::NAN);
    if !(min_im_eig > 0.0) {
        return Err(Error::RiemannRelationViolated { min_eig: min_im_eig });
    }
    Ok(PeriodData {
        p,
        z,
        symmetry_defect,
        min_im_eig,
        consistency_defect,
    })
}

/// JSON form of the period data: complex entries as [re, im] pairs.
#[derive(Serialize)]
pub struct PeriodDataJson {
    #[serde(rename = "P")]
    pub p: Vec<Vec<[f64; 2]>>,
    #[serde(rename = "Z")]
    pub z: Vec<Vec<[f64; 2]>>,
    pub symmetry_defect: f64,
    pub min_im_eig: f64,
    pub consistency_defect: f64,
}

impl PeriodData {
    pub fn to_json(&self) -> PeriodDataJson {
        let grid = |m: &CMat| -> Vec<Vec<[f64; 2]>> {
            (0..m.rows)
                .map(|i| (0..m.cols).map(|j| [m.at(i, j).re, m.at(i, j).im]).collect())
                .collect()
        };
        PeriodDataJson {
            p: grid(&self.p),
            z: grid(&self.z),
            symmetry_defect: self.symmetry_defect,
            min_im_eig: self.min_im_eig,
            consistency_defect: self.consistency_defect,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::instantiate_group;
    use crate::testdata;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn psi_identity_on_diagonal_is_multiplier() {
        let (graph, params) = testdata::delta0(&[(-1.0, 1.0), (3.0, 5.0)], -3.0, 0.01);
        let group = instantiate_group(&graph, &params).unwrap();
        let v = psi_factor(&group, 1, 1, &GroupWord::identity()).unwrap();
        assert!((v - c(0.01, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn psi_identity_off_diagonal_is_cross_ratio() {
        // (x1, x-1, x2, x-2) = (1, -1, 5, 3):
        // (1-5)(-1-3)/((-1-5)(1-3)) = 16/12 = 4/3
        let (graph, params) = testdata::delta0(&[(-1.0, 1.0), (3.0, 5.0)], -3.0, 0.01);
        let group = instantiate_group(&graph, &params).unwrap();
        let v = psi_factor(&group, 1, 2, &GroupWord::identity()).unwrap();
        assert!((v - c(4.0 / 3.0, 0.0)).norm() < 1e-12, "got {v}");
    }

    #[test]
    fn psi_tends_to_one_for_deep_words() {
        // gamma(alpha_j) and gamma(alpha_-j) collide as the word multiplier
        // vanishes, so the cross-ratio tends to 1
        let (graph, params) = testdata::delta0(&[(-1.0, 1.0), (3.0, 5.0)], -3.0, 1e-6);
        let group = instantiate_group(&graph, &params).unwrap();
        let w = GroupWord::new(vec![2, 1]).unwrap();
        let psi = psi_factor(&group, 1, 2, &w).unwrap();
        assert!((psi - c(1.0, 0.0)).norm() < 1e-4, "psi {psi}");
    }

    #[test]
    fn rank_one_period_is_exactly_the_multiplier() {
        let (graph, params) = testdata::delta0(&[(-1.0, 1.0)], -3.0, 0.01);
        let group = instantiate_group(&graph, &params).unwrap();
        let p11 = multiplicative_period(&group, 1, 1, &TruncationPolicy::default()).unwrap();
        assert!((p11 - c(0.01, 0.0)).norm() <= 1e-14 * 0.01);
    }

    #[test]
    fn p12_close_to_cross_ratio_for_small_y() {
        let (graph, params) = testdata::delta0(&[(-1.0, 1.0), (3.0, 5.0)], -3.0, 0.01);
        let group = instantiate_group(&graph, &params).unwrap();
        let p12 = multiplicative_period(&group, 1, 2, &TruncationPolicy::default()).unwrap();
        assert!((p12 - c(4.0 / 3.0, 0.0)).norm() < 0.05, "got {p12}");
    }

    #[test]
    fn p_is_symmetric() {
        let (graph, params) = testdata::delta0(&[(-1.0, 1.0), (3.0, 5.0)], -3.0, 0.03);
        let group = instantiate_group(&graph, &params).unwrap();
        let policy = TruncationPolicy::default();
        let p12 = multiplicative_period(&group, 1, 2, &policy).unwrap();
        let p21 = multiplicative_period(&group, 2, 1, &policy).unwrap();
        assert!((p12 - p21).norm() <= 1e-7 * p12.norm(), "{p12} vs {p21}");
    }

    #[test]
    fn truncation_of_p_is_monotone() {
        // |P(L+2) - P(L)| <= (2g-1)^2 (max beta)^{L+1} |P(L)|
        let (graph, params) = testdata::delta0(&[(-1.0, 1.0), (3.0, 5.0)], -3.0, 0.04);
        let group = instantiate_group(&graph, &params).unwrap();
        let at = |len: usize| {
            let pol = TruncationPolicy::default().with_max_len(len).with_tail_tol(1e-300)
                ;
            // tail tolerance of 0 would error; evaluate the raw product by
            // accepting whatever the cap yields
            match multiplicative_period(&group, 1, 2, &pol) {
                Ok(v) => v,
                Err(_) => {
                    let pol = TruncationPolicy::default().with_max_len(len).with_tail_tol(1.0);
                    multiplicative_period(&group, 1, 2, &pol).unwrap()
                }
            }
        };
        let beta_max = group.max_multiplier_norm();
        for len in [4usize, 6, 8] {
            let a = at(len);
            let b = at(len + 2);
            let bound = 9.0 * beta_max.powi(len as i32 + 1) * a.norm();
            assert!((b - a).norm() <= bound, "L {len}: |dP| {:e} > {bound:e}", (b - a).norm());
        }
    }

    #[test]
    fn diagonal_periods_stay_small() {
        // |P_ii| <= 2 |beta_i| in the small-multiplier regime
        let (graph, params) = testdata::delta0(&[(-1.0, 1.0), (3.0, 5.0)], -3.0, 0.05);
        let group = instantiate_group(&graph, &params).unwrap();
        let policy = TruncationPolicy::default().with_tail_tol(1e-7);
        for i in 1..=2 {
            let pii = multiplicative_period(&group, i, i, &policy).unwrap();
            let beta = group.multiplier(i).norm();
            assert!(pii.norm() <= 2.0 * beta, "P_{i}{i} = {pii}, beta {beta}");
        }
    }

    #[test]
    fn scalar_period_matrix() {
        let (graph, params) = testdata::delta0(&[(-1.0, 1.0)], -3.0, 0.01);
        let group = instantiate_group(&graph, &params).unwrap();
        let data = period_matrix(&group, &TruncationPolicy::default()).unwrap();
        // Z11 = log(0.01) / (2 pi i): purely imaginary, Im = -ln(0.01)/(2 pi)
        let z11 = data.z.at(0, 0);
        let expect_im = -(0.01f64).ln() / TWO_PI;
        assert!((z11.im - expect_im).abs() < 1e-9, "Im Z11 {}", z11.im);
        assert!(z11.re.abs() < 1e-9, "Re Z11 {}", z11.re);
        assert!(data.min_im_eig > 0.0);
        assert!(data.consistency_defect < 1e-8);
    }

    #[test]
    fn mcurve_periods_are_real() {
        let (graph, params) = crate::graph::mcurve_params(2, 1, 2.0, 0.02).unwrap();
        let group = instantiate_group(&graph, &params).unwrap();
        let data = period_matrix(&group, &TruncationPolicy::default()).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let e = (C64::new(0.0, TWO_PI) * data.z.at(i, j)).exp();
                assert!(
                    e.im.abs() <= 1e-7 * e.norm(),
                    "exp(2 pi i Z_{i}{j}) = {e} not real"
                );
            }
        }
        assert!(data.min_im_eig > 0.0);
        assert!(data.symmetry_defect < 1e-7 * (1.0 + data.z.max_norm()));
    }

    #[test]
    fn conjugation_invariance_of_p() {
        // transport the whole parameter set by a Moebius map; P is built from
        // cross-ratios and multipliers, both projective invariants
        use crate::moebius::MoebiusMap;
        let (graph, params) = testdata::delta0(&[(-1.0, 1.0), (3.0, 5.0)], -3.0, 0.02);
        let group = instantiate_group(&graph, &params).unwrap();
        let policy = TruncationPolicy::default();
        let p12 = multiplicative_period(&group, 1, 2, &policy).unwrap();

        let t = MoebiusMap::new(c(1.0, 0.0), c(0.5, 0.2), c(0.03, 0.0), c(1.0, 0.0)).unwrap();
        let mut params2 = params.clone();
        for v in params2.x.values_mut() {
            *v = t.apply(*v);
        }
        let group2 = instantiate_group(&graph, &params2).unwrap();
        let p12_t = multiplicative_period(&group2, 1, 2, &policy).unwrap();
        assert!(
            (p12 - p12_t).norm() <= 1e-8 * p12.norm(),
            "{p12} vs {p12_t}"
        );
    }
}

//! Schottky groups: marked generator systems with fixed points and
//! multipliers, word evaluation and the isometric-circle validity check.

use crate::error::{Error, Result};
use crate::moebius::{MoebiusMap, SpherePoint};
use crate::words::{self, GroupWord};
use crate::C64;

/// A rank-g Schottky group given by marked loxodromic generators.
#[derive(Clone, Debug)]
pub struct SchottkyGroup {
    gens: Vec<MoebiusMap>,
    gen_invs: Vec<MoebiusMap>,
    attractive: Vec<SpherePoint>,
    repulsive: Vec<SpherePoint>,
    multipliers: Vec<C64>,
}

/// One isometric circle |cz + d| = sqrt|det|.
#[derive(Clone, Copy, Debug)]
pub struct IsometricCircle {
    pub center: C64,
    pub radius: f64,
    /// generator index (0-based) this circle belongs to
    pub generator: usize,
    /// true for the inverse generator's circle
    pub inverse: bool,
}

/// Result of the classical-Schottky (disjoint isometric circles) check.
#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub pass: bool,
    /// minimal gap between circles; negative means overlap
    pub min_gap: f64,
    pub circles: Vec<IsometricCircle>,
    pub message: Option<String>,
}

impl SchottkyGroup {
    /// Builds the group from generator maps, computing fixed points and
    /// multipliers and checking loxodromy.
    pub fn from_generators(gens: Vec<MoebiusMap>) -> Result<Self> {
        let mut attractive = Vec::with_capacity(gens.len());
        let mut repulsive = Vec::with_capacity(gens.len());
        let mut multipliers = Vec::with_capacity(gens.len());
        for (k, g) in gens.iter().enumerate() {
            let (att, rep, beta) = g.fixed_points_and_multiplier().map_err(|_| {
                Error::NotLoxodromic {
                    index: k + 1,
                    modulus: 1.0,
                }
            })?;
            if beta.norm() >= 1.0 {
                return Err(Error::NotLoxodromic {
                    index: k + 1,
                    modulus: beta.norm(),
                });
            }
            // fixed-point residual check at 1e-10 relative
            let img = g.apply(att);
            if img.chordal_dist(&att) > 1e-10 {
                return Err(Error::NotLoxodromic {
                    index: k + 1,
                    modulus: beta.norm(),
                });
            }
            attractive.push(att);
            repulsive.push(rep);
            multipliers.push(beta);
        }
        let gen_invs = gens.iter().map(|g| g.inverse()).collect();
        Ok(SchottkyGroup {
            gens,
            gen_invs,
            attractive,
            repulsive,
            multipliers,
        })
    }

    pub fn rank(&self) -> usize {
        self.gens.len()
    }

    pub fn generator(&self, i: usize) -> &MoebiusMap {
        &self.gens[i]
    }

    /// Map of a single signed letter.
    pub fn letter_map(&self, letter: i32) -> Result<&MoebiusMap> {
        let idx = letter.unsigned_abs() as usize;
        if idx == 0 || idx > self.rank() {
            return Err(Error::IndexOutOfRange {
                index: letter,
                rank: self.rank(),
            });
        }
        Ok(if letter > 0 {
            &self.gens[idx - 1]
        } else {
            &self.gen_invs[idx - 1]
        })
    }

    /// Attractive fixed point of generator i (1-based).
    pub fn fixed_attractive(&self, i: usize) -> SpherePoint {
        self.attractive[i - 1]
    }

    pub fn fixed_repulsive(&self, i: usize) -> SpherePoint {
        self.repulsive[i - 1]
    }

    /// Fixed point for a signed index: +i attractive, -i repulsive.
    pub fn fixed_point(&self, signed: i32) -> SpherePoint {
        if signed > 0 {
            self.attractive[signed as usize - 1]
        } else {
            self.repulsive[(-signed) as usize - 1]
        }
    }

    pub fn multiplier(&self, i: usize) -> C64 {
        self.multipliers[i - 1]
    }

    pub fn max_multiplier_norm(&self) -> f64 {
        self.multipliers.iter().map(|b| b.norm()).fold(0.0, f64::max)
    }

    /// All fixed points, as finite complex values (error if any is infinite).
    pub fn finite_fixed_points(&self) -> Result<Vec<C64>> {
        let mut out = Vec::with_capacity(2 * self.rank());
        for p in self.attractive.iter().chain(self.repulsive.iter()) {
            out.push(p.value().ok_or(Error::UnsupportedInfinity)?);
        }
        Ok(out)
    }

    /// Geometric scale of the group data: max pairwise fixed-point distance.
    pub fn scale(&self) -> f64 {
        let pts: Vec<C64> = self
            .attractive
            .iter()
            .chain(self.repulsive.iter())
            .filter_map(|p| p.value())
            .collect();
        let mut s: f64 = 1.0;
        for (k, a) in pts.iter().enumerate() {
            for b in pts.iter().skip(k + 1) {
                s = s.max((a - b).norm());
            }
        }
        s
    }

    /// Left-to-right product of generator maps over the word letters.
    pub fn evaluate_word(&self, word: &GroupWord) -> Result<MoebiusMap> {
        let mut m = MoebiusMap::identity();
        for &l in word.letters() {
            m = m.compose(self.letter_map(l)?);
        }
        Ok(m)
    }

    pub fn enumerate_reduced_words(&self, max_len: usize) -> words::ReducedWords {
        words::enumerate_reduced_words(self.rank(), max_len)
    }

    pub fn coset_representatives(
        &self,
        i: usize,
        max_len: usize,
    ) -> impl Iterator<Item = GroupWord> {
        words::coset_representatives(self.rank(), i, max_len)
    }

    pub fn double_coset_representatives(
        &self,
        i: usize,
        j: usize,
        max_len: usize,
    ) -> impl Iterator<Item = GroupWord> {
        words::double_coset_representatives(self.rank(), i, j, max_len)
    }

    /// Isometric circles of each generator and its inverse: center -d/c
    /// (resp. a/c) and radius sqrt|det|/|c|.
    pub fn isometric_circles(&self) -> Result<Vec<IsometricCircle>> {
        let mut out = Vec::with_capacity(2 * self.rank());
        for (k, g) in self.gens.iter().enumerate() {
            let scale = g.a.norm().max(g.b.norm()).max(g.c.norm()).max(g.d.norm());
            if g.c.norm() <= 1e-14 * scale {
                // affine generator: no isometric circle
                return Err(Error::UnsupportedInfinity);
            }
            let r = g.det().norm().sqrt() / g.c.norm();
            out.push(IsometricCircle {
                center: -g.d / g.c,
                radius: r,
                generator: k,
                inverse: false,
            });
            out.push(IsometricCircle {
                center: g.a / g.c,
                radius: r,
                generator: k,
                inverse: true,
            });
        }
        Ok(out)
    }

    /// Sufficient classical-Schottky condition: the 2g isometric circles are
    /// pairwise disjoint. Groups used for series evaluation must pass.
    pub fn validate_classical(&self) -> ValidationReport {
        let circles = match self.isometric_circles() {
            Ok(c) => c,
            Err(_) => {
                return ValidationReport {
                    pass: false,
                    min_gap: f64::NEG_INFINITY,
                    circles: Vec::new(),
                    message: Some("generator fixing infinity has no isometric circle".into()),
                }
            }
        };
        let mut min_gap = f64::INFINITY;
        for (a, ca) in circles.iter().enumerate() {
            for cb in circles.iter().skip(a + 1) {
                let gap = (ca.center - cb.center).norm() - ca.radius - cb.radius;
                min_gap = min_gap.min(gap);
            }
        }
        ValidationReport {
            pass: min_gap > 0.0,
            min_gap,
            circles,
            message: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_phi;

    fn phi(p: f64, q: f64, y: f64) -> MoebiusMap {
        build_phi(SpherePoint::from(p), SpherePoint::from(q), C64::new(y, 0.0)).unwrap()
    }

    #[test]
    fn word_evaluation_matches_compose() {
        let g = SchottkyGroup::from_generators(vec![phi(1.0, -1.0, 0.1), phi(5.0, 3.0, 0.1)])
            .unwrap();
        let w = GroupWord::new(vec![1, 2]).unwrap();
        let m = g.evaluate_word(&w).unwrap();
        let expect = g.generator(0).compose(g.generator(1));
        assert!(m.approx_eq(&expect, 1e-13));
        assert!(g
            .evaluate_word(&GroupWord::identity())
            .unwrap()
            .approx_eq(&MoebiusMap::identity(), 1e-15));
    }

    #[test]
    fn out_of_range_letter_rejected() {
        let g = SchottkyGroup::from_generators(vec![phi(1.0, -1.0, 0.1)]).unwrap();
        let w = GroupWord::new(vec![2]).unwrap();
        assert!(matches!(
            g.evaluate_word(&w),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn rank1_circles_disjoint() {
        let g = SchottkyGroup::from_generators(vec![phi(1.0, -1.0, 0.2)]).unwrap();
        let rep = g.validate_classical();
        assert!(rep.pass, "min gap {}", rep.min_gap);
        assert!(rep.min_gap > 0.0);
    }

    #[test]
    fn overlap_detected_for_large_multiplier() {
        let g = SchottkyGroup::from_generators(vec![phi(1.0, -1.0, 0.9), phi(5.0, 3.0, 0.9)])
            .unwrap();
        let rep = g.validate_classical();
        assert!(!rep.pass);
    }

    #[test]
    fn words_up_to_len4_are_loxodromic_for_small_multipliers() {
        let g = SchottkyGroup::from_generators(vec![phi(1.0, -1.0, 0.2), phi(5.0, 3.0, 0.2)])
            .unwrap();
        for w in g.enumerate_reduced_words(4) {
            if w.is_empty() {
                continue;
            }
            let m = g.evaluate_word(&w).unwrap();
            let (_, _, beta) = m.fixed_points_and_multiplier().unwrap();
            assert!(beta.norm() < 1.0, "word {w:?} beta {beta}");
        }
    }

    #[test]
    fn multiplier_invariant_under_cyclic_rotation() {
        let g = SchottkyGroup::from_generators(vec![phi(1.0, -1.0, 0.15), phi(5.0, 3.0, 0.1)])
            .unwrap();
        let w = GroupWord::new(vec![1, 2, -1, 2]).unwrap();
        let (_, _, b0) = g
            .evaluate_word(&w)
            .unwrap()
            .fixed_points_and_multiplier()
            .unwrap();
        let mut r = w;
        for _ in 0..3 {
            r = r.rotated();
            let (_, _, b) = g
                .evaluate_word(&r)
                .unwrap()
                .fixed_points_and_multiplier()
                .unwrap();
            assert!((b - b0).norm() <= 1e-9 * b0.norm(), "rotation {r:?}");
        }
    }
}

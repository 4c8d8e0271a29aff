//! Möbius transformations on the Riemann sphere.

use crate::error::{Error, Result};
use crate::C64;

/// A point on the Riemann sphere: a finite complex number or infinity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpherePoint {
    Finite(C64),
    Infinity,
}

impl SpherePoint {
    pub fn finite(re: f64, im: f64) -> Self {
        SpherePoint::Finite(C64::new(re, im))
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, SpherePoint::Finite(_))
    }

    /// The finite value, if any.
    pub fn value(&self) -> Option<C64> {
        match self {
            SpherePoint::Finite(z) => Some(*z),
            SpherePoint::Infinity => None,
        }
    }

    /// Chordal distance on the sphere (bounded metric, handles infinity).
    pub fn chordal_dist(&self, other: &SpherePoint) -> f64 {
        match (self, other) {
            (SpherePoint::Finite(a), SpherePoint::Finite(b)) => {
                2.0 * (a - b).norm()
                    / ((1.0 + a.norm_sqr()).sqrt() * (1.0 + b.norm_sqr()).sqrt())
            }
            (SpherePoint::Finite(a), SpherePoint::Infinity)
            | (SpherePoint::Infinity, SpherePoint::Finite(a)) => {
                2.0 / (1.0 + a.norm_sqr()).sqrt()
            }
            (SpherePoint::Infinity, SpherePoint::Infinity) => 0.0,
        }
    }
}

impl From<C64> for SpherePoint {
    fn from(z: C64) -> Self {
        SpherePoint::Finite(z)
    }
}

impl From<f64> for SpherePoint {
    fn from(x: f64) -> Self {
        SpherePoint::Finite(C64::new(x, 0.0))
    }
}

/// A projective 2x2 complex matrix acting on the sphere by z -> (az+b)/(cz+d).
///
/// Equality and normalization are projective: the matrix is defined up to a
/// nonzero scalar.
#[derive(Clone, Copy, Debug)]
pub struct MoebiusMap {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
}

const DET_TOL: f64 = 1e-14;

impl MoebiusMap {
    /// Builds a map and checks it is nonsingular.
    pub fn new(a: C64, b: C64, c: C64, d: C64) -> Result<Self> {
        let m = MoebiusMap { a, b, c, d };
        let scale = m.max_entry_norm();
        if m.det().norm() <= DET_TOL * scale * scale {
            return Err(Error::SingularMatrix);
        }
        Ok(m.normalized())
    }

    /// Builds a map without the determinant check. Used for degenerate (rank
    /// one) limits where the map collapses to a constant.
    pub fn new_unchecked(a: C64, b: C64, c: C64, d: C64) -> Self {
        MoebiusMap { a, b, c, d }
    }

    pub fn identity() -> Self {
        MoebiusMap {
            a: C64::new(1.0, 0.0),
            b: C64::new(0.0, 0.0),
            c: C64::new(0.0, 0.0),
            d: C64::new(1.0, 0.0),
        }
    }

    pub fn det(&self) -> C64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> C64 {
        self.a + self.d
    }

    fn max_entry_norm(&self) -> f64 {
        self.a
            .norm()
            .max(self.b.norm())
            .max(self.c.norm())
            .max(self.d.norm())
    }

    /// Divides all entries by the entry of largest magnitude, so the largest
    /// entry becomes exactly 1. Keeps long products away from overflow.
    pub fn normalized(&self) -> Self {
        self.normalized_with_scale().0
    }

    /// Normalization along with the divisor that was applied.
    pub fn normalized_with_scale(&self) -> (Self, C64) {
        let entries = [self.a, self.b, self.c, self.d];
        let mut best = 0usize;
        for (k, e) in entries.iter().enumerate() {
            if e.norm() > entries[best].norm() {
                best = k;
            }
        }
        let s = entries[best];
        if s.norm() == 0.0 {
            return (*self, C64::new(1.0, 0.0));
        }
        (
            MoebiusMap {
                a: self.a / s,
                b: self.b / s,
                c: self.c / s,
                d: self.d / s,
            },
            s,
        )
    }

    /// Matrix product without renormalization.
    pub fn compose_raw(&self, other: &MoebiusMap) -> MoebiusMap {
        MoebiusMap {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    /// Matrix product `self * other` (as functions: self after other),
    /// renormalized.
    pub fn compose(&self, other: &MoebiusMap) -> MoebiusMap {
        self.compose_raw(other).normalized()
    }

    pub fn inverse(&self) -> MoebiusMap {
        MoebiusMap {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
        .normalized()
    }

    /// Applies the map; total on the sphere.
    pub fn apply(&self, z: SpherePoint) -> SpherePoint {
        match z {
            SpherePoint::Infinity => {
                if self.c.norm() == 0.0 {
                    SpherePoint::Infinity
                } else {
                    SpherePoint::Finite(self.a / self.c)
                }
            }
            SpherePoint::Finite(z) => {
                let den = self.c * z + self.d;
                if den.norm() == 0.0 {
                    SpherePoint::Infinity
                } else {
                    SpherePoint::Finite((self.a * z + self.b) / den)
                }
            }
        }
    }

    /// Applies to a finite point, assuming the image is finite.
    pub fn apply_c(&self, z: C64) -> C64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    /// d(gamma z)/dz = det / (cz + d)^2.
    pub fn derivative_at(&self, z: C64) -> C64 {
        let den = self.c * z + self.d;
        self.det() / (den * den)
    }

    /// Loxodromic test: trace^2/det off the real interval [0, 4].
    pub fn is_loxodromic(&self) -> bool {
        let t = self.trace();
        let r = t * t / self.det();
        !(r.im.abs() < 1e-12 && r.re > -1e-12 && r.re < 4.0 + 1e-12)
    }

    /// Attractive fixed point, repulsive fixed point and multiplier.
    ///
    /// Solves the fixed-point quadratic c z^2 + (d - a) z - b = 0; the
    /// attractive root is the one where |derivative| < 1, and the multiplier
    /// is the derivative there.
    pub fn fixed_points_and_multiplier(&self) -> Result<(SpherePoint, SpherePoint, C64)> {
        let scale = self.max_entry_norm();
        if self.c.norm() <= 1e-15 * scale {
            // Affine map z -> (a z + b)/d: fixed points infinity and b/(d-a).
            if (self.d - self.a).norm() <= 1e-15 * scale {
                return Err(Error::ParabolicOrEllipticMap);
            }
            let zf = self.b / (self.d - self.a);
            let mult_fin = self.a / self.d; // derivative at the finite point
            let mult_inf = self.d / self.a; // derivative at infinity (w = 1/z chart)
            return classify(
                SpherePoint::Infinity,
                SpherePoint::Finite(zf),
                mult_inf,
                mult_fin,
            );
        }
        let bq = self.d - self.a;
        let disc = bq * bq + 4.0 * self.c * self.b;
        let mut s = disc.sqrt();
        // pick the branch that avoids cancellation in -bq - s
        if (-bq - s).norm() < (-bq + s).norm() {
            s = -s;
        }
        let z1 = (-bq - s) / (2.0 * self.c);
        // second root from the product z1 z2 = -b/c
        let z2 = if z1.norm() > 0.0 {
            -self.b / (self.c * z1)
        } else {
            (-bq + s) / (2.0 * self.c)
        };
        let m1 = self.derivative_at(z1);
        let m2 = self.derivative_at(z2);
        classify(SpherePoint::Finite(z1), SpherePoint::Finite(z2), m1, m2)
    }

    /// Projective equality within `tol` after normalization.
    pub fn approx_eq(&self, other: &MoebiusMap, tol: f64) -> bool {
        let p = self.normalized();
        let q = other.normalized();
        // align phases via the largest entry of p
        let entries_p = [p.a, p.b, p.c, p.d];
        let entries_q = [q.a, q.b, q.c, q.d];
        let mut best = 0usize;
        for (k, e) in entries_p.iter().enumerate() {
            if e.norm() > entries_p[best].norm() {
                best = k;
            }
        }
        if entries_q[best].norm() == 0.0 {
            return false;
        }
        let phase = entries_p[best] / entries_q[best];
        entries_p
            .iter()
            .zip(entries_q.iter())
            .all(|(x, y)| (x - y * phase).norm() <= tol)
    }
}

fn classify(
    p1: SpherePoint,
    p2: SpherePoint,
    m1: C64,
    m2: C64,
) -> Result<(SpherePoint, SpherePoint, C64)> {
    let n1 = m1.norm();
    let n2 = m2.norm();
    if (n1 - 1.0).abs() < 1e-10 && (n2 - 1.0).abs() < 1e-10 {
        return Err(Error::ParabolicOrEllipticMap);
    }
    if n1 < 1.0 {
        Ok((p1, p2, m1))
    } else {
        Ok((p2, p1, m2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_fixes_points() {
        let id = MoebiusMap::identity();
        let z = SpherePoint::finite(3.0, 4.0);
        assert_eq!(id.apply(z), z);
    }

    #[test]
    fn inversion_at_infinity() {
        let m = MoebiusMap::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        assert_eq!(
            m.apply(SpherePoint::Infinity),
            SpherePoint::Finite(c(0.0, 0.0))
        );
    }

    #[test]
    fn compose_with_identity_and_inverse() {
        let m = MoebiusMap::new(c(2.0, 1.0), c(0.5, -0.3), c(0.1, 0.0), c(1.0, 0.2)).unwrap();
        assert!(m.compose(&MoebiusMap::identity()).approx_eq(&m, 1e-14));
        assert!(m
            .compose(&m.inverse())
            .approx_eq(&MoebiusMap::identity(), 1e-13));
    }

    #[test]
    fn diagonal_multiplier() {
        // z -> 4z: fixed points 0 and infinity, attractive infinity, multiplier 0.25.
        let m = MoebiusMap::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.25, 0.0)).unwrap();
        let (att, rep, beta) = m.fixed_points_and_multiplier().unwrap();
        assert_eq!(att, SpherePoint::Infinity);
        assert_eq!(rep, SpherePoint::Finite(c(0.0, 0.0)));
        assert!((beta - c(0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn conjugation_preserves_multiplier() {
        let m = MoebiusMap::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.2, 0.1)).unwrap();
        let t = MoebiusMap::new(c(1.0, 0.5), c(2.0, 0.0), c(0.3, 0.0), c(1.0, 0.0)).unwrap();
        let conj = t.compose(&m).compose(&t.inverse());
        let (_, _, b0) = m.fixed_points_and_multiplier().unwrap();
        let (a1, _, b1) = conj.fixed_points_and_multiplier().unwrap();
        assert!((b0 - b1).norm() < 1e-12);
        // fixed points transported by t
        let (a0, _, _) = m.fixed_points_and_multiplier().unwrap();
        assert!(t.apply(a0).chordal_dist(&a1) < 1e-10);
    }

    #[test]
    fn compose_squares_the_multiplier() {
        // phi with multiplier y composed with itself has multiplier y^2
        let y = C64::new(0.1, 0.0);
        let p = c(1.0, 0.0);
        let q = c(-1.0, 0.0);
        let phi = MoebiusMap::new(p - q * y, -p * q * (1.0 - y), 1.0 - y, -q + p * y).unwrap();
        let (_, _, b1) = phi.fixed_points_and_multiplier().unwrap();
        assert!((b1 - y).norm() < 1e-14);
        let (att, rep, b2) = phi.compose(&phi).fixed_points_and_multiplier().unwrap();
        assert!((b2 - y * y).norm() < 1e-13, "multiplier {b2}");
        assert!(att.chordal_dist(&SpherePoint::Finite(p)) < 1e-12);
        assert!(rep.chordal_dist(&SpherePoint::Finite(q)) < 1e-12);
    }

    #[test]
    fn parabolic_rejected() {
        // z -> z + 1 is parabolic.
        let m = MoebiusMap::new(c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        assert!(matches!(
            m.fixed_points_and_multiplier(),
            Err(Error::ParabolicOrEllipticMap)
        ));
    }

    #[test]
    fn projective_scaling_exact_for_pow2() {
        let m = MoebiusMap::new_unchecked(c(2.0, 1.0), c(0.5, -0.3), c(0.1, 0.0), c(1.0, 0.2));
        let lam = 4.0;
        let scaled = MoebiusMap::new_unchecked(m.a * lam, m.b * lam, m.c * lam, m.d * lam);
        let z = c(0.7, -1.3);
        assert_eq!(m.apply_c(z), scaled.apply_c(z));
    }
}

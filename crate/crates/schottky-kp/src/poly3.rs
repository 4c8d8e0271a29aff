//! Truncated trivariate Taylor polynomials, used to turn tau/theta
//! directional-derivative tables into logarithmic derivatives.

use crate::C64;

/// Polynomial in (x, y, w) truncated at total degree `deg`.
#[derive(Clone, Debug)]
pub(crate) struct Poly3 {
    pub deg: usize,
    side: usize,
    c: Vec<C64>,
}

impl Poly3 {
    pub fn zero(deg: usize) -> Self {
        let side = deg + 1;
        Poly3 {
            deg,
            side,
            c: vec![C64::new(0.0, 0.0); side * side * side],
        }
    }

    #[inline]
    fn idx(&self, a: usize, b: usize, d: usize) -> usize {
        (a * self.side + b) * self.side + d
    }

    pub fn get(&self, a: usize, b: usize, d: usize) -> C64 {
        if a + b + d > self.deg {
            return C64::new(0.0, 0.0);
        }
        self.c[self.idx(a, b, d)]
    }

    pub fn set(&mut self, a: usize, b: usize, d: usize, v: C64) {
        let i = self.idx(a, b, d);
        self.c[i] = v;
    }

    pub fn add_assign(&mut self, other: &Poly3) {
        for (x, y) in self.c.iter_mut().zip(other.c.iter()) {
            *x += *y;
        }
    }

    pub fn scale(&mut self, s: C64) {
        for x in self.c.iter_mut() {
            *x *= s;
        }
    }

    pub fn mul(&self, other: &Poly3) -> Poly3 {
        let mut out = Poly3::zero(self.deg);
        for a1 in 0..=self.deg {
            for b1 in 0..=(self.deg - a1) {
                for d1 in 0..=(self.deg - a1 - b1) {
                    let v1 = self.c[self.idx(a1, b1, d1)];
                    if v1.norm() == 0.0 {
                        continue;
                    }
                    for a2 in 0..=(self.deg - a1 - b1 - d1) {
                        for b2 in 0..=(self.deg - a1 - b1 - d1 - a2) {
                            for d2 in 0..=(self.deg - a1 - b1 - d1 - a2 - b2) {
                                let v2 = other.c[other.idx(a2, b2, d2)];
                                if v2.norm() == 0.0 {
                                    continue;
                                }
                                let i = out.idx(a1 + a2, b1 + b2, d1 + d2);
                                out.c[i] += v1 * v2;
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// log of the polynomial (constant term must be nonzero):
    /// log(p0) + sum_{k>=1} (-1)^{k+1} t^k / k with t = p/p0 - 1.
    pub fn log(&self) -> Option<Poly3> {
        let p0 = self.get(0, 0, 0);
        if p0.norm() == 0.0 {
            return None;
        }
        let mut t = self.clone();
        t.scale(1.0 / p0);
        t.set(0, 0, 0, C64::new(0.0, 0.0));
        let mut out = Poly3::zero(self.deg);
        out.set(0, 0, 0, p0.ln());
        let mut power = t.clone();
        for k in 1..=self.deg {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            let mut term = power.clone();
            term.scale(C64::new(sign / k as f64, 0.0));
            out.add_assign(&term);
            if k < self.deg {
                power = power.mul(&t);
            }
        }
        Some(out)
    }

    /// Partial derivative value at the origin: d^{a+b+d} / dx^a dy^b dw^d.
    pub fn derivative(&self, a: usize, b: usize, d: usize) -> C64 {
        fn fact(n: usize) -> f64 {
            (1..=n).map(|k| k as f64).product()
        }
        self.get(a, b, d) * fact(a) * fact(b) * fact(d)
    }
}

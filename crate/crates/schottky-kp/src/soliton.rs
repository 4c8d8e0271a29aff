//! Soliton tau functions: the full rational degeneration limit. A finite sum
//! of exponentials over {0,1}^g with cross-ratio interaction coefficients;
//! all derivatives are analytic term by term.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::poly3::Poly3;
use crate::tau::{kp_terms, KpSample, ResidualReport, TauFunction};
use crate::C64;

/// Parameters of the soliton family: marked points x_{+-i}, the KP marked
/// point, integer offsets n_i, free exponential constants alpha'_i, and the
/// number of active times.
#[derive(Clone, Debug)]
pub struct SolitonData {
    pub x_plus: Vec<C64>,
    pub x_minus: Vec<C64>,
    pub marked: C64,
    pub offsets: Vec<i64>,
    pub alpha: Vec<C64>,
    pub times: usize,
}

impl SolitonData {
    pub fn genus(&self) -> usize {
        self.x_plus.len()
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.genus();
        if self.x_minus.len() != g || self.offsets.len() != g || self.alpha.len() != g {
            return Err(Error::Config("soliton data length mismatch".into()));
        }
        if self.times == 0 {
            return Err(Error::Config("soliton data needs at least one time".into()));
        }
        let mut pts: Vec<C64> = self
            .x_plus
            .iter()
            .chain(self.x_minus.iter())
            .copied()
            .collect();
        pts.push(self.marked);
        for (a, pa) in pts.iter().enumerate() {
            for pb in pts.iter().skip(a + 1) {
                if (pa - pb).norm() < 1e-12 * (1.0 + pa.norm()) {
                    return Err(Error::Config("soliton points must be distinct".into()));
                }
            }
        }
        Ok(())
    }

    /// Interaction coefficient
    /// CR_ij = (x_i - x_j)(x_-i - x_-j) / ((x_-i - x_j)(x_i - x_-j)).
    pub fn cross_ratio(&self, i: usize, j: usize) -> Result<C64> {
        let num = (self.x_plus[i] - self.x_plus[j]) * (self.x_minus[i] - self.x_minus[j]);
        let den = (self.x_minus[i] - self.x_plus[j]) * (self.x_plus[i] - self.x_minus[j]);
        if den.norm() < 1e-14 {
            return Err(Error::DegenerateCrossRatio);
        }
        Ok(num / den)
    }

    /// Limit Laurent coefficient
    /// kappa_{i,m} = -(1/(x_i - x_t)^m - 1/(x_-i - x_t)^m).
    pub fn kappa(&self, i: usize, m: usize) -> C64 {
        let a = 1.0 / (self.x_plus[i] - self.marked);
        let b = 1.0 / (self.x_minus[i] - self.marked);
        -(a.powu(m as u32) - b.powu(m as u32))
    }

    /// Exponent E_i(t) = alpha'_i + sum_m kappa_{i,m} t_m.
    fn exponent(&self, i: usize, t: &[C64]) -> C64 {
        let mut e = self.alpha[i];
        for (m, &tm) in t.iter().enumerate() {
            e += self.kappa(i, m + 1) * tm;
        }
        e
    }

    /// All 2^g terms: coefficient and time-flow weights for the first three
    /// times, sufficient for KP evaluation at a base point.
    fn terms(&self, t: &[C64]) -> Result<Vec<(C64, [C64; 3])>> {
        let g = self.genus();
        let mut out = Vec::with_capacity(1usize << g);
        for mask in 0u32..(1u32 << g) {
            let e: Vec<i64> = (0..g)
                .map(|i| i64::from(mask >> i & 1 == 1) - self.offsets[i])
                .collect();
            let mut coef = C64::new(1.0, 0.0);
            for i in 0..g {
                for j in (i + 1)..g {
                    let cr = self.cross_ratio(i, j)?;
                    let pw = e[i] * e[j];
                    coef *= cr.powi(pw as i32);
                }
            }
            let mut expo = C64::new(0.0, 0.0);
            for i in 0..g {
                expo += self.exponent(i, t) * e[i] as f64;
            }
            coef *= expo.exp();
            let mut weights = [C64::new(0.0, 0.0); 3];
            for (m, w) in weights.iter_mut().enumerate() {
                for i in 0..g {
                    *w += self.kappa(i, m + 1) * e[i] as f64;
                }
            }
            out.push((coef, weights));
        }
        Ok(out)
    }

    /// tau(t) as a finite exponential sum.
    pub fn tau(&self, t: &[C64]) -> Result<C64> {
        self.validate()?;
        let g = self.genus();
        let mut acc = C64::new(0.0, 0.0);
        for mask in 0u32..(1u32 << g) {
            let e: Vec<i64> = (0..g)
                .map(|i| i64::from(mask >> i & 1 == 1) - self.offsets[i])
                .collect();
            let mut coef = C64::new(1.0, 0.0);
            for i in 0..g {
                for j in (i + 1)..g {
                    coef *= self.cross_ratio(i, j)?.powi((e[i] * e[j]) as i32);
                }
            }
            let mut expo = C64::new(0.0, 0.0);
            for i in 0..g {
                expo += self.exponent(i, t) * e[i] as f64;
            }
            acc += coef * expo.exp();
        }
        Ok(acc)
    }

    /// Taylor series of tau around (x, t2, t3) to the given total degree;
    /// exact since every term is an exponential.
    fn tau_series(&self, x: f64, t2: f64, t3: f64, deg: usize) -> Result<Poly3> {
        let mut t = vec![C64::new(0.0, 0.0); self.times.max(3)];
        t[0] = C64::new(x, 0.0);
        t[1] = C64::new(t2, 0.0);
        t[2] = C64::new(t3, 0.0);
        let terms = self.terms(&t)?;
        let mut out = Poly3::zero(deg);
        let inv_fact: Vec<f64> = {
            let mut v = vec![1.0f64];
            for k in 1..=deg {
                v.push(v[k - 1] / k as f64);
            }
            v
        };
        for (coef, w) in terms {
            let mut pw = [[C64::new(1.0, 0.0); 8]; 3];
            for k in 0..3 {
                for m in 1..=deg {
                    pw[k][m] = pw[k][m - 1] * w[k];
                }
            }
            for a in 0..=deg {
                for b in 0..=(deg - a) {
                    for d in 0..=(deg - a - b) {
                        let cur = out.get(a, b, d);
                        out.set(
                            a,
                            b,
                            d,
                            cur + coef
                                * pw[0][a]
                                * pw[1][b]
                                * pw[2][d]
                                * (inv_fact[a] * inv_fact[b] * inv_fact[d]),
                        );
                    }
                }
            }
        }
        Ok(out)
    }

    /// Sum of term magnitudes, the scale against which a tau zero is judged.
    fn magnitude_scale(&self, t: &[C64]) -> Result<f64> {
        Ok(self.terms(t)?.iter().map(|(coef, _)| coef.norm()).sum())
    }

    fn checked_log_series(&self, x: f64, t2: f64, t3: f64, deg: usize) -> Result<Poly3> {
        let series = self.tau_series(x, t2, t3, deg)?;
        let mut t = vec![C64::new(0.0, 0.0); self.times.max(3)];
        t[0] = C64::new(x, 0.0);
        t[1] = C64::new(t2, 0.0);
        t[2] = C64::new(t3, 0.0);
        let scale = self.magnitude_scale(&t)?;
        if series.get(0, 0, 0).norm() <= 1e-12 * scale {
            return Err(Error::TauZeroOnGrid);
        }
        series.log().ok_or(Error::TauZeroOnGrid)
    }

    /// u = d^2/dx^2 log tau at a grid point (the rational limit has q = 0).
    pub fn u(&self, x: f64, t2: f64, t3: f64) -> Result<C64> {
        let logs = self.checked_log_series(x, t2, t3, 2)?;
        Ok(logs.derivative(2, 0, 0))
    }
}

impl TauFunction for SolitonData {
    fn times(&self) -> usize {
        self.times
    }

    fn eval(&self, t: &[C64]) -> Result<C64> {
        self.tau(t)
    }
}

/// KP residual of the soliton solution u = d^2_x log tau, with all
/// derivatives taken analytically term by term.
pub fn soliton_kp_residual(s: &SolitonData, grid: &[(f64, f64, f64)]) -> Result<ResidualReport> {
    s.validate()?;
    let samples: Vec<(f64, f64, f64, C64, [C64; 4])> = grid
        .par_iter()
        .map(|&(x, t2, t3)| {
            let logs = s.checked_log_series(x, t2, t3, 6)?;
            let (u, terms) = kp_terms(&logs, C64::new(0.0, 0.0));
            Ok((x, t2, t3, u, terms))
        })
        .collect::<Result<Vec<_>>>()?;
    let term_scale = samples
        .iter()
        .flat_map(|(_, _, _, _, t)| t.iter().map(|v| v.norm()))
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let mut rows = Vec::with_capacity(samples.len());
    let mut max_n = 0.0f64;
    let mut sum_sq = 0.0f64;
    for (x, t2, t3, u, terms) in samples {
        let residual = (terms[0] - terms[1] + terms[2] + terms[3]).norm() / term_scale;
        max_n = max_n.max(residual);
        sum_sq += residual * residual;
        rows.push(KpSample {
            x,
            t2,
            t3,
            u,
            residual,
        });
    }
    let rms = if rows.is_empty() {
        0.0
    } else {
        (sum_sq / rows.len() as f64).sqrt()
    };
    Ok(ResidualReport {
        samples: rows,
        max_normalized: max_n,
        rms_normalized: rms,
        term_scale,
    })
}

/// Canonical one/two/g-soliton data on the M-curve point layout
/// (-1, 1, 3, 5, ...), marked point to the left.
pub fn standard_soliton(g: usize, alpha: Vec<C64>, times: usize) -> SolitonData {
    let x_plus: Vec<C64> = (1..=g)
        .map(|i| C64::new(-1.0 + (2 * i - 1) as f64 * 2.0, 0.0))
        .collect();
    let x_minus: Vec<C64> = (1..=g)
        .map(|i| C64::new(-1.0 + (2 * i - 2) as f64 * 2.0, 0.0))
        .collect();
    SolitonData {
        x_plus,
        x_minus,
        marked: C64::new(-3.0, 0.0),
        offsets: vec![0; g],
        alpha,
        times,
    }
}

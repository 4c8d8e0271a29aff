//! Riemann theta function in the multiplicative-argument convention:
//!
//!   Theta(z) = sum_{v in Z^g} exp(pi i v^T Z v) prod_i exp(z_i)^{v_i}.
//!
//! The argument enters as exp(z_i)^{v_i}; there is no 2 pi i on z, so
//! Theta(z + 2 pi i e_k) = Theta(z) exactly.

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigenvalues, CMat};
use crate::poly3::Poly3;
use crate::C64;

const PI: f64 = std::f64::consts::PI;

/// Smallest eigenvalue of Im Z; must be positive for convergence. The empty
/// (genus zero) matrix counts as positive definite.
pub fn min_im_eigenvalue(z_mat: &CMat) -> f64 {
    if z_mat.rows == 0 {
        return f64::INFINITY;
    }
    let eigs = symmetric_eigenvalues(&z_mat.imag_part(), z_mat.rows);
    eigs.first().copied().unwrap_or(f64::NAN)
}

fn check_im_positive(z_mat: &CMat) -> Result<f64> {
    let min_eig = min_im_eigenvalue(z_mat);
    if !(min_eig > 0.0) {
        return Err(Error::RiemannRelationViolated { min_eig });
    }
    Ok(min_eig)
}

/// Iterates v over the box |v_i| <= r and accumulates f(v, weight) where
/// weight = exp(pi i v Z v + v . z).
fn lattice_sum<F: FnMut(&[i64], C64)>(z_mat: &CMat, z: &[C64], r: i64, mut f: F) {
    let g = z_mat.rows;
    let mut v = vec![-r; g];
    loop {
        // quadratic form and linear term
        let mut quad = C64::new(0.0, 0.0);
        for i in 0..g {
            for j in 0..g {
                quad += z_mat.at(i, j) * (v[i] * v[j]) as f64;
            }
        }
        let mut lin = C64::new(0.0, 0.0);
        for i in 0..g {
            lin += z[i] * v[i] as f64;
        }
        let w = (C64::new(0.0, PI) * quad + lin).exp();
        f(&v, w);
        // odometer
        let mut k = 0usize;
        loop {
            if k == g {
                return;
            }
            if v[k] < r {
                v[k] += 1;
                break;
            }
            v[k] = -r;
            k += 1;
        }
    }
}

/// Suggested box radius from the Gaussian decay of the terms: the terms peak
/// near v* = Im(z-part) shift and decay with rate pi lambda_min(Im Z).
pub fn suggest_radius(z_mat: &CMat, z: &[C64], eps: f64) -> Result<i64> {
    let min_eig = check_im_positive(z_mat)?;
    let g = z_mat.rows;
    // crude bound for the peak shift |v*|: |Re z| / (2 pi lambda_min)
    let re_max = z.iter().map(|c| c.re.abs()).fold(0.0f64, f64::max);
    let shift = re_max / (2.0 * PI * min_eig);
    let gauss = (-(eps.min(1e-3)).ln() / (PI * min_eig)).sqrt();
    let r = (shift + gauss).ceil() as i64 + 2;
    Ok(r.clamp(1, 64).max(g as i64))
}

/// Theta value at fixed box radius r.
pub fn theta_raw(z_mat: &CMat, z: &[C64], r: i64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    lattice_sum(z_mat, z, r, |_v, w| acc += w);
    acc
}

/// Theta with the radius-stability check: enlarging the box by 2 must not
/// change the value by more than `tol` relative.
pub fn theta(z_mat: &CMat, z: &[C64], r: i64, tol: f64) -> Result<C64> {
    check_im_positive(z_mat)?;
    let v1 = theta_raw(z_mat, z, r);
    let v2 = theta_raw(z_mat, z, r + 2);
    let scale = theta_scale(z_mat, z, r + 2);
    if (v2 - v1).norm() > tol * scale.max(1e-300) {
        return Err(Error::LatticeNotConverged { radius: r });
    }
    Ok(v2)
}

/// Magnitude scale of the lattice sum (sum of term magnitudes), used to judge
/// relative smallness of theta values.
pub fn theta_scale(z_mat: &CMat, z: &[C64], r: i64) -> f64 {
    let mut acc = 0.0f64;
    lattice_sum(z_mat, z, r, |_v, w| acc += w.norm());
    acc
}

/// Directional derivatives: value of
/// d^m1/de1^m1 ... Theta(z + e1 d1 + e2 d2 + ...) at e = 0 for each requested
/// multi-index over the given directions. One lattice pass computes them all.
pub fn theta_directional_derivatives(
    z_mat: &CMat,
    z: &[C64],
    directions: &[Vec<C64>],
    multi_indices: &[Vec<u32>],
    r: i64,
) -> Result<Vec<C64>> {
    check_im_positive(z_mat)?;
    let g = z_mat.rows;
    for d in directions {
        if d.len() != g {
            return Err(Error::Config("direction dimension mismatch".into()));
        }
    }
    let mut acc = vec![C64::new(0.0, 0.0); multi_indices.len()];
    lattice_sum(z_mat, z, r, |v, w| {
        // v . d_k for each direction
        let dots: Vec<C64> = directions
            .iter()
            .map(|d| {
                let mut s = C64::new(0.0, 0.0);
                for i in 0..g {
                    s += d[i] * v[i] as f64;
                }
                s
            })
            .collect();
        for (slot, mi) in acc.iter_mut().zip(multi_indices.iter()) {
            let mut factor = C64::new(1.0, 0.0);
            for (k, &m) in mi.iter().enumerate() {
                for _ in 0..m {
                    factor *= dots[k];
                }
            }
            *slot += w * factor;
        }
    });
    Ok(acc)
}

/// Taylor expansion of Theta(z + x d1 + y d2 + w d3) at the origin, truncated
/// at total degree `deg`, via one lattice pass.
pub(crate) fn theta_series3(
    z_mat: &CMat,
    z: &[C64],
    dirs: &[Vec<C64>; 3],
    deg: usize,
    r: i64,
) -> Poly3 {
    let g = z_mat.rows;
    let mut out = Poly3::zero(deg);
    let inv_fact: Vec<f64> = {
        let mut v = vec![1.0f64];
        for k in 1..=deg {
            v.push(v[k - 1] / k as f64);
        }
        v
    };
    lattice_sum(z_mat, z, r, |v, w| {
        let mut dots = [C64::new(0.0, 0.0); 3];
        for (k, d) in dirs.iter().enumerate() {
            for i in 0..g {
                dots[k] += d[i] * v[i] as f64;
            }
        }
        // powers
        let mut pow = [[C64::new(1.0, 0.0); 7]; 3];
        for k in 0..3 {
            for m in 1..=deg {
                pow[k][m] = pow[k][m - 1] * dots[k];
            }
        }
        for a in 0..=deg {
            for b in 0..=(deg - a) {
                for d in 0..=(deg - a - b) {
                    let coef = w * pow[0][a] * pow[1][b] * pow[2][d]
                        * (inv_fact[a] * inv_fact[b] * inv_fact[d]);
                    let cur = out.get(a, b, d);
                    out.set(a, b, d, cur + coef);
                }
            }
        }
    });
    out
}

//! Contour and path quadrature helpers.

use crate::error::{Error, Result};
use crate::C64;

/// Trapezoid rule for a closed circle contour integral of f dz. Spectrally
/// accurate for integrands analytic in an annulus around the circle.
pub fn circle_integral<F: Fn(C64) -> Result<C64>>(
    center: C64,
    radius: f64,
    n: usize,
    f: F,
) -> Result<C64> {
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..n {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        let dir = C64::new(0.0, 1.0) * C64::from_polar(radius, theta);
        let z = center + C64::from_polar(radius, theta);
        acc += f(z)? * dir;
    }
    Ok(acc * (2.0 * std::f64::consts::PI / n as f64))
}

/// Circle integral with node doubling until two successive values agree.
pub fn circle_integral_adaptive<F: Fn(C64) -> Result<C64>>(
    center: C64,
    radius: f64,
    tol: f64,
    f: F,
) -> Result<C64> {
    let mut n = 256usize;
    let mut prev = circle_integral(center, radius, n, &f)?;
    while n < 8192 {
        n *= 2;
        let cur = circle_integral(center, radius, n, &f)?;
        if (cur - prev).norm() <= tol * (1.0 + cur.norm()) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::FourierNotConverged {
        defect: f64::INFINITY,
    })
}

/// Uniform circle samples f(center + r e^{i theta_k}), k = 0..n.
pub fn circle_samples<F: Fn(C64) -> Result<C64>>(
    center: C64,
    radius: f64,
    n: usize,
    f: F,
) -> Result<Vec<C64>> {
    (0..n)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            f(center + C64::from_polar(radius, theta))
        })
        .collect()
}

/// Discrete Fourier coefficient extraction: given samples of an analytic
/// function on a circle of radius r, returns the Taylor coefficients
/// c_0..c_{m_max} at the center (c_m = a_m / r^m with a_m the DFT).
pub fn taylor_from_circle(samples: &[C64], radius: f64, m_max: usize) -> Vec<C64> {
    let n = samples.len();
    let mut out = Vec::with_capacity(m_max + 1);
    for m in 0..=m_max {
        let mut acc = C64::new(0.0, 0.0);
        for (k, s) in samples.iter().enumerate() {
            let theta = -2.0 * std::f64::consts::PI * (m * k % n) as f64 / n as f64;
            acc += s * C64::from_polar(1.0, theta);
        }
        out.push(acc / (n as f64 * radius.powi(m as i32)));
    }
    out
}

const GL8_X: [f64; 4] = [
    0.1834346424956498,
    0.5255324099163290,
    0.7966664774136267,
    0.9602898564975363,
];
const GL8_W: [f64; 4] = [
    0.3626837833783620,
    0.3137066458778873,
    0.2223810344533745,
    0.1012285362903763,
];

const GL16_X: [f64; 8] = [
    0.0950125098376374,
    0.2816035507792589,
    0.4580167776572274,
    0.6178762444026438,
    0.7554044083550030,
    0.8656312023878318,
    0.9445750230732326,
    0.9894009349916499,
];
const GL16_W: [f64; 8] = [
    0.1894506104550685,
    0.1826034150449236,
    0.1691565193950025,
    0.1495959888165767,
    0.1246289712555339,
    0.0951585116824928,
    0.0622535239386479,
    0.0271524594117541,
];

fn gl_segment<F: Fn(C64) -> Result<C64>>(a: C64, b: C64, f: &F, coarse: bool) -> Result<C64> {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = C64::new(0.0, 0.0);
    if coarse {
        for (x, w) in GL8_X.iter().zip(GL8_W.iter()) {
            acc += (f(mid + half * *x)? + f(mid - half * *x)?) * *w;
        }
    } else {
        for (x, w) in GL16_X.iter().zip(GL16_W.iter()) {
            acc += (f(mid + half * *x)? + f(mid - half * *x)?) * *w;
        }
    }
    Ok(acc * half)
}

/// Adaptive Gauss-Legendre line integral along the segment a -> b.
pub fn segment_integral<F: Fn(C64) -> Result<C64>>(a: C64, b: C64, tol: f64, f: &F) -> Result<C64> {
    fn rec<F: Fn(C64) -> Result<C64>>(
        a: C64,
        b: C64,
        tol: f64,
        f: &F,
        depth: usize,
    ) -> Result<C64> {
        let coarse = gl_segment(a, b, f, true)?;
        let fine = gl_segment(a, b, f, false)?;
        if (fine - coarse).norm() <= tol * (1.0 + fine.norm()) || depth >= 24 {
            if depth >= 24 && (fine - coarse).norm() > 1e3 * tol * (1.0 + fine.norm()) {
                return Err(Error::PathBlocked);
            }
            return Ok(fine);
        }
        let mid = 0.5 * (a + b);
        Ok(rec(a, mid, tol * 0.7, f, depth + 1)? + rec(mid, b, tol * 0.7, f, depth + 1)?)
    }
    rec(a, b, tol, f, 0)
}

/// Integral along a polyline.
pub fn polyline_integral<F: Fn(C64) -> Result<C64>>(
    points: &[C64],
    tol: f64,
    f: &F,
) -> Result<C64> {
    let mut acc = C64::new(0.0, 0.0);
    for w in points.windows(2) {
        acc += segment_integral(w[0], w[1], tol, f)?;
    }
    Ok(acc)
}

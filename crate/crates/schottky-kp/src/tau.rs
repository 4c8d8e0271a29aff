//! Tau functions built from theta functions and Laurent data, the
//! quasi-periodic KP solution u1, the KP-equation residual, wave
//! coefficients, and M-curve reality checks.

use rayon::prelude::*;

use crate::differentials::{laurent_data, LaurentData, TruncationPolicy};
use crate::error::{Error, Result};
use crate::graph::{instantiate_group, marked_point, SchottkyParams, StableGraph};
use crate::group::SchottkyGroup;
use crate::linalg::CMat;
use crate::periods::{period_matrix, PeriodData};
use crate::poly3::Poly3;
use crate::theta::{suggest_radius, theta_raw, theta_scale, theta_series3};
use crate::C64;

const PI: f64 = std::f64::consts::PI;
const TWO_PI: f64 = 2.0 * PI;

/// Theta characteristic (alpha, beta); the line-bundle vector
/// c = 2 pi i (alpha + Z beta) is recomputed from Z on every access.
#[derive(Clone, Debug)]
pub struct Characteristic {
    pub alpha: Vec<C64>,
    pub beta: Vec<f64>,
}

impl Characteristic {
    pub fn zero(g: usize) -> Self {
        Characteristic {
            alpha: vec![C64::new(0.0, 0.0); g],
            beta: vec![0.0; g],
        }
    }

    /// Characteristic with c equal to the given real vector (beta = 0).
    pub fn from_real_c(c: &[f64]) -> Self {
        Characteristic {
            alpha: c
                .iter()
                .map(|&x| C64::new(0.0, -x / TWO_PI))
                .collect(),
            beta: vec![0.0; c.len()],
        }
    }

    pub fn genus(&self) -> usize {
        self.alpha.len()
    }

    /// c = 2 pi i (alpha + Z beta).
    pub fn c_vector(&self, z_mat: &CMat) -> Vec<C64> {
        let g = self.genus();
        let beta_c: Vec<C64> = self.beta.iter().map(|&b| C64::new(b, 0.0)).collect();
        let zb = z_mat.mul_vec(&beta_c);
        (0..g)
            .map(|i| C64::new(0.0, TWO_PI) * (self.alpha[i] + zb[i]))
            .collect()
    }
}

/// Everything needed to evaluate tau(t): period matrix, characteristic and
/// Laurent data (r, q) with M active times.
#[derive(Clone, Debug)]
pub struct TauData {
    pub z_mat: CMat,
    pub chi: Characteristic,
    pub laurent: LaurentData,
    /// lattice radius override (None = automatic from Im Z)
    pub radius: Option<i64>,
    pub tail_tol: f64,
}

impl TauData {
    pub fn new(z_mat: CMat, chi: Characteristic, laurent: LaurentData) -> Result<Self> {
        let g = z_mat.rows;
        if chi.genus() != g || laurent.genus() != g {
            return Err(Error::Config("genus mismatch in tau data".into()));
        }
        let data = TauData {
            z_mat,
            chi,
            laurent,
            radius: None,
            tail_tol: 1e-10,
        };
        // theta must not vanish at c
        let c = data.chi.c_vector(&data.z_mat);
        let r = data.radius_for(&c)?;
        let v = theta_raw(&data.z_mat, &c, r);
        let scale = theta_scale(&data.z_mat, &c, r);
        if v.norm() <= 1e-12 * scale {
            return Err(Error::ThetaZero);
        }
        Ok(data)
    }

    pub fn genus(&self) -> usize {
        self.z_mat.rows
    }

    pub fn times(&self) -> usize {
        self.laurent.times()
    }

    pub(crate) fn radius_for(&self, arg: &[C64]) -> Result<i64> {
        if let Some(r) = self.radius {
            return Ok(r);
        }
        let base = suggest_radius(&self.z_mat, arg, self.tail_tol)?;
        let beta_max = self
            .chi
            .beta
            .iter()
            .map(|b| b.abs())
            .fold(0.0f64, f64::max)
            .ceil() as i64;
        Ok(base + beta_max)
    }

    /// Theta argument c + sum_m r_m t_m.
    pub fn theta_argument(&self, t: &[C64]) -> Result<Vec<C64>> {
        if t.len() > self.times() {
            return Err(Error::Config(format!(
                "{} times supplied but Laurent data has {}",
                t.len(),
                self.times()
            )));
        }
        let g = self.genus();
        let mut arg = self.chi.c_vector(&self.z_mat);
        for (m, &tm) in t.iter().enumerate() {
            for j in 0..g {
                arg[j] += self.laurent.r.at(j, m) * tm;
            }
        }
        Ok(arg)
    }

    /// Quadratic flow factor exp(1/2 sum q_{nm} t_n t_m).
    pub fn quadratic_factor(&self, t: &[C64]) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for (n, &tn) in t.iter().enumerate() {
            for (m, &tm) in t.iter().enumerate() {
                s += self.laurent.q.at(n, m) * tn * tm;
            }
        }
        (0.5 * s).exp()
    }

    /// tau(t) = exp(1/2 sum q t t) Theta(c + sum r_m t_m).
    pub fn tau(&self, t: &[C64]) -> Result<C64> {
        let arg = self.theta_argument(t)?;
        let r = self.radius_for(&arg)?;
        Ok(self.quadratic_factor(t) * theta_raw(&self.z_mat, &arg, r))
    }
}

/// Anything that can be evaluated as a tau function of the KP times.
pub trait TauFunction: Sync {
    fn times(&self) -> usize;
    fn eval(&self, t: &[C64]) -> Result<C64>;
}

impl TauFunction for TauData {
    fn times(&self) -> usize {
        TauData::times(self)
    }

    fn eval(&self, t: &[C64]) -> Result<C64> {
        self.tau(t)
    }
}

/// Builds tau data for a curve: periods, Laurent data and the characteristic.
pub fn tau_data_for_curve(
    graph: &StableGraph,
    params: &SchottkyParams,
    chi: Characteristic,
    m_times: usize,
    policy: &TruncationPolicy,
) -> Result<(TauData, PeriodData, SchottkyGroup)> {
    let group = instantiate_group(graph, params)?;
    let x_t = marked_point(graph, params)?;
    let periods = period_matrix(&group, policy)?;
    let laurent = laurent_data(&group, x_t, m_times, policy)?;
    let data = TauData::new(periods.z.clone(), chi, laurent)?;
    Ok((data, periods, group))
}

/// The quasi-periodic KP solution
/// u1 = d^2/dx^2 log Theta(c + x r1 + t2 r2 + t3 r3) + q_{1,1}.
pub fn u1(data: &TauData, x: f64, t2: f64, t3: f64) -> Result<C64> {
    let (value, _terms) = kp_point(data, x, t2, t3, 2)?;
    Ok(value)
}

/// KP residual terms from a degree-6 log-tau series: returns the solution
/// value u = F_xx + q11 and the four terms with residual = T1 - T2 + T3 + T4,
/// T1 = (3/4) u_{t2 t2}, T2 = d_x u_{t3}, T3 = (1/4) u_xxxx,
/// T4 = 3 (u_x^2 + u u_xx).
pub(crate) fn kp_terms(logs: &Poly3, q11: C64) -> (C64, [C64; 4]) {
    let u = logs.derivative(2, 0, 0) + q11;
    let t1 = 0.75 * logs.derivative(2, 2, 0);
    let t2 = logs.derivative(3, 0, 1);
    let t3 = 0.25 * logs.derivative(6, 0, 0);
    let g300 = logs.derivative(3, 0, 0);
    let g400 = logs.derivative(4, 0, 0);
    let t4 = 3.0 * (g300 * g300 + u * g400);
    (u, [t1, t2, t3, t4])
}

/// Evaluates u1 and, at degree 6, the KP residual terms at one grid point.
fn kp_point(
    data: &TauData,
    x: f64,
    t2: f64,
    t3: f64,
    deg: usize,
) -> Result<(C64, Option<[C64; 4]>)> {
    if data.times() < 3 {
        return Err(Error::Config("KP evaluation needs at least 3 times".into()));
    }
    let t = [C64::new(x, 0.0), C64::new(t2, 0.0), C64::new(t3, 0.0)];
    let arg = data.theta_argument(&t)?;
    let radius = data.radius_for(&arg)? + 2;
    let dirs = [
        data.laurent.r_column(1),
        data.laurent.r_column(2),
        data.laurent.r_column(3),
    ];
    let series = theta_series3(&data.z_mat, &arg, &dirs, deg, radius);
    let theta0 = series.get(0, 0, 0);
    let scale = theta_scale(&data.z_mat, &arg, radius);
    if theta0.norm() <= 1e-12 * scale {
        return Err(Error::ThetaZero);
    }
    let logs = series.log().ok_or(Error::ThetaZero)?;
    let q11 = data.laurent.q_at(1, 1);
    if deg < 6 {
        return Ok((logs.derivative(2, 0, 0) + q11, None));
    }
    let (u, terms) = kp_terms(&logs, q11);
    Ok((u, Some(terms)))
}

/// One row of a KP residual evaluation.
#[derive(Clone, Copy, Debug)]
pub struct KpSample {
    pub x: f64,
    pub t2: f64,
    pub t3: f64,
    pub u: C64,
    /// |residual| normalized by the largest term magnitude at this point
    pub residual: f64,
}

/// KP residual report over a grid.
#[derive(Clone, Debug)]
pub struct ResidualReport {
    pub samples: Vec<KpSample>,
    pub max_normalized: f64,
    pub rms_normalized: f64,
    /// largest single-term magnitude over the grid
    pub term_scale: f64,
}

fn assemble_report(samples: Vec<(f64, f64, f64, C64, [C64; 4])>) -> ResidualReport {
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
    ResidualReport {
        samples: rows,
        max_normalized: max_n,
        rms_normalized: rms,
        term_scale,
    }
}

/// Evaluates the KP equation residual
/// (3/4) u_{t2 t2} - d/dx (u_{t3} - (1/4) u_xxx - 3 u u_x)
/// with analytic theta derivatives on the given grid points.
pub fn kp_residual(data: &TauData, grid: &[(f64, f64, f64)]) -> Result<ResidualReport> {
    let samples: Vec<(f64, f64, f64, C64, [C64; 4])> = grid
        .par_iter()
        .map(|&(x, t2, t3)| {
            let (u, terms) = kp_point(data, x, t2, t3, 6)?;
            Ok((x, t2, t3, u, terms.expect("degree 6 requested")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble_report(samples))
}

/// Reality diagnostics for M-curve tau data (Theorem-8.1-style checks).
#[derive(Clone, Debug)]
pub struct RealityReport {
    /// max |Im tau| / |tau| over the sample set
    pub max_rel_imag: f64,
    /// max |Im exp(2 pi i Z_ij)| / |exp(2 pi i Z_ij)|
    pub max_period_imag: f64,
    /// exp(pi i Z_ii) values; all must be real in (0, 1) for M-curves
    pub diag_roots: Vec<C64>,
    pub diag_roots_in_unit_interval: bool,
}

/// Evaluates tau on real t samples and checks the reality structure of the
/// period matrix.
pub fn reality_check(data: &TauData, t_samples: &[Vec<f64>]) -> Result<RealityReport> {
    let mut max_rel_imag = 0.0f64;
    let rel_imags: Vec<f64> = t_samples
        .par_iter()
        .map(|ts| {
            let t: Vec<C64> = ts.iter().map(|&x| C64::new(x, 0.0)).collect();
            let v = data.tau(&t)?;
            Ok(v.im.abs() / v.norm().max(1e-300))
        })
        .collect::<Result<Vec<_>>>()?;
    for v in rel_imags {
        max_rel_imag = max_rel_imag.max(v);
    }
    let g = data.genus();
    let mut max_period_imag = 0.0f64;
    for i in 0..g {
        for j in 0..g {
            let e = (C64::new(0.0, TWO_PI) * data.z_mat.at(i, j)).exp();
            max_period_imag = max_period_imag.max(e.im.abs() / e.norm().max(1e-300));
        }
    }
    let mut diag_roots = Vec::with_capacity(g);
    let mut in_interval = true;
    for i in 0..g {
        let root = (C64::new(0.0, PI) * data.z_mat.at(i, i)).exp();
        in_interval &= root.im.abs() < 1e-7 * root.norm().max(1e-300)
            && root.re > 0.0
            && root.re < 1.0;
        diag_roots.push(root);
    }
    Ok(RealityReport {
        max_rel_imag,
        max_period_imag,
        diag_roots,
        diag_roots_in_unit_interval: in_interval,
    })
}

/// Sampling policy for Cauchy extraction of wave coefficients.
#[derive(Clone, Copy, Debug)]
pub struct WavePolicy {
    /// circle radius as a fraction of the estimated distance to the nearest
    /// tau zero along the [alpha] curve
    pub radius_factor: f64,
    pub samples: usize,
    pub max_halvings: usize,
}

impl Default for WavePolicy {
    fn default() -> Self {
        WavePolicy {
            radius_factor: 0.1,
            samples: 64,
            max_halvings: 4,
        }
    }
}

/// The shifted time vector t - [alpha], [alpha] = (alpha, alpha^2/2, ...),
/// truncated to the active times.
fn shift_times(t: &[C64], alpha: C64, m_times: usize) -> Vec<C64> {
    let mut out: Vec<C64> = t.to_vec();
    out.resize(m_times, C64::new(0.0, 0.0));
    let mut p = C64::new(1.0, 0.0);
    for (m, slot) in out.iter_mut().enumerate() {
        p *= alpha;
        *slot -= p / (m + 1) as f64;
    }
    out
}

/// Coefficients w_1..w_K of tau(t - [alpha]) / tau(t) = 1 + sum w_k alpha^k,
/// extracted by Cauchy sampling on a circle whose radius stays clear of tau
/// zeros.
pub fn wave_coefficients(
    tau: &dyn TauFunction,
    t: &[C64],
    k_max: usize,
    policy: &WavePolicy,
) -> Result<Vec<C64>> {
    let m_times = tau.times();
    let tau0 = tau.eval(t)?;
    if tau0.norm() < 1e-300 {
        return Err(Error::TauZeroOnGrid);
    }
    // coarse estimate of the distance to the nearest zero along [alpha]
    let ladder = [0.05f64, 0.1, 0.2, 0.4, 0.8, 1.6, 3.2];
    let mut dist_est = *ladder.last().unwrap();
    'ladder: for &rho in &ladder {
        for k in 0..8 {
            let alpha = C64::from_polar(rho, TWO_PI * k as f64 / 8.0);
            let v = tau.eval(&shift_times(t, alpha, m_times))?;
            if v.norm() < 0.05 * tau0.norm() {
                dist_est = rho;
                break 'ladder;
            }
        }
    }
    let mut rho = (policy.radius_factor * dist_est).max(1e-3);
    'outer: for halving in 0..=policy.max_halvings {
        let n = policy.samples.max(4 * (k_max + 1)).next_power_of_two();
        let mut samples = Vec::with_capacity(n);
        for k in 0..n {
            let alpha = C64::from_polar(rho, TWO_PI * k as f64 / n as f64);
            let v = tau.eval(&shift_times(t, alpha, m_times))?;
            if v.norm() < 1e-10 * tau0.norm() {
                if halving == policy.max_halvings {
                    return Err(Error::RatioPoleOnCircle);
                }
                rho *= 0.5;
                continue 'outer;
            }
            samples.push(v / tau0);
        }
        let coeffs = crate::quad::taylor_from_circle(&samples, rho, k_max);
        // sanity: the constant coefficient of the ratio must be 1
        if (coeffs[0] - C64::new(1.0, 0.0)).norm() > 1e-6 {
            return Err(Error::FourierNotConverged {
                defect: (coeffs[0] - C64::new(1.0, 0.0)).norm(),
            });
        }
        return Ok(coeffs[1..].to_vec());
    }
    Err(Error::RatioPoleOnCircle)
}

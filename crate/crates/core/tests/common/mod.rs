//! Independent reference computations shared by the integration suites.
//! Nothing here calls into the estimators under test.

#![allow(dead_code)]

pub mod conjugate;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn phi(u: f64) -> f64 {
    (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Random design with rows in (0,1)^d and a smooth response plus noise.
pub fn random_instance(rng: &mut ChaCha8Rng, n: usize, d: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect();
    let y = rows
        .iter()
        .map(|r| r.iter().enumerate().map(|(k, v)| ((k + 1) as f64 * 3.0 * v).sin()).sum::<f64>() + 0.3 * (rng.random::<f64>() - 0.5))
        .collect();
    (y, rows)
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Weighted least squares of `y_i` on `(1, x_i − target)` with product
/// Gaussian weights, solved by QR of the square-root-weighted design.
/// Returns `(level, gradient)`.
pub fn wls_local_linear(y: &[f64], rows: &[Vec<f64>], h: &[f64], target: &[f64], skip: Option<usize>) -> (f64, Vec<f64>) {
    let d = h.len();
    let idx: Vec<usize> = (0..y.len()).filter(|&i| Some(i) != skip).collect();
    let mut a = DMatrix::<f64>::zeros(idx.len(), d + 1);
    let mut b = DVector::<f64>::zeros(idx.len());
    for (r, &i) in idx.iter().enumerate() {
        let mut w = 1.0;
        for k in 0..d {
            w *= phi((rows[i][k] - target[k]) / h[k]) / h[k];
        }
        let sw = w.sqrt();
        a[(r, 0)] = sw;
        for k in 0..d {
            a[(r, k + 1)] = sw * (rows[i][k] - target[k]);
        }
        b[r] = sw * y[i];
    }
    let qr = a.qr();
    let qtb = qr.q().transpose() * b;
    let beta = qr.r().solve_upper_triangular(&qtb).expect("full-rank oracle design");
    (beta[0], beta.iter().skip(1).copied().collect())
}

pub fn nw_reference(y: &[f64], rows: &[Vec<f64>], h: &[f64], target: &[f64], skip: Option<usize>) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..y.len() {
        if Some(i) == skip {
            continue;
        }
        let w: f64 = (0..h.len()).map(|k| phi((rows[i][k] - target[k]) / h[k]) / h[k]).product();
        num += w * y[i];
        den += w;
    }
    num / den
}

pub fn loo_residuals_reference(y: &[f64], rows: &[Vec<f64>], h: &[f64], linear: bool) -> Vec<f64> {
    (0..y.len())
        .map(|j| {
            let fit = if linear {
                wls_local_linear(y, rows, h, &rows[j], Some(j)).0
            } else {
                nw_reference(y, rows, h, &rows[j], Some(j))
            };
            y[j] - fit
        })
        .collect()
}

pub fn tied(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(1.0)
}

/// Double-loop log pseudo-likelihood with tied residuals left out.
pub fn brute_force_log_likelihood(e: &[f64], b: f64) -> f64 {
    let n = e.len();
    let mut total = 0.0;
    for i in 0..n {
        let mut s = 0.0;
        let mut kept = 0usize;
        for j in 0..n {
            if j == i || tied(e[i], e[j]) {
                continue;
            }
            kept += 1;
            s += phi((e[i] - e[j]) / b) / b;
        }
        total += (s / kept as f64).ln();
    }
    total
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * b.abs().max(1.0)
}

/// Composite trapezoid rule on `m` equispaced points.
pub fn trapezoid<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, m: usize) -> f64 {
    let step = (hi - lo) / (m - 1) as f64;
    (0..m)
        .map(|j| {
            let w = if j == 0 || j == m - 1 { 0.5 } else { 1.0 };
            w * f(lo + j as f64 * step)
        })
        .sum::<f64>()
        * step
}

/// Type-7 quantile written out from its definition.
pub fn quantile7(v: &[f64], p: f64) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let pos = p * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    s[lo] + (pos - lo as f64) * (s[hi] - s[lo])
}

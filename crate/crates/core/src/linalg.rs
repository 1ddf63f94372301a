//! Dense helpers for the small (d+1)×(d+1) systems of local polynomial fits.

/// Condition number above which the local normal matrix counts as singular.
pub(crate) const MAX_CONDITION: f64 = 1e12;

/// Relative ridge added (times trace/p) when the normal matrix is ill-conditioned.
pub(crate) const RIDGE_FACTOR: f64 = 1e-8;

/// Gauss-Jordan inverse with partial pivoting of a row-major `p×p` matrix.
fn invert(m: &[f64], p: usize) -> Option<Vec<f64>> {
    let mut a = m.to_vec();
    let mut inv = vec![0.0; p * p];
    for i in 0..p {
        inv[i * p + i] = 1.0;
    }
    for col in 0..p {
        let pivot = (col..p)
            .max_by(|&r, &s| a[r * p + col].abs().total_cmp(&a[s * p + col].abs()))
            .unwrap();
        let pv = a[pivot * p + col];
        if pv == 0.0 || !pv.is_finite() {
            return None;
        }
        if pivot != col {
            for k in 0..p {
                a.swap(pivot * p + k, col * p + k);
                inv.swap(pivot * p + k, col * p + k);
            }
        }
        for k in 0..p {
            a[col * p + k] /= pv;
            inv[col * p + k] /= pv;
        }
        for r in 0..p {
            if r == col {
                continue;
            }
            let f = a[r * p + col];
            if f == 0.0 {
                continue;
            }
            for k in 0..p {
                a[r * p + k] -= f * a[col * p + k];
                inv[r * p + k] -= f * inv[col * p + k];
            }
        }
    }
    inv.iter().all(|v| v.is_finite()).then_some(inv)
}

fn norm1(m: &[f64], p: usize) -> f64 {
    (0..p)
        .map(|c| (0..p).map(|r| m[r * p + c].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Inverse of an accepted normal matrix with its 1-norm condition estimate.
pub(crate) struct Factor {
    inv: Vec<f64>,
    p: usize,
    pub cond: f64,
}

impl Factor {
    pub fn apply(&self, rhs: &[f64]) -> Vec<f64> {
        let p = self.p;
        (0..p)
            .map(|r| (0..p).map(|c| self.inv[r * p + c] * rhs[c]).sum())
            .collect()
    }
}

fn try_factor(m: &[f64], p: usize) -> Option<Factor> {
    let inv = invert(m, p)?;
    let cond = norm1(m, p) * norm1(&inv, p);
    if !cond.is_finite() || cond > MAX_CONDITION {
        return None;
    }
    Some(Factor { inv, p, cond })
}

/// Factor of a symmetric positive semi-definite `m`. When the 1-norm
/// condition estimate exceeds [`MAX_CONDITION`] a ridge of
/// `RIDGE_FACTOR * trace / p` is added once; `None` if that still fails.
/// The flag reports whether the ridge was used.
pub(crate) fn factor_regularized(m: &[f64], p: usize) -> Option<(Factor, bool)> {
    if let Some(f) = try_factor(m, p) {
        return Some((f, false));
    }
    let trace: f64 = (0..p).map(|i| m[i * p + i]).sum();
    let lambda = RIDGE_FACTOR * trace / p as f64;
    if !(lambda > 0.0) {
        return None;
    }
    let mut ridged = m.to_vec();
    for i in 0..p {
        ridged[i * p + i] += lambda;
    }
    try_factor(&ridged, p).map(|f| (f, true))
}

/// Solves `m x = rhs` through [`factor_regularized`].
#[cfg(test)]
pub(crate) fn solve_regularized(m: &[f64], p: usize, rhs: &[f64]) -> Option<Vec<f64>> {
    factor_regularized(m, p).map(|(f, _)| f.apply(rhs))
}

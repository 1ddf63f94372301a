//! Gaussian kernels, leave-one-out local linear / local constant fits and the
//! kernel-form error density built from their residuals.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_bandwidth, Error, Result};
use crate::linalg::factor_regularized;

/// Kernel weight sums below this count as a vanished window.
pub const WEIGHT_FLOOR: f64 = 1e-300;

/// Relative tolerance under which two residuals are treated as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

const REFINE_CONDITION: f64 = 1e4;
const REFINE_STEPS: usize = 3;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
#[inline]
pub fn gaussian_kernel(u: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * u * u).exp()
}

/// Product Gaussian kernel `∏_k h_k⁻¹ φ((target_k − source_k)/h_k)`.
pub fn product_kernel_weight(target: &[f64], source: &[f64], h: &[f64]) -> Result<f64> {
    if target.len() != h.len() || source.len() != h.len() {
        return Err(Error::InvalidInput(format!(
            "dimension mismatch: target {}, source {}, bandwidths {}",
            target.len(),
            source.len(),
            h.len()
        )));
    }
    let mut w = 1.0;
    for ((&t, &s), &hk) in target.iter().zip(source).zip(h) {
        check_bandwidth(hk)?;
        w *= gaussian_kernel((t - s) / hk) / hk;
    }
    Ok(w)
}

/// Response vector plus an `n × d` regressor matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    y: Vec<f64>,
    x: Vec<f64>,
    d: usize,
}

impl Dataset {
    /// Builds a dataset from the response and one row of regressors per observation.
    pub fn new(y: Vec<f64>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if y.len() != rows.len() {
            return Err(Error::InvalidData(format!(
                "{} responses but {} regressor rows",
                y.len(),
                rows.len()
            )));
        }
        let d = rows.first().map_or(0, Vec::len);
        if d == 0 {
            return Err(Error::InvalidData("at least one regressor is required".into()));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::InvalidData(format!(
                "row {i} has {} regressors, expected {d}",
                rows[i].len()
            )));
        }
        Self::from_flat(y, rows.into_iter().flatten().collect(), d)
    }

    /// Builds a dataset from a row-major regressor buffer of length `n·d`.
    pub fn from_flat(y: Vec<f64>, x: Vec<f64>, d: usize) -> Result<Self> {
        if d == 0 || x.len() != y.len() * d {
            return Err(Error::InvalidData(format!(
                "regressor buffer of length {} does not match n={} d={d}",
                x.len(),
                y.len()
            )));
        }
        if y.len() < 2 {
            return Err(Error::InvalidData("at least two observations are required".into()));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!("non-finite response at row {i}")));
        }
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite regressor at row {}, column {}",
                i / d,
                i % d
            )));
        }
        Ok(Self { y, x, d })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        (0..self.n()).map(|i| self.x[i * self.d + k]).collect()
    }

    /// Subset of observations, in the given order.
    pub fn select(&self, idx: &[usize]) -> Result<Self> {
        let y = idx.iter().map(|&i| self.y[i]).collect();
        let x = idx.iter().flat_map(|&i| self.row(i).iter().copied()).collect();
        Self::from_flat(y, x, self.d)
    }

    fn check_bandwidths(&self, h: &[f64]) -> Result<()> {
        if h.len() != self.d {
            return Err(Error::InvalidInput(format!(
                "{} bandwidths for {} regressors",
                h.len(),
                self.d
            )));
        }
        h.iter().try_for_each(|&v| check_bandwidth(v))
    }
}

/// Regression bandwidths `h` (one per regressor) and error-density bandwidth `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthSet {
    pub h: Vec<f64>,
    pub b: f64,
}

impl BandwidthSet {
    pub fn new(h: Vec<f64>, b: f64) -> Result<Self> {
        if h.is_empty() {
            return Err(Error::InvalidInput("empty regression bandwidth vector".into()));
        }
        h.iter().try_for_each(|&v| check_bandwidth(v))?;
        check_bandwidth(b)?;
        Ok(Self { h, b })
    }
}

/// Level and gradient of a local linear fit.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFit {
    pub m_hat: f64,
    pub gradient: Vec<f64>,
}

/// Which conditional-mean estimator produces the residuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    LocalLinear,
    LocalConstant,
}

impl Estimator {
    pub fn tag(self) -> &'static str {
        match self {
            Estimator::LocalLinear => "local_linear",
            Estimator::LocalConstant => "local_constant",
        }
    }

    /// Leave-one-out fitted value at observation `j`.
    pub fn fit_loo(self, data: &Dataset, h: &[f64], j: usize) -> Result<f64> {
        match self {
            Estimator::LocalLinear => local_linear_fit_loo(data, h, j).map(|f| f.m_hat),
            Estimator::LocalConstant => local_constant_fit_loo(data, h, j),
        }
    }

    /// Full-sample fitted value at an arbitrary point.
    pub fn fit_at(self, data: &Dataset, h: &[f64], point: &[f64]) -> Result<f64> {
        match self {
            Estimator::LocalLinear => local_linear_fit_at(data, h, point).map(|f| f.m_hat),
            Estimator::LocalConstant => local_constant_fit_at(data, h, point),
        }
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ll" | "local_linear" => Ok(Estimator::LocalLinear),
            "lc" | "local_constant" | "nw" => Ok(Estimator::LocalConstant),
            other => Err(Error::InvalidInput(format!("unknown estimator '{other}'"))),
        }
    }
}

/// Unnormalised Gaussian product weight `exp(−½ Σ_k u_k²)` together with the
/// bandwidth-scaled offsets `u_k = (x_k − target_k)/h_k`.
#[inline]
fn scaled_offsets(row: &[f64], target: &[f64], h: &[f64], u: &mut [f64]) -> f64 {
    let mut q = 0.0;
    for k in 0..h.len() {
        u[k] = (row[k] - target[k]) / h[k];
        q += u[k] * u[k];
    }
    (-0.5 * q).exp()
}

/// `(2π)^(−d/2) / ∏ h_k`, the factor turning unnormalised weights into
/// [`product_kernel_weight`] values.
fn kernel_norm(h: &[f64]) -> f64 {
    let prod: f64 = h.iter().product();
    (2.0 * PI).powf(-0.5 * h.len() as f64) / prod
}

/// Weighted regression of `y_i` on `(1, x_i − target)`; `skip` leaves one
/// observation out, `index` labels errors.
fn local_linear_core(
    data: &Dataset,
    h: &[f64],
    target: &[f64],
    skip: Option<usize>,
    index: usize,
) -> Result<LocalFit> {
    let d = data.d();
    let p = d + 1;
    // Offsets are in bandwidth-scaled coordinates, then centred at the
    // weighted mean and standardised per column before the normal matrix is
    // formed; the fit is mapped back to the target afterwards.
    let mut u = vec![0.0; d];
    let mut kept: Vec<(usize, f64)> = Vec::new();
    let mut offsets: Vec<f64> = Vec::new();
    let mut wsum = 0.0;
    let mut ybar = 0.0;
    let mut ubar = vec![0.0; d];
    for i in 0..data.n() {
        if Some(i) == skip {
            continue;
        }
        let w = scaled_offsets(data.row(i), target, h, &mut u);
        if w == 0.0 {
            continue;
        }
        wsum += w;
        ybar += w * data.y[i];
        for k in 0..d {
            ubar[k] += w * u[k];
        }
        kept.push((i, w));
        offsets.extend_from_slice(&u);
    }
    if wsum * kernel_norm(h) < WEIGHT_FLOOR || wsum == 0.0 {
        return Err(Error::DegenerateWindow { index });
    }
    ybar /= wsum;
    for v in &mut ubar {
        *v /= wsum;
    }
    let mut scale = vec![0.0; d];
    for (t, &(_, w)) in kept.iter().enumerate() {
        for k in 0..d {
            scale[k] += w * (offsets[t * d + k] - ubar[k]).powi(2);
        }
    }
    for s in &mut scale {
        *s = (*s / wsum).sqrt();
        if !(*s > 0.0) {
            *s = 1.0;
        }
    }
    let mut m = vec![0.0; p * p];
    let mut v = vec![0.0; p];
    let mut z = vec![0.0; d];
    m[0] = 1.0;
    v[0] = ybar;
    for (t, &(i, w)) in kept.iter().enumerate() {
        for k in 0..d {
            z[k] = (offsets[t * d + k] - ubar[k]) / scale[k];
        }
        let wy = w * (data.y[i] - ybar);
        for r in 0..d {
            let wz = w * z[r];
            v[r + 1] += wy * z[r];
            for c in r..d {
                m[(r + 1) * p + c + 1] += wz * z[c];
            }
        }
    }
    for r in 1..p {
        v[r] /= wsum;
        for c in r..p {
            m[r * p + c] /= wsum;
            m[c * p + r] = m[r * p + c];
        }
    }
    let (factor, ridged) = factor_regularized(&m, p).ok_or(Error::RankDeficient { index })?;
    let mut delta = factor.apply(&v);
    if !ridged && factor.cond > REFINE_CONDITION {
        // refinement against residuals recomputed from the data
        for _ in 0..REFINE_STEPS {
            let mut r = vec![0.0; p];
            for (t, &(i, w)) in kept.iter().enumerate() {
                let mut e = data.y[i] - ybar;
                for k in 0..d {
                    z[k] = (offsets[t * d + k] - ubar[k]) / scale[k];
                    e -= z[k] * delta[k + 1];
                }
                for k in 0..d {
                    r[k + 1] += w * z[k] * e;
                }
            }
            for v in &mut r[1..] {
                *v /= wsum;
            }
            let step = factor.apply(&r);
            for k in 1..p {
                delta[k] += step[k];
            }
        }
    }
    let slope: Vec<f64> = (0..d).map(|k| delta[k + 1] / scale[k]).collect();
    let m_hat = delta[0] - slope.iter().zip(&ubar).map(|(b, c)| b * c).sum::<f64>();
    let gradient = slope.iter().zip(h).map(|(g, hk)| g / hk).collect();
    Ok(LocalFit { m_hat, gradient })
}

fn local_constant_core(
    data: &Dataset,
    h: &[f64],
    target: &[f64],
    skip: Option<usize>,
    index: usize,
) -> Result<f64> {
    let mut u = vec![0.0; data.d()];
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..data.n() {
        if Some(i) == skip {
            continue;
        }
        let w = scaled_offsets(data.row(i), target, h, &mut u);
        num += w * data.y[i];
        den += w;
    }
    if den * kernel_norm(h) < WEIGHT_FLOOR || den == 0.0 {
        return Err(Error::DegenerateWindow { index });
    }
    Ok(num / den)
}

fn check_index(data: &Dataset, j: usize) -> Result<()> {
    if j >= data.n() {
        return Err(Error::InvalidInput(format!(
            "observation index {j} out of range for n={}",
            data.n()
        )));
    }
    Ok(())
}

fn check_local_linear_size(data: &Dataset) -> Result<()> {
    if data.n() < data.d() + 2 {
        return Err(Error::InvalidData(format!(
            "local linear fitting needs n >= d+2 (n={}, d={})",
            data.n(),
            data.d()
        )));
    }
    Ok(())
}

/// Leave-one-out local linear estimate of level and gradient at `x_j`.
pub fn local_linear_fit_loo(data: &Dataset, h: &[f64], j: usize) -> Result<LocalFit> {
    data.check_bandwidths(h)?;
    check_index(data, j)?;
    check_local_linear_size(data)?;
    local_linear_core(data, h, data.row(j), Some(j), j)
}

/// Full-sample local linear estimate at an arbitrary point.
pub fn local_linear_fit_at(data: &Dataset, h: &[f64], point: &[f64]) -> Result<LocalFit> {
    data.check_bandwidths(h)?;
    if point.len() != data.d() {
        return Err(Error::InvalidInput("evaluation point has wrong dimension".into()));
    }
    local_linear_core(data, h, point, None, 0)
}

/// Leave-one-out Nadaraya-Watson estimate at `x_j`.
pub fn local_constant_fit_loo(data: &Dataset, h: &[f64], j: usize) -> Result<f64> {
    data.check_bandwidths(h)?;
    check_index(data, j)?;
    local_constant_core(data, h, data.row(j), Some(j), j)
}

/// Full-sample Nadaraya-Watson estimate at an arbitrary point.
pub fn local_constant_fit_at(data: &Dataset, h: &[f64], point: &[f64]) -> Result<f64> {
    data.check_bandwidths(h)?;
    if point.len() != data.d() {
        return Err(Error::InvalidInput("evaluation point has wrong dimension".into()));
    }
    local_constant_core(data, h, point, None, 0)
}

/// Leave-one-out residuals `e_i = y_i − m̂₋ᵢ(x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSet(Vec<f64>);

impl ResidualSet {
    pub fn new(e: Vec<f64>) -> Result<Self> {
        if e.is_empty() {
            return Err(Error::InvalidInput("empty residual set".into()));
        }
        if let Some(i) = e.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite residual at {i}")));
        }
        Ok(Self(e))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self(self.0.iter().map(|v| v * c).collect())
    }
}

/// Leave-one-out residuals for every observation. Fits run in parallel; the
/// first failing index (in observation order) is reported.
pub fn residuals_loo(data: &Dataset, h: &[f64], estimator: Estimator) -> Result<ResidualSet> {
    data.check_bandwidths(h)?;
    if estimator == Estimator::LocalLinear {
        check_local_linear_size(data)?;
    }
    let fits: Vec<Result<f64>> = (0..data.n())
        .into_par_iter()
        .map(|j| match estimator {
            Estimator::LocalLinear => {
                local_linear_core(data, h, data.row(j), Some(j), j).map(|f| f.m_hat)
            }
            Estimator::LocalConstant => local_constant_core(data, h, data.row(j), Some(j), j),
        })
        .collect();
    let mut e = Vec::with_capacity(data.n());
    for (j, fit) in fits.into_iter().enumerate() {
        e.push(data.y[j] - fit?);
    }
    ResidualSet::new(e)
}

/// For each residual, the indices dropped from its leave-one-out density sum:
/// itself plus any residual tied with it.
#[derive(Debug, Clone, PartialEq)]
pub struct ExclusionIndex {
    excluded: Vec<Vec<usize>>,
}

#[inline]
fn is_tie(ei: f64, ej: f64) -> bool {
    (ej - ei).abs() <= TIE_TOLERANCE * ei.abs().max(1.0)
}

impl ExclusionIndex {
    pub fn len(&self) -> usize {
        self.excluded.len()
    }

    pub fn is_empty(&self) -> bool {
        self.excluded.is_empty()
    }

    /// `n_i`, the number of dropped terms for observation `i` (always ≥ 1).
    pub fn n_excluded(&self, i: usize) -> usize {
        self.excluded[i].len()
    }

    /// Sorted indices dropped for observation `i`, including `i` itself.
    pub fn excluded(&self, i: usize) -> &[usize] {
        &self.excluded[i]
    }

    /// Members of `J_i` in increasing order.
    pub fn members(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let ex = &self.excluded[i];
        (0..self.excluded.len()).filter(move |j| ex.binary_search(j).is_err())
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.excluded[i].binary_search(&j).is_err()
    }
}

/// Builds `J_i = {j : |e_j − e_i| > tol·max(1, |e_i|)}` for every `i`.
pub fn build_exclusion_index(e: &ResidualSet) -> Result<ExclusionIndex> {
    let v = e.values();
    let n = v.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| v[i]).collect();
    let mut excluded = Vec::with_capacity(n);
    for i in 0..n {
        let tol = TIE_TOLERANCE * v[i].abs().max(1.0);
        let lo = sorted.partition_point(|&s| s < v[i] - tol);
        let hi = sorted.partition_point(|&s| s <= v[i] + tol);
        let mut ex: Vec<usize> = order[lo..hi]
            .iter()
            .copied()
            .filter(|&j| j == i || is_tie(v[i], v[j]))
            .collect();
        if !ex.contains(&i) {
            ex.push(i);
        }
        ex.sort_unstable();
        if ex.len() >= n {
            return Err(Error::DegenerateResiduals(format!(
                "residual {i} is tied with every other residual"
            )));
        }
        excluded.push(ex);
    }
    Ok(ExclusionIndex { excluded })
}

/// Kernel-form error density `n⁻¹ Σ_i b⁻¹ φ((eps − e_i)/b)`.
pub fn error_density(e: &ResidualSet, b: f64, eps: f64) -> Result<f64> {
    check_bandwidth(b)?;
    let s: f64 = e.values().iter().map(|&ei| gaussian_kernel((eps - ei) / b)).sum();
    Ok(s / (b * e.len() as f64))
}

/// Leave-one-out ordinate `(n − n_i)⁻¹ Σ_{j∈J_i} b⁻¹ φ((e_i − e_j)/b)`.
pub fn error_density_loo(e: &ResidualSet, idx: &ExclusionIndex, b: f64, i: usize) -> Result<f64> {
    check_bandwidth(b)?;
    if idx.len() != e.len() {
        return Err(Error::InvalidInput("exclusion index does not match residuals".into()));
    }
    if i >= e.len() {
        return Err(Error::InvalidInput(format!("residual index {i} out of range")));
    }
    let kept = e.len() - idx.n_excluded(i);
    if kept == 0 {
        return Err(Error::DegenerateResiduals(format!("J_{i} is empty")));
    }
    Ok(loo_sum(e.values(), idx.excluded(i), b, i) / (b * kept as f64))
}

/// `Σ_{j∈J_i} φ((e_i − e_j)/b)`, skipping the sorted `excluded` indices.
#[inline]
pub(crate) fn loo_sum(e: &[f64], excluded: &[usize], b: f64, i: usize) -> f64 {
    let ei = e[i];
    let inv_b = 1.0 / b;
    let mut s = 0.0;
    let mut next = 0;
    for (j, &ej) in e.iter().enumerate() {
        if next < excluded.len() && excluded[next] == j {
            next += 1;
            continue;
        }
        let u = (ei - ej) * inv_b;
        s += (-0.5 * u * u).exp();
    }
    s * FRAC_1_SQRT_2PI
}

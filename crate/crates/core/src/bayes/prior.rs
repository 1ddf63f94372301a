use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::kernel::BandwidthSet;

/// Prior family over the bandwidths together with its hyperparameters.
///
/// * `InverseGamma` places IG(α, β) priors on the squared rate constants
///   `b₀²` and `h₀ₖ²` of [`RateReparam`].
/// * `Exponential` places Exp(τ) priors on `b²` and `h_k²`.
/// * `BetaExponent` writes `b = n^(−ω)`, `h_k = n^(−η_k)` and places Beta
///   priors on the exponents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PriorSpec {
    InverseGamma {
        alpha_b: f64,
        beta_b: f64,
        alpha_h: f64,
        beta_h: f64,
    },
    Exponential {
        tau: f64,
    },
    BetaExponent {
        psi_b: f64,
        kappa_b: f64,
        psi_h: Vec<f64>,
        kappa_h: Vec<f64>,
    },
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec::InverseGamma {
            alpha_b: 1.0,
            beta_b: 0.05,
            alpha_h: 1.0,
            beta_h: 0.05,
        }
    }
}

/// `b = b₀·n^(−1/5)`, `h_k = h₀ₖ·n^(−1/(d+4))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReparam {
    pub b0: f64,
    pub h0: Vec<f64>,
}

impl RateReparam {
    pub fn regression_rate(n: usize, d: usize) -> f64 {
        (n as f64).powf(-1.0 / (d as f64 + 4.0))
    }

    pub fn density_rate(n: usize) -> f64 {
        (n as f64).powf(-0.2)
    }

    pub fn from_bandwidths(bw: &BandwidthSet, n: usize) -> Self {
        let d = bw.h.len();
        let rh = Self::regression_rate(n, d);
        Self {
            b0: bw.b / Self::density_rate(n),
            h0: bw.h.iter().map(|h| h / rh).collect(),
        }
    }

    pub fn to_bandwidths(&self, n: usize) -> Result<BandwidthSet> {
        let rh = Self::regression_rate(n, self.h0.len());
        BandwidthSet::new(
            self.h0.iter().map(|h| h * rh).collect(),
            self.b0 * Self::density_rate(n),
        )
    }
}

/// Family-native prior arguments: `(b₀², h₀ₖ²)`, `(b², h_k²)` or `(ω, η_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NativeParams {
    pub b: f64,
    pub h: Vec<f64>,
}

fn ln_inverse_gamma(z: f64, alpha: f64, beta: f64) -> f64 {
    if !(z > 0.0) || !z.is_finite() {
        return f64::NEG_INFINITY;
    }
    alpha * beta.ln() - ln_gamma(alpha) - (alpha + 1.0) * z.ln() - beta / z
}

fn ln_exponential(z: f64, tau: f64) -> f64 {
    if !(z >= 0.0) || !z.is_finite() {
        return f64::NEG_INFINITY;
    }
    tau.ln() - tau * z
}

fn ln_beta_density(w: f64, psi: f64, kappa: f64) -> f64 {
    if !(w > 0.0 && w < 1.0) {
        return f64::NEG_INFINITY;
    }
    (psi - 1.0) * w.ln() + (kappa - 1.0) * (1.0 - w).ln() - ln_beta(psi, kappa)
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let z = x.exp();
        z / (1.0 + z)
    }
}

impl PriorSpec {
    pub fn exponential(tau: f64) -> Self {
        PriorSpec::Exponential { tau }
    }

    /// Beta(ψ, κ) on every exponent.
    pub fn beta_exponent(d: usize, psi: f64, kappa: f64) -> Self {
        PriorSpec::BetaExponent {
            psi_b: psi,
            kappa_b: kappa,
            psi_h: vec![psi; d],
            kappa_h: vec![kappa; d],
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            PriorSpec::InverseGamma { .. } => "inverse_gamma",
            PriorSpec::Exponential { .. } => "exponential",
            PriorSpec::BetaExponent { .. } => "beta_exponent",
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        let valid = match self {
            PriorSpec::InverseGamma { alpha_b, beta_b, alpha_h, beta_h } => {
                [*alpha_b, *beta_b, *alpha_h, *beta_h].iter().all(|&v| ok(v))
            }
            PriorSpec::Exponential { tau } => ok(*tau),
            PriorSpec::BetaExponent { psi_b, kappa_b, psi_h, kappa_h } => {
                if psi_h.len() != d || kappa_h.len() != d {
                    return Err(Error::InvalidInput(format!(
                        "beta prior needs {d} per-regressor hyperparameters"
                    )));
                }
                ok(*psi_b) && ok(*kappa_b) && psi_h.iter().chain(kappa_h).all(|&v| ok(v))
            }
        };
        if valid {
            Ok(())
        } else {
            Err(Error::InvalidInput("prior hyperparameters must be finite and > 0".into()))
        }
    }

    /// Maps bandwidths to this family's native prior arguments.
    pub fn native(&self, bw: &BandwidthSet, n: usize) -> NativeParams {
        match self {
            PriorSpec::InverseGamma { .. } => {
                let r = RateReparam::from_bandwidths(bw, n);
                NativeParams {
                    b: r.b0 * r.b0,
                    h: r.h0.iter().map(|h| h * h).collect(),
                }
            }
            PriorSpec::Exponential { .. } => NativeParams {
                b: bw.b * bw.b,
                h: bw.h.iter().map(|h| h * h).collect(),
            },
            PriorSpec::BetaExponent { .. } => {
                let ln_n = (n as f64).ln();
                NativeParams {
                    b: -bw.b.ln() / ln_n,
                    h: bw.h.iter().map(|h| -h.ln() / ln_n).collect(),
                }
            }
        }
    }

    /// Sum of the per-parameter log prior densities at native arguments;
    /// `−∞` outside the support.
    pub fn log_density_native(&self, p: &NativeParams) -> f64 {
        match self {
            PriorSpec::InverseGamma { alpha_b, beta_b, alpha_h, beta_h } => {
                ln_inverse_gamma(p.b, *alpha_b, *beta_b)
                    + p.h.iter().map(|&z| ln_inverse_gamma(z, *alpha_h, *beta_h)).sum::<f64>()
            }
            PriorSpec::Exponential { tau } => {
                ln_exponential(p.b, *tau) + p.h.iter().map(|&z| ln_exponential(z, *tau)).sum::<f64>()
            }
            PriorSpec::BetaExponent { psi_b, kappa_b, psi_h, kappa_h } => {
                ln_beta_density(p.b, *psi_b, *kappa_b)
                    + p.h
                        .iter()
                        .zip(psi_h.iter().zip(kappa_h))
                        .map(|(&w, (&ps, &ka))| ln_beta_density(w, ps, ka))
                        .sum::<f64>()
            }
        }
    }

    /// Unbounded working coordinates used by the random walk: logs of the
    /// squared parameters, or logits of the exponents. Order: `h_1..h_d, b`.
    pub fn to_working(&self, bw: &BandwidthSet, n: usize) -> Vec<f64> {
        let p = self.native(bw, n);
        let f = |z: f64| match self {
            PriorSpec::BetaExponent { .. } => (z / (1.0 - z)).ln(),
            _ => z.ln(),
        };
        p.h.iter().map(|&z| f(z)).chain(std::iter::once(f(p.b))).collect()
    }

    fn native_from_working(&self, w: &[f64]) -> NativeParams {
        let f = |x: f64| match self {
            PriorSpec::BetaExponent { .. } => logistic(x),
            _ => x.exp(),
        };
        let d = w.len() - 1;
        NativeParams {
            b: f(w[d]),
            h: w[..d].iter().map(|&x| f(x)).collect(),
        }
    }

    /// Inverse of [`PriorSpec::to_working`].
    pub fn from_working(&self, w: &[f64], n: usize) -> Result<BandwidthSet> {
        let p = self.native_from_working(w);
        match self {
            PriorSpec::InverseGamma { .. } => RateReparam {
                b0: p.b.sqrt(),
                h0: p.h.iter().map(|z| z.sqrt()).collect(),
            }
            .to_bandwidths(n),
            PriorSpec::Exponential { .. } => {
                BandwidthSet::new(p.h.iter().map(|z| z.sqrt()).collect(), p.b.sqrt())
            }
            PriorSpec::BetaExponent { .. } => {
                let nf = n as f64;
                BandwidthSet::new(p.h.iter().map(|&e| nf.powf(-e)).collect(), nf.powf(-p.b))
            }
        }
    }

    /// `log |∂native/∂working|` at a working point.
    pub fn log_jacobian(&self, w: &[f64]) -> f64 {
        match self {
            PriorSpec::BetaExponent { .. } => w
                .iter()
                .map(|&x| {
                    let s = logistic(x);
                    s.ln() + (1.0 - s).ln()
                })
                .sum(),
            _ => w.iter().sum(),
        }
    }

    /// Log prior density of the working coordinates (native density plus Jacobian).
    pub fn log_density_working(&self, w: &[f64]) -> f64 {
        self.log_density_native(&self.native_from_working(w)) + self.log_jacobian(w)
    }
}

/// Log prior density of `bw` under `spec` for sample size `n`, on the
/// family's native parameters.
pub fn log_prior(bw: &BandwidthSet, spec: &PriorSpec, n: usize) -> f64 {
    spec.log_density_native(&spec.native(bw, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn inverse_gamma_reference_value() {
        let spec = PriorSpec::default();
        let v = spec.log_density_native(&NativeParams { b: 0.05, h: vec![] });
        assert_relative_eq!(v, 1.995732, epsilon = 1e-6);
    }

    #[test]
    fn exponential_at_origin() {
        let spec = PriorSpec::exponential(1.0);
        assert_eq!(spec.log_density_native(&NativeParams { b: 0.0, h: vec![] }), 0.0);
    }

    #[test]
    fn flat_beta_is_zero() {
        let spec = PriorSpec::beta_exponent(2, 1.0, 1.0);
        for w in [0.1, 0.37, 0.9] {
            let v = spec.log_density_native(&NativeParams { b: w, h: vec![w, 1.0 - w] });
            assert_relative_eq!(v, 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn out_of_support_is_negative_infinity() {
        let spec = PriorSpec::beta_exponent(1, 2.0, 2.0);
        assert_eq!(spec.log_density_native(&NativeParams { b: 1.2, h: vec![0.5] }), f64::NEG_INFINITY);
        let ig = PriorSpec::default();
        assert_eq!(ig.log_density_native(&NativeParams { b: -1.0, h: vec![] }), f64::NEG_INFINITY);
    }

    #[test]
    fn working_round_trip_for_every_family() {
        let bw = BandwidthSet::new(vec![0.12, 0.4], 0.27).unwrap();
        for spec in [PriorSpec::default(), PriorSpec::exponential(1.0), PriorSpec::beta_exponent(2, 2.0, 3.0)] {
            let w = spec.to_working(&bw, 500);
            let back = spec.from_working(&w, 500).unwrap();
            assert_relative_eq!(back.b, bw.b, max_relative = 1e-12);
            for (a, b) in back.h.iter().zip(&bw.h) {
                assert_relative_eq!(a, b, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn rate_reparam_uses_known_orders() {
        let r = RateReparam { b0: 1.0, h0: vec![1.0, 1.0, 1.0] };
        let bw = r.to_bandwidths(1000).unwrap();
        assert_relative_eq!(bw.b, 1000f64.powf(-0.2), max_relative = 1e-14);
        assert_relative_eq!(bw.h[0], 1000f64.powf(-1.0 / 7.0), max_relative = 1e-14);
    }

    #[test]
    fn working_density_matches_change_of_variables() {
        // ∫ exp(log_density_working) dw over a fine grid must be ~1 for one IG parameter.
        let spec = PriorSpec::InverseGamma { alpha_b: 2.0, beta_b: 0.3, alpha_h: 1.0, beta_h: 0.05 };
        let step = 0.001;
        let mass: f64 = (0..40_000)
            .map(|k| {
                let wb = -20.0 + k as f64 * step;
                let native = spec.native_from_working(&[0.0, wb]);
                (ln_inverse_gamma(native.b, 2.0, 0.3) + wb).exp() * step
            })
            .sum();
        assert_relative_eq!(mass, 1.0, epsilon = 1e-6);
    }
}

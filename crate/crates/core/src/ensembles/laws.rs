//! Closed-form spacing densities P_n(s) at unit mean spacing.

use statrs::function::factorial::{ln_binomial, ln_factorial};

use crate::error::{Error, Result};
use crate::numeric::adaptive_simpson;

/// A spacing density family and the number `order` of levels inside the gap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpacingLaw {
    /// 2 (2s)^{2n+1} e^{-2s} / (2n+1)!
    SemiPoisson { order: u32 },
    /// Finite-N law of the Lax matrix at alpha = 1/2 (odd `dim`).
    ModelA { dim: u32, order: u32 },
    /// Finite-N law of the Lax matrix at alpha = 1/(2N).
    ModelC { dim: u32, order: u32 },
    /// Poisson statistics of hard rods of length 1/2.
    ShiftedPoisson { order: u32 },
    Poisson { order: u32 },
}

impl SpacingLaw {
    pub fn model_a(dim: u32, order: u32) -> Result<Self> {
        if dim % 2 == 0 || dim < 2 * order + 3 {
            return Err(Error::LawRange(format!(
                "model A needs odd N >= 2n+3, got N = {dim}, n = {order}"
            )));
        }
        Ok(Self::ModelA { dim, order })
    }

    pub fn model_c(dim: u32, order: u32) -> Result<Self> {
        if dim < order + 2 {
            return Err(Error::LawRange(format!(
                "model C needs N >= n+2, got N = {dim}, n = {order}"
            )));
        }
        Ok(Self::ModelC { dim, order })
    }

    pub fn order(&self) -> u32 {
        match *self {
            Self::SemiPoisson { order }
            | Self::ModelA { order, .. }
            | Self::ModelC { order, .. }
            | Self::ShiftedPoisson { order }
            | Self::Poisson { order } => order,
        }
    }

    /// Closed interval outside which the density vanishes.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Self::SemiPoisson { .. } | Self::Poisson { .. } => (0.0, f64::INFINITY),
            Self::ModelA { dim, .. } => (0.0, dim as f64 / 2.0),
            Self::ModelC { dim, order } => {
                let lo = (order as f64 + 1.0) / 2.0;
                (lo, lo + dim as f64 / 2.0)
            }
            Self::ShiftedPoisson { order } => ((order as f64 + 1.0) / 2.0, f64::INFINITY),
        }
    }

    pub fn density(&self, s: f64) -> f64 {
        let (lo, hi) = self.support();
        if !(s > lo && s < hi) {
            return 0.0;
        }
        let n = self.order() as u64;
        let nf = n as f64;
        let ln = match *self {
            Self::SemiPoisson { .. } => {
                2f64.ln() + (2.0 * nf + 1.0) * (2.0 * s).ln() - 2.0 * s - ln_factorial(2 * n + 1)
            }
            Self::Poisson { .. } => nf * s.ln() - s - ln_factorial(n),
            Self::ShiftedPoisson { .. } => {
                let u = 2.0 * s - nf - 1.0;
                2f64.ln() + nf * u.ln() - u - ln_factorial(n)
            }
            Self::ModelA { dim, .. } => {
                let d = dim as f64;
                (2.0 * nf + 2.0) * (2.0 / d).ln()
                    + (2.0 * (nf + 1.0)).ln()
                    + ln_binomial(dim as u64 - 1, 2 * n + 2)
                    + (2.0 * nf + 1.0) * s.ln()
                    + (d - 2.0 * nf - 3.0) * (1.0 - 2.0 * s / d).ln()
            }
            Self::ModelC { dim, .. } => {
                let d = dim as f64;
                (d - 1.0) * 2f64.ln() + (d - 1.0).ln() - (d - 1.0) * d.ln()
                    + ln_binomial(dim as u64 - 2, n)
                    + (d - 2.0 - nf) * ((d + nf + 1.0) / 2.0 - s).ln()
                    + nf * (s - lo).ln()
            }
        };
        ln.exp()
    }

    /// Mean of the density over [lo, hi], for comparison with histogram bins.
    pub fn bin_average(&self, lo: f64, hi: f64) -> f64 {
        let (a, b) = self.support();
        let (l, h) = (lo.max(a), hi.min(b));
        if h <= l {
            return 0.0;
        }
        adaptive_simpson(&|s| self.density(s), l, h, 1e-12) / (hi - lo)
    }
}

/// Density of `law` at `s`; negative or non-finite `s` is rejected.
pub fn spacing_law_eval(law: &SpacingLaw, s: f64) -> Result<f64> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::LawRange(format!("s must be finite and nonnegative, got {s}")));
    }
    Ok(law.density(s))
}

/// Semi-Poisson two-point function 1 - e^{-4s}.
pub fn semi_poisson_r2(s: f64) -> f64 {
    1.0 - (-4.0 * s).exp()
}

/// Semi-Poisson form factor (2 + pi^2 tau^2)/(4 + pi^2 tau^2).
pub fn semi_poisson_form_factor(tau: f64) -> f64 {
    let t = std::f64::consts::PI * std::f64::consts::PI * tau * tau;
    (2.0 + t) / (4.0 + t)
}

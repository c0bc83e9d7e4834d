//! The Wiener-Hopf factor K+ of tan(qb)/(qb) as a truncated infinite product,
//! its Euler-Maclaurin tail correction and its high-energy asymptotic.

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_4, PI};

use crate::error::{invalid, Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Factors multiplied together before one logarithm is taken.
const BLOCK: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorizationInput {
    k: f64,
    b: f64,
    alpha: Complex64,
}

impl FactorizationInput {
    pub fn new(k: f64, b: f64, alpha: Complex64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(invalid("k", format!("must be positive and finite, got {k}")));
        }
        if !(b > 0.0 && b.is_finite()) {
            return Err(invalid("b", format!("must be positive and finite, got {b}")));
        }
        if !(alpha.re.is_finite() && alpha.im.is_finite()) {
            return Err(invalid("alpha", "must be finite"));
        }
        Ok(Self { k, b, alpha })
    }

    pub fn real(k: f64, b: f64, alpha: f64) -> Result<Self> {
        Self::new(k, b, Complex64::new(alpha, 0.0))
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KPlusValue {
    pub value: Complex64,
    pub n_terms: usize,
    pub corrected: bool,
}

/// sqrt(k^2 - (pi n / 2b)^2) on the branch with non-negative imaginary part.
pub(crate) fn momentum(k: f64, b: f64, n: usize) -> Complex64 {
    let q = PI * n as f64 / (2.0 * b);
    let d = (k - q) * (k + q);
    if d >= 0.0 {
        Complex64::new(d.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-d).sqrt())
    }
}

pub(crate) fn at_threshold(k: f64, b: f64, n: usize) -> bool {
    let q = PI * n as f64 / (2.0 * b);
    (k - q).abs() <= 1e-13 * k.max(q)
}

/// Transverse channel momentum p_n.
pub fn channel_momentum(k: f64, b: f64, n: usize) -> Result<Complex64> {
    if n == 0 {
        return Err(invalid("n", "channel indices start at 1"));
    }
    FactorizationInput::real(k, b, 0.0)?;
    if at_threshold(k, b, n) {
        return Err(Error::Threshold { n, k });
    }
    Ok(momentum(k, b, n))
}

/// Momenta p_1 .. p_2N at fixed (k, b), shared between many K+ evaluations.
#[derive(Debug, Clone)]
pub struct MomentumLadder {
    k: f64,
    b: f64,
    p: Vec<Complex64>,
}

impl MomentumLadder {
    pub fn new(k: f64, b: f64, n_terms: usize) -> Result<Self> {
        FactorizationInput::real(k, b, 0.0)?;
        if n_terms == 0 {
            return Err(invalid("n_terms", "must be at least 1"));
        }
        let nearest = (2.0 * b * k / PI).round() as usize;
        if (1..=2 * n_terms).contains(&nearest) && at_threshold(k, b, nearest) {
            return Err(Error::Threshold { n: nearest, k });
        }
        let p = (1..=2 * n_terms).map(|n| momentum(k, b, n)).collect();
        Ok(Self { k, b, p })
    }

    pub fn n_terms(&self) -> usize {
        self.p.len() / 2
    }

    /// Raw truncated product at `alpha`.
    pub fn product(&self, alpha: Complex64) -> Result<Complex64> {
        Ok(self.log_product(alpha)?.exp())
    }

    /// Truncated product times exp of the three-term tail correction.
    pub fn corrected(&self, alpha: Complex64) -> Result<Complex64> {
        let n_terms = self.n_terms();
        let min = self.b * self.k / PI;
        if (n_terms as f64) <= min {
            return Err(Error::TruncationTooShort { n_terms, min });
        }
        let tail = tail_correction(self.b * self.k / PI, Complex64::i() * self.b * alpha / PI, n_terms);
        Ok((self.log_product(alpha)? + tail).exp())
    }

    fn log_product(&self, alpha: Complex64) -> Result<Complex64> {
        let scale = 1.0f64.max(alpha.norm()).max(self.k);
        let mut log_sum = Complex64::new(0.0, 0.0);
        let mut block = Complex64::new(1.0, 0.0);
        for (i, pair) in self.p.chunks_exact(2).enumerate() {
            let n = i + 1;
            let den = pair[0] + alpha;
            if den.norm() < 1e-12 * scale {
                return Err(Error::PoleProximity { n });
            }
            let weight = 1.0 - 0.5 / n as f64;
            block *= weight * (pair[1] + alpha) / den;
            if n % BLOCK == 0 {
                log_sum += block.ln();
                block = Complex64::new(1.0, 0.0);
            }
        }
        Ok(log_sum + block.ln())
    }
}

/// Euler-Maclaurin estimate of the logarithm of the omitted factors n > N.
///
/// `kappa` = bk/pi and `v` = i b alpha / pi.
pub fn tail_correction(kappa: f64, v: Complex64, n_terms: usize) -> Complex64 {
    let n = n_terms as f64;
    let k2 = kappa * kappa;
    let a2 = v / 2.0;
    let a3 = (2.0 * k2 + 2.0 * v * v + v) / 4.0;
    let a4 = (6.0 * k2 * v + 4.0 * v * v * v + 3.0 * k2 + 3.0 * v * v + v) / 8.0;
    a2 / n + (a3 - a2) / (2.0 * n * n) + (2.0 * a4 - 3.0 * a3 + a2) / (6.0 * n * n * n)
}

pub fn k_plus_product(input: &FactorizationInput, n_terms: usize) -> Result<KPlusValue> {
    let ladder = MomentumLadder::new(input.k, input.b, n_terms)?;
    Ok(KPlusValue {
        value: ladder.product(input.alpha)?,
        n_terms,
        corrected: false,
    })
}

pub fn k_plus_corrected(input: &FactorizationInput, n_terms: usize) -> Result<KPlusValue> {
    let min = input.b * input.k / PI;
    if (n_terms as f64) <= min {
        return Err(Error::TruncationTooShort { n_terms, min });
    }
    let ladder = MomentumLadder::new(input.k, input.b, n_terms)?;
    Ok(KPlusValue {
        value: ladder.corrected(input.alpha)?,
        n_terms,
        corrected: true,
    })
}

/// e^{i pi/4} / sqrt(b (k + alpha)).
pub fn k_plus_asymptotic(input: &FactorizationInput) -> Complex64 {
    Complex64::from_polar(1.0, FRAC_PI_4) / (input.b * (input.k + input.alpha)).sqrt()
}

/// prod (1 - 1/2n) e^{1/2n} = e^{gamma/2} / sqrt(pi).
pub fn euler_product_constant() -> f64 {
    (EULER_GAMMA / 2.0).exp() / PI.sqrt()
}

/// Default truncation: max(2000, 10 bk/pi), always used with the tail correction.
pub fn default_n_terms(k: f64, b: f64) -> usize {
    2000usize.max((10.0 * b * k / PI).ceil() as usize)
}

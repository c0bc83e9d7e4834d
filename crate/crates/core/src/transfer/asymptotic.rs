//! High-energy and paraxial forms of the scattering matrix.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::linalg::RMat;
use crate::wiener_hopf;

fn parity_sign(n: i64) -> f64 {
    if n.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Pole-only paraxial kernel s_jk = (-1)^{j+k}/(pi (k - j + 1/2)), any integers.
pub fn paraxial_kernel(j: i64, k: i64) -> f64 {
    parity_sign(j + k) / (PI * ((k - j) as f64 + 0.5))
}

/// Block matrix [[0, s], [s^T, 0]] of dimension 2 * half_dim.
pub fn s_paraxial(half_dim: usize) -> Result<RMat> {
    if half_dim == 0 {
        return Err(invalid("half_dim", "must be at least 1"));
    }
    let h = half_dim;
    Ok(RMat::from_fn(2 * h, 2 * h, |r, c| match (r < h, c < h) {
        (true, false) => paraxial_kernel(r as i64 + 1, (c - h) as i64 + 1),
        (false, true) => paraxial_kernel(c as i64 + 1, (r - h) as i64 + 1),
        _ => 0.0,
    }))
}

/// Two-term paraxial element between odd channel 2n-1 and even channel 2m.
pub fn paraxial_two_term(n: i64, m: i64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    parity_sign((n + m) as i64) / PI * (1.0 / (m - n + 0.5) + 1.0 / (m + n - 0.5))
}

/// Overlap (2/b) int_0^b sin(pi (2n-1) y/2b) sin(pi m y/b) dy in closed form.
pub fn fraunhofer_overlap(n: i64, m: i64) -> f64 {
    let (nf, mf) = (n as f64, m as f64);
    2.0 * parity_sign(n + m) * mf / (PI * (mf * mf - (nf - 0.5) * (nf - 0.5)))
}

/// sum_{k=-K}^{K} s_nk s_mk - delta_nm for the pole-only kernel.
pub fn paraxial_row_defect(n: i64, m: i64, cutoff: i64) -> f64 {
    let sum: f64 = (-cutoff..=cutoff)
        .map(|k| paraxial_kernel(n, k) * paraxial_kernel(m, k))
        .sum();
    sum - if n == m { 1.0 } else { 0.0 }
}

/// Parity class of an S-matrix element; indices are the n, m of 2n-1 / 2m.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelPair {
    /// S_{2n-1, 2m}
    OddEven { n: usize, m: usize },
    /// S_{2n-1, 2m-1}
    OddOdd { n: usize, m: usize },
    /// S_{2n, 2m}
    EvenEven { n: usize, m: usize },
}

fn propagating_momentum(k: f64, b: f64, j: usize) -> Result<f64> {
    let p = wiener_hopf::channel_momentum(k, b, j)?;
    if p.im != 0.0 || p.re == 0.0 {
        return Err(invalid("channel", format!("channel {j} is not propagating at k = {k}")));
    }
    Ok(p.re)
}

/// Closed-form large-k S-matrix element, using K+ -> e^{i pi/4}/sqrt(b(k+alpha)).
pub fn s_matrix_asymptotic(k: f64, b: f64, pair: ChannelPair) -> Result<Complex64> {
    let mi = Complex64::new(0.0, -1.0);
    match pair {
        ChannelPair::OddEven { n, m } => {
            if n == 0 || m == 0 {
                return Err(invalid("pair", "indices start at 1"));
            }
            let p1 = propagating_momentum(k, b, 2 * n - 1)?;
            let p2 = propagating_momentum(k, b, 2 * m)?;
            if p1 == p2 {
                return Err(Error::Resonant { n: 2 * n - 1, m: 2 * m });
            }
            let sign = parity_sign((n + m) as i64);
            let v = sign * PI * m as f64 * (k + p1).sqrt()
                / (b * b * (p1 - p2) * (p1 * p2 * (k + p2)).sqrt());
            Ok(Complex64::new(v, 0.0))
        }
        ChannelPair::OddOdd { n, m } => {
            if n == 0 || m == 0 {
                return Err(invalid("pair", "indices start at 1"));
            }
            let p1 = propagating_momentum(k, b, 2 * n - 1)?;
            let p2 = propagating_momentum(k, b, 2 * m - 1)?;
            let sign = parity_sign((n + m) as i64);
            let v = sign * ((k + p1) * (k + p2)).sqrt() / (b * (p1 + p2) * (p1 * p2).sqrt());
            Ok(mi * v)
        }
        ChannelPair::EvenEven { n, m } => {
            if n == 0 || m == 0 {
                return Err(invalid("pair", "indices start at 1"));
            }
            let p1 = propagating_momentum(k, b, 2 * n)?;
            let p2 = propagating_momentum(k, b, 2 * m)?;
            let sign = parity_sign((n + m) as i64);
            let v = sign * PI * PI * (n * m) as f64
                / (b * b * b * (p1 + p2) * (p1 * p2 * (k + p1) * (k + p2)).sqrt());
            Ok(mi * v)
        }
    }
}

//! Sommerfeld half-plane diffraction and the image-sum construction of the
//! transmitted and reflected fields behind the barrier tip.

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, PI};

use super::asymptotic::{s_matrix_asymptotic, ChannelPair};
use crate::error::{invalid, Error, Result};
use crate::wiener_hopf;

const BOUNDARY_TOL: f64 = 1e-9;

/// D = 1/cos((theta - theta_i)/2) - 1/cos((theta + theta_i)/2).
pub fn sommerfeld_diffraction(theta_i: f64, theta: f64) -> Result<f64> {
    let a = ((theta - theta_i) / 2.0).cos();
    let b = ((theta + theta_i) / 2.0).cos();
    if a.abs() < BOUNDARY_TOL || b.abs() < BOUNDARY_TOL {
        return Err(Error::OpticalBoundary { theta });
    }
    Ok(1.0 / a - 1.0 / b)
}

/// Channel form 1/sin((theta + phi)/2) + 1/sin((theta - phi)/2).
pub fn channel_diffraction(phi: f64, theta: f64) -> Result<f64> {
    let a = ((theta + phi) / 2.0).sin();
    let b = ((theta - phi) / 2.0).sin();
    if a.abs() < BOUNDARY_TOL || b.abs() < BOUNDARY_TOL {
        return Err(Error::OpticalBoundary { theta });
    }
    Ok(1.0 / a + 1.0 / b)
}

/// Tapered partial image sum and its convergence estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageSum {
    pub value: Complex64,
    pub r_max: usize,
    /// Relative change against the sum with half the cutoff.
    pub residual: f64,
}

struct Incident {
    k: f64,
    b: f64,
    phi: f64,
    /// Tip amplitude carried by each of the two plane waves of the mode.
    amplitude: f64,
}

impl Incident {
    fn new(k: f64, b: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", "mode index starts at 1"));
        }
        let p = wiener_hopf::channel_momentum(k, b, 2 * n - 1)?;
        if p.im != 0.0 {
            return Err(invalid("n", format!("mode {n} is evanescent at k = {k}")));
        }
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        Ok(Self {
            k,
            b,
            phi: (p.re / k).acos(),
            amplitude: -sign / (b * p.re).sqrt() / 2.0,
        })
    }
}

/// Sum over images at vertical offsets `b -/+ y + 2br`. Each ray carries
/// `weight(theta)`, theta the direction from the tip, continuous across the
/// forward (x > 0) or backward (x < 0) axis; the taper is
/// a function of the offset so paired images cancel exactly on the walls.
fn image_sum_weighted(
    k: f64,
    b: f64,
    x: f64,
    y: f64,
    r_max: usize,
    amplitude: f64,
    alternating: bool,
    weight: &impl Fn(f64) -> f64,
) -> Complex64 {
    let reach = 2.0 * b * (r_max as f64 + 1.0);
    let phase0 = Complex64::from_polar(1.0, -0.75 * PI);
    let ray = |d: f64| -> Complex64 {
        if d.abs() >= reach {
            return Complex64::new(0.0, 0.0);
        }
        let taper = (FRAC_PI_2 * d / reach).cos().powi(2);
        let r = x.hypot(d);
        let theta = if x > 0.0 { d.atan2(x) } else { PI - d.atan2(-x) };
        let w = weight(theta);
        taper * amplitude * w / (8.0 * PI * k * r).sqrt() * Complex64::from_polar(1.0, k * r) * phase0
    };
    let r_max = r_max as i64 + 1;
    (-r_max..=r_max)
        .map(|r| {
            let minus = ray(b - y + 2.0 * b * r as f64);
            let plus = ray(b + y + 2.0 * b * r as f64);
            let s = if alternating && r.rem_euclid(2) == 1 { -1.0 } else { 1.0 };
            s * (minus - plus)
        })
        .sum()
}

fn diffraction_weight(phi: f64) -> impl Fn(f64) -> f64 {
    move |theta| {
        let a = ((theta + phi) / 2.0).sin();
        let b = ((theta - phi) / 2.0).sin();
        1.0 / a + 1.0 / b
    }
}

fn check_point(b: f64, x: f64, y: f64, transmitted: bool) -> Result<()> {
    if transmitted && x <= 0.0 {
        return Err(invalid("x", "transmitted side needs x > 0"));
    }
    if !transmitted && x >= 0.0 {
        return Err(invalid("x", "reflected side needs x < 0"));
    }
    if !(0.0..=b).contains(&y) {
        return Err(invalid("y", format!("must lie in [0, {b}]")));
    }
    Ok(())
}

fn with_residual(r_max: usize, eval: impl Fn(usize) -> Complex64) -> ImageSum {
    let value = eval(r_max);
    let half = eval((r_max / 2).max(1));
    let scale = value.norm().max(f64::MIN_POSITIVE);
    ImageSum {
        value,
        r_max,
        residual: (value - half).norm() / scale,
    }
}

/// Transmitted field of odd mode `n` at (x, y), x > 0, from |r| <= r_max images.
pub fn image_sum_check(k: f64, b: f64, n: usize, x: f64, y: f64, r_max: usize) -> Result<ImageSum> {
    check_point(b, x, y, true)?;
    let inc = Incident::new(k, b, n)?;
    let w = diffraction_weight(inc.phi);
    Ok(with_residual(r_max, |r| image_sum_weighted(inc.k, inc.b, x, y, r, inc.amplitude, false, &w)))
}

/// Doubles r_max from `start` until the residual drops below `tol`.
pub fn image_sum_converged(k: f64, b: f64, n: usize, x: f64, y: f64, start: usize, tol: f64) -> Result<ImageSum> {
    let mut r_max = start.max(2);
    loop {
        let s = image_sum_check(k, b, n, x, y, r_max)?;
        if s.residual < tol || r_max > 1 << 24 {
            return Ok(s);
        }
        r_max *= 2;
    }
}

/// Reflected field (x < 0): images weighted by (-1)^r.
pub fn reflected_image_sum(k: f64, b: f64, n: usize, x: f64, y: f64, r_max: usize) -> Result<ImageSum> {
    check_point(b, x, y, false)?;
    let inc = Incident::new(k, b, n)?;
    let w = diffraction_weight(inc.phi);
    Ok(with_residual(r_max, |r| image_sum_weighted(inc.k, inc.b, x, y, r, inc.amplitude, true, &w)))
}

/// sum_m S_{2n-1,2m} e^{i x p_2m} sin(pi m y/b)/sqrt(b p_2m) over propagating even channels,
/// with the large-k S-matrix elements.
pub fn channel_expansion(k: f64, b: f64, n: usize, x: f64, y: f64) -> Result<Complex64> {
    let n_even = super::propagating_count(k, b)? / 2;
    (1..=n_even)
        .map(|m| {
            let s = s_matrix_asymptotic(k, b, ChannelPair::OddEven { n, m })?;
            let p = wiener_hopf::momentum(k, b, 2 * m).re;
            let mode = (PI * m as f64 * y / b).sin() / (b * p).sqrt();
            Ok(s * Complex64::from_polar(mode, x * p))
        })
        .sum()
}

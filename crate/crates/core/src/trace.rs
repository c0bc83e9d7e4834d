//! Periodic-orbit side of the spectrum: orbit families and their signed
//! areas, smooth and oscillating level densities, the f-kernel and Q-matrix
//! whose traces reproduce the orbit amplitudes, and the length spectrum of a
//! computed level sequence.

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_4, PI, TAU};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, CMat, RMat};
use crate::numeric::{frac, gcd, linear_fit, simpson};
use crate::transfer::Geometry;

/// Integer and fractional part of x, snapping values within rounding noise of an integer.
fn split_integer(x: f64) -> (i64, f64) {
    let r = x.round();
    if (x - r).abs() <= 1e-12 * x.abs().max(1.0) {
        (r as i64, 0.0)
    } else {
        (x.floor() as i64, frac(x))
    }
}

fn parity_sign(n: i64) -> f64 {
    if n.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbitFamily {
    /// Both winding numbers positive.
    Oblique,
    /// Orbits parallel to the barrier (N = 0); amplitude rule not applicable.
    Boundary,
}

/// A periodic orbit family (M, N), possibly a repetition of a primitive one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicOrbit {
    pub m_wind: u64,
    pub n_wind: u64,
    /// Number of traversals of the primitive orbit (1 for primitive).
    pub repetition: u64,
    pub length: f64,
    pub k_int: i64,
    pub eta: f64,
    /// Signed area; see [`repeated_amplitude`].
    pub amplitude: f64,
    pub family: OrbitFamily,
}

pub fn orbit_length(geometry: &Geometry, m_wind: u64, n_wind: u64) -> f64 {
    (2.0 * geometry.a() * m_wind as f64).hypot(2.0 * geometry.b() * n_wind as f64)
}

/// (-1)^K (1 - 2 eta) 4ab with K + eta = N h1/a; independent of M.
pub fn orbit_amplitude(geometry: &Geometry, n_wind: u64) -> f64 {
    let (k, eta) = split_integer(n_wind as f64 * geometry.h1() / geometry.a());
    parity_sign(k) * (1.0 - 2.0 * eta) * 4.0 * geometry.area()
}

/// Amplitude of the r-th traversal of the primitive family with winding
/// `n_primitive`. The family is two pencils of widths 1 - eta and eta with
/// opposite signs, so each pencil's sign is raised to the r-th power:
/// (-1)^{K r} [(1 - eta) + (-1)^r eta] 4ab. Even repetitions carry the full area.
pub fn repeated_amplitude(geometry: &Geometry, n_primitive: u64, repetition: u64) -> f64 {
    let (k, eta) = split_integer(n_primitive as f64 * geometry.h1() / geometry.a());
    let r = repetition as i64;
    parity_sign(k * r) * ((1.0 - eta) + parity_sign(r) * eta) * 4.0 * geometry.area()
}

fn make_orbit(geometry: &Geometry, m: u64, n: u64, repetition: u64) -> PeriodicOrbit {
    let (k_int, eta) = split_integer(n as f64 * geometry.h1() / geometry.a());
    let amplitude = if n == 0 || repetition <= 1 {
        orbit_amplitude(geometry, n)
    } else {
        repeated_amplitude(geometry, n / repetition, repetition)
    };
    PeriodicOrbit {
        m_wind: m,
        n_wind: n,
        repetition,
        length: orbit_length(geometry, m, n),
        k_int,
        eta,
        amplitude,
        family: if n == 0 { OrbitFamily::Boundary } else { OrbitFamily::Oblique },
    }
}

/// All families with length <= l_max: co-prime (M, N >= 1), their repetitions
/// (rM, rN), and the N = 0 family (r, 0). Sorted by length.
pub fn enumerate_orbits(geometry: &Geometry, l_max: f64) -> Result<Vec<PeriodicOrbit>> {
    let shortest = 2.0 * geometry.a().min(geometry.b());
    if !(l_max > 2.0 * geometry.a()) {
        return Err(invalid("l_max", format!("must exceed 2a = {}", 2.0 * geometry.a())));
    }
    let m_max = (l_max / (2.0 * geometry.a())).floor() as u64;
    let n_max = (l_max / shortest).ceil() as u64;
    let mut out = vec![];
    for m in 1..=m_max {
        for n in 0..=n_max {
            let g = gcd(m, n);
            if orbit_length(geometry, m, n) <= l_max {
                out.push(make_orbit(geometry, m, n, g));
            }
        }
    }
    out.sort_by(|a, b| a.length.total_cmp(&b.length).then(a.m_wind.cmp(&b.m_wind)));
    Ok(out)
}

/// Smooth level density in energy, area/(4 pi).
pub fn weyl_density(geometry: &Geometry) -> f64 {
    geometry.area() / (4.0 * PI)
}

/// (1/4pi) sum_p A_p (2 pi k L_p)^{-1/2} e^{i(k L_p - pi/4)} + c.c. over the
/// oblique families; the N = 0 family is left out.
pub fn oscillating_density(orbits: &[PeriodicOrbit], k: f64) -> f64 {
    orbits
        .iter()
        .filter(|o| o.family == OrbitFamily::Oblique)
        .map(|o| o.amplitude / (TAU * k * o.length).sqrt() * (k * o.length - FRAC_PI_4).cos())
        .sum::<f64>()
        / TAU
}

/// f_0 = 1 - 2{y}, f_p = -2 sin(pi y p)/(pi p).
pub fn f_kernel(p: i64, y: f64) -> f64 {
    if p == 0 {
        1.0 - 2.0 * split_integer(y).1
    } else {
        -2.0 * (PI * y * p as f64).sin() / (PI * p as f64)
    }
}

/// U = (1 - f)/2 on R x R: the sinc kernel sin(pi y (m-n))/(pi (m-n)), diagonal {y}.
pub fn u_matrix(r_dim: usize, y: f64) -> RMat {
    RMat::from_fn(r_dim, r_dim, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        (delta - f_kernel(i as i64 - j as i64, y)) / 2.0
    })
}

/// Truncated Q-matrix of the orbit family (M, N) at barrier ratio h1/a.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QMatrixSpec {
    r_dim: usize,
    m_wind: u64,
    n_wind: u64,
    h_ratio: f64,
}

impl QMatrixSpec {
    pub fn new(r_dim: usize, m_wind: u64, n_wind: u64, h_ratio: f64) -> Result<Self> {
        if m_wind == 0 {
            return Err(invalid("m_wind", "must be positive"));
        }
        if gcd(m_wind, n_wind) != 1 {
            return Err(Error::NotCoprime { m: m_wind, n: n_wind });
        }
        if r_dim < 4 * m_wind as usize {
            return Err(invalid("r_dim", format!("must be at least 4M = {}", 4 * m_wind)));
        }
        if !(h_ratio > 0.0 && h_ratio < 1.0) {
            return Err(invalid("h_ratio", format!("h1/a must lie in (0, 1), got {h_ratio}")));
        }
        Ok(Self {
            r_dim,
            m_wind,
            n_wind,
            h_ratio,
        })
    }

    pub fn r_dim(&self) -> usize {
        self.r_dim
    }

    pub fn m_wind(&self) -> u64 {
        self.m_wind
    }

    pub fn n_wind(&self) -> u64 {
        self.n_wind
    }

    /// z = N/M
    pub fn z(&self) -> f64 {
        self.n_wind as f64 / self.m_wind as f64
    }

    /// y = z h1/a
    pub fn y(&self) -> f64 {
        self.z() * self.h_ratio
    }
}

/// Q_mn = e^{-2 pi i z m} f_{m-n}(y), m, n = 1..R.
pub fn q_matrix(spec: &QMatrixSpec) -> CMat {
    let (z, y) = (spec.z(), spec.y());
    CMat::from_fn(spec.r_dim, spec.r_dim, |i, j| {
        let m = i as i64 + 1;
        Complex64::from_polar(f_kernel(m - (j as i64 + 1), y), -TAU * z * m as f64)
    })
}

/// Orbit-side value (-1)^K (1 - 2 eta), K + eta = N h1/a.
pub fn q_trace_prediction(spec: &QMatrixSpec) -> f64 {
    let (k, eta) = split_integer(spec.n_wind as f64 * spec.h_ratio);
    parity_sign(k) * (1.0 - 2.0 * eta)
}

/// Limit of (1/R) Tr Q^M from the eigenvalue clustering: (-1)^s (1 - 2 eta),
/// s = floor(M {y}), eta = {M y}.
pub fn q_trace_limit(spec: &QMatrixSpec) -> f64 {
    let m = spec.m_wind as f64;
    let (s, _) = split_integer(m * split_integer(spec.y()).1);
    let (_, eta) = split_integer(m * spec.y());
    parity_sign(s) * (1.0 - 2.0 * eta)
}

/// Numerical check of the Q-matrix mechanism at one truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QCheck {
    pub r_dim: usize,
    /// (1/R) Tr Q^M
    pub trace: Complex64,
    pub limit: f64,
    pub prediction: f64,
    /// Fraction of eigenvalues within `tol` of a 2M-th root of unity.
    pub clustering_fraction: f64,
}

impl QCheck {
    pub fn trace_error(&self) -> f64 {
        (self.trace - self.limit).norm()
    }
}

pub fn q_check(spec: &QMatrixSpec, tol: f64) -> Result<QCheck> {
    let ev = linalg::eigenvalues(&q_matrix(spec))?;
    let two_m = 2 * spec.m_wind as usize;
    let clustered = ev
        .iter()
        .filter(|l| {
            (0..two_m).any(|b| (*l - Complex64::from_polar(1.0, TAU * b as f64 / two_m as f64)).norm() < tol)
        })
        .count();
    let power = spec.m_wind as i32;
    let trace = ev.iter().map(|l| l.powi(power)).sum::<Complex64>() / spec.r_dim as f64;
    Ok(QCheck {
        r_dim: spec.r_dim,
        trace,
        limit: q_trace_limit(spec),
        prediction: q_trace_prediction(spec),
        clustering_fraction: clustered as f64 / ev.len() as f64,
    })
}

/// Smooth counting function c2 k^2 + c1 k + c0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothCounting {
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

impl SmoothCounting {
    /// Weyl area term fixed, perimeter and constant terms fitted to the
    /// staircase midpoints N(k_j) = j - 1/2.
    pub fn fit(geometry: &Geometry, levels: &[f64]) -> Result<Self> {
        let c2 = weyl_density(geometry);
        let residual: Vec<f64> = levels
            .iter()
            .enumerate()
            .map(|(j, k)| j as f64 + 0.5 - c2 * k * k)
            .collect();
        let fit = linear_fit(levels, &residual)?;
        Ok(Self {
            c2,
            c1: fit.slope,
            c0: fit.intercept,
        })
    }

    pub fn count(&self, k: f64) -> f64 {
        (self.c2 * k + self.c1) * k + self.c0
    }

    pub fn density(&self, k: f64) -> f64 {
        2.0 * self.c2 * k + self.c1
    }
}

/// |F(L)| on a grid with F(L) = sum_j w(k_j) k_j^{-1/2} e^{-i k_j L} minus
/// the same transform of the smooth density; w is a Hann window on [k_lo, k_hi].
#[derive(Debug, Clone, PartialEq)]
pub struct LengthSpectrum {
    pub lengths: Vec<f64>,
    pub weights: Vec<f64>,
    pub k_lo: f64,
    pub k_hi: f64,
    /// Grid finer than the window resolution 2 pi/(k_hi - k_lo).
    pub oversampled: bool,
}

impl LengthSpectrum {
    /// Largest weight within `half_width` of `target` and where it sits.
    pub fn peak_near(&self, target: f64, half_width: f64) -> Option<(f64, f64)> {
        self.lengths
            .iter()
            .zip(&self.weights)
            .filter(|(l, _)| (*l - target).abs() <= half_width)
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(l, w)| (*l, *w))
    }

    pub fn grid_step(&self) -> f64 {
        if self.lengths.len() < 2 {
            0.0
        } else {
            (self.lengths[self.lengths.len() - 1] - self.lengths[0]) / (self.lengths.len() - 1) as f64
        }
    }
}

fn hann(k: f64, lo: f64, hi: f64) -> f64 {
    if k <= lo || k >= hi {
        0.0
    } else {
        (PI * (k - lo) / (hi - lo)).sin().powi(2)
    }
}

pub fn length_spectrum(levels: &[f64], smooth: &SmoothCounting, l_grid: &[f64]) -> Result<LengthSpectrum> {
    if levels.len() < 2 {
        return Err(invalid("levels", "need at least two levels"));
    }
    if l_grid.is_empty() {
        return Err(invalid("l_grid", "empty length grid"));
    }
    let k_lo = levels[0];
    let k_hi = levels[levels.len() - 1];
    let panels = (((k_hi - k_lo) * l_grid.iter().fold(1.0f64, |a, &l| a.max(l.abs()))) as usize * 8).max(2000);
    let weights = l_grid
        .iter()
        .map(|&l| {
            let discrete: Complex64 = levels
                .iter()
                .map(|&k| Complex64::from_polar(hann(k, k_lo, k_hi) / k.sqrt(), -k * l))
                .sum();
            let smooth_part = |f: fn(f64) -> f64| {
                simpson(
                    |k| hann(k, k_lo, k_hi) / k.sqrt() * smooth.density(k) * f(-k * l),
                    k_lo,
                    k_hi,
                    panels,
                )
            };
            let continuous = Complex64::new(smooth_part(f64::cos), smooth_part(f64::sin));
            (discrete - continuous).norm()
        })
        .collect();
    let spectrum = LengthSpectrum {
        lengths: l_grid.to_vec(),
        weights,
        k_lo,
        k_hi,
        oversampled: false,
    };
    let oversampled = spectrum.grid_step() < TAU / (k_hi - k_lo);
    Ok(LengthSpectrum { oversampled, ..spectrum })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn geo(a: f64, b: f64, h1: f64) -> Geometry {
        Geometry::new(a, b, h1).unwrap()
    }

    /// Brute-force pencil widths from the unfolded singular points
    /// (+-h1 + 2ma, (2n+1)b): the gap in signed distance containing the
    /// orbit through the origin, and its neighbour.
    fn pencil_widths(g: &Geometry, m_wind: u64, n_wind: u64) -> (f64, f64) {
        let (a, b, h1) = (g.a(), g.b(), g.h1());
        let (mw, nw) = (m_wind as f64, n_wind as f64);
        let norm = (mw * a).hypot(nw * b);
        let mut d = vec![];
        for m in -60i64..=60 {
            for n in -60i64..=60 {
                for s in [1.0, -1.0] {
                    let x0 = s * h1 + 2.0 * m as f64 * a;
                    let y0 = (2 * n + 1) as f64 * b;
                    d.push((mw * a * y0 - nw * b * x0) / norm);
                }
            }
        }
        let above = d.iter().copied().filter(|&v| v > 1e-12).fold(f64::INFINITY, f64::min);
        let below = d.iter().copied().filter(|&v| v < -1e-12).fold(f64::NEG_INFINITY, f64::max);
        let next = d.iter().copied().filter(|&v| v > above + 1e-12).fold(f64::INFINITY, f64::min);
        (above - below, next - above)
    }

    #[test]
    fn boundary_family_length() {
        let g = geo(1.0, 1.0, 0.3);
        let orbits = enumerate_orbits(&g, 8.0).unwrap();
        let first = orbits[0];
        assert_eq!((first.m_wind, first.n_wind), (1, 0));
        assert_relative_eq!(first.length, 2.0);
        assert_eq!(first.family, OrbitFamily::Boundary);
        assert!(enumerate_orbits(&g, 1.5).is_err());
    }

    #[test]
    fn enumeration_contents() {
        let g = geo(1.0, 1.0, 0.3);
        let orbits = enumerate_orbits(&g, 8.0).unwrap();
        let oblique: Vec<(u64, u64, u64)> = orbits
            .iter()
            .filter(|o| o.family == OrbitFamily::Oblique)
            .map(|o| (o.m_wind, o.n_wind, o.repetition))
            .collect();
        for want in [(1, 1, 1), (1, 2, 1), (2, 1, 1), (2, 2, 2), (1, 3, 1), (3, 1, 1), (2, 3, 1), (3, 2, 1)] {
            assert!(oblique.contains(&want), "{want:?}");
        }
        assert!(orbits.iter().all(|o| o.length <= 8.0));
        assert!(orbits.windows(2).all(|w| w[0].length <= w[1].length));
        assert!(orbits.iter().all(|o| o.amplitude.abs() <= 4.0 * g.area() + 1e-12));
    }

    #[test]
    fn amplitude_examples() {
        let half = geo(1.0, 1.0, 0.5);
        for n in [1u64, 3, 5] {
            assert!(orbit_amplitude(&half, n).abs() < 1e-12);
        }
        let third = geo(1.0, 1.0, 1.0 / 3.0);
        assert_relative_eq!(orbit_amplitude(&third, 1), 4.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(orbit_amplitude(&third, 3).abs(), 4.0, max_relative = 1e-12);
        assert_relative_eq!(orbit_amplitude(&third, 4), -orbit_amplitude(&third, 1), max_relative = 1e-12);
        // N h1/a integer up to rounding: 10 * 0.3
        let g = geo(1.0, 1.0, 0.3);
        assert_relative_eq!(orbit_amplitude(&g, 10).abs(), 4.0, max_relative = 1e-12);
    }

    #[test]
    fn amplitude_matches_unfolded_pencils() {
        let g = geo(1.0, 1.0, 0.3);
        for (m, n) in [(1u64, 2u64), (3, 2), (1, 1), (2, 1), (3, 1), (2, 3), (5, 2)] {
            let (d1, d2) = pencil_widths(&g, m, n);
            let l = orbit_length(&g, m, n);
            let omega = 2.0 * g.area() / l;
            assert_relative_eq!(d1 + d2, 2.0 * omega, max_relative = 1e-9);
            let maslov = if m % 2 == 1 { 1.0 } else { -1.0 };
            let geometric = maslov * (d1 - d2) * l;
            assert_relative_eq!(geometric, orbit_amplitude(&g, n), max_relative = 1e-9, epsilon = 1e-12);
        }
    }

    #[test]
    fn weyl_unit_square() {
        assert_relative_eq!(weyl_density(&geo(1.0, 1.0, 0.3)), 1.0 / (4.0 * PI));
    }

    #[test]
    fn single_orbit_density_period() {
        let g = geo(1.0, 1.0, 0.3);
        let o = [make_orbit(&g, 1, 1, 1)];
        let period = TAU / o[0].length;
        let k = 50.0;
        let scale = |k: f64| (k).sqrt();
        let a = oscillating_density(&o, k) * scale(k);
        let b = oscillating_density(&o, k + period) * scale(k + period);
        assert_relative_eq!(a, b, max_relative = 1e-9);
    }

    #[test]
    fn f_kernel_values() {
        assert_eq!(f_kernel(0, 2.0), 1.0);
        assert!(f_kernel(3, 2.0).abs() < 1e-14);
        assert_relative_eq!(f_kernel(1, 0.5), -2.0 / PI);
        assert_relative_eq!(f_kernel(0, 0.37), 0.26, max_relative = 1e-12);
    }

    #[test]
    fn u_matrix_counts_y_r_unit_eigenvalues() {
        let (r, y) = (400, 0.37);
        let ev = linalg::symmetric_eigenvalues(&u_matrix(r, y)).unwrap();
        assert!(ev[0] > -1e-6 && ev[r - 1] < 1.0 + 1e-6);
        let near_one = ev.iter().filter(|&&e| e > 0.95).count() as f64;
        assert!((near_one - y * r as f64).abs() < 2.0 * (r as f64).ln(), "{near_one}");
    }

    #[test]
    fn q_matrix_integer_z_is_f_kernel() {
        let spec = QMatrixSpec::new(40, 1, 2, 0.3).unwrap();
        let q = q_matrix(&spec);
        for i in 0..40 {
            for j in 0..40 {
                assert!((q[(i, j)].re - f_kernel(i as i64 - j as i64, spec.y())).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn q_spec_validation() {
        assert!(matches!(QMatrixSpec::new(100, 2, 4, 0.3), Err(Error::NotCoprime { .. })));
        assert!(QMatrixSpec::new(7, 2, 1, 0.3).is_err());
        assert!(QMatrixSpec::new(100, 2, 1, 1.3).is_err());
    }

    #[test]
    fn prediction_example() {
        let spec = QMatrixSpec::new(100, 2, 1, 1.0 / 3.0).unwrap();
        assert_relative_eq!(q_trace_prediction(&spec), 1.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(q_trace_limit(&spec), 1.0 / 3.0, max_relative = 1e-12);
        let int = QMatrixSpec::new(100, 3, 2, 0.5).unwrap();
        assert_relative_eq!(q_trace_prediction(&int).abs(), 1.0);
    }

    #[test]
    fn repetitions_follow_powers_of_q() {
        let g = geo(1.0, 1.0, 0.3);
        for (m, n) in [(1u64, 1u64), (2, 1)] {
            let spec = QMatrixSpec::new(400, m, n, 0.3).unwrap();
            let ev = linalg::eigenvalues(&q_matrix(&spec)).unwrap();
            for r in 1..=3u64 {
                let power = (r * m) as i32;
                let trace = ev.iter().map(|l| l.powi(power)).sum::<Complex64>() / 400.0;
                let expected = repeated_amplitude(&g, n, r) / 4.0;
                assert!((trace - expected).norm() < 0.05, "({m},{n}) r={r}: {trace} vs {expected}");
            }
        }
        assert_relative_eq!(repeated_amplitude(&g, 1, 1), orbit_amplitude(&g, 1), max_relative = 1e-12);
        assert_relative_eq!(repeated_amplitude(&g, 1, 2), 4.0, max_relative = 1e-12);
        let orbits = enumerate_orbits(&g, 6.0).unwrap();
        let twice = orbits.iter().find(|o| (o.m_wind, o.n_wind) == (2, 2)).unwrap();
        assert_eq!(twice.repetition, 2);
        assert_relative_eq!(twice.amplitude, 4.0, max_relative = 1e-12);
    }

    #[test]
    fn q_clustering_at_moderate_size() {
        let spec = QMatrixSpec::new(200, 2, 1, 0.3).unwrap();
        let c = q_check(&spec, 0.05).unwrap();
        assert!(c.clustering_fraction > 0.9, "{}", c.clustering_fraction);
        assert!(c.trace_error() < 0.05, "{}", c.trace_error());
    }

    /// Levels k_j solving N(k) = j - 1/2 for N = Weyl + A sqrt(k) sin(k L - pi/4)/L.
    fn synthetic_levels(c2: f64, l_star: f64, amp: f64) -> Vec<f64> {
        let count = |k: f64| c2 * k * k + amp * k.sqrt() * (k * l_star - FRAC_PI_4).sin() / l_star;
        let mut levels = vec![];
        let mut lo = 5.0;
        let mut target = count(lo).ceil() + 0.5;
        while lo < 160.0 {
            let mut hi = lo;
            while count(hi) < target {
                hi += 0.01;
            }
            let mut a = hi - 0.01;
            let mut b = hi;
            for _ in 0..60 {
                let mid = 0.5 * (a + b);
                if count(mid) < target {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            levels.push(0.5 * (a + b));
            lo = b;
            target += 1.0;
        }
        levels
    }

    #[test]
    fn synthetic_single_orbit_length_spectrum() {
        let g = geo(1.0, 1.0, 0.3);
        let c2 = weyl_density(&g);
        let l_star = 3.3;
        let grid: Vec<f64> = (100..=600).map(|i| i as f64 * 0.01).collect();
        let heights: Vec<f64> = [0.1, 0.2]
            .iter()
            .map(|&amp| {
                let levels = synthetic_levels(c2, l_star, amp);
                let smooth = SmoothCounting::fit(&g, &levels).unwrap();
                let ls = length_spectrum(&levels, &smooth, &grid).unwrap();
                let (pos, height) = ls.peak_near(l_star, 0.3).unwrap();
                assert!((pos - l_star).abs() <= ls.grid_step() + 1e-9, "{pos}");
                let away = ls.peak_near(5.0, 0.5).unwrap().1;
                assert!(away < 0.1 * height, "{away} vs {height}");
                height
            })
            .collect();
        assert!((heights[1] / heights[0] - 2.0).abs() < 0.1, "{heights:?}");
    }

    proptest! {
        #[test]
        fn prediction_equals_scaled_amplitude(h in 0.01f64..0.99, m in 1u64..9, n in 1u64..9, a in 0.5f64..2.0, b in 0.5f64..2.0) {
            prop_assume!(gcd(m, n) == 1);
            let g = geo(a, b, h * a);
            let spec = QMatrixSpec::new(64, m, n, h).unwrap();
            prop_assert!((q_trace_prediction(&spec) - orbit_amplitude(&g, n) / (4.0 * a * b)).abs() < 1e-9);
        }

        #[test]
        fn density_is_real_and_finite(k in 1.0f64..200.0) {
            let g = geo(1.0, 1.0, 0.3);
            let orbits = enumerate_orbits(&g, 12.0).unwrap();
            prop_assert!(oscillating_density(&orbits, k).is_finite());
        }
    }
}

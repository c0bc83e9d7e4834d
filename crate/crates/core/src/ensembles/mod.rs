//! Ruijsenaars-Schneider Lax matrices, the fixed-angle A, c, C and xi
//! ensembles, and samplers for the admissible angle regions.

mod laws;

pub use laws::{semi_poisson_form_factor, semi_poisson_r2, spacing_law_eval, SpacingLaw};

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use std::f64::consts::{PI, TAU};

use crate::error::{invalid, Error, Result};
use crate::linalg::{CMat, RMat};
use crate::rng;
use crate::transfer::{self, phase_dressed, UnitarySample};

const COINCIDENT_TOL: f64 = 1e-12;

/// Angles, phases and coupling of one Lax matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LaxConfiguration {
    alpha: f64,
    theta: Vec<f64>,
    phases: Vec<f64>,
}

impl LaxConfiguration {
    pub fn new(alpha: f64, theta: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return Err(invalid("theta", "needs at least one angle"));
        }
        if theta.len() != phases.len() {
            return Err(invalid(
                "phases",
                format!("length {} differs from theta length {}", phases.len(), theta.len()),
            ));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid("alpha", format!("must lie in (0, 1), got {alpha}")));
        }
        Ok(Self { alpha, theta, phases })
    }

    pub fn n(&self) -> usize {
        self.theta.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }
}

/// Row and column weights W, V of the Lax matrix (products taken in log space).
fn lax_weights(theta: &[f64], alpha: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let shift = PI * alpha;
    let n = theta.len();
    let mut w = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for i in 0..n {
        let (mut log_w, mut log_v, mut sign_w, mut sign_v) = (0.0, 0.0, 1.0, 1.0);
        for j in (0..n).filter(|&j| j != i) {
            let half = (theta[i] - theta[j]) / 2.0;
            let den = half.sin();
            if den.abs() < COINCIDENT_TOL {
                return Err(Error::CoincidentAngles { i, j });
            }
            let rw = (half + shift).sin() / den;
            let rv = (half - shift).sin() / den;
            log_w += rw.abs().ln();
            log_v += rv.abs().ln();
            sign_w *= rw.signum();
            sign_v *= rv.signum();
        }
        if sign_w != sign_v || !log_w.is_finite() || !log_v.is_finite() {
            return Err(Error::SignMismatch { index: i });
        }
        w.push((log_w / 2.0).exp());
        v.push((log_v / 2.0).exp() * sign_w);
    }
    Ok((w, v))
}

/// Real Lax matrix M_nm = W_n sin(pi alpha)/sin((theta_n - theta_m)/2 + pi alpha) V_m.
pub fn lax_kernel(theta: &[f64], alpha: f64) -> Result<RMat> {
    let (w, v) = lax_weights(theta, alpha)?;
    let shift = PI * alpha;
    let n = theta.len();
    for i in 0..n {
        for j in 0..n {
            if ((theta[i] - theta[j]) / 2.0 + shift).sin().abs() < COINCIDENT_TOL {
                return Err(invalid("theta", format!("angles {i}, {j} sit on a pole of the kernel")));
            }
        }
    }
    Ok(RMat::from_fn(n, n, |i, j| {
        w[i] * shift.sin() / ((theta[i] - theta[j]) / 2.0 + shift).sin() * v[j]
    }))
}

/// Unitary Lax matrix diag(e^{i phi}) M.
pub fn lax_matrix(config: &LaxConfiguration) -> Result<UnitarySample> {
    let m = lax_kernel(&config.theta, config.alpha)?;
    Ok(UnitarySample {
        matrix: phase_dressed(&m, &config.phases),
        phases: config.phases.clone(),
        seed: None,
        label: format!("lax(alpha={})", config.alpha),
    })
}

/// i.i.d. uniform phases in [0, 2pi).
pub fn random_phases(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>() * TAU).collect()
}

/// Angles for alpha = 1/2: zero, then n-1 sorted uniforms in (0, pi), with
/// every second entry (1-based even) moved to the lower half-circle.
pub fn sample_omega_half(n: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
    if n < 3 || n % 2 == 0 {
        return Err(invalid("n", format!("must be odd and at least 3, got {n}")));
    }
    let mut theta: Vec<f64> = std::iter::once(0.0)
        .chain((1..n).map(|_| rng.random::<f64>() * PI))
        .collect();
    theta[1..].sort_by(f64::total_cmp);
    theta.iter_mut().skip(1).step_by(2).for_each(|t| *t += PI);
    Ok(theta)
}

/// Angles for alpha = 1/(2n): ascending from zero with every circular gap
/// exceeding pi/n (rods of length pi/n on a circle of length 2pi).
pub fn sample_omega_hard_rod(n: usize, rng: &mut impl Rng) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(invalid("n", format!("must be at least 2, got {n}")));
    }
    let mut free: Vec<f64> = (1..n).map(|_| rng.random::<f64>() * PI).collect();
    free.sort_by(f64::total_cmp);
    let rod = PI / n as f64;
    Ok(std::iter::once(0.0)
        .chain(free.iter().enumerate().map(|(j, u)| u + (j + 1) as f64 * rod))
        .collect())
}

/// Sigma_nm = 1/(n cos(pi (n - m)/n)), n odd.
pub fn sigma_matrix(n: usize) -> Result<RMat> {
    if n % 2 == 0 || n == 0 {
        return Err(invalid("n", format!("must be odd, got {n}")));
    }
    let nf = n as f64;
    Ok(RMat::from_fn(n, n, |i, j| {
        1.0 / (nf * (PI * (i as f64 - j as f64) / nf).cos())
    }))
}

/// z_jk = 1/(n sin(pi (j - k + 1/2)/n)), the Lax kernel at alpha = 1/(2n)
/// on equally spaced angles.
pub fn z_matrix(n: usize) -> Result<RMat> {
    if n < 2 {
        return Err(invalid("n0", format!("must be at least 2, got {n}")));
    }
    let nf = n as f64;
    Ok(RMat::from_fn(n, n, |i, j| {
        1.0 / (nf * (PI * (i as f64 - j as f64 + 0.5) / nf).sin())
    }))
}

fn sample(matrix: CMat, phases: Vec<f64>, label: &str) -> UnitarySample {
    UnitarySample {
        matrix,
        phases,
        seed: None,
        label: label.into(),
    }
}

/// A = diag(e^{i phi}) Sigma.
pub fn a_matrix(n: usize, rng: &mut impl Rng) -> Result<UnitarySample> {
    let sigma = sigma_matrix(n)?;
    let phases = random_phases(n, rng);
    Ok(sample(phase_dressed(&sigma, &phases), phases, "A"))
}

/// c = diag(e^{i phi}) z.
pub fn c_matrix(n0: usize, rng: &mut impl Rng) -> Result<UnitarySample> {
    let z = z_matrix(n0)?;
    let phases = random_phases(n0, rng);
    Ok(sample(phase_dressed(&z, &phases), phases, "c"))
}

/// Block matrix [[0, diag(e^{i phi}) z], [diag(e^{i phi'}) z^T, 0]] of size 2 n0.
pub fn big_c_matrix(n0: usize, rng: &mut impl Rng) -> Result<UnitarySample> {
    let z = z_matrix(n0)?;
    let phases = random_phases(2 * n0, rng);
    let m = CMat::from_fn(2 * n0, 2 * n0, |i, j| match (i < n0, j < n0) {
        (true, false) => Complex64::from_polar(z[(i, j - n0)], phases[i]),
        (false, true) => Complex64::from_polar(z[(j, i - n0)], phases[i]),
        _ => Complex64::new(0.0, 0.0),
    });
    Ok(sample(m, phases, "C"))
}

/// xi = diag(e^{i phi}) z diag(e^{i phi'}) z^T, the diagonal block of C^2.
pub fn xi_matrix(n0: usize, rng: &mut impl Rng) -> Result<UnitarySample> {
    let z = z_matrix(n0)?;
    let phases = random_phases(2 * n0, rng);
    let left = phase_dressed(&z, &phases[..n0]);
    let right = phase_dressed(&z.transpose().to_owned(), &phases[n0..]);
    Ok(sample(&left * &right, phases, "xi"))
}

/// Random-matrix families available to the sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleKind {
    /// Fixed Sigma with random phases.
    A,
    /// Phase-stripped barrier S-matrix on the channel coordinates, random phases.
    B,
    /// Lax matrix at alpha = 1/2 with angles drawn from the alternating region.
    LaxHalf,
    /// Lax matrix at alpha = 1/(2n) with hard-rod angles.
    LaxHardRod,
    SmallC,
    BigC,
    Xi,
}

/// An ensemble with its size parameter.
#[derive(Debug, Clone)]
pub struct Ensemble {
    kind: EnsembleKind,
    size: usize,
    /// Fixed S~ shared by all B realisations.
    b_kernel: Option<RMat>,
}

impl Ensemble {
    /// `size` is the matrix dimension, except for C where it is the block size n0.
    pub fn new(kind: EnsembleKind, size: usize) -> Result<Self> {
        let b_kernel = match kind {
            EnsembleKind::A | EnsembleKind::LaxHalf if size % 2 == 0 || size < 3 => {
                return Err(invalid("dim", format!("must be odd and at least 3, got {size}")));
            }
            EnsembleKind::B => {
                if size == 0 {
                    return Err(invalid("dim", "must be positive"));
                }
                // k centred between the thresholds of channels `size` and `size + 1` (b = 1)
                let k = PI * (size as f64 + 0.5) / 2.0;
                let x = transfer::channel_coordinates(k, 1.0)?;
                Some(transfer::s_tilde(&x)?)
            }
            _ if size < 2 => return Err(invalid("dim", format!("must be at least 2, got {size}"))),
            _ => None,
        };
        Ok(Self { kind, size, b_kernel })
    }

    pub fn kind(&self) -> EnsembleKind {
        self.kind
    }

    /// Dimension of the sampled matrices.
    pub fn dim(&self) -> usize {
        match self.kind {
            EnsembleKind::BigC => 2 * self.size,
            _ => self.size,
        }
    }

    /// Realisation `index` of the stream seeded by `seed`.
    pub fn sample(&self, seed: u64, index: u64) -> Result<UnitarySample> {
        let mut rng = rng::stream(seed, index);
        let n = self.size;
        let mut s = match self.kind {
            EnsembleKind::A => a_matrix(n, &mut rng)?,
            EnsembleKind::B => {
                let kernel = self.b_kernel.as_ref().expect("B kernel built in new");
                transfer::random_b_from(kernel, &mut rng, seed)
            }
            EnsembleKind::LaxHalf => {
                let theta = sample_omega_half(n, &mut rng)?;
                let phases = random_phases(n, &mut rng);
                lax_matrix(&LaxConfiguration::new(0.5, theta, phases)?)?
            }
            EnsembleKind::LaxHardRod => {
                let theta = sample_omega_hard_rod(n, &mut rng)?;
                let phases = random_phases(n, &mut rng);
                lax_matrix(&LaxConfiguration::new(0.5 / n as f64, theta, phases)?)?
            }
            EnsembleKind::SmallC => c_matrix(n, &mut rng)?,
            EnsembleKind::BigC => big_c_matrix(n, &mut rng)?,
            EnsembleKind::Xi => xi_matrix(n, &mut rng)?,
        };
        s.seed = Some(seed);
        Ok(s)
    }

    /// Sorted eigenphases of realisations 0..count, computed in parallel.
    pub fn eigenphase_samples(&self, seed: u64, count: usize) -> Result<Vec<Vec<f64>>> {
        (0..count as u64)
            .into_par_iter()
            .map(|i| self.sample(seed, i)?.eigenphases())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{self, orthogonality_defect};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn equally_spaced(n: usize) -> Vec<f64> {
        (1..=n).map(|j| TAU * j as f64 / n as f64).collect()
    }

    fn max_diff(a: &RMat, b: &RMat) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                worst = worst.max((a[(i, j)] - b[(i, j)]).abs());
            }
        }
        worst
    }

    #[test]
    fn lax_half_on_equal_spacing_is_sigma() {
        for n in [3usize, 5, 7, 9] {
            let m = lax_kernel(&equally_spaced(n), 0.5).unwrap();
            let sigma = sigma_matrix(n).unwrap();
            // global sign is a convention of the V square root
            let d = max_diff(&m, &sigma).min(max_diff(&m, &(-&sigma)));
            assert!(d < 1e-12, "n={n}: {d}");
            // l_m^2 = 1/N
            for i in 0..n {
                assert_relative_eq!(sigma[(i, i)], 1.0 / n as f64);
            }
        }
    }

    #[test]
    fn lax_hard_rod_on_equal_spacing_is_z() {
        for n in [2usize, 3, 6, 11] {
            let m = lax_kernel(&equally_spaced(n), 0.5 / n as f64).unwrap();
            assert!(max_diff(&m, &z_matrix(n).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn constant_matrices_are_orthogonal() {
        let sigma = sigma_matrix(101).unwrap();
        assert!(orthogonality_defect(&sigma) < 1e-8);
        assert!(linalg::involution_defect(&sigma) < 1e-8);
        let ev = linalg::symmetric_eigenvalues(&sigma).unwrap();
        assert!(ev.iter().all(|e| (e.abs() - 1.0).abs() < 1e-8));
        let z = z_matrix(100).unwrap();
        assert!(orthogonality_defect(&z) < 1e-8);
        assert!(sigma_matrix(4).is_err());
    }

    #[test]
    fn random_lax_half_is_unitary() {
        let mut rng = rng::stream(11, 0);
        for _ in 0..20 {
            let theta = sample_omega_half(3, &mut rng).unwrap();
            let phases = random_phases(3, &mut rng);
            let l = lax_matrix(&LaxConfiguration::new(0.5, theta, phases).unwrap()).unwrap();
            assert!(l.unitarity_defect() < 1e-10);
        }
    }

    #[test]
    fn coincident_angles_rejected() {
        let cfg = LaxConfiguration::new(0.5, vec![0.0, 1.0, 1.0], vec![0.0; 3]).unwrap();
        assert!(matches!(lax_matrix(&cfg), Err(Error::CoincidentAngles { .. })));
        assert!(LaxConfiguration::new(0.5, vec![0.0, 1.0], vec![0.0]).is_err());
    }

    #[test]
    fn outside_region_gives_sign_mismatch() {
        // alpha = 1/2 with two angles closer than pi
        let cfg = LaxConfiguration::new(0.5, vec![0.0, 0.5], vec![0.0; 2]).unwrap();
        assert!(matches!(lax_matrix(&cfg), Err(Error::SignMismatch { .. })));
    }

    #[test]
    fn ensembles_are_unitary() {
        let mut rng = rng::stream(3, 0);
        assert!(a_matrix(31, &mut rng).unwrap().unitarity_defect() < 1e-8);
        assert!(c_matrix(30, &mut rng).unwrap().unitarity_defect() < 1e-8);
        assert!(big_c_matrix(30, &mut rng).unwrap().unitarity_defect() < 1e-8);
        assert!(xi_matrix(30, &mut rng).unwrap().unitarity_defect() < 1e-8);
        assert!(a_matrix(30, &mut rng).is_err());
    }

    #[test]
    fn big_c_squares_to_xi_spectrum() {
        let c = big_c_matrix(20, &mut rng::stream(5, 0)).unwrap();
        let n0 = 20;
        let z = z_matrix(n0).unwrap();
        let xi = &phase_dressed(&z, &c.phases[..n0]) * &phase_dressed(&z.transpose().to_owned(), &c.phases[n0..]);
        let mut xi_ev: Vec<f64> = linalg::eigenphases(&xi, 1e-8).unwrap();
        let mut sq: Vec<f64> = linalg::eigenvalues(&c.matrix)
            .unwrap()
            .iter()
            .map(|l| (l * l).arg().rem_euclid(TAU))
            .collect();
        sq.sort_by(f64::total_cmp);
        // each xi eigenphase appears twice among the squared C eigenvalues
        xi_ev.extend(xi_ev.clone());
        xi_ev.sort_by(f64::total_cmp);
        for (a, b) in sq.iter().zip(&xi_ev) {
            let d = (a - b).rem_euclid(TAU);
            assert!(d.min(TAU - d) < 1e-8, "{a} {b}");
        }
    }

    #[test]
    fn kernels_approach_paraxial_form() {
        // entries near the diagonal (z) or anti-diagonal (Sigma) approach 1/(pi(j-k+1/2))
        let dev = |n: usize| {
            let z = z_matrix(n).unwrap();
            (0..4)
                .map(|d| (z[(n / 2 + d, n / 2)] - 1.0 / (PI * (d as f64 + 0.5))).abs())
                .fold(0.0, f64::max)
        };
        let (d1, d2) = (dev(50), dev(500));
        assert!(d2 < d1 / 50.0, "{d1} {d2}");
        let sig = |n: usize| {
            let s = sigma_matrix(n).unwrap();
            let h = (n - 1) / 2;
            (0..4)
                .map(|t| (s[(h + t, 0)].abs() - 1.0 / (PI * (t as f64 - 0.5).abs())).abs())
                .fold(0.0, f64::max)
        };
        assert!(sig(501) < sig(51) / 50.0);
    }

    #[test]
    fn ensemble_sampling_is_reproducible() {
        let e = Ensemble::new(EnsembleKind::Xi, 10).unwrap();
        let a = e.eigenphase_samples(9, 4).unwrap();
        let b = e.eigenphase_samples(9, 4).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
        assert_eq!(Ensemble::new(EnsembleKind::BigC, 10).unwrap().dim(), 20);
        let b_ens = Ensemble::new(EnsembleKind::B, 41).unwrap();
        let s = b_ens.sample(1, 0).unwrap();
        assert_eq!(s.dim(), 41);
        assert!(s.unitarity_defect() < 1e-8);
        assert!(Ensemble::new(EnsembleKind::LaxHalf, 4).is_err());
    }

    proptest! {
        #[test]
        fn omega_half_invariant(n in 1usize..20, seed in 0u64..1000) {
            let n = 2 * n + 1;
            let theta = sample_omega_half(n, &mut rng::stream(seed, 0)).unwrap();
            prop_assert_eq!(theta[0], 0.0);
            let odd: Vec<f64> = theta.iter().step_by(2).copied().collect();
            let even: Vec<f64> = theta.iter().skip(1).step_by(2).map(|t| t - PI).collect();
            prop_assert!(odd.iter().all(|&t| (0.0..PI).contains(&t)));
            let folded: Vec<f64> = theta.iter().map(|&t| if t >= PI { t - PI } else { t }).collect();
            prop_assert!(folded.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(even.iter().all(|&t| t > 0.0 && t < PI));
            let l = lax_matrix(&LaxConfiguration::new(0.5, theta, vec![0.3; n]).unwrap()).unwrap();
            prop_assert!(l.unitarity_defect() < 1e-8);
        }

        #[test]
        fn hard_rod_gaps(n in 2usize..40, seed in 0u64..1000) {
            let theta = sample_omega_hard_rod(n, &mut rng::stream(seed, 0)).unwrap();
            let rod = PI / n as f64;
            for w in theta.windows(2) {
                prop_assert!(w[1] - w[0] > rod);
            }
            prop_assert!(TAU - theta[n - 1] > rod);
            let l = lax_matrix(&LaxConfiguration::new(0.5 / n as f64, theta, vec![0.0; n]).unwrap()).unwrap();
            prop_assert!(l.unitarity_defect() < 1e-8);
        }
    }
}

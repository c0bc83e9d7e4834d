//! Mode basis, scattering matrix and transfer matrix of the symmetric
//! barrier billiard, plus their paraxial and high-energy forms.

mod asymptotic;
mod diffraction;

pub use asymptotic::{
    fraunhofer_overlap, paraxial_kernel, paraxial_row_defect, paraxial_two_term,
    s_matrix_asymptotic, s_paraxial, ChannelPair,
};
pub use diffraction::{
    channel_diffraction, channel_expansion, image_sum_check, image_sum_converged,
    reflected_image_sum, sommerfeld_diffraction, ImageSum,
};

use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, CMat, RMat};
use crate::rng;
use crate::wiener_hopf::{self, MomentumLadder};
use rand::Rng;

/// Reduced rectangle a x b with the barrier split h1 (Neumann) + h2 (Dirichlet) = a.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    a: f64,
    b: f64,
    h1: f64,
    h2: f64,
}

impl Geometry {
    pub fn new(a: f64, b: f64, h1: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("h1", h1)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive and finite, got {v}")));
            }
        }
        let h2 = a - h1;
        if h2 <= 0.0 {
            return Err(invalid("h1", format!("must be shorter than a = {a}, got {h1}")));
        }
        Ok(Self { a, b, h1, h2 })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn h1(&self) -> f64 {
        self.h1
    }

    pub fn h2(&self) -> f64 {
        self.h2
    }

    pub fn area(&self) -> f64 {
        self.a * self.b
    }

    /// Same rectangle with the two barrier segments exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            h1: self.h2,
            h2: self.h1,
            ..*self
        }
    }
}

/// Number of channels with pi n/(2b) < k.
pub fn propagating_count(k: f64, b: f64) -> Result<usize> {
    if !(k > 0.0 && b > 0.0) {
        return Err(invalid("k", "k and b must be positive"));
    }
    let r = 2.0 * b * k / PI;
    let nearest = r.round().max(1.0) as usize;
    if wiener_hopf::at_threshold(k, b, nearest) {
        return Err(Error::Threshold { n: nearest, k });
    }
    Ok(r.floor() as usize)
}

/// Channel thresholds pi n/(2b) strictly inside (lo, hi).
pub fn thresholds_between(b: f64, lo: f64, hi: f64) -> Vec<f64> {
    let step = PI / (2.0 * b);
    let first = (lo / step).floor() as usize + 1;
    (first..)
        .map(|n| n as f64 * step)
        .take_while(|&t| t < hi)
        .filter(|&t| t > lo)
        .collect()
}

#[derive(Debug, Clone)]
pub struct ModeSet {
    k: f64,
    b: f64,
    n_prop: usize,
    p: Vec<Complex64>,
    x: Vec<Complex64>,
    l_mod2: Vec<f64>,
    l: Vec<Complex64>,
}

impl ModeSet {
    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn n_prop(&self) -> usize {
        self.n_prop
    }

    pub fn n_total(&self) -> usize {
        self.p.len()
    }

    /// Channel momenta p_1, p_2, ... (propagating first, then evanescent).
    pub fn p(&self) -> &[Complex64] {
        &self.p
    }

    pub fn x(&self) -> &[Complex64] {
        &self.x
    }

    /// |L_m|^2 from the finite product, propagating channels only.
    pub fn l_mod2(&self) -> &[f64] {
        &self.l_mod2
    }

    /// Complex couplings L_m from K+, all channels.
    pub fn l(&self) -> &[Complex64] {
        &self.l
    }

    pub fn x_propagating(&self) -> Vec<f64> {
        self.x[..self.n_prop].iter().map(|z| z.re).collect()
    }
}

pub fn build_mode_set(k: f64, geometry: &Geometry, n_evanescent: usize) -> Result<ModeSet> {
    let n_terms = wiener_hopf::default_n_terms(k, geometry.b);
    build_mode_set_with_terms(k, geometry, n_evanescent, n_terms)
}

/// As [`build_mode_set`] with an explicit K+ truncation length.
pub fn build_mode_set_with_terms(
    k: f64,
    geometry: &Geometry,
    n_evanescent: usize,
    n_terms: usize,
) -> Result<ModeSet> {
    let b = geometry.b;
    let n_prop = propagating_count(k, b)?;
    if n_prop == 0 {
        return Err(invalid("k", format!("no propagating channel below pi/(2b) = {}", PI / (2.0 * b))));
    }
    let total = n_prop + n_evanescent;
    let p: Vec<Complex64> = (1..=total).map(|n| wiener_hopf::momentum(k, b, n)).collect();
    let x: Vec<Complex64> = p
        .iter()
        .enumerate()
        .map(|(i, &pn)| if i % 2 == 0 { b * pn } else { -b * pn })
        .collect();
    let x_prop: Vec<f64> = x[..n_prop].iter().map(|z| z.re).collect();
    let l_mod2 = coupling_moduli(&x_prop)?;

    let ladder = MomentumLadder::new(k, b, n_terms)?;
    let l = p
        .iter()
        .enumerate()
        .map(|(i, &pn)| {
            let kp = ladder.corrected(pn)?;
            Ok(coupling_from_k_plus(i + 1, b, pn, kp))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ModeSet {
        k,
        b,
        n_prop,
        p,
        x,
        l_mod2,
        l,
    })
}

/// L_j for channel j (1-based) given K+(p_j).
fn coupling_from_k_plus(j: usize, b: f64, p: Complex64, k_plus: Complex64) -> Complex64 {
    let half = j.div_ceil(2);
    let sign = if half % 2 == 0 { 1.0 } else { -1.0 };
    let root = (b * p).sqrt();
    if j % 2 == 1 {
        sign / (root * k_plus)
    } else {
        sign * PI * half as f64 * k_plus / root
    }
}

/// Alternating signs starting positive, strictly decreasing moduli.
pub fn check_intertwining(x: &[f64]) -> Result<()> {
    for (i, &v) in x.iter().enumerate() {
        let positive = i % 2 == 0;
        if !v.is_finite() || v == 0.0 || (v > 0.0) != positive {
            return Err(Error::Intertwining { index: i + 1 });
        }
        if i > 0 && v.abs() >= x[i - 1].abs() {
            return Err(Error::Intertwining { index: i + 1 });
        }
    }
    Ok(())
}

/// |L_m|^2 = 2 x_m prod_{j != m} (x_m + x_j)/(x_m - x_j), accumulated in log space.
pub fn coupling_moduli(x: &[f64]) -> Result<Vec<f64>> {
    check_intertwining(x)?;
    x.iter()
        .enumerate()
        .map(|(m, &xm)| {
            let mut log = (2.0 * xm).abs().ln();
            let mut negative = xm < 0.0;
            for (j, &xj) in x.iter().enumerate() {
                if j != m {
                    let r = (xm + xj) / (xm - xj);
                    log += r.abs().ln();
                    negative ^= r < 0.0;
                }
            }
            if negative {
                Err(Error::Intertwining { index: m + 1 })
            } else {
                Ok(log.exp())
            }
        })
        .collect()
}

/// Phase-stripped real orthogonal S~ from channel coordinates.
pub fn s_tilde(x: &[f64]) -> Result<RMat> {
    let l: Vec<f64> = coupling_moduli(x)?.into_iter().map(f64::sqrt).collect();
    Ok(RMat::from_fn(x.len(), x.len(), |i, j| l[i] * l[j] / (x[i] + x[j])))
}

pub fn s_matrix_exact(modes: &ModeSet) -> Result<RMat> {
    s_tilde(&modes.x_propagating())
}

/// Physical S_nm = L_n L_m/(x_n + x_m) over every channel carried by `modes`.
pub fn s_matrix_physical(modes: &ModeSet) -> CMat {
    let n = modes.n_total();
    CMat::from_fn(n, n, |i, j| modes.l[i] * modes.l[j] / (modes.x[i] + modes.x[j]))
}

/// Propagation factors e^{i phi_j}: phi = 2 h1 p on odd channels, 2 h2 p on even ones.
pub fn channel_phases(modes: &ModeSet, geometry: &Geometry) -> Vec<Complex64> {
    modes
        .p
        .iter()
        .enumerate()
        .map(|(i, &pn)| {
            let h = if i % 2 == 0 { geometry.h1 } else { geometry.h2 };
            (Complex64::i() * 2.0 * h * pn).exp()
        })
        .collect()
}

/// A dense unitary matrix and the random or physical phases that built it.
#[derive(Debug, Clone)]
pub struct UnitarySample {
    pub matrix: CMat,
    pub phases: Vec<f64>,
    pub seed: Option<u64>,
    pub label: String,
}

impl UnitarySample {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn unitarity_defect(&self) -> f64 {
        linalg::unitarity_defect(&self.matrix)
    }

    /// Sorted eigenphases; aborts if any eigenvalue is off the circle by more than 1e-6.
    pub fn eigenphases(&self) -> Result<Vec<f64>> {
        linalg::eigenphases(&self.matrix, 1e-6)
    }
}

/// diag(e^{i phases}) * S.
pub fn phase_dressed(s: &RMat, phases: &[f64]) -> CMat {
    CMat::from_fn(s.nrows(), s.ncols(), |i, j| Complex64::from_polar(s[(i, j)], phases[i]))
}

/// Transfer matrix B = diag(e^{i phi}) S~ on the propagating block.
pub fn b_matrix(modes: &ModeSet, geometry: &Geometry) -> Result<UnitarySample> {
    let s = s_matrix_exact(modes)?;
    let phases: Vec<f64> = modes.p[..modes.n_prop]
        .iter()
        .enumerate()
        .map(|(i, pn)| {
            let h = if i % 2 == 0 { geometry.h1 } else { geometry.h2 };
            (2.0 * h * pn.re).rem_euclid(TAU)
        })
        .collect();
    Ok(UnitarySample {
        matrix: phase_dressed(&s, &phases),
        phases,
        seed: None,
        label: format!("B(k={})", modes.k),
    })
}

/// B = diag(e^{i phi}) S~(x) with i.i.d. uniform phases drawn from `seed`.
pub fn b_matrix_random(x: &[f64], seed: u64) -> Result<UnitarySample> {
    let s = s_tilde(x)?;
    let mut rng = rng::stream(seed, 0);
    Ok(random_b_from(&s, &mut rng, seed))
}

/// One random-phase realisation on a precomputed S~.
pub fn random_b_from(s: &RMat, rng: &mut impl Rng, seed: u64) -> UnitarySample {
    let phases: Vec<f64> = (0..s.nrows()).map(|_| rng.random::<f64>() * TAU).collect();
    UnitarySample {
        matrix: phase_dressed(s, &phases),
        phases,
        seed: Some(seed),
        label: "B".into(),
    }
}

/// Propagating channel coordinates at wavenumber `k` for slab width `b`.
pub fn channel_coordinates(k: f64, b: f64) -> Result<Vec<f64>> {
    let n = propagating_count(k, b)?;
    Ok((1..=n)
        .map(|j| {
            let p = wiener_hopf::momentum(k, b, j).re;
            if j % 2 == 1 {
                b * p
            } else {
                -b * p
            }
        })
        .collect())
}

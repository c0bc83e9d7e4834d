//! Eigen-wavenumbers from det(1 + B(k)) = 0 by following the eigenphases of
//! the transfer matrix through a k-scan.
//!
//! Evanescent channels are eliminated exactly:
//! B_eff = B_pp - B_pe (1 + B_ee)^{-1} B_ep, so det(1 + B) vanishes with
//! det(1 + B_eff). Within a threshold-free interval the number of
//! eigenphases that have passed pi is tracked through the unwrapped phase of
//! det B_eff; the phase of the propagation factors is known exactly, leaving
//! only a slowly varying remainder to unwrap.

use faer::linalg::solvers::Solve;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::{PI, TAU};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, CMat};
use crate::trace::SmoothCounting;
use crate::transfer::{self, build_mode_set_with_terms, s_matrix_physical, Geometry};
use crate::wiener_hopf;

/// Which barrier segment sets the phase of the odd channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhaseRoles {
    /// Odd channels see h1, even channels h2.
    #[default]
    Standard,
    /// Odd channels see h2, even channels h1.
    Swapped,
}

impl PhaseRoles {
    fn lengths(self, geometry: &Geometry) -> (f64, f64) {
        match self {
            Self::Standard => (geometry.h1(), geometry.h2()),
            Self::Swapped => (geometry.h2(), geometry.h1()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    /// Fixed step; default is one eighth of the local mean level spacing.
    pub dk: Option<f64>,
    /// Fixed evanescent count; default from the decay criterion.
    pub n_evanescent: Option<usize>,
    /// K+ truncation; default from the wavenumber.
    pub n_terms: Option<usize>,
    pub roles: PhaseRoles,
    /// Target |eigenphase - pi| at a root.
    pub tol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            dk: None,
            n_evanescent: None,
            n_terms: None,
            roles: PhaseRoles::Standard,
            tol: 1e-8,
        }
    }
}

/// One eigen-wavenumber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub k: f64,
    /// |eigenphase - pi| of the crossing eigenvalue at `k`.
    pub residual: f64,
    pub multiplicity: usize,
    /// Within ten steps of a channel threshold.
    pub near_threshold: bool,
}

#[derive(Debug, Clone)]
pub struct SecularScan {
    pub geometry: Geometry,
    pub k_min: f64,
    pub k_max: f64,
    /// Step at k_max (the step shrinks as 1/k when defaulted).
    pub dk: f64,
    /// Largest evanescent count used in any interval.
    pub n_evanescent: usize,
    pub levels: Vec<Level>,
    /// Number of transfer-matrix diagonalisations.
    pub evaluations: usize,
}

impl SecularScan {
    pub fn wavenumbers(&self) -> Vec<f64> {
        self.levels
            .iter()
            .flat_map(|l| std::iter::repeat(l.k).take(l.multiplicity))
            .collect()
    }
}

/// One eighth of the mean spacing 2 pi/(ab k).
pub fn default_dk(geometry: &Geometry, k: f64) -> f64 {
    TAU / (geometry.area() * k) / 8.0
}

/// Smallest evanescent count whose first dropped channel obeys
/// exp(-2 h_min |p|) < 1e-12, capped at 200.
pub fn default_n_evanescent(geometry: &Geometry, k: f64) -> Result<usize> {
    const CAP: usize = 200;
    let h_min = geometry.h1().min(geometry.h2());
    let n_prop = transfer::propagating_count(k, geometry.b())?;
    Ok((0..CAP)
        .find(|&n_ev| {
            let p = wiener_hopf::momentum(k, geometry.b(), n_prop + n_ev + 1);
            (-2.0 * h_min * p.im).exp() < 1e-12
        })
        .unwrap_or(CAP))
}

/// Transfer matrix on the propagating channels with `n_evanescent` decaying
/// channels folded in, plus the summed propagation phase of the propagating block.
pub fn effective_transfer(
    k: f64,
    geometry: &Geometry,
    n_evanescent: usize,
    n_terms: usize,
    roles: PhaseRoles,
) -> Result<(CMat, f64)> {
    let modes = build_mode_set_with_terms(k, geometry, n_evanescent, n_terms)?;
    let (h_odd, h_even) = roles.lengths(geometry);
    let phases: Vec<Complex64> = modes
        .p()
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            let h = if i % 2 == 0 { h_odd } else { h_even };
            (Complex64::i() * 2.0 * h * p).exp()
        })
        .collect();
    let phase_sum: f64 = modes.p()[..modes.n_prop()]
        .iter()
        .enumerate()
        .map(|(i, p)| 2.0 * if i % 2 == 0 { h_odd } else { h_even } * p.re)
        .sum();
    let b = linalg::scale_rows(&phases, &s_matrix_physical(&modes));
    let np = modes.n_prop();
    let ne = modes.n_total() - np;
    if ne == 0 {
        return Ok((b, phase_sum));
    }
    let one_plus_ee = CMat::from_fn(ne, ne, |i, j| {
        b[(np + i, np + j)] + if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }
    });
    let b_ep = b.submatrix(np, 0, ne, np).to_owned();
    let b_pe = b.submatrix(0, np, np, ne).to_owned();
    let x = one_plus_ee.partial_piv_lu().solve(&b_ep);
    let eff = b.submatrix(0, 0, np, np).to_owned() - &b_pe * &x;
    Ok((eff, phase_sum))
}

/// State of the scan at one wavenumber.
#[derive(Debug, Clone)]
struct Frame {
    k: f64,
    /// Number of eigenphase passages through pi since the interval start.
    winding: i64,
    /// Unwrapped arg det B_eff minus the propagation phase.
    remainder: f64,
    /// arg(-lambda) of the eigenvalue closest to -1.
    nearest: f64,
}

struct Interval<'a> {
    geometry: &'a Geometry,
    n_evanescent: usize,
    n_terms: usize,
    roles: PhaseRoles,
    evaluations: std::cell::Cell<usize>,
}

fn wrap(x: f64) -> f64 {
    x - TAU * (x / TAU).round()
}

impl Interval<'_> {
    /// Frame at `k`, unwrapped against `previous` (or fresh when None).
    fn frame(&self, k: f64, previous: Option<&Frame>) -> Result<Frame> {
        self.evaluations.set(self.evaluations.get() + 1);
        let (b, phase_sum) = effective_transfer(k, self.geometry, self.n_evanescent, self.n_terms, self.roles)?;
        let ev = linalg::eigenvalues(&b)?;
        let principal: f64 = ev.iter().map(|l| l.arg()).sum();
        let raw = principal - phase_sum;
        let remainder = match previous {
            Some(p) => p.remainder + wrap(raw - p.remainder),
            None => raw,
        };
        let winding_f = (phase_sum + remainder - principal) / TAU;
        let nearest = ev
            .iter()
            .map(|l| (-l).arg())
            .min_by(|a, b| a.abs().total_cmp(&b.abs()))
            .unwrap_or(PI);
        Ok(Frame {
            k,
            winding: winding_f.round() as i64,
            remainder,
            nearest,
        })
    }

    /// Remainder change small enough that unwrapping is unambiguous.
    fn trustworthy(a: &Frame, b: &Frame) -> bool {
        (b.remainder - a.remainder).abs() < PI / 2.0 && b.winding >= a.winding
    }

    /// Step from `from` to at most `to`, halving until the step is trustworthy.
    fn advance(&self, from: &Frame, to: f64) -> Result<Frame> {
        let mut target = to;
        loop {
            let next = self.frame(target, Some(from))?;
            if Self::trustworthy(from, &next) {
                return Ok(next);
            }
            let half = 0.5 * (target - from.k);
            if half < 1e-12 * from.k {
                return Err(Error::Unresolved { lo: from.k, hi: to });
            }
            target = from.k + half;
        }
    }

    /// All roots between two trusted frames.
    fn roots_between(&self, lo: &Frame, hi: &Frame, tol: f64, out: &mut Vec<Level>) -> Result<()> {
        let count = hi.winding - lo.winding;
        if count <= 0 {
            return Ok(());
        }
        if count == 1 {
            out.push(self.refine(lo.clone(), hi.clone(), tol)?);
            return Ok(());
        }
        if hi.k - lo.k < 1e-11 * hi.k {
            out.push(Level {
                k: 0.5 * (lo.k + hi.k),
                residual: lo.nearest.abs().max(hi.nearest.abs()),
                multiplicity: count as usize,
                near_threshold: false,
            });
            return Ok(());
        }
        let mid = self.advance(lo, 0.5 * (lo.k + hi.k))?;
        let hi = self.frame(hi.k, Some(&mid))?;
        self.roots_between(lo, &mid, tol, out)?;
        self.roots_between(&mid, &hi, tol, out)
    }

    /// Single crossing in (lo, hi]: bisection on the winding until the
    /// crossing eigenvalue brackets zero, then Illinois regula falsi on arg(-lambda).
    fn refine(&self, mut lo: Frame, mut hi: Frame, tol: f64) -> Result<Level> {
        let base = lo.winding;
        let mut g_lo = lo.nearest;
        let mut g_hi = hi.nearest;
        let mut side = 0i8;
        for _ in 0..200 {
            let bracketed = g_lo < 0.0 && g_hi > 0.0 && g_hi - g_lo < 1.0;
            let k_next = if bracketed {
                let t = g_lo / (g_lo - g_hi);
                (lo.k + t * (hi.k - lo.k)).clamp(lo.k + 1e-3 * (hi.k - lo.k), hi.k - 1e-3 * (hi.k - lo.k))
            } else {
                0.5 * (lo.k + hi.k)
            };
            let f = self.frame(k_next, Some(&lo))?;
            if f.nearest.abs() < tol && (f.winding - base == 0 || f.winding - base == 1) {
                return Ok(Level {
                    k: f.k,
                    residual: f.nearest.abs(),
                    multiplicity: 1,
                    near_threshold: false,
                });
            }
            if f.winding == base {
                lo = f;
                g_lo = lo.nearest;
                if side == -1 {
                    g_hi /= 2.0;
                }
                side = -1;
            } else {
                hi = f;
                g_hi = hi.nearest;
                if side == 1 {
                    g_lo /= 2.0;
                }
                side = 1;
            }
            if hi.k - lo.k < 1e-14 * hi.k {
                break;
            }
        }
        let k = 0.5 * (lo.k + hi.k);
        let f = self.frame(k, Some(&lo))?;
        Ok(Level {
            k,
            residual: f.nearest.abs(),
            multiplicity: 1,
            near_threshold: false,
        })
    }
}

fn scan_interval(
    geometry: &Geometry,
    lo: f64,
    hi: f64,
    options: &ScanOptions,
) -> Result<(Vec<Level>, usize, usize)> {
    let n_evanescent = match options.n_evanescent {
        Some(n) => n,
        None => default_n_evanescent(geometry, lo)?,
    };
    let n_terms = options
        .n_terms
        .unwrap_or_else(|| wiener_hopf::default_n_terms(hi, geometry.b()));
    let interval = Interval {
        geometry,
        n_evanescent,
        n_terms,
        roles: options.roles,
        evaluations: std::cell::Cell::new(0),
    };
    let mut levels = vec![];
    let mut current = interval.frame(lo, None)?;
    while current.k < hi {
        let step = options.dk.unwrap_or_else(|| default_dk(geometry, current.k));
        let next = interval.advance(&current, (current.k + step).min(hi))?;
        interval.roots_between(&current, &next, options.tol, &mut levels)?;
        current = next;
    }
    Ok((levels, interval.evaluations.get(), n_evanescent))
}

/// Levels in [k_min, k_max], scanned independently between channel thresholds.
pub fn secular_scan(geometry: &Geometry, k_min: f64, k_max: f64, options: &ScanOptions) -> Result<SecularScan> {
    if !(k_min > 0.0 && k_max > k_min && k_max.is_finite()) {
        return Err(invalid("k_range", format!("need 0 < k_min < k_max, got [{k_min}, {k_max}]")));
    }
    if let Some(dk) = options.dk {
        if !(dk > 0.0) {
            return Err(invalid("dk", "must be positive"));
        }
    }
    let b = geometry.b();
    let first = PI / (2.0 * b);
    let lo = k_min.max(first);
    let mut cuts = vec![lo];
    cuts.extend(transfer::thresholds_between(b, lo, k_max));
    cuts.push(k_max);
    let offset = |t: f64| t * 1e-9;
    let pieces: Vec<(f64, f64)> = cuts
        .windows(2)
        .map(|w| (w[0] + offset(w[0]), w[1] - offset(w[1])))
        .filter(|(a, c)| c > a)
        .collect();
    let results: Vec<(Vec<Level>, usize, usize)> = pieces
        .par_iter()
        .map(|&(a, c)| scan_interval(geometry, a, c, options))
        .collect::<Result<_>>()?;
    let thresholds = transfer::thresholds_between(b, 0.0, k_max + 1.0);
    let mut levels = vec![];
    let mut evaluations = 0;
    let mut n_ev_max = 0;
    for (lv, ev, ne) in results {
        levels.extend(lv);
        evaluations += ev;
        n_ev_max = n_ev_max.max(ne);
    }
    levels.sort_by(|a, b| a.k.total_cmp(&b.k));
    for level in &mut levels {
        let dk = options.dk.unwrap_or_else(|| default_dk(geometry, level.k));
        level.near_threshold = thresholds.iter().any(|t| (t - level.k).abs() < 10.0 * dk);
    }
    Ok(SecularScan {
        geometry: *geometry,
        k_min: lo,
        k_max,
        dk: options.dk.unwrap_or_else(|| default_dk(geometry, k_max)),
        n_evanescent: n_ev_max,
        levels,
        evaluations,
    })
}

/// One step of the counting staircase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountingPoint {
    pub k: f64,
    /// N(k) just after the level.
    pub count: usize,
    pub smooth: f64,
    /// N(k) - smooth at the step midpoint (count - 1/2).
    pub fluctuation: f64,
}

/// Staircase of sorted levels with the smooth part removed.
pub fn spectrum_to_counting(levels: &[f64], smooth: &SmoothCounting) -> Vec<CountingPoint> {
    levels
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let s = smooth.count(k);
            CountingPoint {
                k,
                count: i + 1,
                smooth: s,
                fluctuation: i as f64 + 0.5 - s,
            }
        })
        .collect()
}

/// Closed-form Dirichlet rectangle levels pi sqrt(m^2/a^2 + n^2/b^2), ascending.
pub fn dirichlet_rectangle_levels(a: f64, b: f64, count: usize) -> Vec<f64> {
    let reach = (count as f64).sqrt() as usize * 4 + 4;
    let mut all: Vec<f64> = (1..=reach)
        .flat_map(|m| (1..=reach).map(move |n| PI * ((m as f64 / a).powi(2) + (n as f64 / b).powi(2)).sqrt()))
        .collect();
    all.sort_by(f64::total_cmp);
    all.truncate(count);
    all
}

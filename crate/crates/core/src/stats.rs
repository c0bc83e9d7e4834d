//! Unfolded spacing observables of eigenphase spectra: P_n(s) histograms,
//! two-point function, form factor, number variance and compressibility.

use std::f64::consts::{PI, TAU};

use crate::ensembles::SpacingLaw;
use crate::error::{invalid, Result};
use crate::numeric::{linear_fit, LinearFit};

/// Sorted eigenphases in [0, 2pi) with a label naming where they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenphaseSpectrum {
    phases: Vec<f64>,
    source: String,
}

impl EigenphaseSpectrum {
    /// Reduces every phase into [0, 2pi) and sorts.
    pub fn new(phases: Vec<f64>, source: impl Into<String>) -> Result<Self> {
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(invalid("phases", "must be finite"));
        }
        let mut phases: Vec<f64> = phases.into_iter().map(|p| p.rem_euclid(TAU)).collect();
        phases.sort_by(f64::total_cmp);
        Ok(Self {
            phases,
            source: source.into(),
        })
    }

    pub fn dim(&self) -> usize {
        self.phases.len()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// The same spectrum turned by `angle`.
    pub fn rotated(&self, angle: f64) -> Self {
        Self::new(self.phases.iter().map(|p| p + angle).collect(), self.source.clone())
            .expect("finite phases stay finite")
    }

    /// Level positions on a circle of length `dim`.
    fn unfolded_positions(&self) -> Vec<f64> {
        let scale = self.dim() as f64 / TAU;
        self.phases.iter().map(|p| p * scale).collect()
    }
}

/// Nearest-neighbour gaps at unit mean, with the cyclic flag deciding how
/// higher-order gaps wrap.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacingSample {
    gaps: Vec<f64>,
    circular: bool,
}

impl SpacingSample {
    /// Gaps of an already unfolded sequence of levels on a line, rescaled to unit mean.
    pub fn from_levels(levels: &[f64]) -> Result<Self> {
        if levels.len() < 2 {
            return Err(invalid("levels", "need at least two levels"));
        }
        let gaps: Vec<f64> = levels.windows(2).map(|w| w[1] - w[0]).collect();
        if gaps.iter().any(|g| *g < 0.0) {
            return Err(invalid("levels", "must be sorted ascending"));
        }
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        if mean <= 0.0 {
            return Err(invalid("levels", "all levels coincide"));
        }
        Ok(Self {
            gaps: gaps.iter().map(|g| g / mean).collect(),
            circular: false,
        })
    }

    pub fn gaps(&self) -> &[f64] {
        &self.gaps
    }

    pub fn mean(&self) -> f64 {
        self.gaps.iter().sum::<f64>() / self.gaps.len() as f64
    }

    /// Number of exactly degenerate pairs.
    pub fn zero_gaps(&self) -> usize {
        self.gaps.iter().filter(|&&g| g == 0.0).count()
    }

    /// Distances from level i to level i + order + 1 (mean order + 1).
    pub fn order_gaps(&self, order: usize) -> Vec<f64> {
        let n = self.gaps.len();
        let span = order + 1;
        let count = if self.circular { n } else { n.saturating_sub(order) };
        if self.circular && span > n {
            return vec![];
        }
        (0..count)
            .map(|i| (i..i + span).map(|j| self.gaps[j % n]).sum())
            .collect()
    }
}

/// Circular gaps scaled by dim/(2pi); the mean is exactly one.
pub fn unfold(spectrum: &EigenphaseSpectrum) -> Result<SpacingSample> {
    let n = spectrum.dim();
    if n < 2 {
        return Err(invalid("spectrum", "need at least two eigenphases"));
    }
    let x = spectrum.unfolded_positions();
    let gaps = (0..n)
        .map(|i| if i + 1 < n { x[i + 1] - x[i] } else { x[0] + n as f64 - x[i] })
        .collect();
    Ok(SpacingSample { gaps, circular: true })
}

/// Equal-width bins on [lo, hi).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Binning {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl Binning {
    pub fn new(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if !(hi > lo) || count == 0 {
            return Err(invalid("bins", format!("need hi > lo and count > 0, got [{lo}, {hi}) x {count}")));
        }
        Ok(Self { lo, hi, count })
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.count as f64
    }

    pub fn edges(&self, i: usize) -> (f64, f64) {
        let w = self.width();
        (self.lo + i as f64 * w, self.lo + (i + 1) as f64 * w)
    }

    pub fn center(&self, i: usize) -> f64 {
        let (a, b) = self.edges(i);
        0.5 * (a + b)
    }

    fn index(&self, s: f64) -> Option<usize> {
        if s < self.lo || s >= self.hi {
            return None;
        }
        Some((((s - self.lo) / self.width()) as usize).min(self.count - 1))
    }
}

/// Histogram density normalised to the full sample, including values that
/// fall outside the binned range.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub binning: Binning,
    pub density: Vec<f64>,
    pub samples: usize,
}

impl Histogram {
    pub fn from_values(values: impl IntoIterator<Item = f64>, binning: Binning) -> Self {
        let mut counts = vec![0usize; binning.count];
        let mut samples = 0usize;
        for v in values {
            samples += 1;
            if let Some(i) = binning.index(v) {
                counts[i] += 1;
            }
        }
        let norm = samples.max(1) as f64 * binning.width();
        Self {
            binning,
            density: counts.iter().map(|&c| c as f64 / norm).collect(),
            samples,
        }
    }

    pub fn integral(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.binning.width()
    }

    /// Bin-averaged reference density.
    pub fn reference(&self, law: &SpacingLaw) -> Vec<f64> {
        (0..self.binning.count)
            .map(|i| {
                let (a, b) = self.binning.edges(i);
                law.bin_average(a, b)
            })
            .collect()
    }

    /// max |histogram - bin-averaged law| over bins overlapping [lo, hi].
    pub fn sup_deviation(&self, law: &SpacingLaw, lo: f64, hi: f64) -> f64 {
        let reference = self.reference(law);
        (0..self.binning.count)
            .filter(|&i| {
                let (a, b) = self.binning.edges(i);
                b > lo && a < hi
            })
            .map(|i| (self.density[i] - reference[i]).abs())
            .fold(0.0, f64::max)
    }
}

/// Pooled histogram of order-n gaps (n levels inside the interval).
pub fn p_n_histogram(samples: &[SpacingSample], order: usize, binning: Binning) -> Histogram {
    Histogram::from_values(samples.iter().flat_map(|s| s.order_gaps(order)), binning)
}

/// Two-point function as a sum of P_n histograms.
#[derive(Debug, Clone, PartialEq)]
pub struct R2Table {
    pub binning: Binning,
    pub values: Vec<f64>,
    /// Mass of the first omitted order inside the binned range; above 1e-3
    /// the truncation misses part of R2 at the upper end.
    pub truncation_mass: f64,
}

impl R2Table {
    pub fn truncated(&self) -> bool {
        self.truncation_mass > 1e-3
    }

    /// Exact table from a closed-form R2, evaluated at bin centres.
    pub fn from_fn(r2: impl Fn(f64) -> f64, binning: Binning) -> Self {
        Self {
            values: (0..binning.count).map(|i| r2(binning.center(i))).collect(),
            binning,
            truncation_mass: 0.0,
        }
    }
}

/// R2(s) = sum_{n <= max_order} P_n(s) on the binned range.
pub fn r2_estimate(samples: &[SpacingSample], max_order: usize, binning: Binning) -> R2Table {
    let mut values = vec![0.0; binning.count];
    for order in 0..=max_order {
        let h = p_n_histogram(samples, order, binning);
        values.iter_mut().zip(&h.density).for_each(|(v, d)| *v += d);
    }
    let truncation_mass = p_n_histogram(samples, max_order + 1, binning).integral();
    R2Table {
        binning,
        values,
        truncation_mass,
    }
}

/// K(tau) = 1 + 2 int_0^{s_max} (R2(s) - 1) cos(2 pi tau s) ds, midpoint rule
/// on the table bins (rectangular window ending at the table edge).
pub fn form_factor(table: &R2Table, taus: &[f64]) -> Vec<(f64, f64)> {
    let w = table.binning.width();
    taus.iter()
        .map(|&tau| {
            let integral: f64 = table
                .values
                .iter()
                .enumerate()
                .map(|(i, r)| (r - 1.0) * (2.0 * PI * tau * table.binning.center(i)).cos())
                .sum::<f64>()
                * w;
            (tau, 1.0 + 2.0 * integral)
        })
        .collect()
}

/// Variance of the number of unfolded levels in windows of length L, pooled
/// over spectra and `starts_per_level * dim` equally spaced window origins.
pub fn number_variance(spectra: &[EigenphaseSpectrum], lengths: &[f64]) -> Result<Vec<(f64, f64)>> {
    const STARTS_PER_LEVEL: usize = 4;
    let min_dim = spectra.iter().map(|s| s.dim()).min().unwrap_or(0);
    if min_dim < 4 {
        return Err(invalid("spectra", "need at least one spectrum with four or more levels"));
    }
    if let Some(&l) = lengths.iter().find(|&&l| !(l > 0.0) || l > min_dim as f64 / 4.0) {
        return Err(invalid("L", format!("window {l} outside (0, dim/4 = {}]", min_dim as f64 / 4.0)));
    }
    let unfolded: Vec<(f64, Vec<f64>)> = spectra
        .iter()
        .map(|s| {
            let x = s.unfolded_positions();
            let d = s.dim() as f64;
            let doubled: Vec<f64> = x.iter().copied().chain(x.iter().map(|v| v + d)).collect();
            (d, doubled)
        })
        .collect();
    Ok(lengths
        .iter()
        .map(|&l| {
            let (mut sum, mut sum2, mut count) = (0.0, 0.0, 0.0);
            for (d, x) in &unfolded {
                let starts = STARTS_PER_LEVEL * *d as usize;
                for j in 0..starts {
                    let t = (j as f64 + 0.5) * d / starts as f64;
                    let lo = x.partition_point(|&v| v < t);
                    let hi = x.partition_point(|&v| v < t + l);
                    let n = (hi - lo) as f64;
                    sum += n;
                    sum2 += n * n;
                    count += 1.0;
                }
            }
            let mean = sum / count;
            (l, sum2 / count - mean * mean)
        })
        .collect())
}

/// Slope of the number variance on [l_min, l_max].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Compressibility {
    pub fit: LinearFit,
    /// Fit residual above 5% of the mean variance in the window.
    pub nonlinear: bool,
}

impl Compressibility {
    pub fn value(&self) -> f64 {
        self.fit.slope
    }
}

pub fn compressibility(table: &[(f64, f64)], l_min: f64, l_max: f64) -> Result<Compressibility> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = table
        .iter()
        .filter(|(l, _)| *l >= l_min && *l <= l_max)
        .copied()
        .unzip();
    let fit = linear_fit(&xs, &ys)?;
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    Ok(Compressibility {
        fit,
        nonlinear: fit.rms > 0.05 * mean.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{semi_poisson_form_factor, semi_poisson_r2};
    use crate::rng;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;

    fn poisson_spectrum(n: usize, seed: u64) -> EigenphaseSpectrum {
        let mut r = rng::stream(seed, 0);
        EigenphaseSpectrum::new((0..n).map(|_| r.random::<f64>() * TAU).collect(), "poisson").unwrap()
    }

    /// Semi-Poisson levels: gaps are Gamma(2, 1/2) variates.
    fn semi_poisson_levels(n: usize, seed: u64) -> Vec<f64> {
        let mut r = rng::stream(seed, 1);
        let mut x = 0.0;
        (0..n)
            .map(|_| {
                let g = -(r.random::<f64>().ln() + r.random::<f64>().ln()) / 2.0;
                x += g;
                x
            })
            .collect()
    }

    fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
        let mut s = sample.to_vec();
        s.sort_by(f64::total_cmp);
        let n = s.len() as f64;
        s.iter()
            .enumerate()
            .map(|(i, &x)| {
                let c = cdf(x);
                (c - i as f64 / n).abs().max((c - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn equally_spaced_unfolds_to_one() {
        let n = 17;
        let spec = EigenphaseSpectrum::new((0..n).map(|j| TAU * j as f64 / n as f64 + 0.1).collect(), "fence").unwrap();
        let s = unfold(&spec).unwrap();
        assert!(s.gaps().iter().all(|g| (g - 1.0).abs() < 1e-12));
        let two = unfold(&EigenphaseSpectrum::new(vec![0.0, PI], "two").unwrap()).unwrap();
        assert_eq!(two.gaps(), &[1.0, 1.0]);
        assert!(unfold(&EigenphaseSpectrum::new(vec![1.0], "one").unwrap()).is_err());
    }

    #[test]
    fn unit_mean_and_duplicates() {
        let s = unfold(&poisson_spectrum(101, 3)).unwrap();
        assert!((s.mean() - 1.0).abs() < 1e-12);
        let dup = unfold(&EigenphaseSpectrum::new(vec![0.5, 0.5, 2.0], "dup").unwrap()).unwrap();
        assert_eq!(dup.zero_gaps(), 1);
    }

    #[test]
    fn poisson_nearest_neighbour_is_exponential() {
        let s = unfold(&poisson_spectrum(10_000, 5)).unwrap();
        let d = ks_distance(s.gaps(), |x| 1.0 - (-x).exp());
        assert!(d < 0.02, "{d}");
        let h = p_n_histogram(std::slice::from_ref(&s), 2, Binning::new(0.0, 12.0, 60).unwrap());
        let law = SpacingLaw::Poisson { order: 2 };
        assert!(h.sup_deviation(&law, 0.0, 12.0) < 0.03);
        assert!((h.integral() - 1.0).abs() < 2e-3);
    }

    #[test]
    fn semi_poisson_synthetic_recovers_p1() {
        let levels = semi_poisson_levels(200_000, 7);
        let s = SpacingSample::from_levels(&levels).unwrap();
        let h = p_n_histogram(&[s], 1, Binning::new(0.0, 6.0, 60).unwrap());
        let dev = h.sup_deviation(&SpacingLaw::SemiPoisson { order: 1 }, 0.0, 6.0);
        assert!(dev < 0.02, "{dev}");
    }

    #[test]
    fn order_gaps_have_mean_order_plus_one() {
        let s = unfold(&poisson_spectrum(300, 9)).unwrap();
        for n in 0..4 {
            let g = s.order_gaps(n);
            assert_eq!(g.len(), 300);
            assert_relative_eq!(g.iter().sum::<f64>() / 300.0, n as f64 + 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn r2_partial_sums_are_monotone() {
        let samples: Vec<SpacingSample> = (0..20).map(|i| unfold(&poisson_spectrum(200, 100 + i)).unwrap()).collect();
        let binning = Binning::new(0.0, 4.0, 40).unwrap();
        let low = r2_estimate(&samples, 1, binning);
        let high = r2_estimate(&samples, 12, binning);
        assert!(low.values.iter().zip(&high.values).all(|(a, b)| a <= b));
        assert!(low.truncated());
        assert!(!high.truncated());
        // Poisson R2 = 1
        let mid: f64 = high.values[5..35].iter().sum::<f64>() / 30.0;
        assert!((mid - 1.0).abs() < 0.03, "{mid}");
    }

    #[test]
    fn form_factor_of_exact_semi_poisson() {
        let table = R2Table::from_fn(semi_poisson_r2, Binning::new(0.0, 20.0, 4000).unwrap());
        let taus: Vec<f64> = (0..=30).map(|i| i as f64 * 0.1).collect();
        for (tau, k) in form_factor(&table, &taus) {
            let reference = semi_poisson_form_factor(tau);
            assert!((k - reference).abs() < 0.01 * reference, "tau {tau}: {k} vs {reference}");
        }
    }

    #[test]
    fn number_variance_limits() {
        let lengths: Vec<f64> = (5..=20).map(f64::from).collect();
        let poisson: Vec<EigenphaseSpectrum> = (0..20).map(|i| poisson_spectrum(400, 200 + i)).collect();
        let chi = compressibility(&number_variance(&poisson, &lengths).unwrap(), 5.0, 20.0).unwrap();
        assert!((chi.value() - 1.0).abs() < 0.05, "{}", chi.value());
        let fence = EigenphaseSpectrum::new((0..400).map(|j| TAU * (j as f64 + 0.3) / 400.0).collect(), "fence").unwrap();
        let chi = compressibility(&number_variance(std::slice::from_ref(&fence), &lengths).unwrap(), 5.0, 20.0).unwrap();
        assert!(chi.value().abs() < 1e-3);
        assert!(number_variance(&[fence], &[150.0]).is_err());
    }

    proptest! {
        #[test]
        fn rotation_invariance(angle in 0.0f64..TAU, seed in 0u64..100) {
            let spec = poisson_spectrum(64, seed);
            let a = unfold(&spec).unwrap();
            let b = unfold(&spec.rotated(angle)).unwrap();
            let mut ga = a.gaps().to_vec();
            let mut gb = b.gaps().to_vec();
            ga.sort_by(f64::total_cmp);
            gb.sort_by(f64::total_cmp);
            for (x, y) in ga.iter().zip(&gb) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}

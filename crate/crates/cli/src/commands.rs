//! One function per subcommand: validated config in, tables and summary out.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::json;

use billiard_core::ensembles::{semi_poisson_form_factor, Ensemble, EnsembleKind, SpacingLaw};
use billiard_core::quantization::{secular_scan, ScanOptions, SecularScan};
use billiard_core::stats::{self, Binning, EigenphaseSpectrum, SpacingSample};
use billiard_core::trace::{self, OrbitFamily, QMatrixSpec, SmoothCounting};
use billiard_core::transfer::{self, Geometry};
use billiard_core::wiener_hopf::{self, FactorizationInput};
use billiard_core::linalg;

use crate::config::{nonzero, positive, require, EnsembleChoice, RunConfig, Sweep};
use crate::error::{CliError, CliResult, CoreContext};
use crate::output::{num, Artifacts, Table};

const DEFAULT_REALISATIONS: usize = 300;
const DEFAULT_BINS: usize = 100;
const DEFAULT_S_MAX: f64 = 4.0;
const DEFAULT_L_MAX: f64 = 8.0;
const DEFAULT_Q_DIM: usize = 400;
/// Highest P_n order written by `stats`.
const STATS_ORDERS: usize = 3;

fn geometry(config: &RunConfig) -> CliResult<Geometry> {
    let g = &config.geometry;
    Geometry::new(
        require(g.a, "geometry.a")?,
        require(g.b, "geometry.b")?,
        require(g.h1, "geometry.h1")?,
    )
    .context("geometry")
}

fn seed(config: &RunConfig) -> u64 {
    config.seed.unwrap_or(0)
}

fn matrix_table(name: &str, rows: usize, cols: usize, entry: impl Fn(usize, usize) -> Complex64) -> Table {
    let mut t = Table::new(name, &["row", "col", "re", "im"]);
    for r in 0..rows {
        for c in 0..cols {
            let v = entry(r, c);
            t.push(vec![r.to_string(), c.to_string(), num(v.re), num(v.im)]);
        }
    }
    t
}

pub fn kplus(config: &RunConfig) -> CliResult<Artifacts> {
    let k = positive(require(config.scan.k, "scan.k")?, "scan.k")?;
    let b = positive(config.geometry.b.unwrap_or(1.0), "geometry.b")?;
    let sweep = Sweep::parse(&require(config.scan.alpha_sweep.clone(), "scan.alpha_sweep")?, "scan.alpha_sweep")?;
    let n_terms = config.numerics.n_terms.unwrap_or_else(|| wiener_hopf::default_n_terms(k, b));
    let mut table = Table::new(
        "kplus.csv",
        &[
            "alpha_re",
            "alpha_im",
            "kplus_re",
            "kplus_im",
            "ratio_to_asymptotic_re",
            "ratio_to_asymptotic_im",
        ],
    );
    let mut worst: f64 = 0.0;
    for alpha in sweep.values() {
        let input = FactorizationInput::real(k, b, alpha).context("kplus input")?;
        let v = wiener_hopf::k_plus_corrected(&input, n_terms).context("kplus")?.value;
        let ratio = v / wiener_hopf::k_plus_asymptotic(&input);
        worst = worst.max((ratio - 1.0).norm());
        table.push(vec![num(alpha), num(0.0), num(v.re), num(v.im), num(ratio.re), num(ratio.im)]);
    }
    Ok(Artifacts {
        summary: json!({ "k": k, "b": b, "n_terms": n_terms, "points": table.rows.len(), "max_ratio_deviation": worst }),
        tables: vec![table],
        documents: vec![],
    })
}

pub fn smatrix(config: &RunConfig) -> CliResult<Artifacts> {
    let g = geometry(config)?;
    let k = positive(require(config.scan.k, "scan.k")?, "scan.k")?;
    let n_ev = config.numerics.n_evanescent.unwrap_or(0);
    let n_terms = config.numerics.n_terms.unwrap_or_else(|| wiener_hopf::default_n_terms(k, g.b()));
    let modes = transfer::build_mode_set_with_terms(k, &g, n_ev, n_terms).context("mode set")?;
    let s = transfer::s_matrix_exact(&modes).context("scattering matrix")?;
    let b = transfer::b_matrix(&modes, &g).context("transfer matrix")?;
    let n = modes.n_prop();
    let defects = json!({
        "k": k,
        "n_propagating": n,
        "n_evanescent": n_ev,
        "n_terms": n_terms,
        "orthogonality_defect": linalg::orthogonality_defect(&s),
        "involution_defect": linalg::involution_defect(&s),
        "unitarity_defect": b.unitarity_defect(),
    });
    Ok(Artifacts {
        tables: vec![
            matrix_table("s_tilde.csv", n, n, |r, c| Complex64::new(s[(r, c)], 0.0)),
            matrix_table("b_matrix.csv", n, n, |r, c| b.matrix[(r, c)]),
        ],
        documents: vec![("unitarity.json".into(), defects.clone())],
        summary: defects,
    })
}

/// Sampler, size parameter and reference law family for an ensemble choice.
struct Selection {
    ensemble: Ensemble,
    label: &'static str,
    reference: fn(u32, u32) -> SpacingLaw,
}

fn semi_poisson(_: u32, order: u32) -> SpacingLaw {
    SpacingLaw::SemiPoisson { order }
}

fn shifted_poisson(_: u32, order: u32) -> SpacingLaw {
    SpacingLaw::ShiftedPoisson { order }
}

/// Finite-N law where it is defined, otherwise its large-N limit.
fn model_a_or_limit(dim: u32, order: u32) -> SpacingLaw {
    SpacingLaw::model_a(dim, order).unwrap_or(SpacingLaw::SemiPoisson { order })
}

fn model_c_or_limit(dim: u32, order: u32) -> SpacingLaw {
    SpacingLaw::model_c(dim, order).unwrap_or(SpacingLaw::ShiftedPoisson { order })
}

fn select(config: &RunConfig) -> CliResult<Selection> {
    let e = &config.ensemble;
    let choice = require(e.kind, "ensemble.kind")?;
    let dim = nonzero(require(e.dim, "ensemble.dim")?, "ensemble.dim")?;
    if e.alpha.is_some() && choice != EnsembleChoice::Lax {
        return Err(CliError::validation("ensemble.alpha", "only used with kind = lax"));
    }
    let (kind, size, label, reference): (_, _, _, fn(u32, u32) -> SpacingLaw) = match choice {
        EnsembleChoice::A => (EnsembleKind::A, dim, "model A", model_a_or_limit),
        EnsembleChoice::B => (EnsembleKind::B, dim, "semi-Poisson", semi_poisson),
        EnsembleChoice::SmallC => (EnsembleKind::SmallC, dim, "shifted Poisson", shifted_poisson),
        EnsembleChoice::Xi => (EnsembleKind::Xi, dim, "semi-Poisson", semi_poisson),
        EnsembleChoice::C => {
            if dim % 2 != 0 {
                return Err(CliError::validation("ensemble.dim", "C has even dimension 2 n0"));
            }
            (EnsembleKind::BigC, dim / 2, "semi-Poisson", semi_poisson)
        }
        EnsembleChoice::Lax => {
            let alpha = e.alpha.unwrap_or(0.5);
            if (alpha - 0.5).abs() < 1e-12 {
                (EnsembleKind::LaxHalf, dim, "model A", model_a_or_limit)
            } else if (alpha * 2.0 * dim as f64 - 1.0).abs() < 1e-9 {
                (EnsembleKind::LaxHardRod, dim, "model C", model_c_or_limit)
            } else {
                return Err(CliError::validation(
                    "ensemble.alpha",
                    format!("supported couplings are 1/2 and 1/(2 dim) = {}, got {alpha}", 0.5 / dim as f64),
                ));
            }
        }
    };
    Ok(Selection {
        ensemble: Ensemble::new(kind, size).context("ensemble")?,
        label,
        reference,
    })
}

struct Draw {
    spectra: Vec<EigenphaseSpectrum>,
    samples: Vec<SpacingSample>,
    unitarity_defect: f64,
}

fn draw(selection: &Selection, seed: u64, realisations: usize) -> CliResult<Draw> {
    let runs: Vec<(Vec<f64>, f64)> = (0..realisations as u64)
        .into_par_iter()
        .map(|i| {
            let s = selection.ensemble.sample(seed, i)?;
            Ok((s.eigenphases()?, s.unitarity_defect()))
        })
        .collect::<billiard_core::Result<_>>()
        .context("sampling")?;
    let unitarity_defect = runs.iter().map(|r| r.1).fold(0.0, f64::max);
    let spectra: Vec<EigenphaseSpectrum> = runs
        .into_iter()
        .map(|(p, _)| EigenphaseSpectrum::new(p, selection.label))
        .collect::<billiard_core::Result<_>>()
        .context("spectra")?;
    let samples = spectra
        .iter()
        .map(stats::unfold)
        .collect::<billiard_core::Result<_>>()
        .context("unfolding")?;
    Ok(Draw {
        spectra,
        samples,
        unitarity_defect,
    })
}

fn binning(config: &RunConfig) -> CliResult<Binning> {
    let bins = nonzero(config.numerics.bins.unwrap_or(DEFAULT_BINS), "numerics.bins")?;
    let s_max = positive(config.numerics.s_max.unwrap_or(DEFAULT_S_MAX), "numerics.s_max")?;
    Binning::new(0.0, s_max, bins).context("binning")
}

fn realisations(config: &RunConfig) -> CliResult<usize> {
    nonzero(
        config.ensemble.realisations.unwrap_or(DEFAULT_REALISATIONS),
        "ensemble.realisations",
    )
}

pub fn ensemble(config: &RunConfig) -> CliResult<Artifacts> {
    let selection = select(config)?;
    let binning = binning(config)?;
    let count = realisations(config)?;
    let seed = seed(config);
    let draw = draw(&selection, seed, count)?;
    let law = (selection.reference)(selection.ensemble.dim() as u32, 0);
    let hist = stats::p_n_histogram(&draw.samples, 0, binning);
    let reference = hist.reference(&law);
    let mut table = Table::new(
        "ensemble.csv",
        &["s_bin_center", "density", "law_reference_density", "realisations", "seed"],
    );
    for (i, (d, r)) in hist.density.iter().zip(&reference).enumerate() {
        table.push(vec![num(binning.center(i)), num(*d), num(*r), count.to_string(), seed.to_string()]);
    }
    Ok(Artifacts {
        summary: json!({
            "dim": selection.ensemble.dim(),
            "reference_law": selection.label,
            "spacings": hist.samples,
            "sup_deviation": hist.sup_deviation(&law, binning.lo, binning.hi),
            "max_unitarity_defect": draw.unitarity_defect,
        }),
        tables: vec![table],
        documents: vec![],
    })
}

pub fn stats(config: &RunConfig) -> CliResult<Artifacts> {
    let selection = select(config)?;
    let binning = binning(config)?;
    let count = realisations(config)?;
    let draw = draw(&selection, seed(config), count)?;
    let dim = selection.ensemble.dim();
    let mut tables = vec![];
    let mut deviations = vec![];
    for order in 0..=STATS_ORDERS {
        let law = (selection.reference)(dim as u32, order as u32);
        let hist = stats::p_n_histogram(&draw.samples, order, binning);
        let reference = hist.reference(&law);
        let mut t = Table::new(format!("p{order}.csv"), &["s", "density", "reference"]);
        for (i, (d, r)) in hist.density.iter().zip(&reference).enumerate() {
            t.push(vec![num(binning.center(i)), num(*d), num(*r)]);
        }
        deviations.push(hist.sup_deviation(&law, binning.lo, binning.hi));
        tables.push(t);
    }

    // enough orders that the first omitted one carries no mass below s_max
    let max_order = (2.0 * binning.hi).ceil() as usize + 4;
    let r2 = stats::r2_estimate(&draw.samples, max_order, binning);
    let taus: Vec<f64> = (0..=100).map(|i| 0.02 * i as f64).collect();
    let mut ff = Table::new("form_factor.csv", &["tau", "k_estimate", "k_reference"]);
    for (tau, k) in stats::form_factor(&r2, &taus) {
        ff.push(vec![num(tau), num(k), num(semi_poisson_form_factor(tau))]);
    }
    tables.push(ff);

    let l_top = (dim as f64 / 4.0).min(20.0);
    let lengths: Vec<f64> = (1..).map(|i| 0.5 * i as f64).take_while(|&l| l <= l_top).collect();
    let mut chi = None;
    if !lengths.is_empty() {
        let variance = stats::number_variance(&draw.spectra, &lengths).context("number variance")?;
        let mut nv = Table::new("number_variance.csv", &["L", "variance"]);
        for (l, v) in &variance {
            nv.push(vec![num(*l), num(*v)]);
        }
        tables.push(nv);
        if l_top >= 10.0 {
            chi = Some(stats::compressibility(&variance, l_top / 4.0, l_top).context("compressibility")?);
        }
    }
    Ok(Artifacts {
        summary: json!({
            "dim": dim,
            "reference_law": selection.label,
            "sup_deviation_by_order": deviations,
            "r2_max_order": max_order,
            "r2_truncated": r2.truncated(),
            "compressibility": chi.map(|c| c.value()),
            "compressibility_window": chi.map(|_| [l_top / 4.0, l_top]),
            "max_unitarity_defect": draw.unitarity_defect,
        }),
        tables,
        documents: vec![],
    })
}

fn scan_options(config: &RunConfig) -> CliResult<ScanOptions> {
    if let Some(dk) = config.numerics.dk {
        positive(dk, "numerics.dk")?;
    }
    Ok(ScanOptions {
        dk: config.numerics.dk,
        n_evanescent: config.numerics.n_evanescent,
        n_terms: config.numerics.n_terms,
        ..ScanOptions::default()
    })
}

fn run_scan(config: &RunConfig, g: &Geometry, k_min: f64, k_max: f64) -> CliResult<SecularScan> {
    let options = scan_options(config)?;
    if k_max <= k_min {
        return Err(CliError::validation("scan.k_max", format!("must exceed k_min = {k_min}")));
    }
    secular_scan(g, k_min, k_max, &options).context("secular scan")
}

pub fn trace(config: &RunConfig) -> CliResult<Artifacts> {
    let g = geometry(config)?;
    let l_max = positive(config.numerics.l_max.unwrap_or(DEFAULT_L_MAX), "numerics.l_max")?;
    let q_dim = config.numerics.q_dim.unwrap_or(DEFAULT_Q_DIM);
    let orbits = trace::enumerate_orbits(&g, l_max).context("orbits")?;
    let mut table = Table::new("orbits.csv", &["M", "N", "length", "K", "eta", "amplitude"]);
    for o in &orbits {
        table.push(vec![
            o.m_wind.to_string(),
            o.n_wind.to_string(),
            num(o.length),
            o.k_int.to_string(),
            num(o.eta),
            num(o.amplitude),
        ]);
    }
    let primitive: Vec<_> = orbits
        .iter()
        .filter(|o| o.repetition == 1 && o.family == OrbitFamily::Oblique)
        .collect();
    let checks: Vec<(u64, u64, f64, trace::QCheck)> = primitive
        .par_iter()
        .map(|o| {
            let spec = QMatrixSpec::new(q_dim, o.m_wind, o.n_wind, g.h1() / g.a())?;
            Ok((o.m_wind, o.n_wind, spec.y(), trace::q_check(&spec, 0.05)?))
        })
        .collect::<billiard_core::Result<_>>()
        .context("q-matrix check")?;
    let mut qtable = Table::new(
        "qcheck.csv",
        &["R", "M", "N", "y", "trace_real", "prediction", "clustering_fraction"],
    );
    for (m, n, y, c) in &checks {
        qtable.push(vec![
            c.r_dim.to_string(),
            m.to_string(),
            n.to_string(),
            num(*y),
            num(c.trace.re),
            num(c.prediction),
            num(c.clustering_fraction),
        ]);
    }
    let mut tables = vec![table, qtable];
    let mut summary = json!({ "orbits": orbits.len(), "q_dim": q_dim });
    if let Some(k_max) = config.scan.k_max {
        let k_min = config.scan.k_min.unwrap_or(1.0);
        let scan = run_scan(config, &g, k_min, k_max)?;
        let levels = scan.wavenumbers();
        let smooth = SmoothCounting::fit(&g, &levels).context("smooth counting")?;
        let resolution = 2.0 * PI / (levels[levels.len() - 1] - levels[0]);
        let step = resolution / 4.0;
        let grid: Vec<f64> = (0..).map(|i| 0.5 + step * i as f64).take_while(|&l| l <= l_max + 0.5).collect();
        let ls = trace::length_spectrum(&levels, &smooth, &grid).context("length spectrum")?;
        let mut lt = Table::new("lengthspec.csv", &["L", "weight"]);
        for (l, w) in ls.lengths.iter().zip(&ls.weights) {
            lt.push(vec![num(*l), num(*w)]);
        }
        tables.push(lt);
        summary["levels"] = json!(levels.len());
        summary["resolution"] = json!(resolution);
        summary["smooth_counting"] = json!([smooth.c2, smooth.c1, smooth.c0]);
    }
    Ok(Artifacts {
        tables,
        documents: vec![],
        summary,
    })
}

pub fn spectrum(config: &RunConfig) -> CliResult<Artifacts> {
    let g = geometry(config)?;
    let k_max = positive(require(config.scan.k_max, "scan.k_max")?, "scan.k_max")?;
    let k_min = positive(config.scan.k_min.unwrap_or(1.0), "scan.k_min")?;
    let scan = run_scan(config, &g, k_min, k_max)?;
    let mut table = Table::new("spectrum.csv", &["index", "k_root", "residual", "flag"]);
    let mut index = 0usize;
    for level in &scan.levels {
        let flag = match (level.multiplicity > 1, level.near_threshold) {
            (true, _) => "degenerate",
            (false, true) => "near_threshold",
            (false, false) => "ok",
        };
        for _ in 0..level.multiplicity {
            index += 1;
            table.push(vec![index.to_string(), num(level.k), num(level.residual), flag.into()]);
        }
    }
    Ok(Artifacts {
        summary: json!({
            "geometry": { "a": g.a(), "b": g.b(), "h1": g.h1() },
            "k_min": scan.k_min,
            "k_max": scan.k_max,
            "dk_at_k_max": scan.dk,
            "n_evanescent_max": scan.n_evanescent,
            "levels": index,
            "evaluations": scan.evaluations,
        }),
        tables: vec![table],
        documents: vec![],
    })
}

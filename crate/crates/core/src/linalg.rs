//! Thin wrappers around the dense eigensolvers.

use faer::Mat;
use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::error::{Error, Result};

pub type CMat = Mat<Complex64>;
pub type RMat = Mat<f64>;

/// Eigenvalues of a general dense complex matrix.
pub fn eigenvalues(m: &CMat) -> Result<Vec<Complex64>> {
    m.eigenvalues()
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &RMat) -> Result<Vec<f64>> {
    let mut ev = m
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Sorted eigenphases in [0, 2pi) of a unitary matrix.
///
/// Any eigenvalue further than `tol` from the unit circle aborts.
pub fn eigenphases(m: &CMat, tol: f64) -> Result<Vec<f64>> {
    let ev = eigenvalues(m)?;
    let deviation = ev.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max);
    if deviation > tol {
        return Err(Error::NotUnitary { deviation });
    }
    let mut phases: Vec<f64> = ev.iter().map(|z| z.arg().rem_euclid(TAU)).collect();
    phases.sort_by(f64::total_cmp);
    Ok(phases)
}

/// max |M^dagger M - I| over entries.
pub fn unitarity_defect(m: &CMat) -> f64 {
    let g = m.adjoint() * m;
    max_identity_defect(g.nrows(), |i, j| g[(i, j)])
}

/// max |M^T M - I| over entries of a real matrix.
pub fn orthogonality_defect(m: &RMat) -> f64 {
    let g = m.transpose() * m;
    max_identity_defect(g.nrows(), |i, j| Complex64::new(g[(i, j)], 0.0))
}

/// max |M M - I| over entries of a real matrix.
pub fn involution_defect(m: &RMat) -> f64 {
    let g = m * m;
    max_identity_defect(g.nrows(), |i, j| Complex64::new(g[(i, j)], 0.0))
}

fn max_identity_defect(n: usize, entry: impl Fn(usize, usize) -> Complex64) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((entry(i, j) - target).norm());
        }
    }
    worst
}

/// Complex copy of a real matrix.
pub fn complexify(m: &RMat) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| Complex64::new(m[(i, j)], 0.0))
}

/// diag(d) * M.
pub fn scale_rows(d: &[Complex64], m: &CMat) -> CMat {
    CMat::from_fn(m.nrows(), m.ncols(), |i, j| d[i] * m[(i, j)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_zero_defect_and_zero_phases() {
        let id = CMat::from_fn(4, 4, |i, j| if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) });
        assert_eq!(unitarity_defect(&id), 0.0);
        let ph = eigenphases(&id, 1e-10).unwrap();
        assert!(ph.iter().all(|&p| p < 1e-12 || (TAU - p) < 1e-12));
    }

    #[test]
    fn rotation_phases() {
        let t = 0.7f64;
        let r = RMat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) | (1, 1) => t.cos(),
            (0, 1) => -t.sin(),
            _ => t.sin(),
        });
        let ph = eigenphases(&complexify(&r), 1e-12).unwrap();
        assert!((ph[0] - t).abs() < 1e-12);
        assert!((ph[1] - (TAU - t)).abs() < 1e-12);
        assert!(orthogonality_defect(&r) < 1e-15);
    }

    #[test]
    fn non_unitary_is_rejected() {
        let m = CMat::from_fn(2, 2, |i, j| if i == j { Complex64::new(2.0, 0.0) } else { Complex64::new(0.0, 0.0) });
        assert!(matches!(eigenphases(&m, 1e-6), Err(Error::NotUnitary { .. })));
    }
}

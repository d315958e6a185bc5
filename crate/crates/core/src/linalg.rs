//! Thin wrappers over the dense eigensolvers plus the entropy functional
//! shared by every backend.

use faer::{Mat, Side};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Eigenvalues below this are treated as exact zeros in `-p log p`.
pub const EIG_ZERO: f64 = 1e-14;
/// Slack allowed outside `[0, 1]` before a spectrum is rejected.
pub const EIG_CLAMP: f64 = 1e-10;

/// Von Neumann entropy in bits of a probability spectrum.
///
/// Entries within `EIG_CLAMP` of the unit interval are clamped; anything
/// further outside is an invalid density matrix.
pub fn entropy_from_spectrum(spectrum: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &p in spectrum {
        if !p.is_finite() || !(-EIG_CLAMP..=1.0 + EIG_CLAMP).contains(&p) {
            return Err(Error::InvalidDensityMatrix(p));
        }
        let p = p.clamp(0.0, 1.0);
        if p > EIG_ZERO {
            s -= p * p.log2();
        }
    }
    Ok(s.max(0.0))
}

/// Binary entropy `h2(p)` in bits.
pub fn binary_entropy(p: f64) -> f64 {
    let mut h = 0.0;
    for q in [p, 1.0 - p] {
        if q > EIG_ZERO {
            h -= q * q.log2();
        }
    }
    h
}

/// Binary entropy in bits with no cutoff, for accurately known small `p`.
pub fn mode_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    (-p * p.ln() - (1.0 - p) * (-p).ln_1p()) / std::f64::consts::LN_2
}

pub fn hermitian_eigenvalues(m: &Mat<C64>) -> Result<Vec<f64>> {
    if m.nrows() == 1 {
        return Ok(vec![m[(0, 0)].re]);
    }
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("hermitian eigensolver: {e:?}")))
}

pub fn symmetric_eigenvalues(m: &Mat<f64>) -> Result<Vec<f64>> {
    if m.nrows() == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Numerical(format!("symmetric eigensolver: {e:?}")))
}

/// Full eigendecomposition of a real symmetric matrix; eigenvalues ascending,
/// eigenvectors as the columns of the returned matrix.
pub fn symmetric_eigen(m: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Numerical(format!("symmetric eigensolver: {e:?}")))?;
    let vals = (0..m.nrows()).map(|i| evd.S()[i]).collect();
    Ok((vals, evd.U().to_owned()))
}

pub fn singular_values(m: &Mat<C64>) -> Result<Vec<f64>> {
    if m.nrows() == 1 || m.ncols() == 1 {
        let norm: f64 = (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].norm_sqr())
            .sum();
        return Ok(vec![norm.sqrt()]);
    }
    m.singular_values().map_err(|e| Error::Numerical(format!("svd: {e:?}")))
}

/// Thin SVD `m = U diag(s) V^H`, singular values non-increasing.
pub fn thin_svd(m: &Mat<C64>) -> Result<(Mat<C64>, Vec<f64>, Mat<C64>)> {
    let svd = m.thin_svd().map_err(|e| Error::Numerical(format!("svd: {e:?}")))?;
    let k = m.nrows().min(m.ncols());
    let s = (0..k).map(|i| svd.S()[i].re).collect();
    Ok((svd.U().to_owned(), s, svd.V().to_owned()))
}

/// Entropy of the density matrix `rho` (Hermitian, unit trace).
pub fn hermitian_entropy(rho: &Mat<C64>) -> Result<f64> {
    entropy_from_spectrum(&hermitian_eigenvalues(rho)?)
}

/// Entropy from Schmidt coefficients `s_k` (probabilities `s_k^2`).
pub fn schmidt_entropy(values: &[f64]) -> Result<f64> {
    let probs: Vec<f64> = values.iter().map(|s| s * s).collect();
    entropy_from_spectrum(&probs)
}

/// Gram matrix `X X^H` of a row-major block with `rows` rows.
pub fn gram_rows(x: &Mat<C64>) -> Mat<C64> {
    x * x.adjoint()
}

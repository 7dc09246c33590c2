//! Dense eigenvalue utilities for the small real plant matrices.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Real;

const SCHUR_MAX_ITER: usize = 10_000;

/// Modulus of a complex number.
pub fn cabs<T: Real>(c: Complex<T>) -> T {
    c.re.hypot(c.im)
}

/// Eigenvalues of a real square matrix via the real Schur form.
pub fn eigenvalues<T: Real>(m: &DMatrix<T>) -> Result<Vec<Complex<T>>> {
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), T::epsilon(), SCHUR_MAX_ITER)
        .ok_or_else(|| Error::Domain("Schur iteration did not converge".into()))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Largest real part among the eigenvalues.
pub fn spectral_abscissa<T: Real>(m: &DMatrix<T>) -> Result<T> {
    Ok(eigenvalues(m)?
        .iter()
        .map(|e| e.re)
        .fold(T::min_value().unwrap(), |a, b| a.max(b)))
}

/// Relative residual `|M v - lambda v| / |v|` of an eigenvector computed by
/// two steps of shifted inverse iteration.
pub fn eigenvector_residual<T: Real>(m: &DMatrix<T>, lambda: Complex<T>) -> Result<T> {
    let n = m.nrows();
    let mc: DMatrix<Complex<T>> = m.map(|v| Complex::new(v, T::zero()));
    let scale = m.norm().max(T::one());
    let shift = lambda + Complex::new(scale * T::lit(1e3) * T::epsilon(), T::zero());
    let shifted = &mc - DMatrix::from_diagonal_element(n, n, shift);
    let lu = shifted.lu();
    let mut v = DVector::from_fn(n, |i, _| Complex::new(T::one() + T::from_usize(i).unwrap() * T::lit(0.1), T::zero()));
    for _ in 0..2 {
        v = lu
            .solve(&v)
            .ok_or_else(|| Error::Domain("shifted matrix singular".into()))?;
        let norm = v.norm();
        v.unscale_mut(norm);
    }
    let resid = &mc * &v - v.map(|c| c * lambda);
    Ok(resid.norm() / v.norm())
}

/// Number of singular values below `rel_tol * sigma_max`.
pub fn nullity<T: Real>(m: &DMatrix<T>, rel_tol: T) -> usize {
    let sv = m.clone().singular_values();
    let top = sv.iter().copied().fold(T::zero(), |a, b| a.max(b));
    sv.iter().filter(|&&s| s <= rel_tol * top).count()
}

/// Spectral abscissa after discarding the `k` smallest-modulus eigenvalues,
/// where `k` is the numerical nullity. Returns `(abscissa, k)`.
///
/// Position-feedback laws leave feather combinations that neither move the
/// wing nor get fed back; they are exact zero eigenvalues that carry no
/// dynamics and would otherwise pin the abscissa at round-off level.
pub fn pruned_abscissa<T: Real>(m: &DMatrix<T>) -> Result<(T, usize)> {
    let k = nullity(m, T::lit(1e-9));
    let mut ev = eigenvalues(m)?;
    ev.sort_by(|a, b| cabs(*a).partial_cmp(&cabs(*b)).unwrap_or(std::cmp::Ordering::Equal));
    let alpha = ev[k..]
        .iter()
        .map(|e| e.re)
        .fold(T::min_value().unwrap(), |a, b| a.max(b));
    Ok((alpha, k))
}

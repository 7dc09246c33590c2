//! Composite Simpson quadrature on uniform grids.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Integrates uniformly spaced samples with the composite Simpson rule.
///
/// `values.len()` must be odd and at least 3.
pub fn simpson<T: Real>(values: &[T], h: T) -> T {
    let n = values.len();
    debug_assert!(n >= 3 && n % 2 == 1, "Simpson needs an odd sample count >= 3");
    let mut odd = T::zero();
    let mut even = T::zero();
    for (k, &v) in values.iter().enumerate().take(n - 1).skip(1) {
        if k % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    h / T::lit(3.0) * (values[0] + values[n - 1] + T::lit(4.0) * odd + T::lit(2.0) * even)
}

/// Integrates `f` over `[a, b]` with `intervals` Simpson panels (rounded up to even).
pub fn simpson_fn<T: Real>(f: impl Fn(T) -> T, a: T, b: T, intervals: usize) -> T {
    let n = (intervals.max(2) + 1) & !1;
    let h = (b - a) / T::from_usize(n).unwrap();
    let mut odd = T::zero();
    let mut even = T::zero();
    for k in 1..n {
        let v = f(a + h * T::from_usize(k).unwrap());
        if k % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    h / T::lit(3.0) * (f(a) + f(b) + T::lit(4.0) * odd + T::lit(2.0) * even)
}

/// Uniform grid of `n` points on `[a, b]`.
pub fn linspace<T: Real>(a: T, b: T, n: usize) -> Vec<T> {
    let last = T::from_usize(n - 1).unwrap();
    (0..n)
        .map(|k| a + (b - a) * T::from_usize(k).unwrap() / last)
        .collect()
}

/// Validates a Simpson-compatible grid size.
pub fn check_grid(n: usize, min: usize) -> Result<()> {
    if n.is_multiple_of(2) || n < min {
        return Err(Error::config(
            "modes.n_grid",
            format!("grid size must be odd and >= {min}, got {n}"),
        ));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_cubics() {
        let xs = linspace(0.0_f64, 2.0, 5);
        let ys: Vec<f64> = xs.iter().map(|x| x * x * x - x + 1.0).collect();
        let got = simpson(&ys, 0.5);
        // 4 - 2 + 2
        assert!((got - 4.0).abs() < 1e-14);
        let got = simpson_fn(|x: f64| x * x * x - x + 1.0, 0.0, 2.0, 3);
        assert!((got - 4.0).abs() < 1e-14);
    }

    #[test]
    fn grid_rules() {
        assert!(check_grid(201, 201).is_ok());
        assert!(check_grid(200, 201).is_err());
        assert!(check_grid(199, 201).is_err());
    }
}

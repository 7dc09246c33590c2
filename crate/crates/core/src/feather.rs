//! Feather actuators: chordwise geometry, thin-airfoil shape coefficients,
//! strip force/moment coefficients and their modal projections.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::simpson_fn;
use crate::scalar::Real;
use crate::wing::{ModeShapes, WingParams};

/// Simpson intervals used for strip-restricted modal integrals.
const STRIP_INTERVALS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Surface {
    Upper,
    Lower,
}

/// One feather: a spanwise strip between `z_lo` and `z_hi` covering the chord
/// from `x_star` to `x_k` (both measured from the leading edge).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatherSpec<T> {
    pub id: usize,
    pub side: Surface,
    pub z_lo: T,
    pub z_hi: T,
    pub x_star: T,
    pub x_k: T,
    pub beta_min: T,
    pub beta_max: T,
}

impl<T: Real> FeatherSpec<T> {
    /// Spanwise attachment point, the strip midpoint.
    pub fn z_anchor(&self) -> T {
        (self.z_lo + self.z_hi) * T::lit(0.5)
    }

    /// Chordwise attachment point, the midpoint of the covered chord.
    pub fn x_anchor(&self) -> T {
        (self.x_star + self.x_k) * T::lit(0.5)
    }

    /// Checks geometry against the wing and the one-sided deflection interval.
    /// `index` is the position in the config list, used in field paths.
    pub fn validate(&self, wing: &WingParams<T>, index: usize) -> Result<()> {
        let path = |f: &str| format!("feathers[{index}].{f}");
        let zero = T::zero();
        if !(self.z_lo >= zero && self.z_lo < self.z_hi && self.z_hi <= wing.l) {
            return Err(Error::config(
                path("z_hi"),
                format!("need 0 <= z_lo < z_hi <= l, got [{}, {}]", self.z_lo, self.z_hi),
            ));
        }
        if !(self.x_star >= zero && self.x_star < self.x_k) {
            return Err(Error::config(
                path("x_k"),
                format!("need 0 <= x_star < x_k, got [{}, {}]", self.x_star, self.x_k),
            ));
        }
        for z in [self.z_lo, self.z_anchor(), self.z_hi] {
            let b = wing.b.at(z);
            if self.x_k > b {
                return Err(Error::config(
                    path("x_k"),
                    format!("x_k = {} exceeds the chord {b} at z = {z}", self.x_k),
                ));
            }
        }
        match self.side {
            Surface::Lower => {
                if self.beta_min != zero || !(self.beta_max > zero) {
                    return Err(Error::config(
                        path("beta_max"),
                        format!(
                            "lower-surface interval must be [0, beta+] with beta+ > 0, got [{}, {}]",
                            self.beta_min, self.beta_max
                        ),
                    ));
                }
            }
            Surface::Upper => {
                if self.beta_max != zero || !(self.beta_min < zero) {
                    return Err(Error::config(
                        path("beta_max"),
                        format!(
                            "upper-surface interval must be [beta-, 0] with beta- < 0, got [{}, {}]",
                            self.beta_min, self.beta_max
                        ),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn clamp_beta(&self, beta: T) -> T {
        beta.max(self.beta_min).min(self.beta_max)
    }
}

/// Returns pairs of feather indices whose strips overlap in both span and chord
/// on the same surface. Overlap is allowed; callers log a warning.
pub fn overlapping_pairs<T: Real>(feathers: &[FeatherSpec<T>]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, a) in feathers.iter().enumerate() {
        for (j, b) in feathers.iter().enumerate().skip(i + 1) {
            let span = a.z_lo < b.z_hi && b.z_lo < a.z_hi;
            let chord = a.x_star < b.x_k && b.x_star < a.x_k;
            if a.side == b.side && span && chord {
                out.push((i, j));
            }
        }
    }
    out
}

/// Maps a chordwise distance to the Glauert angle, `psi = acos(1 - 2x/b)`.
pub fn chord_to_psi<T: Real>(x: T, b: T) -> Result<T> {
    if !(x >= T::zero() && x <= b) {
        return Err(Error::Domain(format!("chord position {x} outside [0, {b}]")));
    }
    let c = (T::one() - T::lit(2.0) * x / b).max(-T::one()).min(T::one());
    Ok(c.acos())
}

/// Dimensionless flap coefficients of a chord segment `[psi_star, psi_k]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShapeCoeffs<T> {
    pub g: T,
    pub h: T,
    pub i: T,
    pub j: T,
}

/// Closed forms for G, H, I, J of a segment `0 <= psi_star <= psi_k <= pi`.
pub fn shape_coeffs<T: Real>(psi_star: T, psi_k: T) -> Result<ShapeCoeffs<T>> {
    if !(T::zero() <= psi_star && psi_star <= psi_k && psi_k <= T::pi()) {
        return Err(Error::Domain(format!(
            "need 0 <= psi* <= psi_k <= pi, got ({psi_star}, {psi_k})"
        )));
    }
    let pi = T::pi();
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let half = T::lit(0.5);
    let sixteenth = T::lit(1.0 / 16.0);
    let c0 = psi_star.cos();
    let dpsi = psi_k - psi_star;
    let dsin = psi_k.sin() - psi_star.sin();
    let dsin2 = (two * psi_k).sin() - (two * psi_star).sin();
    let dsin3 = (three * psi_k).sin() - (three * psi_star).sin();

    let g = (dpsi - dsin) / pi;
    let h = (c0 * dpsi - dsin) / (two * pi) - c0 * dsin + half * (dpsi + half * dsin2);
    let i = (two * dsin + dsin2) / T::lit(8.0);
    let j = -sixteenth * (-two * c0 * dsin + dpsi)
        - sixteenth * ((half - c0) * dsin2)
        - sixteenth * (dsin + dsin3 / three);
    Ok(ShapeCoeffs { g, h, i, j })
}

/// Sectional coefficients `(A, B, C, D)` of a feather at span station `z`.
pub fn strip_coeffs_at<T: Real>(wing: &WingParams<T>, feather: &FeatherSpec<T>, z: T) -> Result<(ShapeCoeffs<T>, [T; 4])> {
    let b = wing.b.at(z);
    let x0 = wing.x0.at(z);
    let shape = shape_coeffs(chord_to_psi(feather.x_star, b)?, chord_to_psi(feather.x_k, b)?)?;
    let rb2 = wing.rho * b * b;
    let rb3 = rb2 * b;
    let arm = wing.cy_alpha * (x0 / b - T::lit(0.25));
    let a = wing.cy_alpha * shape.g * rb2;
    let bb = wing.cy_alpha * shape.h * rb3;
    let c = -(shape.i + arm * shape.g) * rb2;
    let d = -(shape.j + arm * shape.h) * rb3;
    Ok((shape, [a, bb, c, d]))
}

/// Sectional coefficients at the feather's spanwise anchor.
pub fn strip_coeffs<T: Real>(wing: &WingParams<T>, feather: &FeatherSpec<T>) -> Result<[T; 4]> {
    Ok(strip_coeffs_at(wing, feather, feather.z_anchor())?.1)
}

/// Modal projections `(A_bar, B_bar, C_bar, D_bar)` over the feather strip:
/// force terms against the bending mode, moment terms against torsion.
pub fn feather_modal_coeffs<T: Real>(
    wing: &WingParams<T>,
    feather: &FeatherSpec<T>,
    modes: &ModeShapes<T>,
) -> Result<[T; 4]> {
    let (lo, hi) = (feather.z_lo, feather.z_hi);
    if !(lo >= T::zero() && hi <= modes.span() && lo <= hi) {
        return Err(Error::Domain(format!(
            "strip [{lo}, {hi}] outside span [0, {}]",
            modes.span()
        )));
    }
    if lo == hi {
        return Ok([T::zero(); 4]);
    }
    if wing.b.constant().is_some() && wing.x0.constant().is_some() {
        let [a, b, c, d] = strip_coeffs(wing, feather)?;
        let int_f = simpson_fn(|z| modes.f(z), lo, hi, STRIP_INTERVALS);
        let int_phi = simpson_fn(|z| modes.phi(z), lo, hi, STRIP_INTERVALS);
        return Ok([a * int_f, b * int_f, c * int_phi, d * int_phi]);
    }
    // Tabulated chord or axis position: the sectional coefficients vary
    // along the strip and stay inside the integrand.
    let mut out = [T::zero(); 4];
    for (k, slot) in out.iter_mut().enumerate() {
        let failed = std::cell::RefCell::new(None);
        *slot = simpson_fn(
            |z| match strip_coeffs_at(wing, feather, z) {
                Ok((_, abcd)) => abcd[k] * if k < 2 { modes.f(z) } else { modes.phi(z) },
                Err(e) => {
                    failed.borrow_mut().get_or_insert(e);
                    T::zero()
                }
            },
            lo,
            hi,
            STRIP_INTERVALS,
        );
        if let Some(e) = failed.into_inner() {
            return Err(e);
        }
    }
    Ok(out)
}

/// Speed-independent coefficients of one feather.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeatherCoeffs<T> {
    pub shape: ShapeCoeffs<T>,
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
    pub a_bar: T,
    pub b_bar: T,
    pub c_bar: T,
    pub d_bar: T,
}

impl<T: Real> FeatherCoeffs<T> {
    pub fn new(wing: &WingParams<T>, feather: &FeatherSpec<T>, modes: &ModeShapes<T>) -> Result<Self> {
        let (shape, [a, b, c, d]) = strip_coeffs_at(wing, feather, feather.z_anchor())?;
        let [a_bar, b_bar, c_bar, d_bar] = feather_modal_coeffs(wing, feather, modes)?;
        Ok(Self { shape, a, b, c, d, a_bar, b_bar, c_bar, d_bar })
    }
}

/// Builds coefficients for a whole layout.
pub fn layout_coeffs<T: Real>(
    wing: &WingParams<T>,
    feathers: &[FeatherSpec<T>],
    modes: &ModeShapes<T>,
) -> Result<Vec<FeatherCoeffs<T>>> {
    feathers.iter().map(|f| FeatherCoeffs::new(wing, f, modes)).collect()
}

/// Sectional lift and moment `(q_u, m_u)` of a deflected feather.
pub fn feather_loads<T: Real>(coeffs: &FeatherCoeffs<T>, v: T, beta: T, beta_dot: T) -> (T, T) {
    let q = coeffs.a * v * v * beta + coeffs.b * v * beta_dot;
    let m = coeffs.c * v * v * beta + coeffs.d * v * beta_dot;
    (q, m)
}

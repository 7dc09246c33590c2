//! Half-wing structural description, assumed mode shapes and the Galerkin
//! modal coefficients of the two-mode (bending + torsion) model.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{check_grid, linspace, simpson};
use crate::scalar::Real;

/// Smallest grid accepted by [`build_mode_shapes`].
pub const MIN_GRID: usize = 201;

/// A spanwise distribution: either constant or piecewise-linear in `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpanProfile<T> {
    Constant(T),
    Table { z: Vec<T>, values: Vec<T> },
}

impl<T: Real> SpanProfile<T> {
    /// Value at span station `z`; tables are clamped outside their range.
    pub fn at(&self, z: T) -> T {
        match self {
            SpanProfile::Constant(v) => *v,
            SpanProfile::Table { z: zs, values } => {
                if z <= zs[0] {
                    return values[0];
                }
                let last = zs.len() - 1;
                if z >= zs[last] {
                    return values[last];
                }
                let k = zs.partition_point(|&zi| zi <= z).max(1) - 1;
                let w = (z - zs[k]) / (zs[k + 1] - zs[k]);
                values[k] + w * (values[k + 1] - values[k])
            }
        }
    }

    pub fn constant(&self) -> Option<T> {
        match self {
            SpanProfile::Constant(v) => Some(*v),
            SpanProfile::Table { .. } => None,
        }
    }

    fn nodes(&self) -> &[T] {
        match self {
            SpanProfile::Constant(_) => &[],
            SpanProfile::Table { z, .. } => z,
        }
    }

    fn validate_shape(&self, field: &str, span: T) -> Result<()> {
        if let SpanProfile::Table { z, values } = self {
            if z.len() < 2 || z.len() != values.len() {
                return Err(Error::config(
                    field,
                    "table needs >= 2 nodes and equal-length `z` and `values`",
                ));
            }
            if z.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::config(field, "table nodes must be strictly increasing"));
            }
            if z[0] > T::zero() || z[z.len() - 1] < span {
                return Err(Error::config(field, "table must cover [0, l]"));
            }
        }
        Ok(())
    }
}

/// Structural and aerodynamic constants of the cantilevered half-wing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WingParams<T> {
    /// Half-span (m).
    pub l: T,
    /// Chord (m).
    pub b: SpanProfile<T>,
    /// Leading edge to stiffness centre (m).
    pub x0: SpanProfile<T>,
    /// Stiffness centre to gravity centre, positive aft (m).
    pub sigma_t: SpanProfile<T>,
    /// Mass per unit span (kg/m).
    pub m: SpanProfile<T>,
    /// Mass moment of inertia per unit span about the stiffness axis (kg m).
    pub j_m: SpanProfile<T>,
    /// Bending stiffness (N m^2).
    pub ej: SpanProfile<T>,
    /// Torsional stiffness (N m^2).
    pub gj_k: SpanProfile<T>,
    /// Lift-curve slope (1/rad), constant along the span.
    pub cy_alpha: T,
    /// Air density (kg/m^3).
    pub rho: T,
}

impl<T: Real> WingParams<T> {
    /// Rectangular wing with spanwise-constant properties.
    #[allow(clippy::too_many_arguments)]
    pub fn uniform(
        l: T,
        b: T,
        x0: T,
        sigma_t: T,
        m: T,
        j_m: T,
        ej: T,
        gj_k: T,
        cy_alpha: T,
        rho: T,
    ) -> Self {
        Self {
            l,
            b: SpanProfile::Constant(b),
            x0: SpanProfile::Constant(x0),
            sigma_t: SpanProfile::Constant(sigma_t),
            m: SpanProfile::Constant(m),
            j_m: SpanProfile::Constant(j_m),
            ej: SpanProfile::Constant(ej),
            gj_k: SpanProfile::Constant(gj_k),
            cy_alpha,
            rho,
        }
    }

    /// Checks every invariant pointwise; errors carry the offending field path.
    pub fn validate(&self) -> Result<()> {
        let l = self.l;
        if !(l > T::zero()) {
            return Err(Error::config("wing.l", "half-span must be positive"));
        }
        for (name, v) in [("wing.cy_alpha", self.cy_alpha), ("wing.rho", self.rho)] {
            if !(v > T::zero()) {
                return Err(Error::config(name, "must be positive"));
            }
        }
        let profiles = self.profiles();
        for (name, p) in &profiles {
            p.validate_shape(name, l)?;
        }

        // Linear interpolation attains its extrema at nodes, so checking the
        // union of all nodes plus the end points covers the whole span.
        let mut stations = vec![T::zero(), l];
        for (_, p) in &profiles {
            stations.extend(p.nodes().iter().copied().filter(|&z| z >= T::zero() && z <= l));
        }
        for z in stations {
            let at = |v: T| format!("{v} at z = {z}");
            for (name, p) in [
                ("wing.b", &self.b),
                ("wing.m", &self.m),
                ("wing.j_m", &self.j_m),
                ("wing.ej", &self.ej),
                ("wing.gj_k", &self.gj_k),
            ] {
                let v = p.at(z);
                if !(v > T::zero()) {
                    return Err(Error::config(name, format!("must be positive, got {}", at(v))));
                }
            }
            let b = self.b.at(z);
            let x0 = self.x0.at(z);
            if !(x0 > T::zero() && x0 < b) {
                return Err(Error::config(
                    "wing.x0",
                    format!("must satisfy 0 < x0 < b, got {} (b = {b})", at(x0)),
                ));
            }
            let s = self.sigma_t.at(z);
            if !(s.abs() < b) {
                return Err(Error::config(
                    "wing.sigma_t",
                    format!("must satisfy |sigma_t| < b, got {}", at(s)),
                ));
            }
            let m = self.m.at(z);
            let jm = self.j_m.at(z);
            if !(jm > m * s * s) {
                return Err(Error::config(
                    "wing.j_m",
                    format!(
                        "mass matrix not positive definite: j_m = {jm} <= m*sigma_t^2 = {} at z = {z}",
                        m * s * s
                    ),
                ));
            }
        }
        Ok(())
    }

    fn profiles(&self) -> [(&'static str, &SpanProfile<T>); 7] {
        [
            ("wing.b", &self.b),
            ("wing.x0", &self.x0),
            ("wing.sigma_t", &self.sigma_t),
            ("wing.m", &self.m),
            ("wing.j_m", &self.j_m),
            ("wing.ej", &self.ej),
            ("wing.gj_k", &self.gj_k),
        ]
    }

    /// True when every distribution is spanwise constant.
    pub fn is_uniform(&self) -> bool {
        self.profiles().iter().all(|(_, p)| p.constant().is_some())
    }
}

/// First root of `cosh(x) cos(x) = -1`, found by bisection on `[1.5, 2.5]`.
pub fn first_cantilever_root<T: Real>() -> T {
    let g = |x: T| x.cosh() * x.cos() + T::one();
    let mut lo = T::lit(1.5);
    let mut hi = T::lit(2.5);
    let g_lo = g(lo);
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if (g(mid) > T::zero()) == (g_lo > T::zero()) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo + hi) * T::lit(0.5)
}

/// First bending and torsion modes of a uniform cantilever, sampled on a
/// uniform span grid and normalised to unit tip value.
#[derive(Debug, Clone)]
pub struct ModeShapes<T> {
    l: T,
    lambda: T,
    sigma: T,
    tip_scale: T,
    pub grid: Vec<T>,
    pub f: Vec<T>,
    pub f2: Vec<T>,
    pub phi: Vec<T>,
    pub phi1: Vec<T>,
}

/// Builds the mode shapes on `n_grid` points (odd, >= [`MIN_GRID`]).
pub fn build_mode_shapes<T: Real>(wing: &WingParams<T>, n_grid: usize) -> Result<ModeShapes<T>> {
    check_grid(n_grid, MIN_GRID)?;
    if !(wing.l > T::zero()) {
        return Err(Error::config("wing.l", "half-span must be positive"));
    }
    let lambda = first_cantilever_root::<T>();
    let sigma = (lambda.cosh() + lambda.cos()) / (lambda.sinh() + lambda.sin());
    let mut shapes = ModeShapes {
        l: wing.l,
        lambda,
        sigma,
        tip_scale: T::one(),
        grid: linspace(T::zero(), wing.l, n_grid),
        f: Vec::new(),
        f2: Vec::new(),
        phi: Vec::new(),
        phi1: Vec::new(),
    };
    shapes.tip_scale = T::one() / shapes.bending_raw(lambda, 0);
    shapes.f = shapes.grid.iter().map(|&z| shapes.f(z)).collect();
    shapes.f2 = shapes.grid.iter().map(|&z| shapes.f2(z)).collect();
    shapes.phi = shapes.grid.iter().map(|&z| shapes.phi(z)).collect();
    shapes.phi1 = shapes.grid.iter().map(|&z| shapes.phi1(z)).collect();
    Ok(shapes)
}

impl<T: Real> ModeShapes<T> {
    pub fn span(&self) -> T {
        self.l
    }

    /// Eigenvalue `lambda` of the first cantilever bending mode.
    pub fn lambda(&self) -> T {
        self.lambda
    }

    /// Grid spacing.
    pub fn h(&self) -> T {
        self.grid[1] - self.grid[0]
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// d^n/dt^n of the unnormalised bending shape at `t = lambda z / l`.
    fn bending_raw(&self, t: T, order: u8) -> T {
        let (ch, sh, c, s) = (t.cosh(), t.sinh(), t.cos(), t.sin());
        let sg = self.sigma;
        match order % 4 {
            0 => ch - c - sg * (sh - s),
            1 => sh + s - sg * (ch - c),
            2 => ch + c - sg * (sh + s),
            _ => sh - s - sg * (ch + c),
        }
    }

    /// n-th span derivative of the normalised bending mode.
    pub fn f_deriv(&self, z: T, order: u8) -> T {
        let k = self.lambda / self.l;
        let t = k * z;
        self.tip_scale * k.powi(order as i32) * self.bending_raw(t, order)
    }

    pub fn f(&self, z: T) -> T {
        self.f_deriv(z, 0)
    }

    pub fn f1(&self, z: T) -> T {
        self.f_deriv(z, 1)
    }

    pub fn f2(&self, z: T) -> T {
        self.f_deriv(z, 2)
    }

    pub fn f3(&self, z: T) -> T {
        self.f_deriv(z, 3)
    }

    pub fn f4(&self, z: T) -> T {
        self.f_deriv(z, 4)
    }

    /// Wavenumber of the torsion mode, `pi / (2 l)`.
    pub fn torsion_k(&self) -> T {
        T::frac_pi_2() / self.l
    }

    pub fn phi(&self, z: T) -> T {
        (self.torsion_k() * z).sin()
    }

    pub fn phi1(&self, z: T) -> T {
        let k = self.torsion_k();
        k * (k * z).cos()
    }

    pub fn phi2(&self, z: T) -> T {
        let k = self.torsion_k();
        -k * k * (k * z).sin()
    }

    /// Boundary residuals, made dimensionless with powers of `l`:
    /// `[f(0), f'(0) l, phi(0), f''(l) l^2, f'''(l) l^3, phi'(l) l]`.
    pub fn boundary_residuals(&self) -> [T; 6] {
        let l = self.l;
        let z0 = T::zero();
        [
            self.f(z0),
            self.f1(z0) * l,
            self.phi(z0),
            self.f2(l) * l * l,
            self.f3(l) * l * l * l,
            self.phi1(l) * l,
        ]
    }

    /// Simpson integral of `g(z, k)` over the grid, where `k` is the node index.
    pub fn integrate(&self, g: impl Fn(T, usize) -> T) -> T {
        let vals: Vec<T> = self.grid.iter().enumerate().map(|(k, &z)| g(z, k)).collect();
        simpson(&vals, self.h())
    }
}

/// Speed-independent Galerkin coefficients. Hatted fields carry the velocity
/// factor removed: `a12 = V a12_hat`, `b13 = V^2 b13_hat`, and so on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModalCoefficients<T> {
    pub a11: T,
    pub a13: T,
    pub b11: T,
    pub a21: T,
    pub b21: T,
    pub b23_2: T,
    pub a12_hat: T,
    pub b12_hat: T,
    pub b13_hat: T,
    pub a22_hat: T,
    pub b22_hat: T,
    pub b23_1_hat: T,
}

/// Galerkin coefficients evaluated at one airspeed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModalAtSpeed<T> {
    pub v: T,
    pub a11: T,
    pub a12: T,
    pub a13: T,
    pub b11: T,
    pub b12: T,
    pub b13: T,
    pub a21: T,
    pub a22: T,
    pub b21: T,
    pub b22: T,
    pub b23: T,
    pub b23_2: T,
}

/// Projects the coupled bending/torsion equations onto the mode shapes.
///
/// The bending stiffness term uses the weak form `int EJ (f'')^2`, which for
/// the cantilever boundary conditions equals the strong form
/// `int (EJ f'')'' f`; likewise `b23_2 = -int GJ (phi')^2`.
pub fn modal_integrals<T: Real>(wing: &WingParams<T>, modes: &ModeShapes<T>) -> ModalCoefficients<T> {
    let quarter = T::lit(0.25);
    let three_quarter = T::lit(0.75);
    let cr = wing.cy_alpha * wing.rho;
    let f = &modes.f;
    let f2 = &modes.f2;
    let phi = &modes.phi;
    let phi1 = &modes.phi1;

    let coupling = modes.integrate(|z, k| wing.m.at(z) * wing.sigma_t.at(z) * f[k] * phi[k]);
    let a11 = modes.integrate(|z, k| wing.m.at(z) * f[k] * f[k]);
    let a13 = modes.integrate(|z, k| wing.ej.at(z) * f2[k] * f2[k]);
    let b21 = -modes.integrate(|z, k| wing.j_m.at(z) * phi[k] * phi[k]);
    let b23_2 = -modes.integrate(|z, k| wing.gj_k.at(z) * phi1[k] * phi1[k]);

    let a12_hat = cr * modes.integrate(|z, k| wing.b.at(z) * f[k] * f[k]);
    let b12_hat = -cr
        * modes.integrate(|z, k| {
            let b = wing.b.at(z);
            (three_quarter * b - wing.x0.at(z)) * b * f[k] * phi[k]
        });
    let b13_hat = -cr * modes.integrate(|z, k| wing.b.at(z) * f[k] * phi[k]);
    let a22_hat = -cr
        * modes.integrate(|z, k| {
            let b = wing.b.at(z);
            (wing.x0.at(z) - quarter * b) * b * f[k] * phi[k]
        });
    let apparent = T::pi() / T::lit(16.0)
        * wing.rho
        * modes.integrate(|z, k| {
            let b = wing.b.at(z);
            b * b * b * phi[k] * phi[k]
        });
    let b22_hat = -apparent
        + cr * modes.integrate(|z, k| {
            let b = wing.b.at(z);
            let x0 = wing.x0.at(z);
            b * (x0 - quarter * b) * (three_quarter * b - x0) * phi[k] * phi[k]
        });
    let b23_1_hat = cr
        * modes.integrate(|z, k| {
            let b = wing.b.at(z);
            b * (wing.x0.at(z) - quarter * b) * phi[k] * phi[k]
        });

    ModalCoefficients {
        a11,
        a13,
        b11: -coupling,
        a21: coupling,
        b21,
        b23_2,
        a12_hat,
        b12_hat,
        b13_hat,
        a22_hat,
        b22_hat,
        b23_1_hat,
    }
}

/// Strong-form stiffness integrals `(int (EJ f'')'' f, int (GJ phi')' phi)`.
///
/// Only defined for spanwise-constant stiffness, where the derivatives of the
/// closed-form modes reduce the integrands to `EJ f'''' f` and `GJ phi'' phi`.
pub fn strong_form_stiffness<T: Real>(wing: &WingParams<T>, modes: &ModeShapes<T>) -> Option<(T, T)> {
    let ej = wing.ej.constant()?;
    let gj = wing.gj_k.constant()?;
    let bending = modes.integrate(|z, k| ej * modes.f4(z) * modes.f[k]);
    let torsion = modes.integrate(|z, k| gj * modes.phi2(z) * modes.phi[k]);
    Some((bending, torsion))
}

impl<T: Real> ModalCoefficients<T> {
    /// Applies the velocity power laws at airspeed `v` (m/s, non-negative).
    pub fn at_speed(&self, v: T) -> Result<ModalAtSpeed<T>> {
        if !(v >= T::zero()) {
            return Err(Error::Domain(format!("airspeed must be >= 0, got {v}")));
        }
        let v2 = v * v;
        Ok(ModalAtSpeed {
            v,
            a11: self.a11,
            a12: v * self.a12_hat,
            a13: self.a13,
            b11: self.b11,
            b12: v * self.b12_hat,
            b13: v2 * self.b13_hat,
            a21: self.a21,
            a22: v * self.a22_hat,
            b21: self.b21,
            b22: v * self.b22_hat,
            b23: v2 * self.b23_1_hat + self.b23_2,
            b23_2: self.b23_2,
        })
    }

    /// Positive-definiteness margin of the modal inertia, `a11 (-b21) - a21^2`.
    pub fn inertia_margin(&self) -> T {
        self.a11 * (-self.b21) - self.a21 * self.a21
    }
}

/// Convenience wrapper matching the free-function style of the other modules.
pub fn evaluate_at_speed<T: Real>(coeffs: &ModalCoefficients<T>, v: T) -> Result<ModalAtSpeed<T>> {
    coeffs.at_speed(v)
}

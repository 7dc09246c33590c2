//! First-order plant, the second-order reference solve, modal energy and the
//! network goal functionals.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::control::{AgentView, Topology};
use crate::error::{Error, Result};
use crate::feather::{FeatherCoeffs, FeatherSpec};
use crate::scalar::Real;
use crate::wing::{ModalAtSpeed, ModalCoefficients, ModeShapes};

/// Linear plant at one airspeed: `x' = A x + R beta + S u`, `beta' = u`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateSpace<T> {
    pub v: T,
    /// Inverse of the modal inertia `[[a11, b11], [a21, b21]]`.
    pub d: [[T; 2]; 2],
    pub c1: [T; 4],
    pub c2: [T; 4],
    pub r1: Vec<T>,
    pub r2: Vec<T>,
    pub s1: Vec<T>,
    pub s2: Vec<T>,
    /// Position-feedback coefficients of the constant-coefficient law.
    pub mu: Vec<T>,
    pub nu: Vec<T>,
}

/// Inverse of the 2x2 modal inertia matrix, or an error when singular.
pub fn inertia_inverse<T: Real>(a11: T, b11: T, a21: T, b21: T) -> Result<[[T; 2]; 2]> {
    let det = a11 * b21 - b11 * a21;
    let scale = (a11 * b21).abs() + (b11 * a21).abs();
    if !(det.abs() > T::lit(64.0) * T::epsilon() * scale) {
        return Err(Error::SingularInertia { det: det.to_f64_lossy() });
    }
    let d11 = b21 / det;
    Ok([[d11, -d11 * b11 / b21], [-a21 / det, a11 / det]])
}

/// Reduces the Galerkin system at speed `modal.v` to first-order form.
pub fn assemble<T: Real>(modal: &ModalAtSpeed<T>, feathers: &[FeatherCoeffs<T>]) -> Result<StateSpace<T>> {
    let m = modal;
    let d = inertia_inverse(m.a11, m.b11, m.a21, m.b21)?;
    let row = |p: usize| {
        let (dq, dm) = (d[p][0], d[p][1]);
        [
            -dq * m.a13,
            -(dq * m.a12 + dm * m.a22),
            -(dq * m.b13 + dm * m.b23),
            -(dq * m.b12 + dm * m.b22),
        ]
    };
    let v = m.v;
    let v2 = v * v;
    let n = feathers.len();
    let mut ss = StateSpace {
        v,
        d,
        c1: row(0),
        c2: row(1),
        r1: Vec::with_capacity(n),
        r2: Vec::with_capacity(n),
        s1: Vec::with_capacity(n),
        s2: Vec::with_capacity(n),
        mu: Vec::with_capacity(n),
        nu: Vec::with_capacity(n),
    };
    for fc in feathers {
        let s1 = v * (fc.b_bar * d[0][0] + fc.d_bar * d[0][1]);
        let s2 = v * (fc.b_bar * d[1][0] + fc.d_bar * d[1][1]);
        ss.r1.push(v2 * (fc.a_bar * d[0][0] + fc.c_bar * d[0][1]));
        ss.r2.push(v2 * (fc.a_bar * d[1][0] + fc.c_bar * d[1][1]));
        ss.s1.push(s1);
        ss.s2.push(s2);
        ss.mu.push(m.a11 * s1 - m.a21 * s2);
        ss.nu.push(-(m.a21 * s1 + m.b21 * s2));
    }
    Ok(ss)
}

/// Time derivative of the extended state.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivative<T> {
    pub dx: [T; 4],
    pub dbeta: Vec<T>,
}

impl<T: Real> StateSpace<T> {
    pub fn n_feathers(&self) -> usize {
        self.s1.len()
    }

    /// Uncontrolled 4x4 plant matrix.
    pub fn plant_matrix(&self) -> Matrix4<T> {
        let (o, i) = (T::zero(), T::one());
        let c1 = self.c1;
        let c2 = self.c2;
        Matrix4::new(
            o, i, o, o, //
            c1[0], c1[1], c1[2], c1[3], //
            o, o, o, i, //
            c2[0], c2[1], c2[2], c2[3],
        )
    }

    /// Feather forcing `(F1, F2)` on the two acceleration equations.
    pub fn forcing(&self, beta: &[T], u: &[T]) -> (T, T) {
        let mut f1 = T::zero();
        let mut f2 = T::zero();
        for k in 0..self.n_feathers() {
            f1 += self.r1[k] * beta[k] + self.s1[k] * u[k];
            f2 += self.r2[k] * beta[k] + self.s2[k] * u[k];
        }
        (f1, f2)
    }

    /// Writes `(x', beta')` into `out` (length `4 + N`).
    pub fn rhs_into(&self, x: &[T], beta: &[T], u: &[T], out: &mut [T]) {
        let n = self.n_feathers();
        assert!(
            x.len() == 4 && beta.len() == n && u.len() == n && out.len() == 4 + n,
            "rhs dimension mismatch"
        );
        let (f1, f2) = self.forcing(beta, u);
        let dot = |c: &[T; 4]| c[0] * x[0] + c[1] * x[1] + c[2] * x[2] + c[3] * x[3];
        out[0] = x[1];
        out[1] = dot(&self.c1) + f1;
        out[2] = x[3];
        out[3] = dot(&self.c2) + f2;
        out[4..].copy_from_slice(u);
    }

    pub fn rhs(&self, x: &[T; 4], beta: &[T], u: &[T]) -> Derivative<T> {
        let mut out = vec![T::zero(); 4 + self.n_feathers()];
        self.rhs_into(x, beta, u, &mut out);
        Derivative {
            dx: [out[0], out[1], out[2], out[3]],
            dbeta: out.split_off(4),
        }
    }
}

/// Free-function form of [`StateSpace::rhs`].
pub fn rhs<T: Real>(ss: &StateSpace<T>, x: &[T; 4], beta: &[T], u: &[T]) -> Result<Derivative<T>> {
    let n = ss.n_feathers();
    if beta.len() != n || u.len() != n {
        return Err(Error::Dimension(format!(
            "plant has {n} feathers, got beta {} and u {}",
            beta.len(),
            u.len()
        )));
    }
    Ok(ss.rhs(x, beta, u))
}

/// Reference right-hand side: builds the generalized feather force and moment
/// and solves the second-order modal system by elimination at every call.
pub fn rhs_oracle<T: Real>(
    modal: &ModalAtSpeed<T>,
    feathers: &[FeatherCoeffs<T>],
    x: &[T; 4],
    beta: &[T],
    u: &[T],
) -> Result<Derivative<T>> {
    if beta.len() != feathers.len() || u.len() != feathers.len() {
        return Err(Error::Dimension("beta/u length must equal feather count".into()));
    }
    let m = modal;
    let v = m.v;
    let mut q_gen = T::zero();
    let mut m_gen = T::zero();
    for (k, fc) in feathers.iter().enumerate() {
        q_gen += fc.a_bar * v * v * beta[k] + fc.b_bar * v * u[k];
        m_gen += fc.c_bar * v * v * beta[k] + fc.d_bar * v * u[k];
    }
    let [q, qd, r, rd] = *x;
    let rhs1 = q_gen - m.a12 * qd - m.a13 * q - m.b12 * rd - m.b13 * r;
    let rhs2 = m_gen - m.a22 * qd - m.b22 * rd - m.b23 * r;

    // Eliminate q'' from the second row, back-substitute.
    if m.a11 == T::zero() {
        return Err(Error::SingularInertia { det: 0.0 });
    }
    let factor = m.a21 / m.a11;
    let pivot = m.b21 - factor * m.b11;
    if pivot == T::zero() {
        return Err(Error::SingularInertia { det: 0.0 });
    }
    let rdd = (rhs2 - factor * rhs1) / pivot;
    let qdd = (rhs1 - m.b11 * rdd) / m.a11;
    Ok(Derivative {
        dx: [qd, qdd, rd, rdd],
        dbeta: u.to_vec(),
    })
}

/// Modal form of the beam's total energy.
pub fn total_energy<T: Real>(c: &ModalCoefficients<T>, x: &[T; 4]) -> T {
    let half = T::lit(0.5);
    let [x1, x2, x3, x4] = *x;
    half * c.a13 * x1 * x1 + half * c.a11 * x2 * x2 - half * c.b23_2 * x3 * x3 - half * c.b21 * x4 * x4
        - c.a21 * x2 * x4
}

/// Constants of the goal functionals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalParams<T> {
    pub chi: T,
    pub lambda: T,
    pub e_star: T,
    pub eps_star: T,
    pub eps_beta: T,
    pub eps_dstar: T,
}

impl<T: Real> GoalParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.chi >= T::zero()) {
            return Err(Error::config("goals.chi", "must be >= 0"));
        }
        if !(self.lambda >= T::zero()) {
            return Err(Error::config("goals.lambda", "must be >= 0"));
        }
        for (name, v) in [
            ("goals.e_star", self.e_star),
            ("goals.eps_star", self.eps_star),
            ("goals.eps_beta", self.eps_beta),
            ("goals.eps_dstar", self.eps_dstar),
        ] {
            if !(v > T::zero()) {
                return Err(Error::config(name, "must be > 0"));
            }
        }
        if self.eps_dstar < self.eps_star {
            return Err(Error::config("goals.eps_dstar", "must be >= eps_star"));
        }
        Ok(())
    }
}

/// Network deviation functional in closed form.
pub fn goal_l<T: Real>(x: &[T; 4], gp: &GoalParams<T>) -> T {
    T::lit(0.5) * (gp.chi * (x[0] * x[0] + x[1] * x[1]) + gp.lambda * (x[2] * x[2] + x[3] * x[3]))
}

/// Network deviation functional as the weighted pairwise sum of squared
/// differences between the agents' local deviations `w_i = Phi_i x`.
pub fn goal_l_pairwise<T: Real>(x: &[T; 4], topo: &Topology<T>, agents: &[AgentView<T>]) -> T {
    let w: Vec<[T; 4]> = agents.iter().map(|a| a.local_deviation(x)).collect();
    let mut sum = T::zero();
    for i in 0..topo.n() {
        for &j in topo.neighbors(i) {
            let mut sq = T::zero();
            for (a, b) in w[i].iter().zip(&w[j]) {
                sq += (*a - *b) * (*a - *b);
            }
            sum += topo.weight(i, j) * sq;
        }
    }
    T::lit(0.5) * sum
}

/// `1/2 sum_i sum_j b_ij (beta_i - beta_j)^2`.
pub fn disagreement<T: Real>(beta: &[T], topo: &Topology<T>) -> T {
    let mut sum = T::zero();
    for i in 0..topo.n() {
        for &j in topo.neighbors(i) {
            let diff = beta[i] - beta[j];
            sum += topo.weight(i, j) * diff * diff;
        }
    }
    T::lit(0.5) * sum
}

/// Extended functional: deviation plus feather disagreement.
pub fn goal_l_tilde<T: Real>(x: &[T; 4], beta: &[T], topo: &Topology<T>, gp: &GoalParams<T>) -> Result<T> {
    if beta.len() != topo.n() {
        return Err(Error::Dimension(format!(
            "beta has {} entries, topology has {} agents",
            beta.len(),
            topo.n()
        )));
    }
    Ok(goal_l(x, gp) + disagreement(beta, topo))
}

/// Time derivative of the extended functional along the plant for control `u`.
pub fn goal_l_tilde_rate<T: Real>(
    ss: &StateSpace<T>,
    topo: &Topology<T>,
    gp: &GoalParams<T>,
    x: &[T; 4],
    beta: &[T],
    u: &[T],
) -> T {
    let d = ss.rhs(x, beta, u);
    let mut rate =
        gp.chi * (x[0] * d.dx[0] + x[1] * d.dx[1]) + gp.lambda * (x[2] * d.dx[2] + x[3] * d.dx[3]);
    for i in 0..topo.n() {
        for &j in topo.neighbors(i) {
            rate += topo.weight(i, j) * (beta[i] - beta[j]) * (u[i] - u[j]);
        }
    }
    rate
}

/// Topology constants `chi = sum b_ij (f_i - f_j)^2` and `lambda` likewise
/// with the torsion mode, evaluated at the feather anchors.
pub fn chi_lambda<T: Real>(topo: &Topology<T>, modes: &ModeShapes<T>, feathers: &[FeatherSpec<T>]) -> (T, T) {
    let f: Vec<T> = feathers.iter().map(|s| modes.f(s.z_anchor())).collect();
    let p: Vec<T> = feathers.iter().map(|s| modes.phi(s.z_anchor())).collect();
    let mut chi = T::zero();
    let mut lambda = T::zero();
    for i in 0..topo.n() {
        for &j in topo.neighbors(i) {
            let w = topo.weight(i, j);
            chi += w * (f[i] - f[j]) * (f[i] - f[j]);
            lambda += w * (p[i] - p[j]) * (p[i] - p[j]);
        }
    }
    (chi, lambda)
}

//! Feather network topology and the three speed-gradient control laws.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{GoalParams, StateSpace};
use crate::error::{Error, Result};
use crate::feather::{FeatherSpec, Surface};
use crate::scalar::Real;
use crate::wing::ModeShapes;

const SINKHORN_TOL: f64 = 1e-9;
const SINKHORN_MAX_ITER: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TopologyKind {
    Ring,
    Grid,
    Complete,
}

/// Symmetric, zero-diagonal weight matrix with unit row sums.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology<T> {
    weights: DMatrix<T>,
    neighbors: Vec<Vec<usize>>,
}

impl<T: Real> Topology<T> {
    /// Wraps an explicit weight matrix after checking symmetry, the zero
    /// diagonal, non-negativity and unit row sums.
    pub fn from_weights(weights: DMatrix<T>) -> Result<Self> {
        let n = weights.nrows();
        if weights.ncols() != n {
            return Err(Error::Topology("weight matrix must be square".into()));
        }
        let tol = T::lit(SINKHORN_TOL);
        for i in 0..n {
            if weights[(i, i)] != T::zero() {
                return Err(Error::Topology(format!("nonzero diagonal at {i}")));
            }
            let mut row = T::zero();
            for j in 0..n {
                let w = weights[(i, j)];
                if w < T::zero() || w != weights[(j, i)] {
                    return Err(Error::Topology(format!("weight ({i}, {j}) negative or asymmetric")));
                }
                row += w;
            }
            if (row - T::one()).abs() > tol {
                return Err(Error::Topology(format!("row {i} sums to {row}")));
            }
        }
        Ok(Self::from_weights_unchecked(weights))
    }

    fn from_weights_unchecked(weights: DMatrix<T>) -> Self {
        let n = weights.nrows();
        let neighbors = (0..n)
            .map(|i| (0..n).filter(|&j| weights[(i, j)] > T::zero()).collect())
            .collect();
        Self { weights, neighbors }
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weight(&self, i: usize, j: usize) -> T {
        self.weights[(i, j)]
    }

    pub fn weights(&self) -> &DMatrix<T> {
        &self.weights
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// `sum_j b_ij (beta_i - beta_j)` for agent `i`.
    pub fn consensus_term(&self, i: usize, beta: &[T]) -> T {
        let mut acc = T::zero();
        for &j in &self.neighbors[i] {
            acc += self.weights[(i, j)] * (beta[i] - beta[j]);
        }
        acc
    }
}

/// Indices of `feathers` ordered by span anchor, ties broken by list order.
fn span_order<T: Real>(feathers: &[FeatherSpec<T>], filter: impl Fn(&FeatherSpec<T>) -> bool) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..feathers.len()).filter(|&i| filter(&feathers[i])).collect();
    idx.sort_by(|&a, &b| {
        feathers[a]
            .z_anchor()
            .partial_cmp(&feathers[b].z_anchor())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx
}

/// Builds the agent graph over the feather anchors.
///
/// * `ring`: span-ordered cycle, `k/2` neighbours on each side (k even).
/// * `complete`: every pair connected; `k` is ignored.
/// * `grid`: on each surface a span-ordered chain with `k/2` neighbours per
///   side, plus a link to the nearest feather on the other surface. The graph
///   is irregular, so weights are balanced by symmetric Sinkhorn scaling.
pub fn build_topology<T: Real>(feathers: &[FeatherSpec<T>], kind: TopologyKind, k: usize) -> Result<Topology<T>> {
    let n = feathers.len();
    if n < 2 {
        return Err(Error::config("topology", format!("need at least 2 feathers, got {n}")));
    }
    let mut adj = vec![vec![false; n]; n];
    let mut link = |a: usize, b: usize| {
        if a != b {
            adj[a][b] = true;
            adj[b][a] = true;
        }
    };
    match kind {
        TopologyKind::Complete => {
            let w = T::one() / T::from_usize(n - 1).unwrap();
            let weights = DMatrix::from_fn(n, n, |i, j| if i == j { T::zero() } else { w });
            return Ok(Topology::from_weights_unchecked(weights));
        }
        TopologyKind::Ring => {
            if k == 0 || k % 2 == 1 || k >= n {
                return Err(Error::config("topology.k", format!("ring needs even k with 2 <= k < N = {n}, got {k}")));
            }
            let order = span_order(feathers, |_| true);
            for pos in 0..n {
                for off in 1..=k / 2 {
                    link(order[pos], order[(pos + off) % n]);
                }
            }
        }
        TopologyKind::Grid => {
            if k == 0 || k % 2 == 1 || k >= n {
                return Err(Error::config("topology.k", format!("grid needs even k with 2 <= k < N = {n}, got {k}")));
            }
            let sides = [
                span_order(feathers, |f| f.side == Surface::Lower),
                span_order(feathers, |f| f.side == Surface::Upper),
            ];
            for chain in &sides {
                for pos in 0..chain.len() {
                    for off in 1..=k / 2 {
                        if pos + off < chain.len() {
                            link(chain[pos], chain[pos + off]);
                        }
                    }
                }
            }
            for (s, chain) in sides.iter().enumerate() {
                let other = &sides[1 - s];
                for &i in chain {
                    let zi = feathers[i].z_anchor();
                    let nearest = other.iter().copied().min_by(|&a, &b| {
                        let da = (feathers[a].z_anchor() - zi).abs();
                        let db = (feathers[b].z_anchor() - zi).abs();
                        da.partial_cmp(&db).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
                    });
                    if let Some(j) = nearest {
                        link(i, j);
                    }
                }
            }
        }
    }
    let degree: Vec<usize> = adj.iter().map(|r| r.iter().filter(|&&a| a).count()).collect();
    if degree.contains(&0) {
        return Err(Error::Topology("graph has an isolated agent".into()));
    }
    if degree.iter().all(|&d| d == degree[0]) {
        let w = T::one() / T::from_usize(degree[0]).unwrap();
        let weights = DMatrix::from_fn(n, n, |i, j| if adj[i][j] { w } else { T::zero() });
        return Ok(Topology::from_weights_unchecked(weights));
    }
    sinkhorn_balance(&adj)
}

/// Scales a symmetric 0/1 adjacency to `D A D` with unit row sums.
pub fn sinkhorn_balance<T: Real>(adj: &[Vec<bool>]) -> Result<Topology<T>> {
    let n = adj.len();
    let tol = T::lit(SINKHORN_TOL);
    let mut d = vec![T::one(); n];
    let build = |d: &[T]| {
        let mut w = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                if adj[i][j] {
                    let v = d[i] * d[j];
                    w[(i, j)] = v;
                    w[(j, i)] = v;
                }
            }
        }
        w
    };
    for iter in 0..SINKHORN_MAX_ITER {
        let w = build(&d);
        let mut worst = T::zero();
        let sums: Vec<T> = (0..n).map(|i| w.row(i).sum()).collect();
        for s in &sums {
            worst = worst.max((*s - T::one()).abs());
        }
        if worst <= tol {
            log::debug!("sinkhorn converged after {iter} iterations");
            return Ok(Topology::from_weights_unchecked(w));
        }
        for i in 0..n {
            d[i] *= (T::one() / sums[i]).sqrt();
        }
    }
    Err(Error::Topology(format!(
        "Sinkhorn balancing did not reach {SINKHORN_TOL:e} within {SINKHORN_MAX_ITER} iterations"
    )))
}

/// The feedback law driving the feathers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Law {
    /// Constant-coefficient position feedback.
    A,
    /// Speed-gradient law for the network functional, position form.
    B,
    /// Multi-agent speed-gradient law with consensus term.
    C,
    /// Feathers held fixed, `u = 0`.
    #[serde(rename = "off")]
    Off,
}

/// Which modal signals feed the first term of law C.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LawCInput {
    /// Modal rates `x2`, `x4`.
    #[default]
    Rates,
    /// Modal positions `x1`, `x3`.
    Positions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlConfig<T> {
    pub law: Law,
    pub gamma: Vec<T>,
    #[serde(default = "default_true")]
    pub saturation: bool,
    #[serde(default)]
    pub law_c_input: LawCInput,
    /// Per-law gains used when a sweep switches laws.
    #[serde(default, skip_serializing_if = "std::collections::BTreeMap::is_empty")]
    pub gamma_by_law: std::collections::BTreeMap<Law, Vec<T>>,
}

fn default_true() -> bool {
    true
}

impl<T: Real> ControlConfig<T> {
    pub fn validate(&self, n: usize) -> Result<()> {
        check_gains("control.gamma", &self.gamma, n)?;
        for (law, g) in &self.gamma_by_law {
            check_gains(&format!("control.gamma_by_law.{law:?}"), g, n)?;
        }
        Ok(())
    }

    /// Switches to `law`, taking its gains from `gamma_by_law` when present.
    pub fn with_law(&self, law: Law) -> Self {
        let mut out = self.clone();
        out.law = law;
        if let Some(g) = self.gamma_by_law.get(&law) {
            out.gamma = g.clone();
        }
        out
    }
}

fn check_gains<T: Real>(field: &str, g: &[T], n: usize) -> Result<()> {
    if g.len() != n {
        return Err(Error::config(field, format!("expected {n} gains, got {}", g.len())));
    }
    if let Some(k) = g.iter().position(|&v| !(v > T::zero())) {
        return Err(Error::config(format!("{field}[{k}]"), "gains must be > 0"));
    }
    Ok(())
}

/// Local view of agent `i`: its mode-shape weights at the anchor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentView<T> {
    pub index: usize,
    /// Diagonal of `Phi_i = diag(f, f, phi, phi)` at the anchor.
    pub phi: [T; 4],
}

impl<T: Real> AgentView<T> {
    pub fn new(index: usize, feather: &FeatherSpec<T>, modes: &ModeShapes<T>) -> Self {
        let z = feather.z_anchor();
        let (f, p) = (modes.f(z), modes.phi(z));
        Self { index, phi: [f, f, p, p] }
    }

    /// Local deviation `w_i = Phi_i x`.
    pub fn local_deviation(&self, x: &[T; 4]) -> [T; 4] {
        [self.phi[0] * x[0], self.phi[1] * x[1], self.phi[2] * x[2], self.phi[3] * x[3]]
    }
}

pub fn agent_views<T: Real>(feathers: &[FeatherSpec<T>], modes: &ModeShapes<T>) -> Vec<AgentView<T>> {
    feathers.iter().enumerate().map(|(i, f)| AgentView::new(i, f, modes)).collect()
}

/// Constant-coefficient law `u_i = -gamma_i (mu_i x1 + nu_i x3)`.
pub fn law_a<T: Real>(x: &[T; 4], ss: &StateSpace<T>, gamma: &[T]) -> Vec<T> {
    (0..ss.n_feathers())
        .map(|i| -gamma[i] * (ss.mu[i] * x[0] + ss.nu[i] * x[2]))
        .collect()
}

/// Network law `u_p = -gamma_p (chi s1_p x1 + lambda s2_p x3)`.
pub fn law_b<T: Real>(x: &[T; 4], ss: &StateSpace<T>, gamma: &[T], gp: &GoalParams<T>) -> Vec<T> {
    (0..ss.n_feathers())
        .map(|p| -gamma[p] * (gp.chi * ss.s1[p] * x[0] + gp.lambda * ss.s2[p] * x[2]))
        .collect()
}

/// Law C for a single agent; depends on the modal state, its own angle and
/// its neighbours' angles only.
#[allow(clippy::too_many_arguments)]
pub fn law_c_agent<T: Real>(
    p: usize,
    x: &[T; 4],
    beta: &[T],
    topo: &Topology<T>,
    ss: &StateSpace<T>,
    gamma_p: T,
    gp: &GoalParams<T>,
    input: LawCInput,
) -> T {
    let (a, b) = match input {
        LawCInput::Rates => (x[1], x[3]),
        LawCInput::Positions => (x[0], x[2]),
    };
    -gamma_p * (gp.chi * ss.s1[p] * a + gp.lambda * ss.s2[p] * b)
        - T::lit(2.0) * gamma_p * topo.consensus_term(p, beta)
}

pub fn law_c<T: Real>(
    x: &[T; 4],
    beta: &[T],
    topo: &Topology<T>,
    ss: &StateSpace<T>,
    gamma: &[T],
    gp: &GoalParams<T>,
    input: LawCInput,
) -> Result<Vec<T>> {
    check_agents(beta, topo, ss)?;
    Ok((0..ss.n_feathers())
        .map(|p| law_c_agent(p, x, beta, topo, ss, gamma[p], gp, input))
        .collect())
}

/// Law C with agents evaluated concurrently; identical to [`law_c`].
pub fn law_c_parallel<T: Real>(
    x: &[T; 4],
    beta: &[T],
    topo: &Topology<T>,
    ss: &StateSpace<T>,
    gamma: &[T],
    gp: &GoalParams<T>,
    input: LawCInput,
) -> Result<Vec<T>> {
    check_agents(beta, topo, ss)?;
    Ok((0..ss.n_feathers())
        .into_par_iter()
        .map(|p| law_c_agent(p, x, beta, topo, ss, gamma[p], gp, input))
        .collect())
}

fn check_agents<T: Real>(beta: &[T], topo: &Topology<T>, ss: &StateSpace<T>) -> Result<()> {
    let n = ss.n_feathers();
    if beta.len() != n || topo.n() != n {
        return Err(Error::Dimension(format!(
            "plant has {n} feathers, beta {}, topology {}",
            beta.len(),
            topo.n()
        )));
    }
    Ok(())
}

/// Gradient in `u` of the extended functional's time derivative:
/// `g_p = chi s1_p x2 + lambda s2_p x4 + 2 sum_j b_pj (beta_p - beta_j)`.
pub fn sg_gradient<T: Real>(
    x: &[T; 4],
    beta: &[T],
    topo: &Topology<T>,
    ss: &StateSpace<T>,
    gp: &GoalParams<T>,
) -> Vec<T> {
    (0..ss.n_feathers())
        .map(|p| {
            gp.chi * ss.s1[p] * x[1]
                + gp.lambda * ss.s2[p] * x[3]
                + T::lit(2.0) * topo.consensus_term(p, beta)
        })
        .collect()
}

/// Zeroes rates that would push a feather sitting on a bound out of its box.
pub fn saturate<T: Real>(beta: &[T], u: &[T], feathers: &[FeatherSpec<T>]) -> Vec<T> {
    u.iter()
        .zip(beta)
        .zip(feathers)
        .map(|((&ui, &bi), f)| {
            if (bi >= f.beta_max && ui > T::zero()) || (bi <= f.beta_min && ui < T::zero()) {
                T::zero()
            } else {
                ui
            }
        })
        .collect()
}

/// Everything needed to evaluate the active law at one airspeed.
#[derive(Debug, Clone, Copy)]
pub struct Controller<'a, T> {
    pub config: &'a ControlConfig<T>,
    pub topology: &'a Topology<T>,
    pub goals: &'a GoalParams<T>,
}

impl<T: Real> Controller<'_, T> {
    /// Unsaturated control for state `(x, beta)`.
    pub fn control(&self, ss: &StateSpace<T>, x: &[T; 4], beta: &[T]) -> Vec<T> {
        let g = &self.config.gamma;
        match self.config.law {
            Law::A => law_a(x, ss, g),
            Law::B => law_b(x, ss, g, self.goals),
            Law::C => (0..ss.n_feathers())
                .map(|p| law_c_agent(p, x, beta, self.topology, ss, g[p], self.goals, self.config.law_c_input))
                .collect(),
            Law::Off => vec![T::zero(); ss.n_feathers()],
        }
    }

    /// Linear closed loop on `(x, beta)`: every law is linear, so the gain
    /// blocks are read off by applying it to unit vectors.
    pub fn closed_loop_matrix(&self, ss: &StateSpace<T>) -> DMatrix<T> {
        let n = ss.n_feathers();
        let dim = 4 + n;
        let mut k = DMatrix::zeros(n, dim);
        for c in 0..dim {
            let mut x = [T::zero(); 4];
            let mut beta = vec![T::zero(); n];
            if c < 4 {
                x[c] = T::one();
            } else {
                beta[c - 4] = T::one();
            }
            for (r, v) in self.control(ss, &x, &beta).into_iter().enumerate() {
                k[(r, c)] = v;
            }
        }
        let mut m = DMatrix::zeros(dim, dim);
        let a = ss.plant_matrix();
        for i in 0..4 {
            for j in 0..4 {
                m[(i, j)] = a[(i, j)];
            }
        }
        for p in 0..n {
            m[(1, 4 + p)] = ss.r1[p];
            m[(3, 4 + p)] = ss.r2[p];
        }
        for c in 0..dim {
            let (mut f1, mut f2) = (T::zero(), T::zero());
            for p in 0..n {
                f1 += ss.s1[p] * k[(p, c)];
                f2 += ss.s2[p] * k[(p, c)];
                m[(4 + p, c)] = k[(p, c)];
            }
            m[(1, c)] += f1;
            m[(3, c)] += f2;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strip(id: usize, side: Surface, z: f64) -> FeatherSpec<f64> {
        let (lo, hi) = match side {
            Surface::Lower => (0.0, 0.2),
            Surface::Upper => (-0.2, 0.0),
        };
        FeatherSpec { id, side, z_lo: z, z_hi: z + 0.5, x_star: 0.0, x_k: 0.5, beta_min: lo, beta_max: hi }
    }

    #[test]
    fn complete_graph_weights() {
        let f: Vec<_> = (0..4).map(|i| strip(i, Surface::Lower, i as f64)).collect();
        let t = build_topology(&f, TopologyKind::Complete, 0).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let w = if i == j { 0.0 } else { 1.0 / 3.0 };
                assert_eq!(t.weight(i, j), w);
            }
        }
    }

    #[test]
    fn ring_weights() {
        let f: Vec<_> = (0..6).map(|i| strip(i, Surface::Lower, i as f64)).collect();
        let t = build_topology(&f, TopologyKind::Ring, 2).unwrap();
        assert_eq!(t.weight(0, 1), 0.5);
        assert_eq!(t.weight(0, 5), 0.5);
        assert_eq!(t.weight(0, 2), 0.0);
        assert!(build_topology(&f, TopologyKind::Ring, 3).is_err());
    }

    #[test]
    fn grid_is_balanced() {
        let mut f: Vec<_> = (0..4).map(|i| strip(i, Surface::Lower, i as f64)).collect();
        f.extend((0..4).map(|i| strip(4 + i, Surface::Upper, i as f64)));
        let t = build_topology(&f, TopologyKind::Grid, 2).unwrap();
        for i in 0..8 {
            let s: f64 = t.weights().row(i).sum();
            assert!((s - 1.0).abs() < 1e-9);
            for j in 0..8 {
                assert_eq!(t.weight(i, j), t.weight(j, i));
            }
        }
    }

    #[test]
    fn unbalanceable_path_fails() {
        // A three-node path has no doubly stochastic scaling.
        let adj = vec![vec![false, true, false], vec![true, false, true], vec![false, true, false]];
        assert!(matches!(sinkhorn_balance::<f64>(&adj), Err(Error::Topology(_))));
    }

    #[test]
    fn saturation_projection() {
        let f = vec![strip(0, Surface::Lower, 0.0), strip(1, Surface::Upper, 0.0)];
        assert_eq!(saturate(&[0.2, -0.1], &[1.0, 1.0], &f), vec![0.0, 1.0]);
        assert_eq!(saturate(&[0.0, 0.0], &[-1.0, 1.0], &f), vec![0.0, 0.0]);
        assert_eq!(saturate(&[0.1, -0.1], &[-3.0, 3.0], &f), vec![-3.0, 3.0]);
    }
}

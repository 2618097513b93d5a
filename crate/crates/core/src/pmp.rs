//! The Lagrange problem on a time scale and its first-order necessary
//! conditions.
//!
//! For `J = int_a^b L(t, x, u) Δt` subject to `x^Δ = φ(t, x, u)`,
//! `x(a) = x_a`, a weak local minimizer admits a multiplier `ψ` with
//!
//! ```text
//! x^Δ(t) =  H_{ψ^σ}           (state equation)
//! ψ^Δ(t) = -H_x               (costate equation)
//!    0   =  H_u               (stationarity)
//!  ψ(b)  =  0                 (transversality)
//! ```
//!
//! on `T^k`, where `H(t, x, u, ψ^σ) = L + ψ^σ · φ`. This module checks those
//! conditions for arbitrary models and solves them exactly for the
//! linear-quadratic case.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{is_symmetric, min_eigenvalue, BandedSystem};
use crate::timescale::{delta_derivative, GridFunction, TimeScale};

/// Cost density, dynamics and their exact partial derivatives.
///
/// Implementations must be reentrant. Derivative shapes: `L_x` is `n`,
/// `L_u` is `m`, `φ_x` is `n x n`, `φ_u` is `n x m`.
pub trait ControlModel {
    fn state_dim(&self) -> usize;
    fn control_dim(&self) -> usize;
    fn lagrangian(&self, t: f64, x: &DVector<f64>, u: &DVector<f64>) -> f64;
    fn dynamics(&self, t: f64, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;
    fn lagrangian_x(&self, t: f64, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;
    fn lagrangian_u(&self, t: f64, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;
    fn dynamics_x(&self, t: f64, x: &DVector<f64>, u: &DVector<f64>) -> DMatrix<f64>;
    fn dynamics_u(&self, t: f64, x: &DVector<f64>, u: &DVector<f64>) -> DMatrix<f64>;
}

/// `L = ½(xᵀQx + uᵀRu)`, `φ = Ax + Bu`.
#[derive(Debug, Clone)]
pub struct LqModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

impl ControlModel for LqModel {
    fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    fn control_dim(&self) -> usize {
        self.b.ncols()
    }

    fn lagrangian(&self, _t: f64, x: &DVector<f64>, u: &DVector<f64>) -> f64 {
        0.5 * (x.dot(&(&self.q * x)) + u.dot(&(&self.r * u)))
    }

    fn dynamics(&self, _t: f64, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u
    }

    fn lagrangian_x(&self, _t: f64, x: &DVector<f64>, _u: &DVector<f64>) -> DVector<f64> {
        // symmetric part, so non-symmetric Q still gives the true gradient
        (&self.q + self.q.transpose()) * x * 0.5
    }

    fn lagrangian_u(&self, _t: f64, _x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        (&self.r + self.r.transpose()) * u * 0.5
    }

    fn dynamics_x(&self, _t: f64, _x: &DVector<f64>, _u: &DVector<f64>) -> DMatrix<f64> {
        self.a.clone()
    }

    fn dynamics_u(&self, _t: f64, _x: &DVector<f64>, _u: &DVector<f64>) -> DMatrix<f64> {
        self.b.clone()
    }
}

#[derive(Debug, Clone)]
pub struct LagrangeProblem<M> {
    scale: Arc<TimeScale>,
    initial_state: DVector<f64>,
    model: M,
}

impl<M: ControlModel> LagrangeProblem<M> {
    pub fn new(scale: Arc<TimeScale>, initial_state: DVector<f64>, model: M) -> Result<Self> {
        let n = model.state_dim();
        let m = model.control_dim();
        if m > n {
            return Err(Error::invalid(
                "control_dim",
                format!("m = {m} exceeds state dimension n = {n}"),
            ));
        }
        if initial_state.len() != n {
            return Err(Error::shape(format!(
                "x_a has length {}, expected {n}",
                initial_state.len()
            )));
        }
        if scale.len() < 2 {
            return Err(Error::InvalidScale("need a < b".into()));
        }
        Ok(Self {
            scale,
            initial_state,
            model,
        })
    }

    pub fn scale(&self) -> &Arc<TimeScale> {
        &self.scale
    }

    pub fn initial_state(&self) -> &DVector<f64> {
        &self.initial_state
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    fn check_point(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<()> {
        let n = self.model.state_dim();
        let m = self.model.control_dim();
        if x.len() != n || u.len() != m {
            return Err(Error::shape(format!(
                "expected x in R^{n}, u in R^{m}; got {} and {}",
                x.len(),
                u.len()
            )));
        }
        Ok(())
    }
}

/// `H(t, x, u, ψ^σ) = L(t, x, u) + ψ^σ · φ(t, x, u)`.
pub fn hamiltonian<M: ControlModel>(
    prob: &LagrangeProblem<M>,
    t: f64,
    x: &DVector<f64>,
    u: &DVector<f64>,
    psi_sigma: &DVector<f64>,
) -> Result<f64> {
    prob.check_point(x, u)?;
    if psi_sigma.len() != x.len() {
        return Err(Error::shape("ψ^σ must have the state dimension"));
    }
    let m = prob.model();
    Ok(m.lagrangian(t, x, u) + psi_sigma.dot(&m.dynamics(t, x, u)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PmpCandidate {
    /// State on the full scale.
    pub x: GridFunction,
    /// Controls on the full scale; the value at `b` is not used.
    pub u: GridFunction,
    /// Multiplier on the full scale.
    pub psi: GridFunction,
}

impl PmpCandidate {
    fn check(&self, scale: &TimeScale, n: usize, m: usize) -> Result<()> {
        for (name, g, rows) in [("x", &self.x, n), ("u", &self.u, m), ("psi", &self.psi, n)] {
            if g.scale().points() != scale.points() {
                return Err(Error::ScaleMismatch);
            }
            if g.shape() != (rows, 1) {
                return Err(Error::shape(format!(
                    "{name} has shape {:?}, expected ({rows}, 1)",
                    g.shape()
                )));
            }
        }
        Ok(())
    }
}

/// Per-instant residual norms on `T^k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstantResidual {
    pub t: f64,
    pub state: f64,
    pub costate: f64,
    pub stationarity: f64,
}

/// Maximum residual norms of the necessary conditions.
///
/// `state_eq` includes `||x(a) - x_a||`. `consistency` is only non-zero for
/// feedback checks, where it measures `||u - (F x + g)||`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub state_eq: f64,
    pub costate_eq: f64,
    pub stationarity: f64,
    pub transversality: f64,
    pub consistency: f64,
    pub overall: f64,
    #[serde(skip)]
    pub per_instant: Vec<InstantResidual>,
}

impl ResidualReport {
    pub fn from_parts(
        initial: f64,
        transversality: f64,
        consistency: f64,
        per_instant: Vec<InstantResidual>,
    ) -> Self {
        let fold = |f: fn(&InstantResidual) -> f64| per_instant.iter().map(f).fold(0.0, f64::max);
        let state_eq = fold(|r| r.state).max(initial);
        let costate_eq = fold(|r| r.costate);
        let stationarity = fold(|r| r.stationarity);
        let overall = state_eq
            .max(costate_eq)
            .max(stationarity)
            .max(transversality)
            .max(consistency);
        Self {
            state_eq,
            costate_eq,
            stationarity,
            transversality,
            consistency,
            overall,
            per_instant,
        }
    }
}

/// Residuals of the necessary conditions for `cand`, maximised over `T^k`.
pub fn pmp_residuals<M: ControlModel>(
    prob: &LagrangeProblem<M>,
    cand: &PmpCandidate,
) -> Result<ResidualReport> {
    let ts = prob.scale();
    let model = prob.model();
    cand.check(ts, model.state_dim(), model.control_dim())?;
    let xd = delta_derivative(&cand.x)?;
    let pd = delta_derivative(&cand.psi)?;
    let mut rows = Vec::with_capacity(ts.steps());
    for k in 0..ts.steps() {
        let t = ts.point(k);
        let x = cand.x.vector(k);
        let u = cand.u.vector(k);
        let ps = cand.psi.vector(k + 1);
        let state = (xd.vector(k) - model.dynamics(t, &x, &u)).norm();
        let costate = (pd.vector(k)
            + model.lagrangian_x(t, &x, &u)
            + model.dynamics_x(t, &x, &u).transpose() * &ps)
            .norm();
        let stationarity =
            (model.lagrangian_u(t, &x, &u) + model.dynamics_u(t, &x, &u).transpose() * &ps).norm();
        rows.push(InstantResidual {
            t,
            state,
            costate,
            stationarity,
        });
    }
    let initial = (cand.x.vector(0) - prob.initial_state()).norm();
    let transversality = cand.psi.vector(ts.steps()).norm();
    Ok(ResidualReport::from_parts(
        initial,
        transversality,
        0.0,
        rows,
    ))
}

/// `J = int_a^b L Δt` along a candidate.
pub fn lagrange_cost<M: ControlModel>(prob: &LagrangeProblem<M>, cand: &PmpCandidate) -> f64 {
    let ts = prob.scale();
    (0..ts.steps())
        .map(|k| {
            ts.mu(k)
                * prob
                    .model()
                    .lagrangian(ts.point(k), &cand.x.vector(k), &cand.u.vector(k))
        })
        .sum()
}

pub(crate) fn validate_weights(
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    n: usize,
    m: usize,
    q_name: &str,
    r_name: &str,
) -> Result<()> {
    if q.shape() != (n, n) {
        return Err(Error::invalid(
            q_name,
            format!("expected {n}x{n}, got {:?}", q.shape()),
        ));
    }
    if r.shape() != (m, m) {
        return Err(Error::invalid(
            r_name,
            format!("expected {m}x{m}, got {:?}", r.shape()),
        ));
    }
    if !is_symmetric(q) {
        return Err(Error::invalid(q_name, "not symmetric"));
    }
    if min_eigenvalue(q) < -1e-12 {
        return Err(Error::invalid(q_name, "not positive semidefinite"));
    }
    if !is_symmetric(r) {
        return Err(Error::invalid(r_name, "not symmetric"));
    }
    if !(min_eigenvalue(r) > 1e-12) {
        return Err(Error::invalid(r_name, "not positive definite"));
    }
    Ok(())
}

/// Solves the necessary conditions for `L = ½(xᵀQx + uᵀRu)`, `φ = Ax + Bu`
/// as one square linear system.
///
/// Per step `k` (`μ_k` the graininess, `ψ_M = 0`):
///
/// ```text
/// x_{k+1} - x_k - μ_k (A x_k + B u_k)           = 0
/// ψ_k - ψ_{k+1} - μ_k (Q x_k + Aᵀ ψ_{k+1})      = 0
/// R u_k + Bᵀ ψ_{k+1}                            = 0
/// ```
///
/// Unknowns are ordered per step as `[x_{k+1}, ψ_k, u_k]`, which keeps the
/// matrix banded.
pub fn solve_lq_single(
    scale: Arc<TimeScale>,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    q: &DMatrix<f64>,
    r: &DMatrix<f64>,
    x_a: &DVector<f64>,
) -> Result<PmpCandidate> {
    let n = a.nrows();
    if !a.is_square() {
        return Err(Error::invalid("A", "not square"));
    }
    if b.nrows() != n {
        return Err(Error::invalid(
            "B",
            format!("expected {n} rows, got {}", b.nrows()),
        ));
    }
    if x_a.len() != n {
        return Err(Error::invalid("x_a", format!("expected length {n}")));
    }
    let m = b.ncols();
    validate_weights(q, r, n, m, "Q", "R")?;
    let steps = scale.steps();
    if steps == 0 {
        return Err(Error::InvalidScale("need a < b".into()));
    }

    let block = 2 * n + m;
    let xi = |k: usize| (k - 1) * block; // x_k, k >= 1
    let pi = |k: usize| k * block + n; // ψ_k, k < M
    let ui = |k: usize| k * block + 2 * n; // u_k
    let mut sys = BandedSystem::new(steps * block, 2 * block, 2 * block);

    for k in 0..steps {
        let mu = scale.mu(k);
        let row0 = k * block;
        // state equation
        for i in 0..n {
            let row = row0 + i;
            sys.add(row, xi(k + 1) + i, 1.0);
            if k == 0 {
                let ax0 = (a * x_a)[i];
                sys.add_rhs(row, x_a[i] + mu * ax0);
            } else {
                sys.add(row, xi(k) + i, -1.0);
                for j in 0..n {
                    sys.add(row, xi(k) + j, -mu * a[(i, j)]);
                }
            }
            for j in 0..m {
                sys.add(row, ui(k) + j, -mu * b[(i, j)]);
            }
        }
        // costate equation
        for i in 0..n {
            let row = row0 + n + i;
            sys.add(row, pi(k) + i, 1.0);
            if k + 1 < steps {
                sys.add(row, pi(k + 1) + i, -1.0);
                for j in 0..n {
                    sys.add(row, pi(k + 1) + j, -mu * a[(j, i)]);
                }
            }
            if k == 0 {
                sys.add_rhs(row, mu * (q * x_a)[i]);
            } else {
                for j in 0..n {
                    sys.add(row, xi(k) + j, -mu * q[(i, j)]);
                }
            }
        }
        // stationarity
        for i in 0..m {
            let row = row0 + 2 * n + i;
            for j in 0..m {
                sys.add(row, ui(k) + j, r[(i, j)]);
            }
            if k + 1 < steps {
                for j in 0..n {
                    sys.add(row, pi(k + 1) + j, b[(j, i)]);
                }
            }
        }
    }

    let z = sys.solve().map_err(|p| Error::Degenerate {
        context: "single-player necessary-condition system".into(),
        instant: scale.point(p.0 / block),
    })?;

    let mut xs = vec![x_a.clone()];
    let mut ps = Vec::with_capacity(steps + 1);
    let mut us = Vec::with_capacity(steps + 1);
    for k in 0..steps {
        xs.push(z.rows(xi(k + 1), n).into_owned());
        ps.push(z.rows(pi(k), n).into_owned());
        us.push(z.rows(ui(k), m).into_owned());
    }
    ps.push(DVector::zeros(n));
    us.push(DVector::zeros(m));
    Ok(PmpCandidate {
        x: GridFunction::from_vectors(scale.clone(), xs)?,
        u: GridFunction::from_vectors(scale.clone(), us)?,
        psi: GridFunction::from_vectors(scale, ps)?,
    })
}

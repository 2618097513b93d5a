//! Brute-force checks that never touch the costate machinery.
//!
//! The state is eliminated through the variation-of-constants formula,
//! `x(t_k) = e_A(t_k, a) x_a + Σ_{l<k} e_A(t_k, t_{l+1}) μ_l Σ_j B^j u^j_l`,
//! which makes each `J^i` an explicit quadratic `½ Uᵀ H^i U + g^iᵀ U + c^i`
//! in the stacked controls `U`. Best responses, Nash stationarity and the
//! resulting costs all come from these quadratics.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::games::{ControlProfile, LinearGameSpec};
use crate::linalg::dense_solve;
use crate::linsys::matrix_exponential_between;
use crate::timescale::GridFunction;

/// The quadratic cost forms of every player over stacked controls.
///
/// `U` is ordered player-major, then by step on `T^k`, then by component.
#[derive(Debug, Clone)]
pub struct QuadraticCosts {
    offsets: Vec<usize>,
    dims: Vec<usize>,
    steps: usize,
    hessians: Vec<DMatrix<f64>>,
    linear: Vec<DVector<f64>>,
    constants: Vec<f64>,
}

impl QuadraticCosts {
    pub fn new(game: &LinearGameSpec) -> Result<Self> {
        let ts = game.scale();
        let steps = ts.steps();
        let n = game.state_dim();
        let players = game.players();
        let dims: Vec<usize> = (0..players).map(|i| game.control_dim(i)).collect();
        let mut offsets = Vec::with_capacity(players);
        let mut total = 0;
        for &m in &dims {
            offsets.push(total);
            total += steps * m;
        }
        let x_a = game.initial_state();

        // x_k = free[k] + forced[k] * U
        let mut free = Vec::with_capacity(steps);
        let mut forced = Vec::with_capacity(steps);
        for k in 0..steps {
            let tk = ts.point(k);
            free.push(matrix_exponential_between(ts, game.a(), tk, ts.min())? * x_a);
            let mut t = DMatrix::zeros(n, total);
            for l in 0..k {
                let e = matrix_exponential_between(ts, game.a(), tk, ts.point(l + 1))? * ts.mu(l);
                for j in 0..players {
                    let blk = &e * game.b(j);
                    let c0 = offsets[j] + l * dims[j];
                    t.view_mut((0, c0), (n, dims[j])).copy_from(&blk);
                }
            }
            forced.push(t);
        }

        let mut hessians = Vec::with_capacity(players);
        let mut linear = Vec::with_capacity(players);
        let mut constants = Vec::with_capacity(players);
        for i in 0..players {
            let q = game.q(i);
            let mut h = DMatrix::zeros(total, total);
            let mut g = DVector::zeros(total);
            let mut c = 0.0;
            for k in 0..steps {
                let mu = ts.mu(k);
                let qt = q * &forced[k];
                h += forced[k].transpose() * &qt * mu;
                g += forced[k].transpose() * (q * &free[k]) * mu;
                c += 0.5 * mu * free[k].dot(&(q * &free[k]));
                for j in 0..players {
                    let o = offsets[j] + k * dims[j];
                    let mut v = h.view_mut((o, o), (dims[j], dims[j]));
                    v += game.r(i, j) * mu;
                }
            }
            hessians.push(h);
            linear.push(g);
            constants.push(c);
        }
        Ok(Self {
            offsets,
            dims,
            steps,
            hessians,
            linear,
            constants,
        })
    }

    pub fn dim(&self) -> usize {
        self.linear.first().map_or(0, |g| g.len())
    }

    fn block(&self, i: usize) -> (usize, usize) {
        (self.offsets[i], self.steps * self.dims[i])
    }

    pub fn stack(&self, profile: &ControlProfile) -> DVector<f64> {
        let mut u = DVector::zeros(self.dim());
        for (i, g) in profile.0.iter().enumerate() {
            for k in 0..self.steps {
                let o = self.offsets[i] + k * self.dims[i];
                u.rows_mut(o, self.dims[i]).copy_from(&g.vector(k));
            }
        }
        u
    }

    pub fn unstack(&self, game: &LinearGameSpec, u: &DVector<f64>) -> Result<ControlProfile> {
        let ts = game.scale();
        let mut out = Vec::with_capacity(self.dims.len());
        for i in 0..self.dims.len() {
            let m = self.dims[i];
            let vals = (0..ts.len())
                .map(|k| {
                    if k < self.steps {
                        u.rows(self.offsets[i] + k * m, m).into_owned()
                    } else {
                        DVector::zeros(m)
                    }
                })
                .collect();
            out.push(GridFunction::from_vectors(ts.clone(), vals)?);
        }
        Ok(ControlProfile(out))
    }

    pub fn cost(&self, i: usize, u: &DVector<f64>) -> f64 {
        0.5 * u.dot(&(&self.hessians[i] * u)) + self.linear[i].dot(u) + self.constants[i]
    }

    pub fn gradient(&self, i: usize, u: &DVector<f64>) -> DVector<f64> {
        &self.hessians[i] * u + &self.linear[i]
    }

    pub fn hessian(&self, i: usize) -> &DMatrix<f64> {
        &self.hessians[i]
    }

    /// Minimiser of `J^i` over player `i`'s block with the rest of `u` fixed.
    fn best_block(&self, i: usize, u: &DVector<f64>) -> Result<DVector<f64>> {
        let (o, len) = self.block(i);
        let h = &self.hessians[i];
        let hii = h.view((o, o), (len, len)).into_owned();
        let mut rhs = -self.linear[i].rows(o, len).into_owned();
        for (p, &po) in self.offsets.iter().enumerate() {
            if p == i {
                continue;
            }
            let plen = self.steps * self.dims[p];
            rhs -= h.view((o, po), (len, plen)) * u.rows(po, plen);
        }
        let chol = hii.cholesky().ok_or(Error::NonConvex { player: i })?;
        Ok(chol.solve(&rhs))
    }
}

#[derive(Debug, Clone)]
pub struct BestResponse {
    pub control: GridFunction,
    pub cost: f64,
}

/// Player `i`'s exact best response to the other players' controls in
/// `others` (player `i`'s own entry is ignored).
pub fn best_response(
    game: &LinearGameSpec,
    i: usize,
    others: &ControlProfile,
) -> Result<BestResponse> {
    others.check(game)?;
    let qc = QuadraticCosts::new(game)?;
    let mut u = qc.stack(others);
    let ui = qc.best_block(i, &u)?;
    let (o, len) = qc.block(i);
    u.rows_mut(o, len).copy_from(&ui);
    let profile = qc.unstack(game, &u)?;
    Ok(BestResponse {
        control: profile.player(i).clone(),
        cost: qc.cost(i, &u),
    })
}

/// `J^i(profile) - J^i(best response of i to profile)` for every player.
pub fn best_response_gaps(game: &LinearGameSpec, profile: &ControlProfile) -> Result<Vec<f64>> {
    profile.check(game)?;
    let qc = QuadraticCosts::new(game)?;
    let u = qc.stack(profile);
    (0..game.players())
        .map(|i| {
            let mut v = u.clone();
            let (o, len) = qc.block(i);
            let ui = qc.best_block(i, &u)?;
            v.rows_mut(o, len).copy_from(&ui);
            Ok(qc.cost(i, &u) - qc.cost(i, &v))
        })
        .collect()
}

/// Solves `∇_{u^i} J^i = 0` for all players at once.
pub fn stacked_nash_oracle(game: &LinearGameSpec) -> Result<ControlProfile> {
    let qc = QuadraticCosts::new(game)?;
    let d = qc.dim();
    let mut lhs = DMatrix::zeros(d, d);
    let mut rhs = DMatrix::zeros(d, 1);
    for i in 0..game.players() {
        let (o, len) = qc.block(i);
        lhs.view_mut((o, 0), (len, d))
            .copy_from(&qc.hessians[i].view((o, 0), (len, d)));
        rhs.view_mut((o, 0), (len, 1))
            .copy_from(&(-qc.linear[i].rows(o, len)));
    }
    let u = dense_solve(&lhs, &rhs).ok_or_else(|| Error::Degenerate {
        context: "stacked Nash stationarity system".into(),
        instant: game.scale().min(),
    })?;
    qc.unstack(game, &u.column(0).into_owned())
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub method: String,
    #[serde(skip)]
    pub controls: ControlProfile,
    pub gaps: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Gauss-Seidel sweeps of exact best responses until the largest control
/// change in a sweep is at most `tol`. Divergence is reported, not raised.
pub fn best_response_iteration(
    game: &LinearGameSpec,
    init: &ControlProfile,
    max_iter: usize,
    tol: f64,
) -> Result<OracleReport> {
    init.check(game)?;
    let qc = QuadraticCosts::new(game)?;
    let mut u = qc.stack(init);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let mut change: f64 = 0.0;
        for i in 0..game.players() {
            let ui = qc.best_block(i, &u)?;
            let (o, len) = qc.block(i);
            change = change.max((&ui - u.rows(o, len)).amax());
            u.rows_mut(o, len).copy_from(&ui);
        }
        if !change.is_finite() || !u.iter().all(|v| v.is_finite()) {
            break;
        }
        if change <= tol {
            converged = true;
            break;
        }
    }
    let controls = qc.unstack(game, &u)?;
    let gaps = if u.iter().all(|v| v.is_finite()) {
        (0..game.players())
            .map(|i| {
                let mut v = u.clone();
                let (o, len) = qc.block(i);
                v.rows_mut(o, len).copy_from(&qc.best_block(i, &u)?);
                Ok(qc.cost(i, &u) - qc.cost(i, &v))
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        vec![f64::NAN; game.players()]
    };
    Ok(OracleReport {
        method: "best_response_iteration".into(),
        controls,
        gaps,
        iterations,
        converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Reference {
    Known(f64),
    /// First-order Richardson extrapolation `2 J(M) - J(M/2)` at this `M`.
    Richardson(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub steps: usize,
    pub value: f64,
    pub error: f64,
    /// `error(previous row) / error(this row)`.
    pub ratio: Option<f64>,
    /// `log(ratio) / log(M / M_previous)`.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub reference: f64,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// True when every computed ratio lies in `[lo, hi]`; vacuous with a
    /// single row.
    pub fn ratios_within(&self, lo: f64, hi: f64) -> bool {
        self.rows
            .iter()
            .filter_map(|r| r.ratio)
            .all(|q| (lo..=hi).contains(&q))
    }
}

/// Runs `solve(M)` for each `M` in `levels` (concurrently) and tabulates
/// errors against `reference`.
pub fn convergence_study<F>(
    levels: &[usize],
    reference: Reference,
    solve: F,
) -> Result<ConvergenceTable>
where
    F: Fn(usize) -> Result<f64> + Sync,
{
    let solve = &solve;
    let values: Vec<Result<f64>> = std::thread::scope(|s| {
        let handles: Vec<_> = levels.iter().map(|&m| s.spawn(move || solve(m))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("convergence worker panicked"))
            .collect()
    });
    let values = values.into_iter().collect::<Result<Vec<_>>>()?;
    let reference = match reference {
        Reference::Known(v) => v,
        Reference::Richardson(m) => {
            if m < 2 {
                return Err(Error::invalid(
                    "reference",
                    "Richardson level must be at least 2",
                ));
            }
            2.0 * solve(m)? - solve(m / 2)?
        }
    };
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels.len());
    for (&m, &value) in levels.iter().zip(&values) {
        let error = (value - reference).abs();
        let (ratio, order) = match rows.last() {
            Some(prev) => {
                let q = prev.error / error;
                (Some(q), Some(q.ln() / (m as f64 / prev.steps as f64).ln()))
            }
            None => (None, None),
        };
        rows.push(ConvergenceRow {
            steps: m,
            value,
            error,
            ratio,
            order,
        });
    }
    Ok(ConvergenceTable { reference, rows })
}

/// `½ tanh(1)`: optimal cost of `x' = u`, `x(0) = 1`, `J = ½∫_0^1 (x² + u²)`,
/// from the Riccati solution `P(t) = tanh(1 - t)`.
pub fn scalar_lqr_reference() -> f64 {
    0.5 * 1.0_f64.tanh()
}

/// Uniform sampling of `[a, b]` with `steps` steps, shared across studies.
pub fn uniform_scale(a: f64, b: f64, steps: usize) -> Result<Arc<crate::timescale::TimeScale>> {
    Ok(Arc::new(crate::timescale::sample_interval(
        a,
        b,
        steps,
        crate::timescale::SamplingScheme::Uniform,
    )?))
}

//! Linear delta systems `x^Δ(t) = A x(t) + f(t)`, `x(a) = x_a`.
//!
//! Solutions are computed by the forward stepping rule
//! `x(σ(t)) = (I + mu(t) A) x(t) + mu(t) f(t)`, which always exists and is
//! unique. The variation-of-constants representation in
//! [`variation_of_constants`] is an independent route kept for verification.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::condition_number;
use crate::timescale::{GridFunction, TimeScale};

/// Step matrices with condition number above this are treated as singular.
pub const SINGULAR_CONDITION: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct LinearSystem {
    scale: Arc<TimeScale>,
    a: DMatrix<f64>,
    forcing: GridFunction,
    initial_time: f64,
    initial_state: DVector<f64>,
}

impl LinearSystem {
    pub fn new(
        a: DMatrix<f64>,
        forcing: GridFunction,
        initial_time: f64,
        initial_state: DVector<f64>,
    ) -> Result<Self> {
        let n = a.nrows();
        if !a.is_square() {
            return Err(Error::shape(format!(
                "A is {}x{}, not square",
                n,
                a.ncols()
            )));
        }
        if forcing.shape() != (n, 1) {
            return Err(Error::shape(format!(
                "forcing has shape {:?}, expected ({n}, 1)",
                forcing.shape()
            )));
        }
        if initial_state.len() != n {
            return Err(Error::shape(format!(
                "initial state has length {}, expected {n}",
                initial_state.len()
            )));
        }
        let scale = forcing.scale().clone();
        scale.index_of(initial_time)?;
        Ok(Self {
            scale,
            a,
            forcing,
            initial_time,
            initial_state,
        })
    }

    /// Homogeneous system (`f = 0`) on `scale`.
    pub fn homogeneous(
        scale: Arc<TimeScale>,
        a: DMatrix<f64>,
        initial_time: f64,
        initial_state: DVector<f64>,
    ) -> Result<Self> {
        let n = a.nrows();
        Self::new(
            a,
            GridFunction::zeros(scale, n, 1),
            initial_time,
            initial_state,
        )
    }

    pub fn scale(&self) -> &Arc<TimeScale> {
        &self.scale
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn forcing(&self) -> &GridFunction {
        &self.forcing
    }

    pub fn initial_time(&self) -> f64 {
        self.initial_time
    }

    pub fn initial_state(&self) -> &DVector<f64> {
        &self.initial_state
    }
}

fn step_matrix(a: &DMatrix<f64>, mu: f64) -> DMatrix<f64> {
    DMatrix::identity(a.nrows(), a.ncols()) + a * mu
}

/// `e_A(·, a)` on the sub-scale `{t >= a}`, by the forward recursion
/// `e_A(σ(t), a) = (I + mu(t) A) e_A(t, a)`.
pub fn matrix_exponential(ts: &TimeScale, a_mat: &DMatrix<f64>, a: f64) -> Result<GridFunction> {
    if !a_mat.is_square() {
        return Err(Error::shape("A must be square"));
    }
    let start = ts.index_of(a)?;
    let sub = Arc::new(ts.from_instant(a)?);
    let n = a_mat.nrows();
    let mut values = Vec::with_capacity(sub.len());
    let mut x = DMatrix::identity(n, n);
    values.push(x.clone());
    for i in start..ts.steps() {
        x = step_matrix(a_mat, ts.mu(i)) * x;
        values.push(x.clone());
    }
    GridFunction::new(sub, values)
}

/// `e_A(t, s)` for any pair of scale points. Backward evaluation (`t < s`)
/// inverts each step matrix and fails with [`Error::NonRegressive`] at the
/// first step whose condition number exceeds [`SINGULAR_CONDITION`].
pub fn matrix_exponential_between(
    ts: &TimeScale,
    a_mat: &DMatrix<f64>,
    t: f64,
    s: f64,
) -> Result<DMatrix<f64>> {
    if !a_mat.is_square() {
        return Err(Error::shape("A must be square"));
    }
    let it = ts.index_of(t)?;
    let is = ts.index_of(s)?;
    let n = a_mat.nrows();
    let mut x = DMatrix::identity(n, n);
    if it >= is {
        for i in is..it {
            x = step_matrix(a_mat, ts.mu(i)) * x;
        }
    } else {
        // e_A(t, s) = prod_{i = t..s-1} (I + mu_i A)^{-1}, rightmost factor at t
        for i in it..is {
            let step = step_matrix(a_mat, ts.mu(i));
            if condition_number(&step) > SINGULAR_CONDITION {
                return Err(Error::NonRegressive(ts.point(i)));
            }
            let inv = step
                .try_inverse()
                .ok_or_else(|| Error::NonRegressive(ts.point(i)))?;
            x *= inv;
        }
    }
    Ok(x)
}

/// Forward solution on `{t >= a}` by the stepping rule.
pub fn forward_solve(sys: &LinearSystem) -> Result<GridFunction> {
    let ts = sys.scale();
    let start = ts.index_of(sys.initial_time)?;
    let sub = Arc::new(ts.from_instant(sys.initial_time)?);
    let mut values = Vec::with_capacity(sub.len());
    let mut x = sys.initial_state.clone();
    values.push(x.clone());
    for i in start..ts.steps() {
        let mu = ts.mu(i);
        let drift = &sys.a * &x + sys.forcing.vector(i);
        x += drift * mu;
        values.push(x.clone());
    }
    GridFunction::from_vectors(sub, values)
}

/// `x(t) = e_A(t, a) x_a + sum_{a <= s < t} e_A(t, σ(s)) f(s) mu(s)`,
/// evaluated term by term with products of step matrices.
pub fn variation_of_constants(sys: &LinearSystem) -> Result<GridFunction> {
    let ts = sys.scale();
    let start = ts.index_of(sys.initial_time)?;
    let sub = Arc::new(ts.from_instant(sys.initial_time)?);
    let mut values = Vec::with_capacity(sub.len());
    for k in start..ts.len() {
        let t = ts.point(k);
        let mut x =
            matrix_exponential_between(ts, &sys.a, t, sys.initial_time)? * &sys.initial_state;
        for s in start..k {
            let e = matrix_exponential_between(ts, &sys.a, t, ts.point(s + 1))?;
            x += e * sys.forcing.vector(s) * ts.mu(s);
        }
        values.push(x);
    }
    GridFunction::from_vectors(sub, values)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressivityReport {
    pub regressive: bool,
    pub first_singular_instant: Option<f64>,
}

/// `A` is regressive on `ts` iff `I + mu(t) A` is invertible (condition
/// number at most [`SINGULAR_CONDITION`]) for every `t` in `T^k`.
pub fn regressivity_check(ts: &TimeScale, a_mat: &DMatrix<f64>) -> RegressivityReport {
    let first = (0..ts.steps())
        .find(|&i| condition_number(&step_matrix(a_mat, ts.mu(i))) > SINGULAR_CONDITION)
        .map(|i| ts.point(i));
    RegressivityReport {
        regressive: first.is_none(),
        first_singular_instant: first,
    }
}

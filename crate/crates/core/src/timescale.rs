//! Finite time scales and exact delta calculus on them.
//!
//! A [`TimeScale`] is a finite strictly increasing set of instants
//! `t_0 < t_1 < ... < t_M`. Every point except the maximum is right-scattered,
//! so the delta derivative at `t_i` is the forward difference quotient and the
//! delta integral over `[a, b)` is the weighted left-endpoint sum
//! `sum f(t_i) mu(t_i)`. Both are exact, not approximations.
//!
//! rd-continuity is vacuous on a finite scale (every point is isolated), so
//! it is never checked.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeScale {
    points: Vec<f64>,
}

impl TimeScale {
    /// Builds a scale from strictly increasing finite instants.
    ///
    /// A single point is accepted so that iterated truncations `T^{k^r}` stay
    /// representable; every calculus operation that needs a step checks for
    /// it.
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidScale("no points".into()));
        }
        if let Some(bad) = points.iter().find(|t| !t.is_finite()) {
            return Err(Error::InvalidScale(format!("non-finite instant {bad}")));
        }
        for (i, w) in points.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidScale(format!(
                    "points not strictly increasing at index {}: {} then {}",
                    i + 1,
                    w[0],
                    w[1]
                )));
            }
        }
        Ok(Self { points })
    }

    /// The scale `{0, 1, ..., m}`.
    pub fn integers(m: usize) -> Self {
        Self {
            points: (0..=m).map(|k| k as f64).collect(),
        }
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Number of points, `M + 1`.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Always false; a scale has at least one point.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of steps `M`.
    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }

    pub fn min(&self) -> f64 {
        self.points[0]
    }

    pub fn max(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    pub fn point(&self, i: usize) -> f64 {
        self.points[i]
    }

    /// Index of `t`, using exact equality with the stored instants.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        self.points
            .binary_search_by(|p| p.partial_cmp(&t).unwrap_or(std::cmp::Ordering::Less))
            .map_err(|_| Error::NotAMember(t))
    }

    pub fn contains(&self, t: f64) -> bool {
        self.index_of(t).is_ok()
    }

    pub fn sigma(&self, t: f64) -> Result<f64> {
        let i = self.index_of(t)?;
        Ok(self.points[(i + 1).min(self.steps())])
    }

    pub fn rho(&self, t: f64) -> Result<f64> {
        let i = self.index_of(t)?;
        Ok(self.points[i.saturating_sub(1)])
    }

    pub fn graininess(&self, t: f64) -> Result<f64> {
        Ok(self.mu(self.index_of(t)?))
    }

    /// Graininess at the `i`-th point; zero at the maximum.
    pub fn mu(&self, i: usize) -> f64 {
        if i < self.steps() {
            self.points[i + 1] - self.points[i]
        } else {
            0.0
        }
    }

    pub fn classify(&self, t: f64) -> Result<PointClass> {
        let s = self.sigma(t)?;
        let r = self.rho(t)?;
        Ok(PointClass {
            right_dense: s == t,
            right_scattered: s > t,
            left_dense: r == t,
            left_scattered: r < t,
        })
    }

    /// `T^k`: the scale without its maximum. The maximum of a finite scale
    /// with at least two points is always left-scattered.
    pub fn truncated(&self) -> Result<TimeScale> {
        if self.points.len() < 2 {
            return Err(Error::DomainExhausted {
                order: 1,
                needed: 2,
                points: self.points.len(),
            });
        }
        Ok(TimeScale {
            points: self.points[..self.points.len() - 1].to_vec(),
        })
    }

    /// The sub-scale `{t in T : t >= a}`.
    pub fn from_instant(&self, a: f64) -> Result<TimeScale> {
        let i = self.index_of(a)?;
        Ok(TimeScale {
            points: self.points[i..].to_vec(),
        })
    }
}

impl<'de> Deserialize<'de> for TimeScale {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            points: Vec<f64>,
        }
        let raw = Raw::deserialize(d)?;
        TimeScale::new(raw.points).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PointClass {
    pub right_dense: bool,
    pub right_scattered: bool,
    pub left_dense: bool,
    pub left_scattered: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingScheme {
    Uniform,
    /// Consecutive spacings grow by `ratio`; `ratio == 1` is uniform.
    Geometric {
        ratio: f64,
    },
}

/// Samples `[a, b]` with `steps + 1` points, `t_0 = a` and `t_M = b` exactly.
pub fn sample_interval(a: f64, b: f64, steps: usize, scheme: SamplingScheme) -> Result<TimeScale> {
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidInterval { a, b });
    }
    if steps == 0 {
        return Err(Error::InvalidScale("need at least one step".into()));
    }
    let len = b - a;
    let mut points = Vec::with_capacity(steps + 1);
    match scheme {
        SamplingScheme::Uniform => {
            for k in 0..steps {
                points.push(a + len * (k as f64) / (steps as f64));
            }
        }
        SamplingScheme::Geometric { ratio } => {
            if !(ratio > 0.0) || !ratio.is_finite() {
                return Err(Error::invalid("ratio", "geometric ratio must be positive"));
            }
            if ratio == 1.0 {
                return sample_interval(a, b, steps, SamplingScheme::Uniform);
            }
            let total: f64 = (0..steps).map(|k| ratio.powi(k as i32)).sum();
            let mut acc = 0.0;
            for k in 0..steps {
                points.push(a + len * acc / total);
                acc += ratio.powi(k as i32);
            }
        }
    }
    points.push(b);
    TimeScale::new(points)
}

/// A real matrix-valued (or vector-valued, when `cols == 1`) function sampled
/// at every point of a time scale.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    scale: Arc<TimeScale>,
    rows: usize,
    cols: usize,
    values: Vec<DMatrix<f64>>,
}

impl GridFunction {
    pub fn new(scale: Arc<TimeScale>, values: Vec<DMatrix<f64>>) -> Result<Self> {
        if values.len() != scale.len() {
            return Err(Error::shape(format!(
                "{} values for a scale with {} points",
                values.len(),
                scale.len()
            )));
        }
        let (rows, cols) = values[0].shape();
        if let Some(i) = values.iter().position(|v| v.shape() != (rows, cols)) {
            return Err(Error::shape(format!(
                "value {i} has shape {:?}, expected {:?}",
                values[i].shape(),
                (rows, cols)
            )));
        }
        Ok(Self {
            scale,
            rows,
            cols,
            values,
        })
    }

    pub fn from_fn(
        scale: Arc<TimeScale>,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, f64) -> DMatrix<f64>,
    ) -> Result<Self> {
        let values = scale
            .points()
            .iter()
            .enumerate()
            .map(|(i, &t)| f(i, t))
            .collect::<Vec<_>>();
        let g = Self::new(scale, values)?;
        if g.shape() != (rows, cols) {
            return Err(Error::shape(format!(
                "generator produced {:?}, declared {:?}",
                g.shape(),
                (rows, cols)
            )));
        }
        Ok(g)
    }

    pub fn from_scalars(scale: Arc<TimeScale>, values: &[f64]) -> Result<Self> {
        Self::new(
            scale,
            values
                .iter()
                .map(|&v| DMatrix::from_element(1, 1, v))
                .collect(),
        )
    }

    pub fn from_vectors(scale: Arc<TimeScale>, values: Vec<DVector<f64>>) -> Result<Self> {
        Self::new(
            scale,
            values
                .into_iter()
                .map(|v| {
                    let n = v.len();
                    v.reshape_generic(nalgebra::Dyn(n), nalgebra::Dyn(1))
                })
                .collect(),
        )
    }

    pub fn zeros(scale: Arc<TimeScale>, rows: usize, cols: usize) -> Self {
        let values = vec![DMatrix::zeros(rows, cols); scale.len()];
        Self {
            scale,
            rows,
            cols,
            values,
        }
    }

    pub fn scale(&self) -> &Arc<TimeScale> {
        &self.scale
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[DMatrix<f64>] {
        &self.values
    }

    pub fn at(&self, i: usize) -> &DMatrix<f64> {
        &self.values[i]
    }

    /// Column `0` of the `i`-th value as a vector.
    pub fn vector(&self, i: usize) -> DVector<f64> {
        self.values[i].column(0).into_owned()
    }

    /// Scalar value at point `i` (entry `(0, 0)`).
    pub fn scalar(&self, i: usize) -> f64 {
        self.values[i][(0, 0)]
    }

    pub fn eval(&self, t: f64) -> Result<&DMatrix<f64>> {
        Ok(&self.values[self.scale.index_of(t)?])
    }

    pub fn same_scale(&self, other: &GridFunction) -> bool {
        Arc::ptr_eq(&self.scale, &other.scale) || self.scale.points() == other.scale.points()
    }

    pub fn map(&self, f: impl Fn(&DMatrix<f64>) -> DMatrix<f64>) -> Result<GridFunction> {
        GridFunction::new(self.scale.clone(), self.values.iter().map(f).collect())
    }

    /// Pointwise combination of two grid functions on the same scale.
    pub fn zip_with(
        &self,
        other: &GridFunction,
        f: impl Fn(&DMatrix<f64>, &DMatrix<f64>) -> DMatrix<f64>,
    ) -> Result<GridFunction> {
        if !self.same_scale(other) {
            return Err(Error::ScaleMismatch);
        }
        GridFunction::new(
            self.scale.clone(),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| f(a, b))
                .collect(),
        )
    }

    /// Restriction to `T^k`.
    pub fn truncate(&self) -> Result<GridFunction> {
        let scale = Arc::new(self.scale.truncated()?);
        GridFunction::new(scale, self.values[..self.values.len() - 1].to_vec())
    }

    /// `||f||_inf`: the supremum over the scale of the pointwise Euclidean
    /// (Frobenius, for matrices) norm.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `||f||_{1,inf} = sup_{T^k} ||f|| + sup_{T^k} ||f^Δ||`.
    pub fn norm_1_inf(&self) -> Result<f64> {
        let d = delta_derivative(self)?;
        Ok(self.truncate()?.sup_norm() + d.sup_norm())
    }
}

pub fn sigma(ts: &TimeScale, t: f64) -> Result<f64> {
    ts.sigma(t)
}

pub fn rho(ts: &TimeScale, t: f64) -> Result<f64> {
    ts.rho(t)
}

pub fn graininess(ts: &TimeScale, t: f64) -> Result<f64> {
    ts.graininess(t)
}

pub fn classify(ts: &TimeScale, t: f64) -> Result<PointClass> {
    ts.classify(t)
}

/// `f^Δ(t_i) = (f(t_{i+1}) - f(t_i)) / mu(t_i)` on `T^k`.
pub fn delta_derivative(f: &GridFunction) -> Result<GridFunction> {
    let ts = f.scale();
    let trunc = Arc::new(ts.truncated()?);
    let values = f
        .values
        .windows(2)
        .enumerate()
        .map(|(i, w)| (&w[1] - &w[0]) / ts.mu(i))
        .collect();
    GridFunction::new(trunc, values)
}

/// `r`-fold delta derivative, living on `T^{k^r}`. `r == 0` returns `f`.
pub fn higher_delta_derivative(f: &GridFunction, r: usize) -> Result<GridFunction> {
    if r >= f.len() {
        return Err(Error::DomainExhausted {
            order: r,
            needed: r + 1,
            points: f.len(),
        });
    }
    let mut g = f.clone();
    for _ in 0..r {
        g = delta_derivative(&g)?;
    }
    Ok(g)
}

/// `f^σ(t_i) = f(t_{i+1})` on `T^k`.
pub fn sigma_shift(f: &GridFunction) -> Result<GridFunction> {
    let trunc = Arc::new(f.scale().truncated()?);
    GridFunction::new(trunc, f.values[1..].to_vec())
}

/// Delta integral `int_a^b f(t) Δt`. For `a <= b` this is the sum over
/// `t_i in [a, b)` of `f(t_i) mu(t_i)`; reversed bounds negate.
pub fn delta_integral(f: &GridFunction, a: f64, b: f64) -> Result<DMatrix<f64>> {
    let ts = f.scale();
    let ia = ts.index_of(a)?;
    let ib = ts.index_of(b)?;
    let (lo, hi, sign) = if ia <= ib {
        (ia, ib, 1.0)
    } else {
        (ib, ia, -1.0)
    };
    let (rows, cols) = f.shape();
    let mut acc = DMatrix::zeros(rows, cols);
    for i in lo..hi {
        acc += &f.values[i] * ts.mu(i);
    }
    Ok(acc * sign)
}

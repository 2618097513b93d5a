//! Small linear-algebra helpers shared by the solvers.
//!
//! The necessary-condition systems are assembled in time-interleaved order,
//! so each equation only touches unknowns of neighbouring steps. [`BandedSystem`]
//! exploits that with a band LU with partial pivoting; the dense route
//! through nalgebra is kept for cross-checking.

use nalgebra::{DMatrix, DVector};

/// Square linear system with `lower` sub- and `upper` super-diagonals.
#[derive(Debug, Clone)]
pub struct BandedSystem {
    dim: usize,
    lower: usize,
    upper: usize,
    /// Row `i` stores columns `i - lower ..= i + lower + upper`; the extra
    /// `lower` columns hold fill-in from row interchanges.
    band: Vec<f64>,
    rhs: Vec<f64>,
}

/// Pivot column at which elimination broke down.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SingularPivot(pub usize);

impl BandedSystem {
    pub fn new(dim: usize, lower: usize, upper: usize) -> Self {
        let width = 2 * lower + upper + 1;
        Self {
            dim,
            lower,
            upper,
            band: vec![0.0; dim * width],
            rhs: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn width(&self) -> usize {
        2 * self.lower + self.upper + 1
    }

    fn offset(&self, row: usize, col: usize) -> usize {
        debug_assert!(col + self.lower >= row && col <= row + self.lower + self.upper);
        row * self.width() + (col + self.lower - row)
    }

    /// Adds `value` to entry `(row, col)`.
    ///
    /// # Panics
    /// If `(row, col)` lies outside the declared band.
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        assert!(
            col + self.lower >= row && col <= row + self.upper,
            "entry ({row}, {col}) outside band"
        );
        let k = self.offset(row, col);
        self.band[k] += value;
    }

    pub fn add_rhs(&mut self, row: usize, value: f64) {
        self.rhs[row] += value;
    }

    /// Dense copy of the matrix, for tests and diagnostics.
    pub fn to_dense(&self) -> (DMatrix<f64>, DVector<f64>) {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            let lo = i.saturating_sub(self.lower);
            let hi = (i + self.upper).min(self.dim - 1);
            for j in lo..=hi {
                m[(i, j)] = self.band[self.offset(i, j)];
            }
        }
        (m, DVector::from_vec(self.rhs.clone()))
    }

    /// Gaussian elimination with partial pivoting. A pivot whose magnitude is
    /// at most `dim * eps * max|a_ij|` is treated as singular.
    pub fn solve(mut self) -> Result<DVector<f64>, SingularPivot> {
        let n = self.dim;
        let kl = self.lower;
        let reach = self.lower + self.upper;
        let scale = self.band.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let tol = (n.max(1) as f64) * f64::EPSILON * scale;
        if scale == 0.0 && n > 0 {
            return Err(SingularPivot(0));
        }

        for c in 0..n {
            let last = (c + kl).min(n - 1);
            let mut p = c;
            let mut best = self.band[self.offset(c, c)].abs();
            for r in c + 1..=last {
                let v = self.band[self.offset(r, c)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best <= tol {
                return Err(SingularPivot(c));
            }
            let right = (c + reach).min(n - 1);
            if p != c {
                for j in c..=right {
                    let a = self.offset(c, j);
                    let b = self.offset(p, j);
                    self.band.swap(a, b);
                }
                self.rhs.swap(c, p);
            }
            let pivot = self.band[self.offset(c, c)];
            for r in c + 1..=last {
                let k = self.offset(r, c);
                let factor = self.band[k] / pivot;
                if factor == 0.0 {
                    continue;
                }
                self.band[k] = 0.0;
                for j in c + 1..=right {
                    let src = self.band[self.offset(c, j)];
                    let dst = self.offset(r, j);
                    self.band[dst] -= factor * src;
                }
                self.rhs[r] -= factor * self.rhs[c];
            }
        }

        let mut x = vec![0.0; n];
        for c in (0..n).rev() {
            let right = (c + reach).min(n - 1);
            let mut acc = self.rhs[c];
            for j in c + 1..=right {
                acc -= self.band[self.offset(c, j)] * x[j];
            }
            x[c] = acc / self.band[self.offset(c, c)];
        }
        Ok(DVector::from_vec(x))
    }
}

/// Dense LU solve; `None` when the matrix is numerically singular.
pub fn dense_solve(m: &DMatrix<f64>, rhs: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = m.nrows();
    let scale = m.amax();
    if scale == 0.0 {
        return None;
    }
    let lu = m.clone().lu();
    let u = lu.u();
    let tol = (n.max(1) as f64) * f64::EPSILON * scale;
    if u.diagonal().iter().any(|d| d.abs() <= tol) {
        return None;
    }
    lu.solve(rhs)
}

/// 2-norm condition number; infinite for singular matrices.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn is_symmetric(m: &DMatrix<f64>) -> bool {
    if !m.is_square() {
        return false;
    }
    let tol = 1e-12 * m.amax().max(1.0);
    (0..m.nrows()).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    m.clone().symmetric_eigenvalues().min()
}

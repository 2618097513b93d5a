//! Random instances shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tsgame::{GridFunction, LinearGameSpec, TimeScale};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Scale with `steps` steps whose spacings are log-uniform in `[lo, hi]`.
pub fn random_scale(rng: &mut impl Rng, steps: usize, lo: f64, hi: f64) -> Arc<TimeScale> {
    let mut t = rng.gen_range(-5.0..5.0);
    let mut points = vec![t];
    for _ in 0..steps {
        t += (rng.gen_range(lo.ln()..=hi.ln())).exp();
        points.push(t);
    }
    Arc::new(TimeScale::new(points).expect("increasing"))
}

pub fn random_matrix(rng: &mut impl Rng, rows: usize, cols: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-scale..=scale))
}

pub fn random_vector(rng: &mut impl Rng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-scale..=scale))
}

pub fn random_grid(
    rng: &mut impl Rng,
    scale: &Arc<TimeScale>,
    rows: usize,
    cols: usize,
) -> GridFunction {
    GridFunction::from_fn(scale.clone(), rows, cols, |_, _| {
        random_matrix(rng, rows, cols, 1.0)
    })
    .unwrap()
}

/// `L Lᵀ` for a random `n x n` factor: symmetric positive semidefinite.
pub fn random_psd(rng: &mut impl Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let l = random_matrix(rng, n, n, scale);
    let m = &l * l.transpose();
    (&m + m.transpose()) * 0.5
}

/// `L Lᵀ + I`: eigenvalues at least one.
pub fn random_pd(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    random_psd(rng, n, 1.0) + DMatrix::identity(n, n)
}

#[derive(Debug, Clone, Copy)]
pub struct GameShape {
    pub max_players: usize,
    pub max_state: usize,
    pub max_steps: usize,
    pub min_players: usize,
}

impl GameShape {
    pub fn new(max_players: usize, max_state: usize, max_steps: usize) -> Self {
        Self {
            max_players,
            max_state,
            max_steps,
            min_players: 1,
        }
    }
}

/// Convex game: `Q^i` PSD, `R^{ii} >= I`, cross weights `R^{ij}` zero or PSD,
/// controls of dimension at most `n`, spacings in `[0.05, 0.5]`.
pub fn random_game(rng: &mut impl Rng, shape: GameShape) -> LinearGameSpec {
    let players = rng.gen_range(shape.min_players..=shape.max_players);
    let n = rng.gen_range(1..=shape.max_state);
    let steps = rng.gen_range(1..=shape.max_steps);
    let scale = random_scale(rng, steps, 0.05, 0.5);
    random_game_on(rng, scale, players, n)
}

pub fn random_game_on(
    rng: &mut impl Rng,
    scale: Arc<TimeScale>,
    players: usize,
    n: usize,
) -> LinearGameSpec {
    let m: Vec<usize> = (0..players).map(|_| rng.gen_range(1..=n)).collect();
    let a = random_matrix(rng, n, n, 0.5);
    let b = m.iter().map(|&mi| random_matrix(rng, n, mi, 1.0)).collect();
    let q = (0..players).map(|_| random_psd(rng, n, 1.0)).collect();
    let r = (0..players)
        .map(|i| {
            (0..players)
                .map(|j| {
                    if i == j {
                        random_pd(rng, m[i])
                    } else if rng.gen_bool(0.5) {
                        DMatrix::zeros(m[j], m[j])
                    } else {
                        random_psd(rng, m[j], 0.5)
                    }
                })
                .collect()
        })
        .collect();
    let x_a = random_vector(rng, n, 1.0);
    LinearGameSpec::new(scale, a, b, q, r, x_a).expect("convex by construction")
}

/// Extends a function on `T^k` to the full scale by repeating its last value.
pub fn pad(g: &GridFunction, full: &Arc<TimeScale>) -> GridFunction {
    let mut values = g.values().to_vec();
    values.push(
        values
            .last()
            .cloned()
            .unwrap_or_else(|| DMatrix::zeros(g.shape().0, g.shape().1)),
    );
    GridFunction::new(full.clone(), values).unwrap()
}

/// `|x - y|_max / max(1, |x|_max, |y|_max)`.
pub fn rel(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    (x - y).amax() / 1f64.max(x.amax()).max(y.amax())
}

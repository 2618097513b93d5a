//! N-player noncooperative games with linear delta dynamics
//! `x^Δ = A x + Σ_j B^j u^j` and quadratic costs
//! `J^i = int_a^b ½ (xᵀQ^i x + Σ_j u^jᵀ R^{ij} u^j) Δt`.
//!
//! Player `i`'s Hamiltonian is `H^i = L^i + (ψ^i)^σ · (A x + Σ_j B^j u^j)`.
//! An open-loop Nash equilibrium must satisfy, on `T^k`, the state equation
//! with `x(a) = x_a`, `(ψ^i)^Δ = -H^i_x`, `ψ^i(b) = 0` and `H^i_{u^i} = 0`.
//! Under memoryless perfect-state information with strategies
//! `u^j = γ^j(t, x_a, x)`, the costate equation gains the term
//! `-Σ_{j≠i} (γ^j_x)ᵀ H^i_{u^j}`.
//!
//! Throughout, `(ψ^i)^σ(t_k)` is `ψ^i(t_{k+1})`. Players are indexed from
//! zero in the API and from one in diagnostics.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dense_solve, is_symmetric, min_eigenvalue, BandedSystem};
use crate::linsys::{forward_solve, LinearSystem};
use crate::pmp::{InstantResidual, ResidualReport};
use crate::timescale::{delta_derivative, delta_integral, GridFunction, TimeScale};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InfoPattern {
    /// Open loop: controls depend on time and `x_a` only.
    Ol,
    /// Memoryless perfect state: controls may depend on the current state.
    Mps,
}

impl std::fmt::Display for InfoPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InfoPattern::Ol => "ol",
            InfoPattern::Mps => "mps",
        })
    }
}

#[derive(Debug, Clone)]
pub struct LinearGameSpec {
    scale: Arc<TimeScale>,
    a: DMatrix<f64>,
    b: Vec<DMatrix<f64>>,
    q: Vec<DMatrix<f64>>,
    r: Vec<Vec<DMatrix<f64>>>,
    x_a: DVector<f64>,
}

impl LinearGameSpec {
    /// Validates shapes, symmetry of every `Q^i` and `R^{ij}`, `Q^i ⪰ 0` and
    /// `R^{ii} ≻ 0`. A control dimension larger than the state dimension is
    /// only warned about.
    pub fn new(
        scale: Arc<TimeScale>,
        a: DMatrix<f64>,
        b: Vec<DMatrix<f64>>,
        q: Vec<DMatrix<f64>>,
        r: Vec<Vec<DMatrix<f64>>>,
        x_a: DVector<f64>,
    ) -> Result<Self> {
        if scale.len() < 2 {
            return Err(Error::invalid("time_scale", "need at least two points"));
        }
        let n = a.nrows();
        if !a.is_square() {
            return Err(Error::invalid(
                "A",
                format!("{}x{} is not square", n, a.ncols()),
            ));
        }
        let players = b.len();
        if players == 0 {
            return Err(Error::invalid("players", "need at least one player"));
        }
        if q.len() != players {
            return Err(Error::invalid(
                "Q",
                format!("expected {players} matrices, got {}", q.len()),
            ));
        }
        if r.len() != players {
            return Err(Error::invalid(
                "R",
                format!("expected {players} rows, got {}", r.len()),
            ));
        }
        if x_a.len() != n {
            return Err(Error::invalid(
                "x_a",
                format!("expected length {n}, got {}", x_a.len()),
            ));
        }
        for (i, bi) in b.iter().enumerate() {
            if bi.nrows() != n {
                return Err(Error::invalid(
                    format!("B[{}]", i + 1),
                    format!("expected {n} rows, got {}", bi.nrows()),
                ));
            }
            if bi.ncols() > n {
                log::warn!(
                    "B[{}]: control dimension {} exceeds state dimension {n}",
                    i + 1,
                    bi.ncols()
                );
            }
        }
        for (i, qi) in q.iter().enumerate() {
            let field = format!("Q[{}]", i + 1);
            if qi.shape() != (n, n) {
                return Err(Error::invalid(
                    field,
                    format!("expected {n}x{n}, got {:?}", qi.shape()),
                ));
            }
            if !is_symmetric(qi) {
                return Err(Error::invalid(field, "not symmetric"));
            }
            if min_eigenvalue(qi) < -1e-12 {
                return Err(Error::invalid(field, "not positive semidefinite"));
            }
        }
        for (i, row) in r.iter().enumerate() {
            if row.len() != players {
                return Err(Error::invalid(
                    format!("R[{}]", i + 1),
                    format!("expected {players} matrices, got {}", row.len()),
                ));
            }
            for (j, rij) in row.iter().enumerate() {
                let field = format!("R[{}][{}]", i + 1, j + 1);
                let mj = b[j].ncols();
                if rij.shape() != (mj, mj) {
                    return Err(Error::invalid(
                        field,
                        format!("expected {mj}x{mj}, got {:?}", rij.shape()),
                    ));
                }
                if !is_symmetric(rij) {
                    return Err(Error::invalid(field, "not symmetric"));
                }
                if i == j && !(min_eigenvalue(rij) > 1e-12) {
                    return Err(Error::invalid(field, "not positive definite"));
                }
            }
        }
        Ok(Self {
            scale,
            a,
            b,
            q,
            r,
            x_a,
        })
    }

    pub fn scale(&self) -> &Arc<TimeScale> {
        &self.scale
    }

    pub fn players(&self) -> usize {
        self.b.len()
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn control_dim(&self, i: usize) -> usize {
        self.b[i].ncols()
    }

    pub fn total_control_dim(&self) -> usize {
        self.b.iter().map(|b| b.ncols()).sum()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self, i: usize) -> &DMatrix<f64> {
        &self.b[i]
    }

    pub fn q(&self, i: usize) -> &DMatrix<f64> {
        &self.q[i]
    }

    pub fn r(&self, i: usize, j: usize) -> &DMatrix<f64> {
        &self.r[i][j]
    }

    pub fn initial_state(&self) -> &DVector<f64> {
        &self.x_a
    }

    pub fn with_initial_state(&self, x_a: DVector<f64>) -> Result<Self> {
        if x_a.len() != self.state_dim() {
            return Err(Error::invalid("x_a", "wrong length"));
        }
        Ok(Self {
            x_a,
            ..self.clone()
        })
    }

    /// `L^i(x, u) = ½ xᵀQ^i x + ½ Σ_j u^jᵀ R^{ij} u^j`.
    pub fn running_cost(&self, i: usize, x: &DVector<f64>, u: &[DVector<f64>]) -> f64 {
        let mut acc = x.dot(&(&self.q[i] * x));
        for (j, uj) in u.iter().enumerate() {
            acc += uj.dot(&(&self.r[i][j] * uj));
        }
        0.5 * acc
    }

    /// `Σ_j B^j u^j`, summed in player order.
    pub fn control_forcing(&self, u: &[DVector<f64>]) -> DVector<f64> {
        let mut f = DVector::zeros(self.state_dim());
        for (bj, uj) in self.b.iter().zip(u) {
            f += bj * uj;
        }
        f
    }

    fn check_on_scale(&self, name: &str, g: &GridFunction, rows: usize, cols: usize) -> Result<()> {
        if g.scale().points() != self.scale.points() {
            return Err(Error::ScaleMismatch);
        }
        if g.shape() != (rows, cols) {
            return Err(Error::shape(format!(
                "{name} has shape {:?}, expected ({rows}, {cols})",
                g.shape()
            )));
        }
        Ok(())
    }
}

/// One grid function of `m_i`-vectors per player, on the full scale. Values
/// at `b` are never used.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlProfile(pub Vec<GridFunction>);

impl ControlProfile {
    pub fn zeros(game: &LinearGameSpec) -> Self {
        Self(
            (0..game.players())
                .map(|i| GridFunction::zeros(game.scale().clone(), game.control_dim(i), 1))
                .collect(),
        )
    }

    pub fn player(&self, i: usize) -> &GridFunction {
        &self.0[i]
    }

    pub fn players(&self) -> usize {
        self.0.len()
    }

    /// All players' controls at point `k`.
    pub fn at(&self, k: usize) -> Vec<DVector<f64>> {
        self.0.iter().map(|g| g.vector(k)).collect()
    }

    pub fn with_player(&self, i: usize, g: GridFunction) -> Self {
        let mut v = self.0.clone();
        v[i] = g;
        Self(v)
    }

    /// Largest pointwise difference over `T^k`, all players.
    pub fn max_difference(&self, other: &ControlProfile) -> f64 {
        let mut d: f64 = 0.0;
        for (a, b) in self.0.iter().zip(&other.0) {
            for k in 0..a.len().saturating_sub(1) {
                d = d.max((a.at(k) - b.at(k)).amax());
            }
        }
        d
    }

    pub fn check(&self, game: &LinearGameSpec) -> Result<()> {
        if self.players() != game.players() {
            return Err(Error::shape(format!(
                "{} control functions for {} players",
                self.players(),
                game.players()
            )));
        }
        for (i, g) in self.0.iter().enumerate() {
            game.check_on_scale(&format!("u[{}]", i + 1), g, game.control_dim(i), 1)?;
        }
        Ok(())
    }
}

/// Affine feedback `u^i(t) = F^i(t) x(t) + g^i(t)`, so `γ^i_x = F^i`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineStrategyProfile {
    pub gains: Vec<GridFunction>,
    pub offsets: Vec<GridFunction>,
}

impl AffineStrategyProfile {
    pub fn check(&self, game: &LinearGameSpec) -> Result<()> {
        let n = game.state_dim();
        if self.gains.len() != game.players() || self.offsets.len() != game.players() {
            return Err(Error::shape(
                "strategy profile has the wrong number of players",
            ));
        }
        for i in 0..game.players() {
            let m = game.control_dim(i);
            game.check_on_scale(&format!("F[{}]", i + 1), &self.gains[i], m, n)?;
            game.check_on_scale(&format!("g[{}]", i + 1), &self.offsets[i], m, 1)?;
        }
        Ok(())
    }

    /// `F^i(t_k) x + g^i(t_k)`.
    pub fn control(&self, i: usize, k: usize, x: &DVector<f64>) -> DVector<f64> {
        self.gains[i].at(k) * x + self.offsets[i].vector(k)
    }
}

/// State trajectory, controls and costates of a Nash candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct NashCandidate {
    pub x: GridFunction,
    pub controls: ControlProfile,
    pub costates: Vec<GridFunction>,
}

impl NashCandidate {
    pub fn check(&self, game: &LinearGameSpec) -> Result<()> {
        let n = game.state_dim();
        game.check_on_scale("x", &self.x, n, 1)?;
        self.controls.check(game)?;
        if self.costates.len() != game.players() {
            return Err(Error::shape("wrong number of costates"));
        }
        for (i, p) in self.costates.iter().enumerate() {
            game.check_on_scale(&format!("psi[{}]", i + 1), p, n, 1)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct NashSolution {
    pub info: InfoPattern,
    pub candidate: NashCandidate,
    /// Present for MPS solutions.
    pub strategies: Option<AffineStrategyProfile>,
    pub costs: Vec<f64>,
    pub reports: Vec<ResidualReport>,
}

impl NashSolution {
    pub fn max_residual(&self) -> f64 {
        self.reports.iter().map(|r| r.overall).fold(0.0, f64::max)
    }
}

fn costs_along(
    game: &LinearGameSpec,
    x: &GridFunction,
    profile: &ControlProfile,
) -> Result<Vec<f64>> {
    let ts = game.scale();
    (0..game.players())
        .map(|i| {
            let li = GridFunction::from_fn(ts.clone(), 1, 1, |k, _| {
                DMatrix::from_element(1, 1, game.running_cost(i, &x.vector(k), &profile.at(k)))
            })?;
            Ok(delta_integral(&li, ts.min(), ts.max())?[(0, 0)])
        })
        .collect()
}

/// Costs `J^1..J^N` of an open-loop profile and the state it induces.
pub fn cost(game: &LinearGameSpec, profile: &ControlProfile) -> Result<(Vec<f64>, GridFunction)> {
    profile.check(game)?;
    let ts = game.scale();
    let forcing = GridFunction::from_vectors(
        ts.clone(),
        (0..ts.len())
            .map(|k| game.control_forcing(&profile.at(k)))
            .collect(),
    )?;
    let sys = LinearSystem::new(
        game.a().clone(),
        forcing,
        ts.min(),
        game.initial_state().clone(),
    )?;
    let x = forward_solve(&sys)?;
    Ok((costs_along(game, &x, profile)?, x))
}

/// Simulates the game where every player except `deviator` follows
/// `strategies` and `deviator` (if any) plays the open-loop `override_control`.
fn closed_loop(
    game: &LinearGameSpec,
    strategies: &AffineStrategyProfile,
    deviator: Option<(usize, &GridFunction)>,
) -> Result<(Vec<f64>, GridFunction, ControlProfile)> {
    let ts = game.scale();
    let players = game.players();
    let mut xs = Vec::with_capacity(ts.len());
    let mut us: Vec<Vec<DVector<f64>>> = vec![Vec::with_capacity(ts.len()); players];
    let mut x = game.initial_state().clone();
    for k in 0..ts.len() {
        let u: Vec<DVector<f64>> = (0..players)
            .map(|i| match deviator {
                Some((d, g)) if d == i => g.vector(k),
                _ if k == ts.steps() => DVector::zeros(game.control_dim(i)),
                _ => strategies.control(i, k, &x),
            })
            .collect();
        xs.push(x.clone());
        if k < ts.steps() {
            // same operation order as linsys::forward_solve
            let drift = game.a() * &x + game.control_forcing(&u);
            x += drift * ts.mu(k);
        }
        for (i, ui) in u.into_iter().enumerate() {
            us[i].push(ui);
        }
    }
    let x = GridFunction::from_vectors(ts.clone(), xs)?;
    let profile = ControlProfile(
        us.into_iter()
            .map(|v| GridFunction::from_vectors(ts.clone(), v))
            .collect::<Result<_>>()?,
    );
    let costs = costs_along(game, &x, &profile)?;
    Ok((costs, x, profile))
}

/// Costs of the feedback profile, evaluated by closed-loop simulation.
pub fn feedback_cost(
    game: &LinearGameSpec,
    strategies: &AffineStrategyProfile,
) -> Result<(Vec<f64>, GridFunction, ControlProfile)> {
    strategies.check(game)?;
    closed_loop(game, strategies, None)
}

/// The open-loop profile `v^i(t) = F^i(t) x*(t) + g^i(t)` along the
/// closed-loop trajectory `x*`.
pub fn ol_realization(
    game: &LinearGameSpec,
    strategies: &AffineStrategyProfile,
) -> Result<ControlProfile> {
    Ok(feedback_cost(game, strategies)?.2)
}

// Unknown layout per step k: [x_{k+1} | ψ^1_k .. ψ^N_k | u^1_k .. u^N_k].
struct OlLayout {
    n: usize,
    players: usize,
    offsets: Vec<usize>,
    block: usize,
}

impl OlLayout {
    fn new(game: &LinearGameSpec) -> Self {
        let n = game.state_dim();
        let players = game.players();
        let mut offsets = Vec::with_capacity(players);
        let mut acc = n + players * n;
        for i in 0..players {
            offsets.push(acc);
            acc += game.control_dim(i);
        }
        Self {
            n,
            players,
            offsets,
            block: acc,
        }
    }

    fn x(&self, k: usize) -> usize {
        (k - 1) * self.block
    }

    fn psi(&self, i: usize, k: usize) -> usize {
        k * self.block + self.n + i * self.n
    }

    fn u(&self, i: usize, k: usize) -> usize {
        k * self.block + self.offsets[i]
    }
}

/// Open-loop Nash candidate from the necessary conditions, solved as one
/// square linear system over all players and all steps:
///
/// ```text
/// x_{k+1} - x_k - μ_k (A x_k + Σ_j B^j u^j_k)        = 0
/// ψ^i_k - ψ^i_{k+1} - μ_k (Q^i x_k + Aᵀ ψ^i_{k+1})   = 0
/// R^{ii} u^i_k + B^iᵀ ψ^i_{k+1}                      = 0
/// ```
pub fn solve_ol_nash(game: &LinearGameSpec) -> Result<NashSolution> {
    let ts = game.scale().clone();
    let steps = ts.steps();
    let lay = OlLayout::new(game);
    let n = lay.n;
    let a = game.a();
    let x_a = game.initial_state();
    let mut sys = BandedSystem::new(steps * lay.block, 2 * lay.block, 2 * lay.block);

    for k in 0..steps {
        let mu = ts.mu(k);
        let row0 = k * lay.block;
        let ax0 = a * x_a;
        for r in 0..n {
            let row = row0 + r;
            sys.add(row, lay.x(k + 1) + r, 1.0);
            if k == 0 {
                sys.add_rhs(row, x_a[r] + mu * ax0[r]);
            } else {
                sys.add(row, lay.x(k) + r, -1.0);
                for c in 0..n {
                    sys.add(row, lay.x(k) + c, -mu * a[(r, c)]);
                }
            }
            for j in 0..lay.players {
                let bj = game.b(j);
                for c in 0..bj.ncols() {
                    sys.add(row, lay.u(j, k) + c, -mu * bj[(r, c)]);
                }
            }
        }
        for i in 0..lay.players {
            let qi = game.q(i);
            let qx0 = qi * x_a;
            for r in 0..n {
                let row = row0 + n + i * n + r;
                sys.add(row, lay.psi(i, k) + r, 1.0);
                if k + 1 < steps {
                    sys.add(row, lay.psi(i, k + 1) + r, -1.0);
                    for c in 0..n {
                        sys.add(row, lay.psi(i, k + 1) + c, -mu * a[(c, r)]);
                    }
                }
                if k == 0 {
                    sys.add_rhs(row, mu * qx0[r]);
                } else {
                    for c in 0..n {
                        sys.add(row, lay.x(k) + c, -mu * qi[(r, c)]);
                    }
                }
            }
        }
        for i in 0..lay.players {
            let (bi, rii) = (game.b(i), game.r(i, i));
            for r in 0..bi.ncols() {
                let row = row0 + lay.offsets[i] + r;
                for c in 0..bi.ncols() {
                    sys.add(row, lay.u(i, k) + c, rii[(r, c)]);
                }
                if k + 1 < steps {
                    for c in 0..n {
                        sys.add(row, lay.psi(i, k + 1) + c, bi[(c, r)]);
                    }
                }
            }
        }
    }

    let z = sys.solve().map_err(|p| Error::Degenerate {
        context: format!(
            "open-loop necessary-condition system, block {}",
            p.0 / lay.block
        ),
        instant: ts.point(p.0 / lay.block),
    })?;

    let mut xs = vec![x_a.clone()];
    let mut psis = vec![Vec::with_capacity(steps + 1); lay.players];
    let mut us = vec![Vec::with_capacity(steps + 1); lay.players];
    for k in 0..steps {
        xs.push(z.rows(lay.x(k + 1), n).into_owned());
        for i in 0..lay.players {
            psis[i].push(z.rows(lay.psi(i, k), n).into_owned());
            us[i].push(z.rows(lay.u(i, k), game.control_dim(i)).into_owned());
        }
    }
    for i in 0..lay.players {
        psis[i].push(DVector::zeros(n));
        us[i].push(DVector::zeros(game.control_dim(i)));
    }
    let controls = ControlProfile(
        us.into_iter()
            .map(|v| GridFunction::from_vectors(ts.clone(), v))
            .collect::<Result<_>>()?,
    );
    let costates = psis
        .into_iter()
        .map(|v| GridFunction::from_vectors(ts.clone(), v))
        .collect::<Result<Vec<_>>>()?;
    let (costs, _) = cost(game, &controls)?;
    let candidate = NashCandidate {
        x: GridFunction::from_vectors(ts, xs)?,
        controls,
        costates,
    };
    let reports = ol_residuals(game, &candidate)?;
    Ok(NashSolution {
        info: InfoPattern::Ol,
        candidate,
        strategies: None,
        costs,
        reports,
    })
}

fn residuals(
    game: &LinearGameSpec,
    cand: &NashCandidate,
    strategies: Option<&AffineStrategyProfile>,
) -> Result<Vec<ResidualReport>> {
    cand.check(game)?;
    if let Some(s) = strategies {
        s.check(game)?;
    }
    let ts = game.scale();
    let a = game.a();
    let xd = delta_derivative(&cand.x)?;
    let initial = (cand.x.vector(0) - game.initial_state()).norm();
    let state: Vec<f64> = (0..ts.steps())
        .map(|k| {
            let drift = a * cand.x.vector(k) + game.control_forcing(&cand.controls.at(k));
            (xd.vector(k) - drift).norm()
        })
        .collect();

    (0..game.players())
        .map(|i| {
            let psi = &cand.costates[i];
            let pd = delta_derivative(psi)?;
            let mut rows = Vec::with_capacity(ts.steps());
            let mut consistency: f64 = 0.0;
            for k in 0..ts.steps() {
                let x = cand.x.vector(k);
                let u = cand.controls.at(k);
                let ps = psi.vector(k + 1);
                let mut hx = game.q(i) * &x + a.transpose() * &ps;
                if let Some(s) = strategies {
                    for j in (0..game.players()).filter(|&j| j != i) {
                        let h_uj = game.r(i, j) * &u[j] + game.b(j).transpose() * &ps;
                        hx += s.gains[j].at(k).transpose() * h_uj;
                    }
                    consistency = consistency.max((&u[i] - s.control(i, k, &x)).norm());
                }
                let costate = (pd.vector(k) + hx).norm();
                let stationarity = (game.r(i, i) * &u[i] + game.b(i).transpose() * &ps).norm();
                rows.push(InstantResidual {
                    t: ts.point(k),
                    state: state[k],
                    costate,
                    stationarity,
                });
            }
            let transversality = psi.vector(ts.steps()).norm();
            Ok(ResidualReport::from_parts(
                initial,
                transversality,
                consistency,
                rows,
            ))
        })
        .collect()
}

/// Per-player residuals of the open-loop necessary conditions.
pub fn ol_residuals(game: &LinearGameSpec, cand: &NashCandidate) -> Result<Vec<ResidualReport>> {
    residuals(game, cand, None)
}

/// Per-player residuals of the MPS necessary conditions, including the
/// `-Σ_{j≠i} (F^j)ᵀ H^i_{u^j}` costate term and the consistency of the
/// candidate controls with `strategies` along `cand.x`.
pub fn mps_residuals(
    game: &LinearGameSpec,
    strategies: &AffineStrategyProfile,
    cand: &NashCandidate,
) -> Result<Vec<ResidualReport>> {
    residuals(game, cand, Some(strategies))
}

/// Affine feedback candidate by backward induction on `ψ^i = P^i x`,
/// `P^i(b) = 0`.
///
/// At step `k` the gains solve the coupled stationarity conditions
/// `R^{ii} F^i + μ_k B^iᵀ P^i_{k+1} Σ_j B^j F^j = -B^iᵀ P^i_{k+1} (I + μ_k A)`;
/// then, with `Φ_k = I + μ_k (A + Σ_j B^j F^j)`,
/// `P^i_k = P^i_{k+1} Φ_k + μ_k [Q^i + Aᵀ P^i_{k+1} Φ_k
///          + Σ_{j≠i} F^jᵀ (R^{ij} F^j + B^jᵀ P^i_{k+1} Φ_k)]`.
pub fn solve_mps_nash(game: &LinearGameSpec) -> Result<NashSolution> {
    let ts = game.scale().clone();
    let steps = ts.steps();
    let n = game.state_dim();
    let players = game.players();
    let total = game.total_control_dim();
    let offsets: Vec<usize> = (0..players)
        .scan(0, |acc, i| {
            let o = *acc;
            *acc += game.control_dim(i);
            Some(o)
        })
        .collect();
    let a = game.a();
    let eye = DMatrix::<f64>::identity(n, n);

    let mut value = vec![vec![DMatrix::zeros(n, n); steps + 1]; players];
    let mut gains: Vec<Vec<DMatrix<f64>>> = (0..players)
        .map(|i| vec![DMatrix::zeros(game.control_dim(i), n); steps + 1])
        .collect();

    for k in (0..steps).rev() {
        let mu = ts.mu(k);
        let open = &eye + a * mu;
        let mut lhs = DMatrix::zeros(total, total);
        let mut rhs = DMatrix::zeros(total, n);
        for i in 0..players {
            let (oi, mi) = (offsets[i], game.control_dim(i));
            let bt_p = game.b(i).transpose() * &value[i][k + 1];
            for j in 0..players {
                let mut blk = &bt_p * game.b(j) * mu;
                if i == j {
                    blk += game.r(i, i);
                }
                lhs.view_mut((oi, offsets[j]), (mi, game.control_dim(j)))
                    .copy_from(&blk);
            }
            rhs.view_mut((oi, 0), (mi, n)).copy_from(&(-&bt_p * &open));
        }
        let sol = dense_solve(&lhs, &rhs).ok_or_else(|| Error::Degenerate {
            context: "coupled feedback stationarity system".into(),
            instant: ts.point(k),
        })?;
        for i in 0..players {
            gains[i][k] = sol.rows(offsets[i], game.control_dim(i)).into_owned();
        }
        let mut phi = open.clone();
        for j in 0..players {
            phi += game.b(j) * &gains[j][k] * mu;
        }
        for i in 0..players {
            let pn = &value[i][k + 1];
            let pphi = pn * &phi;
            let mut inner = game.q(i) + a.transpose() * &pphi;
            for j in (0..players).filter(|&j| j != i) {
                let fj = &gains[j][k];
                inner += fj.transpose() * (game.r(i, j) * fj + game.b(j).transpose() * &pphi);
            }
            value[i][k] = pphi + inner * mu;
        }
    }

    let strategies = AffineStrategyProfile {
        gains: gains
            .into_iter()
            .map(|g| GridFunction::new(ts.clone(), g))
            .collect::<Result<_>>()?,
        offsets: (0..players)
            .map(|i| GridFunction::zeros(ts.clone(), game.control_dim(i), 1))
            .collect(),
    };
    let (costs, x, controls) = feedback_cost(game, &strategies)?;
    let costates = value
        .iter()
        .map(|p| {
            GridFunction::from_vectors(
                ts.clone(),
                (0..ts.len()).map(|k| &p[k] * x.vector(k)).collect(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let candidate = NashCandidate {
        x,
        controls,
        costates,
    };
    let reports = mps_residuals(game, &strategies, &candidate)?;
    Ok(NashSolution {
        info: InfoPattern::Mps,
        candidate,
        strategies: Some(strategies),
        costs,
        reports,
    })
}

pub fn solve(game: &LinearGameSpec, info: InfoPattern) -> Result<NashSolution> {
    match info {
        InfoPattern::Ol => solve_ol_nash(game),
        InfoPattern::Mps => solve_mps_nash(game),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationReport {
    pub player: usize,
    pub trials: usize,
    pub radius: f64,
    /// `max over trials of J^i(u*) - J^i(deviated)`; positive values mean a
    /// profitable deviation was found.
    pub max_cost_decrease: f64,
}

/// Random unilateral deviations of player `i` with `||δu^i||_∞ <= radius`.
///
/// For OL solutions the other players keep their control sequences; for MPS
/// solutions they keep their strategies and the trajectory is re-simulated.
pub fn unilateral_deviation_check(
    game: &LinearGameSpec,
    solution: &NashSolution,
    i: usize,
    trials: usize,
    radius: f64,
    seed: u64,
) -> Result<DeviationReport> {
    if i >= game.players() {
        return Err(Error::invalid("player", format!("no player {}", i + 1)));
    }
    let ts = game.scale();
    let base_u = solution.candidate.controls.player(i);
    let evaluate = |ui: &GridFunction| -> Result<f64> {
        match &solution.strategies {
            Some(s) if solution.info == InfoPattern::Mps => {
                Ok(closed_loop(game, s, Some((i, ui)))?.0[i])
            }
            _ => Ok(cost(
                game,
                &solution.candidate.controls.with_player(i, ui.clone()),
            )?
            .0[i]),
        }
    };
    let base = evaluate(base_u)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let m = game.control_dim(i);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let dev = GridFunction::from_fn(ts.clone(), m, 1, |k, _| {
            let base_k = base_u.at(k);
            if k == ts.steps() {
                base_k.clone()
            } else {
                base_k + DMatrix::from_fn(m, 1, |_, _| rng.gen_range(-radius..=radius))
            }
        })?;
        worst = worst.max(base - evaluate(&dev)?);
    }
    Ok(DeviationReport {
        player: i,
        trials,
        radius,
        max_cost_decrease: if trials == 0 { 0.0 } else { worst },
    })
}

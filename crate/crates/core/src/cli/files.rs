//! Trajectory CSV and `report.json` formats.
//!
//! Trajectory columns: `t, mu, x_1..x_n, u{i}_{c}..., psi{i}_{c}...` with
//! 1-based player and component indices. Numbers are written with 17
//! significant digits so they read back bit-exact. Control cells are left
//! empty on the last row.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{
    AffineStrategyProfile, ControlProfile, InfoPattern, LinearGameSpec, NashCandidate, NashSolution,
};
use crate::pmp::ResidualReport;
use crate::timescale::{GridFunction, TimeScale};

pub fn format_number(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn trajectory_header(game: &LinearGameSpec) -> Vec<String> {
    let n = game.state_dim();
    let mut cols = vec!["t".to_string(), "mu".to_string()];
    cols.extend((1..=n).map(|c| format!("x_{c}")));
    for i in 0..game.players() {
        cols.extend((1..=game.control_dim(i)).map(|c| format!("u{}_{c}", i + 1)));
    }
    for i in 0..game.players() {
        cols.extend((1..=n).map(|c| format!("psi{}_{c}", i + 1)));
    }
    cols
}

pub fn trajectory_csv(game: &LinearGameSpec, cand: &NashCandidate) -> String {
    let ts = game.scale();
    let mut out = trajectory_header(game).join(",");
    out.push('\n');
    for k in 0..ts.len() {
        let mut cells = vec![format_number(ts.point(k)), format_number(ts.mu(k))];
        cells.extend(cand.x.vector(k).iter().map(|&v| format_number(v)));
        for i in 0..game.players() {
            let u = cand.controls.player(i).vector(k);
            if k < ts.steps() {
                cells.extend(u.iter().map(|&v| format_number(v)));
            } else {
                cells.extend(std::iter::repeat_n(String::new(), u.len()));
            }
        }
        for p in &cand.costates {
            cells.extend(p.vector(k).iter().map(|&v| format_number(v)));
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Parses a trajectory written by [`trajectory_csv`] (or by hand) for
/// `game`. The `t` column must reproduce the game's scale exactly.
pub fn read_trajectory(game: &LinearGameSpec, text: &str) -> Result<NashCandidate> {
    let ts = game.scale();
    let expected = trajectory_header(game);
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::invalid("csv", "empty file"))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    if header != expected {
        return Err(Error::invalid(
            "csv header",
            format!("expected {}, got {}", expected.join(","), header.join(",")),
        ));
    }
    let rows: Vec<&str> = lines.collect();
    if rows.len() != ts.len() {
        return Err(Error::invalid(
            "csv",
            format!(
                "{} data rows, but the scale has {} points",
                rows.len(),
                ts.len()
            ),
        ));
    }
    let n = game.state_dim();
    let mut x = Vec::with_capacity(ts.len());
    let mut u: Vec<Vec<DVector<f64>>> = vec![Vec::with_capacity(ts.len()); game.players()];
    let mut psi: Vec<Vec<DVector<f64>>> = vec![Vec::with_capacity(ts.len()); game.players()];
    for (k, line) in rows.iter().enumerate() {
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != expected.len() {
            return Err(Error::invalid(
                format!("csv row {}", k + 1),
                format!("{} cells, expected {}", cells.len(), expected.len()),
            ));
        }
        let last = k == ts.steps();
        let cell = |c: usize, allow_empty: bool| -> Result<f64> {
            let s = cells[c];
            if s.is_empty() && allow_empty {
                return Ok(0.0);
            }
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| {
                    Error::invalid(
                        format!("csv row {}, column {}", k + 1, expected[c]),
                        format!("not a number: {s:?}"),
                    )
                })
        };
        let t = cell(0, false)?;
        if t != ts.point(k) {
            return Err(Error::invalid(
                format!("csv row {}, column t", k + 1),
                format!("{t} is not the scale point {}", ts.point(k)),
            ));
        }
        let mut c = 2;
        let mut take = |len: usize, allow_empty: bool| -> Result<DVector<f64>> {
            let v = (c..c + len)
                .map(|j| cell(j, allow_empty))
                .collect::<Result<Vec<_>>>()?;
            c += len;
            Ok(DVector::from_vec(v))
        };
        x.push(take(n, false)?);
        for (i, ui) in u.iter_mut().enumerate() {
            ui.push(take(game.control_dim(i), last)?);
        }
        for p in psi.iter_mut() {
            p.push(take(n, false)?);
        }
    }
    Ok(NashCandidate {
        x: GridFunction::from_vectors(ts.clone(), x)?,
        controls: ControlProfile(
            u.into_iter()
                .map(|v| GridFunction::from_vectors(ts.clone(), v))
                .collect::<Result<_>>()?,
        ),
        costates: psi
            .into_iter()
            .map(|v| GridFunction::from_vectors(ts.clone(), v))
            .collect::<Result<_>>()?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerResidual {
    pub player: usize,
    pub state_eq: f64,
    pub costate_eq: f64,
    pub stationarity: f64,
    pub transversality: f64,
    pub consistency: f64,
    pub overall: f64,
}

impl PlayerResidual {
    pub fn from_report(player: usize, r: &ResidualReport) -> Self {
        Self {
            player,
            state_eq: r.state_eq,
            costate_eq: r.costate_eq,
            stationarity: r.stationarity,
            transversality: r.transversality,
            consistency: r.consistency,
            overall: r.overall,
        }
    }
}

/// Feedback gains `F^i(t)` (row-major) and offsets `g^i(t)` at every scale
/// point; the values at the last point are unused.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyTable {
    pub instants: Vec<f64>,
    pub players: Vec<PlayerStrategy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerStrategy {
    pub player: usize,
    pub gains: Vec<Vec<Vec<f64>>>,
    pub offsets: Vec<Vec<f64>>,
}

impl StrategyTable {
    pub fn from_profile(scale: &TimeScale, s: &AffineStrategyProfile) -> Self {
        let players = s
            .gains
            .iter()
            .zip(&s.offsets)
            .enumerate()
            .map(|(i, (f, g))| PlayerStrategy {
                player: i + 1,
                gains: f
                    .values()
                    .iter()
                    .map(|m| m.row_iter().map(|r| r.iter().copied().collect()).collect())
                    .collect(),
                offsets: g
                    .values()
                    .iter()
                    .map(|v| v.iter().copied().collect())
                    .collect(),
            })
            .collect();
        Self {
            instants: scale.points().to_vec(),
            players,
        }
    }

    pub fn to_profile(&self, scale: &Arc<TimeScale>) -> Result<AffineStrategyProfile> {
        if self.instants != scale.points() {
            return Err(Error::invalid(
                "strategies.instants",
                "do not match the configured time scale",
            ));
        }
        let mut gains = Vec::new();
        let mut offsets = Vec::new();
        for (i, p) in self.players.iter().enumerate() {
            let field = format!("strategies.players[{}]", i + 1);
            if p.gains.len() != scale.len() || p.offsets.len() != scale.len() {
                return Err(Error::invalid(
                    field,
                    "one gain and offset per scale point required",
                ));
            }
            let mats = p
                .gains
                .iter()
                .map(|rows| {
                    let nr = rows.len();
                    let nc = rows.first().map_or(0, Vec::len);
                    if rows.iter().any(|r| r.len() != nc) {
                        return Err(Error::invalid(&field, "ragged gain matrix"));
                    }
                    Ok(DMatrix::from_fn(nr, nc, |a, b| rows[a][b]))
                })
                .collect::<Result<Vec<_>>>()?;
            gains.push(GridFunction::new(scale.clone(), mats)?);
            offsets.push(GridFunction::from_vectors(
                scale.clone(),
                p.offsets
                    .iter()
                    .map(|v| DVector::from_vec(v.clone()))
                    .collect(),
            )?);
        }
        Ok(AffineStrategyProfile { gains, offsets })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub schema_version: u32,
    pub info: InfoPattern,
    /// `"ok"` or `"residual_exceeds_tolerance"`.
    pub status: String,
    pub players: usize,
    pub state_dim: usize,
    pub control_dims: Vec<usize>,
    pub steps: usize,
    pub tolerance: f64,
    pub costs: Vec<f64>,
    pub max_residual: f64,
    pub residuals: Vec<PlayerResidual>,
    pub strategies: Option<StrategyTable>,
}

impl SolveReport {
    pub fn new(game: &LinearGameSpec, sol: &NashSolution, tolerance: f64) -> Self {
        let max_residual = sol.max_residual();
        Self {
            schema_version: super::config::SCHEMA_VERSION,
            info: sol.info,
            status: if max_residual <= tolerance {
                "ok"
            } else {
                "residual_exceeds_tolerance"
            }
            .into(),
            players: game.players(),
            state_dim: game.state_dim(),
            control_dims: (0..game.players()).map(|i| game.control_dim(i)).collect(),
            steps: game.scale().steps(),
            tolerance,
            costs: sol.costs.clone(),
            max_residual,
            residuals: sol
                .reports
                .iter()
                .enumerate()
                .map(|(i, r)| PlayerResidual::from_report(i + 1, r))
                .collect(),
            strategies: sol
                .strategies
                .as_ref()
                .map(|s| StrategyTable::from_profile(game.scale(), s)),
        }
    }
}

/// Writes `contents` to `path` via a temporary file in the same directory
/// and a rename, so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

//! `GameConfig`: the JSON description of a game.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "time_scale": { "points": [0, 1, 2] },
//!   "players": 2,
//!   "A": [[0]],
//!   "B": [[[1]], [[1]]],
//!   "Q": [[[1]], [[1]]],
//!   "R": [[[[1]], [[0]]], [[[0]], [[1]]]],
//!   "x_a": [1],
//!   "info": "ol"
//! }
//! ```
//!
//! `time_scale` is either `{"points": [...]}` or
//! `{"a": .., "b": .., "M": .., "scheme": "uniform" | "geometric", "ratio": ..}`;
//! giving both forms is rejected.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::games::{InfoPattern, LinearGameSpec};
use crate::timescale::{sample_interval, SamplingScheme, TimeScale};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    pub schema_version: u32,
    pub time_scale: TimeScaleConfig,
    pub players: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "R")]
    pub r: Vec<Vec<Vec<Vec<f64>>>>,
    pub x_a: Vec<f64>,
    #[serde(default)]
    pub info: Option<InfoPattern>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub reference: Option<ReferenceConfig>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeScaleConfig {
    pub points: Option<Vec<f64>>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    #[serde(rename = "M")]
    pub steps: Option<usize>,
    pub scheme: Option<String>,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub residual: f64,
    pub oracle_controls: f64,
    pub oracle_cost: f64,
    pub deviation_trials: usize,
    pub deviation_radius: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual: 1e-9,
            oracle_controls: 1e-8,
            oracle_cost: 1e-9,
            deviation_trials: 100,
            deviation_radius: 0.1,
        }
    }
}

/// Reference values for `converge`: known per-player costs, or a request to
/// extrapolate from a fine run.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    pub costs: Option<Vec<f64>>,
    #[serde(default)]
    pub extrapolate: bool,
    pub level: Option<usize>,
}

impl GameConfig {
    pub fn from_json(text: &str) -> std::result::Result<Self, String> {
        let cfg: GameConfig = serde_json::from_str(text)
            .map_err(|e| format!("line {}, column {}: {e}", e.line(), e.column()))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(format!(
                "schema_version: unsupported version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            ));
        }
        Ok(cfg)
    }

    pub fn info(&self) -> InfoPattern {
        self.info.unwrap_or(InfoPattern::Ol)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn scale(&self) -> Result<TimeScale> {
        self.time_scale.build(None)
    }

    pub fn to_game(&self) -> Result<LinearGameSpec> {
        self.to_game_on(Arc::new(self.scale()?))
    }

    /// Same game with the sampled scale refined to `steps` steps.
    pub fn to_game_with_steps(&self, steps: usize) -> Result<LinearGameSpec> {
        self.to_game_on(Arc::new(self.time_scale.build(Some(steps))?))
    }

    fn to_game_on(&self, scale: Arc<TimeScale>) -> Result<LinearGameSpec> {
        let n = self.x_a.len();
        let p = self.players;
        if p == 0 {
            return Err(Error::invalid("players", "must be at least 1"));
        }
        let a = matrix("A", &self.a)?;
        if self.b.len() != p {
            return Err(Error::invalid(
                "B",
                format!("expected {p} matrices, got {}", self.b.len()),
            ));
        }
        if self.q.len() != p {
            return Err(Error::invalid(
                "Q",
                format!("expected {p} matrices, got {}", self.q.len()),
            ));
        }
        if self.r.len() != p {
            return Err(Error::invalid(
                "R",
                format!("expected {p} rows, got {}", self.r.len()),
            ));
        }
        let b = self
            .b
            .iter()
            .enumerate()
            .map(|(i, m)| matrix(&format!("B[{}]", i + 1), m))
            .collect::<Result<Vec<_>>>()?;
        let q = self
            .q
            .iter()
            .enumerate()
            .map(|(i, m)| matrix(&format!("Q[{}]", i + 1), m))
            .collect::<Result<Vec<_>>>()?;
        let r = self
            .r
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, m)| matrix(&format!("R[{}][{}]", i + 1, j + 1), m))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        if a.nrows() != n {
            return Err(Error::invalid(
                "A",
                format!(
                    "{}x{} does not match x_a of length {n}",
                    a.nrows(),
                    a.ncols()
                ),
            ));
        }
        LinearGameSpec::new(scale, a, b, q, r, DVector::from_vec(self.x_a.clone()))
    }
}

impl TimeScaleConfig {
    pub fn is_sampled(&self) -> bool {
        self.points.is_none()
    }

    pub fn build(&self, steps_override: Option<usize>) -> Result<TimeScale> {
        let sampled = self.a.is_some()
            || self.b.is_some()
            || self.steps.is_some()
            || self.scheme.is_some()
            || self.ratio.is_some();
        match (&self.points, sampled) {
            (Some(_), true) => Err(Error::invalid(
                "time_scale",
                "give either \"points\" or {a, b, M, scheme}, not both",
            )),
            (Some(_), false) if steps_override.is_some() => Err(Error::invalid(
                "time_scale",
                "explicit point lists cannot be refined; use {a, b, scheme}",
            )),
            (Some(points), false) => TimeScale::new(points.clone())
                .map_err(|e| Error::invalid("time_scale.points", e.to_string())),
            (None, _) => {
                let a = self
                    .a
                    .ok_or_else(|| Error::invalid("time_scale.a", "missing"))?;
                let b = self
                    .b
                    .ok_or_else(|| Error::invalid("time_scale.b", "missing"))?;
                let steps = steps_override
                    .or(self.steps)
                    .ok_or_else(|| Error::invalid("time_scale.M", "missing"))?;
                if steps == 0 {
                    return Err(Error::invalid("time_scale.M", "must be at least 1"));
                }
                let scheme = match self.scheme.as_deref().unwrap_or("uniform") {
                    "uniform" => SamplingScheme::Uniform,
                    "geometric" => SamplingScheme::Geometric {
                        ratio: self.ratio.unwrap_or(1.0),
                    },
                    other => {
                        return Err(Error::invalid(
                            "time_scale.scheme",
                            format!("unknown scheme {other:?}"),
                        ))
                    }
                };
                sample_interval(a, b, steps, scheme)
                    .map_err(|e| Error::invalid("time_scale", e.to_string()))
            }
        }
    }
}

fn matrix(field: &str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, |r| r.len());
    if nr == 0 || nc == 0 {
        return Err(Error::invalid(field, "empty matrix"));
    }
    if let Some(i) = rows.iter().position(|r| r.len() != nc) {
        return Err(Error::invalid(
            field,
            format!("row {} has {} entries, expected {nc}", i + 1, rows[i].len()),
        ));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid(field, "non-finite entry"));
    }
    Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

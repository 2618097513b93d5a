//! Command-line front end: `solve`, `check`, `oracle` and `converge`.
//!
//! Exit codes: 0 success, 1 invalid input, 2 degenerate problem, 3 a check
//! or tolerance failed.

pub mod config;
pub mod files;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::games::{self, ControlProfile, InfoPattern, LinearGameSpec};
use crate::oracle::{self, Reference};
use crate::pmp::{self, LagrangeProblem, LqModel, PmpCandidate};

pub use config::GameConfig;
pub use files::{SolveReport, StrategyTable};

/// Environment variable overriding the default output directory of `solve`.
pub const OUT_DIR_ENV: &str = "TSGAME_OUT_DIR";

/// Default Richardson level when the config asks to extrapolate.
pub const DEFAULT_EXTRAPOLATION_LEVEL: usize = 3200;

/// Accepted band for successive error ratios under step halving.
pub const RATIO_BAND: (f64, f64) = (1.7, 2.3);

#[derive(Debug, Parser)]
#[command(
    name = "tsgame",
    version,
    about = "Linear-quadratic dynamic games on time scales"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Info {
    Ol,
    Mps,
}

impl From<Info> for InfoPattern {
    fn from(i: Info) -> Self {
        match i {
            Info::Ol => InfoPattern::Ol,
            Info::Mps => InfoPattern::Mps,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Problem {
    Game,
    Lagrange,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for a Nash candidate and write trajectory.csv and report.json.
    Solve {
        config: PathBuf,
        /// Information pattern; overrides the config.
        #[arg(long, value_enum)]
        info: Option<Info>,
        /// Output directory (default: $TSGAME_OUT_DIR or the current directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Residual tolerance; overrides the config.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Evaluate the residuals of the necessary conditions for a candidate.
    Check {
        config: PathBuf,
        candidate: PathBuf,
        #[arg(long, value_enum)]
        info: Option<Info>,
        /// report.json carrying the feedback gains (required for mps).
        #[arg(long)]
        strategies: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "game")]
        problem: Problem,
        /// Residual tolerance; overrides the config.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Cross-check the solver against the direct quadratic-program oracle.
    Oracle { config: PathBuf },
    /// Tabulate cost errors under step refinement.
    Converge {
        config: PathBuf,
        /// Comma-separated step counts, e.g. 50,100,200.
        #[arg(long = "M", value_delimiter = ',', required = true)]
        steps: Vec<usize>,
        #[arg(long, value_enum)]
        info: Option<Info>,
    },
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Degenerate(String),
    Check(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Input(_) => 1,
            Failure::Degenerate(_) => 2,
            Failure::Check(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Degenerate(m) | Failure::Check(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Degenerate { .. } | Error::NonRegressive(_) => {
                Failure::Degenerate(e.to_string())
            }
            _ => Failure::Input(e.to_string()),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code. Diagnostics go to stderr, tables to stdout.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Solve {
            config,
            info,
            out,
            tol,
        } => cmd_solve(&config, info.map(Into::into), out, tol),
        Command::Check {
            config,
            candidate,
            info,
            strategies,
            problem,
            tol,
        } => cmd_check(
            &config,
            &candidate,
            info.map(Into::into),
            strategies.as_deref(),
            problem,
            tol,
        ),
        Command::Oracle { config } => cmd_oracle(&config),
        Command::Converge {
            config,
            steps,
            info,
        } => cmd_converge(&config, &steps, info.map(Into::into)),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    }
}

fn load_config(path: &Path) -> std::result::Result<GameConfig, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    GameConfig::from_json(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn tolerance(cfg: &GameConfig, flag: Option<f64>) -> std::result::Result<f64, Failure> {
    match flag {
        Some(t) if !(t >= 0.0 && t.is_finite()) => {
            Err(Failure::Input(format!("--tol: invalid tolerance {t}")))
        }
        Some(t) => Ok(t),
        None => Ok(cfg.tolerances.residual),
    }
}

fn cmd_solve(
    config: &Path,
    info: Option<InfoPattern>,
    out: Option<PathBuf>,
    tol: Option<f64>,
) -> Outcome {
    let cfg = load_config(config)?;
    let tol = tolerance(&cfg, tol)?;
    let game = cfg.to_game()?;
    let info = info.unwrap_or(cfg.info());
    let sol = games::solve(&game, info)?;
    let out = out
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out).map_err(|e| Failure::Input(format!("{}: {e}", out.display())))?;
    let report = SolveReport::new(&game, &sol, tol);
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    let io = |p: PathBuf, bytes: &[u8]| {
        files::write_atomic(&p, bytes).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))
    };
    io(
        out.join("trajectory.csv"),
        files::trajectory_csv(&game, &sol.candidate).as_bytes(),
    )?;
    io(out.join("report.json"), format!("{json}\n").as_bytes())?;

    println!("info: {info}");
    for (i, c) in sol.costs.iter().enumerate() {
        println!("J{} = {}", i + 1, files::format_number(*c));
    }
    println!("max residual = {:.3e}", report.max_residual);
    if report.status != "ok" {
        return Err(Failure::Check(format!(
            "max residual {:.3e} exceeds tolerance {:.1e}",
            report.max_residual, tol
        )));
    }
    Ok(())
}

fn print_residual_table(rows: &[(String, pmp::ResidualReport)]) {
    println!(
        "{:<8} {:>12} {:>12} {:>12} {:>12} {:>12} {:>12}",
        "player", "state", "costate", "stationary", "transvers", "consistency", "overall"
    );
    for (name, r) in rows {
        println!(
            "{:<8} {:>12.3e} {:>12.3e} {:>12.3e} {:>12.3e} {:>12.3e} {:>12.3e}",
            name,
            r.state_eq,
            r.costate_eq,
            r.stationarity,
            r.transversality,
            r.consistency,
            r.overall
        );
    }
}

fn cmd_check(
    config: &Path,
    candidate: &Path,
    info: Option<InfoPattern>,
    strategies: Option<&Path>,
    problem: Problem,
    tol: Option<f64>,
) -> Outcome {
    let cfg = load_config(config)?;
    let tol = tolerance(&cfg, tol)?;
    let game = cfg.to_game()?;
    let info = info.unwrap_or(cfg.info());
    let text = std::fs::read_to_string(candidate)
        .map_err(|e| Failure::Input(format!("{}: {e}", candidate.display())))?;
    let cand = files::read_trajectory(&game, &text)
        .map_err(|e| Failure::Input(format!("{}: {e}", candidate.display())))?;
    let reports: Vec<(String, pmp::ResidualReport)> = match problem {
        Problem::Lagrange => {
            if game.players() != 1 {
                return Err(Failure::Input(
                    "players: the lagrange problem needs exactly 1 player".into(),
                ));
            }
            let prob = LagrangeProblem::new(
                game.scale().clone(),
                game.initial_state().clone(),
                LqModel {
                    a: game.a().clone(),
                    b: game.b(0).clone(),
                    q: game.q(0).clone(),
                    r: game.r(0, 0).clone(),
                },
            )?;
            let pc = PmpCandidate {
                x: cand.x.clone(),
                u: cand.controls.player(0).clone(),
                psi: cand.costates[0].clone(),
            };
            vec![("1".into(), pmp::pmp_residuals(&prob, &pc)?)]
        }
        Problem::Game => {
            let reps = match info {
                InfoPattern::Ol => games::ol_residuals(&game, &cand)?,
                InfoPattern::Mps => {
                    let path = strategies.ok_or_else(|| {
                        Failure::Input(
                            "--strategies: required for mps checks (a report.json from solve)"
                                .into(),
                        )
                    })?;
                    let text = std::fs::read_to_string(path)
                        .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
                    let report: SolveReport = serde_json::from_str(&text).map_err(|e| {
                        Failure::Input(format!(
                            "{}: line {}, column {}: {e}",
                            path.display(),
                            e.line(),
                            e.column()
                        ))
                    })?;
                    let table = report.strategies.ok_or_else(|| {
                        Failure::Input(format!("{}: strategies: missing", path.display()))
                    })?;
                    let profile = table.to_profile(game.scale())?;
                    games::mps_residuals(&game, &profile, &cand)?
                }
            };
            reps.into_iter()
                .enumerate()
                .map(|(i, r)| ((i + 1).to_string(), r))
                .collect()
        }
    };
    print_residual_table(&reports);
    let worst = reports.iter().map(|(_, r)| r.overall).fold(0.0, f64::max);
    if worst <= tol {
        println!("PASS: max residual {worst:.3e} <= {tol:.1e}");
        Ok(())
    } else {
        println!("FAIL: max residual {worst:.3e} > {tol:.1e}");
        Err(Failure::Check(format!(
            "max residual {worst:.3e} exceeds tolerance {tol:.1e}"
        )))
    }
}

fn cmd_oracle(config: &Path) -> Outcome {
    let cfg = load_config(config)?;
    let game = cfg.to_game()?;
    let tol = &cfg.tolerances;
    let mut failures = Vec::new();

    let stacked = oracle::stacked_nash_oracle(&game)?;
    let ol = games::solve_ol_nash(&game)?;
    let control_gap = stacked.max_difference(&ol.candidate.controls);
    let (stacked_costs, _) = games::cost(&game, &stacked)?;
    let cost_gap = stacked_costs
        .iter()
        .zip(&ol.costs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("stacked oracle vs ol solver: max control difference {control_gap:.3e}, max cost difference {cost_gap:.3e}");
    if control_gap > tol.oracle_controls {
        failures.push(format!(
            "control difference {control_gap:.3e} > {:.1e}",
            tol.oracle_controls
        ));
    }
    if cost_gap > tol.oracle_cost {
        failures.push(format!(
            "cost difference {cost_gap:.3e} > {:.1e}",
            tol.oracle_cost
        ));
    }

    let br = oracle::best_response_iteration(&game, &ControlProfile::zeros(&game), 500, 1e-12)?;
    println!(
        "best-response iteration: {} after {} sweeps{}",
        if br.converged {
            "converged"
        } else {
            "did not converge"
        },
        br.iterations,
        if br.converged {
            format!(
                ", max difference to solver {:.3e}",
                br.controls.max_difference(&ol.candidate.controls)
            )
        } else {
            String::new()
        }
    );

    let info = cfg.info();
    let sol = if info == InfoPattern::Ol {
        ol
    } else {
        games::solve(&game, info)?
    };
    for i in 0..game.players() {
        let d = games::unilateral_deviation_check(
            &game,
            &sol,
            i,
            tol.deviation_trials,
            tol.deviation_radius,
            cfg.seed(),
        )?;
        println!(
            "{info} deviation, player {}: {} trials, radius {}, max cost decrease {:.3e}",
            i + 1,
            d.trials,
            d.radius,
            d.max_cost_decrease
        );
        if d.max_cost_decrease > tol.oracle_cost {
            failures.push(format!(
                "player {} improves by {:.3e} with a unilateral deviation",
                i + 1,
                d.max_cost_decrease
            ));
        }
    }
    if failures.is_empty() {
        println!("PASS");
        Ok(())
    } else {
        println!("FAIL");
        Err(Failure::Check(failures.join("; ")))
    }
}

fn cmd_converge(config: &Path, steps: &[usize], info: Option<InfoPattern>) -> Outcome {
    let cfg = load_config(config)?;
    if !cfg.time_scale.is_sampled() {
        return Err(Failure::Input(
            "time_scale: converge needs {a, b, scheme}, not an explicit point list".into(),
        ));
    }
    if let Some(&bad) = steps.iter().find(|&&m| m == 0) {
        return Err(Failure::Input(format!("--M: invalid step count {bad}")));
    }
    let info = info.unwrap_or(cfg.info());
    let players = cfg.players;
    let references: Vec<Reference> = match &cfg.reference {
        Some(r) if r.costs.is_some() && r.extrapolate => {
            return Err(Failure::Input(
                "reference: give either \"costs\" or \"extrapolate\", not both".into(),
            ))
        }
        Some(r) if r.costs.is_some() => {
            let costs = r.costs.as_ref().unwrap();
            if costs.len() != players {
                return Err(Failure::Input(format!(
                    "reference.costs: expected {players} values, got {}",
                    costs.len()
                )));
            }
            costs.iter().map(|&c| Reference::Known(c)).collect()
        }
        Some(r) if r.extrapolate => {
            let level = r.level.unwrap_or(DEFAULT_EXTRAPOLATION_LEVEL);
            if level < 2 {
                return Err(Failure::Input("reference.level: must be at least 2".into()));
            }
            vec![Reference::Richardson(level); players]
        }
        _ => {
            return Err(Failure::Input(
                "reference: missing; give {\"costs\": [...]} or {\"extrapolate\": true}".into(),
            ))
        }
    };

    let mut needed: Vec<usize> = steps.to_vec();
    for r in &references {
        if let Reference::Richardson(m) = *r {
            needed.extend([m, m / 2]);
        }
    }
    needed.sort_unstable();
    needed.dedup();
    let cfg = Arc::new(cfg);
    let solved: Vec<(usize, crate::error::Result<Vec<f64>>)> = std::thread::scope(|s| {
        let handles: Vec<_> = needed
            .iter()
            .map(|&m| {
                let cfg = cfg.clone();
                s.spawn(move || {
                    let costs = cfg
                        .to_game_with_steps(m)
                        .and_then(|g: LinearGameSpec| games::solve(&g, info))
                        .map(|sol| sol.costs);
                    (m, costs)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("solver thread panicked"))
            .collect()
    });
    let mut costs = BTreeMap::new();
    for (m, c) in solved {
        costs.insert(m, c?);
    }

    let mut ok = true;
    for (i, reference) in references.into_iter().enumerate() {
        let table = oracle::convergence_study(steps, reference, |m| Ok(costs[&m][i]))?;
        println!(
            "player {} ({info}), reference {}",
            i + 1,
            files::format_number(table.reference)
        );
        println!(
            "{:>8} {:>24} {:>12} {:>8} {:>8}",
            "M", "J", "error", "ratio", "order"
        );
        for r in &table.rows {
            let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
            println!(
                "{:>8} {:>24} {:>12.3e} {:>8} {:>8}",
                r.steps,
                files::format_number(r.value),
                r.error,
                fmt(r.ratio),
                fmt(r.order)
            );
        }
        ok &= table.ratios_within(RATIO_BAND.0, RATIO_BAND.1);
    }
    if steps.len() < 2 {
        println!("note: a single level gives no ratio; nothing to compare");
        return Ok(());
    }
    if ok {
        println!(
            "PASS: all ratios within [{}, {}]",
            RATIO_BAND.0, RATIO_BAND.1
        );
        Ok(())
    } else {
        println!(
            "FAIL: some ratio outside [{}, {}]",
            RATIO_BAND.0, RATIO_BAND.1
        );
        Err(Failure::Check(
            "error ratios outside the first-order band".into(),
        ))
    }
}

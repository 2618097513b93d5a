//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs without the libtest harness so the lines are always
//! printed.

mod common;

use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use tsgame::games::{self, ControlProfile, InfoPattern, LinearGameSpec};
use tsgame::linsys::{self, LinearSystem};
use tsgame::oracle::{self, Reference};
use tsgame::pmp::{self, LagrangeProblem, LqModel, PmpCandidate};
use tsgame::timescale::{delta_derivative, delta_integral, sigma_shift};
use tsgame::{GridFunction, TimeScale};

use common::{
    pad, random_game, random_grid, random_matrix, random_scale, random_vector, rel, rng, GameShape,
};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(runtime: Duration, limit: Duration) -> Result<(), String> {
    ensure(runtime < limit, || {
        format!("runtime {runtime:.2?} exceeds {limit:?}")
    })
}

fn scalar(v: f64) -> DMatrix<f64> {
    DMatrix::from_element(1, 1, v)
}

/// `|lhs - rhs| / max(1, |lhs|, terms...)`, per instant, maximised.
fn rel_terms(lhs: &DMatrix<f64>, rhs: &DMatrix<f64>, terms: &[f64]) -> f64 {
    let denom = terms.iter().fold(1f64.max(lhs.amax()), |m, &t| m.max(t));
    (lhs - rhs).amax() / denom
}

fn weighted_abs_sum(f: &GridFunction, lo: usize, hi: usize) -> f64 {
    let ts = f.scale();
    (lo..hi).map(|i| f.at(i).amax() * ts.mu(i)).sum()
}

// ---------------------------------------------------------------------------

fn criterion_1() -> Check {
    let start = Instant::now();
    let mut rng = rng(101);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let steps = rng.gen_range(2..=100);
        let ts = random_scale(&mut rng, steps, 1e-3, 10.0);
        let tk = Arc::new(ts.truncated().unwrap());
        let f = random_grid(&mut rng, &ts, 2, 3);
        let g = random_grid(&mut rng, &ts, 3, 2);
        let fd = delta_derivative(&f).unwrap();
        let gd = delta_derivative(&g).unwrap();
        let fs = sigma_shift(&f).unwrap();
        let gs = sigma_shift(&g).unwrap();
        let fg = f.zip_with(&g, |a, b| a * b).unwrap();
        let fgd = delta_derivative(&fg).unwrap();
        for k in 0..tk.len() {
            let mu = ts.mu(k);
            let (fk, gk) = (f.at(k), g.at(k));
            // f^σ = f + μ f^Δ
            worst = worst.max(rel_terms(
                fs.at(k),
                &(fk + fd.at(k) * mu),
                &[fk.amax(), fd.at(k).amax() * mu],
            ));
            // (fg)^Δ = f^Δ g + f^σ g^Δ
            let t1 = fd.at(k) * gk;
            let t2 = fs.at(k) * gd.at(k);
            worst = worst.max(rel_terms(fgd.at(k), &(&t1 + &t2), &[t1.amax(), t2.amax()]));
            // (fg)^Δ = f g^Δ + f^Δ g^σ
            let t1 = fk * gd.at(k);
            let t2 = fd.at(k) * gs.at(k);
            worst = worst.max(rel_terms(fgd.at(k), &(&t1 + &t2), &[t1.amax(), t2.amax()]));
            // ∫_t^{σ(t)} f = μ f
            let t = ts.point(k);
            let lhs = delta_integral(&f, t, ts.sigma(t).unwrap()).unwrap();
            worst = worst.max(rel_terms(&lhs, &(fk * mu), &[]));
        }

        let ia = rng.gen_range(0..ts.len());
        let ib = rng.gen_range(0..ts.len());
        let (a, b) = (ts.point(ia), ts.point(ib));
        let (lo, hi) = (ia.min(ib), ia.max(ib));
        let boundary = fg.at(ib) - fg.at(ia);
        // ∫ f^σ g^Δ = fg|_a^b - ∫ f^Δ g
        let h1 = pad(&fs.zip_with(&gd, |x, y| x * y).unwrap(), &ts);
        let h2 = pad(
            &fd.zip_with(&g.truncate().unwrap(), |x, y| x * y).unwrap(),
            &ts,
        );
        let lhs = delta_integral(&h1, a, b).unwrap();
        let rhs = &boundary - delta_integral(&h2, a, b).unwrap();
        let terms = [
            boundary.amax(),
            weighted_abs_sum(&h1, lo, hi),
            weighted_abs_sum(&h2, lo, hi),
        ];
        worst = worst.max(rel_terms(&lhs, &rhs, &terms));
        // ∫ f g^Δ = fg|_a^b - ∫ f^Δ g^σ
        let h1 = pad(
            &f.truncate().unwrap().zip_with(&gd, |x, y| x * y).unwrap(),
            &ts,
        );
        let h2 = pad(&fd.zip_with(&gs, |x, y| x * y).unwrap(), &ts);
        let lhs = delta_integral(&h1, a, b).unwrap();
        let rhs = &boundary - delta_integral(&h2, a, b).unwrap();
        let terms = [
            boundary.amax(),
            weighted_abs_sum(&h1, lo, hi),
            weighted_abs_sum(&h2, lo, hi),
        ];
        worst = worst.max(rel_terms(&lhs, &rhs, &terms));
        // ∫_a^b f^Δ = f(b) - f(a)
        let fdp = pad(&fd, &ts);
        let lhs = delta_integral(&fdp, a, b).unwrap();
        let rhs = f.at(ib) - f.at(ia);
        worst = worst.max(rel_terms(
            &lhs,
            &rhs,
            &[
                f.at(ia).amax(),
                f.at(ib).amax(),
                weighted_abs_sum(&fdp, lo, hi),
            ],
        ));
        // (∫_{t0}^t f)^Δ = f
        let t0 = ts.min();
        let antider =
            GridFunction::from_fn(ts.clone(), 2, 3, |_, t| delta_integral(&f, t0, t).unwrap())
                .unwrap();
        let ad = delta_derivative(&antider).unwrap();
        for k in 0..tk.len() {
            let scale_k = (antider.at(k).amax() + antider.at(k + 1).amax()) / ts.mu(k);
            worst = worst.max(rel_terms(ad.at(k), f.at(k), &[scale_k]));
        }
    }
    let elapsed = start.elapsed();
    ensure(worst <= 1e-10, || {
        format!("max relative residual {worst:.3e} > 1e-10")
    })?;
    within(elapsed, Duration::from_secs(10))?;
    Ok(format!(
        "200 scales, max relative residual {worst:.2e}, {elapsed:.2?}"
    ))
}

fn criterion_2() -> Check {
    let start = Instant::now();
    let mut rng = rng(202);
    let mut worst_voc: f64 = 0.0;
    let mut worst_def: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.gen_range(1..=6);
        let steps = rng.gen_range(1..=100);
        let ts = random_scale(&mut rng, steps, 1e-3, 0.1);
        let a = random_matrix(&mut rng, n, n, 1.0);
        let f = random_grid(&mut rng, &ts, n, 1);
        let x0 = random_vector(&mut rng, n, 1.0);
        let sys = LinearSystem::new(a.clone(), f, ts.min(), x0).unwrap();
        let x = linsys::forward_solve(&sys).unwrap();
        let v = linsys::variation_of_constants(&sys).unwrap();
        for k in 0..x.len() {
            worst_voc = worst_voc.max(rel(x.at(k), v.at(k)));
        }
        let e = linsys::matrix_exponential(&ts, &a, ts.min()).unwrap();
        let ed = delta_derivative(&e).unwrap();
        let norm_a = a.clone().svd(false, false).singular_values.max();
        for k in 0..ed.len() {
            let r = (ed.at(k) - &a * e.at(k)).amax() / 1f64.max(e.at(k).amax());
            worst_def = worst_def.max(r / (1.0 + norm_a));
        }
    }
    let z = TimeScale::integers(30);
    let mut exact = true;
    for a in [1.0, 0.5, -0.5] {
        let e = linsys::matrix_exponential(&z, &scalar(a), 0.0).unwrap();
        for t in 0..=30 {
            exact &= e.scalar(t) == (1.0 + a).powi(t as i32);
        }
    }
    let elapsed = start.elapsed();
    ensure(worst_voc <= 1e-10, || {
        format!("forward/VoC relative mismatch {worst_voc:.3e} > 1e-10")
    })?;
    ensure(worst_def <= 1e-12, || {
        format!("e_A defining-equation residual {worst_def:.3e}(1+|A|) > 1e-12(1+|A|)")
    })?;
    ensure(exact, || {
        "scalar e_A on the integers differs from (1+a)^t".into()
    })?;
    within(elapsed, Duration::from_secs(10))?;
    Ok(format!(
        "100 systems, VoC mismatch {worst_voc:.2e}, e_A residual {worst_def:.2e}·(1+|A|), (1+a)^t exact, {elapsed:.2?}"
    ))
}

fn game1(scale: &[f64]) -> LinearGameSpec {
    LinearGameSpec::new(
        Arc::new(TimeScale::new(scale.to_vec()).unwrap()),
        scalar(0.0),
        vec![scalar(1.0), scalar(1.0)],
        vec![scalar(1.0), scalar(1.0)],
        vec![
            vec![scalar(1.0), scalar(0.0)],
            vec![scalar(0.0), scalar(1.0)],
        ],
        DVector::from_element(1, 1.0),
    )
    .unwrap()
}

fn criterion_3() -> Check {
    let close = |got: f64, want: f64, what: &str| {
        ensure((got - want).abs() <= 1e-9, || {
            format!("{what}: {got} != {want}")
        })
    };
    let ts = Arc::new(TimeScale::integers(2));
    let one = scalar(1.0);
    let lqr = pmp::solve_lq_single(
        ts.clone(),
        &scalar(0.0),
        &one,
        &one,
        &one,
        &DVector::from_element(1, 1.0),
    )
    .map_err(|e| e.to_string())?;
    close(lqr.u.scalar(0), -0.5, "LQR-1 u(0)")?;
    close(lqr.u.scalar(1), 0.0, "LQR-1 u(1)")?;
    let prob = LagrangeProblem::new(
        ts.clone(),
        DVector::from_element(1, 1.0),
        LqModel {
            a: scalar(0.0),
            b: one.clone(),
            q: one.clone(),
            r: one.clone(),
        },
    )
    .unwrap();
    close(pmp::lagrange_cost(&prob, &lqr), 0.75, "LQR-1 J")?;
    // the same numbers from the quadratic-program oracle
    let lqr_game = LinearGameSpec::new(
        ts.clone(),
        scalar(0.0),
        vec![one.clone()],
        vec![one.clone()],
        vec![vec![one.clone()]],
        DVector::from_element(1, 1.0),
    )
    .unwrap();
    let br = oracle::best_response(&lqr_game, 0, &ControlProfile::zeros(&lqr_game))
        .map_err(|e| e.to_string())?;
    close(br.control.scalar(0), -0.5, "LQR-1 oracle u(0)")?;
    close(br.cost, 0.75, "LQR-1 oracle J")?;

    let g = game1(&[0.0, 1.0, 2.0]);
    let ol = games::solve_ol_nash(&g).map_err(|e| e.to_string())?;
    let stacked = oracle::stacked_nash_oracle(&g).map_err(|e| e.to_string())?;
    for i in 0..2 {
        close(
            ol.candidate.controls.player(i).scalar(0),
            -1.0 / 3.0,
            "GAME-1 OL u(0)",
        )?;
        close(
            ol.candidate.controls.player(i).scalar(1),
            0.0,
            "GAME-1 OL u(1)",
        )?;
        close(
            stacked.player(i).scalar(0),
            -1.0 / 3.0,
            "GAME-1 oracle u(0)",
        )?;
        close(stacked.player(i).scalar(1), 0.0, "GAME-1 oracle u(1)")?;
        for (k, want) in [4.0 / 3.0, 1.0 / 3.0, 0.0].into_iter().enumerate() {
            close(ol.candidate.costates[i].scalar(k), want, "GAME-1 OL psi")?;
        }
        close(ol.costs[i], 11.0 / 18.0, "GAME-1 OL J")?;
    }
    let mps = games::solve_mps_nash(&g).map_err(|e| e.to_string())?;
    let strat = mps
        .strategies
        .as_ref()
        .ok_or("MPS solution without strategies")?;
    for i in 0..2 {
        close(strat.gains[i].scalar(0), -1.0 / 3.0, "GAME-1 MPS F(0)")?;
        close(strat.gains[i].scalar(1), 0.0, "GAME-1 MPS F(1)")?;
        for (k, want) in [11.0 / 9.0, 1.0 / 3.0, 0.0].into_iter().enumerate() {
            close(mps.candidate.costates[i].scalar(k), want, "GAME-1 MPS psi")?;
        }
    }
    Ok("LQR-1, GAME-1 OL and MPS reproduce the hand values (solvers and oracle)".into())
}

fn criterion_4() -> Check {
    let start = Instant::now();
    let mut rng = rng(404);
    let mut worst_ctrl: f64 = 0.0;
    let mut worst_dev = f64::NEG_INFINITY;
    for case in 0..100 {
        let g = random_game(&mut rng, GameShape::new(3, 4, 40));
        let ol = games::solve_ol_nash(&g).map_err(|e| format!("case {case}: {e}"))?;
        let stacked = oracle::stacked_nash_oracle(&g).map_err(|e| format!("case {case}: {e}"))?;
        worst_ctrl = worst_ctrl.max(ol.candidate.controls.max_difference(&stacked));
        let mps = games::solve_mps_nash(&g).map_err(|e| format!("case {case}: {e}"))?;
        for sol in [&ol, &mps] {
            for i in 0..g.players() {
                let d = games::unilateral_deviation_check(&g, sol, i, 100, 0.1, case as u64)
                    .map_err(|e| format!("case {case}: {e}"))?;
                worst_dev = worst_dev.max(d.max_cost_decrease);
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(worst_ctrl <= 1e-8, || {
        format!("OL vs stacked oracle control mismatch {worst_ctrl:.3e} > 1e-8")
    })?;
    ensure(worst_dev <= 1e-9, || {
        format!("deviation improves cost by {worst_dev:.3e} > 1e-9")
    })?;
    within(elapsed, Duration::from_secs(60))?;
    Ok(format!(
        "100 games, control mismatch {worst_ctrl:.2e}, max deviation gain {worst_dev:.2e}, {elapsed:.2?}"
    ))
}

fn criterion_5() -> Check {
    let mut rng = rng(505);
    let mut worst: f64 = 0.0;
    let shape = GameShape {
        min_players: 1,
        ..GameShape::new(1, 4, 40)
    };
    for case in 0..50 {
        let g = random_game(&mut rng, shape);
        let err = |e: tsgame::Error| format!("case {case}: {e}");
        let ol = games::solve_ol_nash(&g).map_err(err)?;
        let mps = games::solve_mps_nash(&g).map_err(err)?;
        let single = pmp::solve_lq_single(
            g.scale().clone(),
            g.a(),
            g.b(0),
            g.q(0),
            g.r(0, 0),
            g.initial_state(),
        )
        .map_err(err)?;
        let steps = g.scale().steps();
        for k in 0..g.scale().len() {
            for other in [&mps.candidate, &ol.candidate] {
                worst = worst.max((other.x.at(k) - single.x.at(k)).amax());
                worst = worst.max((other.costates[0].at(k) - single.psi.at(k)).amax());
                if k < steps {
                    worst = worst.max((other.controls.player(0).at(k) - single.u.at(k)).amax());
                }
            }
        }
        let prob = LagrangeProblem::new(
            g.scale().clone(),
            g.initial_state().clone(),
            LqModel {
                a: g.a().clone(),
                b: g.b(0).clone(),
                q: g.q(0).clone(),
                r: g.r(0, 0).clone(),
            },
        )
        .map_err(err)?;
        let j = pmp::lagrange_cost(&prob, &single);
        worst = worst
            .max((ol.costs[0] - j).abs())
            .max((mps.costs[0] - j).abs());
    }
    ensure(worst <= 1e-9, || {
        format!("single-player solvers disagree by {worst:.3e} > 1e-9")
    })?;
    Ok(format!(
        "50 single-player instances, max disagreement {worst:.2e}"
    ))
}

fn perturbed(
    cand: &games::NashCandidate,
    i: usize,
    k: usize,
    c: usize,
    delta: f64,
) -> games::NashCandidate {
    let u = cand.controls.player(i);
    let mut values = u.values().to_vec();
    values[k][(c, 0)] += delta;
    let mut out = cand.clone();
    out.controls = cand
        .controls
        .with_player(i, GridFunction::new(u.scale().clone(), values).unwrap());
    out
}

fn criterion_6() -> Check {
    let mut rng = rng(606);
    let mut worst_closure: f64 = 0.0;
    let mut weakest_detection = f64::INFINITY;
    let mut perturbations = 0usize;
    for case in 0..40 {
        let g = random_game(&mut rng, GameShape::new(3, 3, 10));
        let err = |e: tsgame::Error| format!("case {case}: {e}");
        let ol = games::solve_ol_nash(&g).map_err(err)?;
        let mps = games::solve_mps_nash(&g).map_err(err)?;
        let strat = mps
            .strategies
            .clone()
            .ok_or("MPS solution without strategies")?;
        worst_closure = worst_closure
            .max(
                games::ol_residuals(&g, &ol.candidate)
                    .map_err(err)?
                    .iter()
                    .map(|r| r.overall)
                    .fold(0.0, f64::max),
            )
            .max(
                games::mps_residuals(&g, &strat, &mps.candidate)
                    .map_err(err)?
                    .iter()
                    .map(|r| r.overall)
                    .fold(0.0, f64::max),
            );
        for i in 0..g.players() {
            for k in 0..g.scale().steps() {
                for c in 0..g.control_dim(i) {
                    let p = perturbed(&ol.candidate, i, k, c, 0.1);
                    let r = games::ol_residuals(&g, &p).map_err(err)?;
                    weakest_detection = weakest_detection.min(r[i].stationarity);
                    let p = perturbed(&mps.candidate, i, k, c, 0.1);
                    let r = games::mps_residuals(&g, &strat, &p).map_err(err)?;
                    weakest_detection = weakest_detection.min(r[i].stationarity);
                    perturbations += 2;
                }
            }
        }
        // single-player solver against its own checker
        let single = pmp::solve_lq_single(
            g.scale().clone(),
            g.a(),
            g.b(0),
            g.q(0),
            g.r(0, 0),
            g.initial_state(),
        )
        .map_err(err)?;
        let prob = LagrangeProblem::new(
            g.scale().clone(),
            g.initial_state().clone(),
            LqModel {
                a: g.a().clone(),
                b: g.b(0).clone(),
                q: g.q(0).clone(),
                r: g.r(0, 0).clone(),
            },
        )
        .map_err(err)?;
        worst_closure = worst_closure.max(pmp::pmp_residuals(&prob, &single).map_err(err)?.overall);
        for k in 0..g.scale().steps() {
            for c in 0..g.control_dim(0) {
                let mut values = single.u.values().to_vec();
                values[k][(c, 0)] += 0.1;
                let p = PmpCandidate {
                    u: GridFunction::new(single.u.scale().clone(), values).unwrap(),
                    ..single.clone()
                };
                weakest_detection =
                    weakest_detection.min(pmp::pmp_residuals(&prob, &p).map_err(err)?.stationarity);
                perturbations += 1;
            }
        }
    }
    ensure(worst_closure <= 1e-9, || {
        format!("solver output fails its own checker: {worst_closure:.3e} > 1e-9")
    })?;
    ensure(weakest_detection > 0.05, || {
        format!("a 0.1 control perturbation raised stationarity only to {weakest_detection:.3e}")
    })?;
    Ok(format!(
        "40 games x (OL, MPS, single), closure {worst_closure:.2e}; {perturbations} perturbations, min stationarity {weakest_detection:.3}"
    ))
}

fn criterion_7() -> Check {
    let start = Instant::now();
    let levels = [50, 100, 200];
    let lqr = oracle::convergence_study(
        &levels,
        Reference::Known(oracle::scalar_lqr_reference()),
        |m| {
            let ts = oracle::uniform_scale(0.0, 1.0, m)?;
            let one = scalar(1.0);
            let prob = LagrangeProblem::new(
                ts.clone(),
                DVector::from_element(1, 1.0),
                LqModel {
                    a: scalar(0.0),
                    b: one.clone(),
                    q: one.clone(),
                    r: one.clone(),
                },
            )?;
            let cand = pmp::solve_lq_single(
                ts,
                &scalar(0.0),
                &one,
                &one,
                &one,
                &DVector::from_element(1, 1.0),
            )?;
            Ok(pmp::lagrange_cost(&prob, &cand))
        },
    )
    .map_err(|e| e.to_string())?;
    let mut summary = vec![format!("LQR ratios {:?}", ratios(&lqr))];
    let mut ok = lqr.ratios_within(1.7, 2.3);
    for info in [InfoPattern::Ol, InfoPattern::Mps] {
        let table = oracle::convergence_study(&levels, Reference::Richardson(3200), |m| {
            let base = game1(&[0.0, 1.0]);
            let g = LinearGameSpec::new(
                oracle::uniform_scale(0.0, 1.0, m)?,
                base.a().clone(),
                vec![base.b(0).clone(), base.b(1).clone()],
                vec![base.q(0).clone(), base.q(1).clone()],
                vec![
                    vec![base.r(0, 0).clone(), base.r(0, 1).clone()],
                    vec![base.r(1, 0).clone(), base.r(1, 1).clone()],
                ],
                base.initial_state().clone(),
            )?;
            Ok(games::solve(&g, info)?.costs[0])
        })
        .map_err(|e| e.to_string())?;
        ok &= table.ratios_within(1.7, 2.3);
        summary.push(format!("{info} game ratios {:?}", ratios(&table)));
    }
    let elapsed = start.elapsed();
    ensure(ok, || {
        format!("ratio outside [1.7, 2.3]: {}", summary.join("; "))
    })?;
    within(elapsed, Duration::from_secs(30))?;
    Ok(format!("{}, {elapsed:.2?}", summary.join("; ")))
}

fn ratios(t: &oracle::ConvergenceTable) -> Vec<String> {
    t.rows
        .iter()
        .filter_map(|r| r.ratio)
        .map(|q| format!("{q:.3}"))
        .collect()
}

fn criterion_8() -> Check {
    let mut rng = rng(808);
    for case in 0..50 {
        let g = random_game(&mut rng, GameShape::new(3, 4, 30));
        let err = |e: tsgame::Error| format!("case {case}: {e}");
        let mps = games::solve_mps_nash(&g).map_err(err)?;
        let strat = mps
            .strategies
            .as_ref()
            .ok_or("MPS solution without strategies")?;
        let real = games::ol_realization(&g, strat).map_err(err)?;
        for i in 0..g.players() {
            for k in 0..g.scale().steps() {
                let (a, b) = (real.player(i).at(k), mps.candidate.controls.player(i).at(k));
                ensure(
                    a.iter()
                        .zip(b.iter())
                        .all(|(x, y)| x.to_bits() == y.to_bits()),
                    || {
                        format!(
                            "case {case}: realized control differs at player {}, step {k}",
                            i + 1
                        )
                    },
                )?;
            }
        }
        let (costs, _) = games::cost(&g, &real).map_err(err)?;
        for (i, (x, y)) in costs.iter().zip(&mps.costs).enumerate() {
            ensure(x.to_bits() == y.to_bits(), || {
                format!("case {case}: player {} cost {x:e} != {y:e}", i + 1)
            })?;
        }
    }
    Ok("50 games, realized controls and costs bit-identical".into())
}

const CLI_GAME: &str = r#"{
  "schema_version": 1,
  "time_scale": {"points": [0, 0.5, 1.25, 2]},
  "players": 2,
  "A": [[0.1, 0.3], [-0.2, 0]],
  "B": [[[1], [0]], [[0.5], [1]]],
  "Q": [[[1, 0], [0, 0.5]], [[0.5, 0.1], [0.1, 1]]],
  "R": [[[[1]], [[0]]], [[[0.2]], [[2]]]],
  "x_a": [1, -1],
  "seed": 11
}"#;

fn tsgame(args: &[&str], dir: &Path) -> Result<(i32, String, String), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_tsgame"))
        .args(args)
        .current_dir(dir)
        .env_remove(tsgame::cli::OUT_DIR_ENV)
        .output()
        .map_err(|e| e.to_string())?;
    Ok((
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    ))
}

fn criterion_9() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    std::fs::write(d.join("game.json"), CLI_GAME).map_err(|e| e.to_string())?;
    for info in ["ol", "mps"] {
        let (code, _, err) = tsgame(&["solve", "game.json", "--info", info, "--out", info], d)?;
        ensure(code == 0, || {
            format!("solve --info {info} exited {code}: {err}")
        })?;
        let csv = format!("{info}/trajectory.csv");
        let strategies = format!("{info}/report.json");
        let mut args = vec!["check", "game.json", csv.as_str(), "--info", info];
        if info == "mps" {
            args.extend(["--strategies", strategies.as_str()]);
        }
        let (code, out, err) = tsgame(&args, d)?;
        ensure(code == 0, || {
            format!("check --info {info} exited {code}: {out}{err}")
        })?;
    }
    let (code, _, err) = tsgame(
        &["solve", "game.json", "--info", "mps", "--out", "again"],
        d,
    )?;
    ensure(code == 0, || format!("second solve exited {code}: {err}"))?;
    for file in ["report.json", "trajectory.csv"] {
        let a = std::fs::read(d.join("mps").join(file)).map_err(|e| e.to_string())?;
        let b = std::fs::read(d.join("again").join(file)).map_err(|e| e.to_string())?;
        ensure(a == b, || format!("{file} differs between identical runs"))?;
    }

    let invalid: [(&str, &str, &str); 7] = [
        (
            r#""Q": [[[1, 0], [0, 0.5]], [[0.5, 0.1], [0.1, 1]]]"#,
            r#""Q": [[[1, 0], [0, 0.5]], [[0.5, 0.1], [0.1, -1]]]"#,
            "Q[2]",
        ),
        (
            r#""R": [[[[1]], [[0]]]"#,
            r#""R": [[[[-1]], [[0]]]"#,
            "R[1][1]",
        ),
        (r#""x_a": [1, -1]"#, r#""x_a": [1, -1, 3]"#, "A"),
        (
            r#"[0, 0.5, 1.25, 2]"#,
            r#"[0, 1.25, 0.5, 2]"#,
            "time_scale.points",
        ),
        (r#""B": [[[1], [0]]"#, r#""B": [[[1], [0, 2]]"#, "B[1]"),
        (r#""players": 2"#, r#""players": 3"#, "B"),
        (
            r#""schema_version": 1"#,
            r#""schema_version": 9"#,
            "schema_version",
        ),
    ];
    for (k, (from, to, field)) in invalid.iter().enumerate() {
        let text = CLI_GAME.replacen(from, to, 1);
        ensure(text != CLI_GAME, || {
            format!("invalid case {k}: mutation did not apply")
        })?;
        let name = format!("bad{k}.json");
        std::fs::write(d.join(&name), text).map_err(|e| e.to_string())?;
        let (code, _, err) = tsgame(&["solve", &name, "--out", "bad"], d)?;
        ensure(code == 1, || {
            format!("invalid case {k} exited {code}, expected 1")
        })?;
        ensure(
            err.contains(&format!(": {field}:")) || err.contains(&format!("error: {field}:")),
            || format!("invalid case {k}: diagnostic does not name {field}: {err}"),
        )?;
    }
    ensure(!d.join("bad").join("report.json").exists(), || {
        "invalid config produced a report".into()
    })?;
    Ok("solve→check exits 0 (ol, mps); 7 invalid configs exit 1 naming the field; report.json deterministic".into())
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("calculus identities", criterion_1),
        ("linear systems", criterion_2),
        ("hand-derived instances", criterion_3),
        ("oracle equivalence", criterion_4),
        ("single-player reduction", criterion_5),
        ("residual closure", criterion_6),
        ("continuous-limit convergence", criterion_7),
        ("OL realization of MPS strategies", criterion_8),
        ("CLI contract", criterion_9),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {} ({name}): PASS - {detail}", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL - {why}", k + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

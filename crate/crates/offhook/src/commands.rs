//! The four subcommands.

use std::path::Path;

use offhook_core::linalg::Vec5;
use offhook_core::sim::{DecayReport, RunNote, MIN_DECAY_SAMPLES, MIN_ORDER_POINTS};
use offhook_core::{
    bracket_matrix_f, check_c1, chen_fliess_order_study, compute_params, decay_report,
    simulate_nilpotent_closed_loop, simulate_original_closed_loop, simulate_original_open_loop,
    ApproxParams, Trajectory,
};
use serde::Serialize;

use crate::config::{ExperimentConfig, Mode};
use crate::output::{sig, write_json, write_trajectory_csv};
use crate::verify::{corrupted_f_matrix, run_suite};
use crate::CliError;

/// Slope below which the one-period expansion counts as too inaccurate.
pub const MIN_ORDER_SLOPE: f64 = 4.0 / 3.0 - 0.1;

#[derive(Serialize)]
struct ParamsReport {
    lengths: offhook_core::LengthParams,
    params: ApproxParams,
    induced_kappa: f64,
}

/// Prints `α, κ, θ, β` and optionally writes them to `params.json`.
pub fn params(cfg: &ExperimentConfig, write: bool) -> Result<(), CliError> {
    let a = compute_params(&cfg.lengths);
    let induced = ApproxParams::induced_kappa(&cfg.lengths);
    println!("alpha = {}", sig(a.alpha, 12));
    println!("kappa = {}", sig(a.kappa, 12));
    println!("theta = {}", sig(a.theta, 12));
    println!("beta  = {}", sig(a.beta, 12));
    println!(
        "kappa induced by the coordinate change = {}",
        sig(induced, 12)
    );
    if write {
        let report = ParamsReport {
            lengths: cfg.lengths,
            params: a,
            induced_kappa: induced,
        };
        let path = cfg.out.join("params.json");
        write_json(&path, &report)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

pub fn verify(cfg: &ExperimentConfig, inject_fault: bool) -> Result<(), CliError> {
    let f = if inject_fault {
        corrupted_f_matrix
    } else {
        bracket_matrix_f
    };
    let checks = run_suite(&cfg.lengths, &cfg.gains, f);
    for c in &checks {
        println!(
            "{} {}: {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
    if failed.is_empty() {
        println!("all {} checks passed", checks.len());
        Ok(())
    } else {
        Err(CliError::verification(format!(
            "{} of {} checks failed: {}",
            failed.len(),
            checks.len(),
            failed.join(", ")
        )))
    }
}

#[derive(Serialize)]
struct RunSummary<'a> {
    mode: &'static str,
    exploratory: bool,
    substeps_per_period: usize,
    nodes: usize,
    final_time: f64,
    final_state: Vec5,
    final_z: Vec5,
    decay: Option<DecayReport>,
    notes: &'a [RunNote],
    config: &'a ExperimentConfig,
}

fn run(cfg: &ExperimentConfig) -> Result<Trajectory, CliError> {
    let p = &cfg.lengths;
    let g = &cfg.gains;
    let integ = cfg.integrator();
    if matches!(
        cfg.mode,
        Mode::NilpotentClosedLoop | Mode::OriginalClosedLoop
    ) {
        check_c1(g)
            .map_err(|r| CliError::config(format!("frequency multipliers rejected: {r}")))?;
    }
    match cfg.mode {
        Mode::NilpotentClosedLoop => {
            let z0 = cfg.initial_state.as_z(p);
            simulate_nilpotent_closed_loop(&compute_params(p), g, &z0, cfg.periods, &integ)
                .map_err(CliError::from)
        }
        Mode::OriginalClosedLoop => {
            let x0 = cfg.initial_state.as_x(p)?;
            simulate_original_closed_loop(p, g, &x0, cfg.periods, &integ).map_err(CliError::from)
        }
        Mode::OriginalOpenLoop => {
            let x0 = cfg.initial_state.as_x(p)?;
            let u = cfg.open_loop_input;
            let duration = cfg.periods as f64 * g.epsilon;
            let steps = integ.substeps_per_period * cfg.periods;
            let integ = offhook_core::IntegratorConfig {
                substeps_per_period: steps,
                ..integ
            };
            let mut t = simulate_original_open_loop(p, &|_| u, &x0, duration, &integ)
                .map_err(CliError::from)?;
            // Mark every ε as a sample so the CSV stays comparable across modes.
            let stride = cfg.integrator().substeps_per_period;
            t.sample_indices = (0..t.len())
                .filter(|&i| (i * integ.record_stride).is_multiple_of(stride) || i + 1 == t.len())
                .collect();
            Ok(t)
        }
        other => Err(CliError::config(format!(
            "mode {} is not a simulation mode",
            other.label()
        ))),
    }
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let traj = run(cfg)?;
    let decay = match cfg.mode {
        Mode::OriginalOpenLoop => None,
        _ if traj.sample_indices.len() < MIN_DECAY_SAMPLES => None,
        _ => Some(decay_report(&traj)?),
    };
    let exploratory = traj.notes.contains(&RunNote::Exploratory);
    let csv_path = cfg.out.join("trajectory.csv");
    let summary_path = cfg.out.join("summary.json");
    write_trajectory_csv(&csv_path, &traj)?;
    let last = traj.len() - 1;
    let summary = RunSummary {
        mode: cfg.mode.label(),
        exploratory,
        substeps_per_period: cfg.integrator().substeps_per_period,
        nodes: traj.len(),
        final_time: traj.times[last],
        final_state: traj.states[last],
        final_z: traj.z_states()[last],
        decay: decay.clone(),
        notes: &traj.notes,
        config: cfg,
    };
    write_json(&summary_path, &summary)?;

    if exploratory {
        println!(
            "mode {} (exploratory: no convergence guarantee)",
            cfg.mode.label()
        );
    } else {
        println!("mode {}", cfg.mode.label());
    }
    for note in &traj.notes {
        if let RunNote::IllConditioned { time, det_ratio } = note {
            println!("warning: det F(x)/det F(0) = {det_ratio:.3e} at t = {time}");
        }
    }
    match decay {
        Some(d) if d.degenerate => println!(
            "decay rate: undefined (degenerate norm sequence), overshoot {}",
            sig(d.overshoot, 6)
        ),
        Some(d) => println!(
            "fitted decay rate {} (fit quality {}), overshoot {}",
            sig(d.fitted_rate, 6),
            sig(d.fit_quality, 6),
            sig(d.overshoot, 6)
        ),
        None => println!("no decay fit for this run"),
    }
    println!(
        "wrote {} and {}",
        csv_path.display(),
        summary_path.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct OrderReport<'a> {
    points: &'a [(f64, f64)],
    slope: Option<f64>,
    threshold: f64,
    verdict: &'static str,
}

fn write_order_table(path: &Path, points: &[(f64, f64)]) -> Result<(), CliError> {
    let file = std::fs::File::create(path)
        .map_err(|e| CliError::io(format!("cannot create {}: {e}", path.display())))?;
    let mut w = csv::Writer::from_writer(file);
    let err = |e: csv::Error| CliError::io(format!("{}: {e}", path.display()));
    w.write_record(["epsilon", "error"]).map_err(err)?;
    for (e, r) in points {
        w.write_record([e.to_string(), r.to_string()])
            .map_err(err)?;
    }
    w.flush()
        .map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

pub fn order_study(cfg: &ExperimentConfig) -> Result<(), CliError> {
    if cfg.eps_list.len() < MIN_ORDER_POINTS {
        return Err(CliError::config(format!(
            "order study needs at least {MIN_ORDER_POINTS} epsilon values, got {}",
            cfg.eps_list.len()
        )));
    }
    let g = &cfg.gains;
    let a = compute_params(&cfg.lengths);
    let z0 = cfg.initial_state.as_z(&cfg.lengths);
    let study = chen_fliess_order_study(&a, g.gamma, [g.k12, g.k112, g.k1112], &z0, &cfg.eps_list)
        .map_err(CliError::from)?;

    println!("{:>12}  {:>22}", "epsilon", "error");
    for (e, r) in &study.points {
        println!("{:>12}  {:>22}", e, sig(*r, 12));
    }
    let verdict = match study.slope {
        None => "trivial-pass",
        Some(s) if s >= MIN_ORDER_SLOPE => "pass",
        Some(_) => "fail",
    };
    match study.slope {
        Some(s) => println!(
            "slope {} (threshold {}): {verdict}",
            sig(s, 6),
            sig(MIN_ORDER_SLOPE, 6)
        ),
        None => println!("slope undefined (errors vanish): {verdict}"),
    }

    std::fs::create_dir_all(&cfg.out)
        .map_err(|e| CliError::io(format!("cannot create {}: {e}", cfg.out.display())))?;
    write_order_table(&cfg.out.join("order_study.csv"), &study.points)?;
    let report = OrderReport {
        points: &study.points,
        slope: study.slope,
        threshold: MIN_ORDER_SLOPE,
        verdict,
    };
    write_json(&cfg.out.join("order_study.json"), &report)?;

    if verdict == "fail" {
        return Err(CliError::verification(format!(
            "order-study slope {:.4} is below {:.4}",
            study.slope.unwrap_or(f64::NAN),
            MIN_ORDER_SLOPE
        )));
    }
    Ok(())
}

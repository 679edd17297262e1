//! Subcommand implementations.

use std::io::Write;
use std::time::Instant;

use epimm_core::minimax::{self, SearchBox};
use epimm_core::model::InfectiveState;
use epimm_core::outcomes::{self, TotalSize};
use epimm_core::sim::{self, SimConfig};
use epimm_core::spectral;
use epimm_core::strategies::{self, TauOptimalPi};
use epimm_core::Error as CoreError;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::model_file::ModelFile;
use crate::output;
use crate::{BoxArgs, CliError, EvaluateArgs, GridArgs, GridObjective, MinimaxArgs, MinimaxObjective, SimulateArgs};

/// Quantities that are undefined for the given model exit with the
/// missing-input code; everything else is a validation failure.
fn core_err(e: CoreError) -> CliError {
    match e {
        CoreError::AllRecoveryZero
        | CoreError::ZeroRecoveryGroup { .. }
        | CoreError::SingularResidenceMatrix => CliError::MissingInput(e.to_string()),
        other => CliError::Validation(other.to_string()),
    }
}

fn simplex_json(pi: &epimm_core::model::SimplexPoint<f64>) -> Value {
    output::float_array(pi.probs().iter().copied())
}

impl From<BoxArgs> for SearchBox<f64> {
    fn from(args: BoxArgs) -> Self {
        SearchBox {
            q_lo: args.q_lo,
            q_hi: args.q_hi,
            pi_floor: args.pi_floor,
            multistarts: args.multistarts,
            tol: args.tol,
        }
    }
}

pub fn strategy(model_path: &str) -> Result<(), CliError> {
    let mf = ModelFile::load(model_path)?;
    let report = strategies::strategy_report(&mf.params);

    let mut obj = Map::new();
    obj.insert("chi".into(), report.chi.into());
    obj.insert(
        "omega".into(),
        report.omega.map_or(Value::Null, Value::from),
    );
    obj.insert("condition_ok".into(), report.condition_ok.into());
    obj.insert(
        "boundary_groups".into(),
        Value::Array(report.boundary_groups.iter().map(|&i| i.into()).collect()),
    );
    obj.insert(
        "tau_optimal_pi".into(),
        report
            .tau_optimal_pi
            .as_ref()
            .map_or(Value::Null, simplex_json),
    );
    obj.insert(
        "r0_optimal_pi".into(),
        report
            .r0_optimal_pi
            .as_ref()
            .map_or(Value::Null, simplex_json),
    );
    obj.insert(
        "adversarial_Q".into(),
        output::matrix_array(report.adversarial_q.rates()),
    );

    if let Some(r) = &mf.r {
        // steer susceptibles toward the tau-optimal distribution when it is
        // interior, otherwise toward the R0-optimal one
        let target = report
            .tau_optimal_pi
            .as_ref()
            .filter(|pi| pi.is_interior())
            .map(|pi| ("tau_optimal", pi.clone()))
            .or_else(|| {
                report
                    .r0_optimal_pi
                    .as_ref()
                    .map(|pi| ("r0_optimal", pi.clone()))
            });
        let controls = match target {
            Some((label, pi)) => {
                let bc = strategies::border_controls(r, &pi).map_err(core_err)?;
                json!({
                    "target": label,
                    "target_pi": simplex_json(&pi),
                    "admittance": output::matrix_array(&bc.admittance),
                    "controlled_R": output::matrix_array(bc.modified.rates()),
                    "one_way_edges": bc.one_way_edges,
                })
            }
            None => Value::Null,
        };
        obj.insert("border_controls".into(), controls);
    }

    output::print_json(&Value::Object(obj));
    Ok(())
}

pub fn evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    let mf = ModelFile::load(&args.model)?;
    let pi = mf.susceptible_distribution()?;
    let q = mf.infective_migration()?;
    let all = !(args.tau || args.r0 || args.extinction || args.total_size);

    let mut obj = Map::new();
    if args.tau || all {
        let tau = spectral::tau(&mf.params, &pi, q).map_err(core_err)?;
        obj.insert("tau".into(), tau.into());
    }
    if args.r0 || all {
        let r0 = spectral::r0(&mf.params, &pi, q).map_err(core_err)?;
        obj.insert("r0".into(), r0.into());
    }
    if args.extinction || all {
        let ext = outcomes::extinction_probs(&mf.params, &pi, q).map_err(core_err)?;
        obj.insert("q".into(), output::float_array(ext.iter().copied()));
    }
    if args.total_size || all {
        match outcomes::expected_total_size(&mf.params, &pi, q).map_err(core_err)? {
            TotalSize::Finite(x) => {
                obj.insert("total_size".into(), output::float_array(x.iter().copied()));
                obj.insert("total_size_finite".into(), true.into());
            }
            TotalSize::Infinite { spectral_radius } => {
                obj.insert("total_size".into(), Value::Null);
                obj.insert("total_size_finite".into(), false.into());
                obj.insert("lambda_spectral_radius".into(), spectral_radius.into());
            }
        }
    }
    output::print_json(&Value::Object(obj));
    Ok(())
}

pub fn minimax(args: &MinimaxArgs) -> Result<(), CliError> {
    let mf = ModelFile::load(&args.model)?;
    let bx: SearchBox<f64> = args.search.into();
    let start = Instant::now();
    let (label, result) = match args.objective {
        MinimaxObjective::Tau => (
            "tau",
            minimax::minimax_tau(&mf.params, &bx).map_err(core_err)?,
        ),
        MinimaxObjective::R0 => (
            "r0",
            minimax::minimax_r0(&mf.params, &bx).map_err(core_err)?,
        ),
    };
    let wall = start.elapsed().as_secs_f64();
    let value = json!({
        "objective": label,
        "inf_sup": result.inf_sup,
        "sup_inf": result.sup_inf,
        "gap": result.gap,
        "pi_arg": simplex_json(&result.pi_arg),
        "Q_arg": output::matrix_array(result.q_arg.rates()),
        "evaluations": result.evaluations,
        "wall_time_s": wall,
    });
    output::print_json(&value);
    Ok(())
}

fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    (0..steps)
        .map(|k| lo + (hi - lo) * k as f64 / (steps - 1) as f64)
        .collect()
}

pub fn grid(args: &GridArgs) -> Result<(), CliError> {
    for (label, lo, hi, steps) in [
        ("gamma1", args.gamma1_lo, args.gamma1_hi, args.gamma1_steps),
        ("gamma2", args.gamma2_lo, args.gamma2_hi, args.gamma2_steps),
    ] {
        if steps < 2 {
            return Err(CliError::Validation(format!(
                "{label}-steps must be at least 2"
            )));
        }
        if !(lo > 0.0 && lo <= hi) {
            return Err(CliError::Validation(format!(
                "{label} range must satisfy 0 < lo <= hi"
            )));
        }
    }
    if !(args.beta1 > 0.0 && args.beta2 > 0.0) {
        return Err(CliError::Validation(
            "contact rates must be positive".into(),
        ));
    }
    let bx: SearchBox<f64> = args.search.into();
    let gamma1 = linspace(args.gamma1_lo, args.gamma1_hi, args.gamma1_steps);
    let gamma2 = linspace(args.gamma2_lo, args.gamma2_hi, args.gamma2_steps);
    let points: Vec<(f64, f64)> = gamma1
        .iter()
        .flat_map(|&g1| gamma2.iter().map(move |&g2| (g1, g2)))
        .collect();

    let objective = args.objective;
    let (beta1, beta2) = (args.beta1, args.beta2);
    let rows: Vec<Result<String, CliError>> = points
        .par_iter()
        .map(|&(g1, g2)| {
            let params = epimm_core::model::ModelParams::new(vec![beta1, beta2], vec![g1, g2])
                .map_err(core_err)?;
            let chi = strategies::chi(&params);
            let omega = strategies::omega(&params).map_err(core_err)?;
            let tau_opt = strategies::tau_optimal_pi(&params);
            let condition_ok = matches!(tau_opt, TauOptimalPi::Interior(_));

            // the effective tau-optimal distribution: closed form inside the
            // condition region, numerical minimizer outside it
            let pi_eff = || -> Result<epimm_core::model::SimplexPoint<f64>, CliError> {
                match tau_opt.point() {
                    Some(pi) => Ok(pi.clone()),
                    None => Ok(minimax::inf_pi_sup_q_tau(&params, &bx)
                        .map_err(core_err)?
                        .pi_arg),
                }
            };

            let value = match objective {
                GridObjective::Tau => {
                    minimax::inf_pi_sup_q_tau(&params, &bx)
                        .map_err(core_err)?
                        .value
                }
                GridObjective::R0Ratio => {
                    let pi = pi_eff()?;
                    let sup = minimax::sup_r0_over_q(&params, &pi, &bx).map_err(core_err)?;
                    (sup.value / omega).ln()
                }
                GridObjective::TauDiff => {
                    let pi_star = pi_eff()?;
                    let pi_tilde = strategies::r0_optimal_pi(&params).map_err(core_err)?;
                    let sup_tilde =
                        minimax::sup_tau_over_q(&params, &pi_tilde, &bx).map_err(core_err)?;
                    let sup_star =
                        minimax::sup_tau_over_q(&params, &pi_star, &bx).map_err(core_err)?;
                    sup_tilde.value - sup_star.value
                }
            };
            Ok(format!(
                "{},{},{},{},{}",
                output::csv_float(g1),
                output::csv_float(g2),
                output::csv_float(value),
                condition_ok,
                omega > 1.0
            ))
        })
        .collect();

    let mut file = std::fs::File::create(&args.out)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", args.out)))?;
    let mut text = String::from("gamma1,gamma2,value,condition_ok,omega_gt_1\n");
    for row in rows {
        text.push_str(&row?);
        text.push('\n');
    }
    file.write_all(text.as_bytes())
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", args.out)))?;
    Ok(())
}

fn parse_y0(spec: &Option<String>, m: usize) -> Result<InfectiveState, CliError> {
    match spec {
        None => Ok(InfectiveState::single(m, 0)),
        Some(text) => {
            let counts: Result<Vec<u64>, _> =
                text.split(',').map(|tok| tok.trim().parse::<u64>()).collect();
            let counts = counts
                .map_err(|e| CliError::Validation(format!("invalid y0 '{text}': {e}")))?;
            if counts.len() != m {
                return Err(CliError::Validation(format!(
                    "y0 must list {m} counts, got {}",
                    counts.len()
                )));
            }
            Ok(InfectiveState::new(counts))
        }
    }
}

pub fn simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let mf = ModelFile::load(&args.model)?;
    let cfg = SimConfig {
        seed: args.seed,
        replicates: args.replicates,
        extinction_cap: args.cap,
        t_max: args.t_max.unwrap_or(f64::INFINITY),
    };
    cfg.validate()
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let y0 = parse_y0(&args.y0, mf.params.m())?;
    let q = mf.infective_migration()?;

    if let Some(n_pop) = args.finite_n {
        let r = mf.r.as_ref().ok_or_else(|| {
            CliError::MissingInput("finite-population simulation needs R in the model file".into())
        })?;
        let est = sim::mc_minor_outbreak(&mf.params, r, q, n_pop, &y0, &cfg)
            .map_err(core_err)?;
        let value = json!({
            "mode": "finite_population",
            "population": n_pop,
            "minor_outbreak_fraction": est.fraction,
            "stderr": est.stderr,
            "minor_outbreak_threshold": est.threshold,
            "replicates": cfg.replicates,
            "seed": cfg.seed,
            "extinction_cap": cfg.extinction_cap,
            "y0": y0.counts(),
        });
        output::print_json(&value);
        return Ok(());
    }

    let pi = mf.susceptible_distribution()?;
    let (estimate, stderr) =
        sim::mc_extinction(&mf.params, &pi, q, &y0, &cfg).map_err(core_err)?;
    let total = match sim::mc_total_size(&mf.params, &pi, q, &y0, &cfg) {
        Ok(est) => json!({
            "mean": est.mean,
            "stderr": est.stderr,
            "capped_fraction": est.capped_fraction,
            "extinct_replicates": est.extinct_replicates,
        }),
        Err(_) => Value::Null, // no replicate went extinct
    };
    let value = json!({
        "mode": "branching",
        "extinction": { "estimate": estimate, "stderr": stderr },
        "total_size_over_extinct": total,
        "replicates": cfg.replicates,
        "seed": cfg.seed,
        "extinction_cap": cfg.extinction_cap,
        "y0": y0.counts(),
    });
    output::print_json(&value);
    Ok(())
}

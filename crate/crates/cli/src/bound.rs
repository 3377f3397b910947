//! `fdsm bound`: print an a-priori optimality-gap bound as `n,bound` CSV.

use fdsm::distributed::distributed_rate_bound_curve;
use fdsm::solver::{log_rate_bound, rate_bound_curve};
use fdsm::Error;

use crate::config::{BoundKind, CliError, ExperimentConfig};

/// Parameter combinations the theory rejects (step hypothesis, increasing
/// schedules) are configuration errors, not runtime failures.
fn as_config_error(e: Error) -> CliError {
    CliError::config(e.to_string())
}

pub fn cmd_bound(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let n_max = cfg
        .n_max
        .unwrap_or_else(|| cfg.stop.max_iters.unwrap_or(500));
    let steps = cfg.steps();
    let curve: Vec<f64> = match cfg.bound {
        BoundKind::Rate => rate_bound_curve(cfg.dist0_sq, cfg.c, &steps, cfg.tau, cfg.a, n_max)
            .map_err(as_config_error)?,
        BoundKind::Log => {
            let Some(alpha) = cfg.alpha else {
                return Err(CliError::config(
                    "bound = log requires alpha (the schedule is alpha/(n+1))",
                ));
            };
            (0..=n_max)
                .map(|n| log_rate_bound(cfg.dist0_sq, cfg.c, alpha, cfg.tau, cfg.a, n))
                .collect::<Result<_, _>>()
                .map_err(as_config_error)?
        }
        BoundKind::Distributed => distributed_rate_bound_curve(
            cfg.m,
            cfg.dist0_sq,
            cfg.c,
            cfg.l_max,
            &steps,
            cfg.tau,
            cfg.a,
            n_max,
        )
        .map_err(as_config_error)?,
    };

    let mut out = String::from("n,bound\n");
    for (n, b) in curve.iter().enumerate() {
        out.push_str(&format!("{n},{b}\n"));
    }
    print!("{out}");
    Ok(())
}

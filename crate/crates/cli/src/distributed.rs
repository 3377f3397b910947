//! `fdsm distributed`: the averaged multi-worker recursion.
//!
//! Workers come from `worker<j>.*` config keys. Without any, a built-in
//! two-worker demo runs: halfspace constraints `x1 <= 0` and `x2 <= 0` with
//! shifted l1 objectives centered at (2,0) and (0,2) plus a small quadratic
//! term, whose pooled optimum sits at the origin.

use std::path::Path;
use std::sync::Arc;

use fdsm::distributed::{run_distributed, WorkerSpec};
use fdsm::objectives::{add_quadratic, l1_composite, translate, SubgradientOracle};
use fdsm::operators::{BallProjection, BoxProjection, FneOperator, HalfspaceProjection};
use fdsm::solver::{DelaySchedule, RunOptions};
use fdsm::transforms::IdentityMap;
use fdsm::DenseVector;

use crate::config::{CliError, ConstraintSpec, ExperimentConfig, WorkerConfig};
use crate::report::{stop_reason_name, write_trace};

fn build_operator(spec: &ConstraintSpec) -> Result<Arc<dyn FneOperator>, CliError> {
    Ok(match spec {
        ConstraintSpec::Halfspace { normal, offset } => Arc::new(HalfspaceProjection::new(
            DenseVector::from_vec(normal.clone()),
            *offset,
        )?),
        ConstraintSpec::Box { lo, hi } => Arc::new(BoxProjection::new(
            DenseVector::from_vec(lo.clone()),
            DenseVector::from_vec(hi.clone()),
        )?),
        ConstraintSpec::Ball { center, radius } => Arc::new(BallProjection::new(
            DenseVector::from_vec(center.clone()),
            *radius,
        )?),
    })
}

fn build_objective(
    dim: usize,
    center: &[f64],
    mu: f64,
) -> Result<Arc<dyn SubgradientOracle>, CliError> {
    let l1: Arc<dyn SubgradientOracle> = Arc::new(l1_composite(Arc::new(IdentityMap::new(dim))));
    let shifted: Arc<dyn SubgradientOracle> = if center.iter().all(|c| *c == 0.0) {
        l1
    } else {
        Arc::new(translate(l1, DenseVector::from_vec(center.to_vec()))?)
    };
    Ok(if mu > 0.0 {
        Arc::new(add_quadratic(shifted, mu, DenseVector::zeros(dim))?)
    } else {
        shifted
    })
}

fn default_workers() -> Vec<WorkerConfig> {
    vec![
        WorkerConfig {
            constraint: ConstraintSpec::Halfspace {
                normal: vec![1.0, 0.0],
                offset: 0.0,
            },
            objective_center: vec![2.0, 0.0],
            tau: 1,
        },
        WorkerConfig {
            constraint: ConstraintSpec::Halfspace {
                normal: vec![0.0, 1.0],
                offset: 0.0,
            },
            objective_center: vec![0.0, 2.0],
            tau: 3,
        },
    ]
}

pub fn cmd_distributed(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    trace: bool,
) -> Result<(), CliError> {
    let (worker_cfgs, dim, mu) = if cfg.workers.is_empty() {
        // The demo objective is strictly convex so the run has a unique
        // optimum; an explicit `mu` key still wins.
        let mu = if cfg.mu > 0.0 { cfg.mu } else { 0.1 };
        (default_workers(), 2, mu)
    } else {
        (cfg.workers.clone(), cfg.dim, cfg.mu)
    };

    let mut workers = Vec::with_capacity(worker_cfgs.len());
    for w in &worker_cfgs {
        workers.push(WorkerSpec::new(
            build_operator(&w.constraint)?,
            build_objective(dim, &w.objective_center, mu)?,
            DelaySchedule::Cyclic(w.tau),
        ));
    }

    let x0 = match &cfg.x0 {
        Some(coords) => {
            if coords.len() != dim {
                return Err(CliError::config(format!(
                    "x0 has {} coordinates but dim = {dim}",
                    coords.len()
                )));
            }
            DenseVector::from_vec(coords.clone())
        }
        None => DenseVector::zeros(dim),
    };

    let steps = cfg.steps();
    let options = RunOptions::default();
    let (x, run) = run_distributed(&workers, &x0, &steps, &cfg.stop, &options)?;

    let coords: Vec<String> = x.iter().map(|v| format!("{v}")).collect();
    println!(
        "distributed: m = {}, dim = {dim}, {} rounds (status: {})",
        workers.len(),
        run.iterations(),
        stop_reason_name(run.status)
    );
    println!("final point: [{}]", coords.join(", "));
    if let Some(last) = run.records.last() {
        println!("pooled objective: {}", last.f_next);
        println!("fix residual: {}", last.fix_residual);
    }
    println!("best objective: {}", run.best_f());
    let calls: Vec<String> = run
        .worker_oracle_calls
        .iter()
        .map(|c| c.to_string())
        .collect();
    println!("worker oracle calls: [{}]", calls.join(", "));

    if trace {
        let path = out_dir.join("distributed_trace.csv");
        write_trace(&path, &run)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

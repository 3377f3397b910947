//! `fdsm sweep`: grid search over (transform, tau, a, a0).
//!
//! Every cell shares the same mask (the global seed draws it), so rows are
//! comparable. Cells run in parallel but rows are emitted in deterministic
//! lexicographic cell order; reruns produce identical bytes except for the
//! `elapsed_ms` column.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use fdsm::inpainting::{build_problem, psnr, TransformKind};
use fdsm::solver::{DelaySchedule, RunOptions, StepSchedule};
use fdsm::transforms::ImageGrid;
use fdsm::DenseVector;

use crate::config::{CliError, ExperimentConfig};
use crate::inpaint::{check_transform_fits, load_original};
use crate::report::write_trace;

pub const SWEEP_HEADER: &str = "seed,transform,tau,a,a0,iters,elapsed_ms,oracle_calls,psnr,best_f";
pub const BEST_HEADER: &str = "transform,tau,a,a0,psnr,best_f";

#[derive(Clone, Copy)]
struct Cell {
    transform: TransformKind,
    tau: usize,
    a: f64,
    a0: f64,
}

struct CellResult {
    cell: Cell,
    iters: usize,
    elapsed_ms: f64,
    oracle_calls: u64,
    psnr: f64,
    best_f: f64,
}

fn run_cell(
    cfg: &ExperimentConfig,
    original: &ImageGrid,
    cell: Cell,
    out_dir: &Path,
    trace: bool,
) -> Result<CellResult, CliError> {
    let started = Instant::now();
    // Same (ratio, seed) per cell, so every cell sees the identical mask.
    let problem = build_problem(original, cfg.ratio, cfg.seed, cell.transform)?;
    let steps = StepSchedule::Harmonic {
        a0: cell.a0,
        a: cell.a,
        tau: cell.tau,
    };
    let delays = DelaySchedule::Cyclic(cell.tau);
    let options = RunOptions::default();

    let pixels = problem.damaged.pixel_count();
    let mut planes = Vec::with_capacity(problem.operators.len());
    let mut traces = Vec::with_capacity(problem.operators.len());
    for op in &problem.operators {
        let x0 = DenseVector::zeros(pixels);
        let (plane, t) = fdsm::solver::run_fdsm(
            op,
            &problem.objective,
            &x0,
            &steps,
            &delays,
            &cfg.stop,
            None,
            &options,
        )?;
        planes.push(plane);
        traces.push(t);
    }
    let restored =
        ImageGrid::from_channels(problem.damaged.height(), problem.damaged.width(), &planes)?;

    if trace {
        for (c, t) in traces.iter().enumerate() {
            let name = format!(
                "trace_{}_{}_{}_{}_c{c}.csv",
                cell.transform, cell.tau, cell.a, cell.a0
            );
            write_trace(&out_dir.join(name), t)?;
        }
    }

    Ok(CellResult {
        cell,
        iters: traces[0].iterations(),
        elapsed_ms: started.elapsed().as_secs_f64() * 1e3,
        oracle_calls: traces.iter().map(|t| t.oracle_calls).sum(),
        psnr: psnr(original, &restored)?,
        best_f: traces.iter().map(|t| t.best_f()).sum(),
    })
}

pub fn cmd_sweep(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    jobs: Option<usize>,
    trace: bool,
) -> Result<(), CliError> {
    if jobs == Some(0) {
        return Err(CliError::config("--jobs must be at least 1"));
    }
    let original = load_original(cfg)?;
    for kind in &cfg.sweep.transform {
        check_transform_fits(*kind, &original)?;
    }

    let mut cells = Vec::with_capacity(cfg.sweep.cell_count());
    for &transform in &cfg.sweep.transform {
        for &tau in &cfg.sweep.tau {
            for &a in &cfg.sweep.a {
                for &a0 in &cfg.sweep.a0 {
                    cells.push(Cell {
                        transform,
                        tau,
                        a,
                        a0,
                    });
                }
            }
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::runtime(format!("cannot start worker pool: {e}")))?;
    // Parallel execution, order-preserving collect: row order stays the cell
    // order no matter how the pool schedules the work.
    let results: Result<Vec<CellResult>, CliError> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| run_cell(cfg, &original, *cell, out_dir, trace))
            .collect()
    });
    let results = results?;

    let mut rows = String::from(SWEEP_HEADER);
    rows.push('\n');
    for r in &results {
        writeln!(
            rows,
            "{},{},{},{},{},{},{:.3},{},{},{}",
            cfg.seed,
            r.cell.transform,
            r.cell.tau,
            r.cell.a,
            r.cell.a0,
            r.iters,
            r.elapsed_ms,
            r.oracle_calls,
            r.psnr,
            r.best_f,
        )
        .expect("writing to a String cannot fail");
    }
    let sweep_path = out_dir.join("sweep.csv");
    std::fs::write(&sweep_path, rows)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", sweep_path.display())))?;

    // Best cell per (transform, tau) group, ties resolved by cell order.
    let mut best = String::from(BEST_HEADER);
    best.push('\n');
    let mut overall: Option<&CellResult> = None;
    for &transform in &cfg.sweep.transform {
        for &tau in &cfg.sweep.tau {
            let winner = results
                .iter()
                .filter(|r| r.cell.transform == transform && r.cell.tau == tau)
                .reduce(|acc, r| if r.psnr > acc.psnr { r } else { acc });
            if let Some(w) = winner {
                writeln!(
                    best,
                    "{},{},{},{},{},{}",
                    transform, tau, w.cell.a, w.cell.a0, w.psnr, w.best_f
                )
                .expect("writing to a String cannot fail");
                if overall.is_none_or(|o| w.psnr > o.psnr) {
                    overall = Some(w);
                }
            }
        }
    }
    let best_path = out_dir.join("sweep_best.csv");
    std::fs::write(&best_path, best)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", best_path.display())))?;

    println!(
        "sweep: {} cells ({} transforms x {} tau x {} a x {} a0), seed {}",
        cells.len(),
        cfg.sweep.transform.len(),
        cfg.sweep.tau.len(),
        cfg.sweep.a.len(),
        cfg.sweep.a0.len(),
        cfg.seed
    );
    if let Some(w) = overall {
        println!(
            "best cell: transform {}, tau {}, a {}, a0 {} -> PSNR {} dB",
            w.cell.transform,
            w.cell.tau,
            w.cell.a,
            w.cell.a0,
            crate::report::db(w.psnr)
        );
    }
    println!("wrote {}", sweep_path.display());
    println!("wrote {}", best_path.display());
    Ok(())
}

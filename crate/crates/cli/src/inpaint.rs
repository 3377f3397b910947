//! `fdsm inpaint`: damage an image, restore it, report PSNR.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use fdsm::inpainting::{
    build_problem, gradient_image, psnr, read_image, write_image, InpaintingProblem, TransformKind,
};
use fdsm::objectives::{l1_composite, make_eps_oracle};
use fdsm::operators::BallProjection;
use fdsm::solver::{run_fdsm, run_inexact, EpsSchedule, RunOptions, RunTrace};
use fdsm::transforms::ImageGrid;
use fdsm::DenseVector;

use crate::config::{CliError, ExperimentConfig};
use crate::report::{db, stop_reason_name, write_trace};

/// Loads the configured image, or falls back to the synthetic gradient.
pub fn load_original(cfg: &ExperimentConfig) -> Result<ImageGrid, CliError> {
    match &cfg.image {
        Some(path) => read_image(path)
            .map_err(|e| CliError::config(format!("cannot load {}: {e}", path.display()))),
        None => Ok(gradient_image(cfg.size, cfg.size, cfg.channels)),
    }
}

/// Haar pyramids need a square power-of-two image; reject the mismatch up
/// front as a configuration error instead of failing mid-run.
pub fn check_transform_fits(kind: TransformKind, image: &ImageGrid) -> Result<(), CliError> {
    let needs_square_pow2 = matches!(kind, TransformKind::H | TransformKind::G);
    let side = image.height();
    let ok = side == image.width() && side >= 2 && side.is_power_of_two();
    if needs_square_pow2 && !ok {
        return Err(CliError::config(format!(
            "transform {kind} needs a square power-of-two image, got {}x{}",
            image.height(),
            image.width()
        )));
    }
    Ok(())
}

fn channel_seed(seed: u64, channel: usize) -> u64 {
    seed ^ (channel as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Restores every channel with the configured solver variant: exact runs by
/// default, the epsilon oracle when `eps0 > 0`, the guarded iteration when
/// `guard_radius` is set.
pub fn run_restore(
    cfg: &ExperimentConfig,
    problem: &InpaintingProblem,
) -> Result<(ImageGrid, Vec<RunTrace>), CliError> {
    let pixels = problem.damaged.pixel_count();
    let steps = cfg.steps();
    let options = RunOptions::default();
    let guard = match cfg.guard_radius {
        Some(r) => Some(BallProjection::new(DenseVector::zeros(pixels), r)?),
        None => None,
    };
    let mut planes = Vec::with_capacity(problem.operators.len());
    let mut traces = Vec::with_capacity(problem.operators.len());
    for (c, op) in problem.operators.iter().enumerate() {
        let x0 = DenseVector::zeros(pixels);
        let (plane, trace) = if cfg.eps0 > 0.0 {
            let oracle = make_eps_oracle(
                Arc::new(l1_composite(Arc::clone(&problem.transform))),
                cfg.eps_mode,
            );
            run_inexact(
                op,
                &oracle,
                &x0,
                &steps,
                &cfg.delay,
                &cfg.stop,
                &EpsSchedule::Harmonic { eps0: cfg.eps0 },
                channel_seed(cfg.seed, c),
                guard.as_ref(),
                &options,
            )?
        } else {
            run_fdsm(
                op,
                &problem.objective,
                &x0,
                &steps,
                &cfg.delay,
                &cfg.stop,
                guard.as_ref(),
                &options,
            )?
        };
        planes.push(plane);
        traces.push(trace);
    }
    let restored =
        ImageGrid::from_channels(problem.damaged.height(), problem.damaged.width(), &planes)?;
    Ok((restored, traces))
}

fn image_name(stem: &str, channels: usize) -> String {
    let ext = if channels == 3 { "ppm" } else { "pgm" };
    format!("{stem}.{ext}")
}

pub fn cmd_inpaint(cfg: &ExperimentConfig, out_dir: &Path, trace: bool) -> Result<(), CliError> {
    let original = load_original(cfg)?;
    check_transform_fits(cfg.transform, &original)?;
    let problem = build_problem(&original, cfg.ratio, cfg.seed, cfg.transform)?;
    let (restored, traces) = run_restore(cfg, &problem)?;

    let damaged_path: PathBuf = out_dir.join(image_name("damaged", original.channels()));
    let restored_path: PathBuf = out_dir.join(image_name("restored", original.channels()));
    write_image(&damaged_path, &problem.damaged)?;
    write_image(&restored_path, &restored)?;

    let psnr_damaged = psnr(&original, &problem.damaged)?;
    let psnr_restored = psnr(&original, &restored)?;
    let first = &traces[0];
    let oracle_calls: u64 = traces.iter().map(|t| t.oracle_calls).sum();

    println!(
        "inpaint: {}x{}x{}, ratio {}, transform {}, seed {}",
        original.height(),
        original.width(),
        original.channels(),
        cfg.ratio,
        cfg.transform,
        cfg.seed
    );
    println!(
        "hidden pixels: {}",
        original.pixel_count() - problem.mask.observed_count()
    );
    println!("damaged PSNR: {} dB", db(psnr_damaged));
    println!(
        "restored PSNR: {} dB ({:+.2} dB)",
        db(psnr_restored),
        psnr_restored - psnr_damaged
    );
    println!(
        "iterations: {} per channel (status: {}), oracle calls: {}",
        first.iterations(),
        stop_reason_name(first.status),
        oracle_calls
    );

    if trace {
        for (c, t) in traces.iter().enumerate() {
            let path = out_dir.join(format!("trace_c{c}.csv"));
            write_trace(&path, t)?;
            println!("wrote {}", path.display());
        }
    }
    println!("wrote {}", damaged_path.display());
    println!("wrote {}", restored_path.display());
    Ok(())
}

//! Demo logic, kept free of JavaScript types so it compiles and tests on the
//! host. The wasm-bindgen wrappers in `lib.rs` are thin shims over this.

use std::str::FromStr;

use fdsm::inpainting::{build_problem, psnr, restore, TransformKind};
use fdsm::objectives::{l1_composite, SubgradientOracle};
use fdsm::operators::BoxProjection;
use fdsm::solver::{rate_bound_curve, run_fdsm, DelaySchedule, RunOptions, StepSchedule, StopRule};
use fdsm::transforms::{IdentityMap, ImageGrid};
use fdsm::{DenseVector, Error};

use std::sync::Arc;

/// Synthetic test card: a smooth diagonal gradient with a bright disk and a
/// dark rectangle, so both the difference and the Haar transforms have
/// structure to exploit.
pub fn scene(size: usize) -> ImageGrid {
    let mut img = ImageGrid::zeros(size, size, 1);
    let s = (size - 1).max(1) as f64;
    for i in 0..size {
        for j in 0..size {
            let y = i as f64 / s;
            let x = j as f64 / s;
            let mut v = 0.25 + 0.5 * (x + y) / 2.0;
            let (dx, dy) = (x - 0.32, y - 0.36);
            if (dx * dx + dy * dy).sqrt() < 0.18 {
                v = 0.95;
            }
            if (0.55..0.82).contains(&x) && (0.22..0.48).contains(&y) {
                v = 0.12;
            }
            img.set(i, j, 0, v);
        }
    }
    img
}

/// Grayscale grid to RGBA bytes for `putImageData`, row-major, alpha 255.
pub fn to_rgba(img: &ImageGrid) -> Vec<u8> {
    let mut out = Vec::with_capacity(img.pixel_count() * 4);
    for i in 0..img.height() {
        for j in 0..img.width() {
            let v = (img.get(i, j, 0).clamp(0.0, 1.0) * 255.0).round() as u8;
            out.extend_from_slice(&[v, v, v, 255]);
        }
    }
    out
}

pub struct RestoreSummary {
    pub damaged: ImageGrid,
    pub restored: ImageGrid,
    pub psnr_damaged: f64,
    pub psnr_restored: f64,
    pub oracle_calls: u64,
    pub iterations: usize,
}

/// Damages `original` with a seeded random mask and restores it.
#[allow(clippy::too_many_arguments)]
pub fn run_restore(
    original: &ImageGrid,
    ratio: f64,
    seed: u64,
    transform: &str,
    tau: usize,
    a: f64,
    a0: f64,
    iters: usize,
) -> Result<RestoreSummary, Error> {
    let kind = TransformKind::from_str(transform)?;
    let problem = build_problem(original, ratio, seed, kind)?;
    let steps = StepSchedule::Harmonic { a0, a, tau };
    let (restored, traces) = restore(
        &problem,
        &steps,
        &DelaySchedule::Cyclic(tau),
        &StopRule::iters(iters),
        &RunOptions::default(),
    )?;
    Ok(RestoreSummary {
        psnr_damaged: psnr(original, &problem.damaged)?,
        psnr_restored: psnr(original, &restored)?,
        oracle_calls: traces.iter().map(|t| t.oracle_calls).sum(),
        iterations: traces[0].iterations(),
        damaged: problem.damaged,
        restored,
    })
}

const BENCH_OPT: f64 = 2.0;

fn bench_parts() -> Result<(BoxProjection, impl SubgradientOracle), Error> {
    // f(x) = |x1 - 2| + |x2 - 2| over the unit box; optimum 2 at (1,1).
    let op = BoxProjection::new(DenseVector::zeros(2), DenseVector::from_element(2, 1.0))?;
    let f = fdsm::objectives::translate(
        Arc::new(l1_composite(Arc::new(IdentityMap::new(2)))),
        DenseVector::from_element(2, 2.0),
    )?;
    Ok((op, f))
}

/// A-priori optimality-gap bound of the harmonic schedule, one entry per
/// horizon `0..=n_max`.
pub fn bound_curve(a0: f64, a: f64, tau: usize, n_max: usize) -> Result<Vec<f64>, Error> {
    let steps = StepSchedule::Harmonic { a0, a, tau };
    // dist0^2 = 2 from the benchmark start (0,0) to (1,1); c = sqrt(2) bounds
    // the subgradient norms of the shifted l1 objective.
    rate_bound_curve(2.0, f64::sqrt(2.0), &steps, tau, a, n_max)
}

/// Observed best-so-far optimality gap of the 2-D benchmark, one entry per
/// iteration `1..=iters`.
pub fn gap_curve(a0: f64, a: f64, tau: usize, iters: usize) -> Result<Vec<f64>, Error> {
    let (op, f) = bench_parts()?;
    let steps = StepSchedule::Harmonic { a0, a, tau };
    let (_, trace) = run_fdsm(
        &op,
        &f,
        &DenseVector::zeros(2),
        &steps,
        &DelaySchedule::Cyclic(tau),
        &StopRule::iters(iters),
        None,
        &RunOptions::default(),
    )?;
    Ok(trace.records.iter().map(|r| r.best_f - BENCH_OPT).collect())
}

/// Iterates of the 2-D benchmark from `(x, y)`, flattened as
/// `[x0, y0, x1, y1, ...]` (iters + 1 points).
pub fn trajectory(
    a0: f64,
    a: f64,
    tau: usize,
    iters: usize,
    x: f64,
    y: f64,
) -> Result<Vec<f64>, Error> {
    let (op, f) = bench_parts()?;
    let steps = StepSchedule::Harmonic { a0, a, tau };
    let (_, trace) = run_fdsm(
        &op,
        &f,
        &DenseVector::from_vec(vec![x, y]),
        &steps,
        &DelaySchedule::Cyclic(tau),
        &StopRule::iters(iters),
        None,
        &RunOptions {
            record_iterates: true,
        },
    )?;
    let iterates = trace.iterates.as_ref().expect("recording was requested");
    let mut flat = Vec::with_capacity(iterates.len() * 2);
    for p in iterates {
        flat.push(p[0]);
        flat.push(p[1]);
    }
    Ok(flat)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scene_is_a_valid_image() {
        let img = scene(32);
        assert_eq!((img.height(), img.width(), img.channels()), (32, 32, 1));
        let data = img.data();
        assert!(data.iter().all(|v| (0.0..=1.0).contains(v)));
        // The card has contrast: disk bright, rectangle dark.
        assert!(data.iter().cloned().fold(f64::MIN, f64::max) > 0.9);
        assert!(data.iter().cloned().fold(f64::MAX, f64::min) < 0.2);
    }

    #[test]
    fn rgba_has_four_bytes_per_pixel() {
        let img = scene(8);
        let rgba = to_rgba(&img);
        assert_eq!(rgba.len(), 8 * 8 * 4);
        assert!(rgba
            .chunks(4)
            .all(|px| px[3] == 255 && px[0] == px[1] && px[1] == px[2]));
    }

    #[test]
    fn restore_improves_psnr() {
        let img = scene(16);
        let summary = run_restore(&img, 0.4, 3, "L", 1, 0.9, 0.9, 600).expect("runs");
        assert!(
            summary.psnr_restored > summary.psnr_damaged + 3.0,
            "damaged {} dB, restored {} dB",
            summary.psnr_damaged,
            summary.psnr_restored
        );
        assert_eq!(summary.iterations, 600);
        assert_eq!(summary.oracle_calls, 300);
    }

    #[test]
    fn restore_rejects_unknown_transforms() {
        let img = scene(8);
        assert!(run_restore(&img, 0.4, 3, "Q", 0, 0.9, 0.9, 10).is_err());
    }

    #[test]
    fn bound_dominates_gap() {
        let bounds = bound_curve(0.5, 0.5, 1, 400).expect("hypothesis holds");
        let gaps = gap_curve(0.5, 0.5, 1, 401).expect("runs");
        assert_eq!(bounds.len(), 401);
        assert_eq!(gaps.len(), 401);
        for (n, (b, g)) in bounds.iter().zip(&gaps).enumerate() {
            assert!(g <= b, "gap {g} exceeds bound {b} at n = {n}");
        }
    }

    #[test]
    fn trajectory_walks_into_the_box() {
        let flat = trajectory(0.9, 0.9, 0, 500, -0.5, 1.8).expect("runs");
        assert_eq!(flat.len(), 2 * 501);
        let (x, y) = (flat[flat.len() - 2], flat[flat.len() - 1]);
        assert!(
            (x - 1.0).abs() < 0.1 && (y - 1.0).abs() < 0.1,
            "ended at ({x}, {y})"
        );
    }
}

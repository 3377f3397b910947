//! Browser bindings for the delayed subgradient toolkit.
//!
//! Three interactive operations, each a thin wrapper over [`demo`]:
//!
//! * [`InpaintDemo`]: damage the synthetic test card and restore it, with
//!   RGBA buffers ready for a canvas,
//! * [`bound_curve`] / [`gap_curve`]: the a-priori rate bound next to the
//!   observed optimality gap of a 2-D benchmark,
//! * [`trajectory`]: the iterate path of that benchmark for plotting.
//!
//! All numeric parameters use JS-friendly `u32`/`f64`; failures surface as
//! thrown `Error`s carrying the library's message.

pub mod demo;

use fdsm::transforms::ImageGrid;
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// Interactive inpainting on the synthetic test card.
#[wasm_bindgen]
pub struct InpaintDemo {
    original: ImageGrid,
    damaged: Option<ImageGrid>,
    restored: Option<ImageGrid>,
    psnr_damaged: f64,
    psnr_restored: f64,
    oracle_calls: u64,
}

#[wasm_bindgen]
impl InpaintDemo {
    /// Builds the test card at `size x size` pixels.
    #[wasm_bindgen(constructor)]
    pub fn new(size: u32) -> Result<InpaintDemo, JsError> {
        if !(4..=256).contains(&size) {
            return Err(JsError::new("size must lie in 4..=256"));
        }
        Ok(InpaintDemo {
            original: demo::scene(size as usize),
            damaged: None,
            restored: None,
            psnr_damaged: f64::NAN,
            psnr_restored: f64::NAN,
            oracle_calls: 0,
        })
    }

    /// Hides `ratio` of the pixels with the seeded mask, then restores them.
    /// Returns the restored PSNR in dB.
    #[allow(clippy::too_many_arguments)]
    pub fn run(
        &mut self,
        ratio: f64,
        seed: u32,
        transform: &str,
        tau: u32,
        a: f64,
        a0: f64,
        iters: u32,
    ) -> Result<f64, JsError> {
        let summary = demo::run_restore(
            &self.original,
            ratio,
            seed as u64,
            transform,
            tau as usize,
            a,
            a0,
            iters as usize,
        )
        .map_err(js_err)?;
        self.psnr_damaged = summary.psnr_damaged;
        self.psnr_restored = summary.psnr_restored;
        self.oracle_calls = summary.oracle_calls;
        self.damaged = Some(summary.damaged);
        self.restored = Some(summary.restored);
        Ok(summary.psnr_restored)
    }

    pub fn size(&self) -> u32 {
        self.original.height() as u32
    }

    /// RGBA bytes of the clean card.
    pub fn original_rgba(&self) -> Vec<u8> {
        demo::to_rgba(&self.original)
    }

    /// RGBA bytes of the damaged card; empty before the first `run`.
    pub fn damaged_rgba(&self) -> Vec<u8> {
        self.damaged.as_ref().map(demo::to_rgba).unwrap_or_default()
    }

    /// RGBA bytes of the restored card; empty before the first `run`.
    pub fn restored_rgba(&self) -> Vec<u8> {
        self.restored
            .as_ref()
            .map(demo::to_rgba)
            .unwrap_or_default()
    }

    pub fn psnr_damaged(&self) -> f64 {
        self.psnr_damaged
    }

    pub fn psnr_restored(&self) -> f64 {
        self.psnr_restored
    }

    /// Subgradient evaluations of the last run (delays make this less than
    /// the iteration count).
    pub fn oracle_calls(&self) -> f64 {
        self.oracle_calls as f64
    }
}

/// A-priori optimality-gap bound of the harmonic schedule on the 2-D
/// benchmark, indexed by horizon `0..=n_max`.
#[wasm_bindgen]
pub fn bound_curve(a0: f64, a: f64, tau: u32, n_max: u32) -> Result<Vec<f64>, JsError> {
    demo::bound_curve(a0, a, tau as usize, n_max as usize).map_err(js_err)
}

/// Observed best-so-far optimality gap of the benchmark run.
#[wasm_bindgen]
pub fn gap_curve(a0: f64, a: f64, tau: u32, iters: u32) -> Result<Vec<f64>, JsError> {
    demo::gap_curve(a0, a, tau as usize, iters as usize).map_err(js_err)
}

/// Iterate path `[x0, y0, x1, y1, ...]` of the benchmark from `(x, y)`.
#[wasm_bindgen]
pub fn trajectory(
    a0: f64,
    a: f64,
    tau: u32,
    iters: u32,
    x: f64,
    y: f64,
) -> Result<Vec<f64>, JsError> {
    demo::trajectory(a0, a, tau as usize, iters as usize, x, y).map_err(js_err)
}

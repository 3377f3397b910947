//! Image inpainting benchmark: recover an image from a random subset of its
//! pixels by minimizing a total-variation / wavelet sparsity surrogate over
//! the set of images that agree with the observed data.
//!
//! The observation operator `B` keeps observed samples and zeroes the rest.
//! Its Landweber operator `T x = x - B'(B x - b)` (the mask has unit norm)
//! resets observed samples to their recorded values and leaves the rest
//! untouched, so `Fix T` is exactly the consistency set. The objective is
//! `f(x) = ||W x||_1` for a selectable analysis transform `W`. Color images
//! run one recursion per channel against a shared mask.
//!
//! Images travel as [`ImageGrid`] in `[0,1]` and serialize to binary PGM (one
//! channel) or PPM (three channels) with maxval 255.

use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::objectives::{l1_composite, L1Composite};
use crate::operators::{make_landweber, LandweberOperator};
use crate::solver::{run_fdsm, DelaySchedule, RunOptions, RunTrace, StepSchedule, StopRule};
use crate::transforms::{col_diff, haar, row_diff, stack, ImageGrid, LinearMap};
use crate::{error::Error, DenseVector};

/// Sampling operator for one channel plane: keeps observed samples, zeroes the
/// rest. Symmetric, idempotent, diagonal.
#[derive(Clone, Debug)]
pub struct MaskOperator {
    observed: Vec<bool>,
    height: usize,
    width: usize,
}

impl MaskOperator {
    pub fn new(observed: Vec<bool>, height: usize, width: usize) -> Result<Self, Error> {
        if observed.len() != height * width {
            return Err(Error::Dimension {
                context: "MaskOperator: observed flags",
                expected: height * width,
                actual: observed.len(),
            });
        }
        Ok(MaskOperator {
            observed,
            height,
            width,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Row-major observation flags, one per pixel.
    pub fn observed(&self) -> &[bool] {
        &self.observed
    }

    pub fn observed_count(&self) -> usize {
        self.observed.iter().filter(|o| **o).count()
    }
}

impl LinearMap for MaskOperator {
    fn in_dim(&self) -> usize {
        self.height * self.width
    }

    fn out_dim(&self) -> usize {
        self.height * self.width
    }

    fn apply(&self, x: &DenseVector) -> DenseVector {
        assert_eq!(
            x.len(),
            self.in_dim(),
            "MaskOperator::apply: dimension mismatch"
        );
        DenseVector::from_fn(x.len(), |p, _| if self.observed[p] { x[p] } else { 0.0 })
    }

    fn adjoint(&self, y: &DenseVector) -> DenseVector {
        assert_eq!(
            y.len(),
            self.out_dim(),
            "MaskOperator::adjoint: dimension mismatch"
        );
        self.apply(y)
    }

    fn diagonal(&self) -> Option<DenseVector> {
        Some(DenseVector::from_fn(self.observed.len(), |p, _| {
            if self.observed[p] {
                1.0
            } else {
                0.0
            }
        }))
    }
}

/// Random mask hiding exactly `floor(ratio * height * width)` pixels.
///
/// The hidden set is a uniform sample without replacement drawn by a partial
/// Fisher-Yates shuffle, so the same seed always hides the same pixels.
pub fn make_mask(
    height: usize,
    width: usize,
    ratio: f64,
    seed: u64,
) -> Result<MaskOperator, Error> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(Error::invalid(format!(
            "make_mask: ratio must lie in [0,1], got {ratio}"
        )));
    }
    let pixels = height * width;
    if pixels == 0 {
        return Err(Error::invalid(
            "make_mask: image must have at least one pixel",
        ));
    }
    let hidden = (ratio * pixels as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..pixels).collect();
    for i in 0..hidden.min(pixels) {
        let j = rng.random_range(i..pixels);
        order.swap(i, j);
    }
    let mut observed = vec![true; pixels];
    for &p in order.iter().take(hidden) {
        observed[p] = false;
    }
    MaskOperator::new(observed, height, width)
}

/// Zeroes the hidden pixels of `original` in every channel.
pub fn apply_damage(original: &ImageGrid, mask: &MaskOperator) -> Result<ImageGrid, Error> {
    if original.height() != mask.height() || original.width() != mask.width() {
        return Err(Error::Dimension {
            context: "apply_damage: mask size",
            expected: original.pixel_count(),
            actual: mask.height() * mask.width(),
        });
    }
    let mut damaged = original.clone();
    for p in 0..original.pixel_count() {
        if !mask.observed()[p] {
            let (i, j) = (p / original.width(), p % original.width());
            for c in 0..original.channels() {
                damaged.set(i, j, c, 0.0);
            }
        }
    }
    Ok(damaged)
}

/// Peak signal-to-noise ratio in decibels with peak 1.0, pooled over all
/// pixels and channels. Identical images give `f64::INFINITY`.
pub fn psnr(reference: &ImageGrid, candidate: &ImageGrid) -> Result<f64, Error> {
    if reference.height() != candidate.height()
        || reference.width() != candidate.width()
        || reference.channels() != candidate.channels()
    {
        return Err(Error::Dimension {
            context: "psnr: image shapes",
            expected: reference.data().len(),
            actual: candidate.data().len(),
        });
    }
    let mse = reference
        .data()
        .iter()
        .zip(candidate.data().iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / reference.data().len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(-10.0 * mse.log10())
}

fn is_pnm_whitespace(b: u8) -> bool {
    matches!(b, b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c)
}

struct Scanner<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Scanner<'a> {
    fn skip_whitespace(&mut self) {
        while self.pos < self.bytes.len() && is_pnm_whitespace(self.bytes[self.pos]) {
            self.pos += 1;
        }
    }

    fn token(&mut self, what: &str) -> Result<(usize, &'a [u8]), Error> {
        self.skip_whitespace();
        let start = self.pos;
        while self.pos < self.bytes.len() && !is_pnm_whitespace(self.bytes[self.pos]) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::ImageParse {
                offset: start,
                message: format!("expected {what}"),
            });
        }
        Ok((start, &self.bytes[start..self.pos]))
    }

    fn number(&mut self, what: &str) -> Result<usize, Error> {
        let (offset, tok) = self.token(what)?;
        let text = std::str::from_utf8(tok).map_err(|_| Error::ImageParse {
            offset,
            message: format!("{what} is not ASCII"),
        })?;
        text.parse::<usize>().map_err(|_| Error::ImageParse {
            offset,
            message: format!("{what} is not a nonnegative integer: {text:?}"),
        })
    }
}

/// Decodes a binary PGM (`P5`) or PPM (`P6`) image with maxval 255.
///
/// The header is the magic, width, height and maxval separated by whitespace,
/// followed by exactly one whitespace byte and then exactly
/// `width * height * channels` payload bytes. Anything else is rejected with
/// the byte offset of the problem.
pub fn parse_image(bytes: &[u8]) -> Result<ImageGrid, Error> {
    let mut scanner = Scanner { bytes, pos: 0 };
    let (magic_at, magic) = scanner.token("magic number")?;
    let channels = match magic {
        b"P5" => 1,
        b"P6" => 3,
        other => {
            return Err(Error::ImageParse {
                offset: magic_at,
                message: format!(
                    "unsupported magic {:?} (only binary P5 and P6 are accepted)",
                    String::from_utf8_lossy(other)
                ),
            })
        }
    };
    let width = scanner.number("width")?;
    let height = scanner.number("height")?;
    if width == 0 || height == 0 {
        return Err(Error::ImageParse {
            offset: magic_at,
            message: format!("image is empty ({width} x {height})"),
        });
    }
    let (maxval_at, maxval) = (scanner.pos, scanner.number("maxval")?);
    if maxval != 255 {
        return Err(Error::ImageParse {
            offset: maxval_at,
            message: format!("maxval must be 255, got {maxval}"),
        });
    }
    if scanner.pos >= bytes.len() || !is_pnm_whitespace(bytes[scanner.pos]) {
        return Err(Error::ImageParse {
            offset: scanner.pos,
            message: "expected a single whitespace byte after maxval".into(),
        });
    }
    scanner.pos += 1;
    let payload = &bytes[scanner.pos..];
    let expected = width * height * channels;
    if payload.len() < expected {
        return Err(Error::ImageParse {
            offset: bytes.len(),
            message: format!(
                "payload truncated: expected {expected} bytes, found {}",
                payload.len()
            ),
        });
    }
    if payload.len() > expected {
        return Err(Error::ImageParse {
            offset: scanner.pos + expected,
            message: format!(
                "{} trailing bytes after the payload",
                payload.len() - expected
            ),
        });
    }
    let data: Vec<f64> = payload.iter().map(|b| *b as f64 / 255.0).collect();
    ImageGrid::new(height, width, channels, data)
}

/// Encodes to binary PGM (one channel) or PPM (three channels), maxval 255.
pub fn encode_image(image: &ImageGrid) -> Result<Vec<u8>, Error> {
    let magic = match image.channels() {
        1 => "P5",
        3 => "P6",
        other => {
            return Err(Error::invalid(format!(
                "encode_image: only 1- or 3-channel images are supported, got {other}"
            )))
        }
    };
    let mut out = format!("{magic}\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend(
        image
            .data()
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    Ok(out)
}

/// Reads a PGM/PPM file from disk.
pub fn read_image(path: &Path) -> Result<ImageGrid, Error> {
    parse_image(&std::fs::read(path)?)
}

/// Writes a PGM/PPM file to disk.
pub fn write_image(path: &Path, image: &ImageGrid) -> Result<(), Error> {
    Ok(std::fs::write(path, encode_image(image)?)?)
}

/// Analysis transform selector for the sparsity objective.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransformKind {
    /// Vertical finite differences.
    R,
    /// Horizontal finite differences.
    C,
    /// Two-sided orthonormal Haar transform (square power-of-two images).
    H,
    /// Both finite-difference maps stacked: anisotropic total variation.
    L,
    /// Haar stacked on top of both difference maps.
    G,
}

impl TransformKind {
    pub const ALL: [TransformKind; 5] = [
        TransformKind::R,
        TransformKind::C,
        TransformKind::H,
        TransformKind::L,
        TransformKind::G,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TransformKind::R => "R",
            TransformKind::C => "C",
            TransformKind::H => "H",
            TransformKind::L => "L",
            TransformKind::G => "G",
        }
    }
}

impl std::str::FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim() {
            "R" | "r" => Ok(TransformKind::R),
            "C" | "c" => Ok(TransformKind::C),
            "H" | "h" => Ok(TransformKind::H),
            "L" | "l" => Ok(TransformKind::L),
            "G" | "g" => Ok(TransformKind::G),
            other => Err(Error::invalid(format!(
                "unknown transform {other:?}; expected one of R, C, H, L, G"
            ))),
        }
    }
}

impl std::fmt::Display for TransformKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Builds the analysis transform for an `height x width` plane.
///
/// `H` and `G` need a square image whose side is a power of two; the Haar
/// transform then uses its full `log2(side)` levels.
pub fn make_transform(
    kind: TransformKind,
    height: usize,
    width: usize,
) -> Result<Arc<dyn LinearMap>, Error> {
    let tv = |h, w| -> Result<Arc<dyn LinearMap>, Error> {
        Ok(Arc::new(stack(vec![
            Arc::new(row_diff(h, w)?) as Arc<dyn LinearMap>,
            Arc::new(col_diff(h, w)?) as Arc<dyn LinearMap>,
        ])?))
    };
    match kind {
        TransformKind::R => Ok(Arc::new(row_diff(height, width)?)),
        TransformKind::C => Ok(Arc::new(col_diff(height, width)?)),
        TransformKind::H => Ok(full_haar(height, width)?),
        TransformKind::L => tv(height, width),
        TransformKind::G => Ok(Arc::new(stack(vec![
            full_haar(height, width)?,
            tv(height, width)?,
        ])?)),
    }
}

fn full_haar(height: usize, width: usize) -> Result<Arc<dyn LinearMap>, Error> {
    if height != width {
        return Err(Error::invalid(format!(
            "Haar transform needs a square image, got {height} x {width}"
        )));
    }
    if !height.is_power_of_two() || height < 2 {
        return Err(Error::invalid(format!(
            "Haar transform needs the side to be a power of two >= 2, got {height}"
        )));
    }
    let levels = height.trailing_zeros() as usize;
    Ok(Arc::new(haar(height, levels)?))
}

/// Smooth synthetic test image: sample `(i, j)` has value
/// `(i + j) / (height - 1 + width - 1)` in every channel.
pub fn gradient_image(height: usize, width: usize, channels: usize) -> ImageGrid {
    let denom = (height + width).saturating_sub(2).max(1) as f64;
    let mut img = ImageGrid::zeros(height, width, channels);
    for i in 0..height {
        for j in 0..width {
            let v = (i + j) as f64 / denom;
            for c in 0..channels {
                img.set(i, j, c, v);
            }
        }
    }
    img
}

/// Everything needed to run the benchmark: the mask, the damaged observation,
/// the analysis transform, one consistency operator per channel, and the
/// shared sparsity objective.
pub struct InpaintingProblem {
    pub mask: Arc<MaskOperator>,
    pub damaged: ImageGrid,
    pub transform: Arc<dyn LinearMap>,
    /// One per channel, targeting that channel's observed data.
    pub operators: Vec<LandweberOperator>,
    pub objective: L1Composite,
}

/// Masks `original` with a fresh random mask and assembles the per-channel
/// consistency operators and the sparsity objective.
///
/// `ratio = 1` hides everything, which makes the observation operator zero and
/// is reported as [`Error::ZeroOperatorNorm`].
pub fn build_problem(
    original: &ImageGrid,
    ratio: f64,
    seed: u64,
    kind: TransformKind,
) -> Result<InpaintingProblem, Error> {
    if original.channels() != 1 && original.channels() != 3 {
        return Err(Error::invalid(format!(
            "build_problem: expected a 1- or 3-channel image, got {}",
            original.channels()
        )));
    }
    let mask = Arc::new(make_mask(original.height(), original.width(), ratio, seed)?);
    let damaged = apply_damage(original, &mask)?;
    let transform = make_transform(kind, original.height(), original.width())?;
    let mut operators = Vec::with_capacity(original.channels());
    for c in 0..original.channels() {
        let target = damaged.channel(c);
        operators.push(make_landweber(
            Arc::clone(&mask) as Arc<dyn LinearMap>,
            target,
        )?);
    }
    let objective = l1_composite(Arc::clone(&transform));
    Ok(InpaintingProblem {
        mask,
        damaged,
        transform,
        operators,
        objective,
    })
}

/// Runs the delayed subgradient recursion from the zero image, one channel at
/// a time, and reassembles the result (clamped to `[0,1]`).
pub fn restore(
    problem: &InpaintingProblem,
    steps: &StepSchedule,
    delays: &DelaySchedule,
    stop: &StopRule,
    options: &RunOptions,
) -> Result<(ImageGrid, Vec<RunTrace>), Error> {
    let pixels = problem.damaged.pixel_count();
    let mut planes = Vec::with_capacity(problem.operators.len());
    let mut traces = Vec::with_capacity(problem.operators.len());
    for op in &problem.operators {
        let x0 = DenseVector::zeros(pixels);
        let (plane, trace) = run_fdsm(
            op,
            &problem.objective,
            &x0,
            steps,
            delays,
            stop,
            None,
            options,
        )?;
        planes.push(plane);
        traces.push(trace);
    }
    let restored =
        ImageGrid::from_channels(problem.damaged.height(), problem.damaged.width(), &planes)?;
    Ok((restored, traces))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::FneOperator;
    use approx::assert_abs_diff_eq;

    #[test]
    fn mask_hides_exactly_the_requested_count() {
        let mask = make_mask(10, 10, 0.5, 7).unwrap();
        assert_eq!(mask.observed_count(), 50);
        let all = make_mask(10, 10, 0.0, 7).unwrap();
        assert_eq!(all.observed_count(), 100);
        let none = make_mask(10, 10, 1.0, 7).unwrap();
        assert_eq!(none.observed_count(), 0);
        // floor(0.33 * 100) = 33 hidden.
        let third = make_mask(10, 10, 0.33, 7).unwrap();
        assert_eq!(third.observed_count(), 67);
        assert!(make_mask(10, 10, 1.5, 7).is_err());
    }

    #[test]
    fn mask_is_deterministic_per_seed() {
        let a = make_mask(16, 16, 0.5, 42).unwrap();
        let b = make_mask(16, 16, 0.5, 42).unwrap();
        assert_eq!(a.observed(), b.observed());
        let c = make_mask(16, 16, 0.5, 43).unwrap();
        assert_ne!(a.observed(), c.observed());
    }

    #[test]
    fn mask_acts_as_a_diagonal_projection() {
        let mask = MaskOperator::new(vec![true, false, true], 1, 3).unwrap();
        let x = DenseVector::from_column_slice(&[1.0, 2.0, 3.0]);
        let y = mask.apply(&x);
        assert_eq!(y.as_slice(), &[1.0, 0.0, 3.0]);
        assert_eq!(mask.adjoint(&x).as_slice(), &[1.0, 0.0, 3.0]);
        let diag = mask.diagonal().unwrap();
        assert_eq!(diag.as_slice(), &[1.0, 0.0, 1.0]);
    }

    #[test]
    fn damage_zeroes_hidden_pixels_in_every_channel() {
        let img = gradient_image(4, 4, 3);
        let mask = MaskOperator::new((0..16).map(|p| p != 5).collect(), 4, 4).unwrap();
        let damaged = apply_damage(&img, &mask).unwrap();
        for c in 0..3 {
            assert_eq!(damaged.get(1, 1, c), 0.0);
            assert_eq!(damaged.get(0, 0, c), img.get(0, 0, c));
            assert_eq!(damaged.get(3, 3, c), img.get(3, 3, c));
        }
    }

    #[test]
    fn psnr_matches_hand_computation() {
        let a = ImageGrid::zeros(10, 10, 1);
        let b = ImageGrid::new(10, 10, 1, vec![0.1; 100]).unwrap();
        // MSE = 0.01, so PSNR = -10 log10(0.01) = 20 dB.
        assert_abs_diff_eq!(psnr(&a, &b).unwrap(), 20.0, epsilon = 1e-12);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        let c = ImageGrid::zeros(10, 10, 3);
        assert!(psnr(&a, &c).is_err());
    }

    #[test]
    fn pgm_roundtrip_is_exact_on_the_byte_lattice() {
        let data: Vec<f64> = (0..12).map(|k| (k * 20) as f64 / 255.0).collect();
        let img = ImageGrid::new(3, 4, 1, data).unwrap();
        let bytes = encode_image(&img).unwrap();
        assert!(bytes.starts_with(b"P5\n4 3\n255\n"));
        assert_eq!(bytes.len(), b"P5\n4 3\n255\n".len() + 12);
        let back = parse_image(&bytes).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn ppm_roundtrip_preserves_channels() {
        let img = gradient_image(4, 4, 3);
        let bytes = encode_image(&img).unwrap();
        assert!(bytes.starts_with(b"P6\n4 4\n255\n"));
        let back = parse_image(&bytes).unwrap();
        assert_eq!(back.channels(), 3);
        for (a, b) in img.data().iter().zip(back.data().iter()) {
            assert!((a - b).abs() <= 0.5 / 255.0 + 1e-12);
        }
    }

    #[test]
    fn parser_rejects_malformed_headers() {
        match parse_image(b"P7\n2 2\n255\n....") {
            Err(Error::ImageParse { offset, message }) => {
                assert_eq!(offset, 0);
                assert!(message.contains("unsupported magic"));
            }
            other => panic!("expected ImageParse, got {other:?}"),
        }
        // Truncated payload.
        assert!(matches!(
            parse_image(b"P5\n2 2\n255\nab"),
            Err(Error::ImageParse { .. })
        ));
        // Trailing bytes.
        match parse_image(b"P5\n2 2\n255\nabcdX") {
            Err(Error::ImageParse { offset, message }) => {
                assert_eq!(offset, b"P5\n2 2\n255\nabcd".len());
                assert!(message.contains("trailing"));
            }
            other => panic!("expected ImageParse, got {other:?}"),
        }
        // Wrong maxval.
        assert!(matches!(
            parse_image(b"P5\n2 2\n65535\nabcd"),
            Err(Error::ImageParse { .. })
        ));
        // Missing tokens.
        assert!(parse_image(b"P5\n2").is_err());
        // Zero-size image.
        assert!(parse_image(b"P5\n0 2\n255\n").is_err());
    }

    #[test]
    fn transform_shapes_match_their_definitions() {
        let r = make_transform(TransformKind::R, 4, 4).unwrap();
        assert_eq!((r.in_dim(), r.out_dim()), (16, 16));
        let l = make_transform(TransformKind::L, 4, 6).unwrap();
        assert_eq!((l.in_dim(), l.out_dim()), (24, 48));
        let h = make_transform(TransformKind::H, 4, 4).unwrap();
        assert_eq!((h.in_dim(), h.out_dim()), (16, 16));
        let g = make_transform(TransformKind::G, 4, 4).unwrap();
        assert_eq!((g.in_dim(), g.out_dim()), (16, 48));
        // Haar needs square power-of-two sides; the difference maps do not.
        assert!(make_transform(TransformKind::H, 4, 6).is_err());
        assert!(make_transform(TransformKind::H, 3, 3).is_err());
        assert!(make_transform(TransformKind::G, 3, 3).is_err());
        assert!(make_transform(TransformKind::R, 3, 5).is_ok());
    }

    #[test]
    fn transform_kind_parses_round_trip() {
        for kind in TransformKind::ALL {
            let parsed: TransformKind = kind.as_str().parse().unwrap();
            assert_eq!(parsed, kind);
            let lower: TransformKind = kind.as_str().to_lowercase().parse().unwrap();
            assert_eq!(lower, kind);
        }
        assert!("X".parse::<TransformKind>().is_err());
    }

    #[test]
    fn gradient_image_matches_formula() {
        let img = gradient_image(16, 16, 1);
        assert_eq!(img.get(0, 0, 0), 0.0);
        assert_abs_diff_eq!(img.get(7, 8, 0), 0.5, epsilon = 1e-15);
        assert_eq!(img.get(15, 15, 0), 1.0);
    }

    #[test]
    fn fully_hidden_image_is_rejected() {
        let img = gradient_image(8, 8, 1);
        match build_problem(&img, 1.0, 0, TransformKind::L) {
            Err(Error::ZeroOperatorNorm) => {}
            Err(other) => panic!("expected ZeroOperatorNorm, got {other:?}"),
            Ok(_) => panic!("expected ZeroOperatorNorm, got a problem"),
        }
    }

    #[test]
    fn consistency_operator_resets_observed_pixels() {
        let img = gradient_image(8, 8, 1);
        let problem = build_problem(&img, 0.5, 9, TransformKind::L).unwrap();
        let op = &problem.operators[0];
        let x = DenseVector::from_element(64, 0.37);
        let tx = op.apply(&x);
        let b = problem.damaged.channel(0);
        for p in 0..64 {
            if problem.mask.observed()[p] {
                assert_abs_diff_eq!(tx[p], b[p], epsilon = 1e-15);
            } else {
                assert_eq!(tx[p], 0.37);
            }
        }
        // A consistent point is fixed.
        assert!(op.residual(&tx) <= 1e-15);
    }

    #[test]
    fn restore_improves_on_the_damaged_image() {
        let img = gradient_image(8, 8, 1);
        let problem = build_problem(&img, 0.4, 3, TransformKind::L).unwrap();
        let steps = StepSchedule::Harmonic {
            a0: 0.9,
            a: 0.9,
            tau: 0,
        };
        let (restored, traces) = restore(
            &problem,
            &steps,
            &DelaySchedule::Zero,
            &StopRule::iters(2000),
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(traces.len(), 1);
        let before = psnr(&img, &problem.damaged).unwrap();
        let after = psnr(&img, &restored).unwrap();
        assert!(
            after > before + 3.0,
            "expected at least 3 dB improvement, got {before:.2} -> {after:.2}"
        );
        // Observed pixels agree with the data up to the final step size:
        // the last update moves an observed pixel by alpha_N * |g| <= 4 alpha_N.
        let plane = restored.channel(0);
        let b = problem.damaged.channel(0);
        let alpha_last = steps.alpha(1999);
        for p in 0..64 {
            if problem.mask.observed()[p] {
                assert!((plane[p] - b[p]).abs() <= 4.0 * alpha_last + 1e-12);
            }
        }
    }

    #[test]
    fn color_restoration_runs_per_channel() {
        let img = gradient_image(8, 8, 3);
        let problem = build_problem(&img, 0.3, 11, TransformKind::R).unwrap();
        assert_eq!(problem.operators.len(), 3);
        let (restored, traces) = restore(
            &problem,
            &StepSchedule::Harmonic {
                a0: 0.9,
                a: 0.9,
                tau: 0,
            },
            &DelaySchedule::Zero,
            &StopRule::iters(50),
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(traces.len(), 3);
        assert_eq!(restored.channels(), 3);
    }
}

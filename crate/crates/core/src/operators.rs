//! Firmly nonexpansive operators and tools to verify and measure them.
//!
//! An operator `T` is firmly nonexpansive when
//! `<Tx - Ty, x - y> >= ||Tx - Ty||^2` for all `x`, `y`. Metric projections onto
//! closed convex sets have this property, as do Landweber update operators with
//! a step bounded by the reciprocal squared operator norm, and convex
//! combinations of such operators. The solver only ever touches the trait, so
//! any constraint expressible as a fixed-point set plugs in.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::transforms::LinearMap;
use crate::{error::Error, DenseVector};

/// Firmly nonexpansive map on `R^dim`.
pub trait FneOperator: Send + Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &DenseVector) -> DenseVector;

    /// Fixed-point residual `||Tx - x||`; zero exactly on `Fix T`.
    fn residual(&self, x: &DenseVector) -> f64 {
        (self.apply(x) - x).norm()
    }
}

/// Projects `x` onto the box `[lo, hi]` componentwise.
pub fn project_box(
    x: &DenseVector,
    lo: &DenseVector,
    hi: &DenseVector,
) -> Result<DenseVector, Error> {
    check_box_bounds(lo, hi)?;
    if x.len() != lo.len() {
        return Err(Error::Dimension {
            context: "project_box: point",
            expected: lo.len(),
            actual: x.len(),
        });
    }
    Ok(DenseVector::from_fn(x.len(), |i, _| {
        x[i].clamp(lo[i], hi[i])
    }))
}

fn check_box_bounds(lo: &DenseVector, hi: &DenseVector) -> Result<(), Error> {
    if lo.len() != hi.len() {
        return Err(Error::Dimension {
            context: "box bounds: hi",
            expected: lo.len(),
            actual: hi.len(),
        });
    }
    for i in 0..lo.len() {
        if lo[i] > hi[i] {
            return Err(Error::invalid(format!(
                "box bounds: lo[{i}] = {} exceeds hi[{i}] = {}",
                lo[i], hi[i]
            )));
        }
    }
    Ok(())
}

/// Projects `x` onto the closed ball of radius `radius` around `center`.
pub fn project_ball(
    x: &DenseVector,
    center: &DenseVector,
    radius: f64,
) -> Result<DenseVector, Error> {
    if radius < 0.0 || !radius.is_finite() {
        return Err(Error::invalid(format!(
            "project_ball: radius must be finite and nonnegative, got {radius}"
        )));
    }
    if x.len() != center.len() {
        return Err(Error::Dimension {
            context: "project_ball: point",
            expected: center.len(),
            actual: x.len(),
        });
    }
    let offset = x - center;
    let dist = offset.norm();
    if dist <= radius {
        Ok(x.clone())
    } else {
        Ok(center + offset * (radius / dist))
    }
}

/// Projects `x` onto the halfspace `{ y : <normal, y> <= offset }`.
pub fn project_halfspace(
    x: &DenseVector,
    normal: &DenseVector,
    offset: f64,
) -> Result<DenseVector, Error> {
    let norm_sq = normal.norm_squared();
    if norm_sq == 0.0 {
        return Err(Error::invalid("project_halfspace: normal must be nonzero"));
    }
    if x.len() != normal.len() {
        return Err(Error::Dimension {
            context: "project_halfspace: point",
            expected: normal.len(),
            actual: x.len(),
        });
    }
    let slack = normal.dot(x) - offset;
    if slack <= 0.0 {
        Ok(x.clone())
    } else {
        Ok(x - normal * (slack / norm_sq))
    }
}

/// Projection onto a box, as an operator.
pub struct BoxProjection {
    lo: DenseVector,
    hi: DenseVector,
}

impl BoxProjection {
    pub fn new(lo: DenseVector, hi: DenseVector) -> Result<Self, Error> {
        check_box_bounds(&lo, &hi)?;
        Ok(BoxProjection { lo, hi })
    }
}

impl FneOperator for BoxProjection {
    fn dim(&self) -> usize {
        self.lo.len()
    }

    fn apply(&self, x: &DenseVector) -> DenseVector {
        project_box(x, &self.lo, &self.hi).expect("BoxProjection::apply: dimension mismatch")
    }
}

/// Projection onto a closed ball, as an operator.
pub struct BallProjection {
    center: DenseVector,
    radius: f64,
}

impl BallProjection {
    pub fn new(center: DenseVector, radius: f64) -> Result<Self, Error> {
        if radius < 0.0 || !radius.is_finite() {
            return Err(Error::invalid(format!(
                "BallProjection: radius must be finite and nonnegative, got {radius}"
            )));
        }
        Ok(BallProjection { center, radius })
    }

    pub fn center(&self) -> &DenseVector {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

impl FneOperator for BallProjection {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn apply(&self, x: &DenseVector) -> DenseVector {
        project_ball(x, &self.center, self.radius)
            .expect("BallProjection::apply: dimension mismatch")
    }
}

/// Projection onto a halfspace, as an operator.
pub struct HalfspaceProjection {
    normal: DenseVector,
    offset: f64,
}

impl HalfspaceProjection {
    pub fn new(normal: DenseVector, offset: f64) -> Result<Self, Error> {
        if normal.norm_squared() == 0.0 {
            return Err(Error::invalid(
                "HalfspaceProjection: normal must be nonzero",
            ));
        }
        Ok(HalfspaceProjection { normal, offset })
    }
}

impl FneOperator for HalfspaceProjection {
    fn dim(&self) -> usize {
        self.normal.len()
    }

    fn apply(&self, x: &DenseVector) -> DenseVector {
        project_halfspace(x, &self.normal, self.offset)
            .expect("HalfspaceProjection::apply: dimension mismatch")
    }
}

/// The identity operator; every point is fixed.
pub struct IdentityOperator {
    dim: usize,
}

impl IdentityOperator {
    pub fn new(dim: usize) -> Self {
        IdentityOperator { dim }
    }
}

impl FneOperator for IdentityOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &DenseVector) -> DenseVector {
        assert_eq!(
            x.len(),
            self.dim,
            "IdentityOperator::apply: dimension mismatch"
        );
        x.clone()
    }
}

/// Landweber update operator `T x = x - step * B^T (B x - b)` with
/// `step = 1 / ||B||^2`; its fixed points are the least-squares solutions of
/// `B x = b`, and the step bound makes it firmly nonexpansive.
pub struct LandweberOperator {
    map: Arc<dyn LinearMap>,
    target: DenseVector,
    norm_sq: f64,
    norm_estimated: bool,
    norm_warning: bool,
}

impl LandweberOperator {
    pub fn map(&self) -> &Arc<dyn LinearMap> {
        &self.map
    }

    pub fn target(&self) -> &DenseVector {
        &self.target
    }

    /// Squared operator norm used for the step (exact for diagonal maps).
    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    /// True when the norm came from power iteration rather than a diagonal.
    pub fn norm_estimated(&self) -> bool {
        self.norm_estimated
    }

    /// True when power iteration stopped at its iteration cap before meeting
    /// tolerance; the safeguarded estimate is still used.
    pub fn norm_warning(&self) -> bool {
        self.norm_warning
    }
}

/// Builds the Landweber operator for the linear system `map x = target`.
///
/// Diagonal maps get their operator norm exactly (the largest absolute entry);
/// anything else is estimated by safeguarded power iteration. A map that sends
/// every vector to zero has no valid step size and is rejected.
pub fn make_landweber(
    map: Arc<dyn LinearMap>,
    target: DenseVector,
) -> Result<LandweberOperator, Error> {
    if target.len() != map.out_dim() {
        return Err(Error::Dimension {
            context: "make_landweber: target",
            expected: map.out_dim(),
            actual: target.len(),
        });
    }
    if let Some(diag) = map.diagonal() {
        let max_abs = diag.iter().fold(0.0_f64, |acc, d| acc.max(d.abs()));
        if max_abs == 0.0 {
            return Err(Error::ZeroOperatorNorm);
        }
        Ok(LandweberOperator {
            map,
            target,
            norm_sq: max_abs * max_abs,
            norm_estimated: false,
            norm_warning: false,
        })
    } else {
        let est = op_norm(map.as_ref(), 1e-10, 500)?;
        if est.value == 0.0 {
            return Err(Error::ZeroOperatorNorm);
        }
        Ok(LandweberOperator {
            map,
            target,
            norm_sq: est.value * est.value,
            norm_estimated: true,
            norm_warning: !est.converged,
        })
    }
}

impl FneOperator for LandweberOperator {
    fn dim(&self) -> usize {
        self.map.in_dim()
    }

    fn apply(&self, x: &DenseVector) -> DenseVector {
        assert_eq!(
            x.len(),
            self.dim(),
            "LandweberOperator::apply: dimension mismatch"
        );
        let residual = self.map.apply(x) - &self.target;
        let back = self.map.adjoint(&residual);
        x - back / self.norm_sq
    }
}

/// Equal-weight average of operators on a common space.
pub struct AveragedOperator {
    members: Vec<Arc<dyn FneOperator>>,
}

/// Averages `members` pointwise: `T x = (1/m) sum_j T_j x`, summed in member
/// order. Convex combinations preserve firm nonexpansiveness, and the fixed
/// points of the average are the common fixed points when those intersect.
pub fn average_ops(members: Vec<Arc<dyn FneOperator>>) -> Result<AveragedOperator, Error> {
    let first = members
        .first()
        .ok_or_else(|| Error::invalid("average_ops: at least one operator is required"))?;
    let dim = first.dim();
    for member in &members {
        if member.dim() != dim {
            return Err(Error::Dimension {
                context: "average_ops: member dimension",
                expected: dim,
                actual: member.dim(),
            });
        }
    }
    Ok(AveragedOperator { members })
}

impl FneOperator for AveragedOperator {
    fn dim(&self) -> usize {
        self.members[0].dim()
    }

    fn apply(&self, x: &DenseVector) -> DenseVector {
        let mut sum = DenseVector::zeros(self.dim());
        for member in &self.members {
            sum += member.apply(x);
        }
        sum / self.members.len() as f64
    }
}

/// Slack below which a sampled firm-nonexpansiveness check still passes;
/// absorbs floating-point error in the inner products.
pub const FNE_SLACK_TOL: f64 = 1e-10;

/// Outcome of [`check_fne`].
#[derive(Clone, Copy, Debug)]
pub struct FneReport {
    /// Smallest observed value of `<Tx - Ty, x - y> - ||Tx - Ty||^2`.
    pub min_slack: f64,
    /// True iff `min_slack >= -FNE_SLACK_TOL`.
    pub pass: bool,
    pub samples: usize,
}

/// Samples `samples` pairs `(x, y)` componentwise uniform on `[-10, 10]` and
/// evaluates the firm-nonexpansiveness slack on each.
pub fn check_fne(op: &dyn FneOperator, samples: usize, seed: u64) -> FneReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = op.dim();
    let mut min_slack = f64::INFINITY;
    for _ in 0..samples {
        let x = DenseVector::from_fn(dim, |_, _| rng.random_range(-10.0..10.0));
        let y = DenseVector::from_fn(dim, |_, _| rng.random_range(-10.0..10.0));
        let tx = op.apply(&x);
        let ty = op.apply(&y);
        let dt = tx - ty;
        let slack = dt.dot(&(x - y)) - dt.norm_squared();
        min_slack = min_slack.min(slack);
    }
    FneReport {
        min_slack,
        pass: min_slack >= -FNE_SLACK_TOL,
        samples,
    }
}

/// Multiplicative safeguard applied to power-iteration norm estimates so a
/// slight underestimate cannot produce an overlong Landweber step.
pub const OP_NORM_SAFEGUARD: f64 = 1e-6;

/// Outcome of [`op_norm`].
#[derive(Clone, Copy, Debug)]
pub struct OpNormEstimate {
    /// Safeguarded estimate of `||B||` (inflated by `1 + OP_NORM_SAFEGUARD`).
    pub value: f64,
    /// False when the iteration cap was reached before the relative gap fell
    /// below tolerance; the estimate is still returned.
    pub converged: bool,
    pub iterations: usize,
}

/// Estimates `||B||` by power iteration on `B^T B` from a seeded random start.
pub fn op_norm(map: &dyn LinearMap, tol: f64, max_iter: usize) -> Result<OpNormEstimate, Error> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!(
            "op_norm: tol must be positive, got {tol}"
        )));
    }
    if max_iter == 0 {
        return Err(Error::invalid("op_norm: max_iter must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x6F70_6E6F_726D); // fixed seed: estimates are reproducible
    let mut v = DenseVector::from_fn(map.in_dim(), |_, _| rng.random_range(-1.0..1.0));
    let vn = v.norm();
    if vn == 0.0 {
        // Degenerate (dim 0); treat as the zero map.
        return Ok(OpNormEstimate {
            value: 0.0,
            converged: true,
            iterations: 0,
        });
    }
    v /= vn;
    let mut lambda_prev = f64::INFINITY;
    for it in 1..=max_iter {
        let bv = map.apply(&v);
        let lambda = bv.norm_squared(); // Rayleigh quotient of B^T B at unit v
        let w = map.adjoint(&bv);
        let wn = w.norm();
        if wn == 0.0 {
            // v is in the kernel of B^T B: the iteration has converged to eigenvalue 0.
            return Ok(OpNormEstimate {
                value: lambda.sqrt() * (1.0 + OP_NORM_SAFEGUARD),
                converged: true,
                iterations: it,
            });
        }
        let gap = (lambda - lambda_prev).abs();
        if gap <= tol * lambda.max(1e-300) {
            return Ok(OpNormEstimate {
                value: lambda.sqrt() * (1.0 + OP_NORM_SAFEGUARD),
                converged: true,
                iterations: it,
            });
        }
        lambda_prev = lambda;
        v = w / wn;
    }
    Ok(OpNormEstimate {
        value: lambda_prev.sqrt() * (1.0 + OP_NORM_SAFEGUARD),
        converged: false,
        iterations: max_iter,
    })
}

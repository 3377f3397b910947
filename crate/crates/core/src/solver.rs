//! The delayed subgradient run loop and its analysis tools.
//!
//! One iteration of the method is
//!
//! ```text
//! x_{n+1} = T x_n - alpha_n g_{n - tau_n},     g_k = subgradient of f at T x_k,
//! ```
//!
//! where the delay `tau_n` may reuse a subgradient computed up to `tau`
//! iterations earlier (indices before the start clamp to 0). Subgradients are
//! cached by iteration index, so schedules that repeat an index never pay for
//! it twice; with the cyclic schedule, `N` iterations cost `ceil(N / (tau+1))`
//! oracle calls. An optional guard ball projects every iterate back into a
//! bounded region; guarded runs evaluate the subgradient at the current
//! `T x_n` instead of a delayed point.
//!
//! [`rate_bound`] and [`log_rate_bound`] evaluate the a-priori optimality-gap
//! bounds attached to the method, and [`check_certificate`] replays a recorded
//! run against the per-iteration descent inequality those bounds rest on.

use std::collections::VecDeque;
use std::time::Instant;

use crate::objectives::{EpsOracle, SubgradientOracle};
use crate::operators::{BallProjection, FneOperator};
use crate::{error::Error, mix_seed, DenseVector};

/// When the stale subgradient used at iteration `n` was computed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DelaySchedule {
    /// `tau_n = 0`: always the current point.
    Zero,
    /// `tau_n = tau` for every `n`; early indices clamp to the start.
    Fixed(usize),
    /// `tau_n = n mod (tau+1)`: a subgradient is computed once and reused for
    /// the next `tau` iterations.
    Cyclic(usize),
    /// `tau_n` cycles through the given nonempty list.
    Custom(Vec<usize>),
}

impl DelaySchedule {
    /// Upper bound `tau` with `tau_n <= tau` for all `n`.
    pub fn bound(&self) -> usize {
        match self {
            DelaySchedule::Zero => 0,
            DelaySchedule::Fixed(tau) | DelaySchedule::Cyclic(tau) => *tau,
            DelaySchedule::Custom(list) => list.iter().copied().max().unwrap_or(0),
        }
    }

    /// Delay applied at iteration `n`.
    pub fn delay_at(&self, n: usize) -> usize {
        match self {
            DelaySchedule::Zero => 0,
            DelaySchedule::Fixed(tau) => *tau,
            DelaySchedule::Cyclic(tau) => n % (tau + 1),
            DelaySchedule::Custom(list) => list[n % list.len()],
        }
    }

    fn validate(&self) -> Result<(), Error> {
        if matches!(self, DelaySchedule::Custom(list) if list.is_empty()) {
            return Err(Error::invalid(
                "delay schedule: custom list must be nonempty",
            ));
        }
        Ok(())
    }
}

/// Step-size sequence `alpha_n`.
#[derive(Clone, Debug, PartialEq)]
pub enum StepSchedule {
    /// `alpha_n = (a0 / (n+1)) * (8 / (3 + 2(tau+1)^2))^(1/a)`.
    ///
    /// The scale is chosen so that `(3 + 2(tau+1)^2) * alpha_0^a = 8 * a0^a`,
    /// hence the rate-bound hypothesis holds exactly when `a0 < 1`.
    Harmonic { a0: f64, a: f64, tau: usize },
    /// `alpha_n = alpha / (n+1)`.
    Inverse { alpha: f64 },
    /// Explicit leading steps; iterations beyond the list reuse the last entry.
    Custom(Vec<f64>),
}

impl StepSchedule {
    /// Step used at iteration `n`.
    pub fn alpha(&self, n: usize) -> f64 {
        match self {
            StepSchedule::Harmonic { a0, a, tau } => {
                harmonic_alpha0(*a0, *a, *tau) / (n + 1) as f64
            }
            StepSchedule::Inverse { alpha } => alpha / (n + 1) as f64,
            StepSchedule::Custom(list) => list[n.min(list.len() - 1)],
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        match self {
            StepSchedule::Harmonic { a0, a, .. } => {
                if !(*a > 0.0 && *a < 1.0) {
                    return Err(Error::invalid(format!("a must lie in (0,1), got {a}")));
                }
                if !(*a0 > 0.0) {
                    return Err(Error::invalid(format!("a0 must be positive, got {a0}")));
                }
                Ok(())
            }
            StepSchedule::Inverse { alpha } => {
                if !(*alpha > 0.0) {
                    return Err(Error::invalid(format!(
                        "alpha must be positive, got {alpha}"
                    )));
                }
                Ok(())
            }
            StepSchedule::Custom(list) => {
                if list.is_empty() {
                    return Err(Error::invalid(
                        "step schedule: custom list must be nonempty",
                    ));
                }
                if list.iter().any(|s| !(*s > 0.0)) {
                    return Err(Error::invalid("step schedule: all steps must be positive"));
                }
                Ok(())
            }
        }
    }
}

/// First step of the harmonic schedule:
/// `alpha_0 = a0 * (8 / (3 + 2(tau+1)^2))^(1/a)`.
pub fn harmonic_alpha0(a0: f64, a: f64, tau: usize) -> f64 {
    a0 * (8.0 / delay_coefficient(tau)).powf(1.0 / a)
}

/// The delay-dependent coefficient `3 + 2(tau+1)^2` from the rate hypothesis.
pub fn delay_coefficient(tau: usize) -> f64 {
    3.0 + 2.0 * ((tau + 1) as f64).powi(2)
}

/// Termination rule; at least one bound must be set, and the run stops at
/// whichever bound trips first.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StopRule {
    pub max_iters: Option<usize>,
    pub max_seconds: Option<f64>,
}

impl StopRule {
    pub fn iters(n: usize) -> Self {
        StopRule {
            max_iters: Some(n),
            max_seconds: None,
        }
    }

    pub fn seconds(s: f64) -> Self {
        StopRule {
            max_iters: None,
            max_seconds: Some(s),
        }
    }

    pub(crate) fn validate(&self) -> Result<(), Error> {
        if self.max_iters.is_none() && self.max_seconds.is_none() {
            return Err(Error::invalid("stop rule: at least one bound must be set"));
        }
        if let Some(s) = self.max_seconds {
            if !(s > 0.0) {
                return Err(Error::invalid(format!(
                    "stop rule: max_seconds must be positive, got {s}"
                )));
            }
        }
        Ok(())
    }
}

/// Which stop bound ended the run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    MaxIters,
    TimeLimit,
}

/// Optional run knobs.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Record every iterate `x_0..x_N` into the trace (needed by
    /// [`check_certificate`]); off by default to keep long runs cheap.
    pub record_iterates: bool,
}

/// Per-iteration measurements.
#[derive(Clone, Copy, Debug)]
pub struct TraceRecord {
    pub n: usize,
    /// Step `alpha_n`.
    pub alpha: f64,
    /// Delay `tau_n` actually applied (0 in guarded mode).
    pub tau: usize,
    /// Slack of the epsilon-subgradient used (0 for exact runs).
    pub eps: f64,
    /// `f(x_{n+1})`.
    pub f_next: f64,
    /// `min_{k <= n} f(x_{k+1})`.
    pub best_f: f64,
    /// Fixed-point residual `||T x_n - x_n||`.
    pub fix_residual: f64,
    /// `||x_{n+1} - x_n||`.
    pub step_norm: f64,
    /// Largest subgradient norm observed so far.
    pub max_subgrad_norm: f64,
    /// Largest iterate norm observed so far (including `x_0`).
    pub max_iterate_norm: f64,
    /// Distinct subgradient evaluations so far.
    pub oracle_calls: u64,
    /// Wall-clock seconds since the run started.
    pub elapsed: f64,
}

/// Full record of a run.
#[derive(Clone, Debug)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
    /// `x_0..x_N` when recording was requested.
    pub iterates: Option<Vec<DenseVector>>,
    pub status: StopReason,
    /// `f(x_0)`.
    pub f_initial: f64,
    /// Total distinct subgradient evaluations.
    pub oracle_calls: u64,
    /// Per-worker oracle calls for distributed runs; empty otherwise.
    pub worker_oracle_calls: Vec<u64>,
    /// True when a guard ball was active.
    pub guarded: bool,
}

impl RunTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    /// Best objective value seen among `x_1..x_N`.
    pub fn best_f(&self) -> f64 {
        self.records.last().map_or(f64::INFINITY, |r| r.best_f)
    }
}

/// Ring of the last `window` transformed iterates `T x_k` plus a lazy cache of
/// subgradients keyed by iteration index. A cache hit never recomputes, so the
/// number of oracle calls equals the number of distinct indices requested.
pub struct HistoryBuffer {
    window: usize,
    points: VecDeque<(usize, DenseVector)>,
    grads: VecDeque<(usize, DenseVector)>,
}

impl HistoryBuffer {
    /// `window` = delay bound + 1: how many trailing iterates stay reachable.
    pub fn new(window: usize) -> Self {
        assert!(window >= 1, "HistoryBuffer: window must be at least 1");
        HistoryBuffer {
            window,
            points: VecDeque::with_capacity(window + 1),
            grads: VecDeque::with_capacity(window + 1),
        }
    }

    /// Stores `T x_index`; evicts entries that fell out of the window.
    pub fn push_point(&mut self, index: usize, point: DenseVector) {
        self.points.push_back((index, point));
        while self.points.len() > self.window {
            self.points.pop_front();
        }
        // The gradient cache follows request order, not index order, so a
        // front-only eviction could strand stale entries behind newer ones.
        let oldest = self.points.front().map_or(0, |(i, _)| *i);
        self.grads.retain(|(i, _)| *i >= oldest);
    }

    /// The stored point for `index`, if it is still inside the window.
    pub fn point(&self, index: usize) -> Option<&DenseVector> {
        self.points
            .iter()
            .find(|(i, _)| *i == index)
            .map(|(_, p)| p)
    }

    /// Cached subgradient for `index`, or computes one from the stored point.
    /// The boolean reports whether `compute` ran.
    pub fn subgradient_at<F>(
        &mut self,
        index: usize,
        compute: F,
    ) -> Result<(DenseVector, bool), Error>
    where
        F: FnOnce(&DenseVector) -> Result<DenseVector, Error>,
    {
        if let Some((_, g)) = self.grads.iter().find(|(i, _)| *i == index) {
            return Ok((g.clone(), false));
        }
        let point = self.point(index).ok_or_else(|| {
            Error::invalid(format!(
                "history buffer: index {index} fell out of the window"
            ))
        })?;
        let g = compute(point)?;
        self.grads.push_back((index, g.clone()));
        Ok((g, true))
    }
}

/// `T x - alpha * g`; the one place the update arithmetic lives, so the exact,
/// inexact and distributed runners produce bitwise-identical steps.
pub(crate) fn fdsm_update(t: &DenseVector, g: &DenseVector, alpha: f64) -> DenseVector {
    let mut out = t.clone();
    out.axpy(-alpha, g, 1.0);
    out
}

struct CoreConfig<'a> {
    op: &'a dyn FneOperator,
    x0: &'a DenseVector,
    steps: &'a StepSchedule,
    delays: &'a DelaySchedule,
    stop: &'a StopRule,
    guard: Option<&'a BallProjection>,
    options: &'a RunOptions,
}

/// Shared run loop. `value` evaluates f for the trace; `grad` computes the
/// (possibly approximate) subgradient for an iteration index at a given point;
/// `eps_at` reports the slack associated with that index for the trace.
fn run_core(
    cfg: CoreConfig<'_>,
    value: &dyn Fn(&DenseVector) -> f64,
    grad: &mut dyn FnMut(usize, &DenseVector) -> Result<DenseVector, Error>,
    eps_at: &dyn Fn(usize) -> f64,
) -> Result<(DenseVector, RunTrace), Error> {
    cfg.steps.validate()?;
    cfg.delays.validate()?;
    cfg.stop.validate()?;
    let dim = cfg.op.dim();
    if cfg.x0.len() != dim {
        return Err(Error::Dimension {
            context: "run: x0",
            expected: dim,
            actual: cfg.x0.len(),
        });
    }
    if let Some(ball) = cfg.guard {
        if ball.dim() != dim {
            return Err(Error::Dimension {
                context: "run: guard ball",
                expected: dim,
                actual: ball.dim(),
            });
        }
    }

    let start = Instant::now();
    let window = cfg.delays.bound() + 1;
    let mut history = HistoryBuffer::new(window);
    let mut x = cfg.x0.clone();
    let f_initial = value(&x);
    let mut best = f64::INFINITY;
    let mut max_grad_norm: f64 = 0.0;
    let mut max_iterate_norm = x.norm();
    let mut oracle_calls: u64 = 0;
    let mut records = Vec::new();
    let mut iterates = cfg.options.record_iterates.then(|| vec![x.clone()]);

    let status;
    let mut n = 0usize;
    loop {
        if cfg.stop.max_iters.is_some_and(|m| n >= m) {
            status = StopReason::MaxIters;
            break;
        }
        if cfg
            .stop
            .max_seconds
            .is_some_and(|s| start.elapsed().as_secs_f64() >= s)
        {
            status = StopReason::TimeLimit;
            break;
        }

        let alpha = cfg.steps.alpha(n);
        let t_now = cfg.op.apply(&x);
        let fix_residual = (&t_now - &x).norm();

        let (g, tau_n, eps_used) = if cfg.guard.is_some() {
            // Guarded recursion: subgradient at the current transformed point.
            let g = grad(n, &t_now).map_err(|e| e.at_iteration(n))?;
            oracle_calls += 1;
            (g, 0, eps_at(n))
        } else {
            let tau_n = cfg.delays.delay_at(n);
            let k = n.saturating_sub(tau_n);
            history.push_point(n, t_now.clone());
            let (g, fresh) = history
                .subgradient_at(k, |point| grad(k, point))
                .map_err(|e| e.at_iteration(n))?;
            if fresh {
                oracle_calls += 1;
            }
            (g, tau_n, eps_at(k))
        };

        max_grad_norm = max_grad_norm.max(g.norm());
        let mut x_next = fdsm_update(&t_now, &g, alpha);
        if let Some(ball) = cfg.guard {
            x_next = ball.apply(&x_next);
        }

        let f_next = value(&x_next);
        best = best.min(f_next);
        max_iterate_norm = max_iterate_norm.max(x_next.norm());
        records.push(TraceRecord {
            n,
            alpha,
            tau: tau_n,
            eps: eps_used,
            f_next,
            best_f: best,
            fix_residual,
            step_norm: (&x_next - &x).norm(),
            max_subgrad_norm: max_grad_norm,
            max_iterate_norm,
            oracle_calls,
            elapsed: start.elapsed().as_secs_f64(),
        });
        if let Some(list) = iterates.as_mut() {
            list.push(x_next.clone());
        }
        x = x_next;
        n += 1;
    }

    let trace = RunTrace {
        records,
        iterates,
        status,
        f_initial,
        oracle_calls,
        worker_oracle_calls: Vec::new(),
        guarded: cfg.guard.is_some(),
    };
    Ok((x, trace))
}

/// Runs the delayed subgradient iteration with an exact oracle.
///
/// Returns the final iterate and the full trace. With `guard` set, every step
/// is projected into the guard ball and the subgradient is taken at the
/// current `T x_n` (no delay), which keeps iterates bounded by construction.
#[allow(clippy::too_many_arguments)]
pub fn run_fdsm(
    op: &dyn FneOperator,
    objective: &dyn SubgradientOracle,
    x0: &DenseVector,
    steps: &StepSchedule,
    delays: &DelaySchedule,
    stop: &StopRule,
    guard: Option<&BallProjection>,
    options: &RunOptions,
) -> Result<(DenseVector, RunTrace), Error> {
    if objective.dim() != op.dim() {
        return Err(Error::Dimension {
            context: "run_fdsm: objective",
            expected: op.dim(),
            actual: objective.dim(),
        });
    }
    let cfg = CoreConfig {
        op,
        x0,
        steps,
        delays,
        stop,
        guard,
        options,
    };
    run_core(
        cfg,
        &|x| objective.value(x),
        &mut |_, point| Ok(objective.subgradient(point)),
        &|_| 0.0,
    )
}

/// Slack sequence `eps_k` consumed by [`run_inexact`].
#[derive(Clone, Debug, PartialEq)]
pub enum EpsSchedule {
    /// `eps_k = eps0 / (k+1)`; vanishing, the default choice.
    Harmonic { eps0: f64 },
    /// `eps_k = eps` for every `k`.
    Constant { eps: f64 },
    /// Explicit leading values; indices beyond the list reuse the last entry.
    Custom(Vec<f64>),
}

impl EpsSchedule {
    /// Slack granted to the subgradient computed at iteration index `k`.
    pub fn eps(&self, k: usize) -> f64 {
        match self {
            EpsSchedule::Harmonic { eps0 } => eps0 / (k + 1) as f64,
            EpsSchedule::Constant { eps } => *eps,
            EpsSchedule::Custom(list) => list[k.min(list.len() - 1)],
        }
    }

    fn validate(&self) -> Result<(), Error> {
        let bad = match self {
            EpsSchedule::Harmonic { eps0 } => !(*eps0 >= 0.0),
            EpsSchedule::Constant { eps } => !(*eps >= 0.0),
            EpsSchedule::Custom(list) => list.is_empty() || list.iter().any(|e| !(*e >= 0.0)),
        };
        if bad {
            return Err(Error::invalid(
                "eps schedule: slacks must be nonnegative (and the custom list nonempty)",
            ));
        }
        Ok(())
    }
}

/// Runs the delayed iteration with an epsilon-subgradient oracle.
///
/// The subgradient for iteration index `k` is drawn with slack
/// `eps_schedule.eps(k)` and a per-index seed derived from `seed`, so runs are
/// deterministic. A zero schedule reproduces [`run_fdsm`] bit for bit.
#[allow(clippy::too_many_arguments)]
pub fn run_inexact(
    op: &dyn FneOperator,
    oracle: &EpsOracle,
    x0: &DenseVector,
    steps: &StepSchedule,
    delays: &DelaySchedule,
    stop: &StopRule,
    eps_schedule: &EpsSchedule,
    seed: u64,
    guard: Option<&BallProjection>,
    options: &RunOptions,
) -> Result<(DenseVector, RunTrace), Error> {
    if oracle.dim() != op.dim() {
        return Err(Error::Dimension {
            context: "run_inexact: oracle",
            expected: op.dim(),
            actual: oracle.dim(),
        });
    }
    eps_schedule.validate()?;
    let cfg = CoreConfig {
        op,
        x0,
        steps,
        delays,
        stop,
        guard,
        options,
    };
    run_core(
        cfg,
        &|x| oracle.value(x),
        &mut |k, point| {
            oracle.eps_subgradient(point, eps_schedule.eps(k), mix_seed(seed, k as u64))
        },
        &|k| eps_schedule.eps(k),
    )
}

fn check_bound_inputs(dist0_sq: f64, c: f64, a: f64) -> Result<(), Error> {
    if !(dist0_sq >= 0.0) || !dist0_sq.is_finite() {
        return Err(Error::invalid(format!(
            "rate bound: dist0_sq must be finite and nonnegative, got {dist0_sq}"
        )));
    }
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::invalid(format!(
            "rate bound: c must be finite and nonnegative, got {c}"
        )));
    }
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::invalid(format!("a must lie in (0,1), got {a}")));
    }
    Ok(())
}

/// A-priori bound on `min_{0 <= k <= n} f(x_{k+1}) - f*` for a run with
/// delay bound `tau`, subgradient norms at most `c`, and
/// `dist0_sq = ||x_0 - x*||^2`:
///
/// ```text
/// (dist0_sq + 2 c^2 sum alpha_k^2 + 40 c^2 sum alpha_k^(2-a)) / (2 sum alpha_k)
/// ```
///
/// Requires a nonincreasing schedule with `(3 + 2(tau+1)^2) * alpha_0^a < 8`.
pub fn rate_bound(
    dist0_sq: f64,
    c: f64,
    steps: &StepSchedule,
    tau: usize,
    a: f64,
    n: usize,
) -> Result<f64, Error> {
    let curve = rate_bound_curve(dist0_sq, c, steps, tau, a, n)?;
    Ok(*curve.last().expect("curve covers 0..=n"))
}

/// [`rate_bound`] evaluated for every horizon `0..=n_max` in one pass.
pub fn rate_bound_curve(
    dist0_sq: f64,
    c: f64,
    steps: &StepSchedule,
    tau: usize,
    a: f64,
    n_max: usize,
) -> Result<Vec<f64>, Error> {
    check_bound_inputs(dist0_sq, c, a)?;
    steps.validate()?;
    let alpha0 = steps.alpha(0);
    let product = delay_coefficient(tau) * alpha0.powf(a);
    if !(product < 8.0) {
        return Err(Error::StepHypothesis {
            name: "(3 + 2(tau+1)^2) * alpha_0^a",
            value: product,
            limit: 8.0,
        });
    }
    let mut sum_alpha = 0.0;
    let mut sum_sq = 0.0;
    let mut sum_pow = 0.0;
    let mut prev = f64::INFINITY;
    let mut out = Vec::with_capacity(n_max + 1);
    for k in 0..=n_max {
        let alpha = steps.alpha(k);
        if alpha > prev {
            return Err(Error::invalid(format!(
                "rate bound: step schedule must be nonincreasing (alpha_{k} > alpha_{})",
                k - 1
            )));
        }
        prev = alpha;
        sum_alpha += alpha;
        sum_sq += alpha * alpha;
        sum_pow += alpha.powf(2.0 - a);
        out.push((dist0_sq + 2.0 * c * c * sum_sq + 40.0 * c * c * sum_pow) / (2.0 * sum_alpha));
    }
    Ok(out)
}

/// Closed-form bound for the `alpha_n = alpha/(n+1)` schedule:
///
/// ```text
/// (dist0_sq + 4 c^2 alpha^2 + 40 c^2 alpha^(2-a) (2-a)/(1-a)) / (2 alpha)
///   * 1 / ln(n + 2)
/// ```
///
/// The gap decays like `1 / log n`. Requires `a` in `(0,1)` and
/// `(3 + 2(tau+1)^2) * alpha^a < 8`.
pub fn log_rate_bound(
    dist0_sq: f64,
    c: f64,
    alpha: f64,
    tau: usize,
    a: f64,
    n: usize,
) -> Result<f64, Error> {
    check_bound_inputs(dist0_sq, c, a)?;
    if !(alpha > 0.0) {
        return Err(Error::invalid(format!(
            "log_rate_bound: alpha must be positive, got {alpha}"
        )));
    }
    let product = delay_coefficient(tau) * alpha.powf(a);
    if !(product < 8.0) {
        return Err(Error::StepHypothesis {
            name: "(3 + 2(tau+1)^2) * alpha^a",
            value: product,
            limit: 8.0,
        });
    }
    let numerator = dist0_sq
        + 4.0 * c * c * alpha * alpha
        + 40.0 * c * c * alpha.powf(2.0 - a) * (2.0 - a) / (1.0 - a);
    Ok(numerator / (2.0 * alpha) / ((n as f64 + 2.0).ln()))
}

/// Tolerance granted to each side of the descent certificate.
pub const CERTIFICATE_TOL: f64 = 1e-8;

/// Outcome of [`check_certificate`].
#[derive(Clone, Debug)]
pub struct CertificateReport {
    /// Iterations examined.
    pub checked: usize,
    /// Iterations whose inequality failed by more than [`CERTIFICATE_TOL`].
    pub violations: Vec<usize>,
    /// Largest observed `lhs - rhs` (negative when everything is clean).
    pub max_violation: f64,
}

impl CertificateReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Replays a recorded run against the per-iteration descent inequality
///
/// ```text
/// ||x_{n+1} - x*||^2 <= ||x_n - x*||^2 - ||x_{n+1} - x_n||^2
///     + 2 alpha_n c_hat ||x_{n-tau_n} - x_n|| + 2 alpha_n c_hat ||x_{n+1} - x_n||
///     + 2 alpha_n (f(x*) - f(T x_{n-tau_n}))
/// ```
///
/// for a known `x_star` in `Fix T` and a bound `c_hat` on the subgradient
/// norms the run used. The trace must carry recorded iterates and come from an
/// unguarded run (the guarded recursion satisfies a different inequality).
/// An undersized `c_hat` is expected to produce violations.
pub fn check_certificate(
    op: &dyn FneOperator,
    objective: &dyn SubgradientOracle,
    trace: &RunTrace,
    x_star: &DenseVector,
    c_hat: f64,
) -> Result<CertificateReport, Error> {
    if trace.guarded {
        return Err(Error::invalid(
            "check_certificate: certificate applies to unguarded runs only",
        ));
    }
    let iterates = trace.iterates.as_ref().ok_or_else(|| {
        Error::invalid(
            "check_certificate: trace has no recorded iterates; set RunOptions::record_iterates",
        )
    })?;
    if iterates.len() != trace.records.len() + 1 {
        return Err(Error::invalid(format!(
            "check_certificate: expected {} recorded iterates, found {}",
            trace.records.len() + 1,
            iterates.len()
        )));
    }
    if x_star.len() != op.dim() {
        return Err(Error::Dimension {
            context: "check_certificate: x_star",
            expected: op.dim(),
            actual: x_star.len(),
        });
    }

    let f_star = objective.value(x_star);
    let mut violations = Vec::new();
    let mut max_violation = f64::NEG_INFINITY;
    for record in &trace.records {
        let n = record.n;
        let x_n = &iterates[n];
        let x_next = &iterates[n + 1];
        let k = n.saturating_sub(record.tau);
        let x_k = &iterates[k];
        let t_k = op.apply(x_k);

        let lhs = (x_next - x_star).norm_squared();
        let rhs = (x_n - x_star).norm_squared() - (x_next - x_n).norm_squared()
            + 2.0 * record.alpha * c_hat * (x_k - x_n).norm()
            + 2.0 * record.alpha * c_hat * (x_next - x_n).norm()
            + 2.0 * record.alpha * (f_star - objective.value(&t_k));
        let violation = lhs - rhs;
        max_violation = max_violation.max(violation);
        if violation > CERTIFICATE_TOL {
            violations.push(n);
        }
    }
    Ok(CertificateReport {
        checked: trace.records.len(),
        violations,
        max_violation,
    })
}

//! Consensus variant of the delayed subgradient method.
//!
//! `m` workers each hold a firmly nonexpansive operator `T_j` and an objective
//! `f_j`. Every round, worker `j` takes one delayed step from the shared
//! server point,
//!
//! ```text
//! x_{n,j} = T_j x_n - alpha_n g_{j, n - tau_n^j},
//! ```
//!
//! and the server averages: `x_{n+1} = (1/m) sum_j x_{n,j}`, summed in worker
//! index order so runs are reproducible bit for bit. The target is a common
//! fixed point minimizing `f = sum_j f_j`. With a single worker the recursion
//! reduces to the serial method exactly.

use std::sync::Arc;
use std::time::Instant;

use crate::objectives::SubgradientOracle;
use crate::operators::FneOperator;
use crate::solver::{
    fdsm_update, DelaySchedule, HistoryBuffer, RunOptions, RunTrace, StepSchedule, StopReason,
    StopRule, TraceRecord,
};
use crate::{error::Error, DenseVector};

/// One worker: its operator, its share of the objective, and its own delay
/// schedule (workers may be staler than one another).
#[derive(Clone)]
pub struct WorkerSpec {
    pub operator: Arc<dyn FneOperator>,
    pub objective: Arc<dyn SubgradientOracle>,
    pub delays: DelaySchedule,
}

impl WorkerSpec {
    pub fn new(
        operator: Arc<dyn FneOperator>,
        objective: Arc<dyn SubgradientOracle>,
        delays: DelaySchedule,
    ) -> Self {
        WorkerSpec {
            operator,
            objective,
            delays,
        }
    }
}

/// Runs the averaged multi-worker recursion.
///
/// Trace semantics: `f_next` is the pooled objective `sum_j f_j` at the new
/// server point, `best_f` additionally covers the initial point, `fix_residual`
/// is the worst per-worker residual `max_j ||T_j x_n - x_n||`, `tau` the
/// largest delay any worker applied that round, and `worker_oracle_calls`
/// counts distinct subgradient evaluations per worker.
pub fn run_distributed(
    workers: &[WorkerSpec],
    x0: &DenseVector,
    steps: &StepSchedule,
    stop: &StopRule,
    options: &RunOptions,
) -> Result<(DenseVector, RunTrace), Error> {
    if workers.is_empty() {
        return Err(Error::invalid(
            "run_distributed: at least one worker required",
        ));
    }
    let dim = workers[0].operator.dim();
    for (j, w) in workers.iter().enumerate() {
        if w.operator.dim() != dim {
            return Err(Error::Dimension {
                context: "run_distributed: worker operator",
                expected: dim,
                actual: w.operator.dim(),
            });
        }
        if w.objective.dim() != dim {
            return Err(Error::Dimension {
                context: "run_distributed: worker objective",
                expected: dim,
                actual: w.objective.dim(),
            });
        }
        if matches!(&w.delays, DelaySchedule::Custom(list) if list.is_empty()) {
            return Err(Error::invalid(format!(
                "run_distributed: worker {j} has an empty custom delay schedule"
            )));
        }
    }
    if x0.len() != dim {
        return Err(Error::Dimension {
            context: "run_distributed: x0",
            expected: dim,
            actual: x0.len(),
        });
    }
    steps.validate()?;
    stop.validate()?;

    let m = workers.len();
    let inv_m = m as f64;
    let pooled = |x: &DenseVector| workers.iter().map(|w| w.objective.value(x)).sum::<f64>();

    let start = Instant::now();
    let mut histories: Vec<HistoryBuffer> = workers
        .iter()
        .map(|w| HistoryBuffer::new(w.delays.bound() + 1))
        .collect();
    let mut worker_calls = vec![0u64; m];
    let mut x = x0.clone();
    let f_initial = pooled(&x);
    let mut best = f_initial;
    let mut max_grad_norm: f64 = 0.0;
    let mut max_iterate_norm = x.norm();
    let mut records = Vec::new();
    let mut iterates = options.record_iterates.then(|| vec![x.clone()]);

    let status;
    let mut n = 0usize;
    loop {
        if stop.max_iters.is_some_and(|limit| n >= limit) {
            status = StopReason::MaxIters;
            break;
        }
        if stop
            .max_seconds
            .is_some_and(|s| start.elapsed().as_secs_f64() >= s)
        {
            status = StopReason::TimeLimit;
            break;
        }

        let alpha = steps.alpha(n);
        let mut acc: Option<DenseVector> = None;
        let mut round_tau = 0usize;
        let mut round_residual: f64 = 0.0;
        for (j, w) in workers.iter().enumerate() {
            let t_j = w.operator.apply(&x);
            round_residual = round_residual.max((&t_j - &x).norm());
            let tau_n = w.delays.delay_at(n);
            round_tau = round_tau.max(tau_n);
            let k = n.saturating_sub(tau_n);
            histories[j].push_point(n, t_j.clone());
            let objective = Arc::clone(&w.objective);
            let (g, fresh) = histories[j]
                .subgradient_at(k, |point| Ok(objective.subgradient(point)))
                .map_err(|e| e.at_iteration(n))?;
            if fresh {
                worker_calls[j] += 1;
            }
            max_grad_norm = max_grad_norm.max(g.norm());
            let local = fdsm_update(&t_j, &g, alpha);
            acc = Some(match acc {
                None => local,
                Some(mut sum) => {
                    sum += &local;
                    sum
                }
            });
        }
        let mut x_next = acc.expect("at least one worker");
        x_next /= inv_m;

        let f_next = pooled(&x_next);
        best = best.min(f_next);
        max_iterate_norm = max_iterate_norm.max(x_next.norm());
        records.push(TraceRecord {
            n,
            alpha,
            tau: round_tau,
            eps: 0.0,
            f_next,
            best_f: best,
            fix_residual: round_residual,
            step_norm: (&x_next - &x).norm(),
            max_subgrad_norm: max_grad_norm,
            max_iterate_norm,
            oracle_calls: worker_calls.iter().sum(),
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
        oracle_calls: worker_calls.iter().sum(),
        worker_oracle_calls: worker_calls,
        guarded: false,
    };
    Ok((x, trace))
}

/// The delay coefficient of the distributed hypothesis, `4 + 2(tau+1)^2`.
pub fn distributed_delay_coefficient(tau: usize) -> f64 {
    4.0 + 2.0 * ((tau + 1) as f64).powi(2)
}

/// A-priori bound on `min_{0 <= k <= n} f(x_k) - f*` for the averaged run:
///
/// ```text
/// (m dist0_sq + 2 m c_max^2 sum alpha_k^2
///    + m (40 c_max^2 + 8 l_max^2) sum alpha_k^(2-a)) / (2 sum alpha_k)
/// ```
///
/// with `c_max` bounding every worker's subgradient norms, `l_max` a common
/// Lipschitz bound for the worker objectives, and `tau_max` the largest delay
/// any worker uses. Requires a nonincreasing schedule with
/// `(4 + 2(tau_max+1)^2) * alpha_0^a < 8`.
#[allow(clippy::too_many_arguments)]
pub fn distributed_rate_bound(
    m: usize,
    dist0_sq: f64,
    c_max: f64,
    l_max: f64,
    steps: &StepSchedule,
    tau_max: usize,
    a: f64,
    n: usize,
) -> Result<f64, Error> {
    let curve = distributed_rate_bound_curve(m, dist0_sq, c_max, l_max, steps, tau_max, a, n)?;
    Ok(*curve.last().expect("curve covers 0..=n"))
}

/// [`distributed_rate_bound`] for every horizon `0..=n_max` in one pass.
#[allow(clippy::too_many_arguments)]
pub fn distributed_rate_bound_curve(
    m: usize,
    dist0_sq: f64,
    c_max: f64,
    l_max: f64,
    steps: &StepSchedule,
    tau_max: usize,
    a: f64,
    n_max: usize,
) -> Result<Vec<f64>, Error> {
    if m == 0 {
        return Err(Error::invalid(
            "distributed rate bound: m must be at least 1",
        ));
    }
    if !(dist0_sq >= 0.0) || !dist0_sq.is_finite() {
        return Err(Error::invalid(format!(
            "distributed rate bound: dist0_sq must be finite and nonnegative, got {dist0_sq}"
        )));
    }
    if !(c_max >= 0.0) || !c_max.is_finite() || !(l_max >= 0.0) || !l_max.is_finite() {
        return Err(Error::invalid(
            "distributed rate bound: c_max and l_max must be finite and nonnegative",
        ));
    }
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::invalid(format!("a must lie in (0,1), got {a}")));
    }
    steps.validate()?;
    let alpha0 = steps.alpha(0);
    let product = distributed_delay_coefficient(tau_max) * alpha0.powf(a);
    if !(product < 8.0) {
        return Err(Error::StepHypothesis {
            name: "(4 + 2(tau_max+1)^2) * alpha_0^a",
            value: product,
            limit: 8.0,
        });
    }
    let m_f = m as f64;
    let mut sum_alpha = 0.0;
    let mut sum_sq = 0.0;
    let mut sum_pow = 0.0;
    let mut prev = f64::INFINITY;
    let mut out = Vec::with_capacity(n_max + 1);
    for k in 0..=n_max {
        let alpha = steps.alpha(k);
        if alpha > prev {
            return Err(Error::invalid(format!(
                "distributed rate bound: step schedule must be nonincreasing (alpha_{k} > alpha_{})",
                k - 1
            )));
        }
        prev = alpha;
        sum_alpha += alpha;
        sum_sq += alpha * alpha;
        sum_pow += alpha.powf(2.0 - a);
        let numerator = m_f * dist0_sq
            + 2.0 * m_f * c_max * c_max * sum_sq
            + m_f * (40.0 * c_max * c_max + 8.0 * l_max * l_max) * sum_pow;
        out.push(numerator / (2.0 * sum_alpha));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{l1_composite, translate, ZeroObjective};
    use crate::operators::BoxProjection;
    use crate::solver::run_fdsm;
    use crate::transforms::IdentityMap;
    use approx::assert_abs_diff_eq;

    fn vec_of(vals: &[f64]) -> DenseVector {
        DenseVector::from_column_slice(vals)
    }

    fn box_worker(lo: &[f64], hi: &[f64], delays: DelaySchedule) -> WorkerSpec {
        let dim = lo.len();
        WorkerSpec::new(
            Arc::new(BoxProjection::new(vec_of(lo), vec_of(hi)).unwrap()),
            Arc::new(l1_composite(Arc::new(IdentityMap::new(dim)))),
            delays,
        )
    }

    #[test]
    fn single_worker_matches_serial_run_bitwise() {
        let op = BoxProjection::new(vec_of(&[1.0]), vec_of(&[2.0])).unwrap();
        let f = l1_composite(Arc::new(IdentityMap::new(1)));
        let steps = StepSchedule::Harmonic {
            a0: 0.5,
            a: 0.5,
            tau: 1,
        };
        let stop = StopRule::iters(400);
        let (x_serial, t_serial) = run_fdsm(
            &op,
            &f,
            &vec_of(&[5.0]),
            &steps,
            &DelaySchedule::Cyclic(1),
            &stop,
            None,
            &RunOptions::default(),
        )
        .unwrap();

        let worker = WorkerSpec::new(
            Arc::new(BoxProjection::new(vec_of(&[1.0]), vec_of(&[2.0])).unwrap()),
            Arc::new(l1_composite(Arc::new(IdentityMap::new(1)))),
            DelaySchedule::Cyclic(1),
        );
        let (x_dist, t_dist) = run_distributed(
            &[worker],
            &vec_of(&[5.0]),
            &steps,
            &stop,
            &RunOptions::default(),
        )
        .unwrap();

        assert_eq!(x_serial.as_slice(), x_dist.as_slice());
        assert_eq!(t_serial.oracle_calls, t_dist.oracle_calls);
        for (a, b) in t_serial.records.iter().zip(t_dist.records.iter()) {
            assert_eq!(a.f_next.to_bits(), b.f_next.to_bits());
        }
    }

    #[test]
    fn identical_workers_average_to_the_single_worker_path() {
        // (x + x) / 2 is exact in IEEE arithmetic, so two copies of one worker
        // must reproduce the single-worker trajectory bit for bit.
        let steps = StepSchedule::Inverse { alpha: 0.5 };
        let stop = StopRule::iters(200);
        let single = [box_worker(&[1.0], &[2.0], DelaySchedule::Cyclic(2))];
        let double = [
            box_worker(&[1.0], &[2.0], DelaySchedule::Cyclic(2)),
            box_worker(&[1.0], &[2.0], DelaySchedule::Cyclic(2)),
        ];
        let (x1, _) = run_distributed(
            &single,
            &vec_of(&[5.0]),
            &steps,
            &stop,
            &RunOptions::default(),
        )
        .unwrap();
        let (x2, t2) = run_distributed(
            &double,
            &vec_of(&[5.0]),
            &steps,
            &stop,
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(x1.as_slice(), x2.as_slice());
        // Pooled objective doubles but the path does not change.
        assert_eq!(t2.worker_oracle_calls.len(), 2);
    }

    #[test]
    fn one_round_average_matches_hand_computation() {
        // Zero objectives: one round averages the two projections of x0.
        let workers = [
            WorkerSpec::new(
                Arc::new(BoxProjection::new(vec_of(&[-1.0, -1.0]), vec_of(&[1.0, 1.0])).unwrap()),
                Arc::new(ZeroObjective::new(2)),
                DelaySchedule::Zero,
            ),
            WorkerSpec::new(
                Arc::new(BoxProjection::new(vec_of(&[-3.0, -3.0]), vec_of(&[3.0, 3.0])).unwrap()),
                Arc::new(ZeroObjective::new(2)),
                DelaySchedule::Zero,
            ),
        ];
        let (x1, trace) = run_distributed(
            &workers,
            &vec_of(&[2.0, 0.0]),
            &StepSchedule::Inverse { alpha: 1.0 },
            &StopRule::iters(1),
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(x1.as_slice(), &[1.5, 0.0]);
        assert_abs_diff_eq!(trace.records[0].fix_residual, 1.0, epsilon = 0.0);
    }

    #[test]
    fn per_worker_delay_schedules_economize_independently() {
        let workers = [
            box_worker(&[0.0], &[1.0], DelaySchedule::Cyclic(1)),
            box_worker(&[0.0], &[1.0], DelaySchedule::Cyclic(3)),
        ];
        let (_, trace) = run_distributed(
            &workers,
            &vec_of(&[0.5]),
            &StepSchedule::Inverse { alpha: 0.1 },
            &StopRule::iters(100),
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(trace.worker_oracle_calls, vec![50, 25]);
        assert_eq!(trace.oracle_calls, 75);
        // Round delay column records the largest worker delay.
        assert_eq!(trace.records[1].tau, 1);
        assert_eq!(trace.records[3].tau, 3);
    }

    #[test]
    fn shifted_objectives_pool_by_summation() {
        let dim = 2;
        let f_a = translate(
            Arc::new(l1_composite(Arc::new(IdentityMap::new(dim)))),
            vec_of(&[2.0, 0.0]),
        )
        .unwrap();
        let f_b = translate(
            Arc::new(l1_composite(Arc::new(IdentityMap::new(dim)))),
            vec_of(&[0.0, 2.0]),
        )
        .unwrap();
        let workers = [
            WorkerSpec::new(
                Arc::new(BoxProjection::new(vec_of(&[-5.0, -5.0]), vec_of(&[5.0, 5.0])).unwrap()),
                Arc::new(f_a),
                DelaySchedule::Zero,
            ),
            WorkerSpec::new(
                Arc::new(BoxProjection::new(vec_of(&[-5.0, -5.0]), vec_of(&[5.0, 5.0])).unwrap()),
                Arc::new(f_b),
                DelaySchedule::Zero,
            ),
        ];
        let (_, trace) = run_distributed(
            &workers,
            &vec_of(&[0.0, 0.0]),
            &StepSchedule::Inverse { alpha: 0.1 },
            &StopRule::iters(1),
            &RunOptions::default(),
        )
        .unwrap();
        // f(x0) = |0-2| + |0| + |0| + |0-2| = 4.
        assert_abs_diff_eq!(trace.f_initial, 4.0, epsilon = 0.0);
        assert!(trace.records[0].best_f <= trace.f_initial);
    }

    #[test]
    fn distributed_bound_matches_hand_computation() {
        // m = 2, dist0_sq = 1, c = 1, l = 1, alpha_0 = 0.5, a = 0.5, tau = 0:
        // hypothesis (4 + 2) * 0.5^0.5 < 8 holds; at N = 0 the bound is
        // (2 + 2*2*0.25 + 2*48*0.5^1.5) / 1.
        let steps = StepSchedule::Inverse { alpha: 0.5 };
        let bound = distributed_rate_bound(2, 1.0, 1.0, 1.0, &steps, 0, 0.5, 0).unwrap();
        let expected = (2.0 + 1.0 + 2.0 * 48.0 * 0.5f64.powf(1.5)) / 1.0;
        assert_abs_diff_eq!(bound, expected, epsilon = 1e-12);
    }

    #[test]
    fn distributed_bound_uses_the_stricter_coefficient() {
        // alpha = 1.9, a = 0.5, tau = 0: serial coefficient gives
        // 5 * 1.9^0.5 = 6.89 < 8, distributed 6 * 1.9^0.5 = 8.27 >= 8.
        let steps = StepSchedule::Inverse { alpha: 1.9 };
        assert!(crate::solver::rate_bound(1.0, 1.0, &steps, 0, 0.5, 0).is_ok());
        match distributed_rate_bound(1, 1.0, 1.0, 0.0, &steps, 0, 0.5, 0) {
            Err(Error::StepHypothesis { name, .. }) => {
                assert!(name.contains("4 + 2"));
            }
            other => panic!("expected StepHypothesis, got {other:?}"),
        }
    }

    #[test]
    fn rejects_mismatched_workers() {
        let workers = [
            box_worker(&[0.0], &[1.0], DelaySchedule::Zero),
            box_worker(&[0.0, 0.0], &[1.0, 1.0], DelaySchedule::Zero),
        ];
        assert!(run_distributed(
            &workers,
            &vec_of(&[0.5]),
            &StepSchedule::Inverse { alpha: 0.1 },
            &StopRule::iters(1),
            &RunOptions::default(),
        )
        .is_err());
        assert!(run_distributed(
            &[],
            &vec_of(&[0.5]),
            &StepSchedule::Inverse { alpha: 0.1 },
            &StopRule::iters(1),
            &RunOptions::default(),
        )
        .is_err());
    }
}

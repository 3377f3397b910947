//! Keeps the README quick-start honest: same code, same asserted numbers.

use std::sync::Arc;

use fdsm::objectives::{l1_composite, translate};
use fdsm::operators::BoxProjection;
use fdsm::solver::{run_fdsm, DelaySchedule, RunOptions, StepSchedule, StopRule};
use fdsm::transforms::IdentityMap;
use fdsm::DenseVector;

#[test]
fn readme_quick_start() -> Result<(), fdsm::Error> {
    let op = BoxProjection::new(DenseVector::zeros(2), DenseVector::from_element(2, 1.0))?;
    let f = translate(
        Arc::new(l1_composite(Arc::new(IdentityMap::new(2)))),
        DenseVector::from_element(2, 2.0),
    )?;

    let steps = StepSchedule::Inverse { alpha: 1.0 };
    let (x, trace) = run_fdsm(
        &op,
        &f,
        &DenseVector::zeros(2),
        &steps,
        &DelaySchedule::Cyclic(3),
        &StopRule::iters(10_000),
        None,
        &RunOptions::default(),
    )?;
    assert_eq!(trace.oracle_calls, 2_500);
    assert!((x[0] - 1.0).abs() < 1e-2 && (x[1] - 1.0).abs() < 1e-2);
    Ok(())
}

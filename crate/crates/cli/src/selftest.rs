//! `fdsm selftest`: fast sampled checks of the library's core contracts.
//!
//! Each suite prints one `ok` line; the first failure aborts with a runtime
//! error. The suites mirror the crate's invariants: firm nonexpansiveness of
//! the shipped operators, the subgradient inequality, adjoint consistency,
//! the delayed oracle-call economy, and the single-worker reduction.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fdsm::distributed::{run_distributed, WorkerSpec};
use fdsm::inpainting::{make_mask, make_transform, TransformKind};
use fdsm::objectives::{l1_composite, max_affine, SubgradientOracle};
use fdsm::operators::{
    check_fne, make_landweber, BallProjection, BoxProjection, FneOperator, HalfspaceProjection,
    IdentityOperator,
};
use fdsm::solver::{harmonic_alpha0, run_fdsm, DelaySchedule, RunOptions, StepSchedule, StopRule};
use fdsm::transforms::{haar_product_matrix, IdentityMap, LinearMap};
use fdsm::DenseVector;

use crate::config::CliError;

type Suite = (&'static str, fn() -> Result<(), String>);

fn vec_of(values: &[f64]) -> DenseVector {
    DenseVector::from_vec(values.to_vec())
}

fn operators_are_fne() -> Result<(), String> {
    let dim = 6;
    let ops: Vec<(&str, Arc<dyn FneOperator>)> = vec![
        ("identity", Arc::new(IdentityOperator::new(dim))),
        (
            "box",
            Arc::new(
                BoxProjection::new(
                    DenseVector::from_element(dim, -1.0),
                    DenseVector::from_element(dim, 1.0),
                )
                .map_err(|e| e.to_string())?,
            ),
        ),
        (
            "ball",
            Arc::new(BallProjection::new(DenseVector::zeros(dim), 2.0).map_err(|e| e.to_string())?),
        ),
        (
            "halfspace",
            Arc::new(
                HalfspaceProjection::new(DenseVector::from_element(dim, 1.0), 1.0)
                    .map_err(|e| e.to_string())?,
            ),
        ),
        (
            "landweber",
            Arc::new(
                make_landweber(
                    Arc::new(make_mask(2, 3, 0.5, 7).map_err(|e| e.to_string())?),
                    DenseVector::zeros(dim),
                )
                .map_err(|e| e.to_string())?,
            ),
        ),
    ];
    for (name, op) in ops {
        let report = check_fne(op.as_ref(), 200, 11);
        if !report.pass {
            return Err(format!(
                "{name}: firm nonexpansiveness violated, min slack {}",
                report.min_slack
            ));
        }
    }
    Ok(())
}

fn subgradient_inequality_holds() -> Result<(), String> {
    let oracles: Vec<(&str, Arc<dyn SubgradientOracle>)> = vec![
        ("l1", Arc::new(l1_composite(Arc::new(IdentityMap::new(4))))),
        (
            "max_affine",
            Arc::new(
                max_affine(
                    vec![
                        vec_of(&[1.0, -1.0, 0.0, 2.0]),
                        vec_of(&[0.0, 1.0, 1.0, -1.0]),
                    ],
                    vec![0.5, -0.25],
                )
                .map_err(|e| e.to_string())?,
            ),
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (name, f) in oracles {
        let dim = f.dim();
        for _ in 0..200 {
            let x = DenseVector::from_fn(dim, |_, _| rng.random_range(-5.0..5.0));
            let y = DenseVector::from_fn(dim, |_, _| rng.random_range(-5.0..5.0));
            let g = f.subgradient(&x);
            let slack = f.value(&y) - f.value(&x) - g.dot(&(&y - &x));
            if slack < -1e-9 {
                return Err(format!(
                    "{name}: subgradient inequality violated by {slack}"
                ));
            }
        }
    }
    Ok(())
}

fn adjoints_match() -> Result<(), String> {
    let maps: Vec<(&str, Arc<dyn LinearMap>)> = vec![
        (
            "row+col stack",
            make_transform(TransformKind::L, 4, 5).map_err(|e| e.to_string())?,
        ),
        (
            "haar+tv stack",
            make_transform(TransformKind::G, 4, 4).map_err(|e| e.to_string())?,
        ),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (name, map) in maps {
        for _ in 0..50 {
            let x = DenseVector::from_fn(map.in_dim(), |_, _| rng.random_range(-1.0..1.0));
            let y = DenseVector::from_fn(map.out_dim(), |_, _| rng.random_range(-1.0..1.0));
            let lhs = map.apply(&x).dot(&y);
            let rhs = x.dot(&map.adjoint(&y));
            if (lhs - rhs).abs() > 1e-10 {
                return Err(format!("{name}: <Wx,y> != <x,W^T y>, gap {}", lhs - rhs));
            }
        }
    }
    let q = haar_product_matrix(8, 3).map_err(|e| e.to_string())?;
    let gram = &q * q.transpose();
    for i in 0..8 {
        for j in 0..8 {
            let want = if i == j { 1.0 } else { 0.0 };
            if (gram[(i, j)] - want).abs() > 1e-12 {
                return Err(format!("haar: Q Q^T differs from identity at ({i},{j})"));
            }
        }
    }
    Ok(())
}

fn delays_save_oracle_calls() -> Result<(), String> {
    let op = IdentityOperator::new(2);
    let f = l1_composite(Arc::new(IdentityMap::new(2)));
    let x0 = vec_of(&[3.0, -2.0]);
    let iters = 200;
    for tau in [0usize, 3, 7] {
        let steps = StepSchedule::Harmonic {
            a0: 0.5,
            a: 0.5,
            tau,
        };
        let (_, trace) = run_fdsm(
            &op,
            &f,
            &x0,
            &steps,
            &DelaySchedule::Cyclic(tau),
            &StopRule::iters(iters),
            None,
            &RunOptions::default(),
        )
        .map_err(|e| e.to_string())?;
        let expected = iters.div_ceil(tau + 1) as u64;
        if trace.oracle_calls != expected {
            return Err(format!(
                "tau {tau}: {} oracle calls, expected {expected}",
                trace.oracle_calls
            ));
        }
    }
    Ok(())
}

fn single_worker_matches_serial() -> Result<(), String> {
    let dim = 2;
    let op: Arc<dyn FneOperator> = Arc::new(
        BoxProjection::new(DenseVector::zeros(dim), DenseVector::from_element(dim, 1.0))
            .map_err(|e| e.to_string())?,
    );
    let f: Arc<dyn SubgradientOracle> = Arc::new(l1_composite(Arc::new(IdentityMap::new(dim))));
    let x0 = vec_of(&[5.0, -1.0]);
    let steps = StepSchedule::Harmonic {
        a0: 0.5,
        a: 0.5,
        tau: 1,
    };
    let stop = StopRule::iters(100);
    let options = RunOptions {
        record_iterates: true,
    };
    let (_, serial) = run_fdsm(
        op.as_ref(),
        f.as_ref(),
        &x0,
        &steps,
        &DelaySchedule::Cyclic(1),
        &stop,
        None,
        &options,
    )
    .map_err(|e| e.to_string())?;
    let worker = WorkerSpec::new(Arc::clone(&op), Arc::clone(&f), DelaySchedule::Cyclic(1));
    let (_, dist) =
        run_distributed(&[worker], &x0, &steps, &stop, &options).map_err(|e| e.to_string())?;
    let a = serial.iterates.as_ref().expect("recorded");
    let b = dist.iterates.as_ref().expect("recorded");
    if a.len() != b.len() {
        return Err(format!("iterate counts differ: {} vs {}", a.len(), b.len()));
    }
    for (n, (xa, xb)) in a.iter().zip(b).enumerate() {
        if xa
            .iter()
            .zip(xb.iter())
            .any(|(p, q)| p.to_bits() != q.to_bits())
        {
            return Err(format!("m = 1 diverges from the serial run at iterate {n}"));
        }
    }
    Ok(())
}

fn step_identity_is_exact() -> Result<(), String> {
    for tau in [0usize, 2, 5] {
        for a in [0.3, 0.6, 0.9] {
            for a0 in [0.2, 1.0, 2.5] {
                let alpha0 = harmonic_alpha0(a0, a, tau);
                let lhs = (3.0 + 2.0 * ((tau + 1) as f64).powi(2)) * alpha0.powf(a);
                let rhs = 8.0 * a0.powf(a);
                if (lhs - rhs).abs() > 1e-12 * rhs.max(1.0) {
                    return Err(format!(
                        "tau {tau}, a {a}, a0 {a0}: scaled step identity off by {}",
                        lhs - rhs
                    ));
                }
            }
        }
    }
    Ok(())
}

pub fn cmd_selftest() -> Result<(), CliError> {
    let suites: [Suite; 6] = [
        ("operators are firmly nonexpansive", operators_are_fne),
        ("subgradient inequality", subgradient_inequality_holds),
        ("adjoint consistency", adjoints_match),
        ("delayed oracle-call economy", delays_save_oracle_calls),
        (
            "single worker reduces to serial",
            single_worker_matches_serial,
        ),
        ("scaled step identity", step_identity_is_exact),
    ];
    for (name, run) in suites {
        run().map_err(|e| CliError::runtime(format!("selftest {name}: {e}")))?;
        println!("selftest {name}: ok");
    }
    println!("selftest: all {} suites passed", 6);
    Ok(())
}

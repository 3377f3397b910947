//! End-to-end tests of the `fdsm` binary: exit codes, config errors with line
//! numbers, output determinism, and the documented CSV schemas.

use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_fdsm");

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).expect("config written");
    path.to_string_lossy().into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Drops the `elapsed_ms` column from every CSV line, wherever the header
/// says it lives.
fn strip_elapsed(csv: &str) -> String {
    let header = csv.lines().next().unwrap_or("");
    let elapsed_idx = header
        .split(',')
        .position(|name| name == "elapsed_ms")
        .expect("schema has an elapsed_ms column");
    csv.lines()
        .map(|line| {
            line.split(',')
                .enumerate()
                .filter(|(i, _)| *i != elapsed_idx)
                .map(|(_, field)| field)
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn help_and_version_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["--help"], dir.path()).status.code(), Some(0));
    assert_eq!(run(&["--version"], dir.path()).status.code(), Some(0));
    assert_eq!(
        run(&["inpaint", "--help"], dir.path()).status.code(),
        Some(0)
    );
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["--no-such-flag"], dir.path()).status.code(), Some(1));
    assert_eq!(run(&["no-such-command"], dir.path()).status.code(), Some(1));
    assert_eq!(run(&[], dir.path()).status.code(), Some(1));
}

#[test]
fn config_errors_carry_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[(&str, &str)] = &[
        ("a = 1.5\n", "line 1: a must lie in (0,1)"),
        ("# comment\nbogus = 3\n", "line 2: unknown key \"bogus\""),
        ("seed = 1\n\nseed = 2\n", "line 3: duplicate key \"seed\""),
        ("just some words\n", "line 1: expected `key = value`"),
        ("a0 = -1\n", "line 1: a0 must be positive"),
        ("channels = 2\n", "line 1: channels must be 1 or 3"),
        ("ratio = 1.5\n", "line 1: ratio must lie in [0,1]"),
        (
            "eps_mode = sideways\n",
            "line 1: eps_mode must be shrink or offset",
        ),
        (
            "delay = sometimes\n",
            "line 1: delay must be zero, fixed, cyclic or custom:<list>",
        ),
        ("max_iters = 0\n", "line 1: max_iters must be positive"),
    ];
    for (body, want) in cases {
        let cfg = write_config(dir.path(), "bad.cfg", body);
        let out = run(&["inpaint", "--config", &cfg], dir.path());
        assert_eq!(out.status.code(), Some(1), "config {body:?} should exit 1");
        let err = stderr_of(&out);
        assert!(
            err.contains(want),
            "config {body:?}: stderr {err:?} should contain {want:?}"
        );
    }
}

#[test]
fn missing_config_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["inpaint", "--config", "does-not-exist.cfg"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("cannot read config"));
}

#[test]
fn comments_and_blank_lines_are_ignored() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "ok.cfg",
        "# leading comment\n\nsize = 8   # trailing comment\nmax_iters = 50\n",
    );
    let out = run(&["inpaint", "--config", &cfg, "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    assert!(stdout_of(&out).contains("8x8x1"));
}

#[test]
fn inpaint_defaults_write_deterministic_images() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.cfg", "size = 8\nmax_iters = 200\n");
    for sub in ["a", "b"] {
        let out = run(
            &["inpaint", "--config", &cfg, "--out", sub, "--trace"],
            dir.path(),
        );
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    }
    for name in ["damaged.pgm", "restored.pgm"] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} must be byte-identical across reruns");
        assert!(a.starts_with(b"P5\n8 8\n255\n"));
    }
    let ta = std::fs::read_to_string(dir.path().join("a/trace_c0.csv")).unwrap();
    let tb = std::fs::read_to_string(dir.path().join("b/trace_c0.csv")).unwrap();
    assert_eq!(strip_elapsed(&ta), strip_elapsed(&tb));
    // Header plus one row per iteration.
    assert_eq!(ta.lines().count(), 1 + 200);
    assert!(ta.starts_with("n,alpha,tau,eps,f_next,best_f,fix_residual,step_norm,"));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.cfg", "size = 8\nmax_iters = 100\n");
    let base = run(&["inpaint", "--config", &cfg, "--out", "s0"], dir.path());
    assert_eq!(base.status.code(), Some(0));
    let other = run(
        &["inpaint", "--config", &cfg, "--seed", "7", "--out", "s7"],
        dir.path(),
    );
    assert_eq!(other.status.code(), Some(0));
    let a = std::fs::read(dir.path().join("s0/damaged.pgm")).unwrap();
    let b = std::fs::read(dir.path().join("s7/damaged.pgm")).unwrap();
    assert_ne!(a, b, "a different seed draws a different mask");
}

#[test]
fn three_channel_images_use_ppm() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "rgb.cfg",
        "size = 8\nchannels = 3\nmax_iters = 50\n",
    );
    let out = run(&["inpaint", "--config", &cfg, "--out", "rgb"], dir.path());
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let bytes = std::fs::read(dir.path().join("rgb/restored.ppm")).unwrap();
    assert!(bytes.starts_with(b"P6\n8 8\n255\n"));
}

#[test]
fn haar_transform_rejects_non_pow2_images() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "h.cfg", "transform = H\nsize = 12\n");
    let out = run(&["inpaint", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("square power-of-two"));
}

#[test]
fn sweep_emits_rows_in_cell_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sweep.cfg",
        "size = 8\nmax_iters = 100\nsweep_a = 0.5,0.9\nsweep_a0 = 0.9\nsweep_tau = 0,1\nsweep_transform = L\n",
    );
    for sub in ["p", "q"] {
        let out = run(
            &["sweep", "--config", &cfg, "--out", sub, "--jobs", "2"],
            dir.path(),
        );
        assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    }
    let csv = std::fs::read_to_string(dir.path().join("p/sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "seed,transform,tau,a,a0,iters,elapsed_ms,oracle_calls,psnr,best_f"
    );
    assert_eq!(lines.len(), 1 + 4, "one row per cell");
    // Cell order: (transform, tau, a, a0) lexicographic in config-list order.
    assert!(lines[1].starts_with("0,L,0,0.5,0.9,"));
    assert!(lines[2].starts_with("0,L,0,0.9,0.9,"));
    assert!(lines[3].starts_with("0,L,1,0.5,0.9,"));
    assert!(lines[4].starts_with("0,L,1,0.9,0.9,"));

    let again = std::fs::read_to_string(dir.path().join("q/sweep.csv")).unwrap();
    assert_eq!(
        strip_elapsed(&csv),
        strip_elapsed(&again),
        "rows must be deterministic modulo elapsed_ms"
    );

    let best = std::fs::read_to_string(dir.path().join("p/sweep_best.csv")).unwrap();
    let best_lines: Vec<&str> = best.lines().collect();
    assert_eq!(best_lines[0], "transform,tau,a,a0,psnr,best_f");
    assert_eq!(best_lines.len(), 1 + 2, "one winner per (transform, tau)");
    assert!(best_lines[1].starts_with("L,0,"));
    assert!(best_lines[2].starts_with("L,1,"));
}

#[test]
fn bound_with_zero_c_is_dist_over_step_sum() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bound.cfg",
        "alpha = 1\nc = 0\ndist0_sq = 1\nn_max = 3\n",
    );
    let out = run(&["bound", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,bound");
    // With c = 0 the bound collapses to dist0_sq / (2 sum alpha_k).
    let mut sum = 0.0;
    for n in 0..=3usize {
        sum += 1.0 / (n as f64 + 1.0);
        let expected = format!("{n},{}", 1.0 / (2.0 * sum));
        assert_eq!(lines[n + 1], expected);
    }
}

#[test]
fn bound_log_requires_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "log.cfg", "bound = log\n");
    let out = run(&["bound", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("bound = log requires alpha"));
}

#[test]
fn bound_rejects_broken_step_hypothesis() {
    // alpha_0 = 4 with a = 0.5, tau = 0 gives 5 * 2 = 10 >= 8.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "hyp.cfg", "alpha = 4\na = 0.5\n");
    let out = run(&["bound", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("step-size hypothesis"));
}

#[test]
fn distributed_default_scenario_converges() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "dist.cfg", "alpha = 1\nmax_iters = 3000\n");
    let out = run(
        &["distributed", "--config", &cfg, "--trace", "--out", "d"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("m = 2"));
    let pooled: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("pooled objective: "))
        .expect("pooled objective line")
        .parse()
        .unwrap();
    // Demo optimum: l1 terms centered at (2,0) and (0,2) over x <= 0 meet at
    // the origin with pooled value 4.
    assert!((pooled - 4.0).abs() < 0.05, "pooled objective {pooled}");
    let trace = std::fs::read_to_string(dir.path().join("d/distributed_trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1 + 3000);
}

#[test]
fn distributed_accepts_configured_workers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "workers.cfg",
        concat!(
            "dim = 2\n",
            "alpha = 1\n",
            "max_iters = 4000\n",
            "x0 = 3,3\n",
            "worker0.constraint = box 0 0 1 1\n",
            "worker0.objective = l1 2 2\n",
            "worker0.tau = 1\n",
        ),
    );
    let out = run(&["distributed", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    let point = text
        .lines()
        .find_map(|l| l.strip_prefix("final point: "))
        .expect("final point line");
    // |x1 - 2| + |x2 - 2| over the unit box has its optimum at (1,1).
    let coords: Vec<f64> = point
        .trim_matches(['[', ']'])
        .split(", ")
        .map(|t| t.parse().unwrap())
        .collect();
    assert!((coords[0] - 1.0).abs() < 0.05, "final point {point}");
    assert!((coords[1] - 1.0).abs() < 0.05, "final point {point}");
}

#[test]
fn distributed_rejects_gappy_worker_indices() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "gap.cfg",
        "dim = 2\nworker1.constraint = box 0 0 1 1\n",
    );
    let out = run(&["distributed", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr_of(&out).contains("worker0 is missing"));
}

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["selftest"], dir.path());
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert_eq!(text.matches(": ok").count(), 6);
    assert!(text.contains("all 6 suites passed"));
}

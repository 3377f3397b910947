//! Line-oriented `key = value` configuration with located errors.
//!
//! `#` starts a comment, blank lines are skipped, unknown and duplicate keys
//! are rejected, and every error carries the line it came from. Missing keys
//! take the documented defaults, so the empty file is a valid configuration.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use fdsm::inpainting::TransformKind;
use fdsm::objectives::EpsMode;
use fdsm::solver::{DelaySchedule, StepSchedule, StopRule};

/// Failures split by exit code: configuration problems exit 1, runtime
/// problems exit 2.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config(message.into())
    }

    pub fn config_at(line: usize, message: impl std::fmt::Display) -> Self {
        CliError::Config(format!("line {line}: {message}"))
    }

    pub fn runtime(message: impl std::fmt::Display) -> Self {
        CliError::Runtime(message.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<fdsm::Error> for CliError {
    fn from(e: fdsm::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

const KNOWN_KEYS: &[&str] = &[
    // solver
    "seed",
    "tau",
    "delay",
    "a",
    "a0",
    "alpha",
    "mu",
    "eps0",
    "eps_mode",
    "guard_radius",
    "max_iters",
    "max_seconds",
    "x0",
    // inpainting
    "image",
    "synthetic",
    "size",
    "channels",
    "ratio",
    "transform",
    // sweep
    "sweep_a",
    "sweep_a0",
    "sweep_tau",
    "sweep_transform",
    // bound
    "bound",
    "dist0_sq",
    "c",
    "l_max",
    "m",
    "n_max",
    // distributed
    "dim",
    "workers",
];

fn is_known_key(key: &str) -> bool {
    if KNOWN_KEYS.contains(&key) {
        return true;
    }
    // Per-worker keys: worker<index>.(constraint|objective|tau).
    if let Some(rest) = key.strip_prefix("worker") {
        if let Some((index, field)) = rest.split_once('.') {
            return !index.is_empty()
                && index.bytes().all(|b| b.is_ascii_digit())
                && matches!(field, "constraint" | "objective" | "tau");
        }
    }
    false
}

/// Raw parse result: every key with its line number and unparsed value.
pub struct RawConfig {
    entries: BTreeMap<String, (usize, String)>,
}

/// Total parse: every input yields either a configuration or an error naming
/// the offending line.
pub fn parse_config(text: &str) -> Result<RawConfig, CliError> {
    let mut entries = BTreeMap::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::config_at(
                line_no,
                format!("expected `key = value`, got {line:?}"),
            ));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() {
            return Err(CliError::config_at(line_no, "missing key before `=`"));
        }
        if !is_known_key(&key) {
            return Err(CliError::config_at(line_no, format!("unknown key {key:?}")));
        }
        if entries.contains_key(&key) {
            return Err(CliError::config_at(
                line_no,
                format!("duplicate key {key:?}"),
            ));
        }
        entries.insert(key, (line_no, value));
    }
    Ok(RawConfig { entries })
}

impl RawConfig {
    pub fn raw(&self, key: &str) -> Option<(usize, &str)> {
        self.entries.get(key).map(|(line, v)| (*line, v.as_str()))
    }

    /// Keys matching the worker pattern, sorted by worker index.
    pub fn worker_indices(&self) -> Vec<usize> {
        let mut indices: Vec<usize> = self
            .entries
            .keys()
            .filter_map(|k| {
                let rest = k.strip_prefix("worker")?;
                let (index, _) = rest.split_once('.')?;
                index.parse::<usize>().ok()
            })
            .collect();
        indices.sort_unstable();
        indices.dedup();
        indices
    }

    fn parse_as<T: FromStr>(&self, key: &str, what: &str) -> Result<Option<(usize, T)>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, value)) => value.parse::<T>().map(|v| Some((line, v))).map_err(|_| {
                CliError::config_at(line, format!("{key} expects {what}, got {value:?}"))
            }),
        }
    }

    pub fn f64(&self, key: &str) -> Result<Option<(usize, f64)>, CliError> {
        self.parse_as(key, "a number")
    }

    pub fn usize(&self, key: &str) -> Result<Option<(usize, usize)>, CliError> {
        self.parse_as(key, "a nonnegative integer")
    }

    pub fn u64(&self, key: &str) -> Result<Option<(usize, u64)>, CliError> {
        self.parse_as(key, "a nonnegative integer")
    }

    pub fn bool(&self, key: &str) -> Result<Option<(usize, bool)>, CliError> {
        self.parse_as(key, "true or false")
    }

    pub fn list_f64(&self, key: &str) -> Result<Option<(usize, Vec<f64>)>, CliError> {
        self.list_with(key, "a comma-separated list of numbers", |tok| {
            tok.parse::<f64>().ok()
        })
    }

    pub fn list_usize(&self, key: &str) -> Result<Option<(usize, Vec<usize>)>, CliError> {
        self.list_with(
            key,
            "a comma-separated list of nonnegative integers",
            |tok| tok.parse::<usize>().ok(),
        )
    }

    fn list_with<T>(
        &self,
        key: &str,
        what: &str,
        parse: impl Fn(&str) -> Option<T>,
    ) -> Result<Option<(usize, Vec<T>)>, CliError> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, value)) => {
                let items: Option<Vec<T>> = value.split(',').map(|tok| parse(tok.trim())).collect();
                match items {
                    Some(list) if !list.is_empty() => Ok(Some((line, list))),
                    _ => Err(CliError::config_at(
                        line,
                        format!("{key} expects {what}, got {value:?}"),
                    )),
                }
            }
        }
    }
}

/// Which bound `fdsm bound` evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundKind {
    Rate,
    Log,
    Distributed,
}

/// One worker of the distributed scenario, as configured.
#[derive(Clone, Debug)]
pub struct WorkerConfig {
    pub constraint: ConstraintSpec,
    /// Center of the worker's shifted l1 objective.
    pub objective_center: Vec<f64>,
    pub tau: usize,
}

#[derive(Clone, Debug)]
pub enum ConstraintSpec {
    Halfspace { normal: Vec<f64>, offset: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

/// The sweep grid; the cell order is the cross product in
/// (transform, tau, a, a0) order, each list in its configured order.
#[derive(Clone, Debug)]
pub struct SweepGrid {
    pub a: Vec<f64>,
    pub a0: Vec<f64>,
    pub tau: Vec<usize>,
    pub transform: Vec<TransformKind>,
}

impl SweepGrid {
    pub fn cell_count(&self) -> usize {
        self.a.len() * self.a0.len() * self.tau.len() * self.transform.len()
    }
}

/// Fully validated experiment configuration.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub tau: usize,
    pub delay: DelaySchedule,
    pub a: f64,
    pub a0: f64,
    pub alpha: Option<f64>,
    pub mu: f64,
    pub eps0: f64,
    pub eps_mode: EpsMode,
    pub guard_radius: Option<f64>,
    pub stop: StopRule,
    pub x0: Option<Vec<f64>>,

    pub image: Option<PathBuf>,
    pub size: usize,
    pub channels: usize,
    pub ratio: f64,
    pub transform: TransformKind,

    pub sweep: SweepGrid,

    pub bound: BoundKind,
    pub dist0_sq: f64,
    pub c: f64,
    pub l_max: f64,
    pub m: usize,
    pub n_max: Option<usize>,

    pub dim: usize,
    pub workers: Vec<WorkerConfig>,
}

impl ExperimentConfig {
    /// Steps used by the runners: harmonic by default, `alpha/(n+1)` when
    /// `alpha` is set explicitly.
    pub fn steps(&self) -> StepSchedule {
        match self.alpha {
            Some(alpha) => StepSchedule::Inverse { alpha },
            None => StepSchedule::Harmonic {
                a0: self.a0,
                a: self.a,
                tau: self.tau,
            },
        }
    }

    pub fn from_raw(raw: &RawConfig) -> Result<Self, CliError> {
        let seed = raw.u64("seed")?.map_or(0, |(_, v)| v);
        let tau = raw.usize("tau")?.map_or(0, |(_, v)| v);

        let a = match raw.f64("a")? {
            None => 0.9,
            Some((line, v)) => {
                if !(v > 0.0 && v < 1.0) {
                    return Err(CliError::config_at(line, "a must lie in (0,1)"));
                }
                v
            }
        };
        let a0 = match raw.f64("a0")? {
            None => 0.9,
            Some((line, v)) => {
                if !(v > 0.0) {
                    return Err(CliError::config_at(line, "a0 must be positive"));
                }
                v
            }
        };
        let alpha = match raw.f64("alpha")? {
            None => None,
            Some((line, v)) => {
                if !(v > 0.0) {
                    return Err(CliError::config_at(line, "alpha must be positive"));
                }
                Some(v)
            }
        };
        let mu = match raw.f64("mu")? {
            None => 0.0,
            Some((line, v)) => {
                if !(v >= 0.0) {
                    return Err(CliError::config_at(line, "mu must be nonnegative"));
                }
                v
            }
        };
        let eps0 = match raw.f64("eps0")? {
            None => 0.0,
            Some((line, v)) => {
                if !(v >= 0.0) {
                    return Err(CliError::config_at(line, "eps0 must be nonnegative"));
                }
                v
            }
        };
        let eps_mode = match raw.raw("eps_mode") {
            None => EpsMode::Shrink,
            Some((line, v)) => match v {
                "shrink" => EpsMode::Shrink,
                "offset" => EpsMode::Offset,
                other => {
                    return Err(CliError::config_at(
                        line,
                        format!("eps_mode must be shrink or offset, got {other:?}"),
                    ))
                }
            },
        };
        let guard_radius = match raw.f64("guard_radius")? {
            None => None,
            Some((line, v)) => {
                if !(v > 0.0) {
                    return Err(CliError::config_at(line, "guard_radius must be positive"));
                }
                Some(v)
            }
        };

        let max_iters = match raw.usize("max_iters")? {
            None => 500,
            Some((line, v)) => {
                if v == 0 {
                    return Err(CliError::config_at(line, "max_iters must be positive"));
                }
                v
            }
        };
        let max_seconds = match raw.f64("max_seconds")? {
            None => 10.0,
            Some((line, v)) => {
                if !(v > 0.0) {
                    return Err(CliError::config_at(line, "max_seconds must be positive"));
                }
                v
            }
        };
        let stop = StopRule {
            max_iters: Some(max_iters),
            max_seconds: Some(max_seconds),
        };

        let delay = match raw.raw("delay") {
            None => DelaySchedule::Cyclic(tau),
            Some((line, v)) => match v {
                "zero" => DelaySchedule::Zero,
                "fixed" => DelaySchedule::Fixed(tau),
                "cyclic" => DelaySchedule::Cyclic(tau),
                other => match other.strip_prefix("custom:") {
                    Some(list) => {
                        let parsed: Option<Vec<usize>> = list
                            .split(',')
                            .map(|tok| tok.trim().parse::<usize>().ok())
                            .collect();
                        match parsed {
                            Some(delays) if !delays.is_empty() => {
                                if delays.iter().any(|d| *d > tau) {
                                    return Err(CliError::config_at(
                                        line,
                                        "custom delays must not exceed tau",
                                    ));
                                }
                                DelaySchedule::Custom(delays)
                            }
                            _ => {
                                return Err(CliError::config_at(
                                    line,
                                    format!("custom delay list is malformed: {list:?}"),
                                ))
                            }
                        }
                    }
                    None => {
                        return Err(CliError::config_at(
                            line,
                            format!(
                                "delay must be zero, fixed, cyclic or custom:<list>, got {other:?}"
                            ),
                        ))
                    }
                },
            },
        };

        let x0 = raw.list_f64("x0")?.map(|(_, v)| v);

        let image = raw.raw("image").map(|(_, v)| PathBuf::from(v));
        if let Some((line, synthetic)) = raw.bool("synthetic")? {
            if synthetic && image.is_some() {
                return Err(CliError::config_at(
                    line,
                    "synthetic = true conflicts with an image path",
                ));
            }
            if !synthetic && image.is_none() {
                return Err(CliError::config_at(
                    line,
                    "synthetic = false requires an image path",
                ));
            }
        }
        let size = match raw.usize("size")? {
            None => 16,
            Some((line, v)) => {
                if v < 2 {
                    return Err(CliError::config_at(line, "size must be at least 2"));
                }
                v
            }
        };
        let channels = match raw.usize("channels")? {
            None => 1,
            Some((line, v)) => {
                if v != 1 && v != 3 {
                    return Err(CliError::config_at(line, "channels must be 1 or 3"));
                }
                v
            }
        };
        let ratio = match raw.f64("ratio")? {
            None => 0.5,
            Some((line, v)) => {
                if !(0.0..=1.0).contains(&v) {
                    return Err(CliError::config_at(line, "ratio must lie in [0,1]"));
                }
                v
            }
        };
        let transform = match raw.raw("transform") {
            None => TransformKind::L,
            Some((line, v)) => v
                .parse::<TransformKind>()
                .map_err(|e| CliError::config_at(line, e))?,
        };

        let paper_grid: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
        let sweep_a = match raw.list_f64("sweep_a")? {
            None => paper_grid.clone(),
            Some((line, list)) => {
                if list.iter().any(|v| !(*v > 0.0 && *v < 1.0)) {
                    return Err(CliError::config_at(
                        line,
                        "sweep_a values must lie in (0,1)",
                    ));
                }
                list
            }
        };
        let sweep_a0 = match raw.list_f64("sweep_a0")? {
            None => paper_grid,
            Some((line, list)) => {
                if list.iter().any(|v| !(*v > 0.0)) {
                    return Err(CliError::config_at(
                        line,
                        "sweep_a0 values must be positive",
                    ));
                }
                list
            }
        };
        let sweep_tau = raw.list_usize("sweep_tau")?.map_or(vec![0], |(_, v)| v);
        let sweep_transform = match raw.raw("sweep_transform") {
            None => vec![TransformKind::L],
            Some((line, v)) => {
                let parsed: Result<Vec<TransformKind>, _> = v
                    .split(',')
                    .map(|tok| tok.trim().parse::<TransformKind>())
                    .collect();
                parsed.map_err(|e| CliError::config_at(line, e))?
            }
        };

        let bound = match raw.raw("bound") {
            None => BoundKind::Rate,
            Some((line, v)) => match v {
                "rate" => BoundKind::Rate,
                "log" => BoundKind::Log,
                "distributed" => BoundKind::Distributed,
                other => {
                    return Err(CliError::config_at(
                        line,
                        format!("bound must be rate, log or distributed, got {other:?}"),
                    ))
                }
            },
        };
        let dist0_sq = match raw.f64("dist0_sq")? {
            None => 1.0,
            Some((line, v)) => {
                if !(v >= 0.0) {
                    return Err(CliError::config_at(line, "dist0_sq must be nonnegative"));
                }
                v
            }
        };
        let c = match raw.f64("c")? {
            None => 1.0,
            Some((line, v)) => {
                if !(v >= 0.0) {
                    return Err(CliError::config_at(line, "c must be nonnegative"));
                }
                v
            }
        };
        let l_max = match raw.f64("l_max")? {
            None => 0.0,
            Some((line, v)) => {
                if !(v >= 0.0) {
                    return Err(CliError::config_at(line, "l_max must be nonnegative"));
                }
                v
            }
        };
        let m = match raw.usize("m")? {
            None => 1,
            Some((line, v)) => {
                if v == 0 {
                    return Err(CliError::config_at(line, "m must be at least 1"));
                }
                v
            }
        };
        let n_max = raw.usize("n_max")?.map(|(_, v)| v);

        let dim = match raw.usize("dim")? {
            None => 2,
            Some((line, v)) => {
                if v == 0 {
                    return Err(CliError::config_at(line, "dim must be at least 1"));
                }
                v
            }
        };
        let workers = parse_workers(raw, dim, tau)?;
        if let Some((line, count)) = raw.usize("workers")? {
            if !workers.is_empty() && workers.len() != count {
                return Err(CliError::config_at(
                    line,
                    format!(
                        "workers = {count} but {} worker entries are configured",
                        workers.len()
                    ),
                ));
            }
        }

        Ok(ExperimentConfig {
            seed,
            tau,
            delay,
            a,
            a0,
            alpha,
            mu,
            eps0,
            eps_mode,
            guard_radius,
            stop,
            x0,
            image,
            size,
            channels,
            ratio,
            transform,
            sweep: SweepGrid {
                a: sweep_a,
                a0: sweep_a0,
                tau: sweep_tau,
                transform: sweep_transform,
            },
            bound,
            dist0_sq,
            c,
            l_max,
            m,
            n_max,
            dim,
            workers,
        })
    }
}

fn parse_numbers(line: usize, key: &str, tokens: &[&str]) -> Result<Vec<f64>, CliError> {
    tokens
        .iter()
        .map(|tok| {
            tok.parse::<f64>().map_err(|_| {
                CliError::config_at(line, format!("{key}: expected a number, got {tok:?}"))
            })
        })
        .collect()
}

fn parse_workers(
    raw: &RawConfig,
    dim: usize,
    default_tau: usize,
) -> Result<Vec<WorkerConfig>, CliError> {
    let indices = raw.worker_indices();
    if indices.is_empty() {
        return Ok(Vec::new());
    }
    for (expected, got) in indices.iter().enumerate() {
        if *got != expected {
            return Err(CliError::config(format!(
                "worker indices must be contiguous from 0; worker{expected} is missing"
            )));
        }
    }
    let mut workers = Vec::with_capacity(indices.len());
    for j in indices {
        let ckey = format!("worker{j}.constraint");
        let Some((line, value)) = raw.raw(&ckey) else {
            return Err(CliError::config(format!("worker{j} has no constraint")));
        };
        let tokens: Vec<&str> = value.split_whitespace().collect();
        let constraint = match tokens.split_first() {
            Some((&"halfspace", rest)) if rest.len() == dim + 1 => {
                let nums = parse_numbers(line, &ckey, rest)?;
                ConstraintSpec::Halfspace {
                    normal: nums[..dim].to_vec(),
                    offset: nums[dim],
                }
            }
            Some((&"box", rest)) if rest.len() == 2 * dim => {
                let nums = parse_numbers(line, &ckey, rest)?;
                ConstraintSpec::Box {
                    lo: nums[..dim].to_vec(),
                    hi: nums[dim..].to_vec(),
                }
            }
            Some((&"ball", rest)) if rest.len() == dim + 1 => {
                let nums = parse_numbers(line, &ckey, rest)?;
                ConstraintSpec::Ball {
                    center: nums[..dim].to_vec(),
                    radius: nums[dim],
                }
            }
            _ => {
                return Err(CliError::config_at(
                    line,
                    format!(
                        "{ckey} must be `halfspace a1..a{dim} beta`, `box lo1..lo{dim} hi1..hi{dim}` or `ball c1..c{dim} r`"
                    ),
                ))
            }
        };

        let okey = format!("worker{j}.objective");
        let objective_center = match raw.raw(&okey) {
            None => vec![0.0; dim],
            Some((line, value)) => {
                let tokens: Vec<&str> = value.split_whitespace().collect();
                match tokens.split_first() {
                    Some((&"l1", [])) => vec![0.0; dim],
                    Some((&"l1", rest)) if rest.len() == dim => parse_numbers(line, &okey, rest)?,
                    _ => {
                        return Err(CliError::config_at(
                            line,
                            format!("{okey} must be `l1` or `l1 c1..c{dim}`"),
                        ))
                    }
                }
            }
        };

        let tau = raw
            .usize(&format!("worker{j}.tau"))?
            .map_or(default_tau, |(_, v)| v);
        workers.push(WorkerConfig {
            constraint,
            objective_center,
            tau,
        });
    }
    Ok(workers)
}

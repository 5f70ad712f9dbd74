//! TOML run configuration.
//!
//! A config names its `mode` and carries exactly one matching block:
//!
//! ```toml
//! mode = "otto"
//! precision = 12
//!
//! [system]
//! gamma = 0.5
//!
//! [otto]
//! j1 = 2.0
//! j2 = 1.0
//! phi1 = 0.0
//! phi2 = 1.0
//! p0 = 0.3
//! ```

use std::fmt;
use std::path::{Path, PathBuf};

use nhqhe_core::classical::{ClassicalSpec, GasState};
use nhqhe_core::cycle::{Orientation, OttoSpec};
use nhqhe_core::evolve::{compose_segments, DriveSegment};
use nhqhe_core::thermo::{ControlPath, Preparation, DEFAULT_TOL};
use nhqhe_core::{ControlPoint, SystemParams};
use serde::Deserialize;

use crate::error::{CliError, Result};

pub const DEFAULT_PRECISION: usize = 12;
pub const TOLERANCE_ENV: &str = "NHQHE_TOL";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Eigs,
    Evolve,
    Otto,
    Loop,
    Classical,
    Check,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Eigs => "eigs",
            Mode::Evolve => "evolve",
            Mode::Otto => "otto",
            Mode::Loop => "loop",
            Mode::Classical => "classical",
            Mode::Check => "check",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mode: Option<Mode>,
    precision: Option<usize>,
    sqrt_units: Option<bool>,
    out: Option<PathBuf>,
    system: Option<SystemBlock>,
    eigs: Option<EigsBlock>,
    evolve: Option<EvolveBlock>,
    otto: Option<OttoBlock>,
    #[serde(rename = "loop")]
    loop_: Option<LoopBlock>,
    classical: Option<ClassicalBlock>,
    check: Option<CheckBlock>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemBlock {
    gamma: f64,
    #[serde(default = "one")]
    kb: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EigsBlock {
    /// (J, φ) pairs.
    points: Vec<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentBlock {
    omega: f64,
    tau: f64,
    phi_start: Option<f64>,
}

fn default_samples() -> usize {
    20
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvolveBlock {
    segments: Vec<SegmentBlock>,
    #[serde(default = "default_samples")]
    samples: usize,
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
enum OrientationName {
    #[default]
    Engine,
    Refrigerator,
}

fn default_shift_tau() -> f64 {
    3.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OttoBlock {
    j1: f64,
    j2: f64,
    phi1: f64,
    phi2: f64,
    p0: f64,
    #[serde(default)]
    orientation: OrientationName,
    /// Adiabaticity margin for an exact-evolution run of the cycle.
    margin: Option<f64>,
    #[serde(default = "default_shift_tau")]
    shift_tau: f64,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
enum PathBlock {
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
    Ellipse {
        j: f64,
        phi: f64,
        radius_j: f64,
        radius_phi: f64,
    },
}

fn default_loop_samples() -> usize {
    50
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LoopBlock {
    p0: f64,
    /// Where p0 is prepared; defaults to the φ of the path's start.
    phi0: Option<f64>,
    #[serde(default = "default_loop_samples")]
    samples: usize,
    path: PathBlock,
}

fn default_cv() -> f64 {
    1.5
}

fn default_s0() -> f64 {
    10.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassicalBlock {
    t1: f64,
    t2: f64,
    x: f64,
    #[serde(default = "one")]
    n: f64,
    #[serde(default = "one")]
    v: f64,
    #[serde(default = "default_cv")]
    cv: f64,
    #[serde(default = "default_s0")]
    s0: f64,
    #[serde(default = "one")]
    kb: f64,
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckBlock {
    #[serde(default = "default_seed")]
    seed: u64,
}

impl Default for CheckBlock {
    fn default() -> Self {
        CheckBlock {
            seed: default_seed(),
        }
    }
}

/// Validated work for one run.
#[derive(Debug, Clone)]
pub enum Job {
    Eigs {
        params: SystemParams,
        points: Vec<ControlPoint>,
    },
    Evolve {
        params: SystemParams,
        segments: Vec<DriveSegment>,
        samples: usize,
    },
    Otto {
        spec: OttoSpec,
        orientation: Orientation,
        margin: Option<f64>,
        shift_tau: f64,
    },
    Loop {
        params: SystemParams,
        prep: Preparation,
        path: ControlPath,
        samples: usize,
    },
    Classical(ClassicalSpec),
    Check {
        seed: u64,
    },
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Mode,
    pub precision: usize,
    pub sqrt_units: bool,
    pub out: PathBuf,
    /// Absolute quadrature tolerance.
    pub tolerance: f64,
    pub job: Job,
}

impl RunConfig {
    /// Default configuration for `check` without a config file.
    pub fn check(seed: u64) -> Self {
        RunConfig {
            mode: Mode::Check,
            precision: DEFAULT_PRECISION,
            sqrt_units: false,
            out: PathBuf::from("."),
            tolerance: DEFAULT_TOL,
            job: Job::Check { seed },
        }
    }
}

fn domain(block: &str, e: nhqhe_core::Error) -> CliError {
    CliError::config(format!("[{block}] {e}"))
}

fn system(raw: Option<SystemBlock>, mode: Mode) -> Result<SystemParams> {
    let s = raw.ok_or_else(|| CliError::config(format!("mode `{mode}` needs a [system] block")))?;
    SystemParams::with_kb(s.gamma, s.kb).map_err(|e| domain("system", e))
}

fn point(block: &str, [j, phi]: [f64; 2]) -> Result<ControlPoint> {
    ControlPoint::new(j, phi).map_err(|e| domain(block, e))
}

fn segments(raw: Vec<SegmentBlock>) -> Result<Vec<DriveSegment>> {
    if raw.is_empty() {
        return Err(CliError::config("[evolve] needs at least one segment"));
    }
    let mut out: Vec<DriveSegment> = Vec::with_capacity(raw.len());
    for s in raw {
        let start = s
            .phi_start
            .unwrap_or_else(|| out.last().map_or(0.0, DriveSegment::phi_end));
        out.push(DriveSegment::new(s.omega, s.tau, start).map_err(|e| domain("evolve", e))?);
    }
    Ok(out)
}

fn contiguous(params: &SystemParams, segments: &[DriveSegment]) -> Result<()> {
    compose_segments(segments, params)
        .map(|_| ())
        .map_err(|e| domain("evolve", e))
}

fn control_path(raw: PathBlock) -> Result<ControlPath> {
    match raw {
        PathBlock::Polygon { vertices } => {
            if vertices.len() < 3 {
                return Err(CliError::config(
                    "[loop.path] a polygon needs at least 3 vertices",
                ));
            }
            let pts = vertices
                .into_iter()
                .map(|v| point("loop.path", v))
                .collect::<Result<Vec<_>>>()?;
            ControlPath::polygon(&pts, true).map_err(|e| domain("loop.path", e))
        }
        PathBlock::Ellipse {
            j,
            phi,
            radius_j,
            radius_phi,
        } => {
            if !(radius_j >= 0.0 && radius_phi >= 0.0) || radius_j >= j {
                return Err(CliError::config(format!(
                    "[loop.path] ellipse radii must be non-negative with radius_j < j (got {radius_j}, {radius_phi})"
                )));
            }
            ControlPath::ellipse(point("loop.path", [j, phi])?, radius_j, radius_phi)
                .map_err(|e| domain("loop.path", e))
        }
    }
}

/// Parses and validates a TOML config.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
    let mode = raw.mode.ok_or_else(|| {
        CliError::config("missing `mode` (one of eigs, evolve, otto, loop, classical, check)")
    })?;

    let present: Vec<Mode> = [
        (raw.eigs.is_some(), Mode::Eigs),
        (raw.evolve.is_some(), Mode::Evolve),
        (raw.otto.is_some(), Mode::Otto),
        (raw.loop_.is_some(), Mode::Loop),
        (raw.classical.is_some(), Mode::Classical),
        (raw.check.is_some(), Mode::Check),
    ]
    .into_iter()
    .filter_map(|(on, m)| on.then_some(m))
    .collect();
    let check_defaulted = mode == Mode::Check && present.is_empty();
    if !check_defaulted && present != [mode] {
        let names: Vec<&str> = present.iter().map(|m| m.name()).collect();
        return Err(CliError::config(format!(
            "mode `{mode}` needs exactly one mode block [{mode}], found [{}]",
            names.join(", ")
        )));
    }

    let precision = raw.precision.unwrap_or(DEFAULT_PRECISION);
    if !(1..=17).contains(&precision) {
        return Err(CliError::config(format!(
            "precision must be in 1..=17, got {precision}"
        )));
    }

    let job = match mode {
        Mode::Eigs => {
            let b = raw.eigs.expect("block checked");
            let params = system(raw.system, mode)?;
            let points = b
                .points
                .into_iter()
                .map(|p| point("eigs", p))
                .collect::<Result<Vec<_>>>()?;
            Job::Eigs { params, points }
        }
        Mode::Evolve => {
            let b = raw.evolve.expect("block checked");
            let params = system(raw.system, mode)?;
            let segments = segments(b.segments)?;
            contiguous(&params, &segments)?;
            Job::Evolve {
                params,
                segments,
                samples: b.samples.max(1),
            }
        }
        Mode::Otto => {
            let b = raw.otto.expect("block checked");
            let params = system(raw.system, mode)?;
            if !(b.j2 > 0.0) {
                return Err(CliError::config(format!(
                    "[otto] coupling j2 = {} must be positive",
                    b.j2
                )));
            }
            if !(b.j1 > b.j2) {
                return Err(CliError::config(format!(
                    "[otto] need j1 > j2, got j1 = {}, j2 = {}",
                    b.j1, b.j2
                )));
            }
            let spec = OttoSpec::new(params, b.j1, b.j2, b.phi1, b.phi2, b.p0)
                .map_err(|e| domain("otto", e))?;
            if let Some(m) = b.margin {
                if !(m > 0.0 && m.is_finite()) {
                    return Err(CliError::config(format!(
                        "[otto] margin must be positive, got {m}"
                    )));
                }
            }
            Job::Otto {
                spec,
                orientation: match b.orientation {
                    OrientationName::Engine => Orientation::Engine,
                    OrientationName::Refrigerator => Orientation::Refrigerator,
                },
                margin: b.margin,
                shift_tau: b.shift_tau,
            }
        }
        Mode::Loop => {
            let b = raw.loop_.expect("block checked");
            let params = system(raw.system, mode)?;
            let path = control_path(b.path)?;
            let phi0 = b.phi0.unwrap_or(path.start().1);
            let prep = Preparation::new(b.p0, phi0).map_err(|e| domain("loop", e))?;
            Job::Loop {
                params,
                prep,
                path,
                samples: b.samples.max(1),
            }
        }
        Mode::Classical => {
            let b = raw.classical.expect("block checked");
            let gas = GasState::new(b.n, b.t1, b.v, b.cv, b.s0, b.kb)
                .map_err(|e| domain("classical", e))?;
            Job::Classical(ClassicalSpec::new(b.t2, b.x, gas).map_err(|e| domain("classical", e))?)
        }
        Mode::Check => Job::Check {
            seed: raw.check.unwrap_or_default().seed,
        },
    };

    Ok(RunConfig {
        mode,
        precision,
        sqrt_units: raw.sqrt_units.unwrap_or(false),
        out: raw.out.unwrap_or_else(|| PathBuf::from(".")),
        tolerance: DEFAULT_TOL,
        job,
    })
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Tolerance override from `NHQHE_TOL`, if set.
pub fn tolerance_override(value: Option<&str>) -> Result<Option<f64>> {
    match value {
        None => Ok(None),
        Some(s) => match s.trim().parse::<f64>() {
            Ok(t) if t > 0.0 && t.is_finite() => Ok(Some(t)),
            _ => Err(CliError::config(format!(
                "{TOLERANCE_ENV} must be a positive number, got `{s}`"
            ))),
        },
    }
}

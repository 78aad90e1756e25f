//! Run configuration: a JSON document naming the potential and the command parameters.

use std::fmt;

use clap::ValueEnum;
use ptlab_core::{make_square_well, make_steps, PotentialSpec, StepFamilySpec};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Transmission,
    Spectrum,
    PteScan,
    Track,
    EpLocate,
    Inverse,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Command::Transmission => "transmission",
            Command::Spectrum => "spectrum",
            Command::PteScan => "pte-scan",
            Command::Track => "track",
            Command::EpLocate => "ep-locate",
            Command::Inverse => "inverse",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialConfig {
    SquareWell {
        a: f64,
        depth: f64,
    },
    Steps {
        a: f64,
        eps: Vec<f64>,
        beta: Vec<f64>,
    },
}

impl PotentialConfig {
    fn build(&self) -> Result<PotentialSpec, Vec<String>> {
        match self {
            PotentialConfig::SquareWell { a, depth } => {
                make_square_well(*a, *depth).map_err(|e| vec![format!("potential: {e}")])
            }
            PotentialConfig::Steps { a, eps, beta } => {
                if eps.len() != beta.len() {
                    return Err(vec![format!(
                        "potential.eps has {} entries but potential.beta has {}; they must match",
                        eps.len(),
                        beta.len()
                    )]);
                }
                make_steps(&self.step_family().expect("steps"))
                    .map_err(|e| vec![format!("potential (a = {a}): {e}")])
            }
        }
    }

    pub fn step_family(&self) -> Option<StepFamilySpec> {
        match self {
            PotentialConfig::Steps { a, eps, beta } => Some(StepFamilySpec {
                half_width: *a,
                widths: eps.clone(),
                strengths: beta.clone(),
            }),
            PotentialConfig::SquareWell { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

/// Either an explicit list of values or an arithmetic progression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Range(RangeGrid),
}

impl Grid {
    pub fn points(&self) -> Result<Vec<f64>, String> {
        let pts = match self {
            Grid::Values(v) => v.clone(),
            Grid::Range(RangeGrid { start, stop, step }) => {
                let span = stop - start;
                if !(start.is_finite() && stop.is_finite() && step.is_finite())
                    || *step == 0.0
                    || span * step < 0.0
                {
                    return Err(format!(
                        "range {start} -> {stop} cannot be walked with step {step}"
                    ));
                }
                let n = (span / step + 1e-9).floor() as usize;
                if n > 10_000_000 {
                    return Err(format!("range has {n} points, more than 1e7"));
                }
                (0..=n).map(|i| start + i as f64 * step).collect()
            }
        };
        if pts.is_empty() || pts.iter().any(|x| !x.is_finite()) {
            return Err("grid must be nonempty and finite".into());
        }
        let up = pts.windows(2).all(|w| w[1] > w[0]);
        let down = pts.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err("grid must be strictly monotone".into());
        }
        Ok(pts)
    }

    fn increasing(&self, field: &str, errs: &mut Vec<String>) -> Vec<f64> {
        match self.points() {
            Ok(p) if p.windows(2).all(|w| w[1] > w[0]) => p,
            Ok(_) => {
                errs.push(format!("{field}: grid must be increasing"));
                Vec::new()
            }
            Err(e) => {
                errs.push(format!("{field}: {e}"));
                Vec::new()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "vary", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyConfig {
    /// Strength `beta[index]` of a steps potential, counted from 1.
    Beta { index: usize },
    /// Depth of a square well.
    Depth,
    /// Constant added to the potential.
    Shift,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaKeyword {
    Dispersion,
}

/// A fixed Robin parameter, or `"dispersion"` for `alpha = sqrt(mu)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaConfig {
    Fixed(f64),
    Keyword(AlphaKeyword),
}

fn default_scan_step() -> f64 {
    ptlab_core::pte::DEFAULT_SCAN_STEP
}

fn default_gate_rate() -> f64 {
    ptlab_core::pte::DEFAULT_GATE_RATE
}

fn default_im_extent() -> f64 {
    ptlab_core::spectrum::DEFAULT_IM_EXTENT
}

fn default_max_count() -> usize {
    400
}

fn default_refinements() -> u32 {
    6
}

fn default_continuation_step() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmissionParams {
    pub k2: Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumParams {
    /// Continuation range and initial step.
    pub alpha: RangeGrid,
    /// Upper end of the real parts searched at `alpha = 0`.
    pub re_max: f64,
    #[serde(default = "default_im_extent")]
    pub im_extent: f64,
    #[serde(default = "default_max_count")]
    pub max_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PteScanParams {
    pub k_range: [f64; 2],
    #[serde(default = "default_scan_step")]
    pub scan_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackParams {
    pub family: FamilyConfig,
    pub theta: Grid,
    pub k_range: [f64; 2],
    #[serde(default = "default_scan_step")]
    pub scan_step: f64,
    #[serde(default = "default_gate_rate")]
    pub gate_rate: f64,
    #[serde(default = "default_refinements")]
    pub max_refinements: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpParams {
    pub family: FamilyConfig,
    pub alpha: AlphaConfig,
    pub bracket: [f64; 2],
    pub mu_guess: f64,
    pub window: [f64; 2],
    /// Parameter offsets at which the split pair is reported.
    #[serde(default)]
    pub unfolding: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InverseParams {
    pub v0: Grid,
    pub seed_window: [f64; 2],
    pub k_max: f64,
    pub alpha: Grid,
    #[serde(default = "default_scan_step")]
    pub scan_step: f64,
    #[serde(default = "default_gate_rate")]
    pub gate_rate: f64,
    /// Also continue the branch directly and write it alongside the reconstruction.
    #[serde(default)]
    pub compare_direct: bool,
    #[serde(default = "default_continuation_step")]
    pub continuation_step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    Transmission(TransmissionParams),
    Spectrum(SpectrumParams),
    PteScan(PteScanParams),
    Track(TrackParams),
    EpLocate(EpParams),
    Inverse(InverseParams),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub potential_config: PotentialConfig,
    pub potential: PotentialSpec,
    pub params: Params,
    /// The parsed document, echoed into the manifest.
    pub document: Value,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    command: Option<Command>,
    potential: PotentialConfig,
    #[serde(default)]
    params: Option<Value>,
}

fn located<T: DeserializeOwned>(value: Value, prefix: &str) -> Result<T, String> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        let at = match (prefix.is_empty(), path == ".") {
            (true, _) => path,
            (false, true) => prefix.to_string(),
            (false, false) => format!("{prefix}.{path}"),
        };
        format!("{at}: {}", e.inner())
    })
}

fn check_positive(field: &str, v: f64, errs: &mut Vec<String>) {
    if !(v.is_finite() && v > 0.0) {
        errs.push(format!("{field}: must be positive, got {v}"));
    }
}

fn check_interval(field: &str, r: [f64; 2], errs: &mut Vec<String>) {
    if !(r[0].is_finite() && r[1].is_finite() && r[1] > r[0]) {
        errs.push(format!(
            "{field}: [{}, {}] is not an increasing interval",
            r[0], r[1]
        ));
    }
}

fn check_family(family: FamilyConfig, potential: &PotentialConfig, errs: &mut Vec<String>) {
    match (family, potential) {
        (FamilyConfig::Beta { index }, PotentialConfig::Steps { beta, .. }) => {
            if index == 0 || index > beta.len() {
                errs.push(format!(
                    "params.family.index: {index} is outside 1..={}",
                    beta.len()
                ));
            }
        }
        (FamilyConfig::Beta { .. }, _) => {
            errs.push("params.family: vary = beta needs a steps potential".into())
        }
        (FamilyConfig::Depth, PotentialConfig::SquareWell { .. }) | (FamilyConfig::Shift, _) => {}
        (FamilyConfig::Depth, _) => {
            errs.push("params.family: vary = depth needs a square_well potential".into())
        }
    }
}

fn validate(params: &Params, potential: &PotentialConfig) -> Vec<String> {
    let mut errs = Vec::new();
    match params {
        Params::Transmission(p) => {
            let pts = p.k2.increasing("params.k2", &mut errs);
            if pts.iter().any(|&e| e <= 0.0) {
                errs.push("params.k2: energies must be positive".into());
            }
        }
        Params::Spectrum(p) => {
            match (Grid::Range(p.alpha.clone())).points() {
                Ok(pts) if pts.len() >= 2 && pts[1] > pts[0] => {}
                Ok(_) => errs.push("params.alpha: range must increase and hold two points".into()),
                Err(e) => errs.push(format!("params.alpha: {e}")),
            }
            check_positive("params.im_extent", p.im_extent, &mut errs);
            if p.max_count == 0 {
                errs.push("params.max_count: must be at least 1".into());
            }
            if !p.re_max.is_finite() {
                errs.push("params.re_max: must be finite".into());
            }
        }
        Params::PteScan(p) => {
            check_interval("params.k_range", p.k_range, &mut errs);
            if p.k_range[0] < 0.0 {
                errs.push("params.k_range: wavenumbers must be nonnegative".into());
            }
            check_positive("params.scan_step", p.scan_step, &mut errs);
        }
        Params::Track(p) => {
            check_family(p.family, potential, &mut errs);
            if let Err(e) = p.theta.points() {
                errs.push(format!("params.theta: {e}"));
            }
            check_interval("params.k_range", p.k_range, &mut errs);
            check_positive("params.scan_step", p.scan_step, &mut errs);
            check_positive("params.gate_rate", p.gate_rate, &mut errs);
        }
        Params::EpLocate(p) => {
            check_family(p.family, potential, &mut errs);
            if !(p.bracket[0].is_finite()
                && p.bracket[1].is_finite()
                && p.bracket[0] != p.bracket[1])
            {
                errs.push("params.bracket: needs two distinct finite values".into());
            }
            check_interval("params.window", p.window, &mut errs);
            if let AlphaConfig::Fixed(a) = p.alpha {
                if !a.is_finite() {
                    errs.push("params.alpha: must be finite".into());
                }
            }
            if p.unfolding.iter().any(|d| !d.is_finite() || *d == 0.0) {
                errs.push("params.unfolding: offsets must be finite and nonzero".into());
            }
        }
        Params::Inverse(p) => {
            p.v0.increasing("params.v0", &mut errs);
            p.alpha.increasing("params.alpha", &mut errs);
            check_interval("params.seed_window", p.seed_window, &mut errs);
            check_positive("params.k_max", p.k_max, &mut errs);
            check_positive("params.scan_step", p.scan_step, &mut errs);
            check_positive("params.gate_rate", p.gate_rate, &mut errs);
            check_positive("params.continuation_step", p.continuation_step, &mut errs);
        }
    }
    errs
}

/// Parses and validates a configuration for `command`.
pub fn parse_config(text: &str, command: Command) -> Result<RunConfig, CliError> {
    let document: Value = serde_json::from_str(text).map_err(|e| {
        CliError::Config(vec![format!(
            "line {}, column {}: {e}",
            e.line(),
            e.column()
        )])
    })?;
    let doc: Document = located(document.clone(), "").map_err(|e| CliError::Config(vec![e]))?;
    if let Some(c) = doc.command {
        if c != command {
            return Err(CliError::Config(vec![format!(
                "command: the document is for `{c}` but `{command}` was requested"
            )]));
        }
    }
    let mut errs = Vec::new();
    let potential = match doc.potential.build() {
        Ok(p) => Some(p),
        Err(e) => {
            errs.extend(e);
            None
        }
    };
    let raw = doc.params.unwrap_or(Value::Object(Default::default()));
    let params = match command {
        Command::Transmission => located(raw, "params").map(Params::Transmission),
        Command::Spectrum => located(raw, "params").map(Params::Spectrum),
        Command::PteScan => located(raw, "params").map(Params::PteScan),
        Command::Track => located(raw, "params").map(Params::Track),
        Command::EpLocate => located(raw, "params").map(Params::EpLocate),
        Command::Inverse => located(raw, "params").map(Params::Inverse),
    };
    let params = match params {
        Ok(p) => {
            errs.extend(validate(&p, &doc.potential));
            Some(p)
        }
        Err(e) => {
            errs.push(e);
            None
        }
    };
    match (potential, params) {
        (Some(potential), Some(params)) if errs.is_empty() => Ok(RunConfig {
            command,
            potential_config: doc.potential,
            potential,
            params,
            document,
        }),
        _ => Err(CliError::Config(errs)),
    }
}

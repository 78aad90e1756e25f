//! Configuration, dispatch and output writing for the `ptlab` command.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

use std::path::Path;
use std::time::Instant;

use serde_json::{json, Value};

pub use config::{parse_config, Command, RunConfig};
pub use error::CliError;
use run::RunRecord;

/// Every fixed numerical tolerance of the library, by name.
pub fn tolerances() -> Value {
    use ptlab_core::{contour, exceptional, inverse, pte, spectrum};
    let cont = spectrum::ContinuationOptions::default();
    json!({
        "root_relative_residual": spectrum::ROOT_TOLERANCE,
        "newton_max_iterations": spectrum::NEWTON_MAX_ITER,
        "collision_threshold": spectrum::COLLISION_THRESHOLD,
        "default_im_extent": spectrum::DEFAULT_IM_EXTENT,
        "max_subdivision_depth": spectrum::MAX_SUBDIVISION_DEPTH,
        "contour_panels_per_edge": contour::DEFAULT_PANELS_PER_EDGE,
        "contour_max_phase_step": contour::MAX_PHASE_STEP,
        "contour_zero_threshold": contour::ZERO_ON_CONTOUR,
        "continuation_max_halvings": cont.max_halvings,
        "continuation_grow_after": cont.grow_after,
        "reflection_tolerance": pte::REFLECTION_TOLERANCE,
        "all_pass_tolerance": pte::ALL_PASS_TOLERANCE,
        "default_scan_step": pte::DEFAULT_SCAN_STEP,
        "default_gate_rate": pte::DEFAULT_GATE_RATE,
        "track_loose_gate_factor": pte::LOOSE_GATE_FACTOR,
        "ep_tolerance": exceptional::EP_TOLERANCE,
        "ep_newton_max_iterations": exceptional::NEWTON_MAX_ITER,
        "ep_bisection_tolerance": exceptional::BISECTION_TOLERANCE,
        "ep_count_grid": exceptional::COUNT_GRID,
        "kappa_difference_step": inverse::DEFAULT_DIFFERENCE_STEP,
        "kappa_loose_gate_factor": inverse::LOOSE_GATE_FACTOR,
    })
}

/// Runs a parsed configuration, writing outputs and `manifest.json` into `out`.
///
/// Outputs written before a numerical failure are kept and listed in the manifest.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let started = Instant::now();
    let mut record = RunRecord::default();
    let result = run::execute(cfg, out, &mut record);
    let (status, failure) = match &result {
        Ok(()) => ("ok", Value::Null),
        Err(e) => ("numerical_failure", json!(e.to_string())),
    };
    let outputs: Vec<String> = record
        .outputs
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    let manifest = json!({
        "tool": "ptlab",
        "version": env!("CARGO_PKG_VERSION"),
        "core_version": ptlab_core::VERSION,
        "command": cfg.command.to_string(),
        "config": cfg.document,
        "threads": rayon::current_num_threads(),
        "tolerances": tolerances(),
        "status": status,
        "failure": failure,
        "outcome": record.outcome,
        "outputs": outputs,
        "wall_time_seconds": started.elapsed().as_secs_f64(),
    });
    output::write_json(out, "manifest.json", &manifest)?;
    result
}

//! Command dispatch and output assembly.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use ptlab_core::exceptional::{locate_exceptional_point, unfolding_pair, AlphaMode, EpSearch};
use ptlab_core::family::{PotentialFamily, ShiftFamily, SquareWellDepthFamily, StepStrengthFamily};
use ptlab_core::inverse::{
    exclude_crossings, reconstruct_branch, simulate_kappa, KappaSelector, TruncationReason,
};
use ptlab_core::pte::{find_ptes, track_ptes, PteOutcome, TrackOptions};
use ptlab_core::spectrum::{continue_branch, default_search_box, trace_branches, RobinParameter};
use ptlab_core::transfer::transmission_curve;
use ptlab_core::PotentialSpec;
use serde_json::{json, Value};

use crate::config::{
    AlphaConfig, EpParams, FamilyConfig, InverseParams, Params, PotentialConfig, PteScanParams,
    RunConfig, SpectrumParams, TrackParams, TransmissionParams,
};
use crate::error::CliError;
use crate::output::{num, write_csv, write_json};

/// What a run produced, kept even when it stops early.
#[derive(Debug, Default)]
pub struct RunRecord {
    pub outputs: Vec<PathBuf>,
    pub outcome: Value,
}

pub fn execute(cfg: &RunConfig, out: &Path, record: &mut RunRecord) -> Result<(), CliError> {
    let p = &cfg.potential;
    match &cfg.params {
        Params::Transmission(t) => transmission(p, t, out, record),
        Params::Spectrum(s) => spectrum(p, s, out, record),
        Params::PteScan(s) => pte_scan(p, s, out, record),
        Params::Track(t) => track(&cfg.potential_config, p, t, out, record),
        Params::EpLocate(e) => ep_locate(&cfg.potential_config, p, e, out, record),
        Params::Inverse(i) => inverse(p, i, out, record),
    }
}

fn family(
    potential: &PotentialConfig,
    p: &PotentialSpec,
    f: FamilyConfig,
) -> Result<Box<dyn PotentialFamily>, CliError> {
    Ok(match (f, potential) {
        (FamilyConfig::Beta { index }, _) => {
            let spec = potential.step_family().expect("validated");
            Box::new(StepStrengthFamily::new(spec, index - 1)?)
        }
        (FamilyConfig::Depth, PotentialConfig::SquareWell { a, .. }) => {
            Box::new(SquareWellDepthFamily { half_width: *a })
        }
        (FamilyConfig::Depth, _) => unreachable!("validated"),
        (FamilyConfig::Shift, _) => Box::new(ShiftFamily { base: p.clone() }),
    })
}

fn transmission(
    p: &PotentialSpec,
    t: &TransmissionParams,
    out: &Path,
    record: &mut RunRecord,
) -> Result<(), CliError> {
    let grid = t.k2.points().expect("validated");
    let curve = transmission_curve(p, &grid)?;
    let rows: Vec<Vec<String>> = curve
        .iter()
        .map(|c| vec![num(c.k2), num(c.t2), num(c.r2), num(c.arg_t)])
        .collect();
    record.outputs.push(write_csv(
        out,
        "transmission.csv",
        &["k2", "T2", "R2", "argT"],
        &rows,
    )?);
    let best = curve.iter().map(|c| c.t2).fold(0.0, f64::max);
    record.outcome = json!({ "points": curve.len(), "max_T2": best });
    Ok(())
}

fn spectrum(
    p: &PotentialSpec,
    s: &SpectrumParams,
    out: &Path,
    record: &mut RunRecord,
) -> Result<(), CliError> {
    let bx = default_search_box(p, s.re_max, s.im_extent)?;
    let range = (s.alpha.start, s.alpha.stop);
    let branches = trace_branches(p, &bx, s.max_count, range, s.alpha.step)?;
    let mut summary = Vec::new();
    for b in &branches {
        let label = b.label.expect("traced branches are labelled");
        let rows: Vec<Vec<String>> = b
            .samples
            .iter()
            .map(|x| vec![num(x.alpha), num(x.mu.re), num(x.mu.im), num(x.residual)])
            .collect();
        let name = format!("branch_{label:03}.csv");
        record.outputs.push(write_csv(
            out,
            &name,
            &["alpha", "re_mu", "im_mu", "residual"],
            &rows,
        )?);
        let collisions: Vec<Value> = b
            .collisions
            .iter()
            .map(|c| json!({ "alpha": c.alpha, "re_mu": c.mu.re, "im_mu": c.mu.im, "partner_distance": c.partner_distance }))
            .collect();
        summary.push(json!({ "label": label, "file": name, "samples": b.samples.len(), "collisions": collisions }));
    }
    record.outcome = json!({
        "search_box": { "re": [bx.re.0, bx.re.1], "im": [bx.im.0, bx.im.1] },
        "branches": summary,
    });
    Ok(())
}

fn pte_rows(outcome: &PteOutcome) -> Vec<Vec<String>> {
    outcome
        .records()
        .iter()
        .map(|r| {
            vec![
                num(r.k_star),
                num(r.mu_star),
                r.multiplicity.to_string(),
                num(r.residual_secular),
                num(r.residual_reflection),
            ]
        })
        .collect()
}

fn pte_scan(
    p: &PotentialSpec,
    s: &PteScanParams,
    out: &Path,
    record: &mut RunRecord,
) -> Result<(), CliError> {
    let outcome = find_ptes(p, (s.k_range[0], s.k_range[1]), s.scan_step)?;
    let header = [
        "k_star",
        "mu_star",
        "multiplicity",
        "residual_F",
        "residual_R",
    ];
    record
        .outputs
        .push(write_csv(out, "ptes.csv", &header, &pte_rows(&outcome))?);
    record.outcome = if outcome.is_all_pass() {
        json!({ "kind": "all_pass" })
    } else {
        json!({ "kind": "discrete", "count": outcome.records().len() })
    };
    Ok(())
}

fn track(
    potential: &PotentialConfig,
    p: &PotentialSpec,
    t: &TrackParams,
    out: &Path,
    record: &mut RunRecord,
) -> Result<(), CliError> {
    let fam = family(potential, p, t.family)?;
    let grid = t.theta.points().expect("validated");
    let opts = TrackOptions {
        scan_step: t.scan_step,
        gate_rate: t.gate_rate,
        max_refinements: t.max_refinements,
    };
    let tr = track_ptes(fam.as_ref(), &grid, (t.k_range[0], t.k_range[1]), &opts)?;

    let sign = if grid.len() > 1 && grid[1] < grid[0] {
        -1.0
    } else {
        1.0
    };
    let mut rows: Vec<(f64, u8, Vec<String>)> = Vec::new();
    for s in &tr.samples {
        for r in &s.records {
            let branch = r.branch.map(|b| b.to_string()).unwrap_or_default();
            rows.push((
                sign * s.theta,
                0,
                vec![
                    num(s.theta),
                    num(r.mu_star),
                    num(r.k_star),
                    branch,
                    String::new(),
                ],
            ));
        }
    }
    for e in &tr.events {
        let k = e.mu_star.max(0.0).sqrt();
        rows.push((
            sign * e.theta,
            1,
            vec![
                num(e.theta),
                num(e.mu_star),
                num(k),
                String::new(),
                e.kind.as_str().into(),
            ],
        ));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let rows: Vec<Vec<String>> = rows.into_iter().map(|r| r.2).collect();
    let header = ["theta", "mu_star", "k_star", "branch", "event"];
    record
        .outputs
        .push(write_csv(out, "track.csv", &header, &rows)?);

    let events: Vec<Value> = tr
        .events
        .iter()
        .map(|e| json!({ "theta": e.theta, "mu_star": e.mu_star, "kind": e.kind.as_str(), "count": e.count }))
        .collect();
    record.outputs.push(write_json(
        out,
        "events.json",
        &Value::Array(events.clone()),
    )?);
    let ambiguous: Vec<f64> = tr
        .samples
        .iter()
        .filter(|s| s.ambiguous)
        .map(|s| s.theta)
        .collect();
    let all_pass: Vec<f64> = tr
        .samples
        .iter()
        .filter(|s| s.all_pass)
        .map(|s| s.theta)
        .collect();
    record.outcome = json!({
        "parameter": tr.parameter,
        "samples": tr.samples.len(),
        "events": events,
        "ambiguous_thetas": ambiguous,
        "all_pass_thetas": all_pass,
    });
    Ok(())
}

fn ep_locate(
    potential: &PotentialConfig,
    p: &PotentialSpec,
    e: &EpParams,
    out: &Path,
    record: &mut RunRecord,
) -> Result<(), CliError> {
    let fam = family(potential, p, e.family)?;
    let mode = match e.alpha {
        AlphaConfig::Fixed(a) => AlphaMode::Fixed(RobinParameter::new(a)?),
        AlphaConfig::Keyword(_) => AlphaMode::Dispersion,
    };
    let search = EpSearch {
        bracket: (e.bracket[0], e.bracket[1]),
        mu_guess: e.mu_guess,
        window: (e.window[0], e.window[1]),
    };
    let ep = locate_exceptional_point(fam.as_ref(), mode, &search)?;
    let mut unfolding = Vec::new();
    for &d in &e.unfolding {
        let (a, b) = unfolding_pair(fam.as_ref(), &ep, d)?;
        unfolding.push(json!({
            "delta": d,
            "mu1": [a.re, a.im],
            "mu2": [b.re, b.im],
            "separation": (a - b).norm(),
        }));
    }
    let report = json!({
        "theta": ep.theta,
        "re_mu": ep.mu.re,
        "im_mu": ep.mu.im,
        "residual_F": ep.residual_f,
        "residual_dF": ep.residual_df,
        "alpha": ep.alpha,
        "parameter": fam.parameter_name(),
        "count_change_theta": ep.count_change_theta,
        "iterations": ep.iterations,
        "unfolding": unfolding,
    });
    record.outputs.push(write_json(out, "ep.json", &report)?);
    record.outcome = report;
    Ok(())
}

fn inverse(
    p: &PotentialSpec,
    i: &InverseParams,
    out: &Path,
    record: &mut RunRecord,
) -> Result<(), CliError> {
    let v0 = i.v0.points().expect("validated");
    let alphas = i.alpha.points().expect("validated");
    let selector = KappaSelector {
        seed_window: (i.seed_window[0], i.seed_window[1]),
        k_max: i.k_max,
        scan_step: i.scan_step,
        gate_rate: i.gate_rate,
    };
    let curve = simulate_kappa(p, &selector, &v0)?;
    let rows: Vec<Vec<String>> = curve
        .samples
        .iter()
        .map(|s| vec![num(s.v0), num(s.kappa)])
        .collect();
    record
        .outputs
        .push(write_csv(out, "kappa.csv", &["v0", "kappa"], &rows)?);
    let truncation = curve.truncation.map(|t| {
        let reason = match t.reason {
            TruncationReason::Lost => "lost",
            TruncationReason::AllPass => "all_pass",
        };
        json!({ "v0": t.v0, "kappa": t.kappa, "reason": reason })
    });
    record.outcome = json!({
        "kappa_samples": curve.samples.len(),
        "monotone": curve.monotone,
        "min_slope": curve.min_slope,
        "truncation": truncation,
    });

    let rec = exclude_crossings(p, reconstruct_branch(&curve, &alphas)?);
    let mut rows: Vec<Vec<String>> = rec
        .branch
        .samples
        .iter()
        .map(|s| {
            vec![
                num(s.alpha),
                num(s.mu.re),
                num(s.mu.im),
                "reconstructed".into(),
            ]
        })
        .collect();
    let mut sup = None;
    if i.compare_direct && !rec.branch.samples.is_empty() {
        let first = curve.samples[0];
        let a0 = first.kappa.sqrt();
        let lo = rec.branch.samples[0].alpha.min(a0);
        let hi = rec.branch.samples.last().expect("nonempty").alpha.max(a0);
        let seed = (a0, Complex64::new(first.kappa - first.v0, 0.0));
        let direct = continue_branch(p, seed, (lo, hi), i.continuation_step)?;
        let mut worst = 0.0f64;
        for s in &rec.branch.samples {
            let mu = direct.evaluate(p, s.alpha)?;
            worst = worst.max((mu - s.mu).norm());
            rows.push(vec![num(s.alpha), num(mu.re), num(mu.im), "direct".into()]);
        }
        sup = Some(worst);
    }
    let header = ["alpha", "re_mu", "im_mu", "source"];
    record
        .outputs
        .push(write_csv(out, "reconstruction.csv", &header, &rows)?);
    let skipped: Vec<Value> = rec
        .skipped
        .iter()
        .map(|s| json!({ "alpha": s.alpha, "reason": s.reason }))
        .collect();
    if let Value::Object(m) = &mut record.outcome {
        m.insert("reconstructed".into(), json!(rec.branch.samples.len()));
        m.insert("skipped".into(), Value::Array(skipped));
        m.insert("sup_error_vs_direct".into(), json!(sup));
    }
    Ok(())
}

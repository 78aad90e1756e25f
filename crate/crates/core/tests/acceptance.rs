//! End-to-end acceptance checks, one line per criterion.
//!
//! Criteria listed in `KNOWN_FAILURES` are reported but do not fail the run; any
//! other failure exits with status 1.

use std::f64::consts::{FRAC_PI_4, PI};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ptlab_core::contour::SearchBox;
use ptlab_core::exceptional::{locate_exceptional_point, unfolding_pair, AlphaMode, EpSearch};
use ptlab_core::family::{PotentialFamily, StepStrengthFamily};
use ptlab_core::inverse::{
    kappa_derivative_check, reconstruct_branch, simulate_kappa, KappaSelector,
};
use ptlab_core::pte::{find_ptes, track_ptes, EventKind, PteTrack, TrackOptions};
use ptlab_core::spectrum::{
    continue_branch, count_eigenvalues, find_eigenvalues, square_well_eigenvalues, RobinParameter,
};
use ptlab_core::transfer::{scattering_amplitudes, transmission_curve, unimodularity_defect};
use ptlab_core::{make_square_well, make_steps, Error, PotentialSpec, Segment, StepFamilySpec};

const KNOWN_FAILURES: &[u32] = &[3, 4];

type Check = Result<(bool, String), Error>;
type Criterion = (u32, &'static str, fn() -> Check, Duration);

fn fig2_spec(beta1: f64) -> StepFamilySpec {
    StepFamilySpec::three_band(FRAC_PI_4, 0.2, 0.5, [beta1, 0.0, -100.0])
}

fn fig2(beta1: f64) -> PotentialSpec {
    make_steps(&fig2_spec(beta1)).expect("valid steps")
}

fn robin(alpha: f64) -> RobinParameter {
    RobinParameter::new(alpha).expect("finite alpha")
}

fn square_well_oracle() -> Check {
    let (a, depth) = (2.0, 1.0);
    let p = make_square_well(a, depth)?;
    let bx = SearchBox::new((-2.0, 36.0), (-1.0, 1.0))?;
    let mut worst = 0.0f64;
    for alpha in [0.0, 0.5, 1.0, 2.0, 5.0] {
        let found = find_eigenvalues(&p, robin(alpha), &bx, 16)?;
        let mut exact = square_well_eigenvalues(a, depth, alpha, 12);
        exact.sort_by(|x, y| x.re.total_cmp(&y.re));
        if found.len() < 8 {
            return Ok((
                false,
                format!("alpha = {alpha}: only {} levels", found.len()),
            ));
        }
        for (f, e) in found.iter().zip(&exact).take(8) {
            worst = worst.max((f - e).norm() / e.norm().max(1.0));
        }
    }
    Ok((
        worst < 1e-10,
        format!("max relative error {worst:.2e} (tol 1e-10)"),
    ))
}

fn pte_scattering_consistency() -> Check {
    let cases = [
        ("square well", make_square_well(2.0, 1.0)?, 10.0),
        ("fig2 steps", fig2(-90.0), 25.0),
    ];
    let mut worst_r = 0.0f64;
    let mut worst_t = 0.0f64;
    let mut count = 0;
    for (_, p, k_max) in &cases {
        for r in find_ptes(p, (1e-3, *k_max), 0.01)?.records() {
            let s = scattering_amplitudes(p, r.k_star)?;
            worst_r = worst_r.max(s.r.norm());
            worst_t = worst_t.max((s.transmission() - 1.0).abs());
            count += 1;
        }
    }
    Ok((
        count > 0 && worst_r < 1e-8 && worst_t < 1e-8,
        format!("{count} PTEs, max |R| {worst_r:.2e}, max ||T|^2-1| {worst_t:.2e} (tol 1e-8)"),
    ))
}

fn fig3_track() -> Result<PteTrack, Error> {
    let family = StepStrengthFamily::new(fig2_spec(-80.0), 0)?;
    let grid: Vec<f64> = (0..=120).map(|i| -80.0 - i as f64).collect();
    track_ptes(&family, &grid, (1e-3, 25.0), &TrackOptions::default())
}

fn fig3_reproduction() -> Check {
    let track = fig3_track()?;
    let lossy = |k: EventKind| matches!(k, EventKind::Merge | EventKind::Disappear);
    let first = track.events.iter().any(|e| {
        lossy(e.kind) && (e.theta + 140.0).abs() <= 10.0 && (e.mu_star - 190.0).abs() <= 20.0
    });
    let second = track
        .events
        .iter()
        .any(|e| (e.mu_star - 450.0).abs() <= 30.0);
    let listing: Vec<String> = track
        .events
        .iter()
        .map(|e| format!("{}@{:.1}:mu{:.1}", e.kind.as_str(), e.theta, e.mu_star))
        .collect();
    Ok((
        first && second,
        format!(
            "loss at beta1=-140+-10, mu=190+-20: {}; event at mu=450+-30: {}; events [{}]",
            if first { "yes" } else { "no" },
            if second { "yes" } else { "no" },
            listing.join(", ")
        ),
    ))
}

fn fig4_reproduction() -> Check {
    let window = |lo: f64, hi: f64| (lo.sqrt(), hi.sqrt());
    let peaks = find_ptes(&fig2(-120.0), window(140.0, 180.0), 0.001)?;
    let grid: Vec<f64> = (0..=40_000).map(|i| 140.0 + 1e-3 * i as f64).collect();
    let best = transmission_curve(&fig2(-120.0), &grid)?
        .iter()
        .map(|c| c.t2)
        .fold(0.0, f64::max);
    let many = peaks
        .records()
        .iter()
        .filter(|r| r.residual_reflection < 1e-4)
        .count();
    let first = many >= 2;

    let deep = fig2(-200.0);
    let lost_ptes = find_ptes(&deep, window(160.0, 200.0), 0.001)?;
    let grid: Vec<f64> = (0..=40_000).map(|i| 160.0 + 1e-3 * i as f64).collect();
    let min_r = transmission_curve(&deep, &grid)?
        .iter()
        .map(|c| c.r2.sqrt())
        .fold(f64::INFINITY, f64::min);
    let second = lost_ptes.records().is_empty() && min_r >= 1e-6;
    let all = find_ptes(&fig2(-120.0), (1e-3, 25.0), 0.01)?;
    let located: Vec<String> = all
        .records()
        .iter()
        .map(|r| format!("{:.1}", r.mu_star))
        .collect();
    Ok((
        first && second,
        format!(
            "beta1=-120: {many} PTEs in k^2 [140,180] (need 2), max |T|^2 {best:.6}, PTEs at k^2 [{}]; \
             beta1=-200: min |R| {min_r:.2e} in k^2 [160,200] (need >= 1e-6)",
            located.join(", ")
        ),
    ))
}

fn inverse_round_trip() -> Check {
    let p = fig2(-90.0);
    let v0: Vec<f64> = (0..=160).map(|i| 15.0 * i as f64 / 160.0).collect();
    let curve = simulate_kappa(&p, &KappaSelector::new((1.5, 2.5), 6.0), &v0)?;
    if !curve.monotone || curve.truncation.is_some() {
        return Ok((false, "measured kappa not monotone on [0, 15]".into()));
    }
    let k0 = curve.samples[0].kappa;
    let k1 = curve.samples.last().expect("samples").kappa;
    let (lo, hi) = (k0.sqrt() + 1e-3, k1.sqrt() - 1e-3);
    let alphas: Vec<f64> = (0..=200)
        .map(|i| lo + (hi - lo) * i as f64 / 200.0)
        .collect();
    let rec = reconstruct_branch(&curve, &alphas)?;
    let direct = continue_branch(&p, (k0.sqrt(), Complex64::new(k0, 0.0)), (0.0, 6.0), 0.05)?;
    let mut worst = 0.0f64;
    for s in &rec.branch.samples {
        worst = worst.max((s.mu - direct.evaluate(&p, s.alpha)?).norm());
    }
    Ok((
        worst < 1e-6 && rec.skipped.is_empty(),
        format!(
            "{} alphas in [{lo:.3}, {hi:.3}], sup error {worst:.2e} (tol 1e-6)",
            rec.branch.samples.len()
        ),
    ))
}

fn kappa_slope_formula() -> Check {
    let p = fig2(-90.0);
    let k0 = 2.106_612_830_918_647_4f64;
    let branch = continue_branch(&p, (k0.sqrt(), Complex64::new(k0, 0.0)), (0.0, 6.0), 0.05)?;
    let mut worst = 0.0f64;
    for v0 in [0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 7.0, 10.0, 12.0, 14.0] {
        worst = worst.max(kappa_derivative_check(&p, &branch, v0, 1e-3)?.gap);
    }

    let (a, depth) = (2.0, 3.0);
    let well = make_square_well(a, depth)?;
    let mut unit = 0.0f64;
    for (n, v0) in [(2, 1.0), (3, 0.5), (3, 1.5)] {
        let level = (n as f64 * PI / (2.0 * a)).powi(2) - depth;
        let flat = continue_branch(&well, (0.0, Complex64::new(level, 0.0)), (0.0, 3.0), 0.05)?;
        let d = kappa_derivative_check(&well, &flat, v0, 1e-3)?;
        unit = unit.max((d.rhs - 1.0).abs()).max((d.lhs - 1.0).abs());
    }
    Ok((
        worst < 1e-4 && unit < 1e-6,
        format!("max gap {worst:.2e} at 10 points (tol 1e-4); square-well |slope-1| {unit:.2e}"),
    ))
}

fn random_potential(rng: &mut ChaCha8Rng, even: bool) -> PotentialSpec {
    let a = rng.gen_range(0.2..2.0);
    let n = rng.gen_range(1..6);
    let weights: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
    let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-60.0..60.0)).collect();
    let total: f64 = weights.iter().sum();
    if even {
        let spec = StepFamilySpec {
            half_width: a,
            widths: weights.iter().map(|w| a * w / total).collect(),
            strengths: weights
                .iter()
                .zip(&values)
                .map(|(w, v)| v * a * w / total)
                .collect(),
        };
        return make_steps(&spec).expect("valid steps");
    }
    let mut x = -a;
    let segments = weights
        .iter()
        .zip(&values)
        .enumerate()
        .map(|(i, (w, v))| {
            let hi = if i + 1 == n {
                a
            } else {
                x + 2.0 * a * w / total
            };
            let s = Segment {
                lo: x,
                hi,
                value: *v,
            };
            x = hi;
            s
        })
        .collect();
    PotentialSpec::new(a, segments).expect("valid partition")
}

fn max_match_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for z in a {
        let best = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, w)| (j, (z - w).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1));
        let Some((j, d)) = best else {
            return f64::INFINITY;
        };
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

fn property_suite() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let (mut det, mut unitarity) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let p = random_potential(&mut rng, false);
        for _ in 0..5 {
            let mu = Complex64::from_polar(rng.gen_range(0.0..1e3), rng.gen_range(-PI..PI));
            det = det.max(unimodularity_defect(&p, mu));
            let s = scattering_amplitudes(&p, rng.gen_range(1e-3..50.0))?;
            unitarity = unitarity.max((s.reflection() + s.transmission() - 1.0).abs());
        }
    }

    let (mut pairing, mut reversal) = (0.0f64, 0.0f64);
    for _ in 0..10 {
        let p = random_potential(&mut rng, true);
        let alpha = rng.gen_range(-6.0..6.0);
        let bx = SearchBox::new((p.min_value() - 1.0, 120.0), (-40.0, 40.0))?;
        let roots = find_eigenvalues(&p, robin(alpha), &bx, 400)?;
        let conj: Vec<Complex64> = roots.iter().map(|z| z.conj()).collect();
        pairing = pairing.max(max_match_distance(&roots, &conj));

        let q = random_potential(&mut rng, false);
        let bx = SearchBox::new((q.min_value() - 1.0, 90.0), (-35.0, 35.0))?;
        let plus = find_eigenvalues(&q, robin(alpha), &bx, 400)?;
        let minus: Vec<Complex64> = find_eigenvalues(&q, robin(-alpha), &bx, 400)?
            .iter()
            .map(|z| z.conj())
            .collect();
        reversal = reversal.max(max_match_distance(&plus, &minus));
    }

    let mut boxes = 0;
    let mut mismatches = 0;
    while boxes < 20 {
        let p = random_potential(&mut rng, false);
        let alpha = rng.gen_range(-5.0..5.0);
        let re0 = rng.gen_range(-70.0..80.0);
        let im0 = rng.gen_range(-30.0..10.0);
        let bx = SearchBox::new(
            (re0, re0 + rng.gen_range(1.0..60.0)),
            (im0, im0 + rng.gen_range(0.5..30.0)),
        )?;
        let count = match count_eigenvalues(&p, robin(alpha), &bx) {
            Err(Error::RootOnContour(_)) => continue,
            other => other?,
        };
        if find_eigenvalues(&p, robin(alpha), &bx, 400)?.len() != count {
            mismatches += 1;
        }
        boxes += 1;
    }
    let pass =
        det < 1e-12 && unitarity < 1e-10 && pairing < 1e-8 && reversal < 1e-8 && mismatches == 0;
    Ok((
        pass,
        format!(
            "det defect {det:.1e}, unitarity {unitarity:.1e}, PT pairing {pairing:.1e}, \
             alpha reversal {reversal:.1e}, winding mismatches {mismatches}/20"
        ),
    ))
}

fn ep_certificate() -> Check {
    let family = StepStrengthFamily::new(fig2_spec(-90.0), 0)?;
    let searches = [
        ((-84.0, -87.0), 192.5, (170.0, 215.0)),
        ((-110.0, -113.0), 440.0, (420.0, 460.0)),
        ((-169.0, -172.0), 193.0, (175.0, 215.0)),
    ];
    let mut pass = true;
    let mut notes = Vec::new();
    for (bracket, mu_guess, window) in searches {
        let search = EpSearch {
            bracket,
            mu_guess,
            window,
        };
        let ep = locate_exceptional_point(&family, AlphaMode::Dispersion, &search)?;
        let sep = |d: f64| -> Result<f64, Error> {
            let (r1, r2) = unfolding_pair(&family, &ep, d)?;
            Ok((r1 - r2).norm())
        };
        let exponent = (sep(1e-2)? / sep(1e-4)?).log10() / 2.0;
        let ok = ep.residual_f < 1e-10 && ep.residual_df < 1e-8 && (exponent - 0.5).abs() < 0.05;
        pass &= ok;
        notes.push(format!(
            "beta1 {:.4} mu {:.3}: |F| {:.1e} |dF| {:.1e} order {exponent:.3}",
            ep.theta, ep.mu.re, ep.residual_f, ep.residual_df
        ));
        debug_assert!(family.at(ep.theta).is_ok());
    }
    Ok((pass, notes.join("; ")))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        (
            1,
            "square-well oracle",
            square_well_oracle,
            Duration::from_secs(1),
        ),
        (
            2,
            "PTE scattering consistency",
            pte_scattering_consistency,
            Duration::from_secs(60),
        ),
        (
            3,
            "PTE loss track",
            fig3_reproduction,
            Duration::from_secs(30),
        ),
        (
            4,
            "transmission peaks",
            fig4_reproduction,
            Duration::from_secs(5),
        ),
        (
            5,
            "inverse round trip",
            inverse_round_trip,
            Duration::from_secs(60),
        ),
        (
            6,
            "kappa slope formula",
            kappa_slope_formula,
            Duration::from_secs(60),
        ),
        (7, "property suite", property_suite, Duration::from_secs(60)),
        (
            8,
            "exceptional-point certificate",
            ep_certificate,
            Duration::from_secs(60),
        ),
    ];
    let started = Instant::now();
    let mut unexpected = Vec::new();
    for (id, name, check, budget) in criteria {
        let t = Instant::now();
        let result = check();
        let elapsed = t.elapsed();
        let (pass, detail) = match result {
            Ok((pass, detail)) => (pass && elapsed <= budget, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let known = KNOWN_FAILURES.contains(&id);
        let tag = match (pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!(
            "criterion {id} [{name}]: {tag} in {:.3}s (budget {}s) - {detail}",
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
        if !pass && !known {
            unexpected.push(id);
        }
    }
    println!("total {:.2}s", started.elapsed().as_secs_f64());
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}

//! Recovering a real eigenvalue branch from PTE measurements.
//!
//! Shifting the potential by a constant `v0` moves every eigenvalue curve up by
//! `v0`, so the selected PTE `kappa(v0)` satisfies `mu(alpha) + v0 = alpha^2` with
//! `alpha^2 = kappa(v0)`. Inverting gives `mu(alpha) = alpha^2 - kappa^{-1}(alpha^2)`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;
use crate::potential::PotentialSpec;
use crate::pte::{
    dispersion_secular, find_ptes, PteOutcome, DEFAULT_GATE_RATE, DEFAULT_SCAN_STEP,
    REFLECTION_TOLERANCE,
};
use crate::spectrum::{
    eigenvalue_slope, partner_distance, refine_root, BranchSample, BranchSource, EigenBranch,
    COLLISION_THRESHOLD,
};
use crate::transfer::scattering_amplitudes;

pub const DEFAULT_DIFFERENCE_STEP: f64 = 1e-3;
pub const LOOSE_GATE_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaSample {
    pub v0: f64,
    pub kappa: f64,
    pub residual_reflection: f64,
}

/// Why a measurement curve ends before the last requested `v0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TruncationReason {
    /// No PTE close enough to continue the selected one: it merged with a partner.
    Lost,
    /// The shifted potential is reflectionless at every energy.
    AllPass,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Truncation {
    /// Midpoint between the last sample and the first failing `v0`.
    pub v0: f64,
    /// Last selected PTE energy before the loss.
    pub kappa: f64,
    pub reason: TruncationReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementCurve {
    pub label: Option<usize>,
    pub samples: Vec<KappaSample>,
    /// Whether `kappa` is strictly monotone over the samples.
    pub monotone: bool,
    /// Smallest secant slope `d kappa / d v0` (signed).
    pub min_slope: f64,
    pub truncation: Option<Truncation>,
}

impl MeasurementCurve {
    fn certify(&mut self) {
        let slopes: Vec<f64> = self
            .samples
            .windows(2)
            .map(|w| (w[1].kappa - w[0].kappa) / (w[1].v0 - w[0].v0))
            .collect();
        self.min_slope = slopes.iter().copied().fold(f64::INFINITY, f64::min);
        let up = slopes.iter().all(|&s| s > 0.0);
        let down = slopes.iter().all(|&s| s < 0.0);
        self.monotone = !slopes.is_empty() && (up || down);
    }
}

/// Which PTE to follow across the `v0` grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaSelector {
    /// Energy window that must contain the PTE at the first grid point; the one
    /// nearest its centre is chosen.
    pub seed_window: (f64, f64),
    /// Upper end of the `k` scan at every grid point.
    pub k_max: f64,
    pub scan_step: f64,
    /// Matching gate in energy per unit `v0`.
    pub gate_rate: f64,
}

impl KappaSelector {
    pub fn new(seed_window: (f64, f64), k_max: f64) -> Self {
        Self {
            seed_window,
            k_max,
            scan_step: DEFAULT_SCAN_STEP,
            gate_rate: DEFAULT_GATE_RATE,
        }
    }
}

/// Follows one PTE of `p + v0` across `v0_grid`.
pub fn simulate_kappa(
    p: &PotentialSpec,
    selector: &KappaSelector,
    v0_grid: &[f64],
) -> Result<MeasurementCurve> {
    if v0_grid.is_empty() || v0_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(
            "v0 grid must be nonempty and strictly increasing".into(),
        ));
    }
    let (lo, hi) = selector.seed_window;
    if !(hi > lo) {
        return Err(Error::InvalidArgument(format!(
            "empty seed window [{lo}, {hi}]"
        )));
    }
    let k_range = (0.0, selector.k_max);
    let outcomes: Vec<PteOutcome> = v0_grid
        .par_iter()
        .map(|&v0| find_ptes(&p.add_constant(v0), k_range, selector.scan_step))
        .collect::<Result<_>>()?;

    let mut curve = MeasurementCurve {
        label: None,
        samples: Vec::with_capacity(v0_grid.len()),
        monotone: false,
        min_slope: f64::NAN,
        truncation: None,
    };
    let centre = 0.5 * (lo + hi);
    let seed = outcomes[0]
        .records()
        .iter()
        .filter(|r| r.mu_star >= lo && r.mu_star <= hi)
        .min_by(|a, b| {
            (a.mu_star - centre)
                .abs()
                .partial_cmp(&(b.mu_star - centre).abs())
                .unwrap()
        });
    let Some(seed) = seed else {
        if outcomes[0].is_all_pass() {
            return Err(Error::Precondition(format!(
                "potential shifted by {} is reflectionless; no discrete PTE to follow",
                v0_grid[0]
            )));
        }
        return Err(Error::SeedNotFound { lo, hi });
    };
    curve.samples.push(KappaSample {
        v0: v0_grid[0],
        kappa: seed.mu_star,
        residual_reflection: seed.residual_reflection,
    });

    for (i, outcome) in outcomes.iter().enumerate().skip(1) {
        let prev = *curve.samples.last().expect("seeded");
        let dv = v0_grid[i] - prev.v0;
        let gate = LOOSE_GATE_FACTOR * selector.gate_rate * dv;
        let reason = match outcome {
            PteOutcome::AllPass => Some(TruncationReason::AllPass),
            PteOutcome::Discrete(records) => {
                let best = records
                    .iter()
                    .map(|r| ((r.mu_star - prev.kappa).abs(), r))
                    .filter(|(d, _)| *d <= gate)
                    .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
                match best {
                    Some((_, r)) => {
                        curve.samples.push(KappaSample {
                            v0: v0_grid[i],
                            kappa: r.mu_star,
                            residual_reflection: r.residual_reflection,
                        });
                        None
                    }
                    None => Some(TruncationReason::Lost),
                }
            }
        };
        if let Some(reason) = reason {
            curve.truncation = Some(Truncation {
                v0: 0.5 * (prev.v0 + v0_grid[i]),
                kappa: prev.kappa,
                reason,
            });
            break;
        }
    }
    curve.certify();
    Ok(curve)
}

/// A requested `alpha` that could not be reconstructed.
#[derive(Debug, Clone, PartialEq)]
pub struct SkippedSample {
    pub alpha: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub branch: EigenBranch,
    pub skipped: Vec<SkippedSample>,
}

/// `mu(alpha) = alpha^2 - kappa^{-1}(alpha^2)` on `alpha_grid`, from a monotone
/// interpolant of the measured curve.
pub fn reconstruct_branch(curve: &MeasurementCurve, alpha_grid: &[f64]) -> Result<Reconstruction> {
    if !curve.monotone {
        return Err(Error::Precondition(format!(
            "kappa is not strictly monotone (min slope {}), so it cannot be inverted",
            curve.min_slope
        )));
    }
    if alpha_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(
            "alpha grid must be strictly increasing".into(),
        ));
    }
    let interp = MonotoneCubic::new(
        curve.samples.iter().map(|s| s.v0).collect(),
        curve.samples.iter().map(|s| s.kappa).collect(),
    )?;
    let mut samples = Vec::with_capacity(alpha_grid.len());
    let mut skipped = Vec::new();
    for &alpha in alpha_grid {
        let target = alpha * alpha;
        match interp.solve(target) {
            Some(v0) => samples.push(BranchSample {
                alpha,
                mu: Complex64::new(target - v0, 0.0),
                residual: f64::NAN,
                step: 0.0,
            }),
            None => skipped.push(SkippedSample {
                alpha,
                reason: format!("alpha^2 = {target} outside the measured kappa range"),
            }),
        }
    }
    let mut prev_alpha = None;
    for s in &mut samples {
        s.step = prev_alpha.map_or(0.0, |a: f64| s.alpha - a);
        prev_alpha = Some(s.alpha);
    }
    Ok(Reconstruction {
        branch: EigenBranch {
            label: curve.label,
            samples,
            source: BranchSource::Reconstructed,
            collisions: Vec::new(),
        },
        skipped,
    })
}

/// Moves reconstructed samples lying within the collision threshold of another
/// eigenvalue of `p` into the skipped list; `mu(alpha)` need not be analytic there.
pub fn exclude_crossings(p: &PotentialSpec, rec: Reconstruction) -> Reconstruction {
    let Reconstruction {
        mut branch,
        mut skipped,
    } = rec;
    let (kept, near): (Vec<_>, Vec<_>) = branch
        .samples
        .into_iter()
        .partition(|s| partner_distance(p, s.alpha, s.mu) >= COLLISION_THRESHOLD);
    skipped.extend(near.into_iter().map(|s| SkippedSample {
        alpha: s.alpha,
        reason: format!(
            "another eigenvalue lies within {COLLISION_THRESHOLD} of mu = {}",
            s.mu.re
        ),
    }));
    skipped.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
    branch.samples = kept;
    Reconstruction { branch, skipped }
}

/// The two routes to `kappa'(v0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaDerivative {
    pub alpha: f64,
    /// Central difference of the measured PTE energy.
    pub lhs: f64,
    /// `2 alpha / (2 alpha - mu'(alpha))`
    pub rhs: f64,
    pub gap: f64,
}

/// Compares a central difference of `kappa` at `v0` with the slope predicted
/// by the branch, at the `alpha` where the branch meets `alpha^2 - v0`.
pub fn kappa_derivative_check(
    p: &PotentialSpec,
    branch: &EigenBranch,
    v0: f64,
    step: f64,
) -> Result<KappaDerivative> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "difference step must be positive, got {step}"
        )));
    }
    let (alpha, mu) = branch_intersection(p, branch, v0)?;
    let slope = eigenvalue_slope(p, alpha, mu).re;
    let denom = 2.0 * alpha - slope;
    if denom.abs() <= 1e-9 * (1.0 + 2.0 * alpha.abs()) {
        return Err(Error::Tangency { alpha, gap: denom });
    }
    let rhs = 2.0 * alpha / denom;
    let plus = pte_near(&p.add_constant(v0 + step), alpha)?;
    let minus = pte_near(&p.add_constant(v0 - step), alpha)?;
    let lhs = (plus * plus - minus * minus) / (2.0 * step);
    Ok(KappaDerivative {
        alpha,
        lhs,
        rhs,
        gap: (lhs - rhs).abs(),
    })
}

/// Where `Re mu(alpha) + v0 = alpha^2` on the branch, refined on the live
/// secular function.
fn branch_intersection(
    p: &PotentialSpec,
    branch: &EigenBranch,
    v0: f64,
) -> Result<(f64, Complex64)> {
    let real = |s: &BranchSample| s.mu.im.abs() <= 1e-8 * (1.0 + s.mu.norm());
    let g = |s: &BranchSample| s.mu.re + v0 - s.alpha * s.alpha;
    for s in branch.samples.iter().filter(|s| real(s)) {
        if g(s).abs() <= 1e-12 * (1.0 + s.alpha * s.alpha) {
            return Ok((s.alpha, s.mu));
        }
    }
    for w in branch.samples.windows(2) {
        if !(real(&w[0]) && real(&w[1])) || g(&w[0]) * g(&w[1]) >= 0.0 {
            continue;
        }
        let eval = |alpha: f64, guess: Complex64| -> Result<(f64, Complex64, f64)> {
            let (mu, v) = refine_root(p, alpha, guess, &[])?;
            Ok((mu.re + v0 - alpha * alpha, mu, v.slope().re - 2.0 * alpha))
        };
        let (mut lo, mut hi) = if g(&w[0]) < 0.0 {
            (w[0].alpha, w[1].alpha)
        } else {
            (w[1].alpha, w[0].alpha)
        };
        let mut alpha = 0.5 * (w[0].alpha + w[1].alpha);
        let mut mu = branch.interpolate(alpha).unwrap_or(w[0].mu);
        for _ in 0..200 {
            let (r, m, dr) = eval(alpha, mu)?;
            mu = m;
            if r == 0.0 {
                break;
            }
            if r < 0.0 {
                lo = alpha;
            } else {
                hi = alpha;
            }
            let (l, h) = (lo.min(hi), lo.max(hi));
            let newton = alpha - r / dr;
            let next = if newton.is_finite() && newton > l && newton < h {
                newton
            } else {
                0.5 * (l + h)
            };
            let done = (next - alpha).abs() <= 2.0 * f64::EPSILON * alpha.abs();
            alpha = next;
            if done {
                break;
            }
        }
        let (mu, _) = refine_root(p, alpha, mu, &[])?;
        return Ok((alpha, mu));
    }
    Err(Error::NoIntersection(format!(
        "branch does not meet the parabola alpha^2 - {v0} over its sampled range"
    )))
}

/// The PTE wavenumber of `p` closest to `k0`, by Newton on `h(k) = F(k^2; k)`.
fn pte_near(p: &PotentialSpec, k0: f64) -> Result<f64> {
    let mut k = k0;
    for _ in 0..50 {
        let (h, dh) = dispersion_secular(p, k);
        let step = (dh.conj() * h).re / dh.norm_sqr();
        if !step.is_finite() {
            break;
        }
        k -= step;
        if step.abs() <= 4.0 * f64::EPSILON * k.abs() {
            break;
        }
    }
    let r = scattering_amplitudes(p, k)?.r.norm();
    if !(r < REFLECTION_TOLERANCE) {
        return Err(Error::NoConvergence(format!(
            "no PTE found near k = {k0} (|R| = {r:e} at k = {k})"
        )));
    }
    Ok(k)
}

//! Perfect-transmission energies.
//!
//! A PTE is a real `k > 0` where the reflection amplitude vanishes. On the
//! spectral side this is a zero of `h(k) = F(k^2; alpha = k)`: an eigenvalue
//! curve `mu(alpha)` meeting the dispersion parabola `mu = alpha^2`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::family::PotentialFamily;
use crate::potential::PotentialSpec;
use crate::spectrum::{refine_root, secular_value, EigenBranch};
use crate::transfer::scattering_amplitudes;

/// A PTE is accepted only if `|R(k*)|` is below this.
pub const REFLECTION_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_SCAN_STEP: f64 = 0.01;
/// `h` below this (relative to the size of its terms) everywhere on the scan
/// means every energy transmits.
pub const ALL_PASS_TOLERANCE: f64 = 1e-10;
/// Default matching gate: energy units per unit of the swept parameter.
pub const DEFAULT_GATE_RATE: f64 = 5.0;
pub const LOOSE_GATE_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PteRecord {
    pub k_star: f64,
    pub mu_star: f64,
    /// Eigenvalue branch, or track id when produced by [`track_ptes`].
    pub branch: Option<usize>,
    pub multiplicity: u8,
    /// `|F(k*^2; k*)|`
    pub residual_secular: f64,
    /// `|R(k*)|`
    pub residual_reflection: f64,
}

impl PteRecord {
    fn new(p: &PotentialSpec, k: f64, multiplicity: u8) -> Result<Self> {
        let f = secular_value(p, k, Complex64::new(k * k, 0.0))
            .value()
            .norm();
        let r = scattering_amplitudes(p, k)?.r.norm();
        Ok(Self {
            k_star: k,
            mu_star: k * k,
            branch: None,
            multiplicity,
            residual_secular: f,
            residual_reflection: r,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PteOutcome {
    /// Isolated PTEs sorted by energy.
    Discrete(Vec<PteRecord>),
    /// Reflectionless at every scanned energy; no discrete PTE set exists.
    AllPass,
}

impl PteOutcome {
    pub fn records(&self) -> &[PteRecord] {
        match self {
            PteOutcome::Discrete(r) => r,
            PteOutcome::AllPass => &[],
        }
    }

    pub fn is_all_pass(&self) -> bool {
        matches!(self, PteOutcome::AllPass)
    }
}

#[derive(Debug, Clone, Copy)]
struct HSample {
    k: f64,
    /// Scaled `h`; the positive scale factor never changes its sign.
    h: Complex64,
    dh: Complex64,
    rel: f64,
}

fn h_sample(p: &PotentialSpec, k: f64) -> HSample {
    let v = secular_value(p, k, Complex64::new(k * k, 0.0));
    HSample {
        k,
        h: v.f,
        dh: 2.0 * k * v.df_dmu + v.df_dalpha,
        rel: v.relative_residual(),
    }
}

/// `h(k) = F(k^2; k)` and `h'(k)`, unscaled.
pub fn dispersion_secular(p: &PotentialSpec, k: f64) -> (Complex64, Complex64) {
    let v = secular_value(p, k, Complex64::new(k * k, 0.0));
    let s = v.log_scale.exp();
    (v.f * s, (2.0 * k * v.df_dmu + v.df_dalpha) * s)
}

fn check_range(k_range: (f64, f64), scan_step: f64) -> Result<()> {
    let (lo, hi) = k_range;
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
        return Err(Error::InvalidArgument(format!(
            "k range must be a nonempty subinterval of [0, inf), got [{lo}, {hi}]"
        )));
    }
    if !(scan_step.is_finite() && scan_step > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "scan step must be positive, got {scan_step}"
        )));
    }
    Ok(())
}

/// All PTEs with `k` in `k_range`, located on a scan of spacing `scan_step` in `k`.
pub fn find_ptes(p: &PotentialSpec, k_range: (f64, f64), scan_step: f64) -> Result<PteOutcome> {
    check_range(k_range, scan_step)?;
    let (lo, hi) = k_range;
    let n = ((hi - lo) / scan_step).ceil().max(1.0) as usize;
    let start = if lo > 0.0 {
        lo
    } else {
        (1e-6 * scan_step).min(hi)
    };
    let grid: Vec<f64> = (0..=n)
        .map(|j| {
            if j == n {
                hi
            } else {
                start + (hi - start) * j as f64 / n as f64
            }
        })
        .collect();
    let samples: Vec<HSample> = grid.par_iter().map(|&k| h_sample(p, k)).collect();

    if samples.iter().all(|s| s.rel <= ALL_PASS_TOLERANCE) {
        return Ok(PteOutcome::AllPass);
    }

    let even = p.is_even();
    let mut roots: Vec<(f64, u8)> = Vec::new();
    let sign = |s: &HSample| s.h.re.signum();

    if even {
        for w in samples.windows(2) {
            if w[0].h.re == 0.0 {
                roots.push((w[0].k, 1));
            } else if sign(&w[0]) * sign(&w[1]) < 0.0 {
                roots.push((bracketed_root(p, w[0], w[1]), 1));
            }
        }
        if let Some(last) = samples.last() {
            if last.h.re == 0.0 {
                roots.push((last.k, 1));
            }
        }
    }

    // Local minima of |h| with no sign change nearby hide either a pair of close
    // roots or a tangency.
    for j in 1..samples.len().saturating_sub(1) {
        let (a, b, c) = (samples[j - 1], samples[j], samples[j + 1]);
        let is_min = b.rel <= a.rel && b.rel <= c.rel;
        if !is_min || (even && (sign(&a) != sign(&b) || sign(&b) != sign(&c))) {
            continue;
        }
        let Some(m) = minimize_abs(p, a, c) else {
            continue;
        };
        if even && sign(&m) * sign(&b) < 0.0 {
            roots.push((bracketed_root(p, a, m), 1));
            roots.push((bracketed_root(p, m, c), 1));
            continue;
        }
        if m.rel <= ALL_PASS_TOLERANCE {
            if even {
                roots.push((m.k, 2));
            } else {
                roots.push((polish_complex(p, m.k), 1));
            }
        }
    }

    roots.retain(|(k, _)| *k > 0.0 && *k >= lo && *k <= hi);
    roots.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    roots.dedup_by(|x, y| (x.0 - y.0).abs() <= 1e-10 * (1.0 + y.0));

    let mut records = Vec::with_capacity(roots.len());
    for (k, mult) in roots {
        let rec = PteRecord::new(p, k, mult)?;
        if rec.residual_reflection >= REFLECTION_TOLERANCE {
            if mult > 1 {
                // Near-tangency that does not reach the axis.
                continue;
            }
            return Err(Error::InternalInconsistency(format!(
                "claimed PTE at k = {k} has |R| = {:e}",
                rec.residual_reflection
            )));
        }
        records.push(rec);
    }
    Ok(PteOutcome::Discrete(records))
}

/// Safeguarded Newton on `Re h` inside a sign-change bracket.
fn bracketed_root(p: &PotentialSpec, a: HSample, b: HSample) -> f64 {
    let (mut lo, mut hi) = if a.h.re < 0.0 { (a.k, b.k) } else { (b.k, a.k) };
    let mut x = 0.5 * (a.k + b.k);
    for _ in 0..200 {
        let s = h_sample(p, x);
        if s.h.re == 0.0 {
            return x;
        }
        if s.h.re < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - s.h.re / s.dh.re;
        let (l, h) = (lo.min(hi), lo.max(hi));
        let next = if newton.is_finite() && newton > l && newton < h {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 2.0 * f64::EPSILON * x.abs() || h - l <= 2.0 * f64::EPSILON * h {
            return next;
        }
        x = next;
    }
    x
}

/// Minimizer of `|h|` on `[a.k, c.k]` by bisection on `d|h|^2/dk`.
fn minimize_abs(p: &PotentialSpec, a: HSample, c: HSample) -> Option<HSample> {
    let slope = |s: &HSample| (s.h.conj() * s.dh).re;
    if !(slope(&a) < 0.0 && slope(&c) > 0.0) {
        return None;
    }
    let (mut lo, mut hi) = (a.k, c.k);
    let mut best = h_sample(p, 0.5 * (lo + hi));
    for _ in 0..100 {
        if slope(&best) < 0.0 {
            lo = best.k;
        } else {
            hi = best.k;
        }
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        best = h_sample(p, mid);
    }
    Some(best)
}

/// Gauss-Newton for a real zero of the complex-valued `h`.
fn polish_complex(p: &PotentialSpec, mut k: f64) -> f64 {
    for _ in 0..20 {
        let s = h_sample(p, k);
        let step = (s.dh.conj() * s.h).re / s.dh.norm_sqr();
        if !step.is_finite() {
            break;
        }
        k -= step;
        if step.abs() <= 4.0 * f64::EPSILON * k.abs() {
            break;
        }
    }
    k
}

/// PTEs as intersections of sampled eigenvalue branches with the dispersion parabola.
///
/// Sign changes of `g(alpha) = Re mu(alpha) - alpha^2` between adjacent real samples
/// are refined on the live secular function.
pub fn ptes_from_branches(p: &PotentialSpec, branches: &[EigenBranch]) -> Result<PteOutcome> {
    const IMAG_TOLERANCE: f64 = 1e-8;
    let mut coincident = true;
    let mut any = false;
    let mut records: Vec<PteRecord> = Vec::new();

    for branch in branches {
        let real: Vec<(f64, f64)> = branch
            .samples
            .iter()
            .filter(|s| s.mu.im.abs() <= IMAG_TOLERANCE * (1.0 + s.mu.norm()))
            .map(|s| (s.alpha, s.mu.re - s.alpha * s.alpha))
            .collect();
        for &(alpha, g) in &real {
            any = true;
            if g.abs() > 1e-9 * (1.0 + alpha * alpha) {
                coincident = false;
            }
        }
        for w in branch.samples.windows(2) {
            let real_pair = w
                .iter()
                .all(|s| s.mu.im.abs() <= IMAG_TOLERANCE * (1.0 + s.mu.norm()));
            if !real_pair {
                continue;
            }
            let g0 = w[0].mu.re - w[0].alpha * w[0].alpha;
            let g1 = w[1].mu.re - w[1].alpha * w[1].alpha;
            if g0 == 0.0 && w[0].alpha > 0.0 {
                records.push(branch_record(p, branch, w[0].alpha)?);
                continue;
            }
            if g0 * g1 >= 0.0 {
                continue;
            }
            let alpha = intersect(p, branch, (w[0].alpha, w[0].mu), (w[1].alpha, w[1].mu))?;
            if alpha > 0.0 {
                records.push(branch_record(p, branch, alpha)?);
            }
        }
    }
    if any && coincident {
        return Ok(PteOutcome::AllPass);
    }
    records.sort_by(|x, y| x.k_star.partial_cmp(&y.k_star).unwrap());
    records.dedup_by(|x, y| (x.k_star - y.k_star).abs() <= 1e-10 * (1.0 + y.k_star));
    Ok(PteOutcome::Discrete(records))
}

fn branch_record(p: &PotentialSpec, branch: &EigenBranch, k: f64) -> Result<PteRecord> {
    let mut rec = PteRecord::new(p, k, 1)?;
    rec.branch = branch.label;
    Ok(rec)
}

/// Root of `g(alpha) = Re mu(alpha) - alpha^2` on the branch between two samples.
fn intersect(
    p: &PotentialSpec,
    branch: &EigenBranch,
    s0: (f64, Complex64),
    s1: (f64, Complex64),
) -> Result<f64> {
    let eval = |alpha: f64, guess: Complex64| -> Result<(f64, Complex64, f64)> {
        let (mu, v) = refine_root(p, alpha, guess, &[])?;
        let dg = v.slope().re - 2.0 * alpha;
        Ok((mu.re - alpha * alpha, mu, dg))
    };
    let interp = |alpha: f64| {
        let t = (alpha - s0.0) / (s1.0 - s0.0);
        s0.1 + (s1.1 - s0.1) * t
    };
    let g0 = s0.1.re - s0.0 * s0.0;

    // More than one sign change inside the step means the branch is undersampled.
    let quarter: Result<Vec<f64>> = (1..4)
        .map(|j| {
            let a = s0.0 + (s1.0 - s0.0) * j as f64 / 4.0;
            eval(a, branch.interpolate(a).unwrap_or_else(|| interp(a))).map(|x| x.0)
        })
        .collect();
    let g1 = s1.1.re - s1.0 * s1.0;
    let mut signs = vec![g0];
    signs.extend(quarter?);
    signs.push(g1);
    let changes = signs.windows(2).filter(|w| w[0] * w[1] < 0.0).count();
    if changes > 1 {
        return Err(Error::Resolution(format!(
            "branch {:?} crosses the dispersion parabola {changes} times in [{}, {}]",
            branch.label, s0.0, s1.0
        )));
    }

    let (mut lo, mut hi) = if g0 < 0.0 { (s0.0, s1.0) } else { (s1.0, s0.0) };
    let mut alpha = 0.5 * (s0.0 + s1.0);
    let mut mu = interp(alpha);
    for _ in 0..200 {
        let (g, m, dg) = eval(alpha, mu)?;
        mu = m;
        if g == 0.0 {
            break;
        }
        if g < 0.0 {
            lo = alpha;
        } else {
            hi = alpha;
        }
        let newton = alpha - g / dg;
        let (l, h) = (lo.min(hi), lo.max(hi));
        let next = if newton.is_finite() && newton > l && newton < h {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let done = (next - alpha).abs() <= 2.0 * f64::EPSILON * alpha.abs()
            || h - l <= 2.0 * f64::EPSILON * h;
        alpha = next;
        if done {
            break;
        }
    }
    Ok(alpha)
}

/// Kind of change in the PTE set between adjacent parameter values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// Two PTEs coalesced and left the real axis.
    Merge,
    /// A single PTE vanished away from the scan boundary.
    Disappear,
    /// PTEs were born inside the scan window.
    Appear,
    /// A PTE left through an end of the `k` range.
    BoundaryExit,
    /// A PTE entered through an end of the `k` range.
    BoundaryEntry,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Merge => "merge",
            EventKind::Disappear => "disappear",
            EventKind::Appear => "appear",
            EventKind::BoundaryExit => "boundary_exit",
            EventKind::BoundaryEntry => "boundary_entry",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PteEvent {
    /// Midpoint of the two parameter values bracketing the change.
    pub theta: f64,
    pub mu_star: f64,
    pub kind: EventKind,
    /// Number of PTEs involved.
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackSample {
    pub theta: f64,
    /// Sorted by energy; `branch` holds the track id.
    pub records: Vec<PteRecord>,
    pub all_pass: bool,
    /// Matching to the previous sample stayed ambiguous after refinement.
    pub ambiguous: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PteTrack {
    pub parameter: String,
    pub samples: Vec<TrackSample>,
    pub events: Vec<PteEvent>,
}

#[derive(Debug, Clone, Copy)]
pub struct TrackOptions {
    pub scan_step: f64,
    /// Maximum `|delta mu*|` per unit parameter change for two records to match.
    pub gate_rate: f64,
    /// Bisection levels spent resolving an ambiguous match.
    pub max_refinements: u32,
}

impl Default for TrackOptions {
    fn default() -> Self {
        Self {
            scan_step: DEFAULT_SCAN_STEP,
            gate_rate: DEFAULT_GATE_RATE,
            max_refinements: 6,
        }
    }
}

/// PTEs along a family, matched between neighbouring parameter values.
pub fn track_ptes<F: PotentialFamily + ?Sized>(
    family: &F,
    theta_grid: &[f64],
    k_range: (f64, f64),
    opts: &TrackOptions,
) -> Result<PteTrack> {
    check_range(k_range, opts.scan_step)?;
    let increasing = theta_grid.windows(2).all(|w| w[1] > w[0]);
    let decreasing = theta_grid.windows(2).all(|w| w[1] < w[0]);
    if !(increasing || decreasing) || theta_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::InvalidArgument(
            "parameter grid must be strictly monotone".into(),
        ));
    }
    let scan = |theta: f64| -> Result<(f64, PteOutcome)> {
        let p = family.at(theta)?;
        Ok((theta, find_ptes(&p, k_range, opts.scan_step)?))
    };
    let coarse: Vec<(f64, PteOutcome)> = theta_grid
        .par_iter()
        .map(|&t| scan(t))
        .collect::<Result<_>>()?;

    let mut tracker = Tracker {
        k_range,
        opts,
        next_id: 0,
        samples: Vec::new(),
        events: Vec::new(),
    };
    let mut iter = coarse.into_iter();
    if let Some((theta, outcome)) = iter.next() {
        tracker.start(theta, outcome);
    }
    for (theta, outcome) in iter {
        tracker.link(&scan, theta, outcome, 0)?;
    }
    Ok(PteTrack {
        parameter: family.parameter_name().to_string(),
        samples: tracker.samples,
        events: tracker.events,
    })
}

struct Tracker<'a> {
    k_range: (f64, f64),
    opts: &'a TrackOptions,
    next_id: usize,
    samples: Vec<TrackSample>,
    events: Vec<PteEvent>,
}

struct Matching {
    pairs: Vec<(usize, usize)>,
    ambiguous: bool,
}

fn match_records(prev: &[PteRecord], next: &[PteRecord], gate: f64) -> Matching {
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    let mut per_prev = vec![0usize; prev.len()];
    let mut per_next = vec![0usize; next.len()];
    for (i, a) in prev.iter().enumerate() {
        for (j, b) in next.iter().enumerate() {
            let d = (a.mu_star - b.mu_star).abs();
            if d <= gate {
                candidates.push((d, i, j));
                per_prev[i] += 1;
                per_next[j] += 1;
            }
        }
    }
    let ambiguous = per_prev.iter().chain(&per_next).any(|&c| c > 1);
    candidates.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    let mut used_prev = vec![false; prev.len()];
    let mut used_next = vec![false; next.len()];
    let mut pairs = Vec::new();
    for (_, i, j) in candidates {
        if !used_prev[i] && !used_next[j] {
            used_prev[i] = true;
            used_next[j] = true;
            pairs.push((i, j));
        }
    }
    // Records left over on both sides are usually one pair moving fast near a
    // tangency; link them under a looser gate.
    let mut loose: Vec<(f64, usize, usize)> = Vec::new();
    for (i, a) in prev.iter().enumerate().filter(|(i, _)| !used_prev[*i]) {
        for (j, b) in next.iter().enumerate().filter(|(j, _)| !used_next[*j]) {
            let d = (a.mu_star - b.mu_star).abs();
            if d <= LOOSE_GATE_FACTOR * gate {
                loose.push((d, i, j));
            }
        }
    }
    loose.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    for (_, i, j) in loose {
        if !used_prev[i] && !used_next[j] {
            used_prev[i] = true;
            used_next[j] = true;
            pairs.push((i, j));
        }
    }
    Matching { pairs, ambiguous }
}

impl Tracker<'_> {
    fn start(&mut self, theta: f64, outcome: PteOutcome) {
        let all_pass = outcome.is_all_pass();
        let mut records = outcome.records().to_vec();
        for r in &mut records {
            r.branch = Some(self.fresh());
        }
        self.samples.push(TrackSample {
            theta,
            records,
            all_pass,
            ambiguous: false,
        });
    }

    fn fresh(&mut self) -> usize {
        self.next_id += 1;
        self.next_id - 1
    }

    fn link<S>(&mut self, scan: &S, theta: f64, outcome: PteOutcome, depth: u32) -> Result<()>
    where
        S: Fn(f64) -> Result<(f64, PteOutcome)>,
    {
        let prev = self.samples.last().expect("tracker started").clone();
        let gate = self.opts.gate_rate * (theta - prev.theta).abs();
        let m = match_records(&prev.records, outcome.records(), gate);
        if m.ambiguous && depth < self.opts.max_refinements {
            let (mid, mid_outcome) = scan(0.5 * (prev.theta + theta))?;
            self.link(scan, mid, mid_outcome, depth + 1)?;
            return self.link(scan, theta, outcome, depth + 1);
        }

        let all_pass = outcome.is_all_pass();
        let mut records = outcome.records().to_vec();
        let mut matched_prev = vec![false; prev.records.len()];
        let mut matched_next = vec![false; records.len()];
        for &(i, j) in &m.pairs {
            records[j].branch = prev.records[i].branch;
            matched_prev[i] = true;
            matched_next[j] = true;
        }
        for (j, r) in records.iter_mut().enumerate() {
            if !matched_next[j] {
                r.branch = Some(self.fresh());
            }
        }
        let mid = 0.5 * (prev.theta + theta);
        if !prev.all_pass && !all_pass {
            self.classify(&prev.records, &matched_prev, mid, gate, true);
            self.classify(&records, &matched_next, mid, gate, false);
        }
        self.samples.push(TrackSample {
            theta,
            records,
            all_pass,
            ambiguous: m.ambiguous,
        });
        Ok(())
    }

    /// Turns unmatched records into events; adjacent unmatched pairs count as one
    /// merge (`lost`) or appearance.
    fn classify(
        &mut self,
        records: &[PteRecord],
        matched: &[bool],
        theta: f64,
        gate: f64,
        lost: bool,
    ) {
        let (k_lo, k_hi) = self.k_range;
        let margin_k = 2.0 * self.opts.scan_step;
        let near_edge = |r: &PteRecord| {
            (r.k_star - k_lo).abs() <= margin_k
                || (k_hi - r.k_star).abs() <= margin_k
                || (r.mu_star - k_lo * k_lo).abs() <= gate
                || (k_hi * k_hi - r.mu_star).abs() <= gate
        };
        let mut i = 0;
        while i < records.len() {
            if matched[i] {
                i += 1;
                continue;
            }
            let r = &records[i];
            let pair = i + 1 < records.len()
                && !matched[i + 1]
                && !near_edge(r)
                && !near_edge(&records[i + 1]);
            if pair {
                let mu = 0.5 * (r.mu_star + records[i + 1].mu_star);
                self.events.push(PteEvent {
                    theta,
                    mu_star: mu,
                    kind: if lost {
                        EventKind::Merge
                    } else {
                        EventKind::Appear
                    },
                    count: 2,
                });
                i += 2;
                continue;
            }
            let kind = match (near_edge(r), lost) {
                (true, true) => EventKind::BoundaryExit,
                (true, false) => EventKind::BoundaryEntry,
                (false, true) => EventKind::Disappear,
                (false, false) => EventKind::Appear,
            };
            self.events.push(PteEvent {
                theta,
                mu_star: r.mu_star,
                kind,
                count: 1,
            });
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::make_square_well;
    use std::f64::consts::PI;

    #[test]
    fn square_well_ptes() {
        let p = make_square_well(2.0, 1.0).unwrap();
        let out = find_ptes(&p, (0.0, 4.0), 0.01).unwrap();
        let ks: Vec<f64> = out.records().iter().map(|r| r.k_star).collect();
        let expected: Vec<f64> = (2..=5)
            .map(|n| ((n as f64 * PI / 4.0).powi(2) - 1.0).sqrt())
            .filter(|k| *k <= 4.0)
            .collect();
        assert_eq!(ks.len(), expected.len(), "{ks:?}");
        for (k, e) in ks.iter().zip(&expected) {
            assert!((k - e).abs() < 1e-10);
        }
        assert!((ks[0] - 1.211_363_322_984_619_5).abs() < 1e-10);
        for r in out.records() {
            assert_eq!(r.mu_star, r.k_star * r.k_star);
            assert!(r.residual_reflection < REFLECTION_TOLERANCE);
        }
    }

    #[test]
    fn free_potential_is_all_pass() {
        let p = PotentialSpec::free(1.0).unwrap();
        assert_eq!(
            find_ptes(&p, (0.1, 5.0), 0.05).unwrap(),
            PteOutcome::AllPass
        );
        let p = make_square_well(1.5, 2.0).unwrap().add_constant(2.0);
        assert!(find_ptes(&p, (0.1, 5.0), 0.05).unwrap().is_all_pass());
    }

    #[test]
    fn rejects_empty_range() {
        let p = make_square_well(2.0, 1.0).unwrap();
        assert!(find_ptes(&p, (3.0, 3.0), 0.01).is_err());
        assert!(find_ptes(&p, (1.0, 3.0), 0.0).is_err());
        assert!(find_ptes(&p, (-1.0, 3.0), 0.1).is_err());
    }

    #[test]
    fn matching_prefers_nearest() {
        let rec = |mu: f64| PteRecord {
            k_star: mu.sqrt(),
            mu_star: mu,
            branch: None,
            multiplicity: 1,
            residual_secular: 0.0,
            residual_reflection: 0.0,
        };
        let m = match_records(&[rec(10.0), rec(20.0)], &[rec(10.5), rec(30.0)], 0.8);
        assert_eq!(m.pairs, vec![(0, 0)]);
        assert!(!m.ambiguous);
        // Leftovers on both sides are linked under the loose gate.
        let m = match_records(&[rec(10.0), rec(20.0)], &[rec(10.5), rec(26.0)], 0.8);
        assert_eq!(m.pairs, vec![(0, 0), (1, 1)]);
        let m = match_records(&[rec(10.0)], &[rec(9.0), rec(11.5)], 2.0);
        assert!(m.ambiguous);
        assert_eq!(m.pairs, vec![(0, 0)]);
    }
}

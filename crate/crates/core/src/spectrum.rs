//! The Robin eigenvalue problem
//!
//! ```text
//! -psi'' + v psi = mu psi  on [-a, a],     psi'(+-a) = i alpha psi(+-a)
//! ```
//!
//! Eigenvalues are the zeros of the secular function `F(mu; alpha) = w2 - i alpha w1`,
//! where `(w1, w2)` is the left boundary state `(1, i alpha)` carried to `x = a`.
//! `F` is entire in `mu`.

use num_complex::Complex64;

use crate::contour::{contour_data, SearchBox, DEFAULT_PANELS_PER_EDGE};
use crate::error::{Error, Result};
use crate::potential::PotentialSpec;
use crate::transfer::total_transfer_jet;

/// Relative residual accepted for a refined root.
pub const ROOT_TOLERANCE: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 50;
/// Two tracked roots closer than this (energy units) are reported as a collision.
pub const COLLISION_THRESHOLD: f64 = 1e-4;
/// Default half-height of the default search box.
pub const DEFAULT_IM_EXTENT: f64 = 500.0;

const SPLIT_FRACTIONS: [f64; 5] = [0.5137, 0.4719, 0.5523, 0.4311, 0.5891];
pub const MAX_SUBDIVISION_DEPTH: usize = 80;

/// The real parameter `alpha` in the boundary condition `psi' = i alpha psi`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct RobinParameter(f64);

impl RobinParameter {
    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "Robin parameter must be finite, got {alpha}"
            )));
        }
        Ok(Self(alpha))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for RobinParameter {
    type Error = Error;

    fn try_from(alpha: f64) -> Result<Self> {
        Self::new(alpha)
    }
}

/// `F` and its partial derivatives, all multiplied by `exp(-log_scale)`.
#[derive(Debug, Clone, Copy)]
pub struct SecularValue {
    pub f: Complex64,
    pub df_dmu: Complex64,
    pub df_dalpha: Complex64,
    /// Magnitude of the terms whose cancellation produces `f`.
    pub magnitude: f64,
    pub log_scale: f64,
}

impl SecularValue {
    /// The true (unscaled) secular value.
    pub fn value(&self) -> Complex64 {
        self.f * self.log_scale.exp()
    }

    pub fn derivative_mu(&self) -> Complex64 {
        self.df_dmu * self.log_scale.exp()
    }

    pub fn derivative_alpha(&self) -> Complex64 {
        self.df_dalpha * self.log_scale.exp()
    }

    pub fn relative_residual(&self) -> f64 {
        self.f.norm() / self.magnitude.max(f64::MIN_POSITIVE)
    }

    /// Implicit-function slope `d mu / d alpha = -F_alpha / F_mu`.
    pub fn slope(&self) -> Complex64 {
        -self.df_dalpha / self.df_dmu
    }
}

pub fn secular_value(p: &PotentialSpec, alpha: f64, mu: Complex64) -> SecularValue {
    let jet = total_transfer_jet(p, mu);
    let m = jet.value.entries();
    let d = &jet.d_mu;
    let ia = Complex64::new(0.0, alpha);
    let w1 = m[0][0] + ia * m[0][1];
    let w2 = m[1][0] + ia * m[1][1];
    let f = w2 - ia * w1;
    let df_dmu = d[1][0] + ia * d[1][1] - ia * (d[0][0] + ia * d[0][1]);
    let df_dalpha = Complex64::i() * (m[1][1] - m[0][0]) + 2.0 * alpha * m[0][1];
    let b = &jet.bound;
    let q = (1.0 + (mu - p.min_value()).norm()).sqrt();
    let magnitude = b[1][0] + alpha * alpha * b[0][1] + (alpha.abs() + q) * (b[0][0] + b[1][1]);
    SecularValue {
        f,
        df_dmu,
        df_dalpha,
        magnitude,
        log_scale: jet.value.log_scale(),
    }
}

/// `F(mu; alpha)`; its zeros are exactly the Robin eigenvalues.
pub fn secular(p: &PotentialSpec, alpha: RobinParameter, mu: Complex64) -> Complex64 {
    secular_value(p, alpha.value(), mu).value()
}

/// `(F, dF/dmu)` with the analytically propagated derivative.
pub fn secular_with_derivative(
    p: &PotentialSpec,
    alpha: RobinParameter,
    mu: Complex64,
) -> (Complex64, Complex64) {
    let v = secular_value(p, alpha.value(), mu);
    (v.value(), v.derivative_mu())
}

/// `d mu / d alpha` along the eigenvalue curve through `(alpha, mu)`.
pub fn eigenvalue_slope(p: &PotentialSpec, alpha: f64, mu: Complex64) -> Complex64 {
    secular_value(p, alpha, mu).slope()
}

/// Newton iteration on `F(.; alpha)` with deflation of `known` roots.
///
/// The deflated function `F / prod (mu - known)` keeps iterates away from roots
/// already found; convergence is judged on the undeflated `F`.
pub fn refine_root(
    p: &PotentialSpec,
    alpha: f64,
    guess: Complex64,
    known: &[Complex64],
) -> Result<(Complex64, SecularValue)> {
    let mut mu = guess;
    let mut v = secular_value(p, alpha, mu);
    for _ in 0..NEWTON_MAX_ITER {
        if v.relative_residual() <= f64::EPSILON {
            break;
        }
        let mut ratio = v.df_dmu / v.f;
        for r in known {
            ratio -= 1.0 / (mu - r);
        }
        let step = 1.0 / ratio;
        if !step.is_finite() {
            break;
        }
        let next = mu - step;
        let nv = secular_value(p, alpha, next);
        let small_step = step.norm() <= 4.0 * f64::EPSILON * (1.0 + mu.norm());
        mu = next;
        v = nv;
        if small_step {
            break;
        }
    }
    if !(v.relative_residual() <= ROOT_TOLERANCE) {
        return Err(Error::NoConvergence(format!(
            "alpha = {alpha}, guess = {guess}, last = {mu}, relative residual {:e}",
            v.relative_residual()
        )));
    }
    Ok((mu, v))
}

/// Default search region: real parts from just below the potential minimum up to
/// `cap`, imaginary parts within `+-im_extent`.
pub fn default_search_box(p: &PotentialSpec, cap: f64, im_extent: f64) -> Result<SearchBox> {
    SearchBox::new((p.min_value() - 1.0, cap), (-im_extent, im_extent))
}

/// Winding count of `F(.; alpha)` around `bx`.
pub fn count_eigenvalues(
    p: &PotentialSpec,
    alpha: RobinParameter,
    bx: &SearchBox,
) -> Result<usize> {
    let eval = |mu: Complex64| {
        let v = secular_value(p, alpha.value(), mu);
        (v.f, v.df_dmu)
    };
    Ok(contour_data(&eval, bx, DEFAULT_PANELS_PER_EDGE)?.winding)
}

/// All eigenvalues inside `bx`, with multiplicity, sorted by real then imaginary part.
///
/// The box is subdivided until every cell holds at most one zero (by the argument
/// principle); each isolated zero is seeded from the contour's first moment and
/// polished by Newton.
pub fn find_eigenvalues(
    p: &PotentialSpec,
    alpha: RobinParameter,
    bx: &SearchBox,
    max_count: usize,
) -> Result<Vec<Complex64>> {
    if max_count == 0 {
        return Err(Error::InvalidArgument(
            "max_count must be at least 1".into(),
        ));
    }
    let bx = SearchBox::new(bx.re, bx.im)?;
    let a = alpha.value();
    let eval = |mu: Complex64| {
        let v = secular_value(p, a, mu);
        (v.f, v.df_dmu)
    };

    let mut outer = bx;
    let mut total = None;
    for attempt in 0..6 {
        match contour_data(&eval, &outer, DEFAULT_PANELS_PER_EDGE) {
            Ok(d) => {
                total = Some(d);
                break;
            }
            Err(Error::RootOnContour(_)) => {
                outer = bx.inflate(1e-9 * bx.diameter() * (attempt + 1) as f64 * 7.0);
            }
            Err(e) => return Err(e),
        }
    }
    let total =
        total.ok_or_else(|| Error::Isolation("zeros persist on the search box boundary".into()))?;
    if total.winding > max_count {
        return Err(Error::TooManyRoots {
            count: total.winding,
            max: max_count,
        });
    }

    let mut found: Vec<Complex64> = Vec::with_capacity(total.winding);
    let mut stack = vec![(outer, total, 0usize)];
    while let Some((cell, data, depth)) = stack.pop() {
        match data.winding {
            0 => {}
            1 => match isolate_single(p, a, &cell, &data, &found) {
                Some(root) => found.push(root),
                None if depth < MAX_SUBDIVISION_DEPTH => {
                    push_children(&eval, &cell, data.winding, depth, &mut stack)?
                }
                None => {
                    return Err(Error::NoConvergence(format!(
                        "isolated zero in {cell:?} did not converge"
                    )))
                }
            },
            m => {
                let tiny = cell.diameter() <= 1e-9 * (1.0 + cell.center().norm());
                if tiny || depth >= MAX_SUBDIVISION_DEPTH {
                    // Multiple (or unresolvably clustered) zero.
                    let centroid = data.first_moment / m as f64;
                    let seed = if cell.contains(centroid, cell.diameter()) {
                        centroid
                    } else {
                        cell.center()
                    };
                    let root = refine_root(p, a, seed, &[]).map(|(r, _)| r).unwrap_or(seed);
                    found.extend(std::iter::repeat_n(root, m));
                } else {
                    push_children(&eval, &cell, m, depth, &mut stack)?;
                }
            }
        }
    }

    found.sort_by(|x, y| {
        x.re.partial_cmp(&y.re)
            .unwrap()
            .then(x.im.partial_cmp(&y.im).unwrap())
    });
    Ok(found)
}

fn isolate_single(
    p: &PotentialSpec,
    alpha: f64,
    cell: &SearchBox,
    data: &crate::contour::ContourData,
    found: &[Complex64],
) -> Option<Complex64> {
    let slack = 1e-6 * cell.diameter();
    let mut seeds = Vec::with_capacity(2);
    if data.first_moment.is_finite() && cell.contains(data.first_moment, slack) {
        seeds.push(data.first_moment);
    }
    seeds.push(cell.center());
    for seed in seeds {
        if let Ok((root, _)) = refine_root(p, alpha, seed, found) {
            if cell.contains(root, slack) {
                return Some(root);
            }
        }
    }
    None
}

fn push_children<F>(
    eval: &F,
    cell: &SearchBox,
    expected: usize,
    depth: usize,
    stack: &mut Vec<(SearchBox, crate::contour::ContourData, usize)>,
) -> Result<()>
where
    F: Fn(Complex64) -> (Complex64, Complex64),
{
    let mut last_err = None;
    for frac in SPLIT_FRACTIONS {
        let (lo, hi) = cell.split(frac);
        let panels = DEFAULT_PANELS_PER_EDGE;
        match (
            contour_data(eval, &lo, panels),
            contour_data(eval, &hi, panels),
        ) {
            (Ok(dl), Ok(dh)) if dl.winding + dh.winding == expected => {
                stack.push((lo, dl, depth + 1));
                stack.push((hi, dh, depth + 1));
                return Ok(());
            }
            (Ok(dl), Ok(dh)) => {
                last_err = Some(Error::Isolation(format!(
                    "children of {cell:?} hold {} + {} zeros, parent holds {expected}",
                    dl.winding, dh.winding
                )))
            }
            (Err(e), _) | (_, Err(e)) => last_err = Some(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::Isolation("subdivision failed".into())))
}

/// Closed-form spectrum of the square well `-v0` on `[-a, a]`:
/// `alpha^2 - v0` followed by `(n pi / 2a)^2 - v0` for `n = 1..=n_max`.
pub fn square_well_eigenvalues(a: f64, v0: f64, alpha: f64, n_max: usize) -> Vec<Complex64> {
    std::iter::once(alpha * alpha - v0)
        .chain((1..=n_max).map(|n| (n as f64 * std::f64::consts::PI / (2.0 * a)).powi(2) - v0))
        .map(|x| Complex64::new(x, 0.0))
        .collect()
}

/// Where a branch came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchSource {
    Direct,
    Reconstructed,
}

impl BranchSource {
    pub fn as_str(self) -> &'static str {
        match self {
            BranchSource::Direct => "direct",
            BranchSource::Reconstructed => "reconstructed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchSample {
    pub alpha: f64,
    pub mu: Complex64,
    /// `|F(mu; alpha)|` divided by the overflow-guard factor `exp(log_scale)`;
    /// NaN for reconstructed samples, which carry no secular evaluation.
    pub residual: f64,
    /// Step taken to reach this sample (zero for the seed).
    pub step: f64,
}

/// Two tracked roots came within [`COLLISION_THRESHOLD`]: a candidate exceptional point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Collision {
    pub alpha: f64,
    pub mu: Complex64,
    /// Estimated distance to the partner root, `2 |F_mu / F_mumu|`.
    pub partner_distance: f64,
}

/// One eigenvalue curve `alpha -> mu_n(alpha)`, sampled with strictly increasing `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBranch {
    pub label: Option<usize>,
    pub samples: Vec<BranchSample>,
    pub source: BranchSource,
    pub collisions: Vec<Collision>,
}

impl EigenBranch {
    pub fn alpha_range(&self) -> Option<(f64, f64)> {
        Some((self.samples.first()?.alpha, self.samples.last()?.alpha))
    }

    /// Interpolates the samples linearly at `alpha` and corrects with Newton.
    pub fn evaluate(&self, p: &PotentialSpec, alpha: f64) -> Result<Complex64> {
        let guess = self.interpolate(alpha).ok_or_else(|| {
            Error::InvalidArgument(format!("alpha = {alpha} outside the sampled range"))
        })?;
        let (mu, _) = refine_root(p, alpha, guess, &[])?;
        Ok(mu)
    }

    /// Piecewise-linear interpolation of the samples.
    pub fn interpolate(&self, alpha: f64) -> Option<Complex64> {
        let s = &self.samples;
        let (lo, hi) = self.alpha_range()?;
        if !(alpha >= lo && alpha <= hi) {
            return None;
        }
        if s.len() == 1 {
            return Some(s[0].mu);
        }
        let j = s.partition_point(|x| x.alpha < alpha).clamp(1, s.len() - 1);
        let (a0, a1) = (&s[j - 1], &s[j]);
        let t = (alpha - a0.alpha) / (a1.alpha - a0.alpha);
        Some(a0.mu + (a1.mu - a0.mu) * t)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ContinuationOptions {
    pub max_halvings: u32,
    pub collision_threshold: f64,
    /// Successful steps in a row before the step is doubled again.
    pub grow_after: u32,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        Self {
            max_halvings: 40,
            collision_threshold: COLLISION_THRESHOLD,
            grow_after: 3,
        }
    }
}

/// Predictor-corrector continuation of the eigenvalue through `seed` over `alpha_range`.
pub fn continue_branch(
    p: &PotentialSpec,
    seed: (f64, Complex64),
    alpha_range: (f64, f64),
    step: f64,
) -> Result<EigenBranch> {
    continue_branch_with(p, seed, alpha_range, step, &ContinuationOptions::default())
}

pub fn continue_branch_with(
    p: &PotentialSpec,
    seed: (f64, Complex64),
    alpha_range: (f64, f64),
    step: f64,
    opts: &ContinuationOptions,
) -> Result<EigenBranch> {
    let (alpha0, mu0) = seed;
    let (lo, hi) = alpha_range;
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "step must be positive, got {step}"
        )));
    }
    if !(lo <= hi && alpha0 >= lo && alpha0 <= hi) {
        return Err(Error::InvalidArgument(format!(
            "seed alpha {alpha0} outside range [{lo}, {hi}]"
        )));
    }
    let (mu_seed, v) = refine_root(p, alpha0, mu0, &[])
        .map_err(|e| Error::Precondition(format!("seed is not an eigenvalue: {e}")))?;
    if (mu_seed - mu0).norm() > 1e-6 * (1.0 + mu0.norm()) {
        return Err(Error::Precondition(format!(
            "seed {mu0} is not an eigenvalue at alpha = {alpha0} (nearest {mu_seed})"
        )));
    }
    let start = BranchSample {
        alpha: alpha0,
        mu: mu_seed,
        residual: v.f.norm(),
        step: 0.0,
    };

    let mut collisions = Vec::new();
    let (fwd, c_fwd) = march(p, start, hi, step, opts)?;
    let (back, c_back) = march(p, start, lo, step, opts)?;
    collisions.extend(c_back);
    collisions.extend(c_fwd);

    let mut samples: Vec<BranchSample> = back.into_iter().rev().collect();
    samples.push(start);
    samples.extend(fwd);
    Ok(EigenBranch {
        label: None,
        samples,
        source: BranchSource::Direct,
        collisions,
    })
}

/// Estimated distance from the root `mu` to its nearest neighbour, from the
/// quadratic model of `F` around `mu`.
pub fn partner_distance(p: &PotentialSpec, alpha: f64, mu: Complex64) -> f64 {
    let h = 1e-6 * (1.0 + mu.norm());
    let v = secular_value(p, alpha, mu);
    let vp = secular_value(p, alpha, mu + h);
    let vm = secular_value(p, alpha, mu - h);
    let rp = (vp.log_scale - v.log_scale).exp();
    let rm = (vm.log_scale - v.log_scale).exp();
    let second = (vp.df_dmu * rp - vm.df_dmu * rm) / (2.0 * h);
    2.0 * (v.df_dmu / second).norm()
}

fn march(
    p: &PotentialSpec,
    start: BranchSample,
    target: f64,
    h0: f64,
    opts: &ContinuationOptions,
) -> Result<(Vec<BranchSample>, Option<Collision>)> {
    let mut out = Vec::new();
    let mut cur = start;
    let dir = if target >= start.alpha { 1.0 } else { -1.0 };
    let mut h = h0;
    let mut halvings = 0u32;
    let mut easy = 0u32;
    let span = (target - start.alpha).abs().max(h0);

    while (target - cur.alpha) * dir > 1e-14 * span {
        let remaining = (target - cur.alpha).abs();
        let last_step = h >= remaining - 1e-12 * span;
        let hs = h.min(remaining);
        let alpha_next = if last_step {
            target
        } else {
            cur.alpha + dir * hs
        };
        let slope = eigenvalue_slope(p, cur.alpha, cur.mu);
        let predicted = cur.mu + slope * (alpha_next - cur.alpha);
        let drift = (predicted - cur.mu).norm();

        // Accept a corrector that stayed close to the tangent, or whose secant
        // agrees with the trapezoid of the end slopes (needed where the slope vanishes).
        let accepted = refine_root(p, alpha_next, predicted, &[])
            .ok()
            .filter(|(mu, v)| {
                let floor = 1e-9 * (1.0 + mu.norm());
                let correction = (*mu - predicted).norm();
                let rise = *mu - cur.mu;
                let trapezoid =
                    (rise - 0.5 * (slope + v.slope()) * (alpha_next - cur.alpha)).norm();
                correction <= 0.2 * drift + floor || trapezoid <= 0.05 * rise.norm() + floor
            });

        match accepted {
            Some((mu, v)) => {
                let sample = BranchSample {
                    alpha: alpha_next,
                    mu,
                    residual: v.f.norm(),
                    step: (alpha_next - cur.alpha).abs(),
                };
                out.push(sample);
                cur = sample;
                halvings = 0;
                easy += 1;
                if easy >= opts.grow_after && h < h0 {
                    h = (2.0 * h).min(h0);
                    easy = 0;
                }
                let d = partner_distance(p, cur.alpha, cur.mu);
                if d < opts.collision_threshold {
                    return Ok((
                        out,
                        Some(Collision {
                            alpha: cur.alpha,
                            mu: cur.mu,
                            partner_distance: d,
                        }),
                    ));
                }
            }
            None => {
                easy = 0;
                halvings += 1;
                h *= 0.5;
                if halvings > opts.max_halvings {
                    let d = partner_distance(p, cur.alpha, cur.mu);
                    if d < 1e3 * opts.collision_threshold {
                        return Ok((
                            out,
                            Some(Collision {
                                alpha: cur.alpha,
                                mu: cur.mu,
                                partner_distance: d,
                            }),
                        ));
                    }
                    return Err(Error::ContinuationStall {
                        alpha: cur.alpha,
                        last: cur,
                    });
                }
            }
        }
    }
    Ok((out, None))
}

/// Eigenvalues at the reference `alpha = 0`, labelled by ascending real part, each
/// continued over `alpha_range`.
pub fn trace_branches(
    p: &PotentialSpec,
    bx: &SearchBox,
    max_count: usize,
    alpha_range: (f64, f64),
    step: f64,
) -> Result<Vec<EigenBranch>> {
    use rayon::prelude::*;
    let zero = RobinParameter::new(0.0)?;
    let reference = find_eigenvalues(p, zero, bx, max_count)?;
    let (lo, hi) = (alpha_range.0.min(0.0), alpha_range.1.max(0.0));
    reference
        .par_iter()
        .enumerate()
        .map(|(n, &mu)| {
            let mut b = continue_branch(p, (0.0, mu), (lo, hi), step)?;
            b.label = Some(n);
            b.samples
                .retain(|s| s.alpha >= alpha_range.0 && s.alpha <= alpha_range.1);
            Ok(b)
        })
        .collect()
}

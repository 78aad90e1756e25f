//! Exceptional points: real double roots of the secular function along a
//! one-parameter family of potentials.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::family::PotentialFamily;
use crate::potential::PotentialSpec;
use crate::spectrum::{refine_root, secular_value, RobinParameter};

pub const COUNT_GRID: usize = 4000;
pub const NEWTON_MAX_ITER: usize = 60;
pub const BISECTION_TOLERANCE: f64 = 1e-10;
/// Relative size of `F` and `dF/dmu` accepted at a double root.
pub const EP_TOLERANCE: f64 = 1e-8;

/// How the Robin parameter is tied to the spectral parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaMode {
    Fixed(RobinParameter),
    /// `alpha = sqrt(mu)`: eigenvalues on the dispersion parabola, i.e. PTEs.
    Dispersion,
}

impl AlphaMode {
    pub fn alpha(self, mu: f64) -> f64 {
        match self {
            AlphaMode::Fixed(a) => a.value(),
            AlphaMode::Dispersion => mu.max(0.0).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpSearch {
    /// Parameter interval whose ends differ in the number of real roots in `window`.
    pub bracket: (f64, f64),
    pub mu_guess: f64,
    /// Real energy window in which roots are counted.
    pub window: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExceptionalPoint {
    pub theta: f64,
    pub mu: Complex64,
    pub alpha: f64,
    /// Branch labels of the colliding pair, when known.
    pub labels: Option<(usize, usize)>,
    /// `|F|` at the point, overflow-guard factor removed.
    pub residual_f: f64,
    /// `|dF/dmu|` at the point, overflow-guard factor removed.
    pub residual_df: f64,
    /// Parameter value where the real-root count in the window changes, found by
    /// bisection; the independent cross-check of `theta`.
    pub count_change_theta: Option<f64>,
    pub iterations: usize,
}

/// `(Re F, Re dF/dmu)` unscaled, with alpha taken from `mode`.
fn residuals(p: &PotentialSpec, mode: AlphaMode, mu: f64) -> (f64, f64) {
    let v = secular_value(p, mode.alpha(mu), Complex64::new(mu, 0.0));
    (v.value().re, v.derivative_mu().re)
}

/// Number of real zeros of `mu -> F(mu; alpha(mu))` in `window`, from sign changes
/// on a fine grid plus probing of local minima of `|F|` for close pairs.
pub fn count_real_roots(p: &PotentialSpec, mode: AlphaMode, window: (f64, f64)) -> Result<usize> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::InvalidArgument(format!("empty window [{lo}, {hi}]")));
    }
    if matches!(mode, AlphaMode::Dispersion) && lo < 0.0 {
        return Err(Error::InvalidArgument(
            "dispersion coupling needs a window of nonnegative energies".into(),
        ));
    }
    let g = |mu: f64| {
        let v = secular_value(p, mode.alpha(mu), Complex64::new(mu, 0.0));
        v.f.re
    };
    let xs: Vec<f64> = (0..=COUNT_GRID)
        .map(|j| lo + (hi - lo) * j as f64 / COUNT_GRID as f64)
        .collect();
    let ys: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
    let mut count = 0;
    for j in 0..COUNT_GRID {
        if ys[j] == 0.0 || ys[j] * ys[j + 1] < 0.0 {
            count += 1;
        }
    }
    for j in 1..COUNT_GRID {
        let (a, b, c) = (ys[j - 1], ys[j], ys[j + 1]);
        if a * b <= 0.0 || b * c <= 0.0 || b.abs() > a.abs() || b.abs() > c.abs() {
            continue;
        }
        // Golden-section search for the extremum of |g| between the neighbours.
        let (mut l, mut r) = (xs[j - 1], xs[j + 1]);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let m1 = r - phi * (r - l);
            let m2 = l + phi * (r - l);
            if g(m1).abs() < g(m2).abs() {
                r = m2;
            } else {
                l = m1;
            }
        }
        if g(0.5 * (l + r)) * b < 0.0 {
            count += 2;
        }
    }
    Ok(count)
}

/// Locates the exceptional point where two real roots of `F(.; theta)` collide
/// as `theta` crosses `search.bracket`.
pub fn locate_exceptional_point<F: PotentialFamily + ?Sized>(
    family: &F,
    mode: AlphaMode,
    search: &EpSearch,
) -> Result<ExceptionalPoint> {
    let (t0, t1) = search.bracket;
    if !(t0.is_finite() && t1.is_finite() && t0 != t1) {
        return Err(Error::InvalidArgument(format!(
            "bracket [{t0}, {t1}] is empty"
        )));
    }
    let count = |t: f64| -> Result<usize> { count_real_roots(&family.at(t)?, mode, search.window) };
    let (c0, c1) = (count(t0)?, count(t1)?);
    if c0 == c1 {
        return Err(Error::Precondition(format!(
            "real-root count in {:?} is {c0} at both ends of the bracket",
            search.window
        )));
    }
    let (mut lo, mut hi) = (t0, t1);
    while (hi - lo).abs() > BISECTION_TOLERANCE * (1.0 + lo.abs()) {
        let mid = 0.5 * (lo + hi);
        if count(mid)? == c0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let theta_c = 0.5 * (lo + hi);
    let mut ep = refine_exceptional_point(family, mode, theta_c, search.mu_guess)?;
    ep.count_change_theta = Some(theta_c);
    Ok(ep)
}

/// Two-dimensional Newton on `(Re F, Re dF/dmu) = 0` in the unknowns `(mu, theta)`.
pub fn refine_exceptional_point<F: PotentialFamily + ?Sized>(
    family: &F,
    mode: AlphaMode,
    theta0: f64,
    mu0: f64,
) -> Result<ExceptionalPoint> {
    let eval = |mu: f64, theta: f64| -> Result<(f64, f64)> {
        if matches!(mode, AlphaMode::Dispersion) && mu <= 0.0 {
            return Err(Error::NoExceptionalPoint(format!(
                "iterate left the positive energies at mu = {mu}"
            )));
        }
        Ok(residuals(&family.at(theta)?, mode, mu))
    };
    let (mut mu, mut theta) = (mu0, theta0);
    let mut g = eval(mu, theta)?;
    let mut trace = Vec::new();
    let norm = |g: (f64, f64), s: (f64, f64)| (g.0 / s.0).hypot(g.1 / s.1);

    for it in 0..NEWTON_MAX_ITER {
        trace.push((theta, mu, g.0, g.1));
        let hm = 1e-6 * (1.0 + mu.abs());
        let ht = 1e-6 * (1.0 + theta.abs());
        let (gmp, gmm) = (eval(mu + hm, theta)?, eval(mu - hm, theta)?);
        let (gtp, gtm) = (eval(mu, theta + ht)?, eval(mu, theta - ht)?);
        let j = [
            [(gmp.0 - gmm.0) / (2.0 * hm), (gtp.0 - gtm.0) / (2.0 * ht)],
            [(gmp.1 - gmm.1) / (2.0 * hm), (gtp.1 - gtm.1) / (2.0 * ht)],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let size = (j[0][0].abs() + j[0][1].abs()) * (j[1][0].abs() + j[1][1].abs());
        if !(det.abs() > 1e-12 * size) {
            return Err(Error::NoExceptionalPoint(format!(
                "singular Jacobian at theta = {theta}, mu = {mu}; trace {trace:?}"
            )));
        }
        let dmu = -(j[1][1] * g.0 - j[0][1] * g.1) / det;
        let dth = -(-j[1][0] * g.0 + j[0][0] * g.1) / det;
        // Row scales make the merit function independent of the units of F.
        let scales = (
            j[0][0].abs().max(j[0][1].abs()).max(f64::MIN_POSITIVE),
            j[1][0].abs().max(j[1][1].abs()).max(f64::MIN_POSITIVE),
        );
        let current = norm(g, scales);
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let (m, t) = (mu + lambda * dmu, theta + lambda * dth);
            if let Ok(gn) = eval(m, t) {
                if norm(gn, scales) < current || lambda * dmu.abs() <= 1e-14 * (1.0 + mu.abs()) {
                    accepted = Some((m, t, gn));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((m, t, gn)) = accepted else {
            return Err(Error::NoExceptionalPoint(format!(
                "line search failed at theta = {theta}, mu = {mu}; trace {trace:?}"
            )));
        };
        let small = (m - mu).abs() <= 1e-13 * (1.0 + mu.abs())
            && (t - theta).abs() <= 1e-13 * (1.0 + theta.abs());
        mu = m;
        theta = t;
        g = gn;
        if small || (g.0 == 0.0 && g.1 == 0.0) {
            return finish(family, mode, theta, mu, it + 1);
        }
    }
    Err(Error::NoExceptionalPoint(format!(
        "no convergence after {NEWTON_MAX_ITER} iterations; trace {trace:?}"
    )))
}

fn finish<F: PotentialFamily + ?Sized>(
    family: &F,
    mode: AlphaMode,
    theta: f64,
    mu: f64,
    iterations: usize,
) -> Result<ExceptionalPoint> {
    let p = family.at(theta)?;
    let alpha = mode.alpha(mu);
    let v = secular_value(&p, alpha, Complex64::new(mu, 0.0));
    let reach = 1.0 + (mu - p.min_value()).abs();
    if v.relative_residual() > EP_TOLERANCE || v.df_dmu.norm() * reach > EP_TOLERANCE * v.magnitude
    {
        return Err(Error::NoExceptionalPoint(format!(
            "Newton stalled at theta = {theta}, mu = {mu} without a double root \
             (|F| = {:e}, |dF/dmu| = {:e})",
            v.value().norm(),
            v.derivative_mu().norm()
        )));
    }
    Ok(ExceptionalPoint {
        theta,
        mu: Complex64::new(mu, 0.0),
        alpha,
        labels: None,
        residual_f: v.f.norm(),
        residual_df: v.df_dmu.norm(),
        count_change_theta: None,
        iterations,
    })
}

/// The two roots of `F(.; alpha_ep)` near the exceptional point at `theta_ep + delta`.
///
/// Near an exceptional point they split as `+-sqrt(delta)`: real on one side,
/// a conjugate pair on the other.
pub fn unfolding_pair<F: PotentialFamily + ?Sized>(
    family: &F,
    ep: &ExceptionalPoint,
    delta: f64,
) -> Result<(Complex64, Complex64)> {
    let alpha = ep.alpha;
    let h = 1e-4 * (1.0 + ep.mu.norm());
    let ht = 1e-6 * (1.0 + ep.theta.abs());
    let p0 = family.at(ep.theta)?;
    let f = |p: &PotentialSpec, mu: Complex64| secular_value(p, alpha, mu).value();
    let f_mumu = (f(&p0, ep.mu + h) - 2.0 * f(&p0, ep.mu) + f(&p0, ep.mu - h)) / (h * h);
    let f_theta =
        (f(&family.at(ep.theta + ht)?, ep.mu) - f(&family.at(ep.theta - ht)?, ep.mu)) / (2.0 * ht);
    let offset = (-2.0 * f_theta * delta / f_mumu).sqrt();
    let p = family.at(ep.theta + delta)?;
    let (r1, _) = refine_root(&p, alpha, ep.mu + offset, &[])?;
    let (r2, _) = refine_root(&p, alpha, ep.mu - offset, &[r1])?;
    if (r1 - r2).norm() <= 1e-12 * (1.0 + r1.norm()) {
        return Err(Error::NoConvergence(format!(
            "both seeds converged to {r1} at delta = {delta}"
        )));
    }
    Ok(if (r1.re, r1.im) <= (r2.re, r2.im) {
        (r1, r2)
    } else {
        (r2, r1)
    })
}

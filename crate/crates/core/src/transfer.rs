//! Transfer matrices for `-psi'' + v psi = mu psi` across constant bands, and
//! the reflection/transmission amplitudes they produce.
//!
//! Every matrix is stored together with a logarithmic scale factor: the true
//! matrix is `entries * exp(log_scale)`. Zeros of the secular function and the
//! ratios giving `R` and `T` do not depend on the scale.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::entire::cos_sinc;
use crate::error::{Error, Result};
use crate::potential::PotentialSpec;

pub type Mat2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const RENORM_HI: f64 = 1e64;
const RENORM_LO: f64 = 1e-64;

fn mat_mul(b: &Mat2, a: &Mat2) -> Mat2 {
    [
        [
            b[0][0] * a[0][0] + b[0][1] * a[1][0],
            b[0][0] * a[0][1] + b[0][1] * a[1][1],
        ],
        [
            b[1][0] * a[0][0] + b[1][1] * a[1][0],
            b[1][0] * a[0][1] + b[1][1] * a[1][1],
        ],
    ]
}

fn mat_add(a: &Mat2, b: &Mat2) -> Mat2 {
    [
        [a[0][0] + b[0][0], a[0][1] + b[0][1]],
        [a[1][0] + b[1][0], a[1][1] + b[1][1]],
    ]
}

fn mat_scale(a: &Mat2, f: f64) -> Mat2 {
    [[a[0][0] * f, a[0][1] * f], [a[1][0] * f, a[1][1] * f]]
}

fn max_abs(a: &Mat2) -> f64 {
    a.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
}

/// The pair `(psi, psi')` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryState {
    pub psi: Complex64,
    pub dpsi: Complex64,
}

impl BoundaryState {
    pub fn new(psi: Complex64, dpsi: Complex64) -> Self {
        Self { psi, dpsi }
    }
}

/// Maps `(psi, psi')` at the left end of an interval to the right end.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    entries: Mat2,
    log_scale: f64,
}

impl TransferMatrix {
    pub fn identity() -> Self {
        Self {
            entries: [[ONE, ZERO], [ZERO, ONE]],
            log_scale: 0.0,
        }
    }

    pub fn from_scaled(entries: Mat2, log_scale: f64) -> Self {
        Self { entries, log_scale }
    }

    /// Scaled entries; multiply by `exp(log_scale())` for the true matrix.
    pub fn entries(&self) -> &Mat2 {
        &self.entries
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn unscaled(&self) -> Mat2 {
        mat_scale(&self.entries, self.log_scale.exp())
    }

    /// Determinant of the true (unscaled) matrix.
    pub fn determinant(&self) -> Complex64 {
        let m = &self.entries;
        (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * (2.0 * self.log_scale).exp()
    }

    /// Propagation through `self` followed by `next`, i.e. the product `next * self`.
    pub fn then(&self, next: &TransferMatrix) -> TransferMatrix {
        let mut out = TransferMatrix {
            entries: mat_mul(&next.entries, &self.entries),
            log_scale: self.log_scale + next.log_scale,
        };
        out.renormalize();
        out
    }

    /// Applies the scaled matrix; the true state is the result times `exp(log_scale())`.
    pub fn apply_scaled(&self, s: BoundaryState) -> BoundaryState {
        let m = &self.entries;
        BoundaryState {
            psi: m[0][0] * s.psi + m[0][1] * s.dpsi,
            dpsi: m[1][0] * s.psi + m[1][1] * s.dpsi,
        }
    }

    fn renormalize(&mut self) {
        let big = max_abs(&self.entries);
        if big > RENORM_HI || (big < RENORM_LO && big > 0.0) {
            self.entries = mat_scale(&self.entries, 1.0 / big);
            self.log_scale += big.ln();
        }
    }
}

/// A transfer matrix with its derivative in the spectral parameter `mu`.
/// Both share the same scale factor.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TransferJet {
    pub value: TransferMatrix,
    pub d_mu: Mat2,
    /// Entrywise bound on the rounding-free magnitudes: the product of the
    /// entrywise absolute values of the band propagators, same scale as `value`.
    pub bound: [[f64; 2]; 2],
}

fn abs_mul(b: &[[f64; 2]; 2], a: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [
            b[0][0] * a[0][0] + b[0][1] * a[1][0],
            b[0][0] * a[0][1] + b[0][1] * a[1][1],
        ],
        [
            b[1][0] * a[0][0] + b[1][1] * a[1][0],
            b[1][0] * a[0][1] + b[1][1] * a[1][1],
        ],
    ]
}

fn abs_entries(a: &Mat2) -> [[f64; 2]; 2] {
    [
        [a[0][0].norm(), a[0][1].norm()],
        [a[1][0].norm(), a[1][1].norm()],
    ]
}

impl TransferJet {
    fn identity() -> Self {
        Self {
            value: TransferMatrix::identity(),
            d_mu: [[ZERO; 2]; 2],
            bound: [[1.0, 0.0], [0.0, 1.0]],
        }
    }

    fn then(&self, next: &TransferJet) -> TransferJet {
        // (B A)' = B' A + B A'
        let d = mat_add(
            &mat_mul(&next.d_mu, &self.value.entries),
            &mat_mul(&next.value.entries, &self.d_mu),
        );
        let mut value = TransferMatrix {
            entries: mat_mul(&next.value.entries, &self.value.entries),
            log_scale: self.value.log_scale + next.value.log_scale,
        };
        let mut bound = abs_mul(&next.bound, &self.bound);
        let big = max_abs(&value.entries);
        let mut d_mu = d;
        if big > RENORM_HI || (big < RENORM_LO && big > 0.0) {
            value.entries = mat_scale(&value.entries, 1.0 / big);
            d_mu = mat_scale(&d_mu, 1.0 / big);
            bound = bound.map(|r| r.map(|x| x / big));
            value.log_scale += big.ln();
        }
        TransferJet { value, d_mu, bound }
    }
}

fn check_width(width: f64) -> Result<()> {
    if !(width.is_finite() && width >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "segment width must be nonnegative, got {width}"
        )));
    }
    Ok(())
}

pub(crate) fn segment_jet(value: f64, width: f64, mu: Complex64) -> TransferJet {
    let q2 = mu - value;
    let l = width;
    let f = cos_sinc(q2 * l * l);
    let l2 = l * l;
    let m12 = f.s * l;
    let m21 = -q2 * f.s * l;
    let dm11 = f.dc * l2;
    let dm12 = f.ds * l * l2;
    let dm21 = -f.s * l - q2 * f.ds * l * l2;
    let entries = [[f.c, m12], [m21, f.c]];
    TransferJet {
        value: TransferMatrix {
            entries,
            log_scale: f.log_scale,
        },
        d_mu: [[dm11, dm12], [dm21, dm11]],
        bound: abs_entries(&entries),
    }
}

/// Propagator across one band of height `value` and width `width`:
/// `[[cos qL, sin(qL)/q], [-q sin qL, cos qL]]` with `q^2 = mu - value`.
pub fn segment_propagator(value: f64, width: f64, mu: Complex64) -> Result<TransferMatrix> {
    check_width(width)?;
    Ok(segment_jet(value, width, mu).value)
}

/// Ordered product of the band propagators from `-a` to `a`.
pub fn total_transfer(p: &PotentialSpec, mu: Complex64) -> TransferMatrix {
    p.segments()
        .iter()
        .fold(TransferMatrix::identity(), |acc, s| {
            acc.then(&segment_jet(s.value, s.width(), mu).value)
        })
}

pub(crate) fn total_transfer_jet(p: &PotentialSpec, mu: Complex64) -> TransferJet {
    p.segments().iter().fold(TransferJet::identity(), |acc, s| {
        acc.then(&segment_jet(s.value, s.width(), mu))
    })
}

/// `|det M - 1|` relative to the size of the products that cancel in the
/// determinant; rounding alone keeps it near machine epsilon.
pub fn unimodularity_defect(p: &PotentialSpec, mu: Complex64) -> f64 {
    // Worked in scaled form so deep evanescent bands cannot overflow.
    let jet = total_transfer_jet(p, mu);
    let (b, m) = (jet.bound, jet.value.entries);
    let unit = (-2.0 * jet.value.log_scale()).exp();
    let size = b[0][0] * b[1][1] + b[0][1] * b[1][0];
    (m[0][0] * m[1][1] - m[0][1] * m[1][0] - unit).norm() / size.max(unit)
}

/// Propagator from `x_lo` to `x_hi`, both inside `[-a, a]`.
pub fn transfer_between(
    p: &PotentialSpec,
    x_lo: f64,
    x_hi: f64,
    mu: Complex64,
) -> Result<TransferMatrix> {
    let a = p.half_width();
    if !(x_lo <= x_hi && x_lo >= -a && x_hi <= a) {
        return Err(Error::InvalidArgument(format!(
            "[{x_lo}, {x_hi}] is not a subinterval of [-{a}, {a}]"
        )));
    }
    let mut acc = TransferMatrix::identity();
    for s in p.segments() {
        let lo = s.lo.max(x_lo);
        let hi = s.hi.min(x_hi);
        if hi > lo {
            acc = acc.then(&segment_jet(s.value, hi - lo, mu).value);
        }
    }
    Ok(acc)
}

/// Reflection and transmission amplitudes for a unit wave incident from the left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringAmplitudes {
    pub r: Complex64,
    pub t: Complex64,
    pub k: f64,
}

impl ScatteringAmplitudes {
    pub fn transmission(&self) -> f64 {
        self.t.norm_sqr()
    }

    pub fn reflection(&self) -> f64 {
        self.r.norm_sqr()
    }
}

/// Solves the matching problem for `psi = e^{ikx} + R e^{-ikx}` on the left and
/// `psi = T e^{ikx}` on the right.
pub fn scattering_amplitudes(p: &PotentialSpec, k: f64) -> Result<ScatteringAmplitudes> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "wavenumber must be positive, got {k}"
        )));
    }
    let a = p.half_width();
    let m = total_transfer(p, Complex64::new(k * k, 0.0));
    let ik = Complex64::new(0.0, k);
    let u = m.apply_scaled(BoundaryState::new(ONE, ik));
    let v = m.apply_scaled(BoundaryState::new(ONE, -ik));
    let denom = v.dpsi - ik * v.psi;
    if !(denom.norm() > 0.0 && denom.is_finite()) {
        return Err(Error::NumericalSingularity(format!(
            "matching system is singular at k = {k}"
        )));
    }
    let phase = Complex64::from_polar(1.0, -2.0 * k * a);
    let r = -phase * (u.dpsi - ik * u.psi) / denom;
    // The true matrix has unit determinant, so T = -2ik e^{-2ika} / denom_true.
    let t = -2.0 * ik * phase * (-m.log_scale).exp() / denom;
    Ok(ScatteringAmplitudes { r, t, k })
}

/// One row of a transmission table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionPoint {
    pub k2: f64,
    pub t2: f64,
    pub r2: f64,
    pub arg_t: f64,
}

/// Tabulates `|T|^2`, `|R|^2` and `arg T` over energies `k^2`, in input order.
pub fn transmission_curve(p: &PotentialSpec, k2_grid: &[f64]) -> Result<Vec<TransmissionPoint>> {
    if let Some(bad) = k2_grid.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "energy grid must be positive, found {bad}"
        )));
    }
    k2_grid
        .par_iter()
        .map(|&k2| {
            let amp = scattering_amplitudes(p, k2.sqrt())?;
            Ok(TransmissionPoint {
                k2,
                t2: amp.transmission(),
                r2: amp.reflection(),
                arg_t: amp.t.arg(),
            })
        })
        .collect()
}

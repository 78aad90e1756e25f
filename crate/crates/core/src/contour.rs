//! Argument-principle machinery on axis-aligned rectangles.
//!
//! The winding number of `f` around a box is obtained by tracking the
//! continuous change of `arg f` along the boundary. Panels whose phase jump
//! exceeds [`MAX_PHASE_STEP`] are bisected until the jump is resolved.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const DEFAULT_PANELS_PER_EDGE: usize = 512;
pub const MAX_PHASE_STEP: f64 = PI / 4.0;
const MAX_PANEL_DEPTH: u32 = 40;
/// A sample this small relative to the largest one on the contour counts as a zero.
pub const ZERO_ON_CONTOUR: f64 = 1e-13;

/// Closed rectangle `[re.0, re.1] x [im.0, im.1]` in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBox {
    pub re: (f64, f64),
    pub im: (f64, f64),
}

impl SearchBox {
    pub fn new(re: (f64, f64), im: (f64, f64)) -> Result<Self> {
        let b = Self { re, im };
        if !(re.0.is_finite() && re.1.is_finite() && im.0.is_finite() && im.1.is_finite())
            || re.1 <= re.0
            || im.1 <= im.0
        {
            return Err(Error::InvalidArgument(format!(
                "search box must have positive area, got re {re:?} im {im:?}"
            )));
        }
        Ok(b)
    }

    pub fn width(&self) -> f64 {
        self.re.1 - self.re.0
    }

    pub fn height(&self) -> f64 {
        self.im.1 - self.im.0
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re.0 + self.re.1), 0.5 * (self.im.0 + self.im.1))
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn contains(&self, z: Complex64, slack: f64) -> bool {
        z.re >= self.re.0 - slack
            && z.re <= self.re.1 + slack
            && z.im >= self.im.0 - slack
            && z.im <= self.im.1 + slack
    }

    pub fn inflate(&self, by: f64) -> Self {
        Self {
            re: (self.re.0 - by, self.re.1 + by),
            im: (self.im.0 - by, self.im.1 + by),
        }
    }

    /// Splits along the longer side at `fraction` of its length.
    pub fn split(&self, fraction: f64) -> (Self, Self) {
        if self.width() >= self.height() {
            let x = self.re.0 + fraction * self.width();
            (
                Self {
                    re: (self.re.0, x),
                    im: self.im,
                },
                Self {
                    re: (x, self.re.1),
                    im: self.im,
                },
            )
        } else {
            let y = self.im.0 + fraction * self.height();
            (
                Self {
                    re: self.re,
                    im: (self.im.0, y),
                },
                Self {
                    re: self.re,
                    im: (y, self.im.1),
                },
            )
        }
    }

    /// Corners in counter-clockwise order starting from the lower left.
    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re.0, self.im.0),
            Complex64::new(self.re.1, self.im.0),
            Complex64::new(self.re.1, self.im.1),
            Complex64::new(self.re.0, self.im.1),
        ]
    }
}

/// Result of integrating along a box boundary.
#[derive(Debug, Clone, Copy)]
pub struct ContourData {
    /// Number of zeros inside, counted with multiplicity.
    pub winding: usize,
    /// `(1 / 2 pi i) * integral of z f'/f dz`; equals the sum of the enclosed zeros.
    pub first_moment: Complex64,
}

struct Sample {
    z: Complex64,
    f: Complex64,
    df: Complex64,
}

/// Winding number and first moment of `f` around `bx`.
///
/// `eval` returns `(f, f')`, both possibly multiplied by a common positive factor.
pub fn contour_data<F>(eval: &F, bx: &SearchBox, panels_per_edge: usize) -> Result<ContourData>
where
    F: Fn(Complex64) -> (Complex64, Complex64),
{
    let corners = bx.corners();
    let mut phase = 0.0;
    let mut moment = Complex64::new(0.0, 0.0);
    let mut largest: f64 = 0.0;
    let mut smallest = (f64::INFINITY, Complex64::new(0.0, 0.0));
    let n = panels_per_edge.max(1);

    let sample = |z: Complex64| {
        let (f, df) = eval(z);
        Sample { z, f, df }
    };

    for e in 0..4 {
        let (z0, z1) = (corners[e], corners[(e + 1) % 4]);
        let mut prev = sample(z0);
        for j in 1..=n {
            let next = sample(z0 + (z1 - z0) * (j as f64 / n as f64));
            for s in [&prev, &next] {
                if !s.f.is_finite() {
                    return Err(Error::NumericalSingularity(format!(
                        "non-finite secular value at {}",
                        s.z
                    )));
                }
                largest = largest.max(s.f.norm());
                if s.f.norm() < smallest.0 {
                    smallest = (s.f.norm(), s.z);
                }
            }
            let (dphi, dm) = panel(&sample, &prev, &next, 0, &mut smallest)?;
            phase += dphi;
            moment += dm;
            prev = next;
        }
    }
    if smallest.0 <= ZERO_ON_CONTOUR * largest {
        return Err(Error::RootOnContour(smallest.1));
    }
    let turns = phase / (2.0 * PI);
    let winding = turns.round();
    if (turns - winding).abs() > 0.1 || winding < 0.0 {
        return Err(Error::Isolation(format!(
            "non-integer winding {turns:.4} around {bx:?}"
        )));
    }
    Ok(ContourData {
        winding: winding as usize,
        first_moment: moment / Complex64::new(0.0, 2.0 * PI),
    })
}

/// Phase increment and `z f'/f dz` contribution across one panel, refined recursively.
fn panel<S>(
    sample: &S,
    a: &Sample,
    b: &Sample,
    depth: u32,
    smallest: &mut (f64, Complex64),
) -> Result<(f64, Complex64)>
where
    S: Fn(Complex64) -> Sample,
{
    let dphi = (b.f / a.f).arg();
    if dphi.abs() <= MAX_PHASE_STEP || depth >= MAX_PANEL_DEPTH {
        if depth >= MAX_PANEL_DEPTH && dphi.abs() > MAX_PHASE_STEP {
            return Err(Error::RootOnContour(0.5 * (a.z + b.z)));
        }
        let dz = b.z - a.z;
        let moment = 0.5 * (a.z * a.df / a.f + b.z * b.df / b.f) * dz;
        return Ok((dphi, moment));
    }
    let mid = sample(0.5 * (a.z + b.z));
    if mid.f.norm() < smallest.0 {
        *smallest = (mid.f.norm(), mid.z);
    }
    let (p1, m1) = panel(sample, a, &mid, depth + 1, smallest)?;
    let (p2, m2) = panel(sample, &mid, b, depth + 1, smallest)?;
    Ok((p1 + p2, m1 + m2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(roots: Vec<Complex64>) -> impl Fn(Complex64) -> (Complex64, Complex64) {
        move |z| {
            let f: Complex64 = roots.iter().map(|r| z - r).product();
            let df: Complex64 = (0..roots.len())
                .map(|i| {
                    roots
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, r)| z - r)
                        .product::<Complex64>()
                })
                .sum();
            (f, df)
        }
    }

    #[test]
    fn counts_polynomial_roots() {
        let roots = vec![
            Complex64::new(0.3, 0.2),
            Complex64::new(-0.5, -0.1),
            Complex64::new(0.1, 0.0),
            Complex64::new(3.0, 3.0),
        ];
        let f = poly(roots);
        let bx = SearchBox::new((-1.0, 1.0), (-1.0, 1.0)).unwrap();
        let data = contour_data(&f, &bx, 64).unwrap();
        assert_eq!(data.winding, 3);
        let sum = Complex64::new(-0.1, 0.1);
        assert!((data.first_moment - sum).norm() < 1e-3);
    }

    #[test]
    fn counts_multiplicity() {
        let f = poly(vec![Complex64::new(0.2, 0.1); 2]);
        let bx = SearchBox::new((-1.0, 1.0), (-1.0, 1.0)).unwrap();
        assert_eq!(contour_data(&f, &bx, 64).unwrap().winding, 2);
    }

    #[test]
    fn detects_root_on_edge() {
        let f = poly(vec![Complex64::new(1.0, 0.0)]);
        let bx = SearchBox::new((-1.0, 1.0), (-1.0, 1.0)).unwrap();
        assert!(matches!(
            contour_data(&f, &bx, 64),
            Err(Error::RootOnContour(_))
        ));
    }

    #[test]
    fn rejects_degenerate_box() {
        assert!(SearchBox::new((0.0, 0.0), (-1.0, 1.0)).is_err());
        assert!(SearchBox::new((1.0, 0.0), (-1.0, 1.0)).is_err());
    }

    #[test]
    fn split_is_along_longer_side() {
        let bx = SearchBox::new((0.0, 4.0), (0.0, 1.0)).unwrap();
        let (l, r) = bx.split(0.25);
        assert_eq!(l.re, (0.0, 1.0));
        assert_eq!(r.re, (1.0, 4.0));
        assert_eq!(l.im, bx.im);
    }
}

//! Compactly supported piecewise-constant potentials on `[-a, a]`.
//!
//! Outside the support the potential is identically zero; inside it is a
//! finite sequence of constant bands that exactly partition the interval.

use crate::error::{Error, Result};

/// Relative tolerance used to snap accumulated band edges onto `a`.
const EDGE_SNAP: f64 = 1e-12;

/// One constant band `[lo, hi]` carrying the potential `value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub lo: f64,
    pub hi: f64,
    pub value: f64,
}

impl Segment {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// A real piecewise-constant potential supported in `[-a, a]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    half_width: f64,
    segments: Vec<Segment>,
    even: bool,
}

impl PotentialSpec {
    /// Validates that `segments` partition `[-half_width, half_width]`.
    pub fn new(half_width: f64, segments: Vec<Segment>) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGeometry(format!(
                "half-width must be positive and finite, got {half_width}"
            )));
        }
        let (first, last) = match (segments.first(), segments.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(Error::InvalidGeometry("no segments".into())),
        };
        if first.lo != -half_width || last.hi != half_width {
            return Err(Error::InvalidGeometry(format!(
                "segments must span [-{half_width}, {half_width}], got [{}, {}]",
                first.lo, last.hi
            )));
        }
        for (i, s) in segments.iter().enumerate() {
            if !(s.value.is_finite() && s.lo.is_finite() && s.hi.is_finite()) {
                return Err(Error::InvalidGeometry(format!("segment {i} is not finite")));
            }
            if s.width() <= 0.0 {
                return Err(Error::InvalidGeometry(format!(
                    "segment {i} has nonpositive width {}",
                    s.width()
                )));
            }
        }
        for (i, pair) in segments.windows(2).enumerate() {
            if pair[0].hi != pair[1].lo {
                return Err(Error::InvalidGeometry(format!(
                    "segments {i} and {} do not abut ({} vs {})",
                    i + 1,
                    pair[0].hi,
                    pair[1].lo
                )));
            }
        }
        let even = mirror_symmetric(&segments);
        Ok(Self {
            half_width,
            segments,
            even,
        })
    }

    /// The zero potential on `[-a, a]`.
    pub fn free(half_width: f64) -> Result<Self> {
        make_square_well(half_width, 0.0)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// True iff `v(-x) = v(x)` (exact mirror symmetry of the band data).
    pub fn is_even(&self) -> bool {
        self.even
    }

    /// True iff every band value is exactly zero.
    pub fn is_free(&self) -> bool {
        self.segments.iter().all(|s| s.value == 0.0)
    }

    pub fn min_value(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| s.value)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| s.value)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Evaluates `v(x)`; interior band edges belong to the band on their left.
    pub fn value_at(&self, x: f64) -> f64 {
        if x.abs() > self.half_width {
            return 0.0;
        }
        self.segments
            .iter()
            .find(|s| x <= s.hi)
            .map_or(0.0, |s| s.value)
    }

    /// The reflected potential `x -> v(-x)`.
    pub fn mirrored(&self) -> Self {
        let segments = self
            .segments
            .iter()
            .rev()
            .map(|s| Segment {
                lo: -s.hi,
                hi: -s.lo,
                value: s.value,
            })
            .collect();
        Self {
            half_width: self.half_width,
            segments,
            even: self.even,
        }
    }

    /// Shifts every band by `v0`; the potential stays zero outside `[-a, a]`.
    pub fn add_constant(&self, v0: f64) -> Self {
        let segments = self
            .segments
            .iter()
            .map(|s| Segment {
                value: s.value + v0,
                ..*s
            })
            .collect();
        Self {
            half_width: self.half_width,
            segments,
            even: self.even,
        }
    }
}

fn mirror_symmetric(segments: &[Segment]) -> bool {
    segments
        .iter()
        .zip(segments.iter().rev())
        .all(|(l, r)| l.lo == -r.hi && l.hi == -r.lo && l.value == r.value)
}

/// Square well `v(x) = -depth` on `[-a, a]`.
///
/// `depth` is a signed number: the band value is exactly `-depth`.
pub fn make_square_well(a: f64, depth: f64) -> Result<PotentialSpec> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::InvalidGeometry(format!(
            "square well half-width must be positive, got {a}"
        )));
    }
    PotentialSpec::new(
        a,
        vec![Segment {
            lo: -a,
            hi: a,
            value: -depth,
        }],
    )
}

/// Even multi-step family parametrized by band widths and integrated strengths.
///
/// Band `j` occupies `x_{j-1} <= |x| <= x_j` with `x_0 = 0`, `x_j = x_{j-1} + widths[j]`,
/// and carries the height `strengths[j] / widths[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFamilySpec {
    pub half_width: f64,
    pub widths: Vec<f64>,
    pub strengths: Vec<f64>,
}

impl StepFamilySpec {
    /// Three bands with the middle one filling the gap: inner band at the origin,
    /// outer band touching the endpoints.
    pub fn three_band(half_width: f64, inner: f64, outer: f64, strengths: [f64; 3]) -> Self {
        Self {
            half_width,
            widths: vec![inner, half_width - inner - outer, outer],
            strengths: strengths.to_vec(),
        }
    }

    pub fn heights(&self) -> Vec<f64> {
        self.strengths
            .iter()
            .zip(&self.widths)
            .map(|(b, e)| b / e)
            .collect()
    }
}

pub fn make_steps(spec: &StepFamilySpec) -> Result<PotentialSpec> {
    let a = spec.half_width;
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::InvalidGeometry(format!(
            "half-width must be positive, got {a}"
        )));
    }
    if spec.widths.is_empty() {
        return Err(Error::InvalidGeometry("no bands".into()));
    }
    if spec.widths.len() != spec.strengths.len() {
        return Err(Error::InvalidGeometry(format!(
            "{} widths but {} strengths",
            spec.widths.len(),
            spec.strengths.len()
        )));
    }
    if let Some((j, w)) = spec
        .widths
        .iter()
        .enumerate()
        .find(|(_, w)| !(w.is_finite() && **w > 0.0))
    {
        return Err(Error::InvalidGeometry(format!(
            "band {} has nonpositive width {w}; its height would divide by zero",
            j + 1
        )));
    }

    // Edges x_1..x_N on the positive half-axis.
    let mut edges = Vec::with_capacity(spec.widths.len());
    let mut x = 0.0;
    for w in &spec.widths {
        x += w;
        edges.push(x);
    }
    let total = *edges.last().unwrap();
    if total > a * (1.0 + EDGE_SNAP) {
        return Err(Error::InvalidGeometry(format!(
            "band widths sum to {total}, exceeding the half-width {a}"
        )));
    }
    if (total - a).abs() <= a * EDGE_SNAP {
        *edges.last_mut().unwrap() = a;
    }

    let mut bands: Vec<(f64, f64)> = edges.iter().copied().zip(spec.heights()).collect();
    if *edges.last().unwrap() < a {
        bands.push((a, 0.0));
    }

    let mut segments = Vec::with_capacity(2 * bands.len() - 1);
    // Left half, from -a towards the origin.
    for j in (1..bands.len()).rev() {
        segments.push(Segment {
            lo: -bands[j].0,
            hi: -bands[j - 1].0,
            value: bands[j].1,
        });
    }
    segments.push(Segment {
        lo: -bands[0].0,
        hi: bands[0].0,
        value: bands[0].1,
    });
    for j in 1..bands.len() {
        segments.push(Segment {
            lo: bands[j - 1].0,
            hi: bands[j].0,
            value: bands[j].1,
        });
    }
    PotentialSpec::new(a, segments)
}

pub fn add_constant(p: &PotentialSpec, v0: f64) -> PotentialSpec {
    p.add_constant(v0)
}

pub fn value_at(p: &PotentialSpec, x: f64) -> f64 {
    p.value_at(x)
}

#![allow(dead_code)]

use std::f64::consts::FRAC_PI_4;

use proptest::prelude::*;
use ptlab_core::{make_steps, PotentialSpec, Segment, StepFamilySpec};

pub fn fig2_spec(beta1: f64) -> StepFamilySpec {
    StepFamilySpec::three_band(FRAC_PI_4, 0.2, 0.5, [beta1, 0.0, -100.0])
}

pub fn fig2(beta1: f64) -> PotentialSpec {
    make_steps(&fig2_spec(beta1)).unwrap()
}

/// Builds a potential on `[-a, a]` from relative band widths and heights.
pub fn from_parts(a: f64, weights: &[f64], values: &[f64]) -> PotentialSpec {
    let total: f64 = weights.iter().sum();
    let mut x = -a;
    let mut segments = Vec::with_capacity(weights.len());
    for (i, (w, v)) in weights.iter().zip(values).enumerate() {
        let hi = if i + 1 == weights.len() {
            a
        } else {
            x + 2.0 * a * w / total
        };
        segments.push(Segment {
            lo: x,
            hi,
            value: *v,
        });
        x = hi;
    }
    PotentialSpec::new(a, segments).unwrap()
}

/// Mirrors relative half-axis bands into an even potential.
pub fn even_from_parts(a: f64, weights: &[f64], values: &[f64]) -> PotentialSpec {
    let total: f64 = weights.iter().sum();
    let spec = StepFamilySpec {
        half_width: a,
        widths: weights.iter().map(|w| a * w / total).collect(),
        strengths: weights
            .iter()
            .zip(values)
            .map(|(w, v)| v * a * w / total)
            .collect(),
    };
    make_steps(&spec).unwrap()
}

pub fn arb_potential() -> impl Strategy<Value = PotentialSpec> {
    (0.2f64..2.0, 1usize..6).prop_flat_map(|(a, n)| {
        (
            prop::collection::vec(0.1f64..1.0, n),
            prop::collection::vec(-60.0f64..60.0, n),
        )
            .prop_map(move |(w, v)| from_parts(a, &w, &v))
    })
}

pub fn arb_even_potential() -> impl Strategy<Value = PotentialSpec> {
    (0.3f64..1.5, 1usize..4).prop_flat_map(|(a, n)| {
        (
            prop::collection::vec(0.1f64..1.0, n),
            prop::collection::vec(-40.0f64..40.0, n),
        )
            .prop_map(move |(w, v)| even_from_parts(a, &w, &v))
    })
}

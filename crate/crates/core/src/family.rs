//! One-parameter families of potentials `theta -> v_theta`.

use crate::error::{Error, Result};
use crate::potential::{make_square_well, make_steps, PotentialSpec, StepFamilySpec};

pub trait PotentialFamily: Sync {
    fn at(&self, theta: f64) -> Result<PotentialSpec>;

    /// Name of the swept parameter, used in output headers.
    fn parameter_name(&self) -> &str {
        "theta"
    }
}

impl<F> PotentialFamily for F
where
    F: Fn(f64) -> Result<PotentialSpec> + Sync,
{
    fn at(&self, theta: f64) -> Result<PotentialSpec> {
        self(theta)
    }
}

/// Step potentials with one strength `beta[index]` replaced by `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepStrengthFamily {
    base: StepFamilySpec,
    index: usize,
    name: String,
}

impl StepStrengthFamily {
    pub fn new(base: StepFamilySpec, index: usize) -> Result<Self> {
        if index >= base.strengths.len() {
            return Err(Error::InvalidArgument(format!(
                "strength index {index} out of range for {} bands",
                base.strengths.len()
            )));
        }
        make_steps(&base)?;
        Ok(Self {
            name: format!("beta{}", index + 1),
            base,
            index,
        })
    }

    pub fn base(&self) -> &StepFamilySpec {
        &self.base
    }
}

impl PotentialFamily for StepStrengthFamily {
    fn at(&self, theta: f64) -> Result<PotentialSpec> {
        let mut spec = self.base.clone();
        spec.strengths[self.index] = theta;
        make_steps(&spec)
    }

    fn parameter_name(&self) -> &str {
        &self.name
    }
}

/// Square wells of fixed half-width with `theta` as the depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareWellDepthFamily {
    pub half_width: f64,
}

impl PotentialFamily for SquareWellDepthFamily {
    fn at(&self, theta: f64) -> Result<PotentialSpec> {
        make_square_well(self.half_width, theta)
    }

    fn parameter_name(&self) -> &str {
        "depth"
    }
}

/// A fixed potential shifted by `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftFamily {
    pub base: PotentialSpec,
}

impl PotentialFamily for ShiftFamily {
    fn at(&self, theta: f64) -> Result<PotentialSpec> {
        Ok(self.base.add_constant(theta))
    }

    fn parameter_name(&self) -> &str {
        "v0"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn strength_family_replaces_one_band() {
        let base = StepFamilySpec::three_band(FRAC_PI_4, 0.2, 0.5, [-90.0, 0.0, -100.0]);
        let fam = StepStrengthFamily::new(base, 0).unwrap();
        assert_eq!(fam.parameter_name(), "beta1");
        let p = fam.at(-120.0).unwrap();
        assert_eq!(p.value_at(0.0), -600.0);
        assert_eq!(p.value_at(0.7), -200.0);
    }

    #[test]
    fn strength_index_checked() {
        let base = StepFamilySpec::three_band(FRAC_PI_4, 0.2, 0.5, [-90.0, 0.0, -100.0]);
        assert!(StepStrengthFamily::new(base, 3).is_err());
    }

    #[test]
    fn closures_are_families() {
        let fam = |d: f64| make_square_well(1.0, d);
        assert_eq!(fam.at(2.0).unwrap().value_at(0.0), -2.0);
        let shift = ShiftFamily {
            base: make_square_well(1.0, 2.0).unwrap(),
        };
        assert_eq!(shift.at(0.5).unwrap().value_at(0.0), -1.5);
    }
}

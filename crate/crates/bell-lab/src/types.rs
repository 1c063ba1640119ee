//! Shared domain types: angles, apparatus parameters, probability containers
//! and inequality reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Slack for floating-point noise when validating probabilities.
const PROB_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("{name} = {value} is outside [{min}, {max}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("{name} sum {sum} exceeds 1")]
    SumExceedsOne { name: &'static str, sum: f64 },
    #[error("{0}")]
    Invalid(String),
}

/// Polarizer / phase orientation, stored in degrees.
///
/// Degrees are the canonical unit so that the canonical settings 0, 30 and
/// 60 are represented exactly; conversion to radians happens at trig call
/// sites.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Angle {
    degrees: f64,
}

impl Angle {
    pub const fn from_degrees(degrees: f64) -> Self {
        Angle { degrees }
    }

    pub fn degrees(self) -> f64 {
        self.degrees
    }

    pub fn radians(self) -> f64 {
        self.degrees.to_radians()
    }

    /// Normalizes into [0, 360). Idempotent.
    pub fn normalized(self) -> Self {
        let d = self.degrees.rem_euclid(360.0);
        // rem_euclid can return 360.0 for tiny negative inputs.
        Angle {
            degrees: if d >= 360.0 { d - 360.0 } else { d },
        }
    }

    /// Non-negative separation |self − other| in degrees.
    pub fn separation(self, other: Angle) -> Angle {
        Angle {
            degrees: (self.degrees - other.degrees).abs(),
        }
    }
}

/// Prism transmittances for one arm: transmitted path (T) and reflected
/// path (R), each for light polarized parallel / perpendicular to the
/// channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmOptics {
    t_par: f64,
    t_perp: f64,
    r_par: f64,
    r_perp: f64,
}

impl ArmOptics {
    pub fn new(t_par: f64, t_perp: f64, r_par: f64, r_perp: f64) -> Result<Self, DomainError> {
        for (name, v) in [
            ("t_par", t_par),
            ("t_perp", t_perp),
            ("r_par", r_par),
            ("r_perp", r_perp),
        ] {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(DomainError::OutOfRange {
                    name,
                    value: v,
                    min: 0.0,
                    max: 1.0,
                });
            }
        }
        Ok(ArmOptics {
            t_par,
            t_perp,
            r_par,
            r_perp,
        })
    }

    /// Lossless polarizer: everything parallel is transmitted, nothing
    /// perpendicular leaks.
    pub fn ideal() -> Self {
        ArmOptics {
            t_par: 1.0,
            t_perp: 0.0,
            r_par: 1.0,
            r_perp: 0.0,
        }
    }

    pub fn t_plus(&self) -> f64 {
        self.t_par + self.t_perp
    }

    pub fn t_minus(&self) -> f64 {
        self.t_par - self.t_perp
    }

    pub fn r_plus(&self) -> f64 {
        self.r_par + self.r_perp
    }

    pub fn r_minus(&self) -> f64 {
        self.r_par - self.r_perp
    }
}

/// Detector and collection-optics parameters for both arms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Apparatus {
    eta: f64,
    phi: Angle,
    arm1: ArmOptics,
    arm2: ArmOptics,
    use_depolarization: bool,
}

impl Apparatus {
    pub fn new(
        eta: f64,
        phi: Angle,
        arm1: ArmOptics,
        arm2: ArmOptics,
        use_depolarization: bool,
    ) -> Result<Self, DomainError> {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(DomainError::OutOfRange {
                name: "eta",
                value: eta,
                min: 0.0,
                max: 1.0,
            });
        }
        if !(phi.degrees() > 0.0 && phi.degrees() <= 180.0) {
            return Err(DomainError::OutOfRange {
                name: "phi",
                value: phi.degrees(),
                min: 0.0,
                max: 180.0,
            });
        }
        Ok(Apparatus {
            eta,
            phi,
            arm1,
            arm2,
            use_depolarization,
        })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn phi(&self) -> Angle {
        self.phi
    }

    pub fn arm1(&self) -> &ArmOptics {
        &self.arm1
    }

    pub fn arm2(&self) -> &ArmOptics {
        &self.arm2
    }

    pub fn use_depolarization(&self) -> bool {
        self.use_depolarization
    }
}

/// The four coincidence probabilities p^{++}, p^{+-}, p^{-+}, p^{--} for one
/// setting pair. Undetected fractions are implicit: 1 − (pp+pm+mp+mm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointProbabilities {
    pp: f64,
    pm: f64,
    mp: f64,
    mm: f64,
}

impl JointProbabilities {
    pub fn new(pp: f64, pm: f64, mp: f64, mm: f64) -> Result<Self, DomainError> {
        for (name, v) in [("pp", pp), ("pm", pm), ("mp", mp), ("mm", mm)] {
            if !v.is_finite() || v < -PROB_EPS || v > 1.0 + PROB_EPS {
                return Err(DomainError::OutOfRange {
                    name,
                    value: v,
                    min: 0.0,
                    max: 1.0,
                });
            }
        }
        let sum = pp + pm + mp + mm;
        if sum > 1.0 + PROB_EPS {
            return Err(DomainError::SumExceedsOne {
                name: "joint probabilities",
                sum,
            });
        }
        Ok(JointProbabilities { pp, pm, mp, mm })
    }

    pub fn pp(&self) -> f64 {
        self.pp
    }

    pub fn pm(&self) -> f64 {
        self.pm
    }

    pub fn mp(&self) -> f64 {
        self.mp
    }

    pub fn mm(&self) -> f64 {
        self.mm
    }

    /// Total coincidence probability (the K of the aligned-polarizer
    /// normalization when evaluated at 0 separation).
    pub fn sum(&self) -> f64 {
        self.pp + self.pm + self.mp + self.mm
    }

    /// Expected value pp − pm − mp + mm.
    pub fn expectation(&self) -> f64 {
        self.pp - self.pm - self.mp + self.mm
    }
}

/// Single-arm detection probabilities p^+ and p^-.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinglesProbabilities {
    p_plus: f64,
    p_minus: f64,
}

impl SinglesProbabilities {
    pub fn new(p_plus: f64, p_minus: f64) -> Result<Self, DomainError> {
        for (name, v) in [("p_plus", p_plus), ("p_minus", p_minus)] {
            if !v.is_finite() || v < -PROB_EPS || v > 1.0 + PROB_EPS {
                return Err(DomainError::OutOfRange {
                    name,
                    value: v,
                    min: 0.0,
                    max: 1.0,
                });
            }
        }
        let sum = p_plus + p_minus;
        if sum > 1.0 + PROB_EPS {
            return Err(DomainError::SumExceedsOne {
                name: "singles probabilities",
                sum,
            });
        }
        Ok(SinglesProbabilities { p_plus, p_minus })
    }

    pub fn p_plus(&self) -> f64 {
        self.p_plus
    }

    pub fn p_minus(&self) -> f64 {
        self.p_minus
    }

    pub fn sum(&self) -> f64 {
        self.p_plus + self.p_minus
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InequalityKind {
    #[serde(rename = "bell1965")]
    Bell1965,
    #[serde(rename = "chsh")]
    Chsh,
    #[serde(rename = "ardehali-ideal")]
    ArdehaliIdeal,
    #[serde(rename = "ardehali-strong")]
    ArdehaliStrong,
    #[serde(rename = "ch")]
    Ch,
}

impl InequalityKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            InequalityKind::Bell1965 => "bell1965",
            InequalityKind::Chsh => "chsh",
            InequalityKind::ArdehaliIdeal => "ardehali-ideal",
            InequalityKind::ArdehaliStrong => "ardehali-strong",
            InequalityKind::Ch => "ch",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LabeledAngle {
    pub label: String,
    pub deg: f64,
}

/// Outcome of one inequality evaluation.
///
/// For positive bounds `violation_factor = lhs / bound`; for the CH zero
/// bound it is the raw excess `lhs − bound`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InequalityReport {
    pub inequality: InequalityKind,
    pub lhs: f64,
    pub bound: f64,
    pub violation_factor: f64,
    pub settings: Vec<LabeledAngle>,
    pub inputs: BTreeMap<String, f64>,
}

impl InequalityReport {
    pub fn new(
        inequality: InequalityKind,
        lhs: f64,
        bound: f64,
        inputs: BTreeMap<String, f64>,
    ) -> Self {
        let violation_factor = if bound != 0.0 { lhs / bound } else { lhs };
        InequalityReport {
            inequality,
            lhs,
            bound,
            violation_factor,
            settings: Vec::new(),
            inputs,
        }
    }

    pub fn with_settings(mut self, settings: Vec<LabeledAngle>) -> Self {
        self.settings = settings;
        self
    }

    pub fn violated(&self) -> bool {
        self.lhs > self.bound
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn expectation_examples() {
        let j = JointProbabilities::new(0.5, 0.0, 0.0, 0.5).unwrap();
        assert_eq!(j.expectation(), 1.0);
        let j = JointProbabilities::new(0.25, 0.25, 0.25, 0.25).unwrap();
        assert_eq!(j.expectation(), 0.0);
        // 30 degree separation: cos^2(30)/2 and sin^2(30)/2 cells give cos(60).
        let c = 30f64.to_radians().cos().powi(2) / 2.0;
        let s = 30f64.to_radians().sin().powi(2) / 2.0;
        let j = JointProbabilities::new(c, s, s, c).unwrap();
        assert!((j.expectation() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn joint_validation_rejects_bad_cells() {
        assert!(JointProbabilities::new(1.1, 0.0, 0.0, 0.0).is_err());
        assert!(JointProbabilities::new(-0.1, 0.0, 0.0, 0.0).is_err());
        assert!(JointProbabilities::new(0.5, 0.5, 0.5, 0.5).is_err());
        assert!(JointProbabilities::new(f64::NAN, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn singles_validation() {
        assert!(SinglesProbabilities::new(0.6, 0.6).is_err());
        assert!(SinglesProbabilities::new(0.5, 0.5).is_ok());
    }

    #[test]
    fn arm_optics_bounds() {
        assert!(ArmOptics::new(1.0, 0.0, 1.0, 0.0).is_ok());
        assert!(ArmOptics::new(1.2, 0.0, 1.0, 0.0).is_err());
        let a = ArmOptics::ideal();
        assert_eq!(a.t_plus(), 1.0);
        assert_eq!(a.t_minus(), 1.0);
        // |T-| <= T+ <= 2 for any valid optics
        let a = ArmOptics::new(0.3, 0.8, 0.2, 0.9).unwrap();
        assert!(a.t_minus().abs() <= a.t_plus());
        assert!(a.t_plus() <= 2.0);
    }

    #[test]
    fn apparatus_rejects_bad_eta_phi() {
        let arm = ArmOptics::ideal();
        assert!(Apparatus::new(0.0, Angle::from_degrees(30.0), arm, arm, false).is_err());
        assert!(Apparatus::new(1.1, Angle::from_degrees(30.0), arm, arm, false).is_err());
        assert!(Apparatus::new(0.9, Angle::from_degrees(0.0), arm, arm, false).is_err());
        assert!(Apparatus::new(0.9, Angle::from_degrees(181.0), arm, arm, false).is_err());
    }

    #[test]
    fn violation_factor_convention() {
        let r = InequalityReport::new(InequalityKind::Bell1965, 1.5, 1.0, BTreeMap::new());
        assert_eq!(r.violation_factor, 1.5);
        assert!(r.violated());
        let r = InequalityReport::new(InequalityKind::Ch, 0.2, 0.0, BTreeMap::new());
        assert_eq!(r.violation_factor, 0.2);
        assert!(r.violated());
    }

    proptest! {
        #[test]
        fn normalization_idempotent(d in -1e4f64..1e4) {
            let a = Angle::from_degrees(d).normalized();
            let b = a.normalized();
            prop_assert!(a.degrees() >= 0.0 && a.degrees() < 360.0);
            prop_assert_eq!(a.degrees(), b.degrees());
        }

        #[test]
        fn separation_non_negative(m in -720f64..720.0, n in -720f64..720.0) {
            prop_assert!(Angle::from_degrees(m).separation(Angle::from_degrees(n)).degrees() >= 0.0);
        }

        #[test]
        fn expectation_swap_invariant(
            pp in 0f64..0.25, pm in 0f64..0.25, mp in 0f64..0.25, mm in 0f64..0.25
        ) {
            let j = JointProbabilities::new(pp, pm, mp, mm).unwrap();
            let swapped = JointProbabilities::new(mm, mp, pm, pp).unwrap();
            prop_assert!((j.expectation() - swapped.expectation()).abs() < 1e-15);
        }

        #[test]
        fn expectation_bounded_by_sum(
            pp in 0f64..0.25, pm in 0f64..0.25, mp in 0f64..0.25, mm in 0f64..0.25
        ) {
            let j = JointProbabilities::new(pp, pm, mp, mm).unwrap();
            prop_assert!(j.expectation().abs() <= j.sum() + 1e-15);
        }
    }
}

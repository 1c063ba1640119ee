//! Closed-form quantum predictions for the J=1 -> J=0 atomic-cascade
//! two-photon experiment, ideal and real (finite aperture, lossy prisms)
//! branches. Detectors are back-to-back throughout.

use std::f64::consts::PI;

use crate::types::{
    Angle, Apparatus, DomainError, JointProbabilities, SinglesProbabilities,
};

/// Solid angle subtended by a detector of half-angle `phi`, in steradians.
pub fn solid_angle(phi: Angle) -> Result<f64, DomainError> {
    check_phi(phi)?;
    Ok(2.0 * PI * (1.0 - phi.radians().cos()))
}

/// Angular correlation g for back-to-back detectors of half-angle `phi`:
/// 1 + (1/8) cos^2(phi) (1 + cos phi)^2.
pub fn angular_correlation(phi: Angle) -> Result<f64, DomainError> {
    check_phi(phi)?;
    let c = phi.radians().cos();
    Ok(1.0 + 0.125 * c * c * (1.0 + c) * (1.0 + c))
}

/// Depolarization factor F for back-to-back detectors and small `phi`:
/// 1 − (2/3)(1 − cos phi)^2.
///
/// The closed form is a small-aperture approximation; [`depolarization_is_approximate`]
/// reports whether a given half-angle is outside the comfortable regime.
pub fn depolarization(phi: Angle) -> f64 {
    let c = phi.radians().cos();
    1.0 - (2.0 / 3.0) * (1.0 - c) * (1.0 - c)
}

/// True when `phi` is large enough that the small-aperture closed form for F
/// should be treated as indicative only.
pub fn depolarization_is_approximate(phi: Angle) -> bool {
    phi.degrees() > 30.0
}

/// Predictions for an ideal experiment at polarizer separation `theta`.
#[derive(Debug, Clone, Copy)]
pub struct IdealPrediction {
    pub e: f64,
    pub joints: JointProbabilities,
    pub singles: SinglesProbabilities,
}

/// Ideal-apparatus predictions: E = cos 2θ, pp = mm = cos²θ/2,
/// pm = mp = sin²θ/2, singles 1/2.
pub fn ideal_predictions(theta: Angle) -> IdealPrediction {
    let t = theta.radians();
    let c = t.cos().powi(2) / 2.0;
    let s = t.sin().powi(2) / 2.0;
    IdealPrediction {
        e: (2.0 * t).cos(),
        joints: JointProbabilities::new(c, s, s, c)
            .expect("ideal joints are probabilities by construction"),
        singles: SinglesProbabilities::new(0.5, 0.5)
            .expect("ideal singles are 1/2"),
    }
}

/// Joint detection probabilities for the real apparatus at polarizer
/// orientations `a`, `b`:
///
/// ```text
/// pp = eta^2 (Omega/8pi)^2 g [ T+1 T+2 + T-1 T-2 F cos 2(a-b) ]
/// mm = eta^2 (Omega/8pi)^2 g [ R+1 R+2 + R-1 R-2 F cos 2(a-b) ]
/// pm = eta^2 (Omega/8pi)^2 g [ T+1 R+2 - T-1 R-2 F cos 2(a-b) ]
/// mp = eta^2 (Omega/8pi)^2 g [ R+1 T+2 - R-1 T-2 F cos 2(a-b) ]
/// ```
///
/// with F = 1 unless the apparatus enables the depolarization correction.
pub fn real_joint(
    apparatus: &Apparatus,
    a: Angle,
    b: Angle,
) -> Result<JointProbabilities, DomainError> {
    let omega = solid_angle(apparatus.phi())?;
    let g = angular_correlation(apparatus.phi())?;
    let f = if apparatus.use_depolarization() {
        depolarization(apparatus.phi())
    } else {
        1.0
    };
    let prefactor = apparatus.eta().powi(2) * (omega / (8.0 * PI)).powi(2) * g;
    let c = (2.0 * (a.radians() - b.radians())).cos();

    let a1 = apparatus.arm1();
    let a2 = apparatus.arm2();
    let lines = [
        ("pp", a1.t_plus() * a2.t_plus() + a1.t_minus() * a2.t_minus() * f * c),
        ("mm", a1.r_plus() * a2.r_plus() + a1.r_minus() * a2.r_minus() * f * c),
        ("pm", a1.t_plus() * a2.r_plus() - a1.t_minus() * a2.r_minus() * f * c),
        ("mp", a1.r_plus() * a2.t_plus() - a1.r_minus() * a2.t_minus() * f * c),
    ];
    for (name, bracket) in &lines {
        if *bracket < 0.0 {
            return Err(DomainError::Invalid(format!(
                "joint probability line {name} evaluates negative ({bracket})"
            )));
        }
    }
    JointProbabilities::new(
        prefactor * lines[0].1,
        prefactor * lines[2].1,
        prefactor * lines[3].1,
        prefactor * lines[1].1,
    )
}

/// Singles for the real apparatus: p+ = p- = eta * Omega / 8pi, independent
/// of polarizer orientation and prism transmittances.
pub fn real_singles(apparatus: &Apparatus) -> SinglesProbabilities {
    let omega = solid_angle(apparatus.phi()).expect("apparatus phi validated at construction");
    let p = apparatus.eta() * omega / (8.0 * PI);
    SinglesProbabilities::new(p, p).expect("singles bounded by eta/2")
}

fn check_phi(phi: Angle) -> Result<(), DomainError> {
    if !(phi.degrees() > 0.0 && phi.degrees() <= 180.0) {
        return Err(DomainError::OutOfRange {
            name: "phi",
            value: phi.degrees(),
            min: 0.0,
            max: 180.0,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::ArmOptics;
    use proptest::prelude::*;

    fn deg(d: f64) -> Angle {
        Angle::from_degrees(d)
    }

    fn ideal_apparatus(eta: f64, phi_deg: f64, depol: bool) -> Apparatus {
        Apparatus::new(eta, deg(phi_deg), ArmOptics::ideal(), ArmOptics::ideal(), depol).unwrap()
    }

    /// Independent oracle: spherical-cap area by midpoint quadrature of
    /// 2*pi*sin(t) dt over [0, phi].
    fn cap_area_quadrature(phi_rad: f64, n: usize) -> f64 {
        let h = phi_rad / n as f64;
        (0..n)
            .map(|i| 2.0 * PI * ((i as f64 + 0.5) * h).sin() * h)
            .sum()
    }

    #[test]
    fn solid_angle_examples() {
        assert!((solid_angle(deg(180.0)).unwrap() - 4.0 * PI).abs() < 1e-12);
        assert!((solid_angle(deg(90.0)).unwrap() - 2.0 * PI).abs() < 1e-12);
        let direct = solid_angle(deg(30.0)).unwrap();
        assert!((direct - 0.8418).abs() < 1e-4);
        let quad = cap_area_quadrature(30f64.to_radians(), 200_000);
        assert!((direct - quad).abs() < 1e-9);
    }

    #[test]
    fn solid_angle_rejects_out_of_range() {
        assert!(solid_angle(deg(0.0)).is_err());
        assert!(solid_angle(deg(180.1)).is_err());
    }

    #[test]
    fn angular_correlation_examples() {
        // phi -> 0 limit is 1 + 1/8 * 1 * 4 = 1.5
        assert!((angular_correlation(deg(1e-9)).unwrap() - 1.5).abs() < 1e-12);
        assert!((angular_correlation(deg(90.0)).unwrap() - 1.0).abs() < 1e-15);
        let c30 = 30f64.to_radians().cos();
        let expected = 1.0 + 0.125 * 0.75 * (1.0 + c30) * (1.0 + c30);
        let got = angular_correlation(deg(30.0)).unwrap();
        assert!((got - expected).abs() < 1e-15);
        assert!((got - 1.3265).abs() < 1e-4);
    }

    #[test]
    fn depolarization_examples() {
        assert_eq!(depolarization(deg(0.0)), 1.0);
        let f30 = depolarization(deg(30.0));
        assert!(f30 > 0.985 && f30 < 0.990);
        assert!((depolarization(deg(60.0)) - (1.0 - (2.0 / 3.0) * 0.25)).abs() < 1e-15);
        assert!(!depolarization_is_approximate(deg(30.0)));
        assert!(depolarization_is_approximate(deg(60.0)));
    }

    #[test]
    fn ideal_prediction_examples() {
        let p = ideal_predictions(deg(0.0));
        assert!((p.e - 1.0).abs() < 1e-15);
        assert!((p.joints.pp() - 0.5).abs() < 1e-15);
        assert!(p.joints.pm().abs() < 1e-15);

        let p = ideal_predictions(deg(45.0));
        assert!(p.e.abs() < 1e-15);
        for v in [p.joints.pp(), p.joints.pm(), p.joints.mp(), p.joints.mm()] {
            assert!((v - 0.25).abs() < 1e-15);
        }

        let p = ideal_predictions(deg(30.0));
        assert!((p.e - 0.5).abs() < 1e-15);
        assert!((p.joints.pp() - 0.375).abs() < 1e-15);
        assert!((p.joints.pm() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn real_joint_ideal_prisms_aligned() {
        let app = ideal_apparatus(1.0, 30.0, false);
        let omega = solid_angle(deg(30.0)).unwrap();
        let g = angular_correlation(deg(30.0)).unwrap();
        let j = real_joint(&app, deg(10.0), deg(10.0)).unwrap();
        let expected = 2.0 * (omega / (8.0 * PI)).powi(2) * g;
        assert!((j.pp() - expected).abs() < 1e-15);
        assert!((j.mm() - expected).abs() < 1e-15);
        assert!(j.pm().abs() < 1e-15);
        assert!(j.mp().abs() < 1e-15);
    }

    #[test]
    fn real_joint_cosine_vanishes_at_45() {
        let arm = ArmOptics::new(0.9, 0.1, 0.85, 0.05).unwrap();
        let app = Apparatus::new(0.8, deg(20.0), arm, arm, true).unwrap();
        let omega = solid_angle(deg(20.0)).unwrap();
        let g = angular_correlation(deg(20.0)).unwrap();
        let pref = 0.8f64.powi(2) * (omega / (8.0 * PI)).powi(2) * g;
        let j = real_joint(&app, deg(45.0), deg(0.0)).unwrap();
        assert!((j.pp() - pref * arm.t_plus() * arm.t_plus()).abs() < 1e-15);
    }

    #[test]
    fn real_joint_frozen_oracle_value() {
        // eta = 0.9, phi = 30deg, ideal prisms, aligned, with depolarization:
        // pp = 0.81 * (Omega/8pi)^2 * g * (1 + F), evaluated independently.
        let app = ideal_apparatus(0.9, 30.0, true);
        let omega = solid_angle(deg(30.0)).unwrap();
        let g = angular_correlation(deg(30.0)).unwrap();
        let f = depolarization(deg(30.0));
        let oracle = 0.81 * (omega / (8.0 * PI)).powi(2) * g * (1.0 + f);
        let j = real_joint(&app, deg(0.0), deg(0.0)).unwrap();
        assert!((j.pp() - oracle).abs() < 1e-15);
        // magnitude sanity against the hand-computed figure
        assert!((oracle - 0.81 * (0.8418 / (8.0 * PI)).powi(2) * 1.3265 * (1.0 + 0.988)).abs() < 1e-5);
    }

    #[test]
    fn real_singles_examples() {
        let app = ideal_apparatus(1.0, 180.0, false);
        let s = real_singles(&app);
        assert!((s.p_plus() - 0.5).abs() < 1e-12);

        let app = ideal_apparatus(0.9, 30.0, false);
        let s = real_singles(&app);
        assert!((s.p_plus() - 0.03014).abs() < 1e-5);

        let app = ideal_apparatus(1e-12, 30.0, false);
        assert!(real_singles(&app).p_plus() < 1e-12);
    }

    #[test]
    fn ideal_ratio_recovers_cos_2theta() {
        let app = ideal_apparatus(0.7, 25.0, false);
        for t in [0.0, 10.0, 30.0, 45.0, 60.0, 77.0, 90.0] {
            let j = real_joint(&app, deg(t), deg(0.0)).unwrap();
            let e = j.expectation() / j.sum();
            assert!((e - (2.0 * t.to_radians()).cos()).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn rotation_symmetry(
            a in 0f64..360.0, b in 0f64..360.0, delta in -360f64..360.0,
            eta in 0.1f64..1.0, phi in 5f64..90.0,
            t_par in 0.5f64..1.0, t_perp in 0f64..0.3,
            r_par in 0.5f64..1.0, r_perp in 0f64..0.3,
        ) {
            let arm = ArmOptics::new(t_par, t_perp, r_par, r_perp).unwrap();
            let app = Apparatus::new(eta, deg(phi), arm, arm, true).unwrap();
            let j1 = real_joint(&app, deg(a), deg(b)).unwrap();
            let j2 = real_joint(&app, deg(a + delta), deg(b + delta)).unwrap();
            prop_assert!((j1.pp() - j2.pp()).abs() < 1e-12);
            prop_assert!((j1.pm() - j2.pm()).abs() < 1e-12);
            prop_assert!((j1.mp() - j2.mp()).abs() < 1e-12);
            prop_assert!((j1.mm() - j2.mm()).abs() < 1e-12);
        }

        #[test]
        fn real_joint_never_negative_for_valid_optics(
            a in 0f64..180.0,
            eta in 0.1f64..1.0, phi in 1f64..90.0,
            t_par in 0f64..1.0, t_perp in 0f64..1.0,
            r_par in 0f64..1.0, r_perp in 0f64..1.0,
        ) {
            let arm = ArmOptics::new(t_par, t_perp, r_par, r_perp).unwrap();
            let app = Apparatus::new(eta, deg(phi), arm, arm, true).unwrap();
            // t_perp >= 0 forces |T-| <= T+ so no Eq-line can go negative
            let j = real_joint(&app, deg(a), deg(0.0)).unwrap();
            prop_assert!(j.pp() >= 0.0 && j.pm() >= 0.0 && j.mp() >= 0.0 && j.mm() >= 0.0);
        }

        #[test]
        fn ideal_joints_sum_to_one(theta in 0f64..360.0) {
            let p = ideal_predictions(deg(theta));
            prop_assert!((p.joints.sum() - 1.0).abs() < 1e-12);
        }
    }
}

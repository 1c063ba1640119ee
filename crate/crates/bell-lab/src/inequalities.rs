//! Evaluators for the correlation inequalities, each producing an
//! [`InequalityReport`] against its local-realist bound.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::types::{
    InequalityKind, InequalityReport, JointProbabilities, SinglesProbabilities,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InequalityError {
    #[error("correlation {name} = {value} is outside [-1, 1]")]
    CorrelationOutOfRange { name: &'static str, value: f64 },
    #[error("probability {name} = {value} is negative")]
    NegativeProbability { name: &'static str, value: f64 },
    #[error("degenerate experiment: {0}")]
    DegenerateDenominator(String),
}

/// The seven setting-pair coincidence blocks entering the strong inequality.
#[derive(Debug, Clone, Copy)]
pub struct StrongInputs {
    pub j_ab: JointProbabilities,
    pub j_bpa: JointProbabilities,
    pub j_apb: JointProbabilities,
    pub j_apbp: JointProbabilities,
    pub j_apr: JointProbabilities,
    pub j_rbp: JointProbabilities,
    pub j_rr: JointProbabilities,
}

fn check_correlation(name: &'static str, e: f64) -> Result<(), InequalityError> {
    if !e.is_finite() || e.abs() > 1.0 + 1e-12 {
        return Err(InequalityError::CorrelationOutOfRange { name, value: e });
    }
    Ok(())
}

/// Bell's original 1965 inequality: E(a,b) + E(b',a) − E(a',b) ≤ 1.
pub fn bell_1965(e_ab: f64, e_bpa: f64, e_apb: f64) -> Result<InequalityReport, InequalityError> {
    check_correlation("e_ab", e_ab)?;
    check_correlation("e_bpa", e_bpa)?;
    check_correlation("e_apb", e_apb)?;
    let lhs = e_ab + e_bpa - e_apb;
    let inputs = BTreeMap::from([
        ("e_ab".into(), e_ab),
        ("e_bpa".into(), e_bpa),
        ("e_apb".into(), e_apb),
    ]);
    Ok(InequalityReport::new(InequalityKind::Bell1965, lhs, 1.0, inputs))
}

/// CHSH: E(a,b) + E(b',a) − E(a',b) + E(a',b') ≤ 2.
pub fn chsh(
    e_ab: f64,
    e_bpa: f64,
    e_apb: f64,
    e_apbp: f64,
) -> Result<InequalityReport, InequalityError> {
    check_correlation("e_ab", e_ab)?;
    check_correlation("e_bpa", e_bpa)?;
    check_correlation("e_apb", e_apb)?;
    check_correlation("e_apbp", e_apbp)?;
    let lhs = e_ab + e_bpa - e_apb + e_apbp;
    let inputs = BTreeMap::from([
        ("e_ab".into(), e_ab),
        ("e_bpa".into(), e_bpa),
        ("e_apb".into(), e_apb),
        ("e_apbp".into(), e_apbp),
    ]);
    Ok(InequalityReport::new(InequalityKind::Chsh, lhs, 2.0, inputs))
}

/// Two-channel inequality in its expectation form:
///
/// E(a,b) + E(b',a) − E(a',b) + 2 pp(a',b') + 2 mm(a',b')
///   − p+(a') − p−(a') − p+(b') − p−(b') ≤ 1.
pub fn ardehali_ideal(
    j_ab: &JointProbabilities,
    j_bpa: &JointProbabilities,
    j_apb: &JointProbabilities,
    j_apbp: &JointProbabilities,
    singles_ap: &SinglesProbabilities,
    singles_bp: &SinglesProbabilities,
) -> Result<InequalityReport, InequalityError> {
    let lhs = j_ab.expectation() + j_bpa.expectation() - j_apb.expectation()
        + 2.0 * j_apbp.pp()
        + 2.0 * j_apbp.mm()
        - singles_ap.sum()
        - singles_bp.sum();
    let inputs = BTreeMap::from([
        ("e_ab".into(), j_ab.expectation()),
        ("e_bpa".into(), j_bpa.expectation()),
        ("e_apb".into(), j_apb.expectation()),
        ("pp_apbp".into(), j_apbp.pp()),
        ("mm_apbp".into(), j_apbp.mm()),
        ("singles_ap".into(), singles_ap.sum()),
        ("singles_bp".into(), singles_bp.sum()),
    ]);
    Ok(InequalityReport::new(InequalityKind::ArdehaliIdeal, lhs, 1.0, inputs))
}

/// The strong (ratio-form) inequality containing only coincidence rates;
/// the unknown emission count cancels in the ratio.
pub fn ardehali_strong(inputs: &StrongInputs) -> Result<InequalityReport, InequalityError> {
    let denom = inputs.j_rr.sum();
    if denom <= 0.0 {
        return Err(InequalityError::DegenerateDenominator(
            "no coincidences at the reference setting pair (r, r)".into(),
        ));
    }
    let numerator = inputs.j_ab.expectation() + inputs.j_bpa.expectation()
        - inputs.j_apb.expectation()
        + 2.0 * inputs.j_apbp.pp()
        + 2.0 * inputs.j_apbp.mm()
        - inputs.j_apr.sum()
        - inputs.j_rbp.sum();
    let lhs = numerator / denom;
    let digest = BTreeMap::from([
        ("e_ab".into(), inputs.j_ab.expectation()),
        ("e_bpa".into(), inputs.j_bpa.expectation()),
        ("e_apb".into(), inputs.j_apb.expectation()),
        ("pp_apbp".into(), inputs.j_apbp.pp()),
        ("mm_apbp".into(), inputs.j_apbp.mm()),
        ("sum_apr".into(), inputs.j_apr.sum()),
        ("sum_rbp".into(), inputs.j_rbp.sum()),
        ("sum_rr".into(), denom),
    ]);
    Ok(InequalityReport::new(InequalityKind::ArdehaliStrong, lhs, 1.0, digest))
}

/// Strong inequality after the rotation-symmetry reduction with
/// a' = b' = r:
///
/// [2 E(30°) − E(60°) − 2 pm(0°) − 2 mp(0°)] / K ≤ 1,  K = sum of j(0°).
///
/// `e30` and `e60` are the unnormalized coincidence expectations at 30 and
/// 60 degrees of separation (or whatever pair of separations t, 2t the
/// caller explores).
pub fn ardehali_strong_symmetric(
    e30: f64,
    e60: f64,
    j0: &JointProbabilities,
) -> Result<InequalityReport, InequalityError> {
    let k = j0.sum();
    if k <= 0.0 {
        return Err(InequalityError::DegenerateDenominator(
            "K (total coincidence rate at aligned polarizers) is zero".into(),
        ));
    }
    let lhs = (2.0 * e30 - e60 - 2.0 * j0.pm() - 2.0 * j0.mp()) / k;
    let inputs = BTreeMap::from([
        ("e30".into(), e30),
        ("e60".into(), e60),
        ("pm0".into(), j0.pm()),
        ("mp0".into(), j0.mp()),
        ("k".into(), k),
    ]);
    Ok(InequalityReport::new(InequalityKind::ArdehaliStrong, lhs, 1.0, inputs))
}

/// Clauser-Horne inequality in ratio form:
///
/// [3 p(φ) − p(3φ) − p(a',∞) − p(∞,b)] / p(∞,∞) ≤ 0.
///
/// One-channel coincidence rates are supplied by the caller; the report's
/// `violation_factor` is the raw excess over the zero bound.
pub fn ch(
    p_phi: f64,
    p_3phi: f64,
    p_ap_inf: f64,
    p_inf_b: f64,
    p_inf_inf: f64,
) -> Result<InequalityReport, InequalityError> {
    for (name, v) in [
        ("p_phi", p_phi),
        ("p_3phi", p_3phi),
        ("p_ap_inf", p_ap_inf),
        ("p_inf_b", p_inf_b),
        ("p_inf_inf", p_inf_inf),
    ] {
        if !v.is_finite() || v < 0.0 {
            return Err(InequalityError::NegativeProbability { name, value: v });
        }
    }
    if p_inf_inf <= 0.0 {
        return Err(InequalityError::DegenerateDenominator(
            "p(inf, inf) is zero".into(),
        ));
    }
    let lhs = (3.0 * p_phi - p_3phi - p_ap_inf - p_inf_b) / p_inf_inf;
    let inputs = BTreeMap::from([
        ("p_phi".into(), p_phi),
        ("p_3phi".into(), p_3phi),
        ("p_ap_inf".into(), p_ap_inf),
        ("p_inf_b".into(), p_inf_b),
        ("p_inf_inf".into(), p_inf_inf),
    ]);
    Ok(InequalityReport::new(InequalityKind::Ch, lhs, 0.0, inputs))
}

//! Orientation search under the rotation-symmetry reduction: with
//! a' = b' = r = 0 fixed, the settings collapse to the one-parameter family
//! a = t, b = 2t. A grid scan over t in [0, 90] degrees brackets the
//! maximum and golden-section refinement pins it down.

use thiserror::Error;

use crate::inequalities::{
    ardehali_ideal, ardehali_strong, ardehali_strong_symmetric, bell_1965, chsh,
    InequalityError, StrongInputs,
};
use crate::lhv::{estimate, LhvError, LhvModel};
use crate::quantum::{ideal_predictions, real_joint, real_singles};
use crate::types::{
    Angle, Apparatus, DomainError, InequalityKind, JointProbabilities, SinglesProbabilities,
};

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("grid step {0} degrees is outside (0, 15]")]
    BadGridStep(f64),
    #[error("inequality {0:?} has no symmetric one-parameter objective")]
    UnsupportedInequality(InequalityKind),
    #[error(transparent)]
    Inequality(#[from] InequalityError),
    #[error(transparent)]
    Lhv(#[from] LhvError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// A probability source parameterized only by polarizer separation, as the
/// symmetry reduction requires.
pub trait SymmetricSource {
    fn joints(&mut self, separation: Angle) -> Result<JointProbabilities, OptimizerError>;
    fn singles(&mut self) -> Result<SinglesProbabilities, OptimizerError>;
}

/// Ideal quantum predictions.
pub struct IdealQmSource;

impl SymmetricSource for IdealQmSource {
    fn joints(&mut self, separation: Angle) -> Result<JointProbabilities, OptimizerError> {
        Ok(ideal_predictions(separation).joints)
    }

    fn singles(&mut self) -> Result<SinglesProbabilities, OptimizerError> {
        Ok(ideal_predictions(Angle::from_degrees(0.0)).singles)
    }
}

/// Real-apparatus quantum predictions.
pub struct RealQmSource {
    apparatus: Apparatus,
}

impl RealQmSource {
    pub fn new(apparatus: Apparatus) -> Self {
        RealQmSource { apparatus }
    }
}

impl SymmetricSource for RealQmSource {
    fn joints(&mut self, separation: Angle) -> Result<JointProbabilities, OptimizerError> {
        Ok(real_joint(&self.apparatus, separation, Angle::from_degrees(0.0))?)
    }

    fn singles(&mut self) -> Result<SinglesProbabilities, OptimizerError> {
        Ok(real_singles(&self.apparatus))
    }
}

/// Monte Carlo estimates over an LHV model. Each separation gets an RNG
/// stream derived deterministically from the master seed and the separation
/// bits, so repeated queries at the same separation agree.
pub struct LhvSource<M: LhvModel> {
    model: M,
    shots: u64,
    seed: u64,
}

impl<M: LhvModel> LhvSource<M> {
    pub fn new(model: M, shots: u64, seed: u64) -> Self {
        LhvSource { model, shots, seed }
    }

    fn run(&self, separation: Angle) -> Result<crate::lhv::Estimate, OptimizerError> {
        let sub_seed = self.seed ^ separation.degrees().to_bits().rotate_left(17);
        Ok(estimate(
            &self.model,
            separation,
            Angle::from_degrees(0.0),
            self.shots,
            sub_seed,
        )?)
    }
}

impl<M: LhvModel> SymmetricSource for LhvSource<M> {
    fn joints(&mut self, separation: Angle) -> Result<JointProbabilities, OptimizerError> {
        Ok(self.run(separation)?.joints)
    }

    fn singles(&mut self) -> Result<SinglesProbabilities, OptimizerError> {
        Ok(self.run(Angle::from_degrees(0.0))?.singles_arm1)
    }
}

/// Normalized correlation E / (pp+pm+mp+mm); the CHSH and Bell objectives
/// expect genuine correlations, normalization being the caller's policy.
fn normalized_e(j: &JointProbabilities) -> Result<f64, OptimizerError> {
    let s = j.sum();
    if s <= 0.0 {
        return Err(InequalityError::DegenerateDenominator(
            "zero coincidence rate".into(),
        )
        .into());
    }
    Ok(j.expectation() / s)
}

fn objective(
    inequality: InequalityKind,
    source: &mut dyn SymmetricSource,
    t_deg: f64,
) -> Result<f64, OptimizerError> {
    let t = Angle::from_degrees(t_deg);
    let two_t = Angle::from_degrees(2.0 * t_deg);
    let zero = Angle::from_degrees(0.0);
    let lhs = match inequality {
        InequalityKind::ArdehaliIdeal => {
            let jt = source.joints(t)?;
            let j2t = source.joints(two_t)?;
            let j0 = source.joints(zero)?;
            let s = source.singles()?;
            ardehali_ideal(&jt, &jt, &j2t, &j0, &s, &s)?.lhs
        }
        InequalityKind::ArdehaliStrong => {
            let jt = source.joints(t)?;
            let j2t = source.joints(two_t)?;
            let j0 = source.joints(zero)?;
            ardehali_strong_symmetric(jt.expectation(), j2t.expectation(), &j0)?.lhs
        }
        InequalityKind::Chsh => {
            let et = normalized_e(&source.joints(t)?)?;
            let e2t = normalized_e(&source.joints(two_t)?)?;
            let e0 = normalized_e(&source.joints(zero)?)?;
            chsh(et, et, e2t, e0)?.lhs
        }
        InequalityKind::Bell1965 => {
            let et = normalized_e(&source.joints(t)?)?;
            let e2t = normalized_e(&source.joints(two_t)?)?;
            bell_1965(et, et, e2t)?.lhs
        }
        other => return Err(OptimizerError::UnsupportedInequality(other)),
    };
    Ok(lhs)
}

#[derive(Debug, Clone)]
pub struct ScanResult {
    pub best_t_deg: f64,
    pub best_lhs: f64,
    /// (t in degrees, lhs) grid samples, for plotting.
    pub curve: Vec<(f64, f64)>,
}

/// Grid scan over t in [0, 90] degrees followed by golden-section refinement
/// around the best cell.
pub fn scan_symmetric(
    inequality: InequalityKind,
    source: &mut dyn SymmetricSource,
    grid_step_deg: f64,
    refine_tolerance_deg: f64,
) -> Result<ScanResult, OptimizerError> {
    if !(grid_step_deg > 0.0 && grid_step_deg <= 15.0) {
        return Err(OptimizerError::BadGridStep(grid_step_deg));
    }
    let tol = refine_tolerance_deg.max(1e-9);

    let mut curve = Vec::new();
    let mut best_t = 0.0;
    let mut best_lhs = f64::NEG_INFINITY;
    let cells = (90.0 / grid_step_deg).ceil() as usize;
    for i in 0..=cells {
        let t = (i as f64 * grid_step_deg).min(90.0);
        let lhs = objective(inequality, source, t)?;
        curve.push((t, lhs));
        if lhs > best_lhs {
            best_lhs = lhs;
            best_t = t;
        }
    }

    let lo = (best_t - grid_step_deg).max(0.0);
    let hi = (best_t + grid_step_deg).min(90.0);
    let (t_star, lhs_star) = golden_max(
        |t| objective(inequality, source, t),
        lo,
        hi,
        tol,
    )?;

    // the refined point can only improve on the grid best
    let (best_t_deg, best_lhs) = if lhs_star >= best_lhs {
        (t_star, lhs_star)
    } else {
        (best_t, best_lhs)
    };
    Ok(ScanResult {
        best_t_deg,
        best_lhs,
        curve,
    })
}

/// Golden-section maximization on [lo, hi] to interval width `tol`.
fn golden_max<E>(
    mut f: impl FnMut(f64) -> Result<f64, E>,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<(f64, f64), E> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        }
    }
    let mid = 0.5 * (lo + hi);
    let fm = f(mid)?;
    Ok((mid, fm))
}

#[derive(Debug, Clone)]
pub struct FullScanResult {
    pub a_deg: f64,
    pub b_deg: f64,
    pub ap_deg: f64,
    pub best_lhs: f64,
}

/// Exploratory three-angle grid over (a, b, a') with b' = r = 0. Coarse and
/// unrefined; the one-parameter scan is the primary tool.
pub fn scan_full_grid(
    inequality: InequalityKind,
    source: &mut dyn SymmetricSource,
    grid_step_deg: f64,
) -> Result<FullScanResult, OptimizerError> {
    if !(grid_step_deg > 0.0 && grid_step_deg <= 15.0) {
        return Err(OptimizerError::BadGridStep(grid_step_deg));
    }
    let sep = |m: f64, n: f64| Angle::from_degrees((m - n).abs());
    let cells = (90.0 / grid_step_deg).ceil() as usize;
    let mut best = FullScanResult {
        a_deg: 0.0,
        b_deg: 0.0,
        ap_deg: 0.0,
        best_lhs: f64::NEG_INFINITY,
    };
    for ia in 0..=cells {
        let a = ia as f64 * grid_step_deg;
        for ib in 0..=cells {
            let b = ib as f64 * grid_step_deg;
            for iap in 0..=cells {
                let ap = iap as f64 * grid_step_deg;
                let lhs = match inequality {
                    InequalityKind::ArdehaliIdeal => {
                        let s = source.singles()?;
                        ardehali_ideal(
                            &source.joints(sep(a, b))?,
                            &source.joints(sep(0.0, a))?,
                            &source.joints(sep(ap, b))?,
                            &source.joints(sep(ap, 0.0))?,
                            &s,
                            &s,
                        )?
                        .lhs
                    }
                    InequalityKind::ArdehaliStrong => {
                        let inputs = StrongInputs {
                            j_ab: source.joints(sep(a, b))?,
                            j_bpa: source.joints(sep(0.0, a))?,
                            j_apb: source.joints(sep(ap, b))?,
                            j_apbp: source.joints(sep(ap, 0.0))?,
                            j_apr: source.joints(sep(ap, 0.0))?,
                            j_rbp: source.joints(sep(0.0, 0.0))?,
                            j_rr: source.joints(sep(0.0, 0.0))?,
                        };
                        ardehali_strong(&inputs)?.lhs
                    }
                    InequalityKind::Chsh => {
                        let mut e = |m: f64, n: f64| -> Result<f64, OptimizerError> {
                            normalized_e(&source.joints(sep(m, n))?)
                        };
                        let (e1, e2, e3, e4) = (e(a, b)?, e(0.0, a)?, e(ap, b)?, e(ap, 0.0)?);
                        chsh(e1, e2, e3, e4)?.lhs
                    }
                    InequalityKind::Bell1965 => {
                        let mut e = |m: f64, n: f64| -> Result<f64, OptimizerError> {
                            normalized_e(&source.joints(sep(m, n))?)
                        };
                        let (e1, e2, e3) = (e(a, b)?, e(0.0, a)?, e(ap, b)?);
                        bell_1965(e1, e2, e3)?.lhs
                    }
                    other => return Err(OptimizerError::UnsupportedInequality(other)),
                };
                if lhs > best.best_lhs {
                    best = FullScanResult {
                        a_deg: a,
                        b_deg: b,
                        ap_deg: ap,
                        best_lhs: lhs,
                    };
                }
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lhv::NoiseModel;
    use crate::types::ArmOptics;

    #[test]
    fn ideal_source_reproduces_canonical_optimum() {
        let r = scan_symmetric(
            InequalityKind::ArdehaliIdeal,
            &mut IdealQmSource,
            5.0,
            0.01,
        )
        .unwrap();
        assert!((r.best_t_deg - 30.0).abs() <= 0.01, "t* = {}", r.best_t_deg);
        assert!((r.best_lhs - 1.5).abs() < 1e-9);
    }

    #[test]
    fn analytic_maximizer_matches_closed_form() {
        // ideal strong objective is 2 cos 2t - cos 4t, maximized at t = 30
        let r = scan_symmetric(
            InequalityKind::ArdehaliStrong,
            &mut IdealQmSource,
            5.0,
            0.001,
        )
        .unwrap();
        assert!((r.best_t_deg - 30.0).abs() <= 0.001);
        for (t, lhs) in &r.curve {
            let rad = t.to_radians();
            let closed = 2.0 * (2.0 * rad).cos() - (4.0 * rad).cos();
            assert!((lhs - closed).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_step_refinement_invariant() {
        let coarse = scan_symmetric(
            InequalityKind::ArdehaliStrong,
            &mut IdealQmSource,
            5.0,
            0.001,
        )
        .unwrap();
        let fine = scan_symmetric(
            InequalityKind::ArdehaliStrong,
            &mut IdealQmSource,
            1.0,
            0.001,
        )
        .unwrap();
        assert!((coarse.best_t_deg - fine.best_t_deg).abs() <= 0.002);
        assert!((coarse.best_lhs - fine.best_lhs).abs() < 1e-9);
    }

    #[test]
    fn real_source_same_optimum_eta_independent() {
        for eta in [0.1, 0.5, 1.0] {
            let app = Apparatus::new(
                eta,
                Angle::from_degrees(30.0),
                ArmOptics::ideal(),
                ArmOptics::ideal(),
                false,
            )
            .unwrap();
            let r = scan_symmetric(
                InequalityKind::ArdehaliStrong,
                &mut RealQmSource::new(app),
                5.0,
                0.01,
            )
            .unwrap();
            assert!((r.best_t_deg - 30.0).abs() <= 0.01);
            assert!((r.best_lhs - 1.5).abs() < 1e-9);
        }
    }

    #[test]
    fn noise_lhv_source_never_violates() {
        let mut src = LhvSource::new(NoiseModel::new(0.1), 100_000, 5);
        let r = scan_symmetric(InequalityKind::ArdehaliStrong, &mut src, 15.0, 1.0).unwrap();
        assert!(r.best_lhs <= 1.0, "noise lhs {}", r.best_lhs);
        assert!((r.best_lhs - (-1.0)).abs() < 0.2);
    }

    #[test]
    fn rejects_bad_grid_step() {
        assert!(matches!(
            scan_symmetric(InequalityKind::ArdehaliStrong, &mut IdealQmSource, 0.0, 0.01),
            Err(OptimizerError::BadGridStep(_))
        ));
        assert!(matches!(
            scan_symmetric(InequalityKind::ArdehaliStrong, &mut IdealQmSource, 20.0, 0.01),
            Err(OptimizerError::BadGridStep(_))
        ));
    }

    #[test]
    fn ch_has_no_symmetric_objective() {
        assert!(matches!(
            scan_symmetric(InequalityKind::Ch, &mut IdealQmSource, 5.0, 0.01),
            Err(OptimizerError::UnsupportedInequality(InequalityKind::Ch))
        ));
    }

    #[test]
    fn full_grid_finds_canonical_settings() {
        let r = scan_full_grid(InequalityKind::ArdehaliStrong, &mut IdealQmSource, 15.0).unwrap();
        assert!((r.best_lhs - 1.5).abs() < 1e-9, "lhs {}", r.best_lhs);
        // canonical geometry: |a-b| = |a| = 30, |a'-b| = 60 with a' = 0
        assert!((r.a_deg - 30.0).abs() < 1e-9);
        assert!((r.b_deg - 60.0).abs() < 1e-9);
        assert!((r.ap_deg - 0.0).abs() < 1e-9);
    }
}

//! Local-hidden-variable models and their Monte Carlo ensemble estimator.
//!
//! Locality is enforced by the interface shape: an arm's response sees only
//! the shared hidden state and its own polarizer setting, so there is no
//! channel through which the other arm's setting could leak in.

use std::fmt;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::inequalities::{ardehali_strong, InequalityError, StrongInputs};
use crate::types::{Angle, InequalityReport, JointProbabilities, SinglesProbabilities};

const RESPONSE_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum LhvError {
    #[error("model response out of contract at lambda = {lambda}: q_plus = {q_plus}, q_minus = {q_minus} (arm {arm}, setting {setting_deg} deg)")]
    ContractViolation {
        lambda: String,
        arm: u8,
        setting_deg: f64,
        q_plus: f64,
        q_minus: f64,
    },
    #[error("model does not expose a one-dimensional uniform lambda; quadrature unavailable")]
    OpaqueLambda,
    #[error("shot count must be >= 1")]
    NoShots,
    #[error(transparent)]
    Inequality(#[from] InequalityError),
}

/// Channel response of one arm for a given hidden state: probability of the
/// + and − detectors firing. The remainder 1 − q_plus − q_minus is the
/// no-detection outcome.
#[derive(Debug, Clone, Copy)]
pub struct Response {
    pub q_plus: f64,
    pub q_minus: f64,
}

impl Response {
    fn validate(
        &self,
        lambda: &impl fmt::Debug,
        arm: u8,
        setting: Angle,
    ) -> Result<(), LhvError> {
        let bad = |v: f64| !v.is_finite() || v < -RESPONSE_EPS || v > 1.0 + RESPONSE_EPS;
        if bad(self.q_plus) || bad(self.q_minus) || self.q_plus + self.q_minus > 1.0 + RESPONSE_EPS
        {
            return Err(LhvError::ContractViolation {
                lambda: format!("{lambda:?}"),
                arm,
                setting_deg: setting.degrees(),
                q_plus: self.q_plus,
                q_minus: self.q_minus,
            });
        }
        Ok(())
    }
}

/// A locality-respecting hidden-variable response specification.
pub trait LhvModel: Sync {
    type Lambda: fmt::Debug + Send;

    fn sample_lambda<R: Rng>(&self, rng: &mut R) -> Self::Lambda;
    fn respond_arm1(&self, lambda: &Self::Lambda, setting: Angle) -> Response;
    fn respond_arm2(&self, lambda: &Self::Lambda, setting: Angle) -> Response;
}

/// Models whose hidden state is a single real drawn uniformly from a known
/// interval; these admit exact quadrature, used as the oracle for
/// [`estimate`].
pub trait UniformLambda: LhvModel<Lambda = f64> {
    /// Half-open support [lo, hi) of the uniform hidden variable.
    fn lambda_support(&self) -> (f64, f64);
}

/// Tally of the nine outcome cells over `n_total` emissions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CountLedger {
    pub n_pp: u64,
    pub n_pm: u64,
    pub n_mp: u64,
    pub n_mm: u64,
    pub n_p0: u64,
    pub n_m0: u64,
    pub n_0p: u64,
    pub n_0m: u64,
    pub n_00: u64,
    pub n_total: u64,
}

impl CountLedger {
    fn merge(mut self, other: CountLedger) -> CountLedger {
        self.n_pp += other.n_pp;
        self.n_pm += other.n_pm;
        self.n_mp += other.n_mp;
        self.n_mm += other.n_mm;
        self.n_p0 += other.n_p0;
        self.n_m0 += other.n_m0;
        self.n_0p += other.n_0p;
        self.n_0m += other.n_0m;
        self.n_00 += other.n_00;
        self.n_total += other.n_total;
        self
    }

    pub fn cells_sum(&self) -> u64 {
        self.n_pp
            + self.n_pm
            + self.n_mp
            + self.n_mm
            + self.n_p0
            + self.n_m0
            + self.n_0p
            + self.n_0m
            + self.n_00
    }
}

/// Monte Carlo estimate of the coincidence and singles probabilities for one
/// setting pair.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub joints: JointProbabilities,
    pub singles_arm1: SinglesProbabilities,
    pub singles_arm2: SinglesProbabilities,
    pub ledger: CountLedger,
}

const SHARD_SIZE: u64 = 1 << 16;

/// Runs `n` emissions of `model` at settings (`a`, `b`) and tallies outcomes.
/// Deterministic for a fixed seed: shards derive independent RNG streams from
/// the master seed and merge by count addition.
pub fn estimate<M: LhvModel>(
    model: &M,
    a: Angle,
    b: Angle,
    n: u64,
    seed: u64,
) -> Result<Estimate, LhvError> {
    if n == 0 {
        return Err(LhvError::NoShots);
    }
    let shards = n.div_ceil(SHARD_SIZE);
    let ledger = (0..shards)
        .into_par_iter()
        .map(|shard| -> Result<CountLedger, LhvError> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard);
            let count = SHARD_SIZE.min(n - shard * SHARD_SIZE);
            let mut ledger = CountLedger::default();
            for _ in 0..count {
                let lambda = model.sample_lambda(&mut rng);
                let r1 = model.respond_arm1(&lambda, a);
                r1.validate(&lambda, 1, a)?;
                let r2 = model.respond_arm2(&lambda, b);
                r2.validate(&lambda, 2, b)?;
                let o1 = draw_outcome(&mut rng, &r1);
                let o2 = draw_outcome(&mut rng, &r2);
                match (o1, o2) {
                    (Outcome::Plus, Outcome::Plus) => ledger.n_pp += 1,
                    (Outcome::Plus, Outcome::Minus) => ledger.n_pm += 1,
                    (Outcome::Minus, Outcome::Plus) => ledger.n_mp += 1,
                    (Outcome::Minus, Outcome::Minus) => ledger.n_mm += 1,
                    (Outcome::Plus, Outcome::None) => ledger.n_p0 += 1,
                    (Outcome::Minus, Outcome::None) => ledger.n_m0 += 1,
                    (Outcome::None, Outcome::Plus) => ledger.n_0p += 1,
                    (Outcome::None, Outcome::Minus) => ledger.n_0m += 1,
                    (Outcome::None, Outcome::None) => ledger.n_00 += 1,
                }
            }
            ledger.n_total = count;
            Ok(ledger)
        })
        .try_reduce(CountLedger::default, |a, b| Ok(a.merge(b)))?;

    let nf = ledger.n_total as f64;
    let joints = JointProbabilities::new(
        ledger.n_pp as f64 / nf,
        ledger.n_pm as f64 / nf,
        ledger.n_mp as f64 / nf,
        ledger.n_mm as f64 / nf,
    )
    .expect("count ratios are probabilities");
    let singles_arm1 = SinglesProbabilities::new(
        (ledger.n_pp + ledger.n_pm + ledger.n_p0) as f64 / nf,
        (ledger.n_mp + ledger.n_mm + ledger.n_m0) as f64 / nf,
    )
    .expect("count ratios are probabilities");
    let singles_arm2 = SinglesProbabilities::new(
        (ledger.n_pp + ledger.n_mp + ledger.n_0p) as f64 / nf,
        (ledger.n_pm + ledger.n_mm + ledger.n_0m) as f64 / nf,
    )
    .expect("count ratios are probabilities");
    Ok(Estimate {
        joints,
        singles_arm1,
        singles_arm2,
        ledger,
    })
}

#[derive(Clone, Copy)]
enum Outcome {
    Plus,
    Minus,
    None,
}

fn draw_outcome<R: Rng>(rng: &mut R, r: &Response) -> Outcome {
    let u: f64 = rng.gen();
    if u < r.q_plus {
        Outcome::Plus
    } else if u < r.q_plus + r.q_minus {
        Outcome::Minus
    } else {
        Outcome::None
    }
}

/// Exact coincidence probabilities by midpoint quadrature over the model's
/// one-dimensional uniform hidden variable.
pub fn integrate<M: UniformLambda>(
    model: &M,
    a: Angle,
    b: Angle,
    quadrature_points: u32,
) -> Result<JointProbabilities, LhvError> {
    let (lo, hi) = model.lambda_support();
    if !(hi > lo) {
        return Err(LhvError::OpaqueLambda);
    }
    let n = quadrature_points.max(1) as u64;
    let h = (hi - lo) / n as f64;
    let (mut pp, mut pm, mut mp, mut mm) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let lambda = lo + (i as f64 + 0.5) * h;
        let r1 = model.respond_arm1(&lambda, a);
        r1.validate(&lambda, 1, a)?;
        let r2 = model.respond_arm2(&lambda, b);
        r2.validate(&lambda, 2, b)?;
        pp += r1.q_plus * r2.q_plus;
        pm += r1.q_plus * r2.q_minus;
        mp += r1.q_minus * r2.q_plus;
        mm += r1.q_minus * r2.q_minus;
    }
    let w = 1.0 / n as f64;
    Ok(JointProbabilities::new(pp * w, pm * w, mp * w, mm * w)
        .expect("quadrature of bounded responses stays in range"))
}

/// Witness for a failed assumption check.
#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub lambda: String,
    pub arm: u8,
    pub setting_deg: f64,
    pub channel: char,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AssumptionCheck {
    pub passed: bool,
    pub sampled_lambdas: u64,
    pub counterexamples: u64,
    pub first_witness: Option<Witness>,
}

/// Checks the supplementary assumption: for every sampled hidden state and
/// every setting, each single-channel response is bounded by the two-channel
/// sum at the reference orientation `r`.
pub fn check_supplementary<M: LhvModel>(
    model: &M,
    settings: &[Angle],
    r: Angle,
    lambdas: u64,
    seed: u64,
) -> AssumptionCheck {
    run_assumption_check(model, settings, r, lambdas, seed, |q, ref_sum| {
        q <= ref_sum + RESPONSE_EPS
    })
}

/// Checks the stricter channel-sum equality: the total detection probability
/// is the same at every orientation.
pub fn check_gr<M: LhvModel>(
    model: &M,
    settings: &[Angle],
    r: Angle,
    lambdas: u64,
    seed: u64,
) -> AssumptionCheck {
    // equality of sums; evaluated per channel as sum-vs-sum below
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counterexamples = 0;
    let mut first_witness = None;
    for _ in 0..lambdas {
        let lambda = model.sample_lambda(&mut rng);
        for (arm, respond) in respond_fns(model) {
            let reference = respond(&lambda, r);
            let ref_sum = reference.q_plus + reference.q_minus;
            for &setting in settings {
                let resp = respond(&lambda, setting);
                let sum = resp.q_plus + resp.q_minus;
                if (sum - ref_sum).abs() > RESPONSE_EPS {
                    counterexamples += 1;
                    first_witness.get_or_insert_with(|| Witness {
                        lambda: format!("{lambda:?}"),
                        arm,
                        setting_deg: setting.degrees(),
                        channel: '*',
                        lhs: sum,
                        rhs: ref_sum,
                    });
                }
            }
        }
    }
    AssumptionCheck {
        passed: counterexamples == 0,
        sampled_lambdas: lambdas,
        counterexamples,
        first_witness,
    }
}

type RespondFn<'a, M> =
    Box<dyn Fn(&<M as LhvModel>::Lambda, Angle) -> Response + 'a>;

fn respond_fns<M: LhvModel>(model: &M) -> Vec<(u8, RespondFn<'_, M>)> {
    vec![
        (1, Box::new(move |l: &M::Lambda, s| model.respond_arm1(l, s)) as RespondFn<'_, M>),
        (2, Box::new(move |l: &M::Lambda, s| model.respond_arm2(l, s))),
    ]
}

fn run_assumption_check<M: LhvModel>(
    model: &M,
    settings: &[Angle],
    r: Angle,
    lambdas: u64,
    seed: u64,
    ok: impl Fn(f64, f64) -> bool,
) -> AssumptionCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counterexamples = 0;
    let mut first_witness = None;
    for _ in 0..lambdas {
        let lambda = model.sample_lambda(&mut rng);
        for (arm, respond) in respond_fns(model) {
            let reference = respond(&lambda, r);
            let ref_sum = reference.q_plus + reference.q_minus;
            for &setting in settings {
                let resp = respond(&lambda, setting);
                for (channel, q) in [('+', resp.q_plus), ('-', resp.q_minus)] {
                    if !ok(q, ref_sum) {
                        counterexamples += 1;
                        first_witness.get_or_insert_with(|| Witness {
                            lambda: format!("{lambda:?}"),
                            arm,
                            setting_deg: setting.degrees(),
                            channel,
                            lhs: q,
                            rhs: ref_sum,
                        });
                    }
                }
            }
        }
    }
    AssumptionCheck {
        passed: counterexamples == 0,
        sampled_lambdas: lambdas,
        counterexamples,
        first_witness,
    }
}

// ---------------------------------------------------------------------------
// Built-in models
// ---------------------------------------------------------------------------

fn check_d(d: f64) -> f64 {
    assert!(
        d > 0.0 && d <= 1.0,
        "detection scale d must be in (0, 1], got {d}"
    );
    d
}

/// Setting-independent responses q± = d/2 on both arms.
#[derive(Debug, Clone, Copy)]
pub struct NoiseModel {
    d: f64,
}

impl NoiseModel {
    pub fn new(d: f64) -> Self {
        NoiseModel { d: check_d(d) }
    }
}

impl LhvModel for NoiseModel {
    type Lambda = f64;

    fn sample_lambda<R: Rng>(&self, rng: &mut R) -> f64 {
        rng.gen_range(0.0..1.0)
    }

    fn respond_arm1(&self, _lambda: &f64, _setting: Angle) -> Response {
        Response {
            q_plus: self.d / 2.0,
            q_minus: self.d / 2.0,
        }
    }

    fn respond_arm2(&self, lambda: &f64, setting: Angle) -> Response {
        self.respond_arm1(lambda, setting)
    }
}

impl UniformLambda for NoiseModel {
    fn lambda_support(&self) -> (f64, f64) {
        (0.0, 1.0)
    }
}

/// Hidden polarization axis, Malus-law responses on both arms:
/// q+ = d cos²(setting − λ), q− = d sin²(setting − λ). Channel sums are a
/// constant d, so the model satisfies the channel-sum equality.
#[derive(Debug, Clone, Copy)]
pub struct MalusProductModel {
    d: f64,
}

impl MalusProductModel {
    pub fn new(d: f64) -> Self {
        MalusProductModel { d: check_d(d) }
    }

    fn respond(&self, lambda: f64, setting: Angle) -> Response {
        let delta = setting.radians() - lambda;
        Response {
            q_plus: self.d * delta.cos().powi(2),
            q_minus: self.d * delta.sin().powi(2),
        }
    }
}

impl LhvModel for MalusProductModel {
    type Lambda = f64;

    fn sample_lambda<R: Rng>(&self, rng: &mut R) -> f64 {
        rng.gen_range(0.0..std::f64::consts::PI)
    }

    fn respond_arm1(&self, lambda: &f64, setting: Angle) -> Response {
        self.respond(*lambda, setting)
    }

    fn respond_arm2(&self, lambda: &f64, setting: Angle) -> Response {
        self.respond(*lambda, setting)
    }
}

impl UniformLambda for MalusProductModel {
    fn lambda_support(&self) -> (f64, f64) {
        (0.0, std::f64::consts::PI)
    }
}

/// Deterministic channel choice by the sign of cos 2(setting − λ), with
/// total detection probability d. The most strongly correlating built-in.
#[derive(Debug, Clone, Copy)]
pub struct ThresholdModel {
    d: f64,
}

impl ThresholdModel {
    pub fn new(d: f64) -> Self {
        ThresholdModel { d: check_d(d) }
    }

    fn respond(&self, lambda: f64, setting: Angle) -> Response {
        if (2.0 * (setting.radians() - lambda)).cos() >= 0.0 {
            Response {
                q_plus: self.d,
                q_minus: 0.0,
            }
        } else {
            Response {
                q_plus: 0.0,
                q_minus: self.d,
            }
        }
    }
}

impl LhvModel for ThresholdModel {
    type Lambda = f64;

    fn sample_lambda<R: Rng>(&self, rng: &mut R) -> f64 {
        rng.gen_range(0.0..std::f64::consts::PI)
    }

    fn respond_arm1(&self, lambda: &f64, setting: Angle) -> Response {
        self.respond(*lambda, setting)
    }

    fn respond_arm2(&self, lambda: &f64, setting: Angle) -> Response {
        self.respond(*lambda, setting)
    }
}

impl UniformLambda for ThresholdModel {
    fn lambda_support(&self) -> (f64, f64) {
        (0.0, std::f64::consts::PI)
    }
}

/// Built-in model selected by name, for the CLI and config files.
#[derive(Debug, Clone, Copy)]
pub enum BuiltinModel {
    Noise(NoiseModel),
    MalusProduct(MalusProductModel),
    Threshold(ThresholdModel),
}

impl BuiltinModel {
    pub fn by_name(name: &str, d: f64) -> Option<Self> {
        match name {
            "noise" => Some(BuiltinModel::Noise(NoiseModel::new(d))),
            "malus-product" => Some(BuiltinModel::MalusProduct(MalusProductModel::new(d))),
            "threshold" => Some(BuiltinModel::Threshold(ThresholdModel::new(d))),
            _ => None,
        }
    }

    pub const NAMES: [&'static str; 3] = ["noise", "malus-product", "threshold"];
}

impl LhvModel for BuiltinModel {
    type Lambda = f64;

    fn sample_lambda<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            BuiltinModel::Noise(m) => m.sample_lambda(rng),
            BuiltinModel::MalusProduct(m) => m.sample_lambda(rng),
            BuiltinModel::Threshold(m) => m.sample_lambda(rng),
        }
    }

    fn respond_arm1(&self, lambda: &f64, setting: Angle) -> Response {
        match self {
            BuiltinModel::Noise(m) => m.respond_arm1(lambda, setting),
            BuiltinModel::MalusProduct(m) => m.respond_arm1(lambda, setting),
            BuiltinModel::Threshold(m) => m.respond_arm1(lambda, setting),
        }
    }

    fn respond_arm2(&self, lambda: &f64, setting: Angle) -> Response {
        match self {
            BuiltinModel::Noise(m) => m.respond_arm2(lambda, setting),
            BuiltinModel::MalusProduct(m) => m.respond_arm2(lambda, setting),
            BuiltinModel::Threshold(m) => m.respond_arm2(lambda, setting),
        }
    }
}

impl UniformLambda for BuiltinModel {
    fn lambda_support(&self) -> (f64, f64) {
        match self {
            BuiltinModel::Noise(m) => m.lambda_support(),
            BuiltinModel::MalusProduct(m) => m.lambda_support(),
            BuiltinModel::Threshold(m) => m.lambda_support(),
        }
    }
}

// ---------------------------------------------------------------------------
// Strong-inequality experiment over an LHV model
// ---------------------------------------------------------------------------

/// Result of a full strong-inequality run over a model: the inequality
/// report, the propagated binomial standard error of the lhs, and the raw
/// estimates.
#[derive(Debug)]
pub struct StrongRun {
    pub report: InequalityReport,
    pub sigma: f64,
    pub estimates: [Estimate; 7],
}

/// Runs the seven setting pairs of the strong inequality with the symmetric
/// reduction a' = b' = r = 0 and the one-parameter family a = t, b = 2t;
/// each pair uses an independent seed stream derived from the master seed.
pub fn run_strong<M: LhvModel>(
    model: &M,
    t: Angle,
    shots: u64,
    seed: u64,
) -> Result<StrongRun, LhvError> {
    let zero = Angle::from_degrees(0.0);
    let two_t = Angle::from_degrees(2.0 * t.degrees());
    // (arm1 setting, arm2 setting) for the pairs (a,b), (b',a), (a',b),
    // (a',b'), (a',r), (r,b'), (r,r)
    let pairs = [
        (t, two_t),
        (zero, t),
        (zero, two_t),
        (zero, zero),
        (zero, zero),
        (zero, zero),
        (zero, zero),
    ];
    let mut estimates = Vec::with_capacity(7);
    for (i, (s1, s2)) in pairs.iter().enumerate() {
        let pair_seed = seed ^ (0x9e3779b97f4a7c15u64.wrapping_mul(i as u64 + 1));
        estimates.push(estimate(model, *s1, *s2, shots, pair_seed)?);
    }
    let estimates: [Estimate; 7] = estimates.try_into().expect("seven pairs");
    let inputs = StrongInputs {
        j_ab: estimates[0].joints,
        j_bpa: estimates[1].joints,
        j_apb: estimates[2].joints,
        j_apbp: estimates[3].joints,
        j_apr: estimates[4].joints,
        j_rbp: estimates[5].joints,
        j_rr: estimates[6].joints,
    };
    let report = ardehali_strong(&inputs)?;
    let sigma = strong_sigma(&estimates, report.lhs, shots);
    Ok(StrongRun {
        report,
        sigma,
        estimates,
    })
}

/// Variance of a linear combination of multinomial cell frequencies.
fn lincomb_var(cells: &[(f64, f64)], n: f64) -> f64 {
    let mean: f64 = cells.iter().map(|(c, p)| c * p).sum();
    let second: f64 = cells.iter().map(|(c, p)| c * c * p).sum();
    (second - mean * mean) / n
}

fn strong_sigma(estimates: &[Estimate; 7], lhs: f64, shots: u64) -> f64 {
    let n = shots as f64;
    let cells = |e: &Estimate, coeffs: [f64; 4]| -> Vec<(f64, f64)> {
        vec![
            (coeffs[0], e.joints.pp()),
            (coeffs[1], e.joints.pm()),
            (coeffs[2], e.joints.mp()),
            (coeffs[3], e.joints.mm()),
        ]
    };
    let expectation = [1.0, -1.0, -1.0, 1.0];
    let all = [1.0, 1.0, 1.0, 1.0];
    let var_num = lincomb_var(&cells(&estimates[0], expectation), n)
        + lincomb_var(&cells(&estimates[1], expectation), n)
        + lincomb_var(&cells(&estimates[2], expectation), n)
        + lincomb_var(&cells(&estimates[3], [2.0, 0.0, 0.0, 2.0]), n)
        + lincomb_var(&cells(&estimates[4], all), n)
        + lincomb_var(&cells(&estimates[5], all), n);
    let k = estimates[6].joints.sum();
    let var_k = lincomb_var(&cells(&estimates[6], all), n);
    ((var_num + lhs * lhs * var_k) / (k * k)).sqrt()
}

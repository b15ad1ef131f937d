//! Independent numerical checks of the threshold-optimality claim.
//!
//! Random environments and random step classifiers are drawn from a seeded
//! generator; each classifier is compared against the threshold rules that
//! reproduce its gap, and the remainder signs behind that comparison are
//! checked directly. A Monte Carlo population simulation cross-checks the
//! analytic pipeline end to end.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::{
    acceptance_rates, classify_prob, evaluate, Behavior, Classifier, Evaluation, ObjectiveWeights,
};
use crate::dist::ContinuousDist;
use crate::error::{Error, Result};
use crate::model::{Environment, SignalModel};
use crate::solver::{match_prevalence, search_span, Family, PrevalenceMatch, RemainderSet, ZERO_GAP_TOL};

/// Residual bound for matched thresholds.
pub const MATCH_RESIDUAL_TOL: f64 = 1e-9;

/// Which objective weights [`run_suite`] draws per trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    /// Accuracy weights in every trial.
    Accuracy,
    /// Random weights, alternating aligned and misaligned.
    Corollary,
    /// Accuracy, aligned, misaligned in rotation.
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialConfig {
    pub n_trials: usize,
    /// Step classifiers get between 1 and `max_steps` breaks.
    pub max_steps: usize,
    pub cost_mu: [f64; 2],
    pub cost_sigma: [f64; 2],
    pub reward: [f64; 2],
    /// Location of `f1` relative to `f0` (both gaussian, equal scale).
    pub signal_shift: [f64; 2],
    pub signal_sigma: [f64; 2],
    pub seed: u64,
    pub tolerance: f64,
    pub weights: WeightMode,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig {
            n_trials: 500,
            max_steps: 12,
            cost_mu: [-2.0, 2.0],
            cost_sigma: [0.5, 2.0],
            reward: [0.5, 10.0],
            signal_shift: [0.5, 2.0],
            signal_sigma: [0.5, 2.0],
            seed: 42,
            tolerance: 1e-8,
            weights: WeightMode::Mixed,
        }
    }
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        let ranges = [
            ("cost_mu", self.cost_mu, f64::NEG_INFINITY),
            ("cost_sigma", self.cost_sigma, 0.0),
            ("reward", self.reward, 0.0),
            ("signal_shift", self.signal_shift, 0.0),
            ("signal_sigma", self.signal_sigma, 0.0),
        ];
        for (name, [lo, hi], floor) in ranges {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi && lo > floor) {
                return Err(Error::Parameter(format!("invalid {name} range [{lo}, {hi}]")));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::Parameter("max_steps must be at least 1".into()));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::Parameter(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }
}

/// `k` sorted uniform breaks in `span` and `k + 1` uniform values in `[0, 1]`.
pub fn random_step_classifier<R: Rng + ?Sized>(
    rng: &mut R,
    k: usize,
    span: (f64, f64),
) -> Result<Classifier> {
    let (lo, hi) = span;
    if k == 0 || !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::Parameter(format!("need k >= 1 and a finite span, got {k}, {span:?}")));
    }
    if lo == hi && k > 1 {
        return Err(Error::Parameter("a degenerate span holds only one break".into()));
    }
    let breaks = loop {
        let mut b: Vec<f64> = (0..k).map(|_| rng.random_range(lo..=hi)).collect();
        b.sort_by(f64::total_cmp);
        if b.windows(2).all(|w| w[0] < w[1]) {
            break b;
        }
    };
    let values = (0..=k).map(|_| rng.random::<f64>()).collect();
    Classifier::step(breaks, values)
}

/// Random weights of the requested class: the larger of each pair goes to the
/// correct-classification cell for aligned, the smaller for misaligned.
pub fn random_weights<R: Rng + ?Sized>(rng: &mut R, aligned: bool) -> ObjectiveWeights {
    let u: [f64; 4] = std::array::from_fn(|_| rng.random());
    let (a_hi, a_lo) = (u[0].max(u[1]), u[0].min(u[1]));
    let (b_hi, b_lo) = (u[2].max(u[3]), u[2].min(u[3]));
    if aligned {
        ObjectiveWeights::new(a_hi, a_lo, b_hi, b_lo)
    } else {
        ObjectiveWeights::new(a_lo, a_hi, b_lo, b_hi)
    }
}

/// What `c` was compared against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Comparator {
    /// Zero gap: the better always-reject / always-accept rule.
    Constant { p: f64 },
    /// Threshold rules at the matched thresholds, evaluated at `c`'s prevalence.
    Matched {
        matched: PrevalenceMatch,
        value_at_tau_l: f64,
        value_at_tau_h: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceCheck {
    pub gap: f64,
    pub prevalence: f64,
    pub objective: f64,
    pub comparator: Comparator,
    pub best_comparator_value: f64,
    /// `best_comparator_value - objective`; negative means `c` beat every
    /// comparator.
    pub slack: f64,
    pub passed: bool,
}

/// Checks that a threshold rule (or a constant rule when the gap is zero) does
/// at least as well as `c` under `w`, within `tol`.
pub fn verify_dominance(
    env: &Environment,
    c: &Classifier,
    w: &ObjectiveWeights,
    tol: f64,
) -> Result<DominanceCheck> {
    let s = env.signal();
    let e = evaluate(env, c);
    let objective = w.payoff(e.prevalence, e.delta1, e.delta0);
    let (comparator, best) = if e.gap.abs() <= ZERO_GAP_TOL {
        let value = |p: f64| {
            let rule = Classifier::Constant { p };
            let ev = evaluate(env, &rule);
            w.payoff(ev.prevalence, ev.delta1, ev.delta0)
        };
        let (reject, accept) = (value(0.0), value(1.0));
        if accept >= reject {
            (Comparator::Constant { p: 1.0 }, accept)
        } else {
            (Comparator::Constant { p: 0.0 }, reject)
        }
    } else {
        let matched = match_prevalence(s, e.gap)?;
        let value_at = |tau: f64| {
            let (q0, q1) = acceptance_rates(&matched.family.rule(tau), s);
            w.payoff(e.prevalence, q1, q0)
        };
        let (vl, vh) = (value_at(matched.tau_l), value_at(matched.tau_h));
        (
            Comparator::Matched {
                matched,
                value_at_tau_l: vl,
                value_at_tau_h: vh,
            },
            vl.max(vh),
        )
    };
    let slack = best - objective;
    Ok(DominanceCheck {
        gap: e.gap,
        prevalence: e.prevalence,
        objective,
        comparator,
        best_comparator_value: best,
        slack,
        passed: slack >= -tol,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step2Check {
    /// Zero gap: nothing to check.
    pub skipped: bool,
    pub gap: f64,
    pub matched: Option<PrevalenceMatch>,
    pub at_tau_l: Option<RemainderSet>,
    pub at_tau_h: Option<RemainderSet>,
    pub signs_hold: bool,
    /// `max |R1 - R0|` on the matched side, over both thresholds.
    pub remainder_mismatch: f64,
    /// `max |gap_of_threshold(tau) - gap|` over both thresholds.
    pub match_residual: f64,
    /// `tau_L <= tau_c <= tau_H`.
    pub ordered: bool,
    pub passed: bool,
}

/// Checks the remainder signs at the matched thresholds: for positive gaps
/// `R1+(tau_L) <= 0` and `R0+(tau_H) >= 0`; for negative gaps
/// `R1-(tau_L) >= 0` and `R0-(tau_H) <= 0`. Also checks that the matched
/// remainders agree (equal prevalence) and that the match itself is tight.
pub fn verify_step2_signs(env: &Environment, c: &Classifier, tol: f64) -> Result<Step2Check> {
    let s = env.signal();
    let (d0, d1) = acceptance_rates(c, s);
    let gap = d1 - d0;
    if gap.abs() <= ZERO_GAP_TOL {
        return Ok(Step2Check {
            skipped: true,
            gap,
            matched: None,
            at_tau_l: None,
            at_tau_h: None,
            signs_hold: true,
            remainder_mismatch: 0.0,
            match_residual: 0.0,
            ordered: true,
            passed: true,
        });
    }
    let matched = match_prevalence(s, gap)?;
    let at_l = RemainderSet::at(c, s, matched.tau_l);
    let at_h = RemainderSet::at(c, s, matched.tau_h);
    let (signs_hold, side_l, side_h) = match matched.family {
        Family::Positive => (
            at_l.r1_plus <= tol && at_h.r0_plus >= -tol,
            (at_l.r0_plus, at_l.r1_plus),
            (at_h.r0_plus, at_h.r1_plus),
        ),
        Family::Negative => (
            at_l.r1_minus >= -tol && at_h.r0_minus <= tol,
            (at_l.r0_minus, at_l.r1_minus),
            (at_h.r0_minus, at_h.r1_minus),
        ),
    };
    let remainder_mismatch = (side_l.1 - side_l.0).abs().max((side_h.1 - side_h.0).abs());
    let match_residual = matched.residual(s);
    let ordered = matched.tau_l <= s.tau_c() && s.tau_c() <= matched.tau_h;
    let passed =
        signs_hold && remainder_mismatch <= tol && match_residual <= MATCH_RESIDUAL_TOL && ordered;
    Ok(Step2Check {
        skipped: false,
        gap,
        matched: Some(matched),
        at_tau_l: Some(at_l),
        at_tau_h: Some(at_h),
        signs_hold,
        remainder_mismatch,
        match_residual,
        ordered,
        passed,
    })
}

/// A sample proportion with its standard error `sqrt(p (1 - p) / n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
    pub n: u64,
}

impl Estimate {
    fn from_counts(hits: u64, n: u64) -> Self {
        if n == 0 {
            return Estimate { value: f64::NAN, se: f64::NAN, n };
        }
        let p = hits as f64 / n as f64;
        Estimate {
            value: p,
            se: (p * (1.0 - p) / n as f64).sqrt(),
            n,
        }
    }

    /// `(value - reference) / se`; zero when both coincide with no spread.
    pub fn z_score(&self, reference: f64) -> f64 {
        let d = self.value - reference;
        if self.se > 0.0 {
            d / self.se
        } else if d == 0.0 {
            0.0
        } else {
            d.signum() * f64::INFINITY
        }
    }
}

/// Empirical counterpart of [`Evaluation`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalEvaluation {
    pub n: u64,
    pub seed: u64,
    /// Acceptance rate among non-compliers.
    pub delta0: Estimate,
    /// Acceptance rate among compliers.
    pub delta1: Estimate,
    pub prevalence: Estimate,
    pub tp: Estimate,
    #[serde(rename = "fn")]
    pub fn_: Estimate,
    pub fp: Estimate,
    pub tn: Estimate,
    pub accuracy: Estimate,
}

/// Simulates `n` independent individuals: cost from `H`, best response to
/// `c`, signal from `f_beta`, then a decision drawn with probability
/// `delta(x)`.
pub fn simulate_population(
    env: &Environment,
    c: &Classifier,
    n: u64,
    seed: u64,
) -> Result<EmpiricalEvaluation> {
    if n == 0 {
        return Err(Error::Parameter("population size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let incentive = env.r() * evaluate(env, c).gap;
    let s = env.signal();
    let (mut compliers, mut tp, mut fp, mut tn) = (0u64, 0u64, 0u64, 0u64);
    for _ in 0..n {
        let gamma = env.cost().sample(&mut rng);
        let behavior = Behavior::respond(gamma, incentive);
        let x = match behavior {
            Behavior::Compliant => s.f1().sample(&mut rng),
            Behavior::NonCompliant => s.f0().sample(&mut rng),
        };
        let p = classify_prob(c, x);
        let accepted = if p <= 0.0 {
            false
        } else if p >= 1.0 {
            true
        } else {
            rng.random::<f64>() < p
        };
        match (behavior, accepted) {
            (Behavior::Compliant, true) => tp += 1,
            (Behavior::NonCompliant, true) => fp += 1,
            (Behavior::NonCompliant, false) => tn += 1,
            (Behavior::Compliant, false) => {}
        }
        if behavior == Behavior::Compliant {
            compliers += 1;
        }
    }
    let fn_ = compliers - tp;
    let noncompliers = n - compliers;
    Ok(EmpiricalEvaluation {
        n,
        seed,
        delta0: Estimate::from_counts(fp, noncompliers),
        delta1: Estimate::from_counts(tp, compliers),
        prevalence: Estimate::from_counts(compliers, n),
        tp: Estimate::from_counts(tp, n),
        fn_: Estimate::from_counts(fn_, n),
        fp: Estimate::from_counts(fp, n),
        tn: Estimate::from_counts(tn, n),
        accuracy: Estimate::from_counts(tp + tn, n),
    })
}

/// z-scores of the empirical rates against an analytic evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZScores {
    pub prevalence: f64,
    pub tp: f64,
    #[serde(rename = "fn")]
    pub fn_: f64,
    pub fp: f64,
    pub tn: f64,
    pub accuracy: f64,
}

impl EmpiricalEvaluation {
    pub fn z_scores(&self, analytic: &Evaluation) -> ZScores {
        ZScores {
            prevalence: self.prevalence.z_score(analytic.prevalence),
            tp: self.tp.z_score(analytic.tp),
            fn_: self.fn_.z_score(analytic.fn_),
            fp: self.fp.z_score(analytic.fp),
            tn: self.tn.z_score(analytic.tn),
            accuracy: self.accuracy.z_score(analytic.accuracy),
        }
    }
}

/// Everything needed to reproduce a failed trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureDump {
    pub trial: usize,
    pub environment: Environment,
    pub classifier: Classifier,
    pub weights: ObjectiveWeights,
    pub dominance: DominanceCheck,
    pub step2: Step2Check,
    pub reasons: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub config: TrialConfig,
    pub trials_run: usize,
    pub failures: usize,
    pub dominance_failures: usize,
    pub sign_failures: usize,
    pub remainder_equality_failures: usize,
    pub match_failures: usize,
    pub zero_gap_trials: usize,
    pub positive_gap_trials: usize,
    pub negative_gap_trials: usize,
    /// Smallest `comparator - objective` seen; `None` when no trial ran.
    pub min_dominance_slack: Option<f64>,
    pub max_dominance_slack: Option<f64>,
    pub max_match_residual: f64,
    pub max_remainder_mismatch: f64,
    pub failure_dumps: Vec<FailureDump>,
}

impl TrialReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Generator for one trial, independent of every other trial.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Draws a random environment from the configured ranges.
pub fn random_environment<R: Rng + ?Sized>(rng: &mut R, cfg: &TrialConfig) -> Result<Environment> {
    let draw = |rng: &mut R, [lo, hi]: [f64; 2]| rng.random_range(lo..=hi);
    let cost = ContinuousDist::gaussian(draw(rng, cfg.cost_mu), draw(rng, cfg.cost_sigma))?;
    let r = draw(rng, cfg.reward);
    let sigma = draw(rng, cfg.signal_sigma);
    let shift = draw(rng, cfg.signal_shift);
    let signal = SignalModel::new(
        ContinuousDist::gaussian(0.0, sigma)?,
        ContinuousDist::gaussian(shift, sigma)?,
    )?;
    Environment::new(cost, r, 0.0, signal)
}

/// Runs one randomized trial.
pub fn run_trial(
    cfg: &TrialConfig,
    trial: usize,
) -> Result<(Environment, Classifier, ObjectiveWeights, DominanceCheck, Step2Check)> {
    let mut rng = trial_rng(cfg.seed, trial);
    let env = random_environment(&mut rng, cfg)?;
    let k = rng.random_range(1..=cfg.max_steps);
    let c = random_step_classifier(&mut rng, k, search_span(&env))?;
    let w = match cfg.weights {
        WeightMode::Accuracy => ObjectiveWeights::accuracy(),
        WeightMode::Corollary => random_weights(&mut rng, trial.is_multiple_of(2)),
        WeightMode::Mixed => match trial % 3 {
            0 => ObjectiveWeights::accuracy(),
            1 => random_weights(&mut rng, true),
            _ => random_weights(&mut rng, false),
        },
    };
    let dominance = verify_dominance(&env, &c, &w, cfg.tolerance)?;
    let step2 = verify_step2_signs(&env, &c, cfg.tolerance)?;
    Ok((env, c, w, dominance, step2))
}

/// Batch driver over [`verify_dominance`] and [`verify_step2_signs`].
pub fn run_suite(cfg: &TrialConfig) -> Result<TrialReport> {
    cfg.validate()?;
    let mut report = TrialReport {
        config: cfg.clone(),
        trials_run: 0,
        failures: 0,
        dominance_failures: 0,
        sign_failures: 0,
        remainder_equality_failures: 0,
        match_failures: 0,
        zero_gap_trials: 0,
        positive_gap_trials: 0,
        negative_gap_trials: 0,
        min_dominance_slack: None,
        max_dominance_slack: None,
        max_match_residual: 0.0,
        max_remainder_mismatch: 0.0,
        failure_dumps: Vec::new(),
    };
    for trial in 0..cfg.n_trials {
        let (environment, classifier, weights, dominance, step2) = run_trial(cfg, trial)?;
        report.trials_run += 1;
        if step2.skipped {
            report.zero_gap_trials += 1;
        } else if step2.gap > 0.0 {
            report.positive_gap_trials += 1;
        } else {
            report.negative_gap_trials += 1;
        }
        report.min_dominance_slack = Some(
            report
                .min_dominance_slack
                .map_or(dominance.slack, |m| m.min(dominance.slack)),
        );
        report.max_dominance_slack = Some(
            report
                .max_dominance_slack
                .map_or(dominance.slack, |m| m.max(dominance.slack)),
        );
        report.max_match_residual = report.max_match_residual.max(step2.match_residual);
        report.max_remainder_mismatch = report.max_remainder_mismatch.max(step2.remainder_mismatch);

        let mut reasons = Vec::new();
        if !dominance.passed {
            report.dominance_failures += 1;
            reasons.push(format!("dominance slack {}", dominance.slack));
        }
        if !step2.signs_hold {
            report.sign_failures += 1;
            reasons.push("remainder signs".to_string());
        }
        if step2.remainder_mismatch > cfg.tolerance {
            report.remainder_equality_failures += 1;
            reasons.push(format!("remainder mismatch {}", step2.remainder_mismatch));
        }
        if step2.match_residual > MATCH_RESIDUAL_TOL || !step2.ordered {
            report.match_failures += 1;
            reasons.push(format!(
                "match residual {} (ordered: {})",
                step2.match_residual, step2.ordered
            ));
        }
        if !reasons.is_empty() {
            report.failures += 1;
            report.failure_dumps.push(FailureDump {
                trial,
                environment,
                classifier,
                weights,
                dominance,
                step2,
                reasons,
            });
        }
    }
    Ok(report)
}

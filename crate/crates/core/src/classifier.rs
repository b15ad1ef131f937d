//! Classifier representations and everything computed from a single
//! classifier: acceptance rates, the performativity gap, induced prevalence,
//! confusion masses, weighted objectives, remainders, and the individual's
//! best response.

use serde::{Deserialize, Serialize};

use crate::dist::ContinuousDist;
use crate::error::{Error, Result};
use crate::model::{Environment, SignalModel};

/// A committed classification algorithm `delta(x) = Pr[d = 1 | x]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", try_from = "RawClassifier")]
pub enum Classifier {
    /// Accept iff `x > tau`.
    #[serde(rename = "positive")]
    PositiveThreshold { tau: f64 },
    /// Accept iff `x < tau`.
    #[serde(rename = "negative")]
    NegativeThreshold { tau: f64 },
    /// Piecewise constant: `values[k]` on `[breaks[k-1], breaks[k])`, with
    /// `breaks[-1] = -inf` and `breaks[len] = +inf`.
    Step { breaks: Vec<f64>, values: Vec<f64> },
    /// Accept with probability `p` regardless of the signal.
    Constant { p: f64 },
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum RawClassifier {
    Positive { tau: f64 },
    Negative { tau: f64 },
    Step { breaks: Vec<f64>, values: Vec<f64> },
    Constant { p: f64 },
}

impl TryFrom<RawClassifier> for Classifier {
    type Error = Error;

    fn try_from(raw: RawClassifier) -> Result<Self> {
        let c = match raw {
            RawClassifier::Positive { tau } => Classifier::PositiveThreshold { tau },
            RawClassifier::Negative { tau } => Classifier::NegativeThreshold { tau },
            RawClassifier::Step { breaks, values } => Classifier::Step { breaks, values },
            RawClassifier::Constant { p } => Classifier::Constant { p },
        };
        c.validate()?;
        Ok(c)
    }
}

impl Classifier {
    pub fn step(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let c = Classifier::Step { breaks, values };
        c.validate()?;
        Ok(c)
    }

    pub fn constant(p: f64) -> Result<Self> {
        let c = Classifier::Constant { p };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |v: f64| (0.0..=1.0).contains(&v);
        match self {
            Classifier::PositiveThreshold { tau } | Classifier::NegativeThreshold { tau } => {
                if tau.is_nan() {
                    return Err(Error::Parameter("threshold must not be NaN".into()));
                }
            }
            Classifier::Step { breaks, values } => {
                if breaks.is_empty() || values.len() != breaks.len() + 1 {
                    return Err(Error::Parameter(format!(
                        "step classifier needs k >= 1 breaks and k + 1 values, got {} and {}",
                        breaks.len(),
                        values.len()
                    )));
                }
                if breaks.iter().any(|b| !b.is_finite()) {
                    return Err(Error::Parameter("step breaks must be finite".into()));
                }
                if breaks.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Parameter("step breaks must be strictly ascending".into()));
                }
                if !values.iter().all(|&v| prob(v)) {
                    return Err(Error::Parameter("step values must lie in [0, 1]".into()));
                }
            }
            Classifier::Constant { p } => {
                if !prob(*p) {
                    return Err(Error::Parameter(format!("constant p must lie in [0, 1], got {p}")));
                }
            }
        }
        Ok(())
    }
}

/// Pointwise acceptance probability. Step boundaries take the value of the
/// interval to their right.
pub fn classify_prob(c: &Classifier, x: f64) -> f64 {
    match c {
        Classifier::PositiveThreshold { tau } => f64::from(u8::from(x > *tau)),
        Classifier::NegativeThreshold { tau } => f64::from(u8::from(x < *tau)),
        Classifier::Step { breaks, values } => values[breaks.partition_point(|&b| b <= x)],
        Classifier::Constant { p } => *p,
    }
}

/// Probability that a signal drawn from `dist` is accepted by `c`.
pub fn acceptance_under(c: &Classifier, dist: &ContinuousDist) -> f64 {
    let rate = match c {
        Classifier::PositiveThreshold { tau } => dist.sf(*tau),
        Classifier::NegativeThreshold { tau } => dist.cdf(*tau),
        Classifier::Step { breaks, values } => {
            let mut lo = f64::NEG_INFINITY;
            let mut total = 0.0;
            for (k, &v) in values.iter().enumerate() {
                let hi = breaks.get(k).copied().unwrap_or(f64::INFINITY);
                total += v * dist.mass(lo, hi);
                lo = hi;
            }
            total
        }
        Classifier::Constant { p } => *p,
    };
    rate.clamp(0.0, 1.0)
}

/// `(delta0, delta1)`: acceptance probabilities of a non-complier and a
/// complier.
pub fn acceptance_rates(c: &Classifier, s: &SignalModel) -> (f64, f64) {
    (acceptance_under(c, s.f0()), acceptance_under(c, s.f1()))
}

/// Per-classifier quantities in a given environment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub delta0: f64,
    pub delta1: f64,
    /// `delta1 - delta0`.
    pub gap: f64,
    /// `H(r * gap)`.
    pub prevalence: f64,
    pub tp: f64,
    #[serde(rename = "fn")]
    pub fn_: f64,
    pub fp: f64,
    pub tn: f64,
    pub accuracy: f64,
}

impl Evaluation {
    fn from_rates(env: &Environment, delta0: f64, delta1: f64) -> Self {
        let gap = delta1 - delta0;
        let prevalence = env.prevalence(gap);
        let tp = prevalence * delta1;
        let tn = (1.0 - prevalence) * (1.0 - delta0);
        Evaluation {
            delta0,
            delta1,
            gap,
            prevalence,
            tp,
            fn_: prevalence * (1.0 - delta1),
            fp: (1.0 - prevalence) * delta0,
            tn,
            accuracy: tp + tn,
        }
    }
}

pub fn evaluate(env: &Environment, c: &Classifier) -> Evaluation {
    let (delta0, delta1) = acceptance_rates(c, env.signal());
    Evaluation::from_rates(env, delta0, delta1)
}

/// Sign pattern of a weight vector relative to correct classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Alignment {
    Aligned,
    Misaligned,
    Neither,
}

/// Payoffs for the four confusion cells: `a1` true positive, `a0` false
/// negative, `b1` true negative, `b0` false positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveWeights {
    pub a1: f64,
    pub a0: f64,
    pub b1: f64,
    pub b0: f64,
}

impl ObjectiveWeights {
    pub fn new(a1: f64, a0: f64, b1: f64, b0: f64) -> Self {
        ObjectiveWeights { a1, a0, b1, b0 }
    }

    pub fn accuracy() -> Self {
        ObjectiveWeights::new(1.0, 0.0, 1.0, 0.0)
    }

    /// Rewards compliance only: the objective reduces to `H(r * gap)`.
    pub fn compliance() -> Self {
        ObjectiveWeights::new(1.0, 1.0, 0.0, 0.0)
    }

    pub fn alignment(&self) -> Alignment {
        // The equal-weight case is both; it is reported as aligned.
        if self.a1 >= self.a0 && self.b1 >= self.b0 {
            Alignment::Aligned
        } else if self.a1 <= self.a0 && self.b1 <= self.b0 {
            Alignment::Misaligned
        } else {
            Alignment::Neither
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.a1, self.a0, self.b1, self.b0].iter().all(|w| w.is_finite())
    }

    /// `H (A1 q1 + A0 (1 - q1)) + (1 - H) (B1 (1 - q0) + B0 q0)` for a rule
    /// with acceptance rates `q0`, `q1` facing prevalence `H`.
    pub fn payoff(&self, prevalence: f64, q1: f64, q0: f64) -> f64 {
        prevalence * (self.a1 * q1 + self.a0 * (1.0 - q1))
            + (1.0 - prevalence) * (self.b1 * (1.0 - q0) + self.b0 * q0)
    }

    /// Prevalence at which the weights are indifferent between the matched
    /// thresholds: `(B1 - B0) / (A1 - A0 + B1 - B0)`. `None` when the
    /// denominator vanishes.
    pub fn pivot(&self) -> Option<f64> {
        let den = self.a1 - self.a0 + self.b1 - self.b0;
        (den != 0.0).then(|| (self.b1 - self.b0) / den)
    }
}

pub fn objective_value(env: &Environment, c: &Classifier, w: &ObjectiveWeights) -> f64 {
    let e = evaluate(env, c);
    w.payoff(e.prevalence, e.delta1, e.delta0)
}

/// The individual's action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Behavior {
    NonCompliant,
    Compliant,
}

impl Behavior {
    pub fn as_u8(self) -> u8 {
        match self {
            Behavior::NonCompliant => 0,
            Behavior::Compliant => 1,
        }
    }

    /// Complies iff the incentive `r * gap` covers the cost; indifference
    /// resolves to compliance.
    pub fn respond(cost: f64, incentive: f64) -> Self {
        if incentive >= cost {
            Behavior::Compliant
        } else {
            Behavior::NonCompliant
        }
    }
}

/// Best response of an individual with private cost `gamma` facing `c`.
pub fn best_response(gamma: f64, env: &Environment, c: &Classifier) -> Behavior {
    let gap = evaluate(env, c).gap;
    Behavior::respond(gamma, env.r() * gap)
}

/// Which threshold family a remainder compares against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Positive threshold rule (accept above `tau`).
    Plus,
    /// Negative threshold rule (accept below `tau`).
    Minus,
}

/// `R_b^+(tau) = delta_b - Pr_b[x > tau]` or `R_b^-(tau) = delta_b - Pr_b[x < tau]`:
/// how much more often `c` accepts an individual of behavior `b` than the
/// threshold rule at `tau` does.
pub fn remainder(c: &Classifier, s: &SignalModel, tau: f64, side: Side, behavior: Behavior) -> f64 {
    let dist = match behavior {
        Behavior::NonCompliant => s.f0(),
        Behavior::Compliant => s.f1(),
    };
    let delta = acceptance_under(c, dist);
    let threshold = match side {
        Side::Plus => dist.sf(tau),
        Side::Minus => dist.cdf(tau),
    };
    delta - threshold
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper() -> Environment {
        Environment::paper_example()
    }

    #[test]
    fn pointwise_classification() {
        assert_eq!(classify_prob(&Classifier::PositiveThreshold { tau: 0.0 }, 1.0), 1.0);
        assert_eq!(classify_prob(&Classifier::PositiveThreshold { tau: 0.0 }, 0.0), 0.0);
        assert_eq!(classify_prob(&Classifier::NegativeThreshold { tau: 0.0 }, 1.0), 0.0);
        assert_eq!(classify_prob(&Classifier::NegativeThreshold { tau: 0.0 }, 0.0), 0.0);
        let step = Classifier::step(vec![0.0], vec![0.3, 0.8]).unwrap();
        assert_eq!(classify_prob(&step, -1.0), 0.3);
        assert_eq!(classify_prob(&step, 0.0), 0.8);
        assert_eq!(classify_prob(&step, 2.0), 0.8);
    }

    #[test]
    fn step_validation() {
        assert!(Classifier::step(vec![], vec![0.5]).is_err());
        assert!(Classifier::step(vec![1.0, 1.0], vec![0.1, 0.2, 0.3]).is_err());
        assert!(Classifier::step(vec![0.0], vec![0.1, 1.2]).is_err());
        assert!(Classifier::step(vec![0.0], vec![0.1]).is_err());
        assert!(Classifier::constant(-0.1).is_err());
    }

    #[test]
    fn acceptance_rates_match_normal_cdf() {
        let s = *paper().signal();
        assert_eq!(acceptance_rates(&Classifier::Constant { p: 1.0 }, &s), (1.0, 1.0));

        let (d0, d1) = acceptance_rates(&Classifier::PositiveThreshold { tau: -0.1 }, &s);
        // 1 - Phi(-0.1), 1 - Phi(-1.1)
        assert!((d0 - 0.539_827_837_277_029).abs() < 1e-12);
        assert!((d1 - 0.864_333_939_053_617_3).abs() < 1e-12);

        let (d0, d1) = acceptance_rates(&Classifier::NegativeThreshold { tau: -1.4 }, &s);
        // Phi(-1.4), Phi(-2.4)
        assert!((d0 - 0.080_756_659_233_771_07).abs() < 1e-12);
        assert!((d1 - 0.008_197_535_924_596_131).abs() < 1e-12);
    }

    #[test]
    fn paper_example_evaluations() {
        let env = paper();
        let e = evaluate(&env, &Classifier::PositiveThreshold { tau: -0.1 });
        assert!((e.prevalence - 0.81).abs() < 0.005);
        assert!((e.accuracy - 0.787).abs() < 0.001);
        assert!((env.r() * e.gap - 1.625).abs() < 0.01);
        assert!((e.accuracy - 0.786_953_320_992_584_5).abs() < 1e-10);

        let e = evaluate(&env, &Classifier::NegativeThreshold { tau: -1.4 });
        assert!((e.prevalence - 0.13).abs() < 0.005);
        assert!((env.r() * e.gap - (-0.36)).abs() < 0.01);
        // exact value; the rounded-prevalence figure quoted for this rule is 0.801
        assert!((e.accuracy - 0.798_167_075_884_426_4).abs() < 1e-10);
    }

    #[test]
    fn constant_accept_has_zero_gap() {
        let env = paper();
        let e = evaluate(&env, &Classifier::Constant { p: 1.0 });
        assert_eq!(e.gap, 0.0);
        let h0 = env.cost().cdf(0.0);
        assert_eq!(e.prevalence, h0);
        assert!((e.accuracy - h0).abs() < 1e-15);
    }

    #[test]
    fn evaluation_cells_are_consistent() {
        let env = paper();
        let c = Classifier::step(vec![-1.0, 1.0], vec![0.2, 0.5, 0.9]).unwrap();
        let e = evaluate(&env, &c);
        assert!((e.gap - (e.delta1 - e.delta0)).abs() <= 1e-12);
        assert!((e.tp + e.fn_ - e.prevalence).abs() <= 1e-9);
        assert!((e.fp + e.tn - (1.0 - e.prevalence)).abs() <= 1e-9);
        assert!((e.accuracy - (e.tp + e.tn)).abs() <= 1e-12);
        assert!((e.accuracy - 0.600_006_793_477_302_1).abs() < 1e-10);
    }

    #[test]
    fn objective_specializations() {
        let env = paper();
        let neg = Classifier::NegativeThreshold { tau: -1.4 };
        let acc = objective_value(&env, &neg, &ObjectiveWeights::accuracy());
        assert_eq!(acc, evaluate(&env, &neg).accuracy);

        let step = Classifier::step(vec![-1.0, 1.0], vec![0.2, 0.5, 0.9]).unwrap();
        for c in [&neg, &step] {
            let comp = objective_value(&env, c, &ObjectiveWeights::compliance());
            assert!((comp - evaluate(&env, c).prevalence).abs() < 1e-15);
            let flat = objective_value(&env, c, &ObjectiveWeights::new(0.3, 0.3, 0.3, 0.3));
            assert!((flat - 0.3).abs() < 1e-15);
        }
    }

    #[test]
    fn alignment_classes() {
        assert_eq!(ObjectiveWeights::accuracy().alignment(), Alignment::Aligned);
        assert_eq!(ObjectiveWeights::compliance().alignment(), Alignment::Aligned);
        assert_eq!(ObjectiveWeights::new(0.0, 1.0, 0.0, 2.0).alignment(), Alignment::Misaligned);
        assert_eq!(ObjectiveWeights::new(1.0, 0.0, 0.0, 1.0).alignment(), Alignment::Neither);
        assert_eq!(ObjectiveWeights::accuracy().pivot(), Some(0.5));
        assert_eq!(ObjectiveWeights::new(1.0, 0.0, 0.0, 1.0).pivot(), None);
    }

    #[test]
    fn best_response_rules() {
        let env = paper();
        let accept_all = Classifier::Constant { p: 1.0 };
        assert_eq!(best_response(-1.0, &env, &accept_all), Behavior::Compliant);
        // indifference complies
        assert_eq!(best_response(0.0, &env, &accept_all), Behavior::Compliant);
        let pos = Classifier::PositiveThreshold { tau: -0.1 };
        assert_eq!(best_response(1.0, &env, &pos), Behavior::Compliant);
        assert_eq!(best_response(2.0, &env, &pos), Behavior::NonCompliant);
    }

    #[test]
    fn remainders() {
        let s = *paper().signal();
        let pos = Classifier::PositiveThreshold { tau: 0.3 };
        for b in [Behavior::NonCompliant, Behavior::Compliant] {
            assert_eq!(remainder(&pos, &s, 0.3, Side::Plus, b), 0.0);
        }
        let all = Classifier::Constant { p: 1.0 };
        let r = remainder(&all, &s, 0.3, Side::Plus, Behavior::NonCompliant);
        assert!((r - s.f0().cdf(0.3)).abs() < 1e-15);

        let step = Classifier::step(vec![-1.0, 1.0], vec![0.2, 0.5, 0.9]).unwrap();
        for tau in [-3.0, -0.2, 0.5, 2.5] {
            for b in [Behavior::NonCompliant, Behavior::Compliant] {
                let plus = remainder(&step, &s, tau, Side::Plus, b);
                let minus = remainder(&step, &s, tau, Side::Minus, b);
                let delta = match b {
                    Behavior::NonCompliant => acceptance_rates(&step, &s).0,
                    Behavior::Compliant => acceptance_rates(&step, &s).1,
                };
                assert!((plus + minus - (2.0 * delta - 1.0)).abs() <= 1e-12);
            }
        }
        // tau_H of this classifier's gap, solved independently
        let r = remainder(&step, &s, 1.793_440_111_454_711, Side::Plus, Behavior::NonCompliant);
        assert!(r >= 0.0);
        assert!((r - 0.479_414_236_063_568_9).abs() < 1e-9);
    }

    #[test]
    fn classifier_json_shapes() {
        let c: Classifier = serde_json::from_str(r#"{"type":"positive","tau":-0.1}"#).unwrap();
        assert_eq!(c, Classifier::PositiveThreshold { tau: -0.1 });
        let c: Classifier =
            serde_json::from_str(r#"{"type":"step","breaks":[-1,1],"values":[0.2,0.5,0.9]}"#)
                .unwrap();
        assert!(matches!(c, Classifier::Step { .. }));
        assert!(serde_json::from_str::<Classifier>(r#"{"type":"constant","p":2}"#).is_err());
        assert!(serde_json::from_str::<Classifier>(r#"{"type":"wedge","tau":0}"#).is_err());
        let back: Classifier = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}

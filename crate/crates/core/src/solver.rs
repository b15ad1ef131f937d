//! Prevalence matching, optimization over the two threshold families, and the
//! overall solve that picks the best rule.

use serde::{Deserialize, Serialize};

use crate::classifier::{
    acceptance_rates, acceptance_under, evaluate, objective_value, remainder, Alignment, Behavior,
    Classifier, Evaluation, ObjectiveWeights, Side,
};
use crate::dist::{bisect_to_convergence, maximize_1d, NumericsConfig};
use crate::error::{Error, Result};
use crate::model::{Environment, SignalModel};

/// Tail probability that bounds the threshold search span.
pub const SEARCH_TAIL: f64 = 1e-6;

/// Gaps at or below this magnitude are treated as zero.
pub const ZERO_GAP_TOL: f64 = 1e-12;

/// Family values closer than this are a tie.
pub const TIE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Accept above the threshold.
    Positive,
    /// Accept below the threshold.
    Negative,
}

impl Family {
    pub fn rule(self, tau: f64) -> Classifier {
        match self {
            Family::Positive => Classifier::PositiveThreshold { tau },
            Family::Negative => Classifier::NegativeThreshold { tau },
        }
    }

    /// The family whose rules can reproduce a gap of this sign.
    pub fn for_gap(gap: f64) -> Self {
        if gap > 0.0 {
            Family::Positive
        } else {
            Family::Negative
        }
    }

    fn side(self) -> Side {
        match self {
            Family::Positive => Side::Plus,
            Family::Negative => Side::Minus,
        }
    }
}

/// Acceptance gap `delta1 - delta0` of the family's rule at `tau`:
/// `F0 - F1` for positive rules, `F1 - F0` for negative ones.
pub fn gap_of_threshold(s: &SignalModel, tau: f64, family: Family) -> f64 {
    let g = s.threshold_gap(tau);
    match family {
        Family::Positive => g,
        Family::Negative => -g,
    }
}

/// The two thresholds whose rules reproduce a target gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrevalenceMatch {
    pub target_gap: f64,
    pub family: Family,
    pub tau_l: f64,
    pub tau_h: f64,
    /// The target is the extremal gap, so both thresholds sit at `tau_c`.
    pub degenerate: bool,
}

impl PrevalenceMatch {
    /// Largest `|gap_of_threshold(tau) - target_gap|` over both thresholds.
    pub fn residual(&self, s: &SignalModel) -> f64 {
        [self.tau_l, self.tau_h]
            .iter()
            .map(|&t| (gap_of_threshold(s, t, self.family) - self.target_gap).abs())
            .fold(0.0, f64::max)
    }
}

/// Solves `gap_of_threshold(tau) = target_gap` on each side of `tau_c`.
pub fn match_prevalence(s: &SignalModel, target_gap: f64) -> Result<PrevalenceMatch> {
    if !target_gap.is_finite() {
        return Err(Error::Parameter(format!("target gap must be finite, got {target_gap}")));
    }
    if target_gap.abs() <= ZERO_GAP_TOL {
        return Err(Error::ZeroGap);
    }
    let family = Family::for_gap(target_gap);
    let level = target_gap.abs();
    let max = s.max_gap();
    if level > max + 1e-12 {
        return Err(Error::InfeasibleGap {
            target: target_gap,
            max,
        });
    }
    let tau_c = s.tau_c();
    if level >= max - 1e-12 {
        return Ok(PrevalenceMatch {
            target_gap,
            family,
            tau_l: tau_c,
            tau_h: tau_c,
            degenerate: true,
        });
    }

    let excess = |t: f64| s.threshold_gap(t) - level;
    let (edge_lo, edge_hi) = s.span(SEARCH_TAIL);
    let lo = expand_until_below(&excess, edge_lo, tau_c, -1.0)?;
    let hi = expand_until_below(&excess, edge_hi, tau_c, 1.0)?;
    let tau_l = bisect_to_convergence(excess, lo, tau_c)?;
    let tau_h = bisect_to_convergence(excess, tau_c, hi)?;
    Ok(PrevalenceMatch {
        target_gap,
        family,
        tau_l,
        tau_h,
        degenerate: false,
    })
}

/// Walks outward from `start` (away from `tau_c`) until `excess` is
/// negative, doubling the step each time.
fn expand_until_below<F: Fn(f64) -> f64>(
    excess: &F,
    start: f64,
    tau_c: f64,
    direction: f64,
) -> Result<f64> {
    let mut x = start;
    let mut step = (start - tau_c).abs().max(1.0);
    for _ in 0..64 {
        if excess(x) < 0.0 {
            return Ok(x);
        }
        x += direction * step;
        step *= 2.0;
    }
    Err(Error::NoBracket {
        lo: start.min(x),
        hi: start.max(x),
        f_lo: excess(start),
        f_hi: excess(x),
    })
}

/// The optimal rule within one threshold family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyOptimum {
    pub family: Family,
    pub tau: f64,
    pub value: f64,
    /// Number of grid points tied with the optimum (flat objective).
    pub tied_points: usize,
    /// `(tau, value)` on the uniform scan grid.
    pub curve: Vec<(f64, f64)>,
}

/// Objective of the family's rule at `tau`, including the prevalence it
/// induces.
pub fn family_objective(env: &Environment, w: &ObjectiveWeights, family: Family, tau: f64) -> f64 {
    let rule = family.rule(tau);
    let s = env.signal();
    let q0 = acceptance_under(&rule, s.f0());
    let q1 = acceptance_under(&rule, s.f1());
    let prevalence = env.prevalence(gap_of_threshold(s, tau, family));
    w.payoff(prevalence, q1, q0)
}

/// Threshold search span for an environment.
pub fn search_span(env: &Environment) -> (f64, f64) {
    env.signal().span(SEARCH_TAIL)
}

pub fn optimize_family(
    env: &Environment,
    w: &ObjectiveWeights,
    family: Family,
    cfg: &NumericsConfig,
) -> Result<FamilyOptimum> {
    cfg.validate()?;
    let (lo, hi) = search_span(env);
    let m = maximize_1d(|t| family_objective(env, w, family, t), lo, hi, cfg)?;
    Ok(FamilyOptimum {
        family,
        tau: m.x,
        value: m.value,
        tied_points: m.tied_points,
        curve: m.grid,
    })
}

/// Best rule of one kind, as reported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSummary {
    pub classifier: Classifier,
    pub value: f64,
    pub evaluation: Evaluation,
}

impl RuleSummary {
    fn new(env: &Environment, classifier: Classifier, w: &ObjectiveWeights) -> Self {
        let evaluation = evaluate(env, &classifier);
        let value = w.payoff(evaluation.prevalence, evaluation.delta1, evaluation.delta0);
        RuleSummary {
            classifier,
            value,
            evaluation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WinnerKind {
    Positive,
    Negative,
    Constant,
}

/// One row of the plot-ready objective curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub tau: f64,
    pub gap_pos: f64,
    pub gap_neg: f64,
    pub prevalence_pos: f64,
    pub prevalence_neg: f64,
    pub value_pos: f64,
    pub value_neg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub tau_c: f64,
    pub max_gap: f64,
    pub search_span: (f64, f64),
    pub tied_points_positive: usize,
    pub tied_points_negative: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub objective: ObjectiveWeights,
    pub alignment: Alignment,
    /// Set when the weights are neither aligned nor misaligned, so the
    /// optimality of threshold rules is not guaranteed.
    pub guarantee_void: bool,
    pub warnings: Vec<String>,
    pub best_positive: RuleSummary,
    pub best_negative: RuleSummary,
    pub best_constant: RuleSummary,
    pub winner: WinnerKind,
    pub winning_rule: RuleSummary,
    /// The winner accepts low signals, i.e. stronger evidence of compliance
    /// can lower the chance of a positive decision.
    pub score_monotonicity_violated: bool,
    pub diagnostics: SolveDiagnostics,
    pub curve: Vec<CurvePoint>,
}

pub fn solve_optimal(
    env: &Environment,
    w: &ObjectiveWeights,
    cfg: &NumericsConfig,
) -> Result<SolveReport> {
    if !w.is_finite() {
        return Err(Error::Parameter("objective weights must be finite".into()));
    }
    let pos = optimize_family(env, w, Family::Positive, cfg)?;
    let neg = optimize_family(env, w, Family::Negative, cfg)?;

    let best_positive = RuleSummary::new(env, Family::Positive.rule(pos.tau), w);
    let best_negative = RuleSummary::new(env, Family::Negative.rule(neg.tau), w);
    let reject = RuleSummary::new(env, Classifier::Constant { p: 0.0 }, w);
    let accept = RuleSummary::new(env, Classifier::Constant { p: 1.0 }, w);
    let best_constant = if reject.value > accept.value { reject } else { accept };

    let mut winner = WinnerKind::Positive;
    let mut best_value = best_positive.value;
    for (kind, value) in [
        (WinnerKind::Constant, best_constant.value),
        (WinnerKind::Negative, best_negative.value),
    ] {
        if value > best_value + TIE_TOL {
            winner = kind;
            best_value = value;
        }
    }
    let winning_rule = match winner {
        WinnerKind::Positive => best_positive.clone(),
        WinnerKind::Negative => best_negative.clone(),
        WinnerKind::Constant => best_constant.clone(),
    };

    let alignment = w.alignment();
    let guarantee_void = alignment == Alignment::Neither;
    let mut warnings = Vec::new();
    if guarantee_void {
        warnings.push(
            "objective weights are neither accuracy-aligned nor accuracy-misaligned; \
             threshold rules are not guaranteed optimal"
                .to_string(),
        );
    }
    for f in [&pos, &neg] {
        if f.tied_points > 1 {
            warnings.push(format!(
                "{:?} family objective is flat at its optimum over {} grid points; \
                 reporting the smallest threshold",
                f.family, f.tied_points
            ));
        }
    }

    let s = env.signal();
    let curve = pos
        .curve
        .iter()
        .zip(&neg.curve)
        .map(|(&(tau, value_pos), &(_, value_neg))| {
            let gap_pos = gap_of_threshold(s, tau, Family::Positive);
            let gap_neg = gap_of_threshold(s, tau, Family::Negative);
            CurvePoint {
                tau,
                gap_pos,
                gap_neg,
                prevalence_pos: env.prevalence(gap_pos),
                prevalence_neg: env.prevalence(gap_neg),
                value_pos,
                value_neg,
            }
        })
        .collect();

    Ok(SolveReport {
        objective: *w,
        alignment,
        guarantee_void,
        warnings,
        score_monotonicity_violated: winner == WinnerKind::Negative,
        best_positive,
        best_negative,
        best_constant,
        winner,
        winning_rule,
        diagnostics: SolveDiagnostics {
            tau_c: s.tau_c(),
            max_gap: s.max_gap(),
            search_span: search_span(env),
            tied_points_positive: pos.tied_points,
            tied_points_negative: neg.tied_points,
        },
        curve,
    })
}

/// Remainders of a classifier against both rule families at one threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RemainderSet {
    pub r0_plus: f64,
    pub r1_plus: f64,
    pub r0_minus: f64,
    pub r1_minus: f64,
}

impl RemainderSet {
    pub fn at(c: &Classifier, s: &SignalModel, tau: f64) -> Self {
        RemainderSet {
            r0_plus: remainder(c, s, tau, Side::Plus, Behavior::NonCompliant),
            r1_plus: remainder(c, s, tau, Side::Plus, Behavior::Compliant),
            r0_minus: remainder(c, s, tau, Side::Minus, Behavior::NonCompliant),
            r1_minus: remainder(c, s, tau, Side::Minus, Behavior::Compliant),
        }
    }

    /// `(R0, R1)` on the given side.
    pub fn side(&self, side: Side) -> (f64, f64) {
        match side {
            Side::Plus => (self.r0_plus, self.r1_plus),
            Side::Minus => (self.r0_minus, self.r1_minus),
        }
    }
}

/// A matched threshold, its remainders, and the payoff of its rule at the
/// classifier's own prevalence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedThreshold {
    pub tau: f64,
    pub remainders: RemainderSet,
    pub comparator_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchedPoint {
    TauL,
    TauH,
}

/// One disjunct of the dominance condition: a prevalence inequality paired
/// with a remainder sign at one matched threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionBranch {
    /// e.g. `"H <= H*"`.
    pub prevalence_condition: String,
    pub prevalence_condition_holds: bool,
    pub threshold: MatchedPoint,
    /// e.g. `"R0+(tau_H) >= 0"`.
    pub remainder_condition: String,
    pub remainder_value: f64,
    pub remainder_condition_holds: bool,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub gap: f64,
    pub prevalence: f64,
    pub objective_value: f64,
    pub matched: PrevalenceMatch,
    /// Indifference prevalence `H*`; 1/2 for accuracy.
    pub pivot: Option<f64>,
    pub tau_l: MatchedThreshold,
    pub tau_h: MatchedThreshold,
    pub branches: Vec<ConditionBranch>,
    /// At least one branch holds.
    pub holds: bool,
    pub notice: Option<String>,
}

/// Evaluates the dominance condition for `c`: matched thresholds, remainders
/// at each, and which branch (prevalence side, remainder sign) applies.
///
/// The payoff difference between a matched rule and `c` is
/// `((1 - H)(B1 - B0) - H(A1 - A0)) * R(tau)` with `R = R0 = R1` on the
/// matched side, so a branch pairs the sign of the bracket with the sign of
/// the remainder at `tau_H` (which is `>= 0` for positive gaps, `<= 0` for
/// negative) or `tau_L` (the opposite).
pub fn check_conditions(
    env: &Environment,
    c: &Classifier,
    w: &ObjectiveWeights,
) -> Result<ConditionReport> {
    let s = env.signal();
    let e = evaluate(env, c);
    if e.gap.abs() <= ZERO_GAP_TOL {
        return Err(Error::ZeroGap);
    }
    let matched = match_prevalence(s, e.gap)?;
    let h = e.prevalence;
    let matched_at = |tau: f64| {
        let rule = matched.family.rule(tau);
        let (q0, q1) = acceptance_rates(&rule, s);
        MatchedThreshold {
            tau,
            remainders: RemainderSet::at(c, s, tau),
            comparator_value: w.payoff(h, q1, q0),
        }
    };
    let tau_l = matched_at(matched.tau_l);
    let tau_h = matched_at(matched.tau_h);

    let den = w.a1 - w.a0 + w.b1 - w.b0;
    let pivot = w.pivot();
    let (needs_nonneg, needs_nonpos) = match pivot {
        Some(p) if den > 0.0 => (h <= p, h >= p),
        Some(p) => (h >= p, h <= p),
        None => (w.b1 - w.b0 >= 0.0, w.b1 - w.b0 <= 0.0),
    };
    let (le, ge) = match (pivot, den > 0.0) {
        (None, _) => ("B1 - B0 >= 0", "B1 - B0 <= 0"),
        (Some(_), true) => ("H <= H*", "H >= H*"),
        (Some(_), false) => ("H >= H*", "H <= H*"),
    };

    let side = matched.family.side();
    let sign = match side {
        Side::Plus => "+",
        Side::Minus => "-",
    };
    // Positive gaps: R0+(tau_H) >= 0 and R1+(tau_L) <= 0.
    // Negative gaps: R1-(tau_L) >= 0 and R0-(tau_H) <= 0.
    let (nonneg_point, nonneg_value, nonneg_label, nonpos_point, nonpos_value, nonpos_label) =
        match side {
            Side::Plus => (
                MatchedPoint::TauH,
                tau_h.remainders.r0_plus,
                format!("R0{sign}(tau_H) >= 0"),
                MatchedPoint::TauL,
                tau_l.remainders.r1_plus,
                format!("R1{sign}(tau_L) <= 0"),
            ),
            Side::Minus => (
                MatchedPoint::TauL,
                tau_l.remainders.r1_minus,
                format!("R1{sign}(tau_L) >= 0"),
                MatchedPoint::TauH,
                tau_h.remainders.r0_minus,
                format!("R0{sign}(tau_H) <= 0"),
            ),
        };
    let branches = vec![
        ConditionBranch {
            prevalence_condition: le.to_string(),
            prevalence_condition_holds: needs_nonneg,
            threshold: nonneg_point,
            remainder_condition: nonneg_label,
            remainder_value: nonneg_value,
            remainder_condition_holds: nonneg_value >= 0.0,
            holds: needs_nonneg && nonneg_value >= 0.0,
        },
        ConditionBranch {
            prevalence_condition: ge.to_string(),
            prevalence_condition_holds: needs_nonpos,
            threshold: nonpos_point,
            remainder_condition: nonpos_label,
            remainder_value: nonpos_value,
            remainder_condition_holds: nonpos_value <= 0.0,
            holds: needs_nonpos && nonpos_value <= 0.0,
        },
    ];
    let holds = branches.iter().any(|b| b.holds);
    let notice = (den == 0.0).then(|| {
        if w.a1 == w.a0 && w.b1 == w.b0 {
            "objective depends on prevalence only (compliance case); the optimum is the \
             tau_c threshold rule or a constant rule"
                .to_string()
        } else {
            "pivot prevalence undefined (A1 - A0 + B1 - B0 = 0)".to_string()
        }
    });

    Ok(ConditionReport {
        gap: e.gap,
        prevalence: h,
        objective_value: objective_value(env, c, w),
        matched,
        pivot,
        tau_l,
        tau_h,
        branches,
        holds,
        notice,
    })
}

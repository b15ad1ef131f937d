//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use perfclass::classifier::evaluate;
use perfclass::cli::{SolveOutput, EXIT_OK};
use perfclass::oracle::{run_suite, simulate_population, TrialConfig, TrialReport, WeightMode};
use perfclass::solver::solve_optimal;
use perfclass::{Classifier, Environment, NumericsConfig, ObjectiveWeights, SolveReport};

/// Phi(0.5) - Phi(-0.5), from an independent normal-CDF implementation.
const CENTRAL_MASS_HALF: f64 = 0.382_924_922_548_026_24;

struct Outcome {
    failed: usize,
}

impl Outcome {
    fn record(&mut self, id: &str, title: &str, checks: &[(String, bool)]) {
        let ok = checks.iter().all(|(_, ok)| *ok);
        if !ok {
            self.failed += 1;
        }
        println!("[{}] criterion {id}: {title}", if ok { "PASS" } else { "FAIL" });
        for (detail, ok) in checks {
            println!("       {} {detail}", if *ok { "ok  " } else { "MISS" });
        }
    }
}

fn within(name: &str, got: f64, want: f64, tol: f64) -> (String, bool) {
    let ok = (got - want).abs() <= tol;
    (format!("{name} = {got:.6} (target {want} +- {tol})"), ok)
}

fn fast(name: &str, took: Duration, limit_s: f64) -> (String, bool) {
    let secs = took.as_secs_f64();
    (format!("{name} runtime {secs:.2} s (< {limit_s} s)"), secs < limit_s)
}

/// Runs the `paper-example` command and returns its report and wall time.
fn paper_example() -> (SolveReport, Duration) {
    let dir = tempfile::TempDir::new().unwrap();
    let out = dir.path().join("report.json");
    let start = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_perfclass"))
        .arg("paper-example")
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    let took = start.elapsed();
    assert_eq!(status.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&status.stderr));
    let output: SolveOutput = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    (output.report, took)
}

fn tau_of(c: &Classifier) -> f64 {
    match c {
        Classifier::PositiveThreshold { tau } | Classifier::NegativeThreshold { tau } => *tau,
        other => panic!("expected a threshold rule, got {other:?}"),
    }
}

fn suite(weights: WeightMode) -> (TrialReport, Duration) {
    let cfg = TrialConfig {
        n_trials: 500,
        seed: 42,
        tolerance: 1e-8,
        weights,
        ..TrialConfig::default()
    };
    let start = Instant::now();
    let report = run_suite(&cfg).unwrap();
    (report, start.elapsed())
}

fn main() {
    let mut outcome = Outcome { failed: 0 };
    let env = Environment::paper_example();
    let (report, took) = paper_example();

    let pos = &report.best_positive;
    let at_tenth = evaluate(&env, &Classifier::PositiveThreshold { tau: -0.1 });
    outcome.record(
        "1",
        "positive threshold family on the worked example",
        &[
            within("optimal tau", tau_of(&pos.classifier), -0.1, 0.05),
            within("r*gap at tau=-0.1", env.r() * at_tenth.gap, 1.625, 0.01),
            within("prevalence", pos.evaluation.prevalence, 0.81, 0.005),
            within("accuracy", pos.evaluation.accuracy, 0.787, 0.002),
            fast("paper-example", took, 5.0),
        ],
    );

    let neg = &report.best_negative;
    outcome.record(
        "2",
        "negative threshold family on the worked example",
        &[
            within("optimal tau", tau_of(&neg.classifier), -1.4, 0.05),
            within("prevalence", neg.evaluation.prevalence, 0.13, 0.005),
            within("accuracy", neg.evaluation.accuracy, 0.801, 0.002),
            (
                format!("negative value {:.6} > positive value {:.6}", neg.value, pos.value),
                neg.value > pos.value,
            ),
            fast("paper-example", took, 5.0),
        ],
    );

    let (acc, acc_took) = suite(WeightMode::Accuracy);
    outcome.record(
        "3",
        "dominance over random step classifiers, accuracy weights",
        &[
            (format!("trials run {}", acc.trials_run), acc.trials_run == 500),
            (
                format!(
                    "dominance failures {} (min slack {:.3e})",
                    acc.dominance_failures,
                    acc.min_dominance_slack.unwrap_or(f64::NAN)
                ),
                acc.dominance_failures == 0,
            ),
            fast("suite", acc_took, 60.0),
        ],
    );

    let (cor, cor_took) = suite(WeightMode::Corollary);
    outcome.record(
        "4",
        "dominance over random step classifiers, aligned and misaligned weights",
        &[
            (format!("trials run {}", cor.trials_run), cor.trials_run == 500),
            (
                format!(
                    "dominance failures {} (min slack {:.3e})",
                    cor.dominance_failures,
                    cor.min_dominance_slack.unwrap_or(f64::NAN)
                ),
                cor.dominance_failures == 0,
            ),
            fast("suite", cor_took, 60.0),
        ],
    );

    let both = [&acc, &cor];
    let checked: usize = both
        .iter()
        .map(|r| r.positive_gap_trials + r.negative_gap_trials)
        .sum();
    let sign_failures: usize = both.iter().map(|r| r.sign_failures).sum();
    let mismatch = both.iter().map(|r| r.max_remainder_mismatch).fold(0.0, f64::max);
    outcome.record(
        "5",
        "remainder signs and matched-remainder equality",
        &[
            (format!("trials with nonzero gap {checked}"), checked > 0),
            (format!("sign failures {sign_failures}"), sign_failures == 0),
            (format!("max |R1 - R0| {mismatch:.3e} (<= 1e-8)"), mismatch <= 1e-8),
        ],
    );

    let residual = both.iter().map(|r| r.max_match_residual).fold(0.0, f64::max);
    let match_failures: usize = both.iter().map(|r| r.match_failures).sum();
    outcome.record(
        "6",
        "prevalence-matched threshold residuals and ordering",
        &[
            (format!("max residual {residual:.3e} (<= 1e-9)"), residual <= 1e-9),
            (format!("residual or ordering failures {match_failures}"), match_failures == 0),
        ],
    );

    let mut mc = Vec::new();
    let start = Instant::now();
    for (name, rule, seed) in [("positive", &pos.classifier, 1), ("negative", &neg.classifier, 2)] {
        let analytic = evaluate(&env, rule);
        let emp = simulate_population(&env, rule, 1_000_000, seed).unwrap();
        let z = emp.z_scores(&analytic);
        mc.push((
            format!(
                "{name} accuracy {:.5} vs {:.5} (z = {:+.2}, se {:.1e})",
                emp.accuracy.value, analytic.accuracy, z.accuracy, emp.accuracy.se
            ),
            z.accuracy.abs() <= 4.0,
        ));
        mc.push((
            format!(
                "{name} prevalence {:.5} vs {:.5} (z = {:+.2}, se {:.1e})",
                emp.prevalence.value, analytic.prevalence, z.prevalence, emp.prevalence.se
            ),
            z.prevalence.abs() <= 4.0,
        ));
    }
    mc.push(fast("simulation", start.elapsed(), 30.0));
    outcome.record("7", "Monte Carlo cross-check at n = 1e6", &mc);

    let compliance =
        solve_optimal(&env, &ObjectiveWeights::compliance(), &NumericsConfig::default()).unwrap();
    let is_positive = matches!(compliance.winning_rule.classifier, Classifier::PositiveThreshold { .. });
    let mut checks = vec![(format!("winner {:?}", compliance.winner), is_positive)];
    if is_positive {
        checks.push(within("tau", tau_of(&compliance.winning_rule.classifier), 0.5, 1e-4));
    }
    outcome.record("8", "compliance weights pick the crossing point", &checks);

    let s = env.signal();
    let tau_c = s.tau_c();
    let (lo, hi) = (-6.0, 7.0);
    let grid: Vec<(f64, f64)> = (0..1000)
        .map(|i| {
            let t = lo + (hi - lo) * i as f64 / 999.0;
            (t, s.threshold_gap(t))
        })
        .collect();
    let rising = grid
        .windows(2)
        .filter(|w| w[1].0 <= tau_c)
        .all(|w| w[1].1 >= w[0].1);
    let falling = grid
        .windows(2)
        .filter(|w| w[0].0 >= tau_c)
        .all(|w| w[1].1 <= w[0].1);
    let grid_max = grid.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    outcome.record(
        "9",
        "quasiconcavity of the threshold gap",
        &[
            (format!("nondecreasing below tau_c = {tau_c:.6}"), rising),
            ("nonincreasing above tau_c".to_string(), falling),
            within("D(tau_c)", s.max_gap(), CENTRAL_MASS_HALF, 1e-6),
            (
                format!("grid max {grid_max:.9} <= D(tau_c)"),
                grid_max <= s.max_gap() + 1e-15,
            ),
        ],
    );

    println!("acceptance: {} of 9 criteria failed", outcome.failed);
    if outcome.failed > 0 {
        std::process::exit(1);
    }
}

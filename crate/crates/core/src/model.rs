//! The game instance: a signal pair satisfying the strict monotone
//! likelihood ratio property, a compliance-cost law, and the net reward.

use serde::{Deserialize, Serialize};

use crate::dist::{bisect_to_convergence, ContinuousDist};
use crate::error::{Error, Result};

/// Grid size used by [`SignalModel::new`] for the MLRP check.
pub const MLRP_GRID_N: usize = 2001;

/// Central probability mass spanned by the MLRP validation grid.
const MLRP_GRID_MASS: f64 = 1.0 - 1e-6;

/// Minimum increase of the log-likelihood ratio between adjacent grid points.
const MLRP_STEP_TOL: f64 = 1e-12;

/// Signal densities for non-compliers (`f0`) and compliers (`f1`), with the
/// cached crossing point `tau_c` where `f0 = f1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignalModel {
    f0: ContinuousDist,
    f1: ContinuousDist,
    tau_c: f64,
}

impl SignalModel {
    pub fn new(f0: ContinuousDist, f1: ContinuousDist) -> Result<Self> {
        let tau_c = validate_mlrp(&f0, &f1, MLRP_GRID_N)?;
        Ok(SignalModel { f0, f1, tau_c })
    }

    pub fn f0(&self) -> &ContinuousDist {
        &self.f0
    }

    pub fn f1(&self) -> &ContinuousDist {
        &self.f1
    }

    pub fn tau_c(&self) -> f64 {
        self.tau_c
    }

    /// `F0(tau) - F1(tau)`, the acceptance gap of the positive threshold rule
    /// at `tau`; evaluated on whichever tail avoids cancellation.
    pub fn threshold_gap(&self, tau: f64) -> f64 {
        if tau <= self.tau_c {
            self.f0.cdf(tau) - self.f1.cdf(tau)
        } else {
            self.f1.sf(tau) - self.f0.sf(tau)
        }
    }

    /// The largest gap any classifier can achieve, attained at `tau_c`.
    pub fn max_gap(&self) -> f64 {
        self.threshold_gap(self.tau_c)
    }

    /// `[min quantile(p), max quantile(1 - p)]` over both densities.
    pub fn span(&self, tail: f64) -> (f64, f64) {
        let lo = self.f0.quantile(tail).min(self.f1.quantile(tail));
        let hi = self.f0.quantile(1.0 - tail).max(self.f1.quantile(1.0 - tail));
        (lo, hi)
    }
}

/// Checks that `f1/f0` is strictly increasing on a `grid_n`-point grid over
/// the central `1 - 1e-6` mass of both densities, and returns the crossing
/// point of the two densities.
pub fn validate_mlrp(f0: &ContinuousDist, f1: &ContinuousDist, grid_n: usize) -> Result<f64> {
    if !(f0.has_full_support() && f1.has_full_support()) {
        return Err(Error::Parameter(
            "signal densities must have full support (uniform is not allowed)".into(),
        ));
    }
    if grid_n < 100 {
        return Err(Error::Parameter(format!(
            "MLRP grid needs at least 100 points, got {grid_n}"
        )));
    }
    let tail = 0.5 * (1.0 - MLRP_GRID_MASS);
    let lo = f0.quantile(tail).min(f1.quantile(tail));
    let hi = f0.quantile(1.0 - tail).max(f1.quantile(1.0 - tail));
    let step = (hi - lo) / (grid_n - 1) as f64;
    let xs: Vec<f64> = (0..grid_n).map(|i| lo + step * i as f64).collect();
    let log_ratio: Vec<f64> = xs.iter().map(|&x| f1.ln_density(x) - f0.ln_density(x)).collect();

    for i in 1..grid_n {
        let rise = log_ratio[i] - log_ratio[i - 1];
        if rise.is_nan() || rise <= MLRP_STEP_TOL {
            return Err(Error::MlrpViolation {
                lo: xs[i - 1],
                hi: xs[i],
            });
        }
    }

    let crossing = log_ratio
        .windows(2)
        .position(|w| w[0] <= 0.0 && w[1] >= 0.0)
        .ok_or(Error::CrossingNotFound)?;
    let diff = |x: f64| f1.density(x) - f0.density(x);
    bisect_to_convergence(diff, xs[crossing], xs[crossing + 1])
}

/// A fully specified game: cost law `H`, rewards, and signals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEnvironment")]
pub struct Environment {
    cost: ContinuousDist,
    r1: f64,
    r0: f64,
    r: f64,
    signal: SignalModel,
}

impl Environment {
    pub fn new(cost: ContinuousDist, r1: f64, r0: f64, signal: SignalModel) -> Result<Self> {
        let finite = r1.is_finite() && r0.is_finite();
        if !finite || r1 < 0.0 || r0 > 0.0 || r1 - r0 <= 0.0 {
            return Err(Error::Reward { r1, r0 });
        }
        Ok(Environment {
            cost,
            r1,
            r0,
            r: r1 - r0,
            signal,
        })
    }

    pub fn cost(&self) -> &ContinuousDist {
        &self.cost
    }

    pub fn r1(&self) -> f64 {
        self.r1
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// Net reward `r1 - r0` of a positive classification.
    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn signal(&self) -> &SignalModel {
        &self.signal
    }

    /// `H(r * gap)`: the probability of compliance induced by a classifier
    /// with acceptance gap `gap`.
    pub fn prevalence(&self, gap: f64) -> f64 {
        self.cost.cdf(self.r * gap)
    }

    /// Cost law N(3/4, 1), r = 5, f_b = N(b, 1): the environment in which a
    /// negative threshold rule is the most accurate classifier.
    pub fn paper_example() -> Self {
        let signal = SignalModel::new(
            ContinuousDist::Gaussian { mu: 0.0, sigma: 1.0 },
            ContinuousDist::Gaussian { mu: 1.0, sigma: 1.0 },
        )
        .expect("unit gaussians satisfy MLRP");
        Environment::new(
            ContinuousDist::Gaussian { mu: 0.75, sigma: 1.0 },
            5.0,
            0.0,
            signal,
        )
        .expect("positive reward")
    }
}

/// Alias for [`Environment::new`].
pub fn make_environment(
    cost: ContinuousDist,
    r1: f64,
    r0: f64,
    signal: SignalModel,
) -> Result<Environment> {
    Environment::new(cost, r1, r0, signal)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSignal {
    f0: ContinuousDist,
    f1: ContinuousDist,
    // recomputed on load
    #[serde(default, rename = "tau_c")]
    _tau_c: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnvironment {
    cost: ContinuousDist,
    r1: f64,
    r0: f64,
    #[serde(default, rename = "r")]
    _r: Option<f64>,
    signal: RawSignal,
}

impl TryFrom<RawEnvironment> for Environment {
    type Error = Error;

    fn try_from(raw: RawEnvironment) -> Result<Self> {
        let signal = SignalModel::new(raw.signal.f0, raw.signal.f1)?;
        Environment::new(raw.cost, raw.r1, raw.r0, signal)
    }
}

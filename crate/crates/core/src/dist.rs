//! Scalar distributions and the numerical kernels used throughout the crate:
//! adaptive Simpson quadrature, bisection root finding, and a grid-scan plus
//! golden-section maximizer.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use libm::erfc;
use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Family of a [`ContinuousDist`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistKind {
    Gaussian,
    Logistic,
    Uniform,
}

/// A scalar continuous distribution with closed-form density, CDF and
/// quantile.
///
/// Gaussian and logistic are parameterized by location `mu` and scale
/// `sigma` (for the logistic, `sigma` is the usual scale `s`, not the
/// standard deviation). Uniform lives on `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", try_from = "RawDist")]
pub enum ContinuousDist {
    Gaussian { mu: f64, sigma: f64 },
    Logistic { mu: f64, sigma: f64 },
    Uniform { a: f64, b: f64 },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum RawDist {
    Gaussian { mu: f64, sigma: f64 },
    Logistic { mu: f64, sigma: f64 },
    Uniform { a: f64, b: f64 },
}

impl TryFrom<RawDist> for ContinuousDist {
    type Error = Error;

    fn try_from(raw: RawDist) -> Result<Self> {
        match raw {
            RawDist::Gaussian { mu, sigma } => ContinuousDist::gaussian(mu, sigma),
            RawDist::Logistic { mu, sigma } => ContinuousDist::logistic(mu, sigma),
            RawDist::Uniform { a, b } => ContinuousDist::uniform(a, b),
        }
    }
}

/// Location/scale parameters accepted by [`make_dist`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistParams {
    LocationScale { mu: f64, sigma: f64 },
    Interval { a: f64, b: f64 },
}

/// Builds a distribution of the given kind, validating its parameters.
pub fn make_dist(kind: DistKind, params: DistParams) -> Result<ContinuousDist> {
    match (kind, params) {
        (DistKind::Gaussian, DistParams::LocationScale { mu, sigma }) => {
            ContinuousDist::gaussian(mu, sigma)
        }
        (DistKind::Logistic, DistParams::LocationScale { mu, sigma }) => {
            ContinuousDist::logistic(mu, sigma)
        }
        (DistKind::Uniform, DistParams::Interval { a, b }) => ContinuousDist::uniform(a, b),
        (kind, params) => Err(Error::Parameter(format!(
            "{kind:?} distribution does not take parameters {params:?}"
        ))),
    }
}

fn check_location_scale(mu: f64, sigma: f64) -> Result<()> {
    if !mu.is_finite() {
        return Err(Error::Parameter(format!("location must be finite, got {mu}")));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Parameter(format!("scale must be positive, got {sigma}")));
    }
    Ok(())
}

impl ContinuousDist {
    pub fn gaussian(mu: f64, sigma: f64) -> Result<Self> {
        check_location_scale(mu, sigma)?;
        Ok(ContinuousDist::Gaussian { mu, sigma })
    }

    pub fn logistic(mu: f64, sigma: f64) -> Result<Self> {
        check_location_scale(mu, sigma)?;
        Ok(ContinuousDist::Logistic { mu, sigma })
    }

    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::Parameter(format!(
                "uniform endpoints must satisfy a < b, got [{a}, {b}]"
            )));
        }
        Ok(ContinuousDist::Uniform { a, b })
    }

    pub fn kind(&self) -> DistKind {
        match self {
            ContinuousDist::Gaussian { .. } => DistKind::Gaussian,
            ContinuousDist::Logistic { .. } => DistKind::Logistic,
            ContinuousDist::Uniform { .. } => DistKind::Uniform,
        }
    }

    /// Whether the density is positive on all of ℝ.
    pub fn has_full_support(&self) -> bool {
        !matches!(self, ContinuousDist::Uniform { .. })
    }

    pub fn density(&self, x: f64) -> f64 {
        match *self {
            ContinuousDist::Uniform { a, b } => {
                if (a..=b).contains(&x) {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            _ => self.ln_density(x).exp(),
        }
    }

    /// Natural log of the density; `-inf` outside the support.
    pub fn ln_density(&self, x: f64) -> f64 {
        match *self {
            ContinuousDist::Gaussian { mu, sigma } => {
                let z = (x - mu) / sigma;
                INV_SQRT_2PI.ln() - sigma.ln() - 0.5 * z * z
            }
            ContinuousDist::Logistic { mu, sigma } => {
                let z = ((x - mu) / sigma).abs();
                -z - 2.0 * (-z).exp().ln_1p() - sigma.ln()
            }
            ContinuousDist::Uniform { .. } => self.density(x).ln(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            ContinuousDist::Gaussian { mu, sigma } => 0.5 * erfc(-(x - mu) / (sigma * SQRT_2)),
            ContinuousDist::Logistic { mu, sigma } => 1.0 / (1.0 + (-(x - mu) / sigma).exp()),
            ContinuousDist::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
        }
    }

    /// Survival function `1 - cdf(x)`, computed without cancellation in the
    /// upper tail.
    pub fn sf(&self, x: f64) -> f64 {
        match *self {
            ContinuousDist::Gaussian { mu, sigma } => 0.5 * erfc((x - mu) / (sigma * SQRT_2)),
            ContinuousDist::Logistic { mu, sigma } => 1.0 / (1.0 + ((x - mu) / sigma).exp()),
            ContinuousDist::Uniform { a, b } => ((b - x) / (b - a)).clamp(0.0, 1.0),
        }
    }

    /// Probability mass on `(lo, hi]`, using whichever tail keeps the
    /// subtraction well conditioned.
    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let lower = self.cdf(hi) - self.cdf(lo);
        let upper = self.sf(lo) - self.sf(hi);
        if self.cdf(lo) < 0.5 {
            lower.max(0.0)
        } else {
            upper.max(0.0)
        }
    }

    /// Inverse CDF. `quantile(0)` and `quantile(1)` return the support
    /// endpoints (infinite for full-support kinds).
    pub fn quantile(&self, p: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&p), "probability out of range: {p}");
        match *self {
            ContinuousDist::Gaussian { mu, sigma } => {
                if p <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                if p >= 1.0 {
                    return f64::INFINITY;
                }
                let mut x = mu - sigma * SQRT_2 * erfc_inv(2.0 * p);
                // One Newton polish on the better-conditioned tail.
                let pdf = self.density(x);
                if pdf > 0.0 {
                    let step = if p < 0.5 {
                        (self.cdf(x) - p) / pdf
                    } else {
                        ((1.0 - p) - self.sf(x)) / pdf
                    };
                    if step.is_finite() {
                        x -= step;
                    }
                }
                x
            }
            ContinuousDist::Logistic { mu, sigma } => {
                if p <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                if p >= 1.0 {
                    return f64::INFINITY;
                }
                mu + sigma * (p.ln() - (-p).ln_1p())
            }
            ContinuousDist::Uniform { a, b } => a + p * (b - a),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ContinuousDist::Gaussian { mu, sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                mu + sigma * z
            }
            ContinuousDist::Logistic { mu, sigma } => {
                // open interval so the log stays finite
                let u: f64 = loop {
                    let u: f64 = rng.random();
                    if u > 0.0 {
                        break u;
                    }
                };
                mu + sigma * (u.ln() - (-u).ln_1p())
            }
            ContinuousDist::Uniform { a, b } => rng.random_range(a..b),
        }
    }
}

/// Tolerances and grid sizes shared by the numerical kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsConfig {
    /// Absolute quadrature tolerance.
    pub quad_tol: f64,
    /// Bracket width at which bisection stops.
    pub root_tol: f64,
    /// Coarse scan points for [`maximize_1d`].
    pub opt_grid_n: usize,
    /// Probability mass cut from each infinite tail before integrating.
    pub tail_mass: f64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        NumericsConfig {
            quad_tol: 1e-9,
            root_tol: 1e-10,
            opt_grid_n: 2001,
            tail_mass: 1e-10,
        }
    }
}

impl NumericsConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("quad_tol", self.quad_tol),
            ("root_tol", self.root_tol),
            ("tail_mass", self.tail_mass),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        if self.tail_mass >= 0.5 {
            return Err(Error::Parameter(format!(
                "tail_mass must be below 0.5, got {}",
                self.tail_mass
            )));
        }
        if self.opt_grid_n < 3 {
            return Err(Error::Parameter(format!(
                "opt_grid_n must be at least 3, got {}",
                self.opt_grid_n
            )));
        }
        Ok(())
    }
}

const MAX_QUAD_DEPTH: usize = 50;
const MIN_QUAD_DEPTH: usize = 4;
/// Subdivision budget shared by the whole recursion.
const MAX_QUAD_INTERVALS: usize = 1 << 20;

/// Integrates `f` over `[a, b]` by adaptive Simpson bisection.
///
/// Infinite endpoints are replaced by the `tail_mass` and `1 - tail_mass`
/// quantiles of the distributions in `tails` (the outermost one wins), so at
/// least one distribution is required when either limit is infinite.
pub fn integrate<F>(
    f: F,
    a: f64,
    b: f64,
    tails: &[&ContinuousDist],
    cfg: &NumericsConfig,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if a.is_nan() || b.is_nan() || a > b {
        return Err(Error::Parameter(format!("invalid interval [{a}, {b}]")));
    }
    let lo = if a == f64::NEG_INFINITY {
        tails
            .iter()
            .map(|d| d.quantile(cfg.tail_mass))
            .reduce(f64::min)
            .ok_or_else(|| Error::Parameter("infinite lower limit needs a tail distribution".into()))?
    } else {
        a
    };
    let hi = if b == f64::INFINITY {
        tails
            .iter()
            .map(|d| d.quantile(1.0 - cfg.tail_mass))
            .reduce(f64::max)
            .ok_or_else(|| Error::Parameter("infinite upper limit needs a tail distribution".into()))?
    } else {
        b
    };
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::Parameter(format!("cannot truncate [{a}, {b}]")));
    }
    if lo >= hi {
        return Ok(0.0);
    }

    let mid = 0.5 * (lo + hi);
    let (flo, fmid, fhi) = (f(lo), f(mid), f(hi));
    let whole = simpson(lo, hi, flo, fmid, fhi);
    let mut budget = Budget {
        remaining: MAX_QUAD_INTERVALS,
        converged: true,
    };
    let value = simpson_step(&f, lo, hi, flo, fmid, fhi, whole, cfg.quad_tol, 0, &mut budget);
    if budget.converged {
        Ok(value)
    } else {
        Err(Error::NonConvergence {
            estimate: value,
            depth: MAX_QUAD_DEPTH,
        })
    }
}

struct Budget {
    remaining: usize,
    converged: bool,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
    budget: &mut Budget,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth >= MIN_QUAD_DEPTH && delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    if depth >= MAX_QUAD_DEPTH || budget.remaining == 0 {
        budget.converged = false;
        return left + right + delta / 15.0;
    }
    budget.remaining -= 1;
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, budget)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, budget)
}

/// Bisection on a sign-changing bracket.
///
/// Stops once the bracket is narrower than `root_tol` (or an exact zero is
/// hit) and returns whichever of the midpoint and endpoints has the smallest
/// residual.
pub fn find_root<F>(f: F, lo: f64, hi: f64, cfg: &NumericsConfig) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    bisect(f, lo, hi, cfg.root_tol)
}

/// Bisection that runs until the bracket collapses to adjacent floats.
pub(crate) fn bisect_to_convergence<F>(f: F, lo: f64, hi: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    bisect(f, lo, hi, 0.0)
}

fn bisect<F>(f: F, lo: f64, hi: f64, width_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(Error::Parameter(format!("invalid bracket [{lo}, {hi}]")));
    }
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::NoBracket {
            lo,
            hi,
            f_lo: fa,
            f_hi: fb,
        });
    }
    let mut best = if fa.abs() <= fb.abs() { (a, fa) } else { (b, fb) };
    for _ in 0..2200 {
        if b - a <= width_tol {
            break;
        }
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm.abs() < best.1.abs() {
            best = (m, fm);
        }
        if fm == 0.0 {
            break;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(best.0)
}

/// Result of [`maximize_1d`].
#[derive(Debug, Clone, PartialEq)]
pub struct Maximum {
    pub x: f64,
    pub value: f64,
    /// The coarse scan, ascending in `x`.
    pub grid: Vec<(f64, f64)>,
    /// Grid points whose value is within `1e-12` of the maximum.
    pub tied_points: usize,
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Global maximization on `[lo, hi]`: a uniform scan of `opt_grid_n` points,
/// then golden-section refinement around every grid-local maximum.
///
/// Exact ties resolve to the smallest `x`.
pub fn maximize_1d<F>(f: F, lo: f64, hi: f64, cfg: &NumericsConfig) -> Result<Maximum>
where
    F: Fn(f64) -> f64,
{
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Parameter(format!("invalid search interval [{lo}, {hi}]")));
    }
    if cfg.opt_grid_n < 3 {
        return Err(Error::Parameter("opt_grid_n must be at least 3".into()));
    }
    let n = cfg.opt_grid_n;
    let step = (hi - lo) / (n - 1) as f64;
    let grid: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let x = if i == n - 1 { hi } else { lo + step * i as f64 };
            (x, f(x))
        })
        .collect();

    let mut candidates: Vec<(f64, f64)> = grid.clone();
    for i in 0..n {
        let v = grid[i].1;
        let rises = i == 0 || v > grid[i - 1].1;
        let holds = i == n - 1 || v >= grid[i + 1].1;
        if !(rises && holds) {
            continue;
        }
        let a = grid[i.saturating_sub(1)].0;
        let b = grid[(i + 1).min(n - 1)].0;
        candidates.push(golden_section(&f, a, b));
    }
    candidates.sort_by(|p, q| p.0.total_cmp(&q.0));

    let mut best = candidates[0];
    for &c in &candidates[1..] {
        if c.1 > best.1 {
            best = c;
        }
    }
    let tied_points = grid.iter().filter(|p| (best.1 - p.1).abs() <= 1e-12).count();
    Ok(Maximum {
        x: best.0,
        value: best.1,
        grid,
        tied_points,
    })
}

fn golden_section<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> (f64, f64) {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 4.0 * f64::EPSILON * (1.0 + c.abs()) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn std_normal() -> ContinuousDist {
        ContinuousDist::gaussian(0.0, 1.0).unwrap()
    }

    fn all_dists() -> Vec<ContinuousDist> {
        vec![
            std_normal(),
            ContinuousDist::gaussian(0.75, 1.0).unwrap(),
            ContinuousDist::gaussian(-3.0, 0.4).unwrap(),
            ContinuousDist::logistic(0.0, 1.0).unwrap(),
            ContinuousDist::logistic(2.0, 0.5).unwrap(),
            ContinuousDist::uniform(-1.0, 1.0).unwrap(),
        ]
    }

    #[test]
    fn make_dist_rejects_bad_parameters() {
        let bad = [
            make_dist(DistKind::Gaussian, DistParams::LocationScale { mu: 0.0, sigma: 0.0 }),
            make_dist(DistKind::Logistic, DistParams::LocationScale { mu: 0.0, sigma: -1.0 }),
            make_dist(DistKind::Uniform, DistParams::Interval { a: 1.0, b: 1.0 }),
            make_dist(DistKind::Uniform, DistParams::LocationScale { mu: 0.0, sigma: 1.0 }),
        ];
        for r in bad {
            assert!(matches!(r, Err(Error::Parameter(_))), "{r:?}");
        }
    }

    #[test]
    fn gaussian_cdf_values() {
        assert_eq!(std_normal().cdf(0.0), 0.5);
        let cost = ContinuousDist::gaussian(0.75, 1.0).unwrap();
        assert!((cost.cdf(1.625) - 0.81).abs() < 0.005);
        assert!((cost.cdf(-0.36) - 0.13).abs() < 0.005);
    }

    #[test]
    fn densities_integrate_to_one() {
        let cfg = NumericsConfig::default();
        for d in all_dists() {
            let (a, b) = match d {
                ContinuousDist::Uniform { a, b } => (a, b),
                _ => (f64::NEG_INFINITY, f64::INFINITY),
            };
            let total = integrate(|x| d.density(x), a, b, &[&d], &cfg).unwrap();
            assert!((total - 1.0).abs() <= 1e-9, "{d:?}: {total}");
        }
    }

    #[test]
    fn cdf_is_monotone_with_correct_limits() {
        for d in all_dists() {
            let lo = d.quantile(1e-9).max(-50.0) - 5.0;
            let hi = d.quantile(1.0 - 1e-9).min(50.0) + 5.0;
            let mut prev = -1.0;
            for i in 0..1000 {
                let x = lo + (hi - lo) * i as f64 / 999.0;
                let c = d.cdf(x);
                assert!(c >= prev, "{d:?} at {x}");
                assert!((c + d.sf(x) - 1.0).abs() < 1e-15);
                prev = c;
            }
            assert!(d.cdf(-1e6) < 1e-12);
            assert!(d.cdf(1e6) > 1.0 - 1e-12);
        }
    }

    #[test]
    fn quantile_inverts_cdf_over_central_mass() {
        for d in all_dists() {
            let lo = d.quantile(0.5e-8);
            let hi = d.quantile(1.0 - 0.5e-8);
            for i in 0..=500 {
                let x = lo + (hi - lo) * i as f64 / 500.0;
                let back = d.quantile(d.cdf(x));
                assert!((back - x).abs() <= 1e-7, "{d:?}: {x} -> {back}");
            }
        }
    }

    #[test]
    fn integrate_signal_gap_tails() {
        let cfg = NumericsConfig::default();
        let f0 = std_normal();
        let f1 = ContinuousDist::gaussian(1.0, 1.0).unwrap();
        let h = |x: f64| f1.density(x) - f0.density(x);
        let upper = integrate(h, -0.1, f64::INFINITY, &[&f0, &f1], &cfg).unwrap();
        assert!((upper - 0.325).abs() < 1e-3, "{upper}");
        let lower = integrate(h, f64::NEG_INFINITY, -1.4, &[&f0, &f1], &cfg).unwrap();
        // Phi(-2.4) - Phi(-1.4)
        assert!((lower - (-0.072_559_123_309_174_94)).abs() < 1e-9, "{lower}");
    }

    #[test]
    fn integrate_needs_a_tail_for_infinite_limits() {
        let cfg = NumericsConfig::default();
        assert!(integrate(|x| x, 0.0, f64::INFINITY, &[], &cfg).is_err());
        assert!(integrate(|x| x, 1.0, 0.0, &[], &cfg).is_err());
    }

    #[test]
    fn integrate_reports_non_convergence() {
        let cfg = NumericsConfig {
            quad_tol: 1e-300,
            ..NumericsConfig::default()
        };
        let err = integrate(|x| (1.0 / (x + 1e-3)).sin(), 0.0, 1.0, &[], &cfg).unwrap_err();
        match err {
            Error::NonConvergence { estimate, .. } => assert!(estimate.is_finite()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn root_of_linear_and_cdf_gaps() {
        let cfg = NumericsConfig::default();
        let r = find_root(|x| x - 2.0, 0.0, 5.0, &cfg).unwrap();
        assert!((r - 2.0).abs() <= 1e-10);

        let n = std_normal();
        let gap = |t: f64| n.cdf(t) - n.cdf(t - 1.0);
        let pos = find_root(|t| gap(t) - 0.3245, -6.0, 0.5, &cfg).unwrap();
        assert!((pos - (-0.1)).abs() < 0.01, "{pos}");
        assert!((pos - (-0.100_034_068_386_035)).abs() < 1e-9);
        let neg = find_root(|t| -gap(t) + 0.0726, -6.0, 0.5, &cfg).unwrap();
        assert!((neg - (-1.4)).abs() < 0.01, "{neg}");
    }

    #[test]
    fn root_requires_sign_change() {
        let cfg = NumericsConfig::default();
        let err = find_root(|x| x * x + 1.0, -1.0, 1.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::NoBracket { .. }));
    }

    #[test]
    fn maximize_quadratic() {
        let cfg = NumericsConfig::default();
        let m = maximize_1d(|x| -(x - 1.0) * (x - 1.0), -5.0, 5.0, &cfg).unwrap();
        assert!((m.x - 1.0).abs() <= 1e-6);
        assert!(m.value.abs() <= 1e-6);
        assert_eq!(m.grid.len(), cfg.opt_grid_n);
    }

    #[test]
    fn maximize_finds_global_of_bimodal() {
        let cfg = NumericsConfig {
            opt_grid_n: 101,
            ..NumericsConfig::default()
        };
        let f = |x: f64| (-(x + 2.0) * (x + 2.0)).exp() + 1.2 * (-(x - 2.3) * (x - 2.3)).exp();
        let m = maximize_1d(f, -6.0, 6.0, &cfg).unwrap();
        assert!((m.x - 2.3).abs() < 1e-3, "{}", m.x);
        assert!(m.grid.iter().all(|p| p.1 <= m.value));
    }

    #[test]
    fn maximize_plateau_reports_smallest_x() {
        let cfg = NumericsConfig {
            opt_grid_n: 11,
            ..NumericsConfig::default()
        };
        let m = maximize_1d(|x| if x > 0.0 { 1.0 } else { 0.0 }, -1.0, 1.0, &cfg).unwrap();
        assert_eq!(m.value, 1.0);
        assert!(m.x > 0.0 && m.x <= 0.2);
        assert!(m.tied_points >= 5);
    }

    #[test]
    fn sampling_is_seeded() {
        use rand::SeedableRng;
        use rand_chacha::ChaCha8Rng;
        for d in all_dists() {
            let mut a = ChaCha8Rng::seed_from_u64(3);
            let mut b = ChaCha8Rng::seed_from_u64(3);
            let xs: Vec<f64> = (0..20).map(|_| d.sample(&mut a)).collect();
            let ys: Vec<f64> = (0..20).map(|_| d.sample(&mut b)).collect();
            assert_eq!(xs, ys);
        }
    }

    #[test]
    fn numerics_config_validation() {
        assert!(NumericsConfig::default().validate().is_ok());
        let bad = NumericsConfig {
            opt_grid_n: 2,
            ..NumericsConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = NumericsConfig {
            quad_tol: -1.0,
            ..NumericsConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn deserialization_validates() {
        let ok: ContinuousDist =
            serde_json::from_str(r#"{"kind":"gaussian","mu":0.75,"sigma":1.0}"#).unwrap();
        assert_eq!(ok, ContinuousDist::gaussian(0.75, 1.0).unwrap());
        let bad = serde_json::from_str::<ContinuousDist>(r#"{"kind":"logistic","mu":0,"sigma":0}"#);
        assert!(bad.is_err());
    }
}

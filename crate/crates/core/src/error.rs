use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("quadrature did not converge within depth {depth} (last estimate {estimate})")]
    NonConvergence { estimate: f64, depth: usize },

    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    NoBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("likelihood ratio f1/f0 is not strictly increasing on [{lo}, {hi}]")]
    MlrpViolation { lo: f64, hi: f64 },

    #[error("densities f0 and f1 do not cross on the validation grid")]
    CrossingNotFound,

    #[error("net reward r = r1 - r0 must be positive (r1 = {r1}, r0 = {r0})")]
    Reward { r1: f64, r0: f64 },

    #[error("target gap {target} exceeds the extremal gap {max}")]
    InfeasibleGap { target: f64, max: f64 },

    #[error("classifier gap is zero; no matched threshold exists")]
    ZeroGap,
}

impl Error {
    /// True for errors caused by an invalid model (as opposed to bad numerics
    /// or bad parameters).
    pub fn is_model_error(&self) -> bool {
        matches!(
            self,
            Error::MlrpViolation { .. } | Error::CrossingNotFound | Error::Reward { .. }
        )
    }
}

use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("alphabet `{what}` is empty")]
    EmptyAlphabet { what: &'static str },
    #[error("duplicate label `{label}` in {what}")]
    DuplicateLabel { what: &'static str, label: String },
    #[error("unknown {what} label `{label}`")]
    UnknownLabel { what: &'static str, label: String },
    #[error("transition ({state}, {stimulus}, {action}) listed more than once")]
    DuplicateTransition { state: String, stimulus: String, action: String },
    #[error("invalid probability {prob} on ({state}, {stimulus}, {action})")]
    InvalidProbability { state: String, stimulus: String, action: String, prob: f64 },
    #[error("row ({state}, {stimulus}) sums to {sum}, not 1")]
    NonStochasticRow { state: String, stimulus: String, sum: f64 },
    #[error("transition ({state}, {stimulus}, {action}) points at unknown state `{next}`")]
    DanglingTransition { state: String, stimulus: String, action: String, next: String },
    #[error("transition ({state}, {stimulus}, {action}) has positive probability but no next state")]
    MissingUpdate { state: String, stimulus: String, action: String },
    #[error("input row ({state}, {stimulus}) lists inconsistent stimulus probabilities")]
    InconsistentInputRow { state: String, stimulus: String },
    #[error("alphabets of agent and input strategy differ ({what})")]
    AlphabetMismatch { what: &'static str },
    #[error("joint chain has {classes} closed communicating classes")]
    ReducibleChain { classes: usize },
    #[error("stationary solve left residual {residual:e}")]
    StationaryResidual { residual: f64 },
    #[error("overlap iteration did not converge after {iterations} iterations (last update {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:e})")]
    NotPsd { eigenvalue: f64 },
    #[error("density has eigenvalue {eigenvalue:e} below the clipping threshold")]
    NegativeEigenvalue { eigenvalue: f64 },
    #[error("weighted Gram matrix has trace {trace}, expected 1")]
    TraceMismatch { trace: f64 },
    #[error("domain and image Gram matrices differ by {deviation:e}")]
    GramMismatch { deviation: f64 },
    #[error("enumeration of {count} stimulus assignments exceeds the cap of {cap}")]
    TooLarge { count: u128, cap: u128 },
    #[error("every postulated stimulus assignment gave a singular system")]
    SingularSystem,
    #[error("post-measurement norm {norm:e} is below tolerance")]
    NormLoss { norm: f64 },
    #[error("survival probability vanishes at index {index} before truncation")]
    DegenerateSurvival { index: usize },
    #[error("renewal specification is invalid: {reason}")]
    InvalidRenewal { reason: String },
    #[error("at least {needed} sweep rows are required, got {got}")]
    InsufficientRows { needed: usize, got: usize },
    #[error("eigenvalue iteration failed to converge")]
    EigenFailure,
    #[error("invalid argument: {reason}")]
    InvalidArgument { reason: String },
}

impl Error {
    /// True for failures of the numerical pipeline (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NoConvergence { .. }
                | Error::NotPsd { .. }
                | Error::NegativeEigenvalue { .. }
                | Error::TraceMismatch { .. }
                | Error::GramMismatch { .. }
                | Error::SingularSystem
                | Error::NormLoss { .. }
                | Error::StationaryResidual { .. }
                | Error::EigenFailure
                | Error::ReducibleChain { .. }
                | Error::TooLarge { .. }
        )
    }
}

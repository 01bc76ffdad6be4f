use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error(
        "charge-basis truncation did not converge up to |n| <= {cutoff}: \
         previous {previous:?}, last {last:?}"
    )]
    TruncationNotConverged {
        cutoff: usize,
        previous: Vec<f64>,
        last: Vec<f64>,
    },

    #[error(
        "dispersive approximation invalid: |fr - fq| = {detuning_mhz:.3} MHz \
         is not larger than {ratio} * g = {limit_mhz:.3} MHz"
    )]
    DispersiveGuard {
        detuning_mhz: f64,
        limit_mhz: f64,
        ratio: f64,
    },

    #[error("dispersive guard violated at V_G = {vg} V")]
    GuardAtGate {
        vg: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("dispersive shift {chi_mhz} MHz and detuning {detuning_ghz} GHz have opposite signs")]
    SignMismatch { chi_mhz: f64, detuning_ghz: f64 },

    #[error("grid `{name}` is not strictly increasing at index {index}")]
    GridNotIncreasing { name: &'static str, index: usize },

    #[error("unphysical solution: {0}")]
    Unphysical(String),

    #[error("fit did not converge: {0}")]
    NotConverged(String),

    #[error("trace has {count} resolvable peaks; lower the drive power until a single peak remains")]
    MultiPeak { count: usize },

    #[error("no peak found: {0}")]
    NoPeak(String),

    #[error("no untuned gate region found; supply the bare resonator frequency f0 explicitly")]
    NoUntunedRegion,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("unknown fit model `{0}`; valid models: lorentzian, exp_decay, decaying_sine, t1_chop_transmission, t1_chop_reflection, linear")]
    UnknownModel(String),

    #[error("{path}: parse error at byte offset {offset}: {reason}")]
    Parse {
        path: PathBuf,
        offset: usize,
        reason: String,
    },

    #[error("inputs carry different config hashes ({0}); pass --force-mixed-hash to override")]
    MixedHash(String),

    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line front end.
    ///
    /// 2 config error, 3 I/O error, 4 physics-guard violation, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::UnknownModel(_) | Error::InvalidParameter { .. } => 2,
            Error::Io { .. } | Error::Parse { .. } | Error::Json(_) | Error::MixedHash(_) => 3,
            Error::DispersiveGuard { .. } | Error::GuardAtGate { .. } => 4,
            _ => 1,
        }
    }
}

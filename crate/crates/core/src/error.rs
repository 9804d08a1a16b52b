use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("kinetics unstable without diffusion (Tr(A) = {trace}, det(A) = {det})")]
    KineticsUnstable { trace: f64, det: f64 },

    #[error("no critical value: {0}")]
    NoCriticalValue(String),

    #[error("kc0 = {kc0} is not bracketed by the spectrum; nearest eigenvalue is {nearest}")]
    BracketFailure { kc0: f64, nearest: f64 },

    #[error("principle of exchange of stability violated by mode {mode}: {detail}")]
    PesViolation { mode: String, detail: String },

    #[error("critical value {dv_star} lies outside the scanned grid [{min}, {max}]")]
    CrossingNotBracketed { dv_star: f64, min: f64, max: f64 },

    #[error("degenerate pairing <xi, xi*> * int e^2 = {0}")]
    DegeneratePairing(f64),

    #[error("mode matrix singular at non-critical mode {mode}")]
    SingularModeMatrix { mode: String },

    #[error("cubic coefficient not converged: Q(n) = {coarse}, Q(2n) = {fine}")]
    NotConverged { coarse: f64, fine: f64 },

    #[error("planar fixed-point search found no root (best residual {residual})")]
    NoFixedPointFound { residual: f64 },

    #[error("simulation blew up at t = {t}")]
    BlowUp { t: f64 },

    #[error("simulation not saturated (relative change {rel_change} over trailing window)")]
    NotSaturated { rel_change: f64 },

    #[error("growth-rate fit contaminated by nonlinearity (residual {residual}, range {range})")]
    NonlinearContamination { residual: f64, range: f64 },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Numerical failures as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularModeMatrix { .. }
                | Error::NotConverged { .. }
                | Error::NoFixedPointFound { .. }
                | Error::BlowUp { .. }
                | Error::NotSaturated { .. }
                | Error::NonlinearContamination { .. }
                | Error::DegeneratePairing(_)
                | Error::PesViolation { .. }
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, RuinError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RuinError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("moment order {0} is not supported (expected 1..=5)")]
    UnsupportedOrder(usize),

    #[error("mgf evaluated at r = {r} outside its domain r < {sup}")]
    MgfDomain { r: f64, sup: f64 },

    #[error("net profit condition violated: premium rate {premium} <= expected claims {expected}")]
    NetProfit { premium: f64, expected: f64 },

    #[error("{0} requires a diffusion coefficient sigma > 0")]
    NoDiffusion(&'static str),

    #[error("no sign change of the adjustment equation: g({lo}) = {g_lo}, g({hi}) = {g_hi}")]
    NoRoot { lo: f64, hi: f64, g_lo: f64, g_hi: f64 },

    #[error("mgf of the maximal aggregate loss diverges at r = {r} (radius {radius})")]
    Divergent { r: f64, radius: f64 },

    #[error("Laplace inversion did not converge at u = {u}: estimates {first} vs {second}")]
    InversionFailed { u: f64, first: f64, second: f64 },

    #[error("De Vylder fit infeasible: sigma*^2 = {sigma_star_sq} <= 0")]
    FitInfeasible { sigma_star_sq: f64 },

    #[error("characteristic roots are not simple and real: {0}")]
    DegenerateRoots(String),

    #[error("two-point Padé denominator has complex roots (discriminant {discriminant})")]
    ComplexBranch { discriminant: f64 },

    #[error("lattice truncated at n = {available} but u requires n = {needed}")]
    Truncation { needed: usize, available: usize },

    #[error("relative error undefined for exact value {0}")]
    UndefinedRelativeError(f64),

    #[error("unknown method `{0}`")]
    UnknownMethod(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl RuinError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        RuinError::InvalidParameter(msg.into())
    }
}

use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
#[non_exhaustive]
pub enum Error {
    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    InvalidBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("no convergence after {iterations} iterations, best estimate {best}")]
    NoConvergence { best: f64, iterations: usize },

    #[error("function is not finite at x = {x}")]
    NonFinite { x: f64 },

    #[error("integrand is not finite at node {index} (theta = {theta}, phi = {phi})")]
    NonFiniteNode { index: usize, theta: f64, phi: f64 },

    #[error("arctanh is singular at {re} + {im}i")]
    ArctanhSingularity { re: f64, im: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{what} is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { what: &'static str, deviation: f64 },

    #[error("invalid density matrix: {reason} ({value:e})")]
    InvalidDensity { reason: &'static str, value: f64 },

    #[error("state is not normalized (squared norm {norm_sqr})")]
    NotNormalized { norm_sqr: f64 },

    #[error("basis is not unitary (max deviation {deviation:e})")]
    NotUnitary { deviation: f64 },

    #[error("{what}: got {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("operation requires a qubit, got dimension {dim}")]
    RequiresQubit { dim: usize },

    #[error("post-selection probability {probability:e} is too small")]
    DegeneratePostSelection { probability: f64 },

    #[error("configuration is uninformative: {what} vanishes ({value:e})")]
    Uninformative { what: &'static str, value: f64 },

    #[error("anomalous weak value {anomalous:e} is too small for the temperature bound")]
    BoundUndefined { anomalous: f64 },

    #[error("qubit identity inapplicable: Cov(A, H) = {magnitude:e}")]
    IdentityInapplicable { magnitude: f64 },

    #[error("infinite-temperature limit: arctanh argument at {re} + {im}i")]
    InfiniteTemperatureLimit { re: f64, im: f64 },

    #[error("apparent temperature diverges: arctanh argument at {re} + {im}i")]
    DivergentApparentTemperature { re: f64, im: f64 },

    #[error("invalid pointer grid: {reason}")]
    InvalidGrid { reason: &'static str },

    #[error("pointer width {sigma} not resolvable on grid (dx = {dx}, half width = {half_width})")]
    GridMismatch { sigma: f64, dx: f64, half_width: f64 },

    #[error("pointer norm collapsed to {norm_sqr:e}")]
    UnphysicalAmplification { norm_sqr: f64 },

    #[error("coupling g*tau = {strength} is outside the weak regime")]
    WeakRegime { strength: f64 },

    #[error("readout requires a Gaussian input pointer (excess kurtosis {excess_kurtosis})")]
    UnsupportedReadout { excess_kurtosis: f64 },

    #[error("pointer moment {value} outside [0, 1]")]
    MomentConvention { value: f64 },

    #[error("Fisher information {fisher} is not positive; variance is unbounded")]
    UnboundedVariance { fisher: f64 },

    #[error("optimal-temperature equation has no root in [{lo}, {hi}]")]
    SearchWindow { lo: f64, hi: f64 },

    #[error("temperature grid is empty or not strictly increasing and positive")]
    InvalidTemperatureGrid,
}

pub type Result<T> = core::result::Result<T, Error>;

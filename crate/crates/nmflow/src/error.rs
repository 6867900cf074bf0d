use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (max defect {0:.3e})")]
    NonHermitian(f64),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("not a valid density state: {0}")]
    NotAState(String),
    #[error("axis pair ({0}, {1}) is not a pair of distinct axes")]
    BadAxis(usize, usize),
    #[error("interval requires t <= s, got t = {t}, s = {s}")]
    BadInterval { t: f64, s: f64 },
    #[error("unphysical dynamics: {0}")]
    Unphysical(String),
    #[error("map is singular at t = {0}")]
    SingularMap(f64),
    #[error("states do not commute (max commutator {0:.3e})")]
    NonCommuting(f64),
    #[error("state is not classical-quantum (off-block weight {0:.3e})")]
    NotClassicalQuantum(f64),
    #[error("logarithm undefined: p_{index} = {value:.3e} with nonzero derivative")]
    DegenerateLog { index: usize, value: f64 },
    #[error("probe weight p = {p} must stay below e^(-alpha tau) = {bound}")]
    UnphysicalProbe { p: f64, bound: f64 },
    #[error("tau = {tau} must exceed t0 = {t0}")]
    NotYetNonMarkovian { tau: f64, t0: f64 },
    #[error("channel never becomes entanglement breaking before t = {0}")]
    NeverBreaking(f64),
    #[error("eigenvalue gap {0:.3e} too close to a crossing")]
    CrossingTooClose(f64),
    #[error("stationary state with |a12| = {0} lies on the boundary")]
    BoundaryState(f64),
    #[error("zero Bloch vector")]
    ZeroVector,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

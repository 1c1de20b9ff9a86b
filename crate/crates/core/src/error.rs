use thiserror::Error;

/// Errors raised across the analysis pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("complex spectrum: tr^2 - 4 det = {discriminant} < 0")]
    ComplexSpectrum { discriminant: f64 },
    #[error("singular matrix (det = 0)")]
    SingularMatrix,
    #[error("zero eigenvalue; invariant-line intercepts are undefined")]
    ZeroEigenvalue,
    #[error("no sign change of the crossing function on [{t_lo}, {t_hi}]")]
    NoSignChange { t_lo: f64, t_hi: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("point y = {y} on the switching line is not sliding or escaping")]
    NotSlidingPoint { y: f64 },
    #[error("fold and equilibrium collide on the switching line (second Lie derivative {value} below tolerance)")]
    BoundaryEquilibriumCollision { value: f64 },
    #[error("a12^L * a12^R = {product} <= 0; canonical reduction undefined")]
    TangencyDegenerate { product: f64 },
    #[error("alpha (1 - beta) = 0; canonical form degenerate")]
    DegenerateAlpha,
    #[error("smoothing parameter a = {a} must be positive")]
    NonpositiveSmoothing { a: f64 },
    #[error("operation requires a virtual node on the {side} side (a = {a})")]
    WrongRegime { side: &'static str, a: f64 },
    #[error("beta = 1: repeated eigenvalues, half maps undefined")]
    DegenerateBeta,
    #[error("y0 = {y0} outside the map domain ({lo}, {hi})")]
    OutOfDomain { y0: f64, lo: f64, hi: f64 },
    #[error("y0 = {y0} within 1e-13 of the asymptote {asymptote}")]
    AsymptoteReached { y0: f64, asymptote: f64 },
    #[error(
        "displacement function does not change sign on ({lo}, {hi}); inconsistent with regime gate"
    )]
    BracketFailure { lo: f64, hi: f64 },
    #[error("full-map Taylor data requires epsilon = 0 (got epsilon = {epsilon})")]
    NonzeroOffset { epsilon: f64 },
    #[error(
        "initial condition lies on an escaping segment at y = {y}; forward solution not unique"
    )]
    EscapingStart { y: f64 },
    #[error("internal defect: {0}")]
    InternalDefect(String),
}

pub type Result<T> = std::result::Result<T, Error>;

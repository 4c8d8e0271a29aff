use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("map is parabolic or elliptic (|multiplier| = 1 within tolerance)")]
    ParabolicOrEllipticMap,
    #[error("matrix is numerically singular")]
    SingularMatrix,
    #[error("generator index {index} out of range for rank {rank}")]
    IndexOutOfRange { index: i32, rank: usize },
    #[error("word is not reduced at position {0}")]
    WordNotReduced(usize),
    #[error("coincident fixed points")]
    CoincidentFixedPoints,
    #[error("generator {index} is not loxodromic (|beta| = {modulus})")]
    NotLoxodromic { index: usize, modulus: f64 },
    #[error("isometric circles overlap (min gap {min_gap})")]
    CirclesOverlap { min_gap: f64 },
    #[error("invalid scale: generated points collide")]
    InvalidScale,
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("evaluation point within {dist} of a pole")]
    PoleProximity { dist: f64 },
    #[error("group series not converged at word length {max_len} (tail {tail})")]
    TruncationNotConverged { max_len: usize, tail: f64 },
    #[error("pole on integration contour")]
    PoleOnContour,
    #[error("no admissible integration path found")]
    PathBlocked,
    #[error("Fourier coefficient extraction not converged (defect {defect})")]
    FourierNotConverged { defect: f64 },
    #[error("degenerate cross-ratio")]
    DegenerateCrossRatio,
    #[error("Riemann relation violated: Im Z not positive definite (min eigenvalue {min_eig})")]
    RiemannRelationViolated { min_eig: f64 },
    #[error("theta lattice sum not converged at radius {radius}")]
    LatticeNotConverged { radius: i64 },
    #[error("tau ratio has a pole on the sampling circle")]
    RatioPoleOnCircle,
    #[error("theta function vanishes at the requested argument")]
    ThetaZero,
    #[error("tau function vanishes on the evaluation grid")]
    TauZeroOnGrid,
    #[error("characteristic is half-integer; use the half-integer branch")]
    HalfIntegerCharacteristic,
    #[error("characteristic is generic; use the generic branch")]
    GenericCharacteristic,
    #[error("symbol truncation too shallow at depth {depth}")]
    TruncationTooShallow { depth: usize },
    #[error("marked point at infinity is not supported")]
    UnsupportedInfinity,
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

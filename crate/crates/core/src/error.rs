use thiserror::Error;

/// Errors raised by geometry, complex construction and the checks built on them.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("curvature mismatch: {a} vs {b}")]
    CurvatureMismatch { a: f64, b: f64 },

    #[error("point violates the model constraint for curvature {kappa}: residual {residual:e}")]
    OffModel { kappa: f64, residual: f64 },

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("antipodal points have no unique geodesic (distance {distance}, diameter {diameter})")]
    Antipodal { distance: f64, diameter: f64 },

    #[error("triangle inequality violated: side {side} = {length} exceeds the sum of the others by {excess:e}")]
    TriangleInequality { side: char, length: f64, excess: f64 },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("empty complex")]
    EmptyComplex,

    #[error("duplicate simplex id {0}")]
    DuplicateId(u32),

    #[error("unknown simplex id {0}")]
    UnknownSimplex(u32),

    #[error("simplex {id}: vertices are not in general position")]
    NotGeneralPosition { id: u32 },

    #[error("simplex {id}: vertex distance {distance} is not below the diameter bound {bound}")]
    SimplexTooLarge { id: u32, distance: f64, bound: f64 },

    #[error("invalid gluing #{index}: {reason}")]
    InvalidGluing { index: usize, reason: String },

    #[error("non-isometric gluing #{index}: worst distance mismatch {mismatch}")]
    NonIsometricGluing { index: usize, mismatch: f64 },

    #[error("self-identification within simplex {id}: slots {slot_a} and {slot_b} are glued together")]
    SelfIdentification { id: u32, slot_a: usize, slot_b: usize },

    #[error("complex is disconnected: simplex {id} is not reachable from simplex {root}")]
    Disconnected { root: u32, id: u32 },

    #[error("invalid point: {0}")]
    InvalidPoint(String),

    #[error("points share no simplex")]
    NoSharedSimplex,

    #[error("unreachable point in the distance graph")]
    Unreachable,

    #[error("point is not a vertex of the complex")]
    NotAVertex,

    #[error("epsilon {epsilon} exceeds the verified star radius {radius}")]
    EpsilonTooLarge { epsilon: f64, radius: f64 },

    #[error("loop is not injective: {0}")]
    NotInjective(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("base point excluded: {0}")]
    BasePoint(String),

    #[error("bounded complex has no ideal point")]
    NoIdealPoint,

    #[error("{0}")]
    Parse(String),

    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

use thiserror::Error;

/// Everything that can go wrong in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("distance matrix is not square: row {row} has {len} entries, expected {n}")]
    NotSquare { row: usize, len: usize, n: usize },

    #[error("distance matrix is empty")]
    EmptySpace,

    #[error("distance matrix is asymmetric at ({i}, {j}): {dij} vs {dji}")]
    AsymmetricMatrix {
        i: usize,
        j: usize,
        dij: f64,
        dji: f64,
    },

    #[error("negative or non-finite distance {value} at ({i}, {j})")]
    NegativeDistance { i: usize, j: usize, value: f64 },

    #[error("nonzero diagonal entry {value} at point {i}")]
    NonzeroDiagonal { i: usize, value: f64 },

    #[error("triangle inequality violated: d({i},{k}) = {dik} > d({i},{j}) + d({j},{k}) = {via}")]
    TriangleViolation {
        i: usize,
        j: usize,
        k: usize,
        dik: f64,
        via: f64,
    },

    #[error("bad weights: {0}")]
    BadWeights(String),

    #[error("empty point set (or set of zero mass)")]
    EmptySet,

    #[error("point index {index} out of range for a space of {n} points")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("labels have length {got}, space has {n} points")]
    ShapeMismatch { got: usize, n: usize },

    #[error("invalid clustering: {0}")]
    InvalidClustering(String),

    #[error("clustering has exceptional (-1) points; use is_eps_clustering")]
    HasExceptionalPoints,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("sample partition has an empty part")]
    EmptyPart,

    #[error("too many sample partitions: {count} exceeds budget {budget}")]
    TooManyPartitions { count: f64, budget: u64 },

    #[error("gamma must exceed 3 for ball enumeration, got {0}")]
    GammaTooSmall(f64),

    #[error("clusters {a} and {b} cross (neither disjoint nor nested)")]
    LaminarityViolation { a: usize, b: usize },

    #[error("graph is disconnected")]
    DisconnectedGraph,

    #[error("exhaustive search budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("invalid 3DM instance: {0}")]
    InvalidInstance(String),

    #[error("planted instance failed verification: {0}")]
    PlantingFailed(String),

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable snake_case name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotSquare { .. } => "not_square",
            Error::EmptySpace => "empty_space",
            Error::AsymmetricMatrix { .. } => "asymmetric_matrix",
            Error::NegativeDistance { .. } => "negative_distance",
            Error::NonzeroDiagonal { .. } => "nonzero_diagonal",
            Error::TriangleViolation { .. } => "triangle_violation",
            Error::BadWeights(_) => "bad_weights",
            Error::EmptySet => "empty_set",
            Error::IndexOutOfRange { .. } => "index_out_of_range",
            Error::ShapeMismatch { .. } => "shape_mismatch",
            Error::InvalidClustering(_) => "invalid_clustering",
            Error::HasExceptionalPoints => "has_exceptional_points",
            Error::Domain(_) => "domain",
            Error::EmptyPart => "empty_part",
            Error::TooManyPartitions { .. } => "too_many_partitions",
            Error::GammaTooSmall(_) => "gamma_too_small",
            Error::LaminarityViolation { .. } => "laminarity_violation",
            Error::DisconnectedGraph => "disconnected_graph",
            Error::BudgetExceeded(_) => "budget_exceeded",
            Error::InvalidInstance(_) => "invalid_instance",
            Error::PlantingFailed(_) => "planting_failed",
            Error::Invariant(_) => "invariant",
        }
    }
}

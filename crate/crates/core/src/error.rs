use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),

    #[error("truncation: {0}")]
    Truncation(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    /// Both spatial amplitudes (or the detected one) vanish at the detection point.
    #[error("nodal point: detection probability at R = {r} is null, surviving state undefined")]
    NodalPointUndefined { r: f64 },

    /// The (anti)symmetrized two-particle state has zero norm.
    #[error("null state: two-particle norm^2 = {norm_sq:e} (identical fermion modes are excluded)")]
    NullState { norm_sq: f64 },

    #[error("empty support: density vanishes over the whole region")]
    EmptySupport,

    #[error("model degenerate: hypotheses differ by {tv:e} in total variation")]
    ModelDegenerate { tv: f64 },

    #[error("peak separation {separation} is below {required} (= factor x sigma)")]
    SeparationTooSmall { separation: f64, required: f64 },

    #[error("redraw cap exceeded: {redraws} redraws for {trials} trials")]
    RedrawCapExceeded { redraws: u64, trials: u64 },

    #[error("internal consistency: {0}")]
    Consistency(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("format: {0}")]
    Format(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate kernel template (scale {scale}, half width {half_width})")]
    DegenerateKernel { scale: f64, half_width: usize },

    #[error("unknown filter bank name `{0}`")]
    UnknownBank(String),

    #[error("invalid filter bank: {0}")]
    InvalidBank(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("empty scene")]
    EmptyScene,

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("time must increase strictly (previous {previous}, got {got})")]
    NonIncreasingTime { previous: u32, got: u32 },

    #[error("a reference scene is required for brightness adjustment")]
    MissingReference,

    #[error("image too small for SSIM: {height}x{width} (need at least {min}x{min})")]
    ImageTooSmall {
        height: usize,
        width: usize,
        min: usize,
    },

    #[error("scale {0} is not part of this volume")]
    UnknownScale(f64),

    #[error(transparent)]
    SpikeIo(#[from] crate::spikeio::SpikeIoError),
}

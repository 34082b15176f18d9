use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    Shape(String),
    #[error("invalid spacing {0:?}: entries must be finite and > 0")]
    Spacing([f64; 3]),
    #[error("axis {0} out of range (expected 0, 1 or 2)")]
    Axis(usize),
    #[error("no unique low-resolution axis for spacing {0:?}")]
    AmbiguousAnisotropy([f64; 3]),
    #[error("in-plane spacings differ: {0} vs {1}")]
    UnequalInPlane(f64, f64),
    #[error("volume is constant; cannot normalize")]
    ConstantVolume,
    #[error("volume must be normalized first")]
    NotNormalized,
    #[error("scale must be > 1, got {0}")]
    Scale(f64),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("coordinate ({0}, {1}) outside [-1, 1]^2")]
    Coordinate(f64, f64),
    #[error("no anisotropic inputs")]
    NoAnisotropicInputs,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("config mismatch: {0}")]
    ConfigMismatch(String),
    #[error("non-finite loss at epoch {epoch}, iteration {iteration}")]
    NonFiniteLoss { epoch: usize, iteration: usize },
}

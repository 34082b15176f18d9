//! Arbitrary-scale slice super-resolution model and its training loop.

pub mod adam;
pub mod conv;
pub mod grid;
pub mod model;
pub mod scalar;
pub mod train;

pub use adam::Adam;
pub use grid::{make_hr_grid, query_features, CoordinateGrid, FeatureMap};
pub use model::{Activation, ModelConfig, ParamSpec, SRModel};
pub use scalar::Scalar;
pub use train::{l1_loss, mean_l1, split_indices, train, BestModel, EpochRecord, TrainConfig, TrainOutcome, Trainer};

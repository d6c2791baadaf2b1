//! Learned map from Heston parameters to collocation values.

pub mod dataset;
pub mod lhs;
pub mod mlp;
pub mod train;

pub use dataset::{
    generate_training_set, ConditionalSpec, GenerationConfig, NormStats, ParamRanges, ScheduleKind,
    Schema, TrainingSet,
};
pub use lhs::lhs_sample;
pub use mlp::{BasisSpec, Layer, MlpModel};
pub use train::{train, TrainConfig, TrainReport};

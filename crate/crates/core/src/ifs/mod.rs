//! Iterated function systems: maps, ratio and weight sequences, models and
//! cylinder words.

pub mod cylinder;
pub mod map;
pub mod model;
pub mod sequences;

pub use cylinder::{
    enumerate_stopping_set, enumerate_stopping_set_with_budget, filter_lambda1, word_map,
    CylinderIndex, StoppingSet,
};
pub use map::{map_apply, AffineMap, SimilarityMap};
pub use model::{GapSchedule, IFSModel, MapRule, OpenSet};
pub use sequences::{RatioKind, RatioSequence, WeightKind, WeightSequence};

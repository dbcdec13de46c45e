//! Near-field range estimation: ambiguity functions, Cramér-Rao bounds and
//! a maximum-likelihood estimator for linear arrays observing a point target
//! (PT) or an extended planar target (ET).

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ambiguity;
pub mod crb;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod scenario;
pub mod special;
pub mod sweep;
pub mod waveform;

pub use ambiguity::{AmbiguityMethod, AmbiguitySample};
pub use crb::{CrbBreakdown, CrbMethod, EtaBeta};
pub use error::{Error, Result};
pub use estimator::{EstimationResult, MonteCarloConfig, MonteCarloResult, ReceivedBatch, SearchGrid};
pub use geometry::{ArrayConfig, ConfigTag, DistanceMode, Geometry, TargetKind, TargetModel, SPEED_OF_LIGHT};
pub use scenario::Scenario;
pub use sweep::{parse_si, GridSpec};
pub use waveform::{Waveform, WaveformKind};

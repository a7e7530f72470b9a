//! Deterministic video augmentation by cuboid cut-and-paste mixing.
//!
//! The crate covers the data model and VCT container ([`tensor`], [`vct`],
//! [`labels`]), counter-based random streams ([`rng`]), cuboid sampling
//! ([`sampler`]), clip and batch mixing with the Mixup and Cutout baselines
//! ([`mixers`]), training-clip and evaluation-view sampling ([`pipeline`]),
//! feature-level mixing ([`featmix`]), temporal localization and
//! class-activation maps ([`localize`], [`stcam`]) and a small synthetic
//! experiment harness ([`toylab`], [`wstal`]).

pub mod cli;
pub mod error;
pub mod featmix;
pub mod labels;
pub mod localize;
pub mod mixers;
pub mod pipeline;
pub mod rng;
pub mod sampler;
pub mod stcam;
pub mod tensor;
pub mod toylab;
pub mod vct;
pub mod wstal;

pub use error::{Error, Result};
pub use rng::RngStream;
pub use sampler::{CuboidCoords, Extent, MixVariant, Ratio};
pub use tensor::{BatchItem, ClipBatch, Shape, SoftLabel, VideoClip};

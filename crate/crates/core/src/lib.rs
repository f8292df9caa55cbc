//! Lossless compression of floating-point arrays by regrouping the bytes of
//! each value before handing them to a general-purpose codec.

pub mod analysis;
pub mod clustering;
pub mod codecs;
pub mod container;
pub mod error;
pub mod features;
pub mod par;
pub mod pipeline;
pub mod profiles;
pub mod synth;
pub mod transform;
pub mod typed;

pub use codecs::{CodecId, CodecParams, CodecRegistry};
pub use container::Container;
pub use error::{Error, Result};
pub use pipeline::{compress_pipeline, decompress_pipeline, Mode, PipelineConfig};
pub use typed::{ByteGroup, ClusteringPlan, FloatWidth, Packing, Partition, TypedView};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
struct ReadmeDoctests;

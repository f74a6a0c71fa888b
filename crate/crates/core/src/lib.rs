//! Assisted video annotation engine.
//!
//! Sparse point annotations are propagated to every frame of a video by
//! linearly interpolating cached dense descriptors between annotated frames
//! and matching each interpolated descriptor back to its nearest location.
//! Box predictions are read from a cached box-offset map at the matched
//! location. The crate also carries the binary feature-cache format, session
//! persistence, the annotation-session state machine, and the evaluation
//! harness (label quality against extreme-click ground truth, annotation
//! throughput, synthetic fixtures and a scripted operator).
//!
//! Geometry and metrics are generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the scalar to `f64`, which is what sessions persist.

pub mod descriptor;
pub mod error;
pub mod geom;
pub mod metrics;
pub mod scalar;
pub mod session;
pub mod store;
pub mod track;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Point = geom::Point<f64>;
pub type BBox = geom::BBox<f64>;
pub type GridMap = geom::GridMap<f32>;
pub type Descriptor = descriptor::Descriptor<f64>;
pub type BoxPrediction = descriptor::BoxPrediction<f64>;
pub type Annotation = track::Annotation<f64>;
pub type TrackEntry = track::TrackEntry<f64>;
pub type Sparkline = track::Sparkline<f64>;
pub type Label = metrics::Label<f64>;
pub type TrackReport = metrics::TrackReport<f64>;

pub use metrics::{AnnotationStyle, StylePreset};
pub use session::{JumpKind, Session};
pub use store::{DescriptorCache, SessionFile, VideoManifest};

//! Drift-adaptive classification of social-sensor posts.
//!
//! Posts are hashed into sparse features, classified by an ensemble drawn
//! from an append-only classifier store, and grouped into detected events.
//! At the end of each window the labeler matches posts against trusted
//! ground-truth events to produce fresh training data, and the update
//! schedule decides whether the store grows.

pub mod drift;
pub mod ensemble;
pub mod features;
pub mod geotime;
pub mod hexfloat;
pub mod ingest;
pub mod labeler;
pub mod learners;
pub mod pipeline;
pub mod registry;
pub mod rng;

pub use drift::{DetectorConfig, DetectorMode, DriftDetector, Schedule, ScheduleKind};
pub use ensemble::{EnsembleConfig, Retrieval, Scheme};
pub use features::{Centroid, FeatureVector, SparseVector};
pub use geotime::{GridCell, LocationMemory};
pub use ingest::{GroundTruthEvent, SocialPost, SynthConfig};
pub use labeler::{LabelParams, LabeledSet, Window};
pub use learners::{Hyper, LabeledSample, LearnerKind, LinearModel, Metrics};
pub use pipeline::{PipelineConfig, PipelineError};
pub use registry::{ClassifierRecord, Registry};

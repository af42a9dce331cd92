//! Real-time semantic background subtraction.
//!
//! The engine combines three per-pixel classifiers:
//!
//! - a sample-based background subtractor ([`vibe`]) producing a binary
//!   background/foreground label,
//! - a three-class semantic classifier ([`semantic`]) derived from
//!   precomputed segmentation probability maps, which may be available
//!   only for some frames (or some pixels), and
//! - a color change detector ([`change`]) that decides whether a pixel
//!   still looks like it did the last time semantic information was
//!   available for it.
//!
//! The [`fusion`] module wires them together with a fixed decision table:
//! fresh or still-valid semantic decisions override the subtractor, stale
//! ones are discarded. An optional feedback loop drives the subtractor's
//! conservative model update with the fused output instead of its own.
//!
//! Supporting modules: [`io`] (Netpbm frame/mask/map files and dataset
//! layout discovery), [`synth`] (deterministic synthetic sequences with
//! ground truth and oracle semantic maps), [`eval`] (confusion counts,
//! F1, frame-rate sweeps), [`optimize`] (threshold search), and
//! [`runner`] (sequence orchestration).

pub mod change;
pub mod config;
pub mod error;
pub mod eval;
pub mod fusion;
pub mod io;
pub mod optimize;
pub mod raster;
pub mod runner;
pub mod semantic;
pub mod synth;
pub mod vibe;

pub use change::{detect, l1_distance, ChangeParams, ChangeVerdict, MAX_L1_DISTANCE};
pub use config::{FusionMode, PipelineConfig};
pub use error::{Error, Result};
pub use eval::Confusion;
pub use fusion::{combine_rtsbs, combine_sbs, FrameResult, Pipeline};
pub use io::{Frame, GroundTruthMask, SemanticMap, SequenceDescriptor};
pub use raster::{Label, Raster, Rgb};
pub use semantic::{
    classify_semantic, Availability, CacheEntry, Schedule, SemanticCache, SemanticDecision,
    SemanticModel, SemanticParams,
};
pub use vibe::{VibeModel, VibeParams};

//! Route planning core for camera-supervised warehouse platforms.
//!
//! The crate is `no_std` (it needs `alloc`) and contains every algorithmic
//! stage of the pipeline: RGB range classification and gap-tolerant blob
//! segmentation, swept-corridor geometry, visibility-graph construction with
//! a shared base matrix for several platforms, a Dijkstra solver with
//! unit-flow certification, motion-vector generation and the binary codecs
//! used on the ingest and PLC links. IO, networking and the CLI live in the
//! `warehouse-router` crate.
#![no_std]
#![deny(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
pub mod frame;
pub mod geometry;
pub mod graph;
pub mod motion;
pub mod oracle;
pub mod path;
pub mod plan;
pub mod vision;
pub mod wire;

pub use error::Error;
pub use frame::Frame;
pub use geometry::{Corridor, LineABC, Point, Rect};
pub use graph::{BaseMatrix, Clearance, Node, NodeKind, PlatformPair, RouteGraph};
pub use motion::MotionVector;
pub use path::{FlowVector, NodeId, Route, SolverState};
pub use plan::{PipelineConfig, PlatformOutcome, PlatformStatus, ScenePlan};
pub use vision::{BBox, ColorClass, ObjectClass, RgbRange, Role, SceneObject};

/// Millimeters covered by one pixel side with the reference camera mounting.
pub const DEFAULT_MM_PER_PX: f64 = 2.96875;

//! Near-field perception for autonomous mobile robots built around a projected
//! laser stripe.
//!
//! The crate is organized by tier and by role:
//!
//! - [`geometry`] – pinhole helpers, floor homographies and the closed-form
//!   light-displacement height solver.
//! - [`stripe`] – the frame pipeline: colour thresholding, line detection,
//!   rectification to a metric top-down grid, spatial/temporal denoising,
//!   continuity checking and displacement measurement.
//! - [`simulator`] – a ray-cast renderer of the floor, box obstacles and the
//!   laser sheet. It stands in for the physical rig and is the ground-truth
//!   oracle for the pipeline.
//! - [`decision`] – the category/size action table and tier escalation.
//! - [`datagen`] – cutout compositing for synthetic detector training data and
//!   the detection-ingestion adapter.
//!
//! # Features
//!
//! - `parallel` *(default)* – data-parallel loops (rendering rows, batch scene
//!   evaluation, dataset images) run on the `rayon` pool. Without it every
//!   [`exec::Execution`] falls back to the sequential path. Results are
//!   bit-identical either way; only wall time changes.

pub mod datagen;
pub mod decision;
pub mod exec;
pub mod frame;
pub mod geometry;
pub mod lighting;
pub mod seed;
pub mod simulator;
pub mod stripe;

pub use frame::Frame;

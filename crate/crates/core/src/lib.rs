//! Activation-guided region-of-interest extraction and adaptive offloading
//! for high-resolution camera frames.
//!
//! The pipeline runs in three stages, mirroring a device/edge split:
//!
//! 1. **Locate** — a lightweight convolutional extractor turns a frame into a
//!    feature map ([`tensor`], [`extractor`]); the frame is partitioned with a
//!    "four plus one" layout ([`partition`]) and each lower/center crop gets an
//!    activation map from class weights ([`cam`]), which is thresholded and
//!    segmented into candidate boxes ([`roi`]).
//! 2. **Decide** — valid boxes are assigned discrete down-sampling rates by
//!    maximizing an accuracy-minus-cost utility under per-frame bandwidth and
//!    GPU budgets ([`policy`]); per-part transmission frequency adapts to
//!    detection feedback.
//! 3. **Offload** — boxes cross a simulated (or real, socket-backed) link
//!    ([`sim`], [`protocol`]) and a deterministic detection oracle scores them
//!    against ground truth ([`oracle`]).
//!
//! Everything is seeded and deterministic: the same scenario and seed produce
//! byte-identical reports.

pub mod cam;
pub mod config;
pub mod error;
pub mod extractor;
pub mod frame;
pub mod geometry;
pub mod oracle;
pub mod partition;
pub mod policy;
pub mod protocol;
pub mod roi;
pub mod sim;
pub mod synth;
pub mod tensor;
pub mod trace;

pub use error::{Error, Result};

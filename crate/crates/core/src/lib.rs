//! Core pipeline for scanning indoor scenes for inaccessible objects and
//! suggesting 3D-printable assistive augmentations.
//!
//! The crate is organised bottom-up:
//!
//! - [`taxonomy`]: the fixed inaccessibility-class vocabulary and the
//!   AccessMeta label tree.
//! - [`dataset`]: COCO-style annotation files, validation, stats and splits.
//! - [`detector`]: detector adapters plus score/NMS post-processing.
//! - [`evaluation`]: IoU, greedy matching and 101-point interpolated AP.
//! - [`catalog`]: the augmentation dictionary and keyword classifier.
//! - [`recommender`]: detections to category-grouped suggestions.
//! - [`annotation_qa`]: crowdsourced label validation and consolidation.

pub mod annotation_qa;
pub mod catalog;
pub mod dataset;
pub mod detector;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod recommender;
pub mod taxonomy;

pub use error::{Error, Result};

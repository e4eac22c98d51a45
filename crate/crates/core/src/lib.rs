//! gauge-scout-core — meter-region detection for inspection cameras.
//!
//! The crate implements three ways of finding an analog meter in a camera
//! view, plus the simulated pan-tilt-zoom camera and the benchmark harness
//! used to compare them:
//!
//! 1. **Shape-based** – circle Hough transform proposals, filtered by
//!    feature matching against a reference meter image.
//! 2. **Texture-based** – a set of robot-pose hypotheses with likelihood
//!    weights, updated from the position and concentration of template
//!    matches while the camera iteratively zooms toward the leader.
//! 3. **Background-based** – an annotated wide surround image is registered
//!    to the view to localize the meter even when the meter itself is too
//!    small to match, then a zoomed view is refined with the meter template.
//!
//! Supporting layers: [`image`]/[`geometry`] (rasters, homographies,
//! regions), [`features`] (keypoints, descriptors, matching, RANSAC),
//! [`ptzsim`] (planar-scene PTZ camera simulator and scene generator), and
//! [`harness`] (detection-rate grids over meter shape × size × method).


pub mod error;
pub mod features;
pub mod geometry;

pub mod image;
pub mod ptzsim;

pub use error::{Error, Result};
pub use geometry::{iou, warp_homography, Homography, Region};
pub use image::{sobel_gradients, GradientField, GrayImage};

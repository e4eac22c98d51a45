//! Error type shared by all gauge-scout modules.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("image too small: {width}x{height}, need at least {min_width}x{min_height}")]
    ImageTooSmall {
        width: u32,
        height: u32,
        min_width: u32,
        min_height: u32,
    },

    #[error("invalid image dimensions {width}x{height}")]
    BadDimensions { width: u32, height: u32 },

    #[error("pixel buffer length {got} does not match {width}x{height}")]
    BadBufferLength { width: u32, height: u32, got: usize },

    #[error("singular transform (|det| = {det:.3e})")]
    SingularTransform { det: f64 },

    #[error("bad radius range [{r_min}, {r_max}] for a {width}x{height} image")]
    BadRadiusRange {
        r_min: f64,
        r_max: f64,
        width: u32,
        height: u32,
    },

    #[error("no robust transform: best consensus {inliers} below required {min_inliers}")]
    NoRobustTransform { inliers: usize, min_inliers: usize },

    #[error("invalid region: w={w}, h={h} (both must be > 0)")]
    BadRegion { w: f64, h: f64 },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("descriptor blob: {0}")]
    Blob(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

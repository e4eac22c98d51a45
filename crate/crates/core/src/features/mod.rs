//! Local-feature machinery: scale-space keypoints, 128-bin descriptors,
//! ratio-test matching, match-cluster concentration, and robust transform
//! estimation.
//!
//! Everything here is deterministic: no RNG is used anywhere except RANSAC,
//! which takes the generator from the caller.

mod descriptors;
mod keypoints;
mod matching;
mod pyramid;
mod ransac;

pub use descriptors::{compute_descriptors, read_descriptor_blob, write_descriptor_blob, BLOB_MAGIC};
pub use keypoints::detect_keypoints;
pub use matching::{concentration_score, match_ratio, Concentration};
pub use ransac::{estimate_transform_ransac, RansacParams, RansacResult, TransformModel};

use crate::error::Result;
use crate::image::GrayImage;

pub const DESCRIPTOR_LEN: usize = 128;

/// Scale-space interest point in input-image coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    /// Blur level of the detection (pixels); proportional to blob radius.
    pub scale: f64,
    /// Dominant gradient orientation in [0, 2pi).
    pub orientation: f64,
    /// |DoG| at the refined extremum.
    pub response: f32,
}

/// Where in the pyramid a keypoint was found; needed to describe it later.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct PyrCoord {
    pub octave: u8,
    pub layer: u8,
}

#[derive(Debug, Clone, Default)]
pub struct KeypointSet {
    pub keypoints: Vec<Keypoint>,
    pub(crate) pyr: Vec<PyrCoord>,
}

impl KeypointSet {
    pub fn len(&self) -> usize {
        self.keypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keypoints.is_empty()
    }

    /// Positions as (x, y) pairs, parallel to `keypoints`.
    pub fn positions(&self) -> Vec<(f64, f64)> {
        self.keypoints.iter().map(|k| (k.x, k.y)).collect()
    }
}

/// 128-dimensional gradient-histogram descriptor; unit L2 norm, each
/// component clipped at 0.2 before the final renormalization.
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor(pub [f32; DESCRIPTOR_LEN]);

impl Descriptor {
    /// Squared Euclidean distance, accumulated in index order.
    #[inline]
    pub fn distance_sq(&self, other: &Descriptor) -> f32 {
        let mut acc = 0.0f32;
        for i in 0..DESCRIPTOR_LEN {
            let d = self.0[i] - other.0[i];
            acc += d * d;
        }
        acc
    }

    pub fn distance(&self, other: &Descriptor) -> f32 {
        self.distance_sq(other).sqrt()
    }
}

/// Descriptors plus the index of the keypoint each one describes.
#[derive(Debug, Clone, Default)]
pub struct DescriptorSet {
    pub descriptors: Vec<Descriptor>,
    /// `keypoint_index[i]` is the keypoint described by `descriptors[i]`.
    pub keypoint_index: Vec<usize>,
    /// Keypoints skipped because their window left the image.
    pub dropped: usize,
}

impl DescriptorSet {
    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }
}

/// One accepted correspondence; indices refer to descriptor sets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub query: usize,
    pub train: usize,
    pub distance: f32,
}

#[derive(Debug, Clone, Default)]
pub struct MatchSet {
    pub matches: Vec<Match>,
    /// Set when the train side had fewer than two descriptors, which makes
    /// the ratio test undefined.
    pub insufficient_train: bool,
}

impl MatchSet {
    pub fn len(&self) -> usize {
        self.matches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matches.is_empty()
    }

    /// Matches ordered by ascending distance.
    pub fn sorted_by_distance(&self) -> Vec<Match> {
        let mut m = self.matches.clone();
        m.sort_by(|a, b| {
            a.distance
                .partial_cmp(&b.distance)
                .unwrap()
                .then(a.query.cmp(&b.query))
        });
        m
    }
}

/// Keypoints and their descriptors, extracted together so the scale-space
/// pyramid is built once.
#[derive(Debug, Clone, Default)]
pub struct ImageFeatures {
    pub keypoints: KeypointSet,
    pub descriptors: DescriptorSet,
}

impl ImageFeatures {
    /// Frame position of descriptor `i`.
    pub fn descriptor_position(&self, i: usize) -> (f64, f64) {
        let kp = &self.keypoints.keypoints[self.descriptors.keypoint_index[i]];
        (kp.x, kp.y)
    }

    /// Frame positions indexed by descriptor, e.g. for concentration scoring
    /// of a match set whose train side is this image.
    pub fn descriptor_positions(&self) -> Vec<(f64, f64)> {
        (0..self.descriptors.len())
            .map(|i| self.descriptor_position(i))
            .collect()
    }
}

/// Detect keypoints and compute their descriptors in one pass.
pub fn extract_features(img: &GrayImage, max_count: usize) -> Result<ImageFeatures> {
    let (w, h) = img.dimensions();
    let min = keypoints::min_image_side();
    if w < min || h < min {
        return Err(crate::error::Error::ImageTooSmall {
            width: w,
            height: h,
            min_width: min,
            min_height: min,
        });
    }
    let ss = pyramid::ScaleSpace::build(img);
    let kps = keypoints::detect_in_scale_space(&ss, max_count);
    let descriptors = descriptors::describe_in_scale_space(&ss, &kps);
    Ok(ImageFeatures {
        keypoints: kps,
        descriptors,
    })
}

/// Point pairs (query position, train position) for the matches, for feeding
/// the transform estimator.
pub fn match_point_pairs(
    matches: &MatchSet,
    query: &ImageFeatures,
    train: &ImageFeatures,
) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
    let mut q = Vec::with_capacity(matches.len());
    let mut t = Vec::with_capacity(matches.len());
    for m in &matches.matches {
        q.push(query.descriptor_position(m.query));
        t.push(train.descriptor_position(m.train));
    }
    (q, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob_image(w: u32, h: u32) -> GrayImage {
        // A jittered grid of hard-edged disks of mixed polarity and size:
        // strong, well-isolated DoG extrema.
        let (nx, ny) = (8, 8);
        let (cw, ch) = (w as f64 / nx as f64, h as f64 / ny as f64);
        let blobs: Vec<(f64, f64, f64, f64)> = (0..nx * ny)
            .map(|i| {
                let fi = i as f64;
                let gx = (i % nx) as f64;
                let gy = (i / nx) as f64;
                let x = (gx + 0.5) * cw + (fi * 37.7).sin() * 0.2 * cw;
                let y = (gy + 0.5) * ch + (fi * 59.3).cos() * 0.2 * ch;
                let r = 2.0 + (fi * 13.1).sin().abs() * 3.5;
                let polarity = if i % 3 == 0 { -90.0 } else { 90.0 };
                (x, y, r, polarity)
            })
            .collect();
        GrayImage::from_fn(w, h, |x, y| {
            let mut v = 128.0;
            for &(bx, by, r, amp) in &blobs {
                let d = ((x as f64 - bx).powi(2) + (y as f64 - by).powi(2)).sqrt();
                if d < r {
                    v += amp;
                } else if d < r + 1.0 {
                    v += amp * (r + 1.0 - d);
                }
            }
            v.clamp(0.0, 255.0) as u8
        })
        .unwrap()
    }

    #[test]
    fn extract_matches_separate_calls() {
        let img = blob_image(160, 160);
        let combined = extract_features(&img, 100).unwrap();
        let kps = detect_keypoints(&img, 100).unwrap();
        let descs = compute_descriptors(&img, &kps);
        assert_eq!(combined.keypoints.len(), kps.len());
        assert_eq!(combined.descriptors.len(), descs.len());
        for (a, b) in combined
            .descriptors
            .descriptors
            .iter()
            .zip(&descs.descriptors)
        {
            assert_eq!(a.0, b.0);
        }
    }

    #[test]
    fn rotated_image_keeps_keypoints() {
        // Rotating by 90 degrees permutes pixels exactly; keypoint counts
        // should track and top responses should land on mapped positions.
        let img = blob_image(160, 160);
        let rot = GrayImage::from_fn(160, 160, |x, y| img.get(y, 160 - 1 - x)).unwrap();
        let a = detect_keypoints(&img, 300).unwrap();
        let b = detect_keypoints(&rot, 300).unwrap();
        assert!(!a.is_empty());
        let (na, nb) = (a.len() as f64, b.len() as f64);
        assert!(
            (na - nb).abs() <= 0.1 * na.max(nb),
            "counts diverged: {na} vs {nb}"
        );
        // Map original (x, y) -> rotated (96-1-y, x).
        let top = a.keypoints.iter().take(20);
        for k in top {
            let tx = 160.0 - 1.0 - k.y;
            let ty = k.x;
            let hit = b
                .keypoints
                .iter()
                .any(|r| ((r.x - tx).powi(2) + (r.y - ty).powi(2)).sqrt() <= 2.0);
            assert!(hit, "no rotated counterpart for ({:.1}, {:.1})", k.x, k.y);
        }
    }
}

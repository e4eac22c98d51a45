//! Planar transforms and axis-aligned regions.
//!
//! A [`Homography`] maps source pixels to destination pixels; warping is done
//! by inverse mapping so every destination pixel is sampled exactly once.
//! Matrices are stored unnormalized and only scaled to `m[2][2] == 1` when
//! explicitly requested, which keeps mid-pipeline compositions free of
//! division hazards.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::GrayImage;

const SINGULAR_EPS: f64 = 1e-12;

/// 3x3 projective transform, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Homography {
    m: [[f64; 3]; 3],
}

impl Homography {
    pub fn identity() -> Self {
        Self {
            m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    pub fn from_matrix(m: [[f64; 3]; 3]) -> Self {
        Self { m }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Self {
            m: [[1.0, 0.0, tx], [0.0, 1.0, ty], [0.0, 0.0, 1.0]],
        }
    }

    pub fn scale(sx: f64, sy: f64) -> Self {
        Self {
            m: [[sx, 0.0, 0.0], [0.0, sy, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// Similarity transform: rotate by `angle`, scale by `s`, then translate.
    pub fn similarity(s: f64, angle: f64, tx: f64, ty: f64) -> Self {
        let (sin, cos) = angle.sin_cos();
        Self {
            m: [
                [s * cos, -s * sin, tx],
                [s * sin, s * cos, ty],
                [0.0, 0.0, 1.0],
            ],
        }
    }

    pub fn matrix(&self) -> &[[f64; 3]; 3] {
        &self.m
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn is_invertible(&self) -> bool {
        self.det().abs() > SINGULAR_EPS
    }

    /// Scale so `m[2][2] == 1` when it is nonzero. Idempotent.
    pub fn normalized(&self) -> Self {
        let w = self.m[2][2];
        if w.abs() <= SINGULAR_EPS {
            return *self;
        }
        let mut m = self.m;
        for row in &mut m {
            for v in row.iter_mut() {
                *v /= w;
            }
        }
        Self { m }
    }

    pub fn inverse(&self) -> Result<Self> {
        let det = self.det();
        if det.abs() <= SINGULAR_EPS {
            return Err(Error::SingularTransform { det });
        }
        let m = &self.m;
        let inv = [
            [
                (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det,
                (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det,
                (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det,
            ],
            [
                (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det,
                (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det,
                (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det,
            ],
            [
                (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det,
                (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det,
                (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det,
            ],
        ];
        Ok(Self { m: inv })
    }

    /// `self * other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &Homography) -> Self {
        let a = &self.m;
        let b = &other.m;
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
            }
        }
        Self { m }
    }

    /// Map a point. The caller is responsible for points near the plane at
    /// infinity; `w` close to zero yields non-finite output.
    #[inline]
    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        let m = &self.m;
        let u = m[0][0] * x + m[0][1] * y + m[0][2];
        let v = m[1][0] * x + m[1][1] * y + m[1][2];
        let w = m[2][0] * x + m[2][1] * y + m[2][2];
        (u / w, v / w)
    }
}

/// Axis-aligned rectangle: top-left corner plus extent, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Region {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        if !(w > 0.0 && h > 0.0) {
            return Err(Error::BadRegion { w, h });
        }
        Ok(Self { x, y, w, h })
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn corners(&self) -> [(f64, f64); 4] {
        [
            (self.x, self.y),
            (self.x + self.w, self.y),
            (self.x + self.w, self.y + self.h),
            (self.x, self.y + self.h),
        ]
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x && x <= self.x + self.w && y >= self.y && y <= self.y + self.h
    }

    /// Grow (or shrink, for negative values) by `frac` of the extent on every
    /// side, about the center.
    pub fn expand(&self, frac: f64) -> Region {
        let dw = self.w * frac;
        let dh = self.h * frac;
        Region {
            x: self.x - dw,
            y: self.y - dh,
            w: self.w + 2.0 * dw,
            h: self.h + 2.0 * dh,
        }
    }

    /// Clip to an image of the given dimensions. Returns `None` when nothing
    /// remains.
    pub fn clip(&self, width: u32, height: u32) -> Option<Region> {
        let x0 = self.x.max(0.0);
        let y0 = self.y.max(0.0);
        let x1 = (self.x + self.w).min(width as f64);
        let y1 = (self.y + self.h).min(height as f64);
        if x1 - x0 > 0.0 && y1 - y0 > 0.0 {
            Some(Region {
                x: x0,
                y: y0,
                w: x1 - x0,
                h: y1 - y0,
            })
        } else {
            None
        }
    }

    /// Axis-aligned bounding box of the region's corners mapped through `h`.
    pub fn map_bounding(&self, h: &Homography) -> Region {
        let mut min_x = f64::INFINITY;
        let mut min_y = f64::INFINITY;
        let mut max_x = f64::NEG_INFINITY;
        let mut max_y = f64::NEG_INFINITY;
        for (cx, cy) in self.corners() {
            let (u, v) = h.apply(cx, cy);
            min_x = min_x.min(u);
            min_y = min_y.min(v);
            max_x = max_x.max(u);
            max_y = max_y.max(v);
        }
        Region {
            x: min_x,
            y: min_y,
            w: (max_x - min_x).max(1e-9),
            h: (max_y - min_y).max(1e-9),
        }
    }
}

/// Intersection-over-union of two regions; 0 when disjoint.
pub fn iou(a: &Region, b: &Region) -> f64 {
    let ix = (a.x + a.w).min(b.x + b.w) - a.x.max(b.x);
    let iy = (a.y + a.h).min(b.y + b.h) - a.y.max(b.y);
    if ix <= 0.0 || iy <= 0.0 {
        return 0.0;
    }
    let inter = ix * iy;
    let union = a.area() + b.area() - inter;
    inter / union
}

/// Inverse-mapping warp: each destination pixel `(x, y)` is sampled from the
/// source at `h^-1 * (x, y)` with bilinear interpolation, so `h` maps source
/// pixels to destination pixels. Values round half-up to 8 bits.
pub fn warp_homography(src: &GrayImage, h: &Homography, out_w: u32, out_h: u32) -> Result<GrayImage> {
    let inv = h.inverse()?;
    let mut out = GrayImage::new(out_w, out_h)?;
    let m = inv.matrix();
    for y in 0..out_h {
        let yf = y as f64;
        for x in 0..out_w {
            let xf = x as f64;
            let u = m[0][0] * xf + m[0][1] * yf + m[0][2];
            let v = m[1][0] * xf + m[1][1] * yf + m[1][2];
            let w = m[2][0] * xf + m[2][1] * yf + m[2][2];
            let val = src.bilinear_sample(u / w, v / w);
            out.set(x, y, val.round().clamp(0.0, 255.0) as u8);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn test_image() -> GrayImage {
        GrayImage::from_fn(32, 24, |x, y| ((x * 13 + y * 29) % 251) as u8).unwrap()
    }

    #[test]
    fn warp_identity_is_exact() {
        let img = test_image();
        let out = warp_homography(&img, &Homography::identity(), 32, 24).unwrap();
        assert_eq!(img, out);
    }

    #[test]
    fn warp_translation_shifts_content() {
        // h = translate(+10, 0) maps src x to x+10, so out[x] == src[x-10]
        // and the left strip (x < 10, unmapped) is black.
        let img = test_image();
        let out = warp_homography(&img, &Homography::translation(10.0, 0.0), 32, 24).unwrap();
        for y in 0..24 {
            for x in 0..32u32 {
                let expected = if x >= 10 { img.get(x - 10, y) } else { 0 };
                assert_eq!(out.get(x, y), expected, "at ({x},{y})");
            }
        }
    }

    #[test]
    fn warp_scale_matches_direct_upsample() {
        let img = test_image();
        let out = warp_homography(&img, &Homography::scale(2.0, 2.0), 32, 24).unwrap();
        for y in 0..24u32 {
            for x in 0..32u32 {
                let direct = img
                    .bilinear_sample(x as f64 / 2.0, y as f64 / 2.0)
                    .round() as u8;
                assert_eq!(out.get(x, y), direct, "at ({x},{y})");
            }
        }
    }

    #[test]
    fn warp_rejects_singular() {
        let img = test_image();
        let h = Homography::from_matrix([[1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!(matches!(
            warp_homography(&img, &h, 8, 8),
            Err(Error::SingularTransform { .. })
        ));
    }

    #[test]
    fn iou_identical_and_disjoint() {
        let a = Region::new(3.0, 4.0, 10.0, 12.0).unwrap();
        assert_eq!(iou(&a, &a), 1.0);
        let b = Region::new(100.0, 100.0, 5.0, 5.0).unwrap();
        assert_eq!(iou(&a, &b), 0.0);
    }

    #[test]
    fn iou_half_overlap() {
        // intersection 5x10 = 50, union 100 + 100 - 50 = 150
        let a = Region::new(0.0, 0.0, 10.0, 10.0).unwrap();
        let b = Region::new(5.0, 0.0, 10.0, 10.0).unwrap();
        assert!((iou(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn normalized_is_idempotent() {
        let h = Homography::from_matrix([[2.0, 0.0, 4.0], [0.0, 2.0, 6.0], [0.0, 0.0, 2.0]]);
        let n1 = h.normalized();
        let n2 = n1.normalized();
        assert_eq!(n1.matrix(), n2.matrix());
        assert_eq!(n1.matrix()[2][2], 1.0);
    }

    #[test]
    fn region_rejects_non_positive_extent() {
        assert!(Region::new(0.0, 0.0, 0.0, 5.0).is_err());
        assert!(Region::new(0.0, 0.0, 5.0, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn iou_is_symmetric(
            ax in -50.0..50.0f64, ay in -50.0..50.0f64,
            aw in 0.1..40.0f64, ah in 0.1..40.0f64,
            bx in -50.0..50.0f64, by in -50.0..50.0f64,
            bw in 0.1..40.0f64, bh in 0.1..40.0f64,
        ) {
            let a = Region { x: ax, y: ay, w: aw, h: ah };
            let b = Region { x: bx, y: by, w: bw, h: bh };
            let ab = iou(&a, &b);
            let ba = iou(&b, &a);
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&ab));
        }

        #[test]
        fn homography_roundtrip_within_half_pixel(
            s in 0.5..2.0f64,
            angle in -3.0..3.0f64,
            tx in -100.0..100.0f64,
            ty in -100.0..100.0f64,
            px in 0.0..640.0f64,
            py in 0.0..480.0f64,
        ) {
            let h = Homography::similarity(s, angle, tx, ty);
            let inv = h.inverse().unwrap();
            let (u, v) = h.apply(px, py);
            let (bx, by) = inv.apply(u, v);
            prop_assert!(((bx - px).powi(2) + (by - py).powi(2)).sqrt() < 0.5);
        }
    }
}

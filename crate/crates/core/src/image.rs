//! Grayscale raster, sub-pixel sampling, and Sobel gradients.
//!
//! Every stage of the toolkit moves pixels through [`GrayImage`]: the
//! simulator renders into it, the feature extractor reads from it, and the
//! detectors crop and warp it. Intensities are 8-bit; sub-pixel reads go
//! through [`GrayImage::bilinear_sample`], which treats everything outside
//! the image as black so the edge of a rendered camera view is explicit.

use std::path::Path;

use crate::error::{Error, Result};

/// BT.601 luma weights used when collapsing RGB inputs to grayscale.
const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// 8-bit single-channel image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl GrayImage {
    /// All-black image. Width and height must both be at least 1.
    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::BadDimensions { width, height });
        }
        Ok(Self {
            width,
            height,
            data: vec![0; width as usize * height as usize],
        })
    }

    /// Wrap an existing row-major buffer.
    pub fn from_vec(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::BadDimensions { width, height });
        }
        if data.len() != width as usize * height as usize {
            return Err(Error::BadBufferLength {
                width,
                height,
                got: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Build an image by evaluating `f` at every pixel.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Result<Self> {
        let mut img = Self::new(width, height)?;
        for y in 0..height {
            for x in 0..width {
                img.data[(y * width + x) as usize] = f(x, y);
            }
        }
        Ok(img)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [u8] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        debug_assert!(x < self.width && y < self.height);
        self.data[(y * self.width + x) as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: u8) {
        debug_assert!(x < self.width && y < self.height);
        self.data[(y * self.width + x) as usize] = v;
    }

    /// Pixel value, or 0 for coordinates outside the image.
    #[inline]
    pub fn get_or_black(&self, x: i64, y: i64) -> u8 {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            0
        } else {
            self.data[(y as usize) * self.width as usize + x as usize]
        }
    }

    /// Bilinear interpolation of the four neighbors of `(x, y)`.
    ///
    /// Coordinates outside `[0, w-1] x [0, h-1]` return 0 (black border).
    /// At integer lattice points this is exactly the raw pixel value.
    pub fn bilinear_sample(&self, x: f64, y: f64) -> f64 {
        let max_x = (self.width - 1) as f64;
        let max_y = (self.height - 1) as f64;
        if !(0.0..=max_x).contains(&x) || !(0.0..=max_y).contains(&y) {
            return 0.0;
        }
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let x0 = x0 as i64;
        let y0 = y0 as i64;
        let p00 = self.get_or_black(x0, y0) as f64;
        let p10 = self.get_or_black(x0 + 1, y0) as f64;
        let p01 = self.get_or_black(x0, y0 + 1) as f64;
        let p11 = self.get_or_black(x0 + 1, y0 + 1) as f64;
        let top = p00 * (1.0 - fx) + p10 * fx;
        let bot = p01 * (1.0 - fx) + p11 * fx;
        top * (1.0 - fy) + bot * fy
    }

    /// Intensities as `f32` in `[0, 1]`, row-major.
    pub fn to_f32_normalized(&self) -> Vec<f32> {
        self.data.iter().map(|&v| v as f32 / 255.0).collect()
    }

    /// Mean absolute intensity difference against another image of equal size.
    pub fn mean_abs_diff(&self, other: &GrayImage) -> f64 {
        assert_eq!(self.dimensions(), other.dimensions());
        let sum: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a as f64 - b as f64).abs())
            .sum();
        sum / self.data.len() as f64
    }

    /// Load a PNG. 8-bit gray is taken as-is; RGB(A) collapses through the
    /// 0.299/0.587/0.114 luma rule.
    pub fn load_png(path: impl AsRef<Path>) -> Result<Self> {
        let dynimg = image::open(path)?;
        let (w, h) = (dynimg.width(), dynimg.height());
        let data = match dynimg {
            image::DynamicImage::ImageLuma8(img) => img.into_raw(),
            other => {
                let rgb = other.to_rgb8();
                rgb.pixels()
                    .map(|p| {
                        let v = LUMA_WEIGHTS[0] * p[0] as f64
                            + LUMA_WEIGHTS[1] * p[1] as f64
                            + LUMA_WEIGHTS[2] * p[2] as f64;
                        v.round().clamp(0.0, 255.0) as u8
                    })
                    .collect()
            }
        };
        Self::from_vec(w, h, data)
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let buf: image::GrayImage =
            image::ImageBuffer::from_raw(self.width, self.height, self.data.clone())
                .expect("buffer length matches dimensions");
        buf.save(path)?;
        Ok(())
    }
}

/// Per-pixel Sobel responses. `gx`, `gy`, and `mag` are row-major and the
/// same size as the source image; border pixels are zero.
#[derive(Debug, Clone)]
pub struct GradientField {
    pub width: u32,
    pub height: u32,
    pub gx: Vec<f32>,
    pub gy: Vec<f32>,
    pub mag: Vec<f32>,
}

impl GradientField {
    #[inline]
    pub fn idx(&self, x: u32, y: u32) -> usize {
        (y * self.width + x) as usize
    }

    pub fn max_magnitude(&self) -> f32 {
        self.mag.iter().copied().fold(0.0, f32::max)
    }
}

/// 3x3 Sobel gradients. Requires at least a 3x3 image.
///
/// Positive `gx` points toward increasing x (right), positive `gy` toward
/// increasing y (down).
pub fn sobel_gradients(img: &GrayImage) -> Result<GradientField> {
    let (w, h) = img.dimensions();
    if w < 3 || h < 3 {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            min_width: 3,
            min_height: 3,
        });
    }
    let n = (w as usize) * (h as usize);
    let mut gx = vec![0.0f32; n];
    let mut gy = vec![0.0f32; n];
    let mut mag = vec![0.0f32; n];
    let data = img.as_slice();
    let ws = w as usize;
    for y in 1..(h as usize - 1) {
        for x in 1..(w as usize - 1) {
            let i = y * ws + x;
            let tl = data[i - ws - 1] as f32;
            let tc = data[i - ws] as f32;
            let tr = data[i - ws + 1] as f32;
            let ml = data[i - 1] as f32;
            let mr = data[i + 1] as f32;
            let bl = data[i + ws - 1] as f32;
            let bc = data[i + ws] as f32;
            let br = data[i + ws + 1] as f32;
            let dx = (tr + 2.0 * mr + br) - (tl + 2.0 * ml + bl);
            let dy = (bl + 2.0 * bc + br) - (tl + 2.0 * tc + tr);
            gx[i] = dx;
            gy[i] = dy;
            mag[i] = (dx * dx + dy * dy).sqrt();
        }
    }
    Ok(GradientField {
        width: w,
        height: h,
        gx,
        gy,
        mag,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn constant(w: u32, h: u32, v: u8) -> GrayImage {
        GrayImage::from_fn(w, h, |_, _| v).unwrap()
    }

    #[test]
    fn bilinear_constant_image() {
        let img = constant(8, 6, 77);
        for &(x, y) in &[(0.0, 0.0), (3.25, 4.75), (6.99, 4.99), (7.0, 5.0)] {
            assert_eq!(img.bilinear_sample(x, y), 77.0);
        }
    }

    #[test]
    fn bilinear_identity_at_lattice() {
        let img = GrayImage::from_fn(8, 8, |x, y| (x * 17 + y * 31) as u8).unwrap();
        assert_eq!(img.bilinear_sample(3.0, 4.0), img.get(3, 4) as f64);
    }

    #[test]
    fn bilinear_midpoint_of_two_pixels() {
        // Closed form: (1-fx)*0 + fx*255 with fx = 0.5.
        let img = GrayImage::from_vec(2, 1, vec![0, 255]).unwrap();
        assert_eq!(img.bilinear_sample(0.5, 0.0), 127.5);
    }

    #[test]
    fn bilinear_out_of_bounds_is_black() {
        let img = constant(4, 4, 200);
        assert_eq!(img.bilinear_sample(-0.01, 2.0), 0.0);
        assert_eq!(img.bilinear_sample(2.0, 3.01), 0.0);
        assert_eq!(img.bilinear_sample(100.0, 100.0), 0.0);
    }

    #[test]
    fn sobel_constant_is_zero() {
        let g = sobel_gradients(&constant(10, 10, 55)).unwrap();
        assert!(g.mag.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn sobel_vertical_step_edge() {
        // Columns 0..2 black, 3..5 white; kernel applied by hand on the
        // 3x3 patch centered at the step gives |gx| = 4*255, gy = 0.
        let img = GrayImage::from_fn(6, 6, |x, _| if x < 3 { 0 } else { 255 }).unwrap();
        let g = sobel_gradients(&img).unwrap();
        let mut best_x = 0;
        let mut best = 0.0f32;
        for x in 1..5u32 {
            let m = g.mag[g.idx(x, 3)];
            if m > best {
                best = m;
                best_x = x;
            }
        }
        assert!(best_x == 2 || best_x == 3, "edge response at column {best_x}");
        let i = g.idx(best_x, 3);
        assert_eq!(g.gx[i].abs(), 4.0 * 255.0);
        assert_eq!(g.gy[i], 0.0);
    }

    #[test]
    fn sobel_horizontal_step_edge_is_symmetric() {
        let v = GrayImage::from_fn(6, 6, |x, _| if x < 3 { 0 } else { 255 }).unwrap();
        let h = GrayImage::from_fn(6, 6, |_, y| if y < 3 { 0 } else { 255 }).unwrap();
        let gv = sobel_gradients(&v).unwrap();
        let gh = sobel_gradients(&h).unwrap();
        assert_eq!(gv.gx[gv.idx(3, 2)], gh.gy[gh.idx(2, 3)]);
    }

    #[test]
    fn sobel_rejects_tiny_images() {
        let img = constant(2, 5, 0);
        assert!(matches!(
            sobel_gradients(&img),
            Err(Error::ImageTooSmall { .. })
        ));
    }

    #[test]
    fn png_roundtrip_gray() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.png");
        let img = GrayImage::from_fn(20, 14, |x, y| (x * 5 + y * 9) as u8).unwrap();
        img.save_png(&path).unwrap();
        let back = GrayImage::load_png(&path).unwrap();
        assert_eq!(img, back);
    }

    #[test]
    fn png_rgb_uses_luma_rule() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rgb.png");
        let mut rgb = image::RgbImage::new(2, 1);
        rgb.put_pixel(0, 0, image::Rgb([255, 0, 0]));
        rgb.put_pixel(1, 0, image::Rgb([0, 255, 0]));
        rgb.save(&path).unwrap();
        let img = GrayImage::load_png(&path).unwrap();
        assert_eq!(img.get(0, 0), (0.299f64 * 255.0).round() as u8);
        assert_eq!(img.get(1, 0), (0.587f64 * 255.0).round() as u8);
    }

    proptest! {
        #[test]
        fn bilinear_lattice_matches_get(
            w in 2u32..24, h in 2u32..24, seed in 0u64..1000
        ) {
            let img = GrayImage::from_fn(w, h, |x, y| {
                (seed as u32 ^ x.wrapping_mul(2654435761) ^ y.wrapping_mul(40503)) as u8
            }).unwrap();
            for y in 0..h {
                for x in 0..w {
                    prop_assert_eq!(
                        img.bilinear_sample(x as f64, y as f64),
                        img.get(x, y) as f64
                    );
                }
            }
        }
    }
}

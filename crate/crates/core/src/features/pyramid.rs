//! Gaussian scale space and difference-of-Gaussians stack.
//!
//! Float images here are octave-local: octave `o` is downsampled by `2^o`
//! relative to the input. The stack is sized for extrema search over three
//! scales per octave, so each octave holds `3 + 3` Gaussian levels and
//! `3 + 2` DoG levels.

use crate::image::GrayImage;

pub(crate) const SCALES_PER_OCTAVE: usize = 3;
pub(crate) const GAUSSIANS_PER_OCTAVE: usize = SCALES_PER_OCTAVE + 3;
pub(crate) const MAX_OCTAVES: usize = 4;
/// Blur of the base level of octave 0.
pub(crate) const SIGMA0: f32 = 1.6;
/// Blur assumed already present in the input image.
pub(crate) const INITIAL_BLUR: f32 = 0.5;

/// Row-major f32 image with intensities in [0, 1].
#[derive(Debug, Clone)]
pub(crate) struct FloatImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl FloatImage {
    pub fn from_gray(img: &GrayImage) -> Self {
        Self {
            width: img.width() as usize,
            height: img.height() as usize,
            data: img.to_f32_normalized(),
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    /// Separable Gaussian blur with replicated borders.
    pub fn gaussian_blur(&self, sigma: f32) -> FloatImage {
        if sigma <= 0.0 {
            return self.clone();
        }
        let radius = (3.0 * sigma).ceil().max(1.0) as usize;
        let mut kernel = Vec::with_capacity(2 * radius + 1);
        let denom = 2.0 * sigma * sigma;
        for i in 0..=(2 * radius) {
            let d = i as f32 - radius as f32;
            kernel.push((-d * d / denom).exp());
        }
        let sum: f32 = kernel.iter().sum();
        for k in &mut kernel {
            *k /= sum;
        }

        let (w, h) = (self.width, self.height);
        let mut tmp = vec![0.0f32; w * h];
        for y in 0..h {
            let row = &self.data[y * w..(y + 1) * w];
            for x in 0..w {
                let mut acc = 0.0f32;
                for (k, &kv) in kernel.iter().enumerate() {
                    let sx = (x + k).saturating_sub(radius).min(w - 1);
                    acc += row[sx] * kv;
                }
                tmp[y * w + x] = acc;
            }
        }
        let mut out = vec![0.0f32; w * h];
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0f32;
                for (k, &kv) in kernel.iter().enumerate() {
                    let sy = (y + k).saturating_sub(radius).min(h - 1);
                    acc += tmp[sy * w + x] * kv;
                }
                out[y * w + x] = acc;
            }
        }
        FloatImage {
            width: w,
            height: h,
            data: out,
        }
    }

    /// Keep every second pixel.
    pub fn downsample_half(&self) -> FloatImage {
        let w = (self.width / 2).max(1);
        let h = (self.height / 2).max(1);
        let mut data = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                data.push(self.get(x * 2, y * 2));
            }
        }
        FloatImage {
            width: w,
            height: h,
            data,
        }
    }

    pub fn sub(&self, other: &FloatImage) -> FloatImage {
        debug_assert_eq!(self.width, other.width);
        debug_assert_eq!(self.height, other.height);
        FloatImage {
            width: self.width,
            height: self.height,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

pub(crate) struct Octave {
    /// `GAUSSIANS_PER_OCTAVE` progressively blurred levels.
    pub gaussians: Vec<FloatImage>,
    /// Adjacent differences of `gaussians`.
    pub dogs: Vec<FloatImage>,
}

pub(crate) struct ScaleSpace {
    pub octaves: Vec<Octave>,
}

impl ScaleSpace {
    /// Blur (relative to the octave raster) of Gaussian level `layer`.
    pub fn layer_sigma(layer: f32) -> f32 {
        SIGMA0 * (layer / SCALES_PER_OCTAVE as f32).exp2()
    }

    /// Blur in input-image pixels for a (fractional) layer within an octave.
    pub fn absolute_sigma(octave: usize, layer: f32) -> f32 {
        Self::layer_sigma(layer) * (1 << octave) as f32
    }

    pub fn build(img: &GrayImage) -> ScaleSpace {
        let base = FloatImage::from_gray(img);
        let extra = (SIGMA0 * SIGMA0 - INITIAL_BLUR * INITIAL_BLUR).max(0.0).sqrt();
        let mut current = base.gaussian_blur(extra);

        let min_dim = img.width().min(img.height()) as usize;
        // Coarsest octave must keep room for a 3x3x3 extremum window.
        let mut n_octaves = 1;
        while n_octaves < MAX_OCTAVES && (min_dim >> n_octaves) >= 8 {
            n_octaves += 1;
        }

        let mut octaves = Vec::with_capacity(n_octaves);
        for _ in 0..n_octaves {
            let mut gaussians = Vec::with_capacity(GAUSSIANS_PER_OCTAVE);
            gaussians.push(current.clone());
            for i in 1..GAUSSIANS_PER_OCTAVE {
                let sig_prev = Self::layer_sigma((i - 1) as f32);
                let sig_cur = Self::layer_sigma(i as f32);
                let sig_extra = (sig_cur * sig_cur - sig_prev * sig_prev).sqrt();
                let blurred = gaussians[i - 1].gaussian_blur(sig_extra);
                gaussians.push(blurred);
            }
            let dogs = (1..GAUSSIANS_PER_OCTAVE)
                .map(|i| gaussians[i].sub(&gaussians[i - 1]))
                .collect();
            // Level SCALES_PER_OCTAVE carries blur 2*SIGMA0: the seed of the
            // next octave.
            current = gaussians[SCALES_PER_OCTAVE].downsample_half();
            octaves.push(Octave { gaussians, dogs });
        }
        ScaleSpace { octaves }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::GrayImage;

    #[test]
    fn blur_preserves_mean_of_constant() {
        let img = GrayImage::from_fn(16, 16, |_, _| 100).unwrap();
        let f = FloatImage::from_gray(&img).gaussian_blur(2.0);
        for v in &f.data {
            assert!((v - 100.0 / 255.0).abs() < 1e-5);
        }
    }

    #[test]
    fn scale_space_shape() {
        let img = GrayImage::from_fn(128, 96, |x, y| ((x + y) % 256) as u8).unwrap();
        let ss = ScaleSpace::build(&img);
        assert_eq!(ss.octaves.len(), MAX_OCTAVES);
        for (o, oct) in ss.octaves.iter().enumerate() {
            assert_eq!(oct.gaussians.len(), GAUSSIANS_PER_OCTAVE);
            assert_eq!(oct.dogs.len(), GAUSSIANS_PER_OCTAVE - 1);
            assert_eq!(oct.gaussians[0].width, 128 >> o);
        }
    }

    #[test]
    fn small_image_gets_fewer_octaves() {
        let img = GrayImage::from_fn(20, 20, |x, _| (x * 12) as u8).unwrap();
        let ss = ScaleSpace::build(&img);
        assert_eq!(ss.octaves.len(), 2);
    }
}

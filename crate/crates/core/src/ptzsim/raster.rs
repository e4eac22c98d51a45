//! Anti-aliased drawing primitives and procedural texture for scene
//! generation. Shapes are rendered by supersampled coverage so edges look
//! like camera pixels rather than aliased staircases.

use crate::image::GrayImage;

/// Samples per axis when estimating pixel coverage.
pub const SUPERSAMPLE: u32 = 4;

/// Fractional coverage of pixel `(x, y)` by the predicate `inside`.
fn coverage(x: u32, y: u32, inside: &dyn Fn(f64, f64) -> bool) -> f64 {
    let mut hit = 0u32;
    for sy in 0..SUPERSAMPLE {
        for sx in 0..SUPERSAMPLE {
            let px = x as f64 + (sx as f64 + 0.5) / SUPERSAMPLE as f64 - 0.5;
            let py = y as f64 + (sy as f64 + 0.5) / SUPERSAMPLE as f64 - 0.5;
            if inside(px, py) {
                hit += 1;
            }
        }
    }
    hit as f64 / (SUPERSAMPLE * SUPERSAMPLE) as f64
}

fn blend(old: u8, v: u8, cov: f64) -> u8 {
    (old as f64 * (1.0 - cov) + v as f64 * cov).round() as u8
}

fn bbox_iter(
    img: &GrayImage,
    min_x: f64,
    min_y: f64,
    max_x: f64,
    max_y: f64,
) -> impl Iterator<Item = (u32, u32)> {
    let x0 = min_x.floor().max(0.0) as u32;
    let y0 = min_y.floor().max(0.0) as u32;
    let x1 = (max_x.ceil() as i64).clamp(0, img.width() as i64 - 1) as u32;
    let y1 = (max_y.ceil() as i64).clamp(0, img.height() as i64 - 1) as u32;
    let xs = x0..=x1;
    xs.flat_map(move |x| (y0..=y1).map(move |y| (x, y)))
}

/// Anti-aliased annulus (`r_inner` may be 0 for a full disk).
pub fn draw_ring(img: &mut GrayImage, cx: f64, cy: f64, r_outer: f64, r_inner: f64, v: u8) {
    let cells: Vec<(u32, u32)> =
        bbox_iter(img, cx - r_outer - 1.0, cy - r_outer - 1.0, cx + r_outer + 1.0, cy + r_outer + 1.0)
            .collect();
    for (x, y) in cells {
        let cov = coverage(x, y, &|px, py| {
            let d2 = (px - cx).powi(2) + (py - cy).powi(2);
            d2 <= r_outer * r_outer && d2 >= r_inner * r_inner
        });
        if cov > 0.0 {
            img.set(x, y, blend(img.get(x, y), v, cov));
        }
    }
}

pub fn draw_disk(img: &mut GrayImage, cx: f64, cy: f64, r: f64, v: u8) {
    draw_ring(img, cx, cy, r, 0.0, v);
}

/// Hard-edged axis-aligned rectangle (clamped to the image).
pub fn fill_rect(img: &mut GrayImage, x0: f64, y0: f64, x1: f64, y1: f64, v: u8) {
    let cells: Vec<(u32, u32)> = bbox_iter(img, x0, y0, x1, y1).collect();
    for (x, y) in cells {
        let cov = coverage(x, y, &|px, py| px >= x0 && px < x1 && py >= y0 && py < y1);
        if cov > 0.0 {
            img.set(x, y, blend(img.get(x, y), v, cov));
        }
    }
}

/// Rectangle outline of the given border thickness.
pub fn stroke_rect(img: &mut GrayImage, x0: f64, y0: f64, x1: f64, y1: f64, t: f64, v: u8) {
    fill_rect(img, x0, y0, x1, y0 + t, v);
    fill_rect(img, x0, y1 - t, x1, y1, v);
    fill_rect(img, x0, y0, x0 + t, y1, v);
    fill_rect(img, x1 - t, y0, x1, y1, v);
}

/// Integer lattice hash to [0, 1).
fn lattice_hash(seed: u64, xi: i64, yi: i64) -> f64 {
    let mut h = seed
        ^ (xi as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (yi as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    h ^= h >> 33;
    h = h.wrapping_mul(0xFF51_AFD7_ED55_8CCD);
    h ^= h >> 33;
    h = h.wrapping_mul(0xC4CE_B9FE_1A85_EC53);
    h ^= h >> 33;
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Value noise in [-1, 1] at lattice spacing `scale`.
pub fn value_noise(seed: u64, x: f64, y: f64, scale: f64) -> f64 {
    let fx = x / scale;
    let fy = y / scale;
    let x0 = fx.floor();
    let y0 = fy.floor();
    let tx = smoothstep(fx - x0);
    let ty = smoothstep(fy - y0);
    let (xi, yi) = (x0 as i64, y0 as i64);
    let v00 = lattice_hash(seed, xi, yi);
    let v10 = lattice_hash(seed, xi + 1, yi);
    let v01 = lattice_hash(seed, xi, yi + 1);
    let v11 = lattice_hash(seed, xi + 1, yi + 1);
    let top = v00 * (1.0 - tx) + v10 * tx;
    let bot = v01 * (1.0 - tx) + v11 * tx;
    (top * (1.0 - ty) + bot * ty) * 2.0 - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_covers_expected_area() {
        let mut img = GrayImage::new(100, 100).unwrap();
        draw_ring(&mut img, 50.0, 50.0, 30.0, 27.0, 255);
        let sum: f64 = img.as_slice().iter().map(|&v| v as f64 / 255.0).sum();
        let expected = std::f64::consts::PI * (30.0f64.powi(2) - 27.0f64.powi(2));
        assert!(
            (sum - expected).abs() < 0.03 * expected,
            "covered {sum}, expected {expected}"
        );
    }

    #[test]
    fn noise_is_deterministic_and_bounded() {
        for i in 0..200 {
            let x = i as f64 * 13.7;
            let y = i as f64 * 7.3;
            let a = value_noise(99, x, y, 64.0);
            let b = value_noise(99, x, y, 64.0);
            assert_eq!(a, b);
            assert!((-1.0..=1.0).contains(&a));
        }
    }

    #[test]
    fn fill_rect_clamps_to_image() {
        let mut img = GrayImage::new(10, 10).unwrap();
        fill_rect(&mut img, -5.0, -5.0, 100.0, 3.0, 200);
        assert_eq!(img.get(0, 0), 200);
        assert_eq!(img.get(9, 0), 200);
        assert_eq!(img.get(0, 9), 0);
    }
}

//! Difference-of-Gaussians keypoint detection.
//!
//! Extrema are located in a 3x3x3 neighborhood of the DoG stack, refined to
//! sub-pixel position by a quadratic fit, filtered by contrast and by
//! principal-curvature ratio, and given one or more dominant orientations
//! from a 36-bin gradient histogram.

use crate::error::{Error, Result};
use crate::image::GrayImage;

use super::pyramid::{FloatImage, ScaleSpace, SCALES_PER_OCTAVE};
use super::{Keypoint, KeypointSet, PyrCoord};

/// Reject refined extrema with |DoG| below this (intensities in [0, 1]).
const CONTRAST_THRESHOLD: f32 = 0.03;
/// Pre-filter before refinement.
const PRELIM_THRESHOLD: f32 = 0.5 * CONTRAST_THRESHOLD;
/// Reject edge-like points with principal-curvature ratio above this.
const EDGE_RATIO: f32 = 10.0;
/// Detection border in octave-local pixels.
const BORDER: usize = 5;
const ORI_BINS: usize = 36;
const ORI_SIGMA_FACTOR: f32 = 1.5;
const ORI_PEAK_RATIO: f32 = 0.8;
const MAX_REFINE_STEPS: usize = 5;

pub(crate) fn min_image_side() -> u32 {
    16
}

/// Detect DoG keypoints; at most `max_count` strongest are returned.
pub fn detect_keypoints(img: &GrayImage, max_count: usize) -> Result<KeypointSet> {
    let (w, h) = img.dimensions();
    if w < min_image_side() || h < min_image_side() {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            min_width: min_image_side(),
            min_height: min_image_side(),
        });
    }
    let ss = ScaleSpace::build(img);
    Ok(detect_in_scale_space(&ss, max_count))
}

pub(crate) fn detect_in_scale_space(ss: &ScaleSpace, max_count: usize) -> KeypointSet {
    let mut found: Vec<(Keypoint, PyrCoord)> = Vec::new();
    for o in 0..ss.octaves.len() {
        for layer in 1..=SCALES_PER_OCTAVE {
            scan_layer(ss, o, layer, &mut found);
        }
    }
    // Strongest first; position breaks ties so the order is reproducible.
    found.sort_by(|a, b| {
        b.0.response
            .partial_cmp(&a.0.response)
            .unwrap()
            .then(a.0.y.partial_cmp(&b.0.y).unwrap())
            .then(a.0.x.partial_cmp(&b.0.x).unwrap())
            .then(a.0.orientation.partial_cmp(&b.0.orientation).unwrap())
    });
    found.truncate(max_count);
    let mut set = KeypointSet::default();
    for (kp, pc) in found {
        set.keypoints.push(kp);
        set.pyr.push(pc);
    }
    set
}

fn scan_layer(ss: &ScaleSpace, octave: usize, layer: usize, out: &mut Vec<(Keypoint, PyrCoord)>) {
    let oct = &ss.octaves[octave];
    let dog = &oct.dogs;
    let (w, h) = (dog[layer].width, dog[layer].height);
    if w <= 2 * BORDER || h <= 2 * BORDER {
        return;
    }
    for y in BORDER..h - BORDER {
        for x in BORDER..w - BORDER {
            let v = dog[layer].get(x, y);
            if v.abs() < PRELIM_THRESHOLD {
                continue;
            }
            if !is_extremum(dog, layer, x, y, v) {
                continue;
            }
            if let Some((kp, pc)) = refine_and_orient(ss, octave, layer, x, y) {
                for oriented in kp {
                    out.push((oriented, pc));
                }
            }
        }
    }
}

fn is_extremum(dog: &[FloatImage], layer: usize, x: usize, y: usize, v: f32) -> bool {
    let positive = v > 0.0;
    for l in layer - 1..=layer + 1 {
        let img = &dog[l];
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if l == layer && dx == 0 && dy == 0 {
                    continue;
                }
                let n = img.get((x as i64 + dx) as usize, (y as i64 + dy) as usize);
                if positive {
                    if n >= v {
                        return false;
                    }
                } else if n <= v {
                    return false;
                }
            }
        }
    }
    true
}

struct Refined {
    x: f32,
    y: f32,
    layer: f32,
    contrast: f32,
    ix: usize,
    iy: usize,
    ilayer: usize,
}

fn refine_extremum(dog: &[FloatImage], layer: usize, x: usize, y: usize) -> Option<Refined> {
    let (w, h) = (dog[0].width, dog[0].height);
    let (mut x, mut y, mut layer) = (x, y, layer);
    for step in 0..=MAX_REFINE_STEPS {
        let d = &dog[layer];
        let dp = &dog[layer + 1];
        let dm = &dog[layer - 1];
        let v = d.get(x, y);

        let gx = 0.5 * (d.get(x + 1, y) - d.get(x - 1, y));
        let gy = 0.5 * (d.get(x, y + 1) - d.get(x, y - 1));
        let gs = 0.5 * (dp.get(x, y) - dm.get(x, y));

        let hxx = d.get(x + 1, y) + d.get(x - 1, y) - 2.0 * v;
        let hyy = d.get(x, y + 1) + d.get(x, y - 1) - 2.0 * v;
        let hss = dp.get(x, y) + dm.get(x, y) - 2.0 * v;
        let hxy = 0.25
            * (d.get(x + 1, y + 1) - d.get(x - 1, y + 1) - d.get(x + 1, y - 1)
                + d.get(x - 1, y - 1));
        let hxs = 0.25 * (dp.get(x + 1, y) - dp.get(x - 1, y) - dm.get(x + 1, y) + dm.get(x - 1, y));
        let hys = 0.25 * (dp.get(x, y + 1) - dp.get(x, y - 1) - dm.get(x, y + 1) + dm.get(x, y - 1));

        let det = hxx * (hyy * hss - hys * hys) - hxy * (hxy * hss - hys * hxs)
            + hxs * (hxy * hys - hyy * hxs);
        if det.abs() < 1e-20 {
            return None;
        }
        // Solve H * delta = -g by the adjugate.
        let inv = [
            [hyy * hss - hys * hys, hxs * hys - hxy * hss, hxy * hys - hxs * hyy],
            [hys * hxs - hxy * hss, hxx * hss - hxs * hxs, hxs * hxy - hxx * hys],
            [hxy * hys - hyy * hxs, hxy * hxs - hxx * hys, hxx * hyy - hxy * hxy],
        ];
        let dx = -(inv[0][0] * gx + inv[0][1] * gy + inv[0][2] * gs) / det;
        let dy = -(inv[1][0] * gx + inv[1][1] * gy + inv[1][2] * gs) / det;
        let dsv = -(inv[2][0] * gx + inv[2][1] * gy + inv[2][2] * gs) / det;

        if dx.abs() < 0.5 && dy.abs() < 0.5 && dsv.abs() < 0.5 {
            let contrast = v + 0.5 * (gx * dx + gy * dy + gs * dsv);
            if contrast.abs() < CONTRAST_THRESHOLD {
                return None;
            }
            // Principal-curvature (edge) test on the spatial Hessian.
            let tr = hxx + hyy;
            let det2 = hxx * hyy - hxy * hxy;
            let r = EDGE_RATIO;
            if det2 <= 0.0 || tr * tr * r >= (r + 1.0) * (r + 1.0) * det2 {
                return None;
            }
            return Some(Refined {
                x: x as f32 + dx,
                y: y as f32 + dy,
                layer: layer as f32 + dsv,
                contrast,
                ix: x,
                iy: y,
                ilayer: layer,
            });
        }
        if step == MAX_REFINE_STEPS {
            return None;
        }
        x = (x as i64 + dx.round() as i64).clamp(BORDER as i64, (w - BORDER - 1) as i64) as usize;
        y = (y as i64 + dy.round() as i64).clamp(BORDER as i64, (h - BORDER - 1) as i64) as usize;
        layer = (layer as i64 + dsv.round() as i64).clamp(1, SCALES_PER_OCTAVE as i64) as usize;
    }
    None
}

fn refine_and_orient(
    ss: &ScaleSpace,
    octave: usize,
    layer: usize,
    x: usize,
    y: usize,
) -> Option<(Vec<Keypoint>, PyrCoord)> {
    let oct = &ss.octaves[octave];
    let refined = refine_extremum(&oct.dogs, layer, x, y)?;

    let local_sigma = ScaleSpace::layer_sigma(refined.layer);
    let gauss = &oct.gaussians[refined.ilayer];
    let hist = orientation_histogram(gauss, refined.ix, refined.iy, local_sigma)?;
    let angles = dominant_orientations(&hist);

    let scale_factor = (1 << octave) as f64;
    let abs_sigma = ScaleSpace::absolute_sigma(octave, refined.layer) as f64;
    let kps = angles
        .into_iter()
        .map(|orientation| Keypoint {
            x: refined.x as f64 * scale_factor,
            y: refined.y as f64 * scale_factor,
            scale: abs_sigma,
            orientation,
            response: refined.contrast.abs(),
        })
        .collect();
    Some((
        kps,
        PyrCoord {
            octave: octave as u8,
            layer: refined.ilayer as u8,
        },
    ))
}

fn orientation_histogram(
    gauss: &FloatImage,
    x: usize,
    y: usize,
    local_sigma: f32,
) -> Option<[f32; ORI_BINS]> {
    let sigma = ORI_SIGMA_FACTOR * local_sigma;
    let radius = (3.0 * sigma).round() as i64;
    let (w, h) = (gauss.width as i64, gauss.height as i64);
    let mut hist = [0.0f32; ORI_BINS];
    let denom = 2.0 * sigma * sigma;
    let mut any = false;
    for dy in -radius..=radius {
        let py = y as i64 + dy;
        if py < 1 || py >= h - 1 {
            continue;
        }
        for dx in -radius..=radius {
            let px = x as i64 + dx;
            if px < 1 || px >= w - 1 {
                continue;
            }
            let gx = gauss.get(px as usize + 1, py as usize) - gauss.get(px as usize - 1, py as usize);
            let gy = gauss.get(px as usize, py as usize + 1) - gauss.get(px as usize, py as usize - 1);
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let weight = (-((dx * dx + dy * dy) as f32) / denom).exp();
            let angle = gy.atan2(gx);
            let mut bin =
                (angle / std::f32::consts::TAU * ORI_BINS as f32).round() as i64 % ORI_BINS as i64;
            if bin < 0 {
                bin += ORI_BINS as i64;
            }
            hist[bin as usize] += weight * mag;
            any = true;
        }
    }
    if !any {
        return None;
    }
    // Circular box smoothing, applied a few times.
    for _ in 0..3 {
        let prev = hist;
        for i in 0..ORI_BINS {
            let l = prev[(i + ORI_BINS - 1) % ORI_BINS];
            let r = prev[(i + 1) % ORI_BINS];
            hist[i] = (l + prev[i] + r) / 3.0;
        }
    }
    Some(hist)
}

fn dominant_orientations(hist: &[f32; ORI_BINS]) -> Vec<f64> {
    let max = hist.iter().copied().fold(0.0f32, f32::max);
    if max <= 0.0 {
        return Vec::new();
    }
    let mut angles = Vec::new();
    for i in 0..ORI_BINS {
        let l = hist[(i + ORI_BINS - 1) % ORI_BINS];
        let r = hist[(i + 1) % ORI_BINS];
        if hist[i] > l && hist[i] > r && hist[i] >= ORI_PEAK_RATIO * max {
            // Parabolic interpolation of the peak bin.
            let offset = 0.5 * (l - r) / (l - 2.0 * hist[i] + r);
            let bin = i as f32 + offset;
            let mut angle = bin / ORI_BINS as f32 * std::f32::consts::TAU;
            if angle < 0.0 {
                angle += std::f32::consts::TAU;
            } else if angle >= std::f32::consts::TAU {
                angle -= std::f32::consts::TAU;
            }
            angles.push(angle as f64);
        }
    }
    angles
}

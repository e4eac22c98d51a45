//! 128-bin gradient-histogram descriptors.
//!
//! A 4x4 spatial grid of 8-bin orientation histograms is accumulated from
//! Gaussian-weighted gradients around each keypoint, rotated into the
//! keypoint frame, then L2-normalized, clipped at 0.2, and renormalized.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::image::GrayImage;

use super::pyramid::ScaleSpace;
use super::{Descriptor, DescriptorSet, KeypointSet, DESCRIPTOR_LEN};

const GRID: usize = 4;
const ORI_BINS: usize = 8;
/// Histogram cell width in units of the keypoint's octave-local blur.
const CELL_SIGMA_FACTOR: f32 = 3.0;
const CLIP: f32 = 0.2;

/// Magic prefix of the descriptor-blob fixture format.
pub const BLOB_MAGIC: &[u8; 4] = b"GSD1";

/// Compute descriptors for `kps`, which must originate from `img`.
///
/// Keypoints whose sampling window cannot be anchored inside the image are
/// dropped; `DescriptorSet::keypoint_index` maps each descriptor back to its
/// keypoint and `dropped` counts the casualties.
pub fn compute_descriptors(img: &GrayImage, kps: &KeypointSet) -> DescriptorSet {
    let ss = ScaleSpace::build(img);
    describe_in_scale_space(&ss, kps)
}

pub(crate) fn describe_in_scale_space(ss: &ScaleSpace, kps: &KeypointSet) -> DescriptorSet {
    let mut set = DescriptorSet::default();
    for (i, (kp, pc)) in kps.keypoints.iter().zip(&kps.pyr).enumerate() {
        match describe_one(ss, kp, pc.octave as usize, pc.layer as usize) {
            Some(desc) => {
                set.descriptors.push(desc);
                set.keypoint_index.push(i);
            }
            None => set.dropped += 1,
        }
    }
    set
}

fn describe_one(
    ss: &ScaleSpace,
    kp: &super::Keypoint,
    octave: usize,
    layer: usize,
) -> Option<Descriptor> {
    let gauss = &ss.octaves[octave].gaussians[layer];
    let (w, h) = (gauss.width as i64, gauss.height as i64);
    let scale_factor = (1u32 << octave) as f64;
    let cx = (kp.x / scale_factor) as f32;
    let cy = (kp.y / scale_factor) as f32;
    let ix = cx.round() as i64;
    let iy = cy.round() as i64;
    if ix < 1 || iy < 1 || ix >= w - 1 || iy >= h - 1 {
        return None;
    }

    let local_sigma = (kp.scale / scale_factor) as f32;
    let cell = CELL_SIGMA_FACTOR * local_sigma;
    let radius = (cell * (GRID as f32 + 1.0) * std::f32::consts::SQRT_2 / 2.0).round() as i64;
    let (sin_t, cos_t) = (kp.orientation as f32).sin_cos();
    let weight_denom = 2.0 * (0.5 * GRID as f32 * cell) * (0.5 * GRID as f32 * cell);

    let mut hist = [0.0f32; GRID * GRID * ORI_BINS];
    for dy in -radius..=radius {
        let py = iy + dy;
        if py < 1 || py >= h - 1 {
            continue;
        }
        for dx in -radius..=radius {
            let px = ix + dx;
            if px < 1 || px >= w - 1 {
                continue;
            }
            // Offset rotated into the keypoint frame, in cell units.
            let fx = px as f32 - cx;
            let fy = py as f32 - cy;
            let rx = (cos_t * fx + sin_t * fy) / cell;
            let ry = (-sin_t * fx + cos_t * fy) / cell;
            let cbin = rx + GRID as f32 / 2.0 - 0.5;
            let rbin = ry + GRID as f32 / 2.0 - 0.5;
            if !(-1.0 < rbin && rbin < GRID as f32 && -1.0 < cbin && cbin < GRID as f32) {
                continue;
            }
            let gx = gauss.get(px as usize + 1, py as usize) - gauss.get(px as usize - 1, py as usize);
            let gy = gauss.get(px as usize, py as usize + 1) - gauss.get(px as usize, py as usize - 1);
            let mag = (gx * gx + gy * gy).sqrt();
            if mag == 0.0 {
                continue;
            }
            let weight = (-(fx * fx + fy * fy) / weight_denom).exp();
            let mut angle = gy.atan2(gx) - kp.orientation as f32;
            while angle < 0.0 {
                angle += std::f32::consts::TAU;
            }
            while angle >= std::f32::consts::TAU {
                angle -= std::f32::consts::TAU;
            }
            let obin = angle / std::f32::consts::TAU * ORI_BINS as f32;
            trilinear_accumulate(&mut hist, rbin, cbin, obin, weight * mag);
        }
    }

    let mut v = [0.0f32; DESCRIPTOR_LEN];
    v.copy_from_slice(&hist);
    let norm = v.iter().map(|x| x * x).sum::<f32>().sqrt();
    if norm <= 1e-12 {
        return None;
    }
    for x in &mut v {
        *x /= norm;
    }
    if clip_renormalize(&mut v) {
        Some(Descriptor(v))
    } else {
        None
    }
}

/// Clip at [`CLIP`] and renormalize so *both* the unit norm and the clip
/// bound hold: components above the bound are pinned at it and the rest are
/// scaled to make up the norm (the fixpoint of repeated clip-renormalize).
///
/// Returns false when no such vector exists, i.e. fewer than
/// `1 / CLIP^2 = 25` bins are populated; such nearly-unidirectional patches
/// carry too little structure to describe and are dropped.
fn clip_renormalize(v: &mut [f32; DESCRIPTOR_LEN]) -> bool {
    if v.iter().all(|&x| x <= CLIP) {
        return true;
    }
    let mut sorted: Vec<f32> = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    // Suffix sums of squares: tail[m] = sum of sorted[m..]^2.
    let mut tail = vec![0.0f64; sorted.len() + 1];
    for m in (0..sorted.len()).rev() {
        tail[m] = tail[m + 1] + (sorted[m] as f64).powi(2);
    }
    let c = CLIP as f64;
    for m in 0..sorted.len() {
        // Pin the m largest at CLIP, scale the rest by s.
        let budget = 1.0 - m as f64 * c * c;
        if budget <= 0.0 || tail[m] <= 0.0 {
            return false;
        }
        let s = (budget / tail[m]).sqrt();
        let top_ok = m == 0 || s * sorted[m - 1] as f64 >= c;
        let rest_ok = s * sorted[m] as f64 <= c;
        if top_ok && rest_ok {
            for x in v.iter_mut() {
                *x = ((*x as f64 * s).min(c)) as f32;
            }
            return true;
        }
    }
    false
}

fn trilinear_accumulate(hist: &mut [f32], rbin: f32, cbin: f32, obin: f32, value: f32) {
    let r0 = rbin.floor();
    let c0 = cbin.floor();
    let o0 = obin.floor();
    let dr = rbin - r0;
    let dc = cbin - c0;
    let do_ = obin - o0;
    let r0 = r0 as i64;
    let c0 = c0 as i64;
    let o0 = o0 as i64;
    for (ri, rw) in [(r0, 1.0 - dr), (r0 + 1, dr)] {
        if ri < 0 || ri >= GRID as i64 {
            continue;
        }
        for (ci, cw) in [(c0, 1.0 - dc), (c0 + 1, dc)] {
            if ci < 0 || ci >= GRID as i64 {
                continue;
            }
            for (oi, ow) in [(o0, 1.0 - do_), (o0 + 1, do_)] {
                let oi = ((oi % ORI_BINS as i64) + ORI_BINS as i64) % ORI_BINS as i64;
                let idx = (ri as usize * GRID + ci as usize) * ORI_BINS + oi as usize;
                hist[idx] += value * rw * cw * ow;
            }
        }
    }
}

/// Write descriptors as a little-endian blob: magic `GSD1`, `u32` count,
/// then 128 `f32` values per record.
pub fn write_descriptor_blob(set: &DescriptorSet, mut w: impl Write) -> Result<()> {
    w.write_all(BLOB_MAGIC)?;
    w.write_all(&(set.descriptors.len() as u32).to_le_bytes())?;
    for d in &set.descriptors {
        for v in &d.0 {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Inverse of [`write_descriptor_blob`]. Keypoint indices are assigned
/// sequentially since the blob stores vectors only.
pub fn read_descriptor_blob(mut r: impl Read) -> Result<DescriptorSet> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != BLOB_MAGIC {
        return Err(Error::Blob(format!("bad magic {magic:?}")));
    }
    let mut count_buf = [0u8; 4];
    r.read_exact(&mut count_buf)?;
    let count = u32::from_le_bytes(count_buf) as usize;
    let mut set = DescriptorSet::default();
    let mut buf = [0u8; 4];
    for i in 0..count {
        let mut v = [0.0f32; DESCRIPTOR_LEN];
        for x in &mut v {
            r.read_exact(&mut buf)?;
            *x = f32::from_le_bytes(buf);
        }
        set.descriptors.push(Descriptor(v));
        set.keypoint_index.push(i);
    }
    Ok(set)
}

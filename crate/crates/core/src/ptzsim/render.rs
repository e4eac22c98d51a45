//! View rendering: the wall texture warped through the camera's plane
//! homography.
//!
//! At low zoom one view pixel integrates many wall pixels, so sampling the
//! full-resolution texture directly would alias. The renderer picks the
//! box-filtered mip level just above the minification factor and stratifies
//! a few bilinear samples per pixel over the remaining gap.

use rayon::prelude::*;

use crate::geometry::Homography;
use crate::image::GrayImage;

use super::scene::SceneSpec;
use super::{CameraConfig, PtzState, RobotPose};

/// Exact scene-pixel -> view-pixel homography used by [`render_view`].
pub fn view_homography(
    scene: &SceneSpec,
    pose: &RobotPose,
    ptz: &PtzState,
    cam: &CameraConfig,
) -> Homography {
    scene.scene_to_view(pose, ptz, cam)
}

/// Render the camera view for a pose and head state. Parts of the view that
/// fall outside the wall texture are black.
pub fn render_view(
    scene: &SceneSpec,
    pose: &RobotPose,
    ptz: &PtzState,
    cam: &CameraConfig,
) -> GrayImage {
    let h_fwd = view_homography(scene, pose, ptz, cam);
    let inv = match h_fwd.inverse() {
        Ok(inv) => inv,
        // Degenerate camera state: nothing sensible to show.
        Err(_) => return GrayImage::new(cam.view_w, cam.view_h).expect("view dims"),
    };

    // Minification factor at the view center: wall pixels per view pixel.
    let (cx, cy) = cam.principal_point();
    let p0 = inv.apply(cx, cy);
    let px = inv.apply(cx + 1.0, cy);
    let py = inv.apply(cx, cy + 1.0);
    let jx = (px.0 - p0.0, px.1 - p0.1);
    let jy = (py.0 - p0.0, py.1 - p0.1);
    let det = (jx.0 * jy.1 - jx.1 * jy.0).abs();
    let minification = det.sqrt().max(1e-9);

    // Mip level covering most of the minification; never above what exists.
    let mut level = 0usize;
    while level < scene.mips.len() && (1u32 << (level + 1)) as f64 <= minification {
        level += 1;
    }
    let (texture, tex_scale) = if level == 0 {
        (&scene.wall, 1.0)
    } else {
        (&scene.mips[level - 1], (1u32 << level) as f64)
    };
    // Residual minification on the chosen level decides the supersampling.
    let residual = minification / tex_scale;
    let ss = (residual.ceil() as u32).clamp(1, 3);

    let m = *inv.matrix();
    let w = cam.view_w;
    let view_h = cam.view_h;
    let mut out = GrayImage::new(w, view_h).expect("view dims");
    let rows: Vec<Vec<u8>> = (0..view_h)
        .into_par_iter()
        .map(|y| {
            let mut row = vec![0u8; w as usize];
            for x in 0..w {
                let mut acc = 0.0f64;
                for sy in 0..ss {
                    for sx in 0..ss {
                        let fx = x as f64 + (sx as f64 + 0.5) / ss as f64 - 0.5;
                        let fy = y as f64 + (sy as f64 + 0.5) / ss as f64 - 0.5;
                        let u = m[0][0] * fx + m[0][1] * fy + m[0][2];
                        let v = m[1][0] * fx + m[1][1] * fy + m[1][2];
                        let d = m[2][0] * fx + m[2][1] * fy + m[2][2];
                        let (sx_w, sy_w) = (u / d, v / d);
                        // Block (0,0) of level L covers scene [0, 2^L)^2, so
                        // its center sits at scene (2^(L-1) - 0.5).
                        let tx = (sx_w + 0.5) / tex_scale - 0.5;
                        let ty = (sy_w + 0.5) / tex_scale - 0.5;
                        acc += texture.bilinear_sample(tx, ty);
                    }
                }
                row[x as usize] = (acc / (ss * ss) as f64).round().clamp(0.0, 255.0) as u8;
            }
            row
        })
        .collect();
    for (y, row) in rows.into_iter().enumerate() {
        for (x, v) in row.into_iter().enumerate() {
            out.set(x as u32, y as u32, v);
        }
    }
    out
}

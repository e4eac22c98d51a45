//! Robust transform estimation from point correspondences.
//!
//! Standard RANSAC: sample a minimal set, fit, count inliers by forward
//! reprojection error, keep the best consensus, then refit on all inliers by
//! least squares. Similarity models are embedded as homographies so callers
//! handle one transform type.

use nalgebra::{DMatrix, Matrix4, Vector4};
use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::Homography;

/// Which transform family to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformModel {
    /// Rotation + uniform scale + translation (minimal sample: 2 pairs).
    Similarity,
    /// Full projective transform (minimal sample: 4 pairs).
    Homography,
}

impl TransformModel {
    fn minimal_samples(self) -> usize {
        match self {
            TransformModel::Similarity => 2,
            TransformModel::Homography => 4,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RansacParams {
    /// Reprojection error below which a correspondence counts as an inlier.
    pub inlier_px: f64,
    pub iterations: u32,
    /// Fewer inliers than this is a failed estimate.
    pub min_inliers: usize,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self {
            inlier_px: 3.0,
            iterations: 1000,
            min_inliers: 8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RansacResult {
    pub transform: Homography,
    /// Parallel to the input correspondences.
    pub inliers: Vec<bool>,
    pub inlier_count: usize,
}

/// Estimate a transform mapping `src[i]` onto `dst[i]`.
///
/// The generator is caller-supplied so every estimate is reproducible.
pub fn estimate_transform_ransac(
    src: &[(f64, f64)],
    dst: &[(f64, f64)],
    model: TransformModel,
    params: &RansacParams,
    rng: &mut impl Rng,
) -> Result<RansacResult> {
    assert_eq!(src.len(), dst.len());
    let n = src.len();
    let k = model.minimal_samples();
    if n < k || n < params.min_inliers.min(k) {
        return Err(Error::NoRobustTransform {
            inliers: 0,
            min_inliers: params.min_inliers,
        });
    }

    let mut best_count = 0usize;
    let mut best_model: Option<Homography> = None;
    let mut sample = vec![0usize; k];
    for _ in 0..params.iterations {
        draw_distinct(rng, n, &mut sample);
        let s: Vec<(f64, f64)> = sample.iter().map(|&i| src[i]).collect();
        let d: Vec<(f64, f64)> = sample.iter().map(|&i| dst[i]).collect();
        if is_degenerate(model, &s) || is_degenerate(model, &d) {
            continue;
        }
        let h = match fit(model, &s, &d) {
            Some(h) => h,
            None => continue,
        };
        let count = count_inliers(&h, src, dst, params.inlier_px);
        if count > best_count {
            best_count = count;
            best_model = Some(h);
        }
    }

    let (h, count) = match best_model {
        Some(h) if best_count >= params.min_inliers => (h, best_count),
        _ => {
            return Err(Error::NoRobustTransform {
                inliers: best_count,
                min_inliers: params.min_inliers,
            })
        }
    };

    // Refit on the consensus set; keep the refit only if it does not lose
    // inliers to numerical drift.
    let mask = inlier_mask(&h, src, dst, params.inlier_px);
    let s: Vec<(f64, f64)> = mask_select(src, &mask);
    let d: Vec<(f64, f64)> = mask_select(dst, &mask);
    if let Some(refit) = fit(model, &s, &d) {
        let refit_mask = inlier_mask(&refit, src, dst, params.inlier_px);
        let refit_count = refit_mask.iter().filter(|&&b| b).count();
        if refit_count >= count {
            return Ok(RansacResult {
                transform: refit,
                inliers: refit_mask,
                inlier_count: refit_count,
            });
        }
    }
    Ok(RansacResult {
        transform: h,
        inliers: mask,
        inlier_count: count,
    })
}

fn draw_distinct(rng: &mut impl Rng, n: usize, out: &mut [usize]) {
    let k = out.len();
    let mut filled = 0;
    while filled < k {
        let candidate = rng.gen_range(0..n);
        if !out[..filled].contains(&candidate) {
            out[filled] = candidate;
            filled += 1;
        }
    }
}

fn is_degenerate(model: TransformModel, pts: &[(f64, f64)]) -> bool {
    match model {
        TransformModel::Similarity => {
            let dx = pts[0].0 - pts[1].0;
            let dy = pts[0].1 - pts[1].1;
            dx * dx + dy * dy < 1e-12
        }
        TransformModel::Homography => {
            // Any three of the four collinear makes the DLT rank-deficient.
            for skip in 0..4 {
                let tri: Vec<(f64, f64)> = (0..4).filter(|&i| i != skip).map(|i| pts[i]).collect();
                let area = (tri[1].0 - tri[0].0) * (tri[2].1 - tri[0].1)
                    - (tri[2].0 - tri[0].0) * (tri[1].1 - tri[0].1);
                if area.abs() < 1e-9 {
                    return true;
                }
            }
            false
        }
    }
}

fn fit(model: TransformModel, src: &[(f64, f64)], dst: &[(f64, f64)]) -> Option<Homography> {
    let h = match model {
        TransformModel::Similarity => fit_similarity(src, dst)?,
        TransformModel::Homography => fit_homography_dlt(src, dst)?,
    };
    if h.is_invertible() {
        Some(h)
    } else {
        None
    }
}

fn count_inliers(h: &Homography, src: &[(f64, f64)], dst: &[(f64, f64)], tol: f64) -> usize {
    src.iter()
        .zip(dst)
        .filter(|(s, d)| reprojection_error(h, **s, **d) <= tol)
        .count()
}

fn inlier_mask(h: &Homography, src: &[(f64, f64)], dst: &[(f64, f64)], tol: f64) -> Vec<bool> {
    src.iter()
        .zip(dst)
        .map(|(s, d)| reprojection_error(h, *s, *d) <= tol)
        .collect()
}

fn reprojection_error(h: &Homography, s: (f64, f64), d: (f64, f64)) -> f64 {
    let (u, v) = h.apply(s.0, s.1);
    if !u.is_finite() || !v.is_finite() {
        return f64::INFINITY;
    }
    ((u - d.0).powi(2) + (v - d.1).powi(2)).sqrt()
}

fn mask_select(pts: &[(f64, f64)], mask: &[bool]) -> Vec<(f64, f64)> {
    pts.iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(p, _)| *p)
        .collect()
}

/// Least-squares similarity: solves for (a, b, tx, ty) in
/// `u = a*x - b*y + tx`, `v = b*x + a*y + ty` over all pairs.
fn fit_similarity(src: &[(f64, f64)], dst: &[(f64, f64)]) -> Option<Homography> {
    let n = src.len() as f64;
    let (mut sxx, mut sx, mut sy) = (0.0, 0.0, 0.0);
    let (mut su, mut sv) = (0.0, 0.0);
    let (mut sxu, mut sxv) = (0.0, 0.0);
    for ((x, y), (u, v)) in src.iter().zip(dst) {
        sxx += x * x + y * y;
        sx += x;
        sy += y;
        su += u;
        sv += v;
        sxu += x * u + y * v;
        sxv += x * v - y * u;
    }
    let m = Matrix4::new(
        sxx, 0.0, sx, sy, //
        0.0, sxx, -sy, sx, //
        sx, -sy, n, 0.0, //
        sy, sx, 0.0, n,
    );
    let rhs = Vector4::new(sxu, sxv, su, sv);
    let sol = m.lu().solve(&rhs)?;
    let (a, b, tx, ty) = (sol[0], sol[1], sol[2], sol[3]);
    if !(a.is_finite() && b.is_finite() && tx.is_finite() && ty.is_finite()) {
        return None;
    }
    Some(Homography::from_matrix([
        [a, -b, tx],
        [b, a, ty],
        [0.0, 0.0, 1.0],
    ]))
}

/// Normalized DLT homography fit for 4 or more pairs.
fn fit_homography_dlt(src: &[(f64, f64)], dst: &[(f64, f64)]) -> Option<Homography> {
    let n = src.len();
    if n < 4 {
        return None;
    }
    let (src_n, t_src) = normalize_points(src)?;
    let (dst_n, t_dst) = normalize_points(dst)?;

    let rows = (2 * n).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, ((x, y), (u, v))) in src_n.iter().zip(&dst_n).enumerate() {
        let r0 = 2 * i;
        let r1 = 2 * i + 1;
        a[(r0, 0)] = -x;
        a[(r0, 1)] = -y;
        a[(r0, 2)] = -1.0;
        a[(r0, 6)] = u * x;
        a[(r0, 7)] = u * y;
        a[(r0, 8)] = *u;
        a[(r1, 3)] = -x;
        a[(r1, 4)] = -y;
        a[(r1, 5)] = -1.0;
        a[(r1, 6)] = v * x;
        a[(r1, 7)] = v * y;
        a[(r1, 8)] = *v;
    }
    let svd = a.svd(false, true);
    let v_t = svd.v_t?;
    let h_vec = v_t.row(v_t.nrows() - 1);
    let h_n = Homography::from_matrix([
        [h_vec[0], h_vec[1], h_vec[2]],
        [h_vec[3], h_vec[4], h_vec[5]],
        [h_vec[6], h_vec[7], h_vec[8]],
    ]);
    // Denormalize: H = T_dst^-1 * H_n * T_src.
    let h = t_dst.inverse().ok()?.compose(&h_n).compose(&t_src);
    Some(h.normalized())
}

/// Hartley normalization: zero centroid, mean distance sqrt(2).
fn normalize_points(pts: &[(f64, f64)]) -> Option<(Vec<(f64, f64)>, Homography)> {
    let n = pts.len() as f64;
    let cx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let cy = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let mean_dist = pts
        .iter()
        .map(|p| ((p.0 - cx).powi(2) + (p.1 - cy).powi(2)).sqrt())
        .sum::<f64>()
        / n;
    if mean_dist < 1e-12 {
        return None;
    }
    let s = std::f64::consts::SQRT_2 / mean_dist;
    let t = Homography::from_matrix([[s, 0.0, -s * cx], [0.0, s, -s * cy], [0.0, 0.0, 1.0]]);
    let normed = pts.iter().map(|p| ((p.0 - cx) * s, (p.1 - cy) * s)).collect();
    Some((normed, t))
}

//! Simulated robot + pan-tilt-zoom camera over a planar scene.
//!
//! Geometry: the wall is the plane `z = 0` in world coordinates (X right,
//! Y down, Z from the camera into the wall, all in meters). The robot's
//! camera sits at `(pose.x, pose.y, -standoff)`; `yaw` rotates the body
//! about the vertical axis, and the PTZ head adds `pan` about the same axis
//! plus `tilt` about the camera's horizontal axis. A pinhole with focal
//! length `f0 * zoom` projects wall points into the view, so every rendered
//! view is an exact homography of the wall texture.
//!
//! Scene generation, rendering, and pose noise all flow through explicit
//! seeds: an experiment is a pure function of its configuration.

mod raster;
mod render;
mod scene;

pub use render::{render_view, view_homography};
pub use scene::{
    generate_scene, load_scene, render_reference_meter, save_scene, GroundTruth, MeterPlacement,
    MeterShape, SceneConfig, SceneSpec, RECT_ASPECT, SCENE_SCHEMA,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::geometry::Homography;
use crate::image::GrayImage;

/// Pan/tilt/zoom state of the camera head.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PtzState {
    /// Radians; positive pans toward +X (right).
    pub pan: f64,
    /// Radians; positive tilts toward -Y (up).
    pub tilt: f64,
    /// Focal multiplier, >= 1.
    pub zoom: f64,
}

impl Default for PtzState {
    fn default() -> Self {
        Self {
            pan: 0.0,
            tilt: 0.0,
            zoom: 1.0,
        }
    }
}

/// Robot pose relative to the wall plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobotPose {
    /// Meters, wall-plane coordinates of the camera's foot point.
    pub x: f64,
    pub y: f64,
    /// Radians about the vertical axis.
    pub yaw: f64,
    /// Distance to the wall, meters, > 0.
    pub standoff: f64,
}

/// Camera geometry and mechanical limits. One instance describes both the
/// simulated camera and what a hardware adapter would need to report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CameraConfig {
    pub view_w: u32,
    pub view_h: u32,
    /// Horizontal field of view at zoom 1, degrees.
    pub hfov_deg: f64,
    pub zoom_max: f64,
    pub pan_limit_deg: f64,
    pub tilt_limit_deg: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            view_w: 640,
            view_h: 480,
            hfov_deg: 60.0,
            zoom_max: 30.0,
            pan_limit_deg: 60.0,
            tilt_limit_deg: 30.0,
        }
    }
}

impl CameraConfig {
    /// Focal length in pixels at zoom 1.
    pub fn f0(&self) -> f64 {
        (self.view_w as f64 / 2.0) / (self.hfov_deg.to_radians() / 2.0).tan()
    }

    /// Principal point (view center).
    pub fn principal_point(&self) -> (f64, f64) {
        (
            (self.view_w as f64 - 1.0) / 2.0,
            (self.view_h as f64 - 1.0) / 2.0,
        )
    }

    pub fn clamp(&self, ptz: PtzState) -> PtzState {
        let pan_lim = self.pan_limit_deg.to_radians();
        let tilt_lim = self.tilt_limit_deg.to_radians();
        PtzState {
            pan: ptz.pan.clamp(-pan_lim, pan_lim),
            tilt: ptz.tilt.clamp(-tilt_lim, tilt_lim),
            zoom: ptz.zoom.clamp(1.0, self.zoom_max),
        }
    }
}

type Mat3 = [[f64; 3]; 3];

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut m = [[0.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    m
}

fn transpose(a: &Mat3) -> Mat3 {
    let mut m = [[0.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[j][i];
        }
    }
    m
}

fn mat_apply(a: &Mat3, v: [f64; 3]) -> [f64; 3] {
    [
        a[0][0] * v[0] + a[0][1] * v[1] + a[0][2] * v[2],
        a[1][0] * v[0] + a[1][1] * v[1] + a[1][2] * v[2],
        a[2][0] * v[0] + a[2][1] * v[1] + a[2][2] * v[2],
    ]
}

fn rot_y(theta: f64) -> Mat3 {
    let (s, c) = theta.sin_cos();
    [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]]
}

fn rot_x(theta: f64) -> Mat3 {
    let (s, c) = theta.sin_cos();
    [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]]
}

/// Camera-to-world rotation for a pose + head state.
fn camera_rotation(yaw: f64, ptz: &PtzState) -> Mat3 {
    mat_mul(&rot_y(yaw + ptz.pan), &rot_x(ptz.tilt))
}

/// Homography mapping wall points in **meters** to view pixels.
pub fn wall_to_view_homography(
    pose: &RobotPose,
    ptz: &PtzState,
    cam: &CameraConfig,
) -> Homography {
    let r_wc = camera_rotation(pose.yaw, ptz);
    let r_cw = transpose(&r_wc);
    let c = [pose.x, pose.y, -pose.standoff];
    let t = mat_apply(&r_cw, c).map(|v| -v);
    let f = cam.f0() * ptz.zoom;
    let (cx, cy) = cam.principal_point();
    // K * [r1 r2 t] where r1, r2 are the first two columns of R_cw.
    let p = [
        [r_cw[0][0], r_cw[0][1], t[0]],
        [r_cw[1][0], r_cw[1][1], t[1]],
        [r_cw[2][0], r_cw[2][1], t[2]],
    ];
    let k = [[f, 0.0, cx], [0.0, f, cy], [0.0, 0.0, 1.0]];
    Homography::from_matrix(mat_mul(&k, &p))
}

/// Depth (camera-frame z, meters) of a wall point; non-positive means the
/// point is behind the camera.
pub fn wall_point_depth(pose: &RobotPose, ptz: &PtzState, wall_x_m: f64, wall_y_m: f64) -> f64 {
    let r_cw = transpose(&camera_rotation(pose.yaw, ptz));
    let d = [wall_x_m - pose.x, wall_y_m - pose.y, pose.standoff];
    mat_apply(&r_cw, d)[2]
}

/// View-to-view homography induced by a pure PTZ change (the camera only
/// rotates and rescales about its center, so this needs no scene knowledge).
pub fn relative_view_homography(cam: &CameraConfig, from: &PtzState, to: &PtzState) -> Homography {
    let (cx, cy) = cam.principal_point();
    let f_from = cam.f0() * from.zoom;
    let f_to = cam.f0() * to.zoom;
    let k_to = [[f_to, 0.0, cx], [0.0, f_to, cy], [0.0, 0.0, 1.0]];
    let k_from_inv = [
        [1.0 / f_from, 0.0, -cx / f_from],
        [0.0, 1.0 / f_from, -cy / f_from],
        [0.0, 0.0, 1.0],
    ];
    // Head rotations relative to the (shared, unknown) body yaw.
    let r_from = mat_mul(&rot_y(from.pan), &rot_x(from.tilt));
    let r_to = mat_mul(&rot_y(to.pan), &rot_x(to.tilt));
    let r = mat_mul(&transpose(&r_to), &r_from);
    Homography::from_matrix(mat_mul(&k_to, &mat_mul(&r, &k_from_inv)))
}

/// Retarget the head so the ray through `target` (view pixels) becomes the
/// optical axis, and multiply zoom by `zoom_factor`. The result is clamped
/// to the camera's mechanical limits.
pub fn point_zoom_command(
    target: (f64, f64),
    current: &PtzState,
    zoom_factor: f64,
    cam: &CameraConfig,
) -> PtzState {
    assert!(zoom_factor > 0.0);
    let f = cam.f0() * current.zoom;
    let (cx, cy) = cam.principal_point();
    let d_cam = [(target.0 - cx) / f, (target.1 - cy) / f, 1.0];
    // Ray in the robot body frame (yaw-independent).
    let r_head = mat_mul(&rot_y(current.pan), &rot_x(current.tilt));
    let d = mat_apply(&r_head, d_cam);
    let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    let dn = [d[0] / n, d[1] / n, d[2] / n];
    let tilt = (-dn[1]).asin();
    let pan = dn[0].atan2(dn[2]);
    cam.clamp(PtzState {
        pan,
        tilt,
        zoom: current.zoom * zoom_factor,
    })
}

/// Gaussian offsets on x, y, and yaw from a seeded generator; standoff is
/// left untouched. Zero sigmas return the nominal pose bit-for-bit.
pub fn perturb_pose(
    nominal: &RobotPose,
    seed: u64,
    sigma_xy_m: f64,
    sigma_yaw_rad: f64,
) -> RobotPose {
    assert!(sigma_xy_m >= 0.0 && sigma_yaw_rad >= 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |sigma: f64| -> f64 {
        if sigma > 0.0 {
            Normal::new(0.0, sigma).unwrap().sample(&mut rng)
        } else {
            0.0
        }
    };
    let dx = draw(sigma_xy_m);
    let dy = draw(sigma_xy_m);
    let dyaw = draw(sigma_yaw_rad);
    RobotPose {
        x: nominal.x + dx,
        y: nominal.y + dy,
        yaw: nominal.yaw + dyaw,
        standoff: nominal.standoff,
    }
}

/// A controllable camera: what the detectors drive. Implemented by
/// [`SimulatedCamera`]; a hardware adapter would expose the same surface.
pub trait Camera {
    fn config(&self) -> &CameraConfig;
    fn state(&self) -> PtzState;
    /// Move the head; out-of-range values are clamped.
    fn command(&mut self, ptz: PtzState);
    /// Capture a view at the current state.
    fn capture(&self) -> GrayImage;
}

/// Camera rendering a [`SceneSpec`] from a fixed (true) robot pose.
pub struct SimulatedCamera<'a> {
    scene: &'a SceneSpec,
    pose: RobotPose,
    cam: CameraConfig,
    state: PtzState,
}

impl<'a> SimulatedCamera<'a> {
    pub fn new(scene: &'a SceneSpec, pose: RobotPose, cam: CameraConfig) -> Self {
        let state = cam.clamp(PtzState::default());
        Self {
            scene,
            pose,
            cam,
            state,
        }
    }

    pub fn pose(&self) -> &RobotPose {
        &self.pose
    }
}

impl Camera for SimulatedCamera<'_> {
    fn config(&self) -> &CameraConfig {
        &self.cam
    }

    fn state(&self) -> PtzState {
        self.state
    }

    fn command(&mut self, ptz: PtzState) {
        self.state = self.cam.clamp(ptz);
    }

    fn capture(&self) -> GrayImage {
        render_view(self.scene, &self.pose, &self.state, &self.cam)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cam() -> CameraConfig {
        CameraConfig::default()
    }

    #[test]
    fn f0_matches_fov() {
        // 640 px wide at 60 degrees: f0 = 320 / tan(30 deg).
        let f0 = cam().f0();
        assert!((f0 - 320.0 / (30.0f64.to_radians()).tan()).abs() < 1e-9);
    }

    #[test]
    fn nominal_wall_homography_is_scale_translation() {
        let pose = RobotPose {
            x: 2.0,
            y: 1.0,
            yaw: 0.0,
            standoff: 5.0,
        };
        let h = wall_to_view_homography(&pose, &PtzState::default(), &cam());
        let m = h.normalized();
        let m = m.matrix();
        assert!(m[2][0].abs() < 1e-9 && m[2][1].abs() < 1e-9);
        assert!(m[0][1].abs() < 1e-9 && m[1][0].abs() < 1e-9);
        // Scale = f0 / standoff.
        assert!((m[0][0] - cam().f0() / 5.0).abs() < 1e-9);
    }

    #[test]
    fn doubling_zoom_doubles_scale() {
        let pose = RobotPose {
            x: 0.0,
            y: 0.0,
            yaw: 0.1,
            standoff: 5.0,
        };
        let z1 = PtzState {
            zoom: 2.0,
            ..Default::default()
        };
        let z2 = PtzState {
            zoom: 4.0,
            ..Default::default()
        };
        let h1 = wall_to_view_homography(&pose, &z1, &cam()).normalized();
        let h2 = wall_to_view_homography(&pose, &z2, &cam()).normalized();
        // Linear part (about the principal point) doubles; the projective
        // row is zoom-independent.
        let (cx, cy) = cam().principal_point();
        let m1 = h1.matrix();
        let m2 = h2.matrix();
        for i in 0..2 {
            for j in 0..2 {
                let a1 = m1[i][j] - [cx, cy][i] * m1[2][j];
                let a2 = m2[i][j] - [cx, cy][i] * m2[2][j];
                assert!((a2 - 2.0 * a1).abs() < 1e-9 * a1.abs().max(1.0));
            }
        }
        assert!((m1[2][0] - m2[2][0]).abs() < 1e-15);
        assert!((m1[2][1] - m2[2][1]).abs() < 1e-15);
    }

    #[test]
    fn point_zoom_fixed_point_at_center() {
        let current = PtzState {
            pan: 0.2,
            tilt: -0.1,
            zoom: 3.0,
        };
        let (cx, cy) = cam().principal_point();
        let next = point_zoom_command((cx, cy), &current, 1.0, &cam());
        assert!((next.pan - current.pan).abs() < 1e-12);
        assert!((next.tilt - current.tilt).abs() < 1e-12);
        assert!((next.zoom - current.zoom).abs() < 1e-12);
    }

    #[test]
    fn point_zoom_center_factor_two_only_zooms() {
        let current = PtzState {
            pan: -0.3,
            tilt: 0.05,
            zoom: 2.0,
        };
        let (cx, cy) = cam().principal_point();
        let next = point_zoom_command((cx, cy), &current, 2.0, &cam());
        assert!((next.pan - current.pan).abs() < 1e-12);
        assert!((next.tilt - current.tilt).abs() < 1e-12);
        assert!((next.zoom - 4.0).abs() < 1e-12);
    }

    #[test]
    fn perturb_zero_sigma_is_identity() {
        let nominal = RobotPose {
            x: 1.0,
            y: 2.0,
            yaw: 0.3,
            standoff: 5.0,
        };
        let p = perturb_pose(&nominal, 123, 0.0, 0.0);
        assert_eq!(p, nominal);
    }

    #[test]
    fn perturb_is_deterministic() {
        let nominal = RobotPose {
            x: 0.0,
            y: 0.0,
            yaw: 0.0,
            standoff: 5.0,
        };
        let a = perturb_pose(&nominal, 7, 0.1, 0.05);
        let b = perturb_pose(&nominal, 7, 0.1, 0.05);
        assert_eq!(a, b);
        let c = perturb_pose(&nominal, 8, 0.1, 0.05);
        assert_ne!(a, c);
    }

    #[test]
    fn perturb_sample_std_matches_sigma() {
        let nominal = RobotPose {
            x: 0.0,
            y: 0.0,
            yaw: 0.0,
            standoff: 5.0,
        };
        let n = 1000;
        let xs: Vec<f64> = (0..n)
            .map(|s| perturb_pose(&nominal, s, 0.1, 0.0).x)
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let std = var.sqrt();
        assert!(
            (0.09..=0.11).contains(&std),
            "sample std {std} outside [0.09, 0.11]"
        );
    }

    #[test]
    fn relative_homography_identity_for_same_state() {
        let s = PtzState {
            pan: 0.1,
            tilt: -0.2,
            zoom: 5.0,
        };
        let h = relative_view_homography(&cam(), &s, &s).normalized();
        let m = h.matrix();
        for (i, row) in m.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((v - expected).abs() < 1e-9);
            }
        }
    }
}

//! Synthetic wall scenes with placed meters and exact ground truth.
//!
//! A scene is a high-resolution wall texture (industrial clutter: panels,
//! pipes, text blocks, rivets, and a few plain decoy rings) plus one meter
//! drawn with bezel, tick marks every 30 degrees, a radial needle, and a
//! small label block. Generation is a pure function of the seed, so a trial
//! can be reproduced from its configuration alone.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Homography, Region};
use crate::image::GrayImage;

use super::raster;
use super::{wall_to_view_homography, CameraConfig, PtzState, RobotPose};

/// Meter face outline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeterShape {
    Circle,
    Rect,
}

impl std::fmt::Display for MeterShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MeterShape::Circle => write!(f, "circle"),
            MeterShape::Rect => write!(f, "rect"),
        }
    }
}

/// Height of a rectangular meter relative to its longer (horizontal) side.
pub const RECT_ASPECT: f64 = 0.68;

/// One meter on the wall. `diameter` is in scene pixels: the bezel diameter
/// for circular meters, the longer side for rectangular ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeterPlacement {
    pub id: u32,
    pub shape: MeterShape,
    pub center: (f64, f64),
    pub diameter: f64,
    pub needle_angle: f64,
}

impl MeterPlacement {
    /// Tight bounding region in scene pixels.
    pub fn region(&self) -> Region {
        let (cx, cy) = self.center;
        match self.shape {
            MeterShape::Circle => Region {
                x: cx - self.diameter / 2.0,
                y: cy - self.diameter / 2.0,
                w: self.diameter,
                h: self.diameter,
            },
            MeterShape::Rect => Region {
                x: cx - self.diameter / 2.0,
                y: cy - self.diameter * RECT_ASPECT / 2.0,
                w: self.diameter,
                h: self.diameter * RECT_ASPECT,
            },
        }
    }
}

/// Scene generator knobs (wall geometry; camera geometry comes from
/// [`CameraConfig`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub wall_w: u32,
    pub wall_h: u32,
    /// Wall texture resolution.
    pub px_per_meter: f64,
    /// Nominal camera-to-wall distance, meters.
    pub standoff_m: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            wall_w: 7000,
            wall_h: 5200,
            px_per_meter: 900.0,
            standoff_m: 5.0,
        }
    }
}

/// A generated scene: wall texture, meter placements, and the geometry
/// needed to render views of it.
#[derive(Debug, Clone)]
pub struct SceneSpec {
    pub wall: GrayImage,
    pub meters: Vec<MeterPlacement>,
    pub px_per_meter: f64,
    /// Pose the robot was *supposed* to stop at: looking straight at the
    /// meter from the configured standoff.
    pub nominal_pose: RobotPose,
    /// Box-filtered wall at 1/2, 1/4, 1/8 resolution, for prefiltered
    /// minified rendering.
    pub(crate) mips: Vec<GrayImage>,
}

impl SceneSpec {
    pub(crate) fn with_mips(
        wall: GrayImage,
        meters: Vec<MeterPlacement>,
        px_per_meter: f64,
        nominal_pose: RobotPose,
    ) -> Self {
        let mips = build_mips(&wall, 3);
        Self {
            wall,
            meters,
            px_per_meter,
            nominal_pose,
            mips,
        }
    }

    pub fn meter(&self, id: u32) -> Option<&MeterPlacement> {
        self.meters.iter().find(|m| m.id == id)
    }

    /// Scene-pixel -> view-pixel homography for a pose and head state.
    pub fn scene_to_view(
        &self,
        pose: &RobotPose,
        ptz: &PtzState,
        cam: &CameraConfig,
    ) -> Homography {
        let s = 1.0 / self.px_per_meter;
        wall_to_view_homography(pose, ptz, cam).compose(&Homography::scale(s, s))
    }

    /// Render the meter alone on a plain background, e.g. as the reference
    /// image a detector matches against. `nominal_diameter` is the meter
    /// diameter in the output image.
    pub fn reference_meter_image(&self, id: u32, nominal_diameter: u32) -> Option<GrayImage> {
        let m = self.meter(id)?;
        Some(render_reference_meter(
            m.shape,
            m.needle_angle,
            nominal_diameter,
        ))
    }
}

/// Exact meter regions in scene pixels, mappable into any rendered view.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    regions: BTreeMap<u32, Region>,
}

impl GroundTruth {
    pub fn scene_region(&self, id: u32) -> Option<&Region> {
        self.regions.get(&id)
    }

    /// Meter region in the coordinates of the view rendered at
    /// `(pose, ptz)`.
    pub fn region_in_view(
        &self,
        id: u32,
        scene: &SceneSpec,
        pose: &RobotPose,
        ptz: &PtzState,
        cam: &CameraConfig,
    ) -> Option<Region> {
        let r = self.regions.get(&id)?;
        Some(r.map_bounding(&scene.scene_to_view(pose, ptz, cam)))
    }
}

fn build_mips(wall: &GrayImage, levels: u32) -> Vec<GrayImage> {
    // The chain is box-filtered in f32 and only quantized to u8 per level,
    // so rounding does not accumulate across levels.
    let mut mips = Vec::new();
    let mut prev_w = wall.width() as usize;
    let mut prev_h = wall.height() as usize;
    let mut prev: Vec<f32> = wall.as_slice().iter().map(|&v| v as f32).collect();
    for _ in 0..levels {
        let w = (prev_w / 2).max(1);
        let h = (prev_h / 2).max(1);
        let mut next = vec![0.0f32; w * h];
        for y in 0..h {
            for x in 0..w {
                let mut sum = 0.0f32;
                let mut n = 0u32;
                for dy in 0..2 {
                    for dx in 0..2 {
                        let sx = x * 2 + dx;
                        let sy = y * 2 + dy;
                        if sx < prev_w && sy < prev_h {
                            sum += prev[sy * prev_w + sx];
                            n += 1;
                        }
                    }
                }
                next[y * w + x] = sum / n as f32;
            }
        }
        let img = GrayImage::from_vec(
            w as u32,
            h as u32,
            next.iter().map(|&v| v.round().clamp(0.0, 255.0) as u8).collect(),
        )
        .expect("mip dims");
        mips.push(img);
        prev = next;
        prev_w = w;
        prev_h = h;
    }
    mips
}

// ---------------------------------------------------------------------------
// Meter face rendering
// ---------------------------------------------------------------------------

/// Intensity of a point in meter-local coordinates, or `None` outside the
/// meter. Local coordinates put the meter center at the origin with the
/// half-diameter scaled to 1.
fn meter_intensity(shape: MeterShape, needle_angle: f64, u: f64, v: f64) -> Option<u8> {
    match shape {
        MeterShape::Circle => circle_meter_intensity(needle_angle, u, v),
        MeterShape::Rect => rect_meter_intensity(needle_angle, u, v),
    }
}

fn angular_distance(a: f64, b: f64) -> f64 {
    let mut d = (a - b).rem_euclid(std::f64::consts::TAU);
    if d > std::f64::consts::PI {
        d = std::f64::consts::TAU - d;
    }
    d
}

fn circle_meter_intensity(needle_angle: f64, u: f64, v: f64) -> Option<u8> {
    let rho = (u * u + v * v).sqrt();
    if rho > 1.0 {
        return None;
    }
    if rho > 0.88 {
        return Some(38);
    }
    // Hub and needle sit on top of everything else.
    if rho <= 0.06 {
        return Some(30);
    }
    let (ns, nc) = needle_angle.sin_cos();
    let along = u * nc + v * ns;
    let perp = (-u * ns + v * nc).abs();
    if perp <= 0.02 && (-0.12..=0.70).contains(&along) {
        return Some(25);
    }
    // Tick marks every 30 degrees, majors on the axes.
    let phi = v.atan2(u);
    let step = 30.0f64.to_radians();
    let k = (phi / step).round();
    let dphi = angular_distance(phi, k * step);
    let major = (k.rem_euclid(3.0)) == 0.0;
    let halfwidth = if major { 0.030 } else { 0.018 };
    let inner = if major { 0.66 } else { 0.70 };
    if (inner..=0.86).contains(&rho) && rho * dphi.sin() <= halfwidth {
        return Some(40);
    }
    // Numeral blobs inside the tick ring.
    if dphi.abs() < 0.3 {
        let bx = 0.55 * (k * step).cos();
        let by = 0.55 * (k * step).sin();
        if (u - bx).abs() <= 0.045 && (v - by).abs() <= 0.045 {
            return Some(55);
        }
    }
    // Label block below center.
    let lu = u;
    let lv = v - 0.40;
    if lu.abs() <= 0.21 && lv.abs() <= 0.075 {
        if lu.abs() > 0.19 || lv.abs() > 0.055 {
            return Some(60);
        }
        if lv.abs() <= 0.025 && lu.abs() <= 0.16 {
            return Some(95);
        }
        return Some(205);
    }
    Some(232)
}

fn rect_meter_intensity(needle_angle: f64, u: f64, v: f64) -> Option<u8> {
    // Half-height relative to the half-width of 1.
    let hh = RECT_ASPECT;
    if u.abs() > 1.0 || v.abs() > hh {
        return None;
    }
    let t = 0.055;
    if u.abs() > 1.0 - t || v.abs() > hh - t {
        return Some(45);
    }
    // Arc dial: pivot below center, ticks over the top sweep.
    let px = 0.0;
    let py = hh * 0.55;
    let du = u - px;
    let dv = v - py;
    let rho = (du * du + dv * dv).sqrt();
    if rho <= 0.035 {
        return Some(30);
    }
    let (ns, nc) = needle_angle.sin_cos();
    let along = du * nc + dv * ns;
    let perp = (-du * ns + dv * nc).abs();
    if perp <= 0.015 && (0.0..=0.40).contains(&along) {
        return Some(25);
    }
    let phi = dv.atan2(du);
    let step = 30.0f64.to_radians();
    let start = -150.0f64.to_radians();
    // Five ticks at -150, -120, ..., -30 degrees.
    let k = ((phi - start) / step).round();
    if (0.0..=4.0).contains(&k) {
        let tick_phi = start + k * step;
        let dphi = angular_distance(phi, tick_phi);
        let major = k == 0.0 || k == 4.0 || k == 2.0;
        let halfwidth = if major { 0.024 } else { 0.015 };
        if (0.36..=0.46).contains(&rho) && rho * dphi.sin() <= halfwidth {
            return Some(40);
        }
        // Numerals just inside the arc.
        let bx = px + 0.29 * tick_phi.cos();
        let by = py + 0.29 * tick_phi.sin();
        if (u - bx).abs() <= 0.032 && (v - by).abs() <= 0.032 {
            return Some(55);
        }
    }
    // Thin arc line through the tick band.
    if (0.415..=0.428).contains(&rho) && (start - 0.05..=start + 4.0 * step + 0.05).contains(&phi)
    {
        return Some(80);
    }
    // Maker label, bottom left; units block, bottom right.
    if (u + 0.55).abs() <= 0.18 && (v - hh * 0.62).abs() <= 0.055 {
        if (v - hh * 0.62).abs() <= 0.02 && (u + 0.55).abs() <= 0.15 {
            return Some(95);
        }
        return Some(200);
    }
    if (u - 0.55).abs() <= 0.12 && (v - hh * 0.62).abs() <= 0.045 {
        return Some(120);
    }
    Some(235)
}

/// Draw a meter into `img` with supersampled anti-aliasing.
fn draw_meter(img: &mut GrayImage, m: &MeterPlacement) {
    let half = m.diameter / 2.0;
    let r = m.region().expand(0.02);
    let x0 = r.x.floor().max(0.0) as u32;
    let y0 = r.y.floor().max(0.0) as u32;
    let x1 = ((r.x + r.w).ceil() as i64).clamp(0, img.width() as i64 - 1) as u32;
    let y1 = ((r.y + r.h).ceil() as i64).clamp(0, img.height() as i64 - 1) as u32;
    let ss = raster::SUPERSAMPLE;
    for y in y0..=y1 {
        for x in x0..=x1 {
            let mut sum = 0.0f64;
            let mut covered = 0u32;
            for sy in 0..ss {
                for sx in 0..ss {
                    let fx = x as f64 + (sx as f64 + 0.5) / ss as f64 - 0.5;
                    let fy = y as f64 + (sy as f64 + 0.5) / ss as f64 - 0.5;
                    let u = (fx - m.center.0) / half;
                    let v = (fy - m.center.1) / half;
                    if let Some(c) = meter_intensity(m.shape, m.needle_angle, u, v) {
                        sum += c as f64;
                        covered += 1;
                    }
                }
            }
            if covered > 0 {
                let total = (ss * ss) as f64;
                let bg = img.get(x, y) as f64;
                let v = (sum + bg * (total - covered as f64)) / total;
                img.set(x, y, v.round() as u8);
            }
        }
    }
}

/// Render a meter alone on a plain background: the "reference image" the
/// detectors match against. The meter diameter equals `nominal_diameter`
/// and the canvas adds a 15% margin.
pub fn render_reference_meter(
    shape: MeterShape,
    needle_angle: f64,
    nominal_diameter: u32,
) -> GrayImage {
    let side = (nominal_diameter as f64 * 1.3).round() as u32;
    let mut img = GrayImage::from_fn(side, side, |_, _| 175).expect("canvas dims");
    let m = MeterPlacement {
        id: 0,
        shape,
        center: (side as f64 / 2.0, side as f64 / 2.0),
        diameter: nominal_diameter as f64,
        needle_angle,
    };
    draw_meter(&mut img, &m);
    img
}

// ---------------------------------------------------------------------------
// Scene generation
// ---------------------------------------------------------------------------

/// Deterministic cluttered scene with one meter whose apparent diameter at
/// zoom 1 from the nominal pose equals `diameter_at_wide_px`.
pub fn generate_scene(
    seed: u64,
    shape: MeterShape,
    diameter_at_wide_px: f64,
    clutter_level: f64,
    cam: &CameraConfig,
    scfg: &SceneConfig,
) -> Result<(SceneSpec, GroundTruth)> {
    if !(8.0..=400.0).contains(&diameter_at_wide_px) {
        return Err(Error::Config(format!(
            "meter diameter {diameter_at_wide_px} px outside [8, 400]"
        )));
    }
    let clutter = clutter_level.clamp(0.0, 1.0);
    let (w, h) = (scfg.wall_w, scfg.wall_h);
    let ppm = scfg.px_per_meter;
    // Apparent size at zoom 1: d_view = f0 * d_scene / (ppm * standoff).
    let scene_diameter = diameter_at_wide_px * ppm * scfg.standoff_m / cam.f0();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Meter near the wall center, jittered so trials differ; clamped so the
    // meter always lies fully inside the wall texture.
    let jitter = 0.3 * ppm;
    let margin = scene_diameter / 2.0 + 8.0;
    let meter_cx = (w as f64 / 2.0 + rng.gen_range(-jitter..jitter))
        .clamp(margin, (w as f64 - margin).max(margin));
    let meter_cy = (h as f64 / 2.0 + rng.gen_range(-jitter..jitter))
        .clamp(margin, (h as f64 - margin).max(margin));
    let needle_angle = match shape {
        MeterShape::Circle => rng.gen_range(0.0..std::f64::consts::TAU),
        MeterShape::Rect => rng.gen_range(-140.0f64.to_radians()..-40.0f64.to_radians()),
    };
    let meter = MeterPlacement {
        id: 0,
        shape,
        center: (meter_cx, meter_cy),
        diameter: scene_diameter,
        needle_angle,
    };
    let keep_out = meter.region().expand(0.4);

    let mut wall = base_texture(seed, w, h);
    draw_clutter(&mut wall, &mut rng, clutter, &keep_out, scene_diameter);
    draw_meter(&mut wall, &meter);

    let nominal_pose = RobotPose {
        x: meter_cx / ppm,
        y: meter_cy / ppm,
        yaw: 0.0,
        standoff: scfg.standoff_m,
    };

    let mut regions = BTreeMap::new();
    regions.insert(meter.id, meter.region());
    let scene = SceneSpec::with_mips(wall, vec![meter], ppm, nominal_pose);
    Ok((scene, GroundTruth { regions }))
}

fn base_texture(seed: u64, w: u32, h: u32) -> GrayImage {
    let mut img = GrayImage::new(w, h).expect("wall dims");
    let data = img.as_mut_slice();
    let hf = h as f64;
    for y in 0..h as usize {
        let fy = y as f64;
        let grad = 132.0 + 16.0 * (fy / hf);
        for x in 0..w as usize {
            let fx = x as f64;
            let n = 16.0 * raster::value_noise(seed ^ 0xA1, fx, fy, 520.0)
                + 7.0 * raster::value_noise(seed ^ 0xB2, fx, fy, 130.0)
                + 3.5 * raster::value_noise(seed ^ 0xC3, fx, fy, 36.0);
            data[y * w as usize + x] = (grad + n).clamp(0.0, 255.0) as u8;
        }
    }
    img
}

fn intersects(a: &Region, b: &Region) -> bool {
    a.x < b.x + b.w && b.x < a.x + a.w && a.y < b.y + b.h && b.y < a.y + a.h
}

fn draw_clutter(
    wall: &mut GrayImage,
    rng: &mut ChaCha8Rng,
    clutter: f64,
    keep_out: &Region,
    meter_diameter: f64,
) {
    let (w, h) = (wall.width() as f64, wall.height() as f64);
    // Element sizes scale with the wall so scenes stay plausible at any
    // texture resolution.
    let s = w.min(h) / 5200.0;

    // Panels: large bordered rectangles with a small intensity offset.
    let n_panels = (3.0 + 6.0 * clutter).round() as usize;
    for _ in 0..n_panels {
        let pw = rng.gen_range(500.0 * s..1600.0 * s);
        let ph = rng.gen_range(400.0 * s..1300.0 * s);
        let x = rng.gen_range(0.0..(w - pw).max(1.0));
        let y = rng.gen_range(0.0..(h - ph).max(1.0));
        let r = Region { x, y, w: pw, h: ph };
        let delta: f64 = rng.gen_range(-22.0..22.0);
        let border: u8 = rng.gen_range(55..85);
        if intersects(&r, keep_out) {
            continue;
        }
        let base = (145.0 + delta).clamp(0.0, 255.0) as u8;
        raster::fill_rect(wall, x, y, x + pw, y + ph, base);
        raster::stroke_rect(wall, x, y, x + pw, y + ph, 6.0 * s, border);
        // Corner bolts.
        let inset = 18.0 * s;
        for (bx, by) in [
            (x + inset, y + inset),
            (x + pw - inset, y + inset),
            (x + inset, y + ph - inset),
            (x + pw - inset, y + ph - inset),
        ] {
            raster::draw_disk(wall, bx, by, 8.0 * s, 70);
        }
    }

    // Pipes: full-span bars with a bright highlight line.
    let n_pipes = (2.0 + 4.0 * clutter).round() as usize;
    for _ in 0..n_pipes {
        let thickness = rng.gen_range(60.0 * s..170.0 * s);
        let horizontal = rng.gen::<bool>();
        let pos = if horizontal {
            rng.gen_range(0.0..(h - thickness).max(1.0))
        } else {
            rng.gen_range(0.0..(w - thickness).max(1.0))
        };
        let dark: u8 = rng.gen_range(55..95);
        let r = if horizontal {
            Region { x: 0.0, y: pos, w, h: thickness }
        } else {
            Region { x: pos, y: 0.0, w: thickness, h }
        };
        if intersects(&r, keep_out) {
            continue;
        }
        raster::fill_rect(wall, r.x, r.y, r.x + r.w, r.y + r.h, dark);
        let hl = thickness / 5.0;
        if horizontal {
            raster::fill_rect(wall, 0.0, pos + thickness * 0.3, w, pos + thickness * 0.3 + hl, dark + 60);
        } else {
            raster::fill_rect(wall, pos + thickness * 0.3, 0.0, pos + thickness * 0.3 + hl, h, dark + 60);
        }
    }

    // Text-like blocks: rows of small dark rectangles.
    let n_text = (4.0 + 10.0 * clutter).round() as usize;
    for _ in 0..n_text {
        let glyph = rng.gen_range(18.0 * s..42.0 * s);
        let cols = rng.gen_range(3..9) as f64;
        let rows = rng.gen_range(1..3) as f64;
        let bw = cols * glyph * 1.4;
        let bh = rows * glyph * 1.6;
        let x = rng.gen_range(0.0..(w - bw).max(1.0));
        let y = rng.gen_range(0.0..(h - bh).max(1.0));
        let ink: u8 = rng.gen_range(45..85);
        let r = Region { x, y, w: bw, h: bh };
        if intersects(&r, keep_out) {
            continue;
        }
        for row in 0..rows as usize {
            for col in 0..cols as usize {
                let gx = x + col as f64 * glyph * 1.4;
                let gy = y + row as f64 * glyph * 1.6;
                // Vary glyph shapes a little.
                let gw = glyph * rng.gen_range(0.55..0.95);
                let gh = glyph * rng.gen_range(0.8..1.1);
                raster::fill_rect(wall, gx, gy, gx + gw, gy + gh, ink);
            }
        }
    }

    // Rivets.
    let n_rivets = (40.0 * clutter).round() as usize;
    for _ in 0..n_rivets {
        let rr = rng.gen_range(6.0 * s..15.0 * s).max(1.5);
        let x = rng.gen_range(rr..(w - rr));
        let y = rng.gen_range(rr..(h - rr));
        let v: u8 = if rng.gen::<bool>() { 90 } else { 185 };
        let r = Region { x: x - rr, y: y - rr, w: 2.0 * rr, h: 2.0 * rr };
        if intersects(&r, keep_out) {
            continue;
        }
        raster::draw_disk(wall, x, y, rr, v);
    }

    // Decoy rings: bezel-like circles with plain faces. These give the
    // circle detector real hypotheses that carry no meter texture.
    let n_decoys = 1 + (2.0 * clutter).round() as usize;
    for _ in 0..n_decoys {
        let radius = meter_diameter / 2.0 * rng.gen_range(0.45..1.1);
        if 2.0 * (radius + 10.0) >= w.min(h) {
            continue;
        }
        let x = rng.gen_range(radius + 10.0..(w - radius - 10.0));
        let y = rng.gen_range(radius + 10.0..(h - radius - 10.0));
        let r = Region {
            x: x - radius,
            y: y - radius,
            w: 2.0 * radius,
            h: 2.0 * radius,
        };
        if intersects(&r, keep_out) {
            continue;
        }
        let face: u8 = rng.gen_range(175..215);
        raster::draw_disk(wall, x, y, radius, face);
        raster::draw_ring(wall, x, y, radius, radius * 0.88, 42);
        raster::draw_disk(wall, x, y, radius * 0.05, 80);
    }
}

// ---------------------------------------------------------------------------
// Scene serialization
// ---------------------------------------------------------------------------

pub const SCENE_SCHEMA: &str = "gauge-scout-scene/1";

#[derive(Serialize, Deserialize)]
struct SceneDoc {
    schema: String,
    wall_png: String,
    px_per_meter: f64,
    nominal_pose: RobotPose,
    meters: Vec<MeterPlacement>,
    ground_truth: BTreeMap<u32, Region>,
}

/// Write `scene.json` plus `wall.png` under `dir`.
pub fn save_scene(scene: &SceneSpec, gt: &GroundTruth, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    scene.wall.save_png(dir.join("wall.png"))?;
    let doc = SceneDoc {
        schema: SCENE_SCHEMA.to_string(),
        wall_png: "wall.png".to_string(),
        px_per_meter: scene.px_per_meter,
        nominal_pose: scene.nominal_pose,
        meters: scene.meters.clone(),
        ground_truth: gt.regions.clone(),
    };
    let json = serde_json::to_string_pretty(&doc)?;
    std::fs::write(dir.join("scene.json"), json)?;
    Ok(())
}

/// Load a scene written by [`save_scene`].
pub fn load_scene(json_path: impl AsRef<Path>) -> Result<(SceneSpec, GroundTruth)> {
    let json_path = json_path.as_ref();
    let doc: SceneDoc = serde_json::from_str(&std::fs::read_to_string(json_path)?)?;
    if doc.schema != SCENE_SCHEMA {
        return Err(Error::Config(format!(
            "unsupported scene schema {:?}",
            doc.schema
        )));
    }
    let base = json_path.parent().unwrap_or_else(|| Path::new("."));
    let wall = GrayImage::load_png(base.join(&doc.wall_png))?;
    let scene = SceneSpec::with_mips(wall, doc.meters, doc.px_per_meter, doc.nominal_pose);
    Ok((
        scene,
        GroundTruth {
            regions: doc.ground_truth,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_scene_cfg() -> SceneConfig {
        SceneConfig {
            wall_w: 2000,
            wall_h: 1600,
            ..Default::default()
        }
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let cam = CameraConfig::default();
        let cfg = small_scene_cfg();
        let (a, _) = generate_scene(5, MeterShape::Circle, 100.0, 0.5, &cam, &cfg).unwrap();
        let (b, _) = generate_scene(5, MeterShape::Circle, 100.0, 0.5, &cam, &cfg).unwrap();
        assert_eq!(a.wall, b.wall);
        assert_eq!(a.meters, b.meters);
        let (c, _) = generate_scene(6, MeterShape::Circle, 100.0, 0.5, &cam, &cfg).unwrap();
        assert_ne!(a.wall, c.wall);
    }

    #[test]
    fn rect_ground_truth_long_side_matches_diameter() {
        let cam = CameraConfig::default();
        let cfg = small_scene_cfg();
        let (scene, gt) = generate_scene(2, MeterShape::Rect, 40.0, 0.3, &cam, &cfg).unwrap();
        // Apparent long side at zoom 1 from the nominal pose.
        let view = gt
            .region_in_view(0, &scene, &scene.nominal_pose, &PtzState::default(), &cam)
            .unwrap();
        let long = view.w.max(view.h);
        assert!(
            (long - 40.0).abs() <= 1.0,
            "apparent long side {long}, wanted 40 +- 1"
        );
    }

    #[test]
    fn circle_apparent_diameter_matches_request() {
        let cam = CameraConfig::default();
        let cfg = small_scene_cfg();
        let (scene, gt) = generate_scene(0, MeterShape::Circle, 160.0, 0.5, &cam, &cfg).unwrap();
        let view = gt
            .region_in_view(0, &scene, &scene.nominal_pose, &PtzState::default(), &cam)
            .unwrap();
        assert!((view.w - 160.0).abs() <= 2.0, "apparent diameter {}", view.w);
        assert!((view.h - 160.0).abs() <= 2.0);
    }

    #[test]
    fn scene_roundtrips_through_json() {
        let cam = CameraConfig::default();
        let cfg = SceneConfig {
            wall_w: 600,
            wall_h: 500,
            ..Default::default()
        };
        let (scene, gt) = generate_scene(3, MeterShape::Circle, 30.0, 0.2, &cam, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_scene(&scene, &gt, dir.path()).unwrap();
        let (back, back_gt) = load_scene(dir.path().join("scene.json")).unwrap();
        assert_eq!(scene.wall, back.wall);
        assert_eq!(scene.meters, back.meters);
        assert_eq!(
            gt.scene_region(0).unwrap(),
            back_gt.scene_region(0).unwrap()
        );
    }

    #[test]
    fn reference_meter_has_requested_diameter() {
        let img = render_reference_meter(MeterShape::Circle, 1.0, 200);
        assert_eq!(img.width(), 260);
        // Bezel is dark against the plain background along the horizontal
        // midline at +-100 px from center.
        let cy = img.height() / 2;
        let cx = img.width() / 2;
        assert!(img.get(cx - 99, cy) < 80);
        assert!(img.get(cx + 99, cy) < 80);
        assert!(img.get(cx, cy - 99) < 80);
    }
}

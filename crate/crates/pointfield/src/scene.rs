//! Analytic synthetic scenes and the exact ray-tracing oracle.
//!
//! Scenes are lists of labeled primitives over an optional finite ground
//! patch at z = 0, shaded with ambient plus one lambertian directional light.
//! The oracle renders RGB, forward-axis depth, object-id masks, and per-pixel
//! part labels, and samples ground-truth surface points for named targets.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Camera, Ray};
use crate::img::{IdImage, RgbImage, ScalarImage};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("failed to read scene file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse scene json: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scene: {0}")]
    Validation(String),
    #[error("unknown prompt id '{0}'")]
    UnknownPrompt(String),
}

/// Axis-aligned box, used both as a primitive shape and as the field/workspace
/// bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn extent(&self) -> [f64; 3] {
        [self.max[0] - self.min[0], self.max[1] - self.min[1], self.max[2] - self.min[2]]
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    /// Entry/exit ray parameters of the ray segment inside the box, if any.
    pub fn clip_ray(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<(f64, f64)> {
        let mut t0 = f64::NEG_INFINITY;
        let mut t1 = f64::INFINITY;
        for i in 0..3 {
            if dir[i].abs() < 1e-300 {
                if origin[i] < self.min[i] || origin[i] > self.max[i] {
                    return None;
                }
                continue;
            }
            let inv = 1.0 / dir[i];
            let (mut a, mut b) = ((self.min[i] - origin[i]) * inv, (self.max[i] - origin[i]) * inv);
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            t0 = t0.max(a);
            t1 = t1.min(b);
        }
        if t0 <= t1 {
            Some((t0, t1))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    Sphere { center: [f64; 3], radius: f64 },
    #[serde(rename = "box")]
    Cuboid { min: [f64; 3], max: [f64; 3] },
    /// Finite cylinder with its axis parallel to world z.
    Cylinder { center: [f64; 2], z_min: f64, z_max: f64, radius: f64 },
}

/// Geometric sub-region of a primitive used to ground part-level prompts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Region {
    /// Points with `normal . x >= offset`.
    HalfSpace { normal: [f64; 3], offset: f64 },
    Sphere { center: [f64; 3], radius: f64 },
    #[serde(rename = "box")]
    Cuboid { min: [f64; 3], max: [f64; 3] },
    Cylinder { center: [f64; 2], z_min: f64, z_max: f64, radius: f64 },
}

impl Region {
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        match self {
            Region::HalfSpace { normal, offset } => {
                Vector3::from(*normal).dot(p) >= *offset
            }
            Region::Sphere { center, radius } => (p - Vector3::from(*center)).norm() <= *radius,
            Region::Cuboid { min, max } => (0..3).all(|i| p[i] >= min[i] && p[i] <= max[i]),
            Region::Cylinder { center, z_min, z_max, radius } => {
                let dx = p.x - center[0];
                let dy = p.y - center[1];
                p.z >= *z_min && p.z <= *z_max && (dx * dx + dy * dy).sqrt() <= *radius
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartLabel {
    pub name: String,
    pub region: Region,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenePrimitive {
    pub object_id: u32,
    pub albedo: [f64; 3],
    pub shape: Shape,
    #[serde(default)]
    pub parts: Vec<PartLabel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundPatch {
    pub albedo: [f64; 3],
    #[serde(default)]
    pub center: [f64; 2],
    pub half_extent: [f64; 2],
    pub object_id: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub object_id: u32,
    #[serde(default)]
    pub part: Option<String>,
}

fn default_ambient() -> f64 {
    0.35
}

fn default_light() -> [f64; 3] {
    [0.4, -0.3, 1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticScene {
    #[serde(default)]
    pub name: String,
    /// Composited color where no surface is hit. Black matches the zero
    /// density outside objects, so a trained field reproduces it exactly.
    #[serde(default)]
    pub background: [f64; 3],
    #[serde(default = "default_ambient")]
    pub ambient: f64,
    #[serde(default = "default_light")]
    pub light_dir: [f64; 3],
    pub workspace: Aabb,
    #[serde(default)]
    pub ground: Option<GroundPatch>,
    pub primitives: Vec<ScenePrimitive>,
    /// prompt id -> target region.
    pub targets: BTreeMap<String, TargetSpec>,
}

/// Result of tracing one ray: either the nearest surface hit or background.
#[derive(Debug, Clone, PartialEq)]
pub struct HitRecord {
    /// Shaded color.
    pub rgb: [f64; 3],
    /// Ray parameter (Euclidean distance, rays have unit direction);
    /// `+inf` for background.
    pub t: f64,
    /// 0 for background.
    pub object_id: u32,
    pub part: Option<String>,
}

/// One rendered oracle view with everything evaluation and annotation need.
#[derive(Debug, Clone)]
pub struct GroundTruthView {
    pub camera: Camera,
    pub rgb: RgbImage,
    /// Forward-axis depth in meters, `+inf` where the id mask is 0.
    pub depth: ScalarImage,
    pub ids: IdImage,
    /// Per-pixel part index plus one within the hit primitive; 0 = no part.
    pub parts: Vec<u16>,
    /// Whether each named target has at least one visible pixel.
    pub target_visible: BTreeMap<String, bool>,
}

/// Degradation model for simulated sensor depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorNoise {
    /// Chebyshev radius in pixels around id-mask boundaries that is dropped.
    pub edge_hole_px: u32,
    /// Fraction of remaining valid pixels dropped at random.
    pub dropout: f64,
    /// Additive gaussian noise on surviving depths, in meters.
    pub sigma_m: f64,
    pub seed: u64,
}

impl SensorNoise {
    pub fn none() -> Self {
        Self { edge_hole_px: 0, dropout: 0.0, sigma_m: 0.0, seed: 0 }
    }
}

struct RawHit {
    t: f64,
    normal: Vector3<f64>,
    prim_index: usize,
}

impl SyntheticScene {
    pub fn from_json_str(json: &str) -> Result<Self, SceneError> {
        let scene: SyntheticScene = serde_json::from_str(json)?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn from_file(path: &Path) -> Result<Self, SceneError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| SceneError::Io { path: path.display().to_string(), source })?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if self.primitives.is_empty() {
            return Err(SceneError::Validation("scene needs at least one primitive".into()));
        }
        let mut ids = BTreeSet::new();
        for prim in &self.primitives {
            if prim.object_id == 0 {
                return Err(SceneError::Validation("object_id 0 is reserved for background".into()));
            }
            if !ids.insert(prim.object_id) {
                return Err(SceneError::Validation(format!("duplicate object_id {}", prim.object_id)));
            }
            match &prim.shape {
                Shape::Sphere { radius, .. } => {
                    if *radius <= 0.0 {
                        return Err(SceneError::Validation("sphere radius must be positive".into()));
                    }
                }
                Shape::Cuboid { min, max } => {
                    if (0..3).any(|i| max[i] <= min[i]) {
                        return Err(SceneError::Validation("box must have positive extent".into()));
                    }
                }
                Shape::Cylinder { z_min, z_max, radius, .. } => {
                    if *radius <= 0.0 || z_max <= z_min {
                        return Err(SceneError::Validation("cylinder needs positive radius and height".into()));
                    }
                }
            }
        }
        if let Some(ground) = &self.ground {
            if ground.object_id == 0 || ids.contains(&ground.object_id) {
                return Err(SceneError::Validation("ground object_id must be unique and nonzero".into()));
            }
            if ground.half_extent[0] <= 0.0 || ground.half_extent[1] <= 0.0 {
                return Err(SceneError::Validation("ground half extents must be positive".into()));
            }
        }
        let ext = self.workspace.extent();
        if ext.iter().any(|e| *e <= 0.0) {
            return Err(SceneError::Validation("workspace box must have positive extent".into()));
        }
        for (prompt, target) in &self.targets {
            let prim = self
                .primitives
                .iter()
                .find(|p| p.object_id == target.object_id)
                .ok_or_else(|| SceneError::Validation(format!("target '{prompt}' references unknown object_id {}", target.object_id)))?;
            if let Some(part) = &target.part {
                if !prim.parts.iter().any(|p| &p.name == part) {
                    return Err(SceneError::Validation(format!("target '{prompt}' references unknown part '{part}'")));
                }
            }
            // Nonempty surface region: a small sample must succeed.
            if self.gt_target_points(prompt, 16).is_err() {
                return Err(SceneError::Validation(format!("target '{prompt}' resolves to an empty surface region")));
            }
        }
        Ok(())
    }

    pub fn primitive_by_id(&self, object_id: u32) -> Option<&ScenePrimitive> {
        self.primitives.iter().find(|p| p.object_id == object_id)
    }

    fn shade(&self, albedo: &[f64; 3], normal: &Vector3<f64>, ray_dir: &Vector3<f64>) -> [f64; 3] {
        let mut n = *normal;
        if n.dot(ray_dir) > 0.0 {
            n = -n;
        }
        let light = Vector3::from(self.light_dir).normalize();
        let diffuse = n.dot(&light).max(0.0);
        let k = self.ambient + (1.0 - self.ambient) * diffuse;
        [albedo[0] * k, albedo[1] * k, albedo[2] * k]
    }

    fn intersect_primitive(shape: &Shape, ray: &Ray) -> Option<(f64, Vector3<f64>)> {
        match shape {
            Shape::Sphere { center, radius } => {
                let oc = ray.origin - Vector3::from(*center);
                let b = oc.dot(&ray.dir);
                let c = oc.norm_squared() - radius * radius;
                let disc = b * b - c;
                if disc < 0.0 {
                    return None;
                }
                let sqrt_disc = disc.sqrt();
                let mut t = -b - sqrt_disc;
                if t <= ray.t_near {
                    t = -b + sqrt_disc;
                }
                if t <= ray.t_near || t >= ray.t_far {
                    return None;
                }
                let normal = (ray.at(t) - Vector3::from(*center)).normalize();
                Some((t, normal))
            }
            Shape::Cuboid { min, max } => {
                let mut t0 = f64::NEG_INFINITY;
                let mut t1 = f64::INFINITY;
                let mut axis0 = 0usize;
                let mut sign0 = 1.0;
                for i in 0..3 {
                    if ray.dir[i].abs() < 1e-300 {
                        if ray.origin[i] < min[i] || ray.origin[i] > max[i] {
                            return None;
                        }
                        continue;
                    }
                    let inv = 1.0 / ray.dir[i];
                    let mut a = (min[i] - ray.origin[i]) * inv;
                    let mut b = (max[i] - ray.origin[i]) * inv;
                    let mut sign = -1.0;
                    if a > b {
                        std::mem::swap(&mut a, &mut b);
                        sign = 1.0;
                    }
                    if a > t0 {
                        t0 = a;
                        axis0 = i;
                        sign0 = sign;
                    }
                    t1 = t1.min(b);
                }
                if t0 > t1 {
                    return None;
                }
                // Only entry hits count: rays starting inside a solid box see
                // no surface in front of them until they exit, which is not a
                // visible face from outside. Treat exit as a hit as well so
                // interior origins still terminate.
                let t = if t0 > ray.t_near { t0 } else { t1 };
                if t <= ray.t_near || t >= ray.t_far {
                    return None;
                }
                let mut normal = Vector3::zeros();
                if t == t0 {
                    normal[axis0] = sign0;
                } else {
                    // Exit face: recompute which slab bounded t1.
                    let p = ray.at(t);
                    let mut best_axis = 0;
                    let mut best_d = f64::INFINITY;
                    for i in 0..3 {
                        let d = (p[i] - min[i]).abs().min((p[i] - max[i]).abs());
                        if d < best_d {
                            best_d = d;
                            best_axis = i;
                        }
                    }
                    normal[best_axis] = if (p[best_axis] - max[best_axis]).abs() < (p[best_axis] - min[best_axis]).abs() {
                        1.0
                    } else {
                        -1.0
                    };
                }
                Some((t, normal))
            }
            Shape::Cylinder { center, z_min, z_max, radius } => {
                let mut best: Option<(f64, Vector3<f64>)> = None;
                let mut consider = |t: f64, normal: Vector3<f64>| {
                    if t > ray.t_near && t < ray.t_far && best.map_or(true, |(bt, _)| t < bt) {
                        best = Some((t, normal));
                    }
                };
                // Side surface.
                let ox = ray.origin.x - center[0];
                let oy = ray.origin.y - center[1];
                let (dx, dy) = (ray.dir.x, ray.dir.y);
                let a = dx * dx + dy * dy;
                if a > 1e-300 {
                    let b = ox * dx + oy * dy;
                    let c = ox * ox + oy * oy - radius * radius;
                    let disc = b * b - a * c;
                    if disc >= 0.0 {
                        let sq = disc.sqrt();
                        for t in [(-b - sq) / a, (-b + sq) / a] {
                            let p = ray.at(t);
                            if p.z >= *z_min && p.z <= *z_max {
                                let normal = Vector3::new(p.x - center[0], p.y - center[1], 0.0).normalize();
                                consider(t, normal);
                            }
                        }
                    }
                }
                // Caps.
                if ray.dir.z.abs() > 1e-300 {
                    for (z, nz) in [(*z_min, -1.0), (*z_max, 1.0)] {
                        let t = (z - ray.origin.z) / ray.dir.z;
                        let p = ray.at(t);
                        let dx = p.x - center[0];
                        let dy = p.y - center[1];
                        if dx * dx + dy * dy <= radius * radius {
                            consider(t, Vector3::new(0.0, 0.0, nz));
                        }
                    }
                }
                best
            }
        }
    }

    fn intersect_ground(&self, ray: &Ray) -> Option<f64> {
        let ground = self.ground.as_ref()?;
        if ray.dir.z.abs() < 1e-300 {
            return None;
        }
        let t = -ray.origin.z / ray.dir.z;
        if t <= ray.t_near || t >= ray.t_far {
            return None;
        }
        let p = ray.at(t);
        if (p.x - ground.center[0]).abs() <= ground.half_extent[0] && (p.y - ground.center[1]).abs() <= ground.half_extent[1] {
            Some(t)
        } else {
            None
        }
    }

    fn trace_raw(&self, ray: &Ray) -> Option<RawHit> {
        let mut best: Option<RawHit> = None;
        for (idx, prim) in self.primitives.iter().enumerate() {
            if let Some((t, normal)) = Self::intersect_primitive(&prim.shape, ray) {
                if best.as_ref().map_or(true, |h| t < h.t) {
                    best = Some(RawHit { t, normal, prim_index: idx });
                }
            }
        }
        if let Some(t) = self.intersect_ground(ray) {
            if best.as_ref().map_or(true, |h| t < h.t) {
                best = Some(RawHit { t, normal: Vector3::new(0.0, 0.0, 1.0), prim_index: usize::MAX });
            }
        }
        best
    }

    /// Nearest surface hit along the ray, or the background record.
    pub fn trace_ray(&self, ray: &Ray) -> HitRecord {
        match self.trace_raw(ray) {
            None => HitRecord { rgb: self.background, t: f64::INFINITY, object_id: 0, part: None },
            Some(hit) => {
                if hit.prim_index == usize::MAX {
                    let ground = self.ground.as_ref().expect("ground hit implies ground present");
                    HitRecord {
                        rgb: self.shade(&ground.albedo, &hit.normal, &ray.dir),
                        t: hit.t,
                        object_id: ground.object_id,
                        part: None,
                    }
                } else {
                    let prim = &self.primitives[hit.prim_index];
                    let point = ray.at(hit.t);
                    let part = prim.parts.iter().find(|p| p.region.contains(&point)).map(|p| p.name.clone());
                    HitRecord {
                        rgb: self.shade(&prim.albedo, &hit.normal, &ray.dir),
                        t: hit.t,
                        object_id: prim.object_id,
                        part,
                    }
                }
            }
        }
    }

    /// Render the full oracle view at pixel centers. Deterministic: identical
    /// scene and camera produce bit-identical images.
    pub fn render_view(&self, camera: &Camera) -> GroundTruthView {
        let width = camera.intrinsics.width;
        let height = camera.intrinsics.height;
        let forward = camera.pose.forward();
        let rows: Vec<Vec<(f32, [f32; 3], u32, u16)>> = (0..height)
            .into_par_iter()
            .map(|y| {
                let mut row = Vec::with_capacity(width as usize);
                for x in 0..width {
                    let ray = camera
                        .ray_for_pixel_index(x, y, (1e-4, f64::INFINITY))
                        .expect("pixel index is always in bounds");
                    let raw = self.trace_raw(&ray);
                    match raw {
                        None => row.push((
                            f32::INFINITY,
                            [self.background[0] as f32, self.background[1] as f32, self.background[2] as f32],
                            0,
                            0,
                        )),
                        Some(hit) => {
                            let z_depth = (hit.t * ray.dir.dot(&forward)) as f32;
                            if hit.prim_index == usize::MAX {
                                let ground = self.ground.as_ref().expect("ground hit implies ground present");
                                let rgb = self.shade(&ground.albedo, &hit.normal, &ray.dir);
                                row.push((z_depth, [rgb[0] as f32, rgb[1] as f32, rgb[2] as f32], ground.object_id, 0));
                            } else {
                                let prim = &self.primitives[hit.prim_index];
                                let point = ray.at(hit.t);
                                let part_idx = prim
                                    .parts
                                    .iter()
                                    .position(|p| p.region.contains(&point))
                                    .map_or(0u16, |i| i as u16 + 1);
                                let rgb = self.shade(&prim.albedo, &hit.normal, &ray.dir);
                                row.push((z_depth, [rgb[0] as f32, rgb[1] as f32, rgb[2] as f32], prim.object_id, part_idx));
                            }
                        }
                    }
                }
                row
            })
            .collect();

        let mut rgb = RgbImage::filled(width, height, [0.0; 3]);
        let mut depth = ScalarImage::filled(width, height, f32::INFINITY);
        let mut ids = IdImage::filled(width, height, 0);
        let mut parts = vec![0u16; (width * height) as usize];
        for (y, row) in rows.iter().enumerate() {
            for (x, (d, c, id, part)) in row.iter().enumerate() {
                let i = (y as u32 * width + x as u32) as usize;
                depth.data[i] = *d;
                rgb.data[i] = *c;
                ids.data[i] = *id;
                parts[i] = *part;
            }
        }
        let mut view = GroundTruthView { camera: *camera, rgb, depth, ids, parts, target_visible: BTreeMap::new() };
        let visible: BTreeMap<String, bool> = self
            .targets
            .keys()
            .map(|prompt| (prompt.clone(), view.target_mask(self, prompt).map_or(false, |m| m.iter().any(|v| *v))))
            .collect();
        view.target_visible = visible;
        view
    }

    /// Deterministic, near-uniform sample of the target's surface (the whole
    /// object surface, or the part region's portion of it).
    pub fn gt_target_points(&self, prompt_id: &str, count: usize) -> Result<Vec<Vector3<f64>>, SceneError> {
        let target = self.targets.get(prompt_id).ok_or_else(|| SceneError::UnknownPrompt(prompt_id.to_string()))?;
        let prim = self
            .primitive_by_id(target.object_id)
            .ok_or_else(|| SceneError::Validation(format!("target object_id {} missing", target.object_id)))?;
        let region = target.part.as_ref().and_then(|name| prim.parts.iter().find(|p| &p.name == name)).map(|p| &p.region);
        if target.part.is_some() && region.is_none() {
            return Err(SceneError::Validation(format!("part '{}' missing on object {}", target.part.clone().unwrap(), target.object_id)));
        }

        let mut base = count.max(16);
        for _ in 0..8 {
            let candidates = sample_shape_surface(&prim.shape, base);
            let filtered: Vec<Vector3<f64>> = match region {
                None => candidates,
                Some(region) => candidates.into_iter().filter(|p| region.contains(p)).collect(),
            };
            if filtered.len() >= count {
                // Evenly strided subset keeps the spatial spread of the
                // low-discrepancy parent set.
                let stride = filtered.len() as f64 / count as f64;
                return Ok((0..count).map(|i| filtered[(i as f64 * stride) as usize]).collect());
            }
            base *= 4;
        }
        Err(SceneError::Validation(format!("target '{prompt_id}' resolves to an empty surface region")))
    }

    /// Sensor-style degraded depth: holes around id-mask boundaries, random
    /// dropout, and additive gaussian noise. Deterministic per seed.
    pub fn simulate_sensor_depth(view: &GroundTruthView, noise: &SensorNoise) -> ScalarImage {
        assert!(noise.dropout >= 0.0 && noise.dropout <= 1.0, "dropout must be in [0, 1]");
        assert!(noise.sigma_m >= 0.0, "sigma must be non-negative");
        let mut depth = view.depth.clone();
        let (w, h) = (depth.width, depth.height);
        if noise.edge_hole_px > 0 {
            let r = noise.edge_hole_px as i64;
            for y in 0..h as i64 {
                for x in 0..w as i64 {
                    let id = view.ids.get(x as u32, y as u32);
                    'win: for dy in -r..=r {
                        for dx in -r..=r {
                            let (nx, ny) = (x + dx, y + dy);
                            if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                                continue;
                            }
                            if view.ids.get(nx as u32, ny as u32) != id {
                                depth.set(x as u32, y as u32, f32::INFINITY);
                                break 'win;
                            }
                        }
                    }
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        if noise.dropout > 0.0 {
            for v in depth.data.iter_mut() {
                if v.is_finite() && rng.gen::<f64>() < noise.dropout {
                    *v = f32::INFINITY;
                }
            }
        }
        if noise.sigma_m > 0.0 {
            let normal = Normal::new(0.0, noise.sigma_m).expect("sigma validated non-negative");
            for v in depth.data.iter_mut() {
                if v.is_finite() {
                    *v += normal.sample(&mut rng) as f32;
                }
            }
        }
        depth
    }
}

impl GroundTruthView {
    /// Boolean mask of pixels showing the named target (part-aware).
    pub fn target_mask(&self, scene: &SyntheticScene, prompt_id: &str) -> Result<Vec<bool>, SceneError> {
        let target = scene.targets.get(prompt_id).ok_or_else(|| SceneError::UnknownPrompt(prompt_id.to_string()))?;
        let part_index = match &target.part {
            None => None,
            Some(name) => {
                let prim = scene
                    .primitive_by_id(target.object_id)
                    .ok_or_else(|| SceneError::Validation(format!("target object_id {} missing", target.object_id)))?;
                Some(prim.parts.iter().position(|p| &p.name == name).ok_or_else(|| {
                    SceneError::Validation(format!("part '{name}' missing on object {}", target.object_id))
                })? as u16 + 1)
            }
        };
        Ok(self
            .ids
            .data
            .iter()
            .zip(self.parts.iter())
            .map(|(id, part)| *id == target.object_id && part_index.map_or(true, |want| *part == want))
            .collect())
    }

    /// Boolean mask of pixels showing the given object id (ignores parts).
    pub fn object_mask(&self, object_id: u32) -> Vec<bool> {
        self.ids.data.iter().map(|id| *id == object_id).collect()
    }

    /// Centroid of the 3D surface points visible under the target mask.
    pub fn visible_target_centroid(&self, scene: &SyntheticScene, prompt_id: &str) -> Result<Option<Vector3<f64>>, SceneError> {
        let mask = self.target_mask(scene, prompt_id)?;
        let mut sum = Vector3::zeros();
        let mut count = 0usize;
        for y in 0..self.depth.height {
            for x in 0..self.depth.width {
                let i = self.depth.index(x, y);
                if mask[i] {
                    let d = self.depth.data[i] as f64;
                    let p = self
                        .camera
                        .unproject(Vector2::new(x as f64 + 0.5, y as f64 + 0.5), d)
                        .expect("masked pixels have finite positive depth");
                    sum += p;
                    count += 1;
                }
            }
        }
        if count == 0 {
            Ok(None)
        } else {
            Ok(Some(sum / count as f64))
        }
    }
}

/// Near-uniform deterministic points on the surface of a shape.
fn sample_shape_surface(shape: &Shape, count: usize) -> Vec<Vector3<f64>> {
    const GOLDEN_ANGLE: f64 = 2.399963229728653; // pi * (3 - sqrt(5))
    match shape {
        Shape::Sphere { center, radius } => {
            // Fibonacci sphere.
            let c = Vector3::from(*center);
            (0..count)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).max(0.0).sqrt();
                    let phi = GOLDEN_ANGLE * i as f64;
                    c + Vector3::new(r * phi.cos(), r * phi.sin(), z) * *radius
                })
                .collect()
        }
        Shape::Cuboid { min, max } => {
            let ext = [max[0] - min[0], max[1] - min[1], max[2] - min[2]];
            // (fixed axis, value, u axis, v axis) per face.
            let faces = [
                (0, min[0], 1, 2),
                (0, max[0], 1, 2),
                (1, min[1], 0, 2),
                (1, max[1], 0, 2),
                (2, min[2], 0, 1),
                (2, max[2], 0, 1),
            ];
            let areas: Vec<f64> = faces.iter().map(|(_, _, u, v)| ext[*u] * ext[*v]).collect();
            let total: f64 = areas.iter().sum();
            let mut out = Vec::with_capacity(count + 8);
            for (face, area) in faces.iter().zip(areas.iter()) {
                let face_count = ((count as f64 * area / total).ceil() as usize).max(1);
                let cols = (face_count as f64).sqrt().ceil() as usize;
                let rows = face_count.div_ceil(cols);
                for r in 0..rows {
                    for cidx in 0..cols {
                        let fu = (cidx as f64 + 0.5) / cols as f64;
                        let fv = (r as f64 + 0.5) / rows as f64;
                        let mut p = [0.0; 3];
                        p[face.0] = face.1;
                        p[face.2] = min[face.2] + fu * ext[face.2];
                        p[face.3] = min[face.3] + fv * ext[face.3];
                        out.push(Vector3::from(p));
                    }
                }
            }
            out
        }
        Shape::Cylinder { center, z_min, z_max, radius } => {
            let height = z_max - z_min;
            let side_area = std::f64::consts::TAU * radius * height;
            let cap_area = std::f64::consts::PI * radius * radius;
            let total = side_area + 2.0 * cap_area;
            let mut out = Vec::with_capacity(count + 8);
            let side_count = ((count as f64 * side_area / total).ceil() as usize).max(1);
            let cols = ((side_count as f64).sqrt().ceil()) as usize;
            let rows = side_count.div_ceil(cols);
            for r in 0..rows {
                for c in 0..cols {
                    let phi = std::f64::consts::TAU * (c as f64 + 0.5) / cols as f64;
                    let z = z_min + height * (r as f64 + 0.5) / rows as f64;
                    out.push(Vector3::new(center[0] + radius * phi.cos(), center[1] + radius * phi.sin(), z));
                }
            }
            for (z, frac) in [(*z_min, cap_area / total), (*z_max, cap_area / total)] {
                let cap_count = ((count as f64 * frac).ceil() as usize).max(1);
                for i in 0..cap_count {
                    let rr = radius * ((i as f64 + 0.5) / cap_count as f64).sqrt();
                    let phi = GOLDEN_ANGLE * i as f64;
                    out.push(Vector3::new(center[0] + rr * phi.cos(), center[1] + rr * phi.sin(), z));
                }
            }
            out
        }
    }
}

//! LiDAR sweep simulation and encoding.
//!
//! A sweep is organized into an `r_h x r_v` grid of angular partitions: each
//! partition keeps its nearest return (arg-min over point distance), empty
//! partitions read as the truncation distance `d_max`. The grid becomes a
//! high-resolution grayscale image (values d/d_max) and, by 3x3 min-pooling,
//! the fixed 36x6 distance map that feeds the policy.

use nalgebra::Vector3;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image2d::Image;
use crate::world::{cast_ray, WorldState};

/// Distance-map output shape, fixed by the observation contract.
pub const MAP_W: usize = 36;
pub const MAP_H: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LidarConfig {
    /// Horizontal FOV bounds (low, high), radians.
    pub fov_h: (f64, f64),
    /// Vertical FOV bounds (low, high), radians.
    pub fov_v: (f64, f64),
    /// Grid resolution (azimuth, elevation).
    pub r_h: usize,
    pub r_v: usize,
    /// Truncation distance, m.
    pub d_max: f64,
    /// Relative-height keep band (low, high), m. Returns outside are dropped
    /// as ground/ceiling clutter.
    pub height_band: (f64, f64),
    /// Rays cast per partition in the simulated sweep.
    pub rays_per_partition: usize,
    /// Stratified jitter of ray directions inside each partition.
    pub jitter: bool,
}

impl Default for LidarConfig {
    fn default() -> Self {
        Self {
            fov_h: (-std::f64::consts::PI, std::f64::consts::PI),
            fov_v: (-7.0f64.to_radians(), 52.0f64.to_radians()),
            r_h: 108,
            r_v: 18,
            d_max: 10.0,
            height_band: (-0.5, 1.5),
            rays_per_partition: 1,
            jitter: true,
        }
    }
}

impl LidarConfig {
    /// Horizontal partition interval.
    pub fn i_h(&self) -> f64 {
        (self.fov_h.1 - self.fov_h.0) / self.r_h as f64
    }

    /// Vertical partition interval.
    pub fn i_v(&self) -> f64 {
        (self.fov_v.1 - self.fov_v.0) / self.r_v as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.fov_h.0 >= self.fov_h.1 || self.fov_v.0 >= self.fov_v.1 {
            return Err(Error::Config("lidar: FOV lows must be < highs".into()));
        }
        if !(self.d_max > 0.0) {
            return Err(Error::Config("lidar.d_max must be > 0".into()));
        }
        if self.r_h == 0 || self.r_v == 0 {
            return Err(Error::Config("lidar: grid resolution must be positive".into()));
        }
        if self.r_h % MAP_W != 0 || self.r_v % MAP_H != 0 {
            return Err(Error::Config(format!(
                "lidar: grid {}x{} must pool exactly onto the {}x{} distance map",
                self.r_h, self.r_v, MAP_W, MAP_H
            )));
        }
        if self.rays_per_partition == 0 {
            return Err(Error::Config("lidar.rays_per_partition must be >= 1".into()));
        }
        if self.height_band.0 >= self.height_band.1 {
            return Err(Error::Config("lidar.height_band low must be < high".into()));
        }
        Ok(())
    }
}

/// One LiDAR sweep: body-frame points with the sensor at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanFrame {
    pub points: Vec<Vector3<f64>>,
    pub timestamp: f64,
}

impl ScanFrame {
    /// Build a frame from raw points, keeping only returns inside the FOV,
    /// within d_max, and inside the relative height band.
    pub fn from_points(points: impl IntoIterator<Item = Vector3<f64>>, cfg: &LidarConfig, timestamp: f64) -> Self {
        let kept = points
            .into_iter()
            .filter(|p| {
                let d = p.norm();
                d > 0.0
                    && d <= cfg.d_max
                    && p.z >= cfg.height_band.0
                    && p.z <= cfg.height_band.1
                    && partition_index(p, cfg).is_ok()
            })
            .collect();
        Self { points: kept, timestamp }
    }

    /// Hit distances of every return.
    pub fn distances(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.norm()).collect()
    }
}

/// Angular partition of a point: 1-based (m, n, s) with s = r_h·(n-1) + m.
///
/// Azimuth uses the two-argument arctangent, so the full circle is covered;
/// a point exactly on a partition edge belongs to the cell whose interval
/// ends there (ceil), and the FOV extremes fall to the first/last cell.
pub fn partition_index(p: &Vector3<f64>, cfg: &LidarConfig) -> Result<(usize, usize, usize)> {
    let d = p.norm();
    if d <= 0.0 {
        return Err(Error::OutOfFov);
    }
    let theta_h = p.y.atan2(p.x);
    let theta_v = (p.z / d).asin();
    if theta_h < cfg.fov_h.0 || theta_h > cfg.fov_h.1 || theta_v < cfg.fov_v.0 || theta_v > cfg.fov_v.1 {
        return Err(Error::OutOfFov);
    }
    let m = (((theta_h - cfg.fov_h.0) / cfg.i_h()).ceil() as isize).clamp(1, cfg.r_h as isize) as usize;
    let n = (((theta_v - cfg.fov_v.0) / cfg.i_v()).ceil() as isize).clamp(1, cfg.r_v as isize) as usize;
    Ok((m, n, cfg.r_h * (n - 1) + m))
}

/// One partition of the raycast grid: representative (nearest) point and its
/// distance; empty partitions read d_max.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub point: Option<Vector3<f64>>,
    pub distance: f64,
}

/// The ordered point set: r_h x r_v partitions, azimuth-major layout
/// (index = (n-1)·r_h + (m-1)).
#[derive(Debug, Clone, PartialEq)]
pub struct RaycastGrid {
    pub r_h: usize,
    pub r_v: usize,
    pub d_max: f64,
    pub cells: Vec<GridCell>,
}

impl RaycastGrid {
    #[inline]
    pub fn cell(&self, m: usize, n: usize) -> &GridCell {
        &self.cells[(n - 1) * self.r_h + (m - 1)]
    }
}

/// Organize a frame into the raycast grid: per-partition arg-min by
/// distance, ties broken by input order.
pub fn encode_raycast_grid(frame: &ScanFrame, cfg: &LidarConfig) -> RaycastGrid {
    let mut cells = vec![GridCell { point: None, distance: cfg.d_max }; cfg.r_h * cfg.r_v];
    for p in &frame.points {
        let Ok((m, n, _)) = partition_index(p, cfg) else {
            continue; // out-of-FOV points violate the frame invariant; skip
        };
        let d = p.norm();
        if d > cfg.d_max {
            continue;
        }
        let cell = &mut cells[(n - 1) * cfg.r_h + (m - 1)];
        if d < cell.distance {
            cell.distance = d;
            cell.point = Some(*p);
        }
    }
    RaycastGrid { r_h: cfg.r_h, r_v: cfg.r_v, d_max: cfg.d_max, cells }
}

/// 36x6 grid of nearest-obstacle distances, meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMap {
    /// Distances in meters, width = azimuth (36), height = elevation (6).
    pub meters: Image,
    pub d_max: f64,
}

impl DistanceMap {
    /// Normalized view in [0, 1] as d / d_max.
    pub fn normalized(&self) -> Image {
        self.meters.scaled(1.0 / self.d_max)
    }
}

/// Encode the grid into the high-resolution grayscale image (d/d_max) and
/// the min-pooled 36x6 distance map. Azimuth maps to image width, elevation
/// to height.
pub fn encode_distance_map(grid: &RaycastGrid) -> (Image, DistanceMap) {
    let mut meters = Image::zeros(grid.r_h, grid.r_v);
    for n in 1..=grid.r_v {
        for m in 1..=grid.r_h {
            meters.set(m - 1, n - 1, grid.cell(m, n).distance);
        }
    }
    let gray = meters.scaled(1.0 / grid.d_max);
    let pooled = meters.min_pool(grid.r_h / MAP_W, grid.r_v / MAP_H);
    (gray, DistanceMap { meters: pooled, d_max: grid.d_max })
}

/// Simulate a sweep: `rays_per_partition` stratified rays per partition
/// (jitter seeded through `rng`), returns within d_max become body-frame
/// points, points outside the relative height band are dropped.
pub fn scan(world: &WorldState, cfg: &LidarConfig, rng: &mut impl Rng) -> ScanFrame {
    let origin = world.quad.p;
    let i_h = cfg.i_h();
    let i_v = cfg.i_v();
    let mut points = Vec::new();

    // Azimuth prefilter: per-obstacle angular cone as seen from the sensor.
    // A generous half-width keeps this a pure optimization.
    let cones: Vec<(f64, f64)> = world
        .obstacles
        .iter()
        .map(|ob| {
            let dx = ob.p.x - origin.x;
            let dy = ob.p.y - origin.y;
            let dist = (dx * dx + dy * dy).sqrt();
            let r = ob.horizontal_radius() * 1.01 + 1e-6;
            if dist <= r {
                (0.0, std::f64::consts::PI) // sensor inside footprint: test all
            } else {
                (dy.atan2(dx), (r / dist).asin() + 1e-3)
            }
        })
        .collect();

    for n in 0..cfg.r_v {
        for m in 0..cfg.r_h {
            for _ in 0..cfg.rays_per_partition {
                let (u, v) = if cfg.jitter {
                    (rng.random::<f64>(), rng.random::<f64>())
                } else {
                    (0.5, 0.5)
                };
                let th = cfg.fov_h.0 + (m as f64 + u) * i_h;
                let tv = cfg.fov_v.0 + (n as f64 + v) * i_v;
                let (sh, ch) = th.sin_cos();
                let (sv, cv) = tv.sin_cos();
                let dir = Vector3::new(cv * ch, cv * sh, sv);

                let mut nearest: Option<f64> = None;
                for (ob, (az, half)) in world.obstacles.iter().zip(&cones) {
                    if *half < std::f64::consts::PI {
                        let mut dth = th - az;
                        while dth > std::f64::consts::PI {
                            dth -= 2.0 * std::f64::consts::PI;
                        }
                        while dth < -std::f64::consts::PI {
                            dth += 2.0 * std::f64::consts::PI;
                        }
                        if dth.abs() > *half {
                            continue;
                        }
                    }
                    if let Some(t) = ob_ray(ob, &origin, &dir) {
                        if t <= cfg.d_max && nearest.is_none_or(|b| t < b) {
                            nearest = Some(t);
                        }
                    }
                }
                if let Some(t) = nearest {
                    let p = dir * t;
                    if p.z >= cfg.height_band.0 && p.z <= cfg.height_band.1 {
                        points.push(p);
                    }
                }
            }
        }
    }
    ScanFrame { points, timestamp: world.quad.t }
}

fn ob_ray(ob: &crate::world::Obstacle, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<f64> {
    use crate::world::ObstacleShape;
    match ob.shape {
        ObstacleShape::Cylinder { radius, half_height } => {
            crate::geom::ray_cylinder(origin, dir, &ob.p, radius, half_height)
        }
        ObstacleShape::Cuboid { half_extents } => {
            crate::geom::ray_box(origin, dir, &(ob.p - half_extents), &(ob.p + half_extents))
        }
    }
}

/// Full-scan convenience without the prefilter, for tests.
pub fn scan_reference(world: &WorldState, cfg: &LidarConfig, rng: &mut impl Rng) -> ScanFrame {
    let origin = world.quad.p;
    let i_h = cfg.i_h();
    let i_v = cfg.i_v();
    let mut points = Vec::new();
    for n in 0..cfg.r_v {
        for m in 0..cfg.r_h {
            for _ in 0..cfg.rays_per_partition {
                let (u, v) = if cfg.jitter { (rng.random::<f64>(), rng.random::<f64>()) } else { (0.5, 0.5) };
                let th = cfg.fov_h.0 + (m as f64 + u) * i_h;
                let tv = cfg.fov_v.0 + (n as f64 + v) * i_v;
                let (sh, ch) = th.sin_cos();
                let (sv, cv) = tv.sin_cos();
                let dir = Vector3::new(cv * ch, cv * sh, sv);
                if let Some(t) = cast_ray(world, &origin, &dir, cfg.d_max) {
                    let p = dir * t;
                    if p.z >= cfg.height_band.0 && p.z <= cfg.height_band.1 {
                        points.push(p);
                    }
                }
            }
        }
    }
    ScanFrame { points, timestamp: world.quad.t }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{Obstacle, ObstacleShape, SamplerSpec, ScenarioSpec, WorldState};
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> LidarConfig {
        LidarConfig::default()
    }

    #[test]
    fn partition_of_forward_point_matches_formula() {
        // 360 degree FOV, r_h = 108: theta_h = 0 has ratio exactly 54.
        let (m, n, s) = partition_index(&Vector3::new(1.0, 0.0, 0.0), &cfg()).unwrap();
        assert_eq!(m, 54);
        // theta_v = 0 with F_Vl = -7deg, i_v = 59/18 deg: ratio 2.13 -> n = 3.
        assert_eq!(n, 3);
        assert_eq!(s, 108 * (n - 1) + m);
    }

    #[test]
    fn partition_lower_corner() {
        let c = cfg();
        let eps = 1e-9;
        let th = c.fov_h.0 + eps;
        let tv = c.fov_v.0 + eps;
        let p = Vector3::new(th.cos() * tv.cos(), th.sin() * tv.cos(), tv.sin());
        let (m, n, s) = partition_index(&p, &c).unwrap();
        assert_eq!((m, n, s), (1, 1, 1));
    }

    #[test]
    fn fov_maximum_falls_to_last_cell() {
        let c = LidarConfig { fov_h: (-1.0, 1.0), ..cfg() };
        // Elevation just inside the top of the FOV lands in the last row.
        let tv = c.fov_v.1 - 1e-12;
        let th = 0.3f64;
        let p = Vector3::new(th.cos() * tv.cos(), th.sin() * tv.cos(), tv.sin());
        let (_, n, _) = partition_index(&p, &c).unwrap();
        assert_eq!(n, c.r_v);
        // Azimuth just inside the high bound lands in the last column.
        let th = c.fov_h.1 - 1e-12;
        let tv = 0.1f64;
        let p = Vector3::new(th.cos() * tv.cos(), th.sin() * tv.cos(), tv.sin());
        let (m, _, _) = partition_index(&p, &c).unwrap();
        assert_eq!(m, c.r_h);
    }

    #[test]
    fn out_of_fov_rejected() {
        let c = LidarConfig { fov_v: (-0.1, 0.5), ..cfg() };
        assert!(partition_index(&Vector3::new(1.0, 0.0, 5.0), &c).is_err());
        assert!(partition_index(&Vector3::zeros(), &c).is_err());
    }

    #[test]
    fn nearest_point_wins_partition() {
        let c = cfg();
        let p_near = Vector3::new(3.0, 0.0, 0.0);
        let p_far = Vector3::new(5.0, 1e-6, 0.0); // same partition, farther
        let frame = ScanFrame { points: vec![p_far, p_near], timestamp: 0.0 };
        let grid = encode_raycast_grid(&frame, &c);
        let (m, n, _) = partition_index(&p_near, &c).unwrap();
        assert_eq!(grid.cell(m, n).distance, 3.0);
        assert_eq!(grid.cell(m, n).point, Some(p_near));
    }

    #[test]
    fn empty_frame_encodes_to_d_max() {
        let c = cfg();
        let grid = encode_raycast_grid(&ScanFrame { points: vec![], timestamp: 0.0 }, &c);
        assert!(grid.cells.iter().all(|cell| cell.distance == c.d_max && cell.point.is_none()));
        let (gray, dm) = encode_distance_map(&grid);
        assert!(gray.data.iter().all(|v| *v == 1.0));
        assert!(dm.meters.data.iter().all(|v| *v == c.d_max));
        assert!(dm.normalized().data.iter().all(|v| *v == 1.0));
    }

    #[test]
    fn min_pool_is_local() {
        let c = cfg();
        let p = Vector3::new(2.0, 0.0, 0.0);
        let frame = ScanFrame { points: vec![p], timestamp: 0.0 };
        let grid = encode_raycast_grid(&frame, &c);
        let (_, dm) = encode_distance_map(&grid);
        let low: Vec<_> = dm.meters.data.iter().filter(|v| **v < c.d_max).collect();
        assert_eq!(low.len(), 1);
        assert_eq!(*low[0], 2.0);
    }

    #[test]
    fn empty_world_scans_empty() {
        let spec = ScenarioSpec {
            sampler: SamplerSpec { n_static_columns: 0, n_dynamic: 0, ..Default::default() },
            ..Default::default()
        };
        let world = WorldState::init(&spec.materialize(1));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let frame = scan(&world, &cfg(), &mut rng);
        assert!(frame.points.is_empty());
    }

    #[test]
    fn single_cylinder_confines_azimuth() {
        use crate::world::{FieldBounds, QuadState, Scenario};
        use nalgebra::Vector2;
        let cylinder = Obstacle::fixed(
            ObstacleShape::Cylinder { radius: 1.0, half_height: 1.5 },
            Vector3::new(4.0, 0.0, 1.5),
        );
        let sc = Scenario {
            field: FieldBounds { min: Vector2::new(-6.0, -4.0), max: Vector2::new(6.0, 4.0) },
            start: Vector3::new(0.0, 0.0, 1.5),
            goal: Vector3::new(5.0, 0.0, 1.5),
            quad_radius: 0.2,
            seed: 0,
            obstacles: vec![cylinder],
        };
        let mut world = WorldState::init(&sc);
        world.quad = QuadState::at(Vector3::new(0.0, 0.0, 1.5));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let c = cfg();
        let frame = scan(&world, &c, &mut rng);
        assert!(!frame.points.is_empty());
        // Angular half-width of a radius-1 cylinder at 4 m: asin(1/4).
        let half = (1.0f64 / 4.0).asin();
        for p in &frame.points {
            let az = p.y.atan2(p.x);
            assert!(az.abs() <= half + 1e-9, "azimuth {az} beyond {half}");
        }
    }

    #[test]
    fn prefilter_matches_reference_scan() {
        let spec = ScenarioSpec::default();
        for seed in 0..5 {
            let world = WorldState::init(&spec.materialize(seed));
            let c = cfg();
            let mut r1 = ChaCha8Rng::seed_from_u64(99);
            let mut r2 = ChaCha8Rng::seed_from_u64(99);
            let a = scan(&world, &c, &mut r1);
            let b = scan_reference(&world, &c, &mut r2);
            assert_eq!(a, b, "seed {seed}");
        }
    }

    #[test]
    fn jitter_off_caps_point_count() {
        let spec = ScenarioSpec::default();
        let world = WorldState::init(&spec.materialize(2));
        let c = LidarConfig { jitter: false, ..cfg() };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let frame = scan(&world, &c, &mut rng);
        assert!(frame.points.len() <= c.r_h * c.r_v);
    }
}

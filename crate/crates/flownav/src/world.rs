//! Geometric world and kinematics: the quadrotor double integrator, static
//! and moving obstacles, scenario sampling, ray/distance queries, and the
//! episode termination rules.
//!
//! A [`WorldState`] is an immutable-after-step value: [`step`] consumes a
//! reference and returns the successor state, so independent environments can
//! advance in parallel without shared mutation.

use nalgebra::{Vector2, Vector3};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom;

/// Quadrotor kinematic state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadState {
    /// Position, meters.
    pub p: Vector3<f64>,
    /// Velocity, m/s.
    pub v: Vector3<f64>,
    /// Previously applied acceleration command, m/s².
    pub a_last: Vector3<f64>,
    /// Simulation time, seconds.
    pub t: f64,
}

impl QuadState {
    pub fn at(p: Vector3<f64>) -> Self {
        Self { p, v: Vector3::zeros(), a_last: Vector3::zeros(), t: 0.0 }
    }
}

/// Obstacle geometry, centered on the obstacle pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ObstacleShape {
    Cylinder { radius: f64, half_height: f64 },
    Cuboid { half_extents: Vector3<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObstacleKind {
    Static,
    Dynamic,
}

/// Motion law of an obstacle. Uniform-linear positions are evaluated in
/// closed form from the spawn pose (with analytic reflection folding at the
/// field boundary), so they accumulate no integration error. Curved motion
/// integrates per tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum MotionLaw {
    Fixed,
    UniformLinear {
        p0: Vector3<f64>,
        v0: Vector3<f64>,
    },
    /// Constant turn-rate heading with sinusoidal speed modulation, speed
    /// clamped to [0, 5] m/s.
    Curved {
        speed_base: f64,
        speed_amp: f64,
        speed_period: f64,
        turn_rate: f64,
        heading0: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub shape: ObstacleShape,
    pub kind: ObstacleKind,
    pub motion: MotionLaw,
    /// Current center position.
    pub p: Vector3<f64>,
    /// Current velocity (zero for static obstacles).
    pub v: Vector3<f64>,
    /// Current heading for curved motion; unused otherwise.
    heading: f64,
}

impl Obstacle {
    pub fn fixed(shape: ObstacleShape, p: Vector3<f64>) -> Self {
        Self { shape, kind: ObstacleKind::Static, motion: MotionLaw::Fixed, p, v: Vector3::zeros(), heading: 0.0 }
    }

    pub fn uniform_linear(shape: ObstacleShape, p0: Vector3<f64>, v0: Vector3<f64>) -> Self {
        Self {
            shape,
            kind: ObstacleKind::Dynamic,
            motion: MotionLaw::UniformLinear { p0, v0 },
            p: p0,
            v: v0,
            heading: 0.0,
        }
    }

    pub fn curved(
        shape: ObstacleShape,
        p0: Vector3<f64>,
        speed_base: f64,
        speed_amp: f64,
        speed_period: f64,
        turn_rate: f64,
        heading0: f64,
    ) -> Self {
        let speed = curved_speed(speed_base, speed_amp, speed_period, 0.0);
        Self {
            shape,
            kind: ObstacleKind::Dynamic,
            motion: MotionLaw::Curved { speed_base, speed_amp, speed_period, turn_rate, heading0 },
            p: p0,
            v: Vector3::new(speed * heading0.cos(), speed * heading0.sin(), 0.0),
            heading: heading0,
        }
    }

    /// Signed distance from `p` to this obstacle's surface (negative inside).
    pub fn surface_distance(&self, p: &Vector3<f64>) -> f64 {
        match self.shape {
            ObstacleShape::Cylinder { radius, half_height } => {
                geom::sdf_cylinder(p, &self.p, radius, half_height)
            }
            ObstacleShape::Cuboid { half_extents } => {
                geom::sdf_box(p, &(self.p - half_extents), &(self.p + half_extents))
            }
        }
    }

    fn ray_hit(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<f64> {
        match self.shape {
            ObstacleShape::Cylinder { radius, half_height } => {
                geom::ray_cylinder(origin, dir, &self.p, radius, half_height)
            }
            ObstacleShape::Cuboid { half_extents } => {
                geom::ray_box(origin, dir, &(self.p - half_extents), &(self.p + half_extents))
            }
        }
    }

    /// Bounding radius in the xy plane, used by the scan prefilter.
    pub fn horizontal_radius(&self) -> f64 {
        match self.shape {
            ObstacleShape::Cylinder { radius, .. } => radius,
            ObstacleShape::Cuboid { half_extents } => {
                (half_extents.x * half_extents.x + half_extents.y * half_extents.y).sqrt()
            }
        }
    }

    fn advance(&mut self, t_next: f64, dt: f64, field: &FieldBounds) {
        match self.motion {
            MotionLaw::Fixed => {}
            MotionLaw::UniformLinear { p0, v0 } => {
                let (px, sx) = reflect_fold(p0.x + v0.x * t_next, field.min.x, field.max.x);
                let (py, sy) = reflect_fold(p0.y + v0.y * t_next, field.min.y, field.max.y);
                self.p = Vector3::new(px, py, p0.z + v0.z * t_next);
                self.v = Vector3::new(sx * v0.x, sy * v0.y, v0.z);
            }
            MotionLaw::Curved { speed_base, speed_amp, speed_period, turn_rate, .. } => {
                let speed = curved_speed(speed_base, speed_amp, speed_period, t_next);
                self.heading += turn_rate * dt;
                let mut vx = speed * self.heading.cos();
                let mut vy = speed * self.heading.sin();
                let mut px = self.p.x + vx * dt;
                let mut py = self.p.y + vy * dt;
                // Mirror the heading on boundary contact.
                if px < field.min.x || px > field.max.x {
                    self.heading = std::f64::consts::PI - self.heading;
                    vx = -vx;
                    px = px.clamp(field.min.x, field.max.x);
                }
                if py < field.min.y || py > field.max.y {
                    self.heading = -self.heading;
                    vy = -vy;
                    py = py.clamp(field.min.y, field.max.y);
                }
                self.p = Vector3::new(px, py, self.p.z);
                self.v = Vector3::new(vx, vy, 0.0);
            }
        }
    }
}

fn curved_speed(base: f64, amp: f64, period: f64, t: f64) -> f64 {
    (base + amp * (2.0 * std::f64::consts::PI * t / period).sin()).clamp(0.0, 5.0)
}

/// Fold an unbounded coordinate into [lo, hi] by reflection. Returns the
/// folded coordinate and the velocity sign (+1 outbound leg, -1 return leg).
fn reflect_fold(q: f64, lo: f64, hi: f64) -> (f64, f64) {
    let span = hi - lo;
    if span <= 0.0 {
        return (lo, 1.0);
    }
    let period = 2.0 * span;
    let mut u = (q - lo) % period;
    if u < 0.0 {
        u += period;
    }
    if u <= span {
        (lo + u, 1.0)
    } else {
        (lo + period - u, -1.0)
    }
}

/// Horizontal field bounds; obstacles reflect off these.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldBounds {
    pub min: Vector2<f64>,
    pub max: Vector2<f64>,
}

impl FieldBounds {
    pub fn contains_xy(&self, p: &Vector3<f64>) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

/// Simulation step configuration and termination limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Step duration, seconds (50 Hz tick).
    pub dt: f64,
    /// Reference speed, m/s.
    pub v_ref: f64,
    /// Reference acceleration, m/s².
    pub a_ref: f64,
    /// Velocity limit multiplier for early termination.
    pub vel_limit_mult: f64,
    /// Acceleration limit multiplier for early termination.
    pub acc_limit_mult: f64,
    /// Half-width of the allowed corridor around the start-goal segment, m.
    pub corridor_half_width: f64,
    /// Extra clearance added to the quad radius for crash detection, m.
    pub collision_margin: f64,
    /// Goal acceptance radius, m.
    pub goal_radius: f64,
    /// Allowed flight height band, m.
    pub h_min: f64,
    pub h_max: f64,
    /// Episode length cap, ticks.
    pub max_episode_ticks: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.02,
            v_ref: 3.0,
            a_ref: 6.0,
            vel_limit_mult: 1.2,
            acc_limit_mult: 1.5,
            corridor_half_width: 5.0,
            collision_margin: 0.05,
            goal_radius: 1.0,
            h_min: 0.5,
            h_max: 2.5,
            max_episode_ticks: 600,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::Config("sim.dt must be > 0".into()));
        }
        if !(self.v_ref > 0.0) || !(self.a_ref > 0.0) {
            return Err(Error::Config("sim.v_ref and sim.a_ref must be > 0".into()));
        }
        if self.h_min >= self.h_max {
            return Err(Error::Config("sim.h_min must be < sim.h_max".into()));
        }
        Ok(())
    }
}

/// One tick of the world: quadrotor state plus all obstacle poses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub quad: QuadState,
    pub obstacles: Vec<Obstacle>,
    pub tick: u64,
}

impl WorldState {
    pub fn init(scenario: &Scenario) -> Self {
        Self {
            quad: QuadState::at(scenario.start),
            obstacles: scenario.obstacles.clone(),
            tick: 0,
        }
    }

    pub fn dynamic_obstacles(&self) -> impl Iterator<Item = &Obstacle> {
        self.obstacles.iter().filter(|o| o.kind == ObstacleKind::Dynamic)
    }
}

/// Advance the world by one tick under acceleration command `a`.
///
/// The quadrotor is an exact double integrator: p += v·dt + a·dt²/2,
/// v += a·dt. Obstacles advance per their motion laws.
pub fn step(world: &WorldState, a: &Vector3<f64>, cfg: &SimConfig, field: &FieldBounds) -> Result<WorldState> {
    if !a.iter().all(|c| c.is_finite()) {
        return Err(Error::InvalidAction(format!("non-finite acceleration {a:?}")));
    }
    let dt = cfg.dt;
    // Time derives from the tick count, not accumulation, so closed-form
    // obstacle motion is exact at every tick.
    let t_next = (world.tick + 1) as f64 * dt;
    let quad = QuadState {
        p: world.quad.p + world.quad.v * dt + a * (0.5 * dt * dt),
        v: world.quad.v + a * dt,
        a_last: *a,
        t: t_next,
    };
    let mut obstacles = world.obstacles.clone();
    for ob in &mut obstacles {
        ob.advance(t_next, dt, field);
    }
    Ok(WorldState { quad, obstacles, tick: world.tick + 1 })
}

/// Cast a ray against every obstacle; returns the nearest hit distance
/// within `d_max`, or `None` for a miss.
pub fn cast_ray(world: &WorldState, origin: &Vector3<f64>, dir: &Vector3<f64>, d_max: f64) -> Option<f64> {
    debug_assert!((dir.norm() - 1.0).abs() < 1e-9, "direction must be unit length");
    let mut best: Option<f64> = None;
    for ob in &world.obstacles {
        if let Some(t) = ob.ray_hit(origin, dir) {
            if t <= d_max && best.is_none_or(|b| t < b) {
                best = Some(t);
            }
        }
    }
    best
}

/// Minimum signed distance from `p` to any obstacle surface.
pub fn nearest_surface_distance(world: &WorldState, p: &Vector3<f64>) -> f64 {
    world
        .obstacles
        .iter()
        .map(|o| o.surface_distance(p))
        .fold(f64::INFINITY, f64::min)
}

/// Minimum signed surface distance over dynamic obstacles only.
pub fn nearest_dynamic_surface_distance(world: &WorldState, p: &Vector3<f64>) -> f64 {
    world
        .dynamic_obstacles()
        .map(|o| o.surface_distance(p))
        .fold(f64::INFINITY, f64::min)
}

/// Episode termination classification, in priority order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationKind {
    Running,
    Success,
    Crash,
    StateLimit,
    CorridorExit,
    Timeout,
}

impl TerminationKind {
    pub fn is_terminal(&self) -> bool {
        *self != TerminationKind::Running
    }
}

/// Classify the current world state. Priority: crash > state-limit >
/// corridor-exit > success > timeout.
pub fn check_termination(world: &WorldState, cfg: &SimConfig, scenario: &Scenario) -> TerminationKind {
    let q = &world.quad;
    if nearest_surface_distance(world, &q.p) < scenario.quad_radius + cfg.collision_margin {
        return TerminationKind::Crash;
    }
    if q.v.norm() > cfg.vel_limit_mult * cfg.v_ref
        || q.a_last.norm() > cfg.acc_limit_mult * cfg.a_ref
        || q.p.z < cfg.h_min
        || q.p.z > cfg.h_max
    {
        return TerminationKind::StateLimit;
    }
    if geom::point_segment_distance_xy(&q.p, &scenario.start, &scenario.goal) > cfg.corridor_half_width {
        return TerminationKind::CorridorExit;
    }
    if (q.p - scenario.goal).norm() <= cfg.goal_radius {
        return TerminationKind::Success;
    }
    if world.tick >= cfg.max_episode_ticks {
        return TerminationKind::Timeout;
    }
    TerminationKind::Running
}

/// A concrete, fully materialized scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub field: FieldBounds,
    pub start: Vector3<f64>,
    pub goal: Vector3<f64>,
    pub quad_radius: f64,
    pub seed: u64,
    pub obstacles: Vec<Obstacle>,
}

impl Scenario {
    pub fn validate(&self, speed_range: Option<(f64, f64)>) -> Result<()> {
        if !self.field.contains_xy(&self.start) || !self.field.contains_xy(&self.goal) {
            return Err(Error::Scenario("start and goal must lie inside the field".into()));
        }
        if !(self.quad_radius > 0.0) {
            return Err(Error::Scenario("quad_radius must be > 0".into()));
        }
        for (i, ob) in self.obstacles.iter().enumerate() {
            match ob.shape {
                ObstacleShape::Cylinder { radius, half_height } => {
                    if !(radius > 0.0) || !(half_height > 0.0) {
                        return Err(Error::Scenario(format!("obstacle {i}: cylinder extents must be > 0")));
                    }
                }
                ObstacleShape::Cuboid { half_extents } => {
                    if !half_extents.iter().all(|h| *h > 0.0) {
                        return Err(Error::Scenario(format!("obstacle {i}: box min corner must be < max corner")));
                    }
                }
            }
            if ob.kind == ObstacleKind::Static && ob.v.norm() != 0.0 {
                return Err(Error::Scenario(format!("obstacle {i}: static obstacles must not move")));
            }
            if ob.kind == ObstacleKind::Dynamic {
                if let Some((lo, hi)) = speed_range {
                    let s = ob.v.norm();
                    if s < lo - 1e-9 || s > hi + 1e-9 {
                        return Err(Error::Scenario(format!(
                            "obstacle {i}: speed {s:.3} outside configured range [{lo}, {hi}]"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Explicit obstacle description as written in scenario files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSpec {
    pub shape: ObstacleShape,
    pub kind: ObstacleKind,
    /// Center position.
    pub center: Vector3<f64>,
    /// Initial velocity (dynamic only; defaults to zero).
    #[serde(default)]
    pub velocity: Option<Vector3<f64>>,
}

/// Obstacle sampler bounds for randomized scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSpec {
    pub n_static_columns: usize,
    pub n_walls: usize,
    pub n_dynamic: usize,
    /// Static column radius range, m.
    pub column_radius: (f64, f64),
    /// Dynamic cylinder radius range, m.
    pub dynamic_radius: (f64, f64),
    /// Dynamic obstacle speed range, m/s.
    pub speed_range: (f64, f64),
    /// Dynamic motion family: uniform-linear (training) or curved (eval).
    pub curved_motion: bool,
    /// Lateral band around the course from which dynamic obstacles launch, m.
    pub launch_offset: (f64, f64),
    /// Start/goal lateral jitter, m.
    pub start_jitter: f64,
}

impl Default for SamplerSpec {
    fn default() -> Self {
        Self {
            n_static_columns: 3,
            n_walls: 0,
            n_dynamic: 3,
            column_radius: (0.3, 0.6),
            dynamic_radius: (0.3, 0.5),
            speed_range: (1.0, 2.0),
            curved_motion: false,
            launch_offset: (1.5, 3.5),
            start_jitter: 1.5,
        }
    }
}

/// Scenario description as loaded from a file: field geometry, start/goal,
/// explicit obstacles, and sampler bounds. `materialize` turns it into a
/// concrete [`Scenario`] deterministically from a seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    /// Field extents: min and max corner in xy, m.
    pub field_min: Vector2<f64>,
    pub field_max: Vector2<f64>,
    pub start: Vector3<f64>,
    pub goal: Vector3<f64>,
    pub quad_radius: f64,
    pub seed: u64,
    /// Obstacle ceiling height (cylinders span [0, column_height]).
    pub column_height: f64,
    pub obstacles: Vec<ObstacleSpec>,
    pub sampler: SamplerSpec,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            field_min: Vector2::new(-6.0, -4.0),
            field_max: Vector2::new(6.0, 4.0),
            start: Vector3::new(-5.0, 0.0, 1.5),
            goal: Vector3::new(5.0, 0.0, 1.5),
            quad_radius: 0.2,
            seed: 0,
            column_height: 3.0,
            obstacles: Vec::new(),
            sampler: SamplerSpec::default(),
        }
    }
}

impl ScenarioSpec {
    pub fn field(&self) -> FieldBounds {
        FieldBounds { min: self.field_min, max: self.field_max }
    }

    /// Build the concrete scenario for `seed`. Identical seeds produce
    /// identical scenarios. Explicit obstacles come first, sampled ones
    /// after, in a fixed draw order.
    pub fn materialize(&self, seed: u64) -> Scenario {
        let field = self.field();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = &self.sampler;

        // Start and goal are placed centrosymmetrically about the field
        // center, with lateral jitter and a random end swap.
        let center = Vector3::new(
            0.5 * (field.min.x + field.max.x),
            0.5 * (field.min.y + field.max.y),
            self.start.z,
        );
        let jitter = if s.start_jitter > 0.0 {
            rng.random_range(-s.start_jitter..=s.start_jitter)
        } else {
            0.0
        };
        let flip = rng.random_bool(0.5);
        let mut start = Vector3::new(self.start.x, self.start.y + jitter, self.start.z);
        let mut goal = center * 2.0 - start;
        goal.z = self.goal.z;
        if flip {
            std::mem::swap(&mut start, &mut goal);
        }

        let mut obstacles: Vec<Obstacle> = Vec::new();
        for spec in &self.obstacles {
            let v = spec.velocity.unwrap_or_else(Vector3::zeros);
            let ob = match (spec.kind, spec.shape) {
                (ObstacleKind::Static, shape) => Obstacle::fixed(shape, spec.center),
                (ObstacleKind::Dynamic, shape) => Obstacle::uniform_linear(shape, spec.center, v),
            };
            obstacles.push(ob);
        }

        let col_z = 0.5 * self.column_height;
        let clear = |p: &Vector3<f64>, r: f64, start: &Vector3<f64>, goal: &Vector3<f64>| {
            let sxy = Vector2::new(start.x, start.y);
            let gxy = Vector2::new(goal.x, goal.y);
            let pxy = Vector2::new(p.x, p.y);
            (pxy - sxy).norm() > r + 1.2 && (pxy - gxy).norm() > r + 1.2
        };

        // Static columns scattered along the course.
        let mut placed = 0;
        let mut attempts = 0;
        while placed < s.n_static_columns && attempts < 200 {
            attempts += 1;
            let x = rng.random_range(field.min.x + 1.0..field.max.x - 1.0);
            let y = rng.random_range(field.min.y + 0.5..field.max.y - 0.5);
            let r = rng.random_range(s.column_radius.0..=s.column_radius.1);
            let p = Vector3::new(x, y, col_z);
            if !clear(&p, r, &start, &goal) {
                continue;
            }
            let course = geom::point_segment_distance_xy(&p, &start, &goal);
            if course > 3.0 {
                continue; // keep columns near the course so they matter
            }
            obstacles.push(Obstacle::fixed(
                ObstacleShape::Cylinder { radius: r, half_height: col_z },
                p,
            ));
            placed += 1;
        }

        // Walls: boxes standing at course height.
        for _ in 0..s.n_walls {
            let x = rng.random_range(field.min.x + 2.0..field.max.x - 2.0);
            let y = rng.random_range(field.min.y + 1.0..field.max.y - 1.0);
            let w = rng.random_range(0.8..1.6);
            let p = Vector3::new(x, y, col_z);
            if !clear(&p, w, &start, &goal) {
                continue;
            }
            obstacles.push(Obstacle::fixed(
                ObstacleShape::Cuboid { half_extents: Vector3::new(0.15, w, col_z) },
                p,
            ));
        }

        // Dynamic obstacles launch from a lateral offset and cross the course.
        for _ in 0..s.n_dynamic {
            let r = rng.random_range(s.dynamic_radius.0..=s.dynamic_radius.1);
            let speed = rng.random_range(s.speed_range.0..=s.speed_range.1);
            let along = rng.random_range(0.25..0.75);
            let side = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let offset = rng.random_range(s.launch_offset.0..=s.launch_offset.1);
            let course_dir = (goal - start).xy().normalize();
            let normal = Vector2::new(-course_dir.y, course_dir.x) * side;
            let base = start.xy() + (goal - start).xy() * along + normal * offset;
            let base = Vector2::new(
                base.x.clamp(field.min.x + 0.5, field.max.x - 0.5),
                base.y.clamp(field.min.y + 0.5, field.max.y - 0.5),
            );
            let p0 = Vector3::new(base.x, base.y, col_z);
            // Head across the course with a small angle jitter.
            let cross = -normal;
            let jitter_angle: f64 = rng.random_range(-0.5..0.5);
            let (sj, cj) = jitter_angle.sin_cos();
            let dir = Vector2::new(cross.x * cj - cross.y * sj, cross.x * sj + cross.y * cj);
            let shape = ObstacleShape::Cylinder { radius: r, half_height: col_z };
            if s.curved_motion {
                let heading = dir.y.atan2(dir.x);
                let turn = rng.random_range(-0.6..0.6);
                let amp = rng.random_range(0.2..0.8) * speed;
                let period = rng.random_range(2.0..6.0);
                obstacles.push(Obstacle::curved(shape, p0, speed, amp, period, turn, heading));
            } else {
                let v = Vector3::new(dir.x * speed, dir.y * speed, 0.0);
                obstacles.push(Obstacle::uniform_linear(shape, p0, v));
            }
        }

        Scenario { field, start, goal, quad_radius: self.quad_radius, seed, obstacles }
    }

    pub fn validate(&self) -> Result<()> {
        let field = self.field();
        if field.min.x >= field.max.x || field.min.y >= field.max.y {
            return Err(Error::Scenario("field_min must be < field_max componentwise".into()));
        }
        if !field.contains_xy(&self.start) || !field.contains_xy(&self.goal) {
            return Err(Error::Scenario("start and goal must lie inside the field".into()));
        }
        if !(self.quad_radius > 0.0) {
            return Err(Error::Scenario("quad_radius must be > 0".into()));
        }
        if self.sampler.speed_range.0 > self.sampler.speed_range.1 || self.sampler.speed_range.0 < 0.0 {
            return Err(Error::Scenario("sampler.speed_range must be ordered and non-negative".into()));
        }
        // Materialization must also yield a valid scenario.
        self.materialize(self.seed).validate(Some(self.sampler.speed_range))
    }
}

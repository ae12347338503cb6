//! Reward terms: soft state limits, goal progress, the two-stage LiDAR
//! safety reward, and the dynamic-obstacle term built on a relative-motion
//! reshaped distance field.
//!
//! The dynamic-obstacle reshaping discounts the gap to a moving obstacle by
//! a coefficient k >= 1 inside the threat cone (the angle between the
//! relative velocity and the obstacle-to-quad connection below pi/2), so the
//! approach side of a mover reads closer than it is. All reshaping
//! quantities live on the horizontal plane.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::world::{Obstacle, WorldState};

/// Free reward parameters as written in config files. The runtime
/// [`RewardConfig`] is assembled from these plus the sim/lidar/scenario
/// quantities they reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardWeights {
    pub lambda_v: f64,
    pub lambda_a: f64,
    pub lambda_h: f64,
    pub lambda_j: f64,
    pub lambda_dir: f64,
    pub lambda_dis: f64,
    pub lambda_s: f64,
    pub lambda_d: f64,
    pub beta_v: f64,
    pub beta_a: f64,
    pub beta_h: f64,
    /// Minimum-acceptable speed as a fraction of v_ref.
    pub v_min_frac: f64,
    /// Minimum-acceptable acceleration, m/s².
    pub a_min: f64,
    /// Truncated projection velocity as a fraction of v_ref.
    pub v_tr_frac: f64,
    /// Two-stage switch distance for the safety reward, m.
    pub d_th: f64,
    /// Truncated logarithmic distance floor (log d_tr).
    pub log_d_tr: f64,
    /// Dynamic-obstacle gate radius as a fraction of d_max.
    pub gate_frac: f64,
    /// Goal-proximity cutoff radius disabling r_v and r_dis, m.
    pub goal_cutoff: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            lambda_v: 0.2,
            lambda_a: 0.2,
            lambda_h: 0.2,
            lambda_j: 0.1,
            lambda_dir: 1.0,
            lambda_dis: 1.0,
            lambda_s: 0.5,
            lambda_d: 0.5,
            beta_v: 1.0,
            beta_a: 1.0,
            beta_h: 1.0,
            v_min_frac: 0.3,
            a_min: 0.0,
            v_tr_frac: 0.4,
            d_th: 1.0,
            log_d_tr: -5.0,
            gate_frac: 0.75,
            goal_cutoff: 1.5,
        }
    }
}

/// Fully resolved reward configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardConfig {
    pub lambda_v: f64,
    pub lambda_a: f64,
    pub lambda_h: f64,
    pub lambda_j: f64,
    pub lambda_dir: f64,
    pub lambda_dis: f64,
    pub lambda_s: f64,
    pub lambda_d: f64,
    pub beta_v: f64,
    pub beta_a: f64,
    pub beta_h: f64,
    pub v_min: f64,
    pub v_ref: f64,
    pub a_min: f64,
    pub a_ref: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// Truncated projection velocity, m/s.
    pub v_tr: f64,
    pub d_th: f64,
    pub log_d_tr: f64,
    /// Quadrotor radius, m.
    pub r_d: f64,
    /// Sensor truncation distance, m.
    pub d_max: f64,
    /// Dynamic-obstacle gate radius, m.
    pub gate_radius: f64,
    pub goal_cutoff: f64,
}

impl RewardConfig {
    pub fn assemble(w: &RewardWeights, v_ref: f64, a_ref: f64, h_min: f64, h_max: f64, r_d: f64, d_max: f64) -> Self {
        Self {
            lambda_v: w.lambda_v,
            lambda_a: w.lambda_a,
            lambda_h: w.lambda_h,
            lambda_j: w.lambda_j,
            lambda_dir: w.lambda_dir,
            lambda_dis: w.lambda_dis,
            lambda_s: w.lambda_s,
            lambda_d: w.lambda_d,
            beta_v: w.beta_v,
            beta_a: w.beta_a,
            beta_h: w.beta_h,
            v_min: w.v_min_frac * v_ref,
            v_ref,
            a_min: w.a_min,
            a_ref,
            h_min,
            h_max,
            v_tr: w.v_tr_frac * v_ref,
            d_th: w.d_th,
            log_d_tr: w.log_d_tr,
            r_d,
            d_max,
            gate_radius: w.gate_frac * d_max,
            goal_cutoff: w.goal_cutoff,
        }
    }
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig::assemble(&RewardWeights::default(), 3.0, 6.0, 0.5, 2.5, 0.2, 10.0)
    }
}

/// Per-term reward values for one tick. The state and goal terms are stored
/// unweighted; safety and dynamic-obstacle terms carry their lambda as in
/// their defining equations. `total` applies the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_v: f64,
    pub r_a: f64,
    pub r_h: f64,
    pub r_j: f64,
    pub r_dir: f64,
    pub r_dis: f64,
    pub r_safety: f64,
    pub r_dobs: f64,
    pub total: f64,
    /// Reshape coefficient per dynamic obstacle (obstacle order), 1.0 when
    /// outside the threat cone.
    pub ks: Vec<f64>,
}

/// Best dynamic-obstacle reward seen so far in the episode; the fallback
/// when no dynamic obstacle is inside the gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DobsRunningMax {
    pub best: f64,
}

impl DobsRunningMax {
    /// Initialized at the gate-boundary value so the fallback is defined
    /// before any dynamic obstacle has been seen.
    pub fn init(cfg: &RewardConfig) -> Self {
        Self { best: cfg.lambda_d * (cfg.gate_radius - cfg.r_d).ln() }
    }
}

/// Soft range-limiting function: log(exp(-beta * deviation) + 1).
/// Equals log 2 exactly on [s_low, s_high]; overflow-safe for any deviation.
pub fn limit(s: f64, beta: f64, s_low: f64, s_high: f64) -> f64 {
    let deviation = (s_low - s).max(0.0) + (s - s_high).max(0.0);
    (-beta * deviation).exp().ln_1p()
}

/// Velocity/acceleration/height band rewards and the jerk reward.
/// `near_goal` suppresses r_v (the navigation incentive) inside the goal
/// cutoff.
pub fn state_reward(
    v: &Vector3<f64>,
    p_z: f64,
    a: &Vector3<f64>,
    a_prev: &Vector3<f64>,
    near_goal: bool,
    cfg: &RewardConfig,
) -> (f64, f64, f64, f64) {
    let r_v = if near_goal { 0.0 } else { limit(v.norm(), cfg.beta_v, cfg.v_min, cfg.v_ref) };
    let r_a = limit(a.norm(), cfg.beta_a, cfg.a_min, cfg.a_ref);
    let r_h = limit(p_z, cfg.beta_h, cfg.h_min, cfg.h_max);
    let r_j = 1.0 / (1.0 + (a - a_prev).norm());
    (r_v, r_a, r_h, r_j)
}

/// Goal-direction projection (truncated at v_tr) and exponential progress.
/// `d_g_prev` is last tick's distance to goal. r_dis is suppressed inside
/// the goal cutoff.
pub fn goal_reward(
    p: &Vector3<f64>,
    v: &Vector3<f64>,
    p_g: &Vector3<f64>,
    d_g_prev: f64,
    cfg: &RewardConfig,
) -> (f64, f64) {
    let to_goal = p_g - p;
    let d_g = to_goal.norm();
    let r_dir = if d_g > 0.0 { (v.dot(&to_goal) / d_g).min(cfg.v_tr) } else { 0.0 };
    let near_goal = d_g <= cfg.goal_cutoff;
    let r_dis = if near_goal { 0.0 } else { (d_g_prev - d_g).exp() - 1.0 };
    (r_dir, r_dis)
}

/// Two-stage safety reward from sensed ray distances (misses excluded).
/// Returns lambda_s * max(log d_s, log d_tr).
pub fn safety_reward(rays: &[f64], cfg: &RewardConfig) -> f64 {
    let d_s = if rays.is_empty() {
        cfg.d_max - cfg.r_d
    } else {
        let min_ray = rays.iter().copied().fold(f64::INFINITY, f64::min);
        if min_ray < cfg.d_th {
            let close: Vec<f64> = rays.iter().copied().filter(|d| *d < cfg.d_th).collect();
            close.iter().map(|d| d - cfg.r_d).sum::<f64>() / close.len() as f64
        } else {
            min_ray - cfg.r_d
        }
    };
    cfg.lambda_s * truncated_log(d_s, cfg.log_d_tr)
}

/// max(log x, floor), with non-positive x collapsing to the floor.
#[inline]
fn truncated_log(x: f64, floor: f64) -> f64 {
    if x > 0.0 {
        x.ln().max(floor)
    } else {
        floor
    }
}

/// Reshape coefficient k >= 1 of the dynamic-obstacle distance field.
/// Evaluated on the horizontal plane; theta = 0 counts as inside the threat
/// cone, theta = pi/2 as outside.
pub fn reshape_coefficient(
    p: &Vector3<f64>,
    v: &Vector3<f64>,
    p_dobs: &Vector3<f64>,
    v_dobs: &Vector3<f64>,
) -> f64 {
    let conn = Vector2::new(p.x - p_dobs.x, p.y - p_dobs.y);
    let rel = Vector2::new(v_dobs.x - v.x, v_dobs.y - v.y);
    let k_v = rel.norm();
    let conn_norm = conn.norm();
    if k_v == 0.0 || conn_norm == 0.0 {
        return 1.0;
    }
    let cos_theta = (conn.dot(&rel) / (conn_norm * k_v)).clamp(-1.0, 1.0);
    let theta = cos_theta.acos();
    if theta >= std::f64::consts::FRAC_PI_2 {
        return 1.0;
    }
    let k_theta = 1.0 - 2.0 * theta / std::f64::consts::PI;
    // Distance from the quad to the absolute obstacle-velocity line.
    let vd = Vector2::new(v_dobs.x, v_dobs.y);
    let vd_norm = vd.norm();
    let d_v = if vd_norm > 0.0 {
        (conn.x * vd.y - conn.y * vd.x).abs() / vd_norm
    } else {
        conn_norm
    };
    let k_d = (1.0 / (1.0 + d_v)).exp();
    1.0 + k_v * k_theta * k_d
}

/// Dynamic-obstacle avoidance reward over all dynamic obstacles whose
/// center is within the gate radius; falls back to the episode running max
/// when none are. Updates the running max after evaluation.
pub fn dobs_reward(
    world: &WorldState,
    p: &Vector3<f64>,
    v: &Vector3<f64>,
    running: &mut DobsRunningMax,
    cfg: &RewardConfig,
) -> (f64, Vec<f64>) {
    let mut sum = 0.0;
    let mut m = 0usize;
    let mut ks = Vec::new();
    for ob in world.dynamic_obstacles() {
        let center_dist = (p - ob.p).norm();
        let k = reshape_coefficient(p, v, &ob.p, &ob.v);
        ks.push(k);
        if center_dist <= cfg.gate_radius {
            let d_surf = ob.surface_distance(p);
            sum += truncated_log((d_surf - cfg.r_d) / k, cfg.log_d_tr);
            m += 1;
        }
    }
    let r = if m > 0 { cfg.lambda_d * sum / m as f64 } else { running.best };
    running.best = running.best.max(r);
    (r, ks)
}

/// Full reward of one transition.
#[allow(clippy::too_many_arguments)]
pub fn total_reward(
    world: &WorldState,
    action: &Vector3<f64>,
    a_prev: &Vector3<f64>,
    p_g: &Vector3<f64>,
    d_g_prev: f64,
    rays: &[f64],
    running: &mut DobsRunningMax,
    cfg: &RewardConfig,
) -> RewardBreakdown {
    let q = &world.quad;
    let d_g = (p_g - q.p).norm();
    let near_goal = d_g <= cfg.goal_cutoff;
    let (r_v, r_a, r_h, r_j) = state_reward(&q.v, q.p.z, action, a_prev, near_goal, cfg);
    let (r_dir, r_dis) = goal_reward(&q.p, &q.v, p_g, d_g_prev, cfg);
    let r_safety = safety_reward(rays, cfg);
    let (r_dobs, ks) = dobs_reward(world, &q.p, &q.v, running, cfg);
    let total = cfg.lambda_v * r_v
        + cfg.lambda_a * r_a
        + cfg.lambda_h * r_h
        + cfg.lambda_j * r_j
        + cfg.lambda_dir * r_dir
        + cfg.lambda_dis * r_dis
        + r_safety
        + r_dobs;
    RewardBreakdown { r_v, r_a, r_h, r_j, r_dir, r_dis, r_safety, r_dobs, total, ks }
}

/// Sampled field of the reshape coefficient and the reshaped log-distance
/// around one dynamic obstacle, for rendering and the field checks.
#[derive(Debug, Clone)]
pub struct ReshapedField {
    /// Window half-size, m.
    pub half: f64,
    /// Grid step, m.
    pub step: f64,
    /// Grid width/height in cells.
    pub n: usize,
    /// k at each (row-major) grid point.
    pub k: Vec<f64>,
    /// max(log((d_surf - r_d)/k), log d_tr) at each grid point.
    pub reshaped_log: Vec<f64>,
}

impl ReshapedField {
    /// Grid-point coordinate of column/row index i, relative to the
    /// obstacle center.
    pub fn coord(&self, i: usize) -> f64 {
        -self.half + i as f64 * self.step
    }
}

/// Evaluate the reshaped field on a square window centered on the obstacle.
pub fn render_reshaped_field(
    obstacle: &Obstacle,
    quad_v: &Vector3<f64>,
    cfg: &RewardConfig,
    half: f64,
    step: f64,
) -> ReshapedField {
    let n = (2.0 * half / step).round() as usize + 1;
    let mut k = Vec::with_capacity(n * n);
    let mut reshaped = Vec::with_capacity(n * n);
    for iy in 0..n {
        let y = obstacle.p.y - half + iy as f64 * step;
        for ix in 0..n {
            let x = obstacle.p.x - half + ix as f64 * step;
            let p = Vector3::new(x, y, obstacle.p.z);
            let kk = reshape_coefficient(&p, quad_v, &obstacle.p, &obstacle.v);
            let d_surf = obstacle.surface_distance(&p);
            k.push(kk);
            reshaped.push(truncated_log((d_surf - cfg.r_d) / kk, cfg.log_d_tr));
        }
    }
    ReshapedField { half, step, n, k, reshaped_log: reshaped }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{Obstacle, ObstacleShape};
    use approx::assert_relative_eq;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn limit_in_range_is_log2() {
        assert_relative_eq!(limit(2.0, 1.0, 1.0, 3.0), LN2, max_relative = 1e-15);
        assert_relative_eq!(limit(1.0, 1.0, 1.0, 3.0), LN2, max_relative = 1e-15);
        assert_relative_eq!(limit(3.0, 1.0, 1.0, 3.0), LN2, max_relative = 1e-15);
    }

    #[test]
    fn limit_out_of_range_decays() {
        let expect = (-1.0f64).exp().ln_1p(); // log(e^-1 + 1)
        assert_relative_eq!(limit(4.0, 1.0, 1.0, 3.0), expect, max_relative = 1e-15);
        assert!((limit(4.0, 1.0, 1.0, 3.0) - 0.3133).abs() < 1e-4);
        // Overflow-safe for extreme deviations.
        assert_eq!(limit(1e9, 10.0, 0.0, 1.0), 0.0);
    }

    #[test]
    fn jerk_reward_unit_cases() {
        let cfg = RewardConfig::default();
        let a = Vector3::new(1.0, 0.0, 0.0);
        let (_, _, _, r_j) = state_reward(&Vector3::zeros(), 1.0, &a, &a, false, &cfg);
        assert_eq!(r_j, 1.0);
        let (_, _, _, r_j) = state_reward(&Vector3::zeros(), 1.0, &a, &Vector3::new(2.0, 0.0, 0.0), false, &cfg);
        assert_eq!(r_j, 0.5);
    }

    #[test]
    fn velocity_reward_boundary_is_log2() {
        let cfg = RewardConfig::default();
        let v = Vector3::new(cfg.v_ref, 0.0, 0.0);
        let (r_v, ..) = state_reward(&v, 1.0, &Vector3::zeros(), &Vector3::zeros(), false, &cfg);
        assert_relative_eq!(r_v, LN2, max_relative = 1e-15);
    }

    #[test]
    fn goal_reward_cases() {
        let cfg = RewardConfig::default();
        let p = Vector3::zeros();
        let p_g = Vector3::new(10.0, 0.0, 0.0);
        // Stationary: both terms zero.
        let (r_dir, r_dis) = goal_reward(&p, &Vector3::zeros(), &p_g, 10.0, &cfg);
        assert_eq!((r_dir, r_dis), (0.0, 0.0));
        // Aligned at v_ref truncates to v_tr = 0.4 v_ref.
        let (r_dir, _) = goal_reward(&p, &Vector3::new(cfg.v_ref, 0.0, 0.0), &p_g, 10.0, &cfg);
        assert_relative_eq!(r_dir, 0.4 * cfg.v_ref, max_relative = 1e-15);
        // 0.1 m approach.
        let (_, r_dis) = goal_reward(&p, &Vector3::zeros(), &p_g, 10.1, &cfg);
        assert_relative_eq!(r_dis, 0.1f64.exp() - 1.0, max_relative = 1e-12);
        assert!((r_dis - 0.1052).abs() < 1e-4);
        // At the goal: direction undefined, r_dir = 0.
        let (r_dir, _) = goal_reward(&p_g, &Vector3::new(1.0, 0.0, 0.0), &p_g, 0.5, &cfg);
        assert_eq!(r_dir, 0.0);
    }

    #[test]
    fn safety_reward_stages() {
        let cfg = RewardConfig::default(); // r_d = 0.2, lambda_s = 0.5, d_max = 10
        // All rays clear: min stage.
        let r = safety_reward(&[10.0, 10.0, 10.0], &cfg);
        assert_relative_eq!(r, cfg.lambda_s * 9.8f64.ln(), max_relative = 1e-15);
        // Below-threshold rays average.
        let r = safety_reward(&[0.5, 0.8, 5.0], &cfg);
        assert_relative_eq!(r, cfg.lambda_s * 0.45f64.ln(), max_relative = 1e-15);
        // Truncation floor.
        let r = safety_reward(&[0.2 + 1e-4], &cfg);
        assert_eq!(r, cfg.lambda_s * -5.0);
        // Empty scan falls back to d_max - r_d.
        let r = safety_reward(&[], &cfg);
        assert_relative_eq!(r, cfg.lambda_s * 9.8f64.ln(), max_relative = 1e-15);
    }

    #[test]
    fn safety_monotone_in_single_ray() {
        let cfg = RewardConfig::default();
        let mut prev = f64::NEG_INFINITY;
        for d in [0.3, 0.6, 0.9, 1.5, 3.0, 9.0] {
            let r = safety_reward(&[d, 5.0], &cfg);
            assert!(r >= prev, "raising the ray should not reduce safety");
            prev = r;
        }
    }

    #[test]
    fn reshape_head_on_and_boundaries() {
        let p = Vector3::new(2.0, 0.0, 1.0);
        let p_dobs = Vector3::new(0.0, 0.0, 1.0);
        // Head-on: obstacle moving straight at a hovering quad.
        let k = reshape_coefficient(&p, &Vector3::zeros(), &p_dobs, &Vector3::new(1.0, 0.0, 0.0));
        assert_relative_eq!(k, 1.0 + 1.0f64.exp(), max_relative = 1e-12);
        assert!((k - 3.7183).abs() < 1e-4);
        // theta = pi/2 exactly.
        let k = reshape_coefficient(&p, &Vector3::zeros(), &p_dobs, &Vector3::new(0.0, 1.0, 0.0));
        assert_eq!(k, 1.0);
        // Receding obstacle.
        let k = reshape_coefficient(&p, &Vector3::zeros(), &p_dobs, &Vector3::new(-1.0, 0.0, 0.0));
        assert_eq!(k, 1.0);
        // Zero relative speed.
        let v = Vector3::new(1.0, 0.0, 0.0);
        let k = reshape_coefficient(&p, &v, &p_dobs, &v);
        assert_eq!(k, 1.0);
    }

    fn one_mover(p: Vector3<f64>, v: Vector3<f64>) -> WorldState {
        let ob = Obstacle::uniform_linear(
            ObstacleShape::Cylinder { radius: 0.3, half_height: 1.5 },
            p,
            v,
        );
        WorldState {
            quad: crate::world::QuadState::at(Vector3::new(0.0, 0.0, 1.0)),
            obstacles: vec![ob],
            tick: 0,
        }
    }

    #[test]
    fn dobs_reward_gate_and_discount() {
        let cfg = RewardConfig { lambda_d: 1.0, ..RewardConfig::default() };
        // Surface distance 2.0: cylinder radius 0.3 centered 2.3 m away,
        // receding so k = 1.
        let w = one_mover(Vector3::new(2.3, 0.0, 1.0), Vector3::new(1.0, 0.0, 0.0));
        let mut running = DobsRunningMax::init(&cfg);
        let (r, ks) = dobs_reward(&w, &w.quad.p, &Vector3::zeros(), &mut running, &cfg);
        assert_relative_eq!(r, 1.8f64.ln(), max_relative = 1e-12);
        assert_eq!(ks, vec![1.0]);
        // Same geometry with k = e divides the gap.
        let k = std::f64::consts::E;
        assert_relative_eq!((1.8f64 / k).ln(), 1.8f64.ln() - 1.0, max_relative = 1e-12);
    }

    #[test]
    fn dobs_running_max_fallback() {
        let cfg = RewardConfig::default();
        // Far obstacle outside the 7.5 m gate.
        let w = one_mover(Vector3::new(9.0, 0.0, 1.0), Vector3::new(0.0, 1.0, 0.0));
        let mut running = DobsRunningMax::init(&cfg);
        let init = running.best;
        let (r, _) = dobs_reward(&w, &w.quad.p, &Vector3::zeros(), &mut running, &cfg);
        assert_eq!(r, init);
        // Running max never decreases.
        let w2 = one_mover(Vector3::new(3.0, 0.0, 1.0), Vector3::new(-1.0, 0.0, 0.0));
        let (r2, _) = dobs_reward(&w2, &w2.quad.p, &Vector3::zeros(), &mut running, &cfg);
        assert!(running.best >= r2.max(init));
    }

    #[test]
    fn total_reward_weight_identities() {
        let w = one_mover(Vector3::new(9.0, 0.0, 1.0), Vector3::new(0.0, 1.0, 0.0));
        let zero = RewardConfig {
            lambda_v: 0.0,
            lambda_a: 0.0,
            lambda_h: 0.0,
            lambda_j: 0.0,
            lambda_dir: 0.0,
            lambda_dis: 0.0,
            lambda_s: 0.0,
            lambda_d: 0.0,
            ..RewardConfig::default()
        };
        let mut running = DobsRunningMax::init(&zero);
        let b = total_reward(
            &w,
            &Vector3::zeros(),
            &Vector3::zeros(),
            &Vector3::new(5.0, 0.0, 1.0),
            5.0,
            &[5.0],
            &mut running,
            &zero,
        );
        assert_eq!(b.total, 0.0);

        let only_jerk = RewardConfig { lambda_j: 1.0, ..zero };
        let mut running = DobsRunningMax::init(&only_jerk);
        let b = total_reward(
            &w,
            &Vector3::zeros(),
            &Vector3::zeros(),
            &Vector3::new(5.0, 0.0, 1.0),
            5.0,
            &[5.0],
            &mut running,
            &only_jerk,
        );
        assert_eq!(b.total, 1.0);
    }

    #[test]
    fn k_field_mirror_symmetry_skews_toward_absolute_velocity() {
        // Orthogonal unit velocities: quad +x, obstacle +y.
        let p_dobs = Vector3::new(0.0, 0.0, 1.0);
        let v_quad = Vector3::new(1.0, 0.0, 0.0);
        let v_dobs = Vector3::new(0.0, 1.0, 0.0);
        // Relative velocity (-1, 1)/sqrt2 at 135 degrees. Mirror pairs about
        // that line have equal theta; the one nearer the +y axis (absolute
        // velocity line) must get the larger k.
        let rel_angle = 3.0 * std::f64::consts::FRAC_PI_4;
        for delta_deg in [10.0, 25.0, 40.0, 60.0, 80.0] {
            let delta = (delta_deg as f64).to_radians();
            for r in [0.8, 1.5, 2.2] {
                let at = |phi: f64| Vector3::new(r * phi.cos(), r * phi.sin(), 1.0);
                let k_toward = reshape_coefficient(&at(rel_angle - delta), &v_quad, &p_dobs, &v_dobs);
                let k_away = reshape_coefficient(&at(rel_angle + delta), &v_quad, &p_dobs, &v_dobs);
                assert!(
                    k_toward > k_away,
                    "delta {delta_deg} r {r}: {k_toward} vs {k_away}"
                );
            }
        }
    }

    #[test]
    fn k_always_at_least_one() {
        let mut rng = {
            use rand_chacha::rand_core::SeedableRng;
            rand_chacha::ChaCha8Rng::seed_from_u64(11)
        };
        use rand::Rng;
        for _ in 0..2000 {
            let p = Vector3::new(rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), 1.0);
            let v = Vector3::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), 0.0);
            let vd = Vector3::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), 0.0);
            let k = reshape_coefficient(&p, &v, &Vector3::new(0.0, 0.0, 1.0), &vd);
            assert!(k >= 1.0);
        }
    }

    #[test]
    fn running_max_is_monotone_within_episode() {
        let cfg = RewardConfig::default();
        let mut running = DobsRunningMax::init(&cfg);
        let mut prev_best = running.best;
        let mut t = 0.0;
        while t < 3.0 {
            // Obstacle sweeping past the quad.
            let w = one_mover(Vector3::new(4.0 - t, 2.0, 1.0), Vector3::new(-1.0, 0.0, 0.0));
            let _ = dobs_reward(&w, &w.quad.p, &Vector3::zeros(), &mut running, &cfg);
            assert!(running.best >= prev_best);
            prev_best = running.best;
            t += 0.25;
        }
    }
}

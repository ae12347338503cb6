//! The navigation environment: world simulation, LiDAR encoding, point
//! flow, and reward wired into a steppable unit.
//!
//! Every episode is a pure function of its episode seed: the scenario, the
//! scan jitter stream, and obstacle motion all derive from it, which is what
//! makes logged episodes replayable bit-for-bit.

use std::time::Instant;

use nalgebra::Vector3;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::flow::{FlowConfig, PointFlow, PointFlowPipeline};
use crate::lidar::{encode_distance_map, encode_raycast_grid, scan, LidarConfig, MAP_H, MAP_W};
use crate::policy::Observation;
use crate::reward::{total_reward, DobsRunningMax, RewardBreakdown, RewardConfig, RewardWeights};
use crate::world::{
    check_termination, nearest_surface_distance, step as world_step, Scenario, ScenarioSpec,
    SimConfig, TerminationKind, WorldState,
};

/// 64-bit mix (splitmix64 finalizer) for deriving independent seeds.
pub fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub sim: SimConfig,
    pub lidar: LidarConfig,
    pub flow: FlowConfig,
    pub reward: RewardWeights,
    pub scenario: ScenarioSpec,
    /// Ablation: zero the point-flow channels.
    pub disable_flow: bool,
    /// Whether reaching the goal ends the episode. Training leaves this off
    /// so the near-goal phase becomes safe wandering; evaluation turns it on.
    pub terminate_on_success: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            sim: SimConfig::default(),
            lidar: LidarConfig::default(),
            flow: FlowConfig::default(),
            reward: RewardWeights::default(),
            scenario: ScenarioSpec::default(),
            disable_flow: false,
            terminate_on_success: true,
        }
    }
}

impl EnvConfig {
    pub fn reward_config(&self) -> RewardConfig {
        RewardConfig::assemble(
            &self.reward,
            self.sim.v_ref,
            self.sim.a_ref,
            self.sim.h_min,
            self.sim.h_max,
            self.scenario.quad_radius,
            self.lidar.d_max,
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.lidar.validate()?;
        self.flow.validate()?;
        self.scenario.validate()?;
        Ok(())
    }
}

/// Result of one environment step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub obs: Observation,
    pub reward: RewardBreakdown,
    pub termination: TerminationKind,
    /// Nearest obstacle surface distance after the step (capped for
    /// logging in obstacle-free worlds).
    pub nearest_surface: f64,
    /// Encode + flow time for this tick, milliseconds.
    pub encode_ms: f64,
}

pub struct NavEnv {
    cfg: EnvConfig,
    reward_cfg: RewardConfig,
    scenario: Scenario,
    world: WorldState,
    pipeline: PointFlowPipeline,
    running_max: DobsRunningMax,
    d_goal_prev: f64,
    rng: ChaCha8Rng,
    master_seed: u64,
    env_id: u64,
    episode_index: u64,
    episode_seed: u64,
}

impl NavEnv {
    pub fn new(cfg: EnvConfig, master_seed: u64, env_id: u64) -> Result<Self> {
        cfg.validate()?;
        let reward_cfg = cfg.reward_config();
        let scenario = cfg.scenario.materialize(0);
        let world = WorldState::init(&scenario);
        let pipeline = PointFlowPipeline::new(cfg.flow);
        let running_max = DobsRunningMax::init(&reward_cfg);
        let mut env = Self {
            cfg,
            reward_cfg,
            scenario,
            world,
            pipeline,
            running_max,
            d_goal_prev: 0.0,
            rng: ChaCha8Rng::seed_from_u64(0),
            master_seed,
            env_id,
            episode_index: 0,
            episode_seed: 0,
        };
        env.reset();
        Ok(env)
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn reward_config(&self) -> &RewardConfig {
        &self.reward_cfg
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn episode_seed(&self) -> u64 {
        self.episode_seed
    }

    /// Start a fresh episode with a seed derived from (master seed, env id,
    /// episode counter).
    pub fn reset(&mut self) -> Observation {
        let seed = mix_seed(mix_seed(self.master_seed, self.env_id.wrapping_add(1)), self.episode_index.wrapping_add(1));
        self.episode_index += 1;
        self.reset_to_seed(seed)
    }

    /// Start an episode with an explicit scenario seed; the scan jitter
    /// stream derives from the same seed, so the whole episode is a function
    /// of (config, seed, actions).
    pub fn reset_to_seed(&mut self, seed: u64) -> Observation {
        self.episode_seed = seed;
        self.scenario = self.cfg.scenario.materialize(seed);
        self.world = WorldState::init(&self.scenario);
        self.pipeline.reset();
        self.running_max = DobsRunningMax::init(&self.reward_cfg);
        self.d_goal_prev = (self.scenario.goal - self.world.quad.p).norm();
        self.rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x5CA9_F00D));
        let (obs, _) = self.observe();
        obs
    }

    /// Scan the current world and assemble the observation. Returns the
    /// observation and (ray distances, encode+flow milliseconds).
    fn observe(&mut self) -> (Observation, (Vec<f64>, f64)) {
        let frame = scan(&self.world, &self.cfg.lidar, &mut self.rng);
        let rays = frame.distances();

        let t0 = Instant::now();
        let grid = encode_raycast_grid(&frame, &self.cfg.lidar);
        let (gray, dmap) = encode_distance_map(&grid);
        let pflow = if self.cfg.disable_flow {
            PointFlow::zeros()
        } else {
            self.pipeline.push(&gray)
        };
        let normalized = dmap.normalized();

        let mut sensing = vec![0.0; 3 * MAP_W * MAP_H];
        for x in 0..MAP_W {
            for y in 0..MAP_H {
                sensing[(x) * MAP_H + y] = normalized.get(x, y);
                sensing[(MAP_W + x) * MAP_H + y] = pflow.du.get(x, y);
                sensing[(2 * MAP_W + x) * MAP_H + y] = pflow.dv.get(x, y);
            }
        }
        let encode_ms = t0.elapsed().as_secs_f64() * 1e3;

        let to_goal = self.scenario.goal - self.world.quad.p;
        let d_g = to_goal.norm();
        let goal_dir = if d_g > 0.0 { to_goal / d_g } else { Vector3::zeros() };
        let obs = Observation {
            sensing,
            goal_dir,
            vel: self.world.quad.v,
            a_last: self.world.quad.a_last,
        };
        (obs, (rays, encode_ms))
    }

    /// Apply one acceleration command.
    pub fn step(&mut self, action: &Vector3<f64>) -> Result<StepOutcome> {
        let a_prev = self.world.quad.a_last;
        self.world = world_step(&self.world, action, &self.cfg.sim, &self.scenario.field)?;

        let (obs, (rays, encode_ms)) = self.observe();

        let reward = total_reward(
            &self.world,
            action,
            &a_prev,
            &self.scenario.goal,
            self.d_goal_prev,
            &rays,
            &mut self.running_max,
            &self.reward_cfg,
        );
        self.d_goal_prev = (self.scenario.goal - self.world.quad.p).norm();

        let mut termination = check_termination(&self.world, &self.cfg.sim, &self.scenario);
        if termination == TerminationKind::Success && !self.cfg.terminate_on_success {
            termination = TerminationKind::Running;
        }
        let nearest_surface = nearest_surface_distance(&self.world, &self.world.quad.p).min(1e9);

        Ok(StepOutcome { obs, reward, termination, nearest_surface, encode_ms })
    }
}

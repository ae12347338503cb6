//! PPO training: parallel rollout collection, generalized advantage
//! estimation, clipped-surrogate updates with Adam, and the evaluation
//! harness.
//!
//! Determinism contract: every stochastic draw comes from a per-environment
//! or per-purpose ChaCha stream derived from the run seed, rollouts are
//! collected with order-preserving parallel maps, and minibatch gradients
//! accumulate over fixed-size chunks summed in index order — so equal seeds
//! give bit-identical training curves regardless of thread scheduling.

use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{mix_seed, EnvConfig, NavEnv};
use crate::error::{Error, Result};
use crate::metrics::{compute_metrics, run_episode, EpisodeLog};
use crate::nn::{clip_grad_norm, Adam};
use crate::policy::{NetSpec, Observation, PolicyNet};
use crate::world::TerminationKind;

/// Gradient-accumulation chunk length. Fixed so the chunk sum order (and
/// therefore the result) does not depend on the thread count.
const GRAD_CHUNK: usize = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub n_envs: usize,
    pub horizon: usize,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip: f64,
    pub epochs: usize,
    pub minibatch: usize,
    pub lr: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub max_grad_norm: f64,
    pub total_steps: u64,
    pub seed: u64,
    /// Reward scaling applied inside advantage/return computation only;
    /// logged rewards stay unscaled.
    pub reward_scale: f64,
    /// Squash sampled actions with a_ref * tanh(a / a_ref) before actuation.
    pub squash_actions: bool,
    /// Ablation: zero the point-flow observation channels.
    pub ablate_flow: bool,
    /// Ablation: drop the dynamic-obstacle reward (lambda_d = 0).
    pub ablate_dobs: bool,
    /// Periodic deterministic evaluation cadence in env steps (0 = off).
    pub eval_every_steps: u64,
    pub eval_episodes: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n_envs: 128,
            horizon: 64,
            gamma: 0.99,
            gae_lambda: 0.95,
            clip: 0.2,
            epochs: 4,
            minibatch: 512,
            lr: 3e-4,
            entropy_coef: 0.01,
            value_coef: 0.5,
            max_grad_norm: 0.5,
            total_steps: 2_000_000,
            seed: 0,
            reward_scale: 0.1,
            squash_actions: true,
            ablate_flow: false,
            ablate_dobs: false,
            eval_every_steps: 0,
            eval_episodes: 8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) || !(self.gae_lambda >= 0.0 && self.gae_lambda <= 1.0) {
            return Err(Error::Config("train.gamma and train.gae_lambda must lie in (0, 1]".into()));
        }
        if !(self.clip > 0.0) {
            return Err(Error::Config("train.clip must be > 0".into()));
        }
        if self.n_envs == 0 || self.horizon == 0 || self.minibatch == 0 {
            return Err(Error::Config("train sizes must be positive".into()));
        }
        Ok(())
    }
}

/// Per-component tanh squashing to the acceleration bound.
pub fn squash(a_raw: &Vector3<f64>, a_ref: f64) -> Vector3<f64> {
    Vector3::new(
        a_ref * (a_raw.x / a_ref).tanh(),
        a_ref * (a_raw.y / a_ref).tanh(),
        a_ref * (a_raw.z / a_ref).tanh(),
    )
}

const LOG_2PI: f64 = 1.8378770664093453; // ln(2*pi)

/// Diagonal-Gaussian log density of `a` under (mean, logstd).
pub fn gaussian_logp(a: &[f64], mean: &[f64], logstd: &[f64]) -> f64 {
    let mut lp = 0.0;
    for i in 0..a.len() {
        let std = logstd[i].exp();
        let z = (a[i] - mean[i]) / std;
        lp += -0.5 * z * z - logstd[i] - 0.5 * LOG_2PI;
    }
    lp
}

/// Diagonal-Gaussian entropy.
pub fn gaussian_entropy(logstd: &[f64]) -> f64 {
    logstd.iter().map(|l| l + 0.5 * (LOG_2PI + 1.0)).sum()
}

/// One stored transition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Transition {
    pub obs: Observation,
    /// Pre-squash action sample (the policy distribution's variable).
    pub action_raw: [f64; 3],
    pub logp: f64,
    pub value: f64,
    /// Scaled total reward used for advantages.
    pub reward: f64,
    /// Episode ended at this step.
    pub done: bool,
}

/// Fixed-capacity rollout storage: `per_env[i]` holds `horizon` transitions,
/// `bootstrap[i]` the value of the post-rollout observation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RolloutBuffer {
    pub per_env: Vec<Vec<Transition>>,
    pub bootstrap: Vec<f64>,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.per_env.iter().map(|v| v.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// GAE over a rollout buffer. Returns (advantages, returns) in env-major
/// order matching `flatten_index`.
pub fn gae(buffer: &RolloutBuffer, gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let mut adv = Vec::with_capacity(buffer.len());
    let mut ret = Vec::with_capacity(buffer.len());
    for (env_i, traj) in buffer.per_env.iter().enumerate() {
        let horizon = traj.len();
        let mut a_env = vec![0.0; horizon];
        let mut acc = 0.0;
        for t in (0..horizon).rev() {
            let next_value = if t + 1 < horizon { traj[t + 1].value } else { buffer.bootstrap[env_i] };
            let nonterminal = if traj[t].done { 0.0 } else { 1.0 };
            let delta = traj[t].reward + gamma * next_value * nonterminal - traj[t].value;
            acc = delta + gamma * lambda * nonterminal * acc;
            a_env[t] = acc;
        }
        for t in 0..horizon {
            adv.push(a_env[t]);
            ret.push(a_env[t] + traj[t].value);
        }
    }
    (adv, ret)
}

/// Reward-component running sums for the training curves.
#[derive(Debug, Clone, Default, Serialize)]
pub struct RewardStats {
    pub n: u64,
    pub r_v: f64,
    pub r_a: f64,
    pub r_h: f64,
    pub r_j: f64,
    pub r_dir: f64,
    pub r_dis: f64,
    pub r_safety: f64,
    pub r_dobs: f64,
    pub total: f64,
    pub episodes: u64,
    pub ep_return: f64,
    pub crashes: u64,
    pub timeouts: u64,
    pub state_limits: u64,
    pub corridor_exits: u64,
}

struct EnvSlot {
    env: NavEnv,
    rng: ChaCha8Rng,
    obs: Observation,
    ep_return: f64,
}

/// Loss statistics for one update.
#[derive(Debug, Clone, Default, Serialize)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_frac: f64,
    pub grad_norm: f64,
}

pub struct Trainer {
    pub cfg: TrainConfig,
    pub env_cfg: EnvConfig,
    pub net: PolicyNet,
    adam: Adam,
    slots: Vec<EnvSlot>,
    update_rng: ChaCha8Rng,
    steps_done: u64,
}

impl Trainer {
    pub fn new(cfg: TrainConfig, mut env_cfg: EnvConfig) -> Result<Self> {
        cfg.validate()?;
        if cfg.ablate_flow {
            env_cfg.disable_flow = true;
        }
        if cfg.ablate_dobs {
            env_cfg.reward.lambda_d = 0.0;
        }
        // Training leaves episodes running at the goal: the cutoff rewards
        // switch the task to safe wandering there. Evaluation terminates on
        // success instead.
        env_cfg.terminate_on_success = false;
        env_cfg.validate()?;

        let mut net = PolicyNet::new(NetSpec::default())?;
        net.init(mix_seed(cfg.seed, 0x11E7));
        let adam = Adam::new(cfg.lr, net.n_params());

        let mut slots = Vec::with_capacity(cfg.n_envs);
        for i in 0..cfg.n_envs {
            let mut env = NavEnv::new(env_cfg.clone(), cfg.seed, i as u64)?;
            let obs = env.reset();
            slots.push(EnvSlot {
                env,
                rng: ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 0xAC7 + i as u64)),
                obs,
                ep_return: 0.0,
            });
        }
        let update_rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, 0x0707));
        Ok(Self { cfg, env_cfg, net, adam, slots, update_rng, steps_done: 0 })
    }

    pub fn steps_done(&self) -> u64 {
        self.steps_done
    }

    /// Collect one rollout of `horizon` steps from every environment.
    pub fn collect(&mut self) -> Result<(RolloutBuffer, RewardStats)> {
        let horizon = self.cfg.horizon;
        let a_ref = self.env_cfg.sim.a_ref;
        let squash_on = self.cfg.squash_actions;
        let scale = self.cfg.reward_scale;
        let net = &self.net;

        let results: Vec<Result<(Vec<Transition>, f64, RewardStats)>> = self
            .slots
            .par_iter_mut()
            .map(|slot| {
                let mut traj = Vec::with_capacity(horizon);
                let mut stats = RewardStats::default();
                for _ in 0..horizon {
                    let (out, _) = net.forward(&slot.obs)?;
                    let mut raw = [0.0; 3];
                    for i in 0..3 {
                        let eps: f64 = slot.rng.sample(StandardNormal);
                        raw[i] = out.mean[i] + out.logstd[i].exp() * eps;
                    }
                    let raw_v = Vector3::new(raw[0], raw[1], raw[2]);
                    let action = if squash_on { squash(&raw_v, a_ref) } else { raw_v };
                    let logp = gaussian_logp(&raw, &out.mean, &out.logstd);

                    let step = slot.env.step(&action)?;
                    let done = step.termination.is_terminal();
                    stats.n += 1;
                    stats.r_v += step.reward.r_v;
                    stats.r_a += step.reward.r_a;
                    stats.r_h += step.reward.r_h;
                    stats.r_j += step.reward.r_j;
                    stats.r_dir += step.reward.r_dir;
                    stats.r_dis += step.reward.r_dis;
                    stats.r_safety += step.reward.r_safety;
                    stats.r_dobs += step.reward.r_dobs;
                    stats.total += step.reward.total;
                    slot.ep_return += step.reward.total;

                    traj.push(Transition {
                        obs: std::mem::replace(&mut slot.obs, Observation::zeros()),
                        action_raw: raw,
                        logp,
                        value: out.value,
                        reward: step.reward.total * scale,
                        done,
                    });

                    if done {
                        match step.termination {
                            TerminationKind::Crash => stats.crashes += 1,
                            TerminationKind::Timeout => stats.timeouts += 1,
                            TerminationKind::StateLimit => stats.state_limits += 1,
                            TerminationKind::CorridorExit => stats.corridor_exits += 1,
                            _ => {}
                        }
                        stats.episodes += 1;
                        stats.ep_return += slot.ep_return;
                        slot.ep_return = 0.0;
                        slot.obs = slot.env.reset();
                    } else {
                        slot.obs = step.obs;
                    }
                }
                let (out, _) = net.forward(&slot.obs)?;
                Ok((traj, out.value, stats))
            })
            .collect();

        let mut per_env = Vec::with_capacity(self.slots.len());
        let mut bootstrap = Vec::with_capacity(self.slots.len());
        let mut stats = RewardStats::default();
        for r in results {
            let (traj, boot, s) = r?;
            per_env.push(traj);
            bootstrap.push(boot);
            stats.n += s.n;
            stats.r_v += s.r_v;
            stats.r_a += s.r_a;
            stats.r_h += s.r_h;
            stats.r_j += s.r_j;
            stats.r_dir += s.r_dir;
            stats.r_dis += s.r_dis;
            stats.r_safety += s.r_safety;
            stats.r_dobs += s.r_dobs;
            stats.total += s.total;
            stats.episodes += s.episodes;
            stats.ep_return += s.ep_return;
            stats.crashes += s.crashes;
            stats.timeouts += s.timeouts;
            stats.state_limits += s.state_limits;
            stats.corridor_exits += s.corridor_exits;
        }
        self.steps_done += (self.cfg.n_envs * horizon) as u64;
        Ok((RolloutBuffer { per_env, bootstrap }, stats))
    }

    /// Clipped-surrogate update over the buffer.
    pub fn update(&mut self, buffer: &RolloutBuffer) -> Result<UpdateStats> {
        let (mut adv, ret) = gae(buffer, self.cfg.gamma, self.cfg.gae_lambda);
        // Normalize advantages over the whole batch.
        let n = adv.len() as f64;
        let mean = adv.iter().sum::<f64>() / n;
        let var = adv.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
        let std = var.sqrt().max(1e-8);
        for a in adv.iter_mut() {
            *a = (*a - mean) / std;
        }

        let flat: Vec<&Transition> = buffer.per_env.iter().flatten().collect();
        let total = flat.len();
        let mut indices: Vec<usize> = (0..total).collect();
        let mut stats = UpdateStats::default();
        let mut stat_batches = 0.0;

        for _ in 0..self.cfg.epochs {
            // Fisher-Yates with the seeded update stream.
            for i in (1..total).rev() {
                let j = self.update_rng.random_range(0..=i);
                indices.swap(i, j);
            }
            for mb in indices.chunks(self.cfg.minibatch) {
                let mb_len = mb.len() as f64;
                let net = &self.net;
                let cfg = &self.cfg;
                let chunk_results: Vec<(Vec<f64>, UpdateStats)> = mb
                    .par_chunks(GRAD_CHUNK)
                    .map(|chunk| {
                        let mut grads = vec![0.0; net.n_params()];
                        let mut s = UpdateStats::default();
                        for &idx in chunk {
                            let tr = flat[idx];
                            let a = adv[idx];
                            let r = ret[idx];
                            let (out, cache) = net
                                .forward(&tr.obs)
                                .expect("stored observations are finite");
                            let logp = gaussian_logp(&tr.action_raw, &out.mean, &out.logstd);
                            let ratio = (logp - tr.logp).exp();
                            let unclipped = ratio * a;
                            let clipped = ratio.clamp(1.0 - cfg.clip, 1.0 + cfg.clip) * a;
                            let takes_unclipped = unclipped <= clipped;
                            s.policy_loss += -unclipped.min(clipped);
                            s.value_loss += (out.value - r) * (out.value - r);
                            s.entropy += gaussian_entropy(&out.logstd);
                            s.approx_kl += tr.logp - logp;
                            if (ratio - 1.0).abs() > cfg.clip {
                                s.clip_frac += 1.0;
                            }

                            // d(loss)/d(logp): -A*ratio on the active branch.
                            let g_logp = if takes_unclipped { -a * ratio } else { 0.0 };
                            let mut d_mean = [0.0; 3];
                            let mut d_logstd = [0.0; 3];
                            for i in 0..3 {
                                let std_i = out.logstd[i].exp();
                                let z = (tr.action_raw[i] - out.mean[i]) / std_i;
                                d_mean[i] = g_logp * z / std_i;
                                d_logstd[i] = g_logp * (z * z - 1.0) - cfg.entropy_coef;
                            }
                            let d_value = cfg.value_coef * 2.0 * (out.value - r);
                            net.backward(&cache, &d_mean, &d_logstd, d_value, &mut grads);
                        }
                        (grads, s)
                    })
                    .collect();

                let mut grads = vec![0.0; self.net.n_params()];
                let mut mb_stats = UpdateStats::default();
                for (g, s) in chunk_results {
                    for (dst, src) in grads.iter_mut().zip(&g) {
                        *dst += src;
                    }
                    mb_stats.policy_loss += s.policy_loss;
                    mb_stats.value_loss += s.value_loss;
                    mb_stats.entropy += s.entropy;
                    mb_stats.approx_kl += s.approx_kl;
                    mb_stats.clip_frac += s.clip_frac;
                }
                for g in grads.iter_mut() {
                    *g /= mb_len;
                }
                let loss = mb_stats.policy_loss / mb_len
                    + self.cfg.value_coef * mb_stats.value_loss / mb_len
                    - self.cfg.entropy_coef * mb_stats.entropy / mb_len;
                if !loss.is_finite() {
                    let dump = std::env::temp_dir().join("flownav_buffer_dump.json");
                    if let Ok(json) = serde_json::to_string(buffer) {
                        let _ = std::fs::write(&dump, json);
                    }
                    return Err(Error::Training(format!(
                        "non-finite loss; buffer dumped to {}",
                        dump.display()
                    )));
                }
                let norm = clip_grad_norm(&mut grads, self.cfg.max_grad_norm);
                self.adam.step(&mut self.net.params, &grads);
                self.net.snap_to_f32();
                self.net.clamp_logstd();

                stats.policy_loss += mb_stats.policy_loss / mb_len;
                stats.value_loss += mb_stats.value_loss / mb_len;
                stats.entropy += mb_stats.entropy / mb_len;
                stats.approx_kl += mb_stats.approx_kl / mb_len;
                stats.clip_frac += mb_stats.clip_frac / mb_len;
                stats.grad_norm += norm;
                stat_batches += 1.0;
            }
        }
        if stat_batches > 0.0 {
            stats.policy_loss /= stat_batches;
            stats.value_loss /= stat_batches;
            stats.entropy /= stat_batches;
            stats.approx_kl /= stat_batches;
            stats.clip_frac /= stat_batches;
            stats.grad_norm /= stat_batches;
        }
        Ok(stats)
    }
}

/// Training outputs on disk.
#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub checkpoint: PathBuf,
    pub curves: PathBuf,
    pub manifest: PathBuf,
    pub final_eval_eta: Option<f64>,
    pub net: PolicyNet,
}

/// Run the full training loop, writing the checkpoint, deterministic curve
/// CSV, and a reproducibility manifest into `out_dir`.
pub fn train(cfg: TrainConfig, env_cfg: EnvConfig, out_dir: &Path, config_hash: &str, verbose: bool) -> Result<TrainOutput> {
    std::fs::create_dir_all(out_dir)?;
    let mut trainer = Trainer::new(cfg.clone(), env_cfg.clone())?;
    let curves_path = out_dir.join("curves.csv");
    let mut curves = std::io::BufWriter::new(std::fs::File::create(&curves_path)?);
    writeln!(
        curves,
        "steps,r_v,r_a,r_h,r_j,r_dir,r_dis,r_safety,r_dobs,reward_total,ep_return,episodes,crashes,timeouts,state_limits,corridor_exits,policy_loss,value_loss,entropy,approx_kl,clip_frac,eval_eta"
    )?;

    let batch = (cfg.n_envs * cfg.horizon) as u64;
    let iters = cfg.total_steps.div_ceil(batch.max(1));
    let mut next_eval = if cfg.eval_every_steps > 0 { cfg.eval_every_steps } else { u64::MAX };
    let mut last_eval_eta: Option<f64> = None;
    let t0 = std::time::Instant::now();

    for it in 0..iters {
        let (buffer, rs) = trainer.collect()?;
        let us = trainer.update(&buffer)?;

        if trainer.steps_done >= next_eval {
            next_eval += cfg.eval_every_steps;
            let eta = quick_eval(&trainer.net, &env_cfg, &cfg, cfg.eval_episodes, mix_seed(cfg.seed, 0xE7A1))?;
            last_eval_eta = Some(eta);
        }

        let n = rs.n.max(1) as f64;
        let ep = rs.episodes.max(1) as f64;
        writeln!(
            curves,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            trainer.steps_done,
            rs.r_v / n,
            rs.r_a / n,
            rs.r_h / n,
            rs.r_j / n,
            rs.r_dir / n,
            rs.r_dis / n,
            rs.r_safety / n,
            rs.r_dobs / n,
            rs.total / n,
            rs.ep_return / ep,
            rs.episodes,
            rs.crashes,
            rs.timeouts,
            rs.state_limits,
            rs.corridor_exits,
            us.policy_loss,
            us.value_loss,
            us.entropy,
            us.approx_kl,
            us.clip_frac,
            last_eval_eta.map_or(String::new(), |e| e.to_string()),
        )?;
        if verbose && (it % 10 == 0 || it + 1 == iters) {
            eprintln!(
                "[train] iter {}/{} steps {} ep_return {:.1} crashes {} timeouts {} kl {:.4} eta {:?} ({:.0}s)",
                it + 1,
                iters,
                trainer.steps_done,
                rs.ep_return / ep,
                rs.crashes,
                rs.timeouts,
                us.approx_kl,
                last_eval_eta,
                t0.elapsed().as_secs_f64()
            );
        }
    }
    curves.flush()?;

    let checkpoint = out_dir.join("policy.ckpt");
    trainer.net.save(&checkpoint, cfg.seed, config_hash)?;

    let manifest = out_dir.join("manifest.toml");
    let manifest_body = toml::to_string_pretty(&ReproManifest {
        config_hash: config_hash.to_string(),
        seed: cfg.seed,
        steps: trainer.steps_done,
        train: cfg.clone(),
        env: env_cfg.clone(),
    })
    .map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(&manifest, manifest_body)?;

    Ok(TrainOutput {
        checkpoint,
        curves: curves_path,
        manifest,
        final_eval_eta: last_eval_eta,
        net: trainer.net,
    })
}

#[derive(Debug, Clone, Serialize)]
struct ReproManifest {
    config_hash: String,
    seed: u64,
    steps: u64,
    train: TrainConfig,
    env: EnvConfig,
}

/// Deterministic evaluation: mean action, squashed, success termination on.
/// Episodes run in parallel with paired per-episode seeds.
pub fn evaluate_policy(
    net: &PolicyNet,
    env_cfg: &EnvConfig,
    train_cfg: &TrainConfig,
    episodes: usize,
    seed0: u64,
    config_hash: &str,
) -> Result<Vec<EpisodeLog>> {
    let mut eval_cfg = env_cfg.clone();
    eval_cfg.terminate_on_success = true;
    if train_cfg.ablate_flow {
        eval_cfg.disable_flow = true;
    }
    let a_ref = eval_cfg.sim.a_ref;
    let squash_on = train_cfg.squash_actions;
    (0..episodes)
        .into_par_iter()
        .map(|i| {
            let mut env = NavEnv::new(eval_cfg.clone(), seed0, i as u64)?;
            let ep_seed = mix_seed(seed0, 0x5EED + i as u64);
            let mut act = |obs: &Observation| {
                let (out, _) = net.forward(obs).expect("finite observation");
                let raw = Vector3::new(out.mean[0], out.mean[1], out.mean[2]);
                if squash_on {
                    squash(&raw, a_ref)
                } else {
                    raw
                }
            };
            run_episode(&mut env, ep_seed, config_hash, &mut act)
        })
        .collect()
}

/// Stochastic evaluation of an untrained (or any) policy: actions sampled
/// from the policy distribution, seeded.
pub fn evaluate_random_policy(
    net: &PolicyNet,
    env_cfg: &EnvConfig,
    train_cfg: &TrainConfig,
    episodes: usize,
    seed0: u64,
) -> Result<Vec<EpisodeLog>> {
    let mut eval_cfg = env_cfg.clone();
    eval_cfg.terminate_on_success = true;
    let a_ref = eval_cfg.sim.a_ref;
    let squash_on = train_cfg.squash_actions;
    (0..episodes)
        .into_par_iter()
        .map(|i| {
            let mut env = NavEnv::new(eval_cfg.clone(), seed0, i as u64)?;
            let ep_seed = mix_seed(seed0, 0x5EED + i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed0, 0xBAD + i as u64));
            let mut act = move |obs: &Observation| {
                let (out, _) = net.forward(obs).expect("finite observation");
                let mut raw = [0.0; 3];
                for k in 0..3 {
                    let eps: f64 = rng.sample(StandardNormal);
                    raw[k] = out.mean[k] + out.logstd[k].exp() * eps;
                }
                let raw_v = Vector3::new(raw[0], raw[1], raw[2]);
                if squash_on {
                    squash(&raw_v, a_ref)
                } else {
                    raw_v
                }
            };
            run_episode(&mut env, ep_seed, "random", &mut act)
        })
        .collect()
}

fn quick_eval(net: &PolicyNet, env_cfg: &EnvConfig, train_cfg: &TrainConfig, episodes: usize, seed0: u64) -> Result<f64> {
    let logs = evaluate_policy(net, env_cfg, train_cfg, episodes, seed0, "eval")?;
    Ok(compute_metrics(&logs).eta)
}

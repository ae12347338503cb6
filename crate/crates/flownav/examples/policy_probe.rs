//! Diagnostic: load a checkpoint, run deterministic evaluation episodes,
//! and print per-episode terminal kind, closest approach to the goal, and
//! mean speed. Handy when tuning reward weights.
//!
//! ```bash
//! cargo run --release --example policy_probe -- <checkpoint> [episodes]
//! ```

use flownav::env::{mix_seed, EnvConfig, NavEnv};
use flownav::metrics::run_episode;
use flownav::policy::{Observation, PolicyNet};
use flownav::ppo::squash;
use nalgebra::Vector3;

fn main() -> anyhow::Result<()> {
    let ckpt = std::env::args().nth(1).expect("usage: policy_probe <checkpoint> [episodes]");
    let episodes: usize = std::env::args().nth(2).map(|s| s.parse()).transpose()?.unwrap_or(12);
    let (net, _, _) = PolicyNet::load(std::path::Path::new(&ckpt))?;

    let mut env_cfg = EnvConfig::default();
    env_cfg.sim.corridor_half_width = 3.0;
    env_cfg.terminate_on_success = true;
    let a_ref = env_cfg.sim.a_ref;

    let mut n_success = 0;
    for i in 0..episodes {
        let mut env = NavEnv::new(env_cfg.clone(), 7, i as u64)?;
        let seed = mix_seed(0xE0A, 0x5EED + i as u64);
        let mut act = |obs: &Observation| {
            let (out, _) = net.forward(obs).unwrap();
            squash(&Vector3::new(out.mean[0], out.mean[1], out.mean[2]), a_ref)
        };
        let log = run_episode(&mut env, seed, "probe", &mut act)?;
        let scenario = log.header.env.scenario.materialize(seed);
        let closest = log
            .ticks
            .iter()
            .map(|t| (t.p - scenario.goal).norm())
            .fold(f64::INFINITY, f64::min);
        let dist: f64 = log
            .ticks
            .windows(2)
            .map(|w| (w[1].p - w[0].p).norm())
            .sum();
        let speed = dist / (log.ticks.len() as f64 * 0.02);
        let min_surf = log.ticks.iter().map(|t| t.d_surf).fold(f64::INFINITY, f64::min);
        if log.terminal == flownav::world::TerminationKind::Success {
            n_success += 1;
        }
        println!(
            "ep {i:2}: {:?} after {} ticks; closest-to-goal {closest:.2} m, mean speed {speed:.2} m/s, min d_surf {min_surf:.2}",
            log.terminal,
            log.ticks.len(),
        );
    }
    println!("eta = {:.2}", n_success as f64 / episodes as f64);
    Ok(())
}

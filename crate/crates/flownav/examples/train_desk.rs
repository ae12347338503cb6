//! Short PPO training demo on the desk-scale arena (12x8 m, three columns,
//! three movers). A few minutes of CPU time; expect the episode return to
//! climb, not a fully converged policy.
//!
//! ```bash
//! cargo run --release --example train_desk -- [out_dir] [total_steps]
//! ```

use flownav::env::EnvConfig;
use flownav::ppo::{train, TrainConfig};

fn main() -> anyhow::Result<()> {
    let out: std::path::PathBuf =
        std::env::args().nth(1).unwrap_or_else(|| "out/train_desk".into()).into();
    let total_steps: u64 = std::env::args().nth(2).map(|s| s.parse()).transpose()?.unwrap_or(100_000);

    let mut env_cfg = EnvConfig::default();
    env_cfg.sim.corridor_half_width = 3.0;
    let cfg = TrainConfig {
        n_envs: 16,
        total_steps,
        seed: 1,
        eval_every_steps: 50_000,
        eval_episodes: 10,
        ..Default::default()
    };

    let result = train(cfg, env_cfg, &out, "example", true)?;
    println!("checkpoint: {}", result.checkpoint.display());
    println!("curves:     {}", result.curves.display());
    if let Some(eta) = result.final_eval_eta {
        println!("last periodic eval success rate: {eta:.2}");
    }
    Ok(())
}

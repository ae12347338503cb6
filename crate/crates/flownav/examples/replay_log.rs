//! Record an episode, write it as JSONL, read it back, and re-execute it
//! through the simulator checking every state bit-for-bit.
//!
//! ```bash
//! cargo run --release --example replay_log
//! ```

use flownav::env::{EnvConfig, NavEnv};
use flownav::metrics::{replay, run_episode, EpisodeLog};
use flownav::policy::Observation;

fn main() -> anyhow::Result<()> {
    let dir = std::env::temp_dir().join("flownav_replay_example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("episode.jsonl");

    let mut env = NavEnv::new(EnvConfig::default(), 42, 0)?;
    let mut act = |obs: &Observation| (obs.goal_dir * 2.0 - obs.vel) * 1.5;
    let log = run_episode(&mut env, 2024, "example", &mut act)?;
    println!("recorded {} ticks, terminal {:?}", log.ticks.len(), log.terminal);

    log.write_jsonl(&path)?;
    let back = EpisodeLog::read_jsonl(&path)?;
    replay(&back)?;
    println!("replay of {} verified bitwise", path.display());
    Ok(())
}

//! Evaluate a policy checkpoint over seeded episodes and print the metrics
//! (success rate, average speed, path ratio, safety distance, latency).
//! Without a checkpoint argument this evaluates a freshly initialized
//! (untrained) policy, which is the random baseline.
//!
//! ```bash
//! cargo run --release --example evaluate -- [checkpoint] [episodes]
//! ```

use flownav::env::EnvConfig;
use flownav::metrics::compute_metrics;
use flownav::policy::{NetSpec, PolicyNet};
use flownav::ppo::{evaluate_policy, TrainConfig};

fn main() -> anyhow::Result<()> {
    let ckpt = std::env::args().nth(1);
    let episodes: usize = std::env::args().nth(2).map(|s| s.parse()).transpose()?.unwrap_or(20);

    let net = match &ckpt {
        Some(path) => {
            let (net, seed, hash) = PolicyNet::load(std::path::Path::new(path))?;
            println!("loaded {} (seed {seed}, config {hash})", path);
            net
        }
        None => {
            println!("no checkpoint given: evaluating an untrained policy");
            let mut net = PolicyNet::new(NetSpec::default())?;
            net.init(0);
            net
        }
    };

    let mut env_cfg = EnvConfig::default();
    env_cfg.sim.corridor_half_width = 3.0;
    let train_cfg = TrainConfig::default();
    let logs = evaluate_policy(&net, &env_cfg, &train_cfg, episodes, 77, "example")?;
    let m = compute_metrics(&logs);

    println!("episodes: {}", m.trials);
    println!("eta:      {:.2} ({} successes)", m.eta, m.successes);
    if let (Some(v_a), Some(r_l)) = (m.v_a, m.r_l) {
        println!("v_a:      {v_a:.2} m/s");
        println!("R_l:      {r_l:.3}");
    }
    if let (Some(d_s), Some(d_min)) = (m.d_s, m.d_s_min) {
        println!("d_s:      {d_s:.2} m (min {d_min:.2} m)");
    }
    if let Some(t_p) = m.t_p_ms {
        println!("t_p:      {t_p:.2} ms");
    }
    Ok(())
}

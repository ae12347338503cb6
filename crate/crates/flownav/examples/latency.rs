//! Perception-to-action latency: encode + flow + forward per tick on
//! synthetic scans of growing size.
//!
//! ```bash
//! cargo run --release --example latency
//! ```

use flownav::lidar::LidarConfig;
use flownav::metrics::latency_bench;
use flownav::policy::{NetSpec, PolicyNet};

fn main() -> anyhow::Result<()> {
    let mut net = PolicyNet::new(NetSpec::default())?;
    net.init(1);
    let lidar = LidarConfig::default();
    println!("points   mean_ms   p95_ms");
    for s in latency_bench(&[0, 2_000, 14_400, 57_600], 40, &net, &lidar) {
        println!("{:6}   {:7.3}   {:6.3}", s.points, s.mean_ms, s.p95_ms);
    }
    Ok(())
}

//! Simulate a LiDAR sweep of a small scene and encode it into the raycast
//! grid, grayscale image, and 36x6 distance map.
//!
//! ```bash
//! cargo run --release --example encode_scan -- [out_dir]
//! ```

use flownav::lidar::{encode_distance_map, encode_raycast_grid, scan, LidarConfig, MAP_H, MAP_W};
use flownav::world::{SamplerSpec, ScenarioSpec, WorldState};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

fn main() -> anyhow::Result<()> {
    let out: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "out/encode_scan".into()).into();
    std::fs::create_dir_all(&out)?;

    let spec = ScenarioSpec {
        sampler: SamplerSpec { n_static_columns: 4, n_dynamic: 2, ..Default::default() },
        ..Default::default()
    };
    let scenario = spec.materialize(7);
    let world = WorldState::init(&scenario);
    let lidar = LidarConfig::default();

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let frame = scan(&world, &lidar, &mut rng);
    println!("scanned {} returns from {} obstacles", frame.points.len(), scenario.obstacles.len());

    let grid = encode_raycast_grid(&frame, &lidar);
    let occupied = grid.cells.iter().filter(|c| c.point.is_some()).count();
    println!("raycast grid: {} of {} partitions occupied", occupied, grid.cells.len());

    let (gray, dmap) = encode_distance_map(&grid);
    gray.write_pgm16(&out.join("gray.pgm"))?;
    dmap.normalized().write_pgm16(&out.join("dmap.pgm"))?;

    let mut csv = String::new();
    for y in 0..MAP_H {
        let row: Vec<String> = (0..MAP_W).map(|x| format!("{:.3}", dmap.meters.get(x, y))).collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    std::fs::write(out.join("dmap.csv"), &csv)?;

    let nearest = dmap.meters.data.iter().cloned().fold(f64::INFINITY, f64::min);
    println!("nearest distance-map cell: {nearest:.2} m");
    println!("wrote gray.pgm, dmap.pgm, dmap.csv to {}", out.display());
    Ok(())
}

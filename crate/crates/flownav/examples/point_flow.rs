//! Watch the point flow light up as an obstacle crosses the sensor's view:
//! a hovering quadrotor, one cylinder sweeping left to right, and the
//! per-cell flow printed once the pipeline history fills.
//!
//! ```bash
//! cargo run --release --example point_flow
//! ```

use flownav::flow::{FlowConfig, PointFlowPipeline};
use flownav::lidar::{encode_distance_map, encode_raycast_grid, scan, LidarConfig, MAP_H, MAP_W};
use flownav::world::{
    FieldBounds, Obstacle, ObstacleShape, Scenario, SimConfig, WorldState,
};
use nalgebra::{Vector2, Vector3};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> anyhow::Result<()> {
    let field = FieldBounds { min: Vector2::new(-6.0, -4.0), max: Vector2::new(6.0, 4.0) };
    let mover = Obstacle::uniform_linear(
        ObstacleShape::Cylinder { radius: 0.4, half_height: 1.5 },
        Vector3::new(3.0, -3.0, 1.5),
        Vector3::new(0.0, 2.0, 0.0), // crossing left to right in the sensor frame
    );
    let scenario = Scenario {
        field,
        start: Vector3::new(0.0, 0.0, 1.5),
        goal: Vector3::new(5.0, 0.0, 1.5),
        quad_radius: 0.2,
        seed: 0,
        obstacles: vec![mover],
    };
    let sim = SimConfig::default();
    let lidar = LidarConfig::default();
    let flow_cfg = FlowConfig::default();
    let mut pipeline = PointFlowPipeline::new(flow_cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    let mut world = WorldState::init(&scenario);
    for tick in 0..40 {
        world = flownav::world::step(&world, &Vector3::zeros(), &sim, &field)?;
        let frame = scan(&world, &lidar, &mut rng);
        let grid = encode_raycast_grid(&frame, &lidar);
        let (gray, _) = encode_distance_map(&grid);
        let pf = pipeline.push(&gray);

        if tick >= flow_cfg.warmup_frames() as u64 + 4 && tick % 8 == 0 {
            // Strongest-moving cell and its direction.
            let mut best = (0usize, 0usize, 0.0f64);
            for y in 0..MAP_H {
                for x in 0..MAP_W {
                    let mag = pf.du.get(x, y).hypot(pf.dv.get(x, y));
                    if mag > best.2 {
                        best = (x, y, mag);
                    }
                }
            }
            let (x, y, mag) = best;
            println!(
                "tick {tick:3}: obstacle at ({:+.2}, {:+.2}); peak flow cell ({x:2},{y}) mag {mag:.4} du {:+.4}",
                world.obstacles[0].p.x,
                world.obstacles[0].p.y,
                pf.du.get(x, y),
            );
        }
    }
    println!("positive du = image motion toward increasing azimuth (counterclockwise)");
    Ok(())
}

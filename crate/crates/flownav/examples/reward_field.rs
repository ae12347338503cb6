//! Render the relative-motion reshaped distance field of a dynamic
//! obstacle: the 5x5 m window with orthogonal 1 m/s velocities, written as
//! CSV grids plus a coarse ASCII picture of k.
//!
//! ```bash
//! cargo run --release --example reward_field -- [out_dir]
//! ```

use flownav::env::EnvConfig;
use flownav::reward::render_reshaped_field;
use flownav::world::{Obstacle, ObstacleShape};
use nalgebra::Vector3;

fn main() -> anyhow::Result<()> {
    let out: std::path::PathBuf =
        std::env::args().nth(1).unwrap_or_else(|| "out/reward_field".into()).into();
    std::fs::create_dir_all(&out)?;

    let obstacle = Obstacle::uniform_linear(
        ObstacleShape::Cylinder { radius: 0.3, half_height: 1.5 },
        Vector3::new(0.0, 0.0, 1.5),
        Vector3::new(0.0, 1.0, 0.0), // obstacle north at 1 m/s
    );
    let quad_v = Vector3::new(1.0, 0.0, 0.0); // quad east at 1 m/s
    let cfg = EnvConfig::default().reward_config();
    let field = render_reshaped_field(&obstacle, &quad_v, &cfg, 2.5, 0.05);

    let write = |name: &str, data: &[f64]| -> anyhow::Result<()> {
        let mut body = String::new();
        for iy in 0..field.n {
            let row: Vec<String> =
                (0..field.n).map(|ix| format!("{}", data[iy * field.n + ix])).collect();
            body.push_str(&row.join(","));
            body.push('\n');
        }
        std::fs::write(out.join(name), body)?;
        Ok(())
    };
    write("k.csv", &field.k)?;
    write("reshaped.csv", &field.reshaped_log)?;

    // Coarse ASCII view of k (y downward = south).
    println!("reshape coefficient k around the obstacle (q = quad velocity +x, o = obstacle velocity +y):");
    let chars = [' ', '.', ':', '-', '=', '+', '*', '#', '%', '@'];
    let k_max = field.k.iter().cloned().fold(1.0f64, f64::max);
    for iy in (0..field.n).step_by(4).rev() {
        let mut line = String::new();
        for ix in (0..field.n).step_by(2) {
            let k = field.k[iy * field.n + ix];
            let t = ((k - 1.0) / (k_max - 1.0) * 9.0).round() as usize;
            line.push(chars[t.min(9)]);
        }
        println!("{line}");
    }
    println!("max k = {k_max:.3}; CSVs in {}", out.display());
    Ok(())
}

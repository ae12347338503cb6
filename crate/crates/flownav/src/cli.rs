//! Subcommand dispatch for the `flownav` binary. All functionality lives in
//! the library; the binary is a thin wrapper around [`run`].
//!
//! Exit codes: 0 success, 1 validation error (bad config, bad scenario,
//! malformed arguments), 2 runtime failure (replay mismatch, I/O trouble,
//! training abort).

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::Vector3;

use crate::config::{load_config, AppConfig};
use crate::error::{Error, Result};
use crate::flow::PointFlowPipeline;
use crate::image2d::Image;
use crate::lidar::{encode_distance_map, encode_raycast_grid, ScanFrame, MAP_H, MAP_W};
use crate::metrics::{
    self, benchmark_rows, compute_metrics, latency_bench, replay, EpisodeLog, MetricsReport,
};
use crate::policy::PolicyNet;
use crate::ppo::{evaluate_policy, train};
use crate::reward::{render_reshaped_field, RewardConfig};
use crate::world::{Obstacle, ObstacleShape, ScenarioSpec};

#[derive(Parser)]
#[command(name = "flownav", version, about = "LiDAR point-flow navigation simulator and training stack")]
struct Cli {
    /// Config file (TOML). Defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. --override env.sim.v_ref=4.0 (repeatable).
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate or sample scenario files.
    Scenario {
        #[command(subcommand)]
        action: ScenarioCmd,
    },
    /// Encode a scan log (JSONL of point frames) into PGM images and CSV
    /// distance maps.
    Encode {
        /// Scan log: one JSON object per line, {"t": .., "points": [[x,y,z],..]}.
        #[arg(long)]
        scan: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the point-flow pipeline over a directory of PGM frames.
    Flow {
        /// Directory of 16-bit PGM grayscale frames, processed in name order.
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write a flow-wheel PNG per frame.
        #[arg(long)]
        png: bool,
    },
    /// Render the reshaped distance field of a moving obstacle to CSV.
    RenderField(RenderFieldArgs),
    /// Train a policy with PPO.
    Train {
        #[arg(long)]
        out: PathBuf,
        /// Print progress to stderr.
        #[arg(long)]
        quiet: bool,
    },
    /// Evaluate a checkpoint over seeded episodes.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        episodes: Option<usize>,
        /// Write per-episode JSONL logs.
        #[arg(long)]
        logs: bool,
    },
    /// Run the scenario-density benchmark grid, or the encode latency
    /// benchmark.
    Bench {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        density_factor: Option<f64>,
        #[arg(long)]
        trials: Option<usize>,
        /// Measure encode+flow+forward latency at these synthetic point
        /// counts instead of the density grid.
        #[arg(long, value_delimiter = ',')]
        latency_points: Vec<usize>,
    },
    /// Re-execute an episode log and verify bitwise state equality.
    Replay {
        log: PathBuf,
    },
}

#[derive(Subcommand)]
enum ScenarioCmd {
    /// Check a scenario file against its invariants.
    Validate { file: PathBuf },
    /// Materialize scenarios from a file and write them as JSON.
    Sample {
        file: PathBuf,
        #[arg(long, default_value_t = 1)]
        n: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RenderFieldArgs {
    /// Output directory for k.csv and reshaped.csv.
    #[arg(long)]
    out: PathBuf,
    /// Window half-size, m (5x5 m window by default).
    #[arg(long, default_value_t = 2.5)]
    half: f64,
    /// Grid step, m.
    #[arg(long, default_value_t = 0.05)]
    step: f64,
    /// Obstacle speed along +y, m/s.
    #[arg(long, default_value_t = 1.0)]
    obstacle_speed: f64,
    /// Quadrotor speed along +x, m/s.
    #[arg(long, default_value_t = 1.0)]
    quad_speed: f64,
    /// Obstacle radius, m.
    #[arg(long, default_value_t = 0.3)]
    radius: f64,
}

/// Entry point used by the binary; returns the process exit code.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Scenario(_) | Error::InvalidAction(_) | Error::OutOfFov => 1,
                _ => 2,
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let cfg = load_config(cli.config.as_deref(), &cli.overrides, cli.seed)?;
    match cli.cmd {
        Cmd::Scenario { action } => scenario_cmd(action),
        Cmd::Encode { scan, out } => encode_cmd(&cfg, &scan, &out),
        Cmd::Flow { frames, out, png } => flow_cmd(&cfg, &frames, &out, png),
        Cmd::RenderField(args) => render_field_cmd(&cfg, &args),
        Cmd::Train { out, quiet } => {
            let result = train(cfg.train.clone(), cfg.env.clone(), &out, &cfg.hash(), !quiet)?;
            println!("checkpoint: {}", result.checkpoint.display());
            println!("curves: {}", result.curves.display());
            println!("manifest: {}", result.manifest.display());
            if let Some(eta) = result.final_eval_eta {
                println!("eval_eta: {eta}");
            }
            Ok(())
        }
        Cmd::Eval { checkpoint, out, episodes, logs } => eval_cmd(&cfg, &checkpoint, &out, episodes, logs),
        Cmd::Bench { checkpoint, out, density_factor, trials, latency_points } => {
            bench_cmd(&cfg, checkpoint.as_deref(), &out, density_factor, trials, &latency_points)
        }
        Cmd::Replay { log } => {
            let log = EpisodeLog::read_jsonl(&log)?;
            replay(&log)?;
            println!("replay ok: {} ticks, terminal {:?}", log.ticks.len(), log.terminal);
            Ok(())
        }
    }
}

fn read_scenario_file(path: &Path) -> Result<ScenarioSpec> {
    let body = std::fs::read_to_string(path)?;
    let spec: ScenarioSpec =
        toml::from_str(&body).map_err(|e| Error::Scenario(format!("{}: {e}", path.display())))?;
    Ok(spec)
}

fn scenario_cmd(action: ScenarioCmd) -> Result<()> {
    match action {
        ScenarioCmd::Validate { file } => {
            let spec = read_scenario_file(&file)?;
            spec.validate()?;
            println!("ok: {}", file.display());
            Ok(())
        }
        ScenarioCmd::Sample { file, n, out } => {
            let spec = read_scenario_file(&file)?;
            spec.validate()?;
            for i in 0..n {
                let seed = spec.seed.wrapping_add(i);
                let sc = spec.materialize(seed);
                let json = serde_json::to_string_pretty(&sc).map_err(|e| Error::Scenario(e.to_string()))?;
                match &out {
                    Some(dir) => {
                        std::fs::create_dir_all(dir)?;
                        std::fs::write(dir.join(format!("scenario_{seed}.json")), json)?;
                    }
                    None => println!("{json}"),
                }
            }
            Ok(())
        }
    }
}

#[derive(serde::Deserialize)]
struct ScanLogLine {
    t: f64,
    points: Vec<[f64; 3]>,
}

fn encode_cmd(cfg: &AppConfig, scan: &Path, out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let body = std::fs::read_to_string(scan)?;
    for (i, line) in body.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: ScanLogLine = serde_json::from_str(line)
            .map_err(|e| Error::Log(format!("{}:{}: {e}", scan.display(), i + 1)))?;
        let frame = ScanFrame::from_points(
            parsed.points.iter().map(|p| Vector3::new(p[0], p[1], p[2])),
            &cfg.env.lidar,
            parsed.t,
        );
        let grid = encode_raycast_grid(&frame, &cfg.env.lidar);
        let (gray, dmap) = encode_distance_map(&grid);
        gray.write_pgm16(&out.join(format!("gray_{i:04}.pgm")))?;
        dmap.normalized().write_pgm16(&out.join(format!("dmap_{i:04}.pgm")))?;
        let mut csv = String::new();
        for y in 0..MAP_H {
            let row: Vec<String> = (0..MAP_W).map(|x| format!("{}", dmap.meters.get(x, y))).collect();
            csv.push_str(&row.join(","));
            csv.push('\n');
        }
        std::fs::write(out.join(format!("dmap_{i:04}.csv")), csv)?;
    }
    println!("encoded {} frames into {}", body.lines().filter(|l| !l.trim().is_empty()).count(), out.display());
    Ok(())
}

fn flow_cmd(cfg: &AppConfig, frames_dir: &Path, out: &Path, png: bool) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let mut entries: Vec<PathBuf> = std::fs::read_dir(frames_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "pgm"))
        .collect();
    entries.sort();
    if entries.is_empty() {
        return Err(Error::Config(format!("no .pgm frames in {}", frames_dir.display())));
    }
    let mut pipeline = PointFlowPipeline::new(cfg.env.flow);
    for (k, path) in entries.iter().enumerate() {
        let img = Image::read_pgm16(path)?;
        let pf = pipeline.push(&img);
        let mut csv = String::from("cell,du,dv\n");
        for y in 0..MAP_H {
            for x in 0..MAP_W {
                let cell = MAP_W * y + x + 1;
                csv.push_str(&format!("{cell},{},{}\n", pf.du.get(x, y), pf.dv.get(x, y)));
            }
        }
        std::fs::write(out.join(format!("flow_{k:04}.csv")), csv)?;
        if png {
            if let Some((du, dv)) = pipeline.last_average() {
                write_flow_png(du, dv, &out.join(format!("flow_{k:04}.png")))?;
            }
        }
    }
    println!("processed {} frames into {}", entries.len(), out.display());
    Ok(())
}

/// Flow-wheel rendering: hue from direction, saturation from magnitude.
fn write_flow_png(du: &Image, dv: &Image, path: &Path) -> Result<()> {
    let max_mag = du
        .data
        .iter()
        .zip(&dv.data)
        .map(|(u, v)| (u * u + v * v).sqrt())
        .fold(1e-9f64, f64::max);
    let mut img = image::RgbImage::new(du.width as u32, du.height as u32);
    for y in 0..du.height {
        for x in 0..du.width {
            let u = du.get(x, y);
            let v = dv.get(x, y);
            let mag = ((u * u + v * v).sqrt() / max_mag).clamp(0.0, 1.0);
            let ang = v.atan2(u); // [-pi, pi]
            let hue = (ang + std::f64::consts::PI) / (2.0 * std::f64::consts::PI) * 6.0;
            let sector = hue.floor() as i32 % 6;
            let f = hue - hue.floor();
            let (r, g, b) = match sector {
                0 => (1.0, f, 0.0),
                1 => (1.0 - f, 1.0, 0.0),
                2 => (0.0, 1.0, f),
                3 => (0.0, 1.0 - f, 1.0),
                4 => (f, 0.0, 1.0),
                _ => (1.0, 0.0, 1.0 - f),
            };
            let mix = |c: f64| ((1.0 - mag) + mag * c) * 255.0;
            img.put_pixel(x as u32, y as u32, image::Rgb([mix(r) as u8, mix(g) as u8, mix(b) as u8]));
        }
    }
    img.save(path).map_err(|e| Error::Log(format!("{}: {e}", path.display())))?;
    Ok(())
}

fn render_field_cmd(cfg: &AppConfig, args: &RenderFieldArgs) -> Result<()> {
    std::fs::create_dir_all(&args.out)?;
    let reward_cfg: RewardConfig = cfg.env.reward_config();
    let obstacle = Obstacle::uniform_linear(
        ObstacleShape::Cylinder { radius: args.radius, half_height: 1.5 },
        Vector3::new(0.0, 0.0, 1.5),
        Vector3::new(0.0, args.obstacle_speed, 0.0),
    );
    let quad_v = Vector3::new(args.quad_speed, 0.0, 0.0);
    let field = render_reshaped_field(&obstacle, &quad_v, &reward_cfg, args.half, args.step);
    let write_grid = |name: &str, data: &[f64]| -> Result<()> {
        let mut body = String::new();
        for iy in 0..field.n {
            let row: Vec<String> = (0..field.n).map(|ix| format!("{}", data[iy * field.n + ix])).collect();
            body.push_str(&row.join(","));
            body.push('\n');
        }
        std::fs::write(args.out.join(name), body)?;
        Ok(())
    };
    write_grid("k.csv", &field.k)?;
    write_grid("reshaped.csv", &field.reshaped_log)?;
    println!("rendered {}x{} field into {}", field.n, field.n, args.out.display());
    Ok(())
}

fn write_report(path: &Path, rows: &[(String, MetricsReport)], config_hash: &str, seed: u64) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "# config_hash={config_hash} seed={seed}")?;
    writeln!(f, "scenario,trials,successes,eta,v_a,r_l,d_s,d_s_min,t_p_ms")?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    for (name, m) in rows {
        writeln!(
            f,
            "{name},{},{},{},{},{},{},{},{}",
            m.trials,
            m.successes,
            m.eta,
            opt(m.v_a),
            opt(m.r_l),
            opt(m.d_s),
            opt(m.d_s_min),
            opt(m.t_p_ms)
        )?;
    }
    Ok(())
}

fn eval_cmd(cfg: &AppConfig, checkpoint: &Path, out: &Path, episodes: Option<usize>, logs: bool) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let (net, _, _) = PolicyNet::load(checkpoint)?;
    let episodes = episodes.unwrap_or(cfg.eval.episodes);
    let hash = cfg.hash();
    let log_vec = evaluate_policy(&net, &cfg.env, &cfg.train, episodes, cfg.seed, &hash)?;
    let report = compute_metrics(&log_vec);
    write_report(&out.join("report.csv"), &[("eval".into(), report.clone())], &hash, cfg.seed)?;
    if logs || cfg.eval.write_logs {
        for (i, log) in log_vec.iter().enumerate() {
            log.write_jsonl(&out.join(format!("episode_{i:03}.jsonl")))?;
        }
    }
    println!(
        "eta {} over {} episodes ({} success)",
        report.eta, report.trials, report.successes
    );
    Ok(())
}

fn bench_cmd(
    cfg: &AppConfig,
    checkpoint: Option<&Path>,
    out: &Path,
    density_factor: Option<f64>,
    trials: Option<usize>,
    latency_points: &[usize],
) -> Result<()> {
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let hash = cfg.hash();

    if !latency_points.is_empty() {
        let mut net = PolicyNet::new(crate::policy::NetSpec::default())?;
        net.init(cfg.seed);
        let stats = latency_bench(latency_points, 40, &net, &cfg.env.lidar);
        let mut f = std::io::BufWriter::new(std::fs::File::create(out)?);
        writeln!(f, "# config_hash={hash} seed={}", cfg.seed)?;
        writeln!(f, "points,mean_ms,p95_ms")?;
        for s in &stats {
            writeln!(f, "{},{},{}", s.points, s.mean_ms, s.p95_ms)?;
            println!("{} points: mean {:.3} ms, p95 {:.3} ms", s.points, s.mean_ms, s.p95_ms);
        }
        return Ok(());
    }

    let checkpoint = checkpoint.ok_or_else(|| Error::Config("bench needs --checkpoint (or --latency-points)".into()))?;
    let (net, _, _) = PolicyNet::load(checkpoint)?;
    let factor = density_factor.unwrap_or(cfg.bench.density_factor);
    let trials = trials.unwrap_or(cfg.bench.trials);
    let mut rows = Vec::new();
    for (name, dynamic, stat) in benchmark_rows(factor) {
        let mut env_cfg = cfg.env.clone();
        env_cfg.scenario.sampler.n_dynamic = dynamic;
        env_cfg.scenario.sampler.n_static_columns = stat;
        let logs = evaluate_policy(&net, &env_cfg, &cfg.train, trials, cfg.seed, &hash)?;
        let report = compute_metrics(&logs);
        println!("{name}: eta {}", report.eta);
        rows.push((name, report));
    }
    write_report(out, &rows, &hash, cfg.seed)?;
    println!("benchmark written to {}", out.display());
    Ok(())
}

// Re-exported for integration tests that drive the CLI in-process.
pub use metrics::replay as replay_log;

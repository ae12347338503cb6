//! Episode logs and evaluation metrics.
//!
//! Logs are line-delimited JSON (header record, tick records, terminal
//! record) carrying the effective environment config, so any log can be
//! replayed bit-for-bit from the file alone. Metrics follow the evaluation
//! protocol: success rate over all trials, speed/path/safety/latency over
//! successful trials only.

use std::io::{BufRead, Write};
use std::path::Path;
use std::time::Instant;

use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{EnvConfig, NavEnv};
use crate::error::{Error, Result};
use crate::flow::PointFlowPipeline;
use crate::lidar::{encode_distance_map, encode_raycast_grid, LidarConfig, ScanFrame, MAP_H, MAP_W};
use crate::policy::{Observation, PolicyNet};
use crate::reward::RewardBreakdown;
use crate::world::TerminationKind;

pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub version: u32,
    pub config_hash: String,
    pub episode_seed: u64,
    /// Effective environment config, echoed for provenance and replay.
    pub env: EnvConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u64,
    pub t: f64,
    pub p: Vector3<f64>,
    pub v: Vector3<f64>,
    pub a: Vector3<f64>,
    pub reward: RewardBreakdown,
    /// Nearest obstacle surface distance, m.
    pub d_surf: f64,
    /// Perception-to-action latency for this tick, ms (wall clock; excluded
    /// from replay comparison).
    pub latency_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogRecord {
    Header(LogHeader),
    Tick(Box<TickRecord>),
    Terminal { kind: TerminationKind },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub header: LogHeader,
    pub ticks: Vec<TickRecord>,
    pub terminal: TerminationKind,
}

impl EpisodeLog {
    pub fn success(&self) -> bool {
        self.terminal == TerminationKind::Success
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        let emit = |f: &mut dyn Write, r: &LogRecord| -> Result<()> {
            let line = serde_json::to_string(r).map_err(|e| Error::Log(e.to_string()))?;
            writeln!(f, "{line}")?;
            Ok(())
        };
        emit(&mut f, &LogRecord::Header(self.header.clone()))?;
        for t in &self.ticks {
            emit(&mut f, &LogRecord::Tick(Box::new(t.clone())))?;
        }
        emit(&mut f, &LogRecord::Terminal { kind: self.terminal })?;
        Ok(())
    }

    pub fn read_jsonl(path: &Path) -> Result<EpisodeLog> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut header = None;
        let mut ticks = Vec::new();
        let mut terminal = None;
        for (i, line) in f.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: LogRecord = serde_json::from_str(&line)
                .map_err(|e| Error::Log(format!("{}:{}: {e}", path.display(), i + 1)))?;
            match rec {
                LogRecord::Header(h) => header = Some(h),
                LogRecord::Tick(t) => ticks.push(*t),
                LogRecord::Terminal { kind } => terminal = Some(kind),
            }
        }
        let header = header.ok_or_else(|| Error::Log("missing header record".into()))?;
        if header.version != LOG_VERSION {
            return Err(Error::Log(format!("unsupported log version {}", header.version)));
        }
        let terminal = terminal.ok_or_else(|| Error::Log("missing terminal record".into()))?;
        Ok(EpisodeLog { header, ticks, terminal })
    }
}

/// Run one episode with an arbitrary actor closure, recording every tick.
/// The closure call is timed and added to the encode latency.
pub fn run_episode(
    env: &mut NavEnv,
    episode_seed: u64,
    config_hash: &str,
    act: &mut dyn FnMut(&Observation) -> Vector3<f64>,
) -> Result<EpisodeLog> {
    let mut obs = env.reset_to_seed(episode_seed);
    let header = LogHeader {
        version: LOG_VERSION,
        config_hash: config_hash.to_string(),
        episode_seed,
        env: env.config().clone(),
    };
    let mut ticks = Vec::new();
    loop {
        let t0 = Instant::now();
        let a = act(&obs);
        let forward_ms = t0.elapsed().as_secs_f64() * 1e3;
        let out = env.step(&a)?;
        let w = env.world();
        ticks.push(TickRecord {
            tick: w.tick,
            t: w.quad.t,
            p: w.quad.p,
            v: w.quad.v,
            a,
            reward: out.reward.clone(),
            d_surf: out.nearest_surface,
            latency_ms: out.encode_ms + forward_ms,
        });
        if out.termination.is_terminal() {
            return Ok(EpisodeLog { header, ticks, terminal: out.termination });
        }
        obs = out.obs;
    }
}

/// Re-execute a log through the simulator and compare states bit-for-bit.
/// Wall-clock latency fields are exempt; everything else must match.
pub fn replay(log: &EpisodeLog) -> Result<()> {
    let mut env = NavEnv::new(log.header.env.clone(), 0, 0)?;
    env.reset_to_seed(log.header.episode_seed);
    let mismatch = |tick: u64, field: &str| Error::ReplayMismatch { tick, field: field.to_string() };
    let mut terminal = TerminationKind::Running;
    for rec in &log.ticks {
        let out = env.step(&rec.a)?;
        let w = env.world();
        if w.tick != rec.tick {
            return Err(mismatch(rec.tick, "tick"));
        }
        if w.quad.p != rec.p {
            return Err(mismatch(rec.tick, "p"));
        }
        if w.quad.v != rec.v {
            return Err(mismatch(rec.tick, "v"));
        }
        if out.reward != rec.reward {
            return Err(mismatch(rec.tick, "reward"));
        }
        if out.nearest_surface != rec.d_surf {
            return Err(mismatch(rec.tick, "d_surf"));
        }
        terminal = out.termination;
        if terminal.is_terminal() {
            break;
        }
    }
    if terminal != log.terminal {
        return Err(mismatch(log.ticks.last().map_or(0, |t| t.tick), "terminal"));
    }
    Ok(())
}

/// Evaluation metrics over a batch of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub trials: usize,
    pub successes: usize,
    /// Success rate over all trials.
    pub eta: f64,
    /// Average flight speed over successful trials, m/s.
    pub v_a: Option<f64>,
    /// Path-length ratio over successful trials.
    pub r_l: Option<f64>,
    /// Mean nearest-obstacle surface distance over successful trials, m.
    pub d_s: Option<f64>,
    /// Minimum nearest-obstacle surface distance over successful trials, m.
    pub d_s_min: Option<f64>,
    /// Mean perception-to-action latency over successful trials, ms.
    pub t_p_ms: Option<f64>,
}

/// Ratio of ablated to reference success rate.
pub fn alpha_c(ablated_eta: f64, reference_eta: f64) -> Option<f64> {
    (reference_eta > 0.0).then(|| ablated_eta / reference_eta)
}

pub fn compute_metrics(logs: &[EpisodeLog]) -> MetricsReport {
    assert!(!logs.is_empty(), "compute_metrics needs at least one log");
    let trials = logs.len();
    let successes = logs.iter().filter(|l| l.success()).count();
    let eta = successes as f64 / trials as f64;

    let mut v_a = Vec::new();
    let mut r_l = Vec::new();
    let mut d_s = Vec::new();
    let mut d_s_min = Vec::new();
    let mut t_p = Vec::new();
    for log in logs.iter().filter(|l| l.success()) {
        let scenario = log.header.env.scenario.materialize(log.header.episode_seed);
        let mut length = 0.0;
        let mut prev = scenario.start;
        for t in &log.ticks {
            length += (t.p - prev).norm();
            prev = t.p;
        }
        let duration = log.ticks.last().map_or(0.0, |t| t.t);
        if duration > 0.0 {
            v_a.push(length / duration);
        }
        let straight = (scenario.goal - scenario.start).norm();
        if straight > 0.0 {
            r_l.push(length / straight);
        }
        let n = log.ticks.len() as f64;
        d_s.push(log.ticks.iter().map(|t| t.d_surf).sum::<f64>() / n);
        d_s_min.push(log.ticks.iter().map(|t| t.d_surf).fold(f64::INFINITY, f64::min));
        t_p.push(log.ticks.iter().map(|t| t.latency_ms).sum::<f64>() / n);
    }
    let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    MetricsReport {
        trials,
        successes,
        eta,
        v_a: mean(&v_a),
        r_l: mean(&r_l),
        d_s: mean(&d_s),
        d_s_min: mean(&d_s_min),
        t_p_ms: mean(&t_p),
    }
}

/// Scenario-density benchmark rows (dynamic count, static count), scaled by
/// a density factor.
pub fn benchmark_rows(factor: f64) -> Vec<(String, usize, usize)> {
    [(7usize, 7usize), (13, 13), (25, 19), (25, 0), (0, 44)]
        .iter()
        .map(|(d, s)| {
            let dd = ((*d as f64) * factor).round() as usize;
            let ss = ((*s as f64) * factor).round() as usize;
            (format!("{dd} dynamic and {ss} static"), dd, ss)
        })
        .collect()
}

/// Latency statistics for one synthetic scan size.
#[derive(Debug, Clone, Serialize)]
pub struct LatencyStats {
    pub points: usize,
    pub mean_ms: f64,
    pub p95_ms: f64,
}

/// Measure encode + flow + forward wall time per tick on synthetic scans of
/// the given point counts. The synthetic cloud drifts between frames so the
/// flow estimator does realistic work.
pub fn latency_bench(point_counts: &[usize], iters: usize, net: &PolicyNet, lidar: &LidarConfig) -> Vec<LatencyStats> {
    let mut out = Vec::new();
    for &count in point_counts {
        let mut rng = ChaCha8Rng::seed_from_u64(count as u64 + 1);
        // Base cloud: directions plus distances, re-projected each frame
        // with a small azimuth drift.
        let base: Vec<(f64, f64, f64)> = (0..count)
            .map(|_| {
                let th = rng.random_range(lidar.fov_h.0..lidar.fov_h.1);
                let tv = rng.random_range(lidar.fov_v.0..lidar.fov_v.1);
                let d = rng.random_range(0.5..lidar.d_max);
                (th, tv, d)
            })
            .collect();
        let frame_at = |drift: f64| {
            let points = base.iter().map(|(th, tv, d)| {
                let th = th + drift;
                let (sh, ch) = th.sin_cos();
                let (sv, cv) = tv.sin_cos();
                Vector3::new(cv * ch * d, cv * sh * d, sv * d)
            });
            ScanFrame::from_points(points, lidar, 0.0)
        };

        let mut pipeline = PointFlowPipeline::new(crate::flow::FlowConfig::default());
        let mut samples = Vec::with_capacity(iters);
        let warm = pipeline.config().warmup_frames() + 1;
        for i in 0..warm + iters {
            let frame = frame_at(i as f64 * 2e-3);
            let t0 = Instant::now();
            let grid = encode_raycast_grid(&frame, lidar);
            let (gray, dmap) = encode_distance_map(&grid);
            let pflow = pipeline.push(&gray);
            let normalized = dmap.normalized();
            let mut sensing = vec![0.0; 3 * MAP_W * MAP_H];
            for x in 0..MAP_W {
                for y in 0..MAP_H {
                    sensing[x * MAP_H + y] = normalized.get(x, y);
                    sensing[(MAP_W + x) * MAP_H + y] = pflow.du.get(x, y);
                    sensing[(2 * MAP_W + x) * MAP_H + y] = pflow.dv.get(x, y);
                }
            }
            let obs = Observation {
                sensing,
                goal_dir: Vector3::new(1.0, 0.0, 0.0),
                vel: Vector3::new(1.0, 0.0, 0.0),
                a_last: Vector3::zeros(),
            };
            let _ = net.forward(&obs).expect("finite observation");
            let dt_ms = t0.elapsed().as_secs_f64() * 1e3;
            if i >= warm {
                samples.push(dt_ms);
            }
        }
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mean_ms = samples.iter().sum::<f64>() / samples.len() as f64;
        let p95_ms = samples[((samples.len() as f64 * 0.95) as usize).min(samples.len() - 1)];
        out.push(LatencyStats { points: count, mean_ms, p95_ms });
    }
    out
}

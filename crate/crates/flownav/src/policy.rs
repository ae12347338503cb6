//! The actor-critic network: a shared CNN + FC encoder over the 3x36x6
//! sensing tensor (output L2-normalized), an MLP fusing encoder features
//! with the 9 state inputs, and linear actor/critic heads with a
//! state-independent log-std.
//!
//! Forward and backward passes are written out by hand in f64. Parameters
//! live on the f32 grid (snapped after init and every optimizer step) so the
//! 32-bit checkpoint format round-trips bit-exactly.

use std::io::Write;
use std::path::Path;

use nalgebra::Vector3;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lidar::{MAP_H, MAP_W};
use crate::nn::{self, ConvShape};

pub const ACTION_DIM: usize = 3;
pub const STATE_DIM: usize = 9;
pub const SENSE_CH: usize = 3;
pub const SENSE_LEN: usize = SENSE_CH * MAP_W * MAP_H;

/// Policy input: the sensing tensor (distance map + point flow) and the
/// kinematic state inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    /// Channel-major (c, azimuth, elevation): channel 0 normalized distance
    /// map, channels 1-2 point flow.
    pub sensing: Vec<f64>,
    /// Unit vector to the goal (zero at the goal).
    pub goal_dir: Vector3<f64>,
    /// Velocity, m/s.
    pub vel: Vector3<f64>,
    /// Last applied acceleration command, m/s².
    pub a_last: Vector3<f64>,
}

impl Observation {
    pub fn zeros() -> Self {
        Self {
            sensing: vec![0.0; SENSE_LEN],
            goal_dir: Vector3::zeros(),
            vel: Vector3::zeros(),
            a_last: Vector3::zeros(),
        }
    }

    pub fn state_inputs(&self) -> [f64; STATE_DIM] {
        [
            self.goal_dir.x,
            self.goal_dir.y,
            self.goal_dir.z,
            self.vel.x,
            self.vel.y,
            self.vel.z,
            self.a_last.x,
            self.a_last.y,
            self.a_last.z,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.sensing.iter().all(|v| v.is_finite())
            && self.state_inputs().iter().all(|v| v.is_finite())
    }
}

/// Architecture description. The default is the navigation policy; reduced
/// variants are used by the gradient-check suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetSpec {
    /// Input dims (channels, azimuth, elevation).
    pub input: (usize, usize, usize),
    /// Conv layers: (out_ch, kernel, stride, pad).
    pub conv: Vec<(usize, (usize, usize), (usize, usize), (usize, usize))>,
    /// Encoder FC width.
    pub fc_units: usize,
    /// Fusion MLP widths.
    pub mlp: Vec<usize>,
    pub state_dim: usize,
    pub action_dim: usize,
    pub logstd_init: f64,
    pub logstd_clamp: (f64, f64),
}

impl Default for NetSpec {
    fn default() -> Self {
        Self {
            input: (SENSE_CH, MAP_W, MAP_H),
            conv: vec![
                (4, (5, 3), (2, 1), (0, 0)),
                (16, (5, 3), (2, 1), (2, 1)),
                (16, (5, 3), (2, 1), (2, 1)),
            ],
            fc_units: 128,
            mlp: vec![256, 256],
            state_dim: STATE_DIM,
            action_dim: ACTION_DIM,
            logstd_init: 0.5f64.ln(),
            logstd_clamp: (-5.0, 1.0),
        }
    }
}

impl NetSpec {
    /// Small architecture for dense finite-difference checks.
    pub fn reduced() -> Self {
        Self {
            input: (2, 8, 4),
            conv: vec![(3, (3, 3), (2, 1), (1, 1))],
            fc_units: 10,
            mlp: vec![12],
            state_dim: 4,
            action_dim: 2,
            logstd_init: 0.5f64.ln(),
            logstd_clamp: (-5.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub offset: usize,
    pub shape: Vec<usize>,
}

impl ManifestEntry {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// The resolved network: layer shapes, a flat parameter vector, and the
/// manifest mapping names to offsets.
#[derive(Debug, Clone)]
pub struct PolicyNet {
    pub spec: NetSpec,
    pub conv_shapes: Vec<ConvShape>,
    pub manifest: Vec<ManifestEntry>,
    pub params: Vec<f64>,
    flat_len: usize,
    fused_dim: usize,
}

/// Forward outputs.
#[derive(Debug, Clone)]
pub struct PolicyOutput {
    pub mean: Vec<f64>,
    pub logstd: Vec<f64>,
    pub value: f64,
}

/// Intermediate activations retained for backward.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    sensing: Vec<f64>,
    conv_out: Vec<Vec<f64>>, // post-ReLU per conv layer
    fc_out: Vec<f64>,        // post-ReLU
    enc: Vec<f64>,           // post L2 norm
    enc_norm: f64,
    fused: Vec<f64>,
    mlp_out: Vec<Vec<f64>>, // post-ReLU per MLP layer
}

impl PolicyNet {
    /// Validate the architecture and build zero parameters. Shape mismatches
    /// are configuration errors here, never at inference.
    pub fn new(spec: NetSpec) -> Result<Self> {
        let (in_ch, d1, d2) = spec.input;
        let mut conv_shapes = Vec::new();
        let (mut ch, mut a, mut e) = (in_ch, d1, d2);
        for (i, (out_ch, k, stride, pad)) in spec.conv.iter().enumerate() {
            let s = ConvShape { in_ch: ch, out_ch: *out_ch, in_d1: a, in_d2: e, k: *k, stride: *stride, pad: *pad };
            if !s.is_consistent() || s.out_d1() == 0 || s.out_d2() == 0 {
                return Err(Error::Config(format!(
                    "conv layer {i} shape chain broken: input {ch}x{a}x{e}, kernel {k:?}, stride {stride:?}, pad {pad:?}"
                )));
            }
            ch = s.out_ch;
            a = s.out_d1();
            e = s.out_d2();
            conv_shapes.push(s);
        }
        let flat_len = ch * a * e;
        if flat_len == 0 || spec.fc_units == 0 || spec.mlp.is_empty() {
            return Err(Error::Config("encoder widths must be positive".into()));
        }
        let fused_dim = spec.fc_units + spec.state_dim;

        let mut manifest = Vec::new();
        let mut offset = 0usize;
        let mut push = |name: String, shape: Vec<usize>, offset: &mut usize| {
            let len: usize = shape.iter().product();
            manifest.push(ManifestEntry { name, offset: *offset, shape });
            *offset += len;
        };
        for (i, s) in conv_shapes.iter().enumerate() {
            push(format!("conv{}.weight", i + 1), vec![s.out_ch, s.in_ch, s.k.0, s.k.1], &mut offset);
            push(format!("conv{}.bias", i + 1), vec![s.out_ch], &mut offset);
        }
        push("fc.weight".into(), vec![spec.fc_units, flat_len], &mut offset);
        push("fc.bias".into(), vec![spec.fc_units], &mut offset);
        let mut prev = fused_dim;
        for (i, width) in spec.mlp.iter().enumerate() {
            push(format!("mlp{}.weight", i + 1), vec![*width, prev], &mut offset);
            push(format!("mlp{}.bias", i + 1), vec![*width], &mut offset);
            prev = *width;
        }
        push("actor.weight".into(), vec![spec.action_dim, prev], &mut offset);
        push("actor.bias".into(), vec![spec.action_dim], &mut offset);
        push("critic.weight".into(), vec![1, prev], &mut offset);
        push("critic.bias".into(), vec![1], &mut offset);
        push("logstd".into(), vec![spec.action_dim], &mut offset);

        Ok(Self { spec, conv_shapes, manifest, params: vec![0.0; offset], flat_len, fused_dim })
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    fn entry(&self, name: &str) -> &ManifestEntry {
        self.manifest.iter().find(|e| e.name == name).expect("manifest entry")
    }

    fn slice(&self, name: &str) -> &[f64] {
        let e = self.entry(name);
        &self.params[e.offset..e.offset + e.len()]
    }

    /// Orthogonal initialization: gain sqrt(2) on hidden layers, 0.01 on the
    /// actor head, 1.0 on the critic head; biases zero; log-std at its
    /// configured init. Seeded and snapped to the f32 grid.
    pub fn init(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sqrt2 = 2.0f64.sqrt();
        let entries: Vec<ManifestEntry> = self.manifest.clone();
        for e in &entries {
            let dst = &mut self.params[e.offset..e.offset + e.len()];
            if e.name.ends_with(".bias") {
                dst.fill(0.0);
            } else if e.name == "logstd" {
                dst.fill(self.spec.logstd_init);
            } else {
                let rows = e.shape[0];
                let cols = e.len() / rows;
                let gain = match e.name.as_str() {
                    "actor.weight" => 0.01,
                    "critic.weight" => 1.0,
                    _ => sqrt2,
                };
                dst.copy_from_slice(&nn::orthogonal(rows, cols, gain, &mut rng));
            }
        }
        self.snap_to_f32();
        self.clamp_logstd();
    }

    /// Round every parameter to the nearest f32.
    pub fn snap_to_f32(&mut self) {
        for p in self.params.iter_mut() {
            *p = *p as f32 as f64;
        }
    }

    pub fn clamp_logstd(&mut self) {
        let (lo, hi) = self.spec.logstd_clamp;
        let e = self.entry("logstd").clone();
        for p in &mut self.params[e.offset..e.offset + e.len()] {
            *p = p.clamp(lo, hi);
        }
    }

    /// Raw-slice forward over (sensing tensor, state inputs).
    pub fn forward_parts(&self, sensing: &[f64], state: &[f64]) -> (PolicyOutput, ForwardCache) {
        debug_assert_eq!(sensing.len(), self.conv_shapes.first().map_or(self.flat_len, |s| s.in_len()));
        debug_assert_eq!(state.len(), self.spec.state_dim);

        let mut x = sensing.to_vec();
        let mut conv_out = Vec::with_capacity(self.conv_shapes.len());
        for (i, s) in self.conv_shapes.iter().enumerate() {
            let mut y = vec![0.0; s.out_len()];
            nn::conv2d_forward(
                s,
                self.slice(&format!("conv{}.weight", i + 1)),
                self.slice(&format!("conv{}.bias", i + 1)),
                &x,
                &mut y,
            );
            nn::relu_forward(&mut y);
            conv_out.push(y.clone());
            x = y;
        }

        let mut fc = vec![0.0; self.spec.fc_units];
        nn::fc_forward(self.flat_len, self.spec.fc_units, self.slice("fc.weight"), self.slice("fc.bias"), &x, &mut fc);
        nn::relu_forward(&mut fc);
        let mut enc = vec![0.0; self.spec.fc_units];
        let enc_norm = nn::l2_normalize(&fc, &mut enc);

        let mut fused = Vec::with_capacity(self.fused_dim);
        fused.extend_from_slice(&enc);
        fused.extend_from_slice(state);

        let mut h = fused.clone();
        let mut mlp_out = Vec::with_capacity(self.spec.mlp.len());
        let mut prev = self.fused_dim;
        for (i, width) in self.spec.mlp.iter().enumerate() {
            let mut y = vec![0.0; *width];
            nn::fc_forward(prev, *width, self.slice(&format!("mlp{}.weight", i + 1)), self.slice(&format!("mlp{}.bias", i + 1)), &h, &mut y);
            nn::relu_forward(&mut y);
            mlp_out.push(y.clone());
            h = y;
            prev = *width;
        }

        let mut mean = vec![0.0; self.spec.action_dim];
        nn::fc_forward(prev, self.spec.action_dim, self.slice("actor.weight"), self.slice("actor.bias"), &h, &mut mean);
        let mut value = vec![0.0; 1];
        nn::fc_forward(prev, 1, self.slice("critic.weight"), self.slice("critic.bias"), &h, &mut value);
        let logstd = self.slice("logstd").to_vec();

        let out = PolicyOutput { mean, logstd, value: value[0] };
        let cache = ForwardCache {
            sensing: sensing.to_vec(),
            conv_out,
            fc_out: fc,
            enc,
            enc_norm,
            fused,
            mlp_out,
        };
        (out, cache)
    }

    /// Forward over an observation. Rejects non-finite inputs.
    pub fn forward(&self, obs: &Observation) -> Result<(PolicyOutput, ForwardCache)> {
        if !obs.is_finite() {
            return Err(Error::InvalidAction("non-finite observation".into()));
        }
        Ok(self.forward_parts(&obs.sensing, &obs.state_inputs()))
    }

    /// Accumulate parameter gradients for the given output gradients.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        d_mean: &[f64],
        d_logstd: &[f64],
        d_value: f64,
        grads: &mut [f64],
    ) {
        debug_assert_eq!(grads.len(), self.params.len());
        let n_mlp = self.spec.mlp.len();
        let last = cache.mlp_out.last().unwrap_or(&cache.fused);
        let last_dim = *self.spec.mlp.last().unwrap();

        // Heads.
        let mut d_last = vec![0.0; last_dim];
        {
            let e_w = self.entry("actor.weight").clone();
            let e_b = self.entry("actor.bias").clone();
            let (dw, db) = two_slices(grads, e_w.offset, e_w.len(), e_b.offset, e_b.len());
            nn::fc_backward(last_dim, self.spec.action_dim, self.slice("actor.weight"), last, d_mean, dw, db, &mut d_last);
        }
        {
            let e_w = self.entry("critic.weight").clone();
            let e_b = self.entry("critic.bias").clone();
            let (dw, db) = two_slices(grads, e_w.offset, e_w.len(), e_b.offset, e_b.len());
            nn::fc_backward(last_dim, 1, self.slice("critic.weight"), last, &[d_value], dw, db, &mut d_last);
        }
        {
            let e = self.entry("logstd").clone();
            for (g, d) in grads[e.offset..e.offset + e.len()].iter_mut().zip(d_logstd) {
                *g += d;
            }
        }

        // MLP stack.
        let mut d_h = d_last;
        for i in (0..n_mlp).rev() {
            let width = self.spec.mlp[i];
            let (input, in_dim): (&[f64], usize) = if i == 0 {
                (&cache.fused, self.fused_dim)
            } else {
                (&cache.mlp_out[i - 1], self.spec.mlp[i - 1])
            };
            nn::relu_backward(&cache.mlp_out[i], &mut d_h);
            let mut d_in = vec![0.0; in_dim];
            let e_w = self.entry(&format!("mlp{}.weight", i + 1)).clone();
            let e_b = self.entry(&format!("mlp{}.bias", i + 1)).clone();
            let (dw, db) = two_slices(grads, e_w.offset, e_w.len(), e_b.offset, e_b.len());
            nn::fc_backward(in_dim, width, self.slice(&format!("mlp{}.weight", i + 1)), input, &d_h, dw, db, &mut d_in);
            d_h = d_in;
        }

        // Split fused gradient; the state-input part stops here.
        let d_enc_norm = &d_h[..self.spec.fc_units];

        // L2 norm and encoder FC.
        let mut d_fc = vec![0.0; self.spec.fc_units];
        nn::l2_normalize_backward(&cache.enc, cache.enc_norm, d_enc_norm, &mut d_fc);
        nn::relu_backward(&cache.fc_out, &mut d_fc);
        let flat_in: &[f64] = cache.conv_out.last().map_or(&cache.sensing, |v| v);
        let mut d_flat = vec![0.0; self.flat_len];
        {
            let e_w = self.entry("fc.weight").clone();
            let e_b = self.entry("fc.bias").clone();
            let (dw, db) = two_slices(grads, e_w.offset, e_w.len(), e_b.offset, e_b.len());
            nn::fc_backward(self.flat_len, self.spec.fc_units, self.slice("fc.weight"), flat_in, &d_fc, dw, db, &mut d_flat);
        }

        // Conv stack.
        let mut d_out = d_flat;
        for i in (0..self.conv_shapes.len()).rev() {
            let s = &self.conv_shapes[i];
            nn::relu_backward(&cache.conv_out[i], &mut d_out);
            let input: &[f64] = if i == 0 { &cache.sensing } else { &cache.conv_out[i - 1] };
            let mut d_in = vec![0.0; s.in_len()];
            let e_w = self.entry(&format!("conv{}.weight", i + 1)).clone();
            let e_b = self.entry(&format!("conv{}.bias", i + 1)).clone();
            let (dw, db) = two_slices(grads, e_w.offset, e_w.len(), e_b.offset, e_b.len());
            nn::conv2d_backward(s, self.slice(&format!("conv{}.weight", i + 1)), input, &d_out, dw, db, &mut d_in);
            d_out = d_in;
        }
    }

    /// Write a checkpoint: text manifest header, then the parameters as a
    /// little-endian f32 flat array.
    pub fn save(&self, path: &Path, seed: u64, config_hash: &str) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(f, "flownav-checkpoint v1")?;
        writeln!(f, "seed {seed}")?;
        writeln!(f, "config_hash {config_hash}")?;
        let spec_json = serde_json::to_string(&self.spec).map_err(|e| Error::Checkpoint(e.to_string()))?;
        writeln!(f, "spec {spec_json}")?;
        writeln!(f, "params {}", self.params.len())?;
        for e in &self.manifest {
            let dims: Vec<String> = e.shape.iter().map(|d| d.to_string()).collect();
            writeln!(f, "{} {} {}", e.name, e.offset, dims.join("x"))?;
        }
        writeln!(f, "---")?;
        for p in &self.params {
            f.write_all(&(*p as f32).to_le_bytes())?;
        }
        Ok(())
    }

    /// Load a checkpoint written by [`save`]. Returns the net plus the
    /// stored (seed, config_hash).
    pub fn load(path: &Path) -> Result<(Self, u64, String)> {
        let raw = std::fs::read(path)?;
        let bad = |m: &str| Error::Checkpoint(format!("{}: {m}", path.display()));
        let sep = b"\n---\n";
        let split = raw
            .windows(sep.len())
            .position(|w| w == sep)
            .ok_or_else(|| bad("missing manifest separator"))?;
        let header = std::str::from_utf8(&raw[..split]).map_err(|_| bad("header not utf-8"))?;
        let body = &raw[split + sep.len()..];

        let mut lines = header.lines();
        if lines.next() != Some("flownav-checkpoint v1") {
            return Err(bad("unsupported version tag"));
        }
        let mut seed = 0u64;
        let mut config_hash = String::new();
        let mut spec: Option<NetSpec> = None;
        let mut n_params = 0usize;
        let mut manifest_lines = Vec::new();
        for line in lines {
            if let Some(v) = line.strip_prefix("seed ") {
                seed = v.parse().map_err(|_| bad("bad seed"))?;
            } else if let Some(v) = line.strip_prefix("config_hash ") {
                config_hash = v.to_string();
            } else if let Some(v) = line.strip_prefix("spec ") {
                spec = Some(serde_json::from_str(v).map_err(|e| bad(&format!("bad spec: {e}")))?);
            } else if let Some(v) = line.strip_prefix("params ") {
                n_params = v.parse().map_err(|_| bad("bad param count"))?;
            } else if !line.is_empty() {
                manifest_lines.push(line.to_string());
            }
        }
        let spec = spec.ok_or_else(|| bad("missing spec"))?;
        let mut net = PolicyNet::new(spec)?;
        if net.params.len() != n_params {
            return Err(bad(&format!("param count mismatch: file {n_params}, spec {}", net.params.len())));
        }
        if manifest_lines.len() != net.manifest.len() {
            return Err(bad("manifest entry count mismatch"));
        }
        if body.len() != 4 * n_params {
            return Err(bad(&format!("expected {} bytes of f32 data, found {}", 4 * n_params, body.len())));
        }
        for (chunk, p) in body.chunks_exact(4).zip(net.params.iter_mut()) {
            *p = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]) as f64;
        }
        Ok((net, seed, config_hash))
    }
}

/// Two disjoint mutable slices out of the flat gradient vector.
fn two_slices(buf: &mut [f64], off_a: usize, len_a: usize, off_b: usize, len_b: usize) -> (&mut [f64], &mut [f64]) {
    debug_assert!(off_a + len_a <= off_b, "manifest slices must be ordered and disjoint");
    let (head, tail) = buf.split_at_mut(off_b);
    (&mut head[off_a..off_a + len_a], &mut tail[..len_b])
}

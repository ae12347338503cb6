//! Point flow: the change-sensing half of the observation.
//!
//! The stream of high-resolution grayscale frames is resized to 96x16,
//! stacked three frames deep, and fed to a dense flow estimator between
//! stacked images n-3 frames apart. Five consecutive flows are averaged,
//! downsampled to 36x6, and scaled per axis into the final 2x36x6 point
//! flow. Until the history fills, the pipeline emits exact zeros.
//!
//! The reference estimator is two-level coarse-to-fine block matching on the
//! channel means (patch 5x3, search radius 4 per level, SAD score, parabolic
//! sub-pixel refinement). It hides behind [`FlowEstimator`] so a learned
//! estimator can be swapped in without touching callers.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::image2d::Image;
use crate::lidar::{MAP_H, MAP_W};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    BlockMatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlockMatchConfig {
    /// Patch size (width, height), pixels.
    pub patch: (usize, usize),
    /// Search radius per level, pixels.
    pub radius: usize,
    /// Pyramid levels (>= 1); level 0 runs at half resolution.
    pub levels: usize,
}

impl Default for BlockMatchConfig {
    fn default() -> Self {
        Self { patch: (5, 3), radius: 4, levels: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowConfig {
    /// Working resolution (width, height) after bilinear resize.
    pub resized: (usize, usize),
    /// Sliding-window length n: flow spans stacked images n-3 frames apart.
    pub window: usize,
    /// Number of consecutive flows averaged.
    pub avg_span: usize,
    /// Horizontal flow scaling divisor.
    pub z_h: f64,
    /// Vertical flow scaling divisor.
    pub z_w: f64,
    pub estimator: EstimatorKind,
    pub block: BlockMatchConfig,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            resized: (96, 16),
            window: 5,
            avg_span: 5,
            z_h: 16.0,
            z_w: 96.0,
            estimator: EstimatorKind::BlockMatch,
            block: BlockMatchConfig::default(),
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if self.window < 3 {
            return Err(crate::Error::Config("flow.window must be >= 3".into()));
        }
        if self.avg_span < 1 {
            return Err(crate::Error::Config("flow.avg_span must be >= 1".into()));
        }
        if !(self.z_h > 0.0) || !(self.z_w > 0.0) {
            return Err(crate::Error::Config("flow.z_h and flow.z_w must be > 0".into()));
        }
        Ok(())
    }

    /// First frame index (0-based) that yields a non-zero-capable output.
    pub fn warmup_frames(&self) -> usize {
        // Stacks need 3 frames, the flow spans n-3 more, and the average
        // needs avg_span flows.
        (self.window - 3) + (self.avg_span - 1) + 2
    }
}

/// Three consecutive resized frames as one 3-channel image (oldest first).
#[derive(Debug, Clone, PartialEq)]
pub struct StackedImage {
    pub channels: [Image; 3],
}

impl StackedImage {
    pub fn mean(&self) -> Image {
        let w = self.channels[0].width;
        let h = self.channels[0].height;
        let mut out = Image::zeros(w, h);
        for i in 0..w * h {
            out.data[i] = (self.channels[0].data[i] + self.channels[1].data[i] + self.channels[2].data[i]) / 3.0;
        }
        out
    }
}

/// Dense per-pixel flow at working resolution, with a validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub du: Image,
    pub dv: Image,
    pub valid: Vec<bool>,
}

impl FlowField {
    pub fn zeros(w: usize, h: usize) -> Self {
        Self { du: Image::zeros(w, h), dv: Image::zeros(w, h), valid: vec![false; w * h] }
    }
}

/// The 2x36x6 point flow: per-cell (du/z_H, dv/z_W).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFlow {
    pub du: Image,
    pub dv: Image,
}

impl PointFlow {
    pub fn zeros() -> Self {
        Self { du: Image::zeros(MAP_W, MAP_H), dv: Image::zeros(MAP_W, MAP_H) }
    }

    pub fn is_zero(&self) -> bool {
        self.du.data.iter().all(|v| *v == 0.0) && self.dv.data.iter().all(|v| *v == 0.0)
    }
}

pub trait FlowEstimator: Send + Sync {
    fn estimate(&self, prev: &StackedImage, curr: &StackedImage) -> FlowField;
    /// Constructive bound on |du|, |dv|.
    fn bound(&self) -> f64;
}

/// Two-level coarse-to-fine block matcher (SAD, parabolic sub-pixel).
#[derive(Debug, Clone)]
pub struct BlockMatchEstimator {
    cfg: BlockMatchConfig,
}

impl BlockMatchEstimator {
    pub fn new(cfg: BlockMatchConfig) -> Self {
        Self { cfg }
    }
}

impl FlowEstimator for BlockMatchEstimator {
    fn estimate(&self, prev: &StackedImage, curr: &StackedImage) -> FlowField {
        let a = prev.mean();
        let b = curr.mean();
        block_match_pyramid(&a, &b, &self.cfg)
    }

    fn bound(&self) -> f64 {
        // Coarse radius counts double at full resolution; each level adds up
        // to half a pixel of sub-pixel refinement.
        let r = self.cfg.radius as f64;
        if self.cfg.levels >= 2 {
            2.0 * (r + 0.5) + r + 0.5
        } else {
            r + 0.5
        }
    }
}

pub fn make_estimator(cfg: &FlowConfig) -> Box<dyn FlowEstimator> {
    match cfg.estimator {
        EstimatorKind::BlockMatch => Box::new(BlockMatchEstimator::new(cfg.block)),
    }
}

fn constant_image(img: &Image) -> bool {
    let first = img.data[0];
    img.data.iter().all(|v| *v == first)
}

fn half_res(img: &Image) -> Image {
    img.resize_bilinear((img.width / 2).max(1), (img.height / 2).max(1))
}

/// Border-replicated padded copy so SAD loops can index without clamping.
/// Logical pixel (x, y) sits at padded (x + hw, y + hh); the patch with
/// top-left at logical (x - hw, y - hh) therefore starts at padded (x, y).
struct Padded {
    stride: usize,
    data: Vec<f64>,
}

impl Padded {
    fn new(img: &Image, hw: usize, hh: usize) -> Self {
        let stride = img.width + 2 * hw;
        let rows = img.height + 2 * hh;
        let mut data = vec![0.0; stride * rows];
        for py in 0..rows {
            let sy = (py as isize - hh as isize).clamp(0, img.height as isize - 1) as usize;
            for px in 0..stride {
                let sx = (px as isize - hw as isize).clamp(0, img.width as isize - 1) as usize;
                data[py * stride + px] = img.get(sx, sy);
            }
        }
        Self { stride, data }
    }

    /// Patch row `oy` for the patch whose top-left padded coordinate is
    /// (x0, y0): a pw-length slice.
    #[inline]
    fn patch_row(&self, x0: usize, y0: usize, oy: usize, pw: usize) -> &[f64] {
        let start = (y0 + oy) * self.stride + x0;
        &self.data[start..start + pw]
    }
}

/// SAD of the source patch at (x, y) against the target patch displaced by
/// (dx, dy), aborting once the partial sum reaches `abort`.
#[inline]
fn sad_abort(ap: &Padded, bp: &Padded, x: usize, y: usize, dx: isize, dy: isize, pw: usize, ph: usize, abort: f64) -> f64 {
    let tx = (x as isize + dx) as usize;
    let ty = (y as isize + dy) as usize;
    let mut s = 0.0;
    for oy in 0..ph {
        let ar = ap.patch_row(x, y, oy, pw);
        let br = bp.patch_row(tx, ty, oy, pw);
        for i in 0..pw {
            s += (ar[i] - br[i]).abs();
        }
        if s >= abort {
            return s;
        }
    }
    s
}

#[inline]
fn patch_textured(ap: &Padded, x: usize, y: usize, pw: usize, ph: usize) -> bool {
    let first = ap.patch_row(x, y, 0, pw)[0];
    for oy in 0..ph {
        for v in ap.patch_row(x, y, oy, pw) {
            if *v != first {
                return true;
            }
        }
    }
    false
}

/// Parabolic refinement from three scores around the best integer offset.
/// Returns a correction in [-0.5, 0.5].
#[inline]
fn parabolic(sm: f64, s0: f64, sp: f64) -> f64 {
    let denom = sm - 2.0 * s0 + sp;
    if denom > 1e-12 {
        (0.5 * (sm - sp) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    }
}

/// Single-level block match of `a` onto `b` with optional coarse-level
/// integer initialization. Candidates are visited center-out so the
/// early-abort SAD prunes most of the search window.
fn block_match_level(a: &Image, b: &Image, cfg: &BlockMatchConfig, init: Option<&FlowField>) -> FlowField {
    let w = a.width;
    let h = a.height;
    let mut out = FlowField::zeros(w, h);
    let (pw, ph) = cfg.patch;
    let hw = pw / 2;
    let hh = ph / 2;
    let ap = Padded::new(a, hw, hh);
    let bp = Padded::new(b, hw, hh);
    let r = cfg.radius as isize;
    let wi = w as isize;
    let hi = h as isize;

    let mut offsets: Vec<(isize, isize)> = (-r..=r)
        .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
        .collect();
    offsets.sort_by_key(|(dx, dy)| dx * dx + dy * dy);

    for y in 0..h {
        for x in 0..w {
            let idx = y * w + x;
            if !patch_textured(&ap, x, y, pw, ph) {
                continue; // featureless source patch: zero flow, invalid
            }
            let (ix, iy) = match init {
                Some(f) => {
                    // Upscale coarse flow: sample at half coordinates, double it.
                    let cx = (x / 2).min(f.du.width - 1);
                    let cy = (y / 2).min(f.du.height - 1);
                    let ci = cy * f.du.width + cx;
                    ((2.0 * f.du.data[ci]).round() as isize, (2.0 * f.dv.data[ci]).round() as isize)
                }
                None => (0, 0),
            };

            let mut best = f64::INFINITY;
            let mut bdx = 0isize;
            let mut bdy = 0isize;
            for (dx, dy) in &offsets {
                let fx = ix + dx;
                let fy = iy + dy;
                let tx = x as isize + fx;
                let ty = y as isize + fy;
                if tx < 0 || tx >= wi || ty < 0 || ty >= hi {
                    continue; // clamped search window
                }
                let s = sad_abort(&ap, &bp, x, y, fx, fy, pw, ph, best);
                if s < best {
                    best = s;
                    bdx = fx;
                    bdy = fy;
                }
            }
            if !best.is_finite() {
                continue;
            }

            // Sub-pixel refinement along each axis where neighbors exist.
            // An exact match (SAD 0) is already aligned; the parabola fit
            // would drag it off the integer grid.
            let mut du = bdx as f64;
            let mut dv = bdy as f64;
            if best > 0.0 && x as isize + bdx - 1 >= 0 && x as isize + bdx + 1 < wi {
                let sm = sad_abort(&ap, &bp, x, y, bdx - 1, bdy, pw, ph, f64::INFINITY);
                let sp = sad_abort(&ap, &bp, x, y, bdx + 1, bdy, pw, ph, f64::INFINITY);
                du += parabolic(sm, best, sp);
            }
            if best > 0.0 && y as isize + bdy - 1 >= 0 && y as isize + bdy + 1 < hi {
                let sm = sad_abort(&ap, &bp, x, y, bdx, bdy - 1, pw, ph, f64::INFINITY);
                let sp = sad_abort(&ap, &bp, x, y, bdx, bdy + 1, pw, ph, f64::INFINITY);
                dv += parabolic(sm, best, sp);
            }
            out.du.data[idx] = du;
            out.dv.data[idx] = dv;
            out.valid[idx] = true;
        }
    }
    out
}

/// Coarse-to-fine dense block matching.
pub fn block_match_pyramid(a: &Image, b: &Image, cfg: &BlockMatchConfig) -> FlowField {
    if constant_image(a) || constant_image(b) {
        return FlowField::zeros(a.width, a.height); // degenerate pair
    }
    if cfg.levels <= 1 {
        return block_match_level(a, b, cfg, None);
    }
    let coarse = block_match_level(&half_res(a), &half_res(b), cfg, None);
    block_match_level(a, b, cfg, Some(&coarse))
}

/// Streaming pipeline state: frame ring, flow ring, and the resolved
/// estimator. One pipeline per environment; reset on episode start.
pub struct PointFlowPipeline {
    cfg: FlowConfig,
    estimator: Box<dyn FlowEstimator>,
    frames: VecDeque<Image>,
    flows: VecDeque<FlowField>,
    last_avg: Option<(Image, Image)>,
}

impl PointFlowPipeline {
    pub fn new(cfg: FlowConfig) -> Self {
        let estimator = make_estimator(&cfg);
        Self { cfg, estimator, frames: VecDeque::new(), flows: VecDeque::new(), last_avg: None }
    }

    pub fn reset(&mut self) {
        self.frames.clear();
        self.flows.clear();
        self.last_avg = None;
    }

    /// Working-resolution averaged flow behind the latest point flow, for
    /// visualization.
    pub fn last_average(&self) -> Option<&(Image, Image)> {
        self.last_avg.as_ref()
    }

    pub fn config(&self) -> &FlowConfig {
        &self.cfg
    }

    /// Push the next high-resolution grayscale frame; returns the point flow
    /// for this tick (zeros during warm-up).
    pub fn push(&mut self, gray: &Image) -> PointFlow {
        let (rw, rh) = self.cfg.resized;
        let resized = gray.resize_bilinear(rw, rh);
        self.frames.push_back(resized);
        if self.frames.len() > self.cfg.window {
            self.frames.pop_front();
        }

        if self.frames.len() == self.cfg.window {
            let n = self.cfg.window;
            let prev = StackedImage {
                channels: [self.frames[0].clone(), self.frames[1].clone(), self.frames[2].clone()],
            };
            let curr = StackedImage {
                channels: [
                    self.frames[n - 3].clone(),
                    self.frames[n - 2].clone(),
                    self.frames[n - 1].clone(),
                ],
            };
            let flow = self.estimator.estimate(&prev, &curr);
            self.flows.push_back(flow);
            if self.flows.len() > self.cfg.avg_span {
                self.flows.pop_front();
            }
        }

        if self.flows.len() < self.cfg.avg_span {
            return PointFlow::zeros();
        }
        self.average_and_scale()
    }

    fn average_and_scale(&mut self) -> PointFlow {
        let (rw, rh) = self.cfg.resized;
        let mut du = Image::zeros(rw, rh);
        let mut dv = Image::zeros(rw, rh);
        let k = self.flows.len() as f64;
        for f in &self.flows {
            for i in 0..rw * rh {
                du.data[i] += f.du.data[i] / k;
                dv.data[i] += f.dv.data[i] / k;
            }
        }
        let du_small = du.resize_bilinear(MAP_W, MAP_H);
        let dv_small = dv.resize_bilinear(MAP_W, MAP_H);
        self.last_avg = Some((du, dv));
        PointFlow {
            du: du_small.scaled(1.0 / self.cfg.z_h),
            dv: dv_small.scaled(1.0 / self.cfg.z_w),
        }
    }

    /// Feed a pre-computed flow field, bypassing the estimator. Test hook
    /// for the averaging/downsampling identities.
    pub fn push_flow(&mut self, flow: FlowField) -> PointFlow {
        self.flows.push_back(flow);
        if self.flows.len() > self.cfg.avg_span {
            self.flows.pop_front();
        }
        if self.flows.len() < self.cfg.avg_span {
            return PointFlow::zeros();
        }
        self.average_and_scale()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn textured(w: usize, h: usize, seed: u64) -> Image {
        // Noise-dominant texture (a weak wave on top): block matching needs
        // aperiodic detail, like real distance-map silhouettes.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut img = Image::zeros(w, h);
        for y in 0..h {
            for x in 0..w {
                let v = 0.4
                    + 0.08 * ((x as f64 * 0.37).sin() * (y as f64 * 0.81).cos())
                    + 0.5 * rng.random::<f64>();
                img.set(x, y, v.clamp(0.0, 1.0));
            }
        }
        img
    }

    fn shift_wrap(img: &Image, dx: isize, dy: isize) -> Image {
        let mut out = Image::zeros(img.width, img.height);
        for y in 0..img.height {
            for x in 0..img.width {
                let sx = (x as isize - dx).rem_euclid(img.width as isize) as usize;
                let sy = (y as isize - dy).rem_euclid(img.height as isize) as usize;
                out.set(x, y, img.get(sx, sy));
            }
        }
        out
    }

    fn stack_of(img: &Image) -> StackedImage {
        StackedImage { channels: [img.clone(), img.clone(), img.clone()] }
    }

    fn interior_mean(f: &FlowField, margin: usize) -> (f64, f64) {
        let mut su = 0.0;
        let mut sv = 0.0;
        let mut n = 0.0;
        for y in margin..f.du.height - margin {
            for x in margin..f.du.width - margin {
                su += f.du.get(x, y);
                sv += f.dv.get(x, y);
                n += 1.0;
            }
        }
        (su / n, sv / n)
    }

    #[test]
    fn identical_pair_zero_flow() {
        let img = textured(96, 16, 1);
        let est = BlockMatchEstimator::new(BlockMatchConfig::default());
        let f = est.estimate(&stack_of(&img), &stack_of(&img));
        assert!(f.du.data.iter().all(|v| *v == 0.0));
        assert!(f.dv.data.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn constant_pair_is_invalid_zero() {
        let img = Image::filled(96, 16, 0.5);
        let est = BlockMatchEstimator::new(BlockMatchConfig::default());
        let f = est.estimate(&stack_of(&img), &stack_of(&img));
        assert!(f.du.data.iter().all(|v| *v == 0.0));
        assert!(f.valid.iter().all(|v| !v));
    }

    #[test]
    fn horizontal_shift_recovered() {
        let img = textured(96, 16, 2);
        let shifted = shift_wrap(&img, 2, 0);
        let est = BlockMatchEstimator::new(BlockMatchConfig::default());
        let f = est.estimate(&stack_of(&img), &stack_of(&shifted));
        let (mu, mv) = interior_mean(&f, 4);
        assert!((1.5..=2.5).contains(&mu), "mean du {mu}");
        assert!(mv.abs() < 0.5, "mean dv {mv}");
    }

    #[test]
    fn vertical_shift_recovered() {
        let img = textured(96, 16, 3);
        let shifted = shift_wrap(&img, 0, 1);
        let est = BlockMatchEstimator::new(BlockMatchConfig::default());
        let f = est.estimate(&stack_of(&img), &stack_of(&shifted));
        let (mu, mv) = interior_mean(&f, 4);
        assert!((0.5..=1.5).contains(&mv), "mean dv {mv}");
        assert!(mu.abs() < 0.5, "mean du {mu}");
    }

    #[test]
    fn flow_bounded_by_construction() {
        let est = BlockMatchEstimator::new(BlockMatchConfig::default());
        let bound = est.bound();
        for seed in 0..5 {
            let a = textured(96, 16, seed);
            let b = textured(96, 16, seed + 100);
            let f = est.estimate(&stack_of(&a), &stack_of(&b));
            for v in f.du.data.iter().chain(f.dv.data.iter()) {
                assert!(v.abs() <= bound);
            }
        }
    }

    #[test]
    fn warmup_emits_exact_zeros() {
        let cfg = FlowConfig::default();
        let warm = cfg.warmup_frames();
        let mut pipe = PointFlowPipeline::new(cfg);
        for k in 0..12 {
            let frame = textured(108, 18, k as u64);
            let pf = pipe.push(&frame);
            if k < warm {
                assert!(pf.is_zero(), "frame {k} should be warm-up zero");
            }
        }
    }

    #[test]
    fn static_scene_zero_after_warmup() {
        let cfg = FlowConfig::default();
        let warm = cfg.warmup_frames();
        let mut pipe = PointFlowPipeline::new(cfg);
        let frame = textured(108, 18, 9);
        for k in 0..=warm + 3 {
            let pf = pipe.push(&frame);
            if k > warm {
                assert!(pf.is_zero(), "static scene must give zero flow");
            }
        }
    }

    #[test]
    fn constant_flow_averaging_identity() {
        let cfg = FlowConfig::default();
        let mut pipe = PointFlowPipeline::new(cfg);
        let (u0, v0) = (1.25, -0.5);
        let mut last = PointFlow::zeros();
        for _ in 0..cfg.avg_span {
            let mut f = FlowField::zeros(96, 16);
            f.du.data.fill(u0);
            f.dv.data.fill(v0);
            f.valid.fill(true);
            last = pipe.push_flow(f);
        }
        for v in &last.du.data {
            assert!((v - u0 / cfg.z_h).abs() < 1e-9);
        }
        for v in &last.dv.data {
            assert!((v - v0 / cfg.z_w).abs() < 1e-9);
        }
    }

    #[test]
    fn averaging_is_linear_in_flow_scale() {
        let cfg = FlowConfig::default();
        let mk = |scale: f64| {
            let mut pipe = PointFlowPipeline::new(cfg);
            let mut last = PointFlow::zeros();
            for k in 0..cfg.avg_span {
                let mut f = FlowField::zeros(96, 16);
                for (i, v) in f.du.data.iter_mut().enumerate() {
                    *v = scale * ((i % 7) as f64 - 3.0) * 0.1 * (k as f64 + 1.0);
                }
                f.valid.fill(true);
                last = pipe.push_flow(f);
            }
            last
        };
        let base = mk(1.0);
        let tripled = mk(3.0);
        for i in 0..base.du.data.len() {
            assert!((tripled.du.data[i] - 3.0 * base.du.data[i]).abs() < 1e-12);
        }
    }
}

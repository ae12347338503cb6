//! Dense layer primitives with hand-written backward passes, in f64.
//!
//! Tensors are flat slices. Feature maps use channel-major layout
//! (c, i, j) -> (c * D1 + i) * D2 + j, where D1 is the azimuth axis and D2
//! the elevation axis of the sensing tensor. Convolution kernels follow the
//! same axis order.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Geometry of one convolution layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvShape {
    pub in_ch: usize,
    pub out_ch: usize,
    pub in_d1: usize,
    pub in_d2: usize,
    pub k: (usize, usize),
    pub stride: (usize, usize),
    pub pad: (usize, usize),
}

impl ConvShape {
    pub fn out_d1(&self) -> usize {
        (self.in_d1 + 2 * self.pad.0 - self.k.0) / self.stride.0 + 1
    }

    pub fn out_d2(&self) -> usize {
        (self.in_d2 + 2 * self.pad.1 - self.k.1) / self.stride.1 + 1
    }

    /// Output size formula is only meaningful when the kernel fits.
    pub fn is_consistent(&self) -> bool {
        self.in_d1 + 2 * self.pad.0 >= self.k.0 && self.in_d2 + 2 * self.pad.1 >= self.k.1
    }

    pub fn weight_len(&self) -> usize {
        self.out_ch * self.in_ch * self.k.0 * self.k.1
    }

    pub fn out_len(&self) -> usize {
        self.out_ch * self.out_d1() * self.out_d2()
    }

    pub fn in_len(&self) -> usize {
        self.in_ch * self.in_d1 * self.in_d2
    }
}

/// Valid output range [lo, hi) for a kernel tap: positions where
/// o*stride + k - pad lands inside [0, in_d).
#[inline]
fn tap_range(out_d: usize, in_d: usize, k: usize, stride: usize, pad: usize) -> (usize, usize) {
    let lo = pad.saturating_sub(k).div_ceil(stride);
    let max_i = in_d + pad;
    let hi = if max_i > k { ((max_i - k - 1) / stride + 1).min(out_d) } else { 0 };
    (lo.min(hi), hi)
}

pub fn conv2d_forward(s: &ConvShape, w: &[f64], b: &[f64], input: &[f64], output: &mut [f64]) {
    let (o1, o2) = (s.out_d1(), s.out_d2());
    let (k1, k2) = s.k;
    let (st1, st2) = s.stride;
    let (p1, p2) = s.pad;
    for oc in 0..s.out_ch {
        let out_plane = &mut output[oc * o1 * o2..(oc + 1) * o1 * o2];
        out_plane.fill(b[oc]);
        for ic in 0..s.in_ch {
            let in_plane = &input[ic * s.in_d1 * s.in_d2..(ic + 1) * s.in_d1 * s.in_d2];
            for ki in 0..k1 {
                let (lo1, hi1) = tap_range(o1, s.in_d1, ki, st1, p1);
                for kj in 0..k2 {
                    let (lo2, hi2) = tap_range(o2, s.in_d2, kj, st2, p2);
                    let wv = w[((oc * s.in_ch + ic) * k1 + ki) * k2 + kj];
                    if wv == 0.0 {
                        continue;
                    }
                    for oi in lo1..hi1 {
                        let ii = oi * st1 + ki - p1;
                        let in_row = &in_plane[ii * s.in_d2..(ii + 1) * s.in_d2];
                        let out_row = &mut out_plane[oi * o2..(oi + 1) * o2];
                        for oj in lo2..hi2 {
                            out_row[oj] += wv * in_row[oj * st2 + kj - p2];
                        }
                    }
                }
            }
        }
    }
}

/// Accumulates into dw, db, dinput (callers zero dinput per layer, dw/db
/// accumulate across a minibatch).
pub fn conv2d_backward(
    s: &ConvShape,
    w: &[f64],
    input: &[f64],
    dout: &[f64],
    dw: &mut [f64],
    db: &mut [f64],
    dinput: &mut [f64],
) {
    let (o1, o2) = (s.out_d1(), s.out_d2());
    let (k1, k2) = s.k;
    let (st1, st2) = s.stride;
    let (p1, p2) = s.pad;
    for oc in 0..s.out_ch {
        let dout_plane = &dout[oc * o1 * o2..(oc + 1) * o1 * o2];
        db[oc] += dout_plane.iter().sum::<f64>();
        for ic in 0..s.in_ch {
            let in_plane = &input[ic * s.in_d1 * s.in_d2..(ic + 1) * s.in_d1 * s.in_d2];
            let din_plane = &mut dinput[ic * s.in_d1 * s.in_d2..(ic + 1) * s.in_d1 * s.in_d2];
            for ki in 0..k1 {
                let (lo1, hi1) = tap_range(o1, s.in_d1, ki, st1, p1);
                for kj in 0..k2 {
                    let (lo2, hi2) = tap_range(o2, s.in_d2, kj, st2, p2);
                    let wi = ((oc * s.in_ch + ic) * k1 + ki) * k2 + kj;
                    let wv = w[wi];
                    let mut acc = 0.0;
                    for oi in lo1..hi1 {
                        let ii = oi * st1 + ki - p1;
                        let in_row = &in_plane[ii * s.in_d2..(ii + 1) * s.in_d2];
                        let din_row = &mut din_plane[ii * s.in_d2..(ii + 1) * s.in_d2];
                        let dout_row = &dout_plane[oi * o2..(oi + 1) * o2];
                        for oj in lo2..hi2 {
                            let g = dout_row[oj];
                            let jj = oj * st2 + kj - p2;
                            acc += g * in_row[jj];
                            din_row[jj] += g * wv;
                        }
                    }
                    dw[wi] += acc;
                }
            }
        }
    }
}

/// Dot product with four accumulators for instruction-level parallelism.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let chunks = n / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for c in 0..chunks {
        let i = 4 * c;
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    let mut s = (s0 + s1) + (s2 + s3);
    for i in 4 * chunks..n {
        s += a[i] * b[i];
    }
    s
}

/// y = W x + b, W row-major (out x in).
pub fn fc_forward(in_dim: usize, out_dim: usize, w: &[f64], b: &[f64], x: &[f64], y: &mut [f64]) {
    for o in 0..out_dim {
        let row = &w[o * in_dim..(o + 1) * in_dim];
        y[o] = dot(row, x) + b[o];
    }
}

pub fn fc_backward(
    in_dim: usize,
    out_dim: usize,
    w: &[f64],
    x: &[f64],
    dy: &[f64],
    dw: &mut [f64],
    db: &mut [f64],
    dx: &mut [f64],
) {
    for o in 0..out_dim {
        let g = dy[o];
        if g == 0.0 {
            continue;
        }
        db[o] += g;
        let row = &w[o * in_dim..(o + 1) * in_dim];
        let drow = &mut dw[o * in_dim..(o + 1) * in_dim];
        for (d, xi) in drow.iter_mut().zip(x) {
            *d += g * xi;
        }
        for (d, wi) in dx.iter_mut().zip(row) {
            *d += g * wi;
        }
    }
}

pub fn relu_forward(x: &mut [f64]) {
    for v in x {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// ReLU gradient using the post-activation values (y > 0 iff x > 0).
pub fn relu_backward(y: &[f64], dy: &mut [f64]) {
    for (g, v) in dy.iter_mut().zip(y) {
        if *v <= 0.0 {
            *g = 0.0;
        }
    }
}

/// y = x / ||x||; zero input maps to zero. Returns the norm for backward.
pub fn l2_normalize(x: &[f64], y: &mut [f64]) -> f64 {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        for (o, v) in y.iter_mut().zip(x) {
            *o = v / norm;
        }
    } else {
        y.fill(0.0);
    }
    norm
}

/// dx = (dy - y * (y . dy)) / norm — the closed-form Jacobian of x/||x||.
pub fn l2_normalize_backward(y: &[f64], norm: f64, dy: &[f64], dx: &mut [f64]) {
    if norm <= 0.0 {
        dx.fill(0.0);
        return;
    }
    let dot: f64 = y.iter().zip(dy).map(|(a, b)| a * b).sum();
    for i in 0..y.len() {
        dx[i] = (dy[i] - y[i] * dot) / norm;
    }
}

/// Orthogonal initialization (QR of a Gaussian matrix, sign-corrected), as
/// a row-major (rows x cols) weight block scaled by `gain`.
pub fn orthogonal(rows: usize, cols: usize, gain: f64, rng: &mut impl Rng) -> Vec<f64> {
    let (qr_rows, qr_cols, transpose) = if rows >= cols { (rows, cols, false) } else { (cols, rows, true) };
    let g = DMatrix::<f64>::from_fn(qr_rows, qr_cols, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..qr_cols {
        if r[(j, j)] < 0.0 {
            for i in 0..qr_rows {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    let mut out = vec![0.0; rows * cols];
    for i in 0..rows {
        for j in 0..cols {
            let v = if transpose { q[(j, i)] } else { q[(i, j)] };
            out[i * cols + j] = gain * v;
        }
    }
    out
}

/// Global gradient-norm clipping; returns the pre-clip norm.
pub fn clip_grad_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for g in grads.iter_mut() {
            *g *= scale;
        }
    }
    norm
}

/// Adam: m = b1 m + (1-b1) g; v = b2 v + (1-b2) g^2; with bias-corrected
/// mhat, vhat the update is p -= lr * mhat / (sqrt(vhat) + eps).
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(lr: f64, n_params: usize) -> Self {
        Self { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; n_params], v: vec![0.0; n_params], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mhat = self.m[i] / bc1;
            let vhat = self.v[i] / bc2;
            params[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn conv_output_shape_chain() {
        // The sensing-tensor chain: (3,36,6) -> (4,16,4) -> (16,8,4) -> (16,4,4).
        let c1 = ConvShape { in_ch: 3, out_ch: 4, in_d1: 36, in_d2: 6, k: (5, 3), stride: (2, 1), pad: (0, 0) };
        assert_eq!((c1.out_d1(), c1.out_d2()), (16, 4));
        let c2 = ConvShape { in_ch: 4, out_ch: 16, in_d1: 16, in_d2: 4, k: (5, 3), stride: (2, 1), pad: (2, 1) };
        assert_eq!((c2.out_d1(), c2.out_d2()), (8, 4));
        let c3 = ConvShape { in_ch: 16, out_ch: 16, in_d1: 8, in_d2: 4, k: (5, 3), stride: (2, 1), pad: (2, 1) };
        assert_eq!((c3.out_d1(), c3.out_d2()), (4, 4));
        assert_eq!(c3.out_len(), 256);
    }

    #[test]
    fn conv_matches_direct_evaluation() {
        let s = ConvShape { in_ch: 2, out_ch: 3, in_d1: 7, in_d2: 5, k: (3, 3), stride: (2, 1), pad: (1, 1) };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w: Vec<f64> = (0..s.weight_len()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let b: Vec<f64> = (0..s.out_ch).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let x: Vec<f64> = (0..s.in_len()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let mut y = vec![0.0; s.out_len()];
        conv2d_forward(&s, &w, &b, &x, &mut y);
        // Direct sum for one arbitrary output element.
        let (oc, oi, oj) = (1, 2, 3);
        let mut acc = b[oc];
        for ic in 0..2 {
            for ki in 0..3 {
                for kj in 0..3 {
                    let ii = (oi * 2 + ki) as isize - 1;
                    let jj = (oj + kj) as isize - 1;
                    if ii >= 0 && ii < 7 && jj >= 0 && jj < 5 {
                        acc += w[((oc * 2 + ic) * 3 + ki) * 3 + kj] * x[(ic * 7 + ii as usize) * 5 + jj as usize];
                    }
                }
            }
        }
        assert!((y[(oc * s.out_d1() + oi) * s.out_d2() + oj] - acc).abs() < 1e-12);
    }

    #[test]
    fn l2_normalize_unit_norm_and_jacobian() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let x: Vec<f64> = (0..16).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let mut y = vec![0.0; 16];
            let n = l2_normalize(&x, &mut y);
            assert!((y.iter().map(|v| v * v).sum::<f64>().sqrt() - 1.0).abs() < 1e-12);

            // Finite-difference check of the closed-form Jacobian.
            let dy: Vec<f64> = (0..16).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let mut dx = vec![0.0; 16];
            l2_normalize_backward(&y, n, &dy, &mut dx);
            let eps = 1e-6;
            for i in 0..16 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += eps;
                xm[i] -= eps;
                let mut yp = vec![0.0; 16];
                let mut ym = vec![0.0; 16];
                l2_normalize(&xp, &mut yp);
                l2_normalize(&xm, &mut ym);
                let fd: f64 = (0..16).map(|j| dy[j] * (yp[j] - ym[j]) / (2.0 * eps)).sum();
                assert!((fd - dx[i]).abs() < 1e-6, "component {i}: {fd} vs {dx:?}");
            }
        }
    }

    #[test]
    fn zero_vector_normalizes_to_zero() {
        let x = vec![0.0; 8];
        let mut y = vec![1.0; 8];
        let n = l2_normalize(&x, &mut y);
        assert_eq!(n, 0.0);
        assert!(y.iter().all(|v| *v == 0.0));
        let mut dx = vec![1.0; 8];
        l2_normalize_backward(&y, n, &[1.0; 8], &mut dx);
        assert!(dx.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn orthogonal_init_has_orthonormal_rows_or_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = orthogonal(4, 9, 1.0, &mut rng);
        // Rows orthonormal when rows < cols.
        for r1 in 0..4 {
            for r2 in 0..4 {
                let dot: f64 = (0..9).map(|c| w[r1 * 9 + c] * w[r2 * 9 + c]).sum();
                let expect = if r1 == r2 { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-10);
            }
        }
        let w = orthogonal(9, 4, 2.0, &mut rng);
        // Columns orthogonal with norm = gain when rows > cols.
        for c1 in 0..4 {
            let dot: f64 = (0..9).map(|r| w[r * 4 + c1] * w[r * 4 + c1]).sum();
            assert!((dot - 4.0).abs() < 1e-10);
        }
    }

    #[test]
    fn grad_clip_scales_to_max_norm() {
        let mut g = vec![3.0, 4.0];
        let n = clip_grad_norm(&mut g, 1.0);
        assert!((n - 5.0).abs() < 1e-12);
        let after = (g[0] * g[0] + g[1] * g[1]).sqrt();
        assert!((after - 1.0).abs() < 1e-12);
    }
}

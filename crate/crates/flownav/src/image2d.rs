//! Minimal float image container used throughout the sensing path, with
//! corner-aligned bilinear resampling, block min-pooling, and 16-bit PGM
//! (P5, big-endian samples) import/export.

use std::io::{BufRead, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major f64 image; index = y * width + x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self { width, height, data: vec![value; width * height] }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.data[y * self.width + x] = v;
    }

    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let xc = x.clamp(0, self.width as isize - 1) as usize;
        let yc = y.clamp(0, self.height as isize - 1) as usize;
        self.get(xc, yc)
    }

    /// Corner-aligned bilinear resample to `(new_w, new_h)`.
    pub fn resize_bilinear(&self, new_w: usize, new_h: usize) -> Image {
        let mut out = Image::zeros(new_w, new_h);
        let sx = if new_w > 1 { (self.width - 1) as f64 / (new_w - 1) as f64 } else { 0.0 };
        let sy = if new_h > 1 { (self.height - 1) as f64 / (new_h - 1) as f64 } else { 0.0 };
        for y in 0..new_h {
            let fy = y as f64 * sy;
            let y0 = fy.floor() as usize;
            let y1 = (y0 + 1).min(self.height - 1);
            let wy = fy - y0 as f64;
            for x in 0..new_w {
                let fx = x as f64 * sx;
                let x0 = fx.floor() as usize;
                let x1 = (x0 + 1).min(self.width - 1);
                let wx = fx - x0 as f64;
                let v = self.get(x0, y0) * (1.0 - wx) * (1.0 - wy)
                    + self.get(x1, y0) * wx * (1.0 - wy)
                    + self.get(x0, y1) * (1.0 - wx) * wy
                    + self.get(x1, y1) * wx * wy;
                out.set(x, y, v);
            }
        }
        out
    }

    /// Min-pool over non-overlapping `bw x bh` blocks. Dimensions must divide
    /// exactly.
    pub fn min_pool(&self, bw: usize, bh: usize) -> Image {
        assert!(self.width % bw == 0 && self.height % bh == 0, "pool blocks must tile the image");
        let ow = self.width / bw;
        let oh = self.height / bh;
        let mut out = Image::zeros(ow, oh);
        for oy in 0..oh {
            for ox in 0..ow {
                let mut m = f64::INFINITY;
                for dy in 0..bh {
                    for dx in 0..bw {
                        m = m.min(self.get(ox * bw + dx, oy * bh + dy));
                    }
                }
                out.set(ox, oy, m);
            }
        }
        out
    }

    pub fn scaled(&self, s: f64) -> Image {
        Image { width: self.width, height: self.height, data: self.data.iter().map(|v| v * s).collect() }
    }

    /// Write as binary PGM (P5) with 16-bit big-endian samples. Values are
    /// quantized as round(v * 65535) and clamped to [0, 65535]; callers pass
    /// images already normalized to [0, 1].
    pub fn write_pgm16(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        write!(f, "P5\n{} {}\n65535\n", self.width, self.height)?;
        for v in &self.data {
            let q = (v * 65535.0).round().clamp(0.0, 65535.0) as u16;
            f.write_all(&q.to_be_bytes())?;
        }
        Ok(())
    }

    /// Read a 16-bit binary PGM written by [`write_pgm16`]; samples map back
    /// to [0, 1].
    pub fn read_pgm16(path: &Path) -> Result<Image> {
        let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
        let bad = |m: &str| Error::Log(format!("{}: {m}", path.display()));
        let mut fields = Vec::new();
        // The header is three whitespace-separated tokens after the magic,
        // possibly with comment lines.
        let mut line = String::new();
        r.read_line(&mut line)?;
        if line.trim() != "P5" {
            return Err(bad("not a binary PGM"));
        }
        while fields.len() < 3 {
            line.clear();
            if r.read_line(&mut line)? == 0 {
                return Err(bad("truncated header"));
            }
            if line.starts_with('#') {
                continue;
            }
            fields.extend(line.split_whitespace().map(|s| s.to_string()));
        }
        let width: usize = fields[0].parse().map_err(|_| bad("bad width"))?;
        let height: usize = fields[1].parse().map_err(|_| bad("bad height"))?;
        let maxval: u32 = fields[2].parse().map_err(|_| bad("bad maxval"))?;
        if maxval != 65535 {
            return Err(bad("expected 16-bit samples"));
        }
        let mut raw = vec![0u8; width * height * 2];
        r.read_exact(&mut raw)?;
        let data = raw
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / 65535.0)
            .collect();
        Ok(Image { width, height, data })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resize_preserves_constants() {
        let img = Image::filled(108, 18, 0.37);
        let out = img.resize_bilinear(96, 16);
        assert!(out.data.iter().all(|v| (v - 0.37).abs() < 1e-12));
    }

    #[test]
    fn resize_preserves_linear_ramp() {
        let mut img = Image::zeros(108, 18);
        for y in 0..18 {
            for x in 0..108 {
                img.set(x, y, x as f64 / 107.0);
            }
        }
        let out = img.resize_bilinear(96, 16);
        for y in 0..16 {
            for x in 0..96 {
                let expect = x as f64 * (107.0 / 95.0) / 107.0;
                assert!((out.get(x, y) - expect).abs() < 1e-6, "({x},{y})");
            }
        }
    }

    #[test]
    fn resize_matches_direct_formula() {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut img = Image::zeros(108, 18);
        for v in img.data.iter_mut() {
            *v = rng.random::<f64>();
        }
        let out = img.resize_bilinear(96, 16);
        // Independent per-pixel evaluation of corner-aligned bilinear.
        let (sx, sy) = (107.0 / 95.0, 17.0 / 15.0);
        for y in 0..16 {
            for x in 0..96 {
                let fx = x as f64 * sx;
                let fy = y as f64 * sy;
                let (x0, y0) = (fx.floor() as usize, fy.floor() as usize);
                let (x1, y1) = ((x0 + 1).min(107), (y0 + 1).min(17));
                let (wx, wy) = (fx - x0 as f64, fy - y0 as f64);
                let expect = img.get(x0, y0) * (1.0 - wx) * (1.0 - wy)
                    + img.get(x1, y0) * wx * (1.0 - wy)
                    + img.get(x0, y1) * (1.0 - wx) * wy
                    + img.get(x1, y1) * wx * wy;
                assert_eq!(out.get(x, y), expect);
            }
        }
    }

    #[test]
    fn min_pool_picks_block_minimum() {
        let mut img = Image::filled(108, 18, 10.0);
        img.set(4, 5, 2.0);
        let out = img.min_pool(3, 3);
        assert_eq!(out.get(1, 1), 2.0);
        let low: Vec<_> = out.data.iter().filter(|v| **v < 10.0).collect();
        assert_eq!(low.len(), 1);
    }

    #[test]
    fn pgm_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.pgm");
        let mut img = Image::zeros(9, 4);
        for (i, v) in img.data.iter_mut().enumerate() {
            *v = (i as f64 * 1833.0).rem_euclid(65536.0) / 65535.0;
        }
        // Snap to the 16-bit grid so the round trip is exact.
        for v in img.data.iter_mut() {
            *v = (*v * 65535.0).round() / 65535.0;
        }
        img.write_pgm16(&path).unwrap();
        let back = Image::read_pgm16(&path).unwrap();
        assert_eq!(img, back);
    }
}

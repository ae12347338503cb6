//! Analytic intersection and distance primitives for the two obstacle shapes
//! the simulator knows about: vertical capped cylinders and axis-aligned
//! boxes. Everything here is exact closed-form geometry; the ray-marching
//! oracle in the test suite checks these against dense sampling.

use nalgebra::{Vector2, Vector3};

const T_EPS: f64 = 1e-12;

/// Smallest positive `t` with `origin + t*dir` on the side or cap surface of
/// a vertical cylinder centered at `center` (full 3D center), or `None`.
pub fn ray_cylinder(
    origin: &Vector3<f64>,
    dir: &Vector3<f64>,
    center: &Vector3<f64>,
    radius: f64,
    half_height: f64,
) -> Option<f64> {
    let mut best: Option<f64> = None;
    let ox = origin.x - center.x;
    let oy = origin.y - center.y;
    let z_lo = center.z - half_height;
    let z_hi = center.z + half_height;

    // Side wall: quadratic in the xy plane.
    let a = dir.x * dir.x + dir.y * dir.y;
    if a > 0.0 {
        let b = 2.0 * (ox * dir.x + oy * dir.y);
        let c = ox * ox + oy * oy - radius * radius;
        let disc = b * b - 4.0 * a * c;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            for t in [(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)] {
                if t > T_EPS {
                    let z = origin.z + t * dir.z;
                    if z >= z_lo && z <= z_hi {
                        best = Some(best.map_or(t, |b: f64| b.min(t)));
                    }
                }
            }
        }
    }

    // Caps.
    if dir.z.abs() > 0.0 {
        for cap_z in [z_lo, z_hi] {
            let t = (cap_z - origin.z) / dir.z;
            if t > T_EPS {
                let x = ox + t * dir.x;
                let y = oy + t * dir.y;
                if x * x + y * y <= radius * radius {
                    best = Some(best.map_or(t, |b: f64| b.min(t)));
                }
            }
        }
    }

    best
}

/// Smallest positive `t` with `origin + t*dir` on the surface of the
/// axis-aligned box `[min, max]`, or `None`. An origin inside the box hits
/// the surface on the way out.
pub fn ray_box(
    origin: &Vector3<f64>,
    dir: &Vector3<f64>,
    bmin: &Vector3<f64>,
    bmax: &Vector3<f64>,
) -> Option<f64> {
    let mut t_min = f64::NEG_INFINITY;
    let mut t_max = f64::INFINITY;
    for i in 0..3 {
        let o = origin[i];
        let d = dir[i];
        if d.abs() < 1e-15 {
            if o < bmin[i] || o > bmax[i] {
                return None;
            }
        } else {
            let mut t1 = (bmin[i] - o) / d;
            let mut t2 = (bmax[i] - o) / d;
            if t1 > t2 {
                std::mem::swap(&mut t1, &mut t2);
            }
            t_min = t_min.max(t1);
            t_max = t_max.min(t2);
            if t_min > t_max {
                return None;
            }
        }
    }
    if t_min > T_EPS {
        Some(t_min)
    } else if t_max > T_EPS {
        Some(t_max)
    } else {
        None
    }
}

/// Signed distance from `p` to the surface of a vertical capped cylinder.
/// Negative inside.
pub fn sdf_cylinder(
    p: &Vector3<f64>,
    center: &Vector3<f64>,
    radius: f64,
    half_height: f64,
) -> f64 {
    let dx = p.x - center.x;
    let dy = p.y - center.y;
    let rho = (dx * dx + dy * dy).sqrt() - radius;
    let dz = (p.z - center.z).abs() - half_height;
    let outside = (rho.max(0.0).powi(2) + dz.max(0.0).powi(2)).sqrt();
    let inside = rho.max(dz).min(0.0);
    outside + inside
}

/// Signed distance from `p` to the surface of the box `[min, max]`.
/// Negative inside.
pub fn sdf_box(p: &Vector3<f64>, bmin: &Vector3<f64>, bmax: &Vector3<f64>) -> f64 {
    let cx = 0.5 * (bmin.x + bmax.x);
    let cy = 0.5 * (bmin.y + bmax.y);
    let cz = 0.5 * (bmin.z + bmax.z);
    let qx = (p.x - cx).abs() - 0.5 * (bmax.x - bmin.x);
    let qy = (p.y - cy).abs() - 0.5 * (bmax.y - bmin.y);
    let qz = (p.z - cz).abs() - 0.5 * (bmax.z - bmin.z);
    let outside = (qx.max(0.0).powi(2) + qy.max(0.0).powi(2) + qz.max(0.0).powi(2)).sqrt();
    let inside = qx.max(qy).max(qz).min(0.0);
    outside + inside
}

/// Distance in the xy plane from `p` to the segment `a`—`b` (all projected
/// to the horizontal plane).
pub fn point_segment_distance_xy(p: &Vector3<f64>, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let p2 = Vector2::new(p.x, p.y);
    let a2 = Vector2::new(a.x, a.y);
    let b2 = Vector2::new(b.x, b.y);
    let ab = b2 - a2;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p2 - a2).norm();
    }
    let t = ((p2 - a2).dot(&ab) / len2).clamp(0.0, 1.0);
    (p2 - (a2 + ab * t)).norm()
}

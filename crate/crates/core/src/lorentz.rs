//! Periodic Lorentz gas geometry: exact free path length via cell
//! traversal, elastic reflection, the direction-aligning rotation K(v),
//! ray-ball hit counts, and empirical free-path-length distributions.

use crate::error::{Error, Result};
use crate::geom::{self, Mat};
use crate::lattice::{self, AffineLattice, Shell};
use crate::stats::run_chunked;
use crate::traversal;
use rand::Rng;

/// Discriminants closer to zero than this count as tangency, which does
/// not enter the open scatterer.
const TANGENCY_TOL: f64 = 1e-14;

/// Entry times below this are starts on a scatterer boundary pointing
/// inward; the standing assumption on the offset excludes them, so they
/// are ignored rather than reported as zero-length paths.
const MIN_ENTRY_TIME: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct RayQuery {
    pub start: Vec<f64>,
    pub v: Vec<f64>,
    pub rho: f64,
    pub t_max: f64,
}

impl RayQuery {
    pub fn new(start: Vec<f64>, v: Vec<f64>, rho: f64, t_max: f64) -> Result<RayQuery> {
        let n = geom::norm(&v);
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::NotUnitVector { norm: n });
        }
        if rho <= 0.0 || t_max <= 0.0 {
            return Err(Error::InvalidParameter {
                reason: format!("need rho > 0 and t_max > 0, got rho={rho}, t_max={t_max}"),
            });
        }
        Ok(RayQuery { start, v, rho, t_max })
    }
}

#[derive(Clone, Debug)]
pub struct CollisionRecord {
    pub tau1: f64,
    /// Center of the scatterer that was hit.
    pub center: Vec<f64>,
    /// Integer coefficients of the hit center.
    pub coeff: Vec<i64>,
    /// Unit vector from the center to the collision point.
    pub w1: Vec<f64>,
    /// Outgoing velocity after elastic reflection.
    pub v1: Vec<f64>,
}

#[derive(Clone, Debug)]
pub enum FreePathOutcome {
    Hit(CollisionRecord),
    HorizonExceeded,
}

/// Elastic reflection v1 = v0 - 2 (v0 . w1) w1.
pub fn reflect(v0: &[f64], w1: &[f64]) -> Vec<f64> {
    let s = 2.0 * geom::dot(v0, w1);
    v0.iter().zip(w1).map(|(a, b)| a - s * b).collect()
}

/// Rotation K(v) with v K(v) = e1 (row-vector action), smooth away from
/// -e1; K(e1) = I and K(-e1) = -I.
pub fn k_of_v(v: &[f64]) -> Mat {
    let d = v.len();
    let v_perp_norm = geom::lateral_norm(v);
    if v_perp_norm < 1e-15 {
        if v[0] > 0.0 {
            return Mat::identity(d);
        }
        let mut m = Mat::identity(d);
        for x in m.data.iter_mut() {
            *x = -*x;
        }
        return m;
    }
    if d == 2 {
        // rotation by -arg(v)
        return Mat::from_rows(&[vec![v[0], -v[1]], vec![v[1], v[0]]]).unwrap();
    }
    // E(w) = exp([[0, w], [-w^T, 0]]) with w = -theta * v_perp / |v_perp|
    let theta = v[0].clamp(-1.0, 1.0).acos();
    let w: Vec<f64> = v[1..].iter().map(|&x| -theta * x / v_perp_norm).collect();
    let mut a = Mat {
        dim: d,
        data: vec![0.0; d * d],
    };
    for j in 1..d {
        a.set(0, j, w[j - 1]);
        a.set(j, 0, -w[j - 1]);
    }
    let a2 = a.matmul(&a);
    let mut k = Mat::identity(d);
    let (s, c) = theta.sin_cos();
    for i in 0..d * d {
        k.data[i] += s / theta * a.data[i] + (1.0 - c) / (theta * theta) * a2.data[i];
    }
    k
}

/// Nearest scatterer center to a point, searched in the coefficient cells
/// around the point (sufficient for reduced or near-orthogonal bases used
/// here; the start-outside precondition only needs a not-too-distant hit).
fn nearest_center(lat: &AffineLattice, x: &[f64]) -> (Vec<f64>, f64) {
    let d = lat.dim();
    let a = lat.alpha.vector();
    let n = lat.basis.coefficients(x);
    let base: Vec<i64> = (0..d).map(|k| (n[k] - a[k]).floor() as i64).collect();
    let mut best = f64::INFINITY;
    let mut best_pt = vec![0.0; d];
    let mut m = vec![0i64; d];
    let total = 4i64.pow(d as u32);
    for idx in 0..total {
        let mut t = idx;
        for k in 0..d {
            m[k] = base[k] - 1 + t % 4;
            t /= 4;
        }
        let y = lat.point(&m);
        let dist = geom::dist(&y, x);
        if dist < best {
            best = dist;
            best_pt = y;
        }
    }
    (best_pt, best)
}

fn traversal_margin(lat: &AffineLattice, rho: f64) -> i64 {
    let inv_norm = lat.basis.inv().frobenius_norm();
    ((rho * inv_norm).ceil() as i64 + 1).max(1)
}

fn max_row_norm(m: &Mat) -> f64 {
    (0..m.dim).map(|i| geom::norm(m.row(i))).fold(0.0, f64::max)
}

/// First entry time of the ray into the union of open balls of radius rho
/// around the points of `lat`, within the horizon.
pub fn free_path(lat: &AffineLattice, q: &RayQuery) -> Result<FreePathOutcome> {
    let d = lat.dim();
    let rho = q.rho;
    let bound = 0.45 * lat.min_distance();
    if rho > bound {
        return Err(Error::RadiusTooLarge { rho, bound });
    }
    let (center, dist) = nearest_center(lat, &q.start);
    // starts exactly on a boundary are allowed (rays leaving a scatterer)
    if dist < rho - 1e-12 {
        return Err(Error::StartInsideScatterer { dist, rho, center });
    }

    let alpha = lat.alpha.vector();
    let mat = lat.basis.mat();
    let end: Vec<f64> = (0..d).map(|k| q.start[k] + q.t_max * q.v[k]).collect();
    let a: Vec<f64> = geom::sub(&lat.basis.coefficients(&q.start), &alpha);
    let b: Vec<f64> = geom::sub(&lat.basis.coefficients(&end), &alpha);
    let margin = traversal_margin(lat, rho);
    // ambient length a candidate found in a cell entered at arc length s can
    // still hit before s, bounded by the ambient diameter of the margin box
    let slack = 2.0 * (margin as f64 + 1.0) * max_row_norm(mat) + rho;

    let mut best_t = f64::INFINITY;
    let mut best_m: Vec<i64> = Vec::new();
    let mut shifted = vec![0.0; d];
    let mut y = vec![0.0; d];
    traversal::traverse_segment(&a, &b, margin, |m, t_entry| {
        let s = t_entry * q.t_max;
        if s - slack > best_t {
            return false;
        }
        for k in 0..d {
            shifted[k] = m[k] as f64 + alpha[k];
        }
        mat.apply_row_into(&shifted, &mut y);
        let mut b_par = 0.0;
        for k in 0..d {
            b_par += (y[k] - q.start[k]) * q.v[k];
        }
        // perpendicular offset computed componentwise: the naive
        // discriminant b_par^2 - (|dy|^2 - rho^2) cancels catastrophically
        // when |dy| >> rho
        let mut perp_sq = 0.0;
        for k in 0..d {
            let p = y[k] - q.start[k] - b_par * q.v[k];
            perp_sq += p * p;
        }
        let disc = rho * rho - perp_sq;
        if disc > TANGENCY_TOL {
            // smaller root of t^2 - 2 b_par t + (|dy|^2 - rho^2) = 0
            let t1 = b_par - disc.sqrt();
            if t1 > MIN_ENTRY_TIME && t1 <= q.t_max && t1 < best_t {
                best_t = t1;
                best_m = m.to_vec();
            }
        }
        true
    });

    if best_t.is_finite() {
        let center = lat.point(&best_m);
        let hit: Vec<f64> = (0..d).map(|k| q.start[k] + best_t * q.v[k]).collect();
        let mut w1 = geom::sub(&hit, &center);
        let n = geom::norm(&w1);
        for x in w1.iter_mut() {
            *x /= n;
        }
        let v1 = reflect(&q.v, &w1);
        Ok(FreePathOutcome::Hit(CollisionRecord {
            tau1: best_t,
            center,
            coeff: best_m,
            w1,
            v1,
        }))
    } else {
        Ok(FreePathOutcome::HorizonExceeded)
    }
}

/// Brute-force free path oracle: test every center within |y - start| <=
/// t_max + 1 analytically. Intended for tests; cost grows like t_max^d.
pub fn free_path_brute_force(lat: &AffineLattice, q: &RayQuery) -> Result<FreePathOutcome> {
    let d = lat.dim();
    let r = q.t_max + 1.0;
    let lo: Vec<f64> = q.start.iter().map(|&x| x - r).collect();
    let hi: Vec<f64> = q.start.iter().map(|&x| x + r).collect();
    let mut best_t = f64::INFINITY;
    let mut best_m: Vec<i64> = Vec::new();
    lattice::for_each_point_in_box(lat, &lo, &hi, 1 << 34, |y, m| {
        let dy = geom::sub(y, &q.start);
        let b_par = geom::dot(&dy, &q.v);
        let perp_sq: f64 = (0..d).map(|k| (dy[k] - b_par * q.v[k]).powi(2)).sum();
        let disc = q.rho * q.rho - perp_sq;
        if disc > TANGENCY_TOL {
            let t1 = b_par - disc.sqrt();
            if t1 > MIN_ENTRY_TIME && t1 <= q.t_max && t1 < best_t {
                best_t = t1;
                best_m = m.to_vec();
            }
        }
    })?;
    if best_t.is_finite() {
        let center = lat.point(&best_m);
        let hit: Vec<f64> = (0..d).map(|k| q.start[k] + best_t * q.v[k]).collect();
        let mut w1 = geom::sub(&hit, &center);
        let n = geom::norm(&w1);
        for x in w1.iter_mut() {
            *x /= n;
        }
        let v1 = reflect(&q.v, &w1);
        Ok(FreePathOutcome::Hit(CollisionRecord {
            tau1: best_t,
            center,
            coeff: best_m,
            w1,
            v1,
        }))
    } else {
        Ok(FreePathOutcome::HorizonExceeded)
    }
}

/// Number of shell centers y (origin excluded, cT <= |y| < T) whose open
/// ball of radius rho meets the ray rho * w_offset + t v, t > 0.
pub fn ray_hit_count(
    lat: &AffineLattice,
    shell: &Shell,
    rho: f64,
    v: &[f64],
    w_offset: &[f64],
) -> Result<u64> {
    let d = lat.dim();
    let n = geom::norm(v);
    if (n - 1.0).abs() > 1e-12 {
        return Err(Error::NotUnitVector { norm: n });
    }
    if rho == 0.0 {
        return Ok(0);
    }
    if rho > lat.min_distance() {
        return Err(Error::RadiusTooLarge {
            rho,
            bound: lat.min_distance(),
        });
    }
    let start: Vec<f64> = w_offset.iter().map(|&x| rho * x).collect();
    let reach = shell.t + rho + 1.0;
    let end: Vec<f64> = (0..d).map(|k| start[k] + reach * v[k]).collect();
    let alpha = lat.alpha.vector();
    let mat = lat.basis.mat();
    let a: Vec<f64> = geom::sub(&lat.basis.coefficients(&start), &alpha);
    let b: Vec<f64> = geom::sub(&lat.basis.coefficients(&end), &alpha);
    let margin = traversal_margin(lat, rho);

    let mut count = 0u64;
    let mut shifted = vec![0.0; d];
    let mut y = vec![0.0; d];
    traversal::traverse_segment(&a, &b, margin, |m, _| {
        for k in 0..d {
            shifted[k] = m[k] as f64 + alpha[k];
        }
        mat.apply_row_into(&shifted, &mut y);
        let r = geom::norm(&y);
        if !shell.contains_norm(r) || lat.is_zero_point(m) {
            return true;
        }
        let mut b_par = 0.0;
        for k in 0..d {
            b_par += (y[k] - start[k]) * v[k];
        }
        // the perpendicular offset is formed componentwise; the naive
        // discriminant cancels catastrophically when |y| >> rho
        let mut perp_sq = 0.0;
        for k in 0..d {
            let p = y[k] - start[k] - b_par * v[k];
            perp_sq += p * p;
        }
        // start is outside the ball, so the ray meets the open ball at
        // positive times iff it passes within rho and the closest approach
        // is ahead of the start
        if rho * rho - perp_sq > TANGENCY_TOL && b_par > 0.0 {
            count += 1;
        }
        true
    });
    Ok(count)
}

/// Sampled free path lengths in macroscopic units xi = rho^{d-1} tau.
#[derive(Clone, Debug)]
pub struct FreePathSample {
    /// Observed macroscopic path lengths (collisions within the horizon).
    pub xi: Vec<f64>,
    /// Directions that exceeded the horizon.
    pub censored: u64,
    pub n: u64,
    pub xi_horizon: f64,
}

impl FreePathSample {
    /// Empirical survival P(xi >= x); censored runs count as >= horizon.
    pub fn survival(&self, x: f64) -> f64 {
        let hits = self.xi.iter().filter(|&&t| t >= x).count() as u64;
        let cens = if self.xi_horizon >= x { self.censored } else { 0 };
        (hits + cens) as f64 / self.n as f64
    }

    pub fn censored_fraction(&self) -> f64 {
        self.censored as f64 / self.n as f64
    }
}

fn unit_vector_2d(angle: f64) -> Vec<f64> {
    vec![angle.cos(), angle.sin()]
}

/// Verifies the standing assumption for lattice start points: the offset
/// ray beta(v) + t v, t > 0, must avoid the open unit ball.
fn check_offset(beta: &(dyn Fn(&[f64]) -> Vec<f64> + Sync), d: usize) -> Result<()> {
    assert_eq!(d, 2, "offset check implemented for d = 2");
    for k in 0..64 {
        let v = unit_vector_2d(k as f64 / 64.0 * std::f64::consts::TAU);
        let b = beta(&v);
        let t_star = -geom::dot(&b, &v);
        let min_dist = if t_star <= 0.0 {
            geom::norm(&b)
        } else {
            (geom::norm_sq(&b) - t_star * t_star).max(0.0).sqrt()
        };
        if min_dist < 1.0 - 1e-9 {
            return Err(Error::OffsetHitsUnitBall { v });
        }
    }
    Ok(())
}

/// Samples rho^{d-1} tau_1(q0 + rho beta(v), v; rho) over uniform random
/// directions v (d = 2), with horizon xi_horizon in macroscopic units.
#[allow(clippy::too_many_arguments)]
pub fn sample_free_paths(
    lat: &AffineLattice,
    q0: &[f64],
    beta: &(dyn Fn(&[f64]) -> Vec<f64> + Sync),
    rho: f64,
    xi_horizon: f64,
    n_dirs: u64,
    seed: u64,
) -> Result<FreePathSample> {
    let d = lat.dim();
    if d != 2 {
        return Err(Error::UnsupportedDimension {
            dim: d,
            operation: "free path sampling",
        });
    }
    let scale = rho.powi(d as i32 - 1);
    let t_max = xi_horizon / scale * 1.05;
    let (_, dist0) = nearest_center(lat, q0);
    if dist0 < 1e-9 {
        check_offset(&beta, d)?;
    }
    let chunks = run_chunked(n_dirs, seed, |rng, count| {
        let mut xi = Vec::with_capacity(count as usize);
        let mut censored = 0u64;
        for _ in 0..count {
            let v = unit_vector_2d(rng.gen_range(0.0..std::f64::consts::TAU));
            let b = beta(&v);
            let start: Vec<f64> = (0..d).map(|k| q0[k] + rho * b[k]).collect();
            let q = RayQuery::new(start, v, rho, t_max).unwrap();
            match free_path(lat, &q).unwrap() {
                FreePathOutcome::Hit(rec) => xi.push(scale * rec.tau1),
                FreePathOutcome::HorizonExceeded => censored += 1,
            }
        }
        (xi, censored)
    });
    let mut xi = Vec::with_capacity(n_dirs as usize);
    let mut censored = 0u64;
    for (x, c) in chunks {
        xi.extend(x);
        censored += c;
    }
    Ok(FreePathSample {
        xi,
        censored,
        n: n_dirs,
        xi_horizon,
    })
}

/// One direction's first-collision data in macroscopic units.
#[derive(Clone, Debug)]
pub struct JointRecord {
    pub v: Vec<f64>,
    pub xi: f64,
    /// -w1 K(v): lies in the hemisphere {z : z_1 > 0}.
    pub w1_aligned: Vec<f64>,
}

/// Samples (v, rho^{d-1} tau_1, -w1 K(v)) over uniform random directions.
#[allow(clippy::too_many_arguments)]
pub fn joint_tau_w1_sample(
    lat: &AffineLattice,
    q0: &[f64],
    beta: &(dyn Fn(&[f64]) -> Vec<f64> + Sync),
    rho: f64,
    xi_horizon: f64,
    n_dirs: u64,
    seed: u64,
) -> Result<(Vec<JointRecord>, u64)> {
    let d = lat.dim();
    if d != 2 {
        return Err(Error::UnsupportedDimension {
            dim: d,
            operation: "joint collision sampling",
        });
    }
    let scale = rho.powi(d as i32 - 1);
    let t_max = xi_horizon / scale * 1.05;
    let (_, dist0) = nearest_center(lat, q0);
    if dist0 < 1e-9 {
        check_offset(&beta, d)?;
    }
    let chunks = run_chunked(n_dirs, seed, |rng, count| {
        let mut recs = Vec::with_capacity(count as usize);
        let mut censored = 0u64;
        for _ in 0..count {
            let v = unit_vector_2d(rng.gen_range(0.0..std::f64::consts::TAU));
            let b = beta(&v);
            let start: Vec<f64> = (0..d).map(|k| q0[k] + rho * b[k]).collect();
            let q = RayQuery::new(start, v.clone(), rho, t_max).unwrap();
            match free_path(lat, &q).unwrap() {
                FreePathOutcome::Hit(rec) => {
                    let k = k_of_v(&v);
                    let mw1: Vec<f64> = rec.w1.iter().map(|&x| -x).collect();
                    recs.push(JointRecord {
                        v,
                        xi: scale * rec.tau1,
                        w1_aligned: k.apply_row(&mw1),
                    });
                }
                FreePathOutcome::HorizonExceeded => censored += 1,
            }
        }
        (recs, censored)
    });
    let mut recs = Vec::with_capacity(n_dirs as usize);
    let mut censored = 0u64;
    for (r, c) in chunks {
        recs.extend(r);
        censored += c;
    }
    Ok((recs, censored))
}

/// True when the ray origin + t v, t > 0, meets the open convex polygon
/// (vertices counter-clockwise).
pub fn ray_meets_polygon(origin: &[f64], v: &[f64], verts: &[[f64; 2]]) -> bool {
    let mut t_lo = 0.0f64;
    let mut t_hi = f64::INFINITY;
    let n = verts.len();
    for i in 0..n {
        let a = verts[i];
        let b = verts[(i + 1) % n];
        // inward normal of a CCW edge
        let nx = -(b[1] - a[1]);
        let ny = b[0] - a[0];
        let denom = nx * v[0] + ny * v[1];
        let num = nx * (a[0] - origin[0]) + ny * (a[1] - origin[1]);
        // constraint: denom * t > num
        if denom.abs() < 1e-15 {
            if num >= 0.0 {
                return false;
            }
        } else if denom > 0.0 {
            t_lo = t_lo.max(num / denom);
        } else {
            t_hi = t_hi.min(num / denom);
        }
    }
    t_hi > t_lo
}

/// Number of shell centers y whose translate of the scaled polygon
/// Q_T = T^{-1} Q (d = 2) meets the ray t v, t > 0.
pub fn convex_scatterer_hit_count(
    lat: &AffineLattice,
    shell: &Shell,
    polygon: &[[f64; 2]],
    v: &[f64],
) -> Result<u64> {
    if lat.dim() != 2 {
        return Err(Error::UnsupportedDimension {
            dim: lat.dim(),
            operation: "polygon scatterers",
        });
    }
    let scale = 1.0 / shell.t;
    let scaled: Vec<[f64; 2]> = polygon
        .iter()
        .map(|p| [p[0] * scale, p[1] * scale])
        .collect();
    let mut count = 0u64;
    lattice::for_each_shell_point(lat, shell, lattice::DEFAULT_POINT_CAP, |y, m| {
        if lat.is_zero_point(m) {
            return;
        }
        let moved: Vec<[f64; 2]> = scaled.iter().map(|p| [p[0] + y[0], p[1] + y[1]]).collect();
        if ray_meets_polygon(&[0.0, 0.0], v, &moved) {
            count += 1;
        }
    })?;
    Ok(count)
}

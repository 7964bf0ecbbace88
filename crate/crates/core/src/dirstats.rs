//! Directional statistics of lattice points: sorted directions on the
//! circle, normalized gap distributions, sqrt(n) mod 1, counts in small
//! discs around random directions, and the empirical count law E(r, sigma).

use crate::error::{Error, Result};
use crate::geom;
use crate::lattice::{self, AffineLattice, Alpha, Shell};
use crate::stats::{run_chunked, Estimate};
use rand::Rng;

/// Sorted sample of circle positions in (-1/2, 1/2] (units of full turns).
#[derive(Clone, Debug)]
pub struct DirectionSample {
    values: Vec<f64>,
}

/// Maps a real number mod 1 into (-1/2, 1/2].
pub fn wrap_half(x: f64) -> f64 {
    let mut f = x - x.floor(); // [0, 1)
    if f > 0.5 {
        f -= 1.0;
    }
    f
}

impl DirectionSample {
    pub fn from_values(mut values: Vec<f64>) -> DirectionSample {
        for v in values.iter_mut() {
            *v = wrap_half(*v);
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        DirectionSample { values }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Gaps between consecutive directions, normalized to mean one, with
    /// the wrap gap xi_0 = xi_N - 1. They sum to N exactly by telescoping.
    pub fn normalized_gaps(&self) -> Vec<f64> {
        let n = self.values.len();
        if n == 0 {
            return Vec::new();
        }
        let nf = n as f64;
        let mut gaps = Vec::with_capacity(n);
        let prev0 = self.values[n - 1] - 1.0;
        let mut prev = prev0;
        for &v in &self.values {
            gaps.push(nf * (v - prev));
            prev = v;
        }
        gaps
    }

    /// P_hat(s) = fraction of normalized gaps >= s, for each s in the grid.
    pub fn gap_distribution(&self, s_grid: &[f64]) -> Vec<f64> {
        let mut gaps = self.normalized_gaps();
        gaps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = gaps.len() as f64;
        s_grid
            .iter()
            .map(|&s| {
                let k = gaps.partition_point(|&g| g < s);
                (gaps.len() - k) as f64 / n
            })
            .collect()
    }

    /// Sup distance between the gap distributions of two samples, evaluated
    /// over all gap values of both (where the step functions jump).
    pub fn gap_ks(&self, other: &DirectionSample) -> f64 {
        let mut grid: Vec<f64> = self
            .normalized_gaps()
            .into_iter()
            .chain(other.normalized_gaps())
            .collect();
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let p1 = self.gap_distribution(&grid);
        let p2 = other.gap_distribution(&grid);
        p1.iter()
            .zip(&p2)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Max over equal sectors of |count/total - 1/n| * n (relative
    /// deviation from equidistribution).
    pub fn sector_equidistribution(&self, n_sectors: usize) -> f64 {
        assert!(n_sectors >= 2);
        let mut counts = vec![0u64; n_sectors];
        for &v in &self.values {
            // shift to [0,1) and bin
            let u = v + 0.5 - (v + 0.5).floor();
            let k = ((u * n_sectors as f64) as usize).min(n_sectors - 1);
            counts[k] += 1;
        }
        let total = self.values.len() as f64;
        counts
            .iter()
            .map(|&c| (c as f64 / total - 1.0 / n_sectors as f64).abs() * n_sectors as f64)
            .fold(0.0, f64::max)
    }
}

/// Directions (2 pi)^{-1} arg(y_1 + i y_2) of the shell points of a planar
/// affine lattice, sorted; ties broken by the point's lexicographic order.
pub fn directions_2d(
    lat: &AffineLattice,
    shell: &Shell,
    visible_only: bool,
) -> Result<DirectionSample> {
    if lat.dim() != 2 {
        return Err(Error::UnsupportedDimension {
            dim: lat.dim(),
            operation: "planar direction statistics",
        });
    }
    let mut entries: Vec<(f64, f64, f64)> = Vec::new();
    lattice::for_each_shell_point(lat, shell, lattice::DEFAULT_POINT_CAP, |y, m| {
        if visible_only {
            if let Alpha::Rational { p, q } = &lat.alpha {
                if !lattice::is_visible(m, p, *q) {
                    return;
                }
            }
        }
        let v = y[1].atan2(y[0]) / std::f64::consts::TAU;
        entries.push((v, y[0], y[1]));
    })?;
    entries.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(DirectionSample {
        values: entries.into_iter().map(|(v, _, _)| v).collect(),
    })
}

/// Fractional parts of sqrt(n), n = 1..n_max, mapped to (-1/2, 1/2].
pub fn sqrt_mod_one(n_max: u64) -> DirectionSample {
    DirectionSample::from_values((1..=n_max).map(|n| (n as f64).sqrt()).collect())
}

/// Half-width in radians of the disc D_T(sigma, v): the disc has volume
/// sigma * d / ((1 - c^d) T^d) on the unit sphere.
pub fn disc_half_width(sigma: f64, c: f64, t: f64, dim: usize) -> Result<f64> {
    let d = dim as f64;
    let volume = sigma * d / ((1.0 - c.powi(dim as i32)) * t.powf(d));
    match dim {
        2 => {
            if volume > std::f64::consts::TAU {
                return Err(Error::DiscTooLarge {
                    volume,
                    total: std::f64::consts::TAU,
                });
            }
            Ok(volume / 2.0)
        }
        3 => {
            let total = 4.0 * std::f64::consts::PI;
            if volume > total {
                return Err(Error::DiscTooLarge { volume, total });
            }
            // spherical cap area 2 pi (1 - cos theta)
            Ok((1.0 - volume / (2.0 * std::f64::consts::PI)).acos())
        }
        _ => Err(Error::UnsupportedDimension {
            dim,
            operation: "disc counting",
        }),
    }
}

/// Number of shell points whose direction lies in the open disc of
/// parameter `sigma` centered at the unit vector `v`.
pub fn disc_count(
    lat: &AffineLattice,
    shell: &Shell,
    sigma: f64,
    v: &[f64],
) -> Result<u64> {
    let d = lat.dim();
    if (geom::norm(v) - 1.0).abs() > 1e-12 {
        return Err(Error::NotUnitVector { norm: geom::norm(v) });
    }
    if sigma == 0.0 {
        return Ok(0);
    }
    let half = disc_half_width(sigma, shell.c, shell.t, d)?;
    let cos_half = half.cos();
    let mut count = 0u64;
    lattice::for_each_shell_point(lat, shell, lattice::DEFAULT_POINT_CAP, |y, _| {
        let r = geom::norm(y);
        if geom::dot(y, v) / r > cos_half {
            count += 1;
        }
    })?;
    Ok(count)
}

/// Pre-sorted shell directions for fast repeated disc counting (d = 2).
pub struct ShellDirections {
    values: Vec<f64>,
    pub c: f64,
    pub t: f64,
}

impl ShellDirections {
    pub fn build(lat: &AffineLattice, shell: &Shell, visible_only: bool) -> Result<ShellDirections> {
        let sample = directions_2d(lat, shell, visible_only)?;
        Ok(ShellDirections {
            values: sample.values,
            c: shell.c,
            t: shell.t,
        })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// Number of directions in the open arc of half-width `w` turns
    /// around circle position `center` (in (-1/2, 1/2]).
    pub fn count_in_arc(&self, center: f64, w: f64) -> u64 {
        debug_assert!(w < 0.5);
        let vs = &self.values;
        let lo = center - w;
        let hi = center + w;
        // reduce lo into (-1/2, 1/2]
        let k = (lo + 0.5).floor();
        let lo = lo - k;
        let hi = hi - k;
        if hi <= 0.5 {
            let a = vs.partition_point(|&v| v <= lo);
            let b = vs.partition_point(|&v| v < hi);
            (b - a) as u64
        } else {
            let a = vs.partition_point(|&v| v <= lo);
            let b = vs.partition_point(|&v| v < hi - 1.0);
            (vs.len() - a + b) as u64
        }
    }

    /// Disc count around the direction at circle position `center`.
    pub fn disc_count_at(&self, center: f64, sigma: f64) -> Result<u64> {
        if sigma == 0.0 {
            return Ok(0);
        }
        let half = disc_half_width(sigma, self.c, self.t, 2)?;
        Ok(self.count_in_arc(center, half / std::f64::consts::TAU))
    }
}

/// Empirical estimate of E(r, sigma) = P(disc count = r) over uniformly
/// random directions (d = 2). With `visible_only`, the point set is
/// restricted to visible points and the disc is enlarged to
/// kappa_q^{-1} sigma, matching the visible-point count law.
#[allow(clippy::too_many_arguments)]
pub fn empirical_e(
    lat: &AffineLattice,
    r: u64,
    sigma: f64,
    c: f64,
    t: f64,
    n_dirs: u64,
    seed: u64,
    visible_only: bool,
) -> Result<Estimate> {
    if lat.dim() != 2 {
        return Err(Error::UnsupportedDimension {
            dim: lat.dim(),
            operation: "empirical count law",
        });
    }
    let shell = Shell::new(c, t)?;
    let sigma_eff = if visible_only {
        let q = lat.alpha.denominator().ok_or(Error::InvalidParameter {
            reason: "visible-only statistics need a rational shift".into(),
        })?;
        sigma / lattice::kappa(q, 2)
    } else {
        sigma
    };
    let dirs = ShellDirections::build(lat, &shell, visible_only)?;
    // validate the disc size once
    disc_half_width(sigma_eff.max(f64::MIN_POSITIVE), c, t, 2)?;
    let hits: u64 = run_chunked(n_dirs, seed, |rng, count| {
        let mut k = 0u64;
        for _ in 0..count {
            let u: f64 = rng.gen_range(-0.5..0.5);
            let cnt = if sigma_eff == 0.0 {
                0
            } else {
                dirs.disc_count_at(u, sigma_eff).unwrap()
            };
            if cnt == r {
                k += 1;
            }
        }
        k
    })
    .into_iter()
    .sum();
    Ok(Estimate::proportion(hits, n_dirs))
}

/// Mean disc count over uniformly random directions (d = 2); the limit law
/// says this tends to sigma as T grows.
pub fn mean_disc_count(
    lat: &AffineLattice,
    sigma: f64,
    c: f64,
    t: f64,
    n_dirs: u64,
    seed: u64,
) -> Result<Estimate> {
    let shell = Shell::new(c, t)?;
    let dirs = ShellDirections::build(lat, &shell, false)?;
    disc_half_width(sigma, c, t, 2)?;
    let moments = run_chunked(n_dirs, seed, |rng, count| {
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..count {
            let u: f64 = rng.gen_range(-0.5..0.5);
            let k = dirs.disc_count_at(u, sigma).unwrap() as f64;
            sum += k;
            sum_sq += k * k;
        }
        (sum, sum_sq)
    });
    let (sum, sum_sq) = moments
        .into_iter()
        .fold((0.0, 0.0), |(a, b), (s, s2)| (a + s, b + s2));
    Ok(Estimate::from_moments(sum, sum_sq, n_dirs))
}

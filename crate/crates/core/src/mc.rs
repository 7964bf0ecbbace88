//! Monte Carlo estimators of the limit count laws over random lattices:
//! cylinder law F(r, sigma), cone law E(r, sigma), the free-path density
//! Phi and its joint version, and the collision-kernel evaluation.
//!
//! All curve estimators share random numbers across the sigma/xi grid
//! (each sample is drawn once and evaluated at every grid point), so
//! monotonicity in sigma holds exactly sample-wise and finite differences
//! have low variance.

use crate::error::{Error, Result};
use crate::geom;
use crate::haar::{self, PointSet, Sl2Zq};
use crate::lattice::cone_aperture;
use crate::lorentz::k_of_v;
use crate::stats::{run_chunked, Estimate};
use rand_chacha::ChaCha8Rng;

/// Which shift class the random configuration is drawn from.
#[derive(Clone, Debug)]
pub enum AlphaKind {
    /// Punctured lattices Z^2_* M (zero excluded).
    Integral,
    /// Congruence configurations (Z^2 + p/q) M.
    Rational { p: [i64; 2], q: i64 },
    /// Generic affine lattices (Z^2 + xi) M, xi uniform.
    Irrational,
}

/// Sampler context; holds the enumerated congruence group when needed.
pub struct Sampler {
    kind: AlphaKind,
    group: Option<Sl2Zq>,
}

impl Sampler {
    pub fn new(kind: AlphaKind) -> Result<Sampler> {
        let group = match &kind {
            AlphaKind::Rational { q, .. } => Some(Sl2Zq::new(*q)?),
            _ => None,
        };
        Ok(Sampler { kind, group })
    }

    pub fn draw(&self, rng: &mut ChaCha8Rng) -> PointSet {
        match &self.kind {
            AlphaKind::Integral => PointSet::from_x1(&haar::sample_x1(rng)),
            AlphaKind::Rational { p, .. } => {
                let s = haar::sample_xq(rng, p, self.group.as_ref().unwrap()).unwrap();
                PointSet::from_xq(&s)
            }
            AlphaKind::Irrational => PointSet::from_x(&haar::sample_x(rng)),
        }
    }
}

/// Estimated curve: counts[i][r] = number of samples with exactly r points
/// at grid value i (the last bucket collects all larger counts).
#[derive(Clone, Debug)]
pub struct CountCurve {
    pub grid: Vec<f64>,
    pub counts: Vec<Vec<u64>>,
    pub n: u64,
}

impl CountCurve {
    pub fn estimate(&self, i: usize, r: usize) -> Estimate {
        Estimate::proportion(self.counts[i][r], self.n)
    }

    /// Probability of at least one point (1 - P(count = 0)).
    pub fn tail_estimate(&self, i: usize) -> Estimate {
        Estimate::proportion(self.n - self.counts[i][0], self.n)
    }
}

fn tally(values: &[f64], grid: &[f64], counts: &mut [Vec<u64>], closed: bool, r_cap: usize) {
    for (i, &g) in grid.iter().enumerate() {
        let k = values
            .iter()
            .filter(|&&v| if closed { v <= g } else { v < g })
            .count()
            .min(r_cap);
        counts[i][k] += 1;
    }
}

/// Cylinder law: for each sigma in the grid, the distribution of
/// #(points in {c < x_1 < 1, |x_2 - z| < sigma}) over random
/// configurations. Estimates F(r, sigma) for r = 0..r_cap.
pub fn mc_f_curve(
    sampler: &Sampler,
    sigma_grid: &[f64],
    c: f64,
    z: f64,
    r_cap: usize,
    n: u64,
    seed: u64,
) -> Result<CountCurve> {
    let sigma_max = sigma_grid.iter().cloned().fold(0.0, f64::max);
    if sigma_grid.iter().any(|&s| s < 0.0) || !(0.0..1.0).contains(&c) {
        return Err(Error::InvalidParameter {
            reason: "cylinder curve needs sigma >= 0 and 0 <= c < 1".into(),
        });
    }
    let chunks = run_chunked(n, seed, |rng, count| {
        let mut counts = vec![vec![0u64; r_cap + 1]; sigma_grid.len()];
        let mut lats: Vec<f64> = Vec::new();
        for _ in 0..count {
            let ps = sampler.draw(rng);
            lats.clear();
            ps.for_each_in_box(&[c, z - sigma_max], &[1.0, z + sigma_max], |y| {
                if y[0] > c && y[0] < 1.0 {
                    lats.push((y[1] - z).abs());
                }
            });
            tally(&lats, sigma_grid, &mut counts, false, r_cap);
        }
        counts
    });
    let mut counts = vec![vec![0u64; r_cap + 1]; sigma_grid.len()];
    for ch in chunks {
        for (acc, c) in counts.iter_mut().zip(ch) {
            for (a, b) in acc.iter_mut().zip(c) {
                *a += b;
            }
        }
    }
    Ok(CountCurve {
        grid: sigma_grid.to_vec(),
        counts,
        n,
    })
}

/// Cone law: distribution of #(points in the cone {c < x_1 < 1,
/// |x_2| <= x_1 A(c, sigma)}) over random configurations; estimates
/// E(r, sigma).
pub fn mc_e_curve(
    sampler: &Sampler,
    sigma_grid: &[f64],
    c: f64,
    r_cap: usize,
    n: u64,
    seed: u64,
) -> Result<CountCurve> {
    if sigma_grid.iter().any(|&s| s < 0.0) || !(0.0..1.0).contains(&c) {
        return Err(Error::InvalidParameter {
            reason: "cone curve needs sigma >= 0 and 0 <= c < 1".into(),
        });
    }
    let apertures: Vec<f64> = sigma_grid
        .iter()
        .map(|&s| cone_aperture(c, s, 2))
        .collect();
    let a_max = apertures.iter().cloned().fold(0.0, f64::max);
    let chunks = run_chunked(n, seed, |rng, count| {
        let mut counts = vec![vec![0u64; r_cap + 1]; sigma_grid.len()];
        let mut ratios: Vec<f64> = Vec::new();
        for _ in 0..count {
            let ps = sampler.draw(rng);
            ratios.clear();
            ps.for_each_in_box(&[c, -a_max], &[1.0, a_max], |y| {
                if y[0] > c && y[0] < 1.0 {
                    ratios.push(y[1].abs() / y[0]);
                }
            });
            tally(&ratios, &apertures, &mut counts, true, r_cap);
        }
        counts
    });
    let mut counts = vec![vec![0u64; r_cap + 1]; sigma_grid.len()];
    for ch in chunks {
        for (acc, c) in counts.iter_mut().zip(ch) {
            for (a, b) in acc.iter_mut().zip(c) {
                *a += b;
            }
        }
    }
    Ok(CountCurve {
        grid: sigma_grid.to_vec(),
        counts,
        n,
    })
}

/// Point estimate of F(r, sigma) (cylinder law at a single sigma).
pub fn mc_f(
    sampler: &Sampler,
    r: usize,
    sigma: f64,
    c: f64,
    z: f64,
    n: u64,
    seed: u64,
) -> Result<Estimate> {
    let curve = mc_f_curve(sampler, &[sigma], c, z, r + 1, n, seed)?;
    Ok(curve.estimate(0, r))
}

/// Point estimate of E(r, sigma) (cone law at a single sigma).
pub fn mc_e(
    sampler: &Sampler,
    r: usize,
    sigma: f64,
    c: f64,
    n: u64,
    seed: u64,
) -> Result<Estimate> {
    let curve = mc_e_curve(sampler, &[sigma], c, r + 1, n, seed)?;
    Ok(curve.estimate(0, r))
}

/// Per-sample minimum of |x_2| over the configuration's points in the slab
/// 0 < x_1 < 1, censored at `cap`. The survival function of these minima
/// is exactly the empty-cylinder law F(0, xi) for every xi <= cap, which
/// is also the limit law of the macroscopic free path length.
pub fn sample_min_lateral(sampler: &Sampler, cap: f64, n: u64, seed: u64) -> Vec<f64> {
    let chunks = run_chunked(n, seed, |rng, count| {
        let mut out = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let ps = sampler.draw(rng);
            let mut min = cap;
            ps.for_each_in_box(&[0.0, -cap], &[1.0, cap], |y| {
                if y[0] > 0.0 && y[0] < 1.0 {
                    let l = y[1].abs();
                    if l < min {
                        min = l;
                    }
                }
            });
            out.push(min);
        }
        out
    });
    chunks.into_iter().flatten().collect()
}

/// Density estimate of the free-path limit density Phi(xi) =
/// -d/dxi F(0, xi) (d = 2), by a centered histogram of the min-lateral
/// samples: Phi_hat(xi) = #{m in [xi - h, xi + h)} / (2 h n).
pub struct PhiDensity {
    pub xi_grid: Vec<f64>,
    pub values: Vec<f64>,
    pub se: Vec<f64>,
    pub h: f64,
    pub n: u64,
}

pub fn mc_phi_density(
    sampler: &Sampler,
    xi_grid: &[f64],
    h: f64,
    n: u64,
    seed: u64,
) -> Result<PhiDensity> {
    if h <= 0.0 || xi_grid.iter().any(|&x| x <= 0.0) {
        return Err(Error::InvalidParameter {
            reason: "density grid must be positive with h > 0".into(),
        });
    }
    let cap = xi_grid.iter().cloned().fold(0.0, f64::max) + h + 1.0;
    let mut mins = sample_min_lateral(sampler, cap, n, seed);
    mins.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let nf = n as f64;
    let mut values = Vec::with_capacity(xi_grid.len());
    let mut se = Vec::with_capacity(xi_grid.len());
    for &xi in xi_grid {
        let a = mins.partition_point(|&m| m < xi - h);
        let b = mins.partition_point(|&m| m < xi + h);
        let p = (b - a) as f64 / nf;
        values.push(p / (2.0 * h));
        se.push((p * (1.0 - p) / nf).sqrt() / (2.0 * h));
    }
    Ok(PhiDensity {
        xi_grid: xi_grid.to_vec(),
        values,
        se,
        h,
        n,
    })
}

/// Joint limit density evaluation for generic (irrational) shifts:
/// the fraction of anchored random configurations Z^2 M + y,
/// y = xi e_1 + w + z, whose point set misses the open cylinder
/// {0 < x_1 < xi, |x_2 - z| < 1}. (Lateral vectors are scalars for d = 2.)
pub fn mc_phi_joint(xi: f64, w: f64, z: f64, n: u64, seed: u64) -> Result<Estimate> {
    if xi < 0.0 {
        return Err(Error::InvalidParameter {
            reason: "xi must be nonnegative".into(),
        });
    }
    let y = [xi, w + z];
    let hits: u64 = run_chunked(n, seed, |rng, count| {
        let mut k = 0u64;
        for _ in 0..count {
            let s = haar::sample_x_given_y(rng, y);
            let ps = PointSet::from_xy(&s);
            let mut empty = true;
            ps.for_each_in_box(&[0.0, z - 1.0], &[xi, z + 1.0], |p| {
                // the anchor y sits exactly on the face x_1 = xi of the open
                // cylinder; exclude it so roundoff cannot leak it inside
                if (p[0] - y[0]).abs() < 1e-9 && (p[1] - y[1]).abs() < 1e-9 {
                    return;
                }
                if p[0] > 0.0 && p[0] < xi && (p[1] - z).abs() < 1.0 {
                    empty = false;
                }
            });
            if empty {
                k += 1;
            }
        }
        k
    })
    .into_iter()
    .sum();
    Ok(Estimate::proportion(hits, n))
}

/// Collision kernel p(v0, xi, v1) = 1/4 |v1 - v0|^{3-d} Phi(xi, w, z) with
/// w = -(v1 K(v0))_perp / |v1 - v0| and z = (beta(v0) K(v0))_perp, where
/// `phi(xi, w, z)` supplies the joint density (lateral components).
pub fn transition_density(
    v0: &[f64],
    xi: f64,
    v1: &[f64],
    beta_v0: &[f64],
    phi: impl Fn(f64, &[f64], &[f64]) -> f64,
) -> Result<f64> {
    let d = v0.len();
    let diff = geom::dist(v1, v0);
    if diff < 1e-12 {
        return Err(Error::CoincidentVelocities);
    }
    let k = k_of_v(v0);
    let v1k = k.apply_row(v1);
    let bk = k.apply_row(beta_v0);
    let w: Vec<f64> = v1k[1..].iter().map(|&x| -x / diff).collect();
    let z: Vec<f64> = bk[1..].to_vec();
    let pref = 0.25 * diff.powi(3 - d as i32);
    Ok(pref * phi(xi, &w, &z))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sampler(kind: AlphaKind) -> Sampler {
        Sampler::new(kind).unwrap()
    }

    #[test]
    fn f_at_sigma_zero() {
        let s = sampler(AlphaKind::Integral);
        let e = mc_f(&s, 0, 0.0, 0.0, 0.0, 2000, 1).unwrap();
        assert_eq!(e.mean, 1.0);
        let e = mc_f(&s, 1, 0.0, 0.0, 0.0, 2000, 1).unwrap();
        assert_eq!(e.mean, 0.0);
    }

    #[test]
    fn e_at_sigma_zero() {
        let s = sampler(AlphaKind::Irrational);
        let e = mc_e(&s, 0, 0.0, 0.0, 2000, 2).unwrap();
        assert_eq!(e.mean, 1.0);
    }

    #[test]
    fn f_monotone_and_partition() {
        let s = sampler(AlphaKind::Integral);
        let grid: Vec<f64> = (0..10).map(|i| 0.2 * i as f64).collect();
        let curve = mc_f_curve(&s, &grid, 0.0, 0.0, 6, 5000, 3).unwrap();
        // exact partition: counts at each sigma sum to n
        for i in 0..grid.len() {
            let total: u64 = curve.counts[i].iter().sum();
            assert_eq!(total, curve.n);
        }
        // exact sample-wise monotonicity of F(0, sigma) under shared draws
        for i in 1..grid.len() {
            assert!(curve.counts[i][0] <= curve.counts[i - 1][0]);
        }
    }

    #[test]
    fn e_small_sigma_law() {
        // E(0, sigma) = 1 - sigma / zeta(2) for sigma <= 1/2 (integral shift)
        let s = sampler(AlphaKind::Integral);
        let e = mc_e(&s, 0, 0.25, 0.0, 20_000, 4).unwrap();
        let expect = 1.0 - 6.0 / std::f64::consts::PI.powi(2) * 0.25;
        assert!(
            (e.mean - expect).abs() <= 3.0 * e.se,
            "mean {} expect {expect} se {}",
            e.mean,
            e.se
        );
    }

    #[test]
    fn f_lower_bound() {
        // F(0, sigma) >= 1 - v_2 (1 - c) sigma with v_2 = 2
        let s = sampler(AlphaKind::Irrational);
        let grid = [0.1, 0.3, 0.5];
        let curve = mc_f_curve(&s, &grid, 0.0, 0.0, 3, 20_000, 5).unwrap();
        for (i, &sg) in grid.iter().enumerate() {
            let e = curve.estimate(i, 0);
            assert!(e.mean >= 1.0 - 2.0 * sg - 3.0 * e.se, "sigma {sg}");
        }
    }

    #[test]
    fn phi_density_normalizes() {
        let s = sampler(AlphaKind::Irrational);
        // bin centers 0.025, 0.075, ..., so the h = 0.025 windows tile [0, 8);
        // the density has a polynomial tail, so the grid must reach well past
        // the bulk before the missing mass drops under the tolerance
        let grid: Vec<f64> = (0..160).map(|i| 0.025 + 0.05 * i as f64).collect();
        let phi = mc_phi_density(&s, &grid, 0.025, 40_000, 6).unwrap();
        for (v, se) in phi.values.iter().zip(&phi.se) {
            assert!(*v >= -3.0 * se);
        }
        let mass: f64 = phi.values.iter().map(|v| v * 0.05).sum();
        assert!((mass - 1.0).abs() <= 0.02, "mass {mass}");
    }

    #[test]
    fn phi_joint_z_independence() {
        let e1 = mc_phi_joint(0.5, 0.2, 0.0, 30_000, 7).unwrap();
        let e2 = mc_phi_joint(0.5, 0.2, 0.8, 30_000, 8).unwrap();
        let d = (e1.mean - e2.mean).abs();
        assert!(d <= 3.0 * e1.combined_se(&e2), "difference {d}");
        // xi -> 0 forces the estimate to 1
        let e0 = mc_phi_joint(1e-6, 0.2, 0.0, 2000, 9).unwrap();
        assert_eq!(e0.mean, 1.0);
    }

    #[test]
    fn transition_density_prefactor() {
        let unit = |_: f64, _: &[f64], _: &[f64]| 1.0;
        // d = 2: prefactor |v1 - v0| / 4
        let p2 = transition_density(&[1.0, 0.0], 0.7, &[0.0, 1.0], &[0.0, 0.0], unit).unwrap();
        assert!((p2 - 2f64.sqrt() / 4.0).abs() < 1e-12);
        // d = 3: exponent 3 - d = 0, prefactor exactly 1/4
        let p3 =
            transition_density(&[1.0, 0.0, 0.0], 0.7, &[0.0, 1.0, 0.0], &[0.0; 3], unit).unwrap();
        assert!((p3 - 0.25).abs() < 1e-12);
        assert!(transition_density(&[1.0, 0.0], 0.7, &[1.0, 0.0], &[0.0; 2], unit).is_err());
    }

    #[test]
    fn transition_density_rotation_invariance() {
        // with beta = 0 the kernel depends on (v0, v1) only through v0 . v1
        let phi = |xi: f64, w: &[f64], _z: &[f64]| (-xi).exp() * (1.0 - w[0] * w[0]).max(0.0);
        let rot = |a: f64| vec![a.cos(), a.sin()];
        let p1 = transition_density(&rot(0.0), 0.9, &rot(1.1), &[0.0, 0.0], phi).unwrap();
        let p2 = transition_density(&rot(0.7), 0.9, &rot(1.8), &[0.0, 0.0], phi).unwrap();
        assert!((p1 - p2).abs() < 1e-12);
    }
}

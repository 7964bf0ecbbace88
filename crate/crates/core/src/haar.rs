//! Samplers for random covolume-one lattices in the plane and their
//! affine / congruence variants, plus count helpers used to calibrate
//! them against the mean-count identity (expected number of lattice
//! points in a region equals its area).

use crate::error::{Error, Result};
use crate::geom::Mat;
use crate::lattice::{self, AffineLattice, Alpha, UnimodularBasis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const Y0: f64 = 0.866025403784438646763; // sqrt(3)/2

/// Random covolume-one planar lattice with its fundamental-domain
/// coordinates: tau = x + i y in the modular fundamental domain
/// (|x| <= 1/2, |tau| >= 1), theta a uniform rotation.
#[derive(Clone, Debug)]
pub struct HaarLatticeSample {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub basis: UnimodularBasis,
}

fn basis_from(x: f64, y: f64, theta: f64) -> UnimodularBasis {
    let s = y.sqrt();
    let b = Mat::from_rows(&[vec![1.0 / s, 0.0], vec![x / s, s]]).unwrap();
    let (st, ct) = theta.sin_cos();
    let r = Mat::from_rows(&[vec![ct, st], vec![-st, ct]]).unwrap();
    UnimodularBasis::from_mat(b.matmul(&r)).unwrap()
}

/// Draws tau with density proportional to y^{-2} on the modular
/// fundamental domain by rejection: x uniform on [-1/2, 1/2], y = y0/u with
/// u uniform (giving density y0 y^{-2} on [y0, inf)), accept when |tau| >= 1.
/// The acceptance rate is (pi/3) / (2/sqrt(3)) ~ 0.9069.
pub fn sample_x1_counted(rng: &mut ChaCha8Rng, proposals: &mut u64) -> HaarLatticeSample {
    loop {
        *proposals += 1;
        let x: f64 = rng.gen_range(-0.5..0.5);
        let u: f64 = rng.gen_range(0.0..1.0);
        if u == 0.0 {
            continue;
        }
        let y = Y0 / u;
        if x * x + y * y >= 1.0 {
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            return HaarLatticeSample {
                x,
                y,
                theta,
                basis: basis_from(x, y, theta),
            };
        }
    }
}

pub fn sample_x1(rng: &mut ChaCha8Rng) -> HaarLatticeSample {
    let mut c = 0;
    sample_x1_counted(rng, &mut c)
}

/// Random affine lattice: basis from `sample_x1`, shift uniform over the
/// fundamental cell (uniform coefficients in [0,1)^2).
#[derive(Clone, Debug)]
pub struct AffineHaarSample {
    pub lattice: HaarLatticeSample,
    /// Shift in basis coefficients.
    pub xi: [f64; 2],
}

pub fn sample_x(rng: &mut ChaCha8Rng) -> AffineHaarSample {
    let lattice = sample_x1(rng);
    let xi = [rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
    AffineHaarSample { lattice, xi }
}

/// The group SL(2, Z/qZ), fully enumerated (q <= 50).
pub struct Sl2Zq {
    pub q: i64,
    pub elements: Vec<[i64; 4]>,
}

impl Sl2Zq {
    pub fn new(q: i64) -> Result<Sl2Zq> {
        if !(1..=50).contains(&q) {
            return Err(Error::CongruenceLevelTooLarge { q });
        }
        let mut elements = Vec::new();
        for a in 0..q {
            for b in 0..q {
                for c in 0..q {
                    for d in 0..q {
                        if (a * d - b * c).rem_euclid(q) == 1 % q {
                            elements.push([a, b, c, d]);
                        }
                    }
                }
            }
        }
        Ok(Sl2Zq { q, elements })
    }

    /// |SL(2, Z/qZ)| = q^3 prod_{p | q} (1 - p^{-2}).
    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> [i64; 4] {
        self.elements[rng.gen_range(0..self.elements.len())]
    }
}

/// Random congruence-level-q lattice configuration: the point set
/// (Z^2 + alpha gamma) M with M Haar and gamma uniform in SL(2, Z/qZ).
#[derive(Clone, Debug)]
pub struct XqSample {
    pub lattice: HaarLatticeSample,
    pub gamma: [i64; 4],
    pub alpha: Alpha,
}

pub fn sample_xq(rng: &mut ChaCha8Rng, p: &[i64; 2], group: &Sl2Zq) -> Result<XqSample> {
    let q = group.q;
    let lattice = sample_x1(rng);
    let gamma = group.sample(rng);
    // row action: alpha' = alpha gamma mod 1
    let p1 = (p[0] * gamma[0] + p[1] * gamma[2]).rem_euclid(q);
    let p2 = (p[0] * gamma[1] + p[1] * gamma[3]).rem_euclid(q);
    let alpha = Alpha::rational(vec![p1, p2], q)?;
    Ok(XqSample {
        lattice,
        gamma,
        alpha,
    })
}

/// Random lattice configuration containing the anchor point y: the set
/// Z^2 M + y with M Haar.
#[derive(Clone, Debug)]
pub struct XySample {
    pub lattice: HaarLatticeSample,
    pub y: [f64; 2],
}

pub fn sample_x_given_y(rng: &mut ChaCha8Rng, y: [f64; 2]) -> XySample {
    XySample {
        lattice: sample_x1(rng),
        y,
    }
}

/// The affine-lattice view of each sample's point set, suitable for the
/// exact enumeration routines. The boolean is true when the coefficient
/// vector m = 0 must be excluded from counts (the "punctured" point sets).
pub enum PointSet {
    Lattice(AffineLattice, bool),
}

impl PointSet {
    pub fn from_x1(s: &HaarLatticeSample) -> PointSet {
        PointSet::Lattice(
            AffineLattice::new(s.basis.clone(), Alpha::zero(2)).unwrap(),
            true,
        )
    }

    pub fn from_x(s: &AffineHaarSample) -> PointSet {
        PointSet::Lattice(
            AffineLattice::new(
                s.lattice.basis.clone(),
                Alpha::Irrational(vec![s.xi[0], s.xi[1]]),
            )
            .unwrap(),
            false,
        )
    }

    pub fn from_xq(s: &XqSample) -> PointSet {
        // for q = 1 the shift is integral and the zero point is excluded
        let punctured = s.alpha.is_integral();
        PointSet::Lattice(
            AffineLattice::new(s.lattice.basis.clone(), s.alpha.clone()).unwrap(),
            punctured,
        )
    }

    pub fn from_xy(s: &XySample) -> PointSet {
        let coeff = s.lattice.basis.coefficients(&s.y);
        PointSet::Lattice(
            AffineLattice::new(s.lattice.basis.clone(), Alpha::Irrational(coeff)).unwrap(),
            false,
        )
    }

    /// Number of points in the closed ambient box [lo, hi].
    pub fn count_in_box(&self, lo: &[f64], hi: &[f64]) -> u64 {
        let PointSet::Lattice(lat, punctured) = self;
        let mut count = 0u64;
        lattice::for_each_point_in_box(lat, lo, hi, 1 << 32, |_, m| {
            if *punctured && lat.is_zero_point(m) {
                return;
            }
            count += 1;
        })
        .unwrap();
        count
    }

    /// Streams the points in the ambient box [lo, hi].
    pub fn for_each_in_box(&self, lo: &[f64], hi: &[f64], mut f: impl FnMut(&[f64])) {
        let PointSet::Lattice(lat, punctured) = self;
        lattice::for_each_point_in_box(lat, lo, hi, 1 << 32, |y, m| {
            if *punctured && lat.is_zero_point(m) {
                return;
            }
            f(y);
        })
        .unwrap();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{chunk_rng, EmpiricalDistribution};

    #[test]
    fn acceptance_rate() {
        let mut rng = chunk_rng(100, 0);
        let mut proposals = 0u64;
        let n = 1_000_000u64;
        for _ in 0..n {
            sample_x1_counted(&mut rng, &mut proposals);
        }
        let rate = n as f64 / proposals as f64;
        let expect = std::f64::consts::PI / 3.0 / (2.0 / 3f64.sqrt());
        assert!((rate - expect).abs() < 0.001, "rate {rate} vs {expect}");
    }

    #[test]
    fn sample_in_fundamental_domain() {
        let mut rng = chunk_rng(101, 0);
        for _ in 0..10_000 {
            let s = sample_x1(&mut rng);
            assert!(s.x.abs() <= 0.5);
            assert!(s.x * s.x + s.y * s.y >= 1.0);
            assert!((s.basis.mat().det() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn sl2_orders() {
        assert_eq!(Sl2Zq::new(1).unwrap().order(), 1);
        assert_eq!(Sl2Zq::new(2).unwrap().order(), 6);
        assert_eq!(Sl2Zq::new(3).unwrap().order(), 24);
        assert_eq!(Sl2Zq::new(4).unwrap().order(), 48);
        assert_eq!(Sl2Zq::new(6).unwrap().order(), 144);
        assert!(Sl2Zq::new(51).is_err());
    }

    #[test]
    fn sl2_sampling_uniform() {
        let group = Sl2Zq::new(2).unwrap();
        let mut rng = chunk_rng(102, 0);
        let mut counts = std::collections::HashMap::new();
        let n = 100_000;
        for _ in 0..n {
            *counts.entry(group.sample(&mut rng)).or_insert(0u64) += 1;
        }
        assert_eq!(counts.len(), 6);
        // chi-squared with 5 dof; 30 is far beyond any reasonable quantile
        let expect = n as f64 / 6.0;
        let chi2: f64 = counts
            .values()
            .map(|&c| (c as f64 - expect).powi(2) / expect)
            .sum();
        assert!(chi2 < 30.0, "chi2 = {chi2}");
    }

    #[test]
    fn xq_alpha_stays_nonintegral() {
        let group = Sl2Zq::new(2).unwrap();
        let mut rng = chunk_rng(103, 0);
        for _ in 0..1000 {
            let s = sample_xq(&mut rng, &[1, 0], &group).unwrap();
            assert!(!s.alpha.is_integral());
            assert_eq!(s.alpha.denominator(), Some(2));
        }
    }

    #[test]
    fn x1_mean_count_matches_area() {
        let mut rng = chunk_rng(104, 0);
        let lo = [1.3, 0.9];
        let hi = [2.5, 2.1]; // area 1.44, away from the origin
        let n = 20_000u64;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let s = sample_x1(&mut rng);
            let c = PointSet::from_x1(&s).count_in_box(&lo, &hi) as f64;
            sum += c;
            sum_sq += c * c;
        }
        let est = crate::stats::Estimate::from_moments(sum, sum_sq, n);
        assert!(
            (est.mean - 1.44).abs() <= 3.0 * est.se,
            "mean {} se {}",
            est.mean,
            est.se
        );
    }

    #[test]
    fn xy_mean_count_includes_anchor() {
        let mut rng = chunk_rng(105, 0);
        let lo = [-0.6, -0.6];
        let hi = [0.4, 0.4]; // area 1, contains the anchor
        let y = [0.1, -0.2];
        let n = 20_000u64;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..n {
            let s = sample_x_given_y(&mut rng, y);
            let c = PointSet::from_xy(&s).count_in_box(&lo, &hi) as f64;
            sum += c;
            sum_sq += c * c;
        }
        let est = crate::stats::Estimate::from_moments(sum, sum_sq, n);
        // chi_B(y) + area = 2
        assert!(
            (est.mean - 2.0).abs() <= 3.0 * est.se,
            "mean {} se {}",
            est.mean,
            est.se
        );
    }

    #[test]
    fn rotation_invariance_of_counts() {
        // counts in a box and in the same box rotated by a fixed angle are
        // identically distributed because theta is uniform
        let mut rng = chunk_rng(106, 0);
        let n = 100_000u64;
        let ang = 0.7f64;
        let (ca, sa) = (ang.cos(), ang.sin());
        let mut c1 = Vec::with_capacity(n as usize);
        let mut c2 = Vec::with_capacity(n as usize);
        for _ in 0..n {
            let s = sample_x1(&mut rng);
            let ps = PointSet::from_x1(&s);
            c1.push(ps.count_in_box(&[0.8, 0.6], &[1.8, 1.6]) as f64);
            // rotated box: count points whose rotated image falls in the box
            let mut k = 0u64;
            ps.for_each_in_box(&[-3.0, -3.0], &[3.0, 3.0], |y| {
                let rx = ca * y[0] - sa * y[1];
                let ry = sa * y[0] + ca * y[1];
                if (0.8..=1.8).contains(&rx) && (0.6..=1.6).contains(&ry) {
                    k += 1;
                }
            });
            c2.push(k as f64);
        }
        let e1 = EmpiricalDistribution::new(c1);
        let e2 = EmpiricalDistribution::new(c2);
        assert!(e1.ks_two_sample(&e2) <= 0.01);
    }
}

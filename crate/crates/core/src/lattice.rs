//! Affine lattices (Z^d + alpha) M, exact point enumeration in bounded
//! regions, visibility of lattice points, and the density constant kappa_q.

use crate::error::{Error, Result};
use crate::geom::{self, Mat};

pub const DEFAULT_POINT_CAP: u64 = 100_000_000;

/// Tolerance used to flag points that lie essentially on a region boundary.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Basis of a covolume-one lattice; rows are the basis vectors.
#[derive(Clone, Debug)]
pub struct UnimodularBasis {
    mat: Mat,
    inv: Mat,
}

impl UnimodularBasis {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<UnimodularBasis> {
        let mat = Mat::from_rows(rows)?;
        Self::from_mat(mat)
    }

    pub fn from_mat(mat: Mat) -> Result<UnimodularBasis> {
        let det = mat.det();
        if (det - 1.0).abs() > 1e-9 {
            return Err(Error::NotUnimodular { det });
        }
        let inv = mat.inverse()?;
        Ok(UnimodularBasis { mat, inv })
    }

    /// Rescales the rows so the determinant becomes exactly +1.
    /// Rejects bases with determinant within 1e-12 of zero and flips one
    /// row's sign when the determinant is negative.
    pub fn from_rows_rescaled(rows: &[Vec<f64>]) -> Result<UnimodularBasis> {
        let mut mat = Mat::from_rows(rows)?;
        let det = mat.det();
        if det.abs() < 1e-12 {
            return Err(Error::DegenerateBasis { det });
        }
        if det < 0.0 {
            let d = mat.dim;
            for j in 0..d {
                let v = mat.get(0, j);
                mat.set(0, j, -v);
            }
        }
        let s = det.abs().powf(-1.0 / mat.dim as f64);
        for x in mat.data.iter_mut() {
            *x *= s;
        }
        UnimodularBasis::from_mat(mat)
    }

    pub fn identity(dim: usize) -> UnimodularBasis {
        UnimodularBasis {
            mat: Mat::identity(dim),
            inv: Mat::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.dim
    }

    pub fn mat(&self) -> &Mat {
        &self.mat
    }

    pub fn inv(&self) -> &Mat {
        &self.inv
    }

    /// Ambient point of the coefficient vector `m` (plus shift), y = (m + alpha) M.
    pub fn point(&self, coeff: &[f64]) -> Vec<f64> {
        self.mat.apply_row(coeff)
    }

    /// Coefficients of an ambient point, n = y M^{-1}.
    pub fn coefficients(&self, y: &[f64]) -> Vec<f64> {
        self.inv.apply_row(y)
    }

    /// Lagrange-Gauss reduction (d = 2): returns a basis of the same lattice
    /// with |b1| <= |b2| and |b1 . b2| <= |b1|^2 / 2.
    pub fn lagrange_reduced(&self) -> Result<UnimodularBasis> {
        if self.dim() != 2 {
            return Err(Error::UnsupportedDimension {
                dim: self.dim(),
                operation: "Lagrange-Gauss reduction",
            });
        }
        let mut b1 = self.mat.row(0).to_vec();
        let mut b2 = self.mat.row(1).to_vec();
        loop {
            if geom::norm_sq(&b1) > geom::norm_sq(&b2) {
                std::mem::swap(&mut b1, &mut b2);
            }
            let mu = (geom::dot(&b1, &b2) / geom::norm_sq(&b1)).round();
            if mu == 0.0 {
                break;
            }
            for j in 0..2 {
                b2[j] -= mu * b1[j];
            }
        }
        if geom::norm_sq(&b1) > geom::norm_sq(&b2) {
            std::mem::swap(&mut b1, &mut b2);
        }
        // keep orientation positive so the determinant stays +1
        if b1[0] * b2[1] - b1[1] * b2[0] < 0.0 {
            for x in b2.iter_mut() {
                *x = -*x;
            }
        }
        UnimodularBasis::from_rows(&[b1, b2])
    }

    /// Length of the shortest nonzero lattice vector (d = 2 exact via
    /// reduction; higher d searches a small coefficient box around zero).
    pub fn min_distance(&self) -> f64 {
        if self.dim() == 2 {
            if let Ok(red) = self.lagrange_reduced() {
                return geom::norm(red.mat.row(0));
            }
        }
        let d = self.dim();
        let mut best = f64::INFINITY;
        let range = 3i64;
        let mut coeff = vec![0i64; d];
        let total = (2 * range + 1).pow(d as u32);
        for idx in 0..total {
            let mut k = idx;
            let mut all_zero = true;
            for c in coeff.iter_mut() {
                *c = k % (2 * range + 1) - range;
                if *c != 0 {
                    all_zero = false;
                }
                k /= 2 * range + 1;
            }
            if all_zero {
                continue;
            }
            let v: Vec<f64> = coeff.iter().map(|&c| c as f64).collect();
            let n = geom::norm(&self.point(&v));
            if n < best {
                best = n;
            }
        }
        best
    }
}

/// The shift vector of an affine lattice (Z^d + alpha) M.
#[derive(Clone, Debug)]
pub enum Alpha {
    /// alpha = p/q with q minimal (enforced on construction).
    Rational { p: Vec<i64>, q: i64 },
    Irrational(Vec<f64>),
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Alpha {
    pub fn zero(dim: usize) -> Alpha {
        Alpha::Rational {
            p: vec![0; dim],
            q: 1,
        }
    }

    /// Normalizes to minimal denominator: gcd(q, p_1, ..., p_d) = 1.
    pub fn rational(p: Vec<i64>, q: i64) -> Result<Alpha> {
        if q <= 0 {
            return Err(Error::InvalidParameter {
                reason: format!("rational shift needs q > 0, got {q}"),
            });
        }
        let mut g = q;
        for &pi in &p {
            g = gcd(g, pi);
        }
        Ok(Alpha::Rational {
            p: p.iter().map(|&pi| pi / g).collect(),
            q: q / g,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Alpha::Rational { p, .. } => p.len(),
            Alpha::Irrational(v) => v.len(),
        }
    }

    pub fn vector(&self) -> Vec<f64> {
        match self {
            Alpha::Rational { p, q } => p.iter().map(|&pi| pi as f64 / *q as f64).collect(),
            Alpha::Irrational(v) => v.clone(),
        }
    }

    pub fn is_integral(&self) -> bool {
        matches!(self, Alpha::Rational { q: 1, .. })
    }

    pub fn denominator(&self) -> Option<i64> {
        match self {
            Alpha::Rational { q, .. } => Some(*q),
            Alpha::Irrational(_) => None,
        }
    }
}

/// Affine lattice L_alpha = (Z^d + alpha) M.
#[derive(Clone, Debug)]
pub struct AffineLattice {
    pub basis: UnimodularBasis,
    pub alpha: Alpha,
}

impl AffineLattice {
    pub fn new(basis: UnimodularBasis, alpha: Alpha) -> Result<AffineLattice> {
        if alpha.dim() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                got: alpha.dim(),
            });
        }
        Ok(AffineLattice { basis, alpha })
    }

    pub fn integer(dim: usize) -> AffineLattice {
        AffineLattice {
            basis: UnimodularBasis::identity(dim),
            alpha: Alpha::zero(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// Ambient position of the lattice point with integer coefficients `m`.
    pub fn point(&self, m: &[i64]) -> Vec<f64> {
        let a = self.alpha.vector();
        let coeff: Vec<f64> = m.iter().zip(&a).map(|(&mi, ai)| mi as f64 + ai).collect();
        self.basis.point(&coeff)
    }

    /// Whether the coefficient vector `m` maps to the origin (only possible
    /// for rational alpha with q | p).
    pub fn is_zero_point(&self, m: &[i64]) -> bool {
        match &self.alpha {
            Alpha::Rational { p, q } => m
                .iter()
                .zip(p)
                .all(|(&mi, &pi)| mi * *q + pi == 0),
            Alpha::Irrational(_) => false,
        }
    }

    /// Replaces the basis by its Lagrange-Gauss reduction (d = 2); the point
    /// set is unchanged but the shift is re-expressed in the new basis.
    pub fn reduced(&self) -> Result<AffineLattice> {
        if self.dim() != 2 {
            return Ok(self.clone());
        }
        let red = self.basis.lagrange_reduced()?;
        // alpha' = alpha M (M')^{-1}; the change of basis matrix is integral,
        // so a rational shift stays rational with the same denominator.
        let a_ambient = self.basis.point(&self.alpha.vector());
        let a_new = red.coefficients(&a_ambient);
        let alpha = match &self.alpha {
            Alpha::Rational { q, .. } => {
                let p: Vec<i64> = a_new
                    .iter()
                    .map(|&x| (x * *q as f64).round() as i64)
                    .collect();
                Alpha::Rational { p, q: *q }
            }
            Alpha::Irrational(_) => Alpha::Irrational(a_new),
        };
        AffineLattice::new(red, alpha)
    }

    pub fn min_distance(&self) -> f64 {
        self.basis.min_distance()
    }
}

/// Spherical shell B_T(c) = { x : cT <= |x| < T }.
#[derive(Clone, Copy, Debug)]
pub struct Shell {
    pub c: f64,
    pub t: f64,
}

impl Shell {
    pub fn new(c: f64, t: f64) -> Result<Shell> {
        if !(0.0..1.0).contains(&c) || t <= 0.0 {
            return Err(Error::InvalidShell { c, t });
        }
        Ok(Shell { c, t })
    }

    pub fn contains_norm(&self, r: f64) -> bool {
        r >= self.c * self.t && r < self.t
    }
}

/// Bounded counting regions from the limit theorems, plus test rectangles.
#[derive(Clone, Debug)]
pub enum Region {
    /// { c1 < x_1 < c2, |x_perp - offset| < sigma }; `offset` lives in the
    /// hyperplane orthogonal to e_1 (length d-1).
    Cylinder {
        c1: f64,
        c2: f64,
        sigma: f64,
        offset: Vec<f64>,
    },
    /// { c < x_1 < 1, |x_perp| <= x_1 A(c, sigma) } (closed lateral constraint).
    Cone { c: f64, sigma: f64 },
    /// Closed axis-aligned box [lo, hi].
    Rect { lo: Vec<f64>, hi: Vec<f64> },
    /// Open convex polygon in d = 2, vertices in counter-clockwise order.
    ConvexPolygon { vertices: Vec<[f64; 2]> },
}

enum Membership {
    Inside,
    Outside,
    Boundary(bool), // resolved per the region's open/closed convention
}

impl Region {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Region::Cylinder {
                c1,
                c2,
                sigma,
                offset,
            } => {
                if c1 >= c2 || *sigma < 0.0 {
                    return Err(Error::InvalidRegion {
                        reason: format!("cylinder needs c1 < c2 and sigma >= 0, got c1={c1}, c2={c2}, sigma={sigma}"),
                    });
                }
                if offset.len() != dim - 1 {
                    return Err(Error::DimensionMismatch {
                        expected: dim - 1,
                        got: offset.len(),
                    });
                }
            }
            Region::Cone { c, sigma } => {
                if !(0.0..1.0).contains(c) || *sigma < 0.0 {
                    return Err(Error::InvalidRegion {
                        reason: format!("cone needs 0 <= c < 1 and sigma >= 0, got c={c}, sigma={sigma}"),
                    });
                }
            }
            Region::Rect { lo, hi } => {
                if lo.len() != dim || hi.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: lo.len().max(hi.len()),
                    });
                }
                if lo.iter().zip(hi).any(|(l, h)| l > h) {
                    return Err(Error::InvalidRegion {
                        reason: "rectangle has lo > hi".into(),
                    });
                }
            }
            Region::ConvexPolygon { vertices } => {
                if dim != 2 {
                    return Err(Error::UnsupportedDimension {
                        dim,
                        operation: "polygon region",
                    });
                }
                if vertices.len() < 3 {
                    return Err(Error::InvalidRegion {
                        reason: "polygon needs at least 3 vertices".into(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Axis-aligned bounding box (lo, hi) in ambient coordinates.
    pub fn bounding_box(&self, dim: usize) -> (Vec<f64>, Vec<f64>) {
        match self {
            Region::Cylinder {
                c1,
                c2,
                sigma,
                offset,
            } => {
                let mut lo = vec![0.0; dim];
                let mut hi = vec![0.0; dim];
                lo[0] = *c1;
                hi[0] = *c2;
                for k in 1..dim {
                    lo[k] = offset[k - 1] - sigma;
                    hi[k] = offset[k - 1] + sigma;
                }
                (lo, hi)
            }
            Region::Cone { c, sigma } => {
                let a = cone_aperture(*c, *sigma, dim);
                let mut lo = vec![-a; dim];
                let mut hi = vec![a; dim];
                lo[0] = *c;
                hi[0] = 1.0;
                (lo, hi)
            }
            Region::Rect { lo, hi } => (lo.clone(), hi.clone()),
            Region::ConvexPolygon { vertices } => {
                let mut lo = vec![f64::INFINITY; 2];
                let mut hi = vec![f64::NEG_INFINITY; 2];
                for v in vertices {
                    for k in 0..2 {
                        lo[k] = lo[k].min(v[k]);
                        hi[k] = hi[k].max(v[k]);
                    }
                }
                (lo, hi)
            }
        }
    }

    fn membership(&self, x: &[f64]) -> Membership {
        match self {
            Region::Cylinder {
                c1,
                c2,
                sigma,
                offset,
            } => {
                let lat = x[1..]
                    .iter()
                    .zip(offset)
                    .map(|(xi, oi)| (xi - oi) * (xi - oi))
                    .sum::<f64>()
                    .sqrt();
                let margins = [x[0] - c1, c2 - x[0], sigma - lat];
                let near = margins.iter().any(|m| m.abs() <= BOUNDARY_TOL);
                let inside = margins.iter().all(|&m| m > 0.0); // all constraints open
                if near {
                    Membership::Boundary(inside)
                } else if inside {
                    Membership::Inside
                } else {
                    Membership::Outside
                }
            }
            Region::Cone { c, sigma } => {
                let a = cone_aperture(*c, *sigma, x.len());
                let lat = geom::lateral_norm(x);
                let m_lo = x[0] - c;
                let m_hi = 1.0 - x[0];
                let m_lat = x[0] * a - lat;
                let near = m_lo.abs() <= BOUNDARY_TOL
                    || m_hi.abs() <= BOUNDARY_TOL
                    || m_lat.abs() <= BOUNDARY_TOL;
                // x_1 open on both sides, lateral constraint closed
                let inside = m_lo > 0.0 && m_hi > 0.0 && m_lat >= 0.0;
                if near {
                    Membership::Boundary(inside)
                } else if inside {
                    Membership::Inside
                } else {
                    Membership::Outside
                }
            }
            Region::Rect { lo, hi } => {
                let mut near = false;
                let mut inside = true;
                for k in 0..x.len() {
                    let (ml, mh) = (x[k] - lo[k], hi[k] - x[k]);
                    if ml.abs() <= BOUNDARY_TOL || mh.abs() <= BOUNDARY_TOL {
                        near = true;
                    }
                    if ml < 0.0 || mh < 0.0 {
                        inside = false;
                    }
                }
                if near {
                    Membership::Boundary(inside)
                } else if inside {
                    Membership::Inside
                } else {
                    Membership::Outside
                }
            }
            Region::ConvexPolygon { vertices } => {
                let n = vertices.len();
                let mut near = false;
                let mut inside = true;
                for i in 0..n {
                    let a = vertices[i];
                    let b = vertices[(i + 1) % n];
                    // CCW order: interior is to the left of each edge
                    let cross = (b[0] - a[0]) * (x[1] - a[1]) - (b[1] - a[1]) * (x[0] - a[0]);
                    if cross.abs() <= BOUNDARY_TOL {
                        near = true;
                    }
                    if cross <= 0.0 {
                        inside = false;
                    }
                }
                if near {
                    Membership::Boundary(inside)
                } else if inside {
                    Membership::Inside
                } else {
                    Membership::Outside
                }
            }
        }
    }
}

/// Result of exact enumeration: points plus a count of near-boundary events
/// (these are measure-zero for generic inputs; tests assert they stay rare).
#[derive(Clone, Debug)]
pub struct RegionPoints {
    pub points: Vec<Vec<f64>>,
    pub coeffs: Vec<Vec<i64>>,
    pub boundary_events: u64,
}

/// Iterates integer coefficient vectors in the box `[lo_i, hi_i]`, calling
/// `f(m)` for each. Errors if the box holds more than `cap` points.
fn for_each_coeff_in_box(
    lo: &[i64],
    hi: &[i64],
    cap: u64,
    mut f: impl FnMut(&[i64]),
) -> Result<()> {
    let d = lo.len();
    let mut total: u128 = 1;
    for k in 0..d {
        if hi[k] < lo[k] {
            return Ok(());
        }
        total *= (hi[k] - lo[k] + 1) as u128;
    }
    if total > cap as u128 {
        return Err(Error::CapacityExceeded { needed: total, cap });
    }
    let mut m = lo.to_vec();
    loop {
        f(&m);
        let mut k = d;
        loop {
            if k == 0 {
                return Ok(());
            }
            k -= 1;
            if m[k] < hi[k] {
                m[k] += 1;
                for j in k + 1..d {
                    m[j] = lo[j];
                }
                break;
            }
        }
    }
}

/// Integer coefficient bounds for lattice points inside the ambient box.
fn coeff_box(lat: &AffineLattice, lo: &[f64], hi: &[f64]) -> (Vec<i64>, Vec<i64>) {
    let d = lat.dim();
    let inv = lat.basis.inv();
    let a = lat.alpha.vector();
    let mut clo = vec![0i64; d];
    let mut chi = vec![0i64; d];
    for i in 0..d {
        // n_i = sum_j y_j inv[j][i]; extremize over the box
        let mut nmin = 0.0;
        let mut nmax = 0.0;
        for j in 0..d {
            let c = inv.get(j, i);
            if c >= 0.0 {
                nmin += lo[j] * c;
                nmax += hi[j] * c;
            } else {
                nmin += hi[j] * c;
                nmax += lo[j] * c;
            }
        }
        // m_i = n_i - alpha_i, padded one unit against rounding
        clo[i] = (nmin - a[i]).floor() as i64 - 1;
        chi[i] = (nmax - a[i]).ceil() as i64 + 1;
    }
    (clo, chi)
}

/// Exact list of lattice points of `lat` inside `region`.
///
/// Strategy: map the region's bounding box to coefficient coordinates via
/// the inverse basis, iterate the integer box, and test membership in
/// ambient coordinates.
pub fn points_in_region(lat: &AffineLattice, region: &Region, cap: u64) -> Result<RegionPoints> {
    let d = lat.dim();
    region.validate(d)?;
    let (lo, hi) = region.bounding_box(d);
    let (clo, chi) = coeff_box(lat, &lo, &hi);
    let a = lat.alpha.vector();
    let mut points = Vec::new();
    let mut coeffs = Vec::new();
    let mut boundary_events = 0u64;
    let mut shifted = vec![0.0; d];
    let mut y = vec![0.0; d];
    for_each_coeff_in_box(&clo, &chi, cap, |m| {
        for k in 0..d {
            shifted[k] = m[k] as f64 + a[k];
        }
        lat.basis.mat().apply_row_into(&shifted, &mut y);
        match region.membership(&y) {
            Membership::Inside => {
                points.push(y.clone());
                coeffs.push(m.to_vec());
            }
            Membership::Boundary(counted) => {
                boundary_events += 1;
                if counted {
                    points.push(y.clone());
                    coeffs.push(m.to_vec());
                }
            }
            Membership::Outside => {}
        }
    })?;
    Ok(RegionPoints {
        points,
        coeffs,
        boundary_events,
    })
}

/// Streaming variant of shell enumeration: calls `f(point, coeff)` for each
/// point y of L_alpha with cT <= |y| < T, excluding the origin, without
/// building intermediate vectors.
pub fn for_each_shell_point(
    lat: &AffineLattice,
    shell: &Shell,
    cap: u64,
    mut f: impl FnMut(&[f64], &[i64]),
) -> Result<()> {
    let d = lat.dim();
    let lo = vec![-shell.t; d];
    let hi = vec![shell.t; d];
    let (clo, chi) = coeff_box(lat, &lo, &hi);
    let a = lat.alpha.vector();
    let mut shifted = vec![0.0; d];
    let mut y = vec![0.0; d];
    for_each_coeff_in_box(&clo, &chi, cap, |m| {
        for k in 0..d {
            shifted[k] = m[k] as f64 + a[k];
        }
        lat.basis.mat().apply_row_into(&shifted, &mut y);
        let r = geom::norm(&y);
        if shell.contains_norm(r) && !lat.is_zero_point(m) {
            f(&y, m);
        }
    })
}

/// Points y of L_alpha with cT <= |y| < T, excluding the origin.
pub fn enumerate_shell(lat: &AffineLattice, shell: &Shell, cap: u64) -> Result<RegionPoints> {
    let mut points = Vec::new();
    let mut coeffs = Vec::new();
    for_each_shell_point(lat, shell, cap, |y, m| {
        points.push(y.to_vec());
        coeffs.push(m.to_vec());
    })?;
    Ok(RegionPoints {
        points,
        coeffs,
        boundary_events: 0,
    })
}

/// Streaming enumeration of lattice points in an ambient axis-aligned box
/// [lo, hi]; calls `f(point, coeff)` for each (no origin exclusion).
pub fn for_each_point_in_box(
    lat: &AffineLattice,
    lo: &[f64],
    hi: &[f64],
    cap: u64,
    mut f: impl FnMut(&[f64], &[i64]),
) -> Result<()> {
    let d = lat.dim();
    let (clo, chi) = coeff_box(lat, lo, hi);
    let a = lat.alpha.vector();
    let mut shifted = vec![0.0; d];
    let mut y = vec![0.0; d];
    for_each_coeff_in_box(&clo, &chi, cap, |m| {
        for k in 0..d {
            shifted[k] = m[k] as f64 + a[k];
        }
        lat.basis.mat().apply_row_into(&shifted, &mut y);
        if (0..d).all(|k| y[k] >= lo[k] && y[k] <= hi[k]) {
            f(&y, m);
        }
    })
}

/// Visibility of the affine lattice point with coefficients `m` for a
/// rational shift p/q (q minimal): x = m + p/q is visible from the origin
/// iff gcd(q x) <= q.
pub fn is_visible(m: &[i64], p: &[i64], q: i64) -> bool {
    let mut g: i64 = 0;
    for (mi, pi) in m.iter().zip(p) {
        g = gcd(g, mi * q + pi);
    }
    // x = 0 is excluded by convention; treat it as not visible
    g != 0 && g <= q
}

/// Gamma function at half-integer or integer arguments is avoided: the unit
/// ball volume recursion covers everything needed here.
///
/// Aperture A(c, sigma) of the cone of x_1-extent (c, 1) whose solid angle
/// corresponds to disc volume parameter sigma.
pub fn cone_aperture(c: f64, sigma: f64, dim: usize) -> f64 {
    let d = dim as f64;
    let v = geom::unit_ball_volume(dim - 1);
    (sigma * d / ((1.0 - c.powi(dim as i32)) * v)).powf(1.0 / (d - 1.0))
}

// ---- kappa_q: asymptotic density of visible points ------------------------

fn prime_factors(q: i64) -> Vec<i64> {
    let mut q = q;
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= q {
        if q % p == 0 {
            out.push(p);
            while q % p == 0 {
                q /= p;
            }
        }
        p += 1;
    }
    if q > 1 {
        out.push(q);
    }
    out
}

/// Sum over n >= 1 with gcd(n, q) = 1 of n^{-d}, by direct summation with an
/// Euler-Maclaurin tail per residue class. Absolute accuracy well below 1e-14.
fn coprime_power_sum(q: i64, d: u32) -> f64 {
    let n_direct: i64 = 1_000_000;
    let dd = d as f64;
    // Kahan summation: a million terms of plain accumulation would already
    // cost ~1e-10 of absolute accuracy, above the 1e-12 agreement target.
    let mut s = 0.0;
    let mut comp = 0.0;
    for n in 1..=n_direct {
        if gcd(n, q) == 1 {
            let term = (n as f64).powi(-(d as i32)) - comp;
            let t = s + term;
            comp = (t - s) - term;
            s = t;
        }
    }
    // tail: for each coprime residue t mod q, sum_{k >= k0} (qk + t)^{-d}
    let qf = q as f64;
    for t in 1..=q {
        if gcd(t, q) != 1 {
            continue;
        }
        let k0 = (n_direct - t) / q + 1; // smallest k with qk + t > n_direct
        let x0 = qf * k0 as f64 + t as f64;
        let f0 = x0.powf(-dd);
        let integral = x0.powf(1.0 - dd) / (qf * (dd - 1.0));
        let fprime = -dd * qf * x0.powf(-dd - 1.0);
        let f3 = -dd * (dd + 1.0) * (dd + 2.0) * qf.powi(3) * x0.powf(-dd - 3.0);
        s += integral + 0.5 * f0 - fprime / 12.0 + f3 / 720.0;
    }
    s
}

/// Both closed forms of kappa_q (they must agree to 1e-12):
/// - Moebius route: (sum_{(n,q)=1} mu(n) n^{-d}) * sum_{(t,q)=1, t<=q} t^{-d},
///   with the Moebius sum evaluated as zeta(d)^{-1} prod_{p|q} (1 - p^{-d})^{-1};
/// - reciprocal route: the same t-sum divided by sum_{(n,q)=1} n^{-d}
///   computed by direct truncated summation.
pub fn kappa_dual(q: i64, d: u32) -> (f64, f64) {
    assert!(q >= 1 && d >= 2);
    let t_sum: f64 = (1..=q)
        .filter(|&t| gcd(t, q) == 1)
        .map(|t| (t as f64).powi(-(d as i32)))
        .sum();
    let zeta = coprime_power_sum(1, d);
    let mut mobius_sum = 1.0 / zeta;
    for p in prime_factors(q) {
        mobius_sum /= 1.0 - (p as f64).powi(-(d as i32));
    }
    let form_mobius = mobius_sum * t_sum;
    let form_reciprocal = t_sum / coprime_power_sum(q, d);
    (form_mobius, form_reciprocal)
}

/// kappa_q, the asymptotic density of visible points among all points of
/// (Z^d + p/q) relative to the full lattice count.
pub fn kappa(q: i64, d: u32) -> f64 {
    kappa_dual(q, d).0
}

// ---- plain-text basis/shift loading ---------------------------------------

/// Parses a whitespace-separated matrix, one row per line. Blank lines and
/// lines starting with '#' are skipped.
pub fn parse_basis(text: &str) -> Result<UnimodularBasis> {
    let mut rows = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split_whitespace().map(str::parse::<f64>).collect();
        rows.push(row.map_err(|e| Error::ParseError {
            reason: format!("bad matrix entry: {e}"),
        })?);
    }
    if rows.is_empty() {
        return Err(Error::ParseError {
            reason: "no matrix rows found".into(),
        });
    }
    UnimodularBasis::from_rows(&rows)
}

/// Parses a shift vector: either rational components "p1/q p2/q" or plain
/// decimals treated as an irrational shift.
pub fn parse_alpha(text: &str, dim: usize) -> Result<Alpha> {
    let parts: Vec<&str> = text.split_whitespace().collect();
    if parts.len() != dim {
        return Err(Error::ParseError {
            reason: format!("shift has {} components, expected {dim}", parts.len()),
        });
    }
    if parts.iter().all(|s| s.contains('/')) {
        let mut ps = Vec::new();
        let mut q_common: Option<i64> = None;
        for s in &parts {
            let (num, den) = s.split_once('/').unwrap();
            let p: i64 = num.parse().map_err(|e| Error::ParseError {
                reason: format!("bad numerator {num}: {e}"),
            })?;
            let q: i64 = den.parse().map_err(|e| Error::ParseError {
                reason: format!("bad denominator {den}: {e}"),
            })?;
            if let Some(qc) = q_common {
                if qc != q {
                    return Err(Error::ParseError {
                        reason: "all components must share one denominator".into(),
                    });
                }
            }
            q_common = Some(q);
            ps.push(p);
        }
        Alpha::rational(ps, q_common.unwrap())
    } else {
        let v: std::result::Result<Vec<f64>, _> =
            parts.iter().map(|s| s.parse::<f64>()).collect();
        Ok(Alpha::Irrational(v.map_err(|e| Error::ParseError {
            reason: format!("bad shift entry: {e}"),
        })?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn point_set(pts: &[Vec<f64>]) -> BTreeSet<(i64, i64)> {
        pts.iter()
            .map(|p| ((p[0] * 1e6).round() as i64, (p[1] * 1e6).round() as i64))
            .collect()
    }

    #[test]
    fn shell_z2_radius_1_5() {
        let lat = AffineLattice::integer(2);
        let shell = Shell::new(0.0, 1.5).unwrap();
        let got = enumerate_shell(&lat, &shell, DEFAULT_POINT_CAP).unwrap();
        let expect: BTreeSet<(i64, i64)> = [
            (1, 0),
            (-1, 0),
            (0, 1),
            (0, -1),
            (1, 1),
            (1, -1),
            (-1, 1),
            (-1, -1),
        ]
        .iter()
        .map(|&(x, y)| (x * 1_000_000, y * 1_000_000))
        .collect();
        assert_eq!(point_set(&got.points), expect);
    }

    #[test]
    fn shell_z2_annulus() {
        let lat = AffineLattice::integer(2);
        let shell = Shell::new(1.2 / 1.5, 1.5).unwrap();
        let got = enumerate_shell(&lat, &shell, DEFAULT_POINT_CAP).unwrap();
        assert_eq!(got.points.len(), 4);
        for p in &got.points {
            assert!((geom::norm(p) - 2f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn shell_half_shift() {
        let basis = UnimodularBasis::identity(2);
        let alpha = Alpha::rational(vec![1, 1], 2).unwrap();
        let lat = AffineLattice::new(basis, alpha).unwrap();
        let shell = Shell::new(0.0, 1.0).unwrap();
        let got = enumerate_shell(&lat, &shell, DEFAULT_POINT_CAP).unwrap();
        assert_eq!(got.points.len(), 4);
        for p in &got.points {
            assert!((p[0].abs() - 0.5).abs() < 1e-12);
            assert!((p[1].abs() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn shell_additivity() {
        let basis =
            UnimodularBasis::from_rows(&[vec![0.8, 0.25], vec![0.3, 1.34375]]).unwrap();
        let lat = AffineLattice::new(basis, Alpha::Irrational(vec![0.137, 0.291])).unwrap();
        let t = 8.0;
        let c = 0.5;
        let outer = enumerate_shell(&lat, &Shell::new(c, t).unwrap(), DEFAULT_POINT_CAP).unwrap();
        let inner =
            enumerate_shell(&lat, &Shell::new(0.0, c * t).unwrap(), DEFAULT_POINT_CAP).unwrap();
        let full = enumerate_shell(&lat, &Shell::new(0.0, t).unwrap(), DEFAULT_POINT_CAP).unwrap();
        assert_eq!(outer.points.len() + inner.points.len(), full.points.len());
        let mut union = point_set(&outer.points);
        union.extend(point_set(&inner.points));
        assert_eq!(union, point_set(&full.points));
    }

    #[test]
    fn visibility() {
        assert!(!is_visible(&[2, 4], &[0, 0], 1));
        assert!(is_visible(&[3, 5], &[0, 0], 1));
        // x = (3/2, 1): q x = (3, 2), gcd 1 <= 2
        assert!(is_visible(&[1, 1], &[1, 0], 2));
        assert!(!is_visible(&[0, 0], &[0, 0], 1));
    }

    #[test]
    fn kappa_values() {
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        assert!((kappa(1, 2) - 6.0 / pi2).abs() < 1e-9);
        assert!((kappa(2, 2) - 8.0 / pi2).abs() < 1e-9);
        assert!((kappa(1, 3) - 0.8319073725807077).abs() < 1e-9);
    }

    #[test]
    fn kappa_forms_agree() {
        for q in [1, 2, 3, 6, 12, 49] {
            for d in 2..=4 {
                let (a, b) = kappa_dual(q, d);
                assert!((a - b).abs() < 1e-12, "q={q} d={d}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn aperture_values() {
        assert!((cone_aperture(0.0, 0.3, 2) - 0.3).abs() < 1e-14);
        assert!((cone_aperture(0.0, std::f64::consts::PI, 3) - 3f64.sqrt()).abs() < 1e-14);
        assert_eq!(cone_aperture(0.3, 0.0, 4), 0.0);
    }

    #[test]
    fn reduction_identity() {
        let b = UnimodularBasis::identity(2);
        let r = b.lagrange_reduced().unwrap();
        assert!((r.mat().get(0, 0).abs() - 1.0).abs() < 1e-12);
        assert!((r.min_distance() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reduction_shear() {
        let b = UnimodularBasis::from_rows(&[vec![1.0, 0.0], vec![10.0, 1.0]]).unwrap();
        let r = b.lagrange_reduced().unwrap();
        for i in 0..2 {
            let row = r.mat().row(i);
            assert!((geom::norm(row) - 1.0).abs() < 1e-12, "row {i} not unit");
        }
        assert!((r.min_distance() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reduction_preserves_point_set() {
        let b = UnimodularBasis::from_rows_rescaled(&[vec![0.6, 0.8], vec![1.4, 1.8]]).unwrap();
        let lat = AffineLattice::new(b, Alpha::zero(2)).unwrap();
        let red = lat.reduced().unwrap();
        // keep the window off the lattice points themselves: a point exactly
        // on the rectangle boundary is classified by the sign of roundoff
        let region = Region::Rect {
            lo: vec![-4.5, -4.5],
            hi: vec![4.5, 4.5],
        };
        let p1 = points_in_region(&lat, &region, DEFAULT_POINT_CAP).unwrap();
        let p2 = points_in_region(&red, &region, DEFAULT_POINT_CAP).unwrap();
        assert_eq!(point_set(&p1.points), point_set(&p2.points));
        assert!(!p1.points.is_empty());
    }

    #[test]
    fn cylinder_examples() {
        let lat = AffineLattice::integer(2);
        let z = Region::Cylinder {
            c1: 0.0,
            c2: 1.0,
            sigma: 0.5,
            offset: vec![0.0],
        };
        let got = points_in_region(&lat, &z, DEFAULT_POINT_CAP).unwrap();
        assert!(got.points.is_empty());

        let shifted = AffineLattice::new(
            UnimodularBasis::identity(2),
            Alpha::rational(vec![1, 0], 2).unwrap(),
        )
        .unwrap();
        let z = Region::Cylinder {
            c1: 0.0,
            c2: 1.0,
            sigma: 0.6,
            offset: vec![0.0],
        };
        let got = points_in_region(&shifted, &z, DEFAULT_POINT_CAP).unwrap();
        assert_eq!(got.points.len(), 1);
        assert!((got.points[0][0] - 0.5).abs() < 1e-12);
        assert!(got.points[0][1].abs() < 1e-12);
    }

    #[test]
    fn parse_roundtrip() {
        let b = parse_basis("# comment\n1 0\n0.5 1\n").unwrap();
        assert!((b.mat().get(1, 0) - 0.5).abs() < 1e-15);
        let a = parse_alpha("1/2 3/2", 2).unwrap();
        match a {
            Alpha::Rational { p, q } => {
                assert_eq!(p, vec![1, 3]);
                assert_eq!(q, 2);
            }
            _ => panic!("expected rational"),
        }
        let a = parse_alpha("0.25 0.75", 2).unwrap();
        assert!(matches!(a, Alpha::Irrational(_)));
        // 2/4 4/4 normalizes to 1/2 2/2 -> gcd(4,2,4)=2 -> (1,2)/2
        let a = parse_alpha("2/4 4/4", 2).unwrap();
        match a {
            Alpha::Rational { p, q } => {
                assert_eq!(p, vec![1, 2]);
                assert_eq!(q, 2);
            }
            _ => panic!("expected rational"),
        }
    }

    #[test]
    fn alpha_minimality() {
        let a = Alpha::rational(vec![2, 4], 6).unwrap();
        match a {
            Alpha::Rational { p, q } => {
                assert_eq!(p, vec![1, 2]);
                assert_eq!(q, 3);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn nonunimodular_rejected() {
        assert!(UnimodularBasis::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]).is_err());
        assert!(UnimodularBasis::from_rows_rescaled(&[vec![2.0, 0.0], vec![0.0, 1.0]]).is_ok());
    }
}

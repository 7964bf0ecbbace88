//! Small dense matrices and vector helpers for low-dimensional geometry.
//!
//! Everything here follows the row-vector convention: a point `y` with
//! integer coefficients `m` relative to a basis matrix `M` (rows = basis
//! vectors) is `y = m M`, and rotations act on the right, `y' = y K`.

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Norm of the lateral part (all coordinates except the first).
pub fn lateral_norm(a: &[f64]) -> f64 {
    a[1..].iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Square row-major matrix of dynamic (small) dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Mat> {
        let dim = rows.len();
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: r.len(),
                });
            }
        }
        Ok(Mat {
            dim,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn identity(dim: usize) -> Mat {
        let mut m = Mat {
            dim,
            data: vec![0.0; dim * dim],
        };
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|i| self.row(i).to_vec()).collect()
    }

    /// Row vector times matrix: (v M)_j = sum_i v_i M_ij.
    pub fn apply_row(&self, v: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; d];
        for i in 0..d {
            let vi = v[i];
            for j in 0..d {
                out[j] += vi * self.data[i * d + j];
            }
        }
        out
    }

    /// Same as `apply_row` but writing into a caller-provided buffer.
    pub fn apply_row_into(&self, v: &[f64], out: &mut [f64]) {
        let d = self.dim;
        out.fill(0.0);
        for i in 0..d {
            let vi = v[i];
            for j in 0..d {
                out[j] += vi * self.data[i * d + j];
            }
        }
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        let d = self.dim;
        let mut out = Mat {
            dim: d,
            data: vec![0.0; d * d],
        };
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                for j in 0..d {
                    out.data[i * d + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Mat {
        let d = self.dim;
        let mut out = Mat {
            dim: d,
            data: vec![0.0; d * d],
        };
        for i in 0..d {
            for j in 0..d {
                out.data[j * d + i] = self.get(i, j);
            }
        }
        out
    }

    pub fn det(&self) -> f64 {
        match self.dim {
            1 => self.data[0],
            2 => self.data[0] * self.data[3] - self.data[1] * self.data[2],
            _ => {
                // LU with partial pivoting
                let d = self.dim;
                let mut a = self.data.clone();
                let mut det = 1.0;
                for col in 0..d {
                    let mut piv = col;
                    for r in col + 1..d {
                        if a[r * d + col].abs() > a[piv * d + col].abs() {
                            piv = r;
                        }
                    }
                    if a[piv * d + col] == 0.0 {
                        return 0.0;
                    }
                    if piv != col {
                        for j in 0..d {
                            a.swap(col * d + j, piv * d + j);
                        }
                        det = -det;
                    }
                    det *= a[col * d + col];
                    for r in col + 1..d {
                        let f = a[r * d + col] / a[col * d + col];
                        for j in col..d {
                            a[r * d + j] -= f * a[col * d + j];
                        }
                    }
                }
                det
            }
        }
    }

    pub fn inverse(&self) -> Result<Mat> {
        let d = self.dim;
        let det = self.det();
        if det.abs() < 1e-300 {
            return Err(Error::DegenerateBasis { det });
        }
        if d == 2 {
            let (a, b, c, e) = (self.data[0], self.data[1], self.data[2], self.data[3]);
            return Ok(Mat {
                dim: 2,
                data: vec![e / det, -b / det, -c / det, a / det],
            });
        }
        // Gauss-Jordan
        let mut a = self.data.clone();
        let mut inv = Mat::identity(d).data;
        for col in 0..d {
            let mut piv = col;
            for r in col + 1..d {
                if a[r * d + col].abs() > a[piv * d + col].abs() {
                    piv = r;
                }
            }
            if a[piv * d + col].abs() < 1e-300 {
                return Err(Error::DegenerateBasis { det });
            }
            if piv != col {
                for j in 0..d {
                    a.swap(col * d + j, piv * d + j);
                    inv.swap(col * d + j, piv * d + j);
                }
            }
            let p = a[col * d + col];
            for j in 0..d {
                a[col * d + j] /= p;
                inv[col * d + j] /= p;
            }
            for r in 0..d {
                if r != col {
                    let f = a[r * d + col];
                    for j in 0..d {
                        a[r * d + j] -= f * a[col * d + j];
                        inv[r * d + j] -= f * inv[col * d + j];
                    }
                }
            }
        }
        Ok(Mat { dim: d, data: inv })
    }

    /// Frobenius norm; an upper bound for the operator 2-norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Volume of the unit ball in `k` dimensions.
pub fn unit_ball_volume(k: usize) -> f64 {
    // vol(B^0) = 1, vol(B^1) = 2, vol(B^k) = 2 pi / k * vol(B^{k-2})
    match k {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / k as f64 * unit_ball_volume(k - 2),
    }
}

/// Surface measure of the unit sphere S^{d-1} in R^d.
pub fn unit_sphere_measure(d: usize) -> f64 {
    d as f64 * unit_ball_volume(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_roundtrip() {
        let m = Mat::from_rows(&[vec![0.6, 0.8], vec![1.4, 1.9]]).unwrap();
        let inv = m.inverse().unwrap();
        let prod = m.matmul(&inv);
        let id = Mat::identity(2);
        for (a, b) in prod.data.iter().zip(&id.data) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn det_3d() {
        let m = Mat::from_rows(&[
            vec![2.0, 0.0, 1.0],
            vec![0.0, 1.0, 0.0],
            vec![1.0, 0.0, 1.0],
        ])
        .unwrap();
        assert!((m.det() - 1.0).abs() < 1e-12);
        let inv = m.inverse().unwrap();
        let prod = m.matmul(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((prod.get(i, j) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-15);
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-14);
        assert!((unit_ball_volume(3) - 4.0 / 3.0 * std::f64::consts::PI).abs() < 1e-14);
        assert!((unit_sphere_measure(2) - 2.0 * std::f64::consts::PI).abs() < 1e-14);
    }
}

//! Small dense matrices over `Z/p^m` with entries kept canonical in
//! `[0, p^m)`, plus exact rational matrix helpers for validation paths.

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::lattice::QMat;

/// Row-major square matrix with canonical `u64` entries.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mat64 {
    pub n: usize,
    pub a: Vec<u64>,
}

impl Mat64 {
    pub fn identity(n: usize) -> Self {
        let mut a = vec![0u64; n * n];
        for i in 0..n {
            a[i * n + i] = 1;
        }
        Mat64 { n, a }
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Self {
        let n = rows.len();
        let mut a = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n);
            a.extend_from_slice(r);
        }
        Mat64 { n, a }
    }

    pub fn scalar(n: usize, c: u64) -> Self {
        let mut m = Mat64::identity(n);
        for i in 0..n {
            m.a[i * n + i] = c;
        }
        m
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> u64 {
        self.a[i * self.n + j]
    }

    pub fn reduce_mod(&self, modulus: u64) -> Mat64 {
        Mat64 { n: self.n, a: self.a.iter().map(|&x| x % modulus).collect() }
    }

    pub fn to_rational(&self) -> QMat {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| BigRational::from_integer(self.at(i, j).into())).collect())
            .collect()
    }
}

#[inline]
pub fn mat_mul_mod(a: &Mat64, b: &Mat64, modulus: u64) -> Mat64 {
    let n = a.n;
    debug_assert_eq!(b.n, n);
    let mut out = vec![0u64; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a.a[i * n + k];
            if aik == 0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] = (out[i * n + j] + aik * b.a[k * n + j]) % modulus;
            }
        }
    }
    Mat64 { n, a: out }
}

/// Matrix-vector product mod `modulus` (z as a column vector).
#[inline]
pub fn mat_vec_mod(a: &Mat64, z: &[u64], modulus: u64, out: &mut [u64]) {
    let n = a.n;
    for i in 0..n {
        let mut acc = 0u64;
        for k in 0..n {
            acc = (acc + a.a[i * n + k] * z[k]) % modulus;
        }
        out[i] = acc;
    }
}

/// Modular inverse of a unit in `Z/modulus` (extended Euclid).
pub fn unit_inverse(u: u64, modulus: u64) -> Option<u64> {
    let (mut r0, mut r1) = (modulus as i128, (u % modulus) as i128);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 != 1 {
        return None;
    }
    Some(t0.rem_euclid(modulus as i128) as u64)
}

/// Inverse of a matrix invertible mod `p^m` (Gauss-Jordan with unit pivots).
pub fn mat_inverse_mod(a: &Mat64, p: u64, modulus: u64) -> Option<Mat64> {
    let n = a.n;
    let mut m = a.reduce_mod(modulus);
    let mut inv = Mat64::identity(n);
    for col in 0..n {
        // find a row with a unit pivot in this column
        let pivot_row = (col..n).find(|&r| m.at(r, col) % p != 0)?;
        if pivot_row != col {
            for j in 0..n {
                m.a.swap(pivot_row * n + j, col * n + j);
                inv.a.swap(pivot_row * n + j, col * n + j);
            }
        }
        let piv_inv = unit_inverse(m.at(col, col), modulus)?;
        for j in 0..n {
            m.a[col * n + j] = m.a[col * n + j] * piv_inv % modulus;
            inv.a[col * n + j] = inv.a[col * n + j] * piv_inv % modulus;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = m.at(r, col);
            if f == 0 {
                continue;
            }
            for j in 0..n {
                let sub_m = f * m.at(col, j) % modulus;
                m.a[r * n + j] = (m.a[r * n + j] + modulus - sub_m) % modulus;
                let sub_i = f * inv.at(col, j) % modulus;
                inv.a[r * n + j] = (inv.a[r * n + j] + modulus - sub_i) % modulus;
            }
        }
    }
    Some(inv)
}

/// Exact integer determinant of the canonical lift (fraction-free, i128).
pub fn det_i128(a: &Mat64) -> i128 {
    let n = a.n;
    match n {
        0 => 1,
        1 => a.a[0] as i128,
        2 => a.a[0] as i128 * a.a[3] as i128 - a.a[1] as i128 * a.a[2] as i128,
        3 => {
            let m: Vec<i128> = a.a.iter().map(|&x| x as i128).collect();
            m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
                + m[2] * (m[3] * m[7] - m[4] * m[6])
        }
        _ => {
            // Bareiss elimination
            let mut m: Vec<i128> = a.a.iter().map(|&x| x as i128).collect();
            let mut prev = 1i128;
            let mut sign = 1i128;
            for k in 0..n - 1 {
                if m[k * n + k] == 0 {
                    let swap = (k + 1..n).find(|&r| m[r * n + k] != 0);
                    match swap {
                        None => return 0,
                        Some(r) => {
                            for j in 0..n {
                                m.swap(r * n + j, k * n + j);
                            }
                            sign = -sign;
                        }
                    }
                }
                for i in k + 1..n {
                    for j in k + 1..n {
                        m[i * n + j] =
                            (m[i * n + j] * m[k * n + k] - m[i * n + k] * m[k * n + j]) / prev;
                    }
                    m[i * n + k] = 0;
                }
                prev = m[k * n + k];
            }
            sign * m[n * n - 1]
        }
    }
}

// ---------------------------------------------------------------------------
// Exact rational matrix helpers
// ---------------------------------------------------------------------------

pub fn rat_mat_mul(a: &QMat, b: &QMat) -> QMat {
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    let mut out = vec![vec![BigRational::zero(); m]; n];
    for i in 0..n {
        for l in 0..k {
            if a[i][l].is_zero() {
                continue;
            }
            for j in 0..m {
                let t = &a[i][l] * &b[l][j];
                out[i][j] += t;
            }
        }
    }
    out
}

pub fn rat_mat_inv(a: &QMat) -> Option<QMat> {
    let n = a.len();
    let mut m = a.clone();
    let mut inv: QMat = (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigRational::one() } else { BigRational::zero() }).collect())
        .collect();
    for col in 0..n {
        let pr = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(pr, col);
        inv.swap(pr, col);
        let piv = m[col][col].clone();
        for j in 0..n {
            m[col][j] /= &piv;
            inv[col][j] /= &piv;
        }
        for r in 0..n {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let f = m[r][col].clone();
            for j in 0..n {
                let tm = &f * &m[col][j];
                m[r][j] -= tm;
                let ti = &f * &inv[col][j];
                inv[r][j] -= ti;
            }
        }
    }
    Some(inv)
}

pub fn rat_mat_det(a: &QMat) -> BigRational {
    let n = a.len();
    let mut m = a.clone();
    let mut det = BigRational::one();
    for col in 0..n {
        let pr = match (col..n).find(|&r| !m[r][col].is_zero()) {
            None => return BigRational::zero(),
            Some(r) => r,
        };
        if pr != col {
            m.swap(pr, col);
            det = -det;
        }
        let piv = m[col][col].clone();
        det *= &piv;
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let f = &m[r][col] / &piv;
            for j in col..n {
                let t = &f * &m[col][j];
                m[r][j] -= t;
            }
        }
    }
    det
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_mod_prime_power() {
        let m = Mat64::from_rows(&[vec![1, 2], vec![3, 5]]); // det = -1
        let inv = mat_inverse_mod(&m, 2, 8).unwrap();
        let prod = mat_mul_mod(&m, &inv, 8);
        assert_eq!(prod, Mat64::identity(2));
        // 2x2 with even det has no inverse mod 8
        let s = Mat64::from_rows(&[vec![1, 1], vec![1, 3]]); // det = 2
        assert!(mat_inverse_mod(&s, 2, 8).is_none());
    }

    #[test]
    fn determinants() {
        let m = Mat64::from_rows(&[vec![2, 3], vec![1, 4]]);
        assert_eq!(det_i128(&m), 5);
        let m = Mat64::from_rows(&[vec![1, 2, 3], vec![4, 5, 6], vec![7, 8, 10]]);
        assert_eq!(det_i128(&m), -3);
        let m4 = Mat64::from_rows(&[
            vec![1, 0, 0, 2],
            vec![0, 3, 0, 0],
            vec![0, 0, 1, 0],
            vec![1, 0, 0, 1],
        ]);
        assert_eq!(det_i128(&m4), -3);
    }

    #[test]
    fn rational_inverse_round_trip() {
        let m = Mat64::from_rows(&[vec![1, 2], vec![3, 5]]).to_rational();
        let inv = rat_mat_inv(&m).unwrap();
        let prod = rat_mat_mul(&m, &inv);
        assert_eq!(prod[0][0], BigRational::one());
        assert_eq!(prod[0][1], BigRational::zero());
        assert_eq!(rat_mat_det(&m), -BigRational::one());
    }
}

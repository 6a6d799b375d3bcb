//! `H = GL_n x GL_n` acting on `V = gl_n` by `(g1, g2) . X = g1 X g2^{-1}`,
//! `P = det`, `nu(g1, g2) = det(g1) det(g2)^{-1}`, `theta(g1, g2) = (g2, g1)`,
//! `iota(u) = (u Id, Id)`, pairing `<X, Y> = Tr(XY)`.
//!
//! Vectors of `V` are row-major coordinate lists in the basis `{E_ij}`.

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::Zero;

use super::modmat::{
    det_i128, mat_inverse_mod, mat_mul_mod, rat_mat_det, rat_mat_inv, rat_mat_mul, Mat64,
};
use super::{Element, GroupError, GroupScheme, RatElement};
use crate::lattice::{GramMatrix, QMat, QVec};

pub struct GlnGln {
    n: usize,
}

/// Allocation-free `scale * g1 Z g2^{-1} mod modulus` for 2x2 matrices.
/// `modulus` is a power of p and `g2` has unit determinant mod p.  Entries
/// may be canonical at any level; they are reduced here.
#[inline]
pub(crate) fn act_2x2(g1: &[u64], g2: &[u64], z: &[u64], modulus: u64, scale: u64, out: &mut [u64]) {
    let (a0, a1, a2, a3) = (g1[0] % modulus, g1[1] % modulus, g1[2] % modulus, g1[3] % modulus);
    let (b0, b1, b2, b3) = (g2[0] % modulus, g2[1] % modulus, g2[2] % modulus, g2[3] % modulus);
    let (z0, z1, z2, z3) = (z[0] % modulus, z[1] % modulus, z[2] % modulus, z[3] % modulus);
    // inverse of g2 via the adjugate
    let det = (b0 * b3 + modulus * modulus - b1 * b2) % modulus;
    let det_inv = super::modmat::unit_inverse(det, modulus).expect("unit determinant");
    let i00 = b3 * det_inv % modulus;
    let i01 = (modulus - b1) % modulus * det_inv % modulus;
    let i10 = (modulus - b2) % modulus * det_inv % modulus;
    let i11 = b0 * det_inv % modulus;
    // w = g1 * z
    let w00 = (a0 * z0 + a1 * z2) % modulus;
    let w01 = (a0 * z1 + a1 * z3) % modulus;
    let w10 = (a2 * z0 + a3 * z2) % modulus;
    let w11 = (a2 * z1 + a3 * z3) % modulus;
    // out = scale * w * inv(g2)
    let s = scale % modulus;
    out[0] = s * ((w00 * i00 + w01 * i10) % modulus) % modulus;
    out[1] = s * ((w00 * i01 + w01 * i11) % modulus) % modulus;
    out[2] = s * ((w10 * i00 + w11 * i10) % modulus) % modulus;
    out[3] = s * ((w10 * i01 + w11 * i11) % modulus) % modulus;
}

impl GlnGln {
    pub fn new(n: usize) -> Self {
        GlnGln { n }
    }

    pub fn matrix_dim(&self) -> usize {
        self.n
    }

    fn vec_to_mat(&self, z: &[u64]) -> Mat64 {
        Mat64 { n: self.n, a: z.to_vec() }
    }

    fn vec_to_qmat(&self, y: &[BigRational]) -> QMat {
        y.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    fn qmat_to_vec(&self, m: QMat) -> QVec {
        m.into_iter().flatten().collect()
    }

    /// Cache of all of `GL_n(Z/p^m)`.
    fn factor_list(&self, p: u64, m: u32) -> Vec<Mat64> {
        let mut out = Vec::new();
        super::for_each_gln(p, self.n, m, &mut |g| out.push(g.clone()));
        out
    }
}

impl GroupScheme for GlnGln {
    fn name(&self) -> String {
        format!("glnxgln:{}", self.n)
    }

    fn dim_v(&self) -> usize {
        self.n * self.n
    }

    fn h_dim(&self) -> usize {
        2 * self.n * self.n
    }

    fn central_degree(&self) -> i64 {
        self.n as i64
    }

    fn group_order(&self, p: u64, m: u32) -> BigUint {
        let g = super::gln_order(p, self.n, m);
        &g * &g
    }

    fn for_each_element(
        &self,
        p: u64,
        m: u32,
        budget: u64,
        f: &mut dyn FnMut(&Element),
    ) -> Result<(), GroupError> {
        let order = self.group_order(p, m);
        if order > BigUint::from(budget) {
            return Err(GroupError::BudgetExceeded { needed: order, budget });
        }
        let factors = self.factor_list(p, m);
        let mut h = Element {
            mats: vec![Mat64::identity(self.n), Mat64::identity(self.n)],
            units: vec![],
        };
        for g1 in &factors {
            h.mats[0].a.copy_from_slice(&g1.a);
            for g2 in &factors {
                h.mats[1].a.copy_from_slice(&g2.a);
                f(&h);
            }
        }
        Ok(())
    }

    fn generators(&self, p: u64, m: u32) -> Vec<Element> {
        let id = Mat64::identity(self.n);
        let mut out = Vec::new();
        for g in super::gln_generators(p, self.n, m) {
            out.push(Element { mats: vec![g.clone(), id.clone()], units: vec![] });
            out.push(Element { mats: vec![id.clone(), g], units: vec![] });
        }
        out
    }

    fn identity_element(&self, _p: u64, _m: u32) -> Element {
        let id = Mat64::identity(self.n);
        Element { mats: vec![id.clone(), id], units: vec![] }
    }

    fn multiply(&self, p: u64, m: u32, a: &Element, b: &Element) -> Element {
        let modulus = p.pow(m);
        Element {
            mats: vec![
                mat_mul_mod(&a.mats[0], &b.mats[0], modulus),
                mat_mul_mod(&a.mats[1], &b.mats[1], modulus),
            ],
            units: vec![],
        }
    }

    fn act_residue(&self, p: u64, m: u32, h: &Element, z: &[u64], out: &mut [u64]) {
        let modulus = p.pow(m);
        if self.n == 2 {
            act_2x2(&h.mats[0].a, &h.mats[1].a, z, modulus, 1, out);
            return;
        }
        let zm = self.vec_to_mat(z);
        let g2inv = mat_inverse_mod(&h.mats[1], p, modulus).expect("unit determinant");
        let r = mat_mul_mod(&mat_mul_mod(&h.mats[0], &zm, modulus), &g2inv, modulus);
        out.copy_from_slice(&r.a);
    }

    fn act_rat(&self, h: &RatElement, y: &[BigRational]) -> QVec {
        let ym = self.vec_to_qmat(y);
        let g2inv = rat_mat_inv(&h.mats[1]).expect("invertible");
        self.qmat_to_vec(rat_mat_mul(&rat_mat_mul(&h.mats[0], &ym), &g2inv))
    }

    fn inv_rat(&self, h: &RatElement) -> RatElement {
        RatElement {
            mats: vec![
                rat_mat_inv(&h.mats[0]).expect("invertible"),
                rat_mat_inv(&h.mats[1]).expect("invertible"),
            ],
            units: vec![],
        }
    }

    fn theta_rat(&self, h: &RatElement) -> RatElement {
        RatElement { mats: vec![h.mats[1].clone(), h.mats[0].clone()], units: vec![] }
    }

    fn theta(&self, _p: u64, _m: u32, h: &Element) -> Element {
        Element { mats: vec![h.mats[1].clone(), h.mats[0].clone()], units: vec![] }
    }

    fn iota(&self, p: u64, m: u32, u: u64) -> Element {
        Element {
            mats: vec![Mat64::scalar(self.n, u % p.pow(m)), Mat64::identity(self.n)],
            units: vec![],
        }
    }

    fn iota_rat(&self, u: &BigRational) -> RatElement {
        let n = self.n;
        let mut s: QMat = vec![vec![BigRational::zero(); n]; n];
        let mut id = s.clone();
        for i in 0..n {
            s[i][i] = u.clone();
            id[i][i] = BigRational::from_integer(1.into());
        }
        RatElement { mats: vec![s, id], units: vec![] }
    }

    fn invariant_rational(&self, y: &[BigRational]) -> BigRational {
        rat_mat_det(&self.vec_to_qmat(y))
    }

    fn invariant_residue(&self, p: u64, m: u32, z: &[u64]) -> u64 {
        let modulus = p.pow(m) as i128;
        if self.n == 2 {
            let d = z[0] as i128 * z[3] as i128 - z[1] as i128 * z[2] as i128;
            return d.rem_euclid(modulus) as u64;
        }
        det_i128(&self.vec_to_mat(z)).mod_floor(&modulus) as u64
    }

    fn nu_rat(&self, h: &RatElement) -> BigRational {
        rat_mat_det(&h.mats[0]) / rat_mat_det(&h.mats[1])
    }

    fn lie_basis_act(&self, p: u64, z: &[u64]) -> Vec<Vec<u64>> {
        // basis (E_ab, 0) acting as E_ab Z, then (0, E_ab) acting as -Z E_ab
        let n = self.n;
        let mut out = Vec::with_capacity(2 * n * n);
        for a in 0..n {
            for b in 0..n {
                // E_ab Z: row a of the result is row b of Z
                let mut img = vec![0u64; n * n];
                for j in 0..n {
                    img[a * n + j] = z[b * n + j] % p;
                }
                out.push(img);
            }
        }
        for a in 0..n {
            for b in 0..n {
                // -Z E_ab: column b of the result is -(column a of Z)
                let mut img = vec![0u64; n * n];
                for i in 0..n {
                    img[i * n + b] = (p - z[i * n + a] % p) % p;
                }
                out.push(img);
            }
        }
        out
    }

    fn lie_to_kernel(&self, p: u64, m: u32, xi: &[u64]) -> Element {
        let n = self.n;
        let pm = p.pow(m);
        let q = p.pow(m - 1);
        let mut a = Mat64::identity(n);
        let mut b = Mat64::identity(n);
        for i in 0..n * n {
            a.a[i] = (a.a[i] + q * (xi[i] % p)) % pm;
            b.a[i] = (b.a[i] + q * (xi[n * n + i] % p)) % pm;
        }
        Element { mats: vec![a, b], units: vec![] }
    }

    fn gram(&self) -> GramMatrix {
        // Tr(E_ij E_kl) = [j=k][i=l]
        let n = self.n;
        let d = n * n;
        let mut rows = vec![vec![0i64; d]; d];
        for i in 0..n {
            for j in 0..n {
                rows[i * n + j][j * n + i] = 1;
            }
        }
        GramMatrix::from_i64(&rows).expect("symmetric")
    }

    fn open_orbit_base(&self) -> Option<QVec> {
        let n = self.n;
        let mut id = vec![BigRational::zero(); n * n];
        for i in 0..n {
            id[i * n + i] = BigRational::from_integer(1.into());
        }
        Some(id)
    }

    fn tail_profile(&self) -> super::TailProfile {
        if self.n <= 2 {
            super::TailProfile::RankOneGeometric
        } else {
            super::TailProfile::Opaque
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::collect_elements;

    #[test]
    fn gl2_orders() {
        // |GL_2(Z/4)| = 96, cross-check |GL_2(F_2)| * 2^4 = 6 * 16
        assert_eq!(super::super::gln_order(2, 2, 2), 96u32.into());
        let g = GlnGln::new(2);
        assert_eq!(g.group_order(2, 2), (96u32 * 96).into());
        let els = collect_elements(&g, 2, 1, 1 << 20).unwrap();
        assert_eq!(els.len(), 36);
        // kernel order of level 2 -> 1 for a single factor is 2^4
        assert_eq!(
            super::super::gln_order(2, 2, 2) / super::super::gln_order(2, 2, 1),
            16u32.into()
        );
    }

    #[test]
    fn act_matches_on_example() {
        let g = GlnGln::new(2);
        // h = ([[1,1],[0,1]], [[1,0],[1,1]]), z = E_11
        let h = Element {
            mats: vec![
                Mat64::from_rows(&[vec![1, 1], vec![0, 1]]),
                Mat64::from_rows(&[vec![1, 0], vec![1, 1]]),
            ],
            units: vec![],
        };
        let z = [1u64, 0, 0, 0];
        let mut out = [0u64; 4];
        g.act_residue(2, 2, &h, &z, &mut out);
        // g1 E11 g2^{-1} with g2^{-1} = [[1,0],[-1,1]]: [[1,0],[0,0]] -> rows
        // g1 * E11 = [[1,0],[0,0]]; times [[1,0],[3,1]] mod 4 = [[1,0],[0,0]]
        assert_eq!(out, [1, 0, 0, 0]);
    }

    #[test]
    fn lie_basis_has_full_dimension() {
        let g = GlnGln::new(2);
        assert_eq!(g.h_dim(), 8);
        let z = [1u64, 0, 0, 1];
        let images = g.lie_basis_act(2, &z);
        assert_eq!(images.len(), 8);
    }

    #[test]
    fn catalog_identities_hold() {
        crate::group::validate_scheme(&GlnGln::new(2), 2, 50, 11).unwrap();
        crate::group::validate_scheme(&GlnGln::new(2), 3, 25, 13).unwrap();
    }

    #[test]
    fn gram_is_trace_form() {
        let g = GlnGln::new(2);
        let gram = g.gram();
        // <X, Y> = Tr(XY) for X = [[1,2],[3,4]], Y = [[5,6],[7,8]]
        let x = crate::lattice::qvec_from_i64(&[1, 2, 3, 4]);
        let y = crate::lattice::qvec_from_i64(&[5, 6, 7, 8]);
        // Tr(XY) = (1*5+2*7) + (3*6+4*8) = 19 + 50 = 69
        assert_eq!(gram.pair(&x, &y), BigRational::from_integer(69.into()));
        assert_eq!(crate::lattice::pairing_depth(2, &gram).unwrap(), 0);
    }
}

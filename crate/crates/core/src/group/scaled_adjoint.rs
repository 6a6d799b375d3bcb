//! `H = GL_2 x GL_1` acting on `V = gl_2` by `(g, u) . X = u g X g^{-1}`,
//! `P = det`, `nu(g, u) = u^2`, `theta(g, u) = (g, u^{-1})`,
//! `iota(u) = (Id, u)`, pairing `<X, Y> = Tr(XY)`.
//!
//! The adjoint action alone admits no central `G_m`; the extra scaling
//! factor supplies it.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Zero;

use super::modmat::{
    mat_mul_mod, rat_mat_det, rat_mat_inv, rat_mat_mul, Mat64,
};
use super::{Element, GroupError, GroupScheme, RatElement};
use crate::lattice::{GramMatrix, QMat, QVec};

pub struct ScaledAdjointGl2;

const N: usize = 2;


fn vec_to_qmat(y: &[BigRational]) -> QMat {
    y.chunks(N).map(|r| r.to_vec()).collect()
}

impl GroupScheme for ScaledAdjointGl2 {
    fn name(&self) -> String {
        "scaled-adjoint-gl2".to_string()
    }

    fn dim_v(&self) -> usize {
        4
    }

    fn h_dim(&self) -> usize {
        5
    }

    fn central_degree(&self) -> i64 {
        2
    }

    fn group_order(&self, p: u64, m: u32) -> BigUint {
        super::gln_order(p, N, m) * BigUint::from(p.pow(m) / p * (p - 1))
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
        let pm = p.pow(m);
        let mut h = Element { mats: vec![Mat64::identity(N)], units: vec![1] };
        super::for_each_gln(p, N, m, &mut |g| {
            h.mats[0] = g.clone();
            for u in 1..pm {
                if u % p != 0 {
                    h.units[0] = u;
                    f(&h);
                }
            }
        });
        Ok(())
    }

    fn generators(&self, p: u64, m: u32) -> Vec<Element> {
        let mut out = Vec::new();
        for g in super::gln_generators(p, N, m) {
            out.push(Element { mats: vec![g], units: vec![1] });
        }
        for u in super::unit_generators(p, m) {
            out.push(Element { mats: vec![Mat64::identity(N)], units: vec![u] });
        }
        out
    }

    fn identity_element(&self, _p: u64, _m: u32) -> Element {
        Element { mats: vec![Mat64::identity(N)], units: vec![1] }
    }

    fn multiply(&self, p: u64, m: u32, a: &Element, b: &Element) -> Element {
        let modulus = p.pow(m);
        Element {
            mats: vec![mat_mul_mod(&a.mats[0], &b.mats[0], modulus)],
            units: vec![a.units[0] * b.units[0] % modulus],
        }
    }

    fn act_residue(&self, p: u64, m: u32, h: &Element, z: &[u64], out: &mut [u64]) {
        let modulus = p.pow(m);
        super::glngln::act_2x2(&h.mats[0].a, &h.mats[0].a, z, modulus, h.units[0], out);
    }

    fn act_rat(&self, h: &RatElement, y: &[BigRational]) -> QVec {
        let ym = vec_to_qmat(y);
        let ginv = rat_mat_inv(&h.mats[0]).expect("invertible");
        let conj = rat_mat_mul(&rat_mat_mul(&h.mats[0], &ym), &ginv);
        conj.into_iter().flatten().map(|c| &h.units[0] * c).collect()
    }

    fn inv_rat(&self, h: &RatElement) -> RatElement {
        RatElement {
            mats: vec![rat_mat_inv(&h.mats[0]).expect("invertible")],
            units: vec![h.units[0].recip()],
        }
    }

    fn theta_rat(&self, h: &RatElement) -> RatElement {
        RatElement { mats: vec![h.mats[0].clone()], units: vec![h.units[0].recip()] }
    }

    fn theta(&self, p: u64, m: u32, h: &Element) -> Element {
        let pm = p.pow(m);
        Element {
            mats: vec![h.mats[0].clone()],
            units: vec![super::modmat::unit_inverse(h.units[0], pm).expect("unit")],
        }
    }

    fn iota(&self, p: u64, m: u32, u: u64) -> Element {
        Element { mats: vec![Mat64::identity(N)], units: vec![u % p.pow(m)] }
    }

    fn iota_rat(&self, u: &BigRational) -> RatElement {
        let one = BigRational::from_integer(1.into());
        let id: QMat = vec![
            vec![one.clone(), BigRational::zero()],
            vec![BigRational::zero(), one],
        ];
        RatElement { mats: vec![id], units: vec![u.clone()] }
    }

    fn invariant_rational(&self, y: &[BigRational]) -> BigRational {
        rat_mat_det(&vec_to_qmat(y))
    }

    fn invariant_residue(&self, p: u64, m: u32, z: &[u64]) -> u64 {
        let modulus = p.pow(m) as i128;
        let d = z[0] as i128 * z[3] as i128 - z[1] as i128 * z[2] as i128;
        d.rem_euclid(modulus) as u64
    }

    fn nu_rat(&self, h: &RatElement) -> BigRational {
        &h.units[0] * &h.units[0]
    }

    fn lie_basis_act(&self, p: u64, z: &[u64]) -> Vec<Vec<u64>> {
        // basis (E_ab, 0) acting as [E_ab, Z], plus (0, 1) acting as Z
        let mut out = Vec::with_capacity(5);
        for a in 0..N {
            for b in 0..N {
                let mut img = vec![0u64; 4];
                // E_ab Z - Z E_ab
                for j in 0..N {
                    img[a * N + j] = (img[a * N + j] + z[b * N + j]) % p;
                }
                for i in 0..N {
                    img[i * N + b] = (img[i * N + b] + p - z[i * N + a] % p) % p;
                }
                out.push(img);
            }
        }
        out.push(z.iter().map(|&c| c % p).collect());
        out
    }

    fn lie_to_kernel(&self, p: u64, m: u32, xi: &[u64]) -> Element {
        let pm = p.pow(m);
        let q = p.pow(m - 1);
        let mut g = Mat64::identity(N);
        for i in 0..4 {
            g.a[i] = (g.a[i] + q * (xi[i] % p)) % pm;
        }
        let u = (1 + q * (xi[4] % p)) % pm;
        Element { mats: vec![g], units: vec![u] }
    }

    fn gram(&self) -> GramMatrix {
        GramMatrix::from_i64(&[
            vec![1, 0, 0, 0],
            vec![0, 0, 1, 0],
            vec![0, 1, 0, 0],
            vec![0, 0, 0, 1],
        ])
        .expect("symmetric")
    }

    fn open_orbit_base(&self) -> Option<QVec> {
        None // generic stabilizers contain the centralizer torus
    }

    fn tail_profile(&self) -> super::TailProfile {
        super::TailProfile::Opaque
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::collect_elements;

    #[test]
    fn order_at_level_one() {
        // |GL_2(F_2)| * |F_2^x| = 6
        assert_eq!(ScaledAdjointGl2.group_order(2, 1), 6u32.into());
        let els = collect_elements(&ScaledAdjointGl2, 2, 1, 1 << 20).unwrap();
        assert_eq!(els.len(), 6);
        // level 2 -> 1 kernel order is 2^5 (h_dim = 5)
        assert_eq!(
            crate::group::reduction_kernel_order(&ScaledAdjointGl2, 2, 2, 1),
            32u32.into()
        );
    }

    #[test]
    fn catalog_identities_hold() {
        crate::group::validate_scheme(&ScaledAdjointGl2, 2, 50, 17).unwrap();
        crate::group::validate_scheme(&ScaledAdjointGl2, 3, 25, 19).unwrap();
    }
}

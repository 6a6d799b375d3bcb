//! `H = GL_1` acting on `V = F` by multiplication, `P(X) = X`, `nu(t) = t`,
//! `theta(t) = t^{-1}`, `iota = id`, Gram matrix `(1)`.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Zero;

use super::modmat::unit_inverse;
use super::{Element, GroupError, GroupScheme, RatElement};
use crate::lattice::{GramMatrix, QVec};

pub struct Gl1;

impl GroupScheme for Gl1 {
    fn name(&self) -> String {
        "gl1".to_string()
    }

    fn dim_v(&self) -> usize {
        1
    }

    fn h_dim(&self) -> usize {
        1
    }

    fn central_degree(&self) -> i64 {
        1
    }

    fn group_order(&self, p: u64, m: u32) -> BigUint {
        BigUint::from(p.pow(m) / p * (p - 1))
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
        let mut h = Element { mats: vec![], units: vec![1] };
        for u in 1..pm {
            if u % p != 0 {
                h.units[0] = u;
                f(&h);
            }
        }
        Ok(())
    }

    fn generators(&self, p: u64, m: u32) -> Vec<Element> {
        super::unit_generators(p, m)
            .into_iter()
            .map(|u| Element { mats: vec![], units: vec![u] })
            .collect()
    }

    fn identity_element(&self, _p: u64, _m: u32) -> Element {
        Element { mats: vec![], units: vec![1] }
    }

    fn multiply(&self, p: u64, m: u32, a: &Element, b: &Element) -> Element {
        Element { mats: vec![], units: vec![a.units[0] * b.units[0] % p.pow(m)] }
    }

    fn act_residue(&self, p: u64, m: u32, h: &Element, z: &[u64], out: &mut [u64]) {
        out[0] = h.units[0] % p.pow(m) * (z[0] % p.pow(m)) % p.pow(m);
    }

    fn act_rat(&self, h: &RatElement, y: &[BigRational]) -> QVec {
        vec![&h.units[0] * &y[0]]
    }

    fn inv_rat(&self, h: &RatElement) -> RatElement {
        RatElement { mats: vec![], units: vec![h.units[0].recip()] }
    }

    fn theta_rat(&self, h: &RatElement) -> RatElement {
        self.inv_rat(h)
    }

    fn theta(&self, p: u64, m: u32, h: &Element) -> Element {
        let pm = p.pow(m);
        Element { mats: vec![], units: vec![unit_inverse(h.units[0], pm).expect("unit")] }
    }

    fn iota(&self, p: u64, m: u32, u: u64) -> Element {
        Element { mats: vec![], units: vec![u % p.pow(m)] }
    }

    fn iota_rat(&self, u: &BigRational) -> RatElement {
        RatElement { mats: vec![], units: vec![u.clone()] }
    }

    fn invariant_rational(&self, y: &[BigRational]) -> BigRational {
        y[0].clone()
    }

    fn invariant_residue(&self, p: u64, m: u32, z: &[u64]) -> u64 {
        z[0] % p.pow(m)
    }

    fn nu_rat(&self, h: &RatElement) -> BigRational {
        h.units[0].clone()
    }

    fn lie_basis_act(&self, p: u64, z: &[u64]) -> Vec<Vec<u64>> {
        vec![vec![z[0] % p]]
    }

    fn lie_to_kernel(&self, p: u64, m: u32, xi: &[u64]) -> Element {
        let pm = p.pow(m);
        Element { mats: vec![], units: vec![(1 + p.pow(m - 1) * (xi[0] % p)) % pm] }
    }

    fn gram(&self) -> GramMatrix {
        GramMatrix::identity(1)
    }

    fn open_orbit_base(&self) -> Option<QVec> {
        Some(vec![BigRational::from_integer(1.into())])
    }

    fn tail_profile(&self) -> super::TailProfile {
        super::TailProfile::UnitInvariant
    }
}

impl Gl1 {
    pub fn zero_vec() -> QVec {
        vec![BigRational::zero()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{collect_elements, lie_quotient_elements, reduction_kernel_order};

    #[test]
    fn unit_group_sizes() {
        // units of Z/8: 4 elements
        let els = collect_elements(&Gl1, 2, 3, 1 << 20).unwrap();
        assert_eq!(els.len(), 4);
        assert_eq!(Gl1.group_order(2, 3), 4u32.into());
        // kernel of Z/9 -> Z/3 has order 3
        assert_eq!(reduction_kernel_order(&Gl1, 3, 2, 1), 3u32.into());
    }

    #[test]
    fn lie_kernel_bijection_mod_9() {
        // Id + 3h covers exactly {1, 4, 7} mod 9
        let lies = lie_quotient_elements(&Gl1, 3);
        assert_eq!(lies.len(), 3);
        let mut images: Vec<u64> =
            lies.iter().map(|xi| Gl1.lie_to_kernel(3, 2, xi).units[0]).collect();
        images.sort_unstable();
        assert_eq!(images, vec![1, 4, 7]);
    }

    #[test]
    fn catalog_identities_hold() {
        for &p in &[2u64, 3, 5] {
            crate::group::validate_scheme(&Gl1, p, 50, 7).unwrap();
        }
    }
}

//! Exact arithmetic in the cyclotomic fields `Q(zeta_{p^k})`.
//!
//! Values of the additive character `psi(x) = e^{2 pi i {x}_p}` live here.
//! An element is stored by its level `k` and its coordinate vector in the
//! power basis `{zeta^j : 0 <= j < phi(p^k)}` after reduction modulo the
//! p^k-th cyclotomic polynomial
//!
//! ```text
//!     Phi_{p^k}(X) = sum_{j=0}^{p-1} X^{j p^{k-1}},
//! ```
//!
//! equivalently `zeta^{phi} = -(zeta^0 + zeta^{p^{k-1}} + ... + zeta^{(p-2) p^{k-1}})`
//! with `phi = (p-1) p^{k-1}`.  Level 0 is the rationals.  Equality lifts the
//! two operands to a common level and compares coordinates; this is a
//! canonical form because the power basis is a basis.

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::rational::{frac_p_checked, val_p, Valuation};

/// Euler phi of `p^k`.
pub fn phi_pk(p: u64, k: u32) -> u64 {
    if k == 0 {
        1
    } else {
        (p - 1) * p.pow(k - 1)
    }
}

/// Element of `Q(zeta_{p^k})` in canonical power-basis form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cyclotomic {
    p: u64,
    level: u32,
    /// length phi(p^level), coordinates of 1, zeta, zeta^2, ...
    coeffs: Vec<BigRational>,
}

impl Cyclotomic {
    pub fn zero(p: u64) -> Self {
        Cyclotomic { p, level: 0, coeffs: vec![BigRational::zero()] }
    }

    pub fn one(p: u64) -> Self {
        Cyclotomic { p, level: 0, coeffs: vec![BigRational::one()] }
    }

    pub fn from_rational(p: u64, x: BigRational) -> Self {
        Cyclotomic { p, level: 0, coeffs: vec![x] }
    }

    pub fn from_integer(p: u64, n: i64) -> Self {
        Self::from_rational(p, BigRational::from_integer(n.into()))
    }

    /// `zeta_{p^k}^e`, reduced to canonical form.
    pub fn root_of_unity(p: u64, k: u32, e: u64) -> Self {
        let n = p.pow(k);
        let e = e % n;
        let mut raw = vec![BigRational::zero(); e as usize + 1];
        raw[e as usize] = BigRational::one();
        Cyclotomic::from_raw(p, k, raw).reduce_level()
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn is_rational(&self) -> bool {
        self.coeffs[1..].iter().all(|c| c.is_zero())
    }

    /// The rational coordinate when the element is rational.
    pub fn as_rational(&self) -> Option<BigRational> {
        if self.is_rational() {
            Some(self.coeffs[0].clone())
        } else {
            None
        }
    }

    /// Build from an arbitrary coefficient list over powers of zeta_{p^k}
    /// (any length), reducing modulo the cyclotomic polynomial.
    pub fn from_raw(p: u64, level: u32, raw: Vec<BigRational>) -> Self {
        let phi = phi_pk(p, level) as usize;
        let n = p.pow(level) as usize;
        // Fold exponents into 0..n first (zeta^n = 1).
        let mut folded = vec![BigRational::zero(); n.max(1)];
        for (j, c) in raw.into_iter().enumerate() {
            if !c.is_zero() {
                folded[j % n.max(1)] += c;
            }
        }
        // Eliminate exponents phi..n-1 using
        //   zeta^{phi + r} = - sum_{j=0}^{p-2} zeta^{j p^{k-1} + r},  0 <= r < p^{k-1}.
        if level > 0 {
            let step = p.pow(level - 1) as usize;
            for e in (phi..n).rev() {
                if folded[e].is_zero() {
                    continue;
                }
                let c = std::mem::replace(&mut folded[e], BigRational::zero());
                let r = e - phi;
                for j in 0..(p - 1) as usize {
                    folded[j * step + r] -= &c;
                }
            }
        }
        folded.truncate(phi);
        folded.resize(phi, BigRational::zero());
        Cyclotomic { p, level, coeffs: folded }
    }

    /// Re-express at a higher level `k >= self.level` (zeta_{p^a} = zeta_{p^k}^{p^{k-a}}).
    pub fn lift_to_level(&self, k: u32) -> Self {
        assert!(k >= self.level, "can only lift to a higher level");
        if k == self.level {
            return self.clone();
        }
        let stretch = self.p.pow(k - self.level) as usize;
        let mut raw = vec![BigRational::zero(); self.coeffs.len() * stretch];
        for (j, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                raw[j * stretch] = c.clone();
            }
        }
        Cyclotomic::from_raw(self.p, k, raw)
    }

    /// Drop to the smallest level that represents the same element.
    ///
    /// An element lies in the subfield `Q(zeta_{p^{k-1}})` iff, viewing
    /// `Q(zeta_{p^k})` as a free module over it with basis
    /// `1, zeta, ..., zeta^{p^{k-1} ... }`, only the basis component 0 is hit.
    /// Concretely: coordinates at exponents not divisible by `p` must vanish
    /// (for k >= 2 the power basis exponents `j p` with `j < phi(p^{k-1})`
    /// exactly span the subfield copy).
    pub fn reduce_level(&self) -> Self {
        let mut cur = self.clone();
        'outer: while cur.level > 0 {
            let p = cur.p as usize;
            if cur.level == 1 {
                // Q(zeta_p) over Q: rational iff only coordinate 0 present.
                if cur.coeffs[1..].iter().all(|c| c.is_zero()) {
                    cur = Cyclotomic { p: cur.p, level: 0, coeffs: vec![cur.coeffs[0].clone()] };
                    continue 'outer;
                }
                break;
            }
            // level >= 2: subfield basis sits at exponents divisible by p.
            if cur.coeffs.iter().enumerate().any(|(j, c)| j % p != 0 && !c.is_zero()) {
                break;
            }
            let sub_phi = phi_pk(cur.p, cur.level - 1) as usize;
            let mut sub = vec![BigRational::zero(); sub_phi];
            for (j, c) in cur.coeffs.iter().enumerate() {
                if !c.is_zero() {
                    sub[j / p] = c.clone();
                }
            }
            cur = Cyclotomic { p: cur.p, level: cur.level - 1, coeffs: sub };
        }
        cur
    }

    fn common_level(&self, other: &Self) -> (Self, Self) {
        assert_eq!(self.p, other.p, "mixed primes");
        let k = self.level.max(other.level);
        (self.lift_to_level(k), other.lift_to_level(k))
    }

    pub fn add(&self, other: &Self) -> Self {
        let (mut a, b) = self.common_level(other);
        for (x, y) in a.coeffs.iter_mut().zip(b.coeffs.iter()) {
            *x += y;
        }
        a
    }

    pub fn sub(&self, other: &Self) -> Self {
        let (mut a, b) = self.common_level(other);
        for (x, y) in a.coeffs.iter_mut().zip(b.coeffs.iter()) {
            *x -= y;
        }
        a
    }

    pub fn neg(&self) -> Self {
        let mut a = self.clone();
        for c in a.coeffs.iter_mut() {
            *c = -c.clone();
        }
        a
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = self.common_level(other);
        let mut raw = vec![BigRational::zero(); a.coeffs.len() + b.coeffs.len()];
        for (i, x) in a.coeffs.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.coeffs.iter().enumerate() {
                if !y.is_zero() {
                    raw[i + j] += x * y;
                }
            }
        }
        Cyclotomic::from_raw(a.p, a.level, raw)
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        let mut a = self.clone();
        for x in a.coeffs.iter_mut() {
            *x *= c;
        }
        a
    }

    /// Equality after lifting to a common level.
    pub fn eq_elem(&self, other: &Self) -> bool {
        let (a, b) = self.common_level(other);
        a.coeffs == b.coeffs
    }

    /// Complex-embedding approximation (reporting only, never for decisions).
    pub fn approx(&self) -> (f64, f64) {
        use std::f64::consts::PI;
        let n = self.p.pow(self.level) as f64;
        let mut re = 0.0;
        let mut im = 0.0;
        for (j, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let v = rational_to_f64(c);
            let th = 2.0 * PI * (j as f64) / n;
            re += v * th.cos();
            im += v * th.sin();
        }
        (re, im)
    }

    /// Human-readable form: coordinates over the power basis of zeta_{p^level}.
    pub fn describe(&self) -> String {
        let r = self.reduce_level();
        if r.level == 0 {
            return format!("{}", r.coeffs[0]);
        }
        let mut terms = Vec::new();
        for (j, c) in r.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if j == 0 {
                terms.push(format!("{}", c));
            } else if c.is_one() {
                terms.push(format!("z^{}", j));
            } else {
                terms.push(format!("{}*z^{}", c, j));
            }
        }
        if terms.is_empty() {
            "0".to_string()
        } else {
            format!("{} (z = zeta_{})", terms.join(" + "), r.p.pow(r.level))
        }
    }
}

pub(crate) fn rational_to_f64(x: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}

/// The additive character `psi(x) = e^{2 pi i {x}_p}`: trivial exactly on
/// `Z_p`, nontrivial on `p^{-1} Z_p`, valued in roots of unity of p-power
/// order.  Errors when the denominator of `x` has a factor coprime to `p`.
pub fn psi(p: u64, x: &BigRational) -> Result<Cyclotomic, PsiError> {
    let f = frac_p_checked(p, x).ok_or(PsiError::BadDenominator)?;
    if f.is_zero() {
        return Ok(Cyclotomic::one(p));
    }
    // f = r / p^k in lowest terms with 0 < r < p^k.
    let k = match val_p(p, &f) {
        Valuation::Finite(v) => (-v) as u32,
        Valuation::Infinite => unreachable!(),
    };
    let pk = num_bigint::BigInt::from(p).pow(k);
    let r = (f.numer() * &pk / f.denom()) % &pk;
    let e: u64 = u64::try_from(&r).expect("exponent fits u64");
    Ok(Cyclotomic::root_of_unity(p, k, e))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PsiError {
    #[error("argument of psi must have p-power denominator")]
    BadDenominator,
}

/// ψ on an exponent pair `r / p^k` given directly (hot paths precompute the
/// numerator modulo `p^k` as machine words).
pub fn psi_exponent(p: u64, k: u32, r: u64) -> Cyclotomic {
    Cyclotomic::root_of_unity(p, k, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn psi_small_values() {
        // p = 2: psi(1/2) = -1, psi(1/4) = i = zeta_4.
        let m1 = psi(2, &rat(1, 2)).unwrap();
        assert!(m1.eq_elem(&Cyclotomic::from_integer(2, -1)));
        let i = psi(2, &rat(1, 4)).unwrap();
        assert_eq!(i.level(), 2);
        assert!(i.eq_elem(&Cyclotomic::root_of_unity(2, 2, 1)));
        assert!(psi(2, &rat(1, 3)).is_err());
    }

    #[test]
    fn psi_trivial_iff_integral() {
        for n in -12i64..12 {
            for k in 0..4i64 {
                let x = rat(n, 1) * crate::rational::pow_p(3, -k);
                let v = psi(3, &x).unwrap();
                let trivial = val_p(3, &x).finite().map_or(true, |v| v >= 0);
                assert_eq!(v.eq_elem(&Cyclotomic::one(3)), trivial);
            }
        }
    }

    #[test]
    fn full_sum_of_cube_roots_vanishes() {
        let mut s = Cyclotomic::zero(3);
        for a in 0..3 {
            s = s.add(&psi(3, &rat(a, 3)).unwrap());
        }
        assert!(s.is_zero(), "sum of all cube roots of unity");
    }

    #[test]
    fn unit_sums_vanish_for_every_level() {
        // sum over a mod p^k of psi(u a / p^k) = 0 for every k >= 1, u coprime to p.
        for &p in &[2u64, 3, 5] {
            for k in 1..=3u32 {
                for u in 1..p.min(4) {
                    let mut s = Cyclotomic::zero(p);
                    let pk = p.pow(k);
                    for a in 0..pk {
                        s = s.add(&psi(p, &rat((u * a) as i64, pk as i64)).unwrap());
                    }
                    assert!(s.is_zero(), "p={} k={} u={}", p, k, u);
                }
            }
        }
    }

    #[test]
    fn psi_is_a_homomorphism() {
        for &p in &[2u64, 3] {
            let den = (p * p * p) as i64;
            for a in 0..den {
                for b in 0..den {
                    let x = rat(a, den);
                    let y = rat(b, den);
                    let lhs = psi(p, &(x.clone() + y.clone())).unwrap();
                    let rhs = psi(p, &x).unwrap().mul(&psi(p, &y).unwrap());
                    assert!(lhs.eq_elem(&rhs), "p={} a={} b={}", p, a, b);
                }
            }
        }
    }

    #[test]
    fn canonical_form_is_idempotent() {
        let x = Cyclotomic::root_of_unity(2, 3, 2); // zeta_8^2 = i, lives at level 2
        let r = x.reduce_level();
        assert_eq!(r.level(), 2);
        assert!(r.reduce_level().eq_elem(&r));
        assert_eq!(r.reduce_level().level(), r.level());
        // zeta_8^4 = -1 at level 0 after reduction
        let y = Cyclotomic::root_of_unity(2, 3, 4);
        assert_eq!(y.reduce_level().level(), 0);
        assert!(y.eq_elem(&Cyclotomic::from_integer(2, -1)));
    }

    #[test]
    fn arithmetic_commutes_with_lifting() {
        let a = Cyclotomic::root_of_unity(3, 1, 1);
        let b = Cyclotomic::root_of_unity(3, 2, 1);
        let low = a.mul(&b);
        let high = a.lift_to_level(2).mul(&b.lift_to_level(2));
        assert!(low.eq_elem(&high));
        let s1 = a.add(&b);
        let s2 = a.lift_to_level(2).add(&b);
        assert!(s1.eq_elem(&s2));
    }

    #[test]
    fn zeta8_sum_of_units_vanishes() {
        // zeta_8 + zeta_8^3 + zeta_8^5 + zeta_8^7 = 0
        let mut s = Cyclotomic::zero(2);
        for e in [1u64, 3, 5, 7] {
            s = s.add(&Cyclotomic::root_of_unity(2, 3, e));
        }
        assert!(s.is_zero());
    }
}

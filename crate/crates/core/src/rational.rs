//! p-adic valuations and fractional parts of rational numbers.
//!
//! The field is always `Q_p` with `p` a (small) prime, the uniformizer is `p`
//! itself and the residue field is `Z/p`.  All arithmetic is exact; floating
//! point never appears.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// p-adic valuation of a rational number.  `Infinite` is the valuation of 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Valuation {
    Finite(i64),
    Infinite,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Valuation::Infinite)
    }

    /// Minimum of two valuations, with `Infinite` as the neutral element.
    pub fn min_with(self, other: Valuation) -> Valuation {
        match (self, other) {
            (Valuation::Infinite, v) | (v, Valuation::Infinite) => v,
            (Valuation::Finite(a), Valuation::Finite(b)) => Valuation::Finite(a.min(b)),
        }
    }
}

impl std::fmt::Display for Valuation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{}", v),
            Valuation::Infinite => write!(f, "+inf"),
        }
    }
}

/// Exponent of `p` in a nonzero integer.
fn int_val(p: u64, n: &BigInt) -> i64 {
    debug_assert!(!n.is_zero());
    let p = BigInt::from(p);
    let mut m = n.abs();
    let mut v = 0i64;
    loop {
        let (q, r) = m.div_rem(&p);
        if r.is_zero() {
            v += 1;
            m = q;
        } else {
            return v;
        }
    }
}

/// p-adic valuation `val_p(x)`: the exponent of `p` in `x`, `Infinite` for 0.
pub fn val_p(p: u64, x: &BigRational) -> Valuation {
    if x.is_zero() {
        return Valuation::Infinite;
    }
    Valuation::Finite(int_val(p, x.numer()) - int_val(p, x.denom()))
}

/// p-adic norm `|x|_p = p^{-val_p(x)}` as an exact rational; 0 for x = 0.
pub fn norm_p(p: u64, x: &BigRational) -> BigRational {
    match val_p(p, x) {
        Valuation::Infinite => BigRational::zero(),
        Valuation::Finite(v) => pow_p(p, -v),
    }
}

/// `p^k` as an exact rational, `k` of either sign.
pub fn pow_p(p: u64, k: i64) -> BigRational {
    let b = BigInt::from(p);
    if k >= 0 {
        BigRational::from_integer(b.pow(k as u32))
    } else {
        BigRational::new(BigInt::one(), b.pow((-k) as u32))
    }
}

/// p-adic fractional part: the unique `r/p^k` in `[0,1)` with
/// `x - r/p^k` p-integral.  Prime-to-p parts of the denominator are rejected
/// by [`frac_p_checked`]; here they must be absent.
///
/// `frac_p(x) = 0` iff `val_p(x) >= 0`.
pub fn frac_p(p: u64, x: &BigRational) -> BigRational {
    frac_p_checked(p, x).expect("denominator must be a power of p")
}

/// Like [`frac_p`], returning `None` when the denominator of `x` has a
/// nontrivial factor coprime to `p`.
pub fn frac_p_checked(p: u64, x: &BigRational) -> Option<BigRational> {
    if x.is_zero() {
        return Some(BigRational::zero());
    }
    let k = int_val(p, x.denom());
    let pk = BigInt::from(p).pow(k as u32);
    if x.denom() != &pk {
        // denominator has a unit (prime-to-p) part; x is not in Z[1/p] + Z_p
        // unless that part is 1.
        return None;
    }
    // x = n / p^k with gcd(n, p^k) = 1; fractional part is (n mod p^k)/p^k.
    let n = x.numer().mod_floor(&pk);
    Some(BigRational::new(n, pk))
}

//! The catalog of group/representation data: the group `H`, its action on
//! `V`, the relative invariant `P` with character `nu`, the central embedding
//! `iota`, the involution `theta` making the pairing equivariant, and the
//! Lie algebra action used by character-sum factorization.
//!
//! Elements of `H(O/p^m)` are tuples of integer matrices and unit scalars
//! with entries canonical in `[0, p^m)`.  The same integer data acts exactly
//! on rational vectors, which is how the validation identities are checked.

pub mod modmat;
mod gl1;
pub(crate) mod glngln;
mod orbits;
mod scaled_adjoint;

pub use gl1::Gl1;
pub use glngln::GlnGln;
pub use orbits::{
    decompose_shell, orbit_of, stabilizer_consistency, stabilizer_order, ShellOrbit,
};
pub use scaled_adjoint::ScaledAdjointGl2;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Zero};
use std::sync::Arc;

use crate::lattice::{GramMatrix, QMat, QVec};
use crate::rational::val_p;
use modmat::Mat64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GroupError {
    #[error("enumeration of {needed} elements exceeds the budget of {budget}")]
    BudgetExceeded { needed: BigUint, budget: u64 },
    #[error("unknown group '{0}' (expected gl1, glnxgln:<n> or scaled-adjoint-gl2)")]
    UnknownGroup(String),
    #[error("catalog validation failed for {group}: {check}")]
    ValidationFailed { group: String, check: String },
}

/// Element of `H(O/p^m)` (or an exact integral point of `H` via its lift).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Element {
    pub mats: Vec<Mat64>,
    pub units: Vec<u64>,
}

/// Exact rational form of an element, for identity checks over `Q`.
#[derive(Debug, Clone)]
pub struct RatElement {
    pub mats: Vec<QMat>,
    pub units: Vec<BigRational>,
}

impl Element {
    pub fn to_rat(&self) -> RatElement {
        RatElement {
            mats: self.mats.iter().map(|m| m.to_rational()).collect(),
            units: self.units.iter().map(|&u| BigRational::from_integer(u.into())).collect(),
        }
    }
}

/// A catalog entry: everything the integral engine needs to know about one
/// group/representation pair.
pub trait GroupScheme: Send + Sync {
    fn name(&self) -> String;

    /// Dimension `d` of the representation space `V`.
    fn dim_v(&self) -> usize;

    /// Dimension of the Lie algebra over the residue field.
    fn h_dim(&self) -> usize;

    /// Exponent `e` with `nu(iota(u)) = u^e`; nontrivial means `e != 0`.
    fn central_degree(&self) -> i64;

    fn group_order(&self, p: u64, m: u32) -> BigUint;

    /// Stream every element of `H(O/p^m)` exactly once (canonical entries),
    /// in a fixed deterministic order.
    fn for_each_element(
        &self,
        p: u64,
        m: u32,
        budget: u64,
        f: &mut dyn FnMut(&Element),
    ) -> Result<(), GroupError>;

    /// A generating set of `H(O/p^m)` (used for orbit walks).
    fn generators(&self, p: u64, m: u32) -> Vec<Element>;

    fn identity_element(&self, p: u64, m: u32) -> Element;

    fn multiply(&self, p: u64, m: u32, a: &Element, b: &Element) -> Element;

    /// Residue action of `h` on `z in (Z/p^m)^d`.  The element may carry
    /// entries canonical at any level; products are reduced mod `p^m`.
    fn act_residue(&self, p: u64, m: u32, h: &Element, z: &[u64], out: &mut [u64]);

    /// Exact action on rational vectors via the integer lift of `h`.
    fn act_rat(&self, h: &RatElement, y: &[BigRational]) -> QVec;

    fn inv_rat(&self, h: &RatElement) -> RatElement;

    fn theta_rat(&self, h: &RatElement) -> RatElement;

    /// Residue-level involution.
    fn theta(&self, p: u64, m: u32, h: &Element) -> Element;

    /// Central embedding `iota(u)` at residue level.
    fn iota(&self, p: u64, m: u32, u: u64) -> Element;

    fn iota_rat(&self, u: &BigRational) -> RatElement;

    /// The relative invariant `P` on rational vectors.
    fn invariant_rational(&self, y: &[BigRational]) -> BigRational;

    /// `P(z) mod p^m` for a residue vector (value of the canonical lift).
    fn invariant_residue(&self, p: u64, m: u32, z: &[u64]) -> u64;

    /// The character `nu` with `P(h^{-1} X) = nu(h)^{-1} P(X)`.
    fn nu_rat(&self, h: &RatElement) -> BigRational;

    /// Images of a fixed basis of the Lie algebra acting on `z` mod `p`.
    fn lie_basis_act(&self, p: u64, z: &[u64]) -> Vec<Vec<u64>>;

    /// Kernel element `Id + p^{m-1} xi` at level `m` from Lie coordinates.
    fn lie_to_kernel(&self, p: u64, m: u32, xi: &[u64]) -> Element;

    /// Gram matrix of the invariant pairing in the standard basis of `V`.
    fn gram(&self) -> GramMatrix;

    /// A base point of the dense open orbit `{P != 0}` when the action has
    /// one (`None` when no orbit is open, as for the scaled adjoint action).
    fn open_orbit_base(&self) -> Option<QVec>;

    /// How the deep strata of the primitive shell behave (drives exact tail
    /// closures in the integral engine).
    fn tail_profile(&self) -> TailProfile;
}

/// Behavior of shell classes on which the invariant is not yet determined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TailProfile {
    /// `P` is a unit on every primitive vector: there are no tail classes.
    UnitInvariant,
    /// At every level the undetermined classes form a single transitive
    /// class whose lifts have geometrically distributed deeper invariant
    /// valuations (corank-one degeneration, as for `det` on 2x2 matrices):
    /// the tail closes exactly as `t^m (1 - 1/p) / (1 - t/p)` per class.
    RankOneGeometric,
    /// No closure available: undetermined classes fold into the truncation.
    Opaque,
}

/// Convenience: collect the whole group (small levels only).
pub fn collect_elements(
    scheme: &dyn GroupScheme,
    p: u64,
    m: u32,
    budget: u64,
) -> Result<Vec<Element>, GroupError> {
    let mut v = Vec::new();
    scheme.for_each_element(p, m, budget, &mut |h| v.push(h.clone()))?;
    Ok(v)
}

/// Order of `ker(H(O/p^m) -> H(O/p^{m'}))` for `m >= m'`, as an exact ratio
/// of group orders; equals `p^{h_dim (m - m')}` for the smooth catalog.
pub fn reduction_kernel_order(scheme: &dyn GroupScheme, p: u64, m: u32, m_prime: u32) -> BigUint {
    assert!(m >= m_prime && m_prime >= 1);
    scheme.group_order(p, m) / scheme.group_order(p, m_prime)
}

/// All `p^{h_dim}` Lie-algebra coordinate tuples over the residue field.
pub fn lie_quotient_elements(scheme: &dyn GroupScheme, p: u64) -> Vec<Vec<u64>> {
    let dim = scheme.h_dim();
    let mut out = Vec::with_capacity((p as usize).pow(dim as u32));
    let mut cur = vec![0u64; dim];
    loop {
        out.push(cur.clone());
        let mut i = 0;
        loop {
            if i == dim {
                return out;
            }
            cur[i] += 1;
            if cur[i] < p {
                break;
            }
            cur[i] = 0;
            i += 1;
        }
    }
}

/// Look up a catalog entry by CLI name.
pub fn catalog(name: &str) -> Result<Arc<dyn GroupScheme>, GroupError> {
    let lower = name.to_ascii_lowercase();
    if lower == "gl1" {
        return Ok(Arc::new(Gl1));
    }
    if lower == "scaled-adjoint-gl2" {
        return Ok(Arc::new(ScaledAdjointGl2));
    }
    if let Some(rest) = lower.strip_prefix("glnxgln:") {
        if let Ok(n) = rest.parse::<usize>() {
            if n >= 1 {
                return Ok(Arc::new(GlnGln::new(n)));
            }
        }
    }
    Err(GroupError::UnknownGroup(name.to_string()))
}

pub fn catalog_names() -> Vec<&'static str> {
    vec!["gl1", "glnxgln:2", "scaled-adjoint-gl2"]
}

// ---------------------------------------------------------------------------
// Shared helpers for the schemes
// ---------------------------------------------------------------------------

/// `|GL_n(F_p)| = prod_{i<n} (p^n - p^i)`.
pub(crate) fn gln_order_mod_p(p: u64, n: usize) -> BigUint {
    let pn = BigUint::from(p).pow(n as u32);
    let mut acc = BigUint::one();
    for i in 0..n {
        acc *= &pn - BigUint::from(p).pow(i as u32);
    }
    acc
}

/// `|GL_n(Z/p^m)| = |GL_n(F_p)| p^{(m-1) n^2}`.
pub(crate) fn gln_order(p: u64, n: usize, m: u32) -> BigUint {
    gln_order_mod_p(p, n) * BigUint::from(p).pow((m - 1) * (n * n) as u32)
}

/// Minimal-ish generating set of `(Z/p^m)^x`.
pub(crate) fn unit_generators(p: u64, m: u32) -> Vec<u64> {
    let pm = p.pow(m);
    let phi = pm / p * (p - 1);
    if phi == 1 {
        return vec![];
    }
    if p == 2 {
        return if m == 2 { vec![3] } else { vec![pm - 1, 3] };
    }
    // odd p: the unit group is cyclic; find a generator by order testing
    'next: for g in 2..pm {
        if g % p == 0 {
            continue;
        }
        // order must be phi: check g^{phi/q} != 1 for prime divisors q of phi
        for q in prime_divisors(phi) {
            if pow_mod(g, phi / q, pm) == 1 {
                continue 'next;
            }
        }
        return vec![g];
    }
    unreachable!("unit group of Z/p^m is cyclic for odd p")
}

pub(crate) fn prime_divisors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

pub(crate) fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc
}

/// Generators of `GL_n(Z/p^m)`: transvections plus a unit in the (0,0) slot.
pub(crate) fn gln_generators(p: u64, n: usize, m: u32) -> Vec<Mat64> {
    let mut gens = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let mut t = Mat64::identity(n);
                t.a[i * n + j] = 1;
                gens.push(t);
            }
        }
    }
    for u in unit_generators(p, m) {
        let mut d = Mat64::identity(n);
        d.a[0] = u;
        gens.push(d);
    }
    gens
}

/// Stream all matrices in `GL_n(Z/p^m)` (entries canonical); the caller has
/// already checked the budget.
pub(crate) fn for_each_gln(p: u64, n: usize, m: u32, f: &mut dyn FnMut(&Mat64)) {
    let modulus = p.pow(m);
    let len = n * n;
    let mut mat = Mat64 { n, a: vec![0u64; len] };
    loop {
        if det_is_unit(p, &mat) {
            f(&mat);
        }
        let mut i = 0;
        loop {
            if i == len {
                return;
            }
            mat.a[i] += 1;
            if mat.a[i] < modulus {
                break;
            }
            mat.a[i] = 0;
            i += 1;
        }
    }
}

#[inline]
pub(crate) fn det_is_unit(p: u64, m: &Mat64) -> bool {
    let d = modmat::det_i128(m);
    d.rem_euclid(p as i128) != 0
}

// ---------------------------------------------------------------------------
// Catalog validation (randomized identity checks, run at load in tests/CLI)
// ---------------------------------------------------------------------------

/// Randomized sanity checks of the defining identities of a catalog entry:
/// the central scalar property, quasi-invariance of `P` with character `nu`,
/// pairing equivariance through `theta`, `theta` being an involution, and
/// the action being a homomorphism.  Exact rational arithmetic throughout.
pub fn validate_scheme(
    scheme: &dyn GroupScheme,
    p: u64,
    trials: u32,
    seed: u64,
) -> Result<(), GroupError> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let d = scheme.dim_v();
    let m = 2u32;
    let fail = |check: &str| GroupError::ValidationFailed {
        group: scheme.name(),
        check: check.to_string(),
    };

    if scheme.central_degree() == 0 {
        return Err(fail("nu must be nontrivial on the central torus"));
    }

    let gens = scheme.generators(p, m);
    let random_element = |rng: &mut rand_chacha::ChaCha8Rng| {
        // random word in the generators
        let mut h = scheme.identity_element(p, m);
        for _ in 0..6 {
            let g = &gens[rng.gen_range(0..gens.len())];
            h = scheme.multiply(p, m, &h, g);
        }
        h
    };
    let random_vec = |rng: &mut rand_chacha::ChaCha8Rng| -> QVec {
        (0..d).map(|_| BigRational::from_integer(rng.gen_range(-6i64..7).into())).collect()
    };

    let gram = scheme.gram();
    for _ in 0..trials {
        let h = random_element(&mut rng);
        let g2 = random_element(&mut rng);
        let x = random_vec(&mut rng);
        let y = random_vec(&mut rng);
        let hr = h.to_rat();

        // central scalar: iota(u) acts as multiplication by u
        let u = BigRational::from_integer(rng.gen_range(1i64..6).into());
        let iu = scheme.iota_rat(&u);
        let ix = scheme.act_rat(&iu, &x);
        for (a, b) in ix.iter().zip(x.iter()) {
            if a != &(&u * b) {
                return Err(fail("iota(u) must act as the scalar u"));
            }
        }
        // nu on the center: nu(iota(u)) = u^e
        let e = scheme.central_degree();
        let nu_iu = scheme.nu_rat(&iu);
        let ue = rational_int_pow(&u, e);
        if nu_iu != ue {
            return Err(fail("nu(iota(u)) must equal u^e"));
        }

        // quasi-invariance: P(h^{-1} x) = nu(h)^{-1} P(x), exactly
        let hinv = scheme.inv_rat(&hr);
        let px = scheme.invariant_rational(&x);
        let phx = scheme.invariant_rational(&scheme.act_rat(&hinv, &x));
        let nu = scheme.nu_rat(&hr);
        if nu.is_zero() {
            return Err(fail("nu(h) must be invertible"));
        }
        if phx * &nu != px {
            return Err(fail("P(h^{-1} X) = nu(h)^{-1} P(X)"));
        }

        // pairing equivariance: <h X, theta(h) Y> = <X, Y>
        let tx = scheme.act_rat(&hr, &x);
        let ty = scheme.act_rat(&scheme.theta_rat(&hr), &y);
        if gram.pair(&tx, &ty) != gram.pair(&x, &y) {
            return Err(fail("<hX, theta(h)Y> = <X, Y>"));
        }

        // theta is an involution (residue level)
        let tt = scheme.theta(p, m, &scheme.theta(p, m, &h));
        if tt != h {
            return Err(fail("theta must be an involution"));
        }

        // homomorphism of the residue action
        let z: Vec<u64> = (0..d).map(|_| rng.gen_range(0..p.pow(m))).collect();
        let mut lhs = vec![0u64; d];
        scheme.act_residue(p, m, &scheme.multiply(p, m, &h, &g2), &z, &mut lhs);
        let mut tmp = vec![0u64; d];
        let mut rhs = vec![0u64; d];
        scheme.act_residue(p, m, &g2, &z, &mut tmp);
        scheme.act_residue(p, m, &h, &tmp, &mut rhs);
        if lhs != rhs {
            return Err(fail("act(h g, z) = act(h, act(g, z))"));
        }

        // residue vs rational action compatibility
        let zq: QVec = z.iter().map(|&c| BigRational::from_integer(c.into())).collect();
        let rq = scheme.act_rat(&hr, &zq);
        let mut hres = vec![0u64; d];
        scheme.act_residue(p, m, &h, &z, &mut hres);
        let reduced = crate::lattice::ResidueVec::reduce(p, m, &rq)
            .ok_or_else(|| fail("rational action must be p-integral on integral vectors"))?;
        if reduced.coords != hres {
            return Err(fail("residue action must match the rational action mod p^m"));
        }

        // quasi-invariance at the valuation level, for the records
        let py = scheme.invariant_rational(&scheme.act_rat(&hr, &x));
        if !px.is_zero() {
            let vn = val_p(p, &scheme.nu_rat(&hr)).finite().ok_or_else(|| fail("nu"))?;
            let vp = val_p(p, &px).finite().unwrap();
            let vh = val_p(p, &py).finite().ok_or_else(|| fail("P(hX) nonzero"))?;
            if vh != vn + vp {
                return Err(fail("val P(hX) = val nu(h) + val P(X)"));
            }
        }
    }
    Ok(())
}

pub(crate) fn rational_int_pow(x: &BigRational, e: i64) -> BigRational {
    let mut acc = BigRational::one();
    let base = if e >= 0 { x.clone() } else { x.recip() };
    for _ in 0..e.unsigned_abs() {
        acc *= &base;
    }
    acc
}

/// Integer power of a rational (shared helper).
pub fn rational_int_pow_pub(x: &BigRational, e: i64) -> BigRational {
    rational_int_pow(x, e)
}

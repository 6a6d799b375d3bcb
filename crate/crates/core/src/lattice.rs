//! Lattice-side machinery: valuations on `V(F) = F^d`, Gram matrices of the
//! symmetric pairing, dual membership, depth, and p-local Smith normal form.
//!
//! The depth of a nondegenerate integral pairing equals the largest
//! elementary-divisor exponent of its Gram matrix over `Z_(p)`.  This is the
//! largest dual defect over primitive lines: for a primitive vector `b`,
//! `val(G b) - val(b)` is invariant under unimodular changes of basis, and in
//! Smith form the maximum over `b` of that defect is visibly the largest
//! diagonal exponent.  Depth zero is exactly unimodularity of `G`.

use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::rational::{pow_p, val_p, Valuation};

pub type QVec = Vec<BigRational>;
pub type QMat = Vec<Vec<BigRational>>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LatticeError {
    #[error("Gram matrix must be symmetric")]
    NotSymmetric,
    #[error("Gram matrix must be nondegenerate")]
    Degenerate,
    #[error("Gram matrix must have p-integral entries")]
    NotIntegral,
    #[error("subspace must contain a nonzero vector")]
    ZeroSubspace,
    #[error("search bound {0} reached without certifying minimality")]
    SearchBoundHit(i64),
}

/// `min` of the coordinate valuations; `Infinite` only for the zero vector.
pub fn vec_valuation(p: u64, y: &[BigRational]) -> Valuation {
    let mut acc = Valuation::Infinite;
    for c in y {
        acc = acc.min_with(val_p(p, c));
    }
    acc
}

/// `|Y| = p^{-val(Y)}` as an exact rational; 0 for the zero vector.
pub fn vec_norm(p: u64, y: &[BigRational]) -> BigRational {
    match vec_valuation(p, y) {
        Valuation::Infinite => BigRational::zero(),
        Valuation::Finite(v) => pow_p(p, -v),
    }
}

pub fn qvec_from_i64(v: &[i64]) -> QVec {
    v.iter().map(|&x| BigRational::from_integer(x.into())).collect()
}

pub fn qvec_scale(y: &[BigRational], c: &BigRational) -> QVec {
    y.iter().map(|x| x * c).collect()
}

pub fn qvec_is_zero(y: &[BigRational]) -> bool {
    y.iter().all(|c| c.is_zero())
}

/// Residue vector in `(Z/p^m)^d`, coordinates canonically in `[0, p^m)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ResidueVec {
    pub level: u32,
    pub coords: Vec<u64>,
}

impl ResidueVec {
    /// Reduce a p-integral rational vector modulo `p^m`.
    pub fn reduce(p: u64, m: u32, y: &[BigRational]) -> Option<ResidueVec> {
        let pm = num_bigint::BigInt::from(p).pow(m);
        let mut coords = Vec::with_capacity(y.len());
        for c in y {
            if !c.denom().is_one() {
                // p-integral non-integer denominators are units mod p^m
                use num_integer::Integer;
                let d = c.denom().mod_floor(&pm);
                let inv = mod_inverse(&d, &pm)?;
                let n = c.numer().mod_floor(&pm);
                let r = (n * inv).mod_floor(&pm);
                coords.push(u64::try_from(&r).ok()?);
            } else {
                use num_integer::Integer;
                let r = c.numer().mod_floor(&pm);
                coords.push(u64::try_from(&r).ok()?);
            }
        }
        Some(ResidueVec { level: m, coords })
    }

    pub fn lift(&self) -> QVec {
        self.coords.iter().map(|&c| BigRational::from_integer(c.into())).collect()
    }

    pub fn is_primitive(&self, p: u64) -> bool {
        self.coords.iter().any(|&c| c % p != 0)
    }
}

fn mod_inverse(a: &num_bigint::BigInt, m: &num_bigint::BigInt) -> Option<num_bigint::BigInt> {
    use num_integer::Integer;
    let e = a.extended_gcd(m);
    if e.gcd.is_one() {
        Some(e.x.mod_floor(m))
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// Gram matrices
// ---------------------------------------------------------------------------

/// Symmetric Gram matrix `G_{ij} = <e_i, e_j>` of the pairing on `V`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GramMatrix {
    entries: QMat,
}

impl GramMatrix {
    pub fn new(entries: QMat) -> Result<Self, LatticeError> {
        let n = entries.len();
        for row in &entries {
            if row.len() != n {
                return Err(LatticeError::NotSymmetric);
            }
        }
        for i in 0..n {
            for j in 0..i {
                if entries[i][j] != entries[j][i] {
                    return Err(LatticeError::NotSymmetric);
                }
            }
        }
        Ok(GramMatrix { entries })
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![vec![BigRational::zero(); n]; n];
        for (i, row) in entries.iter_mut().enumerate() {
            row[i] = BigRational::one();
        }
        GramMatrix { entries }
    }

    pub fn from_i64(rows: &[Vec<i64>]) -> Result<Self, LatticeError> {
        GramMatrix::new(
            rows.iter()
                .map(|r| r.iter().map(|&x| BigRational::from_integer(x.into())).collect())
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &QMat {
        &self.entries
    }

    pub fn apply(&self, y: &[BigRational]) -> QVec {
        self.entries
            .iter()
            .map(|row| row.iter().zip(y).map(|(a, b)| a * b).sum::<BigRational>())
            .collect()
    }

    /// `<x, y> = x^T G y`.
    pub fn pair(&self, x: &[BigRational], y: &[BigRational]) -> BigRational {
        let gy = self.apply(y);
        x.iter().zip(gy.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn is_integral(&self, p: u64) -> bool {
        self.entries.iter().flatten().all(|c| match val_p(p, c) {
            Valuation::Infinite => true,
            Valuation::Finite(v) => v >= 0,
        })
    }
}

/// `true` iff `<Z, Y>` is p-integral for every `Z` in the standard lattice,
/// i.e. every entry of `G Y` has nonnegative valuation.
pub fn dual_membership(p: u64, y: &[BigRational], g: &GramMatrix) -> bool {
    g.apply(y).iter().all(|c| match val_p(p, c) {
        Valuation::Infinite => true,
        Valuation::Finite(v) => v >= 0,
    })
}

// ---------------------------------------------------------------------------
// p-local Smith normal form
// ---------------------------------------------------------------------------

/// Smith normal form of a rational matrix over the local ring `Z_(p)`.
///
/// `a = left * diag(p^{exponents}) * right` with `left`, `right` unimodular
/// over `Z_(p)`.  Pivots are chosen with minimal valuation, ties broken in
/// row-major order, so the output is deterministic.  Rank deficiency shows up
/// as missing exponents (`exponents.len() == rank`).
#[derive(Debug, Clone)]
pub struct PLocalSnf {
    pub exponents: Vec<i64>,
    pub rank: usize,
    pub left: QMat,
    pub left_inv: QMat,
    pub right: QMat,
    pub right_inv: QMat,
}

fn identity_mat(n: usize) -> QMat {
    let mut m = vec![vec![BigRational::zero(); n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = BigRational::one();
    }
    m
}

pub fn snf_p(p: u64, a: &QMat) -> PLocalSnf {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut m = a.clone();
    let mut left = identity_mat(rows); // accumulates inverse row ops: A = left * M
    let mut left_inv = identity_mat(rows);
    let mut right = identity_mat(cols); // A = left * M * right
    let mut right_inv = identity_mat(cols);

    let steps = rows.min(cols);
    let mut exponents = Vec::new();
    for k in 0..steps {
        // pivot: minimal valuation in the trailing submatrix, row-major ties
        let mut best: Option<(i64, usize, usize)> = None;
        for i in k..rows {
            for j in k..cols {
                if let Valuation::Finite(v) = val_p(p, &m[i][j]) {
                    if best.map_or(true, |(bv, _, _)| v < bv) {
                        best = Some((v, i, j));
                    }
                }
            }
        }
        let Some((piv_val, pi, pj)) = best else {
            break; // all zero: rank reached
        };
        if pi != k {
            m.swap(pi, k);
            // row swap S: M <- S M; left <- left S (S self-inverse)
            for r in 0..rows {
                let t = left[r][pi].clone();
                left[r][pi] = left[r][k].clone();
                left[r][k] = t;
            }
            left_inv.swap(pi, k);
        }
        if pj != k {
            for row in m.iter_mut() {
                row.swap(pj, k);
            }
            right.swap(pj, k);
            for row in right_inv.iter_mut() {
                row.swap(pj, k);
            }
        }
        let pivot = m[k][k].clone();
        // clear column k below/above
        for i in 0..rows {
            if i == k || m[i][k].is_zero() {
                continue;
            }
            let f = &m[i][k] / &pivot; // p-integral by pivot minimality
            for j in k..cols {
                let t = &f * &m[k][j];
                m[i][j] -= t;
            }
            // M <- E M with E = I - f e_i e_k^T; left <- left E^{-1}
            for r in 0..rows {
                let t = &f * &left[r][i];
                left[r][k] += t;
            }
            for c in 0..rows {
                let t = &f * &left_inv[k][c];
                left_inv[i][c] -= t;
            }
        }
        // clear row k
        for j in 0..cols {
            if j == k || m[k][j].is_zero() {
                continue;
            }
            let f = &m[k][j] / &pivot;
            for i in k..rows {
                let t = &f * &m[i][k];
                m[i][j] -= t;
            }
            // M <- M E with E = I - f e_k e_j^T; right <- E^{-1} right
            for c in 0..cols {
                let t = &f * &right[j][c];
                right[k][c] += t;
            }
            for r in 0..rows {
                let t = &f * &right_inv[r][k];
                right_inv[r][j] -= t;
            }
        }
        // normalize the diagonal entry to a pure power of p; the unit factor
        // moves into the left transform, which stays unimodular over Z_(p)
        let unit = &m[k][k] / pow_p(p, piv_val);
        m[k][k] = pow_p(p, piv_val);
        for r in 0..rows {
            left[r][k] *= &unit;
        }
        for c in 0..rows {
            left_inv[k][c] /= &unit;
        }
        exponents.push(piv_val);
    }
    let rank = exponents.len();
    PLocalSnf { exponents, rank, left, left_inv, right, right_inv }
}

// ---------------------------------------------------------------------------
// Depth
// ---------------------------------------------------------------------------

/// Depth of a subspace: `min { val(Y) : Y in span(basis), G Y integral }`.
///
/// Computed exactly from the Smith form of `G B`: writing `G B = U D V`,
/// the admissible coefficient vectors form the box `V^{-1} diag(p^{-f_i}) O^r`
/// and the minimum valuation is attained on a scaled column of `B V^{-1}`.
/// A brute-force scan down to `-search_level` double-checks small cases.
pub fn subspace_depth(
    p: u64,
    basis: &[QVec],
    g: &GramMatrix,
    search_level: u32,
) -> Result<i64, LatticeError> {
    if basis.is_empty() || basis.iter().all(|b| qvec_is_zero(b)) {
        return Err(LatticeError::ZeroSubspace);
    }
    let d = g.dim();
    let r = basis.len();
    // G B as a d x r matrix
    let mut gb = vec![vec![BigRational::zero(); r]; d];
    for (j, b) in basis.iter().enumerate() {
        let col = g.apply(b);
        for i in 0..d {
            gb[i][j] = col[i].clone();
        }
    }
    let snf = snf_p(p, &gb);
    if snf.rank < r {
        // G nondegenerate and basis independent should give full column rank
        return Err(LatticeError::Degenerate);
    }
    let mut best: Option<i64> = None;
    for (i, f) in snf.exponents.iter().enumerate() {
        // column i of B * right_inv, scaled by p^{-f}
        let mut col = vec![BigRational::zero(); basis[0].len()];
        for j in 0..r {
            let c = &snf.right_inv[j][i];
            if c.is_zero() {
                continue;
            }
            for (k, item) in col.iter_mut().enumerate() {
                *item += c * &basis[j][k];
            }
        }
        if let Valuation::Finite(v) = vec_valuation(p, &col) {
            let cand = v - f;
            best = Some(best.map_or(cand, |b: i64| b.min(cand)));
        }
    }
    let result = best.ok_or(LatticeError::ZeroSubspace)?;
    if result < -(search_level as i64) {
        return Err(LatticeError::SearchBoundHit(result));
    }
    Ok(result)
}

/// Depth of a line through `b`: `val(b) - val(G b)` (a special case of
/// [`subspace_depth`], in closed form).
pub fn line_depth(p: u64, b: &[BigRational], g: &GramMatrix) -> Option<i64> {
    let vb = vec_valuation(p, b).finite()?;
    let vgb = vec_valuation(p, &g.apply(b)).finite()?;
    Some(vb - vgb)
}

/// Depth of the pairing: the largest elementary divisor exponent of `G` over
/// `Z_(p)`.  Depth zero holds iff `det G` is a p-adic unit.  Requires an
/// integral, symmetric, nondegenerate Gram matrix.
pub fn pairing_depth(p: u64, g: &GramMatrix) -> Result<i64, LatticeError> {
    if !g.is_integral(p) {
        return Err(LatticeError::NotIntegral);
    }
    let snf = snf_p(p, g.entries());
    if snf.rank < g.dim() {
        return Err(LatticeError::Degenerate);
    }
    Ok(*snf.exponents.iter().max().expect("nonempty"))
}

/// Elementary divisor exponents of `G` over `Z_(p)`, ascending.
pub fn elementary_divisor_exponents(p: u64, g: &GramMatrix) -> Result<Vec<i64>, LatticeError> {
    if !g.is_integral(p) {
        return Err(LatticeError::NotIntegral);
    }
    let snf = snf_p(p, g.entries());
    if snf.rank < g.dim() {
        return Err(LatticeError::Degenerate);
    }
    let mut e = snf.exponents;
    e.sort_unstable();
    Ok(e)
}

/// Definitional cross-check for [`pairing_depth`]: the largest dual defect
/// `val(G b) - val(b)` over all primitive lines with coordinates in
/// `[0, p^bound)`.
pub fn pairing_depth_bruteforce(p: u64, g: &GramMatrix, bound: u32) -> i64 {
    let d = g.dim();
    let modulus = p.pow(bound);
    let mut best = i64::MIN;
    let mut coords = vec![0u64; d];
    loop {
        if coords.iter().any(|&c| c % p != 0) {
            let b: QVec =
                coords.iter().map(|&c| BigRational::from_integer(c.into())).collect();
            let vgb = vec_valuation(p, &g.apply(&b));
            if let Valuation::Finite(v) = vgb {
                // primitive: val(b) = 0, defect = val(Gb)
                best = best.max(v);
            }
        }
        // odometer
        let mut i = 0;
        loop {
            if i == d {
                return best;
            }
            coords[i] += 1;
            if coords[i] < modulus {
                break;
            }
            coords[i] = 0;
            i += 1;
        }
    }
}

// ---------------------------------------------------------------------------
// Lattices from generating sets (used for orbit spans)
// ---------------------------------------------------------------------------

/// A full- or partial-rank sublattice of `O^d` described by generators,
/// capped at level `m`: the lattice `span(generators) + p^m O^d`.
///
/// `exponents[i] < m` are certified; an exponent reported as `m` means the
/// corresponding direction is not generated below the cap (possibly
/// deficient).  Stability is detected by comparing caps `m` and `m + 1`.
#[derive(Debug, Clone)]
pub struct GeneratedLattice {
    pub cap: u32,
    /// SNF exponents, ascending, length `d`; entries equal to `cap` are
    /// uncertified.
    pub exponents: Vec<i64>,
    /// basis vectors `p^{f_i} u_i` spanning the lattice (length `d`).
    pub basis: Vec<QVec>,
}

pub fn lattice_from_generators(p: u64, d: usize, gens: &[QVec], cap: u32) -> GeneratedLattice {
    let mut cols: Vec<QVec> = Vec::with_capacity(gens.len() + d);
    cols.extend(gens.iter().cloned());
    for i in 0..d {
        let mut e = vec![BigRational::zero(); d];
        e[i] = pow_p(p, cap as i64);
        cols.push(e);
    }
    // matrix with the generators as columns
    let mut a = vec![vec![BigRational::zero(); cols.len()]; d];
    for (j, c) in cols.iter().enumerate() {
        for i in 0..d {
            a[i][j] = c[i].clone();
        }
    }
    let snf = snf_p(p, &a);
    let mut pairs: Vec<(i64, QVec)> = Vec::with_capacity(d);
    for (i, f) in snf.exponents.iter().enumerate() {
        let mut u = vec![BigRational::zero(); d];
        for r in 0..d {
            u[r] = &snf.left[r][i] * pow_p(p, *f);
        }
        pairs.push((*f, u));
    }
    pairs.sort_by_key(|(f, _)| *f);
    GeneratedLattice {
        cap,
        exponents: pairs.iter().map(|(f, _)| *f).collect(),
        basis: pairs.into_iter().map(|(_, u)| u).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rv(v: &[i64]) -> QVec {
        qvec_from_i64(v)
    }

    #[test]
    fn vector_valuation_examples() {
        assert_eq!(vec_valuation(2, &rv(&[4, 6])), Valuation::Finite(1));
        assert_eq!(vec_valuation(2, &rv(&[0, 0])), Valuation::Infinite);
        let y = vec![
            BigRational::new(1.into(), 3.into()),
            BigRational::one(),
        ];
        assert_eq!(vec_valuation(3, &y), Valuation::Finite(-1));
        assert_eq!(vec_norm(3, &y), BigRational::from_integer(3.into()));
        assert_eq!(vec_norm(2, &rv(&[4, 6])), BigRational::new(1.into(), 2.into()));
        assert_eq!(vec_norm(2, &rv(&[1, 0])), BigRational::one());
    }

    #[test]
    fn dual_membership_examples() {
        let id = GramMatrix::identity(2);
        assert!(dual_membership(2, &rv(&[3, 5]), &id));
        let half = vec![BigRational::new(1.into(), 2.into()), BigRational::zero()];
        assert!(!dual_membership(2, &half, &id));
        let g = GramMatrix::from_i64(&[vec![1, 0], vec![0, 2]]).unwrap();
        let y = vec![BigRational::zero(), BigRational::new(1.into(), 2.into())];
        assert!(dual_membership(2, &y, &g));
    }

    #[test]
    fn snf_diagonal_examples() {
        let g = GramMatrix::identity(3);
        assert_eq!(pairing_depth(2, &g).unwrap(), 0);
        let g = GramMatrix::from_i64(&[vec![1, 0], vec![0, 2]]).unwrap();
        assert_eq!(pairing_depth(2, &g).unwrap(), 1);
        assert_eq!(elementary_divisor_exponents(2, &g).unwrap(), vec![0, 1]);
        // trace-form Gram of gl_2 in the basis {E11, E12, E21, E22}
        let g = GramMatrix::from_i64(&[
            vec![1, 0, 0, 0],
            vec![0, 0, 1, 0],
            vec![0, 1, 0, 0],
            vec![0, 0, 0, 1],
        ])
        .unwrap();
        assert_eq!(pairing_depth(2, &g).unwrap(), 0);
    }

    #[test]
    fn snf_factorization_holds() {
        let a: QMat = vec![
            vec![4.into(), 6.into(), 2.into()],
            vec![6.into(), 12.into(), 8.into()],
        ]
        .into_iter()
        .map(|r: Vec<i64>| r.into_iter().map(|x| BigRational::from_integer(x.into())).collect())
        .collect();
        let snf = snf_p(2, &a);
        // reconstruct left * D * right and compare with a
        let rows = 2;
        let cols = 3;
        let mut dmat = vec![vec![BigRational::zero(); cols]; rows];
        for (i, f) in snf.exponents.iter().enumerate() {
            dmat[i][i] = pow_p(2, *f);
        }
        let mut ld = vec![vec![BigRational::zero(); cols]; rows];
        for i in 0..rows {
            for j in 0..cols {
                for k in 0..rows {
                    let t = &snf.left[i][k] * &dmat[k][j];
                    ld[i][j] += t;
                }
            }
        }
        let mut ldr = vec![vec![BigRational::zero(); cols]; rows];
        for i in 0..rows {
            for j in 0..cols {
                for k in 0..cols {
                    let t = &ld[i][k] * &snf.right[k][j];
                    ldr[i][j] += t;
                }
            }
        }
        assert_eq!(ldr, a);
        // left * left_inv = identity
        for i in 0..rows {
            for j in 0..rows {
                let mut s = BigRational::zero();
                for k in 0..rows {
                    let t = &snf.left[i][k] * &snf.left_inv[k][j];
                    s += t;
                }
                assert_eq!(s, if i == j { BigRational::one() } else { BigRational::zero() });
            }
        }
        // right_inv * right = identity
        for i in 0..cols {
            for j in 0..cols {
                let mut s = BigRational::zero();
                for k in 0..cols {
                    let t = &snf.right_inv[i][k] * &snf.right[k][j];
                    s += t;
                }
                assert_eq!(s, if i == j { BigRational::one() } else { BigRational::zero() });
            }
        }
    }

    #[test]
    fn subspace_depth_examples() {
        let id = GramMatrix::identity(2);
        assert_eq!(subspace_depth(2, &[rv(&[1, 0])], &id, 8).unwrap(), 0);
        // span(e2) with G = diag(1, 2): e2/2 pairs integrally with O^2
        let g = GramMatrix::from_i64(&[vec![1, 0], vec![0, 2]]).unwrap();
        assert_eq!(subspace_depth(2, &[rv(&[0, 1])], &g, 8).unwrap(), -1);
        assert_eq!(line_depth(2, &rv(&[0, 1]), &g), Some(-1));
        // the full space: minimum over the dual lattice
        assert_eq!(subspace_depth(2, &[rv(&[1, 0]), rv(&[0, 1])], &g, 8).unwrap(), -1);
    }

    #[test]
    fn depth_brute_force_agreement_small() {
        let g = GramMatrix::from_i64(&[vec![2, 1], vec![1, 2]]).unwrap();
        let snf_depth = pairing_depth(3, &g).unwrap();
        let brute = pairing_depth_bruteforce(3, &g, 2);
        assert_eq!(snf_depth, brute);
    }

    #[test]
    fn generated_lattice_basis_and_cap() {
        // span{(2,0),(0,4)} capped at level 3 over p = 2
        let l = lattice_from_generators(2, 2, &[rv(&[2, 0]), rv(&[0, 4])], 3);
        assert_eq!(l.exponents, vec![1, 2]);
        // rank-deficient span{(1,1)}: second exponent pinned at the cap
        let l = lattice_from_generators(2, 2, &[rv(&[1, 1])], 3);
        assert_eq!(l.exponents, vec![0, 3]);
    }
}

//! Orbit decomposition of residue shells under `H(O/p^m)`, computed by
//! breadth-first walks along a generating set, plus orbit-stabilizer counts.

use num_bigint::BigUint;
use std::collections::{HashSet, VecDeque};

use super::{GroupError, GroupScheme};

/// One orbit of primitive residue vectors: the lexicographically smallest
/// member as representative, and the exact orbit size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShellOrbit {
    pub rep: Vec<u64>,
    pub size: u64,
}

fn space_size(p: u64, m: u32, d: usize) -> Option<u64> {
    let pm = p.checked_pow(m)?;
    let mut acc: u64 = 1;
    for _ in 0..d {
        acc = acc.checked_mul(pm)?;
    }
    Some(acc)
}

fn index_of(coords: &[u64], pm: u64) -> u64 {
    // coords[d-1] is the most significant digit, so ascending index order is
    // lexicographic order on coordinate tuples read left to right.
    let mut acc = 0u64;
    for &c in coords.iter().rev() {
        acc = acc * pm + c;
    }
    acc
}

fn coords_of(mut index: u64, pm: u64, d: usize) -> Vec<u64> {
    let mut out = vec![0u64; d];
    for item in out.iter_mut() {
        *item = index % pm;
        index /= pm;
    }
    out
}

/// Decompose the shell `{z mod p^m : z primitive}` into orbits of
/// `H(O/p^m)`.  Deterministic: orbits are listed by increasing
/// representative, and representatives are lexicographically minimal.
pub fn decompose_shell(
    scheme: &dyn GroupScheme,
    p: u64,
    m: u32,
    budget: u64,
) -> Result<Vec<ShellOrbit>, GroupError> {
    let d = scheme.dim_v();
    let pm = p.pow(m);
    let space = space_size(p, m, d).filter(|&s| s <= budget).ok_or_else(|| {
        GroupError::BudgetExceeded {
            needed: BigUint::from(p).pow(m * d as u32),
            budget,
        }
    })?;
    let gens = scheme.generators(p, m);
    let mut visited = vec![false; space as usize];
    let mut orbits = Vec::new();
    let mut primitive_total = 0u64;
    let mut buf = vec![0u64; d];
    for seed in 0..space {
        if visited[seed as usize] {
            continue;
        }
        let coords = coords_of(seed, pm, d);
        if !coords.iter().any(|&c| c % p != 0) {
            continue; // not primitive
        }
        // BFS from the seed; the seed is the lexicographically smallest
        // member because smaller indices were already visited or skipped.
        visited[seed as usize] = true;
        let mut size = 0u64;
        let mut queue = VecDeque::new();
        queue.push_back(coords);
        while let Some(z) = queue.pop_front() {
            size += 1;
            for g in &gens {
                scheme.act_residue(p, m, g, &z, &mut buf);
                let idx = index_of(&buf, pm) as usize;
                if !visited[idx] {
                    visited[idx] = true;
                    queue.push_back(buf.clone());
                }
            }
        }
        primitive_total += size;
        orbits.push(ShellOrbit { rep: coords_of(seed, pm, d), size });
    }
    // partition check: orbit sizes must cover every primitive vector
    assert!(m >= 1);
    assert_eq!(
        primitive_total,
        space - space_size(p, m - 1, d).expect("smaller space fits"),
        "orbit sizes must partition the shell"
    );
    Ok(orbits)
}

/// The orbit of one residue vector (breadth-first walk, capped).
pub fn orbit_of(
    scheme: &dyn GroupScheme,
    p: u64,
    m: u32,
    z: &[u64],
    cap: u64,
) -> Result<Vec<Vec<u64>>, GroupError> {
    let pm = p.pow(m);
    let start: Vec<u64> = z.iter().map(|&c| c % pm).collect();
    let gens = scheme.generators(p, m);
    let mut seen = HashSet::new();
    let mut order = Vec::new();
    let mut queue = VecDeque::new();
    seen.insert(start.clone());
    queue.push_back(start);
    let mut buf = vec![0u64; scheme.dim_v()];
    while let Some(v) = queue.pop_front() {
        order.push(v.clone());
        if order.len() as u64 > cap {
            return Err(GroupError::BudgetExceeded {
                needed: BigUint::from(cap) + 1u32,
                budget: cap,
            });
        }
        for g in &gens {
            scheme.act_residue(p, m, g, &v, &mut buf);
            if !seen.contains(&buf) {
                seen.insert(buf.clone());
                queue.push_back(buf.clone());
            }
        }
    }
    Ok(order)
}

/// Order of the finite-level stabilizer `{h in H(O/p^m) : h z = z}` via
/// orbit-stabilizer: `|H(O/p^m)| / |orbit(z)|`.
///
/// This is the finite-level stand-in for the image of the integral
/// stabilizer; the two can differ, which is detected by comparing
/// consecutive levels (see [`stabilizer_consistency`]).
pub fn stabilizer_order(
    scheme: &dyn GroupScheme,
    p: u64,
    m: u32,
    z: &[u64],
    budget: u64,
) -> Result<BigUint, GroupError> {
    let orbit = orbit_of(scheme, p, m, z, budget)?;
    Ok(scheme.group_order(p, m) / BigUint::from(orbit.len() as u64))
}

/// Compare stabilizer orders at levels `m` and `m+1`: for a smooth
/// stabilizer the ratio is `p^{dim}` for a fixed integer `dim <= h_dim`;
/// returns `(order_m, order_{m+1}, stable)` where `stable` means the ratio
/// is an exact power of `p` not exceeding `p^{h_dim}`.
pub fn stabilizer_consistency(
    scheme: &dyn GroupScheme,
    p: u64,
    m: u32,
    z: &[u64],
    budget: u64,
) -> Result<(BigUint, BigUint, bool), GroupError> {
    let a = stabilizer_order(scheme, p, m, z, budget)?;
    let lifted: Vec<u64> = z.iter().map(|&c| c % p.pow(m)).collect();
    let b = stabilizer_order(scheme, p, m + 1, &lifted, budget)?;
    let (q, r) = num_integer::Integer::div_rem(&b, &a);
    let mut stable = r == BigUint::from(0u32);
    if stable {
        // q must be p^k with k <= h_dim
        let mut q = q;
        let pb = BigUint::from(p);
        let mut k = 0;
        while (&q % &pb) == BigUint::from(0u32) {
            q /= &pb;
            k += 1;
        }
        stable = q == BigUint::from(1u32) && k <= scheme.h_dim();
    }
    Ok((a, b, stable))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{catalog, Gl1, GlnGln};

    #[test]
    fn gl1_shell_is_one_orbit() {
        let orbits = decompose_shell(&Gl1, 2, 2, 1 << 20).unwrap();
        assert_eq!(orbits.len(), 1);
        assert_eq!(orbits[0].size, 2);
        assert_eq!(orbits[0].rep, vec![1]);
    }

    #[test]
    fn gl2_pairs_level_one_orbits_by_rank() {
        // gl_2(F_2) minus 0 splits into rank-1 (9 points) and rank-2 (6).
        let g = GlnGln::new(2);
        let orbits = decompose_shell(&g, 2, 1, 1 << 20).unwrap();
        let mut sizes: Vec<u64> = orbits.iter().map(|o| o.size).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![6, 9]);
        assert_eq!(orbits.iter().map(|o| o.size).sum::<u64>(), 15);
    }

    #[test]
    fn gl2_pairs_level_two_orbits_are_smith_classes() {
        // mod 4: invertible, divisor-2 and divisor-0 classes
        let g = GlnGln::new(2);
        let orbits = decompose_shell(&g, 2, 2, 1 << 20).unwrap();
        assert_eq!(orbits.len(), 3);
        let total: u64 = orbits.iter().map(|o| o.size).sum();
        assert_eq!(total, 256 - 16);
    }

    #[test]
    fn stabilizer_of_identity_is_diagonal_copy() {
        // stabilizer of Id mod 4 under GL2 x GL2 is {(g, g)}: order 96
        let g = GlnGln::new(2);
        let z = [1u64, 0, 0, 1];
        let s = stabilizer_order(&g, 2, 2, &z, 1 << 20).unwrap();
        assert_eq!(s, 96u32.into());
        let (a, b, stable) = stabilizer_consistency(&g, 2, 2, &z, 1 << 20).unwrap();
        assert_eq!(a, 96u32.into());
        // smooth: the diagonal GL_2 grows by p^4 per level
        assert_eq!(b, (96u32 * 16).into());
        assert!(stable);
    }

    #[test]
    fn scaled_adjoint_level_one_orbits() {
        let s = catalog("scaled-adjoint-gl2").unwrap();
        let orbits = decompose_shell(s.as_ref(), 2, 1, 1 << 20).unwrap();
        // conjugacy classes of nonzero gl_2(F_2): I, I+N, N, split rank-1,
        // elliptic (u = 1 only, so scaling adds nothing at p = 2)
        let mut sizes: Vec<u64> = orbits.iter().map(|o| o.size).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![1, 2, 3, 3, 6]);
    }

    #[test]
    fn gl1_stabilizer_examples() {
        // faithful action: trivial stabilizer on units
        let s = stabilizer_order(&Gl1, 2, 3, &[1], 1 << 20).unwrap();
        assert_eq!(s, 1u32.into());
        // zero vector: the whole group
        let s = stabilizer_order(&Gl1, 2, 3, &[0], 1 << 20).unwrap();
        assert_eq!(s, 4u32.into());
    }
}

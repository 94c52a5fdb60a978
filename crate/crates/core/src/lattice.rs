//! Set-family model of the intersection lattice `L_{n,d}`.
//!
//! An element is a family `T = {T_1, .., T_l}` of distinct subsets of
//! `{1..n}` with `|T_i| <= d` such that every sub-family `T'` of two or more
//! members has `D_d(T') > 0`. The minimum is the empty family and the maximum
//! is `{∅}`.

use std::fmt;

use num::bigint::BigInt;

use crate::arith::{binomial, Partition};
use crate::error::{Error, Result};
use crate::poset::{find_isomorphism, product, RankedPoset};

/// Largest ambient set a [`SymbolSet`] can address.
pub const MAX_SYMBOLS: u32 = 64;

/// A subset of `{1..n}` stored as a bitmask (bit `i-1` for symbol `i`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct SymbolSet(pub u64);

impl SymbolSet {
    pub const EMPTY: SymbolSet = SymbolSet(0);

    /// From 1-based symbols.
    pub fn from_symbols(symbols: &[u32]) -> Self {
        let mut mask = 0u64;
        for &s in symbols {
            assert!((1..=MAX_SYMBOLS).contains(&s), "symbol {s} out of range");
            mask |= 1 << (s - 1);
        }
        SymbolSet(mask)
    }

    /// `{1..n}`.
    pub fn full(n: u32) -> Self {
        assert!(n <= MAX_SYMBOLS);
        if n == 64 {
            SymbolSet(u64::MAX)
        } else {
            SymbolSet((1u64 << n) - 1)
        }
    }

    #[inline]
    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    #[inline]
    pub fn intersect(self, other: Self) -> Self {
        SymbolSet(self.0 & other.0)
    }

    #[inline]
    pub fn union(self, other: Self) -> Self {
        SymbolSet(self.0 | other.0)
    }

    #[inline]
    pub fn is_subset(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn complement(self, n: u32) -> Self {
        SymbolSet(!self.0 & Self::full(n).0)
    }

    pub fn symbols(self) -> Vec<u32> {
        (0..64).filter(|i| self.0 >> i & 1 == 1).map(|i| i + 1).collect()
    }
}

impl fmt::Display for SymbolSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.symbols().iter().map(u32::to_string).collect();
        write!(f, "{{{}}}", s.join(","))
    }
}

/// A family of distinct symbol sets in canonical order (size, then mask).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct SetFamily(Vec<SymbolSet>);

impl SetFamily {
    /// Canonicalizes: sorts and drops duplicates.
    pub fn new(mut members: Vec<SymbolSet>) -> Self {
        members.sort_by_key(|s| (s.len(), s.0));
        members.dedup();
        SetFamily(members)
    }

    /// Convenience constructor from 1-based symbol lists.
    pub fn from_lists(lists: &[&[u32]]) -> Self {
        Self::new(lists.iter().map(|l| SymbolSet::from_symbols(l)).collect())
    }

    /// The minimum `0̂` (empty family).
    pub fn bottom() -> Self {
        SetFamily(Vec::new())
    }

    /// The maximum `1̂ = {∅}`.
    pub fn top() -> Self {
        SetFamily(vec![SymbolSet::EMPTY])
    }

    pub fn members(&self) -> &[SymbolSet] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn intersection(&self, n: u32) -> SymbolSet {
        self.0.iter().fold(SymbolSet::full(n), |acc, s| acc.intersect(*s))
    }
}

impl fmt::Display for SetFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

/// `codim_d(X) = d + 1 - |X|`.
#[inline]
pub fn codim_d(x: SymbolSet, d: u32) -> i64 {
    d as i64 + 1 - x.len() as i64
}

/// Rank `ρ_d(T)` and statistic `D_d(T) = codim_d(∩T) - ρ_d(T)`.
///
/// The empty family has rank 0; its `D` is reported as 0.
pub fn rho_d(t: &SetFamily, d: u32) -> (i64, i64) {
    if t.is_empty() {
        return (0, 0);
    }
    let rank: i64 = t.members().iter().map(|&s| codim_d(s, d)).sum();
    let cap = t.members().iter().fold(SymbolSet(u64::MAX), |acc, s| acc.intersect(*s));
    (rank, codim_d(cap, d) - rank)
}

/// Membership test for `L_{n,d}`.
pub fn is_lattice_element(t: &SetFamily, n: u32, d: u32) -> bool {
    let universe = SymbolSet::full(n);
    if !t.members().iter().all(|s| s.is_subset(universe) && s.len() <= d) {
        return false;
    }
    let l = t.len();
    if l > 20 {
        return false;
    }
    (1u32..1 << l).filter(|m| m.count_ones() > 1).all(|m| {
        let sub = SetFamily((0..l).filter(|i| m >> i & 1 == 1).map(|i| t.members()[i]).collect());
        rho_d(&sub, d).1 > 0
    })
}

/// The lattice order: `T <= T'` iff they are equal, or `ρ_d(T) < ρ_d(T')` and
/// every member of `T` contains some member of `T'`.
pub fn leq(t: &SetFamily, t2: &SetFamily, d: u32) -> bool {
    if t == t2 {
        return true;
    }
    rho_d(t, d).0 < rho_d(t2, d).0 && covers_members(t, t2)
}

fn covers_members(t: &SetFamily, t2: &SetFamily) -> bool {
    t.members()
        .iter()
        .all(|&ti| t2.members().iter().any(|&tj| tj.is_subset(ti)))
}

/// Type `γ_d(T)`: the member codimensions, sorted decreasingly.
pub fn type_of(t: &SetFamily, d: u32) -> Partition {
    Partition::new(
        t.members()
            .iter()
            .map(|&s| u32::try_from(codim_d(s, d)).expect("member larger than d+1"))
            .collect(),
    )
}

/// `{[n] \ S_i}`: maps between the union form `L^{n,d}` and the intersection
/// form `L_{n,d}`. It is an involution.
pub fn complement_transform(s: &SetFamily, n: u32) -> SetFamily {
    SetFamily::new(s.members().iter().map(|x| x.complement(n)).collect())
}

/// `ρ^k(S)` and `D^k(S) = codim^k(∪S) - ρ^k(S)` with `codim^k(X) = |X| - k`.
pub fn rho_upper(s: &SetFamily, k: u32) -> (i64, i64) {
    if s.is_empty() {
        return (0, 0);
    }
    let codim = |x: SymbolSet| x.len() as i64 - k as i64;
    let rank: i64 = s.members().iter().map(|&x| codim(x)).sum();
    let cup = s.members().iter().fold(SymbolSet::EMPTY, |acc, x| acc.union(*x));
    (rank, codim(cup) - rank)
}

/// The order of `L^{n,d}`: equal, or smaller `ρ^k` and every member of `S`
/// contained in some member of `S'`.
pub fn leq_upper(s: &SetFamily, s2: &SetFamily, k: u32) -> bool {
    if s == s2 {
        return true;
    }
    rho_upper(s, k).0 < rho_upper(s2, k).0
        && s.members()
            .iter()
            .all(|&a| s2.members().iter().any(|&b| a.is_subset(b)))
}

/// Size limits for exhaustive lattice construction.
#[derive(Debug, Clone, Copy)]
pub struct LatticeGuard {
    pub max_n: u32,
    pub max_d: u32,
    pub max_ideal: usize,
}

impl Default for LatticeGuard {
    fn default() -> Self {
        LatticeGuard {
            max_n: 9,
            max_d: 4,
            max_ideal: 200,
        }
    }
}

/// Exhaustive construction of `L_{n,d}` with the default guard.
pub fn enumerate_lattice(n: u32, d: u32) -> Result<RankedPoset<SetFamily>> {
    enumerate_lattice_guarded(n, d, LatticeGuard::default())
}

pub fn enumerate_lattice_guarded(n: u32, d: u32, guard: LatticeGuard) -> Result<RankedPoset<SetFamily>> {
    if n > guard.max_n || d > guard.max_d {
        let candidates: BigInt = (0..=d.min(n)).map(|s| BigInt::from(binomial(n as u64, s as i64))).sum();
        return Err(Error::budget(
            format!("enumerate_lattice(n={n}, d={d})"),
            format!("{candidates} candidate member sets"),
            format!("n <= {}, d <= {}", guard.max_n, guard.max_d),
        ));
    }
    if n > MAX_SYMBOLS {
        return Err(Error::InvalidInput(format!("n = {n} exceeds {MAX_SYMBOLS}")));
    }
    let families = lattice_families(n, d);
    let ranks = families.iter().map(|t| rho_d(t, d).0 as usize).collect();
    Ok(RankedPoset::from_order(families, ranks, covers_members))
}

/// Every element of `L_{n,d}` by backtracking over candidate sets in
/// canonical order, checking only the sub-families that contain the newly
/// added member.
fn lattice_families(n: u32, d: u32) -> Vec<SetFamily> {
    let mut candidates: Vec<SymbolSet> = (0..1u64 << n).map(SymbolSet).filter(|s| s.len() <= d).collect();
    candidates.sort_by_key(|s| (s.len(), s.0));

    struct Frame {
        /// For each sub-family mask of the current members: (intersection, rank).
        subs: Vec<(SymbolSet, i64)>,
    }

    fn extend(
        start: usize,
        candidates: &[SymbolSet],
        d: u32,
        members: &mut Vec<SymbolSet>,
        frame: &Frame,
        out: &mut Vec<SetFamily>,
    ) {
        out.push(SetFamily(members.clone()));
        for (ci, &c) in candidates.iter().enumerate().skip(start) {
            let c_codim = codim_d(c, d);
            // Rank can never exceed d + 1.
            let cur_rank = frame.subs.last().map_or(0, |s| s.1);
            if cur_rank + c_codim > d as i64 + 1 {
                continue;
            }
            let mut ok = true;
            let mut added = Vec::with_capacity(frame.subs.len());
            for (mask, &(cap, rank)) in frame.subs.iter().enumerate() {
                let cap2 = if mask == 0 { c } else { cap.intersect(c) };
                let rank2 = rank + c_codim;
                if mask != 0 && codim_d(cap2, d) - rank2 <= 0 {
                    ok = false;
                    break;
                }
                added.push((cap2, rank2));
            }
            if !ok {
                continue;
            }
            let mut subs = frame.subs.clone();
            subs.extend(added);
            members.push(c);
            extend(ci + 1, candidates, d, members, &Frame { subs }, out);
            members.pop();
        }
    }

    let mut out = Vec::new();
    let root = Frame {
        subs: vec![(SymbolSet(u64::MAX), 0)],
    };
    extend(0, &candidates, d, &mut Vec::new(), &root, &mut out);
    out
}

/// Möbius values `μ(0̂, x)` on a ranked poset with a unique minimum.
pub fn mobius_on_poset<E>(p: &RankedPoset<E>) -> Vec<BigInt> {
    p.mobius()
}

/// Checks the product structure of the order ideal below `t` in `L_{n,d}`:
/// `I(T) ≅ Π I({T_i})` and `I({T_i}) ≅ L_{k+c_i, c_i-1}` with
/// `c_i = codim_d(T_i)` and `k = n - d - 1`.
pub fn ideal_product_check(n: u32, d: u32, t: &SetFamily) -> Result<bool> {
    let lattice = enumerate_lattice(n, d)?;
    ideal_product_check_in(&lattice, n, d, t, LatticeGuard::default().max_ideal)
}

/// Same as [`ideal_product_check`] against an already built lattice.
pub fn ideal_product_check_in(
    lattice: &RankedPoset<SetFamily>,
    n: u32,
    d: u32,
    t: &SetFamily,
    max_ideal: usize,
) -> Result<bool> {
    let pos = lattice
        .position(t)
        .ok_or_else(|| Error::InvalidInput(format!("{t} is not an element of L_{{{n},{d}}}")))?;
    let ideal = lattice.ideal(pos);
    if ideal.len() > max_ideal {
        return Err(Error::budget("order ideal", ideal.len(), max_ideal));
    }
    let k = n - d - 1;
    let mut factors = Vec::new();
    for &member in t.members() {
        let single = SetFamily(vec![member]);
        let factor = lattice.ideal(lattice.position(&single).expect("single-member ideal"));
        let c = codim_d(member, d) as u32;
        let small = enumerate_lattice(k + c, c - 1)?;
        if find_isomorphism(&factor, &small).is_none() {
            return Ok(false);
        }
        factors.push(factor);
    }
    let refs: Vec<&RankedPoset<SetFamily>> = factors.iter().collect();
    let prod = product(&refs);
    Ok(find_isomorphism(&ideal, &prod).is_some())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::binomial;
    use num::bigint::BigUint;

    fn fam(lists: &[&[u32]]) -> SetFamily {
        SetFamily::from_lists(lists)
    }

    #[test]
    fn codim_examples() {
        assert_eq!(codim_d(SymbolSet::from_symbols(&[1, 2]), 2), 1);
        assert_eq!(codim_d(SymbolSet::EMPTY, 2), 3);
        assert_eq!(codim_d(SymbolSet::from_symbols(&[1, 2, 3]), 2), 0);
    }

    #[test]
    fn rho_examples() {
        assert_eq!(rho_d(&fam(&[&[1], &[2]]), 2), (4, -1));
        assert_eq!(rho_d(&fam(&[&[1, 2]]), 2), (1, 0));
        assert_eq!(rho_d(&SetFamily::top(), 2).0, 3);
    }

    #[test]
    fn membership_examples() {
        assert!(!is_lattice_element(&fam(&[&[1], &[2]]), 4, 2));
        // Two points in 3-space never meet: D_3 = 4 - 6 < 0.
        assert!(!is_lattice_element(&fam(&[&[1], &[2]]), 4, 3));
        assert!(is_lattice_element(&fam(&[&[1, 2, 3], &[1, 4, 5]]), 5, 3));
        assert!(is_lattice_element(&SetFamily::bottom(), 4, 2));
        assert!(is_lattice_element(&SetFamily::top(), 4, 2));
        assert!(!is_lattice_element(&fam(&[&[1, 2, 3]]), 4, 2));
    }

    #[test]
    fn order_examples() {
        let l = enumerate_lattice(4, 2).unwrap();
        let bottom = SetFamily::bottom();
        let top = SetFamily::top();
        for t in l.elements() {
            assert!(leq(&bottom, t, 2));
            assert!(leq(t, &top, 2));
        }
        assert!(leq(&fam(&[&[1, 2]]), &fam(&[&[1]]), 2));
        assert!(!leq(&fam(&[&[1]]), &fam(&[&[1, 2]]), 2));
    }

    #[test]
    fn type_examples() {
        assert_eq!(type_of(&SetFamily::bottom(), 3), Partition::empty());
        assert_eq!(type_of(&SetFamily::top(), 3), Partition::new(vec![4]));
        assert_eq!(type_of(&fam(&[&[1, 2], &[3, 4]]), 3), Partition::new(vec![2, 2]));
        assert_eq!(type_of(&fam(&[&[1], &[2, 3]]), 3), Partition::new(vec![3, 2]));
    }

    #[test]
    fn complement_examples() {
        let s = fam(&[&[1, 2, 3]]);
        assert_eq!(complement_transform(&s, 4), fam(&[&[4]]));
        let t = fam(&[&[1, 2], &[2, 4, 5]]);
        assert_eq!(complement_transform(&complement_transform(&t, 6), 6), t);
    }

    #[test]
    fn rank_is_preserved_by_complement() {
        // Pseudo-random families, compared through both rank definitions.
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        for _ in 0..1000 {
            let n = 3 + (next() % 6) as u32;
            let k = (next() % (n as u64 - 1)) as u32;
            let d = n - k - 1;
            let l = 1 + (next() % 4) as usize;
            let members: Vec<SymbolSet> = (0..l).map(|_| SymbolSet(next() & SymbolSet::full(n).0)).collect();
            let s = SetFamily::new(members);
            let t = complement_transform(&s, n);
            assert_eq!(rho_upper(&s, k), rho_d(&t, d));
        }
    }

    #[test]
    fn figure_one_lattice() {
        let l = enumerate_lattice(4, 2).unwrap();
        assert_eq!(l.rank_sizes(), vec![1, 6, 7, 1]);
        let mu = mobius_on_poset(&l);
        let top = l.position(&SetFamily::top()).unwrap();
        assert_eq!(mu[top], BigInt::from(-6));
        let bottom = l.minimum().unwrap();
        assert_eq!(mu[bottom], BigInt::from(1));
    }

    #[test]
    fn trivial_lattices() {
        for k in 0..4 {
            let l = enumerate_lattice(k + 1, 0).unwrap();
            assert_eq!(l.len(), 2);
        }
        let l = enumerate_lattice(4, 1).unwrap();
        let mu = mobius_on_poset(&l);
        let top = l.position(&SetFamily::top()).unwrap();
        assert_eq!(mu[top], BigInt::from(3));
    }

    #[test]
    fn five_two_rank_two() {
        let l = enumerate_lattice(5, 2).unwrap();
        assert_eq!(l.rank_sizes(), vec![1, 10, 20, 1]);
    }

    #[test]
    fn guard_refuses_large_cases() {
        assert!(matches!(enumerate_lattice(10, 3), Err(Error::Budget { .. })));
        assert!(matches!(enumerate_lattice(8, 5), Err(Error::Budget { .. })));
    }

    #[test]
    fn enumerated_elements_satisfy_definition() {
        for (n, d) in [(4, 2), (5, 2), (5, 3), (6, 3), (6, 2)] {
            let l = enumerate_lattice(n, d).unwrap();
            for t in l.elements() {
                assert!(is_lattice_element(t, n, d), "{t}");
                assert!(rho_d(t, d).0 <= d as i64 + 1);
            }
            // Brute-force count of families of up to 3 members.
            let sets: Vec<SymbolSet> = (0..1u64 << n).map(SymbolSet).filter(|s| s.len() <= d).collect();
            let mut brute = 1 + sets.len();
            for a in 0..sets.len() {
                for b in a + 1..sets.len() {
                    if is_lattice_element(&SetFamily::new(vec![sets[a], sets[b]]), n, d) {
                        brute += 1;
                    }
                }
            }
            let small = l.elements().iter().filter(|t| t.len() <= 2).count();
            assert_eq!(small, brute, "n={n} d={d}");
        }
    }

    #[test]
    fn ideal_product_examples() {
        let l = enumerate_lattice(4, 2).unwrap();
        assert!(ideal_product_check_in(&l, 4, 2, &SetFamily::top(), 200).unwrap());
        assert!(ideal_product_check(5, 3, &fam(&[&[1, 2], &[3, 4, 5]])).unwrap());
        for (i, t) in l.elements().iter().enumerate() {
            if l.rank(i) == 1 {
                let ideal = l.ideal(i);
                assert_eq!(ideal.len(), 2);
                assert!(ideal_product_check_in(&l, 4, 2, t, 200).unwrap());
            }
        }
    }

    #[test]
    fn boolean_case_rank_sizes() {
        for d in 1..=4u32 {
            let l = enumerate_lattice(d + 1, d).unwrap();
            let expected: Vec<usize> = (0..=d + 1)
                .map(|r| {
                    let b: BigUint = binomial(d as u64 + 1, r as i64);
                    b.try_into().unwrap()
                })
                .collect();
            assert_eq!(l.rank_sizes(), expected);
        }
    }
}

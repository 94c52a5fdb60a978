//! Counting lattice elements by type.
//!
//! An ordered tuple `(T_1, .., T_l)` of type `γ` is recorded by how many
//! symbols sit in exactly the members indexed by each `I ⊆ {1..l}`: the
//! occupancy pattern `ν(I)`. Patterns obey
//!
//! * `Σ_I ν(I) = n`,
//! * `Σ_{I ∋ i} ν(I) = d + 1 - γ_i` for every row `i`,
//! * `Σ_{J ⊇ I} ν(J) < d + 1 - Σ_{i ∈ I} γ_i` for every `|I| >= 2`,
//!
//! and each pattern is realized by `n! / Π ν(I)!` tuples. `c(j, d; γ)` is the
//! same sum restricted to patterns that use all `j` symbols (`ν(∅) = 0`); it
//! does not depend on `n`, and `λ_{n,d}(γ) = Σ_j c(j,d;γ) C(n,j) / Π m_s(γ)!`.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Mutex, OnceLock};

use num::bigint::BigUint;
use num::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::arith::{binomial, multinomial, Partition, SmallBinomials};
use crate::error::{Error, Result};

/// Widest `γ` the counting engine accepts (`2^l` occupancy cells).
pub const MAX_LENGTH: usize = 10;

fn small_binomials() -> &'static SmallBinomials {
    static TABLE: OnceLock<SmallBinomials> = OnceLock::new();
    TABLE.get_or_init(|| SmallBinomials::new(127))
}

/// An occupancy pattern `ν`, indexed by member-subset bitmask (bit `i` for row `i+1`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NuAssignment {
    l: usize,
    counts: Vec<u64>,
}

impl NuAssignment {
    pub fn length(&self) -> usize {
        self.l
    }

    /// `ν(I)` for the subset with bitmask `mask`.
    pub fn get(&self, mask: usize) -> u64 {
        self.counts[mask]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// `total! / Π ν(I)!`.
    pub fn multinomial(&self) -> BigUint {
        multinomial(&self.counts)
    }

    /// Row sum `Σ_{I ∋ i} ν(I)` (0-based row).
    pub fn row_sum(&self, row: usize) -> u64 {
        self.counts
            .iter()
            .enumerate()
            .filter(|(m, _)| m >> row & 1 == 1)
            .map(|(_, &v)| v)
            .sum()
    }

    /// `Σ_{J ⊇ I} ν(J)`, the size of the intersection of the rows in `I`.
    pub fn superset_sum(&self, mask: usize) -> u64 {
        self.counts
            .iter()
            .enumerate()
            .filter(|(m, _)| m & mask == mask)
            .map(|(_, &v)| v)
            .sum()
    }
}

fn row_targets(d: u32, gamma: &Partition) -> Option<Vec<i64>> {
    let targets: Vec<i64> = gamma.parts().iter().map(|&g| d as i64 + 1 - g as i64).collect();
    targets.iter().all(|&t| t >= 0).then_some(targets)
}

fn strict_bounds(d: u32, gamma: &Partition) -> Vec<i64> {
    let l = gamma.len();
    (0..1usize << l)
        .map(|mask| {
            let s: i64 = (0..l)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| gamma.parts()[i] as i64)
                .sum();
            d as i64 + 1 - s
        })
        .collect()
}

fn check_length(gamma: &Partition) -> Result<()> {
    if gamma.len() > MAX_LENGTH {
        return Err(Error::budget("partition length", gamma.len(), MAX_LENGTH));
    }
    Ok(())
}

/// Visits every pattern of total `j`. Subsets are taken in ascending mask
/// order; rows and totals are pruned by capacity and every completed pattern
/// is re-checked against all three constraint families.
///
/// `node_budget` caps the number of search nodes; exceeding it is a budget refusal.
pub fn for_each_nu<F>(
    j: u64,
    d: u32,
    gamma: &Partition,
    require_empty_zero: bool,
    node_budget: Option<u64>,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(&NuAssignment),
{
    check_length(gamma)?;
    let l = gamma.len();
    let Some(targets) = row_targets(d, gamma) else {
        return Ok(());
    };
    let bounds = strict_bounds(d, gamma);

    struct Search<'a, F> {
        l: usize,
        targets: &'a [i64],
        bounds: &'a [i64],
        need: Vec<i64>,
        nu: NuAssignment,
        visit: &'a mut F,
        nodes: u64,
        budget: Option<u64>,
        require_empty_zero: bool,
    }

    impl<F: FnMut(&NuAssignment)> Search<'_, F> {
        fn full_check(&self, j: u64) -> bool {
            let nu = &self.nu;
            if nu.total() != j {
                return false;
            }
            if self.require_empty_zero && nu.get(0) != 0 {
                return false;
            }
            if (0..self.l).any(|i| nu.row_sum(i) as i64 != self.targets[i]) {
                return false;
            }
            (0..1usize << self.l)
                .filter(|m| m.count_ones() >= 2)
                .all(|m| (nu.superset_sum(m) as i64) < self.bounds[m])
        }

        fn rec(&mut self, mask: usize, remaining: i64, j: u64) -> Result<()> {
            self.nodes += 1;
            if let Some(b) = self.budget {
                if self.nodes > b {
                    return Err(Error::budget("occupancy-pattern search", format!("> {b} nodes"), b));
                }
            }
            let cells = 1usize << self.l;
            if mask == cells {
                if remaining == 0 && self.need.iter().all(|&x| x == 0) && self.full_check(j) {
                    (self.visit)(&self.nu);
                }
                return Ok(());
            }
            // Every unit placed in a nonempty cell fills at least one row.
            let later_need: i64 = self.need.iter().sum();
            if mask > 0 && remaining > later_need {
                return Ok(());
            }
            let mut cap = remaining;
            if mask == 0 {
                if self.require_empty_zero {
                    cap = 0;
                }
            } else {
                for i in 0..self.l {
                    if mask >> i & 1 == 1 {
                        cap = cap.min(self.need[i]);
                    }
                }
                if mask.count_ones() >= 2 {
                    cap = cap.min(self.bounds[mask] - 1);
                }
            }
            for v in 0..=cap.max(-1) {
                self.nu.counts[mask] = v as u64;
                for i in 0..self.l {
                    if mask >> i & 1 == 1 {
                        self.need[i] -= v;
                    }
                }
                let r = self.rec(mask + 1, remaining - v, j);
                for i in 0..self.l {
                    if mask >> i & 1 == 1 {
                        self.need[i] += v;
                    }
                }
                self.nu.counts[mask] = 0;
                r?;
            }
            Ok(())
        }
    }

    let mut search = Search {
        l,
        targets: &targets,
        bounds: &bounds,
        need: targets.clone(),
        nu: NuAssignment {
            l,
            counts: vec![0; 1 << l],
        },
        visit: &mut visit,
        nodes: 0,
        budget: node_budget,
        require_empty_zero,
    };
    search.rec(0, j as i64, j)
}

/// Every pattern of total `j`, collected in the deterministic search order.
pub fn enumerate_nu(j: u64, d: u32, gamma: &Partition, require_empty_zero: bool) -> Result<Vec<NuAssignment>> {
    let mut out = Vec::new();
    for_each_nu(j, d, gamma, require_empty_zero, None, |nu| out.push(nu.clone()))?;
    Ok(out)
}

/// Running sum that stays in `u128` until it would overflow.
#[derive(Debug, Clone, Default)]
struct Accumulator {
    small: u128,
    big: BigUint,
}

impl Accumulator {
    #[inline]
    fn add_small(&mut self, w: u128) {
        match self.small.checked_add(w) {
            Some(s) => self.small = s,
            None => {
                self.big += self.small;
                self.small = w;
            }
        }
    }

    fn add_big(&mut self, w: &BigUint) {
        self.big += w;
    }

    fn merge(&mut self, other: &Accumulator) {
        self.big += &other.big;
        self.add_small(other.small);
    }

    fn value(&self) -> BigUint {
        &self.big + self.small
    }
}

/// State of the pruned `c` kernel.
///
/// Nonempty subsets are visited in descending mask order. Every superset of
/// a subset has a larger mask, so when `ν(I)` is chosen all of
/// `Σ_{J ⊋ I} ν(J)` is known and the strict bound becomes a plain upper
/// limit on `ν(I)`; the singleton `{i}` is the last cell touching row `i`,
/// so its value is forced by the row target.
#[derive(Clone)]
struct KernelState {
    pos: usize,
    total: u64,
    weight: Option<u128>,
    need: Vec<i64>,
    sup: Vec<i64>,
    nu: Vec<u64>,
}

struct Kernel {
    l: usize,
    jmax: u64,
    /// Nonempty masks, descending.
    cells: Vec<usize>,
    bounds: Vec<i64>,
    /// Submasks of each mask with at least two rows.
    strict_submasks: Vec<Vec<usize>>,
}

impl Kernel {
    fn new(jmax: u64, d: u32, gamma: &Partition) -> Self {
        let l = gamma.len();
        let cells: Vec<usize> = (1..1usize << l).rev().collect();
        let strict_submasks = (0..1usize << l)
            .map(|mask| {
                let mut subs = Vec::new();
                let mut s = mask;
                while s > 0 {
                    if s.count_ones() >= 2 {
                        subs.push(s);
                    }
                    s = (s - 1) & mask;
                }
                subs
            })
            .collect();
        Kernel {
            l,
            jmax,
            cells,
            bounds: strict_bounds(d, gamma),
            strict_submasks,
        }
    }

    /// Largest admissible value for the current cell, or `None` if the
    /// branch is already dead.
    fn cap(&self, st: &KernelState, mask: usize) -> Option<i64> {
        let remaining = self.jmax as i64 - st.total as i64;
        if mask.count_ones() == 1 {
            let i = mask.trailing_zeros() as usize;
            let v = st.need[i];
            return (v <= remaining).then_some(v);
        }
        let mut cap = remaining;
        for i in 0..self.l {
            if mask >> i & 1 == 1 {
                cap = cap.min(st.need[i]);
            }
        }
        for &s in &self.strict_submasks[mask] {
            cap = cap.min(self.bounds[s] - 1 - st.sup[s]);
        }
        (cap >= 0).then_some(cap)
    }

    fn apply(&self, st: &mut KernelState, mask: usize, v: i64) {
        if v > 0 {
            let vu = v as u64;
            st.weight = st.weight.and_then(|w| {
                let b = small_binomials().get((st.total + vu) as usize, v as usize)?;
                w.checked_mul(b)
            });
            st.total += vu;
            for i in 0..self.l {
                if mask >> i & 1 == 1 {
                    st.need[i] -= v;
                }
            }
            let mut s = mask;
            while s > 0 {
                st.sup[s] += v;
                s = (s - 1) & mask;
            }
        }
        st.nu[mask] = v as u64;
        st.pos += 1;
    }

    fn undo(&self, st: &mut KernelState, mask: usize, v: i64, weight: Option<u128>) {
        st.pos -= 1;
        st.nu[mask] = 0;
        if v > 0 {
            st.weight = weight;
            st.total -= v as u64;
            for i in 0..self.l {
                if mask >> i & 1 == 1 {
                    st.need[i] += v;
                }
            }
            let mut s = mask;
            while s > 0 {
                st.sup[s] -= v;
                s = (s - 1) & mask;
            }
        }
    }

    /// Lower bound on symbols still to be placed: the largest open row.
    #[inline]
    fn feasible(&self, st: &KernelState) -> bool {
        let max_need = st.need.iter().copied().max().unwrap_or(0);
        st.total as i64 + max_need <= self.jmax as i64
    }

    fn run(&self, st: &mut KernelState, acc: &mut [Accumulator]) {
        if st.pos == self.cells.len() {
            let j = st.total as usize;
            match st.weight {
                Some(w) => acc[j].add_small(w),
                None => acc[j].add_big(&multinomial(&st.nu)),
            }
            return;
        }
        let mask = self.cells[st.pos];
        let Some(cap) = self.cap(st, mask) else { return };
        let lo = if mask.count_ones() == 1 { cap } else { 0 };
        for v in lo..=cap {
            let w = st.weight;
            self.apply(st, mask, v);
            if self.feasible(st) {
                self.run(st, acc);
            }
            self.undo(st, mask, v, w);
        }
    }

    /// Expands the search tree to `depth` cells and returns the frontier.
    fn frontier(&self, root: KernelState, depth: usize) -> Vec<KernelState> {
        let mut layer = vec![root];
        for _ in 0..depth.min(self.cells.len()) {
            let mut next = Vec::new();
            for st in layer {
                let mask = self.cells[st.pos];
                let Some(cap) = self.cap(&st, mask) else { continue };
                let lo = if mask.count_ones() == 1 { cap } else { 0 };
                for v in lo..=cap {
                    let mut child = st.clone();
                    self.apply(&mut child, mask, v);
                    if self.feasible(&child) {
                        next.push(child);
                    }
                }
            }
            layer = next;
        }
        layer
    }
}

/// `c(j, d; γ)` for every `j` in `0..=jmax`, by the pruned kernel.
///
/// The work is split across the rayon pool at the first two cells.
pub fn c_values(jmax: u64, d: u32, gamma: &Partition) -> Result<Vec<BigUint>> {
    check_length(gamma)?;
    let mut out = vec![BigUint::zero(); jmax as usize + 1];
    if gamma.is_empty() {
        out[0] = BigUint::from(1u32);
        return Ok(out);
    }
    let Some(targets) = row_targets(d, gamma) else {
        return Ok(out);
    };
    let kernel = Kernel::new(jmax, d, gamma);
    let l = gamma.len();
    let root = KernelState {
        pos: 0,
        total: 0,
        weight: Some(1),
        need: targets,
        sup: vec![0; 1 << l],
        nu: vec![0; 1 << l],
    };
    if !kernel.feasible(&root) {
        return Ok(out);
    }
    let frontier = kernel.frontier(root, 2);
    let width = jmax as usize + 1;
    let acc = frontier
        .into_par_iter()
        .map(|mut st| {
            let mut acc = vec![Accumulator::default(); width];
            kernel.run(&mut st, &mut acc);
            acc
        })
        .reduce(
            || vec![Accumulator::default(); width],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(&b) {
                    x.merge(y);
                }
                a
            },
        );
    for (o, a) in out.iter_mut().zip(&acc) {
        *o = a.value();
    }
    Ok(out)
}

/// `c(j, d; γ)`.
pub fn c_value(j: u64, d: u32, gamma: &Partition) -> Result<BigUint> {
    Ok(c_values(j, d, gamma)?.swap_remove(j as usize))
}

/// Largest `j` with a possibly nonzero `c(j, d; γ)`: every symbol lies in some row.
pub fn c_support_max(d: u32, gamma: &Partition) -> u64 {
    row_targets(d, gamma).map_or(0, |t| t.iter().sum::<i64>() as u64)
}

/// Memo table for `c(j, d; γ)`, shareable across threads.
#[derive(Debug, Default)]
pub struct CTable {
    entries: Mutex<HashMap<(u64, u32, Partition), BigUint>>,
}

impl CTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Cache key `"j|d|γ1,γ2,.."`.
    pub fn key(j: u64, d: u32, gamma: &Partition) -> String {
        format!("{j}|{d}|{}", gamma.comma_list())
    }

    pub fn parse_key(key: &str) -> Option<(u64, u32, Partition)> {
        let mut it = key.split('|');
        let j = it.next()?.parse().ok()?;
        let d = it.next()?.parse().ok()?;
        let g = it.next()?;
        if it.next().is_some() {
            return None;
        }
        let parts = if g.is_empty() {
            Vec::new()
        } else {
            g.split(',').map(|p| p.parse().ok()).collect::<Option<Vec<u32>>>()?
        };
        Some((j, d, Partition::new(parts)))
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn insert(&self, j: u64, d: u32, gamma: Partition, value: BigUint) {
        self.entries.lock().unwrap().entry((j, d, gamma)).or_insert(value);
    }

    pub fn get(&self, j: u64, d: u32, gamma: &Partition) -> Option<BigUint> {
        self.entries.lock().unwrap().get(&(j, d, gamma.clone())).cloned()
    }

    /// `c(j, d; γ)` for `j` in `0..=jmax`, computing and storing whatever is missing.
    pub fn values_up_to(&self, jmax: u64, d: u32, gamma: &Partition) -> Result<Vec<BigUint>> {
        let jmax = jmax.min(c_support_max(d, gamma));
        {
            let map = self.entries.lock().unwrap();
            let hit: Option<Vec<BigUint>> = (0..=jmax).map(|j| map.get(&(j, d, gamma.clone())).cloned()).collect();
            if let Some(v) = hit {
                return Ok(v);
            }
        }
        let values = c_values(jmax, d, gamma)?;
        let mut map = self.entries.lock().unwrap();
        for (j, v) in values.iter().enumerate() {
            map.entry((j as u64, d, gamma.clone())).or_insert_with(|| v.clone());
        }
        Ok(values)
    }

    pub fn c_value(&self, j: u64, d: u32, gamma: &Partition) -> Result<BigUint> {
        if j > c_support_max(d, gamma) {
            return Ok(BigUint::zero());
        }
        if let Some(v) = self.get(j, d, gamma) {
            return Ok(v);
        }
        Ok(self.values_up_to(j, d, gamma)?.swap_remove(j as usize))
    }

    /// Entries as `key -> decimal string`, sorted by key.
    pub fn to_strings(&self) -> BTreeMap<String, String> {
        self.entries
            .lock()
            .unwrap()
            .iter()
            .map(|((j, d, g), v)| (Self::key(*j, *d, g), v.to_string()))
            .collect()
    }
}

/// `λ_{n,d}(γ)` together with its `(j, c(j,d;γ))` decomposition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LambdaDecomposition {
    pub lambda: BigUint,
    pub terms: Vec<(u64, BigUint)>,
}

/// `λ_{n,d}(γ) = Σ_j c(j,d;γ) C(n,j) / Π m_s(γ)!`, reusing `table`.
pub fn lambda_via_c_with(table: &CTable, n: u64, d: u32, gamma: &Partition) -> Result<LambdaDecomposition> {
    if gamma.is_empty() {
        return Ok(LambdaDecomposition {
            lambda: BigUint::from(1u32),
            terms: Vec::new(),
        });
    }
    let cs = table.values_up_to(n, d, gamma)?;
    let mut sum = BigUint::zero();
    let mut terms = Vec::new();
    for (j, c) in cs.into_iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        sum += &c * binomial(n, j as i64);
        terms.push((j as u64, c));
    }
    let stab = gamma.stabilizer_order();
    if !(&sum % &stab).is_zero() {
        return Err(Error::Verification(format!(
            "tuple count {sum} for type {gamma} at (n={n}, d={d}) is not divisible by {stab}"
        )));
    }
    Ok(LambdaDecomposition {
        lambda: sum / stab,
        terms,
    })
}

/// `λ_{n,d}(γ)` through `c` values.
pub fn lambda_via_c(n: u64, d: u32, gamma: &Partition) -> Result<BigUint> {
    Ok(lambda_via_c_with(&CTable::new(), n, d, gamma)?.lambda)
}

/// Default node budget of [`lambda_direct`].
pub const DIRECT_NODE_BUDGET: u64 = 500_000_000;

/// `λ_{n,d}(γ)` by summing multinomials over every pattern of total `n`.
pub fn lambda_direct(n: u64, d: u32, gamma: &Partition) -> Result<BigUint> {
    lambda_direct_budgeted(n, d, gamma, DIRECT_NODE_BUDGET)
}

pub fn lambda_direct_budgeted(n: u64, d: u32, gamma: &Partition, node_budget: u64) -> Result<BigUint> {
    if gamma.is_empty() {
        return Ok(BigUint::from(1u32));
    }
    let mut sum = BigUint::zero();
    for_each_nu(n, d, gamma, false, Some(node_budget), |nu| sum += nu.multinomial())?;
    let stab = gamma.stabilizer_order();
    if !(&sum % &stab).is_zero() {
        return Err(Error::Verification(format!(
            "direct tuple count {sum} for type {gamma} is not divisible by {stab}"
        )));
    }
    Ok(sum / stab)
}

/// `λ_{n,d}((γ_1))` in closed form: `C(n, d + 1 - γ_1)`.
pub fn lambda_closed_l1(n: u64, d: u32, g1: u32) -> BigUint {
    binomial(n, d as i64 + 1 - g1 as i64)
}

/// `λ_{n,d}((γ_1, γ_2))` in closed form:
/// `Σ_{j'=1}^{d+1-γ1-γ2} C(d+1+j', γ1+j') C(d+1-γ1, γ2+j') C(n, d+1+j')`,
/// halved when `γ_1 = γ_2`.
pub fn lambda_closed_l2(n: u64, d: u32, g1: u32, g2: u32) -> BigUint {
    let d1 = d as i64 + 1;
    let top = d1 - g1 as i64 - g2 as i64;
    let mut sum = BigUint::zero();
    for jp in 1..=top {
        sum += binomial((d1 + jp) as u64, g1 as i64 + jp)
            * binomial((d1 - g1 as i64).max(0) as u64, g2 as i64 + jp)
            * binomial(n, d1 + jp);
    }
    if g1 == g2 {
        sum /= 2u32;
    }
    sum
}

/// `|N(n,d;γ)|`-style count of patterns, used by budget estimates in tests and the CLI.
pub fn count_patterns(j: u64, d: u32, gamma: &Partition, require_empty_zero: bool) -> Result<u64> {
    let mut count = 0u64;
    for_each_nu(j, d, gamma, require_empty_zero, None, |_| count += 1)?;
    Ok(count)
}

/// Converts a small `BigUint` for assertions and formatting.
pub fn to_u64(v: &BigUint) -> Option<u64> {
    v.to_u64()
}

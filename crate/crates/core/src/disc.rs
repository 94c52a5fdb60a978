//! Simplicial complexes encoding shared symbols of `k = 2` lattice elements,
//! and the resulting counts `λ_{d+3,d}(γ)`.
//!
//! For an element `(S_1, .., S_l)` of `L^{d+3,d}`, each symbol `t` lying in
//! two or more members gives a facet `X(S,t) = {i : t ∈ S_i}` on the vertex
//! set `{1..l}`. Two such facets meet in at most one vertex, and for every
//! `I` with `|I| >= 2` the restricted facets satisfy
//! `Σ_F (|F ∩ I| - 1) <= 2|I| - 3`. The complexes with these properties form
//! `𝒱₂(l)`. Conversely, any complex in `𝒱₂(l)` together with private
//! symbols for each member rebuilds elements, which gives
//!
//! `λ_{d+3,d}(γ) Π m_s(γ)! = Σ_{α,t} |𝒱₂(α,t)| P(γ_1+2-α_1, .., γ_l+2-α_l; t)`
//!
//! with `P(α';t) = C(d+3, t+Σα') · (t+Σα')!/(α'_1!..α'_l! t!) · t!`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use num::bigint::BigUint;
use num::Zero;
use rayon::prelude::*;

use crate::arith::{binomial, factorial, multinomial, Partition};
use crate::error::{Error, Result};

/// Largest vertex count accepted by [`count_v2`].
pub const MAX_V2_LENGTH: usize = 7;

/// Largest vertex count accepted by [`enumerate_v2`], which stores every complex.
pub const MAX_V2_LIST_LENGTH: usize = 6;

fn subset_len(mask: u32) -> u32 {
    mask.count_ones()
}

/// A simplicial complex on `{1..l}` containing every vertex, stored by its
/// facets of positive dimension as bitmasks (bit `i` for vertex `i+1`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SimplicialComplex {
    l: usize,
    facets: Vec<u32>,
}

impl SimplicialComplex {
    /// Builds the complex generated by `faces`: faces with fewer than two
    /// vertices and faces contained in another are dropped.
    pub fn new(l: usize, faces: &[u32]) -> Self {
        let limit = if l >= 32 { u32::MAX } else { (1u32 << l) - 1 };
        let mut faces: Vec<u32> = faces
            .iter()
            .map(|&f| f & limit)
            .filter(|&f| subset_len(f) >= 2)
            .collect();
        faces.sort_by_key(|&f| (subset_len(f), f));
        faces.dedup();
        let facets: Vec<u32> = faces
            .iter()
            .copied()
            .filter(|&f| !faces.iter().any(|&g| g != f && f & g == f))
            .collect();
        SimplicialComplex { l, facets }
    }

    /// Builds from 1-based vertex lists.
    pub fn from_lists(l: usize, faces: &[&[usize]]) -> Self {
        let masks: Vec<u32> = faces
            .iter()
            .map(|f| f.iter().fold(0u32, |m, &v| m | 1 << (v - 1)))
            .collect();
        Self::new(l, &masks)
    }

    pub fn vertex_count(&self) -> usize {
        self.l
    }

    /// Facets of positive dimension, ordered by size then mask.
    pub fn facets(&self) -> &[u32] {
        &self.facets
    }

    pub fn facet_lists(&self) -> Vec<Vec<usize>> {
        self.facets
            .iter()
            .map(|&f| (0..self.l).filter(|i| f >> i & 1 == 1).map(|i| i + 1).collect())
            .collect()
    }

    /// `Δ|_I = {F ∩ I}`, on the same vertex set.
    pub fn restrict(&self, mask: u32) -> Self {
        let faces: Vec<u32> = self.facets.iter().map(|&f| f & mask).collect();
        Self::new(self.l, &faces)
    }

    /// `Δ|_{[m]}` regarded as a complex on `m` vertices.
    pub fn truncate(&self, m: usize) -> Self {
        let faces: Vec<u32> = self.facets.iter().map(|&f| f & ((1u32 << m) - 1)).collect();
        Self::new(m, &faces)
    }

    /// `Σ_F dim F` over the facets of positive dimension.
    pub fn dimension_sum(&self) -> u32 {
        self.facets.iter().map(|&f| subset_len(f) - 1).sum()
    }

    /// Any two distinct facets share at most one vertex.
    pub fn is_v1(&self) -> bool {
        self.facets
            .iter()
            .enumerate()
            .all(|(a, &f)| self.facets[a + 1..].iter().all(|&g| subset_len(f & g) <= 1))
    }

    /// Membership in `𝒱₂(l)`: `2(|I| - 1) > Σ_{F ∈ 𝓕(Δ|_I)} dim F` for all `|I| > 1`.
    pub fn is_v2(&self) -> bool {
        self.is_v1()
            && (1u32..1 << self.l)
                .filter(|&i| subset_len(i) >= 2)
                .all(|i| 2 * (subset_len(i) - 1) > self.restrict(i).dimension_sum())
    }

    /// `α_i`, the number of facets containing vertex `i`.
    pub fn alpha(&self) -> Vec<u32> {
        (0..self.l)
            .map(|i| self.facets.iter().filter(|&&f| f >> i & 1 == 1).count() as u32)
            .collect()
    }
}

impl fmt::Display for SimplicialComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, facet) in self.facet_lists().iter().enumerate() {
            if n > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{{")?;
            for (m, v) in facet.iter().enumerate() {
                if m > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{v}")?;
            }
            write!(f, "}}")?;
        }
        write!(f, "}}")
    }
}

/// `|𝒱₂(α,t)|` for every profile `α` and facet count `t` on `l` vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct V2CountTable {
    l: usize,
    counts: BTreeMap<(Vec<u32>, u32), u64>,
}

impl V2CountTable {
    pub fn new(l: usize) -> Self {
        V2CountTable {
            l,
            counts: BTreeMap::new(),
        }
    }

    pub fn length(&self) -> usize {
        self.l
    }

    pub fn add(&mut self, alpha: Vec<u32>, t: u32, count: u64) {
        *self.counts.entry((alpha, t)).or_insert(0) += count;
    }

    pub fn get(&self, alpha: &[u32], t: u32) -> u64 {
        self.counts.get(&(alpha.to_vec(), t)).copied().unwrap_or(0)
    }

    /// `|𝒱₂(l)|`.
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&[u32], u32, u64)> + '_ {
        self.counts.iter().map(|((a, t), &c)| (a.as_slice(), *t, c))
    }

    pub fn max_facets(&self) -> u32 {
        self.counts.keys().map(|(_, t)| *t).max().unwrap_or(0)
    }

    /// Cache key `"v2|l|α_1,..,α_l|t"`.
    pub fn key(l: usize, alpha: &[u32], t: u32) -> String {
        let a: Vec<String> = alpha.iter().map(u32::to_string).collect();
        format!("v2|{l}|{}|{t}", a.join(","))
    }

    /// Key recording the total for `l`; its presence marks a complete table.
    pub fn total_key(l: usize) -> String {
        format!("v2|{l}|total")
    }

    pub fn parse_key(key: &str) -> Option<(usize, Vec<u32>, u32)> {
        let rest = key.strip_prefix("v2|")?;
        let mut it = rest.split('|');
        let l: usize = it.next()?.parse().ok()?;
        let a = it.next()?;
        let t: u32 = it.next()?.parse().ok()?;
        if it.next().is_some() {
            return None;
        }
        let alpha = if a.is_empty() {
            Vec::new()
        } else {
            a.split(',').map(|x| x.parse().ok()).collect::<Option<Vec<u32>>>()?
        };
        (alpha.len() == l).then_some((l, alpha, t))
    }

    /// Entries as `key -> decimal string`, including the total marker.
    pub fn to_strings(&self) -> BTreeMap<String, String> {
        let mut out: BTreeMap<String, String> = self
            .entries()
            .map(|(a, t, c)| (Self::key(self.l, a, t), c.to_string()))
            .collect();
        out.insert(Self::total_key(self.l), self.total().to_string());
        out
    }

    /// Rebuilds the table for `l` from cache entries; `None` unless the
    /// stored total marker is present and agrees with the entries.
    pub fn from_strings<'a, I>(l: usize, entries: I) -> Option<Self>
    where
        I: IntoIterator<Item = (&'a String, &'a String)>,
    {
        let mut table = V2CountTable::new(l);
        let mut total = None;
        for (k, v) in entries {
            if *k == Self::total_key(l) {
                total = v.parse::<u64>().ok();
            } else if let Some((kl, alpha, t)) = Self::parse_key(k) {
                if kl == l {
                    table.add(alpha, t, v.parse().ok()?);
                }
            }
        }
        (total? == table.total()).then_some(table)
    }
}

/// Incremental search over facet sets in canonical order. Because removing a
/// facet never breaks either defining condition, every search node is a
/// member of `𝒱₂(l)` and is visited exactly once.
struct V2Search {
    l: usize,
    candidates: Vec<u32>,
    /// `compat[c]`: candidates after `c` meeting it in at most one vertex.
    compat: Vec<u128>,
    /// For each candidate, the subsets `I` it touches and its cost `|F ∩ I| - 1`.
    costs: Vec<Vec<(u32, i32)>>,
    /// Packed `α` increment of each candidate, four bits per vertex.
    alpha_inc: Vec<u64>,
}

const ALPHA_BITS: u32 = 4;

impl V2Search {
    fn new(l: usize) -> Self {
        let mut candidates: Vec<u32> = (1u32..1 << l).filter(|&m| subset_len(m) >= 2).collect();
        candidates.sort_by_key(|&m| (subset_len(m), m));
        let compat = candidates
            .iter()
            .enumerate()
            .map(|(a, &f)| {
                candidates
                    .iter()
                    .enumerate()
                    .filter(|&(b, &g)| b > a && subset_len(f & g) <= 1)
                    .fold(0u128, |acc, (b, _)| acc | 1u128 << b)
            })
            .collect();
        let costs = candidates
            .iter()
            .map(|&f| {
                (1u32..1 << l)
                    .filter_map(|i| {
                        let c = subset_len(f & i) as i32 - 1;
                        (c >= 1).then_some((i, c))
                    })
                    .collect()
            })
            .collect();
        let alpha_inc = candidates
            .iter()
            .map(|&f| {
                (0..l)
                    .filter(|i| f >> i & 1 == 1)
                    .map(|i| 1u64 << (ALPHA_BITS * i as u32))
                    .sum()
            })
            .collect();
        V2Search {
            l,
            candidates,
            compat,
            costs,
            alpha_inc,
        }
    }

    fn initial_slack(&self) -> Vec<i32> {
        (0u32..1 << self.l).map(|i| 2 * subset_len(i) as i32 - 3).collect()
    }

    fn fits(&self, c: usize, slack: &[i32]) -> bool {
        self.costs[c].iter().all(|&(i, cost)| slack[i as usize] >= cost)
    }

    fn apply(&self, c: usize, slack: &mut [i32], sign: i32) {
        for &(i, cost) in &self.costs[c] {
            slack[i as usize] -= sign * cost;
        }
    }

    fn unpack_alpha(&self, packed: u64) -> Vec<u32> {
        (0..self.l)
            .map(|i| (packed >> (ALPHA_BITS * i as u32) & ((1 << ALPHA_BITS) - 1)) as u32)
            .collect()
    }

    fn count_from(&self, allowed: u128, slack: &mut [i32], alpha: u64, t: u32, acc: &mut HashMap<u64, u64>) {
        *acc.entry(alpha | (t as u64) << 32).or_insert(0) += 1;
        let mut rest = allowed;
        while rest != 0 {
            let c = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            if self.fits(c, slack) {
                self.apply(c, slack, 1);
                self.count_from(allowed & self.compat[c], slack, alpha + self.alpha_inc[c], t + 1, acc);
                self.apply(c, slack, -1);
            }
        }
    }

    fn list_from(&self, allowed: u128, slack: &mut [i32], chosen: &mut Vec<u32>, out: &mut Vec<SimplicialComplex>) {
        out.push(SimplicialComplex {
            l: self.l,
            facets: chosen.clone(),
        });
        let mut rest = allowed;
        while rest != 0 {
            let c = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            if self.fits(c, slack) {
                self.apply(c, slack, 1);
                chosen.push(self.candidates[c]);
                self.list_from(allowed & self.compat[c], slack, chosen, out);
                chosen.pop();
                self.apply(c, slack, -1);
            }
        }
    }

    fn all_candidates(&self) -> u128 {
        if self.candidates.len() == 128 {
            u128::MAX
        } else {
            (1u128 << self.candidates.len()) - 1
        }
    }

    fn count(&self) -> V2CountTable {
        let root_slack = self.initial_slack();
        let first: Vec<usize> = (0..self.candidates.len()).collect();
        let merged = first
            .into_par_iter()
            .map(|c| {
                let mut acc = HashMap::new();
                let mut slack = root_slack.clone();
                if self.fits(c, &slack) {
                    self.apply(c, &mut slack, 1);
                    self.count_from(self.compat[c], &mut slack, self.alpha_inc[c], 1, &mut acc);
                }
                acc
            })
            .reduce(HashMap::new, |mut a, b| {
                for (k, v) in b {
                    *a.entry(k).or_insert(0) += v;
                }
                a
            });
        let mut table = V2CountTable::new(self.l);
        table.add(vec![0; self.l], 0, 1);
        for (key, count) in merged {
            table.add(self.unpack_alpha(key & 0xffff_ffff), (key >> 32) as u32, count);
        }
        table
    }

    fn list(&self) -> Vec<SimplicialComplex> {
        let mut out = Vec::new();
        let mut slack = self.initial_slack();
        self.list_from(self.all_candidates(), &mut slack, &mut Vec::new(), &mut out);
        out.sort_by(|a, b| {
            (
                a.facets.len(),
                a.facets.iter().map(|&f| (subset_len(f), f)).collect::<Vec<_>>(),
            )
                .cmp(&(
                    b.facets.len(),
                    b.facets.iter().map(|&f| (subset_len(f), f)).collect::<Vec<_>>(),
                ))
        });
        out
    }
}

/// Every member of `𝒱₂(l)`, ordered by facet count and then facet lists.
pub fn enumerate_v2(l: usize) -> Result<Vec<SimplicialComplex>> {
    if l > MAX_V2_LIST_LENGTH {
        return Err(Error::budget(
            "listing of 𝒱₂(l)",
            format!("l = {l}"),
            MAX_V2_LIST_LENGTH,
        ));
    }
    if l == 0 {
        return Ok(vec![SimplicialComplex::new(0, &[])]);
    }
    Ok(V2Search::new(l).list())
}

/// `|𝒱₂(α,t)|` for all `(α,t)`, without storing the complexes.
pub fn count_v2(l: usize) -> Result<V2CountTable> {
    if l > MAX_V2_LENGTH {
        return Err(Error::budget("enumeration of 𝒱₂(l)", format!("l = {l}"), MAX_V2_LENGTH));
    }
    if l == 0 {
        let mut t = V2CountTable::new(0);
        t.add(Vec::new(), 0, 1);
        return Ok(t);
    }
    Ok(V2Search::new(l).count())
}

/// Memo of count tables by vertex count.
#[derive(Debug, Default)]
pub struct V2Cache {
    tables: Mutex<HashMap<usize, Arc<V2CountTable>>>,
}

impl V2Cache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Process-wide cache.
    pub fn global() -> &'static V2Cache {
        static CACHE: OnceLock<V2Cache> = OnceLock::new();
        CACHE.get_or_init(V2Cache::new)
    }

    pub fn insert(&self, table: V2CountTable) {
        self.tables
            .lock()
            .unwrap()
            .entry(table.length())
            .or_insert_with(|| Arc::new(table));
    }

    pub fn cached(&self, l: usize) -> Option<Arc<V2CountTable>> {
        self.tables.lock().unwrap().get(&l).cloned()
    }

    pub fn table(&self, l: usize) -> Result<Arc<V2CountTable>> {
        if let Some(t) = self.cached(l) {
            return Ok(t);
        }
        let table = Arc::new(count_v2(l)?);
        Ok(self.tables.lock().unwrap().entry(l).or_insert(table).clone())
    }

    pub fn lengths(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.tables.lock().unwrap().keys().copied().collect();
        v.sort_unstable();
        v
    }
}

/// `P(α';t) = C(d+3, t+Σα') · multinomial(α'_1, .., α'_l, t) · t!`.
pub fn p_factor(alpha_prime: &[u32], t: u32, d: u32) -> BigUint {
    let s: u64 = alpha_prime.iter().map(|&a| a as u64).sum::<u64>() + t as u64;
    let outer = binomial(d as u64 + 3, s as i64);
    if outer.is_zero() {
        return outer;
    }
    let mut parts: Vec<u64> = alpha_prime.iter().map(|&a| a as u64).collect();
    parts.push(t as u64);
    outer * multinomial(&parts) * factorial(t as usize)
}

/// `λ_{d+3,d}(γ)` from a count table on `length(γ)` vertices.
pub fn lambda_disc_with(table: &V2CountTable, d: u32, gamma: &Partition) -> Result<BigUint> {
    if gamma.is_empty() {
        return Ok(BigUint::from(1u32));
    }
    if gamma.parts().contains(&0) || table.length() != gamma.len() {
        return Err(Error::InvalidInput(format!(
            "type {gamma} does not match a table on {} vertices",
            table.length()
        )));
    }
    let mut sum = BigUint::zero();
    let mut alpha_prime = vec![0u32; gamma.len()];
    'entries: for (alpha, t, count) in table.entries() {
        for (i, (&g, &a)) in gamma.parts().iter().zip(alpha).enumerate() {
            if a > g + 2 {
                continue 'entries;
            }
            alpha_prime[i] = g + 2 - a;
        }
        let p = p_factor(&alpha_prime, t, d);
        if !p.is_zero() {
            sum += p * count;
        }
    }
    let stab = gamma.stabilizer_order();
    if !(&sum % &stab).is_zero() {
        return Err(Error::Verification(format!(
            "tuple count {sum} for type {gamma} at d={d} is not divisible by {stab}"
        )));
    }
    Ok(sum / stab)
}

/// `λ_{d+3,d}(γ)` for `weight(γ) <= d`, using the process-wide table cache.
pub fn lambda_disc(d: u32, gamma: &Partition) -> Result<BigUint> {
    lambda_disc_in(V2Cache::global(), d, gamma)
}

pub fn lambda_disc_in(cache: &V2Cache, d: u32, gamma: &Partition) -> Result<BigUint> {
    if gamma.weight() > d {
        return Err(Error::InvalidInput(format!("type {gamma} has weight above d = {d}")));
    }
    if gamma.is_empty() {
        return Ok(BigUint::from(1u32));
    }
    lambda_disc_with(cache.table(gamma.len())?.as_ref(), d, gamma)
}

/// Table entry `λ_{d+3,d}(γ)` for any weight: above `d` only the maximum
/// `(d+1)` is present.
pub fn table_entry(d: u32, gamma: &Partition) -> Result<BigUint> {
    if gamma.weight() > d {
        let top = gamma.len() == 1 && gamma.parts()[0] == d + 1;
        return Ok(BigUint::from(top as u32));
    }
    lambda_disc(d, gamma)
}

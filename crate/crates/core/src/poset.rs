//! Finite ranked posets stored as down-set bitsets, with Möbius inversion,
//! order ideals, direct products and an isomorphism search.

use std::collections::HashMap;

use num::bigint::BigInt;
use num::{One, Zero};

#[derive(Debug, Clone, PartialEq, Eq)]
struct BitRow(Vec<u64>);

impl BitRow {
    fn new(len: usize) -> Self {
        BitRow(vec![0; len.div_ceil(64)])
    }

    #[inline]
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    #[inline]
    fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + b)
            })
        })
    }
}

/// A finite poset with a rank function. Elements are kept sorted by rank so
/// every strict lower bound of an element has a smaller index.
#[derive(Debug, Clone)]
pub struct RankedPoset<E> {
    elements: Vec<E>,
    ranks: Vec<usize>,
    /// `down[x]` holds every `y <= x`, including `x`.
    down: Vec<BitRow>,
}

impl<E> RankedPoset<E> {
    /// Builds the poset from elements, their ranks and a `<=` predicate.
    ///
    /// The predicate is only queried for pairs with `rank(a) < rank(b)`;
    /// distinct elements of equal rank are treated as incomparable.
    pub fn from_order<F>(elements: Vec<E>, ranks: Vec<usize>, le: F) -> Self
    where
        F: Fn(&E, &E) -> bool,
    {
        assert_eq!(elements.len(), ranks.len());
        let mut idx: Vec<usize> = (0..elements.len()).collect();
        idx.sort_by_key(|&i| ranks[i]);
        let mut slots: Vec<Option<E>> = elements.into_iter().map(Some).collect();
        let elements: Vec<E> = idx.iter().map(|&i| slots[i].take().unwrap()).collect();
        let ranks: Vec<usize> = idx.iter().map(|&i| ranks[i]).collect();
        let n = elements.len();
        let mut down = Vec::with_capacity(n);
        for x in 0..n {
            let mut row = BitRow::new(n);
            row.set(x);
            for y in 0..x {
                if ranks[y] < ranks[x] && le(&elements[y], &elements[x]) {
                    row.set(y);
                }
            }
            down.push(row);
        }
        RankedPoset { elements, ranks, down }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[E] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &E {
        &self.elements[i]
    }

    pub fn rank(&self, i: usize) -> usize {
        self.ranks[i]
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn max_rank(&self) -> usize {
        self.ranks.iter().copied().max().unwrap_or(0)
    }

    /// Number of elements at each rank `0..=max_rank`.
    pub fn rank_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.max_rank() + 1];
        for &r in &self.ranks {
            sizes[r] += 1;
        }
        sizes
    }

    #[inline]
    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.down[b].get(a)
    }

    /// Strict lower bounds of `x`.
    pub fn below(&self, x: usize) -> impl Iterator<Item = usize> + '_ {
        self.down[x].iter().filter(move |&y| y != x)
    }

    pub fn position(&self, e: &E) -> Option<usize>
    where
        E: PartialEq,
    {
        self.elements.iter().position(|x| x == e)
    }

    /// The unique minimal element, if there is one.
    pub fn minimum(&self) -> Option<usize> {
        let minimal: Vec<usize> = (0..self.len()).filter(|&x| self.down[x].count() == 1).collect();
        match minimal.as_slice() {
            [m] => Some(*m),
            _ => None,
        }
    }

    /// The unique maximal element, if there is one.
    pub fn maximum(&self) -> Option<usize> {
        let n = self.len();
        let candidates: Vec<usize> = (0..n).filter(|&x| self.down[x].count() == n).collect();
        candidates.first().copied()
    }

    /// `μ(0̂, x)` for every element, by the defining recursion.
    ///
    /// Panics if the poset has no unique minimum.
    pub fn mobius(&self) -> Vec<BigInt> {
        let bottom = self.minimum().expect("mobius requires a unique minimum");
        let mut mu = vec![BigInt::zero(); self.len()];
        mu[bottom] = BigInt::one();
        for x in 0..self.len() {
            if x == bottom {
                continue;
            }
            let mut acc = BigInt::zero();
            for y in self.below(x) {
                acc += &mu[y];
            }
            mu[x] = -acc;
        }
        mu
    }

    /// The principal order ideal `{y : y <= x}` as its own poset.
    pub fn ideal(&self, x: usize) -> RankedPoset<E>
    where
        E: Clone,
    {
        let members: Vec<usize> = self.down[x].iter().collect();
        self.subposet(&members)
    }

    /// Induced subposet on `members` (any order; indices into `self`).
    pub fn subposet(&self, members: &[usize]) -> RankedPoset<E>
    where
        E: Clone,
    {
        let mut members = members.to_vec();
        members.sort_unstable();
        let n = members.len();
        let mut down = Vec::with_capacity(n);
        for (i, &x) in members.iter().enumerate() {
            let mut row = BitRow::new(n);
            for (j, &y) in members[..=i].iter().enumerate() {
                if self.leq(y, x) {
                    row.set(j);
                }
            }
            down.push(row);
        }
        RankedPoset {
            elements: members.iter().map(|&i| self.elements[i].clone()).collect(),
            ranks: members.iter().map(|&i| self.ranks[i]).collect(),
            down,
        }
    }

    /// Forgets the element labels.
    pub fn shape(&self) -> RankedPoset<usize> {
        RankedPoset {
            elements: (0..self.len()).collect(),
            ranks: self.ranks.clone(),
            down: self.down.clone(),
        }
    }
}

/// Direct product of posets; elements are index tuples into the factors and
/// the rank is the sum of factor ranks.
pub fn product<E>(factors: &[&RankedPoset<E>]) -> RankedPoset<Vec<usize>> {
    let mut tuples: Vec<Vec<usize>> = vec![Vec::new()];
    for f in factors {
        let mut next = Vec::with_capacity(tuples.len() * f.len());
        for t in &tuples {
            for i in 0..f.len() {
                let mut t2 = t.clone();
                t2.push(i);
                next.push(t2);
            }
        }
        tuples = next;
    }
    let ranks: Vec<usize> = tuples
        .iter()
        .map(|t| t.iter().zip(factors).map(|(&i, f)| f.rank(i)).sum())
        .collect();
    RankedPoset::from_order(tuples, ranks, |a, b| {
        a.iter().zip(b).zip(factors).all(|((&x, &y), f)| f.leq(x, y))
    })
}

/// Stable colour refinement over the disjoint union of two posets.
fn refine_colours<A, B>(a: &RankedPoset<A>, b: &RankedPoset<B>) -> (Vec<usize>, Vec<usize>) {
    fn initial<E>(p: &RankedPoset<E>) -> Vec<(usize, usize, usize)> {
        let n = p.len();
        let mut up = vec![0usize; n];
        for x in 0..n {
            for y in p.down[x].iter() {
                up[y] += 1;
            }
        }
        (0..n).map(|x| (p.rank(x), p.down[x].count(), up[x])).collect()
    }

    let mut table: HashMap<(usize, usize, usize), usize> = HashMap::new();
    let mut intern = |key: (usize, usize, usize)| {
        let next = table.len();
        *table.entry(key).or_insert(next)
    };
    let mut ca: Vec<usize> = initial(a).into_iter().map(&mut intern).collect();
    let mut cb: Vec<usize> = initial(b).into_iter().map(&mut intern).collect();

    let mut classes = table.len();
    for _ in 0..8 {
        let mut table: HashMap<(usize, Vec<usize>, Vec<usize>), usize> = HashMap::new();
        let mut step = |p_down: &Vec<BitRow>, colours: &[usize]| -> Vec<usize> {
            let n = colours.len();
            let mut ups: Vec<Vec<usize>> = vec![Vec::new(); n];
            let mut downs: Vec<Vec<usize>> = vec![Vec::new(); n];
            for x in 0..n {
                for y in p_down[x].iter() {
                    if y != x {
                        downs[x].push(colours[y]);
                        ups[y].push(colours[x]);
                    }
                }
            }
            (0..n)
                .map(|x| {
                    let mut d = std::mem::take(&mut downs[x]);
                    let mut u = std::mem::take(&mut ups[x]);
                    d.sort_unstable();
                    u.sort_unstable();
                    let next = table.len();
                    *table.entry((colours[x], d, u)).or_insert(next)
                })
                .collect()
        };
        let na = step(&a.down, &ca);
        let nb = step(&b.down, &cb);
        ca = na;
        cb = nb;
        let new_classes = table.len();
        if new_classes == classes {
            break;
        }
        classes = new_classes;
    }
    (ca, cb)
}

/// Searches for a rank-preserving order isomorphism between two posets.
pub fn find_isomorphism<A, B>(a: &RankedPoset<A>, b: &RankedPoset<B>) -> Option<Vec<usize>> {
    if a.len() != b.len() || a.rank_sizes() != b.rank_sizes() {
        return None;
    }
    let (ca, cb) = refine_colours(a, b);
    let mut hist: HashMap<usize, isize> = HashMap::new();
    for &c in &ca {
        *hist.entry(c).or_default() += 1;
    }
    for &c in &cb {
        *hist.entry(c).or_default() -= 1;
    }
    if hist.values().any(|&v| v != 0) {
        return None;
    }

    let n = a.len();
    let mut by_colour: HashMap<usize, Vec<usize>> = HashMap::new();
    for (y, &c) in cb.iter().enumerate() {
        by_colour.entry(c).or_default().push(y);
    }
    // Elements are already sorted by rank, so every element's lower bounds
    // are mapped before it.
    let order: Vec<usize> = (0..n).collect();
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];

    #[allow(clippy::too_many_arguments)]
    fn search<A, B>(
        pos: usize,
        order: &[usize],
        a: &RankedPoset<A>,
        b: &RankedPoset<B>,
        ca: &[usize],
        by_colour: &HashMap<usize, Vec<usize>>,
        map: &mut [usize],
        used: &mut [bool],
    ) -> bool {
        if pos == order.len() {
            return true;
        }
        let x = order[pos];
        for &y in &by_colour[&ca[x]] {
            if used[y] {
                continue;
            }
            let consistent = order[..pos].iter().all(|&x2| {
                let y2 = map[x2];
                a.leq(x2, x) == b.leq(y2, y) && a.leq(x, x2) == b.leq(y, y2)
            });
            if !consistent {
                continue;
            }
            map[x] = y;
            used[y] = true;
            if search(pos + 1, order, a, b, ca, by_colour, map, used) {
                return true;
            }
            used[y] = false;
            map[x] = usize::MAX;
        }
        false
    }

    if search(0, &order, a, b, &ca, &by_colour, &mut map, &mut used) {
        Some(map)
    } else {
        None
    }
}

pub fn is_isomorphic<A, B>(a: &RankedPoset<A>, b: &RankedPoset<B>) -> bool {
    find_isomorphism(a, b).is_some()
}

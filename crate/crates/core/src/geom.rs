//! Geometric check: the arrangement spanned by random points, built with
//! exact rational arithmetic.
//!
//! A flat is stored as the reduced row-echelon form of its equations
//! `a · x + c = 0`, written as rows `(a_1, .., a_d, c)`. Intersections are
//! computed by stacking rows; an inconsistent system is the empty set, which
//! is adjoined as the maximum.

use std::collections::{BTreeMap, HashMap};

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arith::{IntegerPolynomial, Partition};
use crate::charpoly::{Engine, LambdaSource};
use crate::error::{Error, Result};
use crate::poset::RankedPoset;

pub type RationalPoint = Vec<BigRational>;

/// Coordinates are drawn from `[-COORD_RANGE, COORD_RANGE]`.
pub const COORD_RANGE: i64 = 1_000_000;

/// Redraws allowed while looking for a generic sample.
pub const MAX_RETRIES: usize = 100;

/// Largest lattice the oracle will build.
pub const MAX_FLATS: usize = 50_000;

type Row = Vec<BigRational>;

/// Reduced row-echelon form with unit pivots; zero rows dropped.
fn rref(mut rows: Vec<Row>) -> Vec<Row> {
    let cols = rows.first().map_or(0, Vec::len);
    let mut pivot_row = 0;
    for col in 0..cols {
        let Some(p) = (pivot_row..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(pivot_row, p);
        let inv = rows[pivot_row][col].recip();
        for x in rows[pivot_row].iter_mut() {
            *x *= &inv;
        }
        let pivot = rows[pivot_row].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != pivot_row && !row[col].is_zero() {
                let f = row[col].clone();
                for (x, p) in row[col..cols].iter_mut().zip(&pivot[col..cols]) {
                    *x -= &f * p;
                }
            }
        }
        pivot_row += 1;
        if pivot_row == rows.len() {
            break;
        }
    }
    rows.truncate(pivot_row);
    rows
}

/// An affine flat in canonical form, or the empty set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AffineFlat {
    Equations(Vec<Row>),
    Empty,
}

impl AffineFlat {
    /// The whole space.
    pub fn space() -> Self {
        AffineFlat::Equations(Vec::new())
    }

    fn from_rows(rows: Vec<Row>) -> Self {
        let rows = rref(rows);
        let inconsistent = rows
            .iter()
            .any(|r| r[..r.len() - 1].iter().all(Zero::is_zero) && !r[r.len() - 1].is_zero());
        if inconsistent {
            AffineFlat::Empty
        } else {
            AffineFlat::Equations(rows)
        }
    }

    /// Number of independent equations; `None` for the empty set.
    pub fn codim(&self) -> Option<usize> {
        match self {
            AffineFlat::Equations(rows) => Some(rows.len()),
            AffineFlat::Empty => None,
        }
    }

    pub fn intersect(&self, other: &AffineFlat) -> AffineFlat {
        match (self, other) {
            (AffineFlat::Equations(a), AffineFlat::Equations(b)) => {
                AffineFlat::from_rows(a.iter().chain(b).cloned().collect())
            }
            _ => AffineFlat::Empty,
        }
    }

    /// Set containment `self ⊆ other`.
    pub fn is_inside(&self, other: &AffineFlat) -> bool {
        match (self, other) {
            (AffineFlat::Empty, _) => true,
            (_, AffineFlat::Empty) => false,
            (AffineFlat::Equations(a), AffineFlat::Equations(b)) => {
                b.is_empty() || rref(a.iter().chain(b).cloned().collect()).len() == a.len()
            }
        }
    }

    /// The affine hull of `points` (all of the same dimension).
    pub fn affine_hull(points: &[&RationalPoint], dim: usize) -> AffineFlat {
        // Equations (a, c) with a · p + c = 0 for every p: the null space of [p | 1].
        let rows: Vec<Row> = points
            .iter()
            .map(|p| p.iter().cloned().chain(std::iter::once(BigRational::one())).collect())
            .collect();
        let reduced = if rows.is_empty() { Vec::new() } else { rref(rows) };
        let mut pivots = Vec::new();
        for r in &reduced {
            pivots.push(r.iter().position(|x| !x.is_zero()).expect("nonzero row"));
        }
        let mut eqs = Vec::new();
        for free in (0..=dim).filter(|c| !pivots.contains(c)) {
            let mut v = vec![BigRational::zero(); dim + 1];
            v[free] = BigRational::one();
            for (r, &pc) in reduced.iter().zip(&pivots) {
                v[pc] = -r[free].clone();
            }
            eqs.push(v);
        }
        AffineFlat::from_rows(eqs)
    }
}

fn affinely_independent(points: &[&RationalPoint]) -> bool {
    let rows: Vec<Row> = points
        .iter()
        .map(|p| p.iter().cloned().chain(std::iter::once(BigRational::one())).collect())
        .collect();
    rref(rows).len() == points.len()
}

fn subsets(n: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, size, cur, out);
            cur.pop();
        }
    }
    rec(0, n, size, &mut cur, &mut out);
    out
}

/// `n` integer points in `d`-space with every `d+1` of them affinely independent.
pub fn sample_generic_points(n: usize, d: usize, seed: u64) -> Result<Vec<RationalPoint>> {
    if d == 0 || n <= d {
        return Err(Error::InvalidInput(format!("need n > d >= 1, got n={n}, d={d}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups = subsets(n, d + 1);
    for _ in 0..MAX_RETRIES {
        let points: Vec<RationalPoint> = (0..n)
            .map(|_| {
                (0..d)
                    .map(|_| BigRational::from_integer(BigInt::from(rng.gen_range(-COORD_RANGE..=COORD_RANGE))))
                    .collect()
            })
            .collect();
        let ok = groups.iter().all(|g| {
            let pts: Vec<&RationalPoint> = g.iter().map(|&i| &points[i]).collect();
            affinely_independent(&pts)
        });
        if ok {
            return Ok(points);
        }
    }
    Err(Error::Degenerate(format!(
        "no generic sample after {MAX_RETRIES} draws (seed {seed})"
    )))
}

/// The intersection lattice of the arrangement of hyperplanes through `d`
/// of the points, ranked by codimension, with the empty set on top.
#[derive(Debug, Clone)]
pub struct ArrangementLattice {
    pub n: usize,
    pub d: usize,
    pub hyperplane_count: usize,
    pub poset: RankedPoset<AffineFlat>,
    /// Geometric type of each non-maximal flat.
    pub types: Vec<Option<Partition>>,
}

impl ArrangementLattice {
    pub fn rank_sizes(&self) -> Vec<usize> {
        self.poset.rank_sizes()
    }

    pub fn type_counts(&self) -> BTreeMap<Partition, u64> {
        let mut out = BTreeMap::new();
        for g in self.types.iter().flatten() {
            *out.entry(g.clone()).or_insert(0) += 1;
        }
        out
    }

    pub fn mobius(&self) -> Vec<BigInt> {
        self.poset.mobius()
    }

    /// `Σ_x μ(x) t^{d+1-rank(x)}`.
    pub fn char_poly(&self) -> IntegerPolynomial {
        let mu = self.mobius();
        let mut p = IntegerPolynomial::zero();
        for (i, m) in mu.iter().enumerate() {
            p.add_term(self.d + 1 - self.poset.rank(i), m);
        }
        p
    }

    pub fn mu_max(&self) -> BigInt {
        let top = self.poset.maximum().expect("top is adjoined");
        self.mobius()[top].clone()
    }
}

/// Builds the lattice by intersecting flats with hyperplanes one level at a time.
pub fn build_arrangement_lattice(points: &[RationalPoint]) -> Result<ArrangementLattice> {
    let n = points.len();
    let d = points.first().map_or(0, Vec::len);
    if d == 0 || n <= d {
        return Err(Error::InvalidInput(format!("need n > d >= 1, got n={n}, d={d}")));
    }
    let mut hyperplanes = Vec::new();
    let mut seen = HashMap::new();
    for s in subsets(n, d) {
        let pts: Vec<&RationalPoint> = s.iter().map(|&i| &points[i]).collect();
        let h = AffineFlat::affine_hull(&pts, d);
        if h.codim() != Some(1) || seen.insert(h.clone(), ()).is_some() {
            return Err(Error::Degenerate(format!(
                "points {s:?} do not span a distinct hyperplane"
            )));
        }
        hyperplanes.push(h);
    }

    let mut flats = vec![AffineFlat::space()];
    let mut ranks = vec![0usize];
    let mut index: HashMap<AffineFlat, usize> = HashMap::new();
    index.insert(AffineFlat::space(), 0);
    let mut level = vec![0usize];
    let mut has_empty = false;
    for r in 0..=d {
        let mut next = Vec::new();
        for &f in &level {
            for h in &hyperplanes {
                let x = flats[f].intersect(h);
                match x.codim() {
                    None => has_empty = true,
                    Some(c) if c == r + 1 && !index.contains_key(&x) => {
                        index.insert(x.clone(), flats.len());
                        next.push(flats.len());
                        flats.push(x);
                        ranks.push(r + 1);
                        if flats.len() > MAX_FLATS {
                            return Err(Error::budget("arrangement lattice", flats.len(), MAX_FLATS));
                        }
                    }
                    _ => {}
                }
            }
        }
        level = next;
    }
    if !has_empty {
        return Err(Error::Degenerate("hyperplanes have a common point".into()));
    }
    flats.push(AffineFlat::Empty);
    ranks.push(d + 1);

    // Hulls of every point set of size 1..=d, for the geometric types.
    let hulls: Vec<(usize, AffineFlat)> = (1..=d)
        .flat_map(|m| subsets(n, m))
        .map(|s| {
            let mask = s.iter().fold(0usize, |m, &i| m | 1 << i);
            let pts: Vec<&RationalPoint> = s.iter().map(|&i| &points[i]).collect();
            (mask, AffineFlat::affine_hull(&pts, d))
        })
        .collect();
    let types = flats
        .iter()
        .map(|x| {
            if matches!(x, AffineFlat::Empty) || x.codim() == Some(0) {
                return (x.codim() == Some(0)).then(Partition::empty);
            }
            let containing: Vec<usize> = hulls.iter().filter(|(_, h)| x.is_inside(h)).map(|(m, _)| *m).collect();
            let minimal: Vec<usize> = containing
                .iter()
                .copied()
                .filter(|&m| !containing.iter().any(|&o| o != m && o & m == o))
                .collect();
            Some(Partition::new(
                minimal
                    .iter()
                    .map(|m| (d + 1 - m.count_ones() as usize) as u32)
                    .collect(),
            ))
        })
        .collect();

    let poset = RankedPoset::from_order(flats, ranks, |a, b| b.is_inside(a));
    // from_order sorts by rank; our construction is already rank-sorted.
    Ok(ArrangementLattice {
        n,
        d,
        hyperplane_count: hyperplanes.len(),
        poset,
        types,
    })
}

/// What one seed produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedResult {
    pub seed: u64,
    pub rank_sizes: Vec<usize>,
    pub type_counts: BTreeMap<Partition, u64>,
    pub mu_max: BigInt,
    pub char_poly: IntegerPolynomial,
    /// Every flat's Möbius value equals the product formula for its type.
    pub mobius_matches_types: bool,
}

/// Comparison of the geometric lattices with the counting engine.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub n: usize,
    pub d: usize,
    pub seeds: Vec<SeedResult>,
    pub seeds_agree: bool,
    pub expected_rank_sizes: Vec<usize>,
    pub expected_types: BTreeMap<Partition, u64>,
    pub expected_char_poly: IntegerPolynomial,
    pub rank_sizes_match: bool,
    pub types_match: bool,
    pub mobius_match: bool,
    pub char_poly_match: bool,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.seeds_agree && self.rank_sizes_match && self.types_match && self.mobius_match && self.char_poly_match
    }
}

fn run_seed(engine: &Engine, n: usize, d: usize, seed: u64) -> Result<SeedResult> {
    let points = sample_generic_points(n, d, seed)?;
    let lattice = build_arrangement_lattice(&points)?;
    let mu = lattice.mobius();
    let mut mobius_matches_types = true;
    for (i, g) in lattice.types.iter().enumerate() {
        if let Some(g) = g {
            let expect = engine.mu_of_type(n as u32, d as u32, g, LambdaSource::Counting)?;
            if mu[i] != expect {
                mobius_matches_types = false;
            }
        }
    }
    Ok(SeedResult {
        seed,
        rank_sizes: lattice.rank_sizes(),
        type_counts: lattice.type_counts(),
        mu_max: lattice.mu_max(),
        char_poly: lattice.char_poly(),
        mobius_matches_types,
    })
}

fn seed_summary(r: &SeedResult) -> (&Vec<usize>, &BTreeMap<Partition, u64>, &BigInt, &IntegerPolynomial) {
    (&r.rank_sizes, &r.type_counts, &r.mu_max, &r.char_poly)
}

/// Builds the lattice for each seed and compares with `char_poly(n, d)`.
///
/// A seed whose sample is degenerate is replaced by a fresh one. If seeds
/// disagree among themselves the whole set is redrawn, up to three rounds.
pub fn oracle_char_poly(n: usize, d: usize, seeds: &[u64]) -> Result<OracleReport> {
    if n > 8 || d > 3 {
        return Err(Error::budget(
            "geometric oracle",
            format!("n={n}, d={d}"),
            "n <= 8, d <= 3",
        ));
    }
    let engine = Engine::new();
    let expected = engine.char_poly(n as u32, d as u32, LambdaSource::Counting)?;
    let expected_rank_sizes: Vec<usize> = expected
        .rank_sizes()
        .iter()
        .map(|v| v.to_string().parse().expect("small"))
        .collect();
    let expected_types: BTreeMap<Partition, u64> = expected
        .types
        .iter()
        .filter(|e| !e.lambda.is_zero())
        .map(|e| (e.gamma.clone(), e.lambda.to_string().parse().expect("small")))
        .collect();

    let mut results = Vec::new();
    for round in 0..3u64 {
        results.clear();
        for &s in seeds {
            let mut seed = s.wrapping_add(round.wrapping_mul(0x9e37_79b9));
            let mut attempt = 0;
            loop {
                match run_seed(&engine, n, d, seed) {
                    Ok(r) => {
                        results.push(r);
                        break;
                    }
                    Err(Error::Degenerate(_)) if attempt < MAX_RETRIES => {
                        attempt += 1;
                        seed = seed.wrapping_add(0x1000_0000_0000);
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        if results.windows(2).all(|w| seed_summary(&w[0]) == seed_summary(&w[1])) {
            break;
        }
    }
    let seeds_agree = results.windows(2).all(|w| seed_summary(&w[0]) == seed_summary(&w[1]));
    Ok(OracleReport {
        n,
        d,
        seeds_agree,
        rank_sizes_match: results.iter().all(|r| r.rank_sizes == expected_rank_sizes),
        types_match: results.iter().all(|r| r.type_counts == expected_types),
        mobius_match: results
            .iter()
            .all(|r| r.mobius_matches_types && r.mu_max == expected.mu_max),
        char_poly_match: results.iter().all(|r| r.char_poly == expected.cone),
        seeds: results,
        expected_rank_sizes,
        expected_types,
        expected_char_poly: expected.cone,
    })
}

/// `|x|` of the largest coordinate, used in tests to check the sampling range.
pub fn max_abs_coordinate(points: &[RationalPoint]) -> BigRational {
    points
        .iter()
        .flatten()
        .map(|x| x.abs())
        .fold(BigRational::zero(), |a, b| if b > a { b } else { a })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(v: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(v))
    }

    #[test]
    fn affine_hull_of_two_points_in_plane() {
        let a = vec![q(0), q(0)];
        let b = vec![q(1), q(1)];
        let line = AffineFlat::affine_hull(&[&a, &b], 2);
        assert_eq!(line.codim(), Some(1));
        let p = AffineFlat::affine_hull(&[&vec![q(2), q(2)]], 2);
        assert!(p.is_inside(&line));
        let off = AffineFlat::affine_hull(&[&vec![q(2), q(3)]], 2);
        assert!(!off.is_inside(&line));
        let parallel = AffineFlat::affine_hull(&[&vec![q(0), q(1)], &vec![q(1), q(2)]], 2);
        assert_eq!(line.intersect(&parallel), AffineFlat::Empty);
    }

    #[test]
    fn sampling_is_deterministic_and_generic() {
        let a = sample_generic_points(4, 2, 11).unwrap();
        let b = sample_generic_points(4, 2, 11).unwrap();
        assert_eq!(a, b);
        assert!(max_abs_coordinate(&a) <= q(COORD_RANGE));
        for g in subsets(4, 3) {
            let pts: Vec<&RationalPoint> = g.iter().map(|&i| &a[i]).collect();
            assert!(affinely_independent(&pts));
        }
        assert!(sample_generic_points(2, 2, 1).is_err());
        assert!(sample_generic_points(3, 2, 1).is_ok());
    }

    #[test]
    fn four_points_in_the_plane() {
        let pts = sample_generic_points(4, 2, 3).unwrap();
        let l = build_arrangement_lattice(&pts).unwrap();
        assert_eq!(l.hyperplane_count, 6);
        assert_eq!(l.rank_sizes(), vec![1, 6, 7, 1]);
        assert_eq!(l.mu_max(), BigInt::from(-6));
        assert_eq!(l.char_poly(), IntegerPolynomial::from_i64_ascending(&[-6, 11, -6, 1]));
    }

    #[test]
    fn boolean_shape() {
        for d in 1..=3usize {
            let pts = sample_generic_points(d + 1, d, 5).unwrap();
            let l = build_arrangement_lattice(&pts).unwrap();
            let expect: Vec<usize> = (0..=d + 1)
                .map(|r| {
                    crate::arith::binomial(d as u64 + 1, r as i64)
                        .to_string()
                        .parse()
                        .unwrap()
                })
                .collect();
            assert_eq!(l.rank_sizes(), expect);
        }
    }

    #[test]
    fn degenerate_points_are_reported() {
        let pts = vec![vec![q(0), q(0)], vec![q(1), q(1)], vec![q(2), q(2)], vec![q(0), q(5)]];
        assert!(matches!(build_arrangement_lattice(&pts), Err(Error::Degenerate(_))));
    }

    #[test]
    fn oracle_small_cases() {
        let r = oracle_char_poly(4, 1, &[1, 2, 3]).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.seeds[0].char_poly, IntegerPolynomial::from_i64_ascending(&[3, -4, 1]));
        let r = oracle_char_poly(5, 2, &[1, 2, 3]).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.seeds[0].rank_sizes, vec![1, 10, 20, 1]);
    }
}

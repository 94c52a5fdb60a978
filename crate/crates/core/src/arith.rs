//! Exact integer helpers: binomials, multinomials, integer partitions and
//! polynomials with big-integer coefficients.

use std::fmt;
use std::sync::OnceLock;

use num::bigint::{BigInt, BigUint};
use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

/// Number of factorials kept in the process-wide table.
pub const FACTORIAL_CACHE_LIMIT: usize = 1024;

static FACTORIALS: OnceLock<Vec<BigUint>> = OnceLock::new();

fn factorial_table() -> &'static [BigUint] {
    FACTORIALS.get_or_init(|| {
        let mut table = Vec::with_capacity(FACTORIAL_CACHE_LIMIT + 1);
        let mut acc = BigUint::one();
        table.push(acc.clone());
        for i in 1..=FACTORIAL_CACHE_LIMIT {
            acc *= i as u64;
            table.push(acc.clone());
        }
        table
    })
}

/// `n!`, served from the shared table when `n <= FACTORIAL_CACHE_LIMIT`.
pub fn factorial(n: usize) -> BigUint {
    if n <= FACTORIAL_CACHE_LIMIT {
        return factorial_table()[n].clone();
    }
    let mut acc = factorial_table()[FACTORIAL_CACHE_LIMIT].clone();
    for i in FACTORIAL_CACHE_LIMIT + 1..=n {
        acc *= i as u64;
    }
    acc
}

/// Binomial coefficient `C(n, k)`; zero when `k < 0` or `k > n`.
pub fn binomial(n: u64, k: i64) -> BigUint {
    if k < 0 || k as u64 > n {
        return BigUint::zero();
    }
    let k = (k as u64).min(n - k as u64);
    let mut acc = BigUint::one();
    for i in 1..=k {
        acc *= n - k + i;
        acc /= i;
    }
    acc
}

/// Signed convenience wrapper around [`binomial`].
pub fn binomial_int(n: u64, k: i64) -> BigInt {
    BigInt::from(binomial(n, k))
}

/// `(Σ parts)! / Π parts_i!`.
pub fn multinomial(parts: &[u64]) -> BigUint {
    // Product of binomials C(s_1 + .. + s_i, s_i) avoids the big division.
    let mut total = 0u64;
    let mut acc = BigUint::one();
    for &p in parts {
        total += p;
        acc *= binomial(total, p as i64);
    }
    acc
}

/// Small exact binomial table in `u128`, used by the hot counting loops.
#[derive(Debug, Clone)]
pub struct SmallBinomials {
    rows: Vec<Vec<u128>>,
}

impl SmallBinomials {
    /// Table of `C(n, k)` for `n <= max_n`. Entries that overflow `u128` are stored as 0.
    pub fn new(max_n: usize) -> Self {
        let mut rows: Vec<Vec<u128>> = Vec::with_capacity(max_n + 1);
        for n in 0..=max_n {
            let mut row = vec![0u128; n + 1];
            row[0] = 1;
            row[n] = 1;
            for k in 1..n {
                let prev = &rows[n - 1];
                row[k] = match (prev[k - 1], prev[k]) {
                    (0, _) | (_, 0) => 0,
                    (a, b) => a.checked_add(b).unwrap_or(0),
                };
            }
            rows.push(row);
        }
        SmallBinomials { rows }
    }

    /// `Some(C(n,k))` when it is representable, `None` on overflow or out of table.
    #[inline]
    pub fn get(&self, n: usize, k: usize) -> Option<u128> {
        let row = self.rows.get(n)?;
        match row.get(k) {
            Some(&0) => None,
            Some(&v) => Some(v),
            None => Some(0),
        }
    }
}

/// A partition: weakly decreasing, strictly positive parts.
///
/// Trailing zeros are dropped on construction, so `(2,1,0)` and `(2,1)` are
/// the same value. The empty partition is the unique partition of zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Partition(Vec<u32>);

impl Partition {
    /// Builds a partition from arbitrary nonnegative parts (sorted and zero-stripped).
    pub fn new(mut parts: Vec<u32>) -> Self {
        parts.retain(|&p| p > 0);
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Partition(parts)
    }

    pub fn empty() -> Self {
        Partition(Vec::new())
    }

    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weight(&self) -> u32 {
        self.0.iter().sum()
    }

    /// `m_s`: how many parts equal `s`.
    pub fn multiplicity(&self, s: u32) -> usize {
        self.0.iter().filter(|&&p| p == s).count()
    }

    /// Order of the stabilizer of the parts under permutation: `Π_s m_s!`.
    pub fn stabilizer_order(&self) -> BigUint {
        let mut acc = BigUint::one();
        let mut i = 0;
        while i < self.0.len() {
            let mut j = i;
            while j < self.0.len() && self.0[j] == self.0[i] {
                j += 1;
            }
            acc *= factorial(j - i);
            i = j;
        }
        acc
    }

    /// Exponent notation used in tables, e.g. `(2^2 1)` or `(1^3)`.
    pub fn exponent_label(&self) -> String {
        let mut groups = Vec::new();
        let mut i = 0;
        while i < self.0.len() {
            let mut j = i;
            while j < self.0.len() && self.0[j] == self.0[i] {
                j += 1;
            }
            if j - i == 1 {
                groups.push(format!("{}", self.0[i]));
            } else {
                groups.push(format!("{}^{}", self.0[i], j - i));
            }
            i = j;
        }
        format!("({})", groups.join(" "))
    }

    /// Canonical comma form used in cache keys and on the command line.
    pub fn comma_list(&self) -> String {
        self.0.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "∅");
        }
        write!(f, "({})", self.comma_list())
    }
}

/// All partitions of `weight`, lexicographically decreasing.
pub fn partitions_of(weight: u32) -> Vec<Partition> {
    fn rec(remaining: u32, max_part: u32, current: &mut Vec<u32>, out: &mut Vec<Partition>) {
        if remaining == 0 {
            out.push(Partition(current.clone()));
            return;
        }
        for part in (1..=max_part.min(remaining)).rev() {
            current.push(part);
            rec(remaining - part, part, current, out);
            current.pop();
        }
    }
    let mut out = Vec::new();
    rec(weight, weight, &mut Vec::new(), &mut out);
    out
}

/// Partitions of every weight `0..=d`, weights ascending and lexicographically
/// decreasing inside each weight.
pub fn partitions_up_to(d: u32) -> Vec<Partition> {
    (0..=d).flat_map(partitions_of).collect()
}

/// Polynomial in `t` with big-integer coefficients, stored lowest degree first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntegerPolynomial {
    coeffs: Vec<BigInt>,
}

impl IntegerPolynomial {
    pub fn zero() -> Self {
        IntegerPolynomial { coeffs: Vec::new() }
    }

    /// From ascending-degree coefficients; trailing zeros are trimmed.
    pub fn from_ascending(coeffs: Vec<BigInt>) -> Self {
        let mut p = IntegerPolynomial { coeffs };
        p.trim();
        p
    }

    /// From descending-degree coefficients (highest degree first).
    pub fn from_descending(mut coeffs: Vec<BigInt>) -> Self {
        coeffs.reverse();
        Self::from_ascending(coeffs)
    }

    pub fn from_i64_ascending(coeffs: &[i64]) -> Self {
        Self::from_ascending(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    /// The monic linear factor `t - root`.
    pub fn linear(root: i64) -> Self {
        Self::from_i64_ascending(&[-root, 1])
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(Zero::is_zero) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    /// Coefficient of `t^i` (zero beyond the degree).
    pub fn coeff(&self, i: usize) -> BigInt {
        self.coeffs.get(i).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn ascending(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn descending(&self) -> Vec<BigInt> {
        let mut c = self.coeffs.clone();
        if c.is_empty() {
            c.push(BigInt::zero());
        }
        c.reverse();
        c
    }

    pub fn leading(&self) -> BigInt {
        self.coeffs.last().cloned().unwrap_or_else(BigInt::zero)
    }

    /// Adds `c * t^deg` in place.
    pub fn add_term(&mut self, deg: usize, c: &BigInt) {
        if self.coeffs.len() <= deg {
            self.coeffs.resize(deg + 1, BigInt::zero());
        }
        self.coeffs[deg] += c;
        self.trim();
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![BigInt::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Self::from_ascending(out)
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::from_i64_ascending(&[1]);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Exact value at `t` by Horner's rule.
    pub fn eval(&self, t: &BigInt) -> BigInt {
        let mut acc = BigInt::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * t + c;
        }
        acc
    }

    /// `p / t` when the constant term vanishes; `None` otherwise.
    pub fn div_by_t(&self) -> Option<Self> {
        if self.coeffs.first().is_some_and(|c| !c.is_zero()) {
            return None;
        }
        Some(Self::from_ascending(self.coeffs.iter().skip(1).cloned().collect()))
    }
}

/// Exact value `p(t)`.
pub fn poly_eval(p: &IntegerPolynomial, t: &BigInt) -> BigInt {
    p.eval(t)
}

impl fmt::Display for IntegerPolynomial {
    /// Plain-text form such as `t^4 - 20t^3 + 145t^2 - 426t + 300`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for deg in (0..self.coeffs.len()).rev() {
            let c = &self.coeffs[deg];
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            first = false;
            let unit = mag.is_one();
            match deg {
                0 => write!(f, "{mag}")?,
                1 if unit => write!(f, "t")?,
                1 => write!(f, "{mag}t")?,
                _ if unit => write!(f, "t^{deg}")?,
                _ => write!(f, "{mag}t^{deg}")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(v: i64) -> BigInt {
        BigInt::from(v)
    }

    #[test]
    fn binomial_examples() {
        assert_eq!(binomial(7, 4), BigUint::from(35u32));
        assert_eq!(binomial(5, 0), BigUint::from(1u32));
        assert_eq!(binomial(4, 2), BigUint::from(6u32));
        assert_eq!(binomial(4, 5), BigUint::zero());
        assert_eq!(binomial(4, -1), BigUint::zero());
        assert_eq!(binomial(0, 0), BigUint::one());
    }

    #[test]
    fn multinomial_examples() {
        assert_eq!(multinomial(&[1, 1, 1]), BigUint::from(6u32));
        assert_eq!(multinomial(&[2, 2]), BigUint::from(6u32));
        assert_eq!(multinomial(&[0, 5]), BigUint::from(1u32));
        assert_eq!(multinomial(&[]), BigUint::from(1u32));
    }

    #[test]
    fn factorial_beyond_table() {
        let f = factorial(FACTORIAL_CACHE_LIMIT + 2);
        let expected = factorial(FACTORIAL_CACHE_LIMIT)
            * BigUint::from((FACTORIAL_CACHE_LIMIT + 1) as u64)
            * BigUint::from((FACTORIAL_CACHE_LIMIT + 2) as u64);
        assert_eq!(f, expected);
    }

    #[test]
    fn small_binomials_match_big() {
        let table = SmallBinomials::new(60);
        for n in 0..=60u64 {
            for k in 0..=n {
                assert_eq!(
                    BigUint::from(table.get(n as usize, k as usize).unwrap()),
                    binomial(n, k as i64)
                );
            }
        }
        let wide = SmallBinomials::new(140);
        assert_eq!(wide.get(140, 70), None);
    }

    #[test]
    fn partitions_examples() {
        let weight3: Vec<_> = partitions_of(3);
        assert_eq!(
            weight3,
            vec![
                Partition::new(vec![3]),
                Partition::new(vec![2, 1]),
                Partition::new(vec![1, 1, 1])
            ]
        );
        assert_eq!(partitions_up_to(0), vec![Partition::empty()]);
        assert_eq!(
            partitions_up_to(2),
            vec![
                Partition::empty(),
                Partition::new(vec![1]),
                Partition::new(vec![2]),
                Partition::new(vec![1, 1])
            ]
        );
    }

    #[test]
    fn partition_counts_match_euler() {
        // p(0..=10)
        let p = [1usize, 1, 2, 3, 5, 7, 11, 15, 22, 30, 42];
        for d in 0..=10u32 {
            let all = partitions_up_to(d);
            let expected: usize = p[..=d as usize].iter().sum();
            assert_eq!(all.len(), expected);
            let mut dedup = all.clone();
            dedup.sort();
            dedup.dedup();
            assert_eq!(dedup.len(), all.len());
        }
    }

    #[test]
    fn partition_normalization_and_labels() {
        assert_eq!(Partition::new(vec![1, 2, 0, 0]), Partition::new(vec![2, 1]));
        assert_eq!(Partition::new(vec![2, 2, 1]).exponent_label(), "(2^2 1)");
        assert_eq!(Partition::new(vec![1, 1, 1]).exponent_label(), "(1^3)");
        assert_eq!(Partition::new(vec![2, 2, 1, 1]).stabilizer_order(), BigUint::from(4u32));
        assert_eq!(Partition::new(vec![2, 2, 1]).multiplicity(2), 2);
        assert_eq!(Partition::empty().to_string(), "∅");
    }

    #[test]
    fn poly_eval_examples() {
        let p = IntegerPolynomial::from_i64_ascending(&[3, -4, 1]);
        assert_eq!(poly_eval(&p, &big(1)), big(0));
        assert_eq!(poly_eval(&p, &big(0)), big(3));
        let q = IntegerPolynomial::linear(5);
        assert_eq!(poly_eval(&q, &big(5)), big(0));
    }

    #[test]
    fn poly_display_and_division() {
        let p = IntegerPolynomial::from_i64_ascending(&[300, -426, 145, -20, 1]);
        assert_eq!(p.to_string(), "t^4 - 20t^3 + 145t^2 - 426t + 300");
        assert_eq!(
            IntegerPolynomial::from_i64_ascending(&[0, -1, -1]).to_string(),
            "-t^2 - t"
        );
        assert_eq!(IntegerPolynomial::zero().to_string(), "0");
        assert!(p.div_by_t().is_none());
        let q = IntegerPolynomial::from_i64_ascending(&[0, 2, 1]).div_by_t().unwrap();
        assert_eq!(q, IntegerPolynomial::from_i64_ascending(&[2, 1]));
        let cube = IntegerPolynomial::linear(1).pow(3);
        assert_eq!(cube, IntegerPolynomial::from_i64_ascending(&[-1, 3, -3, 1]));
        assert_eq!(cube.descending()[0], big(1));
    }

    proptest! {
        #[test]
        fn binomial_symmetry(n in 0u64..80, k in 0u64..80) {
            prop_assume!(k <= n);
            prop_assert_eq!(binomial(n, k as i64), binomial(n, (n - k) as i64));
        }

        #[test]
        fn multinomial_permutation_invariant(mut parts in proptest::collection::vec(0u64..8, 0..6)) {
            let a = multinomial(&parts);
            parts.reverse();
            let b = multinomial(&parts);
            parts.sort();
            let c = multinomial(&parts);
            prop_assert_eq!(&a, &b);
            prop_assert_eq!(&a, &c);
        }

        #[test]
        fn exact_add_sub(a in any::<i128>(), b in any::<i128>(), shift in 0u32..200) {
            let a = BigInt::from(a) << shift;
            let b = BigInt::from(b);
            prop_assert_eq!((&a + &b) - &b, a);
        }
    }
}

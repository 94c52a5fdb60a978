//! Möbius values and characteristic polynomials of `L_{n,d}`.
//!
//! The ideal below an element of type `γ` is a product of lattices
//! `L_{k+γ_i, γ_i-1}` with `k = n - d - 1`, so
//! `μ_{n,d}(γ) = Π μ_{k+γ_i, γ_i-1}(1̂)`, and `χ_{n,d}(1) = 0` gives
//! `μ_{n,d}(1̂) = -Σ_{|γ| <= d} λ_{n,d}(γ) μ_{n,d}(γ)`. Everything therefore
//! depends only on `k` and the type counts.

use std::collections::HashMap;
use std::sync::Mutex;

use num::bigint::{BigInt, BigUint};
use num::{One, Signed, Zero};
use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::arith::{partitions_up_to, IntegerPolynomial, Partition};
use crate::counting::{lambda_via_c_with, CTable};
use crate::disc::{lambda_disc_in, V2Cache, MAX_V2_LENGTH};
use crate::error::{Error, Result};

/// Which counting engine supplies `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LambdaSource {
    /// Occupancy patterns through `c(j,d;γ)`; any `k`.
    Counting,
    /// Simplicial complexes; only `k = 2`.
    Disc,
    /// `Disc` when `k = 2` and the needed tables are within reach, else `Counting`.
    Auto,
}

/// One row of the per-type table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeEntry {
    pub gamma: Partition,
    pub lambda: BigUint,
    pub mu: BigInt,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharPolyResult {
    pub n: u32,
    pub d: u32,
    pub k: u32,
    /// `χ_{n,d}(t)`, monic of degree `d + 1`.
    pub cone: IntegerPolynomial,
    /// `χ(A_{n,d}, t) = (χ_{n,d}(t) - μ(1̂)) / t`.
    pub deconed: IntegerPolynomial,
    pub mu_max: BigInt,
    /// Every partition of weight `0..=d`, with zero counts kept.
    pub types: Vec<TypeEntry>,
}

impl CharPolyResult {
    pub fn lambda(&self, gamma: &Partition) -> Option<&BigUint> {
        self.types.iter().find(|e| &e.gamma == gamma).map(|e| &e.lambda)
    }

    /// Number of elements of each rank, the maximum included.
    pub fn rank_sizes(&self) -> Vec<BigUint> {
        let mut out = vec![BigUint::zero(); self.d as usize + 2];
        for e in &self.types {
            out[e.gamma.weight() as usize] += &e.lambda;
        }
        out[self.d as usize + 1] += 1u32;
        out
    }
}

impl Serialize for TypeEntry {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("TypeEntry", 3)?;
        st.serialize_field("gamma", self.gamma.parts())?;
        st.serialize_field("lambda", &self.lambda.to_string())?;
        st.serialize_field("mu", &self.mu.to_string())?;
        st.end()
    }
}

impl Serialize for CharPolyResult {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let strings = |p: &IntegerPolynomial| p.descending().iter().map(|c| c.to_string()).collect::<Vec<_>>();
        let mut st = s.serialize_struct("CharPolyResult", 8)?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("d", &self.d)?;
        st.serialize_field("k", &self.k)?;
        st.serialize_field("mu_max", &self.mu_max.to_string())?;
        st.serialize_field("char_poly", &strings(&self.cone))?;
        st.serialize_field("deconed", &strings(&self.deconed))?;
        st.serialize_field("char_poly_text", &self.cone.to_string())?;
        st.serialize_field("types", &self.types)?;
        st.end()
    }
}

/// Shared memo tables for `c` values, `𝒱₂` counts and `μ(1̂)`.
#[derive(Debug, Default)]
pub struct Engine {
    pub c_table: CTable,
    pub v2: V2Cache,
    /// `μ_{k+e, e-1}(1̂)` keyed by `(source, k, e)`, `e` the rank of the maximum.
    mu_max: Mutex<HashMap<(LambdaSource, u32, u32), BigInt>>,
}

impl Engine {
    pub fn new() -> Self {
        Self::default()
    }

    fn resolve(&self, source: LambdaSource, k: u32, gamma: &Partition) -> LambdaSource {
        match source {
            LambdaSource::Auto if k == 2 && gamma.len() <= MAX_V2_LENGTH => LambdaSource::Disc,
            LambdaSource::Auto => LambdaSource::Counting,
            s => s,
        }
    }

    /// `λ_{n,d}(γ)` for `weight(γ) <= d` by the chosen engine.
    pub fn lambda(&self, n: u32, d: u32, gamma: &Partition, source: LambdaSource) -> Result<BigUint> {
        check_dims(n, d)?;
        let k = n - d - 1;
        match self.resolve(source, k, gamma) {
            LambdaSource::Disc => {
                if k != 2 {
                    return Err(Error::InvalidInput(format!(
                        "the simplicial-complex path needs n = d + 3, got n={n}, d={d}"
                    )));
                }
                lambda_disc_in(&self.v2, d, gamma)
            }
            _ => Ok(lambda_via_c_with(&self.c_table, n as u64, d, gamma)?.lambda),
        }
    }

    fn cached_mu_max(&self, source: LambdaSource, k: u32, e: u32) -> Option<BigInt> {
        self.mu_max.lock().unwrap().get(&(source, k, e)).cloned()
    }

    /// `μ_{d+k+1,d}(1̂)`, filling the memo bottom-up in `d`.
    pub fn mu_hat1(&self, k: u32, d: u32, source: LambdaSource) -> Result<BigInt> {
        for e in 0..=d {
            if self.cached_mu_max(source, k, e + 1).is_some() {
                continue;
            }
            let value = if e == 0 {
                -BigInt::one()
            } else {
                let (_, mu_max) = self.type_table(k, e, source)?;
                mu_max
            };
            self.mu_max.lock().unwrap().entry((source, k, e + 1)).or_insert(value);
        }
        Ok(self.cached_mu_max(source, k, d + 1).expect("filled above"))
    }

    /// `μ_{n,d}(γ) = Π μ_{k+γ_i, γ_i-1}(1̂)`.
    pub fn mu_of_type(&self, n: u32, d: u32, gamma: &Partition, source: LambdaSource) -> Result<BigInt> {
        check_dims(n, d)?;
        let k = n - d - 1;
        let mut out = BigInt::one();
        for &g in gamma.parts() {
            out *= self.mu_hat1(k, g - 1, source)?;
        }
        Ok(out)
    }

    /// Per-type table of `L_{d+k+1,d}` and the resulting `μ(1̂)`; needs `μ(1̂)` below `d`.
    fn type_table(&self, k: u32, d: u32, source: LambdaSource) -> Result<(Vec<TypeEntry>, BigInt)> {
        let n = d + k + 1;
        let partitions = partitions_up_to(d);
        if d > 0 {
            self.mu_hat1(k, d - 1, source)?;
        }
        let types = partitions
            .into_par_iter()
            .map(|gamma| {
                let lambda = self.lambda(n, d, &gamma, source)?;
                let mut mu = BigInt::one();
                for &g in gamma.parts() {
                    mu *= self
                        .cached_mu_max(source, k, g)
                        .expect("lower maxima are computed first");
                }
                Ok(TypeEntry { gamma, lambda, mu })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut sum = BigInt::zero();
        for e in &types {
            sum += BigInt::from(e.lambda.clone()) * &e.mu;
        }
        Ok((types, -sum))
    }

    /// `χ_{n,d}` and `χ(A_{n,d})` with the full type table.
    pub fn char_poly(&self, n: u32, d: u32, source: LambdaSource) -> Result<CharPolyResult> {
        check_dims(n, d)?;
        let k = n - d - 1;
        let (types, mu_max) = self.type_table(k, d, source)?;
        self.mu_max
            .lock()
            .unwrap()
            .entry((source, k, d + 1))
            .or_insert_with(|| mu_max.clone());
        let mut cone = IntegerPolynomial::zero();
        cone.add_term(0, &mu_max);
        for e in &types {
            let term = BigInt::from(e.lambda.clone()) * &e.mu;
            cone.add_term((d + 1 - e.gamma.weight()) as usize, &term);
        }
        if !cone.eval(&BigInt::one()).is_zero() {
            return Err(Error::Verification(format!("χ_{{{n},{d}}}(1) is not zero")));
        }
        let mut shifted = cone.clone();
        shifted.add_term(0, &-&mu_max);
        let deconed = shifted
            .div_by_t()
            .ok_or_else(|| Error::Verification("deconing left a remainder".into()))?;
        Ok(CharPolyResult {
            n,
            d,
            k,
            cone,
            deconed,
            mu_max,
            types,
        })
    }
}

fn check_dims(n: u32, d: u32) -> Result<()> {
    if n <= d {
        return Err(Error::InvalidInput(format!("need n > d, got n={n}, d={d}")));
    }
    if n > 64 {
        return Err(Error::InvalidInput(format!("n={n} exceeds the 64-symbol limit")));
    }
    Ok(())
}

/// `μ_{n,d}(1̂)` with a fresh engine.
pub fn mu_hat1(n: u32, d: u32) -> Result<BigInt> {
    check_dims(n, d)?;
    Engine::new().mu_hat1(n - d - 1, d, LambdaSource::Auto)
}

/// `μ_{n,d}(γ)` with a fresh engine.
pub fn mu_of_type(n: u32, d: u32, gamma: &Partition) -> Result<BigInt> {
    Engine::new().mu_of_type(n, d, gamma, LambdaSource::Auto)
}

/// `χ_{n,d}` through the occupancy-pattern counts.
pub fn char_poly(n: u32, d: u32) -> Result<CharPolyResult> {
    Engine::new().char_poly(n, d, LambdaSource::Counting)
}

/// `χ_{d+3,d}` through the simplicial-complex counts.
pub fn char_poly_disc(d: u32) -> Result<CharPolyResult> {
    Engine::new().char_poly(d + 3, d, LambdaSource::Disc)
}

/// `(-1)^e` as a sign check helper: true when `v` is nonzero with that sign.
pub fn has_sign(v: &BigInt, e: u32) -> bool {
    !v.is_zero() && (v.is_negative() == (e % 2 == 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::binomial_int;
    use crate::lattice::{enumerate_lattice, type_of};

    fn poly(desc: &[i64]) -> IntegerPolynomial {
        IntegerPolynomial::from_descending(desc.iter().map(|&c| BigInt::from(c)).collect())
    }

    #[test]
    fn small_polynomials() {
        assert_eq!(char_poly(4, 1).unwrap().cone, poly(&[1, -4, 3]));
        assert_eq!(char_poly(5, 2).unwrap().cone, poly(&[1, -10, 30, -21]));
        assert_eq!(char_poly(6, 3).unwrap().cone, poly(&[1, -20, 145, -426, 300]));
        assert_eq!(char_poly(7, 4).unwrap().cone, poly(&[1, -35, 490, -3381, 10815, -7890]));
        assert_eq!(char_poly_disc(2).unwrap().cone, poly(&[1, -10, 30, -21]));
        assert_eq!(
            char_poly_disc(4).unwrap().cone,
            poly(&[1, -35, 490, -3381, 10815, -7890])
        );
    }

    #[test]
    fn mobius_maxima() {
        assert_eq!(mu_hat1(4, 1).unwrap(), BigInt::from(3));
        assert_eq!(mu_hat1(5, 2).unwrap(), BigInt::from(-21));
        assert_eq!(mu_hat1(8, 5).unwrap(), BigInt::from(349650));
        for n in 2..=12i64 {
            assert_eq!(mu_hat1(n as u32, 1).unwrap(), BigInt::from(n - 1));
        }
        for n in 3..=10i64 {
            let expect = -(n - 2) * (n - 1) * (n * n - 3 * n + 4) / 8;
            assert_eq!(mu_hat1(n as u32, 2).unwrap(), BigInt::from(expect), "n={n}");
        }
    }

    #[test]
    fn mu_of_type_closed_forms() {
        for (n, d) in [(5u32, 2u32), (7, 3), (8, 4), (9, 5)] {
            for m in 1..=d {
                let ones = Partition::new(vec![1; m as usize]);
                let sign = if m % 2 == 0 { 1 } else { -1 };
                assert_eq!(mu_of_type(n, d, &ones).unwrap(), BigInt::from(sign));
            }
            for m in 1..=d / 2 {
                let twos = Partition::new(vec![2; m as usize]);
                assert_eq!(mu_of_type(n, d, &twos).unwrap(), BigInt::from(n - d).pow(m));
            }
        }
        for d in 3..=6 {
            assert_eq!(
                mu_of_type(d + 3, d, &Partition::new(vec![3])).unwrap(),
                BigInt::from(-21)
            );
        }
    }

    #[test]
    fn boolean_and_braid_cases() {
        for d in 0..=4u32 {
            let boolean = IntegerPolynomial::linear(1).pow(d + 1);
            assert_eq!(char_poly(d + 1, d).unwrap().cone, boolean);
            let mut braid = IntegerPolynomial::from_i64_ascending(&[1]);
            for i in 1..=d as i64 + 1 {
                braid = braid.mul(&IntegerPolynomial::linear(i));
            }
            assert_eq!(char_poly(d + 2, d).unwrap().cone, braid);
        }
    }

    #[test]
    fn deconed_low_dimensions() {
        for n in 2..=12u32 {
            let r = char_poly(n, 1).unwrap();
            assert_eq!(r.deconed, IntegerPolynomial::linear(n as i64));
        }
        for n in 3..=12u32 {
            let r = char_poly(n, 2).unwrap();
            let c = |k| binomial_int(n as u64, k);
            let expect =
                IntegerPolynomial::from_ascending(vec![-BigInt::from(n) + c(2) * 2 + c(4) * 3, -c(2), BigInt::one()]);
            assert_eq!(r.deconed, expect, "n={n}");
        }
        assert_eq!(char_poly(4, 2).unwrap().deconed, poly(&[1, -6, 11]));
    }

    #[test]
    fn structural_properties() {
        let engine = Engine::new();
        for n in 2..=9u32 {
            for d in 1..n.min(5) {
                let r = engine.char_poly(n, d, LambdaSource::Counting).unwrap();
                assert_eq!(r.cone.eval(&BigInt::one()), BigInt::zero());
                assert_eq!(r.cone.degree(), d as usize + 1);
                assert_eq!(r.cone.leading(), BigInt::one());
                assert_eq!(r.cone.coeff(d as usize), -binomial_int(n as u64, d as i64));
                assert!(has_sign(&r.mu_max, d + 1));
                for e in &r.types {
                    assert!(has_sign(&e.mu, e.gamma.weight()), "n={n} d={d} γ={}", e.gamma);
                }
            }
        }
    }

    #[test]
    fn k_invariance() {
        let engine = Engine::new();
        for k in 0..=3u32 {
            for g in partitions_up_to(4) {
                if g.is_empty() {
                    continue;
                }
                let base = g.weight();
                let a = engine
                    .mu_of_type(base + k + 1, base, &g, LambdaSource::Counting)
                    .unwrap();
                let b = engine
                    .mu_of_type(base + k + 3, base + 2, &g, LambdaSource::Counting)
                    .unwrap();
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn sources_do_not_share_memo() {
        let engine = Engine::new();
        let disc = engine.mu_hat1(2, 4, LambdaSource::Disc).unwrap();
        assert!(engine.c_table.is_empty());
        let counted = engine.mu_hat1(2, 4, LambdaSource::Counting).unwrap();
        assert!(!engine.c_table.is_empty());
        assert_eq!(disc, counted);
    }

    #[test]
    fn agrees_with_poset_mobius() {
        let engine = Engine::new();
        for (n, d) in [(4u32, 1u32), (4, 2), (5, 2), (5, 3), (6, 2), (6, 3)] {
            let lattice = enumerate_lattice(n, d).unwrap();
            let mu = lattice.mobius();
            let result = engine.char_poly(n, d, LambdaSource::Counting).unwrap();
            let top = lattice.maximum().unwrap();
            assert_eq!(mu[top], result.mu_max);
            let sizes: Vec<BigUint> = lattice.rank_sizes().into_iter().map(BigUint::from).collect();
            assert_eq!(sizes, result.rank_sizes());
            for (i, t) in lattice.elements().iter().enumerate() {
                if i == top {
                    continue;
                }
                let g = type_of(t, d);
                assert_eq!(mu[i], engine.mu_of_type(n, d, &g, LambdaSource::Counting).unwrap());
            }
        }
    }

    #[test]
    fn json_layout() {
        let r = char_poly(4, 1).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["mu_max"], "3");
        assert_eq!(v["char_poly"], serde_json::json!(["1", "-4", "3"]));
        assert_eq!(v["types"][1]["gamma"], serde_json::json!([1]));
        assert_eq!(v["types"][1]["lambda"], "4");
    }
}

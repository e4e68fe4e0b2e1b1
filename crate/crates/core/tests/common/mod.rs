#![allow(dead_code)]

use num_bigint::BigInt;
use petkit_core::polycore::degeneracy_witness;
use petkit_core::{ExpVec, FormalCoeff, Monomial, NumericInstance, PolyVec, Symbol};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// The two-function family of degree 2 used throughout the worked examples.
pub fn ex020(d: usize) -> Vec<PolyVec> {
    ["b[1,2]*n^2 + b[1,1]*n", "b[2,2]*n^2 + b[2,1]*n"]
        .iter()
        .map(|t| PolyVec::parse_scalar(t, 1, 0).unwrap().broadcast(d))
        .collect()
}

pub fn vector(text: &str, l: usize) -> PolyVec {
    PolyVec::parse_vector(text, l, 0).unwrap()
}

/// Random values for `b[w,v]`, `w <= k`, `|v| <= deg`, drawn from `[-lim, lim]`
/// until the three vectors named in the examples are nonzero.
pub fn ex020_instance(rng: &mut ChaCha8Rng, d: usize, lim: i64) -> NumericInstance {
    loop {
        let mut inst = NumericInstance::new(d);
        let mut vals = std::collections::BTreeMap::new();
        for w in 1..=2 {
            for v in 1..=2u32 {
                let x: Vec<i64> = (0..d).map(|_| rng.gen_range(-lim..=lim)).collect();
                inst.insert_ints(Symbol::new(w, ExpVec::new(vec![v])), &x).unwrap();
                vals.insert((w, v), x);
            }
        }
        let b12 = &vals[&(1, 2)];
        let b22 = &vals[&(2, 2)];
        let nonzero = |v: &[i64]| v.iter().any(|&x| x != 0);
        let diff: Vec<i64> = b12.iter().zip(b22).map(|(a, b)| a - b).collect();
        if nonzero(b12) && nonzero(b22) && nonzero(&diff) {
            return inst;
        }
    }
}

fn monomials(l: usize, deg: u32) -> Vec<ExpVec> {
    let mut out = vec![];
    let mut stack = vec![(vec![], 0u32)];
    while let Some((e, t)) = stack.pop() {
        if e.len() == l {
            if t > 0 {
                out.push(ExpVec::new(e));
            }
            continue;
        }
        for x in 0..=deg - t {
            let mut e2 = e.clone();
            e2.push(x);
            stack.push((e2, t + x));
        }
    }
    out.sort();
    out
}

/// A random essentially distinct integer family with `k` members in `Z^d`,
/// polynomials in `l` variables of degree at most `deg`, sparse entries.
pub fn random_family(rng: &mut ChaCha8Rng, l: usize, k: usize, deg: u32, d: usize) -> Vec<PolyVec> {
    let monos = monomials(l, deg);
    loop {
        let fam: Vec<PolyVec> = (0..k)
            .map(|_| {
                let mut p = PolyVec::zero(l, 0, d);
                for m in &monos {
                    if rng.gen_bool(0.5) {
                        let coeffs: Vec<FormalCoeff> =
                            (0..d).map(|_| FormalCoeff::from_int(rng.gen_range(-3..=3))).collect();
                        p = p.add(&PolyVec::term(l, 0, Monomial::new(m.clone(), vec![]), coeffs));
                    }
                }
                p
            })
            .collect();
        if fam.iter().all(|p| !p.is_constant_n()) && degeneracy_witness(&fam).is_none() {
            return fam;
        }
    }
}

pub fn ints(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

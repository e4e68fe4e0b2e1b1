//! Modular fingerprints of PET tuples, used to plan reduction schedules.
//!
//! Every slot is replaced by its coefficients in `n` after substituting
//! random residues mod `2^61 - 1` for the `h` variables and for any formal
//! symbols, at a few independent sample points. Degrees in `n`, constancy in
//! `n` and essential equality are read off the fingerprints; by the
//! Schwartz-Zippel bound a spurious coincidence has probability about
//! `deg / 2^61` per comparison. Schedules found here are replayed exactly by
//! the caller, so a coincidence can cost time but never correctness.

use std::collections::{HashMap, HashSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::polycore::{ExpVec, PolyVec, Rat, Symbol};

const P: u64 = (1 << 61) - 1;
const SAMPLES: usize = 3;

fn reduce128(x: u128) -> u64 {
    let lo = (x as u64) & P;
    let hi = (x >> 61) as u64;
    let s = lo + (hi & P) + ((x >> 122) as u64);
    let s = (s & P) + (s >> 61);
    if s >= P {
        s - P
    } else {
        s
    }
}

fn mul(a: u64, b: u64) -> u64 {
    reduce128(a as u128 * b as u128)
}

fn add(a: u64, b: u64) -> u64 {
    let s = a + b;
    if s >= P {
        s - P
    } else {
        s
    }
}

fn sub(a: u64, b: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + P - b
    }
}

fn pow(mut a: u64, mut e: u64) -> u64 {
    let mut r = 1;
    while e > 0 {
        if e & 1 == 1 {
            r = mul(r, a);
        }
        a = mul(a, a);
        e >>= 1;
    }
    r
}

fn int_mod(x: &BigInt) -> u64 {
    x.mod_floor(&BigInt::from(P)).to_u64().expect("residue fits")
}

fn rat_mod(r: &Rat) -> u64 {
    mul(int_mod(r.numer()), pow(int_mod(r.denom()), P - 2))
}

/// All exponent vectors in `l` variables of total degree at most `max_deg`.
fn monomials(l: usize, max_deg: u32) -> (Vec<ExpVec>, HashMap<ExpVec, usize>) {
    let mut monos = Vec::new();
    let mut stack = vec![Vec::<u32>::new()];
    while let Some(e) = stack.pop() {
        if e.len() == l {
            monos.push(ExpVec::new(e));
            continue;
        }
        let used: u32 = e.iter().sum();
        for x in 0..=max_deg - used {
            let mut next = e.clone();
            next.push(x);
            stack.push(next);
        }
    }
    monos.sort();
    let index = monos.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
    (monos, index)
}

/// Shared sample data: `n`-monomials, shift tables and random `h` values.
pub(crate) struct Sketcher {
    l: usize,
    d: usize,
    monos: Vec<ExpVec>,
    index: HashMap<ExpVec, usize>,
    /// For each monomial `b`: `(index of e, binom(b, e), b - e)` over `e <= b`.
    shifts: Vec<Vec<(usize, u64, ExpVec)>>,
    /// `factors[step][sample][b][t]`: `binom(b, e) h^(b - e)` for the `t`-th entry of `shifts[b]`.
    factors: Vec<Vec<Vec<Vec<u64>>>>,
    /// `hs[step][sample][j]`.
    hs: Vec<Vec<Vec<u64>>>,
    symbols: HashMap<(Symbol, usize), u64>,
    rng: ChaCha8Rng,
}

/// A fingerprinted slot list; slot `m` occupies `data[m]` with layout
/// `[sample][monomial][component]`.
#[derive(Clone)]
pub(crate) struct SketchTuple {
    pub slots: Vec<Vec<u64>>,
    pub degrees: Vec<u32>,
}

impl SketchTuple {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn degree(&self) -> u32 {
        self.degrees.iter().copied().max().unwrap_or(0)
    }
}

impl Sketcher {
    pub fn new(l: usize, d: usize, max_deg: u32, steps: usize) -> Sketcher {
        let (monos, index) = monomials(l, max_deg);
        let shifts = monos
            .iter()
            .map(|b| {
                b.divisors()
                    .into_iter()
                    .map(|e| {
                        let c = b.binom(&e);
                        let rest = b.checked_sub(&e).expect("divisor");
                        (index[&e], int_mod(&c), rest)
                    })
                    .collect()
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0f_9e7);
        let hs = (0..steps)
            .map(|_| (0..SAMPLES).map(|_| (0..l).map(|_| rng.gen_range(1..P)).collect()).collect())
            .collect();
        let mut sk = Sketcher { l, d, monos, index, shifts, hs, factors: vec![], symbols: HashMap::new(), rng };
        sk.factors = (0..steps)
            .map(|step| {
                (0..SAMPLES)
                    .map(|sample| {
                        sk.shifts
                            .iter()
                            .map(|terms| terms.iter().map(|(_, c, rest)| mul(*c, sk.h_power(step, sample, rest))).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        sk
    }

    fn width(&self) -> usize {
        SAMPLES * self.monos.len() * self.d
    }

    fn at(&self, sample: usize, mono: usize, c: usize) -> usize {
        (sample * self.monos.len() + mono) * self.d + c
    }

    fn h_power(&self, step: usize, sample: usize, a: &ExpVec) -> u64 {
        a.entries()
            .iter()
            .enumerate()
            .fold(1, |acc, (j, &e)| mul(acc, pow(self.hs[step][sample][j], e as u64)))
    }

    fn symbol_value(&mut self, sym: &Symbol, c: usize) -> u64 {
        let rng = &mut self.rng;
        *self.symbols.entry((sym.clone(), c)).or_insert_with(|| rng.gen_range(1..P))
    }

    /// Fingerprint of an exact polynomial whose `h` blocks are the first steps.
    pub fn sketch(&mut self, p: &PolyVec) -> Option<Vec<u64>> {
        let mut out = vec![0; self.width()];
        for (m, cs) in p.terms() {
            let &mi = self.index.get(&m.n)?;
            for (c, coeff) in cs.iter().enumerate() {
                let mut v = rat_mod(coeff.constant_part());
                let terms: Vec<(Symbol, Rat)> = coeff.terms().map(|(s, k)| (s.clone(), k.clone())).collect();
                for (sym, k) in terms {
                    v = add(v, mul(rat_mod(&k), self.symbol_value(&sym, c)));
                }
                for sample in 0..SAMPLES {
                    let hv = m.h.iter().enumerate().fold(1, |acc, (t, a)| mul(acc, self.h_power(t, sample, a)));
                    let slot = self.at(sample, mi, c);
                    out[slot] = add(out[slot], mul(v, hv));
                }
            }
        }
        Some(out)
    }

    fn degree_of(&self, v: &[u64]) -> u32 {
        let mut deg = 0;
        for sample in 0..SAMPLES {
            for (mi, m) in self.monos.iter().enumerate() {
                if m.total() > deg && (0..self.d).any(|c| v[self.at(sample, mi, c)] != 0) {
                    deg = m.total();
                }
            }
        }
        deg
    }

    pub fn tuple(&self, slots: Vec<Vec<u64>>) -> SketchTuple {
        let degrees = slots.iter().map(|s| self.degree_of(s)).collect();
        SketchTuple { slots, degrees }
    }

    fn clear_constants(&self, v: &mut [u64]) {
        let zero = self.index[&ExpVec::zero(self.l)];
        for sample in 0..SAMPLES {
            for c in 0..self.d {
                v[self.at(sample, zero, c)] = 0;
            }
        }
    }

    fn shifted(&self, v: &[u64], step: usize) -> Vec<u64> {
        let mut out = vec![0; v.len()];
        for sample in 0..SAMPLES {
            for (bi, terms) in self.shifts.iter().enumerate() {
                let base = self.at(sample, bi, 0);
                if v[base..base + self.d].iter().all(|&x| x == 0) {
                    continue;
                }
                for ((ei, _, _), &f) in terms.iter().zip(&self.factors[step][sample][bi]) {
                    for c in 0..self.d {
                        let to = self.at(sample, *ei, c);
                        out[to] = add(out[to], mul(f, v[base + c]));
                    }
                }
            }
        }
        out
    }

    /// Fingerprint of `vdc(rho)` applied at stage `step` with the indices of
    /// the surviving Step-1 slots, or `None` when the operation is not
    /// 1-inherited.
    pub fn vdc(&self, t: &SketchTuple, rho: usize, step: usize) -> Option<(SketchTuple, Vec<usize>)> {
        let q = &t.slots[rho - 1];
        let diff = |v: Vec<u64>| -> Vec<u64> {
            let mut v: Vec<u64> = v.iter().zip(q).map(|(a, b)| sub(*a, *b)).collect();
            self.clear_constants(&mut v);
            v
        };
        let star: Vec<Vec<u64>> = t
            .slots
            .iter()
            .map(|s| diff(self.shifted(s, step)))
            .chain(t.slots.iter().map(|s| diff(s.clone())))
            .collect();
        // Slot 1 must survive Step 2 on its own.
        if star[0].iter().all(|&x| x == 0) || star[1..].contains(&star[0]) {
            return None;
        }
        let mut classes: Vec<usize> = Vec::new();
        let mut seen: HashSet<&[u64]> = HashSet::new();
        for (idx, v) in star.iter().enumerate() {
            if v.iter().all(|&x| x == 0) {
                continue;
            }
            if seen.insert(v.as_slice()) {
                classes.push(idx);
            }
        }
        let slots = classes.iter().map(|&i| star[i].clone()).collect();
        Some((self.tuple(slots), classes))
    }
}

/// Exact evaluation of a planned schedule at integer values of the `h`
/// variables. Every slot becomes a polynomial in `n` alone, so replaying
/// thousands of slots stays cheap; the class structure comes from the plan.
pub(crate) struct Specializer {
    l: usize,
    d: usize,
    monos: Vec<ExpVec>,
    index: HashMap<ExpVec, usize>,
    shifts: Vec<Vec<(usize, BigInt, ExpVec)>>,
}

impl Specializer {
    pub fn new(l: usize, d: usize, max_deg: u32) -> Specializer {
        let (monos, index) = monomials(l, max_deg);
        let shifts = monos
            .iter()
            .map(|b| {
                b.divisors()
                    .into_iter()
                    .map(|e| (index[&e], b.binom(&e), b.checked_sub(&e).expect("divisor")))
                    .collect()
            })
            .collect();
        Specializer { l, d, monos, index, shifts }
    }

    /// Dense coefficients of an `h`-free numeric polynomial.
    fn dense(&self, p: &PolyVec) -> Option<Vec<Rat>> {
        let mut out = vec![Rat::zero(); self.monos.len() * self.d];
        for (m, cs) in p.terms() {
            if m.h.iter().any(|a| !a.is_zero()) {
                return None;
            }
            let &mi = self.index.get(&m.n)?;
            for (c, coeff) in cs.iter().enumerate() {
                if coeff.terms().next().is_some() {
                    return None;
                }
                out[mi * self.d + c] += coeff.constant_part();
            }
        }
        Some(out)
    }

    fn shifted(&self, v: &[Rat], h: &[BigInt]) -> Vec<Rat> {
        let mut out = vec![Rat::zero(); v.len()];
        for (bi, terms) in self.shifts.iter().enumerate() {
            let src = &v[bi * self.d..(bi + 1) * self.d];
            if src.iter().all(Zero::is_zero) {
                continue;
            }
            for (ei, c, rest) in terms {
                let f = rest.entries().iter().zip(h).fold(c.clone(), |acc, (&e, x)| acc * x.pow(e));
                let f = Rat::from_integer(f);
                for (o, x) in out[ei * self.d..(ei + 1) * self.d].iter_mut().zip(src) {
                    *o += x * &f;
                }
            }
        }
        out
    }

    /// Runs `(rho_t, survivors_t)` from `start` with `hs[t]` substituted for
    /// the `t`-th new `h` block and returns, per final slot, the `n_j`
    /// coefficient vectors for `j = 1..=L`.
    pub fn run(&self, start: &[PolyVec], steps: &[(usize, Vec<usize>)], hs: &[Vec<BigInt>]) -> Option<Vec<Vec<Vec<Rat>>>> {
        let mut slots = start.iter().map(|p| self.dense(p)).collect::<Option<Vec<_>>>()?;
        let zero = self.index[&ExpVec::zero(self.l)];
        for ((rho, survivors), h) in steps.iter().zip(hs) {
            let q = slots[rho - 1].clone();
            let diff = |v: Vec<Rat>| -> Vec<Rat> {
                let mut v: Vec<Rat> = v.iter().zip(&q).map(|(a, b)| a - b).collect();
                for x in &mut v[zero * self.d..(zero + 1) * self.d] {
                    *x = Rat::zero();
                }
                v
            };
            let len = slots.len();
            slots = survivors
                .iter()
                .map(|&idx| if idx < len { diff(self.shifted(&slots[idx], h)) } else { diff(slots[idx - len].clone()) })
                .collect();
        }
        let units: Vec<usize> = (0..self.l)
            .map(|j| {
                let mut e = vec![0; self.l];
                e[j] = 1;
                self.index[&ExpVec::new(e)]
            })
            .collect();
        Some(
            slots
                .iter()
                .map(|v| units.iter().map(|&mi| v[mi * self.d..(mi + 1) * self.d].to_vec()).collect())
                .collect(),
        )
    }
}

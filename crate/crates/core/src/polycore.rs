//! Polynomial vectors in a distinguished variable block `n` and auxiliary
//! blocks `h_1, ..., h_s`, each of width `L`, with formal coefficients.
//!
//! A coefficient is a rational linear combination of symbols `b[w,v]` plus a
//! rational constant. In component `c` of a vector, the symbol `b[w,v]` stands
//! for coordinate `c` of the coefficient vector `b_{w,v}` of the `w`-th member
//! of the root family at monomial `n^v`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type Rat = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("parse error at column {col}: {msg}")]
    Parse { col: usize, msg: String },
    #[error("symbol {0} has no assigned value")]
    MissingSymbol(Symbol),
    #[error("product of two symbol-bearing factors is not linear in the symbols")]
    NonLinear,
    #[error("shape mismatch: {0}")]
    Shape(String),
}

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat_frac(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Exponent vector `v` of a monomial `x^v` in one block of `L` variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExpVec(Vec<u32>);

impl ExpVec {
    pub fn new(entries: Vec<u32>) -> Self {
        ExpVec(entries)
    }

    pub fn zero(l: usize) -> Self {
        ExpVec(vec![0; l])
    }

    pub fn unit(l: usize, j: usize) -> Self {
        let mut e = vec![0; l];
        e[j] = 1;
        ExpVec(e)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    /// `|v|`, the sum of the entries.
    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn add(&self, other: &ExpVec) -> ExpVec {
        ExpVec(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn checked_sub(&self, other: &ExpVec) -> Option<ExpVec> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(ExpVec)
    }

    /// All exponent vectors `c` with `c <= self` componentwise, lexicographic.
    pub fn divisors(&self) -> Vec<ExpVec> {
        let mut out = vec![Vec::with_capacity(self.len())];
        for &e in &self.0 {
            let mut next = Vec::with_capacity(out.len() * (e as usize + 1));
            for prefix in &out {
                for x in 0..=e {
                    let mut p = prefix.clone();
                    p.push(x);
                    next.push(p);
                }
            }
            out = next;
        }
        out.into_iter().map(ExpVec).collect()
    }

    /// `binom(self, c) = prod_j binom(self_j, c_j)`, zero unless `c <= self`.
    pub fn binom(&self, c: &ExpVec) -> BigInt {
        self.0
            .iter()
            .zip(&c.0)
            .map(|(&a, &b)| binomial(a, b))
            .product()
    }

    /// Multinomial coefficient `prod_j (sum_i parts_i,j)! / prod_i parts_i,j!`.
    pub fn multinomial(parts: &[&ExpVec]) -> BigInt {
        let l = parts.first().map_or(0, |p| p.len());
        let mut out = BigInt::one();
        for j in 0..l {
            let mut acc = 0u32;
            for p in parts {
                acc += p.0[j];
                out *= binomial(acc, p.0[j]);
            }
        }
        out
    }
}

/// `binom(n, k)` as a big integer (zero when `k > n`).
pub fn binomial(n: u32, k: u32) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// The formal coefficient symbol `b[w,v]`. Index `w = 0` is the artificial
/// zero polynomial and is never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol {
    pub w: usize,
    pub v: ExpVec,
}

impl Symbol {
    pub fn new(w: usize, v: ExpVec) -> Self {
        Symbol { w, v }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "b[{}", self.w)?;
        for e in self.v.entries() {
            write!(f, ",{e}")?;
        }
        write!(f, "]")
    }
}

/// A rational linear combination of symbols plus a rational constant.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct FormalCoeff {
    terms: BTreeMap<Symbol, Rat>,
    constant: Rat,
}

impl FormalCoeff {
    pub fn zero() -> Self {
        FormalCoeff { terms: BTreeMap::new(), constant: Rat::zero() }
    }

    pub fn constant(c: Rat) -> Self {
        FormalCoeff { terms: BTreeMap::new(), constant: c }
    }

    pub fn from_int(c: i64) -> Self {
        Self::constant(rat(c))
    }

    /// `scale * b[w,v]`; the zero symbol `w = 0` yields the zero coefficient.
    pub fn symbol(sym: Symbol, scale: Rat) -> Self {
        let mut out = Self::zero();
        if sym.w != 0 && !scale.is_zero() {
            out.terms.insert(sym, scale);
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.constant.is_zero()
    }

    pub fn has_symbols(&self) -> bool {
        !self.terms.is_empty()
    }

    pub fn constant_part(&self) -> &Rat {
        &self.constant
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Symbol, &Rat)> {
        self.terms.iter()
    }

    pub fn add_assign_scaled(&mut self, other: &FormalCoeff, scale: &Rat) {
        if scale.is_zero() {
            return;
        }
        for (sym, c) in &other.terms {
            let entry = self.terms.entry(sym.clone()).or_insert_with(Rat::zero);
            *entry += c * scale;
            if entry.is_zero() {
                self.terms.remove(sym);
            }
        }
        self.constant += &other.constant * scale;
    }

    pub fn add(&self, other: &FormalCoeff) -> FormalCoeff {
        let mut out = self.clone();
        out.add_assign_scaled(other, &Rat::one());
        out
    }

    pub fn sub(&self, other: &FormalCoeff) -> FormalCoeff {
        let mut out = self.clone();
        out.add_assign_scaled(other, &-Rat::one());
        out
    }

    pub fn scale(&self, k: &Rat) -> FormalCoeff {
        let mut out = FormalCoeff::zero();
        out.add_assign_scaled(self, k);
        out
    }

    /// Product of two coefficients, defined when at most one carries symbols.
    pub fn mul(&self, other: &FormalCoeff) -> Result<FormalCoeff, PolyError> {
        match (self.has_symbols(), other.has_symbols()) {
            (true, true) => Err(PolyError::NonLinear),
            (false, _) => Ok(other.scale(&self.constant)),
            (true, false) => Ok(self.scale(&other.constant)),
        }
    }

    /// Value in component `c` under a numeric instance.
    pub fn eval(&self, inst: &NumericInstance, c: usize) -> Result<Rat, PolyError> {
        let mut acc = self.constant.clone();
        for (sym, k) in &self.terms {
            let val = inst.get(sym).ok_or_else(|| PolyError::MissingSymbol(sym.clone()))?;
            acc += k * &val[c];
        }
        Ok(acc)
    }

    pub fn symbols(&self) -> impl Iterator<Item = &Symbol> {
        self.terms.keys()
    }
}

impl fmt::Display for FormalCoeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (sym, k) in &self.terms {
            parts.push((k.clone(), Some(sym.to_string())));
        }
        if !self.constant.is_zero() || parts.is_empty() {
            parts.push((self.constant.clone(), None));
        }
        write_signed_terms(f, &parts)
    }
}

fn fmt_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Writes `k_1*x_1 + k_2*x_2 - ...`, omitting unit factors in front of a body.
fn write_signed_terms(f: &mut fmt::Formatter<'_>, parts: &[(Rat, Option<String>)]) -> fmt::Result {
    for (idx, (k, body)) in parts.iter().enumerate() {
        let neg = k.is_negative();
        let mag = k.abs();
        match (idx, neg) {
            (0, true) => write!(f, "-")?,
            (0, false) => {}
            (_, true) => write!(f, " - ")?,
            (_, false) => write!(f, " + ")?,
        }
        match body {
            Some(b) if mag.is_one() => write!(f, "{b}")?,
            Some(b) => write!(f, "{}*{b}", fmt_rat(&mag))?,
            None => write!(f, "{}", fmt_rat(&mag))?,
        }
    }
    Ok(())
}

/// Assignment of concrete vectors in `Q^d` to symbols.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NumericInstance {
    d: usize,
    values: BTreeMap<Symbol, Vec<Rat>>,
}

impl NumericInstance {
    pub fn new(d: usize) -> Self {
        NumericInstance { d, values: BTreeMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn insert(&mut self, sym: Symbol, value: Vec<Rat>) -> Result<(), PolyError> {
        if value.len() != self.d {
            return Err(PolyError::Shape(format!(
                "value for {sym} has {} entries, expected {}",
                value.len(),
                self.d
            )));
        }
        self.values.insert(sym, value);
        Ok(())
    }

    pub fn insert_ints(&mut self, sym: Symbol, value: &[i64]) -> Result<(), PolyError> {
        self.insert(sym, value.iter().map(|&x| rat(x)).collect())
    }

    pub fn get(&self, sym: &Symbol) -> Option<&Vec<Rat>> {
        self.values.get(sym)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Symbol, &Vec<Rat>)> {
        self.values.iter()
    }
}

/// A monomial `n^b h_1^{a_1} ... h_s^{a_s}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial {
    pub n: ExpVec,
    pub h: Vec<ExpVec>,
}

impl Monomial {
    pub fn new(n: ExpVec, h: Vec<ExpVec>) -> Self {
        Monomial { n, h }
    }

    pub fn one(l: usize, s: usize) -> Self {
        Monomial { n: ExpVec::zero(l), h: vec![ExpVec::zero(l); s] }
    }

    fn flat(&self) -> impl Iterator<Item = u32> + '_ {
        self.n.entries().iter().copied().chain(self.h.iter().flat_map(|a| a.entries().iter().copied()))
    }

    pub fn total(&self) -> u32 {
        self.flat().sum()
    }

    fn with_h_block(&self, a: ExpVec) -> Monomial {
        let mut h = self.h.clone();
        h.push(a);
        Monomial { n: self.n.clone(), h }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Degree reverse lexicographic order on the concatenated exponent vector
/// `(n, h_1, ..., h_s)`, so that `n^2 > n*h1 > h1^2`.
impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        let t = self.total().cmp(&other.total());
        if t != Ordering::Equal {
            return t;
        }
        let a: Vec<u32> = self.flat().collect();
        let b: Vec<u32> = other.flat().collect();
        for (x, y) in a.iter().zip(&b).rev() {
            if x != y {
                return y.cmp(x);
            }
        }
        a.len().cmp(&b.len())
    }
}

/// A polynomial map `(Z^L)^{s+1} -> Q^d` with formal coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PolyVec {
    l: usize,
    s: usize,
    d: usize,
    terms: BTreeMap<Monomial, Vec<FormalCoeff>>,
}

impl PolyVec {
    pub fn zero(l: usize, s: usize, d: usize) -> Self {
        PolyVec { l, s, d, terms: BTreeMap::new() }
    }

    /// `coeffs * monomial`; the monomial must match `(l, s)`.
    pub fn term(l: usize, s: usize, mono: Monomial, coeffs: Vec<FormalCoeff>) -> Self {
        let mut p = PolyVec::zero(l, s, coeffs.len());
        p.add_term(mono, &coeffs, &Rat::one());
        p
    }

    /// The constant vector polynomial.
    pub fn constant(l: usize, s: usize, coeffs: Vec<FormalCoeff>) -> Self {
        Self::term(l, s, Monomial::one(l, s), coeffs)
    }

    /// Scalar polynomial `n_j` (zero-based `j`).
    pub fn n_var(l: usize, s: usize, j: usize) -> Self {
        let mono = Monomial { n: ExpVec::unit(l, j), h: vec![ExpVec::zero(l); s] };
        Self::term(l, s, mono, vec![FormalCoeff::from_int(1)])
    }

    /// Scalar polynomial `h_{t,j}` (zero-based block `t` and coordinate `j`).
    pub fn h_var(l: usize, s: usize, t: usize, j: usize) -> Self {
        let mut h = vec![ExpVec::zero(l); s];
        h[t] = ExpVec::unit(l, j);
        Self::term(l, s, Monomial { n: ExpVec::zero(l), h }, vec![FormalCoeff::from_int(1)])
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Vec<FormalCoeff>)> {
        self.terms.iter()
    }

    pub fn coeff(&self, mono: &Monomial) -> Option<&Vec<FormalCoeff>> {
        self.terms.get(mono)
    }

    fn add_term(&mut self, mono: Monomial, coeffs: &[FormalCoeff], scale: &Rat) {
        debug_assert_eq!(coeffs.len(), self.d);
        let entry = self.terms.entry(mono.clone()).or_insert_with(|| vec![FormalCoeff::zero(); coeffs.len()]);
        for (e, c) in entry.iter_mut().zip(coeffs) {
            e.add_assign_scaled(c, scale);
        }
        if entry.iter().all(FormalCoeff::is_zero) {
            self.terms.remove(&mono);
        }
    }

    fn check_shape(&self, other: &PolyVec) -> Result<(), PolyError> {
        if (self.l, self.s, self.d) != (other.l, other.s, other.d) {
            return Err(PolyError::Shape(format!(
                "(L,s,d) = ({},{},{}) vs ({},{},{})",
                self.l, self.s, self.d, other.l, other.s, other.d
            )));
        }
        Ok(())
    }

    fn combine(&self, other: &PolyVec, scale: &Rat) -> PolyVec {
        self.check_shape(other).expect("polynomial shapes differ");
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c, scale);
        }
        out
    }

    pub fn add(&self, other: &PolyVec) -> PolyVec {
        self.combine(other, &Rat::one())
    }

    pub fn sub(&self, other: &PolyVec) -> PolyVec {
        self.combine(other, &-Rat::one())
    }

    pub fn neg(&self) -> PolyVec {
        self.scale(&-Rat::one())
    }

    pub fn scale(&self, k: &Rat) -> PolyVec {
        let mut out = PolyVec::zero(self.l, self.s, self.d);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c, k);
        }
        out
    }

    /// Polynomial product. One factor must be scalar (`d = 1`) or both must
    /// share `d` (componentwise), and at most one factor may carry symbols.
    pub fn mul(&self, other: &PolyVec) -> Result<PolyVec, PolyError> {
        if (self.l, self.s) != (other.l, other.s) {
            return Err(PolyError::Shape("variable blocks differ".into()));
        }
        let d = match (self.d, other.d) {
            (a, b) if a == b => a,
            (1, b) => b,
            (a, 1) => a,
            (a, b) => return Err(PolyError::Shape(format!("cannot multiply d={a} by d={b}"))),
        };
        let mut out = PolyVec::zero(self.l, self.s, d);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let mono = Monomial {
                    n: m1.n.add(&m2.n),
                    h: m1.h.iter().zip(&m2.h).map(|(a, b)| a.add(b)).collect(),
                };
                let mut coeffs = Vec::with_capacity(d);
                for c in 0..d {
                    let a = &c1[if self.d == 1 { 0 } else { c }];
                    let b = &c2[if other.d == 1 { 0 } else { c }];
                    coeffs.push(a.mul(b)?);
                }
                out.add_term(mono, &coeffs, &Rat::one());
            }
        }
        Ok(out)
    }

    pub fn pow(&self, e: u32) -> Result<PolyVec, PolyError> {
        let mut acc = PolyVec::constant(self.l, self.s, vec![FormalCoeff::from_int(1); self.d]);
        for _ in 0..e {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Degree in the `n` block; the zero polynomial reports 0 (see [`PolyVec::is_zero`]).
    pub fn deg_n(&self) -> u32 {
        self.terms.keys().map(|m| m.n.total()).max().unwrap_or(0)
    }

    /// Total degree in all variables.
    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(Monomial::total).max().unwrap_or(0)
    }

    /// True when no monomial with a nonzero coefficient involves `n`.
    pub fn is_constant_n(&self) -> bool {
        self.terms.keys().all(|m| m.n.is_zero())
    }

    pub fn has_symbols(&self) -> bool {
        self.terms.values().flatten().any(FormalCoeff::has_symbols)
    }

    pub fn symbols(&self) -> BTreeSet<Symbol> {
        self.terms.values().flatten().flat_map(|c| c.symbols().cloned()).collect()
    }

    /// Adds an extra `h` block on which the polynomial does not depend.
    pub fn lift(&self) -> PolyVec {
        let mut out = PolyVec::zero(self.l, self.s + 1, self.d);
        for (m, c) in &self.terms {
            out.terms.insert(m.with_h_block(ExpVec::zero(self.l)), c.clone());
        }
        out
    }

    /// Substitutes `n <- n + h_{s+1}`, producing a polynomial in `s + 1` blocks.
    pub fn shift_n(&self) -> PolyVec {
        let mut out = PolyVec::zero(self.l, self.s + 1, self.d);
        for (m, c) in &self.terms {
            for part in m.n.divisors() {
                let rest = m.n.checked_sub(&part).expect("divisor");
                let k = Rat::from_integer(m.n.binom(&part));
                let mono = Monomial { n: rest, h: m.h.clone() }.with_h_block(part);
                out.add_term(mono, c, &k);
            }
        }
        out
    }

    /// Component `c` as a scalar polynomial.
    pub fn component(&self, c: usize) -> PolyVec {
        let mut out = PolyVec::zero(self.l, self.s, 1);
        for (m, cs) in &self.terms {
            out.add_term(m.clone(), std::slice::from_ref(&cs[c]), &Rat::one());
        }
        out
    }

    /// Stacks scalar polynomials into a vector polynomial.
    pub fn from_components(comps: &[PolyVec]) -> Result<PolyVec, PolyError> {
        let first = comps.first().ok_or_else(|| PolyError::Shape("no components".into()))?;
        let (l, s) = (first.l, first.s);
        let d = comps.len();
        let mut out = PolyVec::zero(l, s, d);
        for (c, p) in comps.iter().enumerate() {
            if p.d != 1 || p.l != l || p.s != s {
                return Err(PolyError::Shape("components must be scalar with equal blocks".into()));
            }
            for (m, cs) in &p.terms {
                let mut coeffs = vec![FormalCoeff::zero(); d];
                coeffs[c] = cs[0].clone();
                out.add_term(m.clone(), &coeffs, &Rat::one());
            }
        }
        Ok(out)
    }

    /// Scalar polynomial times a fixed direction vector.
    pub fn times_direction(&self, v: &[BigInt]) -> PolyVec {
        assert_eq!(self.d, 1, "direction product needs a scalar polynomial");
        let mut out = PolyVec::zero(self.l, self.s, v.len());
        for (m, cs) in &self.terms {
            let coeffs: Vec<FormalCoeff> = v.iter().map(|x| cs[0].scale(&Rat::from_integer(x.clone()))).collect();
            out.add_term(m.clone(), &coeffs, &Rat::one());
        }
        out
    }

    /// Drops every monomial free of `n`; two polynomials are essentially
    /// equal exactly when these parts agree.
    pub fn n_part(&self) -> PolyVec {
        let mut out = self.clone();
        out.terms.retain(|m, _| !m.n.is_zero());
        out
    }

    /// Reads a scalar template as a vector polynomial in `Q^d`: every symbol
    /// `b[w,v]` stands for the whole vector `b_{w,v}`, so each component
    /// repeats the template. Numeric constants are copied to every coordinate.
    pub fn broadcast(&self, d: usize) -> PolyVec {
        assert_eq!(self.d, 1, "broadcast needs a scalar template");
        let mut out = PolyVec::zero(self.l, self.s, d);
        for (m, cs) in &self.terms {
            out.add_term(m.clone(), &vec![cs[0].clone(); d], &Rat::one());
        }
        out
    }

    /// Re-embeds an `h`-free polynomial in `new_l` variables, mapping `n_j`
    /// to `n_{offset + j}`.
    pub fn embed_n(&self, new_l: usize, offset: usize) -> PolyVec {
        assert_eq!(self.s, 0, "embedding is defined for polynomials in n only");
        assert!(offset + self.l <= new_l);
        let mut out = PolyVec::zero(new_l, 0, self.d);
        for (m, c) in &self.terms {
            let mut e = vec![0; new_l];
            e[offset..offset + self.l].copy_from_slice(m.n.entries());
            out.add_term(Monomial { n: ExpVec::new(e), h: vec![] }, c, &Rat::one());
        }
        out
    }

    /// Coefficient of `n_j` (zero-based) as a polynomial in the `h` blocks.
    pub fn n_linear_coeff(&self, j: usize) -> PolyVec {
        let unit = ExpVec::unit(self.l, j);
        let mut out = PolyVec::zero(self.l, self.s, self.d);
        for (m, c) in &self.terms {
            if m.n == unit {
                out.add_term(Monomial { n: ExpVec::zero(self.l), h: m.h.clone() }, c, &Rat::one());
            }
        }
        out
    }

    /// Coefficient vector at the level `n^b h_1^{a_1} ... h_s^{a_s}` (zero if absent).
    pub fn level(&self, mono: &Monomial) -> Vec<FormalCoeff> {
        self.terms.get(mono).cloned().unwrap_or_else(|| vec![FormalCoeff::zero(); self.d])
    }

    /// Replaces every symbol by its value under `inst`.
    pub fn instantiate(&self, inst: &NumericInstance) -> Result<PolyVec, PolyError> {
        let mut out = PolyVec::zero(self.l, self.s, self.d);
        for (m, cs) in &self.terms {
            let coeffs = cs
                .iter()
                .enumerate()
                .map(|(c, k)| k.eval(inst, c).map(FormalCoeff::constant))
                .collect::<Result<Vec<_>, _>>()?;
            out.add_term(m.clone(), &coeffs, &Rat::one());
        }
        Ok(out)
    }

    /// Point evaluation at integer arguments.
    pub fn eval(&self, inst: &NumericInstance, n: &[BigInt], h: &[Vec<BigInt>]) -> Result<Vec<Rat>, PolyError> {
        if n.len() != self.l || h.len() != self.s || h.iter().any(|x| x.len() != self.l) {
            return Err(PolyError::Shape("evaluation point has the wrong shape".into()));
        }
        let mut out = vec![Rat::zero(); self.d];
        for (m, cs) in &self.terms {
            let mut mv = BigInt::one();
            for (x, e) in n.iter().zip(m.n.entries()) {
                mv *= num_traits::pow(x.clone(), *e as usize);
            }
            for (blk, a) in h.iter().zip(&m.h) {
                for (x, e) in blk.iter().zip(a.entries()) {
                    mv *= num_traits::pow(x.clone(), *e as usize);
                }
            }
            let mv = Rat::from_integer(mv);
            for (c, k) in cs.iter().enumerate() {
                out[c] += k.eval(inst, c)? * &mv;
            }
        }
        Ok(out)
    }

    /// The constant-in-everything part as rationals, if the polynomial is symbol free.
    pub fn as_integer_coeffs(&self) -> Option<Vec<(Monomial, Vec<Rat>)>> {
        self.terms
            .iter()
            .map(|(m, cs)| {
                cs.iter()
                    .map(|c| if c.has_symbols() { None } else { Some(c.constant_part().clone()) })
                    .collect::<Option<Vec<_>>>()
                    .map(|v| (m.clone(), v))
            })
            .collect()
    }

    fn var_name(&self, block: Option<usize>, j: usize) -> String {
        match (block, self.l) {
            (None, 1) => "n".to_string(),
            (None, _) => format!("n{}", j + 1),
            (Some(t), 1) => format!("h{}", t + 1),
            (Some(t), _) => format!("h{}_{}", t + 1, j + 1),
        }
    }

    fn monomial_text(&self, m: &Monomial) -> Option<String> {
        let mut parts = Vec::new();
        let mut push = |name: String, e: u32| match e {
            0 => {}
            1 => parts.push(name),
            _ => parts.push(format!("{name}^{e}")),
        };
        for (j, &e) in m.n.entries().iter().enumerate() {
            push(self.var_name(None, j), e);
        }
        for (t, a) in m.h.iter().enumerate() {
            for (j, &e) in a.entries().iter().enumerate() {
                push(self.var_name(Some(t), j), e);
            }
        }
        if parts.is_empty() {
            None
        } else {
            Some(parts.join("*"))
        }
    }

    /// Canonical text of component `c`, highest monomial first.
    pub fn render_component(&self, c: usize) -> String {
        let mut parts: Vec<(Rat, Option<String>)> = Vec::new();
        for (m, cs) in self.terms.iter().rev() {
            let coeff = &cs[c];
            let mono = self.monomial_text(m);
            for (sym, k) in coeff.terms() {
                let body = match &mono {
                    Some(t) => format!("{sym}*{t}"),
                    None => sym.to_string(),
                };
                parts.push((k.clone(), Some(body)));
            }
            if !coeff.constant_part().is_zero() {
                parts.push((coeff.constant_part().clone(), mono.clone()));
            }
        }
        if parts.is_empty() {
            return "0".to_string();
        }
        struct Terms<'a>(&'a [(Rat, Option<String>)]);
        impl fmt::Display for Terms<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write_signed_terms(f, self.0)
            }
        }
        Terms(&parts).to_string()
    }

    /// Parses a scalar polynomial in the variables of `(l, s)`.
    pub fn parse_scalar(text: &str, l: usize, s: usize) -> Result<PolyVec, PolyError> {
        let mut p = Parser::new(text, l, s);
        let out = p.expr()?;
        p.skip_ws();
        if p.pos < p.src.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(out)
    }

    /// Parses `[e_1, ..., e_d]`.
    pub fn parse_vector(text: &str, l: usize, s: usize) -> Result<PolyVec, PolyError> {
        let mut p = Parser::new(text, l, s);
        let comps = p.vector()?;
        p.skip_ws();
        if p.pos < p.src.len() {
            return Err(p.err("unexpected trailing input"));
        }
        PolyVec::from_components(&comps)
    }
}

impl fmt::Display for PolyVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let comps: Vec<String> = (0..self.d).map(|c| self.render_component(c)).collect();
        write!(f, "[{}]", comps.join(", "))
    }
}

/// Recursive-descent parser for the canonical text format.
pub(crate) struct Parser<'a> {
    src: &'a [u8],
    pub(crate) pos: usize,
    l: usize,
    s: usize,
}

impl<'a> Parser<'a> {
    pub(crate) fn new(text: &'a str, l: usize, s: usize) -> Self {
        Parser { src: text.as_bytes(), pos: 0, l, s }
    }

    fn err(&self, msg: &str) -> PolyError {
        PolyError::Parse { col: self.pos + 1, msg: msg.to_string() }
    }

    pub(crate) fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, b: u8) -> bool {
        if self.peek() == Some(b) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, b: u8) -> Result<(), PolyError> {
        if self.eat(b) {
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", b as char)))
        }
    }

    pub(crate) fn vector(&mut self) -> Result<Vec<PolyVec>, PolyError> {
        self.expect(b'[')?;
        let mut comps = vec![self.expr()?];
        while self.eat(b',') {
            comps.push(self.expr()?);
        }
        self.expect(b']')?;
        Ok(comps)
    }

    pub(crate) fn expr(&mut self) -> Result<PolyVec, PolyError> {
        let mut acc = if self.eat(b'-') { self.term()?.neg() } else { self.term()? };
        loop {
            if self.eat(b'+') {
                acc = acc.add(&self.term()?);
            } else if self.eat(b'-') {
                acc = acc.sub(&self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<PolyVec, PolyError> {
        let mut acc = self.power()?;
        loop {
            if self.eat(b'*') {
                let rhs = self.power()?;
                let at = self.pos;
                acc = acc.mul(&rhs).map_err(|e| match e {
                    PolyError::NonLinear => PolyError::Parse {
                        col: at + 1,
                        msg: "product of symbol-bearing factors is not allowed".into(),
                    },
                    other => other,
                })?;
            } else if self.eat(b'/') {
                let den = self.uint()?;
                if den.is_zero() {
                    return Err(self.err("division by zero"));
                }
                acc = acc.scale(&Rat::new(BigInt::one(), den));
            } else {
                return Ok(acc);
            }
        }
    }

    fn power(&mut self) -> Result<PolyVec, PolyError> {
        let base = if self.eat(b'-') { self.atom()?.neg() } else { self.atom()? };
        if self.eat(b'^') {
            let e = self.uint()?.to_u32().ok_or_else(|| self.err("exponent too large"))?;
            if e > 1 && base.has_symbols() {
                return Err(self.err("power of a symbol-bearing factor is not allowed"));
            }
            base.pow(e)
        } else {
            Ok(base)
        }
    }

    fn uint(&mut self) -> Result<BigInt, PolyError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected an integer"));
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        Ok(digits.parse::<BigInt>().expect("digits parse"))
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn atom(&mut self) -> Result<PolyVec, PolyError> {
        let (l, s) = (self.l, self.s);
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let k = self.uint()?;
                Ok(PolyVec::constant(l, s, vec![FormalCoeff::constant(Rat::from_integer(k))]))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                let name = self.ident();
                if name == "b" && self.peek() == Some(b'[') {
                    return self.symbol_atom();
                }
                self.variable(&name).ok_or(PolyError::Parse {
                    col: start + 1,
                    msg: format!("unknown variable '{name}'"),
                })
            }
            _ => Err(self.err("expected a number, variable, symbol or '('")),
        }
    }

    fn symbol_atom(&mut self) -> Result<PolyVec, PolyError> {
        self.expect(b'[')?;
        let w = self.uint()?.to_usize().ok_or_else(|| self.err("symbol index too large"))?;
        let mut v = Vec::new();
        while self.eat(b',') {
            v.push(self.uint()?.to_u32().ok_or_else(|| self.err("exponent too large"))?);
        }
        self.expect(b']')?;
        if v.len() != self.l {
            return Err(self.err(&format!("symbol exponent has {} entries, expected {}", v.len(), self.l)));
        }
        let coeff = FormalCoeff::symbol(Symbol::new(w, ExpVec::new(v)), Rat::one());
        Ok(PolyVec::constant(self.l, self.s, vec![coeff]))
    }

    fn variable(&self, name: &str) -> Option<PolyVec> {
        let (l, s) = (self.l, self.s);
        if name == "n" && l == 1 {
            return Some(PolyVec::n_var(l, s, 0));
        }
        if let Some(rest) = name.strip_prefix('n') {
            let j: usize = rest.parse().ok()?;
            return (j >= 1 && j <= l).then(|| PolyVec::n_var(l, s, j - 1));
        }
        let rest = name.strip_prefix('h')?;
        let (t, j) = match rest.split_once('_') {
            Some((t, j)) => (t.parse::<usize>().ok()?, j.parse::<usize>().ok()?),
            None if l == 1 => (rest.parse::<usize>().ok()?, 1),
            None => return None,
        };
        (t >= 1 && t <= s && j >= 1 && j <= l).then(|| PolyVec::h_var(l, s, t - 1, j - 1))
    }
}

/// True iff every member and every pairwise difference is non-constant in `n`,
/// as formal polynomials.
pub fn essentially_distinct(family: &[PolyVec]) -> bool {
    degeneracy_witness(family).is_none()
}

/// First offending pair `(i, j)` (one-based, `j = 0` for a constant member)
/// that breaks essential distinctness.
pub fn degeneracy_witness(family: &[PolyVec]) -> Option<(usize, usize)> {
    for (i, p) in family.iter().enumerate() {
        if p.is_constant_n() {
            return Some((i + 1, 0));
        }
    }
    for i in 0..family.len() {
        for j in i + 1..family.len() {
            if family[i].sub(&family[j]).is_constant_n() {
                return Some((i + 1, j + 1));
            }
        }
    }
    None
}

/// `Delta^K P`, built by `K` successive `P(n + h_new, ...) - P(n, ...)` steps.
pub fn iterated_difference(p: &PolyVec, k: usize) -> PolyVec {
    let mut acc = p.clone();
    for _ in 0..k {
        acc = acc.shift_n().sub(&acc.lift());
    }
    acc
}

/// True iff the instantiated polynomial is not identically zero, in which
/// case its zero set has Banach density zero.
pub fn is_zero_density_solution_set(p: &PolyVec, inst: &NumericInstance) -> Result<bool, PolyError> {
    Ok(!p.instantiate(inst)?.is_zero())
}

/// Least common multiple of the denominators of a rational vector.
pub fn denominator_lcm(v: &[Rat]) -> BigInt {
    v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}

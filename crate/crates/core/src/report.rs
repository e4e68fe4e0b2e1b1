//! Ergodicity hypotheses of the decomposition and joint ergodicity theorems,
//! as deduplicated lists of subgroups with text and JSON renderings.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::lattice::{IntLattice, LatticeError};
use crate::pet::{g_groups, step_bound, PetError, StepBound};
use crate::polycore::{NumericInstance, PolyVec, Rat};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReportError {
    #[error(transparent)]
    Pet(#[from] PetError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("family is not in split form: {0}")]
    NotSplit(String),
    #[error("cannot parse report: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Theorem {
    /// Nilsequence plus nullsequence decomposition.
    MainThm,
    /// Joint ergodicity for families of the form `p_i(n) v_i`.
    J2,
    /// Sufficient condition for joint ergodicity of general families.
    J3,
}

impl fmt::Display for Theorem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Theorem::MainThm => "mainthm",
            Theorem::J2 => "j2",
            Theorem::J3 => "j3",
        })
    }
}

impl FromStr for Theorem {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "mainthm" => Ok(Theorem::MainThm),
            "j2" => Ok(Theorem::J2),
            "j3" => Ok(Theorem::J3),
            other => Err(ReportError::Parse(format!("unknown theorem `{other}`"))),
        }
    }
}

/// Hypotheses of one theorem: each listed subgroup must act ergodically, and
/// when `product_flag` is set the diagonal product system must be ergodic too.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionSet {
    pub theorem: Theorem,
    pub d: usize,
    pub groups: Vec<IntLattice>,
    pub product_flag: bool,
    pub bound: Option<StepBound>,
}

impl ConditionSet {
    pub fn new(theorem: Theorem, d: usize, product_flag: bool) -> ConditionSet {
        ConditionSet { theorem, d, groups: vec![], product_flag, bound: None }
    }

    /// Appends `g` unless an equal lattice is already listed.
    pub fn push(&mut self, g: IntLattice) {
        if !self.groups.contains(&g) {
            self.groups.push(g);
        }
    }

    /// Same groups regardless of order.
    pub fn same_groups(&self, expected: &[IntLattice]) -> bool {
        self.groups.len() == expected.len() && expected.iter().all(|g| self.groups.contains(g))
    }

    /// The human-readable group list, e.g. `T1, T2·T3^{-1}`.
    pub fn render_groups(&self) -> String {
        self.groups.iter().map(render_lattice).collect::<Vec<_>>().join(", ")
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("theorem: {}\nd: {}\ngroups: {}\nproduct_flag: {}\n", self.theorem, self.d, self.render_groups(), self.product_flag);
        if let Some(b) = &self.bound {
            out.push_str(&format!("D: {} (t={} s={} s'={} L={})\n", b, b.t, b.s, b.s_prime, b.l));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<ConditionSet, ReportError> {
        let mut theorem = None;
        let mut d = None;
        let mut groups_line = None;
        let mut flag = None;
        let mut bound = None;
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (key, value) = line.split_once(':').ok_or_else(|| ReportError::Parse(format!("bad line `{line}`")))?;
            let value = value.trim();
            match key.trim() {
                "theorem" => theorem = Some(value.parse::<Theorem>()?),
                "d" => d = Some(value.parse::<usize>().map_err(|e| ReportError::Parse(e.to_string()))?),
                "groups" => groups_line = Some(value.to_string()),
                "product_flag" => {
                    flag = Some(value.parse::<bool>().map_err(|e| ReportError::Parse(e.to_string()))?)
                }
                "D" => bound = Some(parse_bound_counters(value)?),
                other => return Err(ReportError::Parse(format!("unknown key `{other}`"))),
            }
        }
        let missing = |what: &str| ReportError::Parse(format!("missing `{what}`"));
        let d = d.ok_or_else(|| missing("d"))?;
        let mut set = ConditionSet::new(theorem.ok_or_else(|| missing("theorem"))?, d, flag.ok_or_else(|| missing("product_flag"))?);
        for piece in split_top_level(&groups_line.ok_or_else(|| missing("groups"))?) {
            set.groups.push(parse_lattice(&piece, d)?);
        }
        set.bound = bound;
        Ok(set)
    }

    pub fn to_json(&self) -> Value {
        let groups: Vec<Value> = self
            .groups
            .iter()
            .map(|g| Value::Array(g.basis().iter().map(|row| json!(row.iter().map(|x| x.to_string()).collect::<Vec<_>>())).collect()))
            .collect();
        let bound = self.bound.as_ref().map(|b| {
            json!({"t": b.t, "s": b.s, "s_prime": b.s_prime, "L": b.l, "value": b.to_string(), "log10": b.log10()})
        });
        json!({
            "theorem": self.theorem.to_string(),
            "d": self.d,
            "groups": groups,
            "rendered": self.render_groups(),
            "product_flag": self.product_flag,
            "D": bound,
        })
    }

    pub fn from_json(v: &Value) -> Result<ConditionSet, ReportError> {
        let bad = |what: &str| ReportError::Parse(format!("bad or missing `{what}`"));
        let theorem: Theorem = v["theorem"].as_str().ok_or_else(|| bad("theorem"))?.parse()?;
        let d = v["d"].as_u64().ok_or_else(|| bad("d"))? as usize;
        let flag = v["product_flag"].as_bool().ok_or_else(|| bad("product_flag"))?;
        let mut set = ConditionSet::new(theorem, d, flag);
        for g in v["groups"].as_array().ok_or_else(|| bad("groups"))? {
            let rows = g.as_array().ok_or_else(|| bad("groups"))?;
            let mut gens = Vec::new();
            for row in rows {
                let row = row.as_array().ok_or_else(|| bad("groups"))?;
                let parsed = row
                    .iter()
                    .map(|x| match x {
                        Value::String(s) => s.parse::<BigInt>().ok(),
                        Value::Number(n) => n.as_i64().map(BigInt::from),
                        _ => None,
                    })
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| bad("groups"))?;
                if parsed.len() != d {
                    return Err(bad("groups"));
                }
                gens.push(parsed);
            }
            set.groups.push(IntLattice::from_generators(d, &gens));
        }
        if let Some(b) = v.get("D").filter(|b| !b.is_null()) {
            let field = |k: &str| b[k].as_u64().ok_or_else(|| bad("D"));
            set.bound = Some(StepBound::new(field("t")?, field("s")?, field("s_prime")?, field("L")?));
        }
        Ok(set)
    }
}

impl fmt::Display for ConditionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn parse_bound_counters(value: &str) -> Result<StepBound, ReportError> {
    let inner = value
        .split_once('(')
        .and_then(|(_, rest)| rest.strip_suffix(')'))
        .ok_or_else(|| ReportError::Parse(format!("bad D line `{value}`")))?;
    let mut counters = [None; 4];
    for part in inner.split_whitespace() {
        let (k, v) = part.split_once('=').ok_or_else(|| ReportError::Parse(format!("bad counter `{part}`")))?;
        let slot = match k {
            "t" => 0,
            "s" => 1,
            "s'" => 2,
            "L" => 3,
            _ => return Err(ReportError::Parse(format!("unknown counter `{k}`"))),
        };
        counters[slot] = Some(v.parse::<u64>().map_err(|e| ReportError::Parse(e.to_string()))?);
    }
    match counters {
        [Some(t), Some(s), Some(sp), Some(l)] => Ok(StepBound::new(t, s, sp, l)),
        _ => Err(ReportError::Parse(format!("incomplete D line `{value}`"))),
    }
}

/// `T1^{a_1}·…·Td^{a_d}` with zero exponents omitted and unit exponents bare.
pub fn render_generator(v: &[BigInt]) -> String {
    let parts: Vec<String> = v
        .iter()
        .enumerate()
        .filter(|(_, a)| !a.is_zero())
        .map(|(i, a)| if *a == BigInt::from(1) { format!("T{}", i + 1) } else { format!("T{}^{{{}}}", i + 1, a) })
        .collect();
    if parts.is_empty() {
        "id".to_string()
    } else {
        parts.join("·")
    }
}

/// A single generator, `<g_1, ..., g_r>`, `the full Z^d action`, or `<>`.
pub fn render_lattice(g: &IntLattice) -> String {
    match g.rank() {
        0 => "<>".to_string(),
        r if r == g.dim() && g.is_full() && g.dim() > 1 => format!("the full Z^{} action", g.dim()),
        1 => render_generator(&g.basis()[0]),
        _ => format!("<{}>", g.basis().iter().map(|b| render_generator(b)).collect::<Vec<_>>().join(", ")),
    }
}

fn parse_generator(text: &str, d: usize) -> Result<Vec<BigInt>, ReportError> {
    let bad = || ReportError::Parse(format!("bad generator `{text}`"));
    let mut v = vec![BigInt::zero(); d];
    if text.trim() == "id" {
        return Ok(v);
    }
    for factor in text.trim().split('·') {
        let rest = factor.strip_prefix('T').ok_or_else(bad)?;
        let (idx, exp) = match rest.split_once('^') {
            Some((i, e)) => {
                let e = e.strip_prefix('{').and_then(|e| e.strip_suffix('}')).ok_or_else(bad)?;
                (i, e.parse::<BigInt>().map_err(|_| bad())?)
            }
            None => (rest, BigInt::from(1)),
        };
        let i: usize = idx.parse().map_err(|_| bad())?;
        if i == 0 || i > d {
            return Err(bad());
        }
        v[i - 1] += exp;
    }
    Ok(v)
}

/// Inverse of [`render_lattice`].
pub fn parse_lattice(text: &str, d: usize) -> Result<IntLattice, ReportError> {
    let text = text.trim();
    if text == format!("the full Z^{d} action") {
        return Ok(IntLattice::full(d));
    }
    if let Some(inner) = text.strip_prefix('<').and_then(|t| t.strip_suffix('>')) {
        let gens = inner
            .split(',')
            .map(str::trim)
            .filter(|g| !g.is_empty())
            .map(|g| parse_generator(g, d))
            .collect::<Result<Vec<_>, _>>()?;
        return Ok(IntLattice::from_generators(d, &gens));
    }
    Ok(IntLattice::from_generators(d, &[parse_generator(text, d)?]))
}

fn split_top_level(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in text.chars() {
        match ch {
            '<' => depth += 1,
            '>' => depth -= 1,
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut cur));
                continue;
            }
            _ => {}
        }
        cur.push(ch);
    }
    if !cur.trim().is_empty() {
        out.push(cur);
    }
    out.into_iter().map(|s| s.trim().to_string()).collect()
}

fn instantiate_family(family: &[PolyVec], inst: &NumericInstance) -> Result<Vec<PolyVec>, ReportError> {
    family.iter().map(|p| p.instantiate(inst).map_err(|e| ReportError::Pet(e.into()))).collect()
}

fn pairwise_groups(family: &[PolyVec], inst: &NumericInstance, theorem: Theorem, flag: bool) -> Result<ConditionSet, ReportError> {
    let g = g_groups(family, inst)?;
    let k = family.len();
    let mut set = ConditionSet::new(theorem, family[0].d(), flag);
    for i in 1..=k {
        for j in (0..=k).filter(|&j| j != i) {
            set.push(g[&(i, j)].clone());
        }
    }
    Ok(set)
}

/// Every `G_{i,j}(p)` plus the step bound `D`. The bound is left out when
/// some reduction schedule cannot be found within the search budget; the
/// groups do not depend on it.
pub fn mainthm_conditions(family: &[PolyVec], inst: &NumericInstance) -> Result<ConditionSet, ReportError> {
    if family.is_empty() {
        return Err(PetError::Empty.into());
    }
    let mut set = pairwise_groups(family, inst, Theorem::MainThm, false)?;
    set.bound = match step_bound(&instantiate_family(family, inst)?) {
        Ok((d, _)) => Some(d),
        Err(PetError::FuelExhausted { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    Ok(set)
}

/// Every `G_{i,j}(p)` together with the product-system requirement.
pub fn j3_conditions(family: &[PolyVec], inst: &NumericInstance) -> Result<ConditionSet, ReportError> {
    if family.is_empty() {
        return Err(PetError::Empty.into());
    }
    pairwise_groups(family, inst, Theorem::J3, true)
}

fn rank_over_q(rows: &[Vec<Rat>]) -> usize {
    let mut m: Vec<Vec<Rat>> = rows.to_vec();
    let width = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..width {
        let Some(p) = (rank..m.len()).find(|&r| !m[r][col].is_zero()) else { continue };
        m.swap(rank, p);
        for r in 0..m.len() {
            if r != rank && !m[r][col].is_zero() {
                let f = &m[r][col] / &m[rank][col];
                for c in col..width {
                    let delta = &f * &m[rank][c];
                    m[r][c] -= delta;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Non-constant coefficients of two scalar polynomials over a shared monomial list.
fn coefficient_rows(p: &PolyVec, q: &PolyVec) -> Vec<Vec<Rat>> {
    let monos: std::collections::BTreeSet<_> =
        p.terms().chain(q.terms()).map(|(m, _)| m.clone()).filter(|m| !m.n.is_zero()).collect();
    [p, q]
        .iter()
        .map(|poly| monos.iter().map(|m| poly.level(m)[0].constant_part().clone()).collect())
        .collect()
}

/// For split families `p_i(n) v_i`, checks that every equal-degree pair has
/// dependent directions or dependent polynomials (modulo constants). The
/// emitted groups are `G_{i,0}` for every `i`, each implied by ergodicity of
/// the product system, followed by `G_{i,j}` for the equal-degree pairs.
pub fn j2_check(split: &[(PolyVec, Vec<BigInt>)]) -> Result<(bool, ConditionSet), ReportError> {
    let (first, v0) = split.first().ok_or(PetError::Empty)?;
    let d = v0.len();
    for (p, v) in split {
        if p.d() != 1 || p.s() != 0 || p.l() != first.l() || v.len() != d {
            return Err(ReportError::NotSplit("each entry needs a scalar polynomial and a direction in Z^d".into()));
        }
        if p.has_symbols() {
            return Err(ReportError::NotSplit("scalar polynomials must be numeric".into()));
        }
        if v.iter().all(Zero::is_zero) {
            return Err(ReportError::NotSplit("zero direction vector".into()));
        }
    }
    let family: Vec<PolyVec> = split.iter().map(|(p, v)| p.times_direction(v)).collect();
    let inst = NumericInstance::new(d);
    let g = g_groups(&family, &inst)?;
    let k = split.len();
    let mut applicable = true;
    let mut set = ConditionSet::new(Theorem::J2, d, true);
    for i in 1..=k {
        set.push(g[&(i, 0)].clone());
    }
    for i in 1..=k {
        for j in i + 1..=k {
            let (pi, vi) = &split[i - 1];
            let (pj, vj) = &split[j - 1];
            if pi.deg_n() != pj.deg_n() {
                continue;
            }
            let to_rat = |v: &Vec<BigInt>| v.iter().map(|x| Rat::from_integer(x.clone())).collect::<Vec<_>>();
            let dirs_dependent = rank_over_q(&[to_rat(vi), to_rat(vj)]) <= 1;
            let polys_dependent = rank_over_q(&coefficient_rows(pi, pj)) <= 1;
            applicable &= dirs_dependent || polys_dependent;
            set.push(g[&(i, j)].clone());
        }
    }
    Ok((applicable, set))
}

/// True when every group of `sub` also appears in `sup`.
pub fn is_subset(sub: &ConditionSet, sup: &ConditionSet) -> bool {
    sub.groups.iter().all(|g| sup.groups.contains(g))
}

/// Sign-normalised integer vector, for tests and renderings that want a
/// canonical generator of a rank-1 lattice.
pub fn primitive_generator(g: &IntLattice) -> Option<Vec<i64>> {
    if g.rank() != 1 {
        return None;
    }
    let row = &g.basis()[0];
    let flip = row.iter().find(|x| !x.is_zero()).is_some_and(Signed::is_negative);
    row.iter().map(|x| if flip { -x } else { x.clone() }.to_i64()).collect()
}

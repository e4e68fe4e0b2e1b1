//! PET induction: van der Corput operations on tuples of polynomial iterates,
//! the reduction scheduler, level data with types and symbols, and the
//! subgroups `G_{i,j}(p)` and `H_{i,m}(q)` together with containment
//! certificates and the nilsequence step bound.

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::lattice::IntLattice;
use crate::sketch::{SketchTuple, Sketcher, Specializer};
use crate::polycore::{degeneracy_witness, ExpVec, FormalCoeff, Monomial, NumericInstance, PolyError, PolyVec, Rat};

/// Upper bound on the length of a reduction schedule.
pub const SCHEDULE_FUEL: usize = 64;

/// Upper bound on the number of Step-1 polynomials the scheduler may build
/// over its whole search, trial operations included.
pub const WORK_BUDGET: usize = 150_000;

/// Largest slot count the scheduler will plan for; exact replay of longer
/// tuples is impractical.
pub const SLOT_LIMIT: usize = 4_096;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PetError {
    #[error("slot index {0} out of range 1..={1}")]
    SlotOutOfRange(usize, usize),
    #[error("function index {0} out of range 1..={1}")]
    FunctionOutOfRange(usize, usize),
    #[error("degenerate family: p{0} - p{1} is constant in n")]
    Degenerate(usize, usize),
    #[error("family members disagree on (L, s, d) or depend on h")]
    Shape,
    #[error("empty family")]
    Empty,
    #[error("scheduler exhausted its fuel or work budget; deepest prefix {history:?}")]
    FuelExhausted { history: Vec<usize> },
    #[error("tuple has no recorded history back to a root family")]
    MissingHistory,
    #[error("tuple is not linear (degree {0})")]
    NonLinear(u32),
    #[error("function {0} already has maximal degree; no dimension increment needed")]
    AlreadyStandard(usize),
    #[error("no group G_{{{i},j}} is contained in H_{{{i},{m}}}")]
    NoCertificate { i: usize, m: usize },
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// One constituent of the composite function occupying a slot: the source
/// function, whether it appears conjugated, and its `h`-shift.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tag {
    pub source: usize,
    pub conjugated: bool,
    pub shift: PolyVec,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slot {
    pub poly: PolyVec,
    pub tags: Vec<Tag>,
}

/// What one vdC-operation did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VdcRecord {
    /// Slot subtracted in Step 1 (one-based).
    pub rho: usize,
    /// Number of slots before the step.
    pub prev_len: usize,
    /// Step-1 polynomials removed for being constant in `n`.
    pub dropped: usize,
    /// Step-1 indices (one-based) of the classes, representative first.
    pub classes: Vec<Vec<usize>>,
    /// Slot polynomials after the step.
    pub polys: Vec<PolyVec>,
}

impl VdcRecord {
    pub fn survivors(&self) -> Vec<usize> {
        self.classes.iter().map(|c| c[0]).collect()
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        self.classes.iter().map(Vec::len).collect()
    }
}

/// The family a reduction started from, needed to interpret types.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Root {
    family: Vec<PolyVec>,
    symbol: Vec<usize>,
    distinguished: usize,
}

/// State of PET induction: slot list plus the history of applied operations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PetTuple {
    l: usize,
    s: usize,
    d: usize,
    slots: Vec<Slot>,
    history: Vec<Arc<VdcRecord>>,
    root: Root,
    trimmed: bool,
}

impl PetTuple {
    /// Root tuple of `family`, 1-standard position for function `distinguished`
    /// (one-based): that member goes to slot 1, the rest keep their order.
    pub fn from_family(family: &[PolyVec], distinguished: usize) -> Result<PetTuple, PetError> {
        let first = family.first().ok_or(PetError::Empty)?;
        let (l, d) = (first.l(), first.d());
        if family.iter().any(|p| p.l() != l || p.d() != d || p.s() != 0) {
            return Err(PetError::Shape);
        }
        if distinguished == 0 || distinguished > family.len() {
            return Err(PetError::FunctionOutOfRange(distinguished, family.len()));
        }
        if let Some((i, j)) = degeneracy_witness(family) {
            return Err(PetError::Degenerate(i, j));
        }
        let order: Vec<usize> =
            std::iter::once(distinguished).chain((1..=family.len()).filter(|&w| w != distinguished)).collect();
        let slots = order
            .iter()
            .map(|&w| Slot {
                poly: family[w - 1].clone(),
                tags: vec![Tag { source: w, conjugated: false, shift: PolyVec::zero(l, 0, d) }],
            })
            .collect();
        Ok(PetTuple {
            l,
            s: 0,
            d,
            slots,
            history: vec![],
            root: Root { family: family.to_vec(), symbol: order, distinguished },
            trimmed: false,
        })
    }

    /// The same tuple with every part free of `n` discarded, here and in all
    /// later vdC-operations. Such parts never influence the `n`-dependent
    /// terms, so schedules, degrees, level data with `b != 0`, `H`-groups
    /// and `c`-polynomials are unchanged; the cost drops considerably.
    pub fn trimmed(&self) -> PetTuple {
        let mut out = self.clone();
        out.trimmed = true;
        for slot in &mut out.slots {
            slot.poly = slot.poly.n_part();
        }
        out
    }

    pub fn is_trimmed(&self) -> bool {
        self.trimmed
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

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn polys(&self) -> Vec<PolyVec> {
        self.slots.iter().map(|s| s.poly.clone()).collect()
    }

    pub fn history(&self) -> &[Arc<VdcRecord>] {
        &self.history
    }

    pub fn root_family(&self) -> &[PolyVec] {
        &self.root.family
    }

    pub fn distinguished(&self) -> usize {
        self.root.distinguished
    }

    /// `deg(A)`, the largest `n`-degree among the slots.
    pub fn degree(&self) -> u32 {
        self.slots.iter().map(|s| s.poly.deg_n()).max().unwrap_or(0)
    }

    pub fn is_non_degenerate(&self) -> bool {
        degeneracy_witness(&self.polys()).is_none()
    }

    /// Slot 1 holds the distinguished function alone and has maximal degree.
    pub fn is_one_standard(&self) -> bool {
        let Some(first) = self.slots.first() else { return false };
        first.poly.deg_n() == self.degree()
            && first.tags.len() == 1
            && first.tags[0].source == self.root.distinguished
            && !first.tags[0].conjugated
            && first.tags[0].shift.is_zero()
    }

    /// The last operation neither dropped nor merged the first Step-1 polynomial.
    pub fn last_step_inherited(&self) -> bool {
        match self.history.last() {
            None => true,
            Some(rec) => rec.classes.first().is_some_and(|c| c == &vec![1]),
        }
    }

    /// The vdC-operation `∂_rho A` (Steps 1 to 3).
    pub fn vdc(&self, rho: usize) -> Result<PetTuple, PetError> {
        let k = self.slots.len();
        if rho == 0 || rho > k {
            return Err(PetError::SlotOutOfRange(rho, k));
        }
        let q = self.slots[rho - 1].poly.lift();
        // Step 1: shifted copies first, then unshifted ones.
        let mut star: Vec<(PolyVec, Vec<Tag>)> = Vec::with_capacity(2 * k);
        for slot in &self.slots {
            let tags = slot.tags.iter().map(|t| Tag { shift: t.shift.lift(), ..t.clone() }).collect();
            star.push((slot.poly.shift_n().sub(&q), tags));
        }
        for slot in &self.slots {
            let tags = slot
                .tags
                .iter()
                .map(|t| Tag { source: t.source, conjugated: !t.conjugated, shift: t.shift.lift() })
                .collect();
            star.push((slot.poly.lift().sub(&q), tags));
        }
        if self.trimmed {
            for (p, _) in star.iter_mut() {
                *p = p.n_part();
            }
        }
        // Step 2: drop constants, group by essential equality in Step-1 order.
        let mut dropped = 0;
        let mut classes: Vec<Vec<usize>> = Vec::new();
        let mut class_of: HashMap<PolyVec, usize> = HashMap::new();
        for (idx, (p, _)) in star.iter().enumerate() {
            if p.is_constant_n() {
                dropped += 1;
                continue;
            }
            match class_of.entry(p.n_part()) {
                Entry::Occupied(e) => classes[*e.get()].push(idx),
                Entry::Vacant(e) => {
                    e.insert(classes.len());
                    classes.push(vec![idx]);
                }
            }
        }
        // Step 3: one slot per class, members folded into the tag list.
        let mut slots = Vec::with_capacity(classes.len());
        for class in &classes {
            let rep = &star[class[0]].0;
            let mut tags = Vec::new();
            for &idx in class {
                let offset = star[idx].0.sub(rep);
                for t in &star[idx].1 {
                    tags.push(Tag { shift: t.shift.add(&offset), ..t.clone() });
                }
            }
            slots.push(Slot { poly: rep.clone(), tags });
        }
        let record = VdcRecord {
            rho,
            prev_len: k,
            dropped,
            classes: classes.iter().map(|c| c.iter().map(|i| i + 1).collect()).collect(),
            polys: slots.iter().map(|s| s.poly.clone()).collect(),
        };
        let mut history = self.history.clone();
        history.push(Arc::new(record));
        Ok(PetTuple { l: self.l, s: self.s + 1, d: self.d, slots, history, root: self.root.clone(), trimmed: self.trimmed })
    }

    /// Applies a sequence of vdC-operations.
    pub fn apply(&self, schedule: &[usize]) -> Result<PetTuple, PetError> {
        schedule.iter().try_fold(self.clone(), |a, &rho| a.vdc(rho))
    }

    /// A schedule `rho_1, ..., rho_t` taking the tuple to degree 1 through
    /// 1-inherited, 1-standard steps. Slots of minimal degree are tried first,
    /// later slots before earlier ones; slot 1 is a last resort.
    pub fn schedule(&self) -> Result<Vec<usize>, PetError> {
        self.reduce().map(|(_, s)| s)
    }

    /// Plans a schedule on modular fingerprints without building the exact
    /// tuples.
    pub fn plan(&self) -> Result<Plan, PetError> {
        if self.degree() <= 1 {
            return Ok(Plan { steps: vec![], len: self.len() });
        }
        let mut sk = Sketcher::new(self.l, self.d, self.degree(), self.s + SCHEDULE_FUEL);
        let slots = self.slots.iter().map(|s| sk.sketch(&s.poly)).collect::<Option<Vec<_>>>();
        let start = sk.tuple(slots.expect("monomial table covers every slot"));
        let mut search = Search { sk: &sk, budget: WORK_BUDGET, path: vec![], deepest: vec![], len: 0 };
        if !search.run(&start, self.s) {
            return Err(PetError::FuelExhausted { history: search.deepest });
        }
        Ok(Plan { steps: search.path, len: search.len })
    }

    /// Runs [`PetTuple::schedule`] and returns the final tuple with it. The
    /// schedule is planned on modular fingerprints and then replayed exactly
    /// on [`PetTuple::trimmed`] copies; use [`PetTuple::apply`] to rebuild the
    /// untrimmed tuple.
    pub fn reduce(&self) -> Result<(PetTuple, Vec<usize>), PetError> {
        let plan = self.plan()?;
        let exact = self.replay(&plan)?;
        Ok((exact, plan.schedule()))
    }

    fn replay(&self, plan: &Plan) -> Result<PetTuple, PetError> {
        let path = plan.schedule();
        let mut exact = self.trimmed();
        for &rho in &path {
            exact = exact.vdc(rho)?;
            if !(exact.last_step_inherited() && exact.is_one_standard()) {
                return Err(PetError::FuelExhausted { history: path.clone() });
            }
        }
        if exact.degree() > 1 {
            return Err(PetError::FuelExhausted { history: path });
        }
        Ok(exact)
    }

    /// Coefficient vector of the root family member `w` at `n^v` (`w = 0` is zero).
    pub fn root_coeff(&self, w: usize, v: &ExpVec) -> Vec<FormalCoeff> {
        if w == 0 {
            return vec![FormalCoeff::zero(); self.d];
        }
        self.root.family[w - 1].level(&Monomial::new(v.clone(), vec![]))
    }

    /// Level data `u(b; a_1, ..., a_s)` over every monomial present in some slot.
    pub fn level_data(&self) -> LevelData {
        let keys: BTreeSet<Monomial> =
            self.slots.iter().flat_map(|s| s.poly.terms().map(|(m, _)| m.clone())).collect();
        let entries = keys
            .into_iter()
            .map(|key| {
                let u = self.slots.iter().map(|s| s.poly.level(&key)).collect();
                (key, LevelEntry { u, ty: None, symbol: None })
            })
            .collect();
        LevelData { entries }
    }

    /// Type and symbol of the level `key`, propagated from the root through
    /// the recorded history.
    pub fn type_of(&self, key: &Monomial) -> Result<(LevelType, Vec<usize>), PetError> {
        if key.h.len() != self.s || self.history.len() != self.s {
            return Err(PetError::MissingHistory);
        }
        Ok(self.type_at(key, self.s))
    }

    fn type_at(&self, key: &Monomial, stage: usize) -> (LevelType, Vec<usize>) {
        if stage == 0 {
            let ty = LevelType { r: Rat::one(), i: 0, v: key.n.clone() };
            return (ty, self.root.symbol.clone());
        }
        let a = key.h.last().expect("h block present");
        let source = Monomial::new(key.n.add(a), key.h[..stage - 1].to_vec());
        let (ty, w) = self.type_at(&source, stage - 1);
        let rec = &self.history[stage - 1];
        let (ty, full) = if a.is_zero() {
            let i = w[rec.rho - 1];
            (LevelType { i, ..ty }, [w.clone(), w].concat())
        } else {
            let up = key.n.add(a);
            let r = ty.r * Rat::from_integer(up.binom(&key.n));
            let pad = vec![ty.i; w.len()];
            (LevelType { r, ..ty }, [w, pad].concat())
        };
        let symbol = rec.survivors().iter().map(|&idx| full[idx - 1]).collect();
        (ty, symbol)
    }

    /// Level data with types and symbols assigned by the propagation rule.
    pub fn assign_types(&self) -> Result<LevelData, PetError> {
        if self.history.len() != self.s {
            return Err(PetError::MissingHistory);
        }
        let mut data = self.level_data();
        for (key, entry) in data.entries.iter_mut() {
            let (ty, w) = self.type_of(key)?;
            entry.ty = Some(ty);
            entry.symbol = Some(w);
        }
        Ok(data)
    }

    /// Checks `u_m = r (b_{w_m,v} - b_{i,v})` as formal identities, plus the
    /// multinomial value of `r`, `v = b + a_1 + ... + a_s`, and `w_1` pointing
    /// at the distinguished function. Returns the first failing level.
    pub fn verify_types(&self, data: &LevelData) -> Result<(), Monomial> {
        for (key, entry) in &data.entries {
            let (Some(ty), Some(w)) = (&entry.ty, &entry.symbol) else { return Err(key.clone()) };
            let mut parts: Vec<&ExpVec> = vec![&key.n];
            parts.extend(key.h.iter());
            let v = key.h.iter().fold(key.n.clone(), |acc, a| acc.add(a));
            if ty.v != v || ty.r != Rat::from_integer(ExpVec::multinomial(&parts)) {
                return Err(key.clone());
            }
            if w.first() != Some(&self.root.distinguished) || w.len() != entry.u.len() {
                return Err(key.clone());
            }
            let base = self.root_coeff(ty.i, &ty.v);
            for (u_m, &w_m) in entry.u.iter().zip(w) {
                let top = self.root_coeff(w_m, &ty.v);
                for c in 0..self.d {
                    if u_m[c] != top[c].sub(&base[c]).scale(&ty.r) {
                        return Err(key.clone());
                    }
                }
            }
        }
        Ok(())
    }

    /// `H_{1,m}(q)` for `m = 0` and `m = 2..=len`: the saturation of the
    /// instantiated `u_1 - u_m` (or `u_1` for `m = 0`) over levels with `b != 0`.
    pub fn h_groups(&self, inst: &NumericInstance) -> Result<BTreeMap<usize, IntLattice>, PetError> {
        let polys = self.slots.iter().map(|s| s.poly.instantiate(inst)).collect::<Result<Vec<_>, _>>()?;
        let keys: BTreeSet<&Monomial> =
            polys.iter().flat_map(|p| p.terms().map(|(m, _)| m)).filter(|m| !m.n.is_zero()).collect();
        let consts = |p: &PolyVec, key: &Monomial| -> Vec<Rat> {
            p.level(key).iter().map(|c| c.constant_part().clone()).collect()
        };
        let mut out = BTreeMap::new();
        for m in std::iter::once(0).chain(2..=polys.len()) {
            let vectors: Vec<Vec<Rat>> = keys
                .iter()
                .map(|key| {
                    let u1 = consts(&polys[0], key);
                    if m == 0 {
                        u1
                    } else {
                        u1.iter().zip(consts(&polys[m - 1], key)).map(|(a, b)| a - b).collect()
                    }
                })
                .collect();
            out.insert(m, IntLattice::saturate(self.d, &vectors));
        }
        Ok(out)
    }

    /// For a linear tuple, the `n`-coefficients `d_m` turned into
    /// `c_1 = -d_1`, `c_m = d_m - d_1`. Each entry lists the `L` coordinates.
    pub fn c_polynomials(&self) -> Result<Vec<Vec<PolyVec>>, PetError> {
        if self.degree() != 1 {
            return Err(PetError::NonLinear(self.degree()));
        }
        let ds: Vec<Vec<PolyVec>> =
            self.slots.iter().map(|s| (0..self.l).map(|j| s.poly.n_linear_coeff(j)).collect()).collect();
        Ok(ds
            .iter()
            .enumerate()
            .map(|(m, dm)| {
                if m == 0 {
                    dm.iter().map(PolyVec::neg).collect()
                } else {
                    dm.iter().zip(&ds[0]).map(|(a, b)| a.sub(b)).collect()
                }
            })
            .collect())
    }

    /// One line per vdC step: operation, drops, class sizes and slot texts.
    pub fn trace(&self) -> Vec<String> {
        self.history
            .iter()
            .enumerate()
            .map(|(t, rec)| {
                let sizes: Vec<String> = rec.class_sizes().iter().map(ToString::to_string).collect();
                let polys: Vec<String> = rec.polys.iter().map(ToString::to_string).collect();
                format!(
                    "step={} rho={} dropped={} classes={} slots={}",
                    t + 1,
                    rec.rho,
                    rec.dropped,
                    sizes.join(","),
                    polys.join(" ; ")
                )
            })
            .collect()
    }
}

/// Slot order tried by the scheduler: non-first slots by ascending degree,
/// later slots first among equals, then slot 1.
fn candidates(degrees: &[u32]) -> Vec<usize> {
    let mut c: Vec<usize> = (2..=degrees.len()).collect();
    c.sort_by_key(|&r| (degrees[r - 1], std::cmp::Reverse(r)));
    c.push(1);
    c
}

/// A planned reduction: each step's operation with the Step-1 indices of its
/// surviving slots, and the length of the final tuple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    pub steps: Vec<(usize, Vec<usize>)>,
    pub len: usize,
}

impl Plan {
    pub fn schedule(&self) -> Vec<usize> {
        self.steps.iter().map(|(rho, _)| *rho).collect()
    }
}

/// Depth-first search for a 1-inherited, 1-standard schedule to degree 1.
struct Search<'a> {
    sk: &'a Sketcher,
    budget: usize,
    path: Vec<(usize, Vec<usize>)>,
    deepest: Vec<usize>,
    len: usize,
}

impl Search<'_> {
    fn run(&mut self, t: &SketchTuple, stage: usize) -> bool {
        if self.path.len() > self.deepest.len() {
            self.deepest = self.path.iter().map(|(rho, _)| *rho).collect();
        }
        if t.degree() <= 1 {
            self.len = t.len();
            return true;
        }
        if self.path.len() >= SCHEDULE_FUEL || 2 * t.len() > SLOT_LIMIT {
            return false;
        }
        for rho in candidates(&t.degrees) {
            let cost = 2 * t.len();
            if self.budget < cost {
                return false;
            }
            self.budget -= cost;
            let Some((next, survivors)) = self.sk.vdc(t, rho, stage) else { continue };
            if next.degrees[0] != next.degree() {
                continue;
            }
            self.path.push((rho, survivors));
            if self.run(&next, stage + 1) {
                return true;
            }
            self.path.pop();
        }
        false
    }
}

/// Type `(r, i, v)` of a level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelType {
    pub r: Rat,
    pub i: usize,
    pub v: ExpVec,
}

impl fmt::Display for LevelType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v: Vec<String> = self.v.entries().iter().map(ToString::to_string).collect();
        write!(f, "({},{},{})", self.r, self.i, v.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelEntry {
    /// One coefficient vector per slot.
    pub u: Vec<Vec<FormalCoeff>>,
    pub ty: Option<LevelType>,
    pub symbol: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LevelData {
    pub entries: BTreeMap<Monomial, LevelEntry>,
}

impl LevelData {
    pub fn get(&self, key: &Monomial) -> Option<&LevelEntry> {
        self.entries.get(key)
    }
}

/// Builds the level key `(b; a_1, ..., a_s)` for `L = 1`.
pub fn level1(b: u32, a: &[u32]) -> Monomial {
    Monomial::new(ExpVec::new(vec![b]), a.iter().map(|&x| ExpVec::new(vec![x])).collect())
}

/// Doubled-variable family making function `i` (one-based) 1-standard:
/// `p_i(n) - p_max(n')`, then `p_j(n) - p_max(n')` for `j != i`, then
/// `p_j(n') - p_max(n')` for `j != max`, with constant members dropped.
/// `p_max` is the first member of maximal degree.
pub fn dimension_increment_family(family: &[PolyVec], i: usize) -> Result<Vec<PolyVec>, PetError> {
    let k = family.len();
    if i == 0 || i > k {
        return Err(PetError::FunctionOutOfRange(i, k));
    }
    let top = family.iter().map(PolyVec::deg_n).max().unwrap_or(0);
    if family[i - 1].deg_n() == top {
        return Err(PetError::AlreadyStandard(i));
    }
    let max = family.iter().position(|p| p.deg_n() == top).expect("maximum exists") + 1;
    let l = family[0].l();
    let at_n = |w: usize| family[w - 1].embed_n(2 * l, 0);
    let at_n2 = |w: usize| family[w - 1].embed_n(2 * l, l);
    let base = at_n2(max);
    let mut out = vec![at_n(i).sub(&base)];
    out.extend((1..=k).filter(|&j| j != i).map(|j| at_n(j).sub(&base)));
    out.extend((1..=k).filter(|&j| j != max).map(|j| at_n2(j).sub(&base)));
    out.retain(|p| !p.is_constant_n());
    Ok(out)
}

/// [`dimension_increment_family`] as a root tuple, 1-standard for slot 1.
pub fn dimension_increment(family: &[PolyVec], i: usize) -> Result<PetTuple, PetError> {
    PetTuple::from_family(&dimension_increment_family(family, i)?, 1)
}

/// `G_{i,j}(p)` for all `0 <= i != j <= k`, with `p_0 = 0`, under `inst`.
pub fn g_groups(
    family: &[PolyVec],
    inst: &NumericInstance,
) -> Result<BTreeMap<(usize, usize), IntLattice>, PetError> {
    let first = family.first().ok_or(PetError::Empty)?;
    let (l, d) = (first.l(), first.d());
    let mut inst_family = vec![PolyVec::zero(l, 0, d)];
    for p in family {
        inst_family.push(p.instantiate(inst)?);
    }
    let k = family.len();
    let mut out = BTreeMap::new();
    for i in 0..=k {
        for j in 0..=k {
            if i == j {
                continue;
            }
            let diff = inst_family[i].sub(&inst_family[j]);
            if diff.is_constant_n() {
                return Err(PetError::Degenerate(i.max(j), i.min(j)));
            }
            let top = diff.deg_n();
            let vectors: Vec<Vec<Rat>> = diff
                .terms()
                .filter(|(m, _)| m.n.total() == top)
                .map(|(_, cs)| cs.iter().map(|c| c.constant_part().clone()).collect())
                .collect();
            out.insert((i, j), IntLattice::saturate(d, &vectors));
        }
    }
    Ok(out)
}

/// The nilsequence step bound `t * s^(t (s'+1)^(s L) + 1)` for one function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepBound {
    /// Slots in the first linear 1-standard tuple.
    pub t: u64,
    /// `t` plus the number of vdC-operations.
    pub s: u64,
    /// Degree of the family.
    pub s_prime: u64,
    /// Width of the variable block that was reduced.
    pub l: u64,
    /// The exponent `t (s'+1)^(s L) + 1`.
    pub exponent: BigUint,
}

impl StepBound {
    pub fn new(t: u64, s: u64, s_prime: u64, l: u64) -> StepBound {
        let e = u32::try_from(s * l).expect("exponent fits in u32");
        let exponent = BigUint::from(t) * num_traits::pow(BigUint::from(s_prime + 1), e as usize) + BigUint::one();
        StepBound { t, s, s_prime, l, exponent }
    }

    /// `log10 D`; infinite when the exponent exceeds `f64` range.
    pub fn log10(&self) -> f64 {
        let e = self.exponent.to_f64().unwrap_or(f64::INFINITY);
        (self.t as f64).log10() + e * (self.s as f64).log10()
    }

    /// The exact value, when it has at most `max_digits` decimal digits.
    pub fn value(&self, max_digits: u64) -> Option<BigUint> {
        if self.log10() > max_digits as f64 {
            return None;
        }
        let e = self.exponent.to_usize()?;
        Some(BigUint::from(self.t) * num_traits::pow(BigUint::from(self.s), e))
    }

    fn key(&self) -> (bool, f64, BigUint, u64, u64) {
        let lg = self.log10();
        (lg.is_finite(), if lg.is_finite() { lg } else { 0.0 }, self.exponent.clone(), self.s, self.t)
    }

    /// True if `self` is at least `other`.
    pub fn dominates(&self, other: &StepBound) -> bool {
        let (a, b) = (self.key(), other.key());
        match (a.0, b.0) {
            (true, true) if (a.1 - b.1).abs() > 1e-9 * a.1.abs().max(1.0) => a.1 > b.1,
            (false, true) => true,
            (true, false) => false,
            _ => (a.2, a.3, a.4) >= (b.2, b.3, b.4),
        }
    }
}

impl fmt::Display for StepBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*{}^{}", self.t, self.s, self.exponent)
    }
}

/// Largest final tuple that [`reduce_for`] rebuilds exactly.
pub const EXACT_LIMIT: usize = 128;

/// Integer `h` samples used when the final tuple is too large to rebuild.
const H_SAMPLES: usize = 4;

/// Outcome of reducing the family for one distinguished function.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub function: usize,
    pub incremented: bool,
    pub start: PetTuple,
    pub plan: Plan,
    /// The exact final tuple, kept when it has at most [`EXACT_LIMIT`] slots.
    pub linear: Option<PetTuple>,
    pub bound: StepBound,
}

impl Reduction {
    pub fn schedule(&self) -> Vec<usize> {
        self.plan.schedule()
    }

    /// `H_{i,m}` for the final tuple. Without the exact tuple the groups are
    /// spanned by `n`-coefficients at random integer `h`; these lie inside the
    /// true groups, so any containment certified from them holds.
    pub fn h_groups(&self, inst: &NumericInstance) -> Result<BTreeMap<usize, IntLattice>, PetError> {
        if let Some(lin) = &self.linear {
            return lin.h_groups(inst);
        }
        let start = self.start.polys().iter().map(|p| p.instantiate(inst)).collect::<Result<Vec<_>, _>>()?;
        let (l, d) = (self.start.l(), self.start.d());
        let sp = Specializer::new(l, d, self.start.degree());
        let mut rng = ChaCha8Rng::seed_from_u64(0x4b_9e_11);
        let mut vectors: BTreeMap<usize, Vec<Vec<Rat>>> = BTreeMap::new();
        for _ in 0..H_SAMPLES + d {
            let hs: Vec<Vec<BigInt>> = (0..self.plan.steps.len())
                .map(|_| (0..l).map(|_| BigInt::from(rng.gen_range(-1000i64..=1000))).collect())
                .collect();
            let slots = sp.run(&start, &self.plan.steps, &hs).ok_or(PetError::Shape)?;
            for m in std::iter::once(0).chain(2..=slots.len()) {
                let entry = vectors.entry(m).or_default();
                for j in 0..l {
                    let u1 = &slots[0][j];
                    entry.push(if m == 0 { u1.clone() } else { u1.iter().zip(&slots[m - 1][j]).map(|(a, b)| a - b).collect() });
                }
            }
        }
        Ok(vectors.into_iter().map(|(m, v)| (m, IntLattice::saturate(d, &v))).collect())
    }
}

/// Reduces `family` to a linear tuple 1-standard for function `i`, doubling
/// the variables first when `p_i` is not of maximal degree.
pub fn reduce_for(family: &[PolyVec], i: usize) -> Result<Reduction, PetError> {
    let top = family.iter().map(PolyVec::deg_n).max().ok_or(PetError::Empty)?;
    if i == 0 || i > family.len() {
        return Err(PetError::FunctionOutOfRange(i, family.len()));
    }
    let incremented = family[i - 1].deg_n() != top;
    let start = if incremented { dimension_increment(family, i)? } else { PetTuple::from_family(family, i)? };
    let plan = start.plan()?;
    let linear = if plan.len <= EXACT_LIMIT { Some(start.replay(&plan)?) } else { None };
    let t = plan.len as u64;
    let bound = StepBound::new(t, t + plan.steps.len() as u64, top as u64, start.l() as u64);
    Ok(Reduction { function: i, incremented, start, plan, linear, bound })
}

/// Per-function step bounds and their maximum `D`.
pub fn step_bound(family: &[PolyVec]) -> Result<(StepBound, BTreeMap<usize, StepBound>), PetError> {
    let mut per = BTreeMap::new();
    for i in 1..=family.len() {
        per.insert(i, reduce_for(family, i)?.bound);
    }
    let best = per
        .values()
        .fold(None::<&StepBound>, |acc, b| match acc {
            Some(a) if a.dominates(b) => Some(a),
            _ => Some(b),
        })
        .cloned()
        .ok_or(PetError::Empty)?;
    Ok((best, per))
}

/// All subgroup data for a family under one numeric instance.
#[derive(Debug, Clone)]
pub struct GroupReport {
    pub k: usize,
    pub d: usize,
    pub g_groups: BTreeMap<(usize, usize), IntLattice>,
    pub h_groups: BTreeMap<(usize, usize), IntLattice>,
    pub certificates: BTreeMap<(usize, usize), usize>,
    pub reductions: BTreeMap<usize, Reduction>,
    pub bound: StepBound,
}

/// Witness `j` with `G_{i,j}(p) ⊆ H`, trying `j = 0` first, then `1..=k`.
pub fn containment_certificate(
    g: &BTreeMap<(usize, usize), IntLattice>,
    h: &IntLattice,
    i: usize,
    k: usize,
) -> Option<usize> {
    (0..=k).filter(|&j| j != i).find(|&j| g.get(&(i, j)).is_some_and(|gij| h.contains(gij)))
}

/// Runs every reduction, computes `G_{i,j}`, `H_{i,m}` and certifies each
/// `H_{i,m}` against some `G_{i,j}`.
pub fn group_report(family: &[PolyVec], inst: &NumericInstance) -> Result<GroupReport, PetError> {
    let g = g_groups(family, inst)?;
    let k = family.len();
    let d = family[0].d();
    let mut h_all = BTreeMap::new();
    let mut certs = BTreeMap::new();
    let mut reductions = BTreeMap::new();
    for i in 1..=k {
        let red = reduce_for(family, i)?;
        for (m, h) in red.h_groups(inst)? {
            let j = containment_certificate(&g, &h, i, k).ok_or(PetError::NoCertificate { i, m })?;
            certs.insert((i, m), j);
            h_all.insert((i, m), h);
        }
        reductions.insert(i, red);
    }
    let bound = reductions
        .values()
        .map(|r| &r.bound)
        .fold(None::<&StepBound>, |acc, b| match acc {
            Some(a) if a.dominates(b) => Some(a),
            _ => Some(b),
        })
        .cloned()
        .ok_or(PetError::Empty)?;
    Ok(GroupReport { k, d, g_groups: g, h_groups: h_all, certificates: certs, reductions, bound })
}

/// Integer vector helper used by reports and tests.
pub fn int_vec(v: &[i64]) -> Vec<BigInt> {
    v.iter().map(|&x| BigInt::from(x)).collect()
}

/// True if `v` is the zero vector.
pub fn is_zero_vec(v: &[Rat]) -> bool {
    v.iter().all(Zero::is_zero)
}

//! Family files.
//!
//! ```text
//! family d=2 L=1
//! p1 = [n^2, n]                # one polynomial per coordinate
//! p2 = (n^2 + n) * [1, -1]     # scalar polynomial times a direction
//! p3 = b[3,2]*n^2 + b[3,1]*n   # the same template in every coordinate
//! ```
//!
//! In the last form each symbol `b[i,v]` stands for a vector in `Z^d`.

use std::fmt;

use num_bigint::BigInt;
use petkit_core::polycore::degeneracy_witness;
use petkit_core::{PolyError, PolyVec};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FamilyError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    /// `(i, j)` with `p_i - p_j` constant; `j = 0` when `p_i` itself is.
    #[error("degenerate family: {}", degenerate_text(*.0, *.1))]
    Degenerate(usize, usize),
}

fn degenerate_text(i: usize, j: usize) -> String {
    if j == 0 {
        format!("p{i} is constant in n")
    } else {
        format!("p{i} - p{j} is constant in n (pair ({i}, {j}))")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SlotExpr {
    Vector(PolyVec),
    Split(PolyVec, Vec<BigInt>),
    Broadcast(PolyVec),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilySpec {
    pub d: usize,
    pub l: usize,
    pub slots: Vec<SlotExpr>,
}

impl FamilySpec {
    pub fn k(&self) -> usize {
        self.slots.len()
    }

    pub fn family(&self) -> Vec<PolyVec> {
        self.slots
            .iter()
            .map(|s| match s {
                SlotExpr::Vector(p) => p.clone(),
                SlotExpr::Split(p, v) => p.times_direction(v),
                SlotExpr::Broadcast(p) => p.broadcast(self.d),
            })
            .collect()
    }

    /// The `(p_i, v_i)` pairs when every slot is in split form.
    pub fn split(&self) -> Option<Vec<(PolyVec, Vec<BigInt>)>> {
        self.slots
            .iter()
            .map(|s| match s {
                SlotExpr::Split(p, v) => Some((p.clone(), v.clone())),
                _ => None,
            })
            .collect()
    }

    pub fn is_symbolic(&self) -> bool {
        self.family().iter().any(PolyVec::has_symbols)
    }

    pub fn parse(text: &str) -> Result<FamilySpec, FamilyError> {
        let mut header: Option<(usize, usize)> = None;
        let mut slots = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = ln + 1;
            let err = |col: usize, msg: String| FamilyError::Syntax { line, col, msg };
            let content = raw.split('#').next().unwrap_or("");
            if content.trim().is_empty() {
                continue;
            }
            let off = content.len() - content.trim_start().len();
            let body = content.trim();
            if let Some(rest) = body.strip_prefix("family") {
                if header.is_some() {
                    return Err(err(off + 1, "duplicate header".into()));
                }
                header = Some(parse_header(rest).map_err(|(c, m)| err(off + 7 + c, m))?);
                continue;
            }
            let (d, l) = header.ok_or_else(|| err(off + 1, "expected `family d=<int> L=<int>` header".into()))?;
            let (name, expr) = body.split_once('=').ok_or_else(|| err(off + 1, "expected `p<i> = ...`".into()))?;
            let idx: usize = name
                .trim()
                .strip_prefix('p')
                .and_then(|x| x.parse().ok())
                .ok_or_else(|| err(off + 1, format!("bad slot name `{}`", name.trim())))?;
            if idx != slots.len() + 1 {
                return Err(err(off + 1, format!("expected p{}, found p{idx}", slots.len() + 1)));
            }
            // 1-based column of the first byte of `expr`.
            let base = off + name.len() + 2;
            let slot = parse_slot(expr, d, l).map_err(|(c, m)| err(base + c - 1, m))?;
            slots.push(slot);
        }
        let (d, l) = header.ok_or(FamilyError::Syntax { line: 1, col: 1, msg: "missing header".into() })?;
        if slots.is_empty() {
            return Err(FamilyError::Syntax { line: text.lines().count().max(1), col: 1, msg: "no slots".into() });
        }
        let spec = FamilySpec { d, l, slots };
        if let Some((i, j)) = degeneracy_witness(&spec.family()) {
            return Err(FamilyError::Degenerate(i, j));
        }
        Ok(spec)
    }
}

fn parse_header(rest: &str) -> Result<(usize, usize), (usize, String)> {
    let mut d = None;
    let mut l = None;
    let mut pos = 0;
    for word in rest.split(' ') {
        let at = pos;
        pos += word.len() + 1;
        if word.is_empty() {
            continue;
        }
        let (key, value) = word.split_once('=').ok_or((at, format!("bad header field `{word}`")))?;
        let value: usize = value.parse().map_err(|_| (at, format!("bad value in `{word}`")))?;
        match key {
            "d" => d = Some(value),
            "L" => l = Some(value),
            _ => return Err((at, format!("unknown header field `{key}`"))),
        }
    }
    match (d, l) {
        (Some(d), Some(l)) if d > 0 && l > 0 => Ok((d, l)),
        _ => Err((0, "header needs positive d and L".into())),
    }
}

fn poly_err(shift: usize) -> impl Fn(PolyError) -> (usize, String) {
    move |e| match e {
        PolyError::Parse { col, msg } => (shift + col, msg),
        other => (shift + 1, other.to_string()),
    }
}

/// Parses a slot expression; errors carry a 1-based column within `expr`.
fn parse_slot(expr: &str, d: usize, l: usize) -> Result<SlotExpr, (usize, String)> {
    let lead = expr.len() - expr.trim_start().len();
    let t = expr.trim();
    if t.starts_with('[') {
        let p = PolyVec::parse_vector(t, l, 0).map_err(poly_err(lead))?;
        if p.d() != d {
            return Err((lead + 1, format!("expected {d} coordinates, got {}", p.d())));
        }
        return Ok(SlotExpr::Vector(p));
    }
    if let Some(star) = split_star(t) {
        let (poly, dir) = (&t[..star], t[star + 1..].trim_start());
        let dir_at = lead + t.len() - dir.len();
        let p = PolyVec::parse_scalar(poly.trim_end(), l, 0).map_err(poly_err(lead))?;
        let inner = dir
            .strip_prefix('[')
            .and_then(|x| x.strip_suffix(']'))
            .ok_or((dir_at + 1, "expected a direction `[v1, ..., vd]`".to_string()))?;
        let v = inner
            .split(',')
            .map(|x| x.trim().parse::<BigInt>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| (dir_at + 1, "direction entries must be integers".to_string()))?;
        if v.len() != d {
            return Err((dir_at + 1, format!("direction needs {d} entries")));
        }
        return Ok(SlotExpr::Split(p, v));
    }
    Ok(SlotExpr::Broadcast(PolyVec::parse_scalar(t, l, 0).map_err(poly_err(lead))?))
}

/// Position of the `*` in `(poly) * [v]`: the first one after the closing
/// parenthesis of a leading parenthesised group, when a `[` follows it.
fn split_star(t: &str) -> Option<usize> {
    if !t.starts_with('(') {
        return None;
    }
    let mut depth = 0;
    for (i, c) in t.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    let rest = &t[i + 1..];
                    let star = rest.find(|c: char| !c.is_whitespace())?;
                    if rest[star..].starts_with('*') && rest[star + 1..].trim_start().starts_with('[') {
                        return Some(i + 1 + star);
                    }
                    return None;
                }
            }
            _ => {}
        }
    }
    None
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "family d={} L={}", self.d, self.l)?;
        for (i, s) in self.slots.iter().enumerate() {
            match s {
                SlotExpr::Vector(p) => writeln!(f, "p{} = {}", i + 1, p)?,
                SlotExpr::Split(p, v) => {
                    let v: Vec<String> = v.iter().map(ToString::to_string).collect();
                    writeln!(f, "p{} = ({}) * [{}]", i + 1, p.render_component(0), v.join(", "))?
                }
                SlotExpr::Broadcast(p) => writeln!(f, "p{} = {}", i + 1, p.render_component(0))?,
            }
        }
        Ok(())
    }
}

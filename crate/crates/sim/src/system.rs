//! Text format for rotation systems and their observables.
//!
//! ```text
//! torus m=2 d=2
//! angle 1 = (sqrt(2) - 1, 0)
//! angle 2 = (0, (sqrt(3) - 1)/2)
//! char freq=(1,0) amp=1
//! char freq=(0,-1) amp=0.5-0.5i
//! lattice <(1,0)>
//! ```
//!
//! `angle j` gives the rotation vector of `T_j`. Angle entries are arithmetic
//! expressions over decimals with `+ - * /`, parentheses and `sqrt`, so
//! quadratic surds are entered exactly and evaluated once.

use num_complex::Complex64;
use petkit_core::IntLattice;

use crate::torus::{Character, TorusSystem};
use crate::SimError;

struct ExprParser<'a> {
    s: &'a [u8],
    pos: usize,
}

type PResult<T> = Result<T, (usize, String)>;

impl<'a> ExprParser<'a> {
    fn skip(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip();
        self.s.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> PResult<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err((self.pos, format!("expected '{}'", c as char)))
        }
    }

    fn sum(&mut self) -> PResult<f64> {
        let mut v = self.product()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let r = self.product()?;
            v = if c == b'+' { v + r } else { v - r };
        }
        Ok(v)
    }

    fn product(&mut self) -> PResult<f64> {
        let mut v = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let at = self.pos;
            let r = self.unary()?;
            if c == b'/' && r == 0.0 {
                return Err((at, "division by zero".into()));
            }
            v = if c == b'*' { v * r } else { v / r };
        }
        Ok(v)
    }

    fn unary(&mut self) -> PResult<f64> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> PResult<f64> {
        let start = self.pos;
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let v = self.sum()?;
                self.expect(b')')?;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let begin = self.pos;
                while self.pos < self.s.len() && (self.s[self.pos].is_ascii_digit() || self.s[self.pos] == b'.') {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.s[begin..self.pos]).unwrap();
                text.parse().map_err(|_| (begin, format!("bad number '{text}'")))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let begin = self.pos;
                while self.pos < self.s.len() && self.s[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.s[begin..self.pos]).unwrap();
                match name {
                    "sqrt" => {
                        self.expect(b'(')?;
                        let at = self.pos;
                        let v = self.sum()?;
                        self.expect(b')')?;
                        if v < 0.0 {
                            return Err((at, "square root of a negative number".into()));
                        }
                        Ok(v.sqrt())
                    }
                    "pi" => Ok(std::f64::consts::PI),
                    _ => Err((begin, format!("unknown name '{name}'"))),
                }
            }
            _ => Err((start, "expected a number".into())),
        }
    }
}

/// Evaluates an angle expression. Errors carry the byte offset.
pub fn parse_expr(text: &str) -> Result<f64, (usize, String)> {
    let mut p = ExprParser { s: text.as_bytes(), pos: 0 };
    let v = p.sum()?;
    if p.peek().is_some() {
        return Err((p.pos, "trailing input".into()));
    }
    Ok(v)
}

/// Splits `(a, b, c)` at top-level commas, returning pieces with their offsets.
fn split_tuple(text: &str) -> Option<Vec<(usize, &str)>> {
    let t = text.trim_end();
    let lead = text.len() - text.trim_start().len();
    let inner = t.trim_start().strip_prefix('(')?.strip_suffix(')')?;
    let base = lead + 1;
    let mut depth = 0;
    let mut out = Vec::new();
    let mut start = 0;
    for (i, c) in inner.char_indices() {
        match c {
            '(' => depth += 1,
            ')' if depth == 0 => return None,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push((base + start, &inner[start..i]));
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push((base + start, &inner[start..]));
    Some(out)
}

/// Parses `1`, `-0.5`, `2i`, `-i`, `0.5-0.5i`.
pub fn parse_complex(text: &str) -> Option<Complex64> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let Some(body) = t.strip_suffix('i') else {
        return t.parse().ok().map(|re| Complex64::new(re, 0.0));
    };
    let split = body
        .char_indices()
        .rev()
        .find(|&(i, c)| (c == '+' || c == '-') && i > 0 && !matches!(body.as_bytes()[i - 1], b'e' | b'E'))
        .map(|(i, _)| i);
    let (re, im) = match split {
        Some(i) => (body[..i].parse().ok()?, &body[i..]),
        None => (0.0, body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => x.parse().ok()?,
    };
    Some(Complex64::new(re, im))
}

/// A parsed system file.
#[derive(Debug, Clone)]
pub struct SystemFile {
    pub system: TorusSystem,
    pub chars: Vec<Character>,
    pub lattices: Vec<IntLattice>,
}

fn field<'a>(rest: &'a str, key: &str) -> Option<(usize, &'a str)> {
    let at = rest.find(&format!("{key}="))?;
    let start = at + key.len() + 1;
    let tail = &rest[start..];
    let end = if tail.starts_with('(') { tail.find(')').map_or(tail.len(), |i| i + 1) } else { tail.find(' ').unwrap_or(tail.len()) };
    Some((start, &tail[..end]))
}

impl SystemFile {
    pub fn parse(text: &str) -> Result<SystemFile, SimError> {
        let mut dims: Option<(usize, usize)> = None;
        let mut columns: Vec<Option<Vec<f64>>> = Vec::new();
        let mut chars = Vec::new();
        let mut lattices = Vec::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = ln + 1;
            let err = |col: usize, msg: String| SimError::Parse { line, col: col + 1, msg };
            let content = raw.split('#').next().unwrap_or("");
            let trimmed = content.trim();
            if trimmed.is_empty() {
                continue;
            }
            let off = content.len() - content.trim_start().len();
            let (word, rest) = trimmed.split_once(char::is_whitespace).unwrap_or((trimmed, ""));
            let rest_off = off + trimmed.len() - rest.len();
            match word {
                "torus" => {
                    let num = |key: &str| -> Result<usize, SimError> {
                        let (at, v) = field(rest, key).ok_or_else(|| err(rest_off, format!("missing {key}=")))?;
                        v.parse().map_err(|_| err(rest_off + at, format!("bad {key}")))
                    };
                    let (m, d) = (num("m")?, num("d")?);
                    if m == 0 || d == 0 {
                        return Err(err(rest_off, "m and d must be positive".into()));
                    }
                    dims = Some((m, d));
                    columns = vec![None; d];
                }
                "angle" => {
                    let (m, d) = dims.ok_or_else(|| err(off, "angle before torus header".into()))?;
                    let (idx, expr) = rest.split_once('=').ok_or_else(|| err(rest_off, "expected '='".into()))?;
                    let j: usize = idx.trim().parse().map_err(|_| err(rest_off, "bad generator index".into()))?;
                    if j == 0 || j > d {
                        return Err(err(rest_off, format!("generator index must lie in 1..={d}")));
                    }
                    let expr_off = rest_off + idx.len() + 1 + (expr.len() - expr.trim_start().len());
                    let expr = expr.trim_start();
                    let pieces = match split_tuple(expr) {
                        Some(p) => p,
                        None => vec![(0, expr)],
                    };
                    if pieces.len() != m {
                        return Err(err(expr_off, format!("expected {m} angle entries, got {}", pieces.len())));
                    }
                    let col = pieces
                        .iter()
                        .map(|&(at, e)| parse_expr(e).map_err(|(p, msg)| err(expr_off + at + p, msg)))
                        .collect::<Result<Vec<_>, _>>()?;
                    if columns[j - 1].replace(col).is_some() {
                        return Err(err(off, format!("angle {j} given twice")));
                    }
                }
                "char" => {
                    let (m, _) = dims.ok_or_else(|| err(off, "char before torus header".into()))?;
                    let (at, f) = field(rest, "freq").ok_or_else(|| err(rest_off, "missing freq=".into()))?;
                    let freq = split_tuple(f)
                        .and_then(|p| p.iter().map(|(_, x)| x.trim().parse::<i64>().ok()).collect::<Option<Vec<_>>>())
                        .ok_or_else(|| err(rest_off + at, "bad frequency tuple".into()))?;
                    if freq.len() != m {
                        return Err(err(rest_off + at, format!("frequency needs {m} entries")));
                    }
                    let amp = match field(rest, "amp") {
                        Some((at, a)) => parse_complex(a).ok_or_else(|| err(rest_off + at, format!("bad amplitude '{a}'")))?,
                        None => Complex64::new(1.0, 0.0),
                    };
                    chars.push(Character::new(freq, amp));
                }
                "lattice" => {
                    let (_, d) = dims.ok_or_else(|| err(off, "lattice before torus header".into()))?;
                    lattices.push(IntLattice::parse(rest, d).map_err(|e| err(rest_off, e.to_string()))?);
                }
                _ => return Err(err(off, format!("unknown directive '{word}'"))),
            }
        }
        let (_, d) = dims.ok_or(SimError::Parse { line: 1, col: 1, msg: "missing torus header".into() })?;
        let cols = columns
            .into_iter()
            .enumerate()
            .map(|(j, c)| c.ok_or_else(|| SimError::Shape(format!("angle {} missing", j + 1))))
            .collect::<Result<Vec<_>, _>>()?;
        let _ = d;
        Ok(SystemFile { system: TorusSystem::from_columns(&cols)?, chars, lattices })
    }
}

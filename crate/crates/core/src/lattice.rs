//! Subgroups of `Z^d` in canonical Hermite normal form, and the saturation
//! operator `G(A) = span_Q(A) ∩ Z^d`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::polycore::{denominator_lcm, Rat};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("ambient dimensions differ ({0} vs {1})")]
    Dimension(usize, usize),
    #[error("index_in precondition violated: the sublattice is not contained in the superlattice")]
    NotContained,
    #[error("cannot parse lattice: {0}")]
    Parse(String),
}

/// Index of a sublattice: a finite quotient order, or infinite when ranks differ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Index {
    Finite(BigInt),
    Infinite,
}

/// A subgroup of `Z^d` stored by its row-style Hermite normal form: rows in
/// echelon form, positive pivots, entries above each pivot in `[0, pivot)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntLattice {
    d: usize,
    basis: Vec<Vec<BigInt>>,
    saturated: bool,
}

/// Row-style HNF of `rows` together with a unimodular `u` such that
/// `u * rows = h`. Returns `(h, u, rank)`; rows `rank..` of `h` are zero.
pub fn hnf_with_transform(rows: &[Vec<BigInt>], width: usize) -> (Vec<Vec<BigInt>>, Vec<Vec<BigInt>>, usize) {
    let m = rows.len();
    let mut h: Vec<Vec<BigInt>> = rows.to_vec();
    let mut u: Vec<Vec<BigInt>> = (0..m)
        .map(|i| (0..m).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect();
    let mut r = 0;
    for col in 0..width {
        if r == m {
            break;
        }
        loop {
            let pick = (r..m)
                .filter(|&i| !h[i][col].is_zero())
                .min_by(|&a, &b| h[a][col].abs().cmp(&h[b][col].abs()));
            let Some(p) = pick else { break };
            h.swap(r, p);
            u.swap(r, p);
            let mut clean = true;
            for i in r + 1..m {
                if h[i][col].is_zero() {
                    continue;
                }
                let q = h[i][col].div_floor(&h[r][col]);
                sub_row(&mut h, i, r, &q);
                sub_row(&mut u, i, r, &q);
                if !h[i][col].is_zero() {
                    clean = false;
                }
            }
            if clean {
                break;
            }
        }
        if h[r][col].is_zero() {
            continue;
        }
        if h[r][col].is_negative() {
            for x in h[r].iter_mut().chain(u[r].iter_mut()) {
                *x = -&*x;
            }
        }
        for i in 0..r {
            let q = h[i][col].div_floor(&h[r][col]);
            if !q.is_zero() {
                sub_row(&mut h, i, r, &q);
                sub_row(&mut u, i, r, &q);
            }
        }
        r += 1;
    }
    (h, u, r)
}

fn sub_row(mat: &mut [Vec<BigInt>], target: usize, src: usize, q: &BigInt) {
    let (a, b) = if target < src {
        let (lo, hi) = mat.split_at_mut(src);
        (&mut lo[target], &hi[0])
    } else {
        let (lo, hi) = mat.split_at_mut(target);
        (&mut hi[0], &lo[src])
    };
    for (x, y) in a.iter_mut().zip(b) {
        *x -= q * y;
    }
}

/// Basis of `{x in Z^d : M x = 0}` for an integer matrix `M` with `d` columns.
pub fn integer_kernel(m: &[Vec<BigInt>], d: usize) -> Vec<Vec<BigInt>> {
    let transpose: Vec<Vec<BigInt>> = (0..d).map(|j| m.iter().map(|row| row[j].clone()).collect()).collect();
    let (_, u, rank) = hnf_with_transform(&transpose, m.len());
    u.into_iter().skip(rank).collect()
}

/// Determinant of a square integer matrix by fraction-free elimination.
pub fn bareiss_det(mat: &[Vec<BigInt>]) -> BigInt {
    let n = mat.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut a = mat.to_vec();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(k, i);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

impl IntLattice {
    /// The lattice generated by integer vectors of length `d`.
    pub fn from_generators(d: usize, gens: &[Vec<BigInt>]) -> IntLattice {
        let mut lat = IntLattice::from_generators_unchecked(d, gens);
        lat.saturated = lat.basis == IntLattice::saturate_ints(d, &lat.basis).basis;
        lat
    }

    fn from_generators_unchecked(d: usize, gens: &[Vec<BigInt>]) -> IntLattice {
        assert!(gens.iter().all(|g| g.len() == d), "generator length differs from d");
        let (h, _, rank) = hnf_with_transform(gens, d);
        IntLattice { d, basis: h.into_iter().take(rank).collect(), saturated: false }
    }

    pub fn from_i64(d: usize, gens: &[&[i64]]) -> IntLattice {
        let g: Vec<Vec<BigInt>> = gens.iter().map(|v| v.iter().map(|&x| BigInt::from(x)).collect()).collect();
        IntLattice::from_generators(d, &g)
    }

    pub fn zero(d: usize) -> IntLattice {
        IntLattice { d, basis: vec![], saturated: true }
    }

    pub fn full(d: usize) -> IntLattice {
        let basis = (0..d)
            .map(|i| (0..d).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
            .collect();
        IntLattice { d, basis, saturated: true }
    }

    /// `G(vectors)`: the integer points of the rational span.
    pub fn saturate(d: usize, vectors: &[Vec<Rat>]) -> IntLattice {
        let ints: Vec<Vec<BigInt>> = vectors
            .iter()
            .map(|v| {
                assert_eq!(v.len(), d, "vector length differs from d");
                let l = denominator_lcm(v);
                v.iter().map(|x| (x * Rat::from_integer(l.clone())).to_integer()).collect()
            })
            .collect();
        let mut lat = IntLattice::from_generators_unchecked(d, &saturated_basis(d, &ints));
        lat.saturated = true;
        lat
    }

    pub fn saturate_ints(d: usize, vectors: &[Vec<BigInt>]) -> IntLattice {
        let mut lat = IntLattice::from_generators_unchecked(d, &saturated_basis(d, vectors));
        lat.saturated = true;
        lat
    }

    /// `G(self)`.
    pub fn saturation(&self) -> IntLattice {
        IntLattice::saturate_ints(self.d, &self.basis)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<BigInt>] {
        &self.basis
    }

    pub fn is_saturated(&self) -> bool {
        self.saturated
    }

    /// Integer coordinates of `v` in the HNF basis, if `v` lies in the lattice.
    pub fn coordinates(&self, v: &[BigInt]) -> Option<Vec<BigInt>> {
        let mut rest = v.to_vec();
        let mut coords = Vec::with_capacity(self.basis.len());
        for row in &self.basis {
            let pivot = row.iter().position(|x| !x.is_zero()).expect("nonzero basis row");
            let (q, r) = rest[pivot].div_rem(&row[pivot]);
            if !r.is_zero() {
                return None;
            }
            for (x, y) in rest.iter_mut().zip(row) {
                *x -= &q * y;
            }
            coords.push(q);
        }
        rest.iter().all(Zero::is_zero).then_some(coords)
    }

    pub fn contains_vector(&self, v: &[BigInt]) -> bool {
        self.coordinates(v).is_some()
    }

    /// True iff `inner` is a subgroup of `self`.
    pub fn contains(&self, inner: &IntLattice) -> bool {
        self.d == inner.d && inner.basis.iter().all(|v| self.contains_vector(v))
    }

    /// The subgroup generated by both lattices (not saturated automatically).
    pub fn sum(&self, other: &IntLattice) -> IntLattice {
        assert_eq!(self.d, other.d, "ambient dimensions differ");
        let gens: Vec<Vec<BigInt>> = self.basis.iter().chain(&other.basis).cloned().collect();
        IntLattice::from_generators(self.d, &gens)
    }

    /// Index of `sub` in `sup`.
    pub fn index_in(sub: &IntLattice, sup: &IntLattice) -> Result<Index, LatticeError> {
        if sub.d != sup.d {
            return Err(LatticeError::Dimension(sub.d, sup.d));
        }
        if !sup.contains(sub) {
            return Err(LatticeError::NotContained);
        }
        if sub.rank() < sup.rank() {
            return Ok(Index::Infinite);
        }
        let coords: Vec<Vec<BigInt>> =
            sub.basis.iter().map(|v| sup.coordinates(v).expect("contained vector")).collect();
        Ok(Index::Finite(bareiss_det(&coords).abs()))
    }

    /// True iff the lattice has rank `d`, so its saturation is all of `Z^d`.
    pub fn is_full(&self) -> bool {
        self.rank() == self.d && self.saturation() == IntLattice::full(self.d)
    }

    /// Parses `<(1,0), (0,1)>`; `<>` is the zero lattice.
    pub fn parse(text: &str, d: usize) -> Result<IntLattice, LatticeError> {
        let t = text.trim();
        let inner = t
            .strip_prefix('<')
            .and_then(|x| x.strip_suffix('>'))
            .ok_or_else(|| LatticeError::Parse(format!("expected <...>, got '{t}'")))?
            .trim();
        let mut gens = Vec::new();
        let mut rest = inner;
        while !rest.is_empty() {
            let open = rest.find('(').ok_or_else(|| LatticeError::Parse("expected '('".into()))?;
            let close = rest.find(')').ok_or_else(|| LatticeError::Parse("expected ')'".into()))?;
            let v = rest[open + 1..close]
                .split(',')
                .map(|x| x.trim().parse::<BigInt>().map_err(|e| LatticeError::Parse(e.to_string())))
                .collect::<Result<Vec<_>, _>>()?;
            if v.len() != d {
                return Err(LatticeError::Dimension(v.len(), d));
            }
            gens.push(v);
            rest = rest[close + 1..].trim_start_matches([',', ' ']);
        }
        Ok(IntLattice::from_generators(d, &gens))
    }
}

/// Basis of the saturation, computed as the integer kernel of the integer
/// kernel of the generator matrix.
fn saturated_basis(d: usize, gens: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let perp = integer_kernel(gens, d);
    integer_kernel(&perp, d)
}

impl fmt::Display for IntLattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .basis
            .iter()
            .map(|r| format!("({})", r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")))
            .collect();
        write!(f, "<{}>", rows.join(", "))
    }
}

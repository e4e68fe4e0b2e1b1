//! Rotation systems on `T^m` driven by a `Z^d` action, and trigonometric observables.

use num_complex::Complex64;

use crate::SimError;

/// `exp(2 pi i x)`.
pub fn e(x: f64) -> Complex64 {
    Complex64::from_polar(1.0, std::f64::consts::TAU * x)
}

/// Fractional part of `k * alpha`, computed without losing the low bits of
/// the product. `alpha` is taken as the exact binary fraction it stores.
pub fn frac_mul(k: i128, alpha: f64) -> f64 {
    let f = alpha - alpha.floor();
    if f == 0.0 || k == 0 {
        return 0.0;
    }
    let bits = f.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let (mant, e2) = if exp == 0 {
        (bits & ((1 << 52) - 1), -1074)
    } else {
        ((bits & ((1 << 52) - 1)) | (1 << 52), exp - 1075)
    };
    // f = mant * 2^e2 with e2 < 0.
    let tz = mant.trailing_zeros().min((-e2) as u32);
    let mant = mant >> tz;
    let sh = (-e2) as u32 - tz;
    if sh <= 128 {
        // Two's complement wrapping gives k * mant mod 2^128, which is enough mod 2^sh.
        let prod = (k as u128).wrapping_mul(mant as u128);
        let low = if sh == 128 { prod } else { prod & ((1u128 << sh) - 1) };
        let r = low as f64 * (-(sh as f64)).exp2();
        return if r >= 1.0 { 0.0 } else { r };
    }
    // Tiny alpha: the product is far below one unless k is huge.
    let x = k as f64 * f;
    x - x.floor()
}

/// Distance from `x` to the nearest integer.
pub fn dist_to_int(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// Frequencies whose phase is within this distance of an integer count as invariant.
pub const RESONANCE_TOL: f64 = 1e-9;

/// A `Z^d` action on `T^m` by rotations: `T_g x = x + A g mod 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusSystem {
    m: usize,
    d: usize,
    /// `angles[t][j]`: coordinate `t` of the rotation vector of `T_j`.
    angles: Vec<Vec<f64>>,
}

impl TorusSystem {
    pub fn new(angles: Vec<Vec<f64>>) -> Result<TorusSystem, SimError> {
        let m = angles.len();
        let d = angles.first().map_or(0, Vec::len);
        if m == 0 || d == 0 || angles.iter().any(|r| r.len() != d) {
            return Err(SimError::Shape("angle matrix must be a nonempty m x d array".into()));
        }
        if angles.iter().flatten().any(|a| !a.is_finite()) {
            return Err(SimError::Shape("angles must be finite".into()));
        }
        Ok(TorusSystem { m, d, angles })
    }

    /// Builds the system from the rotation vectors of `T_1, ..., T_d`.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<TorusSystem, SimError> {
        let m = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != m) {
            return Err(SimError::Shape("rotation vectors differ in length".into()));
        }
        TorusSystem::new((0..m).map(|t| columns.iter().map(|c| c[t]).collect()).collect())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn angles(&self) -> &[Vec<f64>] {
        &self.angles
    }

    /// `T_g x`.
    pub fn act(&self, g: &[i128], x: &[f64]) -> Vec<f64> {
        (0..self.m)
            .map(|t| {
                let shift: f64 = g.iter().zip(&self.angles[t]).map(|(&gj, &a)| frac_mul(gj, a)).sum();
                let y = x[t] + shift;
                y - y.floor()
            })
            .collect()
    }

    /// `freq . A g mod 1`, the phase picked up by `e(freq . x)` under `T_g`.
    pub fn phase(&self, freq: &[i64], g: &[i128]) -> f64 {
        let mut acc = 0.0;
        for (t, &k) in freq.iter().enumerate() {
            if k == 0 {
                continue;
            }
            for (j, &gj) in g.iter().enumerate() {
                acc += frac_mul(k as i128 * gj, self.angles[t][j]);
            }
        }
        acc - acc.floor()
    }

    /// True when `e(freq . x)` is invariant under every `T_g`, `g` in `gens`.
    pub fn is_invariant(&self, freq: &[i64], gens: &[Vec<i128>]) -> bool {
        gens.iter().all(|g| dist_to_int(self.phase(freq, g)) < RESONANCE_TOL)
    }
}

/// The observable `amp * e(freq . x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Character {
    pub freq: Vec<i64>,
    pub amp: Complex64,
}

impl Character {
    pub fn new(freq: Vec<i64>, amp: Complex64) -> Character {
        Character { freq, amp }
    }

    pub fn unit(freq: Vec<i64>) -> Character {
        Character { freq, amp: Complex64::new(1.0, 0.0) }
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        let mut phase = 0.0;
        for (&k, &xi) in self.freq.iter().zip(x) {
            phase += k as f64 * xi;
        }
        self.amp * e(phase)
    }

    pub fn is_trivial(&self) -> bool {
        self.freq.iter().all(|&k| k == 0)
    }

    pub fn mean(&self) -> Complex64 {
        if self.is_trivial() {
            self.amp
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    pub fn conj(&self) -> Character {
        Character { freq: self.freq.iter().map(|k| -k).collect(), amp: self.amp.conj() }
    }
}

/// A finite sum of characters with distinct frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPoly {
    pub terms: Vec<Character>,
}

impl TrigPoly {
    pub fn new(terms: Vec<Character>) -> Result<TrigPoly, SimError> {
        for (a, x) in terms.iter().enumerate() {
            if terms[a + 1..].iter().any(|y| y.freq == x.freq) {
                return Err(SimError::Shape(format!("repeated frequency {:?}", x.freq)));
            }
        }
        Ok(TrigPoly { terms })
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        self.terms.iter().map(|c| c.eval(x)).sum()
    }

    /// Sup norm bound `sum |c|`.
    pub fn l1(&self) -> f64 {
        self.terms.iter().map(|c| c.amp.norm()).sum()
    }
}

impl From<Character> for TrigPoly {
    fn from(c: Character) -> TrigPoly {
        TrigPoly { terms: vec![c] }
    }
}

/// Normalised Dirichlet kernel `E_{n in [-N, N]} e(n theta)`, summed term by term.
pub fn dirichlet(theta: f64, n: u64) -> Complex64 {
    let n = n as i128;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in -n..=n {
        acc += e(frac_mul(k, theta));
    }
    acc / (2 * n + 1) as f64
}

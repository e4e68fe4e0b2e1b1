//! Multiple ergodic averages of characters along polynomial iterates.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, ToPrimitive, Zero};
use petkit_core::polycore::denominator_lcm;
use petkit_core::PolyVec;

use crate::torus::{e, Character, TorusSystem};
use crate::SimError;

/// An integer-valued polynomial map `Z^L -> Z^d` stored as `num / den` with
/// integer numerator coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct IntPolyMap {
    l: usize,
    d: usize,
    den: i128,
    /// `(exponents in n, numerator coefficient per component)`.
    terms: Vec<(Vec<u32>, Vec<i128>)>,
}

impl IntPolyMap {
    /// Converts a numeric polynomial with no `h` variables.
    pub fn from_poly(p: &PolyVec) -> Result<IntPolyMap, SimError> {
        if p.s() != 0 {
            return Err(SimError::Shape("iterates may not contain h variables".into()));
        }
        let terms = p.as_integer_coeffs().ok_or_else(|| SimError::Shape("iterates must be numeric".into()))?;
        let all: Vec<_> = terms.iter().flat_map(|(_, cs)| cs.iter().cloned()).collect();
        let den = denominator_lcm(&all);
        let to_i128 = |x: &BigInt| x.to_i128().ok_or(SimError::Overflow);
        let mut out = Vec::new();
        for (m, cs) in &terms {
            let coeffs = cs
                .iter()
                .map(|c| to_i128(&(c.numer() * (&den / c.denom()))))
                .collect::<Result<Vec<_>, _>>()?;
            out.push((m.n.entries().to_vec(), coeffs));
        }
        Ok(IntPolyMap { l: p.l(), d: p.d(), den: to_i128(&den)?, terms: out })
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(e, _)| e.iter().sum()).max().unwrap_or(0)
    }

    /// `p(n)`, or an error when a value leaves `i128` or is not an integer.
    pub fn eval(&self, n: &[i64]) -> Result<Vec<i128>, SimError> {
        let mut acc = vec![0i128; self.d];
        for (exps, coeffs) in &self.terms {
            let mut mono: i128 = 1;
            for (&x, &k) in n.iter().zip(exps) {
                for _ in 0..k {
                    mono = mono.checked_mul(x as i128).ok_or(SimError::Overflow)?;
                }
            }
            for (a, &c) in acc.iter_mut().zip(coeffs) {
                *a = c.checked_mul(mono).and_then(|v| a.checked_add(v)).ok_or(SimError::Overflow)?;
            }
        }
        if self.den != 1 {
            for a in &mut acc {
                if *a % self.den != 0 {
                    return Err(SimError::NotIntegerValued(n.to_vec()));
                }
                *a /= self.den;
            }
        }
        Ok(acc)
    }
}

/// A box average with a convergence indicator.
#[derive(Debug, Clone, PartialEq)]
pub struct AverageResult {
    pub value: Complex64,
    /// Box radius `N`.
    pub n: u64,
    /// Distance between the averages over `[-N, N]^L` and `[-N/2, N/2]^L`.
    pub estimated_error: f64,
}

/// Lexicographic walk over `[-N, N]^L`, calling `f(n, inner)` where `inner`
/// marks points of the half-size box.
fn walk_box(l: usize, n: u64, mut f: impl FnMut(&[i64], bool) -> Result<(), SimError>) -> Result<(), SimError> {
    let n = n as i64;
    let half = n / 2;
    let mut point = vec![-n; l];
    loop {
        let inner = point.iter().all(|x| x.abs() <= half);
        f(&point, inner)?;
        let mut j = l;
        loop {
            if j == 0 {
                return Ok(());
            }
            j -= 1;
            if point[j] < n {
                point[j] += 1;
                break;
            }
            point[j] = -n;
        }
    }
}

/// `E_{n in [-N, N]^L} seq(n)` with the half-box comparison.
pub fn box_average(
    l: usize,
    n: u64,
    mut seq: impl FnMut(&[i64]) -> Result<Complex64, SimError>,
) -> Result<AverageResult, SimError> {
    let mut full = Complex64::zero();
    let mut inner_sum = Complex64::zero();
    let mut inner_count = 0u64;
    let mut count = 0u64;
    walk_box(l, n, |p, inner| {
        let v = seq(p)?;
        full += v;
        count += 1;
        if inner {
            inner_sum += v;
            inner_count += 1;
        }
        Ok(())
    })?;
    let value = full / count as f64;
    let half = inner_sum / inner_count as f64;
    Ok(AverageResult { value, n, estimated_error: (value - half).norm() })
}

fn check_shapes(sys: &TorusSystem, family: &[IntPolyMap], obs: &[Character]) -> Result<usize, SimError> {
    if family.is_empty() || family.len() != obs.len() {
        return Err(SimError::Shape("need one observable per iterate".into()));
    }
    let l = family[0].l();
    if family.iter().any(|p| p.l() != l || p.d() != sys.d()) || obs.iter().any(|c| c.freq.len() != sys.m()) {
        return Err(SimError::Shape("family, system and observables disagree in dimension".into()));
    }
    Ok(l)
}

/// `sum_i freq_i . A p_i(n) mod 1`.
fn total_phase(sys: &TorusSystem, family: &[IntPolyMap], obs: &[Character], n: &[i64]) -> Result<f64, SimError> {
    let mut phase = 0.0;
    for (p, c) in family.iter().zip(obs) {
        phase += sys.phase(&c.freq, &p.eval(n)?);
    }
    Ok(phase - phase.floor())
}

fn frequencies_cancel(obs: &[Character]) -> bool {
    let m = obs[0].freq.len();
    (0..m).all(|t| obs.iter().map(|c| c.freq[t]).sum::<i64>() == 0)
}

/// `E_{n in [-N, N]^L} integral of prod_i T_{p_i(n)} f_i`, each integral in
/// closed form: the product of amplitudes times `e(sum_i freq_i . A p_i(n))`
/// when the frequencies cancel, zero otherwise.
pub fn multi_average(sys: &TorusSystem, family: &[IntPolyMap], obs: &[Character], n: u64) -> Result<AverageResult, SimError> {
    let l = check_shapes(sys, family, obs)?;
    let amp: Complex64 = obs.iter().map(|c| c.amp).product();
    if !frequencies_cancel(obs) {
        // Still walk the box so that overflow is reported consistently.
        return box_average(l, n, |p| {
            for q in family {
                q.eval(p)?;
            }
            Ok(Complex64::zero())
        });
    }
    box_average(l, n, |p| Ok(amp * e(total_phase(sys, family, obs, p)?)))
}

/// Outcome of the joint ergodicity test.
#[derive(Debug, Clone, PartialEq)]
pub struct JointResult {
    /// `W_N = E_n e(sum_i freq_i . A p_i(n))`.
    pub weyl: AverageResult,
    /// `prod_i integral f_i`.
    pub expected: Complex64,
    /// `|| E_n prod_i T_{p_i(n)} f_i - prod_i integral f_i ||_2`.
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Tests the mean convergence `E_n prod_i T_{p_i(n)} f_i -> prod_i integral f_i`
/// in `L^2`. For characters the average is the character of the summed
/// frequency times `prod_i c_i W_N`, so the residual is
/// `|prod c_i| |W_N - [all f_i constant]|`.
pub fn joint_ergodicity_test(
    sys: &TorusSystem,
    family: &[IntPolyMap],
    obs: &[Character],
    n: u64,
    tol: f64,
) -> Result<JointResult, SimError> {
    let l = check_shapes(sys, family, obs)?;
    let weyl = box_average(l, n, |p| Ok(e(total_phase(sys, family, obs, p)?)))?;
    let amp: Complex64 = obs.iter().map(|c| c.amp).product();
    let constant = obs.iter().all(Character::is_trivial);
    let expected: Complex64 = obs.iter().map(Character::mean).product();
    let target = if constant { Complex64::one() } else { Complex64::zero() };
    let residual = amp.norm() * (weyl.value - target).norm();
    Ok(JointResult { weyl, expected, residual, tol, pass: residual <= tol })
}

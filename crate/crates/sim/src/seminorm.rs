//! Host-Kra seminorms of characters and the product-system vdC bound.

use num_complex::Complex64;
use num_traits::ToPrimitive;
use petkit_core::IntLattice;

use crate::torus::{e, frac_mul, Character, TorusSystem, TrigPoly, RESONANCE_TOL};
use crate::SimError;

/// `E_{k in [-N, N]} e(k theta)` where `theta = sum_t c_t alpha_t`, with each
/// product `k c_t alpha_t` reduced exactly.
fn kernel(terms: &[(i128, f64)], n: u64) -> Complex64 {
    let n = n as i128;
    let mut acc = Complex64::new(0.0, 0.0);
    for k in -n..=n {
        let mut phase = 0.0;
        for &(c, a) in terms {
            phase += frac_mul(k * c, a);
        }
        acc += e(phase - phase.floor());
    }
    acc / (2 * n + 1) as f64
}

/// True when `theta` keeps distance at least `1/(16 q^2)` from every rational
/// `p/q` with `q <= qmax`.
pub fn is_generic(theta: f64, qmax: u32) -> bool {
    (1..=qmax).all(|q| {
        let q = q as f64;
        (theta * q - (theta * q).round()).abs() / q >= 1.0 / (16.0 * q * q)
    })
}

/// A seminorm computed two ways.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeminormValue {
    /// Box recursion at radius `N`.
    pub numeric: f64,
    /// Limit value.
    pub analytic: f64,
}

fn basis_i128(h: &IntLattice) -> Result<Vec<Vec<i128>>, SimError> {
    h.basis()
        .iter()
        .map(|row| row.iter().map(|x| x.to_i128().ok_or(SimError::Overflow)).collect())
        .collect()
}

/// `||f||_{H_1, ..., H_s}` for `f = c e(freq . x)`.
///
/// For `s = 1` the square is `|c|^2 E_{g in H_1} e(-freq . A g)`, averaged
/// over a box in the coordinates of the Hermite basis of `H_1`. That factors
/// into one Dirichlet kernel per basis vector. Its limit is `|c|` when the
/// character is `H_1`-invariant and zero otherwise. For `s >= 2` the product
/// `f T_g f_bar` is constant, so every further level of the recursion returns
/// `|c|`.
pub fn hk_seminorm_char(sys: &TorusSystem, hs: &[IntLattice], f: &Character, n: u64) -> Result<SeminormValue, SimError> {
    if hs.is_empty() {
        return Err(SimError::Shape("need at least one subgroup".into()));
    }
    if f.freq.len() != sys.m() || hs.iter().any(|h| h.dim() != sys.d()) {
        return Err(SimError::Shape("character or subgroups do not match the system".into()));
    }
    let c = f.amp.norm();
    if hs.len() >= 2 {
        return Ok(SeminormValue { numeric: c, analytic: c });
    }
    let basis = basis_i128(&hs[0])?;
    let mut square = c * c;
    let mut invariant = true;
    for b in &basis {
        let mut terms = Vec::new();
        for (t, &k) in f.freq.iter().enumerate() {
            for (j, &bj) in b.iter().enumerate() {
                if k != 0 && bj != 0 {
                    terms.push((-(k as i128) * bj, sys.angles()[t][j]));
                }
            }
        }
        invariant &= crate::torus::dist_to_int(sys.phase(&f.freq, b)) < RESONANCE_TOL;
        square *= kernel(&terms, n).norm();
    }
    Ok(SeminormValue { numeric: square.sqrt(), analytic: if invariant { c } else { 0.0 } })
}

/// Both sides of the bound
/// `||E_n e(a . n) R_n f||_2 <= 2 min_i |||f_i|||_{G_i, G_i}`
/// on a product of rotation systems, evaluated at radius `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kron2Check {
    pub lhs: f64,
    /// `2 min_i |||f_i|||`, with the inner averages over `G_i` at radius `N`.
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

/// Orthogonal expansion of `f_1 x ... x f_k` on the product torus:
/// amplitude and the frequency of each factor.
fn product_terms(obs: &[TrigPoly]) -> Vec<(Complex64, Vec<&[i64]>)> {
    let mut out = vec![(Complex64::new(1.0, 0.0), Vec::new())];
    for f in obs {
        let mut next = Vec::new();
        for (amp, freqs) in &out {
            for c in &f.terms {
                let mut fr = freqs.clone();
                fr.push(c.freq.as_slice());
                next.push((amp * c.amp, fr));
            }
        }
        out = next;
    }
    out
}

fn sub(a: &[i64], b: &[i64]) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `|||f|||_{G,G}^4` for a trigonometric polynomial, where `G` is generated
/// by the `L` generators of `sys`. Expanding `f T_g f_bar` and projecting onto
/// `G`-invariant frequencies `zeta` gives
/// `sum_zeta E_g |sum_eta c_{eta + zeta} c_bar_eta e(-eta . A g)|^2`,
/// and the `g` average becomes a product of Dirichlet kernels at `eta' - eta`.
fn second_seminorm_pow4(sys: &TorusSystem, f: &TrigPoly, n: u64) -> f64 {
    let gens: Vec<Vec<i128>> = (0..sys.d()).map(|j| (0..sys.d()).map(|i| (i == j) as i128).collect()).collect();
    let amp = |freq: &[i64]| f.terms.iter().find(|c| c.freq == freq).map(|c| c.amp);
    // Differences of frequencies in the support that are invariant.
    let mut zetas: Vec<Vec<i64>> = Vec::new();
    for a in &f.terms {
        for b in &f.terms {
            let z = sub(&a.freq, &b.freq);
            if !zetas.contains(&z) && sys.is_invariant(&z, &gens) {
                zetas.push(z);
            }
        }
    }
    let mut total = 0.0;
    for z in &zetas {
        // w_eta = c_{eta + zeta} c_bar_eta over eta with both in the support.
        let w: Vec<(&[i64], Complex64)> = f
            .terms
            .iter()
            .filter_map(|c| {
                let shifted: Vec<i64> = c.freq.iter().zip(z).map(|(x, y)| x + y).collect();
                amp(&shifted).map(|a| (c.freq.as_slice(), a * c.amp.conj()))
            })
            .collect();
        let mut sum = Complex64::new(0.0, 0.0);
        for (eta, we) in &w {
            for (eta2, we2) in &w {
                let diff = sub(eta2, eta);
                let mut avg = Complex64::new(1.0, 0.0);
                for j in 0..sys.d() {
                    let terms: Vec<(i128, f64)> = diff
                        .iter()
                        .enumerate()
                        .filter(|(_, &k)| k != 0)
                        .map(|(t, &k)| (k as i128, sys.angles()[t][j]))
                        .collect();
                    if !terms.is_empty() {
                        avg *= kernel(&terms, n);
                    }
                }
                sum += we * we2.conj() * avg;
            }
        }
        total += sum.re;
    }
    total.max(0.0)
}

/// Checks the product-system vdC bound for a linear weight `e(a . n)`.
///
/// `factors[i]` is the rotation system of `T_{i,1}, ..., T_{i,L}` and `obs[i]`
/// the function it acts on. The left side expands `f_1 x ... x f_k` into
/// orthogonal characters, each of which picks up one Dirichlet kernel per
/// direction `j` at `a_j + sum_i eta_i . alpha_{i,j}`.
pub fn vdc_bound_check(factors: &[TorusSystem], obs: &[TrigPoly], slope: &[f64], n: u64, slack: f64) -> Result<Kron2Check, SimError> {
    if factors.is_empty() || factors.len() != obs.len() {
        return Err(SimError::Shape("need one function per factor".into()));
    }
    let l = slope.len();
    for (sys, f) in factors.iter().zip(obs) {
        if sys.d() != l || f.terms.iter().any(|c| c.freq.len() != sys.m()) {
            return Err(SimError::Shape("factor, function and weight disagree in dimension".into()));
        }
    }
    let mut lhs_sq = 0.0;
    for (amp, freqs) in product_terms(obs) {
        let mut v = amp.norm_sqr();
        for (j, &a) in slope.iter().enumerate() {
            let mut terms = vec![(1i128, a)];
            for (sys, fr) in factors.iter().zip(&freqs) {
                for (t, &k) in fr.iter().enumerate() {
                    if k != 0 {
                        terms.push((k as i128, sys.angles()[t][j]));
                    }
                }
            }
            v *= kernel(&terms, n).norm_sqr();
        }
        lhs_sq += v;
    }
    let lhs = lhs_sq.sqrt();
    let rhs = 2.0
        * factors
            .iter()
            .zip(obs)
            .map(|(sys, f)| second_seminorm_pow4(sys, f, n).powf(0.25))
            .fold(f64::INFINITY, f64::min);
    Ok(Kron2Check { lhs, rhs, slack, pass: lhs <= slack * rhs })
}

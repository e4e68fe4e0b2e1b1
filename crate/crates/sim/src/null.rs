//! Null sequences, the Herglotz split of correlation sequences and the
//! irrational-floor counterexample.

use num_complex::Complex64;

use crate::average::{box_average, IntPolyMap};
use crate::torus::{e, frac_mul, Character, TorusSystem};
use crate::SimError;

/// Square means `E_{n in [-N, N]^L} |a(n)|^2` along a ladder of radii.
#[derive(Debug, Clone, PartialEq)]
pub struct NullTest {
    pub ladder: Vec<u64>,
    pub estimates: Vec<f64>,
    /// Estimates never increase along the ladder and the last one is at most
    /// the threshold.
    pub null: bool,
}

pub fn besicovitch_null_test(
    l: usize,
    ladder: &[u64],
    threshold: f64,
    mut seq: impl FnMut(&[i64]) -> Result<Complex64, SimError>,
) -> Result<NullTest, SimError> {
    let mut estimates = Vec::with_capacity(ladder.len());
    for &n in ladder {
        let r = box_average(l, n, |p| Ok(Complex64::new(seq(p)?.norm_sqr(), 0.0)))?;
        estimates.push(r.value.re);
    }
    let monotone = estimates.windows(2).all(|w| w[1] <= w[0] + 1e-15);
    let null = monotone && estimates.last().map_or(true, |&x| x <= threshold);
    Ok(NullTest { ladder: ladder.to_vec(), estimates, null })
}

/// `a(n) = integral f_0 . T_{p(n)} f_1` split as `psi + nu` with `psi`
/// almost periodic and `nu` null.
#[derive(Debug, Clone)]
pub struct HerglotzSplit {
    sys: TorusSystem,
    p: IntPolyMap,
    freq: Vec<i64>,
    /// `c_0 c_1` when the frequencies cancel, zero otherwise.
    amp: Complex64,
}

impl HerglotzSplit {
    /// Closed form: `c_0 c_1 e(xi_1 . A p(n))` if `xi_0 + xi_1 = 0`, else 0.
    pub fn a(&self, n: &[i64]) -> Result<Complex64, SimError> {
        if self.amp == Complex64::new(0.0, 0.0) {
            return Ok(self.amp);
        }
        Ok(self.amp * e(self.sys.phase(&self.freq, &self.p.eval(n)?)))
    }

    /// The atomic part of the spectral measure. A rotation has pure point
    /// spectrum, so all of `a` lands here.
    pub fn psi(&self, n: &[i64]) -> Result<Complex64, SimError> {
        self.a(n)
    }

    pub fn nu(&self, n: &[i64]) -> Result<Complex64, SimError> {
        Ok(self.a(n)? - self.psi(n)?)
    }

    pub fn l(&self) -> usize {
        self.p.l()
    }
}

pub fn herglotz_split(sys: &TorusSystem, f0: &Character, f1: &Character, p: &IntPolyMap) -> Result<HerglotzSplit, SimError> {
    if f0.freq.len() != sys.m() || f1.freq.len() != sys.m() || p.d() != sys.d() {
        return Err(SimError::Shape("characters or iterate do not match the system".into()));
    }
    if p.degree() > 1 {
        return Err(SimError::Shape("the split is defined for linear iterates".into()));
    }
    let cancel = f0.freq.iter().zip(&f1.freq).all(|(a, b)| a + b == 0);
    let amp = if cancel { f0.amp * f1.amp } else { Complex64::new(0.0, 0.0) };
    Ok(HerglotzSplit { sys: sys.clone(), p: p.clone(), freq: f1.freq.clone(), amp })
}

/// The doubling map `x -> 2x` on the circle with `f_0 = e(-x)`, `f_1 = e(x)`:
/// `a(n) = integral e(-x) e(2^n x) dx`, which is 1 at `n = 0` and 0 for
/// `n >= 1`. The map is not invertible, so the sequence is extended by zero to
/// negative times. Returns `(psi(n), nu(n))`; the spectrum of the doubling
/// map is Lebesgue apart from constants, so `psi = 0`.
pub fn doubling_demo(n: i64) -> (Complex64, Complex64) {
    let a = if n == 0 { 1.0 } else { 0.0 };
    (Complex64::new(0.0, 0.0), Complex64::new(a, 0.0))
}

/// `e((1/sqrt 2) {sqrt 2 n})`.
pub fn counterexample_sequence(n: i64) -> Complex64 {
    e(frac_mul(n as i128, std::f64::consts::SQRT_2) * std::f64::consts::FRAC_1_SQRT_2)
}

/// Kolmogorov-Smirnov distance between the sample and the uniform law on `[0, 1)`.
pub fn ks_uniform(samples: &[f64]) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max)
}

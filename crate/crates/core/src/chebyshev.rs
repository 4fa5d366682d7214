//! Chebyshev polynomials, the modified polynomials `P_n^{(N)}`, the
//! expansion of `lambda^m` in that basis, and Monte Carlo moment estimators.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entries::{EntryProcessSpec, MatrixPath};
use crate::error::{invalid, Error, Result};
use crate::linalg::HermitianMatrix;
use crate::rng;
use crate::scaling::ScalingMap;
use crate::spectra::SpectrumFrame;
use crate::stats::Welford;

/// `U_n(x)` by the three-term recurrence, with `U_{-1} = U_{-2} = 0`.
pub fn chebyshev_u(n: i64, x: f64) -> Result<f64> {
    if n < -2 {
        return invalid(format!("U_n is defined here for n >= -2, got {n}"));
    }
    if n < 0 {
        return Ok(0.0);
    }
    let (mut prev, mut cur) = (0.0, 1.0);
    for _ in 0..n {
        let next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

/// `P_n^{(N)}(lambda) = U_n(lambda / (2 sqrt(N-2))) - U_{n-2}(...) / (N-2)`.
pub fn p_eval(n: usize, size: usize, lambda: f64) -> Result<f64> {
    if size < 3 {
        return invalid(format!("P_n^(N) needs N >= 3, got {size}"));
    }
    let s2 = (size - 2) as f64;
    let x = lambda / (2.0 * s2.sqrt());
    Ok(chebyshev_u(n as i64, x)? - chebyshev_u(n as i64 - 2, x)? / s2)
}

/// `sum_j P_n^{(N)}(xi_j)` over the spectrum of an `N x N` corner.
pub fn trace_p_spectral(frame: &SpectrumFrame, n: usize) -> Result<f64> {
    let mut acc = 0.0;
    for &x in frame.eigenvalues() {
        acc += p_eval(n, frame.n(), x)?;
    }
    Ok(acc)
}

/// `(N-2)^{-n/2} sum prod H(u_i, u_{i+1})` over closed loopless
/// non-backtracking paths of length `n`. `H` must be unimodular.
pub fn trace_p_paths(h: &HermitianMatrix, n: usize) -> Result<f64> {
    let size = h.dim();
    if size < 3 {
        return invalid(format!("path expansion needs N >= 3, got {size}"));
    }
    let (off, diag) = h.unimodular_defect();
    if off > 1e-12 || diag > 1e-12 {
        return Err(Error::NotUnimodular(format!(
            "max ||H(i,j)| - 1| = {off:e}, max |H(i,i)| = {diag:e}"
        )));
    }
    let mut acc = num_complex::Complex64::new(0.0, 0.0);
    crate::paths::visit_nb_loopless(size, n, crate::paths::Closure::Open, |path| {
        let mut prod = num_complex::Complex64::new(1.0, 0.0);
        for w in path.windows(2) {
            prod *= h.get(w[0] - 1, w[1] - 1);
        }
        acc += prod;
    })?;
    Ok(acc.re / ((size - 2) as f64).powf(n as f64 / 2.0))
}

fn binomial(n: u64, k: u64) -> BigInt {
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

fn ln_binomial(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

/// Coefficients `c_n` with `x^m = sum_n c_n U_n(x)`, exact.
pub fn snyder_coefficients(m: u32) -> Vec<(usize, BigRational)> {
    let m = m as u64;
    let pow2 = |e: u64| BigInt::one() << e;
    if m % 2 == 0 {
        let a = m / 2;
        (0..=a)
            .map(|b| {
                let num = BigInt::from(2 * b + 1) * binomial(2 * a + 1, a - b);
                let den = BigInt::from(2 * a + 1) * pow2(2 * a);
                ((2 * b) as usize, BigRational::new(num, den))
            })
            .collect()
    } else {
        let a = (m + 1) / 2;
        (1..=a)
            .map(|b| {
                let num = BigInt::from(2 * b) * binomial(2 * a, a - b);
                let den = BigInt::from(2 * a) * pow2(2 * a - 1);
                ((2 * b - 1) as usize, BigRational::new(num, den))
            })
            .collect()
    }
}

/// Same coefficients as [`snyder_coefficients`], as natural logarithms.
fn ln_snyder_coefficients(m: u32) -> Vec<(usize, f64)> {
    let m = m as u64;
    let ln2 = std::f64::consts::LN_2;
    if m % 2 == 0 {
        let a = m / 2;
        (0..=a)
            .map(|b| {
                let v = ((2 * b + 1) as f64).ln() + ln_binomial(2 * a + 1, a - b)
                    - ((2 * a + 1) as f64).ln()
                    - (2 * a) as f64 * ln2;
                ((2 * b) as usize, v)
            })
            .collect()
    } else {
        let a = (m + 1) / 2;
        (1..=a)
            .map(|b| {
                let v = ((2 * b) as f64).ln() + ln_binomial(2 * a, a - b)
                    - ((2 * a) as f64).ln()
                    - (2 * a - 1) as f64 * ln2;
                ((2 * b - 1) as usize, v)
            })
            .collect()
    }
}

/// `lambda^m = sum_n coeff_n P_n^{(N)}(lambda)`.
///
/// With `s = sqrt(N-2)` every coefficient factors as `s^n r_n` where `r_n` is
/// rational. The rationals are kept exactly; the floating coefficients are
/// obtained independently in log space. All coefficients are positive.
#[derive(Clone, Debug, Serialize)]
pub struct PBasisExpansion {
    size: usize,
    power: u32,
    /// `ln coeff_n`.
    log_coefficients: BTreeMap<usize, f64>,
    #[serde(skip)]
    rational: BTreeMap<usize, BigRational>,
}

pub fn power_in_p_basis(m: u32, size: usize) -> Result<PBasisExpansion> {
    if m > 200 {
        return invalid(format!("power {m} exceeds the supported maximum 200"));
    }
    if size < 3 {
        return invalid(format!("P basis needs N >= 3, got {size}"));
    }
    let s2 = BigInt::from(size - 2);
    let ln_s2 = ((size - 2) as f64).ln();
    let snyder = snyder_coefficients(m);
    let ln_snyder = ln_snyder_coefficients(m);
    let two_m = BigRational::from_integer(BigInt::one() << m);
    let mut rational = BTreeMap::new();
    let mut log_coefficients = BTreeMap::new();
    for j in (0..=m as usize).filter(|j| (m as usize - j) % 2 == 0) {
        let mut r = BigRational::zero();
        let mut terms = Vec::new();
        for ((n, c), (_, lc)) in snyder.iter().zip(&ln_snyder) {
            if *n < j {
                continue;
            }
            let e = (m as usize - n) / 2;
            r += c * BigRational::from_integer(num_traits::pow(s2.clone(), e));
            terms.push(lc + e as f64 * ln_s2);
        }
        let hi = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = hi + terms.iter().map(|t| (t - hi).exp()).sum::<f64>().ln();
        log_coefficients.insert(j, m as f64 * std::f64::consts::LN_2 + lse + 0.5 * j as f64 * ln_s2);
        rational.insert(j, &two_m * r);
    }
    Ok(PBasisExpansion {
        size,
        power: m,
        log_coefficients,
        rational,
    })
}

impl PBasisExpansion {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn power(&self) -> u32 {
        self.power
    }

    /// `n -> coeff_n` (may be `inf` for very large `m` and `N`).
    pub fn coefficients(&self) -> BTreeMap<usize, f64> {
        self.log_coefficients
            .iter()
            .map(|(&n, &l)| (n, l.exp()))
            .collect()
    }

    pub fn log_coefficients(&self) -> &BTreeMap<usize, f64> {
        &self.log_coefficients
    }

    /// Exact rational `r_n` with `coeff_n = (N-2)^{n/2} r_n`.
    pub fn reduced_rational(&self, n: usize) -> Option<&BigRational> {
        self.rational.get(&n)
    }

    /// Floating evaluation of `sum coeff_n P_n(lambda)`. Accurate near the
    /// spectral edge `|lambda| ~ 2 sqrt(N-2)`; for small `|lambda|` and large
    /// `N` the terms cancel heavily and [`Self::evaluate`] should be used.
    pub fn evaluate_f64(&self, lambda: f64) -> f64 {
        let hi = self
            .log_coefficients
            .values()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = self
            .log_coefficients
            .iter()
            .map(|(&n, &l)| (l - hi).exp() * p_eval(n, self.size, lambda).unwrap())
            .sum();
        sum * hi.exp()
    }

    /// Evaluation in exact rational arithmetic at the binary value of
    /// `lambda`, rounded once at the end.
    pub fn evaluate(&self, lambda: f64) -> Result<f64> {
        self.evaluate_rational(lambda)?
            .to_f64()
            .ok_or_else(|| Error::Numerical("expansion value not representable".into()))
    }

    /// Exact value of the expansion at the binary value of `lambda`.
    pub fn evaluate_rational(&self, lambda: f64) -> Result<BigRational> {
        let l = BigRational::from_float(lambda)
            .ok_or_else(|| Error::InvalidParameter("lambda must be finite".into()))?;
        let s2 = BigRational::from_integer(BigInt::from(self.size - 2));
        // V_j = (N-2)^{j/2} U_j(lambda / (2 sqrt(N-2))), V_{j+1} = lambda V_j - (N-2) V_{j-1}.
        let top = self.power as usize;
        let mut v = Vec::with_capacity(top + 1);
        v.push(BigRational::one());
        if top >= 1 {
            v.push(l.clone());
        }
        for j in 1..top {
            let next = &l * &v[j] - &s2 * &v[j - 1];
            v.push(next);
        }
        let mut acc = BigRational::zero();
        for (&n, r) in &self.rational {
            let mut term = v[n].clone();
            if n >= 2 {
                term -= &v[n - 2];
            }
            acc += r * term;
        }
        Ok(acc)
    }
}

/// Which moment of the corner spectra is averaged.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentKind {
    /// `prod_p tr (H^{(N_p)}(tau_p) / (2 sqrt(N_p)))^{m_p}`.
    Plain,
    /// `prod_p tr P_{n_p}^{(N_p)}(H^{(N_p)}(tau_p))`.
    Modified,
}

/// Exponents, times and corner sizes of a mixed moment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentSpec {
    pub kind: MomentKind,
    pub exponents: Vec<usize>,
    pub times: Vec<f64>,
    pub sizes: Vec<usize>,
}

impl MomentSpec {
    pub fn new(kind: MomentKind, exponents: Vec<usize>, times: Vec<f64>, sizes: Vec<usize>) -> Result<Self> {
        let s = Self {
            kind,
            exponents,
            times,
            sizes,
        };
        s.validate()?;
        Ok(s)
    }

    /// Single-time, single-corner moment.
    pub fn single(kind: MomentKind, m: usize, tau: f64, size: usize) -> Result<Self> {
        Self::new(kind, vec![m], vec![tau], vec![size])
    }

    /// Moment at the edge-scaled point: `m_p = round(2 alpha_p M^{2/3})`,
    /// `tau_p = s_p M^{-1/3}`, `N_p = round(N(t_p))`.
    pub fn from_scaling(
        kind: MomentKind,
        map: &ScalingMap,
        alpha: &[f64],
        s: &[f64],
        t: &[f64],
    ) -> Result<Self> {
        if alpha.len() != s.len() || s.len() != t.len() {
            return Err(Error::SizeMismatch("alpha, s and t must have equal length".into()));
        }
        let mf = map.m() as f64;
        let exponents = alpha
            .iter()
            .map(|a| (2.0 * a * mf.powf(2.0 / 3.0)).round() as usize)
            .collect();
        let times = s.iter().map(|&x| map.tau(x)).collect();
        let sizes = t.iter().map(|&x| map.n_real(x).round() as usize).collect();
        Self::new(kind, exponents, times, sizes)
    }

    pub fn k(&self) -> usize {
        self.exponents.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.exponents.len();
        if k == 0 || self.times.len() != k || self.sizes.len() != k {
            return Err(Error::SizeMismatch(
                "exponents, times and sizes must be non-empty and of equal length".into(),
            ));
        }
        if self.exponents.iter().any(|&m| m == 0) {
            return invalid("all exponents must be at least 1");
        }
        if self.times.iter().any(|t| !(-1.0..=1.0).contains(t)) {
            return invalid("times must lie in [-1, 1]");
        }
        let min_size = match self.kind {
            MomentKind::Plain => 1,
            MomentKind::Modified => 3,
        };
        if self.sizes.iter().any(|&n| n < min_size) {
            return invalid(format!("corner sizes must be at least {min_size}"));
        }
        Ok(())
    }

    /// Value of the moment's product on one realisation.
    pub fn evaluate_on(&self, path: &MatrixPath) -> Result<f64> {
        let mut prod = 1.0;
        let mut cache: Vec<(f64, HermitianMatrix)> = Vec::new();
        for p in 0..self.k() {
            let tau = self.times[p];
            let n_max = (0..self.k())
                .filter(|&q| self.times[q] == tau)
                .map(|q| self.sizes[q])
                .max()
                .unwrap();
            if !cache.iter().any(|(t, _)| *t == tau) {
                cache.push((tau, path.snapshot(tau, n_max)?));
            }
            let h = &cache.iter().find(|(t, _)| *t == tau).unwrap().1;
            let n = self.sizes[p];
            let ev = h.leading_corner(n)?.eigenvalues();
            let m = self.exponents[p];
            let tr = match self.kind {
                MomentKind::Plain => {
                    let c = 1.0 / (2.0 * (n as f64).sqrt());
                    ev.iter().map(|x| (x * c).powi(m as i32)).sum::<f64>()
                }
                MomentKind::Modified => {
                    let mut acc = 0.0;
                    for &x in &ev {
                        acc += p_eval(m, n, x)?;
                    }
                    acc
                }
            };
            prod *= tr;
        }
        Ok(prod)
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Clone, Debug, Serialize)]
pub struct MomentEstimate {
    pub spec: MomentSpec,
    pub ensemble: EntryProcessSpec,
    pub estimate: f64,
    pub stderr: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Average of the moment product over independent realisations.
pub fn mc_mixed_moments(
    spec: &MomentSpec,
    ensemble: &EntryProcessSpec,
    trials: usize,
    seed: u64,
) -> Result<MomentEstimate> {
    spec.validate()?;
    if trials < 100 {
        return invalid("Monte Carlo moments need at least 100 trials");
    }
    let values = (0..trials)
        .into_par_iter()
        .map(|k| spec.evaluate_on(&MatrixPath::new(*ensemble, rng::trial_seed(seed, k as u64))))
        .collect::<Result<Vec<f64>>>()?;
    let w: Welford = values.into_iter().collect();
    Ok(MomentEstimate {
        spec: spec.clone(),
        ensemble: *ensemble,
        estimate: w.mean(),
        stderr: w.stderr(),
        trials,
        seed,
    })
}

/// Result of a truncated Laplace sum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LaplaceValue {
    pub value: f64,
    pub terms: usize,
    /// The tail guard could not be confirmed on a truncated line set.
    pub flagged: bool,
}

const TAIL_GUARD: f64 = 1e-12;

fn laplace_sum(lines: &[f64], alpha: f64, complete: bool) -> LaplaceValue {
    let mut sum = 0.0;
    let mut terms = 0;
    let mut guard_met = false;
    for &l in lines {
        let e = (alpha * l).exp();
        if terms > 0 && e < TAIL_GUARD * sum {
            guard_met = true;
            break;
        }
        sum += e;
        terms += 1;
    }
    LaplaceValue {
        value: sum,
        terms,
        flagged: !complete && !guard_met,
    }
}

/// `sum_j e^{alpha lambda_j}` plus optionally `(-1)^m sum_j e^{alpha lambda~_j}`.
///
/// `lines` must be descending. `complete` states that the lines are the full
/// spectrum rather than the top `j_max` of it.
pub fn laplace_statistic(
    lines: &[f64],
    alpha: f64,
    mirror: Option<(&[f64], u32)>,
    complete: bool,
) -> Result<LaplaceValue> {
    if !(alpha >= 1.0) {
        return invalid(format!("Laplace parameter must be >= 1, got {alpha}"));
    }
    let mut v = laplace_sum(lines, alpha, complete);
    if let Some((m, parity)) = mirror {
        let w = laplace_sum(m, alpha, complete);
        let sign = if parity % 2 == 0 { 1.0 } else { -1.0 };
        v.value += sign * w.value;
        v.terms += w.terms;
        v.flagged |= w.flagged;
    }
    Ok(v)
}

/// Laplace statistic of a full corner spectrum after edge scaling.
pub fn laplace_statistic_frame(
    frame: &SpectrumFrame,
    map: &ScalingMap,
    alpha: f64,
    mirror_parity: Option<u32>,
) -> Result<LaplaceValue> {
    let lines = map.scale_spectrum(frame);
    let mirror = mirror_parity.map(|p| (map.scale_mirrored(frame), p));
    laplace_statistic(
        &lines,
        alpha,
        mirror.as_ref().map(|(v, p)| (v.as_slice(), *p)),
        true,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeCategory {
    RightEdge,
    LeftEdge,
    Bulk,
    Tail,
}

/// Places an eigenvalue of an `N x N` corner into one of four windows of
/// width `M^{-1/6 + eps}` around the edges. Anything outside the two edge
/// windows and the bulk counts as tail.
pub fn edge_bulk_classify(xi: f64, size: usize, m: u32, eps: f64) -> EdgeCategory {
    let delta = (m as f64).powf(-1.0 / 6.0 + eps);
    let edge = 2.0 * (size as f64).sqrt();
    if (xi - edge).abs() <= delta {
        EdgeCategory::RightEdge
    } else if (xi + edge).abs() <= delta {
        EdgeCategory::LeftEdge
    } else if xi.abs() <= edge - delta {
        EdgeCategory::Bulk
    } else {
        EdgeCategory::Tail
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entries::SymmetryClass;

    fn ones3() -> HermitianMatrix {
        HermitianMatrix::from_real(3, vec![0., 1., 1., 1., 0., 1., 1., 1., 0.]).unwrap()
    }

    #[test]
    fn chebyshev_values() {
        assert_eq!(chebyshev_u(0, 0.3).unwrap(), 1.0);
        assert_eq!(chebyshev_u(2, 1.0).unwrap(), 3.0);
        assert!((chebyshev_u(3, 0.5).unwrap() + 1.0).abs() < 1e-15);
        assert_eq!(chebyshev_u(-2, 0.7).unwrap(), 0.0);
        assert!(chebyshev_u(-3, 0.7).is_err());
        let th: f64 = 0.9;
        assert!((chebyshev_u(7, th.cos()).unwrap() - (8.0 * th).sin() / th.sin()).abs() < 1e-12);
    }

    #[test]
    fn p_values() {
        assert_eq!(p_eval(0, 9, 1.7).unwrap(), 1.0);
        assert!((p_eval(1, 6, 1.7).unwrap() - 1.7 / 2.0).abs() < 1e-15);
        assert!((p_eval(2, 3, 1.7).unwrap() - (1.7 * 1.7 - 2.0)).abs() < 1e-14);
        assert!(p_eval(2, 2, 0.0).is_err());
    }

    #[test]
    fn traces_of_all_ones() {
        let h = ones3();
        let f = SpectrumFrame::of_matrix(0.0, &h).unwrap();
        assert!(trace_p_spectral(&f, 2).unwrap().abs() < 1e-12);
        assert!((trace_p_spectral(&f, 3).unwrap() - 6.0).abs() < 1e-12);
        assert!((trace_p_spectral(&f, 0).unwrap() - 3.0).abs() < 1e-15);
        assert_eq!(trace_p_paths(&h, 2).unwrap(), 0.0);
        assert!((trace_p_paths(&h, 3).unwrap() - 6.0).abs() < 1e-12);
        assert_eq!(trace_p_paths(&h, 1).unwrap(), 0.0);
    }

    #[test]
    fn path_trace_requires_unimodular() {
        let h = HermitianMatrix::from_real(3, vec![1., 1., 1., 1., 0., 1., 1., 1., 0.]).unwrap();
        assert!(matches!(trace_p_paths(&h, 3), Err(Error::NotUnimodular(_))));
    }

    #[test]
    fn snyder_matches_ballot_numbers() {
        // x^m = 2^{-m} sum_j [C(m,j) - C(m,j-1)] U_{m-2j}(x)
        for m in 0..=40u32 {
            let c = snyder_coefficients(m);
            let den = BigInt::one() << m;
            for (n, v) in c {
                let j = (m as u64 - n as u64) / 2;
                let b = binomial(m as u64, j) - if j > 0 { binomial(m as u64, j - 1) } else { BigInt::zero() };
                assert_eq!(v, BigRational::new(b, den.clone()), "m={m} n={n}");
            }
        }
        let c2 = snyder_coefficients(2);
        assert_eq!(c2[0].1, BigRational::new(3.into(), 12.into()));
        assert_eq!(c2[1].1, BigRational::new(3.into(), 12.into()));
    }

    #[test]
    fn p_basis_small_powers() {
        let e0 = power_in_p_basis(0, 5).unwrap();
        assert_eq!(e0.coefficients().len(), 1);
        assert!((e0.coefficients()[&0] - 1.0).abs() < 1e-15);
        let e1 = power_in_p_basis(1, 7).unwrap();
        for l in [-2.0, 0.3, 5.0] {
            assert!((e1.evaluate(l).unwrap() - l).abs() < 1e-14);
            assert!((e1.evaluate_f64(l) - l).abs() < 1e-13);
        }
        let e2 = power_in_p_basis(2, 3).unwrap();
        assert!((e2.evaluate(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(power_in_p_basis(201, 3).is_err());
        assert!(power_in_p_basis(4, 2).is_err());
    }

    #[test]
    fn p_basis_exact_identity() {
        for m in [5u32, 12, 30] {
            for size in [3usize, 10, 100] {
                let e = power_in_p_basis(m, size).unwrap();
                for l in [-2.75, -0.125, 0.0, 1.5, 3.0] {
                    let lr = BigRational::from_float(l).unwrap();
                    assert_eq!(e.evaluate_rational(l).unwrap(), num_traits::pow(lr, m as usize));
                }
            }
        }
    }

    #[test]
    fn log_and_rational_coefficients_agree() {
        for (m, size) in [(7u32, 3usize), (30, 100), (60, 10)] {
            let e = power_in_p_basis(m, size).unwrap();
            for (n, lc) in e.log_coefficients() {
                let r = e.reduced_rational(*n).unwrap().to_f64().unwrap();
                let exact = r.ln() + 0.5 * *n as f64 * ((size - 2) as f64).ln();
                assert!((lc - exact).abs() < 1e-12 * exact.abs().max(1.0), "m={m} N={size} n={n}");
            }
        }
    }

    #[test]
    fn floating_route_is_accurate_near_the_edge() {
        for (m, size) in [(20u32, 10usize), (30, 100)] {
            let e = power_in_p_basis(m, size).unwrap();
            let edge = 2.0 * ((size - 2) as f64).sqrt();
            for l in [edge, 1.1 * edge, -edge] {
                let rel = (e.evaluate_f64(l) - l.powi(m as i32)).abs() / l.powi(m as i32).abs();
                assert!(rel < 1e-9, "m={m} N={size} l={l} rel={rel}");
            }
        }
    }

    #[test]
    fn moment_spec_validation() {
        assert!(MomentSpec::single(MomentKind::Modified, 3, 0.0, 2).is_err());
        assert!(MomentSpec::single(MomentKind::Plain, 0, 0.0, 2).is_err());
        assert!(MomentSpec::single(MomentKind::Plain, 2, 1.5, 2).is_err());
        assert!(MomentSpec::new(MomentKind::Plain, vec![1, 2], vec![0.0], vec![3, 3]).is_err());
        let map = ScalingMap::new(64).unwrap();
        let s = MomentSpec::from_scaling(MomentKind::Plain, &map, &[1.0], &[0.0], &[0.0]).unwrap();
        assert_eq!(s.exponents, vec![32]);
        assert_eq!(s.sizes, vec![64]);
    }

    #[test]
    fn odd_plain_moment_vanishes() {
        let spec = MomentSpec::single(MomentKind::Plain, 3, 0.0, 4).unwrap();
        let ens = EntryProcessSpec::gaussian_ou(SymmetryClass::Real);
        let e = mc_mixed_moments(&spec, &ens, 4000, 5).unwrap();
        assert!(e.estimate.abs() < 3.5 * e.stderr);
    }

    #[test]
    fn laplace_examples() {
        let v = laplace_statistic(&[0.0, f64::NEG_INFINITY], 1.0, None, true).unwrap();
        assert_eq!(v.value, 1.0);
        let v = laplace_statistic(&[0.0, -(2.0f64).ln()], 1.0, None, true).unwrap();
        assert!((v.value - 1.5).abs() < 1e-15);
        let v = laplace_statistic(&[0.0, -(2.0f64).ln()], 1.0, None, false).unwrap();
        assert!(v.flagged);
        let v = laplace_statistic(&[0.0, -40.0, -50.0], 1.0, None, false).unwrap();
        assert!(!v.flagged);
        assert_eq!(v.terms, 1);
        let v = laplace_statistic(&[0.0], 1.0, Some((&[0.0], 1)), true).unwrap();
        assert_eq!(v.value, 0.0);
        assert!(laplace_statistic(&[0.0], 0.5, None, true).is_err());
        let lines = [-0.1, -0.4, -1.3];
        let a = laplace_statistic(&lines, 1.0, None, true).unwrap().value;
        let b = laplace_statistic(&lines, 2.0, None, true).unwrap().value;
        assert!(b < a);
    }

    #[test]
    fn classification() {
        let n = 100;
        assert_eq!(edge_bulk_classify(20.0, n, 100, 0.01), EdgeCategory::RightEdge);
        assert_eq!(edge_bulk_classify(-20.0, n, 100, 0.01), EdgeCategory::LeftEdge);
        assert_eq!(edge_bulk_classify(0.0, n, 8, 0.01), EdgeCategory::Bulk);
        assert_eq!(edge_bulk_classify(30.0, n, 100, 0.01), EdgeCategory::Tail);
    }
}

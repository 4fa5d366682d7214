//! Stationary matrix-valued entry processes on `tau in [-1, 1]`.
//!
//! Every entry of `H(tau)` is a deterministic function of the ensemble seed,
//! the index pair and `tau`, so corners of any size and any collection of
//! times can be sampled without materialising a trajectory.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::HermitianMatrix;
use crate::rng;

/// Resampling events per unit of `tau`.
pub const RESAMPLE_INTENSITY: f64 = 1.0;

/// Refinement depth of the dyadic Ornstein-Uhlenbeck construction.
const OU_DEPTH: u32 = 30;

const TAG_OFFDIAG: u64 = 0x6f66_6664;
const TAG_DIAG: u64 = 0x6469_6167;

/// Real symmetric (`beta = 1`) or complex Hermitian (`beta = 2`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum SymmetryClass {
    Real,
    Complex,
}

impl SymmetryClass {
    pub fn beta(self) -> u8 {
        match self {
            SymmetryClass::Real => 1,
            SymmetryClass::Complex => 2,
        }
    }

    pub fn from_beta(beta: u8) -> Result<Self> {
        match beta {
            1 => Ok(SymmetryClass::Real),
            2 => Ok(SymmetryClass::Complex),
            other => invalid(format!("beta must be 1 or 2, got {other}")),
        }
    }
}

impl TryFrom<u8> for SymmetryClass {
    type Error = String;
    fn try_from(b: u8) -> std::result::Result<Self, String> {
        SymmetryClass::from_beta(b).map_err(|e| e.to_string())
    }
}

impl From<SymmetryClass> for u8 {
    fn from(s: SymmetryClass) -> u8 {
        s.beta()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EntryKind {
    /// Stationary Ornstein-Uhlenbeck entries with `E h(t) conj h(t') = e^{-|t-t'|}`.
    GaussianOu,
    /// Gaussian values redrawn at the events of a rate-one Poisson clock.
    ResampledGaussian,
    /// Unit-modulus values redrawn at the events of a rate-one Poisson clock.
    ResampledUnimodular,
}

impl EntryKind {
    pub fn name(self) -> &'static str {
        match self {
            EntryKind::GaussianOu => "gaussian-ou",
            EntryKind::ResampledGaussian => "resampled-gaussian",
            EntryKind::ResampledUnimodular => "resampled-unimodular",
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    kind: EntryKind,
    beta: SymmetryClass,
    #[serde(default)]
    zero_diagonal: Option<bool>,
}

/// Law of the entry processes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct EntryProcessSpec {
    kind: EntryKind,
    beta: SymmetryClass,
    zero_diagonal: bool,
}

impl TryFrom<RawSpec> for EntryProcessSpec {
    type Error = String;
    fn try_from(r: RawSpec) -> std::result::Result<Self, String> {
        let zero_diagonal = r
            .zero_diagonal
            .unwrap_or(r.kind == EntryKind::ResampledUnimodular);
        EntryProcessSpec::new(r.kind, r.beta, zero_diagonal).map_err(|e| e.to_string())
    }
}

impl From<EntryProcessSpec> for RawSpec {
    fn from(s: EntryProcessSpec) -> RawSpec {
        RawSpec {
            kind: s.kind,
            beta: s.beta,
            zero_diagonal: Some(s.zero_diagonal),
        }
    }
}

impl EntryProcessSpec {
    /// Unimodular entries always have a zero diagonal; asking otherwise is an error.
    pub fn new(kind: EntryKind, beta: SymmetryClass, zero_diagonal: bool) -> Result<Self> {
        if kind == EntryKind::ResampledUnimodular && !zero_diagonal {
            return invalid("resampled-unimodular entries require zero_diagonal = true");
        }
        Ok(Self {
            kind,
            beta,
            zero_diagonal,
        })
    }

    pub fn unimodular(beta: SymmetryClass) -> Self {
        Self {
            kind: EntryKind::ResampledUnimodular,
            beta,
            zero_diagonal: true,
        }
    }

    pub fn gaussian_ou(beta: SymmetryClass) -> Self {
        Self {
            kind: EntryKind::GaussianOu,
            beta,
            zero_diagonal: false,
        }
    }

    pub fn resampled_gaussian(beta: SymmetryClass) -> Self {
        Self {
            kind: EntryKind::ResampledGaussian,
            beta,
            zero_diagonal: false,
        }
    }

    pub fn kind(&self) -> EntryKind {
        self.kind
    }

    pub fn beta(&self) -> SymmetryClass {
        self.beta
    }

    pub fn zero_diagonal(&self) -> bool {
        self.zero_diagonal
    }

    /// `E |H(i,i)|^2` for the diagonal entries.
    pub fn diagonal_variance(&self) -> f64 {
        if self.zero_diagonal {
            0.0
        } else {
            match self.beta {
                SymmetryClass::Real => 2.0,
                SymmetryClass::Complex => 1.0,
            }
        }
    }

    /// Model value of `E H(i,j)(t1) conj(H(i,j)(t2))` for `i != j`.
    pub fn model_covariance(&self, dt: f64) -> f64 {
        match self.kind {
            EntryKind::GaussianOu => (-dt.abs()).exp(),
            _ => (-RESAMPLE_INTENSITY * dt.abs()).exp(),
        }
    }

    /// Model value of `E H(i,j)(t1) H(i,j)(t2)` (no conjugate) for `i != j`.
    pub fn model_plain_covariance(&self, dt: f64) -> f64 {
        match self.beta {
            SymmetryClass::Real => self.model_covariance(dt),
            SymmetryClass::Complex => 0.0,
        }
    }

    /// Sub-Gaussian constant `C_0` with `E e^{theta h} <= e^{C_0 theta^2}`.
    pub fn subgaussian_constant(&self) -> f64 {
        match (self.kind, self.beta) {
            (EntryKind::ResampledUnimodular, _) => 0.5,
            (_, SymmetryClass::Real) => 1.0,
            (_, SymmetryClass::Complex) => 0.5,
        }
    }

    pub fn label(&self) -> String {
        format!("{}-beta{}", self.kind.name(), self.beta.beta())
    }
}

/// One realisation of the matrix process `H(tau)`, indexed from 1.
#[derive(Clone, Copy, Debug)]
pub struct MatrixPath {
    spec: EntryProcessSpec,
    seed: u64,
}

impl MatrixPath {
    pub fn new(spec: EntryProcessSpec, seed: u64) -> Self {
        Self { spec, seed }
    }

    pub fn spec(&self) -> &EntryProcessSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `H(i,j)(tau)` for 1-based indices.
    pub fn entry(&self, i: usize, j: usize, tau: f64) -> Result<Complex64> {
        check_index(i)?;
        check_index(j)?;
        check_tau(tau)?;
        Ok(self.entry_unchecked(i, j, tau))
    }

    /// Values of `H(i,j)` at several times (any order).
    pub fn sample_entry_path(&self, i: usize, j: usize, times: &[f64]) -> Result<Vec<Complex64>> {
        check_index(i)?;
        check_index(j)?;
        for &t in times {
            check_tau(t)?;
        }
        Ok(times.iter().map(|&t| self.entry_unchecked(i, j, t)).collect())
    }

    /// The `n x n` leading corner of `H(tau)`.
    pub fn snapshot(&self, tau: f64, n: usize) -> Result<HermitianMatrix> {
        check_tau(tau)?;
        if n == 0 {
            return invalid("snapshot size must be positive");
        }
        Ok(match self.spec.beta {
            SymmetryClass::Real => HermitianMatrix::from_lower_real(n, |i, j| {
                self.entry_unchecked(i + 1, j + 1, tau).re
            }),
            SymmetryClass::Complex => HermitianMatrix::from_lower_complex(n, |i, j| {
                self.entry_unchecked(i + 1, j + 1, tau)
            }),
        })
    }

    fn entry_unchecked(&self, i: usize, j: usize, tau: f64) -> Complex64 {
        if i == j {
            if self.spec.zero_diagonal {
                return Complex64::new(0.0, 0.0);
            }
            let key = rng::derive_seed(self.seed, &[TAG_DIAG, i as u64]);
            let sd = self.spec.diagonal_variance().sqrt();
            let x = match self.spec.kind {
                EntryKind::GaussianOu => ou_value(key, tau),
                EntryKind::ResampledGaussian => resampled(key, tau, |r| {
                    let z: f64 = StandardNormal.sample(r);
                    Complex64::new(z, 0.0)
                })
                .re,
                EntryKind::ResampledUnimodular => unreachable!("unimodular has zero diagonal"),
            };
            return Complex64::new(sd * x, 0.0);
        }
        let (a, b, flip) = if i < j { (i, j, false) } else { (j, i, true) };
        let key = rng::derive_seed(self.seed, &[TAG_OFFDIAG, a as u64, b as u64]);
        let z = self.offdiag(key, tau);
        if flip {
            z.conj()
        } else {
            z
        }
    }

    fn offdiag(&self, key: u64, tau: f64) -> Complex64 {
        use std::f64::consts::{FRAC_1_SQRT_2, TAU};
        match (self.spec.kind, self.spec.beta) {
            (EntryKind::GaussianOu, SymmetryClass::Real) => Complex64::new(ou_value(key, tau), 0.0),
            (EntryKind::GaussianOu, SymmetryClass::Complex) => Complex64::new(
                FRAC_1_SQRT_2 * ou_value(rng::derive_seed(key, &[0]), tau),
                FRAC_1_SQRT_2 * ou_value(rng::derive_seed(key, &[1]), tau),
            ),
            (EntryKind::ResampledGaussian, SymmetryClass::Real) => resampled(key, tau, |r| {
                Complex64::new(StandardNormal.sample(r), 0.0)
            }),
            (EntryKind::ResampledGaussian, SymmetryClass::Complex) => resampled(key, tau, |r| {
                let x: f64 = StandardNormal.sample(r);
                let y: f64 = StandardNormal.sample(r);
                Complex64::new(FRAC_1_SQRT_2 * x, FRAC_1_SQRT_2 * y)
            }),
            (EntryKind::ResampledUnimodular, SymmetryClass::Real) => {
                resampled(key, tau, |r| {
                    Complex64::new(if r.random::<bool>() { 1.0 } else { -1.0 }, 0.0)
                })
            }
            (EntryKind::ResampledUnimodular, SymmetryClass::Complex) => {
                resampled(key, tau, |r| Complex64::from_polar(1.0, TAU * r.random::<f64>()))
            }
        }
    }
}

fn check_index(i: usize) -> Result<()> {
    if i == 0 {
        invalid("matrix indices are 1-based")
    } else {
        Ok(())
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if (-1.0..=1.0).contains(&tau) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            x: tau,
            lo: -1.0,
            hi: 1.0,
        })
    }
}

/// Value at `tau` of a process redrawn from `draw` at Poisson times, started
/// at `tau = -1`.
fn resampled(
    key: u64,
    tau: f64,
    mut draw: impl FnMut(&mut rand_pcg::Pcg64Mcg) -> Complex64,
) -> Complex64 {
    let mut r = rng::stream(key);
    let mut v = draw(&mut r);
    let mut t = -1.0;
    loop {
        let gap: f64 = Exp1.sample(&mut r);
        t += gap / RESAMPLE_INTENSITY;
        if t > tau {
            return v;
        }
        v = draw(&mut r);
    }
}

/// Stationary unit Ornstein-Uhlenbeck process on `[-1, 1]`, built by dyadic
/// bridge refinement so that the value at any time is addressable.
fn ou_value(key: u64, tau: f64) -> f64 {
    let x_lo = rng::normal_at(key, node_id(0, 0));
    let r2 = (-2.0f64).exp();
    let x_hi = r2 * x_lo + (1.0 - r2 * r2).sqrt() * rng::normal_at(key, node_id(0, 1));
    if tau == -1.0 {
        return x_lo;
    }
    if tau == 1.0 {
        return x_hi;
    }
    let (mut a, mut b, mut xa, mut xb) = (-1.0f64, 1.0f64, x_lo, x_hi);
    let mut index: u64 = 0;
    for level in 1..=OU_DEPTH {
        let c = 0.5 * (a + b);
        let xc = ou_bridge(a, b, c, xa, xb, rng::normal_at(key, node_id(level, index)));
        if tau == c {
            return xc;
        }
        if tau < c {
            b = c;
            xb = xc;
            index *= 2;
        } else {
            a = c;
            xa = xc;
            index = 2 * index + 1;
        }
    }
    let z = rng::normal_at(key, rng::mix64(tau.to_bits() ^ 0x6f75_5f66_696e_616c));
    ou_bridge(a, b, tau, xa, xb, z)
}

#[inline]
fn node_id(level: u32, index: u64) -> u64 {
    ((level as u64) << 40) | index
}

/// Draw of `X(c)` given `X(a) = xa`, `X(b) = xb` for a unit OU process.
#[inline]
fn ou_bridge(a: f64, b: f64, c: f64, xa: f64, xb: f64, z: f64) -> f64 {
    let r1 = (-(c - a)).exp();
    let r2 = (-(b - c)).exp();
    let r = r1 * r2;
    let denom = 1.0 - r * r;
    let mean = (r1 * (1.0 - r2 * r2) * xa + r2 * (1.0 - r1 * r1) * xb) / denom;
    let var = (1.0 - r1 * r1) * (1.0 - r2 * r2) / denom;
    mean + var.max(0.0).sqrt() * z
}

/// Empirical second moments of one off-diagonal entry at two times.
#[derive(Clone, Debug, Serialize)]
pub struct CovarianceReport {
    pub dt: f64,
    pub trials: usize,
    /// Sample mean of `Re[H(t1) conj H(t2)]`.
    pub conj: f64,
    pub conj_stderr: f64,
    pub conj_model: f64,
    /// Sample mean of `H(t1) H(t2)`.
    pub plain_re: f64,
    pub plain_im: f64,
    pub plain_re_stderr: f64,
    pub plain_im_stderr: f64,
    pub plain_model: f64,
}

impl CovarianceReport {
    /// Largest deviation from the model in units of standard error.
    pub fn max_z(&self) -> f64 {
        let z = |x: f64, m: f64, se: f64| {
            if se > 0.0 {
                (x - m).abs() / se
            } else if (x - m).abs() < 1e-12 {
                0.0
            } else {
                f64::INFINITY
            }
        };
        z(self.conj, self.conj_model, self.conj_stderr)
            .max(z(self.plain_re, self.plain_model, self.plain_re_stderr))
            .max(z(self.plain_im, 0.0, self.plain_im_stderr))
    }
}

/// Monte Carlo check of the entry covariances at separation `dt`, using
/// entry `(1, 2)` at times `-dt/2` and `dt/2`.
pub fn entry_covariance_check(
    spec: &EntryProcessSpec,
    dt: f64,
    trials: usize,
    seed: u64,
) -> Result<CovarianceReport> {
    if !(0.0..=2.0).contains(&dt) {
        return Err(Error::OutOfRange {
            x: dt,
            lo: 0.0,
            hi: 2.0,
        });
    }
    if trials < 2 {
        return invalid("need at least two trials");
    }
    let (t1, t2) = (-0.5 * dt, 0.5 * dt);
    let mut conj = crate::stats::Welford::default();
    let mut pre = crate::stats::Welford::default();
    let mut pim = crate::stats::Welford::default();
    for k in 0..trials {
        let p = MatrixPath::new(*spec, rng::trial_seed(seed, k as u64));
        let a = p.entry_unchecked(1, 2, t1);
        let b = p.entry_unchecked(1, 2, t2);
        conj.push((a * b.conj()).re);
        let ab = a * b;
        pre.push(ab.re);
        pim.push(ab.im);
    }
    Ok(CovarianceReport {
        dt,
        trials,
        conj: conj.mean(),
        conj_stderr: conj.stderr(),
        conj_model: spec.model_covariance(dt),
        plain_re: pre.mean(),
        plain_im: pim.mean(),
        plain_re_stderr: pre.stderr(),
        plain_im_stderr: pim.stderr(),
        plain_model: spec.model_plain_covariance(dt),
    })
}

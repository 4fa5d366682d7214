//! Dense Hermitian matrices and an eigenvalue-only solver.
//!
//! The solver reduces to real symmetric tridiagonal form with Householder
//! reflections (only the lower triangle is touched) and then runs implicit QL
//! with Wilkinson shifts. No eigenvectors are formed.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Asymmetry tolerance used when accepting user-supplied matrices.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
enum Storage {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

/// A dense Hermitian matrix in row-major storage.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    n: usize,
    data: Storage,
}

impl HermitianMatrix {
    /// Builds a real symmetric matrix, rejecting asymmetric input.
    pub fn from_real(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::SizeMismatch(format!(
                "expected {} entries, got {}",
                n * n,
                data.len()
            )));
        }
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((data[i * n + j] - data[j * n + i]).abs());
            }
        }
        if worst > HERMITIAN_TOL || worst.is_nan() {
            return Err(Error::NonHermitian { asymmetry: worst });
        }
        Ok(Self {
            n,
            data: Storage::Real(data),
        })
    }

    /// Builds a complex Hermitian matrix, rejecting non-Hermitian input.
    pub fn from_complex(n: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::SizeMismatch(format!(
                "expected {} entries, got {}",
                n * n,
                data.len()
            )));
        }
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..=i {
                worst = worst.max((data[i * n + j] - data[j * n + i].conj()).norm());
            }
        }
        if worst > HERMITIAN_TOL || worst.is_nan() {
            return Err(Error::NonHermitian { asymmetry: worst });
        }
        Ok(Self {
            n,
            data: Storage::Complex(data),
        })
    }

    /// Builds a matrix from its lower triangle; the upper one is mirrored.
    pub(crate) fn from_lower_real(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self {
            n,
            data: Storage::Real(data),
        }
    }

    pub(crate) fn from_lower_complex(
        n: usize,
        mut f: impl FnMut(usize, usize) -> Complex64,
    ) -> Self {
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..i {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v.conj();
            }
            data[i * n + i] = Complex64::new(f(i, i).re, 0.0);
        }
        Self {
            n,
            data: Storage::Complex(data),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_real(&self) -> bool {
        matches!(self.data, Storage::Real(_))
    }

    /// Entry `(i, j)`, zero-based.
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        match &self.data {
            Storage::Real(d) => Complex64::new(d[i * self.n + j], 0.0),
            Storage::Complex(d) => d[i * self.n + j],
        }
    }

    /// The leading `m x m` principal submatrix.
    pub fn leading_corner(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.n {
            return Err(Error::InvalidParameter(format!(
                "corner size {m} outside 1..={}",
                self.n
            )));
        }
        let n = self.n;
        let data = match &self.data {
            Storage::Real(d) => Storage::Real(
                (0..m)
                    .flat_map(|i| d[i * n..i * n + m].iter().copied())
                    .collect(),
            ),
            Storage::Complex(d) => Storage::Complex(
                (0..m)
                    .flat_map(|i| d[i * n..i * n + m].iter().copied())
                    .collect(),
            ),
        };
        Ok(Self { n: m, data })
    }

    /// `-H`.
    pub fn negated(&self) -> Self {
        let data = match &self.data {
            Storage::Real(d) => Storage::Real(d.iter().map(|x| -x).collect()),
            Storage::Complex(d) => Storage::Complex(d.iter().map(|x| -x).collect()),
        };
        Self { n: self.n, data }
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i).re).sum()
    }

    /// `tr H^2 = sum |H(i,j)|^2`.
    pub fn frobenius_norm_sqr(&self) -> f64 {
        match &self.data {
            Storage::Real(d) => d.iter().map(|x| x * x).sum(),
            Storage::Complex(d) => d.iter().map(|x| x.norm_sqr()).sum(),
        }
    }

    /// Largest deviation of an off-diagonal modulus from one, together with
    /// the largest diagonal modulus.
    pub fn unimodular_defect(&self) -> (f64, f64) {
        let mut off = 0.0f64;
        let mut diag = 0.0f64;
        for i in 0..self.n {
            for j in 0..self.n {
                let z = self.get(i, j).norm();
                if i == j {
                    diag = diag.max(z);
                } else {
                    off = off.max((z - 1.0).abs());
                }
            }
        }
        (off, diag)
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let (d, e) = match &self.data {
            Storage::Real(a) => tridiagonalize(self.n, a.clone()),
            Storage::Complex(a) => tridiagonalize(self.n, a.clone()),
        };
        let mut ev = tridiagonal_eigenvalues(d, e);
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }
}

trait Scalar:
    Copy
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::AddAssign
    + std::ops::SubAssign
{
    const ZERO: Self;
    const ONE: Self;
    fn conj(self) -> Self;
    fn re(self) -> f64;
    fn abs2(self) -> f64;
    fn scale(self, s: f64) -> Self;
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    #[inline]
    fn conj(self) -> Self {
        self
    }
    #[inline]
    fn re(self) -> f64 {
        self
    }
    #[inline]
    fn abs2(self) -> f64 {
        self * self
    }
    #[inline]
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

impl Scalar for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
    const ONE: Self = Complex64::new(1.0, 0.0);
    #[inline]
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    #[inline]
    fn re(self) -> f64 {
        self.re
    }
    #[inline]
    fn abs2(self) -> f64 {
        self.norm_sqr()
    }
    #[inline]
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

/// Householder reduction of a Hermitian matrix to a real symmetric
/// tridiagonal `(diagonal, subdiagonal)` pair. Each reflector maps the column
/// below the diagonal onto a multiple of `e_1` with modulus `|x|`, so the
/// resulting subdiagonal is real and non-negative.
fn tridiagonalize<T: Scalar>(n: usize, mut a: Vec<T>) -> (Vec<f64>, Vec<f64>) {
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut v = vec![T::ZERO; n];
    let mut p = vec![T::ZERO; n];
    for k in 0..n.saturating_sub(2) {
        let lo = k + 1;
        let sigma2: f64 = (lo..n).map(|i| a[i * n + k].abs2()).sum();
        let sigma = sigma2.sqrt();
        e[k] = sigma;
        if sigma == 0.0 {
            continue;
        }
        let x0 = a[lo * n + k];
        let ax0 = x0.abs2().sqrt();
        let phase = if ax0 == 0.0 {
            None
        } else {
            Some(1.0 / ax0)
        };
        for i in lo..n {
            v[i] = a[i * n + k];
        }
        // v0 = x0 + phase(x0) * sigma
        v[lo] = match phase {
            Some(inv) => x0 + x0.scale(sigma * inv),
            None => T::ONE.scale(sigma),
        };
        let beta = 1.0 / (sigma * (sigma + ax0));

        // p = beta * B v with B the trailing block, using the lower triangle only.
        for i in lo..n {
            p[i] = T::ZERO;
        }
        for i in lo..n {
            let row = i * n;
            let vi = v[i];
            let mut acc = T::ZERO;
            for j in lo..i {
                let aij = a[row + j];
                acc += aij * v[j];
                p[j] += aij.conj() * vi;
            }
            acc += a[row + i] * vi;
            p[i] += acc;
        }
        let mut vp = T::ZERO;
        for i in lo..n {
            p[i] = p[i].scale(beta);
            vp += v[i].conj() * p[i];
        }
        let kk = 0.5 * beta * vp.re();
        for i in lo..n {
            p[i] -= v[i].scale(kk);
        }
        // B <- B - v q^H - q v^H on the lower triangle.
        for i in lo..n {
            let row = i * n;
            let (vi, qi) = (v[i], p[i]);
            for j in lo..=i {
                a[row + j] -= vi * p[j].conj() + qi * v[j].conj();
            }
        }
    }
    for i in 0..n {
        d[i] = a[i * n + i].re();
    }
    if n >= 2 {
        e[n - 2] = a[(n - 1) * n + (n - 2)].abs2().sqrt();
    }
    if n >= 1 {
        e[n - 1] = 0.0;
    }
    (d, e)
}

/// Eigenvalues of a real symmetric tridiagonal matrix by implicit QL.
/// `e[i]` couples `d[i]` and `d[i + 1]`; `e[n - 1]` is ignored.
pub fn tridiagonal_eigenvalues(mut d: Vec<f64>, mut e: Vec<f64>) -> Vec<f64> {
    let n = d.len();
    if n <= 1 {
        return d;
    }
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 200 {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use nalgebra::{DMatrix, SymmetricEigen};
    use rand::Rng;

    fn random_complex(n: usize, seed: u64) -> HermitianMatrix {
        let mut r = rng::stream(seed);
        HermitianMatrix::from_lower_complex(n, |_, _| {
            Complex64::new(r.random::<f64>() - 0.5, r.random::<f64>() - 0.5)
        })
    }

    fn random_real(n: usize, seed: u64) -> HermitianMatrix {
        let mut r = rng::stream(seed);
        HermitianMatrix::from_lower_real(n, |_, _| r.random::<f64>() - 0.5)
    }

    fn reference(h: &HermitianMatrix) -> Vec<f64> {
        let n = h.dim();
        let m = DMatrix::from_fn(n, n, |i, j| h.get(i, j));
        let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }

    #[test]
    fn matches_reference_solver() {
        for (n, seed) in [(1, 1), (2, 2), (3, 3), (7, 4), (30, 5), (64, 6)] {
            for h in [random_real(n, seed), random_complex(n, seed + 100)] {
                let ours = h.eigenvalues();
                let theirs = reference(&h);
                let scale = h.frobenius_norm_sqr().sqrt().max(1.0);
                for (a, b) in ours.iter().zip(&theirs) {
                    assert!((a - b).abs() < 1e-12 * scale * n as f64, "{a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn degenerate_inputs() {
        let z = HermitianMatrix::from_real(4, vec![0.0; 16]).unwrap();
        assert_eq!(z.eigenvalues(), vec![0.0; 4]);
        let diag = HermitianMatrix::from_lower_real(3, |i, j| if i == j { i as f64 } else { 0.0 });
        assert_eq!(diag.eigenvalues(), vec![2.0, 1.0, 0.0]);
        // Already tridiagonal with a zero column below the diagonal.
        let t = HermitianMatrix::from_lower_real(4, |i, j| match i - j {
            0 => 1.0,
            1 if i != 2 => 0.5,
            _ => 0.0,
        });
        let ours = t.eigenvalues();
        let theirs = reference(&t);
        for (a, b) in ours.iter().zip(&theirs) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let err = HermitianMatrix::from_real(2, vec![0.0, 1.0, 1.5, 0.0]).unwrap_err();
        match err {
            Error::NonHermitian { asymmetry } => assert!((asymmetry - 0.5).abs() < 1e-15),
            other => panic!("unexpected {other}"),
        }
        let c = vec![
            Complex64::new(0.0, 0.1),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        ];
        assert!(HermitianMatrix::from_complex(2, c).is_err());
    }

    #[test]
    fn trace_and_corners() {
        let h = random_complex(6, 9);
        let ev = h.eigenvalues();
        assert!((ev.iter().sum::<f64>() - h.trace()).abs() < 1e-12);
        let sq: f64 = ev.iter().map(|x| x * x).sum();
        assert!((sq - h.frobenius_norm_sqr()).abs() < 1e-12);
        let c = h.leading_corner(3).unwrap();
        assert_eq!(c.dim(), 3);
        assert_eq!(c.get(2, 1), h.get(2, 1));
        assert!(h.leading_corner(0).is_err());
        assert!(h.leading_corner(7).is_err());
        let neg: Vec<f64> = h.negated().eigenvalues();
        for (a, b) in neg.iter().zip(ev.iter().rev()) {
            assert!((a + b).abs() < 1e-12);
        }
    }
}

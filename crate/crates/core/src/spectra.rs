//! Spectra of nested leading corners and the interlacing check.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entries::MatrixPath;
use crate::error::{invalid, Error, Result};
use crate::linalg::HermitianMatrix;

/// Eigenvalues (descending) of the `n x n` corner at time `tau`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumFrame {
    tau: f64,
    n: usize,
    eigenvalues: Vec<f64>,
}

impl SpectrumFrame {
    pub fn new(tau: f64, eigenvalues: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return invalid("a spectrum frame needs at least one eigenvalue");
        }
        if eigenvalues.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical("non-finite eigenvalue".into()));
        }
        if eigenvalues.windows(2).any(|w| w[0] < w[1]) {
            return invalid("eigenvalues must be in descending order");
        }
        Ok(Self {
            tau,
            n: eigenvalues.len(),
            eigenvalues,
        })
    }

    pub fn of_matrix(tau: f64, h: &HermitianMatrix) -> Result<Self> {
        Self::new(tau, h.eigenvalues())
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// The spectrum of `-H`: negated and reversed.
    pub fn mirrored(&self) -> Self {
        Self {
            tau: self.tau,
            n: self.n,
            eigenvalues: self.eigenvalues.iter().rev().map(|x| -x).collect(),
        }
    }

    /// Writes rows `tau,n,j,xi` with `j` starting at 1.
    pub fn write_csv_rows<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (j, x) in self.eigenvalues.iter().enumerate() {
            writeln!(w, "{},{},{},{}", self.tau, self.n, j + 1, x)?;
        }
        Ok(())
    }
}

pub const SPECTRUM_CSV_HEADER: &str = "tau,n,j,xi";

/// Eigenvalues of a Hermitian matrix, descending.
pub fn eigenvalues(h: &HermitianMatrix) -> Vec<f64> {
    h.eigenvalues()
}

fn check_sizes(n_values: &[usize]) -> Result<()> {
    if n_values.is_empty() {
        return invalid("no corner sizes requested");
    }
    if n_values[0] == 0 {
        return invalid("corner sizes must be positive");
    }
    if n_values.windows(2).any(|w| w[0] >= w[1]) {
        return invalid("corner sizes must be strictly ascending");
    }
    Ok(())
}

/// Spectra of the leading corners of one snapshot `H(tau)`.
pub fn corner_spectra(path: &MatrixPath, tau: f64, n_values: &[usize]) -> Result<Vec<SpectrumFrame>> {
    check_sizes(n_values)?;
    let h = path.snapshot(tau, *n_values.last().unwrap())?;
    frames_of_snapshot(&h, tau, n_values)
}

/// Spectra of the requested leading corners of an already sampled matrix.
pub fn frames_of_snapshot(h: &HermitianMatrix, tau: f64, n_values: &[usize]) -> Result<Vec<SpectrumFrame>> {
    check_sizes(n_values)?;
    n_values
        .par_iter()
        .map(|&n| SpectrumFrame::of_matrix(tau, &h.leading_corner(n)?))
        .collect()
}

/// Outcome of an interlacing comparison.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct InterlacingReport {
    pub passed: bool,
    /// Largest amount by which an inequality fails (0 if none fails).
    pub worst_violation: f64,
    pub tolerance: f64,
}

/// Checks `upper_j >= lower_j >= upper_{j+1}` with tolerance `1e-8 * |H|`,
/// taking `|H|` as the spectral norm of the larger corner.
pub fn check_interlacing(lower: &SpectrumFrame, upper: &SpectrumFrame) -> Result<InterlacingReport> {
    if upper.n != lower.n + 1 {
        return Err(Error::SizeMismatch(format!(
            "interlacing needs sizes N and N+1, got {} and {}",
            lower.n, upper.n
        )));
    }
    if lower.tau != upper.tau {
        return invalid("interlacing frames must share the same time");
    }
    let norm = upper.eigenvalues[0]
        .abs()
        .max(upper.eigenvalues[upper.n - 1].abs());
    let tolerance = 1e-8 * norm.max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for (j, &x) in lower.eigenvalues.iter().enumerate() {
        worst = worst
            .max(x - upper.eigenvalues[j])
            .max(upper.eigenvalues[j + 1] - x);
    }
    Ok(InterlacingReport {
        passed: worst <= tolerance,
        worst_violation: worst,
        tolerance,
    })
}

/// Frames on a full `(tau, N)` grid, one snapshot per time.
#[derive(Clone, Debug)]
pub struct CornerGrid {
    tau_values: Vec<f64>,
    n_values: Vec<usize>,
    seed: u64,
    frames: Vec<Vec<SpectrumFrame>>,
}

impl CornerGrid {
    pub fn compute(path: &MatrixPath, tau_values: &[f64], n_values: &[usize]) -> Result<Self> {
        if tau_values.is_empty() {
            return invalid("no times requested");
        }
        if tau_values.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("times must be strictly ascending");
        }
        check_sizes(n_values)?;
        let frames = tau_values
            .par_iter()
            .map(|&tau| corner_spectra(path, tau, n_values))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            tau_values: tau_values.to_vec(),
            n_values: n_values.to_vec(),
            seed: path.seed(),
            frames,
        })
    }

    pub fn tau_values(&self) -> &[f64] {
        &self.tau_values
    }

    pub fn n_values(&self) -> &[usize] {
        &self.n_values
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Frame at the `i`-th time and `l`-th size.
    pub fn frame(&self, i: usize, l: usize) -> &SpectrumFrame {
        &self.frames[i][l]
    }

    /// Frame looked up by value.
    pub fn get(&self, tau: f64, n: usize) -> Option<&SpectrumFrame> {
        let i = self.tau_values.iter().position(|&t| t == tau)?;
        let l = self.n_values.iter().position(|&m| m == n)?;
        Some(&self.frames[i][l])
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{SPECTRUM_CSV_HEADER}")?;
        for row in &self.frames {
            for f in row {
                f.write_csv_rows(&mut w)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entries::{EntryProcessSpec, SymmetryClass};

    #[test]
    fn small_explicit_spectra() {
        let h = HermitianMatrix::from_real(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let ev = eigenvalues(&h);
        assert!((ev[0] - 1.0).abs() < 1e-15 && (ev[1] + 1.0).abs() < 1e-15);
        let j = HermitianMatrix::from_real(3, vec![0., 1., 1., 1., 0., 1., 1., 1., 0.]).unwrap();
        let ev = eigenvalues(&j);
        for (a, b) in ev.iter().zip([2.0, -1.0, -1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        let frames = frames_of_snapshot(&j, 0.0, &[2, 3]).unwrap();
        assert!((frames[0].eigenvalues()[0] - 1.0).abs() < 1e-15);
        assert!(check_interlacing(&frames[0], &frames[1]).unwrap().passed);
    }

    #[test]
    fn interlacing_rejects_size_mismatch() {
        let a = SpectrumFrame::new(0.0, vec![1.0, 0.0]).unwrap();
        let b = SpectrumFrame::new(0.0, vec![2.0, 1.5]).unwrap();
        assert!(matches!(check_interlacing(&a, &b), Err(Error::SizeMismatch(_))));
        let c = SpectrumFrame::new(0.0, vec![0.5, 0.2, 0.1]).unwrap();
        let r = check_interlacing(&a, &c).unwrap();
        assert!(!r.passed);
        assert!((r.worst_violation - 0.5).abs() < 1e-15);
    }

    #[test]
    fn frames_validate_order() {
        assert!(SpectrumFrame::new(0.0, vec![0.0, 1.0]).is_err());
        assert!(SpectrumFrame::new(0.0, vec![]).is_err());
        assert!(SpectrumFrame::new(0.0, vec![f64::NAN]).is_err());
    }

    #[test]
    fn single_corner_equals_snapshot_spectrum() {
        let p = MatrixPath::new(EntryProcessSpec::gaussian_ou(SymmetryClass::Complex), 4);
        let f = corner_spectra(&p, 0.1, &[7]).unwrap();
        assert_eq!(f[0].eigenvalues(), eigenvalues(&p.snapshot(0.1, 7).unwrap()).as_slice());
        assert!(corner_spectra(&p, 0.1, &[5, 3]).is_err());
    }

    #[test]
    fn grid_lookup_and_mirror() {
        let p = MatrixPath::new(EntryProcessSpec::unimodular(SymmetryClass::Real), 8);
        let g = CornerGrid::compute(&p, &[-0.5, 0.5], &[4, 5, 6]).unwrap();
        let f = g.get(0.5, 5).unwrap();
        assert_eq!(f, g.frame(1, 1));
        let neg = SpectrumFrame::of_matrix(0.5, &p.snapshot(0.5, 5).unwrap().negated()).unwrap();
        for (a, b) in neg.eigenvalues().iter().zip(f.mirrored().eigenvalues()) {
            assert!((a - b).abs() < 1e-12);
        }
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 2 * (4 + 5 + 6));
        assert!(text.starts_with("tau,n,j,xi\n-0.5,4,1,"));
    }
}

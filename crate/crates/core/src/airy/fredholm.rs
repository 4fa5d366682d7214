//! Nyström discretisation of Airy-type kernels and their Fredholm determinants.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::table::{TwMethod, TwTable, TW_GRID};
use super::{airy_kernel_unchecked, airy_pair, gaussian_identity};
use crate::entries::SymmetryClass;
use crate::error::{invalid, Error, Result};
use crate::quad::gauss_legendre;

/// Length of the integration interval beyond `max(cutoff, 0)`; the Airy kernel
/// is below `1e-30` past it.
const SPAN: f64 = 14.0;
const MIN_NODES: usize = 20;

/// Gauss-Legendre nodes on `[x_p, max(x_p, 0) + SPAN]` for each time point.
#[derive(Clone, Debug)]
pub struct KernelDiscretization {
    blocks: Vec<Block>,
}

#[derive(Clone, Debug)]
pub struct Block {
    pub time: f64,
    pub cutoff: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl KernelDiscretization {
    pub fn new(times: &[f64], cutoffs: &[f64], nodes: usize) -> Result<Self> {
        if times.len() != cutoffs.len() || times.is_empty() {
            return Err(Error::SizeMismatch("one cutoff per time point is required".into()));
        }
        if nodes < MIN_NODES {
            return invalid(format!("at least {MIN_NODES} nodes per block are required, got {nodes}"));
        }
        let blocks = times
            .iter()
            .zip(cutoffs)
            .map(|(&time, &cutoff)| {
                let (nodes, weights) = gauss_legendre(nodes, cutoff, cutoff.max(0.0) + SPAN)?;
                Ok(Block {
                    time,
                    cutoff,
                    nodes,
                    weights,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { blocks })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn size(&self) -> usize {
        self.blocks.iter().map(|b| b.nodes.len()).sum()
    }

    /// `(time, node, weight)` for every row of the discretised operator.
    fn points(&self) -> Vec<(f64, f64, f64)> {
        self.blocks
            .iter()
            .flat_map(|b| b.nodes.iter().zip(&b.weights).map(move |(&x, &w)| (b.time, x, w)))
            .collect()
    }

    /// `det(I - [w_i^{1/2} K(s_i, x_i; s_j, x_j) w_j^{1/2}])`.
    pub fn determinant(&self, kernel: impl Fn(f64, f64, f64, f64) -> f64 + Sync) -> f64 {
        let pts = self.points();
        let n = pts.len();
        let rows: Vec<Vec<f64>> = pts
            .par_iter()
            .enumerate()
            .map(|(i, &(si, xi, wi))| {
                pts.iter()
                    .enumerate()
                    .map(|(j, &(sj, xj, wj))| {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        delta - (wi * wj).sqrt() * kernel(si, xi, sj, xj)
                    })
                    .collect()
            })
            .collect();
        DMatrix::from_fn(n, n, |i, j| rows[i][j]).determinant()
    }
}

fn check_x(x: f64) -> Result<()> {
    let (lo, hi, _) = TW_GRID;
    if !(lo..=hi).contains(&x) {
        return Err(Error::OutOfRange { x, lo, hi });
    }
    Ok(())
}

/// `F_2(x) = det(I - K_Airy)` on `L^2(x, inf)` with `nodes` quadrature points.
/// Roundoff can leave the determinant marginally outside `[0, 1]`; it is clamped.
pub fn tw_cdf_fredholm(x: f64, nodes: usize) -> Result<f64> {
    check_x(x)?;
    let d = KernelDiscretization::new(&[0.0], &[x], nodes)?;
    Ok(d.determinant(|_, a, _, b| airy_kernel_unchecked(a, b)).clamp(0.0, 1.0))
}

/// [`tw_cdf_fredholm`] on the standard grid.
pub fn tw_table_fredholm(nodes: usize) -> Result<TwTable> {
    let grid = TwTable::standard_grid();
    let values = grid
        .par_iter()
        .map(|&x| tw_cdf_fredholm(x, nodes))
        .collect::<Result<Vec<_>>>()?;
    TwTable::new(SymmetryClass::Complex, TwMethod::Fredholm, grid, values)
}

/// Extended kernel on a fixed composite rule in `u`, with `Ai` tabulated once
/// per node.
struct TabulatedExtendedKernel {
    u: Vec<f64>,
    w: Vec<f64>,
    /// `ai[i][k] = Ai(x_i + u_k)` for the `i`-th discretisation point.
    ai: Vec<Vec<f64>>,
}

impl TabulatedExtendedKernel {
    fn new(points: &[(f64, f64, f64)]) -> Result<Self> {
        let lowest = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let upper = (18.0 - lowest).ceil();
        let (mut u, mut w) = (Vec::new(), Vec::new());
        let mut lo = 0.0;
        while lo < upper {
            let (nu, nw) = gauss_legendre(16, lo, lo + 1.0)?;
            u.extend(nu);
            w.extend(nw);
            lo += 1.0;
        }
        let ai = points
            .par_iter()
            .map(|&(_, x, _)| u.iter().map(|&v| airy_pair(x + v).0).collect())
            .collect();
        Ok(Self { u, w, ai })
    }

    fn eval(&self, i: usize, s1: f64, x: f64, j: usize, s2: f64, y: f64) -> f64 {
        let d = s1 - s2;
        let forward: f64 = (0..self.u.len())
            .map(|k| self.w[k] * (-self.u[k] * d).exp() * self.ai[i][k] * self.ai[j][k])
            .sum();
        if d >= 0.0 {
            forward
        } else {
            forward - gaussian_identity(x, y, -d)
        }
    }
}

fn joint_determinant(s: [f64; 2], x: [f64; 2], nodes: usize) -> Result<f64> {
    let disc = KernelDiscretization::new(&s, &x, nodes)?;
    let pts = disc.points();
    let table = TabulatedExtendedKernel::new(&pts)?;
    let n = pts.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (si, xi, wi) = pts[i];
            (0..n)
                .map(|j| {
                    let (sj, xj, wj) = pts[j];
                    let delta = if i == j { 1.0 } else { 0.0 };
                    delta - (wi * wj).sqrt() * table.eval(i, si, xi, j, sj, xj)
                })
                .collect()
        })
        .collect();
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]).determinant())
}

/// `P(A(s1) <= x1, A(s2) <= x2)` for the two-time Airy process, as the block
/// Fredholm determinant of the extended kernel. Equal times reduce to
/// `F_2(min(x1, x2))`. The value is computed with `nodes` and `2 nodes` points
/// per block; a disagreement above `1e-7` is reported as non-convergence.
pub fn joint_gap_probability(s: [f64; 2], x: [f64; 2], nodes: usize) -> Result<f64> {
    check_x(x[0])?;
    check_x(x[1])?;
    let gap = (s[0] - s[1]).abs();
    if !(gap <= 2.0) {
        return invalid(format!("joint gap probability needs |s1 - s2| <= 2, got {gap}"));
    }
    if gap == 0.0 {
        return tw_cdf_fredholm(x[0].min(x[1]), nodes);
    }
    let coarse = joint_determinant(s, x, nodes)?;
    let fine = joint_determinant(s, x, 2 * nodes)?;
    if (coarse - fine).abs() > 1e-7 {
        return Err(Error::Numerical(format!(
            "block determinant not converged: {coarse} with {nodes} nodes, {fine} with {}",
            2 * nodes
        )));
    }
    Ok(fine.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::airy::extended_airy_kernel;

    #[test]
    fn discretisation_invariants() {
        let d = KernelDiscretization::new(&[0.0, 1.0], &[-3.0, 2.0], 24).unwrap();
        assert_eq!(d.size(), 48);
        for b in d.blocks() {
            assert!(b.weights.iter().all(|&w| w > 0.0));
            assert!(b.nodes.iter().all(|&x| x > b.cutoff));
        }
        assert!(KernelDiscretization::new(&[0.0], &[0.0], 19).is_err());
    }

    #[test]
    fn fredholm_self_convergence() {
        for x in [-8.0, -4.0, -1.5, 0.0, 2.0, 5.0] {
            let a = tw_cdf_fredholm(x, 40).unwrap();
            let b = tw_cdf_fredholm(x, 80).unwrap();
            assert!((a - b).abs() < 1e-8, "x = {x}: {a} vs {b}");
        }
        assert!(tw_cdf_fredholm(6.0, 40).unwrap() >= 1.0 - 1e-6);
        assert!(tw_cdf_fredholm(-10.5, 40).is_err());
    }

    #[test]
    fn tabulated_kernel_matches_adaptive() {
        let pts = [(0.0, -6.0, 1.0), (0.7, -1.0, 1.0), (1.5, 2.5, 1.0)];
        let t = TabulatedExtendedKernel::new(&pts).unwrap();
        for (i, a) in pts.iter().enumerate() {
            for (j, b) in pts.iter().enumerate() {
                let direct = extended_airy_kernel(a.0, a.1, b.0, b.1).unwrap();
                let tab = t.eval(i, a.0, a.1, j, b.0, b.1);
                assert!((direct - tab).abs() < 1e-10, "{a:?} {b:?}: {direct} vs {tab}");
            }
        }
    }

    #[test]
    fn joint_gap_bounds_and_limits() {
        let f = |x| tw_cdf_fredholm(x, 60).unwrap();
        let p = joint_gap_probability([0.0, 0.0], [0.0, 0.0], 60).unwrap();
        assert!((p - f(0.0)).abs() < 1e-12);
        for &(ds, x1, x2) in &[(0.5, -1.0, -1.5), (1.0, -2.0, 0.5), (2.0, -1.0, -1.0)] {
            let p = joint_gap_probability([0.0, ds], [x1, x2], 40).unwrap();
            let (f1, f2) = (f(x1), f(x2));
            assert!(p >= (f1 + f2 - 1.0).max(0.0) - 1e-9 && p <= f1.min(f2) + 1e-9, "{ds} {x1} {x2}: {p}");
            // Order of the time arguments does not matter.
            let q = joint_gap_probability([ds, 0.0], [x2, x1], 40).unwrap();
            assert!((p - q).abs() < 1e-8);
        }
        let p = joint_gap_probability([0.0, 1.0], [-1.0, 6.0], 40).unwrap();
        assert!((p - f(-1.0)).abs() < 1e-4);
        assert!(joint_gap_probability([0.0, 2.5], [0.0, 0.0], 40).is_err());
    }
}

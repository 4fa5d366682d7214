//! Edge scaling `xi -> M^{1/6} (xi - 2 sqrt(N))` and the rescaled line ensemble.

use std::io::Write;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::spectra::{CornerGrid, SpectrumFrame};

/// The edge-scaling maps for a fixed large parameter `M`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScalingMap {
    m: u32,
}

impl ScalingMap {
    pub fn new(m: u32) -> Result<Self> {
        if m < 8 {
            return invalid(format!("scaling parameter M must be at least 8, got {m}"));
        }
        Ok(Self { m })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    fn mf(&self) -> f64 {
        self.m as f64
    }

    /// `tau(s) = s M^{-1/3}`.
    pub fn tau(&self, s: f64) -> f64 {
        s * self.mf().powf(-1.0 / 3.0)
    }

    /// `N(t) = M (1 + 2 t M^{-1/3})`, not rounded.
    pub fn n_real(&self, t: f64) -> f64 {
        self.mf() * (1.0 + 2.0 * t * self.mf().powf(-1.0 / 3.0))
    }

    /// `(tau(s), N(t))`.
    pub fn maps(&self, s: f64, t: f64) -> (f64, f64) {
        (self.tau(s), self.n_real(t))
    }

    pub fn s_of_tau(&self, tau: f64) -> f64 {
        tau * self.mf().cbrt()
    }

    pub fn t_of_n(&self, n: f64) -> f64 {
        (n / self.mf() - 1.0) * self.mf().cbrt() / 2.0
    }

    /// Spacing in `t` between consecutive integer corner sizes.
    pub fn t_step(&self) -> f64 {
        1.0 / (2.0 * self.mf().powf(2.0 / 3.0))
    }

    /// `M^{1/6} (xi - 2 sqrt(N))` for a single eigenvalue of an `N x N` corner.
    pub fn scale(&self, xi: f64, n: usize) -> f64 {
        self.mf().powf(1.0 / 6.0) * (xi - 2.0 * (n as f64).sqrt())
    }

    /// Rescaled spectrum, descending.
    pub fn scale_spectrum(&self, frame: &SpectrumFrame) -> Vec<f64> {
        frame
            .eigenvalues()
            .iter()
            .map(|&x| self.scale(x, frame.n()))
            .collect()
    }

    /// Rescaled spectrum of `-H`, i.e. the lower edge seen from above.
    pub fn scale_mirrored(&self, frame: &SpectrumFrame) -> Vec<f64> {
        self.scale_spectrum(&frame.mirrored())
    }
}

/// Top `j_max` rescaled lines on an `(s, t)` grid.
#[derive(Clone, Debug, Serialize)]
pub struct ScaledLineEnsemble {
    map: ScalingMap,
    j_max: usize,
    s_grid: Vec<f64>,
    t_grid: Vec<f64>,
    n_grid: Vec<usize>,
    /// `values[(i * t_len + l) * j_max + (j - 1)]`.
    values: Vec<f64>,
    mirror: Vec<f64>,
}

impl ScaledLineEnsemble {
    /// Rescales a computed corner grid. Corner sizes must be consecutive
    /// integers so that the `t` grid has uniform spacing.
    pub fn build(grid: &CornerGrid, map: ScalingMap, j_max: usize) -> Result<Self> {
        let n_grid = grid.n_values().to_vec();
        if n_grid.windows(2).any(|w| w[1] != w[0] + 1) {
            return invalid("corner sizes of a line ensemble must be consecutive integers");
        }
        if j_max == 0 || j_max > n_grid[0] {
            return invalid(format!(
                "j_max = {j_max} must lie in 1..={} (smallest corner)",
                n_grid[0]
            ));
        }
        let s_grid: Vec<f64> = grid.tau_values().iter().map(|&t| map.s_of_tau(t)).collect();
        let t_grid: Vec<f64> = n_grid.iter().map(|&n| map.t_of_n(n as f64)).collect();
        if t_grid
            .windows(2)
            .any(|w| ((w[1] - w[0]) - map.t_step()).abs() > 1e-9)
        {
            return Err(Error::Numerical("t grid spacing differs from 1/(2 M^(2/3))".into()));
        }
        let mut values = Vec::with_capacity(s_grid.len() * t_grid.len() * j_max);
        let mut mirror = Vec::with_capacity(values.capacity());
        for i in 0..s_grid.len() {
            for l in 0..t_grid.len() {
                let f = grid.frame(i, l);
                values.extend_from_slice(&map.scale_spectrum(f)[..j_max]);
                mirror.extend_from_slice(&map.scale_mirrored(f)[..j_max]);
            }
        }
        Ok(Self {
            map,
            j_max,
            s_grid,
            t_grid,
            n_grid,
            values,
            mirror,
        })
    }

    pub fn map(&self) -> ScalingMap {
        self.map
    }

    pub fn j_max(&self) -> usize {
        self.j_max
    }

    pub fn s_grid(&self) -> &[f64] {
        &self.s_grid
    }

    pub fn t_grid(&self) -> &[f64] {
        &self.t_grid
    }

    pub fn n_grid(&self) -> &[usize] {
        &self.n_grid
    }

    /// Stored value at grid node `(i, l)`.
    pub fn node(&self, j: usize, i: usize, l: usize) -> f64 {
        self.values[(i * self.t_grid.len() + l) * self.j_max + (j - 1)]
    }

    /// Stored mirrored value at grid node `(i, l)`.
    pub fn mirror_node(&self, j: usize, i: usize, l: usize) -> f64 {
        self.mirror[(i * self.t_grid.len() + l) * self.j_max + (j - 1)]
    }

    /// `lambda_j(s, t)`: nearest node in `s`, piecewise linear in `t`,
    /// constant beyond the grid.
    pub fn evaluate_line(&self, j: usize, s: f64, t: f64) -> Result<f64> {
        self.eval_with(j, s, t, &self.values)
    }

    /// Same as [`Self::evaluate_line`] for the lines of `-H`.
    pub fn evaluate_mirror_line(&self, j: usize, s: f64, t: f64) -> Result<f64> {
        self.eval_with(j, s, t, &self.mirror)
    }

    fn eval_with(&self, j: usize, s: f64, t: f64, data: &[f64]) -> Result<f64> {
        if j == 0 || j > self.j_max {
            return Err(Error::InvalidParameter(format!(
                "line index {j} outside 1..={}",
                self.j_max
            )));
        }
        if !s.is_finite() || !t.is_finite() {
            return invalid("query point must be finite");
        }
        let i = nearest(&self.s_grid, s);
        let tl = self.t_grid.len();
        let at = |l: usize| data[(i * tl + l) * self.j_max + (j - 1)];
        if t <= self.t_grid[0] {
            return Ok(at(0));
        }
        if t >= self.t_grid[tl - 1] {
            return Ok(at(tl - 1));
        }
        let l = self.t_grid.partition_point(|&x| x <= t) - 1;
        let (t0, t1) = (self.t_grid[l], self.t_grid[l + 1]);
        let w = (t - t0) / (t1 - t0);
        Ok((1.0 - w) * at(l) + w * at(l + 1))
    }

    /// Rows `M,s,t,j,lambda`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "M,s,t,j,lambda")?;
        for (i, s) in self.s_grid.iter().enumerate() {
            for (l, t) in self.t_grid.iter().enumerate() {
                for j in 1..=self.j_max {
                    writeln!(w, "{},{},{},{},{}", self.map.m(), s, t, j, self.node(j, i, l))?;
                }
            }
        }
        Ok(())
    }
}

fn nearest(grid: &[f64], x: f64) -> usize {
    let mut best = 0;
    for (i, &g) in grid.iter().enumerate() {
        if (g - x).abs() < (grid[best] - x).abs() {
            best = i;
        }
    }
    best
}

//! Exponentially weighted volumes of diagram polytopes.
//!
//! For a diagram with constraint matrix `C` (rows `c_p(e)`) the integral is
//! `I = int_{w > 0} exp(-sum_e a_e w_e) delta(C w - alpha) dw` with
//! `a_e = |t_{p+} - t_{p-}| + |s_{p+} - s_{p-}|`. The delta normalisation is
//! independent of any choice of coordinates on the polytope; the Euclidean
//! surface measure is obtained by multiplying with [`PolytopeProblem::gram_factor`].

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::DiagramSpec;
use crate::error::{invalid, Error, Result};
use crate::quad;
use crate::rng;
use crate::stats::Welford;

/// Largest polytope dimension accepted by the Monte Carlo route.
pub const MC_MAX_DIMENSION: usize = 12;

const MC_SHARDS: u64 = 32;
const DEFAULT_SEED: u64 = 0x706f_6c79;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntegrationMethod {
    /// Rejection sampling of the free coordinates in a bounding box.
    MonteCarlo,
    /// Exact integration over the edges of each path pair followed by nested
    /// adaptive quadrature over the shared sums.
    SimplexQuadrature,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IntegralEstimate {
    pub value: f64,
    pub error_estimate: f64,
}

/// A diagram together with right-hand sides and edge decay rates.
#[derive(Clone, Debug)]
pub struct PolytopeProblem {
    diagram: DiagramSpec,
    alpha: Vec<f64>,
    rates: Vec<f64>,
}

impl PolytopeProblem {
    pub fn new(diagram: &DiagramSpec, alpha: &[f64], s: &[f64], t: &[f64]) -> Result<Self> {
        diagram.validate()?;
        let k = diagram.k;
        if alpha.len() != k || s.len() != k || t.len() != k {
            return Err(Error::SizeMismatch(format!(
                "diagram has k = {k} paths; got {} alphas, {} s, {} t",
                alpha.len(),
                s.len(),
                t.len()
            )));
        }
        if alpha.iter().any(|a| !a.is_finite()) || s.iter().chain(t).any(|x| !x.is_finite()) {
            return invalid("polytope parameters must be finite");
        }
        if let Some(p) = alpha.iter().position(|&a| a <= 0.0) {
            return Err(Error::Infeasible(format!(
                "alpha_{} = {} leaves no positive solution",
                p + 1,
                alpha[p]
            )));
        }
        let rates = diagram
            .edges
            .iter()
            .map(|e| {
                let (a, b) = (e.p_minus - 1, e.p_plus - 1);
                (t[b] - t[a]).abs() + (s[b] - s[a]).abs()
            })
            .collect();
        Ok(Self {
            diagram: diagram.clone(),
            alpha: alpha.to_vec(),
            rates,
        })
    }

    /// `3s - 2k`.
    pub fn dimension(&self) -> usize {
        self.diagram.edges.len() - self.diagram.k
    }

    pub fn constraint_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.diagram.k)
            .map(|p| self.diagram.edges.iter().map(|e| e.cp[p] as f64).collect())
            .collect()
    }

    /// `sqrt(det(C C^T))`: ratio of Euclidean surface measure to the delta measure.
    pub fn gram_factor(&self) -> f64 {
        let c = self.constraint_matrix();
        let k = c.len();
        let g: Vec<Vec<f64>> = (0..k)
            .map(|i| (0..k).map(|j| c[i].iter().zip(&c[j]).map(|(a, b)| a * b).sum()).collect())
            .collect();
        determinant(&g).abs().sqrt()
    }

    pub fn integrate(&self, method: IntegrationMethod, budget: usize, seed: u64) -> Result<IntegralEstimate> {
        match method {
            IntegrationMethod::MonteCarlo => self.monte_carlo(budget, seed),
            IntegrationMethod::SimplexQuadrature => self.quadrature(),
        }
    }

    fn monte_carlo(&self, budget: usize, seed: u64) -> Result<IntegralEstimate> {
        let dim = self.dimension();
        if dim > MC_MAX_DIMENSION {
            return invalid(format!(
                "polytope dimension {dim} exceeds the Monte Carlo limit {MC_MAX_DIMENSION}"
            ));
        }
        if budget < MC_SHARDS as usize {
            return invalid(format!("Monte Carlo budget must be at least {MC_SHARDS} samples"));
        }
        let c = self.constraint_matrix();
        let (k, n_edges) = (c.len(), self.diagram.edges.len());
        let pivots = choose_pivots(&c)?;
        let free: Vec<usize> = (0..n_edges).filter(|e| !pivots.contains(e)).collect();
        let cp: Vec<Vec<f64>> = c.iter().map(|row| pivots.iter().map(|&e| row[e]).collect()).collect();
        let det = determinant(&cp);
        let inv = invert(&cp)?;
        let upper: Vec<f64> = free
            .iter()
            .map(|&e| {
                (0..k)
                    .filter(|&p| c[p][e] > 0.0)
                    .map(|p| self.alpha[p] / c[p][e])
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let box_volume: f64 = upper.iter().product();
        let per_shard = budget / MC_SHARDS as usize;
        let shards: Vec<(Welford, u64)> = (0..MC_SHARDS)
            .into_par_iter()
            .map(|sh| {
                let mut r = rng::stream(rng::derive_seed(seed, &[sh]));
                let n = per_shard + usize::from((sh as usize) < budget % MC_SHARDS as usize);
                let mut w = Welford::default();
                let mut accepted = 0u64;
                let mut wf = vec![0.0; free.len()];
                let mut rhs = vec![0.0; k];
                for _ in 0..n {
                    for (x, &u) in wf.iter_mut().zip(&upper) {
                        *x = u * r.random::<f64>();
                    }
                    for p in 0..k {
                        rhs[p] = self.alpha[p] - free.iter().zip(&wf).map(|(&e, x)| c[p][e] * x).sum::<f64>();
                    }
                    let mut ok = true;
                    let mut expo = free.iter().zip(&wf).map(|(&e, x)| self.rates[e] * x).sum::<f64>();
                    for (i, &e) in pivots.iter().enumerate() {
                        let wp: f64 = (0..k).map(|j| inv[i][j] * rhs[j]).sum();
                        if wp <= 0.0 {
                            ok = false;
                            break;
                        }
                        expo += self.rates[e] * wp;
                    }
                    if ok {
                        accepted += 1;
                        w.push((-expo).exp());
                    } else {
                        w.push(0.0);
                    }
                }
                (w, accepted)
            })
            .collect();
        let accepted: u64 = shards.iter().map(|s| s.1).sum();
        if accepted == 0 {
            return Err(Error::Infeasible(format!(
                "no positive solution found in {budget} samples"
            )));
        }
        let mut total = Welford::default();
        for (w, _) in &shards {
            total.merge(w);
        }
        let scale = box_volume / det.abs();
        Ok(IntegralEstimate {
            value: scale * total.mean(),
            error_estimate: scale * total.stderr(),
        })
    }

    fn quadrature(&self) -> Result<IntegralEstimate> {
        let k = self.diagram.k;
        // (p-, p+) -> (edge count, rate)
        let mut groups: BTreeMap<(usize, usize), (u32, f64)> = BTreeMap::new();
        for (e, rate) in self.diagram.edges.iter().zip(&self.rates) {
            let g = groups.entry((e.p_minus - 1, e.p_plus - 1)).or_insert((0, *rate));
            g.0 += 1;
        }
        for p in 0..k {
            if !groups.contains_key(&(p, p)) {
                return invalid(format!(
                    "simplex quadrature needs an edge traversed twice by path {}; use monte-carlo",
                    p + 1
                ));
            }
        }
        let shared: Vec<(usize, usize, u32, f64)> = groups
            .iter()
            .filter(|((a, b), _)| a != b)
            .map(|(&(a, b), &(m, r))| (a, b, m, r))
            .collect();
        let selfs: Vec<u32> = (0..k).map(|p| groups[&(p, p)].0).collect();
        let ctx = Nested {
            shared: &shared,
            selfs: &selfs,
        };
        let (value, error) = ctx.level(0, self.alpha.clone())?;
        let norm = 0.5f64.powi(k as i32);
        Ok(IntegralEstimate {
            value: norm * value,
            error_estimate: norm * error,
        })
    }
}

/// `sigma^{m-1} / (m-1)!`: volume of the simplex `{w in R_+^m : sum w = sigma}`.
fn simplex_volume(sigma: f64, m: u32) -> f64 {
    (1..m).fold(1.0, |acc, j| acc * sigma / j as f64)
}

struct Nested<'a> {
    shared: &'a [(usize, usize, u32, f64)],
    selfs: &'a [u32],
}

impl Nested<'_> {
    fn level(&self, i: usize, remaining: Vec<f64>) -> Result<(f64, f64)> {
        if i == self.shared.len() {
            let mut v = 1.0;
            for (p, &m) in self.selfs.iter().enumerate() {
                if remaining[p] <= 0.0 {
                    return Ok((0.0, 0.0));
                }
                v *= simplex_volume(0.5 * remaining[p], m);
            }
            return Ok((v, 0.0));
        }
        let (a, b, m, rate) = self.shared[i];
        let upper = remaining[a].min(remaining[b]);
        if upper <= 0.0 {
            return Ok((0.0, 0.0));
        }
        let r = quad::adaptive(
            |sigma| {
                let mut rem = remaining.clone();
                rem[a] -= sigma;
                rem[b] -= sigma;
                let inner = self.level(i + 1, rem)?.0;
                Ok(simplex_volume(sigma, m) * (-rate * sigma).exp() * inner)
            },
            0.0,
            upper,
            1e-300,
            1e-11,
        )?;
        Ok((r.value, r.error))
    }
}

/// Pivot columns for each row by Gaussian elimination, preferring the
/// largest remaining coefficient and then the lowest edge index.
fn choose_pivots(c: &[Vec<f64>]) -> Result<Vec<usize>> {
    let mut a: Vec<Vec<f64>> = c.to_vec();
    let (k, n) = (a.len(), a[0].len());
    let mut pivots = Vec::with_capacity(k);
    for r in 0..k {
        let mut best: Option<usize> = None;
        for e in 0..n {
            if pivots.contains(&e) || a[r][e].abs() < 1e-12 {
                continue;
            }
            if best.is_none_or(|b| a[r][e].abs() > a[r][b].abs()) {
                best = Some(e);
            }
        }
        let Some(col) = best else {
            return Err(Error::Infeasible("constraint rows are linearly dependent".into()));
        };
        for r2 in r + 1..k {
            let f = a[r2][col] / a[r][col];
            if f != 0.0 {
                for e in 0..n {
                    a[r2][e] -= f * a[r][e];
                }
            }
        }
        pivots.push(col);
    }
    Ok(pivots)
}

fn to_matrix(a: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(a.len(), a[0].len(), |i, j| a[i][j])
}

fn determinant(a: &[Vec<f64>]) -> f64 {
    to_matrix(a).determinant()
}

fn invert(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let inv = to_matrix(a)
        .try_inverse()
        .ok_or_else(|| Error::Infeasible("singular pivot block".into()))?;
    Ok((0..a.len()).map(|i| inv.row(i).iter().copied().collect()).collect())
}

/// `I^D(alpha, s, t)` with the default Monte Carlo seed.
pub fn integral_i(
    diagram: &DiagramSpec,
    alpha: &[f64],
    s: &[f64],
    t: &[f64],
    method: IntegrationMethod,
    budget: usize,
) -> Result<IntegralEstimate> {
    PolytopeProblem::new(diagram, alpha, s, t)?.integrate(method, budget, DEFAULT_SEED)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagrams::{builtin_diagram, builtin_diagrams, DiagramEdge};

    const MC: IntegrationMethod = IntegrationMethod::MonteCarlo;
    const QD: IntegrationMethod = IntegrationMethod::SimplexQuadrature;

    #[test]
    fn single_path_closed_forms() {
        let d = builtin_diagram("fig1-left").unwrap();
        for alpha in [0.5, 1.0, 3.0] {
            let q = integral_i(&d, &[alpha], &[0.0], &[0.0], QD, 0).unwrap();
            assert!((q.value - alpha / 4.0).abs() < 1e-14);
            let mc = integral_i(&d, &[alpha], &[0.0], &[0.0], MC, 10_000).unwrap();
            assert!((mc.value - alpha / 4.0).abs() < 0.01 * alpha / 4.0);
            let p = PolytopeProblem::new(&d, &[alpha], &[0.0], &[0.0]).unwrap();
            // The segment 2 w1 + 2 w2 = alpha has Euclidean length alpha / sqrt(2).
            assert!((q.value * p.gram_factor() - alpha / 2f64.sqrt()).abs() < 1e-13);
        }
        // Five edges, all on one path: (1/2) (alpha/2)^4 / 4!.
        let d = builtin_diagram("fig1-right").unwrap();
        let q = integral_i(&d, &[2.0], &[0.0], &[0.0], QD, 0).unwrap();
        assert!((q.value - 0.5 / 24.0).abs() < 1e-14);
        let mc = integral_i(&d, &[2.0], &[0.0], &[0.0], MC, 400_000).unwrap();
        assert!((mc.value - q.value).abs() < 4.0 * mc.error_estimate);
    }

    #[test]
    fn two_path_quadrature_matches_closed_form_and_mc() {
        let d = builtin_diagram("fig2-left").unwrap();
        let (a1, a2) = (1.0, 1.5);
        // (1/4) int_0^{min} sigma e^{-r sigma} d sigma, r = |dt| + |ds|.
        let r: f64 = 0.7 + 0.2;
        let u: f64 = a1;
        let exact = 0.25 * (1.0 - (1.0 + r * u) * (-r * u).exp()) / (r * r);
        let q = integral_i(&d, &[a1, a2], &[0.0, 0.2], &[0.1, 0.8], QD, 0).unwrap();
        assert!((q.value - exact).abs() < 1e-12, "{} vs {exact}", q.value);
        let mc = integral_i(&d, &[a1, a2], &[0.0, 0.2], &[0.1, 0.8], MC, 400_000).unwrap();
        assert!((mc.value - exact).abs() < 4.0 * mc.error_estimate, "{mc:?} vs {exact}");
    }

    #[test]
    fn translation_invariance_and_monotonicity() {
        for d in builtin_diagrams().into_iter().filter(|d| d.k == 2) {
            let base = integral_i(&d, &[1.0, 1.2], &[0.0, 0.5], &[0.3, -0.2], QD, 0).unwrap();
            let shifted = integral_i(&d, &[1.0, 1.2], &[2.0, 2.5], &[-0.7, -1.2], QD, 0).unwrap();
            assert!((base.value - shifted.value).abs() < 1e-12);
            let swapped = integral_i(&d, &[1.0, 1.2], &[0.0, -0.5], &[0.3, 0.8], QD, 0).unwrap();
            assert!((base.value - swapped.value).abs() < 1e-12);
            let far = integral_i(&d, &[1.0, 1.2], &[0.0, 1.5], &[0.3, -0.2], QD, 0).unwrap();
            assert!(far.value <= base.value + 1e-15);
            let mc1 = integral_i(&d, &[1.0, 1.2], &[0.0, 0.5], &[0.3, -0.2], MC, 50_000).unwrap();
            let mc2 = integral_i(&d, &[1.0, 1.2], &[1.0, 1.5], &[0.3, -0.2], MC, 50_000).unwrap();
            assert!((mc1.value - mc2.value).abs() < 1e-12);
        }
    }

    #[test]
    fn three_path_quadrature_agrees_with_mc() {
        let e = |cp: Vec<u8>, pm, pp| DiagramEdge {
            cp,
            p_minus: pm,
            p_plus: pp,
            orientable: true,
            ends: None,
            length: None,
        };
        let d = DiagramSpec {
            name: "triangle-of-paths".into(),
            k: 3,
            s: 3,
            edges: vec![
                e(vec![2, 0, 0], 1, 1),
                e(vec![0, 2, 0], 2, 2),
                e(vec![0, 0, 2], 3, 3),
                e(vec![1, 1, 0], 1, 2),
                e(vec![0, 1, 1], 2, 3),
                e(vec![1, 0, 1], 1, 3),
            ],
            orientable: true,
        };
        let args = ([1.0, 0.8, 1.3], [0.0, 0.4, -0.3], [0.2, 0.0, 0.5]);
        let q = integral_i(&d, &args.0, &args.1, &args.2, QD, 0).unwrap();
        let mc = integral_i(&d, &args.0, &args.1, &args.2, MC, 1_000_000).unwrap();
        assert!((q.value - mc.value).abs() < 4.0 * mc.error_estimate, "{q:?} vs {mc:?}");
    }

    #[test]
    fn infeasible_and_unsupported_inputs() {
        let d = builtin_diagram("fig1-left").unwrap();
        assert!(matches!(integral_i(&d, &[-1.0], &[0.0], &[0.0], MC, 1000), Err(Error::Infeasible(_))));
        assert!(integral_i(&d, &[1.0, 1.0], &[0.0], &[0.0], MC, 1000).is_err());
        let e = |cp: Vec<u8>| DiagramEdge {
            cp,
            p_minus: 1,
            p_plus: 2,
            orientable: true,
            ends: None,
            length: None,
        };
        // Every edge shared: forces alpha_1 = alpha_2 and has no self edge.
        let d = DiagramSpec {
            name: "shared".into(),
            k: 2,
            s: 2,
            edges: vec![e(vec![1, 1]), e(vec![1, 1]), e(vec![1, 1]), e(vec![1, 1])],
            orientable: true,
        };
        assert!(matches!(integral_i(&d, &[1.0, 2.0], &[0.0; 2], &[0.0; 2], MC, 1000), Err(Error::Infeasible(_))));
        assert!(integral_i(&d, &[1.0, 1.0], &[0.0; 2], &[0.0; 2], QD, 0).is_err());
    }
}

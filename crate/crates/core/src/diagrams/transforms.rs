//! Sums over diagrams, the Gaussian-weighted transform and the subset recursion
//! linking the joint Laplace functional to its sharp part.

use serde::{Deserialize, Serialize};

use super::polytope::{integral_i, IntegralEstimate, IntegrationMethod};
use super::DiagramSpec;
use crate::entries::SymmetryClass;
use crate::error::{invalid, Error, Result};
use crate::quad::gauss_legendre;

/// Upper cut-off of the `xi` integrals; the weight is below `e^{-56}` beyond it.
const XI_MAX: f64 = 7.5;

/// `psi#(alpha, s, t)` as a sum of `integral_i` over `diagrams`. For the complex
/// class only orientable diagrams contribute.
pub fn psi_sharp(
    diagrams: &[DiagramSpec],
    beta: SymmetryClass,
    alpha: &[f64],
    s: &[f64],
    t: &[f64],
    method: IntegrationMethod,
    budget: usize,
) -> Result<IntegralEstimate> {
    let mut value = 0.0;
    let mut var = 0.0;
    for d in diagrams {
        if d.k != alpha.len() {
            return Err(Error::SizeMismatch(format!(
                "diagram {} has k = {} but {} alphas were given",
                d.name,
                d.k,
                alpha.len()
            )));
        }
        if beta == SymmetryClass::Complex && !d.orientable {
            continue;
        }
        let r = integral_i(d, alpha, s, t, method, budget)?;
        value += r.value;
        var += r.error_estimate * r.error_estimate;
    }
    Ok(IntegralEstimate {
        value,
        error_estimate: var.sqrt(),
    })
}

/// `phi#(alpha, s, t) = int prod_p 2 xi_p / sqrt(pi alpha_p) e^{-xi_p^2}
/// psi#(2 sqrt(alpha) xi, s, t) d xi` on a tensor Gauss-Legendre grid with
/// `nodes` points per dimension. `evaluator` receives `(x, s, t)`.
pub fn phi_sharp(
    evaluator: impl Fn(&[f64], &[f64], &[f64]) -> Result<f64>,
    alpha: &[f64],
    s: &[f64],
    t: &[f64],
    nodes: usize,
) -> Result<f64> {
    let k = alpha.len();
    if k == 0 || k > 3 {
        return invalid(format!("phi_sharp supports 1 <= k <= 3 paths, got {k}"));
    }
    if s.len() != k || t.len() != k {
        return Err(Error::SizeMismatch("alpha, s and t must have equal length".into()));
    }
    if alpha.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
        return invalid("alpha must be positive and finite");
    }
    let (xi, w) = gauss_legendre(nodes, 0.0, XI_MAX)?;
    let weights: Vec<Vec<f64>> = alpha
        .iter()
        .map(|&a| {
            xi.iter()
                .zip(&w)
                .map(|(&x, &wt)| wt * 2.0 * x / (std::f64::consts::PI * a).sqrt() * (-x * x).exp())
                .collect()
        })
        .collect();
    let mut idx = vec![0usize; k];
    let mut arg = vec![0.0; k];
    let mut total = 0.0;
    loop {
        let mut wt = 1.0;
        for p in 0..k {
            wt *= weights[p][idx[p]];
            arg[p] = 2.0 * alpha[p].sqrt() * xi[idx[p]];
        }
        total += wt * evaluator(&arg, s, t)?;
        let mut p = 0;
        loop {
            if p == k {
                return Ok(total);
            }
            idx[p] += 1;
            if idx[p] < nodes {
                break;
            }
            idx[p] = 0;
            p += 1;
        }
    }
}

/// Values indexed by subsets of `{1, ..., k}`; bit `p - 1` of the index marks path `p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsetTable {
    pub k: usize,
    pub values: Vec<f64>,
}

impl SubsetTable {
    pub fn new(k: usize, values: Vec<f64>) -> Result<Self> {
        if k > 16 {
            return invalid(format!("subset tables support k <= 16, got {k}"));
        }
        if values.len() != 1 << k {
            return Err(Error::SizeMismatch(format!(
                "a table over {k} paths needs {} values, got {}",
                1usize << k,
                values.len()
            )));
        }
        Ok(Self { k, values })
    }

    pub fn get(&self, mask: usize) -> f64 {
        self.values[mask]
    }

    fn full(&self) -> usize {
        (1 << self.k) - 1
    }
}

/// Proper non-empty subsets `I` of `mask` together with `mask \ I`, each
/// unordered split produced twice.
fn splits(mask: usize) -> impl Iterator<Item = (usize, usize)> {
    let mut sub = mask;
    std::iter::from_fn(move || {
        sub = sub.wrapping_sub(1) & mask;
        (sub != 0).then_some((sub, mask & !sub))
    })
}

/// Recovers `psi` from `psi#` through
/// `psi(S) = (psi#(S) - sum_{0 < I < S} psi(I) psi(S \ I)) / 2` with `psi(0) = 1`.
pub fn psi_from_sharp(sharp: &SubsetTable) -> Result<SubsetTable> {
    if sharp.values[0] != 1.0 {
        return invalid(format!(
            "the sharp table must equal 1 on the empty set, got {}",
            sharp.values[0]
        ));
    }
    let mut psi = vec![0.0; sharp.values.len()];
    psi[0] = 1.0;
    for mask in 1..=sharp.full() {
        let cross: f64 = splits(mask).map(|(a, b)| psi[a] * psi[b]).sum();
        psi[mask] = 0.5 * (sharp.values[mask] - cross);
    }
    SubsetTable::new(sharp.k, psi)
}

/// Inverse of [`psi_from_sharp`]: `psi#(S) = sum_{I subset S} psi(I) psi(S \ I)`.
pub fn sharp_from_psi(psi: &SubsetTable) -> Result<SubsetTable> {
    if psi.values[0] != 1.0 {
        return invalid(format!("psi must equal 1 on the empty set, got {}", psi.values[0]));
    }
    let mut sharp = vec![0.0; psi.values.len()];
    sharp[0] = 1.0;
    for mask in 1..=psi.full() {
        sharp[mask] = 2.0 * psi.values[mask] + splits(mask).map(|(a, b)| psi.values[a] * psi.values[b]).sum::<f64>();
    }
    SubsetTable::new(psi.k, sharp)
}

//! Hastings-McLeod solution of `q'' = x q + 2 q^3` and the Tracy-Widom
//! distributions built from it.

use super::airy_pair;
use super::table::{TwMethod, TwTable};
use crate::entries::SymmetryClass;
use crate::error::{invalid, Error, Result};
use crate::quad;

/// Starting point of the backward integration.
pub const X0: f64 = 8.0;
const TOLERANCE: f64 = 1e-12;
const BLOW_UP: f64 = 1e6;

/// State `(q, q', R, S, J)` with `R = int_x^inf q^2`, `S = int_x^inf (t - x) q^2`
/// and `J = int_x^inf q`.
type State = [f64; 5];

fn rhs(x: f64, y: &State) -> State {
    let q = y[0];
    [y[1], x * q + 2.0 * q * q * q, -q * q, -y[2], -q]
}

/// Values of the solution and its integrals on a grid.
#[derive(Clone, Debug)]
pub struct PainleveSolution {
    pub x: Vec<f64>,
    pub q: Vec<f64>,
    pub q_prime: Vec<f64>,
    /// `int_x^inf (t - x) q(t)^2 dt`, so that `F_2 = exp(-s)`.
    pub s: Vec<f64>,
    /// `int_x^inf q(t) dt`.
    pub j: Vec<f64>,
}

impl PainleveSolution {
    pub fn f2(&self, i: usize) -> f64 {
        (-self.s[i]).exp()
    }

    pub fn f1(&self, i: usize) -> f64 {
        (-0.5 * self.s[i] - 0.5 * self.j[i]).exp()
    }
}

fn initial_state() -> Result<State> {
    let (q, qp) = airy_pair(X0);
    // Beyond X0 the solution equals Ai up to a relative O(Ai^2) correction.
    let tail = |f: &dyn Fn(f64) -> f64| -> Result<f64> {
        let mut total = 0.0;
        let mut lo = X0;
        while lo < 40.0 {
            total += quad::adaptive(|t| Ok(f(t)), lo, lo + 2.0, 1e-300, 1e-14)?.value;
            lo += 2.0;
        }
        Ok(total)
    };
    let r = qp * qp - X0 * q * q;
    let s = tail(&|t| (t - X0) * airy_pair(t).0.powi(2))?;
    let j = tail(&|t| airy_pair(t).0)?;
    Ok([q, qp, r, s, j])
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// One trial step of size `h`; returns the fifth-order state and the error norm.
fn dp_step(x: f64, y: &State, h: f64) -> (State, f64) {
    let mut k = [[0.0; 5]; 7];
    for stage in 0..7 {
        let mut ys = *y;
        for (prev, a) in A[stage].iter().enumerate().take(stage) {
            for d in 0..5 {
                ys[d] += h * a * k[prev][d];
            }
        }
        k[stage] = rhs(x + C[stage] * h, &ys);
    }
    let mut y5 = *y;
    let mut err: f64 = 0.0;
    for d in 0..5 {
        let (mut s5, mut s4) = (0.0, 0.0);
        for stage in 0..7 {
            s5 += B5[stage] * k[stage][d];
            s4 += B4[stage] * k[stage][d];
        }
        y5[d] += h * s5;
        let scale = TOLERANCE * y[d].abs().max(y5[d].abs()) + 1e-300;
        err = err.max((h * (s5 - s4)).abs() / scale);
    }
    (y5, err)
}

/// Integrates from `X0` down to every point of `grid` (each `<= X0`).
pub fn hastings_mcleod(grid: &[f64]) -> Result<PainleveSolution> {
    if grid.iter().any(|&x| !(x <= X0) || x < -12.0) {
        return invalid(format!("grid points must lie in [-12, {X0}]"));
    }
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[b].total_cmp(&grid[a]));
    let mut out = vec![[0.0; 5]; grid.len()];
    let mut x = X0;
    let mut y = initial_state()?;
    let mut h: f64 = -0.01;
    for &idx in &order {
        let target = grid[idx];
        while x > target {
            let step = h.max(target - x);
            let (trial, err) = dp_step(x, &y, step);
            if err <= 1.0 {
                x = if step == target - x { target } else { x + step };
                y = trial;
                if y.iter().any(|v| !v.is_finite()) || y[0].abs() > BLOW_UP {
                    return Err(Error::Numerical(format!(
                        "Painleve solution blew up at x = {x}; the initial condition has drifted"
                    )));
                }
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (step * factor).max(-0.5);
            if h.abs() < 1e-12 {
                return Err(Error::Numerical(format!("step size underflow at x = {x}")));
            }
        }
        out[idx] = y;
    }
    Ok(PainleveSolution {
        x: grid.to_vec(),
        q: out.iter().map(|s| s[0]).collect(),
        q_prime: out.iter().map(|s| s[1]).collect(),
        s: out.iter().map(|s| s[3]).collect(),
        j: out.iter().map(|s| s[4]).collect(),
    })
}

/// `F_beta` on an ascending grid within `[-12, 8]`.
pub fn tw_cdf_painleve(beta: SymmetryClass, x_grid: &[f64]) -> Result<TwTable> {
    if !x_grid.windows(2).all(|w| w[0] < w[1]) {
        return invalid("grid must be strictly ascending");
    }
    let sol = hastings_mcleod(x_grid)?;
    let values = (0..x_grid.len())
        .map(|i| match beta {
            SymmetryClass::Real => sol.f1(i),
            SymmetryClass::Complex => sol.f2(i),
        })
        .collect();
    TwTable::new(beta, TwMethod::Painleve, x_grid.to_vec(), values)
}

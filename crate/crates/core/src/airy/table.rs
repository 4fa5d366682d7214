//! Tabulated Tracy-Widom distribution functions.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::entries::SymmetryClass;
use crate::error::{invalid, Error, Result};

pub const TW_CSV_HEADER: &str = "beta,x,F";

/// Default table range and spacing.
pub const TW_GRID: (f64, f64, f64) = (-10.0, 6.0, 0.05);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TwMethod {
    Fredholm,
    Painleve,
}

/// `F_beta` on an ascending grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TwTable {
    beta: SymmetryClass,
    method: TwMethod,
    x: Vec<f64>,
    values: Vec<f64>,
}

impl TwTable {
    pub fn new(beta: SymmetryClass, method: TwMethod, x: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if x.len() != values.len() || x.len() < 2 {
            return Err(Error::SizeMismatch(format!(
                "table needs matching grid and values of length >= 2, got {} and {}",
                x.len(),
                values.len()
            )));
        }
        if !x.windows(2).all(|w| w[0] < w[1]) {
            return invalid("table grid must be strictly ascending");
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite table value".into()));
        }
        Ok(Self {
            beta,
            method,
            x,
            values,
        })
    }

    /// `-10, -9.95, ..., 6`.
    pub fn standard_grid() -> Vec<f64> {
        let (lo, hi, h) = TW_GRID;
        let n = ((hi - lo) / h).round() as usize;
        (0..=n).map(|i| lo + h * i as f64).collect()
    }

    pub fn beta(&self) -> SymmetryClass {
        self.beta
    }

    pub fn method(&self) -> TwMethod {
        self.method
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Names of the violated table invariants (empty when all hold): values in
    /// `[0, 1]`, non-decreasing, `F(6) > 1 - 1e-6`, spacing at most `0.05`
    /// and coverage of `[-10, 6]`.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.values.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            out.push("values outside [0, 1]".to_string());
        }
        if let Some(i) = self.values.windows(2).position(|w| w[1] < w[0]) {
            out.push(format!("decreasing at x = {}", self.x[i + 1]));
        }
        let (lo, hi, h) = TW_GRID;
        if self.x[0] > lo + 1e-9 || *self.x.last().unwrap() < hi - 1e-9 {
            out.push(format!("grid does not cover [{lo}, {hi}]"));
        }
        if self.x.windows(2).any(|w| w[1] - w[0] > h + 1e-9) {
            out.push(format!("grid spacing exceeds {h}"));
        }
        if self.cdf(hi) <= 1.0 - 1e-6 {
            out.push(format!("F({hi}) = {} is not above 1 - 1e-6", self.cdf(hi)));
        }
        out
    }

    /// Linear interpolation, constant beyond the grid ends.
    pub fn cdf(&self, x: f64) -> f64 {
        let n = self.x.len();
        if x <= self.x[0] {
            return self.values[0];
        }
        if x >= self.x[n - 1] {
            return self.values[n - 1];
        }
        let i = self.x.partition_point(|&g| g <= x) - 1;
        let w = (x - self.x[i]) / (self.x[i + 1] - self.x[i]);
        self.values[i] + w * (self.values[i + 1] - self.values[i])
    }

    /// Mean and variance from `E g(X) = g(x_0) + int g'(x) (1 - F(x)) dx` on the
    /// grid, ignoring mass below the first point.
    pub fn moments(&self) -> (f64, f64) {
        let x0 = self.x[0];
        let (mut m1, mut m2) = (x0, x0 * x0);
        for i in 0..self.x.len() - 1 {
            let h = self.x[i + 1] - self.x[i];
            let (a, b) = (1.0 - self.values[i], 1.0 - self.values[i + 1]);
            m1 += 0.5 * h * (a + b);
            m2 += 0.5 * h * (2.0 * self.x[i] * a + 2.0 * self.x[i + 1] * b);
        }
        (m1, m2 - m1 * m1)
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "{TW_CSV_HEADER}")?;
        for (x, f) in self.x.iter().zip(&self.values) {
            writeln!(w, "{},{},{:.15e}", self.beta.beta(), x, f)?;
        }
        Ok(())
    }

    pub fn read_csv(r: impl BufRead, method: TwMethod) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim() != TW_CSV_HEADER {
            return invalid(format!("expected header `{TW_CSV_HEADER}`, got `{header}`"));
        }
        let (mut beta, mut x, mut values) = (None, Vec::new(), Vec::new());
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::InvalidParameter(format!("row {}: {e}", i + 2)))
            };
            if fields.len() != 3 {
                return invalid(format!("row {} has {} fields", i + 2, fields.len()));
            }
            let b = SymmetryClass::from_beta(parse(fields[0])? as u8)?;
            if *beta.get_or_insert(b) != b {
                return invalid("table mixes beta values");
            }
            x.push(parse(fields[1])?);
            values.push(parse(fields[2])?);
        }
        let Some(beta) = beta else {
            return invalid("empty table");
        };
        Self::new(beta, method, x, values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logistic() -> TwTable {
        let x = TwTable::standard_grid();
        let f = x.iter().map(|v| 1.0 / (1.0 + (-3.0 * v).exp())).collect();
        TwTable::new(SymmetryClass::Complex, TwMethod::Painleve, x, f).unwrap()
    }

    #[test]
    fn grid_and_interpolation() {
        let g = TwTable::standard_grid();
        assert_eq!(g.len(), 321);
        assert!((g[320] - 6.0).abs() < 1e-12);
        let t = logistic();
        assert!(t.invariant_violations().is_empty(), "{:?}", t.invariant_violations());
        assert!((t.cdf(0.0) - 0.5).abs() < 1e-12);
        assert!((t.cdf(0.025) - 0.5 * (t.values()[200] + t.values()[201])).abs() < 1e-15);
        assert_eq!(t.cdf(-20.0), t.values()[0]);
        let (m, v) = t.moments();
        assert!(m.abs() < 1e-6);
        let exact = std::f64::consts::PI.powi(2) / 27.0;
        assert!((v - exact).abs() < 1e-3, "{v} vs {exact}");
    }

    #[test]
    fn invariants_detect_violations() {
        let mut t = logistic();
        t.values[10] = 0.9;
        assert!(t.invariant_violations().iter().any(|v| v.starts_with("decreasing")));
        let x = vec![-10.0, 0.0, 6.0];
        let t = TwTable::new(SymmetryClass::Real, TwMethod::Fredholm, x, vec![0.0, 0.5, 0.99]).unwrap();
        let v = t.invariant_violations();
        assert!(v.iter().any(|s| s.contains("spacing")));
        assert!(v.iter().any(|s| s.contains("1 - 1e-6")));
        assert!(TwTable::new(SymmetryClass::Real, TwMethod::Fredholm, vec![1.0, 0.0], vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let t = logistic();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"beta,x,F\n2,-10,"));
        let back = TwTable::read_csv(&buf[..], TwMethod::Painleve).unwrap();
        assert_eq!(back.x(), t.x());
        for (a, b) in back.values().iter().zip(t.values()) {
            assert!((a - b).abs() <= 1e-14 * b.abs());
        }
        assert!(TwTable::read_csv(&b"x,F\n"[..], TwMethod::Painleve).is_err());
        assert!(TwTable::read_csv(&b"beta,x,F\n1,0,0.5\n2,1,0.6\n"[..], TwMethod::Painleve).is_err());
    }
}

//! Airy function, Airy kernels, Fredholm determinants and Tracy-Widom tables.

mod fredholm;
mod painleve;
mod table;

pub use fredholm::{joint_gap_probability, tw_cdf_fredholm, tw_table_fredholm, KernelDiscretization};
pub use painleve::{hastings_mcleod, tw_cdf_painleve, PainleveSolution};
pub use table::{TwMethod, TwTable, TW_CSV_HEADER};

use std::f64::consts::{FRAC_PI_4, PI};
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::quad;

/// Range accepted by the public Airy evaluators.
pub const AIRY_RANGE: (f64, f64) = (-15.0, 10.0);

const AI0: f64 = 0.355_028_053_887_817_239;
const AIP0: f64 = -0.258_819_403_792_806_798;

/// Below this the oscillatory asymptotic expansion is used.
const NEGATIVE_SWITCH: f64 = -7.0;
/// Above this the Laplace-type integral representation is used.
const POSITIVE_SWITCH: f64 = 1.5;

fn check_range(x: f64) -> Result<()> {
    if !(AIRY_RANGE.0..=AIRY_RANGE.1).contains(&x) {
        return Err(Error::OutOfRange {
            x,
            lo: AIRY_RANGE.0,
            hi: AIRY_RANGE.1,
        });
    }
    Ok(())
}

/// `Ai(x)` for `x` in [`AIRY_RANGE`], absolute error below `1e-10`.
pub fn airy_ai(x: f64) -> Result<f64> {
    check_range(x)?;
    Ok(airy_pair(x).0)
}

/// `Ai'(x)` for `x` in [`AIRY_RANGE`].
pub fn airy_ai_prime(x: f64) -> Result<f64> {
    check_range(x)?;
    Ok(airy_pair(x).1)
}

/// `(Ai(x), Ai'(x))` without range checks. Accurate for any `x >= -30`;
/// relative accuracy is kept on the decaying side.
pub(crate) fn airy_pair(x: f64) -> (f64, f64) {
    if x < NEGATIVE_SWITCH {
        oscillatory_asymptotics(-x)
    } else if x <= POSITIVE_SWITCH {
        maclaurin(x)
    } else {
        laplace_integral(x)
    }
}

fn maclaurin(x: f64) -> (f64, f64) {
    // Ai = Ai(0) f + Ai'(0) g with f = 1 + x^3/3! + 1*4 x^6/6! + ..., g = x + 2 x^4/4! + ...
    let x3 = x * x * x;
    let (mut a, mut b) = (1.0, x);
    let (mut da, mut db) = (0.0, 1.0);
    let (mut f, mut g, mut fp, mut gp) = (a, b, da, db);
    for k in 1..200 {
        let k3 = 3.0 * k as f64;
        a *= x3 / ((k3 - 1.0) * k3);
        b *= x3 / (k3 * (k3 + 1.0));
        da = if k == 1 { 0.5 * x * x } else { da * x3 / ((k3 - 3.0) * (k3 - 1.0)) };
        db *= x3 / ((k3 - 2.0) * k3);
        f += a;
        g += b;
        fp += da;
        gp += db;
        let tiny = |t: f64, s: f64| t.abs() <= 1e-17 * s.abs();
        if tiny(a, f) && tiny(b, g) && tiny(da, fp) && tiny(db, gp) {
            break;
        }
    }
    (AI0 * f + AIP0 * g, AI0 * fp + AIP0 * gp)
}

fn laplace_nodes() -> &'static (Vec<f64>, Vec<f64>) {
    static NODES: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    NODES.get_or_init(|| quad::gauss_legendre(160, 0.0, 1.0).expect("fixed rule"))
}

/// `Ai(x) = e^{-z} / pi * int_0^inf exp(-sqrt(x) t^2) cos(t^3 / 3) dt`, `z = 2/3 x^{3/2}`.
fn laplace_integral(x: f64) -> (f64, f64) {
    let r = x.sqrt();
    let zeta = 2.0 / 3.0 * x * r;
    let upper = (42.0 / r).sqrt();
    let (nodes, weights) = laplace_nodes();
    let (mut i0, mut i2) = (0.0, 0.0);
    for (u, w) in nodes.iter().zip(weights) {
        let t = u * upper;
        let v = w * (-r * t * t).exp() * (t * t * t / 3.0).cos();
        i0 += v;
        i2 += v * t * t;
    }
    let pre = (-zeta).exp() / PI * upper;
    let ai = pre * i0;
    (ai, -r * ai - pre * i2 / (2.0 * r))
}

/// `(Ai(-x), Ai'(-x))` for large positive `x` from the oscillatory expansions,
/// truncated at the smallest term.
fn oscillatory_asymptotics(x: f64) -> (f64, f64) {
    let zeta = 2.0 / 3.0 * x * x.sqrt();
    let (sin, cos) = (zeta - FRAC_PI_4).sin_cos();
    let mut u = 1.0f64;
    let (mut pu, mut qu, mut pv, mut qv) = (1.0, 0.0, 1.0, 0.0);
    let mut zp = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        u *= (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf);
        let v = -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * u;
        zp /= zeta;
        if (u * zp).abs() >= last {
            break;
        }
        last = (u * zp).abs();
        // Signs run +, -, -, +, +, ... for k = 1, 2, 3, ...
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            pu += sign * u * zp;
            pv += sign * v * zp;
        } else {
            qu += sign * u * zp;
            qv += sign * v * zp;
        }
    }
    let q = x.powf(0.25);
    let ai = (cos * pu + sin * qu) / (PI.sqrt() * q);
    let aip = q / PI.sqrt() * (sin * pv - cos * qv);
    (ai, aip)
}

/// Airy kernel `A(x, y) = int_0^inf Ai(x + u) Ai(y + u) du` in closed form.
pub fn airy_kernel(x: f64, y: f64) -> Result<f64> {
    check_range(x)?;
    check_range(y)?;
    Ok(airy_kernel_unchecked(x, y))
}

pub(crate) fn airy_kernel_unchecked(x: f64, y: f64) -> f64 {
    if (x - y).abs() < 1e-5 {
        let m = 0.5 * (x + y);
        let (a, ap) = airy_pair(m);
        return ap * ap - m * a * a;
    }
    let (ax, apx) = airy_pair(x);
    let (ay, apy) = airy_pair(y);
    (ax * apy - apx * ay) / (x - y)
}

/// Point beyond which `Ai` is negligible at double precision.
const AIRY_TAIL: f64 = 16.0;

/// `int_0^inf e^{-u d} Ai(x + u) Ai(y + u) du` for `d` of either sign.
fn forward_integral(x: f64, y: f64, d: f64) -> Result<f64> {
    let upper = (AIRY_TAIL - x.max(y)).max(1.0);
    let f = |u: f64| {
        let (a, _) = airy_pair(x + u);
        let (b, _) = airy_pair(y + u);
        Ok((-u * d).exp() * a * b)
    };
    // Short panels keep the oscillatory part well resolved.
    let mut total = 0.0;
    let mut lo = 0.0;
    while lo < upper {
        let hi = (lo + 2.0).min(upper);
        total += quad::adaptive(f, lo, hi, 1e-14, 1e-12)?.value;
        lo = hi;
    }
    Ok(total)
}

/// `int_R e^{u d} Ai(x + u) Ai(y + u) du` for `d > 0`.
pub(crate) fn gaussian_identity(x: f64, y: f64, d: f64) -> f64 {
    (4.0 * PI * d).powf(-0.5) * (-(x - y).powi(2) / (4.0 * d) - d * (x + y) / 2.0 + d.powi(3) / 12.0).exp()
}

/// Extended Airy kernel
/// `K(s1, x; s2, y) = int_0^inf e^{-u (s1 - s2)} Ai(x + u) Ai(y + u) du` for `s1 >= s2` and
/// `-int_{-inf}^0 e^{-u (s1 - s2)} Ai(x + u) Ai(y + u) du` for `s1 < s2`.
///
/// The second branch is evaluated as the full-line Gaussian integral minus the
/// `[0, inf)` part; see [`extended_airy_kernel_direct`] for the truncated integral.
pub fn extended_airy_kernel(s1: f64, x: f64, s2: f64, y: f64) -> Result<f64> {
    check_kernel_args(s1, x, s2, y)?;
    let d = s1 - s2;
    if d >= 0.0 {
        forward_integral(x, y, d)
    } else {
        Ok(forward_integral(x, y, d)? - gaussian_identity(x, y, -d))
    }
}

fn check_kernel_args(s1: f64, x: f64, s2: f64, y: f64) -> Result<()> {
    check_range(x)?;
    check_range(y)?;
    if !((s1 - s2).abs() <= 5.0) {
        return Err(Error::InvalidParameter(format!(
            "extended kernel needs |s1 - s2| <= 5, got {}",
            (s1 - s2).abs()
        )));
    }
    Ok(())
}

/// The `s1 < s2` branch by direct quadrature over `[-U, 0]`, with `U` chosen so
/// that `U^{-1/4} e^{-|s1 - s2| U} < 1e-12`. Other inputs fall through to
/// [`extended_airy_kernel`].
pub fn extended_airy_kernel_direct(s1: f64, x: f64, s2: f64, y: f64) -> Result<f64> {
    check_kernel_args(s1, x, s2, y)?;
    let d = s2 - s1;
    if d <= 0.0 {
        return extended_airy_kernel(s1, x, s2, y);
    }
    let mut cut = 1.0f64;
    while cut.powf(-0.25) * (-d * cut).exp() >= 1e-12 {
        cut *= 1.05;
    }
    if x.min(y) - cut < -1e4 {
        return Err(Error::Numerical(format!(
            "truncation point {cut} too far out for |s1 - s2| = {d}"
        )));
    }
    let f = |u: f64| {
        let (a, _) = airy_pair(x + u);
        let (b, _) = airy_pair(y + u);
        Ok((u * d).exp() * a * b)
    };
    let mut total = 0.0;
    let mut hi = 0.0;
    while hi > -cut {
        let lo = (hi - 2.0).max(-cut);
        total += quad::adaptive(f, lo, hi, 1e-14, 1e-12)?.value;
        hi = lo;
    }
    Ok(-total)
}

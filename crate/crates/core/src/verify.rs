//! Numbered acceptance checks. Each returns a [`CriterionResult`] with the
//! measured quantity next to its tolerance; constants come from
//! `data/acceptance.json`.

use std::fmt;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::airy::{airy_kernel, extended_airy_kernel, tw_cdf_fredholm, tw_cdf_painleve, tw_table_fredholm, TwTable};
use crate::chebyshev::{mc_mixed_moments, power_in_p_basis, trace_p_paths, trace_p_spectral, MomentKind, MomentSpec};
use crate::diagrams::{
    builtin_diagram, builtin_diagrams, integral_i, phi_sharp, psi_from_sharp, psi_sharp, sharp_from_psi,
    IntegrationMethod, PolytopeProblem, SubsetTable,
};
use crate::entries::{entry_covariance_check, EntryKind, EntryProcessSpec, MatrixPath, SymmetryClass};
use crate::error::{invalid, Result};
use crate::experiments::{run_edge_distribution, run_l1_stationarity, ExperimentConfig};
use crate::paths::exact_mixed_moment;
use crate::rng;
use crate::spectra::{check_interlacing, frames_of_snapshot, SpectrumFrame};

pub const ACCEPTANCE_JSON: &str = include_str!("../data/acceptance.json");
pub const EDGE_BETA2_CONFIG: &str = include_str!("../data/configs/edge-beta2-unimodular.json");
pub const EDGE_BETA1_CONFIG: &str = include_str!("../data/configs/edge-beta1-gaussian-vs-unimodular.json");
pub const STATIONARITY_CONFIG: &str = include_str!("../data/configs/l1-stationarity.json");

/// Relative accuracy of a float sum over a few thousand terms.
const ROUNDOFF: f64 = 1e-12;

pub const CRITERIA: [u8; 11] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11];

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceIdentity {
    pub sizes: Vec<usize>,
    pub max_n: usize,
    pub seeds: u64,
    pub abs_tol: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PBasis {
    pub sizes: Vec<usize>,
    pub max_m: u32,
    pub points: usize,
    pub rel_tol: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interlacing {
    pub corners: usize,
    pub max_size: usize,
    pub rel_tol: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Covariance {
    pub dts: Vec<f64>,
    pub samples: usize,
    pub sigmas: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentOracle {
    pub trials: usize,
    pub sigmas: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SecondMoment {
    pub size: usize,
    pub trials: usize,
    pub sigmas: f64,
    pub gaussian: f64,
    pub unimodular: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TracyWidom {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
    pub fredholm_nodes: usize,
    pub agreement: f64,
    pub reduction: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeUniversality {
    pub ks_max: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stationarity {
    pub delta: f64,
    pub max_diff: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Diagrams {
    pub mc_budget: usize,
    pub rel_tol: f64,
    pub sigmas: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transforms {
    pub phi_tol: f64,
    pub round_trip_tol: f64,
}

/// Every acceptance constant in one place.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcceptanceConstants {
    pub seed: u64,
    pub trace_identity: TraceIdentity,
    pub p_basis: PBasis,
    pub interlacing: Interlacing,
    pub covariance: Covariance,
    pub moment_oracle: MomentOracle,
    pub second_moment: SecondMoment,
    pub tracy_widom: TracyWidom,
    pub edge_universality: EdgeUniversality,
    pub stationarity: Stationarity,
    pub diagrams: Diagrams,
    pub transforms: Transforms,
    /// Criterion number to the measured reason it does not pass at the stated size.
    #[serde(default)]
    pub known_failures: std::collections::BTreeMap<String, String>,
}

impl AcceptanceConstants {
    pub fn shipped() -> Self {
        serde_json::from_str(ACCEPTANCE_JSON).expect("shipped acceptance constants parse")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2} {}: {} ({}; {:.1}s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.detail,
            self.seconds
        )
    }
}

pub fn title(id: u8) -> &'static str {
    match id {
        1 => "Chebyshev trace identity",
        2 => "power expansion in the P basis",
        3 => "corner interlacing",
        4 => "entry covariances",
        5 => "moment oracle equivalence",
        6 => "second moment closed form",
        7 => "Tracy-Widom reference stack",
        8 => "edge universality",
        9 => "l1 stationarity",
        10 => "diagram integrals",
        11 => "transform plumbing",
        _ => "unknown",
    }
}

/// Runs one numbered criterion.
pub fn run_criterion(id: u8, c: &AcceptanceConstants) -> Result<CriterionResult> {
    let start = Instant::now();
    let (passed, detail) = match id {
        1 => trace_identity(c)?,
        2 => p_basis(c)?,
        3 => interlacing(c)?,
        4 => covariance(c)?,
        5 => moment_oracle(c)?,
        6 => second_moment(c)?,
        7 => tracy_widom(c)?,
        8 => edge_universality(c)?,
        9 => stationarity(c)?,
        10 => diagrams(c)?,
        11 => transforms(c)?,
        _ => return invalid(format!("no criterion numbered {id}")),
    };
    Ok(CriterionResult {
        id,
        title: title(id),
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    })
}

const ALL_KINDS: [EntryKind; 3] = [EntryKind::GaussianOu, EntryKind::ResampledGaussian, EntryKind::ResampledUnimodular];
const BOTH: [SymmetryClass; 2] = [SymmetryClass::Real, SymmetryClass::Complex];

fn ensemble(kind: EntryKind, beta: SymmetryClass) -> EntryProcessSpec {
    match kind {
        EntryKind::GaussianOu => EntryProcessSpec::gaussian_ou(beta),
        EntryKind::ResampledGaussian => EntryProcessSpec::resampled_gaussian(beta),
        EntryKind::ResampledUnimodular => EntryProcessSpec::unimodular(beta),
    }
}

fn trace_identity(c: &AcceptanceConstants) -> Result<(bool, String)> {
    let p = &c.trace_identity;
    let mut worst = 0.0f64;
    let mut count = 0;
    for beta in BOTH {
        for &size in &p.sizes {
            for k in 0..p.seeds {
                let seed = rng::derive_seed(c.seed, &[1, beta.beta() as u64, size as u64, k]);
                let h = MatrixPath::new(EntryProcessSpec::unimodular(beta), seed).snapshot(0.0, size)?;
                let frame = SpectrumFrame::of_matrix(0.0, &h)?;
                for n in 1..=p.max_n {
                    worst = worst.max((trace_p_paths(&h, n)? - trace_p_spectral(&frame, n)?).abs());
                    count += 1;
                }
            }
        }
    }
    Ok((
        worst <= p.abs_tol,
        format!("{count} comparisons, max abs diff {worst:.2e} <= {:.0e}", p.abs_tol),
    ))
}

fn p_basis(c: &AcceptanceConstants) -> Result<(bool, String)> {
    let p = &c.p_basis;
    let mut worst = 0.0f64;
    let mut count = 0;
    for &size in &p.sizes {
        let edge = 2.0 * ((size - 2) as f64).sqrt();
        // Points spread over [-1.5 edge, 1.5 edge], avoiding lambda = 0.
        let points: Vec<f64> = (0..p.points)
            .map(|i| edge * (-1.5 + 3.0 * (i as f64 + 0.5) / p.points as f64))
            .collect();
        for m in 1..=p.max_m {
            let e = power_in_p_basis(m, size)?;
            for &l in &points {
                let exact = l.powi(m as i32);
                worst = worst.max(((e.evaluate(l)? - exact) / exact).abs());
                count += 1;
            }
        }
    }
    Ok((
        worst <= p.rel_tol,
        format!("{count} evaluations, max rel error {worst:.2e} <= {:.0e}", p.rel_tol),
    ))
}

fn interlacing(c: &AcceptanceConstants) -> Result<(bool, String)> {
    let p = &c.interlacing;
    let mut r = rng::stream(rng::derive_seed(c.seed, &[3]));
    let mut failures = 0;
    let mut worst = 0.0f64;
    for k in 0..p.corners {
        let ens = ensemble(ALL_KINDS[k % 3], BOTH[(k / 3) % 2]);
        let n = r.random_range(1..p.max_size);
        let tau: f64 = r.random_range(-1.0..=1.0);
        let path = MatrixPath::new(ens, r.random());
        let h = path.snapshot(tau, n + 1)?;
        let frames = frames_of_snapshot(&h, tau, &[n, n + 1])?;
        let rep = check_interlacing(&frames[0], &frames[1])?;
        let norm = frames[1].eigenvalues().iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if rep.worst_violation > p.rel_tol * norm {
            failures += 1;
        }
        worst = worst.max(rep.worst_violation / norm.max(f64::MIN_POSITIVE));
    }
    Ok((
        failures == 0,
        format!(
            "{} corner pairs, {failures} violations, worst violation / |H| = {worst:.2e}",
            p.corners
        ),
    ))
}

fn covariance(c: &AcceptanceConstants) -> Result<(bool, String)> {
    let p = &c.covariance;
    let mut worst = 0.0f64;
    let mut count = 0;
    for kind in ALL_KINDS {
        for beta in BOTH {
            for (i, &dt) in p.dts.iter().enumerate() {
                let seed = rng::derive_seed(c.seed, &[4, kind as u64, beta.beta() as u64, i as u64]);
                let rep = entry_covariance_check(&ensemble(kind, beta), dt, p.samples, seed)?;
                worst = worst.max(rep.max_z());
                count += 1;
            }
        }
    }
    Ok((
        worst <= p.sigmas,
        format!("{count} checks, max |z| = {worst:.2} <= {}", p.sigmas),
    ))
}

/// Moment specs compared against the exact oracle.
pub fn oracle_cases() -> Result<Vec<MomentSpec>> {
    let mut out = Vec::new();
    for kind in [MomentKind::Plain, MomentKind::Modified] {
        for size in [3, 4] {
            for m in 1..=6 {
                out.push(MomentSpec::single(kind, m, 0.0, size)?);
            }
        }
        for (ms, ts, ns) in [
            (vec![2, 2], vec![0.0, 0.3], vec![4, 4]),
            (vec![2, 2], vec![0.0, 0.3], vec![3, 4]),
            (vec![3, 3], vec![-0.2, 0.4], vec![4, 4]),
            (vec![4, 2], vec![0.0, 0.5], vec![4, 3]),
            (vec![2, 4], vec![0.1, 0.2], vec![4, 4]),
        ] {
            out.push(MomentSpec::new(kind, ms, ts, ns)?);
        }
    }
    Ok(out)
}

fn moment_oracle(c: &AcceptanceConstants) -> Result<(bool, String)> {
    let p = &c.moment_oracle;
    let mut worst = 0.0f64;
    let mut count = 0;
    for kind in ALL_KINDS {
        for beta in BOTH {
            let ens = ensemble(kind, beta);
            for (i, spec) in oracle_cases()?.iter().enumerate() {
                if spec.kind == MomentKind::Modified && kind != EntryKind::ResampledUnimodular {
                    continue;
                }
                let exact = exact_mixed_moment(spec, &ens)?;
                let seed = rng::derive_seed(c.seed, &[5, kind as u64, beta.beta() as u64, i as u64]);
                let mc = mc_mixed_moments(spec, &ens, p.trials, seed)?;
                // Deterministic unimodular moments have a round-off-only sample error.
                let se = mc.stderr.hypot(ROUNDOFF * (1.0 + exact.abs()));
                let z = (mc.estimate - exact).abs() / se;
                worst = worst.max(z);
                count += 1;
            }
        }
    }
    Ok((
        worst <= p.sigmas,
        format!("{count} moment specs, max |z| = {worst:.2} <= {}", p.sigmas),
    ))
}

fn second_moment(c: &AcceptanceConstants) -> Result<(bool, String)> {
    let p = &c.second_moment;
    let spec = MomentSpec::single(MomentKind::Plain, 2, 0.0, p.size)?;
    let mut parts = Vec::new();
    let mut passed = true;
    let cases = [
        (EntryProcessSpec::gaussian_ou(SymmetryClass::Real), p.gaussian),
        (EntryProcessSpec::unimodular(SymmetryClass::Real), p.unimodular),
        (EntryProcessSpec::unimodular(SymmetryClass::Complex), p.unimodular),
    ];
    for (i, (ens, target)) in cases.iter().enumerate() {
        let mc = mc_mixed_moments(&spec, ens, p.trials, rng::derive_seed(c.seed, &[6, i as u64]))?;
        // Unimodular traces of H^2 are deterministic, so the standard error is zero.
        let ok = (mc.estimate - target).abs() <= p.sigmas * mc.stderr + 1e-12;
        passed &= ok;
        parts.push(format!("{}: {:.5} +- {:.5} vs {target}", ens.label(), mc.estimate, mc.stderr));
    }
    Ok((passed, parts.join(", ")))
}

fn tracy_widom(c: &AcceptanceConstants) -> Result<(bool, String)> {
    let p = &c.tracy_widom;
    let steps = ((p.hi - p.lo) / p.step).round() as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| p.lo + p.step * i as f64).collect();
    let painleve = tw_cdf_painleve(SymmetryClass::Complex, &grid)?;
    let mut gap = 0.0f64;
    for (x, f) in grid.iter().zip(painleve.values()) {
        gap = gap.max((tw_cdf_fredholm(*x, p.fredholm_nodes)? - f).abs());
    }
    let std = TwTable::standard_grid();
    let tables = [
        tw_cdf_painleve(SymmetryClass::Complex, &std)?,
        tw_table_fredholm(p.fredholm_nodes)?,
    ];
    let violations: Vec<String> = tables.iter().flat_map(|t| t.invariant_violations()).collect();
    let beta1 = tw_cdf_painleve(SymmetryClass::Real, &std)?.invariant_violations();
    let mut reduction = 0.0f64;
    for s in [-1.0, 0.0, 0.7] {
        for i in 0..10 {
            for j in 0..10 {
                let (x, y) = (-4.0 + 0.7 * i as f64, -4.0 + 0.7 * j as f64);
                reduction = reduction.max((extended_airy_kernel(s, x, s, y)? - airy_kernel(x, y)?).abs());
            }
        }
    }
    let passed = gap <= p.agreement && violations.is_empty() && reduction <= p.reduction;
    Ok((
        passed,
        format!(
            "Fredholm vs Painleve max diff {gap:.2e} <= {:.0e}; beta=2 table violations {:?}; \
             kernel reduction {reduction:.2e} <= {:.0e}; beta=1 table notes {:?}",
            p.agreement, violations, p.reduction, beta1
        ),
    ))
}

fn edge_universality(c: &AcceptanceConstants) -> Result<(bool, String)> {
    let p = &c.edge_universality;
    let c2 = ExperimentConfig::from_json(EDGE_BETA2_CONFIG)?;
    let c1 = ExperimentConfig::from_json(EDGE_BETA1_CONFIG)?;
    let r2 = run_edge_distribution(&c2)?.table;
    let r1 = run_edge_distribution(&c1)?.table;
    let ks = r2.value("ks_tw")?;
    let two = r1.value("ks_two_sample_j1")?;
    Ok((
        ks <= p.ks_max && two <= p.ks_max,
        format!(
            "beta=2 unimodular KS to F2 = {ks:.4} (mean {:.3}); beta=1 gaussian vs unimodular two-sample KS = {two:.4}; \
             limit {} at M = {}, {} trials",
            r2.value("mean_j1")?,
            p.ks_max,
            c2.m,
            c2.trials
        ),
    ))
}

fn stationarity(c: &AcceptanceConstants) -> Result<(bool, String)> {
    let p = &c.stationarity;
    let cfg = ExperimentConfig::from_json(STATIONARITY_CONFIG)?;
    let r = run_l1_stationarity(&cfg)?.table;
    let key = format!("diff/delta={}", p.delta);
    let row = r
        .get(&key)
        .ok_or_else(|| crate::Error::InvalidParameter(format!("configuration lacks delta = {}", p.delta)))?;
    Ok((
        row.value.abs() <= p.max_diff,
        format!(
            "corr_s = {:.4}, corr_t = {:.4}, |diff| = {:.4} (se {:.4}) <= {} at M = {}, {} trials",
            r.value(&format!("corr_s/delta={}", p.delta))?,
            r.value(&format!("corr_t/delta={}", p.delta))?,
            row.value.abs(),
            row.stderr.unwrap_or(f64::NAN),
            p.max_diff,
            cfg.m,
            cfg.trials
        ),
    ))
}

fn diagrams(c: &AcceptanceConstants) -> Result<(bool, String)> {
    let p = &c.diagrams;
    let mc = IntegrationMethod::MonteCarlo;
    let d = builtin_diagram("fig1-left").expect("shipped diagram");
    let mut seg = 0.0f64;
    for alpha in [0.5, 1.0, 2.0, 4.0] {
        let prob = PolytopeProblem::new(&d, &[alpha], &[0.0], &[0.0])?;
        let est = prob.integrate(mc, p.mc_budget, rng::derive_seed(c.seed, &[10, alpha.to_bits()]))?;
        let length = alpha / 2f64.sqrt();
        seg = seg.max((est.value * prob.gram_factor() - length).abs() / length);
    }
    let mut shift_z = 0.0f64;
    for d in builtin_diagrams().iter().filter(|d| d.k == 2) {
        let a = [1.0, 1.3];
        let base = integral_i(d, &a, &[0.0, 0.4], &[0.2, -0.3], mc, p.mc_budget)?;
        let moved = PolytopeProblem::new(d, &a, &[1.5, 1.9], &[-0.8, -1.3])?.integrate(
            mc,
            p.mc_budget,
            rng::derive_seed(c.seed, &[10, 2]),
        )?;
        let se = base.error_estimate.hypot(moved.error_estimate).max(f64::MIN_POSITIVE);
        shift_z = shift_z.max((base.value - moved.value).abs() / se);
    }
    let mut leaked = Vec::new();
    for d in builtin_diagrams().iter().filter(|d| !d.orientable) {
        let k = d.k;
        let v = psi_sharp(
            std::slice::from_ref(d),
            SymmetryClass::Complex,
            &vec![1.0; k],
            &vec![0.0; k],
            &vec![0.0; k],
            mc,
            1000,
        )?;
        if v.value != 0.0 {
            leaked.push(d.name.clone());
        }
    }
    let non_orientable = builtin_diagrams().iter().filter(|d| !d.orientable).count();
    Ok((
        seg <= p.rel_tol && shift_z <= p.sigmas && leaked.is_empty() && non_orientable > 0,
        format!(
            "segment length rel error {seg:.2e} <= {}; shifted |z| = {shift_z:.2} <= {}; \
             {non_orientable} non-orientable diagrams, {} kept for beta=2",
            p.rel_tol,
            p.sigmas,
            leaked.len()
        ),
    ))
}

fn transforms(c: &AcceptanceConstants) -> Result<(bool, String)> {
    let p = &c.transforms;
    let mut phi = 0.0f64;
    for alpha in [0.25, 1.0, 3.0] {
        for k in 1..=3 {
            let a = vec![alpha; k];
            let v = phi_sharp(|_, _, _| Ok(1.0), &a, &vec![0.0; k], &vec![0.0; k], 48)?;
            let exact = (std::f64::consts::PI * alpha).powf(-0.5 * k as f64);
            phi = phi.max((v - exact).abs());
        }
    }
    let mut r = rng::stream(rng::derive_seed(c.seed, &[11]));
    let mut trip = 0.0f64;
    for _ in 0..200 {
        let k = r.random_range(1..=5);
        let mut v: Vec<f64> = (0..1 << k).map(|_| r.random_range(-2.0..2.0)).collect();
        v[0] = 1.0;
        let sharp = SubsetTable::new(k, v)?;
        let back = sharp_from_psi(&psi_from_sharp(&sharp)?)?;
        for (a, b) in sharp.values.iter().zip(&back.values) {
            trip = trip.max((a - b).abs());
        }
    }
    Ok((
        phi <= p.phi_tol && trip <= p.round_trip_tol,
        format!(
            "phi_sharp max error {phi:.2e} <= {:.0e}; round trip max error {trip:.2e} <= {:.0e}",
            p.phi_tol, p.round_trip_tol
        ),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_parse_and_configs_validate() {
        let c = AcceptanceConstants::shipped();
        assert_eq!(c.trace_identity.abs_tol, 1e-9);
        assert_eq!(c.edge_universality.ks_max, 0.05);
        for cfg in [EDGE_BETA2_CONFIG, EDGE_BETA1_CONFIG, STATIONARITY_CONFIG] {
            let e = ExperimentConfig::from_json(cfg).unwrap();
            assert_eq!((e.m, e.trials), (200, 2000));
        }
        assert!(run_criterion(12, &c).is_err());
    }

    #[test]
    fn fast_criteria_pass() {
        let c = AcceptanceConstants::shipped();
        for id in [2, 11] {
            let r = run_criterion(id, &c).unwrap();
            assert!(r.passed, "{r}");
        }
    }
}

use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind};
use super::result::{CsvTable, ExperimentOutput, ResultTable};
use crate::airy::{tw_cdf_painleve, TwTable};
use crate::chebyshev::{mc_mixed_moments, MomentKind, MomentSpec};
use crate::entries::{EntryKind, EntryProcessSpec, MatrixPath};
use crate::error::{invalid, Error, Result};
use crate::paths::exact_mixed_moment;
use crate::rng;
use crate::scaling::{ScaledLineEnsemble, ScalingMap};
use crate::spectra::CornerGrid;
use crate::stats::{jackknife, ks_one_sample, ks_two_sample, linear_fit, pearson, Welford};

const JACKKNIFE_BLOCKS: usize = 20;

/// Dispatches on the configured experiment kind.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    match config.experiment {
        ExperimentKind::EdgeDistribution => run_edge_distribution(config),
        ExperimentKind::L1Stationarity => run_l1_stationarity(config),
        ExperimentKind::ContinuityProbe => run_continuity_probe(config),
        ExperimentKind::MomentConvergence => run_moment_convergence(config),
    }
}

/// `lambda_j(s, t)` for `j = 1..=j_max`: the corner sizes bracketing `N(t)` at
/// time `tau(s)`, interpolated linearly in `t`.
pub fn lines_at(path: &MatrixPath, map: ScalingMap, s: f64, t: f64, j_max: usize) -> Result<Vec<f64>> {
    let n = map.n_real(t);
    let lo = (n + 1e-9).floor();
    if lo < 3.0 {
        return invalid(format!("N(t) = {n} is below 3"));
    }
    let lo = lo as usize;
    let sizes: Vec<usize> = if (n - lo as f64).abs() <= 1e-9 { vec![lo] } else { vec![lo, lo + 1] };
    let grid = CornerGrid::compute(path, &[map.tau(s)], &sizes)?;
    let lines = ScaledLineEnsemble::build(&grid, map, j_max)?;
    (1..=j_max).map(|j| lines.evaluate_line(j, s, t)).collect()
}

fn sample_lines(
    ensemble: &EntryProcessSpec,
    map: ScalingMap,
    point: [f64; 2],
    j_max: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    (0..trials)
        .into_par_iter()
        .map(|k| {
            let path = MatrixPath::new(*ensemble, rng::trial_seed(seed, k as u64));
            lines_at(&path, map, point[0], point[1], j_max)
        })
        .collect()
}

/// Kolmogorov-Smirnov distance between `samples` and a tabulated CDF.
pub fn ks_distance(samples: &[f64], table: &TwTable) -> Result<f64> {
    if samples.len() < 100 {
        return invalid(format!("KS distance needs at least 100 samples, got {}", samples.len()));
    }
    let (lo, hi) = (table.x()[0], *table.x().last().unwrap());
    let (min, max) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if min < lo || max > hi {
        return Err(Error::OutOfRange {
            x: if min < lo { min } else { max },
            lo,
            hi,
        });
    }
    ks_one_sample(samples, |x| Ok(table.cdf(x)))
}

/// Tracy-Widom table for the ensemble's symmetry class on the standard grid.
pub fn reference_table(ensemble: &EntryProcessSpec) -> Result<TwTable> {
    tw_cdf_painleve(ensemble.beta(), &TwTable::standard_grid())
}

/// Samples `lambda_j` at the first query point; KS distance to the
/// Tracy-Widom law of the configured class, and optionally the two-sample
/// distance to `compare_ensemble`.
pub fn run_edge_distribution(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let map = ScalingMap::new(config.m)?;
    let point = config.query_points[0];
    let j_max = *config.j.iter().max().unwrap();
    let table = reference_table(&config.ensemble)?;
    let mut out = ResultTable::new(config);
    let mut samples_csv = CsvTable::new("ensemble,trial,s,t,j,lambda");
    let mut ecdf_csv = CsvTable::new("j,x,empirical,reference");

    let main = sample_lines(&config.ensemble, map, point, j_max, config.trials, config.seed)?;
    let other = match &config.compare_ensemble {
        Some(e) => Some((
            e,
            sample_lines(e, map, point, j_max, config.trials, rng::derive_seed(config.seed, &[1]))?,
        )),
        None => None,
    };
    for (label, data) in std::iter::once((&config.ensemble, &main)).chain(other.iter().map(|(e, d)| (*e, d))) {
        for (k, lines) in data.iter().enumerate() {
            for &j in &config.j {
                samples_csv.push(&[&label.label(), &k, &point[0], &point[1], &j, &lines[j - 1]]);
            }
        }
    }
    for &j in &config.j {
        let xs: Vec<f64> = main.iter().map(|l| l[j - 1]).collect();
        let w: Welford = xs.iter().copied().collect();
        out.push(format!("mean_j{j}"), w.mean(), Some(w.stderr()));
        out.push(format!("variance_j{j}"), w.variance(), None);
        if j == 1 {
            out.push("ks_tw", ks_distance(&xs, &table)?, None);
            let mut sorted = xs.clone();
            sorted.sort_by(f64::total_cmp);
            for (i, x) in sorted.iter().enumerate() {
                ecdf_csv.push(&[&j, x, &((i + 1) as f64 / sorted.len() as f64), &table.cdf(*x)]);
            }
        }
        if let Some((_, data)) = &other {
            let ys: Vec<f64> = data.iter().map(|l| l[j - 1]).collect();
            out.push(format!("ks_two_sample_j{j}"), ks_two_sample(&xs, &ys)?, None);
        }
    }
    out.push("trials", config.trials as f64, None);
    let mut tw = CsvTable::new(crate::airy::TW_CSV_HEADER);
    for (x, f) in table.x().iter().zip(table.values()) {
        tw.push(&[&table.beta().beta(), x, f]);
    }
    Ok(ExperimentOutput {
        table: out,
        files: vec![
            ("samples.csv".into(), samples_csv),
            ("ecdf.csv".into(), ecdf_csv),
            ("tw.csv".into(), tw),
        ],
    })
}

/// Correlation of `lambda_1(0, 0)` with `lambda_1(delta, 0)` and with
/// `lambda_1(0, delta)`.
pub fn run_l1_stationarity(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let map = ScalingMap::new(config.m)?;
    let mut out = ResultTable::new(config);
    let mut samples_csv = CsvTable::new("trial,delta,lambda_00,lambda_s,lambda_t");
    let mut corr_csv = CsvTable::new("delta,corr_s,corr_t,corr_s_se,corr_t_se,diff,stderr");
    let rows: Vec<(f64, Vec<(f64, f64)>)> = (0..config.trials)
        .into_par_iter()
        .map(|k| {
            let path = MatrixPath::new(config.ensemble, rng::trial_seed(config.seed, k as u64));
            let base = lines_at(&path, map, 0.0, 0.0, 1)?[0];
            let pairs = config
                .deltas
                .iter()
                .map(|&d| Ok((lines_at(&path, map, d, 0.0, 1)?[0], lines_at(&path, map, 0.0, d, 1)?[0])))
                .collect::<Result<Vec<_>>>()?;
            Ok((base, pairs))
        })
        .collect::<Result<_>>()?;
    let base: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let mut previous: Option<(f64, f64, f64, f64)> = None;
    let mut monotone = true;
    for (di, &d) in config.deltas.iter().enumerate() {
        let ls: Vec<f64> = rows.iter().map(|r| r.1[di].0).collect();
        let lt: Vec<f64> = rows.iter().map(|r| r.1[di].1).collect();
        for k in 0..config.trials {
            samples_csv.push(&[&k, &d, &base[k], &ls[k], &lt[k]]);
        }
        let corr = |keep: &[usize], other: &[f64]| {
            let a: Vec<f64> = keep.iter().map(|&i| base[i]).collect();
            let b: Vec<f64> = keep.iter().map(|&i| other[i]).collect();
            pearson(&a, &b)
        };
        let all: Vec<usize> = (0..config.trials).collect();
        let (cs, ct) = (corr(&all, &ls)?, corr(&all, &lt)?);
        let n = config.trials;
        let cs_se = jackknife(n, JACKKNIFE_BLOCKS, |keep| corr(keep, &ls))?;
        let ct_se = jackknife(n, JACKKNIFE_BLOCKS, |keep| corr(keep, &lt))?;
        let diff_se = jackknife(n, JACKKNIFE_BLOCKS, |keep| Ok(corr(keep, &ls)? - corr(keep, &lt)?))?;
        corr_csv.push(&[&d, &cs, &ct, &cs_se, &ct_se, &(cs - ct), &diff_se]);
        out.push(format!("corr_s/delta={d}"), cs, Some(cs_se));
        out.push(format!("corr_t/delta={d}"), ct, Some(ct_se));
        out.push(format!("diff/delta={d}"), cs - ct, Some(diff_se));
        if let Some((pd, ps, pt, pse)) = previous {
            if d > pd && (cs > ps + 2.0 * cs_se.hypot(pse) || ct > pt + 2.0 * ct_se.hypot(pse)) {
                monotone = false;
            }
        }
        previous = Some((d, cs, ct, cs_se.max(ct_se)));
    }
    out.push("non_increasing_within_2sigma", if monotone { 1.0 } else { 0.0 }, None);
    Ok(ExperimentOutput {
        table: out,
        files: vec![
            ("samples.csv".into(), samples_csv),
            ("correlation.csv".into(), corr_csv),
        ],
    })
}

/// Mean of `max_{j <= 3} |lambda_j(0, h) - lambda_j(0, 0)|` for `h` a multiple of the
/// corner spacing, and the log-log slope of the mean against `h`.
pub fn run_continuity_probe(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    if config.ensemble.kind() != EntryKind::ResampledUnimodular {
        return invalid("continuity-probe requires the resampled-unimodular ensemble");
    }
    let map = ScalingMap::new(config.m)?;
    let mut mesh = config.mesh_multipliers.clone();
    mesh.sort_unstable();
    mesh.dedup();
    let top = *mesh.last().unwrap() as usize;
    let m = config.m as usize;
    let sizes: Vec<usize> = (m..=m + top).collect();
    let j_max = 3.min(m);
    let incr: Vec<Vec<f64>> = (0..config.trials)
        .into_par_iter()
        .map(|k| {
            let path = MatrixPath::new(config.ensemble, rng::trial_seed(config.seed, k as u64));
            let grid = CornerGrid::compute(&path, &[0.0], &sizes)?;
            let lines = ScaledLineEnsemble::build(&grid, map, j_max)?;
            Ok(mesh
                .iter()
                .map(|&h| {
                    (1..=j_max)
                        .map(|j| (lines.node(j, 0, h as usize) - lines.node(j, 0, 0)).abs())
                        .fold(0.0, f64::max)
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut out = ResultTable::new(config);
    let mut samples_csv = CsvTable::new("trial,h,increment");
    let mut incr_csv = CsvTable::new("h,mean,stderr");
    let (mut log_h, mut log_mean) = (Vec::new(), Vec::new());
    let mut monotone = true;
    let mut prev: Option<(f64, f64)> = None;
    for (i, &mult) in mesh.iter().enumerate() {
        let h = mult as f64 * map.t_step();
        for (k, row) in incr.iter().enumerate() {
            samples_csv.push(&[&k, &h, &row[i]]);
        }
        let w: Welford = incr.iter().map(|r| r[i]).collect();
        incr_csv.push(&[&h, &w.mean(), &w.stderr()]);
        out.push(format!("mean_increment/h={h}"), w.mean(), Some(w.stderr()));
        if let Some((pm, pse)) = prev {
            if w.mean() < pm - 2.0 * w.stderr().hypot(pse) {
                monotone = false;
            }
        }
        prev = Some((w.mean(), w.stderr()));
        if mult > 0 && w.mean() > 0.0 {
            log_h.push(h.ln());
            log_mean.push(w.mean().ln());
        }
    }
    out.push("non_decreasing_within_2sigma", if monotone { 1.0 } else { 0.0 }, None);
    if log_h.len() >= 3 {
        let fit = linear_fit(&log_h, &log_mean)?;
        out.push("exponent", fit.slope, Some(fit.slope_stderr));
        out.push("exponent_ci95_low", fit.slope - 1.96 * fit.slope_stderr, None);
        out.push("exponent_ci95_high", fit.slope + 1.96 * fit.slope_stderr, None);
    }
    Ok(ExperimentOutput {
        table: out,
        files: vec![
            ("samples.csv".into(), samples_csv),
            ("increments.csv".into(), incr_csv),
        ],
    })
}

fn catalan(k: u64) -> f64 {
    (0..k).fold(1.0, |c, i| c * 2.0 * (2 * i + 1) as f64 / (i + 2) as f64)
}

/// Monte Carlo moments against the exact path oracle at small sizes, and the
/// plain moment per eigenvalue at `N = M` against `Cat_{m/2} / 2^m`.
pub fn run_moment_convergence(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let mut out = ResultTable::new(config);
    let mut csv = CsvTable::new("kind,size,m,mc,mc_stderr,oracle,benchmark,z");
    let kinds: &[MomentKind] = if config.ensemble.kind() == EntryKind::ResampledUnimodular {
        &[MomentKind::Plain, MomentKind::Modified]
    } else {
        &[MomentKind::Plain]
    };
    let none = String::new();
    for &kind in kinds {
        let label = match kind {
            MomentKind::Plain => "plain",
            MomentKind::Modified => "modified",
        };
        for &n in &config.moment_sizes {
            for &m in &config.moment_exponents {
                let spec = MomentSpec::single(kind, m, 0.0, n)?;
                let seed = rng::derive_seed(config.seed, &[kind as u64, n as u64, m as u64]);
                let mc = mc_mixed_moments(&spec, &config.ensemble, config.trials, seed)?;
                let oracle = match exact_mixed_moment(&spec, &config.ensemble) {
                    Ok(v) => Some(v),
                    Err(Error::OracleOutOfScope(_) | Error::GuardExceeded { .. }) => None,
                    Err(e) => return Err(e),
                };
                let name = format!("{label}/N={n}/m={m}");
                out.push(format!("{name}/mc"), mc.estimate, Some(mc.stderr));
                let z = oracle.map(|o| (mc.estimate - o) / mc.stderr.max(1e-300));
                if let Some(o) = oracle {
                    out.push(format!("{name}/oracle"), o, None);
                    out.push(format!("{name}/z"), z.unwrap(), None);
                }
                let o_str = oracle.map_or(none.clone(), |o| o.to_string());
                let z_str = z.map_or(none.clone(), |z| z.to_string());
                csv.push(&[&label, &n, &m, &mc.estimate, &mc.stderr, &o_str, &none, &z_str]);
            }
        }
    }
    let big = config.m as usize;
    let exps = &config.moment_exponents;
    let scale = 1.0 / (2.0 * (big as f64).sqrt());
    let per_trial: Vec<Vec<f64>> = (0..config.trials)
        .into_par_iter()
        .map(|k| {
            let seed = rng::trial_seed(rng::derive_seed(config.seed, &[7, big as u64]), k as u64);
            let ev = MatrixPath::new(config.ensemble, seed).snapshot(0.0, big)?.eigenvalues();
            Ok(exps
                .iter()
                .map(|&m| ev.iter().map(|x| (x * scale).powi(m as i32)).sum::<f64>() / big as f64)
                .collect())
        })
        .collect::<Result<_>>()?;
    for (i, &m) in exps.iter().enumerate() {
        let w: Welford = per_trial.iter().map(|r| r[i]).collect();
        let (per, per_se) = (w.mean(), w.stderr());
        let bench = if m % 2 == 0 {
            catalan(m as u64 / 2) / 2f64.powi(m as i32)
        } else {
            0.0
        };
        let name = format!("plain/N={big}/m={m}");
        out.push(format!("{name}/mc_per_eigenvalue"), per, Some(per_se));
        out.push(format!("{name}/catalan"), bench, None);
        if bench != 0.0 {
            out.push(format!("{name}/relative_deviation"), (per - bench) / bench, None);
        }
        let z = (per - bench) / per_se.max(1e-300);
        csv.push(&[&"plain-per-eigenvalue", &big, &m, &per, &per_se, &none, &bench, &z]);
    }
    Ok(ExperimentOutput {
        table: out,
        files: vec![("moments.csv".into(), csv)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::airy::TwMethod;
    use crate::entries::SymmetryClass;
    use rand::Rng;

    fn logistic_table() -> TwTable {
        let x = TwTable::standard_grid();
        let f = x.iter().map(|v| 1.0 / (1.0 + (-2.0 * (v + 2.0)).exp())).collect();
        TwTable::new(SymmetryClass::Complex, TwMethod::Painleve, x, f).unwrap()
    }

    #[test]
    fn ks_distance_of_inverse_cdf_draws() {
        let t = logistic_table();
        let mut r = rng::stream(5);
        let draws: Vec<f64> = (0..100_000)
            .map(|_| {
                let u: f64 = r.random_range(t.values()[0]..*t.values().last().unwrap());
                // Invert the piecewise-linear table.
                let i = t.values().partition_point(|&f| f <= u).min(t.x().len() - 1).max(1);
                let (f0, f1) = (t.values()[i - 1], t.values()[i]);
                t.x()[i - 1] + (u - f0) / (f1 - f0) * (t.x()[i] - t.x()[i - 1])
            })
            .collect();
        assert!(ks_distance(&draws, &t).unwrap() <= 0.01);
    }

    #[test]
    fn ks_distance_degenerate_and_invalid() {
        let t = logistic_table();
        let c = -1.3;
        let d = ks_distance(&[c; 200], &t).unwrap();
        assert!((d - t.cdf(c).max(1.0 - t.cdf(c))).abs() < 1e-15);
        assert!(ks_distance(&[], &t).is_err());
        assert!(ks_distance(&[0.0; 99], &t).is_err());
        let mut far = vec![0.0; 150];
        far[3] = 7.5;
        assert!(matches!(ks_distance(&far, &t), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn lines_interpolate_between_corners() {
        let map = ScalingMap::new(64).unwrap();
        let path = MatrixPath::new(EntryProcessSpec::unimodular(SymmetryClass::Real), 3);
        let at0 = lines_at(&path, map, 0.0, 0.0, 2).unwrap();
        let t1 = map.t_step();
        let at1 = lines_at(&path, map, 0.0, t1, 2).unwrap();
        let mid = lines_at(&path, map, 0.0, 0.5 * t1, 2).unwrap();
        for j in 0..2 {
            assert!((mid[j] - 0.5 * (at0[j] + at1[j])).abs() < 1e-9);
            assert!(at0[j] > at0.get(j + 1).copied().unwrap_or(f64::NEG_INFINITY));
        }
    }

    #[test]
    fn catalan_numbers() {
        let c: Vec<f64> = (0..6).map(catalan).collect();
        assert_eq!(c, vec![1.0, 1.0, 2.0, 5.0, 14.0, 42.0]);
    }

    #[test]
    fn stationarity_at_zero_delta_is_exact() {
        let mut c = ExperimentConfig::new(
            ExperimentKind::L1Stationarity,
            EntryProcessSpec::unimodular(SymmetryClass::Real),
            50,
            100,
        );
        c.deltas = vec![0.0];
        let out = run_l1_stationarity(&c).unwrap();
        assert_eq!(out.table.value("corr_s/delta=0").unwrap(), 1.0);
        assert_eq!(out.table.value("corr_t/delta=0").unwrap(), 1.0);
        assert_eq!(out.file("samples.csv").unwrap().len(), 100);
    }

    #[test]
    fn continuity_zero_mesh_and_guard() {
        let mut c = ExperimentConfig::new(
            ExperimentKind::ContinuityProbe,
            EntryProcessSpec::unimodular(SymmetryClass::Complex),
            50,
            100,
        );
        c.mesh_multipliers = vec![0, 1, 2, 4];
        let out = run_continuity_probe(&c).unwrap();
        assert_eq!(out.table.value("mean_increment/h=0").unwrap(), 0.0);
        assert!(out.table.get("exponent").is_some());
        c.ensemble = EntryProcessSpec::gaussian_ou(SymmetryClass::Complex);
        assert!(run_continuity_probe(&c).is_err());
    }
}

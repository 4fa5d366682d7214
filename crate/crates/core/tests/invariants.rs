use proptest::prelude::*;
use wigner_corners::chebyshev::{trace_p_paths, trace_p_spectral, MomentKind, MomentSpec};
use wigner_corners::paths::{exact_mixed_moment_with, ExactOptions};
use wigner_corners::scaling::ScalingMap;
use wigner_corners::spectra::{check_interlacing, corner_spectra, SpectrumFrame};
use wigner_corners::{EntryKind, EntryProcessSpec, MatrixPath, SymmetryClass};

fn ensemble(kind: u8, complex: bool) -> EntryProcessSpec {
    let beta = if complex { SymmetryClass::Complex } else { SymmetryClass::Real };
    match kind {
        0 => EntryProcessSpec::gaussian_ou(beta),
        1 => EntryProcessSpec::resampled_gaussian(beta),
        _ => EntryProcessSpec::unimodular(beta),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn corners_interlace(kind in 0u8..3, complex: bool, seed: u64, n in 1usize..30, tau in -1.0f64..1.0) {
        let path = MatrixPath::new(ensemble(kind, complex), seed);
        let frames = corner_spectra(&path, tau, &[n, n + 1]).unwrap();
        let report = check_interlacing(&frames[0], &frames[1]).unwrap();
        prop_assert!(report.passed, "worst violation {}", report.worst_violation);
    }

    #[test]
    fn snapshots_are_nested(kind in 0u8..3, complex: bool, seed: u64, n in 1usize..12, extra in 1usize..6, tau in -1.0f64..1.0) {
        let path = MatrixPath::new(ensemble(kind, complex), seed);
        let big = path.snapshot(tau, n + extra).unwrap();
        let small = path.snapshot(tau, n).unwrap();
        prop_assert_eq!(big.leading_corner(n).unwrap(), small);
    }

    #[test]
    fn unimodular_snapshots_have_unit_entries(complex: bool, seed: u64, n in 2usize..15, tau in -1.0f64..1.0) {
        let spec = ensemble(2, complex);
        prop_assert_eq!(spec.kind(), EntryKind::ResampledUnimodular);
        let h = MatrixPath::new(spec, seed).snapshot(tau, n).unwrap();
        let (off, diag) = h.unimodular_defect();
        prop_assert!(off < 1e-12 && diag == 0.0);
        let expected = (n * (n - 1)) as f64;
        prop_assert!((h.frobenius_norm_sqr() - expected).abs() < 1e-9 * expected);
    }

    #[test]
    fn trace_identity_on_random_unimodular(complex: bool, seed: u64, n in 3usize..7, order in 1usize..7) {
        let h = MatrixPath::new(ensemble(2, complex), seed).snapshot(0.0, n).unwrap();
        let frame = SpectrumFrame::of_matrix(0.0, &h).unwrap();
        let spectral = trace_p_spectral(&frame, order).unwrap();
        let paths = trace_p_paths(&h, order).unwrap();
        prop_assert!((spectral - paths).abs() < 1e-8 * (1.0 + paths.abs()));
    }

    #[test]
    fn scaling_map_round_trips(m in 1u32..5000, s in -5.0f64..5.0, t in -2.0f64..2.0) {
        let map = ScalingMap::new(m).unwrap();
        let (tau, n) = map.maps(s, t);
        prop_assert!((map.s_of_tau(tau) - s).abs() < 1e-12 * (1.0 + s.abs()));
        prop_assert!((map.t_of_n(n) - t).abs() < 1e-9 * (1.0 + t.abs()));
        let n0 = map.n_real(t);
        prop_assert!((map.n_real(t + map.t_step()) - n0 - 1.0).abs() < 1e-9 * (1.0 + n0));
    }

    #[test]
    fn odd_skip_does_not_change_exact_moments(kind in 0u8..3, complex: bool, m in 1usize..5, n in 2usize..4, dt in 0.0f64..1.0) {
        let spec = MomentSpec::new(MomentKind::Plain, vec![m, 2], vec![0.0, dt], vec![n, n]).unwrap();
        let model = ensemble(kind, complex);
        let a = exact_mixed_moment_with(&spec, &model, ExactOptions { skip_odd: true }).unwrap();
        let b = exact_mixed_moment_with(&spec, &model, ExactOptions { skip_odd: false }).unwrap();
        prop_assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
    }
}

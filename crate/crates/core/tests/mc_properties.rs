//! Monte Carlo invariants of the samplers and the verification harness.

use mvcheb::chebyshev::chebyshev_coverage_bound;
use mvcheb::mc::{
    empirical_coverage, mean_mahalanobis_sq, sample, verify_bound, verify_bound_with, Execution,
    FamilyKind, MomentsMode, SamplerSpec,
};
use mvcheb::{fit_moments, whitener_for, Divisor, Matrix, SampleSet};

fn whitened(spec: &SamplerSpec, data: &SampleSet) -> SampleSet {
    let w = whitener_for(&spec.true_model().unwrap()).unwrap();
    let mut out = Vec::with_capacity(data.count() * w.rank());
    for r in data.rows() {
        out.extend(w.whiten(r).unwrap());
    }
    SampleSet::from_flat(w.rank(), out).unwrap()
}

#[test]
fn whitened_sample_covariance_is_identity() {
    for kind in FamilyKind::ALL {
        for n in [1, 2, 5] {
            let spec = SamplerSpec::standard(kind, n, 5.0).unwrap();
            let data = sample(&spec, 200_000, 31).unwrap();
            let y = fit_moments(&whitened(&spec, &data), Divisor::Population).unwrap();
            let err = y.cov().as_matrix().max_abs_diff(&Matrix::identity(n));
            assert!(err <= 0.02, "{kind} n={n}: max deviation {err}");
        }
    }
}

#[test]
fn mean_of_z_is_dimension() {
    for kind in FamilyKind::ALL {
        for n in [1, 2, 5, 10] {
            let spec = SamplerSpec::standard(kind, n, 5.0).unwrap();
            // Var(Z) = 3(n^2 + 2n) for student_t(5): needs more draws for the same band
            let count = match kind {
                FamilyKind::StudentT => 2_000_000,
                _ => 200_000,
            };
            let data = sample(&spec, count, 17).unwrap();
            let w = whitener_for(&spec.true_model().unwrap()).unwrap();
            let m = mean_mahalanobis_sq(&w, &data).unwrap();
            assert!((m - n as f64).abs() <= 0.05, "{kind} n={n}: mean Z = {m}");
        }
    }
}

#[test]
fn rank_deficient_bound_is_tighter() {
    let map = Matrix::from_rows(&[
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [1.0, -1.0, 0.5],
        [0.3, 0.3, 0.3],
        [2.0, 0.0, -1.0],
    ])
    .unwrap();
    let spec = SamplerSpec::standard(FamilyKind::GaussianMixture, 3, 5.0)
        .unwrap()
        .embed(map, vec![0.0; 6])
        .unwrap();
    let data = sample(&spec, 100_000, 12).unwrap();
    let model = fit_moments(&data, Divisor::Population).unwrap();
    assert_eq!(model.rank(), 3);
    let w = whitener_for(&model).unwrap();
    for eps in [6.0, 12.0, 30.0] {
        let cov = empirical_coverage(&w, &data, eps).unwrap();
        let tight = chebyshev_coverage_bound(3, eps).unwrap();
        let loose = chebyshev_coverage_bound(6, eps).unwrap();
        assert!(tight > loose);
        assert!(cov >= tight - 0.005, "eps={eps}: {cov} < {tight}");
    }
}

#[test]
fn fitted_and_true_modes_agree_closely() {
    let spec = SamplerSpec::standard(FamilyKind::Gaussian, 4, 5.0).unwrap();
    let t = verify_bound(&spec, &[16.0], 200_000, 5, MomentsMode::True).unwrap();
    let f = verify_bound(&spec, &[16.0], 200_000, 5, MomentsMode::Fitted).unwrap();
    assert_eq!(t.rows[0].row_seed, f.rows[0].row_seed);
    assert!((t.rows[0].empirical_coverage - f.rows[0].empirical_coverage).abs() < 0.002);
}

#[test]
fn reports_are_reproducible_and_mode_independent() {
    for kind in FamilyKind::ALL {
        let spec = SamplerSpec::standard(kind, 3, 7.0).unwrap();
        let eps = [3.0, 12.0, 30.0];
        let a = verify_bound_with(
            &spec,
            &eps,
            40_000,
            99,
            MomentsMode::True,
            Execution::Sequential,
        )
        .unwrap();
        let b = verify_bound_with(
            &spec,
            &eps,
            40_000,
            99,
            MomentsMode::True,
            Execution::Parallel,
        )
        .unwrap();
        let c = verify_bound(&spec, &eps, 40_000, 99, MomentsMode::True).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&c).unwrap()
        );
    }
}

#[test]
fn vacuous_rows_are_never_flagged() {
    let spec = SamplerSpec::standard(FamilyKind::StudentT, 5, 3.0).unwrap();
    let r = verify_bound(&spec, &[0.5, 5.0], 10_000, 1, MomentsMode::True).unwrap();
    for row in &r.rows {
        assert_eq!(row.chebyshev_lower, 0.0);
        assert!(!row.violated);
        assert!(row.slack >= 0.0);
    }
}

//! Monte Carlo properties of the harness and estimators at desk scale.

use trunctail::experiments::{
    acceptance_rate, generate_truncated, median, replicate_rng, run_bias_rmse, run_clt_check,
    simulate_evi, tail_deviation_draws, ExperimentSpec,
};
use trunctail::{EstimatorKind, HeavyTailModel};

fn burr_pair() -> (HeavyTailModel, HeavyTailModel) {
    (
        HeavyTailModel::burr(10.0, 4.0, 1.0).unwrap(),
        HeavyTailModel::burr(10.0, 2.0, 1.0).unwrap(),
    )
}

#[test]
fn pareto_acceptance_rate_matches_closed_form() {
    let x = HeavyTailModel::pareto(0.25, 1.0).unwrap();
    let y = HeavyTailModel::pareto(0.5, 1.0).unwrap();
    let rate = acceptance_rate(&x, &y, 100_000, &mut replicate_rng(2024, 0));
    assert!((rate - 2.0 / 3.0).abs() < 0.01, "{rate}");
}

#[test]
fn untruncated_clt_matches_hill_variance() {
    // Y is never below X in practice, so p = 1 and the estimator is Hill's.
    let x = HeavyTailModel::pareto(0.25, 1.0).unwrap();
    let y = HeavyTailModel::pareto(10.0, 1e12).unwrap();
    let report = run_clt_check(&x, &y, 5000, 100, 1000, 42).unwrap();
    let variance = report.variance.unwrap();
    assert_eq!(report.failures, 0);
    assert!((variance / 0.0625 - 1.0).abs() < 0.25, "{variance}");
    assert!(report.ks.unwrap() < 0.06);
}

#[test]
fn moderate_truncation_clt_matches_asymptotic_variance() {
    let x = HeavyTailModel::pareto(0.25, 1.0).unwrap();
    let y = HeavyTailModel::pareto(2.0, 1.0).unwrap();
    let report = run_clt_check(&x, &y, 5000, 100, 2000, 8).unwrap();
    let ratio = report.variance_ratio.unwrap();
    assert!((ratio - 1.0).abs() < 0.15, "{ratio}");
}

#[test]
fn consistency_sweep_at_fixed_fraction() {
    let (x, y) = burr_pair();
    let replicates = 400;
    let mut rows = Vec::new();
    for n in [200usize, 800, 3200] {
        let spec = ExperimentSpec {
            model_x: x,
            model_y: y,
            n,
            replicates,
            k_grid: vec![n / 4],
            p_n: None,
            seed: 31,
        };
        let table = simulate_evi(&spec).unwrap();
        let lb = table.kinds.iter().position(|&k| k == EstimatorKind::LyndenBellHill).unwrap();
        let errors: Vec<f64> = table.cell(lb, 0).map(|g| g - 0.25).collect();
        let count = errors.len() as f64;
        let bias = errors.iter().sum::<f64>() / count;
        let sd = (errors.iter().map(|e| (e - bias).powi(2)).sum::<f64>() / count).sqrt();
        let mse = errors.iter().map(|e| e * e).sum::<f64>() / count;
        let sq_sd = (errors.iter().map(|e| (e * e - mse).powi(2)).sum::<f64>() / count).sqrt();
        let rmse = mse.sqrt();
        rows.push((bias.abs(), sd / count.sqrt(), rmse, sq_sd / (2.0 * rmse * count.sqrt())));
    }
    for w in rows.windows(2) {
        let (b0, se_b0, r0, se_r0) = w[0];
        let (b1, se_b1, r1, se_r1) = w[1];
        assert!(b1 <= b0 + 2.0 * (se_b0 + se_b1), "{rows:?}");
        assert!(r1 <= r0 + 2.0 * (se_r0 + se_r1), "{rows:?}");
    }
}

#[test]
fn lynden_bell_tail_deviation_does_not_explode() {
    let (x, y) = burr_pair();
    let small = tail_deviation_draws(&x, &y, 500, 0.1, 300, 17).unwrap();
    let large = tail_deviation_draws(&x, &y, 2000, 0.1, 300, 18).unwrap();
    let (m_small, m_large) = (median(&small).unwrap(), median(&large).unwrap());
    assert!(m_large <= 2.0 * m_small, "{m_small} vs {m_large}");
    assert!(m_small <= 2.0 * m_large, "{m_small} vs {m_large}");
}

#[test]
fn curves_are_reproducible() {
    let (x, y) = burr_pair();
    let spec = ExperimentSpec {
        model_x: x,
        model_y: y,
        n: 200,
        replicates: 50,
        k_grid: vec![20, 40, 80],
        p_n: None,
        seed: 5,
    };
    let a = run_bias_rmse(&spec).unwrap();
    let b = run_bias_rmse(&spec).unwrap();
    assert_eq!(a, b);
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let c = single.install(|| run_bias_rmse(&spec).unwrap());
    assert_eq!(a, c);
}

#[test]
fn one_replicate_sample_is_the_stream_sample() {
    let (x, y) = burr_pair();
    let s1 = generate_truncated(&x, &y, 100, &mut replicate_rng(9, 3)).unwrap();
    let s2 = generate_truncated(&x, &y, 100, &mut replicate_rng(9, 3)).unwrap();
    assert_eq!(s1.pairs(), s2.pairs());
}

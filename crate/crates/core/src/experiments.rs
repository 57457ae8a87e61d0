//! Truncated-sample generation and the Monte Carlo harness.
//!
//! Replicate `r` of an experiment seeded with `seed` draws from its own
//! ChaCha stream `(seed, r)`, so results do not depend on how replicates are
//! scheduled across threads. Estimator failures (degenerate Lynden-Bell mass,
//! degenerate Gardes-Stupfler combination, extrapolation order) are counted
//! per cell and excluded from the moments.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;
use crate::models::{HeavyTailModel, UniformSource};
use crate::sample::ObservedSample;
use crate::theory;

/// Independent stream for replicate `replicate` of an experiment.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

const MIN_DRAW_BUDGET: u64 = 1_000_000;

/// Draws `(X, Y)` pairs until `n` of them satisfy `X <= Y`.
///
/// Gives up once the attempt count exceeds `max(1e6, 1000 n / p_hat)`, with
/// `p_hat` the acceptance rate over the first `1e6` attempts.
pub fn generate_truncated<U: UniformSource + ?Sized>(
    model_x: &HeavyTailModel,
    model_y: &HeavyTailModel,
    n: usize,
    source: &mut U,
) -> Result<ObservedSample> {
    if n == 0 {
        return Err(Error::InvalidParameter("sample size must be at least 1".into()));
    }
    let mut pairs = Vec::with_capacity(n);
    let mut attempts = 0u64;
    let mut budget = u64::MAX;
    while pairs.len() < n {
        if attempts == MIN_DRAW_BUDGET {
            if pairs.is_empty() {
                return Err(Error::GenerationStall { attempts, kept: 0 });
            }
            let p_hat = pairs.len() as f64 / attempts as f64;
            budget = MIN_DRAW_BUDGET.max((1000.0 * n as f64 / p_hat).min(u64::MAX as f64) as u64);
        }
        if attempts >= budget {
            return Err(Error::GenerationStall { attempts, kept: pairs.len() });
        }
        attempts += 1;
        let x = model_x.draw(source);
        let y = model_y.draw(source);
        if x <= y {
            pairs.push((x, y));
        }
    }
    ObservedSample::new(pairs)
}

/// Monte Carlo estimate of `P(X <= Y)`.
pub fn acceptance_rate<U: UniformSource + ?Sized>(
    model_x: &HeavyTailModel,
    model_y: &HeavyTailModel,
    draws: usize,
    source: &mut U,
) -> f64 {
    let kept = (0..draws)
        .filter(|_| {
            let x = model_x.draw(source);
            model_y.draw(source) >= x
        })
        .count();
    kept as f64 / draws as f64
}

/// `k` grid `{10, 15, ..., 150}` restricted to `k < n`.
pub fn default_k_grid(n: usize) -> Vec<usize> {
    (10..=150).step_by(5).filter(|&k| k < n).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub model_x: HeavyTailModel,
    pub model_y: HeavyTailModel,
    pub n: usize,
    pub replicates: usize,
    pub k_grid: Vec<usize>,
    pub p_n: Option<f64>,
    pub seed: u64,
}

impl ExperimentSpec {
    /// Checks hard constraints; returns soft warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!("n must be at least 2, got {}", self.n)));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidParameter("replicates must be at least 1".into()));
        }
        if self.k_grid.is_empty() {
            return Err(Error::InvalidParameter("k grid is empty".into()));
        }
        if self.k_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("k grid must be strictly increasing".into()));
        }
        if let Some(&k) = self.k_grid.iter().find(|&&k| k == 0 || k >= self.n) {
            return Err(Error::InvalidParameter(format!(
                "k = {k} outside [1, {}]",
                self.n - 1
            )));
        }
        if let Some(p) = self.p_n {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::InvalidParameter(format!("p_n must lie in (0, 1), got {p}")));
            }
        }
        let mut warnings = Vec::new();
        if self.model_x.evi() >= self.model_y.evi() {
            warnings.push(format!(
                "evi of {} is not below evi of {}; the Lynden-Bell estimator is outside its theory",
                self.model_x, self.model_y
            ));
        }
        Ok(warnings)
    }
}

/// Raw per-replicate statistics: `values[r][j][i]` is the statistic of
/// replicate `r`, estimator `kinds[j]`, at `k_grid[i]`; `None` marks a failure.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateTable {
    pub k_grid: Vec<usize>,
    pub kinds: Vec<EstimatorKind>,
    pub values: Vec<Vec<Vec<Option<f64>>>>,
}

impl ReplicateTable {
    /// Successful values for one cell, in replicate order.
    pub fn cell(&self, kind_index: usize, k_index: usize) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().filter_map(move |r| r[kind_index][k_index])
    }
}

/// Runs `statistic` on every replicate sample, estimator kind and `k`.
/// Replicates run in parallel; the table is ordered by replicate index.
pub fn simulate<S>(spec: &ExperimentSpec, kinds: &[EstimatorKind], statistic: S) -> Result<ReplicateTable>
where
    S: Fn(&ObservedSample, EstimatorKind, usize) -> Result<f64> + Sync,
{
    spec.validate()?;
    let values = (0..spec.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(spec.seed, r);
            let sample = generate_truncated(&spec.model_x, &spec.model_y, spec.n, &mut rng)?;
            Ok(kinds
                .iter()
                .map(|&kind| {
                    spec.k_grid
                        .iter()
                        .map(|&k| statistic(&sample, kind, k).ok().filter(|v| v.is_finite()))
                        .collect()
                })
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReplicateTable { k_grid: spec.k_grid.clone(), kinds: kinds.to_vec(), values })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellStats {
    pub mean: f64,
    pub bias: f64,
    /// Population variance over successful replicates.
    pub variance: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveCell {
    pub k: usize,
    pub kind: EstimatorKind,
    pub replicates: usize,
    pub failures: usize,
    /// `None` when every replicate failed.
    pub stats: Option<CellStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveResult {
    /// Sorted by `k`, then estimator name.
    pub cells: Vec<CurveCell>,
}

impl CurveResult {
    pub fn get(&self, k: usize, kind: EstimatorKind) -> Option<&CurveCell> {
        self.cells.iter().find(|c| c.k == k && c.kind == kind)
    }

    /// Cells of one estimator, in increasing `k`.
    pub fn curve(&self, kind: EstimatorKind) -> impl Iterator<Item = &CurveCell> {
        self.cells.iter().filter(move |c| c.kind == kind)
    }
}

fn cell_stats(values: &[f64], target: f64) -> Option<CellStats> {
    if values.is_empty() {
        return None;
    }
    let count = values.len() as f64;
    let mean = values.iter().sum::<f64>() / count;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / count;
    let mse = values.iter().map(|v| (v - target).powi(2)).sum::<f64>() / count;
    Some(CellStats { mean, bias: mean - target, variance, rmse: mse.sqrt() })
}

/// Bias, variance and RMSE of each cell against `target`.
pub fn aggregate(table: &ReplicateTable, target: f64) -> CurveResult {
    let mut cells = Vec::with_capacity(table.k_grid.len() * table.kinds.len());
    for (i, &k) in table.k_grid.iter().enumerate() {
        for (j, &kind) in table.kinds.iter().enumerate() {
            let values: Vec<f64> = table.cell(j, i).collect();
            cells.push(CurveCell {
                k,
                kind,
                replicates: table.values.len(),
                failures: table.values.len() - values.len(),
                stats: cell_stats(&values, target),
            });
        }
    }
    cells.sort_by(|a, b| a.k.cmp(&b.k).then_with(|| a.kind.name().cmp(b.kind.name())));
    CurveResult { cells }
}

/// The tail-index statistic used by [`run_bias_rmse`].
pub fn evi_statistic(sample: &ObservedSample, kind: EstimatorKind, k: usize) -> Result<f64> {
    match kind {
        EstimatorKind::LyndenBellHill => sample.evi_lynden_bell(k).map(|e| e.value),
        EstimatorKind::GardesStupfler => sample.evi_gardes_stupfler(k, k).map(|e| e.value),
        EstimatorKind::Hill => {
            let xs: Vec<f64> = sample.pairs().iter().map(|p| p.0).collect();
            crate::estimators::hill(&xs, k)
        }
    }
}

pub fn simulate_evi(spec: &ExperimentSpec) -> Result<ReplicateTable> {
    simulate(
        spec,
        &[EstimatorKind::GardesStupfler, EstimatorKind::LyndenBellHill],
        evi_statistic,
    )
}

/// Bias/RMSE curves of the Lynden-Bell Hill and Gardes-Stupfler (`k1 = k2`)
/// estimators of the extreme value index of `model_x`.
pub fn run_bias_rmse(spec: &ExperimentSpec) -> Result<CurveResult> {
    Ok(aggregate(&simulate_evi(spec)?, spec.model_x.evi()))
}

/// Per-replicate relative errors `x_hat / x_{p_n} - 1` of the Weissman quantile.
pub fn simulate_quantile(spec: &ExperimentSpec) -> Result<ReplicateTable> {
    let p_n = spec
        .p_n
        .ok_or_else(|| Error::InvalidParameter("quantile experiment needs p_n".into()))?;
    let target = spec.model_x.inverse_survival(p_n)?;
    simulate(spec, &[EstimatorKind::LyndenBellHill], |sample, _, k| {
        sample.quantile_weissman(k, p_n).map(|q| q / target - 1.0)
    })
}

/// Bias/RMSE curves of the relative error of the Weissman quantile estimate.
pub fn run_quantile_curve(spec: &ExperimentSpec) -> Result<CurveResult> {
    Ok(aggregate(&simulate_quantile(spec)?, 0.0))
}

/// Summary of standardized estimates `sqrt(rate) (gamma_hat - gamma1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CltReport {
    pub n: usize,
    pub k: usize,
    pub replicates: usize,
    pub failures: usize,
    /// `(p / alpha) k`, the stand-in for `n Hbar(t)`.
    pub rate: f64,
    pub s2: f64,
    pub mean: Option<f64>,
    /// Unbiased sample variance; `None` with fewer than two successes.
    pub variance: Option<f64>,
    pub variance_ratio: Option<f64>,
    /// Kolmogorov-Smirnov distance to the normal law with matched moments.
    pub ks: Option<f64>,
}

/// Empirical check of the asymptotic normality of the Lynden-Bell Hill
/// estimator at fixed `k`.
pub fn run_clt_check(
    model_x: &HeavyTailModel,
    model_y: &HeavyTailModel,
    n: usize,
    k: usize,
    replicates: usize,
    seed: u64,
) -> Result<CltReport> {
    let (g1, g2) = (model_x.evi(), model_y.evi());
    let p = theory::nontruncation_prob(model_x, model_y)?;
    let s2 = theory::variance(p, g1, g2)?;
    let rate = theory::rate_bridge(p, g1, g2, k as f64);
    let spec = ExperimentSpec {
        model_x: *model_x,
        model_y: *model_y,
        n,
        replicates,
        k_grid: vec![k],
        p_n: None,
        seed,
    };
    let table = simulate(&spec, &[EstimatorKind::LyndenBellHill], evi_statistic)?;
    let z: Vec<f64> = table.cell(0, 0).map(|g| rate.sqrt() * (g - g1)).collect();
    let failures = replicates - z.len();
    let count = z.len() as f64;
    let mean = (!z.is_empty()).then(|| z.iter().sum::<f64>() / count);
    let variance = match (mean, z.len()) {
        (Some(m), len) if len >= 2 => Some(z.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (count - 1.0)),
        _ => None,
    };
    let ks = match (mean, variance) {
        (Some(m), Some(v)) if v > 0.0 => Some(ks_normal(&z, m, v.sqrt())),
        _ => None,
    };
    Ok(CltReport {
        n,
        k,
        replicates,
        failures,
        rate,
        s2,
        mean,
        variance,
        variance_ratio: variance.map(|v| v / s2),
        ks,
    })
}

/// Kolmogorov-Smirnov distance between the empirical law of `values` and
/// `N(mean, sd^2)`.
pub fn ks_normal(values: &[f64], mean: f64, sd: f64) -> f64 {
    let normal = Normal::new(mean, sd).expect("positive standard deviation");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let count = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = normal.cdf(v);
            (f - i as f64 / count).max((i + 1) as f64 / count - f)
        })
        .fold(0.0, f64::max)
}

/// `sup_{x > t} |F_n(x) - F(x)|` for the Lynden-Bell estimate `F_n`.
pub fn tail_sup_deviation(sample: &ObservedSample, model_x: &HeavyTailModel, t: f64) -> f64 {
    let start = sample.rank(t);
    let xs = sample.sorted_x();
    let mut sup = (sample.lynden_bell_at_rank(start) - model_x.cdf(t)).abs();
    for (i, &x) in xs.iter().enumerate().skip(start) {
        let f = model_x.cdf(x);
        let left = sample.lynden_bell_at_rank(i);
        let right = sample.lynden_bell_at_rank(i + 1);
        sup = sup.max((left - f).abs()).max((right - f).abs());
    }
    sup
}

/// Per-replicate `sqrt(n) sup_{x > t} |F_n(x) - F(x)|` with `t` the
/// `tail_level` upper quantile of `model_x`.
pub fn tail_deviation_draws(
    model_x: &HeavyTailModel,
    model_y: &HeavyTailModel,
    n: usize,
    tail_level: f64,
    replicates: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let t = model_x.inverse_survival(tail_level)?;
    (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, r);
            let sample = generate_truncated(model_x, model_y, n, &mut rng)?;
            Ok((n as f64).sqrt() * tail_sup_deviation(&sample, model_x, t))
        })
        .collect()
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Some(if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    })
}

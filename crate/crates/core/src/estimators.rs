//! Tail-index and extreme-quantile estimators for truncated samples.
//!
//! The main estimator is a Hill-type Lynden-Bell integral:
//!
//! ```text
//! gamma_hat = 1 / (n (1 - F_n(t))) * sum_{x*_i > t} log(x*_i / t) F_n(x*_i) / C_n(x*_i)
//! ```
//!
//! where `F_n(x*_i)` is the right-continuous value at the jump. With no
//! truncation the weights `F_n / C_n` are identically one and the estimator
//! is the classical Hill estimator. Extreme quantiles follow by Weissman
//! extrapolation from the same threshold.

use std::fmt;

use crate::error::{Error, Result};
use crate::sample::ObservedSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EstimatorKind {
    GardesStupfler,
    Hill,
    LyndenBellHill,
}

impl EstimatorKind {
    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::GardesStupfler => "gardes-stupfler",
            EstimatorKind::Hill => "hill",
            EstimatorKind::LyndenBellHill => "lynden-bell-hill",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [EstimatorKind::GardesStupfler, EstimatorKind::Hill, EstimatorKind::LyndenBellHill]
            .into_iter()
            .find(|k| k.name() == name)
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A tail-index estimate together with its threshold bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct EviEstimate {
    pub value: f64,
    /// Number of exceedances used.
    pub k: usize,
    pub threshold: f64,
    pub kind: EstimatorKind,
    /// Estimated probability of exceeding the threshold: `1 - F_n(t)` for the
    /// Lynden-Bell estimator, `k / n` otherwise.
    pub tail_mass: f64,
    /// Largest point with `n C_n = 1`, when present (Lynden-Bell only).
    pub degenerate_mass_at: Option<f64>,
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k >= n {
        Err(Error::Domain(format!("k must satisfy 1 <= k < n = {n}, got {k}")))
    } else {
        Ok(())
    }
}

impl ObservedSample {
    /// Random threshold `X*_{n-k,n}`: exactly `k` observations lie above it.
    pub fn threshold(&self, k: usize) -> Result<f64> {
        check_k(k, self.len())?;
        Ok(self.sorted_x()[self.len() - k - 1])
    }

    /// Lynden-Bell Hill estimate at the random threshold `X*_{n-k,n}`.
    pub fn evi_lynden_bell(&self, k: usize) -> Result<EviEstimate> {
        let t = self.threshold(k)?;
        self.lynden_bell_hill(self.len() - k, t)
    }

    /// Lynden-Bell Hill estimate at a deterministic threshold `t`.
    pub fn evi_lynden_bell_at(&self, t: f64) -> Result<EviEstimate> {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::Domain(format!("threshold must be positive, got {t}")));
        }
        let rank = self.rank(t);
        if rank == self.len() {
            return Err(Error::Domain(format!("no observation exceeds the threshold {t}")));
        }
        self.lynden_bell_hill(rank, t)
    }

    fn lynden_bell_hill(&self, rank: usize, t: f64) -> Result<EviEstimate> {
        let n = self.len();
        let f_t = self.lynden_bell_at_rank(rank);
        if f_t <= 0.0 {
            return Err(self.degenerate_error(t));
        }
        let tail_mass = 1.0 - f_t;
        let xs = self.sorted_x();
        let cover = self.coverage_counts();
        let nf = n as f64;
        let sum: f64 = (rank..n)
            .map(|i| {
                let weight = self.lynden_bell_at_rank(i + 1) / (cover[i] as f64 / nf);
                (xs[i] / t).ln() * weight
            })
            .sum();
        Ok(EviEstimate {
            value: sum / (nf * tail_mass),
            k: n - rank,
            threshold: t,
            kind: EstimatorKind::LyndenBellHill,
            tail_mass,
            degenerate_mass_at: self.degenerate_point(),
        })
    }

    /// Gardes-Stupfler estimate from Hill estimates on the `x*` (top `k1`)
    /// and `y*` (top `k2`) columns.
    pub fn evi_gardes_stupfler(&self, k1: usize, k2: usize) -> Result<EviEstimate> {
        let n = self.len();
        check_k(k1, n)?;
        check_k(k2, n)?;
        let x_top = top_hill(self.sorted_x(), k1);
        let y_top = top_hill(self.sorted_y(), k2);
        Ok(EviEstimate {
            value: combine_gardes_stupfler(x_top, y_top)?,
            k: k1,
            threshold: self.sorted_x()[n - k1 - 1],
            kind: EstimatorKind::GardesStupfler,
            tail_mass: k1 as f64 / n as f64,
            degenerate_mass_at: None,
        })
    }

    /// Weissman extreme quantile of order `1 - p_n` from the threshold
    /// `X*_{n-k,n}`.
    pub fn quantile_weissman(&self, k: usize, p_n: f64) -> Result<f64> {
        let est = self.evi_lynden_bell(k)?;
        weissman_checked(&est, p_n)
    }

    /// Weissman extreme quantile from a deterministic threshold `t`.
    pub fn quantile_weissman_at(&self, t: f64, p_n: f64) -> Result<f64> {
        let est = self.evi_lynden_bell_at(t)?;
        weissman_checked(&est, p_n)
    }
}

fn weissman_checked(est: &EviEstimate, p_n: f64) -> Result<f64> {
    if !(p_n > 0.0 && p_n < est.tail_mass) {
        return Err(Error::ExtrapolationOrder { p_n, tail: est.tail_mass });
    }
    Ok(weissman_extrapolate(est.threshold, est.tail_mass, p_n, est.value))
}

/// `t (tail_mass / p_n)^gamma`.
pub fn weissman_extrapolate(t: f64, tail_mass: f64, p_n: f64, gamma: f64) -> f64 {
    t * (tail_mass / p_n).powf(gamma)
}

/// `g1 g2 / (g2 - g1)`, inverting `g1 = g g2 / (g + g2)` for `g`.
pub fn combine_gardes_stupfler(x_star_evi: f64, y_star_evi: f64) -> Result<f64> {
    let denom = y_star_evi - x_star_evi;
    if denom == 0.0 {
        return Err(Error::DegenerateCombination { value: x_star_evi });
    }
    if y_star_evi.is_infinite() {
        return Ok(x_star_evi);
    }
    Ok(x_star_evi * y_star_evi / denom)
}

/// Hill estimator on ascending-sorted positive data.
fn top_hill(sorted: &[f64], k: usize) -> f64 {
    let n = sorted.len();
    let t = sorted[n - k - 1];
    sorted[n - k..].iter().map(|&x| (x / t).ln()).sum::<f64>() / k as f64
}

/// Classical Hill estimator: mean log-excess of the top `k` order statistics
/// over the `(k+1)`-th largest.
pub fn hill(values: &[f64], k: usize) -> Result<f64> {
    check_k(k, values.len())?;
    if let Some(&bad) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(Error::Domain(format!("Hill estimator needs positive values, got {bad}")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(top_hill(&sorted, k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_point() -> ObservedSample {
        ObservedSample::new(vec![(1.0, 3.0), (2.0, 2.0)]).unwrap()
    }

    #[test]
    fn hill_examples() {
        let v = [1.0, 2.0, 4.0, 8.0];
        assert_relative_eq!(hill(&v, 3).unwrap(), 2.0 * 2f64.ln(), max_relative = 1e-15);
        assert_eq!(hill(&[3.0; 5], 2).unwrap(), 0.0);
        assert_relative_eq!(hill(&v, 1).unwrap(), 2f64.ln(), max_relative = 1e-15);
        assert!(matches!(hill(&[1.0, 0.0, 2.0], 1), Err(Error::Domain(_))));
        assert!(matches!(hill(&v, 4), Err(Error::Domain(_))));
        assert!(matches!(hill(&v, 0), Err(Error::Domain(_))));
    }

    #[test]
    fn two_point_lynden_bell_estimate() {
        // t = X*_{1,2} = 1, one exceedance at 2 with F_n(2) = 1, C_n(2) = 1,
        // F_n(1) = 1/2, so gamma = log 2 * 1 / (2 * 1/2) = log 2.
        let est = two_point().evi_lynden_bell(1).unwrap();
        assert_eq!(est.threshold, 1.0);
        assert_eq!(est.k, 1);
        assert_eq!(est.tail_mass, 0.5);
        assert_relative_eq!(est.value, 2f64.ln(), max_relative = 1e-15);
        assert_eq!(est.degenerate_mass_at, Some(1.0));
    }

    #[test]
    fn degenerate_threshold_is_an_error() {
        // Point 3 is covered only by itself: n C_n(3) = 1 above the minimum.
        let s = ObservedSample::new(vec![(1.0, 2.0), (3.0, 4.0), (5.0, 6.0)]).unwrap();
        assert_eq!(s.degenerate_point(), Some(5.0));
        match s.evi_lynden_bell(2) {
            Err(Error::DegenerateMass { t, threshold }) => {
                assert_eq!(t, 5.0);
                assert_eq!(threshold, 1.0);
            }
            other => panic!("expected degenerate mass, got {other:?}"),
        }
    }

    #[test]
    fn k_out_of_range() {
        let s = two_point();
        assert!(matches!(s.evi_lynden_bell(0), Err(Error::Domain(_))));
        assert!(matches!(s.evi_lynden_bell(2), Err(Error::Domain(_))));
        assert!(matches!(s.evi_gardes_stupfler(1, 2), Err(Error::Domain(_))));
    }

    #[test]
    fn gardes_stupfler_combination() {
        assert_relative_eq!(
            combine_gardes_stupfler(1.0 / 6.0, 0.5).unwrap(),
            0.25,
            max_relative = 1e-14
        );
        assert!(matches!(
            combine_gardes_stupfler(0.3, 0.3),
            Err(Error::DegenerateCombination { .. })
        ));
        let far = combine_gardes_stupfler(0.2, 1e12).unwrap();
        assert_relative_eq!(far, 0.2, max_relative = 1e-10);
        assert_eq!(combine_gardes_stupfler(0.2, f64::INFINITY).unwrap(), 0.2);
    }

    #[test]
    fn gardes_stupfler_on_sample() {
        let pairs: Vec<(f64, f64)> =
            vec![(1.0, 2.0), (2.0, 8.0), (4.0, 32.0), (8.0, 128.0), (0.5, 0.75)];
        let s = ObservedSample::new(pairs).unwrap();
        let x: Vec<f64> = s.pairs().iter().map(|p| p.0).collect();
        let y: Vec<f64> = s.pairs().iter().map(|p| p.1).collect();
        let g1 = hill(&x, 3).unwrap();
        let g2 = hill(&y, 3).unwrap();
        let est = s.evi_gardes_stupfler(3, 3).unwrap();
        assert_relative_eq!(est.value, g1 * g2 / (g2 - g1), max_relative = 1e-14);
        assert_eq!(est.threshold, 1.0);
        assert_eq!(est.kind, EstimatorKind::GardesStupfler);
    }

    #[test]
    fn weissman_formula() {
        assert_relative_eq!(
            weissman_extrapolate(2.0, 0.1, 0.01, 0.25),
            2.0 * 10f64.powf(0.25),
            max_relative = 1e-15
        );
        assert_relative_eq!(weissman_extrapolate(2.0, 0.1, 0.01, 0.25), 3.5566, epsilon = 1e-4);
        assert_eq!(weissman_extrapolate(2.0, 0.1, 0.01, 0.0), 2.0);
        assert_eq!(weissman_extrapolate(3.0, 0.05, 0.05, 0.7), 3.0);
    }

    #[test]
    fn weissman_on_sample() {
        let s = two_point();
        // tail mass 1/2, gamma log 2, t = 1
        let q = s.quantile_weissman(1, 0.125).unwrap();
        assert_relative_eq!(q, 4f64.powf(2f64.ln()), max_relative = 1e-14);
        assert!(q > 1.0);
        assert!(matches!(
            s.quantile_weissman(1, 0.5),
            Err(Error::ExtrapolationOrder { .. })
        ));
        assert!(matches!(
            s.quantile_weissman(1, 0.0),
            Err(Error::ExtrapolationOrder { .. })
        ));
    }

    #[test]
    fn deterministic_threshold_variant() {
        let s = two_point();
        let a = s.evi_lynden_bell_at(1.5).unwrap();
        // exceedance 2 only, F_n(1.5) = 1/2
        assert_relative_eq!(a.value, (2.0f64 / 1.5).ln(), max_relative = 1e-14);
        assert_eq!(a.k, 1);
        assert!(matches!(s.evi_lynden_bell_at(2.0), Err(Error::Domain(_))));
        assert!(matches!(
            s.evi_lynden_bell_at(0.5),
            Err(Error::DegenerateMass { .. })
        ));
        assert!(s.quantile_weissman_at(1.5, 0.1).unwrap() > 1.5);
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in [EstimatorKind::GardesStupfler, EstimatorKind::Hill, EstimatorKind::LyndenBellHill] {
            assert_eq!(EstimatorKind::from_name(kind.name()), Some(kind));
        }
        assert_eq!(EstimatorKind::from_name("nope"), None);
    }
}

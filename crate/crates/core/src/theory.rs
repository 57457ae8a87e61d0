//! Asymptotic constants for the Lynden-Bell Hill estimator and quadrature
//! routines tying a model pair `(X, Y)` to them.
//!
//! Notation: `gamma1` and `gamma2` are the extreme value indices of the
//! truncated variable `X` and the truncating variable `Y`; the theory needs
//! `0 < gamma1 < gamma2`. `p = P(X <= Y)` is the overall non-truncation
//! probability and `alpha = gamma2 / (gamma1 + gamma2)` its limit in the tail.

use std::fmt;

use crate::error::{Error, Result};
use crate::models::HeavyTailModel;
use crate::quadrature;

const QUAD_TOL: f64 = 1e-10;
const QUAD_MAX_INTERVALS: usize = 4000;

fn check_ordered(gamma1: f64, gamma2: f64) -> Result<()> {
    if gamma1 > 0.0 && gamma1 < gamma2 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "need 0 < gamma1 < gamma2, got gamma1 = {gamma1}, gamma2 = {gamma2}"
        )))
    }
}

/// Limiting probability of non-truncation among tail observations.
pub fn alpha(gamma1: f64, gamma2: f64) -> f64 {
    gamma2 / (gamma1 + gamma2)
}

/// Mean-shift constant `m`: `gamma1^2 / (1 - gamma1 rho1)`, which reduces to
/// `gamma1^2` at `rho1 = 0`.
pub fn mean_shift(gamma1: f64, rho1: f64) -> Result<f64> {
    if rho1.is_nan() || rho1 > 0.0 {
        return Err(Error::Domain(format!("second-order index must be <= 0, got {rho1}")));
    }
    Ok(gamma1 * gamma1 / (1.0 - gamma1 * rho1))
}

/// Asymptotic variance `s^2 = p gamma1^2 (1 + r^2) / (1 - r)^3`, `r = gamma1 / gamma2`.
/// `gamma2 = inf` gives the untruncated Hill variance `p gamma1^2`.
pub fn variance(p: f64, gamma1: f64, gamma2: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Domain(format!("probability p must lie in (0, 1], got {p}")));
    }
    check_ordered(gamma1, gamma2)?;
    let r = gamma1 / gamma2;
    Ok(p * gamma1 * gamma1 * (1.0 + r * r) / (1.0 - r).powi(3))
}

/// `c_k = gamma1^k k! / (1 - gamma1/gamma2)^(k+1)`.
pub fn c_k(gamma1: f64, gamma2: f64, k: u32) -> Result<f64> {
    check_ordered(gamma1, gamma2)?;
    let q = 1.0 - gamma1 / gamma2;
    let factorial: f64 = (1..=k).map(f64::from).product();
    Ok(gamma1.powi(k as i32) * factorial / q.powi(k as i32 + 1))
}

/// `(p / alpha) k`: the value `n Hbar(t)` takes, to first order, at the
/// threshold `t` exceeded by a fraction `k / n` of the observed `x*`.
/// `Hbar = (1 - F)(1 - G)`.
pub fn rate_bridge(p: f64, gamma1: f64, gamma2: f64, k: f64) -> f64 {
    p / alpha(gamma1, gamma2) * k
}

/// `p = P(X <= Y) = integral of (1 - G) dF`, integrated in `u = F(x)`.
pub fn nontruncation_prob(model_x: &HeavyTailModel, model_y: &HeavyTailModel) -> Result<f64> {
    let integrand = |u: f64| match model_x.quantile(u) {
        Ok(x) => model_y.survival(x),
        Err(_) => 0.0,
    };
    let r = quadrature::integrate(integrand, 0.0, 1.0, QUAD_TOL, QUAD_MAX_INTERVALS)?;
    Ok(r.value.clamp(0.0, 1.0))
}

/// `integral_t^inf phi(x) dF(x)` written as `Fbar(t) * integral_0^1 phi(x(w)) m w^(m-1) dw`
/// with `Fbar(x(w)) = Fbar(t) w^m`. The power `m` flattens algebraic
/// singularities at `w = 0` (i.e. `x = inf`).
fn tail_integral<P: Fn(f64) -> f64>(
    model_x: &HeavyTailModel,
    t: f64,
    power: f64,
    phi: P,
) -> Result<f64> {
    let tail = model_x.survival(t);
    if !(tail > 0.0) {
        return Err(Error::Domain(format!("threshold {t} lies beyond the support of {model_x}")));
    }
    let integrand = |w: f64| {
        let s = tail * w.powf(power);
        if !(s > 0.0) {
            return 0.0;
        }
        match model_x.inverse_survival(s) {
            Ok(x) if x.is_finite() => {
                let v = phi(x) * power * w.powf(power - 1.0);
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            }
            _ => 0.0,
        }
    };
    let r = quadrature::integrate(integrand, 0.0, 1.0, QUAD_TOL, QUAD_MAX_INTERVALS)?;
    Ok(tail * r.value)
}

/// `(Gbar(t) / Fbar(t)) * integral_t^inf log^k(x/t) dF(x) / Gbar(x)`, which tends
/// to `c_k` as `t` grows and equals it for exact power tails.
pub fn lemma8_ratio(
    model_x: &HeavyTailModel,
    model_y: &HeavyTailModel,
    k: u32,
    t: f64,
) -> Result<f64> {
    let (g1, g2) = (model_x.evi(), model_y.evi());
    check_ordered(g1, g2)?;
    if !(t > 0.0 && t >= model_x.lower_endpoint() && t >= model_y.lower_endpoint()) {
        return Err(Error::Domain(format!("threshold {t} must lie inside both supports")));
    }
    let log_g_t = model_y.log_survival(t);
    // integrand behaves like Fbar^(-g1/g2) near x = inf
    let power = 2.0 / (1.0 - g1 / g2);
    let integral = tail_integral(model_x, t, power, |x| {
        (x / t).ln().powi(k as i32) * (log_g_t - model_y.log_survival(x)).exp()
    })?;
    Ok(integral / model_x.survival(t))
}

/// `integral_t^inf (1 - G) dF = p (1 - F*(t))`, the unnormalised tail of the
/// observed `x*` distribution.
pub fn observed_tail_mass(model_x: &HeavyTailModel, model_y: &HeavyTailModel, t: f64) -> Result<f64> {
    if t <= model_x.lower_endpoint() {
        return nontruncation_prob(model_x, model_y);
    }
    tail_integral(model_x, t, 1.0, |x| model_y.survival(x))
}

/// Threshold `t` with `1 - F*(t) = level`, where `F*` is the law of the
/// observed `x*`. Solved by bisection on `log t`.
pub fn observed_tail_quantile(
    model_x: &HeavyTailModel,
    model_y: &HeavyTailModel,
    p: f64,
    level: f64,
) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("tail level must lie in (0, 1), got {level}")));
    }
    let target = p * level;
    let excess = |t: f64| observed_tail_mass(model_x, model_y, t).map(|m| m - target);
    // 1 - F*(x) <= 1 - F(x) / p, so the X-quantile at level p * level bounds t above.
    let mut hi = model_x.inverse_survival(target)?.max(1e-300);
    let mut lo = model_x.inverse_survival(level)?.min(hi);
    while excess(lo)? < 0.0 {
        lo *= 0.5;
    }
    while excess(hi)? > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if excess(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-13 {
            break;
        }
    }
    Ok((lo * hi).sqrt())
}

/// `n Hbar(t)` at the threshold exceeded by a fraction `k / n` of the observed
/// `x*` (deterministic counterpart of the random threshold `X*_{n-k,n}`).
pub fn rate_at_observed_fraction(
    model_x: &HeavyTailModel,
    model_y: &HeavyTailModel,
    n: usize,
    k: usize,
) -> Result<f64> {
    let p = nontruncation_prob(model_x, model_y)?;
    let t = observed_tail_quantile(model_x, model_y, p, k as f64 / n as f64)?;
    Ok(n as f64 * model_x.survival(t) * model_y.survival(t))
}

/// Asymptotic constants for a model pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryConstants {
    pub gamma1: f64,
    pub gamma2: f64,
    pub rho1: Option<f64>,
    pub p: f64,
    pub alpha: f64,
    /// Present only when `rho1` is supplied.
    pub m: Option<f64>,
    pub s2: f64,
    /// `c_0, c_1, c_2`.
    pub c: [f64; 3],
}

impl TheoryConstants {
    pub fn new(model_x: &HeavyTailModel, model_y: &HeavyTailModel, rho1: Option<f64>) -> Result<Self> {
        let (gamma1, gamma2) = (model_x.evi(), model_y.evi());
        check_ordered(gamma1, gamma2)?;
        let p = nontruncation_prob(model_x, model_y)?;
        let m = rho1.map(|r| mean_shift(gamma1, r)).transpose()?;
        Ok(TheoryConstants {
            gamma1,
            gamma2,
            rho1,
            p,
            alpha: alpha(gamma1, gamma2),
            m,
            s2: variance(p, gamma1, gamma2)?,
            c: [c_k(gamma1, gamma2, 0)?, c_k(gamma1, gamma2, 1)?, c_k(gamma1, gamma2, 2)?],
        })
    }
}

impl fmt::Display for TheoryConstants {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "gamma1 = {}", self.gamma1)?;
        writeln!(f, "gamma2 = {}", self.gamma2)?;
        writeln!(f, "p = {}", self.p)?;
        writeln!(f, "alpha = {}", self.alpha)?;
        match (self.rho1, self.m) {
            (Some(rho1), Some(m)) => {
                writeln!(f, "rho1 = {rho1}")?;
                writeln!(f, "m = {m}")?;
            }
            _ => writeln!(f, "m = NA (requires rho1)")?,
        }
        writeln!(f, "s2 = {}", self.s2)?;
        for (k, c) in self.c.iter().enumerate() {
            writeln!(f, "c_{k} = {c}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn pareto_pair() -> (HeavyTailModel, HeavyTailModel) {
        (
            HeavyTailModel::pareto(0.25, 1.0).unwrap(),
            HeavyTailModel::pareto(0.5, 1.0).unwrap(),
        )
    }

    #[test]
    fn alpha_examples() {
        assert_relative_eq!(alpha(0.25, 0.5), 2.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(alpha(0.25, 2.0), 8.0 / 9.0, max_relative = 1e-15);
        assert_eq!(alpha(0.7, 0.7), 0.5);
    }

    #[test]
    fn mean_shift_examples() {
        assert_eq!(mean_shift(0.25, 0.0).unwrap(), 1.0 / 16.0);
        assert_relative_eq!(mean_shift(0.25, -1.0).unwrap(), 0.05, max_relative = 1e-15);
        assert_eq!(mean_shift(1.0, f64::NEG_INFINITY).unwrap(), 0.0);
        assert!(mean_shift(0.25, 0.1).is_err());
        // continuity at rho1 = 0
        assert_relative_eq!(mean_shift(0.25, -1e-12).unwrap(), 1.0 / 16.0, max_relative = 1e-12);
    }

    #[test]
    fn variance_examples() {
        assert_relative_eq!(variance(0.5, 0.25, 0.5).unwrap(), 0.3125, max_relative = 1e-15);
        assert_relative_eq!(variance(2.0 / 3.0, 0.25, 0.5).unwrap(), 5.0 / 12.0, max_relative = 1e-15);
        assert_relative_eq!(variance(0.8, 0.3, f64::INFINITY).unwrap(), 0.8 * 0.09, max_relative = 1e-15);
        assert!(variance(0.5, 0.5, 0.5).is_err());
        assert!(variance(0.0, 0.25, 0.5).is_err());
    }

    #[test]
    fn c_k_examples() {
        assert_relative_eq!(c_k(0.25, 0.5, 0).unwrap(), 2.0, max_relative = 1e-15);
        assert_relative_eq!(c_k(0.25, 0.5, 1).unwrap(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(c_k(0.25, 0.5, 2).unwrap(), 1.0, max_relative = 1e-15);
        assert!(c_k(0.5, 0.25, 1).is_err());
    }

    /// `J_k(theta) = integral_1^inf log^k(y) y^(-theta-1) dy`, by quadrature after
    /// `y = v^(-1/theta)`: `theta^(-k-1) integral_0^1 (-log v)^k dv`.
    fn j_k_by_quadrature(theta: f64, k: u32) -> f64 {
        let r = quadrature::integrate(
            |v: f64| if v > 0.0 { (-v.ln()).powi(k as i32) } else { 0.0 },
            0.0,
            1.0,
            1e-11,
            4000,
        )
        .unwrap();
        r.value / theta.powi(k as i32 + 1)
    }

    #[test]
    fn log_moment_recurrence() {
        for &theta in &[0.5, 2.0, 3.7] {
            for k in 1..5u32 {
                let lhs = k as f64 * j_k_by_quadrature(theta, k - 1);
                let rhs = theta * j_k_by_quadrature(theta, k);
                assert_relative_eq!(lhs, rhs, max_relative = 1e-8);
            }
            // and c_k = J_k(theta) / gamma1 with theta = 1/gamma1 - 1/gamma2
            let (g1, g2) = (0.25, 0.5);
            let theta = 1.0 / g1 - 1.0 / g2;
            for k in 0..4u32 {
                assert_relative_eq!(
                    c_k(g1, g2, k).unwrap(),
                    j_k_by_quadrature(theta, k) / g1,
                    max_relative = 1e-8
                );
            }
        }
    }

    #[test]
    fn nontruncation_prob_cases() {
        let (x, y) = pareto_pair();
        assert_abs_diff_eq!(nontruncation_prob(&x, &y).unwrap(), 2.0 / 3.0, epsilon = 1e-8);
        let b = HeavyTailModel::burr(10.0, 4.0, 1.0).unwrap();
        assert_abs_diff_eq!(nontruncation_prob(&b, &b).unwrap(), 0.5, epsilon = 1e-8);
        // Y starts where X ends its bulk: Pareto(., 1e6) survival is 1 below 1e6
        let far = HeavyTailModel::pareto(0.5, 1e6).unwrap();
        let small = HeavyTailModel::pareto(0.01, 1.0).unwrap();
        assert_abs_diff_eq!(nontruncation_prob(&small, &far).unwrap(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn nontruncation_probs_are_complementary() {
        let models = [
            HeavyTailModel::burr(10.0, 4.0, 1.0).unwrap(),
            HeavyTailModel::burr(10.0, 2.0, 1.0).unwrap(),
            HeavyTailModel::frechet(0.25).unwrap(),
            HeavyTailModel::frechet(2.0).unwrap(),
            HeavyTailModel::pareto(0.5, 1.0).unwrap(),
        ];
        for a in &models {
            for b in &models {
                let sum = nontruncation_prob(a, b).unwrap() + nontruncation_prob(b, a).unwrap();
                assert_abs_diff_eq!(sum, 1.0, epsilon = 2e-8);
            }
        }
    }

    #[test]
    fn tail_ratio_exact_for_pareto_pair() {
        let (x, y) = pareto_pair();
        for &t in &[1.0, 2.0, 10.0, 100.0] {
            for k in 0..3u32 {
                let r = lemma8_ratio(&x, &y, k, t).unwrap();
                assert_abs_diff_eq!(r, c_k(0.25, 0.5, k).unwrap(), epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn tail_ratio_burr_pair_approaches_c1() {
        let x = HeavyTailModel::burr(10.0, 4.0, 1.0).unwrap();
        let y = HeavyTailModel::burr(10.0, 2.0, 1.0).unwrap();
        let c1 = c_k(0.25, 0.5, 1).unwrap();
        // reference values from an independent 30-digit quadrature of the
        // untransformed integral
        let frozen = [(0.999, 0.932506197835302), (0.9999, 0.977084596394548), (0.99999, 0.992581933877348)];
        let mut prev_gap = f64::INFINITY;
        for (level, expected) in frozen {
            let t = x.quantile(level).unwrap();
            let r = lemma8_ratio(&x, &y, 1, t).unwrap();
            assert_abs_diff_eq!(r, expected, epsilon = 1e-8);
            let gap = (r / c1 - 1.0).abs();
            assert!(gap < prev_gap);
            prev_gap = gap;
        }
        let t = x.quantile(0.9999).unwrap();
        assert!((lemma8_ratio(&x, &y, 1, t).unwrap() / c1 - 1.0).abs() < 0.05);
        assert!(lemma8_ratio(&y, &x, 1, t).is_err());
    }

    #[test]
    fn observed_tail_mass_closed_form_for_power_tails() {
        // integral_t^inf t'^-2 4 t'^-5 dt' = (2/3) t^-6 = alpha Hbar(t)
        let (x, y) = pareto_pair();
        for &t in &[1.0, 1.7, 5.0, 40.0] {
            let mass = observed_tail_mass(&x, &y, t).unwrap();
            let hbar = x.survival(t) * y.survival(t);
            assert_relative_eq!(mass, alpha(0.25, 0.5) * hbar, max_relative = 1e-8);
        }
    }

    #[test]
    fn rate_bridge_matches_direct_integration() {
        let (x, y) = pareto_pair();
        let p = nontruncation_prob(&x, &y).unwrap();
        for &(n, k) in &[(5000usize, 100usize), (200, 20), (1000, 5)] {
            let direct = rate_at_observed_fraction(&x, &y, n, k).unwrap();
            let bridge = rate_bridge(p, 0.25, 0.5, k as f64);
            assert!((direct / bridge - 1.0).abs() < 0.01, "{direct} vs {bridge}");
        }
    }

    #[test]
    fn constants_report() {
        let x = HeavyTailModel::burr(10.0, 4.0, 1.0).unwrap();
        let y = HeavyTailModel::burr(10.0, 2.0, 1.0).unwrap();
        let c = TheoryConstants::new(&x, &y, Some(-1.0)).unwrap();
        assert_relative_eq!(c.alpha, 2.0 / 3.0, max_relative = 1e-15);
        assert!(c.s2 > 0.0 && c.m.unwrap() > 0.0);
        assert!(c.p > 0.5 && c.p < 1.0);
        let text = c.to_string();
        assert!(text.contains("alpha = 0.666666"));
        assert!(text.contains("m = 0.05"));
        let no_rho = TheoryConstants::new(&x, &y, None).unwrap();
        assert!(no_rho.to_string().contains("m = NA"));
        assert!(TheoryConstants::new(&y, &x, None).is_err());
    }

    proptest! {
        #[test]
        fn variance_increases_with_index_ratio(
            p in 0.05f64..1.0,
            g1 in 0.05f64..3.0,
            r1 in 0.01f64..0.98,
            dr in 0.001f64..0.5,
        ) {
            let r2 = (r1 + dr).min(0.99);
            prop_assume!(r2 > r1);
            let v1 = variance(p, g1, g1 / r1).unwrap();
            let v2 = variance(p, g1, g1 / r2).unwrap();
            prop_assert!(v2 > v1);
        }

        #[test]
        fn c_k_recurrence(g1 in 0.05f64..2.0, r in 0.01f64..0.95, k in 1u32..8) {
            let g2 = g1 / r;
            let q = 1.0 - r;
            let lhs = c_k(g1, g2, k).unwrap();
            let rhs = c_k(g1, g2, k - 1).unwrap() * k as f64 * g1 / q;
            prop_assert!((lhs / rhs - 1.0).abs() < 1e-12);
        }
    }
}

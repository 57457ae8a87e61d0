//! Parametric heavy-tailed laws used as data generators and ground truth.
//!
//! Three families are supported, all with regularly varying survival
//! functions and closed-form quantiles:
//!
//! - `Burr(beta, tau, lambda)`: `F(x) = 1 - (beta / (beta + x^tau))^lambda`,
//!   extreme value index `1 / (lambda * tau)`.
//! - `Frechet(gamma)`: `F(x) = exp(-x^(-1/gamma))`, index `gamma`.
//! - `Pareto(gamma, scale)`: `1 - F(x) = (x / scale)^(-1/gamma)` for
//!   `x >= scale`, index `gamma`. The tail is exactly a power, which makes it
//!   the reference law for closed-form checks.
//!
//! Survival functions are evaluated directly (via `ln_1p`/`expm1`) rather than
//! as `1 - cdf`, so they stay accurate in the far tail.

use std::fmt;
use std::str::FromStr;

use rand::distributions::Open01;
use rand::Rng;

use crate::error::{Error, Result};

/// Source of uniform draws on the open interval (0, 1).
///
/// Every [`rand::RngCore`] is a source; tests can plug in deterministic ones.
pub trait UniformSource {
    fn next_open01(&mut self) -> f64;
}

impl<R: rand::RngCore> UniformSource for R {
    fn next_open01(&mut self) -> f64 {
        self.sample(Open01)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HeavyTailModel {
    Burr { beta: f64, tau: f64, lambda: f64 },
    Frechet { gamma: f64 },
    Pareto { gamma: f64, scale: f64 },
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be a positive finite number, got {value}"
        )))
    }
}

impl HeavyTailModel {
    pub fn burr(beta: f64, tau: f64, lambda: f64) -> Result<Self> {
        check_positive("beta", beta)?;
        check_positive("tau", tau)?;
        check_positive("lambda", lambda)?;
        Ok(HeavyTailModel::Burr { beta, tau, lambda })
    }

    pub fn frechet(gamma: f64) -> Result<Self> {
        check_positive("gamma", gamma)?;
        Ok(HeavyTailModel::Frechet { gamma })
    }

    pub fn pareto(gamma: f64, scale: f64) -> Result<Self> {
        check_positive("gamma", gamma)?;
        check_positive("scale", scale)?;
        Ok(HeavyTailModel::Pareto { gamma, scale })
    }

    /// True extreme value index.
    pub fn evi(&self) -> f64 {
        match *self {
            HeavyTailModel::Burr { tau, lambda, .. } => 1.0 / (lambda * tau),
            HeavyTailModel::Frechet { gamma } => gamma,
            HeavyTailModel::Pareto { gamma, .. } => gamma,
        }
    }

    /// Lower endpoint of the support.
    pub fn lower_endpoint(&self) -> f64 {
        match *self {
            HeavyTailModel::Pareto { scale, .. } => scale,
            _ => 0.0,
        }
    }

    /// `log(1 - F(x))`, finite wherever the survival is positive.
    pub fn log_survival(&self, x: f64) -> f64 {
        if x <= self.lower_endpoint() {
            return 0.0;
        }
        match *self {
            HeavyTailModel::Burr { beta, tau, lambda } => -lambda * (x.powf(tau) / beta).ln_1p(),
            HeavyTailModel::Frechet { gamma } => {
                let z = x.powf(-1.0 / gamma);
                (-(-z).exp_m1()).ln()
            }
            HeavyTailModel::Pareto { gamma, scale } => -(x / scale).ln() / gamma,
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lower_endpoint() {
            return 0.0;
        }
        match *self {
            HeavyTailModel::Frechet { gamma } => (-x.powf(-1.0 / gamma)).exp(),
            _ => -self.log_survival(x).exp_m1(),
        }
    }

    pub fn survival(&self, x: f64) -> f64 {
        if x <= self.lower_endpoint() {
            return 1.0;
        }
        match *self {
            HeavyTailModel::Frechet { gamma } => -(-x.powf(-1.0 / gamma)).exp_m1(),
            _ => self.log_survival(x).exp(),
        }
    }

    /// Quantile of order `u`, for `0 <= u < 1`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&u) {
            return Err(Error::Domain(format!("quantile order must lie in [0, 1), got {u}")));
        }
        if u == 0.0 {
            return Ok(self.lower_endpoint());
        }
        Ok(match *self {
            HeavyTailModel::Burr { beta, tau, lambda } => {
                (beta * (-(-u).ln_1p() / lambda).exp_m1()).powf(1.0 / tau)
            }
            HeavyTailModel::Frechet { gamma } => (-u.ln()).powf(-gamma),
            HeavyTailModel::Pareto { gamma, scale } => scale * (-gamma * (-u).ln_1p()).exp(),
        })
    }

    /// Point `x` with `1 - F(x) = s`, for `0 < s <= 1`. Accurate for tiny `s`,
    /// where `quantile(1 - s)` would lose all precision.
    pub fn inverse_survival(&self, s: f64) -> Result<f64> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::Domain(format!("survival level must lie in (0, 1], got {s}")));
        }
        if s == 1.0 {
            return Ok(self.lower_endpoint());
        }
        Ok(match *self {
            HeavyTailModel::Burr { beta, tau, lambda } => {
                (beta * (-s.ln() / lambda).exp_m1()).powf(1.0 / tau)
            }
            HeavyTailModel::Frechet { gamma } => (-(-s).ln_1p()).powf(-gamma),
            HeavyTailModel::Pareto { gamma, scale } => scale * s.powf(-gamma),
        })
    }

    /// Inverse-transform draw from a uniform source.
    pub fn draw<U: UniformSource + ?Sized>(&self, source: &mut U) -> f64 {
        let u = source.next_open01();
        // u < 1 is guaranteed by the source contract
        self.quantile(u).expect("uniform draw outside [0, 1)")
    }

    pub fn sample<U: UniformSource + ?Sized>(&self, source: &mut U, count: usize) -> Vec<f64> {
        (0..count).map(|_| self.draw(source)).collect()
    }
}

impl fmt::Display for HeavyTailModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            HeavyTailModel::Burr { beta, tau, lambda } => write!(f, "burr({beta},{tau},{lambda})"),
            HeavyTailModel::Frechet { gamma } => write!(f, "frechet({gamma})"),
            HeavyTailModel::Pareto { gamma, scale } => write!(f, "pareto({gamma},{scale})"),
        }
    }
}

impl FromStr for HeavyTailModel {
    type Err = Error;

    /// Parses `burr(10,4,1)`, `frechet(0.25)`, `pareto(0.5,1)`.
    /// Parameters may also be written as simple fractions such as `1/2`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::ModelLiteral(s.to_string());
        let trimmed = s.trim();
        let open = trimmed.find('(').ok_or_else(bad)?;
        let body = trimmed[open + 1..].strip_suffix(')').ok_or_else(bad)?;
        let name = &trimmed[..open];
        let params = body
            .split(',')
            .map(|p| parse_number(p.trim()).ok_or_else(bad))
            .collect::<Result<Vec<f64>>>()?;
        match (name, params.as_slice()) {
            ("burr", &[beta, tau, lambda]) => HeavyTailModel::burr(beta, tau, lambda),
            ("frechet", &[gamma]) => HeavyTailModel::frechet(gamma),
            ("pareto", &[gamma, scale]) => HeavyTailModel::pareto(gamma, scale),
            _ => Err(bad()),
        }
    }
}

fn parse_number(text: &str) -> Option<f64> {
    match text.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().ok()?;
            let den: f64 = den.trim().parse().ok()?;
            Some(num / den)
        }
        None => text.parse().ok(),
    }
}

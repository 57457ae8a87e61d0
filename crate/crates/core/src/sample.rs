//! The observed truncated sample and the product-limit machinery built on it.
//!
//! Construction sorts the `x*` and `y*` columns once and sweeps them once to
//! obtain, for every observed `x*`, the coverage count `n C_n(x*)` and the
//! Lynden-Bell product of the factors `1 - 1 / (n C_n)` over all larger
//! observations. Every estimator then reads these arrays.

use crate::error::{Error, Result};

/// Exact value of `C_n(x)` as the fraction `count / n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coverage {
    pub count: usize,
    pub n: usize,
}

impl Coverage {
    pub fn value(&self) -> f64 {
        self.count as f64 / self.n as f64
    }
}

/// Conditionally i.i.d. pairs `(x*, y*)` with `x* <= y*`, as observed under
/// random right truncation.
#[derive(Debug, Clone)]
pub struct ObservedSample {
    pairs: Vec<(f64, f64)>,
    x_sorted: Vec<f64>,
    y_sorted: Vec<f64>,
    /// `n C_n(x_sorted[i])`
    cover: Vec<usize>,
    /// `lb[i]` is the Lynden-Bell product over `x_sorted[i..]`, i.e. `F_n(x)`
    /// for any `x` with exactly `i` observations `<= x`. `lb[n] = 1`.
    lb: Vec<f64>,
}

impl ObservedSample {
    pub fn new(pairs: Vec<(f64, f64)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidParameter("sample must contain at least one pair".into()));
        }
        for (index, &(x, y)) in pairs.iter().enumerate() {
            if !(x.is_finite() && x > 0.0 && y > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "pair {index} must hold positive values, got ({x}, {y})"
                )));
            }
            if x > y {
                return Err(Error::TruncationOrder { index, x, y });
            }
        }

        let mut x_sorted: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let mut y_sorted: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        x_sorted.sort_by(f64::total_cmp);
        y_sorted.sort_by(f64::total_cmp);
        if let Some(w) = x_sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Tie { value: w[0] });
        }

        // x_j <= y_j, so every pair with y_j < x also has x_j <= x; with
        // distinct x values, #{x_j <= x_(i)} = i + 1.
        let cover: Vec<usize> = x_sorted
            .iter()
            .enumerate()
            .map(|(i, &x)| i + 1 - y_sorted.partition_point(|&y| y < x))
            .collect();

        let lb = lynden_bell_products(&cover);

        Ok(ObservedSample { pairs, x_sorted, y_sorted, cover, lb })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    /// Observed `x*` values in increasing order.
    pub fn sorted_x(&self) -> &[f64] {
        &self.x_sorted
    }

    /// Observed `y*` values in increasing order.
    pub fn sorted_y(&self) -> &[f64] {
        &self.y_sorted
    }

    /// `n C_n` evaluated at each entry of [`sorted_x`](Self::sorted_x).
    pub fn coverage_counts(&self) -> &[usize] {
        &self.cover
    }

    /// Number of observed `x*` values `<= x`.
    pub(crate) fn rank(&self, x: f64) -> usize {
        self.x_sorted.partition_point(|&v| v <= x)
    }

    /// `F_n` at `x` given its rank (count of observations `<= x`).
    pub(crate) fn lynden_bell_at_rank(&self, rank: usize) -> f64 {
        self.lb[rank]
    }

    /// `C_n(x) = (1/n) #{i : x*_i <= x <= y*_i}`.
    pub fn c_n(&self, x: f64) -> Coverage {
        let below = self.rank(x);
        let ended = self.y_sorted.partition_point(|&y| y < x);
        Coverage { count: below - ended, n: self.len() }
    }

    /// Lynden-Bell estimate `F_n(x)`: product of `1 - 1/(n C_n(x*_i))` over
    /// observations strictly above `x`.
    pub fn lynden_bell_cdf(&self, x: f64) -> f64 {
        self.lb[self.rank(x)]
    }

    /// `sum over x*_i > t of 1 / (n C_n(x*_i))`.
    pub fn hazard_sum(&self, t: f64) -> f64 {
        self.cover[self.rank(t)..].iter().map(|&m| 1.0 / m as f64).sum()
    }

    /// `-log F_n(t)`; fails when the product has collapsed to zero at `t`.
    pub fn hazard_log(&self, t: f64) -> Result<f64> {
        let f = self.lynden_bell_cdf(t);
        if f > 0.0 {
            Ok(-f.ln())
        } else {
            Err(self.degenerate_error(t))
        }
    }

    /// Largest observation `x*_i` with `n C_n(x*_i) = 1`, below which the
    /// Lynden-Bell estimate is identically zero.
    pub fn degenerate_point(&self) -> Option<f64> {
        self.cover
            .iter()
            .rposition(|&m| m == 1)
            .map(|i| self.x_sorted[i])
    }

    pub(crate) fn degenerate_error(&self, threshold: f64) -> Error {
        Error::DegenerateMass {
            t: self.degenerate_point().unwrap_or(f64::NAN),
            threshold,
        }
    }
}

/// Suffix products of `1 - 1/m`. Kept as a reduced fraction while numerator
/// and denominator fit in `u128`, which keeps untruncated data exact
/// (the product telescopes to `i / n`), then continued in floating point.
fn lynden_bell_products(cover: &[usize]) -> Vec<f64> {
    let n = cover.len();
    let mut out = vec![0.0; n + 1];
    out[n] = 1.0;
    let mut exact: Option<(u128, u128)> = Some((1, 1));
    let mut approx = 1.0f64;
    for i in (0..n).rev() {
        let m = cover[i] as u128;
        exact = exact.and_then(|(num, den)| {
            let num = num.checked_mul(m - 1)?;
            let den = den.checked_mul(m)?;
            let g = gcd(num, den);
            Some((num / g, den / g))
        });
        out[i] = match exact {
            Some((num, den)) => {
                approx = num as f64 / den as f64;
                approx
            }
            None => {
                approx *= 1.0 - 1.0 / m as f64;
                approx
            }
        };
    }
    out
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

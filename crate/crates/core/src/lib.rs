//! Tail-index and extreme-quantile estimation for heavy-tailed data under
//! random right truncation.
//!
//! A pair `(X, Y)` is observed only when `X <= Y`. The crate provides the
//! Lynden-Bell product-limit estimator of the law of `X`, a Hill-type tail
//! index estimator written as a Lynden-Bell integral, the matching Weissman
//! extreme-quantile estimator, the Gardes-Stupfler baseline, the asymptotic
//! constants of the estimator and a Monte Carlo harness.
//!
//! ```
//! use trunctail::{HeavyTailModel, experiments};
//!
//! let x = HeavyTailModel::burr(10.0, 4.0, 1.0).unwrap();
//! let y = HeavyTailModel::burr(10.0, 2.0, 1.0).unwrap();
//! let mut rng = experiments::replicate_rng(1, 0);
//! let sample = experiments::generate_truncated(&x, &y, 200, &mut rng).unwrap();
//! let est = sample.evi_lynden_bell(40).unwrap();
//! assert!(est.value > 0.0);
//! ```

pub mod error;
pub mod estimators;
pub mod experiments;
pub mod io;
pub mod models;
pub mod quadrature;
pub mod sample;
pub mod theory;

pub use error::{Error, Result};
pub use estimators::{hill, EstimatorKind, EviEstimate};
pub use experiments::{CltReport, CurveResult, ExperimentSpec};
pub use models::{HeavyTailModel, UniformSource};
pub use sample::{Coverage, ObservedSample};
pub use theory::TheoryConstants;

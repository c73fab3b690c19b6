//! Risk functionals and risk-aware learning for linear models.
//!
//! The crate is organised around two objects: a [`LossVector`] (a raw sample of
//! losses, which empirical training objectives consume) and a
//! [`DiscreteDistribution`] (a finite loss law, which population risk
//! functionals consume). On top of these sit:
//!
//! - [`scalarfn`]: named one-dimensional function families (disutilities,
//!   M-estimator potentials, utilities, prospect-theory value/weight functions);
//! - [`objectives`]: empirical objectives such as average top-k, tilted
//!   (exponentially smoothed) means, L-statistics and M-estimators;
//! - [`risks`]: exact CVaR, L-risk, OCE, entropic, mean-deviation, M-risk,
//!   CPT, chi-square DRO and sub-group fairness risks;
//! - [`learners`]: seeded subgradient descent for linear models;
//! - [`oracle`]: brute-force and Monte Carlo reference machinery;
//! - [`datagen`]: seeded synthetic data, including the St. Petersburg game.
//!
//! Data-parallel loops go through [`par`]; with the `parallel` feature off they
//! run sequentially and produce bit-identical results.
//!
//! ```
//! use risk_core::{empirical_distribution, LossVector};
//! use risk_core::risks::cvar;
//!
//! let losses = LossVector::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
//! let dist = empirical_distribution(&losses);
//! let res = cvar(&dist, 0.5).unwrap();
//! assert!((res.value - 3.5).abs() < 1e-12);
//! ```

pub mod datagen;
pub mod distcore;
mod error;
pub mod learners;
pub mod objectives;
pub mod oracle;
pub mod par;
pub mod risks;
pub mod rng;
pub mod scalarfn;
mod solve;

pub use distcore::{
    canonicalize, cdf, empirical_distribution, order_statistic, quantile, Direction, DiscreteDistribution, LossVector,
    SpectrumFunction,
};
pub use error::{Error, Result};
pub use objectives::ObjectiveSpec;
pub use risks::{RiskResult, RiskSpec};
pub use scalarfn::ScalarFunction;

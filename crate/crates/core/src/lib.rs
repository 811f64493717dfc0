//! Modulation classification from the empirical CDF sampled at a handful of
//! testpoints.
//!
//! The crate is organized bottom-up:
//!
//! * [`signal`]: constellations, the AWGN channel and the quadrature feature map.
//! * [`distributions`]: analytic per-class CDFs of the feature and the sampled ECDF.
//! * [`bayes`]: the exact multinomial Bayes rule and its Gaussian quadratic
//!   discriminant approximation.
//! * [`baselines`]: ML, Kuiper, reduced-complexity Kuiper and variational
//!   distance classifiers.
//! * [`testpoints`]: pdf-crossings, Bhattacharyya distance and testpoint search.
//! * [`harness`]: Monte Carlo experiments, model persistence and CSV output.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod bayes;
pub mod distributions;
mod error;
pub mod harness;
mod linalg;
pub mod math;
pub mod signal;
pub mod testpoints;

pub use num_complex;

pub use baselines::{kuiper_classify, ml_classify, rck_classify, vd_classify, VdModel};
pub use bayes::{
    class_statistics, discriminant_classify, exact_bayes_classify, multinomial_log_pmf,
    region_counts, ClassStatistics, DiscriminantModel, RegionProbabilities,
};
pub use distributions::{sampled_ecdf, SampledEcdf, TestpointSet, TheoreticalCdf, GUARD_EPSILON};
pub use error::{Error, Result};
pub use math::Decision;
pub use signal::{quadrature_feature, transmit, ChannelConfig, Constellation, SymbolBlock};
pub use testpoints::{
    bhattacharyya, multiclass_testpoints, optimize_testpoints, pdf_crossings, OptimizedTestpoints,
    PairContext,
};

//! Simulation of Brown-Resnick processes on one-dimensional grids.
//!
//! The process `Z(t) = max_i X_i + W_i(t) - σ²(t)/2` is built from a Poisson
//! process with intensity `e^{-x} dx` and iid Gaussian paths with variogram
//! `γ(h) = s·|h|^α`. Five equivalent representations are implemented in
//! [`methods`]; [`bounds`] evaluates their approximation-error bounds and
//! [`stats`] checks the output against the standard Gumbel law.

pub mod bounds;
pub mod gauss;
pub mod methods;
pub mod ppp;
pub mod rng;
pub mod shape;
pub mod stats;
pub mod study;

pub use bounds::{
    block_bound, excursion_bound, method_error_bound, BoundError, BoundMethod, BoundParams,
    ErrorBudget,
};
pub use gauss::{
    build_covariance, sample_drifted_path, CovarianceFactor, DriftedPath, GaussError, Grid,
    VariogramModel,
};
pub use methods::{
    method0, method1, method2, method3, method4, FieldAccumulator, FieldRealization, Generator,
    Margins, MethodConfig, MethodError, MethodSpec, StopReason,
};
pub use ppp::{GumbelPointStream, Mark, MarkSpace, MarkedPoint, PppError};
pub use rng::{RandomStream, StreamKey};
pub use shape::{
    estimate_lambda_p, sample_shape, LambdaCache, LambdaEstimate, RecordingShapes, RejectionShapes,
    ShapeError, ShapeFunction, ShapeSampler, ShapeSource,
};
pub use stats::{dev_summary, gumbel_cdf, DevSummary, StatsError};
pub use study::{run_study, MethodSettings, StudyConfig, StudyError, StudyResult};

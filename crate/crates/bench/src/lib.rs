//! Benchmark fixtures shared by the criterion benches.

use brsim_core::{Grid, MethodConfig, MethodSpec, VariogramModel};

/// The study grid: `b = 2`, `p = 0.1`.
pub fn study_grid() -> Grid {
    Grid::new(2.0, 0.1).expect("valid grid")
}

pub fn brownian() -> VariogramModel {
    VariogramModel::brownian()
}

/// Method-4 config with a fixed intensity constant, so setup skips the
/// estimate.
pub fn shapes_config(lambda_p: f64) -> MethodConfig {
    MethodConfig::new(
        MethodSpec::Shapes {
            half_width: 10.0,
            lambda_p: Some(lambda_p),
            shape_window: None,
        },
        100_000,
        true,
    )
}

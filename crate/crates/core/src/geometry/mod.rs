//! Induced metric of a graph over the half-space, the operator
//! `Q[w]_s = g^{ij}[w] ∂_i∂_j w_s − (n/t) ∂_t w_s` and the first-variation residuals.
//!
//! Residuals are carried in `t²`-scaled form so that no negative powers of `t` appear.

mod grid;
mod point;
mod series_metric;

pub use grid::{q_operator_grid, variation_residuals, VariationResiduals};
pub use point::{metric_matrix, scaled_q, variation_density, PointMetric, VariationDensity};
pub use series_metric::{
    gradient_series, metric_from_gradient_series, metric_inverse, q_operator_series, MetricSeries,
    ScaledResidual, SeriesMat,
};
pub(crate) use series_metric::scaled_second;

use crate::series::SeriesError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeometryError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error("non-finite gradient entry")]
    NonFinite,
    #[error("metric is singular at the base point")]
    SingularMetric,
    #[error("degenerate point t = {t}")]
    DegeneratePoint { t: f64 },
    #[error("grid too coarse for centered stencils")]
    Stencil,
    #[error("inconsistent matrix or field shape")]
    Shape,
}

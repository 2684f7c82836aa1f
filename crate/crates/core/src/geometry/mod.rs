//! Analytic closed curves, their complexified parametrization, and the box
//! cover of the collar where native quadrature loses accuracy.

mod builtin;
mod cover;
mod curve;
mod preimage;

pub use builtin::{builtin_curve, builtin_curve_by_name, circle, fourier_coefficients, CurveId};
pub use cover::{
    default_alpha_bad, distortion_gamma, distortion_gamma_sampled, AnnulusSpec, BoxCover, CoverBox,
    CoverSpec,
};
pub use curve::{polyline_self_intersects, Curve, CurveRecord, NodeGeometry, NodeSet, Side, DEFAULT_STRIP_LIMIT};
pub use preimage::PreimageSearch;

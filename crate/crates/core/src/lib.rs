//! Laplace and Helmholtz layer potentials on analytic closed curves in the
//! plane: Nyström solves, native trapezoid evaluation and its error field,
//! and accurate close evaluation through surrogate local expansions.

pub mod closeeval;
pub mod error;
pub mod fastsum;
pub mod fields;
pub mod geometry;
pub mod grid;
pub mod potentials;
pub mod prediction;
pub mod solver;
pub mod special;

pub use error::{Error, Result};
pub use fields::Field;
pub use closeeval::{close_evaluate, CloseEvalOutput, CloseEvalParams, EvalPath, LocalExpansion, Surrogate};
pub use fastsum::{split_evaluate, CutoffRule, DirectBackend, SplitPlan, SummationBackend, TreeBackend};
pub use geometry::{builtin_curve, BoxCover, Curve, CurveId, Side};
pub use grid::{CellMask, FieldGrid, GridSpec, MethodTag};
pub use prediction::{predict_error, predicted_contour, required_beta};
pub use num_complex::Complex64;
pub use potentials::{native_eval, Density, Equation, Interpolant, Kernel, Layer, Pde};
pub use solver::{assemble, solve, BvpSpec, NystromSystem, SolveMethod};

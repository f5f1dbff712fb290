//! Sparse partially linear additive quantile regression.
//!
//! The conditional `tau`-quantile of a response is modelled as a linear term
//! in a (possibly very wide) covariate block plus a sum of smooth univariate
//! functions, each expanded in a B-spline basis. Linear coefficients are
//! selected with SCAD, MCP or LASSO penalties. Every fit reduces to exact
//! weighted check-loss minimisation, solved by a simplex method on the
//! quantile-regression linear program; the nonconvex penalties are handled by
//! local linear approximation on an augmented data set.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`). The
//! aliases at the bottom of this file fix the common `f64` instantiations.

pub mod error;
pub mod fit;
pub mod multi_quantile;
pub mod penalties;
pub mod scalar;
pub mod sim_bench;
pub mod spline_basis;
pub mod tuning;
pub mod wqr_solver;

mod linalg;

pub use error::{Error, Result};
pub use fit::{
    fit_oracle, fit_oracle_with, fit_penalized, kkt_check, lla_step_objective_check, CoordKind,
    FitOptions, FitResult, FitStatus, KktCoordinate, KktReport, ModelSpec,
};
pub use multi_quantile::{
    fit_group_path, fit_group_penalized, fit_independent_paths, fit_multi_oracle,
    union_selection, GroupPath, MultiFitResult, MultiTauSpec,
};
pub use penalties::{PenaltyFamily, PenaltySpec};
pub use scalar::Scalar;
pub use spline_basis::{AdditiveDesign, CenteredComponents, KnotRule, SplineBasis};
pub use tuning::{auto_grid, fit_path, lambda_max, qbic, Criterion, LambdaPath, PathOptions};
pub use wqr_solver::{check_loss, solve_wqr, SolveStatus, SolverOptions, WqrProblem, WqrSolution};

pub type SplineBasisF64 = SplineBasis<f64>;
pub type PenaltySpecF64 = PenaltySpec<f64>;
pub type WqrProblemF64 = WqrProblem<f64>;
pub type WqrSolutionF64 = WqrSolution<f64>;
pub type ModelSpecF64 = ModelSpec<f64>;
pub type FitResultF64 = FitResult<f64>;
pub type MultiTauSpecF64 = MultiTauSpec<f64>;
pub type MultiFitResultF64 = MultiFitResult<f64>;
pub type LambdaPathF64 = LambdaPath<f64>;

pub type SplineBasisF32 = SplineBasis<f32>;
pub type PenaltySpecF32 = PenaltySpec<f32>;
pub type ModelSpecF32 = ModelSpec<f32>;
pub type FitResultF32 = FitResult<f32>;

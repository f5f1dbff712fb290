//! Serializable result documents.

use plaqr::fit::{FitResult, FitStatus, ModelSpec};
use plaqr::penalties::PenaltySpec;
use plaqr::spline_basis::eval_component;
use plaqr::tuning::{Criterion, LambdaPath};
use serde::{Deserialize, Serialize};

use crate::data::Table;
use crate::error::CliResult;

/// Points per nonlinear coordinate at which `ĝ_j` is tabulated.
pub const GRID_POINTS: usize = 101;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub estimate: f64,
}

/// One centered component on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentCurve {
    pub name: String,
    /// Grid on the covariate's original scale.
    pub grid: Vec<f64>,
    /// The same grid mapped to `[0, 1]`.
    pub unit_grid: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub lambda: f64,
    /// Criterion value; `None` when the fit was excluded.
    pub score: Option<f64>,
    pub active_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSummary {
    pub criterion: Criterion,
    pub selected: usize,
    pub points: Vec<PathPoint>,
}

impl PathSummary {
    pub fn from_path(path: &LambdaPath<f64>) -> Self {
        Self {
            criterion: path.criterion,
            selected: path.selected,
            points: path_points(&path.lambdas, &path.scores, path.fits.iter().map(|f| f.active_set.len())),
        }
    }
}

pub fn path_points(lambdas: &[f64], scores: &[f64], active: impl Iterator<Item = usize>) -> Vec<PathPoint> {
    lambdas
        .iter()
        .zip(scores)
        .zip(active)
        .map(|((&lambda, &s), active_size)| PathPoint {
            lambda,
            score: s.is_finite().then_some(s),
            active_size,
        })
        .collect()
}

/// Result of `plaqr fit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub tau: f64,
    pub lambda: f64,
    pub penalty: PenaltySpec<f64>,
    pub n: usize,
    pub dropped_rows: usize,
    /// `ĝ_0`: the intercept after centering the components.
    pub intercept: f64,
    pub coefficients: Vec<Coefficient>,
    pub active: Vec<String>,
    pub components: Vec<ComponentCurve>,
    pub status: FitStatus,
    pub path: Option<PathSummary>,
    pub fit: FitResult<f64>,
}

impl FitReport {
    pub fn new(spec: &ModelSpec<f64>, table: &Table, fit: &FitResult<f64>, path: Option<PathSummary>) -> CliResult<Self> {
        Ok(Self {
            tau: fit.tau,
            lambda: fit.lambda,
            penalty: spec.penalty().with_lambda(fit.lambda)?,
            n: spec.n(),
            dropped_rows: table.dropped_rows,
            intercept: fit.g.intercept,
            coefficients: coefficients(table, &fit.beta),
            active: fit.active_set.iter().map(|&j| table.linear[j].clone()).collect(),
            components: components(spec, table, fit)?,
            status: fit.status,
            path,
            fit: fit.clone(),
        })
    }

    pub fn csv(&self) -> String {
        coefficient_csv(&[self.tau], &[(self.intercept, &self.coefficients)])
    }
}

pub fn coefficients(table: &Table, beta: &[f64]) -> Vec<Coefficient> {
    table
        .linear
        .iter()
        .zip(beta)
        .map(|(name, &estimate)| Coefficient {
            name: name.clone(),
            estimate,
        })
        .collect()
}

pub fn components(spec: &ModelSpec<f64>, table: &Table, fit: &FitResult<f64>) -> CliResult<Vec<ComponentCurve>> {
    let unit: Vec<f64> = (0..GRID_POINTS)
        .map(|k| k as f64 / (GRID_POINTS - 1) as f64)
        .collect();
    table
        .nonlinear
        .iter()
        .enumerate()
        .map(|(j, name)| {
            Ok(ComponentCurve {
                name: name.clone(),
                grid: unit.iter().map(|&t| table.scales[j].from_unit(t)).collect(),
                values: eval_component(spec.design(), &fit.g, &fit.xi, j, &unit)?,
                unit_grid: unit.clone(),
            })
        })
        .collect()
}

/// `term,<one column per level>` with the intercept first.
pub fn coefficient_csv(taus: &[f64], levels: &[(f64, &Vec<Coefficient>)]) -> String {
    let mut out = String::from("term");
    for t in taus {
        out.push_str(&format!(",tau_{t}"));
    }
    out.push_str("\n(intercept)");
    for (icpt, _) in levels {
        out.push_str(&format!(",{icpt}"));
    }
    out.push('\n');
    let rows = levels.first().map_or(0, |l| l.1.len());
    for r in 0..rows {
        out.push_str(&levels[0].1[r].name);
        for (_, coefs) in levels {
            out.push_str(&format!(",{}", coefs[r].estimate));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub tau: f64,
    pub intercept: f64,
    pub coefficients: Vec<Coefficient>,
    pub components: Vec<ComponentCurve>,
    pub status: FitStatus,
}

/// Result of `plaqr multifit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiReport {
    pub taus: Vec<f64>,
    pub lambda: f64,
    pub n: usize,
    pub dropped_rows: usize,
    pub active: Vec<String>,
    /// `Σ_m |β_j^{(m)}|` per linear covariate.
    pub group_norms: Vec<Coefficient>,
    pub objective: f64,
    pub status: FitStatus,
    pub levels: Vec<LevelReport>,
    pub path: Option<Vec<PathPoint>>,
    pub selected: Option<usize>,
}

impl MultiReport {
    pub fn csv(&self) -> String {
        let levels: Vec<(f64, &Vec<Coefficient>)> =
            self.levels.iter().map(|l| (l.intercept, &l.coefficients)).collect();
        coefficient_csv(&self.taus, &levels)
    }
}

/// Result of `plaqr qqdiag`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QqReport {
    pub taus: Vec<f64>,
    pub n_draws: usize,
    pub response_iqr: f64,
    /// Largest `|simulated - observed|` divided by the response IQR.
    pub max_deviation_over_iqr: f64,
    pub probs: Vec<f64>,
    pub simulated: Vec<f64>,
    pub observed: Vec<f64>,
}

impl QqReport {
    pub fn csv(&self) -> String {
        let mut out = String::from("prob,simulated,observed\n");
        for ((p, s), o) in self.probs.iter().zip(&self.simulated).zip(&self.observed) {
            out.push_str(&format!("{p},{s},{o}\n"));
        }
        out
    }
}

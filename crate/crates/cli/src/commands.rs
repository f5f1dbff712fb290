//! Subcommand implementations.

use std::io::Write;

use plaqr::fit::{fit_penalized, FitOptions, FitResult, FitStatus, ModelSpec};
use plaqr::multi_quantile::{fit_group_path, fit_group_penalized, MultiTauSpec};
use plaqr::penalties::PenaltySpec;
use plaqr::sim_bench::{
    fit_levels, iqr, qq_diagnostic, rate_check, run_multi, run_single, BasisConfig, LevelFit, MetricsReport,
    SimConfig, DEFAULT_MAX_ACTIVE,
};
use plaqr::spline_basis::{KnotRule, SplineBasis};
use plaqr::tuning::{fit_path, PathOptions};
use serde::Serialize;

use crate::args::{
    Command, DataArgs, FitArgs, Format, KnotChoice, MultiArgs, OutArgs, PathArgs, PenaltyArgs, QqArgs, RateArgs,
    SimArgs, TuneArgs,
};
use crate::data::{load_csv, Roles, Table};
use crate::error::{CliError, CliResult};
use crate::report::{
    coefficients, components, path_points, FitReport, LevelReport, MultiReport, PathSummary, QqReport,
};

pub fn run(command: &Command) -> CliResult<()> {
    match command {
        Command::Fit(a) => fit(a),
        Command::Path(a) => path(a),
        Command::Multifit(a) => multifit(a),
        Command::Simulate(a) => simulate(a),
        Command::Ratecheck(a) => ratecheck(a),
        Command::Qqdiag(a) => qqdiag(a),
    }
}

fn load(data: &DataArgs) -> CliResult<Table> {
    let roles = Roles {
        response: data.response.clone(),
        linear: data.linear.clone(),
        nonlinear: data.nonlinear.clone(),
    };
    let table = load_csv(&data.input, &roles)?;
    if table.dropped_rows > 0 {
        eprintln!("warning: dropped {} rows with missing cells", table.dropped_rows);
    }
    Ok(table)
}

fn penalty_spec(p: &PenaltyArgs) -> CliResult<PenaltySpec<f64>> {
    Ok(PenaltySpec::new(p.penalty, 0.0, p.a.unwrap_or_else(|| p.penalty.default_a()))?)
}

fn model_spec(data: &DataArgs, table: &Table, tau: f64, penalty: PenaltySpec<f64>) -> CliResult<ModelSpec<f64>> {
    let n = table.y.len();
    let k_n = data.knots.unwrap_or((n as f64).powf(0.2).floor() as usize);
    let bases = (0..table.z.ncols())
        .map(|j| {
            let col = table.z.column(j).to_vec();
            match data.knot_rule {
                KnotChoice::Uniform => SplineBasis::new(data.order, k_n, KnotRule::Uniform, None),
                KnotChoice::Quantile => SplineBasis::new(data.order, k_n, KnotRule::SampleQuantile, Some(&col)),
            }
        })
        .collect::<plaqr::Result<Vec<_>>>()?;
    Ok(ModelSpec::new(
        table.y.clone(),
        table.x.clone(),
        table.z.view(),
        &bases,
        tau,
        penalty,
    )?)
}

fn path_options(tune: &TuneArgs, fit: FitOptions<f64>) -> PathOptions<f64> {
    PathOptions {
        n_lambda: tune.auto_grid,
        seed: tune.seed,
        max_active: tune.max_active,
        fit,
        ..PathOptions::default()
    }
}

fn check_status(status: FitStatus) -> CliResult<()> {
    match status {
        FitStatus::Converged => Ok(()),
        FitStatus::Degenerate => Err(CliError::Rank(
            "the weighted design lost full column rank in the linear program".into(),
        )),
        FitStatus::MaxLlaIter => Err(CliError::NonConvergence("LLA iteration cap reached".into())),
        FitStatus::SolverMaxIter => Err(CliError::NonConvergence("simplex pivot cap reached".into())),
    }
}

/// Writes `json` or `csv` to `--out` or standard output.
fn emit<T: Serialize>(out: &OutArgs, default: Format, value: &T, csv: impl FnOnce() -> String) -> CliResult<()> {
    let text = match out.format.unwrap_or(default) {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(value)?;
            s.push('\n');
            s
        }
        Format::Csv => csv(),
    };
    match &out.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn fit(a: &FitArgs) -> CliResult<()> {
    let table = load(&a.data)?;
    let spec = model_spec(&a.data, &table, a.tau, penalty_spec(&a.penalty)?)?;
    let opts = FitOptions {
        max_lla_iters: a.max_lla_iters,
        ..FitOptions::default()
    };
    let (fit, summary) = match a.lambda {
        Some(lambda) => (fit_penalized(&spec, lambda, &opts)?, None),
        None => {
            let p = fit_path(&spec, None, a.tune.criterion, &path_options(&a.tune, opts))?;
            (p.selected_fit().clone(), Some(PathSummary::from_path(&p)))
        }
    };
    let report = FitReport::new(&spec, &table, &fit, summary)?;
    emit(&a.out, Format::Json, &report, || report.csv())?;
    check_status(fit.status)
}

fn path(a: &PathArgs) -> CliResult<()> {
    let table = load(&a.data)?;
    let spec = model_spec(&a.data, &table, a.tau, penalty_spec(&a.penalty)?)?;
    let p = fit_path(&spec, None, a.tune.criterion, &path_options(&a.tune, FitOptions::default()))?;
    let summary = PathSummary::from_path(&p);
    emit(&a.out, Format::Json, &summary.points, || {
        let mut s = String::from("lambda,score,active_size\n");
        for pt in &summary.points {
            let score = pt.score.map_or_else(String::new, |v| v.to_string());
            s.push_str(&format!("{},{score},{}\n", pt.lambda, pt.active_size));
        }
        s
    })?;
    check_status(p.selected_fit().status)
}

fn level_report(spec: &ModelSpec<f64>, table: &Table, fit: &FitResult<f64>) -> CliResult<LevelReport> {
    Ok(LevelReport {
        tau: fit.tau,
        intercept: fit.g.intercept,
        coefficients: coefficients(table, &fit.beta),
        components: components(spec, table, fit)?,
        status: fit.status,
    })
}

fn multifit(a: &MultiArgs) -> CliResult<()> {
    let table = load(&a.data)?;
    let first = *a.taus.first().ok_or_else(|| CliError::Parse("--taus needs at least one level".into()))?;
    let base = model_spec(&a.data, &table, first, penalty_spec(&a.penalty)?)?;
    let spec = MultiTauSpec::from_spec(&base, a.taus.clone())?;
    let (fit, path, selected) = match a.lambda {
        Some(lambda) => (fit_group_penalized(&spec, lambda, &FitOptions::default())?, None, None),
        None => {
            let g = fit_group_path(&spec, None, &path_options(&a.tune, FitOptions::default()))?;
            let pts = path_points(&g.lambdas, &g.scores, g.fits.iter().map(|f| f.active_set.len()));
            (g.selected_fit().clone(), Some(pts), Some(g.selected))
        }
    };
    let levels = fit
        .fits
        .iter()
        .zip(spec.specs())
        .map(|(f, s)| level_report(s, &table, f))
        .collect::<CliResult<Vec<_>>>()?;
    let report = MultiReport {
        taus: fit.taus.clone(),
        lambda: fit.lambda,
        n: base.n(),
        dropped_rows: table.dropped_rows,
        active: fit.active_set.iter().map(|&j| table.linear[j].clone()).collect(),
        group_norms: coefficients(&table, &fit.group_norms),
        objective: fit.objective,
        status: fit.status,
        levels,
        path,
        selected,
    };
    emit(&a.out, Format::Json, &report, || report.csv())?;
    check_status(fit.status)
}

#[derive(Serialize)]
struct SimOutput<'a> {
    config: &'a SimConfig,
    methods: Vec<(&'static str, &'a MetricsReport)>,
}

fn simulate(a: &SimArgs) -> CliResult<()> {
    let mut config = SimConfig::new(a.n, a.p, a.error, a.tau, a.reps, a.tune.seed)?;
    config.penalty = a.penalty.penalty;
    config.a = a.penalty.a;
    config.criterion = a.tune.criterion;
    config.n_lambda = a.tune.auto_grid;
    config.max_active = Some(a.tune.max_active.unwrap_or(DEFAULT_MAX_ACTIVE));
    config.basis = BasisConfig {
        order: a.order,
        k_n: a.knots,
        grow_with_n: false,
    };
    let (single, multi);
    let methods: Vec<(&'static str, &MetricsReport)> = if a.taus.is_empty() {
        single = run_single(&config)?;
        vec![("penalized", &single.report)]
    } else {
        multi = run_multi(&config, &a.taus)?;
        vec![
            ("group", &multi.group.report),
            ("union", &multi.individual.report),
            ("oracle", &multi.oracle.report),
        ]
    };
    let output = SimOutput {
        config: &config,
        methods,
    };
    emit(&a.out, Format::Csv, &output, || {
        if output.methods.len() == 1 {
            format!("{}\n{}\n", MetricsReport::CSV_HEADER, output.methods[0].1.csv_row())
        } else {
            let mut s = format!("method,{}\n", MetricsReport::CSV_HEADER);
            for (name, r) in &output.methods {
                s.push_str(&format!("{name},{}\n", r.csv_row()));
            }
            s
        }
    })
}

fn ratecheck(a: &RateArgs) -> CliResult<()> {
    let first = *a.ns.first().ok_or_else(|| CliError::Parse("--ns needs at least one size".into()))?;
    let mut template = SimConfig::new(first, a.p, a.error, a.tau, a.reps, a.seed)?;
    template.basis = BasisConfig {
        order: a.order,
        k_n: a.knots,
        grow_with_n: a.grow_knots,
    };
    let table = rate_check(&a.ns, &template, a.extra_nulls)?;
    emit(&a.out, Format::Json, &table, || {
        let mut s = String::from("n,beta_mse,g_mse\n");
        for r in &table.rows {
            s.push_str(&format!("{},{},{}\n", r.n, r.beta_mse, r.g_mse));
        }
        s
    })
}

fn qqdiag(a: &QqArgs) -> CliResult<()> {
    let table = load(&a.data)?;
    let taus = if a.taus.is_empty() {
        (1..10).map(|k| k as f64 / 10.0).collect()
    } else {
        a.taus.clone()
    };
    let spec = model_spec(&a.data, &table, taus[0], penalty_spec(&a.penalty)?)?;
    let fits = fit_levels(&spec, &taus, a.tune.criterion, &path_options(&a.tune, FitOptions::default()))?;
    let levels: Vec<LevelFit> = fits.iter().map(|(l, _)| l.clone()).collect();
    let qq = qq_diagnostic(&levels, &table.y, a.draws, a.tune.seed)?;
    let spread = iqr(&table.y);
    let report = QqReport {
        taus,
        n_draws: a.draws,
        response_iqr: spread,
        max_deviation_over_iqr: qq.max_abs_deviation(0.0, 1.0) / spread,
        probs: qq.probs,
        simulated: qq.simulated,
        observed: qq.observed,
    };
    emit(&a.out, Format::Json, &report, || report.csv())?;
    fits.iter().try_for_each(|(_, f)| check_status(f.status))
}

//! The four subcommands. Each writes its CSV files and `run_summary.txt`
//! and returns whether every check passed.

use std::sync::Arc;

use perforated::continuation::{check_limits, limiting_values, Functional};
use perforated::field::{normal_derivative_limiting, LimitingMoments, SolutionField};
use perforated::geometry::{place, BoundaryCurve};
use perforated::lattice_green::validate_green;
use perforated::solver::{solve_limiting, solve_rescaled, solve_tau0};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ConfigError, LoadedConfig};
use crate::output::{Cell, CsvTable, OutputDir, Summary};

/// Failure classes, mapped onto exit codes by [`CliError::exit_code`].
#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Numeric(perforated::Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numeric(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Numeric(e) => write!(f, "numerical failure: {e}"),
            CliError::Io(e) => write!(f, "output error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<perforated::Error> for CliError {
    fn from(e: perforated::Error) -> Self {
        CliError::Numeric(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

/// Result of a command that ran to completion.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub passed: bool,
    /// Human-readable lines for stdout.
    pub lines: Vec<String>,
}

fn status(passed: bool) -> &'static str {
    if passed {
        "pass"
    } else {
        "fail"
    }
}

fn check_row(
    table: &mut CsvTable,
    lines: &mut Vec<String>,
    name: &str,
    value: f64,
    tol: f64,
) -> bool {
    let ok = value < tol;
    table.push(vec![name.into(), value.into(), tol.into(), ok.into()]);
    lines.push(format!(
        "{name:<22} {value:.3e} (tol {tol:.1e}) {}",
        status(ok)
    ));
    ok
}

pub fn cmd_green_validate(cfg: &LoadedConfig, out: &OutputDir) -> Result<Outcome, CliError> {
    let green = cfg.green()?;
    let c = &cfg.config;
    let tol = &c.tolerances;
    let report = validate_green(&green, c.green.samples, c.green.seed)?;
    let mut table = CsvTable::new(&["quantity", "value", "tolerance", "passed"]);
    let mut lines = Vec::new();
    let mut passed = true;
    for (name, value, t) in [
        ("periodicity", report.max_periodicity, tol.green_identity),
        ("symmetry", report.max_symmetry, tol.green_identity),
        ("laplacian", report.max_laplacian, tol.green_laplacian),
        ("cutoff_change", report.max_cutoff_change, tol.green_cutoff),
    ] {
        passed &= check_row(&mut table, &mut lines, name, value, t);
    }
    out.write_csv("green_report.csv", &table)?;

    let mut s = Summary::default();
    s.set("command", "green-validate");
    s.set("config_hash", cfg.hash.as_str());
    s.set("samples", report.samples);
    s.set("seed", c.green.seed as usize);
    s.set("split", green.params().split);
    s.set("real_cutoff", report.real_cutoff as usize);
    s.set("recip_cutoff", report.recip_cutoff as usize);
    s.set("omitted_real_shell", report.omitted_shells.0);
    s.set("omitted_recip_shell", report.omitted_shells.1);
    s.set("max_gradient_fd", report.max_gradient_fd);
    s.set("max_laplacian_5pt", report.max_laplacian_5pt);
    s.set("status", status(passed));
    out.write_summary(&s)?;
    Ok(Outcome { passed, lines })
}

pub fn cmd_solve(cfg: &LoadedConfig, out: &OutputDir) -> Result<Outcome, CliError> {
    let c = &cfg.config;
    let eps = c
        .solve
        .eps
        .ok_or_else(|| ConfigError("field `solve.eps`: required by the solve command".into()))?;
    let problem = cfg.problem()?;
    let (placement, placed) = place(&problem.curve, problem.p, eps, problem.green.cell())?;
    let sol = solve_rescaled(&problem.curve, &placement, &problem.green, &problem.g0)?;
    let field = SolutionField::new(&sol, &problem.green)?;

    let mut points = c.solve.points.clone();
    for (k, &x) in points.iter().enumerate() {
        if field.in_hole(x) {
            return Err(ConfigError(format!(
                "field `solve.points[{k}]`: {x:?} lies in a hole at eps = {eps}"
            ))
            .into());
        }
    }
    let [q1, q2] = problem.green.cell().periods();
    let mut rng = ChaCha8Rng::seed_from_u64(c.solve.seed);
    while points.len() < c.solve.points.len() + c.solve.random_points {
        let x = [rng.gen::<f64>() * q1, rng.gen::<f64>() * q2];
        if !field.in_hole(x) {
            points.push(x);
        }
    }

    let mut theta = CsvTable::new(&["index", "param", "x", "y", "g", "theta"]);
    for i in 0..problem.curve.len() {
        theta.push(vec![
            i.into(),
            problem.curve.params[i].into(),
            placed.nodes[i][0].into(),
            placed.nodes[i][1].into(),
            sol.datum.values[i].into(),
            sol.theta.values[i].into(),
        ]);
    }
    out.write_csv("theta.csv", &theta)?;

    let mut samples = CsvTable::new(&["x", "y", "u", "du_dx", "du_dy"]);
    for &x in &points {
        let f = field.eval(x)?;
        let g = f.gradient.unwrap_or([f64::NAN; 2]);
        samples.push(vec![
            x[0].into(),
            x[1].into(),
            f.value.into(),
            g[0].into(),
            g[1].into(),
        ]);
    }
    out.write_csv("field.csv", &samples)?;

    let bound = c.tolerances.residual * (1.0 + sol.datum.max_abs());
    let passed = sol.residual < bound;
    let mut scalars = CsvTable::new(&["quantity", "value"]);
    for (k, v) in [
        ("eps", eps),
        ("eps0", placement.eps0),
        ("xi", sol.xi),
        ("residual", sol.residual),
        ("residual_bound", bound),
        ("theta_mean", sol.theta.integral()),
        ("theta_max_abs", sol.theta.max_abs()),
    ] {
        scalars.push(vec![k.into(), v.into()]);
    }
    out.write_csv("solution.csv", &scalars)?;

    let mut s = Summary::default();
    s.set("command", "solve");
    s.set("config_hash", cfg.hash.as_str());
    s.set("n", problem.curve.len());
    s.set("eps", eps);
    s.set("xi", sol.xi);
    s.set("residual", sol.residual);
    s.set("field_points", points.len());
    s.set("status", status(passed));
    out.write_summary(&s)?;
    let lines = vec![
        format!("xi       = {:?}", sol.xi),
        format!(
            "residual = {:.3e} (bound {bound:.1e}) {}",
            sol.residual,
            status(passed)
        ),
        format!(
            "wrote {} boundary nodes and {} field samples",
            problem.curve.len(),
            points.len()
        ),
    ];
    Ok(Outcome { passed, lines })
}

pub fn cmd_sweep(cfg: &LoadedConfig, out: &OutputDir) -> Result<Outcome, CliError> {
    let c = &cfg.config;
    let problem = cfg.problem()?;
    let grid = cfg.sweep_grid()?;
    let functionals = cfg.functionals();
    let degree = c.sweep.degree;
    let report = check_limits(
        &functionals,
        &problem,
        &grid,
        degree,
        &c.tolerances.limits(),
    )?;

    let mut sweep = CsvTable::new(&["functional", "eps", "value"]);
    for row in &report.rows {
        for (e, v) in row.table.eps_grid.iter().zip(&row.table.values) {
            sweep.push(vec![row.functional.id().into(), (*e).into(), (*v).into()]);
        }
    }
    out.write_csv("sweep.csv", &sweep)?;

    let mut header: Vec<String> = ["functional", "degree", "scale"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..=degree).map(|j| format!("c{j}")));
    header.extend(
        [
            "max_residual",
            "a0",
            "limit",
            "difference",
            "tolerance",
            "passed",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    let mut fits = CsvTable::new(&header);
    let mut lines = Vec::new();
    for row in &report.rows {
        let mut cells: Vec<Cell> = vec![
            row.functional.id().into(),
            degree.into(),
            row.fit.scale.into(),
        ];
        cells.extend(row.fit.eps_coeffs().into_iter().map(Cell::from));
        cells.extend([
            row.fit.max_residual.into(),
            row.fit.extrapolated_limit.into(),
            row.limit.into(),
            row.difference.into(),
            row.tolerance.into(),
            row.passed().into(),
        ]);
        fits.push(cells);
        lines.push(format!(
            "{:<24} a0 = {:<22} limit = {:<22} diff {:.2e} (tol {:.0e}) residual {:.2e} {}",
            row.functional.id(),
            format!("{:?}", row.fit.extrapolated_limit),
            format!("{:?}", row.limit),
            row.difference,
            row.tolerance,
            row.fit.max_residual,
            status(row.passed())
        ));
    }
    out.write_csv("fit.csv", &fits)?;

    let passed = report.passed();
    let mut s = Summary::default();
    s.set("command", "sweep");
    s.set("config_hash", cfg.hash.as_str());
    s.set("n", problem.curve.len());
    s.set("grid_points", grid.len());
    s.set("eps_min", grid[0]);
    s.set("eps_max", grid[grid.len() - 1]);
    s.set("degree", degree);
    s.set("xi_limit", report.xi_limit);
    for row in &report.rows {
        s.set(
            &format!("{}_status", row.functional.slug()),
            status(row.passed()),
        );
    }
    s.set("status", status(passed));
    out.write_summary(&s)?;
    Ok(Outcome { passed, lines })
}

/// Limiting-problem summary: ξ̃, τ₀, boundary moments, `U₀`, `ũ` and the
/// limiting energy.
pub fn cmd_report(cfg: &LoadedConfig, out: &OutputDir) -> Result<Outcome, CliError> {
    let problem = cfg.problem()?;
    let curve: &Arc<BoundaryCurve> = &problem.curve;
    let lim = solve_limiting(curve, &problem.g0)?;
    let tau = solve_tau0(curve)?;
    let dnu = normal_derivative_limiting(&lim, &problem.policy)?;
    let moments = LimitingMoments::new(&lim, &dnu);
    let xi_pairing: f64 = (0..curve.len())
        .map(|i| lim.datum.values[i] * tau.tau0.values[i] * curve.weights[i])
        .sum();
    let functionals = cfg.functionals();
    let values = limiting_values(&functionals, &problem)?;

    let mut table = CsvTable::new(&["quantity", "value"]);
    let mut push = |k: String, v: f64| table.push(vec![k.into(), v.into()]);
    push("eps0".into(), problem.eps0());
    push("xi_limit".into(), lim.xi);
    push("xi_tau0_pairing".into(), xi_pairing);
    push("limiting_residual".into(), lim.residual);
    push("tau0_residual".into(), tau.residual);
    push("tau0_normalization_defect".into(), tau.normalization_defect);
    push(
        "tau0_min".into(),
        tau.tau0
            .values
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min),
    );
    push(
        "tau0_max".into(),
        tau.tau0
            .values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max),
    );
    for (name, m) in [
        ("nu_g0", moments.nu_g0),
        ("s_dnu", moments.s_dnu),
        ("nu_theta", moments.nu_theta),
        ("dipole", moments.dipole()),
    ] {
        push(format!("{name}_x"), m[0]);
        push(format!("{name}_y"), m[1]);
    }
    for (f, v) in functionals.iter().zip(&values) {
        let key = match f {
            Functional::Xi => continue,
            Functional::Energy => "energy_limit".to_string(),
            other => format!("{}_limit", other.slug()),
        };
        push(key, *v);
    }
    out.write_csv("limits.csv", &table)?;

    let bound = cfg.config.tolerances.residual * (1.0 + lim.datum.max_abs());
    let passed = lim.residual < bound && tau.residual < bound;
    let mut s = Summary::default();
    s.set("command", "report");
    s.set("config_hash", cfg.hash.as_str());
    s.set("n", curve.len());
    s.set("xi_limit", lim.xi);
    s.set("limiting_residual", lim.residual);
    s.set("tau0_residual", tau.residual);
    s.set("status", status(passed));
    out.write_summary(&s)?;
    let mut lines = vec![
        format!("xi_limit        = {:?}", lim.xi),
        format!("int g0 tau0     = {:?}", xi_pairing),
        format!(
            "residuals       = {:.2e} (limiting), {:.2e} (tau0)",
            lim.residual, tau.residual
        ),
    ];
    for (f, v) in functionals.iter().zip(&values).skip(1) {
        lines.push(format!("{:<15} = {v:?}", f.id()));
    }
    Ok(Outcome { passed, lines })
}

//! ε-sweeps of solution functionals, polynomial fits in ε, and comparison of
//! the fitted value at ε = 0 with the limiting problem.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::field::{
    energy, energy_limit, eval_limiting_exterior, eval_u0, normal_derivative_limiting,
    MicroscopicField, SolutionField,
};
use crate::geometry::{compute_eps0, place, BoundaryCurve, Shape, EPS0_MARGIN};
use crate::lattice_green::{PeriodicGreen, Point};
use crate::layer_potentials::OffsetPolicy;
use crate::solver::{solve_limiting, solve_rescaled, FourierData};

/// Scalar functional of the solution family `ε ↦ u[ε,g₀]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Functional {
    Xi,
    /// `U[ε,g₀](x)`
    MacroscopicAt(Point),
    /// `Ũ[ε,g₀](t)`
    MicroscopicAt(Point),
    /// `G[ε,g₀]`
    Energy,
}

impl Functional {
    /// Stable identifier used in tables and file names.
    pub fn id(&self) -> String {
        match self {
            Functional::Xi => "xi".into(),
            Functional::MacroscopicAt(x) => format!("U_at({},{})", x[0], x[1]),
            Functional::MicroscopicAt(t) => format!("microscopic_at({},{})", t[0], t[1]),
            Functional::Energy => "energy_G".into(),
        }
    }

    pub fn slug(&self) -> &'static str {
        match self {
            Functional::Xi => "xi",
            Functional::MacroscopicAt(_) => "macroscopic",
            Functional::MicroscopicAt(_) => "microscopic",
            Functional::Energy => "energy",
        }
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

/// Everything needed to solve at any admissible ε.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub curve: Arc<BoundaryCurve>,
    pub green: PeriodicGreen,
    pub p: Point,
    pub g0: FourierData,
    pub policy: OffsetPolicy,
}

impl ProblemSpec {
    pub fn new(
        shape: Shape,
        n: usize,
        green: PeriodicGreen,
        p: Point,
        g0: FourierData,
    ) -> Result<Self> {
        let curve = Arc::new(BoundaryCurve::new(shape, n)?);
        compute_eps0(&curve, p, green.cell())?;
        Ok(Self {
            curve,
            green,
            p,
            g0,
            policy: OffsetPolicy::default(),
        })
    }

    pub fn eps0(&self) -> f64 {
        compute_eps0(&self.curve, self.p, self.green.cell()).expect("checked at construction")
    }

    /// 8 Chebyshev points in `[0.05, 0.5·eps0]`.
    pub fn default_grid(&self) -> Vec<f64> {
        chebyshev_grid(0.05, 0.5 * self.eps0(), 8)
    }
}

/// Chebyshev points of the first kind mapped to `[lo, hi]`, ascending.
pub fn chebyshev_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let n = count as f64;
    (0..count)
        .map(|k| {
            let c = ((2 * k + 1) as f64 * PI / (2.0 * n)).cos();
            0.5 * (lo + hi) - 0.5 * (hi - lo) * c
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub functional: Functional,
    pub eps_grid: Vec<f64>,
    pub values: Vec<f64>,
}

fn check_grid(problem: &ProblemSpec, grid: &[f64]) -> Result<()> {
    let eps0 = problem.eps0();
    if grid.is_empty() {
        return Err(Error::Domain("empty eps grid".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain(format!(
            "eps grid {grid:?} is not strictly ascending"
        )));
    }
    if let Some(bad) = grid
        .iter()
        .find(|&&e| !(e > 0.0 && e < eps0 * (1.0 - EPS0_MARGIN)))
    {
        return Err(Error::Domain(format!("eps = {bad} outside (0, {eps0})")));
    }
    Ok(())
}

fn functional_values(
    functionals: &[Functional],
    problem: &ProblemSpec,
    eps: f64,
) -> Result<Vec<f64>> {
    let (pl, _) = place(&problem.curve, problem.p, eps, problem.green.cell())?;
    let sol = solve_rescaled(&problem.curve, &pl, &problem.green, &problem.g0)?;
    let mut field = None;
    let mut micro = None;
    let mut out = Vec::with_capacity(functionals.len());
    for f in functionals {
        let v = match *f {
            Functional::Xi => sol.xi,
            Functional::MacroscopicAt(x) => {
                if field.is_none() {
                    field = Some(SolutionField::new(&sol, &problem.green)?);
                }
                field.as_ref().expect("set above").macroscopic(x)?.value
            }
            Functional::MicroscopicAt(s) => {
                if micro.is_none() {
                    micro = Some(MicroscopicField::new(&sol, &problem.green)?);
                }
                micro.as_ref().expect("set above").eval(s)?.value
            }
            Functional::Energy => energy(&sol, &problem.green, &problem.policy)?.g,
        };
        if !v.is_finite() {
            return Err(Error::Domain(format!("{f} is not finite at eps = {eps}")));
        }
        out.push(v);
    }
    Ok(out)
}

/// One table per functional, with a single solve per grid point. Grid points
/// run on scoped threads; results are gathered in grid order.
pub fn sweep_all(
    functionals: &[Functional],
    problem: &ProblemSpec,
    grid: &[f64],
) -> Result<Vec<SweepTable>> {
    check_grid(problem, grid)?;
    let workers = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(grid.len());
    let chunk = grid.len().div_ceil(workers);
    let rows: Vec<Result<Vec<f64>>> = std::thread::scope(|scope| {
        let handles: Vec<_> = grid
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|&eps| functional_values(functionals, problem, eps))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("sweep worker panicked"))
            .collect()
    });
    let mut tables: Vec<SweepTable> = functionals
        .iter()
        .map(|&f| SweepTable {
            functional: f,
            eps_grid: grid.to_vec(),
            values: Vec::with_capacity(grid.len()),
        })
        .collect();
    for row in rows {
        for (t, v) in tables.iter_mut().zip(row?) {
            t.values.push(v);
        }
    }
    Ok(tables)
}

pub fn sweep(functional: Functional, problem: &ProblemSpec, grid: &[f64]) -> Result<SweepTable> {
    Ok(sweep_all(&[functional], problem, grid)?.remove(0))
}

/// Least-squares polynomial in the scaled variable `s = ε/scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Coefficients `c_0..c_d` of `Σ c_j s^j`.
    pub coeffs: Vec<f64>,
    /// `max_k ε_k`.
    pub scale: f64,
    pub max_residual: f64,
    pub extrapolated_limit: f64,
}

impl FitResult {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficients of the same polynomial in powers of ε.
    pub fn eps_coeffs(&self) -> Vec<f64> {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c / self.scale.powi(j as i32))
            .collect()
    }

    pub fn eval(&self, eps: f64) -> f64 {
        let s = eps / self.scale;
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
    }
}

/// Fit a degree-`d` polynomial to the table; requires `d + 2` grid points.
pub fn fit(table: &SweepTable, degree: usize) -> Result<FitResult> {
    let m = table.eps_grid.len();
    if m < degree + 2 {
        return Err(Error::Domain(format!(
            "degree {degree} needs at least {} grid points, got {m}",
            degree + 2
        )));
    }
    let scale = table.eps_grid.iter().cloned().fold(0.0, f64::max);
    if !(scale > 0.0) {
        return Err(Error::RankDeficient("grid has no positive point".into()));
    }
    let v = DMatrix::from_fn(m, degree + 1, |i, j| {
        (table.eps_grid[i] / scale).powi(j as i32)
    });
    let y = DVector::from_column_slice(&table.values);
    let svd = v.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > 1e-12 * smax) {
        return Err(Error::RankDeficient(format!(
            "singular values span [{smin:e}, {smax:e}]"
        )));
    }
    let c = svd
        .solve(&y, 0.0)
        .map_err(|e| Error::RankDeficient(e.to_string()))?;
    let max_residual = (&v * &c - &y).amax();
    let coeffs: Vec<f64> = c.iter().cloned().collect();
    Ok(FitResult {
        extrapolated_limit: coeffs[0],
        coeffs,
        scale,
        max_residual,
    })
}

/// Tolerances for `|a₀ − limit|` per functional kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitTolerances {
    pub xi: f64,
    pub macroscopic: f64,
    pub microscopic: f64,
    pub energy: f64,
}

impl Default for LimitTolerances {
    fn default() -> Self {
        Self {
            xi: 1e-6,
            macroscopic: 1e-4,
            microscopic: 1e-4,
            energy: 1e-3,
        }
    }
}

impl LimitTolerances {
    pub fn for_functional(&self, f: &Functional) -> f64 {
        match f {
            Functional::Xi => self.xi,
            Functional::MacroscopicAt(_) => self.macroscopic,
            Functional::MicroscopicAt(_) => self.microscopic,
            Functional::Energy => self.energy,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitRow {
    pub functional: Functional,
    pub table: SweepTable,
    pub fit: FitResult,
    /// Value from the limiting problem.
    pub limit: f64,
    pub difference: f64,
    pub tolerance: f64,
}

impl LimitRow {
    pub fn passed(&self) -> bool {
        self.difference <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitReport {
    pub rows: Vec<LimitRow>,
    pub xi_limit: f64,
}

impl LimitReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(LimitRow::passed)
    }
}

/// Limits of the functionals computed from the limiting problem alone.
pub fn limiting_values(functionals: &[Functional], problem: &ProblemSpec) -> Result<Vec<f64>> {
    let lim = solve_limiting(&problem.curve, &problem.g0)?;
    let mut dnu = None;
    let mut dn = || -> Result<_> {
        if dnu.is_none() {
            dnu = Some(normal_derivative_limiting(&lim, &problem.policy)?);
        }
        Ok(dnu.clone().expect("set above"))
    };
    functionals
        .iter()
        .map(|f| match *f {
            Functional::Xi => Ok(lim.xi),
            Functional::MacroscopicAt(x) => {
                Ok(eval_u0(&lim, &dn()?, &problem.green, problem.p, x)?.value)
            }
            Functional::MicroscopicAt(t) => Ok(eval_limiting_exterior(&lim, t)?.value),
            Functional::Energy => Ok(energy_limit(&lim, &dn()?)),
        })
        .collect()
}

/// Sweep, fit and compare each functional's fitted `a₀` with its limit.
pub fn check_limits(
    functionals: &[Functional],
    problem: &ProblemSpec,
    grid: &[f64],
    degree: usize,
    tolerances: &LimitTolerances,
) -> Result<LimitReport> {
    let tables = sweep_all(functionals, problem, grid)?;
    let limits = limiting_values(functionals, problem)?;
    let xi_limit = solve_limiting(&problem.curve, &problem.g0)?.xi;
    let rows = tables
        .into_iter()
        .zip(limits)
        .map(|(table, limit)| {
            let f = fit(&table, degree)?;
            Ok(LimitRow {
                functional: table.functional,
                difference: (f.extrapolated_limit - limit).abs(),
                tolerance: tolerances.for_functional(&table.functional),
                fit: f,
                limit,
                table,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LimitReport { rows, xi_limit })
}

/// The standard battery: ξ, `U` at `p + (0.4, 0.1)`, `Ũ` at `(2, 0)`, and `G`.
pub fn standard_functionals(p: Point) -> Vec<Functional> {
    vec![
        Functional::Xi,
        Functional::MacroscopicAt([p[0] + 0.4, p[1] + 0.1]),
        Functional::MicroscopicAt([2.0, 0.0]),
        Functional::Energy,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice_green::LatticeCell;

    fn disk_problem(g0: FourierData) -> ProblemSpec {
        ProblemSpec::new(
            Shape::Disk { radius: 1.0 },
            64,
            PeriodicGreen::new(LatticeCell::unit()),
            [0.5, 0.5],
            g0,
        )
        .unwrap()
    }

    fn cos1() -> FourierData {
        FourierData::new(0.0, vec![1.0], vec![])
    }

    #[test]
    fn chebyshev_grid_is_ascending_and_interior() {
        let g = chebyshev_grid(0.05, 0.25, 8);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(g[0] > 0.05 && g[7] < 0.25);
        assert!((g[0] + g[7] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn fit_reproduces_polynomials() {
        let eps_grid = chebyshev_grid(0.05, 0.25, 8);
        let values = eps_grid.iter().map(|e| 1.0 + 3.0 * e * e).collect();
        let t = SweepTable {
            functional: Functional::Xi,
            eps_grid,
            values,
        };
        let f = fit(&t, 4).unwrap();
        let c = f.eps_coeffs();
        assert!((c[0] - 1.0).abs() < 1e-12 && c[1].abs() < 1e-10 && (c[2] - 3.0).abs() < 1e-9);
        assert!(f.max_residual < 1e-12);
        assert!(t
            .eps_grid
            .iter()
            .zip(&t.values)
            .all(|(e, v)| (f.eval(*e) - v).abs() < 1e-12));
        assert!(fit(&t, 7).is_err());
        let flat = SweepTable {
            functional: Functional::Xi,
            eps_grid: vec![0.0; 6],
            values: vec![1.0; 6],
        };
        assert!(matches!(fit(&flat, 2), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn sweep_of_constant_datum_and_bad_grid() {
        let pr = disk_problem(FourierData::constant(2.0));
        let t = sweep(Functional::Xi, &pr, &[0.1, 0.2, 0.3]).unwrap();
        assert!(t.values.iter().all(|v| (v - 2.0).abs() < 1e-12));
        assert!(sweep(Functional::Xi, &pr, &[0.1, 0.6]).is_err());
        assert!(sweep(Functional::Xi, &pr, &[0.2, 0.1]).is_err());
        let rep = check_limits(
            &standard_functionals(pr.p),
            &pr,
            &pr.default_grid(),
            4,
            &LimitTolerances::default(),
        )
        .unwrap();
        for r in &rep.rows {
            assert!(r.difference < 1e-12, "{}: {}", r.functional, r.difference);
        }
    }

    #[test]
    fn energy_sweep_is_positive() {
        let pr = disk_problem(cos1());
        let t = sweep(Functional::Energy, &pr, &[0.05, 0.15, 0.3]).unwrap();
        assert!(t.values.iter().all(|v| v.is_finite() && *v > 0.0));
    }

    #[test]
    fn disk_battery_passes_on_small_eps() {
        // the energy series has ε² coefficient 2π², so limits are checked on
        // a grid well inside the disk of convergence
        let pr = disk_problem(cos1());
        let rep = check_limits(
            &standard_functionals(pr.p),
            &pr,
            &chebyshev_grid(0.01, 0.1, 8),
            4,
            &LimitTolerances::default(),
        )
        .unwrap();
        for r in &rep.rows {
            assert!(
                r.passed(),
                "{}: a0 = {} limit = {}",
                r.functional,
                r.fit.extrapolated_limit,
                r.limit
            );
        }
        let energy = rep
            .rows
            .iter()
            .find(|r| r.functional == Functional::Energy)
            .unwrap();
        assert!((energy.fit.extrapolated_limit - PI).abs() < 1e-3);
    }

    #[test]
    fn kite_residuals_decay_with_degree() {
        let pr = ProblemSpec::new(
            Shape::Kite { scale: 1.0 },
            64,
            PeriodicGreen::new(LatticeCell::unit()),
            [0.5, 0.5],
            cos1(),
        )
        .unwrap();
        let t = sweep(Functional::Xi, &pr, &pr.default_grid()).unwrap();
        let res: Vec<f64> = (2..=5).map(|d| fit(&t, d).unwrap().max_residual).collect();
        assert!(res.windows(2).all(|w| w[1] < w[0]), "{res:?}");
    }
}

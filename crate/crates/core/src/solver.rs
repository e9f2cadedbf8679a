//! Dense solvers for the rescaled boundary integral system, its limiting
//! form at `ε = 0`, and the adjoint normalization density `τ₀`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{place, BoundaryCurve, Placement, Shape, TrigInterpolant, EPS0_MARGIN};
use crate::lattice_green::{PeriodicGreen, Point};
use crate::layer_potentials::{assemble_adjoint_free, assemble_free, assemble_regular, Density};

/// Finite Fourier series `a₀ + Σ_k a_k cos kφ + b_k sin kφ` in the curve parameter.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FourierData {
    pub a0: f64,
    /// `a_1, a_2, …`
    pub cos: Vec<f64>,
    /// `b_1, b_2, …`
    pub sin: Vec<f64>,
}

impl FourierData {
    pub fn constant(c: f64) -> Self {
        Self {
            a0: c,
            ..Self::default()
        }
    }

    pub fn new(a0: f64, cos: Vec<f64>, sin: Vec<f64>) -> Self {
        Self { a0, cos, sin }
    }

    pub fn degree(&self) -> usize {
        let last = |v: &[f64]| v.iter().rposition(|&c| c != 0.0).map_or(0, |i| i + 1);
        last(&self.cos).max(last(&self.sin))
    }

    pub fn eval(&self, phi: f64) -> f64 {
        let mut acc = self.a0;
        for (k, a) in self.cos.iter().enumerate() {
            acc += a * ((k + 1) as f64 * phi).cos();
        }
        for (k, b) in self.sin.iter().enumerate() {
            acc += b * ((k + 1) as f64 * phi).sin();
        }
        acc
    }

    /// `α·self + β·other`.
    pub fn combine(&self, alpha: f64, other: &Self, beta: f64) -> Self {
        let mix = |a: &[f64], b: &[f64]| {
            (0..a.len().max(b.len()))
                .map(|i| {
                    alpha * a.get(i).copied().unwrap_or(0.0)
                        + beta * b.get(i).copied().unwrap_or(0.0)
                })
                .collect()
        };
        Self {
            a0: alpha * self.a0 + beta * other.a0,
            cos: mix(&self.cos, &other.cos),
            sin: mix(&self.sin, &other.sin),
        }
    }

    /// `Σ_k k π (a_k² + b_k²)`, the Dirichlet energy of the exterior harmonic
    /// extension of the data on the unit circle.
    pub fn unit_disk_exterior_energy(&self) -> f64 {
        let sum = |v: &[f64]| {
            v.iter()
                .enumerate()
                .map(|(k, c)| (k + 1) as f64 * PI * c * c)
                .sum::<f64>()
        };
        sum(&self.cos) + sum(&self.sin)
    }
}

/// Dirichlet datum on the reference curve, tabulated at the nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryDatum {
    pub coeffs: FourierData,
    pub values: Vec<f64>,
}

impl BoundaryDatum {
    /// Requires degree `K ≤ N/4` so that the data are resolved on the grid.
    pub fn new(coeffs: FourierData, curve: &BoundaryCurve) -> Result<Self> {
        let k = coeffs.degree();
        if 4 * k > curve.len() {
            return Err(Error::Domain(format!(
                "datum degree {k} exceeds N/4 for N = {}",
                curve.len()
            )));
        }
        let values = curve.params.iter().map(|&t| coeffs.eval(t)).collect();
        Ok(Self { coeffs, values })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

/// Solution `(θ, ξ)` of the rescaled system at scale `ε`, or of the limiting
/// system when `ε = 0`.
#[derive(Debug, Clone)]
pub struct RescaledSolution {
    pub theta: Density,
    pub xi: f64,
    pub eps: f64,
    pub datum: BoundaryDatum,
    /// Max-norm of the discrete equations, including the mean-zero row.
    pub residual: f64,
    /// Hole placement; `None` for the limiting system.
    pub placement: Option<Placement>,
}

impl RescaledSolution {
    pub fn curve(&self) -> &Arc<BoundaryCurve> {
        &self.theta.curve
    }

    pub fn is_limiting(&self) -> bool {
        self.placement.is_none()
    }

    /// Residual bound `10⁻¹⁰·(1 + ‖g‖)`.
    pub fn residual_ok(&self) -> bool {
        self.residual < 1e-10 * (1.0 + self.datum.max_abs())
    }
}

/// Normalized solution of the adjoint kernel equation.
#[derive(Debug, Clone)]
pub struct AdjointDensity {
    pub tau0: Density,
    /// `|Σ τ₀ W − 1|`.
    pub normalization_defect: f64,
    /// Max-norm of `(−I/2 + K*)τ₀`, including the replaced equation.
    pub residual: f64,
}

fn solve_augmented(
    curve: &Arc<BoundaryCurve>,
    op: DMatrix<f64>,
    datum: BoundaryDatum,
    eps: f64,
    placement: Option<Placement>,
) -> Result<RescaledSolution> {
    let n = curve.len();
    let mut a = DMatrix::zeros(n + 1, n + 1);
    a.view_mut((0, 0), (n, n)).copy_from(&op);
    for i in 0..n {
        a[(i, n)] = 1.0;
        a[(n, i)] = curve.weights[i];
    }
    let mut rhs = DVector::zeros(n + 1);
    rhs.rows_mut(0, n).copy_from_slice(&datum.values);
    let x = a
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular(format!("augmented system with N = {n}")))?;
    let residual = (&a * &x - &rhs).amax();
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::Singular(format!("non-finite solution with N = {n}")));
    }
    let theta = Density {
        values: x.rows(0, n).iter().cloned().collect(),
        curve: curve.clone(),
        mean_zero: true,
    };
    Ok(RescaledSolution {
        theta,
        xi: x[n],
        eps,
        datum,
        residual,
        placement,
    })
}

fn half_identity_plus(mut m: DMatrix<f64>) -> DMatrix<f64> {
    for i in 0..m.nrows() {
        m[(i, i)] -= 0.5;
    }
    m
}

/// Solve `(−I/2 + K + B_ε)θ + ξ = g`, `∫ θ dσ = 0` for `0 < ε < ε₀`.
pub fn solve_rescaled(
    curve: &Arc<BoundaryCurve>,
    placement: &Placement,
    green: &PeriodicGreen,
    g: &FourierData,
) -> Result<RescaledSolution> {
    let eps = placement.eps;
    if eps == 0.0 {
        return Err(Error::Precondition(
            "eps = 0 is the limiting system; use solve_limiting".into(),
        ));
    }
    if !(eps > 0.0 && eps < placement.eps0 * (1.0 - EPS0_MARGIN)) {
        return Err(Error::Domain(format!(
            "eps = {eps} outside (0, {})",
            placement.eps0
        )));
    }
    let datum = BoundaryDatum::new(g.clone(), curve)?;
    let op = assemble_free(curve).matrix + assemble_regular(curve, eps, green)?.matrix;
    solve_augmented(curve, half_identity_plus(op), datum, eps, Some(*placement))
}

/// Solve the limiting system `(−I/2 + K)θ̃ + ξ̃ = g₀`, `∫ θ̃ dσ = 0`.
pub fn solve_limiting(curve: &Arc<BoundaryCurve>, g0: &FourierData) -> Result<RescaledSolution> {
    let datum = BoundaryDatum::new(g0.clone(), curve)?;
    let op = half_identity_plus(assemble_free(curve).matrix);
    solve_augmented(curve, op, datum, 0.0, None)
}

/// Solve `(−I/2 + K*)τ = 0` with `∫ τ dσ = 1`.
pub fn solve_tau0(curve: &Arc<BoundaryCurve>) -> Result<AdjointDensity> {
    let n = curve.len();
    let op = half_identity_plus(assemble_adjoint_free(curve).matrix);
    let row = (0..n)
        .max_by(|&i, &j| op[(i, i)].abs().total_cmp(&op[(j, j)].abs()))
        .unwrap_or(0);
    let mut a = op.clone();
    let mut rhs = DVector::zeros(n);
    for j in 0..n {
        a[(row, j)] = curve.weights[j];
    }
    rhs[row] = 1.0;
    let tau = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular(format!("adjoint system with N = {n}")))?;
    let residual = (&op * &tau).amax();
    let total: f64 = tau.iter().zip(&curve.weights).map(|(t, w)| t * w).sum();
    Ok(AdjointDensity {
        tau0: Density {
            values: tau.iter().cloned().collect(),
            curve: curve.clone(),
            mean_zero: false,
        },
        normalization_defect: (total - 1.0).abs(),
        residual,
    })
}

/// Self-convergence of `(θ, ξ)` against the finest discretization.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub theta_error: f64,
    pub xi_error: f64,
}

impl ConvergenceRow {
    pub fn error(&self) -> f64 {
        self.theta_error.max(self.xi_error)
    }
}

/// Solve at each `N` in `n_list` (increasing) and compare with the finest,
/// interpolating each density trigonometrically to the finest nodes.
pub fn convergence_study(
    shape: Shape,
    p: Point,
    eps: f64,
    green: &PeriodicGreen,
    g: &FourierData,
    n_list: &[usize],
) -> Result<Vec<ConvergenceRow>> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain(format!(
            "N list {n_list:?} must be increasing"
        )));
    }
    let mut sols = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let curve = Arc::new(BoundaryCurve::new(shape, n)?);
        let sol = if eps == 0.0 {
            solve_limiting(&curve, g)?
        } else {
            let (pl, _) = place(&curve, p, eps, green.cell())?;
            solve_rescaled(&curve, &pl, green, g)?
        };
        sols.push(sol);
    }
    let finest = sols.last().expect("non-empty");
    let fine_params = &finest.curve().params;
    Ok(sols
        .iter()
        .map(|s| {
            let interp = TrigInterpolant::new(&s.theta.values);
            let theta_error = fine_params
                .iter()
                .zip(&finest.theta.values)
                .map(|(&t, v)| (interp.eval(t) - v).abs())
                .fold(0.0, f64::max);
            ConvergenceRow {
                n: s.curve().len(),
                theta_error,
                xi_error: (s.xi - finest.xi).abs(),
            }
        })
        .collect())
}

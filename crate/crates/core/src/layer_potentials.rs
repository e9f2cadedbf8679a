//! Nyström assembly of double-layer boundary operators and off-boundary
//! evaluation of periodic double-layer potentials.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryCurve, Placement, TrigInterpolant};
use crate::lattice_green::{
    dot, norm, GreenEval, LatticeCell, PeriodicDipoles, PeriodicGreen, Point,
};

/// Node values of a density on a boundary curve.
#[derive(Debug, Clone)]
pub struct Density {
    pub values: Vec<f64>,
    pub curve: Arc<BoundaryCurve>,
    pub mean_zero: bool,
}

impl Density {
    pub fn new(curve: Arc<BoundaryCurve>, values: Vec<f64>) -> Result<Self> {
        if values.len() != curve.len() {
            return Err(Error::Domain(format!(
                "density has {} values for {} nodes",
                values.len(),
                curve.len()
            )));
        }
        Ok(Self {
            values,
            curve,
            mean_zero: false,
        })
    }

    /// Density flagged as mean-zero; the flag is checked against the quadrature.
    pub fn mean_zero(curve: Arc<BoundaryCurve>, values: Vec<f64>) -> Result<Self> {
        let mut d = Self::new(curve, values)?;
        let scale = d.values.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let mean = d.integral();
        if mean.abs() >= 1e-10 * scale.max(f64::MIN_POSITIVE) && scale > 0.0 {
            return Err(Error::Precondition(format!(
                "density integral {mean:e} is not zero"
            )));
        }
        d.mean_zero = true;
        Ok(d)
    }

    pub fn constant(curve: Arc<BoundaryCurve>, c: f64) -> Self {
        let n = curve.len();
        Self {
            values: vec![c; n],
            curve,
            mean_zero: c == 0.0,
        }
    }

    pub fn from_fn(curve: Arc<BoundaryCurve>, f: impl Fn(f64) -> f64) -> Self {
        let values = curve.params.iter().map(|&t| f(t)).collect();
        Self {
            values,
            curve,
            mean_zero: false,
        }
    }

    /// `∫ μ dσ` by the trapezoidal rule.
    pub fn integral(&self) -> f64 {
        self.curve.integrate(&self.values)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OperatorKind {
    FreeDoubleLayer,
    AdjointFreeDoubleLayer,
    RegularPart { eps: f64 },
}

/// Dense Nyström matrix acting on node values.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryOperator {
    pub matrix: DMatrix<f64>,
    pub kind: OperatorKind,
}

impl BoundaryOperator {
    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(values);
        (&self.matrix * v).iter().cloned().collect()
    }
}

/// `θ ↦ −∫ DS(t − s)·ν(s) θ(s) dσ_s`, diagonal by the curvature limit `κ/(4π)`.
pub fn assemble_free(curve: &BoundaryCurve) -> BoundaryOperator {
    let n = curve.len();
    let matrix = DMatrix::from_fn(n, n, |i, j| {
        let k = if i == j {
            curve.curvature[i] / (4.0 * PI)
        } else {
            let d = sub(curve.nodes[i], curve.nodes[j]);
            -dot(d, curve.normals[j]) / (2.0 * PI * dot(d, d))
        };
        k * curve.weights[j]
    });
    BoundaryOperator {
        matrix,
        kind: OperatorKind::FreeDoubleLayer,
    }
}

/// `τ ↦ ∫ DS(t − s)·ν(t) τ(s) dσ_s`, the transpose-geometry kernel.
pub fn assemble_adjoint_free(curve: &BoundaryCurve) -> BoundaryOperator {
    let n = curve.len();
    let matrix = DMatrix::from_fn(n, n, |i, j| {
        let k = if i == j {
            curve.curvature[i] / (4.0 * PI)
        } else {
            let d = sub(curve.nodes[i], curve.nodes[j]);
            dot(d, curve.normals[i]) / (2.0 * PI * dot(d, d))
        };
        k * curve.weights[j]
    });
    BoundaryOperator {
        matrix,
        kind: OperatorKind::AdjointFreeDoubleLayer,
    }
}

/// `θ ↦ −ε ∫ DR(ε(t − s))·ν(s) θ(s) dσ_s` with the regular part `R = S^q − S`.
pub fn assemble_regular(
    curve: &BoundaryCurve,
    eps: f64,
    green: &PeriodicGreen,
) -> Result<BoundaryOperator> {
    let n = curve.len();
    let mut matrix = DMatrix::zeros(n, n);
    if eps != 0.0 {
        for i in 0..n {
            for j in 0..n {
                let d = sub(curve.nodes[i], curve.nodes[j]);
                let g = green.eval_regular([eps * d[0], eps * d[1]])?;
                matrix[(i, j)] = -eps * dot(g.gradient, curve.normals[j]) * curve.weights[j];
            }
        }
    }
    Ok(BoundaryOperator {
        matrix,
        kind: OperatorKind::RegularPart { eps },
    })
}

/// Cap on the node count of the refined quadrature.
pub const MAX_FINE_NODES: usize = 1 << 18;
const MAX_LEVELS: u32 = 16;
/// Fine node spacing relative to the distance from the curve.
const SPACING_PER_DISTANCE: f64 = 1.0 / 5.0;

#[derive(Debug)]
struct Level {
    nodes: Vec<Point>,
    /// `μ_j W_j ν_j`.
    moments: Vec<Point>,
}

/// Free-space double layer `−∫ DS(t − s)·ν(s) μ(s) dσ_s` in reference
/// coordinates. Points close to the curve are handled by evaluating on a
/// trigonometrically upsampled copy of the density.
#[derive(Debug)]
pub struct FreeLayer {
    curve: Arc<BoundaryCurve>,
    density: TrigInterpolant,
    levels: Vec<OnceLock<Level>>,
}

impl FreeLayer {
    pub fn new(curve: Arc<BoundaryCurve>, values: &[f64]) -> Self {
        assert_eq!(values.len(), curve.len());
        let levels = (0..=MAX_LEVELS)
            .map(|_| OnceLock::new())
            .collect::<Vec<_>>();
        let base = Level {
            nodes: curve.nodes.clone(),
            moments: moments(&curve, values),
        };
        levels[0].set(base).expect("fresh cell");
        Self {
            density: TrigInterpolant::new(values),
            curve,
            levels,
        }
    }

    pub fn curve(&self) -> &BoundaryCurve {
        &self.curve
    }

    /// Distance below which even the finest refinement is inadequate,
    /// at the fastest point of the parametrization.
    pub fn guard(&self) -> f64 {
        self.guard_at(self.curve.max_speed())
    }

    fn guard_at(&self, speed: f64) -> f64 {
        self.spacing(self.max_refinement(), speed) / SPACING_PER_DISTANCE
    }

    fn max_refinement(&self) -> u32 {
        (0..=MAX_LEVELS)
            .take_while(|&k| self.curve.len() << k <= MAX_FINE_NODES)
            .last()
            .unwrap_or(0)
    }

    fn spacing(&self, level: u32, speed: f64) -> f64 {
        2.0 * PI * speed / (self.curve.len() << level) as f64
    }

    /// Smallest refinement resolving a point at distance `d` from the curve
    /// whose nearest boundary point moves with parametric speed `speed`.
    pub fn refinement_for(&self, d: f64, speed: f64) -> Option<u32> {
        (0..=self.max_refinement()).find(|&k| self.spacing(k, speed) <= SPACING_PER_DISTANCE * d)
    }

    fn level(&self, k: u32) -> &Level {
        self.levels[k as usize].get_or_init(|| {
            let m = self.curve.len() << k;
            let fine = self
                .curve
                .resample(m)
                .expect("refinement of a valid curve is valid");
            let values = self.density.sample(m);
            Level {
                nodes: fine.nodes.clone(),
                moments: moments(&fine, &values),
            }
        })
    }

    fn sum(&self, k: u32, t: Point) -> GreenEval {
        let lv = self.level(k);
        let mut value = 0.0;
        let mut grad = [0.0; 2];
        for (s, c) in lv.nodes.iter().zip(&lv.moments) {
            let d = sub(t, *s);
            let r2 = dot(d, d);
            let dc = dot(d, *c);
            value += dc / r2;
            grad[0] += c[0] / r2 - 2.0 * dc * d[0] / (r2 * r2);
            grad[1] += c[1] / r2 - 2.0 * dc * d[1] / (r2 * r2);
        }
        let f = -1.0 / (2.0 * PI);
        GreenEval {
            value: f * value,
            gradient: [f * grad[0], f * grad[1]],
        }
    }

    fn refinement_at(&self, t: Point) -> Result<u32> {
        let lower = norm(t) - 1.01 * self.curve.bounding_radius();
        if lower > 0.0 && self.refinement_for(lower, self.curve.max_speed()) == Some(0) {
            return Ok(0);
        }
        let loc = self.curve.locate(t);
        let speed = norm(self.curve.shape().d1(loc.param));
        self.refinement_for(loc.distance, speed)
            .ok_or(Error::Proximity {
                x: t[0],
                y: t[1],
                distance: loc.distance,
                guard: self.guard_at(speed),
            })
    }

    /// Value and gradient at `t`, refined as needed.
    pub fn eval(&self, t: Point) -> Result<GreenEval> {
        let k = self.refinement_at(t)?;
        Ok(self.sum(k, t))
    }

    /// Fine-minus-coarse correction to the plain node quadrature at `t`.
    pub fn near_correction(&self, t: Point) -> Result<GreenEval> {
        let k = self.refinement_at(t)?;
        if k == 0 {
            return Ok(GreenEval {
                value: 0.0,
                gradient: [0.0; 2],
            });
        }
        let fine = self.sum(k, t);
        let coarse = self.sum(0, t);
        Ok(GreenEval {
            value: fine.value - coarse.value,
            gradient: sub(fine.gradient, coarse.gradient),
        })
    }
}

fn moments(curve: &BoundaryCurve, values: &[f64]) -> Vec<Point> {
    curve
        .normals
        .iter()
        .zip(&curve.weights)
        .zip(values)
        .map(|((nu, w), m)| [m * w * nu[0], m * w * nu[1]])
        .collect()
}

/// Rescaled periodic double layer
/// `w(x) = −ε ∫ DS^q(x − p − εs)·ν(s) θ(s) dσ_s` of a density on the
/// reference curve placed at `p` with scale `ε > 0`.
#[derive(Debug)]
pub struct PeriodicLayer {
    cell: LatticeCell,
    p: Point,
    eps: f64,
    free: FreeLayer,
    dipoles: PeriodicDipoles,
}

impl PeriodicLayer {
    pub fn new(density: &Density, placement: &Placement, cell: &LatticeCell) -> Result<Self> {
        let eps = placement.eps;
        if !(eps > 0.0) {
            return Err(Error::Precondition(format!(
                "periodic layer needs eps > 0, got {eps}"
            )));
        }
        let curve = &density.curve;
        let p = placement.p;
        let sources = curve
            .nodes
            .iter()
            .map(|s| [p[0] + eps * s[0], p[1] + eps * s[1]])
            .collect();
        let mom = moments(curve, &density.values)
            .into_iter()
            .map(|c| [eps * c[0], eps * c[1]])
            .collect();
        Ok(Self {
            cell: *cell,
            p,
            eps,
            free: FreeLayer::new(curve.clone(), &density.values),
            dipoles: PeriodicDipoles::new(*cell, sources, mom),
        })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Reference coordinate of the hole image nearest to `x`.
    pub fn local_coordinate(&self, x: Point) -> Point {
        let d = self.cell.reduce(sub(x, self.p));
        [d[0] / self.eps, d[1] / self.eps]
    }

    /// Proximity guard in cell coordinates.
    pub fn guard(&self) -> f64 {
        self.eps * self.free.guard()
    }

    /// Value and gradient of `w` at `x`.
    pub fn eval(&self, x: Point) -> Result<GreenEval> {
        let t = self.local_coordinate(x);
        let corr = self.free.near_correction(t).map_err(|e| match e {
            Error::Proximity {
                distance, guard, ..
            } => Error::Proximity {
                x: x[0],
                y: x[1],
                distance: distance * self.eps,
                guard: guard * self.eps,
            },
            other => other,
        })?;
        let phi = self.dipoles.eval(x)?;
        Ok(GreenEval {
            value: -phi.value + corr.value,
            gradient: [
                -phi.gradient[0] + corr.gradient[0] / self.eps,
                -phi.gradient[1] + corr.gradient[1] / self.eps,
            ],
        })
    }
}

/// Value of the rescaled periodic double layer of `theta` at `x`.
pub fn eval_w_periodic(
    theta: &Density,
    placement: &Placement,
    green: &PeriodicGreen,
    x: Point,
) -> Result<f64> {
    if theta.values.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    Ok(PeriodicLayer::new(theta, placement, green.cell())?
        .eval(x)?
        .value)
}

/// Geometric offsets `δ_k = δ₀ 2^{−k}` off the boundary with polynomial
/// extrapolation to `δ = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OffsetPolicy {
    /// `δ₀` relative to the local feature size of the reference curve.
    pub delta_factor: f64,
    pub levels: usize,
    /// Accepted gap between the two highest-order estimates, relative to `1 + |value|`.
    pub divergence_tol: f64,
}

impl Default for OffsetPolicy {
    fn default() -> Self {
        Self {
            delta_factor: 0.1,
            levels: 5,
            divergence_tol: 1e-3,
        }
    }
}

impl OffsetPolicy {
    pub fn offsets(&self, feature_size: f64) -> Vec<f64> {
        let d0 = self.delta_factor * feature_size;
        (0..self.levels)
            .map(|k| d0 * 0.5f64.powi(k as i32))
            .collect()
    }

    /// Extrapolate the vector-valued samples `f(δ_k)` to `δ = 0`.
    pub fn extrapolate<F>(&self, feature_size: f64, mut f: F) -> Result<Vec<f64>>
    where
        F: FnMut(f64) -> Result<Vec<f64>>,
    {
        if self.levels < 2 {
            return Err(Error::Domain(
                "offset extrapolation needs two levels".into(),
            ));
        }
        let deltas = self.offsets(feature_size);
        let samples = deltas.iter().map(|&d| f(d)).collect::<Result<Vec<_>>>()?;
        let len = samples[0].len();
        let mut out = Vec::with_capacity(len);
        for i in 0..len {
            let column: Vec<f64> = samples.iter().map(|s| s[i]).collect();
            let (value, gap) = neville_at_zero(&deltas, &column);
            if !(gap <= self.divergence_tol * (1.0 + value.abs())) {
                return Err(Error::Extrapolation(format!(
                    "component {i}: estimates differ by {gap:e}"
                )));
            }
            out.push(value);
        }
        Ok(out)
    }
}

/// Interpolating polynomial through `(x_k, y_k)` evaluated at 0, with the gap
/// to the estimate from the finest `n − 1` samples.
fn neville_at_zero(x: &[f64], y: &[f64]) -> (f64, f64) {
    let full = neville(x, y);
    let lower = neville(&x[1..], &y[1..]);
    (full, (full - lower).abs())
}

fn neville(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let mut p = y.to_vec();
    for m in 1..n {
        for i in 0..n - m {
            p[i] = (x[i + m] * p[i] - x[i] * p[i + 1]) / (x[i + m] - x[i]);
        }
    }
    p[0]
}

/// Traces of `w` sampled from both sides of `∂Ω_ε`, compared with the
/// boundary principal value.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpReport {
    pub exterior: Vec<f64>,
    pub interior: Vec<f64>,
    /// Principal value `[(K + B_ε)θ]_i` from the assembled operators.
    pub boundary: Vec<f64>,
    /// Mismatch of the exterior trace against `−θ/2 + PV`.
    pub max_exterior_defect: f64,
    /// Mismatch of the interior trace against `θ/2 + PV`.
    pub max_interior_defect: f64,
    /// `max |w_int − w_ext − θ|`.
    pub max_jump_defect: f64,
    /// `max |∂_ν w_ext − ∂_ν w_int|`.
    pub max_normal_derivative_gap: f64,
}

impl JumpReport {
    pub fn max_defect(&self) -> f64 {
        self.max_exterior_defect
            .max(self.max_interior_defect)
            .max(self.max_jump_defect)
    }
}

/// One-sided traces and normal derivatives of `w` by offset extrapolation.
/// `side = +1` samples outside the hole, `−1` inside.
pub fn offset_traces(
    layer: &PeriodicLayer,
    curve: &BoundaryCurve,
    placement: &Placement,
    policy: &OffsetPolicy,
    side: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = curve.len();
    let eps = placement.eps;
    let p = placement.p;
    let both = policy.extrapolate(curve.local_feature_size(), |delta| {
        let mut out = Vec::with_capacity(2 * n);
        for (t, nu) in curve.nodes.iter().zip(&curve.normals) {
            let s = [t[0] + side * delta * nu[0], t[1] + side * delta * nu[1]];
            let g = layer.eval([p[0] + eps * s[0], p[1] + eps * s[1]])?;
            out.push(g.value);
            out.push(dot(g.gradient, *nu));
        }
        Ok(out)
    })?;
    let values = both.iter().step_by(2).cloned().collect();
    let normals = both.iter().skip(1).step_by(2).cloned().collect();
    Ok((values, normals))
}

/// Jump relations of the periodic double layer at the nodes of `∂Ω_ε`.
pub fn check_jump(
    theta: &Density,
    placement: &Placement,
    green: &PeriodicGreen,
    policy: &OffsetPolicy,
) -> Result<JumpReport> {
    let curve = &theta.curve;
    let n = curve.len();
    let k = assemble_free(curve);
    let b = assemble_regular(curve, placement.eps, green)?;
    let kt = k.apply(&theta.values);
    let bt = b.apply(&theta.values);
    let boundary: Vec<f64> = kt.iter().zip(&bt).map(|(a, b)| a + b).collect();

    let (exterior, interior, dn_ext, dn_int) = if theta.values.iter().all(|&v| v == 0.0) {
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n])
    } else {
        let layer = PeriodicLayer::new(theta, placement, green.cell())?;
        let (e, de) = offset_traces(&layer, curve, placement, policy, 1.0)?;
        let (i, di) = offset_traces(&layer, curve, placement, policy, -1.0)?;
        (e, i, de, di)
    };

    let mut rep = JumpReport {
        exterior,
        interior,
        boundary,
        max_exterior_defect: 0.0,
        max_interior_defect: 0.0,
        max_jump_defect: 0.0,
        max_normal_derivative_gap: 0.0,
    };
    for j in 0..n {
        let th = theta.values[j];
        rep.max_exterior_defect = rep
            .max_exterior_defect
            .max((rep.exterior[j] - (-0.5 * th + rep.boundary[j])).abs());
        rep.max_interior_defect = rep
            .max_interior_defect
            .max((rep.interior[j] - (0.5 * th + rep.boundary[j])).abs());
        rep.max_jump_defect = rep
            .max_jump_defect
            .max((rep.interior[j] - rep.exterior[j] - th).abs());
        rep.max_normal_derivative_gap = rep
            .max_normal_derivative_gap
            .max((dn_ext[j] - dn_int[j]).abs());
    }
    Ok(rep)
}

pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{place, Shape};

    fn curve(shape: Shape, n: usize) -> Arc<BoundaryCurve> {
        Arc::new(BoundaryCurve::new(shape, n).unwrap())
    }

    #[test]
    fn unit_circle_kernel_is_constant() {
        let c = curve(Shape::Disk { radius: 1.0 }, 32);
        let k = assemble_free(&c);
        for i in 0..32 {
            for j in 0..32 {
                // matrix stores −∫ DS·ν, so the +∫ DS·ν kernel is its negative
                let kern = -k.matrix[(i, j)] / c.weights[j];
                assert!((kern + 1.0 / (4.0 * PI)).abs() < 1e-14, "{i},{j}: {kern}");
            }
        }
        let ones = k.apply(&vec![1.0; 32]);
        assert!(ones.iter().all(|v| (v - 0.5).abs() < 1e-13));
        let cosines: Vec<f64> = c.params.iter().map(|t| (3.0 * t).cos() + t.sin()).collect();
        assert!(k.apply(&cosines).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn free_operator_converges_spectrally() {
        let shape = Shape::Ellipse { a: 1.0, b: 0.6 };
        let a = curve(shape, 64);
        let b = curve(shape, 128);
        let act = |c: &BoundaryCurve| {
            let v: Vec<f64> = c.params.iter().map(|t| t.cos()).collect();
            assemble_free(c).apply(&v)
        };
        let ra = act(&a);
        let rb = act(&b);
        for i in 0..64 {
            assert!(
                (ra[i] - rb[2 * i]).abs() < 1e-12,
                "{i}: {} vs {}",
                ra[i],
                rb[2 * i]
            );
        }
    }

    #[test]
    fn regular_operator_vanishes_at_zero_and_is_even() {
        let c = curve(Shape::Ellipse { a: 1.0, b: 0.6 }, 32);
        let g = PeriodicGreen::new(LatticeCell::unit());
        let z = assemble_regular(&c, 0.0, &g).unwrap();
        assert!(z.matrix.iter().all(|&v| v == 0.0));
        let plus = assemble_regular(&c, 0.2, &g).unwrap();
        let minus = assemble_regular(&c, -0.2, &g).unwrap();
        assert!((&plus.matrix - &minus.matrix).amax() < 1e-14);
        let small = assemble_regular(&c, 1e-3, &g).unwrap().matrix.norm();
        let smaller = assemble_regular(&c, 5e-4, &g).unwrap().matrix.norm();
        // DR(x) ≈ −x/(2|Q|) near 0 makes the operator O(ε²) for n = 2
        let ratio = small / smaller;
        assert!(ratio > 1.9, "ratio {ratio}");
        // constant density: B·1 = −|εΩ|/|Q|
        let eps = 0.3;
        let b = assemble_regular(&c, eps, &g).unwrap().apply(&vec![1.0; 32]);
        let expect = -eps * eps * PI * 0.6;
        assert!(b.iter().all(|v| (v - expect).abs() < 1e-12));
    }

    #[test]
    fn adjoint_free_is_transpose_geometry() {
        let c = curve(Shape::Kite { scale: 0.7 }, 48);
        let k = assemble_free(&c).matrix;
        let a = assemble_adjoint_free(&c).matrix;
        for i in 0..48 {
            for j in 0..48 {
                let lhs = a[(i, j)] / c.weights[j];
                let rhs = k[(j, i)] / c.weights[i];
                assert!((lhs - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn free_layer_refines_near_the_curve() {
        let c = curve(Shape::Disk { radius: 1.0 }, 32);
        let vals: Vec<f64> = c.params.iter().map(|t| t.cos()).collect();
        let layer = FreeLayer::new(c.clone(), &vals);
        // exterior: cos φ / r times −1/2·… ; interior: r cos φ / 2
        for (r, phi) in [
            (1.001, 0.3),
            (1.05, 2.0),
            (3.0, 1.0),
            (0.99, 0.7),
            (0.5, 4.0),
        ] {
            let t = [r * f64::cos(phi), r * f64::sin(phi)];
            let v = layer.eval(t).unwrap().value;
            let exact = if r > 1.0 {
                -0.5 * phi.cos() / r
            } else {
                0.5 * r * phi.cos()
            };
            assert!((v - exact).abs() < 1e-11, "r={r}: {v} vs {exact}");
        }
        assert!(matches!(
            layer.eval([1.0 + 1e-5, 0.0]),
            Err(Error::Proximity { .. })
        ));
    }

    #[test]
    fn neville_is_exact_on_polynomials() {
        let x = [0.1, 0.05, 0.025, 0.0125, 0.00625];
        let y: Vec<f64> = x.iter().map(|t| 2.0 - 3.0 * t + t * t * t * t).collect();
        let (v, gap) = neville_at_zero(&x, &y);
        assert!((v - 2.0).abs() < 1e-13 && gap < 1e-5);
    }

    #[test]
    fn constant_density_identities() {
        let c = curve(Shape::Disk { radius: 1.0 }, 64);
        let cell = LatticeCell::unit();
        let g = PeriodicGreen::new(cell);
        let eps = 0.2;
        let (pl, _) = place(&c, [0.5, 0.5], eps, &cell).unwrap();
        let theta = Density::constant(c.clone(), 1.0);
        let area = PI * eps * eps;
        for x in [[0.1, 0.1], [0.9, 0.3], [0.5, 0.72]] {
            let v = eval_w_periodic(&theta, &pl, &g, x).unwrap();
            assert!((v + area).abs() < 1e-8, "{x:?}: {v}");
        }
        let inside = eval_w_periodic(&theta, &pl, &g, [0.55, 0.45]).unwrap();
        assert!((inside - (1.0 - area)).abs() < 1e-8, "{inside}");
        let rep = check_jump(&theta, &pl, &g, &OffsetPolicy::default()).unwrap();
        for j in 0..64 {
            assert!((rep.boundary[j] - (0.5 - area)).abs() < 1e-8);
            assert!((rep.exterior[j] + area).abs() < 1e-8);
        }
    }

    #[test]
    fn jump_relations_on_small_disk() {
        let c = curve(Shape::Disk { radius: 0.25 }, 64);
        let cell = LatticeCell::unit();
        let g = PeriodicGreen::new(cell);
        let (pl, _) = place(&c, [0.5, 0.5], 1.0, &cell).unwrap();
        let theta = Density::from_fn(c.clone(), f64::cos);
        let rep = check_jump(&theta, &pl, &g, &OffsetPolicy::default()).unwrap();
        assert!(
            rep.max_exterior_defect < 1e-6,
            "{}",
            rep.max_exterior_defect
        );
        assert!(rep.max_jump_defect < 1e-6, "{}", rep.max_jump_defect);
        assert!(
            rep.max_normal_derivative_gap < 1e-5,
            "{}",
            rep.max_normal_derivative_gap
        );
        let zero = Density::constant(c.clone(), 0.0);
        assert_eq!(
            check_jump(&zero, &pl, &g, &OffsetPolicy::default())
                .unwrap()
                .max_defect(),
            0.0
        );
    }

    #[test]
    fn jump_relations_on_kite() {
        let c = curve(Shape::Kite { scale: 1.0 }, 128);
        let cell = LatticeCell::new([1.0, 1.5]).unwrap();
        let g = PeriodicGreen::new(cell);
        let (pl, _) = place(&c, [0.5, 0.7], 0.15, &cell).unwrap();
        let theta = Density::from_fn(c.clone(), |t| (2.0 * t).sin() + 0.5 * t.cos());
        let rep = check_jump(&theta, &pl, &g, &OffsetPolicy::default()).unwrap();
        assert!(rep.max_defect() < 1e-6, "{rep:?}");
        assert!(
            rep.max_normal_derivative_gap < 1e-5,
            "{}",
            rep.max_normal_derivative_gap
        );
    }

    #[test]
    fn periodic_layer_is_periodic() {
        let c = curve(Shape::Ellipse { a: 1.0, b: 0.5 }, 64);
        let cell = LatticeCell::new([1.0, 1.5]).unwrap();
        let g = PeriodicGreen::new(cell);
        let (pl, _) = place(&c, [0.4, 0.8], 0.2, &cell).unwrap();
        let theta = Density::from_fn(c.clone(), |t| (3.0 * t).cos());
        for x in [[0.1, 0.2], [0.62, 0.8], [0.95, 1.4]] {
            let a = eval_w_periodic(&theta, &pl, &g, x).unwrap();
            let b = eval_w_periodic(&theta, &pl, &g, [x[0] + 1.0, x[1]]).unwrap();
            let d = eval_w_periodic(&theta, &pl, &g, [x[0], x[1] - 3.0]).unwrap();
            assert!((a - b).abs() < 1e-9 && (a - d).abs() < 1e-9);
        }
        assert!(matches!(
            eval_w_periodic(&theta, &pl, &g, [0.6 + 1e-7, 0.8]),
            Err(Error::Proximity { .. })
        ));
    }
}

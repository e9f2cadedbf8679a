//! Field evaluation for solved problems: the solution `u[ε,g]`, the
//! macroscopic and microscopic factorizations, the limiting exterior field
//! `ũ`, and the cell energy.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryCurve, Placement};
use crate::lattice_green::{dot, norm, GreenEval, PeriodicGreen, Point};
use crate::layer_potentials::{sub, Density, FreeLayer, OffsetPolicy, PeriodicLayer};
use crate::solver::RescaledSolution;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub point: Point,
    pub value: f64,
    pub gradient: Option<Point>,
}

impl FieldSample {
    fn new(point: Point, e: GreenEval) -> Self {
        Self {
            point,
            value: e.value,
            gradient: Some(e.gradient),
        }
    }
}

/// Cell energy `∫ |Du|² dx = ε^{n−2} G` with `n = 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyValue {
    pub eps: f64,
    pub g: f64,
    pub raw: f64,
}

fn placement_of(sol: &RescaledSolution) -> Result<Placement> {
    sol.placement
        .ok_or_else(|| Error::Precondition("operation needs a solution with eps > 0".into()))
}

/// Reusable evaluator of `u[ε,g] = w_q[θ] + ξ` for one solution.
#[derive(Debug)]
pub struct SolutionField {
    layer: PeriodicLayer,
    curve: Arc<BoundaryCurve>,
    xi: f64,
}

impl SolutionField {
    pub fn new(sol: &RescaledSolution, green: &PeriodicGreen) -> Result<Self> {
        let pl = placement_of(sol)?;
        Ok(Self {
            layer: PeriodicLayer::new(&sol.theta, &pl, green.cell())?,
            curve: sol.curve().clone(),
            xi: sol.xi,
        })
    }

    /// True if `x` lies in the closure of a translate of the hole.
    pub fn in_hole(&self, x: Point) -> bool {
        let t = self.layer.local_coordinate(x);
        if norm(t) > 1.01 * self.curve.bounding_radius() {
            return false;
        }
        let loc = self.curve.locate(t);
        loc.inside || loc.distance == 0.0
    }

    pub fn eval(&self, x: Point) -> Result<FieldSample> {
        if self.in_hole(x) {
            return Err(Error::Domain(format!("point {x:?} lies in a hole")));
        }
        self.eval_unchecked(x)
    }

    /// Evaluation without the hole test; inside a hole this is the interior
    /// branch of the layer potential.
    pub fn eval_unchecked(&self, x: Point) -> Result<FieldSample> {
        let mut e = self.layer.eval(x)?;
        e.value += self.xi;
        Ok(FieldSample::new(x, e))
    }

    /// `U[ε,g](x) = (u(x) − Ξ)/ε`.
    pub fn macroscopic(&self, x: Point) -> Result<FieldSample> {
        let s = self.eval(x)?;
        let eps = self.layer.eps();
        let g = s.gradient.expect("layer gradient");
        Ok(FieldSample {
            point: x,
            value: (s.value - self.xi) / eps,
            gradient: Some([g[0] / eps, g[1] / eps]),
        })
    }
}

/// `u[ε,g](x)` with gradient.
pub fn eval_solution(
    sol: &RescaledSolution,
    green: &PeriodicGreen,
    x: Point,
) -> Result<FieldSample> {
    SolutionField::new(sol, green)?.eval(x)
}

/// `U[ε,g](x) = −∫ DS^q(x − p − εs)·ν(s) Θ(s) dσ_s`.
pub fn eval_macroscopic(
    sol: &RescaledSolution,
    green: &PeriodicGreen,
    x: Point,
) -> Result<FieldSample> {
    let pl = placement_of(sol)?;
    check_away_from_p(green, pl.p, x)?;
    SolutionField::new(sol, green)?.macroscopic(x)
}

fn check_away_from_p(green: &PeriodicGreen, p: Point, x: Point) -> Result<()> {
    let d = green.cell().lattice_distance(sub(x, p));
    let guard = green.params().guard;
    if d <= guard {
        return Err(Error::Proximity {
            x: x[0],
            y: x[1],
            distance: d,
            guard,
        });
    }
    Ok(())
}

/// Boundary moments of the limiting problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitingMoments {
    /// `∫ ν g₀ dσ`
    pub nu_g0: Point,
    /// `∫ s ∂ũ/∂ν dσ`
    pub s_dnu: Point,
    /// `∫ ν θ̃ dσ`
    pub nu_theta: Point,
}

impl LimitingMoments {
    pub fn new(limiting: &RescaledSolution, dnu: &Density) -> Self {
        let c = limiting.curve();
        let mut m = Self {
            nu_g0: [0.0; 2],
            s_dnu: [0.0; 2],
            nu_theta: [0.0; 2],
        };
        for i in 0..c.len() {
            let w = c.weights[i];
            for j in 0..2 {
                m.nu_g0[j] += c.normals[i][j] * limiting.datum.values[i] * w;
                m.s_dnu[j] += c.nodes[i][j] * dnu.values[i] * w;
                m.nu_theta[j] += c.normals[i][j] * limiting.theta.values[i] * w;
            }
        }
        m
    }

    /// `∫ ν g₀ − ∫ s ∂ũ/∂ν`, the dipole moment driving `U[0,g₀]`.
    pub fn dipole(&self) -> Point {
        sub(self.nu_g0, self.s_dnu)
    }
}

/// `U[0,g₀](x) = DS^q(x − p)·(∫ ν g₀ dσ − ∫ s ∂ũ/∂ν dσ)`.
pub fn eval_u0(
    limiting: &RescaledSolution,
    dnu: &Density,
    green: &PeriodicGreen,
    p: Point,
    x: Point,
) -> Result<FieldSample> {
    check_away_from_p(green, p, x)?;
    let m = LimitingMoments::new(limiting, dnu).dipole();
    let d = sub(x, p);
    let g = green.eval(d)?;
    let h = green.hessian(d)?;
    Ok(FieldSample {
        point: x,
        value: dot(g.gradient, m),
        gradient: Some([dot(h[0], m), dot(h[1], m)]),
    })
}

fn limiting_layer(limiting: &RescaledSolution) -> Result<FreeLayer> {
    if !limiting.is_limiting() {
        return Err(Error::Precondition(
            "expected the limiting solution (eps = 0)".into(),
        ));
    }
    Ok(FreeLayer::new(
        limiting.curve().clone(),
        &limiting.theta.values,
    ))
}

/// `ũ(t) = −∫ DS(t − s)·ν(s) θ̃(s) dσ_s` for `t` outside `cl Ω`.
pub fn eval_limiting_exterior(limiting: &RescaledSolution, t: Point) -> Result<FieldSample> {
    let layer = limiting_layer(limiting)?;
    exterior_sample(&layer, t)
}

fn exterior_sample(layer: &FreeLayer, t: Point) -> Result<FieldSample> {
    let c = layer.curve();
    if norm(t) <= 1.01 * c.bounding_radius() && c.locate(t).inside {
        return Err(Error::Domain(format!(
            "point {t:?} lies inside the reference hole"
        )));
    }
    Ok(FieldSample::new(t, layer.eval(t)?))
}

/// Exterior normal derivative `∂ũ/∂ν` at the nodes.
pub fn normal_derivative_limiting(
    limiting: &RescaledSolution,
    policy: &OffsetPolicy,
) -> Result<Density> {
    let layer = limiting_layer(limiting)?;
    let c = limiting.curve();
    if limiting.theta.values.iter().all(|&v| v == 0.0) {
        return Ok(Density::constant(c.clone(), 0.0));
    }
    let values = policy.extrapolate(c.local_feature_size(), |delta| {
        c.nodes
            .iter()
            .zip(&c.normals)
            .map(|(t, nu)| {
                let g = layer.eval([t[0] + delta * nu[0], t[1] + delta * nu[1]])?;
                Ok(dot(g.gradient, *nu))
            })
            .collect()
    })?;
    Density::new(c.clone(), values)
}

/// `G[0,g₀] = −∫ ∂ũ/∂ν (g₀ − ξ̃) dσ`.
pub fn energy_limit(limiting: &RescaledSolution, dnu: &Density) -> f64 {
    let c = limiting.curve();
    (0..c.len())
        .map(|i| -dnu.values[i] * (limiting.datum.values[i] - limiting.xi) * c.weights[i])
        .sum()
}

/// Evaluator of the microscopic map `Ũ[ε,g](t)` as the sum of its
/// free-space part and its lattice part.
#[derive(Debug)]
pub struct MicroscopicField {
    free: FreeLayer,
    placement: Placement,
    green: PeriodicGreen,
    curve: Arc<BoundaryCurve>,
    theta: Vec<f64>,
}

impl MicroscopicField {
    pub fn new(sol: &RescaledSolution, green: &PeriodicGreen) -> Result<Self> {
        Ok(Self {
            free: FreeLayer::new(sol.curve().clone(), &sol.theta.values),
            placement: placement_of(sol)?,
            green: green.clone(),
            curve: sol.curve().clone(),
            theta: sol.theta.values.clone(),
        })
    }

    fn check(&self, t: Point) -> Result<()> {
        let Placement { p, eps, .. } = self.placement;
        let x = [p[0] + eps * t[0], p[1] + eps * t[1]];
        if !self.green.cell().contains_open(x) {
            return Err(Error::Domain(format!("p + εt = {x:?} is outside the cell")));
        }
        Ok(())
    }

    /// `−ε ∫ DR(ε(t − s))·ν(s) θ(s) dσ_s` and its `t`-gradient.
    pub fn lattice_part(&self, t: Point) -> Result<GreenEval> {
        let eps = self.placement.eps;
        let c = &self.curve;
        let mut value = 0.0;
        let mut grad = [0.0; 2];
        for j in 0..c.len() {
            let d = sub(t, c.nodes[j]);
            let x = [eps * d[0], eps * d[1]];
            let w = self.theta[j] * c.weights[j];
            let nu = c.normals[j];
            value -= eps * dot(self.green.eval_regular(x)?.gradient, nu) * w;
            let h = self.green.hessian_regular(x)?;
            grad[0] -= eps * eps * dot(h[0], nu) * w;
            grad[1] -= eps * eps * dot(h[1], nu) * w;
        }
        Ok(GreenEval {
            value,
            gradient: grad,
        })
    }

    pub fn eval(&self, t: Point) -> Result<FieldSample> {
        self.check(t)?;
        let s = exterior_sample(&self.free, t)?;
        let r = self.lattice_part(t)?;
        let g = s.gradient.expect("free gradient");
        Ok(FieldSample {
            point: t,
            value: s.value + r.value,
            gradient: Some([g[0] + r.gradient[0], g[1] + r.gradient[1]]),
        })
    }

    /// `∂Ũ/∂ν` at the nodes from the exterior side.
    pub fn normal_derivative(&self, policy: &OffsetPolicy) -> Result<Vec<f64>> {
        let c = &self.curve;
        let free = policy.extrapolate(c.local_feature_size(), |delta| {
            c.nodes
                .iter()
                .zip(&c.normals)
                .map(|(t, nu)| {
                    let g = self
                        .free
                        .eval([t[0] + delta * nu[0], t[1] + delta * nu[1]])?;
                    Ok(dot(g.gradient, *nu))
                })
                .collect()
        })?;
        c.nodes
            .iter()
            .zip(&c.normals)
            .zip(free)
            .map(|((t, nu), f)| Ok(f + dot(self.lattice_part(*t)?.gradient, *nu)))
            .collect()
    }
}

/// `Ũ[ε,g](t)`, so that `u[ε,g](p + εt) = Ũ(t) + Ξ`.
pub fn eval_microscopic(
    sol: &RescaledSolution,
    green: &PeriodicGreen,
    t: Point,
) -> Result<FieldSample> {
    MicroscopicField::new(sol, green)?.eval(t)
}

/// `G[ε,g] = −∫ DŨ(t)·ν(t) g(t) dσ_t`.
pub fn energy(
    sol: &RescaledSolution,
    green: &PeriodicGreen,
    policy: &OffsetPolicy,
) -> Result<EnergyValue> {
    let pl = placement_of(sol)?;
    let c = sol.curve();
    let g = if sol.theta.values.iter().all(|&v| v == 0.0) {
        0.0
    } else {
        let dnu = MicroscopicField::new(sol, green)?.normal_derivative(policy)?;
        (0..c.len())
            .map(|i| -dnu[i] * sol.datum.values[i] * c.weights[i])
            .sum()
    };
    Ok(EnergyValue {
        eps: pl.eps,
        g,
        raw: g,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{place, Shape};
    use crate::lattice_green::LatticeCell;
    use crate::solver::{solve_limiting, solve_rescaled, FourierData};
    use std::f64::consts::PI;

    fn disk(n: usize) -> Arc<BoundaryCurve> {
        Arc::new(BoundaryCurve::new(Shape::Disk { radius: 1.0 }, n).unwrap())
    }

    fn cos1() -> FourierData {
        FourierData::new(0.0, vec![1.0], vec![])
    }

    fn solved(shape: Shape, eps: f64, g: &FourierData) -> (RescaledSolution, PeriodicGreen) {
        let cell = LatticeCell::unit();
        let green = PeriodicGreen::new(cell);
        let c = Arc::new(BoundaryCurve::new(shape, 64).unwrap());
        let (pl, _) = place(&c, [0.5, 0.5], eps, &cell).unwrap();
        (solve_rescaled(&c, &pl, &green, g).unwrap(), green)
    }

    #[test]
    fn limiting_disk_fields() {
        let lim = solve_limiting(&disk(64), &cos1()).unwrap();
        let u = eval_limiting_exterior(&lim, [2.0, 0.0]).unwrap();
        assert!((u.value - 0.5).abs() < 1e-8);
        assert!(
            eval_limiting_exterior(&lim, [1e3, 0.0])
                .unwrap()
                .value
                .abs()
                < 1e-2
        );
        assert!(matches!(
            eval_limiting_exterior(&lim, [0.3, 0.1]),
            Err(Error::Domain(_))
        ));
        let dn = normal_derivative_limiting(&lim, &OffsetPolicy::default()).unwrap();
        for (t, v) in lim.curve().params.iter().zip(&dn.values) {
            assert!((v + t.cos()).abs() < 1e-4, "{v}");
        }
        assert!(dn.integral().abs() < 1e-5);
        assert!((energy_limit(&lim, &dn) - PI).abs() < 1e-4);
        let m = LimitingMoments::new(&lim, &dn);
        assert!((m.nu_g0[0] - PI).abs() < 1e-10 && (m.s_dnu[0] + PI).abs() < 1e-4);
        assert!((m.nu_theta[0] + 2.0 * PI).abs() < 1e-10 && m.nu_theta[1].abs() < 1e-10);
    }

    #[test]
    fn limiting_energy_two_modes() {
        let g0 = FourierData::new(0.0, vec![1.0], vec![0.0, 2.0]);
        let lim = solve_limiting(&disk(64), &g0).unwrap();
        let dn = normal_derivative_limiting(&lim, &OffsetPolicy::default()).unwrap();
        assert!((energy_limit(&lim, &dn) - 9.0 * PI).abs() < 1e-3);
        let c = solve_limiting(&disk(64), &FourierData::constant(2.0)).unwrap();
        let dn = normal_derivative_limiting(&c, &OffsetPolicy::default()).unwrap();
        assert_eq!(energy_limit(&c, &dn), 0.0);
    }

    #[test]
    fn moment_identity_on_kite() {
        let c = Arc::new(BoundaryCurve::new(Shape::Kite { scale: 1.0 }, 128).unwrap());
        let lim = solve_limiting(&c, &FourierData::new(0.2, vec![1.0], vec![0.4])).unwrap();
        let dn = normal_derivative_limiting(&lim, &OffsetPolicy::default()).unwrap();
        let m = LimitingMoments::new(&lim, &dn);
        for j in 0..2 {
            assert!(
                (m.nu_theta[j] - (m.s_dnu[j] - m.nu_g0[j])).abs() < 1e-5,
                "{m:?}"
            );
        }
    }

    #[test]
    fn solution_is_periodic_and_matches_constants() {
        let (s, g) = solved(
            Shape::Disk { radius: 1.0 },
            0.2,
            &FourierData::constant(1.5),
        );
        assert!((eval_solution(&s, &g, [0.1, 0.2]).unwrap().value - 1.5).abs() < 1e-12);
        let (s, g) = solved(Shape::Ellipse { a: 1.0, b: 0.5 }, 0.2, &cos1());
        let f = SolutionField::new(&s, &g).unwrap();
        for x in [[0.1, 0.3], [0.8, 0.52]] {
            let a = f.eval(x).unwrap().value;
            let b = f.eval([x[0], x[1] + 1.0]).unwrap().value;
            assert!((a - b).abs() < 1e-9);
        }
        assert!(matches!(f.eval([0.5, 0.5]), Err(Error::Domain(_))));
    }

    #[test]
    fn factorizations_are_consistent() {
        let (s, g) = solved(
            Shape::Kite { scale: 1.0 },
            0.15,
            &FourierData::new(0.3, vec![1.0], vec![0.2]),
        );
        let f = SolutionField::new(&s, &g).unwrap();
        let pl = s.placement.unwrap();
        for x in [[0.9, 0.6], [0.1, 0.95], [0.9, 0.1]] {
            let u = f.eval(x).unwrap().value;
            let big_u = eval_macroscopic(&s, &g, x).unwrap().value;
            assert!((u - (pl.eps * big_u + s.xi)).abs() < 1e-10);
        }
        let m = MicroscopicField::new(&s, &g).unwrap();
        for t in [[2.0, 0.0], [0.5, 1.7], [-1.5, -1.0]] {
            let x = [pl.p[0] + pl.eps * t[0], pl.p[1] + pl.eps * t[1]];
            let u = f.eval(x).unwrap();
            let mu = m.eval(t).unwrap();
            assert!((u.value - (mu.value + s.xi)).abs() < 1e-9, "{t:?}");
            let (gu, gm) = (u.gradient.unwrap(), mu.gradient.unwrap());
            assert!((gu[0] * pl.eps - gm[0]).abs() < 1e-8 && (gu[1] * pl.eps - gm[1]).abs() < 1e-8);
        }
    }

    #[test]
    fn dirichlet_trace_and_harmonicity() {
        let (s, g) = solved(Shape::Ellipse { a: 1.0, b: 0.6 }, 0.2, &cos1());
        let f = SolutionField::new(&s, &g).unwrap();
        let pl = s.placement.unwrap();
        let c = s.curve();
        let policy = OffsetPolicy::default();
        for k in 0..7 {
            let t0 = 0.37 + 0.9 * k as f64;
            let shape = c.shape();
            let y = shape.point(t0);
            let d1 = shape.d1(t0);
            let nu = [d1[1] / norm(d1), -d1[0] / norm(d1)];
            let tr = policy
                .extrapolate(c.local_feature_size(), |d| {
                    let x = [
                        pl.p[0] + pl.eps * (y[0] + d * nu[0]),
                        pl.p[1] + pl.eps * (y[1] + d * nu[1]),
                    ];
                    Ok(vec![f.eval(x)?.value])
                })
                .unwrap()[0];
            assert!((tr - t0.cos()).abs() < 1e-5, "{t0}: {tr}");
        }
        let h = 1e-3;
        for x in [[0.1, 0.1], [0.95, 0.45], [0.5, 0.9]] {
            let v = |a: f64, b: f64| f.eval([x[0] + a, x[1] + b]).unwrap().value;
            let lap =
                (v(h, 0.0) + v(-h, 0.0) + v(0.0, h) + v(0.0, -h) - 4.0 * v(0.0, 0.0)) / (h * h);
            assert!(lap.abs() < 1e-4, "{lap}");
        }
    }

    #[test]
    fn maximum_principle_on_samples() {
        let g0 = FourierData::new(0.2, vec![1.0], vec![0.0, -0.5]);
        let (s, g) = solved(Shape::Kite { scale: 1.0 }, 0.2, &g0);
        let f = SolutionField::new(&s, &g).unwrap();
        let (lo, hi) = s
            .datum
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| {
                (a.min(v), b.max(v))
            });
        for i in 0..20 {
            for j in 0..20 {
                let x = [(i as f64 + 0.5) / 20.0, (j as f64 + 0.5) / 20.0];
                if f.in_hole(x) {
                    continue;
                }
                let v = f.eval(x).unwrap().value;
                assert!(v >= lo - 1e-6 && v <= hi + 1e-6, "{x:?}: {v}");
            }
        }
    }

    #[test]
    fn energy_basics() {
        let (s, g) = solved(
            Shape::Disk { radius: 1.0 },
            0.2,
            &FourierData::constant(3.0),
        );
        let e = energy(&s, &g, &OffsetPolicy::default()).unwrap();
        assert!(e.g.abs() < 1e-8 && e.raw == e.g);
        // G[ε] − π is O(ε²) for the centered disk
        let gap = |eps: f64| {
            let (s, g) = solved(Shape::Disk { radius: 1.0 }, eps, &cos1());
            energy(&s, &g, &OffsetPolicy::default()).unwrap().g - PI
        };
        let (a, b) = (gap(0.05), gap(0.025));
        assert!(a > 0.0 && (a / b - 4.0).abs() < 0.1, "{a} {b}");
    }

    #[test]
    fn u0_for_disk_cosine() {
        let lim = solve_limiting(&disk(64), &cos1()).unwrap();
        let dn = normal_derivative_limiting(&lim, &OffsetPolicy::default()).unwrap();
        let green = PeriodicGreen::new(LatticeCell::unit());
        let p = [0.5, 0.5];
        let x = [0.9, 0.6];
        let u0 = eval_u0(&lim, &dn, &green, p, x).unwrap().value;
        let oracle = 2.0 * PI * green.eval(sub(x, p)).unwrap().gradient[0];
        assert!((u0 - oracle).abs() < 1e-4);
        assert!(eval_u0(&lim, &dn, &green, p, p).is_err());
    }
}

//! Hole shapes, their equispaced discretization, and the ε-placement `t ↦ p + εt`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::lattice_green::{dot, norm, LatticeCell, Point};

/// Catalog of analytic hole shapes. Each is star-shaped about the origin,
/// parametrized counterclockwise over `[0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Disk {
        radius: f64,
    },
    Ellipse {
        a: f64,
        b: f64,
    },
    /// `scale·(cos t + 0.65 cos 2t − 0.65, 1.5 sin t)`.
    Kite {
        scale: f64,
    },
}

impl Shape {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Shape::Disk { radius } => radius > 0.0 && radius.is_finite(),
            Shape::Ellipse { a, b } => a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite(),
            Shape::Kite { scale } => scale > 0.0 && scale.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Shape(format!("non-positive parameter in {self:?}")))
        }
    }

    pub fn point(&self, t: f64) -> Point {
        let (s, c) = t.sin_cos();
        match *self {
            Shape::Disk { radius } => [radius * c, radius * s],
            Shape::Ellipse { a, b } => [a * c, b * s],
            Shape::Kite { scale } => [scale * (c + 0.65 * (2.0 * t).cos() - 0.65), scale * 1.5 * s],
        }
    }

    pub fn d1(&self, t: f64) -> Point {
        let (s, c) = t.sin_cos();
        match *self {
            Shape::Disk { radius } => [-radius * s, radius * c],
            Shape::Ellipse { a, b } => [-a * s, b * c],
            Shape::Kite { scale } => [scale * (-s - 1.3 * (2.0 * t).sin()), scale * 1.5 * c],
        }
    }

    pub fn d2(&self, t: f64) -> Point {
        let (s, c) = t.sin_cos();
        match *self {
            Shape::Disk { radius } => [-radius * c, -radius * s],
            Shape::Ellipse { a, b } => [-a * c, -b * s],
            Shape::Kite { scale } => [scale * (-c - 2.6 * (2.0 * t).cos()), -scale * 1.5 * s],
        }
    }

    /// Enclosed area in closed form.
    pub fn area(&self) -> f64 {
        match *self {
            Shape::Disk { radius } => PI * radius * radius,
            Shape::Ellipse { a, b } => PI * a * b,
            Shape::Kite { scale } => 1.5 * PI * scale * scale,
        }
    }

    /// `(max |x|, max |y|)` over the closed shape.
    pub fn extent(&self) -> Point {
        match *self {
            Shape::Disk { radius } => [radius, radius],
            Shape::Ellipse { a, b } => [a, b],
            Shape::Kite { .. } => [0, 1].map(|j| maximize_on_circle(|t| self.point(t)[j].abs())),
        }
    }
}

/// Global maximum of a smooth 2π-periodic function: dense scan then golden-section refinement.
fn maximize_on_circle(f: impl Fn(f64) -> f64) -> f64 {
    let n = 4096;
    let h = 2.0 * PI / n as f64;
    let (best, _) =
        (0..n)
            .map(|i| (i, f(i as f64 * h)))
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, v)| if v > acc.1 { (i, v) } else { acc },
            );
    let (mut lo, mut hi) = ((best as f64 - 1.0) * h, (best as f64 + 1.0) * h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if f(m1) > f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    f(0.5 * (lo + hi)).max(f(best as f64 * h))
}

/// Equispaced discretization of a catalog shape with periodic trapezoidal weights.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCurve {
    shape: Shape,
    pub params: Vec<f64>,
    pub nodes: Vec<Point>,
    pub tangents: Vec<Point>,
    /// Outward unit normals.
    pub normals: Vec<Point>,
    pub speed: Vec<f64>,
    /// Signed curvature, positive where the hole is convex.
    pub curvature: Vec<f64>,
    pub weights: Vec<f64>,
}

impl BoundaryCurve {
    pub fn new(shape: Shape, n: usize) -> Result<Self> {
        shape.validate()?;
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::Shape(format!(
                "node count must be even and at least 8, got {n}"
            )));
        }
        let h = 2.0 * PI / n as f64;
        let mut c = Self {
            shape,
            params: Vec::with_capacity(n),
            nodes: Vec::with_capacity(n),
            tangents: Vec::with_capacity(n),
            normals: Vec::with_capacity(n),
            speed: Vec::with_capacity(n),
            curvature: Vec::with_capacity(n),
            weights: Vec::with_capacity(n),
        };
        for i in 0..n {
            let t = i as f64 * h;
            let d1 = shape.d1(t);
            let d2 = shape.d2(t);
            let sp = norm(d1);
            c.params.push(t);
            c.nodes.push(shape.point(t));
            c.tangents.push([d1[0] / sp, d1[1] / sp]);
            c.normals.push([d1[1] / sp, -d1[0] / sp]);
            c.speed.push(sp);
            c.curvature
                .push((d1[0] * d2[1] - d1[1] * d2[0]) / (sp * sp * sp));
            c.weights.push(h * sp);
        }
        Ok(c)
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Same shape with `n` nodes.
    pub fn resample(&self, n: usize) -> Result<Self> {
        Self::new(self.shape, n)
    }

    pub fn perimeter(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn area(&self) -> f64 {
        self.shape.area()
    }

    /// Signed area by the trapezoidal rule on `½∮(x dy − y dx)`.
    pub fn signed_area(&self) -> f64 {
        let h = 2.0 * PI / self.len() as f64;
        (0..self.len())
            .map(|i| {
                let d1 = self.shape.d1(self.params[i]);
                let x = self.nodes[i];
                0.5 * (x[0] * d1[1] - x[1] * d1[0]) * h
            })
            .sum()
    }

    /// Quadrature of nodal values against arc length.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    pub fn max_speed(&self) -> f64 {
        self.speed.iter().cloned().fold(0.0, f64::max)
    }

    /// Smallest radius of curvature.
    pub fn local_feature_size(&self) -> f64 {
        let kmax = self.curvature.iter().map(|k| k.abs()).fold(0.0, f64::max);
        1.0 / kmax
    }

    /// Largest `|t|` over the nodes.
    pub fn bounding_radius(&self) -> f64 {
        self.nodes.iter().map(|&x| norm(x)).fold(0.0, f64::max)
    }

    /// Nearest boundary point to `x` in reference coordinates.
    pub fn locate(&self, x: Point) -> Location {
        let (i0, _) = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, &y)| (i, (y[0] - x[0]).powi(2) + (y[1] - x[1]).powi(2)))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        let h = 2.0 * PI / self.len() as f64;
        let mut t = self.params[i0];
        // Newton on (γ(t) − x)·γ'(t) = 0, kept within one node spacing.
        for _ in 0..30 {
            let g = self.shape.point(t);
            let d1 = self.shape.d1(t);
            let d2 = self.shape.d2(t);
            let r = [g[0] - x[0], g[1] - x[1]];
            let f = dot(r, d1);
            let fp = dot(d1, d1) + dot(r, d2);
            if fp <= 0.0 {
                break;
            }
            let step = (f / fp).clamp(-h, h);
            t -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let g = self.shape.point(t);
        let d1 = self.shape.d1(t);
        let sp = norm(d1);
        let nu = [d1[1] / sp, -d1[0] / sp];
        let r = [x[0] - g[0], x[1] - g[1]];
        Location {
            param: t.rem_euclid(2.0 * PI),
            distance: norm(r),
            inside: dot(r, nu) < 0.0,
        }
    }
}

/// Result of [`BoundaryCurve::locate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    pub param: f64,
    pub distance: f64,
    pub inside: bool,
}

/// Trigonometric interpolant of equispaced samples on `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigInterpolant {
    mean: f64,
    cos: Vec<f64>,
    sin: Vec<f64>,
    nyquist: f64,
}

impl TrigInterpolant {
    /// `values.len()` must be even.
    pub fn new(values: &[f64]) -> Self {
        let n = values.len();
        debug_assert!(n.is_multiple_of(2) && n > 0);
        let half = n / 2;
        let nf = n as f64;
        let mut cos = vec![0.0; half];
        let mut sin = vec![0.0; half];
        for k in 1..half {
            let (mut a, mut b) = (0.0, 0.0);
            for (j, v) in values.iter().enumerate() {
                let arg = 2.0 * PI * ((k * j) % n) as f64 / nf;
                let (s, c) = arg.sin_cos();
                a += v * c;
                b += v * s;
            }
            cos[k] = 2.0 * a / nf;
            sin[k] = 2.0 * b / nf;
        }
        let nyquist = values
            .iter()
            .enumerate()
            .map(|(j, v)| if j % 2 == 0 { *v } else { -*v })
            .sum::<f64>()
            / nf;
        Self {
            mean: values.iter().sum::<f64>() / nf,
            cos,
            sin,
            nyquist,
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let (s1, c1) = t.sin_cos();
        let (mut s, mut c) = (0.0, 1.0);
        let mut acc = self.mean;
        for k in 1..self.cos.len() {
            let (sn, cn) = (s * c1 + c * s1, c * c1 - s * s1);
            s = sn;
            c = cn;
            acc += self.cos[k] * c + self.sin[k] * s;
        }
        acc + self.nyquist * (self.cos.len() as f64 * t).cos()
    }

    /// Samples at `m` equispaced parameters.
    pub fn sample(&self, m: usize) -> Vec<f64> {
        (0..m)
            .map(|i| self.eval(2.0 * PI * i as f64 / m as f64))
            .collect()
    }
}

/// Position of the scaled hole `p + εΩ` inside the cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub p: Point,
    pub eps: f64,
    /// Supremum of admissible `|ε|`.
    pub eps0: f64,
}

/// Relative margin below `eps0` admitted on the solver path.
pub const EPS0_MARGIN: f64 = 1e-6;

/// Largest `ε̂` with `p + ε·cl Ω ⊂ Q` for all `|ε| < ε̂`.
pub fn compute_eps0(curve: &BoundaryCurve, p: Point, cell: &LatticeCell) -> Result<f64> {
    if !cell.contains_open(p) {
        return Err(Error::Domain(format!(
            "p = {p:?} is not interior to the cell"
        )));
    }
    let ext = curve.shape().extent();
    let q = cell.periods();
    Ok((0..2)
        .map(|j| p[j].min(q[j] - p[j]) / ext[j])
        .fold(f64::INFINITY, f64::min))
}

/// Boundary nodes of `∂Ω_ε` with inherited normals and scaled weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PlacedNodes {
    pub nodes: Vec<Point>,
    pub normals: Vec<Point>,
    pub weights: Vec<f64>,
}

/// Place the hole at `p` with scale `eps ∈ [0, eps0·(1 − 1e-6))`.
pub fn place(
    curve: &BoundaryCurve,
    p: Point,
    eps: f64,
    cell: &LatticeCell,
) -> Result<(Placement, PlacedNodes)> {
    let eps0 = compute_eps0(curve, p, cell)?;
    if !(eps >= 0.0 && eps < eps0 * (1.0 - EPS0_MARGIN)) {
        return Err(Error::Domain(format!(
            "eps = {eps} outside the admissible range [0, {eps0})"
        )));
    }
    let nodes = curve
        .nodes
        .iter()
        .map(|t| [p[0] + eps * t[0], p[1] + eps * t[1]])
        .collect();
    let placed = PlacedNodes {
        nodes,
        normals: curve.normals.clone(),
        weights: curve.weights.iter().map(|w| eps * w).collect(),
    };
    Ok((Placement { p, eps, eps0 }, placed))
}

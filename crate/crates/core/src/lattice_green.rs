//! Free-space and q-periodic fundamental solutions of the Laplacian in the plane.
//!
//! The periodic kernel is the zero-mean solution of
//! `Δ S^q = Σ_z δ_{qz} − 1/|Q|`. Its Fourier series converges only in the
//! sense of distributions, so it is evaluated by Gaussian (Ewald) splitting:
//!
//! ```text
//! S^q(x) = − 1/(4π²|Q|) Σ_{k≠0} e^{−π²|k|²/η²} cos(2πk·x) / |k|²      (reciprocal)
//!          − 1/(4π)      Σ_z   E1(η² |x + qz|²)                       (real space)
//!          + 1/(4η²|Q|)                                               (self term)
//! ```
//!
//! with `k = q⁻¹z`. The `z = 0` real-space term minus `log|x|/(2π)` is the
//! entire function `(γ − Ein(η²|x|²))/(4π) + log(η)/(2π)`, which gives the
//! regular part `R^q = S^q − S` without cancellation near the origin.

use std::f64::consts::PI;

use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::special::{ein, exp_int_e1, one_minus_exp_over, one_minus_exp_over_deriv, EULER_GAMMA};

/// A point or vector in the plane.
pub type Point = [f64; 2];

/// Symmetric 2×2 matrix of second derivatives.
pub type Hessian = [[f64; 2]; 2];

/// Exponents beyond this are dropped from both Ewald sums (`e^{-40} ≈ 4e-18`).
const EXPONENT_CUTOFF: f64 = 40.0;

/// The diagonal period matrix `q` and its fundamental cell `Q = Π ]0, q_jj[`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeCell {
    periods: [f64; 2],
    measure: f64,
}

impl LatticeCell {
    /// Spatial dimension of the shipped kernels.
    pub const DIM: usize = 2;

    pub fn new(periods: [f64; 2]) -> Result<Self> {
        if periods.iter().any(|&q| !(q > 0.0) || !q.is_finite()) {
            return Err(Error::Domain(format!(
                "cell periods must be positive and finite, got {periods:?}"
            )));
        }
        Ok(Self {
            periods,
            measure: periods[0] * periods[1],
        })
    }

    pub fn unit() -> Self {
        Self {
            periods: [1.0, 1.0],
            measure: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        Self::DIM
    }

    pub fn periods(&self) -> [f64; 2] {
        self.periods
    }

    /// `|Q|`, the product of the periods.
    pub fn measure(&self) -> f64 {
        self.measure
    }

    pub fn min_period(&self) -> f64 {
        self.periods[0].min(self.periods[1])
    }

    pub fn max_period(&self) -> f64 {
        self.periods[0].max(self.periods[1])
    }

    /// Translate `x` by a lattice vector so that each coordinate lies in `[-q_jj/2, q_jj/2]`.
    pub fn reduce(&self, x: Point) -> Point {
        [
            x[0] - self.periods[0] * (x[0] / self.periods[0]).round(),
            x[1] - self.periods[1] * (x[1] / self.periods[1]).round(),
        ]
    }

    /// Euclidean distance from `x` to the lattice `qℤ²`.
    pub fn lattice_distance(&self, x: Point) -> f64 {
        norm(self.reduce(x))
    }

    /// True when `p` lies in the open cell `Q`.
    pub fn contains_open(&self, p: Point) -> bool {
        (0..2).all(|j| p[j] > 0.0 && p[j] < self.periods[j])
    }

    /// Distance from an interior point to the faces of `Q`.
    pub fn face_distance(&self, p: Point) -> f64 {
        (0..2)
            .map(|j| p[j].min(self.periods[j] - p[j]))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Ewald splitting parameter and truncation radii.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EwaldParams {
    /// Splitting parameter η (units 1/length).
    pub split: f64,
    /// Real-space images `|z_j| ≤ real_cutoff` are summed.
    pub real_cutoff: u32,
    /// Reciprocal vectors `|z_j| ≤ recip_cutoff` are summed.
    pub recip_cutoff: u32,
    pub target_tol: f64,
    /// Proximity guard relative to the smallest period.
    pub guard: f64,
}

impl EwaldParams {
    pub const DEFAULT_TOL: f64 = 1e-12;
    pub const DEFAULT_GUARD: f64 = 1e-8;

    /// Default parameters: `η = √π / min q_jj`, target tolerance `1e-12`.
    pub fn for_cell(cell: &LatticeCell) -> Self {
        Self::with_split(cell, PI.sqrt() / cell.min_period(), Self::DEFAULT_TOL)
            .expect("default Ewald parameters are admissible")
    }

    /// Smallest cutoffs whose first omitted shell is below `target_tol`.
    pub fn with_split(cell: &LatticeCell, split: f64, target_tol: f64) -> Result<Self> {
        if !(split > 0.0) || !(target_tol > 0.0) {
            return Err(Error::Domain(format!(
                "split and target_tol must be positive (split={split}, tol={target_tol})"
            )));
        }
        let real = (1..=256u32)
            .find(|&l| real_shell_bound(cell, split, l + 1) < target_tol)
            .ok_or_else(|| Error::Domain("real-space cutoff exceeds 256 shells".into()))?;
        let recip = (1..=256u32)
            .find(|&m| recip_shell_bound(cell, split, m + 1) < target_tol)
            .ok_or_else(|| Error::Domain("reciprocal cutoff exceeds 256 shells".into()))?;
        Ok(Self {
            split,
            real_cutoff: real,
            recip_cutoff: recip,
            target_tol,
            guard: Self::DEFAULT_GUARD,
        })
    }

    /// Explicit cutoffs, rejected unless the first omitted shells are below `target_tol`.
    pub fn with_cutoffs(
        cell: &LatticeCell,
        split: f64,
        real_cutoff: u32,
        recip_cutoff: u32,
        target_tol: f64,
    ) -> Result<Self> {
        if !(split > 0.0) || !(target_tol > 0.0) {
            return Err(Error::Domain(
                "split and target_tol must be positive".into(),
            ));
        }
        let (real, recip) = (
            real_shell_bound(cell, split, real_cutoff + 1),
            recip_shell_bound(cell, split, recip_cutoff + 1),
        );
        if real >= target_tol || recip >= target_tol {
            return Err(Error::Domain(format!(
                "cutoffs ({real_cutoff}, {recip_cutoff}) leave shells of size ({real:e}, {recip:e}) above {target_tol:e}"
            )));
        }
        Ok(Self {
            split,
            real_cutoff,
            recip_cutoff,
            target_tol,
            guard: Self::DEFAULT_GUARD,
        })
    }

    /// Same splitting with both cutoffs doubled.
    pub fn doubled(&self) -> Self {
        Self {
            real_cutoff: 2 * self.real_cutoff,
            recip_cutoff: 2 * self.recip_cutoff,
            ..*self
        }
    }

    /// Bounds on the first omitted real-space and reciprocal shells.
    pub fn omitted_shells(&self, cell: &LatticeCell) -> (f64, f64) {
        (
            real_shell_bound(cell, self.split, self.real_cutoff + 1),
            recip_shell_bound(cell, self.split, self.recip_cutoff + 1),
        )
    }
}

/// Bound on the total contribution (value, gradient, Hessian) of real-space shell `l`
/// for points in the reduced cell.
fn real_shell_bound(cell: &LatticeCell, split: f64, l: u32) -> f64 {
    let r = (l as f64 - 0.5) * cell.min_period();
    let y = split * split * r * r;
    let count = 8.0 * l as f64;
    let per_term = (-y).exp() * (1.0 / y + 1.0 / r + (1.0 + 2.0 * y) / (r * r)) / (2.0 * PI);
    count * per_term
}

fn recip_shell_bound(cell: &LatticeCell, split: f64, m: u32) -> f64 {
    let k = m as f64 / cell.max_period();
    let damp = (-PI * PI * k * k / (split * split)).exp();
    let count = 8.0 * m as f64;
    let q = cell.measure();
    count * damp * (1.0 / (4.0 * PI * PI * q * k * k) + 1.0 / (2.0 * PI * q * k) + 1.0 / q)
}

/// Value and gradient of a Green's function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenEval {
    pub value: f64,
    pub gradient: Point,
}

/// `S_2(x) = log|x| / (2π)` and its gradient `x / (2π|x|²)`.
pub fn eval_s_free(x: Point) -> Result<GreenEval> {
    let r2 = x[0] * x[0] + x[1] * x[1];
    if r2 == 0.0 {
        return Err(Error::Singularity(x[0], x[1]));
    }
    let c = 1.0 / (2.0 * PI * r2);
    Ok(GreenEval {
        value: r2.ln() / (4.0 * PI),
        gradient: [c * x[0], c * x[1]],
    })
}

/// Hessian of `S_2`: `(|x|² I − 2 x xᵀ) / (2π|x|⁴)`.
pub fn hessian_s_free(x: Point) -> Result<Hessian> {
    let r2 = x[0] * x[0] + x[1] * x[1];
    if r2 == 0.0 {
        return Err(Error::Singularity(x[0], x[1]));
    }
    let c = 1.0 / (2.0 * PI * r2 * r2);
    Ok([
        [c * (r2 - 2.0 * x[0] * x[0]), -2.0 * c * x[0] * x[1]],
        [-2.0 * c * x[0] * x[1], c * (r2 - 2.0 * x[1] * x[1])],
    ])
}

#[derive(Debug, Default, Clone, Copy)]
struct Sums {
    value: f64,
    grad: Point,
    hess: Hessian,
}

/// The q-periodic fundamental solution for a fixed cell and Ewald parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicGreen {
    cell: LatticeCell,
    params: EwaldParams,
}

impl PeriodicGreen {
    pub fn new(cell: LatticeCell) -> Self {
        let params = EwaldParams::for_cell(&cell);
        Self { cell, params }
    }

    pub fn with_params(cell: LatticeCell, params: EwaldParams) -> Self {
        Self { cell, params }
    }

    pub fn cell(&self) -> &LatticeCell {
        &self.cell
    }

    pub fn params(&self) -> &EwaldParams {
        &self.params
    }

    fn guard_distance(&self) -> f64 {
        self.params.guard * self.cell.min_period()
    }

    fn check_lattice(&self, x: Point, y: Point) -> Result<()> {
        let d = norm(y);
        if d == 0.0 {
            return Err(Error::Singularity(x[0], x[1]));
        }
        if d < self.guard_distance() {
            return Err(Error::Proximity {
                x: x[0],
                y: x[1],
                distance: d,
                guard: self.guard_distance(),
            });
        }
        Ok(())
    }

    /// `S^q(x)` and `DS^q(x)`.
    pub fn eval(&self, x: Point) -> Result<GreenEval> {
        let y = self.cell.reduce(x);
        self.check_lattice(x, y)?;
        let s = self.sums(y, false, false);
        Ok(GreenEval {
            value: s.value,
            gradient: s.grad,
        })
    }

    /// Hessian of `S^q` at `x`.
    pub fn hessian(&self, x: Point) -> Result<Hessian> {
        let y = self.cell.reduce(x);
        self.check_lattice(x, y)?;
        Ok(self.sums(y, false, true).hess)
    }

    /// `R^q(x) = S^q(x) − S_2(x)` and its gradient; `x = 0` is admissible.
    pub fn eval_regular(&self, x: Point) -> Result<GreenEval> {
        let y = self.cell.reduce(x);
        if y == x {
            let s = self.sums(y, true, false);
            return Ok(GreenEval {
                value: s.value,
                gradient: s.grad,
            });
        }
        self.check_lattice(x, y)?;
        let s = self.sums(y, false, false);
        let f = eval_s_free(x)?;
        Ok(GreenEval {
            value: s.value - f.value,
            gradient: [s.grad[0] - f.gradient[0], s.grad[1] - f.gradient[1]],
        })
    }

    /// Hessian of `R^q` at `x`; `x = 0` is admissible.
    pub fn hessian_regular(&self, x: Point) -> Result<Hessian> {
        let y = self.cell.reduce(x);
        if y == x {
            return Ok(self.sums(y, true, true).hess);
        }
        self.check_lattice(x, y)?;
        let h = self.sums(y, false, true).hess;
        let f = hessian_s_free(x)?;
        Ok([
            [h[0][0] - f[0][0], h[0][1] - f[0][1]],
            [h[1][0] - f[1][0], h[1][1] - f[1][1]],
        ])
    }

    /// Ewald sums at a reduced point `y`. With `regular_origin` the `z = 0`
    /// image has `S_2` removed analytically.
    fn sums(&self, y: Point, regular_origin: bool, want_hess: bool) -> Sums {
        let eta = self.params.split;
        let eta2 = eta * eta;
        let [q1, q2] = self.cell.periods;
        let area = self.cell.measure;
        let mut out = Sums {
            value: 1.0 / (4.0 * eta2 * area),
            ..Sums::default()
        };

        let l = self.params.real_cutoff as i64;
        for z1 in -l..=l {
            for z2 in -l..=l {
                let v = [y[0] + q1 * z1 as f64, y[1] + q2 * z2 as f64];
                let r2 = v[0] * v[0] + v[1] * v[1];
                let u = eta2 * r2;
                if z1 == 0 && z2 == 0 && regular_origin {
                    let h = one_minus_exp_over(u);
                    out.value += (EULER_GAMMA - ein(u)) / (4.0 * PI) + eta.ln() / (2.0 * PI);
                    let c = -eta2 * h / (2.0 * PI);
                    out.grad[0] += c * v[0];
                    out.grad[1] += c * v[1];
                    if want_hess {
                        let dh = 2.0 * eta2 * one_minus_exp_over_deriv(u);
                        for a in 0..2 {
                            for b in 0..2 {
                                let id = if a == b { h } else { 0.0 };
                                out.hess[a][b] += -eta2 / (2.0 * PI) * (id + dh * v[a] * v[b]);
                            }
                        }
                    }
                    continue;
                }
                if u > EXPONENT_CUTOFF {
                    continue;
                }
                let e = (-u).exp();
                out.value -= exp_int_e1(u) / (4.0 * PI);
                let phi = e / (2.0 * PI * r2);
                out.grad[0] += phi * v[0];
                out.grad[1] += phi * v[1];
                if want_hess {
                    let dphi = -e * (u + 1.0) / (2.0 * PI * r2 * r2);
                    for a in 0..2 {
                        for b in 0..2 {
                            let id = if a == b { phi } else { 0.0 };
                            out.hess[a][b] += id + 2.0 * dphi * v[a] * v[b];
                        }
                    }
                }
            }
        }

        let m = self.params.recip_cutoff as i64;
        for z1 in 0..=m {
            let z2_start = if z1 == 0 { 1 } else { -m };
            for z2 in z2_start..=m {
                let k = [z1 as f64 / q1, z2 as f64 / q2];
                let k2 = k[0] * k[0] + k[1] * k[1];
                let expo = PI * PI * k2 / eta2;
                if expo > EXPONENT_CUTOFF {
                    continue;
                }
                // Factor 2 accounts for the partner −k.
                let d = 2.0 * (-expo).exp() / (area * k2);
                let arg = 2.0 * PI * (k[0] * y[0] + k[1] * y[1]);
                let (s, c) = arg.sin_cos();
                out.value -= d * c / (4.0 * PI * PI);
                out.grad[0] += d * k[0] * s / (2.0 * PI);
                out.grad[1] += d * k[1] * s / (2.0 * PI);
                if want_hess {
                    for a in 0..2 {
                        for b in 0..2 {
                            out.hess[a][b] += d * k[a] * k[b] * c;
                        }
                    }
                }
            }
        }
        out
    }
}

/// Batched evaluation of a periodic dipole layer
/// `Φ(x) = Σ_j DS^q(x − y_j)·c_j` and its gradient, using structure factors
/// for the reciprocal sum. The splitting parameter is chosen to balance the
/// per-point cost of the two sums for the given number of sources.
#[derive(Debug, Clone)]
pub struct PeriodicDipoles {
    cell: LatticeCell,
    split: f64,
    sources: Vec<Point>,
    moments: Vec<Point>,
    /// Real-space image bounds per axis.
    images: [i64; 2],
    /// Reciprocal index bounds per axis.
    modes: [i64; 2],
    /// Half-plane wave vectors with their pair-summed coefficient and structure factor.
    waves: Vec<Wave>,
}

#[derive(Debug, Clone, Copy)]
struct Wave {
    index: [i64; 2],
    k: Point,
    coef: f64,
    factor: Complex<f64>,
}

impl PeriodicDipoles {
    pub fn new(cell: LatticeCell, sources: Vec<Point>, moments: Vec<Point>) -> Self {
        assert_eq!(sources.len(), moments.len());
        let n = sources.len().max(1) as f64;
        let split = (PI.sqrt() / cell.min_period())
            .max((2.0 * PI * PI * n).powf(0.25) / cell.measure().sqrt());
        let [q1, q2] = cell.periods();
        let r_cut = EXPONENT_CUTOFF.sqrt() / split;
        let k_cut = EXPONENT_CUTOFF.sqrt() * split / PI;
        let images = [
            (r_cut / q1).ceil() as i64 + 1,
            (r_cut / q2).ceil() as i64 + 1,
        ];
        let modes = [(k_cut * q1).floor() as i64, (k_cut * q2).floor() as i64];

        let mut waves = Vec::new();
        for z1 in 0..=modes[0] {
            let z2_start = if z1 == 0 { 1 } else { -modes[1] };
            for z2 in z2_start..=modes[1] {
                let k = [z1 as f64 / q1, z2 as f64 / q2];
                let k2 = k[0] * k[0] + k[1] * k[1];
                let expo = PI * PI * k2 / (split * split);
                if expo > EXPONENT_CUTOFF {
                    continue;
                }
                let mut factor = Complex::new(0.0, 0.0);
                for (y, c) in sources.iter().zip(&moments) {
                    let arg = -2.0 * PI * dot(k, *y);
                    factor += Complex::from_polar(dot(k, *c), arg);
                }
                waves.push(Wave {
                    index: [z1, z2],
                    k,
                    coef: 2.0 * (-expo).exp() / (cell.measure() * k2),
                    factor,
                });
            }
        }
        Self {
            cell,
            split,
            sources,
            moments,
            images,
            modes,
            waves,
        }
    }

    pub fn split(&self) -> f64 {
        self.split
    }

    /// `Φ(x)` and `∇Φ(x)`.
    pub fn eval(&self, x: Point) -> Result<GreenEval> {
        let eta2 = self.split * self.split;
        let [q1, q2] = self.cell.periods();
        let mut value = 0.0;
        let mut grad = [0.0; 2];

        for (y, c) in self.sources.iter().zip(&self.moments) {
            let d = self.cell.reduce([x[0] - y[0], x[1] - y[1]]);
            if d == [0.0, 0.0] {
                return Err(Error::Singularity(x[0], x[1]));
            }
            for z1 in -self.images[0]..=self.images[0] {
                for z2 in -self.images[1]..=self.images[1] {
                    let v = [d[0] + q1 * z1 as f64, d[1] + q2 * z2 as f64];
                    let r2 = v[0] * v[0] + v[1] * v[1];
                    let u = eta2 * r2;
                    if u > EXPONENT_CUTOFF {
                        continue;
                    }
                    let e = (-u).exp();
                    let phi = e / (2.0 * PI * r2);
                    let dphi = -e * (u + 1.0) / (2.0 * PI * r2 * r2);
                    let vc = dot(v, *c);
                    value += phi * vc;
                    grad[0] += phi * c[0] + 2.0 * dphi * v[0] * vc;
                    grad[1] += phi * c[1] + 2.0 * dphi * v[1] * vc;
                }
            }
        }

        let base = |t: f64, m: i64| -> Vec<Complex<f64>> {
            let w = Complex::from_polar(1.0, 2.0 * PI * t);
            let mut out = Vec::with_capacity(m as usize + 1);
            let mut acc = Complex::new(1.0, 0.0);
            for _ in 0..=m {
                out.push(acc);
                acc *= w;
            }
            out
        };
        let e1 = base(x[0] / q1, self.modes[0]);
        let e2 = base(x[1] / q2, self.modes[1]);
        for w in &self.waves {
            let [z1, z2] = w.index;
            let p2 = if z2 >= 0 {
                e2[z2 as usize]
            } else {
                e2[(-z2) as usize].conj()
            };
            let phase = e1[z1 as usize] * p2 * w.factor;
            value += w.coef * phase.im / (2.0 * PI);
            grad[0] += w.coef * w.k[0] * phase.re;
            grad[1] += w.coef * w.k[1] * phase.re;
        }
        Ok(GreenEval {
            value,
            gradient: grad,
        })
    }
}

/// Largest defects of the periodic-kernel identities over random samples.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenReport {
    pub samples: usize,
    pub max_periodicity: f64,
    pub max_symmetry: f64,
    /// `|Δ_h S^q + 1/|Q||` for the fourth-order cross stencil
    /// `(−f₋₂ + 16f₋₁ − 30f₀ + 16f₁ − f₂)/(12h²)` in each direction.
    pub max_laplacian: f64,
    /// Same defect for the 5-point stencil. Its `h²/12·(∂⁴ₓ + ∂⁴ᵧ)S` term
    /// grows like `r⁻⁴` near the lattice; for harmonic functions the
    /// fourth-order stencil's `h⁴` term cancels.
    pub max_laplacian_5pt: f64,
    /// Change of `S^q` when both cutoffs are doubled.
    pub max_cutoff_change: f64,
    /// Central-difference gradient against the reported gradient.
    pub max_gradient_fd: f64,
    pub real_cutoff: u32,
    pub recip_cutoff: u32,
    /// Bounds on the first omitted real and reciprocal shells.
    pub omitted_shells: (f64, f64),
}

impl GreenReport {
    /// Every identity defect is below `tol`.
    pub fn passes(&self, tol: f64) -> bool {
        [
            self.max_periodicity,
            self.max_symmetry,
            self.max_laplacian,
            self.max_cutoff_change,
        ]
        .iter()
        .all(|&d| d < tol)
    }
}

/// Check periodicity, evenness, the harmonic defect and cutoff robustness of
/// `S^q` at `sample_count` random points at distance above `0.05·min q` from the lattice.
pub fn validate_green(
    green: &PeriodicGreen,
    sample_count: usize,
    seed: u64,
) -> Result<GreenReport> {
    if sample_count == 0 {
        return Err(Error::Precondition(
            "sample_count must be at least 1".into(),
        ));
    }
    let cell = green.cell();
    let [q1, q2] = cell.periods();
    let min_dist = 0.05 * cell.min_period();
    let h = 1e-3 * cell.min_period();
    let fine = PeriodicGreen::with_params(*cell, green.params().doubled());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut report = GreenReport {
        samples: sample_count,
        max_periodicity: 0.0,
        max_symmetry: 0.0,
        max_laplacian: 0.0,
        max_laplacian_5pt: 0.0,
        max_cutoff_change: 0.0,
        max_gradient_fd: 0.0,
        real_cutoff: green.params().real_cutoff,
        recip_cutoff: green.params().recip_cutoff,
        omitted_shells: green.params().omitted_shells(cell),
    };
    let mut taken = 0;
    while taken < sample_count {
        let x = [rng.gen::<f64>() * q1, rng.gen::<f64>() * q2];
        if cell.lattice_distance(x) <= min_dist {
            continue;
        }
        taken += 1;
        let s = green.eval(x)?;
        for shift in [[q1, 0.0], [0.0, q2]] {
            let t = green.eval([x[0] + shift[0], x[1] + shift[1]])?;
            report.max_periodicity = report.max_periodicity.max((t.value - s.value).abs());
        }
        let m = green.eval([-x[0], -x[1]])?;
        report.max_symmetry = report.max_symmetry.max((m.value - s.value).abs());

        let at = |dx: f64, dy: f64| green.eval([x[0] + dx, x[1] + dy]).map(|g| g.value);
        let (e, w, n, so) = (at(h, 0.0)?, at(-h, 0.0)?, at(0.0, h)?, at(0.0, -h)?);
        let lap5 = (e + w + n + so - 4.0 * s.value) / (h * h);
        report.max_laplacian_5pt = report
            .max_laplacian_5pt
            .max((lap5 + 1.0 / cell.measure()).abs());
        let far = at(2.0 * h, 0.0)? + at(-2.0 * h, 0.0)? + at(0.0, 2.0 * h)? + at(0.0, -2.0 * h)?;
        let lap = (16.0 * (e + w + n + so) - far - 60.0 * s.value) / (12.0 * h * h);
        report.max_laplacian = report.max_laplacian.max((lap + 1.0 / cell.measure()).abs());

        let fd = [(e - w) / (2.0 * h), (n - so) / (2.0 * h)];
        let gd = (fd[0] - s.gradient[0])
            .abs()
            .max((fd[1] - s.gradient[1]).abs());
        report.max_gradient_fd = report.max_gradient_fd.max(gd);

        let f = fine.eval(x)?;
        report.max_cutoff_change = report.max_cutoff_change.max((f.value - s.value).abs());
    }
    Ok(report)
}

pub(crate) fn norm(x: Point) -> f64 {
    x[0].hypot(x[1])
}

pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

//! Run configuration: TOML sections parsed with serde, then validated into
//! solver inputs. Every rejection names the offending field.

use std::path::{Path, PathBuf};

use perforated::continuation::{chebyshev_grid, Functional, LimitTolerances, ProblemSpec};
use perforated::geometry::{compute_eps0, BoundaryCurve, Shape, EPS0_MARGIN};
use perforated::lattice_green::{EwaldParams, LatticeCell, PeriodicGreen, Point};
use perforated::solver::FourierData;
use serde::Deserialize;
use sha2::{Digest, Sha256};

/// Environment variable overriding `output.dir`.
pub const OUT_DIR_ENV: &str = "PERFORATED_OUT_DIR";

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

fn field_error(field: &str, msg: impl std::fmt::Display) -> ConfigError {
    ConfigError(format!("field `{field}`: {msg}"))
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub cell: CellSection,
    pub shape: ShapeSection,
    #[serde(default)]
    pub discretization: DiscretizationSection,
    #[serde(default)]
    pub ewald: EwaldSection,
    #[serde(default)]
    pub placement: PlacementSection,
    #[serde(default)]
    pub datum: DatumSection,
    #[serde(default)]
    pub solve: SolveSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub green: GreenSection,
    #[serde(default)]
    pub tolerances: ToleranceSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CellSection {
    pub periods: [f64; 2],
}

impl Default for CellSection {
    fn default() -> Self {
        Self {
            periods: [1.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ShapeSection {
    /// `disk`, `ellipse` or `kite`.
    pub kind: String,
    pub radius: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DiscretizationSection {
    pub n: usize,
}

impl Default for DiscretizationSection {
    fn default() -> Self {
        Self { n: 64 }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EwaldSection {
    pub target_tol: f64,
    pub split: Option<f64>,
}

impl Default for EwaldSection {
    fn default() -> Self {
        Self {
            target_tol: EwaldParams::DEFAULT_TOL,
            split: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct PlacementSection {
    /// Defaults to the cell center.
    pub p: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DatumSection {
    #[serde(default)]
    pub a0: f64,
    #[serde(default)]
    pub cos: Vec<f64>,
    #[serde(default)]
    pub sin: Vec<f64>,
}

impl Default for DatumSection {
    fn default() -> Self {
        Self {
            a0: 0.0,
            cos: vec![1.0],
            sin: vec![],
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SolveSection {
    pub eps: Option<f64>,
    #[serde(default)]
    pub points: Vec<[f64; 2]>,
    #[serde(default)]
    pub random_points: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for SolveSection {
    fn default() -> Self {
        Self {
            eps: None,
            points: vec![],
            random_points: 0,
            seed: default_seed(),
        }
    }
}

fn default_seed() -> u64 {
    1
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// Explicit ascending grid; overrides `lo`/`hi`/`count`.
    pub grid: Option<Vec<f64>>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_degree")]
    pub degree: usize,
    /// Defaults to `p + (0.4, 0.1)`.
    pub macro_point: Option<[f64; 2]>,
    #[serde(default = "default_micro")]
    pub micro_point: [f64; 2],
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            grid: None,
            lo: None,
            hi: None,
            count: default_count(),
            degree: default_degree(),
            macro_point: None,
            micro_point: default_micro(),
        }
    }
}

fn default_count() -> usize {
    8
}

fn default_degree() -> usize {
    4
}

fn default_micro() -> [f64; 2] {
    [2.0, 0.0]
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GreenSection {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl Default for GreenSection {
    fn default() -> Self {
        Self {
            samples: default_samples(),
            seed: default_seed(),
        }
    }
}

fn default_samples() -> usize {
    100
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceSection {
    /// Periodicity and symmetry defects of `S^q`.
    pub green_identity: f64,
    /// Finite-difference Laplacian against `−1/|Q|`.
    pub green_laplacian: f64,
    /// Change under doubled Ewald cutoffs.
    pub green_cutoff: f64,
    /// Solver residual, relative to `1 + ‖g‖`.
    pub residual: f64,
    pub xi: f64,
    pub macroscopic: f64,
    pub microscopic: f64,
    pub energy: f64,
}

impl Default for ToleranceSection {
    fn default() -> Self {
        let l = LimitTolerances::default();
        Self {
            green_identity: 1e-10,
            green_laplacian: 1e-5,
            green_cutoff: 1e-12,
            residual: 1e-10,
            xi: l.xi,
            macroscopic: l.macroscopic,
            microscopic: l.microscopic,
            energy: l.energy,
        }
    }
}

impl ToleranceSection {
    pub fn limits(&self) -> LimitTolerances {
        LimitTolerances {
            xi: self.xi,
            macroscopic: self.macroscopic,
            microscopic: self.microscopic,
            energy: self.energy,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

/// Parsed configuration with the SHA-256 of its source text.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub hash: String,
}

impl LoadedConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| ConfigError(e.to_string()))?;
        let digest = Sha256::digest(text.as_bytes());
        let hash = digest.iter().map(|b| format!("{b:02x}")).collect();
        let loaded = Self { config, hash };
        loaded.validate()?;
        Ok(loaded)
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let c = &self.config;
        self.cell()?;
        self.shape()?;
        self.green()?;
        let n = c.discretization.n;
        if n < 8 || !n.is_multiple_of(2) || n > 512 {
            return Err(field_error(
                "discretization.n",
                format!("{n} must be even and in [8, 512]"),
            ));
        }
        let degree = self.datum().degree();
        if 4 * degree > n {
            return Err(field_error(
                "datum",
                format!("Fourier degree {degree} exceeds n/4"),
            ));
        }
        for (name, v) in [("datum.cos", &c.datum.cos), ("datum.sin", &c.datum.sin)] {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(field_error(name, "coefficients must be finite"));
            }
        }
        if !c.datum.a0.is_finite() {
            return Err(field_error("datum.a0", "must be finite"));
        }
        let eps0 = self.eps0()?;
        if let Some(eps) = c.solve.eps {
            if !(eps > 0.0 && eps < eps0 * (1.0 - EPS0_MARGIN)) {
                return Err(field_error(
                    "solve.eps",
                    format!("{eps} outside (0, eps0 = {eps0})"),
                ));
            }
        }
        let grid = self.sweep_grid()?;
        if c.sweep.degree + 2 > grid.len() {
            return Err(field_error(
                "sweep.degree",
                format!(
                    "degree {} needs at least {} grid points, grid has {}",
                    c.sweep.degree,
                    c.sweep.degree + 2,
                    grid.len()
                ),
            ));
        }
        if c.green.samples == 0 {
            return Err(field_error("green.samples", "must be positive"));
        }
        let t = &c.tolerances;
        for (name, v) in [
            ("tolerances.green_identity", t.green_identity),
            ("tolerances.green_laplacian", t.green_laplacian),
            ("tolerances.green_cutoff", t.green_cutoff),
            ("tolerances.residual", t.residual),
            ("tolerances.xi", t.xi),
            ("tolerances.macroscopic", t.macroscopic),
            ("tolerances.microscopic", t.microscopic),
            ("tolerances.energy", t.energy),
        ] {
            if !(v >= 0.0) {
                return Err(field_error(name, "must be non-negative"));
            }
        }
        Ok(())
    }

    pub fn cell(&self) -> Result<LatticeCell, ConfigError> {
        LatticeCell::new(self.config.cell.periods).map_err(|e| field_error("cell.periods", e))
    }

    pub fn shape(&self) -> Result<Shape, ConfigError> {
        let s = &self.config.shape;
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| {
                field_error(
                    &format!("shape.{name}"),
                    format!("required for kind = \"{}\"", s.kind),
                )
            })
        };
        let extra = |fields: &[(&str, Option<f64>)]| {
            for (name, v) in fields {
                if v.is_some() {
                    return Err(field_error(
                        &format!("shape.{name}"),
                        format!("not used by kind = \"{}\"", s.kind),
                    ));
                }
            }
            Ok(())
        };
        let shape = match s.kind.as_str() {
            "disk" => {
                extra(&[("a", s.a), ("b", s.b), ("scale", s.scale)])?;
                Shape::Disk {
                    radius: need(s.radius, "radius")?,
                }
            }
            "ellipse" => {
                extra(&[("radius", s.radius), ("scale", s.scale)])?;
                Shape::Ellipse {
                    a: need(s.a, "a")?,
                    b: need(s.b, "b")?,
                }
            }
            "kite" => {
                extra(&[("radius", s.radius), ("a", s.a), ("b", s.b)])?;
                Shape::Kite {
                    scale: s.scale.unwrap_or(1.0),
                }
            }
            other => {
                return Err(field_error(
                    "shape.kind",
                    format!("unknown shape `{other}` (expected disk, ellipse or kite)"),
                ))
            }
        };
        shape.validate().map_err(|e| field_error("shape", e))?;
        Ok(shape)
    }

    pub fn green(&self) -> Result<PeriodicGreen, ConfigError> {
        let cell = self.cell()?;
        let e = &self.config.ewald;
        let split = e
            .split
            .unwrap_or(std::f64::consts::PI.sqrt() / cell.min_period());
        let params = EwaldParams::with_split(&cell, split, e.target_tol)
            .map_err(|err| field_error("ewald", err))?;
        Ok(PeriodicGreen::with_params(cell, params))
    }

    pub fn p(&self) -> Point {
        let q = self.config.cell.periods;
        self.config.placement.p.unwrap_or([0.5 * q[0], 0.5 * q[1]])
    }

    pub fn datum(&self) -> FourierData {
        let d = &self.config.datum;
        FourierData::new(d.a0, d.cos.clone(), d.sin.clone())
    }

    pub fn eps0(&self) -> Result<f64, ConfigError> {
        let curve = BoundaryCurve::new(self.shape()?, 16).map_err(|e| field_error("shape", e))?;
        compute_eps0(&curve, self.p(), &self.cell()?).map_err(|e| field_error("placement.p", e))
    }

    pub fn problem(&self) -> Result<ProblemSpec, ConfigError> {
        ProblemSpec::new(
            self.shape()?,
            self.config.discretization.n,
            self.green()?,
            self.p(),
            self.datum(),
        )
        .map_err(|e| field_error("shape", e))
    }

    /// Explicit grid, or `count` Chebyshev points in `[lo, hi]` with defaults
    /// `lo = 0.05`, `hi = 0.5·eps0`.
    pub fn sweep_grid(&self) -> Result<Vec<f64>, ConfigError> {
        let s = &self.config.sweep;
        let eps0 = self.eps0()?;
        let grid = match &s.grid {
            Some(g) => {
                if s.lo.is_some() || s.hi.is_some() {
                    return Err(field_error(
                        "sweep.grid",
                        "give either grid or lo/hi, not both",
                    ));
                }
                g.clone()
            }
            None => {
                let lo = s.lo.unwrap_or(0.05);
                let hi = s.hi.unwrap_or(0.5 * eps0);
                if !(lo > 0.0 && lo < hi) {
                    return Err(field_error(
                        "sweep.lo",
                        format!("need 0 < lo < hi, got lo = {lo}, hi = {hi}"),
                    ));
                }
                if s.count == 0 {
                    return Err(field_error("sweep.count", "must be positive"));
                }
                chebyshev_grid(lo, hi, s.count)
            }
        };
        if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(field_error(
                "sweep.grid",
                "must be non-empty and strictly ascending",
            ));
        }
        if let Some(e) = grid
            .iter()
            .find(|&&e| !(e > 0.0 && e < eps0 * (1.0 - EPS0_MARGIN)))
        {
            return Err(field_error(
                "sweep.grid",
                format!("eps = {e} outside (0, eps0 = {eps0})"),
            ));
        }
        Ok(grid)
    }

    pub fn functionals(&self) -> Vec<Functional> {
        let p = self.p();
        let s = &self.config.sweep;
        vec![
            Functional::Xi,
            Functional::MacroscopicAt(s.macro_point.unwrap_or([p[0] + 0.4, p[1] + 0.1])),
            Functional::MicroscopicAt(s.micro_point),
            Functional::Energy,
        ]
    }

    /// `--out` beats the environment variable, which beats `output.dir`.
    pub fn output_dir(&self, cli: Option<&Path>) -> PathBuf {
        if let Some(p) = cli {
            return p.to_path_buf();
        }
        if let Some(env) = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
            return PathBuf::from(env);
        }
        self.config
            .output
            .dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}

//! Experiment configuration: TOML schema, validation with field paths,
//! and construction of potential models.

use nalgebra::Complex;
use serde::Deserialize;
use weylkit::potential::PotentialModel;
use weylkit::CMatrix;

use crate::CliError;

type C64 = Complex<f64>;

/// Complex scalar as a `[re, im]` pair in the config file.
pub type ComplexPair = [f64; 2];

/// Matrix as rows of `[re, im]` pairs.
pub type MatrixSpec = Vec<Vec<ComplexPair>>;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub potential: PotentialSpec,
    /// Second potential, for `locality`.
    pub potential_b: Option<PotentialSpec>,
    pub z_grid: ZGridSpec,
    #[serde(default)]
    pub experiment: ExperimentSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputSpec,
    pub disk: Option<DiskSpec>,
    pub locality: Option<LocalitySpec>,
    pub compare: Option<CompareSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZGridSpec {
    pub moduli: Vec<f64>,
    pub arg: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    /// Must match the subcommand when present.
    pub kind: Option<String>,
    #[serde(default)]
    pub x0: f64,
    /// Evaluation points; defaults to `[x0]`.
    pub x: Option<Vec<f64>>,
    /// Expansion order for `asymp`, `green`, `verify`.
    pub order: Option<usize>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
    /// Cauchy threshold of the horizon-doubling limit.
    #[serde(default = "default_limit_rtol")]
    pub limit_rtol: f64,
    /// Horizon cap for the limit extraction.
    #[serde(default = "default_max_horizon")]
    pub max_horizon: f64,
    #[serde(default = "default_volterra_tol")]
    pub volterra_tol: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_rtol() -> f64 {
    1e-10
}
fn default_atol() -> f64 {
    1e-12
}
fn default_limit_rtol() -> f64 {
    1e-8
}
fn default_max_horizon() -> f64 {
    64.0
}
fn default_volterra_tol() -> f64 {
    1e-12
}
fn default_max_steps() -> usize {
    50_000_000
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rtol: default_rtol(),
            atol: default_atol(),
            limit_rtol: default_limit_rtol(),
            max_horizon: default_max_horizon(),
            volterra_tol: default_volterra_tol(),
            max_steps: default_max_steps(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<String>,
    pub format: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiskSpec {
    #[serde(default = "default_beta_samples")]
    pub beta_samples: usize,
    pub horizons: Vec<f64>,
}

fn default_beta_samples() -> usize {
    8
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalitySpec {
    /// Agreement window `[from, to]`.
    pub window: [f64; 2],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSpec {
    /// Any of `limit`, `volterra`, `riccati`.
    pub methods: Vec<String>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Base point the Riccati route translates from (default `x0 - 0.5`).
    pub x_base: Option<f64>,
}

fn default_threshold() -> f64 {
    1e-6
}

/// Potential declaration; `kind` selects the model family.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    /// `Q(x) = matrix`.
    Constant { matrix: MatrixSpec },
    /// `base` restricted to the closed `[from, to]`, zero outside.
    Truncated {
        base: Box<PotentialSpec>,
        from: f64,
        to: f64,
    },
    /// `Q(x) = amplitude · exp(-((x-center)/width)²)`.
    Gaussian {
        amplitude: MatrixSpec,
        center: f64,
        width: f64,
    },
    /// Constant matrices on closed pieces, zero outside.
    PiecewiseConstant { pieces: Vec<PieceSpec> },
    /// Entrywise sums of primitive terms.
    MatrixExpr {
        dim: usize,
        entries: Vec<Vec<Vec<TermSpec>>>,
        /// Highest derivative order the terms are declared for.
        #[serde(default = "default_expr_order")]
        order: usize,
    },
}

fn default_expr_order() -> usize {
    6
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSpec {
    pub from: f64,
    pub to: f64,
    pub matrix: MatrixSpec,
}

/// One additive term of a `matrix_expr` entry.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TermSpec {
    /// `coeff`
    Const { coeff: ComplexPair },
    /// `coeff · exp(-((x-center)/width)²)`
    Gauss {
        coeff: ComplexPair,
        center: f64,
        width: f64,
    },
    /// `coeff · cos(freq·x + phase)`
    Cos {
        coeff: ComplexPair,
        freq: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `coeff · (x - center)^power`
    Poly {
        coeff: ComplexPair,
        power: u32,
        #[serde(default)]
        center: f64,
    },
}

impl TermSpec {
    fn derivative(&self, x: f64, k: usize) -> C64 {
        match self {
            TermSpec::Const { coeff } => {
                if k == 0 {
                    C64::new(coeff[0], coeff[1])
                } else {
                    C64::new(0.0, 0.0)
                }
            }
            TermSpec::Gauss {
                coeff,
                center,
                width,
            } => {
                // d^k/dx^k e^{-u²} = (-1)^k H_k(u) e^{-u²} / width^k
                let u = (x - center) / width;
                let mut h_prev = 0.0f64;
                let mut h = 1.0f64;
                for n in 0..k {
                    let next = 2.0 * u * h - 2.0 * (n as f64) * h_prev;
                    h_prev = h;
                    h = next;
                }
                let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
                C64::new(coeff[0], coeff[1]) * (sign * h * (-u * u).exp() / width.powi(k as i32))
            }
            TermSpec::Cos { coeff, freq, phase } => {
                let shift = k as f64 * std::f64::consts::FRAC_PI_2;
                C64::new(coeff[0], coeff[1])
                    * (freq.powi(k as i32) * (freq * x + phase + shift).cos())
            }
            TermSpec::Poly {
                coeff,
                power,
                center,
            } => {
                let p = *power as usize;
                if k > p {
                    return C64::new(0.0, 0.0);
                }
                let mut fall = 1.0f64;
                for j in 0..k {
                    fall *= (p - j) as f64;
                }
                C64::new(coeff[0], coeff[1]) * (fall * (x - center).powi((p - k) as i32))
            }
        }
    }
}

fn parse_matrix(spec: &MatrixSpec, path: &str) -> Result<CMatrix, CliError> {
    let m = spec.len();
    if m == 0 {
        return Err(CliError::validation(format!("{path}: empty matrix")));
    }
    for (i, row) in spec.iter().enumerate() {
        if row.len() != m {
            return Err(CliError::validation(format!(
                "{path}[{i}]: expected {m} entries, found {}",
                row.len()
            )));
        }
    }
    Ok(CMatrix::from_fn(m, m, |i, j| {
        C64::new(spec[i][j][0], spec[i][j][1])
    }))
}

impl PotentialSpec {
    pub fn build(&self, path: &str) -> Result<PotentialModel, CliError> {
        match self {
            PotentialSpec::Constant { matrix } => {
                let q0 = parse_matrix(matrix, &format!("{path}.matrix"))?;
                PotentialModel::constant(q0)
                    .map_err(|e| CliError::validation(format!("{path}.matrix: {e}")))
            }
            PotentialSpec::Truncated { base, from, to } => {
                let inner = base.build(&format!("{path}.base"))?;
                PotentialModel::truncated(&inner, *from, *to)
                    .map_err(|e| CliError::validation(format!("{path}: {e}")))
            }
            PotentialSpec::Gaussian {
                amplitude,
                center,
                width,
            } => {
                let amp = parse_matrix(amplitude, &format!("{path}.amplitude"))?;
                PotentialModel::gaussian(amp, *center, *width)
                    .map_err(|e| CliError::validation(format!("{path}: {e}")))
            }
            PotentialSpec::PiecewiseConstant { pieces } => {
                let mut built = Vec::new();
                for (i, p) in pieces.iter().enumerate() {
                    let q = parse_matrix(&p.matrix, &format!("{path}.pieces[{i}].matrix"))?;
                    built.push((p.from, p.to, q));
                }
                PotentialModel::piecewise_constant(built)
                    .map_err(|e| CliError::validation(format!("{path}.pieces: {e}")))
            }
            PotentialSpec::MatrixExpr {
                dim,
                entries,
                order,
            } => {
                let m = *dim;
                if entries.len() != m || entries.iter().any(|r| r.len() != m) {
                    return Err(CliError::validation(format!(
                        "{path}.entries: expected a {m}x{m} array of term lists"
                    )));
                }
                let entries = entries.clone();
                PotentialModel::smooth(m, *order, move |x, k| {
                    CMatrix::from_fn(m, m, |i, j| {
                        entries[i][j]
                            .iter()
                            .map(|t| t.derivative(x, k))
                            .sum::<C64>()
                    })
                })
                .map_err(|e| CliError::validation(format!("{path}.entries: {e}")))
            }
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, CliError> {
        toml::from_str(text).map_err(|e| CliError::validation(format!("config parse error: {e}")))
    }

    /// Structural validation with field paths; potentials are built later.
    pub fn validate(&self, subcommand: &str) -> Result<(), CliError> {
        if self.z_grid.moduli.is_empty() {
            return Err(CliError::validation("z_grid.moduli: must be non-empty"));
        }
        for (i, &r) in self.z_grid.moduli.iter().enumerate() {
            if !(r > 0.0) || !r.is_finite() {
                return Err(CliError::validation(format!(
                    "z_grid.moduli[{i}]: modulus {r} must be positive and finite"
                )));
            }
        }
        if self.z_grid.arg.is_empty() {
            return Err(CliError::validation("z_grid.arg: must be non-empty"));
        }
        for (i, &a) in self.z_grid.arg.iter().enumerate() {
            if !(a > 0.0 && a < std::f64::consts::PI) {
                return Err(CliError::validation(format!(
                    "z_grid.arg[{i}]: angle {a} outside (0, pi)"
                )));
            }
        }
        if let Some(kind) = &self.experiment.kind {
            if kind != subcommand {
                return Err(CliError::validation(format!(
                    "experiment.kind: '{kind}' does not match subcommand '{subcommand}'"
                )));
            }
        }
        if let Some(order) = self.experiment.order {
            if order > 12 {
                return Err(CliError::validation(format!(
                    "experiment.order: {order} exceeds the supported maximum of 12"
                )));
            }
        }
        if let Some(fmt) = &self.output.format {
            if fmt != "csv" && fmt != "json" {
                return Err(CliError::validation(format!(
                    "output.format: '{fmt}' is not one of csv, json"
                )));
            }
        }
        match subcommand {
            "locality" => {
                if self.potential_b.is_none() {
                    return Err(CliError::validation(
                        "potential_b: required for the locality experiment",
                    ));
                }
                let w = self
                    .locality
                    .as_ref()
                    .ok_or_else(|| CliError::validation("locality.window: required"))?;
                if !(w.window[0] < w.window[1]) {
                    return Err(CliError::validation(format!(
                        "locality.window: [{}, {}] is not a proper interval",
                        w.window[0], w.window[1]
                    )));
                }
            }
            "disk" => {
                let d = self
                    .disk
                    .as_ref()
                    .ok_or_else(|| CliError::validation("disk: section required"))?;
                if d.horizons.is_empty() {
                    return Err(CliError::validation("disk.horizons: must be non-empty"));
                }
            }
            "compare" => {
                let c = self
                    .compare
                    .as_ref()
                    .ok_or_else(|| CliError::validation("compare: section required"))?;
                if c.methods.len() < 2 {
                    return Err(CliError::validation(
                        "compare.methods: at least two methods required",
                    ));
                }
                for (i, method) in c.methods.iter().enumerate() {
                    if !matches!(method.as_str(), "limit" | "volterra" | "riccati") {
                        return Err(CliError::validation(format!(
                            "compare.methods[{i}]: '{method}' is not one of limit, volterra, riccati"
                        )));
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn zs(&self) -> Vec<C64> {
        self.z_grid
            .moduli
            .iter()
            .flat_map(|&r| self.z_grid.arg.iter().map(move |&a| C64::from_polar(r, a)))
            .collect()
    }

    pub fn xs(&self) -> Vec<f64> {
        self.experiment
            .x
            .clone()
            .unwrap_or_else(|| vec![self.experiment.x0])
    }
}

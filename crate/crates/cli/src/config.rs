//! Experiment configuration: TOML file merged with command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use fourier_cur::coeff_oracle::IndexSet;
use fourier_cur::cur::{estimate_orders, AdaptiveParams, FixedMode, MAX_DENSE_COEFFS};
use fourier_cur::{QuadKind, TestFunction};
use serde::Deserialize;

use crate::error::CliError;

/// Block-size pair, written `6x6` on the command line and `[6, 6]` in files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(from = "[usize; 2]")]
pub struct Pair(pub usize, pub usize);

impl From<[usize; 2]> for Pair {
    fn from(v: [usize; 2]) -> Self {
        Pair(v[0], v[1])
    }
}

impl FromStr for Pair {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let (a, b) = s
            .split_once('x')
            .ok_or_else(|| format!("expected `b1xb2`, got `{s}`"))?;
        let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{s}`: {e}"));
        Ok(Pair(parse(a)?, parse(b)?))
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.0, self.1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trig {
    Cos,
    Sin,
}

impl Trig {
    fn eval(self, x: f64) -> f64 {
        match self {
            Trig::Cos => x.cos(),
            Trig::Sin => x.sin(),
        }
    }
}

fn cos() -> Trig {
    Trig::Cos
}

/// `coef * x1(k1 x1) * x2(k2 x2)`.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub coef: f64,
    #[serde(default = "cos")]
    pub x1: Trig,
    #[serde(default)]
    pub k1: i64,
    #[serde(default = "cos")]
    pub x2: Trig,
    #[serde(default)]
    pub k2: i64,
}

/// Separable trigonometric sum given in the configuration file.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserFunction {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub terms: Vec<Term>,
}

impl UserFunction {
    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|t| t.coef * t.x1.eval(t.k1 as f64 * x1) * t.x2.eval(t.k2 as f64 * x2))
                .sum::<f64>()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum FunctionSpec {
    Builtin(TestFunction),
    User(UserFunction),
}

impl FunctionSpec {
    pub fn name(&self) -> &str {
        match self {
            FunctionSpec::Builtin(f) => f.name(),
            FunctionSpec::User(_) => "user",
        }
    }

    pub fn eval(&self, x1: f64, x2: f64) -> f64 {
        match self {
            FunctionSpec::Builtin(f) => f.eval(x1, x2),
            FunctionSpec::User(u) => u.eval(x1, x2),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Alg1,
    Alg2,
    AlgC1,
    Truncated,
    Fixed,
}

impl Algorithm {
    pub const COMPARED: [Algorithm; 4] = [
        Algorithm::Truncated,
        Algorithm::Alg1,
        Algorithm::Alg2,
        Algorithm::AlgC1,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Alg1 => "alg1",
            Algorithm::Alg2 => "alg2",
            Algorithm::AlgC1 => "algc1",
            Algorithm::Truncated => "truncated",
            Algorithm::Fixed => "fixed",
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Algorithm::Alg1 => "Algorithm 1",
            Algorithm::Alg2 => "Algorithm 2",
            Algorithm::AlgC1 => "Algorithm C.1",
            Algorithm::Truncated => "Truncated Fourier",
            Algorithm::Fixed => "Fixed CUR",
        }
    }

    pub fn is_adaptive(&self) -> bool {
        matches!(self, Algorithm::Alg1 | Algorithm::Alg2 | Algorithm::AlgC1)
    }
}

impl FromStr for Algorithm {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "alg1" => Ok(Algorithm::Alg1),
            "alg2" => Ok(Algorithm::Alg2),
            "algc1" => Ok(Algorithm::AlgC1),
            "truncated" => Ok(Algorithm::Truncated),
            "fixed" => Ok(Algorithm::Fixed),
            _ => Err(CliError::Config(format!(
                "unknown algorithm `{s}` (expected alg1, alg2, algc1, truncated or fixed)"
            ))),
        }
    }
}

fn parse_fixed_mode(s: &str) -> Result<FixedMode, CliError> {
    match s {
        "cross" => Ok(FixedMode::Cross),
        "two_sided_id" => Ok(FixedMode::TwoSidedId),
        "best" => Ok(FixedMode::Best),
        _ => Err(CliError::Config(format!(
            "unknown fixed_mode `{s}` (expected cross, two_sided_id or best)"
        ))),
    }
}

/// Every key of the configuration file. The same struct doubles as the set
/// of override flags, each named after its key.
#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    /// f1, f2, f3 or user
    #[arg(long)]
    pub function: Option<String>,
    #[arg(skip)]
    pub user_function: Option<UserFunction>,
    /// CC, GL or NC
    #[arg(long)]
    pub quad: Option<String>,
    #[arg(long = "M1")]
    #[serde(rename = "M1")]
    pub m1: Option<usize>,
    #[arg(long = "M2")]
    #[serde(rename = "M2")]
    pub m2: Option<usize>,
    #[arg(long = "I1")]
    #[serde(rename = "I1")]
    pub i1: Option<usize>,
    #[arg(long = "I2")]
    #[serde(rename = "I2")]
    pub i2: Option<usize>,
    #[arg(long)]
    pub alpha: Option<u32>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long = "C_const")]
    #[serde(rename = "C_const")]
    pub c_const: Option<f64>,
    #[arg(long)]
    pub seminorm: Option<f64>,
    #[arg(long)]
    pub b1: Option<usize>,
    #[arg(long)]
    pub b2: Option<usize>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long = "K")]
    #[serde(rename = "K")]
    pub k: Option<usize>,
    #[arg(long = "grid_n")]
    pub grid_n: Option<usize>,
    #[arg(long)]
    pub repeats: Option<usize>,
    /// alg1, alg2, algc1, truncated or fixed
    #[arg(long)]
    pub algorithm: Option<String>,
    #[arg(long = "T1", value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(rename = "T1")]
    pub t1: Option<Vec<i64>>,
    #[arg(long = "T2", value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(rename = "T2")]
    pub t2: Option<Vec<i64>>,
    /// cross, two_sided_id or best
    #[arg(long = "fixed_mode")]
    pub fixed_mode: Option<String>,
    #[arg(long = "integral_budget")]
    pub integral_budget: Option<usize>,
    /// Also compute the full coefficient matrix and report the L2 gap
    #[arg(long)]
    pub reference: Option<bool>,
    #[arg(long = "output_dir")]
    pub output_dir: Option<PathBuf>,
    /// Quadratures compared side by side
    #[arg(long, value_delimiter = ',')]
    pub quads: Option<Vec<String>>,
    /// Functions compared side by side
    #[arg(long, value_delimiter = ',')]
    pub functions: Option<Vec<String>>,
    /// Block-size pairs such as 2x2,4x4
    #[arg(long, value_delimiter = ',')]
    pub pairs: Option<Vec<Pair>>,
    #[arg(long, value_delimiter = ',')]
    pub taus: Option<Vec<f64>>,
}

macro_rules! overlay {
    ($base:ident, $over:ident; $($field:ident),*) => {
        $( if $over.$field.is_some() { $base.$field = $over.$field; } )*
    };
}

impl RawConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Fields set in `over` replace those of `self`.
    pub fn merged(mut self, over: RawConfig) -> RawConfig {
        overlay!(self, over; function, user_function, quad, m1, m2, i1, i2, alpha, eps,
            c_const, seminorm, b1, b2, tau, k, grid_n, repeats, algorithm, t1, t2, fixed_mode,
            integral_budget, reference, output_dir, quads, functions, pairs, taus);
        self
    }
}

pub const DEFAULT_M: usize = 501;
pub const DEFAULT_GRID_N: usize = 60;

pub fn default_pairs() -> Vec<Pair> {
    (1..=10).map(|i| Pair(2 * i, 2 * i)).collect()
}

pub fn default_taus() -> Vec<f64> {
    (1..=10).map(|e| 10f64.powi(-e)).collect()
}

/// Validated experiment settings.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub function: FunctionSpec,
    pub quad: QuadKind,
    pub m1: usize,
    pub m2: usize,
    pub i1: usize,
    pub i2: usize,
    pub b1: usize,
    pub b2: usize,
    pub tau: f64,
    pub k: usize,
    pub grid_n: usize,
    pub repeats: usize,
    pub algorithm: Algorithm,
    pub t1: IndexSet,
    pub t2: IndexSet,
    pub fixed_mode: FixedMode,
    pub integral_budget: usize,
    pub reference: bool,
    pub output_dir: PathBuf,
    pub quads: Vec<QuadKind>,
    pub functions: Vec<FunctionSpec>,
    pub pairs: Vec<Pair>,
    pub taus: Vec<f64>,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn parse_function(name: &str, user: Option<&UserFunction>) -> Result<FunctionSpec, CliError> {
    if name == "user" {
        return user
            .cloned()
            .map(FunctionSpec::User)
            .ok_or_else(|| config_err("function = \"user\" needs a [user_function] table"));
    }
    Ok(FunctionSpec::Builtin(name.parse::<TestFunction>()?))
}

fn parse_quad(name: &str) -> Result<QuadKind, CliError> {
    name.parse::<QuadKind>().map_err(|_| {
        config_err(format!(
            "unknown quadrature `{name}` (expected CC, GL or NC)"
        ))
    })
}

impl ExperimentConfig {
    pub fn from_sources(file: Option<&Path>, overrides: RawConfig) -> Result<Self, CliError> {
        let base = match file {
            Some(p) => RawConfig::load(p)?,
            None => RawConfig::default(),
        };
        Self::resolve(base.merged(overrides))
    }

    pub fn resolve(raw: RawConfig) -> Result<Self, CliError> {
        let function = parse_function(
            raw.function.as_deref().unwrap_or("f2"),
            raw.user_function.as_ref(),
        )?;
        let quad = parse_quad(raw.quad.as_deref().unwrap_or("NC"))?;
        let m1 = raw.m1.unwrap_or(DEFAULT_M);
        let m2 = raw.m2.unwrap_or(DEFAULT_M);
        if m1 == 0 || m2 == 0 {
            return Err(config_err("M1 and M2 must be positive"));
        }
        let (i1, i2) = match (raw.i1, raw.i2) {
            (Some(a), Some(b)) => (a, b),
            (None, None) => {
                let e = estimate_orders(
                    raw.alpha.unwrap_or(2),
                    raw.eps.unwrap_or(1e-4),
                    raw.c_const.unwrap_or(1.0),
                    raw.seminorm.unwrap_or(1.0),
                )?;
                (e.i1, e.i2)
            }
            _ => return Err(config_err("give both I1 and I2, or neither")),
        };
        let b1 = raw.b1.unwrap_or(6);
        let b2 = raw.b2.unwrap_or(6);
        let tau = raw.tau.unwrap_or(1e-5);
        let k = raw.k.unwrap_or(100);
        // same rules as the library, reported as configuration errors
        AdaptiveParams::new(b1, b2, tau, k)
            .validate()
            .map_err(|e| config_err(e.to_string()))?;
        let grid_n = raw.grid_n.unwrap_or(DEFAULT_GRID_N);
        if grid_n < 2 {
            return Err(config_err("grid_n must be at least 2"));
        }
        let repeats = raw.repeats.unwrap_or(1);
        if repeats == 0 {
            return Err(config_err("repeats must be positive"));
        }
        let algorithm: Algorithm = raw.algorithm.as_deref().unwrap_or("alg2").parse()?;
        let to_set =
            |v: Option<Vec<i64>>, order: usize, name: &str| -> Result<IndexSet, CliError> {
                let set = IndexSet::from_unsorted(v.unwrap_or_else(|| vec![0]));
                if set.is_empty() || set.iter().any(|x| x.unsigned_abs() as usize > order) {
                    return Err(config_err(format!(
                        "{name} must be nonempty and inside [-{order}, {order}]"
                    )));
                }
                Ok(set)
            };
        let t1 = to_set(raw.t1, i1, "T1")?;
        let t2 = to_set(raw.t2, i2, "T2")?;
        let fixed_mode = parse_fixed_mode(raw.fixed_mode.as_deref().unwrap_or("cross"))?;
        let quads = match raw.quads {
            Some(q) => q
                .iter()
                .map(|s| parse_quad(s))
                .collect::<Result<Vec<_>, _>>()?,
            None => QuadKind::ALL.to_vec(),
        };
        let functions = match raw.functions {
            Some(fs) => fs
                .iter()
                .map(|s| parse_function(s, raw.user_function.as_ref()))
                .collect::<Result<Vec<_>, _>>()?,
            None => TestFunction::ALL
                .iter()
                .map(|&f| FunctionSpec::Builtin(f))
                .collect(),
        };
        let pairs = raw.pairs.unwrap_or_else(default_pairs);
        let taus = raw.taus.unwrap_or_else(default_taus);
        if quads.is_empty() || functions.is_empty() || pairs.is_empty() || taus.is_empty() {
            return Err(config_err(
                "quads, functions, pairs and taus must be nonempty",
            ));
        }
        Ok(ExperimentConfig {
            function,
            quad,
            m1,
            m2,
            i1,
            i2,
            b1,
            b2,
            tau,
            k,
            grid_n,
            repeats,
            algorithm,
            t1,
            t2,
            fixed_mode,
            integral_budget: raw.integral_budget.unwrap_or(MAX_DENSE_COEFFS),
            reference: raw.reference.unwrap_or(false),
            output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from(".")),
            quads,
            functions,
            pairs,
            taus,
        })
    }

    pub fn params(&self) -> AdaptiveParams {
        AdaptiveParams::new(self.b1, self.b2, self.tau, self.k)
    }
}

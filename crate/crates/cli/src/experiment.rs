//! Single runs, parameter sweeps and method comparisons.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fourier_cur::coeff_oracle::CoeffOracle;
use fourier_cur::cur::{
    algorithm1, algorithm2, algorithm_c1, cross_integral_count, cur_fixed, CurModel, FixedMode,
};
use fourier_cur::{
    error_grid, eval_cur, eval_truncated, l2_gap, make_rule, CMatrix, Error, ErrorReport, QuadKind,
};
use serde::{Deserialize, Serialize};

use crate::config::{Algorithm, ExperimentConfig, FunctionSpec};
use crate::error::CliError;

pub const ERRORS_HEADER: [&str; 6] = ["x1", "x2", "f", "approx_real", "approx_imag", "err"];

/// Contents of `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub function: String,
    pub algorithm: String,
    pub quad: String,
    #[serde(rename = "I1")]
    pub i1: usize,
    #[serde(rename = "I2")]
    pub i2: usize,
    #[serde(rename = "M1")]
    pub m1: usize,
    #[serde(rename = "M2")]
    pub m2: usize,
    pub max_err: f64,
    pub l2_gap: Option<f64>,
    #[serde(rename = "S1")]
    pub s1: usize,
    #[serde(rename = "S2")]
    pub s2: usize,
    pub iterations: usize,
    pub n_integrals: usize,
    pub elapsed_seconds: f64,
    pub stop_reason: Option<String>,
    pub max_imag_residue: f64,
}

pub enum Approximant {
    Truncated(CMatrix),
    Cur(Box<CurModel>),
}

pub struct Outcome {
    pub approximant: Approximant,
    pub report: ErrorReport,
    pub summary: RunSummary,
}

/// Header plus rows of an emitted table, already formatted.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// 17 significant digits.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn check_budget(cfg: &ExperimentConfig, algorithm: Algorithm) -> Result<(), CliError> {
    let dense = (2 * cfg.i1 + 1) * (2 * cfg.i2 + 1);
    let needed = match algorithm {
        Algorithm::Truncated => dense,
        Algorithm::Fixed if cfg.fixed_mode == FixedMode::Best => dense,
        Algorithm::Fixed => cross_integral_count(cfg.i1, cfg.i2, cfg.t1.len(), cfg.t2.len()),
        _ if cfg.reference => dense,
        _ => 0,
    };
    if needed > cfg.integral_budget {
        return Err(Error::Capacity(format!(
            "{} needs {needed} coefficients, above the integral budget of {}",
            algorithm.as_str(),
            cfg.integral_budget
        ))
        .into());
    }
    Ok(())
}

/// Runs one method `cfg.repeats` times and evaluates the last result.
pub fn run_method(
    cfg: &ExperimentConfig,
    function: &FunctionSpec,
    quad: QuadKind,
    algorithm: Algorithm,
) -> Result<Outcome, CliError> {
    check_budget(cfg, algorithm)?;
    let rule1 = make_rule(quad, cfg.m1)?;
    let rule2 = make_rule(quad, cfg.m2)?;
    let f = |x1: f64, x2: f64| function.eval(x1, x2);
    let params = cfg.params();

    let mut total = 0.0;
    let mut last = None;
    for _ in 0..cfg.repeats {
        let start = Instant::now();
        let mut o = CoeffOracle::new(f, cfg.i1, cfg.i2, rule1.clone(), rule2.clone())?;
        let approximant = match algorithm {
            Algorithm::Truncated => Approximant::Truncated(o.full_matrix()?),
            Algorithm::Alg1 => Approximant::Cur(Box::new(algorithm1(&mut o, params)?)),
            Algorithm::Alg2 => Approximant::Cur(Box::new(algorithm2(&mut o, params)?)),
            Algorithm::AlgC1 => Approximant::Cur(Box::new(algorithm_c1(&mut o, params)?)),
            Algorithm::Fixed => Approximant::Cur(Box::new(cur_fixed(
                &mut o,
                &cfg.t1,
                &cfg.t2,
                cfg.fixed_mode,
            )?)),
        };
        total += start.elapsed().as_secs_f64();
        last = Some((o, approximant));
    }
    let (mut oracle, approximant) = last.expect("at least one repeat");
    let n_integrals = oracle.integral_count();

    let mut report = match &approximant {
        Approximant::Truncated(a) => {
            error_grid(f, |g| eval_truncated(a, cfg.i1, cfg.i2, g), cfg.grid_n)?
        }
        Approximant::Cur(m) => error_grid(f, |g| eval_cur(m, g), cfg.grid_n)?,
    };
    let gap = match &approximant {
        Approximant::Cur(m) if cfg.reference => Some(l2_gap(&oracle.full_matrix()?, m)?),
        _ => None,
    };
    let elapsed = total / cfg.repeats as f64;
    report.l2_gap = gap;
    report.elapsed_seconds = Some(elapsed);
    report.n_integrals = Some(n_integrals);

    let (s1, s2, iterations, stop_reason) = match &approximant {
        Approximant::Truncated(a) => (a.nrows(), a.ncols(), 0, None),
        Approximant::Cur(m) => (
            m.s1(),
            m.s2(),
            m.stats.iterations,
            m.stats.stop_reason.map(|s| s.as_str().to_string()),
        ),
    };
    let summary = RunSummary {
        function: function.name().to_string(),
        algorithm: algorithm.as_str().to_string(),
        quad: quad.as_str().to_string(),
        i1: cfg.i1,
        i2: cfg.i2,
        m1: cfg.m1,
        m2: cfg.m2,
        max_err: report.max_err,
        l2_gap: gap,
        s1,
        s2,
        iterations,
        n_integrals,
        elapsed_seconds: elapsed,
        stop_reason,
        max_imag_residue: report.max_imag_residue,
    };
    Ok(Outcome {
        approximant,
        report,
        summary,
    })
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    if dir.is_dir() {
        Ok(())
    } else {
        Err(CliError::io(
            dir,
            std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "output directory does not exist",
            ),
        ))
    }
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub fn write_errors_csv(path: &Path, report: &ErrorReport) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(ERRORS_HEADER)
        .map_err(|e| csv_err(path, e))?;
    let n2 = report.grid.x2s().len();
    for p in 0..report.err.len() {
        let x1 = report.grid.x1s()[p / n2];
        let x2 = report.grid.x2s()[p % n2];
        let rec = [
            x1,
            x2,
            report.f_vals[p],
            report.approx_real[p],
            report.approx_imag[p],
            report.err[p],
        ]
        .map(fmt_num);
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_summary(path: &Path, summary: &RunSummary) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(file), summary).map_err(|e| CliError::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn write_table(path: &Path, table: &Table) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(&table.header)
        .map_err(|e| csv_err(path, e))?;
    for row in &table.rows {
        w.write_record(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Writes `errors.csv` and `summary.json` for the configured method.
pub fn run_approx(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    ensure_dir(&cfg.output_dir)?;
    let out = run_method(cfg, &cfg.function, cfg.quad, cfg.algorithm)?;
    write_errors_csv(&cfg.output_dir.join("errors.csv"), &out.report)?;
    write_summary(&cfg.output_dir.join("summary.json"), &out.summary)?;
    Ok(out)
}

fn sweep_columns(s: &RunSummary) -> Vec<String> {
    vec![
        fmt_num(s.elapsed_seconds),
        fmt_num(s.max_err),
        s.s1.to_string(),
        s.s2.to_string(),
        s.n_integrals.to_string(),
        s.iterations.to_string(),
        s.stop_reason.clone().unwrap_or_default(),
    ]
}

const SWEEP_TAIL: [&str; 7] = [
    "elapsed",
    "max_err",
    "S1",
    "S2",
    "n_integrals",
    "iterations",
    "stop_reason",
];

fn require_adaptive(cfg: &ExperimentConfig) -> Result<(), CliError> {
    if cfg.algorithm.is_adaptive() {
        Ok(())
    } else {
        Err(CliError::Config(format!(
            "sweeps need an adaptive algorithm, got {}",
            cfg.algorithm.as_str()
        )))
    }
}

/// One row per `(b1, b2)` pair, written to `table.csv`.
pub fn sweep_blocks(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    require_adaptive(cfg)?;
    ensure_dir(&cfg.output_dir)?;
    let mut header = vec!["b1".to_string(), "b2".to_string()];
    header.extend(SWEEP_TAIL.iter().map(|s| s.to_string()));
    let mut rows = Vec::new();
    for pair in &cfg.pairs {
        let mut c = cfg.clone();
        c.b1 = pair.0;
        c.b2 = pair.1;
        c.params()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        let out = run_method(&c, &c.function, c.quad, c.algorithm)?;
        let mut row = vec![pair.0.to_string(), pair.1.to_string()];
        row.extend(sweep_columns(&out.summary));
        rows.push(row);
    }
    let table = Table { header, rows };
    write_table(&cfg.output_dir.join("table.csv"), &table)?;
    Ok(table)
}

/// One row per tolerance, written to `table.csv`.
pub fn sweep_tau(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    require_adaptive(cfg)?;
    ensure_dir(&cfg.output_dir)?;
    let mut header = vec!["tau".to_string()];
    header.extend(SWEEP_TAIL.iter().map(|s| s.to_string()));
    let mut rows = Vec::new();
    for &tau in &cfg.taus {
        let mut c = cfg.clone();
        c.tau = tau;
        c.params()
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        let out = run_method(&c, &c.function, c.quad, c.algorithm)?;
        let mut row = vec![format!("{tau:e}")];
        row.extend(sweep_columns(&out.summary));
        rows.push(row);
    }
    let table = Table { header, rows };
    write_table(&cfg.output_dir.join("table.csv"), &table)?;
    Ok(table)
}

/// Path of the error grid written by [`compare`] for one run.
pub fn comparison_errors_path(
    dir: &Path,
    algorithm: Algorithm,
    quad: QuadKind,
    function: &str,
) -> PathBuf {
    dir.join(format!(
        "errors_{}_{}_{}.csv",
        algorithm.as_str(),
        quad.as_str(),
        function
    ))
}

/// Truncated series against the three adaptive methods for every quadrature
/// and function; one row per method and quadrature.
pub fn compare(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    ensure_dir(&cfg.output_dir)?;
    let mut header = vec!["method".to_string(), "quad".to_string()];
    for f in &cfg.functions {
        for col in ["elapsed", "max_err", "n_integrals"] {
            header.push(format!("{}_{col}", f.name()));
        }
    }
    let mut rows = Vec::new();
    for algorithm in Algorithm::COMPARED {
        for &quad in &cfg.quads {
            let mut row = vec![algorithm.label().to_string(), quad.as_str().to_string()];
            for function in &cfg.functions {
                let out = run_method(cfg, function, quad, algorithm)?;
                let path =
                    comparison_errors_path(&cfg.output_dir, algorithm, quad, function.name());
                write_errors_csv(&path, &out.report)?;
                row.push(fmt_num(out.summary.elapsed_seconds));
                row.push(fmt_num(out.summary.max_err));
                row.push(out.summary.n_integrals.to_string());
            }
            rows.push(row);
        }
    }
    let table = Table { header, rows };
    write_table(&cfg.output_dir.join("table.csv"), &table)?;
    Ok(table)
}

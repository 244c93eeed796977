//! CUR models of the coefficient matrix.
//!
//! `cur_fixed` couples given row/column frequency sets. The three adaptive
//! builders grow symmetric frequency bands `{-k b, .., -(k-1) b - 1} ∪
//! {(k-1) b + 1, .., k b}` around zero until the smallest singular value of
//! the growing factor, relative to its accumulated Frobenius norm, drops to
//! `tau` or the iteration cap is reached:
//!
//! * [`algorithm1`] grows whole column and row blocks `C`, `R`;
//! * [`algorithm2`] grows only the intersection core `G` and forms `C`, `R`
//!   once at the end;
//! * [`algorithm_c1`] grows a block-diagonal core, treating coefficients
//!   between different bands as zero (also inside `C` and `R`).
//!
//! The stopping test is evaluated from the first band on; a zero norm
//! accumulator gives an infinite ratio.

use std::fmt;
use std::time::Instant;

use crate::coeff_oracle::{CoeffOracle, IndexSet};
use crate::error::{invalid, Error, Result};
use crate::linalg::{pinv, pinv_default, sigma_min, CMatrix};

/// Largest coefficient matrix that [`FixedMode::Best`] will materialise.
pub const MAX_DENSE_COEFFS: usize = 4_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StopReason {
    Tolerance,
    MaxIterations,
    IndexBounds,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::Tolerance => "tolerance",
            StopReason::MaxIterations => "max_iterations",
            StopReason::IndexBounds => "index_bounds",
        }
    }
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunStats {
    pub iterations: usize,
    /// Stopping quantity after each iteration.
    pub tol_trace: Vec<f64>,
    /// `[column ratio, row ratio]` per iteration; filled by [`algorithm1`] only.
    pub factor_ratios: Vec<[f64; 2]>,
    /// Coefficients computed by this run.
    pub n_integrals: usize,
    pub elapsed_seconds: f64,
    /// `None` for the non-iterative [`cur_fixed`].
    pub stop_reason: Option<StopReason>,
}

/// `C U R` factors together with the frequency sets that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct CurModel {
    pub order1: usize,
    pub order2: usize,
    pub t1: IndexSet,
    pub t2: IndexSet,
    /// `(2 I1 + 1) x S2`
    pub c: CMatrix,
    /// `S1 x (2 I2 + 1)`
    pub r: CMatrix,
    /// `S1 x S2`
    pub g: CMatrix,
    /// `S2 x S1`
    pub u: CMatrix,
    pub stats: RunStats,
}

impl CurModel {
    pub fn s1(&self) -> usize {
        self.t1.len()
    }

    pub fn s2(&self) -> usize {
        self.t2.len()
    }

    /// The dense approximation `C U R` of the coefficient matrix.
    pub fn product(&self) -> CMatrix {
        &(&self.c * &self.u) * &self.r
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FixedMode {
    /// `U = G^+`.
    Cross,
    /// `U = C(T1, :)^+ G R(:, T2)^+`.
    TwoSidedId,
    /// `U = C^+ A R^+`; needs the full coefficient matrix.
    Best,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdaptiveParams {
    pub b1: usize,
    pub b2: usize,
    pub tau: f64,
    pub max_iter: usize,
}

impl AdaptiveParams {
    pub fn new(b1: usize, b2: usize, tau: f64, max_iter: usize) -> Self {
        AdaptiveParams {
            b1,
            b2,
            tau,
            max_iter,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.b1 == 0 || self.b2 == 0 {
            return invalid(format!(
                "block sizes must be positive, got ({}, {})",
                self.b1, self.b2
            ));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return invalid(format!("tau must lie in (0, 1), got {}", self.tau));
        }
        if self.max_iter == 0 {
            return invalid("max_iter must be positive");
        }
        Ok(())
    }
}

/// Truncation orders from a smoothness-based error estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrderEstimate {
    pub i1: usize,
    pub i2: usize,
    pub alpha: u32,
    pub eps: f64,
    pub c_const: f64,
    pub seminorm: f64,
}

/// `I = ceil((c_const * seminorm / eps)^(1 / alpha))` in both directions.
pub fn estimate_orders(alpha: u32, eps: f64, c_const: f64, seminorm: f64) -> Result<OrderEstimate> {
    if alpha == 0 {
        return invalid("alpha must be at least 1");
    }
    if !(eps > 0.0 && eps < 1.0) {
        return invalid(format!("eps must lie in (0, 1), got {eps}"));
    }
    if !(c_const > 0.0 && c_const.is_finite()) || !(seminorm > 0.0 && seminorm.is_finite()) {
        return invalid("c_const and seminorm must be positive and finite");
    }
    let target = c_const * seminorm / eps;
    let alpha_i = alpha as i32;
    // smallest n with n^alpha >= target, starting from the floating-point root
    let mut n = target.powf(1.0 / alpha as f64).ceil().max(1.0);
    while n > 1.0 && (n - 1.0).powi(alpha_i) >= target {
        n -= 1.0;
    }
    while n.powi(alpha_i) < target {
        n += 1.0;
    }
    if n > usize::MAX as f64 / 4.0 {
        return Err(Error::Capacity(format!(
            "estimated order {n} is not representable"
        )));
    }
    let order = n as usize;
    Ok(OrderEstimate {
        i1: order,
        i2: order,
        alpha,
        eps,
        c_const,
        seminorm,
    })
}

/// The `k`-th symmetric band of width `b`: `{-k b .. -(k-1) b - 1} ∪ {(k-1) b + 1 .. k b}`.
pub fn index_band(k: usize, b: usize) -> IndexSet {
    index_band_clipped(k, b, usize::MAX / 2)
}

/// [`index_band`] restricted to `[-order, order]`.
pub fn index_band_clipped(k: usize, b: usize, order: usize) -> IndexSet {
    if k == 0 || b == 0 {
        return IndexSet::default();
    }
    let lo = ((k - 1) * b + 1) as i64;
    let hi = ((k * b).min(order)) as i64;
    if lo > hi {
        return IndexSet::default();
    }
    let mut v: Vec<i64> = (lo..=hi).rev().map(|x| -x).collect();
    v.extend(lo..=hi);
    IndexSet::new(v).expect("band is sorted")
}

/// Band number of a frequency for block size `b` (`0` for the origin).
pub fn band_of(k: i64, b: usize) -> usize {
    (k.unsigned_abs() as usize).div_ceil(b)
}

/// Coefficients needed for `C` and `R` over `t1`, `t2`:
/// `(2 I1 + 1) S2 + (2 I2 + 1) S1 - S1 S2`.
pub fn cross_integral_count(order1: usize, order2: usize, s1: usize, s2: usize) -> usize {
    (2 * order1 + 1) * s2 + (2 * order2 + 1) * s1 - s1 * s2
}

/// Coefficients computed by [`algorithm_c1`]: the cross count minus every
/// core entry lying off the band diagonal.
pub fn block_diagonal_integral_count(
    order1: usize,
    order2: usize,
    t1: &IndexSet,
    t2: &IndexSet,
    b1: usize,
    b2: usize,
) -> usize {
    let off_diagonal = t1
        .iter()
        .flat_map(|a| t2.iter().map(move |c| (a, c)))
        .filter(|&(a, c)| band_of(a, b1) != band_of(c, b2))
        .count();
    cross_integral_count(order1, order2, t1.len(), t2.len()) - off_diagonal
}

/// The closed-form count `(2 I1 + 1) S2 + (2 I2 + 1) S1 - 2 S1 S2 + K b1 b2`
/// quoted for the block-diagonal variant. It does not agree with the exact
/// tally in general; see [`block_diagonal_integral_count`].
pub fn block_diagonal_reference_count(
    order1: usize,
    order2: usize,
    s1: usize,
    s2: usize,
    iterations: usize,
    b1: usize,
    b2: usize,
) -> i64 {
    let (i1, i2) = ((2 * order1 + 1) as i64, (2 * order2 + 1) as i64);
    let (s1, s2) = (s1 as i64, s2 as i64);
    i1 * s2 + i2 * s1 - 2 * s1 * s2 + (iterations * b1 * b2) as i64
}

fn ratio(sigma: f64, norm_sqr: f64) -> f64 {
    if norm_sqr == 0.0 {
        f64::INFINITY
    } else {
        sigma / norm_sqr.sqrt()
    }
}

#[allow(clippy::too_many_arguments)]
fn model(
    o: &CoeffOracle,
    t1: IndexSet,
    t2: IndexSet,
    c: CMatrix,
    r: CMatrix,
    g: CMatrix,
    u: CMatrix,
    stats: RunStats,
) -> CurModel {
    let (order1, order2) = o.orders();
    CurModel {
        order1,
        order2,
        t1,
        t2,
        c,
        r,
        g,
        u,
        stats,
    }
}

pub fn cur_fixed(
    o: &mut CoeffOracle,
    t1: &IndexSet,
    t2: &IndexSet,
    mode: FixedMode,
) -> Result<CurModel> {
    if t1.is_empty() || t2.is_empty() {
        return invalid("index sets must be nonempty");
    }
    let start = Instant::now();
    let before = o.integral_count();
    let (order1, order2) = o.orders();
    if mode == FixedMode::Best && (2 * order1 + 1) * (2 * order2 + 1) > MAX_DENSE_COEFFS {
        return Err(Error::Capacity(format!(
            "best coupling needs the full {0}x{1} matrix (limit {MAX_DENSE_COEFFS} entries)",
            2 * order1 + 1,
            2 * order2 + 1
        )));
    }
    let c = o.column_block(t2)?;
    let r = o.row_block(t1)?;
    let g = c.select_rows(&t1.positions(order1));
    let u = match mode {
        FixedMode::Cross => pinv_default(&g)?,
        FixedMode::TwoSidedId => {
            let left = pinv_default(&c.select_rows(&t1.positions(order1)))?;
            let right = pinv_default(&r.select_columns(&t2.positions(order2)))?;
            &(&left * &g) * &right
        }
        FixedMode::Best => {
            let a = o.full_matrix()?;
            let cp = pinv(&c, crate::linalg::default_rtol(&c))?;
            let rp = pinv(&r, crate::linalg::default_rtol(&r))?;
            &(&cp * &a) * &rp
        }
    };
    let stats = RunStats {
        n_integrals: o.integral_count() - before,
        elapsed_seconds: start.elapsed().as_secs_f64(),
        ..RunStats::default()
    };
    Ok(model(o, t1.clone(), t2.clone(), c, r, g, u, stats))
}

/// Grows whole column and row blocks; stops on
/// `min(sigma_min(C) / ||C||_F, sigma_min(R) / ||R||_F) <= tau`.
pub fn algorithm1(o: &mut CoeffOracle, params: AdaptiveParams) -> Result<CurModel> {
    params.validate()?;
    let start = Instant::now();
    let before = o.integral_count();
    let (order1, order2) = o.orders();

    let mut t1 = IndexSet::single(0);
    let mut t2 = IndexSet::single(0);
    let mut c = o.column_block(&t2)?;
    let mut r = o.row_block(&t1)?;
    let mut nf_c = c.fro_norm_sqr();
    let mut nf_r = r.fro_norm_sqr();
    let mut stats = RunStats::default();

    let stop = loop {
        let k = stats.iterations + 1;
        if k > params.max_iter {
            break StopReason::MaxIterations;
        }
        let new1 = index_band_clipped(k, params.b1, order1);
        let new2 = index_band_clipped(k, params.b2, order2);
        if new1.is_empty() && new2.is_empty() {
            break StopReason::IndexBounds;
        }
        if !new2.is_empty() {
            let ck = o.column_block(&new2)?;
            nf_c += ck.fro_norm_sqr();
            c = c.hstack(&ck)?;
        }
        if !new1.is_empty() {
            let rk = o.row_block(&new1)?;
            nf_r += rk.fro_norm_sqr();
            r = r.vstack(&rk)?;
        }
        t1 = t1.union(&new1);
        t2 = t2.union(&new2);
        stats.iterations = k;

        let ratio_c = ratio(sigma_min(&c)?, nf_c);
        let ratio_r = ratio(sigma_min(&r)?, nf_r);
        let tol = ratio_c.min(ratio_r);
        stats.factor_ratios.push([ratio_c, ratio_r]);
        stats.tol_trace.push(tol);
        if tol <= params.tau {
            break StopReason::Tolerance;
        }
    };

    // reorder the factors to ascending frequency; every entry is cached
    let c = o.column_block(&t2)?;
    let r = o.row_block(&t1)?;
    let g = c.select_rows(&t1.positions(order1));
    let u = pinv_default(&g)?;
    stats.stop_reason = Some(stop);
    stats.n_integrals = o.integral_count() - before;
    stats.elapsed_seconds = start.elapsed().as_secs_f64();
    Ok(model(o, t1, t2, c, r, g, u, stats))
}

/// Builds the working core from cached coefficients in the given row and
/// column order; `keep` decides which positions carry a coefficient.
fn core_from_cache(
    o: &CoeffOracle,
    rows: &[i64],
    cols: &[i64],
    keep: impl Fn(i64, i64) -> bool,
) -> CMatrix {
    CMatrix::from_fn(rows.len(), cols.len(), |i, j| {
        if keep(rows[i], cols[j]) {
            o.cached(crate::coeff_oracle::FreqIndex::new(rows[i], cols[j]))
                .expect("core entry computed before assembly")
        } else {
            num_complex::Complex64::new(0.0, 0.0)
        }
    })
}

/// Shared loop of the core-growing builders. `block_diagonal` drops the
/// bordering blocks between different bands.
fn grow_core(
    o: &mut CoeffOracle,
    params: AdaptiveParams,
    block_diagonal: bool,
    stats: &mut RunStats,
) -> Result<(IndexSet, IndexSet, StopReason)> {
    let (order1, order2) = o.orders();
    let mut t1 = IndexSet::single(0);
    let mut t2 = IndexSet::single(0);
    // insertion order mirrors the bordered block layout of the core
    let mut rows: Vec<i64> = vec![0];
    let mut cols: Vec<i64> = vec![0];
    let g0 = o.core_block(&t1, &t2)?;
    let mut nf_g = g0.fro_norm_sqr();

    let stop = loop {
        let k = stats.iterations + 1;
        if k > params.max_iter {
            break StopReason::MaxIterations;
        }
        let new1 = index_band_clipped(k, params.b1, order1);
        let new2 = index_band_clipped(k, params.b2, order2);
        if new1.is_empty() && new2.is_empty() {
            break StopReason::IndexBounds;
        }
        if !block_diagonal {
            if !new2.is_empty() {
                nf_g += o.core_block(&t1, &new2)?.fro_norm_sqr();
            }
            if !new1.is_empty() {
                nf_g += o.core_block(&new1, &t2)?.fro_norm_sqr();
            }
        }
        if !new1.is_empty() && !new2.is_empty() {
            nf_g += o.core_block(&new1, &new2)?.fro_norm_sqr();
        }
        t1 = t1.union(&new1);
        t2 = t2.union(&new2);
        rows.extend(new1.iter());
        cols.extend(new2.iter());
        stats.iterations = k;

        let (b1, b2) = (params.b1, params.b2);
        let g = core_from_cache(o, &rows, &cols, |a, c| {
            !block_diagonal || band_of(a, b1) == band_of(c, b2)
        });
        let tol = ratio(sigma_min(&g)?, nf_g);
        stats.tol_trace.push(tol);
        if tol <= params.tau {
            break StopReason::Tolerance;
        }
    };
    Ok((t1, t2, stop))
}

/// Grows the core `G` by bordering blocks; stops on
/// `sigma_min(G) / ||G||_F <= tau`, then forms `C` and `R`.
pub fn algorithm2(o: &mut CoeffOracle, params: AdaptiveParams) -> Result<CurModel> {
    params.validate()?;
    let start = Instant::now();
    let before = o.integral_count();
    let mut stats = RunStats::default();
    let (t1, t2, stop) = grow_core(o, params, false, &mut stats)?;

    let g = o.core_block(&t1, &t2)?;
    let u = pinv_default(&g)?;
    let c = o.column_block(&t2)?;
    let r = o.row_block(&t1)?;
    stats.stop_reason = Some(stop);
    stats.n_integrals = o.integral_count() - before;
    stats.elapsed_seconds = start.elapsed().as_secs_f64();
    Ok(model(o, t1, t2, c, r, g, u, stats))
}

/// Core-growing variant with a block-diagonal core: each band contributes
/// one `2 b1 x 2 b2` block, and coefficients pairing different bands are
/// never computed. Those positions are zero in `G`, `C` and `R` alike, so
/// `G` stays the restriction of `C` and of `R`.
pub fn algorithm_c1(o: &mut CoeffOracle, params: AdaptiveParams) -> Result<CurModel> {
    params.validate()?;
    let start = Instant::now();
    let before = o.integral_count();
    let (order1, order2) = o.orders();
    let mut stats = RunStats::default();
    let (t1, t2, stop) = grow_core(o, params, true, &mut stats)?;
    let (b1, b2) = (params.b1, params.b2);

    let all1 = IndexSet::full(order1);
    let all2 = IndexSet::full(order2);
    let mut c = CMatrix::zeros(all1.len(), t2.len());
    for (s, k2) in t2.iter().enumerate() {
        let band = band_of(k2, b2);
        let wanted: Vec<(usize, i64)> = all1
            .iter()
            .enumerate()
            .filter(|&(_, k1)| !t1.contains(k1) || band_of(k1, b1) == band)
            .collect();
        let keys: Vec<i64> = wanted.iter().map(|&(_, k1)| k1).collect();
        let values = o.column_entries(k2, &keys)?;
        for (&(row, _), v) in wanted.iter().zip(values) {
            c[(row, s)] = v;
        }
    }
    let mut r = CMatrix::zeros(t1.len(), all2.len());
    for (s, k1) in t1.iter().enumerate() {
        let band = band_of(k1, b1);
        let wanted: Vec<(usize, i64)> = all2
            .iter()
            .enumerate()
            .filter(|&(_, k2)| !t2.contains(k2) || band_of(k2, b2) == band)
            .collect();
        let keys: Vec<i64> = wanted.iter().map(|&(_, k2)| k2).collect();
        let values = o.row_entries(k1, &keys)?;
        for (&(col, _), v) in wanted.iter().zip(values) {
            r[(s, col)] = v;
        }
    }
    let g = c.select_rows(&t1.positions(order1));
    let u = pinv_default(&g)?;
    stats.stop_reason = Some(stop);
    stats.n_integrals = o.integral_count() - before;
    stats.elapsed_seconds = start.elapsed().as_secs_f64();
    Ok(model(o, t1, t2, c, r, g, u, stats))
}

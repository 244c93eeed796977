//! Fourier coefficients of a sampled bivariate function, computed on demand
//! by tensor-product quadrature and cached.
//!
//! Coefficients use the normalisation
//! `alpha(k1, k2) = (2 pi)^-2 * sum_ij w1_i w2_j f(x1_i, x2_j) exp(-i (k1 x1_i + k2 x2_j))`.
//! Row index `r` of a column block (and of the full matrix) holds frequency
//! `r - I1`; column index `c` of a row block holds frequency `c - I2`.
//!
//! Every distinct `(k1, k2)` pair is computed at most once; the number of
//! cache entries is the number of double integrals spent.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::linalg::CMatrix;
use crate::quadrature::Quad1D;

const NORMALIZATION: f64 = 1.0 / (4.0 * PI * PI);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FreqIndex {
    pub k1: i64,
    pub k2: i64,
}

impl FreqIndex {
    pub fn new(k1: i64, k2: i64) -> Self {
        FreqIndex { k1, k2 }
    }
}

/// Strictly increasing list of distinct frequencies.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct IndexSet(Vec<i64>);

impl IndexSet {
    pub fn new(values: Vec<i64>) -> Result<Self> {
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return invalid(format!("index set must be strictly increasing: {values:?}"));
        }
        Ok(IndexSet(values))
    }

    /// Sorts and deduplicates.
    pub fn from_unsorted(mut values: Vec<i64>) -> Self {
        values.sort_unstable();
        values.dedup();
        IndexSet(values)
    }

    pub fn single(k: i64) -> Self {
        IndexSet(vec![k])
    }

    /// All frequencies in `[-order, order]`.
    pub fn full(order: usize) -> Self {
        let n = order as i64;
        IndexSet((-n..=n).collect())
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, k: i64) -> bool {
        self.0.binary_search(&k).is_ok()
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        IndexSet::from_unsorted(v)
    }

    pub fn is_superset_of(&self, other: &IndexSet) -> bool {
        other.0.iter().all(|&k| self.contains(k))
    }

    /// Zero-based positions in a `2 * order + 1` frequency axis.
    pub fn positions(&self, order: usize) -> Vec<usize> {
        self.0
            .iter()
            .map(|&k| (k + order as i64) as usize)
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = i64> + '_ {
        self.0.iter().copied()
    }

    fn check_bounds(&self, order: usize, axis: usize) -> Result<()> {
        let n = order as i64;
        match self.0.iter().find(|k| k.abs() > n) {
            Some(k) => invalid(format!("frequency {k} outside [-{n}, {n}] on axis {axis}")),
            None => Ok(()),
        }
    }
}

/// Lazily evaluated Fourier coefficient matrix of one function.
pub struct CoeffOracle {
    order1: usize,
    order2: usize,
    rule1: Quad1D,
    rule2: Quad1D,
    /// `f(x1_i, x2_j)` stored row-major, `M1 x M2`.
    fgrid: Vec<f64>,
    cache: HashMap<FreqIndex, Complex64>,
}

/// `w_m * exp(-i k x_m)` for every node of a rule.
fn weighted_phases(rule: &Quad1D, k: i64) -> Vec<Complex64> {
    let kf = k as f64;
    rule.nodes()
        .iter()
        .zip(rule.weights())
        .map(|(&x, &w)| Complex64::cis(-kf * x) * w)
        .collect()
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter()
        .zip(b)
        .fold(Complex64::new(0.0, 0.0), |acc, (x, y)| acc + x * y)
}

impl CoeffOracle {
    /// Samples `f` once on the full tensor grid of `rule1 x rule2`.
    pub fn new(
        f: impl Fn(f64, f64) -> f64 + Sync,
        order1: usize,
        order2: usize,
        rule1: Quad1D,
        rule2: Quad1D,
    ) -> Result<Self> {
        if rule1.is_empty() || rule2.is_empty() {
            return invalid("quadrature rules must be nonempty");
        }
        let m2 = rule2.len();
        let x2 = rule2.nodes();
        let fgrid: Vec<f64> = rule1
            .nodes()
            .par_iter()
            .flat_map_iter(|&a| x2.iter().map(move |&b| (a, b)))
            .map(|(a, b)| f(a, b))
            .collect();
        if let Some(pos) = fgrid.iter().position(|v| !v.is_finite()) {
            return Err(Error::NumericDomain {
                x1: rule1.nodes()[pos / m2],
                x2: x2[pos % m2],
                value: fgrid[pos],
            });
        }
        Ok(CoeffOracle {
            order1,
            order2,
            rule1,
            rule2,
            fgrid,
            cache: HashMap::new(),
        })
    }

    pub fn orders(&self) -> (usize, usize) {
        (self.order1, self.order2)
    }

    pub fn rules(&self) -> (&Quad1D, &Quad1D) {
        (&self.rule1, &self.rule2)
    }

    /// Sampled value `f(x1_i, x2_j)`.
    pub fn sample(&self, i: usize, j: usize) -> f64 {
        self.fgrid[i * self.rule2.len() + j]
    }

    /// Number of distinct coefficients computed so far.
    pub fn integral_count(&self) -> usize {
        self.cache.len()
    }

    /// Cached value, without computing anything.
    pub fn cached(&self, k: FreqIndex) -> Option<Complex64> {
        self.cache.get(&k).copied()
    }

    fn check_k1(&self, k1: i64) -> Result<()> {
        if k1.unsigned_abs() as usize > self.order1 {
            return invalid(format!("k1 = {k1} outside [-{0}, {0}]", self.order1));
        }
        Ok(())
    }

    fn check_k2(&self, k2: i64) -> Result<()> {
        if k2.unsigned_abs() as usize > self.order2 {
            return invalid(format!("k2 = {k2} outside [-{0}, {0}]", self.order2));
        }
        Ok(())
    }

    /// `h_i = sum_j w2_j f(x1_i, x2_j) exp(-i k2 x2_j)` for every `i`.
    fn inner_over_x2(&self, k2: i64) -> Vec<Complex64> {
        let p2 = weighted_phases(&self.rule2, k2);
        self.fgrid
            .par_chunks(self.rule2.len())
            .map(|row| {
                row.iter()
                    .zip(&p2)
                    .fold(Complex64::new(0.0, 0.0), |acc, (&f, p)| acc + p * f)
            })
            .collect()
    }

    /// `g_j = sum_i w1_i f(x1_i, x2_j) exp(-i k1 x1_i)` for every `j`.
    fn inner_over_x1(&self, k1: i64) -> Vec<Complex64> {
        let p1 = weighted_phases(&self.rule1, k1);
        let m2 = self.rule2.len();
        const CHUNK: usize = 256;
        let mut g = vec![Complex64::new(0.0, 0.0); m2];
        g.par_chunks_mut(CHUNK).enumerate().for_each(|(c, out)| {
            let j0 = c * CHUNK;
            for (i, p) in p1.iter().enumerate() {
                let row = &self.fgrid[i * m2 + j0..i * m2 + j0 + out.len()];
                for (acc, &f) in out.iter_mut().zip(row) {
                    *acc += p * f;
                }
            }
        });
        g
    }

    /// Coefficients `(k1, k2)` for the listed `k1`, sharing one pass over the
    /// grid for every cache miss.
    pub(crate) fn column_entries(&mut self, k2: i64, k1s: &[i64]) -> Result<Vec<Complex64>> {
        self.check_k2(k2)?;
        for &k1 in k1s {
            self.check_k1(k1)?;
        }
        let mut misses: Vec<i64> = k1s
            .iter()
            .copied()
            .filter(|&k1| !self.cache.contains_key(&FreqIndex::new(k1, k2)))
            .collect();
        misses.sort_unstable();
        misses.dedup();
        if !misses.is_empty() {
            let h = self.inner_over_x2(k2);
            let rule1 = &self.rule1;
            let values: Vec<Complex64> = misses
                .par_iter()
                .map(|&k1| dot(&weighted_phases(rule1, k1), &h) * NORMALIZATION)
                .collect();
            for (k1, v) in misses.into_iter().zip(values) {
                self.cache.insert(FreqIndex::new(k1, k2), v);
            }
        }
        Ok(k1s
            .iter()
            .map(|&k1| self.cache[&FreqIndex::new(k1, k2)])
            .collect())
    }

    /// Coefficients `(k1, k2)` for the listed `k2`.
    pub(crate) fn row_entries(&mut self, k1: i64, k2s: &[i64]) -> Result<Vec<Complex64>> {
        self.check_k1(k1)?;
        for &k2 in k2s {
            self.check_k2(k2)?;
        }
        let mut misses: Vec<i64> = k2s
            .iter()
            .copied()
            .filter(|&k2| !self.cache.contains_key(&FreqIndex::new(k1, k2)))
            .collect();
        misses.sort_unstable();
        misses.dedup();
        if !misses.is_empty() {
            let g = self.inner_over_x1(k1);
            let rule2 = &self.rule2;
            let values: Vec<Complex64> = misses
                .par_iter()
                .map(|&k2| dot(&weighted_phases(rule2, k2), &g) * NORMALIZATION)
                .collect();
            for (k2, v) in misses.into_iter().zip(values) {
                self.cache.insert(FreqIndex::new(k1, k2), v);
            }
        }
        Ok(k2s
            .iter()
            .map(|&k2| self.cache[&FreqIndex::new(k1, k2)])
            .collect())
    }

    pub fn coeff(&mut self, k: FreqIndex) -> Result<Complex64> {
        Ok(self.column_entries(k.k2, &[k.k1])?[0])
    }

    /// `(2 I1 + 1) x |t2|` block of whole columns.
    pub fn column_block(&mut self, t2: &IndexSet) -> Result<CMatrix> {
        t2.check_bounds(self.order2, 2)?;
        let rows: Vec<i64> = IndexSet::full(self.order1).0;
        let mut out = CMatrix::zeros(rows.len(), t2.len());
        for (s, k2) in t2.iter().enumerate() {
            for (r, v) in self.column_entries(k2, &rows)?.into_iter().enumerate() {
                out[(r, s)] = v;
            }
        }
        Ok(out)
    }

    /// `|t1| x (2 I2 + 1)` block of whole rows.
    pub fn row_block(&mut self, t1: &IndexSet) -> Result<CMatrix> {
        t1.check_bounds(self.order1, 1)?;
        let cols: Vec<i64> = IndexSet::full(self.order2).0;
        let mut out = CMatrix::zeros(t1.len(), cols.len());
        for (s, k1) in t1.iter().enumerate() {
            for (c, v) in self.row_entries(k1, &cols)?.into_iter().enumerate() {
                out[(s, c)] = v;
            }
        }
        Ok(out)
    }

    /// `|t1| x |t2|` intersection block; rows follow `t1`, columns `t2`.
    pub fn core_block(&mut self, t1: &IndexSet, t2: &IndexSet) -> Result<CMatrix> {
        t1.check_bounds(self.order1, 1)?;
        t2.check_bounds(self.order2, 2)?;
        let mut out = CMatrix::zeros(t1.len(), t2.len());
        for (s, k2) in t2.iter().enumerate() {
            for (r, v) in self
                .column_entries(k2, t1.as_slice())?
                .into_iter()
                .enumerate()
            {
                out[(r, s)] = v;
            }
        }
        Ok(out)
    }

    /// The whole `(2 I1 + 1) x (2 I2 + 1)` coefficient matrix.
    pub fn full_matrix(&mut self) -> Result<CMatrix> {
        let all = IndexSet::full(self.order2);
        self.column_block(&all)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{make_rule, QuadKind};
    use crate::testfns::TestFunction;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn nc(m: usize) -> Quad1D {
        make_rule(QuadKind::NC, m).unwrap()
    }

    fn oracle(f: impl Fn(f64, f64) -> f64 + Sync, order: usize, m: usize) -> CoeffOracle {
        CoeffOracle::new(f, order, order, nc(m), nc(m)).unwrap()
    }

    fn trig(x1: f64, x2: f64) -> f64 {
        (3.0 * x1).cos() * (2.0 * x2).sin()
    }

    #[test]
    fn construction() {
        let o = oracle(|_, _| 1.0, 2, 8);
        assert_eq!(o.integral_count(), 0);
        assert!(o.fgrid.iter().all(|&v| v == 1.0));

        let gl = make_rule(QuadKind::GL, 64).unwrap();
        let o = CoeffOracle::new(
            |a, b| TestFunction::F2.eval(a, b),
            10,
            10,
            gl.clone(),
            gl.clone(),
        )
        .unwrap();
        let (i, j) = (31, 32);
        assert_eq!(
            o.sample(i, j),
            TestFunction::F2.eval(gl.nodes()[i], gl.nodes()[j])
        );
    }

    #[test]
    fn nan_sample_is_reported() {
        let err = CoeffOracle::new(
            |a, b| if a == 0.0 && b > 1.0 { f64::NAN } else { 0.0 },
            2,
            2,
            nc(4),
            nc(4),
        )
        .err()
        .unwrap();
        assert!(matches!(err, Error::NumericDomain { x1, x2, .. } if x1 == 0.0 && x2 == PI / 2.0));
    }

    #[test]
    fn constant_function_coefficients() {
        let mut o = oracle(|_, _| 1.0, 3, 16);
        assert!((o.coeff(FreqIndex::new(0, 0)).unwrap() - 1.0).norm() < 1e-12);
        assert!(o.coeff(FreqIndex::new(1, 0)).unwrap().norm() < 1e-12);
    }

    #[test]
    fn analytic_trig_coefficients() {
        let mut o = oracle(trig, 4, 16);
        let a = o.coeff(FreqIndex::new(3, 2)).unwrap();
        let b = o.coeff(FreqIndex::new(-3, -2)).unwrap();
        assert!((a - c(0.0, -0.25)).norm() < 1e-12);
        assert!((b - c(0.0, 0.25)).norm() < 1e-12);
        assert!((b - a.conj()).norm() < 1e-12);
    }

    #[test]
    fn out_of_bounds_rejected() {
        let mut o = oracle(trig, 2, 8);
        assert!(matches!(
            o.coeff(FreqIndex::new(3, 0)),
            Err(Error::InvalidArgument(_))
        ));
        assert!(o.column_block(&IndexSet::single(-3)).is_err());
        assert!(o.row_block(&IndexSet::single(5)).is_err());
        assert_eq!(o.integral_count(), 0);
    }

    #[test]
    fn index_set_validation() {
        assert!(IndexSet::new(vec![1, 1]).is_err());
        assert!(IndexSet::new(vec![2, 1]).is_err());
        assert_eq!(IndexSet::from_unsorted(vec![2, -1, 2]).as_slice(), &[-1, 2]);
        let u = IndexSet::new(vec![-1, 0])
            .unwrap()
            .union(&IndexSet::single(3));
        assert_eq!(u.as_slice(), &[-1, 0, 3]);
        assert_eq!(u.positions(3), vec![2, 3, 6]);
    }

    #[test]
    fn column_block_examples() {
        let order = 4;
        let mut o = oracle(|_, _| 1.0, order, 16);
        let col = o.column_block(&IndexSet::single(0)).unwrap();
        assert_eq!(col.shape(), (2 * order + 1, 1));
        for r in 0..col.nrows() {
            let expect = if r == order { 1.0 } else { 0.0 };
            assert!((col[(r, 0)] - expect).norm() < 1e-12);
        }

        let mut o = oracle(trig, order, 16);
        let col = o.column_block(&IndexSet::single(2)).unwrap();
        for r in 0..col.nrows() {
            let expect = if r == order + 3 || r == order - 3 {
                c(0.0, -0.25)
            } else {
                c(0.0, 0.0)
            };
            assert!((col[(r, 0)] - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn row_block_examples() {
        let order = 4;
        let mut o = oracle(|_, _| 1.0, order, 16);
        let row = o.row_block(&IndexSet::single(0)).unwrap();
        assert_eq!(row.shape(), (1, 2 * order + 1));
        assert!((row[(0, order)] - 1.0).norm() < 1e-12);

        let mut o = oracle(trig, order, 16);
        let row = o.row_block(&IndexSet::single(3)).unwrap();
        for col in 0..row.ncols() {
            let expect = if col == order + 2 {
                c(0.0, -0.25)
            } else if col == order - 2 {
                c(0.0, 0.25)
            } else {
                c(0.0, 0.0)
            };
            assert!((row[(0, col)] - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn blocks_agree_with_scalar_oracle() {
        let f = |a: f64, b: f64| TestFunction::F2.eval(a, b);
        let order = 5;
        // scalar coefficients from a separate oracle
        let mut scalar = oracle(f, order, 40);
        let mut blocks = oracle(f, order, 40);
        let col = blocks
            .column_block(&IndexSet::new(vec![0, 1]).unwrap())
            .unwrap();
        let row = blocks.row_block(&IndexSet::single(1)).unwrap();
        let n = order as i64;
        for k1 in -n..=n {
            let v = scalar.coeff(FreqIndex::new(k1, 0)).unwrap();
            assert_eq!(col[((k1 + n) as usize, 0)], v);
        }
        for k2 in -n..=n {
            let v = scalar.coeff(FreqIndex::new(1, k2)).unwrap();
            // row path sums over the other axis first
            assert!((row[(0, (k2 + n) as usize)] - v).norm() < 1e-13);
        }
    }

    #[test]
    fn core_block_examples() {
        let mut o = oracle(|_, _| 1.0, 2, 8);
        let g = o
            .core_block(&IndexSet::single(0), &IndexSet::single(0))
            .unwrap();
        assert!((g[(0, 0)] - 1.0).norm() < 1e-12);

        let mut o = oracle(|a, b| a.cos() * b.cos(), 3, 16);
        let t = IndexSet::new(vec![-1, 0, 1]).unwrap();
        let g = o.core_block(&t, &t).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i != 1 && j != 1 { 0.25 } else { 0.0 };
                assert!((g[(i, j)] - expect).norm() < 1e-12);
            }
        }

        let mut o = oracle(|a, b| TestFunction::F3.eval(a, b), 6, 32);
        let t1 = IndexSet::new(vec![-4, 0, 2, 5]).unwrap();
        let t2 = IndexSet::new(vec![-1, 3]).unwrap();
        let cb = o.column_block(&t2).unwrap();
        let g = o.core_block(&t1, &t2).unwrap();
        let rows = t1.positions(6);
        assert_eq!(g, cb.select_rows(&rows));
    }

    #[test]
    fn full_matrix_examples() {
        let mut o = oracle(|_, _| 1.0, 1, 8);
        let a = o.full_matrix().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if (i, j) == (1, 1) { 1.0 } else { 0.0 };
                assert!((a[(i, j)] - expect).norm() < 1e-12);
            }
        }
        assert_eq!(o.integral_count(), 9);

        let mut o = oracle(|a, b| a.cos() * b.cos(), 1, 16);
        let a = o.full_matrix().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i != 1 && j != 1 { 0.25 } else { 0.0 };
                assert!((a[(i, j)] - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn separable_function_has_rank_one() {
        let f = |a: f64, b: f64| (a.sin() + 0.3 * (2.0 * a).cos()) * (1.0 + (3.0 * b).sin());
        let mut o = oracle(f, 4, 32);
        let s = crate::linalg::singular_values(&o.full_matrix().unwrap()).unwrap();
        assert!(s[1] <= 1e-10 * s[0]);
    }

    #[test]
    fn integral_counting() {
        let order = 3;
        let mut o = oracle(trig, order, 16);
        assert_eq!(o.integral_count(), 0);
        o.coeff(FreqIndex::new(0, 0)).unwrap();
        o.coeff(FreqIndex::new(0, 0)).unwrap();
        assert_eq!(o.integral_count(), 1);

        let mut o = oracle(trig, order, 16);
        o.column_block(&IndexSet::single(0)).unwrap();
        o.row_block(&IndexSet::single(0)).unwrap();
        assert_eq!(o.integral_count(), 2 * (2 * order + 1) - 1);
    }

    #[test]
    fn random_request_sequences_count_unique_keys() {
        let mut rng = StdRng::seed_from_u64(23);
        let order = 6usize;
        let n = order as i64;
        let mut o = oracle(|a, b| TestFunction::F2.eval(a, b), order, 24);
        let mut seen = std::collections::HashSet::new();
        for _ in 0..30 {
            match rng.random_range(0..4) {
                0 => {
                    let k = FreqIndex::new(rng.random_range(-n..=n), rng.random_range(-n..=n));
                    o.coeff(k).unwrap();
                    seen.insert(k);
                }
                1 => {
                    let k2 = rng.random_range(-n..=n);
                    o.column_block(&IndexSet::single(k2)).unwrap();
                    seen.extend((-n..=n).map(|k1| FreqIndex::new(k1, k2)));
                }
                2 => {
                    let k1 = rng.random_range(-n..=n);
                    o.row_block(&IndexSet::single(k1)).unwrap();
                    seen.extend((-n..=n).map(|k2| FreqIndex::new(k1, k2)));
                }
                _ => {
                    let t1 = IndexSet::from_unsorted(vec![
                        rng.random_range(-n..=n),
                        rng.random_range(-n..=n),
                    ]);
                    let t2 = IndexSet::from_unsorted(vec![rng.random_range(-n..=n)]);
                    o.core_block(&t1, &t2).unwrap();
                    for a in t1.iter() {
                        for b in t2.iter() {
                            seen.insert(FreqIndex::new(a, b));
                        }
                    }
                }
            }
            assert_eq!(o.integral_count(), seen.len());
        }
    }

    #[test]
    fn conjugate_symmetry_for_real_function() {
        let mut o = oracle(|a, b| TestFunction::F3.eval(a, b), 5, 48);
        let a = o.full_matrix().unwrap();
        let m = a.nrows();
        for i in 0..m {
            for j in 0..m {
                assert!((a[(i, j)] - a[(m - 1 - i, m - 1 - j)].conj()).norm() < 1e-12);
            }
        }
    }
}

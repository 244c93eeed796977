//! Point evaluation of truncated series and CUR approximants, error grids.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::cur::CurModel;
use crate::error::{invalid, Result};
use crate::linalg::CMatrix;

/// Cartesian grid; values over it are stored with `x1` as the row index.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalGrid {
    x1s: Vec<f64>,
    x2s: Vec<f64>,
}

impl EvalGrid {
    pub fn new(x1s: Vec<f64>, x2s: Vec<f64>) -> Result<Self> {
        let inside = |x: &f64| x.is_finite() && x.abs() <= PI;
        if !x1s.iter().all(inside) || !x2s.iter().all(inside) {
            return invalid("grid points must lie in [-pi, pi]");
        }
        Ok(EvalGrid { x1s, x2s })
    }

    /// `n` equally spaced points from `-pi` to `pi` inclusive in each direction.
    pub fn uniform(n: usize) -> Result<Self> {
        if n < 2 {
            return invalid(format!("grid needs at least 2 points per side, got {n}"));
        }
        let h = 2.0 * PI / (n - 1) as f64;
        let xs: Vec<f64> = (0..n)
            .map(|i| if i == n - 1 { PI } else { -PI + h * i as f64 })
            .collect();
        Ok(EvalGrid {
            x1s: xs.clone(),
            x2s: xs,
        })
    }

    pub fn x1s(&self) -> &[f64] {
        &self.x1s
    }

    pub fn x2s(&self) -> &[f64] {
        &self.x2s
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.x1s.len(), self.x2s.len())
    }

    pub fn len(&self) -> usize {
        self.x1s.len() * self.x2s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `V[p, i] = exp(i (i - order) x_p)`.
pub fn fourier_basis(order: usize, xs: &[f64]) -> CMatrix {
    CMatrix::from_fn(xs.len(), 2 * order + 1, |p, i| {
        Complex64::cis((i as f64 - order as f64) * xs[p])
    })
}

fn check_order(n: usize, order: usize, what: &str) -> Result<()> {
    if n != 2 * order + 1 {
        return invalid(format!(
            "{what} has {n} entries, expected {}",
            2 * order + 1
        ));
    }
    Ok(())
}

/// Truncated series with coefficient matrix `a` on every grid point.
pub fn eval_truncated(
    a: &CMatrix,
    order1: usize,
    order2: usize,
    grid: &EvalGrid,
) -> Result<CMatrix> {
    check_order(a.nrows(), order1, "coefficient matrix rows")?;
    check_order(a.ncols(), order2, "coefficient matrix columns")?;
    let v1 = fourier_basis(order1, grid.x1s());
    let v2 = fourier_basis(order2, grid.x2s());
    Ok(&(&v1 * a) * &v2.transpose())
}

/// CUR approximant on every grid point, never forming `C U R`.
pub fn eval_cur(m: &CurModel, grid: &EvalGrid) -> Result<CMatrix> {
    check_order(m.c.nrows(), m.order1, "C")?;
    check_order(m.r.ncols(), m.order2, "R")?;
    let left = fourier_basis(m.order1, grid.x1s()).matmul(&m.c)?;
    let right =
        m.r.matmul(&fourier_basis(m.order2, grid.x2s()).transpose())?;
    left.matmul(&m.u)?.matmul(&right)
}

/// `||A - C U R||_F`, the L2 distance of the two series under the
/// `(2 pi)^-2` normalised inner product.
pub fn l2_gap(a: &CMatrix, m: &CurModel) -> Result<f64> {
    let cur = m.product();
    if cur.shape() != a.shape() {
        return invalid(format!(
            "shapes {:?} and {:?} differ",
            a.shape(),
            cur.shape()
        ));
    }
    Ok((a - &cur).fro_norm())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    pub grid: EvalGrid,
    /// Row-major over the grid, like every field below.
    pub f_vals: Vec<f64>,
    pub approx_real: Vec<f64>,
    pub approx_imag: Vec<f64>,
    pub err: Vec<f64>,
    pub max_err: f64,
    pub max_imag_residue: f64,
    pub l2_gap: Option<f64>,
    pub elapsed_seconds: Option<f64>,
    pub n_integrals: Option<usize>,
}

/// Compares `f` with the real part of an approximant on the uniform
/// `grid_n x grid_n` grid.
pub fn error_grid(
    f: impl Fn(f64, f64) -> f64 + Sync,
    g_eval: impl FnOnce(&EvalGrid) -> Result<CMatrix>,
    grid_n: usize,
) -> Result<ErrorReport> {
    let grid = EvalGrid::uniform(grid_n)?;
    let g = g_eval(&grid)?;
    if g.shape() != grid.shape() {
        return invalid(format!(
            "approximant returned {:?} values for a {:?} grid",
            g.shape(),
            grid.shape()
        ));
    }
    let (n1, n2) = grid.shape();
    let f_vals: Vec<f64> = (0..n1 * n2)
        .into_par_iter()
        .map(|p| f(grid.x1s[p / n2], grid.x2s[p % n2]))
        .collect();
    let mut approx_real = Vec::with_capacity(n1 * n2);
    let mut approx_imag = Vec::with_capacity(n1 * n2);
    for i in 0..n1 {
        for j in 0..n2 {
            approx_real.push(g[(i, j)].re);
            approx_imag.push(g[(i, j)].im);
        }
    }
    let err: Vec<f64> = f_vals
        .iter()
        .zip(&approx_real)
        .map(|(a, b)| (a - b).abs())
        .collect();
    let max_err = err.iter().fold(0f64, |m, &e| m.max(e));
    let max_imag_residue = approx_imag.iter().fold(0f64, |m, &e| m.max(e.abs()));
    Ok(ErrorReport {
        grid,
        f_vals,
        approx_real,
        approx_imag,
        err,
        max_err,
        max_imag_residue,
        l2_gap: None,
        elapsed_seconds: None,
        n_integrals: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff_oracle::{CoeffOracle, IndexSet};
    use crate::cur::{cur_fixed, FixedMode, RunStats};
    use crate::linalg::svd;
    use crate::quadrature::{make_rule, QuadKind};
    use crate::testfns::TestFunction;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_matrix(rng: &mut StdRng, r: usize, c: usize) -> CMatrix {
        CMatrix::from_fn(r, c, |_, _| {
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    fn naive(a: &CMatrix, o1: usize, o2: usize, x1: f64, x2: f64) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                let k1 = i as f64 - o1 as f64;
                let k2 = j as f64 - o2 as f64;
                s += a[(i, j)] * Complex64::cis(k1 * x1 + k2 * x2);
            }
        }
        s
    }

    fn wrap(a: &CMatrix, order: usize, c: CMatrix, u: CMatrix, r: CMatrix) -> CurModel {
        let _ = a;
        CurModel {
            order1: order,
            order2: order,
            t1: IndexSet::default(),
            t2: IndexSet::default(),
            g: CMatrix::zeros(u.ncols(), u.nrows()),
            c,
            r,
            u,
            stats: RunStats::default(),
        }
    }

    #[test]
    fn uniform_grid() {
        let g = EvalGrid::uniform(60).unwrap();
        assert_eq!(g.len(), 3600);
        assert_eq!(g.x1s()[0], -PI);
        assert_eq!(g.x1s()[59], PI);
        assert!(EvalGrid::uniform(1).is_err());
        assert!(EvalGrid::new(vec![4.0], vec![0.0]).is_err());
    }

    #[test]
    fn truncated_examples() {
        let grid = EvalGrid::uniform(7).unwrap();
        let mut a = CMatrix::zeros(3, 3);
        a[(1, 1)] = Complex64::new(1.0, 0.0);
        let v = eval_truncated(&a, 1, 1, &grid).unwrap();
        assert!(v.iter().all(|z| (z - 1.0).norm() < 1e-15));

        let mut a = CMatrix::zeros(3, 3);
        a[(0, 1)] = Complex64::new(0.5, 0.0);
        a[(2, 1)] = Complex64::new(0.5, 0.0);
        let v = eval_truncated(&a, 1, 1, &grid).unwrap();
        for (i, x1) in grid.x1s().iter().enumerate() {
            for j in 0..7 {
                assert!((v[(i, j)] - x1.cos()).norm() <= 1e-12);
            }
        }
        assert!(eval_truncated(&a, 2, 1, &grid).is_err());
    }

    #[test]
    fn truncated_matches_double_sum() {
        let mut rng = StdRng::seed_from_u64(5);
        let a = random_matrix(&mut rng, 5, 5);
        let x1: Vec<f64> = (0..10).map(|_| rng.random_range(-PI..PI)).collect();
        let x2: Vec<f64> = (0..10).map(|_| rng.random_range(-PI..PI)).collect();
        let grid = EvalGrid::new(x1.clone(), x2.clone()).unwrap();
        let v = eval_truncated(&a, 2, 2, &grid).unwrap();
        for p in 0..10 {
            assert!((v[(p, p)] - naive(&a, 2, 2, x1[p], x2[p])).norm() <= 1e-12);
        }
    }

    #[test]
    fn factored_matches_materialized() {
        let mut rng = StdRng::seed_from_u64(9);
        let order = 4;
        let c = random_matrix(&mut rng, 9, 3);
        let u = random_matrix(&mut rng, 3, 2);
        let r = random_matrix(&mut rng, 2, 9);
        let m = wrap(&c, order, c.clone(), u, r);
        let x1: Vec<f64> = (0..100).map(|_| rng.random_range(-PI..PI)).collect();
        let x2: Vec<f64> = (0..100).map(|_| rng.random_range(-PI..PI)).collect();
        let grid = EvalGrid::new(x1, x2).unwrap();
        let fact = eval_cur(&m, &grid).unwrap();
        let full = eval_truncated(&m.product(), order, order, &grid).unwrap();
        assert!((&fact - &full).max_norm() <= 1e-10);
    }

    #[test]
    fn constant_model_evaluates_to_one() {
        let r = make_rule(QuadKind::NC, 8).unwrap();
        let mut o = CoeffOracle::new(|_, _| 1.0, 3, 3, r.clone(), r).unwrap();
        let t = IndexSet::single(0);
        let m = cur_fixed(&mut o, &t, &t, FixedMode::Cross).unwrap();
        let v = eval_cur(&m, &EvalGrid::uniform(9).unwrap()).unwrap();
        assert!(v.iter().all(|z| (z - 1.0).norm() < 1e-12));
        let a = o.full_matrix().unwrap();
        assert!(l2_gap(&a, &m).unwrap() <= 1e-12);
    }

    #[test]
    fn gap_of_rank_truncated_svd() {
        let mut rng = StdRng::seed_from_u64(11);
        let a = random_matrix(&mut rng, 7, 7);
        let d = svd(&a).unwrap();
        for rank in 1..7 {
            let c = d.u.select_columns(&(0..rank).collect::<Vec<_>>());
            let s: Vec<f64> = d.s[..rank].to_vec();
            let u = CMatrix::from_real_diagonal(&s);
            let r = d.v.select_columns(&(0..rank).collect::<Vec<_>>()).adjoint();
            let m = wrap(&a, 3, c, u, r);
            let expected: f64 = d.s[rank..].iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((l2_gap(&a, &m).unwrap() - expected).abs() <= 1e-10);
        }
    }

    #[test]
    fn gap_matches_quadrature() {
        let mut rng = StdRng::seed_from_u64(21);
        let order = 3;
        let a = random_matrix(&mut rng, 7, 7);
        let m = wrap(
            &a,
            order,
            random_matrix(&mut rng, 7, 2),
            random_matrix(&mut rng, 2, 2),
            random_matrix(&mut rng, 2, 7),
        );
        let rule = make_rule(QuadKind::NC, 32).unwrap();
        let grid = EvalGrid::new(rule.nodes().to_vec(), rule.nodes().to_vec()).unwrap();
        let diff = eval_truncated(&(&a - &m.product()), order, order, &grid).unwrap();
        let w = rule.weights();
        let mut q = 0.0;
        for i in 0..32 {
            for j in 0..32 {
                q += w[i] * w[j] * diff[(i, j)].norm_sqr();
            }
        }
        q /= 4.0 * PI * PI;
        let gap = l2_gap(&a, &m).unwrap();
        assert!((gap * gap - q).abs() <= 1e-10 * q);
    }

    #[test]
    fn self_comparison_is_exact() {
        let f = |a: f64, b: f64| TestFunction::F2.eval(a, b);
        let rep = error_grid(
            f,
            |g| {
                Ok(CMatrix::from_fn(g.shape().0, g.shape().1, |i, j| {
                    Complex64::new(f(g.x1s()[i], g.x2s()[j]), 0.0)
                }))
            },
            60,
        )
        .unwrap();
        assert_eq!(rep.err.len(), 3600);
        assert_eq!(rep.max_err, 0.0);
        assert!(rep.err.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn longer_truncation_is_closer() {
        let f = |a: f64, b: f64| TestFunction::F2.eval(a, b);
        let r = make_rule(QuadKind::GL, 256).unwrap();
        let mut errs = Vec::new();
        for order in [20, 40] {
            let mut o = CoeffOracle::new(f, order, order, r.clone(), r.clone()).unwrap();
            let a = o.full_matrix().unwrap();
            let rep = error_grid(f, |g| eval_truncated(&a, order, order, g), 60).unwrap();
            assert!(rep.max_imag_residue <= 1e-10);
            errs.push(rep.max_err);
        }
        assert!(errs[1] <= errs[0]);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn factored_evaluation_equals_materialized(
                seed in any::<u64>(),
                order in 0usize..5,
                rank in 1usize..4,
                n in 2usize..9,
            ) {
                let mut rng = StdRng::seed_from_u64(seed);
                let k = 2 * order + 1;
                let m = wrap(
                    &CMatrix::zeros(0, 0),
                    order,
                    random_matrix(&mut rng, k, rank),
                    random_matrix(&mut rng, rank, rank + 1),
                    random_matrix(&mut rng, rank + 1, k),
                );
                let grid = EvalGrid::uniform(n).unwrap();
                let fact = eval_cur(&m, &grid).unwrap();
                let full = eval_truncated(&m.product(), order, order, &grid).unwrap();
                prop_assert!((&fact - &full).max_norm() <= 1e-10);
            }

            #[test]
            fn real_coefficients_symmetry_gives_real_values(seed in any::<u64>(), order in 0usize..5) {
                let mut rng = StdRng::seed_from_u64(seed);
                let k = 2 * order + 1;
                let half = random_matrix(&mut rng, k, k);
                // alpha(-k) = conj(alpha(k))
                let a = CMatrix::from_fn(k, k, |i, j| (half[(i, j)] + half[(k - 1 - i, k - 1 - j)].conj()) * 0.5);
                let v = eval_truncated(&a, order, order, &EvalGrid::uniform(11).unwrap()).unwrap();
                prop_assert!(v.iter().all(|z| z.im.abs() <= 1e-12));
            }
        }
    }
}
